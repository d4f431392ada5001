//! Compactified free boson on a circle of radius `R`: D0- and D1-branes,
//! bi-branes `B_{(x, α)}` and their fusion.
//!
//! Positions are stored as exact fractions of the period `2πR` and Wilson
//! lines as fractions of `1/(2πR)`, both reduced to `[0, 1)`.

use std::f64::consts::PI;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Connection, FormOracle, TargetSpace};
use crate::gerbedata::{BiBraneRecord, DBraneRecord, WorldVolume};

pub type Frac = Ratio<i64>;

fn reduce(r: Frac) -> Frac {
    r - r.floor()
}

/// Closest fraction to `v` found by continued fractions.
pub fn frac_from_f64(v: f64) -> Result<Frac> {
    if !v.is_finite() {
        return Err(Error::NonFinite("free boson parameter".into()));
    }
    Frac::approximate_float(v)
        .ok_or_else(|| Error::InvalidInput(format!("cannot represent {v} as a fraction")))
}

fn to_f64(r: Frac) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn same_radius(a: f64, b: f64) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::RadiusMismatch(a, b))
    }
}

fn check_radius(r: f64) -> Result<f64> {
    if r.is_finite() && r > 0.0 {
        Ok(r)
    } else {
        Err(Error::InvalidInput(format!(
            "radius must be positive, got {r}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct D0Brane {
    pub radius: f64,
    /// Position as a fraction of `2πR`.
    pub x: Frac,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct D1Brane {
    pub radius: f64,
    /// Wilson line as a fraction of `1/(2πR)`.
    pub alpha: Frac,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeBosonBiBrane {
    pub radius: f64,
    pub x: Frac,
    pub alpha: Frac,
}

impl D0Brane {
    pub fn new(radius: f64, x: Frac) -> Result<Self> {
        Ok(D0Brane {
            radius: check_radius(radius)?,
            x: reduce(x),
        })
    }

    pub fn position(&self) -> f64 {
        2.0 * PI * self.radius * to_f64(self.x)
    }

    pub fn record(&self) -> DBraneRecord {
        let t = TargetSpace::Circle {
            radius: self.radius,
        };
        DBraneRecord {
            world_volume: WorldVolume::Point {
                point: vec![self.position()],
            },
            omega: FormOracle::zero(2, t.clone()),
            module: Connection::Abelian(FormOracle::zero(1, t)),
        }
    }
}

impl D1Brane {
    pub fn new(radius: f64, alpha: Frac) -> Result<Self> {
        Ok(D1Brane {
            radius: check_radius(radius)?,
            alpha: reduce(alpha),
        })
    }

    pub fn wilson_line(&self) -> f64 {
        to_f64(self.alpha) / (2.0 * PI * self.radius)
    }

    /// Full circle with the flat connection `α dφ`.
    pub fn record(&self) -> DBraneRecord {
        let t = TargetSpace::Circle {
            radius: self.radius,
        };
        let a = self.wilson_line();
        DBraneRecord {
            world_volume: WorldVolume::Full,
            omega: FormOracle::zero(2, t.clone()),
            module: Connection::Abelian(FormOracle::new(1, format!("{a}*dphi"), t, move |_, v| {
                a * v[0][0]
            })),
        }
    }
}

impl FreeBosonBiBrane {
    pub fn new(radius: f64, x: Frac, alpha: Frac) -> Result<Self> {
        Ok(FreeBosonBiBrane {
            radius: check_radius(radius)?,
            x: reduce(x),
            alpha: reduce(alpha),
        })
    }

    pub fn identity(radius: f64) -> Result<Self> {
        Self::new(radius, Frac::from_integer(0), Frac::from_integer(0))
    }

    pub fn inverse(&self) -> Self {
        FreeBosonBiBrane {
            radius: self.radius,
            x: reduce(-self.x),
            alpha: reduce(-self.alpha),
        }
    }

    pub fn shift(&self) -> f64 {
        2.0 * PI * self.radius * to_f64(self.x)
    }

    pub fn wilson_line(&self) -> f64 {
        to_f64(self.alpha) / (2.0 * PI * self.radius)
    }

    pub fn target(&self) -> TargetSpace {
        let c = TargetSpace::Circle {
            radius: self.radius,
        };
        TargetSpace::product(c.clone(), c)
    }

    /// World volume `{(y + x, y)}` with the flat bundle `α dφ` and `ϖ = 0`.
    pub fn record(&self) -> BiBraneRecord {
        let t = self.target();
        let a = self.wilson_line();
        BiBraneRecord {
            world_volume: WorldVolume::ShiftedDiagonal {
                shift: self.shift(),
            },
            varpi: FormOracle::zero(2, t.clone()),
            bundle: Connection::Abelian(FormOracle::new(1, format!("{a}*dphi"), t, move |_, v| {
                a * v[0][0]
            })),
        }
    }

    /// Whether `(a, b)`, given as fractions of the period, lies on the
    /// world volume.
    pub fn contains(&self, a: Frac, b: Frac) -> bool {
        reduce(a - b - self.x) == Frac::from_integer(0)
    }
}

/// Points `a` with `(a, b)` on the world volume of `bb`, for a given `b`.
/// The world volume is the graph of a shift, so the fibre is one point.
fn fibre_over_second(bb: &FreeBosonBiBrane, b: Frac) -> Vec<Frac> {
    vec![reduce(b + bb.x)]
}

/// `B_{(x, α)} ⋆ D⁽⁰⁾_y`: the image `p₁(𝓑 ∩ p₂⁻¹{y})` of the brane's point.
pub fn fuse_defect_d0(bb: &FreeBosonBiBrane, d: &D0Brane) -> Result<D0Brane> {
    same_radius(bb.radius, d.radius)?;
    let image = fibre_over_second(bb, d.x);
    debug_assert!(image.iter().all(|&a| bb.contains(a, d.x)));
    D0Brane::new(d.radius, image[0])
}

/// `B_{(x, α)} ⋆ D⁽¹⁾_β = D⁽¹⁾_{α+β}`.
pub fn fuse_defect_d1(bb: &FreeBosonBiBrane, d: &D1Brane) -> Result<D1Brane> {
    same_radius(bb.radius, d.radius)?;
    D1Brane::new(d.radius, bb.alpha + d.alpha)
}

/// Samples of `p₁₃(p₁₂⁻¹𝓑 ∩ p₂₃⁻¹𝓑′)` over `n` grid points of the third
/// factor, as exact fraction pairs.
pub fn composed_support(b1: &FreeBosonBiBrane, b2: &FreeBosonBiBrane, n: i64) -> Vec<(Frac, Frac)> {
    let mut out = Vec::new();
    for j in 0..n.max(1) {
        let c = Frac::new(j, n.max(1));
        for b in fibre_over_second(b2, c) {
            for a in fibre_over_second(b1, b) {
                out.push((a, c));
            }
        }
    }
    out
}

/// `B ⋆ B′`, read off the composed correspondence as a shifted graph; the
/// Wilson lines of the two pulled-back bundles add.
pub fn fuse_defects(b1: &FreeBosonBiBrane, b2: &FreeBosonBiBrane) -> Result<FreeBosonBiBrane> {
    same_radius(b1.radius, b2.radius)?;
    let pts = composed_support(b1, b2, 8);
    let shift = reduce(pts[0].0 - pts[0].1);
    if pts.iter().any(|&(a, c)| reduce(a - c) != shift) {
        return Err(Error::InvalidInput(
            "composed support is not the graph of a shift".into(),
        ));
    }
    FreeBosonBiBrane::new(b1.radius, shift, b1.alpha + b2.alpha)
}

/// Target of a fusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FusionTarget {
    D0(D0Brane),
    D1(D1Brane),
    Bibrane(FreeBosonBiBrane),
}

pub fn fuse(bb: &FreeBosonBiBrane, target: &FusionTarget) -> Result<FusionTarget> {
    Ok(match target {
        FusionTarget::D0(d) => FusionTarget::D0(fuse_defect_d0(bb, d)?),
        FusionTarget::D1(d) => FusionTarget::D1(fuse_defect_d1(bb, d)?),
        FusionTarget::Bibrane(b) => FusionTarget::Bibrane(fuse_defects(bb, b)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(n: i64, d: i64) -> Frac {
        Frac::new(n, d)
    }

    #[test]
    fn d0_translation() {
        let bb = FreeBosonBiBrane::new(1.0, f(1, 4), f(1, 3)).unwrap();
        let d = D0Brane::new(1.0, f(1, 2)).unwrap();
        let out = fuse_defect_d0(&bb, &d).unwrap();
        assert_eq!(out.x, f(3, 4));
        assert!((out.position() - 0.75 * 2.0 * PI).abs() < 1e-15);
        let back = fuse_defect_d0(&bb.inverse(), &out).unwrap();
        assert_eq!(back, d);
        let id = FreeBosonBiBrane::identity(1.0).unwrap();
        assert_eq!(fuse_defect_d0(&id, &d).unwrap(), d);
    }

    #[test]
    fn d1_translation() {
        let half = FreeBosonBiBrane::new(2.0, f(0, 1), f(1, 2)).unwrap();
        let d = D1Brane::new(2.0, f(1, 2)).unwrap();
        assert!(fuse_defect_d1(&half, &d).unwrap().alpha == f(0, 1));
        let d = D1Brane::new(2.0, f(5, 7)).unwrap();
        let bb = FreeBosonBiBrane::new(2.0, f(1, 3), f(4, 7)).unwrap();
        assert_eq!(fuse_defect_d1(&bb, &d).unwrap().alpha, f(2, 7));
    }

    #[test]
    fn bibrane_group_law() {
        let a = FreeBosonBiBrane::new(1.5, f(2, 3), f(5, 6)).unwrap();
        let b = FreeBosonBiBrane::new(1.5, f(1, 2), f(1, 3)).unwrap();
        let ab = fuse_defects(&a, &b).unwrap();
        assert_eq!((ab.x, ab.alpha), (f(1, 6), f(1, 6)));
        assert_eq!(ab, fuse_defects(&b, &a).unwrap());
        let id = FreeBosonBiBrane::identity(1.5).unwrap();
        assert_eq!(fuse_defects(&a, &id).unwrap(), a);
        assert_eq!(fuse_defects(&a, &a.inverse()).unwrap(), id);
    }

    #[test]
    fn radius_mismatch() {
        let a = FreeBosonBiBrane::identity(1.0).unwrap();
        let d = D0Brane::new(2.0, f(0, 1)).unwrap();
        assert!(matches!(
            fuse_defect_d0(&a, &d),
            Err(Error::RadiusMismatch(..))
        ));
    }

    #[test]
    fn support_matches_world_volume() {
        let bb = FreeBosonBiBrane::new(1.0, f(3, 8), f(0, 1)).unwrap();
        let rec = bb.record();
        let t = bb.target();
        for (a, c) in composed_support(&bb, &FreeBosonBiBrane::identity(1.0).unwrap(), 16) {
            let p = [2.0 * PI * to_f64(a), 2.0 * PI * to_f64(c)];
            assert!(rec.world_volume.residual(&t, &p) < 1e-12);
        }
    }
}
