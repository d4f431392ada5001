use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quat;

/// Model target manifolds. Points are ambient coordinate vectors: a circle
/// of radius `R` uses one coordinate of period `2πR`, a torus two, SU(2) a
/// unit quaternion `[w, x, y, z]`, and a product concatenates its factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetSpace {
    Circle {
        radius: f64,
    },
    Torus {
        radii: [f64; 2],
    },
    Su2,
    Product {
        left: Box<TargetSpace>,
        right: Box<TargetSpace>,
    },
}

/// Irreducible piece of a target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Atom {
    Circle(f64),
    Su2,
}

impl Atom {
    pub fn ambient_dim(self) -> usize {
        match self {
            Atom::Circle(_) => 1,
            Atom::Su2 => 4,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Atom::Circle(_) => 1,
            Atom::Su2 => 3,
        }
    }
}

impl TargetSpace {
    /// Torus with both periods equal to 1.
    pub fn unit_torus() -> Self {
        let r = 1.0 / (2.0 * PI);
        TargetSpace::Torus { radii: [r, r] }
    }

    pub fn product(left: TargetSpace, right: TargetSpace) -> Self {
        TargetSpace::Product {
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn atoms(&self) -> Vec<Atom> {
        match self {
            TargetSpace::Circle { radius } => vec![Atom::Circle(*radius)],
            TargetSpace::Torus { radii } => vec![Atom::Circle(radii[0]), Atom::Circle(radii[1])],
            TargetSpace::Su2 => vec![Atom::Su2],
            TargetSpace::Product { left, right } => {
                let mut a = left.atoms();
                a.extend(right.atoms());
                a
            }
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.atoms().iter().map(|a| a.ambient_dim()).sum()
    }

    pub fn dim(&self) -> usize {
        self.atoms().iter().map(|a| a.dim()).sum()
    }

    /// Ambient dimension of the left factor of a product.
    pub fn split_at(&self) -> Option<usize> {
        match self {
            TargetSpace::Product { left, .. } => Some(left.ambient_dim()),
            _ => None,
        }
    }

    /// Periods of the periodic coordinates, in ambient order.
    pub fn periods(&self) -> Vec<f64> {
        self.atoms()
            .iter()
            .filter_map(|a| match a {
                Atom::Circle(r) => Some(2.0 * PI * r),
                Atom::Su2 => None,
            })
            .collect()
    }

    pub fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.ambient_dim() {
            return Err(Error::ShapeMismatch(format!(
                "point has {} coordinates, target needs {}",
                p.len(),
                self.ambient_dim()
            )));
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("point {p:?}")));
        }
        Ok(())
    }

    /// Reduce periodic coordinates into `[0, period)` and renormalize SU(2) factors.
    pub fn normalize(&self, p: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(p.len());
        let mut i = 0;
        for a in self.atoms() {
            match a {
                Atom::Circle(r) => {
                    out.push(p[i].rem_euclid(2.0 * PI * r));
                    i += 1;
                }
                Atom::Su2 => {
                    out.extend(quat::normalize(&p[i..i + 4]));
                    i += 4;
                }
            }
        }
        out
    }

    /// Distance between two points, periodic coordinates compared modulo
    /// their periods.
    pub fn distance(&self, p: &[f64], q: &[f64]) -> f64 {
        let mut s = 0.0;
        let mut i = 0;
        for a in self.atoms() {
            match a {
                Atom::Circle(r) => {
                    let per = 2.0 * PI * r;
                    let d = (p[i] - q[i]).rem_euclid(per);
                    s += d.min(per - d).powi(2);
                    i += 1;
                }
                Atom::Su2 => {
                    s += (0..4).map(|k| (p[i + k] - q[i + k]).powi(2)).sum::<f64>();
                    i += 4;
                }
            }
        }
        s.sqrt()
    }

    /// Orthonormal ambient basis of the tangent space at `p`.
    pub fn tangent_basis(&self, p: &[f64]) -> Vec<Vec<f64>> {
        let n = p.len();
        let mut out = Vec::new();
        let mut i = 0;
        for a in self.atoms() {
            match a {
                Atom::Circle(_) => {
                    let mut v = vec![0.0; n];
                    v[i] = 1.0;
                    out.push(v);
                    i += 1;
                }
                Atom::Su2 => {
                    for b in quat::tangent_basis(&p[i..i + 4]) {
                        let mut v = vec![0.0; n];
                        v[i..i + 4].copy_from_slice(&b);
                        out.push(v);
                    }
                    i += 4;
                }
            }
        }
        out
    }

    /// Chart around `p`: flat translation on periodic factors, `p exp(v)` on SU(2).
    pub fn retract(&self, p: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(p.len());
        let (mut i, mut j) = (0, 0);
        for a in self.atoms() {
            match a {
                Atom::Circle(_) => {
                    out.push(p[i] + v[j]);
                    i += 1;
                    j += 1;
                }
                Atom::Su2 => {
                    out.extend(quat::mul(&p[i..i + 4], &quat::exp(&v[j..j + 3])));
                    i += 4;
                    j += 3;
                }
            }
        }
        out
    }

    /// Project an ambient vector onto the tangent space at `p`.
    pub fn project_tangent(&self, p: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        let mut i = 0;
        for a in self.atoms() {
            match a {
                Atom::Circle(_) => i += 1,
                Atom::Su2 => {
                    let g = &p[i..i + 4];
                    let d = quat::dot(g, &v[i..i + 4]);
                    for k in 0..4 {
                        out[i + k] -= d * g[k];
                    }
                    i += 4;
                }
            }
        }
        out
    }
}
