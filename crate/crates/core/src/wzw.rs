//! SU(2) WZW geometry and brane arithmetic.
//!
//! Points of SU(2) are unit quaternions. The level-`k` 3-form is
//! `H_k(X, Y, Z) = k/(2π²) det[θX, θY, θZ]`, `θ` the left Maurer-Cartan form
//! read as vectors in ℝ³, so that `∫_{SU(2)} H_1 = 1`. Conjugacy classes are
//! labelled by `θ ∈ [0, π]`, `C_θ = {Re g = cos θ}`.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Connection, FormOracle, TargetSpace};
use crate::gerbedata::{BiBraneRecord, DBraneRecord, WorldVolume};
use crate::quat::{self, Quat};
use crate::sampling;

fn check_level(k: i64) -> Result<u32> {
    if k <= 0 || k > u32::MAX as i64 {
        return Err(Error::BadLevel(k));
    }
    Ok(k as u32)
}

/// `H_k` on SU(2).
pub fn canonical_three_form(k: i64) -> Result<FormOracle> {
    let k = check_level(k)? as f64;
    let c = k / (2.0 * PI * PI);
    Ok(FormOracle::new(
        3,
        format!("su2.H[k={k}]"),
        TargetSpace::Su2,
        move |g, t| {
            c * quat::det3(
                quat::left_mc(g, t[0]),
                quat::left_mc(g, t[1]),
                quat::left_mc(g, t[2]),
            )
        },
    ))
}

fn det4(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> f64 {
    nalgebra::Matrix4::new(
        a[0], b[0], c[0], d[0], a[1], b[1], c[1], d[1], a[2], b[2], c[2], d[2], a[3], b[3], c[3],
        d[3],
    )
    .determinant()
}

/// Haar Monte-Carlo estimate of `∫_{SU(2)} H_k`: the mean of `H_k` against
/// the round volume form at random points and random tangent frames, times
/// the volume `2π²` of the unit 3-sphere.
pub fn haar_integral(h: &FormOracle, samples: usize, seed: u64) -> f64 {
    use rayon::prelude::*;
    const SHARDS: usize = 16;
    let per = samples.div_ceil(SHARDS);
    let sums: Vec<(f64, usize)> = (0..SHARDS)
        .into_par_iter()
        .map(|s| {
            let mut rng = sampling::rng(seed.wrapping_add(s as u64 * 0x9E37_79B9));
            let mut acc = 0.0;
            let mut n = 0;
            for _ in 0..per {
                let g = sampling::haar(&mut rng);
                let x = sampling::su2_tangent(&mut rng, &g);
                let y = sampling::su2_tangent(&mut rng, &g);
                let z = sampling::su2_tangent(&mut rng, &g);
                let vol = det4(&g, &x, &y, &z);
                if vol.abs() < 1e-6 {
                    continue;
                }
                acc += h.eval(&g, &[&x, &y, &z]) / vol;
                n += 1;
            }
            (acc, n)
        })
        .collect();
    let (acc, n) = sums.iter().fold((0.0, 0), |(a, m), (b, k)| (a + b, m + k));
    2.0 * PI * PI * acc / n as f64
}

/// A D-brane label `0 ≤ α ≤ k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BraneLabel {
    pub k: u32,
    pub alpha: u32,
}

impl BraneLabel {
    pub fn new(k: i64, alpha: u32) -> Result<Self> {
        let k = check_level(k)?;
        if alpha > k {
            return Err(Error::LabelOutOfRange {
                label: alpha,
                level: k,
            });
        }
        Ok(BraneLabel { k, alpha })
    }

    pub fn angle(self) -> f64 {
        PI * (self.alpha + 1) as f64 / (self.k + 2) as f64
    }
}

/// `θ_α = π(α + 1)/(k + 2)`, `α = 0..=k`.
pub fn brane_angles(k: i64) -> Result<Vec<f64>> {
    let k = check_level(k)?;
    Ok((0..=k)
        .map(|a| BraneLabel { k, alpha: a }.angle())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyClass {
    pub theta: f64,
}

impl ConjugacyClass {
    pub fn new(theta: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::AngleOutOfRange(theta));
        }
        Ok(ConjugacyClass { theta })
    }

    pub fn of(g: &[f64]) -> Self {
        ConjugacyClass {
            theta: (g[0] / quat::norm(g)).clamp(-1.0, 1.0).acos(),
        }
    }

    pub fn is_singleton(&self) -> bool {
        self.theta < 1e-15 || PI - self.theta < 1e-15
    }

    pub fn contains(&self, g: &[f64], tol: f64) -> bool {
        (g[0] - self.theta.cos()).abs() <= tol
    }

    /// `cos θ + sin θ n` for the unit axis `n(u)`, `u ∈ [0, 1)²`.
    pub fn sample(&self, u: &[f64]) -> Quat {
        quat::from_angle_axis(self.theta, sampling::sphere_from_unit(u))
    }

    pub fn world_volume(&self) -> WorldVolume {
        WorldVolume::Su2Class { theta: self.theta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiconjugacyClass {
    pub theta: f64,
}

impl BiconjugacyClass {
    pub fn contains(&self, g: &[f64], gp: &[f64], tol: f64) -> bool {
        ConjugacyClass { theta: self.theta }.contains(&quat::mul(g, &quat::conj(gp)), tol)
    }
}

/// Polar data `(ψ, n)` of `g = cos ψ + sin ψ n`, and the differentials
/// `dψ(X) = −X₀/sin ψ`, `dn(X) = (X_v − (n·X_v) n)/sin ψ`.
struct Polar {
    psi: f64,
    s: f64,
    n: [f64; 3],
}

impl Polar {
    fn new(g: &[f64]) -> Self {
        let v = quat::vector(g);
        let s = quat::dot3(v, v).sqrt();
        Polar {
            psi: s.atan2(g[0]),
            s,
            n: [v[0] / s, v[1] / s, v[2] / s],
        }
    }

    fn dn(&self, x: &[f64]) -> [f64; 3] {
        let xv = quat::vector(x);
        let d = quat::dot3(self.n, xv);
        [
            (xv[0] - d * self.n[0]) / self.s,
            (xv[1] - d * self.n[1]) / self.s,
            (xv[2] - d * self.n[2]) / self.s,
        ]
    }

    /// `vol_{S²}(dn X, dn Y)`.
    fn sphere_area(&self, x: &[f64], y: &[f64]) -> f64 {
        quat::det3(self.n, self.dn(x), self.dn(y))
    }
}

/// `(1/4π) vol_{S²}(n)` with `n` the unit axis of `g`; integrates to 1 over
/// any conjugacy class other than `±1`.
pub fn class_area_form() -> FormOracle {
    FormOracle::new(2, "su2.class_area", TargetSpace::Su2, |g, t| {
        Polar::new(g).sphere_area(t[0], t[1]) / (4.0 * PI)
    })
}

/// The brane 2-form for the class `C_θ`, extended to the complement of `±1`:
/// `Ω_θ = (k/2π²) [(ψ − sin ψ cos ψ)/2 − θ/2] vol_{S²}(n)`.
///
/// `dΩ_θ = H_k` wherever it is defined, and on `C_θ` it restricts to the
/// Ad-invariant form `(k/4π²) ⟨θX, (1 + Ad_g)(1 − Ad_g)⁻¹ θY⟩`.
pub fn omega_h(class: ConjugacyClass, k: i64) -> Result<FormOracle> {
    let kf = check_level(k)? as f64;
    if class.is_singleton() {
        return Ok(FormOracle::zero(2, TargetSpace::Su2));
    }
    let theta = class.theta;
    let c = ORIENTATION * kf / (2.0 * PI * PI);
    Ok(FormOracle::new(
        2,
        format!("su2.omega_h[k={k},theta={theta}]"),
        TargetSpace::Su2,
        move |g, t| {
            let p = Polar::new(g);
            let f = 0.5 * (p.psi - p.psi.sin() * p.psi.cos()) - 0.5 * theta;
            c * f * p.sphere_area(t[0], t[1])
        },
    ))
}

/// Sign tying `vol_{S²}` in polar coordinates to the orientation of `H_k`.
const ORIENTATION: f64 = 1.0;

/// `(k/4π²) ⟨θX, (1 + Ad_g)(1 − Ad_g)⁻¹ θY⟩` at a point of `C_θ`, for `X, Y`
/// tangent to the class.
pub fn omega_h_on_class(
    class: ConjugacyClass,
    k: i64,
    g: &[f64],
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    let kf = check_level(k)? as f64;
    let res = (g[0] - class.theta.cos()).abs();
    if res > 1e-9 {
        return Err(Error::NotOnWorldVolume(res));
    }
    if class.is_singleton() {
        return Ok(0.0);
    }
    let n = Polar::new(g).n;
    let ad = |v: [f64; 3]| quat::vector(&quat::conjugate_by(g, &quat::pure(v)));
    let m = nalgebra::Matrix3::from_fn(|i, j| {
        let mut e = [0.0; 3];
        e[j] = 1.0;
        let a = ad(e);
        let id = if i == j { 1.0 } else { 0.0 };
        id - a[i] + n[i] * n[j]
    });
    let inv = m.try_inverse().ok_or(Error::NotOnWorldVolume(0.0))?;
    let (u, w) = (quat::left_mc(g, x), quat::left_mc(g, y));
    let aw = ad(w);
    let plus = nalgebra::Vector3::new(w[0] + aw[0], w[1] + aw[1], w[2] + aw[2]);
    let z = inv * plus;
    Ok(kf / (4.0 * PI * PI) * (u[0] * z[0] + u[1] * z[1] + u[2] * z[2]))
}

/// Symmetric D-brane `α` at level `k` with trivial rank-1 module.
pub fn dbrane(label: BraneLabel) -> DBraneRecord {
    let class = ConjugacyClass {
        theta: label.angle(),
    };
    DBraneRecord {
        world_volume: class.world_volume(),
        omega: omega_h(class, label.k as i64).expect("level checked"),
        module: Connection::Abelian(FormOracle::zero(1, TargetSpace::Su2)),
    }
}

pub fn su2_pair() -> TargetSpace {
    TargetSpace::product(TargetSpace::Su2, TargetSpace::Su2)
}

/// `ϖ = μ̃*Ω_θ − (k/4π²) ⟨p₁*θ ∧ p₂*θ⟩` on SU(2) × SU(2), `μ̃(g, g') = g g'⁻¹`.
/// With `cross = false` the Maurer-Cartan term is dropped.
pub fn varpi_for_angle(theta: f64, k: i64, cross: bool) -> Result<FormOracle> {
    let kf = check_level(k)? as f64;
    let class = ConjugacyClass::new(theta)?;
    let omega = omega_h(class, k)?;
    let c = CROSS_SIGN * kf / (4.0 * PI * PI);
    Ok(FormOracle::new(
        2,
        format!("su2.varpi[k={k},theta={theta}]"),
        su2_pair(),
        move |p, t| {
            let (g, gp) = (&p[0..4], &p[4..8]);
            let gpi = quat::conj(gp);
            let mu = quat::mul(g, &gpi);
            // dμ̃(X, X') = X g'⁻¹ − g g'⁻¹ X' g'⁻¹
            let dmu = |v: &[f64]| {
                let a = quat::mul(&v[0..4], &gpi);
                let b = quat::mul(&quat::mul(&mu, &v[4..8]), &gpi);
                [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
            };
            let mut value = omega.eval(&mu, &[&dmu(t[0]), &dmu(t[1])]);
            if cross {
                let th = |v: &[f64]| (quat::left_mc(g, &v[0..4]), quat::left_mc(gp, &v[4..8]));
                let ((a1, a2), (b1, b2)) = (th(t[0]), th(t[1]));
                value -= c * (quat::dot3(a1, b2) - quat::dot3(b1, a2));
            }
            value
        },
    ))
}

const CROSS_SIGN: f64 = 1.0;

/// `ϖ_{h,h'}` for group elements `h, h'`.
pub fn varpi(h: &[f64], hp: &[f64], k: i64) -> Result<FormOracle> {
    let theta = ConjugacyClass::of(&quat::mul(h, &quat::conj(hp))).theta;
    varpi_for_angle(theta, k, true)
}

/// Symmetric bi-brane with label `β`: biconjugacy class, `ϖ` and a trivial bundle.
pub fn bibrane(label: BraneLabel) -> BiBraneRecord {
    let theta = label.angle();
    BiBraneRecord {
        world_volume: WorldVolume::Biconjugacy { theta },
        varpi: varpi_for_angle(theta, label.k as i64, true).expect("label checked"),
        bundle: Connection::Abelian(FormOracle::zero(1, su2_pair())),
    }
}

/// `[|θ₁ − θ₂|, min(θ₁ + θ₂, 2π − θ₁ − θ₂)]`, the range of class angles of
/// products `g₁ g₂` with `g_i ∈ C_{θ_i}`.
pub fn class_product_interval(t1: f64, t2: f64) -> Result<(f64, f64)> {
    for t in [t1, t2] {
        if !(0.0..=PI).contains(&t) || !t.is_finite() {
            return Err(Error::AngleOutOfRange(t));
        }
    }
    Ok(((t1 - t2).abs(), (t1 + t2).min(2.0 * PI - t1 - t2)))
}

/// Exact class-product interval in units of `π/(k+2)` for labels `a, b`:
/// the open range `(lo, hi)` of `c + 1` with `θ_c` strictly inside.
fn integer_interval(k: u32, a: u32, b: u32) -> (u32, u32) {
    let (a1, b1) = (a + 1, b + 1);
    let lo = a1.abs_diff(b1);
    let hi = (a1 + b1).min(2 * (k + 2) - a1 - b1);
    (lo, hi)
}

/// Labels `c` whose brane angle lies strictly inside the class-product
/// interval of `θ_a, θ_b`.
pub fn geometric_fusion(k: u32, a: u32, b: u32) -> Vec<u32> {
    let (lo, hi) = integer_interval(k, a, b);
    (0..=k).filter(|c| lo < c + 1 && c + 1 < hi).collect()
}

fn check_labels(k: i64, labels: &[u32]) -> Result<u32> {
    let k = check_level(k)?;
    for &l in labels {
        if l > k {
            return Err(Error::LabelOutOfRange { label: l, level: k });
        }
    }
    Ok(k)
}

/// Modular S-matrix of `su(2)_k`.
pub fn s_matrix(k: u32) -> Vec<Vec<f64>> {
    let n = (k + 2) as f64;
    (0..=k)
        .map(|a| {
            (0..=k)
                .map(|b| (2.0 / n).sqrt() * (PI * (a + 1) as f64 * (b + 1) as f64 / n).sin())
                .collect()
        })
        .collect()
}

/// Fusion multiplicities `N_{ab}^c` from the Verlinde sum.
pub fn verlinde_multiplicities(k: u32, a: u32, b: u32) -> Vec<i64> {
    let s = s_matrix(k);
    let (a, b) = (a as usize, b as usize);
    (0..=k as usize)
        .map(|c| {
            let v: f64 = (0..=k as usize)
                .map(|j| s[a][j] * s[b][j] * s[c][j] / s[0][j])
                .sum();
            v.round() as i64
        })
        .collect()
}

/// `{c : N_{ab}^c ≠ 0}` via the Verlinde sum, cross-checked against the
/// truncated Clebsch-Gordan rule.
pub fn verlinde_su2(k: i64, a: u32, b: u32) -> Result<BTreeSet<u32>> {
    let k = check_labels(k, &[a, b])?;
    let n = verlinde_multiplicities(k, a, b);
    let set: BTreeSet<u32> = (0..=k).filter(|&c| n[c as usize] != 0).collect();
    let rule = truncation_rule(k, a, b);
    assert_eq!(
        set, rule,
        "Verlinde sum disagrees with the truncation rule at k={k}, a={a}, b={b}"
    );
    Ok(set)
}

/// `{c : |a − b| ≤ c ≤ min(a + b, 2k − a − b), a + b + c even}`.
pub fn truncation_rule(k: u32, a: u32, b: u32) -> BTreeSet<u32> {
    let hi = (a + b).min(2 * k - a - b);
    (a.abs_diff(b)..=hi)
        .filter(|c| (a + b + c).is_even())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionBoundsReport {
    pub k: u32,
    pub pairs: usize,
    pub matching: usize,
    /// `(a, b, geometric (min, max), Verlinde (min, max))` for mismatches.
    pub mismatches: Vec<(u32, u32, Option<(u32, u32)>, (u32, u32))>,
}

impl FusionBoundsReport {
    pub fn pass(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Compare the extremes of the class-product interval with the extremes of
/// the Verlinde support for every label pair, in exact integers.
pub fn fusion_bounds_check(k: i64) -> Result<FusionBoundsReport> {
    let k = check_level(k)?;
    let mut report = FusionBoundsReport {
        k,
        pairs: 0,
        matching: 0,
        mismatches: Vec::new(),
    };
    for a in 0..=k {
        for b in 0..=k {
            report.pairs += 1;
            let geo = geometric_fusion(k, a, b);
            let ver = verlinde_su2(k as i64, a, b)?;
            let g = geo.first().map(|&lo| (lo, *geo.last().unwrap()));
            let v = (*ver.first().unwrap(), *ver.last().unwrap());
            if g == Some(v) {
                report.matching += 1;
            } else {
                report.mismatches.push((a, b, g, v));
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionTable {
    pub k: u32,
    /// `(a, b, {c})` for all label pairs.
    pub entries: Vec<(u32, u32, Vec<u32>)>,
}

pub fn fusion_table(k: i64) -> Result<FusionTable> {
    let k = check_level(k)?;
    let mut entries = Vec::new();
    for a in 0..=k {
        for b in 0..=k {
            entries.push((a, b, verlinde_su2(k as i64, a, b)?.into_iter().collect()));
        }
    }
    Ok(FusionTable { k, entries })
}

/// Sampler for `Π_{αβγ} = {(g, g') : g ∈ C_α, g' ∈ C_γ, g g'⁻¹ ∈ C_β}` with
/// its 2-form `p₁*ω_α + p₂*ω_γ + ϖ_β`.
#[derive(Debug, Clone)]
pub struct PiSampler {
    pub labels: [BraneLabel; 3],
    /// Required `n·m` between the axes of `g` and `g'`.
    pub axis_cos: f64,
    pub form: FormOracle,
}

pub fn omega_abc(alpha: BraneLabel, beta: BraneLabel, gamma: BraneLabel) -> Result<PiSampler> {
    let k = alpha.k;
    if beta.k != k || gamma.k != k {
        return Err(Error::InvalidInput("labels at different levels".into()));
    }
    let (lo, hi) = integer_interval(k, alpha.alpha, gamma.alpha);
    let c1 = beta.alpha + 1;
    if !(lo < c1 && c1 < hi) {
        return Err(Error::EmptyFiber(alpha.alpha, beta.alpha, gamma.alpha, k));
    }
    let (ta, tb, tc) = (alpha.angle(), beta.angle(), gamma.angle());
    let axis_cos = ((tb.cos() - ta.cos() * tc.cos()) / (ta.sin() * tc.sin())).clamp(-1.0, 1.0);
    let prod = su2_pair();
    let kk = k as i64;
    let form = omega_h(ConjugacyClass { theta: ta }, kk)?
        .on_factor(prod.clone(), 0)
        .plus(&omega_h(ConjugacyClass { theta: tc }, kk)?.on_factor(prod.clone(), 4))
        .plus(&varpi_for_angle(tb, kk, true)?);
    Ok(PiSampler {
        labels: [alpha, beta, gamma],
        axis_cos,
        form,
    })
}

impl PiSampler {
    /// Point of `Π_{αβγ}` from `u ∈ [0, 1)³`: the axis `n` of `g` is uniform,
    /// the axis of `g'` makes the required angle with `n` at azimuth `u₂`.
    pub fn sample(&self, u: &[f64]) -> (Quat, Quat) {
        let n = sampling::sphere_from_unit(&u[0..2]);
        let helper = if n[0].abs() < 0.9 {
            [1.0, 0.0, 0.0]
        } else {
            [0.0, 1.0, 0.0]
        };
        let e1 = normalize3(quat::cross(n, helper));
        let e2 = quat::cross(n, e1);
        let (c, s) = (
            self.axis_cos,
            (1.0 - self.axis_cos * self.axis_cos).max(0.0).sqrt(),
        );
        let phi = 2.0 * PI * u[2];
        let m = [
            c * n[0] + s * (phi.cos() * e1[0] + phi.sin() * e2[0]),
            c * n[1] + s * (phi.cos() * e1[1] + phi.sin() * e2[1]),
            c * n[2] + s * (phi.cos() * e1[2] + phi.sin() * e2[2]),
        ];
        let [a, _, g] = self.labels;
        (
            quat::from_angle_axis(a.angle(), n),
            quat::from_angle_axis(g.angle(), m),
        )
    }

    /// Largest membership residual of a sample.
    pub fn residual(&self, g: &[f64], gp: &[f64]) -> f64 {
        let [a, b, c] = self.labels;
        let r1 = (g[0] - a.angle().cos()).abs();
        let r2 = (gp[0] - c.angle().cos()).abs();
        let r3 = (quat::mul(g, &quat::conj(gp))[0] - b.angle().cos()).abs();
        r1.max(r2).max(r3)
    }
}

fn normalize3(v: [f64; 3]) -> [f64; 3] {
    let n = quat::dot3(v, v).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Group {
    Su2,
    So3,
    Pso4n,
}

impl std::str::FromStr for Group {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "su2" => Ok(Group::Su2),
            "so3" => Ok(Group::So3),
            "pso4n" => Ok(Group::Pso4n),
            _ => Err(Error::UnknownGroup(s.into())),
        }
    }
}

/// Number of inequivalent Jandl gerbes over the level-`k` gerbe for a group
/// and involution (`"inverse"` or, on SU(2), `"minus_inverse"`).
pub fn jandl_census(group: Group, level: i64, involution: &str) -> Result<u32> {
    let k = check_level(level)?;
    let inv = involution.to_ascii_lowercase().replace('-', "_");
    let known = match group {
        Group::Su2 => inv == "inverse" || inv == "minus_inverse",
        Group::So3 | Group::Pso4n => inv == "inverse",
    };
    if !known {
        return Err(Error::UnknownGroup(format!(
            "{group:?} with involution {involution}"
        )));
    }
    match group {
        Group::Su2 => Ok(2),
        Group::So3 | Group::Pso4n if k % 2 == 1 => Err(Error::IncompatibleLevel {
            group: format!("{group:?}"),
            level: k,
        }),
        Group::So3 => Ok(4),
        Group::Pso4n => Ok(16),
    }
}

/// A finite abelian group `⊕ ℤ_{d_i}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteAbelian {
    pub invariant_factors: Vec<u64>,
}

impl FiniteAbelian {
    pub fn order(&self) -> u64 {
        self.invariant_factors.iter().product()
    }

    pub fn cyclic(n: u64) -> Self {
        FiniteAbelian {
            invariant_factors: if n == 1 { vec![] } else { vec![n] },
        }
    }
}

impl std::fmt::Display for FiniteAbelian {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.invariant_factors.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .invariant_factors
            .iter()
            .map(|d| format!("Z{d}"))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Coefficient of the coboundary `C^n → C^{n+1}` on normalized bar cochains
/// of ℤ₂ with values in ℤ_N, on which the generator acts by negation. A
/// normalized n-cochain is one value, `f(σ, …, σ)`; inner faces multiply
/// `σ σ = 1` and vanish.
fn normalized_coboundary(n: usize) -> i64 {
    // σ·f(σ..σ) = −f, then Σ_{i=1..n} (−1)^i f(.., σσ, ..) = 0, then (−1)^{n+1} f
    let outer = -1;
    let last = if (n + 1) % 2 == 0 { 1 } else { -1 };
    outer + last
}

/// `H^n(ℤ₂, ℤ_{2m})` with the inversion action, from normalized cochains.
pub fn cohomology_z2(n: usize, m: u64) -> Result<FiniteAbelian> {
    if n > 4 || m == 0 {
        return Err(Error::InvalidInput(format!(
            "need n <= 4 and m >= 1, got n={n}, m={m}"
        )));
    }
    let big_n = 2 * m as i64;
    let size_of_kernel = |c: i64| {
        if c.rem_euclid(big_n) == 0 {
            big_n
        } else {
            c.abs().gcd(&big_n)
        }
    };
    let ker = size_of_kernel(normalized_coboundary(n));
    let im = if n == 0 {
        1
    } else {
        big_n / size_of_kernel(normalized_coboundary(n - 1))
    };
    Ok(FiniteAbelian::cyclic((ker / im) as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::exterior_derivative_fd;
    use crate::gerbedata::{validate_bibrane, validate_dbrane};

    #[test]
    fn three_form_normalization() {
        let h = canonical_three_form(1).unwrap();
        let b = TargetSpace::Su2.tangent_basis(&quat::ONE);
        let v = h.eval(&quat::ONE, &[&b[0], &b[1], &b[2]]);
        assert!((v - 1.0 / (2.0 * PI * PI)).abs() < 1e-15);
        assert!(matches!(canonical_three_form(0), Err(Error::BadLevel(0))));
    }

    #[test]
    fn three_form_is_bi_invariant() {
        let h = canonical_three_form(2).unwrap();
        let mut rng = sampling::rng(1);
        for _ in 0..20 {
            let (g, x, y) = (
                sampling::haar(&mut rng),
                sampling::haar(&mut rng),
                sampling::haar(&mut rng),
            );
            let t: Vec<Quat> = (0..3)
                .map(|_| sampling::su2_tangent(&mut rng, &g))
                .collect();
            let a = h.eval(&g, &[&t[0], &t[1], &t[2]]);
            let tr = |v: &Quat| quat::mul(&quat::mul(&x, v), &y);
            let gg = tr(&g);
            let b = h.eval(&gg, &[&tr(&t[0]), &tr(&t[1]), &tr(&t[2])]);
            assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn brane_angle_lists() {
        let a = brane_angles(1).unwrap();
        assert!((a[0] - PI / 3.0).abs() < 1e-15 && (a[1] - 2.0 * PI / 3.0).abs() < 1e-15);
        let a = brane_angles(2).unwrap();
        assert_eq!(a.len(), 3);
        assert!((a[1] - PI / 2.0).abs() < 1e-15);
        for k in 1..8 {
            let a = brane_angles(k).unwrap();
            for i in 0..a.len() {
                assert!((a[i] + a[a.len() - 1 - i] - PI).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn omega_h_extension_is_a_primitive_of_h() {
        for k in 1..=3 {
            let h = canonical_three_form(k).unwrap();
            for alpha in 0..=k as u32 {
                let brane = dbrane(BraneLabel::new(k, alpha).unwrap());
                let r = validate_dbrane(&h, &brane, 40, 3).unwrap();
                assert!(r.pass, "k={k} alpha={alpha}: {r:?}");
            }
        }
    }

    #[test]
    fn rescaled_omega_h_fails() {
        let h = canonical_three_form(2).unwrap();
        let mut brane = dbrane(BraneLabel::new(2, 1).unwrap());
        for lambda in [0.9, 1.1, 2.0] {
            brane.omega = omega_h(ConjugacyClass { theta: PI / 2.0 }, 2)
                .unwrap()
                .scaled(lambda);
            assert!(!validate_dbrane(&h, &brane, 20, 1).unwrap().pass);
        }
    }

    #[test]
    fn extension_matches_kernel_form_on_the_class() {
        let k = 3;
        let mut rng = sampling::rng(7);
        for theta in brane_angles(k).unwrap() {
            let class = ConjugacyClass { theta };
            let om = omega_h(class, k).unwrap();
            for _ in 0..10 {
                let g = class.sample(&[rand::Rng::gen(&mut rng), rand::Rng::gen(&mut rng)]);
                // tangents to the class: [ξ, g]
                let tan = |xi: [f64; 3]| {
                    let a = quat::mul(&quat::pure(xi), &g);
                    let b = quat::mul(&g, &quat::pure(xi));
                    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
                };
                let x = tan(sampling::sphere(&mut rng));
                let y = tan(sampling::sphere(&mut rng));
                let a = om.eval(&g, &[&x, &y]);
                let b = omega_h_on_class(class, k, &g, &x, &y).unwrap();
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn omega_h_is_ad_invariant() {
        let k = 2;
        let class = ConjugacyClass { theta: 0.7 };
        let om = omega_h(class, k).unwrap();
        let mut rng = sampling::rng(9);
        for _ in 0..20 {
            let g = class.sample(&[rand::Rng::gen(&mut rng), rand::Rng::gen(&mut rng)]);
            let x0 = sampling::su2_tangent(&mut rng, &g);
            let y0 = sampling::su2_tangent(&mut rng, &g);
            let c = sampling::haar(&mut rng);
            let ad = |v: &Quat| quat::conjugate_by(&c, v);
            let a = om.eval(&g, &[&x0, &y0]);
            let b = om.eval(&ad(&g), &[&ad(&x0), &ad(&y0)]);
            assert!((a - b).abs() < 1e-8);
        }
        assert!(omega_h_on_class(class, k, &quat::ONE, &quat::ONE, &quat::ONE).is_err());
    }

    #[test]
    fn singleton_classes_carry_zero_form() {
        let om = omega_h(ConjugacyClass { theta: 0.0 }, 1).unwrap();
        assert_eq!(
            om.eval(&quat::ONE, &[&[0., 1., 0., 0.], &[0., 0., 1., 0.]]),
            0.0
        );
    }

    #[test]
    fn varpi_satisfies_the_bibrane_identity() {
        for k in 1..=2 {
            let h = canonical_three_form(k).unwrap();
            for beta in 0..=k as u32 {
                let bb = bibrane(BraneLabel::new(k, beta).unwrap());
                let r = validate_bibrane(&h, &h, &bb, 20, 5).unwrap();
                assert!(r.pass, "k={k} beta={beta}: {r:?}");
            }
        }
    }

    #[test]
    fn varpi_without_cross_term_fails() {
        let h = canonical_three_form(2).unwrap();
        let mut bb = bibrane(BraneLabel::new(2, 1).unwrap());
        bb.varpi = varpi_for_angle(PI / 2.0, 2, false).unwrap();
        let r = validate_bibrane(&h, &h, &bb, 20, 5).unwrap();
        assert!(!r.pass && r.max_residual > 1e-2, "{r:?}");
    }

    #[test]
    fn varpi_is_bi_invariant() {
        let k = 2;
        let w = varpi_for_angle(1.2, k, true).unwrap();
        let mut rng = sampling::rng(13);
        let bc = BiconjugacyClass { theta: 1.2 };
        for _ in 0..20 {
            let gp = sampling::haar(&mut rng);
            let h = ConjugacyClass { theta: 1.2 }
                .sample(&[rand::Rng::gen(&mut rng), rand::Rng::gen(&mut rng)]);
            let g = quat::mul(&h, &gp);
            assert!(bc.contains(&g, &gp, 1e-12));
            let mut p = g.to_vec();
            p.extend(gp);
            let t: Vec<Vec<f64>> = (0..2)
                .map(|_| {
                    let mut v = sampling::su2_tangent(&mut rng, &g).to_vec();
                    v.extend(sampling::su2_tangent(&mut rng, &gp));
                    v
                })
                .collect();
            let (x1, x2) = (sampling::haar(&mut rng), sampling::haar(&mut rng));
            let tr = |v: &[f64]| {
                let mut o = quat::mul(&quat::mul(&x1, &v[0..4]), &quat::conj(&x2)).to_vec();
                o.extend(quat::mul(&quat::mul(&x1, &v[4..8]), &quat::conj(&x2)));
                o
            };
            assert!(bc.contains(&tr(&p)[0..4], &tr(&p)[4..8], 1e-12));
            let a = w.eval(&p, &[&t[0], &t[1]]);
            let b = w.eval(&tr(&p), &[&tr(&t[0]), &tr(&t[1])]);
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn product_intervals() {
        let (lo, hi) = class_product_interval(0.8, 0.0).unwrap();
        assert!((lo - 0.8).abs() < 1e-15 && (hi - 0.8).abs() < 1e-15);
        assert_eq!(
            class_product_interval(PI / 2.0, PI / 2.0).unwrap(),
            (0.0, PI)
        );
        let (lo, hi) = class_product_interval(PI / 3.0, PI / 3.0).unwrap();
        assert!(lo.abs() < 1e-15 && (hi - 2.0 * PI / 3.0).abs() < 1e-15);
        assert!(matches!(
            class_product_interval(-0.1, 1.0),
            Err(Error::AngleOutOfRange(_))
        ));
    }

    #[test]
    fn verlinde_examples() {
        assert_eq!(verlinde_su2(5, 0, 3).unwrap(), BTreeSet::from([3]));
        assert_eq!(verlinde_su2(1, 1, 1).unwrap(), BTreeSet::from([0]));
        assert_eq!(verlinde_su2(2, 1, 1).unwrap(), BTreeSet::from([0, 2]));
        assert!(matches!(
            verlinde_su2(2, 3, 0),
            Err(Error::LabelOutOfRange { .. })
        ));
    }

    #[test]
    fn bounds_match_for_small_levels() {
        let r = fusion_bounds_check(1).unwrap();
        assert_eq!((r.pairs, r.matching), (4, 4));
        let r = fusion_bounds_check(10).unwrap();
        assert_eq!((r.pairs, r.matching), (121, 121));
    }

    #[test]
    fn closed_interval_would_overshoot() {
        // with endpoints admitted, k = 1, (0, 1) would also admit c = 1 - 1
        let (lo, hi) = integer_interval(1, 0, 1);
        let closed: Vec<u32> = (0..=1).filter(|c| lo <= c + 1 && c + 1 <= hi).collect();
        assert_ne!(closed, geometric_fusion(1, 0, 1));
    }

    #[test]
    fn forbidden_triple_has_empty_fiber() {
        let l = |a| BraneLabel::new(1, a).unwrap();
        assert!(matches!(
            omega_abc(l(1), l(1), l(1)),
            Err(Error::EmptyFiber(1, 1, 1, 1))
        ));
        assert!(omega_abc(l(1), l(0), l(1)).is_ok());
    }

    #[test]
    fn parity_forbidden_triple_has_a_fiber() {
        // Π is non-empty here although the fusion coefficient vanishes
        let l = |a| BraneLabel::new(2, a).unwrap();
        assert!(omega_abc(l(1), l(1), l(1)).is_ok());
        assert!(!verlinde_su2(2, 1, 1).unwrap().contains(&1));
    }

    #[test]
    fn pi_sampler_members_and_invariance() {
        let l = |a| BraneLabel::new(3, a).unwrap();
        let s = omega_abc(l(1), l(2), l(2)).unwrap();
        let mut rng = sampling::rng(17);
        for u in sampling::halton_points(30, 3, 2) {
            let (g, gp) = s.sample(&u);
            assert!(s.residual(&g, &gp) <= 1e-10);
            // tangents to Π: simultaneous conjugation directions
            let tan = |xi: [f64; 3]| {
                let t = |q: &Quat| {
                    let a = quat::mul(&quat::pure(xi), q);
                    let b = quat::mul(q, &quat::pure(xi));
                    vec![a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
                };
                let mut v = t(&g);
                v.extend(t(&gp));
                v
            };
            let (x, y) = (
                tan(sampling::sphere(&mut rng)),
                tan(sampling::sphere(&mut rng)),
            );
            let c = sampling::haar(&mut rng);
            let ad = |v: &[f64]| {
                let mut o = quat::conjugate_by(&c, &v[0..4]).to_vec();
                o.extend(quat::conjugate_by(&c, &v[4..8]));
                o
            };
            let mut p = g.to_vec();
            p.extend(gp);
            let a = s.form.eval(&p, &[&x, &y]);
            let b = s.form.eval(&ad(&p), &[&ad(&x), &ad(&y)]);
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn census_table() {
        assert_eq!(jandl_census(Group::Su2, 5, "inverse").unwrap(), 2);
        assert_eq!(jandl_census(Group::Su2, 2, "minus-inverse").unwrap(), 2);
        assert_eq!(jandl_census(Group::So3, 4, "inverse").unwrap(), 4);
        assert_eq!(jandl_census(Group::Pso4n, 2, "inverse").unwrap(), 16);
        assert!(matches!(
            jandl_census(Group::So3, 3, "inverse"),
            Err(Error::IncompatibleLevel { .. })
        ));
        assert!(matches!("e8".parse::<Group>(), Err(Error::UnknownGroup(_))));
    }

    #[test]
    fn cohomology_is_z2() {
        for n in 0..=4 {
            for m in 1..=8 {
                assert_eq!(
                    cohomology_z2(n, m).unwrap(),
                    FiniteAbelian::cyclic(2),
                    "n={n} m={m}"
                );
            }
        }
    }

    #[test]
    fn d_of_maurer_cartan_pairing() {
        // ⟨θ, e₁⟩ has d = −2 θ²∧θ³ by the structure equation
        let f = FormOracle::new(1, "theta1", TargetSpace::Su2, |g, t| {
            quat::left_mc(g, t[0])[0]
        });
        let g = quat::normalize(&[0.1, 0.9, -0.3, 0.2]);
        let b = TargetSpace::Su2.tangent_basis(&g);
        assert!((exterior_derivative_fd(&f, &g, &[&b[1], &b[2]]).unwrap() + 2.0).abs() < 1e-6);
    }
}
