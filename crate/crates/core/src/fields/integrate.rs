use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::form::{pushforward, pushforward4, FormOracle};
use crate::fields::map::SurfaceMap;
use crate::mesh::{Circle, Side};

/// Step for pushforwards of interpolated maps.
pub const PUSH_STEP: f64 = 1e-5;
/// Step of the fourth-order edge velocities.
const EDGE_STEP: f64 = 1e-3;

/// Symmetric triangle quadrature rules on the reference triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    Centroid,
    Degree2,
    #[default]
    Degree4,
}

impl Quadrature {
    /// `(barycentric point, weight)` with weights summing to 1.
    pub fn points(self) -> Vec<([f64; 3], f64)> {
        match self {
            Quadrature::Centroid => vec![([1.0 / 3.0; 3], 1.0)],
            Quadrature::Degree2 => {
                let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
                vec![
                    ([a, b, b], 1.0 / 3.0),
                    ([b, a, b], 1.0 / 3.0),
                    ([b, b, a], 1.0 / 3.0),
                ]
            }
            Quadrature::Degree4 => {
                let (a1, w1) = (0.445_948_490_915_965, 0.223_381_589_678_011);
                let (a2, w2) = (0.091_576_213_509_771, 0.109_951_743_655_322);
                let mut v = Vec::with_capacity(6);
                for (a, w) in [(a1, w1), (a2, w2)] {
                    let b = 1.0 - 2.0 * a;
                    v.push(([a, a, b], w));
                    v.push(([a, b, a], w));
                    v.push(([b, a, a], w));
                }
                v
            }
        }
    }
}

/// Integral of a 2-form over one face of the map, in the face's corner order.
pub fn face_integral(
    form: &FormOracle,
    map: &SurfaceMap,
    f: usize,
    rule: Quadrature,
) -> Result<f64> {
    if form.degree != 2 {
        return Err(Error::InvalidInput(format!(
            "{} has degree {}, need 2",
            form.name, form.degree
        )));
    }
    let target = map.target();
    let corners = map.face_corners(f);
    let phi = |uv: &[f64]| {
        crate::fields::map::interpolate_corners(
            target,
            &corners,
            [1.0 - uv[0] - uv[1], uv[0], uv[1]],
        )
    };
    let mut total = 0.0;
    for (b, w) in rule.points() {
        let uv = [b[1], b[2]];
        let p = phi(&uv);
        let du = target.project_tangent(&p, &pushforward(&phi, &uv, &[1.0, 0.0], PUSH_STEP));
        let dv = target.project_tangent(&p, &pushforward(&phi, &uv, &[0.0, 1.0], PUSH_STEP));
        total += w * form.try_eval(&p, &[&du, &dv])?;
    }
    // reference triangle area
    Ok(0.5 * total)
}

/// Per-face integrals, in parallel over faces.
pub fn face_integrals(form: &FormOracle, map: &SurfaceMap, rule: Quadrature) -> Result<Vec<f64>> {
    (0..map.surface().faces().len())
        .into_par_iter()
        .map(|f| face_integral(form, map, f, rule))
        .collect()
}

/// `∫_Σ Φ*ω` summed over faces in their corner orientation.
pub fn pullback_integrate(form: &FormOracle, map: &SurfaceMap) -> Result<f64> {
    pullback_integrate_with(form, map, Quadrature::default())
}

pub fn pullback_integrate_with(
    form: &FormOracle,
    map: &SurfaceMap,
    rule: Quadrature,
) -> Result<f64> {
    Ok(face_integrals(form, map, rule)?.iter().sum())
}

/// Gauss-Legendre nodes on `[0, 1]`, five points.
fn gauss5() -> [(f64, f64); 5] {
    let x = [0.0, 0.538_469_310_105_683_1, 0.906_179_845_938_664];
    let w = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
    ];
    [
        (0.5 - 0.5 * x[2], 0.5 * w[2]),
        (0.5 - 0.5 * x[1], 0.5 * w[1]),
        (0.5, 0.5 * w[0]),
        (0.5 + 0.5 * x[1], 0.5 * w[1]),
        (0.5 + 0.5 * x[2], 0.5 * w[2]),
    ]
}

/// Point and velocity along a side at parameter `t`.
pub fn side_velocity(map: &SurfaceMap, side: Side, t: f64) -> (Vec<f64>, Vec<f64>) {
    let p = map.edge_point(side, t);
    let path = |s: &[f64]| map.edge_point(side, s[0]);
    let v = pushforward4(&path, &[t], &[1.0], EDGE_STEP);
    let v = map.target().project_tangent(&p, &v);
    (p, v)
}

/// `∫ A` along a side, for a 1-form `A`.
pub fn side_integral(form: &FormOracle, map: &SurfaceMap, side: Side) -> Result<f64> {
    if form.degree != 1 {
        return Err(Error::InvalidInput(format!(
            "{} has degree {}, need 1",
            form.name, form.degree
        )));
    }
    // a few Gauss panels per edge for curved su2 arcs
    segment_integral(form, &|_, t| side_velocity(map, side, t), 0)
}

/// A rank-r connection with values `A(p; v)`, a Hermitian r×r matrix, so
/// that parallel transport solves `U' = 2πi A(γ; γ') U`.
#[derive(Clone)]
pub enum Connection {
    Abelian(FormOracle),
    Matrix {
        rank: usize,
        name: String,
        field: Arc<dyn Fn(&[f64], &[f64]) -> DMatrix<Complex64> + Send + Sync>,
    },
}

impl std::fmt::Debug for Connection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Connection::Abelian(a) => write!(f, "Abelian({})", a.name),
            Connection::Matrix { rank, name, .. } => write!(f, "Matrix({name}, rank {rank})"),
        }
    }
}

impl Connection {
    pub fn rank(&self) -> usize {
        match self {
            Connection::Abelian(_) => 1,
            Connection::Matrix { rank, .. } => *rank,
        }
    }

    /// Diagonal connection from abelian pieces, the direct sum of line bundles.
    pub fn direct_sum(parts: Vec<FormOracle>) -> Connection {
        let r = parts.len();
        let name = parts
            .iter()
            .map(|p| p.name.clone())
            .collect::<Vec<_>>()
            .join("+");
        Connection::Matrix {
            rank: r,
            name,
            field: Arc::new(move |p, v| {
                DMatrix::from_fn(r, r, |i, j| {
                    if i == j {
                        Complex64::new(parts[i].eval(p, &[v]), 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
            }),
        }
    }

    /// The same bundle twisted by a line bundle with connection `a`.
    pub fn twisted(&self, a: &FormOracle) -> Connection {
        match self {
            Connection::Abelian(b) => Connection::Abelian(b.plus(a)),
            Connection::Matrix { rank, name, field } => {
                let (r, f, a) = (*rank, field.clone(), a.clone());
                Connection::Matrix {
                    rank: r,
                    name: format!("{name}*{}", a.name),
                    field: Arc::new(move |p, v| {
                        f(p, v) + DMatrix::identity(r, r) * Complex64::new(a.eval(p, &[v]), 0.0)
                    }),
                }
            }
        }
    }

    fn matrix(&self, p: &[f64], v: &[f64]) -> DMatrix<Complex64> {
        match self {
            Connection::Abelian(a) => {
                DMatrix::from_element(1, 1, Complex64::new(a.eval(p, &[v]), 0.0))
            }
            Connection::Matrix { field, .. } => field(p, v),
        }
    }
}

fn check_closed(map: &SurfaceMap, lp: &Circle) -> Result<()> {
    if lp.steps.is_empty() {
        return Err(Error::OpenLoop("empty loop".into()));
    }
    let s = map.surface();
    for (i, st) in lp.steps.iter().enumerate() {
        if st.edge >= s.edges().len() {
            return Err(Error::OpenLoop(format!("edge {} out of range", st.edge)));
        }
        let next = lp.steps[(i + 1) % lp.steps.len()];
        if s.side_end(*st) != s.side_start(next) {
            return Err(Error::OpenLoop(format!(
                "step {i} ends away from step {}",
                (i + 1) % lp.steps.len()
            )));
        }
    }
    Ok(())
}

/// Point and velocity on segment `i` of a piecewise path at `t ∈ [0, 1]`.
pub type SegmentFn<'a> = dyn Fn(usize, f64) -> (Vec<f64>, Vec<f64>) + Sync + 'a;

/// Path-ordered transport along one segment with `n` RK4 steps.
fn transport_segment(
    conn: &Connection,
    path: &SegmentFn,
    seg: usize,
    n: usize,
) -> DMatrix<Complex64> {
    let r = conn.rank();
    let gen = |t: f64| {
        let (p, v) = path(seg, t);
        conn.matrix(&p, &v) * Complex64::new(0.0, 2.0 * PI)
    };
    let mut u = DMatrix::<Complex64>::identity(r, r);
    let h = 1.0 / n as f64;
    for k in 0..n {
        let t = k as f64 * h;
        let (a0, am, a1) = (gen(t), gen(t + 0.5 * h), gen(t + h));
        let hc = Complex64::new(h, 0.0);
        let k1 = &a0 * &u;
        let k2 = &am * (&u + &k1 * (hc * 0.5));
        let k3 = &am * (&u + &k2 * (hc * 0.5));
        let k4 = &a1 * (&u + &k3 * hc);
        u += (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4) * (hc / 6.0);
    }
    u
}

fn panel_sum(form: &FormOracle, path: &SegmentFn, seg: usize, panels: usize) -> Result<f64> {
    let mut s = 0.0;
    for k in 0..panels {
        for (x, w) in gauss5() {
            let t = (k as f64 + x) / panels as f64;
            let (p, v) = path(seg, t);
            s += w / panels as f64 * form.try_eval(&p, &[&v])?;
        }
    }
    Ok(s)
}

/// `∫ A` along one segment of a path, for a 1-form `A`: composite Gauss
/// rule, doubling the panels (4 to 64) until two rules agree to `1e-14`.
pub fn segment_integral(form: &FormOracle, path: &SegmentFn, seg: usize) -> Result<f64> {
    let mut panels = 4;
    let mut s = panel_sum(form, path, seg, panels)?;
    while panels < 64 {
        panels *= 2;
        let finer = panel_sum(form, path, seg, panels)?;
        let done = (finer - s).abs() <= 1e-14 * finer.abs().max(1.0);
        s = finer;
        if done {
            break;
        }
    }
    Ok(s)
}

/// Transport of a connection along a piecewise path of `segments` pieces.
/// Rank 1 returns the 1×1 matrix `exp(2πi ∫ A)`; higher rank integrates the
/// path-ordered exponential, halving the step until entries move less than
/// `1e-8`.
pub fn path_holonomy(
    conn: &Connection,
    segments: usize,
    path: &SegmentFn,
) -> Result<DMatrix<Complex64>> {
    if conn.rank() == 0 {
        return Err(Error::ZeroRank);
    }
    if let Connection::Abelian(a) = conn {
        if a.degree != 1 {
            return Err(Error::InvalidInput(format!(
                "{} has degree {}, need 1",
                a.name, a.degree
            )));
        }
        let mut s = 0.0;
        for i in 0..segments {
            s += segment_integral(a, path, i)?;
        }
        return Ok(DMatrix::from_element(
            1,
            1,
            Complex64::from_polar(1.0, 2.0 * PI * s),
        ));
    }
    let product = |n: usize| {
        let r = conn.rank();
        let mut u = DMatrix::<Complex64>::identity(r, r);
        for i in 0..segments {
            u = transport_segment(conn, path, i, n) * u;
        }
        u
    };
    let mut n = 8;
    let mut prev = product(n);
    loop {
        n *= 2;
        let next = product(n);
        let diff = (&next - &prev).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !diff.is_finite() {
            return Err(Error::NonFinite("parallel transport".into()));
        }
        if diff < 1e-8 || n > 1 << 14 {
            return Ok(next);
        }
        prev = next;
    }
}

/// Holonomy `U` of a connection around a loop of sides of a map.
pub fn line_holonomy(
    conn: &Connection,
    map: &SurfaceMap,
    lp: &Circle,
) -> Result<DMatrix<Complex64>> {
    check_closed(map, lp)?;
    path_holonomy(conn, lp.steps.len(), &|i, t| {
        side_velocity(map, lp.steps[i], t)
    })
}

pub fn trace(m: &DMatrix<Complex64>) -> Complex64 {
    m.diagonal().iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::target::TargetSpace;
    use crate::fixtures;

    #[test]
    fn zero_form_integrates_to_zero() {
        let m = fixtures::torus_identity_map(4, 4);
        let z = FormOracle::zero(2, m.target().clone());
        assert_eq!(pullback_integrate(&z, &m).unwrap(), 0.0);
    }

    #[test]
    fn unit_torus_area() {
        let m = fixtures::torus_identity_map(8, 8);
        let a = pullback_integrate(&fixtures::dxdy(TargetSpace::unit_torus(), 1.0), &m).unwrap();
        assert!((a - 1.0).abs() < 1e-6, "{a}");
    }

    #[test]
    fn sphere_area_converges() {
        let form = crate::wzw::class_area_form();
        let mut m = fixtures::sphere_octa_map();
        let mut errs = Vec::new();
        for _ in 0..4 {
            errs.push((pullback_integrate(&form, &m).unwrap() - 1.0).abs());
            m = m.subdivide();
        }
        assert!(errs[0] < 1e-3, "{errs:?}");
        // the octahedron itself is pre-asymptotic; from one subdivision on
        // the degree-4 rule gains at least a factor 4 per level
        assert!(
            errs[2] <= errs[1] / 4.0 && errs[3] <= errs[2] / 4.0,
            "{errs:?}"
        );
    }

    #[test]
    fn half_flux_line_gives_minus_one() {
        let m = fixtures::circle_winding_map(1);
        let a = FormOracle::new(1, "a", m.target().clone(), |_, t| t[0][0] / (4.0 * PI));
        let lp = Circle {
            steps: vec![Side {
                edge: 0,
                forward: true,
            }],
        };
        let u = line_holonomy(&Connection::Abelian(a), &m, &lp).unwrap();
        assert!((u[(0, 0)] + 1.0).norm() < 1e-9);
    }

    #[test]
    fn open_loops_are_rejected() {
        let m = fixtures::torus_identity_map(3, 3);
        let s = m.surface();
        let e = (0..s.edges().len())
            .find(|&e| s.edges()[e].tail != s.edges()[e].head)
            .unwrap();
        let lp = Circle {
            steps: vec![Side {
                edge: e,
                forward: true,
            }],
        };
        let a = FormOracle::zero(1, m.target().clone());
        assert!(matches!(
            line_holonomy(&Connection::Abelian(a), &m, &lp),
            Err(Error::OpenLoop(_))
        ));
    }
}
