//! Gerbe data: Deligne local data pulled back to a surface, Jandl triples on
//! trivial gerbes, D-branes and bi-branes, with validators.
//!
//! Local data conventions. Every face `f` carries a chart `α(f)` and
//! `b_f = ∫_f B_{α(f)}` in its corner orientation. An interior edge `e` with
//! first face `f₁` and second face `f₂` carries `a_e = ∫_e A_{α(f₁) α(f₂)}`
//! along the edge direction (tail to head). Every vertex carries one unit
//! phase `g_v`, the product of triple-overlap values attached to it.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{exterior_derivative_fd, Atom, Connection, FormOracle, TargetSpace};
use crate::mesh::TriangulatedSurface;
use crate::quat;
use crate::sampling;

/// Tolerance for the local-data validators.
pub const COCYCLE_TOL: f64 = 1e-9;
/// Tolerance for finite-difference curvature identities.
pub const CURVATURE_TOL: f64 = 1e-4;
/// Default number of sample points for geometric validators.
pub const DEFAULT_SAMPLES: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct DeligneSurfaceData {
    pub surface: TriangulatedSurface,
    pub chart_of_face: Vec<usize>,
    pub b: Vec<f64>,
    /// Indexed by edge; entries of boundary edges are ignored.
    pub a: Vec<f64>,
    pub g: Vec<Complex64>,
}

/// `{ "chart_of_face": …, "b": …, "a": …, "g": [[re, im], …] }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeligneSpec {
    pub chart_of_face: Vec<usize>,
    pub b: Vec<f64>,
    pub a: Vec<f64>,
    pub g: Vec<[f64; 2]>,
}

impl DeligneSurfaceData {
    pub fn new(
        surface: TriangulatedSurface,
        chart_of_face: Vec<usize>,
        b: Vec<f64>,
        a: Vec<f64>,
        g: Vec<Complex64>,
    ) -> Result<Self> {
        let (nv, ne, nf) = (
            surface.n_vertices(),
            surface.edges().len(),
            surface.faces().len(),
        );
        if chart_of_face.len() != nf || b.len() != nf || a.len() != ne || g.len() != nv {
            return Err(Error::ShapeMismatch(format!(
                "local data needs {nf} charts, {nf} b, {ne} a, {nv} g; got {}, {}, {}, {}",
                chart_of_face.len(),
                b.len(),
                a.len(),
                g.len()
            )));
        }
        if b.iter().chain(&a).any(|x| !x.is_finite()) || g.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("local data".into()));
        }
        Ok(DeligneSurfaceData {
            surface,
            chart_of_face,
            b,
            a,
            g,
        })
    }

    /// Data with `b = 0`, `a = 0`, `g = 1` and the given charts.
    pub fn trivial(surface: TriangulatedSurface, chart_of_face: Vec<usize>) -> Self {
        let (nv, ne, nf) = (
            surface.n_vertices(),
            surface.edges().len(),
            surface.faces().len(),
        );
        DeligneSurfaceData::new(
            surface,
            chart_of_face,
            vec![0.0; nf],
            vec![0.0; ne],
            vec![Complex64::new(1.0, 0.0); nv],
        )
        .expect("shapes match")
    }

    pub fn from_spec(surface: TriangulatedSurface, spec: DeligneSpec) -> Result<Self> {
        let g = spec.g.iter().map(|z| Complex64::new(z[0], z[1])).collect();
        DeligneSurfaceData::new(surface, spec.chart_of_face, spec.b, spec.a, g)
    }

    pub fn to_spec(&self) -> DeligneSpec {
        DeligneSpec {
            chart_of_face: self.chart_of_face.clone(),
            b: self.b.clone(),
            a: self.a.clone(),
            g: self.g.iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    /// `∫_e A_{α(from) α(other)}` along the edge direction, for one of the
    /// two faces of an interior edge; swapping the pair flips the sign.
    pub fn a_from(&self, e: usize, from_face: usize) -> f64 {
        let inc = self.surface.incidence(e);
        if inc[0].face == from_face {
            self.a[e]
        } else {
            -self.a[e]
        }
    }

    /// Distinct charts of the faces around each vertex.
    pub fn charts_at_vertices(&self) -> Vec<BTreeSet<usize>> {
        let mut out = vec![BTreeSet::new(); self.surface.n_vertices()];
        for (f, face) in self.surface.faces().iter().enumerate() {
            for &v in &face.corners {
                out[v].insert(self.chart_of_face[f]);
            }
        }
        out
    }
}

/// Gauge parameters. `pi[(α, e)]` is `∫_e Π_α` along the edge direction;
/// `chi[(α, β, v)]` with `α < β` is `χ_{αβ}(v)` and `χ_{βα} = χ_{αβ}⁻¹`.
/// Missing entries are `0` and `1`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gauge {
    pub pi: HashMap<(usize, usize), f64>,
    pub chi: HashMap<(usize, usize, usize), Complex64>,
}

impl Gauge {
    fn pi(&self, chart: usize, e: usize) -> f64 {
        self.pi.get(&(chart, e)).copied().unwrap_or(0.0)
    }

    fn chi(&self, a: usize, b: usize, v: usize) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        match a.cmp(&b) {
            std::cmp::Ordering::Equal => one,
            std::cmp::Ordering::Less => self.chi.get(&(a, b, v)).copied().unwrap_or(one),
            std::cmp::Ordering::Greater => one / self.chi.get(&(b, a, v)).copied().unwrap_or(one),
        }
    }

    pub fn inverse(&self) -> Gauge {
        Gauge {
            pi: self.pi.iter().map(|(k, x)| (*k, -x)).collect(),
            chi: self.chi.iter().map(|(k, z)| (*k, z.inv())).collect(),
        }
    }

    /// Random gauge touching every parameter the data can see.
    pub fn random<R: Rng>(data: &DeligneSurfaceData, rng: &mut R) -> Gauge {
        let s = &data.surface;
        let mut g = Gauge::default();
        for (f, face) in s.faces().iter().enumerate() {
            for side in &face.sides {
                g.pi.entry((data.chart_of_face[f], side.edge))
                    .or_insert_with(|| rng.gen_range(-2.0..2.0));
            }
        }
        for e in 0..s.edges().len() {
            let inc = s.incidence(e);
            if inc.len() != 2 {
                continue;
            }
            let (a, b) = (
                data.chart_of_face[inc[0].face],
                data.chart_of_face[inc[1].face],
            );
            if a == b {
                continue;
            }
            let edge = s.edges()[e];
            for v in [edge.tail, edge.head] {
                g.chi
                    .entry((a.min(b), a.max(b), v))
                    .or_insert_with(|| Complex64::from_polar(1.0, rng.gen_range(-PI..PI)));
            }
        }
        g
    }

    /// Constant transition phases `χ_{αβ}` for all chart pairs meeting at an edge.
    pub fn constant_phases<R: Rng>(data: &DeligneSurfaceData, rng: &mut R) -> Gauge {
        let s = &data.surface;
        let mut by_pair: HashMap<(usize, usize), Complex64> = HashMap::new();
        let mut g = Gauge::default();
        for e in 0..s.edges().len() {
            let inc = s.incidence(e);
            if inc.len() != 2 {
                continue;
            }
            let (a, b) = (
                data.chart_of_face[inc[0].face],
                data.chart_of_face[inc[1].face],
            );
            if a == b {
                continue;
            }
            let key = (a.min(b), a.max(b));
            let z = *by_pair
                .entry(key)
                .or_insert_with(|| Complex64::from_polar(1.0, rng.gen_range(-PI..PI)));
            let edge = s.edges()[e];
            for v in [edge.tail, edge.head] {
                g.chi.insert((key.0, key.1, v), z);
            }
        }
        g
    }
}

/// Act on local data by the Deligne coboundary of a gauge:
/// `B_α += dΠ_α`, `A_{αβ} += Π_β − Π_α − (1/2πi) dlog χ_{αβ}` and the vertex
/// phases absorb the endpoint values of `χ`.
pub fn gauge_transform(data: &DeligneSurfaceData, gauge: &Gauge) -> Result<DeligneSurfaceData> {
    let s = &data.surface;
    if let Some(&(_, e)) = gauge.pi.keys().find(|(_, e)| *e >= s.edges().len()) {
        return Err(Error::ShapeMismatch(format!("gauge references edge {e}")));
    }
    if let Some(&(_, _, v)) = gauge.chi.keys().find(|(_, _, v)| *v >= s.n_vertices()) {
        return Err(Error::ShapeMismatch(format!("gauge references vertex {v}")));
    }
    let mut out = data.clone();
    for (f, face) in s.faces().iter().enumerate() {
        let chart = data.chart_of_face[f];
        for side in &face.sides {
            let p = gauge.pi(chart, side.edge);
            out.b[f] += if side.forward { p } else { -p };
        }
    }
    for e in 0..s.edges().len() {
        let inc = s.incidence(e);
        if inc.len() != 2 {
            continue;
        }
        let (a1, a2) = (
            data.chart_of_face[inc[0].face],
            data.chart_of_face[inc[1].face],
        );
        let edge = s.edges()[e];
        let (ct, ch) = (gauge.chi(a1, a2, edge.tail), gauge.chi(a1, a2, edge.head));
        out.a[e] += gauge.pi(a2, e) - gauge.pi(a1, e) - (ch / ct).arg() / (2.0 * PI);
        let eps = s.side(inc[0]).forward;
        let (gh, gt) = if eps { (ch, ct.inv()) } else { (ch.inv(), ct) };
        out.g[edge.head] *= gh;
        out.g[edge.tail] *= gt;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocycleReport {
    pub vertex_residuals: Vec<f64>,
    pub edge_residuals: Vec<f64>,
    pub failing_vertices: Vec<usize>,
    pub failing_edges: Vec<usize>,
    pub max_residual: f64,
    pub pass: bool,
}

/// Local consistency of the data: vertex phases are unimodular, and they
/// are trivial where at most two charts meet (a normalized alternating
/// triple-overlap cocycle has no nontrivial value there); edges between
/// faces in one chart carry no transition term.
pub fn validate_cocycle(data: &DeligneSurfaceData) -> CocycleReport {
    let s = &data.surface;
    let charts = data.charts_at_vertices();
    let vertex_residuals: Vec<f64> = data
        .g
        .iter()
        .enumerate()
        .map(|(v, z)| {
            let m = (z.norm() - 1.0).abs();
            if charts[v].len() <= 2 {
                m.max((z - 1.0).norm())
            } else {
                m
            }
        })
        .collect();
    let edge_residuals: Vec<f64> = (0..s.edges().len())
        .map(|e| {
            let inc = s.incidence(e);
            if inc.len() == 2 && data.chart_of_face[inc[0].face] == data.chart_of_face[inc[1].face]
            {
                data.a[e].abs()
            } else {
                0.0
            }
        })
        .collect();
    let failing = |r: &[f64]| {
        (0..r.len())
            .filter(|&i| !(r[i] <= COCYCLE_TOL))
            .collect::<Vec<_>>()
    };
    let failing_vertices = failing(&vertex_residuals);
    let failing_edges = failing(&edge_residuals);
    let max_residual = vertex_residuals
        .iter()
        .chain(&edge_residuals)
        .fold(0.0f64, |m, &x| m.max(x));
    CocycleReport {
        pass: failing_vertices.is_empty() && failing_edges.is_empty(),
        vertex_residuals,
        edge_residuals,
        failing_vertices,
        failing_edges,
        max_residual,
    }
}

/// Submanifolds carrying branes and bi-branes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WorldVolume {
    Full,
    Point {
        point: Vec<f64>,
    },
    /// `{g ∈ SU(2) : Re g = cos θ}`.
    Su2Class {
        theta: f64,
    },
    /// `{(g, g') : Re(g g'⁻¹) = cos θ}` in SU(2) × SU(2).
    Biconjugacy {
        theta: f64,
    },
    /// `{(y, y − x)}` in a product of two circles of one radius.
    ShiftedDiagonal {
        shift: f64,
    },
    /// `{(p, p)}` in the square of a target.
    Diagonal,
}

impl WorldVolume {
    pub fn param_dim(&self, target: &TargetSpace) -> usize {
        match self {
            WorldVolume::Full => target.atoms().iter().map(|a| a.dim()).sum(),
            WorldVolume::Point { .. } => 0,
            WorldVolume::Su2Class { theta } => {
                if is_singleton(*theta) {
                    0
                } else {
                    2
                }
            }
            WorldVolume::Biconjugacy { theta } => {
                if is_singleton(*theta) {
                    3
                } else {
                    5
                }
            }
            WorldVolume::ShiftedDiagonal { .. } => 1,
            WorldVolume::Diagonal => match target {
                TargetSpace::Product { left, .. } => WorldVolume::Full.param_dim(left),
                _ => 0,
            },
        }
    }

    /// Point of the world volume at parameters `u ∈ [0, 1)^param_dim`.
    pub fn sample(&self, target: &TargetSpace, u: &[f64]) -> Vec<f64> {
        match self {
            WorldVolume::Full => {
                let mut p = Vec::new();
                let mut j = 0;
                for a in target.atoms() {
                    match a {
                        Atom::Circle(r) => {
                            p.push(2.0 * PI * r * u[j]);
                            j += 1;
                        }
                        Atom::Su2 => {
                            p.extend(sampling::haar_from_unit(&u[j..j + 3]));
                            j += 3;
                        }
                    }
                }
                p
            }
            WorldVolume::Point { point } => point.clone(),
            WorldVolume::Su2Class { theta } => class_point(*theta, u).to_vec(),
            WorldVolume::Biconjugacy { theta } => {
                let gp = sampling::haar_from_unit(&u[0..3]);
                let h = class_point(*theta, &u[3.min(u.len())..]);
                let mut p = quat::mul(&h, &gp).to_vec();
                p.extend(gp);
                p
            }
            WorldVolume::ShiftedDiagonal { shift } => {
                let per = target.periods()[0];
                let y = per * u[0];
                vec![y, y - shift]
            }
            WorldVolume::Diagonal => match target {
                TargetSpace::Product { left, .. } => {
                    let mut p = WorldVolume::Full.sample(left, u);
                    p.extend(p.clone());
                    p
                }
                _ => Vec::new(),
            },
        }
    }

    /// Distance-like membership residual.
    pub fn residual(&self, target: &TargetSpace, p: &[f64]) -> f64 {
        match self {
            WorldVolume::Full => 0.0,
            WorldVolume::Point { point } => target.distance(p, point),
            WorldVolume::Su2Class { theta } => (p[0] / quat::norm(p) - theta.cos()).abs(),
            WorldVolume::Biconjugacy { theta } => {
                let h = quat::mul(&p[0..4], &quat::conj(&p[4..8]));
                (h[0] - theta.cos()).abs()
            }
            WorldVolume::ShiftedDiagonal { shift } => {
                let per = target.periods()[0];
                let d = (p[0] - p[1] - shift).rem_euclid(per);
                d.min(per - d)
            }
            WorldVolume::Diagonal => match target {
                TargetSpace::Product { left, .. } => {
                    let n = left.ambient_dim();
                    left.distance(&p[..n], &p[n..])
                }
                _ => f64::INFINITY,
            },
        }
    }
}

fn is_singleton(theta: f64) -> bool {
    theta.abs() < 1e-15 || (theta - PI).abs() < 1e-15
}

fn class_point(theta: f64, u: &[f64]) -> quat::Quat {
    if is_singleton(theta) {
        return [theta.cos(), 0.0, 0.0, 0.0];
    }
    quat::from_angle_axis(theta, sampling::sphere_from_unit(u))
}

/// A D-brane: world volume `Q`, curvature 2-form `ω_Q` (defined near `Q`) and
/// a module bundle of rank `r` with connection.
#[derive(Debug, Clone)]
pub struct DBraneRecord {
    pub world_volume: WorldVolume,
    pub omega: FormOracle,
    pub module: Connection,
}

/// A bi-brane in `M₁ × M₂`: world volume, 2-form `ϖ` and bundle.
#[derive(Debug, Clone)]
pub struct BiBraneRecord {
    pub world_volume: WorldVolume,
    pub varpi: FormOracle,
    pub bundle: Connection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub check: String,
    pub samples: usize,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub tolerance: f64,
    /// Indices of failing samples.
    pub failing: Vec<usize>,
    pub pass: bool,
}

impl ValidationReport {
    fn from_residuals(check: impl Into<String>, r: Vec<f64>, tolerance: f64) -> Self {
        let n = r.len();
        let failing: Vec<usize> = (0..n).filter(|&i| !(r[i] <= tolerance)).collect();
        ValidationReport {
            check: check.into(),
            samples: n,
            max_residual: r.iter().fold(
                0.0f64,
                |m, &x| if x.is_nan() { f64::INFINITY } else { m.max(x) },
            ),
            mean_residual: if n == 0 {
                0.0
            } else {
                r.iter().sum::<f64>() / n as f64
            },
            tolerance,
            pass: failing.is_empty(),
            failing,
        }
    }
}

/// `|a − b| / max(1, |a|)`.
fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(1.0)
}

/// All index triples (or pairs) of an orthonormal tangent basis.
fn combos(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Largest residual of `lhs = dω` over basis triples at `p`.
fn closure_residual(lhs: &FormOracle, omega: &FormOracle, p: &[f64]) -> f64 {
    let target = &omega.target;
    let basis = target.tangent_basis(p);
    let mut worst: f64 = 0.0;
    for c in combos(basis.len(), 3) {
        let t: Vec<&[f64]> = c.iter().map(|&i| basis[i].as_slice()).collect();
        let h = lhs.eval(p, &t);
        let d = match exterior_derivative_fd(omega, p, &t) {
            Ok(d) => d,
            Err(_) => return f64::INFINITY,
        };
        worst = worst.max(rel(h, d));
    }
    worst
}

fn sample_points(
    wv: &WorldVolume,
    target: &TargetSpace,
    n: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::EmptySampling);
    }
    let dim = wv.param_dim(target);
    Ok(sampling::halton_points(n, dim, seed)
        .iter()
        .map(|u| wv.sample(target, u))
        .collect())
}

/// `H|_Q = dω_Q` at `n` low-discrepancy points of `Q`, with ambient tangent
/// triples (the brane form is defined on a neighbourhood of `Q`).
pub fn validate_dbrane(
    h: &FormOracle,
    brane: &DBraneRecord,
    n: usize,
    seed: u64,
) -> Result<ValidationReport> {
    if h.target != brane.omega.target {
        return Err(Error::InvalidInput(
            "H and brane live on different targets".into(),
        ));
    }
    let pts = sample_points(&brane.world_volume, &h.target, n, seed)?;
    let r: Vec<f64> = pts
        .par_iter()
        .map(|p| closure_residual(h, &brane.omega, p))
        .collect();
    Ok(ValidationReport::from_residuals("dbrane", r, CURVATURE_TOL))
}

/// `p₁*H₁ = p₂*H₂ + dϖ` at `n` low-discrepancy points of the world volume.
pub fn validate_bibrane(
    h1: &FormOracle,
    h2: &FormOracle,
    bibrane: &BiBraneRecord,
    n: usize,
    seed: u64,
) -> Result<ValidationReport> {
    let product = bibrane.varpi.target.clone();
    let split = product
        .split_at()
        .ok_or_else(|| Error::InvalidInput("bi-brane target must be a product".into()))?;
    match &product {
        TargetSpace::Product { left, right } if **left == h1.target && **right == h2.target => {}
        _ => {
            return Err(Error::InvalidInput(
                "bi-brane target does not match the two gerbes".into(),
            ))
        }
    }
    let lhs = h1
        .on_factor(product.clone(), 0)
        .minus(&h2.on_factor(product.clone(), split));
    let pts = sample_points(&bibrane.world_volume, &product, n, seed)?;
    let r: Vec<f64> = pts
        .par_iter()
        .map(|p| closure_residual(&lhs, &bibrane.varpi, p))
        .collect();
    Ok(ValidationReport::from_residuals(
        "bibrane",
        r,
        CURVATURE_TOL,
    ))
}

pub type PhaseFn = dyn Fn(&[f64]) -> Complex64 + Send + Sync;

/// An involution `k` of a target.
#[derive(Clone)]
pub struct Involution {
    pub name: String,
    pub target: TargetSpace,
    pub map: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
}

impl std::fmt::Debug for Involution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Involution({})", self.name)
    }
}

impl Involution {
    pub fn new<F>(name: impl Into<String>, target: TargetSpace, map: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Involution {
            name: name.into(),
            target,
            map: Arc::new(map),
        }
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        (self.map)(p)
    }

    pub fn pull(&self, form: &FormOracle) -> FormOracle {
        let m = self.map.clone();
        form.pullback(self.target.clone(), move |p| m(p))
    }

    /// `(x, y) ↦ (x + ½, −y)` on the unit torus; free, with Klein bottle quotient.
    pub fn klein_shift() -> Self {
        Involution::new("klein_shift", TargetSpace::unit_torus(), |p| {
            vec![p[0] + 0.5, -p[1]]
        })
    }

    /// `g ↦ g⁻¹` on SU(2).
    pub fn su2_inverse() -> Self {
        Involution::new("inverse", TargetSpace::Su2, |p| quat::conj(p).to_vec())
    }

    /// `g ↦ −g⁻¹` on SU(2).
    pub fn su2_minus_inverse() -> Self {
        Involution::new("minus_inverse", TargetSpace::Su2, |p| {
            let c = quat::conj(p);
            vec![-c[0], -c[1], -c[2], -c[3]]
        })
    }
}

/// Jandl structure on a trivial gerbe `I_ω`: a trivial line bundle `L` with
/// connection 1-form `A` (curvature `dA = −ω − k*ω`) and a phase `φ` with
/// `A − k*A = (1/2πi) dlog φ` and `k*φ = φ⁻¹`.
#[derive(Clone)]
pub struct JandlTrivialData {
    pub omega: FormOracle,
    pub connection: FormOracle,
    pub phi: Arc<PhaseFn>,
    pub involution: Involution,
}

impl std::fmt::Debug for JandlTrivialData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("JandlTrivialData")
            .field("omega", &self.omega.name)
            .field("connection", &self.connection.name)
            .field("involution", &self.involution)
            .finish()
    }
}

impl JandlTrivialData {
    pub fn new<F>(omega: FormOracle, connection: FormOracle, phi: F, involution: Involution) -> Self
    where
        F: Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    {
        JandlTrivialData {
            omega,
            connection,
            phi: Arc::new(phi),
            involution,
        }
    }

    pub fn phi(&self, p: &[f64]) -> Complex64 {
        (self.phi)(p)
    }

    /// The same structure pulled back along the involution.
    pub fn pulled_back(&self) -> JandlTrivialData {
        let k = self.involution.clone();
        let phi = self.phi.clone();
        let km = k.map.clone();
        JandlTrivialData {
            omega: k.pull(&self.omega),
            connection: k.pull(&self.connection),
            phi: Arc::new(move |p| phi(&km(p))),
            involution: k,
        }
    }
}

/// `f(p) = Σᵢ aᵢ sin 2πpᵢ + bᵢ cos 2πpᵢ` in ambient coordinates: periodic on
/// the unit torus and smooth on SU(2), with an exact differential.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigField {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl TrigField {
    pub fn random<R: Rng>(dim: usize, rng: &mut R) -> Self {
        TrigField {
            a: (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            b: (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        }
    }

    pub fn value(&self, p: &[f64]) -> f64 {
        let w = 2.0 * PI;
        (0..self.a.len())
            .map(|i| self.a[i] * (w * p[i]).sin() + self.b[i] * (w * p[i]).cos())
            .sum()
    }

    pub fn diff(&self, p: &[f64], v: &[f64]) -> f64 {
        let w = 2.0 * PI;
        (0..self.a.len())
            .map(|i| w * (self.a[i] * (w * p[i]).cos() - self.b[i] * (w * p[i]).sin()) * v[i])
            .sum()
    }
}

/// Gauge transformation of trivial Jandl data by a 1-form `Π = dλ` and a
/// function `u = exp(2πi μ)`:
/// `A ↦ A − Π − k*Π + dμ`, `φ ↦ φ · u / (u∘k)`, `ω` unchanged.
///
/// The involution must be affine in ambient coordinates, so that
/// `dk(v) = k(p + v) − k(p)`.
pub fn jandl_gauge(
    data: &JandlTrivialData,
    lambda: &TrigField,
    mu: &TrigField,
) -> JandlTrivialData {
    let (k1, k2) = (data.involution.map.clone(), data.involution.map.clone());
    let (l, m, m2) = (lambda.clone(), mu.clone(), mu.clone());
    let a = data.connection.clone();
    let phi = data.phi.clone();
    let connection = FormOracle::new(
        1,
        format!("{}+gauge", a.name),
        a.target.clone(),
        move |p, t| {
            let v = t[0];
            let kp = k1(p);
            let shifted: Vec<f64> = p.iter().zip(v).map(|(x, d)| x + d).collect();
            let dk: Vec<f64> = k1(&shifted).iter().zip(&kp).map(|(x, y)| x - y).collect();
            a.eval(p, t) - l.diff(p, v) - l.diff(&kp, &dk) + m.diff(p, v)
        },
    );
    JandlTrivialData {
        omega: data.omega.clone(),
        connection,
        phi: Arc::new(move |p| {
            phi(p) * Complex64::from_polar(1.0, 2.0 * PI * (m2.value(p) - m2.value(&k2(p))))
        }),
        involution: data.involution.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JandlReport {
    pub samples: usize,
    /// `max |dA + ω + k*ω|` (relative).
    pub curvature: f64,
    /// `max |φ∘k − φ⁻¹|`.
    pub equivariance: f64,
    /// `max |(A − k*A) − (1/2π) d arg φ|` (relative).
    pub connection_shift: f64,
    pub pass: bool,
}

pub fn validate_jandl(data: &JandlTrivialData, n: usize, seed: u64) -> Result<JandlReport> {
    let target = data.omega.target.clone();
    if data.involution.target != target || data.connection.target != target {
        return Err(Error::InvalidInput(
            "involution and forms must share the target".into(),
        ));
    }
    let pts = sample_points(&WorldVolume::Full, &target, n, seed)?;
    let k_omega = data.involution.pull(&data.omega);
    let k_a = data.involution.pull(&data.connection);
    let per_point: Vec<(f64, f64, f64)> = pts
        .par_iter()
        .map(|p| {
            let basis = target.tangent_basis(p);
            let mut curv: f64 = 0.0;
            for c in combos(basis.len(), 2) {
                let t = [basis[c[0]].as_slice(), basis[c[1]].as_slice()];
                let rhs = -data.omega.eval(p, &t) - k_omega.eval(p, &t);
                let d = exterior_derivative_fd(&data.connection, p, &t).unwrap_or(f64::NAN);
                curv = curv.max(if d.is_nan() {
                    f64::INFINITY
                } else {
                    rel(rhs, d)
                });
            }
            let eq = (data.phi(&data.involution.apply(p)) - data.phi(p).inv()).norm();
            let mut shift: f64 = 0.0;
            for (i, v) in basis.iter().enumerate() {
                let lhs = data.connection.eval(p, &[v]) - k_a.eval(p, &[v]);
                let mut e = vec![0.0; basis.len()];
                e[i] = crate::fields::D_STEP;
                let plus = target.retract(p, &e);
                e[i] = -crate::fields::D_STEP;
                let minus = target.retract(p, &e);
                let dlog =
                    (data.phi(&plus) / data.phi(&minus)).arg() / (2.0 * crate::fields::D_STEP);
                shift = shift.max(rel(lhs, dlog / (2.0 * PI)));
            }
            (curv, eq, shift)
        })
        .collect();
    let max = |f: fn(&(f64, f64, f64)) -> f64| per_point.iter().map(f).fold(0.0f64, f64::max);
    let (curvature, equivariance, connection_shift) = (max(|x| x.0), max(|x| x.1), max(|x| x.2));
    Ok(JandlReport {
        samples: n,
        curvature,
        equivariance,
        connection_shift,
        pass: curvature <= CURVATURE_TOL
            && equivariance <= COCYCLE_TOL
            && connection_shift <= CURVATURE_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn torus_data() -> DeligneSurfaceData {
        let s = fixtures::torus_grid(4, 4);
        let charts = (0..s.faces().len()).map(|f| f % 3).collect();
        DeligneSurfaceData::trivial(s, charts)
    }

    #[test]
    fn zero_gauge_is_identity() {
        let d = torus_data();
        assert_eq!(gauge_transform(&d, &Gauge::default()).unwrap(), d);
    }

    #[test]
    fn gauge_then_inverse_restores() {
        let d = torus_data();
        let mut rng = sampling::rng(3);
        let g = Gauge::random(&d, &mut rng);
        let back = gauge_transform(&gauge_transform(&d, &g).unwrap(), &g.inverse()).unwrap();
        for (x, y) in back.b.iter().zip(&d.b).chain(back.a.iter().zip(&d.a)) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in back.g.iter().zip(&d.g) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_phase_gauge_moves_only_vertices() {
        let s = fixtures::torus_grid(4, 4);
        let charts = (0..s.faces().len()).collect();
        let d = DeligneSurfaceData::trivial(s, charts);
        let g = Gauge::constant_phases(&d, &mut sampling::rng(5));
        let t = gauge_transform(&d, &g).unwrap();
        assert_eq!(t.b, d.b);
        assert!(t.a.iter().zip(&d.a).all(|(x, y)| (x - y).abs() < 1e-15));
        assert!(t.g.iter().zip(&d.g).any(|(x, y)| (x - y).norm() > 1e-3));
    }

    #[test]
    fn cocycle_validation_is_local() {
        let s = fixtures::torus_grid(4, 4);
        let charts = (0..s.faces().len())
            .map(|f| if f < 16 { 0 } else { 1 })
            .collect();
        let mut d = DeligneSurfaceData::trivial(s, charts);
        assert!(validate_cocycle(&d).pass);
        d.g[5] = Complex64::from_polar(1.0, 0.3);
        let r = validate_cocycle(&d);
        assert!(!r.pass);
        assert_eq!(r.failing_vertices, vec![5]);
        assert!(r.failing_edges.is_empty());
    }

    #[test]
    fn gauge_preserves_cocycle() {
        let d = torus_data();
        let mut rng = sampling::rng(11);
        for _ in 0..50 {
            let g = Gauge::random(&d, &mut rng);
            assert!(validate_cocycle(&gauge_transform(&d, &g).unwrap()).pass);
        }
    }

    #[test]
    fn gauge_shape_mismatch() {
        let d = torus_data();
        let mut g = Gauge::default();
        g.pi.insert((0, 10_000), 1.0);
        assert!(matches!(
            gauge_transform(&d, &g),
            Err(Error::ShapeMismatch(_))
        ));
    }

    fn klein_jandl(phase: Complex64) -> JandlTrivialData {
        let t = TargetSpace::unit_torus();
        // k*(dx∧dy) = −dx∧dy, so −ω − k*ω = 0 and a flat L is allowed
        JandlTrivialData::new(
            fixtures::dxdy(t.clone(), 0.7),
            FormOracle::zero(1, t),
            move |_| phase,
            Involution::klein_shift(),
        )
    }

    #[test]
    fn jandl_constant_phases() {
        let ok = validate_jandl(&klein_jandl(Complex64::new(1.0, 0.0)), 50, 1).unwrap();
        assert!(ok.pass, "{ok:?}");
        assert!(
            validate_jandl(&klein_jandl(Complex64::new(-1.0, 0.0)), 50, 1)
                .unwrap()
                .pass
        );
        let bad = validate_jandl(&klein_jandl(Complex64::new(0.0, 1.0)), 50, 1).unwrap();
        assert!(!bad.pass && (bad.equivariance - 2.0).abs() < 1e-12);
    }

    #[test]
    fn jandl_verdict_is_involution_equivariant() {
        for z in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
            let d = klein_jandl(z);
            let a = validate_jandl(&d, 30, 2).unwrap().pass;
            let b = validate_jandl(&d.pulled_back(), 30, 2).unwrap().pass;
            assert_eq!(a, b);
        }
    }

    #[test]
    fn jandl_gauge_keeps_the_structure() {
        let mut rng = sampling::rng(3);
        for d in [
            fixtures::klein_data(0.3, true),
            fixtures::su2_constant_phase(Complex64::new(-1.0, 0.0)),
        ] {
            let dim = d.omega.target.ambient_dim();
            let g = jandl_gauge(
                &d,
                &TrigField::random(dim, &mut rng),
                &TrigField::random(dim, &mut rng),
            );
            let r = validate_jandl(&g, 40, 5).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn trivial_branes_pass() {
        let t = TargetSpace::Circle { radius: 1.0 };
        let brane = DBraneRecord {
            world_volume: WorldVolume::Full,
            omega: FormOracle::zero(2, t.clone()),
            module: Connection::Abelian(FormOracle::zero(1, t.clone())),
        };
        let r = validate_dbrane(&FormOracle::zero(3, t.clone()), &brane, 10, 0).unwrap();
        assert!(r.pass);
        assert!(matches!(
            validate_dbrane(&FormOracle::zero(3, t.clone()), &brane, 0, 0),
            Err(Error::EmptySampling)
        ));
        let prod = TargetSpace::product(t.clone(), t.clone());
        let bb = BiBraneRecord {
            world_volume: WorldVolume::ShiftedDiagonal { shift: 0.3 },
            varpi: FormOracle::zero(2, prod.clone()),
            bundle: Connection::Abelian(FormOracle::zero(1, prod)),
        };
        let z = FormOracle::zero(3, t);
        assert!(validate_bibrane(&z, &z, &bb, 20, 0).unwrap().pass);
    }

    #[test]
    fn world_volume_samples_are_members() {
        let t = TargetSpace::Su2;
        let wv = WorldVolume::Su2Class { theta: 1.1 };
        for u in sampling::halton_points(20, 2, 4) {
            assert!(wv.residual(&t, &wv.sample(&t, &u)) < 1e-12);
        }
        let p = TargetSpace::product(TargetSpace::Su2, TargetSpace::Su2);
        let wv = WorldVolume::Biconjugacy { theta: 0.4 };
        for u in sampling::halton_points(20, 5, 4) {
            assert!(wv.residual(&p, &wv.sample(&p, &u)) < 1e-12);
        }
    }
}
