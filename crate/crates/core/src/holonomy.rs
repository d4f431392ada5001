//! Surface holonomy engines: closed oriented, local (Deligne) data,
//! unoriented via the orientation double cover, with brane boundary and with
//! bi-brane defect circles.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{
    face_integrals, path_holonomy, side_integral, side_velocity, trace, FormOracle, Quadrature,
    SurfaceMap, TargetSpace,
};
use crate::gerbedata::{
    gauge_transform, validate_cocycle, BiBraneRecord, DBraneRecord, DeligneSurfaceData, Gauge,
    Involution, JandlTrivialData,
};
use crate::mesh::{
    self, Circle, DoubleCover, EdgeRef, Orientability, Side, TriangulatedSurface, VertexOrigin,
};
use crate::sampling;

/// Tolerance for vertex images on brane world volumes and for equivariance.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `|value(degree 4) − value(degree 2)|` for the area phase, if computed.
    pub quadrature_error: Option<f64>,
    /// Largest deviation over variants, when a harness produced the value.
    pub spread: Option<f64>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolonomyResult {
    pub value: Complex64,
    pub diagnostics: Diagnostics,
}

impl HolonomyResult {
    fn plain(value: Complex64) -> Self {
        HolonomyResult {
            value,
            diagnostics: Diagnostics::default(),
        }
    }

    pub fn is_unimodular(&self, tol: f64) -> bool {
        (self.value.norm() - 1.0).abs() <= tol
    }
}

fn phase(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * x)
}

fn require_oriented(s: &TriangulatedSurface, closed: bool) -> Result<()> {
    if s.orientability() != Orientability::Oriented || (closed && !s.is_closed()) {
        return Err(Error::NotClosedOriented);
    }
    Ok(())
}

/// Area phase `exp(2πi ∫ Φ*ω)` with a degree-2 vs degree-4 error estimate.
fn area_phase(omega: &FormOracle, map: &SurfaceMap) -> Result<(Complex64, f64)> {
    let hi: f64 = face_integrals(omega, map, Quadrature::Degree4)?
        .iter()
        .sum();
    let lo: f64 = face_integrals(omega, map, Quadrature::Degree2)?
        .iter()
        .sum();
    Ok((phase(hi), (phase(hi) - phase(lo)).norm()))
}

/// `exp(2πi ∫_Σ Φ*ω)` on a closed oriented surface.
pub fn holonomy_closed(omega: &FormOracle, map: &SurfaceMap) -> Result<HolonomyResult> {
    require_oriented(map.surface(), true)?;
    let (value, err) = area_phase(omega, map)?;
    Ok(HolonomyResult {
        value,
        diagnostics: Diagnostics {
            quadrature_error: Some(err),
            ..Default::default()
        },
    })
}

/// `exp(2πi (Σ_f b_f + Σ_e ε_e a_e)) Π_v g_v`, where `ε_e = ±1` says whether
/// the edge runs along the boundary of its first face.
pub fn holonomy_deligne(data: &DeligneSurfaceData) -> Result<HolonomyResult> {
    require_oriented(&data.surface, true)?;
    let report = validate_cocycle(data);
    if !report.pass {
        let mut bad = report.failing_vertices.clone();
        bad.extend(&report.failing_edges);
        return Err(Error::CocycleFailure(bad));
    }
    Ok(HolonomyResult::plain(deligne_value(data)))
}

/// Neumaier-compensated sum.
fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() {
            (sum - t) + x
        } else {
            (x - t) + sum
        };
        sum = t;
    }
    sum + comp
}

fn deligne_value(data: &DeligneSurfaceData) -> Complex64 {
    let s = &data.surface;
    let edges = (0..s.edges().len()).map(|e| {
        let first = s.side(s.incidence(e)[0]);
        if first.forward {
            data.a[e]
        } else {
            -data.a[e]
        }
    });
    let x = compensated_sum(data.b.iter().copied().chain(edges));
    let arg = compensated_sum(data.g.iter().map(|z| z.arg()));
    let modulus: f64 = data.g.iter().map(|z| z.norm()).product();
    Complex64::from_polar(modulus, 2.0 * PI * x.rem_euclid(1.0) + arg)
}

/// Lift choices for the unoriented engine, all entries `0` or `1`.
///
/// `faces[f]` is the sheet of the chosen preimage of face `f`. For an edge
/// whose adjacent face lifts are not adjacent in the double cover,
/// `edges[e]` picks which of its two lifts carries the transport. `points[v]`
/// picks the preimage of `v` whose fibre represents the descended bundle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lifts {
    pub faces: Vec<u8>,
    pub edges: Vec<u8>,
    pub points: Vec<u8>,
}

impl Lifts {
    pub fn canonical(base: &TriangulatedSurface) -> Self {
        Lifts {
            faces: vec![0; base.faces().len()],
            edges: vec![0; base.edges().len()],
            points: vec![0; base.n_vertices()],
        }
    }

    /// Number of bits in a full enumeration.
    pub fn bits(base: &TriangulatedSurface) -> usize {
        base.faces().len() + base.edges().len() + base.n_vertices()
    }

    /// The lift set encoded by the low bits of `code`.
    pub fn from_bits(base: &TriangulatedSurface, code: u64) -> Self {
        let mut k = 0;
        let mut take = |n: usize| {
            let v: Vec<u8> = (0..n).map(|i| ((code >> (k + i)) & 1) as u8).collect();
            k += n;
            v
        };
        let faces = take(base.faces().len());
        let edges = take(base.edges().len());
        let points = take(base.n_vertices());
        Lifts {
            faces,
            edges,
            points,
        }
    }

    pub fn random<R: Rng>(base: &TriangulatedSurface, rng: &mut R) -> Self {
        let mut bits = |n: usize| (0..n).map(|_| rng.gen_range(0..2u8)).collect();
        Lifts {
            faces: bits(base.faces().len()),
            edges: bits(base.edges().len()),
            points: bits(base.n_vertices()),
        }
    }
}

/// Per-cell quantities of the unoriented holonomy, independent of the lifts.
#[derive(Debug, Clone)]
pub struct UnorientedTerms {
    cover: DoubleCover,
    base: TriangulatedSurface,
    /// `∫` of `ω` over each total face.
    face: Vec<f64>,
    /// Transport of `L` along each side of each total face, in the face's
    /// boundary direction.
    side: Vec<[Complex64; 3]>,
    /// `φ` at the image of each total vertex.
    phi: Vec<Complex64>,
    /// Preimages of each base vertex, ascending.
    preimages: Vec<[usize; 2]>,
}

/// Check that `map` lives on the total space of `cover` and intertwines the
/// deck involution with `k` at vertex images.
pub fn check_equivariant(cover: &DoubleCover, map: &SurfaceMap, k: &Involution) -> Result<()> {
    let total = &cover.total;
    if map.surface() != total {
        return Err(Error::InvalidInput(
            "map is not defined on the double cover".into(),
        ));
    }
    if map.target() != &k.target {
        return Err(Error::InvalidInput(
            "map and involution have different targets".into(),
        ));
    }
    for v in 0..total.n_vertices() {
        let lhs = map.image(cover.deck_vertex[v]);
        let rhs = map.target().normalize(&k.apply(map.image(v)));
        let gap = map.target().distance(lhs, &rhs);
        if !(gap <= MEMBERSHIP_TOL) {
            return Err(Error::NotEquivariant {
                vertex: v,
                residual: gap,
            });
        }
    }
    Ok(())
}

impl UnorientedTerms {
    pub fn new(data: &JandlTrivialData, cover: &DoubleCover, map: &SurfaceMap) -> Result<Self> {
        check_equivariant(cover, map, &data.involution)?;
        let total = &cover.total;
        let face = face_integrals(&data.omega, map, Quadrature::Degree4)?;
        let side = (0..total.faces().len())
            .into_par_iter()
            .map(|f| {
                let mut out = [Complex64::new(1.0, 0.0); 3];
                for (l, s) in total.faces()[f].sides.iter().enumerate() {
                    out[l] = phase(side_integral(&data.connection, map, *s)?);
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        let phi = (0..total.n_vertices())
            .map(|v| data.phi(map.image(v)))
            .collect();
        let nb = cover.proj_vertex.iter().copied().max().map_or(0, |m| m + 1);
        let mut preimages = vec![[usize::MAX; 2]; nb];
        for (v, &b) in cover.proj_vertex.iter().enumerate() {
            let slot = if preimages[b][0] == usize::MAX { 0 } else { 1 };
            preimages[b][slot] = v;
        }
        let base = base_of(cover)?;
        Ok(UnorientedTerms {
            cover: cover.clone(),
            base,
            face,
            side,
            phi,
            preimages,
        })
    }

    pub fn base(&self) -> &TriangulatedSurface {
        &self.base
    }

    fn check(&self, lifts: &Lifts) -> Result<()> {
        let b = &self.base;
        let ok = lifts.faces.len() == b.faces().len()
            && lifts.edges.len() == b.edges().len()
            && lifts.points.len() == b.n_vertices()
            && lifts
                .faces
                .iter()
                .chain(&lifts.edges)
                .chain(&lifts.points)
                .all(|&x| x <= 1);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(
                "lift structure does not match the double cover".into(),
            ))
        }
    }

    /// Edges whose chosen face lifts are not adjacent in the cover.
    pub fn reversing_edges(&self, lifts: &Lifts) -> Vec<usize> {
        (0..self.base.edges().len())
            .filter(|&e| {
                let inc = self.base.incidence(e);
                let t1 = mesh::edge_sheet(&self.base, inc[0], lifts.faces[inc[0].face]);
                let t2 = mesh::edge_sheet(&self.base, inc[1], lifts.faces[inc[1].face]);
                t1 != t2
            })
            .collect()
    }

    /// The holonomy for one choice of lifts: the area of the chosen face
    /// lifts times the holonomy of the descended bundle around the
    /// orientation-reversing edges, each traversed in the direction induced
    /// by its adjacent lifted faces.
    pub fn evaluate(&self, lifts: &Lifts) -> Result<Complex64> {
        self.check(lifts)?;
        let total = &self.cover.total;
        let area: f64 = (0..self.base.faces().len())
            .map(|f| self.face[self.cover.lift_face(f, lifts.faces[f])])
            .sum();
        let reference = |w: usize| {
            self.preimages[self.cover.proj_vertex[w]]
                [lifts.points[self.cover.proj_vertex[w]] as usize]
        };
        let mut z = phase(area);
        for e in self.reversing_edges(lifts) {
            let r: EdgeRef = self.base.incidence(e)[lifts.edges[e] as usize];
            let s = lifts.faces[r.face];
            let tf = self.cover.lift_face(r.face, s);
            // sheet 1 reverses the corner order, so local side l becomes 2 - l
            let l = if s == 0 { r.local } else { 2 - r.local };
            let side: Side = total.faces()[tf].sides[l];
            let (x, y) = (total.side_start(side), total.side_end(side));
            z *= self.side[tf][l];
            if x != reference(x) {
                z *= self.phi[x];
            }
            if y != reference(y) {
                z /= self.phi[y];
            }
        }
        Ok(z)
    }
}

/// Base surface of a double cover, rebuilt from the total faces of sheet 0.
fn base_of(cover: &DoubleCover) -> Result<TriangulatedSurface> {
    let total = &cover.total;
    let nf = total.faces().len() / 2;
    let nb = cover.proj_vertex.iter().copied().max().map_or(0, |m| m + 1);
    let faces: Vec<[usize; 3]> = (0..nf)
        .map(|f| total.faces()[2 * f].corners.map(|c| cover.proj_vertex[c]))
        .collect();
    // sheet-0 faces keep the base corner order and edge directions
    let face_edges = (0..nf)
        .map(|f| total.faces()[2 * f].sides.map(|s| (s.edge / 2, s.forward)))
        .collect();
    TriangulatedSurface::from_faces(nb, faces, face_edges, Vec::new(), Vec::new())
}

/// `exp(2πi Σ_f ∫_{f_or} ω) Π_c Hol_{L̄}(c)` for a trivial Jandl structure,
/// evaluated on a deck-equivariant map from the orientation double cover.
pub fn holonomy_unoriented(
    data: &JandlTrivialData,
    cover: &DoubleCover,
    map: &SurfaceMap,
    lifts: &Lifts,
) -> Result<HolonomyResult> {
    let terms = UnorientedTerms::new(data, cover, map)?;
    let value = terms.evaluate(lifts)?;
    let n = terms.reversing_edges(lifts).len();
    Ok(HolonomyResult {
        value,
        diagnostics: Diagnostics {
            notes: vec![format!("{n} orientation-reversing edges")],
            ..Default::default()
        },
    })
}

/// Equivariant map on the double cover of `base`: sheet 0 of face `f` gets
/// the corner points `lifts[f]` and sheet 1 their images under `k`.
pub fn cover_map(
    base: &TriangulatedSurface,
    target: TargetSpace,
    k: &Involution,
    lifts: &[[Vec<f64>; 3]],
) -> Result<(DoubleCover, SurfaceMap)> {
    if lifts.len() != base.faces().len() {
        return Err(Error::ShapeMismatch(format!(
            "{} face lifts for {} faces",
            lifts.len(),
            base.faces().len()
        )));
    }
    let cover = mesh::orientation_double_cover(base)?;
    let mut total_lifts = Vec::with_capacity(2 * lifts.len());
    for c in lifts {
        total_lifts.push(c.clone());
        total_lifts.push([k.apply(&c[0]), k.apply(&c[2]), k.apply(&c[1])]);
    }
    let map = SurfaceMap::from_face_lifts(cover.total.clone(), target, &total_lifts)?;
    check_equivariant(&cover, &map, k)?;
    Ok((cover, map))
}

/// Barycentric coordinates of a subdivision vertex in child face `cf`'s parent.
fn child_bary(base: &TriangulatedSurface, cf: usize, v: usize) -> [f64; 3] {
    let l = (cf % 6) / 2;
    let h = cf % 2;
    let mut b = [0.0; 3];
    match mesh::subdivision_origin(base, v) {
        VertexOrigin::FaceCenter(_) => b = [1.0 / 3.0; 3],
        VertexOrigin::EdgeMid(_) => {
            b[l] = 0.5;
            b[(l + 1) % 3] = 0.5;
        }
        VertexOrigin::Vertex(_) => b[if h == 0 { l } else { (l + 1) % 3 }] = 1.0,
    }
    b
}

/// The double cover of the barycentric subdivision of the base, with the
/// map restricted from `map`.
pub fn subdivide_cover(cover: &DoubleCover, map: &SurfaceMap) -> Result<(DoubleCover, SurfaceMap)> {
    let base = base_of(cover)?;
    let sub = mesh::subdivide(&base);
    let new_cover = mesh::orientation_double_cover(&sub)?;
    let mut lifts = Vec::with_capacity(2 * sub.faces().len());
    for (cf, face) in sub.faces().iter().enumerate() {
        let parent = cf / 6;
        for s in 0..2u8 {
            let point = |v: usize| {
                let b = child_bary(&base, cf, v);
                // sheet 1 lists the parent corners as c0, c2, c1
                let b = if s == 0 { b } else { [b[0], b[2], b[1]] };
                map.interpolate(cover.lift_face(parent, s), b)
            };
            let [a, b, c] = face.corners.map(point);
            lifts.push(if s == 0 { [a, b, c] } else { [a, c, b] });
        }
    }
    let new_map =
        SurfaceMap::from_face_lifts(new_cover.total.clone(), map.target().clone(), &lifts)?;
    Ok((new_cover, new_map))
}

fn check_on_world_volume(
    map: &SurfaceMap,
    circles: &[Circle],
    residual: impl Fn(&[f64]) -> f64,
) -> Result<()> {
    for c in circles {
        for v in c.vertices(map.surface()) {
            let r = residual(map.image(v));
            if !(r <= MEMBERSHIP_TOL) {
                return Err(Error::LeavesWorldVolume {
                    vertex: v,
                    residual: r,
                });
            }
        }
    }
    Ok(())
}

/// `exp(2πi ∫_Σ Φ*ρ) Π_{c ⊂ ∂Σ} tr Hol_E(c)` for a brane with Chan-Paton
/// module `E`, boundary circles oriented as the boundary of `Σ`.
pub fn holonomy_boundary(
    rho: &FormOracle,
    brane: &DBraneRecord,
    map: &SurfaceMap,
) -> Result<HolonomyResult> {
    let circles = map.surface().boundary().to_vec();
    boundary_with_circles(rho, brane, map, &circles)
}

fn boundary_with_circles(
    rho: &FormOracle,
    brane: &DBraneRecord,
    map: &SurfaceMap,
    circles: &[Circle],
) -> Result<HolonomyResult> {
    require_oriented(map.surface(), false)?;
    if brane.module.rank() == 0 {
        return Err(Error::ZeroRank);
    }
    let target = map.target().clone();
    check_on_world_volume(map, circles, |p| brane.world_volume.residual(&target, p))?;
    let (area, err) = area_phase(rho, map)?;
    let mut value = area;
    for c in circles {
        value *= trace(&crate::fields::line_holonomy(&brane.module, map, c)?);
    }
    Ok(HolonomyResult {
        value,
        diagnostics: Diagnostics {
            quadrature_error: Some(err),
            ..Default::default()
        },
    })
}

/// A defect circle `S` between the two sides of a split surface.
///
/// `left` is `S` as a boundary circle of `Σ₁`; `right` walks the same circle
/// in the same direction on `Σ₂`, step by step alongside `left`, so its
/// reversal is a boundary circle of `Σ₂`.
#[derive(Debug, Clone)]
pub struct DefectCircle {
    pub bibrane: BiBraneRecord,
    pub left: Circle,
    pub right: Circle,
}

fn same_cycle(a: &Circle, b: &Circle) -> bool {
    let n = a.steps.len();
    n == b.steps.len() && (0..n).any(|k| a.rotated(k) == *b)
}

fn match_boundary(surface: &TriangulatedSurface, c: &Circle) -> Result<usize> {
    if let Some(i) = surface.boundary().iter().position(|b| same_cycle(b, c)) {
        return Ok(i);
    }
    if surface
        .boundary()
        .iter()
        .any(|b| same_cycle(b, &c.reversed()))
    {
        return Err(Error::CircleOrientation(
            "defect circle runs against the boundary orientation".into(),
        ));
    }
    Err(Error::InvalidInput(
        "defect circle is not a boundary circle".into(),
    ))
}

/// `exp(2πi ∫_{Σ₁} ρ₁) exp(2πi ∫_{Σ₂} ρ₂) Π_S tr Hol_E(S)` where `E` is the
/// bundle of the bi-brane on each defect circle `S`, pulled back along
/// `(φ₁, φ₂)`. Every boundary circle of `Σ₁` and `Σ₂` must be a defect.
pub fn holonomy_defect(
    rho1: &FormOracle,
    rho2: &FormOracle,
    defects: &[DefectCircle],
    map1: &SurfaceMap,
    map2: &SurfaceMap,
) -> Result<HolonomyResult> {
    require_oriented(map1.surface(), false)?;
    require_oriented(map2.surface(), false)?;
    let (s1, s2) = (map1.surface(), map2.surface());
    let mut used1 = vec![false; s1.boundary().len()];
    let mut used2 = vec![false; s2.boundary().len()];
    for d in defects {
        let i = match_boundary(s1, &d.left)?;
        let j = match_boundary(s2, &d.right.reversed())?;
        if used1[i] || used2[j] {
            return Err(Error::InvalidInput(
                "boundary circle used by two defects".into(),
            ));
        }
        used1[i] = true;
        used2[j] = true;
        let product = TargetSpace::product(map1.target().clone(), map2.target().clone());
        if d.bibrane.varpi.target != product {
            return Err(Error::InvalidInput(
                "bi-brane target is not the product of the two targets".into(),
            ));
        }
    }
    if used1.iter().chain(&used2).any(|u| !u) {
        return Err(Error::InvalidInput(
            "every boundary circle must carry a defect".into(),
        ));
    }
    let (a1, e1) = area_phase(rho1, map1)?;
    let (a2, e2) = area_phase(rho2, map2)?;
    let mut value = a1 * a2;
    for d in defects {
        value *= trace(&defect_transport(d, map1, map2)?);
    }
    Ok(HolonomyResult {
        value,
        diagnostics: Diagnostics {
            quadrature_error: Some(e1 + e2),
            ..Default::default()
        },
    })
}

fn defect_transport(
    d: &DefectCircle,
    map1: &SurfaceMap,
    map2: &SurfaceMap,
) -> Result<DMatrix<Complex64>> {
    let product = d.bibrane.varpi.target.clone();
    let (v1, v2) = (
        d.left.vertices(map1.surface()),
        d.right.vertices(map2.surface()),
    );
    for (&a, &b) in v1.iter().zip(&v2) {
        let mut p = map1.image(a).to_vec();
        p.extend_from_slice(map2.image(b));
        let r = d.bibrane.world_volume.residual(&product, &p);
        if !(r <= MEMBERSHIP_TOL) {
            return Err(Error::LeavesWorldVolume {
                vertex: a,
                residual: r,
            });
        }
    }
    let path = |i: usize, t: f64| {
        let (mut p, mut v) = side_velocity(map1, d.left.steps[i], t);
        let (p2, v2) = side_velocity(map2, d.right.steps[i], t);
        p.extend(p2);
        v.extend(v2);
        (p, v)
    };
    path_holonomy(&d.bibrane.bundle, d.left.steps.len(), &path)
}

/// A computation for [`independence_harness`].
#[derive(Debug, Clone)]
pub enum Computation {
    Closed {
        omega: FormOracle,
        map: SurfaceMap,
    },
    Deligne {
        data: DeligneSurfaceData,
    },
    Unoriented {
        data: JandlTrivialData,
        cover: DoubleCover,
        map: SurfaceMap,
    },
    Boundary {
        rho: FormOracle,
        brane: DBraneRecord,
        map: SurfaceMap,
    },
}

/// Which reruns to perform.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Variations {
    /// Barycentric subdivision levels beyond the input (closed, unoriented).
    #[serde(default)]
    pub subdivisions: usize,
    /// Random gauge transforms (Deligne).
    #[serde(default)]
    pub gauges: usize,
    /// Lift choices (unoriented): `None` skips, `Some(0)` enumerates all,
    /// `Some(n)` samples `n` at random.
    #[serde(default)]
    pub lifts: Option<usize>,
    /// Rotate the base point of every boundary circle (boundary).
    #[serde(default)]
    pub basepoints: bool,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub baseline: Complex64,
    pub variants: usize,
    /// Largest pairwise distance between the values of all variants.
    pub spread: f64,
    /// `(kind, variants, spread)` per variation kind.
    pub by_kind: Vec<(String, usize, f64)>,
}

fn spread(values: &[Complex64]) -> f64 {
    let mut m: f64 = 0.0;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            m = m.max((a - b).norm());
        }
    }
    m
}

/// Largest full lift enumeration accepted by the harness.
pub const MAX_LIFT_BITS: usize = 20;

/// Rerun a computation under the requested variations and report how far
/// the values drift apart. Errors of the baseline are returned; errors of
/// variants are reported as notes-free infinite spread.
pub fn independence_harness(comp: &Computation, var: &Variations) -> Result<IndependenceReport> {
    let mut rng = sampling::rng(var.seed);
    let mut kinds: Vec<(String, Vec<Complex64>)> = Vec::new();
    let baseline = match comp {
        Computation::Closed { omega, map } => {
            let base = holonomy_closed(omega, map)?.value;
            let mut vals = vec![base];
            let mut m = map.clone();
            for _ in 0..var.subdivisions {
                m = m.subdivide();
                vals.push(
                    holonomy_closed(omega, &m)
                        .map_or(Complex64::new(f64::INFINITY, 0.0), |r| r.value),
                );
            }
            kinds.push(("subdivision".into(), vals));
            base
        }
        Computation::Deligne { data } => {
            let base = holonomy_deligne(data)?.value;
            let gauges: Vec<Gauge> = (0..var.gauges)
                .map(|_| Gauge::random(data, &mut rng))
                .collect();
            let mut vals: Vec<Complex64> = gauges
                .par_iter()
                .map(|g| {
                    gauge_transform(data, g)
                        .map_or(Complex64::new(f64::INFINITY, 0.0), |d| deligne_value(&d))
                })
                .collect();
            vals.insert(0, base);
            kinds.push(("gauge".into(), vals));
            base
        }
        Computation::Unoriented { data, cover, map } => {
            let terms = UnorientedTerms::new(data, cover, map)?;
            let canon = Lifts::canonical(terms.base());
            let base = terms.evaluate(&canon)?;
            if let Some(n) = var.lifts {
                let lifts: Vec<Lifts> = if n == 0 {
                    let bits = Lifts::bits(terms.base());
                    if bits > MAX_LIFT_BITS {
                        return Err(Error::InvalidInput(format!(
                            "{bits} lift bits exceed the enumeration limit"
                        )));
                    }
                    (0..1u64 << bits)
                        .map(|c| Lifts::from_bits(terms.base(), c))
                        .collect()
                } else {
                    (0..n)
                        .map(|_| Lifts::random(terms.base(), &mut rng))
                        .collect()
                };
                let vals: Vec<Complex64> = lifts
                    .par_iter()
                    .map(|l| terms.evaluate(l))
                    .collect::<Result<_>>()?;
                kinds.push(("lifts".into(), vals));
            }
            if var.subdivisions > 0 {
                let mut vals = vec![base];
                let (mut c, mut m) = (cover.clone(), map.clone());
                for _ in 0..var.subdivisions {
                    (c, m) = subdivide_cover(&c, &m)?;
                    let t = UnorientedTerms::new(data, &c, &m)?;
                    vals.push(t.evaluate(&Lifts::canonical(t.base()))?);
                }
                kinds.push(("subdivision".into(), vals));
            }
            base
        }
        Computation::Boundary { rho, brane, map } => {
            let base = holonomy_boundary(rho, brane, map)?.value;
            if var.basepoints {
                let circles = map.surface().boundary();
                let longest = circles.iter().map(|c| c.steps.len()).max().unwrap_or(0);
                let mut vals = vec![base];
                for k in 1..longest {
                    let rotated: Vec<Circle> = circles
                        .iter()
                        .map(|c| c.rotated(k % c.steps.len()))
                        .collect();
                    vals.push(boundary_with_circles(rho, brane, map, &rotated)?.value);
                }
                kinds.push(("basepoint".into(), vals));
            }
            base
        }
    };
    let mut all = vec![baseline];
    let mut by_kind = Vec::new();
    for (name, vals) in &kinds {
        by_kind.push((name.clone(), vals.len(), spread(vals)));
        all.extend(vals.iter().copied());
    }
    Ok(IndependenceReport {
        baseline,
        variants: all.len() - 1,
        spread: spread(&all),
        by_kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Connection;
    use crate::fixtures;
    use crate::gerbedata::{DBraneRecord, WorldVolume};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_form_gives_one() {
        let map = fixtures::torus_identity_map(4, 4);
        let r = holonomy_closed(&FormOracle::zero(2, TargetSpace::unit_torus()), &map).unwrap();
        assert!((r.value - 1.0).norm() < 1e-15);
    }

    #[test]
    fn degree_map_multiplies_the_flux() {
        for d in [-2i64, 1, 3] {
            let map = fixtures::torus_degree_map(6, 6, d);
            let cc = 0.137;
            let r = holonomy_closed(&fixtures::dxdy(TargetSpace::unit_torus(), cc), &map).unwrap();
            assert!((r.value - phase(d as f64 * cc)).norm() < 1e-6, "d={d}");
            assert!(r.is_unimodular(1e-9));
        }
    }

    #[test]
    fn closed_engine_rejects_open_and_unoriented_surfaces() {
        let omega = FormOracle::zero(2, TargetSpace::unit_torus());
        let disk = SurfaceMap::new(
            fixtures::disk(),
            TargetSpace::unit_torus(),
            vec![vec![0.0, 0.0]; 7],
            None,
        )
        .unwrap();
        assert!(matches!(
            holonomy_closed(&omega, &disk),
            Err(Error::NotClosedOriented)
        ));
    }

    #[test]
    fn reversal_conjugates() {
        let map = fixtures::torus_identity_map(4, 4);
        let om = fixtures::dxdy(TargetSpace::unit_torus(), 0.3);
        let a = holonomy_closed(&om, &map).unwrap().value;
        let b = holonomy_closed(&om, &map.reversed()).unwrap().value;
        assert!((a - b.conj()).norm() < 1e-9);
    }

    /// Flat torus data: distinct charts per face, `b = a = 0`, and a phase
    /// `e^{iθ}` at one vertex where several charts meet.
    #[test]
    fn aharonov_bohm_angle() {
        for theta in [PI / 2.0, PI, 4.0 * PI / 3.0] {
            let d = fixtures::ab_torus(theta);
            // brute-force product over every cell
            let oracle = d.g.iter().product::<Complex64>();
            let r = holonomy_deligne(&d).unwrap();
            assert!((r.value - oracle).norm() < 1e-12);
            assert!((r.value - Complex64::from_polar(1.0, theta)).norm() < 1e-9);
        }
    }

    #[test]
    fn deligne_is_gauge_invariant() {
        let d = fixtures::ab_torus(1.0);
        let rep = independence_harness(
            &Computation::Deligne { data: d },
            &Variations {
                gauges: 50,
                seed: 4,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(rep.spread <= 1e-12, "{rep:?}");
    }

    #[test]
    fn deligne_rejects_broken_cocycles() {
        let mut d = DeligneSurfaceData::trivial(fixtures::torus_grid(3, 3), vec![0; 18]);
        d.g[0] = c(0.0, 1.0);
        assert!(matches!(
            holonomy_deligne(&d),
            Err(Error::CocycleFailure(_))
        ));
    }

    #[test]
    fn unoriented_gauge_invariance() {
        use crate::gerbedata::{jandl_gauge, TrigField};
        let mut rng = sampling::rng(8);
        let (rp2_cover, rp2_map) = fixtures::su2_rp2();
        let (k_cover, k_map) = cover_map(
            &fixtures::klein_min(),
            TargetSpace::unit_torus(),
            &Involution::klein_shift(),
            &fixtures::klein_min_lifts(),
        )
        .unwrap();
        let cases = [
            (
                fixtures::su2_constant_phase(c(-1.0, 0.0)),
                rp2_cover,
                rp2_map,
                1e-12,
            ),
            (fixtures::klein_data(0.37, true), k_cover, k_map, 1e-12),
        ];
        for (data, cover, map, tol) in cases {
            let eval = |d: &JandlTrivialData| {
                let t = UnorientedTerms::new(d, &cover, &map).unwrap();
                t.evaluate(&Lifts::canonical(t.base())).unwrap()
            };
            let base = eval(&data);
            let dim = data.omega.target.ambient_dim();
            for _ in 0..20 {
                let g = jandl_gauge(
                    &data,
                    &TrigField::random(dim, &mut rng),
                    &TrigField::random(dim, &mut rng),
                );
                let v = eval(&g);
                assert!((v - base).norm() <= tol, "{v} vs {base}");
            }
        }
    }

    #[test]
    fn rp2_with_minus_one_phase() {
        let (cover, map) = fixtures::su2_rp2();
        let data = JandlTrivialData::new(
            FormOracle::zero(2, TargetSpace::Su2),
            FormOracle::zero(1, TargetSpace::Su2),
            |_| c(-1.0, 0.0),
            Involution::su2_inverse(),
        );
        let terms = UnorientedTerms::new(&data, &cover, &map).unwrap();
        let base = terms.base().clone();
        for code in 0..1u64 << Lifts::bits(&base) {
            let v = terms.evaluate(&Lifts::from_bits(&base, code)).unwrap();
            assert_eq!(v, c(-1.0, 0.0), "lifts {code:b}");
        }
    }

    #[test]
    fn rp2_with_trivial_phase() {
        let (cover, map) = fixtures::su2_rp2();
        let data = JandlTrivialData::new(
            FormOracle::zero(2, TargetSpace::Su2),
            FormOracle::zero(1, TargetSpace::Su2),
            |_| c(1.0, 0.0),
            Involution::su2_inverse(),
        );
        let r = holonomy_unoriented(&data, &cover, &map, &Lifts::canonical(&fixtures::rp2_min()))
            .unwrap();
        assert_eq!(r.value, c(1.0, 0.0));
    }

    #[test]
    fn non_equivariant_maps_are_rejected() {
        let (cover, map) = fixtures::su2_rp2();
        let data = JandlTrivialData::new(
            FormOracle::zero(2, TargetSpace::Su2),
            FormOracle::zero(1, TargetSpace::Su2),
            |_| c(1.0, 0.0),
            Involution::su2_minus_inverse(),
        );
        assert!(matches!(
            UnorientedTerms::new(&data, &cover, &map),
            Err(Error::NotEquivariant { .. })
        ));
    }

    /// Klein bottle as `[0, ½] × [0, 1]` with `(0, y) ~ (½, 1 − y)`.

    #[test]
    fn klein_bottle_flux_and_lift_independence() {
        let base = fixtures::klein_min();
        let (cover, map) = cover_map(
            &base,
            TargetSpace::unit_torus(),
            &Involution::klein_shift(),
            &fixtures::klein_min_lifts(),
        )
        .unwrap();
        for twisted in [false, true] {
            let cc = 0.37;
            let data = fixtures::klein_data(cc, twisted);
            let comp = Computation::Unoriented {
                data,
                cover: cover.clone(),
                map: map.clone(),
            };
            let rep = independence_harness(
                &comp,
                &Variations {
                    lifts: Some(0),
                    ..Default::default()
                },
            )
            .unwrap();
            assert_eq!(rep.variants, 1 << Lifts::bits(&base));
            assert!(rep.spread <= 1e-6, "twisted={twisted}: {rep:?}");
            if !twisted {
                assert!((rep.baseline - Complex64::from_polar(1.0, PI * cc)).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn klein_bottle_under_subdivision() {
        let base = fixtures::klein_min();
        let (cover, map) = cover_map(
            &base,
            TargetSpace::unit_torus(),
            &Involution::klein_shift(),
            &fixtures::klein_min_lifts(),
        )
        .unwrap();
        let comp = Computation::Unoriented {
            data: fixtures::klein_data(0.37, true),
            cover,
            map,
        };
        let rep = independence_harness(
            &comp,
            &Variations {
                subdivisions: 2,
                lifts: Some(64),
                seed: 3,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(rep.spread <= 1e-5, "{rep:?}");
    }

    fn full_brane(module: Connection) -> DBraneRecord {
        DBraneRecord {
            world_volume: WorldVolume::Full,
            omega: FormOracle::zero(2, TargetSpace::unit_torus()),
            module,
        }
    }

    #[test]
    fn trivial_disk_gives_one() {
        let t = TargetSpace::unit_torus();
        let brane = full_brane(Connection::Abelian(FormOracle::zero(1, t.clone())));
        let r =
            holonomy_boundary(&FormOracle::zero(2, t), &brane, &fixtures::disk_map(0.2)).unwrap();
        assert!((r.value - 1.0).norm() < 1e-15);
    }

    #[test]
    fn stokes_cancellation() {
        let t = TargetSpace::unit_torus();
        let map = fixtures::disk_map(0.2).subdivide().subdivide();
        let rho = fixtures::dxdy(t.clone(), 0.7);
        let module = Connection::direct_sum(vec![FormOracle::new(1, "a", t.clone(), |p, v| {
            0.3 * p[0] * v[0][1]
        })]);
        let brane = full_brane(module.clone());
        let base = holonomy_boundary(&rho, &brane, &map).unwrap().value;
        // λ = sin(2πx) cos(2πy) dy, curvature dλ
        let lambda = FormOracle::new(1, "lambda", t.clone(), |p, v| {
            (2.0 * PI * p[0]).sin() * (2.0 * PI * p[1]).cos() * v[0][1]
        });
        let curv = crate::fields::FormOracle::new(2, "dlambda", t.clone(), |p, v| {
            2.0 * PI
                * (2.0 * PI * p[0]).cos()
                * (2.0 * PI * p[1]).cos()
                * (v[0][0] * v[1][1] - v[0][1] * v[1][0])
        });
        let brane2 = full_brane(module.twisted(&lambda.scaled(-1.0)));
        let moved = holonomy_boundary(&rho.plus(&curv), &brane2, &map)
            .unwrap()
            .value;
        assert!((base - moved).norm() < 1e-6, "{base} vs {moved}");
    }

    #[test]
    fn direct_sum_traces_add() {
        let t = TargetSpace::unit_torus();
        let map = fixtures::disk_map(0.2);
        let a1 = FormOracle::new(1, "a1", t.clone(), |p, v| 0.4 * p[0] * v[0][1]);
        let a2 = FormOracle::new(1, "a2", t.clone(), |p, v| -0.9 * p[0] * v[0][1]);
        let zero = FormOracle::zero(2, t.clone());
        let h = |a: &FormOracle| {
            holonomy_boundary(&zero, &full_brane(Connection::Abelian(a.clone())), &map)
                .unwrap()
                .value
        };
        let sum = holonomy_boundary(
            &zero,
            &full_brane(Connection::direct_sum(vec![a1.clone(), a2.clone()])),
            &map,
        )
        .unwrap()
        .value;
        assert!((sum - h(&a1) - h(&a2)).norm() < 1e-8);
        assert!(sum.norm() < 2.0);
    }

    #[test]
    fn boundary_must_stay_on_the_brane() {
        let t = TargetSpace::unit_torus();
        let brane = DBraneRecord {
            world_volume: WorldVolume::Point {
                point: vec![0.5, 0.5],
            },
            omega: FormOracle::zero(2, t.clone()),
            module: Connection::Abelian(FormOracle::zero(1, t.clone())),
        };
        let r = holonomy_boundary(&FormOracle::zero(2, t), &brane, &fixtures::disk_map(0.2));
        assert!(matches!(r, Err(Error::LeavesWorldVolume { .. })));
    }

    #[test]
    fn zero_rank_module_is_rejected() {
        let t = TargetSpace::unit_torus();
        let brane = full_brane(Connection::direct_sum(vec![]));
        assert!(matches!(
            holonomy_boundary(&FormOracle::zero(2, t), &brane, &fixtures::disk_map(0.2)),
            Err(Error::ZeroRank)
        ));
    }

    #[test]
    fn basepoint_rotation_is_harmless() {
        let t = TargetSpace::unit_torus();
        let module = Connection::direct_sum(vec![
            FormOracle::new(1, "a", t.clone(), |p, v| 0.3 * p[0] * v[0][1]),
            FormOracle::new(1, "b", t.clone(), |p, v| 0.1 * p[1] * v[0][0]),
        ]);
        let comp = Computation::Boundary {
            rho: fixtures::dxdy(t, 0.2),
            brane: full_brane(module),
            map: fixtures::disk_map(0.2),
        };
        let rep = independence_harness(
            &comp,
            &Variations {
                basepoints: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(rep.spread < 1e-8, "{rep:?}");
    }

    #[test]
    fn diagonal_defects_glue_back() {
        let (n, m) = (6, 6);
        let (m1, m2) = fixtures::split_torus_maps(n, m);
        let t = TargetSpace::unit_torus();
        let rho = fixtures::dxdy(t.clone(), 0.41);
        let defects = fixtures::split_defects(
            m1.surface(),
            m2.surface(),
            n,
            m / 2,
            fixtures::diagonal_bibrane(t.clone()),
            fixtures::diagonal_bibrane(t),
        );
        let split = holonomy_defect(&rho, &rho, &defects, &m1, &m2)
            .unwrap()
            .value;
        let glued = holonomy_closed(&rho, &fixtures::torus_identity_map(n, m))
            .unwrap()
            .value;
        assert!((split - glued).norm() < 1e-6, "{split} vs {glued}");
    }

    #[test]
    fn free_boson_wilson_factor() {
        use crate::freeboson::{Frac, FreeBosonBiBrane};
        let radius = 1.0 / (2.0 * PI);
        let zero = FormOracle::zero(2, TargetSpace::Circle { radius });
        for (w, a) in [
            (1i64, Frac::new(1, 3)),
            (3, Frac::new(2, 7)),
            (-2, Frac::new(1, 5)),
        ] {
            let bb = FreeBosonBiBrane::new(radius, Frac::new(1, 4), a).unwrap();
            let (n, rows) = (8, 2);
            let (m1, m2) = fixtures::free_boson_split(n, rows, w, bb.shift(), radius);
            let id = FreeBosonBiBrane::identity(radius).unwrap();
            let defects = fixtures::split_defects(
                m1.surface(),
                m2.surface(),
                n,
                rows,
                bb.record(),
                id.record(),
            );
            let v = holonomy_defect(&zero, &zero, &defects, &m1, &m2)
                .unwrap()
                .value;
            let alpha = *a.numer() as f64 / *a.denom() as f64;
            assert!((v - phase(alpha * w as f64)).norm() < 1e-9, "w={w}: {v}");
        }
    }

    #[test]
    fn defect_must_follow_the_boundary_orientation() {
        let (n, m) = (4, 4);
        let (m1, m2) = fixtures::split_torus_maps(n, m);
        let t = TargetSpace::unit_torus();
        let mut defects = fixtures::split_defects(
            m1.surface(),
            m2.surface(),
            n,
            m / 2,
            fixtures::diagonal_bibrane(t.clone()),
            fixtures::diagonal_bibrane(t.clone()),
        );
        defects[0].left = defects[0].left.reversed();
        let zero = FormOracle::zero(2, t);
        assert!(matches!(
            holonomy_defect(&zero, &zero, &defects, &m1, &m2),
            Err(Error::CircleOrientation(_))
        ));
    }

    #[test]
    fn defect_must_lie_on_the_bibrane() {
        use crate::freeboson::{Frac, FreeBosonBiBrane};
        let radius = 1.0;
        let zero = FormOracle::zero(2, TargetSpace::Circle { radius });
        let bb = FreeBosonBiBrane::new(radius, Frac::new(1, 4), Frac::new(0, 1)).unwrap();
        let (m1, m2) = fixtures::free_boson_split(4, 1, 1, 0.3, radius);
        let defects =
            fixtures::split_defects(m1.surface(), m2.surface(), 4, 1, bb.record(), bb.record());
        assert!(matches!(
            holonomy_defect(&zero, &zero, &defects, &m1, &m2),
            Err(Error::LeavesWorldVolume { .. })
        ));
    }
}
