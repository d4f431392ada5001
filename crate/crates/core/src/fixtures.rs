//! Shipped surfaces and maps.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::Result;
use crate::fields::{Atom, Connection, FormOracle, SurfaceMap, TargetSpace};
use crate::gerbedata::{
    BiBraneRecord, DBraneRecord, DeligneSurfaceData, Involution, JandlTrivialData, WorldVolume,
};
use crate::holonomy::DefectCircle;
use crate::mesh::{self, Circle, DoubleCover, SurfaceSpec, TriangulatedSurface};
use crate::quat;

fn build(spec: SurfaceSpec) -> TriangulatedSurface {
    TriangulatedSurface::build(spec).expect("fixture is valid")
}

pub fn tetra_spec() -> SurfaceSpec {
    SurfaceSpec {
        vertices: 4,
        faces: vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]],
        ..Default::default()
    }
}

/// Boundary of a tetrahedron.
pub fn sphere_tetra() -> TriangulatedSurface {
    build(tetra_spec())
}

/// Boundary of an octahedron with vertices `±x, ±y, ±z` (ids 0..6 in that order).
pub fn sphere_octa() -> TriangulatedSurface {
    let (px, nx, py, ny, pz, nz) = (0, 1, 2, 3, 4, 5);
    build(SurfaceSpec {
        vertices: 6,
        faces: vec![
            [px, py, pz],
            [py, nx, pz],
            [nx, ny, pz],
            [ny, px, pz],
            [py, px, nz],
            [nx, py, nz],
            [ny, nx, nz],
            [px, ny, nz],
        ],
        ..Default::default()
    })
}

/// Torus from one vertex, three edges and two faces.
pub fn torus_2f() -> TriangulatedSurface {
    build(SurfaceSpec {
        vertices: 1,
        faces: vec![[0, 0, 0], [0, 0, 0]],
        face_edges: Some(vec![
            [(0, true), (1, true), (2, false)],
            [(2, true), (0, false), (1, false)],
        ]),
        ..Default::default()
    })
}

/// Projective plane from two vertices, three edges and two faces.
pub fn rp2_min() -> TriangulatedSurface {
    build(SurfaceSpec {
        vertices: 2,
        faces: vec![[0, 1, 0], [0, 0, 1]],
        face_edges: Some(vec![
            [(0, true), (1, true), (2, false)],
            [(2, true), (0, true), (1, true)],
        ]),
        ..Default::default()
    })
}

/// Klein bottle from one vertex, three edges and two faces.
pub fn klein_min() -> TriangulatedSurface {
    build(SurfaceSpec {
        vertices: 1,
        faces: vec![[0, 0, 0], [0, 0, 0]],
        face_edges: Some(vec![
            [(0, true), (1, true), (2, false)],
            [(2, true), (0, false), (1, true)],
        ]),
        ..Default::default()
    })
}

fn grid_faces(n: usize, rows: usize, id: impl Fn(usize, usize) -> usize) -> Vec<[usize; 3]> {
    let mut faces = Vec::with_capacity(2 * n * rows);
    for j in 0..rows {
        for i in 0..n {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    faces
}

/// `n × m` periodic grid, two triangles per square; vertex `(i, j)` has id `i + n j`.
pub fn torus_grid(n: usize, m: usize) -> TriangulatedSurface {
    assert!(n >= 3 && m >= 3);
    build(SurfaceSpec {
        vertices: n * m,
        faces: grid_faces(n, m, |i, j| i % n + n * (j % m)),
        ..Default::default()
    })
}

pub fn torus_fine() -> TriangulatedSurface {
    torus_grid(8, 8)
}

/// Hexagonal fan around vertex 0.
pub fn disk() -> TriangulatedSurface {
    build(SurfaceSpec {
        vertices: 7,
        faces: (1..=6).map(|i| [0, i, i % 6 + 1]).collect(),
        ..Default::default()
    })
}

/// Cylinder with `n` vertices around and `rows` bands; vertex `(i, j)` has
/// id `i + n j`, `j = 0..=rows`.
pub fn annulus(n: usize, rows: usize) -> TriangulatedSurface {
    assert!(n >= 3 && rows >= 1);
    build(SurfaceSpec {
        vertices: n * (rows + 1),
        faces: grid_faces(n, rows, |i, j| i % n + n * j),
        ..Default::default()
    })
}

/// The `n × m` grid torus cut along rows `0` and `m / 2` into two annuli.
pub fn split_torus_annuli(n: usize, m: usize) -> (TriangulatedSurface, TriangulatedSurface) {
    assert!(m % 2 == 0);
    (annulus(n, m / 2), annulus(n, m / 2))
}

/// Map from periodic-target lifts given per face corner.
pub fn lifted_map(
    s: TriangulatedSurface,
    target: TargetSpace,
    lifts: &[[Vec<f64>; 3]],
) -> Result<SurfaceMap> {
    assert!(target.atoms().iter().all(|a| matches!(a, Atom::Circle(_))));
    SurfaceMap::from_face_lifts(s, target, lifts)
}

/// Per-face lifted grid positions `(i / n, j / m)` on an `n × rows` grid.
pub fn grid_lifts(n: usize, m: usize, rows: usize, j0: usize) -> Vec<[Vec<f64>; 3]> {
    let pos = |i: usize, j: usize| vec![i as f64 / n as f64, (j + j0) as f64 / m as f64];
    let mut out = Vec::new();
    for j in 0..rows {
        for i in 0..n {
            out.push([pos(i, j), pos(i + 1, j), pos(i + 1, j + 1)]);
            out.push([pos(i, j), pos(i + 1, j + 1), pos(i, j + 1)]);
        }
    }
    out
}

/// Identity map of the unit torus on the `n × m` grid.
pub fn torus_identity_map(n: usize, m: usize) -> SurfaceMap {
    torus_degree_map(n, m, 1)
}

/// `(x, y) ↦ (d x, y)` on the `n × m` grid, of degree `d`.
pub fn torus_degree_map(n: usize, m: usize, d: i64) -> SurfaceMap {
    let lifts: Vec<[Vec<f64>; 3]> = grid_lifts(n, m, m, 0)
        .into_iter()
        .map(|c| c.map(|p| vec![d as f64 * p[0], p[1]]))
        .collect();
    lifted_map(torus_grid(n, m), TargetSpace::unit_torus(), &lifts).expect("grid map is consistent")
}

/// The 2-face torus mapped to the unit circle, edge 0 winding `w` times.
pub fn circle_winding_map(w: i64) -> SurfaceMap {
    SurfaceMap::new(
        torus_2f(),
        TargetSpace::Circle { radius: 1.0 },
        vec![vec![0.0]],
        Some(vec![vec![w], vec![0], vec![w]]),
    )
    .expect("winding map is consistent")
}

/// The octahedron mapped onto the unit 2-sphere of pure quaternions.
pub fn sphere_octa_map() -> SurfaceMap {
    let axes = [
        [1., 0., 0.],
        [-1., 0., 0.],
        [0., 1., 0.],
        [0., -1., 0.],
        [0., 0., 1.],
        [0., 0., -1.],
    ];
    let images = axes.iter().map(|a| quat::pure(*a).to_vec()).collect();
    SurfaceMap::new(sphere_octa(), TargetSpace::Su2, images, None)
        .expect("octahedron map is consistent")
}

/// `c dx∧dy` on the first two ambient coordinates.
pub fn dxdy(target: TargetSpace, c: f64) -> FormOracle {
    FormOracle::new(2, format!("{c}*dx^dy"), target, move |_, t| {
        c * (t[0][0] * t[1][1] - t[0][1] * t[1][0])
    })
}

/// Normalized volume form of a torus, integrating to 1.
pub fn torus_vol(radii: [f64; 2]) -> FormOracle {
    let area = 4.0 * PI * PI * radii[0] * radii[1];
    let mut f = dxdy(TargetSpace::Torus { radii }, 1.0 / area);
    f.name = "torus.vol".into();
    f
}

/// Boundary circle of `s` through vertex `v`, starting there.
pub fn boundary_circle_at(s: &TriangulatedSurface, v: usize) -> Option<Circle> {
    s.boundary().iter().find_map(|c| {
        let k = c.vertices(s).iter().position(|&w| w == v)?;
        Some(c.rotated(k))
    })
}

fn start_at(s: &TriangulatedSurface, c: Circle, v: usize) -> Circle {
    let k = c
        .vertices(s)
        .iter()
        .position(|&w| w == v)
        .expect("vertex on circle");
    c.rotated(k)
}

/// Defect circles of a torus cut into two annuli `Σ₁` (lower half) and
/// `Σ₂` (upper half), both built by [`annulus`]`(n, rows)`: `outer` sits on
/// the circle `t = 0 ≡ 1`, `inner` on `t = ½`.
pub fn split_defects(
    s1: &TriangulatedSurface,
    s2: &TriangulatedSurface,
    n: usize,
    rows: usize,
    outer: BiBraneRecord,
    inner: BiBraneRecord,
) -> Vec<DefectCircle> {
    let top = n * rows;
    let lower = boundary_circle_at(s1, 0).expect("bottom circle");
    let upper = start_at(
        s2,
        boundary_circle_at(s2, top).expect("top circle").reversed(),
        top,
    );
    let mid1 = boundary_circle_at(s1, top).expect("top circle");
    let mid2 = start_at(
        s2,
        boundary_circle_at(s2, 0).expect("bottom circle").reversed(),
        0,
    );
    vec![
        DefectCircle {
            bibrane: outer,
            left: lower,
            right: upper,
        },
        DefectCircle {
            bibrane: inner,
            left: mid1,
            right: mid2,
        },
    ]
}

/// The unit-torus identity map restricted to the two halves of
/// [`split_torus_annuli`].
pub fn split_torus_maps(n: usize, m: usize) -> (SurfaceMap, SurfaceMap) {
    let (a, b) = split_torus_annuli(n, m);
    let t = TargetSpace::unit_torus();
    let lower = lifted_map(a, t.clone(), &grid_lifts(n, m, m / 2, 0)).expect("lower half");
    let upper = lifted_map(b, t, &grid_lifts(n, m, m / 2, m / 2)).expect("upper half");
    (lower, upper)
}

/// Free boson on the split torus: `φ₂ = 2πR w s` on the upper half and
/// `φ₁ = 2πR w s + X (1 − 2t)` on the lower half, so that `φ₁ − φ₂ = X` on
/// `t = 0 ≡ 1` and `φ₁ = φ₂` on `t = ½`.
pub fn free_boson_split(
    n: usize,
    rows: usize,
    w: i64,
    shift: f64,
    radius: f64,
) -> (SurfaceMap, SurfaceMap) {
    let t = TargetSpace::Circle { radius };
    let per = 2.0 * PI * radius;
    let (a, b) = (annulus(n, rows), annulus(n, rows));
    let lift = |lower: bool| -> Vec<[Vec<f64>; 3]> {
        grid_lifts(n, 2 * rows, rows, if lower { 0 } else { rows })
            .into_iter()
            .map(|c| {
                c.map(|p| {
                    let base = per * w as f64 * p[0];
                    vec![if lower {
                        base + shift * (1.0 - 2.0 * p[1])
                    } else {
                        base
                    }]
                })
            })
            .collect()
    };
    let lower = SurfaceMap::from_face_lifts(a, t.clone(), &lift(true)).expect("lower half");
    let upper = SurfaceMap::from_face_lifts(b, t, &lift(false)).expect("upper half");
    (lower, upper)
}

/// Orientation cover of [`rp2_min`] mapped near `1 ∈ SU(2)`, equivariant
/// for `g ↦ g⁻¹`.
pub fn su2_rp2() -> (DoubleCover, SurfaceMap) {
    let cover = mesh::orientation_double_cover(&rp2_min()).expect("rp2 has a cover");
    let mut images = vec![Vec::new(); cover.total.n_vertices()];
    for v in 0..images.len() {
        let w = cover.deck_vertex[v];
        if v < w {
            let g = quat::exp(&[0.1 * (v + 1) as f64, 0.05 * v as f64, 0.02]);
            images[v] = g.to_vec();
            images[w] = quat::conj(&g).to_vec();
        }
    }
    let map = SurfaceMap::new(cover.total.clone(), TargetSpace::Su2, images, None)
        .expect("rp2 map is consistent");
    (cover, map)
}

/// Trivial Jandl data on SU(2) with `g ↦ g⁻¹` and constant phase `φ`.
pub fn su2_constant_phase(phi: Complex64) -> JandlTrivialData {
    JandlTrivialData::new(
        FormOracle::zero(2, TargetSpace::Su2),
        FormOracle::zero(1, TargetSpace::Su2),
        move |_| phi,
        Involution::su2_inverse(),
    )
}

/// Per-face lifts of [`klein_min`] onto the unit torus, so that the Klein
/// bottle is the quotient by the glide `(x, y) ↦ (x + ½, −y)`.
pub fn klein_min_lifts() -> Vec<[Vec<f64>; 3]> {
    let (a, b, c, d) = (
        vec![0.0, 0.0],
        vec![0.5, 0.0],
        vec![0.5, 1.0],
        vec![0.0, 1.0],
    );
    vec![[a.clone(), b, c.clone()], [a, c, d]]
}

/// Flux `c dx∧dy` on the torus with the glide involution. When `twisted`,
/// the connection and phase are a nontrivial gauge of the plain data.
pub fn klein_data(c: f64, twisted: bool) -> JandlTrivialData {
    let t = TargetSpace::unit_torus();
    let omega = dxdy(t.clone(), c);
    if !twisted {
        return JandlTrivialData::new(
            omega,
            FormOracle::zero(1, t),
            |_| Complex64::new(1.0, 0.0),
            Involution::klein_shift(),
        );
    }
    // φ = exp(2πi h), h = 0.3 sin 2πy odd under the involution;
    // A = ½ dh + 0.2 sin(4πx) dx, so A − k*A = dh and dA = 0
    let a = FormOracle::new(1, "klein.A", t, |p, v| {
        0.5 * 0.3 * 2.0 * PI * (2.0 * PI * p[1]).cos() * v[0][1]
            + 0.2 * (4.0 * PI * p[0]).sin() * v[0][0]
    });
    JandlTrivialData::new(
        omega,
        a,
        |p| Complex64::from_polar(1.0, 2.0 * PI * 0.3 * (2.0 * PI * p[1]).sin()),
        Involution::klein_shift(),
    )
}

/// [`disk`] mapped to a hexagon of circumradius `scale` around the centre
/// of the unit torus.
pub fn disk_map(scale: f64) -> SurfaceMap {
    let mut images = vec![vec![0.5, 0.5]];
    for i in 0..6 {
        let a = 2.0 * PI * i as f64 / 6.0;
        images.push(vec![0.5 + scale * a.cos(), 0.5 + scale * a.sin()]);
    }
    SurfaceMap::new(disk(), TargetSpace::unit_torus(), images, None)
        .expect("disk map is consistent")
}

/// Space-filling brane on `target` with the given module and `ω = 0`.
pub fn full_brane(target: TargetSpace, module: Connection) -> DBraneRecord {
    DBraneRecord {
        world_volume: WorldVolume::Full,
        omega: FormOracle::zero(2, target),
        module,
    }
}

/// The trivial bi-brane on the diagonal of `target × target`.
pub fn diagonal_bibrane(target: TargetSpace) -> BiBraneRecord {
    let t = TargetSpace::product(target.clone(), target);
    BiBraneRecord {
        world_volume: WorldVolume::Diagonal,
        varpi: FormOracle::zero(2, t.clone()),
        bundle: Connection::Abelian(FormOracle::zero(1, t)),
    }
}

/// Discrete-torsion torus: trivial data on [`torus_fine`] with one chart per
/// face and a single vertex phase `e^{iθ}`.
pub fn ab_torus(theta: f64) -> DeligneSurfaceData {
    let s = torus_fine();
    let nf = s.faces().len();
    let mut d = DeligneSurfaceData::trivial(s, (0..nf).collect());
    d.g[5] = Complex64::from_polar(1.0, theta);
    d
}

/// Random local data with one chart per face. Vertex phases are random
/// where at least three charts meet and `1` elsewhere, so the data pass
/// [`validate_cocycle`](crate::gerbedata::validate_cocycle).
pub fn deligne_random(s: TriangulatedSurface, seed: u64) -> DeligneSurfaceData {
    use rand::Rng;
    let mut rng = crate::sampling::rng(seed);
    let nf = s.faces().len();
    let mut d = DeligneSurfaceData::trivial(s, (0..nf).collect());
    for b in d.b.iter_mut() {
        *b = rng.gen_range(-1.0..1.0);
    }
    for e in 0..d.a.len() {
        if d.surface.incidence(e).len() == 2 {
            d.a[e] = rng.gen_range(-1.0..1.0);
        }
    }
    let charts = d.charts_at_vertices();
    for (v, g) in d.g.iter_mut().enumerate() {
        if charts[v].len() >= 3 {
            *g = Complex64::from_polar(1.0, rng.gen_range(-PI..PI));
        }
    }
    d
}

/// `(1 + 0.3 sin 2πx cos 2πy) dx∧dy` on the unit torus, integrating to 1
/// over the identity map.
pub fn torus_bump() -> FormOracle {
    FormOracle::new(2, "torus.bump", TargetSpace::unit_torus(), |p, t| {
        let f = 1.0 + 0.3 * (2.0 * PI * p[0]).sin() * (2.0 * PI * p[1]).cos();
        f * (t[0][0] * t[1][1] - t[0][1] * t[1][0])
    })
}
