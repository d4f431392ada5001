//! Combinatorial surfaces: Δ-complexes built from oriented triangles.
//!
//! A face is an ordered vertex triple `(c0, c1, c2)`; its local side `l`
//! runs from corner `l` to corner `(l + 1) % 3`. Every side refers to an
//! edge together with a flag telling whether the face traverses the edge
//! from its tail to its head. Identifications beyond vertex pairs are
//! allowed, so a torus can be a single vertex, three edges and two faces.
//!
//! Conventions used throughout the crate:
//! - the *first* side of an edge is the one met first when scanning faces
//!   in index order and sides in local order;
//! - circles are stored as oriented edge walks (`Side` steps);
//! - a face's orientation is the one given by its corner order.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
}

/// An edge traversed in a given direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Side {
    pub edge: usize,
    pub forward: bool,
}

impl Side {
    pub fn reversed(self) -> Side {
        Side {
            edge: self.edge,
            forward: !self.forward,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Face {
    pub corners: [usize; 3],
    pub sides: [Side; 3],
}

/// Reference to local side `local` of face `face`; serialized as `[face, local]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct EdgeRef {
    pub face: usize,
    pub local: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientability {
    /// The corner orders of all faces are coherent.
    Oriented,
    /// Some flips of corner orders make the faces coherent.
    OrientableUnoriented,
    NonOrientable,
}

impl Orientability {
    pub fn is_orientable(self) -> bool {
        !matches!(self, Orientability::NonOrientable)
    }

    fn name(self) -> &'static str {
        match self {
            Orientability::Oriented => "oriented",
            Orientability::OrientableUnoriented => "orientable-unoriented",
            Orientability::NonOrientable => "non-orientable",
        }
    }
}

/// A closed oriented edge walk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circle {
    pub steps: Vec<Side>,
}

impl Circle {
    pub fn reversed(&self) -> Circle {
        Circle {
            steps: self.steps.iter().rev().map(|s| s.reversed()).collect(),
        }
    }

    /// Vertices visited, starting at the start of the first step.
    pub fn vertices(&self, surface: &TriangulatedSurface) -> Vec<usize> {
        self.steps.iter().map(|s| surface.side_start(*s)).collect()
    }

    /// Same cycle, starting `k` steps later.
    pub fn rotated(&self, k: usize) -> Circle {
        let n = self.steps.len();
        Circle {
            steps: (0..n).map(|i| self.steps[(i + k) % n]).collect(),
        }
    }
}

impl From<(usize, usize)> for EdgeRef {
    fn from((face, local): (usize, usize)) -> Self {
        EdgeRef { face, local }
    }
}

impl From<EdgeRef> for (usize, usize) {
    fn from(r: EdgeRef) -> Self {
        (r.face, r.local)
    }
}

/// Input for [`TriangulatedSurface::build`]; also the JSON mesh format.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub vertices: usize,
    pub faces: Vec<[usize; 3]>,
    /// Explicit edge identifications `(edge id, forward)` per local side.
    /// When absent, edges are inferred from vertex pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub face_edges: Option<Vec<[(usize, bool); 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Vec<Vec<EdgeRef>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defects: Option<Vec<Vec<EdgeRef>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<Orientability>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangulatedSurface {
    n_vertices: usize,
    edges: Vec<Edge>,
    faces: Vec<Face>,
    incidence: Vec<Vec<EdgeRef>>,
    boundary: Vec<Circle>,
    defects: Vec<Circle>,
    orientability: Orientability,
    /// Per-face flips making the surface coherent (all false if oriented,
    /// meaningless if non-orientable).
    flips: Vec<bool>,
}

impl TriangulatedSurface {
    pub fn build(spec: SurfaceSpec) -> Result<Self> {
        Self::build_impl(spec, true)
    }

    fn build_impl(spec: SurfaceSpec, with_circles: bool) -> Result<Self> {
        if spec.faces.is_empty() {
            return Err(Error::InvalidInput("at least one face required".into()));
        }
        for f in &spec.faces {
            if f.iter().any(|&v| v >= spec.vertices) {
                return Err(Error::InvalidInput(format!(
                    "face {f:?} references a missing vertex"
                )));
            }
        }
        let (edges, faces) = match &spec.face_edges {
            Some(fe) => explicit_edges(&spec.faces, fe)?,
            None => inferred_edges(&spec.faces)?,
        };

        let mut incidence = vec![Vec::new(); edges.len()];
        for (fi, face) in faces.iter().enumerate() {
            for (l, side) in face.sides.iter().enumerate() {
                incidence[side.edge].push(EdgeRef { face: fi, local: l });
            }
        }
        for (e, inc) in incidence.iter().enumerate() {
            match inc.len() {
                1 | 2 => {}
                0 => return Err(Error::InvalidInput(format!("edge {e} bounds no face"))),
                n => return Err(Error::NonManifoldEdge { edge: e, sides: n }),
            }
        }

        let mut surface = TriangulatedSurface {
            n_vertices: spec.vertices,
            edges,
            faces,
            incidence,
            boundary: Vec::new(),
            defects: Vec::new(),
            orientability: Orientability::NonOrientable,
            flips: Vec::new(),
        };
        let (orientability, flips) = surface.compute_orientability();
        surface.orientability = orientability;
        surface.flips = flips;
        if let Some(declared) = spec.orientation {
            if declared != orientability {
                return Err(Error::OrientationMismatch {
                    declared: declared.name().into(),
                    computed: orientability.name().into(),
                });
            }
        }

        if !with_circles {
            return Ok(surface);
        }
        surface.boundary = match &spec.boundary {
            Some(decl) => decl
                .iter()
                .map(|refs| surface.circle_from_refs(refs, true))
                .collect::<Result<_>>()?,
            None => surface.trace_boundary()?,
        };
        let mut covered = vec![false; surface.edges.len()];
        for c in &surface.boundary {
            for s in &c.steps {
                covered[s.edge] = true;
            }
        }
        if let Some(e) =
            (0..surface.edges.len()).find(|&e| surface.is_boundary_edge(e) && !covered[e])
        {
            return Err(Error::BadCircle(format!(
                "boundary edge {e} not covered by declared boundary"
            )));
        }

        if let Some(decl) = &spec.defects {
            let defects: Vec<Circle> = decl
                .iter()
                .map(|refs| surface.circle_from_refs(refs, false))
                .collect::<Result<_>>()?;
            let mut used = HashMap::new();
            for (i, c) in defects.iter().enumerate() {
                for v in c.vertices(&surface) {
                    if let Some(j) = used.insert(v, i) {
                        if j != i {
                            return Err(Error::BadCircle(format!(
                                "defect circles {j} and {i} meet at vertex {v}"
                            )));
                        }
                    }
                }
            }
            surface.defects = defects;
        }
        Ok(surface)
    }

    /// Surface from already validated parts, used by constructions that
    /// guarantee consistency (subdivision, double covers).
    pub(crate) fn from_faces(
        n_vertices: usize,
        faces: Vec<[usize; 3]>,
        face_edges: Vec<[(usize, bool); 3]>,
        boundary: Vec<Circle>,
        defects: Vec<Circle>,
    ) -> Result<Self> {
        let mut s = TriangulatedSurface::build_impl(
            SurfaceSpec {
                vertices: n_vertices,
                faces,
                face_edges: Some(face_edges),
                ..Default::default()
            },
            false,
        )?;
        for c in boundary.iter().chain(defects.iter()) {
            s.check_cycle(&c.steps)?;
        }
        s.boundary = boundary;
        s.defects = defects;
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::build(serde_json::from_str(text)?)
    }

    /// Spec that rebuilds this surface exactly, with explicit edges.
    pub fn to_spec(&self) -> SurfaceSpec {
        // a step is stored as the side of a face running the same way; a
        // defect step with no such face falls back to the first one
        let refs = |c: &Circle| -> Vec<EdgeRef> {
            c.steps
                .iter()
                .map(|s| {
                    let inc = &self.incidence[s.edge];
                    inc.iter()
                        .copied()
                        .find(|r| self.side(*r) == *s)
                        .unwrap_or(inc[0])
                })
                .collect()
        };
        let defect_refs: Vec<Vec<EdgeRef>> = self.defects.iter().map(refs).collect();
        SurfaceSpec {
            vertices: self.n_vertices,
            faces: self.faces.iter().map(|f| f.corners).collect(),
            face_edges: Some(
                self.faces
                    .iter()
                    .map(|f| f.sides.map(|s| (s.edge, s.forward)))
                    .collect(),
            ),
            boundary: (!self.boundary.is_empty()).then(|| self.boundary.iter().map(refs).collect()),
            defects: (!defect_refs.is_empty()).then_some(defect_refs),
            orientation: Some(self.orientability),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_spec()).expect("mesh serializes")
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn incidence(&self, edge: usize) -> &[EdgeRef] {
        &self.incidence[edge]
    }

    pub fn boundary(&self) -> &[Circle] {
        &self.boundary
    }

    pub fn defects(&self) -> &[Circle] {
        &self.defects
    }

    pub fn orientability(&self) -> Orientability {
        self.orientability
    }

    pub fn is_closed(&self) -> bool {
        self.incidence.iter().all(|i| i.len() == 2)
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.incidence[e].len() == 1
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    pub fn side(&self, r: EdgeRef) -> Side {
        self.faces[r.face].sides[r.local]
    }

    pub fn side_start(&self, s: Side) -> usize {
        let e = self.edges[s.edge];
        if s.forward {
            e.tail
        } else {
            e.head
        }
    }

    pub fn side_end(&self, s: Side) -> usize {
        self.side_start(s.reversed())
    }

    /// Flip flags for a coherent orientation, if orientable.
    pub fn coherent_flips(&self) -> Option<&[bool]> {
        self.orientability
            .is_orientable()
            .then_some(self.flips.as_slice())
    }

    /// Same surface with every face's corner order reversed.
    pub fn reversed(&self) -> TriangulatedSurface {
        let faces = self
            .faces
            .iter()
            .map(|f| [f.corners[0], f.corners[2], f.corners[1]])
            .collect();
        let face_edges = self
            .faces
            .iter()
            .map(|f| {
                let r = |s: Side| (s.edge, !s.forward);
                [r(f.sides[2]), r(f.sides[1]), r(f.sides[0])]
            })
            .collect();
        let boundary = self.boundary.iter().map(Circle::reversed).collect();
        let defects = self.defects.iter().map(Circle::reversed).collect();
        TriangulatedSurface::from_faces(self.n_vertices, faces, face_edges, boundary, defects)
            .expect("reversal preserves validity")
    }

    /// Number of connected components (through faces and shared edges).
    pub fn components(&self) -> usize {
        let labels = self.face_components();
        labels.iter().copied().max().map_or(0, |m| m + 1)
    }

    /// Component label per face.
    pub fn face_components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.faces.len()];
        let mut next = 0;
        for start in 0..self.faces.len() {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            let mut queue = VecDeque::from([start]);
            while let Some(f) = queue.pop_front() {
                for side in &self.faces[f].sides {
                    for r in &self.incidence[side.edge] {
                        if label[r.face] == usize::MAX {
                            label[r.face] = next;
                            queue.push_back(r.face);
                        }
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Whether cutting along `circle` disconnects the component it lies in.
    pub fn separates(&self, circle: &Circle) -> bool {
        let cut: std::collections::HashSet<usize> = circle.steps.iter().map(|s| s.edge).collect();
        let Some(&first) = circle.steps.first() else {
            return false;
        };
        let start = self.incidence[first.edge][0].face;
        let mut seen = vec![false; self.faces.len()];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(f) = queue.pop_front() {
            for side in &self.faces[f].sides {
                if cut.contains(&side.edge) {
                    continue;
                }
                for r in &self.incidence[side.edge] {
                    if !seen[r.face] {
                        seen[r.face] = true;
                        queue.push_back(r.face);
                    }
                }
            }
        }
        let comp = self.face_components();
        (0..self.faces.len()).any(|f| comp[f] == comp[start] && !seen[f])
    }

    /// Induced direction of an interior side under the given flips.
    fn induced(&self, r: EdgeRef, flips: &[bool]) -> bool {
        self.side(r).forward ^ flips[r.face]
    }

    fn compute_orientability(&self) -> (Orientability, Vec<bool>) {
        let nf = self.faces.len();
        let none = vec![false; nf];
        let coherent = self
            .incidence
            .iter()
            .filter(|i| i.len() == 2)
            .all(|i| self.induced(i[0], &none) != self.induced(i[1], &none));
        if coherent {
            return (Orientability::Oriented, none);
        }
        // breadth-first propagation across the dual graph
        let mut flips: Vec<Option<bool>> = vec![None; nf];
        for start in 0..nf {
            if flips[start].is_some() {
                continue;
            }
            flips[start] = Some(false);
            let mut queue = VecDeque::from([start]);
            while let Some(f) = queue.pop_front() {
                let ff = flips[f].unwrap();
                for (l, side) in self.faces[f].sides.iter().enumerate() {
                    let inc = &self.incidence[side.edge];
                    if inc.len() != 2 {
                        continue;
                    }
                    let here = EdgeRef { face: f, local: l };
                    let other = if inc[0] == here { inc[1] } else { inc[0] };
                    let dir_here = side.forward ^ ff;
                    // the neighbour must induce the opposite direction
                    let need = !dir_here ^ self.side(other).forward;
                    match flips[other.face] {
                        None => {
                            flips[other.face] = Some(need);
                            queue.push_back(other.face);
                        }
                        Some(x) if x != need => {
                            return (Orientability::NonOrientable, vec![false; nf]);
                        }
                        _ => {}
                    }
                }
            }
        }
        (
            Orientability::OrientableUnoriented,
            flips.into_iter().map(|f| f.unwrap()).collect(),
        )
    }

    fn trace_boundary(&self) -> Result<Vec<Circle>> {
        let flips = if self.orientability.is_orientable() {
            self.flips.clone()
        } else {
            vec![false; self.faces.len()]
        };
        let mut out_steps: HashMap<usize, Vec<Side>> = HashMap::new();
        for (e, inc) in self.incidence.iter().enumerate() {
            if inc.len() == 1 {
                let s = Side {
                    edge: e,
                    forward: self.induced(inc[0], &flips),
                };
                out_steps.entry(self.side_start(s)).or_default().push(s);
            }
        }
        if let Some((v, _)) = out_steps.iter().find(|(_, s)| s.len() > 1) {
            return Err(Error::BadCircle(format!("boundary pinched at vertex {v}")));
        }
        let mut used = vec![false; self.edges.len()];
        let mut circles = Vec::new();
        let mut starts: Vec<usize> = out_steps.keys().copied().collect();
        starts.sort_unstable();
        for v0 in starts {
            let first = out_steps[&v0][0];
            if used[first.edge] {
                continue;
            }
            let mut steps = Vec::new();
            let mut cur = first;
            loop {
                used[cur.edge] = true;
                steps.push(cur);
                let v = self.side_end(cur);
                if v == v0 {
                    break;
                }
                cur = out_steps
                    .get(&v)
                    .and_then(|s| s.first().copied())
                    .ok_or_else(|| {
                        Error::BadCircle(format!("boundary walk stuck at vertex {v}"))
                    })?;
                if used[cur.edge] {
                    return Err(Error::BadCircle("boundary walk revisits an edge".into()));
                }
            }
            circles.push(Circle { steps });
        }
        Ok(circles)
    }

    fn circle_from_refs(&self, refs: &[EdgeRef], boundary: bool) -> Result<Circle> {
        if refs.is_empty() {
            return Err(Error::BadCircle("empty circle".into()));
        }
        let mut steps = Vec::with_capacity(refs.len());
        for r in refs {
            if r.face >= self.faces.len() || r.local > 2 {
                return Err(Error::BadCircle(format!("bad edge reference {r:?}")));
            }
            let s = self.side(*r);
            if boundary != self.is_boundary_edge(s.edge) {
                let what = if boundary {
                    "a boundary"
                } else {
                    "an interior"
                };
                return Err(Error::BadCircle(format!(
                    "edge {} is not {what} edge",
                    s.edge
                )));
            }
            steps.push(s);
        }
        self.check_cycle(&steps)?;
        Ok(Circle { steps })
    }

    fn check_cycle(&self, steps: &[Side]) -> Result<()> {
        let mut seen_v = std::collections::HashSet::new();
        let mut seen_e = std::collections::HashSet::new();
        for (i, s) in steps.iter().enumerate() {
            if s.edge >= self.edges.len() {
                return Err(Error::BadCircle(format!("edge {} out of range", s.edge)));
            }
            let next = steps[(i + 1) % steps.len()];
            if self.side_end(*s) != self.side_start(next) {
                return Err(Error::BadCircle(format!(
                    "step {i} does not connect to step {}",
                    (i + 1) % steps.len()
                )));
            }
            if !seen_v.insert(self.side_start(*s)) || !seen_e.insert(s.edge) {
                return Err(Error::BadCircle("cycle is not embedded".into()));
            }
        }
        Ok(())
    }
}

fn explicit_edges(
    faces: &[[usize; 3]],
    fe: &[[(usize, bool); 3]],
) -> Result<(Vec<Edge>, Vec<Face>)> {
    if fe.len() != faces.len() {
        return Err(Error::ShapeMismatch(
            "face_edges length differs from faces".into(),
        ));
    }
    let n_edges = fe.iter().flatten().map(|(e, _)| e + 1).max().unwrap_or(0);
    let mut edges: Vec<Option<Edge>> = vec![None; n_edges];
    let mut out = Vec::with_capacity(faces.len());
    for (fi, (c, sides)) in faces.iter().zip(fe).enumerate() {
        let mut fs = [Side {
            edge: 0,
            forward: true,
        }; 3];
        for l in 0..3 {
            let (e, fwd) = sides[l];
            let (a, b) = (c[l], c[(l + 1) % 3]);
            let edge = if fwd {
                Edge { tail: a, head: b }
            } else {
                Edge { tail: b, head: a }
            };
            match edges[e] {
                None => edges[e] = Some(edge),
                Some(prev) if prev != edge => {
                    return Err(Error::InvalidInput(format!(
                        "face {fi} side {l} glues edge {e} inconsistently ({prev:?} vs {edge:?})"
                    )));
                }
                _ => {}
            }
            fs[l] = Side {
                edge: e,
                forward: fwd,
            };
        }
        out.push(Face {
            corners: *c,
            sides: fs,
        });
    }
    let edges = edges
        .into_iter()
        .enumerate()
        .map(|(e, x)| x.ok_or_else(|| Error::InvalidInput(format!("edge id {e} unused"))))
        .collect::<Result<_>>()?;
    Ok((edges, out))
}

fn inferred_edges(faces: &[[usize; 3]]) -> Result<(Vec<Edge>, Vec<Face>)> {
    let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges = Vec::new();
    let mut out = Vec::with_capacity(faces.len());
    for (fi, c) in faces.iter().enumerate() {
        let mut fs = [Side {
            edge: 0,
            forward: true,
        }; 3];
        for l in 0..3 {
            let (a, b) = (c[l], c[(l + 1) % 3]);
            if a == b {
                return Err(Error::InvalidInput(format!(
                    "face {fi} has a degenerate side; give explicit face_edges"
                )));
            }
            let key = (a.min(b), a.max(b));
            let e = *ids.entry(key).or_insert_with(|| {
                edges.push(Edge {
                    tail: key.0,
                    head: key.1,
                });
                edges.len() - 1
            });
            fs[l] = Side {
                edge: e,
                forward: a < b,
            };
        }
        out.push(Face {
            corners: *c,
            sides: fs,
        });
    }
    Ok((edges, out))
}

/// Origin of a vertex in a barycentric subdivision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexOrigin {
    Vertex(usize),
    EdgeMid(usize),
    FaceCenter(usize),
}

/// Vertex layout of [`subdivide`]: original vertices, then one midpoint per
/// edge, then one barycenter per face.
pub fn subdivision_origin(s: &TriangulatedSurface, v: usize) -> VertexOrigin {
    let (nv, ne) = (s.n_vertices(), s.edges().len());
    if v < nv {
        VertexOrigin::Vertex(v)
    } else if v < nv + ne {
        VertexOrigin::EdgeMid(v - nv)
    } else {
        VertexOrigin::FaceCenter(v - nv - ne)
    }
}

/// Face `6 f + 2 l + h` of the subdivision lies in face `f`, next to local
/// side `l`; `h = 0` touches corner `l`, `h = 1` touches corner `l + 1`.
pub fn subdivide(s: &TriangulatedSurface) -> TriangulatedSurface {
    let (nv, ne, nf) = (s.n_vertices(), s.edges().len(), s.faces().len());
    let mid = |e: usize| nv + e;
    let center = |f: usize| nv + ne + f;
    let half_tail = |e: usize| 2 * e; // tail -> mid
    let half_head = |e: usize| 2 * e + 1; // mid -> head
    let spoke = |f: usize, l: usize| 2 * ne + 3 * f + l; // mid(side l) -> center
    let ray = |f: usize, c: usize| 2 * ne + 3 * nf + 3 * f + c; // corner c -> center

    let mut faces = Vec::with_capacity(6 * nf);
    let mut face_edges = Vec::with_capacity(6 * nf);
    for (fi, face) in s.faces().iter().enumerate() {
        for l in 0..3 {
            let side = face.sides[l];
            let (a, b) = (face.corners[l], face.corners[(l + 1) % 3]);
            let m = mid(side.edge);
            let c = center(fi);
            let (first_half, second_half) = if side.forward {
                ((half_tail(side.edge), true), (half_head(side.edge), true))
            } else {
                ((half_head(side.edge), false), (half_tail(side.edge), false))
            };
            faces.push([a, m, c]);
            face_edges.push([first_half, (spoke(fi, l), true), (ray(fi, l), false)]);
            faces.push([m, b, c]);
            face_edges.push([
                second_half,
                (ray(fi, (l + 1) % 3), true),
                (spoke(fi, l), false),
            ]);
        }
    }
    let refine = |c: &Circle| Circle {
        steps: c
            .steps
            .iter()
            .flat_map(|st| {
                if st.forward {
                    [
                        Side {
                            edge: half_tail(st.edge),
                            forward: true,
                        },
                        Side {
                            edge: half_head(st.edge),
                            forward: true,
                        },
                    ]
                } else {
                    [
                        Side {
                            edge: half_head(st.edge),
                            forward: false,
                        },
                        Side {
                            edge: half_tail(st.edge),
                            forward: false,
                        },
                    ]
                }
            })
            .collect(),
    };
    let boundary = s.boundary().iter().map(refine).collect();
    let defects = s.defects().iter().map(refine).collect();
    TriangulatedSurface::from_faces(nv + ne + nf, faces, face_edges, boundary, defects)
        .expect("barycentric subdivision of a valid surface is valid")
}

/// Dual graph: one node per face, one link per interior edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualGraph {
    pub nodes: usize,
    /// `(face a, face b, shared edge)`.
    pub links: Vec<(usize, usize, usize)>,
}

impl DualGraph {
    pub fn degree(&self, node: usize) -> usize {
        self.links
            .iter()
            .map(|&(a, b, _)| (a == node) as usize + (b == node) as usize)
            .sum()
    }
}

pub fn dual_graph(s: &TriangulatedSurface) -> DualGraph {
    let links = (0..s.edges().len())
        .filter(|&e| s.incidence(e).len() == 2)
        .map(|e| {
            let i = s.incidence(e);
            (i[0].face, i[1].face, e)
        })
        .collect();
    DualGraph {
        nodes: s.faces().len(),
        links,
    }
}

/// Orientation double cover with its deck involution and projection.
///
/// Total face `2 f + s` is face `f` on sheet `s`; sheet 0 keeps the corner
/// order, sheet 1 reverses it. Total edge `2 e + t` is the lift of `e`
/// adjacent to the sheet-`t` lift of the first face of `e`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleCover {
    pub total: TriangulatedSurface,
    pub deck_vertex: Vec<usize>,
    pub proj_vertex: Vec<usize>,
}

impl DoubleCover {
    pub fn deck_face(&self, f: usize) -> usize {
        f ^ 1
    }

    pub fn deck_edge(&self, e: usize) -> usize {
        e ^ 1
    }

    pub fn proj_face(&self, f: usize) -> usize {
        f / 2
    }

    pub fn proj_edge(&self, e: usize) -> usize {
        e / 2
    }

    /// Total face over base face `f` on `sheet`.
    pub fn lift_face(&self, f: usize, sheet: u8) -> usize {
        2 * f + sheet as usize
    }
}

/// Sheet of the total edge over `e` adjacent to the sheet-`s` lift of the
/// face containing side `r`.
pub(crate) fn edge_sheet(base: &TriangulatedSurface, r: EdgeRef, s: u8) -> u8 {
    let side = base.side(r);
    let inc = base.incidence(side.edge);
    if inc[0] == r {
        return s;
    }
    let first = base.side(inc[0]);
    let coherent = first.forward != side.forward;
    if coherent {
        s
    } else {
        1 - s
    }
}

pub fn orientation_double_cover(s: &TriangulatedSurface) -> Result<DoubleCover> {
    if !s.is_closed() {
        return Err(Error::HasBoundary);
    }
    let nf = s.faces().len();
    // union-find over corner nodes (face, sheet, corner)
    let node = |f: usize, sh: u8, c: usize| (2 * f + sh as usize) * 3 + c;
    let mut parent: Vec<usize> = (0..6 * nf).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let n = p[y];
            p[y] = r;
            y = n;
        }
        r
    }
    let mut ends: HashMap<usize, (usize, usize)> = HashMap::new();
    let unite = |p: &mut Vec<usize>, a: usize, b: usize| {
        let (ra, rb) = (find(p, a), find(p, b));
        if ra != rb {
            p[ra.max(rb)] = ra.min(rb);
        }
    };
    let mut total_sides = vec![[(0usize, true); 3]; 2 * nf];
    for (fi, face) in s.faces().iter().enumerate() {
        for sh in 0..2u8 {
            for l in 0..3 {
                let r = EdgeRef { face: fi, local: l };
                let side = face.sides[l];
                let t = edge_sheet(s, r, sh);
                let te = 2 * side.edge + t as usize;
                let (tc, hc) = if side.forward {
                    (l, (l + 1) % 3)
                } else {
                    ((l + 1) % 3, l)
                };
                let (tn, hn) = (node(fi, sh, tc), node(fi, sh, hc));
                match ends.get(&te).copied() {
                    None => {
                        ends.insert(te, (tn, hn));
                    }
                    Some((a, b)) => {
                        unite(&mut parent, a, tn);
                        unite(&mut parent, b, hn);
                    }
                }
                total_sides[2 * fi + sh as usize][l] = (te, side.forward);
            }
        }
    }
    let mut comp_id: HashMap<usize, usize> = HashMap::new();
    let mut vid = vec![0usize; 6 * nf];
    for n in 0..6 * nf {
        let r = find(&mut parent, n);
        let next = comp_id.len();
        vid[n] = *comp_id.entry(r).or_insert(next);
    }
    let nv = comp_id.len();
    let mut proj_vertex = vec![usize::MAX; nv];
    let mut deck_vertex = vec![usize::MAX; nv];
    let mut faces = Vec::with_capacity(2 * nf);
    let mut face_edges = Vec::with_capacity(2 * nf);
    for (fi, face) in s.faces().iter().enumerate() {
        for sh in 0..2u8 {
            let v = |c: usize| vid[node(fi, sh, c)];
            for c in 0..3 {
                let (a, b) = (v(c), vid[node(fi, 1 - sh, c)]);
                proj_vertex[a] = face.corners[c];
                if deck_vertex[a] != usize::MAX && deck_vertex[a] != b {
                    return Err(Error::InvalidInput("deck involution ill-defined".into()));
                }
                deck_vertex[a] = b;
            }
            let sides = total_sides[2 * fi + sh as usize];
            if sh == 0 {
                faces.push([v(0), v(1), v(2)]);
                face_edges.push(sides);
            } else {
                faces.push([v(0), v(2), v(1)]);
                let r = |x: (usize, bool)| (x.0, !x.1);
                face_edges.push([r(sides[2]), r(sides[1]), r(sides[0])]);
            }
        }
    }
    let total = TriangulatedSurface::from_faces(nv, faces, face_edges, Vec::new(), Vec::new())?;
    debug_assert_eq!(total.orientability(), Orientability::Oriented);
    Ok(DoubleCover {
        total,
        deck_vertex,
        proj_vertex,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn tetrahedron_is_a_sphere() {
        let s = fixtures::sphere_tetra();
        assert_eq!(s.euler_characteristic(), 2);
        assert!(s.is_closed());
        assert_eq!(s.orientability(), Orientability::Oriented);
    }

    #[test]
    fn minimal_complexes() {
        let t = fixtures::torus_2f();
        assert_eq!(
            (t.n_vertices(), t.edges().len(), t.faces().len()),
            (1, 3, 2)
        );
        assert_eq!(t.euler_characteristic(), 0);
        assert_eq!(t.orientability(), Orientability::Oriented);
        let p = fixtures::rp2_min();
        assert_eq!(p.euler_characteristic(), 1);
        assert_eq!(p.orientability(), Orientability::NonOrientable);
        let k = fixtures::klein_min();
        assert_eq!(k.euler_characteristic(), 0);
        assert_eq!(k.orientability(), Orientability::NonOrientable);
    }

    #[test]
    fn non_manifold_edge_is_rejected() {
        let err = TriangulatedSurface::build(SurfaceSpec {
            vertices: 5,
            faces: vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]],
            ..Default::default()
        })
        .unwrap_err();
        assert!(matches!(err, Error::NonManifoldEdge { sides: 3, .. }));
    }

    #[test]
    fn declared_orientation_is_cross_checked() {
        let mut spec = fixtures::tetra_spec();
        spec.faces[0] = [spec.faces[0][0], spec.faces[0][2], spec.faces[0][1]];
        spec.orientation = Some(Orientability::Oriented);
        let err = TriangulatedSurface::build(spec.clone()).unwrap_err();
        assert!(matches!(err, Error::OrientationMismatch { .. }));
        spec.orientation = Some(Orientability::OrientableUnoriented);
        let s = TriangulatedSurface::build(spec).unwrap();
        assert_eq!(
            s.coherent_flips().unwrap().iter().filter(|&&f| f).count() % 4 != 0,
            true
        );
    }

    #[test]
    fn defect_must_be_embedded_cycle() {
        let mut spec = fixtures::tetra_spec();
        // two sides of one face do not close up
        spec.defects = Some(vec![vec![
            EdgeRef { face: 0, local: 0 },
            EdgeRef { face: 0, local: 1 },
        ]]);
        assert!(matches!(
            TriangulatedSurface::build(spec.clone()),
            Err(Error::BadCircle(_))
        ));
        spec.defects = Some(vec![vec![
            EdgeRef { face: 0, local: 0 },
            EdgeRef { face: 0, local: 1 },
            EdgeRef { face: 0, local: 2 },
        ]]);
        let s = TriangulatedSurface::build(spec).unwrap();
        assert!(s.separates(&s.defects()[0]));
    }

    #[test]
    fn boundary_circles_are_traced() {
        let d = fixtures::disk();
        assert_eq!(d.boundary().len(), 1);
        assert_eq!(d.euler_characteristic(), 1);
        let (a, _) = fixtures::split_torus_annuli(4, 4);
        assert_eq!(a.boundary().len(), 2);
        assert_eq!(a.euler_characteristic(), 0);
    }

    #[test]
    fn subdivision_counts() {
        let t = subdivide(&fixtures::sphere_tetra());
        assert_eq!(t.faces().len(), 24);
        assert_eq!(t.euler_characteristic(), 2);
        let t2 = subdivide(&fixtures::torus_2f());
        assert_eq!(t2.faces().len(), 12);
        assert_eq!(t2.euler_characteristic(), 0);
        assert_eq!(t2.orientability(), Orientability::Oriented);
        let p = subdivide(&subdivide(&fixtures::rp2_min()));
        assert_eq!(p.faces().len(), 72);
        assert_eq!(p.orientability(), Orientability::NonOrientable);
        let d = subdivide(&fixtures::disk());
        assert_eq!(
            d.boundary()[0].steps.len(),
            2 * fixtures::disk().boundary()[0].steps.len()
        );
    }

    #[test]
    fn dual_graphs() {
        let g = dual_graph(&fixtures::sphere_tetra());
        assert_eq!((g.nodes, g.links.len()), (4, 6));
        assert!((0..4).all(|n| g.degree(n) == 3));
        let g = dual_graph(&fixtures::torus_2f());
        assert_eq!((g.nodes, g.links.len()), (2, 3));
        assert!(g.links.iter().all(|&(a, b, _)| a != b));
    }

    #[test]
    fn double_covers() {
        let c = orientation_double_cover(&fixtures::rp2_min()).unwrap();
        assert_eq!(c.total.euler_characteristic(), 2);
        assert_eq!(c.total.components(), 1);
        let c = orientation_double_cover(&fixtures::klein_min()).unwrap();
        assert_eq!(c.total.euler_characteristic(), 0);
        assert_eq!(c.total.components(), 1);
        let c = orientation_double_cover(&fixtures::torus_2f()).unwrap();
        assert_eq!(c.total.components(), 2);
        let comp = c.total.face_components();
        for f in 0..c.total.faces().len() {
            assert_ne!(comp[f], comp[c.deck_face(f)]);
        }
        assert!(matches!(
            orientation_double_cover(&fixtures::disk()),
            Err(Error::HasBoundary)
        ));
    }

    #[test]
    fn deck_is_free_involution_reversing_orientation() {
        for base in [
            fixtures::rp2_min(),
            fixtures::klein_min(),
            fixtures::sphere_tetra(),
            fixtures::torus_2f(),
        ] {
            let c = orientation_double_cover(&base).unwrap();
            let t = &c.total;
            assert_eq!(t.orientability(), Orientability::Oriented);
            assert_eq!(t.euler_characteristic(), 2 * base.euler_characteristic());
            for v in 0..t.n_vertices() {
                assert_ne!(c.deck_vertex[v], v);
                assert_eq!(c.deck_vertex[c.deck_vertex[v]], v);
                assert_eq!(c.proj_vertex[c.deck_vertex[v]], c.proj_vertex[v]);
            }
            for f in 0..t.faces().len() {
                let (a, b) = (&t.faces()[f], &t.faces()[c.deck_face(f)]);
                // deck maps corners of f onto corners of deck(f) in reversed cyclic order
                let img: Vec<usize> = a.corners.iter().map(|&v| c.deck_vertex[v]).collect();
                assert_eq!(img[0], b.corners[0]);
                assert_eq!((img[1], img[2]), (b.corners[2], b.corners[1]));
            }
            for e in 0..t.edges().len() {
                assert_eq!(c.proj_edge(c.deck_edge(e)), c.proj_edge(e));
                let (x, y) = (t.edges()[e], t.edges()[c.deck_edge(e)]);
                assert_eq!(
                    (c.deck_vertex[x.tail], c.deck_vertex[x.head]),
                    (y.tail, y.head)
                );
            }
        }
    }

    #[test]
    fn oriented_surfaces_are_coherent_on_interior_edges() {
        for s in [
            fixtures::sphere_tetra(),
            fixtures::torus_2f(),
            fixtures::torus_grid(3, 3),
            fixtures::disk(),
        ] {
            for e in 0..s.edges().len() {
                let inc = s.incidence(e);
                if inc.len() == 2 {
                    assert_ne!(s.side(inc[0]).forward, s.side(inc[1]).forward);
                }
            }
        }
    }

    #[test]
    fn reversal_and_rotation_of_circles() {
        let d = fixtures::disk();
        let c = &d.boundary()[0];
        assert_eq!(c.reversed().reversed(), *c);
        assert_eq!(c.rotated(c.steps.len()), *c);
        let r = d.reversed();
        assert_eq!(r.orientability(), Orientability::Oriented);
        assert_eq!(r.boundary()[0].steps.len(), c.steps.len());
    }

    #[test]
    fn json_round_trip() {
        for s in [
            fixtures::sphere_tetra(),
            fixtures::rp2_min(),
            fixtures::klein_min(),
            fixtures::annulus(4, 2),
        ] {
            let back = TriangulatedSurface::from_json(&s.to_json()).unwrap();
            assert_eq!(back, s);
        }
        let plain =
            r#"{"vertices": 3, "faces": [[0, 1, 2]], "boundary": [[[0, 0], [0, 1], [0, 2]]]}"#;
        let t = TriangulatedSurface::from_json(plain).unwrap();
        assert_eq!(t.boundary().len(), 1);
        assert!(
            TriangulatedSurface::from_json(r#"{"vertices": 3, "faces": [[0, 1, 5]]}"#).is_err()
        );
        assert!(TriangulatedSurface::from_json(r#"{"vertices": 3, "face": []}"#).is_err());
    }
}
