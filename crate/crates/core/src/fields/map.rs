use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::target::{Atom, TargetSpace};
use crate::mesh::{self, Side, TriangulatedSurface, VertexOrigin};
use crate::quat;

/// Seam tolerance at edge midpoints.
pub const SEAM_TOL: f64 = 1e-9;

/// A piecewise map from a surface into a target.
///
/// Periodic coordinates are interpolated affinely in a lift: the displacement
/// along edge `e` is `image(head) - image(tail) + period * winding[e]`. SU(2)
/// factors use normalized linear interpolation of the corner quaternions,
/// whose edges are great-circle arcs.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMap {
    surface: TriangulatedSurface,
    target: TargetSpace,
    images: Vec<Vec<f64>>,
    windings: Vec<Vec<i64>>,
}

/// Serialized map: `{ "target": …, "vertex_images": …, "edge_windings": … }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapSpec {
    pub target: TargetSpace,
    pub vertex_images: Vec<Vec<f64>>,
    #[serde(default)]
    pub edge_windings: Option<Vec<Vec<i64>>>,
}

impl SurfaceMap {
    pub fn new(
        surface: TriangulatedSurface,
        target: TargetSpace,
        images: Vec<Vec<f64>>,
        windings: Option<Vec<Vec<i64>>>,
    ) -> Result<Self> {
        if images.len() != surface.n_vertices() {
            return Err(Error::ShapeMismatch(format!(
                "{} vertex images for {} vertices",
                images.len(),
                surface.n_vertices()
            )));
        }
        for p in &images {
            target.check_point(p)?;
        }
        let images: Vec<Vec<f64>> = images.iter().map(|p| target.normalize(p)).collect();
        let np = target.periods().len();
        let windings = windings.unwrap_or_else(|| vec![vec![0; np]; surface.edges().len()]);
        if windings.len() != surface.edges().len() || windings.iter().any(|w| w.len() != np) {
            return Err(Error::ShapeMismatch(format!(
                "edge windings must be {} x {np}",
                surface.edges().len()
            )));
        }
        let map = SurfaceMap {
            surface,
            target,
            images,
            windings,
        };
        map.check_faces()?;
        map.check_seams()?;
        Ok(map)
    }

    /// Map from corner points given per face in a common lift. Vertex images
    /// come from the first face touching each vertex; windings of periodic
    /// coordinates are read off the first face of every edge.
    pub fn from_face_lifts(
        surface: TriangulatedSurface,
        target: TargetSpace,
        lifts: &[[Vec<f64>; 3]],
    ) -> Result<Self> {
        if lifts.len() != surface.faces().len() {
            return Err(Error::ShapeMismatch(format!(
                "{} face lifts for {} faces",
                lifts.len(),
                surface.faces().len()
            )));
        }
        let periods = target.periods();
        let mut images = vec![Vec::new(); surface.n_vertices()];
        for (f, face) in surface.faces().iter().enumerate() {
            for c in 0..3 {
                if images[face.corners[c]].is_empty() {
                    target.check_point(&lifts[f][c])?;
                    images[face.corners[c]] = target.normalize(&lifts[f][c]);
                }
            }
        }
        let mut windings = vec![vec![0i64; periods.len()]; surface.edges().len()];
        for (e, w) in windings.iter_mut().enumerate() {
            let r = surface.incidence(e)[0];
            let side = surface.side(r);
            let (a, b) = (r.local, (r.local + 1) % 3);
            let (t, h) = if side.forward { (a, b) } else { (b, a) };
            let edge = surface.edges()[e];
            let (mut i, mut c) = (0, 0);
            for atom in target.atoms() {
                if let Atom::Circle(_) = atom {
                    let lifted = lifts[r.face][h][i] - lifts[r.face][t][i];
                    let base = images[edge.head][i] - images[edge.tail][i];
                    w[c] = ((lifted - base) / periods[c]).round() as i64;
                    c += 1;
                }
                i += atom.ambient_dim();
            }
        }
        SurfaceMap::new(surface, target, images, Some(windings))
    }

    pub fn from_spec(surface: TriangulatedSurface, spec: MapSpec) -> Result<Self> {
        SurfaceMap::new(surface, spec.target, spec.vertex_images, spec.edge_windings)
    }

    pub fn to_spec(&self) -> MapSpec {
        MapSpec {
            target: self.target.clone(),
            vertex_images: self.images.clone(),
            edge_windings: Some(self.windings.clone()),
        }
    }

    pub fn surface(&self) -> &TriangulatedSurface {
        &self.surface
    }

    pub fn target(&self) -> &TargetSpace {
        &self.target
    }

    pub fn image(&self, v: usize) -> &[f64] {
        &self.images[v]
    }

    pub fn windings(&self, e: usize) -> &[i64] {
        &self.windings[e]
    }

    /// Lifted displacement of the periodic coordinates along a side.
    fn displacement(&self, side: Side) -> Vec<f64> {
        let e = self.surface.edges()[side.edge];
        let periods = self.target.periods();
        let mut d = Vec::with_capacity(periods.len());
        let (mut i, mut c) = (0, 0);
        for a in self.target.atoms() {
            match a {
                Atom::Circle(_) => {
                    let raw = self.images[e.head][i] - self.images[e.tail][i]
                        + periods[c] * self.windings[side.edge][c] as f64;
                    d.push(if side.forward { raw } else { -raw });
                    i += 1;
                    c += 1;
                }
                Atom::Su2 => i += 4,
            }
        }
        d
    }

    /// Corner points of a face in a common lift.
    pub fn face_corners(&self, f: usize) -> [Vec<f64>; 3] {
        let face = &self.surface.faces()[f];
        let mut corners = [
            self.images[face.corners[0]].clone(),
            self.images[face.corners[1]].clone(),
            self.images[face.corners[2]].clone(),
        ];
        let d0 = self.displacement(face.sides[0]);
        let d1 = self.displacement(face.sides[1]);
        let (mut i, mut c) = (0, 0);
        for a in self.target.atoms() {
            match a {
                Atom::Circle(_) => {
                    corners[1][i] = corners[0][i] + d0[c];
                    corners[2][i] = corners[1][i] + d1[c];
                    i += 1;
                    c += 1;
                }
                Atom::Su2 => i += 4,
            }
        }
        corners
    }

    /// Point of face `f` at barycentric coordinates `bary` (periodic
    /// coordinates are returned in the face lift, not reduced).
    pub fn interpolate(&self, f: usize, bary: [f64; 3]) -> Vec<f64> {
        let c = self.face_corners(f);
        interpolate_corners(&self.target, &c, bary)
    }

    /// Checked variant of [`SurfaceMap::interpolate`].
    pub fn try_interpolate(&self, f: usize, bary: [f64; 3]) -> Result<Vec<f64>> {
        if f >= self.surface.faces().len() {
            return Err(Error::InvalidInput(format!("face {f} out of range")));
        }
        let s: f64 = bary.iter().sum();
        if bary.iter().any(|&b| b < -1e-12) || (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "barycentric coordinates {bary:?}"
            )));
        }
        Ok(self.interpolate(f, bary))
    }

    /// Point on a side at parameter `t ∈ [0, 1]` from its start to its end,
    /// evaluated in the first face containing the edge.
    pub fn edge_point(&self, side: Side, t: f64) -> Vec<f64> {
        let r = self.surface.incidence(side.edge)[0];
        let face_side = self.surface.side(r);
        // parameter from corner `local` towards corner `local + 1`
        let s = if face_side.forward == side.forward {
            t
        } else {
            1.0 - t
        };
        let mut bary = [0.0; 3];
        bary[r.local] = 1.0 - s;
        bary[(r.local + 1) % 3] = s;
        self.interpolate(r.face, bary)
    }

    fn check_faces(&self) -> Result<()> {
        let np = self.target.periods().len();
        for (f, face) in self.surface.faces().iter().enumerate() {
            if np > 0 {
                let d: Vec<Vec<f64>> = face.sides.iter().map(|s| self.displacement(*s)).collect();
                for c in 0..np {
                    let gap = d[0][c] + d[1][c] + d[2][c];
                    if gap.abs() > SEAM_TOL {
                        return Err(Error::SeamMismatch {
                            edge: face.sides[2].edge,
                            gap: gap.abs(),
                        });
                    }
                }
            }
            let c = self.face_corners(f);
            let mut i = 0;
            for a in self.target.atoms() {
                if a == Atom::Su2 {
                    for (x, y) in [(0, 1), (1, 2), (2, 0)] {
                        let cos = quat::dot(&c[x][i..i + 4], &c[y][i..i + 4]).clamp(-1.0, 1.0);
                        let angle = cos.acos();
                        if angle > FRAC_PI_2 + 1e-9 {
                            return Err(Error::FaceTooLarge { face: f, angle });
                        }
                    }
                }
                i += a.ambient_dim();
            }
        }
        Ok(())
    }

    fn check_seams(&self) -> Result<()> {
        for e in 0..self.surface.edges().len() {
            let inc = self.surface.incidence(e);
            if inc.len() != 2 {
                continue;
            }
            let mid = |r: mesh::EdgeRef| {
                let mut b = [0.0; 3];
                b[r.local] = 0.5;
                b[(r.local + 1) % 3] = 0.5;
                self.interpolate(r.face, b)
            };
            let gap = self.target.distance(&mid(inc[0]), &mid(inc[1]));
            if gap > SEAM_TOL {
                return Err(Error::SeamMismatch { edge: e, gap });
            }
        }
        Ok(())
    }

    /// Same map on the orientation-reversed surface.
    pub fn reversed(&self) -> SurfaceMap {
        SurfaceMap {
            surface: self.surface.reversed(),
            target: self.target.clone(),
            images: self.images.clone(),
            windings: self.windings.clone(),
        }
    }

    /// The map restricted to the barycentric subdivision of its surface.
    pub fn subdivide(&self) -> SurfaceMap {
        let s = &self.surface;
        let sub = mesh::subdivide(s);
        let periods = self.target.periods();
        let mut images = Vec::with_capacity(sub.n_vertices());
        for v in 0..sub.n_vertices() {
            let p = match mesh::subdivision_origin(s, v) {
                VertexOrigin::Vertex(v) => self.images[v].clone(),
                VertexOrigin::EdgeMid(e) => self.target.normalize(&self.edge_point(
                    Side {
                        edge: e,
                        forward: true,
                    },
                    0.5,
                )),
                VertexOrigin::FaceCenter(f) => {
                    self.target.normalize(&self.interpolate(f, [1.0 / 3.0; 3]))
                }
            };
            images.push(p);
        }
        // windings from lifted displacements inside each child face
        let mut windings = vec![vec![0i64; periods.len()]; sub.edges().len()];
        for (cf, face) in sub.faces().iter().enumerate() {
            let parent = cf / 6;
            let l = (cf % 6) / 2;
            let h = cf % 2;
            let pbary = |v: usize| -> [f64; 3] {
                match mesh::subdivision_origin(s, v) {
                    VertexOrigin::FaceCenter(_) => [1.0 / 3.0; 3],
                    VertexOrigin::EdgeMid(_) => {
                        let mut b = [0.0; 3];
                        b[l] = 0.5;
                        b[(l + 1) % 3] = 0.5;
                        b
                    }
                    VertexOrigin::Vertex(_) => {
                        let mut b = [0.0; 3];
                        b[if h == 0 { l } else { (l + 1) % 3 }] = 1.0;
                        b
                    }
                }
            };
            for (k, side) in face.sides.iter().enumerate() {
                let (a, b) = (face.corners[k], face.corners[(k + 1) % 3]);
                let (tail, head) = if side.forward { (a, b) } else { (b, a) };
                let pt = self.interpolate(parent, pbary(tail));
                let ph = self.interpolate(parent, pbary(head));
                let (mut i, mut c) = (0, 0);
                for atom in self.target.atoms() {
                    if let Atom::Circle(_) = atom {
                        let lifted_d = ph[i] - pt[i];
                        let base_d = images[head][i] - images[tail][i];
                        windings[side.edge][c] = ((lifted_d - base_d) / periods[c]).round() as i64;
                        c += 1;
                    }
                    i += atom.ambient_dim();
                }
            }
        }
        SurfaceMap::new(sub, self.target.clone(), images, Some(windings))
            .expect("subdivided map is consistent")
    }
}

pub fn interpolate_corners(target: &TargetSpace, c: &[Vec<f64>; 3], bary: [f64; 3]) -> Vec<f64> {
    let n = c[0].len();
    let mut p: Vec<f64> = (0..n)
        .map(|i| bary[0] * c[0][i] + bary[1] * c[1][i] + bary[2] * c[2][i])
        .collect();
    let mut i = 0;
    for a in target.atoms() {
        if a == Atom::Su2 {
            let q = quat::normalize(&p[i..i + 4]);
            p[i..i + 4].copy_from_slice(&q);
        }
        i += a.ambient_dim();
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use std::f64::consts::PI;

    #[test]
    fn vertex_coordinates_return_vertex_image() {
        let m = fixtures::torus_identity_map(4, 4);
        let f = &m.surface().faces()[3];
        let p = m.interpolate(3, [1.0, 0.0, 0.0]);
        assert!(m.target().distance(&p, m.image(f.corners[0])) < 1e-15);
    }

    #[test]
    fn winding_selects_the_long_arc() {
        let m = fixtures::circle_winding_map(1);
        // both ends sit at 0; the winding puts the midpoint half way round
        let mid = m.edge_point(
            Side {
                edge: 0,
                forward: true,
            },
            0.5,
        );
        assert!((mid[0].rem_euclid(2.0 * PI) - PI).abs() < 1e-12);
    }

    #[test]
    fn su2_edge_midpoint_is_geodesic() {
        let m = fixtures::sphere_octa_map();
        let f = &m.surface().faces()[0];
        let p = m.interpolate(0, [0.5, 0.5, 0.0]);
        assert!((quat::norm(&p) - 1.0).abs() < 1e-14);
        let a = m.image(f.corners[0]);
        let b = m.image(f.corners[1]);
        let sum = quat::normalize(&[a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]);
        assert!(m.target().distance(&p, &sum) < 1e-14);
        assert!((quat::dot(&p, a) - quat::dot(&p, b)).abs() < 1e-14);
    }

    #[test]
    fn seams_are_checked() {
        let m = fixtures::torus_identity_map(3, 3);
        let mut spec = m.to_spec();
        spec.edge_windings.as_mut().unwrap()[0][0] += 1;
        let err = SurfaceMap::from_spec(m.surface().clone(), spec).unwrap_err();
        assert!(matches!(err, Error::SeamMismatch { .. }));
    }

    #[test]
    fn large_su2_faces_are_rejected() {
        let s = fixtures::sphere_tetra();
        let v = [
            [1.0, 1.0, 1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0],
        ];
        let images = v
            .iter()
            .map(|x| quat::normalize(&[0.0, x[0], x[1], x[2]]).to_vec())
            .collect();
        let err = SurfaceMap::new(s, TargetSpace::Su2, images, None).unwrap_err();
        assert!(matches!(err, Error::FaceTooLarge { .. }));
    }

    #[test]
    fn subdivision_keeps_the_map() {
        let m = fixtures::torus_identity_map(3, 3);
        let s = m.subdivide();
        // each child face reproduces the parent map at its corners
        for cf in 0..s.surface().faces().len() {
            let parent = cf / 6;
            let corners = s.face_corners(cf);
            let p = m.interpolate(parent, [1.0 / 3.0; 3]);
            assert!(corners.iter().any(|c| m.target().distance(c, &p) < 1e-12));
        }
    }
}
