//! Unit quaternions as SU(2), stored as `[w, x, y, z]`.

use nalgebra::{Quaternion, Vector3};

pub type Quat = [f64; 4];

pub const ONE: Quat = [1.0, 0.0, 0.0, 0.0];

fn to_na(p: &[f64]) -> Quaternion<f64> {
    Quaternion::new(p[0], p[1], p[2], p[3])
}

fn from_na(q: Quaternion<f64>) -> Quat {
    [q.w, q.i, q.j, q.k]
}

pub fn from_slice(p: &[f64]) -> Quat {
    [p[0], p[1], p[2], p[3]]
}

pub fn mul(a: &[f64], b: &[f64]) -> Quat {
    from_na(to_na(a) * to_na(b))
}

pub fn conj(a: &[f64]) -> Quat {
    [a[0], -a[1], -a[2], -a[3]]
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: &[f64]) -> Quat {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n, a[3] / n]
}

/// `exp(v_x i + v_y j + v_z k)`.
pub fn exp(v: &[f64]) -> Quat {
    from_na(Quaternion::from_imag(Vector3::new(v[0], v[1], v[2])).exp())
}

pub fn vector(a: &[f64]) -> [f64; 3] {
    [a[1], a[2], a[3]]
}

pub fn pure(v: [f64; 3]) -> Quat {
    [0.0, v[0], v[1], v[2]]
}

/// Vector part of `g⁻¹ X`, the left Maurer-Cartan form on a tangent `X` at `g`.
pub fn left_mc(g: &[f64], x: &[f64]) -> [f64; 3] {
    vector(&mul(&conj(g), x))
}

/// Vector part of `X g⁻¹`.
pub fn right_mc(g: &[f64], x: &[f64]) -> [f64; 3] {
    vector(&mul(x, &conj(g)))
}

/// `x g x⁻¹` for unit `x`.
pub fn conjugate_by(x: &[f64], g: &[f64]) -> Quat {
    mul(&mul(x, g), &conj(x))
}

pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn det3(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    dot3(a, cross(b, c))
}

/// Orthonormal tangent basis `g i, g j, g k` at `g`.
pub fn tangent_basis(g: &[f64]) -> [Quat; 3] {
    [
        mul(g, &[0., 1., 0., 0.]),
        mul(g, &[0., 0., 1., 0.]),
        mul(g, &[0., 0., 0., 1.]),
    ]
}

/// Unit quaternion with real part `cos θ` and axis `n`.
pub fn from_angle_axis(theta: f64, n: [f64; 3]) -> Quat {
    let (s, c) = theta.sin_cos();
    [c, s * n[0], s * n[1], s * n[2]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_and_exp() {
        let i = [0., 1., 0., 0.];
        let j = [0., 0., 1., 0.];
        assert_eq!(mul(&i, &j), [0., 0., 0., 1.]);
        let e = exp(&[std::f64::consts::FRAC_PI_2, 0., 0.]);
        assert!((e[0]).abs() < 1e-15 && (e[1] - 1.0).abs() < 1e-15);
        let g = normalize(&[0.3, -0.2, 0.5, 0.7]);
        assert!((norm(&mul(&g, &conj(&g))) - 1.0).abs() < 1e-15);
    }
}
