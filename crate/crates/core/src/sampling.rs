//! Low-discrepancy and seeded random sampling.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::quat::{self, Quat};

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical inverse of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

/// Point `i` of the Halton sequence in `[0, 1)^dim`, shifted by a seeded
/// Cranley-Patterson rotation so different seeds give different point sets.
pub fn halton(i: u64, dim: usize, shift: &[f64]) -> Vec<f64> {
    assert!(dim <= PRIMES.len());
    (0..dim)
        .map(|d| (radical_inverse(i + 1, PRIMES[d]) + shift.get(d).copied().unwrap_or(0.0)).fract())
        .collect()
}

/// `n` Halton points in `[0, 1)^dim` for a seed.
pub fn halton_points(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    (0..n as u64).map(|i| halton(i, dim, &shift)).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Haar-distributed unit quaternion from `u ∈ [0, 1)³`.
pub fn haar_from_unit(u: &[f64]) -> Quat {
    let (a, b) = ((1.0 - u[0]).sqrt(), u[0].sqrt());
    let (t1, t2) = (2.0 * PI * u[1], 2.0 * PI * u[2]);
    [b * t2.cos(), a * t1.sin(), a * t1.cos(), b * t2.sin()]
}

pub fn haar<R: Rng>(rng: &mut R) -> Quat {
    haar_from_unit(&[rng.gen(), rng.gen(), rng.gen()])
}

/// Uniform unit vector on S² from `u ∈ [0, 1)²`.
pub fn sphere_from_unit(u: &[f64]) -> [f64; 3] {
    let z = 2.0 * u[0] - 1.0;
    let r = (1.0 - z * z).max(0.0).sqrt();
    let phi = 2.0 * PI * u[1];
    [r * phi.cos(), r * phi.sin(), z]
}

pub fn sphere<R: Rng>(rng: &mut R) -> [f64; 3] {
    sphere_from_unit(&[rng.gen(), rng.gen()])
}

/// Random tangent vector at `g`, standard normal in the left-invariant frame.
pub fn su2_tangent<R: Rng>(rng: &mut R, g: &[f64]) -> Quat {
    let v = [
        rng.gen::<f64>() - 0.5,
        rng.gen::<f64>() - 0.5,
        rng.gen::<f64>() - 0.5,
    ];
    quat::mul(g, &quat::pure(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        let p = halton_points(8, 3, 7);
        assert!(p.iter().flatten().all(|x| (0.0..1.0).contains(x)));
        assert_eq!(p, halton_points(8, 3, 7));
    }

    #[test]
    fn haar_points_are_unit() {
        for p in halton_points(50, 3, 1) {
            assert!((quat::norm(&haar_from_unit(&p)) - 1.0).abs() < 1e-14);
        }
    }
}
