use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::target::TargetSpace;

/// Evaluator of a k-form: `(point, tangents) -> value`. Tangents are ambient
/// vectors tangent to the target at the point.
pub type FormFn = dyn Fn(&[f64], &[&[f64]]) -> f64 + Send + Sync;

/// A differential form given by a closed-form evaluator.
#[derive(Clone)]
pub struct FormOracle {
    pub degree: usize,
    pub name: String,
    pub target: TargetSpace,
    f: Arc<FormFn>,
}

impl fmt::Debug for FormOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FormOracle")
            .field("degree", &self.degree)
            .field("name", &self.name)
            .field("target", &self.target)
            .finish()
    }
}

impl FormOracle {
    pub fn new<F>(degree: usize, name: impl Into<String>, target: TargetSpace, f: F) -> Self
    where
        F: Fn(&[f64], &[&[f64]]) -> f64 + Send + Sync + 'static,
    {
        FormOracle {
            degree,
            name: name.into(),
            target,
            f: Arc::new(f),
        }
    }

    pub fn zero(degree: usize, target: TargetSpace) -> Self {
        FormOracle::new(degree, "zero", target, |_, _| 0.0)
    }

    pub fn eval(&self, p: &[f64], tangents: &[&[f64]]) -> f64 {
        debug_assert_eq!(tangents.len(), self.degree);
        (self.f)(p, tangents)
    }

    /// Like [`FormOracle::eval`], failing on non-finite values.
    pub fn try_eval(&self, p: &[f64], tangents: &[&[f64]]) -> Result<f64> {
        let v = self.eval(p, tangents);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(format!("{} at {p:?}", self.name)))
        }
    }

    pub fn scaled(&self, c: f64) -> FormOracle {
        let f = self.f.clone();
        FormOracle::new(
            self.degree,
            format!("{c}*{}", self.name),
            self.target.clone(),
            move |p, t| c * f(p, t),
        )
    }

    pub fn plus(&self, other: &FormOracle) -> FormOracle {
        assert_eq!(
            self.degree, other.degree,
            "adding forms of different degree"
        );
        let (f, g) = (self.f.clone(), other.f.clone());
        FormOracle::new(
            self.degree,
            format!("{}+{}", self.name, other.name),
            self.target.clone(),
            move |p, t| f(p, t) + g(p, t),
        )
    }

    pub fn minus(&self, other: &FormOracle) -> FormOracle {
        self.plus(&other.scaled(-1.0))
    }

    /// Pullback along a smooth map `phi` with ambient differential computed
    /// by central differences in the tangent direction.
    pub fn pullback<F>(&self, source: TargetSpace, phi: F) -> FormOracle
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        let f = self.f.clone();
        let target = self.target.clone();
        FormOracle::new(
            self.degree,
            format!("pullback({})", self.name),
            source,
            move |p, t| {
                let q = phi(p);
                let pushed: Vec<Vec<f64>> =
                    t.iter().map(|v| pushforward(&phi, p, v, 1e-6)).collect();
                let pushed: Vec<Vec<f64>> = pushed
                    .iter()
                    .map(|w| target.project_tangent(&q, w))
                    .collect();
                let refs: Vec<&[f64]> = pushed.iter().map(|v| v.as_slice()).collect();
                f(&q, &refs)
            },
        )
    }

    /// Pullback along the projection of a product target onto a factor
    /// occupying ambient coordinates `offset..offset + len`.
    pub fn on_factor(&self, product: TargetSpace, offset: usize) -> FormOracle {
        let n = self.target.ambient_dim();
        let f = self.f.clone();
        FormOracle::new(
            self.degree,
            format!("p*{}", self.name),
            product,
            move |p, t| {
                let sliced: Vec<&[f64]> = t.iter().map(|v| &v[offset..offset + n]).collect();
                f(&p[offset..offset + n], &sliced)
            },
        )
    }
}

/// Central-difference derivative of `phi` at `p` along `v`.
pub fn pushforward<F: Fn(&[f64]) -> Vec<f64>>(phi: &F, p: &[f64], v: &[f64], h: f64) -> Vec<f64> {
    let plus: Vec<f64> = p.iter().zip(v).map(|(x, d)| x + h * d).collect();
    let minus: Vec<f64> = p.iter().zip(v).map(|(x, d)| x - h * d).collect();
    let (a, b) = (phi(&plus), phi(&minus));
    a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * h)).collect()
}

/// Fourth-order five-point version of [`pushforward`].
pub fn pushforward4<F: Fn(&[f64]) -> Vec<f64>>(phi: &F, p: &[f64], v: &[f64], h: f64) -> Vec<f64> {
    let at = |c: f64| {
        phi(&p
            .iter()
            .zip(v)
            .map(|(x, d)| x + c * h * d)
            .collect::<Vec<_>>())
    };
    let (m2, m1, p1, p2) = (at(-2.0), at(-1.0), at(1.0), at(2.0));
    (0..m1.len())
        .map(|i| (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * h))
        .collect()
}

/// Step for exterior derivatives.
pub const D_STEP: f64 = 1e-4;
/// Step for chart differentials inside exterior derivatives.
const INNER_STEP: f64 = 1e-5;

/// Finite-difference exterior derivative `dω(v₀, …, v_k)` at `p`.
///
/// Works in the chart `x ↦ retract(p, x)`. Tangents are expressed in chart
/// coordinates, the coordinate vector fields commute, so
/// `dω(v₀..v_k) = Σ_j (-1)^j ∂_{v_j} ω(ṽ₀, …, ṽ_j omitted, …, ṽ_k)` where `ṽ`
/// are the constant-coefficient fields extending the `v`.
pub fn exterior_derivative_fd(form: &FormOracle, p: &[f64], tangents: &[&[f64]]) -> Result<f64> {
    let k = form.degree;
    if k > 2 {
        return Err(Error::InvalidInput(
            "exterior derivative implemented for degree <= 2".into(),
        ));
    }
    if tangents.len() != k + 1 {
        return Err(Error::ShapeMismatch(format!(
            "need {} tangents, got {}",
            k + 1,
            tangents.len()
        )));
    }
    let target = &form.target;
    target.check_point(p)?;
    let basis = target.tangent_basis(p);
    // chart coordinates of each tangent (the basis is orthonormal)
    let coords: Vec<Vec<f64>> = tangents
        .iter()
        .map(|v| {
            basis
                .iter()
                .map(|b| b.iter().zip(v.iter()).map(|(x, y)| x * y).sum())
                .collect()
        })
        .collect();
    let chart = |x: &[f64]| target.retract(p, x);
    let dim = basis.len();
    let eval_at = |x: &[f64], omit: usize| -> f64 {
        let q = chart(x);
        let fields: Vec<Vec<f64>> = (0..=k)
            .filter(|&i| i != omit)
            .map(|i| pushforward(&chart, x, &coords[i], INNER_STEP))
            .collect();
        let refs: Vec<&[f64]> = fields.iter().map(|v| v.as_slice()).collect();
        form.eval(&q, &refs)
    };
    let mut total = 0.0;
    for j in 0..=k {
        let xp: Vec<f64> = coords[j].iter().map(|c| D_STEP * c).collect();
        let xm: Vec<f64> = coords[j].iter().map(|c| -D_STEP * c).collect();
        debug_assert_eq!(xp.len(), dim);
        let d = (eval_at(&xp, j) - eval_at(&xm, j)) / (2.0 * D_STEP);
        total += if j % 2 == 0 { d } else { -d };
    }
    if !total.is_finite() {
        return Err(Error::ChartBoundary(format!("{} at {p:?}", form.name)));
    }
    Ok(total)
}

/// `dω` as a form oracle (evaluation failures become NaN).
pub fn exterior_derivative(form: &FormOracle) -> FormOracle {
    let f = form.clone();
    FormOracle::new(
        form.degree + 1,
        format!("d{}", form.name),
        form.target.clone(),
        move |p, t| exterior_derivative_fd(&f, p, t).unwrap_or(f64::NAN),
    )
}

/// Largest relative deviation from antisymmetry over all adjacent swaps.
pub fn antisymmetry_defect(form: &FormOracle, p: &[f64], tangents: &[&[f64]]) -> f64 {
    let base = form.eval(p, tangents);
    let mut worst: f64 = 0.0;
    for i in 0..tangents.len().saturating_sub(1) {
        let mut t = tangents.to_vec();
        t.swap(i, i + 1);
        let swapped = form.eval(p, &t);
        let scale = base.abs().max(1e-300);
        worst = worst.max((base + swapped).abs() / scale.max(1.0));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn flat2() -> TargetSpace {
        TargetSpace::Torus { radii: [1.0, 1.0] }
    }

    #[test]
    fn curl_of_constant_one_form() {
        // ω = a dx + b x dy, dω = b dx∧dy
        let w = FormOracle::new(1, "w", flat2(), |p, t| 0.3 * t[0][0] + 1.7 * p[0] * t[0][1]);
        let v = exterior_derivative_fd(&w, &[0.4, 0.9], &[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert!((v - 1.7).abs() < 1e-6);
    }

    #[test]
    fn d_squared_vanishes_on_functions() {
        let f = FormOracle::new(0, "f", flat2(), |p, _| (p[0]).sin() * (2.0 * p[1]).cos());
        let df = exterior_derivative(&f);
        let ddf = exterior_derivative_fd(&df, &[0.3, 1.1], &[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert!(ddf.abs() < 1e-4);
    }

    #[test]
    fn maurer_cartan_structure_equation() {
        // θ¹(X) = (g⁻¹X)_x; dθ¹(X,Y) = -(θ∧θ)-term: dθ¹ = -2 θ²∧θ³
        let th = FormOracle::new(1, "theta_x", TargetSpace::Su2, |g, t| {
            crate::quat::left_mc(g, t[0])[0]
        });
        let g = crate::quat::normalize(&[0.5, 0.1, -0.7, 0.3]);
        let b = TargetSpace::Su2.tangent_basis(&g);
        let d = exterior_derivative_fd(&th, &g, &[&b[1], &b[2]]).unwrap();
        assert!((d + 2.0).abs() < 1e-6, "{d}");
        let d = exterior_derivative_fd(&th, &g, &[&b[0], &b[1]]).unwrap();
        assert!(d.abs() < 1e-6);
        let _ = PI;
    }

    #[test]
    fn factor_pullback_slices() {
        let vol = FormOracle::new(2, "dxdy", flat2(), |_, t| {
            t[0][0] * t[1][1] - t[0][1] * t[1][0]
        });
        let prod = TargetSpace::product(TargetSpace::Circle { radius: 1.0 }, flat2());
        let p = vol.on_factor(prod, 1);
        assert_eq!(
            p.eval(&[0.0, 0.0, 0.0], &[&[5.0, 1.0, 0.0], &[7.0, 0.0, 1.0]]),
            1.0
        );
    }
}
