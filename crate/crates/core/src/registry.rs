//! Built-in forms addressed by name, for JSON inputs.
//!
//! A reference reads `{ "name": "su2.omega_h", "params": { "k": 2, "alpha": 1 } }`,
//! with an optional `"target"` for the names that work on any target.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Connection, FormOracle, TargetSpace};
use crate::fixtures;
use crate::wzw::{self, BraneLabel, ConjugacyClass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormRef {
    pub name: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpace>,
}

impl FormRef {
    pub fn new(name: &str, params: &[(&str, f64)]) -> Self {
        FormRef {
            name: name.into(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            target: None,
        }
    }

    pub fn on(mut self, target: TargetSpace) -> Self {
        self.target = Some(target);
        self
    }

    fn param(&self, key: &str) -> Result<f64> {
        self.params
            .get(key)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("form {} needs parameter {key}", self.name)))
    }

    fn param_or(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    fn level(&self) -> Result<i64> {
        let k = self.param("k")?;
        if k.fract() != 0.0 {
            return Err(Error::InvalidInput(format!("level {k} is not an integer")));
        }
        Ok(k as i64)
    }

    /// Angle from `theta`, or from the brane label `alpha` at level `k`.
    fn angle(&self) -> Result<f64> {
        if let Some(t) = self.params.get("theta") {
            return Ok(*t);
        }
        let a = self.param("alpha")?;
        if a < 0.0 || a.fract() != 0.0 {
            return Err(Error::InvalidInput(format!(
                "label {a} is not a natural number"
            )));
        }
        Ok(BraneLabel::new(self.level()?, a as u32)?.angle())
    }

    pub fn resolve(&self) -> Result<FormOracle> {
        let target = |default: TargetSpace| self.target.clone().unwrap_or(default);
        match self.name.as_str() {
            "zero" => {
                let t = self
                    .target
                    .clone()
                    .ok_or_else(|| Error::InvalidInput("form zero needs a target".into()))?;
                Ok(FormOracle::zero(self.param_or("degree", 2.0) as usize, t))
            }
            "dxdy" => Ok(fixtures::dxdy(
                target(TargetSpace::unit_torus()),
                self.param_or("c", 1.0),
            )),
            "torus.vol" => Ok(fixtures::torus_vol([
                self.param_or("r1", 1.0),
                self.param_or("r2", 1.0),
            ])),
            // constant 1-form `c dx_i`
            "dx" => {
                let t = target(TargetSpace::unit_torus());
                let (c, i) = (
                    self.param_or("c", 1.0),
                    self.param_or("index", 0.0) as usize,
                );
                if i >= t.ambient_dim() {
                    return Err(Error::InvalidInput(format!("coordinate {i} out of range")));
                }
                Ok(FormOracle::new(1, format!("{c}*dx{i}"), t, move |_, v| {
                    c * v[0][i]
                }))
            }
            "su2.H" => wzw::canonical_three_form(self.level()?),
            "su2.class_area" => Ok(wzw::class_area_form()),
            "su2.omega_h" => wzw::omega_h(ConjugacyClass::new(self.angle()?)?, self.level()?),
            "su2.varpi" => wzw::varpi_for_angle(self.angle()?, self.level()?, true),
            other => Err(Error::UnknownForm(other.into())),
        }
    }
}

/// Abelian connection from one form, or a direct sum of several.
pub fn connection(parts: &[FormRef]) -> Result<Connection> {
    let forms = parts
        .iter()
        .map(FormRef::resolve)
        .collect::<Result<Vec<_>>>()?;
    if let Some(f) = forms.iter().find(|f| f.degree != 1) {
        return Err(Error::InvalidInput(format!(
            "connection form {} has degree {}",
            f.name, f.degree
        )));
    }
    Ok(match forms.len() {
        1 => Connection::Abelian(forms.into_iter().next().expect("one form")),
        _ => Connection::direct_sum(forms),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_resolve() {
        let h = FormRef::new("su2.H", &[("k", 2.0)]).resolve().unwrap();
        assert_eq!((h.degree, h.target.clone()), (3, TargetSpace::Su2));
        let w = FormRef::new("su2.varpi", &[("k", 2.0), ("alpha", 1.0)])
            .resolve()
            .unwrap();
        assert_eq!(w.target, wzw::su2_pair());
        let v = FormRef::new("torus.vol", &[]).resolve().unwrap();
        assert_eq!(v.degree, 2);
        let a = FormRef::new("dx", &[("c", 0.5), ("index", 1.0)])
            .resolve()
            .unwrap();
        assert_eq!(a.eval(&[0.0, 0.0], &[&[0.0, 2.0]]), 1.0);
    }

    #[test]
    fn bad_references() {
        assert!(matches!(
            FormRef::new("nope", &[]).resolve(),
            Err(Error::UnknownForm(_))
        ));
        assert!(FormRef::new("su2.H", &[]).resolve().is_err());
        assert!(FormRef::new("su2.H", &[("k", 1.5)]).resolve().is_err());
        assert!(FormRef::new("su2.omega_h", &[("k", 2.0), ("alpha", 3.0)])
            .resolve()
            .is_err());
        assert!(FormRef::new("zero", &[]).resolve().is_err());
        assert!(connection(&[FormRef::new("dxdy", &[])]).is_err());
    }

    #[test]
    fn json_shape() {
        let r: FormRef =
            serde_json::from_str(r#"{"name": "su2.omega_h", "params": {"k": 3, "theta": 1.0}}"#)
                .unwrap();
        assert_eq!(r.resolve().unwrap().degree, 2);
    }
}
