//! Holonomy jobs and validation inputs.

use std::path::Path;

use gerbecalc::fields::MapSpec;
use gerbecalc::freeboson::{Frac, FreeBosonBiBrane};
use gerbecalc::gerbedata::{
    self, validate_bibrane, validate_cocycle, validate_dbrane, validate_jandl, BiBraneRecord,
    DBraneRecord, DeligneSpec, DeligneSurfaceData, Involution, JandlTrivialData, WorldVolume,
};
use gerbecalc::holonomy::{self, Computation, Lifts, Variations};
use gerbecalc::mesh::{self, SurfaceSpec};
use gerbecalc::registry::{self, FormRef};
use gerbecalc::wzw::{self, BraneLabel};
use gerbecalc::{fixtures, FormOracle, SurfaceMap, TargetSpace, TriangulatedSurface};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::io::{CliError, CliResult, Inline};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Closed,
    Deligne,
    Unoriented,
    Boundary,
    Defect,
}

/// Trivial Jandl data by name.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum JandlRef {
    /// Zero forms on SU(2), `g ↦ g⁻¹`, constant phase.
    Su2ConstantPhase { phase: [f64; 2] },
    /// Flux `c dx∧dy` on the unit torus with the glide involution.
    KleinFlux {
        c: f64,
        #[serde(default)]
        twisted: bool,
    },
}

impl JandlRef {
    pub fn build(&self) -> JandlTrivialData {
        match self {
            JandlRef::Su2ConstantPhase { phase } => {
                fixtures::su2_constant_phase(Complex64::new(phase[0], phase[1]))
            }
            JandlRef::KleinFlux { c, twisted } => fixtures::klein_data(*c, *twisted),
        }
    }

    fn involution(&self) -> Involution {
        self.build().involution
    }
}

/// A brane for the boundary engine: an SU(2) label or explicit data.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BraneRef {
    Su2 {
        k: i64,
        alpha: u32,
    },
    Explicit {
        world_volume: WorldVolume,
        omega: FormRef,
        module: Vec<FormRef>,
    },
}

impl BraneRef {
    fn build(&self) -> CliResult<DBraneRecord> {
        Ok(match self {
            BraneRef::Su2 { k, alpha } => wzw::dbrane(BraneLabel::new(*k, *alpha)?),
            BraneRef::Explicit {
                world_volume,
                omega,
                module,
            } => DBraneRecord {
                world_volume: world_volume.clone(),
                omega: omega.resolve()?,
                module: registry::connection(module)?,
            },
        })
    }
}

/// Defect configurations on the split torus.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum DefectRef {
    /// Trivial diagonal defects on the `n × m` grid torus with flux `c dx∧dy`.
    DiagonalTorus { n: usize, m: usize, c: f64 },
    /// Free boson of winding `w` with bi-brane `(x, α)` on the outer circle
    /// and the identity defect on the inner one.
    FreeBoson {
        cells: usize,
        rows: usize,
        winding: i64,
        radius: f64,
        x: String,
        alpha: String,
    },
}

/// Parse `"p/q"`, an integer or a decimal as an exact fraction.
pub fn parse_frac(s: &str) -> CliResult<Frac> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let (p, q): (i64, i64) = (
            p.trim()
                .parse()
                .map_err(|_| CliError::Parse(format!("bad fraction {s}")))?,
            q.trim()
                .parse()
                .map_err(|_| CliError::Parse(format!("bad fraction {s}")))?,
        );
        if q == 0 {
            return Err(CliError::Parse(format!("zero denominator in {s}")));
        }
        return Ok(Frac::new(p, q));
    }
    if let Ok(n) = s.parse::<i64>() {
        return Ok(Frac::from_integer(n));
    }
    let v: f64 = s
        .parse()
        .map_err(|_| CliError::Parse(format!("bad number {s}")))?;
    Ok(gerbecalc::freeboson::frac_from_f64(v)?)
}

pub fn frac_string(r: Frac) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl DefectRef {
    fn run(&self) -> CliResult<holonomy::HolonomyResult> {
        match self {
            DefectRef::DiagonalTorus { n, m, c } => {
                if *n < 3 || *m < 6 || m % 2 == 1 {
                    return Err(CliError::Parse(
                        "split torus needs n >= 3 and even m >= 6".into(),
                    ));
                }
                let (m1, m2) = fixtures::split_torus_maps(*n, *m);
                let t = TargetSpace::unit_torus();
                let rho = fixtures::dxdy(t.clone(), *c);
                let defects = fixtures::split_defects(
                    m1.surface(),
                    m2.surface(),
                    *n,
                    m / 2,
                    fixtures::diagonal_bibrane(t.clone()),
                    fixtures::diagonal_bibrane(t),
                );
                Ok(holonomy::holonomy_defect(&rho, &rho, &defects, &m1, &m2)?)
            }
            DefectRef::FreeBoson {
                cells,
                rows,
                winding,
                radius,
                x,
                alpha,
            } => {
                if *cells < 3 || *rows < 1 {
                    return Err(CliError::Parse(
                        "free boson split needs cells >= 3 and rows >= 1".into(),
                    ));
                }
                let bb = FreeBosonBiBrane::new(*radius, parse_frac(x)?, parse_frac(alpha)?)?;
                let (m1, m2) =
                    fixtures::free_boson_split(*cells, *rows, *winding, bb.shift(), *radius);
                let id = FreeBosonBiBrane::identity(*radius)?;
                let defects = fixtures::split_defects(
                    m1.surface(),
                    m2.surface(),
                    *cells,
                    *rows,
                    bb.record(),
                    id.record(),
                );
                let zero = FormOracle::zero(2, TargetSpace::Circle { radius: *radius });
                Ok(holonomy::holonomy_defect(&zero, &zero, &defects, &m1, &m2)?)
            }
        }
    }
}

/// `{ "engine", "mesh", "map", "form", local data, "jandl", "brane",
/// "defect", "variations" }`; which fields are needed depends on the engine.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolonomyJob {
    #[serde(default)]
    pub engine: Option<Engine>,
    #[serde(default)]
    pub mesh: Option<Inline<SurfaceSpec>>,
    #[serde(default)]
    pub map: Option<Inline<MapSpec>>,
    /// Per-face target lifts of the base, for unoriented jobs without a map.
    #[serde(default)]
    pub face_lifts: Option<Vec<[Vec<f64>; 3]>>,
    #[serde(default)]
    pub form: Option<FormRef>,
    #[serde(default)]
    pub chart_of_face: Option<Vec<usize>>,
    #[serde(default)]
    pub b: Option<Vec<f64>>,
    #[serde(default)]
    pub a: Option<Vec<f64>>,
    #[serde(default)]
    pub g: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub jandl: Option<JandlRef>,
    #[serde(default)]
    pub lifts: Option<Lifts>,
    #[serde(default)]
    pub brane: Option<BraneRef>,
    #[serde(default)]
    pub defect: Option<DefectRef>,
    #[serde(default)]
    pub variations: Option<Variations>,
}

fn need<T: Clone>(v: &Option<T>, what: &str, engine: Engine) -> CliResult<T> {
    v.clone()
        .ok_or_else(|| CliError::Parse(format!("{engine:?} job needs \"{what}\"")))
}

impl HolonomyJob {
    fn surface(&self, engine: Engine, base: Option<&Path>) -> CliResult<TriangulatedSurface> {
        let spec = need(&self.mesh, "mesh", engine)?.load(base)?;
        Ok(TriangulatedSurface::build(spec)?)
    }

    fn map_on(
        &self,
        s: TriangulatedSurface,
        engine: Engine,
        base: Option<&Path>,
    ) -> CliResult<SurfaceMap> {
        let spec = need(&self.map, "map", engine)?.load(base)?;
        Ok(SurfaceMap::from_spec(s, spec)?)
    }

    pub fn deligne_data(&self, base: Option<&Path>) -> CliResult<DeligneSurfaceData> {
        let e = Engine::Deligne;
        let s = self.surface(e, base)?;
        let spec = DeligneSpec {
            chart_of_face: need(&self.chart_of_face, "chart_of_face", e)?,
            b: need(&self.b, "b", e)?,
            a: need(&self.a, "a", e)?,
            g: need(&self.g, "g", e)?,
        };
        Ok(DeligneSurfaceData::from_spec(s, spec)?)
    }

    fn computation(&self, engine: Engine, base: Option<&Path>) -> CliResult<Computation> {
        Ok(match engine {
            Engine::Closed => {
                let s = self.surface(engine, base)?;
                Computation::Closed {
                    omega: need(&self.form, "form", engine)?.resolve()?,
                    map: self.map_on(s, engine, base)?,
                }
            }
            Engine::Deligne => Computation::Deligne {
                data: self.deligne_data(base)?,
            },
            Engine::Unoriented => {
                let s = self.surface(engine, base)?;
                let jr = need(&self.jandl, "jandl", engine)?;
                let data = jr.build();
                let (cover, map) = match (&self.face_lifts, &self.map) {
                    (Some(l), _) => {
                        holonomy::cover_map(&s, data.omega.target.clone(), &jr.involution(), l)?
                    }
                    (None, Some(_)) => {
                        let cover = mesh::orientation_double_cover(&s)?;
                        let map = self.map_on(cover.total.clone(), engine, base)?;
                        holonomy::check_equivariant(&cover, &map, &data.involution)?;
                        (cover, map)
                    }
                    (None, None) => {
                        return Err(CliError::Parse(
                            "unoriented job needs \"map\" or \"face_lifts\"".into(),
                        ))
                    }
                };
                Computation::Unoriented { data, cover, map }
            }
            Engine::Boundary => {
                let s = self.surface(engine, base)?;
                Computation::Boundary {
                    rho: need(&self.form, "form", engine)?.resolve()?,
                    brane: need(&self.brane, "brane", engine)?.build()?,
                    map: self.map_on(s, engine, base)?,
                }
            }
            Engine::Defect => unreachable!("defect jobs use presets"),
        })
    }
}

/// Run a holonomy job; the report carries `value`, `spread` and diagnostics.
pub fn run_holonomy(
    job: &HolonomyJob,
    engine: Option<Engine>,
    base: Option<&Path>,
) -> CliResult<Value> {
    let engine = engine
        .or(job.engine)
        .ok_or_else(|| CliError::Parse("no engine given (--engine or \"engine\")".into()))?;
    let (result, spread, by_kind) = if engine == Engine::Defect {
        let d = need(&job.defect, "defect", engine)?;
        (d.run()?, None, None)
    } else {
        let comp = job.computation(engine, base)?;
        let single = match &comp {
            Computation::Closed { omega, map } => holonomy::holonomy_closed(omega, map)?,
            Computation::Deligne { data } => holonomy::holonomy_deligne(data)?,
            Computation::Unoriented { data, cover, map } => {
                let terms = holonomy::UnorientedTerms::new(data, cover, map)?;
                let lifts = job
                    .lifts
                    .clone()
                    .unwrap_or_else(|| Lifts::canonical(terms.base()));
                holonomy::holonomy_unoriented(data, cover, map, &lifts)?
            }
            Computation::Boundary { rho, brane, map } => {
                holonomy::holonomy_boundary(rho, brane, map)?
            }
        };
        match &job.variations {
            Some(v) if *v != Variations::default() => {
                let rep = holonomy::independence_harness(&comp, v)?;
                (single, Some(rep.spread), Some(rep.by_kind))
            }
            _ => (single, None, None),
        }
    };
    Ok(json!({
        "schema": crate::io::SCHEMA,
        "command": "holonomy",
        "engine": engine,
        "value": [result.value.re, result.value.im],
        "spread": spread,
        "variations": by_kind,
        "diagnostics": result.diagnostics,
    }))
}

/// Input of `validate --dbrane` and `validate --bibrane`: SU(2) labels at a
/// level (all labels when `alpha` is absent), or explicit forms.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BraneInput {
    Su2 {
        k: i64,
        #[serde(default)]
        alpha: Option<u32>,
    },
    ExplicitBiBrane {
        h1: FormRef,
        h2: FormRef,
        world_volume: WorldVolume,
        varpi: FormRef,
        bundle: Vec<FormRef>,
    },
    ExplicitDBrane {
        h: FormRef,
        world_volume: WorldVolume,
        omega: FormRef,
        module: Vec<FormRef>,
    },
}

fn labels(k: i64, alpha: Option<u32>) -> CliResult<Vec<BraneLabel>> {
    match alpha {
        Some(a) => Ok(vec![BraneLabel::new(k, a)?]),
        None => {
            let k0 = BraneLabel::new(k, 0)?.k;
            Ok((0..=k0).map(|a| BraneLabel { k: k0, alpha: a }).collect())
        }
    }
}

pub struct Settings {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
}

fn verdict(reports: Vec<Value>, worst: f64, tol: f64) -> Value {
    json!({
        "schema": crate::io::SCHEMA,
        "reports": reports,
        "max_residual": worst,
        "tolerance": tol,
        "pass": worst <= tol,
    })
}

pub fn validate_brane(input: &BraneInput, bi: bool, st: &Settings) -> CliResult<Value> {
    let mut reports = Vec::new();
    let mut worst: f64 = 0.0;
    let mut push = |name: String, r: gerbedata::ValidationReport| {
        worst = worst.max(r.max_residual);
        reports.push(json!({ "brane": name, "max_residual": r.max_residual, "mean_residual": r.mean_residual, "failing": r.failing }));
    };
    match (input, bi) {
        (BraneInput::Su2 { k, alpha }, _) => {
            let h = wzw::canonical_three_form(*k)?;
            for l in labels(*k, *alpha)? {
                let name = format!("su2/k={}/alpha={}", l.k, l.alpha);
                let r = if bi {
                    validate_bibrane(&h, &h, &wzw::bibrane(l), st.samples, st.seed)?
                } else {
                    validate_dbrane(&h, &wzw::dbrane(l), st.samples, st.seed)?
                };
                push(name, r);
            }
        }
        (
            BraneInput::ExplicitBiBrane {
                h1,
                h2,
                world_volume,
                varpi,
                bundle,
            },
            true,
        ) => {
            let bb = BiBraneRecord {
                world_volume: world_volume.clone(),
                varpi: varpi.resolve()?,
                bundle: registry::connection(bundle)?,
            };
            push(
                varpi.name.clone(),
                validate_bibrane(&h1.resolve()?, &h2.resolve()?, &bb, st.samples, st.seed)?,
            );
        }
        (
            BraneInput::ExplicitDBrane {
                h,
                world_volume,
                omega,
                module,
            },
            false,
        ) => {
            let b = DBraneRecord {
                world_volume: world_volume.clone(),
                omega: omega.resolve()?,
                module: registry::connection(module)?,
            };
            push(
                omega.name.clone(),
                validate_dbrane(&h.resolve()?, &b, st.samples, st.seed)?,
            );
        }
        _ => {
            return Err(CliError::Parse(
                "input does not describe this kind of brane".into(),
            ))
        }
    }
    let mut v = verdict(reports, worst, st.tol);
    v["command"] = json!(if bi {
        "validate-bibrane"
    } else {
        "validate-dbrane"
    });
    Ok(v)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JandlInput {
    pub jandl: JandlRef,
}

pub fn validate_jandl_input(input: &JandlInput, st: &Settings) -> CliResult<Value> {
    let r = validate_jandl(&input.jandl.build(), st.samples, st.seed)?;
    let worst = r.curvature.max(r.connection_shift).max(r.equivariance);
    Ok(json!({
        "schema": crate::io::SCHEMA,
        "command": "validate-jandl",
        "report": r,
        "max_residual": worst,
        "tolerance": st.tol,
        "pass": r.pass && worst <= st.tol,
    }))
}

pub fn validate_cocycle_input(job: &HolonomyJob, base: Option<&Path>) -> CliResult<Value> {
    let data = job.deligne_data(base)?;
    let r = validate_cocycle(&data);
    Ok(json!({
        "schema": crate::io::SCHEMA,
        "command": "validate-cocycle",
        "max_residual": r.max_residual,
        "failing_vertices": r.failing_vertices,
        "failing_edges": r.failing_edges,
        "tolerance": gerbedata::COCYCLE_TOL,
        "pass": r.pass,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions() {
        assert_eq!(parse_frac("2/6").unwrap(), Frac::new(1, 3));
        assert_eq!(parse_frac(" -3 ").unwrap(), Frac::from_integer(-3));
        assert_eq!(parse_frac("0.25").unwrap(), Frac::new(1, 4));
        assert!(parse_frac("1/0").is_err());
        assert!(parse_frac("x").is_err());
        assert_eq!(frac_string(Frac::new(-2, 4)), "-1/2");
        assert_eq!(frac_string(Frac::from_integer(5)), "5");
    }

    #[test]
    fn job_shape() {
        let job: HolonomyJob =
            serde_json::from_str(r#"{"engine":"closed","mesh":"m.json","form":{"name":"dxdy"}}"#)
                .unwrap();
        assert_eq!(job.engine, Some(Engine::Closed));
        assert!(matches!(job.mesh, Some(Inline::Path(_))));
        assert!(serde_json::from_str::<HolonomyJob>(r#"{"engin":"closed"}"#).is_err());
        let err = run_holonomy(&job, None, None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = run_holonomy(&HolonomyJob::default(), None, None).unwrap_err();
        assert!(err.to_string().contains("engine"));
    }

    #[test]
    fn brane_inputs() {
        let label: BraneInput = serde_json::from_str(r#"{"k":2,"alpha":1}"#).unwrap();
        assert!(matches!(
            label,
            BraneInput::Su2 {
                k: 2,
                alpha: Some(1)
            }
        ));
        assert_eq!(labels(3, None).unwrap().len(), 4);
        assert!(labels(2, Some(3)).is_err());
    }
}
