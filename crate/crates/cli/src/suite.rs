//! Corpus suite: every manifest entry, then every acceptance criterion.
//!
//! The report carries no timings so that a rerun with the same seed gives
//! the same bytes.

use std::path::Path;

use gerbecalc::criteria::{self, CRITERIA};
use serde_json::{json, Value};

use crate::corpus::{Entry, Manifest, MANIFEST};
use crate::io::{self, CliError, CliResult, SCHEMA};
use crate::jobs::{self, HolonomyJob, Settings};

fn check_entry(e: &Entry, dir: &Path, seed: u64, tol: Option<f64>) -> CliResult<(bool, Value)> {
    let input = || -> CliResult<std::path::PathBuf> {
        let name = e
            .input
            .as_deref()
            .ok_or_else(|| CliError::Parse(format!("{}: no input", e.id)))?;
        let p = dir.join(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(CliError::Parse(format!("{}: missing {name}", e.id)))
        }
    };
    let st = Settings {
        samples: gerbecalc::gerbedata::DEFAULT_SAMPLES,
        seed,
        tol: tol.unwrap_or(gerbecalc::gerbedata::CURVATURE_TOL),
    };
    let report = match e.command.as_str() {
        "holonomy" => {
            let p = input()?;
            let job: HolonomyJob = io::read_json(&p)?;
            jobs::run_holonomy(&job, None, p.parent())?
        }
        "validate-bibrane" | "validate-dbrane" => jobs::validate_brane(
            &io::read_json(&input()?)?,
            e.command == "validate-bibrane",
            &st,
        )?,
        "validate-jandl" => jobs::validate_jandl_input(&io::read_json(&input()?)?, &st)?,
        "validate-cocycle" => {
            let p = input()?;
            jobs::validate_cocycle_input(&io::read_json(&p)?, p.parent())?
        }
        "check-bounds" => {
            let k =
                e.k.ok_or_else(|| CliError::Parse(format!("{}: no level", e.id)))?;
            let r = gerbecalc::wzw::fusion_bounds_check(k)?;
            json!({ "pairs": r.pairs, "matching": r.matching, "pass": r.pass() })
        }
        other => {
            return Err(CliError::Parse(format!(
                "{}: unknown command {other}",
                e.id
            )))
        }
    };
    let mut pass = report.get("pass").and_then(Value::as_bool).unwrap_or(true);
    let mut out = json!({ "id": e.id, "command": e.command });
    if let Some(want) = e.expect.value {
        let got = &report["value"];
        let (re, im) = (
            got[0].as_f64().unwrap_or(f64::NAN),
            got[1].as_f64().unwrap_or(f64::NAN),
        );
        let err = (re - want[0]).hypot(im - want[1]);
        let t = tol.or(e.expect.tol).unwrap_or(1e-9);
        pass &= err <= t;
        out["value"] = json!([re, im]);
        out["error"] = json!(err);
        out["tolerance"] = json!(t);
    }
    if let Some(max) = e.expect.spread_max {
        let s = report["spread"].as_f64().unwrap_or(f64::INFINITY);
        let t = tol.unwrap_or(max);
        pass &= s <= t;
        out["spread"] = json!(s);
        out["tolerance"] = json!(t);
    }
    if let Some(r) = report.get("max_residual") {
        out["max_residual"] = r.clone();
    }
    out["pass"] = json!(pass);
    Ok((pass, out))
}

/// Run the suite in `dir`; criteria only when `with_criteria`.
pub fn run(dir: &Path, with_criteria: bool, seed: u64, tol: Option<f64>) -> CliResult<Value> {
    let manifest: Manifest = io::read_json(&dir.join(MANIFEST))?;
    if manifest.schema != SCHEMA {
        return Err(CliError::Parse(format!(
            "manifest schema {} is not {SCHEMA}",
            manifest.schema
        )));
    }
    let mut fixtures = Vec::new();
    let mut failures = Vec::new();
    for e in &manifest.entries {
        // a broken fixture is a failure of that entry, not of the suite
        let (pass, out) = match check_entry(e, dir, seed, tol) {
            Ok(r) => r,
            Err(err) => (
                false,
                json!({ "id": e.id, "command": e.command, "pass": false, "error": err.to_string() }),
            ),
        };
        if !pass {
            failures.push(json!(e.id));
        }
        fixtures.push(out);
    }
    let mut crit = Vec::new();
    if with_criteria {
        for (id, _, _) in CRITERIA {
            let o = criteria::run(id, seed).expect("known criterion");
            for c in o.checks.iter().filter(|c| !c.pass) {
                failures.push(json!(format!("criterion {id}: {}", c.fixture)));
            }
            crit.push(json!({
                "id": o.id,
                "name": o.name,
                "pass": o.pass,
                "checks": o.checks,
            }));
        }
    }
    Ok(json!({
        "schema": SCHEMA,
        "command": "suite",
        "seed": seed,
        "fixtures": fixtures,
        "criteria": crit,
        "failures": failures,
        "pass": failures.is_empty(),
    }))
}
