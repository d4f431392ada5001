//! The shipped fixture corpus: meshes, maps, job files and the suite
//! manifest, generated from the core fixture builders.

use std::f64::consts::PI;
use std::path::Path;

use gerbecalc::fixtures;
use gerbecalc::holonomy::Variations;
use gerbecalc::registry::FormRef;
use gerbecalc::TargetSpace;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::io::{render, CliError, CliResult, SCHEMA};

/// What a suite entry must produce.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    /// Holonomy value `[re, im]`, within `tol`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Largest spread over the job's variations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spread_max: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub id: String,
    /// `holonomy`, `validate-bibrane`, `validate-dbrane`, `validate-jandl`,
    /// `validate-cocycle` or `check-bounds`.
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<i64>,
    #[serde(default)]
    pub expect: Expect,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema: u32,
    pub entries: Vec<Entry>,
}

pub const MANIFEST: &str = "suite.json";

fn polar(turns: f64) -> [f64; 2] {
    let a = 2.0 * PI * turns;
    [a.cos(), a.sin()]
}

fn entry(id: &str, command: &str, input: Option<&str>, expect: Expect) -> Entry {
    Entry {
        id: id.into(),
        command: command.into(),
        input: input.map(Into::into),
        k: None,
        expect,
    }
}

fn value(v: [f64; 2], tol: f64) -> Expect {
    Expect {
        value: Some(v),
        tol: Some(tol),
        spread_max: None,
    }
}

fn spread(max: f64) -> Expect {
    Expect {
        spread_max: Some(max),
        ..Expect::default()
    }
}

/// All corpus files as `(relative path, JSON)`, in a fixed order.
pub fn files() -> Vec<(String, Value)> {
    let mut out: Vec<(String, Value)> = Vec::new();
    let mut put = |name: &str, v: Value| out.push((name.to_string(), v));

    let meshes = [
        ("sphere_tetra", fixtures::sphere_tetra()),
        ("sphere_octa", fixtures::sphere_octa()),
        ("torus_2f", fixtures::torus_2f()),
        ("torus_fine", fixtures::torus_fine()),
        ("rp2_min", fixtures::rp2_min()),
        ("klein_min", fixtures::klein_min()),
        ("disk", fixtures::disk()),
    ];
    for (name, s) in &meshes {
        put(&format!("meshes/{name}.json"), json!(s.to_spec()));
    }

    let (_, rp2_cover_map) = fixtures::su2_rp2();
    let maps = [
        ("torus_fine_identity", fixtures::torus_identity_map(8, 8)),
        ("torus_fine_degree3", fixtures::torus_degree_map(8, 8, 3)),
        ("sphere_octa_su2", fixtures::sphere_octa_map()),
        ("rp2_cover_su2", rp2_cover_map),
        ("disk_hexagon", fixtures::disk_map(0.2)),
    ];
    for (name, m) in &maps {
        put(&format!("maps/{name}.json"), json!(m.to_spec()));
    }

    let deligne =
        |mesh: &str, d: &gerbecalc::gerbedata::DeligneSurfaceData, var: Option<Variations>| {
            let mut v = json!({ "engine": "deligne", "mesh": format!("meshes/{mesh}.json") });
            let spec = json!(d.to_spec());
            for key in ["chart_of_face", "b", "a", "g"] {
                v[key] = spec[key].clone();
            }
            if let Some(var) = var {
                v["variations"] = json!(var);
            }
            v
        };
    let tetra = fixtures::sphere_tetra();
    let nf = tetra.faces().len();
    let trivial = gerbecalc::gerbedata::DeligneSurfaceData::trivial(tetra, vec![0; nf]);
    put("trivial.json", deligne("sphere_tetra", &trivial, None));
    put(
        "ab_torus.json",
        deligne("torus_fine", &fixtures::ab_torus(0.7), None),
    );
    let gauges = Variations {
        gauges: 20,
        seed: 5,
        ..Variations::default()
    };
    put(
        "deligne_random_torus.json",
        deligne(
            "torus_fine",
            &fixtures::deligne_random(fixtures::torus_fine(), 7),
            Some(gauges),
        ),
    );

    let r = 1.0 / (2.0 * PI);
    put(
        "torus_flux.json",
        json!({
            "engine": "closed",
            "mesh": "meshes/torus_fine.json",
            "map": "maps/torus_fine_identity.json",
            "form": FormRef::new("torus.vol", &[("r1", r), ("r2", r)]),
            "variations": Variations { subdivisions: 1, ..Variations::default() },
        }),
    );
    put(
        "torus_degree3.json",
        json!({
            "engine": "closed",
            "mesh": "meshes/torus_fine.json",
            "map": "maps/torus_fine_degree3.json",
            "form": FormRef::new("dxdy", &[("c", 0.25)]),
        }),
    );
    put(
        "rp2_su2.json",
        json!({
            "engine": "unoriented",
            "mesh": "meshes/rp2_min.json",
            "map": "maps/rp2_cover_su2.json",
            "jandl": { "preset": "su2_constant_phase", "phase": [-1.0, 0.0] },
            "variations": Variations { lifts: Some(0), ..Variations::default() },
        }),
    );
    put(
        "klein_twisted.json",
        json!({
            "engine": "unoriented",
            "mesh": "meshes/klein_min.json",
            "face_lifts": fixtures::klein_min_lifts(),
            "jandl": { "preset": "klein_flux", "c": 0.3, "twisted": true },
            "variations": Variations { lifts: Some(0), ..Variations::default() },
        }),
    );
    let torus = TargetSpace::unit_torus();
    put(
        "disk_boundary.json",
        json!({
            "engine": "boundary",
            "mesh": "meshes/disk.json",
            "map": "maps/disk_hexagon.json",
            "form": FormRef::new("dxdy", &[("c", 0.5)]),
            "brane": {
                "world_volume": { "kind": "full" },
                "omega": FormRef::new("zero", &[("degree", 2.0)]).on(torus.clone()),
                "module": [FormRef::new("zero", &[("degree", 1.0)]).on(torus)],
            },
            "variations": Variations { basepoints: true, ..Variations::default() },
        }),
    );
    put(
        "free_boson_defect.json",
        json!({
            "engine": "defect",
            "defect": { "preset": "free_boson", "cells": 6, "rows": 1, "winding": 3,
                        "radius": r, "x": "1/4", "alpha": "2/7" },
        }),
    );
    put(
        "diagonal_defect.json",
        json!({ "engine": "defect", "defect": { "preset": "diagonal_torus", "n": 4, "m": 8, "c": 0.3 } }),
    );
    put("su2_varpi_k2.json", json!({ "k": 2 }));
    put("su2_branes_k3.json", json!({ "k": 3 }));
    put(
        "jandl_klein.json",
        json!({ "jandl": { "preset": "klein_flux", "c": 0.3, "twisted": true } }),
    );
    put(
        "jandl_su2.json",
        json!({ "jandl": { "preset": "su2_constant_phase", "phase": [-1.0, 0.0] } }),
    );

    // Expected values come from closed forms: a single nontrivial vertex
    // phase; integer or fractional flux of a linear map; the image area of
    // the hexagon, `(3√3/2) s²`; the free-boson Wilson factor.
    let hexagon = 1.5 * 3f64.sqrt() * 0.2 * 0.2;
    let mut entries = vec![
        entry(
            "deligne-trivial",
            "holonomy",
            Some("trivial.json"),
            value([1.0, 0.0], 1e-12),
        ),
        entry(
            "deligne-trivial-cocycle",
            "validate-cocycle",
            Some("trivial.json"),
            Expect::default(),
        ),
        entry(
            "deligne-ab-torus",
            "holonomy",
            Some("ab_torus.json"),
            value([0.7f64.cos(), 0.7f64.sin()], 1e-12),
        ),
        entry(
            "deligne-random-gauges",
            "holonomy",
            Some("deligne_random_torus.json"),
            spread(1e-12),
        ),
        entry(
            "deligne-random-cocycle",
            "validate-cocycle",
            Some("deligne_random_torus.json"),
            Expect::default(),
        ),
        entry(
            "closed-torus-flux",
            "holonomy",
            Some("torus_flux.json"),
            value([1.0, 0.0], 1e-9),
        ),
        entry(
            "closed-torus-degree3",
            "holonomy",
            Some("torus_degree3.json"),
            value(polar(0.75), 1e-9),
        ),
        entry(
            "unoriented-rp2-lifts",
            "holonomy",
            Some("rp2_su2.json"),
            spread(1e-12),
        ),
        entry(
            "unoriented-klein-lifts",
            "holonomy",
            Some("klein_twisted.json"),
            spread(1e-6),
        ),
        entry(
            "boundary-disk",
            "holonomy",
            Some("disk_boundary.json"),
            value(polar(0.5 * hexagon), 1e-9),
        ),
        entry(
            "defect-free-boson",
            "holonomy",
            Some("free_boson_defect.json"),
            value(polar(2.0 * PI * r * 2.0 / 7.0 * 3.0), 1e-9),
        ),
        entry(
            "defect-diagonal",
            "holonomy",
            Some("diagonal_defect.json"),
            value(polar(0.3), 1e-9),
        ),
        entry(
            "su2-bibranes-k2",
            "validate-bibrane",
            Some("su2_varpi_k2.json"),
            Expect::default(),
        ),
        entry(
            "su2-dbranes-k3",
            "validate-dbrane",
            Some("su2_branes_k3.json"),
            Expect::default(),
        ),
        entry(
            "jandl-klein",
            "validate-jandl",
            Some("jandl_klein.json"),
            Expect::default(),
        ),
        entry(
            "jandl-su2",
            "validate-jandl",
            Some("jandl_su2.json"),
            Expect::default(),
        ),
    ];
    let mut bounds = entry("fusion-bounds-k10", "check-bounds", None, Expect::default());
    bounds.k = Some(10);
    entries.push(bounds);
    put(
        MANIFEST,
        json!(Manifest {
            schema: SCHEMA,
            entries
        }),
    );
    out
}

/// Write the corpus under `dir`; returns the relative paths written.
pub fn export(dir: &Path) -> CliResult<Vec<String>> {
    let mut written = Vec::new();
    for (name, v) in files() {
        let path = dir.join(&name);
        if let Some(p) = path.parent() {
            std::fs::create_dir_all(p)
                .map_err(|e| CliError::Parse(format!("{}: {e}", p.display())))?;
        }
        std::fs::write(&path, render(&v))
            .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        written.push(name);
    }
    Ok(written)
}
