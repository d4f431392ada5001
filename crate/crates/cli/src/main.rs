//! `gerbecalc`: JSON front-end to the holonomy engines, validators and
//! WZW/free-boson tools.

mod corpus;
mod io;
mod jobs;
mod suite;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gerbecalc::freeboson::{self, D0Brane, D1Brane, FreeBosonBiBrane, FusionTarget};
use gerbecalc::wzw::{self, Group};
use serde_json::{json, Value};

use io::{CliError, CliResult};
use jobs::{Engine, Settings};

#[derive(Parser)]
#[command(
    name = "gerbecalc",
    version,
    about = "Surface holonomy of gerbes with branes and defects"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    /// Tolerance for pass/fail verdicts.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Monte Carlo sample count for validators.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Surface holonomy of a job file.
    Holonomy {
        #[arg(long, value_enum)]
        engine: Option<Engine>,
        #[arg(long)]
        data: String,
    },
    /// Check the defining identities of brane, bi-brane, Jandl or local data.
    Validate(ValidateArgs),
    #[command(subcommand)]
    Wzw(WzwCommand),
    #[command(subcommand)]
    Freeboson(FreebosonCommand),
    /// Run every shipped fixture and every acceptance criterion.
    Suite {
        /// Only the fixture entries.
        #[arg(long)]
        skip_criteria: bool,
    },
    #[command(subcommand)]
    Fixtures(FixturesCommand),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ValidateArgs {
    #[arg(long)]
    bibrane: Option<String>,
    #[arg(long)]
    dbrane: Option<String>,
    #[arg(long)]
    jandl: Option<String>,
    #[arg(long)]
    cocycle: Option<String>,
}

#[derive(Subcommand)]
enum WzwCommand {
    FusionTable {
        #[arg(long)]
        k: i64,
    },
    CheckBounds {
        #[arg(long)]
        k: i64,
    },
    ValidateForms {
        #[arg(long)]
        k: i64,
    },
    JandlCensus {
        #[arg(long)]
        group: String,
        #[arg(long)]
        level: i64,
        #[arg(long, default_value = "inverse")]
        involution: String,
    },
}

#[derive(Subcommand)]
enum FreebosonCommand {
    /// Fuse the bi-brane `x,alpha` with a D0, D1 or another bi-brane.
    Fuse {
        #[arg(long)]
        radius: f64,
        /// `x,alpha` as fractions, e.g. `1/4,1/3`.
        #[arg(long)]
        bibrane: String,
        /// `d0:y`, `d1:beta` or `bibrane:x,alpha`.
        #[arg(long)]
        target: String,
    },
}

#[derive(Subcommand)]
enum FixturesCommand {
    /// Write the fixture corpus into a directory.
    Export {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("gerbecalc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn parent(path: &Path) -> Option<PathBuf> {
    path.parent().map(Path::to_path_buf)
}

/// Emit a report; exit 1 when it carries `"pass": false`.
fn finish(report: Value, g: &Global) -> CliResult<u8> {
    io::emit(&report, g.out.as_deref())?;
    Ok(if report.get("pass") == Some(&Value::Bool(false)) {
        1
    } else {
        0
    })
}

fn positive(tol: Option<f64>, default: f64) -> CliResult<f64> {
    match tol {
        None => Ok(default),
        Some(t) if t.is_finite() && t > 0.0 => Ok(t),
        Some(t) => Err(CliError::Parse(format!(
            "tolerance must be positive, got {t}"
        ))),
    }
}

fn settings(g: &Global) -> CliResult<Settings> {
    let samples = g.samples.unwrap_or(gerbecalc::gerbedata::DEFAULT_SAMPLES);
    if samples == 0 {
        return Err(CliError::Parse("--samples must be positive".into()));
    }
    Ok(Settings {
        samples,
        seed: g.seed,
        tol: positive(g.tol, gerbecalc::gerbedata::CURVATURE_TOL)?,
    })
}

fn run(cli: Cli) -> CliResult<u8> {
    let g = cli.global;
    match cli.command {
        Command::Holonomy { engine, data } => {
            let path = io::resolve(&data, None)?;
            let job: jobs::HolonomyJob = io::read_json(&path)?;
            let mut report = jobs::run_holonomy(&job, engine, parent(&path).as_deref())?;
            if let Some(tol) = g.tol {
                let tol = positive(Some(tol), tol)?;
                let spread = report["spread"].as_f64().unwrap_or(0.0);
                report["tolerance"] = json!(tol);
                report["pass"] = json!(spread <= tol);
            }
            finish(report, &g)
        }
        Command::Validate(v) => {
            let st = settings(&g)?;
            let report = if let Some(f) = v.bibrane.or(v.dbrane.clone()) {
                let path = io::resolve(&f, None)?;
                jobs::validate_brane(&io::read_json(&path)?, v.dbrane.is_none(), &st)?
            } else if let Some(f) = v.jandl {
                jobs::validate_jandl_input(&io::read_json(&io::resolve(&f, None)?)?, &st)?
            } else {
                let path = io::resolve(v.cocycle.as_deref().expect("one flag is required"), None)?;
                jobs::validate_cocycle_input(&io::read_json(&path)?, parent(&path).as_deref())?
            };
            finish(report, &g)
        }
        Command::Wzw(w) => finish(wzw_command(w, &g)?, &g),
        Command::Freeboson(FreebosonCommand::Fuse {
            radius,
            bibrane,
            target,
        }) => finish(fuse_command(radius, &bibrane, &target)?, &g),
        Command::Suite { skip_criteria } => {
            let tol = g.tol.map(|t| positive(Some(t), t)).transpose()?;
            finish(
                suite::run(&io::fixture_dir(), !skip_criteria, g.seed, tol)?,
                &g,
            )
        }
        Command::Fixtures(FixturesCommand::Export { dir }) => {
            let written = corpus::export(&dir)?;
            finish(
                json!({ "schema": io::SCHEMA, "command": "fixtures-export", "files": written }),
                &g,
            )
        }
    }
}

fn wzw_command(w: WzwCommand, g: &Global) -> CliResult<Value> {
    Ok(match w {
        WzwCommand::FusionTable { k } => {
            let t = wzw::fusion_table(k)?;
            json!({ "schema": io::SCHEMA, "command": "fusion-table", "k": t.k, "entries": t.entries })
        }
        WzwCommand::CheckBounds { k } => {
            let r = wzw::fusion_bounds_check(k)?;
            json!({
                "schema": io::SCHEMA,
                "command": "check-bounds",
                "k": r.k,
                "summary": format!("{}/{} pairs match", r.matching, r.pairs),
                "pairs": r.pairs,
                "matching": r.matching,
                "mismatches": r.mismatches,
                "pass": r.pass(),
            })
        }
        WzwCommand::ValidateForms { k } => {
            let st = settings(g)?;
            let mut d =
                jobs::validate_brane(&jobs::BraneInput::Su2 { k, alpha: None }, false, &st)?;
            let b = jobs::validate_brane(&jobs::BraneInput::Su2 { k, alpha: None }, true, &st)?;
            let worst = d["max_residual"]
                .as_f64()
                .unwrap_or(f64::NAN)
                .max(b["max_residual"].as_f64().unwrap_or(f64::NAN));
            json!({
                "schema": io::SCHEMA,
                "command": "validate-forms",
                "k": k,
                "dbranes": d["reports"].take(),
                "bibranes": b["reports"],
                "max_residual": worst,
                "tolerance": st.tol,
                "pass": worst <= st.tol,
            })
        }
        WzwCommand::JandlCensus {
            group,
            level,
            involution,
        } => {
            let grp: Group = group.parse()?;
            let n = wzw::jandl_census(grp, level, &involution)?;
            json!({
                "schema": io::SCHEMA,
                "command": "jandl-census",
                "group": group,
                "level": level,
                "involution": involution,
                "count": n,
            })
        }
    })
}

fn pair(s: &str) -> CliResult<(freeboson::Frac, freeboson::Frac)> {
    let (x, a) = s
        .split_once(',')
        .ok_or_else(|| CliError::Parse(format!("expected x,alpha, got {s}")))?;
    Ok((jobs::parse_frac(x)?, jobs::parse_frac(a)?))
}

fn describe(t: &FusionTarget) -> Value {
    use jobs::frac_string as s;
    match t {
        FusionTarget::D0(d) => json!({ "kind": "d0", "x": s(d.x), "position": d.position() }),
        FusionTarget::D1(d) => {
            json!({ "kind": "d1", "alpha": s(d.alpha), "wilson_line": d.wilson_line() })
        }
        FusionTarget::Bibrane(b) => json!({
            "kind": "bibrane", "x": s(b.x), "alpha": s(b.alpha), "shift": b.shift(), "wilson_line": b.wilson_line(),
        }),
    }
}

fn fuse_command(radius: f64, bibrane: &str, target: &str) -> CliResult<Value> {
    let (x, alpha) = pair(bibrane)?;
    let bb = FreeBosonBiBrane::new(radius, x, alpha)?;
    let (kind, rest) = target
        .split_once(':')
        .ok_or_else(|| CliError::Parse(format!("expected kind:value, got {target}")))?;
    let t = match kind {
        "d0" => FusionTarget::D0(D0Brane::new(radius, jobs::parse_frac(rest)?)?),
        "d1" => FusionTarget::D1(D1Brane::new(radius, jobs::parse_frac(rest)?)?),
        "bibrane" => {
            let (x2, a2) = pair(rest)?;
            FusionTarget::Bibrane(FreeBosonBiBrane::new(radius, x2, a2)?)
        }
        _ => return Err(CliError::Parse(format!("unknown fusion target {kind}"))),
    };
    let out = freeboson::fuse(&bb, &t)?;
    Ok(json!({
        "schema": io::SCHEMA,
        "command": "freeboson-fuse",
        "radius": radius,
        "bibrane": describe(&FusionTarget::Bibrane(bb)),
        "target": describe(&t),
        "result": describe(&out),
    }))
}
