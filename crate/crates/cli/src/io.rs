//! Exit-code classification, fixture lookup and JSON output.

use std::fmt;
use std::path::{Path, PathBuf};

use gerbecalc::Error;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const SCHEMA: u32 = 1;

/// A failure, sorted by exit code: unreadable input exits 2, a check that
/// ran and failed exits 1.
#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Failed(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "invalid input: {m}"),
            CliError::Failed(m) => write!(f, "check failed: {m}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        use Error::*;
        match e {
            Json(_)
            | InvalidInput(_)
            | NonManifoldEdge { .. }
            | BadCircle(_)
            | OrientationMismatch { .. }
            | NonFinite(_)
            | ShapeMismatch(_)
            | UnknownForm(_)
            | UnknownGroup(_)
            | BadLevel(_)
            | LabelOutOfRange { .. }
            | AngleOutOfRange(_)
            | SeamMismatch { .. }
            | RadiusMismatch(..) => CliError::Parse(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Fixture directory: `GERBECALC_FIXTURES`, else the corpus shipped with
/// this crate.
pub fn fixture_dir() -> PathBuf {
    match std::env::var_os("GERBECALC_FIXTURES") {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures"),
    }
}

/// A path as given, else relative to `base`, else in the fixture directory.
pub fn resolve(name: &str, base: Option<&Path>) -> CliResult<PathBuf> {
    let given = PathBuf::from(name);
    if given.is_file() {
        return Ok(given);
    }
    if let Some(b) = base {
        let p = b.join(name);
        if p.is_file() {
            return Ok(p);
        }
    }
    let p = fixture_dir().join(name);
    if p.is_file() {
        return Ok(p);
    }
    Err(CliError::Parse(format!("file not found: {name}")))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

/// Either a file reference or the object inline.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Inline<T> {
    Path(String),
    Value(T),
}

impl<T: DeserializeOwned + Clone> Inline<T> {
    pub fn load(&self, base: Option<&Path>) -> CliResult<T> {
        match self {
            Inline::Value(v) => Ok(v.clone()),
            Inline::Path(p) => read_json(&resolve(p, base)?),
        }
    }
}

/// Pretty JSON with a trailing newline; object keys come out sorted.
pub fn render(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

pub fn emit(v: &serde_json::Value, out: Option<&Path>) -> CliResult<()> {
    let text = render(v);
    match out {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| CliError::Parse(format!("{}: {e}", p.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(
            CliError::from(Error::UnknownForm("x".into())).exit_code(),
            2
        );
        assert_eq!(CliError::from(Error::ZeroRank).exit_code(), 1);
    }

    #[test]
    fn inline_or_path() {
        let v: Inline<Vec<u8>> = serde_json::from_str("[1,2]").unwrap();
        assert_eq!(v.load(None).unwrap(), vec![1, 2]);
        let p: Inline<Vec<u8>> = serde_json::from_str("\"missing-file.json\"").unwrap();
        assert_eq!(p.load(None).unwrap_err().exit_code(), 2);
    }
}
