//! On-disk measurement specifications (TOML).
//!
//! ```toml
//! d = 2
//! alpha = 0.4166666666666667   # optional, defaults to the simulated state
//!
//! [alice]
//! elements = [
//!   [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]],
//!   [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]],
//! ]
//! kraus = [ ... ]              # optional channel, same matrix encoding
//!
//! [bob]
//! elements = [ ... ]
//! ```
//!
//! Every matrix is a `d × d` array of rows, each entry a `[re, im]` pair.
//! A standalone channel file holds just a `kraus = [...]` list.

use std::path::Path;

use lhvpov::channels::KrausChannel;
use lhvpov::linalg::{validate_povm, Operator};
use lhvpov::werner::simulated_alpha;
use lhvpov::{Povm, WernerState};
use num_complex::Complex64;
use serde::Deserialize;

type RawMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: field `{field}`: {message}")]
    Field {
        path: String,
        field: String,
        message: String,
    },
    #[error("{path}: field `{field}`: {source}")]
    Model {
        path: String,
        field: String,
        source: lhvpov::Error,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParty {
    elements: Vec<RawMatrix>,
    #[serde(default)]
    kraus: Option<Vec<RawMatrix>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    d: usize,
    #[serde(default)]
    alpha: Option<f64>,
    alice: RawParty,
    bob: RawParty,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    kraus: Vec<RawMatrix>,
}

#[derive(Debug, Clone)]
pub struct MeasurementSpec {
    pub state: WernerState,
    pub alice: Povm,
    pub bob: Povm,
    pub channel_a: Option<KrausChannel>,
    pub channel_b: Option<KrausChannel>,
}

fn read(path: &Path) -> Result<String, SpecError> {
    std::fs::read_to_string(path).map_err(|source| SpecError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_toml<T: serde::de::DeserializeOwned>(path: &str, text: &str) -> Result<T, SpecError> {
    toml::from_str(text).map_err(|e| SpecError::Parse {
        path: path.into(),
        message: e.to_string().trim_end().to_string(),
    })
}

fn to_operator(path: &str, field: &str, d: usize, raw: &RawMatrix) -> Result<Operator, SpecError> {
    let err = |message: String| SpecError::Field {
        path: path.into(),
        field: field.into(),
        message,
    };
    if raw.len() != d {
        return Err(err(format!("expected {d} rows, found {}", raw.len())));
    }
    let mut entries = Vec::with_capacity(d * d);
    for (r, row) in raw.iter().enumerate() {
        if row.len() != d {
            return Err(err(format!("row {r} has {} entries, expected {d}", row.len())));
        }
        entries.extend(row.iter().map(|[re, im]| Complex64::new(*re, *im)));
    }
    Ok(Operator::from_row_slice(d, &entries))
}

fn to_operators(path: &str, field: &str, d: usize, raw: &[RawMatrix]) -> Result<Vec<Operator>, SpecError> {
    raw.iter()
        .enumerate()
        .map(|(k, m)| to_operator(path, &format!("{field}[{k}]"), d, m))
        .collect()
}

fn to_channel(path: &str, field: &str, d: usize, raw: &[RawMatrix]) -> Result<KrausChannel, SpecError> {
    KrausChannel::new(to_operators(path, field, d, raw)?).map_err(|source| SpecError::Model {
        path: path.into(),
        field: field.into(),
        source,
    })
}

pub fn parse_spec(path_label: &str, text: &str) -> Result<MeasurementSpec, SpecError> {
    let raw: RawSpec = parse_toml(path_label, text)?;
    let model = |field: &str, source| SpecError::Model {
        path: path_label.into(),
        field: field.into(),
        source,
    };
    let d = raw.d;
    let alpha = match raw.alpha {
        Some(a) => a,
        None => simulated_alpha(d).map_err(|e| model("d", e))?,
    };
    let state = WernerState::new(d, alpha).map_err(|e| model("alpha", e))?;
    let party = |name: &str, p: &RawParty| -> Result<(Povm, Option<KrausChannel>), SpecError> {
        let field = format!("{name}.elements");
        let ops = to_operators(path_label, &field, d, &p.elements)?;
        let povm = validate_povm(ops).map_err(|e| model(&field, e))?;
        let channel = p
            .kraus
            .as_ref()
            .map(|k| to_channel(path_label, &format!("{name}.kraus"), d, k))
            .transpose()?;
        Ok((povm, channel))
    };
    let (alice, channel_a) = party("alice", &raw.alice)?;
    let (bob, channel_b) = party("bob", &raw.bob)?;
    Ok(MeasurementSpec {
        state,
        alice,
        bob,
        channel_a,
        channel_b,
    })
}

pub fn load_spec(path: &Path) -> Result<MeasurementSpec, SpecError> {
    parse_spec(&path.display().to_string(), &read(path)?)
}

pub fn load_channel(path: &Path, d: usize) -> Result<KrausChannel, SpecError> {
    let label = path.display().to_string();
    let raw: RawChannel = parse_toml(&label, &read(path)?)?;
    to_channel(&label, "kraus", d, &raw.kraus)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PROJECTIVE: &str = r#"
d = 2
[alice]
elements = [
  [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]],
  [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]],
]
[bob]
elements = [
  [[[0.5, 0.0], [0.5, 0.0]], [[0.5, 0.0], [0.5, 0.0]]],
  [[[0.5, 0.0], [-0.5, 0.0]], [[-0.5, 0.0], [0.5, 0.0]]],
]
"#;

    #[test]
    fn parses_projective_pair_with_default_alpha() {
        let spec = parse_spec("inline", PROJECTIVE).unwrap();
        assert_eq!(spec.alice.len(), 2);
        assert!((spec.state.alpha() - 5.0 / 12.0).abs() < 1e-15);
        assert!(spec.channel_a.is_none());
    }

    #[test]
    fn incomplete_povm_reports_reason_and_field() {
        let text = PROJECTIVE.replace("[[0.0, 0.0], [1.0, 0.0]]]", "[[0.0, 0.0], [0.5, 0.0]]]");
        let err = parse_spec("inline", &text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("alice.elements") && msg.contains("not-complete"), "{msg}");
    }

    #[test]
    fn syntax_errors_carry_location() {
        let err = parse_spec("inline", "d = 2\n[alice\n").unwrap_err();
        assert!(matches!(err, SpecError::Parse { .. }));
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let text = PROJECTIVE.replacen("[[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]", "[[[1.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]", 1);
        let err = parse_spec("inline", &text).unwrap_err().to_string();
        assert!(err.contains("alice.elements[0]") && err.contains("row 0"), "{err}");
    }
}
