//! Protocol and presentation interchange files (UTF-8 JSON).
//!
//! Serialization is deterministic: states sorted lexicographically,
//! transitions sorted by their (pre, post) lists, map keys sorted. Parsing
//! then re-serializing a canonical file is byte-identical.

use serde::{Deserialize, Serialize};
use serde_json::{Map as JsonMap, Value};
use thiserror::Error;

use crate::compile::SemigroupPresentation;
use crate::protocol::{Protocol, ProtocolBuilder};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed protocol file: {0}")]
    Json(#[from] serde_json::Error),

    #[error("output value for `{0}` must be 0 or 1")]
    BadOutput(String),

    #[error(transparent)]
    Core(#[from] crate::CoreError),

    #[error(transparent)]
    Compile(#[from] crate::compile::CompileError),
}

#[derive(Serialize, Deserialize)]
struct ProtocolFile {
    states: Vec<String>,
    transitions: Vec<TransitionFile>,
    initial: Vec<String>,
    leaders: std::collections::BTreeMap<String, u64>,
    output: std::collections::BTreeMap<String, u8>,
    #[serde(default, skip_serializing_if = "JsonMap::is_empty")]
    meta: JsonMap<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct TransitionFile {
    pre: Vec<String>,
    post: Vec<String>,
}

pub fn protocol_to_json(p: &Protocol) -> String {
    let file = ProtocolFile {
        states: p.state_names().to_vec(),
        transitions: p
            .transitions()
            .iter()
            .map(|t| TransitionFile {
                pre: t.pre().iter().map(|&q| p.state_name(q).to_owned()).collect(),
                post: t.post().iter().map(|&q| p.state_name(q).to_owned()).collect(),
            })
            .collect(),
        initial: p
            .initial_states()
            .iter()
            .map(|&q| p.state_name(q).to_owned())
            .collect(),
        leaders: p
            .leaders()
            .iter()
            .map(|(q, n)| (p.state_name(q).to_owned(), n))
            .collect(),
        output: p
            .state_names()
            .iter()
            .map(|name| {
                let q = p.state_id(name).unwrap();
                (name.clone(), p.output(q) as u8)
            })
            .collect(),
        meta: p.meta().clone(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("protocol serializes");
    s.push('\n');
    s
}

pub fn protocol_from_json(input: &str) -> Result<Protocol, FormatError> {
    let file: ProtocolFile = serde_json::from_str(input)?;
    let mut b = ProtocolBuilder::new();
    for state in &file.states {
        b.state(state.clone());
    }
    for t in &file.transitions {
        b.transition(&t.pre, &t.post);
    }
    for state in &file.initial {
        b.initial(state.clone());
    }
    for (state, &count) in &file.leaders {
        b.leader(state.clone(), count);
    }
    for (state, &value) in &file.output {
        if value > 1 {
            return Err(FormatError::BadOutput(state.clone()));
        }
        b.output(state.clone(), value == 1);
    }
    for (k, v) in file.meta {
        b.meta(k, v);
    }
    Ok(b.build()?)
}

pub fn presentation_to_json(sp: &SemigroupPresentation) -> String {
    let mut s = serde_json::to_string_pretty(sp).expect("presentation serializes");
    s.push('\n');
    s
}

pub fn presentation_from_json(input: &str) -> Result<SemigroupPresentation, FormatError> {
    let sp: SemigroupPresentation = serde_json::from_str(input)?;
    sp.validate()?;
    Ok(sp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{flock_binary, linear_inequality, majority_leaders};

    #[test]
    fn round_trip_is_identity() {
        for p in [
            flock_binary(13).unwrap(),
            majority_leaders(3).unwrap(),
            linear_inequality(&[2, -3], 1).unwrap(),
        ] {
            let json = protocol_to_json(&p);
            let parsed = protocol_from_json(&json).unwrap();
            assert_eq!(parsed, p);
            assert_eq!(protocol_to_json(&parsed), json);
        }
    }

    #[test]
    fn rejects_bad_output_values() {
        let p = flock_binary(3).unwrap();
        let json = protocol_to_json(&p).replace("\"0\": 0", "\"0\": 2");
        assert!(matches!(
            protocol_from_json(&json),
            Err(FormatError::BadOutput(_))
        ));
    }

    #[test]
    fn presentation_round_trip() {
        let sp = SemigroupPresentation {
            alphabet: vec!['s', 'f', 'b', 'c'],
            productions: vec![
                crate::compile::Production {
                    l: "s".into(),
                    r: "fbb".into(),
                },
                crate::compile::Production {
                    l: "fbb".into(),
                    r: "s".into(),
                },
            ],
            s: 's',
            f: 'f',
            c: 'c',
            b: None,
        };
        let json = presentation_to_json(&sp);
        let parsed = presentation_from_json(&json).unwrap();
        assert_eq!(parsed.alphabet, sp.alphabet);
        assert_eq!(parsed.productions.len(), 2);
    }
}
