use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum TraceKind {
    Scan,
    Cue,
    Activate,
    FireEvent,
    Direct,
    Compose,
    Clash,
    Expect,
}

impl TraceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceKind::Scan => "SCAN",
            TraceKind::Cue => "CUE",
            TraceKind::Activate => "ACTIVATE",
            TraceKind::FireEvent => "FIRE-EVENT",
            TraceKind::Direct => "DIRECT",
            TraceKind::Compose => "COMPOSE",
            TraceKind::Clash => "CLASH",
            TraceKind::Expect => "EXPECT",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub token: usize,
    pub kind: TraceKind,
    pub payload: Value,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}", self.token, self.kind.as_str(), self.payload)
    }
}

/// Append-only processing log.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trace(Vec<TraceRecord>);

impl Trace {
    pub fn push(&mut self, token: usize, kind: TraceKind, payload: Value) {
        self.0.push(TraceRecord { token, kind, payload });
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn of_kind(&self, kind: TraceKind) -> impl Iterator<Item = &TraceRecord> {
        self.0.iter().filter(move |r| r.kind == kind)
    }

    /// One record per line: `token<TAB>KIND<TAB>payload`.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.0 {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("trace records serialize")
    }
}
