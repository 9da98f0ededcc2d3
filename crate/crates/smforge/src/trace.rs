//! NDJSON traces and event scripts.
//!
//! A trace line is one cycle: `cycle`, `state_before`, `events`, `fired`
//! (transition index or null), `state_after`, `ops` (`{name, args}`) and
//! `watch` (variable name to value). States and events are written by
//! name. `warnings` and `fault` only appear when present.
//!
//! A script line is `{"cycle": n, "events": [...]}`; cycles without a line
//! get no events.

use serde::Deserialize;
use serde_json::{json, Map, Value as Json};
use smforge_core::compiler::CompiledMachine;
use smforge_core::TraceRecord;

use crate::ir::value_json;

pub fn record_json(cm: &CompiledMachine, r: &TraceRecord) -> Map<String, Json> {
    let mut m = Map::new();
    m.insert("cycle".into(), json!(r.cycle));
    m.insert("state_before".into(), json!(cm.states[r.state_before].name));
    m.insert(
        "events".into(),
        r.events.iter().map(|&e| json!(cm.events[e])).collect(),
    );
    m.insert("fired".into(), json!(r.fired));
    m.insert("state_after".into(), json!(cm.states[r.state_after].name));
    let ops = r
        .ops
        .iter()
        .map(|o| json!({"name": o.name, "args": o.args.iter().map(value_json).collect::<Vec<_>>()}))
        .collect();
    m.insert("ops".into(), ops);
    let watch: Map<String, Json> = r
        .watch
        .iter()
        .map(|(n, v)| (n.clone(), value_json(v)))
        .collect();
    m.insert("watch".into(), Json::Object(watch));
    if !r.warnings.is_empty() {
        m.insert("warnings".into(), json!(r.warnings));
    }
    if let Some(f) = &r.fault {
        m.insert(
            "fault".into(),
            json!({"kind": f.kind(), "detail": f.to_string()}),
        );
    }
    m
}

/// One trace line, newline included.
pub fn record_line(cm: &CompiledMachine, r: &TraceRecord) -> String {
    let mut s = Json::Object(record_json(cm, r)).to_string();
    s.push('\n');
    s
}

pub fn to_ndjson(cm: &CompiledMachine, trace: &[TraceRecord]) -> String {
    trace.iter().map(|r| record_line(cm, r)).collect()
}

#[derive(Debug, thiserror::Error)]
pub enum ScriptError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("line {line}: unknown event `{event}`")]
    UnknownEvent { line: usize, event: String },
    #[error("line {line}: cycle {cycle} is beyond the supported script length")]
    TooLong { line: usize, cycle: u64 },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptLine {
    cycle: u64,
    #[serde(default)]
    events: Vec<String>,
}

/// Longest script accepted, in cycles.
pub const MAX_SCRIPT_CYCLES: u64 = 10_000_000;

/// Parse a script into per-cycle event lists, dense from cycle 0 to the
/// last scripted cycle. Events must exist in `cm`; lines for the same
/// cycle merge.
pub fn parse_script(text: &str, cm: &CompiledMachine) -> Result<Vec<Vec<String>>, ScriptError> {
    let mut script: Vec<Vec<String>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let rec: ScriptLine =
            serde_json::from_str(raw).map_err(|source| ScriptError::Json { line, source })?;
        if rec.cycle >= MAX_SCRIPT_CYCLES {
            return Err(ScriptError::TooLong {
                line,
                cycle: rec.cycle,
            });
        }
        if let Some(event) = rec.events.iter().find(|e| cm.event_index(e).is_none()) {
            return Err(ScriptError::UnknownEvent {
                line,
                event: event.clone(),
            });
        }
        let c = rec.cycle as usize;
        if script.len() <= c {
            script.resize(c + 1, Vec::new());
        }
        for e in rec.events {
            if !script[c].contains(&e) {
                script[c].push(e);
            }
        }
    }
    Ok(script)
}

/// Script NDJSON, one line per cycle.
pub fn script_ndjson(script: &[Vec<String>]) -> String {
    script
        .iter()
        .enumerate()
        .map(|(c, events)| json!({"cycle": c, "events": events}).to_string() + "\n")
        .collect()
}
