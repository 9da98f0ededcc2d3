//! Scenario files.
//!
//! ```json
//! {"arena": {"w_cm": 250, "h_cm": 250}, "robots": 20, "seed": 1,
//!  "duration_s": 300, "controller": "aggregation",
//!  "params": {"turn_rate_rads": 5.0},
//!  "outputs": {"metrics": "agg.csv", "trace": "agg.ndjson"}}
//! ```
//!
//! `controller` is `"aggregation"`, `"taxis"` or `{"ir": path}` with an
//! optional `"machine"`. Missing keys take the preset's value; an IR
//! controller uses the taxis preset when its machine has a
//! `robotDetected` event, the aggregation preset otherwise. `beacon` is
//! `{"x_cm", "y_cm"}` or `null` for none. Relative paths are resolved
//! against the scenario file's directory.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Deserializer};
use smforge_core::sim::{Arena, ControllerKind, Scenario};

use crate::ir::{self, IrError};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("bad scenario: {0}")]
    Json(#[from] serde_json::Error),
    #[error("controller IR {path}: {source}")]
    Ir { path: PathBuf, source: IrError },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ArenaSpec {
    w_cm: f64,
    h_cm: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PointSpec {
    x_cm: f64,
    y_cm: f64,
}

#[derive(Deserialize)]
#[serde(rename_all = "lowercase")]
enum Preset {
    Aggregation,
    Taxis,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ControllerSpec {
    Preset(Preset),
    Ir {
        ir: PathBuf,
        #[serde(default)]
        machine: Option<String>,
    },
}

/// Overrides of the simulator constants.
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsSpec {
    body_radius_cm: Option<f64>,
    wheel_distance_cm: Option<f64>,
    max_wheel_speed_cms: Option<f64>,
    forward_speed_cms: Option<f64>,
    turn_rate_rads: Option<f64>,
    coherence_range_cm: Option<f64>,
    radius_illuminated: Option<f64>,
    radius_shadowed: Option<f64>,
    radius_unit_cm: Option<f64>,
    time_unit_s: Option<f64>,
    cluster_threshold_cm: Option<f64>,
    physics_dt_s: Option<f64>,
    control_dt_s: Option<f64>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputsSpec {
    trace: Option<PathBuf>,
    metrics: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioSpec {
    arena: Option<ArenaSpec>,
    robots: usize,
    seed: u64,
    duration_s: f64,
    controller: ControllerSpec,
    #[serde(default)]
    params: ParamsSpec,
    #[serde(default, deserialize_with = "present")]
    beacon: Option<Option<PointSpec>>,
    #[serde(default)]
    outputs: OutputsSpec,
}

/// Tell a missing key (`None`) from an explicit `null` (`Some(None)`).
fn present<'de, D: Deserializer<'de>, T: Deserialize<'de>>(
    d: D,
) -> Result<Option<Option<T>>, D::Error> {
    Option::<T>::deserialize(d).map(Some)
}

#[derive(Debug)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub trace: Option<PathBuf>,
    pub metrics: PathBuf,
}

/// Parse a scenario. `path` names the file, for resolving relative paths
/// and the default metrics file `<stem>.metrics.csv`.
pub fn parse(text: &str, path: &Path) -> Result<SimConfig, ScenarioError> {
    let doc: ScenarioSpec = serde_json::from_str(text)?;
    let dir = path.parent().unwrap_or(Path::new(""));
    let (mut s, controller) = match doc.controller {
        ControllerSpec::Preset(Preset::Aggregation) => (
            Scenario::aggregation(0, 0, 0.0),
            ControllerKind::Aggregation,
        ),
        ControllerSpec::Preset(Preset::Taxis) => {
            (Scenario::taxis(0, 0, 0.0), ControllerKind::Taxis)
        }
        ControllerSpec::Ir { ir: rel, machine } => {
            let ir_path = dir.join(rel);
            let text = std::fs::read_to_string(&ir_path).map_err(|source| ScenarioError::Io {
                path: ir_path.clone(),
                source,
            })?;
            let cm = ir::load_machine(&text, machine.as_deref()).map_err(|source| {
                ScenarioError::Ir {
                    path: ir_path,
                    source,
                }
            })?;
            let base = if cm.event_index("robotDetected").is_some() {
                Scenario::taxis(0, 0, 0.0)
            } else {
                Scenario::aggregation(0, 0, 0.0)
            };
            (base, ControllerKind::External(Arc::new(cm)))
        }
    };
    s.controller = controller;
    s.robots = doc.robots;
    s.seed = doc.seed;
    s.duration_s = doc.duration_s;
    if let Some(a) = doc.arena {
        s.arena = Arena {
            width: a.w_cm,
            height: a.h_cm,
        };
        if s.beacon.is_some() {
            s.beacon = Some((a.w_cm / 2.0, 0.0));
        }
    }
    if let Some(b) = doc.beacon {
        s.beacon = b.map(|p| (p.x_cm, p.y_cm));
    }
    let o = doc.params;
    let p = &mut s.params;
    for (slot, v) in [
        (&mut p.body_radius, o.body_radius_cm),
        (&mut p.wheel_distance, o.wheel_distance_cm),
        (&mut p.max_wheel_speed, o.max_wheel_speed_cms),
        (&mut p.forward_speed, o.forward_speed_cms),
        (&mut p.turn_rate, o.turn_rate_rads),
        (&mut p.coherence_range, o.coherence_range_cm),
        (&mut p.radius_unit_cm, o.radius_unit_cm),
        (&mut p.time_unit_s, o.time_unit_s),
        (&mut p.cluster_threshold, o.cluster_threshold_cm),
        (&mut s.physics_dt, o.physics_dt_s),
        (&mut s.control_dt, o.control_dt_s),
    ] {
        if let Some(v) = v {
            *slot = v;
        }
    }
    p.radius_illuminated = o.radius_illuminated.or(p.radius_illuminated);
    p.radius_shadowed = o.radius_shadowed.or(p.radius_shadowed);

    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("scenario");
    let metrics = match doc.outputs.metrics {
        Some(m) => dir.join(m),
        None => dir.join(format!("{stem}.metrics.csv")),
    };
    Ok(SimConfig {
        scenario: s,
        trace: doc.outputs.trace.map(|t| dir.join(t)),
        metrics,
    })
}
