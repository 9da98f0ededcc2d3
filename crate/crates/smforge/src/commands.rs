//! The subcommands. Each returns `Ok` or a [`Failure`] carrying its exit
//! code: 1 model or configuration error, 2 I/O, 3 runtime fault.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::{debug, info};
use smforge_core::compiler::{compile, emit_units};
use smforge_core::runtime::{ScriptPlatform, Status};
use smforge_core::sim::{SimError, Simulation};
use smforge_core::{analyzer, dsl, ExecutionContext, ResolvedModel, RuntimeConfig};

use crate::{diagnostics, fsio, ir, metrics, scenario, trace};

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Model(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Fault(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Model(_) => 1,
            Failure::Io(_) => 2,
            Failure::Fault(_) => 3,
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))
}

fn write(files: &[(PathBuf, Vec<u8>)]) -> Result<(), Failure> {
    fsio::write_all_atomic(files).map_err(|e| Failure::Io(format!("cannot write {e}")))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DiagFormat {
    #[default]
    Text,
    Json,
}

fn render(file: &str, diags: &[smforge_core::Diagnostic], format: DiagFormat) -> String {
    match format {
        DiagFormat::Text => diagnostics::to_text(file, diags),
        DiagFormat::Json => diagnostics::to_json(file, diags),
    }
}

/// Parse and analyze, returning every diagnostic and the model if clean.
fn analyze(src: &str) -> (Option<ResolvedModel>, Vec<smforge_core::Diagnostic>) {
    let unit = match dsl::parse(src) {
        Ok(u) => u,
        Err(d) => return (None, d),
    };
    match analyzer::check(&unit) {
        Ok(m) => {
            let w = m.warnings.clone();
            (Some(m), w)
        }
        Err(d) => (None, d),
    }
}

/// Load a model for compile/codegen; diagnostics go to stderr.
fn load_model(path: &Path) -> Result<ResolvedModel, Failure> {
    let src = read(path)?;
    let (model, diags) = analyze(&src);
    eprint!(
        "{}",
        diagnostics::to_text(&path.display().to_string(), &diags)
    );
    model.ok_or_else(|| {
        let n = diags.iter().filter(|d| d.is_error()).count();
        Failure::Model(format!("{}: {n} error(s)", path.display()))
    })
}

/// Diagnostics go to stdout; errors fail the command.
pub fn check(path: &Path, format: DiagFormat) -> Result<(), Failure> {
    let src = read(path)?;
    let (model, diags) = analyze(&src);
    print!("{}", render(&path.display().to_string(), &diags, format));
    info!("{}: {} diagnostic(s)", path.display(), diags.len());
    match model {
        Some(_) => Ok(()),
        None => Err(Failure::Model(format!(
            "{}: {} error(s)",
            path.display(),
            diags.iter().filter(|d| d.is_error()).count()
        ))),
    }
}

fn pick_machine<'a>(model: &'a ResolvedModel, name: Option<&'a str>) -> Result<&'a str, Failure> {
    match name {
        Some(n) => Ok(n),
        None => match model.unit.machines.as_slice() {
            [m] => Ok(&m.name.name),
            [] => Err(Failure::Model(String::from("model has no machine"))),
            _ => Err(Failure::Model(String::from(
                "model has several machines; pass --machine",
            ))),
        },
    }
}

pub fn compile_cmd(path: &Path, machine: Option<&str>, out: Option<&Path>) -> Result<(), Failure> {
    let model = load_model(path)?;
    let name = pick_machine(&model, machine)?;
    let cm = compile(&model, name).map_err(|e| Failure::Model(e.to_string()))?;
    let out = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(format!("{name}{}", ir::EXTENSION)));
    write(&[(
        out.clone(),
        ir::serialize(std::slice::from_ref(&cm)).into_bytes(),
    )])?;
    info!("wrote {}", out.display());
    Ok(())
}

pub fn codegen(path: &Path, machine: Option<&str>, out_dir: &Path) -> Result<(), Failure> {
    let model = load_model(path)?;
    let names: Vec<&str> = match machine {
        Some(n) => vec![n],
        None => model
            .unit
            .machines
            .iter()
            .map(|m| m.name.name.as_str())
            .collect(),
    };
    if names.is_empty() {
        return Err(Failure::Model(String::from("nothing to generate")));
    }
    let mut files = Vec::new();
    let mut seen = BTreeSet::new();
    for name in names {
        let cm = compile(&model, name).map_err(|e| Failure::Model(e.to_string()))?;
        let decl =
            &model.unit.machines[model.machine_index(name).expect("compiled machine exists")];
        let ifaces: Vec<_> = decl
            .requires
            .iter()
            .filter_map(|r| model.unit.interface(&r.name))
            .collect();
        for unit in emit_units(&cm, &ifaces) {
            if seen.insert(unit.name.clone()) {
                files.push((
                    out_dir.join(format!("{}.gen.txt", unit.name)),
                    unit.text.into_bytes(),
                ));
            }
        }
    }
    fs::create_dir_all(out_dir)
        .map_err(|e| Failure::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    write(&files)?;
    for (p, _) in &files {
        info!("wrote {}", p.display());
    }
    Ok(())
}

pub struct RunOptions<'a> {
    pub ir: &'a Path,
    pub machine: Option<&'a str>,
    pub script: Option<&'a Path>,
    /// Defaults to the script length.
    pub max_cycles: Option<u64>,
    pub out: &'a Path,
    pub time_unit: f64,
}

/// Interpret an IR machine against an event script with every platform
/// operation bound to a no-op. A fault still writes the trace, whose last
/// record carries the fault, and then fails with exit code 3.
pub fn run(opts: &RunOptions<'_>) -> Result<(), Failure> {
    let text = read(opts.ir)?;
    let cm = ir::load_machine(&text, opts.machine)
        .map_err(|e| Failure::Model(format!("{}: {e}", opts.ir.display())))?;
    let script = match opts.script {
        Some(p) => trace::parse_script(&read(p)?, &cm)
            .map_err(|e| Failure::Model(format!("{}: {e}", p.display())))?,
        None => Vec::new(),
    };
    let max = opts.max_cycles.unwrap_or(script.len() as u64);
    let config = RuntimeConfig {
        time_unit: opts.time_unit,
        watch: cm.vars.iter().map(|v| v.name.clone()).collect(),
        ..RuntimeConfig::default()
    };
    let cm = Arc::new(cm);
    let mut ctx = ExecutionContext::new(Arc::clone(&cm), ScriptPlatform, config)
        .map_err(|e| Failure::Model(e.to_string()))?;
    let mut out = String::new();
    let mut fault = None;
    for c in 0..max {
        if *ctx.status() != Status::Running {
            break;
        }
        let events: Vec<usize> = script
            .get(c as usize)
            .map(|names| names.iter().filter_map(|n| cm.event_index(n)).collect())
            .unwrap_or_default();
        let record = ctx
            .step_with(&events)
            .map_err(|e| Failure::Model(e.to_string()))?;
        out.push_str(&trace::record_line(&cm, &record));
        if let Some(f) = record.fault {
            fault = Some(format!("cycle {}: {f}", record.cycle));
        }
    }
    write(&[(opts.out.to_path_buf(), out.into_bytes())])?;
    debug!("{} cycle(s), status {}", ctx.cycle(), ctx.status());
    match fault {
        Some(f) => Err(Failure::Fault(f)),
        None => Ok(()),
    }
}

/// Run a scenario; writes the metrics CSV (and trace, if configured) only
/// on success and returns the summary line.
pub fn sim(path: &Path, seed: Option<u64>) -> Result<String, Failure> {
    let text = read(path)?;
    let mut cfg = scenario::parse(&text, path).map_err(|e| match e {
        scenario::ScenarioError::Io { .. } => Failure::Io(e.to_string()),
        _ => Failure::Model(format!("{}: {e}", path.display())),
    })?;
    if let Some(s) = seed {
        cfg.scenario.seed = s;
    }
    let seed = cfg.scenario.seed;
    let mut simulation =
        Simulation::new(cfg.scenario).map_err(|e| Failure::Model(e.to_string()))?;
    let machine = simulation.robots[0].machine().clone();
    let want_trace = cfg.trace.is_some();
    let mut trace_out = String::new();
    let outcome = simulation
        .run(|i, r| {
            if want_trace {
                let mut m = trace::record_json(&machine, r);
                m.insert("robot".into(), serde_json::json!(i));
                trace_out.push_str(&serde_json::Value::Object(m).to_string());
                trace_out.push('\n');
            }
        })
        .map_err(|e| match e {
            SimError::Fault { .. } => Failure::Fault(e.to_string()),
            other => Failure::Model(other.to_string()),
        })?;
    let mut files = vec![(
        cfg.metrics.clone(),
        metrics::to_csv(seed, &outcome).into_bytes(),
    )];
    if let Some(t) = cfg.trace {
        files.push((t, trace_out.into_bytes()));
    }
    write(&files)?;
    info!("wrote {}", cfg.metrics.display());
    Ok(metrics::summary(outcome.last()))
}
