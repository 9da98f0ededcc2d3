//! Deterministic cycle interpreter for compiled machines.
//!
//! One [`ExecutionContext::step`] is one control cycle:
//!
//! 1. the platform publishes this cycle's events (and may write variables);
//! 2. a pending entry action of the current state runs (only on the first
//!    step, since later entries run as part of the firing transition);
//! 3. outgoing transitions are scanned in table order and the first enabled
//!    one fires: source exit, transition action, target entry;
//! 4. if none fired, the current state's `during` action runs;
//! 5. a final current state finishes the context.
//!
//! Clock counters and the cycle number advance by one at the end of the
//! cycle. Operation calls run to completion inside the cycle.

mod vm;

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::compiler::CompiledMachine;
use crate::value::Value;
use vm::Exec;
pub use vm::{binary, unary};

/// Platform side of a machine: event production and the platform-bound
/// operations.
pub trait Platform {
    /// Whether the platform implements the external operation `op`.
    fn provides(&self, op: &str) -> bool;

    /// Called at the start of every cycle, before any program runs.
    fn publish(&mut self, io: &mut MachineIo<'_>);

    /// Execute a platform-bound operation. Contracts are checked by the caller.
    fn invoke(&mut self, op: &str, args: &[Value], io: &mut MachineIo<'_>) -> Result<(), String>;
}

/// A platform's view of the machine's events and variables.
pub struct MachineIo<'a> {
    machine: &'a CompiledMachine,
    vars: &'a mut [Value],
    events: &'a mut [bool],
}

impl MachineIo<'_> {
    /// Raise event `name` for the current cycle. Returns false if the
    /// machine has no such event.
    pub fn raise(&mut self, name: &str) -> bool {
        match self.machine.event_index(name) {
            Some(k) => {
                self.events[k] = true;
                true
            }
            None => false,
        }
    }

    pub fn get(&self, name: &str) -> Option<Value> {
        self.machine.var_index(name).map(|k| self.vars[k])
    }

    pub fn real(&self, name: &str) -> Option<f64> {
        self.get(name).and_then(|v| v.as_real())
    }

    /// Write variable `name`, promoting ints to reals. Returns false when
    /// the variable is missing or the type does not fit.
    pub fn set(&mut self, name: &str, value: Value) -> bool {
        let Some(k) = self.machine.var_index(name) else {
            return false;
        };
        match value.coerce(self.vars[k].ty()) {
            Some(v) => {
                self.vars[k] = v;
                true
            }
            None => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RuntimeConfig {
    /// Time units per control cycle: `since(T)` reads `counter * time_unit`.
    pub time_unit: f64,
    /// Variables snapshotted into every trace record.
    pub watch: Vec<String>,
    /// Report postcondition violations as trace warnings instead of faulting.
    pub post_as_warning: bool,
    /// Maximum internal steps of one operation body.
    pub op_step_budget: usize,
    /// Maximum nesting of operation calls.
    pub max_call_depth: usize,
}

impl Default for RuntimeConfig {
    fn default() -> Self {
        RuntimeConfig {
            time_unit: 1.0,
            watch: Vec::new(),
            post_as_warning: false,
            op_step_budget: 10_000,
            max_call_depth: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum CreateError {
    #[error("invalid runtime configuration: {0}")]
    InvalidConfig(String),
    #[error("platform does not bind operation(s): {}", .0.join(", "))]
    Unbound(Vec<String>),
    #[error("watched variable `{0}` does not exist")]
    UnknownWatch(String),
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum StepError {
    #[error("context is not running ({0})")]
    NotRunning(Status),
    #[error("unknown event `{name}` at cycle {cycle}")]
    UnknownEvent { cycle: u64, name: String },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Fault {
    PreconditionViolation {
        op: String,
    },
    PostconditionViolation {
        op: String,
    },
    /// An operation body did not reach a final state within the step
    /// budget, or calls nested too deeply.
    StepBudgetExceeded {
        op: String,
    },
    Arithmetic {
        detail: String,
    },
    Platform {
        op: String,
        message: String,
    },
    /// Should be impossible for analyzed models.
    TypeConfusion {
        detail: String,
    },
}

impl Fault {
    pub fn kind(&self) -> &'static str {
        match self {
            Fault::PreconditionViolation { .. } => "preconditionViolation",
            Fault::PostconditionViolation { .. } => "postconditionViolation",
            Fault::StepBudgetExceeded { .. } => "stepBudgetExceeded",
            Fault::Arithmetic { .. } => "arithmetic",
            Fault::Platform { .. } => "platform",
            Fault::TypeConfusion { .. } => "typeConfusion",
        }
    }
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fault::PreconditionViolation { op }
            | Fault::PostconditionViolation { op }
            | Fault::StepBudgetExceeded { op } => write!(f, "{} {op}", self.kind()),
            Fault::Arithmetic { detail } | Fault::TypeConfusion { detail } => {
                write!(f, "{}: {detail}", self.kind())
            }
            Fault::Platform { op, message } => write!(f, "platform {op}: {message}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Status {
    Running,
    Finished,
    Faulted(Fault),
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Running => f.write_str("running"),
            Status::Finished => f.write_str("finished"),
            Status::Faulted(fault) => write!(f, "faulted: {fault}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OpCall {
    pub name: String,
    pub args: Vec<Value>,
}

/// What happened in one cycle. States and events are indices into the
/// machine's tables.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub cycle: u64,
    pub state_before: usize,
    pub events: Vec<usize>,
    pub fired: Option<usize>,
    pub state_after: usize,
    /// Every operation call of the cycle in call order, nested ones included.
    pub ops: Vec<OpCall>,
    /// Watched variables at the end of the cycle, in watch-list order.
    pub watch: Vec<(String, Value)>,
    pub warnings: Vec<String>,
    pub fault: Option<Fault>,
}

/// A running machine instance.
pub struct ExecutionContext<P: Platform> {
    machine: Arc<CompiledMachine>,
    platform: P,
    config: RuntimeConfig,
    watch: Vec<usize>,
    state: usize,
    vars: Vec<Value>,
    clocks: Vec<u64>,
    events: Vec<bool>,
    cycle: u64,
    entry_pending: bool,
    status: Status,
}

impl<P: Platform> ExecutionContext<P> {
    pub fn new(
        machine: Arc<CompiledMachine>,
        platform: P,
        config: RuntimeConfig,
    ) -> Result<Self, CreateError> {
        if !(config.time_unit > 0.0 && config.time_unit.is_finite()) {
            return Err(CreateError::InvalidConfig(alloc::format!(
                "time unit must be positive, got {}",
                config.time_unit
            )));
        }
        if config.max_call_depth == 0 {
            return Err(CreateError::InvalidConfig(String::from(
                "call depth limit must be positive",
            )));
        }
        let missing: Vec<String> = machine
            .external_ops
            .iter()
            .filter(|o| !platform.provides(&o.name))
            .map(|o| o.name.clone())
            .collect();
        if !missing.is_empty() {
            return Err(CreateError::Unbound(missing));
        }
        let watch = config
            .watch
            .iter()
            .map(|w| {
                machine
                    .var_index(w)
                    .ok_or_else(|| CreateError::UnknownWatch(w.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ExecutionContext {
            state: machine.initial,
            vars: machine.vars.iter().map(|v| v.init).collect(),
            clocks: vec![0; machine.clocks.len()],
            events: vec![false; machine.events.len()],
            machine,
            platform,
            config,
            watch,
            cycle: 0,
            entry_pending: true,
            status: Status::Running,
        })
    }

    pub fn machine(&self) -> &CompiledMachine {
        &self.machine
    }

    pub fn platform(&self) -> &P {
        &self.platform
    }

    pub fn platform_mut(&mut self) -> &mut P {
        &mut self.platform
    }

    pub fn status(&self) -> &Status {
        &self.status
    }

    pub fn state(&self) -> usize {
        self.state
    }

    pub fn state_name(&self) -> &str {
        &self.machine.states[self.state].name
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn clock(&self, k: usize) -> u64 {
        self.clocks[k]
    }

    pub fn var(&self, name: &str) -> Option<Value> {
        self.machine.var_index(name).map(|k| self.vars[k])
    }

    pub fn var_slot(&self, k: usize) -> Value {
        self.vars[k]
    }

    /// Overwrite a variable between cycles. Returns false when the name is
    /// unknown or the value has the wrong type.
    pub fn set_var(&mut self, name: &str, value: Value) -> bool {
        let Some(k) = self.machine.var_index(name) else {
            return false;
        };
        match value.coerce(self.machine.vars[k].ty) {
            Some(v) => {
                self.vars[k] = v;
                true
            }
            None => false,
        }
    }

    /// Run one control cycle.
    pub fn step(&mut self) -> Result<TraceRecord, StepError> {
        self.step_with(&[])
    }

    /// Run one control cycle with extra events raised on top of the
    /// platform's (used for scripted runs).
    pub fn step_with(&mut self, injected: &[usize]) -> Result<TraceRecord, StepError> {
        if self.status != Status::Running {
            return Err(StepError::NotRunning(self.status.clone()));
        }
        let m = Arc::clone(&self.machine);
        self.events.iter_mut().for_each(|e| *e = false);
        {
            let mut io = MachineIo {
                machine: &m,
                vars: &mut self.vars,
                events: &mut self.events,
            };
            self.platform.publish(&mut io);
        }
        for &e in injected {
            if let Some(flag) = self.events.get_mut(e) {
                *flag = true;
            }
        }
        let events: Vec<usize> = (0..self.events.len()).filter(|&k| self.events[k]).collect();
        let state_before = self.state;
        let mut ops = Vec::new();
        let mut warnings = Vec::new();
        let entry_pending = core::mem::replace(&mut self.entry_pending, false);

        let mut state = self.state;
        let mut exec = Exec {
            m: &m,
            vars: &mut self.vars,
            clocks: &mut self.clocks,
            events: &mut self.events,
            platform: &mut self.platform,
            config: &self.config,
            ops: &mut ops,
            warnings: &mut warnings,
            depth: 0,
        };
        let outcome: Result<Option<usize>, Fault> = (|| {
            if entry_pending {
                if let Some(p) = &m.states[state].entry {
                    exec.exec(p, &[])?;
                }
            }
            let fired = exec.select(&m.transitions, state, &[])?;
            match fired {
                Some(t) => state = exec.fire(&m.states, &m.transitions[t], &[])?,
                None => {
                    if let Some(p) = &m.states[state].during {
                        exec.exec(p, &[])?;
                    }
                }
            }
            Ok(fired)
        })();

        let (fired, fault) = match outcome {
            Ok(f) => (f, None),
            Err(fault) => (None, Some(fault)),
        };
        self.state = state;
        match &fault {
            Some(f) => self.status = Status::Faulted(f.clone()),
            None => {
                if m.states[state].is_final {
                    self.status = Status::Finished;
                }
                self.clocks
                    .iter_mut()
                    .for_each(|c| *c = c.saturating_add(1));
            }
        }
        let record = TraceRecord {
            cycle: self.cycle,
            state_before,
            events,
            fired,
            state_after: self.state,
            ops,
            watch: self
                .watch
                .iter()
                .map(|&k| (m.vars[k].name.clone(), self.vars[k]))
                .collect(),
            warnings,
            fault,
        };
        self.cycle += 1;
        Ok(record)
    }
}

/// Run `ctx` against an event script: entry `i` lists the events injected
/// in cycle `i`. Stops when the script is exhausted, the context finishes
/// or faults, or `max_cycles` records have been produced. A fault is
/// reported in the last record.
pub fn run_script<P: Platform, S: AsRef<str>>(
    ctx: &mut ExecutionContext<P>,
    script: &[Vec<S>],
    max_cycles: u64,
) -> Result<Vec<TraceRecord>, StepError> {
    let mut trace = Vec::new();
    for (i, names) in script.iter().enumerate() {
        if trace.len() as u64 >= max_cycles || *ctx.status() != Status::Running {
            break;
        }
        let injected = names
            .iter()
            .map(|n| {
                ctx.machine()
                    .event_index(n.as_ref())
                    .ok_or_else(|| StepError::UnknownEvent {
                        cycle: i as u64,
                        name: String::from(n.as_ref()),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        trace.push(ctx.step_with(&injected)?);
    }
    Ok(trace)
}

/// Platform for headless runs: events come only from the script and every
/// platform-bound operation is a no-op.
#[derive(Clone, Copy, Debug, Default)]
pub struct ScriptPlatform;

impl Platform for ScriptPlatform {
    fn provides(&self, _op: &str) -> bool {
        true
    }

    fn publish(&mut self, _io: &mut MachineIo<'_>) {}

    fn invoke(
        &mut self,
        _op: &str,
        _args: &[Value],
        _io: &mut MachineIo<'_>,
    ) -> Result<(), String> {
        Ok(())
    }
}
