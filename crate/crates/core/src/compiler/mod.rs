//! Lowering of a resolved model into an index-addressed transition table.
//!
//! Each machine becomes a [`CompiledMachine`]: states as an indexed table,
//! transitions in source order, expressions and actions as verified postfix
//! [`Program`]s that refer to variables, clocks, events and operations only
//! by index.

mod codegen;
mod program;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

pub use codegen::{emit_source, emit_units, SourceUnit};
pub use program::{verify, Bounds, Instr, Program, ProgramKind};

use crate::analyzer::{ResolvedModel, Scope, VarOwner, VarRef};
use crate::dsl::{
    Action, ActionSeq, BinOp, Expr, ExprKind, Literal, StateDecl, TransitionDecl, UnOp,
};
use crate::value::{Type, Value};

#[derive(Clone, Debug, PartialEq)]
pub struct CompiledState {
    pub name: String,
    pub entry: Option<Program>,
    pub during: Option<Program>,
    pub exit: Option<Program>,
    pub is_final: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompiledTransition {
    pub source: usize,
    pub target: usize,
    pub event: Option<usize>,
    pub guard: Option<Program>,
    pub action: Option<Program>,
}

/// Parameter name and type.
pub type Param = (String, Type);

#[derive(Clone, Debug, PartialEq)]
pub struct VarSlot {
    pub name: String,
    pub ty: Type,
    pub init: Value,
}

/// Operation signature with its compiled contract. Contracts see the
/// arguments as locals `0..params.len()`.
#[derive(Clone, Debug, PartialEq)]
pub struct OpSignature {
    pub name: String,
    pub params: Vec<Param>,
    pub pre: Option<Program>,
    pub post: Option<Program>,
}

/// An operation with a state-machine body, run to completion inside the
/// caller's cycle.
#[derive(Clone, Debug, PartialEq)]
pub struct DefinedOp {
    pub sig: OpSignature,
    pub states: Vec<CompiledState>,
    pub initial: usize,
    pub transitions: Vec<CompiledTransition>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompiledMachine {
    pub name: String,
    pub states: Vec<CompiledState>,
    pub initial: usize,
    /// Source-text order.
    pub transitions: Vec<CompiledTransition>,
    pub events: Vec<String>,
    pub vars: Vec<VarSlot>,
    pub clocks: Vec<String>,
    pub external_ops: Vec<OpSignature>,
    pub defined_ops: Vec<DefinedOp>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error("unknown machine `{0}`")]
    UnknownMachine(String),
    #[error("cannot compile `{machine}`: {reason}")]
    Unsupported { machine: String, reason: String },
    #[error("invalid compiled machine: {0}")]
    Invalid(String),
}

impl CompiledMachine {
    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s.name == name)
    }

    pub fn event_index(&self, name: &str) -> Option<usize> {
        self.events.iter().position(|e| e == name)
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn clock_index(&self, name: &str) -> Option<usize> {
        self.clocks.iter().position(|c| c == name)
    }

    /// Indices of transitions leaving `state`, in table order.
    pub fn outgoing(&self, state: usize) -> impl Iterator<Item = usize> + '_ {
        self.transitions
            .iter()
            .enumerate()
            .filter(move |(_, t)| t.source == state)
            .map(|(i, _)| i)
    }

    /// Check every structural invariant: index ranges, stack balance,
    /// final-state shape.
    pub fn validate(&self) -> Result<(), CompileError> {
        let ext: Vec<usize> = self.external_ops.iter().map(|o| o.params.len()).collect();
        let def: Vec<usize> = self
            .defined_ops
            .iter()
            .map(|o| o.sig.params.len())
            .collect();
        let bounds = |locals| Bounds {
            vars: self.vars.len(),
            locals,
            clocks: self.clocks.len(),
            ext_arity: &ext,
            def_arity: &def,
        };
        let invalid = |what: String| CompileError::Invalid(format!("{}: {what}", self.name));
        let check = |p: &Option<Program>, kind, locals, what: &str| -> Result<(), CompileError> {
            match p {
                Some(p) => {
                    verify(p, kind, &bounds(locals)).map_err(|e| invalid(format!("{what}: {e}")))
                }
                None => Ok(()),
            }
        };
        let check_graph = |states: &[CompiledState],
                           initial: usize,
                           transitions: &[CompiledTransition],
                           locals: usize,
                           owner: &str|
         -> Result<(), CompileError> {
            if initial >= states.len() {
                return Err(invalid(format!("{owner}: initial state out of range")));
            }
            for s in states {
                if s.is_final && (s.during.is_some() || s.exit.is_some()) {
                    return Err(invalid(format!(
                        "{owner}: final state `{}` has during/exit",
                        s.name
                    )));
                }
                check(&s.entry, ProgramKind::Action, locals, "entry")?;
                check(&s.during, ProgramKind::Action, locals, "during")?;
                check(&s.exit, ProgramKind::Action, locals, "exit")?;
            }
            for t in transitions {
                if t.source >= states.len() || t.target >= states.len() {
                    return Err(invalid(format!("{owner}: transition state out of range")));
                }
                if states[t.source].is_final {
                    return Err(invalid(format!("{owner}: transition leaves final state")));
                }
                if t.event.is_some_and(|e| e >= self.events.len()) {
                    return Err(invalid(format!("{owner}: event out of range")));
                }
                check(&t.guard, ProgramKind::Expr, locals, "guard")?;
                check(&t.action, ProgramKind::Action, locals, "action")?;
            }
            Ok(())
        };
        check_graph(&self.states, self.initial, &self.transitions, 0, &self.name)?;
        for v in &self.vars {
            if v.init.ty() != v.ty {
                return Err(invalid(format!(
                    "initial value of `{}` has the wrong type",
                    v.name
                )));
            }
        }
        for op in self
            .external_ops
            .iter()
            .chain(self.defined_ops.iter().map(|d| &d.sig))
        {
            check(&op.pre, ProgramKind::Expr, op.params.len(), "precondition")?;
            check(
                &op.post,
                ProgramKind::Expr,
                op.params.len(),
                "postcondition",
            )?;
        }
        for d in &self.defined_ops {
            check_graph(
                &d.states,
                d.initial,
                &d.transitions,
                d.sig.params.len(),
                &d.sig.name,
            )?;
        }
        Ok(())
    }
}

/// Compile machine `machine_name` of a resolved model.
pub fn compile(model: &ResolvedModel, machine_name: &str) -> Result<CompiledMachine, CompileError> {
    let mi = model
        .machine_index(machine_name)
        .ok_or_else(|| CompileError::UnknownMachine(String::from(machine_name)))?;
    let decl = &model.unit.machines[mi];
    let scope = &model.machines[mi].scope;

    // Operation tables: platform-bound and defined, each in scope order.
    let mut ext_of = Vec::with_capacity(scope.ops.len());
    let mut external_ops = Vec::new();
    let mut defined_idx = Vec::new();
    for sym in &scope.ops {
        if sym.has_body(&model.unit) {
            ext_of.push(OpTarget::Def(defined_idx.len()));
            defined_idx.push(sym.def.expect("has_body implies a definition"));
        } else {
            ext_of.push(OpTarget::Ext(external_ops.len()));
            external_ops.push(sym);
        }
    }

    let cx = MachineCx {
        model,
        scope,
        ops: &ext_of,
        machine: &decl.name.name,
    };

    let external_ops = external_ops
        .into_iter()
        .map(|sym| {
            let (pre, post) = match sym.def {
                Some(d) => cx.contracts(d)?,
                None => (None, None),
            };
            Ok(OpSignature {
                name: sym.name.clone(),
                params: sym.params.clone(),
                pre,
                post,
            })
        })
        .collect::<Result<Vec<_>, CompileError>>()?;

    let defined_ops = defined_idx
        .iter()
        .map(|&d| {
            let def = &model.unit.operations[d];
            let body = def.body.as_ref().expect("defined operation has a body");
            let op_scope = &model.operations[d].scope;
            let (pre, post) = cx.contracts(d)?;
            let frame = Frame::Operation(op_scope);
            let (states, initial, transitions) =
                cx.graph(&frame, &body.states, &body.transitions)?;
            Ok(DefinedOp {
                sig: OpSignature {
                    name: def.name.name.clone(),
                    params: def
                        .params
                        .iter()
                        .map(|p| (p.name.name.clone(), p.ty))
                        .collect(),
                    pre,
                    post,
                },
                states,
                initial,
                transitions,
            })
        })
        .collect::<Result<Vec<_>, CompileError>>()?;

    let (states, initial, transitions) =
        cx.graph(&Frame::Machine, &decl.states, &decl.transitions)?;

    let cm = CompiledMachine {
        name: decl.name.name.clone(),
        states,
        initial,
        transitions,
        events: scope.events.iter().map(|e| e.name.clone()).collect(),
        vars: scope
            .vars
            .iter()
            .map(|v| VarSlot {
                name: v.name.clone(),
                ty: v.ty,
                init: v.init,
            })
            .collect(),
        clocks: scope.clocks.clone(),
        external_ops,
        defined_ops,
    };
    cm.validate()?;
    Ok(cm)
}

#[derive(Clone, Copy)]
enum OpTarget {
    Ext(usize),
    Def(usize),
}

/// Name-resolution frame for code being compiled.
enum Frame<'a> {
    Machine,
    /// Inside an operation: parameters are locals; interface names are
    /// remapped onto the calling machine's slots.
    Operation(&'a Scope),
}

struct MachineCx<'a> {
    model: &'a ResolvedModel,
    scope: &'a Scope,
    ops: &'a [OpTarget],
    machine: &'a str,
}

impl MachineCx<'_> {
    fn unsupported(&self, reason: String) -> CompileError {
        CompileError::Unsupported {
            machine: String::from(self.machine),
            reason,
        }
    }

    fn contracts(&self, def: usize) -> Result<(Option<Program>, Option<Program>), CompileError> {
        let d = &self.model.unit.operations[def];
        let frame = Frame::Operation(&self.model.operations[def].scope);
        let pre = d
            .pre
            .as_ref()
            .map(|e| self.expr_program(&frame, e))
            .transpose()?;
        let post = d
            .post
            .as_ref()
            .map(|e| self.expr_program(&frame, e))
            .transpose()?;
        Ok((pre, post))
    }

    #[allow(clippy::type_complexity)]
    fn graph(
        &self,
        frame: &Frame<'_>,
        states: &[StateDecl],
        transitions: &[TransitionDecl],
    ) -> Result<(Vec<CompiledState>, usize, Vec<CompiledTransition>), CompileError> {
        let seq = |s: &Option<ActionSeq>| {
            s.as_ref()
                .map(|a| self.action_program(frame, a))
                .transpose()
        };
        let compiled_states = states
            .iter()
            .map(|s| {
                Ok(CompiledState {
                    name: s.name.name.clone(),
                    entry: seq(&s.entry)?,
                    during: seq(&s.during)?,
                    exit: seq(&s.exit)?,
                    is_final: s.is_final,
                })
            })
            .collect::<Result<Vec<_>, CompileError>>()?;
        let index = |name: &str| {
            states
                .iter()
                .position(|s| s.name.name == name)
                .ok_or_else(|| self.unsupported(format!("unknown state `{name}`")))
        };
        let compiled_transitions = transitions
            .iter()
            .map(|t| {
                let event = match &t.trigger {
                    Some(tr) => Some(self.event(frame, &tr.name)?),
                    None => None,
                };
                Ok(CompiledTransition {
                    source: index(&t.source.name)?,
                    target: index(&t.target.name)?,
                    event,
                    guard: t
                        .guard
                        .as_ref()
                        .map(|g| self.expr_program(frame, g))
                        .transpose()?,
                    action: seq(&t.action)?,
                })
            })
            .collect::<Result<Vec<_>, CompileError>>()?;
        let initial = states
            .iter()
            .position(|s| s.is_initial)
            .ok_or_else(|| self.unsupported(String::from("no initial state")))?;
        Ok((compiled_states, initial, compiled_transitions))
    }

    fn event(&self, frame: &Frame<'_>, name: &str) -> Result<usize, CompileError> {
        let _ = frame;
        self.scope
            .event(name)
            .ok_or_else(|| self.unsupported(format!("event `{name}` is not available")))
    }

    fn var(&self, frame: &Frame<'_>, name: &str) -> Result<VarAccess, CompileError> {
        match frame {
            Frame::Machine => match self.scope.lookup_var(name) {
                Some(VarRef::Var(slot)) => Ok(VarAccess::Var(slot, self.scope.vars[slot].ty)),
                _ => Err(self.unsupported(format!("unresolved variable `{name}`"))),
            },
            Frame::Operation(op_scope) => match op_scope.lookup_var(name) {
                Some(VarRef::Param(i)) => Ok(VarAccess::Local(i)),
                Some(VarRef::Var(_)) => {
                    let slot = self
                        .scope
                        .vars
                        .iter()
                        .position(|v| matches!(v.owner, VarOwner::Interface(_)) && v.name == name)
                        .ok_or_else(|| {
                            self.unsupported(format!("variable `{name}` is not provided"))
                        })?;
                    Ok(VarAccess::Var(slot, self.scope.vars[slot].ty))
                }
                None => Err(self.unsupported(format!("`{name}` is out of scope"))),
            },
        }
    }

    fn op(&self, name: &str) -> Result<(OpTarget, &[Param]), CompileError> {
        let k = self
            .scope
            .op(name)
            .ok_or_else(|| self.unsupported(format!("operation `{name}` is not available")))?;
        Ok((self.ops[k], &self.scope.ops[k].params))
    }

    fn clock(&self, name: &str) -> Result<usize, CompileError> {
        self.scope
            .clock(name)
            .ok_or_else(|| self.unsupported(format!("clock `{name}` is not available")))
    }

    fn expr_program(&self, frame: &Frame<'_>, e: &Expr) -> Result<Program, CompileError> {
        let mut code = Vec::new();
        self.expr(frame, e, &mut code)?;
        Ok(Program::new(code))
    }

    fn action_program(&self, frame: &Frame<'_>, seq: &ActionSeq) -> Result<Program, CompileError> {
        let mut code = Vec::new();
        for a in &seq.actions {
            match a {
                Action::ResetClock { clock, .. } => {
                    code.push(Instr::ResetClock(self.clock(&clock.name)?))
                }
                Action::Assign { target, value, .. } => {
                    let VarAccess::Var(slot, ty) = self.var(frame, &target.name)? else {
                        return Err(self.unsupported(format!("cannot assign to `{}`", target.name)));
                    };
                    self.coerced(frame, value, ty, &mut code)?;
                    code.push(Instr::StoreVar(slot));
                }
                Action::Call { op, args, .. } => {
                    let (target, params) = self.op(&op.name)?;
                    for (arg, (_, pty)) in args.iter().zip(params) {
                        self.coerced(frame, arg, *pty, &mut code)?;
                    }
                    code.push(match target {
                        OpTarget::Ext(k) => Instr::CallExt(k),
                        OpTarget::Def(k) => Instr::CallDef(k),
                    });
                }
            }
        }
        Ok(Program::new(code))
    }

    /// Compile `e` and promote it to real if `want` is real and `e` is int.
    fn coerced(
        &self,
        frame: &Frame<'_>,
        e: &Expr,
        want: Type,
        code: &mut Vec<Instr>,
    ) -> Result<(), CompileError> {
        self.expr(frame, e, code)?;
        if want == Type::Real && e.ty == Some(Type::Int) {
            code.push(Instr::ToReal);
        }
        Ok(())
    }

    fn expr(&self, frame: &Frame<'_>, e: &Expr, code: &mut Vec<Instr>) -> Result<(), CompileError> {
        match &e.kind {
            ExprKind::Lit(lit) => code.push(match *lit {
                Literal::Bool(b) => Instr::PushBool(b),
                Literal::Int(i) => Instr::PushInt(i),
                Literal::Real(r) => Instr::PushReal(r),
                Literal::Vec2(x, y) => Instr::PushVec(x, y),
            }),
            ExprKind::Var(name) => code.push(match self.var(frame, name)? {
                VarAccess::Var(slot, _) => Instr::LoadVar(slot),
                VarAccess::Local(i) => Instr::LoadLocal(i),
            }),
            ExprKind::Since(clock) => code.push(Instr::Since(self.clock(&clock.name)?)),
            ExprKind::Unary(op, operand) => {
                self.expr(frame, operand, code)?;
                code.push(match op {
                    UnOp::Not => Instr::Not,
                    UnOp::Neg => Instr::Neg,
                });
            }
            ExprKind::Binary(op @ (BinOp::And | BinOp::Or), a, b) => {
                self.expr(frame, a, code)?;
                let mut rhs = Vec::new();
                self.expr(frame, b, &mut rhs)?;
                code.push(if *op == BinOp::And {
                    Instr::JumpIfFalseOrPop(rhs.len())
                } else {
                    Instr::JumpIfTrueOrPop(rhs.len())
                });
                code.extend(rhs);
            }
            ExprKind::Binary(op, a, b) => {
                self.expr(frame, a, code)?;
                self.expr(frame, b, code)?;
                code.push(match op {
                    BinOp::Eq => Instr::Eq,
                    BinOp::Ne => Instr::Ne,
                    BinOp::Lt => Instr::Lt,
                    BinOp::Le => Instr::Le,
                    BinOp::Gt => Instr::Gt,
                    BinOp::Ge => Instr::Ge,
                    BinOp::Add => Instr::Add,
                    BinOp::Sub => Instr::Sub,
                    BinOp::Mul => Instr::Mul,
                    BinOp::Div => Instr::Div,
                    BinOp::And | BinOp::Or => unreachable!(),
                });
            }
            ExprKind::Cond(c, a, b) => {
                let want = e.ty.unwrap_or(Type::Boolean);
                self.expr(frame, c, code)?;
                let mut then = Vec::new();
                self.coerced(frame, a, want, &mut then)?;
                let mut otherwise = Vec::new();
                self.coerced(frame, b, want, &mut otherwise)?;
                code.push(Instr::JumpIfFalse(then.len() + 1));
                code.extend(then);
                code.push(Instr::Jump(otherwise.len()));
                code.extend(otherwise);
            }
        }
        Ok(())
    }
}

enum VarAccess {
    Var(usize, Type),
    Local(usize),
}
