//! Direct AST interpreter used as an independent oracle for the compiled
//! form. It shares only the trace record type with the runtime; name
//! resolution, arithmetic and control flow are re-implemented over the
//! annotated AST.

#![allow(dead_code)]

use smforge_core::analyzer::{ResolvedModel, VarOwner, VarRef};
use smforge_core::dsl::{
    Action, ActionSeq, BinOp, Expr, ExprKind, Literal, StateDecl, TransitionDecl, UnOp,
};
use smforge_core::runtime::{Fault, OpCall, TraceRecord};
use smforge_core::{Type, Value};

pub struct AstMachine<'a> {
    model: &'a ResolvedModel,
    mi: usize,
    pub state: usize,
    pub vars: Vec<Value>,
    clocks: Vec<u64>,
    events: Vec<bool>,
    cycle: u64,
    first: bool,
    pub done: bool,
    time_unit: f64,
    ops: Vec<OpCall>,
    depth: usize,
}

const BUDGET: usize = 10_000;
const MAX_DEPTH: usize = 64;

fn fault_arith(detail: &str) -> Fault {
    Fault::Arithmetic {
        detail: detail.to_string(),
    }
}

/// Name-resolution frame: `None` for the machine, `Some(op)` inside an
/// operation with its arguments.
#[derive(Clone, Copy)]
struct Frame<'f> {
    op: Option<usize>,
    args: &'f [Value],
}

impl<'a> AstMachine<'a> {
    pub fn new(model: &'a ResolvedModel, machine: &str, time_unit: f64) -> Self {
        let mi = model.machine_index(machine).expect("machine exists");
        let scope = &model.machines[mi].scope;
        let m = &model.unit.machines[mi];
        AstMachine {
            model,
            mi,
            state: m.states.iter().position(|s| s.is_initial).unwrap(),
            vars: scope.vars.iter().map(|v| v.init).collect(),
            clocks: vec![0; scope.clocks.len()],
            events: vec![false; scope.events.len()],
            cycle: 0,
            first: true,
            done: false,
            time_unit,
            ops: Vec::new(),
            depth: 0,
        }
    }

    pub fn var_names(&self) -> Vec<String> {
        self.model.machines[self.mi]
            .scope
            .vars
            .iter()
            .map(|v| v.name.clone())
            .collect()
    }

    /// One cycle with the named events raised.
    pub fn step(&mut self, raised: &[String]) -> TraceRecord {
        let scope = &self.model.machines[self.mi].scope;
        self.events = scope
            .events
            .iter()
            .map(|e| raised.contains(&e.name))
            .collect();
        let events: Vec<usize> = (0..self.events.len()).filter(|&k| self.events[k]).collect();
        let before = self.state;
        self.ops.clear();
        let m = &self.model.unit.machines[self.mi];
        let frame = Frame {
            op: None,
            args: &[],
        };
        let first = std::mem::replace(&mut self.first, false);
        let mut state = self.state;
        let result = (|| -> Result<Option<usize>, Fault> {
            if first {
                self.seq(&m.states[state].entry, frame)?;
            }
            let fired = self.select(&m.transitions, &m.states, state, frame)?;
            match fired {
                Some(t) => state = self.fire(&m.states, &m.transitions[t], frame)?,
                None => self.seq(&m.states[state].during, frame)?,
            }
            Ok(fired)
        })();
        self.state = state;
        let (fired, fault) = match result {
            Ok(f) => (f, None),
            Err(f) => (None, Some(f)),
        };
        if fault.is_some() {
            self.done = true;
        } else {
            if m.states[state].is_final {
                self.done = true;
            }
            for c in &mut self.clocks {
                *c += 1;
            }
        }
        let names = self.var_names();
        let record = TraceRecord {
            cycle: self.cycle,
            state_before: before,
            events,
            fired,
            state_after: self.state,
            ops: std::mem::take(&mut self.ops),
            watch: names.into_iter().zip(self.vars.iter().copied()).collect(),
            warnings: Vec::new(),
            fault,
        };
        self.cycle += 1;
        record
    }

    fn seq(&mut self, seq: &Option<ActionSeq>, frame: Frame<'_>) -> Result<(), Fault> {
        if let Some(seq) = seq {
            for a in &seq.actions {
                self.action(a, frame)?;
            }
        }
        Ok(())
    }

    fn select(
        &mut self,
        transitions: &[TransitionDecl],
        states: &[StateDecl],
        state: usize,
        frame: Frame<'_>,
    ) -> Result<Option<usize>, Fault> {
        let scope = &self.model.machines[self.mi].scope;
        for (i, t) in transitions.iter().enumerate() {
            if t.source.name != states[state].name.name {
                continue;
            }
            if let Some(tr) = &t.trigger {
                let k = scope.event(&tr.name).unwrap();
                if !self.events[k] {
                    continue;
                }
            }
            if let Some(g) = &t.guard {
                if self.eval(g, frame)? != Value::Bool(true) {
                    continue;
                }
            }
            return Ok(Some(i));
        }
        Ok(None)
    }

    fn fire(
        &mut self,
        states: &[StateDecl],
        t: &TransitionDecl,
        frame: Frame<'_>,
    ) -> Result<usize, Fault> {
        let idx = |n: &str| states.iter().position(|s| s.name.name == n).unwrap();
        let (src, tgt) = (idx(&t.source.name), idx(&t.target.name));
        self.seq(&states[src].exit, frame)?;
        self.seq(&t.action, frame)?;
        self.seq(&states[tgt].entry, frame)?;
        Ok(tgt)
    }

    /// Slot of a variable name in a frame; `Err(i)` for parameter `i`.
    fn resolve(&self, name: &str, frame: Frame<'_>) -> Result<usize, usize> {
        let scope = &self.model.machines[self.mi].scope;
        match frame.op {
            None => match scope.lookup_var(name) {
                Some(VarRef::Var(k)) => Ok(k),
                _ => panic!("unresolved `{name}`"),
            },
            Some(d) => {
                let op = &self.model.unit.operations[d];
                if let Some(i) = op.params.iter().position(|p| p.name.name == name) {
                    return Err(i);
                }
                Ok(scope
                    .vars
                    .iter()
                    .position(|v| matches!(v.owner, VarOwner::Interface(_)) && v.name == name)
                    .unwrap())
            }
        }
    }

    fn action(&mut self, a: &Action, frame: Frame<'_>) -> Result<(), Fault> {
        let scope = &self.model.machines[self.mi].scope;
        match a {
            Action::ResetClock { clock, .. } => {
                let k = scope.clock(&clock.name).unwrap();
                self.clocks[k] = 0;
            }
            Action::Assign { target, value, .. } => {
                let v = self.eval(value, frame)?;
                let k = self
                    .resolve(&target.name, frame)
                    .expect("assignment to a variable");
                self.vars[k] = promote(v, self.vars[k].ty());
            }
            Action::Call { op, args, .. } => {
                let k = scope.op(&op.name).unwrap();
                let sym = &scope.ops[k];
                let mut vals = Vec::new();
                for (e, (_, ty)) in args.iter().zip(&sym.params) {
                    vals.push(promote(self.eval(e, frame)?, *ty));
                }
                self.call(k, vals)?;
            }
        }
        Ok(())
    }

    fn call(&mut self, k: usize, args: Vec<Value>) -> Result<(), Fault> {
        let scope = &self.model.machines[self.mi].scope;
        let sym = &scope.ops[k];
        self.ops.push(OpCall {
            name: sym.name.clone(),
            args: args.clone(),
        });
        if self.depth >= MAX_DEPTH {
            return Err(Fault::StepBudgetExceeded {
                op: sym.name.clone(),
            });
        }
        let Some(d) = sym.def else {
            return Ok(());
        };
        let def = &self.model.unit.operations[d];
        let frame = Frame {
            op: Some(d),
            args: &args,
        };
        if let Some(pre) = &def.pre {
            if self.eval(pre, frame)? != Value::Bool(true) {
                return Err(Fault::PreconditionViolation {
                    op: sym.name.clone(),
                });
            }
        }
        if let Some(body) = &def.body {
            self.depth += 1;
            let r = self.run_body(&body.states, &body.transitions, frame, &sym.name);
            self.depth -= 1;
            r?;
        }
        if let Some(post) = &def.post {
            if self.eval(post, frame)? != Value::Bool(true) {
                return Err(Fault::PostconditionViolation {
                    op: sym.name.clone(),
                });
            }
        }
        Ok(())
    }

    fn run_body(
        &mut self,
        states: &[StateDecl],
        ts: &[TransitionDecl],
        frame: Frame<'_>,
        name: &str,
    ) -> Result<(), Fault> {
        let mut s = states.iter().position(|s| s.is_initial).unwrap();
        self.seq(&states[s].entry, frame)?;
        let mut steps = 0;
        while !states[s].is_final {
            steps += 1;
            if steps > BUDGET {
                return Err(Fault::StepBudgetExceeded {
                    op: name.to_string(),
                });
            }
            match self.select(ts, states, s, frame)? {
                Some(t) => s = self.fire(states, &ts[t], frame)?,
                None => self.seq(&states[s].during, frame)?,
            }
        }
        Ok(())
    }

    fn eval(&mut self, e: &Expr, frame: Frame<'_>) -> Result<Value, Fault> {
        let v = match &e.kind {
            ExprKind::Lit(l) => match *l {
                Literal::Bool(b) => Value::Bool(b),
                Literal::Int(i) => Value::Int(i),
                Literal::Real(r) => Value::Real(r),
                Literal::Vec2(x, y) => Value::Vec2(x, y),
            },
            ExprKind::Var(n) => match self.resolve(n, frame) {
                Ok(k) => self.vars[k],
                Err(i) => frame.args[i],
            },
            ExprKind::Since(c) => {
                let k = self.model.machines[self.mi].scope.clock(&c.name).unwrap();
                Value::Real(self.clocks[k] as f64 * self.time_unit)
            }
            ExprKind::Unary(UnOp::Not, a) => match self.eval(a, frame)? {
                Value::Bool(b) => Value::Bool(!b),
                _ => unreachable!(),
            },
            ExprKind::Unary(UnOp::Neg, a) => match self.eval(a, frame)? {
                Value::Int(i) => Value::Int(
                    i.checked_neg()
                        .ok_or_else(|| fault_arith("integer overflow"))?,
                ),
                Value::Real(r) => Value::Real(-r),
                Value::Vec2(x, y) => Value::Vec2(-x, -y),
                _ => unreachable!(),
            },
            ExprKind::Binary(BinOp::And, a, b) => {
                if self.eval(a, frame)? == Value::Bool(true) {
                    self.eval(b, frame)?
                } else {
                    Value::Bool(false)
                }
            }
            ExprKind::Binary(BinOp::Or, a, b) => {
                if self.eval(a, frame)? == Value::Bool(true) {
                    Value::Bool(true)
                } else {
                    self.eval(b, frame)?
                }
            }
            ExprKind::Binary(op, a, b) => {
                let x = self.eval(a, frame)?;
                let y = self.eval(b, frame)?;
                apply(*op, x, y)?
            }
            ExprKind::Cond(c, a, b) => {
                let branch = if self.eval(c, frame)? == Value::Bool(true) {
                    a
                } else {
                    b
                };
                let v = self.eval(branch, frame)?;
                promote(v, e.ty.unwrap())
            }
        };
        Ok(v)
    }
}

fn promote(v: Value, ty: Type) -> Value {
    match (v, ty) {
        (Value::Int(i), Type::Real) => Value::Real(i as f64),
        (v, _) => v,
    }
}

fn real(v: Value) -> f64 {
    match v {
        Value::Int(i) => i as f64,
        Value::Real(r) => r,
        _ => unreachable!(),
    }
}

fn apply(op: BinOp, x: Value, y: Value) -> Result<Value, Fault> {
    use Value::*;
    let overflow = || fault_arith("integer overflow");
    Ok(match (op, x, y) {
        (BinOp::Add, Int(a), Int(b)) => Int(a.checked_add(b).ok_or_else(overflow)?),
        (BinOp::Sub, Int(a), Int(b)) => Int(a.checked_sub(b).ok_or_else(overflow)?),
        (BinOp::Mul, Int(a), Int(b)) => Int(a.checked_mul(b).ok_or_else(overflow)?),
        (BinOp::Div, Int(_), Int(0)) => return Err(fault_arith("division by zero")),
        (BinOp::Div, Int(a), Int(b)) => Int(a.checked_div(b).ok_or_else(overflow)?),
        (BinOp::Add, Vec2(a, b), Vec2(c, d)) => Vec2(a + c, b + d),
        (BinOp::Sub, Vec2(a, b), Vec2(c, d)) => Vec2(a - c, b - d),
        (BinOp::Mul, Vec2(a, b), s) | (BinOp::Mul, s, Vec2(a, b)) => Vec2(a * real(s), b * real(s)),
        (BinOp::Eq | BinOp::Ne, a, b) => {
            let same = match (a, b) {
                (Bool(p), Bool(q)) => p == q,
                (Int(p), Int(q)) => p == q,
                (Vec2(p, q), Vec2(r, s)) => p == r && q == s,
                (a, b) => real(a) == real(b),
            };
            Bool(if op == BinOp::Eq { same } else { !same })
        }
        (BinOp::Lt, Int(a), Int(b)) => Bool(a < b),
        (BinOp::Le, Int(a), Int(b)) => Bool(a <= b),
        (BinOp::Gt, Int(a), Int(b)) => Bool(a > b),
        (BinOp::Ge, Int(a), Int(b)) => Bool(a >= b),
        (BinOp::Lt, a, b) => Bool(real(a) < real(b)),
        (BinOp::Le, a, b) => Bool(real(a) <= real(b)),
        (BinOp::Gt, a, b) => Bool(real(a) > real(b)),
        (BinOp::Ge, a, b) => Bool(real(a) >= real(b)),
        (BinOp::Div, a, b) => {
            let d = real(b);
            if d == 0.0 {
                return Err(fault_arith("division by zero"));
            }
            Real(real(a) / d)
        }
        (BinOp::Add, a, b) => Real(real(a) + real(b)),
        (BinOp::Sub, a, b) => Real(real(a) - real(b)),
        (BinOp::Mul, a, b) => Real(real(a) * real(b)),
        (BinOp::And | BinOp::Or, ..) => unreachable!(),
    })
}
