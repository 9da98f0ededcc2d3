//! Program evaluation and operation dispatch.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{Fault, MachineIo, OpCall, Platform, RuntimeConfig};
use crate::compiler::{
    CompiledMachine, CompiledState, CompiledTransition, Instr, OpSignature, Program,
};
use crate::value::Value;

/// Everything a program can touch while it runs.
pub(super) struct Exec<'a, P: Platform> {
    pub m: &'a CompiledMachine,
    pub vars: &'a mut [Value],
    pub clocks: &'a mut [u64],
    pub events: &'a mut [bool],
    pub platform: &'a mut P,
    pub config: &'a RuntimeConfig,
    pub ops: &'a mut Vec<OpCall>,
    pub warnings: &'a mut Vec<String>,
    pub depth: usize,
}

fn confusion(what: &str) -> Fault {
    Fault::TypeConfusion {
        detail: String::from(what),
    }
}

fn arith(detail: &str) -> Fault {
    Fault::Arithmetic {
        detail: String::from(detail),
    }
}

fn pop(stack: &mut Vec<Value>) -> Result<Value, Fault> {
    stack.pop().ok_or_else(|| confusion("stack underflow"))
}

fn truthy(v: Value) -> Result<bool, Fault> {
    v.as_bool().ok_or_else(|| confusion("expected a boolean"))
}

pub fn binary(op: Instr, a: Value, b: Value) -> Result<Value, Fault> {
    use Value::*;
    let out = match (op, a, b) {
        (Instr::Add, Int(x), Int(y)) => {
            Int(x.checked_add(y).ok_or_else(|| arith("integer overflow"))?)
        }
        (Instr::Sub, Int(x), Int(y)) => {
            Int(x.checked_sub(y).ok_or_else(|| arith("integer overflow"))?)
        }
        (Instr::Mul, Int(x), Int(y)) => {
            Int(x.checked_mul(y).ok_or_else(|| arith("integer overflow"))?)
        }
        (Instr::Div, Int(x), Int(y)) => {
            if y == 0 {
                return Err(arith("division by zero"));
            }
            Int(x.checked_div(y).ok_or_else(|| arith("integer overflow"))?)
        }
        (Instr::Add, Vec2(ax, ay), Vec2(bx, by)) => Vec2(ax + bx, ay + by),
        (Instr::Sub, Vec2(ax, ay), Vec2(bx, by)) => Vec2(ax - bx, ay - by),
        (Instr::Mul, Vec2(x, y), s) | (Instr::Mul, s, Vec2(x, y)) => {
            let k = s
                .as_real()
                .ok_or_else(|| confusion("vector scaled by a non-number"))?;
            Vec2(x * k, y * k)
        }
        (Instr::Eq, a, b) => Bool(equal(a, b)?),
        (Instr::Ne, a, b) => Bool(!equal(a, b)?),
        (op @ (Instr::Lt | Instr::Le | Instr::Gt | Instr::Ge), a, b) => {
            let ord = match (a, b) {
                (Int(x), Int(y)) => x.partial_cmp(&y),
                _ => {
                    let x = a
                        .as_real()
                        .ok_or_else(|| confusion("comparison of non-numbers"))?;
                    let y = b
                        .as_real()
                        .ok_or_else(|| confusion("comparison of non-numbers"))?;
                    x.partial_cmp(&y)
                }
            };
            Bool(match (op, ord) {
                (_, None) => false,
                (Instr::Lt, Some(o)) => o.is_lt(),
                (Instr::Le, Some(o)) => o.is_le(),
                (Instr::Gt, Some(o)) => o.is_gt(),
                (_, Some(o)) => o.is_ge(),
            })
        }
        (op @ (Instr::Add | Instr::Sub | Instr::Mul | Instr::Div), a, b) => {
            let x = a
                .as_real()
                .ok_or_else(|| confusion("arithmetic on non-numbers"))?;
            let y = b
                .as_real()
                .ok_or_else(|| confusion("arithmetic on non-numbers"))?;
            Real(match op {
                Instr::Add => x + y,
                Instr::Sub => x - y,
                Instr::Mul => x * y,
                _ => {
                    if y == 0.0 {
                        return Err(arith("division by zero"));
                    }
                    x / y
                }
            })
        }
        _ => return Err(confusion("bad binary operation")),
    };
    Ok(out)
}

fn equal(a: Value, b: Value) -> Result<bool, Fault> {
    use Value::*;
    Ok(match (a, b) {
        (Bool(x), Bool(y)) => x == y,
        (Int(x), Int(y)) => x == y,
        (Vec2(ax, ay), Vec2(bx, by)) => ax == bx && ay == by,
        (a, b) => {
            let x = a
                .as_real()
                .ok_or_else(|| confusion("equality across types"))?;
            let y = b
                .as_real()
                .ok_or_else(|| confusion("equality across types"))?;
            x == y
        }
    })
}

pub fn unary(op: Instr, a: Value) -> Result<Value, Fault> {
    Ok(match (op, a) {
        (Instr::Not, Value::Bool(b)) => Value::Bool(!b),
        (Instr::Neg, Value::Int(i)) => {
            Value::Int(i.checked_neg().ok_or_else(|| arith("integer overflow"))?)
        }
        (Instr::Neg, Value::Real(r)) => Value::Real(-r),
        (Instr::Neg, Value::Vec2(x, y)) => Value::Vec2(-x, -y),
        (Instr::ToReal, Value::Int(i)) => Value::Real(i as f64),
        (Instr::ToReal, Value::Real(r)) => Value::Real(r),
        _ => return Err(confusion("bad unary operation")),
    })
}

enum Callee {
    Ext(usize),
    Def(usize),
}

impl<P: Platform> Exec<'_, P> {
    /// Evaluate an expression program.
    pub fn eval(&mut self, prog: &Program, locals: &[Value]) -> Result<Value, Fault> {
        let mut stack = Vec::new();
        self.run(prog, locals, &mut stack)?;
        pop(&mut stack)
    }

    pub fn eval_bool(&mut self, prog: &Program, locals: &[Value]) -> Result<bool, Fault> {
        truthy(self.eval(prog, locals)?)
    }

    /// Execute an action program.
    pub fn exec(&mut self, prog: &Program, locals: &[Value]) -> Result<(), Fault> {
        let mut stack = Vec::new();
        self.run(prog, locals, &mut stack)
    }

    fn run(
        &mut self,
        prog: &Program,
        locals: &[Value],
        stack: &mut Vec<Value>,
    ) -> Result<(), Fault> {
        let code = &prog.code;
        let mut pc = 0;
        while pc < code.len() {
            let ins = code[pc];
            pc += 1;
            match ins {
                Instr::PushBool(b) => stack.push(Value::Bool(b)),
                Instr::PushInt(i) => stack.push(Value::Int(i)),
                Instr::PushReal(r) => stack.push(Value::Real(r)),
                Instr::PushVec(x, y) => stack.push(Value::Vec2(x, y)),
                Instr::LoadVar(i) => {
                    stack.push(*self.vars.get(i).ok_or_else(|| confusion("variable slot"))?)
                }
                Instr::LoadLocal(i) => {
                    stack.push(*locals.get(i).ok_or_else(|| confusion("parameter slot"))?)
                }
                Instr::Since(k) => {
                    let n = *self.clocks.get(k).ok_or_else(|| confusion("clock slot"))?;
                    stack.push(Value::Real(n as f64 * self.config.time_unit));
                }
                Instr::Not | Instr::Neg | Instr::ToReal => {
                    let a = pop(stack)?;
                    stack.push(unary(ins, a)?);
                }
                Instr::Add
                | Instr::Sub
                | Instr::Mul
                | Instr::Div
                | Instr::Eq
                | Instr::Ne
                | Instr::Lt
                | Instr::Le
                | Instr::Gt
                | Instr::Ge => {
                    let b = pop(stack)?;
                    let a = pop(stack)?;
                    stack.push(binary(ins, a, b)?);
                }
                Instr::JumpIfFalse(off) => {
                    if !truthy(pop(stack)?)? {
                        pc += off;
                    }
                }
                Instr::JumpIfFalseOrPop(off) => {
                    let top = *stack.last().ok_or_else(|| confusion("stack underflow"))?;
                    if truthy(top)? {
                        stack.pop();
                    } else {
                        pc += off;
                    }
                }
                Instr::JumpIfTrueOrPop(off) => {
                    let top = *stack.last().ok_or_else(|| confusion("stack underflow"))?;
                    if truthy(top)? {
                        pc += off;
                    } else {
                        stack.pop();
                    }
                }
                Instr::Jump(off) => pc += off,
                Instr::StoreVar(i) => {
                    let v = pop(stack)?;
                    let slot = self
                        .vars
                        .get_mut(i)
                        .ok_or_else(|| confusion("variable slot"))?;
                    *slot = v
                        .coerce(slot.ty())
                        .ok_or_else(|| confusion("store of the wrong type"))?;
                }
                Instr::ResetClock(k) => {
                    *self
                        .clocks
                        .get_mut(k)
                        .ok_or_else(|| confusion("clock slot"))? = 0
                }
                Instr::CallExt(k) => self.call(Callee::Ext(k), stack)?,
                Instr::CallDef(k) => self.call(Callee::Def(k), stack)?,
            }
        }
        Ok(())
    }

    fn call(&mut self, callee: Callee, stack: &mut Vec<Value>) -> Result<(), Fault> {
        let m = self.m;
        let sig: &OpSignature = match callee {
            Callee::Ext(k) => &m.external_ops[k],
            Callee::Def(k) => &m.defined_ops[k].sig,
        };
        let at = stack
            .len()
            .checked_sub(sig.params.len())
            .ok_or_else(|| confusion("stack underflow"))?;
        let args = stack.split_off(at);
        self.ops.push(OpCall {
            name: sig.name.clone(),
            args: args.clone(),
        });
        if self.depth >= self.config.max_call_depth {
            return Err(Fault::StepBudgetExceeded {
                op: sig.name.clone(),
            });
        }
        if let Some(pre) = &sig.pre {
            if !self.eval_bool(pre, &args)? {
                return Err(Fault::PreconditionViolation {
                    op: sig.name.clone(),
                });
            }
        }
        self.depth += 1;
        let result = match callee {
            Callee::Ext(_) => {
                let mut io = MachineIo {
                    machine: m,
                    vars: self.vars,
                    events: self.events,
                };
                self.platform
                    .invoke(&sig.name, &args, &mut io)
                    .map_err(|message| Fault::Platform {
                        op: sig.name.clone(),
                        message,
                    })
            }
            Callee::Def(k) => self.run_body(k, &args),
        };
        self.depth -= 1;
        result?;
        if let Some(post) = &sig.post {
            if !self.eval_bool(post, &args)? {
                if self.config.post_as_warning {
                    self.warnings
                        .push(format!("postconditionViolation {}", sig.name));
                } else {
                    return Err(Fault::PostconditionViolation {
                        op: sig.name.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Run a defined operation's body from its initial state to a final
    /// state. Consumes no simulated time.
    fn run_body(&mut self, k: usize, args: &[Value]) -> Result<(), Fault> {
        let m = self.m;
        let d = &m.defined_ops[k];
        let mut state = d.initial;
        if let Some(p) = &d.states[state].entry {
            self.exec(p, args)?;
        }
        let mut steps = 0usize;
        while !d.states[state].is_final {
            steps += 1;
            if steps > self.config.op_step_budget {
                return Err(Fault::StepBudgetExceeded {
                    op: d.sig.name.clone(),
                });
            }
            match self.select(&d.transitions, state, args)? {
                Some(t) => state = self.fire(&d.states, &d.transitions[t], args)?,
                None => {
                    if let Some(p) = &d.states[state].during {
                        self.exec(p, args)?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Index of the first enabled transition leaving `state`.
    pub fn select(
        &mut self,
        transitions: &[CompiledTransition],
        state: usize,
        locals: &[Value],
    ) -> Result<Option<usize>, Fault> {
        for (i, t) in transitions.iter().enumerate() {
            if t.source != state {
                continue;
            }
            if let Some(e) = t.event {
                if !self.events.get(e).copied().unwrap_or(false) {
                    continue;
                }
            }
            if let Some(g) = &t.guard {
                if !self.eval_bool(g, locals)? {
                    continue;
                }
            }
            return Ok(Some(i));
        }
        Ok(None)
    }

    /// Exit the source, run the action, enter the target. Returns the target.
    pub fn fire(
        &mut self,
        states: &[CompiledState],
        t: &CompiledTransition,
        locals: &[Value],
    ) -> Result<usize, Fault> {
        if let Some(p) = &states[t.source].exit {
            self.exec(p, locals)?;
        }
        if let Some(p) = &t.action {
            self.exec(p, locals)?;
        }
        if let Some(p) = &states[t.target].entry {
            self.exec(p, locals)?;
        }
        Ok(t.target)
    }
}
