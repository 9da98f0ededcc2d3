use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

/// One postfix instruction. Jump offsets are relative and forward-only:
/// the target is `pc + 1 + offset`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Instr {
    PushBool(bool),
    PushInt(i64),
    PushReal(f64),
    PushVec(f64, f64),
    /// Machine variable slot.
    LoadVar(usize),
    /// Operation parameter.
    LoadLocal(usize),
    /// Elapsed time on clock k, in time units.
    Since(usize),
    Not,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    /// Promote the integer on top of the stack to a real.
    ToReal,
    /// Pop; jump when false.
    JumpIfFalse(usize),
    /// Jump keeping the top when false, otherwise pop it and fall through.
    JumpIfFalseOrPop(usize),
    /// Jump keeping the top when true, otherwise pop it and fall through.
    JumpIfTrueOrPop(usize),
    Jump(usize),
    StoreVar(usize),
    ResetClock(usize),
    /// Call platform-bound operation k; pops its arguments.
    CallExt(usize),
    /// Call defined operation k; pops its arguments.
    CallDef(usize),
}

impl Instr {
    /// Stable mnemonic, used by the IR encoding.
    pub fn mnemonic(&self) -> &'static str {
        match self {
            Instr::PushBool(_) => "push_bool",
            Instr::PushInt(_) => "push_int",
            Instr::PushReal(_) => "push_real",
            Instr::PushVec(..) => "push_vec",
            Instr::LoadVar(_) => "load_var",
            Instr::LoadLocal(_) => "load_local",
            Instr::Since(_) => "since",
            Instr::Not => "not",
            Instr::Neg => "neg",
            Instr::Add => "add",
            Instr::Sub => "sub",
            Instr::Mul => "mul",
            Instr::Div => "div",
            Instr::Eq => "eq",
            Instr::Ne => "ne",
            Instr::Lt => "lt",
            Instr::Le => "le",
            Instr::Gt => "gt",
            Instr::Ge => "ge",
            Instr::ToReal => "to_real",
            Instr::JumpIfFalse(_) => "jump_if_false",
            Instr::JumpIfFalseOrPop(_) => "jump_if_false_or_pop",
            Instr::JumpIfTrueOrPop(_) => "jump_if_true_or_pop",
            Instr::Jump(_) => "jump",
            Instr::StoreVar(_) => "store_var",
            Instr::ResetClock(_) => "reset_clock",
            Instr::CallExt(_) => "call_ext",
            Instr::CallDef(_) => "call_def",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProgramKind {
    /// Leaves exactly one value.
    Expr,
    /// Leaves the stack empty.
    Action,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Program {
    pub code: Vec<Instr>,
}

impl Program {
    pub fn new(code: Vec<Instr>) -> Self {
        Program { code }
    }
}

/// Index bounds a program must respect.
#[derive(Clone, Copy, Debug)]
pub struct Bounds<'a> {
    pub vars: usize,
    pub locals: usize,
    pub clocks: usize,
    pub ext_arity: &'a [usize],
    pub def_arity: &'a [usize],
}

/// Static check: indices in range, forward jumps in range, consistent
/// stack depth on every path, never underflows, and ends at the depth
/// `kind` requires.
pub fn verify(prog: &Program, kind: ProgramKind, b: &Bounds<'_>) -> Result<(), String> {
    let code = &prog.code;
    let n = code.len();
    let mut depth: Vec<Option<usize>> = vec![None; n + 1];
    depth[0] = Some(0);

    fn merge(depth: &mut [Option<usize>], at: usize, d: usize) -> Result<(), String> {
        match depth[at] {
            None => {
                depth[at] = Some(d);
                Ok(())
            }
            Some(prev) if prev == d => Ok(()),
            Some(prev) => Err(format!("stack depth mismatch at {at}: {prev} vs {d}")),
        }
    }

    for pc in 0..n {
        let Some(d) = depth[pc] else {
            return Err(format!("unreachable instruction at {pc}"));
        };
        let need = |k: usize| -> Result<(), String> {
            if d < k {
                Err(format!("stack underflow at {pc}"))
            } else {
                Ok(())
            }
        };
        let check_idx = |i: usize, len: usize, what: &str| -> Result<(), String> {
            if i < len {
                Ok(())
            } else {
                Err(format!("{what} index {i} out of range at {pc}"))
            }
        };
        let target = |off: usize| -> Result<usize, String> {
            let t = pc + 1 + off;
            if t <= n {
                Ok(t)
            } else {
                Err(format!("jump out of range at {pc}"))
            }
        };
        match code[pc] {
            Instr::PushBool(_) | Instr::PushInt(_) | Instr::PushReal(_) | Instr::PushVec(..) => {
                merge(&mut depth, pc + 1, d + 1)?
            }
            Instr::LoadVar(i) => {
                check_idx(i, b.vars, "variable")?;
                merge(&mut depth, pc + 1, d + 1)?
            }
            Instr::LoadLocal(i) => {
                check_idx(i, b.locals, "parameter")?;
                merge(&mut depth, pc + 1, d + 1)?
            }
            Instr::Since(k) => {
                check_idx(k, b.clocks, "clock")?;
                merge(&mut depth, pc + 1, d + 1)?
            }
            Instr::Not | Instr::Neg | Instr::ToReal => {
                need(1)?;
                merge(&mut depth, pc + 1, d)?
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
                need(2)?;
                merge(&mut depth, pc + 1, d - 1)?
            }
            Instr::JumpIfFalse(off) => {
                need(1)?;
                let t = target(off)?;
                merge(&mut depth, pc + 1, d - 1)?;
                merge(&mut depth, t, d - 1)?
            }
            Instr::JumpIfFalseOrPop(off) | Instr::JumpIfTrueOrPop(off) => {
                need(1)?;
                let t = target(off)?;
                merge(&mut depth, pc + 1, d - 1)?;
                merge(&mut depth, t, d)?
            }
            Instr::Jump(off) => {
                let t = target(off)?;
                merge(&mut depth, t, d)?
            }
            Instr::StoreVar(i) => {
                check_idx(i, b.vars, "variable")?;
                need(1)?;
                merge(&mut depth, pc + 1, d - 1)?
            }
            Instr::ResetClock(k) => {
                check_idx(k, b.clocks, "clock")?;
                merge(&mut depth, pc + 1, d)?
            }
            Instr::CallExt(k) => {
                check_idx(k, b.ext_arity.len(), "external operation")?;
                need(b.ext_arity[k])?;
                merge(&mut depth, pc + 1, d - b.ext_arity[k])?
            }
            Instr::CallDef(k) => {
                check_idx(k, b.def_arity.len(), "defined operation")?;
                need(b.def_arity[k])?;
                merge(&mut depth, pc + 1, d - b.def_arity[k])?
            }
        }
    }
    let want = match kind {
        ProgramKind::Expr => 1,
        ProgramKind::Action => 0,
    };
    match depth[n] {
        Some(d) if d == want => Ok(()),
        Some(d) => Err(format!(
            "program ends with stack depth {d}, expected {want}"
        )),
        None => Err(String::from("program end is unreachable")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const B: Bounds<'static> = Bounds {
        vars: 2,
        locals: 0,
        clocks: 1,
        ext_arity: &[1],
        def_arity: &[],
    };

    #[test]
    fn balanced_programs_pass() {
        let e = Program::new(vec![Instr::LoadVar(0), Instr::PushInt(1), Instr::Add]);
        assert!(verify(&e, ProgramKind::Expr, &B).is_ok());
        let a = Program::new(vec![
            Instr::PushReal(1.0),
            Instr::CallExt(0),
            Instr::ResetClock(0),
        ]);
        assert!(verify(&a, ProgramKind::Action, &B).is_ok());
    }

    #[test]
    fn short_circuit_shapes_verify() {
        // a and b
        let p = Program::new(vec![
            Instr::PushBool(true),
            Instr::JumpIfFalseOrPop(1),
            Instr::PushBool(false),
        ]);
        assert!(verify(&p, ProgramKind::Expr, &B).is_ok());
        // c ? 1 : 2
        let p = Program::new(vec![
            Instr::PushBool(true),
            Instr::JumpIfFalse(2),
            Instr::PushInt(1),
            Instr::Jump(1),
            Instr::PushInt(2),
        ]);
        assert!(verify(&p, ProgramKind::Expr, &B).is_ok());
    }

    #[test]
    fn unbalanced_and_out_of_range_fail() {
        let p = Program::new(vec![Instr::Add]);
        assert!(verify(&p, ProgramKind::Expr, &B).is_err());
        let p = Program::new(vec![Instr::PushInt(1)]);
        assert!(verify(&p, ProgramKind::Action, &B).is_err());
        let p = Program::new(vec![Instr::LoadVar(7)]);
        assert!(verify(&p, ProgramKind::Expr, &B).is_err());
        let p = Program::new(vec![Instr::PushBool(true), Instr::JumpIfFalse(9)]);
        assert!(verify(&p, ProgramKind::Action, &B).is_err());
        // Branches leaving different depths.
        let p = Program::new(vec![
            Instr::PushBool(true),
            Instr::JumpIfFalse(1),
            Instr::PushInt(1),
        ]);
        assert!(verify(&p, ProgramKind::Action, &B).is_err());
    }
}
