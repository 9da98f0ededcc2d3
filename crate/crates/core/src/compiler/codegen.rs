//! Source emission following the class mapping of the modelling notation:
//! one class per interface (events as an enumerated attribute, variables
//! as attributes, operations as overridable methods), one class per
//! machine (states as an enumerated attribute, clocks as timer objects,
//! the required interface inherited, a `MakeTransition` state update), and
//! a `Timer` class.
//!
//! Output is C++-flavoured text. It is compared against golden files and
//! never compiled.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use super::{
    CompiledMachine, CompiledState, CompiledTransition, DefinedOp, Instr, OpSignature, Program,
};
use crate::dsl::text::real;
use crate::dsl::InterfaceDecl;
use crate::value::Type;

/// One emitted file: `name` is the class name, the file is `<name>.gen.txt`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceUnit {
    pub name: String,
    pub text: String,
}

const I1: &str = "    ";
const I2: &str = "        ";
const I3: &str = "            ";

/// Emit the interface units, the machine unit and, when the machine has
/// clocks, the timer unit, in that order.
pub fn emit_units(cm: &CompiledMachine, ifaces: &[&InterfaceDecl]) -> Vec<SourceUnit> {
    let mut units: Vec<SourceUnit> = ifaces
        .iter()
        .map(|i| SourceUnit {
            name: i.name.name.clone(),
            text: interface_unit(cm, i),
        })
        .collect();
    units.push(SourceUnit {
        name: cm.name.clone(),
        text: machine_unit(cm, ifaces),
    });
    if !cm.clocks.is_empty() {
        units.push(SourceUnit {
            name: String::from("Timer"),
            text: timer_unit(),
        });
    }
    units
}

/// All units for a machine and its required interface, concatenated.
pub fn emit_source(cm: &CompiledMachine, iface: &InterfaceDecl) -> String {
    let units = emit_units(cm, &[iface]);
    let mut out = String::new();
    for (i, u) in units.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&u.text);
    }
    out
}

fn header(out: &mut String, name: &str) {
    let _ = writeln!(
        out,
        "// {name}: generated by smforge {}. Do not edit.",
        crate::VERSION
    );
    out.push('\n');
}

fn ctype(t: Type) -> &'static str {
    match t {
        Type::Boolean => "bool",
        Type::Int => "long",
        Type::Real => "double",
        Type::Vector2d => "Vector2d",
    }
}

fn value_text(v: &crate::value::Value) -> String {
    use crate::value::Value;
    match *v {
        Value::Bool(b) => b.to_string(),
        Value::Int(i) => i.to_string(),
        Value::Real(r) => real(r),
        Value::Vec2(x, y) => format!("Vector2d({}, {})", real(x), real(y)),
    }
}

fn params_text(params: &[(String, Type)]) -> String {
    let mut s = String::new();
    for (i, (n, t)) in params.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        let _ = write!(s, "{} {n}", ctype(*t));
    }
    s
}

fn find_sig<'a>(cm: &'a CompiledMachine, name: &str) -> Option<&'a OpSignature> {
    cm.external_ops
        .iter()
        .chain(cm.defined_ops.iter().map(|d| &d.sig))
        .find(|o| o.name == name)
}

fn interface_unit(cm: &CompiledMachine, iface: &InterfaceDecl) -> String {
    let mut out = String::new();
    header(&mut out, &iface.name.name);
    let _ = writeln!(out, "class {} {{", iface.name.name);
    out.push_str("public:\n");
    out.push_str(I1);
    out.push_str("enum Event {");
    for (i, e) in iface.events.iter().enumerate() {
        out.push_str(if i == 0 { " " } else { ", " });
        out.push_str(&e.name);
    }
    if !iface.events.is_empty() {
        out.push(',');
    }
    out.push_str(" EVENT_COUNT };\n");
    let _ = writeln!(out, "{I1}bool events[EVENT_COUNT] = {{}};");
    for v in &iface.variables {
        let init = cm
            .var_index(&v.name.name)
            .map(|k| value_text(&cm.vars[k].init))
            .unwrap_or_else(|| value_text(&v.ty.zero()));
        let _ = writeln!(out, "{I1}{} {} = {init};", ctype(v.ty), v.name.name);
    }
    if !iface.operations.is_empty() {
        out.push('\n');
    }
    for op in &iface.operations {
        let params: Vec<(String, Type)> = op
            .params
            .iter()
            .map(|p| (p.name.name.clone(), p.ty))
            .collect();
        let defined = cm.defined_ops.iter().any(|d| d.sig.name == op.name.name);
        let sig = find_sig(cm, &op.name.name);
        let _ = write!(
            out,
            "{I1}virtual void {}({})",
            op.name.name,
            params_text(&params)
        );
        if defined {
            out.push_str(";\n");
        } else if let Some(sig) = sig.filter(|s| s.pre.is_some() || s.post.is_some()) {
            // Platform-bound with a contract: the platform overrides Do<Name>.
            out.push_str(" {\n");
            let names = Names::op(cm, sig);
            if let Some(pre) = &sig.pre {
                let _ = writeln!(out, "{I2}assert({});", expr(&pre.code, &names));
            }
            let args: Vec<&str> = params.iter().map(|(n, _)| n.as_str()).collect();
            let _ = writeln!(out, "{I2}Do{}({});", op.name.name, args.join(", "));
            if let Some(post) = &sig.post {
                let _ = writeln!(out, "{I2}assert({});", expr(&post.code, &names));
            }
            let _ = writeln!(out, "{I1}}}");
            let _ = writeln!(
                out,
                "{I1}virtual void Do{}({}) = 0;",
                op.name.name,
                params_text(&params)
            );
        } else {
            out.push_str(" = 0;\n");
        }
    }
    let _ = writeln!(out, "{I1}virtual ~{}() {{}}", iface.name.name);
    out.push_str("};\n");
    out
}

fn machine_unit(cm: &CompiledMachine, ifaces: &[&InterfaceDecl]) -> String {
    let mut out = String::new();
    header(&mut out, &cm.name);
    let _ = write!(out, "class {}", cm.name);
    for (i, iface) in ifaces.iter().enumerate() {
        out.push_str(if i == 0 { " : " } else { ", " });
        let _ = write!(out, "public {}", iface.name.name);
    }
    out.push_str(" {\npublic:\n");
    let _ = writeln!(
        out,
        "{I1}enum State {{ {} }};",
        join(cm.states.iter().map(|s| s.name.as_str()))
    );
    let _ = writeln!(out, "{I1}State state = {};", cm.states[cm.initial].name);
    let _ = writeln!(out, "{I1}bool entered = false;");
    let _ = writeln!(out, "{I1}double timeUnit = 1.0;");
    for c in &cm.clocks {
        let _ = writeln!(out, "{I1}Timer {c};");
    }
    let iface_vars: Vec<&str> = ifaces
        .iter()
        .flat_map(|i| i.variables.iter().map(|v| v.name.name.as_str()))
        .collect();
    for v in cm
        .vars
        .iter()
        .filter(|v| !iface_vars.contains(&v.name.as_str()))
    {
        let _ = writeln!(
            out,
            "{I1}{} {} = {};",
            ctype(v.ty),
            v.name,
            value_text(&v.init)
        );
    }

    out.push('\n');
    let _ = writeln!(out, "{I1}{}() {{", cm.name);
    for c in &cm.clocks {
        let _ = writeln!(out, "{I2}{c}.StartTimer();");
    }
    let _ = writeln!(out, "{I1}}}");

    let names = Names::machine(cm);
    for s in &cm.states {
        for (kind, prog) in [
            ("Entry", &s.entry),
            ("During", &s.during),
            ("Exit", &s.exit),
        ] {
            if let Some(p) = prog {
                out.push('\n');
                let _ = writeln!(out, "{I1}void {kind}_{}() {{", s.name);
                for line in actions(&p.code, &names) {
                    let _ = writeln!(out, "{I2}{line}");
                }
                let _ = writeln!(out, "{I1}}}");
            }
        }
    }

    out.push('\n');
    let _ = writeln!(out, "{I1}void MakeTransition() {{");
    let _ = writeln!(out, "{I2}if (!entered) {{");
    let _ = writeln!(out, "{I3}entered = true;");
    if cm.states[cm.initial].entry.is_some() {
        let _ = writeln!(out, "{I3}Entry_{}();", cm.states[cm.initial].name);
    }
    let _ = writeln!(out, "{I2}}}");
    let _ = writeln!(out, "{I2}switch (state) {{");
    for (si, s) in cm.states.iter().enumerate() {
        let _ = writeln!(out, "{I2}case {}:", s.name);
        for t in cm.transitions.iter().filter(|t| t.source == si) {
            transition(&mut out, cm, &cm.states, t, &names, I3, "break;");
        }
        if s.during.is_some() {
            let _ = writeln!(out, "{I3}During_{}();", s.name);
        }
        let _ = writeln!(out, "{I3}break;");
    }
    let _ = writeln!(out, "{I2}}}");
    for c in &cm.clocks {
        let _ = writeln!(out, "{I2}{c}.Tick();");
    }
    let _ = writeln!(out, "{I1}}}");

    for d in &cm.defined_ops {
        out.push('\n');
        defined_op(&mut out, cm, d);
    }
    out.push_str("};\n");
    out
}

fn transition(
    out: &mut String,
    cm: &CompiledMachine,
    states: &[CompiledState],
    t: &CompiledTransition,
    names: &Names<'_>,
    indent: &str,
    done: &str,
) {
    let mut cond = Vec::new();
    if let Some(e) = t.event {
        cond.push(format!("events[{}]", cm.events[e]));
    }
    if let Some(g) = &t.guard {
        let g = expr(&g.code, names);
        cond.push(if t.event.is_some() {
            format!("({g})")
        } else {
            g
        });
    }
    let cond = if cond.is_empty() {
        String::from("true")
    } else {
        cond.join(" && ")
    };
    let _ = writeln!(out, "{indent}if ({cond}) {{");
    let inner = format!("{indent}{I1}");
    let src = &states[t.source];
    let tgt = &states[t.target];
    if let Some(p) = &src.exit {
        emit_inline(out, &inner, p, names);
    }
    if let Some(p) = &t.action {
        emit_inline(out, &inner, p, names);
    }
    let _ = writeln!(out, "{inner}state = {};", tgt.name);
    if let Some(p) = &tgt.entry {
        emit_inline(out, &inner, p, names);
    }
    let _ = writeln!(out, "{inner}{done}");
    let _ = writeln!(out, "{indent}}}");
}

fn emit_inline(out: &mut String, indent: &str, p: &Program, names: &Names<'_>) {
    for line in actions(&p.code, names) {
        let _ = writeln!(out, "{indent}{line}");
    }
}

fn defined_op(out: &mut String, cm: &CompiledMachine, d: &DefinedOp) {
    let sig = &d.sig;
    let names = Names::op(cm, sig);
    let _ = writeln!(
        out,
        "{I1}void {}({}) override {{",
        sig.name,
        params_text(&sig.params)
    );
    if let Some(pre) = &sig.pre {
        let _ = writeln!(out, "{I2}assert({});", expr(&pre.code, &names));
    }
    let _ = writeln!(
        out,
        "{I2}enum {{ {} }} state = {};",
        join(d.states.iter().map(|s| s.name.as_str())),
        d.states[d.initial].name
    );
    if let Some(p) = &d.states[d.initial].entry {
        emit_inline(out, I2, p, &names);
    }
    let finals: Vec<String> = d
        .states
        .iter()
        .filter(|s| s.is_final)
        .map(|s| format!("state != {}", s.name))
        .collect();
    let _ = writeln!(out, "{I2}while ({}) {{", finals.join(" && "));
    let _ = writeln!(out, "{I3}switch (state) {{");
    let case = format!("{I3}{I1}");
    for (si, s) in d.states.iter().enumerate().filter(|(_, s)| !s.is_final) {
        let _ = writeln!(out, "{I3}case {}:", s.name);
        for t in d.transitions.iter().filter(|t| t.source == si) {
            transition(out, cm, &d.states, t, &names, &case, "continue;");
        }
        if let Some(p) = &s.during {
            emit_inline(out, &case, p, &names);
        }
        let _ = writeln!(out, "{case}break;");
    }
    if d.states.iter().any(|s| s.is_final) {
        let _ = writeln!(out, "{I3}default:");
        let _ = writeln!(out, "{case}break;");
    }
    let _ = writeln!(out, "{I3}}}");
    let _ = writeln!(out, "{I2}}}");
    if let Some(post) = &sig.post {
        let _ = writeln!(out, "{I2}assert({});", expr(&post.code, &names));
    }
    let _ = writeln!(out, "{I1}}}");
}

fn timer_unit() -> String {
    let mut out = String::new();
    header(&mut out, "Timer");
    out.push_str("class Timer {\npublic:\n");
    let _ = writeln!(out, "{I1}long counter = 0;");
    out.push('\n');
    let _ = writeln!(out, "{I1}void StartTimer() {{ counter = 0; }}");
    let _ = writeln!(out, "{I1}void ResetTimer() {{ counter = 0; }}");
    let _ = writeln!(out, "{I1}void Tick() {{ ++counter; }}");
    let _ = writeln!(
        out,
        "{I1}double Since(double timeUnit) const {{ return counter * timeUnit; }}"
    );
    out.push_str("};\n");
    out
}

fn join<'a>(it: impl Iterator<Item = &'a str>) -> String {
    it.collect::<Vec<_>>().join(", ")
}

/// Names for the indices a program may refer to.
struct Names<'a> {
    vars: Vec<&'a str>,
    locals: Vec<&'a str>,
    clocks: Vec<&'a str>,
    ext: Vec<&'a str>,
    ext_arity: Vec<usize>,
    def: Vec<&'a str>,
    def_arity: Vec<usize>,
}

impl<'a> Names<'a> {
    fn machine(cm: &'a CompiledMachine) -> Self {
        Names {
            vars: cm.vars.iter().map(|v| v.name.as_str()).collect(),
            locals: Vec::new(),
            clocks: cm.clocks.iter().map(String::as_str).collect(),
            ext: cm.external_ops.iter().map(|o| o.name.as_str()).collect(),
            ext_arity: cm.external_ops.iter().map(|o| o.params.len()).collect(),
            def: cm.defined_ops.iter().map(|o| o.sig.name.as_str()).collect(),
            def_arity: cm.defined_ops.iter().map(|o| o.sig.params.len()).collect(),
        }
    }

    fn op(cm: &'a CompiledMachine, sig: &'a OpSignature) -> Self {
        let mut n = Names::machine(cm);
        n.locals = sig.params.iter().map(|(p, _)| p.as_str()).collect();
        n
    }
}

// Precedence levels of the emitted text, loosest first.
const P_COND: u8 = 1;
const P_OR: u8 = 2;
const P_AND: u8 = 3;
const P_CMP: u8 = 4;
const P_ADD: u8 = 5;
const P_MUL: u8 = 6;
const P_UNARY: u8 = 7;
const P_ATOM: u8 = 8;

fn wrap(e: &(String, u8), min: u8) -> String {
    if e.1 < min {
        format!("({})", e.0)
    } else {
        e.0.clone()
    }
}

/// Rebuild source text from a postfix program. Returns the statements of an
/// action program; expression programs leave their text on `stack`.
fn decompile(
    code: &[Instr],
    names: &Names<'_>,
    stack: &mut Vec<(String, u8)>,
    stmts: &mut Vec<String>,
) {
    let mut pc = 0;
    while pc < code.len() {
        match code[pc] {
            Instr::PushBool(b) => stack.push((b.to_string(), P_ATOM)),
            Instr::PushInt(i) => stack.push((i.to_string(), if i < 0 { P_UNARY } else { P_ATOM })),
            Instr::PushReal(r) => stack.push((
                real(r),
                if r.is_sign_negative() {
                    P_UNARY
                } else {
                    P_ATOM
                },
            )),
            Instr::PushVec(x, y) => {
                stack.push((format!("Vector2d({}, {})", real(x), real(y)), P_ATOM))
            }
            Instr::LoadVar(i) => stack.push((names.vars[i].to_string(), P_ATOM)),
            Instr::LoadLocal(i) => stack.push((names.locals[i].to_string(), P_ATOM)),
            Instr::Since(k) => stack.push((format!("{}.Since(timeUnit)", names.clocks[k]), P_ATOM)),
            Instr::Not => {
                let a = stack.pop().unwrap_or_default();
                stack.push((format!("!{}", wrap(&a, P_UNARY)), P_UNARY));
            }
            Instr::Neg => {
                let a = stack.pop().unwrap_or_default();
                let inner = if a.1 <= P_UNARY {
                    format!("({})", a.0)
                } else {
                    a.0
                };
                stack.push((format!("-{inner}"), P_UNARY));
            }
            Instr::ToReal => {
                let a = stack.pop().unwrap_or_default();
                stack.push((format!("double({})", a.0), P_ATOM));
            }
            Instr::Add | Instr::Sub | Instr::Mul | Instr::Div => {
                let b = stack.pop().unwrap_or_default();
                let a = stack.pop().unwrap_or_default();
                let (sym, p) = match code[pc] {
                    Instr::Add => ("+", P_ADD),
                    Instr::Sub => ("-", P_ADD),
                    Instr::Mul => ("*", P_MUL),
                    _ => ("/", P_MUL),
                };
                stack.push((format!("{} {sym} {}", wrap(&a, p), wrap(&b, p + 1)), p));
            }
            Instr::Eq | Instr::Ne | Instr::Lt | Instr::Le | Instr::Gt | Instr::Ge => {
                let b = stack.pop().unwrap_or_default();
                let a = stack.pop().unwrap_or_default();
                let sym = match code[pc] {
                    Instr::Eq => "==",
                    Instr::Ne => "!=",
                    Instr::Lt => "<",
                    Instr::Le => "<=",
                    Instr::Gt => ">",
                    _ => ">=",
                };
                stack.push((
                    format!("{} {sym} {}", wrap(&a, P_CMP + 1), wrap(&b, P_CMP + 1)),
                    P_CMP,
                ));
            }
            Instr::JumpIfFalseOrPop(n) | Instr::JumpIfTrueOrPop(n) => {
                let a = stack.pop().unwrap_or_default();
                let b = sub_expr(&code[pc + 1..pc + 1 + n], names);
                let (sym, p) = if matches!(code[pc], Instr::JumpIfFalseOrPop(_)) {
                    ("&&", P_AND)
                } else {
                    ("||", P_OR)
                };
                stack.push((format!("{} {sym} {}", wrap(&a, p), wrap(&b, p + 1)), p));
                pc += n;
            }
            Instr::JumpIfFalse(n) => {
                // Only produced by conditionals: cond, then, Jump(m), else.
                let c = stack.pop().unwrap_or_default();
                let then = sub_expr(&code[pc + 1..pc + n], names);
                let Instr::Jump(m) = code[pc + n] else {
                    stack.push(c);
                    pc += 1;
                    continue;
                };
                let other = sub_expr(&code[pc + n + 1..pc + n + 1 + m], names);
                stack.push((
                    format!(
                        "{} ? {} : {}",
                        wrap(&c, P_COND + 1),
                        then.0,
                        wrap(&other, P_COND)
                    ),
                    P_COND,
                ));
                pc += n + m;
            }
            Instr::Jump(n) => pc += n,
            Instr::StoreVar(i) => {
                let v = stack.pop().unwrap_or_default();
                stmts.push(format!("{} = {};", names.vars[i], v.0));
            }
            Instr::ResetClock(k) => stmts.push(format!("{}.ResetTimer();", names.clocks[k])),
            Instr::CallExt(k) => call(stack, stmts, names.ext[k], names.ext_arity[k]),
            Instr::CallDef(k) => call(stack, stmts, names.def[k], names.def_arity[k]),
        }
        pc += 1;
    }
}

fn call(stack: &mut Vec<(String, u8)>, stmts: &mut Vec<String>, name: &str, arity: usize) {
    let args: Vec<String> = stack
        .split_off(stack.len().saturating_sub(arity))
        .into_iter()
        .map(|a| a.0)
        .collect();
    stmts.push(format!("{name}({});", args.join(", ")));
}

fn sub_expr(code: &[Instr], names: &Names<'_>) -> (String, u8) {
    let mut stack = Vec::new();
    decompile(code, names, &mut stack, &mut Vec::new());
    stack.pop().unwrap_or_default()
}

fn expr(code: &[Instr], names: &Names<'_>) -> String {
    sub_expr(code, names).0
}

fn actions(code: &[Instr], names: &Names<'_>) -> Vec<String> {
    let mut stmts = Vec::new();
    decompile(code, names, &mut Vec::new(), &mut stmts);
    stmts
}
