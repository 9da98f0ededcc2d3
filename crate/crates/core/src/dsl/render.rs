use alloc::format;
use alloc::string::String;
use core::fmt::Write;

use super::ast::*;

/// Canonical source text for `unit`. Re-parsing the output yields a unit
/// that is structurally equal to the input (spans aside).
pub fn render(unit: &ModelUnit) -> String {
    let mut out = String::new();
    for (i, decl) in unit.order.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        match *decl {
            DeclRef::Interface(k) => render_interface(&mut out, &unit.interfaces[k]),
            DeclRef::Machine(k) => render_machine(&mut out, &unit.machines[k]),
            DeclRef::Operation(k) => render_operation(&mut out, &unit.operations[k]),
            DeclRef::Module(k) => render_module(&mut out, &unit.modules[k]),
        }
    }
    out
}

const INDENT: &str = "    ";

fn render_interface(out: &mut String, decl: &InterfaceDecl) {
    let _ = writeln!(out, "interface {} {{", decl.name.name);
    for v in &decl.variables {
        render_var(out, v);
    }
    for e in &decl.events {
        let _ = writeln!(out, "{INDENT}event {}", e.name);
    }
    for op in &decl.operations {
        let _ = writeln!(out, "{INDENT}op {}({})", op.name.name, params(&op.params));
    }
    out.push_str("}\n");
}

fn render_var(out: &mut String, v: &VarDecl) {
    let _ = write!(out, "{INDENT}var {}: {}", v.name.name, v.ty);
    if let Some(lit) = &v.init {
        let _ = write!(out, " = {}", literal(lit));
    }
    out.push('\n');
}

fn params(ps: &[Param]) -> String {
    let mut s = String::new();
    for (i, p) in ps.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        let _ = write!(s, "{}: {}", p.name.name, p.ty);
    }
    s
}

fn render_machine(out: &mut String, m: &MachineDecl) {
    let _ = write!(out, "machine {}", m.name.name);
    if !m.requires.is_empty() {
        out.push_str(" requires ");
        for (i, r) in m.requires.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            out.push_str(&r.name);
        }
    }
    out.push_str(" {\n");
    for c in &m.clocks {
        let _ = writeln!(out, "{INDENT}clock {}", c.name);
    }
    for v in &m.variables {
        render_var(out, v);
    }
    render_graph(out, &m.states, &m.transitions);
    out.push_str("}\n");
}

fn render_graph(out: &mut String, states: &[StateDecl], transitions: &[TransitionDecl]) {
    for s in states {
        out.push_str(INDENT);
        if s.is_initial {
            out.push_str("initial ");
        }
        if s.is_final {
            out.push_str("final ");
        }
        let _ = write!(out, "state {}", s.name.name);
        if s.entry.is_none() && s.during.is_none() && s.exit.is_none() {
            out.push('\n');
            continue;
        }
        out.push_str(" {\n");
        for (kw, seq) in [
            ("entry", &s.entry),
            ("during", &s.during),
            ("exit", &s.exit),
        ] {
            if let Some(seq) = seq {
                let _ = writeln!(out, "{INDENT}{INDENT}{kw} {}", actions(seq));
            }
        }
        let _ = writeln!(out, "{INDENT}}}");
    }
    for t in transitions {
        let _ = write!(
            out,
            "{INDENT}transition {} -> {}",
            t.source.name, t.target.name
        );
        if let Some(tr) = &t.trigger {
            let _ = write!(out, " on {}", tr.name);
        }
        if let Some(g) = &t.guard {
            let _ = write!(out, " [{}]", expr(g));
        }
        if let Some(a) = &t.action {
            let _ = write!(out, " / {}", actions(a));
        }
        out.push('\n');
    }
}

fn render_operation(out: &mut String, op: &OperationDef) {
    let _ = write!(out, "operation {}({})", op.name.name, params(&op.params));
    if let Some(pre) = &op.pre {
        let _ = write!(out, "\n{INDENT}pre {}", expr(pre));
    }
    if let Some(post) = &op.post {
        let _ = write!(out, "\n{INDENT}post {}", expr(post));
    }
    match &op.body {
        Some(body) => {
            out.push_str("\n{\n");
            render_graph(out, &body.states, &body.transitions);
            out.push_str("}\n");
        }
        None => out.push('\n'),
    }
}

fn render_module(out: &mut String, m: &ModuleDecl) {
    let _ = writeln!(out, "module {} {{", m.name.name);
    let _ = writeln!(out, "{INDENT}platform {};", m.platform.name);
    for c in &m.controllers {
        let _ = writeln!(out, "{INDENT}controller {};", c.name);
    }
    out.push_str("}\n");
}

pub fn actions(seq: &ActionSeq) -> String {
    let mut s = String::new();
    for (i, a) in seq.actions.iter().enumerate() {
        if i > 0 {
            s.push_str("; ");
        }
        match a {
            Action::ResetClock { clock, .. } => {
                let _ = write!(s, "#{}", clock.name);
            }
            Action::Assign { target, value, .. } => {
                let _ = write!(s, "{} := {}", target.name, expr(value));
            }
            Action::Call { op, args, .. } => {
                let _ = write!(s, "{}(", op.name);
                for (j, e) in args.iter().enumerate() {
                    if j > 0 {
                        s.push_str(", ");
                    }
                    s.push_str(&expr(e));
                }
                s.push(')');
            }
        }
    }
    s
}

pub fn literal(lit: &Literal) -> String {
    match *lit {
        Literal::Bool(b) => format!("{b}"),
        Literal::Int(i) => format!("{i}"),
        Literal::Real(r) => real(r),
        Literal::Vec2(x, y) => format!("vec2({}, {})", real(x), real(y)),
    }
}

/// Shortest round-trip decimal that still lexes as a real.
pub fn real(r: f64) -> String {
    // `{:?}` always carries a `.` or an exponent for finite values.
    format!("{r:?}")
}

const TERNARY: u8 = 1;
const UNARY: u8 = 7;
const ATOM: u8 = 8;

fn prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Cond(..) => TERNARY,
        ExprKind::Binary(op, ..) => op.precedence(),
        ExprKind::Unary(..) => UNARY,
        ExprKind::Lit(Literal::Int(i)) if *i < 0 => UNARY,
        ExprKind::Lit(Literal::Real(r)) if r.is_sign_negative() => UNARY,
        _ => ATOM,
    }
}

/// Render an expression with the minimum parentheses that preserve its tree.
pub fn expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e);
    s
}

fn write_child(s: &mut String, e: &Expr, min_prec: u8) {
    if prec(e) < min_prec {
        s.push('(');
        write_expr(s, e);
        s.push(')');
    } else {
        write_expr(s, e);
    }
}

fn write_expr(s: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Lit(lit) => s.push_str(&literal(lit)),
        ExprKind::Var(name) => s.push_str(name),
        ExprKind::Since(c) => {
            let _ = write!(s, "since({})", c.name);
        }
        ExprKind::Unary(op, operand) => {
            s.push_str(match op {
                UnOp::Not => "not ",
                UnOp::Neg => "-",
            });
            // `- -x` would lex fine, but `--` reads badly; parenthesize nested negation.
            let nested_neg = *op == UnOp::Neg && prec(operand) == UNARY;
            if nested_neg {
                s.push('(');
                write_expr(s, operand);
                s.push(')');
            } else {
                write_child(s, operand, UNARY);
            }
        }
        ExprKind::Binary(op, a, b) => {
            let p = op.precedence();
            // Left-associative levels; comparisons do not chain at all.
            let left_min = if op.is_comparison() { p + 1 } else { p };
            write_child(s, a, left_min);
            let _ = write!(s, " {} ", op.symbol());
            write_child(s, b, p + 1);
        }
        ExprKind::Cond(c, a, b) => {
            write_child(s, c, TERNARY + 1);
            s.push_str(" ? ");
            write_expr(s, a);
            s.push_str(" : ");
            write_expr(s, b);
        }
    }
}
