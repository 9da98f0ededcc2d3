use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::scope::{Scope, VarOwner, VarRef};
use crate::diag::{codes, Diagnostic};
use crate::dsl::{Action, ActionSeq, BinOp, Expr, ExprKind, UnOp};
use crate::span::Span;
use crate::value::Type;

/// Result type of a binary operator, or `None` if the operands do not fit.
pub fn binary_type(op: BinOp, a: Type, b: Type) -> Option<Type> {
    use Type::*;
    match op {
        BinOp::And | BinOp::Or => (a == Boolean && b == Boolean).then_some(Boolean),
        BinOp::Eq | BinOp::Ne => (a == b || (a.is_numeric() && b.is_numeric())).then_some(Boolean),
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
            (a.is_numeric() && b.is_numeric()).then_some(Boolean)
        }
        BinOp::Add | BinOp::Sub => match (a, b) {
            (Int, Int) => Some(Int),
            (Vector2d, Vector2d) => Some(Vector2d),
            _ if a.is_numeric() && b.is_numeric() => Some(Real),
            _ => None,
        },
        BinOp::Mul => match (a, b) {
            (Int, Int) => Some(Int),
            (Vector2d, n) | (n, Vector2d) if n.is_numeric() => Some(Vector2d),
            _ if a.is_numeric() && b.is_numeric() => Some(Real),
            _ => None,
        },
        BinOp::Div => match (a, b) {
            (Int, Int) => Some(Int),
            _ if a.is_numeric() && b.is_numeric() => Some(Real),
            _ => None,
        },
    }
}

pub fn unary_type(op: UnOp, a: Type) -> Option<Type> {
    match op {
        UnOp::Not => (a == Type::Boolean).then_some(Type::Boolean),
        UnOp::Neg => (a != Type::Boolean).then_some(a),
    }
}

/// Common type of two conditional branches.
pub fn join_type(a: Type, b: Type) -> Option<Type> {
    if a == b {
        Some(a)
    } else if a.is_numeric() && b.is_numeric() {
        Some(Type::Real)
    } else {
        None
    }
}

/// Per-expression-context bookkeeping.
#[derive(Default)]
pub struct ExprCx {
    /// Pre/postconditions: names outside the operation's scope are looked up
    /// globally and recorded instead of failing resolution.
    pub contract: bool,
    pub out_of_scope: Vec<(Span, String)>,
    /// Interface variables an operation touches (by name).
    pub iface_refs: BTreeSet<String>,
}

pub struct Checker {
    pub diags: Vec<Diagnostic>,
    /// (interface index, event name) used as a trigger somewhere.
    pub used_events: BTreeSet<(usize, String)>,
    /// (interface index, op name) called somewhere.
    pub called_ops: BTreeSet<(usize, String)>,
    /// Every variable declared anywhere, for contract fallback lookup.
    pub globals: Vec<(String, Type)>,
}

impl Checker {
    pub fn error(&mut self, code: &'static str, span: Span, msg: String) {
        self.diags.push(Diagnostic::error(code, span, msg));
    }

    pub fn expr(&mut self, e: &mut Expr, scope: &Scope, cx: &mut ExprCx) -> Option<Type> {
        let ty = match &mut e.kind {
            ExprKind::Lit(lit) => Some(lit.ty()),
            ExprKind::Var(name) => match scope.lookup_var(name) {
                Some(r) => {
                    if let VarRef::Var(slot) = r {
                        if matches!(scope.vars[slot].owner, VarOwner::Interface(_)) {
                            cx.iface_refs.insert(name.clone());
                        }
                    }
                    Some(scope.var_type(r))
                }
                None if cx.contract => match self.globals.iter().find(|(n, _)| n == name) {
                    Some(&(_, t)) => {
                        cx.out_of_scope.push((e.span, name.clone()));
                        Some(t)
                    }
                    None => {
                        self.error(
                            codes::UNRESOLVED,
                            e.span,
                            format!("unresolved name `{name}`"),
                        );
                        None
                    }
                },
                None => {
                    self.error(
                        codes::UNRESOLVED,
                        e.span,
                        format!("unresolved name `{name}`"),
                    );
                    None
                }
            },
            ExprKind::Since(clock) => {
                if scope.clock(&clock.name).is_none() {
                    let msg = format!("`since` on undeclared clock `{}`", clock.name);
                    self.error(codes::UNDECLARED_CLOCK, clock.span, msg);
                }
                Some(Type::Real)
            }
            ExprKind::Unary(op, operand) => {
                let op = *op;
                let t = self.expr(operand, scope, cx)?;
                let r = unary_type(op, t);
                if r.is_none() {
                    let what = if op == UnOp::Not { "`not`" } else { "negation" };
                    self.error(
                        codes::TYPE_MISMATCH,
                        e.span,
                        format!("{what} cannot apply to {t}"),
                    );
                }
                r
            }
            ExprKind::Binary(op, a, b) => {
                let op = *op;
                let ta = self.expr(a, scope, cx);
                let tb = self.expr(b, scope, cx);
                let (ta, tb) = (ta?, tb?);
                let r = binary_type(op, ta, tb);
                if r.is_none() {
                    let msg = format!("operator `{}` cannot apply to {ta} and {tb}", op.symbol());
                    self.error(codes::TYPE_MISMATCH, e.span, msg);
                }
                r
            }
            ExprKind::Cond(c, a, b) => {
                let tc = self.expr(c, scope, cx);
                let ta = self.expr(a, scope, cx);
                let tb = self.expr(b, scope, cx);
                if let Some(tc) = tc {
                    if tc != Type::Boolean {
                        self.error(
                            codes::TYPE_MISMATCH,
                            c.span,
                            format!("condition must be boolean, found {tc}"),
                        );
                    }
                }
                let (ta, tb) = (ta?, tb?);
                let r = join_type(ta, tb);
                if r.is_none() {
                    self.error(
                        codes::TYPE_MISMATCH,
                        e.span,
                        format!("branches have types {ta} and {tb}"),
                    );
                }
                r
            }
        };
        e.ty = ty;
        ty
    }

    /// Type-check a condition that must be boolean (guards, contracts).
    pub fn condition(&mut self, e: &mut Expr, scope: &Scope, cx: &mut ExprCx, what: &str) {
        if let Some(t) = self.expr(e, scope, cx) {
            if t != Type::Boolean {
                let msg = format!("{what} must be boolean, found {t}");
                self.error(codes::GUARD_NOT_BOOL, e.span, msg);
            }
        }
    }

    pub fn actions(&mut self, seq: &mut ActionSeq, scope: &Scope, cx: &mut ExprCx) {
        for action in &mut seq.actions {
            self.action(action, scope, cx);
        }
    }

    fn action(&mut self, action: &mut Action, scope: &Scope, cx: &mut ExprCx) {
        match action {
            Action::ResetClock { clock, .. } => {
                if scope.clock(&clock.name).is_none() {
                    let msg = format!("reset of undeclared clock `{}`", clock.name);
                    self.error(codes::UNDECLARED_CLOCK, clock.span, msg);
                }
            }
            Action::Assign { target, value, .. } => {
                let vt = self.expr(value, scope, cx);
                let Some(r) = scope.lookup_var(&target.name) else {
                    let msg = format!("assignment to undeclared variable `{}`", target.name);
                    self.error(codes::BAD_ASSIGNMENT, target.span, msg);
                    return;
                };
                let VarRef::Var(slot) = r else {
                    let msg = format!("cannot assign to parameter `{}`", target.name);
                    self.error(codes::BAD_ASSIGNMENT, target.span, msg);
                    return;
                };
                if matches!(scope.vars[slot].owner, VarOwner::Interface(_)) {
                    cx.iface_refs.insert(target.name.clone());
                }
                let tt = scope.vars[slot].ty;
                if let Some(vt) = vt {
                    if !tt.accepts(vt) {
                        let msg = format!("cannot assign {vt} to `{}` of type {tt}", target.name);
                        self.error(codes::TYPE_MISMATCH, value.span, msg);
                    }
                }
            }
            Action::Call { op, args, span } => {
                let arg_types: Vec<Option<Type>> =
                    args.iter_mut().map(|a| self.expr(a, scope, cx)).collect();
                let Some(k) = scope.op(&op.name) else {
                    self.error(
                        codes::UNRESOLVED,
                        op.span,
                        format!("unresolved operation `{}`", op.name),
                    );
                    return;
                };
                let sym = &scope.ops[k];
                self.called_ops.insert((sym.iface, sym.name.clone()));
                if sym.params.len() != args.len() {
                    let msg = format!(
                        "`{}` expects {} argument(s), found {}",
                        op.name,
                        sym.params.len(),
                        args.len()
                    );
                    self.error(codes::CALL_MISMATCH, *span, msg);
                    return;
                }
                let mut mismatches = Vec::new();
                for (i, ((pname, pty), at)) in sym.params.iter().zip(&arg_types).enumerate() {
                    if let Some(at) = at {
                        if !pty.accepts(*at) {
                            let msg = format!(
                                "argument `{pname}` of `{}` expects {pty}, found {at}",
                                op.name
                            );
                            mismatches.push((args[i].span, msg));
                        }
                    }
                }
                for (s, m) in mismatches {
                    self.error(codes::CALL_MISMATCH, s, m);
                }
            }
        }
    }
}
