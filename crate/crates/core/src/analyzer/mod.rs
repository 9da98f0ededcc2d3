//! Name resolution, type checking and well-formedness checks.
//!
//! [`analyze`] reports every problem in one pass; a [`ResolvedModel`] is
//! produced only when there are no errors. Operation bodies and contracts
//! get an extra pass in [`check_operation_contracts`].

mod scope;
mod typeck;

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

pub use scope::{
    initial_value, literal_value, EventSymbol, OpSymbol, Scope, VarOwner, VarRef, VarSymbol,
};
pub use typeck::{binary_type, join_type, unary_type};

use crate::diag::{self, codes, Diagnostic};
use crate::dsl::{Ident, ModelUnit, StateDecl, TransitionDecl};
use crate::span::Span;
use typeck::{Checker, ExprCx};

#[derive(Clone, Debug, PartialEq)]
pub struct MachineInfo {
    pub scope: Scope,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperationInfo {
    pub scope: Scope,
    /// Interfaces that declare a signature for this operation.
    pub owners: Vec<usize>,
    /// Names in pre/postconditions that resolve only outside the operation's scope.
    pub out_of_scope: Vec<(Span, String)>,
    /// Interface variables the operation reads or writes.
    pub iface_refs: BTreeSet<String>,
}

/// A model that passed analysis. Every expression in `unit` carries its type.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedModel {
    pub unit: ModelUnit,
    /// Parallel to `unit.machines`.
    pub machines: Vec<MachineInfo>,
    /// Parallel to `unit.operations`.
    pub operations: Vec<OperationInfo>,
    /// Warnings collected during analysis.
    pub warnings: Vec<Diagnostic>,
}

impl ResolvedModel {
    pub fn machine_index(&self, name: &str) -> Option<usize> {
        self.unit.machines.iter().position(|m| m.name.name == name)
    }
}

/// Run analysis and the operation-contract pass together.
///
/// On success the returned model's `warnings` hold every warning; on
/// failure all diagnostics (warnings included) are returned, sorted.
pub fn check(unit: &ModelUnit) -> Result<ResolvedModel, Vec<Diagnostic>> {
    let mut model = analyze(unit)?;
    let extra = check_operation_contracts(&model);
    if diag::has_errors(&extra) {
        let mut all = model.warnings;
        all.extend(extra);
        diag::sort(&mut all);
        return Err(all);
    }
    model.warnings.extend(extra);
    diag::sort(&mut model.warnings);
    Ok(model)
}

pub fn analyze(unit: &ModelUnit) -> Result<ResolvedModel, Vec<Diagnostic>> {
    let mut unit = unit.clone();
    let mut ck = Checker {
        diags: Vec::new(),
        used_events: BTreeSet::new(),
        called_ops: BTreeSet::new(),
        globals: Vec::new(),
    };

    check_unique(
        &mut ck,
        "interface",
        unit.interfaces.iter().map(|i| &i.name),
    );
    check_unique(&mut ck, "machine", unit.machines.iter().map(|m| &m.name));
    check_unique(
        &mut ck,
        "operation",
        unit.operations.iter().map(|o| &o.name),
    );
    check_unique(&mut ck, "module", unit.modules.iter().map(|m| &m.name));

    for iface in &unit.interfaces {
        let names = iface
            .variables
            .iter()
            .map(|v| &v.name)
            .chain(iface.events.iter())
            .chain(iface.operations.iter().map(|o| &o.name));
        check_unique(&mut ck, "interface member", names);
        for op in &iface.operations {
            check_unique(&mut ck, "parameter", op.params.iter().map(|p| &p.name));
        }
        for v in &iface.variables {
            check_initializer(&mut ck, v);
            ck.globals.push((v.name.name.clone(), v.ty));
        }
    }
    for m in &unit.machines {
        for v in &m.variables {
            ck.globals.push((v.name.name.clone(), v.ty));
        }
    }

    // Signature consistency between `op` declarations and `operation` definitions.
    for def in &unit.operations {
        for iface in &unit.interfaces {
            if let Some(sig) = iface
                .operations
                .iter()
                .find(|o| o.name.name == def.name.name)
            {
                let same = sig.params.len() == def.params.len()
                    && sig
                        .params
                        .iter()
                        .zip(&def.params)
                        .all(|(a, b)| a.ty == b.ty);
                if !same {
                    let msg = format!(
                        "definition of `{}` does not match its signature in interface `{}`",
                        def.name.name, iface.name.name
                    );
                    ck.error(codes::CALL_MISMATCH, def.name.span, msg);
                }
            }
        }
    }

    let mut warnings = Vec::new();

    let machines: Vec<MachineInfo> = (0..unit.machines.len())
        .map(|mi| {
            let scope = machine_scope(&mut ck, &unit, mi);
            let m = &mut unit.machines[mi];
            check_unique(&mut ck, "state", m.states.iter().map(|s| &s.name));
            let mut cx = ExprCx::default();
            check_graph(&mut ck, &scope, &mut cx, &mut m.states, &mut m.transitions);
            unreachable_states(&mut warnings, &m.name.name, &m.states, &m.transitions);
            MachineInfo { scope }
        })
        .collect();

    let operations: Vec<OperationInfo> = (0..unit.operations.len())
        .map(|oi| {
            let (scope, owners) = operation_scope(&unit, oi);
            let op = &mut unit.operations[oi];
            check_unique(&mut ck, "parameter", op.params.iter().map(|p| &p.name));
            let mut contract_cx = ExprCx {
                contract: true,
                ..ExprCx::default()
            };
            if let Some(pre) = &mut op.pre {
                ck.condition(pre, &scope, &mut contract_cx, "precondition");
            }
            if let Some(post) = &mut op.post {
                ck.condition(post, &scope, &mut contract_cx, "postcondition");
            }
            let mut body_cx = ExprCx::default();
            if let Some(body) = &mut op.body {
                check_unique(&mut ck, "state", body.states.iter().map(|s| &s.name));
                check_graph(
                    &mut ck,
                    &scope,
                    &mut body_cx,
                    &mut body.states,
                    &mut body.transitions,
                );
                unreachable_states(
                    &mut warnings,
                    &op.name.name,
                    &body.states,
                    &body.transitions,
                );
            }
            if owners.is_empty() {
                warnings.push(Diagnostic::warning(
                    codes::UNCALLED_OPERATION,
                    op.name.span,
                    format!(
                        "operation `{}` is not declared by any interface",
                        op.name.name
                    ),
                ));
            }
            let mut iface_refs = contract_cx.iface_refs;
            iface_refs.extend(body_cx.iface_refs);
            OperationInfo {
                scope,
                owners,
                out_of_scope: contract_cx.out_of_scope,
                iface_refs,
            }
        })
        .collect();

    // A machine calling a defined operation must provide every interface
    // variable the operation touches.
    for (mi, info) in machines.iter().enumerate() {
        for sym in &info.scope.ops {
            let Some(d) = sym.def else { continue };
            for name in &operations[d].iface_refs {
                let found = info
                    .scope
                    .vars
                    .iter()
                    .any(|v| matches!(v.owner, VarOwner::Interface(_)) && &v.name == name);
                if !found {
                    let m = &unit.machines[mi];
                    let msg = format!(
                        "operation `{}` uses variable `{name}`, which machine `{}` does not provide",
                        sym.name, m.name.name
                    );
                    ck.error(codes::UNRESOLVED, m.name.span, msg);
                }
            }
        }
    }

    for module in &unit.modules {
        for c in &module.controllers {
            if unit.machine(&c.name).is_none() {
                let msg = format!(
                    "module `{}` names unknown machine `{}`",
                    module.name.name, c.name
                );
                ck.error(codes::UNRESOLVED, c.span, msg);
            }
        }
    }

    for (ii, iface) in unit.interfaces.iter().enumerate() {
        for e in &iface.events {
            if !ck.used_events.contains(&(ii, e.name.clone())) {
                warnings.push(Diagnostic::warning(
                    codes::UNUSED_EVENT,
                    e.span,
                    format!("event `{}` is never used as a trigger", e.name),
                ));
            }
        }
        for op in &iface.operations {
            if !ck.called_ops.contains(&(ii, op.name.name.clone())) {
                warnings.push(Diagnostic::warning(
                    codes::UNCALLED_OPERATION,
                    op.span,
                    format!("operation `{}` is declared but never called", op.name.name),
                ));
            }
        }
    }

    let mut diags = ck.diags;
    if diag::has_errors(&diags) {
        diags.extend(warnings);
        diag::sort(&mut diags);
        return Err(diags);
    }
    diag::sort(&mut warnings);
    Ok(ResolvedModel {
        unit,
        machines,
        operations,
        warnings,
    })
}

/// Graph checks on operation bodies and scope checks on their contracts.
pub fn check_operation_contracts(model: &ResolvedModel) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for (op, info) in model.unit.operations.iter().zip(&model.operations) {
        if let Some(body) = &op.body {
            let index: BTreeMap<&str, usize> = body
                .states
                .iter()
                .enumerate()
                .map(|(i, s)| (s.name.name.as_str(), i))
                .collect();
            let edges = edges(&index, &body.transitions, body.states.len());
            let initial = body.states.iter().position(|s| s.is_initial).unwrap_or(0);
            let finals: Vec<usize> = (0..body.states.len())
                .filter(|&i| body.states[i].is_final)
                .collect();
            let reachable = bfs(&edges, &[initial]);
            // States from which some final state is reachable: search the reversed graph.
            let mut reverse = vec![Vec::new(); body.states.len()];
            for (s, outs) in edges.iter().enumerate() {
                for &t in outs {
                    reverse[t].push(s);
                }
            }
            let can_finish = bfs(&reverse, &finals);
            for (i, s) in body.states.iter().enumerate() {
                if reachable[i] && !can_finish[i] {
                    diags.push(Diagnostic::error(
                        codes::BODY_CANNOT_FINISH,
                        s.name.span,
                        format!(
                            "operation `{}`: no final state is reachable from state `{}`",
                            op.name.name, s.name.name
                        ),
                    ));
                }
            }
        }
        for (span, name) in &info.out_of_scope {
            diags.push(Diagnostic::error(
                codes::CONTRACT_SCOPE,
                *span,
                format!(
                    "contract of `{}` refers to `{name}`, which is neither a parameter nor a variable of its interface",
                    op.name.name
                ),
            ));
        }
    }
    diag::sort(&mut diags);
    diags
}

fn check_unique<'a>(ck: &mut Checker, what: &str, names: impl Iterator<Item = &'a Ident>) {
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for id in names {
        if !seen.insert(&id.name) {
            ck.error(
                codes::DUPLICATE,
                id.span,
                format!("duplicate {what} `{}`", id.name),
            );
        }
    }
}

fn check_initializer(ck: &mut Checker, v: &crate::dsl::VarDecl) {
    if let Some(lit) = &v.init {
        if !v.ty.accepts(lit.ty()) {
            let msg = format!(
                "initializer of `{}` has type {}, expected {}",
                v.name.name,
                lit.ty(),
                v.ty
            );
            ck.error(codes::TYPE_MISMATCH, v.span, msg);
        }
    }
}

fn add_interface(ck: &mut Checker, unit: &ModelUnit, ii: usize, scope: &mut Scope, dup_span: Span) {
    let iface = &unit.interfaces[ii];
    for v in &iface.variables {
        if let Some(prev) = scope.vars.iter().find(|p| p.name == v.name.name) {
            if prev.owner != VarOwner::Interface(ii) {
                let msg = format!(
                    "variable `{}` is declared by more than one required interface",
                    v.name.name
                );
                ck.error(codes::DUPLICATE, dup_span, msg);
            }
            continue;
        }
        scope.vars.push(VarSymbol {
            name: v.name.name.clone(),
            ty: v.ty,
            owner: VarOwner::Interface(ii),
            init: initial_value(v.ty, v.init.as_ref()),
        });
    }
    for e in &iface.events {
        if let Some(k) = scope.event(&e.name) {
            // Repeats inside one interface are already reported there.
            if scope.events[k].iface == ii {
                continue;
            }
            let msg = format!(
                "event `{}` is declared by more than one required interface",
                e.name
            );
            ck.error(codes::DUPLICATE, dup_span, msg);
            continue;
        }
        scope.events.push(EventSymbol {
            name: e.name.clone(),
            iface: ii,
        });
    }
    for op in &iface.operations {
        if let Some(k) = scope.op(&op.name.name) {
            if scope.ops[k].iface == ii {
                continue;
            }
            let msg = format!(
                "operation `{}` is declared by more than one required interface",
                op.name.name
            );
            ck.error(codes::DUPLICATE, dup_span, msg);
            continue;
        }
        scope.ops.push(OpSymbol {
            name: op.name.name.clone(),
            params: op
                .params
                .iter()
                .map(|p| (p.name.name.clone(), p.ty))
                .collect(),
            iface: ii,
            def: unit
                .operations
                .iter()
                .position(|d| d.name.name == op.name.name),
        });
    }
}

fn machine_scope(ck: &mut Checker, unit: &ModelUnit, mi: usize) -> Scope {
    let m = &unit.machines[mi];
    let mut scope = Scope::default();
    let mut seen = BTreeSet::new();
    for req in &m.requires {
        let Some(ii) = unit.interfaces.iter().position(|i| i.name.name == req.name) else {
            let msg = format!(
                "machine `{}` requires unknown interface `{}`",
                m.name.name, req.name
            );
            ck.error(codes::UNKNOWN_INTERFACE, req.span, msg);
            continue;
        };
        if !seen.insert(ii) {
            ck.error(
                codes::DUPLICATE,
                req.span,
                format!("interface `{}` required twice", req.name),
            );
            continue;
        }
        add_interface(ck, unit, ii, &mut scope, req.span);
    }
    let mut locals: BTreeSet<&str> = BTreeSet::new();
    for v in &m.variables {
        check_initializer(ck, v);
        if !locals.insert(&v.name.name) {
            ck.error(
                codes::DUPLICATE,
                v.name.span,
                format!("duplicate variable `{}`", v.name.name),
            );
            continue;
        }
        scope.vars.push(VarSymbol {
            name: v.name.name.clone(),
            ty: v.ty,
            owner: VarOwner::Machine,
            init: initial_value(v.ty, v.init.as_ref()),
        });
    }
    check_unique(ck, "clock", m.clocks.iter());
    let mut clocks: Vec<String> = Vec::new();
    for c in &m.clocks {
        if !clocks.contains(&c.name) {
            clocks.push(c.name.clone());
        }
    }
    scope.clocks = clocks;
    scope
}

fn operation_scope(unit: &ModelUnit, oi: usize) -> (Scope, Vec<usize>) {
    let op = &unit.operations[oi];
    let owners: Vec<usize> = unit
        .interfaces
        .iter()
        .enumerate()
        .filter(|(_, i)| i.operations.iter().any(|o| o.name.name == op.name.name))
        .map(|(ii, _)| ii)
        .collect();
    let mut scope = Scope::default();
    // Owners are merged silently; conflicts would surface in the machines
    // that require them.
    let mut sink = Checker {
        diags: Vec::new(),
        used_events: BTreeSet::new(),
        called_ops: BTreeSet::new(),
        globals: Vec::new(),
    };
    for &ii in &owners {
        add_interface(&mut sink, unit, ii, &mut scope, op.name.span);
    }
    scope.params = op
        .params
        .iter()
        .map(|p| (p.name.name.clone(), p.ty))
        .collect();
    (scope, owners)
}

fn check_graph(
    ck: &mut Checker,
    scope: &Scope,
    cx: &mut ExprCx,
    states: &mut [StateDecl],
    transitions: &mut [TransitionDecl],
) {
    for s in states.iter_mut() {
        for seq in [&mut s.entry, &mut s.during, &mut s.exit]
            .into_iter()
            .flatten()
        {
            ck.actions(seq, scope, cx);
        }
    }
    for t in transitions.iter_mut() {
        for end in [&t.source, &t.target] {
            if !states.iter().any(|s| s.name.name == end.name) {
                ck.error(
                    codes::UNKNOWN_STATE_OR_EVENT,
                    end.span,
                    format!("transition references unknown state `{}`", end.name),
                );
            }
        }
        if let Some(tr) = &t.trigger {
            match scope.event(&tr.name) {
                Some(k) => {
                    ck.used_events
                        .insert((scope.events[k].iface, tr.name.clone()));
                }
                None => ck.error(
                    codes::UNKNOWN_STATE_OR_EVENT,
                    tr.span,
                    format!("transition references unknown event `{}`", tr.name),
                ),
            }
        }
        if let Some(g) = &mut t.guard {
            ck.condition(g, scope, cx, "guard");
        }
        if let Some(a) = &mut t.action {
            ck.actions(a, scope, cx);
        }
    }
}

fn edges(
    index: &BTreeMap<&str, usize>,
    transitions: &[TransitionDecl],
    n: usize,
) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); n];
    for t in transitions {
        if let (Some(&s), Some(&d)) = (
            index.get(t.source.name.as_str()),
            index.get(t.target.name.as_str()),
        ) {
            out[s].push(d);
        }
    }
    out
}

fn bfs(edges: &[Vec<usize>], roots: &[usize]) -> Vec<bool> {
    let mut seen = vec![false; edges.len()];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for &r in roots {
        if r < seen.len() && !seen[r] {
            seen[r] = true;
            queue.push_back(r);
        }
    }
    while let Some(s) = queue.pop_front() {
        for &t in &edges[s] {
            if !seen[t] {
                seen[t] = true;
                queue.push_back(t);
            }
        }
    }
    seen
}

fn unreachable_states(
    warnings: &mut Vec<Diagnostic>,
    owner: &str,
    states: &[StateDecl],
    transitions: &[TransitionDecl],
) {
    let index: BTreeMap<&str, usize> = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.name.name.as_str(), i))
        .collect();
    let Some(initial) = states.iter().position(|s| s.is_initial) else {
        return;
    };
    let reach = bfs(&edges(&index, transitions, states.len()), &[initial]);
    for (i, s) in states.iter().enumerate() {
        if !reach[i] {
            warnings.push(Diagnostic::warning(
                codes::UNREACHABLE_STATE,
                s.name.span,
                format!(
                    "state `{}` of `{owner}` is unreachable from the initial state",
                    s.name.name
                ),
            ));
        }
    }
}
