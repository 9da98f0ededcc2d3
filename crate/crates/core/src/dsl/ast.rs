use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::span::Span;
use crate::value::Type;

#[derive(Clone, Debug, PartialEq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

impl Ident {
    pub fn new(name: impl Into<String>, span: Span) -> Self {
        Ident {
            name: name.into(),
            span,
        }
    }

    pub fn as_str(&self) -> &str {
        &self.name
    }
}

/// A parsed source file. Declarations keep their textual order; `order`
/// records how the four kinds interleave.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelUnit {
    pub interfaces: Vec<InterfaceDecl>,
    pub machines: Vec<MachineDecl>,
    pub operations: Vec<OperationDef>,
    pub modules: Vec<ModuleDecl>,
    pub order: Vec<DeclRef>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeclRef {
    Interface(usize),
    Machine(usize),
    Operation(usize),
    Module(usize),
}

impl ModelUnit {
    pub fn interface(&self, name: &str) -> Option<&InterfaceDecl> {
        self.interfaces.iter().find(|i| i.name.name == name)
    }

    pub fn machine(&self, name: &str) -> Option<&MachineDecl> {
        self.machines.iter().find(|m| m.name.name == name)
    }

    pub fn operation(&self, name: &str) -> Option<&OperationDef> {
        self.operations.iter().find(|o| o.name.name == name)
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Copy with every span reset and every type annotation cleared, for
    /// structural comparison.
    pub fn normalized(&self) -> ModelUnit {
        let mut unit = self.clone();
        unit.strip();
        unit
    }

    fn strip(&mut self) {
        for i in &mut self.interfaces {
            i.span = Span::default();
            i.name.span = Span::default();
            for v in &mut i.variables {
                v.strip();
            }
            for e in &mut i.events {
                e.span = Span::default();
            }
            for op in &mut i.operations {
                op.span = Span::default();
                op.name.span = Span::default();
                for p in &mut op.params {
                    p.strip();
                }
            }
        }
        for m in &mut self.machines {
            m.span = Span::default();
            m.name.span = Span::default();
            for r in &mut m.requires {
                r.span = Span::default();
            }
            for c in &mut m.clocks {
                c.span = Span::default();
            }
            for v in &mut m.variables {
                v.strip();
            }
            strip_graph(&mut m.states, &mut m.transitions);
        }
        for o in &mut self.operations {
            o.span = Span::default();
            o.name.span = Span::default();
            for p in &mut o.params {
                p.strip();
            }
            if let Some(e) = &mut o.pre {
                e.strip();
            }
            if let Some(e) = &mut o.post {
                e.strip();
            }
            if let Some(body) = &mut o.body {
                body.span = Span::default();
                strip_graph(&mut body.states, &mut body.transitions);
            }
        }
        for m in &mut self.modules {
            m.span = Span::default();
            m.name.span = Span::default();
            m.platform.span = Span::default();
            for c in &mut m.controllers {
                c.span = Span::default();
            }
        }
    }
}

fn strip_graph(states: &mut [StateDecl], transitions: &mut [TransitionDecl]) {
    for s in states {
        s.span = Span::default();
        s.name.span = Span::default();
        for seq in [&mut s.entry, &mut s.during, &mut s.exit]
            .into_iter()
            .flatten()
        {
            seq.strip();
        }
    }
    for t in transitions {
        t.span = Span::default();
        t.source.span = Span::default();
        t.target.span = Span::default();
        if let Some(tr) = &mut t.trigger {
            tr.span = Span::default();
        }
        if let Some(g) = &mut t.guard {
            g.strip();
        }
        if let Some(a) = &mut t.action {
            a.strip();
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VarDecl {
    pub name: Ident,
    pub ty: Type,
    pub init: Option<Literal>,
    pub span: Span,
}

impl VarDecl {
    fn strip(&mut self) {
        self.span = Span::default();
        self.name.span = Span::default();
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: Ident,
    pub ty: Type,
    pub span: Span,
}

impl Param {
    fn strip(&mut self) {
        self.span = Span::default();
        self.name.span = Span::default();
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OpSig {
    pub name: Ident,
    pub params: Vec<Param>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceDecl {
    pub name: Ident,
    pub variables: Vec<VarDecl>,
    pub events: Vec<Ident>,
    pub operations: Vec<OpSig>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MachineDecl {
    pub name: Ident,
    pub requires: Vec<Ident>,
    pub clocks: Vec<Ident>,
    /// Machine-local variables.
    pub variables: Vec<VarDecl>,
    pub states: Vec<StateDecl>,
    pub transitions: Vec<TransitionDecl>,
    pub span: Span,
}

impl MachineDecl {
    /// The initial state. The parser guarantees exactly one exists.
    pub fn initial(&self) -> &StateDecl {
        self.states
            .iter()
            .find(|s| s.is_initial)
            .expect("parsed machine has an initial state")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateDecl {
    pub name: Ident,
    pub is_initial: bool,
    pub is_final: bool,
    pub entry: Option<ActionSeq>,
    pub during: Option<ActionSeq>,
    pub exit: Option<ActionSeq>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransitionDecl {
    pub source: Ident,
    pub target: Ident,
    pub trigger: Option<Ident>,
    pub guard: Option<Expr>,
    pub action: Option<ActionSeq>,
    pub span: Span,
}

/// A non-empty, ordered list of actions. Absent sequences are `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionSeq {
    pub actions: Vec<Action>,
    pub span: Span,
}

impl ActionSeq {
    fn strip(&mut self) {
        self.span = Span::default();
        for a in &mut self.actions {
            match a {
                Action::Call { op, args, span } => {
                    *span = Span::default();
                    op.span = Span::default();
                    for e in args {
                        e.strip();
                    }
                }
                Action::Assign {
                    target,
                    value,
                    span,
                } => {
                    *span = Span::default();
                    target.span = Span::default();
                    value.strip();
                }
                Action::ResetClock { clock, span } => {
                    *span = Span::default();
                    clock.span = Span::default();
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Action {
    Call {
        op: Ident,
        args: Vec<Expr>,
        span: Span,
    },
    Assign {
        target: Ident,
        value: Expr,
        span: Span,
    },
    ResetClock {
        clock: Ident,
        span: Span,
    },
}

impl Action {
    pub fn span(&self) -> Span {
        match self {
            Action::Call { span, .. }
            | Action::Assign { span, .. }
            | Action::ResetClock { span, .. } => *span,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperationDef {
    pub name: Ident,
    pub params: Vec<Param>,
    pub pre: Option<Expr>,
    pub post: Option<Expr>,
    /// State-machine body; `None` means the platform supplies the behaviour.
    pub body: Option<OpBody>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OpBody {
    pub states: Vec<StateDecl>,
    pub transitions: Vec<TransitionDecl>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModuleDecl {
    pub name: Ident,
    pub platform: Ident,
    pub controllers: Vec<Ident>,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Literal {
    Bool(bool),
    Int(i64),
    Real(f64),
    Vec2(f64, f64),
}

impl Literal {
    pub fn ty(&self) -> Type {
        match self {
            Literal::Bool(_) => Type::Boolean,
            Literal::Int(_) => Type::Int,
            Literal::Real(_) => Type::Real,
            Literal::Vec2(..) => Type::Vector2d,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    And,
    Or,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    /// Binding strength; larger binds tighter. Ternary is 1, unary 7.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 2,
            BinOp::And => 3,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 4
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
    /// Filled in by the analyzer.
    pub ty: Option<Type>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Lit(Literal),
    Var(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Since(Ident),
    Cond(Box<Expr>, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr {
            kind,
            span,
            ty: None,
        }
    }

    fn strip(&mut self) {
        self.span = Span::default();
        self.ty = None;
        match &mut self.kind {
            ExprKind::Lit(_) | ExprKind::Var(_) => {}
            ExprKind::Since(c) => c.span = Span::default(),
            ExprKind::Unary(_, e) => e.strip(),
            ExprKind::Binary(_, a, b) => {
                a.strip();
                b.strip();
            }
            ExprKind::Cond(c, a, b) => {
                c.strip();
                a.strip();
                b.strip();
            }
        }
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Lit(_) | ExprKind::Var(_) | ExprKind::Since(_) => {}
            ExprKind::Unary(_, e) => e.walk(f),
            ExprKind::Binary(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            ExprKind::Cond(c, a, b) => {
                c.walk(f);
                a.walk(f);
                b.walk(f);
            }
        }
    }
}
