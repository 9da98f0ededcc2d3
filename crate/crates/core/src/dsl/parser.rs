use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use crate::diag::{codes, Diagnostic};
use crate::span::Span;
use crate::value::Type;

/// Parse a source file into a [`ModelUnit`].
///
/// On failure no partial AST is returned, only diagnostics.
pub fn parse(src: &str) -> Result<ModelUnit, Vec<Diagnostic>> {
    let tokens = tokenize(src)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        shape_errors: Vec::new(),
    };
    let unit = p.unit().map_err(|d| {
        let mut all = p.shape_errors.clone();
        all.push(*d);
        all
    })?;
    if p.shape_errors.is_empty() {
        Ok(unit)
    } else {
        let mut errs = p.shape_errors;
        crate::diag::sort(&mut errs);
        Err(errs)
    }
}

type PResult<T> = Result<T, Box<Diagnostic>>;

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    /// Well-formedness problems that do not stop parsing.
    shape_errors: Vec<Diagnostic>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn advance(&mut self) -> &Token {
        let t = &self.tokens[self.pos];
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected<T>(&self, expected: &str) -> PResult<T> {
        Err(Box::new(Diagnostic::error(
            codes::SYNTAX,
            self.span(),
            format!("expected {expected}, found {}", self.peek().describe()),
        )))
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Kw(k) if *k == kw)
    }

    fn is_sym(&self, sym: &str) -> bool {
        matches!(self.peek(), Tok::Sym(s) if *s == sym)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_sym(&mut self, sym: &str) -> bool {
        if self.is_sym(sym) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Span> {
        if self.is_kw(kw) {
            Ok(self.advance().span)
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    fn expect_sym(&mut self, sym: &str) -> PResult<Span> {
        if self.is_sym(sym) {
            Ok(self.advance().span)
        } else {
            self.unexpected(&format!("`{sym}`"))
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let span = self.advance().span;
                Ok(Ident { name, span })
            }
            _ => self.unexpected("identifier"),
        }
    }

    fn unit(&mut self) -> PResult<ModelUnit> {
        let mut unit = ModelUnit::default();
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::Kw("interface") => {
                    let decl = self.interface()?;
                    unit.order.push(DeclRef::Interface(unit.interfaces.len()));
                    unit.interfaces.push(decl);
                }
                Tok::Kw("machine") => {
                    let decl = self.machine()?;
                    unit.order.push(DeclRef::Machine(unit.machines.len()));
                    unit.machines.push(decl);
                }
                Tok::Kw("operation") => {
                    let decl = self.operation()?;
                    unit.order.push(DeclRef::Operation(unit.operations.len()));
                    unit.operations.push(decl);
                }
                Tok::Kw("module") => {
                    let decl = self.module()?;
                    unit.order.push(DeclRef::Module(unit.modules.len()));
                    unit.modules.push(decl);
                }
                _ => return self.unexpected("`interface`, `machine`, `operation` or `module`"),
            }
        }
        Ok(unit)
    }

    fn interface(&mut self) -> PResult<InterfaceDecl> {
        let start = self.expect_kw("interface")?;
        let name = self.ident()?;
        self.expect_sym("{")?;
        let mut decl = InterfaceDecl {
            name,
            variables: Vec::new(),
            events: Vec::new(),
            operations: Vec::new(),
            span: start,
        };
        loop {
            match self.peek() {
                Tok::Kw("var") => decl.variables.push(self.vardecl()?),
                Tok::Kw("event") => {
                    self.advance();
                    decl.events.push(self.ident()?);
                }
                Tok::Kw("op") => {
                    let s = self.advance().span;
                    let name = self.ident()?;
                    let params = self.param_list()?;
                    decl.operations.push(OpSig {
                        name,
                        params,
                        span: s.to(self.prev_span()),
                    });
                }
                Tok::Sym("}") => break,
                _ => return self.unexpected("`var`, `event`, `op` or `}`"),
            }
        }
        let end = self.expect_sym("}")?;
        decl.span = start.to(end);
        Ok(decl)
    }

    fn vardecl(&mut self) -> PResult<VarDecl> {
        let start = self.expect_kw("var")?;
        let name = self.ident()?;
        self.expect_sym(":")?;
        let ty = self.type_ref()?;
        let init = if self.eat_sym("=") {
            Some(self.literal()?)
        } else {
            None
        };
        Ok(VarDecl {
            name,
            ty,
            init,
            span: start.to(self.prev_span()),
        })
    }

    fn type_ref(&mut self) -> PResult<Type> {
        if let Tok::Kw(k) = self.peek() {
            if let Some(t) = Type::from_keyword(k) {
                self.advance();
                return Ok(t);
            }
        }
        if let Tok::Ident(name) = self.peek() {
            let msg = format!("unknown type `{name}` (expected boolean, int, real or vector2d)");
            return Err(Box::new(Diagnostic::error(codes::SYNTAX, self.span(), msg)));
        }
        self.unexpected("type")
    }

    fn signed_number(&mut self) -> PResult<Literal> {
        let neg = self.eat_sym("-");
        match *self.peek() {
            Tok::Int(i) => {
                self.advance();
                Ok(Literal::Int(if neg { -i } else { i }))
            }
            Tok::Real(r) => {
                self.advance();
                Ok(Literal::Real(if neg { -r } else { r }))
            }
            _ => self.unexpected("number"),
        }
    }

    fn literal(&mut self) -> PResult<Literal> {
        match self.peek() {
            Tok::Kw("true") => {
                self.advance();
                Ok(Literal::Bool(true))
            }
            Tok::Kw("false") => {
                self.advance();
                Ok(Literal::Bool(false))
            }
            Tok::Kw("vec2") => self.vec2_literal(),
            _ => self.signed_number(),
        }
    }

    fn vec2_literal(&mut self) -> PResult<Literal> {
        self.expect_kw("vec2")?;
        self.expect_sym("(")?;
        let x = self.signed_number()?;
        self.expect_sym(",")?;
        let y = self.signed_number()?;
        self.expect_sym(")")?;
        let f = |l: Literal| match l {
            Literal::Int(i) => i as f64,
            Literal::Real(r) => r,
            _ => unreachable!(),
        };
        Ok(Literal::Vec2(f(x), f(y)))
    }

    fn param_list(&mut self) -> PResult<Vec<Param>> {
        self.expect_sym("(")?;
        let mut params = Vec::new();
        if !self.is_sym(")") {
            loop {
                let name = self.ident()?;
                self.expect_sym(":")?;
                let ty = self.type_ref()?;
                params.push(Param {
                    span: name.span.to(self.prev_span()),
                    name,
                    ty,
                });
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        Ok(params)
    }

    fn machine(&mut self) -> PResult<MachineDecl> {
        let start = self.expect_kw("machine")?;
        let name = self.ident()?;
        let mut requires = Vec::new();
        if self.eat_kw("requires") {
            requires.push(self.ident()?);
            while self.eat_sym(",") {
                requires.push(self.ident()?);
            }
        }
        self.expect_sym("{")?;
        let mut clocks = Vec::new();
        let mut variables = Vec::new();
        loop {
            if self.eat_kw("clock") {
                clocks.push(self.ident()?);
            } else if self.is_kw("var") {
                variables.push(self.vardecl()?);
            } else {
                break;
            }
        }
        let (states, transitions) = self.graph()?;
        let end = self.expect_sym("}")?;
        let span = start.to(end);
        self.check_graph(&name.name, "machine", &states, &transitions, span);
        Ok(MachineDecl {
            name,
            requires,
            clocks,
            variables,
            states,
            transitions,
            span,
        })
    }

    fn graph(&mut self) -> PResult<(Vec<StateDecl>, Vec<TransitionDecl>)> {
        let mut states = Vec::new();
        while self.is_kw("initial") || self.is_kw("final") || self.is_kw("state") {
            states.push(self.state()?);
        }
        let mut transitions = Vec::new();
        while self.is_kw("transition") {
            transitions.push(self.transition()?);
        }
        if !self.is_sym("}") {
            return self.unexpected("`state`, `transition` or `}`");
        }
        Ok((states, transitions))
    }

    /// Shape invariants on a state graph; violations are collected, not fatal.
    fn check_graph(
        &mut self,
        owner: &str,
        kind: &str,
        states: &[StateDecl],
        transitions: &[TransitionDecl],
        span: Span,
    ) {
        let initials: Vec<&StateDecl> = states.iter().filter(|s| s.is_initial).collect();
        if initials.is_empty() {
            self.shape_errors.push(Diagnostic::error(
                codes::NO_INITIAL,
                span,
                format!("{kind} `{owner}` has no initial state"),
            ));
        }
        for extra in initials.iter().skip(1) {
            self.shape_errors.push(Diagnostic::error(
                codes::DUPLICATE_INITIAL,
                extra.span,
                format!(
                    "duplicate initial state `{}` in {kind} `{owner}`",
                    extra.name.name
                ),
            ));
        }
        for s in states.iter().filter(|s| s.is_final) {
            if s.during.is_some() || s.exit.is_some() {
                self.shape_errors.push(Diagnostic::error(
                    codes::SHAPE,
                    s.span,
                    format!(
                        "final state `{}` cannot have during or exit actions",
                        s.name.name
                    ),
                ));
            }
        }
        for t in transitions {
            if states
                .iter()
                .any(|s| s.is_final && s.name.name == t.source.name)
            {
                self.shape_errors.push(Diagnostic::error(
                    codes::SHAPE,
                    t.source.span,
                    format!("transition leaves final state `{}`", t.source.name),
                ));
            }
        }
    }

    fn state(&mut self) -> PResult<StateDecl> {
        let start = self.span();
        let is_initial = self.eat_kw("initial");
        let is_final = self.eat_kw("final");
        self.expect_kw("state")?;
        let name = self.ident()?;
        let (mut entry, mut during, mut exit) = (None, None, None);
        if self.eat_sym("{") {
            if self.eat_kw("entry") {
                entry = Some(self.actions()?);
            }
            if self.eat_kw("during") {
                during = Some(self.actions()?);
            }
            if self.eat_kw("exit") {
                exit = Some(self.actions()?);
            }
            if !self.is_sym("}") {
                return self.unexpected("`entry`, `during`, `exit` or `}` (in that order)");
            }
            self.advance();
        }
        Ok(StateDecl {
            name,
            is_initial,
            is_final,
            entry,
            during,
            exit,
            span: start.to(self.prev_span()),
        })
    }

    fn transition(&mut self) -> PResult<TransitionDecl> {
        let start = self.expect_kw("transition")?;
        let source = self.ident()?;
        self.expect_sym("->")?;
        let target = self.ident()?;
        let trigger = if self.eat_kw("on") {
            Some(self.ident()?)
        } else {
            None
        };
        let guard = if self.eat_sym("[") {
            let g = self.expr()?;
            self.expect_sym("]")?;
            Some(g)
        } else {
            None
        };
        let action = if self.eat_sym("/") {
            Some(self.actions()?)
        } else {
            None
        };
        Ok(TransitionDecl {
            source,
            target,
            trigger,
            guard,
            action,
            span: start.to(self.prev_span()),
        })
    }

    fn actions(&mut self) -> PResult<ActionSeq> {
        let mut actions = alloc::vec![self.action()?];
        while self.eat_sym(";") {
            actions.push(self.action()?);
        }
        let span = actions[0].span().to(actions[actions.len() - 1].span());
        Ok(ActionSeq { actions, span })
    }

    fn action(&mut self) -> PResult<Action> {
        if self.is_sym("#") {
            let start = self.advance().span;
            let clock = self.ident()?;
            return Ok(Action::ResetClock {
                span: start.to(clock.span),
                clock,
            });
        }
        let name = self.ident()?;
        if self.eat_sym(":=") {
            let value = self.expr()?;
            return Ok(Action::Assign {
                span: name.span.to(value.span),
                target: name,
                value,
            });
        }
        if self.eat_sym("(") {
            let mut args = Vec::new();
            if !self.is_sym(")") {
                args.push(self.expr()?);
                while self.eat_sym(",") {
                    args.push(self.expr()?);
                }
            }
            let end = self.expect_sym(")")?;
            return Ok(Action::Call {
                span: name.span.to(end),
                op: name,
                args,
            });
        }
        self.unexpected("`:=` or `(` after action name")
    }

    fn operation(&mut self) -> PResult<OperationDef> {
        let start = self.expect_kw("operation")?;
        let name = self.ident()?;
        let params = self.param_list()?;
        let pre = if self.eat_kw("pre") {
            Some(self.expr()?)
        } else {
            None
        };
        let post = if self.eat_kw("post") {
            Some(self.expr()?)
        } else {
            None
        };
        let body = if self.is_sym("{") {
            let bstart = self.advance().span;
            let (states, transitions) = self.graph()?;
            let end = self.expect_sym("}")?;
            let span = bstart.to(end);
            self.check_graph(&name.name, "operation", &states, &transitions, span);
            Some(OpBody {
                states,
                transitions,
                span,
            })
        } else {
            None
        };
        Ok(OperationDef {
            name,
            params,
            pre,
            post,
            body,
            span: start.to(self.prev_span()),
        })
    }

    fn module(&mut self) -> PResult<ModuleDecl> {
        let start = self.expect_kw("module")?;
        let name = self.ident()?;
        self.expect_sym("{")?;
        self.expect_kw("platform")?;
        let platform = self.ident()?;
        self.expect_sym(";")?;
        let mut controllers = Vec::new();
        while self.eat_kw("controller") {
            controllers.push(self.ident()?);
            self.expect_sym(";")?;
        }
        let end = self.expect_sym("}")?;
        let span = start.to(end);
        if controllers.is_empty() {
            self.shape_errors.push(Diagnostic::error(
                codes::SHAPE,
                span,
                format!("module `{}` declares no controller", name.name),
            ));
        }
        Ok(ModuleDecl {
            name,
            platform,
            controllers,
            span,
        })
    }

    // Expressions, loosest to tightest.

    fn expr(&mut self) -> PResult<Expr> {
        let cond = self.or_expr()?;
        if self.eat_sym("?") {
            let then = self.expr()?;
            self.expect_sym(":")?;
            let otherwise = self.expr()?;
            let span = cond.span.to(otherwise.span);
            return Ok(Expr::new(
                ExprKind::Cond(Box::new(cond), Box::new(then), Box::new(otherwise)),
                span,
            ));
        }
        Ok(cond)
    }

    fn binary_level(
        &mut self,
        ops: &[(Tok, BinOp)],
        next: fn(&mut Self) -> PResult<Expr>,
    ) -> PResult<Expr> {
        let mut lhs = next(self)?;
        'outer: loop {
            for (tok, op) in ops {
                if self.peek() == tok {
                    self.advance();
                    let rhs = next(self)?;
                    let span = lhs.span.to(rhs.span);
                    lhs = Expr::new(ExprKind::Binary(*op, Box::new(lhs), Box::new(rhs)), span);
                    continue 'outer;
                }
            }
            return Ok(lhs);
        }
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        self.binary_level(&[(Tok::Kw("or"), BinOp::Or)], Self::and_expr)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        self.binary_level(&[(Tok::Kw("and"), BinOp::And)], Self::cmp_expr)
    }

    fn cmp_expr(&mut self) -> PResult<Expr> {
        let lhs = self.add_expr()?;
        let op = match self.peek() {
            Tok::Sym("==") => BinOp::Eq,
            Tok::Sym("!=") => BinOp::Ne,
            Tok::Sym("<") => BinOp::Lt,
            Tok::Sym("<=") => BinOp::Le,
            Tok::Sym(">") => BinOp::Gt,
            Tok::Sym(">=") => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.advance();
        let rhs = self.add_expr()?;
        if matches!(self.peek(), Tok::Sym("==" | "!=" | "<" | "<=" | ">" | ">=")) {
            let msg = "comparison operators do not chain; add parentheses";
            return Err(Box::new(Diagnostic::error(codes::SYNTAX, self.span(), msg)));
        }
        let span = lhs.span.to(rhs.span);
        Ok(Expr::new(
            ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
            span,
        ))
    }

    fn add_expr(&mut self) -> PResult<Expr> {
        self.binary_level(
            &[(Tok::Sym("+"), BinOp::Add), (Tok::Sym("-"), BinOp::Sub)],
            Self::mul_expr,
        )
    }

    fn mul_expr(&mut self) -> PResult<Expr> {
        self.binary_level(
            &[(Tok::Sym("*"), BinOp::Mul), (Tok::Sym("/"), BinOp::Div)],
            Self::unary_expr,
        )
    }

    fn unary_expr(&mut self) -> PResult<Expr> {
        let op = if self.is_kw("not") {
            UnOp::Not
        } else if self.is_sym("-") {
            UnOp::Neg
        } else {
            return self.primary();
        };
        let start = self.advance().span;
        let operand = self.unary_expr()?;
        let span = start.to(operand.span);
        Ok(Expr::new(ExprKind::Unary(op, Box::new(operand)), span))
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Int(i) => {
                self.advance();
                Ok(Expr::new(ExprKind::Lit(Literal::Int(i)), start))
            }
            Tok::Real(r) => {
                self.advance();
                Ok(Expr::new(ExprKind::Lit(Literal::Real(r)), start))
            }
            Tok::Kw("true") | Tok::Kw("false") | Tok::Kw("vec2") => {
                let lit = self.literal()?;
                Ok(Expr::new(ExprKind::Lit(lit), start.to(self.prev_span())))
            }
            Tok::Kw("since") => {
                self.advance();
                self.expect_sym("(")?;
                let clock = self.ident()?;
                let end = self.expect_sym(")")?;
                Ok(Expr::new(ExprKind::Since(clock), start.to(end)))
            }
            Tok::Ident(name) => {
                if self.peek_at(1) == &Tok::Sym("(") {
                    let msg = format!("operation `{name}` cannot be called inside an expression");
                    return Err(Box::new(Diagnostic::error(codes::SYNTAX, start, msg)));
                }
                self.advance();
                Ok(Expr::new(ExprKind::Var(name), start))
            }
            Tok::Sym("(") => {
                self.advance();
                let inner = self.expr()?;
                self.expect_sym(")")?;
                Ok(inner)
            }
            _ => self.unexpected("expression"),
        }
    }
}
