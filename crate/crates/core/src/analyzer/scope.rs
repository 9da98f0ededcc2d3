use alloc::string::String;
use alloc::vec::Vec;

use crate::dsl::Literal;
use crate::value::{Type, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarOwner {
    /// Declared by the interface at this index of the unit.
    Interface(usize),
    /// Local to the machine.
    Machine,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VarSymbol {
    pub name: String,
    pub ty: Type,
    pub owner: VarOwner,
    pub init: Value,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventSymbol {
    pub name: String,
    pub iface: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpSymbol {
    pub name: String,
    pub params: Vec<(String, Type)>,
    pub iface: usize,
    /// Index of the `operation` definition with a matching name, if any.
    pub def: Option<usize>,
}

impl OpSymbol {
    /// Defined operations carry a state-machine body; others are bound by the platform.
    pub fn has_body(&self, unit: &crate::dsl::ModelUnit) -> bool {
        self.def.is_some_and(|d| unit.operations[d].body.is_some())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarRef {
    Param(usize),
    Var(usize),
}

/// Names visible from one machine or one operation.
///
/// Lookup order: operation parameters, machine locals, then interface
/// variables in `requires` order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Scope {
    pub params: Vec<(String, Type)>,
    /// Slot order: interface variables (by `requires` order), then locals.
    pub vars: Vec<VarSymbol>,
    pub events: Vec<EventSymbol>,
    pub ops: Vec<OpSymbol>,
    pub clocks: Vec<String>,
}

impl Scope {
    pub fn lookup_var(&self, name: &str) -> Option<VarRef> {
        if let Some(i) = self.params.iter().position(|(n, _)| n == name) {
            return Some(VarRef::Param(i));
        }
        if let Some(i) = self
            .vars
            .iter()
            .position(|v| v.owner == VarOwner::Machine && v.name == name)
        {
            return Some(VarRef::Var(i));
        }
        self.vars
            .iter()
            .position(|v| v.name == name)
            .map(VarRef::Var)
    }

    pub fn var_type(&self, r: VarRef) -> Type {
        match r {
            VarRef::Param(i) => self.params[i].1,
            VarRef::Var(i) => self.vars[i].ty,
        }
    }

    pub fn event(&self, name: &str) -> Option<usize> {
        self.events.iter().position(|e| e.name == name)
    }

    pub fn op(&self, name: &str) -> Option<usize> {
        self.ops.iter().position(|o| o.name == name)
    }

    pub fn clock(&self, name: &str) -> Option<usize> {
        self.clocks.iter().position(|c| c == name)
    }

    /// Slot of the interface-owned variable `name` declared by `iface`.
    pub fn interface_var(&self, iface: usize, name: &str) -> Option<usize> {
        self.vars
            .iter()
            .position(|v| v.owner == VarOwner::Interface(iface) && v.name == name)
    }
}

pub fn literal_value(lit: &Literal) -> Value {
    match *lit {
        Literal::Bool(b) => Value::Bool(b),
        Literal::Int(i) => Value::Int(i),
        Literal::Real(r) => Value::Real(r),
        Literal::Vec2(x, y) => Value::Vec2(x, y),
    }
}

/// Initial value of a declared variable: its literal (promoted) or the type's zero.
pub fn initial_value(ty: Type, init: Option<&Literal>) -> Value {
    init.and_then(|l| literal_value(l).coerce(ty))
        .unwrap_or(ty.zero())
}
