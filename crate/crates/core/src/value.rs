use core::fmt;

/// The closed set of data types of the controller language.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Type {
    Boolean,
    Int,
    Real,
    Vector2d,
}

impl Type {
    pub fn keyword(self) -> &'static str {
        match self {
            Type::Boolean => "boolean",
            Type::Int => "int",
            Type::Real => "real",
            Type::Vector2d => "vector2d",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Type> {
        Some(match s {
            "boolean" => Type::Boolean,
            "int" => Type::Int,
            "real" => Type::Real,
            "vector2d" => Type::Vector2d,
            _ => return None,
        })
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, Type::Int | Type::Real)
    }

    /// Whether a value of type `from` may be stored where `self` is expected.
    /// Integers promote to reals; nothing else converts.
    pub fn accepts(self, from: Type) -> bool {
        self == from || (self == Type::Real && from == Type::Int)
    }

    pub fn zero(self) -> Value {
        match self {
            Type::Boolean => Value::Bool(false),
            Type::Int => Value::Int(0),
            Type::Real => Value::Real(0.0),
            Type::Vector2d => Value::Vec2(0.0, 0.0),
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// A runtime value. Reals are IEEE-754 binary64 throughout.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Real(f64),
    Vec2(f64, f64),
}

impl Value {
    pub fn ty(&self) -> Type {
        match self {
            Value::Bool(_) => Type::Boolean,
            Value::Int(_) => Type::Int,
            Value::Real(_) => Type::Real,
            Value::Vec2(..) => Type::Vector2d,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            Value::Bool(b) => Some(b),
            _ => None,
        }
    }

    /// Numeric view with integer promotion.
    pub fn as_real(&self) -> Option<f64> {
        match *self {
            Value::Int(i) => Some(i as f64),
            Value::Real(r) => Some(r),
            _ => None,
        }
    }

    /// Convert to `ty` if the language allows it (identity or int → real).
    pub fn coerce(self, ty: Type) -> Option<Value> {
        match (self, ty) {
            (v, t) if v.ty() == t => Some(v),
            (Value::Int(i), Type::Real) => Some(Value::Real(i as f64)),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r:?}"),
            Value::Vec2(x, y) => write!(f, "vec2({x:?}, {y:?})"),
        }
    }
}
