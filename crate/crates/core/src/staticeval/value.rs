use std::fmt;
use std::hash::{Hash, Hasher};

use crate::flatten::CodeRef;
use crate::syntax::Prim;

/// A type used as data. Every `TypeValue` is a legal value of a
/// `typename` variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TypeValue {
    Prim(Prim),
    Typename,
    Code,
    Pointer(Box<TypeValue>),
    Array(Box<TypeValue>, usize),
    Class { name: String, args: Vec<Value> },
}

impl TypeValue {
    pub const INT: TypeValue = TypeValue::Prim(Prim::Int);
    pub const FLOAT: TypeValue = TypeValue::Prim(Prim::Float);
    pub const BOOL: TypeValue = TypeValue::Prim(Prim::Bool);
    pub const VOID: TypeValue = TypeValue::Prim(Prim::Void);

    pub fn is_numeric(&self) -> bool {
        matches!(self, TypeValue::Prim(p) if *p != Prim::Void)
    }

    pub fn is_floating(&self) -> bool {
        matches!(self, TypeValue::Prim(p) if p.is_floating())
    }

    /// Element type of arrays and pointers.
    pub fn element(&self) -> Option<&TypeValue> {
        match self {
            TypeValue::Pointer(t) | TypeValue::Array(t, _) => Some(t),
            _ => None,
        }
    }

    /// True when the type mentions neither `typename` nor code values, i.e.
    /// it can describe run-time data.
    pub fn is_runtime(&self) -> bool {
        match self {
            TypeValue::Prim(_) => true,
            TypeValue::Typename | TypeValue::Code => false,
            TypeValue::Pointer(t) | TypeValue::Array(t, _) => t.is_runtime(),
            TypeValue::Class { .. } => true,
        }
    }
}

impl fmt::Display for TypeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeValue::Prim(p) => f.write_str(p.name()),
            TypeValue::Typename => f.write_str("typename"),
            TypeValue::Code => f.write_str("ASTree"),
            TypeValue::Pointer(t) => write!(f, "{t}*"),
            TypeValue::Array(t, n) => write!(f, "{t}[{n}]"),
            TypeValue::Class { name, args } if args.is_empty() => f.write_str(name),
            TypeValue::Class { name, args } => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Field {
    pub name: String,
    pub ty: TypeValue,
    pub value: Value,
}

#[derive(Clone, Debug)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Array { elem: TypeValue, items: Vec<Value> },
    Type(TypeValue),
    Instance { class: TypeValue, fields: Vec<Field> },
    Code(CodeRef),
    /// Only produced by string literals, which are arguments of built-ins.
    Str(String),
    Unit,
}

impl Value {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::Bool(_) => "bool",
            Value::Array { .. } => "array",
            Value::Type(_) => "type",
            Value::Instance { .. } => "instance",
            Value::Code(_) => "code",
            Value::Str(_) => "string",
            Value::Unit => "void",
        }
    }

    /// Stable `kind value` rendering used for run results: `int 32`, `float 8.0`.
    pub fn typed_display(&self) -> String {
        match self {
            Value::Array { elem, items } => format!("{elem}[{}] {self}", items.len()),
            Value::Instance { class, .. } => format!("{class} {self}"),
            Value::Unit => "void".to_string(),
            v => format!("{} {v}", v.kind_name()),
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            Value::Bool(b) => Some(*b as i64),
            _ => None,
        }
    }

    pub fn as_type(&self) -> Option<&TypeValue> {
        match self {
            Value::Type(t) => Some(t),
            _ => None,
        }
    }

    pub fn field(&self, name: &str) -> Option<&Value> {
        match self {
            Value::Instance { fields, .. } => fields.iter().find(|f| f.name == name).map(|f| &f.value),
            _ => None,
        }
    }

    /// Run-time type of the value; `int` for every integer.
    pub fn type_of(&self) -> TypeValue {
        match self {
            Value::Int(_) => TypeValue::INT,
            Value::Float(_) => TypeValue::FLOAT,
            Value::Bool(_) => TypeValue::BOOL,
            Value::Array { elem, items } => TypeValue::Array(Box::new(elem.clone()), items.len()),
            Value::Type(_) => TypeValue::Typename,
            Value::Instance { class, .. } => class.clone(),
            Value::Code(_) => TypeValue::Code,
            Value::Str(_) | Value::Unit => TypeValue::VOID,
        }
    }
}

/// Tag-wise equality; floats compare by bit pattern so that values can key
/// the specialization cache.
impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => a.to_bits() == b.to_bits(),
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Array { elem: e1, items: i1 }, Value::Array { elem: e2, items: i2 }) => e1 == e2 && i1 == i2,
            (Value::Type(a), Value::Type(b)) => a == b,
            (Value::Instance { class: c1, fields: f1 }, Value::Instance { class: c2, fields: f2 }) => c1 == c2 && f1 == f2,
            (Value::Code(a), Value::Code(b)) => CodeRef::ptr_eq(a, b),
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::Unit, Value::Unit) => true,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            Value::Int(v) => v.hash(state),
            Value::Float(v) => v.to_bits().hash(state),
            Value::Bool(b) => b.hash(state),
            Value::Array { elem, items } => {
                elem.hash(state);
                items.hash(state);
            }
            Value::Type(t) => t.hash(state),
            Value::Instance { class, fields } => {
                class.hash(state);
                fields.hash(state);
            }
            Value::Code(c) => c.addr().hash(state),
            Value::Str(s) => s.hash(state),
            Value::Unit => {}
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Float(v) => write!(f, "{v:?}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Array { items, .. } => {
                f.write_str("{")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("}")
            }
            Value::Type(t) => write!(f, "{t}"),
            Value::Instance { fields, .. } => {
                f.write_str("{")?;
                for (i, fl) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{} = {}", fl.name, fl.value)?;
                }
                f.write_str("}")
            }
            Value::Code(c) => write!(f, "<code {}>", c.summary()),
            Value::Str(s) => write!(f, "{s:?}"),
            Value::Unit => f.write_str("void"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn typed_rendering() {
        assert_eq!(Value::Int(32).typed_display(), "int 32");
        assert_eq!(Value::Float(8.0).typed_display(), "float 8.0");
        assert_eq!(Value::Type(TypeValue::Prim(Prim::LongInt)).typed_display(), "type long int");
        let arr = Value::Array { elem: TypeValue::INT, items: vec![Value::Int(1), Value::Int(2)] };
        assert_eq!(arr.typed_display(), "int[2] {1, 2}");
    }

    #[test]
    fn structural_type_equality() {
        let a = TypeValue::Class { name: "V".into(), args: vec![Value::Type(TypeValue::FLOAT), Value::Int(4)] };
        let b = TypeValue::Class { name: "V".into(), args: vec![Value::Type(TypeValue::FLOAT), Value::Int(4)] };
        assert_eq!(a, b);
        assert_ne!(Value::Int(1), Value::Float(1.0));
        assert_eq!(Value::Float(f64::NAN), Value::Float(f64::NAN));
    }
}
