use crate::syntax::{BinOp, Prim, Span};

use super::{EvalError, TypeValue, Value};

enum Num {
    I(i64),
    F(f64),
}

fn num(v: &Value, span: Span, op: &str) -> Result<Num, EvalError> {
    match v {
        Value::Int(i) => Ok(Num::I(*i)),
        Value::Bool(b) => Ok(Num::I(*b as i64)),
        Value::Float(f) => Ok(Num::F(*f)),
        other => Err(EvalError::mismatch(span, format!("operator `{op}` is not defined on {}", other.kind_name()))),
    }
}

fn finite(f: f64, span: Span) -> Result<Value, EvalError> {
    if f.is_finite() {
        Ok(Value::Float(f))
    } else {
        Err(EvalError::Overflow { span })
    }
}

pub fn truthy(v: &Value, span: Span) -> Result<bool, EvalError> {
    match v {
        Value::Bool(b) => Ok(*b),
        Value::Int(i) => Ok(*i != 0),
        Value::Float(f) => Ok(*f != 0.0),
        other => Err(EvalError::mismatch(span, format!("{} used as a condition", other.kind_name()))),
    }
}

/// `==` as the language sees it: numeric across int and float, structural
/// on types and aggregates.
pub fn values_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Int(x), Value::Float(y)) | (Value::Float(y), Value::Int(x)) => (*x as f64) == *y,
        (Value::Float(x), Value::Float(y)) => x == y,
        (Value::Bool(x), Value::Int(y)) | (Value::Int(y), Value::Bool(x)) => (*x as i64) == *y,
        _ => a == b,
    }
}

pub fn binary(op: BinOp, a: &Value, b: &Value, span: Span) -> Result<Value, EvalError> {
    match op {
        BinOp::Eq | BinOp::Ne => {
            let comparable = matches!(
                (a, b),
                (Value::Int(_) | Value::Float(_) | Value::Bool(_), Value::Int(_) | Value::Float(_) | Value::Bool(_))
            ) || std::mem::discriminant(a) == std::mem::discriminant(b);
            if !comparable {
                return Err(EvalError::mismatch(span, format!("cannot compare {} with {}", a.kind_name(), b.kind_name())));
            }
            let eq = values_equal(a, b);
            return Ok(Value::Bool(if op == BinOp::Eq { eq } else { !eq }));
        }
        BinOp::And => return Ok(Value::Bool(truthy(a, span)? && truthy(b, span)?)),
        BinOp::Or => return Ok(Value::Bool(truthy(a, span)? || truthy(b, span)?)),
        _ => {}
    }
    let sym = op.symbol();
    match (num(a, span, sym)?, num(b, span, sym)?) {
        (Num::I(x), Num::I(y)) => int_op(op, x, y, span),
        (Num::I(x), Num::F(y)) => float_op(op, x as f64, y, span),
        (Num::F(x), Num::I(y)) => float_op(op, x, y as f64, span),
        (Num::F(x), Num::F(y)) => float_op(op, x, y, span),
    }
}

fn int_op(op: BinOp, x: i64, y: i64, span: Span) -> Result<Value, EvalError> {
    let ovf = || EvalError::Overflow { span };
    Ok(match op {
        BinOp::Add => Value::Int(x.checked_add(y).ok_or_else(ovf)?),
        BinOp::Sub => Value::Int(x.checked_sub(y).ok_or_else(ovf)?),
        BinOp::Mul => Value::Int(x.checked_mul(y).ok_or_else(ovf)?),
        BinOp::Div | BinOp::Rem if y == 0 => return Err(EvalError::DivisionByZero { span }),
        BinOp::Div => Value::Int(x.checked_div(y).ok_or_else(ovf)?),
        BinOp::Rem => Value::Int(x.checked_rem(y).ok_or_else(ovf)?),
        BinOp::Lt => Value::Bool(x < y),
        BinOp::Le => Value::Bool(x <= y),
        BinOp::Gt => Value::Bool(x > y),
        BinOp::Ge => Value::Bool(x >= y),
        BinOp::Eq | BinOp::Ne | BinOp::And | BinOp::Or => unreachable!(),
    })
}

fn float_op(op: BinOp, x: f64, y: f64, span: Span) -> Result<Value, EvalError> {
    match op {
        BinOp::Add => finite(x + y, span),
        BinOp::Sub => finite(x - y, span),
        BinOp::Mul => finite(x * y, span),
        BinOp::Div | BinOp::Rem if y == 0.0 => Err(EvalError::DivisionByZero { span }),
        BinOp::Div => finite(x / y, span),
        BinOp::Rem => finite(x % y, span),
        BinOp::Lt => Ok(Value::Bool(x < y)),
        BinOp::Le => Ok(Value::Bool(x <= y)),
        BinOp::Gt => Ok(Value::Bool(x > y)),
        BinOp::Ge => Ok(Value::Bool(x >= y)),
        BinOp::Eq | BinOp::Ne | BinOp::And | BinOp::Or => unreachable!(),
    }
}

pub fn negate(v: &Value, span: Span) -> Result<Value, EvalError> {
    match num(v, span, "-")? {
        Num::I(i) => i.checked_neg().map(Value::Int).ok_or(EvalError::Overflow { span }),
        Num::F(f) => Ok(Value::Float(-f)),
    }
}

/// Converts `v` to a value of type `ty`, as declarations, parameter
/// binding and assignment do.
pub fn coerce(v: Value, ty: &TypeValue, span: Span) -> Result<Value, EvalError> {
    let fail = |v: &Value| EvalError::mismatch(span, format!("cannot convert {} to {ty}", v.kind_name()));
    match ty {
        TypeValue::Prim(Prim::Void) => Ok(Value::Unit),
        TypeValue::Prim(Prim::Bool) => match v {
            Value::Bool(_) => Ok(v),
            Value::Int(i) => Ok(Value::Bool(i != 0)),
            Value::Float(f) => Ok(Value::Bool(f != 0.0)),
            _ => Err(fail(&v)),
        },
        TypeValue::Prim(p) if p.is_integral() => match v {
            Value::Int(_) => Ok(v),
            Value::Bool(b) => Ok(Value::Int(b as i64)),
            Value::Float(f) => {
                let t = f.trunc();
                if t >= -(2f64.powi(63)) && t < 2f64.powi(63) {
                    Ok(Value::Int(t as i64))
                } else {
                    Err(EvalError::Overflow { span })
                }
            }
            _ => Err(fail(&v)),
        },
        TypeValue::Prim(_) => match v {
            Value::Float(_) => Ok(v),
            Value::Int(i) => Ok(Value::Float(i as f64)),
            Value::Bool(b) => Ok(Value::Float(b as i64 as f64)),
            _ => Err(fail(&v)),
        },
        TypeValue::Typename => match v {
            Value::Type(_) | Value::Unit => Ok(v),
            _ => Err(fail(&v)),
        },
        TypeValue::Code => match v {
            Value::Code(_) | Value::Unit => Ok(v),
            _ => Err(fail(&v)),
        },
        TypeValue::Pointer(elem) => match v {
            Value::Array { items, .. } => Ok(Value::Array {
                elem: (**elem).clone(),
                items: items.into_iter().map(|x| coerce(x, elem, span)).collect::<Result<_, _>>()?,
            }),
            _ => Err(fail(&v)),
        },
        TypeValue::Array(elem, n) => match v {
            Value::Array { items, .. } if items.len() <= *n => {
                let mut out: Vec<Value> = items.into_iter().map(|x| coerce(x, elem, span)).collect::<Result<_, _>>()?;
                while out.len() < *n {
                    out.push(zero(elem).ok_or_else(|| EvalError::mismatch(span, format!("no default value for {elem}")))?);
                }
                Ok(Value::Array { elem: (**elem).clone(), items: out })
            }
            Value::Array { ref items, .. } => Err(EvalError::mismatch(
                span,
                format!("array of length {} does not fit {ty}", items.len()),
            )),
            _ => Err(fail(&v)),
        },
        TypeValue::Class { .. } => match &v {
            Value::Instance { class, .. } if class == ty => Ok(v),
            _ => Err(fail(&v)),
        },
    }
}

/// Default value of a type that needs no construction.
pub fn zero(ty: &TypeValue) -> Option<Value> {
    Some(match ty {
        TypeValue::Prim(Prim::Void) => Value::Unit,
        TypeValue::Prim(Prim::Bool) => Value::Bool(false),
        TypeValue::Prim(p) if p.is_integral() => Value::Int(0),
        TypeValue::Prim(_) => Value::Float(0.0),
        TypeValue::Typename | TypeValue::Code => Value::Unit,
        TypeValue::Pointer(e) => Value::Array { elem: (**e).clone(), items: Vec::new() },
        TypeValue::Array(e, n) => {
            let z = zero(e)?;
            Value::Array { elem: (**e).clone(), items: vec![z; *n] }
        }
        TypeValue::Class { .. } => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s() -> Span {
        Span::default()
    }

    #[test]
    fn truncating_division() {
        assert_eq!(binary(BinOp::Div, &Value::Int(-7), &Value::Int(2), s()).unwrap(), Value::Int(-3));
        assert_eq!(binary(BinOp::Rem, &Value::Int(-7), &Value::Int(2), s()).unwrap(), Value::Int(-1));
        assert!(matches!(binary(BinOp::Div, &Value::Int(1), &Value::Int(0), s()), Err(EvalError::DivisionByZero { .. })));
    }

    #[test]
    fn overflow_is_an_error() {
        assert!(matches!(binary(BinOp::Mul, &Value::Int(i64::MAX), &Value::Int(2), s()), Err(EvalError::Overflow { .. })));
        assert!(matches!(binary(BinOp::Div, &Value::Int(i64::MIN), &Value::Int(-1), s()), Err(EvalError::Overflow { .. })));
    }

    #[test]
    fn mixed_arithmetic_promotes() {
        assert_eq!(binary(BinOp::Div, &Value::Float(10.0), &Value::Int(4), s()).unwrap(), Value::Float(2.5));
        assert_eq!(binary(BinOp::Add, &Value::Int(1), &Value::Float(0.5), s()).unwrap(), Value::Float(1.5));
    }

    #[test]
    fn types_compare_but_do_not_add() {
        let int = Value::Type(TypeValue::INT);
        assert_eq!(binary(BinOp::Eq, &int, &Value::Type(TypeValue::INT), s()).unwrap(), Value::Bool(true));
        assert_eq!(binary(BinOp::Eq, &int, &Value::Type(TypeValue::FLOAT), s()).unwrap(), Value::Bool(false));
        assert!(matches!(binary(BinOp::Add, &int, &Value::Int(1), s()), Err(EvalError::TypeMismatch { .. })));
    }

    #[test]
    fn coercions() {
        assert_eq!(coerce(Value::Int(1), &TypeValue::FLOAT, s()).unwrap(), Value::Float(1.0));
        assert_eq!(coerce(Value::Float(2.7), &TypeValue::INT, s()).unwrap(), Value::Int(2));
        assert!(coerce(Value::Int(5), &TypeValue::Typename, s()).is_err());
        let arr = Value::Array { elem: TypeValue::INT, items: vec![Value::Int(1)] };
        let grown = coerce(arr, &TypeValue::Array(Box::new(TypeValue::FLOAT), 3), s()).unwrap();
        assert_eq!(grown.to_string(), "{1.0, 0.0, 0.0}");
    }
}
