use crate::staticeval::{EvalError, TypeValue, Value};
use crate::syntax::*;

/// Literal expression denoting a static value in residual code.
pub fn lift(v: &Value, span: Span) -> Result<Expr, EvalError> {
    let kind = match v {
        Value::Int(i) => ExprKind::Int(*i),
        Value::Float(f) if f.is_finite() => ExprKind::Float(*f),
        Value::Bool(b) => ExprKind::Bool(*b),
        Value::Type(t) => ExprKind::Type(type_expr(t, span)?),
        other => {
            return Err(EvalError::Lift { span, message: format!("{} value `{other}` into residual code", other.kind_name()) })
        }
    };
    Ok(Expr::with_span(kind, span))
}

/// Like [`lift`], but arrays become array literals. Used for the static
/// arguments of calls still to be specialized.
pub fn lift_static_arg(v: &Value, span: Span) -> Result<Expr, EvalError> {
    match v {
        Value::Array { items, .. } => Ok(Expr::with_span(
            ExprKind::ArrayLit(items.iter().map(|i| lift_static_arg(i, span)).collect::<Result<_, _>>()?),
            span,
        )),
        other => lift(other, span),
    }
}

/// Type annotation denoting a type value.
pub fn type_expr(t: &TypeValue, span: Span) -> Result<TypeExpr, EvalError> {
    Ok(match t {
        TypeValue::Prim(p) => TypeExpr::Prim(*p),
        TypeValue::Typename => TypeExpr::Typename,
        TypeValue::Code => TypeExpr::Code,
        TypeValue::Pointer(e) => TypeExpr::Pointer(Box::new(type_expr(e, span)?)),
        TypeValue::Array(e, n) => TypeExpr::Array(Box::new(type_expr(e, span)?), Box::new(Expr::int(*n as i64))),
        TypeValue::Class { name, args } if args.is_empty() => TypeExpr::Named(name.clone()),
        TypeValue::Class { name, args } => TypeExpr::ClassApp {
            name: name.clone(),
            args: args.iter().map(|a| lift(a, span)).collect::<Result<_, _>>()?,
        },
    })
}
