//! Built-in functions generators call to assemble residual syntax.

use crate::specializer::{lift, lift_static_arg, type_expr};
use crate::staticeval::{EvalError, Machine, TypeValue, Value};
use crate::syntax::*;

use super::code::{CodeRef, Fragment};

pub const BUILDERS: &[&str] = &[
    "make_lambda",
    "make_param",
    "body",
    "else_body",
    "append",
    "make_block",
    "make_vardecl",
    "make_varref",
    "make_literal",
    "make_op",
    "make_unop",
    "make_postfix",
    "make_subscript",
    "make_member",
    "make_cond",
    "make_array",
    "make_call",
    "make_return",
    "make_if",
    "make_for",
    "ptr",
    "array_of",
];

pub fn is_builder(name: &str) -> bool {
    BUILDERS.contains(&name)
}

/// Dispatches a builder call; `None` when `name` is not a builder.
pub fn call_builtin(_m: &mut Machine<'_>, name: &str, args: Vec<Value>, span: Span) -> Option<Result<Value, EvalError>> {
    is_builder(name).then(|| build(name, args, span))
}

fn malformed(span: Span, message: impl Into<String>) -> EvalError {
    EvalError::MalformedFragment { span, message: message.into() }
}

fn code(f: Fragment) -> Value {
    Value::Code(CodeRef::new(f))
}

fn arity(name: &str, args: &[Value], range: std::ops::RangeInclusive<usize>, span: Span) -> Result<(), EvalError> {
    if range.contains(&args.len()) {
        Ok(())
    } else {
        Err(EvalError::Arity { span, message: format!("`{name}` called with {} arguments", args.len()) })
    }
}

fn string(v: &Value, span: Span) -> Result<&str, EvalError> {
    match v {
        Value::Str(s) => Ok(s),
        other => Err(malformed(span, format!("expected a name, found {}", other.kind_name()))),
    }
}

fn type_arg(v: &Value, span: Span) -> Result<&TypeValue, EvalError> {
    v.as_type().ok_or_else(|| malformed(span, format!("expected a type, found {}", v.kind_name())))
}

fn handle(v: &Value, span: Span) -> Result<&CodeRef, EvalError> {
    match v {
        Value::Code(c) => Ok(c),
        other => Err(malformed(span, format!("expected code, found {}", other.kind_name()))),
    }
}

/// Code values become their expression; other values are lifted.
fn expr(v: &Value, span: Span) -> Result<Expr, EvalError> {
    match v {
        Value::Code(c) => c.to_expr().map_err(|m| malformed(span, m)),
        other => lift(other, span),
    }
}

fn is_empty_block(c: &CodeRef) -> bool {
    matches!(&*c.lock(), Fragment::Block(items) if items.is_empty())
}

fn reaches(from: &CodeRef, target: &CodeRef) -> bool {
    if CodeRef::ptr_eq(from, target) {
        return true;
    }
    let children: Vec<CodeRef> = match &*from.lock() {
        Fragment::Shell { body, .. } => vec![body.clone()],
        Fragment::Block(items) => items.clone(),
        Fragment::If { then, els, .. } => std::iter::once(then.clone()).chain(els.clone()).collect(),
        Fragment::For { init, body, .. } => init.iter().cloned().chain(std::iter::once(body.clone())).collect(),
        _ => Vec::new(),
    };
    children.iter().any(|c| reaches(c, target))
}

fn build(name: &str, args: Vec<Value>, span: Span) -> Result<Value, EvalError> {
    let a = &args;
    match name {
        "make_lambda" => {
            arity(name, a, 1..=usize::MAX, span)?;
            let fname = string(&a[0], span)?.to_string();
            let params = a[1..]
                .iter()
                .map(|p| match &*handle(p, span)?.lock() {
                    Fragment::Param(p) => Ok(p.clone()),
                    other => Err(malformed(span, format!("expected a parameter, found {}", other.kind()))),
                })
                .collect::<Result<_, _>>()?;
            Ok(code(Fragment::Shell { name: fname, params, body: CodeRef::block() }))
        }
        "make_param" => {
            arity(name, a, 2..=2, span)?;
            let ty = type_expr(type_arg(&a[0], span)?, span)?;
            Ok(code(Fragment::Param(Param { name: string(&a[1], span)?.to_string(), ty, at: 0, span: Span::default() })))
        }
        "body" => {
            arity(name, a, 1..=1, span)?;
            let c = handle(&a[0], span)?;
            let b = match &*c.lock() {
                Fragment::Shell { body, .. } | Fragment::For { body, .. } => body.clone(),
                Fragment::If { then, .. } => then.clone(),
                other => return Err(malformed(span, format!("{} has no body", other.kind()))),
            };
            Ok(Value::Code(b))
        }
        "else_body" => {
            arity(name, a, 1..=1, span)?;
            let c = handle(&a[0], span)?;
            let mut g = c.lock();
            match &mut *g {
                Fragment::If { els, .. } => Ok(Value::Code(els.get_or_insert_with(CodeRef::block).clone())),
                other => Err(malformed(span, format!("{} has no else branch", other.kind()))),
            }
        }
        "append" => {
            arity(name, a, 2..=2, span)?;
            let block = handle(&a[0], span)?;
            let item = match &a[1] {
                Value::Code(c) => c.clone(),
                other => CodeRef::new(Fragment::Expr(lift(other, span)?)),
            };
            if matches!(&*item.lock(), Fragment::Shell { .. } | Fragment::Param(_)) {
                return Err(malformed(span, "only statements can be appended"));
            }
            if reaches(&item, block) {
                return Err(malformed(span, "appending a block into itself"));
            }
            match &mut *block.lock() {
                Fragment::Block(items) => {
                    items.push(item);
                    Ok(Value::Unit)
                }
                other => Err(malformed(span, format!("cannot append to {}", other.kind()))),
            }
        }
        "make_block" => {
            arity(name, a, 0..=0, span)?;
            Ok(Value::Code(CodeRef::block()))
        }
        "make_vardecl" => {
            arity(name, a, 2..=3, span)?;
            let (base, dim) = match type_arg(&a[0], span)? {
                TypeValue::Array(e, n) => ((**e).clone(), Some(Expr::int(*n as i64))),
                t => (t.clone(), None),
            };
            let init = a.get(2).map(|v| expr(v, span)).transpose()?;
            let d = Declarator { name: string(&a[1], span)?.to_string(), dim, init, span: Span::default() };
            let ty = type_expr(&base, span)?;
            Ok(code(Fragment::Stmt(Stmt::new(StmtKind::VarDecl { ty, at: 0, decls: vec![d] }))))
        }
        "make_varref" => {
            arity(name, a, 1..=1, span)?;
            Ok(code(Fragment::Expr(Expr::var(string(&a[0], span)?))))
        }
        "make_literal" => {
            arity(name, a, 1..=1, span)?;
            Ok(code(Fragment::Expr(lift(&a[0], span)?)))
        }
        "make_op" => {
            arity(name, a, 3..=3, span)?;
            let op = string(&a[0], span)?;
            let (l, r) = (Box::new(expr(&a[1], span)?), Box::new(expr(&a[2], span)?));
            let e = if let Some(b) = BinOp::from_symbol(op) {
                ExprKind::Binary { op: b, lhs: l, rhs: r }
            } else if let Some(asg) = AssignOp::from_symbol(op) {
                ExprKind::Assign { op: asg, target: l, value: r }
            } else {
                return Err(malformed(span, format!("unknown operator `{op}`")));
            };
            Ok(code(Fragment::Expr(Expr::new(e))))
        }
        "make_unop" | "make_postfix" => {
            arity(name, a, 2..=2, span)?;
            let op = match (name, string(&a[0], span)?) {
                ("make_unop", "-") => UnOp::Neg,
                ("make_unop", "!") => UnOp::Not,
                ("make_unop", "++") => UnOp::PreInc,
                ("make_unop", "--") => UnOp::PreDec,
                ("make_postfix", "++") => UnOp::PostInc,
                ("make_postfix", "--") => UnOp::PostDec,
                (_, other) => return Err(malformed(span, format!("unknown operator `{other}`"))),
            };
            Ok(code(Fragment::Expr(Expr::new(ExprKind::Unary { op, expr: Box::new(expr(&a[1], span)?) }))))
        }
        "make_subscript" => {
            arity(name, a, 2..=2, span)?;
            let (base, index) = (Box::new(expr(&a[0], span)?), Box::new(expr(&a[1], span)?));
            Ok(code(Fragment::Expr(Expr::new(ExprKind::Index { base, index }))))
        }
        "make_member" => {
            arity(name, a, 2..=2, span)?;
            let base = Box::new(expr(&a[0], span)?);
            Ok(code(Fragment::Expr(Expr::new(ExprKind::Member { base, name: string(&a[1], span)?.to_string() }))))
        }
        "make_cond" => {
            arity(name, a, 3..=3, span)?;
            let [c, t, e] = [0, 1, 2].map(|i| expr(&a[i], span));
            Ok(code(Fragment::Expr(Expr::new(ExprKind::Cond { cond: Box::new(c?), then: Box::new(t?), els: Box::new(e?) }))))
        }
        "make_array" => {
            let items = a.iter().map(|v| expr(v, span)).collect::<Result<_, _>>()?;
            Ok(code(Fragment::Expr(Expr::new(ExprKind::ArrayLit(items)))))
        }
        "make_call" => {
            arity(name, a, 2..=usize::MAX, span)?;
            let callee = string(&a[0], span)?.to_string();
            let nstatic = a[1].as_int().ok_or_else(|| malformed(span, "static argument count must be an int"))?;
            let all: Vec<Expr> = a[2..]
                .iter()
                .enumerate()
                .map(|(i, v)| match v {
                    Value::Code(_) => expr(v, span),
                    v if (i as i64) < nstatic => lift_static_arg(v, span),
                    v => expr(v, span),
                })
                .collect::<Result<_, _>>()?;
            let (static_args, args) = if nstatic < 0 {
                (None, all)
            } else {
                let k = nstatic as usize;
                if k > all.len() {
                    return Err(malformed(span, "more static arguments than arguments"));
                }
                let mut all = all;
                let rest = all.split_off(k);
                (Some(all), rest)
            };
            Ok(code(Fragment::Expr(Expr::new(ExprKind::Call { callee, at: 0, static_args, args }))))
        }
        "make_return" => {
            arity(name, a, 0..=1, span)?;
            let e = a.first().map(|v| expr(v, span)).transpose()?;
            Ok(code(Fragment::Stmt(Stmt::new(StmtKind::Return(e)))))
        }
        "make_if" => {
            arity(name, a, 1..=1, span)?;
            Ok(code(Fragment::If { cond: expr(&a[0], span)?, then: CodeRef::block(), els: None }))
        }
        "make_for" => {
            arity(name, a, 3..=3, span)?;
            let part = |v: &Value| -> Result<Option<Expr>, EvalError> {
                match v {
                    Value::Code(c) if is_empty_block(c) => Ok(None),
                    v => expr(v, span).map(Some),
                }
            };
            let init = match &a[0] {
                Value::Code(c) if is_empty_block(c) => None,
                Value::Code(c) => {
                    if !matches!(&*c.lock(), Fragment::Stmt(_) | Fragment::Expr(_)) {
                        return Err(malformed(span, "loop initializer must be a declaration or expression"));
                    }
                    Some(c.clone())
                }
                other => return Err(malformed(span, format!("loop initializer cannot be {}", other.kind_name()))),
            };
            Ok(code(Fragment::For { init, cond: part(&a[1])?, step: part(&a[2])?, body: CodeRef::block() }))
        }
        "ptr" => {
            arity(name, a, 1..=1, span)?;
            Ok(Value::Type(TypeValue::Pointer(Box::new(type_arg(&a[0], span)?.clone()))))
        }
        "array_of" => {
            arity(name, a, 2..=2, span)?;
            let n = a[1].as_int().filter(|n| *n >= 0).ok_or_else(|| malformed(span, "array length must be a non-negative int"))?;
            Ok(Value::Type(TypeValue::Array(Box::new(type_arg(&a[0], span)?.clone()), n as usize)))
        }
        _ => unreachable!("not a builder: {name}"),
    }
}
