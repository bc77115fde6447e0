//! Shared last pass over raw residual code: resolves calls to residual
//! names, replaces class types by residual classes and types every
//! expression so that signatures can be written out.

use std::collections::HashMap;

use crate::staticeval::{infer_static_args, EvalError, TypeValue, Value};
use crate::syntax::*;

use super::{type_expr, Raw, ResidualItem, SpecError, Specializer};

/// Least upper bound in `char < int < long int < float < double`; `bool`
/// counts as an integer. `None` when the types are unrelated.
pub fn join_types(a: &TypeValue, b: &TypeValue) -> Option<TypeValue> {
    if a == b {
        return Some(a.clone());
    }
    let rank = |t: &TypeValue| match t {
        TypeValue::Prim(Prim::Bool) | TypeValue::Prim(Prim::Char) => Some(0),
        TypeValue::Prim(Prim::Int) => Some(1),
        TypeValue::Prim(Prim::LongInt) => Some(2),
        TypeValue::Prim(Prim::Float) => Some(3),
        TypeValue::Prim(Prim::Double) => Some(4),
        _ => None,
    };
    let (ra, rb) = (rank(a)?, rank(b)?);
    Some(if ra == 0 && rb == 0 {
        TypeValue::INT
    } else if ra >= rb {
        a.clone()
    } else {
        b.clone()
    })
}

/// Return type from the types of all `return` statements; `void` if none.
pub fn infer_return_type(types: &[(TypeValue, Span)]) -> Result<TypeValue, SpecError> {
    let mut acc: Option<TypeValue> = None;
    for (t, span) in types {
        acc = Some(match acc {
            None => t.clone(),
            Some(a) => join_types(&a, t).ok_or_else(|| SpecError::ReturnTypeMismatch {
                span: *span,
                first: a.clone(),
                second: t.clone(),
            })?,
        });
    }
    Ok(acc.unwrap_or(TypeValue::VOID))
}

struct Scopes {
    frames: Vec<HashMap<String, TypeValue>>,
    returns: Vec<(TypeValue, Span)>,
}

impl Scopes {
    fn new(base: HashMap<String, TypeValue>) -> Self {
        Scopes { frames: vec![base], returns: Vec::new() }
    }

    fn declare(&mut self, name: &str, ty: TypeValue) {
        self.frames.last_mut().expect("scope").insert(name.to_string(), ty);
    }

    fn lookup(&self, name: &str) -> Option<&TypeValue> {
        self.frames.iter().rev().find_map(|f| f.get(name))
    }
}

fn mismatch(span: Span, message: String) -> SpecError {
    SpecError::Eval(EvalError::TypeMismatch { span, message })
}

impl<'p> Specializer<'p> {
    pub(crate) fn finish_function(&mut self, name: &str, raw: Raw, span: Span) -> Result<(FunctionDef, TypeValue), SpecError> {
        let mut sc = Scopes::new(self.global_types.clone());
        let mut params = Vec::new();
        for p in raw.params {
            let (te, tv) = self.finish_type(&p.ty, p.span)?;
            sc.declare(&p.name, tv);
            params.push(Param { ty: te, ..p });
        }
        let body = self.finish_block(raw.body, &mut sc)?;
        let ret = match raw.ret {
            Some(t) => self.residual_type(&t, span)?,
            None => infer_return_type(&sc.returns)?,
        };
        let def = FunctionDef {
            name: name.to_string(),
            static_params: None,
            params,
            ret: Some(type_expr(&ret, span)?),
            body,
            span,
        };
        Ok((def, ret))
    }

    pub(crate) fn finish_ctor(&mut self, body: Block, members: &[(String, TypeValue)]) -> Result<Block, SpecError> {
        let mut sc = Scopes::new(self.global_types.clone());
        sc.frames.push(members.iter().cloned().collect());
        self.finish_block(body, &mut sc)
    }

    pub(crate) fn finish_global(&mut self, s: Stmt) -> Result<Stmt, SpecError> {
        let mut sc = Scopes::new(std::mem::take(&mut self.global_types));
        let r = self.finish_stmt(s, &mut sc);
        self.global_types = sc.frames.swap_remove(0);
        r
    }

    /// Replaces class types by their residual classes.
    pub(crate) fn residual_type(&mut self, t: &TypeValue, span: Span) -> Result<TypeValue, SpecError> {
        Ok(match t {
            TypeValue::Class { name, args } => {
                let cls = self.m.class(name).ok_or_else(|| EvalError::Unbound { span, name: name.clone() })?;
                let rname = self.specialize_class(cls, args.clone(), span)?;
                TypeValue::Class { name: rname, args: Vec::new() }
            }
            TypeValue::Pointer(e) => TypeValue::Pointer(Box::new(self.residual_type(e, span)?)),
            TypeValue::Array(e, n) => TypeValue::Array(Box::new(self.residual_type(e, span)?), *n),
            other => other.clone(),
        })
    }

    fn finish_type(&mut self, t: &TypeExpr, span: Span) -> Result<(TypeExpr, TypeValue), SpecError> {
        let tv = self.m.eval_type(t)?;
        let tv = self.residual_type(&tv, span)?;
        Ok((type_expr(&tv, span)?, tv))
    }

    fn finish_block(&mut self, b: Block, sc: &mut Scopes) -> Result<Block, SpecError> {
        sc.frames.push(HashMap::new());
        let r = b.stmts.into_iter().map(|s| self.finish_stmt(s, sc)).collect::<Result<Vec<_>, _>>();
        sc.frames.pop();
        Ok(Block { stmts: r?, span: b.span })
    }

    fn as_block(&mut self, s: Stmt, sc: &mut Scopes) -> Result<Box<Stmt>, SpecError> {
        let span = s.span;
        let b = match s.kind {
            StmtKind::Block(b) => b,
            _ => Block::new(vec![s]),
        };
        Ok(Box::new(Stmt::with_span(StmtKind::Block(self.finish_block(b, sc)?), span)))
    }

    fn finish_stmt(&mut self, s: Stmt, sc: &mut Scopes) -> Result<Stmt, SpecError> {
        let span = s.span;
        let kind = match s.kind {
            StmtKind::VarDecl { ty, at, decls } => {
                let (te, tv) = self.finish_type(&ty, span)?;
                let mut out = Vec::new();
                for d in decls {
                    let dim = d.dim.map(|e| self.finish_expr(e, sc)).transpose()?.map(|(e, _)| e);
                    let init = d.init.map(|e| self.finish_expr(e, sc)).transpose()?.map(|(e, _)| e);
                    let ty = match dim.as_ref().map(|e| &e.kind) {
                        Some(ExprKind::Int(n)) => TypeValue::Array(Box::new(tv.clone()), *n as usize),
                        Some(_) => TypeValue::Pointer(Box::new(tv.clone())),
                        None => tv.clone(),
                    };
                    sc.declare(&d.name, ty);
                    out.push(Declarator { dim, init, ..d });
                }
                StmtKind::VarDecl { ty: te, at, decls: out }
            }
            StmtKind::Expr(e) => StmtKind::Expr(self.finish_expr(e, sc)?.0),
            StmtKind::Block(b) => StmtKind::Block(self.finish_block(b, sc)?),
            StmtKind::If { at, cond, then, else_at, els } => {
                let cond = self.finish_expr(cond, sc)?.0;
                let then = self.as_block(*then, sc)?;
                let els = els.map(|e| self.as_block(*e, sc)).transpose()?;
                StmtKind::If { at, cond, then, else_at, els }
            }
            StmtKind::For { at, init, cond, step, body } => {
                sc.frames.push(HashMap::new());
                let r = (|| {
                    let init = init.map(|i| self.finish_stmt(*i, sc).map(Box::new)).transpose()?;
                    let cond = cond.map(|e| self.finish_expr(e, sc)).transpose()?.map(|(e, _)| e);
                    let step = step.map(|e| self.finish_expr(e, sc)).transpose()?.map(|(e, _)| e);
                    let body = self.as_block(*body, sc)?;
                    Ok::<_, SpecError>(StmtKind::For { at, init, cond, step, body })
                })();
                sc.frames.pop();
                r?
            }
            StmtKind::Switch { at, scrutinee, arms } => {
                let scrutinee = self.finish_expr(scrutinee, sc)?.0;
                let mut out = Vec::new();
                for arm in arms {
                    let labels = arm
                        .labels
                        .into_iter()
                        .map(|l| match l {
                            CaseLabel::Case(e) => self.finish_expr(e, sc).map(|(e, _)| CaseLabel::Case(e)),
                            CaseLabel::Default => Ok(CaseLabel::Default),
                        })
                        .collect::<Result<_, _>>()?;
                    let body = self.finish_block(Block::new(arm.body), sc)?.stmts;
                    out.push(SwitchArm { labels, body });
                }
                StmtKind::Switch { at, scrutinee, arms: out }
            }
            StmtKind::Return(e) => {
                let e = match e {
                    Some(e) => {
                        let (e, t) = self.finish_expr(e, sc)?;
                        sc.returns.push((t, span));
                        Some(e)
                    }
                    None => {
                        sc.returns.push((TypeValue::VOID, span));
                        None
                    }
                };
                StmtKind::Return(e)
            }
        };
        Ok(Stmt::with_span(kind, span))
    }

    fn finish_expr(&mut self, e: Expr, sc: &mut Scopes) -> Result<(Expr, TypeValue), SpecError> {
        let span = e.span;
        let bx = Box::new;
        let (kind, ty) = match e.kind {
            ExprKind::Int(v) => (ExprKind::Int(v), TypeValue::INT),
            ExprKind::Float(v) => (ExprKind::Float(v), TypeValue::FLOAT),
            ExprKind::Bool(v) => (ExprKind::Bool(v), TypeValue::BOOL),
            ExprKind::Str(s) => (ExprKind::Str(s), TypeValue::VOID),
            ExprKind::Var(n) => {
                let t = sc.lookup(&n).cloned().ok_or_else(|| EvalError::Unbound { span, name: n.clone() })?;
                (ExprKind::Var(n), t)
            }
            ExprKind::Type(t) => (ExprKind::Type(self.finish_type(&t, span)?.0), TypeValue::Typename),
            ExprKind::Unary { op, expr } => {
                let (x, t) = self.finish_expr(*expr, sc)?;
                let t = if op == UnOp::Not { TypeValue::BOOL } else { t };
                (ExprKind::Unary { op, expr: bx(x) }, t)
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let (l, lt) = self.finish_expr(*lhs, sc)?;
                let (r, rt) = self.finish_expr(*rhs, sc)?;
                let t = if op.is_comparison() || op.is_logical() {
                    TypeValue::BOOL
                } else {
                    join_types(&lt, &rt)
                        .ok_or_else(|| mismatch(span, format!("operator `{}` applied to {lt} and {rt}", op.symbol())))?
                };
                (ExprKind::Binary { op, lhs: bx(l), rhs: bx(r) }, t)
            }
            ExprKind::Assign { op, target, value } => {
                let (t, tt) = self.finish_expr(*target, sc)?;
                let (v, _) = self.finish_expr(*value, sc)?;
                (ExprKind::Assign { op, target: bx(t), value: bx(v) }, tt)
            }
            ExprKind::Cond { cond, then, els } => {
                let (c, _) = self.finish_expr(*cond, sc)?;
                let (t, tt) = self.finish_expr(*then, sc)?;
                let (f, ft) = self.finish_expr(*els, sc)?;
                let ty = join_types(&tt, &ft).ok_or_else(|| mismatch(span, format!("conditional branches of types {tt} and {ft}")))?;
                (ExprKind::Cond { cond: bx(c), then: bx(t), els: bx(f) }, ty)
            }
            ExprKind::Call { callee, at, static_args, args } => {
                let mut fargs = Vec::new();
                let mut types = Vec::new();
                for a in args {
                    let (a, t) = self.finish_expr(a, sc)?;
                    fargs.push(a);
                    types.push(t);
                }
                let (name, ty) = self.resolve_call(&callee, static_args, &types, span)?;
                (ExprKind::Call { callee: name, at, static_args: None, args: fargs }, ty)
            }
            ExprKind::Index { base, index } => {
                let (b, bt) = self.finish_expr(*base, sc)?;
                let (i, _) = self.finish_expr(*index, sc)?;
                let t = bt.element().cloned().ok_or_else(|| mismatch(span, format!("cannot index a value of type {bt}")))?;
                (ExprKind::Index { base: bx(b), index: bx(i) }, t)
            }
            ExprKind::Member { base, name } => {
                let (b, bt) = self.finish_expr(*base, sc)?;
                let t = match &bt {
                    TypeValue::Class { name: cls, .. } => self.member_type(cls, &name),
                    _ => None,
                }
                .ok_or_else(|| mismatch(span, format!("{bt} has no member `{name}`")))?;
                (ExprKind::Member { base: bx(b), name }, t)
            }
            ExprKind::ArrayLit(items) => {
                let mut out = Vec::new();
                let mut elem: Option<TypeValue> = None;
                for i in items {
                    let (x, t) = self.finish_expr(i, sc)?;
                    elem = Some(match elem {
                        None => t,
                        Some(a) => join_types(&a, &t).unwrap_or(a),
                    });
                    out.push(x);
                }
                let n = out.len();
                (ExprKind::ArrayLit(out), TypeValue::Array(Box::new(elem.unwrap_or(TypeValue::INT)), n))
            }
        };
        Ok((Expr::with_span(kind, span), ty))
    }

    fn member_type(&self, class: &str, member: &str) -> Option<TypeValue> {
        self.items.iter().find_map(|i| match i {
            ResidualItem::Class(c) if c.name == class => {
                c.members.iter().find(|(n, _)| n == member).map(|(_, t)| t.clone())
            }
            _ => None,
        })
    }

    fn return_type(&self, name: &str) -> TypeValue {
        self.items
            .iter()
            .find_map(|i| match i {
                ResidualItem::Function(f) if f.name == name => Some(f.ret.clone()),
                _ => None,
            })
            .unwrap_or(TypeValue::VOID)
    }

    /// Residual callee and result type of a call in raw residual code.
    fn resolve_call(
        &mut self,
        callee: &str,
        static_args: Option<Vec<Expr>>,
        types: &[TypeValue],
        span: Span,
    ) -> Result<(String, TypeValue), SpecError> {
        let defs = self.m.functions_named(callee).to_vec();
        if let Some(sa) = static_args {
            let mut vals: Vec<Value> = Vec::new();
            for a in &sa {
                vals.push(self.m.eval_expr(a)?);
            }
            let def = defs
                .iter()
                .find(|d| d.is_two_level() && d.static_arity() == vals.len() && d.params.len() == types.len())
                .ok_or_else(|| EvalError::UnknownFunction { span, name: callee.to_string() })?;
            let name = self.specialize_function(def, vals, span)?;
            let t = self.return_type(&name);
            return Ok((name, t));
        }
        if defs.is_empty() && crate::staging::is_builtin(callee) {
            return Ok((callee.to_string(), TypeValue::VOID));
        }
        if let Some(def) = defs.iter().find(|d| !d.is_two_level() && d.params.len() == types.len()) {
            let name = self.specialize_function(def, Vec::new(), span)?;
            let t = self.return_type(&name);
            return Ok((name, t));
        }
        for def in defs.iter().filter(|d| d.params.len() == types.len()) {
            if let Some(sargs) = infer_static_args(def, types) {
                let name = self.specialize_function(def, sargs, span)?;
                let t = self.return_type(&name);
                return Ok((name, t));
            }
        }
        Err(EvalError::UnknownFunction { span, name: callee.to_string() }.into())
    }
}
