//! Turns a two-level function into a single-level generator: static code
//! is kept, dynamic code becomes builder calls that assemble the residual.

use crate::specializer::SpecError;
use crate::staging::StagedAST;
use crate::syntax::*;

/// Generator for `def`, which must come from `staged.program`. It takes
/// the static parameters and returns the residual function as code.
pub fn flatten_function(staged: &StagedAST, def: &FunctionDef) -> Result<FunctionDef, SpecError> {
    let mut g = Gen { staged, next: 0 };
    let mut lambda = vec![string(&def.name)];
    for p in &def.params {
        lambda.push(call("make_param", vec![type_value(&p.ty), string(&p.name)]));
    }
    let mut body = vec![
        code_decl("__fn", call("make_lambda", lambda)),
        code_decl("__b0", call("body", vec![Expr::var("__fn")])),
    ];
    if !g.stmts(&def.body.stmts, "__b0", false, &mut body)? {
        body.push(Stmt::new(StmtKind::Return(Some(Expr::var("__fn")))));
    }
    let static_params = def
        .static_params
        .iter()
        .flatten()
        .map(|p| Param { name: p.name.clone(), ty: strip_type(&p.ty), at: 0, span: p.span })
        .collect();
    Ok(FunctionDef {
        name: format!("{}__gen", def.name),
        static_params: None,
        params: static_params,
        ret: Some(TypeExpr::Code),
        body: Block::new(body),
        span: def.span,
    })
}

struct Gen<'a> {
    staged: &'a StagedAST,
    next: usize,
}

fn string(s: &str) -> Expr {
    Expr::new(ExprKind::Str(s.to_string()))
}

fn call(name: &str, args: Vec<Expr>) -> Expr {
    Expr::new(ExprKind::Call { callee: name.to_string(), at: 0, static_args: None, args })
}

fn expr_stmt(e: Expr) -> Stmt {
    Stmt::new(StmtKind::Expr(e))
}

fn append(block: &str, item: Expr) -> Stmt {
    expr_stmt(call("append", vec![Expr::var(block), item]))
}

fn code_decl(name: &str, init: Expr) -> Stmt {
    let d = Declarator { name: name.to_string(), dim: None, init: Some(init), span: Span::default() };
    Stmt::new(StmtKind::VarDecl { ty: TypeExpr::Code, at: 0, decls: vec![d] })
}

fn block(stmts: Vec<Stmt>) -> Stmt {
    Stmt::new(StmtKind::Block(Block::new(stmts)))
}

/// Expression evaluating to the type `t` denotes.
fn type_value(t: &TypeExpr) -> Expr {
    match t {
        TypeExpr::Prim(_) | TypeExpr::Typename | TypeExpr::Code => Expr::new(ExprKind::Type(t.clone())),
        TypeExpr::Named(n) => Expr::var(n),
        TypeExpr::ClassApp { name, args } => call(name, args.iter().map(strip).collect()),
        TypeExpr::Pointer(e) => call("ptr", vec![type_value(e)]),
        TypeExpr::Array(e, n) => call("array_of", vec![type_value(e), strip(n)]),
    }
}

fn unsupported(span: Span, message: &str) -> SpecError {
    SpecError::FlattenUnsupported { span, message: message.to_string() }
}

impl Gen<'_> {
    fn tmp(&mut self, prefix: &str) -> String {
        self.next += 1;
        format!("__{prefix}{}", self.next)
    }

    fn is_static(&self, e: &Expr) -> bool {
        self.staged.stage(e.id) == 0
    }

    fn stmt_is_static(&self, s: &Stmt) -> bool {
        let here = self.staged.stage(s.id) == 0;
        match &s.kind {
            StmtKind::VarDecl { .. } | StmtKind::Expr(_) => here,
            StmtKind::Block(b) => b.stmts.iter().all(|s| self.stmt_is_static(s)),
            StmtKind::If { then, els, .. } => {
                here && self.stmt_is_static(then) && els.as_ref().is_none_or(|e| self.stmt_is_static(e))
            }
            StmtKind::For { init, body, .. } => {
                here && init.as_ref().is_none_or(|i| self.stmt_is_static(i)) && self.stmt_is_static(body)
            }
            StmtKind::Switch { arms, .. } => here && arms.iter().all(|a| a.body.iter().all(|s| self.stmt_is_static(s))),
            StmtKind::Return(_) => false,
        }
    }

    fn declares_dynamic(&self, stmts: &[Stmt]) -> bool {
        stmts.iter().any(|s| matches!(s.kind, StmtKind::VarDecl { .. }) && self.staged.stage(s.id) != 0)
    }

    /// Translates `stmts`, appending residual code to the block variable
    /// `cur`. Returns true when the generator returns unconditionally.
    fn stmts(&mut self, stmts: &[Stmt], cur: &str, dynctl: bool, out: &mut Vec<Stmt>) -> Result<bool, SpecError> {
        for s in stmts {
            if self.stmt(s, cur, dynctl, out)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Branch of a static construct, spliced into `cur` unless it declares
    /// residual variables.
    fn branch(&mut self, stmts: &[Stmt], cur: &str, dynctl: bool) -> Result<Stmt, SpecError> {
        let mut out = Vec::new();
        if self.declares_dynamic(stmts) {
            let b = self.tmp("b");
            out.push(code_decl(&b, call("make_block", vec![])));
            out.push(append(cur, Expr::var(&b)));
            self.stmts(stmts, &b, dynctl, &mut out)?;
        } else {
            self.stmts(stmts, cur, dynctl, &mut out)?;
        }
        Ok(block(out))
    }

    /// Body of a dynamic construct, reached through `accessor(handle)`.
    fn sub(&mut self, s: &Stmt, handle: &str, accessor: &str) -> Result<Stmt, SpecError> {
        let stmts = match &s.kind {
            StmtKind::Block(b) => b.stmts.as_slice(),
            _ => std::slice::from_ref(s),
        };
        let b = self.tmp("b");
        let mut out = vec![code_decl(&b, call(accessor, vec![Expr::var(handle)]))];
        self.stmts(stmts, &b, true, &mut out)?;
        Ok(block(out))
    }

    fn stmt(&mut self, s: &Stmt, cur: &str, dynctl: bool, out: &mut Vec<Stmt>) -> Result<bool, SpecError> {
        if self.stmt_is_static(s) {
            out.push(strip_stmt(s));
            return Ok(false);
        }
        let dynamic = self.staged.stage(s.id) != 0;
        match &s.kind {
            StmtKind::VarDecl { ty, decls, .. } => {
                for d in decls {
                    out.push(append(cur, self.vardecl(ty, d, s.span)?));
                }
            }
            StmtKind::Expr(e) => out.push(append(cur, self.expr(e)?)),
            StmtKind::Block(b) => {
                let name = self.tmp("b");
                let mut inner = vec![code_decl(&name, call("make_block", vec![])), append(cur, Expr::var(&name))];
                let done = self.stmts(&b.stmts, &name, dynctl, &mut inner)?;
                out.push(block(inner));
                return Ok(done);
            }
            StmtKind::If { cond, then, els, .. } if !dynamic => {
                let stmts = |s: &Stmt| match &s.kind {
                    StmtKind::Block(b) => b.stmts.clone(),
                    _ => vec![s.clone()],
                };
                let then = self.branch(&stmts(then), cur, dynctl)?;
                let els = els.as_ref().map(|e| self.branch(&stmts(e), cur, dynctl)).transpose()?;
                out.push(Stmt::new(StmtKind::If { at: 0, cond: strip(cond), then: Box::new(then), else_at: 0, els: els.map(Box::new) }));
            }
            StmtKind::If { cond, then, els, .. } => {
                let h = self.tmp("i");
                let mut inner = vec![code_decl(&h, call("make_if", vec![self.expr(cond)?])), append(cur, Expr::var(&h))];
                inner.push(self.sub(then, &h, "body")?);
                if let Some(e) = els {
                    inner.push(self.sub(e, &h, "else_body")?);
                }
                out.push(block(inner));
            }
            StmtKind::For { init, cond, step, body, .. } if !dynamic => {
                let stmts = match &body.kind {
                    StmtKind::Block(b) => b.stmts.clone(),
                    _ => vec![(**body).clone()],
                };
                let body = self.branch(&stmts, cur, dynctl)?;
                out.push(Stmt::new(StmtKind::For {
                    at: 0,
                    init: init.as_ref().map(|i| Box::new(strip_stmt(i))),
                    cond: cond.as_ref().map(strip),
                    step: step.as_ref().map(strip),
                    body: Box::new(body),
                }));
            }
            StmtKind::For { init, cond, step, body, .. } => {
                let mut inner = Vec::new();
                let empty = || call("make_block", vec![]);
                let init = match init {
                    Some(i) if self.stmt_is_static(i) => {
                        inner.push(strip_stmt(i));
                        empty()
                    }
                    Some(i) => match &i.kind {
                        StmtKind::VarDecl { ty, decls, .. } if decls.len() == 1 => self.vardecl(ty, &decls[0], i.span)?,
                        StmtKind::Expr(e) => self.expr(e)?,
                        _ => return Err(unsupported(i.span, "loop initializer declaring several variables")),
                    },
                    None => empty(),
                };
                let cond = match cond {
                    Some(c) => self.expr(c)?,
                    None => empty(),
                };
                let step = match step {
                    Some(c) => self.expr(c)?,
                    None => empty(),
                };
                let h = self.tmp("f");
                inner.push(code_decl(&h, call("make_for", vec![init, cond, step])));
                inner.push(append(cur, Expr::var(&h)));
                inner.push(self.sub(body, &h, "body")?);
                out.push(block(inner));
            }
            StmtKind::Switch { scrutinee, arms, .. } if !dynamic => {
                let mut garms = Vec::new();
                for a in arms {
                    let labels = a
                        .labels
                        .iter()
                        .map(|l| match l {
                            CaseLabel::Case(e) => CaseLabel::Case(strip(e)),
                            CaseLabel::Default => CaseLabel::Default,
                        })
                        .collect();
                    garms.push(SwitchArm { labels, body: vec![self.branch(&a.body, cur, dynctl)?] });
                }
                out.push(Stmt::new(StmtKind::Switch { at: 0, scrutinee: strip(scrutinee), arms: garms }));
            }
            StmtKind::Switch { .. } => return Err(unsupported(s.span, "dynamic switch")),
            StmtKind::Return(e) => {
                let args = e.as_ref().map(|e| self.expr(e)).transpose()?.into_iter().collect();
                out.push(append(cur, call("make_return", args)));
                if !dynctl {
                    out.push(Stmt::new(StmtKind::Return(Some(Expr::var("__fn")))));
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    fn vardecl(&mut self, ty: &TypeExpr, d: &Declarator, span: Span) -> Result<Expr, SpecError> {
        let mut t = type_value(ty);
        if let Some(n) = &d.dim {
            if !self.is_static(n) {
                return Err(unsupported(span, "array length computed at run time"));
            }
            t = call("array_of", vec![t, strip(n)]);
        }
        let mut args = vec![t, string(&d.name)];
        if let Some(init) = &d.init {
            args.push(self.expr(init)?);
        }
        Ok(call("make_vardecl", args))
    }

    /// Generator expression whose value is the residual form of `e`.
    fn expr(&mut self, e: &Expr) -> Result<Expr, SpecError> {
        if self.is_static(e) {
            return Ok(strip(e));
        }
        Ok(match &e.kind {
            ExprKind::Var(n) => call("make_varref", vec![string(n)]),
            ExprKind::Unary { op, expr } => {
                let builder = if op.is_postfix() { "make_postfix" } else { "make_unop" };
                call(builder, vec![string(op.symbol()), self.expr(expr)?])
            }
            ExprKind::Binary { op, lhs, rhs } => call("make_op", vec![string(op.symbol()), self.expr(lhs)?, self.expr(rhs)?]),
            ExprKind::Assign { op, target, value } => {
                call("make_op", vec![string(op.symbol()), self.expr(target)?, self.expr(value)?])
            }
            ExprKind::Cond { cond, then, els } => call("make_cond", vec![self.expr(cond)?, self.expr(then)?, self.expr(els)?]),
            ExprKind::Call { callee, static_args, args, .. } => {
                let k = static_args.as_ref().map_or(-1, |sa| sa.len() as i64);
                let mut v = vec![string(callee), Expr::int(k)];
                v.extend(static_args.iter().flatten().map(strip));
                for a in args {
                    v.push(self.expr(a)?);
                }
                call("make_call", v)
            }
            ExprKind::Index { base, index } => call("make_subscript", vec![self.expr(base)?, self.expr(index)?]),
            ExprKind::Member { base, name } => call("make_member", vec![self.expr(base)?, string(name)]),
            ExprKind::ArrayLit(items) => call("make_array", items.iter().map(|i| self.expr(i)).collect::<Result<_, _>>()?),
            ExprKind::Type(t) => type_value(t),
            ExprKind::Int(_) | ExprKind::Float(_) | ExprKind::Bool(_) | ExprKind::Str(_) => strip(e),
        })
    }
}
