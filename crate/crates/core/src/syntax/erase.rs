//! Annotation removal.

use super::ast::*;

/// Copy of `e` with every annotation removed.
pub fn strip(e: &Expr) -> Expr {
    Eraser { merge: false }.expr(e)
}

pub fn strip_stmt(s: &Stmt) -> Stmt {
    Eraser { merge: false }.stmt(s)
}

pub fn strip_type(t: &TypeExpr) -> TypeExpr {
    Eraser { merge: false }.ty(t)
}

/// The single-level reading of a program: annotations removed, static
/// parameters moved to the front of the ordinary list and two-list calls
/// `f(s)(d)` turned into `f(s, d)`. Classes keep their static parameters.
pub fn erase(program: &Program) -> Program {
    let e = Eraser { merge: true };
    let decls = program
        .decls
        .iter()
        .map(|d| match d {
            Decl::Function(f) => Decl::Function(e.function(f)),
            Decl::Class(c) => Decl::Class(e.class(c)),
            Decl::Stmt(s) => Decl::Stmt(e.stmt(s)),
        })
        .collect();
    Program { decls }
}

struct Eraser {
    merge: bool,
}

impl Eraser {
    fn param(&self, p: &Param) -> Param {
        Param { name: p.name.clone(), ty: self.ty(&p.ty), at: 0, span: p.span }
    }

    fn function(&self, f: &FunctionDef) -> FunctionDef {
        let params = f.static_params.iter().flatten().chain(&f.params).map(|p| self.param(p)).collect();
        FunctionDef {
            name: f.name.clone(),
            static_params: None,
            params,
            ret: f.ret.as_ref().map(|t| self.ty(t)),
            body: self.block(&f.body),
            span: f.span,
        }
    }

    fn class(&self, c: &ClassDef) -> ClassDef {
        ClassDef {
            name: c.name.clone(),
            static_params: c.static_params.as_ref().map(|ps| ps.iter().map(|p| self.param(p)).collect()),
            members: c
                .members
                .iter()
                .map(|m| Member { ty: self.ty(&m.ty), at: 0, ..m.clone() })
                .collect(),
            static_ctor: c.static_ctor.as_ref().map(|b| self.block(b)),
            ctor: c.ctor.as_ref().map(|b| self.block(b)),
            span: c.span,
        }
    }

    fn ty(&self, t: &TypeExpr) -> TypeExpr {
        match t {
            TypeExpr::ClassApp { name, args } => TypeExpr::ClassApp { name: name.clone(), args: self.exprs(args) },
            TypeExpr::Pointer(e) => TypeExpr::Pointer(Box::new(self.ty(e))),
            TypeExpr::Array(e, n) => TypeExpr::Array(Box::new(self.ty(e)), Box::new(self.expr(n))),
            other => other.clone(),
        }
    }

    fn exprs(&self, es: &[Expr]) -> Vec<Expr> {
        es.iter().map(|e| self.expr(e)).collect()
    }

    fn expr(&self, e: &Expr) -> Expr {
        let b = |x: &Expr| Box::new(self.expr(x));
        let kind = match &e.kind {
            ExprKind::Type(t) => ExprKind::Type(self.ty(t)),
            ExprKind::Unary { op, expr } => ExprKind::Unary { op: *op, expr: b(expr) },
            ExprKind::Binary { op, lhs, rhs } => ExprKind::Binary { op: *op, lhs: b(lhs), rhs: b(rhs) },
            ExprKind::Assign { op, target, value } => ExprKind::Assign { op: *op, target: b(target), value: b(value) },
            ExprKind::Cond { cond, then, els } => ExprKind::Cond { cond: b(cond), then: b(then), els: b(els) },
            ExprKind::Call { callee, static_args: Some(sa), args, .. } if self.merge => ExprKind::Call {
                callee: callee.clone(),
                at: 0,
                static_args: None,
                args: sa.iter().chain(args).map(|x| self.expr(x)).collect(),
            },
            ExprKind::Call { callee, static_args, args, .. } => ExprKind::Call {
                callee: callee.clone(),
                at: 0,
                static_args: static_args.as_ref().map(|sa| self.exprs(sa)),
                args: self.exprs(args),
            },
            ExprKind::Index { base, index } => ExprKind::Index { base: b(base), index: b(index) },
            ExprKind::Member { base, name } => ExprKind::Member { base: b(base), name: name.clone() },
            ExprKind::ArrayLit(items) => ExprKind::ArrayLit(self.exprs(items)),
            other => other.clone(),
        };
        Expr::with_span(kind, e.span)
    }

    fn block(&self, b: &Block) -> Block {
        Block { stmts: b.stmts.iter().map(|s| self.stmt(s)).collect(), span: b.span }
    }

    fn stmt(&self, s: &Stmt) -> Stmt {
        let kind = match &s.kind {
            StmtKind::VarDecl { ty, decls, .. } => StmtKind::VarDecl {
                ty: self.ty(ty),
                at: 0,
                decls: decls
                    .iter()
                    .map(|d| Declarator {
                        name: d.name.clone(),
                        dim: d.dim.as_ref().map(|x| self.expr(x)),
                        init: d.init.as_ref().map(|x| self.expr(x)),
                        span: d.span,
                    })
                    .collect(),
            },
            StmtKind::Expr(e) => StmtKind::Expr(self.expr(e)),
            StmtKind::Block(b) => StmtKind::Block(self.block(b)),
            StmtKind::If { cond, then, els, .. } => StmtKind::If {
                at: 0,
                cond: self.expr(cond),
                then: Box::new(self.stmt(then)),
                else_at: 0,
                els: els.as_ref().map(|e| Box::new(self.stmt(e))),
            },
            StmtKind::For { init, cond, step, body, .. } => StmtKind::For {
                at: 0,
                init: init.as_ref().map(|i| Box::new(self.stmt(i))),
                cond: cond.as_ref().map(|x| self.expr(x)),
                step: step.as_ref().map(|x| self.expr(x)),
                body: Box::new(self.stmt(body)),
            },
            StmtKind::Switch { scrutinee, arms, .. } => StmtKind::Switch {
                at: 0,
                scrutinee: self.expr(scrutinee),
                arms: arms
                    .iter()
                    .map(|a| SwitchArm {
                        labels: a
                            .labels
                            .iter()
                            .map(|l| match l {
                                CaseLabel::Case(e) => CaseLabel::Case(self.expr(e)),
                                CaseLabel::Default => CaseLabel::Default,
                            })
                            .collect(),
                        body: a.body.iter().map(|s| self.stmt(s)).collect(),
                    })
                    .collect(),
            },
            StmtKind::Return(e) => StmtKind::Return(e.as_ref().map(|x| self.expr(x))),
        };
        Stmt::with_span(kind, s.span)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{emit_program, parse};

    #[test]
    fn merges_parameter_lists() {
        let p = parse("function pow(int@ N)(float x) { float r = 1; for@ (int@ i = 0; i < N; ++i) r *= x; return r; } float y = pow(3)(2.0);").unwrap();
        let text = emit_program(&erase(&p));
        assert!(!text.contains('@'));
        assert!(text.contains("function pow(int N, float x)"), "{text}");
        assert!(text.contains("pow(3, 2.0)"), "{text}");
    }
}
