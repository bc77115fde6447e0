use std::collections::HashMap;

use crate::syntax::*;

/// Structural equality of two functions up to consistent renaming of their
/// parameters and local variables. Function names are ignored.
pub fn alpha_equivalent(a: &FunctionDef, b: &FunctionDef) -> bool {
    let mut r = Renaming::default();
    if a.ret != b.ret || a.params.len() != b.params.len() {
        return false;
    }
    r.push();
    for (p, q) in a.params.iter().zip(&b.params) {
        if p.ty != q.ty || p.at != q.at {
            return false;
        }
        r.bind(&p.name, &q.name);
    }
    r.block(&a.body, &b.body)
}

#[derive(Default)]
struct Renaming {
    frames: Vec<(HashMap<String, String>, HashMap<String, String>)>,
}

impl Renaming {
    fn push(&mut self) {
        self.frames.push(Default::default());
    }

    fn pop(&mut self) {
        self.frames.pop();
    }

    fn bind(&mut self, a: &str, b: &str) {
        let f = self.frames.last_mut().expect("frame");
        f.0.insert(a.to_string(), b.to_string());
        f.1.insert(b.to_string(), a.to_string());
    }

    fn var(&self, a: &str, b: &str) -> bool {
        let fwd = self.frames.iter().rev().find_map(|f| f.0.get(a));
        let back = self.frames.iter().rev().find_map(|f| f.1.get(b));
        match (fwd, back) {
            (Some(x), Some(y)) => x == b && y == a,
            (None, None) => a == b,
            _ => false,
        }
    }

    fn scoped(&mut self, f: impl FnOnce(&mut Self) -> bool) -> bool {
        self.push();
        let r = f(self);
        self.pop();
        r
    }

    fn block(&mut self, a: &Block, b: &Block) -> bool {
        self.scoped(|r| r.stmts(&a.stmts, &b.stmts))
    }

    fn stmts(&mut self, a: &[Stmt], b: &[Stmt]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| self.stmt(x, y))
    }

    fn opt_expr(&self, a: &Option<Expr>, b: &Option<Expr>) -> bool {
        match (a, b) {
            (Some(x), Some(y)) => self.expr(x, y),
            (None, None) => true,
            _ => false,
        }
    }

    fn stmt(&mut self, a: &Stmt, b: &Stmt) -> bool {
        use StmtKind as S;
        match (&a.kind, &b.kind) {
            (S::VarDecl { ty: t1, at: a1, decls: d1 }, S::VarDecl { ty: t2, at: a2, decls: d2 }) => {
                if t1 != t2 || a1 != a2 || d1.len() != d2.len() {
                    return false;
                }
                for (x, y) in d1.iter().zip(d2) {
                    if !self.opt_expr(&x.dim, &y.dim) || !self.opt_expr(&x.init, &y.init) {
                        return false;
                    }
                    self.bind(&x.name, &y.name);
                }
                true
            }
            (S::Expr(x), S::Expr(y)) => self.expr(x, y),
            (S::Block(x), S::Block(y)) => self.block(x, y),
            (S::If { at: a1, cond: c1, then: t1, else_at: e1, els: l1 }, S::If { at: a2, cond: c2, then: t2, else_at: e2, els: l2 }) => {
                a1 == a2
                    && e1 == e2
                    && self.expr(c1, c2)
                    && self.scoped(|r| r.stmt(t1, t2))
                    && match (l1, l2) {
                        (Some(x), Some(y)) => self.scoped(|r| r.stmt(x, y)),
                        (None, None) => true,
                        _ => false,
                    }
            }
            (S::For { at: a1, init: i1, cond: c1, step: s1, body: b1 }, S::For { at: a2, init: i2, cond: c2, step: s2, body: b2 }) => {
                a1 == a2
                    && self.scoped(|r| {
                        (match (i1, i2) {
                            (Some(x), Some(y)) => r.stmt(x, y),
                            (None, None) => true,
                            _ => false,
                        }) && r.opt_expr(c1, c2)
                            && r.opt_expr(s1, s2)
                            && r.stmt(b1, b2)
                    })
            }
            (S::Switch { at: a1, scrutinee: x1, arms: r1 }, S::Switch { at: a2, scrutinee: x2, arms: r2 }) => {
                a1 == a2
                    && self.expr(x1, x2)
                    && r1.len() == r2.len()
                    && r1.iter().zip(r2).all(|(p, q)| {
                        p.labels.len() == q.labels.len()
                            && p.labels.iter().zip(&q.labels).all(|l| match l {
                                (CaseLabel::Case(x), CaseLabel::Case(y)) => self.expr(x, y),
                                (CaseLabel::Default, CaseLabel::Default) => true,
                                _ => false,
                            })
                            && self.scoped(|r| r.stmts(&p.body, &q.body))
                    })
            }
            (S::Return(x), S::Return(y)) => self.opt_expr(x, y),
            _ => false,
        }
    }

    fn expr(&self, a: &Expr, b: &Expr) -> bool {
        use ExprKind as E;
        match (&a.kind, &b.kind) {
            (E::Var(x), E::Var(y)) => self.var(x, y),
            (E::Unary { op: o1, expr: x }, E::Unary { op: o2, expr: y }) => o1 == o2 && self.expr(x, y),
            (E::Binary { op: o1, lhs: l1, rhs: r1 }, E::Binary { op: o2, lhs: l2, rhs: r2 }) => {
                o1 == o2 && self.expr(l1, l2) && self.expr(r1, r2)
            }
            (E::Assign { op: o1, target: t1, value: v1 }, E::Assign { op: o2, target: t2, value: v2 }) => {
                o1 == o2 && self.expr(t1, t2) && self.expr(v1, v2)
            }
            (E::Cond { cond: c1, then: t1, els: e1 }, E::Cond { cond: c2, then: t2, els: e2 }) => {
                self.expr(c1, c2) && self.expr(t1, t2) && self.expr(e1, e2)
            }
            (E::Call { callee: f1, at: a1, static_args: s1, args: x1 }, E::Call { callee: f2, at: a2, static_args: s2, args: x2 }) => {
                f1 == f2 && a1 == a2 && s1 == s2 && x1.len() == x2.len() && x1.iter().zip(x2).all(|(x, y)| self.expr(x, y))
            }
            (E::Index { base: b1, index: i1 }, E::Index { base: b2, index: i2 }) => self.expr(b1, b2) && self.expr(i1, i2),
            (E::Member { base: b1, name: n1 }, E::Member { base: b2, name: n2 }) => n1 == n2 && self.expr(b1, b2),
            (E::ArrayLit(x), E::ArrayLit(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| self.expr(p, q)),
            (x, y) => x == y,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(src: &str) -> FunctionDef {
        match parse(src).unwrap().decls.remove(0) {
            Decl::Function(f) => f,
            _ => unreachable!(),
        }
    }

    #[test]
    fn renaming() {
        let a = f("int g(int x) { int y = x; return y * 2; }");
        let b = f("int h(int p) { int q = p; return q * 2; }");
        let c = f("int h(int p) { int q = p; return p * 2; }");
        assert!(alpha_equivalent(&a, &b));
        assert!(!alpha_equivalent(&a, &c));
        let d = f("int g(int x) { return z; }");
        let e = f("int g(int z) { return z; }");
        assert!(!alpha_equivalent(&d, &e));
    }
}
