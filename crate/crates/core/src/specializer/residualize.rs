//! Direct residualization: static constructs run on the machine, dynamic
//! ones are copied with static subterms replaced by their values.

use crate::staticeval::{truthy, EvalError, TypeValue, Value};
use crate::syntax::*;

use super::{lift, lift_static_arg, type_expr, Raw, SpecError, Specializer};

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum RFlow {
    Normal,
    /// A return was emitted outside dynamic control; the rest is dead.
    Returned,
}

impl<'p> Specializer<'p> {
    fn is_static_expr(&self, e: &Expr) -> bool {
        self.staged.stage(e.id) == 0
    }

    /// True when `s` leaves nothing behind in the residual.
    pub(crate) fn stmt_is_static(&self, s: &Stmt) -> bool {
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

    /// True when some statement directly in `stmts` declares a residual variable.
    pub(crate) fn declares_dynamic(&self, stmts: &[Stmt]) -> bool {
        stmts.iter().any(|s| matches!(s.kind, StmtKind::VarDecl { .. }) && self.staged.stage(s.id) != 0)
    }

    pub(crate) fn residualize_function(&mut self, def: &'p FunctionDef, args: &[Value]) -> Result<Raw, SpecError> {
        let sparams = def.static_params.as_deref().unwrap_or(&[]);
        self.with_statics(sparams, args, |s| {
            let mut params = Vec::new();
            for p in &def.params {
                let ty = s.m.eval_type(&p.ty)?;
                params.push(Param { name: p.name.clone(), ty: type_expr(&ty, p.span)?, at: p.at, span: p.span });
            }
            let ret = match &def.ret {
                Some(t) => Some(s.m.eval_type(t)?),
                None => None,
            };
            let body = s.residualize_body(&def.body)?;
            Ok(Raw { params, body, ret })
        })
    }

    pub(crate) fn residualize_body(&mut self, b: &Block) -> Result<Block, SpecError> {
        self.m.env.push();
        let mut out = Vec::new();
        let r = self.rstmts(&b.stmts, &mut out, false);
        self.m.env.pop();
        r?;
        Ok(Block { stmts: out, span: b.span })
    }

    fn rstmts(&mut self, stmts: &[Stmt], out: &mut Vec<Stmt>, dynctl: bool) -> Result<RFlow, SpecError> {
        for s in stmts {
            if self.rstmt(s, out, dynctl)? == RFlow::Returned {
                return Ok(RFlow::Returned);
            }
        }
        Ok(RFlow::Normal)
    }

    /// Residualizes one statement. `dynctl` is set under dynamic control,
    /// where returns do not end residualization.
    pub(crate) fn rstmt(&mut self, s: &Stmt, out: &mut Vec<Stmt>, dynctl: bool) -> Result<RFlow, SpecError> {
        if self.stmt_is_static(s) {
            self.static_instance_check(s)?;
            self.m.exec_stmt(s)?;
            return Ok(RFlow::Normal);
        }
        let dynamic = self.staged.stage(s.id) != 0;
        match &s.kind {
            StmtKind::VarDecl { ty, at, decls } => {
                let tv = self.m.eval_type(ty)?;
                let te = type_expr(&tv, s.span)?;
                for d in decls {
                    let dim = d.dim.as_ref().map(|e| self.rexpr(e)).transpose()?;
                    let init = d.init.as_ref().map(|e| self.rexpr(e)).transpose()?;
                    let decl = Declarator { name: d.name.clone(), dim, init, span: d.span };
                    out.push(Stmt::with_span(StmtKind::VarDecl { ty: te.clone(), at: *at, decls: vec![decl] }, s.span));
                }
                Ok(RFlow::Normal)
            }
            StmtKind::Expr(e) => {
                out.push(Stmt::with_span(StmtKind::Expr(self.rexpr(e)?), s.span));
                Ok(RFlow::Normal)
            }
            StmtKind::Block(b) => {
                self.m.env.push();
                let mut inner = Vec::new();
                let r = self.rstmts(&b.stmts, &mut inner, dynctl);
                self.m.env.pop();
                out.push(Stmt::with_span(StmtKind::Block(Block { stmts: inner, span: b.span }), s.span));
                r
            }
            StmtKind::If { cond, then, els, .. } if !dynamic => {
                let c = self.m.eval_expr(cond)?;
                if truthy(&c, cond.span)? {
                    self.rbranch(then, out, dynctl)
                } else if let Some(e) = els {
                    self.rbranch(e, out, dynctl)
                } else {
                    Ok(RFlow::Normal)
                }
            }
            StmtKind::If { at, cond, then, else_at, els } => {
                let cond = self.rexpr(cond)?;
                let then = Box::new(self.rsub(then)?);
                let els = els.as_ref().map(|e| self.rsub(e).map(Box::new)).transpose()?;
                out.push(Stmt::with_span(StmtKind::If { at: *at, cond, then, else_at: *else_at, els }, s.span));
                Ok(RFlow::Normal)
            }
            StmtKind::For { init, cond, step, body, .. } if !dynamic => {
                self.m.env.push();
                let r = self.unroll(s.span, init.as_deref(), cond.as_ref(), step.as_ref(), body, out, dynctl);
                self.m.env.pop();
                r
            }
            StmtKind::For { at, init, cond, step, body } => {
                self.m.env.push();
                let r = (|| {
                    let init = match init {
                        Some(i) if self.stmt_is_static(i) => {
                            self.m.exec_stmt(i)?;
                            None
                        }
                        Some(i) => {
                            let mut v = Vec::new();
                            self.rstmt(i, &mut v, true)?;
                            (v.len() == 1).then(|| Box::new(v.remove(0)))
                        }
                        None => None,
                    };
                    let cond = cond.as_ref().map(|c| self.rexpr(c)).transpose()?;
                    let step = step.as_ref().map(|c| self.rexpr(c)).transpose()?;
                    let body = Box::new(self.rsub(body)?);
                    Ok::<_, SpecError>(StmtKind::For { at: *at, init, cond, step, body })
                })();
                self.m.env.pop();
                out.push(Stmt::with_span(r?, s.span));
                Ok(RFlow::Normal)
            }
            StmtKind::Switch { scrutinee, arms, .. } if !dynamic => {
                let v = self.m.eval_expr(scrutinee)?;
                match self.m.select_arm(&v, arms)? {
                    Some(arm) => self.rstmts_scoped(&arm.body, out, dynctl),
                    None => Ok(RFlow::Normal),
                }
            }
            StmtKind::Switch { at, scrutinee, arms } => {
                let scrutinee = self.rexpr(scrutinee)?;
                let mut rarms = Vec::new();
                for arm in arms {
                    let labels = arm
                        .labels
                        .iter()
                        .map(|l| match l {
                            CaseLabel::Case(e) => self.rexpr(e).map(CaseLabel::Case),
                            CaseLabel::Default => Ok(CaseLabel::Default),
                        })
                        .collect::<Result<_, _>>()?;
                    self.m.env.push();
                    let mut body = Vec::new();
                    let r = self.rstmts(&arm.body, &mut body, true);
                    self.m.env.pop();
                    r?;
                    rarms.push(SwitchArm { labels, body });
                }
                out.push(Stmt::with_span(StmtKind::Switch { at: *at, scrutinee, arms: rarms }, s.span));
                Ok(RFlow::Normal)
            }
            StmtKind::Return(e) => {
                let e = e.as_ref().map(|e| self.rexpr(e)).transpose()?;
                out.push(Stmt::with_span(StmtKind::Return(e), s.span));
                Ok(if dynctl { RFlow::Normal } else { RFlow::Returned })
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn unroll(
        &mut self,
        span: Span,
        init: Option<&Stmt>,
        cond: Option<&Expr>,
        step: Option<&Expr>,
        body: &Stmt,
        out: &mut Vec<Stmt>,
        dynctl: bool,
    ) -> Result<RFlow, SpecError> {
        if let Some(i) = init {
            self.m.exec_stmt(i)?;
        }
        let mut n = 0u64;
        loop {
            if let Some(c) = cond {
                let v = self.m.eval_expr(c)?;
                if !truthy(&v, c.span)? {
                    return Ok(RFlow::Normal);
                }
            }
            n += 1;
            if n > self.m.limits.loop_cap {
                return Err(EvalError::LoopCap { span, cap: self.m.limits.loop_cap }.into());
            }
            if self.rbranch(body, out, dynctl)? == RFlow::Returned {
                return Ok(RFlow::Returned);
            }
            if let Some(s) = step {
                self.m.eval_expr(s)?;
            }
        }
    }

    /// Branch of a static construct: its statements are spliced into `out`
    /// unless they declare residual variables, which keeps them in a block.
    fn rbranch(&mut self, s: &Stmt, out: &mut Vec<Stmt>, dynctl: bool) -> Result<RFlow, SpecError> {
        match &s.kind {
            StmtKind::Block(b) => self.rstmts_scoped(&b.stmts, out, dynctl),
            _ => self.rstmts_scoped(std::slice::from_ref(s), out, dynctl),
        }
    }

    fn rstmts_scoped(&mut self, stmts: &[Stmt], out: &mut Vec<Stmt>, dynctl: bool) -> Result<RFlow, SpecError> {
        self.m.env.push();
        let mut inner = Vec::new();
        let r = self.rstmts(stmts, &mut inner, dynctl);
        self.m.env.pop();
        if self.declares_dynamic(stmts) {
            out.push(Stmt::new(StmtKind::Block(Block::new(inner))));
        } else {
            out.extend(inner);
        }
        r
    }

    /// Body of a dynamic construct, always a block.
    fn rsub(&mut self, s: &Stmt) -> Result<Stmt, SpecError> {
        let stmts = match &s.kind {
            StmtKind::Block(b) => b.stmts.as_slice(),
            _ => std::slice::from_ref(s),
        };
        self.m.env.push();
        let mut inner = Vec::new();
        let r = self.rstmts(stmts, &mut inner, true);
        self.m.env.pop();
        r?;
        Ok(Stmt::with_span(StmtKind::Block(Block::new(inner)), s.span))
    }

    fn static_instance_check(&mut self, s: &Stmt) -> Result<(), SpecError> {
        let StmtKind::VarDecl { ty, .. } = &s.kind else { return Ok(()) };
        if let TypeValue::Class { name, args } = self.m.eval_type(ty)? {
            let Some(cls) = self.m.class(&name) else { return Ok(()) };
            if cls.ctor.is_some() || cls.members.iter().any(|m| !m.is_static && m.at == 0) {
                return Err(SpecError::StaticInstance { span: s.span, class: name });
            }
            self.specialize_class(cls, args, s.span)?;
        }
        Ok(())
    }

    pub(crate) fn rexpr(&mut self, e: &Expr) -> Result<Expr, SpecError> {
        if self.is_static_expr(e) {
            let v = self.m.eval_expr(e)?;
            return Ok(lift(&v, e.span)?);
        }
        let b = |x: Expr| Box::new(x);
        let kind = match &e.kind {
            ExprKind::Var(_) | ExprKind::Int(_) | ExprKind::Float(_) | ExprKind::Bool(_) | ExprKind::Str(_) => {
                e.kind.clone()
            }
            ExprKind::Type(t) => ExprKind::Type(type_expr(&self.m.eval_type(t)?, e.span)?),
            ExprKind::Unary { op, expr } => ExprKind::Unary { op: *op, expr: b(self.rexpr(expr)?) },
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.rexpr(lhs)?;
                ExprKind::Binary { op: *op, lhs: b(l), rhs: b(self.rexpr(rhs)?) }
            }
            ExprKind::Assign { op, target, value } => {
                let t = self.rexpr(target)?;
                ExprKind::Assign { op: *op, target: b(t), value: b(self.rexpr(value)?) }
            }
            ExprKind::Cond { cond, then, els } => {
                let c = self.rexpr(cond)?;
                let t = self.rexpr(then)?;
                ExprKind::Cond { cond: b(c), then: b(t), els: b(self.rexpr(els)?) }
            }
            ExprKind::Call { callee, at, static_args, args } => {
                let static_args = match static_args {
                    Some(sa) => {
                        let mut lifted = Vec::new();
                        for a in sa {
                            let v = self.m.eval_expr(a)?;
                            lifted.push(lift_static_arg(&v, a.span)?);
                        }
                        Some(lifted)
                    }
                    None => None,
                };
                let args = args.iter().map(|a| self.rexpr(a)).collect::<Result<_, _>>()?;
                ExprKind::Call { callee: callee.clone(), at: *at, static_args, args }
            }
            ExprKind::Index { base, index } => {
                let bs = self.rexpr(base)?;
                ExprKind::Index { base: b(bs), index: b(self.rexpr(index)?) }
            }
            ExprKind::Member { base, name } => ExprKind::Member { base: b(self.rexpr(base)?), name: name.clone() },
            ExprKind::ArrayLit(items) => ExprKind::ArrayLit(items.iter().map(|i| self.rexpr(i)).collect::<Result<_, _>>()?),
        };
        Ok(Expr::with_span(kind, e.span))
    }
}
