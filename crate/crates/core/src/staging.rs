//! Binding-time checking.
//!
//! Stages are verified, never inferred. For `levels` = L the global scope
//! and function bodies default to stage L-1; an annotation of k `@` puts a
//! declaration at stage default-k. Literals sit at stage 0 and lift freely.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::syntax::*;

pub type Stage = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StageErrorKind {
    DynamicToStaticFlow,
    StaticMutationUnderDynamicControl,
    StaticControlWithDynamicGuard,
    AnnotationTooDeep,
    AnnotationMismatch,
    TypenameNotStatic,
    UnboundVariable,
    UnknownCallee,
    DynamicCodeInStaticConstructor,
}

impl fmt::Display for StageErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
#[error("{kind}: {message}")]
pub struct StageError {
    pub kind: StageErrorKind,
    pub span: Span,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Symbol {
    pub name: String,
    pub stage: Stage,
    pub ty: TypeExpr,
    pub span: Span,
}

/// A program whose every statement and expression carries a stage.
#[derive(Clone, Debug)]
pub struct StagedAST {
    pub program: Program,
    pub levels: u32,
    stages: Vec<Stage>,
    /// Every declared variable and parameter in source order.
    pub symbols: Vec<Symbol>,
}

impl StagedAST {
    pub fn stage(&self, id: NodeId) -> Stage {
        self.stages[id.index()]
    }

    pub fn node_count(&self) -> usize {
        self.stages.len()
    }

    /// Stage of the residual, i.e. run time.
    pub fn dynamic_stage(&self) -> Stage {
        self.levels - 1
    }
}

/// Names usable as callees without a definition.
pub fn is_builtin(name: &str) -> bool {
    name == "Catat_error" || crate::flatten::is_builder(name)
}

pub fn check_stages(program: &Program, levels: u32) -> Result<StagedAST, StageError> {
    assert!(levels >= 1, "at least one level is required");
    let mut program = program.clone();
    let count = renumber(&mut program);
    let mut c = Checker::new(&program, levels, count);
    c.check_program()?;
    let Checker { stages, symbols, .. } = c;
    Ok(StagedAST { stages, symbols, levels, program })
}

/// Stage of `expr` given the stages of its free variables, in a two-level
/// setting with no functions in scope.
pub fn stage_of(expr: &Expr, env: &HashMap<String, Stage>) -> Result<Stage, StageError> {
    let mut e = expr.clone();
    let mut next = 0;
    renumber_expr(&mut e, &mut next);
    let empty = Program::default();
    let mut c = Checker::new(&empty, 2, next as usize);
    c.scopes[0] = env.clone();
    c.expr(&e)
}

fn renumber(p: &mut Program) -> usize {
    let mut next = 0u32;
    for d in &mut p.decls {
        match d {
            Decl::Function(f) => {
                for prm in f.static_params.iter_mut().flatten().chain(f.params.iter_mut()) {
                    renumber_type(&mut prm.ty, &mut next);
                }
                if let Some(r) = &mut f.ret {
                    renumber_type(r, &mut next);
                }
                renumber_block(&mut f.body, &mut next);
            }
            Decl::Class(c) => {
                for prm in c.static_params.iter_mut().flatten() {
                    renumber_type(&mut prm.ty, &mut next);
                }
                for m in &mut c.members {
                    renumber_type(&mut m.ty, &mut next);
                }
                for b in c.static_ctor.iter_mut().chain(c.ctor.iter_mut()) {
                    renumber_block(b, &mut next);
                }
            }
            Decl::Stmt(s) => renumber_stmt(s, &mut next),
        }
    }
    next as usize
}

fn renumber_block(b: &mut Block, next: &mut u32) {
    for s in &mut b.stmts {
        renumber_stmt(s, next);
    }
}

fn renumber_stmt(s: &mut Stmt, next: &mut u32) {
    s.id = NodeId(*next);
    *next += 1;
    match &mut s.kind {
        StmtKind::VarDecl { ty, decls, .. } => {
            renumber_type(ty, next);
            for d in decls {
                if let Some(e) = &mut d.dim {
                    renumber_expr(e, next);
                }
                if let Some(e) = &mut d.init {
                    renumber_expr(e, next);
                }
            }
        }
        StmtKind::Expr(e) => renumber_expr(e, next),
        StmtKind::Block(b) => renumber_block(b, next),
        StmtKind::If { cond, then, els, .. } => {
            renumber_expr(cond, next);
            renumber_stmt(then, next);
            if let Some(e) = els {
                renumber_stmt(e, next);
            }
        }
        StmtKind::For { init, cond, step, body, .. } => {
            if let Some(i) = init {
                renumber_stmt(i, next);
            }
            for e in cond.iter_mut().chain(step.iter_mut()) {
                renumber_expr(e, next);
            }
            renumber_stmt(body, next);
        }
        StmtKind::Switch { scrutinee, arms, .. } => {
            renumber_expr(scrutinee, next);
            for arm in arms {
                for l in &mut arm.labels {
                    if let CaseLabel::Case(e) = l {
                        renumber_expr(e, next);
                    }
                }
                for s in &mut arm.body {
                    renumber_stmt(s, next);
                }
            }
        }
        StmtKind::Return(e) => {
            if let Some(e) = e {
                renumber_expr(e, next);
            }
        }
    }
}

fn renumber_type(t: &mut TypeExpr, next: &mut u32) {
    match t {
        TypeExpr::ClassApp { args, .. } => args.iter_mut().for_each(|a| renumber_expr(a, next)),
        TypeExpr::Pointer(t) => renumber_type(t, next),
        TypeExpr::Array(t, n) => {
            renumber_type(t, next);
            renumber_expr(n, next);
        }
        _ => {}
    }
}

fn renumber_expr(e: &mut Expr, next: &mut u32) {
    e.id = NodeId(*next);
    *next += 1;
    match &mut e.kind {
        ExprKind::Unary { expr, .. } => renumber_expr(expr, next),
        ExprKind::Binary { lhs, rhs, .. } => {
            renumber_expr(lhs, next);
            renumber_expr(rhs, next);
        }
        ExprKind::Assign { target, value, .. } => {
            renumber_expr(target, next);
            renumber_expr(value, next);
        }
        ExprKind::Cond { cond, then, els } => {
            renumber_expr(cond, next);
            renumber_expr(then, next);
            renumber_expr(els, next);
        }
        ExprKind::Call { static_args, args, .. } => {
            for a in static_args.iter_mut().flatten().chain(args.iter_mut()) {
                renumber_expr(a, next);
            }
        }
        ExprKind::Index { base, index } => {
            renumber_expr(base, next);
            renumber_expr(index, next);
        }
        ExprKind::Member { base, .. } => renumber_expr(base, next),
        ExprKind::ArrayLit(items) => items.iter_mut().for_each(|a| renumber_expr(a, next)),
        ExprKind::Type(t) => renumber_type(t, next),
        _ => {}
    }
}

fn err(kind: StageErrorKind, span: Span, message: impl Into<String>) -> StageError {
    StageError { kind, span, message: message.into() }
}

struct Checker<'a> {
    levels: u32,
    functions: HashMap<&'a str, Vec<&'a FunctionDef>>,
    classes: HashMap<&'a str, &'a ClassDef>,
    program: &'a Program,
    scopes: Vec<HashMap<String, Stage>>,
    /// Stage of declarations without annotations in the current scope.
    default: Stage,
    /// Stage of the innermost enclosing control construct.
    ctrl: Stage,
    /// Induction variables of the `for@` whose step is being checked.
    exempt: Vec<String>,
    /// Inside a stage-polymorphic function, where typename variables may
    /// sit at the default stage.
    relax_r5: bool,
    in_static_ctor: bool,
    stages: Vec<Stage>,
    symbols: Vec<Symbol>,
}

impl<'a> Checker<'a> {
    fn new(program: &'a Program, levels: u32, count: usize) -> Self {
        let mut functions: HashMap<&str, Vec<&FunctionDef>> = HashMap::new();
        let mut classes = HashMap::new();
        let mut globals = HashMap::new();
        for d in &program.decls {
            match d {
                Decl::Function(f) => functions.entry(f.name.as_str()).or_default().push(f),
                Decl::Class(c) => {
                    classes.insert(c.name.as_str(), c);
                }
                Decl::Stmt(Stmt { kind: StmtKind::VarDecl { at, decls, .. }, .. }) => {
                    for d in decls {
                        globals.insert(d.name.clone(), (levels - 1).saturating_sub(*at as u32));
                    }
                }
                Decl::Stmt(_) => {}
            }
        }
        Checker {
            levels,
            functions,
            classes,
            program,
            scopes: vec![globals],
            default: levels - 1,
            ctrl: 0,
            exempt: Vec::new(),
            relax_r5: levels == 1,
            in_static_ctor: false,
            stages: vec![0; count],
            symbols: Vec::new(),
        }
    }

    fn dynamic(&self) -> Stage {
        self.levels - 1
    }

    fn lookup(&self, name: &str) -> Option<Stage> {
        self.scopes.iter().rev().find_map(|s| s.get(name).copied())
    }

    fn bind(&mut self, name: &str, stage: Stage, ty: &TypeExpr, span: Span) {
        self.scopes.last_mut().unwrap().insert(name.to_string(), stage);
        self.symbols.push(Symbol { name: name.to_string(), stage, ty: ty.clone(), span });
    }

    fn annotated(&self, base: Stage, at: u8, span: Span) -> Result<Stage, StageError> {
        // Everything in a static constructor is already stage 0; the
        // annotations there are redundant but allowed.
        if self.in_static_ctor {
            return Ok(0);
        }
        base.checked_sub(at as u32).ok_or_else(|| {
            err(
                StageErrorKind::AnnotationTooDeep,
                span,
                format!("{at} `@` annotation(s) in a scope of default stage {base}"),
            )
        })
    }

    fn check_typename(&self, ty: &TypeExpr, stage: Stage, name: &str, span: Span) -> Result<(), StageError> {
        if *ty == TypeExpr::Typename && stage >= self.dynamic() && !self.relax_r5 {
            return Err(err(
                StageErrorKind::TypenameNotStatic,
                span,
                format!("type variable `{name}` must be static; declare it `typename@`"),
            ));
        }
        Ok(())
    }

    fn check_program(&mut self) -> Result<(), StageError> {
        for d in &self.program.decls {
            match d {
                Decl::Function(f) => self.function(f)?,
                Decl::Class(c) => self.class(c)?,
                Decl::Stmt(s) => {
                    self.stmt(s)?;
                }
            }
        }
        Ok(())
    }

    /// Runs `f` with a fresh local scope stack over the globals.
    fn in_unit<R>(&mut self, f: impl FnOnce(&mut Self) -> R) -> R {
        let saved_scopes = self.scopes.split_off(1);
        let saved = (self.default, self.ctrl, self.relax_r5, self.in_static_ctor);
        self.scopes.push(HashMap::new());
        let r = f(self);
        self.scopes.truncate(1);
        self.scopes.extend(saved_scopes);
        (self.default, self.ctrl, self.relax_r5, self.in_static_ctor) = saved;
        r
    }

    fn params(&mut self, params: &[Param], require_static: bool) -> Result<(), StageError> {
        for p in params {
            if require_static && p.at == 0 {
                return Err(err(
                    StageErrorKind::AnnotationMismatch,
                    p.span,
                    format!("static parameter `{}` needs an `@` annotation", p.name),
                ));
            }
            let stage = self.annotated(self.dynamic(), p.at, p.span)?;
            self.type_stage(&p.ty, stage, p.span)?;
            self.check_typename(&p.ty, stage, &p.name, p.span)?;
            self.bind(&p.name, stage, &p.ty, p.span);
        }
        Ok(())
    }

    fn function(&mut self, f: &FunctionDef) -> Result<(), StageError> {
        self.in_unit(|c| {
            c.default = c.dynamic();
            c.ctrl = 0;
            c.relax_r5 |= f.is_stage_polymorphic();
            if let Some(sp) = &f.static_params {
                c.params(sp, c.levels > 1)?;
            }
            c.params(&f.params, false)?;
            if let Some(r) = &f.ret {
                c.type_stage(r, c.dynamic(), f.span)?;
            }
            c.block(&f.body)
        })
    }

    fn class(&mut self, cls: &ClassDef) -> Result<(), StageError> {
        self.in_unit(|c| {
            c.default = c.dynamic();
            c.ctrl = 0;
            if let Some(sp) = &cls.static_params {
                c.params(sp, c.levels > 1)?;
            }
            for m in &cls.members {
                let stage = c.annotated(c.dynamic(), m.at, m.span)?;
                c.check_typename(&m.ty, stage, &m.name, m.span)?;
                c.bind(&m.name, stage, &m.ty, m.span);
            }
            for m in &cls.members {
                let stage = c.lookup(&m.name).unwrap_or(0);
                c.type_stage(&m.ty, stage, m.span)?;
            }
            if let Some(b) = &cls.static_ctor {
                c.in_static_ctor = true;
                c.default = 0;
                c.block(b)?;
                c.in_static_ctor = false;
                c.default = c.dynamic();
            }
            if let Some(b) = &cls.ctor {
                c.block(b)?;
            }
            Ok(())
        })
    }

    fn block(&mut self, b: &Block) -> Result<(), StageError> {
        self.scopes.push(HashMap::new());
        let r = b.stmts.iter().try_for_each(|s| self.stmt(s).map(|_| ()));
        self.scopes.pop();
        r
    }

    fn record(&mut self, id: NodeId, stage: Stage) -> Stage {
        if let Some(slot) = self.stages.get_mut(id.index()) {
            *slot = stage;
        }
        stage
    }

    /// Stage of a full expression in a position that must not exceed `limit`.
    fn expr_within(&mut self, e: &Expr, limit: Stage, kind: StageErrorKind, what: &str) -> Result<Stage, StageError> {
        let s = self.expr(e)?;
        if s > limit {
            return Err(err(kind, e.span, format!("{what} is at stage {s} but must be available at stage {limit}")));
        }
        Ok(s)
    }

    fn top_expr(&mut self, e: &Expr) -> Result<Stage, StageError> {
        let s = self.expr(e)?;
        if self.in_static_ctor && s > 0 {
            return Err(err(
                StageErrorKind::DynamicCodeInStaticConstructor,
                e.span,
                "static constructors may only contain static code",
            ));
        }
        Ok(s)
    }

    fn stmt(&mut self, s: &Stmt) -> Result<Stage, StageError> {
        let stage = match &s.kind {
            StmtKind::VarDecl { ty, at, decls } => {
                let stage = self.annotated(self.default, *at, s.span)?;
                self.type_stage(ty, stage, s.span)?;
                for d in decls {
                    self.check_typename(ty, stage, &d.name, d.span)?;
                    if let Some(n) = &d.dim {
                        self.expr_within(n, stage, StageErrorKind::DynamicToStaticFlow, "array length")?;
                    }
                    if let Some(init) = &d.init {
                        let what = format!("initializer of `{}`", d.name);
                        self.expr_within(init, stage, StageErrorKind::DynamicToStaticFlow, &what)?;
                    }
                    self.bind(&d.name, stage, ty, d.span);
                }
                if self.in_static_ctor && stage > 0 {
                    return Err(err(
                        StageErrorKind::DynamicCodeInStaticConstructor,
                        s.span,
                        "static constructors may only declare static variables",
                    ));
                }
                stage
            }
            StmtKind::Expr(e) => self.top_expr(e)?,
            StmtKind::Block(b) => {
                self.block(b)?;
                self.default
            }
            StmtKind::If { at, cond, then, else_at, els } => {
                if els.is_some() && at != else_at {
                    return Err(err(
                        StageErrorKind::AnnotationMismatch,
                        s.span,
                        "`if` and `else` must carry the same annotation",
                    ));
                }
                let region = self.annotated(self.default, *at, s.span)?;
                self.guard(cond, *at, region)?;
                let saved = self.ctrl;
                self.ctrl = self.ctrl.max(region);
                let r = (|| {
                    self.branch(then)?;
                    if let Some(e) = els {
                        self.branch(e)?;
                    }
                    Ok(())
                })();
                self.ctrl = saved;
                r?;
                region
            }
            StmtKind::For { at, init, cond, step, body } => {
                let region = self.annotated(self.default, *at, s.span)?;
                self.scopes.push(HashMap::new());
                let r = self.for_loop(*at, region, init.as_deref(), cond.as_ref(), step.as_ref(), body);
                self.scopes.pop();
                r?;
                region
            }
            StmtKind::Switch { at, scrutinee, arms } => {
                let region = self.annotated(self.default, *at, s.span)?;
                self.guard(scrutinee, *at, region)?;
                for arm in arms {
                    for l in &arm.labels {
                        if let CaseLabel::Case(e) = l {
                            self.expr_within(e, 0, StageErrorKind::StaticControlWithDynamicGuard, "case label")?;
                        }
                    }
                }
                let saved = self.ctrl;
                self.ctrl = self.ctrl.max(region);
                let r = arms.iter().try_for_each(|arm| {
                    self.scopes.push(HashMap::new());
                    let r = arm.body.iter().try_for_each(|s| self.stmt(s).map(|_| ()));
                    self.scopes.pop();
                    r
                });
                self.ctrl = saved;
                r?;
                region
            }
            StmtKind::Return(e) => match e {
                Some(e) => self.top_expr(e)?,
                None => self.default,
            },
        };
        Ok(self.record(s.id, stage))
    }

    fn branch(&mut self, s: &Stmt) -> Result<(), StageError> {
        self.scopes.push(HashMap::new());
        let r = self.stmt(s);
        self.scopes.pop();
        r.map(|_| ())
    }

    /// R2: the guard of an annotated construct must be known at its stage.
    fn guard(&mut self, cond: &Expr, at: u8, region: Stage) -> Result<(), StageError> {
        let s = self.top_expr(cond)?;
        if at > 0 && s > region {
            return Err(err(
                StageErrorKind::StaticControlWithDynamicGuard,
                cond.span,
                format!("guard is at stage {s} but the construct runs at stage {region}"),
            ));
        }
        Ok(())
    }

    fn for_loop(
        &mut self,
        at: u8,
        region: Stage,
        init: Option<&Stmt>,
        cond: Option<&Expr>,
        step: Option<&Expr>,
        body: &Stmt,
    ) -> Result<(), StageError> {
        let mut induction = Vec::new();
        if let Some(i) = init {
            self.stmt(i)?;
            match &i.kind {
                StmtKind::VarDecl { decls, .. } => induction.extend(decls.iter().map(|d| d.name.clone())),
                StmtKind::Expr(Expr { kind: ExprKind::Assign { target, .. }, .. }) => {
                    if let ExprKind::Var(n) = &target.kind {
                        induction.push(n.clone());
                    }
                }
                _ => {}
            }
        }
        if let Some(c) = cond {
            self.guard(c, at, region)?;
        }
        let saved = self.ctrl;
        self.ctrl = self.ctrl.max(region);
        let r = (|| {
            self.branch(body)?;
            if let Some(st) = step {
                if at > 0 {
                    self.exempt = induction;
                }
                let r = self.top_expr(st);
                self.exempt.clear();
                r?;
            }
            Ok(())
        })();
        self.ctrl = saved;
        r
    }

    fn type_stage(&mut self, t: &TypeExpr, limit: Stage, span: Span) -> Result<Stage, StageError> {
        match t {
            TypeExpr::Named(n) => match self.lookup(n) {
                Some(s) => {
                    if s > limit {
                        return Err(err(
                            StageErrorKind::DynamicToStaticFlow,
                            span,
                            format!("type `{n}` is at stage {s}, later than its use at stage {limit}"),
                        ));
                    }
                    Ok(s)
                }
                None if self.classes.contains_key(n.as_str()) => Ok(0),
                None => Err(err(StageErrorKind::UnboundVariable, span, format!("unknown type `{n}`"))),
            },
            TypeExpr::ClassApp { name, args } => {
                if !self.classes.contains_key(name.as_str()) {
                    return Err(err(StageErrorKind::UnboundVariable, span, format!("unknown class `{name}`")));
                }
                for a in args {
                    self.expr_within(a, limit.min(self.dynamic().saturating_sub(1)), StageErrorKind::DynamicToStaticFlow, "class argument")?;
                }
                Ok(0)
            }
            TypeExpr::Pointer(t) => self.type_stage(t, limit, span),
            TypeExpr::Array(t, n) => {
                let s = self.type_stage(t, limit, span)?;
                let ns = self.expr_within(n, limit, StageErrorKind::DynamicToStaticFlow, "array length")?;
                Ok(s.max(ns))
            }
            TypeExpr::Prim(_) | TypeExpr::Typename | TypeExpr::Code => Ok(0),
        }
    }

    /// Stage of the variable an assignable expression writes.
    fn target(&mut self, target: &Expr) -> Result<(Stage, String), StageError> {
        match &target.kind {
            ExprKind::Var(n) => {
                let s = self
                    .lookup(n)
                    .ok_or_else(|| err(StageErrorKind::UnboundVariable, target.span, format!("unbound variable `{n}`")))?;
                Ok((self.record(target.id, s), n.clone()))
            }
            ExprKind::Index { base, index } => {
                let (s, n) = self.target(base)?;
                self.expr_within(index, s, StageErrorKind::DynamicToStaticFlow, "subscript of a static array")?;
                Ok((self.record(target.id, s), n))
            }
            ExprKind::Member { base, .. } => {
                let (s, n) = self.target(base)?;
                Ok((self.record(target.id, s), n))
            }
            _ => Ok((self.expr(target)?, String::new())),
        }
    }

    fn mutation(&mut self, target: &Expr, span: Span) -> Result<Stage, StageError> {
        let (s, name) = self.target(target)?;
        if s < self.ctrl && !self.exempt.contains(&name) {
            return Err(err(
                StageErrorKind::StaticMutationUnderDynamicControl,
                span,
                format!("static variable `{name}` assigned under control of stage {}", self.ctrl),
            ));
        }
        Ok(s)
    }

    fn expr(&mut self, e: &Expr) -> Result<Stage, StageError> {
        let stage = match &e.kind {
            ExprKind::Int(_) | ExprKind::Float(_) | ExprKind::Bool(_) | ExprKind::Str(_) => 0,
            ExprKind::Var(n) => match self.lookup(n) {
                Some(s) => s,
                None if self.classes.contains_key(n.as_str()) => 0,
                None => return Err(err(StageErrorKind::UnboundVariable, e.span, format!("unbound variable `{n}`"))),
            },
            ExprKind::Type(t) => self.type_stage(t, self.dynamic(), e.span)?,
            ExprKind::Unary { op, expr } if op.is_mutating() => self.mutation(expr, e.span)?,
            ExprKind::Unary { expr, .. } => self.expr(expr)?,
            ExprKind::Binary { lhs, rhs, .. } => self.expr(lhs)?.max(self.expr(rhs)?),
            ExprKind::Assign { target, value, .. } => {
                let v = self.expr(value)?;
                let t = self.mutation(target, e.span)?;
                if v > t {
                    return Err(err(
                        StageErrorKind::DynamicToStaticFlow,
                        e.span,
                        format!("value at stage {v} assigned to `{}` at stage {t}", emit::expr_str(target)),
                    ));
                }
                t
            }
            ExprKind::Cond { cond, then, els } => self.expr(cond)?.max(self.expr(then)?).max(self.expr(els)?),
            ExprKind::Call { callee, at, static_args, args } => self.call(e, callee, *at, static_args.as_deref(), args)?,
            ExprKind::Index { base, index } => self.expr(base)?.max(self.expr(index)?),
            ExprKind::Member { base, .. } => self.expr(base)?,
            ExprKind::ArrayLit(items) => {
                let mut s = 0;
                for i in items {
                    s = s.max(self.expr(i)?);
                }
                s
            }
        };
        Ok(self.record(e.id, stage))
    }

    fn call(&mut self, e: &Expr, callee: &str, at: u8, static_args: Option<&[Expr]>, args: &[Expr]) -> Result<Stage, StageError> {
        let known = self.functions.contains_key(callee) || self.classes.contains_key(callee) || is_builtin(callee);
        if !known {
            return Err(err(StageErrorKind::UnknownCallee, e.span, format!("no function or class named `{callee}`")));
        }
        if self.classes.contains_key(callee) {
            let limit = self.dynamic().saturating_sub(1);
            for a in static_args.into_iter().flatten().chain(args) {
                self.expr_within(a, limit, StageErrorKind::DynamicToStaticFlow, "class argument")?;
            }
            return Ok(0);
        }
        if at > 0 {
            let stage = self.annotated(self.default, at, e.span)?;
            for a in static_args.into_iter().flatten().chain(args) {
                self.expr_within(a, stage, StageErrorKind::DynamicToStaticFlow, "argument of a static call")?;
            }
            return Ok(stage);
        }
        let stage = self.default;
        if let Some(sa) = static_args {
            for a in sa {
                self.expr_within(a, stage.saturating_sub(1), StageErrorKind::DynamicToStaticFlow, "static argument")?;
            }
        }
        let mut s = 0;
        for a in args {
            s = s.max(self.expr(a)?);
        }
        if stage > 0 && static_args.is_none() {
            let static_only = self.functions.get(callee).is_some_and(|defs| {
                defs.iter().all(|d| !d.is_two_level() && d.params.iter().any(|p| p.ty == TypeExpr::Typename))
            });
            if static_only {
                return Err(err(
                    StageErrorKind::TypenameNotStatic,
                    e.span,
                    format!("`{callee}` takes type arguments and can only be called statically, as `{callee}@(...)`"),
                ));
            }
        }
        if is_builtin(callee) && !self.functions.contains_key(callee) {
            return Ok(s);
        }
        Ok(stage.max(s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(src: &str) -> Result<StagedAST, StageError> {
        check_stages(&parse(src).unwrap(), 2)
    }

    fn kind(src: &str) -> StageErrorKind {
        check(src).unwrap_err().kind
    }

    #[test]
    fn cross_stage_persistence() {
        assert!(check("{ int@ i; int j; j = i; }").is_ok());
        assert_eq!(kind("{ int@ i; int j; i = j; }"), StageErrorKind::DynamicToStaticFlow);
    }

    #[test]
    fn single_static_declaration() {
        let staged = check("{ int@ i = 0; }").unwrap();
        assert_eq!(staged.symbols[0].stage, 0);
    }

    #[test]
    fn congruence() {
        assert_eq!(
            kind("{ int j; if (j > 0) { int@ k = 1; k = 2; } }"),
            StageErrorKind::StaticMutationUnderDynamicControl
        );
        assert!(check("{ int j; if (j > 0) { int@ k = 1; } }").is_ok());
    }

    #[test]
    fn static_guards() {
        assert_eq!(kind("{ int j; if@ (j > 0) { j = 1; } }"), StageErrorKind::StaticControlWithDynamicGuard);
        assert_eq!(kind("{ int n; for@ (int@ i = 0; i < n; ++i) { } }"), StageErrorKind::StaticControlWithDynamicGuard);
        assert!(check("int@ N = 5, Nfact = 1; for@ (int@ i=1; i < N; ++i) Nfact *= i;").is_ok());
    }

    #[test]
    fn static_loop_inside_dynamic_loop() {
        assert!(check("{ int s = 0; for (int j = 0; j < 3; ++j) { for@ (int@ i = 0; i < 2; ++i) s += i; } }").is_ok());
        assert_eq!(
            kind("{ int@ t = 0; for (int j = 0; j < 3; ++j) { for@ (int@ i = 0; i < 2; ++i) t += i; } }"),
            StageErrorKind::StaticMutationUnderDynamicControl
        );
    }

    #[test]
    fn annotation_depth() {
        assert_eq!(kind("int@@ x = 1;"), StageErrorKind::AnnotationTooDeep);
        assert!(check_stages(&parse("int@@ x = 1; int@ y = x; int z = y;").unwrap(), 3).is_ok());
    }

    #[test]
    fn stage_of_examples() {
        let env: HashMap<String, Stage> = [("i".into(), 0), ("x".into(), 1), ("N".into(), 0)].into();
        assert_eq!(stage_of(&parse_expr("5").unwrap(), &env).unwrap(), 0);
        assert_eq!(stage_of(&parse_expr("i * x").unwrap(), &env).unwrap(), 1);
        assert_eq!(stage_of(&parse_expr("N * 2").unwrap(), &env).unwrap(), 0);
        assert_eq!(stage_of(&parse_expr("q").unwrap(), &env).unwrap_err().kind, StageErrorKind::UnboundVariable);
    }

    #[test]
    fn typename_must_be_static() {
        assert_eq!(kind("function f(typename@ T)(T x) { typename U = T; return x; }"), StageErrorKind::TypenameNotStatic);
        assert!(check("function average_type(typename T) { switch(T) { case int: return float; default: return T; } }").is_ok());
        assert_eq!(
            kind("function average_type(typename T) { return T; } float y = 0; typename@ S = average_type(int);"),
            StageErrorKind::TypenameNotStatic
        );
    }

    #[test]
    fn functions_and_calls() {
        let src = "function dot(int@ N, typename@ T)(T* a, T* b) {
            T result = 0;
            for@ (int@ i=0; i < N; ++i) result += a[i]*b[i];
            return result; }";
        let staged = check(src).unwrap();
        assert!(staged.symbols.iter().any(|s| s.name == "N" && s.stage == 0));
        assert!(staged.symbols.iter().any(|s| s.name == "a" && s.stage == 1));
        assert_eq!(kind("int@ r = nope@(2);"), StageErrorKind::UnknownCallee);
        let pow = "function pow(int X, int N) { int result = 1; for (int i = 0; i < N; ++i) result *= X; return result; }";
        assert!(check(&format!("{pow} int result1 = pow(2,3); int@ result2 = pow@(2,3);")).is_ok());
        assert_eq!(kind(&format!("{pow} int@ r = pow(2,3);")), StageErrorKind::DynamicToStaticFlow);
    }

    #[test]
    fn static_constructor_is_static() {
        let ok = "class C(int@ n) { public: C@() { k = n * 2; } private: static int@ k; int data[k]; }";
        assert!(check(ok).is_ok());
        let bad = "class C(int@ n) { public: C@() { v = 1; } private: int v; }";
        assert_eq!(kind(bad), StageErrorKind::DynamicCodeInStaticConstructor);
    }

    #[test]
    fn residual_programs_are_single_stage() {
        let src = "float pow__3(float x) { float result = 1; result *= x; result *= x; result *= x; return result; }";
        let staged = check_stages(&parse(src).unwrap(), 1).unwrap();
        assert!((0..staged.node_count()).all(|i| staged.stage(NodeId(i as u32)) == 0));
    }
}
