use std::collections::HashMap;

use crate::syntax::*;

use super::ops::{self, binary, coerce, truthy, values_equal};
use super::{Env, EvalError, Field, TypeValue, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Longest chain of nested calls or specializations.
    pub max_depth: usize,
    /// Iterations allowed per loop execution.
    pub loop_cap: u64,
    /// Statements plus expressions evaluated per run.
    pub step_limit: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_depth: 256, loop_cap: 1_000_000, step_limit: 10_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Flow {
    Normal,
    Return(Value),
}

enum Step {
    Index(i64),
    Field(String),
}

struct Place {
    root: String,
    path: Vec<Step>,
    span: Span,
}

pub struct Machine<'p> {
    functions: HashMap<&'p str, Vec<&'p FunctionDef>>,
    classes: HashMap<&'p str, &'p ClassDef>,
    globals: Vec<&'p Stmt>,
    pub limits: Limits,
    pub steps: u64,
    pub env: Env,
    stack: Vec<String>,
}

impl<'p> Machine<'p> {
    pub fn new(program: &'p Program, limits: Limits) -> Self {
        let mut m = Machine {
            functions: HashMap::new(),
            classes: HashMap::new(),
            globals: Vec::new(),
            limits,
            steps: 0,
            env: Env::default(),
            stack: Vec::new(),
        };
        for d in &program.decls {
            match d {
                Decl::Function(f) => m.functions.entry(f.name.as_str()).or_default().push(f),
                Decl::Class(c) => {
                    m.classes.insert(c.name.as_str(), c);
                }
                Decl::Stmt(s) => m.globals.push(s),
            }
        }
        m
    }

    pub fn functions_named(&self, name: &str) -> &[&'p FunctionDef] {
        self.functions.get(name).map_or(&[], Vec::as_slice)
    }

    pub fn class(&self, name: &str) -> Option<&'p ClassDef> {
        self.classes.get(name).copied()
    }

    /// Names of the calls currently active, outermost first.
    pub fn call_stack(&self) -> &[String] {
        &self.stack
    }

    /// Executes every global statement in order.
    pub fn run_globals(&mut self) -> Result<(), EvalError> {
        for s in self.globals.clone() {
            self.exec_stmt(s)?;
        }
        Ok(())
    }

    pub fn tick(&mut self, span: Span) -> Result<(), EvalError> {
        self.steps += 1;
        if self.steps > self.limits.step_limit {
            return Err(EvalError::StepLimit { span, limit: self.limits.step_limit });
        }
        Ok(())
    }

    // ---- types -------------------------------------------------------

    pub fn eval_type(&mut self, t: &TypeExpr) -> Result<TypeValue, EvalError> {
        Ok(match t {
            TypeExpr::Prim(p) => TypeValue::Prim(*p),
            TypeExpr::Typename => TypeValue::Typename,
            TypeExpr::Code => TypeValue::Code,
            TypeExpr::Named(n) => match self.env.get(n) {
                Some(Value::Type(tv)) => tv.clone(),
                Some(other) => {
                    return Err(EvalError::mismatch(Span::default(), format!("`{n}` holds {}, not a type", other.kind_name())))
                }
                None => match self.class(n) {
                    Some(c) => self.class_type(c, Vec::new(), c.span)?,
                    None => return Err(EvalError::Unbound { span: Span::default(), name: n.clone() }),
                },
            },
            TypeExpr::ClassApp { name, args } => {
                let cls = self
                    .class(name)
                    .ok_or_else(|| EvalError::Unbound { span: Span::default(), name: name.clone() })?;
                let vals = self.eval_list(args)?;
                self.class_type(cls, vals, cls.span)?
            }
            TypeExpr::Pointer(t) => TypeValue::Pointer(Box::new(self.eval_type(t)?)),
            TypeExpr::Array(t, n) => {
                let elem = self.eval_type(t)?;
                let len = self.eval_len(n)?;
                TypeValue::Array(Box::new(elem), len)
            }
        })
    }

    fn eval_len(&mut self, n: &Expr) -> Result<usize, EvalError> {
        match self.eval_expr(n)? {
            Value::Int(v) if v >= 0 => Ok(v as usize),
            other => Err(EvalError::mismatch(n.span, format!("array length must be a non-negative int, got {other}"))),
        }
    }

    /// Checks and coerces class arguments, producing the class's type value.
    pub fn class_type(&mut self, cls: &ClassDef, args: Vec<Value>, span: Span) -> Result<TypeValue, EvalError> {
        let params = cls.static_params.as_deref().unwrap_or(&[]);
        if params.len() != args.len() {
            return Err(EvalError::Arity {
                span,
                message: format!("class `{}` takes {} arguments, got {}", cls.name, params.len(), args.len()),
            });
        }
        let saved = self.env.enter_call();
        let r = (|| {
            let mut out = Vec::with_capacity(args.len());
            for (p, a) in params.iter().zip(args) {
                let ty = self.eval_type(&p.ty)?;
                let v = coerce(a, &ty, p.span)?;
                self.env.declare(&p.name, ty, v.clone());
                out.push(v);
            }
            Ok(out)
        })();
        self.env.leave_call(saved);
        Ok(TypeValue::Class { name: cls.name.clone(), args: r? })
    }

    /// Value a declaration without initializer starts with.
    pub fn default_value(&mut self, ty: &TypeValue, span: Span) -> Result<Value, EvalError> {
        match ty {
            TypeValue::Class { .. } => self.instantiate(ty, span),
            TypeValue::Array(elem, n) if matches!(**elem, TypeValue::Class { .. }) => {
                let items = (0..*n).map(|_| self.instantiate(elem, span)).collect::<Result<_, _>>()?;
                Ok(Value::Array { elem: (**elem).clone(), items })
            }
            _ => Ok(ops::zero(ty).expect("zero exists for non-class types")),
        }
    }

    /// Builds an instance: static members, static constructor, remaining
    /// members, then the run-time constructor.
    pub fn instantiate(&mut self, ty: &TypeValue, span: Span) -> Result<Value, EvalError> {
        let TypeValue::Class { name, args } = ty else {
            return Err(EvalError::mismatch(span, format!("{ty} is not a class")));
        };
        let cls = self.class(name).ok_or_else(|| EvalError::Unbound { span, name: name.clone() })?;
        self.enter_frame(format!("{name}()"), span)?;
        let r = self.construct(cls, args, span);
        self.leave_frame();
        let fields = r?;
        Ok(Value::Instance { class: ty.clone(), fields })
    }

    fn construct(&mut self, cls: &ClassDef, args: &[Value], span: Span) -> Result<Vec<Field>, EvalError> {
        for (p, a) in cls.static_params.iter().flatten().zip(args) {
            let ty = self.eval_type(&p.ty)?;
            self.env.declare(&p.name, ty, a.clone());
        }
        let is_static = |m: &Member| m.is_static || m.at > 0;
        for m in cls.members.iter().filter(|m| is_static(m)) {
            self.declare_member(m, span)?;
        }
        if let Some(b) = &cls.static_ctor {
            self.exec_block(b)?;
        }
        for m in cls.members.iter().filter(|m| !is_static(m)) {
            self.declare_member(m, span)?;
        }
        if let Some(b) = &cls.ctor {
            self.exec_block(b)?;
        }
        Ok(cls
            .members
            .iter()
            .map(|m| {
                let slot = self.env.lookup(&m.name).expect("member declared");
                Field { name: m.name.clone(), ty: slot.ty.clone(), value: slot.value.clone() }
            })
            .collect())
    }

    fn declare_member(&mut self, m: &Member, span: Span) -> Result<(), EvalError> {
        let ty = self.eval_type(&m.ty)?;
        let v = self.default_value(&ty, span)?;
        self.env.declare(&m.name, ty, v);
        Ok(())
    }

    // ---- calls -------------------------------------------------------

    fn enter_frame(&mut self, name: String, span: Span) -> Result<(), EvalError> {
        if self.stack.len() >= self.limits.max_depth {
            let mut chain = self.stack.clone();
            chain.push(name);
            return Err(EvalError::DepthExceeded { span, limit: self.limits.max_depth, chain });
        }
        self.stack.push(name);
        Ok(())
    }

    fn leave_frame(&mut self) {
        self.stack.pop();
    }

    /// Resolves `name` against the given argument shape and calls it.
    pub fn call_function(
        &mut self,
        name: &str,
        static_args: Option<Vec<Value>>,
        args: Vec<Value>,
        span: Span,
    ) -> Result<Value, EvalError> {
        let defs: Vec<&'p FunctionDef> = self.functions_named(name).to_vec();
        if defs.is_empty() {
            if static_args.is_none() {
                if let Some(r) = crate::flatten::call_builtin(self, name, args.clone(), span) {
                    return r;
                }
            }
            return Err(EvalError::UnknownFunction { span, name: name.to_string() });
        }
        let n = args.len();
        if let Some(sargs) = static_args {
            let def = defs
                .iter()
                .find(|d| d.is_two_level() && d.static_arity() == sargs.len() && d.params.len() == n)
                .ok_or_else(|| arity_error(name, span))?;
            return self.invoke(def, sargs, args, span);
        }
        if let Some(def) = defs.iter().find(|d| !d.is_two_level() && d.params.len() == n) {
            return self.invoke(def, Vec::new(), args, span);
        }
        if let Some(def) = defs.iter().find(|d| d.static_arity() + d.params.len() == n) {
            return self.call_merged(def, args, span);
        }
        for def in defs.iter().filter(|d| d.params.len() == n) {
            let types: Vec<TypeValue> = args.iter().map(Value::type_of).collect();
            if let Some(sargs) = infer_static_args(def, &types) {
                return self.invoke(def, sargs, args, span);
            }
        }
        Err(arity_error(name, span))
    }

    /// Calls with static and dynamic arguments concatenated.
    pub fn call_merged(&mut self, def: &FunctionDef, mut args: Vec<Value>, span: Span) -> Result<Value, EvalError> {
        let k = def.static_arity();
        if args.len() != k + def.params.len() {
            return Err(arity_error(&def.name, span));
        }
        let dargs = args.split_off(k);
        self.invoke(def, args, dargs, span)
    }

    pub fn invoke(&mut self, def: &FunctionDef, sargs: Vec<Value>, dargs: Vec<Value>, span: Span) -> Result<Value, EvalError> {
        if sargs.len() != def.static_arity() || dargs.len() != def.params.len() {
            return Err(arity_error(&def.name, span));
        }
        self.enter_frame(def.name.clone(), span)?;
        let saved = self.env.enter_call();
        let r = self.invoke_inner(def, sargs, dargs);
        self.env.leave_call(saved);
        self.leave_frame();
        r
    }

    fn invoke_inner(&mut self, def: &FunctionDef, sargs: Vec<Value>, dargs: Vec<Value>) -> Result<Value, EvalError> {
        let params = def.static_params.iter().flatten().zip(sargs).chain(def.params.iter().zip(dargs));
        for (p, v) in params {
            let ty = self.eval_type(&p.ty)?;
            let v = coerce(v, &ty, p.span)?;
            self.env.declare(&p.name, ty, v);
        }
        let v = match self.exec_block(&def.body)? {
            Flow::Return(v) => v,
            Flow::Normal => Value::Unit,
        };
        match &def.ret {
            Some(t) => {
                let ty = self.eval_type(t)?;
                coerce(v, &ty, def.span)
            }
            None => Ok(v),
        }
    }

    // ---- statements --------------------------------------------------

    pub fn exec_block(&mut self, b: &Block) -> Result<Flow, EvalError> {
        self.env.push();
        let r = self.exec_stmts(&b.stmts);
        self.env.pop();
        r
    }

    /// Executes statements in the current frame.
    pub fn exec_stmts(&mut self, stmts: &[Stmt]) -> Result<Flow, EvalError> {
        for s in stmts {
            if let Flow::Return(v) = self.exec_stmt(s)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    pub fn exec_stmt(&mut self, s: &Stmt) -> Result<Flow, EvalError> {
        self.tick(s.span)?;
        match &s.kind {
            StmtKind::VarDecl { ty, decls, .. } => {
                let base = self.eval_type(ty).map_err(|e| at_span(e, s.span))?;
                for d in decls {
                    self.declare_var(&base, d)?;
                }
                Ok(Flow::Normal)
            }
            StmtKind::Expr(e) => {
                self.eval_expr(e)?;
                Ok(Flow::Normal)
            }
            StmtKind::Block(b) => self.exec_block(b),
            StmtKind::If { cond, then, els, .. } => {
                let c = self.eval_expr(cond)?;
                if truthy(&c, cond.span)? {
                    self.exec_stmt(then)
                } else if let Some(e) = els {
                    self.exec_stmt(e)
                } else {
                    Ok(Flow::Normal)
                }
            }
            StmtKind::For { init, cond, step, body, .. } => {
                self.env.push();
                let r = self.exec_for(s.span, init.as_deref(), cond.as_ref(), step.as_ref(), body);
                self.env.pop();
                r
            }
            StmtKind::Switch { scrutinee, arms, .. } => {
                let v = self.eval_expr(scrutinee)?;
                let Some(arm) = self.select_arm(&v, arms)? else {
                    return Ok(Flow::Normal);
                };
                self.env.push();
                let r = self.exec_stmts(&arm.body);
                self.env.pop();
                r
            }
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => self.eval_expr(e)?,
                    None => Value::Unit,
                };
                Ok(Flow::Return(v))
            }
        }
    }

    pub fn declare_var(&mut self, base: &TypeValue, d: &Declarator) -> Result<(), EvalError> {
        let ty = match &d.dim {
            Some(n) => TypeValue::Array(Box::new(base.clone()), self.eval_len(n)?),
            None => base.clone(),
        };
        let v = match &d.init {
            Some(init) => {
                let v = self.eval_expr(init)?;
                coerce(v, &ty, init.span)?
            }
            None => self.default_value(&ty, d.span)?,
        };
        self.env.declare(&d.name, ty, v);
        Ok(())
    }

    /// The arm whose label equals `v`, else the `default` arm.
    pub fn select_arm<'a>(&mut self, v: &Value, arms: &'a [SwitchArm]) -> Result<Option<&'a SwitchArm>, EvalError> {
        let mut fallback = None;
        for arm in arms {
            for label in &arm.labels {
                match label {
                    CaseLabel::Case(e) => {
                        let l = self.eval_expr(e)?;
                        if values_equal(v, &l) {
                            return Ok(Some(arm));
                        }
                    }
                    CaseLabel::Default => fallback = fallback.or(Some(arm)),
                }
            }
        }
        Ok(fallback)
    }

    fn exec_for(
        &mut self,
        span: Span,
        init: Option<&Stmt>,
        cond: Option<&Expr>,
        step: Option<&Expr>,
        body: &Stmt,
    ) -> Result<Flow, EvalError> {
        if let Some(i) = init {
            self.exec_stmt(i)?;
        }
        let mut n = 0u64;
        loop {
            if let Some(c) = cond {
                let v = self.eval_expr(c)?;
                if !truthy(&v, c.span)? {
                    return Ok(Flow::Normal);
                }
            }
            n += 1;
            if n > self.limits.loop_cap {
                return Err(EvalError::LoopCap { span, cap: self.limits.loop_cap });
            }
            if let Flow::Return(v) = self.exec_stmt(body)? {
                return Ok(Flow::Return(v));
            }
            if let Some(s) = step {
                self.eval_expr(s)?;
            }
        }
    }

    // ---- expressions -------------------------------------------------

    pub fn eval_list(&mut self, es: &[Expr]) -> Result<Vec<Value>, EvalError> {
        es.iter().map(|e| self.eval_expr(e)).collect()
    }

    pub fn eval_expr(&mut self, e: &Expr) -> Result<Value, EvalError> {
        self.tick(e.span)?;
        let span = e.span;
        match &e.kind {
            ExprKind::Int(v) => Ok(Value::Int(*v)),
            ExprKind::Float(v) => Ok(Value::Float(*v)),
            ExprKind::Bool(b) => Ok(Value::Bool(*b)),
            ExprKind::Str(s) => Ok(Value::Str(s.clone())),
            ExprKind::Var(n) => match self.env.get(n) {
                Some(v) => Ok(v.clone()),
                None => match self.class(n) {
                    Some(c) => Ok(Value::Type(self.class_type(c, Vec::new(), span)?)),
                    None => Err(EvalError::Unbound { span, name: n.clone() }),
                },
            },
            ExprKind::Type(t) => Ok(Value::Type(self.eval_type(t).map_err(|err| at_span(err, span))?)),
            ExprKind::Unary { op, expr } => match op {
                UnOp::Neg => ops::negate(&self.eval_expr(expr)?, span),
                UnOp::Not => {
                    let v = self.eval_expr(expr)?;
                    Ok(Value::Bool(!truthy(&v, span)?))
                }
                _ => self.update(*op, expr, span),
            },
            ExprKind::Binary { op: BinOp::And, lhs, rhs } => {
                let l = self.eval_expr(lhs)?;
                if !truthy(&l, lhs.span)? {
                    return Ok(Value::Bool(false));
                }
                let r = self.eval_expr(rhs)?;
                Ok(Value::Bool(truthy(&r, rhs.span)?))
            }
            ExprKind::Binary { op: BinOp::Or, lhs, rhs } => {
                let l = self.eval_expr(lhs)?;
                if truthy(&l, lhs.span)? {
                    return Ok(Value::Bool(true));
                }
                let r = self.eval_expr(rhs)?;
                Ok(Value::Bool(truthy(&r, rhs.span)?))
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.eval_expr(lhs)?;
                let r = self.eval_expr(rhs)?;
                binary(*op, &l, &r, span)
            }
            ExprKind::Assign { op, target, value } => {
                let v = self.eval_expr(value)?;
                let place = self.place(target)?;
                let new = match op.0 {
                    Some(b) => binary(b, &self.read_place(&place)?, &v, span)?,
                    None => v,
                };
                self.write_place(&place, new)
            }
            ExprKind::Cond { cond, then, els } => {
                let c = self.eval_expr(cond)?;
                if truthy(&c, cond.span)? {
                    self.eval_expr(then)
                } else {
                    self.eval_expr(els)
                }
            }
            ExprKind::Call { callee, static_args, args, .. } => self.eval_call(callee, static_args.as_deref(), args, span),
            ExprKind::Index { base, index } => {
                let b = self.eval_expr(base)?;
                let i = self.eval_index(index)?;
                index_value(&b, i, span).cloned()
            }
            ExprKind::Member { base, name } => {
                let b = self.eval_expr(base)?;
                b.field(name)
                    .cloned()
                    .ok_or_else(|| EvalError::mismatch(span, format!("{} has no member `{name}`", b.kind_name())))
            }
            ExprKind::ArrayLit(items) => {
                let vals = self.eval_list(items)?;
                let elem = join_types(vals.iter().map(Value::type_of));
                let items = vals.into_iter().map(|v| coerce(v, &elem, span)).collect::<Result<_, _>>()?;
                Ok(Value::Array { elem, items })
            }
        }
    }

    fn eval_call(&mut self, callee: &str, static_args: Option<&[Expr]>, args: &[Expr], span: Span) -> Result<Value, EvalError> {
        if callee == "Catat_error" {
            let vals = self.eval_list(args)?;
            let message = match vals.first() {
                Some(Value::Str(s)) => s.clone(),
                Some(v) => v.to_string(),
                None => String::new(),
            };
            return Err(EvalError::UserStatic { span, message });
        }
        if let Some(cls) = self.class(callee) {
            let mut vals = self.eval_list(static_args.unwrap_or(&[]))?;
            vals.extend(self.eval_list(args)?);
            return Ok(Value::Type(self.class_type(cls, vals, span)?));
        }
        let sargs = static_args.map(|s| self.eval_list(s)).transpose()?;
        let dargs = self.eval_list(args)?;
        self.call_function(callee, sargs, dargs, span)
    }

    fn eval_index(&mut self, index: &Expr) -> Result<i64, EvalError> {
        let v = self.eval_expr(index)?;
        v.as_int()
            .ok_or_else(|| EvalError::mismatch(index.span, format!("subscript must be an int, got {}", v.kind_name())))
    }

    fn update(&mut self, op: UnOp, target: &Expr, span: Span) -> Result<Value, EvalError> {
        let place = self.place(target)?;
        let old = self.read_place(&place)?;
        let bop = if matches!(op, UnOp::PreInc | UnOp::PostInc) { BinOp::Add } else { BinOp::Sub };
        let new = binary(bop, &old, &Value::Int(1), span)?;
        let stored = self.write_place(&place, new)?;
        Ok(if op.is_postfix() { old } else { stored })
    }

    fn place(&mut self, e: &Expr) -> Result<Place, EvalError> {
        match &e.kind {
            ExprKind::Var(n) => Ok(Place { root: n.clone(), path: Vec::new(), span: e.span }),
            ExprKind::Index { base, index } => {
                let mut p = self.place(base)?;
                p.path.push(Step::Index(self.eval_index(index)?));
                p.span = e.span;
                Ok(p)
            }
            ExprKind::Member { base, name } => {
                let mut p = self.place(base)?;
                p.path.push(Step::Field(name.clone()));
                p.span = e.span;
                Ok(p)
            }
            _ => Err(EvalError::mismatch(e.span, "expression is not assignable")),
        }
    }

    fn read_place(&self, p: &Place) -> Result<Value, EvalError> {
        let mut v = self.env.get(&p.root).ok_or_else(|| EvalError::Unbound { span: p.span, name: p.root.clone() })?;
        for step in &p.path {
            v = match step {
                Step::Index(i) => index_value(v, *i, p.span)?,
                Step::Field(n) => v
                    .field(n)
                    .ok_or_else(|| EvalError::mismatch(p.span, format!("no member `{n}`")))?,
            };
        }
        Ok(v.clone())
    }

    fn write_place(&mut self, p: &Place, v: Value) -> Result<Value, EvalError> {
        let slot = self
            .env
            .lookup_mut(&p.root)
            .ok_or_else(|| EvalError::Unbound { span: p.span, name: p.root.clone() })?;
        let ty = slot.ty.clone();
        let (target, ty) = navigate(&mut slot.value, ty, &p.path, p.span)?;
        let v = coerce(v, &ty, p.span)?;
        *target = v.clone();
        Ok(v)
    }
}

fn arity_error(name: &str, span: Span) -> EvalError {
    EvalError::Arity { span, message: format!("no definition of `{name}` matches the arguments") }
}

fn at_span(e: EvalError, span: Span) -> EvalError {
    match e {
        EvalError::Unbound { name, span: s } if s.line == 0 => EvalError::Unbound { span, name },
        EvalError::TypeMismatch { message, span: s } if s.line == 0 => EvalError::TypeMismatch { span, message },
        other => other,
    }
}

fn index_value(v: &Value, i: i64, span: Span) -> Result<&Value, EvalError> {
    match v {
        Value::Array { items, .. } => {
            if i < 0 || i as usize >= items.len() {
                Err(EvalError::OutOfBounds { span, index: i, len: items.len() })
            } else {
                Ok(&items[i as usize])
            }
        }
        other => Err(EvalError::mismatch(span, format!("cannot subscript {}", other.kind_name()))),
    }
}

fn navigate<'a>(v: &'a mut Value, ty: TypeValue, path: &[Step], span: Span) -> Result<(&'a mut Value, TypeValue), EvalError> {
    let Some((first, rest)) = path.split_first() else {
        return Ok((v, ty));
    };
    match (first, v) {
        (Step::Index(i), Value::Array { elem, items }) => {
            let len = items.len();
            if *i < 0 || *i as usize >= len {
                return Err(EvalError::OutOfBounds { span, index: *i, len });
            }
            let ety = elem.clone();
            navigate(&mut items[*i as usize], ety, rest, span)
        }
        (Step::Field(n), Value::Instance { fields, .. }) => {
            let f = fields
                .iter_mut()
                .find(|f| &f.name == n)
                .ok_or_else(|| EvalError::mismatch(span, format!("no member `{n}`")))?;
            let fty = f.ty.clone();
            navigate(&mut f.value, fty, rest, span)
        }
        (_, other) => Err(EvalError::mismatch(span, format!("cannot subscript or select from {}", other.kind_name()))),
    }
}

/// Element type of an array literal: the numeric join of its items.
fn join_types(mut types: impl Iterator<Item = TypeValue>) -> TypeValue {
    let Some(mut acc) = types.next() else { return TypeValue::INT };
    for t in types {
        if t == acc {
            continue;
        }
        if acc.is_numeric() && t.is_numeric() {
            if t.is_floating() {
                acc = t;
            }
        } else {
            return acc;
        }
    }
    acc
}

/// Infers typename static parameters from argument types: a parameter
/// declared `T*`, `T[n]` or `T` binds `T` to the element or argument type.
pub fn infer_static_args(def: &FunctionDef, arg_types: &[TypeValue]) -> Option<Vec<Value>> {
    let sp = def.static_params.as_ref()?;
    if arg_types.len() != def.params.len() {
        return None;
    }
    sp.iter()
        .map(|s| {
            if s.ty != TypeExpr::Typename {
                return None;
            }
            def.params.iter().zip(arg_types).find_map(|(p, t)| match (&p.ty, t) {
                (TypeExpr::Pointer(inner) | TypeExpr::Array(inner, _), TypeValue::Array(e, _) | TypeValue::Pointer(e))
                    if **inner == TypeExpr::Named(s.name.clone()) =>
                {
                    Some(Value::Type((**e).clone()))
                }
                (TypeExpr::Named(n), t) if *n == s.name => Some(Value::Type(t.clone())),
                _ => None,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(src: &str, entry: &str, args: Vec<Value>) -> Result<Value, EvalError> {
        let p = parse(src).unwrap();
        let mut m = Machine::new(&p, Limits::default());
        m.run_globals()?;
        m.call_function(entry, None, args, Span::default())
    }

    fn global(src: &str, name: &str) -> Value {
        let p = parse(src).unwrap();
        let mut m = Machine::new(&p, Limits::default());
        m.run_globals().unwrap();
        m.env.get(name).unwrap().clone()
    }

    const POW: &str = "function pow(int X, int N) { int result = 1; for (int i = 0; i < N; ++i) result *= X; return result; }";

    #[test]
    fn polymorphic_pow() {
        assert_eq!(run(POW, "pow", vec![Value::Int(2), Value::Int(3)]).unwrap(), Value::Int(8));
        assert_eq!(run(POW, "pow", vec![Value::Int(5), Value::Int(3)]).unwrap(), Value::Int(125));
    }

    #[test]
    fn collatz_ternary() {
        let src = "int@ X = 6; int@ y = (X % 2 == 0) ? (X/2) : (3*X+1);";
        assert_eq!(global(src, "y"), Value::Int(3));
    }

    #[test]
    fn literal_factorial_loop() {
        let src = "int@ N = 5, Nfact = 1;\nfor@ (int@ i=1; i < N; ++i)\n    Nfact *= i;";
        assert_eq!(global(src, "Nfact"), Value::Int(24));
    }

    #[test]
    fn empty_iteration_space() {
        let src = "int@ k = 7; for@ (int@ i=0; i < 0; ++i) k = 0;";
        assert_eq!(global(src, "k"), Value::Int(7));
    }

    #[test]
    fn type_switch() {
        let src = "function average_type(typename T) {
            switch(T) { case int: return float; case char: return float; case long int: return double; default: return T; } }";
        let t = |p| Value::Type(TypeValue::Prim(p));
        assert_eq!(run(src, "average_type", vec![t(Prim::Int)]).unwrap(), t(Prim::Float));
        assert_eq!(run(src, "average_type", vec![t(Prim::LongInt)]).unwrap(), t(Prim::Double));
        assert_eq!(run(src, "average_type", vec![t(Prim::Bool)]).unwrap(), t(Prim::Bool));
    }

    #[test]
    fn typename_variables() {
        assert_eq!(global("typename@ float_type = float;", "float_type"), Value::Type(TypeValue::FLOAT));
        assert_eq!(global("typename@ T = int; typename@ U = T;", "U"), Value::Type(TypeValue::INT));
        let p = parse("typename@ U = 5;").unwrap();
        let mut m = Machine::new(&p, Limits::default());
        assert!(matches!(m.run_globals(), Err(EvalError::TypeMismatch { .. })));
    }

    #[test]
    fn user_error_message_is_verbatim() {
        let p = parse("int@ x = 1; Catat_error@(\"boom\");").unwrap();
        let mut m = Machine::new(&p, Limits::default());
        match m.run_globals() {
            Err(EvalError::UserStatic { message, span }) => {
                assert_eq!(message, "boom");
                assert_eq!(span.line, 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn depth_and_loop_limits() {
        let p = parse("function f(int x) { return f(x + 1); }").unwrap();
        let mut m = Machine::new(&p, Limits { max_depth: 10, ..Limits::default() });
        match m.call_function("f", None, vec![Value::Int(0)], Span::default()) {
            Err(EvalError::DepthExceeded { chain, .. }) => assert_eq!(chain.len(), 11),
            other => panic!("{other:?}"),
        }
        let p = parse("int x = 0; for (;;) x = x + 1;").unwrap();
        let mut m = Machine::new(&p, Limits { loop_cap: 100, ..Limits::default() });
        assert!(matches!(m.run_globals(), Err(EvalError::LoopCap { cap: 100, .. })));
    }

    #[test]
    fn arrays_and_bounds() {
        let src = "function dot(int N, typename T, T* a, T* b) { T result = 0; for (int i=0; i < N; ++i) result += a[i]*b[i]; return result; }";
        let arr = |v: &[i64]| Value::Array { elem: TypeValue::INT, items: v.iter().map(|x| Value::Int(*x)).collect() };
        let r = run(src, "dot", vec![Value::Int(3), Value::Type(TypeValue::INT), arr(&[1, 2, 3]), arr(&[4, 5, 6])]);
        assert_eq!(r.unwrap(), Value::Int(32));
        let r = run(src, "dot", vec![Value::Int(4), Value::Type(TypeValue::INT), arr(&[1, 2, 3]), arr(&[4, 5, 6])]);
        assert!(matches!(r, Err(EvalError::OutOfBounds { index: 3, len: 3, .. })));
    }

    #[test]
    fn typename_inference_from_array_argument() {
        let src = "function first(typename@ T)(T* a) { T x = a[0]; return x; }";
        let arr = Value::Array { elem: TypeValue::FLOAT, items: vec![Value::Float(1.5)] };
        assert_eq!(run(src, "first", vec![arr]).unwrap(), Value::Float(1.5));
    }

    #[test]
    fn class_instances() {
        let src = "function pow(int X, int N) { int result = 1; for (int i = 0; i < N; ++i) result *= X; return result; }
        class SquareArray(typename@ T_numtype, int@ N_length, int@ N_dim) {
        public:
            SquareArray@() {
                if@ ((N_dim < 1) || (N_length < 1)) Catat_error@(\"N_dim and N_length must be positive.\");
                else@ numElements = pow@(N_length, N_dim);
            }
            SquareArray() { for (int i=0; i < numElements; ++i) data[i] = 0; }
        private:
            static int@ numElements;
            T_numtype data[numElements];
        }
        SquareArray(float, 4, 2) y;
        int n = y.numElements;";
        assert_eq!(global(src, "n"), Value::Int(16));
        let bad = src.replace("SquareArray(float, 4, 2) y;", "SquareArray(float, 0, 2) y;").replace("int n = y.numElements;", "");
        let p = parse(&bad).unwrap();
        let mut m = Machine::new(&p, Limits::default());
        match m.run_globals() {
            Err(EvalError::UserStatic { message, .. }) => assert_eq!(message, "N_dim and N_length must be positive."),
            other => panic!("{other:?}"),
        }
    }
}
