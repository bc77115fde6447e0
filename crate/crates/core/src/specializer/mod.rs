//! Offline specialization: evaluates the static part of a staged program
//! and emits single-level residual code.

mod alpha;
mod finish;
mod lift;
mod mangle;
mod residualize;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::staging::StagedAST;
use crate::staticeval::{coerce, with_stack, EvalError, Limits, Machine, TypeValue, Value};
use crate::syntax::*;

pub use alpha::alpha_equivalent;
pub use finish::{infer_return_type, join_types};
pub use lift::{lift, lift_static_arg, type_expr};
pub use mangle::mangle;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("specialization depth limit {limit} exceeded: {}", chain.join(" -> "))]
    DepthExceeded { span: Span, limit: usize, chain: Vec<String> },
    #[error("`{key}` is needed while it is being specialized: {}", chain.join(" -> "))]
    SelfRecursive { span: Span, key: String, chain: Vec<String> },
    #[error("return types `{first}` and `{second}` do not agree")]
    ReturnTypeMismatch { span: Span, first: TypeValue, second: TypeValue },
    #[error("class `{class}` has dynamic members and cannot be instantiated statically")]
    StaticInstance { span: Span, class: String },
    #[error("cannot flatten: {message}")]
    FlattenUnsupported { span: Span, message: String },
    #[error("{message}")]
    Entry { message: String },
}

impl SpecError {
    pub fn span(&self) -> Span {
        match self {
            SpecError::Eval(e) => e.span(),
            SpecError::DepthExceeded { span, .. }
            | SpecError::SelfRecursive { span, .. }
            | SpecError::ReturnTypeMismatch { span, .. }
            | SpecError::StaticInstance { span, .. }
            | SpecError::FlattenUnsupported { span, .. } => *span,
            SpecError::Entry { .. } => Span::default(),
        }
    }

    /// Depth, loop and step limits, including unbounded specialization.
    pub fn is_resource(&self) -> bool {
        match self {
            SpecError::Eval(e) => e.is_resource(),
            SpecError::DepthExceeded { .. } | SpecError::SelfRecursive { .. } => true,
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum DefId {
    Function { name: String, static_arity: usize },
    Class(String),
}

impl DefId {
    pub fn name(&self) -> &str {
        match self {
            DefId::Function { name, .. } | DefId::Class(name) => name,
        }
    }
}

/// Cache key: a definition together with its static arguments.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpecKey {
    pub def: DefId,
    pub args: Vec<Value>,
}

impl fmt::Display for SpecKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self.args.iter().map(ToString::to_string).collect();
        write!(f, "{}({})", self.def.name(), args.join(", "))
    }
}

#[derive(Clone, Debug)]
pub struct ResidualFunction {
    pub name: String,
    pub key: SpecKey,
    pub ret: TypeValue,
    pub def: FunctionDef,
}

#[derive(Clone, Debug)]
pub struct ResidualClass {
    pub name: String,
    pub key: SpecKey,
    /// Final values of the static members.
    pub statics: Vec<(String, Value)>,
    pub members: Vec<(String, TypeValue)>,
    pub def: ClassDef,
}

impl ResidualClass {
    pub fn static_value(&self, name: &str) -> Option<&Value> {
        self.statics.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }
}

#[derive(Clone, Debug)]
pub enum ResidualItem {
    Function(ResidualFunction),
    Class(ResidualClass),
}

impl ResidualItem {
    pub fn name(&self) -> &str {
        match self {
            ResidualItem::Function(f) => &f.name,
            ResidualItem::Class(c) => &c.name,
        }
    }

    pub fn key(&self) -> &SpecKey {
        match self {
            ResidualItem::Function(f) => &f.key,
            ResidualItem::Class(c) => &c.key,
        }
    }
}

/// Output of specialization. Items are ordered so that every item only
/// refers to items before it.
#[derive(Clone, Debug, Default)]
pub struct ResidualProgram {
    pub items: Vec<ResidualItem>,
    /// Dynamic global statements.
    pub globals: Vec<Stmt>,
    pub entry: Option<String>,
    /// Static globals after specialization, in declaration order.
    pub statics: Vec<(String, Value)>,
}

impl ResidualProgram {
    pub fn function(&self, name: &str) -> Option<&ResidualFunction> {
        self.items.iter().find_map(|i| match i {
            ResidualItem::Function(f) if f.name == name => Some(f),
            _ => None,
        })
    }

    pub fn class(&self, name: &str) -> Option<&ResidualClass> {
        self.items.iter().find_map(|i| match i {
            ResidualItem::Class(c) if c.name == name => Some(c),
            _ => None,
        })
    }

    pub fn functions(&self) -> impl Iterator<Item = &ResidualFunction> {
        self.items.iter().filter_map(|i| match i {
            ResidualItem::Function(f) => Some(f),
            _ => None,
        })
    }

    /// Residual name for each specialization key.
    pub fn provenance(&self) -> Vec<(&str, &SpecKey)> {
        self.items.iter().map(|i| (i.name(), i.key())).collect()
    }

    /// True when nothing is left to run.
    pub fn is_empty(&self) -> bool {
        self.items.is_empty() && self.globals.is_empty()
    }

    pub fn to_program(&self) -> Program {
        let mut decls: Vec<Decl> = self
            .items
            .iter()
            .map(|i| match i {
                ResidualItem::Function(f) => Decl::Function(f.def.clone()),
                ResidualItem::Class(c) => Decl::Class(c.def.clone()),
            })
            .collect();
        decls.extend(self.globals.iter().cloned().map(Decl::Stmt));
        Program { decls }
    }

    /// Source text with a provenance comment above every item.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        for (i, item) in self.items.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            out.push_str(&format!("// specialized-from: {}\n", item.key()));
            match item {
                ResidualItem::Function(f) => out.push_str(&emit_function(&f.def)),
                ResidualItem::Class(c) => {
                    let text = emit_class(&c.def);
                    let (head, rest) = text.split_once('\n').unwrap_or((&text, ""));
                    out.push_str(head);
                    out.push('\n');
                    for (n, v) in &c.statics {
                        out.push_str(&format!("    // static {n} = {v}\n"));
                    }
                    out.push_str(rest);
                }
            }
        }
        if !self.globals.is_empty() {
            if !self.items.is_empty() {
                out.push('\n');
            }
            for s in &self.globals {
                emit::emit_stmt(&mut out, s, 0);
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Options {
    pub limits: Limits,
    /// Build residuals by running generators instead of direct evaluation.
    pub via_flatten: bool,
}

enum Entry {
    InProgress,
    Done(String),
}

/// Unfinished residual function: concrete parameter types and body, calls
/// not yet resolved.
pub(crate) struct Raw {
    pub params: Vec<Param>,
    pub body: Block,
    pub ret: Option<TypeValue>,
}

pub struct Specializer<'p> {
    staged: &'p StagedAST,
    m: Machine<'p>,
    opts: Options,
    cache: HashMap<SpecKey, Entry>,
    taken: HashMap<String, SpecKey>,
    items: Vec<ResidualItem>,
    chain: Vec<String>,
    generators: HashMap<DefId, Arc<FunctionDef>>,
    global_types: HashMap<String, TypeValue>,
}

impl<'p> Specializer<'p> {
    pub fn new(staged: &'p StagedAST, opts: Options) -> Self {
        Specializer {
            staged,
            m: Machine::new(&staged.program, opts.limits),
            opts,
            cache: HashMap::new(),
            taken: HashMap::new(),
            items: Vec::new(),
            chain: Vec::new(),
            generators: HashMap::new(),
            global_types: HashMap::new(),
        }
    }

    pub fn items(&self) -> &[ResidualItem] {
        &self.items
    }

    pub fn into_items(self) -> Vec<ResidualItem> {
        self.items
    }

    fn function_def(&self, name: &str, static_arity: Option<usize>) -> Result<&'p FunctionDef, SpecError> {
        let defs = self.m.functions_named(name);
        let found = match static_arity {
            Some(k) => defs.iter().find(|d| d.is_two_level() && d.static_arity() == k),
            None => defs.first(),
        };
        found.copied().ok_or_else(|| SpecError::Entry { message: format!("no function `{name}` to specialize") })
    }

    /// Runs `f` with the static parameters of a definition bound.
    fn with_statics<R>(
        &mut self,
        params: &[Param],
        args: &[Value],
        f: impl FnOnce(&mut Self) -> Result<R, SpecError>,
    ) -> Result<R, SpecError> {
        let saved = self.m.env.enter_call();
        let r = (|| {
            for (p, v) in params.iter().zip(args) {
                let ty = self.m.eval_type(&p.ty)?;
                self.m.env.declare(&p.name, ty, v.clone());
            }
            f(self)
        })();
        self.m.env.leave_call(saved);
        r
    }

    fn coerce_statics(&mut self, params: &[Param], args: Vec<Value>, what: &str, span: Span) -> Result<Vec<Value>, SpecError> {
        if params.len() != args.len() {
            return Err(EvalError::Arity {
                span,
                message: format!("`{what}` takes {} static arguments, got {}", params.len(), args.len()),
            }
            .into());
        }
        let saved = self.m.env.enter_call();
        let r = (|| {
            let mut out = Vec::new();
            for (p, v) in params.iter().zip(args) {
                let ty = self.m.eval_type(&p.ty)?;
                let v = coerce(v, &ty, span)?;
                self.m.env.declare(&p.name, ty, v.clone());
                out.push(v);
            }
            Ok(out)
        })();
        self.m.env.leave_call(saved);
        r
    }

    /// Looks up or claims `key`. `Ok(Some(name))` means already done.
    fn begin(&mut self, key: &SpecKey, span: Span) -> Result<Option<String>, SpecError> {
        match self.cache.get(key) {
            Some(Entry::Done(n)) => return Ok(Some(n.clone())),
            Some(Entry::InProgress) => {
                let mut chain = self.chain.clone();
                chain.push(key.to_string());
                return Err(SpecError::SelfRecursive { span, key: key.to_string(), chain });
            }
            None => {}
        }
        if self.chain.len() >= self.opts.limits.max_depth {
            let mut chain = self.chain.clone();
            chain.push(key.to_string());
            return Err(SpecError::DepthExceeded { span, limit: self.opts.limits.max_depth, chain });
        }
        self.cache.insert(key.clone(), Entry::InProgress);
        self.chain.push(key.to_string());
        Ok(None)
    }

    fn reserve(&mut self, key: &SpecKey) -> String {
        let base = mangle(key.def.name(), &key.args);
        let mut name = base.clone();
        let mut n = 2;
        while self.taken.contains_key(&name) {
            name = format!("{base}_{n}");
            n += 1;
        }
        self.taken.insert(name.clone(), key.clone());
        name
    }

    fn complete(&mut self, key: SpecKey, item: ResidualItem) -> String {
        let name = item.name().to_string();
        self.chain.pop();
        self.cache.insert(key, Entry::Done(name.clone()));
        self.items.push(item);
        name
    }

    /// Residual name of `def` at `args`, specializing it on first use.
    pub fn specialize_function(&mut self, def: &'p FunctionDef, args: Vec<Value>, span: Span) -> Result<String, SpecError> {
        let sparams = def.static_params.as_deref().unwrap_or(&[]);
        let args = self.coerce_statics(sparams, args, &def.name, span)?;
        let key = SpecKey { def: DefId::Function { name: def.name.clone(), static_arity: def.static_arity() }, args };
        if let Some(done) = self.begin(&key, span)? {
            return Ok(done);
        }
        let name = self.reserve(&key);
        let raw = if self.opts.via_flatten {
            self.run_generator(def, &key)?
        } else {
            self.residualize_function(def, &key.args)?
        };
        let (def, ret) = self.finish_function(&name, raw, def.span)?;
        let item = ResidualFunction { name: name.clone(), key: key.clone(), ret, def };
        Ok(self.complete(key, ResidualItem::Function(item)))
    }

    fn run_generator(&mut self, def: &'p FunctionDef, key: &SpecKey) -> Result<Raw, SpecError> {
        let id = key.def.clone();
        let gen = match self.generators.get(&id) {
            Some(g) => g.clone(),
            None => {
                let g = Arc::new(crate::flatten::flatten_function(self.staged, def)?);
                self.generators.insert(id, g.clone());
                g
            }
        };
        let code = self.m.invoke(&gen, Vec::new(), key.args.clone(), def.span)?;
        let shell = match code {
            Value::Code(c) => c,
            other => {
                return Err(EvalError::MalformedFragment {
                    span: def.span,
                    message: format!("generator returned {}", other.kind_name()),
                }
                .into())
            }
        };
        let f = shell.to_function().map_err(|message| EvalError::MalformedFragment { span: def.span, message })?;
        let sparams = def.static_params.as_deref().unwrap_or(&[]);
        let ret = match &def.ret {
            Some(t) => Some(self.with_statics(sparams, &key.args, |s| Ok(s.m.eval_type(t)?))?),
            None => None,
        };
        Ok(Raw { params: f.params, body: f.body, ret })
    }

    /// Residual name of class `cls` at `args`.
    pub fn specialize_class(&mut self, cls: &'p ClassDef, args: Vec<Value>, span: Span) -> Result<String, SpecError> {
        let sparams = cls.static_params.as_deref().unwrap_or(&[]);
        let args = self.coerce_statics(sparams, args, &cls.name, span)?;
        let key = SpecKey { def: DefId::Class(cls.name.clone()), args };
        if let Some(done) = self.begin(&key, span)? {
            return Ok(done);
        }
        let name = self.reserve(&key);
        let is_static = |m: &Member| m.is_static || m.at > 0;
        let (statics, dynamic, ctor) = self.with_statics(sparams, &key.args, |s| {
            for m in cls.members.iter().filter(|m| is_static(m)) {
                let ty = s.m.eval_type(&m.ty)?;
                let v = s.m.default_value(&ty, m.span)?;
                s.m.env.declare(&m.name, ty, v);
            }
            if let Some(b) = &cls.static_ctor {
                s.m.exec_block(b)?;
            }
            let statics: Vec<(String, Value)> = cls
                .members
                .iter()
                .filter(|m| is_static(m))
                .map(|m| (m.name.clone(), s.m.env.get(&m.name).cloned().unwrap_or(Value::Unit)))
                .collect();
            let mut dynamic = Vec::new();
            for m in cls.members.iter().filter(|m| !is_static(m)) {
                dynamic.push((m, s.m.eval_type(&m.ty)?));
            }
            let ctor = match &cls.ctor {
                Some(b) => Some(s.residualize_body(b)?),
                None => None,
            };
            Ok((statics, dynamic, ctor))
        })?;
        let mut members = Vec::new();
        let mut member_defs = Vec::new();
        for (m, ty) in dynamic {
            let ty = self.residual_type(&ty, m.span)?;
            member_defs.push(Member {
                name: m.name.clone(),
                ty: type_expr(&ty, m.span)?,
                at: 0,
                is_static: false,
                visibility: m.visibility,
                span: m.span,
            });
            members.push((m.name.clone(), ty));
        }
        let ctor = match ctor {
            Some(b) => Some(self.finish_ctor(b, &members)?),
            None => None,
        };
        let def = ClassDef { name: name.clone(), static_params: None, members: member_defs, static_ctor: None, ctor, span: cls.span };
        let item = ResidualClass { name, key: key.clone(), statics, members, def };
        Ok(self.complete(key, ResidualItem::Class(item)))
    }

    /// Static globals run, dynamic globals are residualized, then `entry`
    /// (if any) is specialized at `args`.
    pub fn specialize_program(mut self, entry: Option<&str>, args: Vec<Value>) -> Result<ResidualProgram, SpecError> {
        let levels = self.staged.levels;
        if levels < 2 {
            return Err(SpecError::Entry { message: "a single-level program has nothing to specialize".into() });
        }
        if levels > 2 && entry.is_some() {
            return Err(SpecError::Entry { message: "entry specialization needs a two-level program".into() });
        }
        let mut globals = Vec::new();
        let mut static_names = Vec::new();
        for d in &self.staged.program.decls {
            let Decl::Stmt(s) = d else { continue };
            if self.stmt_is_static(s) {
                if let StmtKind::VarDecl { decls, .. } = &s.kind {
                    static_names.extend(decls.iter().map(|d| d.name.clone()));
                }
            }
            let mut raw = Vec::new();
            self.rstmt(s, &mut raw, false)?;
            for r in raw {
                globals.push(self.finish_global(r)?);
            }
        }
        let entry = match entry {
            Some(name) => {
                let arity = self.m.functions_named(name).first().map(|d| d.static_arity());
                let def = self.function_def(name, arity.filter(|k| *k > 0))?;
                Some(self.specialize_function(def, args, def.span)?)
            }
            None => None,
        };
        let statics = static_names
            .into_iter()
            .filter_map(|n| self.m.env.get(&n).cloned().map(|v| (n, v)))
            .collect();
        Ok(ResidualProgram { items: self.items, globals, entry, statics })
    }
}

/// Specializes `staged`, running on a thread with a deep stack.
pub fn specialize_program(
    staged: &StagedAST,
    entry: Option<&str>,
    args: Vec<Value>,
    opts: Options,
) -> Result<ResidualProgram, SpecError> {
    with_stack(|| Specializer::new(staged, opts).specialize_program(entry, args))
}

/// Specializes one function of `staged` at `args`; static globals are
/// evaluated first.
pub fn specialize_function(staged: &StagedAST, name: &str, args: Vec<Value>, opts: Options) -> Result<ResidualProgram, SpecError> {
    specialize_program(staged, Some(name), args, opts)
}

#[cfg(test)]
mod tests;
