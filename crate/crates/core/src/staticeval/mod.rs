//! The interpreter shared by both stages.
//!
//! The same [`Machine`] evaluates stage-0 code during specialization and
//! runs single-level programs afterwards, so static and dynamic arithmetic
//! cannot drift apart. The machine ignores annotations; callers decide what
//! it is allowed to see.

mod machine;
mod ops;
mod value;

use std::collections::HashMap;

use thiserror::Error;

use crate::syntax::{Expr, FunctionDef, Program, Span};

pub use machine::{infer_static_args, Flow, Limits, Machine};
pub use ops::{binary, coerce, truthy, values_equal};
pub use value::{Field, TypeValue, Value};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero { span: Span },
    #[error("arithmetic overflow")]
    Overflow { span: Span },
    #[error("{message}")]
    TypeMismatch { span: Span, message: String },
    #[error("unbound variable `{name}`")]
    Unbound { span: Span, name: String },
    #[error("unknown function `{name}`")]
    UnknownFunction { span: Span, name: String },
    #[error("{message}")]
    Arity { span: Span, message: String },
    /// Raised by `Catat_error@`; carries the program's message verbatim.
    #[error("{message}")]
    UserStatic { span: Span, message: String },
    #[error("call depth limit {limit} exceeded: {}", chain.join(" -> "))]
    DepthExceeded { span: Span, limit: usize, chain: Vec<String> },
    #[error("loop exceeded the iteration cap of {cap}")]
    LoopCap { span: Span, cap: u64 },
    #[error("step limit of {limit} exceeded")]
    StepLimit { span: Span, limit: u64 },
    #[error("subscript {index} out of bounds for length {len}")]
    OutOfBounds { span: Span, index: i64, len: usize },
    #[error("malformed fragment: {message}")]
    MalformedFragment { span: Span, message: String },
    #[error("cannot lift {message}")]
    Lift { span: Span, message: String },
}

impl EvalError {
    pub fn span(&self) -> Span {
        match self {
            EvalError::DivisionByZero { span }
            | EvalError::Overflow { span }
            | EvalError::TypeMismatch { span, .. }
            | EvalError::Unbound { span, .. }
            | EvalError::UnknownFunction { span, .. }
            | EvalError::Arity { span, .. }
            | EvalError::UserStatic { span, .. }
            | EvalError::DepthExceeded { span, .. }
            | EvalError::LoopCap { span, .. }
            | EvalError::StepLimit { span, .. }
            | EvalError::OutOfBounds { span, .. }
            | EvalError::MalformedFragment { span, .. }
            | EvalError::Lift { span, .. } => *span,
        }
    }

    /// Depth, loop and step limits.
    pub fn is_resource(&self) -> bool {
        matches!(self, EvalError::DepthExceeded { .. } | EvalError::LoopCap { .. } | EvalError::StepLimit { .. })
    }

    pub(crate) fn mismatch(span: Span, message: impl Into<String>) -> Self {
        EvalError::TypeMismatch { span, message: message.into() }
    }
}

#[derive(Clone, Debug)]
pub struct Slot {
    pub value: Value,
    pub ty: TypeValue,
    pub stage: u32,
}

/// Lexically scoped frames. Frame 0 holds globals and stays visible inside
/// calls; everything above it belongs to the active call.
#[derive(Clone, Debug)]
pub struct Env {
    frames: Vec<HashMap<String, Slot>>,
}

impl Default for Env {
    fn default() -> Self {
        Env { frames: vec![HashMap::new()] }
    }
}

impl Env {
    pub fn push(&mut self) {
        self.frames.push(HashMap::new());
    }

    pub fn pop(&mut self) {
        if self.frames.len() > 1 {
            self.frames.pop();
        }
    }

    pub fn depth(&self) -> usize {
        self.frames.len()
    }

    /// Drops frames above `depth`; used to unwind after an error.
    pub fn truncate(&mut self, depth: usize) {
        self.frames.truncate(depth.max(1));
    }

    pub fn declare(&mut self, name: &str, ty: TypeValue, value: Value) {
        self.declare_at(name, ty, value, 0);
    }

    pub fn declare_at(&mut self, name: &str, ty: TypeValue, value: Value, stage: u32) {
        self.frames.last_mut().unwrap().insert(name.to_string(), Slot { value, ty, stage });
    }

    pub fn lookup(&self, name: &str) -> Option<&Slot> {
        self.frames.iter().rev().find_map(|f| f.get(name))
    }

    pub fn lookup_mut(&mut self, name: &str) -> Option<&mut Slot> {
        self.frames.iter_mut().rev().find_map(|f| f.get_mut(name))
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.lookup(name).map(|s| &s.value)
    }

    /// Hides the caller's locals; returns them for [`Env::leave_call`].
    pub fn enter_call(&mut self) -> Vec<HashMap<String, Slot>> {
        let saved = self.frames.split_off(1);
        self.frames.push(HashMap::new());
        saved
    }

    pub fn leave_call(&mut self, saved: Vec<HashMap<String, Slot>>) {
        self.frames.truncate(1);
        self.frames.extend(saved);
    }

    /// Global bindings sorted by name.
    pub fn globals(&self) -> Vec<(&str, &Slot)> {
        let mut out: Vec<_> = self.frames[0].iter().map(|(k, v)| (k.as_str(), v)).collect();
        out.sort_by(|a, b| a.0.cmp(b.0));
        out
    }
}

/// Calls `fn_def` with every argument supplied at once (static ones first)
/// and interprets the whole body.
pub fn call_static(program: &Program, fn_def: &FunctionDef, args: Vec<Value>, limits: Limits) -> Result<Value, EvalError> {
    with_stack(|| {
        let mut m = Machine::new(program, limits);
        m.run_globals()?;
        m.call_merged(fn_def, args, Span::default())
    })
}

/// Values of literal argument expressions, such as command-line static
/// arguments. Class applications resolve against `program`.
pub fn eval_literals(program: &Program, exprs: &[Expr], limits: Limits) -> Result<Vec<Value>, EvalError> {
    let mut m = Machine::new(program, limits);
    m.eval_list(exprs)
}

/// Binds a typename variable in the innermost frame.
pub fn assign_typename(env: &mut Env, name: &str, value: Value, span: Span) -> Result<(), EvalError> {
    match value {
        Value::Type(t) => {
            env.declare(name, TypeValue::Typename, Value::Type(t));
            Ok(())
        }
        other => Err(EvalError::mismatch(span, format!("cannot assign {} to typename `{name}`", other.kind_name()))),
    }
}

/// Runs `f` on a thread with a large stack; deep static recursion
/// nests many interpreter frames.
pub fn with_stack<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    const STACK: usize = 512 << 20;
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(STACK)
            .spawn_scoped(s, f)
            .expect("spawn evaluator thread")
            .join()
            .unwrap_or_else(|p| std::panic::resume_unwind(p))
    })
}
