//! Runs single-level programs: residuals, or two-level programs read with
//! their annotations erased.

use crate::specializer::ResidualProgram;
use crate::staticeval::{with_stack, EvalError, Limits, Machine, Value};
use crate::syntax::{erase, Program, Span};

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub value: Value,
    /// Statements and expressions evaluated, globals included.
    pub steps: u64,
}

/// Runs the global statements of `program`, then calls `entry` with `args`.
pub fn run(program: &Program, entry: &str, args: Vec<Value>, limits: Limits) -> Result<RunResult, EvalError> {
    with_stack(|| run_here(program, entry, args, limits))
}

/// Runs the entry point of a residual program.
pub fn run_residual(residual: &ResidualProgram, args: Vec<Value>, limits: Limits) -> Result<RunResult, EvalError> {
    let Some(entry) = residual.entry.as_deref() else {
        return Err(EvalError::UnknownFunction { span: Span::default(), name: "<entry>".into() });
    };
    run(&residual.to_program(), entry, args, limits)
}

/// The unspecialized meaning of `entry`: `program` with annotations erased,
/// called with static arguments followed by dynamic ones.
pub fn run_unstaged(program: &Program, entry: &str, args: Vec<Value>, limits: Limits) -> Result<RunResult, EvalError> {
    let erased = erase(program);
    with_stack(|| run_here(&erased, entry, args, limits))
}

/// [`run`] on the current thread.
pub fn run_here(program: &Program, entry: &str, args: Vec<Value>, limits: Limits) -> Result<RunResult, EvalError> {
    let mut m = Machine::new(program, limits);
    m.run_globals()?;
    let value = m.call_function(entry, None, args, Span::default())?;
    Ok(RunResult { value, steps: m.steps })
}

/// Runs only the global statements and returns the final global bindings.
pub fn run_script(program: &Program, limits: Limits) -> Result<Vec<(String, Value)>, EvalError> {
    with_stack(|| {
        let mut m = Machine::new(program, limits);
        m.run_globals()?;
        Ok(m.env.globals().into_iter().map(|(n, s)| (n.to_string(), s.value.clone())).collect())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    const POW: &str = "function pow(int X, int N) { int result = 1; for (int i = 0; i < N; ++i) result *= X; return result; }";

    #[test]
    fn pow_three_two() {
        let p = parse(POW).unwrap();
        let r = run(&p, "pow", vec![Value::Int(3), Value::Int(2)], Limits::default()).unwrap();
        assert_eq!(r.value, Value::Int(9));
        assert!(r.steps > 0);
    }

    #[test]
    fn unstaged_two_level() {
        let p = parse("function pow(int@ N)(float x) { float result = 1; for@ (int@ i = 0; i < N; ++i) result *= x; return result; }").unwrap();
        let r = run_unstaged(&p, "pow", vec![Value::Int(3), Value::Float(2.0)], Limits::default()).unwrap();
        assert_eq!(r.value, Value::Float(8.0));
    }

    #[test]
    fn bounds_are_checked() {
        let p = parse("function f(int* a) { return a[3]; }").unwrap();
        let arr = Value::Array { elem: crate::staticeval::TypeValue::INT, items: vec![Value::Int(1)] };
        let e = run(&p, "f", vec![arr], Limits::default()).unwrap_err();
        assert!(matches!(e, EvalError::OutOfBounds { index: 3, len: 1, .. }), "{e:?}");
    }
}
