//! Many independent specialize-and-run jobs at once.
//!
//! Each job owns its specializer and interpreter, so jobs share nothing
//! but the read-only program. With the `parallel` feature the jobs are
//! spread over a rayon pool; the `_seq` variants always run in order on
//! one thread and give identical results.

use thiserror::Error;

use crate::dyninterp::{run_here, RunResult};
use crate::specializer::{Options, SpecError, Specializer};
use crate::staging::StagedAST;
use crate::staticeval::{with_stack, EvalError, Limits, Value};
use crate::syntax::{erase, Program};

/// One instance of the mix equation: `function` specialized at
/// `static_args` and run on `dyn_args`, against the erased program run on
/// both argument lists.
#[derive(Clone, Debug)]
pub struct MixCase {
    pub function: String,
    pub static_args: Vec<Value>,
    pub dyn_args: Vec<Value>,
}

#[derive(Clone, Debug)]
pub struct MixOutcome {
    pub residual_name: String,
    pub residual: RunResult,
    pub unstaged: RunResult,
}

impl MixOutcome {
    /// Exact on integers; floats within `rel` relative error.
    pub fn agrees(&self, rel: f64) -> bool {
        values_close(&self.residual.value, &self.unstaged.value, rel)
    }
}

pub fn values_close(a: &Value, b: &Value, rel: f64) -> bool {
    match (a, b) {
        (Value::Float(x), Value::Float(y)) => x == y || (x - y).abs() <= rel * x.abs().max(y.abs()),
        (Value::Array { items: xs, .. }, Value::Array { items: ys, .. }) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| values_close(x, y, rel))
        }
        _ => a == b,
    }
}

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("specialization failed: {0}")]
    Spec(#[from] SpecError),
    #[error("residual run failed: {0}")]
    Residual(EvalError),
    #[error("unstaged run failed: {0}")]
    Unstaged(EvalError),
}

fn mix_one(staged: &StagedAST, erased: &Program, case: &MixCase, opts: Options) -> Result<MixOutcome, BatchError> {
    let r = Specializer::new(staged, opts).specialize_program(Some(&case.function), case.static_args.clone())?;
    let residual_name = r.entry.clone().expect("entry was requested");
    let residual = run_here(&r.to_program(), &residual_name, case.dyn_args.clone(), opts.limits).map_err(BatchError::Residual)?;
    let all = case.static_args.iter().chain(&case.dyn_args).cloned().collect();
    let unstaged = run_here(erased, &case.function, all, opts.limits).map_err(BatchError::Unstaged)?;
    Ok(MixOutcome { residual_name, residual, unstaged })
}

/// Checks every case, in parallel when the `parallel` feature is on.
pub fn mix_batch(staged: &StagedAST, cases: &[MixCase], opts: Options) -> Vec<Result<MixOutcome, BatchError>> {
    let erased = erase(&staged.program);
    par_map(cases, |c| mix_one(staged, &erased, c, opts))
}

pub fn mix_batch_seq(staged: &StagedAST, cases: &[MixCase], opts: Options) -> Vec<Result<MixOutcome, BatchError>> {
    let erased = erase(&staged.program);
    with_stack(|| cases.iter().map(|c| mix_one(staged, &erased, c, opts)).collect())
}

/// Runs `entry` of a single-level program once per argument list.
pub fn run_batch(program: &Program, entry: &str, inputs: &[Vec<Value>], limits: Limits) -> Vec<Result<RunResult, EvalError>> {
    par_map(inputs, |args| run_here(program, entry, args.clone(), limits))
}

pub fn run_batch_seq(program: &Program, entry: &str, inputs: &[Vec<Value>], limits: Limits) -> Vec<Result<RunResult, EvalError>> {
    with_stack(|| inputs.iter().map(|args| run_here(program, entry, args.clone(), limits)).collect())
}

#[cfg(feature = "parallel")]
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    pool().install(|| items.par_iter().map(f).collect())
}

#[cfg(not(feature = "parallel"))]
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    with_stack(|| items.iter().map(f).collect())
}

/// Worker threads need deep stacks for the recursive interpreter.
#[cfg(feature = "parallel")]
fn pool() -> &'static rayon::ThreadPool {
    use std::sync::OnceLock;
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        rayon::ThreadPoolBuilder::new()
            .stack_size(256 << 20)
            .thread_name(|i| format!("catat-batch-{i}"))
            .build()
            .expect("batch thread pool")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::staging::check_stages;
    use crate::syntax::parse;

    #[test]
    fn parallel_matches_sequential() {
        let src = "float pow(int@ N)(float x) { float result = 1; for@ (int@ i = 0; i < N; ++i) result *= x; return result; }";
        let staged = check_stages(&parse(src).unwrap(), 2).unwrap();
        let cases: Vec<MixCase> = (0..6)
            .flat_map(|n| {
                (-2..=2).map(move |x| MixCase {
                    function: "pow".into(),
                    static_args: vec![Value::Int(n)],
                    dyn_args: vec![Value::Float(x as f64)],
                })
            })
            .collect();
        let par = mix_batch(&staged, &cases, Options::default());
        let seq = mix_batch_seq(&staged, &cases, Options::default());
        assert_eq!(par.len(), cases.len());
        for (p, s) in par.iter().zip(&seq) {
            let (p, s) = (p.as_ref().unwrap(), s.as_ref().unwrap());
            assert!(p.agrees(0.0));
            assert_eq!(p.residual, s.residual);
            assert_eq!(p.unstaged, s.unstaged);
        }
    }

    #[test]
    fn close_values() {
        assert!(values_close(&Value::Float(1.0), &Value::Float(1.0 + 1e-15), 1e-12));
        assert!(!values_close(&Value::Float(1.0), &Value::Float(1.1), 1e-12));
        assert!(!values_close(&Value::Int(1), &Value::Float(1.0), 1e-12));
    }
}
