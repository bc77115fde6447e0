//! Turns two-level functions into generators: single-level functions whose
//! static execution builds the residual body as a code value.

mod builders;
mod code;
mod transform;

pub use builders::{call_builtin, is_builder, BUILDERS};
pub use code::{CodeRef, Fragment};
pub use transform::flatten_function;

use crate::staticeval::EvalError;
use crate::syntax::{FunctionDef, Span};

/// The function a completed shell denotes. Its return type is left for
/// the specializer to infer.
pub fn materialize(code: &CodeRef) -> Result<FunctionDef, EvalError> {
    code.to_function().map_err(|message| EvalError::MalformedFragment { span: Span::default(), message })
}
