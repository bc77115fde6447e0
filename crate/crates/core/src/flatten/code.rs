use std::fmt;
use std::sync::{Arc, Mutex, MutexGuard};

use crate::syntax::*;

/// A piece of residual syntax under construction. Blocks are shared
/// handles so that `append` through any alias reaches the same tree.
#[derive(Debug)]
pub enum Fragment {
    Shell { name: String, params: Vec<Param>, body: CodeRef },
    Param(Param),
    Block(Vec<CodeRef>),
    Expr(Expr),
    /// Declarations, expression statements and returns.
    Stmt(Stmt),
    If { cond: Expr, then: CodeRef, els: Option<CodeRef> },
    For { init: Option<CodeRef>, cond: Option<Expr>, step: Option<Expr>, body: CodeRef },
}

impl Fragment {
    pub fn kind(&self) -> &'static str {
        match self {
            Fragment::Shell { .. } => "function shell",
            Fragment::Param(_) => "parameter",
            Fragment::Block(_) => "block",
            Fragment::Expr(_) => "expression",
            Fragment::Stmt(_) => "statement",
            Fragment::If { .. } => "if",
            Fragment::For { .. } => "for",
        }
    }
}

#[derive(Clone)]
pub struct CodeRef(Arc<Mutex<Fragment>>);

impl CodeRef {
    pub fn new(f: Fragment) -> Self {
        CodeRef(Arc::new(Mutex::new(f)))
    }

    pub fn block() -> Self {
        CodeRef::new(Fragment::Block(Vec::new()))
    }

    pub fn lock(&self) -> MutexGuard<'_, Fragment> {
        self.0.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn ptr_eq(a: &CodeRef, b: &CodeRef) -> bool {
        Arc::ptr_eq(&a.0, &b.0)
    }

    pub fn addr(&self) -> usize {
        Arc::as_ptr(&self.0) as *const () as usize
    }

    pub fn summary(&self) -> String {
        match &*self.lock() {
            Fragment::Shell { name, params, .. } => format!("function {name}/{}", params.len()),
            Fragment::Block(items) => format!("block of {}", items.len()),
            Fragment::Expr(e) => emit::expr_str(e),
            other => other.kind().to_string(),
        }
    }

    pub fn to_expr(&self) -> Result<Expr, String> {
        match &*self.lock() {
            Fragment::Expr(e) => Ok(e.clone()),
            other => Err(format!("expected an expression, found {}", other.kind())),
        }
    }

    pub fn to_stmt(&self) -> Result<Stmt, String> {
        Ok(match &*self.lock() {
            Fragment::Stmt(s) => s.clone(),
            Fragment::Expr(e) => Stmt::new(StmtKind::Expr(e.clone())),
            Fragment::Block(_) => Stmt::new(StmtKind::Block(self.to_block_inner()?)),
            Fragment::If { cond, then, els } => Stmt::new(StmtKind::If {
                at: 0,
                cond: cond.clone(),
                then: Box::new(Stmt::new(StmtKind::Block(then.to_block()?))),
                else_at: 0,
                els: match els {
                    Some(e) => Some(Box::new(Stmt::new(StmtKind::Block(e.to_block()?)))),
                    None => None,
                },
            }),
            Fragment::For { init, cond, step, body } => Stmt::new(StmtKind::For {
                at: 0,
                init: match init {
                    Some(i) => Some(Box::new(i.to_stmt()?)),
                    None => None,
                },
                cond: cond.clone(),
                step: step.clone(),
                body: Box::new(Stmt::new(StmtKind::Block(body.to_block()?))),
            }),
            other => return Err(format!("{} cannot appear as a statement", other.kind())),
        })
    }

    pub fn to_block(&self) -> Result<Block, String> {
        if matches!(&*self.lock(), Fragment::Block(_)) {
            self.to_block_inner()
        } else {
            Ok(Block::new(vec![self.to_stmt()?]))
        }
    }

    fn to_block_inner(&self) -> Result<Block, String> {
        let items = match &*self.lock() {
            Fragment::Block(items) => items.clone(),
            _ => unreachable!(),
        };
        Ok(Block::new(items.iter().map(CodeRef::to_stmt).collect::<Result<_, _>>()?))
    }

    /// The function a completed shell denotes, without a return type.
    pub fn to_function(&self) -> Result<FunctionDef, String> {
        let (name, params, body) = match &*self.lock() {
            Fragment::Shell { name, params, body } => (name.clone(), params.clone(), body.clone()),
            other => return Err(format!("expected a function shell, found {}", other.kind())),
        };
        Ok(FunctionDef { name, static_params: None, params, ret: None, body: body.to_block()?, span: Span::default() })
    }
}

impl fmt::Debug for CodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CodeRef({})", self.summary())
    }
}
