//! Abstract syntax for two-level programs.
//!
//! Every annotatable position stores the literal number of `@` characters
//! found there (`at`), so a residual (single-level) tree is simply one where
//! all of these counts are zero.
//!
//! Spans and node ids never participate in equality: two trees compare equal
//! when they are structurally the same, which is what the round-trip property
//! of the emitter is stated against.

use std::fmt;

/// Source position of a node (1-based line and column) plus byte range.
#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
    pub start: u32,
    pub end: u32,
}

impl Span {
    pub fn new(line: u32, col: u32, start: u32, end: u32) -> Self {
        Span { line, col, start, end }
    }

    /// Smallest span covering both.
    pub fn to(self, other: Span) -> Span {
        Span { end: other.end.max(self.end), ..self }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Identity of an expression or statement; assigned by the staging checker.
#[derive(Clone, Copy, Debug, Default)]
pub struct NodeId(pub u32);

impl PartialEq for NodeId {
    fn eq(&self, _: &NodeId) -> bool {
        true
    }
}

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Program {
    pub decls: Vec<Decl>,
}

impl Program {
    /// No annotations and no static parameter lists anywhere.
    pub fn is_single_level(&self) -> bool {
        self.decls.iter().all(|d| match d {
            Decl::Function(f) => !f.is_two_level() && f.params.iter().all(|p| p.at == 0 && !p.ty.has_annotations()) && !f.body.has_annotations(),
            Decl::Class(c) => {
                c.static_params.is_none()
                    && c.static_ctor.is_none()
                    && c.members.iter().all(|m| m.at == 0 && !m.ty.has_annotations())
                    && !c.ctor.as_ref().is_some_and(Block::has_annotations)
            }
            Decl::Stmt(s) => !s.has_annotations(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Decl {
    Function(FunctionDef),
    Class(ClassDef),
    Stmt(Stmt),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: TypeExpr,
    pub at: u8,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunctionDef {
    pub name: String,
    /// `None` for a single parameter list (all parameters dynamic).
    pub static_params: Option<Vec<Param>>,
    pub params: Vec<Param>,
    /// Present only on C-style typed definitions, i.e. residual functions.
    pub ret: Option<TypeExpr>,
    pub body: Block,
    pub span: Span,
}

impl FunctionDef {
    pub fn static_arity(&self) -> usize {
        self.static_params.as_ref().map_or(0, Vec::len)
    }

    pub fn is_two_level(&self) -> bool {
        self.static_params.is_some()
    }

    /// A definition with one parameter list and no annotations anywhere may
    /// run at any stage.
    pub fn is_stage_polymorphic(&self) -> bool {
        self.static_params.is_none()
            && self.ret.is_none()
            && self.params.iter().all(|p| p.at == 0)
            && !self.body.has_annotations()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Visibility {
    Public,
    Private,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Member {
    pub name: String,
    pub ty: TypeExpr,
    pub at: u8,
    pub is_static: bool,
    pub visibility: Visibility,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassDef {
    pub name: String,
    pub static_params: Option<Vec<Param>>,
    pub members: Vec<Member>,
    /// Constructor declared `Name@()`, run while the class is specialized.
    pub static_ctor: Option<Block>,
    /// Constructor declared `Name()`, run when an instance is created.
    pub ctor: Option<Block>,
    pub span: Span,
}

impl ClassDef {
    pub fn static_arity(&self) -> usize {
        self.static_params.as_ref().map_or(0, Vec::len)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Prim {
    Bool,
    Char,
    Int,
    LongInt,
    Float,
    Double,
    Void,
}

impl Prim {
    pub fn name(self) -> &'static str {
        match self {
            Prim::Bool => "bool",
            Prim::Char => "char",
            Prim::Int => "int",
            Prim::LongInt => "long int",
            Prim::Float => "float",
            Prim::Double => "double",
            Prim::Void => "void",
        }
    }

    pub fn is_integral(self) -> bool {
        matches!(self, Prim::Bool | Prim::Char | Prim::Int | Prim::LongInt)
    }

    pub fn is_floating(self) -> bool {
        matches!(self, Prim::Float | Prim::Double)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TypeExpr {
    Prim(Prim),
    /// The type of type values.
    Typename,
    /// The type of code fragments built by generators.
    Code,
    /// A type variable or a parameterless class.
    Named(String),
    ClassApp { name: String, args: Vec<Expr> },
    Pointer(Box<TypeExpr>),
    Array(Box<TypeExpr>, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub span: Span,
}

impl Block {
    pub fn new(stmts: Vec<Stmt>) -> Self {
        Block { stmts, span: Span::default() }
    }

    pub fn has_annotations(&self) -> bool {
        self.stmts.iter().any(Stmt::has_annotations)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Declarator {
    pub name: String,
    pub dim: Option<Expr>,
    pub init: Option<Expr>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CaseLabel {
    Case(Expr),
    Default,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwitchArm {
    pub labels: Vec<CaseLabel>,
    pub body: Vec<Stmt>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
    pub id: NodeId,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StmtKind {
    VarDecl { ty: TypeExpr, at: u8, decls: Vec<Declarator> },
    Expr(Expr),
    Block(Block),
    If { at: u8, cond: Expr, then: Box<Stmt>, else_at: u8, els: Option<Box<Stmt>> },
    For { at: u8, init: Option<Box<Stmt>>, cond: Option<Expr>, step: Option<Expr>, body: Box<Stmt> },
    Switch { at: u8, scrutinee: Expr, arms: Vec<SwitchArm> },
    Return(Option<Expr>),
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Self {
        Stmt { kind, span: Span::default(), id: NodeId::default() }
    }

    pub fn with_span(kind: StmtKind, span: Span) -> Self {
        Stmt { kind, span, id: NodeId::default() }
    }

    pub fn has_annotations(&self) -> bool {
        match &self.kind {
            StmtKind::VarDecl { ty, at, decls } => {
                *at > 0
                    || ty.has_annotations()
                    || decls.iter().any(|d| {
                        d.dim.as_ref().is_some_and(Expr::has_annotations)
                            || d.init.as_ref().is_some_and(Expr::has_annotations)
                    })
            }
            StmtKind::Expr(e) => e.has_annotations(),
            StmtKind::Block(b) => b.has_annotations(),
            StmtKind::If { at, cond, then, else_at, els } => {
                *at > 0
                    || *else_at > 0
                    || cond.has_annotations()
                    || then.has_annotations()
                    || els.as_ref().is_some_and(|s| s.has_annotations())
            }
            StmtKind::For { at, init, cond, step, body } => {
                *at > 0
                    || init.as_ref().is_some_and(|s| s.has_annotations())
                    || cond.as_ref().is_some_and(Expr::has_annotations)
                    || step.as_ref().is_some_and(Expr::has_annotations)
                    || body.has_annotations()
            }
            StmtKind::Switch { at, scrutinee, arms } => {
                *at > 0
                    || scrutinee.has_annotations()
                    || arms.iter().any(|a| {
                        a.body.iter().any(Stmt::has_annotations)
                            || a.labels.iter().any(|l| matches!(l, CaseLabel::Case(e) if e.has_annotations()))
                    })
            }
            StmtKind::Return(e) => e.as_ref().is_some_and(Expr::has_annotations),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
    PreInc,
    PreDec,
    PostInc,
    PostDec,
}

impl UnOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnOp::Neg => "-",
            UnOp::Not => "!",
            UnOp::PreInc | UnOp::PostInc => "++",
            UnOp::PreDec | UnOp::PostDec => "--",
        }
    }

    pub fn is_postfix(self) -> bool {
        matches!(self, UnOp::PostInc | UnOp::PostDec)
    }

    pub fn is_mutating(self) -> bool {
        !matches!(self, UnOp::Neg | UnOp::Not)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    pub fn from_symbol(s: &str) -> Option<BinOp> {
        Some(match s {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "%" => BinOp::Rem,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "&&" => BinOp::And,
            "||" => BinOp::Or,
            _ => return None,
        })
    }

    /// Binding power; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 3,
            BinOp::And => 4,
            BinOp::Eq | BinOp::Ne => 5,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 6,
            BinOp::Add | BinOp::Sub => 7,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 8,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne)
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }
}

/// `=` when `op` is `None`, otherwise a compound assignment such as `*=`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AssignOp(pub Option<BinOp>);

impl AssignOp {
    pub fn symbol(self) -> &'static str {
        match self.0 {
            None => "=",
            Some(BinOp::Add) => "+=",
            Some(BinOp::Sub) => "-=",
            Some(BinOp::Mul) => "*=",
            Some(BinOp::Div) => "/=",
            Some(BinOp::Rem) => "%=",
            Some(_) => unreachable!("no compound form for comparison or logical operators"),
        }
    }

    pub fn from_symbol(s: &str) -> Option<AssignOp> {
        Some(AssignOp(match s {
            "=" => None,
            "+=" => Some(BinOp::Add),
            "-=" => Some(BinOp::Sub),
            "*=" => Some(BinOp::Mul),
            "/=" => Some(BinOp::Div),
            "%=" => Some(BinOp::Rem),
            _ => return None,
        }))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
    pub id: NodeId,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
    Var(String),
    /// A type used as a value: `int`, `long int`, `typename`, ...
    Type(TypeExpr),
    Unary { op: UnOp, expr: Box<Expr> },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Assign { op: AssignOp, target: Box<Expr>, value: Box<Expr> },
    Cond { cond: Box<Expr>, then: Box<Expr>, els: Box<Expr> },
    /// `f(args)`, `f(static)(dynamic)` or `f@(args)`.
    Call { callee: String, at: u8, static_args: Option<Vec<Expr>>, args: Vec<Expr> },
    Index { base: Box<Expr>, index: Box<Expr> },
    Member { base: Box<Expr>, name: String },
    ArrayLit(Vec<Expr>),
}

impl Expr {
    pub fn new(kind: ExprKind) -> Self {
        Expr { kind, span: Span::default(), id: NodeId::default() }
    }

    pub fn with_span(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span, id: NodeId::default() }
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expr::new(ExprKind::Var(name.into()))
    }

    pub fn int(v: i64) -> Self {
        Expr::new(ExprKind::Int(v))
    }

    pub fn is_literal(&self) -> bool {
        matches!(self.kind, ExprKind::Int(_) | ExprKind::Float(_) | ExprKind::Bool(_) | ExprKind::Str(_))
    }

    pub fn has_annotations(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if let ExprKind::Call { at, .. } = e.kind {
                found |= at > 0;
            }
            if let ExprKind::Type(t) = &e.kind {
                found |= t.has_annotations();
            }
        });
        found
    }

    /// Pre-order traversal over this expression and all sub-expressions.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Unary { expr, .. } => expr.walk(f),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            ExprKind::Assign { target, value, .. } => {
                target.walk(f);
                value.walk(f);
            }
            ExprKind::Cond { cond, then, els } => {
                cond.walk(f);
                then.walk(f);
                els.walk(f);
            }
            ExprKind::Call { static_args, args, .. } => {
                for a in static_args.iter().flatten().chain(args) {
                    a.walk(f);
                }
            }
            ExprKind::Index { base, index } => {
                base.walk(f);
                index.walk(f);
            }
            ExprKind::Member { base, .. } => base.walk(f),
            ExprKind::ArrayLit(items) => items.iter().for_each(|e| e.walk(f)),
            ExprKind::Type(t) => t.walk_exprs(f),
            _ => {}
        }
    }
}

impl TypeExpr {
    pub fn has_annotations(&self) -> bool {
        let mut found = false;
        self.walk_exprs(&mut |e| found |= e.has_annotations());
        found
    }

    pub fn walk_exprs<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        match self {
            TypeExpr::ClassApp { args, .. } => args.iter().for_each(|a| a.walk(f)),
            TypeExpr::Pointer(t) => t.walk_exprs(f),
            TypeExpr::Array(t, n) => {
                t.walk_exprs(f);
                n.walk(f);
            }
            _ => {}
        }
    }

    /// Names of type variables or classes referenced by this type.
    pub fn named(&self) -> Option<&str> {
        match self {
            TypeExpr::Named(n) => Some(n),
            TypeExpr::ClassApp { name, .. } => Some(name),
            TypeExpr::Pointer(t) | TypeExpr::Array(t, _) => t.named(),
            _ => None,
        }
    }
}
