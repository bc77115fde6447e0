//! Deterministic pretty-printer. Output re-parses to a structurally equal tree.

use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

pub fn emit_program(program: &Program) -> String {
    let mut out = String::new();
    let mut prev_was_stmt = false;
    for (i, decl) in program.decls.iter().enumerate() {
        let is_stmt = matches!(decl, Decl::Stmt(_));
        if i > 0 && !(is_stmt && prev_was_stmt) {
            out.push('\n');
        }
        match decl {
            Decl::Function(f) => out.push_str(&emit_function(f)),
            Decl::Class(c) => out.push_str(&emit_class(c)),
            Decl::Stmt(s) => {
                emit_stmt(&mut out, s, 0);
                out.push('\n');
            }
        }
        prev_was_stmt = is_stmt;
    }
    out
}

pub fn emit_function(f: &FunctionDef) -> String {
    let mut out = String::new();
    match &f.ret {
        Some(ret) => write!(out, "{} {}", type_str(ret, 0), f.name).unwrap(),
        None => write!(out, "function {}", f.name).unwrap(),
    }
    if let Some(sp) = &f.static_params {
        out.push_str(&param_list(sp));
    }
    out.push_str(&param_list(&f.params));
    out.push(' ');
    emit_block(&mut out, &f.body, 0);
    out.push('\n');
    out
}

pub fn emit_class(c: &ClassDef) -> String {
    let mut out = String::new();
    write!(out, "class {}", c.name).unwrap();
    if let Some(sp) = &c.static_params {
        out.push_str(&param_list(sp));
    }
    out.push_str(" {\n");
    if c.static_ctor.is_some() || c.ctor.is_some() {
        out.push_str("public:\n");
        if let Some(b) = &c.static_ctor {
            write!(out, "{INDENT}{}@() ", c.name).unwrap();
            emit_block(&mut out, b, 1);
            out.push('\n');
        }
        if let Some(b) = &c.ctor {
            write!(out, "{INDENT}{}() ", c.name).unwrap();
            emit_block(&mut out, b, 1);
            out.push('\n');
        }
    }
    let mut current = if c.static_ctor.is_some() || c.ctor.is_some() { Some(Visibility::Public) } else { None };
    for m in &c.members {
        if current != Some(m.visibility) {
            out.push_str(match m.visibility {
                Visibility::Public => "public:\n",
                Visibility::Private => "private:\n",
            });
            current = Some(m.visibility);
        }
        out.push_str(INDENT);
        if m.is_static {
            out.push_str("static ");
        }
        let (base, dim) = match &m.ty {
            TypeExpr::Array(elem, n) => (elem.as_ref(), Some(n.as_ref())),
            t => (t, None),
        };
        write!(out, "{} {}", type_str(base, m.at), m.name).unwrap();
        if let Some(n) = dim {
            write!(out, "[{}]", expr_str(n)).unwrap();
        }
        out.push_str(";\n");
    }
    out.push_str("}\n");
    out
}

fn param_list(params: &[Param]) -> String {
    let items: Vec<String> = params.iter().map(|p| format!("{} {}", type_str(&p.ty, p.at), p.name)).collect();
    format!("({})", items.join(", "))
}

/// Render a type with `at` annotations in the position the parser expects.
pub fn type_str(ty: &TypeExpr, at: u8) -> String {
    let ats = "@".repeat(at as usize);
    match ty {
        TypeExpr::Prim(p) => format!("{}{ats}", p.name()),
        TypeExpr::Typename => format!("typename{ats}"),
        TypeExpr::Code => format!("ASTree{ats}"),
        TypeExpr::Named(n) => format!("{n}{ats}"),
        TypeExpr::ClassApp { name, args } => format!("{name}{ats}({})", args_str(args)),
        TypeExpr::Pointer(inner) => format!("{}*", type_str(inner, at)),
        TypeExpr::Array(inner, n) => format!("{}[{}]", type_str(inner, at), expr_str(n)),
    }
}

fn args_str(args: &[Expr]) -> String {
    args.iter().map(expr_str).collect::<Vec<_>>().join(", ")
}

pub fn emit_block(out: &mut String, b: &Block, depth: usize) {
    out.push_str("{\n");
    for s in &b.stmts {
        indent(out, depth + 1);
        emit_stmt(out, s, depth + 1);
        out.push('\n');
    }
    indent(out, depth);
    out.push('}');
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
}

fn at_str(at: u8) -> String {
    "@".repeat(at as usize)
}

/// Emit `stmt` assuming the cursor is already indented to `depth`.
pub fn emit_stmt(out: &mut String, stmt: &Stmt, depth: usize) {
    match &stmt.kind {
        StmtKind::VarDecl { .. } | StmtKind::Expr(_) => {
            out.push_str(&simple_stmt_str(stmt));
            out.push(';');
        }
        StmtKind::Block(b) => emit_block(out, b, depth),
        StmtKind::Return(e) => match e {
            Some(e) => write!(out, "return {};", expr_str(e)).unwrap(),
            None => out.push_str("return;"),
        },
        StmtKind::If { at, cond, then, else_at, els } => {
            write!(out, "if{} ({}) ", at_str(*at), expr_str(cond)).unwrap();
            let then_is_block = emit_branch(out, then, depth);
            if let Some(els) = els {
                if then_is_block {
                    out.push(' ');
                } else {
                    out.push('\n');
                    indent(out, depth);
                }
                write!(out, "else{}", at_str(*else_at)).unwrap();
                if matches!(els.kind, StmtKind::If { .. }) {
                    out.push(' ');
                    emit_stmt(out, els, depth);
                } else {
                    out.push(' ');
                    emit_branch(out, els, depth);
                }
            }
        }
        StmtKind::For { at, init, cond, step, body } => {
            write!(
                out,
                "for{} ({}; {}; {}) ",
                at_str(*at),
                init.as_ref().map(|s| simple_stmt_str(s)).unwrap_or_default(),
                cond.as_ref().map(expr_str).unwrap_or_default(),
                step.as_ref().map(expr_str).unwrap_or_default(),
            )
            .unwrap();
            emit_branch(out, body, depth);
        }
        StmtKind::Switch { at, scrutinee, arms } => {
            writeln!(out, "switch{} ({}) {{", at_str(*at), expr_str(scrutinee)).unwrap();
            for arm in arms {
                for label in &arm.labels {
                    indent(out, depth + 1);
                    match label {
                        CaseLabel::Case(e) => writeln!(out, "case {}:", expr_str(e)).unwrap(),
                        CaseLabel::Default => out.push_str("default:\n"),
                    }
                }
                for s in &arm.body {
                    indent(out, depth + 2);
                    emit_stmt(out, s, depth + 2);
                    out.push('\n');
                }
            }
            indent(out, depth);
            out.push('}');
        }
    }
}

/// Blocks stay on the header line; other statements go on an indented line.
fn emit_branch(out: &mut String, stmt: &Stmt, depth: usize) -> bool {
    if let StmtKind::Block(b) = &stmt.kind {
        emit_block(out, b, depth);
        true
    } else {
        // Replace the trailing space left by the header.
        if out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
        indent(out, depth + 1);
        emit_stmt(out, stmt, depth + 1);
        false
    }
}

fn simple_stmt_str(stmt: &Stmt) -> String {
    match &stmt.kind {
        StmtKind::VarDecl { ty, at, decls } => {
            let parts: Vec<String> = decls
                .iter()
                .map(|d| {
                    let mut s = d.name.clone();
                    if let Some(n) = &d.dim {
                        write!(s, "[{}]", expr_str(n)).unwrap();
                    }
                    if let Some(init) = &d.init {
                        write!(s, " = {}", expr_str(init)).unwrap();
                    }
                    s
                })
                .collect();
            format!("{} {}", type_str(ty, *at), parts.join(", "))
        }
        StmtKind::Expr(e) => expr_str(e),
        _ => unreachable!("only declarations and expressions appear in simple position"),
    }
}

const PREC_ASSIGN: u8 = 1;
const PREC_COND: u8 = 2;
const PREC_UNARY: u8 = 9;
const PREC_POSTFIX: u8 = 10;
const PREC_ATOM: u8 = 11;

pub fn expr_str(e: &Expr) -> String {
    render(e, 0)
}

fn render(e: &Expr, min: u8) -> String {
    let (s, prec) = render_raw(e);
    if prec < min {
        format!("({s})")
    } else {
        s
    }
}

fn render_raw(e: &Expr) -> (String, u8) {
    match &e.kind {
        ExprKind::Int(v) => (v.to_string(), if *v < 0 { PREC_UNARY } else { PREC_ATOM }),
        ExprKind::Float(v) => (format!("{v:?}"), if v.is_sign_negative() { PREC_UNARY } else { PREC_ATOM }),
        ExprKind::Bool(b) => (b.to_string(), PREC_ATOM),
        ExprKind::Str(s) => {
            let mut out = String::from("\"");
            for c in s.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    c => out.push(c),
                }
            }
            out.push('"');
            (out, PREC_ATOM)
        }
        ExprKind::Var(n) => (n.clone(), PREC_ATOM),
        ExprKind::Type(t) => (type_str(t, 0), PREC_ATOM),
        ExprKind::Unary { op, expr } => {
            if op.is_postfix() {
                (format!("{}{}", render(expr, PREC_POSTFIX), op.symbol()), PREC_POSTFIX)
            } else {
                let mut inner = render(expr, PREC_UNARY);
                // `-5` would read back as one literal.
                let literal = matches!(expr.kind, ExprKind::Int(_) | ExprKind::Float(_));
                if inner.starts_with('-') || inner.starts_with('+') || (*op == UnOp::Neg && literal) {
                    inner = format!("({inner})");
                }
                (format!("{}{}", op.symbol(), inner), PREC_UNARY)
            }
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            (format!("{} {} {}", render(lhs, p), op.symbol(), render(rhs, p + 1)), p)
        }
        ExprKind::Assign { op, target, value } => (
            format!("{} {} {}", render(target, PREC_COND), op.symbol(), render(value, PREC_ASSIGN)),
            PREC_ASSIGN,
        ),
        ExprKind::Cond { cond, then, els } => (
            format!("{} ? {} : {}", render(cond, PREC_COND + 1), render(then, 0), render(els, PREC_COND)),
            PREC_COND,
        ),
        ExprKind::Call { callee, at, static_args, args } => {
            let mut s = format!("{callee}{}", at_str(*at));
            if let Some(sa) = static_args {
                write!(s, "({})", args_str(sa)).unwrap();
            }
            write!(s, "({})", args_str(args)).unwrap();
            (s, PREC_ATOM)
        }
        ExprKind::Index { base, index } => (format!("{}[{}]", render(base, PREC_POSTFIX), expr_str(index)), PREC_POSTFIX),
        ExprKind::Member { base, name } => (format!("{}.{name}", render(base, PREC_POSTFIX)), PREC_POSTFIX),
        ExprKind::ArrayLit(items) => (format!("{{{}}}", args_str(items)), PREC_ATOM),
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn round_trip(src: &str) {
        let p = parse(src).unwrap();
        let text = emit_program(&p);
        let q = parse(&text).unwrap_or_else(|e| panic!("re-parse failed: {e}\n{text}"));
        assert_eq!(p, q, "round trip changed structure:\n{text}");
        assert_eq!(text, emit_program(&q), "emission not a fixed point");
    }

    #[test]
    fn expressions_round_trip() {
        round_trip("int x = (a + b) * c - -5 / (d - e) % 3;");
        round_trip("int y = a - (b - c);");
        round_trip("bool z = !(a < b) || c && d == e;");
        round_trip("x = y = (c ? 1 : 2) + 1;");
        round_trip("int w = a ? b : c ? d : e;");
        round_trip("int v = (a ? b : c) ? d : e;");
        round_trip("x[i + 1] = -(-y);");
        round_trip("a.b[2]++;");
        round_trip("--x;");
        round_trip("int arr[3] = {1, 2, 3};");
        round_trip("float f = 1.5e-7 * -2.0;");
        round_trip("Catat_error@(\"quote \\\" and backslash \\\\\");");
    }

    #[test]
    fn statements_round_trip() {
        round_trip(
            "function f(int@ N)(int x) {
                if@ (N > 1) { x += 1; } else@ if@ (N == 0) x = 2; else@ { return 1; }
                for (int i = 0; i < x; ++i) x *= 2;
                switch@ (N) { case 1: case 2: return 3; default: return 4; }
                return x;
            }",
        );
    }

    #[test]
    fn class_round_trip() {
        round_trip(
            "class V(typename@ T, int@ N) { public: static int@ k; private: T data[N]; public: int z; }
             class W { int a; }
             class X { X() { a = 1; } int a; }",
        );
    }

    #[test]
    fn residual_signature_line() {
        let p = parse("float average__int(int* array, int N) { float sum = 0; return sum / N; }").unwrap();
        let text = emit_program(&p);
        assert_eq!(text.lines().next().unwrap(), "float average__int(int* array, int N) {");
    }

    #[test]
    fn deterministic() {
        let p = parse("function g(typename@ T)(T* a) { T r = 0; return r; }").unwrap();
        assert_eq!(emit_program(&p), emit_program(&p));
    }
}
