use std::collections::HashSet;

use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use super::SyntaxError;

/// Parse a whole source file.
pub fn parse(source: &str) -> Result<Program, SyntaxError> {
    let mut p = Parser::new(source)?;
    let program = p.program()?;
    check_duplicates(&program)?;
    Ok(program)
}

/// Parse a comma-separated list of expressions, as used for command-line
/// argument lists. An empty (or all-whitespace) input yields an empty list.
pub fn parse_expr_list(source: &str) -> Result<Vec<Expr>, SyntaxError> {
    let mut p = Parser::new(source)?;
    let mut out = Vec::new();
    if p.at_eof() {
        return Ok(out);
    }
    loop {
        out.push(p.expr()?);
        if !p.eat_punct(",") {
            break;
        }
    }
    if !p.at_eof() {
        return Err(p.unexpected("`,` or end of input"));
    }
    Ok(out)
}

/// Parse a single expression.
pub fn parse_expr(source: &str) -> Result<Expr, SyntaxError> {
    let mut p = Parser::new(source)?;
    let e = p.expr()?;
    if !p.at_eof() {
        return Err(p.unexpected("end of input"));
    }
    Ok(e)
}

fn check_duplicates(program: &Program) -> Result<(), SyntaxError> {
    let mut functions = HashSet::new();
    let mut classes = HashSet::new();
    for decl in &program.decls {
        match decl {
            Decl::Function(f) => {
                if classes.contains(&f.name) || !functions.insert((f.name.clone(), f.static_arity())) {
                    return Err(SyntaxError::Duplicate { span: f.span, name: f.name.clone() });
                }
            }
            Decl::Class(c) => {
                if functions.iter().any(|(n, _)| n == &c.name) || !classes.insert(c.name.clone()) {
                    return Err(SyntaxError::Duplicate { span: c.span, name: c.name.clone() });
                }
            }
            Decl::Stmt(_) => {}
        }
    }
    Ok(())
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    eof: Span,
}

impl Parser {
    fn new(source: &str) -> Result<Self, SyntaxError> {
        let toks = tokenize(source)?;
        let (mut line, mut col) = (1u32, 1u32);
        for c in source.chars() {
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }
        let n = source.len() as u32;
        Ok(Parser { toks, pos: 0, eof: Span::new(line, col, n, n) })
    }

    // ---- token helpers -------------------------------------------------

    fn at_eof(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn peek_n(&self, n: usize) -> Option<&Token> {
        self.toks.get(self.pos + n)
    }

    fn span(&self) -> Span {
        self.peek().map_or(self.eof, |t| t.span)
    }

    fn prev_span(&self) -> Span {
        self.pos.checked_sub(1).and_then(|i| self.toks.get(i)).map_or(self.eof, |t| t.span)
    }

    fn at_punct(&self, p: &str) -> bool {
        self.peek().is_some_and(|t| t.is(TokenKind::Punct, p))
    }

    fn at_kw(&self, k: &str) -> bool {
        self.peek().is_some_and(|t| t.is(TokenKind::Keyword, k))
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.at_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.at_kw(k) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<Span, SyntaxError> {
        if self.at_punct(p) {
            self.pos += 1;
            Ok(self.prev_span())
        } else {
            Err(self.unexpected(&format!("`{p}`")))
        }
    }

    fn expect_ident(&mut self) -> Result<(String, Span), SyntaxError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => {
                let out = (t.text.clone(), t.span);
                self.pos += 1;
                Ok(out)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn at_run(&mut self) -> u8 {
        match self.peek() {
            Some(t) if t.kind == TokenKind::AtRun => {
                let n = t.at_count();
                self.pos += 1;
                n
            }
            _ => 0,
        }
    }

    fn unexpected(&self, expected: &str) -> SyntaxError {
        let found = match self.peek() {
            Some(t) if t.kind == TokenKind::Str => format!("string {:?}", t.text),
            Some(t) => format!("`{}`", t.text),
            None => "end of input".to_string(),
        };
        SyntaxError::Parse { span: self.span(), message: format!("expected {expected}, found {found}") }
    }

    // ---- declarations --------------------------------------------------

    fn program(&mut self) -> Result<Program, SyntaxError> {
        let mut decls = Vec::new();
        while !self.at_eof() {
            decls.push(self.decl()?);
        }
        Ok(Program { decls })
    }

    fn decl(&mut self) -> Result<Decl, SyntaxError> {
        if self.at_kw("function") {
            return Ok(Decl::Function(self.function_def()?));
        }
        if self.at_kw("class") {
            return Ok(Decl::Class(self.class_def()?));
        }
        if let Some(f) = self.try_typed_function()? {
            return Ok(Decl::Function(f));
        }
        Ok(Decl::Stmt(self.stmt()?))
    }

    fn function_def(&mut self) -> Result<FunctionDef, SyntaxError> {
        let start = self.span();
        self.eat_kw("function");
        let (name, _) = self.expect_ident()?;
        let first = self.param_list()?;
        let (static_params, params) = if self.at_punct("(") {
            (Some(first), self.param_list()?)
        } else {
            (None, first)
        };
        let body = self.block()?;
        let span = start.to(self.prev_span());
        Ok(FunctionDef { name, static_params, params, ret: None, body, span })
    }

    /// `type name(params) { ... }`: the C-style form residual functions take.
    /// A second parameter list makes it a typed two-level definition.
    fn try_typed_function(&mut self) -> Result<Option<FunctionDef>, SyntaxError> {
        let save = self.pos;
        let start = self.span();
        let Ok((ret, 0)) = self.type_with_at() else {
            self.pos = save;
            return Ok(None);
        };
        let is_fn = self.peek().is_some_and(|t| t.kind == TokenKind::Ident)
            && self.peek_n(1).is_some_and(|t| t.is(TokenKind::Punct, "("));
        if !is_fn {
            self.pos = save;
            return Ok(None);
        }
        let (name, _) = self.expect_ident()?;
        let first = self.param_list()?;
        let (static_params, params) = if self.at_punct("(") {
            (Some(first), self.param_list()?)
        } else {
            (None, first)
        };
        let body = self.block()?;
        let span = start.to(self.prev_span());
        Ok(Some(FunctionDef { name, static_params, params, ret: Some(ret), body, span }))
    }

    fn param_list(&mut self) -> Result<Vec<Param>, SyntaxError> {
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if self.eat_punct(")") {
            return Ok(params);
        }
        loop {
            let start = self.span();
            let (ty, at) = self.type_with_at()?;
            let (name, _) = self.expect_ident()?;
            params.push(Param { name, ty, at, span: start.to(self.prev_span()) });
            if self.eat_punct(")") {
                return Ok(params);
            }
            self.expect_punct(",")?;
        }
    }

    fn class_def(&mut self) -> Result<ClassDef, SyntaxError> {
        let start = self.span();
        self.eat_kw("class");
        let (name, _) = self.expect_ident()?;
        let static_params = if self.at_punct("(") { Some(self.param_list()?) } else { None };
        self.expect_punct("{")?;
        let mut members = Vec::new();
        let (mut static_ctor, mut ctor) = (None, None);
        let mut visibility = Visibility::Private;
        while !self.eat_punct("}") {
            if self.at_eof() {
                return Err(self.unexpected("`}`"));
            }
            if self.eat_kw("public") {
                self.expect_punct(":")?;
                visibility = Visibility::Public;
                continue;
            }
            if self.eat_kw("private") {
                self.expect_punct(":")?;
                visibility = Visibility::Private;
                continue;
            }
            if self.is_ctor_head(&name) {
                let ctor_span = self.span();
                self.pos += 1;
                let at = self.at_run();
                self.expect_punct("(")?;
                self.expect_punct(")")?;
                let body = self.block()?;
                let slot = if at > 0 { &mut static_ctor } else { &mut ctor };
                if slot.is_some() {
                    return Err(SyntaxError::Parse {
                        span: ctor_span,
                        message: format!("duplicate {} constructor for class `{name}`", if at > 0 { "static" } else { "dynamic" }),
                    });
                }
                *slot = Some(body);
                continue;
            }
            let is_static = self.eat_kw("static");
            let (ty, at) = self.type_with_at()?;
            loop {
                let (mname, mspan) = self.expect_ident()?;
                let mty = if self.eat_punct("[") {
                    let dim = self.expr()?;
                    self.expect_punct("]")?;
                    TypeExpr::Array(Box::new(ty.clone()), Box::new(dim))
                } else {
                    ty.clone()
                };
                members.push(Member { name: mname, ty: mty, at, is_static, visibility, span: mspan });
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect_punct(";")?;
        }
        self.eat_punct(";");
        let span = start.to(self.prev_span());
        Ok(ClassDef { name, static_params, members, static_ctor, ctor, span })
    }

    fn is_ctor_head(&self, class: &str) -> bool {
        if !self.peek().is_some_and(|t| t.is(TokenKind::Ident, class)) {
            return false;
        }
        let mut i = 1;
        if self.peek_n(i).is_some_and(|t| t.kind == TokenKind::AtRun) {
            i += 1;
        }
        self.peek_n(i).is_some_and(|t| t.is(TokenKind::Punct, "("))
            && self.peek_n(i + 1).is_some_and(|t| t.is(TokenKind::Punct, ")"))
            && self.peek_n(i + 2).is_some_and(|t| t.is(TokenKind::Punct, "{"))
    }

    // ---- types ---------------------------------------------------------

    fn base_type_keyword(&mut self) -> Option<TypeExpr> {
        let t = self.peek()?;
        if t.kind != TokenKind::Keyword {
            return None;
        }
        let ty = match t.text.as_str() {
            "int" => TypeExpr::Prim(Prim::Int),
            "float" => TypeExpr::Prim(Prim::Float),
            "double" => TypeExpr::Prim(Prim::Double),
            "char" => TypeExpr::Prim(Prim::Char),
            "bool" => TypeExpr::Prim(Prim::Bool),
            "void" => TypeExpr::Prim(Prim::Void),
            "typename" => TypeExpr::Typename,
            "ASTree" => TypeExpr::Code,
            "long" => {
                self.pos += 1;
                self.eat_kw("int");
                return Some(TypeExpr::Prim(Prim::LongInt));
            }
            _ => return None,
        };
        self.pos += 1;
        Some(ty)
    }

    /// A type plus the `@` count written on it. `const T` counts as one `@`.
    fn type_with_at(&mut self) -> Result<(TypeExpr, u8), SyntaxError> {
        let mut at = 0u8;
        if self.eat_kw("const") {
            at += 1;
        }
        let mut ty = if let Some(t) = self.base_type_keyword() {
            at = at.saturating_add(self.at_run());
            t
        } else {
            let (name, _) = self.expect_ident().map_err(|_| self.unexpected("type"))?;
            let save = self.pos;
            let class_at = self.at_run();
            if self.at_punct("(") {
                self.pos += 1;
                let args = self.args_until_close()?;
                at = at.saturating_add(class_at);
                TypeExpr::ClassApp { name, args }
            } else {
                self.pos = save;
                at = at.saturating_add(self.at_run());
                TypeExpr::Named(name)
            }
        };
        while self.eat_punct("*") {
            ty = TypeExpr::Pointer(Box::new(ty));
        }
        Ok((ty, at))
    }

    // ---- statements ----------------------------------------------------

    fn block(&mut self) -> Result<Block, SyntaxError> {
        let start = self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.eat_punct("}") {
            if self.at_eof() {
                return Err(self.unexpected("`}`"));
            }
            stmts.push(self.stmt()?);
        }
        Ok(Block { stmts, span: start.to(self.prev_span()) })
    }

    fn stmt(&mut self) -> Result<Stmt, SyntaxError> {
        let start = self.span();
        let kind = if self.at_punct("{") {
            StmtKind::Block(self.block()?)
        } else if self.eat_kw("for") {
            let at = self.at_run();
            self.expect_punct("(")?;
            let init = if self.eat_punct(";") {
                None
            } else {
                let s = self.simple_stmt()?;
                self.expect_punct(";")?;
                Some(Box::new(s))
            };
            let cond = if self.at_punct(";") { None } else { Some(self.expr()?) };
            self.expect_punct(";")?;
            let step = if self.at_punct(")") { None } else { Some(self.expr()?) };
            self.expect_punct(")")?;
            let body = Box::new(self.stmt()?);
            StmtKind::For { at, init, cond, step, body }
        } else if self.eat_kw("if") {
            let at = self.at_run();
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            let then = Box::new(self.stmt()?);
            let (else_at, els) = if self.eat_kw("else") {
                let a = self.at_run();
                (a, Some(Box::new(self.stmt()?)))
            } else {
                (0, None)
            };
            StmtKind::If { at, cond, then, else_at, els }
        } else if self.eat_kw("switch") {
            let at = self.at_run();
            self.expect_punct("(")?;
            let scrutinee = self.expr()?;
            self.expect_punct(")")?;
            self.expect_punct("{")?;
            let mut arms: Vec<SwitchArm> = Vec::new();
            while !self.eat_punct("}") {
                let mut labels = Vec::new();
                loop {
                    if self.eat_kw("case") {
                        let e = self.expr()?;
                        self.expect_punct(":")?;
                        labels.push(CaseLabel::Case(e));
                    } else if self.eat_kw("default") {
                        self.expect_punct(":")?;
                        labels.push(CaseLabel::Default);
                    } else {
                        break;
                    }
                }
                if labels.is_empty() {
                    return Err(self.unexpected("`case`, `default` or `}`"));
                }
                let mut body = Vec::new();
                while !(self.at_kw("case") || self.at_kw("default") || self.at_punct("}")) {
                    if self.at_eof() {
                        return Err(self.unexpected("`}`"));
                    }
                    body.push(self.stmt()?);
                }
                arms.push(SwitchArm { labels, body });
            }
            StmtKind::Switch { at, scrutinee, arms }
        } else if self.eat_kw("return") {
            let e = if self.at_punct(";") { None } else { Some(self.expr()?) };
            self.expect_punct(";")?;
            StmtKind::Return(e)
        } else {
            let s = self.simple_stmt()?;
            self.expect_punct(";")?;
            return Ok(Stmt { span: start.to(self.prev_span()), ..s });
        };
        Ok(Stmt::with_span(kind, start.to(self.prev_span())))
    }

    /// A declaration or expression statement without its terminating `;`.
    fn simple_stmt(&mut self) -> Result<Stmt, SyntaxError> {
        let start = self.span();
        let save = self.pos;
        if let Ok((ty, at)) = self.type_with_at() {
            if self.peek().is_some_and(|t| t.kind == TokenKind::Ident) {
                let decls = self.declarators()?;
                return Ok(Stmt::with_span(StmtKind::VarDecl { ty, at, decls }, start.to(self.prev_span())));
            }
        }
        self.pos = save;
        let e = self.expr()?;
        Ok(Stmt::with_span(StmtKind::Expr(e), start.to(self.prev_span())))
    }

    fn declarators(&mut self) -> Result<Vec<Declarator>, SyntaxError> {
        let mut out = Vec::new();
        loop {
            let (name, span) = self.expect_ident()?;
            let dim = if self.eat_punct("[") {
                let d = self.expr()?;
                self.expect_punct("]")?;
                Some(d)
            } else {
                None
            };
            let init = if self.eat_punct("=") { Some(self.expr()?) } else { None };
            out.push(Declarator { name, dim, init, span: span.to(self.prev_span()) });
            if !self.eat_punct(",") {
                return Ok(out);
            }
        }
    }

    // ---- expressions ---------------------------------------------------

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        let lhs = self.ternary()?;
        if let Some(op) = self.peek().filter(|t| t.kind == TokenKind::Punct).and_then(|t| AssignOp::from_symbol(&t.text)) {
            self.pos += 1;
            let value = self.expr()?;
            let span = lhs.span.to(value.span);
            return Ok(Expr::with_span(ExprKind::Assign { op, target: Box::new(lhs), value: Box::new(value) }, span));
        }
        Ok(lhs)
    }

    fn ternary(&mut self) -> Result<Expr, SyntaxError> {
        let cond = self.binary(0)?;
        if !self.eat_punct("?") {
            return Ok(cond);
        }
        let then = self.expr()?;
        self.expect_punct(":")?;
        let els = self.ternary()?;
        let span = cond.span.to(els.span);
        Ok(Expr::with_span(ExprKind::Cond { cond: Box::new(cond), then: Box::new(then), els: Box::new(els) }, span))
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, SyntaxError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek().filter(|t| t.kind == TokenKind::Punct).and_then(|t| BinOp::from_symbol(&t.text)) {
            if op.precedence() < min_prec {
                break;
            }
            self.pos += 1;
            let rhs = self.binary(op.precedence() + 1)?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr::with_span(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, SyntaxError> {
        let start = self.span();
        let op = if self.eat_punct("-") {
            if let Some(t) = self.peek().filter(|t| matches!(t.kind, TokenKind::Int | TokenKind::Float)) {
                let (kind, text, span) = (t.kind, t.text.clone(), t.span);
                self.pos += 1;
                let lit = if kind == TokenKind::Int {
                    let v: u64 = text.parse().expect("lexer validated integer literal");
                    ExprKind::Int((v as i64).wrapping_neg())
                } else {
                    ExprKind::Float(-text.parse::<f64>().expect("lexer validated float literal"))
                };
                return self.postfix(Expr::with_span(lit, start.to(span)));
            }
            UnOp::Neg
        } else if self.eat_punct("!") {
            UnOp::Not
        } else if self.eat_punct("++") {
            UnOp::PreInc
        } else if self.eat_punct("--") {
            UnOp::PreDec
        } else {
            let p = self.primary()?;
            return self.postfix(p);
        };
        let e = self.unary()?;
        let span = start.to(e.span);
        Ok(Expr::with_span(ExprKind::Unary { op, expr: Box::new(e) }, span))
    }

    fn postfix(&mut self, mut e: Expr) -> Result<Expr, SyntaxError> {
        loop {
            if self.eat_punct("[") {
                let index = self.expr()?;
                self.expect_punct("]")?;
                let span = e.span.to(self.prev_span());
                e = Expr::with_span(ExprKind::Index { base: Box::new(e), index: Box::new(index) }, span);
            } else if self.eat_punct(".") {
                let (name, nspan) = self.expect_ident()?;
                let span = e.span.to(nspan);
                e = Expr::with_span(ExprKind::Member { base: Box::new(e), name }, span);
            } else if self.at_punct("++") || self.at_punct("--") {
                let op = if self.eat_punct("++") {
                    UnOp::PostInc
                } else {
                    self.pos += 1;
                    UnOp::PostDec
                };
                let span = e.span.to(self.prev_span());
                e = Expr::with_span(ExprKind::Unary { op, expr: Box::new(e) }, span);
            } else {
                return Ok(e);
            }
        }
    }

    fn args_until_close(&mut self) -> Result<Vec<Expr>, SyntaxError> {
        let mut args = Vec::new();
        if self.eat_punct(")") {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat_punct(")") {
                return Ok(args);
            }
            self.expect_punct(",")?;
        }
    }

    fn primary(&mut self) -> Result<Expr, SyntaxError> {
        let start = self.span();
        let Some(tok) = self.peek().cloned() else {
            return Err(self.unexpected("expression"));
        };
        let kind = match tok.kind {
            TokenKind::Int => {
                self.pos += 1;
                let v: u64 = tok.text.parse().expect("lexer validated integer literal");
                if v > i64::MAX as u64 {
                    return Err(SyntaxError::Lex { span: tok.span, message: format!("integer literal {v} out of range") });
                }
                ExprKind::Int(v as i64)
            }
            TokenKind::Float => {
                self.pos += 1;
                ExprKind::Float(tok.text.parse().expect("lexer validated float literal"))
            }
            TokenKind::Str => {
                self.pos += 1;
                ExprKind::Str(tok.text)
            }
            TokenKind::Keyword if tok.text == "true" || tok.text == "false" => {
                self.pos += 1;
                ExprKind::Bool(tok.text == "true")
            }
            TokenKind::Keyword => match self.base_type_keyword() {
                Some(t) => ExprKind::Type(t),
                None => return Err(self.unexpected("expression")),
            },
            TokenKind::Punct if tok.text == "(" => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_punct(")")?;
                return Ok(e);
            }
            TokenKind::Punct if tok.text == "{" => {
                self.pos += 1;
                let mut items = Vec::new();
                if !self.eat_punct("}") {
                    loop {
                        items.push(self.expr()?);
                        if self.eat_punct("}") {
                            break;
                        }
                        self.expect_punct(",")?;
                    }
                }
                ExprKind::ArrayLit(items)
            }
            TokenKind::Ident => {
                self.pos += 1;
                let at = self.at_run();
                if self.eat_punct("(") {
                    let first = self.args_until_close()?;
                    if self.eat_punct("(") {
                        let second = self.args_until_close()?;
                        ExprKind::Call { callee: tok.text, at, static_args: Some(first), args: second }
                    } else {
                        ExprKind::Call { callee: tok.text, at, static_args: None, args: first }
                    }
                } else if at > 0 {
                    return Err(self.unexpected("`(` after staged call"));
                } else {
                    ExprKind::Var(tok.text)
                }
            }
            _ => return Err(self.unexpected("expression")),
        };
        Ok(Expr::with_span(kind, start.to(self.prev_span())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn function(src: &str) -> FunctionDef {
        match parse(src).unwrap().decls.remove(0) {
            Decl::Function(f) => f,
            other => panic!("expected function, got {other:?}"),
        }
    }

    #[test]
    fn dot_signature() {
        let f = function(
            "function dot(int@ N, typename@ T)(T* a, T* b) {
                T result = 0;
                for@ (int@ i=0; i < N; ++i)
                    result += a[i]*b[i];
                return result;
            }",
        );
        let sp = f.static_params.as_ref().unwrap();
        assert_eq!(sp.len(), 2);
        assert_eq!((sp[0].name.as_str(), &sp[0].ty, sp[0].at), ("N", &TypeExpr::Prim(Prim::Int), 1));
        assert_eq!((sp[1].name.as_str(), &sp[1].ty, sp[1].at), ("T", &TypeExpr::Typename, 1));
        let ptr_t = TypeExpr::Pointer(Box::new(TypeExpr::Named("T".into())));
        assert_eq!((f.params[0].name.as_str(), &f.params[0].ty, f.params[0].at), ("a", &ptr_t, 0));
        assert_eq!((f.params[1].name.as_str(), &f.params[1].ty, f.params[1].at), ("b", &ptr_t, 0));
        assert!(matches!(f.body.stmts[1].kind, StmtKind::For { at: 1, .. }));
    }

    #[test]
    fn minimal_function() {
        let f = function("function f()() { return 0; }");
        assert_eq!(f.static_params, Some(vec![]));
        assert!(f.params.is_empty());
        assert_eq!(f.body.stmts.len(), 1);
    }

    #[test]
    fn type_switch() {
        let f = function(
            "function average_type(typename T) {
                switch(T) {
                    case int:       return float;
                    case char:      return float;
                    case long int:  return double;
                    default:        return T;
                }
            }",
        );
        assert!(f.static_params.is_none());
        let StmtKind::Switch { at: 0, arms, .. } = &f.body.stmts[0].kind else { panic!() };
        assert_eq!(arms.len(), 4);
        assert_eq!(arms[0].labels, vec![CaseLabel::Case(Expr::new(ExprKind::Type(TypeExpr::Prim(Prim::Int))))]);
        assert_eq!(
            arms[0].body[0].kind,
            StmtKind::Return(Some(Expr::new(ExprKind::Type(TypeExpr::Prim(Prim::Float)))))
        );
        assert_eq!(arms[2].labels, vec![CaseLabel::Case(Expr::new(ExprKind::Type(TypeExpr::Prim(Prim::LongInt))))]);
        assert_eq!(arms[3].labels, vec![CaseLabel::Default]);
    }

    #[test]
    fn staged_call_and_multi_declarators() {
        let p = parse("int@ N = 5, Nfact = 1; int@ result2 = pow@(2,3);").unwrap();
        let Decl::Stmt(Stmt { kind: StmtKind::VarDecl { at: 1, decls, .. }, .. }) = &p.decls[0] else { panic!() };
        assert_eq!(decls.len(), 2);
        let Decl::Stmt(Stmt { kind: StmtKind::VarDecl { decls, .. }, .. }) = &p.decls[1] else { panic!() };
        assert!(matches!(&decls[0].init.as_ref().unwrap().kind, ExprKind::Call { at: 1, static_args: None, .. }));
    }

    #[test]
    fn class_with_constructors() {
        let p = parse(
            "class SquareArray(typename@ T_numtype, int@ N_length, int@ N_dim) {
             public:
                SquareArray@() {
                    if@ ((N_dim < 1) || (N_length < 1))
                        Catat_error@(\"N_dim and N_length must be positive.\");
                    else@
                        numElements = pow@(N_length,N_dim);
                }
                SquareArray() {
                    for (int i=0; i < numElements; ++i)
                        data[i] = 0;
                }
             private:
                static int@ numElements;
                T_numtype data[numElements];
            }",
        )
        .unwrap();
        let Decl::Class(c) = &p.decls[0] else { panic!() };
        assert!(c.static_ctor.is_some() && c.ctor.is_some());
        assert_eq!(c.members.len(), 2);
        assert!(c.members[0].is_static && c.members[0].at == 1);
        assert!(matches!(c.members[1].ty, TypeExpr::Array(..)));
        assert_eq!(c.members[1].visibility, Visibility::Private);
    }

    #[test]
    fn class_application_declarations() {
        let p = parse("SquareArray@(int,3,2) x; SquareArray(int,3,2) y;").unwrap();
        let Decl::Stmt(Stmt { kind: StmtKind::VarDecl { ty, at, .. }, .. }) = &p.decls[0] else { panic!() };
        assert_eq!(*at, 1);
        assert!(matches!(ty, TypeExpr::ClassApp { args, .. } if args.len() == 3));
        let Decl::Stmt(Stmt { kind: StmtKind::VarDecl { at, .. }, .. }) = &p.decls[1] else { panic!() };
        assert_eq!(*at, 0);
    }

    #[test]
    fn const_is_one_annotation() {
        assert_eq!(parse("const int x = 1;").unwrap(), parse("int@ x = 1;").unwrap());
    }

    #[test]
    fn typed_function_form() {
        let f = function("float average__int(int* array, int N) { float sum = 0; return sum / N; }");
        assert_eq!(f.ret, Some(TypeExpr::Prim(Prim::Float)));
        assert_eq!(f.params.len(), 2);
        let g = function("float pow(int@ N)(float x) { float result = 1; return result; }");
        assert_eq!(g.static_arity(), 1);
        assert_eq!(g.params[0].name, "x");
    }

    #[test]
    fn duplicate_declarations() {
        assert!(matches!(
            parse("function f(int x) { return x; } function f(int y) { return y; }"),
            Err(SyntaxError::Duplicate { .. })
        ));
        // Different static arity: allowed.
        assert!(parse("function pow(int X, int N) { return 1; } function pow(int@ N)(float x) { return x; }").is_ok());
    }

    #[test]
    fn errors_carry_spans() {
        let err = parse("function f() {\n  return 1 +;\n}").unwrap_err();
        let SyntaxError::Parse { span, message } = err else { panic!() };
        assert_eq!(span.line, 2);
        assert!(message.contains("expected expression"), "{message}");
    }

    #[test]
    fn negative_literals_fold() {
        assert_eq!(parse_expr("-5").unwrap().kind, ExprKind::Int(-5));
        assert_eq!(parse_expr("-9223372036854775808").unwrap().kind, ExprKind::Int(i64::MIN));
        assert!(parse_expr("9223372036854775808").is_err());
        assert!(matches!(parse_expr("-x").unwrap().kind, ExprKind::Unary { op: UnOp::Neg, .. }));
    }

    #[test]
    fn ternary_collatz_step() {
        let e = parse_expr("(X % 2 == 0) ? (X/2) : (3*X+1)").unwrap();
        assert!(matches!(e.kind, ExprKind::Cond { .. }));
    }

    #[test]
    fn arg_lists() {
        assert_eq!(parse_expr_list("").unwrap().len(), 0);
        let args = parse_expr_list("long int, 3, {1, 2}, SquareArray(int, 3, 2)").unwrap();
        assert_eq!(args.len(), 4);
        assert_eq!(args[0].kind, ExprKind::Type(TypeExpr::Prim(Prim::LongInt)));
    }
}
