use super::ast::Span;
use super::SyntaxError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Int,
    Float,
    Str,
    Keyword,
    Punct,
    /// A run of consecutive `@` characters; the count is in [`Token::at_count`].
    AtRun,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    /// Source text, except for string literals where it is the unescaped contents.
    pub text: String,
    pub span: Span,
}

impl Token {
    pub fn at_count(&self) -> u8 {
        if self.kind == TokenKind::AtRun {
            self.text.len().min(u8::MAX as usize) as u8
        } else {
            0
        }
    }

    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }
}

pub const KEYWORDS: &[&str] = &[
    "function", "class", "typename", "int", "float", "double", "char", "long", "bool", "void",
    "ASTree", "const", "static", "public", "private", "for", "if", "else", "switch", "case",
    "default", "return", "true", "false",
];

const PUNCT2: &[&str] = &["==", "!=", "<=", ">=", "&&", "||", "+=", "-=", "*=", "/=", "%=", "++", "--"];
const PUNCT1: &str = "(){}[];,:?.+-*/%=<>!";

pub fn tokenize(source: &str) -> Result<Vec<Token>, SyntaxError> {
    Lexer { src: source, bytes: source.as_bytes(), pos: 0, line: 1, col: 1 }.run()
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn run(mut self) -> Result<Vec<Token>, SyntaxError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia();
            let Some(c) = self.peek_char() else { break };
            let (start, line, col) = (self.pos, self.line, self.col);
            let kind = if c.is_ascii_alphabetic() || c == '_' {
                while self.peek_char().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                    self.bump();
                }
                if KEYWORDS.contains(&&self.src[start..self.pos]) {
                    TokenKind::Keyword
                } else {
                    TokenKind::Ident
                }
            } else if c.is_ascii_digit() {
                self.number(start, line, col)?
            } else if c == '@' {
                while self.peek_char() == Some('@') {
                    self.bump();
                }
                TokenKind::AtRun
            } else if c == '"' {
                let text = self.string(line, col)?;
                out.push(Token {
                    kind: TokenKind::Str,
                    text,
                    span: Span::new(line, col, start as u32, self.pos as u32),
                });
                continue;
            } else {
                let rest = &self.src[self.pos..];
                let len = PUNCT2
                    .iter()
                    .find(|p| rest.starts_with(*p))
                    .map(|p| p.len())
                    .or_else(|| PUNCT1.contains(c).then_some(1))
                    .ok_or_else(|| SyntaxError::Lex {
                        span: Span::new(line, col, start as u32, (start + c.len_utf8()) as u32),
                        message: format!("illegal character {c:?}"),
                    })?;
                for _ in 0..len {
                    self.bump();
                }
                TokenKind::Punct
            };
            out.push(Token {
                kind,
                text: self.src[start..self.pos].to_string(),
                span: Span::new(line, col, start as u32, self.pos as u32),
            });
        }
        Ok(out)
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, offset: usize) -> Option<u8> {
        self.bytes.get(self.pos + offset).copied()
    }

    fn bump(&mut self) {
        if let Some(c) = self.peek_char() {
            self.pos += c.len_utf8();
            if c == '\n' {
                self.line += 1;
                self.col = 1;
            } else {
                self.col += 1;
            }
        }
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek_char() {
                Some(c) if c.is_whitespace() => self.bump(),
                Some('/') if self.peek_at(1) == Some(b'/') => {
                    while self.peek_char().is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn number(&mut self, start: usize, line: u32, col: u32) -> Result<TokenKind, SyntaxError> {
        let mut kind = TokenKind::Int;
        self.digits();
        if self.peek_char() == Some('.') {
            self.bump();
            if !self.peek_char().is_some_and(|c| c.is_ascii_digit()) {
                return Err(self.malformed(start, line, col));
            }
            self.digits();
            kind = TokenKind::Float;
        }
        if matches!(self.peek_char(), Some('e' | 'E')) {
            self.bump();
            if matches!(self.peek_char(), Some('+' | '-')) {
                self.bump();
            }
            if !self.peek_char().is_some_and(|c| c.is_ascii_digit()) {
                return Err(self.malformed(start, line, col));
            }
            self.digits();
            kind = TokenKind::Float;
        }
        if self.peek_char().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
            while self.peek_char().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
                self.bump();
            }
            return Err(self.malformed(start, line, col));
        }
        let text = &self.src[start..self.pos];
        let ok = match kind {
            TokenKind::Int => text.parse::<u64>().is_ok_and(|v| v <= i64::MAX as u64 + 1),
            _ => text.parse::<f64>().is_ok_and(f64::is_finite),
        };
        if ok {
            Ok(kind)
        } else {
            Err(self.malformed(start, line, col))
        }
    }

    fn digits(&mut self) {
        while self.peek_char().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
    }

    fn malformed(&self, start: usize, line: u32, col: u32) -> SyntaxError {
        SyntaxError::Lex {
            span: Span::new(line, col, start as u32, self.pos as u32),
            message: format!("malformed numeric literal `{}`", &self.src[start..self.pos]),
        }
    }

    fn string(&mut self, line: u32, col: u32) -> Result<String, SyntaxError> {
        let start = self.pos;
        self.bump();
        let mut text = String::new();
        loop {
            match self.peek_char() {
                None | Some('\n') => {
                    return Err(SyntaxError::Lex {
                        span: Span::new(line, col, start as u32, self.pos as u32),
                        message: "unterminated string literal".into(),
                    })
                }
                Some('"') => {
                    self.bump();
                    return Ok(text);
                }
                Some('\\') => {
                    self.bump();
                    let esc = match self.peek_char() {
                        Some('n') => '\n',
                        Some('t') => '\t',
                        Some('"') => '"',
                        Some('\\') => '\\',
                        _ => {
                            return Err(SyntaxError::Lex {
                                span: Span::new(line, col, start as u32, self.pos as u32),
                                message: "unknown escape in string literal".into(),
                            })
                        }
                    };
                    text.push(esc);
                    self.bump();
                }
                Some(c) => {
                    text.push(c);
                    self.bump();
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src).unwrap().into_iter().map(|t| (t.kind, t.text)).collect()
    }

    #[test]
    fn static_declaration() {
        use TokenKind::*;
        assert_eq!(
            kinds("int@ j = 0;"),
            vec![
                (Keyword, "int".into()),
                (AtRun, "@".into()),
                (Ident, "j".into()),
                (Punct, "=".into()),
                (Int, "0".into()),
                (Punct, ";".into()),
            ]
        );
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").unwrap().is_empty());
        assert!(tokenize("  // only a comment\n").unwrap().is_empty());
    }

    #[test]
    fn static_loop_header() {
        let toks = tokenize("for@ (int@ i=1; i < N; ++i)").unwrap();
        assert!(toks[0].is(TokenKind::Keyword, "for"));
        assert_eq!(toks[1].at_count(), 1);
        assert!(toks[3].is(TokenKind::Keyword, "int"));
        assert_eq!(toks[4].at_count(), 1);
        assert!(toks.iter().any(|t| t.is(TokenKind::Punct, "++")));
    }

    #[test]
    fn at_runs_count() {
        let toks = tokenize("int@@@ x").unwrap();
        assert_eq!(toks[1].at_count(), 3);
    }

    #[test]
    fn spans_do_not_overlap() {
        let toks = tokenize("function dot(int@ N, typename@ T)(T* a, T* b) { return a[0]*b[0]; }").unwrap();
        for w in toks.windows(2) {
            assert!(w[0].span.end <= w[1].span.start);
            assert!(w[0].span.start < w[0].span.end);
        }
    }

    #[test]
    fn numbers() {
        assert_eq!(kinds("1.5e3")[0].0, TokenKind::Float);
        assert_eq!(kinds("42")[0].0, TokenKind::Int);
        assert!(tokenize("1.2.3").is_err());
        assert!(tokenize("12abc").is_err());
        assert!(tokenize("1.").is_err());
        assert!(tokenize("99999999999999999999").is_err());
    }

    #[test]
    fn illegal_character_has_span() {
        let err = tokenize("int x;\n  $").unwrap_err();
        match err {
            SyntaxError::Lex { span, .. } => assert_eq!((span.line, span.col), (2, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn strings() {
        let toks = tokenize(r#"Catat_error@("a \"b\"")"#).unwrap();
        assert_eq!(toks[3].kind, TokenKind::Str);
        assert_eq!(toks[3].text, "a \"b\"");
    }
}
