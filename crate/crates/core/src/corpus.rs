//! The bundled example programs, their expectations, and the encoder for
//! the expression language read by `dsl_interpreter.cat`.

use thiserror::Error;

use crate::staticeval::{TypeValue, Value};

macro_rules! files {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../corpus/", $name)))),*]
    };
}

/// Every corpus file by its path relative to the corpus directory.
pub const FILES: &[(&str, &str)] = files![
    "average.cat",
    "average_traits.cat",
    "congruence.cat",
    "cross_stage.cat",
    "ctime_pow.cat",
    "dot.cat",
    "dsl_interpreter.cat",
    "factorial.cat",
    "foo.cat",
    "grow.cat",
    "meta_dot.cat",
    "pow.cat",
    "pow_poly.cat",
    "squarearray.cat",
    "squarearray_bad.cat",
    "vector_sum.cat",
    "golden/average_int.cat",
    "golden/dot_3_float.cat",
    "golden/dsl_in_in_1.cat",
    "golden/meta_dot.cat",
    "golden/pow_0.cat",
    "golden/pow_3.cat",
    "golden/pow_poly.cat",
    "golden/squarearray.cat",
    "golden/sum_int.cat",
];

pub const MANIFEST: &str = include_str!("../corpus/manifest.txt");

pub fn file(path: &str) -> Option<&'static str> {
    FILES.iter().find(|(p, _)| *p == path).map(|(_, s)| *s)
}

/// Source files only, goldens excluded.
pub fn sources() -> impl Iterator<Item = (&'static str, &'static str)> {
    FILES.iter().copied().filter(|(p, _)| !p.starts_with("golden/"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Check,
    Specialize,
    Run,
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: String,
    pub file: String,
    pub source: &'static str,
    /// Which example the fixture translates.
    pub origin: String,
    pub note: Option<String>,
    pub command: Command,
    pub entry: Option<String>,
    pub static_args: Option<String>,
    pub dyn_args: Option<String>,
    pub max_depth: Option<u64>,
    /// Expected standard output of the command, if pinned.
    pub golden: Option<&'static str>,
    pub stdout: Vec<String>,
    pub exit: u8,
    pub stderr: Option<String>,
}

impl Fixture {
    /// Command-line arguments reproducing this fixture with the `catat`
    /// binary, relative to the corpus directory.
    pub fn cli_args(&self) -> Vec<String> {
        let cmd = match self.command {
            Command::Check => "check",
            Command::Specialize => "specialize",
            Command::Run => "run",
        };
        let mut out = vec![cmd.to_string(), self.file.clone()];
        let mut flag = |name: &str, v: &Option<String>| {
            if let Some(v) = v {
                out.push(format!("--{name}"));
                out.push(v.clone());
            }
        };
        flag("entry", &self.entry);
        flag("static-args", &self.static_args);
        flag("dyn-args", &self.dyn_args);
        flag("max-depth", &self.max_depth.map(|d| d.to_string()));
        out
    }

    /// Expected standard output when the fixture pins it.
    pub fn expected_stdout(&self) -> Option<String> {
        match self.golden {
            Some(g) => Some(g.to_string()),
            None if !self.stdout.is_empty() => Some(self.stdout.iter().map(|l| format!("{l}\n")).collect()),
            None => None,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("manifest line {line}: {message}")]
pub struct ManifestError {
    pub line: usize,
    pub message: String,
}

pub fn parse_manifest(text: &str) -> Result<Vec<Fixture>, ManifestError> {
    let mut out = Vec::new();
    let mut block: Vec<(usize, &str, &str)> = Vec::new();
    let lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).chain([(0, "")]);
    for (n, line) in lines {
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            if !block.is_empty() {
                out.push(fixture(&block)?);
                block.clear();
            }
            continue;
        }
        let (k, v) = line.split_once(':').ok_or_else(|| ManifestError { line: n, message: "expected `key: value`".into() })?;
        block.push((n, k.trim(), v.trim()));
    }
    Ok(out)
}

fn fixture(block: &[(usize, &str, &str)]) -> Result<Fixture, ManifestError> {
    let first = block[0].0;
    let err = |line: usize, message: String| ManifestError { line, message };
    let one = |key: &str| block.iter().find(|(_, k, _)| *k == key).map(|(n, _, v)| (*n, v.to_string()));
    let need = |key: &str| one(key).map(|(_, v)| v).ok_or_else(|| err(first, format!("missing `{key}`")));
    for (n, k, _) in block {
        const KEYS: &[&str] = &[
            "name", "file", "origin", "note", "command", "entry", "static-args", "dyn-args", "max-depth", "golden", "stdout",
            "exit", "stderr",
        ];
        if !KEYS.contains(k) {
            return Err(err(*n, format!("unknown key `{k}`")));
        }
    }
    let file_name = need("file")?;
    let source = file(&file_name).ok_or_else(|| err(first, format!("no corpus file `{file_name}`")))?;
    let command = match need("command")?.as_str() {
        "check" => Command::Check,
        "specialize" => Command::Specialize,
        "run" => Command::Run,
        other => return Err(err(first, format!("unknown command `{other}`"))),
    };
    let golden = match one("golden") {
        Some((n, g)) => Some(file(&g).ok_or_else(|| err(n, format!("no golden file `{g}`")))?),
        None => None,
    };
    let number = |key: &str| -> Result<Option<u64>, ManifestError> {
        one(key).map(|(n, v)| v.parse().map_err(|_| err(n, format!("`{key}` must be a number")))).transpose()
    };
    Ok(Fixture {
        name: need("name")?,
        file: file_name,
        source,
        origin: need("origin")?,
        note: one("note").map(|(_, v)| v),
        command,
        entry: one("entry").map(|(_, v)| v),
        static_args: one("static-args").map(|(_, v)| v),
        dyn_args: one("dyn-args").map(|(_, v)| v),
        max_depth: number("max-depth")?,
        golden,
        stdout: block.iter().filter(|(_, k, _)| *k == "stdout").map(|(_, _, v)| v.to_string()).collect(),
        exit: number("exit")?.unwrap_or(0) as u8,
        stderr: one("stderr").map(|(_, v)| v),
    })
}

/// All fixtures of the bundled manifest.
pub fn provide_corpus() -> Vec<Fixture> {
    parse_manifest(MANIFEST).expect("bundled manifest is well formed")
}

pub fn dsl_interpreter_source() -> &'static str {
    file("dsl_interpreter.cat").expect("bundled")
}

/// Token codes read by the interpreter.
pub mod token {
    pub const IN: i64 = 0;
    pub const PLUS: i64 = 1;
    pub const TIMES: i64 = 2;
    pub const OPEN: i64 = 3;
    pub const CLOSE: i64 = 4;
    /// Literal n is `LITERAL + n`.
    pub const LITERAL: i64 = 10;
}

#[derive(Debug, Error, PartialEq)]
#[error("DSL text at byte {at}: {message}")]
pub struct DslError {
    pub at: usize,
    pub message: String,
}

/// Token codes for DSL text. Only lexing happens here; grammar errors are
/// the interpreter's to find.
pub fn encode_dsl(text: &str) -> Result<Vec<i64>, DslError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' | b'*' | b'(' | b')' => {
                out.push(match c {
                    b'+' => token::PLUS,
                    b'*' => token::TIMES,
                    b'(' => token::OPEN,
                    _ => token::CLOSE,
                });
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let n: i64 = text[start..i]
                    .parse()
                    .ok()
                    .filter(|n| *n <= i64::MAX - token::LITERAL)
                    .ok_or_else(|| DslError { at: start, message: "literal too large".into() })?;
                out.push(token::LITERAL + n);
            }
            _ if text[i..].starts_with("in") && !bytes.get(i + 2).is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_') => {
                out.push(token::IN);
                i += 2;
            }
            _ => return Err(DslError { at: i, message: format!("unexpected `{}`", text[i..].chars().next().unwrap()) }),
        }
    }
    Ok(out)
}

/// Static arguments of `run_dsl` for a token stream.
pub fn dsl_static_args(tokens: &[i64]) -> Vec<Value> {
    let items = tokens.iter().map(|t| Value::Int(*t)).collect();
    vec![Value::Array { elem: TypeValue::INT, items }, Value::Int(tokens.len() as i64)]
}

/// The same arguments as command-line text.
pub fn dsl_static_args_text(tokens: &[i64]) -> String {
    let items: Vec<String> = tokens.iter().map(i64::to_string).collect();
    format!("{{{}}}, {}", items.join(", "), tokens.len())
}
