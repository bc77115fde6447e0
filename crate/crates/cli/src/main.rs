//! `catat`: check, specialize, flatten and run Catat programs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use catat::dyninterp;
use catat::flatten::flatten_function;
use catat::specializer::{specialize_program, Options, ResidualProgram, SpecError};
use catat::staging::{check_stages, StageError, StagedAST};
use catat::staticeval::{eval_literals, EvalError, Limits, Value};
use catat::syntax::{emit_function, parse, parse_expr_list, Decl, Program, Span, SyntaxError};

#[derive(Parser)]
#[command(name = "catat", version, about = "Two-level Catat toolchain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check stages.
    Check(Common),
    /// Specialize and emit the residual program.
    Specialize(Common),
    /// Run a single-level program, or specialize a two-level one and run
    /// the residual.
    Run(Common),
    /// Print the generator of a two-level function.
    Flatten(Common),
}

#[derive(Args)]
struct Common {
    file: PathBuf,
    /// Number of binding levels.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    levels: u32,
    /// Longest chain of nested specializations or static calls.
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(1..))]
    max_depth: u64,
    /// Iterations allowed per loop.
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    loop_cap: u64,
    /// Evaluation steps allowed per run.
    #[arg(long, default_value_t = 10_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    step_limit: u64,
    #[arg(long)]
    entry: Option<String>,
    /// Comma-separated literals; types are bare type names.
    #[arg(long, allow_hyphen_values = true)]
    static_args: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    dyn_args: Option<String>,
    /// Write the residual here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Specialize by running the flattened generator.
    #[arg(long)]
    via_flatten: bool,
    #[arg(long)]
    dump_generator: bool,
    #[arg(long)]
    dump_residual: bool,
}

impl Common {
    fn limits(&self) -> Limits {
        Limits { max_depth: self.max_depth as usize, loop_cap: self.loop_cap, step_limit: self.step_limit }
    }

    fn options(&self) -> Options {
        Options { limits: self.limits(), via_flatten: self.via_flatten }
    }
}

/// A reported failure: exit code, category and location.
struct Failure {
    code: u8,
    category: &'static str,
    span: Span,
    message: String,
}

impl Failure {
    fn io(message: String) -> Self {
        Failure { code: 1, category: "error", span: Span::default(), message }
    }

    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 1, category: "usage error", span: Span::default(), message: message.into() }
    }

    fn runtime(e: EvalError) -> Self {
        Failure { code: 5, category: "runtime error", span: e.span(), message: e.to_string() }
    }

    fn args(e: EvalError) -> Self {
        Failure { code: 1, category: "argument error", span: Span::default(), message: e.to_string() }
    }
}

impl From<SyntaxError> for Failure {
    fn from(e: SyntaxError) -> Self {
        Failure { code: 1, category: "parse error", span: e.span(), message: e.to_string() }
    }
}

impl From<StageError> for Failure {
    fn from(e: StageError) -> Self {
        Failure { code: 2, category: "stage error", span: e.span, message: e.to_string() }
    }
}

impl From<SpecError> for Failure {
    fn from(e: SpecError) -> Self {
        let (code, category) = if e.is_resource() { (4, "resource error") } else { (3, "compile-time error") };
        Failure { code, category, span: e.span(), message: e.to_string() }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, common): (fn(&Common, &str) -> Outcome, &Common) = match &cli.command {
        Command::Check(c) => (check, c),
        Command::Specialize(c) => (specialize, c),
        Command::Run(c) => (run, c),
        Command::Flatten(c) => (flatten, c),
    };
    let source = match std::fs::read_to_string(&common.file) {
        Ok(s) => s,
        Err(e) => return report(&common.file, Failure::io(format!("cannot read: {e}"))),
    };
    match cmd(common, &source) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(&common.file, f),
    }
}

fn report(file: &Path, f: Failure) -> ExitCode {
    eprintln!("{}:{}:{}: {}: {}", file.display(), f.span.line.max(1), f.span.col.max(1), f.category, f.message);
    ExitCode::from(f.code)
}

fn staged(c: &Common, source: &str) -> Result<StagedAST, Failure> {
    let program = parse(source)?;
    Ok(check_stages(&program, c.levels)?)
}

fn values(program: &Program, text: Option<&str>, limits: Limits) -> Result<Vec<Value>, Failure> {
    let exprs = parse_expr_list(text.unwrap_or(""))?;
    eval_literals(program, &exprs, limits).map_err(Failure::args)
}

fn check(c: &Common, source: &str) -> Outcome {
    let s = staged(c, source)?;
    println!("ok: {} declarations", s.program.decls.len());
    Ok(())
}

fn residual(c: &Common, s: &StagedAST) -> Result<ResidualProgram, Failure> {
    let args = values(&s.program, c.static_args.as_deref(), c.limits())?;
    if c.entry.is_none() && !args.is_empty() {
        return Err(Failure::usage("--static-args needs --entry"));
    }
    Ok(specialize_program(s, c.entry.as_deref(), args, c.options())?)
}

fn print_statics(r: &ResidualProgram) {
    for (name, v) in &r.statics {
        println!("{name} = {v}");
    }
}

fn dump_generator(c: &Common, s: &StagedAST) -> Outcome {
    let Some(name) = c.entry.as_deref() else {
        return Err(Failure::usage("--entry is required to flatten"));
    };
    let def = s
        .program
        .decls
        .iter()
        .find_map(|d| match d {
            Decl::Function(f) if f.name == name && f.is_two_level() => Some(f),
            _ => None,
        })
        .ok_or_else(|| Failure::usage(format!("no two-level function `{name}`")))?;
    let generator = flatten_function(s, def)?;
    print!("{}", emit_function(&generator));
    Ok(())
}

fn specialize(c: &Common, source: &str) -> Outcome {
    let s = staged(c, source)?;
    if c.dump_generator {
        dump_generator(c, &s)?;
    }
    let r = residual(c, &s)?;
    if r.is_empty() {
        print_statics(&r);
        return Ok(());
    }
    let text = r.emit();
    match &c.out {
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))?;
            if c.dump_residual {
                print!("{text}");
            }
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn flatten(c: &Common, source: &str) -> Outcome {
    let s = staged(c, source)?;
    dump_generator(c, &s)?;
    if c.static_args.is_some() && c.dump_residual {
        let opts = Options { via_flatten: true, ..c.options() };
        let args = values(&s.program, c.static_args.as_deref(), c.limits())?;
        let r = specialize_program(&s, c.entry.as_deref(), args, opts)?;
        print!("{}", r.emit());
    }
    Ok(())
}

fn run(c: &Common, source: &str) -> Outcome {
    let program = parse(source)?;
    let limits = c.limits();
    if program.is_single_level() && c.static_args.is_none() {
        check_stages(&program, 1)?;
        let Some(entry) = c.entry.as_deref() else {
            let globals = dyninterp::run_script(&program, limits).map_err(Failure::runtime)?;
            for (name, v) in globals {
                println!("{name} = {v}");
            }
            return Ok(());
        };
        let args = values(&program, c.dyn_args.as_deref(), limits)?;
        let r = dyninterp::run(&program, entry, args, limits).map_err(Failure::runtime)?;
        println!("{}", r.value.typed_display());
        return Ok(());
    }
    let s = check_stages(&program, c.levels)?;
    let r = residual(c, &s)?;
    if c.dump_residual {
        eprint!("{}", r.emit());
    }
    if r.is_empty() {
        print_statics(&r);
        return Ok(());
    }
    let Some(entry) = r.entry.as_deref() else {
        print_statics(&r);
        return Ok(());
    };
    let residual = r.to_program();
    let args = values(&residual, c.dyn_args.as_deref(), limits)?;
    let out = dyninterp::run(&residual, entry, args, limits).map_err(Failure::runtime)?;
    println!("{}", out.value.typed_display());
    Ok(())
}
