use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use catat::corpus::{provide_corpus, sources};
use catat::specializer::alpha_equivalent;
use catat::syntax::{parse, Decl, FunctionDef};

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus")
}

fn catat<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_catat")).args(args).current_dir(corpus_dir()).output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn functions(src: &str) -> Vec<FunctionDef> {
    parse(src)
        .unwrap()
        .decls
        .into_iter()
        .filter_map(|d| match d {
            Decl::Function(f) => Some(f),
            _ => None,
        })
        .collect()
}

#[test]
fn manifest_fixtures() {
    for f in provide_corpus() {
        let out = catat(&f.cli_args());
        let (stdout, stderr) = (text(&out.stdout), text(&out.stderr));
        assert_eq!(out.status.code(), Some(f.exit as i32), "{}: {stderr}", f.name);
        if let Some(want) = f.expected_stdout() {
            assert_eq!(stdout, want, "{}", f.name);
        }
        if let Some(want) = &f.stderr {
            assert!(stderr.contains(want.as_str()), "{}: {stderr}", f.name);
        }
        if f.exit == 0 {
            assert!(stderr.is_empty(), "{}: {stderr}", f.name);
        }
    }
}

#[test]
fn out_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let dest = dir.path().join("pow3.cat");
    let args = ["specialize", "pow.cat", "--entry", "pow", "--static-args", "3"];
    let plain = catat(&args);
    let mut with_out: Vec<&str> = args.to_vec();
    with_out.extend(["--out", dest.to_str().unwrap()]);
    let written = catat(&with_out);
    assert!(written.status.success());
    assert!(written.stdout.is_empty());
    assert_eq!(std::fs::read(&dest).unwrap(), plain.stdout);
    assert_eq!(catat(&args).stdout, plain.stdout);
}

#[test]
fn dump_residual_with_out() {
    let dir = tempfile::tempdir().unwrap();
    let dest = dir.path().join("r.cat");
    let out = catat(&["specialize", "pow.cat", "--entry", "pow", "--static-args", "2", "--out", dest.to_str().unwrap(), "--dump-residual"]);
    assert_eq!(std::fs::read(&dest).unwrap(), out.stdout);
}

#[test]
fn parse_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cat");
    std::fs::write(&bad, "int f( {").unwrap();
    let out = catat(&["check", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = text(&out.stderr);
    assert!(err.contains("bad.cat:1:") && err.contains("parse error"), "{err}");
    let out = catat(&["check", "no_such_file.cat"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_five() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("oob.cat");
    std::fs::write(&src, "int get(int* a, int i) { return a[i]; }").unwrap();
    let out = catat(&["run", src.to_str().unwrap(), "--entry", "get", "--dyn-args", "{1, 2}, 5"]);
    assert_eq!(out.status.code(), Some(5));
    assert!(text(&out.stderr).contains("runtime error"));
}

#[test]
fn static_args_need_entry() {
    let out = catat(&["specialize", "pow.cat", "--static-args", "3"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn check_reports_declarations() {
    let out = catat(&["check", "pow.cat"]);
    assert!(out.status.success());
    assert_eq!(text(&out.stdout), "ok: 1 declarations\n");
}

#[test]
fn run_residual_file() {
    let out = catat(&["run", "golden/pow_3.cat", "--entry", "pow__3", "--dyn-args", "2.0", "--levels", "1"]);
    assert_eq!(text(&out.stdout), "float 8.0\n", "{}", text(&out.stderr));
}

#[test]
fn via_flatten_matches_direct() {
    for f in provide_corpus() {
        if f.golden.is_none() {
            continue;
        }
        let args = f.cli_args();
        let mut flat = args.clone();
        flat.push("--via-flatten".into());
        let (a, b) = (catat(&args), catat(&flat));
        assert!(b.status.success(), "{}: {}", f.name, text(&b.stderr));
        let (a, b) = (functions(&text(&a.stdout)), functions(&text(&b.stdout)));
        assert_eq!(a.len(), b.len(), "{}", f.name);
        for (x, y) in a.iter().zip(&b) {
            assert!(alpha_equivalent(x, y), "{}: {}", f.name, x.name);
        }
    }
}

#[test]
fn generator_dump() {
    let out = catat(&["specialize", "pow.cat", "--entry", "pow", "--static-args", "3", "--dump-generator"]);
    let s = text(&out.stdout);
    assert!(s.contains("for (") && s.contains("make_op(\"*=\""), "{s}");
    let out = catat(&["flatten", "pow.cat", "--entry", "pow"]);
    assert!(out.status.success());
}

#[test]
fn every_source_checks_or_fails_cleanly() {
    for (path, _) in sources() {
        let out = catat(&["check", path]);
        assert!(matches!(out.status.code(), Some(0) | Some(2)), "{path}: {}", text(&out.stderr));
    }
}
