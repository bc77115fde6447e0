use std::collections::HashMap;

use proptest::prelude::*;

use catat::corpus::{self, dsl_interpreter_source};
use catat::dyninterp::{run, run_unstaged};
use catat::flatten::flatten_function;
use catat::specializer::{alpha_equivalent, specialize_program, Options, ResidualProgram, SpecError};
use catat::staging::{check_stages, stage_of, StagedAST};
use catat::staticeval::{call_static, Limits, TypeValue, Value};
use catat::syntax::*;

fn staged(src: &str) -> StagedAST {
    check_stages(&parse(src).unwrap(), 2).unwrap()
}

fn spec(s: &StagedAST, entry: &str, args: Vec<Value>) -> ResidualProgram {
    specialize_program(s, Some(entry), args, Options::default()).unwrap()
}

fn floats(v: &[f64]) -> Value {
    Value::Array { elem: TypeValue::FLOAT, items: v.iter().map(|x| Value::Float(*x)).collect() }
}

fn ints(v: &[i64]) -> Value {
    Value::Array { elem: TypeValue::INT, items: v.iter().map(|x| Value::Int(*x)).collect() }
}

fn function<'a>(p: &'a Program, name: &str) -> &'a FunctionDef {
    p.decls
        .iter()
        .find_map(|d| match d {
            Decl::Function(f) if f.name == name => Some(f),
            _ => None,
        })
        .unwrap()
}

// Source text for expressions over a, b, c with literals, operators,
// calls and subscripts; parentheses are sprinkled at random.
fn expr_text() -> impl Strategy<Value = String> {
    expr_with(true)
}

fn expr_with(calls: bool) -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        prop::sample::select(vec!["a", "b", "c"]).prop_map(str::to_string),
        (0i64..1000).prop_map(|v| v.to_string()),
        (0u32..40).prop_map(|q| format!("{:?}", q as f64 / 4.0)),
        Just("true".to_string()),
    ];
    leaf.prop_recursive(4, 32, 3, move |inner| {
        let ops = prop::sample::select(vec!["+", "-", "*", "/", "%", "<", "<=", "==", "!=", "&&", "||", ">", ">="]);
        prop_oneof![
            (inner.clone(), ops, inner.clone(), any::<bool>())
                .prop_map(|(l, op, r, par)| if par { format!("({l} {op} {r})") } else { format!("{l} {op} {r}") }),
            inner.clone().prop_map(|e| format!("-({e})")),
            inner.clone().prop_map(|e| format!("!{e}")),
            (inner.clone(), inner.clone(), inner.clone()).prop_map(|(c, t, e)| format!("({c} ? {t} : {e})")),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| if calls { format!("f({x}, {y})") } else { format!("{x} + {y}") }),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| if calls { format!("g(int, {x})({y})") } else { format!("{x} * {y}") }),
            inner.clone().prop_map(|i| format!("a[{i}]")),
        ]
    })
}

fn stmt_text() -> impl Strategy<Value = String> {
    let simple = prop_oneof![
        (expr_text(), 0u8..3).prop_map(|(e, k)| format!("int{} v = {e};", "@".repeat(k as usize))),
        expr_text().prop_map(|e| format!("a = {e};")),
        expr_text().prop_map(|e| format!("b *= {e};")),
        expr_text().prop_map(|e| format!("return {e};")),
    ];
    simple.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            (expr_text(), inner.clone(), prop::option::of(inner.clone()), 0u8..2)
                .prop_map(|(c, t, e, k)| {
                    let at = "@".repeat(k as usize);
                    match e {
                        Some(e) => format!("if{at} ({c}) {{ {t} }} else{at} {{ {e} }}"),
                        None => format!("if{at} ({c}) {t}"),
                    }
                }),
            (expr_text(), inner.clone()).prop_map(|(c, b)| format!("for@ (int@ i = 0; {c}; ++i) {{ {b} }}")),
            prop::collection::vec(inner.clone(), 0..3).prop_map(|v| format!("{{ {} }}", v.join(" "))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn emit_round_trip(body in prop::collection::vec(stmt_text(), 0..4)) {
        let src = format!("function h(int@ n)(int a, int b) {{ {} }}", body.join("\n"));
        let p = parse(&src).unwrap();
        let text = emit_program(&p);
        let q = parse(&text).unwrap();
        prop_assert_eq!(&p, &q, "{}", text);
        prop_assert_eq!(emit_program(&q), text);
    }

    #[test]
    fn expression_round_trip(e in expr_text()) {
        let src = format!("int x = {e};");
        let p = parse(&src).unwrap();
        prop_assert_eq!(parse(&emit_program(&p)).unwrap(), p);
    }

    // stage_of of a compound expression is the largest stage among its
    // variables, literals counting as stage 0.
    #[test]
    fn stage_monotonicity(e in expr_with(false), sa in 0u32..2, sb in 0u32..2, sc in 0u32..2) {
        let expr = parse_expr(&e).unwrap();
        let env: HashMap<String, u32> = [("a", sa), ("b", sb), ("c", sc)].into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        let mut expect = 0;
        expr.walk(&mut |x| if let ExprKind::Var(n) = &x.kind { expect = expect.max(env[n]) });
        prop_assert_eq!(stage_of(&expr, &env).unwrap(), expect);
    }
}

#[test]
fn corpus_round_trip() {
    for (path, src) in corpus::FILES {
        let p = parse(src).unwrap_or_else(|e| panic!("{path}: {e}"));
        let text = emit_program(&p);
        assert_eq!(parse(&text).unwrap(), p, "{path}");
        assert_eq!(emit_program(&parse(&text).unwrap()), text, "{path}: emission is deterministic");
    }
}

const RECURSIVE_POW: &str = "function rpow(int X, int N) { if (N == 1) return X; return X * rpow(X, N - 1); }";

fn program_with_pows() -> Program {
    let src = format!("{}\n{}", corpus::file("pow_poly.cat").unwrap(), RECURSIVE_POW);
    parse(&src).unwrap()
}

#[test]
fn loop_and_recursion_agree() {
    let p = program_with_pows();
    let iter = function(&p, "pow");
    let rec = function(&p, "rpow");
    for x in -8..=8 {
        for n in 1..=10 {
            let a = call_static(&p, iter, vec![Value::Int(x), Value::Int(n)], Limits::default()).unwrap();
            let b = call_static(&p, rec, vec![Value::Int(x), Value::Int(n)], Limits::default()).unwrap();
            assert_eq!(a, b, "pow({x}, {n})");
        }
    }
}

#[test]
fn type_switch_defaults_to_argument() {
    let p = parse(corpus::file("average_traits.cat").unwrap()).unwrap();
    let f = function(&p, "average_type");
    let cases = [
        (TypeValue::INT, TypeValue::FLOAT),
        (TypeValue::Prim(Prim::Char), TypeValue::FLOAT),
        (TypeValue::Prim(Prim::LongInt), TypeValue::Prim(Prim::Double)),
        (TypeValue::BOOL, TypeValue::BOOL),
        (TypeValue::FLOAT, TypeValue::FLOAT),
        (TypeValue::Prim(Prim::Double), TypeValue::Prim(Prim::Double)),
        (TypeValue::Pointer(Box::new(TypeValue::INT)), TypeValue::Pointer(Box::new(TypeValue::INT))),
    ];
    for (arg, want) in cases {
        let got = call_static(&p, f, vec![Value::Type(arg.clone())], Limits::default()).unwrap();
        assert_eq!(got, Value::Type(want), "average_type({arg})");
    }
}

#[test]
fn static_evaluation_is_deterministic() {
    let p = program_with_pows();
    let f = function(&p, "rpow");
    let first = call_static(&p, f, vec![Value::Int(3), Value::Int(7)], Limits::default()).unwrap();
    for _ in 0..5 {
        assert_eq!(call_static(&p, f, vec![Value::Int(3), Value::Int(7)], Limits::default()).unwrap(), first);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mix_equation_pow(n in 0i64..=8, x in -5i64..=5) {
        let s = staged(corpus::file("pow.cat").unwrap());
        let r = spec(&s, "pow", vec![Value::Int(n)]);
        let res = run(&r.to_program(), r.entry.as_deref().unwrap(), vec![Value::Float(x as f64)], Limits::default()).unwrap();
        let uns = run_unstaged(&s.program, "pow", vec![Value::Int(n), Value::Float(x as f64)], Limits::default()).unwrap();
        prop_assert_eq!(res.value, uns.value);
    }

    #[test]
    fn mix_equation_dot(v in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..=6)) {
        let s = staged(corpus::file("dot.cat").unwrap());
        let n = v.len() as i64;
        let (a, b): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
        let r = spec(&s, "dot", vec![Value::Int(n), Value::Type(TypeValue::FLOAT)]);
        let d = vec![floats(&a), floats(&b)];
        let res = run(&r.to_program(), r.entry.as_deref().unwrap(), d.clone(), Limits::default()).unwrap();
        let mut all = vec![Value::Int(n), Value::Type(TypeValue::FLOAT)];
        all.extend(d);
        let uns = run_unstaged(&s.program, "dot", all, Limits::default()).unwrap();
        prop_assert_eq!(res.value, uns.value);
    }

    #[test]
    fn mix_equation_average(v in prop::collection::vec(-1000i64..1000, 1..=16), float in any::<bool>()) {
        let s = staged(corpus::file("average.cat").unwrap());
        let (t, arr) = if float {
            (TypeValue::FLOAT, floats(&v.iter().map(|x| *x as f64 / 8.0).collect::<Vec<_>>()))
        } else {
            (TypeValue::INT, ints(&v))
        };
        let n = Value::Int(v.len() as i64);
        let r = spec(&s, "average", vec![Value::Type(t.clone())]);
        let res = run(&r.to_program(), r.entry.as_deref().unwrap(), vec![arr.clone(), n.clone()], Limits::default()).unwrap();
        let uns = run_unstaged(&s.program, "average", vec![Value::Type(t), arr, n], Limits::default()).unwrap();
        prop_assert_eq!(res.value, uns.value);
    }

    // Residual bodies are single-level and never mention static parameters.
    #[test]
    fn residual_purity(n in 0i64..12) {
        for (src, entry, args, statics) in [
            (corpus::file("pow.cat").unwrap(), "pow", vec![Value::Int(n)], vec!["N"]),
            (corpus::file("dot.cat").unwrap(), "dot", vec![Value::Int(n), Value::Type(TypeValue::INT)], vec!["N", "T"]),
        ] {
            let r = spec(&staged(src), entry, args);
            let program = r.to_program();
            check_stages(&program, 1).unwrap();
            let text = r.emit();
            prop_assert!(!text.contains('@'));
            for f in r.functions() {
                let mut names = Vec::new();
                for s in &f.def.body.stmts {
                    collect_vars(s, &mut names);
                }
                for p in &statics {
                    prop_assert!(!names.iter().any(|v| v == p), "{} mentions {}", f.name, p);
                }
            }
        }
    }

    #[test]
    fn unroll_count(n in 0i64..=16) {
        let r = spec(&staged(corpus::file("pow.cat").unwrap()), "pow", vec![Value::Int(n)]);
        let f = r.function(r.entry.as_deref().unwrap()).unwrap();
        let muls = f.def.body.stmts.iter().filter(|s| matches!(&s.kind,
            StmtKind::Expr(Expr { kind: ExprKind::Assign { op: AssignOp(Some(BinOp::Mul)), .. }, .. }))).count();
        prop_assert_eq!(muls as i64, n);
        prop_assert_eq!(f.def.body.stmts.len() as i64, n + 2);
    }

    #[test]
    fn branch_pruning(c in -3i64..3) {
        let s = staged("function f(int@ c)(int x) { if@ (c > 0) x = x + 100; else@ x = x * 200; return x; }");
        let text = spec(&s, "f", vec![Value::Int(c)]).emit();
        prop_assert_eq!(text.contains("100"), c > 0);
        prop_assert_eq!(text.contains("200"), c <= 0);
        prop_assert!(!text.contains("if"));
    }

    #[test]
    fn flatten_coherence(n in 0i64..=8, m in 1i64..=6) {
        for (src, entry, args) in [
            (corpus::file("pow.cat").unwrap(), "pow", vec![Value::Int(n)]),
            (corpus::file("dot.cat").unwrap(), "dot", vec![Value::Int(m), Value::Type(TypeValue::FLOAT)]),
        ] {
            let s = staged(src);
            let direct = spec(&s, entry, args.clone());
            let flat = specialize_program(&s, Some(entry), args, Options { via_flatten: true, ..Options::default() }).unwrap();
            let (a, b) = (direct.functions().next().unwrap(), flat.functions().next().unwrap());
            prop_assert!(alpha_equivalent(&a.def, &b.def), "{}\n{}", direct.emit(), flat.emit());
            prop_assert_eq!(&a.ret, &b.ret);
        }
    }
}

fn collect_vars(s: &Stmt, out: &mut Vec<String>) {
    let mut push = |e: &Expr| {
        e.walk(&mut |x| {
            if let ExprKind::Var(n) = &x.kind {
                out.push(n.clone());
            }
        })
    };
    match &s.kind {
        StmtKind::VarDecl { decls, .. } => decls.iter().flat_map(|d| d.dim.iter().chain(&d.init)).for_each(&mut push),
        StmtKind::Expr(e) | StmtKind::Return(Some(e)) => push(e),
        StmtKind::Return(None) => {}
        StmtKind::Block(b) => b.stmts.iter().for_each(|s| collect_vars(s, out)),
        StmtKind::If { cond, then, els, .. } => {
            push(cond);
            collect_vars(then, out);
            if let Some(e) = els {
                collect_vars(e, out);
            }
        }
        StmtKind::For { init, cond, step, body, .. } => {
            cond.iter().chain(step).for_each(&mut push);
            if let Some(i) = init {
                collect_vars(i, out);
            }
            collect_vars(body, out);
        }
        StmtKind::Switch { scrutinee, arms, .. } => {
            push(scrutinee);
            arms.iter().flat_map(|a| &a.body).for_each(|s| collect_vars(s, out));
        }
    }
}

#[test]
fn memoization() {
    let s = staged(corpus::file("average.cat").unwrap());
    let src = format!(
        "{}\nint other[3];\nfloat again = average(int)(other, 3);\nfloat third = average(int)(other, 2);",
        corpus::file("average.cat").unwrap()
    );
    let twice = specialize_program(&staged(&src), None, vec![], Options::default()).unwrap();
    let names: Vec<&str> = twice.items.iter().map(|i| i.name()).collect();
    assert_eq!(names, vec!["average__int"]);
    let once = spec(&s, "average", vec![Value::Type(TypeValue::INT)]);
    assert_eq!(once.function("average__int").unwrap().def, twice.function("average__int").unwrap().def);
    let again = spec(&s, "average", vec![Value::Type(TypeValue::INT)]);
    assert_eq!(once.emit(), again.emit());
}

#[test]
fn residual_names_are_unique() {
    let src = format!(
        "{}\nfunction pow__3(float x) {{ return x; }}\nfloat a = pow__3(2.0);\nfloat b = pow(3)(2.0);",
        corpus::file("pow.cat").unwrap()
    );
    let r = specialize_program(&staged(&src), None, vec![], Options::default()).unwrap();
    let names: Vec<&str> = r.items.iter().map(|i| i.name()).collect();
    assert_eq!(names.len(), 2);
    assert_ne!(names[0], names[1], "{}", r.emit());
    let out = catat::dyninterp::run_script(&r.to_program(), Limits::default()).unwrap();
    assert_eq!(out, vec![("a".to_string(), Value::Float(2.0)), ("b".to_string(), Value::Float(8.0))]);
}

#[test]
fn callees_come_first() {
    let r = spec(&staged(corpus::file("meta_dot.cat").unwrap()), "dot3", vec![]);
    let order: Vec<&str> = r.items.iter().map(|i| i.name()).collect();
    assert_eq!(order, ["meta_dot__float_0_3", "meta_dot__float_1_3", "meta_dot__float_2_3", "dot3"]);
}

const COUNTDOWN: &str = "function down(int@ N)(int x) { if@ (N == 0) return x; else@ return down(N - 1)(x); }";

// A chain of n + 1 specializations fits under limit k exactly when n + 1 <= k.
#[test]
fn depth_guard_boundary() {
    let s = staged(COUNTDOWN);
    for k in 1..=12usize {
        for n in 0..=14i64 {
            let opts = Options { limits: Limits { max_depth: k, ..Limits::default() }, ..Options::default() };
            let r = specialize_program(&s, Some("down"), vec![Value::Int(n)], opts);
            if (n + 1) as usize <= k {
                let r = r.unwrap_or_else(|e| panic!("n={n} k={k}: {e}"));
                assert_eq!(r.items.len() as i64, n + 1);
            } else {
                assert!(matches!(r, Err(SpecError::DepthExceeded { limit, .. }) if limit == k), "n={n} k={k}");
            }
        }
    }
}

#[test]
fn generators_are_single_level() {
    for (path, src) in corpus::sources() {
        let Ok(s) = check_stages(&parse(src).unwrap(), 2) else { continue };
        for d in &s.program.decls {
            let Decl::Function(f) = d else { continue };
            if !f.is_two_level() {
                continue;
            }
            let g = flatten_function(&s, f).unwrap_or_else(|e| panic!("{path}: {}: {e}", f.name));
            let text = emit_function(&g);
            // The generator calls the program's other functions.
            let mut reparsed = erase(&s.program);
            reparsed.decls.extend(parse(&text).unwrap().decls);
            check_stages(&reparsed, 1).unwrap_or_else(|e| panic!("{path}: {}: {e}\n{text}", f.name));
        }
    }
}

#[test]
fn staging_is_idempotent_on_residuals() {
    let r = spec(&staged(dsl_interpreter_source()), "run_dsl", corpus::dsl_static_args(&corpus::encode_dsl("(in + 2) * in").unwrap()));
    let p = parse(&r.emit()).unwrap();
    let s = check_stages(&p, 1).unwrap();
    assert!((0..s.node_count()).all(|i| s.stage(NodeId(i as u32)) == 0));
}

#[test]
fn step_count_drops_after_specialization() {
    let s = staged(corpus::file("pow.cat").unwrap());
    for n in 2..=8 {
        let r = spec(&s, "pow", vec![Value::Int(n)]);
        let res = run(&r.to_program(), r.entry.as_deref().unwrap(), vec![Value::Float(1.5)], Limits::default()).unwrap();
        let uns = run_unstaged(&s.program, "pow", vec![Value::Int(n), Value::Float(1.5)], Limits::default()).unwrap();
        assert!(res.steps < uns.steps, "N={n}: {} vs {}", res.steps, uns.steps);
    }
}
