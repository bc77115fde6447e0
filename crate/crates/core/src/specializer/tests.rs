use super::*;
use crate::staging::check_stages;

const POW: &str = "float pow(int@ N)(float x) { float result = 1; for@ (int@ i = 0; i < N; ++i) result *= x; return result; }";

const AVERAGE: &str = r#"
function average_type(typename T) {
    switch (T) {
        case int: return float;
        case long int: return double;
        default: return T;
    }
}
function average(typename@ T)(T* array, int N) {
    typename@ T_average = average_type@(T);
    T_average sum = 0;
    for (int i = 0; i < N; ++i)
        sum += array[i];
    return sum / N;
}
"#;

const DOT: &str = "function dot(int@ N, typename@ T)(T* a, T* b) { T result = 0; for@ (int@ i = 0; i < N; ++i) result += a[i] * b[i]; return result; }";

const SQUARE: &str = r#"
function pow(int X, int N) { int result = 1; for (int i = 0; i < N; ++i) result *= X; return result; }
class SquareArray(typename@ T_numtype, int@ N_length, int@ N_dim) {
public:
    SquareArray@() {
        if@ (N_dim <= 0 || N_length <= 0)
            Catat_error@("N_dim and N_length must be positive.");
        else@
            numElements = pow@(N_length, N_dim);
    }
    SquareArray() {
        for (int i = 0; i < numElements; ++i)
            data[i] = 0;
    }
private:
    static int@ numElements;
    T_numtype data[numElements];
}
"#;

fn spec(src: &str, entry: &str, args: Vec<Value>, via_flatten: bool) -> Result<ResidualProgram, SpecError> {
    let staged = check_stages(&parse(src).unwrap(), 2).unwrap();
    specialize_program(&staged, Some(entry), args, Options { via_flatten, ..Options::default() })
}

fn body_text(p: &ResidualProgram) -> String {
    let f = p.function(p.entry.as_deref().unwrap()).unwrap();
    emit_function(&f.def)
}

#[test]
fn pow_three() {
    let p = spec(POW, "pow", vec![Value::Int(3)], false).unwrap();
    assert_eq!(
        body_text(&p),
        "float pow__3(float x) {\n    float result = 1;\n    result *= x;\n    result *= x;\n    result *= x;\n    return result;\n}\n"
    );
    let p0 = spec(POW, "pow", vec![Value::Int(0)], false).unwrap();
    assert_eq!(body_text(&p0), "float pow__0(float x) {\n    float result = 1;\n    return result;\n}\n");
}

#[test]
fn average_signature_and_type_function() {
    let p = spec(AVERAGE, "average", vec![Value::Type(TypeValue::INT)], false).unwrap();
    let f = p.function("average__int").unwrap();
    assert_eq!(f.ret, TypeValue::FLOAT);
    assert!(body_text(&p).starts_with("float average__int(int* array, int N) {\n    float sum = 0;"), "{}", body_text(&p));
}

#[test]
fn call_site_produces_one_residual() {
    let src = format!("{AVERAGE}\nint data[10];\nfloat r = average(int)(data, 10);\nfloat s = average(int)(data, 5);\n");
    let staged = check_stages(&parse(&src).unwrap(), 2).unwrap();
    let p = specialize_program(&staged, None, vec![], Options::default()).unwrap();
    let names: Vec<&str> = p.items.iter().map(ResidualItem::name).collect();
    assert_eq!(names, ["average__int"]);
    assert!(p.emit().contains("float r = average__int(data, 10);"), "{}", p.emit());
}

#[test]
fn dot_unrolls() {
    let p = spec(DOT, "dot", vec![Value::Int(3), Value::Type(TypeValue::FLOAT)], false).unwrap();
    let text = body_text(&p);
    assert!(text.contains("result += a[0] * b[0];") && text.contains("result += a[2] * b[2];"), "{text}");
    assert!(text.starts_with("float dot__3_float(float* a, float* b)"), "{text}");
}

#[test]
fn square_array_members() {
    let src = format!("{SQUARE}\nSquareArray(float, 4, 2) a;\n");
    let staged = check_stages(&parse(&src).unwrap(), 2).unwrap();
    let p = specialize_program(&staged, None, vec![], Options::default()).unwrap();
    let c = p.class("SquareArray__float_4_2").unwrap();
    assert_eq!(c.static_value("numElements"), Some(&Value::Int(16)));
    assert_eq!(c.members, vec![("data".to_string(), TypeValue::Array(Box::new(TypeValue::FLOAT), 16))]);
    assert!(p.emit().contains("// static numElements = 16"));

    let bad = format!("{SQUARE}\nSquareArray(float, 0, 2) a;\n");
    let staged = check_stages(&parse(&bad).unwrap(), 2).unwrap();
    match specialize_program(&staged, None, vec![], Options::default()) {
        Err(SpecError::Eval(EvalError::UserStatic { message, .. })) => {
            assert_eq!(message, "N_dim and N_length must be positive.")
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn depth_limit_counts_links() {
    let src = "function grow(int@ N)(int x) { return grow(N + 1)(x); }";
    let staged = check_stages(&parse(src).unwrap(), 2).unwrap();
    let opts = Options { limits: Limits { max_depth: 32, ..Limits::default() }, ..Options::default() };
    match specialize_program(&staged, Some("grow"), vec![Value::Int(0)], opts) {
        Err(SpecError::DepthExceeded { chain, limit, .. }) => {
            assert_eq!(limit, 32);
            assert_eq!(chain.len(), 33);
            assert_eq!(chain[31], "grow(31)");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn same_key_recursion_is_rejected() {
    let src = "function loop(int@ N)(int x) { return loop(N)(x); }";
    let r = spec(src, "loop", vec![Value::Int(1)], false);
    assert!(matches!(r, Err(SpecError::SelfRecursive { .. })), "{r:?}");
}

#[test]
fn return_type_conflict() {
    let src = "function f(int@ N)(int x) { if (x > 0) return 1; return true; }";
    assert!(spec(src, "f", vec![Value::Int(1)], false).is_ok());
    let src = "class C { int v; }\nfunction f(int@ N)(int x) { C c; if (x > 0) return 1; return c; }";
    assert!(matches!(spec(src, "f", vec![Value::Int(1)], false), Err(SpecError::ReturnTypeMismatch { .. })));
}

#[test]
fn static_return_ends_residualization() {
    let src = "function f(int@ N)(int x) { for@ (int@ i = 0; i < 10; ++i) { if@ (i == N) return x + i; x += 1; } return 0; }";
    let p = spec(src, "f", vec![Value::Int(2)], false).unwrap();
    assert_eq!(body_text(&p), "int f__2(int x) {\n    x += 1;\n    x += 1;\n    return x + 2;\n}\n");
}

#[test]
fn flatten_path_agrees() {
    for n in 0..5 {
        let a = spec(POW, "pow", vec![Value::Int(n)], false).unwrap();
        let b = spec(POW, "pow", vec![Value::Int(n)], true).unwrap();
        let (fa, fb) = (a.function(a.entry.as_deref().unwrap()).unwrap(), b.function(b.entry.as_deref().unwrap()).unwrap());
        assert!(alpha_equivalent(&fa.def, &fb.def), "{}\n{}", emit_function(&fa.def), emit_function(&fb.def));
    }
    let args = vec![Value::Int(3), Value::Type(TypeValue::FLOAT)];
    let a = spec(DOT, "dot", args.clone(), false).unwrap();
    let b = spec(DOT, "dot", args, true).unwrap();
    assert_eq!(a.emit(), b.emit());
    let a = spec(AVERAGE, "average", vec![Value::Type(TypeValue::INT)], false).unwrap();
    let b = spec(AVERAGE, "average", vec![Value::Type(TypeValue::INT)], true).unwrap();
    assert_eq!(a.emit(), b.emit());
}

#[test]
fn generator_shape() {
    let staged = check_stages(&parse(POW).unwrap(), 2).unwrap();
    let Decl::Function(def) = &staged.program.decls[0] else { unreachable!() };
    let g = crate::flatten::flatten_function(&staged, def).unwrap();
    let text = emit_function(&g);
    assert!(text.starts_with("ASTree pow__gen(int N) {"), "{text}");
    assert!(text.contains("for (int i = 0; i < N; ++i) {"), "{text}");
    assert!(text.contains("make_op(\"*=\", make_varref(\"result\"), make_varref(\"x\"))"), "{text}");
    let reparsed = parse(&text).unwrap();
    check_stages(&reparsed, 1).unwrap();
}

#[test]
fn scripting_bindings() {
    let src = "int@ N = 4; int@ Nfact = 1; for@ (int@ i = 1; i <= N; ++i) Nfact *= i;";
    let staged = check_stages(&parse(src).unwrap(), 2).unwrap();
    let p = specialize_program(&staged, None, vec![], Options::default()).unwrap();
    assert!(p.is_empty());
    assert_eq!(p.statics, vec![("N".to_string(), Value::Int(4)), ("Nfact".to_string(), Value::Int(24))]);
}
