use crate::staticeval::{TypeValue, Value};

/// Residual name for `base` specialized at `args`: `base__a1_a2`.
pub fn mangle(base: &str, args: &[Value]) -> String {
    if args.is_empty() {
        return base.to_string();
    }
    let parts: Vec<String> = args.iter().map(render_value).collect();
    format!("{base}__{}", parts.join("_"))
}

fn int(v: i64) -> String {
    if v < 0 {
        format!("m{}", v.unsigned_abs())
    } else {
        v.to_string()
    }
}

fn render_value(v: &Value) -> String {
    match v {
        Value::Int(i) => int(*i),
        Value::Float(f) => format!("{f:?}").replace('.', "p").replace('-', "m").replace('+', ""),
        Value::Bool(b) => b.to_string(),
        Value::Type(t) => render_type(t),
        Value::Array { items, .. } => {
            let mut s = format!("a{}", items.len());
            for i in items {
                s.push('_');
                s.push_str(&render_value(i));
            }
            s
        }
        Value::Instance { class, .. } => format!("obj_{}", render_type(class)),
        Value::Str(s) => s.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect(),
        Value::Code(_) => "code".into(),
        Value::Unit => "void".into(),
    }
}

fn render_type(t: &TypeValue) -> String {
    match t {
        TypeValue::Prim(p) => p.name().replace(' ', "_"),
        TypeValue::Typename => "typename".into(),
        TypeValue::Code => "ASTree".into(),
        TypeValue::Pointer(e) => format!("{}ptr", render_type(e)),
        TypeValue::Array(e, n) => format!("{}arr{n}", render_type(e)),
        TypeValue::Class { name, args } => {
            let mut s = name.clone();
            for a in args {
                s.push('_');
                s.push_str(&render_value(a));
            }
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Prim;

    #[test]
    fn examples() {
        assert_eq!(mangle("average", &[Value::Type(TypeValue::INT)]), "average__int");
        assert_eq!(mangle("pow", &[Value::Int(3)]), "pow__3");
        assert_eq!(mangle("f", &[]), "f");
        assert_eq!(mangle("g", &[Value::Int(-4), Value::Type(TypeValue::Prim(Prim::LongInt))]), "g__m4_long_int");
        assert_eq!(mangle("h", &[Value::Float(2.5)]), "h__2p5");
        let arr = Value::Array { elem: TypeValue::INT, items: vec![Value::Int(1), Value::Int(12)] };
        assert_eq!(mangle("run", &[arr, Value::Int(2)]), "run__a2_1_12_2");
    }
}
