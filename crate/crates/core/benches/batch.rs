use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use catat::batch::{mix_batch, mix_batch_seq, run_batch, run_batch_seq, MixCase};
use catat::corpus::{dsl_interpreter_source, dsl_static_args, encode_dsl, file};
use catat::specializer::{specialize_program, Options};
use catat::staging::check_stages;
use catat::staticeval::Value;
use catat::syntax::parse;

fn pow_cases() -> Vec<MixCase> {
    (0..=8)
        .flat_map(|n| {
            (-5..=5).map(move |x| MixCase { function: "pow".into(), static_args: vec![Value::Int(n)], dyn_args: vec![Value::Float(x as f64)] })
        })
        .collect()
}

fn mix(c: &mut Criterion) {
    let staged = check_stages(&parse(file("pow.cat").unwrap()).unwrap(), 2).unwrap();
    let cases = pow_cases();
    let mut g = c.benchmark_group("mix_pow");
    g.bench_function(BenchmarkId::new("parallel", cases.len()), |b| b.iter(|| mix_batch(&staged, black_box(&cases), Options::default())));
    g.bench_function(BenchmarkId::new("sequential", cases.len()), |b| {
        b.iter(|| mix_batch_seq(&staged, black_box(&cases), Options::default()))
    });
    g.finish();
}

fn run(c: &mut Criterion) {
    let staged = check_stages(&parse(dsl_interpreter_source()).unwrap(), 2).unwrap();
    let toks = encode_dsl("(in + 1) * (in + 2) * (in + 3) + in * 7").unwrap();
    let residual = specialize_program(&staged, Some("run_dsl"), dsl_static_args(&toks), Options::default()).unwrap();
    let program = residual.to_program();
    let entry = residual.entry.clone().unwrap();
    let inputs: Vec<Vec<Value>> = (-500..500).map(|x| vec![Value::Int(x)]).collect();
    let mut g = c.benchmark_group("run_dsl_residual");
    g.bench_function(BenchmarkId::new("parallel", inputs.len()), |b| {
        b.iter(|| run_batch(&program, &entry, black_box(&inputs), Default::default()))
    });
    g.bench_function(BenchmarkId::new("sequential", inputs.len()), |b| {
        b.iter(|| run_batch_seq(&program, &entry, black_box(&inputs), Default::default()))
    });
    g.finish();
}

criterion_group!(benches, mix, run);
criterion_main!(benches);
