use criterion::{black_box, criterion_group, criterion_main, Criterion};

use vidprobe_core::analyze::{tsne, TsneConfig};
use vidprobe_core::knn::{knn_evaluate, KnnConfig};
use vidprobe_core::numkit::chunked_sum;
use vidprobe_core::probe::{AttentiveHead, LinearHead};
use vidprobe_core::synth::{gen_class_gaussians, SynthSpec};
use vidprobe_core::{Matrix, Rng};

fn reductions(c: &mut Criterion) {
    c.bench_function("chunked_sum 4096x256", |b| {
        b.iter(|| chunked_sum(4096, 256, |i, acc| acc.iter_mut().for_each(|a| *a += i as f64)))
    });
}

fn heads(c: &mut Criterion) {
    let mut rng = Rng::new(1, 0);
    let (d, classes, tokens) = (64, 10, 16);
    let mut lin = LinearHead::zeros(d, classes);
    lin.assign_flat(&(0..lin.num_params()).map(|_| 0.1 * rng.normal()).collect::<Vec<_>>());
    let x: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
    c.bench_function("linear loss_grad d64 C10", |b| b.iter(|| lin.loss_grad(black_box(&x), 3).unwrap()));

    let mut att = AttentiveHead::zeros(d, classes, 4).unwrap();
    att.assign_flat(&(0..att.num_params()).map(|_| 0.1 * rng.normal()).collect::<Vec<_>>());
    let t: Vec<f64> = (0..tokens * d).map(|_| rng.normal()).collect();
    c.bench_function("attentive forward d64 T16 H4", |b| b.iter(|| att.forward(black_box(&t)).unwrap()));
    c.bench_function("attentive loss_grad d64 T16 H4", |b| b.iter(|| att.loss_grad(black_box(&t), 3).unwrap()));
}

fn knn(c: &mut Criterion) {
    let data = gen_class_gaussians(&SynthSpec::default()).unwrap();
    let mut g = c.benchmark_group("knn");
    g.sample_size(10);
    g.bench_function("video mode 2000x500 d64", |b| {
        b.iter(|| knn_evaluate(&data.train, &data.eval, &KnnConfig::default()).unwrap())
    });
    g.finish();
}

fn embedding(c: &mut Criterion) {
    let mut rng = Rng::new(2, 0);
    let x = Matrix::from_vec(200, 16, (0..200 * 16).map(|_| rng.normal()).collect());
    let cfg = TsneConfig { iterations: 300, ..TsneConfig::default() };
    let mut g = c.benchmark_group("tsne");
    g.sample_size(10);
    g.bench_function("exact n200 300 iters", |b| b.iter(|| tsne(&x, &cfg).unwrap()));
    g.finish();
}

criterion_group!(benches, reductions, heads, knn, embedding);
criterion_main!(benches);
