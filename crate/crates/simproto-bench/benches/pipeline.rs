//! End-to-end performance of the pipeline stages at realistic sizes:
//! 67 scene classes over 150 semantic labels, batches of 32.

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use simproto::contrastive::{combined_loss, BatchPredictions, BclConfig, SimilarityMode};
use simproto::datagen::GeneratorSpec;
use simproto::model::{loss_and_grad, ContrastiveMode, MlpClassifier};
use simproto::prototype::{build_prototype, CorrelationMetric};
use simproto::softening::{epoch_labels, soft_cross_entropy, unify_confidence};
use simproto::stats::presence_vector;

use simproto_bench::{random_batch, random_prototype, random_summary};

fn bench_statistics(c: &mut Criterion) {
    let mut group = c.benchmark_group("statistics");
    let spec = GeneratorSpec::default();
    let profiles = spec.profiles(7).unwrap();
    let map = simproto::datagen::sample_label_map(&profiles[0], 96, 96, 11).unwrap();
    group.bench_function("presence_vector_96x96", |b| {
        b.iter(|| presence_vector(black_box(&map), 30).unwrap())
    });
    group.finish();
}

fn bench_prototype(c: &mut Criterion) {
    let mut group = c.benchmark_group("prototype");
    let summary = random_summary(67, 150, 5);
    group.bench_function("build_cosine_67x150", |b| {
        b.iter(|| build_prototype(black_box(&summary), CorrelationMetric::CosineSimilarity))
    });
    group.bench_function("build_euclidean_67x150", |b| {
        b.iter(|| build_prototype(black_box(&summary), CorrelationMetric::EuclideanExp))
    });
    group.finish();
}

fn bench_softening(c: &mut Criterion) {
    let mut group = c.benchmark_group("softening");
    let proto = random_prototype(67, 9);
    group.bench_function("unify_confidence_67", |b| {
        b.iter(|| unify_confidence(black_box(proto.matrix()), 0.8).unwrap())
    });
    group.bench_function("epoch_labels_67", |b| {
        b.iter(|| epoch_labels(black_box(proto.matrix()), 10, 20).unwrap())
    });
    let labels = unify_confidence(proto.matrix(), 0.8).unwrap();
    let (logits, targets) = random_batch(32, 67, 13);
    group.bench_function("soft_cross_entropy_32x67", |b| {
        b.iter(|| soft_cross_entropy(black_box(&logits), &targets, &labels).unwrap())
    });
    group.finish();
}

fn bench_contrastive(c: &mut Criterion) {
    let mut group = c.benchmark_group("contrastive");
    let proto = random_prototype(67, 9);
    let labels = unify_confidence(proto.matrix(), 0.8).unwrap();
    let (logits, targets) = random_batch(32, 67, 13);
    for (name, similarity) in [
        ("cosine", SimilarityMode::CosineOnLogits),
        ("euclidean", SimilarityMode::EuclideanExpOnLogits),
    ] {
        let cfg = BclConfig {
            similarity,
            ..BclConfig::default()
        };
        group.bench_function(format!("combined_loss_32x67_{name}"), |b| {
            b.iter(|| {
                let batch =
                    BatchPredictions::new(black_box(logits.clone()), targets.clone()).unwrap();
                combined_loss(&batch, &labels, &proto, &cfg).unwrap()
            })
        });
    }
    group.finish();
}

fn bench_training_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("training");
    let proto = random_prototype(7, 3);
    let labels = unify_confidence(proto.matrix(), 0.8).unwrap();
    let model = MlpClassifier::new(&[50, 64, 7], 17).unwrap();
    let mut rng_batch = random_batch(32, 50, 23);
    rng_batch.1 = rng_batch.1.iter().map(|t| t % 7).collect();
    let (features, targets) = rng_batch;
    group.bench_function("loss_and_grad_batch32", |b| {
        b.iter(|| {
            loss_and_grad(
                black_box(&model),
                &features,
                &targets,
                &labels,
                Some(&proto),
                &ContrastiveMode::Bcl(BclConfig::default()),
            )
            .unwrap()
        })
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_statistics,
    bench_prototype,
    bench_softening,
    bench_contrastive,
    bench_training_step
);
criterion_main!(benches);
