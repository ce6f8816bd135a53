//! Shared fixtures for the pipeline benchmarks: deterministic random
//! summaries, prototypes, and batches at configurable sizes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use simproto::matrix::Mat;
use simproto::prototype::{CorrelationMetric, SimilarityPrototype};
use simproto::stats::{ClassSemanticRepresentation, DatasetSemanticSummary};

/// Random dataset summary with `c` classes over `l` labels.
pub fn random_summary(c: usize, l: usize, seed: u64) -> DatasetSemanticSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reps = (0..c)
        .map(|i| {
            let mut values: Vec<f64> = (0..l).map(|_| rng.gen_range(0.0..=1.0)).collect();
            values[i % l] = values[i % l].max(0.5);
            ClassSemanticRepresentation {
                class_id: i + 1,
                class_name: format!("scene_{i:03}"),
                instance_count: 80,
                values,
            }
        })
        .collect();
    DatasetSemanticSummary::new(l, reps).expect("valid summary")
}

/// Random symmetric prototype of order `c` with entries in (0, 1).
pub fn random_prototype(c: usize, seed: u64) -> SimilarityPrototype {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Mat::identity(c);
    for i in 0..c {
        for j in (i + 1)..c {
            let v = rng.gen_range(0.05..0.95);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    SimilarityPrototype::new(
        (0..c).map(|i| format!("scene_{i:03}")).collect(),
        CorrelationMetric::CosineSimilarity,
        m,
    )
    .expect("valid prototype")
}

/// Random logits and targets of shape `b x c`.
pub fn random_batch(b: usize, c: usize, seed: u64) -> (Mat, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut logits = Mat::zeros(b, c);
    for v in logits.as_mut_slice() {
        *v = rng.gen_range(-3.0..3.0);
    }
    let targets = (0..b).map(|_| rng.gen_range(0..c)).collect();
    (logits, targets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_deterministic() {
        assert_eq!(random_summary(5, 10, 1), random_summary(5, 10, 1));
        assert_eq!(
            random_prototype(6, 2).matrix().as_slice(),
            random_prototype(6, 2).matrix().as_slice()
        );
        let (a, ta) = random_batch(8, 4, 3);
        let (b, tb) = random_batch(8, 4, 3);
        assert_eq!(a, b);
        assert_eq!(ta, tb);
    }
}
