//! Synthetic scene datasets with controllable inter-class structure.
//!
//! Each class has an occurrence distribution over `L` object labels. A
//! label map is `K` contiguous regions, each filled with one label drawn
//! independently from that distribution, which keeps the presence
//! probability of label `l` in closed form: `1 - (1 - p_l)^K`. Profiles are
//! built from shared "blocks" of labels so that the pairwise overlap mass
//! `sum_l min(p_a(l), p_b(l))` hits requested values exactly, giving the
//! statistics pipeline an analytic ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::io::features::FeatureSet;
use crate::matrix::Mat;
use crate::prototype::{build_prototype, CorrelationMetric, SimilarityPrototype};
use crate::seeding::mix_seed;
use crate::stats::{ClassSemanticRepresentation, DatasetSemanticSummary, LabelMap};

/// Occurrence distribution of one class over the `L` object labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProfile {
    pub class_id: usize,
    pub class_name: String,
    /// Per-region occurrence probabilities; nonnegative, summing to 1.
    pub occurrence: Vec<f64>,
    /// Regions per map.
    pub regions: usize,
}

impl ClassProfile {
    /// Overlap mass `sum_l min(p_self(l), p_other(l))` with another profile.
    pub fn overlap_mass(&self, other: &ClassProfile) -> f64 {
        self.occurrence
            .iter()
            .zip(&other.occurrence)
            .map(|(&a, &b)| a.min(b))
            .sum()
    }
}

/// One requested class pair overlap. Class indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairOverlap {
    pub first: usize,
    pub second: usize,
    /// Total shared occurrence mass of the pair, including the base
    /// overlap common to all classes.
    pub overlap: f64,
}

/// Overlap structure of a generated profile set.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilaritySpec {
    pub pairs: Vec<PairOverlap>,
    /// Occurrence mass shared by every class (common background objects).
    pub base_overlap: f64,
}

impl SimilaritySpec {
    pub fn new(pairs: Vec<PairOverlap>, base_overlap: f64) -> Self {
        SimilaritySpec {
            pairs,
            base_overlap,
        }
    }
}

/// Fill a block of `weights` with jittered-uniform values normalized to
/// `mass`. The same jitter is reused for every class sharing the block, so
/// block overlaps are exact.
fn block_weights(rng: &mut ChaCha8Rng, len: usize, mass: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| 1.0 + rng.gen_range(0.0..0.5)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w * mass / total).collect()
}

/// Build `c` class profiles over `l` labels whose pairwise overlap masses
/// match the spec exactly: designated pairs share `overlap`, every other
/// pair shares only `base_overlap`.
pub fn make_confusable_profiles(
    c: usize,
    l: usize,
    regions: usize,
    spec: &SimilaritySpec,
    seed: u64,
) -> Result<Vec<ClassProfile>> {
    if c < 2 {
        return Err(Error::InfeasibleSpec {
            reason: format!("need at least 2 classes, got {c}"),
        });
    }
    if l < c {
        return Err(Error::InfeasibleSpec {
            reason: format!("need at least as many labels ({l}) as classes ({c})"),
        });
    }
    if regions == 0 {
        return Err(Error::InfeasibleSpec {
            reason: "regions per map must be positive".into(),
        });
    }
    if !(0.0..1.0).contains(&spec.base_overlap) {
        return Err(Error::InfeasibleSpec {
            reason: format!("base overlap {} outside [0, 1)", spec.base_overlap),
        });
    }
    for pair in &spec.pairs {
        if pair.first >= c || pair.second >= c || pair.first == pair.second {
            return Err(Error::InfeasibleSpec {
                reason: format!("invalid pair ({}, {})", pair.first, pair.second),
            });
        }
        if !(0.0..=1.0).contains(&pair.overlap) || pair.overlap < spec.base_overlap {
            return Err(Error::InfeasibleSpec {
                reason: format!(
                    "pair overlap {} must lie in [base_overlap, 1]",
                    pair.overlap
                ),
            });
        }
    }
    for (i, a) in spec.pairs.iter().enumerate() {
        for b in &spec.pairs[..i] {
            let same = (a.first == b.first && a.second == b.second)
                || (a.first == b.second && a.second == b.first);
            if same {
                return Err(Error::InfeasibleSpec {
                    reason: format!("duplicate pair ({}, {})", a.first, a.second),
                });
            }
        }
    }

    // Per-class shared mass: base plus each pair's extra share.
    let base = spec.base_overlap;
    let mut shared_mass = vec![base; c];
    for pair in &spec.pairs {
        for class in [pair.first, pair.second] {
            shared_mass[class] += pair.overlap - base;
        }
    }
    if let Some(class) = shared_mass.iter().position(|&m| m > 1.0 + 1e-12) {
        return Err(Error::InfeasibleSpec {
            reason: format!(
                "class {class} would need shared mass {:.3} > 1",
                shared_mass[class]
            ),
        });
    }

    // Label budget: one block per structural role. Zero-mass blocks take no
    // labels.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let common_mass = base;
    let has_common = common_mass > 0.0;
    let active_pairs: Vec<&PairOverlap> = spec.pairs.iter().filter(|p| p.overlap > base).collect();
    let private_mass: Vec<f64> = shared_mass.iter().map(|&m| 1.0 - m).collect();
    let private_blocks = private_mass.iter().filter(|&&m| m > 1e-12).count();
    let min_needed = usize::from(has_common) + active_pairs.len() + private_blocks;
    if min_needed > l {
        return Err(Error::InfeasibleSpec {
            reason: format!("{min_needed} label blocks exceed the {l} available labels"),
        });
    }

    // Spread spare labels round-robin across blocks, up to 4 labels per
    // block; any leftover labels simply never occur.
    let mut block_sizes = vec![1usize; min_needed];
    let mut spare = l - min_needed;
    while spare > 0 {
        let before = spare;
        for size in block_sizes.iter_mut() {
            if spare > 0 && *size < 4 {
                *size += 1;
                spare -= 1;
            }
        }
        if spare == before {
            break;
        }
    }

    // Assign label indices to blocks through a seeded permutation.
    let mut label_order: Vec<usize> = (0..l).collect();
    use rand::seq::SliceRandom;
    label_order.shuffle(&mut rng);
    let mut cursor = 0usize;
    let take = |count: usize, cursor: &mut usize| -> Vec<usize> {
        let slice = label_order[*cursor..*cursor + count].to_vec();
        *cursor += count;
        slice
    };

    let mut occ = vec![vec![0.0f64; l]; c];
    let mut block_idx = 0usize;
    if has_common {
        let labels = take(block_sizes[block_idx], &mut cursor);
        block_idx += 1;
        let weights = block_weights(&mut rng, labels.len(), common_mass);
        for class_occ in occ.iter_mut() {
            for (&label, &w) in labels.iter().zip(&weights) {
                class_occ[label] = w;
            }
        }
    }
    for pair in &active_pairs {
        let labels = take(block_sizes[block_idx], &mut cursor);
        block_idx += 1;
        let weights = block_weights(&mut rng, labels.len(), pair.overlap - base);
        for class in [pair.first, pair.second] {
            for (&label, &w) in labels.iter().zip(&weights) {
                occ[class][label] = w;
            }
        }
    }
    for (class, &mass) in private_mass.iter().enumerate() {
        if mass <= 1e-12 {
            continue;
        }
        let labels = take(block_sizes[block_idx], &mut cursor);
        block_idx += 1;
        let weights = block_weights(&mut rng, labels.len(), mass);
        for (&label, &w) in labels.iter().zip(&weights) {
            occ[class][label] = w;
        }
    }

    Ok(occ
        .into_iter()
        .enumerate()
        .map(|(i, occurrence)| ClassProfile {
            class_id: i + 1,
            class_name: format!("scene_{:02}", i + 1),
            occurrence,
            regions,
        })
        .collect())
}

fn sample_index(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let r: f64 = rng.gen();
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_positive = i;
            cum += w;
            if r < cum {
                return i;
            }
        }
    }
    last_positive
}

/// Sample one label map: `K` contiguous row-major regions, each filled with
/// a label drawn independently from the profile's occurrence distribution.
pub fn sample_label_map(
    profile: &ClassProfile,
    width: usize,
    height: usize,
    seed: u64,
) -> Result<LabelMap> {
    let pixels = width * height;
    let k = profile.regions;
    if width == 0 || height == 0 || k == 0 || !pixels.is_multiple_of(k) {
        return Err(Error::Geometry {
            width,
            height,
            regions: k,
        });
    }
    let region_len = pixels / k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = Vec::with_capacity(pixels);
    for _ in 0..k {
        let label = sample_index(&profile.occurrence, &mut rng) + 1;
        labels.extend(std::iter::repeat_n(label as u16, region_len));
    }
    LabelMap::new(width, height, labels)
}

/// Exact probability that each label appears in a sampled map:
/// `1 - (1 - p_l)^K`.
pub fn analytic_presence(profile: &ClassProfile) -> Vec<f64> {
    profile
        .occurrence
        .iter()
        .map(|&p| {
            if p == 0.0 {
                0.0
            } else {
                1.0 - (1.0 - p).powi(profile.regions as i32)
            }
        })
        .collect()
}

/// Ground-truth prototype from the analytic presence vectors.
pub fn oracle_prototype(
    profiles: &[ClassProfile],
    metric: CorrelationMetric,
) -> Result<SimilarityPrototype> {
    let l = profiles
        .first()
        .map(|p| p.occurrence.len())
        .ok_or_else(|| Error::EmptyData {
            what: "profile list".into(),
        })?;
    let reps = profiles
        .iter()
        .map(|p| ClassSemanticRepresentation {
            class_id: p.class_id,
            class_name: p.class_name.clone(),
            instance_count: 1,
            values: analytic_presence(p),
        })
        .collect();
    let summary = DatasetSemanticSummary::new(l, reps)?;
    build_prototype(&summary, metric)
}

/// A complete generated dataset: label maps, features, and the train/test
/// split.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub l: usize,
    pub regions: usize,
    pub map_width: usize,
    pub map_height: usize,
    pub class_names: Vec<String>,
    pub per_class: usize,
    /// Flat, class-major: instance `i` of class `c` sits at `c * per_class + i`.
    pub maps: Vec<LabelMap>,
    /// 0-based class per instance.
    pub labels: Vec<usize>,
    pub features: Mat,
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    pub seed: u64,
}

impl SyntheticDataset {
    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn train_set(&self) -> FeatureSet {
        self.view(&self.train_idx)
    }

    pub fn test_set(&self) -> FeatureSet {
        self.view(&self.test_idx)
    }

    fn view(&self, indices: &[usize]) -> FeatureSet {
        let mut features = Mat::zeros(indices.len(), self.feature_dim());
        let mut labels = Vec::with_capacity(indices.len());
        for (r, &idx) in indices.iter().enumerate() {
            features.row_mut(r).copy_from_slice(self.features.row(idx));
            labels.push(self.labels[idx]);
        }
        FeatureSet { labels, features }
    }

    /// Maps of one class, in instance order.
    pub fn class_maps(&self, class: usize) -> &[LabelMap] {
        let start = class * self.per_class;
        &self.maps[start..start + self.per_class]
    }
}

/// Draw a full dataset: `per_class` maps per class, features as the noisy
/// normalized label histogram of each map plus appended distractor noise
/// dimensions.
#[allow(clippy::too_many_arguments)]
pub fn sample_dataset(
    profiles: &[ClassProfile],
    per_class: usize,
    width: usize,
    height: usize,
    feature_noise: f64,
    distractor_dims: usize,
    split_fraction: f64,
    seed: u64,
) -> Result<SyntheticDataset> {
    if profiles.is_empty() {
        return Err(Error::EmptyData {
            what: "profile list".into(),
        });
    }
    if per_class < 2 {
        return Err(Error::InvalidConfig {
            reason: format!("need at least 2 instances per class, got {per_class}"),
        });
    }
    if !(0.0..=1.0).contains(&split_fraction) {
        return Err(Error::InvalidConfig {
            reason: format!("split fraction {split_fraction} outside [0, 1]"),
        });
    }
    if feature_noise < 0.0 {
        return Err(Error::InvalidConfig {
            reason: "feature noise must be nonnegative".into(),
        });
    }
    let l = profiles[0].occurrence.len();
    let c = profiles.len();
    let pixels = (width * height) as f64;
    let dim = l + distractor_dims;
    let n = c * per_class;
    let mut maps = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut features = Mat::zeros(n, dim);
    let noise = if feature_noise > 0.0 {
        Some(Normal::new(0.0, feature_noise).expect("positive std dev"))
    } else {
        None
    };
    let distractor = Normal::new(0.0, 1.0).expect("unit std dev");

    for (class, profile) in profiles.iter().enumerate() {
        if profile.occurrence.len() != l {
            return Err(Error::DimensionMismatch {
                context: format!("profile {:?}", profile.class_name),
                expected: l,
                got: profile.occurrence.len(),
            });
        }
        for instance in 0..per_class {
            let salt = (class * per_class + instance) as u64;
            let map = sample_label_map(profile, width, height, mix_seed(seed, salt))?;
            let row = features.row_mut(class * per_class + instance);
            for &label in map.labels() {
                row[usize::from(label) - 1] += 1.0;
            }
            for v in row[..l].iter_mut() {
                *v /= pixels;
            }
            let mut frng = ChaCha8Rng::seed_from_u64(mix_seed(seed ^ 0x5EED_F00D, salt));
            if let Some(noise) = &noise {
                for v in row[..l].iter_mut() {
                    *v += noise.sample(&mut frng);
                }
            }
            for v in row[l..].iter_mut() {
                *v = distractor.sample(&mut frng);
            }
            maps.push(map);
            labels.push(class);
        }
    }

    let train_per_class = ((per_class as f64) * split_fraction).round() as usize;
    let mut train_idx = Vec::with_capacity(c * train_per_class);
    let mut test_idx = Vec::with_capacity(n - c * train_per_class);
    for class in 0..c {
        for instance in 0..per_class {
            let idx = class * per_class + instance;
            if instance < train_per_class {
                train_idx.push(idx);
            } else {
                test_idx.push(idx);
            }
        }
    }

    Ok(SyntheticDataset {
        l,
        regions: profiles[0].regions,
        map_width: width,
        map_height: height,
        class_names: profiles.iter().map(|p| p.class_name.clone()).collect(),
        per_class,
        maps,
        labels,
        features,
        train_idx,
        test_idx,
        seed,
    })
}

/// Full generator configuration. The defaults are the confusable benchmark:
/// seven classes over thirty labels with two heavily overlapping pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub classes: usize,
    pub labels: usize,
    pub regions: usize,
    pub map_width: usize,
    pub map_height: usize,
    pub per_class: usize,
    pub pairs: Vec<PairOverlap>,
    pub base_overlap: f64,
    pub feature_noise: f64,
    pub distractor_dims: usize,
    pub split_fraction: f64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            classes: 7,
            labels: 30,
            regions: 12,
            map_width: 12,
            map_height: 12,
            per_class: 300,
            pairs: vec![
                PairOverlap {
                    first: 0,
                    second: 1,
                    overlap: 0.8,
                },
                PairOverlap {
                    first: 2,
                    second: 3,
                    overlap: 0.8,
                },
            ],
            base_overlap: 0.35,
            feature_noise: 0.05,
            distractor_dims: 20,
            split_fraction: 0.4,
        }
    }
}

impl GeneratorSpec {
    pub fn similarity_spec(&self) -> SimilaritySpec {
        SimilaritySpec::new(self.pairs.clone(), self.base_overlap)
    }

    pub fn profiles(&self, seed: u64) -> Result<Vec<ClassProfile>> {
        make_confusable_profiles(
            self.classes,
            self.labels,
            self.regions,
            &self.similarity_spec(),
            mix_seed(seed, 0xC0FFEE),
        )
    }

    pub fn generate(&self, seed: u64) -> Result<SyntheticDataset> {
        let profiles = self.profiles(seed)?;
        sample_dataset(
            &profiles,
            self.per_class,
            self.map_width,
            self.map_height,
            self.feature_noise,
            self.distractor_dims,
            self.split_fraction,
            seed,
        )
    }
}
