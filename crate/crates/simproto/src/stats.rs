//! Class-level semantic statistics from segmentation label maps.
//!
//! Each image contributes a binary presence vector recording which of the
//! `L` semantic labels occur anywhere in its label map. Averaging the
//! presence vectors of a class gives that class's semantic representation:
//! entry `l` is the fraction of the class's images containing label `l`.
//!
//! Presence counts accumulate as integers and are divided by the instance
//! count once at the end, so results are independent of instance order and
//! reproducible bit-for-bit.

use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::dataset::Manifest;
use crate::io::pgm;

/// A per-pixel semantic label grid. Labels are 1-based, matching the file
/// encoding; 0 is never a valid label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u16>,
}

impl LabelMap {
    /// Build a map from a row-major label buffer.
    ///
    /// Rejects empty geometry, buffer-size mismatches, and any zero label
    /// (labels are 1-based).
    pub fn new(width: usize, height: usize, labels: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Geometry {
                width,
                height,
                regions: 1,
            });
        }
        if labels.len() != width * height {
            return Err(Error::DimensionMismatch {
                context: "label map buffer".into(),
                expected: width * height,
                got: labels.len(),
            });
        }
        if let Some(idx) = labels.iter().position(|&v| v == 0) {
            return Err(Error::LabelOutOfRange {
                x: idx % width,
                y: idx / width,
                label: 0,
                max_label: usize::from(u16::MAX),
            });
        }
        Ok(LabelMap {
            width,
            height,
            labels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Row-major pixel labels, 1-based.
    pub fn labels(&self) -> &[u16] {
        &self.labels
    }
}

/// Binary occurrence vector for one image: entry `l-1` is true when label
/// `l` appears anywhere in the map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceSemanticVector {
    values: Vec<bool>,
}

impl InstanceSemanticVector {
    /// Construct directly from a binary vector. At least one entry must be
    /// set; an image always contains some label.
    pub fn new(values: Vec<bool>) -> Result<Self> {
        if !values.iter().any(|&v| v) {
            return Err(Error::EmptyClass {
                class: "instance presence vector".into(),
            });
        }
        Ok(InstanceSemanticVector { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    /// Number of labels present.
    pub fn count_ones(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }
}

/// Extract the presence vector of a label map against `l` semantic labels.
///
/// Entry `label-1` of the result is true iff `label` occurs at least once in
/// the map. Any pixel outside `[1, l]` is an error naming the offending
/// pixel.
pub fn presence_vector(map: &LabelMap, l: usize) -> Result<InstanceSemanticVector> {
    let mut values = vec![false; l];
    for (idx, &label) in map.labels().iter().enumerate() {
        let label = usize::from(label);
        if label < 1 || label > l {
            return Err(Error::LabelOutOfRange {
                x: idx % map.width(),
                y: idx / map.width(),
                label: label as u32,
                max_label: l,
            });
        }
        values[label - 1] = true;
    }
    InstanceSemanticVector::new(values)
}

/// Occurrence-frequency vector for one class: the mean of its instances'
/// presence vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSemanticRepresentation {
    pub class_id: usize,
    pub class_name: String,
    pub instance_count: usize,
    pub values: Vec<f64>,
}

impl ClassSemanticRepresentation {
    /// True when some label is present in at least one instance.
    pub fn has_support(&self) -> bool {
        self.values.iter().any(|&v| v > 0.0)
    }
}

/// Integer presence-count accumulator for one class.
///
/// Merging accumulators is a commutative integer addition, so parallel and
/// sequential reductions produce identical results.
#[derive(Debug, Clone)]
pub struct ClassAccumulator {
    counts: Vec<u64>,
    instances: usize,
}

impl ClassAccumulator {
    pub fn new(l: usize) -> Self {
        ClassAccumulator {
            counts: vec![0; l],
            instances: 0,
        }
    }

    pub fn add_presence(&mut self, v: &InstanceSemanticVector) -> Result<()> {
        if v.len() != self.counts.len() {
            return Err(Error::DimensionMismatch {
                context: "presence vector".into(),
                expected: self.counts.len(),
                got: v.len(),
            });
        }
        for (count, &present) in self.counts.iter_mut().zip(v.values()) {
            *count += u64::from(present);
        }
        self.instances += 1;
        Ok(())
    }

    pub fn add_map(&mut self, map: &LabelMap) -> Result<()> {
        let v = presence_vector(map, self.counts.len())?;
        self.add_presence(&v)
    }

    pub fn merge(mut self, other: ClassAccumulator) -> Self {
        debug_assert_eq!(self.counts.len(), other.counts.len());
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self.instances += other.instances;
        self
    }

    /// Divide the integer counts by the instance count, once.
    pub fn finish(self, class_id: usize, class_name: &str) -> Result<ClassSemanticRepresentation> {
        if self.instances == 0 {
            return Err(Error::EmptyClass {
                class: class_name.to_owned(),
            });
        }
        let n = self.instances as f64;
        let values = self.counts.iter().map(|&c| c as f64 / n).collect();
        Ok(ClassSemanticRepresentation {
            class_id,
            class_name: class_name.to_owned(),
            instance_count: self.instances,
            values,
        })
    }
}

/// Mean presence vector of a nonempty list of instances.
pub fn class_representation(
    class_id: usize,
    class_name: &str,
    vectors: &[InstanceSemanticVector],
) -> Result<ClassSemanticRepresentation> {
    let first = vectors.first().ok_or_else(|| Error::EmptyClass {
        class: class_name.to_owned(),
    })?;
    let mut acc = ClassAccumulator::new(first.len());
    for v in vectors {
        acc.add_presence(v)?;
    }
    acc.finish(class_id, class_name)
}

/// Per-class semantic representations for a whole dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSemanticSummary {
    pub l: usize,
    pub representations: Vec<ClassSemanticRepresentation>,
}

impl DatasetSemanticSummary {
    /// Validates that class ids run 1..=C without gaps and all vectors share
    /// the declared length.
    pub fn new(l: usize, representations: Vec<ClassSemanticRepresentation>) -> Result<Self> {
        for (i, rep) in representations.iter().enumerate() {
            if rep.class_id != i + 1 {
                return Err(Error::InvalidConfig {
                    reason: format!(
                        "class ids must be contiguous from 1; slot {} holds id {}",
                        i + 1,
                        rep.class_id
                    ),
                });
            }
            if rep.values.len() != l {
                return Err(Error::DimensionMismatch {
                    context: format!("representation of class {:?}", rep.class_name),
                    expected: l,
                    got: rep.values.len(),
                });
            }
        }
        Ok(DatasetSemanticSummary { l, representations })
    }

    pub fn class_count(&self) -> usize {
        self.representations.len()
    }

    pub fn class_names(&self) -> Vec<String> {
        self.representations
            .iter()
            .map(|r| r.class_name.clone())
            .collect()
    }
}

/// Summarize in-memory label maps grouped by class, in class order.
pub fn summarize_maps(
    l: usize,
    classes: &[(String, Vec<LabelMap>)],
) -> Result<DatasetSemanticSummary> {
    let mut reps = Vec::with_capacity(classes.len());
    for (idx, (name, maps)) in classes.iter().enumerate() {
        if maps.is_empty() {
            return Err(Error::EmptyClass {
                class: name.clone(),
            });
        }
        let mut acc = ClassAccumulator::new(l);
        for map in maps {
            acc.add_map(map)?;
        }
        reps.push(acc.finish(idx + 1, name)?);
    }
    DatasetSemanticSummary::new(l, reps)
}

/// Summarize a dataset directory (manifest plus per-class PGM maps),
/// streaming one map at a time.
pub fn summarize_dataset(root: &Path) -> Result<DatasetSemanticSummary> {
    let manifest = Manifest::load(root)?;
    let mut reps = Vec::with_capacity(manifest.classes.len());
    for (idx, class) in manifest.classes.iter().enumerate() {
        let mut acc = ClassAccumulator::new(manifest.l);
        for path in manifest.map_paths(root, class) {
            let map = pgm::read_label_map(&path, manifest.l)?;
            acc.add_map(&map)?;
        }
        reps.push(acc.finish(idx + 1, &class.name)?);
    }
    DatasetSemanticSummary::new(manifest.l, reps)
}

/// Parallel variant of [`summarize_dataset`]. Presence extraction runs
/// concurrently per file; per-class reduction is a commutative integer
/// merge, so the result is identical to the sequential mode.
pub fn summarize_dataset_par(root: &Path) -> Result<DatasetSemanticSummary> {
    let manifest = Manifest::load(root)?;
    let mut reps = Vec::with_capacity(manifest.classes.len());
    for (idx, class) in manifest.classes.iter().enumerate() {
        let acc = manifest
            .map_paths(root, class)
            .into_par_iter()
            .map(|path| {
                let map = pgm::read_label_map(&path, manifest.l)?;
                let mut acc = ClassAccumulator::new(manifest.l);
                acc.add_map(&map)?;
                Ok(acc)
            })
            .reduce(
                || Ok(ClassAccumulator::new(manifest.l)),
                |a: Result<ClassAccumulator>, b| Ok(a?.merge(b?)),
            )?;
        reps.push(acc.finish(idx + 1, &class.name)?);
    }
    DatasetSemanticSummary::new(manifest.l, reps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(width: usize, height: usize, labels: &[u16]) -> LabelMap {
        LabelMap::new(width, height, labels.to_vec()).unwrap()
    }

    fn presence(bits: &[u8]) -> InstanceSemanticVector {
        InstanceSemanticVector::new(bits.iter().map(|&b| b != 0).collect()).unwrap()
    }

    #[test]
    fn presence_vector_marks_occurring_labels() {
        let m = map(2, 2, &[1, 1, 2, 1]);
        let v = presence_vector(&m, 3).unwrap();
        assert_eq!(v.values(), &[true, true, false]);
    }

    #[test]
    fn presence_vector_single_label_map() {
        let m = map(4, 4, &[5; 16]);
        let v = presence_vector(&m, 150).unwrap();
        assert_eq!(v.count_ones(), 1);
        assert!(v.values()[4]);
    }

    #[test]
    fn presence_vector_rejects_out_of_range_label() {
        let m = map(1, 1, &[7]);
        let err = presence_vector(&m, 6).unwrap_err();
        match err {
            Error::LabelOutOfRange { x, y, label, .. } => {
                assert_eq!((x, y, label), (0, 0, 7));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn presence_count_bounds() {
        // Between 1 and min(L, W*H) labels present.
        let m = map(3, 2, &[1, 2, 3, 4, 5, 6]);
        let v = presence_vector(&m, 10).unwrap();
        assert_eq!(v.count_ones(), 6);
        let m = map(3, 2, &[2; 6]);
        let v = presence_vector(&m, 10).unwrap();
        assert_eq!(v.count_ones(), 1);
    }

    #[test]
    fn class_representation_averages_elementwise() {
        let rep =
            class_representation(1, "lab", &[presence(&[1, 1, 0]), presence(&[1, 0, 0])]).unwrap();
        assert_eq!(rep.values, vec![1.0, 0.5, 0.0]);
        assert_eq!(rep.instance_count, 2);
    }

    #[test]
    fn class_representation_single_instance_is_identity() {
        let v = presence(&[0, 1, 1, 0]);
        let rep = class_representation(2, "hall", std::slice::from_ref(&v)).unwrap();
        assert_eq!(rep.values, vec![0.0, 1.0, 1.0, 0.0]);
        assert_eq!(rep.instance_count, 1);
    }

    #[test]
    fn class_representation_rejects_empty_class() {
        let err = class_representation(1, "void", &[]).unwrap_err();
        assert!(matches!(err, Error::EmptyClass { .. }));
    }

    #[test]
    fn class_representation_rejects_mixed_lengths() {
        let err =
            class_representation(1, "bad", &[presence(&[1, 0]), presence(&[1, 0, 0])]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn permuting_instances_leaves_representation_unchanged() {
        let a = presence(&[1, 0, 1, 0, 1]);
        let b = presence(&[0, 0, 1, 1, 0]);
        let c = presence(&[1, 1, 1, 0, 0]);
        let fwd = class_representation(1, "x", &[a.clone(), b.clone(), c.clone()]).unwrap();
        let rev = class_representation(1, "x", &[c, b, a]).unwrap();
        // Integer accumulation makes this exact, not approximate.
        assert_eq!(fwd.values, rev.values);
    }

    #[test]
    fn duplicating_instances_doubles_count_not_values() {
        let a = presence(&[1, 0, 1]);
        let b = presence(&[0, 1, 1]);
        let once = class_representation(1, "x", &[a.clone(), b.clone()]).unwrap();
        let twice = class_representation(1, "x", &[a.clone(), a, b.clone(), b]).unwrap();
        assert_eq!(once.values, twice.values);
        assert_eq!(twice.instance_count, 2 * once.instance_count);
    }

    #[test]
    fn summarize_maps_matches_manual_composition() {
        let classes = vec![
            (
                "kitchen".to_string(),
                vec![map(2, 2, &[1, 2, 2, 1]), map(2, 2, &[2, 2, 2, 2])],
            ),
            (
                "office".to_string(),
                vec![map(2, 2, &[3, 3, 3, 3]), map(2, 2, &[3, 1, 3, 1])],
            ),
        ];
        let summary = summarize_maps(3, &classes).unwrap();
        assert_eq!(summary.class_count(), 2);
        assert_eq!(summary.representations[0].values, vec![0.5, 1.0, 0.0]);
        assert_eq!(summary.representations[0].instance_count, 2);
        assert_eq!(summary.representations[1].values, vec![0.5, 0.0, 1.0]);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn presence_count_stays_within_bounds(
                width in 1usize..9,
                height in 1usize..9,
                l in 1usize..16,
                seed in any::<u64>(),
            ) {
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let labels: Vec<u16> =
                    (0..width * height).map(|_| rng.gen_range(1..=l as u16)).collect();
                let m = LabelMap::new(width, height, labels).unwrap();
                let v = presence_vector(&m, l).unwrap();
                prop_assert!(v.count_ones() >= 1);
                prop_assert!(v.count_ones() <= l.min(width * height));
            }

            #[test]
            fn representation_is_permutation_invariant(
                l in 1usize..10,
                n in 1usize..8,
                seed in any::<u64>(),
                rotate in 0usize..8,
            ) {
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let mut vectors: Vec<InstanceSemanticVector> = (0..n)
                    .map(|_| {
                        let mut bits: Vec<bool> = (0..l).map(|_| rng.gen_bool(0.4)).collect();
                        let hot = rng.gen_range(0..l);
                        bits[hot] = true;
                        InstanceSemanticVector::new(bits).unwrap()
                    })
                    .collect();
                let base = class_representation(1, "x", &vectors).unwrap();
                vectors.rotate_left(rotate % n);
                let rotated = class_representation(1, "x", &vectors).unwrap();
                prop_assert_eq!(base.values, rotated.values);
            }
        }
    }

    #[test]
    fn values_times_n_are_integers() {
        let reps = class_representation(
            1,
            "x",
            &[
                presence(&[1, 0, 1]),
                presence(&[1, 1, 0]),
                presence(&[0, 1, 0]),
            ],
        )
        .unwrap();
        for &v in &reps.values {
            let scaled = v * reps.instance_count as f64;
            assert!((scaled - scaled.round()).abs() < 1e-9);
        }
    }
}
