use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::GenreLabel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    /// Every sample is placed independently.
    SegmentLevel,
    /// All samples sharing a group id (one recording) land on the same side.
    TrackLevel,
}

impl std::str::FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "segment" | "segment-level" => Ok(SplitMode::SegmentLevel),
            "track" | "track-level" => Ok(SplitMode::TrackLevel),
            _ => Err(Error::Config(format!("unknown split mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    /// Sorted ascending.
    pub train_indices: Vec<usize>,
    /// Sorted ascending.
    pub test_indices: Vec<usize>,
    pub mode: SplitMode,
    pub ratio: f64,
    pub seed: u64,
}

/// Per-class train counts: floors of `ratio * size`, plus one extra for the
/// classes with the largest remainders until the total reaches
/// `floor(ratio * N)`. Every count stays within one of its ideal value.
fn allocate(sizes: &[usize], ratio: f64) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    let target = (ratio * total as f64 + 1e-9).floor() as usize;
    let ideal: Vec<f64> = sizes.iter().map(|&n| ratio * n as f64).collect();
    let mut counts: Vec<usize> = ideal.iter().map(|x| (x + 1e-9).floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = ideal[a] - counts[a] as f64;
        let fb = ideal[b] - counts[b] as f64;
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &c in order.iter().take(target.saturating_sub(assigned)) {
        counts[c] += 1;
    }
    counts
}

/// Stratified train/test partition of `labels`.
///
/// In track-level mode `groups[i]` names the recording sample `i` came from;
/// stratification then works on recordings instead of samples.
pub fn stratified_split(
    labels: &[GenreLabel],
    groups: Option<&[usize]>,
    ratio: f64,
    mode: SplitMode,
    seed: u64,
) -> Result<SplitAssignment> {
    if labels.is_empty() {
        return Err(Error::Argument("cannot split an empty label list".into()));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Argument(format!("split ratio {ratio} is outside (0, 1)")));
    }

    // Units are samples (segment mode) or recordings (track mode); each has
    // a class and a member list.
    let mut units: BTreeMap<GenreLabel, Vec<Vec<usize>>> = BTreeMap::new();
    match mode {
        SplitMode::SegmentLevel => {
            for (i, &l) in labels.iter().enumerate() {
                units.entry(l).or_default().push(vec![i]);
            }
        }
        SplitMode::TrackLevel => {
            let groups = groups.ok_or_else(|| Error::Argument("track-level split needs group ids".into()))?;
            if groups.len() != labels.len() {
                return Err(Error::Argument(format!(
                    "{} group ids for {} labels",
                    groups.len(),
                    labels.len()
                )));
            }
            let mut by_group: BTreeMap<usize, (GenreLabel, Vec<usize>)> = BTreeMap::new();
            for (i, (&g, &l)) in groups.iter().zip(labels).enumerate() {
                let entry = by_group.entry(g).or_insert((l, Vec::new()));
                if entry.0 != l {
                    return Err(Error::Argument(format!("group {g} mixes {} and {l}", entry.0)));
                }
                entry.1.push(i);
            }
            for (_, (l, members)) in by_group {
                units.entry(l).or_default().push(members);
            }
        }
    }
    if let Some((l, u)) = units.iter().find(|(_, u)| u.len() < 2) {
        let what = if mode == SplitMode::TrackLevel { "recording" } else { "sample" };
        return Err(Error::Stratification(format!("class {l} has only {} {what}", u.len())));
    }

    let sizes: Vec<usize> = units.values().map(Vec::len).collect();
    let train_counts = allocate(&sizes, ratio);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class_units, n_train) in units.values_mut().zip(train_counts) {
        class_units.shuffle(&mut rng);
        for (k, members) in class_units.iter().enumerate() {
            let side = if k < n_train { &mut train } else { &mut test };
            side.extend_from_slice(members);
        }
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitAssignment { train_indices: train, test_indices: test, mode, ratio, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels_with_counts(counts: &[usize]) -> Vec<GenreLabel> {
        counts
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat_n(GenreLabel::from_id(c).unwrap(), n))
            .collect()
    }

    #[test]
    fn reported_split_sizes() {
        // 7258 segments in roughly the per-class proportions of the real corpus
        let labels = labels_with_counts(&[1452, 1451, 1452, 1451, 1452]);
        assert_eq!(labels.len(), 7258);
        let s = stratified_split(&labels, None, 0.8, SplitMode::SegmentLevel, 7).unwrap();
        assert_eq!((s.train_indices.len(), s.test_indices.len()), (5806, 1452));
    }

    #[test]
    fn ten_samples_one_class() {
        let labels = vec![GenreLabel::Adeni; 10];
        let s = stratified_split(&labels, None, 0.8, SplitMode::SegmentLevel, 1).unwrap();
        assert_eq!((s.train_indices.len(), s.test_indices.len()), (8, 2));
    }

    #[test]
    fn track_mode_keeps_recordings_together() {
        let mut labels = Vec::new();
        let mut groups = Vec::new();
        for track in 0..20 {
            for _ in 0..5 {
                labels.push(GenreLabel::from_id(track % 5).unwrap());
                groups.push(track);
            }
        }
        let s = stratified_split(&labels, Some(&groups), 0.8, SplitMode::TrackLevel, 3).unwrap();
        // brute-force scan: no track on both sides
        for track in 0..20 {
            let in_train = s.train_indices.iter().filter(|&&i| groups[i] == track).count();
            let in_test = s.test_indices.iter().filter(|&&i| groups[i] == track).count();
            assert!(in_train == 5 && in_test == 0 || in_train == 0 && in_test == 5);
        }
        assert_eq!(s.train_indices.len(), 80);
    }

    #[test]
    fn errors() {
        assert!(matches!(stratified_split(&[], None, 0.8, SplitMode::SegmentLevel, 0), Err(Error::Argument(_))));
        let labels = vec![GenreLabel::Adeni, GenreLabel::Adeni, GenreLabel::Lahji];
        assert!(matches!(
            stratified_split(&labels, None, 0.8, SplitMode::SegmentLevel, 0),
            Err(Error::Stratification(_))
        ));
        assert!(matches!(stratified_split(&labels, None, 1.0, SplitMode::SegmentLevel, 0), Err(Error::Argument(_))));
        assert!(matches!(stratified_split(&labels, None, 0.5, SplitMode::TrackLevel, 0), Err(Error::Argument(_))));
        let mixed = [0, 1, 1];
        assert!(matches!(
            stratified_split(&labels, Some(&mixed), 0.5, SplitMode::TrackLevel, 0),
            Err(Error::Argument(_))
        ));
    }

    proptest! {
        #[test]
        fn partition_stratified_and_deterministic(
            counts in proptest::collection::vec(2usize..40, 1..6),
            ratio in 0.05f64..0.95,
            seed in any::<u64>(),
        ) {
            let labels = labels_with_counts(&counts);
            let a = stratified_split(&labels, None, ratio, SplitMode::SegmentLevel, seed).unwrap();
            let b = stratified_split(&labels, None, ratio, SplitMode::SegmentLevel, seed).unwrap();
            prop_assert_eq!(&a, &b);
            let mut all: Vec<usize> = a.train_indices.iter().chain(&a.test_indices).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
            for (c, &n) in counts.iter().enumerate() {
                let g = GenreLabel::from_id(c).unwrap();
                let train_c = a.train_indices.iter().filter(|&&i| labels[i] == g).count();
                prop_assert!((train_c as f64 - ratio * n as f64).abs() < 1.0);
            }
        }
    }
}
