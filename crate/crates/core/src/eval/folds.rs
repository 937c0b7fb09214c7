use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldStrategy {
    /// Shuffle, then deal each class round-robin.
    #[default]
    Stratified,
    Shuffled,
    /// Keep every group (patient) inside one fold.
    Grouped,
}

/// Assignment of every instance to exactly one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub strategy: FoldStrategy,
    pub assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.assignment[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.assignment[i] != fold).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &f in &self.assignment {
            s[f] += 1;
        }
        s
    }
}

fn deal(order: &[usize], start: usize, k: usize, assignment: &mut [usize]) -> usize {
    for (j, &i) in order.iter().enumerate() {
        assignment[i] = (start + j) % k;
    }
    (start + order.len()) % k
}

/// Seeded fold plan. Stratification is on `labels`; `groups` is required for
/// [`FoldStrategy::Grouped`] and ignored otherwise. When a class has fewer
/// than `k` members, stratification falls back to a plain shuffle.
pub fn make_folds(
    labels: &[bool],
    groups: Option<&[String]>,
    k: usize,
    seed: u64,
    strategy: FoldStrategy,
) -> Result<FoldPlan> {
    let n = labels.len();
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    if n < k {
        return Err(Error::Data(format!("{n} instances cannot fill {k} folds")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; n];
    let mut strategy = strategy;

    if strategy == FoldStrategy::Stratified {
        let positives = labels.iter().filter(|&&y| y).count();
        if positives.min(n - positives) < k {
            log::warn!(
                "a class has fewer than {k} members ({positives} positive of {n}); using unstratified folds"
            );
            strategy = FoldStrategy::Shuffled;
        }
    }

    match strategy {
        FoldStrategy::Stratified => {
            let mut pos: Vec<usize> = (0..n).filter(|&i| labels[i]).collect();
            let mut neg: Vec<usize> = (0..n).filter(|&i| !labels[i]).collect();
            pos.shuffle(&mut rng);
            neg.shuffle(&mut rng);
            let next = deal(&pos, 0, k, &mut assignment);
            deal(&neg, next, k, &mut assignment);
        }
        FoldStrategy::Shuffled => {
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(&mut rng);
            deal(&all, 0, k, &mut assignment);
        }
        FoldStrategy::Grouped => {
            let groups = groups
                .ok_or_else(|| Error::Config("grouped folds need group ids".into()))?;
            assert_eq!(groups.len(), n, "groups and labels differ in length");
            let mut members: std::collections::BTreeMap<&str, Vec<usize>> = Default::default();
            for (i, g) in groups.iter().enumerate() {
                members.entry(g.as_str()).or_default().push(i);
            }
            if members.len() < k {
                return Err(Error::Data(format!(
                    "{} groups cannot fill {k} folds",
                    members.len()
                )));
            }
            let mut list: Vec<Vec<usize>> = members.into_values().collect();
            list.shuffle(&mut rng);
            let mut sizes = vec![0usize; k];
            for group in list {
                let fold = (0..k).min_by_key(|&f| (sizes[f], f)).unwrap();
                sizes[fold] += group.len();
                for i in group {
                    assignment[i] = fold;
                }
            }
        }
    }
    Ok(FoldPlan {
        k,
        seed,
        strategy,
        assignment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spread(v: &[usize]) -> usize {
        v.iter().max().unwrap() - v.iter().min().unwrap()
    }

    #[test]
    fn exact_stratification() {
        let labels: Vec<bool> = (0..10).map(|i| i % 2 == 0).collect();
        let plan = make_folds(&labels, None, 5, 3, FoldStrategy::Stratified).unwrap();
        for f in 0..5 {
            let pos = plan.test_indices(f).iter().filter(|&&i| labels[i]).count();
            assert_eq!(pos, 1);
        }
    }

    #[test]
    fn full_size_folds() {
        let labels: Vec<bool> = (0..9770).map(|i| i < 1477).collect();
        let plan = make_folds(&labels, None, 10, 1, FoldStrategy::Stratified).unwrap();
        assert_eq!(plan.sizes(), vec![977; 10]);
    }

    #[test]
    fn deterministic() {
        let labels: Vec<bool> = (0..100).map(|i| i % 7 == 0).collect();
        let a = make_folds(&labels, None, 10, 9, FoldStrategy::Stratified).unwrap();
        let b = make_folds(&labels, None, 10, 9, FoldStrategy::Stratified).unwrap();
        assert_eq!(a, b);
        let c = make_folds(&labels, None, 10, 10, FoldStrategy::Stratified).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn small_class_falls_back() {
        let labels: Vec<bool> = (0..50).map(|i| i < 3).collect();
        let plan = make_folds(&labels, None, 10, 0, FoldStrategy::Stratified).unwrap();
        assert_eq!(plan.strategy, FoldStrategy::Shuffled);
        assert_eq!(spread(&plan.sizes()), 0);
    }

    #[test]
    fn grouped_keeps_patients_together() {
        let groups: Vec<String> = (0..60).map(|i| format!("p{}", i / 3)).collect();
        let labels = vec![false; 60];
        let plan = make_folds(&labels, Some(&groups), 5, 4, FoldStrategy::Grouped).unwrap();
        for i in 0..60 {
            assert_eq!(plan.assignment[i], plan.assignment[(i / 3) * 3]);
        }
        assert_eq!(plan.sizes(), vec![12; 5]);
    }

    #[test]
    fn rejects_bad_k() {
        assert!(make_folds(&[true, false], None, 1, 0, FoldStrategy::Shuffled).is_err());
        assert!(make_folds(&[true, false], None, 3, 0, FoldStrategy::Shuffled).is_err());
    }

    proptest! {
        #[test]
        fn partitions_and_balances(
            labels in proptest::collection::vec(any::<bool>(), 20..300),
            k in 2usize..11,
            seed in any::<u64>(),
        ) {
            let plan = make_folds(&labels, None, k, seed, FoldStrategy::Stratified).unwrap();
            prop_assert_eq!(plan.assignment.len(), labels.len());
            prop_assert!(plan.assignment.iter().all(|&f| f < k));
            prop_assert!(spread(&plan.sizes()) <= 1);
            let union: usize = (0..k).map(|f| plan.test_indices(f).len()).sum();
            prop_assert_eq!(union, labels.len());
            if plan.strategy == FoldStrategy::Stratified {
                let pos: Vec<usize> = (0..k)
                    .map(|f| plan.test_indices(f).iter().filter(|&&i| labels[i]).count())
                    .collect();
                prop_assert!(spread(&pos) <= 1);
            }
        }
    }
}
