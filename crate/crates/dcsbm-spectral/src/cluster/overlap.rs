use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;

use crate::{Error, Result};

fn confusion(truth: &[usize], pred: &[usize], k: usize) -> Result<Vec<Vec<i64>>> {
    if truth.len() != pred.len() {
        return Err(Error::KMismatch(format!(
            "{} true labels, {} predicted",
            truth.len(),
            pred.len()
        )));
    }
    let mut m = vec![vec![0i64; k]; k];
    for (&t, &p) in truth.iter().zip(pred) {
        if t >= k || p >= k {
            return Err(Error::KMismatch(format!(
                "label {} outside 0..{k}",
                t.max(p)
            )));
        }
        m[p][t] += 1;
    }
    Ok(m)
}

/// Predicted-to-true label map maximizing agreement.
pub fn best_matching(truth: &[usize], pred: &[usize], k: usize) -> Result<Vec<usize>> {
    let m = confusion(truth, pred, k)?;
    let (_, assignment) = kuhn_munkres(&Matrix::from_rows(m).expect("square matrix"));
    Ok(assignment)
}

/// Largest fraction of nodes labeled correctly over label permutations.
pub fn matching_fraction(truth: &[usize], pred: &[usize], k: usize) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let m = confusion(truth, pred, k)?;
    let (total, _) = kuhn_munkres(&Matrix::from_rows(m).expect("square matrix"));
    Ok(total as f64 / truth.len() as f64)
}

/// Chance-corrected agreement `(f - 1/K) / (1 - 1/K)` with `f` the best matching fraction.
pub fn overlap(truth: &[usize], pred: &[usize], k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::KMismatch(format!("overlap needs K >= 2, got {k}")));
    }
    let f = matching_fraction(truth, pred, k)?;
    let chance = 1.0 / k as f64;
    Ok((f - chance) / (1.0 - chance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_labels() {
        let t = [0, 1, 2, 0, 1, 2];
        assert_eq!(overlap(&t, &t, 3).unwrap(), 1.0);
    }

    #[test]
    fn constant_prediction_on_balanced_classes() {
        let t = [0, 0, 1, 1, 2, 2];
        assert!(overlap(&t, &[1; 6], 3).unwrap().abs() < 1e-15);
    }

    #[test]
    fn matching_maps_permuted_labels() {
        let t = [0, 0, 1, 1, 2];
        let p = [2, 2, 0, 0, 1];
        assert_eq!(best_matching(&t, &p, 3).unwrap(), vec![1, 2, 0]);
    }

    #[test]
    fn out_of_range_label() {
        assert!(matches!(
            overlap(&[0, 1], &[0, 3], 2),
            Err(Error::KMismatch(_))
        ));
        assert!(matches!(
            overlap(&[0, 1], &[0], 2),
            Err(Error::KMismatch(_))
        ));
    }

    proptest! {
        #[test]
        fn invariant_under_relabeling(
            truth in proptest::collection::vec(0usize..3, 1..60),
            pred_seed in proptest::collection::vec(0usize..3, 60),
            perm in Just(vec![0usize, 1, 2]).prop_shuffle(),
        ) {
            let pred: Vec<usize> = pred_seed[..truth.len()].to_vec();
            let relabeled: Vec<usize> = pred.iter().map(|&l| perm[l]).collect();
            let a = overlap(&truth, &pred, 3).unwrap();
            let b = overlap(&truth, &relabeled, 3).unwrap();
            prop_assert!((a - b).abs() < 1e-15);
            prop_assert!((-0.5 - 1e-12..=1.0 + 1e-12).contains(&a));
        }
    }
}
