//! Partition quality measures.

use std::collections::HashMap;

use crate::error::{NagcError, Result};
use crate::kernels::{DenseMatrix, SparseSymGraph};

fn pairs(c: u64) -> f64 {
    (c * c.saturating_sub(1)) as f64 / 2.0
}

fn dense_ids(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = HashMap::new();
    let ids = labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect();
    (ids, map.len())
}

/// Hubert-Arabie adjusted Rand index.
///
/// Returns 0 when the maximum index equals its expectation (for instance
/// when either side puts everything in one cluster).
pub fn adjusted_rand_index(labels_a: &[usize], labels_b: &[usize]) -> Result<f64> {
    let n = labels_a.len();
    if n != labels_b.len() {
        return Err(NagcError::InvalidParameter(format!(
            "label vectors differ in length: {} vs {}",
            n,
            labels_b.len()
        )));
    }
    if n < 2 {
        return Err(NagcError::InvalidParameter("ARI needs at least two items".into()));
    }
    let (a, ka) = dense_ids(labels_a);
    let (b, kb) = dense_ids(labels_b);
    let mut table = vec![0u64; ka * kb];
    let mut rows = vec![0u64; ka];
    let mut cols = vec![0u64; kb];
    for (&i, &j) in a.iter().zip(&b) {
        table[i * kb + j] += 1;
        rows[i] += 1;
        cols[j] += 1;
    }
    let index: f64 = table.iter().map(|&c| pairs(c)).sum();
    let sum_a: f64 = rows.iter().map(|&c| pairs(c)).sum();
    let sum_b: f64 = cols.iter().map(|&c| pairs(c)).sum();
    let expected = sum_a * sum_b / pairs(n as u64);
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        return Ok(0.0);
    }
    Ok((index - expected) / (max - expected))
}

/// Newman modularity of `labels` on the binarized pattern of `graph`.
///
/// Every stored entry counts as one, so weights are ignored. An edgeless
/// graph scores 0.
pub fn modularity(graph: &SparseSymGraph, labels: &[usize]) -> Result<f64> {
    let n = graph.n();
    if labels.len() != n {
        return Err(NagcError::InvalidParameter(format!(
            "{} labels for {n} vertices",
            labels.len()
        )));
    }
    let two_m = graph.nnz() as f64;
    if two_m == 0.0 {
        return Ok(0.0);
    }
    let (ids, k) = dense_ids(labels);
    let mut internal = vec![0.0; k];
    let mut degree = vec![0.0; k];
    for i in 0..n {
        degree[ids[i]] += graph.degree(i) as f64;
        for (j, _) in graph.neighbors(i) {
            if ids[i] == ids[j] {
                internal[ids[i]] += 1.0;
            }
        }
    }
    Ok((0..k).map(|c| internal[c] / two_m - (degree[c] / two_m).powi(2)).sum())
}

fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
    }
}

/// Size-weighted mean over clusters of the mean binary entropy (bits) of
/// attribute presence, with attributes binarized at `> 0`.
pub fn average_entropy(x: &DenseMatrix, labels: &[usize]) -> Result<f64> {
    let (n, m) = x.dim();
    if labels.len() != n {
        return Err(NagcError::InvalidParameter(format!(
            "{} labels for {n} vertices",
            labels.len()
        )));
    }
    if n == 0 || m == 0 {
        return Ok(0.0);
    }
    let (ids, k) = dense_ids(labels);
    let mut sizes = vec![0usize; k];
    let mut present = vec![0usize; k * m];
    for (i, row) in x.rows().into_iter().enumerate() {
        let c = ids[i];
        sizes[c] += 1;
        for (j, &v) in row.iter().enumerate() {
            if v > 0.0 {
                present[c * m + j] += 1;
            }
        }
    }
    let mut total = 0.0;
    for c in 0..k {
        if sizes[c] == 0 {
            continue;
        }
        let size = sizes[c] as f64;
        let h: f64 = present[c * m..(c + 1) * m]
            .iter()
            .map(|&cnt| binary_entropy(cnt as f64 / size))
            .sum();
        total += (size / n as f64) * h / m as f64;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::Array2;
    use proptest::prelude::*;

    /// Pair-counting ARI straight from the definition: enumerate all pairs.
    fn ari_by_pairs(a: &[usize], b: &[usize]) -> f64 {
        let n = a.len();
        let (mut both, mut only_a, mut only_b, mut total) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            for j in (i + 1)..n {
                let sa = a[i] == a[j];
                let sb = b[i] == b[j];
                total += 1.0;
                if sa && sb {
                    both += 1.0;
                }
                if sa {
                    only_a += 1.0;
                }
                if sb {
                    only_b += 1.0;
                }
            }
        }
        let expected = only_a * only_b / total;
        let max = 0.5 * (only_a + only_b);
        (both - expected) / (max - expected)
    }

    #[test]
    fn ari_reference_cases() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1, 2], &[3, 3, 5, 5, 9]).unwrap(), 1.0);
        assert_eq!(adjusted_rand_index(&[0, 0, 0, 0], &[0, 1, 1, 1]).unwrap(), 0.0);
        assert_eq!(adjusted_rand_index(&[0, 1, 2, 1], &[4, 4, 4, 4]).unwrap(), 0.0);
        let a = [0, 0, 1, 1];
        let b = [0, 1, 1, 1];
        let oracle = ari_by_pairs(&a, &b);
        // 6 pairs: 2 together in a, 3 in b, 1 in both -> expected 1, max 2.5
        assert_eq!(oracle, 0.0);
        assert_relative_eq!(adjusted_rand_index(&a, &b).unwrap(), oracle, epsilon = 1e-15);
    }

    #[test]
    fn ari_rejects_bad_lengths() {
        assert!(adjusted_rand_index(&[0, 1], &[0]).is_err());
        assert!(adjusted_rand_index(&[0], &[0]).is_err());
    }

    #[test]
    fn modularity_two_triangles() {
        let g = SparseSymGraph::from_edges(
            6,
            [
                (0, 1, 1.0),
                (1, 2, 1.0),
                (0, 2, 1.0),
                (3, 4, 1.0),
                (4, 5, 1.0),
                (3, 5, 1.0),
            ],
        )
        .unwrap();
        assert_relative_eq!(modularity(&g, &[0, 0, 0, 1, 1, 1]).unwrap(), 0.5, max_relative = 1e-15);
        assert_relative_eq!(modularity(&g, &[0; 6]).unwrap(), 0.0, epsilon = 1e-15);
        // weights are ignored
        let heavy = g.scaled(7.0);
        assert_eq!(modularity(&heavy, &[0, 0, 0, 1, 1, 1]).unwrap(), 0.5);
        assert_eq!(modularity(&SparseSymGraph::empty(3), &[0, 1, 2]).unwrap(), 0.0);
        assert!(modularity(&g, &[0, 1]).is_err());
    }

    #[test]
    fn entropy_reference_cases() {
        let pure = Array2::from_shape_vec((4, 2), vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(average_entropy(&pure, &[0, 0, 1, 1]).unwrap(), 0.0);
        let half = Array2::from_shape_vec((4, 2), vec![1.0, 0.0, 0.0, 3.0, 2.0, 0.0, 0.0, 1.0]).unwrap();
        assert_relative_eq!(
            average_entropy(&half, &[0, 0, 1, 1]).unwrap(),
            1.0,
            max_relative = 1e-15
        );
    }

    fn labels(n: usize, k: usize) -> impl Strategy<Value = Vec<usize>> {
        prop::collection::vec(0..k, n)
    }

    proptest! {
        #[test]
        fn ari_symmetric_and_bounded((a, b) in (2usize..40).prop_flat_map(|n| (labels(n, 5), labels(n, 4)))) {
            let ab = adjusted_rand_index(&a, &b).unwrap();
            let ba = adjusted_rand_index(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!(ab <= 1.0 + 1e-12);
        }

        #[test]
        fn ari_relabel_invariant((a, b) in (2usize..40).prop_flat_map(|n| (labels(n, 5), labels(n, 4))), shift in 1usize..7) {
            let relabeled: Vec<usize> = a.iter().map(|l| (l * 3 + shift) % 17).collect();
            let x = adjusted_rand_index(&a, &b).unwrap();
            let y = adjusted_rand_index(&relabeled, &b).unwrap();
            prop_assert!((x - y).abs() < 1e-12);
        }

        #[test]
        fn ari_matches_pair_oracle((a, b) in (3usize..30).prop_flat_map(|n| (labels(n, 4), labels(n, 4)))) {
            let expected = ari_by_pairs(&a, &b);
            let got = adjusted_rand_index(&a, &b).unwrap();
            if expected.is_finite() {
                prop_assert!((got - expected).abs() < 1e-10);
            }
        }

        #[test]
        fn modularity_in_range(edges in prop::collection::vec((0usize..15, 0usize..15), 1..60), l in labels(15, 4)) {
            let pairs: Vec<_> = edges.into_iter().filter(|(i, j)| i != j).map(|(i, j)| (i, j, 1.0)).collect();
            let g = SparseSymGraph::from_edges(15, pairs).unwrap();
            let q = modularity(&g, &l).unwrap();
            prop_assert!((-0.5 - 1e-12..=1.0).contains(&q));
        }

        #[test]
        fn entropy_non_negative(bits in prop::collection::vec(0u8..2, 24), l in labels(8, 3)) {
            let x = Array2::from_shape_vec((8, 3), bits.iter().map(|&b| b as f64).collect()).unwrap();
            let h = average_entropy(&x, &l).unwrap();
            prop_assert!(h >= 0.0);
        }
    }
}
