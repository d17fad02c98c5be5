#![allow(dead_code)]

use nagc::{DenseMatrix, FactorModel, SparseSymGraph};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi graph with unit weights and no self-loops.
pub fn random_graph(n: usize, p: f64, rng: &mut impl Rng) -> SparseSymGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < p {
                edges.push((i, j, 1.0));
            }
        }
    }
    SparseSymGraph::from_edges(n, edges).unwrap()
}

pub fn uniform(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> DenseMatrix {
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(lo..=hi))
}

pub fn random_model(n: usize, m: usize, k1: usize, k2: usize, rng: &mut impl Rng) -> FactorModel {
    FactorModel {
        u: uniform(n, k1, 0.1, 1.0, rng),
        v: uniform(m, k2, 0.1, 1.0, rng),
        h: uniform(k1, k2, 0.1, 1.0, rng),
    }
}

pub fn max_rel_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-300))
        .fold(0.0, f64::max)
}
