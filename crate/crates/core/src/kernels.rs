//! Dense and sparse matrix primitives used by the update rules.
//!
//! The adjacency matrix is stored as a symmetric CSR structure whose
//! non-zero pattern doubles as the observed-edge mask `W`. The unobserved
//! mask `W' = 1 - W` is never materialized: products against it go through
//! `U (UᵀU) - (UUᵀ ⊙ W) U`.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView1, Zip};

use crate::error::{NagcError, Result};
use crate::exec::{for_each_row, Exec};

pub type DenseMatrix = Array2<f64>;

/// Sigmoid arguments are clamped to this magnitude before exponentiation.
const SIGMOID_CLAMP: f64 = 500.0;

/// Symmetric sparse adjacency matrix in CSR layout.
///
/// Both orientations of every undirected edge are stored, so row `i` lists
/// all neighbours of `i`. Stored weights are strictly positive and finite.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSymGraph {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    weights: Vec<f64>,
}

impl SparseSymGraph {
    /// An `n`-vertex graph with no edges.
    pub fn empty(n: usize) -> Self {
        SparseSymGraph {
            n,
            row_ptr: vec![0; n + 1],
            col_idx: Vec::new(),
            weights: Vec::new(),
        }
    }

    /// Build from undirected `(i, j, weight)` triples.
    ///
    /// Each pair is mirrored. When the same unordered pair appears more than
    /// once (in either orientation) the first weight wins. Self-loops are
    /// kept; loaders strip them before calling this.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut pairs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, w) in edges {
            if i >= n || j >= n {
                return Err(NagcError::InvalidParameter(format!(
                    "edge ({i}, {j}) out of range for {n} vertices"
                )));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(NagcError::InvalidParameter(format!(
                    "edge ({i}, {j}) has non-positive or non-finite weight {w}"
                )));
            }
            let key = (i.min(j), i.max(j));
            pairs.entry(key).or_insert(w);
        }

        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (&(i, j), &w) in &pairs {
            rows[i].push((j, w));
            if i != j {
                rows[j].push((i, w));
            }
        }

        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut weights = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_unstable_by_key(|&(j, _)| j);
            for (j, w) in row {
                col_idx.push(j);
                weights.push(w);
            }
            row_ptr.push(col_idx.len());
        }

        Ok(SparseSymGraph {
            n,
            row_ptr,
            col_idx,
            weights,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored (directed) entries, i.e. the number of ones in `W`.
    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Number of undirected edges, self-loops counted once.
    pub fn edge_count(&self) -> usize {
        self.undirected_edges().count()
    }

    pub fn has_self_loops(&self) -> bool {
        (0..self.n).any(|i| self.neighbors(i).any(|(j, _)| j == i))
    }

    /// Neighbours of `i` with their weights, sorted by column.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    /// Every stored entry `(i, j, s_ij)`, both orientations.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.neighbors(i).map(move |(j, w)| (i, j, w)))
    }

    /// Undirected edges as `(i, j, w)` with `i <= j`.
    pub fn undirected_edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries().filter(|&(i, j, _)| i <= j)
    }

    /// Sum of all matrix entries (each undirected edge counted twice).
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Same pattern with every weight multiplied by `factor` (> 0).
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.weights.iter_mut().for_each(|w| *w *= factor);
        out
    }

    /// Same pattern with every weight set to 1.
    pub fn binarized(&self) -> Self {
        let mut out = self.clone();
        out.weights.iter_mut().for_each(|w| *w = 1.0);
        out
    }

    /// Materialize as a dense `n × n` matrix. Only meant for small graphs
    /// and test oracles.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut dense = Array2::zeros((self.n, self.n));
        for (i, j, w) in self.entries() {
            dense[[i, j]] = w;
        }
        dense
    }
}

fn check_rows(op: &'static str, s: &SparseSymGraph, u: &DenseMatrix) -> Result<()> {
    if u.nrows() != s.n() {
        return Err(NagcError::dims(
            op,
            format!("{} rows", s.n()),
            format!("{} rows", u.nrows()),
        ));
    }
    Ok(())
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    let x = x.clamp(-SIGMOID_CLAMP, SIGMOID_CLAMP);
    1.0 / (1.0 + (-x).exp())
}

/// Element-wise logistic sigmoid.
pub fn sigmoid_map(m: &DenseMatrix) -> DenseMatrix {
    m.mapv(sigmoid)
}

/// Element-wise sigmoid derivative `f(x) (1 - f(x))`.
pub fn sigmoid_deriv_map(m: &DenseMatrix) -> DenseMatrix {
    m.mapv(|x| {
        let s = sigmoid(x);
        s * (1.0 - s)
    })
}

#[inline]
fn dot(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// `S U` by edge iteration.
pub fn sparse_dense_mul(s: &SparseSymGraph, u: &DenseMatrix) -> Result<DenseMatrix> {
    sparse_dense_mul_with(s, u, Exec::default())
}

pub fn sparse_dense_mul_with(s: &SparseSymGraph, u: &DenseMatrix, exec: Exec) -> Result<DenseMatrix> {
    check_rows("sparse_dense_mul", s, u)?;
    let mut out = Array2::zeros(u.raw_dim());
    for_each_row(&mut out, exec, |i, mut row| {
        for (j, w) in s.neighbors(i) {
            row.scaled_add(w, &u.row(j));
        }
    });
    Ok(out)
}

/// `(UUᵀ ⊙ W) U` where `W` is the non-zero pattern of `s`.
///
/// Row `i` accumulates `(uᵢ·uⱼ) uⱼ` over the neighbours `j` of `i`, so the
/// cost is `O(nnz · k)` and `UUᵀ` is never formed.
pub fn masked_gram_times(u: &DenseMatrix, s: &SparseSymGraph) -> Result<DenseMatrix> {
    masked_gram_times_with(u, s, Exec::default())
}

pub fn masked_gram_times_with(u: &DenseMatrix, s: &SparseSymGraph, exec: Exec) -> Result<DenseMatrix> {
    check_rows("masked_gram_times", s, u)?;
    let mut out = Array2::zeros(u.raw_dim());
    for_each_row(&mut out, exec, |i, mut row| {
        let ui = u.row(i);
        for (j, _) in s.neighbors(i) {
            let uj = u.row(j);
            row.scaled_add(dot(ui, uj), &uj);
        }
    });
    Ok(out)
}

/// `U (UᵀU)`, the unmasked Gram product.
pub fn gram_times(u: &DenseMatrix) -> DenseMatrix {
    u.dot(&u.t().dot(u))
}

/// `(UUᵀ ⊙ W') U` with `W' = 1 - W`, computed as `U(UᵀU) - (UUᵀ ⊙ W)U`.
///
/// The diagonal of `W'` is 1 wherever `s` has no self-loop. Round-off
/// below zero is clipped, since every exact entry is non-negative for
/// non-negative `U`.
pub fn complement_gram_times(u: &DenseMatrix, s: &SparseSymGraph) -> Result<DenseMatrix> {
    complement_gram_times_with(u, s, Exec::default())
}

pub fn complement_gram_times_with(u: &DenseMatrix, s: &SparseSymGraph, exec: Exec) -> Result<DenseMatrix> {
    let masked = masked_gram_times_with(u, s, exec)?;
    Ok(complement_from_masked(u, masked))
}

pub(crate) fn complement_from_masked(u: &DenseMatrix, masked: DenseMatrix) -> DenseMatrix {
    let mut full = gram_times(u);
    Zip::from(&mut full)
        .and(&masked)
        .for_each(|f, &m| *f = (*f - m).max(0.0));
    full
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_graph(n: usize, p: f64, rng: &mut impl Rng) -> SparseSymGraph {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen::<f64>() < p {
                    edges.push((i, j, rng.gen_range(0.5..2.0)));
                }
            }
        }
        SparseSymGraph::from_edges(n, edges).unwrap()
    }

    fn random_factor(n: usize, k: usize, rng: &mut impl Rng) -> DenseMatrix {
        Array2::from_shape_fn((n, k), |_| rng.gen::<f64>())
    }

    fn dense_masked(u: &DenseMatrix, mask: &DenseMatrix) -> DenseMatrix {
        let n = u.nrows();
        let uut = u.dot(&u.t());
        let mut had = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                had[[i, j]] = uut[[i, j]] * mask[[i, j]];
            }
        }
        had.dot(u)
    }

    fn mask_of(s: &SparseSymGraph) -> DenseMatrix {
        s.to_dense().mapv(|v| if v != 0.0 { 1.0 } else { 0.0 })
    }

    #[test]
    fn from_edges_symmetrizes_and_dedups() {
        let g = SparseSymGraph::from_edges(3, [(0, 1, 2.0), (1, 0, 5.0), (1, 2, 1.0)]).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.nnz(), 4);
        let d = g.to_dense();
        assert_eq!(d[[0, 1]], 2.0);
        assert_eq!(d[[1, 0]], 2.0);
        assert_eq!(g.total_weight(), 6.0);
        assert!(!g.has_self_loops());
    }

    #[test]
    fn from_edges_rejects_bad_input() {
        assert!(SparseSymGraph::from_edges(2, [(0, 2, 1.0)]).is_err());
        assert!(SparseSymGraph::from_edges(2, [(0, 1, 0.0)]).is_err());
        assert!(SparseSymGraph::from_edges(2, [(0, 1, f64::NAN)]).is_err());
    }

    #[test]
    fn sigmoid_values() {
        let z = sigmoid_map(&Array2::zeros((2, 2)));
        assert!(z.iter().all(|&v| v == 0.5));
        for x in [0.3, 1.7, 12.0] {
            assert_relative_eq!(sigmoid(x) + sigmoid(-x), 1.0, epsilon = 1e-15);
        }
        // 40-digit reference values
        assert_relative_eq!(sigmoid(1.0), 0.731_058_578_630_004_9, max_relative = 1e-15);
        let d = sigmoid_deriv_map(&Array2::from_elem((1, 1), 1.0));
        assert_relative_eq!(d[[0, 0]], 0.196_611_933_241_481_85, max_relative = 1e-14);
    }

    proptest::proptest! {
        #[test]
        fn sigmoid_range(x in -1e4f64..1e4) {
            let s = sigmoid(x);
            proptest::prop_assert!((0.0..=1.0).contains(&s));
            if x.abs() < 30.0 {
                proptest::prop_assert!(s > 0.0 && s < 1.0);
            }
        }
    }

    #[test]
    fn sigmoid_derivative_bounds() {
        let m = Array2::from_shape_vec((1, 3), vec![0.0, 20.0, -20.0]).unwrap();
        let d = sigmoid_deriv_map(&m);
        assert_eq!(d[[0, 0]], 0.25);
        assert!(d[[0, 1]] < 1e-8 && d[[0, 2]] < 1e-8);
        // clamped, no overflow
        let big = Array2::from_shape_vec((1, 2), vec![1e6, -1e6]).unwrap();
        assert!(sigmoid_map(&big).iter().all(|v| v.is_finite()));
    }

    #[test]
    fn sparse_mul_cases() {
        let u = Array2::from_shape_vec((3, 2), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let empty = SparseSymGraph::empty(3);
        assert!(sparse_dense_mul(&empty, &u).unwrap().iter().all(|&v| v == 0.0));

        let g = SparseSymGraph::from_edges(3, [(0, 1, 0.5)]).unwrap();
        let su = sparse_dense_mul(&g, &u).unwrap();
        assert_eq!(su.row(0).to_vec(), vec![1.5, 2.0]);
        assert_eq!(su.row(1).to_vec(), vec![0.5, 1.0]);
        assert_eq!(su.row(2).to_vec(), vec![0.0, 0.0]);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = random_graph(6, 0.5, &mut rng);
        let u = random_factor(6, 3, &mut rng);
        let expect = g.to_dense().dot(&u);
        let got = sparse_dense_mul(&g, &u).unwrap();
        for (a, b) in got.iter().zip(expect.iter()) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
        assert!(sparse_dense_mul(&g, &Array2::zeros((5, 3))).is_err());
    }

    #[test]
    fn masked_gram_orthogonal_rows_vanish() {
        // rows 0,1 orthogonal and connected; row 2 isolated
        let u = Array2::from_shape_vec((3, 2), vec![1.0, 0.0, 0.0, 2.0, 1.0, 1.0]).unwrap();
        let g = SparseSymGraph::from_edges(3, [(0, 1, 1.0)]).unwrap();
        assert!(masked_gram_times(&u, &g).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn masked_gram_all_off_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 5;
        let u = random_factor(n, 2, &mut rng);
        let edges = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j, 1.0)));
        let g = SparseSymGraph::from_edges(n, edges).unwrap();
        let got = masked_gram_times(&u, &g).unwrap();
        let mut expect = gram_times(&u);
        for i in 0..n {
            let sq = u.row(i).dot(&u.row(i));
            for c in 0..2 {
                expect[[i, c]] -= sq * u[[i, c]];
            }
        }
        for (a, b) in got.iter().zip(expect.iter()) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn complement_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_factor(4, 2, &mut rng);
        let empty = SparseSymGraph::empty(4);
        let got = complement_gram_times(&u, &empty).unwrap();
        assert_eq!(got, gram_times(&u));

        let all = (0..4).flat_map(|i| (i..4).map(move |j| (i, j, 1.0)));
        let complete = SparseSymGraph::from_edges(4, all).unwrap();
        let got = complement_gram_times(&u, &complete).unwrap();
        let scale = gram_times(&u).iter().fold(0.0f64, |a, &b| a.max(b));
        assert!(got.iter().all(|&v| v.abs() <= 1e-14 * scale));
    }

    #[test]
    fn kernels_match_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let g = random_graph(5, 0.5, &mut rng);
        let u = random_factor(5, 2, &mut rng);
        let mask = mask_of(&g);
        let ones = Array2::<f64>::ones((5, 5));
        let masked = masked_gram_times(&u, &g).unwrap();
        let comp = complement_gram_times(&u, &g).unwrap();
        let masked_ref = dense_masked(&u, &mask);
        let comp_ref = dense_masked(&u, &(&ones - &mask));
        for (a, b) in masked.iter().zip(masked_ref.iter()) {
            assert_relative_eq!(a, b, max_relative = 1e-10);
        }
        for (a, b) in comp.iter().zip(comp_ref.iter()) {
            assert_relative_eq!(a, b, max_relative = 1e-10);
        }
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let g = random_graph(60, 0.2, &mut rng);
        let u = random_factor(60, 4, &mut rng);
        assert_eq!(
            masked_gram_times_with(&u, &g, Exec::Sequential).unwrap(),
            masked_gram_times_with(&u, &g, Exec::Parallel).unwrap()
        );
        assert_eq!(
            sparse_dense_mul_with(&g, &u, Exec::Sequential).unwrap(),
            sparse_dense_mul_with(&g, &u, Exec::Parallel).unwrap()
        );
    }
}
