//! Single-view reference methods: SNMF on the topology, NMF and k-means on
//! the attributes.

use ndarray::{Array1, Array2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NagcError, Result};
use crate::exec::{map_indices, Exec};
use crate::kernels::{gram_times, sparse_dense_mul, DenseMatrix, SparseSymGraph};

/// Denominator guard shared by the baseline multiplicative updates.
pub const BASELINE_EPSILON: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct SnmfResult {
    pub u: DenseMatrix,
    /// `‖S - UUᵀ‖²_F` after each iteration.
    pub trace: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct NmfResult {
    pub u: DenseMatrix,
    pub v: DenseMatrix,
    /// `‖X - UVᵀ‖²_F` after each full round.
    pub trace: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centroids: DenseMatrix,
    /// Within-cluster sum of squares of the final assignment.
    pub inertia: f64,
    /// Inertia after each assignment step of the winning restart.
    pub inertia_trace: Vec<f64>,
}

fn uniform_factor(shape: (usize, usize), rng: &mut impl Rng) -> DenseMatrix {
    Array2::from_shape_simple_fn(shape, || 1.0 - rng.gen::<f64>())
}

fn ratio_update(base: &mut DenseMatrix, num: &DenseMatrix, den: &DenseMatrix, eps: f64) {
    Zip::from(base).and(num).and(den).for_each(|b, &n, &d| {
        *b = if n == 0.0 { 0.0 } else { *b * n / (d + eps) };
    });
}

fn check_finite(m: &DenseMatrix, factor: &'static str, iteration: usize) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(NagcError::NumericFailure { iteration, factor })
    }
}

/// `‖S - UUᵀ‖²_F` without forming `UUᵀ`.
pub fn snmf_loss(s: &SparseSymGraph, u: &DenseMatrix) -> f64 {
    let mut on_edges = 0.0;
    let mut edge_sq = 0.0;
    for (i, j, w) in s.entries() {
        let z = u.row(i).dot(&u.row(j));
        on_edges += (w - z) * (w - z);
        edge_sq += z * z;
    }
    let gram = u.t().dot(u);
    let all_sq: f64 = gram.iter().map(|g| g * g).sum();
    on_edges + (all_sq - edge_sq).max(0.0)
}

/// SNMF from a uniform `(0, 1]` start seeded by `seed`.
pub fn snmf_fit(s: &SparseSymGraph, k1: usize, iters: usize, seed: u64) -> Result<SnmfResult> {
    if k1 == 0 || k1 > s.n() {
        return Err(NagcError::InvalidParameter(format!("k1 = {k1} needs 1..={}", s.n())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u0 = uniform_factor((s.n(), k1), &mut rng);
    snmf_fit_from(s, u0, iters, BASELINE_EPSILON, |_, _| {})
}

/// `U ← U ⊙ (SU) ⊘ (U(UᵀU) + ε)` for `iters` rounds, starting from `u`.
pub fn snmf_fit_from<F>(
    s: &SparseSymGraph,
    mut u: DenseMatrix,
    iters: usize,
    epsilon: f64,
    mut on_iter: F,
) -> Result<SnmfResult>
where
    F: FnMut(usize, &DenseMatrix),
{
    let mut trace = Vec::with_capacity(iters);
    for it in 1..=iters {
        let su = sparse_dense_mul(s, &u)?;
        let den = gram_times(&u);
        ratio_update(&mut u, &su, &den, epsilon);
        check_finite(&u, "U", it)?;
        on_iter(it, &u);
        trace.push(snmf_loss(s, &u));
    }
    Ok(SnmfResult { u, trace })
}

pub fn nmf_loss(x: &DenseMatrix, u: &DenseMatrix, v: &DenseMatrix) -> f64 {
    let approx = u.dot(&v.t());
    Zip::from(x)
        .and(&approx)
        .fold(0.0, |acc, &a, &b| acc + (a - b) * (a - b))
}

/// Lee-Seung NMF `X ≈ UVᵀ`, updating `U` then `V` each round.
pub fn nmf_fit(x: &DenseMatrix, k1: usize, iters: usize, seed: u64) -> Result<NmfResult> {
    let (n, m) = x.dim();
    if k1 == 0 || k1 > n.min(m) {
        return Err(NagcError::InvalidParameter(format!("k1 = {k1} needs 1..={}", n.min(m))));
    }
    if x.iter().any(|&v| v < 0.0) {
        return Err(NagcError::InvalidParameter("NMF input has negative entries".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = uniform_factor((n, k1), &mut rng);
    let mut v = uniform_factor((m, k1), &mut rng);
    let mut trace = Vec::with_capacity(iters);
    for it in 1..=iters {
        let num = x.dot(&v);
        let den = u.dot(&v.t().dot(&v));
        ratio_update(&mut u, &num, &den, BASELINE_EPSILON);
        check_finite(&u, "U", it)?;
        let num = x.t().dot(&u);
        let den = v.dot(&u.t().dot(&u));
        ratio_update(&mut v, &num, &den, BASELINE_EPSILON);
        check_finite(&v, "V", it)?;
        trace.push(nmf_loss(x, &u, &v));
    }
    Ok(NmfResult { u, v, trace })
}

fn sq_dist(a: ndarray::ArrayView1<'_, f64>, b: ndarray::ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding.
fn seed_centroids(x: &DenseMatrix, k: usize, rng: &mut impl Rng) -> DenseMatrix {
    let n = x.nrows();
    let mut centroids = Array2::zeros((k, x.ncols()));
    let first = rng.gen_range(0..n);
    centroids.row_mut(0).assign(&x.row(first));
    let mut closest: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), x.row(first))).collect();
    for c in 1..k {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in closest.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        centroids.row_mut(c).assign(&x.row(pick));
        for (i, d) in closest.iter_mut().enumerate() {
            *d = d.min(sq_dist(x.row(i), x.row(pick)));
        }
    }
    centroids
}

/// Nearest centroid per point via `‖x‖² - 2x·c + ‖c‖²`.
fn assign(x: &DenseMatrix, row_norms: &Array1<f64>, centroids: &DenseMatrix) -> Vec<usize> {
    let cross = x.dot(&centroids.t());
    let c_norms: Vec<f64> = centroids.rows().into_iter().map(|c| c.dot(&c)).collect();
    map_indices(x.nrows(), Exec::default(), |i| {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, &cn) in c_norms.iter().enumerate() {
            let d = row_norms[i] - 2.0 * cross[[i, c]] + cn;
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        best
    })
}

fn point_costs(x: &DenseMatrix, labels: &[usize], centroids: &DenseMatrix) -> Vec<f64> {
    map_indices(x.nrows(), Exec::default(), |i| {
        sq_dist(x.row(i), centroids.row(labels[i]))
    })
}

fn lloyd(x: &DenseMatrix, k: usize, max_iters: usize, rng: &mut impl Rng) -> KMeansResult {
    let (n, d) = x.dim();
    let row_norms = x.map_axis(Axis(1), |r| r.dot(&r));
    let mut centroids = seed_centroids(x, k, rng);
    let mut labels = assign(x, &row_norms, &centroids);
    let mut costs = point_costs(x, &labels, &centroids);
    let mut trace = vec![costs.iter().sum::<f64>()];

    for _ in 0..max_iters {
        let mut sums = Array2::<f64>::zeros((k, d));
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            sums.row_mut(l).scaled_add(1.0, &x.row(i));
            counts[l] += 1;
        }
        let mut taken = vec![false; n];
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                let mean = &sums.row(c) / count as f64;
                centroids.row_mut(c).assign(&mean);
            } else {
                // reseed from the point farthest from its centroid
                let far = (0..n)
                    .filter(|&i| !taken[i])
                    .max_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(b.cmp(&a)))
                    .unwrap_or(0);
                taken[far] = true;
                centroids.row_mut(c).assign(&x.row(far));
            }
        }
        let next = assign(x, &row_norms, &centroids);
        costs = point_costs(x, &next, &centroids);
        trace.push(costs.iter().sum());
        let changed = next != labels;
        labels = next;
        if !changed {
            break;
        }
    }

    let inertia = *trace.last().unwrap_or(&0.0);
    KMeansResult {
        labels,
        centroids,
        inertia,
        inertia_trace: trace,
    }
}

/// Lloyd's algorithm with k-means++ seeding; the restart with the lowest
/// inertia wins. Squared Euclidean distance on the raw rows of `x`.
pub fn kmeans_fit(x: &DenseMatrix, k: usize, max_iters: usize, restarts: usize, seed: u64) -> Result<KMeansResult> {
    let n = x.nrows();
    if k == 0 || k > n {
        return Err(NagcError::InvalidParameter(format!("k = {k} needs 1..={n}")));
    }
    if restarts == 0 {
        return Err(NagcError::InvalidParameter("k-means needs at least one restart".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..restarts {
        let run = lloyd(x, k, max_iters, &mut rng);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}
