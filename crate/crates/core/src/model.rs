//! The NAGC model: a symmetric factorization `S ≈ UUᵀ` under a
//! positive-unlabeled weighted loss, coupled to an attribute factorization
//! `X ≈ f(UH) Vᵀ` through the sigmoid `f`.
//!
//! All three multiplicative updates are written as `θ ⊙ N ⊘ (D + ε)`, where
//! `D - N` is the gradient of [`loss`] with respect to `θ`. The gradient
//! functions reuse the same `N`/`D` terms, so a finite-difference check on
//! the gradients also covers the update rules.

use std::time::{Duration, Instant};

use ndarray::{s, Array2, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::kmeans_fit;
use crate::error::{NagcError, Result};
use crate::exec::{map_indices, Exec};
use crate::kernels::{
    complement_from_masked, masked_gram_times, sigmoid_map, sparse_dense_mul, DenseMatrix, SparseSymGraph,
};

/// Upper bound on the noise added to one-hot k-means indicators.
pub const INIT_NOISE: f64 = 0.01;

/// k-means restarts used by [`init_kmeans`], for each of rows and columns.
pub const INIT_KMEANS_RESTARTS: usize = 10;
const INIT_KMEANS_MAX_ITERS: usize = 300;

/// Row block size for the attribute residual.
const RESIDUAL_BLOCK: usize = 256;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitScheme {
    Random,
    #[default]
    Kmeans,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Number of vertex clusters.
    pub k1: usize,
    /// Number of attribute factors.
    pub k2: usize,
    /// Weight of the attribute term.
    pub lambda: f64,
    /// Weight of observed edges; `1 - rho` weighs unobserved pairs.
    pub rho: f64,
    pub iters: usize,
    /// Added to every update denominator.
    pub epsilon: f64,
    pub init: InitScheme,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            k1: 2,
            k2: 2,
            lambda: 0.01,
            rho: 0.5,
            iters: 100,
            epsilon: 1e-10,
            init: InitScheme::Kmeans,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(NagcError::InvalidParameter(msg));
        if self.k1 == 0 {
            return bad("k1 must be at least 1".into());
        }
        if self.k2 == 0 {
            return bad("k2 must be at least 1".into());
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!(
                "lambda must be a finite non-negative number, got {}",
                self.lambda
            ));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return bad(format!("rho must lie in [0, 1], got {}", self.rho));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        Ok(())
    }

    /// [`validate`](Self::validate) plus the size constraints for an
    /// `n`-vertex, `m`-attribute problem.
    pub fn validate_for(&self, n: usize, m: usize) -> Result<()> {
        self.validate()?;
        if self.k1 > n.min(m) {
            return Err(NagcError::InvalidParameter(format!(
                "k1 = {} exceeds min(n, m) = {}",
                self.k1,
                n.min(m)
            )));
        }
        if self.init == InitScheme::Kmeans && self.k2 > m {
            return Err(NagcError::InvalidParameter(format!(
                "k2 = {} exceeds the attribute count {m}",
                self.k2
            )));
        }
        Ok(())
    }
}

/// `U` (n × k1), `V` (m × k2) and `H` (k1 × k2).
#[derive(Clone, Debug, PartialEq)]
pub struct FactorModel {
    pub u: DenseMatrix,
    pub v: DenseMatrix,
    pub h: DenseMatrix,
}

impl FactorModel {
    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    pub fn m(&self) -> usize {
        self.v.nrows()
    }

    pub fn is_nonnegative(&self) -> bool {
        [&self.u, &self.v, &self.h].iter().all(|f| f.iter().all(|&x| x >= 0.0))
    }

    pub fn is_finite(&self) -> bool {
        [&self.u, &self.v, &self.h]
            .iter()
            .all(|f| f.iter().all(|x| x.is_finite()))
    }

    fn check(&self, s: &SparseSymGraph, x: &DenseMatrix) -> Result<()> {
        let (n, m) = x.dim();
        if s.n() != n {
            return Err(NagcError::dims("model", format!("{n} vertices in S"), s.n()));
        }
        let (k1, k2) = self.h.dim();
        if self.u.dim() != (n, k1) {
            return Err(NagcError::dims(
                "model",
                format!("U {n}x{k1}"),
                format!("{:?}", self.u.dim()),
            ));
        }
        if self.v.dim() != (m, k2) {
            return Err(NagcError::dims(
                "model",
                format!("V {m}x{k2}"),
                format!("{:?}", self.v.dim()),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub topology: f64,
    pub attribute: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(topology: f64, attribute: f64) -> Self {
        LossBreakdown {
            topology,
            attribute,
            total: topology + attribute,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.topology.is_finite() && self.attribute.is_finite() && self.total.is_finite()
    }
}

/// Wall time spent on the topology and attribute parts of the updates and
/// the per-round loss.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseTimes {
    pub topology: Duration,
    pub attribute: Duration,
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub model: FactorModel,
    /// One entry per completed round.
    pub trace: Vec<LossBreakdown>,
    pub phases: PhaseTimes,
}

/// `f(UH)` and `f'(UH)`.
struct Projection {
    f: DenseMatrix,
    fp: DenseMatrix,
}

impl Projection {
    fn new(u: &DenseMatrix, h: &DenseMatrix) -> Self {
        let f = sigmoid_map(&u.dot(h));
        let fp = f.mapv(|s| s * (1.0 - s));
        Projection { f, fp }
    }
}

/// Positive and negative parts of a gradient: `grad = den - num`.
struct Terms {
    num: DenseMatrix,
    den: DenseMatrix,
}

impl Terms {
    fn add(mut self, other: &Terms) -> Terms {
        self.num += &other.num;
        self.den += &other.den;
        self
    }

    fn gradient(&self) -> DenseMatrix {
        &self.den - &self.num
    }
}

fn topology_u_terms(s: &SparseSymGraph, u: &DenseMatrix, rho: f64) -> Result<Terms> {
    let su = sparse_dense_mul(s, u)?;
    let masked = masked_gram_times(u, s)?;
    let complement = complement_from_masked(u, masked.clone());
    let num = su * (2.0 * rho);
    let mut den = masked * (2.0 * rho);
    den.scaled_add(2.0 * (1.0 - rho), &complement);
    Ok(Terms { num, den })
}

fn attribute_u_terms(x: &DenseMatrix, m: &FactorModel, lambda: f64, p: &Projection) -> Terms {
    let xv = x.dot(&m.v);
    let fvtv = p.f.dot(&m.v.t().dot(&m.v));
    let ht = m.h.t();
    Terms {
        num: (xv * &p.fp).dot(&ht) * lambda,
        den: (fvtv * &p.fp).dot(&ht) * lambda,
    }
}

fn v_terms(x: &DenseMatrix, m: &FactorModel, p: &Projection) -> Terms {
    Terms {
        num: x.t().dot(&p.f),
        den: m.v.dot(&p.f.t().dot(&p.f)),
    }
}

fn h_terms(x: &DenseMatrix, m: &FactorModel, p: &Projection) -> Terms {
    let xv = x.dot(&m.v);
    let fvtv = p.f.dot(&m.v.t().dot(&m.v));
    let ut = m.u.t();
    Terms {
        num: ut.dot(&(xv * &p.fp)),
        den: ut.dot(&(fvtv * &p.fp)),
    }
}

/// `base ⊙ num ⊘ (den + eps)`, where a zero numerator yields zero.
fn multiplicative(base: &DenseMatrix, terms: &Terms, eps: f64) -> DenseMatrix {
    let mut out = base.clone();
    Zip::from(&mut out)
        .and(&terms.num)
        .and(&terms.den)
        .for_each(|b, &num, &den| {
            *b = if num == 0.0 { 0.0 } else { *b * num / (den + eps) };
        });
    out
}

fn topology_loss(s: &SparseSymGraph, u: &DenseMatrix, rho: f64) -> f64 {
    let mut positive = 0.0;
    let mut edge_sq = 0.0;
    for (i, j, w) in s.entries() {
        let z = u.row(i).dot(&u.row(j));
        positive += (w - z) * (w - z);
        edge_sq += z * z;
    }
    // Σ over all pairs of (uᵢ·uⱼ)² equals ‖UᵀU‖²_F
    let gram = u.t().dot(u);
    let all_sq: f64 = gram.iter().map(|g| g * g).sum();
    let unlabeled = (all_sq - edge_sq).max(0.0);
    0.5 * (rho * positive + (1.0 - rho) * unlabeled)
}

fn attribute_loss(x: &DenseMatrix, f: &DenseMatrix, v: &DenseMatrix, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let n = x.nrows();
    let blocks = n.div_ceil(RESIDUAL_BLOCK);
    let vt = v.t();
    let partial = map_indices(blocks, Exec::default(), |b| {
        let lo = b * RESIDUAL_BLOCK;
        let hi = (lo + RESIDUAL_BLOCK).min(n);
        let approx = f.slice(s![lo..hi, ..]).dot(&vt);
        Zip::from(&x.slice(s![lo..hi, ..]))
            .and(&approx)
            .fold(0.0, |acc, &a, &b| acc + (a - b) * (a - b))
    });
    0.5 * lambda * partial.iter().sum::<f64>()
}

fn check_problem(s: &SparseSymGraph, x: &DenseMatrix, m: &FactorModel) -> Result<()> {
    m.check(s, x)
}

/// Scale every edge weight by `sum(X) / sum(S)` so both matrices carry the
/// same total mass.
pub fn normalize_adjacency(s: &SparseSymGraph, x: &DenseMatrix) -> Result<SparseSymGraph> {
    if x.iter().any(|&v| v < 0.0) {
        return Err(NagcError::Preprocessing("attribute matrix has negative entries".into()));
    }
    let x_sum: f64 = x.sum();
    if x_sum <= 0.0 {
        return Err(NagcError::Preprocessing("attribute matrix is all zero".into()));
    }
    if s.nnz() == 0 {
        return Err(NagcError::Preprocessing("adjacency matrix has no edges".into()));
    }
    Ok(s.scaled(x_sum / s.total_weight()))
}

/// Topology and attribute terms of the objective.
///
/// The topology part is `½ [ρ Σ_E (sᵢⱼ - uᵢ·uⱼ)² + (1-ρ) Σ_{∉E} (uᵢ·uⱼ)²]`
/// over ordered pairs, the attribute part `(λ/2) ‖X - f(UH)Vᵀ‖²_F`.
pub fn loss(s: &SparseSymGraph, x: &DenseMatrix, m: &FactorModel, hp: &Hyperparams) -> Result<LossBreakdown> {
    check_problem(s, x, m)?;
    let p = Projection::new(&m.u, &m.h);
    Ok(LossBreakdown::new(
        topology_loss(s, &m.u, hp.rho),
        attribute_loss(x, &p.f, &m.v, hp.lambda),
    ))
}

pub fn grad_u(s: &SparseSymGraph, x: &DenseMatrix, m: &FactorModel, hp: &Hyperparams) -> Result<DenseMatrix> {
    check_problem(s, x, m)?;
    let p = Projection::new(&m.u, &m.h);
    let topo = topology_u_terms(s, &m.u, hp.rho)?;
    Ok(topo.add(&attribute_u_terms(x, m, hp.lambda, &p)).gradient())
}

pub fn grad_v(s: &SparseSymGraph, x: &DenseMatrix, m: &FactorModel, hp: &Hyperparams) -> Result<DenseMatrix> {
    check_problem(s, x, m)?;
    let p = Projection::new(&m.u, &m.h);
    Ok(v_terms(x, m, &p).gradient() * hp.lambda)
}

pub fn grad_h(s: &SparseSymGraph, x: &DenseMatrix, m: &FactorModel, hp: &Hyperparams) -> Result<DenseMatrix> {
    check_problem(s, x, m)?;
    let p = Projection::new(&m.u, &m.h);
    Ok(h_terms(x, m, &p).gradient() * hp.lambda)
}

pub fn update_u(s: &SparseSymGraph, x: &DenseMatrix, m: &FactorModel, hp: &Hyperparams) -> Result<DenseMatrix> {
    check_problem(s, x, m)?;
    let p = Projection::new(&m.u, &m.h);
    let mut timer = PhaseTimes::default();
    step_u(s, x, m, hp, &p, &mut timer)
}

pub fn update_v(s: &SparseSymGraph, x: &DenseMatrix, m: &FactorModel, hp: &Hyperparams) -> Result<DenseMatrix> {
    check_problem(s, x, m)?;
    let p = Projection::new(&m.u, &m.h);
    Ok(multiplicative(&m.v, &v_terms(x, m, &p), hp.epsilon))
}

pub fn update_h(s: &SparseSymGraph, x: &DenseMatrix, m: &FactorModel, hp: &Hyperparams) -> Result<DenseMatrix> {
    check_problem(s, x, m)?;
    let p = Projection::new(&m.u, &m.h);
    Ok(multiplicative(&m.h, &h_terms(x, m, &p), hp.epsilon))
}

fn step_u(
    s: &SparseSymGraph,
    x: &DenseMatrix,
    m: &FactorModel,
    hp: &Hyperparams,
    p: &Projection,
    timer: &mut PhaseTimes,
) -> Result<DenseMatrix> {
    let t0 = Instant::now();
    let mut terms = topology_u_terms(s, &m.u, hp.rho)?;
    let t1 = Instant::now();
    if hp.lambda != 0.0 {
        terms = terms.add(&attribute_u_terms(x, m, hp.lambda, p));
    }
    let t2 = Instant::now();
    timer.topology += t1 - t0;
    timer.attribute += t2 - t1;
    Ok(multiplicative(&m.u, &terms, hp.epsilon))
}

fn uniform_open_closed(shape: (usize, usize), rng: &mut impl Rng) -> DenseMatrix {
    // gen::<f64>() is in [0, 1)
    Array2::from_shape_simple_fn(shape, || 1.0 - rng.gen::<f64>())
}

/// Uniform `(0, 1]` entries for all three factors, drawn in the order U, V, H.
pub fn init_random(n: usize, m: usize, hp: &Hyperparams) -> FactorModel {
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let u = uniform_open_closed((n, hp.k1), &mut rng);
    let v = uniform_open_closed((m, hp.k2), &mut rng);
    let h = uniform_open_closed((hp.k1, hp.k2), &mut rng);
    FactorModel { u, v, h }
}

fn indicator_with_noise(labels: &[usize], k: usize, rng: &mut impl Rng) -> DenseMatrix {
    let mut out = Array2::zeros((labels.len(), k));
    for (i, &l) in labels.iter().enumerate() {
        out[[i, l]] = 1.0;
    }
    out.mapv_inplace(|v| v + INIT_NOISE * (1.0 - rng.gen::<f64>()));
    out
}

/// Give every empty cluster one member taken from a cluster with at least
/// two members.
fn fill_empty_clusters(labels: &mut [usize], k: usize, rng: &mut impl Rng) {
    loop {
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&c| c == 0) else {
            return;
        };
        let donors: Vec<usize> = (0..labels.len()).filter(|&i| sizes[labels[i]] > 1).collect();
        if donors.is_empty() {
            return;
        }
        let i = donors[rng.gen_range(0..donors.len())];
        labels[i] = empty;
    }
}

/// One-hot k-means memberships (plus noise in `(0, 0.01]`) for `U` from
/// the rows of `X` and for `V` from its columns; `H` uniform `(0, 1]`.
pub fn init_kmeans(x: &DenseMatrix, hp: &Hyperparams) -> Result<FactorModel> {
    let (n, m) = x.dim();
    if hp.k1 == 0 || hp.k1 > n {
        return Err(NagcError::InvalidParameter(format!("k1 = {} needs 1..={n}", hp.k1)));
    }
    if hp.k2 == 0 || hp.k2 > m {
        return Err(NagcError::InvalidParameter(format!("k2 = {} needs 1..={m}", hp.k2)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let row_seed = rng.gen::<u64>();
    let col_seed = rng.gen::<u64>();

    let rows = kmeans_fit(x, hp.k1, INIT_KMEANS_MAX_ITERS, INIT_KMEANS_RESTARTS, row_seed)?;
    let xt = x.t().to_owned();
    let cols = kmeans_fit(&xt, hp.k2, INIT_KMEANS_MAX_ITERS, INIT_KMEANS_RESTARTS, col_seed)?;

    let mut row_labels = rows.labels;
    let mut col_labels = cols.labels;
    fill_empty_clusters(&mut row_labels, hp.k1, &mut rng);
    fill_empty_clusters(&mut col_labels, hp.k2, &mut rng);

    let u = indicator_with_noise(&row_labels, hp.k1, &mut rng);
    let v = indicator_with_noise(&col_labels, hp.k2, &mut rng);
    let h = uniform_open_closed((hp.k1, hp.k2), &mut rng);
    Ok(FactorModel { u, v, h })
}

pub fn initialize(x: &DenseMatrix, hp: &Hyperparams) -> Result<FactorModel> {
    match hp.init {
        InitScheme::Random => Ok(init_random(x.nrows(), x.ncols(), hp)),
        InitScheme::Kmeans => init_kmeans(x, hp),
    }
}

fn ensure_finite(factor: &DenseMatrix, name: &'static str, iteration: usize) -> Result<()> {
    if factor.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(NagcError::NumericFailure {
            iteration,
            factor: name,
        })
    }
}

/// Normalize `S`, initialize, and run `hp.iters` rounds of updates.
pub fn fit(s: &SparseSymGraph, x: &DenseMatrix, hp: &Hyperparams) -> Result<FitResult> {
    let (n, m) = x.dim();
    if s.n() != n {
        return Err(NagcError::dims("fit", format!("{n} vertices"), s.n()));
    }
    hp.validate_for(n, m)?;
    let s_norm = normalize_adjacency(s, x)?;
    let model = initialize(x, hp)?;
    iterate(&s_norm, x, hp, model, |_, _, _| {})
}

/// Run `hp.iters` rounds from `model` on an already-normalized `S`.
///
/// Each round updates `U`, then `V`, then `H`, and then evaluates the loss.
/// `on_round` sees the 1-based round index, the updated model and its loss.
pub fn iterate<F>(
    s: &SparseSymGraph,
    x: &DenseMatrix,
    hp: &Hyperparams,
    mut model: FactorModel,
    mut on_round: F,
) -> Result<FitResult>
where
    F: FnMut(usize, &FactorModel, &LossBreakdown),
{
    hp.validate()?;
    check_problem(s, x, &model)?;
    if model.h.dim() != (hp.k1, hp.k2) {
        return Err(NagcError::dims(
            "iterate",
            format!("H {}x{}", hp.k1, hp.k2),
            format!("{:?}", model.h.dim()),
        ));
    }
    let mut timer = PhaseTimes::default();
    let mut trace = Vec::with_capacity(hp.iters);
    let mut p = Projection::new(&model.u, &model.h);

    for round in 1..=hp.iters {
        model.u = step_u(s, x, &model, hp, &p, &mut timer)?;
        ensure_finite(&model.u, "U", round)?;

        let t0 = Instant::now();
        p = Projection::new(&model.u, &model.h);
        model.v = multiplicative(&model.v, &v_terms(x, &model, &p), hp.epsilon);
        ensure_finite(&model.v, "V", round)?;
        model.h = multiplicative(&model.h, &h_terms(x, &model, &p), hp.epsilon);
        ensure_finite(&model.h, "H", round)?;
        p = Projection::new(&model.u, &model.h);
        let attribute = attribute_loss(x, &p.f, &model.v, hp.lambda);
        let t1 = Instant::now();
        let topology = topology_loss(s, &model.u, hp.rho);
        let t2 = Instant::now();
        timer.attribute += t1 - t0;
        timer.topology += t2 - t1;

        let lb = LossBreakdown::new(topology, attribute);
        if !lb.is_finite() {
            return Err(NagcError::NumericFailure {
                iteration: round,
                factor: "loss",
            });
        }
        on_round(round, &model, &lb);
        trace.push(lb);
    }

    Ok(FitResult {
        model,
        trace,
        phases: timer,
    })
}

/// Row-wise argmax, ties to the lowest column.
pub fn argmax_rows(u: &DenseMatrix) -> Vec<usize> {
    u.rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

pub fn assign_clusters(m: &FactorModel) -> Vec<usize> {
    argmax_rows(&m.u)
}
