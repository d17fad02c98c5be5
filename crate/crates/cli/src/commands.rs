use std::fs::File;
use std::path::Path;
use std::time::{Duration, Instant};

use nagc::baselines::{kmeans_fit, nmf_fit, snmf_fit};
use nagc::data::AttributedGraphDataset;
use nagc::metrics::{adjusted_rand_index, average_entropy, modularity};
use nagc::model::{argmax_rows, assign_clusters, fit, initialize, iterate, normalize_adjacency};
use nagc::{Hyperparams, LossBreakdown};
use serde::{Deserialize, Serialize};

use crate::dataset::LoadedDataset;
use crate::error::HarnessError;
use crate::record::{Method, RestartSummary, RunRecord, Stat};

/// `k1` from the flag, else the number of ground-truth classes.
pub fn resolve_k1(data: &AttributedGraphDataset, flag: Option<usize>) -> Result<usize, HarnessError> {
    match (flag, &data.labels) {
        (Some(k), _) => Ok(k),
        (None, Some(labels)) => Ok(labels.count()),
        (None, None) => Err(HarnessError::Input("dataset has no labels, pass --k1".into())),
    }
}

fn run_method(
    data: &AttributedGraphDataset,
    method: Method,
    hp: &Hyperparams,
) -> Result<(Vec<usize>, Vec<LossBreakdown>), HarnessError> {
    Ok(match method {
        Method::Nagc | Method::NagcNopu => {
            let res = fit(&data.graph, &data.attributes, hp)?;
            (assign_clusters(&res.model), res.trace)
        }
        Method::Snmf => {
            let res = snmf_fit(&data.graph, hp.k1, hp.iters, hp.seed)?;
            let trace = res.trace.iter().map(|&l| LossBreakdown::new(l, 0.0)).collect();
            (argmax_rows(&res.u), trace)
        }
        Method::Nmf => {
            let res = nmf_fit(&data.attributes, hp.k1, hp.iters, hp.seed)?;
            let trace = res.trace.iter().map(|&l| LossBreakdown::new(0.0, l)).collect();
            (argmax_rows(&res.u), trace)
        }
        Method::Kmeans => {
            let res = kmeans_fit(&data.attributes, hp.k1, hp.iters, 1, hp.seed)?;
            // Lloyd may converge early; hold the final inertia for the rest.
            let mut trace: Vec<LossBreakdown> = res.inertia_trace.iter().map(|&l| LossBreakdown::new(0.0, l)).collect();
            let last = trace.last().copied().unwrap_or(LossBreakdown::new(0.0, res.inertia));
            trace.resize(hp.iters, last);
            (res.labels, trace)
        }
    })
}

/// One run of `method` with `hp`, scored against the dataset labels if any.
pub fn cmd_fit(ds: &LoadedDataset, method: Method, hp: &Hyperparams) -> Result<RunRecord, HarnessError> {
    let hp = method.effective(hp);
    let data = &ds.data;
    let start = Instant::now();
    let (labels, trace) = run_method(data, method, &hp)?;
    let wall_time_seconds = start.elapsed().as_secs_f64();

    let ari = match &data.labels {
        Some(truth) => Some(adjusted_rand_index(&truth.ids, &labels)?),
        None => None,
    };
    let record = RunRecord {
        dataset: ds.name.clone(),
        method,
        seed: hp.seed,
        trace,
        ari,
        modularity: Some(modularity(&data.graph, &labels)?),
        avg_entropy: Some(average_entropy(&data.attributes, &labels)?),
        labels,
        wall_time_seconds,
        hyperparams: hp,
    };
    record.validate()?;
    Ok(record)
}

#[derive(Clone, Debug)]
pub struct RestartsOutcome {
    pub records: Vec<RunRecord>,
    pub summary: RestartSummary,
}

/// `restarts` runs with seeds `hp.seed + i`.
pub fn cmd_restarts(
    ds: &LoadedDataset,
    method: Method,
    hp: &Hyperparams,
    restarts: usize,
) -> Result<RestartsOutcome, HarnessError> {
    if restarts == 0 {
        return Err(HarnessError::Input("restarts must be at least 1".into()));
    }
    let run = |i: usize| {
        let hp = Hyperparams {
            seed: hp.seed.wrapping_add(i as u64),
            ..hp.clone()
        };
        cmd_fit(ds, method, &hp)
    };
    #[cfg(feature = "parallel")]
    let records: Vec<RunRecord> = {
        use rayon::prelude::*;
        (0..restarts).into_par_iter().map(run).collect::<Result<_, _>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let records: Vec<RunRecord> = (0..restarts).map(run).collect::<Result<_, _>>()?;

    let summary = RestartSummary::from_records(&records).expect("at least one record");
    Ok(RestartsOutcome { records, summary })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub lambdas: Vec<f64>,
    pub k2s: Vec<usize>,
    pub rhos: Vec<f64>,
}

impl GridSpec {
    /// The standard sweep; `k2` starts at `k1` and duplicates are dropped.
    pub fn standard(k1: usize) -> Self {
        let mut k2s = vec![k1];
        for k in [5, 7, 10, 15, 20] {
            if !k2s.contains(&k) {
                k2s.push(k);
            }
        }
        GridSpec {
            lambdas: vec![1e-10, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0],
            k2s,
            rhos: vec![0.5, 0.55, 0.75, 0.95, 0.995],
        }
    }

    pub fn cells(&self) -> Vec<(f64, usize, f64)> {
        let mut out = Vec::with_capacity(self.lambdas.len() * self.k2s.len() * self.rhos.len());
        for &lambda in &self.lambdas {
            for &k2 in &self.k2s {
                for &rho in &self.rhos {
                    out.push((lambda, k2, rho));
                }
            }
        }
        out
    }
}

/// Aggregated restarts for one grid cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub lambda: f64,
    pub k2: usize,
    pub rho: f64,
    pub restarts: usize,
    pub ari_mean: Option<f64>,
    pub ari_std: Option<f64>,
    pub modularity_mean: Option<f64>,
    pub modularity_std: Option<f64>,
    pub entropy_mean: Option<f64>,
    pub entropy_std: Option<f64>,
    pub wall_time_mean: f64,
}

impl GridRow {
    fn from_summary(lambda: f64, k2: usize, rho: f64, s: &RestartSummary) -> Self {
        let split = |st: Option<Stat>| (st.map(|s| s.mean), st.map(|s| s.std));
        let (ari_mean, ari_std) = split(s.ari);
        let (modularity_mean, modularity_std) = split(s.modularity);
        let (entropy_mean, entropy_std) = split(s.avg_entropy);
        GridRow {
            lambda,
            k2,
            rho,
            restarts: s.restarts,
            ari_mean,
            ari_std,
            modularity_mean,
            modularity_std,
            entropy_mean,
            entropy_std,
            wall_time_mean: s.wall_time_seconds.mean,
        }
    }
}

/// Index of the row with the highest mean ARI; ties go to the smaller
/// `lambda`, then `k2`, then `rho`. `None` if no row has an ARI.
pub fn select_best(rows: &[GridRow]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, row) in rows.iter().enumerate() {
        let Some(ari) = row.ari_mean.filter(|a| !a.is_nan()) else {
            continue;
        };
        let better = match best {
            None => true,
            Some(b) => {
                let cur = &rows[b];
                let cur_ari = cur.ari_mean.unwrap();
                ari.total_cmp(&cur_ari)
                    .then(cur.lambda.total_cmp(&row.lambda))
                    .then(cur.k2.cmp(&row.k2))
                    .then(cur.rho.total_cmp(&row.rho))
                    .is_gt()
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

#[derive(Clone, Debug)]
pub struct GridOutcome {
    pub rows: Vec<GridRow>,
    pub best: Option<usize>,
}

pub fn cmd_grid(
    ds: &LoadedDataset,
    method: Method,
    base: &Hyperparams,
    grid: &GridSpec,
    restarts: usize,
) -> Result<GridOutcome, HarnessError> {
    let cells = grid.cells();
    if cells.is_empty() {
        return Err(HarnessError::Input("empty grid".into()));
    }
    let run = |&(lambda, k2, rho): &(f64, usize, f64)| -> Result<GridRow, HarnessError> {
        let hp = Hyperparams {
            lambda,
            k2,
            rho,
            ..base.clone()
        };
        let out = cmd_restarts(ds, method, &hp, restarts)?;
        Ok(GridRow::from_summary(lambda, k2, rho, &out.summary))
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<GridRow> = {
        use rayon::prelude::*;
        cells.par_iter().map(run).collect::<Result<_, _>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<GridRow> = cells.iter().map(run).collect::<Result<_, _>>()?;
    let best = select_best(&rows);
    Ok(GridOutcome { rows, best })
}

pub fn write_grid_csv(rows: &[GridRow], path: &Path) -> Result<(), HarnessError> {
    let file = File::create(path).map_err(|source| HarnessError::Io {
        path: path.into(),
        source,
    })?;
    write_grid_csv_to(rows, file)
}

pub fn write_grid_csv_to<W: std::io::Write>(rows: &[GridRow], w: W) -> Result<(), HarnessError> {
    let mut wtr = csv::Writer::from_writer(w);
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush().map_err(|source| HarnessError::Io {
        path: "<csv>".into(),
        source,
    })?;
    Ok(())
}

pub fn read_grid_csv(path: &Path) -> Result<Vec<GridRow>, HarnessError> {
    let mut rdr = csv::Reader::from_path(path)?;
    Ok(rdr.deserialize().collect::<Result<_, _>>()?)
}

#[derive(Clone, Debug, Serialize)]
pub struct FactorShape {
    pub name: &'static str,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub dataset: String,
    pub method: Method,
    pub n: usize,
    pub m: usize,
    pub nnz: usize,
    pub iters: usize,
    pub threads: usize,
    pub init_seconds: f64,
    pub total_seconds: f64,
    pub per_iteration_seconds: f64,
    pub topology_seconds: f64,
    pub attribute_seconds: f64,
    pub factors: Vec<FactorShape>,
    pub factor_bytes: usize,
}

fn threads() -> usize {
    #[cfg(feature = "parallel")]
    return rayon::current_num_threads();
    #[cfg(not(feature = "parallel"))]
    1
}

/// Time `hp.iters` rounds after one untimed warm-up round.
///
/// For NAGC the initialization is timed separately and the phase split
/// comes from the solver. Baselines report their whole run under the phase
/// they belong to.
pub fn cmd_bench(ds: &LoadedDataset, method: Method, hp: &Hyperparams) -> Result<BenchReport, HarnessError> {
    let hp = method.effective(hp);
    let data = &ds.data;
    let (n, m) = (data.n(), data.m());
    let warm = Hyperparams { iters: 1, ..hp.clone() };

    let (init, total, topology, attribute, factors) = match method {
        Method::Nagc | Method::NagcNopu => {
            let s = normalize_adjacency(&data.graph, &data.attributes)?;
            let t0 = Instant::now();
            let model = initialize(&data.attributes, &hp)?;
            let init = t0.elapsed();
            iterate(&s, &data.attributes, &warm, model.clone(), |_, _, _| {})?;
            let t1 = Instant::now();
            let res = iterate(&s, &data.attributes, &hp, model, |_, _, _| {})?;
            let total = t1.elapsed();
            let factors = vec![
                FactorShape {
                    name: "U",
                    rows: n,
                    cols: hp.k1,
                },
                FactorShape {
                    name: "V",
                    rows: m,
                    cols: hp.k2,
                },
                FactorShape {
                    name: "H",
                    rows: hp.k1,
                    cols: hp.k2,
                },
            ];
            (init, total, res.phases.topology, res.phases.attribute, factors)
        }
        _ => {
            run_method(data, method, &warm)?;
            let t0 = Instant::now();
            run_method(data, method, &hp)?;
            let total = t0.elapsed();
            let (topology, attribute) = match method {
                Method::Snmf => (total, Duration::ZERO),
                _ => (Duration::ZERO, total),
            };
            let mut factors = vec![FactorShape {
                name: "U",
                rows: n,
                cols: hp.k1,
            }];
            if method == Method::Nmf {
                factors.push(FactorShape {
                    name: "V",
                    rows: m,
                    cols: hp.k1,
                });
            }
            (Duration::ZERO, total, topology, attribute, factors)
        }
    };
    let factor_bytes = factors
        .iter()
        .map(|f| f.rows * f.cols * std::mem::size_of::<f64>())
        .sum();
    Ok(BenchReport {
        dataset: ds.name.clone(),
        method,
        n,
        m,
        nnz: data.graph.nnz(),
        iters: hp.iters,
        threads: threads(),
        init_seconds: init.as_secs_f64(),
        total_seconds: total.as_secs_f64(),
        per_iteration_seconds: total.as_secs_f64() / hp.iters.max(1) as f64,
        topology_seconds: topology.as_secs_f64(),
        attribute_seconds: attribute.as_secs_f64(),
        factors,
        factor_bytes,
    })
}
