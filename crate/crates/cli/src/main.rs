use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nagc::data::{generate_planted, write_tsv, TsvPaths};
use nagc::{Hyperparams, InitScheme};
use nagc_harness::commands::write_grid_csv_to;
use nagc_harness::{
    cmd_bench, cmd_fit, cmd_grid, cmd_restarts, resolve_k1, DatasetSpec, GridSpec, HarnessError, LoadedDataset, Method,
    RunRecord,
};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "nagc", version, about = "Community detection on attributed graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one method once.
    Fit(RunArgs),
    /// Run one method over consecutive seeds and summarize.
    Restarts {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
    },
    /// Sweep lambda, k2 and rho.
    Grid {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
        /// Comma-separated; defaults to the standard sweep.
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        k2s: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        rhos: Option<Vec<f64>>,
    },
    /// Time the solver.
    Bench(RunArgs),
    /// Write a planted-partition dataset as TSV files.
    Synth {
        /// Same syntax as `--dataset synth:...`, without the prefix.
        #[arg(long, default_value = "")]
        params: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    dataset: String,
    #[arg(long, value_enum, default_value_t = Method::Nagc)]
    method: Method,
    /// Defaults to the number of ground-truth classes.
    #[arg(long)]
    k1: Option<usize>,
    /// Defaults to k1.
    #[arg(long)]
    k2: Option<usize>,
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, default_value_t = 100)]
    iters: usize,
    #[arg(long, default_value_t = InitArg::Kmeans, value_enum)]
    init: InitArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    epsilon: f64,
    /// Output directory; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Random,
    Kmeans,
}

impl RunArgs {
    fn load(&self) -> Result<(LoadedDataset, Hyperparams), HarnessError> {
        let ds = self.dataset.parse::<DatasetSpec>()?.load()?;
        let k1 = resolve_k1(&ds.data, self.k1)?;
        let hp = Hyperparams {
            k1,
            k2: self.k2.unwrap_or(k1),
            lambda: self.lambda,
            rho: self.rho,
            iters: self.iters,
            epsilon: self.epsilon,
            init: match self.init {
                InitArg::Random => InitScheme::Random,
                InitArg::Kmeans => InitScheme::Kmeans,
            },
            seed: self.seed,
        };
        hp.validate()?;
        Ok((ds, hp))
    }
}

fn emit(
    out: Option<&Path>,
    name: &str,
    write: impl FnOnce(&mut dyn Write) -> Result<(), HarnessError>,
) -> Result<(), HarnessError> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
                path: dir.into(),
                source,
            })?;
            let path = dir.join(name);
            let io = |source| HarnessError::Io {
                path: path.clone(),
                source,
            };
            let mut file = fs::File::create(&path).map_err(io)?;
            write(&mut file)?;
            file.flush().map_err(io)
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)
        }
    }
}

fn record_name(r: &RunRecord) -> String {
    format!("{}-{}-seed{}.json", r.dataset, r.method, r.seed)
}

fn json<T: Serialize>(w: &mut dyn Write, value: &T) -> Result<(), HarnessError> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w).map_err(|source| HarnessError::Io {
        path: "<output>".into(),
        source,
    })
}

fn csv_rows<T: Serialize>(w: &mut dyn Write, rows: impl IntoIterator<Item = T>) -> Result<(), HarnessError> {
    let mut wtr = csv::Writer::from_writer(w);
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush().map_err(|source| HarnessError::Io {
        path: "<output>".into(),
        source,
    })
}

#[derive(Serialize)]
struct Assignment<'a> {
    vertex: &'a str,
    cluster: usize,
}

#[derive(Serialize)]
struct SeedRow {
    seed: u64,
    ari: Option<f64>,
    modularity: Option<f64>,
    avg_entropy: Option<f64>,
    final_loss: Option<f64>,
    wall_time_seconds: f64,
}

#[derive(Serialize)]
struct BenchRow<'a> {
    dataset: &'a str,
    method: Method,
    n: usize,
    m: usize,
    nnz: usize,
    iters: usize,
    threads: usize,
    init_seconds: f64,
    total_seconds: f64,
    per_iteration_seconds: f64,
    topology_seconds: f64,
    attribute_seconds: f64,
    factor_bytes: usize,
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Fit(args) => {
            let (ds, hp) = args.load()?;
            let record = cmd_fit(&ds, args.method, &hp)?;
            let out = args.out.as_deref();
            let assignments = |w: &mut dyn Write| {
                csv_rows(
                    w,
                    ds.data
                        .vertex_ids
                        .iter()
                        .zip(&record.labels)
                        .map(|(v, &c)| Assignment { vertex: v, cluster: c }),
                )
            };
            match (args.format, out) {
                (Format::Json, _) => emit(out, &record_name(&record), |w| json(w, &record))?,
                (Format::Csv, None) => emit(None, "", assignments)?,
                (Format::Csv, Some(_)) => {
                    emit(out, &record_name(&record), |w| json(w, &record))?;
                    emit(out, "assignments.csv", assignments)?;
                }
            }
            Ok(())
        }
        Command::Restarts { run, restarts } => {
            let (ds, hp) = run.load()?;
            let outcome = cmd_restarts(&ds, run.method, &hp, restarts)?;
            let out = run.out.as_deref();
            if out.is_some() {
                for r in &outcome.records {
                    emit(out, &record_name(r), |w| json(w, r))?;
                }
            }
            match run.format {
                Format::Json => emit(out, "summary.json", |w| json(w, &outcome.summary)),
                Format::Csv => emit(out, "summary.csv", |w| {
                    csv_rows(
                        w,
                        outcome.records.iter().map(|r| SeedRow {
                            seed: r.seed,
                            ari: r.ari,
                            modularity: r.modularity,
                            avg_entropy: r.avg_entropy,
                            final_loss: r.trace.last().map(|l| l.total),
                            wall_time_seconds: r.wall_time_seconds,
                        }),
                    )
                }),
            }
        }
        Command::Grid {
            run,
            restarts,
            lambdas,
            k2s,
            rhos,
        } => {
            let (ds, hp) = run.load()?;
            let default = GridSpec::standard(hp.k1);
            let grid = GridSpec {
                lambdas: lambdas.unwrap_or(default.lambdas),
                k2s: k2s.unwrap_or(default.k2s),
                rhos: rhos.unwrap_or(default.rhos),
            };
            let outcome = cmd_grid(&ds, run.method, &hp, &grid, restarts)?;
            if let Some(b) = outcome.best {
                let r = &outcome.rows[b];
                eprintln!(
                    "best: lambda={} k2={} rho={} ari={:?}",
                    r.lambda, r.k2, r.rho, r.ari_mean
                );
            }
            #[derive(Serialize)]
            struct GridJson<'a> {
                rows: &'a [nagc_harness::GridRow],
                best: Option<usize>,
            }
            let out = run.out.as_deref();
            let as_json = |w: &mut dyn Write| {
                json(
                    w,
                    &GridJson {
                        rows: &outcome.rows,
                        best: outcome.best,
                    },
                )
            };
            match (run.format, out) {
                (Format::Json, None) => emit(None, "", as_json),
                (Format::Csv, None) => emit(None, "", |w| write_grid_csv_to(&outcome.rows, w)),
                (_, Some(_)) => {
                    emit(out, "grid.json", as_json)?;
                    emit(out, "grid.csv", |w| write_grid_csv_to(&outcome.rows, w))
                }
            }
        }
        Command::Bench(args) => {
            let (ds, hp) = args.load()?;
            let r = cmd_bench(&ds, args.method, &hp)?;
            let out = args.out.as_deref();
            match args.format {
                Format::Json => emit(out, "bench.json", |w| json(w, &r)),
                Format::Csv => emit(out, "bench.csv", |w| {
                    csv_rows(
                        w,
                        [BenchRow {
                            dataset: &r.dataset,
                            method: r.method,
                            n: r.n,
                            m: r.m,
                            nnz: r.nnz,
                            iters: r.iters,
                            threads: r.threads,
                            init_seconds: r.init_seconds,
                            total_seconds: r.total_seconds,
                            per_iteration_seconds: r.per_iteration_seconds,
                            topology_seconds: r.topology_seconds,
                            attribute_seconds: r.attribute_seconds,
                            factor_bytes: r.factor_bytes,
                        }],
                    )
                }),
            }
        }
        Command::Synth { params, out } => {
            let DatasetSpec::Synth(cfg) = format!("synth:{params}").parse::<DatasetSpec>()? else {
                unreachable!()
            };
            let ds = generate_planted(&cfg)?;
            fs::create_dir_all(&out).map_err(|source| HarnessError::Io {
                path: out.clone(),
                source,
            })?;
            write_tsv(&ds, &TsvPaths::in_dir(&out))?;
            eprintln!(
                "wrote {} vertices, {} edges to {}",
                ds.n(),
                ds.graph.edge_count(),
                out.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
