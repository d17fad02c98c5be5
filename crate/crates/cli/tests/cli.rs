use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nagc::Hyperparams;
use nagc_harness::{
    cmd_grid, cmd_restarts, read_grid_csv, select_best, write_grid_csv, DatasetSpec, GridSpec, Method, RunRecord,
};

fn nagc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nagc")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Two disjoint 4-cliques with one attribute column per clique.
fn two_cliques(dir: &Path) {
    let mut edges = String::new();
    for base in [0, 4] {
        for i in 0..4 {
            for j in i + 1..4 {
                edges += &format!("v{}\tv{}\n", base + i, base + j);
            }
        }
    }
    let attrs: String = (0..8)
        .map(|i| {
            if i < 4 {
                format!("v{i}\t1\t0\n")
            } else {
                format!("v{i}\t0\t1\n")
            }
        })
        .collect();
    let labels: String = (0..8)
        .map(|i| format!("v{i}\t{}\n", if i < 4 { "a" } else { "b" }))
        .collect();
    fs::write(dir.join("edges.tsv"), edges).unwrap();
    fs::write(dir.join("attrs.tsv"), attrs).unwrap();
    fs::write(dir.join("labels.tsv"), labels).unwrap();
}

fn strip_wall_time(mut r: RunRecord) -> RunRecord {
    r.wall_time_seconds = 0.0;
    r
}

#[test]
fn snmf_separates_disjoint_cliques() {
    let dir = tempfile::tempdir().unwrap();
    two_cliques(dir.path());
    let out = stdout(&nagc(&[
        "fit",
        "--dataset",
        dir.path().to_str().unwrap(),
        "--method",
        "snmf",
        "--iters",
        "50",
    ]));
    let record = RunRecord::from_json(&out).unwrap();
    assert_eq!(record.hyperparams.k1, 2);
    assert_eq!(record.ari, Some(1.0));
}

#[test]
fn zero_iterations_scores_the_initialization() {
    let out = stdout(&nagc(&["fit", "--dataset", "synth:n=40,k=2,m=10", "--iters", "0"]));
    let record = RunRecord::from_json(&out).unwrap();
    assert!(record.trace.is_empty());
    assert_eq!(record.labels.len(), 40);
    assert!(record.ari.is_some() && record.modularity.is_some() && record.avg_entropy.is_some());
}

#[test]
fn repeated_runs_are_identical() {
    for method in ["nagc", "nagc-nopu", "snmf", "nmf", "kmeans"] {
        let args = [
            "fit",
            "--dataset",
            "synth:n=60,k=3,m=12,seed=2",
            "--method",
            method,
            "--iters",
            "20",
            "--seed",
            "5",
        ];
        let a = RunRecord::from_json(&stdout(&nagc(&args))).unwrap();
        let b = RunRecord::from_json(&stdout(&nagc(&args))).unwrap();
        assert_eq!(strip_wall_time(a), strip_wall_time(b), "{method}");
    }
}

#[test]
fn nopu_records_rho_half() {
    let out = stdout(&nagc(&[
        "fit",
        "--dataset",
        "synth:n=40,k=2,m=10",
        "--method",
        "nagc-nopu",
        "--rho",
        "0.9",
        "--iters",
        "3",
    ]));
    assert_eq!(RunRecord::from_json(&out).unwrap().hyperparams.rho, 0.5);
}

#[test]
fn records_reject_unknown_fields_and_bad_traces() {
    let out = stdout(&nagc(&["fit", "--dataset", "synth:n=40,k=2,m=10", "--iters", "4"]));
    let mut value: serde_json::Value = serde_json::from_str(&out).unwrap();
    value["extra"] = 1.into();
    assert!(RunRecord::from_json(&value.to_string()).is_err());
    let mut value: serde_json::Value = serde_json::from_str(&out).unwrap();
    value["hyperparams"]["iters"] = 5.into();
    assert!(RunRecord::from_json(&value.to_string()).is_err());
}

#[test]
fn out_directory_receives_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs");
    let o = nagc(&[
        "restarts",
        "--dataset",
        "synth:n=40,k=2,m=10",
        "--restarts",
        "3",
        "--iters",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    stdout(&o);
    let mut records = 0;
    for entry in fs::read_dir(&out).unwrap() {
        let path = entry.unwrap().path();
        if path.file_name().unwrap() == "summary.json" {
            continue;
        }
        RunRecord::from_json(&fs::read_to_string(&path).unwrap()).unwrap();
        records += 1;
    }
    assert_eq!(records, 3);
    assert!(out.join("summary.json").is_file());
}

#[test]
fn exit_codes() {
    assert_eq!(nagc(&["fit", "--dataset", "no/such/place"]).status.code(), Some(1));
    assert_eq!(
        nagc(&["fit", "--dataset", "synth", "--method", "bogus"]).status.code(),
        Some(1)
    );
    assert_eq!(
        nagc(&["fit", "--dataset", "synth", "--rho", "1.5"]).status.code(),
        Some(1)
    );

    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("edges.tsv"), "a\tb\n").unwrap();
    fs::write(dir.path().join("attrs.tsv"), "a\t1e300\t1e300\nb\t1e300\t0\n").unwrap();
    let o = nagc(&[
        "fit",
        "--dataset",
        dir.path().to_str().unwrap(),
        "--k1",
        "1",
        "--iters",
        "5",
        "--init",
        "random",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn synth_writes_loadable_tsv() {
    let dir = tempfile::tempdir().unwrap();
    stdout(&nagc(&[
        "synth",
        "--params",
        "n=30,k=3,m=9,seed=4",
        "--out",
        dir.path().to_str().unwrap(),
    ]));
    let ds = dir
        .path()
        .to_str()
        .unwrap()
        .parse::<DatasetSpec>()
        .unwrap()
        .load()
        .unwrap();
    assert_eq!(ds.data.n(), 30);
    assert_eq!(ds.data.labels.unwrap().count(), 3);
}

#[test]
fn single_seed_has_zero_spread() {
    let ds = "synth:n=60,k=3,m=12".parse::<DatasetSpec>().unwrap().load().unwrap();
    let hp = Hyperparams {
        k1: 3,
        k2: 3,
        iters: 10,
        ..Hyperparams::default()
    };
    let out = cmd_restarts(&ds, Method::Nagc, &hp, 1).unwrap();
    assert_eq!(out.summary.ari.unwrap().std, 0.0);
    assert_eq!(out.summary.modularity.unwrap().std, 0.0);
    assert!(cmd_restarts(&ds, Method::Nagc, &hp, 0).is_err());
}

#[test]
fn one_cell_grid_matches_restarts_and_reselects() {
    let ds = "synth:n=60,k=3,m=12".parse::<DatasetSpec>().unwrap().load().unwrap();
    let hp = Hyperparams {
        k1: 3,
        k2: 3,
        lambda: 0.1,
        rho: 0.75,
        iters: 10,
        ..Hyperparams::default()
    };
    let one = GridSpec {
        lambdas: vec![0.1],
        k2s: vec![3],
        rhos: vec![0.75],
    };
    let grid = cmd_grid(&ds, Method::Nagc, &hp, &one, 3).unwrap();
    let direct = cmd_restarts(&ds, Method::Nagc, &hp, 3).unwrap().summary;
    assert_eq!(grid.rows.len(), 1);
    assert_eq!(grid.rows[0].ari_mean, direct.ari.map(|s| s.mean));
    assert_eq!(grid.rows[0].modularity_std, direct.modularity.map(|s| s.std));

    let sweep = GridSpec {
        lambdas: vec![0.01, 1.0],
        k2s: vec![2, 3],
        rhos: vec![0.5, 0.95],
    };
    let out = cmd_grid(&ds, Method::Nagc, &hp, &sweep, 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.csv");
    write_grid_csv(&out.rows, &path).unwrap();
    assert_eq!(select_best(&read_grid_csv(&path).unwrap()), out.best);
    assert!(out.best.is_some());
}
