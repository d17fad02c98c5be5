//! `--dataset` specifications.
//!
//! Accepted forms:
//!
//! * `linqs:<content>,<cites>`
//! * `tsv:<edges>,<attrs>[,<labels>]`
//! * `synth:n=200,k=4,p_in=0.2,p_out=0.01,m=40,signal=0.8,noise=0.05,map=0/0/1/1,seed=0`
//!   (every key optional)
//! * a `.content` file, whose `.cites` sibling is used
//! * a directory holding `edges.tsv` + `attrs.tsv` (+ `labels.tsv`), or a
//!   single `*.content` / `*.cites` pair

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nagc::data::{generate_planted, load_linqs, load_tsv, AttributedGraphDataset, PlantedConfig};

use crate::error::HarnessError;

#[derive(Clone, Debug, PartialEq)]
pub enum DatasetSpec {
    Linqs {
        content: PathBuf,
        cites: PathBuf,
    },
    Tsv {
        edges: PathBuf,
        attrs: PathBuf,
        labels: Option<PathBuf>,
    },
    Synth(PlantedConfig),
}

/// A loaded dataset with a display name for records.
#[derive(Clone, Debug)]
pub struct LoadedDataset {
    pub name: String,
    pub data: AttributedGraphDataset,
}

impl LoadedDataset {
    pub fn new(name: impl Into<String>, data: AttributedGraphDataset) -> Self {
        LoadedDataset {
            name: name.into(),
            data,
        }
    }
}

fn input(msg: impl Into<String>) -> HarnessError {
    HarnessError::Input(msg.into())
}

fn parse_synth(body: &str) -> Result<PlantedConfig, HarnessError> {
    let mut cfg = PlantedConfig::default();
    for item in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| input(format!("synth parameter {item:?} is not key=value")))?;
        let num = |v: &str| -> Result<f64, HarnessError> {
            v.parse().map_err(|_| input(format!("bad value for {key}: {v:?}")))
        };
        let int = |v: &str| -> Result<usize, HarnessError> {
            v.parse().map_err(|_| input(format!("bad value for {key}: {v:?}")))
        };
        match key {
            "n" => cfg.n = int(value)?,
            "k" => cfg.k = int(value)?,
            "m" => cfg.m = int(value)?,
            "p_in" => cfg.p_in = num(value)?,
            "p_out" => cfg.p_out = num(value)?,
            "signal" | "attr_signal" => cfg.attr_signal = num(value)?,
            "noise" | "attr_noise" => cfg.attr_noise = num(value)?,
            "seed" => cfg.seed = value.parse().map_err(|_| input(format!("bad seed {value:?}")))?,
            "map" | "cluster_map" => {
                let map = value.split('/').map(int).collect::<Result<Vec<_>, _>>()?;
                cfg.cluster_map = Some(map);
            }
            other => return Err(input(format!("unknown synth parameter {other:?}"))),
        }
    }
    Ok(cfg)
}

fn spec_from_dir(dir: &Path) -> Result<DatasetSpec, HarnessError> {
    let edges = dir.join("edges.tsv");
    let attrs = dir.join("attrs.tsv");
    if edges.is_file() && attrs.is_file() {
        let labels = dir.join("labels.tsv");
        return Ok(DatasetSpec::Tsv {
            edges,
            attrs,
            labels: labels.is_file().then_some(labels),
        });
    }
    let entries = fs::read_dir(dir).map_err(|e| input(format!("{}: {e}", dir.display())))?;
    let mut contents: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "content"))
        .collect();
    contents.sort();
    match contents.as_slice() {
        [content] => Ok(DatasetSpec::Linqs {
            cites: content.with_extension("cites"),
            content: content.clone(),
        }),
        [] => Err(input(format!(
            "{}: no edges.tsv/attrs.tsv or *.content file",
            dir.display()
        ))),
        _ => Err(input(format!(
            "{}: several *.content files, name one explicitly",
            dir.display()
        ))),
    }
}

impl FromStr for DatasetSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(body) = s.strip_prefix("synth:") {
            return Ok(DatasetSpec::Synth(parse_synth(body)?));
        }
        if s == "synth" {
            return Ok(DatasetSpec::Synth(PlantedConfig::default()));
        }
        if let Some(body) = s.strip_prefix("linqs:") {
            let parts: Vec<&str> = body.split(',').collect();
            let [content, cites] = parts.as_slice() else {
                return Err(input("linqs: expects <content>,<cites>"));
            };
            return Ok(DatasetSpec::Linqs {
                content: content.into(),
                cites: cites.into(),
            });
        }
        if let Some(body) = s.strip_prefix("tsv:") {
            let parts: Vec<&str> = body.split(',').collect();
            return match parts.as_slice() {
                [e, a] => Ok(DatasetSpec::Tsv {
                    edges: e.into(),
                    attrs: a.into(),
                    labels: None,
                }),
                [e, a, l] => Ok(DatasetSpec::Tsv {
                    edges: e.into(),
                    attrs: a.into(),
                    labels: Some(l.into()),
                }),
                _ => Err(input("tsv: expects <edges>,<attrs>[,<labels>]")),
            };
        }
        let path = Path::new(s);
        if path.is_dir() {
            return spec_from_dir(path);
        }
        if path.extension().is_some_and(|x| x == "content") {
            return Ok(DatasetSpec::Linqs {
                content: path.to_path_buf(),
                cites: path.with_extension("cites"),
            });
        }
        Err(input(format!("cannot interpret dataset {s:?}")))
    }
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

impl DatasetSpec {
    pub fn name(&self) -> String {
        match self {
            DatasetSpec::Linqs { content, .. } => stem(content),
            DatasetSpec::Tsv { edges, .. } => edges
                .parent()
                .and_then(|p| p.file_name())
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| stem(edges)),
            DatasetSpec::Synth(_) => "synth".into(),
        }
    }

    pub fn load(&self) -> Result<LoadedDataset, HarnessError> {
        let data = match self {
            DatasetSpec::Linqs { content, cites } => load_linqs(content, cites)?,
            DatasetSpec::Tsv { edges, attrs, labels } => load_tsv(edges, attrs, labels.as_deref())?,
            DatasetSpec::Synth(cfg) => generate_planted(cfg)?,
        };
        Ok(LoadedDataset::new(self.name(), data))
    }
}
