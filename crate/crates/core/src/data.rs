//! Dataset loading, TSV serialization and the planted-partition generator.
//!
//! Two on-disk layouts are understood, both UTF-8, line oriented and TAB
//! separated with opaque string ids:
//!
//! * LINQS citation data: `<name>.content` rows `id  f1 … fm  label` and
//!   `<name>.cites` rows `target  source`.
//! * Generic TSV: edge rows `src  dst [weight]`, attribute rows
//!   `id  v1 … vm`, optional label rows `id  label`.
//!
//! Loaders discard edge direction, drop self-loops, merge duplicates and
//! count (rather than fail on) edges that mention unknown ids.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NagcError, Result};
use crate::kernels::{DenseMatrix, SparseSymGraph};

/// Ground-truth labels as dense ids plus their original names. Ids are
/// assigned in order of first appearance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Labels {
    pub ids: Vec<usize>,
    pub names: Vec<String>,
}

impl Labels {
    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut distinct = Vec::new();
        let ids = names
            .into_iter()
            .map(|s| {
                let s = s.as_ref();
                *index.entry(s.to_string()).or_insert_with(|| {
                    distinct.push(s.to_string());
                    distinct.len() - 1
                })
            })
            .collect();
        Labels { ids, names: distinct }
    }

    pub fn count(&self) -> usize {
        self.names.len()
    }

    pub fn name_of(&self, vertex: usize) -> &str {
        &self.names[self.ids[vertex]]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttributedGraphDataset {
    pub graph: SparseSymGraph,
    /// `n × m`, non-negative.
    pub attributes: DenseMatrix,
    pub labels: Option<Labels>,
    pub vertex_ids: Vec<String>,
    /// Edges dropped at load time because an endpoint was unknown.
    pub dropped_edges: usize,
}

impl AttributedGraphDataset {
    /// Check the structural invariants: matching sizes, a symmetric simple
    /// graph and non-negative attributes.
    pub fn validate(&self) -> Result<()> {
        let n = self.graph.n();
        let bad = |msg: String| Err(NagcError::InvalidParameter(msg));
        if self.attributes.nrows() != n {
            return bad(format!("{} attribute rows for {n} vertices", self.attributes.nrows()));
        }
        if self.vertex_ids.len() != n {
            return bad(format!("{} vertex ids for {n} vertices", self.vertex_ids.len()));
        }
        if let Some(l) = &self.labels {
            if l.ids.len() != n {
                return bad(format!("{} labels for {n} vertices", l.ids.len()));
            }
        }
        if self.graph.has_self_loops() {
            return bad("graph has self-loops".into());
        }
        if self.attributes.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return bad("attributes must be finite and non-negative".into());
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn m(&self) -> usize {
        self.attributes.ncols()
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| NagcError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> NagcError {
    NagcError::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Non-empty lines with their 1-based numbers, split into fields.
fn records(content: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    content.lines().enumerate().filter_map(|(i, line)| {
        let fields: Vec<&str> = line.split_whitespace().collect();
        (!fields.is_empty()).then_some((i + 1, fields))
    })
}

fn parse_value(path: &Path, line: usize, field: &str) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| parse_err(path, line, format!("bad number {field:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("non-finite value {field:?}")));
    }
    if v < 0.0 {
        return Err(parse_err(path, line, format!("negative attribute value {v}")));
    }
    Ok(v)
}

struct EdgeCollector<'a> {
    index: &'a HashMap<String, usize>,
    edges: Vec<(usize, usize, f64)>,
    dropped: usize,
}

impl<'a> EdgeCollector<'a> {
    fn new(index: &'a HashMap<String, usize>) -> Self {
        EdgeCollector {
            index,
            edges: Vec::new(),
            dropped: 0,
        }
    }

    fn push(&mut self, a: &str, b: &str, w: f64) {
        match (self.index.get(a), self.index.get(b)) {
            (Some(&i), Some(&j)) if i != j => self.edges.push((i, j, w)),
            (Some(_), Some(_)) => {}
            _ => self.dropped += 1,
        }
    }

    fn finish(self, n: usize) -> Result<(SparseSymGraph, usize)> {
        Ok((SparseSymGraph::from_edges(n, self.edges)?, self.dropped))
    }
}

fn index_ids(ids: &[String], path: &Path, lines: &[usize]) -> Result<HashMap<String, usize>> {
    let mut index = HashMap::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        if index.insert(id.clone(), i).is_some() {
            return Err(parse_err(path, lines[i], format!("duplicate vertex id {id:?}")));
        }
    }
    Ok(index)
}

/// Load a LINQS `.content` / `.cites` pair. All edge weights are 1.
pub fn load_linqs(content_path: impl AsRef<Path>, cites_path: impl AsRef<Path>) -> Result<AttributedGraphDataset> {
    let content_path = content_path.as_ref();
    let cites_path = cites_path.as_ref();
    let content = read(content_path)?;

    let mut ids = Vec::new();
    let mut lines = Vec::new();
    let mut label_names = Vec::new();
    let mut values = Vec::new();
    let mut width: Option<usize> = None;
    for (line, fields) in records(&content) {
        if fields.len() < 3 {
            return Err(parse_err(content_path, line, "expected id, features and label"));
        }
        let features = &fields[1..fields.len() - 1];
        match width {
            None => width = Some(features.len()),
            Some(w) if w != features.len() => {
                return Err(parse_err(
                    content_path,
                    line,
                    format!("expected {w} features, found {}", features.len()),
                ))
            }
            _ => {}
        }
        for f in features {
            values.push(parse_value(content_path, line, f)?);
        }
        ids.push(fields[0].to_string());
        lines.push(line);
        label_names.push(fields[fields.len() - 1].to_string());
    }
    let m = width.unwrap_or(0);
    let n = ids.len();
    let attributes = Array2::from_shape_vec((n, m), values).expect("row widths checked");
    let index = index_ids(&ids, content_path, &lines)?;

    let cites = read(cites_path)?;
    let mut collector = EdgeCollector::new(&index);
    for (line, fields) in records(&cites) {
        if fields.len() != 2 {
            return Err(parse_err(cites_path, line, "expected `target source`"));
        }
        collector.push(fields[0], fields[1], 1.0);
    }
    let (graph, dropped_edges) = collector.finish(n)?;

    let ds = AttributedGraphDataset {
        graph,
        attributes,
        labels: Some(Labels::from_names(&label_names)),
        vertex_ids: ids,
        dropped_edges,
    };
    ds.validate()?;
    Ok(ds)
}

/// Load the generic TSV layout. Vertices are the ids of the attribute file,
/// in file order; a vertex without edges stays as an isolated vertex.
pub fn load_tsv(
    edges_path: impl AsRef<Path>,
    attrs_path: impl AsRef<Path>,
    labels_path: Option<&Path>,
) -> Result<AttributedGraphDataset> {
    let edges_path = edges_path.as_ref();
    let attrs_path = attrs_path.as_ref();
    let attrs = read(attrs_path)?;

    let mut ids = Vec::new();
    let mut lines = Vec::new();
    let mut values = Vec::new();
    let mut width: Option<usize> = None;
    for (line, fields) in records(&attrs) {
        let row = &fields[1..];
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(parse_err(
                    attrs_path,
                    line,
                    format!("expected {w} values, found {}", row.len()),
                ))
            }
            _ => {}
        }
        for f in row {
            values.push(parse_value(attrs_path, line, f)?);
        }
        ids.push(fields[0].to_string());
        lines.push(line);
    }
    let n = ids.len();
    let m = width.unwrap_or(0);
    let attributes = Array2::from_shape_vec((n, m), values).expect("row widths checked");
    let index = index_ids(&ids, attrs_path, &lines)?;

    let edges = read(edges_path)?;
    let mut collector = EdgeCollector::new(&index);
    for (line, fields) in records(&edges) {
        let w = match fields.len() {
            2 => 1.0,
            3 => {
                let w: f64 = fields[2]
                    .parse()
                    .map_err(|_| parse_err(edges_path, line, format!("bad weight {:?}", fields[2])))?;
                if !(w > 0.0 && w.is_finite()) {
                    return Err(parse_err(
                        edges_path,
                        line,
                        format!("edge weight must be positive, got {w}"),
                    ));
                }
                w
            }
            _ => return Err(parse_err(edges_path, line, "expected `src dst [weight]`")),
        };
        collector.push(fields[0], fields[1], w);
    }
    let (graph, dropped_edges) = collector.finish(n)?;

    let labels = match labels_path {
        None => None,
        Some(path) => {
            let text = read(path)?;
            let mut names: Vec<Option<String>> = vec![None; n];
            for (line, fields) in records(&text) {
                if fields.len() != 2 {
                    return Err(parse_err(path, line, "expected `id label`"));
                }
                let &i = index
                    .get(fields[0])
                    .ok_or_else(|| parse_err(path, line, format!("unknown vertex id {:?}", fields[0])))?;
                names[i] = Some(fields[1].to_string());
            }
            let names = names
                .into_iter()
                .enumerate()
                .map(|(i, name)| {
                    name.ok_or_else(|| NagcError::Parse {
                        path: path.to_path_buf(),
                        line: 0,
                        msg: format!("vertex {:?} has no label", ids[i]),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Some(Labels::from_names(&names))
        }
    };

    let ds = AttributedGraphDataset {
        graph,
        attributes,
        labels,
        vertex_ids: ids,
        dropped_edges,
    };
    ds.validate()?;
    Ok(ds)
}

/// Paths written by [`write_tsv`].
#[derive(Clone, Debug)]
pub struct TsvPaths {
    pub edges: PathBuf,
    pub attributes: PathBuf,
    pub labels: Option<PathBuf>,
}

impl TsvPaths {
    /// `edges.tsv`, `attrs.tsv` and `labels.tsv` inside `dir`.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        TsvPaths {
            edges: dir.join("edges.tsv"),
            attributes: dir.join("attrs.tsv"),
            labels: Some(dir.join("labels.tsv")),
        }
    }
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> Result<()> {
    let io = |source| NagcError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::create(path).map_err(io)?;
    let mut w = BufWriter::new(file);
    body(&mut w).map_err(io)?;
    w.flush().map_err(io)
}

/// Write `ds` in the generic TSV layout. Values use the shortest
/// representation that parses back to the same `f64`. The label file is
/// skipped when the dataset has no labels.
pub fn write_tsv(ds: &AttributedGraphDataset, paths: &TsvPaths) -> Result<()> {
    write_file(&paths.edges, |w| {
        for (i, j, wt) in ds.graph.undirected_edges() {
            writeln!(w, "{}\t{}\t{}", ds.vertex_ids[i], ds.vertex_ids[j], wt)?;
        }
        Ok(())
    })?;
    write_file(&paths.attributes, |w| {
        for (i, row) in ds.attributes.rows().into_iter().enumerate() {
            write!(w, "{}", ds.vertex_ids[i])?;
            for v in row {
                write!(w, "\t{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    if let (Some(labels), Some(path)) = (&ds.labels, &paths.labels) {
        write_file(path, |w| {
            for (i, id) in ds.vertex_ids.iter().enumerate() {
                writeln!(w, "{id}\t{}", labels.name_of(i))?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

/// Parameters of [`generate_planted`].
#[derive(Clone, Debug, PartialEq)]
pub struct PlantedConfig {
    pub n: usize,
    /// Number of topology blocks.
    pub k: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub m: usize,
    /// Probability of an attribute on the block's signature columns.
    pub attr_signal: f64,
    /// Probability of an attribute elsewhere.
    pub attr_noise: f64,
    /// Topology block -> attribute cluster (a surjection onto `0..k_attr`).
    /// `None` means the identity.
    pub cluster_map: Option<Vec<usize>>,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            n: 200,
            k: 4,
            p_in: 0.2,
            p_out: 0.01,
            m: 40,
            attr_signal: 0.8,
            attr_noise: 0.05,
            cluster_map: None,
            seed: 0,
        }
    }
}

impl PlantedConfig {
    fn attribute_map(&self) -> Result<(Vec<usize>, usize)> {
        let map = self.cluster_map.clone().unwrap_or_else(|| (0..self.k).collect());
        if map.len() != self.k {
            return Err(NagcError::InvalidParameter(format!(
                "cluster_map has {} entries for {} blocks",
                map.len(),
                self.k
            )));
        }
        let k_attr = map.iter().max().map_or(0, |&v| v + 1);
        if (0..k_attr).any(|c| !map.contains(&c)) {
            return Err(NagcError::InvalidParameter("cluster_map must be onto 0..k_attr".into()));
        }
        Ok((map, k_attr))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(NagcError::InvalidParameter(msg));
        if self.k == 0 || self.k > self.n {
            return bad(format!("k = {} needs 1..={}", self.k, self.n));
        }
        if !(0.0 <= self.p_out && self.p_out <= self.p_in && self.p_in <= 1.0) {
            return bad(format!(
                "need 0 <= p_out <= p_in <= 1, got p_in = {}, p_out = {}",
                self.p_in, self.p_out
            ));
        }
        for (name, p) in [("attr_signal", self.attr_signal), ("attr_noise", self.attr_noise)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        let (_, k_attr) = self.attribute_map()?;
        if self.m < k_attr {
            return bad(format!(
                "m = {} is smaller than the {k_attr} attribute clusters",
                self.m
            ));
        }
        Ok(())
    }

    /// Block of every vertex: contiguous runs of `n / k`, with the
    /// remainder handed one at a time to the first blocks.
    pub fn blocks(&self) -> Vec<usize> {
        let base = self.n / self.k;
        let extra = self.n % self.k;
        (0..self.k)
            .flat_map(|b| std::iter::repeat_n(b, base + usize::from(b < extra)))
            .collect()
    }
}

/// Planted-partition attributed graph with Bernoulli edges and attributes.
///
/// Attribute columns are split into `k_attr` contiguous signature groups;
/// a vertex in block `b` shows the columns of group `cluster_map[b]` with
/// probability `attr_signal` and every other column with `attr_noise`.
/// Labels are the topology blocks.
pub fn generate_planted(cfg: &PlantedConfig) -> Result<AttributedGraphDataset> {
    cfg.validate()?;
    let (map, k_attr) = cfg.attribute_map()?;
    let blocks = cfg.blocks();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut edges = Vec::new();
    for i in 0..cfg.n {
        for j in (i + 1)..cfg.n {
            let p = if blocks[i] == blocks[j] { cfg.p_in } else { cfg.p_out };
            if rng.gen::<f64>() < p {
                edges.push((i, j, 1.0));
            }
        }
    }
    let graph = SparseSymGraph::from_edges(cfg.n, edges)?;

    let group_of_col = |j: usize| j * k_attr / cfg.m;
    let mut attributes = Array2::zeros((cfg.n, cfg.m));
    for i in 0..cfg.n {
        let a = map[blocks[i]];
        for j in 0..cfg.m {
            let p = if group_of_col(j) == a {
                cfg.attr_signal
            } else {
                cfg.attr_noise
            };
            if rng.gen::<f64>() < p {
                attributes[[i, j]] = 1.0;
            }
        }
    }

    let ds = AttributedGraphDataset {
        graph,
        attributes,
        labels: Some(Labels::from_names(blocks.iter().map(|b| format!("c{b}")))),
        vertex_ids: (0..cfg.n).map(|i| format!("v{i}")).collect(),
        dropped_edges: 0,
    };
    ds.validate()?;
    Ok(ds)
}
