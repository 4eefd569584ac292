//! Discrete-time temporal graphs: snapshots, labeled graph sequences,
//! dataset containers, and the canonical on-disk format.
//!
//! A dataset lives in a directory with two files:
//!
//! - `meta.json` — `{"name", "num_vertices", "num_classes", "num_graphs"}`
//!   plus an optional `"total_edges"` cross-check written by the generator
//! - `graphs.jsonl` — one graph per line:
//!   `{"label": int, "snapshots": [{"active": [ids], "edges": [[i,j],...]}]}`
//!
//! Adjacency is stored as an undirected edge list with `i < j`; a stored
//! pair means both directions are present. Vertex signals are binary and
//! represented by the set of active vertex ids.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reservoir_encoder::spectral_radius;

/// Tolerance used when estimating adjacency spectral radii for stats.
pub const STATS_RHO_TOL: f64 = 1e-9;
const STATS_RHO_MAX_ITERS: usize = 10_000;

/// One time step: binary vertex signals plus an undirected edge list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    /// Per-vertex binary signal, length `num_vertices`.
    pub signal: Vec<bool>,
    /// Sorted, deduplicated undirected edges with `i < j`.
    pub edges: Vec<(u32, u32)>,
}

impl Snapshot {
    /// A snapshot with all signals zero and no edges (the padding element).
    pub fn empty(num_vertices: usize) -> Self {
        Snapshot {
            signal: vec![false; num_vertices],
            edges: Vec::new(),
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.signal.len()
    }

    pub fn has_no_edges(&self) -> bool {
        self.edges.is_empty()
    }

    /// Build a snapshot from an active-vertex list and raw edge pairs.
    /// Edges are normalized to `i < j`, sorted, and deduplicated.
    pub fn from_parts(
        num_vertices: usize,
        active: &[u32],
        edges: &[(u32, u32)],
    ) -> Result<Self> {
        let mut signal = vec![false; num_vertices];
        for &v in active {
            if v as usize >= num_vertices {
                return Err(Error::Validation(format!(
                    "active vertex id {v} out of range (num_vertices = {num_vertices})"
                )));
            }
            signal[v as usize] = true;
        }
        let mut normalized = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == b {
                return Err(Error::Validation(format!("self-loop on vertex {a}")));
            }
            if a as usize >= num_vertices || b as usize >= num_vertices {
                return Err(Error::Validation(format!(
                    "edge ({a}, {b}) out of range (num_vertices = {num_vertices})"
                )));
            }
            normalized.push((a.min(b), a.max(b)));
        }
        normalized.sort_unstable();
        normalized.dedup();
        Ok(Snapshot {
            signal,
            edges: normalized,
        })
    }

    /// Dense symmetric 0/1 adjacency matrix.
    pub fn dense_adjacency(&self) -> DMatrix<f64> {
        let n = self.num_vertices();
        let mut m = DMatrix::zeros(n, n);
        for &(i, j) in &self.edges {
            m[(i as usize, j as usize)] = 1.0;
            m[(j as usize, i as usize)] = 1.0;
        }
        m
    }

    fn validate(&self, num_vertices: usize) -> Result<()> {
        if self.signal.len() != num_vertices {
            return Err(Error::Validation(format!(
                "signal length {} != num_vertices {num_vertices}",
                self.signal.len()
            )));
        }
        let mut prev: Option<(u32, u32)> = None;
        for &(i, j) in &self.edges {
            if i >= j {
                return Err(Error::Validation(format!(
                    "edge ({i}, {j}) not normalized to i < j"
                )));
            }
            if j as usize >= num_vertices {
                return Err(Error::Validation(format!(
                    "edge ({i}, {j}) out of range (num_vertices = {num_vertices})"
                )));
            }
            if let Some(p) = prev {
                if p >= (i, j) {
                    return Err(Error::Validation(format!(
                        "edge list not sorted/deduplicated at ({i}, {j})"
                    )));
                }
            }
            prev = Some((i, j));
        }
        Ok(())
    }
}

/// A labeled sequence of snapshots over a fixed vertex set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalGraph {
    pub snapshots: Vec<Snapshot>,
    /// Class index in `[0, num_classes)`.
    pub label: usize,
}

impl TemporalGraph {
    pub fn num_steps(&self) -> usize {
        self.snapshots.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.snapshots.first().map_or(0, Snapshot::num_vertices)
    }

    pub fn edge_count(&self) -> u64 {
        self.snapshots.iter().map(|s| s.edges.len() as u64).sum()
    }
}

/// A dissemination-process classification dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub graphs: Vec<TemporalGraph>,
    pub num_vertices: usize,
    pub num_classes: usize,
    pub name: String,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        num_vertices: usize,
        num_classes: usize,
        graphs: Vec<TemporalGraph>,
    ) -> Result<Self> {
        let ds = Dataset {
            graphs,
            num_vertices,
            num_classes,
            name: name.into(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn num_graphs(&self) -> usize {
        self.graphs.len()
    }

    pub fn total_edges(&self) -> u64 {
        self.graphs.iter().map(TemporalGraph::edge_count).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.graphs.is_empty() {
            return Err(Error::Validation("dataset has no graphs".into()));
        }
        if self.num_classes == 0 {
            return Err(Error::Validation("num_classes must be >= 1".into()));
        }
        let mut class_seen = vec![false; self.num_classes];
        for (s, g) in self.graphs.iter().enumerate() {
            if g.label >= self.num_classes {
                return Err(Error::Validation(format!(
                    "graph {s} has label {} >= num_classes {}",
                    g.label, self.num_classes
                )));
            }
            class_seen[g.label] = true;
            if g.snapshots.is_empty() {
                return Err(Error::Validation(format!("graph {s} has no snapshots")));
            }
            for snap in &g.snapshots {
                snap.validate(self.num_vertices)?;
            }
        }
        if let Some(missing) = class_seen.iter().position(|&seen| !seen) {
            return Err(Error::Validation(format!(
                "class {missing} has no graphs"
            )));
        }
        Ok(())
    }
}

/// Aggregate statistics used for cost reporting and ESP rescaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    /// Total edge count over all graphs and snapshots.
    pub total_edges: u64,
    /// Maximum adjacency spectral radius over all snapshots.
    pub max_adjacency_spectral_radius: f64,
    /// Post-filtering sequence length of each graph.
    pub graph_lengths: Vec<usize>,
}

/// Drop snapshots with empty edge lists, preserving order.
pub fn filter_empty_snapshots(g: &TemporalGraph) -> Result<TemporalGraph> {
    let snapshots: Vec<Snapshot> = g
        .snapshots
        .iter()
        .filter(|s| !s.has_no_edges())
        .cloned()
        .collect();
    if snapshots.is_empty() {
        return Err(Error::Degenerate(
            "all snapshots have empty adjacency".into(),
        ));
    }
    Ok(TemporalGraph {
        snapshots,
        label: g.label,
    })
}

/// Exact edge counts plus the maximum adjacency spectral radius.
pub fn compute_stats(ds: &Dataset) -> Result<DatasetStats> {
    let mut max_rho = 0.0f64;
    for g in &ds.graphs {
        for snap in &g.snapshots {
            if snap.has_no_edges() {
                continue;
            }
            let rho = spectral_radius(&snap.dense_adjacency(), STATS_RHO_TOL, STATS_RHO_MAX_ITERS)?;
            max_rho = max_rho.max(rho);
        }
    }
    Ok(DatasetStats {
        total_edges: ds.total_edges(),
        max_adjacency_spectral_radius: max_rho,
        graph_lengths: ds.graphs.iter().map(TemporalGraph::num_steps).collect(),
    })
}

#[derive(Serialize, Deserialize)]
struct Meta {
    name: String,
    num_vertices: usize,
    num_classes: usize,
    num_graphs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    total_edges: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct SnapshotRecord {
    active: Vec<u32>,
    edges: Vec<(u32, u32)>,
}

#[derive(Serialize, Deserialize)]
struct GraphRecord {
    label: usize,
    snapshots: Vec<SnapshotRecord>,
}

/// Write a dataset in the canonical directory format.
pub fn save_dataset(ds: &Dataset, dir: &Path) -> Result<()> {
    ds.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let meta = Meta {
        name: ds.name.clone(),
        num_vertices: ds.num_vertices,
        num_classes: ds.num_classes,
        num_graphs: ds.num_graphs(),
        total_edges: Some(ds.total_edges()),
    };
    let meta_path = dir.join("meta.json");
    let meta_json =
        serde_json::to_string_pretty(&meta).expect("meta serialization cannot fail");
    fs::write(&meta_path, meta_json).map_err(|e| Error::io(&meta_path, e))?;

    let graphs_path = dir.join("graphs.jsonl");
    let mut out = Vec::new();
    for g in &ds.graphs {
        let record = GraphRecord {
            label: g.label,
            snapshots: g
                .snapshots
                .iter()
                .map(|s| SnapshotRecord {
                    active: s
                        .signal
                        .iter()
                        .enumerate()
                        .filter_map(|(i, &on)| on.then_some(i as u32))
                        .collect(),
                    edges: s.edges.clone(),
                })
                .collect(),
        };
        serde_json::to_writer(&mut out, &record).expect("graph serialization cannot fail");
        out.push(b'\n');
    }
    let mut file = fs::File::create(&graphs_path).map_err(|e| Error::io(&graphs_path, e))?;
    file.write_all(&out).map_err(|e| Error::io(&graphs_path, e))?;
    Ok(())
}

/// Load a dataset from the canonical directory format, validating all
/// invariants and the optional `total_edges` cross-check.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let meta_path = dir.join("meta.json");
    let meta_raw = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: Meta = serde_json::from_str(&meta_raw)
        .map_err(|e| Error::parse(&meta_path, e.line(), e.to_string()))?;

    let graphs_path = dir.join("graphs.jsonl");
    let file = fs::File::open(&graphs_path).map_err(|e| Error::io(&graphs_path, e))?;
    let reader = BufReader::new(file);

    let mut graphs = Vec::with_capacity(meta.num_graphs);
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(&graphs_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: GraphRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(&graphs_path, idx + 1, e.to_string()))?;
        if record.label >= meta.num_classes {
            return Err(Error::parse(
                &graphs_path,
                idx + 1,
                format!(
                    "label {} >= num_classes {}",
                    record.label, meta.num_classes
                ),
            ));
        }
        let mut snapshots = Vec::with_capacity(record.snapshots.len());
        for snap in &record.snapshots {
            snapshots.push(
                Snapshot::from_parts(meta.num_vertices, &snap.active, &snap.edges).map_err(
                    |e| Error::parse(&graphs_path, idx + 1, e.to_string()),
                )?,
            );
        }
        graphs.push(TemporalGraph {
            snapshots,
            label: record.label,
        });
    }

    if graphs.len() != meta.num_graphs {
        return Err(Error::Validation(format!(
            "meta.json declares {} graphs but graphs.jsonl holds {}",
            meta.num_graphs,
            graphs.len()
        )));
    }

    let ds = Dataset::new(meta.name, meta.num_vertices, meta.num_classes, graphs)?;
    if let Some(declared) = meta.total_edges {
        let actual = ds.total_edges();
        if declared != actual {
            return Err(Error::Validation(format!(
                "meta.json declares {declared} total edges but graphs hold {actual}"
            )));
        }
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use tempfile::tempdir;

    fn snap(n: usize, active: &[u32], edges: &[(u32, u32)]) -> Snapshot {
        Snapshot::from_parts(n, active, edges).unwrap()
    }

    fn small_dataset() -> Dataset {
        Dataset::new(
            "toy",
            4,
            2,
            vec![
                TemporalGraph {
                    snapshots: vec![snap(4, &[0], &[(0, 1)]), snap(4, &[0, 1], &[(1, 2), (0, 3)])],
                    label: 0,
                },
                TemporalGraph {
                    snapshots: vec![snap(4, &[2], &[(2, 3)])],
                    label: 1,
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_small() {
        let ds = small_dataset();
        let dir = tempdir().unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(ds, loaded);
    }

    #[test]
    fn self_loop_rejected() {
        let err = Snapshot::from_parts(6, &[], &[(5, 5)]).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn out_of_range_vertex_rejected() {
        assert!(Snapshot::from_parts(4, &[7], &[]).is_err());
        assert!(Snapshot::from_parts(4, &[], &[(0, 9)]).is_err());
    }

    #[test]
    fn edges_deduplicated_and_normalized() {
        let s = snap(4, &[], &[(3, 1), (1, 3), (0, 2)]);
        assert_eq!(s.edges, vec![(0, 2), (1, 3)]);
    }

    #[test]
    fn empty_dataset_rejected() {
        assert!(Dataset::new("e", 4, 2, vec![]).is_err());
    }

    #[test]
    fn missing_class_rejected() {
        let g = TemporalGraph {
            snapshots: vec![snap(4, &[], &[(0, 1)])],
            label: 0,
        };
        assert!(Dataset::new("m", 4, 2, vec![g]).is_err());
    }

    #[test]
    fn unknown_label_fails_load() {
        let ds = small_dataset();
        let dir = tempdir().unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        // Rewrite meta with fewer classes than the graphs use.
        let meta_path = dir.path().join("meta.json");
        let meta = std::fs::read_to_string(&meta_path).unwrap();
        std::fs::write(&meta_path, meta.replace("\"num_classes\": 2", "\"num_classes\": 1"))
            .unwrap();
        assert!(load_dataset(dir.path()).is_err());
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let ds = small_dataset();
        let dir = tempdir().unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        let graphs_path = dir.path().join("graphs.jsonl");
        let mut body = std::fs::read_to_string(&graphs_path).unwrap();
        body.push_str("{not json\n");
        std::fs::write(&graphs_path, body).unwrap();
        // Line count no longer matches meta, but the parse error comes first.
        match load_dataset(dir.path()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn filter_identity_when_no_empty_snapshots() {
        let g = small_dataset().graphs[0].clone();
        assert_eq!(filter_empty_snapshots(&g).unwrap(), g);
    }

    #[test]
    fn filter_removes_empty_preserving_order() {
        let a = snap(4, &[0], &[(0, 1)]);
        let b = snap(4, &[1], &[(1, 2)]);
        let g = TemporalGraph {
            snapshots: vec![Snapshot::empty(4), a.clone(), Snapshot::empty(4), b.clone()],
            label: 0,
        };
        let filtered = filter_empty_snapshots(&g).unwrap();
        assert_eq!(filtered.snapshots, vec![a, b]);
        assert_eq!(filtered.num_steps(), 2);
    }

    #[test]
    fn filter_all_empty_is_degenerate() {
        let g = TemporalGraph {
            snapshots: vec![Snapshot::empty(4); 3],
            label: 0,
        };
        assert!(matches!(
            filter_empty_snapshots(&g),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn filter_is_idempotent() {
        let mut rng = crate::rng::rng_from_seed(11);
        for _ in 0..20 {
            let snapshots: Vec<Snapshot> = (0..10)
                .map(|_| {
                    if rng.gen_bool(0.3) {
                        Snapshot::empty(5)
                    } else {
                        snap(5, &[], &[(rng.gen_range(0..4), 4)])
                    }
                })
                .collect();
            let g = TemporalGraph { snapshots, label: 0 };
            if let Ok(once) = filter_empty_snapshots(&g) {
                let twice = filter_empty_snapshots(&once).unwrap();
                assert_eq!(once, twice);
                let expected = g.snapshots.iter().filter(|s| !s.has_no_edges()).count();
                assert_eq!(once.num_steps(), expected);
            }
        }
    }

    #[test]
    fn stats_single_edge() {
        let ds = Dataset::new(
            "one",
            2,
            1,
            vec![TemporalGraph {
                snapshots: vec![snap(2, &[], &[(0, 1)])],
                label: 0,
            }],
        )
        .unwrap();
        let stats = compute_stats(&ds).unwrap();
        assert_eq!(stats.total_edges, 1);
        // Single edge: spectral radius of [[0,1],[1,0]] is 1.
        assert!((stats.max_adjacency_spectral_radius - 1.0).abs() < 1e-6);
    }

    #[test]
    fn stats_total_edges_matches_recount() {
        let mut rng = crate::rng::rng_from_seed(5);
        let graphs: Vec<TemporalGraph> = (0..6)
            .map(|i| {
                let snapshots = (0..4)
                    .map(|_| {
                        let edges: Vec<(u32, u32)> = (0..5u32)
                            .flat_map(|a| ((a + 1)..6).map(move |b| (a, b)))
                            .filter(|_| rng.gen_bool(0.4))
                            .collect();
                        Snapshot::from_parts(6, &[], &edges)
                            .unwrap_or_else(|_| Snapshot::empty(6))
                    })
                    .collect();
                TemporalGraph {
                    snapshots,
                    label: i % 2,
                }
            })
            .collect();
        let ds = Dataset::new("rand", 6, 2, graphs).unwrap();
        let stats = compute_stats(&ds).unwrap();
        let recount: u64 = ds
            .graphs
            .iter()
            .flat_map(|g| g.snapshots.iter())
            .map(|s| s.edges.len() as u64)
            .sum();
        assert_eq!(stats.total_edges, recount);
    }

    #[test]
    fn dense_adjacency_is_symmetric() {
        let s = snap(5, &[], &[(0, 3), (1, 4), (2, 3)]);
        let m = s.dense_adjacency();
        assert_eq!(m, m.transpose());
        assert_eq!(m.sum(), 6.0);
    }
}
