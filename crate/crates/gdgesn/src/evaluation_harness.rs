//! Experiment protocol: shuffled 10-fold cross-validation with repeated
//! random reservoir initializations, the accuracy metric, and the
//! layers-by-groups grid sweep.
//!
//! The ESP rescaling basis for each fold is computed from training-fold
//! graphs only. Run `r` of fold `f` uses the derived seed
//! `mix3(master_seed, f, r)`, so any single cell can be re-run in
//! isolation.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::readout_classifier::{build_embedding, fit, predict, PooledEmbedding};
use crate::reservoir_encoder::{encode_graph, init_stack, spectral_radius, EncoderConfig};
use crate::rng::mix3;
use crate::snapshot_merging::{merge_all_groups, MergedTemporalGraph, WindowSchedule};
use crate::temporal_graph::{Dataset, DatasetStats, STATS_RHO_TOL};

/// Cross-validation protocol parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVProtocol {
    pub num_folds: usize,
    pub num_random_inits: usize,
    pub master_seed: u64,
    pub shuffle: bool,
}

impl Default for CVProtocol {
    fn default() -> Self {
        CVProtocol {
            num_folds: 10,
            num_random_inits: 20,
            master_seed: 0,
            shuffle: true,
        }
    }
}

/// Grid of (layers, groups) combinations for the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub layers: Vec<usize>,
    pub groups: Vec<usize>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            layers: vec![1, 2, 3, 4],
            groups: vec![1, 2, 3],
        }
    }
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() || self.groups.is_empty() {
            return Err(Error::Parameter("sweep grid ranges must be nonempty".into()));
        }
        if self.layers.iter().chain(&self.groups).any(|&v| v == 0) {
            return Err(Error::Parameter("grid values must be >= 1".into()));
        }
        Ok(())
    }
}

/// Result of one fold-and-init run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub fold: usize,
    pub init: usize,
    pub seed: u64,
    pub accuracy: f64,
}

/// Wall time split by pipeline phase, in seconds, summed over runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub merge_secs: f64,
    pub encode_secs: f64,
    pub readout_secs: f64,
}

/// Aggregated cross-validation report for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset_name: String,
    pub num_graphs: usize,
    pub config: EncoderConfig,
    pub ridge_gamma: f64,
    pub protocol: CVProtocol,
    /// Mean accuracy (percent) over all fold x init runs.
    pub mean_accuracy: f64,
    /// Standard deviation (percent) over all fold x init runs.
    pub std_accuracy: f64,
    pub runs: Vec<RunResult>,
    /// Wall-clock only; kept out of the JSON so identical flags produce
    /// byte-identical report files. The text rendering still shows it.
    #[serde(skip)]
    pub timing: PhaseTiming,
}

/// One cell of the grid sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub num_groups: usize,
    pub num_layers: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub dataset_name: String,
    pub base_config: EncoderConfig,
    pub ridge_gamma: f64,
    pub protocol: CVProtocol,
    pub cells: Vec<SweepCell>,
}

/// Classification accuracy in percent.
pub fn accuracy(predictions: &[usize], truths: &[usize]) -> Result<f64> {
    if predictions.is_empty() || predictions.len() != truths.len() {
        return Err(Error::Parameter(
            "predictions and truths must be nonempty and equal length".into(),
        ));
    }
    let correct = predictions
        .iter()
        .zip(truths)
        .filter(|(p, t)| p == t)
        .count();
    Ok(100.0 * correct as f64 / predictions.len() as f64)
}

/// Shuffled cyclic partition into `num_folds` (train, test) index pairs.
pub fn make_folds(ds: &Dataset, proto: &CVProtocol) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    let n = ds.num_graphs();
    if proto.num_folds < 2 {
        return Err(Error::Parameter("cross-validation needs >= 2 folds".into()));
    }
    if n < proto.num_folds {
        return Err(Error::Parameter(format!(
            "{} graphs cannot fill {} folds",
            n, proto.num_folds
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    if proto.shuffle {
        // Fisher-Yates driven by the master seed.
        use rand::Rng;
        let mut rng = crate::rng::rng_from_seed(crate::rng::mix2(proto.master_seed, 0xf01d));
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
    }
    let folds: Vec<Vec<usize>> = (0..proto.num_folds)
        .map(|f| order.iter().copied().skip(f).step_by(proto.num_folds).collect())
        .collect();
    Ok((0..proto.num_folds)
        .map(|f| {
            let test = folds[f].clone();
            let train = folds
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != f)
                .flat_map(|(_, fold)| fold.iter().copied())
                .collect();
            (train, test)
        })
        .collect())
}

/// ESP basis for a fold: max adjacency spectral radius over the chosen
/// graphs' merged views.
pub fn fold_esp_basis(per_graph_rho: &[f64], train: &[usize]) -> f64 {
    train
        .iter()
        .map(|&s| per_graph_rho[s])
        .fold(0.0f64, f64::max)
}

/// Max spectral radius of each graph's widest merged view.
///
/// Window containment makes the widest window's merged adjacency a
/// superset of every narrower one at each step, so its spectral radius
/// is the max across groups.
fn per_graph_merged_rho(views: &[Vec<MergedTemporalGraph>]) -> Result<Vec<f64>> {
    views
        .par_iter()
        .map(|graph_views| {
            let widest = graph_views
                .iter()
                .max_by_key(|v| v.window)
                .expect("at least one group");
            let mut rho = 0.0f64;
            for snap in &widest.snapshots {
                if snap.has_no_edges() {
                    continue;
                }
                rho = rho.max(spectral_radius(
                    &snap.dense_adjacency(),
                    STATS_RHO_TOL,
                    10_000,
                )?);
            }
            Ok(rho)
        })
        .collect()
}

struct JobOutcome {
    result: RunResult,
    encode_secs: f64,
    readout_secs: f64,
}

/// Full cross-validation: per (fold, init), rescale and initialize the
/// stack from training-fold stats, encode all graphs, fit the readout on
/// the training fold, and score the held-out fold.
pub fn run_cv(
    ds: &Dataset,
    cfg: &EncoderConfig,
    ridge_gamma: f64,
    proto: &CVProtocol,
) -> Result<RunReport> {
    cfg.validate()?;
    ds.validate()?;
    let merge_start = Instant::now();
    let sched = WindowSchedule::default_for_groups(cfg.num_groups)?;
    let views: Vec<Vec<MergedTemporalGraph>> = ds
        .graphs
        .par_iter()
        .map(|g| merge_all_groups(g, &sched))
        .collect::<Result<_>>()?;
    let per_graph_rho = per_graph_merged_rho(&views)?;
    let merge_secs = merge_start.elapsed().as_secs_f64();

    let folds = make_folds(ds, proto)?;
    let labels: Vec<usize> = ds.graphs.iter().map(|g| g.label).collect();

    let jobs: Vec<(usize, usize)> = (0..folds.len())
        .flat_map(|f| (0..proto.num_random_inits).map(move |r| (f, r)))
        .collect();

    let outcomes: Vec<JobOutcome> = jobs
        .par_iter()
        .map(|&(fold, init)| -> Result<JobOutcome> {
            let (train, test) = &folds[fold];
            let seed = mix3(proto.master_seed, fold as u64, init as u64);
            let basis = fold_esp_basis(&per_graph_rho, train);
            let stats = DatasetStats {
                total_edges: 0,
                max_adjacency_spectral_radius: basis,
                graph_lengths: Vec::new(),
            };
            let job_cfg = EncoderConfig {
                rng_seed: seed,
                ..cfg.clone()
            };
            let stack = init_stack(&job_cfg, &stats)?;

            let encode_start = Instant::now();
            let embed = |s: usize| -> Result<PooledEmbedding> {
                build_embedding(&encode_graph(&stack, &views[s])?)
            };
            let train_embs: Vec<PooledEmbedding> =
                train.iter().map(|&s| embed(s)).collect::<Result<_>>()?;
            let test_embs: Vec<PooledEmbedding> =
                test.iter().map(|&s| embed(s)).collect::<Result<_>>()?;
            let encode_secs = encode_start.elapsed().as_secs_f64();

            let readout_start = Instant::now();
            let train_labels: Vec<usize> = train.iter().map(|&s| labels[s]).collect();
            let model = fit(&train_embs, &train_labels, ridge_gamma, ds.num_classes)?;
            let predictions: Vec<usize> =
                test_embs.iter().map(|e| predict(&model, e).1).collect();
            let truths: Vec<usize> = test.iter().map(|&s| labels[s]).collect();
            let readout_secs = readout_start.elapsed().as_secs_f64();

            Ok(JobOutcome {
                result: RunResult {
                    fold,
                    init,
                    seed,
                    accuracy: accuracy(&predictions, &truths)?,
                },
                encode_secs,
                readout_secs,
            })
        })
        .collect::<Result<_>>()?;

    let accs: Vec<f64> = outcomes.iter().map(|o| o.result.accuracy).collect();
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    let var = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / accs.len() as f64;
    let timing = PhaseTiming {
        merge_secs,
        encode_secs: outcomes.iter().map(|o| o.encode_secs).sum(),
        readout_secs: outcomes.iter().map(|o| o.readout_secs).sum(),
    };
    Ok(RunReport {
        dataset_name: ds.name.clone(),
        num_graphs: ds.num_graphs(),
        config: cfg.clone(),
        ridge_gamma,
        protocol: proto.clone(),
        mean_accuracy: mean,
        std_accuracy: var.sqrt(),
        runs: outcomes.into_iter().map(|o| o.result).collect(),
        timing,
    })
}

/// One [`run_cv`] per grid cell.
pub fn run_sweep(
    ds: &Dataset,
    base_cfg: &EncoderConfig,
    ridge_gamma: f64,
    grid: &SweepGrid,
    proto: &CVProtocol,
) -> Result<SweepReport> {
    grid.validate()?;
    let mut cells = Vec::with_capacity(grid.groups.len() * grid.layers.len());
    for &num_groups in &grid.groups {
        for &num_layers in &grid.layers {
            let cfg = EncoderConfig {
                num_groups,
                num_layers,
                ..base_cfg.clone()
            };
            let report = run_cv(ds, &cfg, ridge_gamma, proto)?;
            cells.push(SweepCell {
                num_groups,
                num_layers,
                mean_accuracy: report.mean_accuracy,
                std_accuracy: report.std_accuracy,
            });
        }
    }
    Ok(SweepReport {
        dataset_name: ds.name.clone(),
        base_config: base_cfg.clone(),
        ridge_gamma,
        protocol: proto.clone(),
        cells,
    })
}

/// Aligned plain-text table of a sweep: rows are layers, columns groups.
pub fn render_sweep_table(report: &SweepReport) -> String {
    let mut groups: Vec<usize> = report.cells.iter().map(|c| c.num_groups).collect();
    groups.sort_unstable();
    groups.dedup();
    let mut layers: Vec<usize> = report.cells.iter().map(|c| c.num_layers).collect();
    layers.sort_unstable();
    layers.dedup();

    let mut out = String::new();
    out.push_str(&format!("{:>8}", "N_L\\N_G"));
    for g in &groups {
        out.push_str(&format!("{:>16}", format!("N_G={g}")));
    }
    out.push('\n');
    for l in &layers {
        out.push_str(&format!("{:>8}", format!("N_L={l}")));
        for g in &groups {
            let cell = report
                .cells
                .iter()
                .find(|c| c.num_groups == *g && c.num_layers == *l);
            match cell {
                Some(c) => out.push_str(&format!(
                    "{:>16}",
                    format!("{:.1} ({:.1})", c.mean_accuracy, c.std_accuracy)
                )),
                None => out.push_str(&format!("{:>16}", "-")),
            }
        }
        out.push('\n');
    }
    out
}

/// CSV of per-cell means and standard deviations.
pub fn render_sweep_csv(report: &SweepReport) -> String {
    let mut out = String::from("num_groups,num_layers,mean_accuracy,std_accuracy\n");
    for c in &report.cells {
        out.push_str(&format!(
            "{},{},{:.6},{:.6}\n",
            c.num_groups, c.num_layers, c.mean_accuracy, c.std_accuracy
        ));
    }
    out
}

/// Plain-text summary of a single CV report.
pub fn render_cv_report(report: &RunReport) -> String {
    let c = &report.config;
    let mut out = String::new();
    out.push_str(&format!(
        "dataset: {} ({} graphs)\n",
        report.dataset_name, report.num_graphs
    ));
    out.push_str(&format!(
        "config: N_R={} rho={} alpha={} eta={} phi={} N_L={} N_G={} gamma={}\n",
        c.reservoir_size,
        c.spectral_radius_target,
        c.leaking_rate,
        c.input_scaling,
        c.reservoir_density,
        c.num_layers,
        c.num_groups,
        report.ridge_gamma
    ));
    out.push_str(&format!(
        "protocol: {} folds x {} inits, seed {}\n",
        report.protocol.num_folds, report.protocol.num_random_inits, report.protocol.master_seed
    ));
    out.push_str(&format!(
        "accuracy: {:.2} +/- {:.2} %\n",
        report.mean_accuracy, report.std_accuracy
    ));
    out.push_str(&format!(
        "timing: merge {:.2}s, encode {:.2}s, readout {:.2}s\n",
        report.timing.merge_secs, report.timing.encode_secs, report.timing.readout_secs
    ));
    out
}
