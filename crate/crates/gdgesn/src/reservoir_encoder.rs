//! Grouped, layered reservoir encoders.
//!
//! Each encoder is a fixed random pair `(W_in, W_res)`. The state update
//! over a dynamic adjacency is
//!
//! ```text
//! X(t) = alpha * tanh(W_in U(t) + W_res X(t-1) A(t)) + (1 - alpha) * X(t-1)
//! ```
//!
//! where `U(t)` is the merged vertex signal for layer 1 and the same-time
//! state of the previous layer otherwise. The echo state property is
//! enforced by rescaling every `W_res` so that its spectral radius times
//! the largest adjacency spectral radius seen in training stays below 1.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{mix3, rng_from_seed};
use crate::snapshot_merging::MergedTemporalGraph;
use crate::temporal_graph::DatasetStats;

/// State of one encoder at one time step: `reservoir_size x num_vertices`.
pub type VertexEmbedding = DMatrix<f64>;

/// Shared hyperparameters for the whole encoder grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub reservoir_size: usize,
    pub spectral_radius_target: f64,
    pub leaking_rate: f64,
    pub input_scaling: f64,
    pub reservoir_density: f64,
    pub num_layers: usize,
    pub num_groups: usize,
    pub rng_seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            reservoir_size: 10,
            spectral_radius_target: 0.9,
            leaking_rate: 0.1,
            input_scaling: 1.0,
            reservoir_density: 1.0,
            num_layers: 1,
            num_groups: 1,
            rng_seed: 0,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reservoir_size == 0 || self.num_layers == 0 || self.num_groups == 0 {
            return Err(Error::Parameter(
                "reservoir_size, num_layers, num_groups must be >= 1".into(),
            ));
        }
        if !(self.leaking_rate > 0.0 && self.leaking_rate <= 1.0) {
            return Err(Error::Parameter("leaking_rate must be in (0, 1]".into()));
        }
        if !(self.reservoir_density > 0.0 && self.reservoir_density <= 1.0) {
            return Err(Error::Parameter("reservoir_density must be in (0, 1]".into()));
        }
        if self.spectral_radius_target <= 0.0 {
            return Err(Error::Parameter("spectral_radius_target must be > 0".into()));
        }
        Ok(())
    }

    /// Length of the concatenated pooled embedding.
    pub fn embedding_dim(&self) -> usize {
        self.reservoir_size * self.num_groups * self.num_layers
    }
}

/// Fixed random weights of a single encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirEncoderParams {
    /// `reservoir_size x 1` for layer 1, square for deeper layers.
    pub input_weights: DMatrix<f64>,
    pub reservoir_weights: DMatrix<f64>,
}

/// The full `num_groups x num_layers` grid plus its config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirStack {
    /// Group-major: entry `g * num_layers + l`.
    grid: Vec<ReservoirEncoderParams>,
    pub config: EncoderConfig,
    /// Max adjacency spectral radius used as the ESP rescaling basis.
    pub esp_scale_basis: f64,
}

impl ReservoirStack {
    pub fn encoder(&self, group: usize, layer: usize) -> &ReservoirEncoderParams {
        &self.grid[group * self.config.num_layers + layer]
    }

    pub fn encoders(&self) -> &[ReservoirEncoderParams] {
        &self.grid
    }
}

const COLLAPSE_NORM: f64 = 1e-140;
const MAX_RESTARTS: usize = 6;
const KRYLOV_DIM: usize = 6;

/// Dominant-eigenvalue magnitude by power iteration.
///
/// Each sweep projects onto a small Krylov subspace of the current iterate
/// so complex conjugate pairs and near-tied dominant moduli converge as
/// well as a real dominant eigenvalue would.
/// Restarts from a fresh random vector when the iterate collapses toward
/// the kernel; a matrix that swallows every restart is reported as
/// spectral radius zero (nilpotent case).
pub fn spectral_radius(m: &DMatrix<f64>, tol: f64, max_iters: usize) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::Parameter("matrix must be square".into()));
    }
    if tol <= 0.0 {
        return Err(Error::Parameter("tol must be > 0".into()));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    if m.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }

    // Restarts use a fixed internal stream so estimates are reproducible.
    let mut restart_rng = rng_from_seed(0x9d0c_57a1);
    let mut best_estimate = 0.0f64;

    // Krylov block size per outer step. A small projected eigenproblem keeps
    // near-tied dominant moduli (complex pairs, sign-flipped twins) from
    // stalling the plain iteration.
    let dim = KRYLOV_DIM.min(n);

    for _ in 0..MAX_RESTARTS {
        let mut u = DVector::<f64>::from_fn(n, |_, _| restart_rng.gen_range(-1.0..1.0));
        let norm = u.norm();
        if norm == 0.0 {
            continue;
        }
        u /= norm;

        let mut prev_est: Option<f64> = None;
        let mut stable = 0usize;
        let mut collapsed = false;
        let outer_budget = (max_iters / dim).max(1);
        for _ in 0..outer_budget {
            // Arnoldi factorization M Q_k = Q_{k+1} H_k from the current u.
            let mut basis: Vec<DVector<f64>> = vec![u.clone()];
            let mut h = DMatrix::<f64>::zeros(dim + 1, dim);
            let mut steps = 0usize;
            let mut exhausted = false;
            for i in 0..dim {
                let mut z = m * &basis[i];
                let scale = z.norm();
                for (j, q) in basis.iter().enumerate() {
                    let c = q.dot(&z);
                    h[(j, i)] = c;
                    z.axpy(-c, q, 1.0);
                }
                // Re-orthogonalize once; cheap and keeps H trustworthy.
                for (j, q) in basis.iter().enumerate() {
                    let c = q.dot(&z);
                    h[(j, i)] += c;
                    z.axpy(-c, q, 1.0);
                }
                let rem = z.norm();
                steps = i + 1;
                if rem <= 1e-13 * scale.max(f64::MIN_POSITIVE) {
                    // The Krylov space closed: H now holds the restriction of
                    // M to an exact invariant subspace containing u.
                    exhausted = true;
                    break;
                }
                h[(i + 1, i)] = rem;
                basis.push(z / rem);
            }

            let hk = h.view((0, 0), (steps, steps)).into_owned();
            let est = hk
                .complex_eigenvalues()
                .iter()
                .map(|ev| ev.norm())
                .fold(0.0f64, f64::max);
            best_estimate = est;

            if exhausted {
                // The eigensolver reports O(eps^(1/k)) ghosts for a
                // nilpotent restriction, so test nilpotency on H directly.
                let mut hp = hk.clone();
                for _ in 1..steps {
                    hp = &hp * &hk;
                }
                let scale = hk.norm().powi(steps as i32);
                if hp.norm() > scale * steps as f64 * f64::EPSILON && est > COLLAPSE_NORM {
                    return Ok(est);
                }
                // Invariant subspace of (numerical) nilpotent action; the
                // start vector may simply have missed the range. Restart.
                collapsed = true;
                break;
            }

            if prev_est.is_some_and(|p| (est - p).abs() <= tol * est.max(1.0)) {
                stable += 1;
                if stable >= 2 {
                    return Ok(est);
                }
            } else {
                stable = 0;
            }
            prev_est = Some(est);

            // Advance by a plain power sweep so successive Krylov spaces see
            // an increasingly dominant start vector.
            let mut p = u.clone();
            let mut dead = false;
            for _ in 0..dim {
                p = m * &p;
                let pn = p.norm();
                if pn < COLLAPSE_NORM {
                    dead = true;
                    break;
                }
                p /= pn;
            }
            if dead {
                collapsed = true;
                break;
            }
            u = p;
        }
        if !collapsed {
            return Err(Error::Numeric {
                message: format!("power iteration did not converge in {max_iters} iterations"),
                best_estimate,
            });
        }
        // Collapsed iterate: restart from a new random direction.
    }
    // Every restart decayed to (numerical) zero: nilpotent up to tolerance.
    Ok(0.0)
}

fn draw_reservoir_weights(
    rng: &mut rand_chacha::ChaCha8Rng,
    n: usize,
    density: f64,
) -> DMatrix<f64> {
    // Values first, then the sparsity mask, so the value stream is stable
    // across density changes.
    let mut w = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    if density < 1.0 {
        for x in w.iter_mut() {
            if !rng.gen_bool(density) {
                *x = 0.0;
            }
        }
    }
    w
}

/// Initialize the full encoder grid with ESP rescaling.
///
/// Each `W_res` is rescaled so its spectral radius equals
/// `spectral_radius_target / stats.max_adjacency_spectral_radius`, which
/// keeps `rho(W_res) * rho(A(t))` at the target (< 1) for every snapshot
/// that entered the stats.
pub fn init_stack(cfg: &EncoderConfig, stats: &DatasetStats) -> Result<ReservoirStack> {
    cfg.validate()?;
    if stats.max_adjacency_spectral_radius <= 0.0 {
        return Err(Error::Degenerate(
            "dataset has zero max adjacency spectral radius (no edges)".into(),
        ));
    }
    let target = cfg.spectral_radius_target / stats.max_adjacency_spectral_radius;
    let mut grid = Vec::with_capacity(cfg.num_groups * cfg.num_layers);
    for g in 0..cfg.num_groups {
        for l in 0..cfg.num_layers {
            let mut rng = rng_from_seed(mix3(cfg.rng_seed, g as u64, l as u64));
            let input_dim = if l == 0 { 1 } else { cfg.reservoir_size };
            let eta = cfg.input_scaling;
            let input_weights = DMatrix::<f64>::from_fn(cfg.reservoir_size, input_dim, |_, _| {
                rng.gen_range(-eta..=eta)
            });

            let mut reservoir_weights;
            let mut raw_rho;
            loop {
                reservoir_weights =
                    draw_reservoir_weights(&mut rng, cfg.reservoir_size, cfg.reservoir_density);
                raw_rho = spectral_radius(&reservoir_weights, 1e-10, 50_000)?;
                if raw_rho > 1e-12 {
                    break;
                }
                // All-zero or nilpotent draw (possible at low density):
                // redraw from the same stream.
            }
            reservoir_weights *= target / raw_rho;
            grid.push(ReservoirEncoderParams {
                input_weights,
                reservoir_weights,
            });
        }
    }
    Ok(ReservoirStack {
        grid,
        config: cfg.clone(),
        esp_scale_basis: stats.max_adjacency_spectral_radius,
    })
}

/// One leaky state update over a sparse adjacency.
///
/// The `X(t-1) A(t)` product is accumulated edge-wise, so the adjacency
/// part of the cost is proportional to the snapshot's edge count.
pub fn step(
    params: &ReservoirEncoderParams,
    prev: &VertexEmbedding,
    input: &DMatrix<f64>,
    edges: &[(u32, u32)],
    alpha: f64,
) -> VertexEmbedding {
    let n_r = params.reservoir_weights.nrows();
    let n_v = prev.ncols();
    assert_eq!(prev.nrows(), n_r, "state row dim != reservoir size");
    assert_eq!(input.nrows(), params.input_weights.ncols(), "input rows != W_in cols");
    assert_eq!(input.ncols(), n_v, "input cols != num vertices");

    // P = W_res X(t-1), then Y = P A(t) accumulated per edge.
    let p = &params.reservoir_weights * prev;
    let mut pre = &params.input_weights * input;
    for &(i, j) in edges {
        let (i, j) = (i as usize, j as usize);
        // Column j picks up column i and vice versa (A symmetric, 0 diag).
        for r in 0..n_r {
            let pi = p[(r, i)];
            let pj = p[(r, j)];
            pre[(r, j)] += pi;
            pre[(r, i)] += pj;
        }
    }
    pre.zip_map(prev, |z, x_prev| alpha * z.tanh() + (1.0 - alpha) * x_prev)
}

fn signal_row(signal: &[bool]) -> DMatrix<f64> {
    DMatrix::from_fn(1, signal.len(), |_, c| if signal[c] { 1.0 } else { 0.0 })
}

fn encode_impl(
    stack: &ReservoirStack,
    views: &[MergedTemporalGraph],
    initial: Option<&[VertexEmbedding]>,
    mut record: Option<&mut Vec<Vec<VertexEmbedding>>>,
) -> Result<Vec<VertexEmbedding>> {
    let cfg = &stack.config;
    if views.len() != cfg.num_groups {
        return Err(Error::Parameter(format!(
            "expected {} merged views, got {}",
            cfg.num_groups,
            views.len()
        )));
    }
    let n_t = views[0].num_steps();
    if views.iter().any(|v| v.num_steps() != n_t) {
        return Err(Error::Parameter("merged views differ in length".into()));
    }
    let n_v = views[0]
        .snapshots
        .first()
        .map(|s| s.num_vertices())
        .unwrap_or(0);

    let cells = cfg.num_groups * cfg.num_layers;
    let mut states: Vec<VertexEmbedding> = match initial {
        Some(init) => {
            if init.len() != cells {
                return Err(Error::Parameter("initial state grid size mismatch".into()));
            }
            init.to_vec()
        }
        None => vec![DMatrix::zeros(cfg.reservoir_size, n_v); cells],
    };

    for t in 0..n_t {
        for g in 0..cfg.num_groups {
            let snap = &views[g].snapshots[t];
            for l in 0..cfg.num_layers {
                let idx = g * cfg.num_layers + l;
                let params = stack.encoder(g, l);
                let next = if l == 0 {
                    let input = signal_row(&snap.signal);
                    step(params, &states[idx], &input, &snap.edges, cfg.leaking_rate)
                } else {
                    // Layer l consumes layer l-1's state at the same t.
                    let input = states[idx - 1].clone();
                    step(params, &states[idx], &input, &snap.edges, cfg.leaking_rate)
                };
                states[idx] = next;
            }
        }
        if let Some(rec) = record.as_deref_mut() {
            rec.push(states.clone());
        }
    }
    Ok(states)
}

/// Final-time states `X(N_T)` for every `(group, layer)` cell, zero-initialized.
/// Group-major order matching [`ReservoirStack::encoder`].
pub fn encode_graph(
    stack: &ReservoirStack,
    views: &[MergedTemporalGraph],
) -> Result<Vec<VertexEmbedding>> {
    encode_impl(stack, views, None, None)
}

/// Same as [`encode_graph`] but starting from a caller-supplied state grid.
pub fn encode_graph_with_initial(
    stack: &ReservoirStack,
    views: &[MergedTemporalGraph],
    initial: &[VertexEmbedding],
) -> Result<Vec<VertexEmbedding>> {
    encode_impl(stack, views, Some(initial), None)
}

/// Full state trajectory: element `t` holds the grid after step `t + 1`.
pub fn encode_graph_trajectory(
    stack: &ReservoirStack,
    views: &[MergedTemporalGraph],
    initial: Option<&[VertexEmbedding]>,
) -> Result<Vec<Vec<VertexEmbedding>>> {
    let mut trajectory = Vec::new();
    encode_impl(stack, views, initial, Some(&mut trajectory))?;
    Ok(trajectory)
}

/// Exact-numeric JSON persistence for a trained stack.
pub fn save_stack(stack: &ReservoirStack, path: &Path) -> Result<()> {
    let json = serde_json::to_string(stack).expect("stack serialization cannot fail");
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_stack(path: &Path) -> Result<ReservoirStack> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&raw).map_err(|e| Error::parse(path, e.line(), e.to_string()))
}
