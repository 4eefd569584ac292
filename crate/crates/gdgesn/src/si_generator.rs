//! Synthetic dissemination datasets: random temporal contact graphs with
//! Susceptible-Infected spreading, one infection probability per class.
//!
//! Transmission is per-contact Bernoulli: at step `t >= 2` a susceptible
//! vertex with `k` infected neighbors in `A(t)` becomes infected with
//! probability `1 - (1 - p)^k`. The simulation draws one uniform per
//! edge direction at every step regardless of infection state, so runs
//! with the same seed but different `p` are coupled monotonically.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rng::{mix3, rng_from_seed};
use crate::temporal_graph::{filter_empty_snapshots, Dataset, Snapshot, TemporalGraph};

#[derive(Debug, Clone, PartialEq)]
pub struct SIConfig {
    pub num_vertices: usize,
    pub num_timesteps: usize,
    pub graphs_per_class: usize,
    /// Infection probability of each class; the class count is the length.
    pub infection_probs: Vec<f64>,
    /// Per-pair per-step edge presence probability.
    pub contact_prob: f64,
    /// Number of seed-infected vertices at t = 1.
    pub initial_infected: usize,
    pub rng_seed: u64,
    pub name: String,
}

impl Default for SIConfig {
    fn default() -> Self {
        SIConfig {
            num_vertices: 60,
            num_timesteps: 50,
            graphs_per_class: 100,
            infection_probs: vec![0.2, 0.8],
            contact_prob: 0.05,
            initial_infected: 1,
            rng_seed: 0,
            name: "si-synthetic".into(),
        }
    }
}

impl SIConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_vertices == 0 || self.num_timesteps == 0 {
            return Err(Error::Parameter("num_vertices and num_timesteps must be >= 1".into()));
        }
        if self.graphs_per_class == 0 {
            return Err(Error::Parameter("graphs_per_class must be >= 1".into()));
        }
        if self.infection_probs.is_empty() {
            return Err(Error::Parameter("need at least one class probability".into()));
        }
        if self
            .infection_probs
            .iter()
            .chain(std::iter::once(&self.contact_prob))
            .any(|p| !(0.0..=1.0).contains(p))
        {
            return Err(Error::Parameter("probabilities must be in [0, 1]".into()));
        }
        if self.initial_infected == 0 || self.initial_infected > self.num_vertices {
            return Err(Error::Parameter(
                "initial_infected must be in [1, num_vertices]".into(),
            ));
        }
        Ok(())
    }
}

/// `num_timesteps` independent Erdos-Renyi edge lists.
pub fn generate_contact_sequence(cfg: &SIConfig, rng: &mut ChaCha8Rng) -> Vec<Vec<(u32, u32)>> {
    let n = cfg.num_vertices as u32;
    (0..cfg.num_timesteps)
        .map(|_| {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.gen_bool(cfg.contact_prob) {
                        edges.push((i, j));
                    }
                }
            }
            edges
        })
        .collect()
}

/// SI spread over a contact sequence. Returns the per-step signal
/// vectors; step 1 marks exactly the seed set and infection is absorbing.
pub fn run_si(
    contacts: &[Vec<(u32, u32)>],
    p: f64,
    seeds: &[usize],
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<bool>> {
    assert!(!seeds.is_empty(), "seed set must be nonempty");
    let num_vertices = seeds.iter().max().map_or(0, |&m| m + 1).max(
        contacts
            .iter()
            .flatten()
            .map(|&(_, j)| j as usize + 1)
            .max()
            .unwrap_or(0),
    );

    let mut state = vec![false; num_vertices];
    for &s in seeds {
        state[s] = true;
    }
    let mut signals = Vec::with_capacity(contacts.len());
    signals.push(state.clone());

    for snapshot_edges in contacts.iter().skip(1) {
        let mut next = state.clone();
        for &(i, j) in snapshot_edges {
            let (i, j) = (i as usize, j as usize);
            // Two draws per edge, always consumed, for monotone coupling.
            let u_ij: f64 = rng.gen();
            let u_ji: f64 = rng.gen();
            if state[i] && !state[j] && u_ij < p {
                next[j] = true;
            }
            if state[j] && !state[i] && u_ji < p {
                next[i] = true;
            }
        }
        state = next;
        signals.push(state.clone());
    }
    signals
}

/// Generate the full labeled dataset. Empty snapshots are filtered at
/// ingestion, so sequence lengths may differ across graphs.
pub fn generate_dataset(cfg: &SIConfig) -> Result<Dataset> {
    cfg.validate()?;
    let num_classes = cfg.infection_probs.len();
    let mut graphs = Vec::with_capacity(num_classes * cfg.graphs_per_class);
    for (class, &p) in cfg.infection_probs.iter().enumerate() {
        for idx in 0..cfg.graphs_per_class {
            let mut rng = rng_from_seed(mix3(cfg.rng_seed, class as u64, idx as u64));
            let contacts = generate_contact_sequence(cfg, &mut rng);
            let seeds = draw_seeds(cfg, &mut rng);
            let signals = run_si(&contacts, p, &seeds, &mut rng);

            let snapshots: Vec<Snapshot> = contacts
                .iter()
                .zip(&signals)
                .map(|(edges, signal)| {
                    let mut sig = signal.clone();
                    sig.resize(cfg.num_vertices, false);
                    Snapshot {
                        signal: sig,
                        edges: edges.clone(),
                    }
                })
                .collect();
            let raw = TemporalGraph {
                snapshots,
                label: class,
            };
            graphs.push(filter_empty_snapshots(&raw).map_err(|_| {
                Error::Degenerate(format!(
                    "class {class} graph {idx}: every contact snapshot is empty; \
                     raise contact_prob or num_vertices"
                ))
            })?);
        }
    }
    Dataset::new(cfg.name.clone(), cfg.num_vertices, num_classes, graphs)
}

fn draw_seeds(cfg: &SIConfig, rng: &mut ChaCha8Rng) -> Vec<usize> {
    // Sample without replacement by shuffling a prefix selection.
    let mut ids: Vec<usize> = (0..cfg.num_vertices).collect();
    for k in 0..cfg.initial_infected {
        let pick = rng.gen_range(k..cfg.num_vertices);
        ids.swap(k, pick);
    }
    ids.truncate(cfg.initial_infected);
    ids
}
