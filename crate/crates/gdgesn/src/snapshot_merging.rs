//! Merged snapshot converter: zero-padding plus a sliding-window logical
//! OR over signals and adjacencies, producing one merged view per group.

use crate::error::{Error, Result};
use crate::temporal_graph::{Snapshot, TemporalGraph};

/// Window sizes for the group-wise merged views.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowSchedule {
    pub window_sizes: Vec<usize>,
}

impl WindowSchedule {
    /// The default schedule: window `2g - 1` for group `g = 1..=num_groups`.
    pub fn default_for_groups(num_groups: usize) -> Result<Self> {
        if num_groups == 0 {
            return Err(Error::Parameter("num_groups must be >= 1".into()));
        }
        Ok(WindowSchedule {
            window_sizes: (1..=num_groups).map(|g| 2 * g - 1).collect(),
        })
    }

    pub fn from_windows(window_sizes: Vec<usize>) -> Result<Self> {
        if window_sizes.is_empty() {
            return Err(Error::Parameter("window schedule must be nonempty".into()));
        }
        if window_sizes.iter().any(|&w| w == 0) {
            return Err(Error::Parameter("window sizes must be >= 1".into()));
        }
        Ok(WindowSchedule { window_sizes })
    }

    pub fn num_groups(&self) -> usize {
        self.window_sizes.len()
    }
}

/// A per-group merged view of a temporal graph. Same length as the source;
/// snapshot `t` is the OR of source snapshots over the trailing window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergedTemporalGraph {
    /// Zero-based group index into the schedule.
    pub group_index: usize,
    pub window: usize,
    pub snapshots: Vec<Snapshot>,
}

impl MergedTemporalGraph {
    pub fn num_steps(&self) -> usize {
        self.snapshots.len()
    }
}

/// Prepend `window - 1` empty snapshots, giving length `N_T + window - 1`.
pub fn pad_sequence(g: &TemporalGraph, window: usize) -> Result<Vec<Snapshot>> {
    if window == 0 {
        return Err(Error::Parameter("window must be >= 1".into()));
    }
    let n_v = g.num_vertices();
    let mut padded = Vec::with_capacity(g.num_steps() + window - 1);
    padded.extend(std::iter::repeat_with(|| Snapshot::empty(n_v)).take(window - 1));
    padded.extend(g.snapshots.iter().cloned());
    Ok(padded)
}

fn or_window(window_snaps: &[&Snapshot], num_vertices: usize) -> Snapshot {
    let mut signal = vec![false; num_vertices];
    let mut edges: Vec<(u32, u32)> = Vec::new();
    for snap in window_snaps {
        for (dst, &src) in signal.iter_mut().zip(&snap.signal) {
            *dst |= src;
        }
        edges.extend_from_slice(&snap.edges);
    }
    edges.sort_unstable();
    edges.dedup();
    Snapshot { signal, edges }
}

/// Sliding-window OR merge with stride 1 over the padded sequence.
pub fn merge(g: &TemporalGraph, window: usize) -> Result<MergedTemporalGraph> {
    let padded = pad_sequence(g, window)?;
    let n_v = g.num_vertices();
    let snapshots = (0..g.num_steps())
        .map(|t| {
            let window_snaps: Vec<&Snapshot> = padded[t..t + window].iter().collect();
            or_window(&window_snaps, n_v)
        })
        .collect();
    Ok(MergedTemporalGraph {
        group_index: 0,
        window,
        snapshots,
    })
}

/// One merged view per group in the schedule.
pub fn merge_all_groups(
    g: &TemporalGraph,
    sched: &WindowSchedule,
) -> Result<Vec<MergedTemporalGraph>> {
    sched
        .window_sizes
        .iter()
        .enumerate()
        .map(|(idx, &w)| {
            let mut view = merge(g, w)?;
            view.group_index = idx;
            Ok(view)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn snap(n: usize, active: &[u32], edges: &[(u32, u32)]) -> Snapshot {
        Snapshot::from_parts(n, active, edges).unwrap()
    }

    fn graph(snapshots: Vec<Snapshot>) -> TemporalGraph {
        TemporalGraph { snapshots, label: 0 }
    }

    /// Naive triple-loop oracle: for every t, vertex, and pair, OR the
    /// source values over the trailing window (indices below 0 are empty).
    fn naive_merge(g: &TemporalGraph, window: usize) -> Vec<Snapshot> {
        let n_v = g.num_vertices();
        let n_t = g.num_steps();
        (0..n_t)
            .map(|t| {
                let mut signal = vec![false; n_v];
                let mut edges = Vec::new();
                for i in 0..n_v {
                    for k in 0..window {
                        if t >= k && g.snapshots[t - k].signal[i] {
                            signal[i] = true;
                        }
                    }
                }
                for i in 0..n_v as u32 {
                    for j in (i + 1)..n_v as u32 {
                        let mut present = false;
                        for k in 0..window {
                            if t >= k && g.snapshots[t - k].edges.contains(&(i, j)) {
                                present = true;
                            }
                        }
                        if present {
                            edges.push((i, j));
                        }
                    }
                }
                Snapshot { signal, edges }
            })
            .collect()
    }

    fn arbitrary_graph() -> impl Strategy<Value = TemporalGraph> {
        (2usize..=8, 1usize..=10).prop_flat_map(|(n_v, n_t)| {
            let snap_strategy = (
                proptest::collection::vec(any::<bool>(), n_v),
                proptest::collection::vec(
                    (0..n_v as u32, 0..n_v as u32).prop_filter("no loop", |(a, b)| a != b),
                    0..=n_v * 2,
                ),
            )
                .prop_map(move |(signal_bits, raw_edges)| {
                    let active: Vec<u32> = signal_bits
                        .iter()
                        .enumerate()
                        .filter_map(|(i, &b)| b.then_some(i as u32))
                        .collect();
                    Snapshot::from_parts(n_v, &active, &raw_edges).unwrap()
                });
            proptest::collection::vec(snap_strategy, n_t).prop_map(graph)
        })
    }

    #[test]
    fn window_one_is_identity() {
        let g = graph(vec![
            snap(3, &[0], &[(0, 1)]),
            snap(3, &[1], &[(1, 2)]),
        ]);
        let merged = merge(&g, 1).unwrap();
        assert_eq!(merged.snapshots, g.snapshots);
        assert_eq!(pad_sequence(&g, 1).unwrap(), g.snapshots);
    }

    #[test]
    fn zero_window_rejected() {
        let g = graph(vec![snap(2, &[], &[])]);
        assert!(pad_sequence(&g, 0).is_err());
        assert!(merge(&g, 0).is_err());
    }

    #[test]
    fn pad_length_and_prefix() {
        let g = graph((0..48).map(|_| snap(3, &[0], &[(0, 2)])).collect());
        let padded = pad_sequence(&g, 3).unwrap();
        assert_eq!(padded.len(), 50);
        assert_eq!(padded[0], Snapshot::empty(3));
        assert_eq!(padded[1], Snapshot::empty(3));
        assert_eq!(padded[2], g.snapshots[0]);
    }

    #[test]
    fn pad_index_shift() {
        let g = graph((0..7u32).map(|i| snap(8, &[i], &[(i, i + 1)])).collect());
        let w = 5;
        let padded = pad_sequence(&g, w).unwrap();
        for k in (w - 1)..padded.len() {
            assert_eq!(padded[k], g.snapshots[k + 1 - w]);
        }
    }

    #[test]
    fn signal_merge_example() {
        // Single-vertex signal [1, 0, 0] with window 2 -> [1, 1, 0].
        let g = graph(vec![snap(1, &[0], &[]), snap(1, &[], &[]), snap(1, &[], &[])]);
        let merged = merge(&g, 2).unwrap();
        let signals: Vec<bool> = merged.snapshots.iter().map(|s| s.signal[0]).collect();
        assert_eq!(signals, vec![true, true, false]);
    }

    #[test]
    fn edge_merge_example() {
        let g = graph(vec![snap(3, &[], &[(0, 1)]), snap(3, &[], &[(1, 2)])]);
        let merged = merge(&g, 2).unwrap();
        assert_eq!(merged.snapshots[0].edges, vec![(0, 1)]);
        assert_eq!(merged.snapshots[1].edges, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn default_schedule_windows() {
        let sched = WindowSchedule::default_for_groups(3).unwrap();
        assert_eq!(sched.window_sizes, vec![1, 3, 5]);
        assert!(WindowSchedule::default_for_groups(0).is_err());
    }

    #[test]
    fn group_one_equals_input() {
        let g = graph(vec![snap(3, &[1], &[(0, 2)]), snap(3, &[2], &[(1, 2)])]);
        let sched = WindowSchedule::default_for_groups(1).unwrap();
        let views = merge_all_groups(&g, &sched).unwrap();
        assert_eq!(views.len(), 1);
        assert_eq!(views[0].snapshots, g.snapshots);
    }

    #[test]
    fn groups_match_individual_merges() {
        let g = graph(vec![
            snap(4, &[0], &[(0, 1)]),
            snap(4, &[3], &[(2, 3)]),
            snap(4, &[1], &[(1, 2)]),
        ]);
        let sched = WindowSchedule::default_for_groups(2).unwrap();
        let views = merge_all_groups(&g, &sched).unwrap();
        for (idx, view) in views.iter().enumerate() {
            let solo = merge(&g, sched.window_sizes[idx]).unwrap();
            assert_eq!(view.snapshots, solo.snapshots);
            assert_eq!(view.group_index, idx);
        }
    }

    proptest! {
        #[test]
        fn matches_naive_oracle(g in arbitrary_graph(), w in 1usize..=4) {
            let merged = merge(&g, w).unwrap();
            prop_assert_eq!(merged.snapshots, naive_merge(&g, w));
        }

        #[test]
        fn preserves_length(g in arbitrary_graph(), w in 1usize..=6) {
            prop_assert_eq!(merge(&g, w).unwrap().num_steps(), g.num_steps());
        }

        #[test]
        fn monotone_in_window(g in arbitrary_graph(), w in 1usize..=4) {
            let small = merge(&g, w).unwrap();
            let large = merge(&g, w + 2).unwrap();
            for (a, b) in small.snapshots.iter().zip(&large.snapshots) {
                for (x, y) in a.signal.iter().zip(&b.signal) {
                    prop_assert!(!*x || *y);
                }
                for e in &a.edges {
                    prop_assert!(b.edges.contains(e));
                }
            }
        }
    }

    #[test]
    fn saturated_input_stays_saturated() {
        let g = graph(vec![snap(2, &[0, 1], &[(0, 1)]); 5]);
        let merged = merge(&g, 3).unwrap();
        for s in &merged.snapshots {
            assert_eq!(s.signal, vec![true, true]);
            assert_eq!(s.edges, vec![(0, 1)]);
        }
    }
}
