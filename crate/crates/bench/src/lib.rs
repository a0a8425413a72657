//! Fixtures shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use soppp::games::{build_cb_graph, build_hs_graph, CbGraph, HsGraph};
use soppp::LogWeights;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Log-weights drawn uniformly from `[-spread, 0]`.
pub fn random_weights<R: Rng>(edge_count: usize, spread: f64, rng: &mut R) -> LogWeights {
    LogWeights::from_log(
        (0..edge_count)
            .map(|_| -spread * rng.gen::<f64>())
            .collect(),
    )
    .expect("finite log-weights")
}

/// Blotto graphs used across benches, as `(label, graph)`.
pub fn blotto_graphs() -> Vec<(String, CbGraph)> {
    [(3, 3), (5, 5), (10, 5)]
        .into_iter()
        .map(|(k, n)| {
            (
                format!("cb_{k}_{n}"),
                build_cb_graph(k, n).expect("valid game"),
            )
        })
        .collect()
}

pub fn hide_seek_graphs() -> Vec<(String, HsGraph)> {
    [(3, 3, 1), (6, 4, 2)]
        .into_iter()
        .map(|(k, n, kappa)| {
            (
                format!("hs_{k}_{n}_{kappa}"),
                build_hs_graph(k, n, kappa).expect("valid game"),
            )
        })
        .collect()
}
