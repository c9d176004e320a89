//! Seeded random instances for the verification suites.
//!
//! Every generator draws from a caller-owned [`ChaCha8Rng`], so a single
//! `u64` seed fixes a whole run.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::graph::Graph;
use crate::markov::{Distribution, StochasticMatrix};

pub use rand::SeedableRng;

/// The generator used throughout: `ChaCha8Rng::seed_from_u64(seed)`.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Undirected connected graph on `n` nodes: a random recursive tree plus
/// each remaining pair with probability `extra`.
pub fn connected_graph(rng: &mut ChaCha8Rng, n: usize, extra: f64) -> Result<Graph> {
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.random_range(0..v), v));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < extra {
                edges.push((i, j));
            }
        }
    }
    Graph::undirected(n, edges)
}

/// Weights drawn from `[0.1, 1)` and normalized.
pub fn full_support(rng: &mut ChaCha8Rng, n: usize) -> Result<Distribution> {
    Distribution::normalized((0..n).map(|_| rng.random_range(0.1..1.0)).collect())
}

/// Signed vector with entries in `[-1, 1)` shifted to sum to zero.
pub fn zero_sum(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mean = q.iter().sum::<f64>() / n as f64;
    for v in &mut q {
        *v -= mean;
    }
    q
}

/// Column-stochastic chain local to `g` with random positive weights on
/// every arc and the diagonal.
pub fn local_chain(rng: &mut ChaCha8Rng, g: &Graph) -> Result<StochasticMatrix> {
    let n = g.n();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = rng.random_range(0.05..1.0);
        for &j in g.successors(i) {
            m[(j, i)] = rng.random_range(0.05..1.0);
        }
        let s = m.column(i).sum();
        m.column_mut(i).unscale_mut(s);
    }
    StochasticMatrix::renormalized(m, Some(g.clone()))
}

/// A nonempty proper node subset as a bit mask.
pub fn subset_mask(rng: &mut ChaCha8Rng, n: usize) -> u32 {
    let full = (1u32 << n) - 1;
    rng.random_range(1..full)
}
