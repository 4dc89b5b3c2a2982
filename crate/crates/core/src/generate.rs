//! Seeded random instances for property tests and the `gen` subcommand.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::model::{EdgeStateDistribution, Network, State};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("need at least 2 vertices, got {0}")]
    TooFewVertices(u32),
    #[error("m = {m} exceeds simple-graph bound {bound} for n = {n}")]
    TooManyEdges { n: u32, m: usize, bound: usize },
    #[error("m = {m} is below n - 1 = {min}; the network cannot be connected")]
    TooFewEdges { m: usize, min: usize },
    #[error("max_state must be at least 1")]
    ZeroMaxState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenParams {
    pub n: u32,
    pub m: usize,
    pub max_state: State,
    /// Random per-edge probabilities instead of uniform ones.
    pub random_dist: bool,
    pub seed: u64,
}

/// A connected simple network: a random spanning tree plus random extra
/// edges, returned in canonical edge order. Deterministic per seed.
pub fn random_network(p: &GenParams) -> Result<(Network, EdgeStateDistribution), GenError> {
    if p.n < 2 {
        return Err(GenError::TooFewVertices(p.n));
    }
    let n = p.n as usize;
    let bound = n * (n - 1) / 2;
    if p.m > bound {
        return Err(GenError::TooManyEdges {
            n: p.n,
            m: p.m,
            bound,
        });
    }
    if p.m < n - 1 {
        return Err(GenError::TooFewEdges { m: p.m, min: n - 1 });
    }
    if p.max_state == 0 {
        return Err(GenError::ZeroMaxState);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(p.seed);

    let mut order: Vec<u32> = (1..=p.n).collect();
    order.shuffle(&mut rng);
    let mut chosen = std::collections::BTreeSet::new();
    for i in 1..n {
        let parent = order[rng.random_range(0..i)];
        let v = order[i];
        chosen.insert((parent.min(v), parent.max(v)));
    }
    let mut rest: Vec<(u32, u32)> = (1..=p.n)
        .flat_map(|u| (u + 1..=p.n).map(move |v| (u, v)))
        .filter(|e| !chosen.contains(e))
        .collect();
    rest.shuffle(&mut rng);
    chosen.extend(rest.into_iter().take(p.m - (n - 1)));

    let edges: Vec<(u32, u32)> = chosen.into_iter().collect();
    let net = Network::new(p.n, edges).expect("generated edges form a simple graph");
    let dist = if p.random_dist {
        let lists = (0..p.m)
            .map(|_| {
                let w: Vec<f64> = (0..=p.max_state)
                    .map(|_| rng.random_range(0.05..1.0))
                    .collect();
                let total: f64 = w.iter().sum();
                w.into_iter().map(|v| v / total).collect()
            })
            .collect();
        EdgeStateDistribution::new(lists, true).expect("generated probabilities are valid")
    } else {
        EdgeStateDistribution::uniform(p.m, p.max_state)
    };
    Ok((net, dist))
}
