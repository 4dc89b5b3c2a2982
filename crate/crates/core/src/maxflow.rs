//! Maximum flow of the subnetwork induced by a state vector.
//!
//! Each undirected edge `{u, v}` with state `x_k` behaves as a pair of
//! anti-parallel arcs of capacity `x_k`. Flow is stored once per edge as a
//! signed amount in the `u -> v` direction, so the residual capacities are
//! `x_k - f_k` forward and `x_k + f_k` backward. Augmentation is breadth-first
//! (shortest augmenting path first).

use thiserror::Error;

use crate::model::{Network, State};

/// Largest vertex count accepted by [`min_cut_oracle`].
pub const MIN_CUT_ORACLE_MAX_VERTICES: u32 = 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FlowError {
    #[error("min-cut oracle enumerates 2^(n-2) cuts and is limited to n <= {limit}, got n = {n}")]
    OracleTooLarge { n: u32, limit: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowResult {
    /// `F(X)`.
    pub value: u64,
    /// Number of augmenting paths used. Diagnostic only.
    pub augmentations: u32,
}

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Arc {
    edge: u32,
    from: u32,
    to: u32,
    /// `true` when traversing the edge from its first to its second endpoint.
    forward: bool,
}

/// Adjacency and residual buffers for one network, reusable across vectors.
///
/// One scratch per worker; [`FlowScratch::max_flow`] leaves no state behind
/// that affects later calls.
#[derive(Debug, Clone)]
pub struct FlowScratch {
    source: u32,
    sink: u32,
    adj_start: Vec<u32>,
    arcs: Vec<Arc>,
    source_edges: Vec<u32>,
    sink_edges: Vec<u32>,
    flow: Vec<i64>,
    pred: Vec<u32>,
    queue: Vec<u32>,
}

impl FlowScratch {
    pub fn new(net: &Network) -> Self {
        let n = net.vertex_count() as usize;
        let mut degree = vec![0u32; n + 1];
        for &(u, v) in net.edges() {
            degree[u as usize - 1] += 1;
            degree[v as usize - 1] += 1;
        }
        let mut adj_start = vec![0u32; n + 1];
        for i in 0..n {
            adj_start[i + 1] = adj_start[i] + degree[i];
        }
        let mut fill = adj_start.clone();
        let mut arcs = vec![
            Arc {
                edge: 0,
                from: 0,
                to: 0,
                forward: true
            };
            2 * net.edge_count()
        ];
        for (k, &(u, v)) in net.edges().iter().enumerate() {
            let (u, v) = (u - 1, v - 1);
            arcs[fill[u as usize] as usize] = Arc {
                edge: k as u32,
                from: u,
                to: v,
                forward: true,
            };
            fill[u as usize] += 1;
            arcs[fill[v as usize] as usize] = Arc {
                edge: k as u32,
                from: v,
                to: u,
                forward: false,
            };
            fill[v as usize] += 1;
        }
        let source = net.source() - 1;
        let sink = net.sink() - 1;
        let incident = |w: u32| -> Vec<u32> {
            net.edges()
                .iter()
                .enumerate()
                .filter(|(_, &(u, v))| u - 1 == w || v - 1 == w)
                .map(|(k, _)| k as u32)
                .collect()
        };
        Self {
            source,
            sink,
            adj_start,
            arcs,
            source_edges: incident(source),
            sink_edges: incident(sink),
            flow: vec![0; net.edge_count()],
            pred: vec![NONE; n],
            queue: Vec::with_capacity(n),
        }
    }

    #[inline]
    fn residual(&self, arc: &Arc, x: &[State]) -> i64 {
        let cap = i64::from(x[arc.edge as usize]);
        let f = self.flow[arc.edge as usize];
        if arc.forward {
            cap - f
        } else {
            cap + f
        }
    }

    /// `F(X)` with edge `k` carrying capacity `x[k]`.
    pub fn max_flow(&mut self, x: &[State]) -> FlowResult {
        assert_eq!(
            x.len(),
            self.flow.len(),
            "state vector length must equal edge count"
        );
        let cut_bound =
            |edges: &[u32]| edges.iter().map(|&k| u64::from(x[k as usize])).sum::<u64>();
        let bound = cut_bound(&self.source_edges).min(cut_bound(&self.sink_edges));
        self.flow.iter_mut().for_each(|f| *f = 0);

        let mut value = 0u64;
        let mut augmentations = 0u32;
        while value < bound {
            let Some(delta) = self.augment(x) else {
                break;
            };
            value += delta;
            augmentations += 1;
        }
        FlowResult {
            value,
            augmentations,
        }
    }

    /// Finds one shortest augmenting path, pushes its bottleneck and returns
    /// it; `None` when the sink is unreachable in the residual graph.
    fn augment(&mut self, x: &[State]) -> Option<u64> {
        self.pred.iter_mut().for_each(|p| *p = NONE);
        self.queue.clear();
        self.queue.push(self.source);
        // The source's own pred is never followed; mark it visited.
        self.pred[self.source as usize] = 0;
        let mut head = 0;
        'bfs: while head < self.queue.len() {
            let u = self.queue[head];
            head += 1;
            for ai in self.adj_start[u as usize]..self.adj_start[u as usize + 1] {
                let arc = self.arcs[ai as usize];
                if self.pred[arc.to as usize] != NONE || self.residual(&arc, x) <= 0 {
                    continue;
                }
                self.pred[arc.to as usize] = ai;
                if arc.to == self.sink {
                    break 'bfs;
                }
                self.queue.push(arc.to);
            }
        }
        if self.pred[self.sink as usize] == NONE {
            return None;
        }

        let mut bottleneck = i64::MAX;
        let mut v = self.sink;
        while v != self.source {
            let arc = self.arcs[self.pred[v as usize] as usize];
            bottleneck = bottleneck.min(self.residual(&arc, x));
            v = arc.from;
        }
        let mut v = self.sink;
        while v != self.source {
            let arc = self.arcs[self.pred[v as usize] as usize];
            if arc.forward {
                self.flow[arc.edge as usize] += bottleneck;
            } else {
                self.flow[arc.edge as usize] -= bottleneck;
            }
            v = arc.from;
        }
        Some(bottleneck as u64)
    }
}

/// Convenience wrapper allocating a fresh scratch.
pub fn max_flow(net: &Network, x: &[State]) -> FlowResult {
    FlowScratch::new(net).max_flow(x)
}

/// Minimum over all source/sink vertex bipartitions of the total state on
/// crossing edges, by exhaustive enumeration of the `2^(n-2)` cuts.
pub fn min_cut_oracle(net: &Network, x: &[State]) -> Result<u64, FlowError> {
    let n = net.vertex_count();
    if n > MIN_CUT_ORACLE_MAX_VERTICES {
        return Err(FlowError::OracleTooLarge {
            n,
            limit: MIN_CUT_ORACLE_MAX_VERTICES,
        });
    }
    assert_eq!(
        x.len(),
        net.edge_count(),
        "state vector length must equal edge count"
    );
    // Bit i of `side` is set when vertex i+1 is on the source side. Vertex 1
    // is always in, vertex n never; the inner vertices 2..n-1 are free.
    let inner = n - 2;
    let mut best = u64::MAX;
    for free in 0u32..(1u32 << inner) {
        let side = 1u32 | (free << 1);
        let cut: u64 = net
            .edges()
            .iter()
            .zip(x)
            .filter(|(&(u, v), _)| ((side >> (u - 1)) & 1) != ((side >> (v - 1)) & 1))
            .map(|(_, &s)| u64::from(s))
            .sum();
        best = best.min(cut);
    }
    Ok(best)
}
