//! Mixed-radix counting over the state space.
//!
//! Vectors are ordered by their mixed-radix value with coordinate 1 as the
//! least significant digit, i.e. the counter increments `x[0]` first and
//! carries upward. The first vector in that order whose subnetwork connects
//! source and sink is found with a shortest-path search, and everything
//! before it is skipped.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::Range;

use thiserror::Error;

use crate::model::{EdgeStateDistribution, Network, State, StateVector};

/// Position of a vector in counting order.
pub type Rank = u128;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EnumerationError {
    #[error("radix of edge {edge} is 0; every edge needs at least one state")]
    ZeroRadix { edge: usize },
    #[error("state space size exceeds 2^128")]
    StateSpaceOverflow,
    #[error("vector has {got} coordinates, profile has {expected}")]
    VectorLength { got: usize, expected: usize },
    #[error("state {state} of edge {edge} exceeds its largest state {max}")]
    StateOutOfBounds {
        edge: usize,
        state: State,
        max: State,
    },
    #[error("rank {rank} outside state space of size {total}")]
    RankOutOfRange { rank: Rank, total: Rank },
    #[error("binary counter requires radix 2 on every edge; edge {edge} has radix {radix}")]
    NotBinary { edge: usize, radix: u32 },
    #[error("no source-sink path uses only edges with a nonzero largest state")]
    NoPath,
}

/// Radix `U_k + 1` of every coordinate and the size `N` of the space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RadixProfile {
    radices: Vec<u32>,
    total: Rank,
}

impl RadixProfile {
    pub fn new(radices: Vec<u32>) -> Result<Self, EnumerationError> {
        let mut total: Rank = 1;
        for (edge, &r) in radices.iter().enumerate() {
            if r == 0 {
                return Err(EnumerationError::ZeroRadix { edge });
            }
            total = total
                .checked_mul(Rank::from(r))
                .ok_or(EnumerationError::StateSpaceOverflow)?;
        }
        Ok(Self { radices, total })
    }

    pub fn from_distribution(dist: &EdgeStateDistribution) -> Result<Self, EnumerationError> {
        Self::new(dist.max_states().iter().map(|&u| u + 1).collect())
    }

    pub fn radices(&self) -> &[u32] {
        &self.radices
    }

    /// `N = Π radices`.
    pub fn total(&self) -> Rank {
        self.total
    }

    pub fn len(&self) -> usize {
        self.radices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radices.is_empty()
    }

    /// Place value of coordinate `k`: `Π_{j<k} radices[j]`.
    pub fn place_values(&self) -> Vec<Rank> {
        let mut acc: Rank = 1;
        self.radices
            .iter()
            .map(|&r| {
                let w = acc;
                acc *= Rank::from(r);
                w
            })
            .collect()
    }

    fn check(&self, x: &[State]) -> Result<(), EnumerationError> {
        if x.len() != self.radices.len() {
            return Err(EnumerationError::VectorLength {
                got: x.len(),
                expected: self.radices.len(),
            });
        }
        for (edge, (&state, &r)) in x.iter().zip(&self.radices).enumerate() {
            if state >= r {
                return Err(EnumerationError::StateOutOfBounds {
                    edge,
                    state,
                    max: r - 1,
                });
            }
        }
        Ok(())
    }
}

/// The earliest vector in counting order with a connected subnetwork.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FirstConnectedVector {
    /// 0/1 vector whose support is a minimal source-sink path.
    pub x_fc: StateVector,
    /// Number of vectors before it, all disconnected.
    pub rank: Rank,
}

/// `Σ_k x[k] · Π_{j<k} radices[j]`.
pub fn mixed_radix_rank(x: &[State], prof: &RadixProfile) -> Result<Rank, EnumerationError> {
    prof.check(x)?;
    Ok(x.iter()
        .zip(prof.place_values())
        .map(|(&s, w)| Rank::from(s) * w)
        .sum())
}

/// Inverse of [`mixed_radix_rank`].
pub fn unrank(rank: Rank, prof: &RadixProfile) -> Result<StateVector, EnumerationError> {
    if rank >= prof.total {
        return Err(EnumerationError::RankOutOfRange {
            rank,
            total: prof.total,
        });
    }
    let mut rest = rank;
    let x = prof
        .radices
        .iter()
        .map(|&r| {
            let digit = (rest % Rank::from(r)) as State;
            rest /= Rank::from(r);
            digit
        })
        .collect();
    Ok(StateVector(x))
}

/// Steps `x` to its successor in place. Returns `false`, leaving `x` at the
/// all-zero vector, when `x` was the last vector of the space.
#[inline]
pub fn advance(x: &mut [State], radices: &[u32]) -> bool {
    for (s, &r) in x.iter_mut().zip(radices) {
        if *s + 1 == r {
            *s = 0;
        } else {
            *s += 1;
            return true;
        }
    }
    false
}

/// Successor of `x` in counting order, or `None` after the all-max vector.
pub fn next_vector(
    x: &[State],
    prof: &RadixProfile,
) -> Result<Option<StateVector>, EnumerationError> {
    prof.check(x)?;
    let mut next = x.to_vec();
    Ok(advance(&mut next, &prof.radices).then_some(StateVector(next)))
}

/// Binary successor counting from the last coordinate, as in the classic
/// binary addition tree. `None` after the all-ones vector.
pub fn next_vector_binary_backward(
    x: &[State],
    prof: &RadixProfile,
) -> Result<Option<StateVector>, EnumerationError> {
    if let Some((edge, &radix)) = prof.radices.iter().enumerate().find(|(_, &r)| r != 2) {
        return Err(EnumerationError::NotBinary { edge, radix });
    }
    prof.check(x)?;
    let mut next = x.to_vec();
    for s in next.iter_mut().rev() {
        if *s == 1 {
            *s = 0;
        } else {
            *s = 1;
            return Ok(Some(StateVector(next)));
        }
    }
    Ok(None)
}

/// Splits `[start, end)` into `parts` contiguous intervals whose sizes differ
/// by at most one, larger intervals first. Some may be empty when the range
/// is shorter than `parts`.
pub fn partition_range(start: Rank, end: Rank, parts: usize) -> Vec<Range<Rank>> {
    assert!(start <= end, "partition_range requires start <= end");
    assert!(parts >= 1, "partition_range requires at least one part");
    let len = end - start;
    let parts_r = parts as Rank;
    let base = len / parts_r;
    let extra = len % parts_r;
    let mut lo = start;
    (0..parts_r)
        .map(|i| {
            let size = base + Rank::from(i < extra);
            let range = lo..lo + size;
            lo += size;
            range
        })
        .collect()
}

/// Edge subset as a little-endian bitset, ordered by its numeric value
/// `Σ_{k ∈ set} 2^k`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct EdgeBits(Vec<u64>);

impl EdgeBits {
    fn empty(m: usize) -> Self {
        EdgeBits(vec![0; m.div_ceil(64).max(1)])
    }

    fn with(&self, k: usize) -> Self {
        let mut b = self.clone();
        b.0[k / 64] |= 1 << (k % 64);
        b
    }

    fn contains(&self, k: usize) -> bool {
        (self.0[k / 64] >> (k % 64)) & 1 == 1
    }
}

impl Ord for EdgeBits {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.iter().rev().cmp(other.0.iter().rev())
    }
}

impl PartialOrd for EdgeBits {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// First connected vector via a shortest path where edge `k` weighs `2^k`.
///
/// Distances are edge bitsets: along a simple path the weight sum is the
/// union of distinct powers of two, so comparing bitsets numerically is
/// comparing path lengths, with no overflow for any `m`. Distinct edge sets
/// have distinct sums, so the optimum is unique. Edges whose largest state
/// is 0 can never carry flow and are left out of the search.
pub fn find_first_connected_vector(
    net: &Network,
    dist: &EdgeStateDistribution,
) -> Result<FirstConnectedVector, EnumerationError> {
    let prof = RadixProfile::from_distribution(dist)?;
    let n = net.vertex_count() as usize;
    let m = net.edge_count();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (k, &(u, v)) in net.edges().iter().enumerate() {
        if dist.max_state(k) == 0 {
            continue;
        }
        adj[u as usize - 1].push((v as usize - 1, k));
        adj[v as usize - 1].push((u as usize - 1, k));
    }

    let source = net.source() as usize - 1;
    let sink = net.sink() as usize - 1;
    let mut best: Vec<Option<EdgeBits>> = vec![None; n];
    let mut settled = vec![false; n];
    // Min-heap on distance via Reverse.
    let mut heap = BinaryHeap::new();
    best[source] = Some(EdgeBits::empty(m));
    heap.push(std::cmp::Reverse((EdgeBits::empty(m), source)));
    while let Some(std::cmp::Reverse((d, u))) = heap.pop() {
        if settled[u] {
            continue;
        }
        settled[u] = true;
        if u == sink {
            break;
        }
        for &(v, k) in &adj[u] {
            if settled[v] {
                continue;
            }
            let cand = d.with(k);
            if best[v].as_ref().is_none_or(|b| cand < *b) {
                best[v] = Some(cand.clone());
                heap.push(std::cmp::Reverse((cand, v)));
            }
        }
    }

    let path = best[sink]
        .take()
        .filter(|_| settled[sink])
        .ok_or(EnumerationError::NoPath)?;
    let x_fc: Vec<State> = (0..m).map(|k| State::from(path.contains(k))).collect();
    let rank = mixed_radix_rank(&x_fc, &prof)?;
    Ok(FirstConnectedVector {
        x_fc: StateVector(x_fc),
        rank,
    })
}
