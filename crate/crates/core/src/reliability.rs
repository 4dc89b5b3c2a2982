//! All-levels reliability in one pass over the state space.
//!
//! Starting at the first connected vector, every remaining vector `X` is
//! visited once in counting order, its maximum flow `f = F(X)` is computed,
//! and `Pr(X)` is credited to the exact-level bucket `r_f`. The at-least
//! reliabilities `R_d` are suffix sums of those buckets.

use std::ops::Range;
use std::thread;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::enumeration::{
    advance, find_first_connected_vector, partition_range, unrank, EnumerationError, RadixProfile,
    Rank,
};
use crate::maxflow::{min_cut_oracle, FlowError, FlowScratch};
use crate::model::{
    pr_vector_unchecked, AllLevelsReport, EdgeStateDistribution, Network, State, StateVector,
};
use crate::sum::CompensatedSum;

/// Refuse state spaces larger than this unless the caller overrides.
pub const DEFAULT_BUDGET: Rank = 1 << 40;

/// Size limit of [`exhaustive_oracle`].
pub const ORACLE_MAX_VECTORS: Rank = 1_000_000;
pub const ORACLE_MAX_VERTICES: u32 = 12;

/// Identifier of the Monte-Carlo generator, recorded in every report.
pub const MC_RNG: &str = "ChaCha20";

/// How often a sweep looks at the clock.
const DEADLINE_STRIDE: u64 = 1 << 14;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("distribution covers {dists} edges but the network has {edges}")]
    EdgeCountMismatch { dists: usize, edges: usize },
    #[error("state space has {total} vectors, above the budget of {budget}; override the budget to run anyway")]
    BudgetExceeded { total: Rank, budget: Rank },
    #[error("wall-clock limit reached after {processed} vectors ({elapsed:.3} s)")]
    Timeout { processed: Rank, elapsed: f64 },
    #[error("instance too large for the exhaustive oracle: {reason}")]
    OracleTooLarge { reason: String },
    #[error(transparent)]
    Enumeration(#[from] EnumerationError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

#[derive(Debug, Clone)]
pub struct EngineOptions {
    /// Number of sweep threads, at least 1.
    pub workers: usize,
    /// Largest admissible `N`; `None` disables the check.
    pub budget: Option<Rank>,
    /// Start at the first connected vector. When false, sweep from rank 0.
    pub skip_prefix: bool,
    /// Abort with [`EngineError::Timeout`] once this instant passes.
    pub deadline: Option<Instant>,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            budget: Some(DEFAULT_BUDGET),
            skip_prefix: true,
            deadline: None,
        }
    }
}

impl EngineOptions {
    pub fn with_workers(workers: usize) -> Self {
        Self {
            workers,
            ..Self::default()
        }
    }
}

/// Per-level probability mass gathered by one worker.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelAccumulator {
    /// `buckets[d - 1]` holds `r_d`.
    buckets: Vec<CompensatedSum>,
    disconnected: CompensatedSum,
    processed: Rank,
}

impl LevelAccumulator {
    pub fn new(d_max: u64) -> Self {
        Self {
            buckets: vec![CompensatedSum::new(); d_max as usize],
            disconnected: CompensatedSum::new(),
            processed: 0,
        }
    }

    #[inline]
    pub fn credit(&mut self, flow: u64, pr: f64) {
        assert!(
            flow as usize <= self.buckets.len(),
            "flow {flow} exceeds d_max {}",
            self.buckets.len()
        );
        if flow == 0 {
            self.disconnected += pr;
        } else {
            self.buckets[flow as usize - 1] += pr;
        }
        self.processed += 1;
    }

    pub fn merge(&mut self, other: &LevelAccumulator) {
        assert_eq!(self.buckets.len(), other.buckets.len());
        for (a, b) in self.buckets.iter_mut().zip(&other.buckets) {
            a.merge(b);
        }
        self.disconnected.merge(&other.disconnected);
        self.processed += other.processed;
    }

    pub fn levels(&self) -> Vec<f64> {
        self.buckets.iter().map(CompensatedSum::value).collect()
    }

    /// Mass of processed vectors with zero flow.
    pub fn disconnected_mass(&self) -> f64 {
        self.disconnected.value()
    }

    /// Total mass of all processed vectors.
    pub fn processed_mass(&self) -> f64 {
        let mut total = self.disconnected;
        for b in &self.buckets {
            total.merge(b);
        }
        total.value()
    }

    pub fn processed(&self) -> Rank {
        self.processed
    }
}

/// `R_d = Σ_{k ≥ d} r_k`, accumulated from the top level down.
pub fn suffix_sums(r: &[f64]) -> Vec<f64> {
    let mut acc = CompensatedSum::new();
    let mut out: Vec<f64> = r
        .iter()
        .rev()
        .map(|&v| {
            acc += v;
            acc.value()
        })
        .collect();
    out.reverse();
    out
}

fn check_shapes(net: &Network, dist: &EdgeStateDistribution) -> Result<(), EngineError> {
    if dist.edge_count() != net.edge_count() {
        return Err(EngineError::EdgeCountMismatch {
            dists: dist.edge_count(),
            edges: net.edge_count(),
        });
    }
    Ok(())
}

/// `F` of the fully-up network, every edge at its largest state.
pub fn max_level(net: &Network, dist: &EdgeStateDistribution) -> u64 {
    FlowScratch::new(net).max_flow(&dist.max_states()).value
}

fn sweep(
    net: &Network,
    dist: &EdgeStateDistribution,
    prof: &RadixProfile,
    range: Range<Rank>,
    d_max: u64,
    deadline: Option<Instant>,
) -> Result<LevelAccumulator, EngineError> {
    let mut acc = LevelAccumulator::new(d_max);
    if range.is_empty() {
        return Ok(acc);
    }
    let mut scratch = FlowScratch::new(net);
    let mut x = unrank(range.start, prof)?.0;
    let radices = prof.radices();
    let len = range.end - range.start;
    let mut done: Rank = 0;
    loop {
        let f = scratch.max_flow(&x).value;
        acc.credit(f, pr_vector_unchecked(&x, dist));
        done += 1;
        if done == len {
            break;
        }
        if let Some(limit) = deadline {
            if (done as u64).is_multiple_of(DEADLINE_STRIDE) && Instant::now() >= limit {
                return Err(EngineError::Timeout {
                    processed: done,
                    elapsed: 0.0,
                });
            }
        }
        let more = advance(&mut x, radices);
        debug_assert!(more, "range end lies within the state space");
    }
    Ok(acc)
}

fn empty_report(n_total: Rank, workers: usize, start: Instant) -> AllLevelsReport {
    AllLevelsReport {
        d_max: 0,
        r: Vec::new(),
        big_r: Vec::new(),
        n_total,
        n_processed: 0,
        pr_disconnected: 1.0,
        x_fc: None,
        workers,
        elapsed: start.elapsed().as_secs_f64(),
    }
}

/// Exact `r_d` and `R_d` for every level `1..=d_max` in a single sweep.
///
/// The range from the first connected vector to the end of the space is
/// split across `options.workers` threads; each keeps its own accumulator and
/// flow scratch and the results are folded in range order. The mass of the
/// skipped prefix, all disconnected, is `1 - processed mass` and is reported
/// as part of `pr_disconnected`.
pub fn all_levels_reliability(
    net: &Network,
    dist: &EdgeStateDistribution,
    options: &EngineOptions,
) -> Result<AllLevelsReport, EngineError> {
    let start = Instant::now();
    check_shapes(net, dist)?;
    let workers = options.workers.max(1);
    let prof = RadixProfile::from_distribution(dist)?;
    if let Some(budget) = options.budget {
        if prof.total() > budget {
            return Err(EngineError::BudgetExceeded {
                total: prof.total(),
                budget,
            });
        }
    }

    let d_max = max_level(net, dist);
    if d_max == 0 {
        return Ok(empty_report(prof.total(), workers, start));
    }
    let fc = find_first_connected_vector(net, dist)?;
    let first = if options.skip_prefix { fc.rank } else { 0 };

    let parts = partition_range(first, prof.total(), workers);
    let results: Vec<Result<LevelAccumulator, EngineError>> = if workers == 1 {
        vec![sweep(
            net,
            dist,
            &prof,
            parts[0].clone(),
            d_max,
            options.deadline,
        )]
    } else {
        thread::scope(|s| {
            let handles: Vec<_> = parts
                .iter()
                .map(|range| {
                    let prof = &prof;
                    let range = range.clone();
                    s.spawn(move || sweep(net, dist, prof, range, d_max, options.deadline))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sweep worker panicked"))
                .collect()
        })
    };

    let mut total = LevelAccumulator::new(d_max);
    for res in results {
        match res {
            Ok(acc) => total.merge(&acc),
            Err(EngineError::Timeout { .. }) => {
                return Err(EngineError::Timeout {
                    processed: total.processed(),
                    elapsed: start.elapsed().as_secs_f64(),
                })
            }
            Err(e) => return Err(e),
        }
    }

    let r = total.levels();
    let big_r = suffix_sums(&r);
    let pr_disconnected = if options.skip_prefix {
        let skipped = 1.0 - total.processed_mass();
        let mut d = total.disconnected;
        d += skipped;
        d.value()
    } else {
        total.disconnected_mass()
    };
    Ok(AllLevelsReport {
        d_max,
        r,
        big_r,
        n_total: prof.total(),
        n_processed: total.processed(),
        pr_disconnected,
        x_fc: Some(fc.x_fc),
        workers,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

/// Reference computation sharing no enumeration or flow code with the
/// engine: every rank from 0 is decoded by repeated division and its flow
/// is taken as the minimum cut over all vertex bipartitions.
pub fn exhaustive_oracle(
    net: &Network,
    dist: &EdgeStateDistribution,
) -> Result<AllLevelsReport, EngineError> {
    let start = Instant::now();
    check_shapes(net, dist)?;
    if net.vertex_count() > ORACLE_MAX_VERTICES {
        return Err(EngineError::OracleTooLarge {
            reason: format!("n = {} > {}", net.vertex_count(), ORACLE_MAX_VERTICES),
        });
    }
    let radices: Vec<u64> = dist
        .max_states()
        .iter()
        .map(|&u| u64::from(u) + 1)
        .collect();
    let mut total: u64 = 1;
    for &r in &radices {
        total = total.saturating_mul(r);
        if u128::from(total) > ORACLE_MAX_VECTORS {
            return Err(EngineError::OracleTooLarge {
                reason: format!("state space exceeds {ORACLE_MAX_VECTORS} vectors"),
            });
        }
    }

    let all_up: Vec<State> = dist.max_states();
    let d_max = min_cut_oracle(net, &all_up)?;
    let mut levels = vec![0.0f64; d_max as usize + 1];
    let mut comps = vec![0.0f64; d_max as usize + 1];
    let mut first_connected: Option<Vec<State>> = None;
    let mut x = vec![0 as State; radices.len()];
    for rank in 0..total {
        let mut rest = rank;
        for (s, &r) in x.iter_mut().zip(&radices) {
            *s = (rest % r) as State;
            rest /= r;
        }
        let f = min_cut_oracle(net, &x)? as usize;
        let mut pr = 1.0;
        for (k, &s) in x.iter().enumerate() {
            pr *= dist.probs(k)[s as usize];
        }
        // Kahan summation per level.
        let y = pr - comps[f];
        let t = levels[f] + y;
        comps[f] = (t - levels[f]) - y;
        levels[f] = t;
        if f > 0 && first_connected.is_none() {
            first_connected = Some(x.clone());
        }
    }

    let r: Vec<f64> = levels[1..].to_vec();
    let mut big_r = vec![0.0; r.len()];
    let mut running = 0.0;
    for d in (0..r.len()).rev() {
        running += r[d];
        big_r[d] = running;
    }
    Ok(AllLevelsReport {
        d_max,
        r,
        big_r,
        n_total: u128::from(total),
        n_processed: u128::from(total),
        pr_disconnected: levels[0],
        x_fc: first_connected.map(StateVector),
        workers: 1,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub samples: u64,
    pub seed: u64,
    pub rng: String,
    pub d_max: u64,
    /// `estimates[d - 1]` is the fraction of samples with `F ≥ d`.
    pub estimates: Vec<f64>,
    /// Binomial standard error `sqrt(R̂ (1 - R̂) / samples)` per level.
    pub std_errors: Vec<f64>,
}

/// Estimates `R_d` for every level by sampling edge states independently by
/// inverse CDF from a seeded ChaCha20 stream.
pub fn monte_carlo(
    net: &Network,
    dist: &EdgeStateDistribution,
    samples: u64,
    seed: u64,
) -> Result<MonteCarloReport, EngineError> {
    check_shapes(net, dist)?;
    assert!(samples >= 1, "monte_carlo needs at least one sample");
    let d_max = max_level(net, dist);
    let cdfs: Vec<Vec<f64>> = dist
        .lists()
        .iter()
        .map(|p| {
            let mut c = 0.0;
            p.iter()
                .map(|&v| {
                    c += v;
                    c
                })
                .collect()
        })
        .collect();

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut scratch = FlowScratch::new(net);
    let mut x = vec![0 as State; net.edge_count()];
    let mut hist = vec![0u64; d_max as usize + 1];
    for _ in 0..samples {
        for (s, cdf) in x.iter_mut().zip(&cdfs) {
            let u: f64 = rng.random();
            *s = cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1) as State;
        }
        hist[scratch.max_flow(&x).value as usize] += 1;
    }

    let n = samples as f64;
    let mut at_least = 0u64;
    let mut estimates = vec![0.0; d_max as usize];
    for d in (1..=d_max as usize).rev() {
        at_least += hist[d];
        estimates[d - 1] = at_least as f64 / n;
    }
    let std_errors = estimates
        .iter()
        .map(|&p| (p * (1.0 - p) / n).sqrt())
        .collect();
    Ok(MonteCarloReport {
        samples,
        seed,
        rng: MC_RNG.to_string(),
        d_max,
        estimates,
        std_errors,
    })
}
