use std::collections::HashSet;

use mfn_core::enumeration::{
    advance, find_first_connected_vector, mixed_radix_rank, next_vector_binary_backward,
    partition_range, unrank, RadixProfile,
};
use mfn_core::generate::{random_network, GenParams};
use mfn_core::maxflow::{max_flow, min_cut_oracle, FlowScratch};
use mfn_core::model::{pr_vector, EdgeStateDistribution, Network, State};
use mfn_core::reliability::{all_levels_reliability, exhaustive_oracle, EngineOptions};
use proptest::prelude::*;

fn instance(
    max_n: u32,
    max_m: usize,
    max_state: State,
) -> impl Strategy<Value = (Network, EdgeStateDistribution)> {
    (
        2..=max_n,
        any::<u64>(),
        1..=max_state,
        any::<bool>(),
        any::<u16>(),
    )
        .prop_map(move |(n, seed, max_state, random_dist, pick)| {
            let lo = n as usize - 1;
            let hi = (n as usize * (n as usize - 1) / 2).min(max_m).max(lo);
            let m = lo + pick as usize % (hi - lo + 1);
            random_network(&GenParams {
                n,
                m,
                max_state,
                random_dist,
                seed,
            })
            .unwrap()
        })
}

fn vector_in(dist: &EdgeStateDistribution, seed: u64) -> Vec<State> {
    let prof = RadixProfile::from_distribution(dist).unwrap();
    let rank = (seed as u128 * 0x9E37_79B9_7F4A_7C15) % prof.total();
    unrank(rank, &prof).unwrap().0
}

/// Source-sink connectivity over edges with positive state.
fn connected(net: &Network, x: &[State]) -> bool {
    let n = net.vertex_count() as usize;
    let mut seen = vec![false; n + 1];
    let mut stack = vec![net.source()];
    seen[net.source() as usize] = true;
    while let Some(u) = stack.pop() {
        for (&(a, b), &s) in net.edges().iter().zip(x) {
            if s == 0 {
                continue;
            }
            let w = if a == u {
                b
            } else if b == u {
                a
            } else {
                continue;
            };
            if !seen[w as usize] {
                seen[w as usize] = true;
                stack.push(w);
            }
        }
    }
    seen[net.sink() as usize]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn flow_equals_min_cut((net, dist) in instance(8, 12, 3), seed in any::<u64>()) {
        let x = vector_in(&dist, seed);
        prop_assert_eq!(max_flow(&net, &x).value, min_cut_oracle(&net, &x).unwrap());
    }

    #[test]
    fn flow_is_monotone((net, dist) in instance(8, 12, 3), a in any::<u64>(), b in any::<u64>()) {
        let x = vector_in(&dist, a);
        let y = vector_in(&dist, b);
        let lo: Vec<State> = x.iter().zip(&y).map(|(p, q)| *p.min(q)).collect();
        let hi: Vec<State> = x.iter().zip(&y).map(|(p, q)| *p.max(q)).collect();
        prop_assert!(max_flow(&net, &lo).value <= max_flow(&net, &hi).value);
    }

    #[test]
    fn zero_flow_iff_disconnected((net, dist) in instance(8, 12, 2), seed in any::<u64>()) {
        let x = vector_in(&dist, seed);
        prop_assert_eq!(max_flow(&net, &x).value == 0, !connected(&net, &x));
    }

    #[test]
    fn flow_is_deterministic((net, dist) in instance(8, 12, 3), seed in any::<u64>()) {
        let x = vector_in(&dist, seed);
        let mut scratch = FlowScratch::new(&net);
        let first = scratch.max_flow(&x);
        prop_assert_eq!(first, scratch.max_flow(&x));
        prop_assert_eq!(first, max_flow(&net, &x));
    }

    #[test]
    fn rank_round_trip(radices in prop::collection::vec(1u32..6, 1..8), seed in any::<u64>()) {
        let prof = RadixProfile::new(radices).unwrap();
        let rank = seed as u128 % prof.total();
        let x = unrank(rank, &prof).unwrap();
        prop_assert_eq!(mixed_radix_rank(&x, &prof).unwrap(), rank);
    }

    #[test]
    fn canonical_labeling_is_idempotent((net, _) in instance(8, 12, 1)) {
        let mut edges: Vec<(u32, u32)> = net.edges().iter().rev().map(|&(u, v)| (v, u)).collect();
        let half = edges.len() / 2;
        edges.rotate_left(half);
        let shuffled = Network::new(net.vertex_count(), edges).unwrap();
        let (canon, _) = shuffled.canonical();
        prop_assert!(canon.is_canonical());
        let (again, order) = canon.canonical();
        prop_assert_eq!(&again, &canon);
        prop_assert_eq!(order, (0..canon.edge_count()).collect::<Vec<_>>());
        prop_assert_eq!(canon, net);
    }

    #[test]
    fn partitions_cover_each_rank_once(start in 0u128..1000, len in 0u128..1000, parts in 1usize..17) {
        let ranges = partition_range(start, start + len, parts);
        prop_assert_eq!(ranges.len(), parts);
        let mut next = start;
        let sizes: Vec<u128> = ranges.iter().map(|r| r.end - r.start).collect();
        for r in &ranges {
            prop_assert_eq!(r.start, next);
            next = r.end;
        }
        prop_assert_eq!(next, start + len);
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn probabilities_sum_to_one((_, dist) in instance(6, 9, 3)) {
        let prof = RadixProfile::from_distribution(&dist).unwrap();
        prop_assume!(prof.total() <= 1_000_000);
        let mut x = vec![0; prof.len()];
        let mut total = 0.0;
        loop {
            let p = pr_vector(&x, &dist).unwrap();
            let marginal: f64 = x.iter().enumerate().map(|(k, &s)| dist.probs(k)[s as usize]).product();
            prop_assert_eq!(p, marginal);
            total += p;
            if !advance(&mut x, prof.radices()) {
                break;
            }
        }
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn counter_is_a_bijection(radices in prop::collection::vec(1u32..5, 1..7)) {
        let prof = RadixProfile::new(radices).unwrap();
        let mut x = vec![0; prof.len()];
        let mut seen = HashSet::new();
        let mut index = 0u128;
        loop {
            prop_assert_eq!(mixed_radix_rank(&x, &prof).unwrap(), index);
            prop_assert!(seen.insert(x.clone()));
            index += 1;
            if !advance(&mut x, prof.radices()) {
                break;
            }
        }
        prop_assert_eq!(index, prof.total());
    }

    #[test]
    fn everything_before_first_connected_vector_is_disconnected((net, dist) in instance(6, 8, 3)) {
        let prof = RadixProfile::from_distribution(&dist).unwrap();
        prop_assume!(prof.total() <= 200_000);
        let fc = find_first_connected_vector(&net, &dist).unwrap();
        prop_assert!(max_flow(&net, &fc.x_fc).value >= 1);
        let mut scratch = FlowScratch::new(&net);
        let mut x = vec![0; prof.len()];
        for _ in 0..fc.rank {
            prop_assert_eq!(scratch.max_flow(&x).value, 0);
            advance(&mut x, prof.radices());
        }
        prop_assert_eq!(&x[..], fc.x_fc.as_slice());
        // The support is a minimal path: dropping any edge disconnects it.
        for k in 0..x.len() {
            if x[k] == 1 {
                let mut y = x.clone();
                y[k] = 0;
                prop_assert_eq!(max_flow(&net, &y).value, 0);
            }
        }
    }

    #[test]
    fn engine_report_invariants((net, dist) in instance(6, 9, 3), workers in 1usize..5) {
        let prof = RadixProfile::from_distribution(&dist).unwrap();
        prop_assume!(prof.total() <= 300_000);
        let rep = all_levels_reliability(&net, &dist, &EngineOptions::with_workers(workers)).unwrap();
        let mass: f64 = rep.r.iter().sum::<f64>() + rep.pr_disconnected;
        prop_assert!((mass - 1.0).abs() < 1e-9);
        prop_assert!(rep.r.iter().all(|&v| v >= 0.0));
        prop_assert!(rep.big_r.windows(2).all(|w| w[0] >= w[1]));
        prop_assert_eq!(rep.big_r.last(), rep.r.last());
        for d in 0..rep.r.len() {
            let tail: f64 = rep.r[d..].iter().sum();
            prop_assert!((rep.big_r[d] - tail).abs() < 1e-12);
        }
        prop_assert!(rep.n_processed <= rep.n_total);
        prop_assert_eq!(rep.workers, workers);
    }

    #[test]
    fn engine_matches_oracle_and_full_sweep((net, dist) in instance(6, 9, 3)) {
        let prof = RadixProfile::from_distribution(&dist).unwrap();
        prop_assume!(prof.total() <= 100_000);
        let fast = all_levels_reliability(&net, &dist, &EngineOptions::default()).unwrap();
        let full = all_levels_reliability(
            &net,
            &dist,
            &EngineOptions { skip_prefix: false, ..EngineOptions::default() },
        )
        .unwrap();
        let oracle = exhaustive_oracle(&net, &dist).unwrap();
        prop_assert_eq!(fast.d_max, oracle.d_max);
        prop_assert_eq!(&fast.x_fc, &oracle.x_fc);
        prop_assert_eq!(full.n_processed, full.n_total);
        for d in 0..fast.r.len() {
            prop_assert!((fast.r[d] - full.r[d]).abs() <= 1e-12);
            prop_assert!((fast.r[d] - oracle.r[d]).abs() <= 1e-9);
            prop_assert!((fast.big_r[d] - oracle.big_r[d]).abs() <= 1e-9);
        }
        prop_assert!((fast.pr_disconnected - oracle.pr_disconnected).abs() <= 1e-9);
    }

    #[test]
    fn binary_networks_match_two_terminal_reliability((net, _) in instance(7, 10, 1), seed in any::<u64>()) {
        // Random up-probabilities with two states per edge.
        let probs: Vec<Vec<f64>> = (0..net.edge_count())
            .map(|k| {
                let p = 0.05 + 0.9 * (((seed >> (k % 48)) & 0xff) as f64 / 255.0);
                vec![1.0 - p, p]
            })
            .collect();
        let dist = EdgeStateDistribution::new(probs, false).unwrap();
        let prof = RadixProfile::from_distribution(&dist).unwrap();
        let rep = all_levels_reliability(&net, &dist, &EngineOptions::default()).unwrap();

        // Sum over connected vectors of the 2^m space, visited last coordinate first.
        let mut x = vec![0; net.edge_count()];
        let mut binary = 0.0;
        loop {
            if connected(&net, &x) {
                binary += pr_vector(&x, &dist).unwrap();
            }
            match next_vector_binary_backward(&x, &prof).unwrap() {
                Some(next) => x = next.0,
                None => break,
            }
        }
        prop_assert!((rep.reliability(1) - binary).abs() < 1e-12);
    }
}
