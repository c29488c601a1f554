//! Non-cooperative and cooperative (peeling) decoding on the station/user
//! graph, plus an exhaustive oracle over activation masks.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::scenario::{build_full_adjacency, BipartiteGraph, NetworkInstance};

/// Largest deployment the mask enumeration accepts.
pub const MAX_ORACLE_USERS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("exhaustive enumeration supports at most {MAX_ORACLE_USERS} users, got {0}")]
    TooManyUsers(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecodeMode {
    NonCooperative,
    Cooperative,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodingResult {
    pub collected: Vec<bool>,
    pub iterations_run: usize,
    /// Users newly collected in each round, starting at round 1.
    pub per_iteration_collected: Vec<usize>,
    /// Degree-one stations resolved in each round.
    pub per_iteration_stations: Vec<usize>,
    pub mode: DecodeMode,
}

impl DecodingResult {
    pub fn collected_count(&self) -> usize {
        self.collected.iter().filter(|&&c| c).count()
    }
}

/// Station `l` collects user `i` when `i` is its only active neighbor.
pub fn decode_noncooperative(graph: &BipartiteGraph) -> DecodingResult {
    let mut collected = vec![false; graph.n_users()];
    let mut clean = 0;
    for users in graph.station_neighbors() {
        if let [only] = users.as_slice() {
            collected[*only] = true;
            clean += 1;
        }
    }
    let count = collected.iter().filter(|&&c| c).count();
    DecodingResult {
        collected,
        iterations_run: 1,
        per_iteration_collected: vec![count],
        per_iteration_stations: vec![clean],
        mode: DecodeMode::NonCooperative,
    }
}

/// Parallel-round peeling.
///
/// Each round finds every remaining station of degree one, collects the
/// distinct users they hear, removes those stations and users, and deletes
/// all edges of the collected users. Stops at the first round with no degree
/// one station, so at most `m` rounds run.
pub fn decode_cooperative(graph: &BipartiteGraph) -> DecodingResult {
    let stations = graph.station_neighbors();
    let mut degree: Vec<usize> = stations.iter().map(Vec::len).collect();
    let mut removed = vec![false; stations.len()];
    let mut collected = vec![false; graph.n_users()];
    let mut per_iteration = Vec::new();
    let mut per_iteration_stations = Vec::new();
    let mut ready: Vec<usize> = Vec::new();
    let mut fresh: Vec<usize> = Vec::new();

    loop {
        ready.clear();
        ready.extend((0..stations.len()).filter(|&l| !removed[l] && degree[l] == 1));
        if ready.is_empty() {
            break;
        }
        // resolve every ready station against the graph at the start of the
        // round, then mark; two stations naming one user yield it once
        fresh.clear();
        fresh.extend(ready.iter().map(|&l| {
            stations[l]
                .iter()
                .copied()
                .find(|&i| !collected[i])
                .expect("degree-one station has a remaining user")
        }));
        fresh.sort_unstable();
        fresh.dedup();
        for &l in &ready {
            removed[l] = true;
        }
        for &user in &fresh {
            collected[user] = true;
        }
        for &user in &fresh {
            for &l in &graph.user_neighbors()[user] {
                degree[l] -= 1;
            }
        }
        per_iteration.push(fresh.len());
        per_iteration_stations.push(ready.len());
    }

    DecodingResult {
        collected,
        iterations_run: per_iteration.len(),
        per_iteration_collected: per_iteration,
        per_iteration_stations,
        mode: DecodeMode::Cooperative,
    }
}

/// Sequential peeling: resolves one degree-one station at a time, choosing
/// the next one by `pick(candidates)`. Used to check that the peeled set does
/// not depend on the processing order.
pub fn decode_cooperative_sequential(
    graph: &BipartiteGraph,
    mut pick: impl FnMut(&[usize]) -> usize,
) -> Vec<bool> {
    let stations = graph.station_neighbors();
    let mut degree: Vec<usize> = stations.iter().map(Vec::len).collect();
    let mut collected = vec![false; graph.n_users()];
    loop {
        let candidates: Vec<usize> = (0..stations.len()).filter(|&l| degree[l] == 1).collect();
        if candidates.is_empty() {
            return collected;
        }
        let l = candidates[pick(&candidates) % candidates.len()];
        let user = stations[l]
            .iter()
            .copied()
            .find(|&i| !collected[i])
            .expect("degree-one station has a remaining user");
        collected[user] = true;
        for &s in &graph.user_neighbors()[user] {
            degree[s] -= 1;
        }
    }
}

/// Exact per-user collection probabilities for both decoders.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectionProbabilities {
    pub noncooperative: Vec<f64>,
    pub cooperative: Vec<f64>,
}

/// Enumerates all `2^n` activation masks of the deployment in `instance`
/// (its own mask is ignored) and averages each decoder's collected indicator
/// with weight `p^|S| (1-p)^(n-|S|)`.
pub fn brute_force_collection_probability(
    instance: &NetworkInstance,
) -> Result<CollectionProbabilities, DecodeError> {
    let n = instance.params.n();
    if n > MAX_ORACLE_USERS {
        return Err(DecodeError::TooManyUsers(n));
    }
    let p = instance.params.p();
    let full = build_full_adjacency(instance);
    let mut noncoop = vec![0.0; n];
    let mut coop = vec![0.0; n];
    let mut mask = vec![false; n];
    for bits in 0u32..(1u32 << n) {
        let mut active = 0;
        for (i, flag) in mask.iter_mut().enumerate() {
            *flag = bits >> i & 1 == 1;
            active += usize::from(*flag);
        }
        let weight = libm::pow(p, active as f64) * libm::pow(1.0 - p, (n - active) as f64);
        if weight == 0.0 {
            continue;
        }
        let graph = full.restrict(&mask);
        for (acc, result) in [
            (&mut noncoop, decode_noncooperative(&graph)),
            (&mut coop, decode_cooperative(&graph)),
        ] {
            for (a, &c) in acc.iter_mut().zip(&result.collected) {
                if c {
                    *a += weight;
                }
            }
        }
    }
    Ok(CollectionProbabilities {
        noncooperative: noncoop,
        cooperative: coop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use crate::scenario::SystemParams;

    fn graph(n: usize, stations: &[&[usize]]) -> BipartiteGraph {
        BipartiteGraph::from_station_lists(n, stations.iter().map(|s| s.to_vec()).collect()).unwrap()
    }

    #[test]
    fn all_collisions() {
        let g = graph(4, &[&[0, 1], &[1, 2, 3], &[0, 3]]);
        assert_eq!(decode_noncooperative(&g).collected_count(), 0);
        assert_eq!(decode_cooperative(&g).collected_count(), 0);
    }

    #[test]
    fn lone_user_heard_by_three() {
        let g = graph(1, &[&[0], &[0], &[0]]);
        let nc = decode_noncooperative(&g);
        assert_eq!(nc.collected, vec![true]);
        let c = decode_cooperative(&g);
        assert_eq!(c.collected, vec![true]);
        // three stations name the same user in round one
        assert_eq!(c.per_iteration_collected, vec![1]);
        assert_eq!(c.iterations_run, 1);
    }

    #[test]
    fn four_cycle_is_a_stopping_set() {
        let g = graph(2, &[&[0, 1], &[0, 1]]);
        let c = decode_cooperative(&g);
        assert_eq!(c.collected_count(), 0);
        assert_eq!(c.iterations_run, 0);
        assert!(c.per_iteration_collected.is_empty());
    }

    #[test]
    fn chain_peels_in_two_rounds() {
        // U0 - B0, U0 - B1, U1 - B1
        let g = graph(2, &[&[0], &[0, 1]]);
        let nc = decode_noncooperative(&g);
        assert_eq!(nc.collected, vec![true, false]);
        let c = decode_cooperative(&g);
        assert_eq!(c.collected, vec![true, true]);
        assert_eq!(c.per_iteration_collected, vec![1, 1]);
        assert_eq!(c.iterations_run, 2);
    }

    #[test]
    fn sequential_matches_parallel_on_chain() {
        let g = graph(3, &[&[0], &[0, 1], &[1, 2], &[2]]);
        let par = decode_cooperative(&g).collected;
        for offset in 0..4 {
            assert_eq!(decode_cooperative_sequential(&g, |c| c.len() - 1 + offset), par);
        }
    }

    fn instance(users: &[(f64, f64)], stations: &[(f64, f64)], r: f64, p: f64) -> NetworkInstance {
        let params = SystemParams::new(users.len(), stations.len(), r, p).unwrap();
        NetworkInstance::from_parts(
            params,
            users.iter().map(|&(x, y)| Point2::new(x, y)).collect(),
            stations.iter().map(|&(x, y)| Point2::new(x, y)).collect(),
            vec![true; users.len()],
        )
        .unwrap()
    }

    #[test]
    fn oracle_single_user() {
        let inst = instance(&[(0.0, 0.0)], &[(0.0, 0.0)], 0.1, 0.3);
        let probs = brute_force_collection_probability(&inst).unwrap();
        assert!((probs.noncooperative[0] - 0.3).abs() < 1e-15);
        assert!((probs.cooperative[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn oracle_two_users_one_station() {
        let p = 0.4;
        let inst = instance(&[(0.01, 0.0), (-0.01, 0.0)], &[(0.0, 0.0)], 0.1, p);
        let probs = brute_force_collection_probability(&inst).unwrap();
        for i in 0..2 {
            assert!((probs.noncooperative[i] - p * (1.0 - p)).abs() < 1e-15);
            assert!((probs.cooperative[i] - p * (1.0 - p)).abs() < 1e-15);
        }
    }

    #[test]
    fn oracle_rejects_large_instances() {
        let users = vec![(0.0, 0.0); 21];
        let inst = instance(&users, &[(0.0, 0.0)], 0.1, 0.5);
        assert_eq!(
            brute_force_collection_probability(&inst),
            Err(DecodeError::TooManyUsers(21))
        );
    }
}
