//! Rayon drivers whose results do not depend on the thread count.
//!
//! Every unit of work draws from its own sub-stream, and results are
//! gathered in index order before any floating-point reduction.

use aloha_core::decoders::{decode_cooperative, decode_noncooperative};
use aloha_core::geometry::{MomentAccumulator, TableSpec};
use aloha_core::scenario::build_full_adjacency;
use aloha_core::stream::{substream, tag};
use aloha_core::{Estimate, MomentTable, NetworkInstance};
use rand::Rng;
use rayon::prelude::*;

use crate::error::SimError;

/// Same table as [`aloha_core::geometry::tabulate_moments`], computed in
/// parallel.
pub fn tabulate_moments_parallel(spec: TableSpec) -> Result<MomentTable, SimError> {
    let mut acc = MomentAccumulator::new(spec)?;
    let placements: Vec<Vec<f64>> = (0..spec.placements_per_k)
        .into_par_iter()
        .map(|index| spec.placement(index))
        .collect();
    for alphas in &placements {
        acc.push(alphas);
    }
    Ok(acc.finish()?)
}

/// Masks per sub-stream in [`sample_collection`].
pub const MASK_CHUNK: usize = 1000;

/// Monte Carlo collection frequencies over random activation masks.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskSample {
    pub masks: usize,
    /// Per user, the fraction of masks in which the user was collected.
    pub noncooperative: Vec<Estimate>,
    pub cooperative: Vec<Estimate>,
    /// Per user, exact count of masks where cooperative decoding collected
    /// the user and non-cooperative did not, or the reverse.
    pub coop_only: Vec<usize>,
    pub noncoop_only: Vec<usize>,
    /// Users collected per mask, averaged over masks.
    pub total_noncoop: Estimate,
    pub total_coop: Estimate,
}

/// Exact running sums of a per-mask integer count.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    sum: u64,
    sum_sq: u64,
}

impl Moments {
    fn push(&mut self, x: usize) {
        self.sum += x as u64;
        self.sum_sq += (x * x) as u64;
    }

    fn estimate(&self, total: usize) -> Estimate {
        let n = total as f64;
        let mean = self.sum as f64 / n;
        let var = if total > 1 {
            ((self.sum_sq as f64 - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        Estimate {
            value: mean,
            std_err: (var / n).sqrt(),
        }
    }
}

fn bernoulli(count: usize, total: usize) -> Estimate {
    let q = count as f64 / total as f64;
    Estimate {
        value: q,
        std_err: (q * (1.0 - q) / total as f64).sqrt(),
    }
}

/// Draws `masks` activation masks (each user active with probability `p`)
/// on the fixed deployment of `instance`, decoding each with both decoders.
pub fn sample_collection(instance: &NetworkInstance, masks: usize, seed: u64) -> MaskSample {
    let n = instance.params.n();
    let p = instance.params.p();
    let full = build_full_adjacency(instance);
    let chunks = masks.div_ceil(MASK_CHUNK);
    let counts: Vec<([Vec<usize>; 4], [Moments; 2])> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = substream(seed, &[tag::ORACLE, chunk as u64]);
            let mut c = [vec![0; n], vec![0; n], vec![0; n], vec![0; n]];
            let mut totals = [Moments::default(); 2];
            let mut mask = vec![false; n];
            let size = MASK_CHUNK.min(masks - chunk * MASK_CHUNK);
            for _ in 0..size {
                for flag in mask.iter_mut() {
                    *flag = rng.gen::<f64>() < p;
                }
                let graph = full.restrict(&mask);
                let nc = decode_noncooperative(&graph).collected;
                let co = decode_cooperative(&graph).collected;
                for i in 0..n {
                    c[0][i] += usize::from(nc[i]);
                    c[1][i] += usize::from(co[i]);
                    c[2][i] += usize::from(co[i] && !nc[i]);
                    c[3][i] += usize::from(nc[i] && !co[i]);
                }
                totals[0].push(nc.iter().filter(|&&x| x).count());
                totals[1].push(co.iter().filter(|&&x| x).count());
            }
            (c, totals)
        })
        .collect();
    let mut total = [vec![0; n], vec![0; n], vec![0; n], vec![0; n]];
    let mut totals = [Moments::default(); 2];
    for (c, t) in &counts {
        for (acc, part) in totals.iter_mut().zip(t) {
            acc.sum += part.sum;
            acc.sum_sq += part.sum_sq;
        }
        for (t, part) in total.iter_mut().zip(c) {
            for (a, b) in t.iter_mut().zip(part) {
                *a += b;
            }
        }
    }
    let [nc, co, coop_only, noncoop_only] = total;
    MaskSample {
        masks,
        noncooperative: nc.iter().map(|&c| bernoulli(c, masks)).collect(),
        cooperative: co.iter().map(|&c| bernoulli(c, masks)).collect(),
        coop_only,
        noncoop_only,
        total_noncoop: totals[0].estimate(masks),
        total_coop: totals[1].estimate(masks),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use aloha_core::geometry::tabulate_moments;
    use aloha_core::scenario::generate_instance;
    use aloha_core::SystemParams;

    #[test]
    fn parallel_table_matches_sequential() {
        let spec = TableSpec {
            k_max: 6,
            s_max: 3,
            placements_per_k: 64,
            samples_per_placement: 800,
            seed: 11,
        };
        let seq = tabulate_moments(spec).unwrap();
        for threads in [1, 3] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let par = pool.install(|| tabulate_moments_parallel(spec)).unwrap();
            assert_eq!(par, seq);
        }
    }

    #[test]
    fn mask_sample_is_reproducible_across_pools() {
        let params = SystemParams::new(6, 3, 0.25, 0.5).unwrap();
        let inst = generate_instance(params, &mut substream(5, &[0]));
        let a = sample_collection(&inst, 2500, 1);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();
        let b = pool.install(|| sample_collection(&inst, 2500, 1));
        assert_eq!(a, b);
        assert!(a.noncoop_only.iter().all(|&c| c == 0));
    }
}
