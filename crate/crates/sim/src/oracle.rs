//! Exhaustive oracle against Monte Carlo over activation masks.

use std::fmt;

use aloha_core::decoders::{brute_force_collection_probability, CollectionProbabilities};
use aloha_core::{Estimate, NetworkInstance};

use crate::error::SimError;
use crate::format::sig6;
use crate::parallel::{sample_collection, MaskSample};

/// Standard errors allowed between an estimate and the oracle.
pub const Z_TOLERANCE: f64 = 3.0;

/// `(estimate - exact) / std_err`; zero when both agree exactly and infinite
/// when an exact-looking estimate disagrees.
pub fn z_score(estimate: &Estimate, exact: f64) -> f64 {
    let diff = estimate.value - exact;
    if estimate.std_err > 0.0 {
        diff / estimate.std_err
    } else if diff.abs() < 1e-12 {
        0.0
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison {
    pub exact: CollectionProbabilities,
    pub sample: MaskSample,
    /// Cooperative probability is at least the non-cooperative one for every
    /// user, in the exact values and in every sampled mask.
    pub dominance: bool,
}

impl OracleComparison {
    pub fn run(instance: &NetworkInstance, masks: usize, seed: u64) -> Result<Self, SimError> {
        let exact = brute_force_collection_probability(instance)?;
        let sample = sample_collection(instance, masks, seed);
        let dominance = exact
            .cooperative
            .iter()
            .zip(&exact.noncooperative)
            .all(|(c, n)| c >= n)
            && sample.noncoop_only.iter().all(|&c| c == 0);
        Ok(OracleComparison {
            exact,
            sample,
            dominance,
        })
    }

    /// Per-user z scores, non-cooperative then cooperative.
    pub fn user_z(&self) -> (Vec<f64>, Vec<f64>) {
        let z = |est: &[Estimate], exact: &[f64]| -> Vec<f64> {
            est.iter().zip(exact).map(|(e, &x)| z_score(e, x)).collect()
        };
        (
            z(&self.sample.noncooperative, &self.exact.noncooperative),
            z(&self.sample.cooperative, &self.exact.cooperative),
        )
    }

    /// Exact expected number of users collected per mask.
    pub fn exact_totals(&self) -> (f64, f64) {
        (
            self.exact.noncooperative.iter().sum(),
            self.exact.cooperative.iter().sum(),
        )
    }

    /// z scores of the per-mask collected totals.
    pub fn total_z(&self) -> (f64, f64) {
        let (nc, co) = self.exact_totals();
        (
            z_score(&self.sample.total_noncoop, nc),
            z_score(&self.sample.total_coop, co),
        )
    }
}

impl fmt::Display for OracleComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (znc, zco) = self.user_z();
        let verdict = |z: f64| if z.abs() <= Z_TOLERANCE { "pass" } else { "FAIL" };
        writeln!(
            f,
            "user,oracle_noncoop,mc_noncoop,mc_noncoop_stderr,z_noncoop,check_noncoop,\
             oracle_coop,mc_coop,mc_coop_stderr,z_coop,check_coop"
        )?;
        for i in 0..znc.len() {
            let (en, ec) = (&self.sample.noncooperative[i], &self.sample.cooperative[i]);
            writeln!(
                f,
                "{i},{},{},{},{},{},{},{},{},{},{}",
                sig6(self.exact.noncooperative[i]),
                sig6(en.value),
                sig6(en.std_err),
                sig6(znc[i]),
                verdict(znc[i]),
                sig6(self.exact.cooperative[i]),
                sig6(ec.value),
                sig6(ec.std_err),
                sig6(zco[i]),
                verdict(zco[i]),
            )?;
        }
        let (tnc, tco) = self.total_z();
        writeln!(f, "# masks={}", self.sample.masks)?;
        writeln!(
            f,
            "# total collected z: noncoop {} ({}), coop {} ({})",
            sig6(tnc),
            verdict(tnc),
            sig6(tco),
            verdict(tco)
        )?;
        writeln!(
            f,
            "# cooperative dominates non-cooperative: {}",
            if self.dominance { "yes" } else { "NO" }
        )
    }
}
