//! Closed-form and heuristic decoding probabilities.
//!
//! All probabilities returned here are conditional on the tagged user being
//! active, except where a function name says otherwise; multiply by `p` (see
//! [`unconditional`]) for the unconditional value.
//!
//! The inclusion-exclusion series alternate in sign with terms as large as
//! `lambda^k / k!`, so a truncated evaluation can leave `[0, 1]`. Every series
//! result carries the raw value next to the clamped one and a flag saying
//! whether clamping fired; callers are expected to drop flagged points from
//! comparisons rather than trust them.

use alloc::vec::Vec;
use core::f64::consts::E;

use thiserror::Error;

use crate::geometry::MomentTable;
use crate::scenario::{ScenarioError, SystemParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("series needs k_max = {needed} rows but the moment table has {available}")]
    MissingMoments { needed: usize, available: usize },
    #[error("finite-regime expansion needs moments up to s = {needed}, table has s_max = {available}")]
    MissingHigherMoments { needed: usize, available: usize },
    #[error("k_max must be positive")]
    ZeroTruncation,
    #[error("k = {k} outside 1..={m}")]
    IndexOutOfRange { k: usize, m: usize },
    #[error("polynomial expansion is numerically unstable (amplification {0:e}); use the asymptotic formula")]
    UnstableExpansion(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("load grid is empty")]
    EmptyGrid,
    #[error("grid has {grid} points but {values} values")]
    GridMismatch { grid: usize, values: usize },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// Asymptotic regime: `lambda` stations per user, `psi = G lambda` active
/// users per station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticParams {
    lambda: f64,
    psi: f64,
    load: f64,
    p: f64,
}

impl AsymptoticParams {
    pub fn new(lambda: f64, load: f64, p: f64) -> Result<Self, AnalyticsError> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(AnalyticsError::InvalidParameter("lambda must be nonnegative"));
        }
        if !(load >= 0.0 && load.is_finite()) {
            return Err(AnalyticsError::InvalidParameter("load must be nonnegative"));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(AnalyticsError::InvalidParameter("p must lie in (0, 1]"));
        }
        Ok(AsymptoticParams {
            lambda,
            psi: load * lambda,
            load,
            p,
        })
    }

    /// `lambda = m r^2 pi`, `psi = n p r^2 pi`.
    pub fn from_system(params: &SystemParams) -> Self {
        AsymptoticParams {
            lambda: params.lambda(),
            psi: params.psi(),
            load: params.load(),
            p: params.p(),
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    pub fn load(&self) -> f64 {
        self.load
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

/// `P(collected) = p * P(collected | active)`.
pub fn unconditional(p: f64, conditional: f64) -> f64 {
    p * conditional
}

/// A series value before and after clamping to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub raw: f64,
    pub clamped: bool,
}

impl SeriesValue {
    fn from_raw(raw: f64) -> Self {
        let value = raw.clamp(0.0, 1.0);
        SeriesValue {
            value,
            raw,
            clamped: value != raw,
        }
    }
}

/// Non-cooperative decoding probability from the truncated series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoncoopEstimate {
    /// `P(collected | active)`, clamped.
    pub conditional: SeriesValue,
    /// `lambda > k_max / 4`: the truncation is likely too short.
    pub truncation_warning: bool,
}

impl NoncoopEstimate {
    pub fn unconditional(&self, p: f64) -> f64 {
        unconditional(p, self.conditional.value)
    }
}

fn check_truncation(table: &MomentTable, k_max: usize) -> Result<(), AnalyticsError> {
    if k_max == 0 {
        return Err(AnalyticsError::ZeroTruncation);
    }
    if k_max > table.k_max() {
        return Err(AnalyticsError::MissingMoments {
            needed: k_max,
            available: table.k_max(),
        });
    }
    Ok(())
}

/// `sum_{k=1}^{k_max} (-1)^(k-1) x^k / k! f(k)`.
fn alternating_series(x: f64, k_max: usize, mut f: impl FnMut(usize) -> f64) -> f64 {
    let mut coeff = 1.0;
    let mut sum = 0.0;
    for k in 1..=k_max {
        coeff *= x / k as f64;
        let term = coeff * f(k);
        sum += if k % 2 == 1 { term } else { -term };
    }
    sum
}

/// `sum_{k=1}^{k_max} (-1)^(k-1) lambda^k / k! exp(-E[alpha_k] psi)`.
pub fn collection_prob_noncoop_asymptotic(
    params: &AsymptoticParams,
    table: &MomentTable,
    k_max: usize,
) -> Result<NoncoopEstimate, AnalyticsError> {
    check_truncation(table, k_max)?;
    let psi = params.psi;
    let raw = alternating_series(params.lambda, k_max, |k| libm::exp(-table.mean_area(k) * psi));
    Ok(NoncoopEstimate {
        conditional: SeriesValue::from_raw(raw),
        truncation_warning: params.lambda > 0.25 * k_max as f64,
    })
}

/// `zeta_k = sum_{d=k}^m C(d, k) Lambda_d` with binomial user degrees.
pub fn zeta(k: usize, m: usize, r: f64) -> Result<f64, AnalyticsError> {
    if k == 0 || k > m {
        return Err(AnalyticsError::IndexOutOfRange { k, m });
    }
    let q = r * r * core::f64::consts::PI;
    if !(q > 0.0 && q <= 1.0) {
        return Err(ScenarioError::DiskProbabilityOutOfRange(q).into());
    }
    let (ln_q, ln_1q) = (libm::log(q), libm::log1p(-q));
    let mut sum = 0.0;
    for d in k..=m {
        let ln_lambda_d = crate::scenario::ln_choose(m, d)
            + d as f64 * ln_q
            + if d == m { 0.0 } else { (m - d) as f64 * ln_1q };
        sum += libm::exp(crate::scenario::ln_choose(d, k) + ln_lambda_d);
    }
    Ok(sum)
}

/// Bracket on `P(collected)` for finite `n, m, r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteBracket {
    /// `P(collected | active, nominal placement)`.
    pub nominal: f64,
    /// `p * nominal`. Assumes boundary users fare no worse than nominal
    /// ones, which fails when coverage rather than interference dominates.
    pub lower: f64,
    /// `p * (1 - 8r + 16r^2) * nominal`, which always holds.
    pub strict_lower: f64,
    /// `p * (nominal + 8r - 16r^2)`.
    pub upper: f64,
}

/// Largest tolerated growth of `sum_s |c_s| E[alpha^s]` over the result
/// scale before the expansion is refused.
const MAX_AMPLIFICATION: f64 = 1e6;

/// Finite-regime decoding probability bracket.
///
/// `I_k = E[(1 - p r^2 pi a)^(n-1)]` over `a ~ mu_k` is expanded as
/// `sum_s c_s E[a^s]`, using moments up to `s = n - 1`. The series over `k`
/// runs to `min(m, k_max)` of the table; omitted terms must be negligible.
pub fn collection_prob_noncoop_finite(
    params: &SystemParams,
    table: &MomentTable,
) -> Result<FiniteBracket, AnalyticsError> {
    let n = params.n();
    let m = params.m();
    let r = params.r();
    let x = params.p() * params.disk_area();
    let degree = n - 1;
    if degree > table.s_max() {
        return Err(AnalyticsError::MissingHigherMoments {
            needed: degree,
            available: table.s_max(),
        });
    }
    let amplification = libm::pow(1.0 + 4.0 * x, degree as f64);
    if amplification > MAX_AMPLIFICATION {
        return Err(AnalyticsError::UnstableExpansion(amplification));
    }
    let k_top = m.min(table.k_max());
    if k_top < m {
        let omitted = zeta(k_top + 1, m, r)?;
        if omitted > 1e-9 {
            return Err(AnalyticsError::MissingMoments {
                needed: m,
                available: table.k_max(),
            });
        }
    }

    // c_s = C(n-1, s) (-x)^s
    let mut coeffs = Vec::with_capacity(degree + 1);
    let mut c = 1.0;
    coeffs.push(c);
    for s in 1..=degree {
        c *= -x * (degree - s + 1) as f64 / s as f64;
        coeffs.push(c);
    }

    let mut nominal = 0.0;
    for k in 1..=k_top {
        let i_k: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(s, &c)| c * table.moment(k, s))
            .sum();
        let term = zeta(k, m, r)? * i_k;
        nominal += if k % 2 == 1 { term } else { -term };
    }
    let p = params.p();
    Ok(FiniteBracket {
        nominal,
        lower: p * nominal,
        strict_lower: p * (1.0 - params.boundary_probability()) * nominal,
        upper: p * (nominal + params.boundary_probability()),
    })
}

/// Unconditional lower bound `p (1 - e^-lambda) e^(-4 psi)`.
pub fn lower_bound_noncoop(params: &AsymptoticParams) -> f64 {
    params.p * lower_bound_conditional(params.lambda, params.psi)
}

/// `(1 - e^-lambda) e^(-4 psi)`.
pub fn lower_bound_conditional(lambda: f64, psi: f64) -> f64 {
    -libm::expm1(-lambda) * libm::exp(-4.0 * psi)
}

/// Uncollected probabilities after the first two peeling rounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicState {
    /// A user is still unknown after round one.
    pub sigma1: f64,
    /// A station still hears some unknown interferer after round one.
    pub rho1: f64,
    /// A user is still unknown after round two.
    pub sigma2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicClamps {
    pub sigma1: bool,
    pub rho1: bool,
    pub sigma2: bool,
}

impl HeuristicClamps {
    pub fn any(&self) -> bool {
        self.sigma1 || self.rho1 || self.sigma2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicCoop {
    pub state: HeuristicState,
    /// `1 - sigma2`.
    pub conditional: f64,
    pub clamped: HeuristicClamps,
    pub truncation_warning: bool,
}

impl HeuristicCoop {
    pub fn unconditional(&self, p: f64) -> f64 {
        unconditional(p, self.conditional)
    }
}

/// Two-round cooperative heuristic.
///
/// ```text
/// sigma1 = 1 - sum (-1)^(k-1) lambda^k/k! exp(-a_k psi)
/// rho1   =     sum (-1)^(k-1) psi^k/k!    sigma1^a_k
/// sigma2 = 1 - sum (-1)^(k-1) lambda^k/k! (1 - rho1)^a_k
/// ```
/// with `a_k = E[alpha_k]`, every sum truncated at `k_max` and every
/// quantity clamped to `[0, 1]` before it feeds the next.
pub fn heuristic_coop(
    params: &AsymptoticParams,
    table: &MomentTable,
    k_max: usize,
) -> Result<HeuristicCoop, AnalyticsError> {
    let first = collection_prob_noncoop_asymptotic(params, table, k_max)?;
    let sigma1 = 1.0 - first.conditional.value;

    let rho1 = SeriesValue::from_raw(alternating_series(params.psi, k_max, |k| {
        libm::pow(sigma1, table.mean_area(k))
    }));
    let known = 1.0 - rho1.value;
    let collected2 = SeriesValue::from_raw(alternating_series(params.lambda, k_max, |k| {
        libm::pow(known, table.mean_area(k))
    }));
    let sigma2 = 1.0 - collected2.value;

    Ok(HeuristicCoop {
        state: HeuristicState {
            sigma1,
            rho1: rho1.value,
            sigma2,
        },
        conditional: collected2.value,
        clamped: HeuristicClamps {
            sigma1: first.conditional.clamped,
            rho1: rho1.clamped,
            sigma2: collected2.clamped,
        },
        truncation_warning: first.truncation_warning,
    })
}

/// Normalized throughput `T = G P(collected | active)`.
pub fn throughput(load: f64, conditional: f64) -> f64 {
    load * conditional
}

/// Single-station slotted Aloha throughput `np e^(-np)`.
pub fn single_station(np: f64) -> f64 {
    np * libm::exp(-np)
}

/// Peak `1/e` of [`single_station`], attained at `np = 1`.
pub fn single_station_peak() -> (f64, f64) {
    (1.0, 1.0 / E)
}

/// Throughput implied by the lower bound, `G (1 - e^-lambda) e^(-4 G lambda)`.
pub fn lower_bound_throughput(load: f64, lambda: f64) -> f64 {
    load * lower_bound_conditional(lambda, load * lambda)
}

/// Peak over `G` of [`lower_bound_throughput`]: `(1 - e^-lambda) / (4 e lambda)`
/// at `G = 1 / (4 lambda)`.
pub fn lower_bound_peak(lambda: f64) -> f64 {
    -libm::expm1(-lambda) / (4.0 * E * lambda)
}

/// [`lower_bound_peak`] at `lambda = ln(1/eps)`, the best choice among
/// `lambda >= ln(1/eps)`: `(1 - eps) / (4 e ln(1/eps))`.
pub fn lower_bound_best_peak(eps: f64) -> Result<f64, AnalyticsError> {
    let lambda = crate::scenario::lambda_min(eps)?;
    Ok((1.0 - eps) / (4.0 * E * lambda))
}

/// Evenly spaced load grid `0, step, 2 step, ...` up to `g_max` inclusive.
pub fn load_grid(g_max: f64, step: f64) -> Result<Vec<f64>, AnalyticsError> {
    if !(step > 0.0) || !(g_max >= 0.0) {
        return Err(AnalyticsError::InvalidParameter("grid step and end must be positive"));
    }
    let count = libm::floor(g_max / step + 1e-9) as usize;
    Ok((0..=count).map(|i| i as f64 * step).collect())
}

/// Window-3 moving average over the defined entries; undefined entries stay
/// undefined and are skipped as neighbors.
pub fn moving_average3(values: &[Option<f64>]) -> Vec<Option<f64>> {
    (0..values.len())
        .map(|i| {
            values[i]?;
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(values.len() - 1);
            let (sum, count) = values[lo..=hi]
                .iter()
                .flatten()
                .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
            Some(sum / count as f64)
        })
        .collect()
}

/// Maximal load `G` on `grid` whose conditional decoding probability is at
/// least `1 - eps`.
///
/// Returns 0 when the coverage `1 - e^-lambda` is already below `1 - eps`.
/// `values[i]` is the probability at `grid[i]`; `None` marks points with no
/// estimate. With `smooth`, values pass through [`moving_average3`] first.
pub fn g_bullet(
    lambda: f64,
    eps: f64,
    grid: &[f64],
    values: &[Option<f64>],
    smooth: bool,
) -> Result<f64, AnalyticsError> {
    if grid.is_empty() {
        return Err(AnalyticsError::EmptyGrid);
    }
    if grid.len() != values.len() {
        return Err(AnalyticsError::GridMismatch {
            grid: grid.len(),
            values: values.len(),
        });
    }
    let target = 1.0 - eps;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(ScenarioError::EpsilonOutOfRange(eps).into());
    }
    if target > crate::scenario::coverage_probability(lambda)? {
        return Ok(0.0);
    }
    let series = if smooth {
        moving_average3(values)
    } else {
        values.to_vec()
    };
    Ok(grid
        .iter()
        .zip(&series)
        .filter(|(_, v)| v.is_some_and(|v| v >= target))
        .map(|(&g, _)| g)
        .fold(0.0, f64::max))
}

/// [`g_bullet`] for a deterministic evaluator, without smoothing.
pub fn g_bullet_with(
    lambda: f64,
    eps: f64,
    grid: &[f64],
    mut evaluator: impl FnMut(f64) -> f64,
) -> Result<f64, AnalyticsError> {
    let values: Vec<Option<f64>> = grid.iter().map(|&g| Some(evaluator(g))).collect();
    g_bullet(lambda, eps, grid, &values, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::TableSpec;
    use alloc::vec;

    fn flat_table(k_max: usize, value: f64) -> MomentTable {
        let spec = TableSpec {
            k_max,
            s_max: 1,
            placements_per_k: 1,
            samples_per_placement: 1,
            seed: 0,
        };
        let mut moments = vec![value; k_max];
        moments[0] = 1.0;
        MomentTable::from_parts(spec, moments, vec![0.0; k_max]).unwrap()
    }

    #[test]
    fn asymptotic_without_interference_is_coverage() {
        let t = flat_table(34, 2.0);
        let a = AsymptoticParams::new(3.0, 0.0, 0.25).unwrap();
        let est = collection_prob_noncoop_asymptotic(&a, &t, 34).unwrap();
        assert!((est.conditional.value - (1.0 - (-3.0f64).exp())).abs() < 1e-12);
        assert!((est.conditional.value - 0.9502).abs() < 1e-4);
        assert!(!est.truncation_warning);
        let zero = AsymptoticParams::new(0.0, 0.5, 0.25).unwrap();
        assert_eq!(
            collection_prob_noncoop_asymptotic(&zero, &t, 34).unwrap().conditional.value,
            0.0
        );
    }

    #[test]
    fn asymptotic_errors_and_warnings() {
        let t = flat_table(10, 2.0);
        let a = AsymptoticParams::new(3.0, 0.2, 0.25).unwrap();
        assert_eq!(
            collection_prob_noncoop_asymptotic(&a, &t, 11),
            Err(AnalyticsError::MissingMoments {
                needed: 11,
                available: 10
            })
        );
        assert!(collection_prob_noncoop_asymptotic(&a, &t, 0).is_err());
        assert!(collection_prob_noncoop_asymptotic(&a, &t, 10).unwrap().truncation_warning);
    }

    #[test]
    fn clamping_is_reported() {
        // far too short a truncation for lambda = 8
        let t = flat_table(3, 1.5);
        let a = AsymptoticParams::new(8.0, 0.0, 1.0).unwrap();
        let est = collection_prob_noncoop_asymptotic(&a, &t, 3).unwrap();
        assert!(est.conditional.clamped);
        assert!(est.conditional.raw > 1.0);
        assert_eq!(est.conditional.value, 1.0);
    }

    #[test]
    fn zeta_identities() {
        let r = (0.03 / core::f64::consts::PI).sqrt();
        let z1 = zeta(1, 100, r).unwrap();
        assert!((z1 - 3.0).abs() < 1e-12, "{z1}");
        let zm = zeta(5, 5, r).unwrap();
        assert!((zm / 0.03f64.powi(5) - 1.0).abs() < 1e-12);
        assert!(zeta(0, 5, r).is_err());
        assert!(zeta(6, 5, r).is_err());
    }

    #[test]
    fn zeta_large_m_limit() {
        let m = 10_000;
        let r = (3.0 / (m as f64 * core::f64::consts::PI)).sqrt();
        let z3 = zeta(3, m, r).unwrap();
        assert!(((z3 - 4.5) / 4.5).abs() < 1e-3, "{z3}");
    }

    #[test]
    fn lower_bound_examples() {
        let a = AsymptoticParams::new(3.0, 0.0, 0.4).unwrap();
        assert!((lower_bound_noncoop(&a) - 0.4 * (1.0 - (-3.0f64).exp())).abs() < 1e-15);
        let b = AsymptoticParams::new(3.0, 0.25, 1.0).unwrap();
        let expected = (1.0 - (-3.0f64).exp()) * (-3.0f64).exp();
        assert!((lower_bound_noncoop(&b) - expected).abs() < 1e-15);
        assert!((lower_bound_noncoop(&b) - 0.0473).abs() < 1e-4);
    }

    #[test]
    fn heuristic_without_interference() {
        let t = flat_table(34, 2.5);
        for lambda in [1.0, 3.0, 6.0] {
            let a = AsymptoticParams::new(lambda, 0.0, 0.25).unwrap();
            let h = heuristic_coop(&a, &t, 34).unwrap();
            let cover = (-lambda).exp();
            assert!((h.state.sigma1 - cover).abs() < 1e-12);
            assert_eq!(h.state.rho1, 0.0);
            assert!((h.state.sigma2 - cover).abs() < 1e-12);
            assert!(!h.clamped.any());
        }
    }

    #[test]
    fn throughput_basics() {
        assert_eq!(throughput(0.5, 0.0), 0.0);
        assert!((throughput(0.5, 0.6) - 0.3).abs() < 1e-15);
        let (at, peak) = single_station_peak();
        assert_eq!(at, 1.0);
        assert!((single_station(at) - peak).abs() < 1e-15);
        assert!((peak - 0.37).abs() < 0.005);
    }

    #[test]
    fn g_bullet_coverage_convention() {
        let grid = load_grid(1.0, 0.01).unwrap();
        assert_eq!(grid.len(), 101);
        let g = g_bullet_with(2.0, 0.05, &grid, |_| 1.0).unwrap();
        assert_eq!(g, 0.0);
    }

    #[test]
    fn g_bullet_exponential_threshold() {
        let step = 0.01;
        let grid = load_grid(2.0, step).unwrap();
        let g = g_bullet_with(10.0, 0.5, &grid, |g| (-g).exp()).unwrap();
        assert!((g - 2f64.ln()).abs() <= step, "{g}");
        assert!(g <= 2f64.ln());
    }

    #[test]
    fn g_bullet_errors() {
        assert_eq!(g_bullet(3.0, 0.1, &[], &[], false), Err(AnalyticsError::EmptyGrid));
        assert!(g_bullet(3.0, 0.1, &[0.0], &[], false).is_err());
        assert!(g_bullet(3.0, 0.0, &[0.0], &[Some(1.0)], false).is_err());
    }

    #[test]
    fn moving_average_skips_gaps() {
        let v = [None, Some(1.0), Some(0.5), Some(0.0)];
        let s = moving_average3(&v);
        assert_eq!(s[0], None);
        assert_eq!(s[1], Some(0.75));
        assert_eq!(s[2], Some(0.5));
        assert_eq!(s[3], Some(0.25));
    }
}
