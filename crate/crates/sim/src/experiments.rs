//! Load sweeps, maximal-load estimation and comparison reports.

use std::fmt;
use std::path::PathBuf;

use aloha_core::analytics::{
    collection_prob_noncoop_asymptotic, g_bullet, heuristic_coop, lower_bound_conditional,
    single_station_peak, HeuristicClamps,
};
use aloha_core::decoders::{decode_cooperative, decode_noncooperative};
use aloha_core::scenario::{build_adjacency, generate_instance};
use aloha_core::stream::{substream, tag};
use aloha_core::{AsymptoticParams, Estimate, MomentTable, SystemParams};
use rayon::prelude::*;

use crate::error::SimError;
use crate::format::{exact, sig6};
use crate::manifest::RunManifest;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub m: usize,
    pub p: f64,
    /// Mean number of stations heard by a user; sets `r = sqrt(lambda / (m pi))`.
    pub lambda: f64,
    /// Requested loads; each is realized as `n = round(G m / p)`.
    pub g_grid: Vec<f64>,
    pub runs_per_point: usize,
    pub seed: u64,
    pub k_max: usize,
    pub moment_table_path: Option<PathBuf>,
}

impl SweepConfig {
    pub fn radius(&self) -> f64 {
        SystemParams::radius_for_lambda(self.lambda, self.m)
    }

    pub fn users_for(&self, g: f64) -> usize {
        (g * self.m as f64 / self.p).round() as usize
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.g_grid.is_empty() {
            return Err(SimError::Usage("load grid is empty".into()));
        }
        if let Some(g) = self.g_grid.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
            return Err(SimError::Usage(format!("load {g} is not a nonnegative number")));
        }
        if self.runs_per_point == 0 {
            return Err(SimError::Usage("runs per point must be positive".into()));
        }
        if self.k_max == 0 {
            return Err(SimError::Usage("k_max must be positive".into()));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(SimError::Usage(format!("lambda must be positive, got {}", self.lambda)));
        }
        // checks m, p and the derived radius once, independent of n
        SystemParams::new(1, self.m, self.radius(), self.p)?;
        Ok(())
    }
}

/// Which analytic columns hit a clamp or a warning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClampFlags {
    pub analytic_absent: bool,
    pub noncoop: bool,
    pub sigma1: bool,
    pub rho1: bool,
    pub sigma2: bool,
    pub truncation: bool,
}

impl ClampFlags {
    pub fn any_clamp(&self) -> bool {
        self.noncoop || self.sigma1 || self.rho1 || self.sigma2
    }
}

impl fmt::Display for ClampFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = [
            (self.analytic_absent, "absent"),
            (self.noncoop, "noncoop"),
            (self.sigma1, "sigma1"),
            (self.rho1, "rho1"),
            (self.sigma2, "sigma2"),
            (self.truncation, "truncation"),
        ];
        let set: Vec<&str> = names.iter().filter(|(on, _)| *on).map(|(_, n)| *n).collect();
        if set.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&set.join("+"))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub g_realized: f64,
    pub n: usize,
    /// `P(collected | active)` as collected over active, pooled over runs.
    pub mc_prob_noncoop: Estimate,
    pub mc_prob_coop: Estimate,
    /// The same probability as mean collected over `n p`.
    pub mc_prob_noncoop_np: Estimate,
    pub mc_prob_coop_np: Estimate,
    /// Collected users per station, averaged over runs.
    pub mc_t_noncoop: f64,
    pub mc_t_coop: f64,
    pub analytic_prob_noncoop: Option<f64>,
    pub analytic_prob_coop: Option<f64>,
    /// Conditional lower bound `(1 - e^-lambda) e^(-4 psi)`.
    pub lower_bound: f64,
    pub clamp_flags: ClampFlags,
}

#[derive(Debug, Clone, Copy, Default)]
struct RunCounts {
    active: usize,
    noncoop: usize,
    coop: usize,
}

fn pooled(runs: &[RunCounts], collected: impl Fn(&RunCounts) -> usize) -> Estimate {
    let active: usize = runs.iter().map(|r| r.active).sum();
    if active == 0 {
        return Estimate {
            value: 0.0,
            std_err: 0.0,
        };
    }
    let total: usize = runs.iter().map(&collected).sum();
    let q = total as f64 / active as f64;
    let a = active as f64;
    let std_err = if runs.len() > 1 {
        let resid: f64 = runs
            .iter()
            .map(|r| {
                let d = collected(r) as f64 - q * r.active as f64;
                d * d
            })
            .sum();
        let r = runs.len() as f64;
        (resid * r / (r - 1.0)).sqrt() / a
    } else {
        (q * (1.0 - q) / a).sqrt()
    };
    Estimate { value: q, std_err }
}

fn mean_of(values: impl ExactSizeIterator<Item = f64> + Clone) -> Estimate {
    let r = values.len() as f64;
    let mean = values.clone().sum::<f64>() / r;
    let std_err = if values.len() > 1 {
        let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
        (ss / (r - 1.0) / r).sqrt()
    } else {
        0.0
    };
    Estimate {
        value: mean,
        std_err,
    }
}

fn run_once(config: &SweepConfig, n: usize, run: usize) -> RunCounts {
    let params = SystemParams::new(n, config.m, config.radius(), config.p)
        .expect("sweep parameters validated");
    let mut rng = substream(
        config.seed,
        &[
            tag::SWEEP,
            config.m as u64,
            config.p.to_bits(),
            config.lambda.to_bits(),
            n as u64,
            run as u64,
        ],
    );
    let instance = generate_instance(params, &mut rng);
    let graph = build_adjacency(&instance);
    RunCounts {
        active: instance.active_count(),
        noncoop: decode_noncooperative(&graph).collected_count(),
        coop: decode_cooperative(&graph).collected_count(),
    }
}

fn summarize(
    config: &SweepConfig,
    n: usize,
    runs: &[RunCounts],
    table: Option<&MomentTable>,
) -> Result<SweepRow, SimError> {
    let g = n as f64 * config.p / config.m as f64;
    let zero = Estimate {
        value: 0.0,
        std_err: 0.0,
    };
    let (nc, co, nc_np, co_np) = if n == 0 {
        (zero, zero, zero, zero)
    } else {
        let expected = n as f64 * config.p;
        (
            pooled(runs, |r| r.noncoop),
            pooled(runs, |r| r.coop),
            mean_of(runs.iter().map(|r| r.noncoop as f64 / expected)),
            mean_of(runs.iter().map(|r| r.coop as f64 / expected)),
        )
    };
    let per_station = |f: fn(&RunCounts) -> usize| {
        runs.iter().map(f).sum::<usize>() as f64 / (runs.len() * config.m) as f64
    };

    let mut flags = ClampFlags::default();
    let (analytic_nc, analytic_co) = match table {
        None => {
            flags.analytic_absent = true;
            (None, None)
        }
        Some(table) => {
            let params = AsymptoticParams::new(config.lambda, g, config.p)?;
            let first = collection_prob_noncoop_asymptotic(&params, table, config.k_max)?;
            let heur = heuristic_coop(&params, table, config.k_max)?;
            let HeuristicClamps {
                sigma1,
                rho1,
                sigma2,
            } = heur.clamped;
            flags.noncoop = first.conditional.clamped;
            flags.sigma1 = sigma1;
            flags.rho1 = rho1;
            flags.sigma2 = sigma2;
            flags.truncation = first.truncation_warning;
            (Some(first.conditional.value), Some(heur.conditional))
        }
    };

    Ok(SweepRow {
        g_realized: g,
        n,
        mc_prob_noncoop: nc,
        mc_prob_coop: co,
        mc_prob_noncoop_np: nc_np,
        mc_prob_coop_np: co_np,
        mc_t_noncoop: per_station(|r| r.noncoop),
        mc_t_coop: per_station(|r| r.coop),
        analytic_prob_noncoop: analytic_nc,
        analytic_prob_coop: analytic_co,
        lower_bound: lower_bound_conditional(config.lambda, g * config.lambda),
        clamp_flags: flags,
    })
}

/// Runs `runs_per_point` fresh deployments at every grid load and decodes
/// each with both decoders.
///
/// Run `j` at `n` users draws from a sub-stream keyed by
/// `(seed, m, p, lambda, n, j)`, so any subset of the grid reproduces the
/// matching rows of a larger sweep. Analytic columns are filled only when a
/// table is given. A load rounding to `n = 0` yields zero estimates.
pub fn sweep_load(
    config: &SweepConfig,
    table: Option<&MomentTable>,
) -> Result<Vec<SweepRow>, SimError> {
    config.validate()?;
    let users: Vec<usize> = config.g_grid.iter().map(|&g| config.users_for(g)).collect();
    let runs = config.runs_per_point;
    let counts: Vec<RunCounts> = (0..users.len() * runs)
        .into_par_iter()
        .map(|cell| {
            let n = users[cell / runs];
            if n == 0 {
                RunCounts::default()
            } else {
                run_once(config, n, cell % runs)
            }
        })
        .collect();
    users
        .iter()
        .zip(counts.chunks(runs))
        .map(|(&n, chunk)| summarize(config, n, chunk, table))
        .collect()
}

pub const SWEEP_COLUMNS: [&str; 16] = [
    "G_realized",
    "n",
    "mc_prob_noncoop",
    "mc_prob_noncoop_stderr",
    "mc_prob_coop",
    "mc_prob_coop_stderr",
    "mc_prob_noncoop_np",
    "mc_prob_noncoop_np_stderr",
    "mc_prob_coop_np",
    "mc_prob_coop_np_stderr",
    "mc_T_noncoop",
    "mc_T_coop",
    "analytic_prob_noncoop",
    "analytic_prob_coop",
    "lower_bound",
    "clamp_flags",
];

/// Manifest line, header row, then one line per row. Absent analytic values
/// are empty fields.
pub fn render_sweep_csv(manifest: &RunManifest, rows: &[SweepRow]) -> String {
    let opt = |v: Option<f64>| v.map(sig6).unwrap_or_default();
    let mut out = format!("{manifest}\n{}\n", SWEEP_COLUMNS.join(","));
    for row in rows {
        let fields = [
            exact(row.g_realized),
            row.n.to_string(),
            sig6(row.mc_prob_noncoop.value),
            sig6(row.mc_prob_noncoop.std_err),
            sig6(row.mc_prob_coop.value),
            sig6(row.mc_prob_coop.std_err),
            sig6(row.mc_prob_noncoop_np.value),
            sig6(row.mc_prob_noncoop_np.std_err),
            sig6(row.mc_prob_coop_np.value),
            sig6(row.mc_prob_coop_np.std_err),
            sig6(row.mc_t_noncoop),
            sig6(row.mc_t_coop),
            opt(row.analytic_prob_noncoop),
            opt(row.analytic_prob_coop),
            sig6(row.lower_bound),
            row.clamp_flags.to_string(),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GBulletRow {
    pub lambda: f64,
    pub eps: f64,
    pub noncoop: f64,
    pub coop: f64,
}

/// The cooperative to non-cooperative `G•` ratio where the non-cooperative
/// value peaks over the lambda grid; ties are averaged.
#[derive(Debug, Clone, PartialEq)]
pub struct BestRatio {
    pub eps: f64,
    pub lambdas: Vec<f64>,
    pub noncoop: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GBulletTable {
    pub rows: Vec<GBulletRow>,
}

impl GBulletTable {
    pub fn best_ratio(&self, eps: f64) -> Option<BestRatio> {
        let rows: Vec<&GBulletRow> = self.rows.iter().filter(|r| r.eps == eps).collect();
        let best = rows.iter().map(|r| r.noncoop).fold(0.0, f64::max);
        if best <= 0.0 {
            return None;
        }
        let tied: Vec<&&GBulletRow> = rows.iter().filter(|r| r.noncoop == best).collect();
        let ratio = tied.iter().map(|r| r.coop / r.noncoop).sum::<f64>() / tied.len() as f64;
        Some(BestRatio {
            eps,
            lambdas: tied.iter().map(|r| r.lambda).collect(),
            noncoop: best,
            ratio,
        })
    }

    pub fn render_csv(&self, manifest: &RunManifest) -> String {
        let mut out = format!("{manifest}\nlambda,eps,G_bullet_noncoop,G_bullet_coop\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                exact(r.lambda),
                exact(r.eps),
                sig6(r.noncoop),
                sig6(r.coop)
            ));
        }
        out
    }
}

/// `G•(lambda, eps)` for both decoders from pooled Monte Carlo probabilities,
/// smoothed with a window-3 moving average. `base.lambda` is replaced by each
/// entry of `lambdas`; loads realizing `n = 0` carry no estimate.
pub fn estimate_gbullet(
    base: &SweepConfig,
    lambdas: &[f64],
    eps_list: &[f64],
) -> Result<GBulletTable, SimError> {
    if lambdas.is_empty() || eps_list.is_empty() {
        return Err(SimError::Usage("lambda grid and eps list must be nonempty".into()));
    }
    let mut rows = Vec::with_capacity(lambdas.len() * eps_list.len());
    for &lambda in lambdas {
        let config = SweepConfig {
            lambda,
            ..base.clone()
        };
        let sweep = sweep_load(&config, None)?;
        let grid: Vec<f64> = sweep.iter().map(|r| r.g_realized).collect();
        let column = |f: fn(&SweepRow) -> f64| -> Vec<Option<f64>> {
            sweep.iter().map(|r| (r.n > 0).then(|| f(r))).collect()
        };
        let nc = column(|r| r.mc_prob_noncoop.value);
        let co = column(|r| r.mc_prob_coop.value);
        for &eps in eps_list {
            rows.push(GBulletRow {
                lambda,
                eps,
                noncoop: g_bullet(lambda, eps, &grid, &nc, true)?,
                coop: g_bullet(lambda, eps, &grid, &co, true)?,
            });
        }
    }
    Ok(GBulletTable { rows })
}

/// Largest value of a column and the load where it occurs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub g: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub m: usize,
    /// Largest `|analytic - MC|` per decoder (mean-over-`np` estimator),
    /// with its load; `None` when analytic columns are absent.
    pub max_dev_noncoop: Option<Peak>,
    pub max_dev_coop: Option<Peak>,
    pub peak_noncoop: Peak,
    pub peak_coop: Peak,
    /// `(np, T)` of the single-station `np e^(-np)` curve.
    pub baseline_peak: (f64, f64),
}

fn peak(rows: &[SweepRow], f: impl Fn(&SweepRow) -> Option<f64>) -> Option<Peak> {
    rows.iter()
        .filter_map(|r| f(r).map(|value| Peak {
            g: r.g_realized,
            value,
        }))
        .fold(None, |best: Option<Peak>, p| match best {
            Some(b) if b.value >= p.value => Some(b),
            _ => Some(p),
        })
}

/// Summarizes a sweep. Rows with `n = 0` are left out of the deviations.
pub fn compare_report(rows: &[SweepRow], m: usize) -> Result<CompareReport, SimError> {
    if rows.is_empty() {
        return Err(SimError::EmptyRows);
    }
    let dev = |analytic: fn(&SweepRow) -> Option<f64>, mc: fn(&SweepRow) -> f64| {
        peak(rows, |r| {
            if r.n == 0 {
                None
            } else {
                analytic(r).map(|a| (a - mc(r)).abs())
            }
        })
    };
    Ok(CompareReport {
        m,
        max_dev_noncoop: dev(|r| r.analytic_prob_noncoop, |r| r.mc_prob_noncoop_np.value),
        max_dev_coop: dev(|r| r.analytic_prob_coop, |r| r.mc_prob_coop_np.value),
        peak_noncoop: peak(rows, |r| Some(r.mc_t_noncoop)).expect("rows are nonempty"),
        peak_coop: peak(rows, |r| Some(r.mc_t_coop)).expect("rows are nonempty"),
        baseline_peak: single_station_peak(),
    })
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.m as f64;
        for (name, dev) in [
            ("noncoop", self.max_dev_noncoop),
            ("coop", self.max_dev_coop),
        ] {
            match dev {
                Some(d) => writeln!(
                    f,
                    "max |analytic - mc| {name}: {} at G={}",
                    sig6(d.value),
                    sig6(d.g)
                )?,
                None => writeln!(f, "max |analytic - mc| {name}: absent")?,
            }
        }
        for (name, p) in [("coop", self.peak_coop), ("noncoop", self.peak_noncoop)] {
            writeln!(
                f,
                "peak T {name}: {} at G={} (m*T = {})",
                sig6(p.value),
                sig6(p.g),
                sig6(p.value * m)
            )?;
        }
        writeln!(
            f,
            "single-station baseline np*exp(-np): peak {} at np={}",
            sig6(self.baseline_peak.1),
            sig6(self.baseline_peak.0)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(grid: Vec<f64>, runs: usize) -> SweepConfig {
        SweepConfig {
            m: 20,
            p: 0.25,
            lambda: 3.0,
            g_grid: grid,
            runs_per_point: runs,
            seed: 3,
            k_max: 34,
            moment_table_path: None,
        }
    }

    #[test]
    fn zero_load_row_is_all_zero() {
        let rows = sweep_load(&config(vec![0.0], 5), None).unwrap();
        let r = &rows[0];
        assert_eq!(r.n, 0);
        assert_eq!(r.mc_prob_noncoop.value, 0.0);
        assert_eq!(r.mc_prob_coop_np.value, 0.0);
        assert_eq!(r.mc_t_coop, 0.0);
        assert!(r.clamp_flags.analytic_absent);
    }

    #[test]
    fn realized_load_comes_from_rounded_n() {
        let rows = sweep_load(&config(vec![0.33], 2), None).unwrap();
        // 0.33 * 20 / 0.25 = 26.4 -> 26 users
        assert_eq!(rows[0].n, 26);
        assert_eq!(rows[0].g_realized, 26.0 * 0.25 / 20.0);
    }

    #[test]
    fn subset_matches_full_grid() {
        let full = sweep_load(&config(vec![0.1, 0.2, 0.3], 20), None).unwrap();
        let part = sweep_load(&config(vec![0.2], 20), None).unwrap();
        assert_eq!(part[0], full[1]);
    }

    #[test]
    fn cooperative_dominates() {
        for row in sweep_load(&config(vec![0.1, 0.4, 0.8], 30), None).unwrap() {
            assert!(row.mc_prob_coop.value >= row.mc_prob_noncoop.value);
            assert!(row.mc_t_coop >= row.mc_t_noncoop);
            assert!((0.0..=1.0).contains(&row.mc_prob_coop.value));
        }
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(sweep_load(&config(vec![], 5), None).is_err());
        assert!(sweep_load(&config(vec![-0.1], 5), None).is_err());
        assert!(sweep_load(&config(vec![0.1], 0), None).is_err());
        let mut c = config(vec![0.1], 5);
        c.lambda = 100.0; // r > 1/4
        assert!(sweep_load(&c, None).is_err());
    }

    #[test]
    fn report_marks_absent_analytics() {
        let rows = sweep_load(&config(vec![0.0, 0.2], 5), None).unwrap();
        let text = compare_report(&rows, 20).unwrap().to_string();
        assert!(text.contains("noncoop: absent"));
        assert!(text.contains("peak 0.367879 at np=1.00000"));
        assert!(compare_report(&[], 20).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let rows = sweep_load(&config(vec![0.0, 0.2], 5), None).unwrap();
        let csv = render_sweep_csv(&RunManifest::new("sweep", 3), &rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with('#'));
        assert_eq!(lines[1], SWEEP_COLUMNS.join(","));
        assert_eq!(lines.len(), 4);
        assert!(lines.iter().skip(1).all(|l| l.split(',').count() == 16));
    }

    #[test]
    fn best_ratio_averages_ties() {
        let row = |lambda, noncoop, coop| GBulletRow {
            lambda,
            eps: 0.2,
            noncoop,
            coop,
        };
        let table = GBulletTable {
            rows: vec![row(3.0, 0.05, 0.1), row(4.0, 0.1, 0.25), row(4.5, 0.1, 0.3)],
        };
        let best = table.best_ratio(0.2).unwrap();
        assert_eq!(best.lambdas, vec![4.0, 4.5]);
        assert!((best.ratio - 2.75).abs() < 1e-12);
        assert!(table.best_ratio(0.1).is_none());
    }
}
