//! Command-line front end. The binary parses arguments and hands them to
//! [`execute`].

use std::io::Write;
use std::path::{Path, PathBuf};

use aloha_core::geometry::TableSpec;
use aloha_core::scenario::generate_instance;
use aloha_core::stream::{substream, tag};
use aloha_core::SystemParams;
use clap::{Args, Parser, Subcommand};

use crate::error::SimError;
use crate::experiments::{compare_report, estimate_gbullet, render_sweep_csv, sweep_load, SweepConfig};
use crate::format::sig6;
use crate::manifest::RunManifest;
use crate::oracle::OracleComparison;
use crate::parallel::tabulate_moments_parallel;
use crate::table_io::{checksum, load_table, render_table};
use crate::DEFAULT_SEED;

#[derive(Debug, Parser)]
#[command(name = "aloha", version, about = "Multi-station slotted Aloha simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub moment_table: Option<PathBuf>,
    /// Number of terms kept in the series (largest union size for tables).
    #[arg(long, default_value_t = 34)]
    pub k_max: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate union-of-disks area moments and write them to --out.
    Tabulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        s_max: usize,
        #[arg(long, default_value_t = 4000)]
        placements: usize,
        #[arg(long, default_value_t = 30_000)]
        samples: usize,
    },
    /// Sweep the normalized load and write one CSV row per grid point.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = 3.0)]
        lambda: f64,
        /// `start:stop:step` or a comma-separated list of loads.
        #[arg(long, default_value = "0:1:0.05")]
        grid: String,
        /// Skip the analytic columns, so no moment table is needed.
        #[arg(long)]
        no_analytic: bool,
    },
    /// Maximal load meeting a decoding target, for both decoders.
    Gbullet {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value = "1:8:0.5")]
        lambdas: String,
        #[arg(long, default_value = "0.08,0.1,0.2")]
        eps: String,
        #[arg(long, default_value = "0:0.5:0.0025")]
        grid: String,
    },
    /// Exact per-user probabilities on a small deployment against sampled
    /// activation masks.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Deployment file; a random one is drawn from --seed otherwise.
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long, default_value_t = 0.25, conflicts_with = "lambda")]
        r: f64,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 0.25)]
        p: f64,
        #[arg(long, default_value_t = 100_000)]
        masks: usize,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SystemArgs {
    #[arg(long, default_value_t = 100)]
    pub m: usize,
    #[arg(long, default_value_t = 0.25)]
    pub p: f64,
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
}

/// Text a command produced, not yet written anywhere.
#[derive(Debug, Default)]
pub struct Output {
    pub files: Vec<(PathBuf, String)>,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `start:stop:step` (inclusive of `stop`) or `a,b,c`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, SimError> {
    let bad = || SimError::Usage(format!("bad grid `{text}`"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let values = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=count).map(|i| start + i as f64 * step).collect()
    } else {
        text.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(bad());
    }
    Ok(values)
}

fn emit(out: &mut Output, target: &Option<PathBuf>, text: String, report: String) {
    match target {
        Some(path) => {
            out.files.push((path.clone(), text));
            out.stdout = report;
        }
        None => {
            out.stdout = text;
            out.stderr = report;
        }
    }
}

fn outputs(common: &Common) -> Vec<String> {
    common.out.iter().map(|p| p.display().to_string()).collect()
}

/// Runs a command without touching the file system for its outputs.
pub fn run(command: &Command) -> Result<Output, SimError> {
    let mut out = Output::default();
    match command {
        Command::Tabulate {
            common,
            s_max,
            placements,
            samples,
        } => {
            let path = common
                .out
                .clone()
                .ok_or_else(|| SimError::Usage("tabulate needs --out".into()))?;
            let spec = TableSpec {
                k_max: common.k_max,
                s_max: *s_max,
                placements_per_k: *placements,
                samples_per_placement: *samples,
                seed: common.seed,
            };
            spec.validate().map_err(|e| SimError::Usage(e.to_string()))?;
            let table = tabulate_moments_parallel(spec)?;
            let text = render_table(&table);
            let mut manifest = RunManifest::new("tabulate", common.seed)
                .param("k_max", spec.k_max)
                .param("s_max", spec.s_max)
                .param("placements_per_k", spec.placements_per_k)
                .param("samples_per_placement", spec.samples_per_placement);
            manifest.outputs = outputs(common);
            let mut summary = format!("{manifest}\n");
            table.validate()?;
            summary.push_str("invariants: ok\n");
            for k in [1, 2, spec.k_max].into_iter().filter(|&k| k <= spec.k_max) {
                summary.push_str(&format!(
                    "mean area k={k}: {} +- {}\n",
                    sig6(table.mean_area(k)),
                    sig6(table.std_err(k, 1))
                ));
                if spec.k_max == 1 {
                    break;
                }
            }
            summary.push_str(&format!("sha256: {}\n", checksum(&text)));
            out.files.push((path, text));
            out.stdout = summary;
        }
        Command::Sweep {
            common,
            system,
            lambda,
            grid,
            no_analytic,
        } => {
            let g_grid = parse_grid(grid)?;
            let table = match (&common.moment_table, no_analytic) {
                (_, true) => None,
                (Some(path), false) => Some(load_table(path)?),
                (None, false) => {
                    return Err(SimError::Usage(
                        "sweep needs --moment-table or --no-analytic".into(),
                    ))
                }
            };
            let config = SweepConfig {
                m: system.m,
                p: system.p,
                lambda: *lambda,
                g_grid,
                runs_per_point: system.runs,
                seed: common.seed,
                k_max: common.k_max,
                moment_table_path: common.moment_table.clone().filter(|_| !no_analytic),
            };
            config.validate().map_err(usage)?;
            let rows = sweep_load(&config, table.as_ref().map(|(t, _)| t))?;
            let mut manifest = RunManifest::new("sweep", common.seed)
                .param("m", config.m)
                .real("p", config.p)
                .real("lambda", config.lambda)
                .real("r", config.radius())
                .param("runs", config.runs_per_point)
                .param("grid", grid)
                .param("k_max", config.k_max);
            manifest.table_checksum = table.map(|(_, sum)| sum);
            manifest.outputs = outputs(common);
            let report = compare_report(&rows, config.m)?.to_string();
            emit(&mut out, &common.out, render_sweep_csv(&manifest, &rows), report);
        }
        Command::Gbullet {
            common,
            system,
            lambdas,
            eps,
            grid,
        } => {
            let lambda_grid = parse_grid(lambdas)?;
            let eps_list = parse_grid(eps)?;
            if let Some(e) = eps_list.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
                return Err(SimError::Usage(format!("eps {e} must lie in (0, 1)")));
            }
            let base = SweepConfig {
                m: system.m,
                p: system.p,
                lambda: lambda_grid[0],
                g_grid: parse_grid(grid)?,
                runs_per_point: system.runs,
                seed: common.seed,
                k_max: common.k_max,
                moment_table_path: None,
            };
            for &lambda in &lambda_grid {
                SweepConfig {
                    lambda,
                    ..base.clone()
                }
                .validate()
                .map_err(usage)?;
            }
            let table = estimate_gbullet(&base, &lambda_grid, &eps_list)?;
            let mut manifest = RunManifest::new("gbullet", common.seed)
                .param("m", base.m)
                .real("p", base.p)
                .param("runs", base.runs_per_point)
                .param("lambdas", lambdas)
                .param("eps", eps)
                .param("grid", grid);
            manifest.outputs = outputs(common);
            let mut report = String::new();
            for &e in &eps_list {
                match table.best_ratio(e) {
                    Some(b) => {
                        let at: Vec<String> = b.lambdas.iter().map(|l| l.to_string()).collect();
                        report.push_str(&format!(
                            "eps {e}: best noncoop G {} at lambda {}; coop/noncoop ratio {}\n",
                            sig6(b.noncoop),
                            at.join(","),
                            sig6(b.ratio)
                        ));
                    }
                    None => report.push_str(&format!("eps {e}: G is zero for every lambda\n")),
                }
            }
            emit(&mut out, &common.out, table.render_csv(&manifest), report);
        }
        Command::Oracle {
            common,
            instance,
            n,
            m,
            r,
            lambda,
            p,
            masks,
        } => {
            if *masks == 0 {
                return Err(SimError::Usage("--masks must be positive".into()));
            }
            let mut manifest = RunManifest::new("oracle", common.seed).param("masks", masks);
            let inst = match instance {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
                    manifest = manifest.param("instance", path.display());
                    manifest = manifest.param("instance_sha256", checksum(&text));
                    crate::instance_io::parse_instance(&text)?
                }
                None => {
                    let r = lambda.map_or(*r, |l| SystemParams::radius_for_lambda(l, *m));
                    let params = SystemParams::new(*n, *m, r, *p).map_err(usage)?;
                    manifest = manifest.param("n", n).param("m", m).real("r", r).real("p", *p);
                    generate_instance(params, &mut substream(common.seed, &[tag::DEPLOYMENT]))
                }
            };
            if inst.params.n() > aloha_core::decoders::MAX_ORACLE_USERS {
                return Err(SimError::Usage(format!(
                    "oracle supports at most {} users",
                    aloha_core::decoders::MAX_ORACLE_USERS
                )));
            }
            let cmp = OracleComparison::run(&inst, *masks, common.seed)?;
            manifest.outputs = outputs(common);
            let mut text = format!("{manifest}\n{cmp}");
            text.push_str(&analytic_line(&inst.params, common)?);
            emit(&mut out, &common.out, text, String::new());
        }
    }
    Ok(out)
}

fn usage(e: impl std::fmt::Display) -> SimError {
    SimError::Usage(e.to_string())
}

/// Position-averaged finite-regime bracket for the non-cooperative decoder,
/// printed for reference next to the per-user values.
fn analytic_line(params: &SystemParams, common: &Common) -> Result<String, SimError> {
    let table = match &common.moment_table {
        Some(path) => load_table(path)?.0,
        None => tabulate_moments_parallel(TableSpec {
            k_max: params.m(),
            s_max: params.n().saturating_sub(1).max(1),
            placements_per_k: 4000,
            samples_per_placement: 4000,
            seed: common.seed,
        })?,
    };
    Ok(
        match aloha_core::analytics::collection_prob_noncoop_finite(params, &table) {
            Ok(b) => format!(
                "# position-averaged noncoop probability (analytic): {} in [{}, {}]\n",
                sig6(b.nominal),
                sig6(b.lower),
                sig6(b.upper)
            ),
            Err(e) => format!("# position-averaged noncoop probability (analytic): n/a, {e}\n"),
        },
    )
}

/// Writes `text` to a sibling temporary file, then renames it into place.
pub fn write_atomic(path: &Path, text: &str) -> Result<(), SimError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    let result = std::fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(text.as_bytes()).and_then(|_| f.sync_all()))
        .and_then(|_| std::fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(SimError::io(path, e));
    }
    Ok(())
}

fn common(command: &Command) -> &Common {
    match command {
        Command::Tabulate { common, .. }
        | Command::Sweep { common, .. }
        | Command::Gbullet { common, .. }
        | Command::Oracle { common, .. } => common,
    }
}

/// Runs a parsed command: sizes the thread pool, computes every output, and
/// only then writes files and prints.
pub fn execute(cli: &Cli) -> Result<(), SimError> {
    if let Some(threads) = common(&cli.command).threads {
        if threads == 0 {
            return Err(SimError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| SimError::Usage(e.to_string()))?;
    }
    let out = run(&cli.command)?;
    for (path, text) in &out.files {
        write_atomic(path, text)?;
    }
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    Ok(())
}
