//! `mqsp`: batch front end for the degree-bound, angle-finding, landscape,
//! barrier and time-dependent experiments.

mod commands;
mod output;
mod selftest;

use clap::{Args, Parser, Subcommand};
use commands::*;
use mqsp_core::barriers::EnsembleKind;
use output::{sibling, to_json, write_all, Artifacts, RunManifest};
use serde::de::DeserializeOwned;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

const DEFAULT_SEED: u64 = 1;

#[derive(Parser)]
#[command(name = "mqsp", version, about = "Bivariate QSP experiments: bounds, angle finding, landscapes, barriers")]
struct Cli {
    /// Master seed; per-experiment streams are derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; companions and the run manifest are written next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: number of processors).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// JSON config for the subcommand; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Degree bracket for e^{c(x-1)} on [-1, 1].
    Bounds(BoundsArgs),
    /// Query-count comparison table.
    Compare(CompareArgs),
    /// Random angle round trips through extraction and peeling.
    Angles(AnglesArgs),
    /// Multistart optimization-landscape surveys.
    Landscape(LandscapeArgs),
    /// Random-ensemble postselection-barrier diagnostics.
    Barriers(BarriersArgs),
    /// Time-dependent benchmark validation table.
    Tdsim(TdArgs),
    /// Quick invariant checks across all modules.
    Selftest,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Args)]
struct CompareArgs {
    /// Named grid of rows.
    #[arg(long, value_parser = ["table3"])]
    grid: Option<String>,
    /// Single row instead of a grid (needs --beta-t and --eps too).
    #[arg(long, requires_all = ["beta_t", "eps"])]
    alpha_t: Option<f64>,
    #[arg(long, requires_all = ["alpha_t", "eps"])]
    beta_t: Option<f64>,
    #[arg(long, requires_all = ["alpha_t", "beta_t"])]
    eps: Option<f64>,
    #[arg(long)]
    lchs_c: Option<f64>,
    #[arg(long)]
    lchs_p: Option<f64>,
}

#[derive(Args)]
struct AnglesArgs {
    #[arg(long)]
    programs: Option<usize>,
    #[arg(long)]
    max_degree: Option<usize>,
    #[arg(long, value_enum)]
    schedule: Option<ScheduleChoice>,
    #[arg(long)]
    theta_max: Option<f64>,
}

#[derive(Args)]
struct LandscapeArgs {
    /// Bidegree as `d_R,d_I`.
    #[arg(long, value_parser = parse_pair)]
    bidegree: Option<(usize, usize)>,
    #[arg(long)]
    alpha_t: Option<f64>,
    #[arg(long)]
    beta_t: Option<f64>,
    /// `single-row` or `full-tensor`.
    #[arg(long, value_parser = parse_target)]
    target: Option<mqsp_core::landscape::TargetKind>,
    /// `block` or `interleaved`.
    #[arg(long, value_parser = parse_schedule)]
    schedule: Option<mqsp_core::landscape::ScheduleKind>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    conv_tol: Option<f64>,
    #[arg(long)]
    c_inf_restarts: Option<usize>,
}

#[derive(Args)]
struct BarriersArgs {
    /// `gue-wishart`, `rank1` or `near-diag`.
    #[arg(long)]
    ensemble: Option<EnsembleKind>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    /// Comma-separated β_I·T values.
    #[arg(long, value_delimiter = ',')]
    beta_t: Option<Vec<f64>>,
    #[arg(long)]
    param: Option<f64>,
    #[arg(long)]
    kreiss: bool,
    /// Comma-separated pseudospectral radii.
    #[arg(long, value_delimiter = ',')]
    pseudo_eps: Option<Vec<f64>>,
    #[arg(long)]
    defect: bool,
}

#[derive(Args)]
struct TdArgs {
    /// Comma-separated durations, paired with --r.
    #[arg(long = "t", value_delimiter = ',', requires = "r")]
    t: Option<Vec<f64>>,
    /// Comma-separated segment counts, paired with --t.
    #[arg(long, value_delimiter = ',', requires = "t")]
    r: Option<Vec<usize>>,
    #[arg(long)]
    eps: Option<f64>,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected d_R,d_I, got '{s}'"))?;
    Ok((a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?))
}

pub enum Failure {
    Usage(String),
    Validation(String, Artifacts),
    Core(mqsp_core::Error),
}

impl From<mqsp_core::Error> for Failure {
    fn from(e: mqsp_core::Error) -> Self {
        use mqsp_core::Error::*;
        match e {
            Domain(_) | BidegreeMismatch { .. } | LengthMismatch { .. } | BadSchedule(_) => Failure::Usage(e.to_string()),
            other => Failure::Core(other),
        }
    }
}

fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, Failure> {
    match path {
        None => Ok(T::default()),
        Some(p) => read_json(p),
    }
}

fn read_json<T: DeserializeOwned>(p: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", p.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("bad config {}: {e}", p.display())))
}

fn dispatch(cli: &Cli, seed: u64) -> Result<Artifacts, Failure> {
    let cfg_path = cli.config.as_deref();
    match &cli.cmd {
        Cmd::Bounds(a) => {
            let mut c: BoundsConfig = load_config(cfg_path)?;
            c.c = a.c.unwrap_or(c.c);
            c.eps = a.eps.unwrap_or(c.eps);
            bounds(&c)
        }
        Cmd::Compare(a) => {
            let mut c: CompareConfig = load_config(cfg_path)?;
            if a.grid.is_some() {
                c.rows = CompareConfig::default().rows;
            }
            if let (Some(x), Some(y), Some(e)) = (a.alpha_t, a.beta_t, a.eps) {
                c.rows = vec![(x, y, e)];
            }
            c.lchs_c = a.lchs_c.unwrap_or(c.lchs_c);
            c.lchs_p = a.lchs_p.unwrap_or(c.lchs_p);
            compare_table(&c)
        }
        Cmd::Angles(a) => {
            let mut c: AnglesConfig = load_config(cfg_path)?;
            c.programs = a.programs.unwrap_or(c.programs);
            c.max_degree = a.max_degree.unwrap_or(c.max_degree);
            c.schedule = a.schedule.unwrap_or(c.schedule);
            c.theta_max = a.theta_max.unwrap_or(c.theta_max);
            angles(&c, seed)
        }
        Cmd::Landscape(a) => {
            let mut cfgs = match cfg_path {
                None => vec![default_survey()],
                Some(p) => read_json::<LandscapeConfig>(p)?.into_vec(),
            };
            for c in &mut cfgs {
                c.bidegree = a.bidegree.unwrap_or(c.bidegree);
                c.alpha_t = a.alpha_t.unwrap_or(c.alpha_t);
                c.beta_t = a.beta_t.unwrap_or(c.beta_t);
                c.target_kind = a.target.unwrap_or(c.target_kind);
                c.schedule_kind = a.schedule.unwrap_or(c.schedule_kind);
                c.n_trials = a.trials.unwrap_or(c.n_trials);
                c.conv_tol = a.conv_tol.unwrap_or(c.conv_tol);
                c.c_inf_restarts = a.c_inf_restarts.unwrap_or(c.c_inf_restarts);
                if cli.seed.is_some() || cfg_path.is_none() {
                    c.seed = seed;
                }
            }
            landscape(&cfgs)
        }
        Cmd::Barriers(a) => {
            let mut c: BarriersConfig = load_config(cfg_path)?;
            c.ensemble = a.ensemble.unwrap_or(c.ensemble);
            c.n = a.n.unwrap_or(c.n);
            c.samples = a.samples.unwrap_or(c.samples);
            c.beta_t = a.beta_t.clone().unwrap_or(c.beta_t);
            c.param = a.param.unwrap_or(c.param);
            c.kreiss |= a.kreiss;
            c.defect |= a.defect;
            c.pseudo_eps = a.pseudo_eps.clone().unwrap_or(c.pseudo_eps);
            barriers(&c, seed)
        }
        Cmd::Tdsim(a) => {
            let mut c: TdConfig = load_config(cfg_path)?;
            if let (Some(ts), Some(rs)) = (&a.t, &a.r) {
                if ts.len() != rs.len() {
                    return Err(Failure::Usage(format!("--t has {} values but --r has {}", ts.len(), rs.len())));
                }
                c.rows = ts.iter().copied().zip(rs.iter().copied()).collect();
            }
            c.eps = a.eps.unwrap_or(c.eps);
            tdsim(&c)
        }
        Cmd::Selftest => {
            let (art, ok) = selftest::run(seed);
            if ok {
                Ok(art)
            } else {
                Err(Failure::Validation("self-test failures".into(), art))
            }
        }
    }
}

fn subcommand_name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::Bounds(_) => "bounds",
        Cmd::Compare(_) => "compare",
        Cmd::Angles(_) => "angles",
        Cmd::Landscape(_) => "landscape",
        Cmd::Barriers(_) => "barriers",
        Cmd::Tdsim(_) => "tdsim",
        Cmd::Selftest => "selftest",
    }
}

fn emit(cli: &Cli, seed: u64, art: &Artifacts, started: Instant) -> std::io::Result<()> {
    let Some(out) = &cli.out else {
        return std::io::stdout().write_all(&art.primary);
    };
    let written = write_all(out, art)?;
    let manifest = RunManifest {
        subcommand: subcommand_name(&cli.cmd).into(),
        config_path: cli.config.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
        seed,
        outputs: written.iter().map(|p| p.display().to_string()).collect(),
        versions: BTreeMap::from([
            ("mqsp".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("mqsp-core".to_string(), mqsp_core::VERSION.to_string()),
        ]),
        wall_time: started.elapsed().as_secs_f64(),
    };
    std::fs::write(sibling(out, ".manifest.json"), to_json(&manifest))
}

fn main() -> ExitCode {
    let started = Instant::now();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(w) = cli.workers {
        if w == 0 {
            eprintln!("--workers must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("cannot configure worker pool: {e}");
            return ExitCode::from(1);
        }
    }
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let (art, code, msg) = match dispatch(&cli, seed) {
        Ok(art) => (art, 0, None),
        Err(Failure::Validation(m, art)) => (art, 1, Some(m)),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(2);
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = emit(&cli, seed, &art, started) {
        eprintln!("error writing output: {e}");
        return ExitCode::from(1);
    }
    if let Some(m) = msg {
        eprintln!("validation failed: {m}");
    }
    ExitCode::from(code)
}
