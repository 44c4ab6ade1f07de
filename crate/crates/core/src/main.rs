use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use solenoid::app::{self, BoxdimConfig, CertifyConfig, GammaGrid, MeasureConfig, Outcome, SearchSettings, SweepConfig};
use solenoid::report::OutputSet;
use solenoid::PeriodicFn;

const THREADS_ENV: &str = "SOLENOID_THREADS";

#[derive(Parser)]
#[command(name = "solenoid", version, about = "Transversality certificates, fiber measures and graph dimensions for Weierstrass-type skew products")]
struct Cli {
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; overrides SOLENOID_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON config file; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Search for a σ-bound below (γb)^q.
    Certify(CertifyArgs),
    /// Run `certify` over a list or grid of γ.
    Sweep(SweepArgs),
    /// Fiber measures: local dimension, I_r curve, SRB histogram.
    Measure(MeasureArgs),
    /// Box-counting dimension of the Weierstrass graph.
    Boxdim(BoxdimArgs),
    /// Quick checks of closed forms and one small run per module.
    Selftest,
}

#[derive(Args, Default)]
struct SearchArgs {
    #[arg(long = "qmax")]
    q_max: Option<usize>,
    #[arg(long = "pmin")]
    p_min: Option<u32>,
    #[arg(long = "pmax")]
    p_max: Option<u32>,
    /// Comma-separated ε = δ values, tried in order.
    #[arg(long, value_delimiter = ',')]
    ladder: Option<Vec<f64>>,
    #[arg(long)]
    d_max: Option<usize>,
    #[arg(long)]
    x_depth: Option<u32>,
    #[arg(long)]
    max_nodes: Option<usize>,
    #[arg(long)]
    polish: Option<u32>,
}

impl SearchArgs {
    fn apply(self, s: &mut SearchSettings) {
        set(&mut s.q_max, self.q_max);
        if self.p_min.is_some() {
            s.p_min = self.p_min;
        }
        if self.p_max.is_some() {
            s.p_max = self.p_max;
        }
        set(&mut s.ladder, self.ladder);
        set(&mut s.d_max, self.d_max);
        set(&mut s.x_depth, self.x_depth);
        set(&mut s.max_nodes, self.max_nodes);
        set(&mut s.polish, self.polish);
    }
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    b: Option<u32>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// `classical`, `zero`, or `cos=a1,a2,…;sin=b1,b2,…`.
    #[arg(long)]
    psi: Option<String>,
    #[arg(long)]
    detail: Option<usize>,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    b: Option<u32>,
    /// Comma-separated γ values; an empty string gives an empty sweep.
    #[arg(long)]
    gammas: Option<String>,
    /// `start:stop:step`, inclusive of `stop`.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    psi: Option<String>,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args)]
struct MeasureArgs {
    #[arg(long)]
    b: Option<u32>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    psi: Option<String>,
    /// Comma-separated fiber coordinates.
    #[arg(long, value_delimiter = ',')]
    xs: Option<Vec<f64>>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    atom_budget: Option<u64>,
    #[arg(long)]
    ir_grid: Option<usize>,
    #[arg(long)]
    centers: Option<usize>,
    #[arg(long)]
    mc_samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Skip the SRB histogram.
    #[arg(long)]
    no_srb: bool,
}

#[derive(Args)]
struct BoxdimArgs {
    #[arg(long)]
    b: Option<u32>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Same syntax as `--psi`; defaults to cos(2πx).
    #[arg(long)]
    phi: Option<String>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    k_min: Option<u32>,
    #[arg(long)]
    k_max: Option<u32>,
    #[arg(long)]
    trim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn parse_fn(spec: &str) -> anyhow::Result<PeriodicFn> {
    match spec.trim() {
        "classical" => return Ok(PeriodicFn::Classical),
        "zero" => return Ok(PeriodicFn::zero()),
        "cosine" => return Ok(PeriodicFn::cosine()),
        _ => {}
    }
    let (mut cos, mut sin) = (Vec::new(), Vec::new());
    for part in spec.split(';').filter(|p| !p.trim().is_empty()) {
        let (key, vals) = part.split_once('=').with_context(|| format!("bad function spec `{spec}`"))?;
        let v: Vec<f64> = vals
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("bad coefficients in `{part}`"))?;
        match key.trim() {
            "cos" => cos = v,
            "sin" => sin = v,
            k => bail!("unknown coefficient family `{k}`"),
        }
    }
    let f = PeriodicFn::TrigPoly { cos, sin };
    f.validate()?;
    Ok(f)
}

fn parse_grid(s: &str) -> anyhow::Result<GammaGrid> {
    let v: Vec<f64> = s
        .split(':')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("bad grid `{s}`"))?;
    match v[..] {
        [start, stop, step] => Ok(GammaGrid { start, stop, step }),
        _ => bail!("grid must be start:stop:step, got `{s}`"),
    }
}

fn load<T: DeserializeOwned + Default>(path: &Option<PathBuf>) -> anyhow::Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

/// Merged configuration, or a message for exit status 1.
enum Job {
    Certify(CertifyConfig),
    Sweep(SweepConfig),
    Measure(MeasureConfig),
    Boxdim(BoxdimConfig),
    Selftest,
}

fn build_job(cli_config: &Option<PathBuf>, cmd: Cmd) -> anyhow::Result<Job> {
    Ok(match cmd {
        Cmd::Certify(a) => {
            let mut c: CertifyConfig = load(cli_config)?;
            set(&mut c.b, a.b);
            if a.gamma.is_some() || a.lambda.is_some() {
                c.gamma = a.gamma;
                c.lambda = a.lambda;
            }
            if let Some(p) = a.psi {
                c.psi = parse_fn(&p)?;
            }
            set(&mut c.detail, a.detail);
            a.search.apply(&mut c.search);
            c.params()?;
            c.search.main_config(c.b)?;
            Job::Certify(c)
        }
        Cmd::Sweep(a) => {
            let mut c: SweepConfig = load(cli_config)?;
            set(&mut c.b, a.b);
            if let Some(g) = a.gammas {
                c.gammas = g
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .context("bad --gammas")?;
            }
            if let Some(g) = a.grid {
                c.grid = Some(parse_grid(&g)?);
            }
            if let Some(p) = a.psi {
                c.psi = parse_fn(&p)?;
            }
            a.search.apply(&mut c.search);
            for g in c.gamma_values()? {
                solenoid::SystemParams::new(c.b, g, c.psi.clone())?;
            }
            c.search.main_config(c.b)?;
            Job::Sweep(c)
        }
        Cmd::Measure(a) => {
            let mut c: MeasureConfig = load(cli_config)?;
            set(&mut c.b, a.b);
            if a.gamma.is_some() || a.lambda.is_some() {
                c.gamma = a.gamma;
                c.lambda = a.lambda;
            }
            if let Some(p) = a.psi {
                c.psi = parse_fn(&p)?;
            }
            set(&mut c.xs, a.xs);
            if a.depth.is_some() {
                c.depth = a.depth;
            }
            set(&mut c.atom_budget, a.atom_budget);
            set(&mut c.ir_grid, a.ir_grid);
            set(&mut c.centers, a.centers);
            set(&mut c.mc_samples, a.mc_samples);
            set(&mut c.seed, a.seed);
            if a.no_srb {
                c.srb = None;
            }
            Job::Measure(c)
        }
        Cmd::Boxdim(a) => {
            let mut c: BoxdimConfig = load(cli_config)?;
            set(&mut c.b, a.b);
            set(&mut c.lambda, a.lambda);
            if let Some(p) = a.phi {
                c.phi = parse_fn(&p)?;
            }
            set(&mut c.m, a.m);
            if a.depth.is_some() {
                c.depth = a.depth;
            }
            set(&mut c.k_min, a.k_min);
            set(&mut c.k_max, a.k_max);
            set(&mut c.trim, a.trim);
            set(&mut c.seed, a.seed);
            solenoid::dimension::theoretical_d(c.lambda, c.b)?;
            Job::Boxdim(c)
        }
        Cmd::Selftest => Job::Selftest,
    })
}

fn thread_count(flag: Option<usize>) -> anyhow::Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => {
            Ok(Some(v.trim().parse().with_context(|| format!("{THREADS_ENV}={v} is not a count"))?))
        }
        _ => Ok(None),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let (job, threads) = match build_job(&cli.config, cli.cmd).and_then(|j| Ok((j, thread_count(cli.threads)?))) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let mut out = OutputSet::new(&cli.out);
    let run = app::with_threads(threads, || {
        let outcome = match &job {
            Job::Certify(c) => app::cmd_certify(c, &mut out),
            Job::Sweep(c) => app::cmd_sweep(c, &mut out),
            Job::Measure(c) => app::cmd_measure(c, &mut out),
            Job::Boxdim(c) => app::cmd_boxdim(c, &mut out),
            Job::Selftest => app::cmd_selftest(&mut out),
        };
        (outcome, rayon::current_num_threads())
    });
    let (outcome, n_threads) = match run {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = out.write(&app::timing(start, n_threads)) {
        eprintln!("error: writing {}: {e}", cli.out.display());
        return ExitCode::from(1);
    }
    if let Some(r) = out.get("report.json") {
        if let Ok(v) = serde_json::from_slice::<serde_json::Value>(r) {
            println!("{}", serde_json::to_string(&v["result"]).unwrap_or_default());
        }
    }
    match outcome {
        Outcome::Success => eprintln!("ok: outputs in {}", cli.out.display()),
        Outcome::Inconclusive => eprintln!("inconclusive: outputs in {}", cli.out.display()),
    }
    ExitCode::from(outcome.exit_code() as u8)
}
