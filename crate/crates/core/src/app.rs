//! Subcommands behind the `solenoid` binary: configuration, orchestration and
//! report assembly. Each command fills an [`OutputSet`] and returns whether
//! its success criterion was met.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::certify::{self, Budget, CertStatus, CertTask, Origin};
use crate::dimension::{self, GraphSample};
use crate::error::{Error, Result};
use crate::measure::{self, SampleMode, SrbConfig};
use crate::report::{exact, OutputSet, Report, Table};
use crate::series::{PeriodicFn, SystemParams, Word};
use crate::sigma::{self, MainConfig, Verdict};

/// Whether a command met its success criterion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Inconclusive,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::Inconclusive => 2,
        }
    }
}

/// Search controls shared by `certify` and `sweep`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSettings {
    pub q_max: usize,
    pub p_min: Option<u32>,
    pub p_max: Option<u32>,
    pub ladder: Vec<f64>,
    pub d_max: usize,
    pub x_depth: u32,
    pub max_nodes: usize,
    pub polish: u32,
}

impl Default for SearchSettings {
    fn default() -> Self {
        let m = MainConfig::default();
        SearchSettings {
            q_max: m.q_max,
            p_min: None,
            p_max: None,
            ladder: m.ladder,
            d_max: m.budget.d_max,
            x_depth: m.budget.x_depth,
            max_nodes: m.budget.max_nodes,
            polish: m.polish,
        }
    }
}

impl SearchSettings {
    pub fn main_config(&self, b: u32) -> Result<MainConfig> {
        let mut cfg = MainConfig {
            q_max: self.q_max,
            p_range: None,
            ladder: self.ladder.clone(),
            budget: Budget { d_max: self.d_max, x_depth: self.x_depth, max_nodes: self.max_nodes },
            polish: self.polish,
        };
        if self.p_min.is_some() || self.p_max.is_some() {
            let (lo, hi) = cfg.p_range_for(b, 1);
            let r = (self.p_min.unwrap_or(lo), self.p_max.unwrap_or(hi));
            if r.0 == 0 || r.0 > r.1 {
                return Err(Error::InvalidParams(format!("grid depth range {}..={} is empty", r.0, r.1)));
            }
            cfg.p_range = Some(r);
        }
        if cfg.q_max == 0 {
            return Err(Error::InvalidParams("q_max must be >= 1".into()));
        }
        if cfg.ladder.is_empty() || cfg.ladder.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::InvalidParams("eps ladder must be nonempty and positive".into()));
        }
        Ok(cfg)
    }
}

/// `γ` directly or through `λ = 1/(γb)`.
fn resolve_gamma(b: u32, gamma: Option<f64>, lambda: Option<f64>) -> Result<f64> {
    match (gamma, lambda) {
        (Some(g), None) => Ok(g),
        (None, Some(l)) => Ok(1.0 / (l * b as f64)),
        (Some(_), Some(_)) => Err(Error::InvalidParams("give gamma or lambda, not both".into())),
        (None, None) => Err(Error::InvalidParams("gamma (or lambda) is required".into())),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyConfig {
    pub b: u32,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub psi: PeriodicFn,
    pub search: SearchSettings,
    /// How many searched pairs get a full leaf-level certificate file entry.
    pub detail: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            b: 2,
            gamma: None,
            lambda: None,
            psi: PeriodicFn::Classical,
            search: SearchSettings::default(),
            detail: 8,
        }
    }
}

impl CertifyConfig {
    pub fn params(&self) -> Result<SystemParams> {
        SystemParams::new(self.b, resolve_gamma(self.b, self.gamma, self.lambda)?, self.psi.clone())
    }
}

fn verdict_summary(v: &Verdict) -> Result<Value> {
    let validated = match (&v.graph, &v.sigma) {
        (Some(g), Some(s)) => Some(sigma::validate_scheme(g, s)?),
        _ => None,
    };
    Ok(json!({
        "success": v.success,
        "b": v.b,
        "gamma": exact(v.gamma),
        "q": v.q,
        "p": v.p,
        "eps": v.eps.map(exact),
        "scheme": v.scheme.map(|s| s.name()),
        "sigma_bound": v.sigma_bound.map(exact),
        "sigma_validated": validated.map(exact),
        "e_bound": v.e_bound,
        "target": v.target.map(exact),
        "margin": v.margin.map(exact),
        "attempts": v.attempts.len(),
    }))
}

/// Full certificates for the first `limit` freshly searched transversal pairs.
fn detailed_certificates(params: &SystemParams, v: &Verdict, cfg: &MainConfig, limit: usize) -> Result<Vec<certify::Certificate>> {
    let Some(g) = &v.graph else { return Ok(Vec::new()) };
    g.records
        .iter()
        .filter(|r| r.origin == Origin::Searched && r.status == CertStatus::Transversal)
        .take(limit)
        .map(|r| {
            certify::certify_pair(&CertTask {
                params: params.clone(),
                q: g.q,
                cell: g.cell_interval(r.cell),
                k: Word::from_value(r.k as u64, g.q, g.b),
                l: Word::from_value(r.l as u64, g.q, g.b),
                eps: g.eps,
                delta: g.delta,
                budget: cfg.budget,
            })
        })
        .collect()
}

pub fn cmd_certify(cfg: &CertifyConfig, out: &mut OutputSet) -> Result<Outcome> {
    let params = cfg.params()?;
    let main = cfg.search.main_config(cfg.b)?;
    let verdict = sigma::certify_main(&params, &main)?;
    let summary = verdict_summary(&verdict)?;
    let certs = detailed_certificates(&params, &verdict, &main, cfg.detail)?;
    out.json("report.json", &Report::new("certify", cfg, summary)?)?;
    let mut bare = verdict.clone();
    bare.graph = None;
    out.json("verdict.json", &bare)?;
    if let Some(g) = &verdict.graph {
        out.json("tangency.json", g)?;
    }
    out.json("certificates.json", &certs)?;
    let mut t = Table::new(&["q", "p", "eps", "e_bound", "scheme", "bound", "target", "success", "searched", "nodes"]);
    for a in &verdict.attempts {
        t.push(vec![
            a.q.to_string(),
            a.p.to_string(),
            a.eps.to_string(),
            a.e_bound.to_string(),
            a.scheme.name().to_string(),
            a.sigma_bound.to_string(),
            a.target.to_string(),
            a.success.to_string(),
            a.searched_tasks.to_string(),
            a.nodes.to_string(),
        ]);
    }
    out.table("attempts.csv", &t)?;
    Ok(if verdict.success { Outcome::Success } else { Outcome::Inconclusive })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GammaGrid {
    /// `start, start + step, …` up to `stop` inclusive, rounded to 12 places.
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::InvalidParams("gamma grid needs a positive step".into()));
        }
        if self.stop < self.start {
            return Ok(Vec::new());
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| ((self.start + i as f64 * self.step) * 1e12).round() / 1e12).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub b: u32,
    pub gammas: Vec<f64>,
    pub grid: Option<GammaGrid>,
    pub psi: PeriodicFn,
    pub search: SearchSettings,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            b: 2,
            gammas: Vec::new(),
            grid: None,
            psi: PeriodicFn::Classical,
            search: SearchSettings::default(),
        }
    }
}

impl SweepConfig {
    /// Explicit values followed by the grid, in that order.
    pub fn gamma_values(&self) -> Result<Vec<f64>> {
        let mut v = self.gammas.clone();
        if let Some(g) = &self.grid {
            v.extend(g.values()?);
        }
        Ok(v)
    }
}

pub const SWEEP_HEADER: [&str; 6] = ["gamma", "q", "scheme", "bound", "target", "success"];

pub fn cmd_sweep(cfg: &SweepConfig, out: &mut OutputSet) -> Result<Outcome> {
    let gammas = cfg.gamma_values()?;
    let main = cfg.search.main_config(cfg.b)?;
    // validate everything before any search starts
    let params: Vec<SystemParams> = gammas
        .iter()
        .map(|&g| SystemParams::new(cfg.b, g, cfg.psi.clone()))
        .collect::<Result<_>>()?;
    let verdicts: Vec<Verdict> =
        params.par_iter().map(|p| sigma::certify_main(p, &main)).collect::<Result<_>>()?;
    let mut t = Table::new(&SWEEP_HEADER);
    let mut rows = Vec::with_capacity(verdicts.len());
    for v in &verdicts {
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
        t.push(vec![
            v.gamma.to_string(),
            v.q.map_or(String::new(), |q| q.to_string()),
            v.scheme.map_or("", |s| s.name()).to_string(),
            opt(v.sigma_bound),
            opt(v.target),
            v.success.to_string(),
        ]);
        rows.push(verdict_summary(v)?);
    }
    let all = verdicts.iter().all(|v| v.success);
    let result = json!({ "rows": rows, "all_success": all, "count": verdicts.len() });
    out.json("report.json", &Report::new("sweep", cfg, result)?)?;
    out.table("sweep.csv", &t)?;
    Ok(if all { Outcome::Success } else { Outcome::Inconclusive })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureConfig {
    pub b: u32,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub psi: PeriodicFn,
    /// Fibers examined for atoms and local dimension.
    pub xs: Vec<f64>,
    /// Truncation depth; by default the smallest with blur below a tenth of
    /// the smallest radius, capped by the atom budget.
    pub depth: Option<usize>,
    pub atom_budget: u64,
    /// Local-dimension radii `2^{-k}`, `k` in this inclusive range.
    pub radii_k: (i32, i32),
    pub centers: usize,
    /// `I_r` radii `2^{-k}`.
    pub ir_radii_k: (i32, i32),
    pub ir_grid: usize,
    /// Monte Carlo sample size for the `I_r` cross-check; 0 disables it.
    pub mc_samples: usize,
    pub seed: u64,
    pub srb: Option<SrbSettings>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SrbSettings {
    pub n_points: usize,
    pub n_iter: usize,
    pub burn_in: usize,
    pub x_bins: usize,
    pub y_bins: usize,
}

impl Default for SrbSettings {
    fn default() -> Self {
        SrbSettings { n_points: 256, n_iter: 4000, burn_in: 100, x_bins: 32, y_bins: 64 }
    }
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig {
            b: 2,
            gamma: None,
            lambda: None,
            psi: PeriodicFn::Classical,
            xs: vec![0.3],
            depth: None,
            atom_budget: 1 << 20,
            radii_k: (4, 12),
            centers: 2000,
            ir_radii_k: (4, 8),
            ir_grid: 64,
            mc_samples: 0,
            seed: 0,
            srb: Some(SrbSettings::default()),
        }
    }
}

fn ladder(k: (i32, i32)) -> Result<Vec<f64>> {
    if k.0 > k.1 {
        return Err(Error::InvalidParams(format!("radius exponents {}..={} are empty", k.0, k.1)));
    }
    Ok((k.0..=k.1).map(|i| 2f64.powi(-i)).collect())
}

/// Smallest depth with blur below `r_min / 10`, capped so `b^N` fits the
/// budget. The flag reports whether the cap was hit.
pub fn default_depth(params: &SystemParams, r_min: f64, budget: u64) -> (usize, bool) {
    let mut cap = 0usize;
    while (params.b as u64).checked_pow(cap as u32 + 1).is_some_and(|v| v <= budget) {
        cap += 1;
    }
    match (0..=cap).find(|&n| params.tail_radius_val(n) < r_min / 10.0) {
        Some(n) => (n, false),
        None => (cap, true),
    }
}

pub fn cmd_measure(cfg: &MeasureConfig, out: &mut OutputSet) -> Result<Outcome> {
    let params = SystemParams::new(cfg.b, resolve_gamma(cfg.b, cfg.gamma, cfg.lambda)?, cfg.psi.clone())?;
    let radii = ladder(cfg.radii_k)?;
    let ir_radii = ladder(cfg.ir_radii_k)?;
    if cfg.xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let r_min = radii.iter().chain(&ir_radii).copied().fold(f64::INFINITY, f64::min);
    let (depth, capped) = match cfg.depth {
        Some(n) => (n, false),
        None => default_depth(&params, r_min, cfg.atom_budget),
    };
    let blur = params.tail_radius_val(depth);

    let mut fibers = Vec::with_capacity(cfg.xs.len());
    let mut ld_table = Table::new(&["x", "r", "mean_log_mass"]);
    for (i, &x) in cfg.xs.iter().enumerate() {
        let mu = measure::sample_mx_with_budget(&params, x, depth, SampleMode::Exact, cfg.atom_budget)?;
        let ld = match measure::local_dim_regress(&mu, &radii, cfg.centers, cfg.seed.wrapping_add(i as u64)) {
            Ok(ld) => {
                for (r, m) in &ld.points {
                    ld_table.push(vec![x.to_string(), r.to_string(), m.to_string()]);
                }
                json!({
                    "slope": exact(ld.slope),
                    "stderr": ld.stderr,
                    "ci": [ld.ci_low, ld.ci_high],
                    "blur_warning": ld.blur_warning,
                })
            }
            Err(Error::DegenerateMeasure) => json!({ "error": Error::DegenerateMeasure.to_string() }),
            Err(e) => return Err(e),
        };
        let lo = mu.locs.first().copied().unwrap_or(0.0);
        let hi = mu.locs.last().copied().unwrap_or(0.0);
        fibers.push(json!({
            "x": exact(x),
            "atoms": mu.len(),
            "support": [lo, hi],
            "norm_sq_at_min_radius": exact(measure::corr_sq_norm_fast(&mu, radii[radii.len() - 1])?),
            "local_dim": ld,
        }));
    }

    let curve = measure::i_r_curve(&params, &ir_radii, cfg.ir_grid, depth, SampleMode::Exact, None)?;
    let mut ir_table = Table::new(&["r", "i_r", "i_r_hex", "blur_warning"]);
    for e in &curve {
        ir_table.push(vec![
            e.r.to_string(),
            e.value.to_string(),
            crate::hexfloat::to_hex(e.value),
            e.blur_warning.to_string(),
        ]);
    }
    let lx: Vec<f64> = curve.iter().map(|e| (1.0 / e.r).ln()).collect();
    let ly: Vec<f64> = curve.iter().map(|e| e.value.ln()).collect();
    let growth = if curve.len() >= 2 { measure::ols(&lx, &ly).0 } else { f64::NAN };
    let mc = if cfg.mc_samples > 0 {
        let mode = SampleMode::MonteCarlo { m: cfg.mc_samples, seed: cfg.seed, stream: 0 };
        let mc = measure::i_r_curve(&params, &ir_radii, cfg.ir_grid, depth, mode, None)?;
        Some(mc.iter().map(|e| json!({ "r": e.r, "i_r": e.value })).collect::<Vec<_>>())
    } else {
        None
    };

    let srb = match &cfg.srb {
        Some(s) => {
            let h = measure::srb_sample(
                &params,
                &SrbConfig {
                    n_points: s.n_points,
                    n_iter: s.n_iter,
                    burn_in: s.burn_in,
                    seed: cfg.seed,
                    x_bins: s.x_bins,
                    y_bins: s.y_bins,
                },
            )?;
            let mut header = vec!["ix".to_string(), "x_center".to_string()];
            header.extend((0..h.y_bins).map(|j| format!("y{j}")));
            let mut t = Table {
                header,
                ..Table::new(&[])
            }
            .meta("y_max", h.y_max)
            .meta("y_bins", h.y_bins)
            .meta("x_bins", h.x_bins)
            .meta("seed", h.seed)
            .meta("rng", &h.rng);
            for ix in 0..h.x_bins {
                let mut row = vec![ix.to_string(), ((ix as f64 + 0.5) / h.x_bins as f64).to_string()];
                row.extend(h.column(ix).iter().map(|c| c.to_string()));
                t.push(row);
            }
            out.table("histogram.csv", &t)?;
            let slice_depth = depth.min(16);
            let tv: Vec<Value> = [h.x_bins / 4, h.x_bins / 2]
                .iter()
                .map(|&ix| {
                    measure::column_tv_distance(&h, &params, ix, slice_depth)
                        .map(|d| json!({ "ix": ix, "tv": d }))
                })
                .collect::<Result<_>>()?;
            Some(json!({ "total": h.total(), "y_max": h.y_max, "slice_tv": tv, "tv_threshold": SLICE_TV_THRESHOLD }))
        }
        None => None,
    };

    let result = json!({
        "depth": depth,
        "depth_capped_by_budget": capped,
        "blur": exact(blur),
        "fibers": fibers,
        "i_r": curve.iter().map(|e| json!({"r": e.r, "value": exact(e.value), "blur_warning": e.blur_warning})).collect::<Vec<_>>(),
        "i_r_growth_exponent": growth,
        // heuristic only: a flat I_r curve is consistent with an L² density
        "i_r_bounded_heuristic": growth < BOUNDED_GROWTH,
        "i_r_monte_carlo": mc,
        "srb": srb,
    });
    out.json("report.json", &Report::new("measure", cfg, result)?.with_seed(cfg.seed, measure::RNG_NAME))?;
    out.table("ir.csv", &ir_table)?;
    out.table("localdim.csv", &ld_table)?;
    Ok(Outcome::Success)
}

/// Largest `d log I_r / d log(1/r)` still called bounded.
pub const BOUNDED_GROWTH: f64 = 0.25;

/// Histogram-column vs fiber-measure total variation reported as consistent.
pub const SLICE_TV_THRESHOLD: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoxdimConfig {
    pub b: u32,
    pub lambda: f64,
    pub phi: PeriodicFn,
    /// The graph is sampled at `2^m + 1` points.
    pub m: u32,
    pub depth: Option<usize>,
    pub k_min: u32,
    pub k_max: u32,
    pub trim: usize,
    pub local_radii_k: (i32, i32),
    pub centers: usize,
    pub seed: u64,
}

impl Default for BoxdimConfig {
    fn default() -> Self {
        BoxdimConfig {
            b: 2,
            lambda: 0.7,
            phi: PeriodicFn::cosine(),
            m: 20,
            depth: None,
            k_min: 4,
            k_max: 14,
            trim: 2,
            local_radii_k: (3, 9),
            centers: 500,
            seed: 0,
        }
    }
}

impl BoxdimConfig {
    /// Smallest depth whose tail is below a quarter of the finest scale.
    pub fn resolved_depth(&self) -> usize {
        self.depth.unwrap_or_else(|| {
            let target = 2f64.powi(-(self.k_max as i32)) / 4.0;
            (1..=400)
                .find(|&n| crate::series::weierstrass_tail(self.lambda, &self.phi, n) < target)
                .unwrap_or(400)
        })
    }
}

pub fn cmd_boxdim(cfg: &BoxdimConfig, out: &mut OutputSet) -> Result<Outcome> {
    let d_theory = dimension::theoretical_d(cfg.lambda, cfg.b)?;
    if cfg.k_min > cfg.k_max {
        return Err(Error::InvalidParams("k_min exceeds k_max".into()));
    }
    let depth = cfg.resolved_depth();
    let g = GraphSample::weierstrass(cfg.lambda, cfg.b, &cfg.phi, cfg.m, depth)?;
    let ks: Vec<u32> = (cfg.k_min..=cfg.k_max).collect();
    let bd = dimension::box_count_dim(&g, &ks, cfg.trim)?;
    let radii = ladder(cfg.local_radii_k)?;
    let local = match dimension::graph_mu_local_dim(&g, &radii, cfg.centers, cfg.seed) {
        Ok(p) => json!({ "slope": p.estimate.slope, "ci": [p.estimate.ci_low, p.estimate.ci_high] }),
        Err(e @ (Error::InsufficientDensity(_) | Error::ScalePrecondition(_))) => json!({ "error": e.to_string() }),
        Err(e) => return Err(e),
    };
    let mut t = Table::new(&["k", "scale", "count", "used"]);
    for c in &bd.counts {
        t.push(vec![c.k.to_string(), c.scale.to_string(), c.count.to_string(), c.used.to_string()]);
    }
    let result = json!({
        "lambda": exact(cfg.lambda),
        "b": cfg.b,
        "depth": depth,
        "tail": exact(g.tail),
        "D_theory": exact(d_theory),
        "D_hat": exact(bd.estimate.slope),
        "CI": [bd.estimate.ci_low, bd.estimate.ci_high],
        "stderr": bd.estimate.stderr,
        "sensitivity": bd.sensitivity.iter().map(|(t, s)| json!({"trim": t, "slope": s})).collect::<Vec<_>>(),
        "graph_measure_local_dim": local,
    });
    out.json("report.json", &Report::new("boxdim", cfg, result)?.with_seed(cfg.seed, measure::RNG_NAME))?;
    out.table("boxdim.csv", &t)?;
    Ok(Outcome::Success)
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Fast end-to-end checks of the closed forms and of one run per module.
pub fn cmd_selftest(out: &mut OutputSet) -> Result<Outcome> {
    let mut checks = Vec::new();
    let mut add = |name: &'static str, pass: bool, detail: String| checks.push(Check { name, pass, detail });

    let t1 = certify::theta_bound(1, 6, 1.0)?;
    let t2 = certify::theta_bound(2, 6, 1.0)?;
    add("theta", (t1 - 1.8).abs() < 1e-12 && (t2 - 21.24f64.sqrt()).abs() < 1e-12, format!("{t1} {t2}"));
    let t = sigma::solve_t();
    add("solve_t", sigma::three_tier_residual(t).abs() < 1e-12 && t > 1.6 && t < 1.61, format!("{t}"));
    let a = sigma::solve_alpha(2, 3)?;
    let n = 6.0;
    add("solve_alpha", (n + 2.0 / a - (1.0 + n * a)).abs() < 1e-12, format!("{a}"));

    let p6 = SystemParams::classical(6, 0.5)?;
    let v = sigma::certify_main(&p6, &MainConfig { q_max: 1, ..Default::default() })?;
    add("certify b=6", v.success && v.q == Some(1), format!("{:?} {:?}", v.scheme, v.sigma_bound));

    let p2 = SystemParams::classical(2, 0.7)?;
    let a = measure::sample_mx(&p2, 0.3, 10, SampleMode::Exact)?;
    let b = measure::sample_mx(&p2, 1.3, 10, SampleMode::Exact)?;
    let same = a.locs.iter().zip(&b.locs).all(|(u, v)| (u - v).abs() < 1e-12);
    add("adding machine", same && a.len() == b.len(), format!("{} atoms", a.len()));
    let (l, r) = measure::tsujii_scaling_check(&a, &p2, 3, 0.01)?;
    add("scaling", (l - r).abs() <= 1e-12 * l, format!("{l} {r}"));

    let g = GraphSample::weierstrass(0.7, 2, &PeriodicFn::cosine(), 16, 30)?;
    let bd = dimension::box_count_dim(&g, &(4..=12).collect::<Vec<_>>(), 2)?;
    let d = dimension::theoretical_d(0.7, 2)?;
    add("box dimension", (bd.estimate.slope - d).abs() < 0.08, format!("{} vs {d}", bd.estimate.slope));

    let all = checks.iter().all(|c| c.pass);
    out.json("report.json", &Report::new("selftest", &json!({}), json!({ "checks": checks, "all_pass": all }))?)?;
    Ok(if all { Outcome::Success } else { Outcome::Inconclusive })
}

/// Runs `f` on a pool of `threads` workers (all cores when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    let pool = b.build().map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Wall-clock record written next to the report.
pub fn timing(start: Instant, threads: usize) -> Value {
    json!({ "seconds": start.elapsed().as_secs_f64(), "threads": threads })
}
