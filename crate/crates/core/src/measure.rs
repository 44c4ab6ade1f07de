//! Finite-atom approximations of the fiber measures `m_x`, correlation norms,
//! the aggregate `I_r`, fiber dynamics of `T^q`, SRB sampling and local
//! dimension regression.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::series::{SystemParams, Word};

/// Name of the generator used for every Monte Carlo stream.
pub const RNG_NAME: &str = "ChaCha8Rng/rand_chacha-0.3, seed_from_u64 + set_stream";

/// Default cap on `b^N` for exact enumeration.
pub const ATOM_BUDGET: u64 = 1 << 22;

/// Sorted atoms with positive masses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    pub locs: Vec<f64>,
    pub masses: Vec<f64>,
    /// Truncation depth `N` of the underlying series.
    pub depth: usize,
    /// `‖ψ‖∞ γ^N / (1 − γ)`: every atom is within this of the exact law.
    pub blur: f64,
}

impl AtomicMeasure {
    /// Sorts by location and merges atoms at identical locations.
    pub fn new(mut atoms: Vec<(f64, f64)>, depth: usize, blur: f64) -> Result<Self> {
        if atoms.iter().any(|&(l, m)| !l.is_finite() || !(m > 0.0) || !m.is_finite()) {
            return Err(Error::NonFinite);
        }
        atoms.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let mut locs: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut masses: Vec<f64> = Vec::with_capacity(atoms.len());
        for (l, m) in atoms {
            if locs.last() == Some(&l) {
                *masses.last_mut().unwrap() += m;
            } else {
                locs.push(l);
                masses.push(m);
            }
        }
        Ok(AtomicMeasure { locs, masses, depth, blur })
    }

    pub fn len(&self) -> usize {
        self.locs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locs.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Image under `y ↦ scale·y + offset` (`scale > 0`).
    pub fn push_affine(&self, scale: f64, offset: f64) -> AtomicMeasure {
        AtomicMeasure {
            locs: self.locs.iter().map(|&y| scale * y + offset).collect(),
            masses: self.masses.clone(),
            depth: self.depth,
            blur: self.blur * scale,
        }
    }

    /// `μ([y − r, y + r])`.
    pub fn ball_mass(&self, prefix: &[f64], y: f64, r: f64) -> f64 {
        let lo = self.locs.partition_point(|&l| l < y - r);
        let hi = self.locs.partition_point(|&l| l <= y + r);
        prefix[hi] - prefix[lo]
    }

    /// Prefix sums of the masses, length `len + 1`.
    pub fn mass_prefix(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len() + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for &m in &self.masses {
            acc += m;
            out.push(acc);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum SampleMode {
    /// All `b^N` depth-`N` partial sums, mass `b^{−N}` each.
    Exact,
    /// `m` uniform digit strings of length `N`, mass `1/m` each.
    MonteCarlo { m: usize, seed: u64, stream: u64 },
}

/// Atoms of `m_x` at truncation depth `N`.
pub fn sample_mx(params: &SystemParams, x: f64, depth: usize, mode: SampleMode) -> Result<AtomicMeasure> {
    sample_mx_with_budget(params, x, depth, mode, ATOM_BUDGET)
}

pub fn sample_mx_with_budget(
    params: &SystemParams,
    x: f64,
    depth: usize,
    mode: SampleMode,
    budget: u64,
) -> Result<AtomicMeasure> {
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    let blur = params.tail_radius_val(depth);
    let b = params.b;
    let bf = b as f64;
    let f = params.psi_fn();
    let g = params.gamma;
    match mode {
        SampleMode::Exact => {
            let needed = (b as u64).checked_pow(depth as u32).unwrap_or(u64::MAX);
            if needed > budget {
                return Err(Error::AtomBudget { needed, budget });
            }
            let mass = 1.0 / needed as f64;
            let mut locs = Vec::with_capacity(needed as usize);
            // iterative DFS over digit strings, partial sums reused along the path
            let mut xs = vec![x; depth + 1];
            let mut sums = vec![0.0; depth + 1];
            let mut coef = vec![1.0; depth + 1];
            for n in 1..=depth {
                coef[n] = coef[n - 1] * g;
            }
            let mut digits = vec![0u8; depth];
            let mut level = 0usize;
            if depth == 0 {
                locs.push(0.0);
            } else {
                loop {
                    // descend from `level` with the current digits
                    while level < depth {
                        let xn = (xs[level] + digits[level] as f64) / bf;
                        xs[level + 1] = xn;
                        sums[level + 1] = sums[level] + coef[level] * f.value_f64(xn);
                        level += 1;
                    }
                    locs.push(sums[depth]);
                    // odometer on the deepest digits
                    let mut l = depth;
                    loop {
                        if l == 0 {
                            break;
                        }
                        l -= 1;
                        if (digits[l] as u32) + 1 < b {
                            digits[l] += 1;
                            break;
                        }
                        digits[l] = 0;
                        if l == 0 {
                            l = usize::MAX;
                            break;
                        }
                    }
                    if l == usize::MAX {
                        break;
                    }
                    level = l;
                }
            }
            AtomicMeasure::new(locs.into_iter().map(|l| (l, mass)).collect(), depth, blur)
        }
        SampleMode::MonteCarlo { m, seed, stream } => {
            if m == 0 {
                return Err(Error::InvalidParams("Monte Carlo sample size must be >= 1".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            let mass = 1.0 / m as f64;
            let mut atoms = Vec::with_capacity(m);
            for _ in 0..m {
                let mut xn = x;
                let mut s = 0.0;
                let mut c = 1.0;
                for _ in 0..depth {
                    xn = (xn + rng.gen_range(0..b) as f64) / bf;
                    s += c * f.value_f64(xn);
                    c *= g;
                }
                atoms.push((s, mass));
            }
            AtomicMeasure::new(atoms, depth, blur)
        }
    }
}

/// `Σ_{a,b} p_a p_b max(0, 2r − |y_a − y_b|)`, the squared correlation norm
/// `∫ μ(B(y,r))² dy`, by a windowed pairwise sweep.
pub fn corr_sq_norm(mu: &AtomicMeasure, r: f64) -> Result<f64> {
    check_radius(r)?;
    let two_r = 2.0 * r;
    let n = mu.len();
    let mut diag = 0.0;
    let mut cross = 0.0;
    for i in 0..n {
        let (yi, pi) = (mu.locs[i], mu.masses[i]);
        diag += pi * pi;
        let mut s = 0.0;
        for j in (i + 1)..n {
            let d = mu.locs[j] - yi;
            if d >= two_r {
                break;
            }
            s += mu.masses[j] * (two_r - d);
        }
        cross += pi * s;
    }
    Ok(two_r * diag + 2.0 * cross)
}

/// Same value as [`corr_sq_norm`] in linear time via prefix sums; for large
/// measures where the pairwise window is wide.
pub fn corr_sq_norm_fast(mu: &AtomicMeasure, r: f64) -> Result<f64> {
    check_radius(r)?;
    let two_r = 2.0 * r;
    let n = mu.len();
    let shift = mu.locs.first().copied().unwrap_or(0.0);
    let mut pm = Vec::with_capacity(n + 1);
    let mut py = Vec::with_capacity(n + 1);
    let (mut a, mut c) = (0.0, 0.0);
    pm.push(0.0);
    py.push(0.0);
    for i in 0..n {
        a += mu.masses[i];
        c += mu.masses[i] * (mu.locs[i] - shift);
        pm.push(a);
        py.push(c);
    }
    let mut lo = 0usize;
    let mut total = 0.0;
    for i in 0..n {
        let yi = mu.locs[i];
        while mu.locs[lo] <= yi - two_r {
            lo += 1;
        }
        let yi_s = yi - shift;
        let left = (two_r - yi_s) * (pm[i] - pm[lo]) + (py[i] - py[lo]);
        total += mu.masses[i] * (2.0 * left + mu.masses[i] * two_r);
    }
    Ok(total)
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidRadius(r))
    }
}

/// The fiber part `y ↦ γ^q y + c` of `T^q` from the fiber over `x(w)` to
/// the fiber over `x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberAffine {
    pub scale: f64,
    pub offset: f64,
    pub q: usize,
}

impl FiberAffine {
    pub fn apply(&self, y: f64) -> f64 {
        self.scale * y + self.offset
    }
}

/// `c = Σ_{j<q} γ^{q−1−j} ψ(b^j x(w) mod 1)`, evaluated along the digits of
/// `w` (the point `b^j x(w) mod 1` is the partial image after `q − j` digits).
pub fn fiber_affine(params: &SystemParams, x: f64, w: &Word) -> Result<FiberAffine> {
    params.check_word(w)?;
    let f = params.psi_fn();
    let bf = params.bf();
    let mut xn = x;
    let mut c = 0.0;
    let mut coef = 1.0;
    for &d in w.digits() {
        xn = (xn + d as f64) / bf;
        c += coef * f.value_f64(xn);
        coef *= params.gamma;
    }
    Ok(FiberAffine { scale: params.gamma.powi(w.len() as i32), offset: c, q: w.len() })
}

/// `(‖T^q μ‖²_r, γ^q ‖μ‖²_{γ^{−q} r})`; equal for every atomic `μ`.
pub fn tsujii_scaling_check(mu: &AtomicMeasure, params: &SystemParams, q: usize, r: f64) -> Result<(f64, f64)> {
    let scale = params.gamma.powi(q as i32);
    let pushed = mu.push_affine(scale, 0.0);
    let lhs = corr_sq_norm(&pushed, r)?;
    let rhs = scale * corr_sq_norm(mu, r / scale)?;
    Ok((lhs, rhs))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrEstimate {
    pub r: f64,
    pub value: f64,
    /// `ω(x)‖m_x‖²_r / r²` at each midpoint.
    pub per_x: Vec<f64>,
    pub blur: f64,
    /// Set when `r ≤ blur`, so truncation dominates the estimate.
    pub blur_warning: bool,
}

/// Midpoint rule for `I_r = r^{−2} ∫ ω(x) ‖m_x‖²_r dx` over `[0,1)`.
pub fn i_r_estimate(
    params: &SystemParams,
    r: f64,
    grid: usize,
    depth: usize,
    mode: SampleMode,
    omega: Option<&(dyn Fn(f64) -> f64 + Sync)>,
) -> Result<IrEstimate> {
    Ok(i_r_curve(params, &[r], grid, depth, mode, omega)?.remove(0))
}

/// [`i_r_estimate`] for several radii, building each `m_x` once.
pub fn i_r_curve(
    params: &SystemParams,
    radii: &[f64],
    grid: usize,
    depth: usize,
    mode: SampleMode,
    omega: Option<&(dyn Fn(f64) -> f64 + Sync)>,
) -> Result<Vec<IrEstimate>> {
    for &r in radii {
        check_radius(r)?;
    }
    if grid == 0 || radii.is_empty() {
        return Err(Error::InvalidParams("x grid and radius list must be nonempty".into()));
    }
    // per_x[i][j]: grid point i, radius j
    let per_x: Vec<Vec<f64>> = (0..grid)
        .into_par_iter()
        .map(|i| {
            let x = (i as f64 + 0.5) / grid as f64;
            let mode_i = match mode {
                SampleMode::MonteCarlo { m, seed, stream } => SampleMode::MonteCarlo {
                    m,
                    seed,
                    stream: stream.wrapping_mul(1 << 32).wrapping_add(i as u64),
                },
                e => e,
            };
            let mu = sample_mx(params, x, depth, mode_i)?;
            let w = omega.map_or(1.0, |f| f(x));
            radii
                .iter()
                .map(|&r| {
                    let norm = match mode {
                        SampleMode::Exact => corr_sq_norm_fast(&mu, r)?,
                        SampleMode::MonteCarlo { .. } => u_statistic_norm(&mu, r)?,
                    };
                    Ok(w * norm / (r * r))
                })
                .collect()
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let blur = params.tail_radius_val(depth);
    Ok(radii
        .iter()
        .enumerate()
        .map(|(j, &r)| {
            let col: Vec<f64> = per_x.iter().map(|v| v[j]).collect();
            IrEstimate {
                r,
                value: col.iter().sum::<f64>() / grid as f64,
                per_x: col,
                blur,
                blur_warning: r <= blur,
            }
        })
        .collect())
}

/// Unbiased estimate of `E[max(0, 2r − |Y − Y′|)]` from equal-mass samples,
/// excluding self-pairs.
fn u_statistic_norm(mu: &AtomicMeasure, r: f64) -> Result<f64> {
    // merged duplicates carry multiplicities in their masses
    let m_total: f64 = mu.total_mass();
    let min_mass = mu.masses.iter().copied().fold(f64::INFINITY, f64::min);
    let n = (m_total / min_mass).round();
    if n < 2.0 {
        return Err(Error::DegenerateMeasure);
    }
    let full = corr_sq_norm_fast(mu, r)?;
    // full = (1/n²) Σ_{i,j} k(y_i,y_j); self-pairs contribute n · 2r / n²
    let off = full * n * n - n * 2.0 * r;
    Ok(off / (n * (n - 1.0)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalDim {
    pub slope: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `(r, mean log μ(B(y, r)))` per radius.
    pub points: Vec<(f64, f64)>,
    pub blur_warning: bool,
}

/// Ordinary least squares `y ≈ a + s x`; returns `(s, a, stderr(s))`.
pub fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let s = sxy / sxx;
    let a = my - s * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a - s * x).powi(2)).sum();
    let se = if xs.len() > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    (s, a, se)
}

/// 95% two-sided Student-t interval half-width multiplier for `df` degrees.
pub fn t95(df: usize) -> f64 {
    if df == 0 {
        return f64::INFINITY;
    }
    StudentsT::new(0.0, 1.0, df as f64).map(|t| t.inverse_cdf(0.975)).unwrap_or(f64::INFINITY)
}

/// Slope of the mean of `log μ(B(y,r))` against `log r`, centres `y` drawn
/// by mass.
pub fn local_dim_regress(mu: &AtomicMeasure, radii: &[f64], centers: usize, seed: u64) -> Result<LocalDim> {
    if mu.len() < 2 {
        return Err(Error::DegenerateMeasure);
    }
    if radii.len() < 2 {
        return Err(Error::InvalidParams("need at least two radii".into()));
    }
    for &r in radii {
        check_radius(r)?;
    }
    let prefix = mu.mass_prefix();
    let total = *prefix.last().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ys: Vec<f64> = (0..centers.max(1))
        .map(|_| {
            let u: f64 = rng.gen::<f64>() * total;
            let idx = prefix.partition_point(|&c| c <= u).saturating_sub(1).min(mu.len() - 1);
            mu.locs[idx]
        })
        .collect();
    let mut points = Vec::with_capacity(radii.len());
    for &r in radii {
        let mean = ys.iter().map(|&y| mu.ball_mass(&prefix, y, r).ln()).sum::<f64>() / ys.len() as f64;
        points.push((r, mean));
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1).collect();
    let (slope, _, se) = ols(&lx, &ly);
    let h = t95(radii.len().saturating_sub(2)) * se;
    Ok(LocalDim {
        slope,
        stderr: se,
        ci_low: slope - h,
        ci_high: slope + h,
        points,
        blur_warning: radii.iter().any(|&r| r <= mu.blur),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SrbConfig {
    pub n_points: usize,
    pub n_iter: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub x_bins: usize,
    pub y_bins: usize,
}

/// Post-burn-in orbit counts on `[0,1) × [−Y, Y]`, row-major in `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub x_bins: usize,
    pub y_bins: usize,
    pub y_max: f64,
    pub counts: Vec<u64>,
    pub seed: u64,
    pub rng: String,
}

impl Histogram {
    pub fn count(&self, ix: usize, iy: usize) -> u64 {
        self.counts[ix * self.y_bins + iy]
    }

    pub fn column(&self, ix: usize) -> &[u64] {
        &self.counts[ix * self.y_bins..(ix + 1) * self.y_bins]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn y_bin(&self, y: f64) -> usize {
        let t = (y + self.y_max) / (2.0 * self.y_max);
        ((t * self.y_bins as f64).floor().max(0.0) as usize).min(self.y_bins - 1)
    }
}

/// Iterates `T(x, y) = (bx mod 1, γy + ψ(x))` from Lebesgue-random starts.
///
/// `x` is held as its leading base-`b` digits; each step shifts them out and
/// draws a fresh digit at the far end, which is the exact orbit of a point
/// whose expansion was drawn uniformly at the outset.
pub fn srb_sample(params: &SystemParams, cfg: &SrbConfig) -> Result<Histogram> {
    if cfg.n_iter <= cfg.burn_in {
        return Err(Error::InvalidParams("n_iter must exceed burn_in".into()));
    }
    if cfg.x_bins == 0 || cfg.y_bins == 0 {
        return Err(Error::InvalidParams("histogram needs bins".into()));
    }
    let b = params.b;
    let bf = b as f64;
    let width = (53.0 / bf.log2()).ceil() as usize + 1;
    let y_max = params.s_bound().max(f64::MIN_POSITIVE);
    let f = params.psi_fn();
    let columns: Vec<Vec<u64>> = (0..cfg.n_points)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            let mut digits: std::collections::VecDeque<u8> =
                (0..width).map(|_| rng.gen_range(0..b) as u8).collect();
            let mut y = 0.0;
            let mut local = vec![0u64; cfg.x_bins * cfg.y_bins];
            let xval = |d: &std::collections::VecDeque<u8>| {
                d.iter().rev().fold(0.0, |acc, &k| (acc + k as f64) / bf)
            };
            for it in 0..cfg.n_iter {
                let x = xval(&digits);
                y = params.gamma * y + f.value_f64(x);
                digits.pop_front();
                digits.push_back(rng.gen_range(0..b) as u8);
                if it >= cfg.burn_in {
                    let nx = xval(&digits);
                    let ix = ((nx * cfg.x_bins as f64) as usize).min(cfg.x_bins - 1);
                    let t = (y + y_max) / (2.0 * y_max);
                    let iy = ((t * cfg.y_bins as f64).floor().max(0.0) as usize).min(cfg.y_bins - 1);
                    local[ix * cfg.y_bins + iy] += 1;
                }
            }
            local
        })
        .collect();
    let mut counts = vec![0u64; cfg.x_bins * cfg.y_bins];
    for col in columns {
        for (c, v) in counts.iter_mut().zip(col) {
            *c += v;
        }
    }
    Ok(Histogram {
        x_bins: cfg.x_bins,
        y_bins: cfg.y_bins,
        y_max,
        counts,
        seed: cfg.seed,
        rng: RNG_NAME.to_string(),
    })
}

/// Total-variation distance between the normalized histogram column `ix` and
/// `m_x` at the bin centre, binned on the same `y` grid.
pub fn column_tv_distance(hist: &Histogram, params: &SystemParams, ix: usize, depth: usize) -> Result<f64> {
    let x = (ix as f64 + 0.5) / hist.x_bins as f64;
    let mu = sample_mx(params, x, depth, SampleMode::Exact)?;
    let mut binned = vec![0.0; hist.y_bins];
    for (&l, &m) in mu.locs.iter().zip(&mu.masses) {
        binned[hist.y_bin(l)] += m;
    }
    let col = hist.column(ix);
    let tot: u64 = col.iter().sum();
    if tot == 0 {
        return Err(Error::InsufficientDensity(format!("column {ix} is empty")));
    }
    Ok(0.5
        * col
            .iter()
            .zip(&binned)
            .map(|(&c, &p)| (c as f64 / tot as f64 - p).abs())
            .sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::PeriodicFn;

    fn cl(b: u32, g: f64) -> SystemParams {
        SystemParams::classical(b, g).unwrap()
    }

    fn single(loc: f64) -> AtomicMeasure {
        AtomicMeasure::new(vec![(loc, 1.0)], 0, 0.0).unwrap()
    }

    #[test]
    fn zero_psi_collapses_to_one_atom() {
        let p = SystemParams::new(2, 0.7, PeriodicFn::zero()).unwrap();
        let mu = sample_mx(&p, 0.3, 10, SampleMode::Exact).unwrap();
        assert_eq!(mu.locs, vec![0.0]);
        assert!((mu.masses[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn depth_two_enumeration() {
        // independent enumeration of the four partial sums at x = 0
        let p = cl(2, 0.6);
        let mu = sample_mx(&p, 0.0, 2, SampleMode::Exact).unwrap();
        let psi = |t: f64| -std::f64::consts::TAU * (std::f64::consts::TAU * t).sin();
        let mut want: Vec<f64> = Vec::new();
        for i1 in 0..2 {
            for i2 in 0..2 {
                let x1 = i1 as f64 / 2.0;
                let x2 = (x1 + i2 as f64) / 2.0;
                want.push(psi(x1) + 0.6 * psi(x2));
            }
        }
        want.sort_by(f64::total_cmp);
        let mut got = Vec::new();
        for (l, m) in mu.locs.iter().zip(&mu.masses) {
            let k = (m * 4.0).round() as usize;
            got.extend(std::iter::repeat_n(*l, k));
        }
        assert_eq!(got.len(), 4);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12, "{got:?} {want:?}");
        }
    }

    #[test]
    fn exact_budget_enforced() {
        let p = cl(2, 0.7);
        let r = sample_mx_with_budget(&p, 0.1, 12, SampleMode::Exact, 1000);
        assert!(matches!(r, Err(Error::AtomBudget { needed: 4096, budget: 1000 })));
    }

    #[test]
    fn mass_sums_to_one() {
        let p = cl(3, 0.6);
        let mu = sample_mx(&p, 0.27, 8, SampleMode::Exact).unwrap();
        assert!((mu.total_mass() - 1.0).abs() < 1e-12);
        assert!(mu.locs.windows(2).all(|w| w[0] < w[1]));
        let mc = sample_mx(&p, 0.27, 8, SampleMode::MonteCarlo { m: 500, seed: 3, stream: 0 }).unwrap();
        assert!((mc.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn corr_norm_examples() {
        assert!((corr_sq_norm(&single(0.3), 0.25).unwrap() - 0.5).abs() < 1e-15);
        let two = AtomicMeasure::new(vec![(0.0, 0.5), (3.0, 0.5)], 0, 0.0).unwrap();
        assert!((corr_sq_norm(&two, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let close = AtomicMeasure::new(vec![(0.0, 0.5), (1.0, 0.5)], 0, 0.0).unwrap();
        assert!((corr_sq_norm(&close, 1.0).unwrap() - 1.5).abs() < 1e-15);
        assert!(matches!(corr_sq_norm(&close, 0.0), Err(Error::InvalidRadius(_))));
    }

    #[test]
    fn fast_norm_matches_pairwise() {
        let p = cl(2, 0.8);
        let mu = sample_mx(&p, 0.3, 12, SampleMode::Exact).unwrap();
        for r in [1e-3, 1e-2, 0.1, 1.0] {
            let a = corr_sq_norm(&mu, r).unwrap();
            let b = corr_sq_norm_fast(&mu, r).unwrap();
            assert!((a - b).abs() <= 1e-10 * a, "r={r} {a} {b}");
        }
    }

    #[test]
    fn fiber_affine_empty_and_single_digit() {
        let p = cl(2, 0.7);
        let fa = fiber_affine(&p, 0.3, &Word::empty()).unwrap();
        assert_eq!((fa.scale, fa.offset), (1.0, 0.0));
        let fa = fiber_affine(&p, 0.3, &Word(vec![1])).unwrap();
        let x1 = 0.65;
        let want = -std::f64::consts::TAU * (std::f64::consts::TAU * x1).sin();
        assert!((fa.offset - want).abs() < 1e-12);
        assert!((fa.scale - 0.7).abs() < 1e-16);
    }

    #[test]
    fn tsujii_single_atom() {
        let p = cl(2, 0.7);
        let (l, r) = tsujii_scaling_check(&single(1.0), &p, 3, 0.01).unwrap();
        assert!((l - 0.02).abs() < 1e-15 && (r - 0.02).abs() < 1e-15);
    }

    #[test]
    fn i_r_zero_psi() {
        let p = SystemParams::new(2, 0.7, PeriodicFn::zero()).unwrap();
        let r = 0.05;
        let est = i_r_estimate(&p, r, 16, 8, SampleMode::Exact, None).unwrap();
        assert!((est.value - 2.0 / r).abs() < 1e-9);
        let w = |x: f64| 1.0 + x;
        let est = i_r_estimate(&p, r, 16, 8, SampleMode::Exact, Some(&w)).unwrap();
        assert!((est.value - 2.0 / r * 1.5).abs() < 1e-9);
    }

    #[test]
    fn dyadic_uniform_has_dimension_one() {
        let n = 1 << 14;
        let atoms: Vec<(f64, f64)> = (0..n).map(|i| ((i as f64 + 0.5) / n as f64, 1.0 / n as f64)).collect();
        let mu = AtomicMeasure::new(atoms, 0, 0.0).unwrap();
        let radii: Vec<f64> = (4..=10).map(|k| 2f64.powi(-k)).collect();
        let ld = local_dim_regress(&mu, &radii, 400, 1).unwrap();
        assert!(ld.ci_low - 0.05 <= 1.0 && 1.0 <= ld.ci_high + 0.05, "{ld:?}");
        assert!((ld.slope - 1.0).abs() < 0.1);
    }

    #[test]
    fn degenerate_measure_has_no_slope() {
        let r = local_dim_regress(&single(0.0), &[0.1, 0.01], 10, 0);
        assert!(matches!(r, Err(Error::DegenerateMeasure)));
    }

    #[test]
    fn srb_zero_psi_on_axis() {
        let p = SystemParams::new(2, 0.7, PeriodicFn::zero()).unwrap();
        let cfg = SrbConfig { n_points: 4, n_iter: 200, burn_in: 10, seed: 5, x_bins: 8, y_bins: 9 };
        // y_max = 0 for ψ ≡ 0; every point lands in the middle row
        let h = srb_sample(&p, &cfg).unwrap();
        assert_eq!(h.total(), 4 * 190);
        let mid: u64 = (0..8).map(|ix| h.count(ix, 4)).sum::<u64>()
            + (0..8).map(|ix| h.count(ix, 0)).sum::<u64>();
        assert_eq!(mid, h.total());
    }

    #[test]
    fn srb_x_marginal_uniform() {
        let p = cl(2, 0.7);
        let cfg = SrbConfig { n_points: 32, n_iter: 2100, burn_in: 100, seed: 11, x_bins: 8, y_bins: 16 };
        let h = srb_sample(&p, &cfg).unwrap();
        let tot = h.total() as f64;
        for ix in 0..8 {
            let c: u64 = h.column(ix).iter().sum();
            let frac = c as f64 / tot;
            assert!((frac - 0.125).abs() < 0.01, "{ix}: {frac}");
        }
    }

    #[test]
    fn srb_rejects_bad_iterations() {
        let p = cl(2, 0.7);
        let cfg = SrbConfig { n_points: 1, n_iter: 10, burn_in: 10, seed: 0, x_bins: 2, y_bins: 2 };
        assert!(srb_sample(&p, &cfg).is_err());
    }
}
