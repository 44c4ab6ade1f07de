//! Graph sampling of `f(x) = Σ λⁿ φ(bⁿx)` and two dimension estimators:
//! column-range box counting and local dimension of the graph-lift measure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{ols, t95};
use crate::series::PeriodicFn;

/// Relative slack per term for the round-to-nearest cosine evaluations.
const TERM_SLACK: f64 = 1e-14;

/// `2 + log λ / log b`. Accepts `λ = 1/b` up to rounding.
pub fn theoretical_d(lambda: f64, b: u32) -> Result<f64> {
    let bf = b as f64;
    if b < 2 || !(lambda < 1.0) || lambda * bf < 1.0 - 1e-12 || !lambda.is_finite() {
        return Err(Error::InvalidParams(format!("lambda = {lambda} not in [1/{b}, 1)")));
    }
    Ok((2.0 + lambda.ln() / bf.ln()).max(1.0))
}

/// Value enclosures of a function at `x_j = j / 2^m`, `j = 0 … 2^m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSample {
    pub m: u32,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Truncation part of the enclosure radius.
    pub tail: f64,
}

impl GraphSample {
    /// Samples `Σ_{n<N} λⁿ φ(bⁿx)` plus the tail `λ^N ‖φ‖∞/(1 − λ)`.
    ///
    /// `bⁿ x_j mod 1` is formed exactly as `((bⁿ mod 2^m)·j mod 2^m) / 2^m`.
    pub fn weierstrass(lambda: f64, b: u32, phi: &PeriodicFn, m: u32, depth: usize) -> Result<Self> {
        theoretical_d(lambda, b)?;
        if !(1..=26).contains(&m) {
            return Err(Error::InvalidParams(format!("resolution 2^{m} out of range")));
        }
        let f = phi.compile();
        let sup = f.sup(0);
        let tail = sup * lambda.powi(depth as i32) / (1.0 - lambda) * (1.0 + 1e-12);
        let slack = TERM_SLACK * sup / (1.0 - lambda) * depth.max(1) as f64;
        let modulus: u64 = 1 << m;
        let mask = modulus - 1;
        let mut mults = Vec::with_capacity(depth);
        let mut bn: u64 = 1;
        for _ in 0..depth {
            mults.push(bn);
            bn = (bn * b as u64) & mask;
        }
        let scale = 1.0 / modulus as f64;
        let vals: Vec<f64> = (0..=modulus)
            .into_par_iter()
            .map(|j| {
                let mut acc = 0.0;
                let mut c = 1.0;
                for &k in &mults {
                    let t = ((k * (j & mask)) & mask) as f64 * scale;
                    acc += c * f.value_f64(t);
                    c *= lambda;
                }
                acc
            })
            .collect();
        let r = tail + slack;
        Ok(GraphSample {
            m,
            lo: vals.iter().map(|v| v - r).collect(),
            hi: vals.iter().map(|v| v + r).collect(),
            tail,
        })
    }

    /// Exact samples of a synthetic function (zero tail).
    pub fn from_fn(m: u32, f: impl Fn(f64) -> f64 + Sync) -> Self {
        let n = 1u64 << m;
        let vals: Vec<f64> = (0..=n).into_par_iter().map(|j| f(j as f64 / n as f64)).collect();
        GraphSample { m, lo: vals.clone(), hi: vals, tail: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }

    pub fn mid(&self, j: usize) -> f64 {
        0.5 * (self.lo[j] + self.hi[j])
    }

    pub fn translated(&self, c: f64) -> GraphSample {
        GraphSample {
            m: self.m,
            lo: self.lo.iter().map(|v| v + c).collect(),
            hi: self.hi.iter().map(|v| v + c).collect(),
            tail: self.tail,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleCount {
    pub k: u32,
    pub scale: f64,
    pub count: u64,
    pub used: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimEstimate {
    pub slope: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl DimEstimate {
    fn from_fit(xs: &[f64], ys: &[f64]) -> DimEstimate {
        let (slope, _, se) = ols(xs, ys);
        let h = t95(xs.len().saturating_sub(2)) * se;
        DimEstimate { slope, stderr: se, ci_low: slope - h, ci_high: slope + h }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDim {
    pub estimate: DimEstimate,
    pub counts: Vec<ScaleCount>,
    /// Slopes with zero or one scale trimmed from each end.
    pub sensitivity: Vec<(usize, f64)>,
}

/// Occupied `s × s` boxes, `s = 2^{-k}`, counted column by column from the
/// hull of the enclosures inside each column (endpoints shared).
pub fn box_count(sample: &GraphSample, k: u32) -> Result<u64> {
    if k >= sample.m {
        return Err(Error::ScalePrecondition(format!(
            "scale 2^-{k} is not coarser than the resolution 2^-{}",
            sample.m
        )));
    }
    let s = 2f64.powi(-(k as i32));
    if s <= 2.0 * sample.tail {
        return Err(Error::ScalePrecondition(format!(
            "scale 2^-{k} not above twice the tail bound {}",
            sample.tail
        )));
    }
    let per = 1usize << (sample.m - k);
    let cols = 1usize << k;
    let total = (0..cols)
        .into_par_iter()
        .map(|c| {
            let a = c * per;
            let lo = sample.lo[a..=a + per].iter().copied().fold(f64::INFINITY, f64::min);
            let hi = sample.hi[a..=a + per].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            ((hi / s).floor() - (lo / s).floor()) as u64 + 1
        })
        .sum();
    Ok(total)
}

/// Box-counting slope over `s = 2^{-k}` for `k ∈ ks`, fitted after dropping
/// `trim` scales at each end.
pub fn box_count_dim(sample: &GraphSample, ks: &[u32], trim: usize) -> Result<BoxDim> {
    if ks.len() < 2 * trim + 2 {
        return Err(Error::ScalePrecondition(format!(
            "{} scales cannot be trimmed by {trim} at each end",
            ks.len()
        )));
    }
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let n = ks.len();
    let mut counts = Vec::with_capacity(n);
    for (i, &k) in ks.iter().enumerate() {
        counts.push(ScaleCount {
            k,
            scale: 2f64.powi(-(k as i32)),
            count: box_count(sample, k)?,
            used: i >= trim && i + trim < n,
        });
    }
    let fit = |t: usize| {
        let sel: Vec<&ScaleCount> = counts[t..n - t].iter().collect();
        let xs: Vec<f64> = sel.iter().map(|c| (1.0 / c.scale).ln()).collect();
        let ys: Vec<f64> = sel.iter().map(|c| (c.count as f64).ln()).collect();
        DimEstimate::from_fit(&xs, &ys)
    };
    let estimate = fit(trim);
    let sensitivity = (0..=trim.min(1))
        .filter(|&t| n >= 2 * t + 2 && t != trim)
        .map(|t| (t, fit(t).slope))
        .collect();
    Ok(BoxDim { estimate, counts, sensitivity })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointDim {
    pub estimate: DimEstimate,
    /// `(r, mean log mass)` per radius.
    pub points: Vec<(f64, f64)>,
}

/// Local dimension of the empirical measure on `(xs[i], ys[i])` (`xs`
/// sorted ascending) from square balls around `centers` mass-sampled points.
pub fn point_cloud_local_dim(
    xs: &[f64],
    ys: &[f64],
    radii: &[f64],
    centers: usize,
    seed: u64,
    min_points: usize,
) -> Result<PointDim> {
    let n = xs.len();
    if n != ys.len() {
        return Err(Error::LengthMismatch(n, ys.len()));
    }
    if radii.len() < 2 || centers == 0 || n < 2 {
        return Err(Error::InsufficientDensity("need two radii, a centre and two points".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks: Vec<usize> = (0..centers).map(|_| rng.gen_range(0..n)).collect();
    let mut pts = Vec::with_capacity(radii.len());
    for &r in radii {
        if !(r > 0.0) {
            return Err(Error::InvalidRadius(r));
        }
        let masses: Vec<usize> = picks
            .par_iter()
            .map(|&i| {
                let (cx, cy) = (xs[i], ys[i]);
                let a = xs.partition_point(|&v| v < cx - r);
                let b = xs.partition_point(|&v| v <= cx + r);
                ys[a..b].iter().filter(|&&y| (y - cy).abs() <= r).count()
            })
            .collect();
        let mean_count = masses.iter().sum::<usize>() as f64 / masses.len() as f64;
        if mean_count < min_points as f64 {
            return Err(Error::InsufficientDensity(format!(
                "radius {r}: mean of {mean_count:.1} points per ball, need {min_points}"
            )));
        }
        let mean_log =
            masses.iter().map(|&c| (c as f64 / n as f64).ln()).sum::<f64>() / masses.len() as f64;
        pts.push((r, mean_log));
    }
    let lx: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1).collect();
    Ok(PointDim { estimate: DimEstimate::from_fit(&lx, &ly), points: pts })
}

/// Local dimension of the lift of Lebesgue measure to the graph.
pub fn graph_mu_local_dim(sample: &GraphSample, radii: &[f64], centers: usize, seed: u64) -> Result<PointDim> {
    let n = sample.len() - 1;
    let xs: Vec<f64> = (0..n).map(|j| j as f64 / n as f64).collect();
    let ys: Vec<f64> = (0..n).map(|j| sample.mid(j)).collect();
    let min_r = radii.iter().copied().fold(f64::INFINITY, f64::min);
    if min_r <= 2.0 * sample.tail {
        return Err(Error::ScalePrecondition(format!("radius {min_r} within the tail bound")));
    }
    point_cloud_local_dim(&xs, &ys, radii, centers, seed, 4)
}
