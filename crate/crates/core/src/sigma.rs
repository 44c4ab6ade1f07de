//! Upper bounds on `σ(q)` from a tangency graph via explicit weight and
//! testing functions, and the main `σ(q) < (γb)^q` search.

use serde::{Deserialize, Serialize};

use crate::certify::{self, Budget, PairGraph};
use crate::error::{Error, Result};
use crate::series::SystemParams;

/// Root in `(1, 2]` of `2 − α = (b^q − 2) α (α − 1)`.
pub fn solve_alpha(b: u32, q: u32) -> Result<f64> {
    let n = (b as f64).powi(q as i32) - 2.0;
    if n < 0.0 {
        return Err(Error::InvalidParams(format!("b^q = {} < 2", n + 2.0)));
    }
    if n == 0.0 {
        return Ok(2.0);
    }
    // n α² − (n − 1) α − 2 = 0, positive root, then one Newton polish.
    let disc = (n - 1.0) * (n - 1.0) + 8.0 * n;
    let mut a = ((n - 1.0) + disc.sqrt()) / (2.0 * n);
    let f = n * a * a - (n - 1.0) * a - 2.0;
    a -= f / (2.0 * n * a - (n - 1.0));
    Ok(a)
}

/// `b^q − 2 + 2/α`.
pub fn one_miss_bound(b: u32, q: u32) -> Result<f64> {
    let a = solve_alpha(b, q)?;
    Ok((b as f64).powi(q as i32) - 2.0 + 2.0 / a)
}

/// The three-tier equation `1/(t²−1) + 2/(t³−2) + 1 − t²`.
pub fn three_tier_residual(t: f64) -> f64 {
    1.0 / (t * t - 1.0) + 2.0 / (t * t * t - 2.0) + 1.0 - t * t
}

/// Unique root `t` with `t³ > 2` of the three-tier equation.
pub fn solve_t() -> f64 {
    let mut lo = 2f64.cbrt() * (1.0 + 1e-12);
    let mut hi = 2.0;
    // residual is +∞ at the left end and decreasing
    while hi - lo > 4.0 * f64::EPSILON * hi {
        let m = 0.5 * (lo + hi);
        if three_tier_residual(m) > 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    let (rl, rh) = (three_tier_residual(lo).abs(), three_tier_residual(hi).abs());
    if rl <= rh {
        lo
    } else {
        hi
    }
}

pub fn golden() -> f64 {
    (5f64.sqrt() + 1.0) / 2.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Sqrt2,
    ThreeTier,
    Golden,
    OneMiss,
    Trivial,
}

impl SchemeKind {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::Sqrt2 => "sqrt2",
            SchemeKind::ThreeTier => "three_tier",
            SchemeKind::Golden => "golden",
            SchemeKind::OneMiss => "one_miss",
            SchemeKind::Trivial => "trivial",
        }
    }
}

/// Designated words of a cell: the centre `a` of its tangency star and the
/// leaves whose images land in the top tier (`b`) or the middle tier (`c`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Designated {
    pub a: u32,
    pub b: Option<u32>,
    pub c: Option<u32>,
}

/// A verified scheme with its region data.
///
/// `tier[c]` is the region label of cell `c`: for `Sqrt2`/`Golden`, 0 means
/// `K` and 1 its complement; for `ThreeTier` it is the index of `K₀, K₁, K₂`;
/// `Trivial` and `OneMiss` use 0 everywhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaScheme {
    pub kind: SchemeKind,
    pub bound: f64,
    pub tier: Vec<u8>,
    pub designated: Vec<Option<Designated>>,
    /// For `OneMiss`: a pair certified transversal in each cell.
    pub missing: Vec<Option<(u32, u32)>>,
}

fn trivial(graph: &PairGraph) -> SigmaScheme {
    let n = graph.n_cells() as usize;
    SigmaScheme {
        kind: SchemeKind::Trivial,
        bound: certify::e_upper(graph).1 as f64,
        tier: vec![0; n],
        designated: vec![None; n],
        missing: vec![None; n],
    }
}

/// Requires `b^q ≥ 3`: with two words a missed pair already means `e = 1`.
fn one_miss(graph: &PairGraph) -> Option<SigmaScheme> {
    let nw = graph.n_words();
    if nw < 3 {
        return None;
    }
    let mut missing = Vec::with_capacity(graph.n_cells() as usize);
    for c in 0..graph.n_cells() {
        let pair = (0..nw)
            .flat_map(|k| ((k + 1)..nw).map(move |l| (k, l)))
            .find(|&(k, l)| !graph.contains(c, k, l))?;
        missing.push(Some(pair));
    }
    let n = missing.len();
    Some(SigmaScheme {
        kind: SchemeKind::OneMiss,
        bound: one_miss_bound(graph.b, graph.q as u32).ok()?,
        tier: vec![0; n],
        designated: vec![None; n],
        missing,
    })
}

/// `K` = diagonal-only cells; every other cell must have row degree ≤ 2 and
/// its nontrivial pairs must send both (`both = true`) or at least one image
/// into `K`.
fn k_scheme(graph: &PairGraph, both: bool) -> Option<SigmaScheme> {
    let n = graph.n_cells();
    let in_k: Vec<bool> = graph.cells.iter().map(|c| c.is_empty()).collect();
    for c in 0..n {
        if in_k[c as usize] {
            continue;
        }
        if graph.degrees(c).into_iter().any(|d| d > 2) {
            return None;
        }
        for &(u, v) in &graph.cells[c as usize] {
            let iu = in_k[graph.image_cell(c, u) as usize];
            let iv = in_k[graph.image_cell(c, v) as usize];
            let ok = if both { iu && iv } else { iu || iv };
            if !ok {
                return None;
            }
        }
    }
    let (kind, bound) =
        if both { (SchemeKind::Sqrt2, 2f64.sqrt()) } else { (SchemeKind::Golden, golden()) };
    Some(SigmaScheme {
        kind,
        bound,
        tier: in_k.iter().map(|&k| if k { 0 } else { 1 }).collect(),
        designated: vec![None; n as usize],
        missing: vec![None; n as usize],
    })
}

fn three_tier(graph: &PairGraph) -> Option<SigmaScheme> {
    let n = graph.n_cells();
    let mut tier = vec![u8::MAX; n as usize];
    let mut designated = vec![None; n as usize];
    for c in 0..n {
        if graph.cells[c as usize].is_empty() {
            tier[c as usize] = 0;
        }
    }
    let img_tier = |tier: &[u8], c: u64, u: u32| tier[graph.image_cell(c, u) as usize];
    for c in 0..n {
        if let [(u, v)] = graph.cells[c as usize][..] {
            if img_tier(&tier, c, u) == 0 && img_tier(&tier, c, v) == 0 {
                tier[c as usize] = 1;
                designated[c as usize] = Some(Designated { a: u, b: Some(v), c: None });
            }
        }
    }
    for c in 0..n {
        if tier[c as usize] != u8::MAX {
            continue;
        }
        let pairs = &graph.cells[c as usize];
        // candidate centres: words incident to every nontrivial pair
        let mut centres: Vec<u32> = pairs.iter().flat_map(|&(u, v)| [u, v]).collect();
        centres.sort_unstable();
        centres.dedup();
        let found = centres.into_iter().find_map(|a| {
            if !pairs.iter().all(|&(u, v)| u == a || v == a) || img_tier(&tier, c, a) != 0 {
                return None;
            }
            let leaves: Vec<u32> =
                pairs.iter().map(|&(u, v)| if u == a { v } else { u }).collect();
            let mut d = Designated { a, b: None, c: None };
            for leaf in leaves {
                match img_tier(&tier, c, leaf) {
                    0 if d.b.is_none() => d.b = Some(leaf),
                    1 if d.c.is_none() => d.c = Some(leaf),
                    _ => return None,
                }
            }
            Some(d)
        });
        let d = found?;
        tier[c as usize] = 2;
        designated[c as usize] = Some(d);
    }
    Some(SigmaScheme {
        kind: SchemeKind::ThreeTier,
        bound: solve_t(),
        tier,
        designated,
        missing: vec![None; n as usize],
    })
}

/// Every scheme whose hypotheses verify on `graph`, in tie-break order.
pub fn verified_schemes(graph: &PairGraph) -> Vec<SigmaScheme> {
    let mut out: Vec<SigmaScheme> = [
        k_scheme(graph, true),
        three_tier(graph),
        k_scheme(graph, false),
        one_miss(graph),
        Some(trivial(graph)),
    ]
    .into_iter()
    .flatten()
    .collect();
    out.sort_by(|x, y| x.bound.total_cmp(&y.bound).then(x.kind.cmp(&y.kind)));
    out
}

/// The smallest verified bound; `Trivial` (the e-bound) always applies.
pub fn sigma_upper(graph: &PairGraph) -> SigmaScheme {
    verified_schemes(graph).into_iter().next().unwrap_or_else(|| trivial(graph))
}

/// Explicit `(ω, V)` realizing a scheme on `graph`.
pub struct WeightSystem {
    /// `ω` per cell.
    pub omega: Vec<f64>,
    /// `V(cell, u, v)` as a dense `b^q × b^q` matrix per cell.
    pub v: Vec<Vec<f64>>,
}

fn build_weights(graph: &PairGraph, scheme: &SigmaScheme) -> WeightSystem {
    let n = graph.n_cells() as usize;
    let nw = graph.n_words() as usize;
    let mut omega = vec![1.0; n];
    let mut v = vec![vec![0.0; nw * nw]; n];
    let phi = golden();
    let t = solve_t();
    let s = t * t / 2.0;
    let tangent = |c: usize, u: usize, w: usize| graph.contains(c as u64, u as u32, w as u32);
    for c in 0..n {
        let vc = &mut v[c];
        let set = |vc: &mut Vec<f64>, u: usize, w: usize, val: f64| vc[u * nw + w] = val;
        for u in 0..nw {
            set(vc, u, u, 1.0);
        }
        match scheme.kind {
            SchemeKind::Trivial => {
                for u in 0..nw {
                    for w in 0..nw {
                        if tangent(c, u, w) {
                            set(vc, u, w, 1.0);
                        }
                    }
                }
            }
            SchemeKind::OneMiss => {
                let (k, l) = scheme.missing[c].expect("one_miss cell without pair");
                let (k, l) = (k as usize, l as usize);
                let a = solve_alpha(graph.b, graph.q as u32).unwrap_or(2.0);
                let inkl = |x: usize| x == k || x == l;
                for u in 0..nw {
                    for w in 0..nw {
                        let val = match (inkl(u), inkl(w)) {
                            _ if u == w => 1.0,
                            (false, false) => 1.0,
                            (true, true) => 0.0,
                            (true, false) => a,
                            (false, true) => 1.0 / a,
                        };
                        set(vc, u, w, val);
                    }
                }
            }
            SchemeKind::Sqrt2 => {
                omega[c] = if scheme.tier[c] == 0 { 2f64.sqrt() } else { 1.0 };
                for u in 0..nw {
                    for w in 0..nw {
                        if tangent(c, u, w) {
                            set(vc, u, w, 1.0);
                        }
                    }
                }
            }
            SchemeKind::Golden => {
                let in_k = scheme.tier[c] == 0;
                omega[c] = if in_k { phi } else { 1.0 };
                if !in_k {
                    for u in 0..nw {
                        for w in 0..nw {
                            if u != w && tangent(c, u, w) {
                                let img = graph.image_cell(c as u64, u as u32) as usize;
                                let val = if scheme.tier[img] == 0 { phi } else { 1.0 / phi };
                                set(vc, u, w, val);
                            }
                        }
                    }
                }
            }
            SchemeKind::ThreeTier => {
                omega[c] = match scheme.tier[c] {
                    0 => t,
                    1 => s,
                    _ => 1.0,
                };
                match (scheme.tier[c], scheme.designated[c]) {
                    (1, Some(d)) => {
                        let (a, b) = (d.a as usize, d.b.unwrap_or(d.a) as usize);
                        set(vc, a, b, 1.0);
                        set(vc, b, a, 1.0);
                    }
                    (2, Some(d)) => {
                        let a = d.a as usize;
                        if let Some(b) = d.b {
                            set(vc, b as usize, a, t * t - 1.0);
                            set(vc, a, b as usize, 1.0 / (t * t - 1.0));
                        }
                        if let Some(cc) = d.c {
                            set(vc, cc as usize, a, t * s - 1.0);
                            set(vc, a, cc as usize, 1.0 / (t * s - 1.0));
                        }
                    }
                    _ => {}
                }
            }
        }
    }
    WeightSystem { omega, v }
}

/// Builds `(ω, V)` for `scheme`, checks admissibility against every
/// unresolved pair of `graph`, and returns `‖Σ_{V,ω}‖∞`.
pub fn validate_scheme(graph: &PairGraph, scheme: &SigmaScheme) -> Result<f64> {
    const TOL: f64 = 1e-12;
    let ws = build_weights(graph, scheme);
    let nw = graph.n_words() as usize;
    let mut sup: f64 = 0.0;
    for c in 0..graph.n_cells() {
        let vc = &ws.v[c as usize];
        for (u, w) in graph.ordered_pairs(c) {
            let prod = vc[u as usize * nw + w as usize] * vc[w as usize * nw + u as usize];
            if prod < 1.0 - TOL {
                return Err(Error::InvalidParams(format!(
                    "{} not admissible at cell {c}, pair ({u},{w}): product {prod}",
                    scheme.kind.name()
                )));
            }
        }
        for u in 0..nw {
            let img = graph.image_cell(c, u as u32) as usize;
            let row: f64 = vc[u * nw..(u + 1) * nw].iter().sum();
            sup = sup.max(ws.omega[c as usize] / ws.omega[img] * row);
        }
    }
    if sup > scheme.bound * (1.0 + TOL) {
        return Err(Error::InvalidParams(format!(
            "{} realizes {sup}, above its bound {}",
            scheme.kind.name(),
            scheme.bound
        )));
    }
    Ok(sup)
}

/// Search controls for [`certify_main`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MainConfig {
    pub q_max: usize,
    /// Grid depths tried, coarse to fine; `None` picks `1..=p` with `b^p ≤ 150`.
    pub p_range: Option<(u32, u32)>,
    /// Common value of `ε = δ`, tried in order.
    pub ladder: Vec<f64>,
    pub budget: Budget,
    /// Extra grid refinements tried after the first success at a given `q`,
    /// keeping the smallest bound found.
    pub polish: u32,
}

impl Default for MainConfig {
    fn default() -> Self {
        MainConfig {
            q_max: 3,
            p_range: None,
            ladder: vec![1e-2, 1e-3, 1e-4],
            budget: Budget::default(),
            polish: 1,
        }
    }
}

impl MainConfig {
    pub fn p_range_for(&self, b: u32, q: usize) -> (u32, u32) {
        if let Some(r) = self.p_range {
            return r;
        }
        let _ = q;
        let mut p = 1;
        while (b as u64).pow(p + 1) <= 150 {
            p += 1;
        }
        (1, p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub q: usize,
    pub p: u32,
    pub eps: f64,
    pub e_bound: u32,
    pub scheme: SchemeKind,
    pub sigma_bound: f64,
    pub target: f64,
    pub success: bool,
    pub searched_tasks: usize,
    pub nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub success: bool,
    pub b: u32,
    pub gamma: f64,
    pub q: Option<usize>,
    pub p: Option<u32>,
    pub eps: Option<f64>,
    pub scheme: Option<SchemeKind>,
    pub sigma_bound: Option<f64>,
    pub e_bound: Option<u32>,
    pub target: Option<f64>,
    /// `target − sigma_bound` of the successful attempt.
    pub margin: Option<f64>,
    pub attempts: Vec<Attempt>,
    pub graph: Option<PairGraph>,
    pub sigma: Option<SigmaScheme>,
}

/// Searches `q = 1..q_max`, grid depths and the `ε = δ` ladder for a graph
/// whose σ-bound beats `(γb)^q`. The first `q` with a success is final.
pub fn certify_main(params: &SystemParams, cfg: &MainConfig) -> Result<Verdict> {
    if cfg.q_max == 0 {
        return Err(Error::InvalidParams("q_max must be >= 1".into()));
    }
    if cfg.ladder.is_empty() || cfg.ladder.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidParams("eps ladder must be nonempty and positive".into()));
    }
    let gb = params.gamma * params.b as f64;
    let mut verdict = Verdict {
        success: false,
        b: params.b,
        gamma: params.gamma,
        q: None,
        p: None,
        eps: None,
        scheme: None,
        sigma_bound: None,
        e_bound: None,
        target: None,
        margin: None,
        attempts: Vec::new(),
        graph: None,
        sigma: None,
    };
    for q in 1..=cfg.q_max {
        let target = gb.powi(q as i32);
        let (p_lo, p_hi) = cfg.p_range_for(params.b, q);
        let mut history: Vec<PairGraph> = Vec::new();
        let mut polish_left: Option<u32> = None;
        for p in p_lo..=p_hi {
            if polish_left == Some(0) {
                break;
            }
            for &eps in &cfg.ladder {
                let priors: Vec<&PairGraph> = history.iter().collect();
                let graph =
                    certify::tangency_graph(params, q, p, eps, eps, cfg.budget, &priors)?;
                let scheme = sigma_upper(&graph);
                let e = certify::e_upper(&graph).1;
                let success = scheme.bound < target;
                let searched: Vec<_> = graph
                    .records
                    .iter()
                    .filter(|r| r.origin == certify::Origin::Searched)
                    .collect();
                verdict.attempts.push(Attempt {
                    q,
                    p,
                    eps,
                    e_bound: e,
                    scheme: scheme.kind,
                    sigma_bound: scheme.bound,
                    target,
                    success,
                    searched_tasks: searched.len(),
                    nodes: searched.iter().map(|r| r.nodes).sum(),
                });
                let improves = verdict.sigma_bound.is_none_or(|b| scheme.bound < b);
                if success && improves {
                    verdict.success = true;
                    verdict.q = Some(q);
                    verdict.p = Some(p);
                    verdict.eps = Some(eps);
                    verdict.scheme = Some(scheme.kind);
                    verdict.sigma_bound = Some(scheme.bound);
                    verdict.e_bound = Some(e);
                    verdict.target = Some(target);
                    verdict.margin = Some(target - scheme.bound);
                    verdict.graph = Some(graph.clone());
                    verdict.sigma = Some(scheme);
                }
                history.push(graph);
                if success {
                    break;
                }
            }
            if verdict.success {
                let left = polish_left.map_or(cfg.polish, |n| n.saturating_sub(1));
                // nothing beats a diagonal-only graph
                polish_left = Some(if verdict.sigma_bound == Some(1.0) { 0 } else { left });
            }
        }
        if verdict.success {
            return Ok(verdict);
        }
    }
    Ok(verdict)
}
