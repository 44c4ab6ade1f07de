//! Branch-and-bound certification of (ε,δ)-transversality for pairs of words,
//! per-cell tangency graphs, and the closed-form pruning quantities.

use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{self, Interval};
use crate::series::{self, Code, Need, SeriesState, SystemParams, Word};

/// Resource caps for a single [`certify_pair`] run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// Maximum number of extension digits appended to each word.
    pub d_max: usize,
    /// Maximum number of successive bisections of the cell.
    pub x_depth: u32,
    /// Maximum number of nodes examined.
    pub max_nodes: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { d_max: 14, x_depth: 20, max_nodes: 20_000 }
    }
}

#[derive(Clone, Debug)]
pub struct CertTask {
    pub params: SystemParams,
    pub q: usize,
    pub cell: Interval,
    pub k: Word,
    pub l: Word,
    pub eps: f64,
    pub delta: f64,
    pub budget: Budget,
}

impl CertTask {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.delta > 0.0) {
            return Err(Error::InvalidParams("eps and delta must be positive".into()));
        }
        if !(self.cell.lo >= 0.0 && self.cell.hi <= 1.0 && self.cell.is_finite()) {
            return Err(Error::InvalidParams(format!("cell {} not inside [0,1]", self.cell)));
        }
        if self.k.len() != self.q || self.l.len() != self.q {
            return Err(Error::LengthMismatch(self.k.len(), self.l.len()));
        }
        self.params.check_word(&self.k)?;
        self.params.check_word(&self.l)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertStatus {
    Transversal,
    Unresolved,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Margin {
    Value,
    Derivative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnresolvedReason {
    /// `k = l`: identical series.
    Diagonal,
    /// Node budget exhausted.
    NodeBudget,
    /// A node needed refinement beyond both the digit and the bisection caps.
    DepthCap,
    /// A node whose enclosures can no longer clear either threshold within
    /// the digit cap, whatever the refinement.
    Stuck,
}

/// A pruned node: on `cell`, every continuation of `k·a` versus `l·b`
/// is separated by the recorded margin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    pub cell: Interval,
    pub a: Word,
    pub b: Word,
    pub value: Interval,
    pub deriv: Interval,
    pub margin: Margin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub status: CertStatus,
    pub reason: Option<UnresolvedReason>,
    pub leaves: Vec<Leaf>,
    pub node_count: usize,
    pub max_ext_depth: usize,
    pub max_x_depth: u32,
    pub b: u32,
    pub gamma: f64,
    pub q: usize,
    pub k: Word,
    pub l: Word,
    pub cell: Interval,
    pub eps: f64,
    pub delta: f64,
}

impl Certificate {
    pub fn is_transversal(&self) -> bool {
        self.status == CertStatus::Transversal
    }
}

/// Partial sums for the two words at the whole cell and at its midpoint.
#[derive(Clone, Copy, Debug)]
struct NodeStates {
    kx: SeriesState,
    lx: SeriesState,
    km: SeriesState,
    lm: SeriesState,
}

const NEED_CELL: Need = Need::ALL;
const NEED_MID: Need = Need { value: true, der: true, der2: false };

impl NodeStates {
    fn build(params: &SystemParams, x: Interval, ka: &[u8], lb: &[u8]) -> Self {
        let m = Interval::point(x.mid());
        let run = |pt: Interval, w: &[u8], need: Need| {
            let mut st = SeriesState::start(params, pt);
            for &d in w {
                st.step(params, d, need);
            }
            st
        };
        NodeStates {
            kx: run(x, ka, NEED_CELL),
            lx: run(x, lb, NEED_CELL),
            km: run(m, ka, NEED_MID),
            lm: run(m, lb, NEED_MID),
        }
    }

    fn extend(&self, params: &SystemParams, da: u8, db: u8) -> Self {
        let mut s = *self;
        s.kx.step(params, da, NEED_CELL);
        s.km.step(params, da, NEED_MID);
        s.lx.step(params, db, NEED_CELL);
        s.lm.step(params, db, NEED_MID);
        s
    }

    /// Prefix-difference enclosures `(value, deriv)` without tails.
    fn core(&self, x: Interval) -> (Interval, Interval) {
        let dx = x - Interval::point(x.mid());
        let v_naive = self.kx.value - self.lx.value;
        let d_naive = self.kx.der - self.lx.der;
        let d2 = self.kx.der2 - self.lx.der2;
        let v_cf = (self.km.value - self.lm.value) + d_naive * dx;
        let d_cf = (self.km.der - self.lm.der) + d2 * dx;
        (
            v_naive.intersect(&v_cf).unwrap_or(v_naive),
            d_naive.intersect(&d_cf).unwrap_or(d_naive),
        )
    }
}

/// Difference tails at total depth `n`: `(2τ_val(n), 2τ_der(n))`.
fn diff_tails(params: &SystemParams, n: usize) -> (f64, f64) {
    (
        (2.0 * params.tail_radius_val(n)).next_up(),
        (2.0 * params.tail_radius_der(n)).next_up(),
    )
}

/// Encloses `{S(x,k·a·u) − S(x,l·b·v)}` and the same for `S′` over `x ∈ cell`
/// and all continuations `u, v`.
pub fn pair_diff_enclosure(
    params: &SystemParams,
    cell: Interval,
    ka: &Word,
    lb: &Word,
) -> Result<(Interval, Interval)> {
    if ka.len() != lb.len() {
        return Err(Error::LengthMismatch(ka.len(), lb.len()));
    }
    params.check_word(ka)?;
    params.check_word(lb)?;
    let (tv, td) = diff_tails(params, ka.len());
    if ka == lb {
        return Ok((Interval::symmetric(tv), Interval::symmetric(td)));
    }
    let st = NodeStates::build(params, cell, ka.digits(), lb.digits());
    let (v, d) = st.core(cell);
    Ok((v.widen(tv), d.widen(td)))
}

struct Node {
    x: Interval,
    xdepth: u32,
    a: Vec<u8>,
    b: Vec<u8>,
    states: NodeStates,
}

/// Normalized distance of an enclosure from the forbidden band, used only to
/// decide which error source to attack.
fn promise(e: Interval, thr: f64, tail_floor: f64) -> f64 {
    let c = e.mid().abs();
    if tail_floor >= c {
        return f64::NEG_INFINITY;
    }
    (c - thr) / e.radius().max(f64::MIN_POSITIVE)
}

/// Runs the covering search for one pair over one cell.
pub fn certify_pair(task: &CertTask) -> Result<Certificate> {
    task.validate()?;
    Ok(certify_pair_inner(task, true))
}

pub(crate) fn certify_pair_inner(task: &CertTask, keep_leaves: bool) -> Certificate {
    let p = &task.params;
    let mut cert = Certificate {
        status: CertStatus::Unresolved,
        reason: None,
        leaves: Vec::new(),
        node_count: 0,
        max_ext_depth: 0,
        max_x_depth: 0,
        b: p.b,
        gamma: p.gamma,
        q: task.q,
        k: task.k.clone(),
        l: task.l.clone(),
        cell: task.cell,
        eps: task.eps,
        delta: task.delta,
    };
    if task.k == task.l {
        cert.reason = Some(UnresolvedReason::Diagonal);
        return cert;
    }
    let q = task.q;
    let budget = task.budget;
    let (tv_floor, td_floor) = diff_tails(p, q + budget.d_max);
    let tails: Vec<(f64, f64)> = (0..=budget.d_max).map(|d| diff_tails(p, q + d)).collect();

    let root = Node {
        x: task.cell,
        xdepth: 0,
        a: Vec::new(),
        b: Vec::new(),
        states: NodeStates::build(p, task.cell, task.k.digits(), task.l.digits()),
    };
    let mut stack = vec![root];
    let bb = p.b as u8;
    while let Some(node) = stack.pop() {
        cert.node_count += 1;
        if cert.node_count > budget.max_nodes {
            cert.reason = Some(UnresolvedReason::NodeBudget);
            return cert;
        }
        let d = node.a.len();
        cert.max_ext_depth = cert.max_ext_depth.max(d);
        cert.max_x_depth = cert.max_x_depth.max(node.xdepth);
        let (cv, cd) = node.states.core(node.x);
        let (tv, td) = tails[d];
        let val = cv.widen(tv);
        let der = cd.widen(td);
        let margin = if val.abs_lower_bound() > task.eps {
            Some(Margin::Value)
        } else if der.abs_lower_bound() > task.delta {
            Some(Margin::Derivative)
        } else {
            None
        };
        if let Some(margin) = margin {
            if keep_leaves {
                cert.leaves.push(Leaf {
                    cell: node.x,
                    a: Word(node.a.clone()),
                    b: Word(node.b.clone()),
                    value: val,
                    deriv: der,
                    margin,
                });
            }
            continue;
        }
        let vb = task.eps + tv_floor;
        let db = task.delta + td_floor;
        if val.lo >= -vb && val.hi <= vb && der.lo >= -db && der.hi <= db {
            cert.reason = Some(UnresolvedReason::Stuck);
            return cert;
        }

        let can_extend = d < budget.d_max;
        let can_bisect = node.xdepth < budget.x_depth && node.x.width() > 0.0;
        let pv = promise(val, task.eps, tv_floor);
        let pd = promise(der, task.delta, td_floor);
        let want_extend = if pv == f64::NEG_INFINITY && pd == f64::NEG_INFINITY {
            !can_bisect
        } else if pv >= pd {
            tv >= cv.radius()
        } else {
            td >= cd.radius()
        };
        let extend = match (want_extend, can_extend, can_bisect) {
            (_, false, false) => {
                cert.reason = Some(UnresolvedReason::DepthCap);
                return cert;
            }
            (true, true, _) | (false, true, false) => true,
            _ => false,
        };
        if extend {
            for da in (0..bb).rev() {
                for db_ in (0..bb).rev() {
                    let mut a = node.a.clone();
                    a.push(da);
                    let mut b = node.b.clone();
                    b.push(db_);
                    stack.push(Node {
                        x: node.x,
                        xdepth: node.xdepth,
                        states: node.states.extend(p, da, db_),
                        a,
                        b,
                    });
                }
            }
        } else {
            let Ok((lo, hi)) = node.x.bisect() else {
                cert.reason = Some(UnresolvedReason::DepthCap);
                return cert;
            };
            for half in [hi, lo] {
                let ka: Vec<u8> = task.k.digits().iter().chain(&node.a).copied().collect();
                let lb: Vec<u8> = task.l.digits().iter().chain(&node.b).copied().collect();
                stack.push(Node {
                    x: half,
                    xdepth: node.xdepth + 1,
                    a: node.a.clone(),
                    b: node.b.clone(),
                    states: NodeStates::build(p, half, &ka, &lb),
                });
            }
        }
    }
    cert.status = CertStatus::Transversal;
    cert
}

/// One `(cell, pair)` outcome in a [`PairGraph`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub cell: u64,
    pub k: u32,
    pub l: u32,
    pub status: CertStatus,
    pub reason: Option<UnresolvedReason>,
    pub nodes: usize,
    /// How the result was obtained: a fresh search, inherited from a coarser
    /// grid or looser thresholds, or mirrored by digit reflection.
    pub origin: Origin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Searched,
    Inherited,
    Reflected,
}

/// Per-cell sets of word pairs not certified transversal. Words of length `q`
/// are indexed by [`Word::value`]; pairs are stored unordered as `(k, l)`,
/// `k < l`, and the diagonal is implicit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairGraph {
    pub b: u32,
    pub q: usize,
    pub p: u32,
    pub eps: f64,
    pub delta: f64,
    pub cells: Vec<Vec<(u32, u32)>>,
    pub records: Vec<TaskRecord>,
}

impl PairGraph {
    pub fn n_cells(&self) -> u64 {
        (self.b as u64).pow(self.p)
    }

    pub fn n_words(&self) -> u32 {
        self.b.pow(self.q as u32)
    }

    pub fn cell_interval(&self, cell: u64) -> Interval {
        cell_interval(self.b, self.p, cell)
    }

    /// Ordered-pair membership; the diagonal is always unresolved.
    pub fn contains(&self, cell: u64, u: u32, v: u32) -> bool {
        if u == v {
            return true;
        }
        let key = (u.min(v), u.max(v));
        self.cells[cell as usize].binary_search(&key).is_ok()
    }

    /// All unresolved ordered pairs of a cell, diagonal included.
    pub fn ordered_pairs(&self, cell: u64) -> Vec<(u32, u32)> {
        let mut out: Vec<(u32, u32)> = (0..self.n_words()).map(|u| (u, u)).collect();
        for &(k, l) in &self.cells[cell as usize] {
            out.push((k, l));
            out.push((l, k));
        }
        out.sort_unstable();
        out
    }

    /// Row degrees `#{v : (u,v) unresolved}` of a cell.
    pub fn degrees(&self, cell: u64) -> Vec<u32> {
        let mut deg = vec![1u32; self.n_words() as usize];
        for &(k, l) in &self.cells[cell as usize] {
            deg[k as usize] += 1;
            deg[l as usize] += 1;
        }
        deg
    }

    /// Index of the cell containing the image `x(u)` of `cell` under word `u`.
    pub fn image_cell(&self, cell: u64, u: u32) -> u64 {
        image_cell(self.b, self.p, self.q, cell, u)
    }
}

/// `[k/b^p, (k+1)/b^p]`, enclosed.
pub fn cell_interval(b: u32, p: u32, cell: u64) -> Interval {
    let n = (b as f64).powi(p as i32);
    Interval::ratio(cell as f64, n).hull(&Interval::ratio((cell + 1) as f64, n))
}

/// The image of `[k/b^p, (k+1)/b^p)` under `x ↦ x(u)`, `|u| = q`, is
/// `[(k + b^p U)/b^{p+q}, (k + 1 + b^p U)/b^{p+q})`, which lies in cell
/// `⌊(k + b^p U)/b^q⌋` of the same grid.
pub fn image_cell(b: u32, p: u32, q: usize, cell: u64, u: u32) -> u64 {
    let bp = (b as u64).pow(p);
    let bq = (b as u64).pow(q as u32);
    (cell + bp * u as u64) / bq
}

/// Certifies every off-diagonal pair on every cell of the `b^p` grid.
///
/// Results in `priors` that were certified at the same `q`, on a grid of depth
/// `≤ p` and with thresholds `≥ (eps, delta)`, are reused. For odd `ψ` the
/// right half of the grid is obtained from the left half by reflection.
pub fn tangency_graph(
    params: &SystemParams,
    q: usize,
    p: u32,
    eps: f64,
    delta: f64,
    budget: Budget,
    priors: &[&PairGraph],
) -> Result<PairGraph> {
    if !(eps > 0.0 && delta > 0.0) {
        return Err(Error::InvalidParams("eps and delta must be positive".into()));
    }
    if q == 0 {
        return Err(Error::InvalidParams("q must be >= 1".into()));
    }
    let b = params.b;
    let n_cells = (b as u64).pow(p);
    let n_words = b.pow(q as u32);
    let priors: Vec<&PairGraph> = priors
        .iter()
        .copied()
        .filter(|g| g.b == b && g.q == q && g.p <= p && g.eps >= eps && g.delta >= delta)
        .collect();
    let mirror = params.psi.is_odd();
    let searched_cells: Vec<u64> = if mirror {
        (0..n_cells).filter(|&c| c <= n_cells - 1 - c).collect()
    } else {
        (0..n_cells).collect()
    };
    let mut tasks = Vec::new();
    for &c in &searched_cells {
        for k in 0..n_words {
            for l in (k + 1)..n_words {
                tasks.push((c, k, l));
            }
        }
    }
    let word = |v: u32| Word::from_value(v as u64, q, b);
    let results: Vec<TaskRecord> = tasks
        .par_iter()
        .map(|&(c, k, l)| {
            let known = priors.iter().any(|g| !g.contains(c / (b as u64).pow(p - g.p), k, l));
            {
                if known {
                    return TaskRecord {
                        cell: c,
                        k,
                        l,
                        status: CertStatus::Transversal,
                        reason: None,
                        nodes: 0,
                        origin: Origin::Inherited,
                    };
                }
            }
            let task = CertTask {
                params: params.clone(),
                q,
                cell: cell_interval(b, p, c),
                k: word(k),
                l: word(l),
                eps,
                delta,
                budget,
            };
            let cert = certify_pair_inner(&task, false);
            TaskRecord {
                cell: c,
                k,
                l,
                status: cert.status,
                reason: cert.reason,
                nodes: cert.node_count,
                origin: Origin::Searched,
            }
        })
        .collect();

    let mut records = results;
    if mirror {
        let refl = |v: u32| n_words - 1 - v;
        let mirrored: Vec<TaskRecord> = records
            .iter()
            .filter(|r| r.cell != n_cells - 1 - r.cell)
            .map(|r| {
                let (k2, l2) = (refl(r.k), refl(r.l));
                TaskRecord {
                    cell: n_cells - 1 - r.cell,
                    k: k2.min(l2),
                    l: k2.max(l2),
                    origin: Origin::Reflected,
                    nodes: 0,
                    ..r.clone()
                }
            })
            .collect();
        records.extend(mirrored);
    }
    records.sort_by_key(|r| (r.cell, r.k, r.l));
    let mut cells = vec![Vec::new(); n_cells as usize];
    for r in &records {
        if r.status == CertStatus::Unresolved {
            cells[r.cell as usize].push((r.k, r.l));
        }
    }
    Ok(PairGraph { b, q, p, eps, delta, cells, records })
}

/// Per-cell row-degree maxima and their global maximum.
pub fn e_upper(graph: &PairGraph) -> (Vec<u32>, u32) {
    let per: Vec<u32> = (0..graph.n_cells())
        .map(|c| graph.degrees(c).into_iter().max().unwrap_or(1))
        .collect();
    let global = per.iter().copied().max().unwrap_or(1);
    (per, global)
}

/// Encloses `Δ_{b,γ} = max_t (sin bt + γ sin t)` by best-first interval
/// branch and bound over one period, in turns.
pub fn delta_max(b: u32, gamma: f64) -> Result<Interval> {
    if b < 1 || !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidParams(format!("delta_max needs b >= 1, gamma in [0,1); got {b}, {gamma}")));
    }
    let g = Interval::point(gamma);
    let bf = b as f64;
    let tau = interval::tau();
    let f = |s: Interval| s.scale(bf).sin2pi() + g * s.sin2pi();
    let df = |s: Interval| tau * (s.scale(bf).cos2pi().scale(bf) + g * s.cos2pi());
    let upper = |s: Interval| {
        let m = Interval::point(s.mid());
        let cf = f(m) + df(s) * (s - m);
        let naive = f(s);
        naive.intersect(&cf).unwrap_or(naive).hi
    };

    #[derive(PartialEq)]
    struct Item(f64, Interval);
    impl Eq for Item {}
    impl PartialOrd for Item {
        fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(o))
        }
    }
    impl Ord for Item {
        fn cmp(&self, o: &Self) -> std::cmp::Ordering {
            self.0.total_cmp(&o.0)
        }
    }

    let pieces = 64 * b.max(1) as usize;
    let mut best = f64::NEG_INFINITY;
    let mut heap = BinaryHeap::new();
    for i in 0..pieces {
        let s = Interval::ratio(i as f64, pieces as f64).hull(&Interval::ratio((i + 1) as f64, pieces as f64));
        best = best.max(f(Interval::point(s.mid())).lo);
        heap.push(Item(upper(s), s));
    }
    let mut iters = 0usize;
    while let Some(Item(ub, s)) = heap.pop() {
        if ub - best <= 1e-13 || iters > 200_000 {
            heap.push(Item(ub, s));
            break;
        }
        iters += 1;
        let Ok((l, r)) = s.bisect() else {
            heap.push(Item(ub, s));
            break;
        };
        for h in [l, r] {
            best = best.max(f(Interval::point(h.mid())).lo);
            let u = upper(h);
            if u >= best {
                heap.push(Item(u, h));
            }
        }
    }
    let hi = heap.peek().map(|i| i.0).unwrap_or(best).max(best);
    Ok(Interval::new(best, hi))
}

/// `θ₀, θ₁, θ₂` with the `max(0, ·)` guard.
pub fn theta_bound(which: u8, b: u32, gamma: f64) -> Result<f64> {
    if b < 2 {
        return Err(Error::InvalidParams(format!("theta_bound needs b >= 2, got {b}")));
    }
    let bf = b as f64;
    let pi = std::f64::consts::PI;
    let (angle, c) = match which {
        0 => (pi / bf, 1.0),
        1 => (pi / bf, 4.0),
        2 => (2.0 * pi / bf, 4.0),
        _ => return Err(Error::InvalidParams(format!("theta index {which} not in 0..=2"))),
    };
    let s = bf * angle.sin();
    let r = gamma * bf / (bf - gamma);
    Ok((s * s - c * r * r).max(0.0).sqrt())
}

/// Outcome of [`noncohomology_witness`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x1: f64,
    /// One fifth of the certified gap `|G(x₁,0^∞) − G(x₁,10^∞)|`.
    pub delta5: f64,
    pub n1: u32,
    pub gamma1: f64,
}

/// Searches a grid for `x₁` with a certified positive gap between
/// `G(x,0^∞)` and `G(x,10^∞)`, then derives `N₁` and `γ₁`.
pub fn noncohomology_witness(params: &SystemParams, grid: usize, depth: usize) -> Result<Witness> {
    let b = params.b;
    let zeros = Code::new(params, Word::zeros(depth))?;
    let mut one = vec![0u8; depth];
    if depth > 0 {
        one[0] = 1;
    }
    let onez = Code::new(params, Word(one))?;
    let mut best: Option<(f64, f64)> = None;
    for i in 0..grid.max(1) {
        let x = Interval::ratio(i as f64 + 0.5, grid.max(1) as f64);
        let g0 = series::eval_g(params, x, &zeros)?;
        let g1 = series::eval_g(params, x, &onez)?;
        let gap = (g0 - g1).abs_lower_bound();
        if gap > 0.0 && best.is_none_or(|(_, g)| gap > g) {
            best = Some((x.mid(), gap));
        }
    }
    let (x1, gap) = best.ok_or(Error::WitnessNotFound(grid))?;
    let delta = gap / 5.0;
    let c = params.dpsi_sup;
    let bf = b as f64;
    let mut n1 = 1u32;
    while !(2.0 * c < delta * bf.powi(n1 as i32) * (bf - 1.0)) {
        n1 += 1;
        if n1 > 2000 {
            return Err(Error::WitnessNotFound(grid));
        }
    }
    let rhs = delta * bf * (bf - 1.0);
    let base = (1.0 - rhs / c).max(0.0);
    let mut gamma1 = base.powf(1.0 / n1 as f64);
    let ok = |g: f64| (1.0 - g.powi(n1 as i32)) * c < rhs;
    let mut bump = f64::EPSILON;
    while !ok(gamma1) {
        gamma1 = (gamma1 + bump).min(1.0);
        bump *= 2.0;
        if gamma1 >= 1.0 {
            return Err(Error::WitnessNotFound(grid));
        }
    }
    Ok(Witness { x1, delta5: delta, n1, gamma1 })
}
