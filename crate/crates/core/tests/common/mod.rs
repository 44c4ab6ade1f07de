//! Oracles shared by the integration tests. Everything here is plain f64
//! code that does not call into the library's series evaluation.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use solenoid::certify::{self, Budget, CertTask, Certificate};
use solenoid::interval::Interval;
use solenoid::series::{SystemParams, Word};

const TAU: f64 = std::f64::consts::TAU;

/// `(S, S′)` of the infinite code `digits·0^∞` for classical ψ, summed until
/// the remaining terms are below `1e-10`.
pub fn s_pair(b: u32, g: f64, x: f64, digits: &[u8]) -> (f64, f64) {
    let bf = b as f64;
    let tail_terms = ((1e-10 * (1.0 - g) / TAU).ln() / g.ln()).ceil() as usize;
    let n = digits.len().max(tail_terms);
    let (mut xn, mut s, mut sp) = (x, 0.0, 0.0);
    let (mut c, mut cp) = (1.0, 1.0 / bf);
    for i in 0..n {
        let d = digits.get(i).copied().unwrap_or(0);
        xn = (xn + d as f64) / bf;
        s += c * -TAU * (TAU * xn).sin();
        sp += cp * -TAU * TAU * (TAU * xn).cos();
        c *= g;
        cp *= g / bf;
    }
    (s, sp)
}

/// Samples `xs × pairs` points of the cell with depth-30 random
/// continuations and counts samples where both differences are within the
/// thresholds, i.e. witnesses against a transversality claim.
pub fn counterexamples(cert: &Certificate, xs: usize, pairs: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (b, g) = (cert.b, cert.gamma);
    let mut bad = 0;
    for i in 0..xs {
        let t = i as f64 / (xs - 1).max(1) as f64;
        let x = cert.cell.lo + t * (cert.cell.hi - cert.cell.lo);
        for j in 0..pairs {
            let u: Vec<u8> = (0..30).map(|_| rng.gen_range(0..b) as u8).collect();
            let v: Vec<u8> = if j % 2 == 0 { u.clone() } else { (0..30).map(|_| rng.gen_range(0..b) as u8).collect() };
            let mut ku = cert.k.digits().to_vec();
            ku.extend_from_slice(&u);
            let mut lv = cert.l.digits().to_vec();
            lv.extend_from_slice(&v);
            let (s1, d1) = s_pair(b, g, x, &ku);
            let (s2, d2) = s_pair(b, g, x, &lv);
            if (s1 - s2).abs() <= cert.eps && (d1 - d2).abs() <= cert.delta {
                bad += 1;
            }
        }
    }
    bad
}

/// Deterministic stream of transversal certificates over random systems,
/// cells and pairs.
pub fn random_transversal(n: usize, seed: u64) -> Vec<Certificate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let budget = Budget { max_nodes: 5000, ..Budget::default() };
    while out.len() < n {
        let b = [2u32, 3, 4, 6][rng.gen_range(0..4)];
        let lo = 1.0 / b as f64 + 0.02;
        let g = rng.gen_range(lo..0.9);
        let q = rng.gen_range(1..=2usize);
        let p = rng.gen_range(1..=3u32);
        if (b as u64).pow(p) > 64 {
            continue;
        }
        let n_cells = (b as u64).pow(p);
        let cell = rng.gen_range(0..n_cells);
        let nw = b.pow(q as u32) as u64;
        let (k, l) = (rng.gen_range(0..nw), rng.gen_range(0..nw));
        if k == l {
            continue;
        }
        let eps = [1e-2, 1e-3][rng.gen_range(0..2)];
        let params = SystemParams::classical(b, g).unwrap();
        let task = CertTask {
            params,
            q,
            cell: certify::cell_interval(b, p, cell),
            k: Word::from_value(k, q, b),
            l: Word::from_value(l, q, b),
            eps,
            delta: eps,
            budget,
        };
        let c = certify::certify_pair(&task).unwrap();
        if c.is_transversal() {
            out.push(c);
        }
    }
    out
}

pub fn unit() -> Interval {
    Interval::new(0.0, 1.0)
}

use solenoid::measure::{self, AtomicMeasure, SampleMode};

fn sorted_atoms(mu: &AtomicMeasure) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = mu.locs.iter().copied().zip(mu.masses.iter().copied()).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

/// Largest location or mass gap between two atom lists (infinite if the
/// counts differ).
pub fn atom_gap(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(u, v)| (u.0 - v.0).abs().max((u.1 - v.1).abs())).fold(0.0, f64::max)
}

/// `m_x` against the average over first words `w` of `m_{x(w)}` pushed by
/// the affine fiber map of `w`.
pub fn reconstruction_gap(p: &SystemParams, x: f64, n: usize, q: usize) -> f64 {
    let direct = measure::sample_mx(p, x, n, SampleMode::Exact).unwrap();
    let bf = p.bf();
    let share = bf.powi(-(q as i32));
    let mut rebuilt = Vec::new();
    for w in Word::all(q, p.b) {
        let a = measure::fiber_affine(p, x, &w).unwrap();
        let xw = w.digits().iter().fold(x, |x, &d| (x + d as f64) / bf);
        let sub = measure::sample_mx(p, xw, n - q, SampleMode::Exact).unwrap();
        rebuilt.extend(sub.locs.iter().zip(&sub.masses).map(|(&l, &m)| (a.apply(l), m * share)));
    }
    let rebuilt = AtomicMeasure::new(rebuilt, n, 0.0).unwrap();
    atom_gap(&sorted_atoms(&direct), &sorted_atoms(&rebuilt))
}

pub fn periodicity_gap(p: &SystemParams, x: f64, n: usize) -> f64 {
    let a = measure::sample_mx(p, x, n, SampleMode::Exact).unwrap();
    let b = measure::sample_mx(p, x + 1.0, n, SampleMode::Exact).unwrap();
    atom_gap(&sorted_atoms(&a), &sorted_atoms(&b))
}

/// For odd ψ, `m_{−x}` is `m_x` reflected through zero.
pub fn reflection_gap(p: &SystemParams, x: f64, n: usize) -> f64 {
    let a = measure::sample_mx(p, x, n, SampleMode::Exact).unwrap();
    let b = measure::sample_mx(p, -x, n, SampleMode::Exact).unwrap();
    let mut refl: Vec<(f64, f64)> = b.locs.iter().zip(&b.masses).map(|(&l, &m)| (-l, m)).collect();
    refl.sort_by(|u, v| u.0.total_cmp(&v.0));
    atom_gap(&sorted_atoms(&a), &refl)
}

/// Relative gap of the scaling identity on a random `atoms`-atom probability
/// measure.
pub fn scaling_gap(p: &SystemParams, q: usize, r: f64, atoms: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<(f64, f64)> = (0..atoms).map(|_| (rng.gen_range(-3.0..3.0), rng.gen_range(0.1..1.0))).collect();
    let tot: f64 = raw.iter().map(|a| a.1).sum();
    let mu = AtomicMeasure::new(raw.into_iter().map(|(l, m)| (l, m / tot)).collect(), 0, 0.0).unwrap();
    let (lhs, rhs) = measure::tsujii_scaling_check(&mu, p, q, r).unwrap();
    (lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE)
}
