use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use solenoid::interval::Interval;
use solenoid::series::{self, Code, PeriodicFn, SystemParams, Word};

const TAU: f64 = std::f64::consts::TAU;

fn psi(x: f64) -> f64 {
    -TAU * (TAU * x).sin()
}

fn dpsi(x: f64) -> f64 {
    -TAU * TAU * (TAU * x).cos()
}

/// Plain f64 partial sums `(S, S′)` of a finite word, written independently
/// of the library.
fn direct(b: u32, g: f64, x: f64, digits: &[u8]) -> (f64, f64) {
    let bf = b as f64;
    let (mut xn, mut s, mut sp) = (x, 0.0, 0.0);
    let (mut c, mut cp) = (1.0, 1.0 / bf);
    for &d in digits {
        xn = (xn + d as f64) / bf;
        s += c * psi(xn);
        sp += cp * dpsi(xn);
        c *= g;
        cp *= g / bf;
    }
    (s, sp)
}

#[test]
fn inclusion_fuzz_million() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut checked = 0u32;
    for i in 0..1_000_000u32 {
        let a = rng.gen_range(-8.0..8.0);
        let w = rng.gen_range(0.0..2.0) * if rng.gen_bool(0.2) { 1e-9 } else { 1.0 };
        let x = Interval::new(a, a + w);
        let t = rng.gen_range(0.0..=1.0);
        let px = a + t * w;
        let px = px.clamp(x.lo, x.hi);
        let c = rng.gen_range(-3.0..3.0);
        let y = Interval::new(c, c + rng.gen_range(0.0..1.0));
        let py = y.lo + rng.gen_range(0.0..=1.0) * (y.hi - y.lo);
        let (got, want, slack) = match i % 8 {
            0 => (x + y, px + py, 0.0),
            1 => (x - y, px - py, 0.0),
            2 => (x * y, px * py, 0.0),
            3 => (x.sqr(), px * px, 0.0),
            4 => (x.scale(c), px * c, 0.0),
            5 => (x.sin2pi(), (TAU * (px - px.floor())).sin(), 2e-15),
            6 => (x.cos2pi(), (TAU * (px - px.floor())).cos(), 2e-15),
            _ => {
                let pos = Interval::new(x.lo.abs() + 0.5, x.lo.abs() + 0.5 + w);
                let pp = pos.lo + t * (pos.hi - pos.lo);
                (pos.recip().unwrap(), 1.0 / pp.clamp(pos.lo, pos.hi), 0.0)
            }
        };
        assert!(
            got.lo - slack <= want && want <= got.hi + slack,
            "op {} on {x:?}, {y:?}: {want} not in {got:?}",
            i % 8
        );
        checked += 1;
    }
    assert_eq!(checked, 1_000_000);
}

#[test]
fn sin2pi_examples() {
    let z = Interval::point(0.0).sin2pi();
    assert!(z.lo <= 0.0 && z.hi >= 0.0 && z.width() < 1e-300);
    let q = Interval::new(0.0, 0.25).sin2pi();
    assert!(q.lo <= 0.0 && q.hi >= 1.0 && q.hi <= 1.0 && q.lo > -1e-300);
    // endpoints from a 40-digit oracle
    let s = Interval::new(0.1, 0.2).sin2pi();
    let (lo, hi) = (0.587_785_252_292_473_1_f64, 0.951_056_516_295_153_5_f64);
    assert!(s.lo <= lo && hi <= s.hi);
    assert!(lo - s.lo < 1e-15 && s.hi - hi < 1e-15, "{s:?}");
}

#[test]
fn s_golden_at_one() {
    // 40-digit direct summation of Σ_{n≤20} 0.6^{n−1}(−2π sin(2π/2ⁿ))
    let golden = -6.116_016_959_721_187_f64;
    let p = SystemParams::classical(2, 0.6).unwrap();
    let code = Code::new(&p, Word::zeros(20)).unwrap();
    let s = series::eval_s(&p, Interval::point(1.0), &code).unwrap();
    assert!(s.contains(golden), "{s:?}");
    assert!(s.width() <= 2.0 * p.tail_radius_val(20) + 1e-12);
    let (d, _) = direct(2, 0.6, 1.0, &[0; 20]);
    assert!((d - golden).abs() < 1e-13);
}

#[test]
fn weierstrass_golden_at_third() {
    // 2ⁿ/3 mod 1 alternates between 1/3 and 2/3, so every cosine is −1/2
    let golden = -5.0 / 3.0;
    let w = series::eval_weierstrass(0.7, 2, &PeriodicFn::cosine(), Interval::point(1.0 / 3.0), 30).unwrap();
    assert!(w.contains(golden), "{w:?}");
    // 1/3 is inexact, and 2^n amplifies its ulp, so depth is kept moderate
    assert!(w.width() < 1e-3, "{w:?}");
}

#[test]
fn g_golden_at_quarter() {
    // 40-digit summation of Σ 2^{−(n−1)} ψ′(2^{−n}/4)
    let golden = -65.674_515_755_156_51_f64;
    let p = SystemParams::classical(2, 0.6).unwrap();
    let code = Code::new(&p, Word::zeros(40)).unwrap();
    let g = series::eval_g(&p, Interval::point(0.25), &code).unwrap();
    assert!(g.contains(golden), "{g:?}");
    assert!(g.width() < 1e-9);
}

#[test]
fn g_functional_equation() {
    let p = SystemParams::classical(3, 0.5).unwrap();
    for &x in &[0.05f64, 0.21, 0.3] {
        let tail = Word(vec![1, 0, 2, 2, 0, 1, 1, 0, 2, 1, 0, 0, 1, 2, 2, 0, 1, 0, 1, 2, 0, 0, 0, 1, 1, 2, 2, 0, 1, 0]);
        // the code of x seen from bx mod 1 starts with the digit ⌊bx⌋
        let bx = 3.0 * x;
        let d = bx.floor() as u8;
        let mut digits = vec![d];
        digits.extend_from_slice(tail.digits());
        let lhs = series::eval_g(&p, Interval::point(bx - d as f64), &Code::new(&p, Word(digits)).unwrap()).unwrap();
        let g = series::eval_g(&p, Interval::point(x), &Code::new(&p, tail).unwrap()).unwrap();
        let rhs = p.psi_at(Interval::point(x), 1) + g.div_scalar(3.0);
        assert!(lhs.overlaps(&rhs), "{lhs:?} {rhs:?}");
    }
}

fn params_strategy() -> impl Strategy<Value = SystemParams> {
    (2u32..=6, 0.05f64..0.95).prop_map(|(b, t)| {
        let lo = 1.0 / b as f64;
        SystemParams::classical(b, lo + (1.0 - lo) * t).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inclusion_monotone_in_x(p in params_strategy(), a in 0.0f64..0.9, w1 in 0.0f64..0.05, extra in 0.0f64..0.05, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let digits: Vec<u8> = (0..12).map(|_| rng.gen_range(0..p.b) as u8).collect();
        let code = Code::new(&p, Word(digits)).unwrap();
        let inner = Interval::new(a, a + w1);
        let outer = Interval::new(a - extra, a + w1 + extra);
        let si = series::eval_s(&p, inner, &code).unwrap();
        let so = series::eval_s(&p, outer, &code).unwrap();
        prop_assert!(so.contains_interval(&si), "{:?} vs {:?}", si, so);
    }

    #[test]
    fn global_bounds(p in params_strategy(), x in 0.0f64..1.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let digits: Vec<u8> = (0..25).map(|_| rng.gen_range(0..p.b) as u8).collect();
        let (s, sp) = direct(p.b, p.gamma, x, &digits);
        prop_assert!(s.abs() <= p.s_bound() * (1.0 + 1e-12));
        prop_assert!(sp.abs() <= p.s_prime_bound() * (1.0 + 1e-12));
        let code = Code::new(&p, Word(digits)).unwrap();
        let e = series::eval_s_prime(&p, Interval::point(x), &code).unwrap();
        prop_assert!(e.contains(sp));
        prop_assert!(e.lo >= -p.s_prime_bound() - p.tail_radius_der(25) - 1e-9);
    }

    #[test]
    fn odd_symmetry(p in params_strategy(), x in 0.0f64..1.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = Word((0..16).map(|_| rng.gen_range(0..p.b) as u8).collect());
        let c = Code::new(&p, w.clone()).unwrap();
        let cr = Code::new(&p, w.reflect(p.b)).unwrap();
        let a = series::eval_s(&p, Interval::point(x), &c).unwrap();
        let b = series::eval_s(&p, Interval::point(1.0 - x), &cr).unwrap();
        prop_assert!(a.overlaps(&-b));
        let (s1, _) = direct(p.b, p.gamma, x, w.digits());
        let (s2, _) = direct(p.b, p.gamma, 1.0 - x, w.reflect(p.b).digits());
        prop_assert!((s1 + s2).abs() < 1e-9);
    }

    #[test]
    fn adding_machine_shift(p in params_strategy(), x in 0.0f64..1.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = Word((0..14).map(|_| rng.gen_range(0..p.b) as u8).collect());
        let (aw, _) = series::adding_machine(&w, p.b);
        let lhs = series::eval_s(&p, Interval::point(x + 1.0), &Code::new(&p, w).unwrap()).unwrap();
        let rhs = series::eval_s(&p, Interval::point(x), &Code::new(&p, aw).unwrap()).unwrap();
        prop_assert!(lhs.overlaps(&rhs), "{:?} {:?}", lhs, rhs);
    }

    #[test]
    fn split_identity(p in params_strategy(), x in 0.0f64..1.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = rng.gen_range(0..4usize);
        let w = Word((0..q).map(|_| rng.gen_range(0..p.b) as u8).collect());
        let u = Word((0..12).map(|_| rng.gen_range(0..p.b) as u8).collect());
        let xi = Interval::point(x);
        let (pw, pwd) = series::split_self_similar(&p, xi, &w).unwrap();
        let xw = series::x_of_word(&p, xi, &w).unwrap();
        let cu = Code::new(&p, u.clone()).unwrap();
        let cwu = Code::new(&p, w.concat(&u)).unwrap();
        let gq = p.gamma.powi(q as i32);
        let rhs = pw + series::eval_s(&p, xw, &cu).unwrap().scale(gq);
        let lhs = series::eval_s(&p, xi, &cwu).unwrap();
        prop_assert!(lhs.overlaps(&rhs));
        let rq = (p.gamma / p.bf()).powi(q as i32);
        let rhs_d = pwd + series::eval_s_prime(&p, xw, &cu).unwrap().scale(rq);
        let lhs_d = series::eval_s_prime(&p, xi, &cwu).unwrap();
        prop_assert!(lhs_d.overlaps(&rhs_d));
        // the exact partial sums agree closely
        let (a, _) = direct(p.b, p.gamma, x, w.concat(&u).digits());
        let (pa, _) = direct(p.b, p.gamma, x, w.digits());
        let (ua, _) = direct(p.b, p.gamma, xw.mid(), u.digits());
        prop_assert!((a - pa - gq * ua).abs() < 1e-9);
    }

    #[test]
    fn modulus_of_continuity(p in params_strategy(), x1 in 0.0f64..1.0, dx in -0.01f64..0.01, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let digits: Vec<u8> = (0..30).map(|_| rng.gen_range(0..p.b) as u8).collect();
        let x2 = x1 + dx;
        let (s1, _) = direct(p.b, p.gamma, x1, &digits);
        let (s2, _) = direct(p.b, p.gamma, x2, &digits);
        let xi = p.dpsi_sup * dx.abs();
        prop_assert!((s1 - s2).abs() <= xi / (1.0 - p.gamma) + 1e-9);
    }

    #[test]
    fn deeper_codes_nest(p in params_strategy(), x in 0.0f64..1.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let digits: Vec<u8> = (0..20).map(|_| rng.gen_range(0..p.b) as u8).collect();
        let xi = Interval::point(x);
        let short = series::eval_s(&p, xi, &Code::new(&p, Word(digits[..10].to_vec())).unwrap()).unwrap();
        let long = series::eval_s(&p, xi, &Code::new(&p, Word(digits)).unwrap()).unwrap();
        let slack = 1e-12 * (1.0 + short.mag());
        prop_assert!(long.lo >= short.lo - slack && long.hi <= short.hi + slack);
    }
}
