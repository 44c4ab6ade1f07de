mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use solenoid::certify::{self, Budget, CertStatus, Origin, PairGraph};
use solenoid::interval::Interval;
use solenoid::series::{PeriodicFn, SystemParams, Word};

fn cl(b: u32, g: f64) -> SystemParams {
    SystemParams::classical(b, g).unwrap()
}

#[test]
fn soundness_fuzz_small() {
    let certs = common::random_transversal(20, 99);
    for (i, c) in certs.iter().enumerate() {
        assert_eq!(common::counterexamples(c, 60, 30, i as u64), 0, "certificate {i}: {:?}", c.cell);
    }
}

#[test]
fn pair_diff_golden_enclosure() {
    let p = cl(2, 0.6);
    let cell = Interval::new(0.25, 0.26);
    let ka = Word(vec![0, 0, 0, 1, 1, 0]);
    let lb = Word(vec![1, 0, 1, 0, 0, 1]);
    let (v, d) = certify::pair_diff_enclosure(&p, cell, &ka, &lb).unwrap();
    // every sampled continuation difference lies inside
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..=200 {
        let x = 0.25 + 0.01 * i as f64 / 200.0;
        for _ in 0..200 {
            let mut a = ka.digits().to_vec();
            let mut b = lb.digits().to_vec();
            a.extend((0..12).map(|_| rng.gen_range(0..2u8)));
            b.extend((0..12).map(|_| rng.gen_range(0..2u8)));
            let (s1, d1) = common::s_pair(2, 0.6, x, &a);
            let (s2, d2) = common::s_pair(2, 0.6, x, &b);
            assert!(v.contains(s1 - s2) && d.contains(d1 - d2), "x={x}");
        }
    }
    // frozen from the first verified run
    let (gv, gd) = ((-8.749018430039769, -5.43629781079598), (-38.08750648877504, -37.137683496135374));
    for (got, want) in [(v.lo, gv.0), (v.hi, gv.1), (d.lo, gd.0), (d.hi, gd.1)] {
        assert!((got - want).abs() < 1e-9, "{v:?} {d:?}");
    }
    assert!(v.width() > 0.0);
}

#[test]
fn widening_shrinks_with_depth() {
    let p = cl(2, 0.6);
    let mut prev = f64::INFINITY;
    for d in 0..12 {
        let w = Word(vec![0; 2 + d]);
        let (v, _) = certify::pair_diff_enclosure(&p, Interval::point(0.3), &w, &w).unwrap();
        assert!(v.hi < prev);
        prev = v.hi;
    }
}

#[test]
fn zero_psi_leaves_everything_unresolved() {
    let p = SystemParams::new(2, 0.7, PeriodicFn::zero()).unwrap();
    let g = certify::tangency_graph(&p, 1, 2, 1e-3, 1e-3, Budget { max_nodes: 500, ..Budget::default() }, &[]).unwrap();
    for c in 0..g.n_cells() {
        assert_eq!(g.cells[c as usize], vec![(0, 1)]);
    }
}

#[test]
fn b2_outer_quarters_are_diagonal_only() {
    let p = cl(2, 0.75);
    let g = certify::tangency_graph(&p, 1, 4, 1e-3, 1e-3, Budget::default(), &[]).unwrap();
    for c in (0..4).chain(12..16) {
        assert!(g.cells[c].is_empty(), "cell {c}: {:?}", g.cells[c]);
    }
}

fn reflected(g: &PairGraph, cell: u64) -> Vec<(u32, u32)> {
    let nw = g.n_words();
    let top = (g.n_cells() - 1 - cell) as usize;
    let mut v: Vec<(u32, u32)> = g.cells[top]
        .iter()
        .map(|&(k, l)| {
            let (a, b) = (nw - 1 - k, nw - 1 - l);
            (a.min(b), a.max(b))
        })
        .collect();
    v.sort_unstable();
    v
}

#[test]
fn graph_reflection_symmetry() {
    for (b, gm, q, p) in [(2u32, 0.7, 2usize, 2u32), (3, 0.8, 1, 2), (2, 0.9, 1, 3)] {
        let params = cl(b, gm);
        let g = certify::tangency_graph(&params, q, p, 1e-3, 1e-3, Budget::default(), &[]).unwrap();
        for c in 0..g.n_cells() {
            assert_eq!(g.cells[c as usize], reflected(&g, c), "b={b} cell {c}");
        }
        // mirrored records are checked against a direct search on a few cells
        for r in g.records.iter().filter(|r| r.origin == Origin::Reflected).take(6) {
            let task = certify::CertTask {
                params: params.clone(),
                q,
                cell: g.cell_interval(r.cell),
                k: Word::from_value(r.k as u64, q, b),
                l: Word::from_value(r.l as u64, q, b),
                eps: 1e-3,
                delta: 1e-3,
                budget: Budget::default(),
            };
            let direct = certify::certify_pair(&task).unwrap();
            if r.status == CertStatus::Transversal {
                assert!(direct.is_transversal() || direct.node_count >= Budget::default().max_nodes);
            }
        }
    }
}

#[test]
fn e_upper_non_increasing_in_grid_depth() {
    let params = cl(2, 0.8);
    let mut history: Vec<PairGraph> = Vec::new();
    let mut last = u32::MAX;
    for p in 1..=5 {
        let priors: Vec<&PairGraph> = history.iter().collect();
        let g = certify::tangency_graph(&params, 1, p, 1e-3, 1e-3, Budget::default(), &priors).unwrap();
        let e = certify::e_upper(&g).1;
        assert!(e <= last, "p={p}: {e} > {last}");
        last = e;
        history.push(g);
    }
}

#[test]
fn larger_thresholds_never_certify_more() {
    let params = cl(3, 0.7);
    let tight = certify::tangency_graph(&params, 1, 2, 1e-3, 1e-3, Budget::default(), &[]).unwrap();
    let loose = certify::tangency_graph(&params, 1, 2, 1e-1, 1e-1, Budget::default(), &[]).unwrap();
    for c in 0..tight.n_cells() as usize {
        for pair in &tight.cells[c] {
            assert!(loose.cells[c].contains(pair), "cell {c} {pair:?}");
        }
    }
}

#[test]
fn b6_high_gamma_e_bound() {
    let params = cl(6, 0.9);
    let g = certify::tangency_graph(&params, 1, 2, 1e-2, 1e-2, Budget::default(), &[]).unwrap();
    let e = certify::e_upper(&g).1;
    assert!(e <= 5 && (e as f64) < 5.4, "{e}");
}

#[test]
fn unresolved_pairs_satisfy_first_digit_inequality() {
    // where a q = 1 pair stays unresolved at small thresholds, the cosine
    // gap at the cell midpoint obeys |cos(2π(x+k)/b) − cos(2π(x+l)/b)| ≤ 2γ/(b−γ)
    for (b, gm, p) in [(3u32, 0.6, 3u32), (6, 0.5, 2), (4, 0.8, 2)] {
        let params = cl(b, gm);
        let g = certify::tangency_graph(&params, 1, p, 1e-4, 1e-4, Budget::default(), &[]).unwrap();
        let bf = b as f64;
        let w = 1.0 / bf.powi(p as i32);
        let slack = 2.0 * std::f64::consts::PI * w / bf + 1e-3;
        for c in 0..g.n_cells() {
            let x = (c as f64 + 0.5) * w;
            for &(k, l) in &g.cells[c as usize] {
                let t = std::f64::consts::TAU;
                let gap = ((t * (x + k as f64) / bf).cos() - (t * (x + l as f64) / bf).cos()).abs();
                assert!(gap <= 2.0 * gm / (bf - gm) + slack, "b={b} cell {c} ({k},{l}): {gap}");
            }
        }
    }
}
