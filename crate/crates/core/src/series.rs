//! The slope series `S(x, u)`, its derivatives, the Weierstrass sum and the
//! auxiliary series `G`, together with the digit-word combinatorics they use.
//!
//! Conventions: a word `u = (u₁ … u_q)` acts on `x` by
//! `x(u) = (x + u₁ + u₂b + … + u_q b^{q-1}) / b^q`, computed digit by digit as
//! `x ← (x + u_j)/b`. The `n`-th term of every series is evaluated at the
//! point `x_n` reached after `n` digits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{self, Interval};

/// A mean-zero, 1-periodic trigonometric polynomial.
///
/// `Classical` is `ψ(x) = −2π sin(2πx)`, the derivative of `cos(2πx)`.
/// `TrigPoly` is `Σ_k cos[k-1]·cos(2πkx) + sin[k-1]·sin(2πkx)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PeriodicFn {
    Classical,
    TrigPoly {
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
}

impl PeriodicFn {
    /// `cos(2πx)`, the profile of the classical Weierstrass function.
    pub fn cosine() -> Self {
        PeriodicFn::TrigPoly { cos: vec![1.0], sin: vec![] }
    }

    /// The identically zero function.
    pub fn zero() -> Self {
        PeriodicFn::TrigPoly { cos: vec![], sin: vec![] }
    }

    /// `(cos, sin)` coefficient lists, frequency `k` at index `k - 1`.
    pub fn coefficients(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            PeriodicFn::Classical => (vec![0.0], vec![-std::f64::consts::TAU]),
            PeriodicFn::TrigPoly { cos, sin } => (cos.clone(), sin.clone()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (c, s) = self.coefficients();
        if c.iter().chain(s.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite coefficient".into()));
        }
        Ok(())
    }

    /// Odd functions have no cosine terms.
    pub fn is_odd(&self) -> bool {
        self.coefficients().0.iter().all(|&a| a == 0.0)
    }

    pub fn is_zero(&self) -> bool {
        let (c, s) = self.coefficients();
        c.iter().chain(s.iter()).all(|&v| v == 0.0)
    }

    /// Mean-zero antiderivative, so that `self` is its derivative.
    pub fn antiderivative(&self) -> PeriodicFn {
        let (c, s) = self.coefficients();
        let n = c.len().max(s.len());
        let mut ac = vec![0.0; n];
        let mut as_ = vec![0.0; n];
        for k in 1..=n {
            let w = std::f64::consts::TAU * k as f64;
            let a = c.get(k - 1).copied().unwrap_or(0.0);
            let b = s.get(k - 1).copied().unwrap_or(0.0);
            // d/dx [a sin/w − b cos/w] = a cos + b sin
            as_[k - 1] = a / w;
            ac[k - 1] = -b / w;
        }
        PeriodicFn::TrigPoly { cos: ac, sin: as_ }
    }

    /// Multiplies every coefficient by `k`.
    pub fn scaled(&self, k: f64) -> PeriodicFn {
        let (c, s) = self.coefficients();
        PeriodicFn::TrigPoly {
            cos: c.into_iter().map(|v| v * k).collect(),
            sin: s.into_iter().map(|v| v * k).collect(),
        }
    }

    /// Precomputes interval coefficients for the function and two derivatives.
    pub fn compile(&self) -> CompiledFn {
        let (c, s) = self.coefficients();
        let n = c.len().max(s.len());
        let tau = interval::tau();
        let mut terms = Vec::new();
        let mut sup = [0.0f64; 3];
        for k in 1..=n {
            let a = c.get(k - 1).copied().unwrap_or(0.0);
            let b = s.get(k - 1).copied().unwrap_or(0.0);
            if a == 0.0 && b == 0.0 {
                continue;
            }
            let (ai, bi) = (Interval::point(a), Interval::point(b));
            let w = tau.scale(k as f64);
            let w2 = w.sqr();
            // ψ^{(j)} = Σ C_j cos(2πkx) + D_j sin(2πkx)
            let cos_c = [ai, w * bi, -(w2 * ai)];
            let sin_c = [bi, -(w * ai), -(w2 * bi)];
            let amp = (Interval::point(a).sqr() + Interval::point(b).sqr()).sqrt().hi;
            let mut wj = Interval::ONE;
            for (j, slot) in sup.iter_mut().enumerate() {
                if j > 0 {
                    wj = wj * w;
                }
                *slot = (*slot + (wj.scale(amp)).hi).next_up();
            }
            terms.push(Term { k: k as f64, a, b, cos_c, sin_c });
        }
        CompiledFn { terms, sup }
    }
}

#[derive(Clone, Debug)]
struct Term {
    k: f64,
    a: f64,
    b: f64,
    cos_c: [Interval; 3],
    sin_c: [Interval; 3],
}

/// Interval-ready form of a [`PeriodicFn`].
#[derive(Clone, Debug)]
pub struct CompiledFn {
    terms: Vec<Term>,
    /// Certified upper bounds on `‖ψ‖∞, ‖ψ′‖∞, ‖ψ″‖∞`.
    sup: [f64; 3],
}

impl CompiledFn {
    /// Encloses the `order`-th derivative (0, 1 or 2) over `x`.
    pub fn eval(&self, x: Interval, order: usize) -> Interval {
        let mut acc = Interval::ZERO;
        for t in &self.terms {
            let kx = if t.k == 1.0 { x } else { x.scale(t.k) };
            let (cc, sc) = (t.cos_c[order], t.sin_c[order]);
            if cc != Interval::ZERO {
                acc = acc + cc * kx.cos2pi();
            }
            if sc != Interval::ZERO {
                acc = acc + sc * kx.sin2pi();
            }
        }
        acc
    }

    /// Round-to-nearest value of the function itself.
    pub fn value_f64(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let kx = t.k * x;
                let mut v = 0.0;
                if t.a != 0.0 {
                    v += t.a * interval::cos2pi_approx(kx);
                }
                if t.b != 0.0 {
                    v += t.b * interval::sin2pi_approx(kx);
                }
                v
            })
            .sum()
    }

    pub fn sup(&self, order: usize) -> f64 {
        self.sup[order]
    }
}

/// Parameters of one skew product `T(x, y) = (bx mod 1, γy + ψ(x))`.
#[derive(Clone, Debug)]
pub struct SystemParams {
    pub b: u32,
    /// Taken as an exact real; `λ = 1/(γb)`.
    pub gamma: f64,
    pub psi: PeriodicFn,
    /// Certified `‖ψ‖∞`.
    pub psi_sup: f64,
    /// Certified `‖ψ′‖∞`.
    pub dpsi_sup: f64,
    /// Certified `‖ψ″‖∞`.
    pub d2psi_sup: f64,
    compiled: CompiledFn,
}

impl SystemParams {
    pub fn new(b: u32, gamma: f64, psi: PeriodicFn) -> Result<Self> {
        if b < 2 {
            return Err(Error::InvalidParams(format!("base b = {b} must be >= 2")));
        }
        if !(gamma.is_finite() && gamma * b as f64 > 1.0 && gamma < 1.0) {
            return Err(Error::InvalidParams(format!("gamma = {gamma} not in (1/{b}, 1)")));
        }
        psi.validate()?;
        let compiled = psi.compile();
        Ok(SystemParams {
            b,
            gamma,
            psi,
            psi_sup: compiled.sup(0),
            dpsi_sup: compiled.sup(1),
            d2psi_sup: compiled.sup(2),
            compiled,
        })
    }

    pub fn classical(b: u32, gamma: f64) -> Result<Self> {
        Self::new(b, gamma, PeriodicFn::Classical)
    }

    /// Builds from `λ` via `γ = 1/(λb)`.
    pub fn from_lambda(b: u32, lambda: f64, psi: PeriodicFn) -> Result<Self> {
        if !(lambda.is_finite() && lambda * b as f64 > 1.0 && lambda < 1.0) {
            return Err(Error::InvalidParams(format!("lambda = {lambda} not in (1/{b}, 1)")));
        }
        Self::new(b, 1.0 / (lambda * b as f64), psi)
    }

    pub fn lambda(&self) -> f64 {
        1.0 / (self.gamma * self.b as f64)
    }

    pub fn bf(&self) -> f64 {
        self.b as f64
    }

    pub fn psi_fn(&self) -> &CompiledFn {
        &self.compiled
    }

    /// `ψ^{(order)}` enclosed over `x`.
    #[inline]
    pub fn psi_at(&self, x: Interval, order: usize) -> Interval {
        self.compiled.eval(x, order)
    }

    /// `‖ψ‖∞ γ^N / (1 − γ)`, rounded up.
    pub fn tail_radius_val(&self, depth: usize) -> f64 {
        let g = Interval::point(self.gamma);
        let num = g.powi(depth as u32).scale(self.psi_sup);
        num.div(&(Interval::ONE - g)).map(|v| v.hi).unwrap_or(f64::INFINITY)
    }

    /// `‖ψ′‖∞ γ^N / (b^N (b − γ))`, rounded up.
    pub fn tail_radius_der(&self, depth: usize) -> f64 {
        let g = Interval::point(self.gamma);
        let b = Interval::point(self.bf());
        let num = (g.div(&b).expect("b > 0")).powi(depth as u32).scale(self.dpsi_sup);
        num.div(&(b - g)).map(|v| v.hi).unwrap_or(f64::INFINITY)
    }

    /// `‖ψ″‖∞ γ^N / (b^{2N} (b² − γ))`, rounded up.
    pub fn tail_radius_der2(&self, depth: usize) -> f64 {
        let g = Interval::point(self.gamma);
        let b = Interval::point(self.bf());
        let b2 = b.sqr();
        let num = (g.div(&b2).expect("b > 0")).powi(depth as u32).scale(self.d2psi_sup);
        num.div(&(b2 - g)).map(|v| v.hi).unwrap_or(f64::INFINITY)
    }

    /// `|S| <= ‖ψ‖∞/(1−γ)`.
    pub fn s_bound(&self) -> f64 {
        self.tail_radius_val(0)
    }

    /// `|S′| <= ‖ψ′‖∞/(b−γ)`.
    pub fn s_prime_bound(&self) -> f64 {
        self.tail_radius_der(0)
    }

    pub fn check_word(&self, w: &Word) -> Result<()> {
        w.check(self.b)
    }
}

/// Finite digit string over `{0, …, b−1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(pub Vec<u8>);

impl Word {
    pub fn new(digits: Vec<u8>, b: u32) -> Result<Word> {
        let w = Word(digits);
        w.check(b)?;
        Ok(w)
    }

    pub fn empty() -> Word {
        Word(Vec::new())
    }

    pub fn zeros(n: usize) -> Word {
        Word(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn digits(&self) -> &[u8] {
        &self.0
    }

    pub fn check(&self, b: u32) -> Result<()> {
        match self.0.iter().find(|&&d| d as u32 >= b) {
            Some(&digit) => Err(Error::InvalidWord { digit, base: b }),
            None => Ok(()),
        }
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut d = self.0.clone();
        d.extend_from_slice(&other.0);
        Word(d)
    }

    /// `u₁ + u₂b + … + u_q b^{q−1}`.
    pub fn value(&self, b: u32) -> u64 {
        self.0.iter().rev().fold(0u64, |acc, &d| acc * b as u64 + d as u64)
    }

    /// The word of length `q` with `value(b) = v`.
    pub fn from_value(mut v: u64, q: usize, b: u32) -> Word {
        let mut d = Vec::with_capacity(q);
        for _ in 0..q {
            d.push((v % b as u64) as u8);
            v /= b as u64;
        }
        Word(d)
    }

    /// All `b^q` words of length `q`, ordered by `value`.
    pub fn all(q: usize, b: u32) -> Vec<Word> {
        let n = (b as u64).pow(q as u32);
        (0..n).map(|v| Word::from_value(v, q, b)).collect()
    }

    /// Digit reflection `u_n ↦ b − 1 − u_n`.
    pub fn reflect(&self, b: u32) -> Word {
        Word(self.0.iter().map(|&d| (b - 1) as u8 - d).collect())
    }

    /// Compact label, e.g. `011`.
    pub fn label(&self) -> String {
        self.0
            .iter()
            .map(|&d| std::char::from_digit(d as u32, 36).unwrap_or('?'))
            .collect()
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({})", self.label())
    }
}

/// A cylinder of infinite codes: a finite prefix plus certified tail radii.
#[derive(Clone, Debug, PartialEq)]
pub struct Code {
    pub prefix: Word,
    pub tail_radius_val: f64,
    pub tail_radius_der: f64,
}

impl Code {
    pub fn new(params: &SystemParams, prefix: Word) -> Result<Code> {
        params.check_word(&prefix)?;
        let n = prefix.len();
        Ok(Code {
            tail_radius_val: params.tail_radius_val(n),
            tail_radius_der: params.tail_radius_der(n),
            prefix,
        })
    }

    pub fn depth(&self) -> usize {
        self.prefix.len()
    }
}

/// Which partial sums [`SeriesState::step`] maintains.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Need {
    pub value: bool,
    pub der: bool,
    pub der2: bool,
}

impl Need {
    pub const ALL: Need = Need { value: true, der: true, der2: true };
    pub const VALUE: Need = Need { value: true, der: false, der2: false };
    pub const DER: Need = Need { value: false, der: true, der2: false };
}

/// Running partial sums of `S`, `S′`, `S″` along a digit string.
#[derive(Clone, Copy, Debug)]
pub struct SeriesState {
    /// Current point `x_n`.
    pub x: Interval,
    pub depth: usize,
    pub value: Interval,
    pub der: Interval,
    pub der2: Interval,
    /// `γ^n`, `γ^n / b^{n+1}`, `γ^n / b^{2(n+1)}`: coefficients of the next term.
    coef_v: Interval,
    coef_d: Interval,
    coef_dd: Interval,
}

impl SeriesState {
    pub fn start(params: &SystemParams, x: Interval) -> Self {
        let b = params.bf();
        SeriesState {
            x,
            depth: 0,
            value: Interval::ZERO,
            der: Interval::ZERO,
            der2: Interval::ZERO,
            coef_v: Interval::ONE,
            coef_d: Interval::ratio(1.0, b),
            coef_dd: Interval::ratio(1.0, b * b),
        }
    }

    /// Appends one digit and adds the corresponding term.
    #[inline]
    pub fn step(&mut self, params: &SystemParams, digit: u8, need: Need) {
        let b = params.bf();
        self.x = self.x.add_scalar(digit as f64).div_scalar(b);
        self.add_term(params, need);
        let g = Interval::point(params.gamma);
        self.coef_v = self.coef_v * g;
        self.coef_d = (self.coef_d * g).div_scalar(b);
        self.coef_dd = (self.coef_dd * g).div_scalar(b * b);
        self.depth += 1;
    }

    #[inline]
    fn add_term(&mut self, params: &SystemParams, need: Need) {
        if need.value {
            self.value = self.value + self.coef_v * params.psi_at(self.x, 0);
        }
        if need.der {
            self.der = self.der + self.coef_d * params.psi_at(self.x, 1);
        }
        if need.der2 {
            self.der2 = self.der2 + self.coef_dd * params.psi_at(self.x, 2);
        }
    }

    pub fn run(params: &SystemParams, x: Interval, w: &Word, need: Need) -> Self {
        let mut st = SeriesState::start(params, x);
        for &d in w.digits() {
            st.step(params, d, need);
        }
        st
    }
}

/// `x(w) = (x + w₁ + w₂b + … + w_q b^{q−1}) / b^q`.
pub fn x_of_word(params: &SystemParams, x: Interval, w: &Word) -> Result<Interval> {
    params.check_word(w)?;
    Ok(x_of_word_unchecked(params.b, x, w))
}

pub(crate) fn x_of_word_unchecked(b: u32, x: Interval, w: &Word) -> Interval {
    let bf = b as f64;
    w.digits().iter().fold(x, |acc, &d| acc.add_scalar(d as f64).div_scalar(bf))
}

/// Encloses `S(x, i)` over `x` and every continuation `i` of the prefix.
pub fn eval_s(params: &SystemParams, x: Interval, code: &Code) -> Result<Interval> {
    params.check_word(&code.prefix)?;
    let st = SeriesState::run(params, x, &code.prefix, Need::VALUE);
    Ok(st.value.widen(code.tail_radius_val))
}

/// Encloses `S′(x, i) = ∂S/∂x` over `x` and every continuation of the prefix.
pub fn eval_s_prime(params: &SystemParams, x: Interval, code: &Code) -> Result<Interval> {
    params.check_word(&code.prefix)?;
    let st = SeriesState::run(params, x, &code.prefix, Need::DER);
    Ok(st.der.widen(code.tail_radius_der))
}

/// Encloses `S″(x, i)`.
pub fn eval_s_second(params: &SystemParams, x: Interval, code: &Code) -> Result<Interval> {
    params.check_word(&code.prefix)?;
    let st = SeriesState::run(
        params,
        x,
        &code.prefix,
        Need { value: false, der: false, der2: true },
    );
    Ok(st.der2.widen(params.tail_radius_der2(code.depth())))
}

/// Prefix sums `(P_w(x), P′_w(x))` with
/// `S(x, w·u) = P_w(x) + γ^{|w|} S(x(w), u)` and
/// `S′(x, w·u) = P′_w(x) + (γ/b)^{|w|} S′(x(w), u)`.
pub fn split_self_similar(
    params: &SystemParams,
    x: Interval,
    w: &Word,
) -> Result<(Interval, Interval)> {
    params.check_word(w)?;
    let st = SeriesState::run(params, x, w, Need { value: true, der: true, der2: false });
    Ok((st.value, st.der))
}

/// The odometer: adds one to `u₁ + u₂b + …` with carry to the right.
/// Returns the new word and whether a carry fell off the end.
pub fn adding_machine(w: &Word, b: u32) -> (Word, bool) {
    let mut out = w.0.clone();
    let mut carry = 1u32;
    for d in out.iter_mut() {
        if carry == 0 {
            break;
        }
        let s = *d as u32 + carry;
        if s < b {
            *d = s as u8;
            carry = 0;
        } else {
            *d = 0;
        }
    }
    (Word(out), carry == 1)
}

/// Encloses `f(x) = Σ_{n≥0} λⁿ φ(bⁿx)` using `depth` terms plus the tail bound
/// `λ^N ‖φ‖∞ / (1 − λ)`.
pub fn eval_weierstrass(
    lambda: f64,
    b: u32,
    phi: &PeriodicFn,
    x: Interval,
    depth: usize,
) -> Result<Interval> {
    if b < 2 || !(lambda * b as f64 > 1.0 && lambda < 1.0) {
        return Err(Error::InvalidParams(format!("lambda = {lambda} not in (1/{b}, 1)")));
    }
    let f = phi.compile();
    let lam = Interval::point(lambda);
    let mut acc = Interval::ZERO;
    let mut coef = Interval::ONE;
    let mut xn = x;
    for _ in 0..depth {
        acc = acc + coef * f.eval(reduce_mod1(xn), 0);
        coef = coef * lam;
        xn = xn.scale(b as f64);
    }
    let tail = (coef.scale(f.sup(0))).div(&(Interval::ONE - lam))?.hi;
    Ok(acc.widen(tail))
}

/// Tail bound of [`eval_weierstrass`] at depth `N`.
pub fn weierstrass_tail(lambda: f64, phi: &PeriodicFn, depth: usize) -> f64 {
    let lam = Interval::point(lambda);
    let sup = phi.compile().sup(0);
    lam.powi(depth as u32)
        .scale(sup)
        .div(&(Interval::ONE - lam))
        .map(|v| v.hi)
        .unwrap_or(f64::INFINITY)
}

/// Shifts an interval by an integer so that `lo ∈ [0, 1)`; exact.
fn reduce_mod1(x: Interval) -> Interval {
    let k = x.lo.floor();
    if k == 0.0 {
        return x;
    }
    Interval { lo: x.lo - k, hi: (x.hi - k).next_up() }
}

/// Encloses `G(x, u) = Σ_{n≥1} b^{−(n−1)} ψ′(x_n)` over every continuation.
pub fn eval_g(params: &SystemParams, x: Interval, code: &Code) -> Result<Interval> {
    params.check_word(&code.prefix)?;
    let b = params.bf();
    let mut acc = Interval::ZERO;
    let mut coef = Interval::ONE;
    let mut xn = x;
    for &d in code.prefix.digits() {
        xn = xn.add_scalar(d as f64).div_scalar(b);
        acc = acc + coef * params.psi_at(xn, 1);
        coef = coef.div_scalar(b);
    }
    let bi = Interval::point(b);
    let tail = (coef.scale(b).scale(params.dpsi_sup)).div(&(bi - Interval::ONE))?.hi;
    Ok(acc.widen(tail))
}

/// Tail radius of [`eval_g`] at depth `N`: `‖ψ′‖∞ b^{1−N} / (b − 1)`.
pub fn g_tail_radius(params: &SystemParams, depth: usize) -> f64 {
    let b = Interval::point(params.bf());
    Interval::ONE
        .div(&b.powi(depth as u32))
        .and_then(|c| c.scale(params.bf() * params.dpsi_sup).div(&(b - Interval::ONE)))
        .map(|v| v.hi)
        .unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cl(b: u32, g: f64) -> SystemParams {
        SystemParams::classical(b, g).unwrap()
    }

    #[test]
    fn x_of_word_examples() {
        let p = cl(2, 0.7);
        let v = x_of_word(&p, Interval::point(0.0), &Word(vec![1])).unwrap();
        assert!(v.contains(0.5) && v.width() < 1e-15);
        let p3 = cl(3, 0.7);
        let v = x_of_word(&p3, Interval::point(0.0), &Word::empty()).unwrap();
        assert_eq!(v, Interval::point(0.0));
        let v = x_of_word(&p3, Interval::point(0.5), &Word(vec![2, 1])).unwrap();
        assert!(v.contains(11.0 / 18.0) && v.width() < 1e-15, "{v:?}");
    }

    #[test]
    fn x_of_word_rejects_bad_digit() {
        let p = cl(2, 0.7);
        let err = x_of_word(&p, Interval::point(0.0), &Word(vec![0, 2])).unwrap_err();
        assert!(matches!(err, Error::InvalidWord { digit: 2, base: 2 }));
    }

    #[test]
    fn x_of_word_width_shrinks_by_b_pow_q() {
        let p = cl(3, 0.7);
        let x = Interval::new(0.25, 0.5);
        let v = x_of_word(&p, x, &Word(vec![1, 2, 0])).unwrap();
        let expected = 0.25 / 27.0;
        assert!((v.width() - expected).abs() < 1e-15);
    }

    #[test]
    fn sup_norms_of_classical_psi() {
        let p = cl(2, 0.7);
        let tau = std::f64::consts::TAU;
        assert!(p.psi_sup >= tau && p.psi_sup < tau * (1.0 + 1e-14));
        assert!(p.dpsi_sup >= tau * tau && p.dpsi_sup < tau * tau * (1.0 + 1e-14));
        assert!(p.d2psi_sup >= tau.powi(3) && p.d2psi_sup < tau.powi(3) * (1.0 + 1e-14));
    }

    #[test]
    fn sup_norm_bounds_dense_samples() {
        let psi = PeriodicFn::TrigPoly { cos: vec![0.3, -0.2], sin: vec![1.0, 0.0, 0.5] };
        let p = SystemParams::new(3, 0.5, psi).unwrap();
        let f = p.psi_fn();
        for i in 0..10_000 {
            let x = Interval::point(i as f64 / 10_000.0);
            assert!(f.eval(x, 0).mag() <= p.psi_sup);
            assert!(f.eval(x, 1).mag() <= p.dpsi_sup);
            assert!(f.eval(x, 2).mag() <= p.d2psi_sup);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let psi = PeriodicFn::TrigPoly { cos: vec![0.3, -0.2], sin: vec![1.0, 0.0, 0.5] };
        let f = psi.compile();
        for i in 0..50 {
            let x = i as f64 / 50.0 + 0.003;
            let h = 1e-6;
            let fd = (f.value_f64(x + h) - f.value_f64(x - h)) / (2.0 * h);
            let d = f.eval(Interval::point(x), 1).mid();
            assert!((fd - d).abs() < 1e-6 * (1.0 + d.abs()), "x={x} fd={fd} d={d}");
        }
    }

    #[test]
    fn antiderivative_of_classical_is_cosine() {
        let phi = PeriodicFn::Classical.antiderivative();
        let (c, s) = phi.coefficients();
        assert!((c[0] - 1.0).abs() < 1e-15);
        assert_eq!(s[0], 0.0);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(SystemParams::classical(1, 0.7).is_err());
        assert!(SystemParams::classical(2, 0.5).is_err());
        assert!(SystemParams::classical(2, 1.0).is_err());
        assert!(SystemParams::classical(3, 0.3).is_err());
        assert!(SystemParams::classical(3, 0.34).is_ok());
    }

    #[test]
    fn adding_machine_examples() {
        assert_eq!(adding_machine(&Word(vec![1, 1, 0]), 2), (Word(vec![0, 0, 1]), false));
        assert_eq!(adding_machine(&Word(vec![2, 2]), 3), (Word(vec![0, 0]), true));
        assert_eq!(adding_machine(&Word(vec![0, 2]), 3), (Word(vec![1, 2]), false));
    }

    #[test]
    fn adding_machine_is_bijection() {
        for (b, q) in [(2u32, 4usize), (3, 3), (5, 2)] {
            let mut seen: Vec<Word> = Word::all(q, b).iter().map(|w| adding_machine(w, b).0).collect();
            seen.sort();
            seen.dedup();
            assert_eq!(seen.len(), (b as usize).pow(q as u32));
        }
    }

    #[test]
    fn zero_prefix_at_origin_is_zero() {
        for (b, g) in [(2, 0.6), (3, 0.5), (6, 0.9)] {
            let p = cl(b, g);
            let code = Code::new(&p, Word::zeros(20)).unwrap();
            let s = eval_s(&p, Interval::point(0.0), &code).unwrap();
            assert!(s.contains(0.0));
            assert!(s.width() <= 2.0 * code.tail_radius_val * (1.0 + 1e-12) + 1e-300);
        }
    }

    #[test]
    fn s_prime_at_origin_closed_form() {
        // ψ′(0) = −4π², all zero digits keep x_n = 0: Σ γ^{n−1} b^{−n} ψ′(0).
        for (b, g) in [(2u32, 0.6), (3, 0.5), (6, 0.9)] {
            let p = cl(b, g);
            let code = Code::new(&p, Word::zeros(40)).unwrap();
            let d = eval_s_prime(&p, Interval::point(0.0), &code).unwrap();
            let tau = std::f64::consts::TAU;
            let closed = -tau * tau / (b as f64 - g);
            assert!(d.contains(closed), "b={b} {d:?} vs {closed}");
        }
    }

    #[test]
    fn s_prime_depth_nesting() {
        let p = cl(2, 0.7);
        let x = Interval::new(0.2, 0.21);
        let mut prev = f64::INFINITY;
        for n in 0..25 {
            let code = Code::new(&p, Word(vec![1; n])).unwrap();
            let w = eval_s_prime(&p, x, &code).unwrap().width();
            assert!(w <= prev * (1.0 + 1e-12), "n={n}");
            prev = w;
        }
    }

    #[test]
    fn split_empty_word_is_zero() {
        let p = cl(2, 0.7);
        let (v, d) = split_self_similar(&p, Interval::point(0.3), &Word::empty()).unwrap();
        assert_eq!(v, Interval::ZERO);
        assert_eq!(d, Interval::ZERO);
    }

    #[test]
    fn weierstrass_at_origin_is_geometric() {
        let w = eval_weierstrass(0.5 + 1e-12, 3, &PeriodicFn::cosine(), Interval::point(0.0), 80)
            .unwrap();
        assert!((w.mid() - 2.0).abs() < 1e-9, "{w:?}");
        assert!(eval_weierstrass(0.4, 2, &PeriodicFn::cosine(), Interval::point(0.0), 10).is_err());
    }

    #[test]
    fn weierstrass_is_even() {
        for x in [0.1, 0.37, 0.8] {
            let a = eval_weierstrass(0.7, 2, &PeriodicFn::cosine(), Interval::point(x), 60).unwrap();
            let b =
                eval_weierstrass(0.7, 2, &PeriodicFn::cosine(), Interval::point(-x), 60).unwrap();
            assert!(a.overlaps(&b));
        }
    }

    #[test]
    fn g_vanishes_for_zero_psi() {
        let p = SystemParams::new(2, 0.7, PeriodicFn::zero()).unwrap();
        let code = Code::new(&p, Word::zeros(10)).unwrap();
        let g = eval_g(&p, Interval::point(0.3), &code).unwrap();
        assert!(g.mag() < 1e-300);
    }
}
