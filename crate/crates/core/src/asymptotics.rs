//! Schroeder and Boettcher functionals, local-limit scales and the Laplace
//! transform of the martingale limit `W`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gen_dist::{default_cap, zn_pmf_compose};
use crate::offspring::{Classification, OffspringLaw, Regime};
use crate::series::TruncSeries;

/// A value of `Q_n(s)` or `Q(s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QEvaluation {
    pub s: f64,
    pub value: f64,
    pub n_used: u32,
    /// `|Q_n(s) - Q_{n-1}(s)|` at the last step (0 when `n_used = 0`).
    pub residual: f64,
}

fn require_schroeder(cls: &Classification) -> Result<()> {
    if cls.is_boettcher() {
        return Err(Error::BoettcherLaw);
    }
    Ok(())
}

fn check_s(s: f64) -> Result<()> {
    if !(0.0..1.0).contains(&s) {
        return Err(Error::SAtOrBeyondOne(s));
    }
    Ok(())
}

/// Iterates `d -> f(q + d) - q` with `f` re-expanded around `q`, so that
/// `f_n(s) - q` keeps full relative precision once it is small.
struct QIterator {
    shifted: Vec<f64>,
    gamma: f64,
    d: f64,
    gamma_pow: f64,
    n: u32,
}

impl QIterator {
    fn new(law: &OffspringLaw, cls: &Classification, s: f64) -> Self {
        let mut shifted = law.shifted_coeffs(cls.q);
        shifted[0] = 0.0;
        Self { shifted, gamma: cls.gamma, d: s - cls.q, gamma_pow: 1.0, n: 0 }
    }

    fn value(&self) -> f64 {
        self.d / self.gamma_pow
    }

    fn step(&mut self) {
        self.d = self.shifted.iter().rev().fold(0.0, |acc, &c| acc * self.d + c);
        self.gamma_pow *= self.gamma;
        self.n += 1;
    }
}

/// `Q_n(s) = (f_n(s) - q) / gamma^n`.
pub fn q_n(law: &OffspringLaw, n: u32, s: f64) -> Result<QEvaluation> {
    let cls = crate::classify(law);
    require_schroeder(&cls)?;
    check_s(s)?;
    let mut it = QIterator::new(law, &cls, s);
    let mut prev = it.value();
    for _ in 0..n {
        prev = it.value();
        it.step();
    }
    let value = it.value();
    let residual = if n == 0 { 0.0 } else { (value - prev).abs() };
    Ok(QEvaluation { s, value, n_used: n, residual })
}

pub const Q_TOLERANCE: f64 = 1e-12;
pub const Q_MAX_ITERATIONS: u32 = 400;

/// `Q(s) = lim Q_n(s)`, stopping once successive values differ by less than `tol`.
pub fn q_limit(law: &OffspringLaw, s: f64, tol: f64, n_max: u32) -> Result<QEvaluation> {
    let cls = crate::classify(law);
    require_schroeder(&cls)?;
    check_s(s)?;
    q_limit_with(law, &cls, s, tol, n_max)
}

fn q_limit_with(
    law: &OffspringLaw,
    cls: &Classification,
    s: f64,
    tol: f64,
    n_max: u32,
) -> Result<QEvaluation> {
    let mut it = QIterator::new(law, cls, s);
    let mut prev = it.value();
    if prev == 0.0 {
        return Ok(QEvaluation { s, value: 0.0, n_used: 0, residual: 0.0 });
    }
    let mut residual = f64::INFINITY;
    while it.n < n_max {
        it.step();
        let value = it.value();
        residual = (value - prev).abs();
        if residual < tol {
            return Ok(QEvaluation { s, value, n_used: it.n, residual });
        }
        prev = value;
    }
    Err(Error::NoConvergence { iterations: n_max as usize, residual })
}

/// Power-series coefficients of `Q`, approximated at generation `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QCoefficients {
    pub n: u32,
    /// `q_1..q_J`.
    pub coeffs: Vec<f64>,
    /// Largest change in any coefficient from generation `n - 1` to `n`.
    pub change: f64,
}

impl QCoefficients {
    /// `sum_j q_j s^j`.
    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c) * s
    }
}

/// `q_j ~ P(Z_n = j) / gamma^n` for `j = 1..=big_j`.
pub fn q_coefficients(law: &OffspringLaw, big_j: usize, n: u32) -> Result<QCoefficients> {
    let cls = crate::classify(law);
    require_schroeder(&cls)?;
    let big_j = big_j.max(1);
    let mut series = TruncSeries::identity(big_j);
    let mut prev = vec![0.0; big_j];
    let mut gamma_pow = 1.0;
    let mut current: Vec<f64> = vec![0.0; big_j];
    current[0] = 1.0;
    for _ in 0..n {
        prev.clone_from(&current);
        series = crate::gen_dist::compose_poly(law, &series, big_j)?;
        gamma_pow *= cls.gamma;
        current = series.coeffs()[1..=big_j].iter().map(|p| p / gamma_pow).collect();
    }
    let change = if n == 0 {
        0.0
    } else {
        current.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    Ok(QCoefficients { n, coeffs: current, change })
}

/// `k_n = floor(n - log v / log m + 1)`.
pub fn critical_k(m: f64, n: u32, v: f64) -> i64 {
    (n as f64 - v.ln() / m.ln() + 1.0).floor() as i64
}

fn check_v(cls: &Classification, n: u32, v: f64) -> Result<()> {
    if !(v >= 1.0) {
        return Err(Error::VTooSmall(v));
    }
    let bound = cls.m.powi(n as i32);
    // v_n is an integer, so rounding m^n up is allowed
    if v > (bound * (1.0 + 1e-9)).ceil() {
        return Err(Error::VTooLarge { v, bound });
    }
    Ok(())
}

/// The local-limit scale `A_n` for the point probability `P(Z_n = v)`.
///
/// `gamma^n v^(alpha-1)` for `alpha < 1`, `k_n gamma^n` for `alpha = 1` and
/// `m^-n` otherwise, including the Boettcher case.
pub fn a_scale(cls: &Classification, n: u32, v: f64) -> Result<f64> {
    check_v(cls, n, v)?;
    let gn = cls.gamma.powi(n as i32);
    Ok(match cls.regime {
        Regime::SchroederSub => gn * v.powf(cls.alpha - 1.0),
        Regime::SchroederCritical => critical_k(cls.m, n, v) as f64 * gn,
        Regime::SchroederSuper | Regime::Boettcher => cls.m.powi(-(n as i32)),
    })
}

/// One row of a local-limit table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalLimitPoint {
    pub n: u32,
    pub v: usize,
    pub a_n: f64,
    /// `k_n`, critical regime only.
    pub k_n: Option<i64>,
    pub prob: f64,
    pub ratio: f64,
}

/// `P(Z_n = v) / A_n`.
pub fn local_limit_ratio(law: &OffspringLaw, n: u32, v: usize) -> Result<LocalLimitPoint> {
    let cls = crate::classify(law);
    local_limit_with(law, &cls, n, v, a_scale)
}

pub(crate) fn local_limit_with(
    law: &OffspringLaw,
    cls: &Classification,
    n: u32,
    v: usize,
    scale: fn(&Classification, u32, f64) -> Result<f64>,
) -> Result<LocalLimitPoint> {
    let a_n = scale(cls, n, v as f64)?;
    let pmf = zn_pmf_compose(law, n, v)?;
    let prob = pmf.prob(v);
    let k_n = (cls.regime == Regime::SchroederCritical).then(|| critical_k(cls.m, n, v as f64));
    Ok(LocalLimitPoint { n, v, a_n, k_n, prob, ratio: prob / a_n })
}

/// How `v_n` grows with `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", content = "param", rename_all = "kebab-case")]
pub enum VRule {
    /// `round(m^(n/2))`.
    Sqrt,
    /// `v_n = n`.
    Linear,
    /// `round(m^(r n))`.
    MPower(f64),
    /// A fixed value.
    Const(usize),
}

impl VRule {
    pub fn raw(self, m: f64, n: u32) -> usize {
        let v = match self {
            VRule::Sqrt => m.powf(n as f64 / 2.0).round(),
            VRule::Linear => n as f64,
            VRule::MPower(r) => m.powf(r * n as f64).round(),
            VRule::Const(c) => c as f64,
        };
        (v as usize).max(1)
    }

    /// [`raw`](Self::raw) moved onto the lattice that `Z_n` lives on.
    pub fn value(self, law: &OffspringLaw, n: u32) -> usize {
        snap_to_lattice(law, n, self.raw(law.mean(), n))
    }
}

impl std::str::FromStr for VRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown v-rule `{s}`"));
        match s {
            "sqrt" => Ok(VRule::Sqrt),
            "linear" => Ok(VRule::Linear),
            _ => {
                let (name, arg) = s.split_once(':').ok_or_else(bad)?;
                match name {
                    "m-power" => arg.parse().map(VRule::MPower).map_err(|_| bad()),
                    "const" => arg.parse().map(VRule::Const).map_err(|_| bad()),
                    _ => Err(bad()),
                }
            }
        }
    }
}

/// Nearest positive integer congruent to the residue of `Z_n` modulo the
/// lattice span; ties go down.
pub fn snap_to_lattice(law: &OffspringLaw, n: u32, v: usize) -> usize {
    let span = law.span();
    if span <= 1 {
        return v.max(1);
    }
    let r = law.generation_residue(n);
    let below = v - ((v + span - r) % span);
    let above = below + span;
    let below_ok = below >= 1 && below <= v;
    if below_ok && v - below <= above - v {
        below
    } else {
        above
    }
}

/// `A_n` along a v-rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleSequence {
    pub regime: Regime,
    pub entries: Vec<LocalLimitPoint>,
}

impl ScaleSequence {
    /// `max ratio / min ratio`, infinite when some ratio vanishes.
    pub fn band(&self) -> f64 {
        let (lo, hi) = self
            .entries
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), e| (lo.min(e.ratio), hi.max(e.ratio)));
        if lo <= 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }
}

pub fn local_limit_sequence(
    law: &OffspringLaw,
    ns: impl IntoIterator<Item = u32>,
    rule: VRule,
) -> Result<ScaleSequence> {
    let cls = crate::classify(law);
    let entries = ns
        .into_iter()
        .map(|n| local_limit_with(law, &cls, n, rule.value(law, n), a_scale))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScaleSequence { regime: cls.regime, entries })
}

/// Maximizer and value of the regime-weighted pmf over `j >= v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupTail {
    pub n: u32,
    pub v: usize,
    pub argmax: usize,
    pub value: f64,
    /// `gamma^n`, `k_n gamma^n` or `m^-n`.
    pub scale: f64,
}

impl SupTail {
    pub fn ratio(&self) -> f64 {
        self.value / self.scale
    }
}

/// Scale for the uniform bound over `j >= v`.
pub fn sup_tail_scale(cls: &Classification, n: u32, v: f64) -> f64 {
    let gn = cls.gamma.powi(n as i32);
    match cls.regime {
        Regime::SchroederSub => gn,
        Regime::SchroederCritical => critical_k(cls.m, n, v) as f64 * gn,
        Regime::SchroederSuper | Regime::Boettcher => cls.m.powi(-(n as i32)),
    }
}

/// `sup_{v <= j <= K} j^(alpha-1) P(Z_n = j)` for `alpha < 1`, the plain sup otherwise.
pub fn sup_tail_local(law: &OffspringLaw, n: u32, v: usize, cap: Option<usize>) -> Result<SupTail> {
    let cls = crate::classify(law);
    let cap = cap.unwrap_or_else(|| default_cap(law, n).max(v));
    if v > cap {
        return Err(Error::VBeyondCap { v, cap });
    }
    let pmf = zn_pmf_compose(law, n, cap)?;
    let weight = |j: usize| match cls.regime {
        Regime::SchroederSub => (j as f64).powf(cls.alpha - 1.0),
        _ => 1.0,
    };
    let (argmax, value) = pmf.coeffs[v..]
        .iter()
        .enumerate()
        .map(|(i, &p)| (v + i, p * weight((v + i).max(1))))
        .fold((v, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    Ok(SupTail { n, v, argmax, value, scale: sup_tail_scale(&cls, n, v.max(1) as f64) })
}

pub const W_LAPLACE_LEVELS: u32 = 40;
const W_SEED_ARGUMENT: f64 = 1e-6;
const W_MAX_EXTRA_LEVELS: u32 = 200;

/// `E W^2 = 1 + sigma^2 / (m^2 - m)`, from the one-step recursion of `W`.
pub fn w_second_moment(law: &OffspringLaw) -> f64 {
    let m = law.mean();
    1.0 + law.variance() / (m * m - m)
}

/// A transform value with its first two derivatives in the argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

fn levels_for(m: f64, u: f64, floor: u32) -> u32 {
    if u <= W_SEED_ARGUMENT {
        return floor;
    }
    let needed = ((u / W_SEED_ARGUMENT).ln() / m.ln()).ceil() as u32;
    needed.max(floor)
}

/// `1 - phi(u)` at depth `n` together with derivatives in `u`, iterating
/// `y -> 1 - f(1 - y)` from the seed `u m^-n - (u m^-n)^2 E W^2 / 2`.
fn laplace_complement_jet(law: &OffspringLaw, around_one: &[f64], ew2: f64, u: f64, n: u32) -> Jet {
    let scale = law.mean().powi(-(n as i32));
    let x = u * scale;
    let mut y = x - 0.5 * ew2 * x * x;
    let mut d1 = scale * (1.0 - ew2 * x);
    let mut d2 = -ew2 * scale * scale;
    for _ in 0..n {
        let s = 1.0 - y;
        let fp = law.poly_derivative(s);
        let fpp = second_derivative(law, s);
        let next = if y < 0.5 {
            // 1 - f(1 - y) = -sum_{j>=1} c_j (-y)^j, no cancellation for small y
            -around_one.iter().skip(1).rev().fold(0.0, |acc, &c| acc * (-y) + c) * (-y)
        } else {
            1.0 - law.poly(s)
        };
        d2 = fp * d2 - fpp * d1 * d1;
        d1 *= fp;
        y = next;
    }
    Jet { value: y, d1, d2 }
}

fn second_derivative(law: &OffspringLaw, s: f64) -> f64 {
    law.probs()
        .iter()
        .enumerate()
        .skip(2)
        .rev()
        .fold(0.0, |acc, (j, &p)| acc * s + (j * (j - 1)) as f64 * p)
}

/// `phi(u)`, `phi'(u)`, `phi''(u)` for `u >= 0`.
pub(crate) fn w_laplace_jet(law: &OffspringLaw, u: f64, n_levels: u32) -> Result<Jet> {
    if !(u >= 0.0) || !u.is_finite() {
        return Err(Error::InvalidArgument(format!("Laplace argument must be finite and >= 0, got {u}")));
    }
    if u == 0.0 {
        return Ok(Jet { value: 1.0, d1: -1.0, d2: w_second_moment(law) });
    }
    let around_one = law.shifted_coeffs(1.0);
    let ew2 = w_second_moment(law);
    let mut n = levels_for(law.mean(), u, n_levels.max(1));
    let last = n + W_MAX_EXTRA_LEVELS;
    let mut coarse = laplace_complement_jet(law, &around_one, ew2, u, n - 1);
    loop {
        let fine = laplace_complement_jet(law, &around_one, ew2, u, n);
        let residual = (fine.value - coarse.value).abs();
        if residual < 1e-10 {
            return Ok(Jet { value: 1.0 - fine.value, d1: -fine.d1, d2: -fine.d2 });
        }
        if n >= last {
            return Err(Error::NoConvergence { iterations: n as usize, residual });
        }
        coarse = fine;
        n += 1;
    }
}

/// `phi(u) = E exp(-u W)`.
pub fn w_laplace(law: &OffspringLaw, u: f64, n_levels: u32) -> Result<f64> {
    w_laplace_jet(law, u, n_levels).map(|j| j.value)
}

/// Values of `E exp(theta W)` above this are reported as divergent.
pub const W_DIVERGENCE_GUARD: f64 = 1e12;

/// `E exp(theta W)` for `theta > 0` with derivatives, or `None` past the guard.
///
/// Upward Abel iteration `chi(theta) = f^(n)(chi(theta m^-n))` on `x = chi - 1`,
/// where `x -> f(1 + x) - 1` has nonnegative coefficients.
pub(crate) fn w_mgf_jet(law: &OffspringLaw, theta: f64) -> Option<Jet> {
    let around_one = law.shifted_coeffs(1.0);
    let ew2 = w_second_moment(law);
    let n = levels_for(law.mean(), theta, W_LAPLACE_LEVELS);
    let scale = law.mean().powi(-(n as i32));
    let t = theta * scale;
    let mut x = t + 0.5 * ew2 * t * t;
    let mut d1 = scale * (1.0 + ew2 * t);
    let mut d2 = ew2 * scale * scale;
    for _ in 0..n {
        let s = 1.0 + x;
        let fp = law.poly_derivative(s);
        let fpp = second_derivative(law, s);
        let next = around_one.iter().skip(1).rev().fold(0.0, |acc, &c| acc * x + c) * x;
        d2 = fp * d2 + fpp * d1 * d1;
        d1 *= fp;
        x = next;
        if !(1.0 + x <= W_DIVERGENCE_GUARD) {
            return None;
        }
    }
    Some(Jet { value: 1.0 + x, d1, d2 })
}

/// The Karlin-McGregor diagnostic `K(s) = s^alpha Q(phi(s))`.
pub fn km_function(law: &OffspringLaw, s: f64) -> Result<f64> {
    let cls = crate::classify(law);
    require_schroeder(&cls)?;
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::SOutOfRange(s));
    }
    let phi = w_laplace(law, s, W_LAPLACE_LEVELS)?;
    let q = q_limit_with(law, &cls, phi, Q_TOLERANCE, Q_MAX_ITERATIONS * 4)?;
    Ok(s.powf(cls.alpha) * q.value)
}

/// A value of the Boettcher function `G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GSeriesEval {
    pub s: f64,
    pub value: f64,
    pub terms_used: usize,
    /// Bound on the discarded part of the series.
    pub truncation_bound: f64,
}

pub const G_TOLERANCE: f64 = 1e-12;

fn require_boettcher(cls: &Classification) -> Result<()> {
    if !cls.is_boettcher() {
        return Err(Error::SchroederLaw);
    }
    Ok(())
}

/// `g(s) = (1 / (1 - p_j0)) sum_{j > j0} p_j s^(j - j0)`.
pub fn boettcher_small_g(law: &OffspringLaw, s: f64) -> f64 {
    let j0 = law.min_offspring();
    let pj0 = law.p(j0);
    let tail = law.probs()[j0 + 1..]
        .iter()
        .rev()
        .fold(0.0, |acc, &p| acc * s + p)
        * s;
    tail / (1.0 - pj0)
}

/// `G(s) = lim j0^-n log f_n(s)` from the telescoped series
/// `log s + sum_j j0^-(j+1) [log p_j0 + log(1 + (1 - p_j0)/p_j0 g(f_j(s)))]`.
pub fn boettcher_g(law: &OffspringLaw, s: f64, tol: f64) -> Result<GSeriesEval> {
    let cls = crate::classify(law);
    require_boettcher(&cls)?;
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::SOutOfRange(s));
    }
    if s == 1.0 {
        return Ok(GSeriesEval { s, value: 0.0, terms_used: 0, truncation_bound: 0.0 });
    }
    let j0 = cls.j0 as f64;
    let pj0 = law.p(cls.j0);
    let log_pj0 = pj0.ln();
    let ratio = (1.0 - pj0) / pj0;
    let mut value = s.ln();
    let mut x = s;
    let mut weight = 1.0;
    let mut terms = 0;
    loop {
        weight /= j0;
        value += weight * (log_pj0 + (ratio * boettcher_small_g(law, x)).ln_1p());
        terms += 1;
        x = law.poly(x);
        let bound = log_pj0.abs() * weight / (j0 - 1.0);
        if bound < tol || terms >= 10_000 {
            return Ok(GSeriesEval { s, value, terms_used: terms, truncation_bound: bound });
        }
    }
}

/// `j0^-n log f_n(s)`, evaluated in log space.
pub fn boettcher_g_iterate(law: &OffspringLaw, n: u32, s: f64) -> f64 {
    let j0 = law.min_offspring() as f64;
    law.log_pgf_iterate(n, s.ln()) / j0.powi(n as i32)
}

/// One line of the decay check `f_n(beta0) <= C beta0^(j0^n)`, in logs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayCheck {
    pub n: u32,
    pub log_fn: f64,
    pub log_bound: f64,
}

impl DecayCheck {
    pub fn holds(&self) -> bool {
        self.log_fn <= self.log_bound + 1e-12 * self.log_bound.abs().max(1.0)
    }
}

/// Fits `C` at generation `n_fit` and evaluates the bound at each of `ns`.
pub fn boettcher_decay(
    law: &OffspringLaw,
    beta0: f64,
    n_fit: u32,
    ns: impl IntoIterator<Item = u32>,
) -> Result<Vec<DecayCheck>> {
    let cls = crate::classify(law);
    require_boettcher(&cls)?;
    if !(beta0 > 0.0 && beta0 < 1.0) {
        return Err(Error::SOutOfRange(beta0));
    }
    let j0 = cls.j0 as f64;
    let log_b = beta0.ln();
    let log_c = law.log_pgf_iterate(n_fit, log_b) - j0.powi(n_fit as i32) * log_b;
    Ok(ns
        .into_iter()
        .map(|n| DecayCheck {
            n,
            log_fn: law.log_pgf_iterate(n, log_b),
            log_bound: log_c + j0.powi(n as i32) * log_b,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn law(spec: &str) -> OffspringLaw {
        OffspringLaw::from_sparse(spec).unwrap()
    }

    #[test]
    fn q_n_examples() {
        let lq = law("0:0.25,2:0.75");
        for n in [0, 3, 10] {
            assert_abs_diff_eq!(q_n(&lq, n, 1.0 / 3.0).unwrap().value, 0.0, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(q_n(&lq, 0, 0.6).unwrap().value, 0.6 - 1.0 / 3.0, epsilon = 1e-15);
        let l = law("1:0.5,2:0.5");
        assert_abs_diff_eq!(q_n(&l, 2, 0.5).unwrap().value, 1.03125, epsilon = 1e-14);
        assert!(matches!(q_n(&l, 2, 1.0), Err(Error::SAtOrBeyondOne(_))));
        assert!(matches!(q_n(&law("2:0.5,3:0.5"), 2, 0.5), Err(Error::BoettcherLaw)));
    }

    #[test]
    fn q_limit_functional_equation() {
        let l = law("1:0.5,2:0.5");
        let lhs = q_limit(&l, l.poly(0.3), Q_TOLERANCE, Q_MAX_ITERATIONS).unwrap().value;
        let rhs = 0.5 * q_limit(&l, 0.3, Q_TOLERANCE, Q_MAX_ITERATIONS).unwrap().value;
        assert!((lhs - rhs).abs() < 1e-8);
        assert_eq!(q_limit(&l, 0.0, Q_TOLERANCE, Q_MAX_ITERATIONS).unwrap().value, 0.0);
        let lq = law("0:0.25,2:0.75");
        assert_eq!(q_limit(&lq, 1.0 / 3.0, Q_TOLERANCE, 10).unwrap().value, 0.0);
    }

    #[test]
    fn q_limit_reports_no_convergence() {
        let l = law("1:0.5,2:0.5");
        let e = q_limit(&l, 0.9, 1e-30, 5).unwrap_err();
        assert!(matches!(e, Error::NoConvergence { iterations: 5, .. }));
    }

    #[test]
    fn q_coefficients_examples() {
        let l = law("1:0.6,3:0.4");
        for n in [1, 5, 12] {
            let c = q_coefficients(&l, 10, n).unwrap();
            assert_eq!(c.coeffs[0], 1.0);
            assert!(c.coeffs.iter().all(|&q| q >= 0.0));
        }
        let l = law("1:0.5,2:0.5");
        let c = q_coefficients(&l, 60, 40).unwrap();
        let q = q_limit(&l, 0.5, Q_TOLERANCE, Q_MAX_ITERATIONS).unwrap().value;
        assert!((c.eval(0.5) - q).abs() < 1e-6, "{} vs {q}", c.eval(0.5));
    }

    #[test]
    fn a_scale_examples() {
        let sup = crate::classify(&law("1:0.5,2:0.5"));
        assert_abs_diff_eq!(a_scale(&sup, 4, 3.0).unwrap(), 1.5f64.powi(-4), epsilon = 1e-15);
        assert_abs_diff_eq!(a_scale(&sup, 4, 3.0).unwrap(), 0.197531, epsilon = 1e-6);

        let crit = crate::classify(&law("1:0.5,3:0.5"));
        assert_eq!(critical_k(crit.m, 10, 32.0), 6);
        assert_abs_diff_eq!(a_scale(&crit, 10, 32.0).unwrap(), 6.0 * 0.5f64.powi(10), epsilon = 1e-15);

        let sub = crate::classify(&law("1:0.6,3:0.4"));
        let want = 0.6f64.powi(6) * 10f64.powf(sub.alpha - 1.0);
        assert_abs_diff_eq!(a_scale(&sub, 6, 10.0).unwrap(), want, epsilon = 1e-15);

        assert!(matches!(a_scale(&sup, 4, 7.0), Err(Error::VTooLarge { .. })));
        assert!(a_scale(&sup, 10, 58.0).is_ok());
        assert!(matches!(a_scale(&sup, 4, 0.5), Err(Error::VTooSmall(_))));
    }

    #[test]
    fn local_limit_examples() {
        let bot = law("2:0.5,3:0.5");
        assert_eq!(local_limit_ratio(&bot, 4, 10).unwrap().ratio, 0.0);
        let sub = law("1:0.6,3:0.4");
        assert_abs_diff_eq!(local_limit_ratio(&sub, 7, 1).unwrap().ratio, 1.0, epsilon = 1e-12);
        let sup = law("1:0.5,2:0.5");
        let r: Vec<f64> = (10..=12)
            .map(|n| local_limit_ratio(&sup, n, 1.5f64.powi(n as i32).round() as usize).unwrap().ratio)
            .collect();
        let (lo, hi) = (r.iter().cloned().fold(f64::INFINITY, f64::min), r.iter().cloned().fold(0.0, f64::max));
        assert!(hi / lo < 1.5, "{r:?}");
    }

    #[test]
    fn lattice_snap() {
        let crit = law("1:0.5,3:0.5");
        assert_eq!(snap_to_lattice(&crit, 6, 16), 15);
        assert_eq!(snap_to_lattice(&crit, 6, 17), 17);
        assert_eq!(snap_to_lattice(&crit, 6, 1), 1);
        let lq = law("0:0.25,2:0.75");
        assert_eq!(snap_to_lattice(&lq, 3, 5), 4);
        assert_eq!(snap_to_lattice(&lq, 3, 1), 2);
        assert_eq!(snap_to_lattice(&law("1:0.5,2:0.5"), 3, 5), 5);
        assert_eq!("m-power:0.8".parse::<VRule>().unwrap(), VRule::MPower(0.8));
        assert!("cubic".parse::<VRule>().is_err());
    }

    #[test]
    fn sup_tail_examples() {
        let sup = law("1:0.5,2:0.5");
        let single = sup_tail_local(&sup, 8, 40, Some(40)).unwrap();
        assert_eq!(single.argmax, 40);
        let pmf = zn_pmf_compose(&sup, 8, 40).unwrap();
        assert_eq!(single.value, pmf.coeffs[40]);
        let mut last = f64::INFINITY;
        for v in [1, 5, 20, 60, 120] {
            let s = sup_tail_local(&sup, 8, v, None).unwrap();
            assert!(s.value <= last);
            last = s.value;
        }
        assert!(matches!(sup_tail_local(&sup, 8, 50, Some(40)), Err(Error::VBeyondCap { .. })));
    }

    #[test]
    fn w_laplace_examples() {
        for spec in ["1:0.5,2:0.5", "1:0.6,3:0.4", "0:0.25,2:0.75"] {
            let l = law(spec);
            assert_eq!(w_laplace(&l, 0.0, W_LAPLACE_LEVELS).unwrap(), 1.0);
            for u in [0.5, 1.0, 2.0] {
                let lhs = w_laplace(&l, l.mean() * u, W_LAPLACE_LEVELS).unwrap();
                let rhs = l.poly(w_laplace(&l, u, W_LAPLACE_LEVELS).unwrap());
                assert!((lhs - rhs).abs() < 1e-8, "{spec} u={u}");
            }
            let mut prev = 1.0;
            for i in 1..=100 {
                let v = w_laplace(&l, i as f64 * 0.1, W_LAPLACE_LEVELS).unwrap();
                assert!(v < prev);
                prev = v;
            }
        }
    }

    #[test]
    fn w_laplace_derivatives_are_moments() {
        let l = law("1:0.5,2:0.5");
        let h = 1e-4;
        let jet = w_laplace_jet(&l, 0.7, W_LAPLACE_LEVELS).unwrap();
        let fd = (w_laplace(&l, 0.7 + h, 40).unwrap() - w_laplace(&l, 0.7 - h, 40).unwrap()) / (2.0 * h);
        assert_abs_diff_eq!(jet.d1, fd, epsilon = 1e-7);
        let up = w_mgf_jet(&l, 1e-3).unwrap();
        assert_abs_diff_eq!(up.d1, 1.0, epsilon = 2e-3);
        assert_abs_diff_eq!(w_second_moment(&l), 4.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn mgf_diverges_far_out() {
        let l = law("1:0.5,2:0.5");
        assert!(w_mgf_jet(&l, 1.0).is_some());
        assert!(w_mgf_jet(&l, 500.0).is_none());
    }

    #[test]
    fn km_function_is_finite_and_continuous() {
        let l = law("1:0.5,2:0.5");
        for i in 1..=9 {
            let s = i as f64 / 10.0;
            let k = km_function(&l, s).unwrap();
            let k2 = km_function(&l, s + 1e-4).unwrap();
            assert!(k.is_finite());
            assert!((k - k2).abs() < 1e-3);
        }
        assert!(km_function(&l, 1.0).is_err());
    }

    #[test]
    fn boettcher_g_examples() {
        let l = law("2:0.5,3:0.5");
        assert_eq!(boettcher_g(&l, 1.0, G_TOLERANCE).unwrap().value, 0.0);
        for s in [0.2, 0.7] {
            assert_abs_diff_eq!(boettcher_small_g(&l, s), s, epsilon = 1e-15);
        }
        for s in [0.3, 0.6, 0.9] {
            let g = boettcher_g(&l, s, G_TOLERANCE).unwrap();
            assert!(g.value < 0.0);
            assert!((boettcher_g_iterate(&l, 20, s) - g.value).abs() < 1e-6);
        }
        assert!(matches!(boettcher_g(&law("1:0.5,2:0.5"), 0.5, G_TOLERANCE), Err(Error::SchroederLaw)));
        assert!(matches!(boettcher_g(&l, 0.0, G_TOLERANCE), Err(Error::SOutOfRange(_))));
    }

    #[test]
    fn boettcher_g_with_larger_j0() {
        let l = law("3:0.7,5:0.3");
        for s in [0.4, 0.8] {
            let g = boettcher_g(&l, s, G_TOLERANCE).unwrap();
            assert!((boettcher_g_iterate(&l, 15, s) - g.value).abs() < 1e-6);
        }
    }

    #[test]
    fn decay_bound_holds() {
        let l = law("2:0.5,3:0.5");
        for beta0 in [0.3, 0.6, 0.9] {
            for c in boettcher_decay(&l, beta0, 3, 4..=10).unwrap() {
                assert!(c.holds(), "{c:?}");
            }
        }
    }

    #[test]
    fn w_martingale_mean() {
        let l = law("1:0.5,2:0.5");
        let n = 10;
        let pmf = zn_pmf_compose(&l, n, default_cap(&l, n)).unwrap();
        let mean = pmf.truncated_mean() / l.mean().powi(n as i32);
        assert!(mean <= 1.0 + 1e-12 && mean > 1.0 - 1e-9);
    }
}
