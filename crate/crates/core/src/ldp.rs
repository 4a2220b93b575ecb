//! Cramer transforms and the conditional rate functions.
//!
//! Growth of the conditioning level is described by `b = lim (n - k) / v_{n-k}`:
//! linear growth has `0 < b < inf`, superlinear growth of `v` gives `b = 0` and
//! the `-log f_k(e^-I)` form, and sublinear growth gives the constant rate `B`
//! at speed `n`. The caller picks the regime; it is never inferred.

use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{boettcher_g, w_laplace_jet, w_mgf_jet, Jet, G_TOLERANCE, W_LAPLACE_LEVELS};
use crate::error::{Error, Result};
use crate::offspring::{log_sum_exp, Classification, OffspringLaw, Regime};

/// `Lambda(theta) = log E exp(theta Z_1)`.
pub fn cumulant(law: &OffspringLaw, theta: f64) -> f64 {
    cumulant_jet(law, theta).value
}

/// `Lambda`, the tilted mean `Lambda'` and the tilted variance `Lambda''`.
pub(crate) fn cumulant_jet(law: &OffspringLaw, theta: f64) -> Jet {
    let terms = law
        .probs()
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(j, &p)| p.ln() + theta * j as f64);
    let value = log_sum_exp(terms.clone());
    let (mut mean, mut second) = (0.0, 0.0);
    for (j, t) in law.support().zip(terms) {
        let w = (t - value).exp();
        mean += w * j as f64;
        second += w * (j * j) as f64;
    }
    Jet { value, d1: mean, d2: (second - mean * mean).max(0.0) }
}

/// A Legendre transform value and the maximizing `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Conjugate {
    pub value: f64,
    pub theta: f64,
    /// Set when `theta` hit the largest admissible value; the value is then a lower bound.
    pub capped: bool,
}

impl Conjugate {
    fn infinite() -> Self {
        Self { value: f64::INFINITY, theta: f64::NAN, capped: false }
    }
}

const THETA_LIMIT: f64 = 1e6;

/// `sup_theta [theta x - Lambda(theta)]` for a smooth convex `Lambda`, by Newton on
/// `Lambda'(theta) = x` with a bisection safeguard. `cgf` returns `None` where
/// `Lambda` is infinite; that region is assumed to be `theta > theta_c` for some
/// threshold.
fn conjugate<F>(x: f64, cgf: F) -> Conjugate
where
    F: Fn(f64) -> Option<Jet>,
{
    let at_zero = cgf(0.0).expect("cgf is finite at 0");
    if at_zero.d1 == x {
        return Conjugate { value: -at_zero.value, theta: 0.0, capped: false };
    }
    let objective = |theta: f64, j: &Jet| theta * x - j.value;
    // bracket [lo, hi] with Lambda'(lo) < x < Lambda'(hi)
    let (mut lo, mut hi, mut jet) = if x > at_zero.d1 {
        let mut last_finite = (0.0, at_zero);
        let mut step = 1.0;
        loop {
            if step > THETA_LIMIT {
                let (t, j) = last_finite;
                return Conjugate { value: objective(t, &j), theta: t, capped: true };
            }
            match cgf(step) {
                Some(j) if j.d1 >= x => break (last_finite.0, step, j),
                Some(j) => last_finite = (step, j),
                None => {
                    let (t, j) = locate_abscissa(&cgf, last_finite.0, step);
                    if j.d1 >= x {
                        break (last_finite.0, t, j);
                    }
                    return Conjugate { value: objective(t, &j), theta: t, capped: true };
                }
            }
            step *= 2.0;
        }
    } else {
        let mut prev = 0.0;
        let mut step = -1.0;
        loop {
            if step < -THETA_LIMIT {
                let j = cgf(prev).expect("finite below zero");
                return Conjugate { value: objective(prev, &j), theta: prev, capped: true };
            }
            let j = cgf(step).expect("finite below zero");
            if j.d1 <= x {
                break (step, prev, j);
            }
            prev = step;
            step *= 2.0;
        }
    };
    let mut theta = 0.5 * (lo + hi);
    for _ in 0..300 {
        jet = match cgf(theta) {
            Some(j) => j,
            None => {
                hi = theta;
                theta = 0.5 * (lo + hi);
                continue;
            }
        };
        let g = jet.d1 - x;
        if g.abs() <= 1e-14 * x.abs().max(1.0) {
            break;
        }
        if g > 0.0 {
            hi = theta;
        } else {
            lo = theta;
        }
        let newton = theta - g / jet.d2;
        let next = if jet.d2 > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - theta).abs() <= 1e-15 * theta.abs().max(1.0) {
            theta = next;
            jet = cgf(theta).unwrap_or(jet);
            break;
        }
        theta = next;
    }
    Conjugate { value: objective(theta, &jet), theta, capped: false }
}

/// Largest `theta` in `[finite, infinite]` (to bisection precision) where `cgf` is finite.
fn locate_abscissa<F>(cgf: &F, mut finite: f64, mut infinite: f64) -> (f64, Jet)
where
    F: Fn(f64) -> Option<Jet>,
{
    let mut jet = cgf(finite).expect("finite endpoint");
    for _ in 0..80 {
        let mid = 0.5 * (finite + infinite);
        match cgf(mid) {
            Some(j) => {
                finite = mid;
                jet = j;
            }
            None => infinite = mid,
        }
        if infinite - finite <= 1e-12 * finite.abs().max(1.0) {
            break;
        }
    }
    (finite, jet)
}

/// `Lambda*(x)` together with the maximizing `theta`.
pub fn legendre_point(law: &OffspringLaw, x: f64) -> Conjugate {
    let j0 = law.min_offspring() as f64;
    let d = law.max_offspring() as f64;
    if x.is_nan() || x < j0 || x > d {
        return Conjugate::infinite();
    }
    if x == j0 {
        return Conjugate { value: -law.p(law.min_offspring()).ln(), theta: f64::NEG_INFINITY, capped: false };
    }
    if x == d {
        return Conjugate { value: -law.p(law.max_offspring()).ln(), theta: f64::INFINITY, capped: false };
    }
    conjugate(x, |t| Some(cumulant_jet(law, t)))
}

/// `Lambda*(x) = sup_theta [theta x - Lambda(theta)]`; `+inf` outside `[j0, d]`.
pub fn legendre(law: &OffspringLaw, x: f64) -> f64 {
    legendre_point(law, x).value
}

/// `Lambda_W`, `Lambda_W'` and `Lambda_W''` at `theta`, or `None` past the divergence guard.
pub(crate) fn w_cumulant_jet(law: &OffspringLaw, theta: f64) -> Option<Jet> {
    if theta == 0.0 {
        return Some(Jet { value: 0.0, d1: 1.0, d2: crate::asymptotics::w_second_moment(law) - 1.0 });
    }
    let raw = if theta > 0.0 {
        w_mgf_jet(law, theta)?
    } else {
        let j = w_laplace_jet(law, -theta, W_LAPLACE_LEVELS).ok()?;
        // d/dtheta of phi(-theta)
        Jet { value: j.value, d1: -j.d1, d2: j.d2 }
    };
    if raw.value <= 0.0 {
        return Some(Jet { value: f64::NEG_INFINITY, d1: 0.0, d2: 0.0 });
    }
    let l1 = raw.d1 / raw.value;
    Some(Jet { value: raw.value.ln(), d1: l1, d2: (raw.d2 / raw.value - l1 * l1).max(0.0) })
}

/// `Lambda_W(theta) = log E exp(theta W)`; `+inf` past the divergence guard.
pub fn w_cumulant(law: &OffspringLaw, theta: f64) -> f64 {
    w_cumulant_jet(law, theta).map_or(f64::INFINITY, |j| j.value)
}

/// `Lambda_W*(x)`. For `x` beyond `Lambda_W'` at the detected abscissa the result
/// is a lower bound and `capped` is set.
pub fn w_legendre_point(law: &OffspringLaw, x: f64) -> Conjugate {
    if x.is_nan() || x < 0.0 {
        return Conjugate::infinite();
    }
    if x == 0.0 {
        // sup over theta -> -inf of -Lambda_W(theta) = -log P(W = 0)
        let q = crate::offspring::extinction_probability(law);
        return Conjugate { value: -q.ln(), theta: f64::NEG_INFINITY, capped: false };
    }
    conjugate(x, |t| w_cumulant_jet(law, t).filter(|j| j.value.is_finite()))
}

pub fn w_legendre(law: &OffspringLaw, x: f64) -> f64 {
    w_legendre_point(law, x).value
}

/// How the conditioning level grows; see the module docs for the meaning of `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "growth", rename_all = "lowercase")]
pub enum Growth {
    /// `(n - k) / v_{n-k} -> b`, rate `-log f_k(e^-I) + b B`.
    Linear { b: f64 },
    /// `v` outgrows `n` (`b = 0`), rate `-log f_k(e^-I)`.
    Superlinear,
    /// `n` outgrows `v`, constant rate `B` at speed `n`.
    Sublinear,
}

impl Growth {
    pub fn parse(name: &str, b: Option<f64>) -> Result<Self> {
        match name {
            "linear" => {
                let b = b.unwrap_or(0.0);
                if !(b >= 0.0) || !b.is_finite() {
                    return Err(Error::InvalidArgument(format!("b must be finite and >= 0, got {b}")));
                }
                Ok(Growth::Linear { b })
            }
            "superlinear" => Ok(Growth::Superlinear),
            "sublinear" => Ok(Growth::Sublinear),
            _ => Err(Error::InvalidArgument(format!("unknown growth `{name}`"))),
        }
    }
}

/// Conditioning lag, growth regime and the constant `B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateRegime {
    pub k: u32,
    pub growth: Growth,
    #[serde(rename = "B")]
    pub big_b: f64,
}

/// `B = -log gamma` when `alpha <= 1`, `log m` when `1 < alpha < inf`.
pub fn regime_constant(cls: &Classification) -> Result<f64> {
    match cls.regime {
        Regime::SchroederSub | Regime::SchroederCritical => Ok(-cls.gamma.ln()),
        Regime::SchroederSuper => Ok(cls.m.ln()),
        Regime::Boettcher => Err(Error::BoettcherLaw),
    }
}

impl RateRegime {
    pub fn new(cls: &Classification, k: u32, growth: Growth) -> Result<Self> {
        Ok(Self { k, growth, big_b: regime_constant(cls)? })
    }
}

/// `-log f_k(e^-I)`, infinite when `f_k(e^-I) = 0`.
fn outer_log(law: &OffspringLaw, k: u32, inner: f64) -> f64 {
    let s = if inner == f64::INFINITY { 0.0 } else { (-inner).exp() };
    let fk = (0..k).fold(s, |x, _| law.poly(x));
    if fk <= 0.0 {
        f64::INFINITY
    } else {
        -fk.ln()
    }
}

/// The conditional rate `I~(x)` built from an inner rate `I`.
pub fn rate_conditional(
    law: &OffspringLaw,
    cls: &Classification,
    regime: &RateRegime,
    inner_rate: impl Fn(f64) -> f64,
    x: f64,
) -> Result<f64> {
    if cls.is_boettcher() {
        return Err(Error::BoettcherLaw);
    }
    Ok(match regime.growth {
        Growth::Sublinear => regime.big_b,
        Growth::Superlinear => outer_log(law, regime.k, inner_rate(x)),
        Growth::Linear { b } => outer_log(law, regime.k, inner_rate(x)) + b * regime.big_b,
    })
}

/// The conditional rate of `R_n` with inner rate `Lambda*`.
pub fn rate_conditional_offspring(
    law: &OffspringLaw,
    cls: &Classification,
    regime: &RateRegime,
    x: f64,
) -> Result<f64> {
    rate_conditional(law, cls, regime, |y| legendre(law, y), x)
}

/// The conditional rate of `W / W_n` with inner rate `Lambda_W*`.
pub fn rate_conditional_w(law: &OffspringLaw, cls: &Classification, regime: &RateRegime, x: f64) -> Result<f64> {
    rate_conditional(law, cls, regime, |y| w_legendre(law, y), x)
}

/// Boettcher conditional rate: `-b G(f_k(e^-I))` for `b > 0`, `-log f_k(e^-I)` for `b = 0`.
///
/// Here `b = lim j0^n / v_n`.
pub fn rate_boettcher(
    law: &OffspringLaw,
    cls: &Classification,
    k: u32,
    b: f64,
    inner_rate: impl Fn(f64) -> f64,
    x: f64,
) -> Result<f64> {
    if !cls.is_boettcher() {
        return Err(Error::SchroederLaw);
    }
    if !(b >= 0.0) || !b.is_finite() {
        return Err(Error::InvalidArgument(format!("b must be finite and >= 0, got {b}")));
    }
    let inner = inner_rate(x);
    if b == 0.0 {
        return Ok(outer_log(law, k, inner));
    }
    let s = if inner == f64::INFINITY { 0.0 } else { (-inner).exp() };
    let fk = (0..k).fold(s, |y, _| law.poly(y));
    if fk <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-b * boettcher_g(law, fk, G_TOLERANCE)?.value)
}

/// A piecewise-linear path on `[0, 1]` given by its breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseLinearPath {
    points: Vec<(f64, f64)>,
}

impl PiecewiseLinearPath {
    /// Breakpoints `(t, y)` with strictly increasing `t` running from 0 to 1.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument("a path needs at least two breakpoints".into()));
        }
        if points[0].0 != 0.0 || points[points.len() - 1].0 != 1.0 {
            return Err(Error::InvalidArgument("path breakpoints must start at t = 0 and end at t = 1".into()));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) || points.iter().any(|p| !p.1.is_finite()) {
            return Err(Error::InvalidArgument("path times must increase strictly and values be finite".into()));
        }
        Ok(Self { points })
    }

    /// Parses `t:y,t:y,...`.
    pub fn parse(spec: &str) -> Result<Self> {
        let points = spec
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|item| {
                let (t, y) = item
                    .split_once(':')
                    .ok_or_else(|| Error::InvalidArgument(format!("expected t:y, got `{item}`")))?;
                let parse = |s: &str| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidArgument(format!("bad number `{s}`")))
                };
                Ok((parse(t)?, parse(y)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// `(length, slope)` per segment.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.windows(2).map(|w| {
            let dt = w[1].0 - w[0].0;
            (dt, (w[1].1 - w[0].1) / dt)
        })
    }
}

/// `int_0^1 I~_1(phi'(t)) dt` for a path anchored at 0, `+inf` otherwise.
pub fn path_rate(
    law: &OffspringLaw,
    cls: &Classification,
    regime: &RateRegime,
    path: &PiecewiseLinearPath,
) -> Result<f64> {
    if path.points[0].1 != 0.0 {
        return Ok(f64::INFINITY);
    }
    let mut total = 0.0;
    for (dt, slope) in path.segments() {
        total += dt * rate_conditional_offspring(law, cls, regime, slope)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RateKind {
    /// `R_n`, inner rate `Lambda*`.
    Offspring,
    /// `W / W_n`, inner rate `Lambda_W*`.
    W,
    /// Boettcher law, inner rate `Lambda*`.
    Boettcher,
    /// Inner rate supplied by the caller.
    Generic,
}

impl std::str::FromStr for RateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "offspring" => Ok(RateKind::Offspring),
            "w" => Ok(RateKind::W),
            "boettcher" => Ok(RateKind::Boettcher),
            "generic" => Ok(RateKind::Generic),
            _ => Err(Error::InvalidArgument(format!("unknown rate kind `{s}`"))),
        }
    }
}

/// Rate parameters for a table: a Schroeder regime, or `(k, b)` for Boettcher laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum TableRegime {
    Schroeder(RateRegime),
    Boettcher { k: u32, b: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateTable {
    pub kind: RateKind,
    pub regime: TableRegime,
    pub xs: Vec<f64>,
    pub inner: Vec<f64>,
    pub rates: Vec<f64>,
}

/// Evaluates a rate over `xs` in parallel; output order follows `xs`.
pub fn rate_table(
    law: &OffspringLaw,
    kind: RateKind,
    regime: TableRegime,
    xs: &[f64],
    inner_rate: Option<&(dyn Fn(f64) -> f64 + Sync)>,
) -> Result<RateTable> {
    let cls = crate::classify(law);
    let inner = |x: f64| -> Result<f64> {
        Ok(match kind {
            RateKind::Offspring | RateKind::Boettcher => legendre(law, x),
            RateKind::W => w_legendre(law, x),
            RateKind::Generic => inner_rate
                .ok_or_else(|| Error::InvalidArgument("generic rate table needs an inner rate".into()))?(x),
        })
    };
    let rows: Vec<(f64, f64)> = xs
        .par_iter()
        .map(|&x| {
            let i = inner(x)?;
            let total = match regime {
                TableRegime::Schroeder(r) => rate_conditional(law, &cls, &r, |_| i, x)?,
                TableRegime::Boettcher { k, b } => rate_boettcher(law, &cls, k, b, |_| i, x)?,
            };
            Ok((i, total))
        })
        .collect::<Result<Vec<_>>>()?;
    let (inner, rates) = rows.into_iter().unzip();
    Ok(RateTable { kind, regime, xs: xs.to_vec(), inner, rates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn law(spec: &str) -> OffspringLaw {
        OffspringLaw::from_sparse(spec).unwrap()
    }

    fn grid_legendre(law: &OffspringLaw, x: f64) -> f64 {
        (-200_000..=200_000)
            .map(|i| {
                let t = i as f64 * 1e-4;
                t * x - cumulant(law, t)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn cumulant_examples() {
        let l = law("1:0.5,2:0.5");
        assert_eq!(cumulant(&l, 0.0), 0.0);
        let h = 1e-6;
        let slope = (cumulant(&l, h) - cumulant(&l, -h)) / (2.0 * h);
        assert_abs_diff_eq!(slope, 1.5, epsilon = 1e-6);
        let e = std::f64::consts::E;
        assert_abs_diff_eq!(cumulant(&l, 1.0), ((e + e * e) / 2.0).ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(cumulant(&l, 1.0), 1.620115, epsilon = 1e-6);
    }

    #[test]
    fn legendre_examples() {
        let l = law("1:0.5,2:0.5");
        assert_abs_diff_eq!(legendre(&l, 1.5), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(legendre(&l, 2.0), 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(legendre(&l, 1.0), 2f64.ln(), epsilon = 1e-15);
        assert_eq!(legendre(&l, 2.5), f64::INFINITY);
        assert_eq!(legendre(&l, 0.5), f64::INFINITY);
        assert_abs_diff_eq!(legendre(&l, 1.75), grid_legendre(&l, 1.75), epsilon = 1e-6);
        // Bernoulli shifted by one: closed form
        let x = 1.8f64;
        let closed = 0.8 * (0.8f64 / 0.5).ln() + 0.2 * (0.2f64 / 0.5).ln();
        assert_abs_diff_eq!(legendre(&l, x), closed, epsilon = 1e-12);
    }

    #[test]
    fn legendre_near_endpoints() {
        let l = law("0:0.25,2:0.75");
        let near = legendre(&l, 2.0 - 1e-9);
        assert!((near - (-0.75f64.ln())).abs() < 1e-6);
        assert!(legendre(&l, 1e-9) > 0.0);
    }

    #[test]
    fn w_cumulant_moments() {
        let l = law("1:0.5,2:0.5");
        assert_eq!(w_cumulant(&l, 0.0), 0.0);
        let h = 1e-3;
        let d1 = (w_cumulant(&l, h) - w_cumulant(&l, -h)) / (2.0 * h);
        assert_abs_diff_eq!(d1, 1.0, epsilon = 1e-6);
        let d2 = (w_cumulant(&l, h) - 2.0 * w_cumulant(&l, 0.0) + w_cumulant(&l, -h)) / (h * h);
        assert_abs_diff_eq!(d2, 1.0 / 3.0, epsilon = 1e-4);
        assert_eq!(w_cumulant(&l, 1e4), f64::INFINITY);
    }

    #[test]
    fn w_legendre_shape() {
        let l = law("1:0.5,2:0.5");
        assert_abs_diff_eq!(w_legendre(&l, 1.0), 0.0, epsilon = 1e-12);
        assert_eq!(w_legendre(&l, -0.5), f64::INFINITY);
        assert_eq!(w_legendre(&l, 0.0), f64::INFINITY);
        let lq = law("0:0.25,2:0.75");
        assert_abs_diff_eq!(w_legendre(&lq, 0.0), 3f64.ln(), epsilon = 1e-12);
        let mut prev = 0.0;
        for i in 0..=20 {
            let v = w_legendre(&l, 1.0 + i as f64 * 0.1);
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn rate_conditional_examples() {
        let l = law("1:0.5,2:0.5");
        let cls = crate::classify(&l);
        let r0 = RateRegime::new(&cls, 1, Growth::Linear { b: 0.0 }).unwrap();
        assert_eq!(rate_conditional_offspring(&l, &cls, &r0, 1.5).unwrap(), 0.0);
        assert_eq!(rate_conditional(&l, &cls, &r0, |_| f64::INFINITY, 3.0).unwrap(), f64::INFINITY);

        let r = RateRegime::new(&cls, 1, Growth::Linear { b: 1.0 }).unwrap();
        assert_abs_diff_eq!(r.big_b, 1.5f64.ln(), epsilon = 1e-15);
        let inner = grid_legendre(&l, 1.75);
        let s = (-inner).exp();
        let hand = -(0.5 * s + 0.5 * s * s).ln() + 1.5f64.ln();
        assert_abs_diff_eq!(rate_conditional_offspring(&l, &cls, &r, 1.75).unwrap(), hand, epsilon = 1e-6);

        let sub = RateRegime::new(&cls, 1, Growth::Sublinear).unwrap();
        assert_eq!(rate_conditional_offspring(&l, &cls, &sub, 1.9).unwrap(), 1.5f64.ln());
        let crit = crate::classify(&law("1:0.5,3:0.5"));
        assert_abs_diff_eq!(regime_constant(&crit).unwrap(), 2f64.ln(), epsilon = 1e-15);
        let bot = law("2:0.5,3:0.5");
        assert!(matches!(
            rate_conditional_offspring(&bot, &crate::classify(&bot), &r, 2.5),
            Err(Error::BoettcherLaw)
        ));
    }

    #[test]
    fn rate_grows_with_lag() {
        // f(s) < s on (q, 1), so f_k(e^-I) falls and -log f_k(e^-I) rises with k
        let l = law("1:0.5,2:0.5");
        let cls = crate::classify(&l);
        for x in [1.6, 1.8, 1.95] {
            let mut prev = 0.0;
            for k in 0..=3 {
                let r = RateRegime::new(&cls, k, Growth::Linear { b: 0.5 }).unwrap();
                let v = rate_conditional_offspring(&l, &cls, &r, x).unwrap();
                assert!(v >= prev);
                prev = v;
            }
        }
    }

    #[test]
    fn rate_conditional_w_examples() {
        let l = law("1:0.5,2:0.5");
        let cls = crate::classify(&l);
        let r = RateRegime::new(&cls, 1, Growth::Linear { b: 0.5 }).unwrap();
        assert_abs_diff_eq!(rate_conditional_w(&l, &cls, &r, 1.0).unwrap(), 0.5 * 1.5f64.ln(), epsilon = 1e-12);
        assert_eq!(rate_conditional_w(&l, &cls, &r, -1.0).unwrap(), f64::INFINITY);
        let mut prev = 0.0;
        for i in 0..=20 {
            let v = rate_conditional_w(&l, &cls, &r, 1.0 + 0.1 * i as f64).unwrap();
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn rate_boettcher_examples() {
        let l = law("2:0.5,3:0.5");
        let cls = crate::classify(&l);
        let lam = |x: f64| legendre(&l, x);
        assert_eq!(rate_boettcher(&l, &cls, 1, 1.0, lam, 2.5).unwrap(), 0.0);
        assert_eq!(rate_boettcher(&l, &cls, 1, 0.0, lam, 2.5).unwrap(), 0.0);
        let inner = grid_legendre(&l, 2.75);
        let oracle = -crate::asymptotics::boettcher_g_iterate(&l, 30, (-inner).exp());
        assert_abs_diff_eq!(rate_boettcher(&l, &cls, 0, 1.0, lam, 2.75).unwrap(), oracle, epsilon = 1e-6);
        let sup = law("1:0.5,2:0.5");
        assert!(matches!(
            rate_boettcher(&sup, &crate::classify(&sup), 0, 1.0, |_| 0.0, 1.5),
            Err(Error::SchroederLaw)
        ));
    }

    #[test]
    fn path_rate_examples() {
        let l = law("1:0.5,2:0.5");
        let cls = crate::classify(&l);
        let r = RateRegime::new(&cls, 1, Growth::Linear { b: 0.5 }).unwrap();
        let lln = PiecewiseLinearPath::new(vec![(0.0, 0.0), (1.0, 1.5)]).unwrap();
        assert_abs_diff_eq!(path_rate(&l, &cls, &r, &lln).unwrap(), 0.5 * 1.5f64.ln(), epsilon = 1e-14);
        let shifted = PiecewiseLinearPath::parse("0:0.1,1:1.6").unwrap();
        assert_eq!(path_rate(&l, &cls, &r, &shifted).unwrap(), f64::INFINITY);

        let r0 = RateRegime::new(&cls, 1, Growth::Linear { b: 0.0 }).unwrap();
        let bent = PiecewiseLinearPath::parse("0:0,0.5:0.5,1:1.5").unwrap();
        let i1 = |x: f64| {
            let s = (-grid_legendre(&l, x)).exp();
            -(0.5 * s + 0.5 * s * s).ln()
        };
        let want = 0.5 * i1(1.0) + 0.5 * i1(2.0);
        assert_abs_diff_eq!(path_rate(&l, &cls, &r0, &bent).unwrap(), want, epsilon = 1e-6);
        assert!(PiecewiseLinearPath::parse("0:0,0.5:1").is_err());
    }

    #[test]
    fn table_matches_pointwise() {
        let l = law("1:0.5,2:0.5");
        let cls = crate::classify(&l);
        let r = RateRegime::new(&cls, 1, Growth::Linear { b: 0.5 }).unwrap();
        let xs: Vec<f64> = (0..=10).map(|i| 1.0 + 0.1 * i as f64).collect();
        let t = rate_table(&l, RateKind::Offspring, TableRegime::Schroeder(r), &xs, None).unwrap();
        for (x, rate) in xs.iter().zip(&t.rates) {
            assert_eq!(*rate, rate_conditional_offspring(&l, &cls, &r, *x).unwrap());
        }
        assert!(t.rates.iter().all(|&v| v >= -1e-12));
    }
}
