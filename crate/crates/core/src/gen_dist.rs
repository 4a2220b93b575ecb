//! Exact law of `Z_n` up to a truncation cap.
//!
//! Two paths that share no code beyond the offspring polynomial:
//!
//! * [`zn_pmf_compose`] composes the offspring pgf with itself as a truncated
//!   power series. All coefficients are nonnegative, so the first `K + 1`
//!   coefficients are exact up to roundoff.
//! * [`zn_pmf_dft`] iterates `f` pointwise on the `N`-th roots of unity and
//!   inverts with one FFT. Mass at `k >= N` aliases onto `k mod N`.

use std::fmt;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::offspring::OffspringLaw;
use crate::series::{compose_with, Multiplier, TruncSeries};

/// Default largest truncation cap.
pub const MAX_DEFAULT_CAP: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PmfMethod {
    Compose,
    Dft,
}

impl fmt::Display for PmfMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PmfMethod::Compose => "compose",
            PmfMethod::Dft => "dft",
        })
    }
}

/// `P(Z_n = k)` for `k = 0..=K`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationPmf {
    pub n: u32,
    pub coeffs: Vec<f64>,
    /// `1 - sum(coeffs)`, the mass above the cap. Zero by construction on the DFT path.
    pub tail_mass: f64,
    pub method: PmfMethod,
    /// DFT path only: Markov bound `m^n / N` on the mass that aliased into the table.
    pub alias_bound: Option<f64>,
}

impl GenerationPmf {
    pub fn cap(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn prob(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// Set when more than half of the mass lies above the cap.
    pub fn cap_too_small(&self) -> bool {
        self.tail_mass > 0.5
    }

    pub fn truncated_mean(&self) -> f64 {
        self.coeffs.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }
}

/// `min(2^16, ceil(8 m^n))`, never below the support bound `d^n` when that is smaller.
pub fn default_cap(law: &OffspringLaw, n: u32) -> usize {
    let target = (8.0 * law.mean().powi(n as i32)).ceil();
    let cap = if target >= MAX_DEFAULT_CAP as f64 { MAX_DEFAULT_CAP } else { target as usize };
    cap.min(support_bound(law, n)).max(1)
}

/// `d^n`, saturating.
pub fn support_bound(law: &OffspringLaw, n: u32) -> usize {
    (law.max_offspring() as u64)
        .checked_pow(n)
        .map_or(usize::MAX, |b| usize::try_from(b).unwrap_or(usize::MAX))
}

/// Coefficients of `f(inner(s))` up to degree `cap`.
pub fn compose_poly(outer: &OffspringLaw, inner: &TruncSeries, cap: usize) -> Result<TruncSeries> {
    crate::series::compose_series(outer.probs(), inner, cap)
}

/// `P(Z_n = k)`, `k <= cap`, by `n`-fold series composition.
pub fn zn_pmf_compose(law: &OffspringLaw, n: u32, cap: usize) -> Result<GenerationPmf> {
    let cap = cap.max(1);
    let mut mult = Multiplier::new();
    let mut series = TruncSeries::identity(cap);
    for t in 1..=n {
        // Z_t <= d^t, so nothing above that degree can be nonzero yet.
        let step_cap = cap.min(support_bound(law, t));
        series = compose_with(&mut mult, law.probs(), &series, step_cap)?;
    }
    series.truncate(cap);
    let coeffs = series.into_coeffs();
    let total: f64 = coeffs.iter().sum();
    if total > 1.0 + 1e-10 {
        return Err(Error::Consistency(format!("pmf sums to {total}")));
    }
    Ok(GenerationPmf {
        n,
        coeffs,
        tail_mass: (1.0 - total).max(0.0),
        method: PmfMethod::Compose,
        alias_bound: None,
    })
}

/// `P(Z_n = k)`, `k < size`, by inverting `f_n` sampled on the `size`-th roots of unity.
pub fn zn_pmf_dft(law: &OffspringLaw, n: u32, size: usize) -> Result<GenerationPmf> {
    if size == 0 || !size.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(size));
    }
    let step = 2.0 * std::f64::consts::PI / size as f64;
    let mut values: Vec<Complex64> = (0..size)
        .map(|j| {
            let z = Complex64::from_polar(1.0, step * j as f64);
            (0..n).fold(z, |w, _| law.poly_complex(w))
        })
        .collect();
    FftPlanner::new().plan_fft_forward(size).process(&mut values);
    let scale = 1.0 / size as f64;
    let mut coeffs = Vec::with_capacity(size);
    for (k, z) in values.iter().enumerate() {
        let p = z.re * scale;
        if p < -1e-12 {
            return Err(Error::Consistency(format!("dft coefficient {k} is {p:e}")));
        }
        coeffs.push(p.max(0.0));
    }
    let alias_bound = (law.mean().powi(n as i32) / size as f64).min(1.0);
    Ok(GenerationPmf {
        n,
        coeffs,
        tail_mass: 0.0,
        method: PmfMethod::Dft,
        alias_bound: Some(alias_bound),
    })
}

/// `P(Z_n >= v)` from a truncated pmf, counting the tail mass above the cap.
pub fn tail_probability(pmf: &GenerationPmf, v: usize) -> Result<f64> {
    if v > pmf.cap() {
        return Err(Error::VBeyondCap { v, cap: pmf.cap() });
    }
    if v == 0 {
        return Ok(1.0);
    }
    Ok(pmf.coeffs[v..].iter().sum::<f64>() + pmf.tail_mass)
}

/// `E(exp(-theta Z_n) | Z_{n-k} >= v)`, through
/// `sum_{j >= v} f_k(e^{-theta})^j P(Z_{n-k} = j) / P(Z_{n-k} >= v)`.
pub fn conditional_laplace(
    law: &OffspringLaw,
    n: u32,
    k: u32,
    v: usize,
    theta: f64,
    cap: Option<usize>,
) -> Result<f64> {
    if k >= n {
        return Err(Error::InvalidArgument(format!("need n > k, got n = {n}, k = {k}")));
    }
    if theta <= 0.0 || theta.is_nan() {
        return Err(Error::InvalidArgument(format!("theta must be positive, got {theta}")));
    }
    let cap = cap.unwrap_or_else(|| default_cap(law, n - k).max(v + 64));
    let pmf = zn_pmf_compose(law, n - k, cap)?;
    conditional_laplace_from(law, &pmf, k, v, theta)
}

/// As [`conditional_laplace`] with a precomputed pmf of `Z_{n-k}`.
pub fn conditional_laplace_from(
    law: &OffspringLaw,
    pmf_lagged: &GenerationPmf,
    k: u32,
    v: usize,
    theta: f64,
) -> Result<f64> {
    let denom = tail_probability(pmf_lagged, v)?;
    if denom <= 0.0 {
        return Err(Error::EmptyConditioningEvent);
    }
    let base = law.iterate_unchecked(k, (-theta).exp());
    let mut power = base.powi(v as i32);
    let mut num = 0.0;
    for &p in &pmf_lagged.coeffs[v..] {
        num += power * p;
        power *= base;
        if power == 0.0 {
            break;
        }
    }
    Ok(num / denom)
}

/// Exact law of `Z_n` given `Z_{n-k} >= v`, truncated at `cap`.
pub fn conditional_pmf(law: &OffspringLaw, n: u32, k: u32, v: usize, cap: usize) -> Result<GenerationPmf> {
    if k > n {
        return Err(Error::InvalidArgument(format!("need n >= k, got n = {n}, k = {k}")));
    }
    let lag_cap = support_bound(law, n - k).min(cap).max(v);
    let lagged = zn_pmf_compose(law, n - k, lag_cap)?;
    let denom = tail_probability(&lagged, v)?;
    if denom <= 0.0 {
        return Err(Error::EmptyConditioningEvent);
    }
    if lagged.tail_mass > 1e-12 {
        return Err(Error::CapTooSmall { tail_mass: lagged.tail_mass });
    }
    let mut outer = lagged.coeffs.clone();
    outer[..v].iter_mut().for_each(|c| *c = 0.0);
    let inner = zn_pmf_compose(law, k, cap)?;
    let inner = TruncSeries::new(inner.coeffs);
    let joint = crate::series::compose_series(&outer, &inner, cap)?;
    let coeffs: Vec<f64> = joint.coeffs().iter().map(|c| c / denom).collect();
    let total: f64 = coeffs.iter().sum();
    Ok(GenerationPmf {
        n,
        coeffs,
        tail_mass: (1.0 - total).max(0.0),
        method: PmfMethod::Compose,
        alias_bound: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn law(spec: &str) -> OffspringLaw {
        OffspringLaw::from_sparse(spec).unwrap()
    }

    #[test]
    fn compose_poly_examples() {
        let l = law("1:0.5,2:0.5");
        // p_1 = 1 is not supercritical, so the identity outer goes through compose_series
        let inner = TruncSeries::new(vec![0.0, 0.3, 0.7]);
        let out = crate::series::compose_series(&[0.0, 1.0], &inner, 2).unwrap();
        assert_eq!(out.coeffs(), inner.coeffs());

        let out = compose_poly(&l, &TruncSeries::identity(2), 2).unwrap();
        assert_eq!(out.coeffs(), &[0.0, 0.5, 0.5]);

        let f = TruncSeries::new(vec![0.0, 0.5, 0.5]);
        let f2 = compose_poly(&l, &f, 4).unwrap();
        let expect = [0.0, 0.25, 0.375, 0.25, 0.125];
        for (a, b) in f2.coeffs().iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn compose_pmf_examples() {
        let l = law("1:0.5,2:0.5");
        let p0 = zn_pmf_compose(&l, 0, 4).unwrap();
        assert_eq!(p0.coeffs, vec![0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(p0.tail_mass, 0.0);

        let lq = law("0:0.25,2:0.75");
        let p1 = zn_pmf_compose(&lq, 1, 5).unwrap();
        assert_eq!(p1.coeffs, vec![0.25, 0.0, 0.75, 0.0, 0.0, 0.0]);

        let p2 = zn_pmf_compose(&l, 2, 4).unwrap();
        let expect = [0.0, 0.25, 0.375, 0.25, 0.125];
        for (a, b) in p2.coeffs.iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn small_cap_sets_flag() {
        let l = law("1:0.5,2:0.5");
        let p = zn_pmf_compose(&l, 6, 3).unwrap();
        assert!(p.cap_too_small());
        assert_abs_diff_eq!(p.coeffs.iter().sum::<f64>() + p.tail_mass, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn dft_examples() {
        let l = law("1:0.5,2:0.5");
        let p = zn_pmf_dft(&l, 1, 8).unwrap();
        let expect = [0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0];
        for (a, b) in p.coeffs.iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
        let p = zn_pmf_dft(&l, 2, 4).unwrap();
        assert_abs_diff_eq!(p.coeffs[0], 0.125, epsilon = 1e-14);
        assert!(matches!(zn_pmf_dft(&l, 2, 12), Err(Error::NotPowerOfTwo(12))));
    }

    #[test]
    fn dft_agrees_with_compose_at_n6() {
        let l = law("1:0.5,2:0.5");
        let a = zn_pmf_compose(&l, 6, 4095).unwrap();
        let b = zn_pmf_dft(&l, 6, 4096).unwrap();
        for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-10);
        }
    }

    #[test]
    fn tail_examples() {
        let l = law("1:0.5,2:0.5");
        let p = zn_pmf_compose(&l, 2, 4).unwrap();
        assert_eq!(tail_probability(&p, 0).unwrap(), 1.0);
        assert_abs_diff_eq!(tail_probability(&p, 3).unwrap(), 0.375, epsilon = 1e-15);
        assert!(matches!(tail_probability(&p, 5), Err(Error::VBeyondCap { .. })));
    }

    #[test]
    fn conditional_laplace_examples() {
        let l = law("1:0.5,2:0.5");
        for theta in [0.3f64, 1.0, 2.5] {
            let direct = l.pgf_iterate(3, (-theta).exp()).unwrap();
            let cond = conditional_laplace(&l, 3, 0, 0, theta, None).unwrap();
            assert_abs_diff_eq!(cond, direct, epsilon = 1e-14);
        }
        let f = 0.5 * (-1.0f64).exp() + 0.5 * (-2.0f64).exp();
        assert_abs_diff_eq!(f, 0.2516074, epsilon = 1e-7);
        let v = conditional_laplace(&l, 2, 1, 2, 1.0, None).unwrap();
        assert_abs_diff_eq!(v, f * f, epsilon = 1e-15);
        assert_abs_diff_eq!(v, 0.0633063, epsilon = 1e-7);
        let tiny = conditional_laplace(&l, 4, 1, 1, 50.0, None).unwrap();
        assert!(tiny < 1e-20);
    }

    #[test]
    fn conditional_laplace_errors() {
        let l = law("2:0.5,3:0.5");
        let e = conditional_laplace(&l, 3, 1, 9, 1.0, Some(8)).unwrap_err();
        assert!(matches!(e, Error::VBeyondCap { .. }));
        let e = conditional_laplace(&l, 3, 1, 10, 1.0, Some(12)).unwrap_err();
        assert_eq!(e, Error::EmptyConditioningEvent);
        assert!(conditional_laplace(&l, 3, 3, 1, 1.0, None).is_err());
    }

    #[test]
    fn conditional_pmf_matches_bayes_by_hand() {
        // Z_1 >= 2 forces Z_1 = 2, so Z_2 | Z_1 >= 2 has the law of two independent offspring.
        let l = law("1:0.5,2:0.5");
        let c = conditional_pmf(&l, 2, 1, 2, 8).unwrap();
        let expect = [0.0, 0.0, 0.25, 0.5, 0.25];
        for (a, b) in c.coeffs.iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }
}
