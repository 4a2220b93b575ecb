//! Truncated power series with real coefficients.
//!
//! Products switch from the schoolbook algorithm to FFT convolution once both
//! operands are longer than [`SCHOOLBOOK_THRESHOLD`].

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub const SCHOOLBOOK_THRESHOLD: usize = 64;

/// Negative coefficients above this magnitude are treated as bugs, not roundoff.
pub const NEGATIVE_ROUNDOFF_LIMIT: f64 = 1e-12;

/// Coefficients `c_0..c_K` of a power series truncated at degree `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncSeries {
    coeffs: Vec<f64>,
}

impl TruncSeries {
    /// Builds a series from coefficients; an empty slice becomes the zero series of cap 0.
    pub fn new(coeffs: Vec<f64>) -> Self {
        if coeffs.is_empty() {
            return Self { coeffs: vec![0.0] };
        }
        Self { coeffs }
    }

    pub fn zero(cap: usize) -> Self {
        Self { coeffs: vec![0.0; cap + 1] }
    }

    /// The identity series `s`, truncated at `cap >= 1`.
    pub fn identity(cap: usize) -> Self {
        let mut s = Self::zero(cap.max(1));
        s.coeffs[1] = 1.0;
        s
    }

    pub fn constant(c: f64, cap: usize) -> Self {
        let mut s = Self::zero(cap);
        s.coeffs[0] = c;
        s
    }

    pub fn cap(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn truncate(&mut self, cap: usize) {
        self.coeffs.resize(cap + 1, 0.0);
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
    }

    /// Clamps roundoff negatives to zero; anything below `-1e-12` is an error.
    pub fn clamp_roundoff(&mut self) -> Result<()> {
        for (k, c) in self.coeffs.iter_mut().enumerate() {
            if *c < 0.0 {
                if *c < -NEGATIVE_ROUNDOFF_LIMIT {
                    return Err(Error::Consistency(format!(
                        "coefficient {k} is {c:e}, below roundoff"
                    )));
                }
                *c = 0.0;
            }
        }
        Ok(())
    }
}

/// `a * b` truncated to degree `cap`.
pub fn series_mul(a: &TruncSeries, b: &TruncSeries, cap: usize) -> TruncSeries {
    Multiplier::new().mul(a, b, cap)
}

/// Schoolbook product, always. Kept public as the reference path.
pub fn series_mul_schoolbook(a: &TruncSeries, b: &TruncSeries, cap: usize) -> TruncSeries {
    let mut out = vec![0.0; cap + 1];
    let (a, b) = (a.coeffs(), b.coeffs());
    for (i, &ai) in a.iter().enumerate().take(cap + 1) {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(cap + 1 - i) {
            out[i + j] += ai * bj;
        }
    }
    TruncSeries { coeffs: out }
}

/// Series multiplier that reuses FFT plans across products.
pub struct Multiplier {
    planner: FftPlanner<f64>,
    threshold: usize,
}

impl Default for Multiplier {
    fn default() -> Self {
        Self::new()
    }
}

impl Multiplier {
    pub fn new() -> Self {
        Self::with_threshold(SCHOOLBOOK_THRESHOLD)
    }

    pub fn with_threshold(threshold: usize) -> Self {
        Self { planner: FftPlanner::new(), threshold }
    }

    pub fn mul(&mut self, a: &TruncSeries, b: &TruncSeries, cap: usize) -> TruncSeries {
        let la = a.coeffs.len().min(cap + 1);
        let lb = b.coeffs.len().min(cap + 1);
        if la.min(lb) <= self.threshold {
            return series_mul_schoolbook(a, b, cap);
        }
        let spectrum = self.spectrum(&b.coeffs[..lb], la + lb - 1);
        self.mul_with_spectrum(&a.coeffs[..la], &spectrum, cap)
    }

    /// Transform of `coeffs` zero-padded to the FFT size used for products of total length `len`.
    pub(crate) fn spectrum(&mut self, coeffs: &[f64], len: usize) -> Spectrum {
        let size = len.next_power_of_two();
        let mut buf: Vec<Complex64> = coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect();
        buf.resize(size, Complex64::new(0.0, 0.0));
        let fwd = self.planner.plan_fft_forward(size);
        fwd.process(&mut buf);
        Spectrum { values: buf, inverse: self.planner.plan_fft_inverse(size) }
    }

    pub(crate) fn mul_with_spectrum(&mut self, a: &[f64], other: &Spectrum, cap: usize) -> TruncSeries {
        let size = other.values.len();
        debug_assert!(a.len() <= size);
        let mut buf: Vec<Complex64> = a.iter().map(|&c| Complex64::new(c, 0.0)).collect();
        buf.resize(size, Complex64::new(0.0, 0.0));
        self.planner.plan_fft_forward(size).process(&mut buf);
        for (x, y) in buf.iter_mut().zip(&other.values) {
            *x *= y;
        }
        other.inverse.process(&mut buf);
        let scale = 1.0 / size as f64;
        let mut out: Vec<f64> = buf.iter().take(cap + 1).map(|z| z.re * scale).collect();
        out.resize(cap + 1, 0.0);
        TruncSeries { coeffs: out }
    }
}

pub(crate) struct Spectrum {
    values: Vec<Complex64>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Spectrum {
    pub(crate) fn size(&self) -> usize {
        self.values.len()
    }
}

/// Composition `outer(inner(s))` truncated at `cap`, by Horner's scheme over series.
///
/// With nonnegative coefficients, coefficient `k` of the result depends only on
/// coefficients `0..=k` of `inner`, so the first `cap + 1` coefficients are exact
/// up to roundoff.
pub fn compose_series(outer: &[f64], inner: &TruncSeries, cap: usize) -> Result<TruncSeries> {
    let mut mult = Multiplier::new();
    compose_with(&mut mult, outer, inner, cap)
}

pub(crate) fn compose_with(
    mult: &mut Multiplier,
    outer: &[f64],
    inner: &TruncSeries,
    cap: usize,
) -> Result<TruncSeries> {
    let degree = match outer.iter().rposition(|&c| c != 0.0) {
        Some(d) => d,
        None => return Ok(TruncSeries::zero(cap)),
    };
    let inner_len = inner.coeffs.len().min(cap + 1);
    let inner_view = &inner.coeffs[..inner_len];
    let mut acc = TruncSeries::constant(outer[degree], cap);
    let use_fft = inner_len > mult.threshold;
    let spectrum = if use_fft {
        Some(mult.spectrum(inner_view, cap + inner_len))
    } else {
        None
    };
    let inner_trunc = TruncSeries { coeffs: inner_view.to_vec() };
    for j in (0..degree).rev() {
        acc = match &spectrum {
            Some(sp) if acc.coeffs.len() + inner_len - 1 <= sp.size() => {
                mult.mul_with_spectrum(&acc.coeffs, sp, cap)
            }
            _ => mult.mul(&acc, &inner_trunc, cap),
        };
        acc.coeffs[0] += outer[j];
        acc.clamp_roundoff()?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    #[test]
    fn binomial_square() {
        let a = TruncSeries::new(vec![1.0, 1.0]);
        assert_eq!(series_mul(&a, &a, 2).coeffs(), &[1.0, 2.0, 1.0]);
        assert_eq!(series_mul(&a, &a, 1).coeffs(), &[1.0, 2.0]);
        assert_eq!(series_mul(&a, &a, 4).coeffs(), &[1.0, 2.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn fft_matches_schoolbook_degree_200() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
        let a = TruncSeries::new((0..=200).map(|_| rng.random::<f64>()).collect());
        let b = TruncSeries::new((0..=200).map(|_| rng.random::<f64>()).collect());
        let slow = series_mul_schoolbook(&a, &b, 400);
        let fast = Multiplier::with_threshold(0).mul(&a, &b, 400);
        let scale = slow.coeffs().iter().cloned().fold(0.0, f64::max);
        for (x, y) in slow.coeffs().iter().zip(fast.coeffs()) {
            assert!((x - y).abs() <= 1e-12 * scale, "{x} vs {y}");
        }
        // the default multiplier takes the FFT path at this size
        let auto = series_mul(&a, &b, 300);
        for (x, y) in slow.coeffs().iter().zip(auto.coeffs()) {
            assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn compose_identity_outer() {
        let inner = TruncSeries::new(vec![0.1, 0.2, 0.3, 0.4]);
        let out = compose_series(&[0.0, 1.0], &inner, 3).unwrap();
        assert_eq!(out.coeffs(), inner.coeffs());
    }

    #[test]
    fn compose_with_fft_matches_schoolbook() {
        let inner = TruncSeries::new((0..300).map(|k| if k == 0 { 0.0 } else { 1.0 / (k * k) as f64 }).collect());
        let outer = [0.0, 0.3, 0.2, 0.5];
        let fast = compose_series(&outer, &inner, 299).unwrap();
        let mut slow = TruncSeries::constant(0.5, 299);
        for j in (0..3).rev() {
            slow = series_mul_schoolbook(&slow, &inner, 299);
            slow.coeffs[0] += outer[j];
        }
        for (x, y) in slow.coeffs().iter().zip(fast.coeffs()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-13);
        }
    }

    #[test]
    fn clamp_rejects_large_negatives() {
        let mut s = TruncSeries::new(vec![0.5, -1e-15, 0.5]);
        s.clamp_roundoff().unwrap();
        assert_eq!(s.coeffs()[1], 0.0);
        let mut bad = TruncSeries::new(vec![0.5, -1e-6]);
        assert!(matches!(bad.clamp_roundoff(), Err(Error::Consistency(_))));
    }
}
