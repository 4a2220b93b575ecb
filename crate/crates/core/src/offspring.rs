//! Finite-support offspring laws and the scalar constants derived from them.
//!
//! A law is stored as its dense mass vector `p_0..p_d` with `p_d > 0`. All the
//! constants the rest of the crate needs (mean, extinction probability `q`,
//! `gamma = f'(q)`, the Schroeder exponent `alpha`, the minimal family size `j0`
//! and the Boettcher exponent `beta`) are computed once by [`classify`].

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Input sums further than this from one are rejected.
pub const MASS_SUM_TOLERANCE: f64 = 1e-9;
/// Slack allowed on `|s| <= 1` when evaluating a pgf.
pub const UNIT_DISC_SLACK: f64 = 1e-12;

/// A supercritical offspring distribution with finite support.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OffspringLaw {
    probs: Vec<f64>,
    #[serde(skip)]
    mean: f64,
}

impl OffspringLaw {
    /// Validates and normalizes a dense mass vector indexed by offspring count.
    pub fn new(masses: &[f64]) -> Result<Self> {
        for (index, &value) in masses.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFiniteMass { index });
            }
            if value < 0.0 {
                return Err(Error::NegativeMass { index, value });
            }
        }
        let last = masses.iter().rposition(|&p| p > 0.0);
        let d = match last {
            Some(d) if d >= 1 => d,
            _ => return Err(Error::Degenerate),
        };
        let sum: f64 = masses.iter().sum();
        if (sum - 1.0).abs() > MASS_SUM_TOLERANCE {
            return Err(Error::MassSumOutOfTolerance { sum });
        }
        let probs: Vec<f64> = masses[..=d].iter().map(|p| p / sum).collect();
        let mean = probs.iter().enumerate().map(|(j, p)| j as f64 * p).sum();
        if mean <= 1.0 {
            return Err(Error::Subcritical { mean });
        }
        Ok(Self { probs, mean })
    }

    /// Parses the sparse `index:mass,index:mass` syntax, e.g. `0:0.25,2:0.75`.
    pub fn from_sparse(spec: &str) -> Result<Self> {
        let mut dense: Vec<f64> = Vec::new();
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (idx, mass) = item
                .split_once(':')
                .ok_or_else(|| Error::InvalidArgument(format!("expected index:mass, got `{item}`")))?;
            let idx: usize = idx
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad offspring index `{idx}`")))?;
            let mass: f64 = mass
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad mass `{mass}`")))?;
            if dense.len() <= idx {
                dense.resize(idx + 1, 0.0);
            }
            dense[idx] += mass;
        }
        Self::new(&dense)
    }

    /// Parses a JSON object of the form `{"probs": [p_0, p_1, ...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct LawFile {
            probs: Vec<f64>,
        }
        let file: LawFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("law JSON: {e}")))?;
        Self::new(&file.probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Maximal offspring count `d`.
    pub fn max_offspring(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn p(&self, j: usize) -> f64 {
        self.probs.get(j).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Offspring variance `f''(1) + m - m^2`.
    pub fn variance(&self) -> f64 {
        let second: f64 = self
            .probs
            .iter()
            .enumerate()
            .map(|(j, p)| (j * j) as f64 * p)
            .sum();
        second - self.mean * self.mean
    }

    /// Smallest `j` with `p_j > 0`.
    pub fn min_offspring(&self) -> usize {
        self.probs.iter().position(|&p| p > 0.0).unwrap_or(0)
    }

    /// Support points `j` with `p_j > 0`.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(j, _)| j)
    }

    /// Lattice span of the support: gcd of the differences between support points.
    pub fn span(&self) -> usize {
        let j0 = self.min_offspring();
        self.support().fold(0, |g, j| gcd(g, j - j0))
    }

    /// Residue of `Z_n` modulo [`span`](Self::span). Every attainable value of
    /// `Z_n` (including 0 when `p_0 > 0`) is congruent to it.
    pub fn generation_residue(&self, n: u32) -> usize {
        let d = self.span();
        if d <= 1 {
            return 0;
        }
        let r1 = self.min_offspring() % d;
        let mut r = 1 % d;
        for _ in 0..n {
            r = (r * r1) % d;
        }
        r
    }

    /// Polynomial evaluation of `f` anywhere on the real line (no domain check).
    pub fn poly(&self, s: f64) -> f64 {
        self.probs.iter().rev().fold(0.0, |acc, &p| acc * s + p)
    }

    /// `f'(s)` anywhere on the real line.
    pub fn poly_derivative(&self, s: f64) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (j, &p)| acc * s + j as f64 * p)
    }

    /// `f(z)` for complex `z` (no domain check).
    pub fn poly_complex(&self, z: Complex64) -> Complex64 {
        self.probs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &p| acc * z + p)
    }

    /// The probability generating function `f(s) = sum_j p_j s^j` for `|s| <= 1`.
    pub fn pgf(&self, s: f64) -> Result<f64> {
        check_disc(s.abs())?;
        Ok(self.poly(s))
    }

    pub fn pgf_complex(&self, z: Complex64) -> Result<Complex64> {
        check_disc(z.norm())?;
        Ok(self.poly_complex(z))
    }

    pub fn pgf_derivative(&self, s: f64) -> Result<f64> {
        check_disc(s.abs())?;
        Ok(self.poly_derivative(s))
    }

    /// The `n`-th functional iterate `f_n(s)`, the pgf of `Z_n`; `f_0(s) = s`.
    pub fn pgf_iterate(&self, n: u32, s: f64) -> Result<f64> {
        check_disc(s.abs())?;
        Ok(self.iterate_unchecked(n, s))
    }

    pub fn pgf_iterate_complex(&self, n: u32, z: Complex64) -> Result<Complex64> {
        check_disc(z.norm())?;
        Ok((0..n).fold(z, |w, _| self.poly_complex(w)))
    }

    pub(crate) fn iterate_unchecked(&self, n: u32, s: f64) -> f64 {
        (0..n).fold(s, |x, _| self.poly(x))
    }

    /// Coefficients of `x -> f(a + x)`, by repeated synthetic division.
    pub fn shifted_coeffs(&self, a: f64) -> Vec<f64> {
        let mut c = self.probs.clone();
        let d = c.len() - 1;
        for i in 0..d {
            for j in (i..d).rev() {
                c[j] += a * c[j + 1];
            }
        }
        c
    }

    /// `log f(s)` given `log s`, evaluated with log-sum-exp so that arguments far
    /// below the smallest positive double stay representable.
    pub fn log_pgf(&self, log_s: f64) -> f64 {
        let terms = self
            .probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(j, &p)| p.ln() + if j == 0 { 0.0 } else { j as f64 * log_s });
        log_sum_exp(terms)
    }

    /// `log f_n(s)` given `log s`, iterating [`log_pgf`](Self::log_pgf).
    pub fn log_pgf_iterate(&self, n: u32, log_s: f64) -> f64 {
        (0..n).fold(log_s, |x, _| self.log_pgf(x))
    }
}

impl fmt::Display for OffspringLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(j, p)| format!("{j}:{p}"))
            .collect();
        f.write_str(&parts.join(","))
    }
}

fn check_disc(modulus: f64) -> Result<()> {
    if modulus > 1.0 + UNIT_DISC_SLACK || modulus.is_nan() {
        return Err(Error::OutsideUnitDisc { modulus });
    }
    Ok(())
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn log_sum_exp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + terms.map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Smallest fixed point of `f` on `[0, 1)`.
///
/// Monotone iteration from 0 until the increment drops below 1e-14, followed by
/// a single Newton step that is kept only if it stays in `[0, 1)` and lowers the
/// residual.
pub fn extinction_probability(law: &OffspringLaw) -> f64 {
    if law.p(0) == 0.0 {
        return 0.0;
    }
    let mut q = 0.0_f64;
    for _ in 0..10_000_000 {
        let next = law.poly(q);
        let step = next - q;
        q = next;
        if step < 1e-14 {
            break;
        }
    }
    let slope = law.poly_derivative(q) - 1.0;
    if slope < 0.0 {
        let polished = q - (law.poly(q) - q) / slope;
        if (0.0..1.0).contains(&polished)
            && (law.poly(polished) - polished).abs() <= (law.poly(q) - q).abs()
        {
            q = polished;
        }
    }
    q
}

/// Growth regime fixed by the Schroeder exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `alpha < 1`, equivalently `gamma * m > 1`.
    SchroederSub,
    /// `alpha = 1`.
    SchroederCritical,
    /// `1 < alpha < inf`.
    SchroederSuper,
    /// `alpha = inf`: minimal family size at least two.
    Boettcher,
}

impl Regime {
    pub fn is_boettcher(self) -> bool {
        self == Regime::Boettcher
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Regime::SchroederSub => "SchroederSub",
            Regime::SchroederCritical => "SchroederCritical",
            Regime::SchroederSuper => "SchroederSuper",
            Regime::Boettcher => "Boettcher",
        };
        f.write_str(name)
    }
}

/// Tolerance on `gamma * m - 1` for calling a law critical.
pub const CRITICAL_TOLERANCE: f64 = 1e-12;

/// Derived constants of an offspring law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub m: f64,
    pub q: f64,
    pub gamma: f64,
    /// `+inf` in the Boettcher case.
    pub alpha: f64,
    pub j0: usize,
    /// `log j0 / log m`, Boettcher laws only.
    pub beta: Option<f64>,
    pub regime: Regime,
}

impl Classification {
    pub fn is_boettcher(&self) -> bool {
        self.regime.is_boettcher()
    }
}

pub fn classify(law: &OffspringLaw) -> Classification {
    let m = law.mean();
    let q = extinction_probability(law);
    let gamma = if q == 0.0 { law.p(1) } else { law.poly_derivative(q) };
    let j0 = law.min_offspring();
    let (alpha, beta, regime) = if gamma == 0.0 {
        let beta = (j0 as f64).ln() / m.ln();
        (f64::INFINITY, Some(beta), Regime::Boettcher)
    } else {
        let alpha = -gamma.ln() / m.ln();
        let product = gamma * m - 1.0;
        let regime = if product.abs() <= CRITICAL_TOLERANCE {
            Regime::SchroederCritical
        } else if product > 0.0 {
            Regime::SchroederSub
        } else {
            Regime::SchroederSuper
        };
        (alpha, None, regime)
    };
    Classification { m, q, gamma, alpha, j0, beta, regime }
}
