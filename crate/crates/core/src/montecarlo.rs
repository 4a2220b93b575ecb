//! Seeded simulation of Galton-Watson trajectories.
//!
//! Replicate `i` draws from its own generator, seeded from `(seed, i)`, and
//! replicates are grouped into fixed-size chunks whose partial results are
//! merged in chunk order. Results therefore do not depend on the worker count.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gen_dist::{support_bound, zn_pmf_compose, MAX_DEFAULT_CAP};
use crate::offspring::OffspringLaw;

pub type SimRng = Xoshiro256PlusPlus;

/// Walker/Vose alias table over the support of an offspring law.
///
/// One 64-bit draw picks the column (high half of a 128-bit product) and the
/// acceptance fraction (low half).
#[derive(Debug, Clone)]
pub struct AliasTable {
    values: Vec<u32>,
    threshold: Vec<u64>,
    alias: Vec<u32>,
}

impl AliasTable {
    pub fn new(law: &OffspringLaw) -> Self {
        let values: Vec<u32> = law.support().map(|j| j as u32).collect();
        let len = values.len();
        let mut scaled: Vec<f64> = values.iter().map(|&j| law.p(j as usize) * len as f64).collect();
        let mut alias: Vec<u32> = (0..len as u32).collect();
        let mut threshold = vec![u64::MAX; len];
        let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..len).partition(|&i| scaled[i] < 1.0);
        while let (Some(s), Some(&l)) = (small.pop(), large.last()) {
            threshold[s] = to_fraction(scaled[s]);
            alias[s] = l as u32;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // leftovers are 1 up to roundoff and keep their own column
        Self { values, threshold, alias }
    }

    #[inline]
    pub fn sample<R: RngCore>(&self, rng: &mut R) -> u32 {
        let wide = rng.next_u64() as u128 * self.values.len() as u128;
        let col = (wide >> 64) as usize;
        let frac = wide as u64;
        if frac < self.threshold[col] {
            self.values[col]
        } else {
            self.values[self.alias[col] as usize]
        }
    }

    /// Total offspring of `parents` individuals.
    #[inline]
    pub fn sum<R: RngCore>(&self, rng: &mut R, parents: u64) -> u64 {
        (0..parents).map(|_| self.sample(rng) as u64).sum()
    }
}

fn to_fraction(p: f64) -> u64 {
    if p >= 1.0 {
        u64::MAX
    } else {
        (p * 18_446_744_073_709_551_616.0) as u64
    }
}

/// Generator for replicate `index` under `seed`.
pub fn replicate_rng(seed: u64, index: u64) -> SimRng {
    SimRng::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17))
}

pub const DEFAULT_POPULATION_CAP: u64 = 10_000_000;
const CHUNK: u64 = 1024;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub seed: u64,
    pub replicates: u64,
    /// Horizon.
    pub n: u32,
    pub population_cap: u64,
    /// Worker threads; 0 means one per core.
    #[serde(skip)]
    pub workers: usize,
}

impl SimConfig {
    pub fn new(seed: u64, replicates: u64, n: u32) -> Self {
        Self { seed, replicates, n, population_cap: DEFAULT_POPULATION_CAP, workers: 0 }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidArgument("replicates must be at least 1".into()));
        }
        if self.population_cap == 0 {
            return Err(Error::InvalidArgument("population cap must be at least 1".into()));
        }
        Ok(())
    }
}

/// Runs `step` once per replicate and folds chunk accumulators in chunk order.
fn run_replicates<A, I, S, M>(cfg: &SimConfig, init: I, step: S, merge: M) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    S: Fn(&mut A, &mut SimRng) + Sync,
    M: Fn(&mut A, A),
{
    cfg.validate()?;
    let chunks = cfg.replicates.div_ceil(CHUNK);
    let work = || {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = init();
                let end = ((c + 1) * CHUNK).min(cfg.replicates);
                for i in c * CHUNK..end {
                    let mut rng = replicate_rng(cfg.seed, i);
                    step(&mut acc, &mut rng);
                }
                acc
            })
            .collect::<Vec<A>>()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let parts = pool.install(work);
    let mut parts = parts.into_iter();
    let mut total = parts.next().unwrap_or_else(&init);
    for p in parts {
        merge(&mut total, p);
    }
    Ok(total)
}

/// Fills `out` with `Z_0..=Z_n`. Extinct trajectories are padded with zeros.
fn simulate_into(
    table: &AliasTable,
    n: u32,
    cap: u64,
    rng: &mut SimRng,
    out: &mut Vec<u64>,
) -> Result<()> {
    out.clear();
    out.push(1);
    let mut z = 1u64;
    for _ in 0..n {
        z = table.sum(rng, z);
        if z > cap {
            return Err(Error::CapExceeded { cap });
        }
        out.push(z);
    }
    Ok(())
}

/// One trajectory `Z_0..=Z_n`.
pub fn simulate_trajectory(law: &OffspringLaw, n: u32, population_cap: u64, rng: &mut SimRng) -> Result<Vec<u64>> {
    let table = AliasTable::new(law);
    let mut out = Vec::with_capacity(n as usize + 1);
    simulate_into(&table, n, population_cap, rng, &mut out)?;
    Ok(out)
}

/// `sum > a count`, the event `R > a` for a ratio `sum / count`. Shared by the
/// simulated and exact paths so both see the same boundary.
#[inline]
pub fn exceeds(sum: u64, count: u64, a: f64) -> bool {
    sum as f64 > a * count as f64
}

/// Binomial proportion with provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub hits: u64,
    pub trials: u64,
    pub seed: u64,
    /// Trajectories dropped because a generation exceeded the population cap.
    pub discarded_cap: u64,
}

impl McEstimate {
    fn binomial(hits: u64, trials: u64, seed: u64, discarded_cap: u64) -> Self {
        let value = if trials == 0 { f64::NAN } else { hits as f64 / trials as f64 };
        let stderr = (value * (1.0 - value) / trials as f64).sqrt();
        Self { value, stderr, hits, trials, seed, discarded_cap }
    }
}

#[derive(Debug, Clone, Default)]
struct Tally {
    hits: Vec<u64>,
    trials: Vec<u64>,
    discarded: u64,
}

impl Tally {
    fn new(len: usize) -> Self {
        Self { hits: vec![0; len], trials: vec![0; len], discarded: 0 }
    }

    fn merge(&mut self, other: Tally) {
        for (a, b) in self.hits.iter_mut().zip(other.hits) {
            *a += b;
        }
        for (a, b) in self.trials.iter_mut().zip(other.trials) {
            *a += b;
        }
        self.discarded += other.discarded;
    }
}

fn require_above_mean(law: &OffspringLaw, a: f64) -> Result<()> {
    if !(a > law.mean()) {
        return Err(Error::InvalidArgument(format!("threshold a = {a} must exceed the mean {}", law.mean())));
    }
    Ok(())
}

/// `P(R_n > a | Z_n > 0)` with `n = cfg.n`.
pub fn estimate_rn_tail(law: &OffspringLaw, a: f64, cfg: &SimConfig) -> Result<McEstimate> {
    let mut curve = estimate_rn_tail_curve(law, cfg.n, cfg.n, a, cfg)?;
    Ok(curve.remove(0))
}

/// `P(R_n > a | Z_n > 0)` for every `n` in `n_min..=n_max`, all read off the
/// same trajectories (simulated to generation `n_max + 1`).
pub fn estimate_rn_tail_curve(
    law: &OffspringLaw,
    n_min: u32,
    n_max: u32,
    a: f64,
    cfg: &SimConfig,
) -> Result<Vec<McEstimate>> {
    require_above_mean(law, a)?;
    if n_min > n_max {
        return Err(Error::InvalidArgument(format!("empty range {n_min}..={n_max}")));
    }
    let table = AliasTable::new(law);
    let len = (n_max - n_min + 1) as usize;
    let tally = run_replicates(
        cfg,
        || (Tally::new(len), Vec::new()),
        |(t, buf), rng| {
            if simulate_into(&table, n_max + 1, cfg.population_cap, rng, buf).is_err() {
                t.discarded += 1;
                return;
            }
            for (i, n) in (n_min..=n_max).enumerate() {
                let (zn, next) = (buf[n as usize], buf[n as usize + 1]);
                if zn > 0 {
                    t.trials[i] += 1;
                    t.hits[i] += exceeds(next, zn, a) as u64;
                }
            }
        },
        |(t, _), (o, _)| t.merge(o),
    )?
    .0;
    if tally.trials.contains(&0) {
        return Err(Error::NoSurvivors);
    }
    Ok((0..len)
        .map(|i| McEstimate::binomial(tally.hits[i], tally.trials[i], cfg.seed, tally.discarded))
        .collect())
}

/// Exact `P(R_n > a | Z_n > 0)` from the pmf of `Z_n` and running
/// self-convolutions of the offspring law.
pub fn exact_rn_tail(law: &OffspringLaw, n: u32, a: f64) -> Result<f64> {
    let cap = support_bound(law, n).min(MAX_DEFAULT_CAP);
    let pmf = zn_pmf_compose(law, n, cap)?;
    if pmf.tail_mass > 1e-12 {
        return Err(Error::CapTooSmall { tail_mass: pmf.tail_mass });
    }
    let survive = 1.0 - pmf.coeffs[0];
    if survive <= 0.0 {
        return Err(Error::NoSurvivors);
    }
    let last = pmf.coeffs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let probs = law.probs();
    let mut conv = vec![1.0];
    let mut total = 0.0;
    for j in 1..=last {
        let mut next = vec![0.0; conv.len() + probs.len() - 1];
        for (s, &c) in conv.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (i, &p) in probs.iter().enumerate() {
                next[s + i] += c * p;
            }
        }
        conv = next;
        let pj = pmf.coeffs[j];
        if pj > 0.0 {
            let tail: f64 = conv
                .iter()
                .enumerate()
                .filter(|&(s, _)| exceeds(s as u64, j as u64, a))
                .map(|(_, &p)| p)
                .sum();
            total += pj * tail;
        }
    }
    Ok(total / survive)
}

/// An estimate under rejection sampling on `Z_{n-k} >= v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionalEstimate {
    pub estimate: McEstimate,
    pub accepted: u64,
    pub acceptance_rate: f64,
}

pub const MIN_ACCEPTANCE: f64 = 1e-4;

fn check_lag(cfg: &SimConfig, k: u32) -> Result<()> {
    if k >= cfg.n {
        return Err(Error::InvalidArgument(format!("need n > k, got n = {}, k = {k}", cfg.n)));
    }
    Ok(())
}

fn check_acceptance(accepted: u64, cfg: &SimConfig) -> Result<f64> {
    let rate = accepted as f64 / cfg.replicates as f64;
    if rate < MIN_ACCEPTANCE {
        return Err(Error::AcceptanceTooLow { rate });
    }
    Ok(rate)
}

/// `P(R_n > a | Z_{n-k} >= v)` by rejection sampling; `n = cfg.n`.
pub fn estimate_conditional_ldp(
    law: &OffspringLaw,
    k: u32,
    v: u64,
    a: f64,
    cfg: &SimConfig,
) -> Result<ConditionalEstimate> {
    check_lag(cfg, k)?;
    let table = AliasTable::new(law);
    let n = cfg.n;
    let lag = (n - k) as usize;
    // tally slots: [hits, trials, accepted]
    let tally = run_replicates(
        cfg,
        || (Tally::new(3), Vec::new()),
        |(t, buf), rng| {
            if simulate_into(&table, n - k, cfg.population_cap, rng, buf).is_err() {
                t.discarded += 1;
                return;
            }
            if buf[lag] < v {
                return;
            }
            t.hits[2] += 1;
            let mut z = buf[lag];
            for _ in 0..k {
                z = table.sum(rng, z);
                if z > cfg.population_cap {
                    t.discarded += 1;
                    return;
                }
            }
            if z == 0 {
                return;
            }
            let next = table.sum(rng, z);
            t.trials[0] += 1;
            t.hits[0] += exceeds(next, z, a) as u64;
        },
        |(t, _), (o, _)| t.merge(o),
    )?
    .0;
    let accepted = tally.hits[2];
    let acceptance_rate = check_acceptance(accepted, cfg)?;
    if tally.trials[0] == 0 {
        return Err(Error::NoSurvivors);
    }
    Ok(ConditionalEstimate {
        estimate: McEstimate::binomial(tally.hits[0], tally.trials[0], cfg.seed, tally.discarded),
        accepted,
        acceptance_rate,
    })
}

/// Normalized histogram over `0..probs.len()`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalPmf {
    pub probs: Vec<f64>,
    /// Number of samples in the histogram.
    pub samples: u64,
    pub discarded_cap: u64,
}

impl EmpiricalPmf {
    fn from_counts(counts: Vec<u64>, discarded_cap: u64) -> Result<Self> {
        let samples: u64 = counts.iter().sum();
        if samples == 0 {
            return Err(Error::NoHits);
        }
        let last = counts.iter().rposition(|&c| c > 0).unwrap_or(0);
        let probs = counts[..=last].iter().map(|&c| c as f64 / samples as f64).collect();
        Ok(Self { probs, samples, discarded_cap })
    }

    /// Smallest `k` with `P(<= k) >= 1/2`.
    pub fn median(&self) -> usize {
        let mut acc = 0.0;
        for (k, p) in self.probs.iter().enumerate() {
            acc += p;
            if acc >= 0.5 {
                return k;
            }
        }
        self.probs.len() - 1
    }
}

/// Total-variation distance between two pmfs given on `0..len`.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    0.5 * (0..len).map(|i| (at(a, i) - at(b, i)).abs()).sum::<f64>()
}

fn bump(counts: &mut Vec<u64>, z: u64) {
    let z = z as usize;
    if counts.len() <= z {
        counts.resize(z + 1, 0);
    }
    counts[z] += 1;
}

fn merge_counts(a: &mut Vec<u64>, b: Vec<u64>) {
    if a.len() < b.len() {
        a.resize(b.len(), 0);
    }
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

/// Law of `Z_n` given `Z_{n-k} >= v`, by rejection sampling; `n = cfg.n`.
pub fn conditional_pmf_empirical(law: &OffspringLaw, k: u32, v: u64, cfg: &SimConfig) -> Result<EmpiricalPmf> {
    check_lag(cfg, k)?;
    let table = AliasTable::new(law);
    let n = cfg.n;
    let lag = (n - k) as usize;
    let (counts, discarded, _) = run_replicates(
        cfg,
        || (Vec::new(), 0u64, Vec::new()),
        |(counts, discarded, buf), rng| {
            if simulate_into(&table, n - k, cfg.population_cap, rng, buf).is_err() {
                *discarded += 1;
                return;
            }
            if buf[lag] < v {
                return;
            }
            let mut z = buf[lag];
            for _ in 0..k {
                z = table.sum(rng, z);
                if z > cfg.population_cap {
                    *discarded += 1;
                    return;
                }
            }
            bump(counts, z);
        },
        |(c, d, _), (oc, od, _)| {
            merge_counts(c, oc);
            *d += od;
        },
    )?;
    let accepted: u64 = counts.iter().sum();
    check_acceptance(accepted, cfg)?;
    EmpiricalPmf::from_counts(counts, discarded)
}

/// Histogram of `Z_n` among trajectories with `R_n >= a`; `n = cfg.n`.
pub fn empirical_ak(law: &OffspringLaw, a: f64, cfg: &SimConfig) -> Result<EmpiricalPmf> {
    require_above_mean(law, a)?;
    let table = AliasTable::new(law);
    let n = cfg.n as usize;
    let (counts, discarded, _) = run_replicates(
        cfg,
        || (Vec::new(), 0u64, Vec::new()),
        |(counts, discarded, buf), rng| {
            if simulate_into(&table, cfg.n + 1, cfg.population_cap, rng, buf).is_err() {
                *discarded += 1;
                return;
            }
            let (zn, next) = (buf[n], buf[n + 1]);
            if zn > 0 && next as f64 >= a * zn as f64 {
                bump(counts, zn);
            }
        },
        |(c, d, _), (oc, od, _)| {
            merge_counts(c, oc);
            *d += od;
        },
    )?;
    EmpiricalPmf::from_counts(counts, discarded)
}

/// Replicates of `W_n = Z_n / m^n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WSample {
    pub n: u32,
    pub samples: Vec<f64>,
    pub mean: f64,
    pub stderr: f64,
    /// Boettcher laws: slope of `-log P(W_n <= x)` against `x^(-beta/(1-beta))`
    /// over the lower decile.
    pub left_tail_slope: Option<f64>,
    pub discarded_cap: u64,
}

impl WSample {
    /// Empirical `P(W_n <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.samples.iter().filter(|&&w| w <= x).count() as f64 / self.samples.len() as f64
    }

    /// Empirical quantile at level `p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let mut sorted = self.samples.clone();
        sorted.sort_by(f64::total_cmp);
        let idx = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
        sorted[idx]
    }
}

/// Samples of `W_n` with `n = cfg.n`, in replicate order.
pub fn empirical_w(law: &OffspringLaw, cfg: &SimConfig) -> Result<WSample> {
    let table = AliasTable::new(law);
    let n = cfg.n;
    let scale = law.mean().powi(-(n as i32));
    let (samples, discarded, _) = run_replicates(
        cfg,
        || (Vec::new(), 0u64, Vec::new()),
        |(s, d, buf), rng| match simulate_into(&table, n, cfg.population_cap, rng, buf) {
            Ok(()) => s.push(buf[n as usize] as f64 * scale),
            Err(_) => *d += 1,
        },
        |(s, d, _), (os, od, _)| {
            s.extend(os);
            *d += od;
        },
    )?;
    if samples.is_empty() {
        return Err(Error::NoSurvivors);
    }
    let len = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / len;
    let var = samples.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (len - 1.0).max(1.0);
    let cls = crate::classify(law);
    let left_tail_slope = cls.beta.and_then(|beta| left_tail_slope(&samples, beta));
    Ok(WSample { n, samples, mean, stderr: (var / len).sqrt(), left_tail_slope, discarded_cap: discarded })
}

fn left_tail_slope(samples: &[f64], beta: f64) -> Option<f64> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let total = sorted.len() as f64;
    let decile = (sorted.len() / 10).max(1);
    let exponent = -beta / (1.0 - beta);
    let mut points = Vec::new();
    let mut i = 0;
    while i < decile {
        let x = sorted[i];
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == x {
            j += 1;
        }
        if x > 0.0 {
            let cdf = (j + 1) as f64 / total;
            points.push((x.powf(exponent), -cdf.ln()));
        }
        i = j + 1;
    }
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// One draw of `t -> R_n(t) = Z_n^-1 sum_{i <= floor(t Z_n)} xi_{n,i}` on `grid`.
pub fn sample_rn_path(
    law: &OffspringLaw,
    n: u32,
    grid: &[f64],
    population_cap: u64,
    rng: &mut SimRng,
) -> Result<Vec<(f64, f64)>> {
    if grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::InvalidArgument("path grid must lie in [0, 1]".into()));
    }
    let table = AliasTable::new(law);
    let mut buf = Vec::new();
    simulate_into(&table, n, population_cap, rng, &mut buf)?;
    let zn = buf[n as usize];
    if zn == 0 {
        return Err(Error::NoSurvivors);
    }
    if zn > population_cap {
        return Err(Error::CapExceeded { cap: population_cap });
    }
    let mut partial = Vec::with_capacity(zn as usize + 1);
    partial.push(0u64);
    let mut acc = 0u64;
    for _ in 0..zn {
        acc += table.sample(rng) as u64;
        partial.push(acc);
    }
    Ok(grid
        .iter()
        .map(|&t| {
            let idx = ((t * zn as f64).floor() as usize).min(zn as usize);
            (t, partial[idx] as f64 / zn as f64)
        })
        .collect())
}
