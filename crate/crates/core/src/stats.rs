//! Randomness tests: monobit, runs, byte chi-square and lag autocorrelation,
//! plus histograms and chi-square goodness of fit against a CDF.
//!
//! Every test returns a [`TestReport`] whose verdict is `Pass` exactly when
//! `p_value >= alpha`. The runs test is gated on bit balance and reports
//! `NotApplicable` when the gate fails.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{checked_gamma_lr, checked_gamma_ur};

use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.01;
pub const MIN_BITS: usize = 100;
/// Five expected observations in each of 256 byte bins.
pub const MIN_CHI_SQUARE_BITS: usize = 256 * 8 * 5;
pub const MIN_LAG_SAMPLES: usize = 100;

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) || x.is_nan() || x < 0.0 {
        return Err(Error::invalid(format!("gamma_q undefined at a={a}, x={x}")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x == f64::INFINITY {
        return Ok(0.0);
    }
    checked_gamma_ur(a, x).map_err(|e| Error::invalid(e.to_string()))
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) || x.is_nan() || x < 0.0 {
        return Err(Error::invalid(format!("gamma_p undefined at a={a}, x={x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(1.0);
    }
    checked_gamma_lr(a, x).map_err(|e| Error::invalid(e.to_string()))
}

/// Complementary error function, `erfc(x) = Q(1/2, x^2)` for `x >= 0`.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    let x2 = x * x;
    if x2 < 0.5 {
        1.0 - gamma_p(0.5, x2).expect("valid arguments")
    } else {
        gamma_q(0.5, x2).expect("valid arguments")
    }
}

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
pub fn chi_square_sf(statistic: f64, dof: f64) -> Result<f64> {
    gamma_q(dof / 2.0, statistic / 2.0)
}

/// Bits packed most-significant-first; trailing pad bits are ignored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitStream {
    bytes: Vec<u8>,
    len: usize,
}

impl BitStream {
    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self> {
        let len = bytes.len() * 8;
        Self::from_packed(bytes, len)
    }

    /// Uses the first `len` bits of `bytes`.
    pub fn from_packed(mut bytes: Vec<u8>, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::invalid("bit stream is empty"));
        }
        if len > bytes.len() * 8 {
            return Err(Error::invalid(format!(
                "{len} bits requested from {} bytes",
                bytes.len()
            )));
        }
        bytes.truncate(len.div_ceil(8));
        if len % 8 != 0 {
            let last = bytes.len() - 1;
            bytes[last] &= 0xFFu8 << (8 - len % 8);
        }
        Ok(BitStream { bytes, len })
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let mut bytes = vec![0u8; bits.len().div_ceil(8)];
        for (i, &b) in bits.iter().enumerate() {
            if b {
                bytes[i / 8] |= 0x80 >> (i % 8);
            }
        }
        Self::from_packed(bytes, bits.len())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range");
        self.bytes[i / 8] & (0x80 >> (i % 8)) != 0
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.bit(i))
    }

    pub fn ones(&self) -> usize {
        // Pad bits are cleared at construction.
        self.bytes.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// Whole bytes only.
    pub fn full_bytes(&self) -> &[u8] {
        &self.bytes[..self.len / 8]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test: String,
    pub n: u64,
    pub statistic: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub verdict: Verdict,
}

impl TestReport {
    fn decided(test: &str, n: usize, statistic: f64, p_value: f64, alpha: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        TestReport {
            test: test.to_string(),
            n: n as u64,
            statistic,
            p_value,
            alpha,
            verdict: if p_value >= alpha {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn failed(&self) -> bool {
        self.verdict == Verdict::Fail
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatTest {
    Monobit,
    Runs,
    ChiSquareBytes,
    LagAutocorrelation,
}

impl StatTest {
    pub const ALL: [StatTest; 4] = [
        StatTest::Monobit,
        StatTest::Runs,
        StatTest::ChiSquareBytes,
        StatTest::LagAutocorrelation,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            StatTest::Monobit => "monobit",
            StatTest::Runs => "runs",
            StatTest::ChiSquareBytes => "chi-square-bytes",
            StatTest::LagAutocorrelation => "lag-autocorrelation",
        }
    }

    /// Runs the test on a bit stream; the autocorrelation test reads it as
    /// bytes. A constant byte stream fails that test with `rho = 1`, `p = 0`.
    pub fn run(&self, stream: &BitStream, alpha: f64) -> Result<TestReport> {
        match self {
            StatTest::Monobit => monobit_test(stream, alpha),
            StatTest::Runs => runs_test(stream, alpha),
            StatTest::ChiSquareBytes => chi_square_bytes(stream, alpha),
            StatTest::LagAutocorrelation => {
                let samples: Vec<f64> = stream.full_bytes().iter().map(|&b| b as f64).collect();
                match lag_autocorrelation(&samples, 1, alpha) {
                    Err(Error::Degenerate(_)) => Ok(TestReport::decided(
                        self.name(),
                        samples.len(),
                        1.0,
                        0.0,
                        alpha,
                    )),
                    other => other,
                }
            }
        }
    }
}

impl fmt::Display for StatTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StatTest {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StatTest::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown test {s:?}")))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha {alpha} outside (0, 1)")))
    }
}

fn check_bits(s: &BitStream, min: usize) -> Result<()> {
    if s.len() < min {
        return Err(Error::invalid(format!(
            "stream of {} bits is shorter than the {min}-bit minimum",
            s.len()
        )));
    }
    Ok(())
}

/// Frequency test: `S = |#ones - #zeros| / sqrt(n)`, `p = erfc(S / sqrt 2)`.
pub fn monobit_test(s: &BitStream, alpha: f64) -> Result<TestReport> {
    check_alpha(alpha)?;
    check_bits(s, MIN_BITS)?;
    let n = s.len();
    let ones = s.ones() as f64;
    let statistic = (2.0 * ones - n as f64).abs() / (n as f64).sqrt();
    let p = erfc(statistic / std::f64::consts::SQRT_2);
    Ok(TestReport::decided(
        StatTest::Monobit.name(),
        n,
        statistic,
        p,
        alpha,
    ))
}

/// Runs test; `statistic` is the run count `V`. Not applicable when
/// `|pi - 1/2| >= 2 / sqrt(n)`.
pub fn runs_test(s: &BitStream, alpha: f64) -> Result<TestReport> {
    check_alpha(alpha)?;
    check_bits(s, MIN_BITS)?;
    let n = s.len();
    let nf = n as f64;
    let pi = s.ones() as f64 / nf;
    let gate = 2.0 / nf.sqrt();
    if (pi - 0.5).abs() >= gate {
        return Ok(TestReport {
            test: StatTest::Runs.name().to_string(),
            n: n as u64,
            statistic: pi,
            p_value: 0.0,
            alpha,
            verdict: Verdict::NotApplicable,
        });
    }
    let mut runs = 1u64;
    let mut previous = s.bit(0);
    for bit in s.iter().skip(1) {
        runs += (bit != previous) as u64;
        previous = bit;
    }
    let v = runs as f64;
    let spread = pi * (1.0 - pi);
    let p = erfc((v - 2.0 * nf * spread).abs() / (2.0 * (2.0 * nf).sqrt() * spread));
    Ok(TestReport::decided(StatTest::Runs.name(), n, v, p, alpha))
}

/// Pearson chi-square statistic of observed against expected counts.
pub fn chi_square_statistic(observed: &[u64], expected: &[f64]) -> Result<f64> {
    if observed.len() != expected.len() || observed.len() < 2 {
        return Err(Error::invalid(
            "chi-square needs matching observed/expected of length >= 2",
        ));
    }
    if expected.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::invalid("expected counts must be positive"));
    }
    Ok(observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum())
}

/// 256-bin byte histogram against the uniform expectation, 255 degrees of freedom.
pub fn chi_square_bytes(s: &BitStream, alpha: f64) -> Result<TestReport> {
    check_alpha(alpha)?;
    check_bits(s, MIN_CHI_SQUARE_BITS)?;
    let bytes = s.full_bytes();
    let mut counts = [0u64; 256];
    for &b in bytes {
        counts[b as usize] += 1;
    }
    let expected = vec![bytes.len() as f64 / 256.0; 256];
    let statistic = chi_square_statistic(&counts, &expected)?;
    let p = chi_square_sf(statistic, 255.0)?;
    Ok(TestReport::decided(
        StatTest::ChiSquareBytes.name(),
        bytes.len(),
        statistic,
        p,
        alpha,
    ))
}

/// Pearson correlation of `x_t` with `x_{t+lag}`. Under independence
/// `rho * sqrt(m)` is approximately standard normal (`m` pairs), giving
/// `p = erfc(|rho| sqrt(m) / sqrt 2)`.
pub fn lag_autocorrelation(samples: &[f64], lag: usize, alpha: f64) -> Result<TestReport> {
    check_alpha(alpha)?;
    if lag == 0 {
        return Err(Error::invalid("lag must be at least 1"));
    }
    if samples.len() < MIN_LAG_SAMPLES.max(lag + 2) {
        return Err(Error::invalid(format!(
            "{} samples is fewer than the {MIN_LAG_SAMPLES} minimum",
            samples.len()
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("samples must be finite"));
    }
    let rho = pearson(&samples[..samples.len() - lag], &samples[lag..])?;
    let m = (samples.len() - lag) as f64;
    let p = erfc(rho.abs() * m.sqrt() / std::f64::consts::SQRT_2);
    Ok(TestReport::decided(
        StatTest::LagAutocorrelation.name(),
        samples.len(),
        rho,
        p,
        alpha,
    ))
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - mean_a, y - mean_b);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Degenerate("samples have zero variance".into()));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` ascending bin edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Index of the most populated bin (first on ties).
    pub fn modal_bin(&self) -> usize {
        let max = *self.counts.iter().max().expect("at least two bins");
        self.counts
            .iter()
            .position(|&c| c == max)
            .expect("max exists")
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        0.5 * (self.edges[i] + self.edges[i + 1])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", self.edges[i], self.edges[i + 1], c));
        }
        out
    }
}

/// Equal-width bins over `[min, max]`; the last bin is closed. A constant
/// input gets unit-width bins starting half a unit below the value.
pub fn histogram(samples: &[f64], bins: usize) -> Result<Histogram> {
    if samples.is_empty() {
        return Err(Error::invalid("histogram of an empty sample"));
    }
    if bins < 2 {
        return Err(Error::invalid("histogram needs at least 2 bins"));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("samples must be finite"));
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, width) = if hi > lo {
        (lo, (hi - lo) / bins as f64)
    } else {
        (lo - 0.5, 1.0)
    };
    let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0u64; bins];
    for &v in samples {
        let index = (((v - lo) / width) as usize).min(bins - 1);
        counts[index] += 1;
    }
    Ok(Histogram { edges, counts })
}

/// Chi-square goodness of fit of `samples` to `cdf` over the cells cut by
/// the ascending interior `edges` (plus two unbounded tails). Adjacent cells
/// are merged until each expects at least five observations.
pub fn chi_square_fit(
    samples: &[f64],
    edges: &[f64],
    cdf: impl Fn(f64) -> f64,
    alpha: f64,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    if samples.is_empty() || edges.is_empty() {
        return Err(Error::invalid("goodness of fit needs samples and edges"));
    }
    if edges
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
    {
        return Err(Error::invalid("edges must be strictly ascending"));
    }
    let n = samples.len() as f64;
    let mut observed = vec![0u64; edges.len() + 1];
    for &v in samples {
        observed[edges.partition_point(|&e| e <= v)] += 1;
    }
    let mut probs = Vec::with_capacity(edges.len() + 1);
    let mut previous = 0.0;
    for &e in edges {
        let c = cdf(e);
        probs.push(c - previous);
        previous = c;
    }
    probs.push(1.0 - previous);

    let (mut obs, mut exp) = (Vec::new(), Vec::new());
    let (mut o_acc, mut e_acc) = (0u64, 0.0);
    for (o, p) in observed.into_iter().zip(probs) {
        o_acc += o;
        e_acc += p * n;
        if e_acc >= 5.0 {
            obs.push(o_acc);
            exp.push(e_acc);
            o_acc = 0;
            e_acc = 0.0;
        }
    }
    if let (Some(o), Some(e)) = (obs.last_mut(), exp.last_mut()) {
        *o += o_acc;
        *e += e_acc;
    }
    if obs.len() < 2 {
        return Err(Error::invalid(
            "too few populated cells for a goodness-of-fit test",
        ));
    }
    let statistic = chi_square_statistic(&obs, &exp)?;
    let p = chi_square_sf(statistic, (obs.len() - 1) as f64)?;
    Ok(TestReport::decided(
        "chi-square-fit",
        samples.len(),
        statistic,
        p,
        alpha,
    ))
}

/// CDF of the sum of `n` independent U(0, 1) variates.
pub fn irwin_hall_cdf(x: f64, n: u32) -> f64 {
    let nf = n as f64;
    if x <= 0.0 {
        return 0.0;
    }
    if x >= nf {
        return 1.0;
    }
    if x > nf / 2.0 {
        return 1.0 - irwin_hall_cdf(nf - x, n);
    }
    let mut sum = 0.0;
    let mut binom = 1.0;
    for k in 0..=(x.floor() as u32) {
        let term = binom * (x - k as f64).powi(n as i32);
        sum += if k % 2 == 0 { term } else { -term };
        binom = binom * (nf - k as f64) / (k as f64 + 1.0);
    }
    let factorial: f64 = (1..=n).map(|i| i as f64).product();
    (sum / factorial).clamp(0.0, 1.0)
}
