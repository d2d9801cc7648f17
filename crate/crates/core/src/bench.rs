//! Clock-cycle cost model, wall-clock throughput and the side-by-side
//! comparison of the three generator families.
//!
//! One sample is one byte of output stream, so every generator is measured
//! in the same unit regardless of its native word width.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{GeneratorKind, GeneratorSpec};
use crate::stats::{BitStream, StatTest, TestReport};

pub const DEFAULT_CLOCK_HZ: f64 = 1e8;
pub const MIN_THROUGHPUT_SAMPLES: u64 = 10_000;
pub const MIN_COMPARE_BITS: usize = 1_000_000;
pub const HARDWARE_ONLY: &str = "n/a (hardware-only)";

/// Generators shown in the comparison, in column order.
pub const COMPARED: [GeneratorKind; 3] = [
    GeneratorKind::Logistic,
    GeneratorKind::Pendulum,
    GeneratorKind::MultiLfsr,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CostModelRepr", into = "CostModelRepr")]
pub struct CycleCostModel {
    cycles_per_sample: BTreeMap<GeneratorKind, u64>,
    clock_hz: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CostModelRepr {
    cycles_per_sample: BTreeMap<GeneratorKind, u64>,
    #[serde(default = "default_clock_hz")]
    clock_hz: f64,
}

fn default_clock_hz() -> f64 {
    DEFAULT_CLOCK_HZ
}

impl TryFrom<CostModelRepr> for CycleCostModel {
    type Error = Error;

    fn try_from(r: CostModelRepr) -> Result<Self> {
        CycleCostModel::new(r.cycles_per_sample, r.clock_hz)
    }
}

impl From<CycleCostModel> for CostModelRepr {
    fn from(m: CycleCostModel) -> Self {
        CostModelRepr {
            cycles_per_sample: m.cycles_per_sample,
            clock_hz: m.clock_hz,
        }
    }
}

impl Default for CycleCostModel {
    fn default() -> Self {
        CycleCostModel {
            cycles_per_sample: BTreeMap::from([
                (GeneratorKind::MultiLfsr, 2),
                (GeneratorKind::Logistic, 10),
                (GeneratorKind::Pendulum, 50),
            ]),
            clock_hz: DEFAULT_CLOCK_HZ,
        }
    }
}

impl CycleCostModel {
    pub fn new(cycles_per_sample: BTreeMap<GeneratorKind, u64>, clock_hz: f64) -> Result<Self> {
        if !(clock_hz.is_finite() && clock_hz > 0.0) {
            return Err(Error::invalid(format!(
                "clock_hz must be positive, got {clock_hz}"
            )));
        }
        if let Some((kind, _)) = cycles_per_sample.iter().find(|(_, &c)| c == 0) {
            return Err(Error::invalid(format!(
                "cycle cost for {kind} must be at least 1"
            )));
        }
        Ok(CycleCostModel {
            cycles_per_sample,
            clock_hz,
        })
    }

    pub fn with_cost(mut self, kind: GeneratorKind, cycles: u64) -> Result<Self> {
        self.cycles_per_sample.insert(kind, cycles);
        CycleCostModel::new(self.cycles_per_sample, self.clock_hz)
    }

    pub fn clock_hz(&self) -> f64 {
        self.clock_hz
    }

    pub fn cycles_per_sample(&self, kind: GeneratorKind) -> Result<u64> {
        self.cycles_per_sample
            .get(&kind)
            .copied()
            .ok_or_else(|| Error::invalid(format!("no cycle cost for generator {kind}")))
    }

    /// Returns `(cycles, seconds)` for `n_samples` outputs.
    pub fn estimate_cycles(&self, kind: GeneratorKind, n_samples: u64) -> Result<(u64, f64)> {
        if n_samples == 0 {
            return Err(Error::invalid("n_samples must be at least 1"));
        }
        let cycles = self
            .cycles_per_sample(kind)?
            .checked_mul(n_samples)
            .ok_or_else(|| Error::invalid("cycle count overflows u64"))?;
        Ok((cycles, cycles as f64 / self.clock_hz))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub generator: GeneratorKind,
    pub n_samples: u64,
    pub modeled_cycles: u64,
    pub modeled_time_s: f64,
    pub wallclock_samples_per_s: f64,
}

/// Generates `n_samples` bytes from a freshly built generator and times the
/// generation alone.
pub fn run_throughput(
    spec: &GeneratorSpec,
    n_samples: u64,
    model: &CycleCostModel,
) -> Result<BenchReport> {
    if n_samples < MIN_THROUGHPUT_SAMPLES {
        return Err(Error::invalid(format!(
            "throughput needs at least {MIN_THROUGHPUT_SAMPLES} samples, got {n_samples}"
        )));
    }
    let kind = spec.kind();
    let (modeled_cycles, modeled_time_s) = model.estimate_cycles(kind, n_samples)?;
    let len = usize::try_from(n_samples).map_err(|_| Error::invalid("n_samples too large"))?;
    let mut generator = spec.build()?;
    let mut buf = vec![0u8; len];

    let start = Instant::now();
    generator.fill_bytes(black_box(&mut buf))?;
    let elapsed = start.elapsed().as_secs_f64();
    black_box(&buf);

    Ok(BenchReport {
        generator: kind,
        n_samples,
        modeled_cycles,
        modeled_time_s,
        wallclock_samples_per_s: n_samples as f64 / elapsed.max(1e-9),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rating {
    Low,
    Medium,
    High,
}

impl Rating {
    pub fn label(&self) -> &'static str {
        match self {
            Rating::Low => "Low",
            Rating::Medium => "Medium",
            Rating::High => "High",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareColumn {
    pub generator: GeneratorKind,
    pub tests: Vec<TestReport>,
    /// High when every test passes on a nonlinear generator; linear
    /// generators cap at Medium; any failure gives Low.
    pub randomness: Rating,
    pub modeled_latency_ns: f64,
    /// Rank of the modeled per-sample latency among the compared generators.
    pub latency: Rating,
    pub bench: BenchReport,
    pub suitability: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub n_bits: usize,
    pub alpha: f64,
    pub clock_hz: f64,
    pub columns: Vec<CompareColumn>,
    pub power: String,
    pub hardware_resources: String,
}

fn randomness_rating(kind: GeneratorKind, tests: &[TestReport]) -> Rating {
    if tests.iter().any(TestReport::failed) {
        Rating::Low
    } else if kind.is_linear() {
        Rating::Medium
    } else {
        Rating::High
    }
}

fn suitability(randomness: Rating, latency: Rating) -> String {
    match (randomness, latency) {
        (Rating::High, _) => "High-Security",
        (_, Rating::Low) => "Embedded, Real-time",
        _ => "General-purpose",
    }
    .to_string()
}

fn latency_ranks(costs: &[u64]) -> Vec<Rating> {
    costs
        .iter()
        .map(|c| match costs.iter().filter(|&o| o < c).count() {
            0 => Rating::Low,
            1 => Rating::Medium,
            _ => Rating::High,
        })
        .collect()
}

/// Runs the default logistic, pendulum and multi-LFSR generators through the
/// statistical suite and the cost model.
pub fn compare(
    n_bits: usize,
    alpha: f64,
    model: &CycleCostModel,
    throughput_samples: u64,
) -> Result<CompareReport> {
    if n_bits < MIN_COMPARE_BITS {
        return Err(Error::invalid(format!(
            "comparison needs at least {MIN_COMPARE_BITS} bits per generator, got {n_bits}"
        )));
    }
    let specs = COMPARED.map(GeneratorSpec::default_for);

    let tests: Vec<Vec<TestReport>> = std::thread::scope(|scope| {
        let handles: Vec<_> = specs
            .iter()
            .map(|spec| scope.spawn(move || suite(spec, n_bits, alpha)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("test worker panicked"))
            .collect::<Result<_>>()
    })?;

    let costs = COMPARED
        .iter()
        .map(|&k| model.cycles_per_sample(k))
        .collect::<Result<Vec<_>>>()?;
    let ranks = latency_ranks(&costs);

    let mut columns = Vec::with_capacity(COMPARED.len());
    for (i, (spec, tests)) in specs.iter().zip(tests).enumerate() {
        let kind = spec.kind();
        let bench = run_throughput(spec, throughput_samples, model)?;
        let randomness = randomness_rating(kind, &tests);
        columns.push(CompareColumn {
            generator: kind,
            randomness,
            modeled_latency_ns: costs[i] as f64 / model.clock_hz() * 1e9,
            latency: ranks[i],
            suitability: suitability(randomness, ranks[i]),
            tests,
            bench,
        });
    }

    Ok(CompareReport {
        n_bits,
        alpha,
        clock_hz: model.clock_hz(),
        columns,
        power: HARDWARE_ONLY.to_string(),
        hardware_resources: HARDWARE_ONLY.to_string(),
    })
}

/// Runs every statistical test on the first `n_bits` of a fresh stream.
pub fn suite(spec: &GeneratorSpec, n_bits: usize, alpha: f64) -> Result<Vec<TestReport>> {
    let mut generator = spec.build()?;
    let mut bytes = vec![0u8; n_bits.div_ceil(8)];
    generator.fill_bytes(&mut bytes)?;
    let stream = BitStream::from_packed(bytes, n_bits)?;
    StatTest::ALL
        .iter()
        .map(|t| t.run(&stream, alpha))
        .collect()
}

fn display_name(kind: GeneratorKind) -> &'static str {
    match kind {
        GeneratorKind::Lfsr => "LFSR",
        GeneratorKind::MultiLfsr => "Multi-LFSR",
        GeneratorKind::Logistic => "Logistic Map",
        GeneratorKind::Pendulum => "Double Pendulum",
    }
}

impl CompareReport {
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let row = |out: &mut String, label: &str, cells: Vec<String>| {
            let _ = writeln!(out, "| {label} | {} |", cells.join(" | "));
        };
        let cols = &self.columns;

        row(
            &mut out,
            "Metric",
            cols.iter()
                .map(|c| display_name(c.generator).to_string())
                .collect(),
        );
        row(
            &mut out,
            "---",
            cols.iter().map(|_| "---".to_string()).collect(),
        );
        row(
            &mut out,
            "Randomness",
            cols.iter()
                .map(|c| {
                    let passed = c.tests.iter().filter(|t| t.passed()).count();
                    format!("{} ({passed}/{} pass)", c.randomness.label(), c.tests.len())
                })
                .collect(),
        );
        row(
            &mut out,
            "Latency",
            cols.iter().map(|c| c.latency.label().to_string()).collect(),
        );
        row(
            &mut out,
            "Modeled latency per sample",
            cols.iter()
                .map(|c| format!("{:.0} ns", c.modeled_latency_ns))
                .collect(),
        );
        row(
            &mut out,
            "Measured throughput",
            cols.iter()
                .map(|c| format!("{:.3e} samples/s", c.bench.wallclock_samples_per_s))
                .collect(),
        );
        row(
            &mut out,
            "Power",
            cols.iter().map(|_| self.power.clone()).collect(),
        );
        row(
            &mut out,
            "Hardware Resource Usage",
            cols.iter()
                .map(|_| self.hardware_resources.clone())
                .collect(),
        );
        row(
            &mut out,
            "Application Suitability",
            cols.iter().map(|c| c.suitability.clone()).collect(),
        );

        let _ = writeln!(
            out,
            "\n{} bits per generator, alpha = {}, clock = {:.0} Hz, one sample = one output byte.",
            self.n_bits, self.alpha, self.clock_hz
        );
        out
    }
}
