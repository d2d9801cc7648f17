//! Fixed-point logistic map `x' = r · x · (1 - x)`.
//!
//! `r` is Q3.29 and the seed `x0` is a Q0.32 fraction. The orbit itself runs
//! in unsigned Q0.64 with double-width products truncated toward zero; a
//! 32-bit state collapses into cycles of a few thousand steps, which the
//! wider register postpones beyond any practical run length.
//!
//! A step that lands on 0 or reaches 1, or an orbit caught revisiting a
//! checkpoint (Brent-style, checkpoint refreshed every 2^16 steps), triggers
//! recovery: fresh entropy is XORed into the low 16 bits of the Q0.32 view of
//! `x`, its top bit cleared and bit 1 set.

use serde::{Deserialize, Serialize};

use crate::entropy::{EntropySource, MixEntropy, MixMode, SensorModel, SimulatedSensor};
use crate::error::{Error, Result};
use crate::fixedpoint::{FixedPoint, QFormat};

pub const DEFAULT_R: f64 = 3.99;
pub const DEFAULT_X0: f64 = 0.25;
pub const DEFAULT_BURN_IN: u64 = 100;
pub const DEFAULT_OUTPUT_BITS: u32 = 8;
pub const MAX_OUTPUT_BITS: u32 = 32;

/// High fraction bits discarded by [`LogisticGenerator::extract_bits`].
pub const EXTRACT_SKIP_BITS: u32 = 16;
/// Steps between cycle-detector checkpoints.
pub const CYCLE_CHECK_INTERVAL: u64 = 1 << 16;
/// Steps simulated when screening a seed for short degenerate orbits.
pub const DEGENERATE_SCREEN_STEPS: usize = 64;

const R_MIN_EXCLUSIVE: f64 = 3.57;

// Bit positions of the Q0.32 view inside the Q0.64 register.
const VIEW_SHIFT: u32 = 32;
const RECOVERY_CLEAR: u64 = 1 << 63;
const RECOVERY_SET: u64 = 1 << (VIEW_SHIFT + 1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LogisticConfigRepr", into = "LogisticConfigRepr")]
pub struct LogisticConfig {
    r: FixedPoint,
    x0: FixedPoint,
    burn_in: u64,
    output_bits: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LogisticConfigRepr {
    r: f64,
    x0: f64,
    #[serde(default = "default_burn_in")]
    burn_in: u64,
    #[serde(default = "default_output_bits")]
    output_bits: u32,
}

fn default_burn_in() -> u64 {
    DEFAULT_BURN_IN
}

fn default_output_bits() -> u32 {
    DEFAULT_OUTPUT_BITS
}

impl TryFrom<LogisticConfigRepr> for LogisticConfig {
    type Error = Error;

    fn try_from(repr: LogisticConfigRepr) -> Result<Self> {
        if !(repr.x0 > 0.0 && repr.x0 < 1.0) {
            return Err(Error::invalid(format!("x0 = {} outside (0, 1)", repr.x0)));
        }
        LogisticConfig::new(
            FixedPoint::from_f64(repr.r, QFormat::Q3_29)?,
            FixedPoint::from_f64(repr.x0, QFormat::Q0_32)?,
            repr.burn_in,
            repr.output_bits,
        )
    }
}

impl From<LogisticConfig> for LogisticConfigRepr {
    fn from(c: LogisticConfig) -> Self {
        LogisticConfigRepr {
            r: c.r.to_f64(),
            x0: c.x0.to_f64(),
            burn_in: c.burn_in,
            output_bits: c.output_bits,
        }
    }
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig::new(
            FixedPoint::from_f64(DEFAULT_R, QFormat::Q3_29).expect("finite"),
            FixedPoint::from_f64(DEFAULT_X0, QFormat::Q0_32).expect("finite"),
            DEFAULT_BURN_IN,
            DEFAULT_OUTPUT_BITS,
        )
        .expect("default logistic config is valid")
    }
}

impl LogisticConfig {
    pub fn new(r: FixedPoint, x0: FixedPoint, burn_in: u64, output_bits: u32) -> Result<Self> {
        if r.format() != QFormat::Q3_29 {
            return Err(Error::invalid(format!(
                "r must be Q3.29, got {}",
                r.format()
            )));
        }
        if x0.format() != QFormat::Q0_32 {
            return Err(Error::invalid(format!(
                "x0 must be Q0.32, got {}",
                x0.format()
            )));
        }
        let r_value = r.to_f64();
        if !(r_value > R_MIN_EXCLUSIVE && r_value <= 4.0) {
            return Err(Error::invalid(format!(
                "r = {r_value} outside the chaotic range (3.57, 4.0]"
            )));
        }
        if x0.raw() <= 0 {
            return Err(Error::invalid("x0 must lie strictly inside (0, 1)"));
        }
        if !(1..=MAX_OUTPUT_BITS).contains(&output_bits) {
            return Err(Error::invalid(format!(
                "output_bits {output_bits} outside [1, {MAX_OUTPUT_BITS}]"
            )));
        }
        let config = LogisticConfig {
            r,
            x0,
            burn_in,
            output_bits,
        };
        config.screen_degenerate()?;
        Ok(config)
    }

    /// Builds a config from raw words: `r_raw` in Q3.29, `x0_raw` in Q0.32.
    pub fn from_raw(r_raw: i64, x0_raw: u32, burn_in: u64, output_bits: u32) -> Result<Self> {
        Self::new(
            FixedPoint::from_raw(r_raw, QFormat::Q3_29),
            FixedPoint::from_raw(x0_raw as i64, QFormat::Q0_32),
            burn_in,
            output_bits,
        )
    }

    pub fn with_seed(&self, x0: FixedPoint) -> Result<Self> {
        Self::new(self.r, x0, self.burn_in, self.output_bits)
    }

    pub fn r(&self) -> FixedPoint {
        self.r
    }

    pub fn x0(&self) -> FixedPoint {
        self.x0
    }

    pub fn burn_in(&self) -> u64 {
        self.burn_in
    }

    pub fn output_bits(&self) -> u32 {
        self.output_bits
    }

    fn r_raw(&self) -> u64 {
        self.r.raw() as u64
    }

    fn initial_state(&self) -> u64 {
        (self.x0.raw() as u64) << VIEW_SHIFT
    }

    // Rejects seeds whose exact orbit hits 0, 1 or a repeat within the screen.
    fn screen_degenerate(&self) -> Result<()> {
        let mut seen = Vec::with_capacity(DEGENERATE_SCREEN_STEPS + 1);
        let mut x = self.initial_state();
        seen.push(x);
        for step in 1..=DEGENERATE_SCREEN_STEPS {
            x = logistic_map(x, self.r_raw()).ok_or_else(|| {
                Error::invalid(format!(
                    "x0 = {} reaches 0 or 1 after {step} steps",
                    self.x0.to_f64()
                ))
            })?;
            if seen.contains(&x) {
                return Err(Error::invalid(format!(
                    "x0 = {} falls into a cycle within {step} steps",
                    self.x0.to_f64()
                )));
            }
            seen.push(x);
        }
        Ok(())
    }
}

/// One exact Q0.64 step; `None` when the result is 0 or at least 1.
pub fn logistic_map(x: u64, r_raw: u64) -> Option<u64> {
    let complement = (1u128 << 64) - x as u128;
    let product = (x as u128 * complement) >> 64;
    let next = (r_raw as u128 * product) >> QFormat::Q3_29.fraction_bits();
    if next == 0 || next >> 64 != 0 {
        None
    } else {
        Some(next as u64)
    }
}

/// Recovery and cycle-detector counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogisticDiagnostics {
    pub degenerate_recoveries: u64,
    pub cycle_recoveries: u64,
    /// Recoveries that ran on fallback entropy because the source failed.
    pub entropy_failures: u64,
}

pub struct LogisticGenerator {
    config: LogisticConfig,
    x: u64,
    steps_taken: u64,
    checkpoint: u64,
    diagnostics: LogisticDiagnostics,
    recovery: Box<dyn EntropySource>,
}

impl std::fmt::Debug for LogisticGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LogisticGenerator")
            .field("config", &self.config)
            .field("x", &self.x)
            .field("steps_taken", &self.steps_taken)
            .field("diagnostics", &self.diagnostics)
            .finish_non_exhaustive()
    }
}

impl LogisticGenerator {
    /// A fresh generator at `x0`; call [`burn_in`](Self::burn_in) before extracting.
    pub fn new(config: LogisticConfig) -> Self {
        let sensor = SimulatedSensor::new(SensorModel::default()).expect("default sensor model");
        Self::with_recovery_source(config, Box::new(sensor))
    }

    pub fn with_recovery_source(config: LogisticConfig, recovery: Box<dyn EntropySource>) -> Self {
        let x = config.initial_state();
        LogisticGenerator {
            config,
            x,
            steps_taken: 0,
            checkpoint: x,
            diagnostics: LogisticDiagnostics::default(),
            recovery,
        }
    }

    /// Constructs and runs the burn-in.
    pub fn ready(config: LogisticConfig) -> Self {
        let mut generator = Self::new(config);
        generator.burn_in();
        generator
    }

    pub fn config(&self) -> &LogisticConfig {
        &self.config
    }

    /// Internal Q0.64 state.
    pub fn state_raw(&self) -> u64 {
        self.x
    }

    /// Q0.32 view of the state, truncated.
    pub fn x(&self) -> FixedPoint {
        FixedPoint::from_raw((self.x >> VIEW_SHIFT) as i64, QFormat::Q0_32)
    }

    pub fn x_f64(&self) -> f64 {
        self.x as f64 / 2f64.powi(64)
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps_taken
    }

    pub fn diagnostics(&self) -> LogisticDiagnostics {
        self.diagnostics
    }

    pub fn is_ready(&self) -> bool {
        self.steps_taken >= self.config.burn_in
    }

    /// Steps until `steps_taken` reaches the configured burn-in.
    pub fn burn_in(&mut self) {
        while !self.is_ready() {
            self.step();
        }
    }

    /// Advances the map once, recovering from degenerate results and cycles.
    pub fn step(&mut self) {
        match logistic_map(self.x, self.config.r_raw()) {
            Some(next) => self.x = next,
            None => {
                // The wrapped product keeps whatever low bits survived.
                let wrapped = (self.config.r_raw() as u128
                    * (((self.x as u128) * ((1u128 << 64) - self.x as u128)) >> 64))
                    >> QFormat::Q3_29.fraction_bits();
                self.x = wrapped as u64;
                self.diagnostics.degenerate_recoveries += 1;
                self.recover();
            }
        }
        self.steps_taken += 1;
        if self.x == self.checkpoint {
            self.diagnostics.cycle_recoveries += 1;
            self.recover();
        }
        if self.steps_taken % CYCLE_CHECK_INTERVAL == 0 {
            self.checkpoint = self.x;
        }
    }

    fn recover(&mut self) {
        let word = match self.recovery.sample() {
            Ok(word) => word,
            Err(_) => {
                self.diagnostics.entropy_failures += 1;
                fallback_word(self.steps_taken ^ self.x)
            }
        };
        self.x ^= ((word & 0xFFFF) as u64) << VIEW_SHIFT;
        self.x = (self.x & !RECOVERY_CLEAR) | RECOVERY_SET;
    }

    /// Steps once and returns fraction bits `[16, 16 + output_bits)` counted
    /// from the most significant end.
    pub fn extract_bits(&mut self) -> Result<u32> {
        self.require_ready()?;
        self.step();
        let nbits = self.config.output_bits;
        let shift = 64 - EXTRACT_SKIP_BITS - nbits;
        Ok(((self.x >> shift) & ((1u64 << nbits) - 1)) as u32)
    }

    /// Irwin-Hall shaping: the sum of `n_terms` normalized states minus `n_terms / 2`.
    pub fn clt_gaussian(&mut self, n_terms: u32) -> Result<f64> {
        self.require_ready()?;
        if n_terms < 2 {
            return Err(Error::invalid("clt_gaussian needs at least 2 terms"));
        }
        let mut sum = 0.0;
        for _ in 0..n_terms {
            self.step();
            sum += self.uniform();
        }
        Ok(sum - n_terms as f64 / 2.0)
    }

    /// Current state's extraction window as a uniform variate in (0, 1).
    pub fn uniform(&self) -> f64 {
        let window = (self.x >> (64 - EXTRACT_SKIP_BITS - 32)) & 0xFFFF_FFFF;
        (window as f64 + 0.5) / 2f64.powi(32)
    }

    fn require_ready(&self) -> Result<()> {
        if self.is_ready() {
            Ok(())
        } else {
            Err(Error::NotReady {
                steps_taken: self.steps_taken,
                burn_in: self.config.burn_in,
            })
        }
    }

    fn clamp_into_unit(&mut self) {
        if self.x == 0 {
            self.x = 1 << VIEW_SHIFT;
        }
    }
}

impl MixEntropy for LogisticGenerator {
    /// Both modes act on the Q0.32 view: xor-state takes the full word,
    /// perturb-value only its low 16 bits.
    fn mix_entropy(&mut self, word: u32, mode: MixMode) {
        let word = match mode {
            MixMode::XorState => word,
            MixMode::PerturbValue => word & 0xFFFF,
        };
        self.x ^= (word as u64) << VIEW_SHIFT;
        self.clamp_into_unit();
    }
}

fn fallback_word(seed: u64) -> u32 {
    // SplitMix64 finalizer.
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    (z ^ (z >> 31)) as u32
}
