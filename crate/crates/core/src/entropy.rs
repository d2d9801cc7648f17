//! Entropy sources and the reseeding scheduler.
//!
//! Three sources implement [`EntropySource`]: a deterministic
//! [`SimulatedSensor`] (bounded random walk quantized by an ADC), a
//! [`ReplaySource`] over captured little-endian words, and the operating
//! system RNG. Every source runs the same health monitor; a failure latches
//! and blocks draws until [`EntropySource::reset`].

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const STUCK_WINDOW: usize = 64;
pub const BIAS_WINDOW_BITS: usize = 1024;
pub const BIAS_LOWER: f64 = 0.2;
pub const BIAS_UPPER: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    SimulatedSensor,
    ReplayFile,
    System,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "reason")]
pub enum HealthFailure {
    /// The last [`STUCK_WINDOW`] raw readings were identical.
    Stuck,
    /// Ones fraction of the last [`BIAS_WINDOW_BITS`] bits left `[0.2, 0.8]`.
    Bias { ones_fraction: f64 },
}

impl fmt::Display for HealthFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HealthFailure::Stuck => write!(f, "stuck: {STUCK_WINDOW} identical readings"),
            HealthFailure::Bias { ones_fraction } => write!(
                f,
                "bias: ones fraction {ones_fraction:.4} over {BIAS_WINDOW_BITS} bits"
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status")]
pub enum HealthState {
    Pass,
    Fail(HealthFailure),
}

/// Sliding-window stuck and bias detector shared by all sources.
#[derive(Debug, Clone, Default)]
pub struct HealthMonitor {
    readings: VecDeque<u64>,
    bits: VecDeque<bool>,
    ones: usize,
    failure: Option<HealthFailure>,
}

impl HealthMonitor {
    pub fn record_reading(&mut self, reading: u64) {
        if self.readings.len() == STUCK_WINDOW {
            self.readings.pop_front();
        }
        self.readings.push_back(reading);
        if self.failure.is_none()
            && self.readings.len() == STUCK_WINDOW
            && self.readings.iter().all(|&r| r == reading)
        {
            self.failure = Some(HealthFailure::Stuck);
        }
    }

    /// Records the `nbits` low bits of `value`.
    pub fn record_bits(&mut self, value: u32, nbits: u32) {
        for i in 0..nbits {
            let bit = (value >> i) & 1 == 1;
            if self.bits.len() == BIAS_WINDOW_BITS && self.bits.pop_front() == Some(true) {
                self.ones -= 1;
            }
            self.bits.push_back(bit);
            self.ones += bit as usize;
        }
        if self.failure.is_none() && self.bits.len() == BIAS_WINDOW_BITS {
            let ones_fraction = self.ones as f64 / BIAS_WINDOW_BITS as f64;
            if !(BIAS_LOWER..=BIAS_UPPER).contains(&ones_fraction) {
                self.failure = Some(HealthFailure::Bias { ones_fraction });
            }
        }
    }

    pub fn state(&self) -> HealthState {
        match self.failure {
            None => HealthState::Pass,
            Some(f) => HealthState::Fail(f),
        }
    }

    fn check(&self) -> Result<()> {
        match self.failure {
            None => Ok(()),
            Some(f) => Err(Error::SourceUnhealthy(f)),
        }
    }

    pub fn reset(&mut self) {
        *self = HealthMonitor::default();
    }
}

pub trait EntropySource: Send {
    fn kind(&self) -> SourceKind;

    /// Draws one 32-bit entropy word. Fails once the health monitor latches.
    fn sample(&mut self) -> Result<u32>;

    fn health_check(&self) -> HealthState;

    /// Clears the latched health state and rewinds deterministic sources.
    fn reset(&mut self);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    Temperature,
    Humidity,
    Pressure,
}

/// Parameters of a simulated environmental sensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorModel {
    pub quantity: Quantity,
    pub lo: f64,
    pub hi: f64,
    /// Maximum drift per reading, in physical units.
    pub walk_step: f64,
    /// ADC bit depth.
    pub quantization: u32,
    /// Low ADC bits harvested from each reading.
    pub harvest_bits: u32,
    pub seed: u64,
}

impl Default for SensorModel {
    fn default() -> Self {
        SensorModel::for_quantity(Quantity::Temperature, 0x5EED)
    }
}

impl SensorModel {
    pub fn for_quantity(quantity: Quantity, seed: u64) -> Self {
        let (lo, hi, walk_step) = match quantity {
            Quantity::Temperature => (15.0, 35.0, 0.05),
            Quantity::Humidity => (20.0, 80.0, 0.15),
            Quantity::Pressure => (950.0, 1050.0, 0.25),
        };
        SensorModel {
            quantity,
            lo,
            hi,
            walk_step,
            quantization: 12,
            harvest_bits: 4,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::invalid(format!(
                "sensor range [{}, {}] is empty or not finite",
                self.lo, self.hi
            )));
        }
        if !(self.walk_step.is_finite() && self.walk_step > 0.0) {
            return Err(Error::invalid("sensor walk_step must be positive"));
        }
        if !(2..=24).contains(&self.quantization) {
            return Err(Error::invalid("ADC depth must lie in [2, 24] bits"));
        }
        if self.harvest_bits == 0
            || self.harvest_bits > self.quantization
            || 32 % self.harvest_bits != 0
        {
            return Err(Error::invalid(
                "harvest_bits must divide 32 and not exceed the ADC depth",
            ));
        }
        Ok(())
    }
}

/// Deterministic sensor: reflected random walk plus ADC quantization.
#[derive(Debug, Clone)]
pub struct SimulatedSensor {
    model: SensorModel,
    rng: ChaCha8Rng,
    value: f64,
    last_code: u32,
    monitor: HealthMonitor,
}

impl SimulatedSensor {
    pub fn new(model: SensorModel) -> Result<Self> {
        model.validate()?;
        Ok(SimulatedSensor {
            rng: ChaCha8Rng::seed_from_u64(model.seed),
            value: 0.5 * (model.lo + model.hi),
            last_code: 0,
            monitor: HealthMonitor::default(),
            model,
        })
    }

    pub fn model(&self) -> &SensorModel {
        &self.model
    }

    /// Current physical reading.
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn last_code(&self) -> u32 {
        self.last_code
    }

    /// Advances the walk one reading and returns the ADC code.
    pub fn read(&mut self) -> u32 {
        let SensorModel {
            lo, hi, walk_step, ..
        } = self.model;
        let mut v = self.value + self.rng.gen_range(-walk_step..=walk_step);
        if v > hi {
            v = 2.0 * hi - v;
        }
        if v < lo {
            v = 2.0 * lo - v;
        }
        self.value = v.clamp(lo, hi);
        let full_scale = ((1u64 << self.model.quantization) - 1) as f64;
        self.last_code = ((self.value - lo) / (hi - lo) * full_scale).round() as u32;
        self.last_code
    }
}

impl EntropySource for SimulatedSensor {
    fn kind(&self) -> SourceKind {
        SourceKind::SimulatedSensor
    }

    fn sample(&mut self) -> Result<u32> {
        self.monitor.check()?;
        let k = self.model.harvest_bits;
        let mut word = 0u32;
        for _ in 0..32 / k {
            let code = self.read();
            self.monitor.record_reading(code as u64);
            let low = code & ((1u32 << k) - 1);
            word = if k == 32 { low } else { (word << k) | low };
        }
        self.monitor.record_bits(word, 32);
        self.monitor.check()?;
        Ok(word)
    }

    fn health_check(&self) -> HealthState {
        self.monitor.state()
    }

    fn reset(&mut self) {
        self.rng = ChaCha8Rng::seed_from_u64(self.model.seed);
        self.value = 0.5 * (self.model.lo + self.model.hi);
        self.last_code = 0;
        self.monitor.reset();
    }
}

/// Replays little-endian 32-bit words, then reports exhaustion.
#[derive(Debug, Clone)]
pub struct ReplaySource {
    words: Vec<u32>,
    position: usize,
    monitor: HealthMonitor,
}

impl ReplaySource {
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() % 4 != 0 {
            return Err(Error::invalid(format!(
                "replay data length {} is not a multiple of 4 bytes",
                bytes.len()
            )));
        }
        let words = bytes
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(Self::from_words(words))
    }

    pub fn from_words(words: Vec<u32>) -> Self {
        ReplaySource {
            words,
            position: 0,
            monitor: HealthMonitor::default(),
        }
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn remaining(&self) -> usize {
        self.words.len() - self.position
    }
}

impl EntropySource for ReplaySource {
    fn kind(&self) -> SourceKind {
        SourceKind::ReplayFile
    }

    fn sample(&mut self) -> Result<u32> {
        self.monitor.check()?;
        let word = *self
            .words
            .get(self.position)
            .ok_or(Error::Exhausted(self.words.len() as u64))?;
        self.position += 1;
        self.monitor.record_reading(word as u64);
        self.monitor.record_bits(word, 32);
        self.monitor.check()?;
        Ok(word)
    }

    fn health_check(&self) -> HealthState {
        self.monitor.state()
    }

    fn reset(&mut self) {
        self.position = 0;
        self.monitor.reset();
    }
}

/// Operating-system randomness; not reproducible.
#[derive(Debug, Clone, Default)]
pub struct SystemSource {
    monitor: HealthMonitor,
}

impl SystemSource {
    pub fn new() -> Self {
        Self::default()
    }
}

impl EntropySource for SystemSource {
    fn kind(&self) -> SourceKind {
        SourceKind::System
    }

    fn sample(&mut self) -> Result<u32> {
        self.monitor.check()?;
        let mut buf = [0u8; 4];
        rand::rngs::OsRng
            .try_fill_bytes(&mut buf)
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        let word = u32::from_le_bytes(buf);
        self.monitor.record_reading(word as u64);
        self.monitor.record_bits(word, 32);
        self.monitor.check()?;
        Ok(word)
    }

    fn health_check(&self) -> HealthState {
        self.monitor.state()
    }

    fn reset(&mut self) {
        self.monitor.reset();
    }
}

/// How an entropy word enters generator state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MixMode {
    /// XOR the whole word into the state registers.
    #[default]
    XorState,
    /// XOR the low 16 bits into the low fraction bits of the leading
    /// state variable.
    PerturbValue,
}

/// State that can absorb an entropy word.
pub trait MixEntropy {
    fn mix_entropy(&mut self, word: u32, mode: MixMode);
}

impl MixEntropy for crate::lfsr::Lfsr {
    fn mix_entropy(&mut self, word: u32, _mode: MixMode) {
        self.mix(word as u64);
    }
}

impl MixEntropy for crate::lfsr::MultiLfsr {
    fn mix_entropy(&mut self, word: u32, _mode: MixMode) {
        self.mix(word);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReseedPolicy {
    /// Outputs between reseeds.
    pub interval: u64,
    pub mode: MixMode,
}

impl Default for ReseedPolicy {
    fn default() -> Self {
        ReseedPolicy {
            interval: 1 << 16,
            mode: MixMode::XorState,
        }
    }
}

impl ReseedPolicy {
    pub fn new(interval: u64, mode: MixMode) -> Result<Self> {
        let policy = ReseedPolicy { interval, mode };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        if self.interval == 0 {
            return Err(Error::invalid("reseed interval must be at least 1"));
        }
        Ok(())
    }
}

/// Counts outputs and signals when the next reseed is due.
#[derive(Debug, Clone)]
pub struct ReseedSchedule {
    policy: ReseedPolicy,
    since_reseed: u64,
    reseeds: u64,
}

impl ReseedSchedule {
    pub fn new(policy: ReseedPolicy) -> Result<Self> {
        policy.validate()?;
        Ok(ReseedSchedule {
            policy,
            since_reseed: 0,
            reseeds: 0,
        })
    }

    pub fn policy(&self) -> &ReseedPolicy {
        &self.policy
    }

    pub fn reseeds(&self) -> u64 {
        self.reseeds
    }

    /// Registers one output. Returns true when a reseed is due after it.
    pub fn tick(&mut self) -> bool {
        self.since_reseed += 1;
        if self.since_reseed == self.policy.interval {
            self.since_reseed = 0;
            self.reseeds += 1;
            true
        } else {
            false
        }
    }

    /// Draws and mixes one word if the output just produced completes an interval.
    pub fn after_output<T: MixEntropy + ?Sized>(
        &mut self,
        target: &mut T,
        source: &mut dyn EntropySource,
    ) -> Result<()> {
        if self.tick() {
            let word = source.sample()?;
            target.mix_entropy(word, self.policy.mode);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sensor_is_deterministic_and_bounded() {
        let model = SensorModel::for_quantity(Quantity::Temperature, 7);
        let mut a = SimulatedSensor::new(model.clone()).unwrap();
        let mut b = SimulatedSensor::new(model).unwrap();
        for _ in 0..2000 {
            assert_eq!(a.sample().unwrap(), b.sample().unwrap());
            assert!((15.0..=35.0).contains(&a.value()));
        }
    }

    #[test]
    fn sensor_walk_hits_both_bounds() {
        let mut model = SensorModel::for_quantity(Quantity::Temperature, 3);
        model.walk_step = 4.0;
        let mut s = SimulatedSensor::new(model).unwrap();
        let codes: Vec<u32> = (0..20_000).map(|_| s.read()).collect();
        assert!(codes.iter().all(|&c| c <= 4095));
        assert!((15.0..=35.0).contains(&s.value()));
        assert!(codes.iter().any(|&c| c < 200) && codes.iter().any(|&c| c > 3900));
    }

    #[test]
    fn sensor_reset_replays() {
        let mut s = SimulatedSensor::new(SensorModel::default()).unwrap();
        let first: Vec<u32> = (0..10).map(|_| s.sample().unwrap()).collect();
        s.reset();
        let again: Vec<u32> = (0..10).map(|_| s.sample().unwrap()).collect();
        assert_eq!(first, again);
    }

    #[test]
    fn healthy_sensor_stays_healthy() {
        for q in [
            Quantity::Temperature,
            Quantity::Humidity,
            Quantity::Pressure,
        ] {
            let mut s = SimulatedSensor::new(SensorModel::for_quantity(q, 11)).unwrap();
            for _ in 0..10_000 {
                s.sample().unwrap();
            }
            assert_eq!(s.health_check(), HealthState::Pass);
        }
    }

    #[test]
    fn model_validation() {
        let mut m = SensorModel::default();
        m.hi = m.lo;
        assert!(SimulatedSensor::new(m).is_err());
        let m = SensorModel {
            harvest_bits: 3,
            ..SensorModel::default()
        };
        assert!(SimulatedSensor::new(m).is_err());
        let m = SensorModel {
            walk_step: 0.0,
            ..SensorModel::default()
        };
        assert!(SimulatedSensor::new(m).is_err());
    }

    #[test]
    fn replay_returns_words_then_exhausts() {
        let bytes = [1u8, 0, 0, 0, 0xff, 0xff, 0, 0x80];
        let mut r = ReplaySource::from_bytes(&bytes).unwrap();
        assert_eq!(r.sample().unwrap(), 1);
        assert_eq!(r.sample().unwrap(), 0x8000_ffff);
        assert!(matches!(r.sample(), Err(Error::Exhausted(2))));
        assert!(ReplaySource::from_bytes(&bytes[..5]).is_err());
    }

    #[test]
    fn stuck_source_fails_after_64_readings() {
        let mut r = ReplaySource::from_words(vec![0x5555_5555; 100]);
        for _ in 0..63 {
            r.sample().unwrap();
        }
        assert!(matches!(
            r.sample(),
            Err(Error::SourceUnhealthy(HealthFailure::Stuck))
        ));
        assert_eq!(r.health_check(), HealthState::Fail(HealthFailure::Stuck));
        assert!(r.sample().is_err());
        r.reset();
        assert_eq!(r.health_check(), HealthState::Pass);
        assert_eq!(r.sample().unwrap(), 0x5555_5555);
    }

    #[test]
    fn all_ones_fails_bias_at_1024_bits() {
        // Alternate two all-ones-heavy words so the stuck rule stays quiet.
        let words: Vec<u32> = (0..64)
            .map(|i| if i % 2 == 0 { u32::MAX } else { 0xFFFF_FFFE })
            .collect();
        let mut r = ReplaySource::from_words(words);
        for _ in 0..31 {
            r.sample().unwrap();
        }
        match r.sample() {
            Err(Error::SourceUnhealthy(HealthFailure::Bias { ones_fraction })) => {
                assert!(ones_fraction > 0.8)
            }
            other => panic!("expected bias failure, got {other:?}"),
        }
    }

    #[test]
    fn all_ones_file_fails_health() {
        let mut r = ReplaySource::from_bytes(&[0xff; 4 * 200]).unwrap();
        let err = (0..200).find_map(|_| r.sample().err()).unwrap();
        assert!(matches!(err, Error::SourceUnhealthy(_)));
    }

    #[test]
    fn system_source_draws() {
        let mut s = SystemSource::new();
        let words: Vec<u32> = (0..8).map(|_| s.sample().unwrap()).collect();
        assert!(words.windows(2).any(|w| w[0] != w[1]));
    }

    struct Counter(Vec<u32>);
    impl MixEntropy for Counter {
        fn mix_entropy(&mut self, word: u32, _mode: MixMode) {
            self.0.push(word);
        }
    }

    #[test]
    fn schedule_off_by_one() {
        for k in [1u64, 2, 3, 7] {
            let mut sched =
                ReseedSchedule::new(ReseedPolicy::new(k, MixMode::XorState).unwrap()).unwrap();
            let mut source = SimulatedSensor::new(SensorModel::default()).unwrap();
            let mut target = Counter(vec![]);
            for outputs in 1..=100u64 {
                sched.after_output(&mut target, &mut source).unwrap();
                assert_eq!(target.0.len() as u64, outputs / k, "k={k} after {outputs}");
            }
            assert_eq!(sched.reseeds(), 100 / k);
        }
        assert!(ReseedPolicy::new(0, MixMode::XorState).is_err());
    }

    #[test]
    fn policy_json_round_trip() {
        let p = ReseedPolicy::new(5, MixMode::PerturbValue).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"{"interval":5,"mode":"perturb-value"}"#);
        assert_eq!(serde_json::from_str::<ReseedPolicy>(&json).unwrap(), p);
    }
}
