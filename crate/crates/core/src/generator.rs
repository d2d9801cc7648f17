//! Common generator interface, construction from a serializable spec, and
//! scheduled reseeding.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::entropy::{
    EntropySource, MixEntropy, MixMode, ReplaySource, ReseedPolicy, ReseedSchedule, SensorModel,
    SimulatedSensor, SystemSource,
};
use crate::error::{Error, Result};
use crate::lfsr::{Lfsr, LfsrConfig, MultiLfsr, DEFAULT_BANK};
use crate::logistic::{LogisticConfig, LogisticGenerator};
use crate::pendulum::{PendulumConfig, PendulumGenerator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    /// A single Galois LFSR.
    Lfsr,
    MultiLfsr,
    Logistic,
    Pendulum,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 4] = [
        GeneratorKind::Lfsr,
        GeneratorKind::MultiLfsr,
        GeneratorKind::Logistic,
        GeneratorKind::Pendulum,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            GeneratorKind::Lfsr => "lfsr",
            GeneratorKind::MultiLfsr => "multi-lfsr",
            GeneratorKind::Logistic => "logistic",
            GeneratorKind::Pendulum => "pendulum",
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, GeneratorKind::Lfsr | GeneratorKind::MultiLfsr)
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GeneratorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown generator {s:?}")))
    }
}

pub trait Generator: MixEntropy + Send {
    fn kind(&self) -> GeneratorKind;

    /// Width of each value returned by [`next_output`](Self::next_output).
    fn output_bits(&self) -> u32;

    fn next_output(&mut self) -> Result<u64>;

    /// Fills `buf` with outputs packed most-significant-bit first. Outputs
    /// are never split across calls: leftover bits of the last one are dropped.
    fn fill_bytes(&mut self, buf: &mut [u8]) -> Result<()> {
        let width = self.output_bits();
        let mut packer = BitPacker::default();
        let mut filled = 0;
        while filled < buf.len() {
            packer.push(self.next_output()?, width);
            while filled < buf.len() {
                match packer.pop_byte() {
                    Some(b) => {
                        buf[filled] = b;
                        filled += 1;
                    }
                    None => break,
                }
            }
        }
        Ok(())
    }
}

/// Accumulates fixed-width values and releases whole bytes, MSB first.
#[derive(Debug, Clone, Default)]
pub struct BitPacker {
    acc: u128,
    nbits: u32,
}

impl BitPacker {
    pub fn push(&mut self, value: u64, width: u32) {
        debug_assert!((1..=64).contains(&width) && self.nbits + width <= 128);
        let masked = if width == 64 {
            value
        } else {
            value & ((1 << width) - 1)
        };
        self.acc = (self.acc << width) | masked as u128;
        self.nbits += width;
    }

    pub fn pop_byte(&mut self) -> Option<u8> {
        if self.nbits < 8 {
            return None;
        }
        self.nbits -= 8;
        let byte = (self.acc >> self.nbits) as u8;
        self.acc &= (1u128 << self.nbits) - 1;
        Some(byte)
    }

    pub fn pending_bits(&self) -> u32 {
        self.nbits
    }
}

/// Single LFSR emitting `word_bits` serial bits per output.
#[derive(Debug, Clone)]
pub struct LfsrGenerator {
    lfsr: Lfsr,
    word_bits: u32,
}

impl LfsrGenerator {
    pub fn new(config: LfsrConfig, word_bits: u32) -> Result<Self> {
        check_word_bits(word_bits)?;
        Ok(LfsrGenerator {
            lfsr: Lfsr::new(config),
            word_bits,
        })
    }

    pub fn lfsr(&self) -> &Lfsr {
        &self.lfsr
    }
}

impl MixEntropy for LfsrGenerator {
    fn mix_entropy(&mut self, word: u32, mode: MixMode) {
        self.lfsr.mix_entropy(word, mode);
    }
}

impl Generator for LfsrGenerator {
    fn kind(&self) -> GeneratorKind {
        GeneratorKind::Lfsr
    }

    fn output_bits(&self) -> u32 {
        self.word_bits
    }

    fn next_output(&mut self) -> Result<u64> {
        self.lfsr.next_word(self.word_bits)
    }

    fn fill_bytes(&mut self, buf: &mut [u8]) -> Result<()> {
        if self.word_bits % 8 != 0 {
            return fill_by_packing(self, buf);
        }
        for b in buf {
            *b = self.lfsr.next_byte();
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MultiLfsrGenerator {
    bank: MultiLfsr,
    word_bits: u32,
}

impl MultiLfsrGenerator {
    pub fn new(bank: MultiLfsr, word_bits: u32) -> Result<Self> {
        check_word_bits(word_bits)?;
        Ok(MultiLfsrGenerator { bank, word_bits })
    }

    pub fn bank(&self) -> &MultiLfsr {
        &self.bank
    }
}

impl MixEntropy for MultiLfsrGenerator {
    fn mix_entropy(&mut self, word: u32, mode: MixMode) {
        self.bank.mix_entropy(word, mode);
    }
}

impl Generator for MultiLfsrGenerator {
    fn kind(&self) -> GeneratorKind {
        GeneratorKind::MultiLfsr
    }

    fn output_bits(&self) -> u32 {
        self.word_bits
    }

    fn next_output(&mut self) -> Result<u64> {
        self.bank.next_word(self.word_bits)
    }

    fn fill_bytes(&mut self, buf: &mut [u8]) -> Result<()> {
        if self.word_bits % 8 != 0 {
            return fill_by_packing(self, buf);
        }
        for b in buf {
            *b = self.bank.next_byte();
        }
        Ok(())
    }
}

// The serial stream is the same whatever the word width, so byte-aligned
// widths can bypass the packer.
fn fill_by_packing<G: Generator + ?Sized>(g: &mut G, buf: &mut [u8]) -> Result<()> {
    let width = g.output_bits();
    let mut packer = BitPacker::default();
    for b in buf {
        while packer.pending_bits() < 8 {
            packer.push(g.next_output()?, width);
        }
        *b = packer.pop_byte().expect("at least one byte pending");
    }
    Ok(())
}

fn check_word_bits(word_bits: u32) -> Result<()> {
    if !(1..=64).contains(&word_bits) {
        return Err(Error::invalid(format!(
            "word_bits {word_bits} outside [1, 64]"
        )));
    }
    Ok(())
}

impl Generator for LogisticGenerator {
    fn kind(&self) -> GeneratorKind {
        GeneratorKind::Logistic
    }

    fn output_bits(&self) -> u32 {
        self.config().output_bits()
    }

    fn next_output(&mut self) -> Result<u64> {
        self.extract_bits().map(u64::from)
    }
}

impl Generator for PendulumGenerator {
    fn kind(&self) -> GeneratorKind {
        GeneratorKind::Pendulum
    }

    fn output_bits(&self) -> u32 {
        16
    }

    fn next_output(&mut self) -> Result<u64> {
        self.extract_bits().map(u64::from)
    }
}

/// Wraps a generator so that every `interval` outputs one entropy word is mixed in.
pub struct Reseeded {
    inner: Box<dyn Generator>,
    source: Box<dyn EntropySource>,
    schedule: ReseedSchedule,
}

impl Reseeded {
    pub fn new(
        inner: Box<dyn Generator>,
        source: Box<dyn EntropySource>,
        policy: ReseedPolicy,
    ) -> Result<Self> {
        Ok(Reseeded {
            inner,
            source,
            schedule: ReseedSchedule::new(policy)?,
        })
    }

    pub fn reseeds(&self) -> u64 {
        self.schedule.reseeds()
    }
}

impl MixEntropy for Reseeded {
    fn mix_entropy(&mut self, word: u32, mode: MixMode) {
        self.inner.mix_entropy(word, mode);
    }
}

impl Generator for Reseeded {
    fn kind(&self) -> GeneratorKind {
        self.inner.kind()
    }

    fn output_bits(&self) -> u32 {
        self.inner.output_bits()
    }

    fn next_output(&mut self) -> Result<u64> {
        let out = self.inner.next_output()?;
        self.schedule
            .after_output(&mut *self.inner, &mut *self.source)?;
        Ok(out)
    }
}

/// One LFSR bank: width, optional Galois mask (built-in table otherwise), seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankSpec {
    pub width: u32,
    #[serde(default)]
    pub polynomial: Option<u64>,
    pub seed: u64,
}

impl BankSpec {
    pub fn to_config(&self) -> Result<LfsrConfig> {
        match self.polynomial {
            Some(p) => LfsrConfig::new(self.width, p, self.seed),
            None => LfsrConfig::with_builtin_polynomial(self.width, self.seed),
        }
    }
}

fn default_lfsr_width() -> u32 {
    16
}

fn default_lfsr_seed() -> u64 {
    0xACE1
}

fn default_multi_banks() -> Vec<BankSpec> {
    DEFAULT_BANK
        .iter()
        .map(|&(width, seed)| BankSpec {
            width,
            polynomial: None,
            seed,
        })
        .collect()
}

fn default_byte_bits() -> u32 {
    8
}

fn default_word_bits() -> u32 {
    32
}

/// Full parameter set of one generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorSpec {
    Lfsr {
        #[serde(default = "default_lfsr_width")]
        width: u32,
        #[serde(default)]
        polynomial: Option<u64>,
        #[serde(default = "default_lfsr_seed")]
        seed: u64,
        #[serde(default = "default_byte_bits")]
        word_bits: u32,
    },
    MultiLfsr {
        #[serde(default = "default_multi_banks")]
        banks: Vec<BankSpec>,
        #[serde(default = "default_word_bits")]
        word_bits: u32,
    },
    Logistic(LogisticConfig),
    Pendulum(PendulumConfig),
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec::default_for(GeneratorKind::Logistic)
    }
}

impl GeneratorSpec {
    pub fn default_for(kind: GeneratorKind) -> Self {
        match kind {
            GeneratorKind::Lfsr => GeneratorSpec::Lfsr {
                width: default_lfsr_width(),
                polynomial: None,
                seed: default_lfsr_seed(),
                word_bits: default_byte_bits(),
            },
            GeneratorKind::MultiLfsr => GeneratorSpec::MultiLfsr {
                banks: default_multi_banks(),
                word_bits: default_word_bits(),
            },
            GeneratorKind::Logistic => GeneratorSpec::Logistic(LogisticConfig::default()),
            GeneratorKind::Pendulum => GeneratorSpec::Pendulum(PendulumConfig::default()),
        }
    }

    pub fn kind(&self) -> GeneratorKind {
        match self {
            GeneratorSpec::Lfsr { .. } => GeneratorKind::Lfsr,
            GeneratorSpec::MultiLfsr { .. } => GeneratorKind::MultiLfsr,
            GeneratorSpec::Logistic(_) => GeneratorKind::Logistic,
            GeneratorSpec::Pendulum(_) => GeneratorKind::Pendulum,
        }
    }

    /// Builds the generator with its burn-in already run.
    pub fn build(&self) -> Result<Box<dyn Generator>> {
        Ok(match self {
            GeneratorSpec::Lfsr {
                width,
                polynomial,
                seed,
                word_bits,
            } => {
                let bank = BankSpec {
                    width: *width,
                    polynomial: *polynomial,
                    seed: *seed,
                };
                Box::new(LfsrGenerator::new(bank.to_config()?, *word_bits)?)
            }
            GeneratorSpec::MultiLfsr { banks, word_bits } => {
                let configs = banks
                    .iter()
                    .map(BankSpec::to_config)
                    .collect::<Result<Vec<_>>>()?;
                Box::new(MultiLfsrGenerator::new(
                    MultiLfsr::new(&configs)?,
                    *word_bits,
                )?)
            }
            GeneratorSpec::Logistic(config) => Box::new(LogisticGenerator::ready(*config)),
            GeneratorSpec::Pendulum(config) => Box::new(PendulumGenerator::ready(*config)?),
        })
    }
}

/// Where reseed and recovery entropy comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EntropySpec {
    SimulatedSensor(SensorModel),
    ReplayFile { path: std::path::PathBuf },
    System,
}

impl Default for EntropySpec {
    fn default() -> Self {
        EntropySpec::SimulatedSensor(SensorModel::default())
    }
}

impl EntropySpec {
    pub fn open(&self) -> Result<Box<dyn EntropySource>> {
        Ok(match self {
            EntropySpec::SimulatedSensor(model) => Box::new(SimulatedSensor::new(model.clone())?),
            EntropySpec::ReplayFile { path } => Box::new(ReplaySource::open(path)?),
            EntropySpec::System => Box::new(SystemSource::new()),
        })
    }
}
