//! Galois LFSRs and an XOR-combined multi-LFSR bank.
//!
//! The canonical update is the Galois form
//! `S' = (S >> 1) ^ (lsb(S) ? P : 0)`, emitting `lsb(S)` before the shift.
//! Bit `k-1` of the mask `P` is set for every `x^k` term of the feedback
//! polynomial; the constant term is implied. [`FibonacciLfsr`] provides the
//! two-tap `X_n = X_{n-k} ^ X_{n-m}` form.
//!
//! Serial and byte-at-a-time stepping produce identical streams. The byte path
//! uses a 256-entry table per register since the Galois step is linear: eight
//! steps of `S` equal `(S >> 8) ^ T[S & 0xff]`.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_WIDTH: u32 = 3;
pub const MAX_WIDTH: u32 = 63;

const BUILTIN_POLYNOMIALS: &str = include_str!("../data/primitive_polys.tsv");

static BUILTIN_TABLE: LazyLock<PolynomialTable> = LazyLock::new(|| {
    PolynomialTable::parse(BUILTIN_POLYNOMIALS).expect("built-in polynomial table is malformed")
});

/// Maximal-length feedback masks indexed by register width.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PolynomialTable {
    masks: BTreeMap<u32, u64>,
}

impl PolynomialTable {
    /// The compiled-in table covering widths 3 through 32.
    pub fn builtin() -> &'static PolynomialTable {
        &BUILTIN_TABLE
    }

    /// Parses `width<TAB>hex-mask` lines. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut masks = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::invalid(format!("polynomial table line {}: {line:?}", lineno + 1));
            let (width, mask) = line.split_once('\t').ok_or_else(bad)?;
            let width: u32 = width.trim().parse().map_err(|_| bad())?;
            let mask = mask.trim();
            let mask = mask
                .strip_prefix("0x")
                .or_else(|| mask.strip_prefix("0X"))
                .unwrap_or(mask);
            let mask = u64::from_str_radix(mask, 16).map_err(|_| bad())?;
            validate_polynomial(width, mask)?;
            masks.insert(width, mask);
        }
        Ok(PolynomialTable { masks })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, width: u32) -> Option<u64> {
        self.masks.get(&width).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.masks.iter().map(|(&w, &m)| (w, m))
    }
}

fn width_mask(width: u32) -> u64 {
    (1u64 << width) - 1
}

fn validate_polynomial(width: u32, polynomial: u64) -> Result<()> {
    if !(MIN_WIDTH..=MAX_WIDTH).contains(&width) {
        return Err(Error::invalid(format!(
            "LFSR width {width} outside [{MIN_WIDTH}, {MAX_WIDTH}]"
        )));
    }
    if polynomial >> (width - 1) != 1 {
        return Err(Error::invalid(format!(
            "polynomial {polynomial:#x} does not have degree {width}"
        )));
    }
    Ok(())
}

/// Width, feedback mask and nonzero seed of one register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LfsrConfig {
    width: u32,
    polynomial: u64,
    seed: u64,
}

impl LfsrConfig {
    pub fn new(width: u32, polynomial: u64, seed: u64) -> Result<Self> {
        validate_polynomial(width, polynomial)?;
        if seed == 0 {
            return Err(Error::invalid("LFSR seed 0 is the lockup state"));
        }
        if seed > width_mask(width) {
            return Err(Error::invalid(format!(
                "seed {seed:#x} does not fit a {width}-bit register"
            )));
        }
        Ok(LfsrConfig {
            width,
            polynomial,
            seed,
        })
    }

    /// Uses the built-in maximal-length polynomial for `width`.
    pub fn with_builtin_polynomial(width: u32, seed: u64) -> Result<Self> {
        let polynomial = PolynomialTable::builtin()
            .get(width)
            .ok_or_else(|| Error::invalid(format!("no built-in polynomial for width {width}")))?;
        Self::new(width, polynomial, seed)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn polynomial(&self) -> u64 {
        self.polynomial
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `2^width - 1`, the period when the polynomial is primitive.
    pub fn maximal_period(&self) -> u64 {
        width_mask(self.width)
    }
}

#[derive(Debug, Clone)]
struct ByteTable {
    // Eight output bits, first output in the most significant position.
    output: [u8; 256],
    feedback: [u64; 256],
}

impl ByteTable {
    fn new(polynomial: u64) -> Box<Self> {
        let mut table = Box::new(ByteTable {
            output: [0; 256],
            feedback: [0; 256],
        });
        for low in 0..256u64 {
            let mut s = low;
            let mut out = 0u8;
            for _ in 0..8 {
                let bit = s & 1;
                out = (out << 1) | bit as u8;
                s = (s >> 1) ^ (polynomial & bit.wrapping_neg());
            }
            table.output[low as usize] = out;
            table.feedback[low as usize] = s;
        }
        table
    }
}

/// A single Galois LFSR.
#[derive(Debug, Clone)]
pub struct Lfsr {
    register: u64,
    config: LfsrConfig,
    table: Box<ByteTable>,
}

impl Lfsr {
    pub fn new(config: LfsrConfig) -> Self {
        Lfsr {
            register: config.seed,
            table: ByteTable::new(config.polynomial),
            config,
        }
    }

    pub fn config(&self) -> &LfsrConfig {
        &self.config
    }

    pub fn register(&self) -> u64 {
        self.register
    }

    /// One Galois step; returns the emitted bit (the pre-shift LSB).
    pub fn step(&mut self) -> Result<bool> {
        if self.register == 0 {
            return Err(Error::CorruptedState("LFSR register is zero".into()));
        }
        Ok(self.step_unchecked())
    }

    #[inline]
    fn step_unchecked(&mut self) -> bool {
        let bit = self.register & 1;
        self.register = (self.register >> 1) ^ (self.config.polynomial & bit.wrapping_neg());
        bit == 1
    }

    /// Eight steps at once, first emitted bit in the MSB.
    #[inline]
    pub fn next_byte(&mut self) -> u8 {
        let low = (self.register & 0xff) as usize;
        self.register = (self.register >> 8) ^ self.table.feedback[low];
        self.table.output[low]
    }

    /// `nbits` steps packed most-significant-first.
    pub fn next_word(&mut self, nbits: u32) -> Result<u64> {
        check_word_bits(nbits)?;
        let mut word = 0u64;
        let mut remaining = nbits;
        while remaining >= 8 {
            word = (word << 8) | self.next_byte() as u64;
            remaining -= 8;
        }
        for _ in 0..remaining {
            word = (word << 1) | self.step_unchecked() as u64;
        }
        Ok(word)
    }

    /// XORs `chunk` into the register, forcing the LSB if it would lock up.
    pub fn mix(&mut self, chunk: u64) {
        self.register ^= chunk & width_mask(self.config.width);
        if self.register == 0 {
            self.register = 1;
        }
    }
}

fn check_word_bits(nbits: u32) -> Result<()> {
    if !(1..=64).contains(&nbits) {
        return Err(Error::invalid(format!(
            "word width {nbits} outside [1, 64]"
        )));
    }
    Ok(())
}

/// Steps until the register first returns to its seed, or `None` if that
/// takes more than `limit` steps.
pub fn measure_period(config: &LfsrConfig, limit: u64) -> Option<u64> {
    let mut lfsr = Lfsr::new(*config);
    for steps in 1..=limit {
        lfsr.step_unchecked();
        if lfsr.register == config.seed {
            return Some(steps);
        }
    }
    None
}

/// Two-tap Fibonacci register: `X_n = X_{n-k} ^ X_{n-m}` with `k < m`.
///
/// Bit `j` of the register holds `X_{n-1-j}`. For a primitive trinomial
/// `x^m + x^a + 1`, both `k = a` and `k = m - a` give period `2^m - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FibonacciLfsr {
    register: u64,
    seed: u64,
    near_tap: u32,
    far_tap: u32,
}

impl FibonacciLfsr {
    pub fn new(near_tap: u32, far_tap: u32, seed: u64) -> Result<Self> {
        if !(MIN_WIDTH..=MAX_WIDTH).contains(&far_tap) || near_tap == 0 || near_tap >= far_tap {
            return Err(Error::invalid(format!(
                "Fibonacci taps need 1 <= k < m <= {MAX_WIDTH}, got k={near_tap} m={far_tap}"
            )));
        }
        if seed == 0 || seed > width_mask(far_tap) {
            return Err(Error::invalid(format!(
                "seed {seed:#x} invalid for a {far_tap}-bit register"
            )));
        }
        Ok(FibonacciLfsr {
            register: seed,
            seed,
            near_tap,
            far_tap,
        })
    }

    pub fn register(&self) -> u64 {
        self.register
    }

    /// Computes and emits the next sequence bit.
    pub fn step(&mut self) -> bool {
        let bit =
            ((self.register >> (self.near_tap - 1)) ^ (self.register >> (self.far_tap - 1))) & 1;
        self.register = ((self.register << 1) | bit) & width_mask(self.far_tap);
        bit == 1
    }

    pub fn measure_period(&self, limit: u64) -> Option<u64> {
        let mut probe = FibonacciLfsr {
            register: self.seed,
            ..self.clone()
        };
        for steps in 1..=limit {
            probe.step();
            if probe.register == self.seed {
                return Some(steps);
            }
        }
        None
    }
}

/// Default bank: widths 31, 29 and 23 with pairwise coprime exponents.
pub const DEFAULT_BANK: [(u32, u64); 3] = [(31, 0x6A09_E667), (29, 0x1B67_AE85), (23, 0x6E_F372)];

/// Two or more Galois LFSRs whose output bits are XORed together.
#[derive(Debug, Clone)]
pub struct MultiLfsr {
    banks: Vec<Lfsr>,
}

impl MultiLfsr {
    pub fn new(configs: &[LfsrConfig]) -> Result<Self> {
        if configs.len() < 2 {
            return Err(Error::invalid("a multi-LFSR needs at least two banks"));
        }
        for (i, a) in configs.iter().enumerate() {
            for b in &configs[i + 1..] {
                if a.width == b.width && a.polynomial == b.polynomial {
                    return Err(Error::invalid(format!(
                        "banks share width {} and polynomial {:#x}; their outputs would cancel",
                        a.width, a.polynomial
                    )));
                }
            }
        }
        Ok(MultiLfsr {
            banks: configs.iter().copied().map(Lfsr::new).collect(),
        })
    }

    pub fn default_bank() -> Self {
        let configs: Vec<_> = DEFAULT_BANK
            .iter()
            .map(|&(w, seed)| LfsrConfig::with_builtin_polynomial(w, seed).expect("default bank"))
            .collect();
        Self::new(&configs).expect("default bank")
    }

    pub fn banks(&self) -> &[Lfsr] {
        &self.banks
    }

    pub fn registers(&self) -> Vec<u64> {
        self.banks.iter().map(Lfsr::register).collect()
    }

    pub fn next_bit(&mut self) -> bool {
        self.banks
            .iter_mut()
            .fold(false, |acc, bank| acc ^ bank.step_unchecked())
    }

    pub fn next_byte(&mut self) -> u8 {
        self.banks
            .iter_mut()
            .fold(0, |acc, bank| acc ^ bank.next_byte())
    }

    /// Steps every bank `nbits` times; bits packed most-significant-first.
    pub fn next_word(&mut self, nbits: u32) -> Result<u64> {
        check_word_bits(nbits)?;
        let mut word = 0u64;
        let mut remaining = nbits;
        while remaining >= 8 {
            word = (word << 8) | self.next_byte() as u64;
            remaining -= 8;
        }
        for _ in 0..remaining {
            word = (word << 1) | self.next_bit() as u64;
        }
        Ok(word)
    }

    /// XORs `word` into the registers, low bits first, round-robin: each bank
    /// takes the next `width` bits of the word, cycling through its 32 bits.
    pub fn mix(&mut self, word: u32) {
        let mut cursor = 0u32;
        for bank in &mut self.banks {
            let width = bank.config.width;
            let mut chunk = 0u64;
            for j in 0..width {
                let bit = (word >> ((cursor + j) % 32)) & 1;
                chunk |= (bit as u64) << j;
            }
            cursor = (cursor + width) % 32;
            bank.mix(chunk);
        }
    }

    /// Steps until every register is simultaneously back at its seed.
    pub fn joint_period(&self, limit: u64) -> Option<u64> {
        let mut probe = self.clone();
        let start = self.registers();
        for steps in 1..=limit {
            probe.next_bit();
            if probe
                .banks
                .iter()
                .zip(&start)
                .all(|(b, &s)| b.register == s)
            {
                return Some(steps);
            }
        }
        None
    }

    /// LCM of the banks' maximal periods; the joint period when every
    /// polynomial is primitive.
    pub fn nominal_period(&self) -> u128 {
        self.banks
            .iter()
            .map(|b| b.config.maximal_period() as u128)
            .fold(1, |acc, p| acc / gcd(acc, p) * p)
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
