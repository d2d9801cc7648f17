//! Signed two's-complement fixed-point arithmetic with an explicit Q-format.
//!
//! Every operation saturates on overflow. Multiplication keeps the exact
//! double-width product and truncates toward negative infinity, so results are
//! bit-reproducible across platforms. Sine and cosine come from a committed
//! 1024-entry quarter-wave table in Q1.30 with linear interpolation.
//!
//! Angles are reduced against the format's own representable π
//! (`round(π · 2^fraction_bits)`), which the datapath treats as exactly half a
//! turn. That makes `sin(±π)` and `sin(0)` exactly zero in every format.

use std::fmt;
use std::sync::LazyLock;

use crate::error::{Error, Result};

/// Number of entries in the quarter-wave sine table.
pub const SINE_TABLE_LEN: usize = 1024;

/// Fraction bits of the sine table entries (Q1.30).
pub const SINE_TABLE_FRACTION_BITS: u32 = 30;

/// `round(π · 2^126)`.
const PI_Q126: u128 = 0xc90f_daa2_2168_c234_c4c6_628b_80dc_1cd1;

const SINE_TABLE_SRC: &str = include_str!("../data/sine_q1_30.txt");

// Index 1024 holds sin(π/2) = 2^30 so interpolation on the last segment needs
// no special case.
static SINE_TABLE: LazyLock<[i64; SINE_TABLE_LEN + 1]> = LazyLock::new(|| {
    let mut table = [0i64; SINE_TABLE_LEN + 1];
    let mut count = 0;
    for (i, line) in SINE_TABLE_SRC.lines().enumerate() {
        table[i] = line
            .trim()
            .parse()
            .expect("sine table fixture is malformed");
        count += 1;
    }
    assert_eq!(
        count, SINE_TABLE_LEN,
        "sine table fixture must have 1024 entries"
    );
    table[SINE_TABLE_LEN] = 1 << SINE_TABLE_FRACTION_BITS;
    table
});

/// The committed quarter-wave table: entry `i` is `round(sin(i·π/2048) · 2^30)`.
pub fn sine_table() -> &'static [i64] {
    &SINE_TABLE[..SINE_TABLE_LEN]
}

/// Fixed-point layout: one sign bit, `integer_bits`, `fraction_bits`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QFormat {
    integer_bits: u32,
    fraction_bits: u32,
}

impl QFormat {
    /// Q3.28, the angle format of the pendulum core.
    pub const Q3_28: QFormat = QFormat::new_unchecked(3, 28);
    /// Q6.25, the angular-velocity format of the pendulum core.
    pub const Q6_25: QFormat = QFormat::new_unchecked(6, 25);
    /// Q3.29, the logistic-map parameter format.
    pub const Q3_29: QFormat = QFormat::new_unchecked(3, 29);
    /// Q0.32, the logistic seed format.
    pub const Q0_32: QFormat = QFormat::new_unchecked(0, 32);

    pub fn new(integer_bits: u32, fraction_bits: u32) -> Result<Self> {
        if fraction_bits < 1 {
            return Err(Error::invalid("Q-format needs at least one fraction bit"));
        }
        if integer_bits + fraction_bits > 63 {
            return Err(Error::invalid(format!(
                "Q{integer_bits}.{fraction_bits} exceeds 64 bits including sign"
            )));
        }
        Ok(Self::new_unchecked(integer_bits, fraction_bits))
    }

    pub(crate) const fn new_unchecked(integer_bits: u32, fraction_bits: u32) -> Self {
        assert!(fraction_bits >= 1 && integer_bits + fraction_bits <= 63);
        QFormat {
            integer_bits,
            fraction_bits,
        }
    }

    pub fn integer_bits(&self) -> u32 {
        self.integer_bits
    }

    pub fn fraction_bits(&self) -> u32 {
        self.fraction_bits
    }

    /// Total width including the sign bit.
    pub fn total_bits(&self) -> u32 {
        1 + self.integer_bits + self.fraction_bits
    }

    pub fn max_raw(&self) -> i64 {
        ((1i128 << (self.integer_bits + self.fraction_bits)) - 1) as i64
    }

    pub fn min_raw(&self) -> i64 {
        (-(1i128 << (self.integer_bits + self.fraction_bits))) as i64
    }

    /// Smallest positive step, `2^-fraction_bits`.
    pub fn resolution(&self) -> f64 {
        (-(self.fraction_bits as f64)).exp2()
    }

    /// `round(π · 2^fraction_bits)`, the datapath's half turn, saturated to
    /// the format when π itself is out of range.
    pub fn pi_raw(&self) -> i64 {
        self.saturate(self.pi_raw_wide() as i128)
    }

    fn pi_raw_wide(&self) -> u128 {
        let shift = 126 - self.fraction_bits;
        (PI_Q126 + (1u128 << (shift - 1))) >> shift
    }

    fn saturate(&self, wide: i128) -> i64 {
        wide.clamp(self.min_raw() as i128, self.max_raw() as i128) as i64
    }
}

impl fmt::Display for QFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}.{}", self.integer_bits, self.fraction_bits)
    }
}

/// A value `raw / 2^fraction_bits` in a given [`QFormat`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FixedPoint {
    raw: i64,
    format: QFormat,
}

impl FixedPoint {
    /// Wraps a raw integer, saturating it into the format's range.
    pub fn from_raw(raw: i64, format: QFormat) -> Self {
        FixedPoint {
            raw: format.saturate(raw as i128),
            format,
        }
    }

    pub fn zero(format: QFormat) -> Self {
        FixedPoint { raw: 0, format }
    }

    /// Nearest representable value, ties to even on the raw integer,
    /// saturating outside the format's range.
    pub fn from_f64(value: f64, format: QFormat) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::invalid(format!(
                "cannot convert {value} to fixed point"
            )));
        }
        let scaled = (value * (format.fraction_bits as f64).exp2()).round_ties_even();
        let bound = ((format.integer_bits + format.fraction_bits) as f64).exp2();
        let raw = if scaled >= bound {
            format.max_raw()
        } else if scaled < -bound {
            format.min_raw()
        } else {
            scaled as i64
        };
        Ok(FixedPoint { raw, format })
    }

    pub fn raw(&self) -> i64 {
        self.raw
    }

    pub fn format(&self) -> QFormat {
        self.format
    }

    pub fn to_f64(&self) -> f64 {
        self.raw as f64 * (-(self.format.fraction_bits as f64)).exp2()
    }

    /// Re-expresses the value in `target`: nearest, ties to even, saturating.
    pub fn convert(&self, target: QFormat) -> FixedPoint {
        let from = self.format.fraction_bits as i32;
        let to = target.fraction_bits as i32;
        let raw = self.raw as i128;
        let wide = if to >= from {
            raw << (to - from)
        } else {
            round_shift_right_even(raw, (from - to) as u32)
        };
        FixedPoint {
            raw: target.saturate(wide),
            format: target,
        }
    }

    fn same_format(&self, other: &FixedPoint) -> Result<()> {
        if self.format != other.format {
            return Err(Error::invalid(format!(
                "format mismatch: {} vs {}",
                self.format, other.format
            )));
        }
        Ok(())
    }

    /// Exact double-width product, floored to the shared format, saturated.
    pub fn mul_floor(&self, other: &FixedPoint) -> Result<FixedPoint> {
        self.same_format(other)?;
        let product = self.raw as i128 * other.raw as i128;
        Ok(FixedPoint {
            raw: self.format.saturate(product >> self.format.fraction_bits),
            format: self.format,
        })
    }

    /// Quotient floored to the shared format, saturated.
    pub fn div_floor(&self, other: &FixedPoint) -> Result<FixedPoint> {
        self.same_format(other)?;
        if other.raw == 0 {
            return Err(Error::invalid("fixed-point division by zero"));
        }
        let numerator = (self.raw as i128) << self.format.fraction_bits;
        Ok(FixedPoint {
            raw: self
                .format
                .saturate(floor_div(numerator, other.raw as i128)),
            format: self.format,
        })
    }

    pub fn add_sat(&self, other: &FixedPoint) -> Result<FixedPoint> {
        self.same_format(other)?;
        Ok(FixedPoint {
            raw: self.format.saturate(self.raw as i128 + other.raw as i128),
            format: self.format,
        })
    }

    pub fn sub_sat(&self, other: &FixedPoint) -> Result<FixedPoint> {
        self.same_format(other)?;
        Ok(FixedPoint {
            raw: self.format.saturate(self.raw as i128 - other.raw as i128),
            format: self.format,
        })
    }

    pub fn neg_sat(&self) -> FixedPoint {
        FixedPoint {
            raw: self.format.saturate(-(self.raw as i128)),
            format: self.format,
        }
    }

    /// Sine of an angle in radians, returned in the angle's own format.
    pub fn sin(&self) -> FixedPoint {
        let phase = turn_phase(self.raw.unsigned_abs(), self.format);
        let value = table_sine(phase);
        self.with_q30(if self.raw < 0 { -value } else { value })
    }

    /// Cosine via the sine table shifted a quarter turn.
    pub fn cos(&self) -> FixedPoint {
        let phase = turn_phase(self.raw.unsigned_abs(), self.format).wrapping_add(1 << 30);
        self.with_q30(table_sine(phase))
    }

    // Floors the magnitude so that sin(-x) == -sin(x) bit for bit.
    fn with_q30(&self, q30: i64) -> FixedPoint {
        let f = self.format.fraction_bits;
        let magnitude = q30.unsigned_abs() as i128;
        let scaled = if f >= SINE_TABLE_FRACTION_BITS {
            magnitude << (f - SINE_TABLE_FRACTION_BITS)
        } else {
            magnitude >> (SINE_TABLE_FRACTION_BITS - f)
        };
        let magnitude = self.format.saturate(scaled);
        FixedPoint {
            raw: if q30 < 0 { -magnitude } else { magnitude },
            format: self.format,
        }
    }
}

impl fmt::Display for FixedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} raw {})", self.to_f64(), self.format, self.raw)
    }
}

fn floor_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn round_shift_right_even(value: i128, shift: u32) -> i128 {
    let floor = value >> shift;
    let remainder = value - (floor << shift);
    let half = 1i128 << (shift - 1);
    if remainder > half || (remainder == half && floor & 1 == 1) {
        floor + 1
    } else {
        floor
    }
}

/// Angle magnitude as an unsigned Q0.32 fraction of a turn, wrapping modulo
/// one turn. The format's `pi_raw` maps to exactly half a turn.
fn turn_phase(magnitude: u64, format: QFormat) -> u32 {
    let pi = format.pi_raw_wide();
    ((magnitude as u128 * (1u128 << 31)) / pi) as u32
}

/// Signed sine in Q1.30 for a Q0.32 turn phase.
fn table_sine(phase: u32) -> i64 {
    let quadrant = phase >> 30;
    let mut position = phase & ((1 << 30) - 1);
    if quadrant & 1 == 1 {
        position = (1 << 30) - position;
    }
    let value = interpolate(position);
    if quadrant >= 2 {
        -value
    } else {
        value
    }
}

/// Quarter-wave lookup: `position` in [0, 2^30] spans [0, π/2].
fn interpolate(position: u32) -> i64 {
    let table = &*SINE_TABLE;
    let index = (position >> 20) as usize;
    if index >= SINE_TABLE_LEN {
        return table[SINE_TABLE_LEN];
    }
    let frac = (position & 0xF_FFFF) as i64;
    let lo = table[index];
    let hi = table[index + 1];
    lo + (((hi - lo) * frac) >> 20)
}
