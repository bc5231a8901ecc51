//! XorShift32 generator and the gap mapper that turns its output into
//! decimation step sizes.
//!
//! The shift triple (13, 17, 5) is part of the record contract: a seed must
//! regenerate the same sampling pattern on any implementation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrngError {
    #[error("seed must be nonzero")]
    ZeroSeed,
    #[error("compression ratio must be at least 2 (got {0})")]
    RatioTooSmall(u32),
    #[error("compression ratio {0} exceeds the 16-bit record field")]
    RatioTooLarge(u32),
}

/// Marsaglia's 32-bit xorshift with the (13, 17, 5) triple. Period 2^32 - 1
/// over the nonzero states; zero is absorbing and never constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct XorShift32 {
    state: u32,
}

impl XorShift32 {
    pub fn new(seed: u32) -> Result<Self, PrngError> {
        if seed == 0 {
            return Err(PrngError::ZeroSeed);
        }
        Ok(Self { state: seed })
    }

    pub fn state(self) -> u32 {
        self.state
    }

    /// Pure advance: returns the successor state, whose value is also the
    /// output word.
    #[must_use]
    pub fn advance(self) -> (Self, u32) {
        let mut x = self.state;
        x ^= x << 13;
        x ^= x >> 17;
        x ^= x << 5;
        (Self { state: x }, x)
    }

    pub fn next_u32(&mut self) -> u32 {
        let (next, out) = self.advance();
        *self = next;
        out
    }

    /// Draws the next gap under `policy`.
    pub fn next_step(&mut self, policy: StepPolicy) -> u32 {
        policy.step_from(self.next_u32())
    }
}

/// How a raw 32-bit draw becomes a gap to the next retained sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StepMode {
    /// `1 + (x mod 2·cr)`: gaps uniform on [1, 2·cr], mean cr + 1/2.
    LiteralEq1,
    /// `1 + (x mod (2·cr - 1))`: gaps uniform on [1, 2·cr - 1], mean exactly cr.
    #[default]
    MeanExact,
}

impl StepMode {
    pub fn code(self) -> u8 {
        match self {
            StepMode::LiteralEq1 => 0,
            StepMode::MeanExact => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(StepMode::LiteralEq1),
            1 => Some(StepMode::MeanExact),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StepMode::LiteralEq1 => "literal_eq1",
            StepMode::MeanExact => "mean_exact",
        }
    }
}

impl fmt::Display for StepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StepMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "literal_eq1" | "literal" => Ok(StepMode::LiteralEq1),
            "mean_exact" | "exact" => Ok(StepMode::MeanExact),
            other => Err(format!("unknown step policy '{other}'")),
        }
    }
}

/// Compression ratio plus the gap mapping used to reach it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StepPolicy {
    mode: StepMode,
    cr: u32,
}

impl StepPolicy {
    pub fn new(mode: StepMode, cr: u32) -> Result<Self, PrngError> {
        if cr < 2 {
            return Err(PrngError::RatioTooSmall(cr));
        }
        if cr > u16::MAX as u32 {
            return Err(PrngError::RatioTooLarge(cr));
        }
        Ok(Self { mode, cr })
    }

    pub fn mean_exact(cr: u32) -> Result<Self, PrngError> {
        Self::new(StepMode::MeanExact, cr)
    }

    pub fn mode(self) -> StepMode {
        self.mode
    }

    pub fn cr(self) -> u32 {
        self.cr
    }

    /// Number of distinct gap values, i.e. the modulus applied to the draw.
    pub fn modulus(self) -> u32 {
        match self.mode {
            StepMode::LiteralEq1 => 2 * self.cr,
            StepMode::MeanExact => 2 * self.cr - 1,
        }
    }

    /// Largest gap the policy can produce; the smallest is always 1.
    pub fn max_step(self) -> u32 {
        self.modulus()
    }

    /// Expected gap length.
    pub fn mean_step(self) -> f64 {
        (1.0 + self.modulus() as f64) / 2.0
    }

    pub fn step_from(self, x: u32) -> u32 {
        1 + x % self.modulus()
    }
}

/// Pure form of a single step draw.
pub fn next_step(state: XorShift32, policy: StepPolicy) -> (XorShift32, u32) {
    let (next, x) = state.advance();
    (next, policy.step_from(x))
}
