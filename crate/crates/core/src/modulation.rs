//! Modulation formats available to bandwidth-variable transponders.
//!
//! Each format carries a fixed number of bits per symbol. A 12.5 GHz slot
//! modulated with `n` bits per symbol carries `12.5 * n` Gb/s, and the
//! transparent reach halves with every extra bit per symbol, starting at
//! 8000 km for BPSK.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Capacity of one slot at one bit per symbol, in Gb/s.
pub const SLOT_GBPS_PER_BIT: f64 = 12.5;

/// Transparent reach of BPSK in km; every higher level halves it.
pub const BPSK_REACH_KM: f64 = 8000.0;

#[derive(Debug, Error, PartialEq)]
pub enum ModulationError {
    #[error("bitrate must be positive and finite, got {0}")]
    InvalidBitrate(f64),
    #[error("unknown modulation format `{0}`")]
    UnknownFormat(String),
    #[error("the set of available modulation formats is empty")]
    EmptySet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModulationFormat {
    #[serde(rename = "BPSK")]
    Bpsk,
    #[serde(rename = "QPSK")]
    Qpsk,
    #[serde(rename = "8QAM")]
    Qam8,
    #[serde(rename = "16QAM")]
    Qam16,
    #[serde(rename = "32QAM")]
    Qam32,
    #[serde(rename = "64QAM")]
    Qam64,
}

impl ModulationFormat {
    /// All formats, least to most spectrally efficient.
    pub const ALL: [ModulationFormat; 6] = [
        ModulationFormat::Bpsk,
        ModulationFormat::Qpsk,
        ModulationFormat::Qam8,
        ModulationFormat::Qam16,
        ModulationFormat::Qam32,
        ModulationFormat::Qam64,
    ];

    pub fn bits_per_symbol(self) -> u32 {
        match self {
            ModulationFormat::Bpsk => 1,
            ModulationFormat::Qpsk => 2,
            ModulationFormat::Qam8 => 3,
            ModulationFormat::Qam16 => 4,
            ModulationFormat::Qam32 => 5,
            ModulationFormat::Qam64 => 6,
        }
    }

    pub fn from_bits_per_symbol(bits: u32) -> Option<Self> {
        Self::ALL.get(bits.checked_sub(1)? as usize).copied()
    }

    /// Gb/s carried by one slot.
    pub fn subcarrier_gbps(self) -> f64 {
        SLOT_GBPS_PER_BIT * self.bits_per_symbol() as f64
    }

    pub fn reach_km(self) -> f64 {
        BPSK_REACH_KM / f64::from(1u32 << (self.bits_per_symbol() - 1))
    }

    /// Per-subcarrier transponder power as tabulated for each format.
    ///
    /// Informational only: energy accounting evaluates the linear BVT model
    /// in [`crate::energy::pc_bvt`], which differs from these rounded values
    /// by less than 0.03 W.
    pub fn tabulated_power_w(self) -> f64 {
        match self {
            ModulationFormat::Bpsk => 112.374,
            ModulationFormat::Qpsk => 133.416,
            ModulationFormat::Qam8 => 154.457,
            ModulationFormat::Qam16 => 175.498,
            ModulationFormat::Qam32 => 196.539,
            ModulationFormat::Qam64 => 217.581,
        }
    }

    /// The format with one bit per symbol less, `None` for BPSK.
    pub fn next_lower(self) -> Option<Self> {
        Self::from_bits_per_symbol(self.bits_per_symbol() - 1)
    }

    pub fn next_higher(self) -> Option<Self> {
        Self::from_bits_per_symbol(self.bits_per_symbol() + 1)
    }

    pub fn name(self) -> &'static str {
        match self {
            ModulationFormat::Bpsk => "BPSK",
            ModulationFormat::Qpsk => "QPSK",
            ModulationFormat::Qam8 => "8QAM",
            ModulationFormat::Qam16 => "16QAM",
            ModulationFormat::Qam32 => "32QAM",
            ModulationFormat::Qam64 => "64QAM",
        }
    }
}

impl fmt::Display for ModulationFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModulationFormat {
    type Err = ModulationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ModulationError::UnknownFormat(s.to_string()))
    }
}

/// Number of data slots (guard band excluded) needed to carry `bitrate_gbps`.
pub fn slots_needed(bitrate_gbps: f64, m: ModulationFormat) -> Result<usize, ModulationError> {
    if !(bitrate_gbps > 0.0 && bitrate_gbps.is_finite()) {
        return Err(ModulationError::InvalidBitrate(bitrate_gbps));
    }
    let per_slot = m.subcarrier_gbps();
    let mut slots = (bitrate_gbps / per_slot).ceil().max(1.0) as usize;
    // the quotient is rounded; make sure the block really covers the demand
    if (slots as f64) * per_slot < bitrate_gbps {
        slots += 1;
    }
    Ok(slots)
}

pub fn reach_ok(distance_km: f64, m: ModulationFormat) -> bool {
    distance_km <= m.reach_km()
}

/// The formats a run may use, kept sorted from least to most efficient.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ModulationFormat>", into = "Vec<ModulationFormat>")]
pub struct ModulationSet(Vec<ModulationFormat>);

impl ModulationSet {
    pub fn new(formats: impl IntoIterator<Item = ModulationFormat>) -> Result<Self, ModulationError> {
        let mut v: Vec<_> = formats.into_iter().collect();
        v.sort();
        v.dedup();
        if v.is_empty() {
            return Err(ModulationError::EmptySet);
        }
        Ok(Self(v))
    }

    pub fn all() -> Self {
        Self(ModulationFormat::ALL.to_vec())
    }

    /// Most spectrally efficient available format.
    pub fn max(&self) -> ModulationFormat {
        *self.0.last().expect("non-empty by construction")
    }

    pub fn min(&self) -> ModulationFormat {
        self.0[0]
    }

    pub fn contains(&self, m: ModulationFormat) -> bool {
        self.0.binary_search(&m).is_ok()
    }

    /// Next less efficient format within the set.
    pub fn next_lower(&self, m: ModulationFormat) -> Option<ModulationFormat> {
        self.0.iter().rev().copied().find(|&f| f < m)
    }

    /// Formats from most to least efficient.
    pub fn descending(&self) -> impl Iterator<Item = ModulationFormat> + '_ {
        self.0.iter().rev().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = ModulationFormat> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for ModulationSet {
    fn default() -> Self {
        Self::all()
    }
}

impl TryFrom<Vec<ModulationFormat>> for ModulationSet {
    type Error = ModulationError;

    fn try_from(v: Vec<ModulationFormat>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<ModulationSet> for Vec<ModulationFormat> {
    fn from(s: ModulationSet) -> Self {
        s.0
    }
}
