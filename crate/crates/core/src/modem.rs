//! Gray-mapped constellations and the SC / OFDM / OTFS modulators.
//!
//! A modulator only decides where the data symbols live: SC places them in
//! time, OFDM in frequency and OTFS in delay-Doppler. The transmitted frame is
//! always the time-domain vector, and every modulator is unitary.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domains::{convert_frame, SignalDomain, SymbolFrame};
use crate::error::{Error, Result};
use crate::spectral::{layered_idft, otfs_precoder, Factorization};

/// Constellation choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    #[default]
    Qpsk,
    #[serde(rename = "16qam")]
    Qam16,
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" => Ok(Modulation::Qpsk),
            "16qam" | "qam16" => Ok(Modulation::Qam16),
            other => Err(Error::UnknownTag(other.to_string())),
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modulation::Qpsk => "qpsk",
            Modulation::Qam16 => "16qam",
        })
    }
}

/// A unit-average-power Gray-labelled constellation.
///
/// `points[label]` is the symbol carrying `label`, whose bits are read most
/// significant first. QPSK maps `b0 b1` to `((1-2·b0) + j(1-2·b1))/√2`, so
/// `00` is `(1+j)/√2`. 16-QAM applies the same sign rule per axis with a
/// second bit choosing the inner (`1`) or outer (`3`) amplitude, scaled by
/// `1/√10`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    pub modulation: Modulation,
    pub points: Vec<Complex64>,
    pub bits_per_symbol: usize,
}

impl Constellation {
    pub fn new(modulation: Modulation) -> Self {
        match modulation {
            Modulation::Qpsk => Self::qpsk(),
            Modulation::Qam16 => Self::qam16(),
        }
    }

    pub fn qpsk() -> Self {
        let points = (0..4u32)
            .map(|label| {
                let (b0, b1) = ((label >> 1) & 1, label & 1);
                Complex64::new(sign(b0), sign(b1)) * FRAC_1_SQRT_2
            })
            .collect();
        Self { modulation: Modulation::Qpsk, points, bits_per_symbol: 2 }
    }

    pub fn qam16() -> Self {
        let scale = 1.0 / 10f64.sqrt();
        let points = (0..16u32)
            .map(|label| {
                let (b0, b1, b2, b3) = ((label >> 3) & 1, (label >> 2) & 1, (label >> 1) & 1, label & 1);
                let i = sign(b0) * (2.0 - sign(b2));
                let q = sign(b1) * (2.0 - sign(b3));
                Complex64::new(i, q) * scale
            })
            .collect();
        Self { modulation: Modulation::Qam16, points, bits_per_symbol: 4 }
    }

    pub fn average_power(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }
}

fn sign(bit: u32) -> f64 {
    1.0 - 2.0 * bit as f64
}

/// Maps bits (one `u8` per bit, 0 or 1) to symbols.
pub fn map_bits(bits: &[u8], c: &Constellation) -> Result<Vec<Complex64>> {
    let k = c.bits_per_symbol;
    if !bits.len().is_multiple_of(k) {
        return Err(Error::LengthMismatch { expected: bits.len().div_ceil(k) * k, got: bits.len() });
    }
    Ok(bits
        .chunks_exact(k)
        .map(|chunk| {
            let label = chunk.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
            c.points[label]
        })
        .collect())
}

/// Nearest-point decisions, emitted as bits. Ties go to the lower label.
pub fn hard_demap(symbols: &[Complex64], c: &Constellation) -> Vec<u8> {
    let k = c.bits_per_symbol;
    let mut bits = Vec::with_capacity(symbols.len() * k);
    for s in symbols {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (label, p) in c.points.iter().enumerate() {
            let d = (s - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = label;
            }
        }
        for shift in (0..k).rev() {
            bits.push(((best >> shift) & 1) as u8);
        }
    }
    bits
}

/// Modulation scheme; fixes the domain that carries the data symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Scheme {
    Sc,
    Ofdm,
    Otfs,
}

impl Scheme {
    pub fn data_domain(self) -> SignalDomain {
        match self {
            Scheme::Sc => SignalDomain::Time,
            Scheme::Ofdm => SignalDomain::Frequency,
            Scheme::Otfs => SignalDomain::DelayDoppler,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Sc => "SC",
            Scheme::Ofdm => "OFDM",
            Scheme::Otfs => "OTFS",
        }
    }

    pub(crate) fn index(self) -> u8 {
        match self {
            Scheme::Sc => 0,
            Scheme::Ofdm => 1,
            Scheme::Otfs => 2,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Transmit frame for data symbols `s`: `s` itself (SC), its unitary IDFT
/// (OFDM) or its row-wise delay-Doppler IDFT (OTFS).
pub fn modulate(scheme: Scheme, s: &[Complex64], fact: Factorization) -> Result<SymbolFrame> {
    if s.len() != fact.p() {
        return Err(Error::LengthMismatch { expected: fact.p(), got: s.len() });
    }
    convert_frame(&SymbolFrame::new(scheme.data_domain(), s.to_vec()), SignalDomain::Time, fact)
}

/// Inverse of [`modulate`]: time frame back to the scheme's data domain.
pub fn demodulate(scheme: Scheme, x_t: &SymbolFrame, fact: Factorization) -> Result<Vec<Complex64>> {
    Ok(convert_frame(x_t, scheme.data_domain(), fact)?.values)
}

/// Reordering of the subcarriers that feed the final IDFT.
///
/// `order[k]` is the subcarrier that receives precoder output `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubcarrierMap {
    order: Vec<usize>,
}

impl SubcarrierMap {
    pub fn identity(p: usize) -> Self {
        Self { order: (0..p).collect() }
    }

    pub fn new(order: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for &k in &order {
            if k >= order.len() || std::mem::replace(&mut seen[k], true) {
                return Err(Error::InvalidConfig("subcarrier map is not a permutation".into()));
            }
        }
        Ok(Self { order })
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); v.len()];
        for (k, &dst) in self.order.iter().enumerate() {
            out[dst] = v[k];
        }
        out
    }

    pub fn invert(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.order.iter().map(|&src| v[src]).collect()
    }
}

/// OTFS built explicitly as precoded OFDM, with the precoder outputs placed on
/// subcarriers according to `map`.
///
/// With the identity map this equals `modulate(Otfs, s)`; any other map makes
/// the precoder explicit.
pub fn modulate_precoded(s: &[Complex64], fact: Factorization, map: &SubcarrierMap) -> Result<SymbolFrame> {
    let freq = otfs_precoder(s, fact)?;
    if map.order.len() != freq.len() {
        return Err(Error::LengthMismatch { expected: freq.len(), got: map.order.len() });
    }
    Ok(SymbolFrame::new(SignalDomain::Time, layered_idft(&map.apply(&freq), fact)?))
}
