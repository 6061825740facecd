//! Channel matrices in the delay-time, frequency-time, frequency-Doppler and
//! delay-Doppler domains, and the matching conversions of signal frames.
//!
//! Every map from the delay-time matrix is a conjugation by a unitary
//! transform:
//!
//! | domain      | matrix                                  |
//! |-------------|-----------------------------------------|
//! | `ft`        | `F · H_dt`                              |
//! | `fD`        | `F · H_dt · F^H`                        |
//! | `dD_otfs`   | `(F_N ⊗ I_M) · H_dt · (F_N^H ⊗ I_M)`    |
//! | `dD_direct` | `F^H · H_fD · F`                        |
//!
//! so Frobenius norms agree across all five representations.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::channel::{build_h_dt, dirichlet, PathSet};
use crate::error::{Error, Result};
use crate::spectral::{kron_dft_rows, kron_idft_rows, rows_in_place, unitary_dft, Direction, Factorization, UnitaryDft};

/// Two-dimensional domain of a channel matrix, named by (output, input).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Domain {
    #[serde(rename = "dt")]
    DelayTime,
    #[serde(rename = "ft")]
    FrequencyTime,
    #[serde(rename = "fD")]
    FrequencyDoppler,
    #[serde(rename = "dD_otfs")]
    DelayDopplerOtfs,
    #[serde(rename = "dD_direct")]
    DelayDopplerDirect,
}

impl Domain {
    pub fn tag(self) -> &'static str {
        match self {
            Domain::DelayTime => "dt",
            Domain::FrequencyTime => "ft",
            Domain::FrequencyDoppler => "fD",
            Domain::DelayDopplerOtfs => "dD_otfs",
            Domain::DelayDopplerDirect => "dD_direct",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dt" | "td" => Ok(Domain::DelayTime),
            "ft" => Ok(Domain::FrequencyTime),
            "fD" | "fd" => Ok(Domain::FrequencyDoppler),
            "dD_otfs" | "dD" | "dd" => Ok(Domain::DelayDopplerOtfs),
            "dD_direct" => Ok(Domain::DelayDopplerDirect),
            other => Err(Error::UnknownTag(other.to_string())),
        }
    }
}

/// A `P×P` channel matrix tagged with its domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainMatrix {
    domain: Domain,
    entries: DMatrix<Complex64>,
    fact: Option<Factorization>,
}

impl DomainMatrix {
    /// Panics if `entries` is not square.
    pub fn new(domain: Domain, entries: DMatrix<Complex64>) -> Self {
        assert!(entries.is_square(), "channel matrices are square");
        Self { domain, entries, fact: None }
    }

    pub fn with_factorization(mut self, fact: Factorization) -> Self {
        self.fact = Some(fact);
        self
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Complex64> {
        self.entries
    }

    pub fn factorization(&self) -> Option<Factorization> {
        self.fact
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Matrix-vector product `H·x`.
    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.size() {
            return Err(Error::LengthMismatch { expected: self.size(), got: x.len() });
        }
        let y = &self.entries * DVector::from_column_slice(x);
        Ok(y.as_slice().to_vec())
    }

    /// Same tag and factorization, new entries.
    pub(crate) fn replace(&self, entries: DMatrix<Complex64>) -> Self {
        Self { domain: self.domain, entries, fact: self.fact }
    }

    fn expect(&self, domain: Domain) -> Result<()> {
        if self.domain != domain {
            return Err(Error::WrongDomain { expected: domain.tag(), got: self.domain.tag() });
        }
        Ok(())
    }
}

/// Applies `left` to every column and `right` to every row of `h`.
///
/// For a symmetric unitary `U` (DFT matrices and `F_N ⊗ I_M` are symmetric),
/// `left = U` and `right = U^H` computes `U · H · U^H`.
fn conjugate(
    h: &DMatrix<Complex64>,
    mut left: impl FnMut(&mut [Complex64]),
    mut right: impl FnMut(&mut [Complex64]),
) -> DMatrix<Complex64> {
    let p = h.nrows();
    let mut out = h.clone();
    for mut col in out.column_iter_mut() {
        left(col.as_mut_slice());
    }
    let mut row = vec![Complex64::default(); p];
    for r in 0..p {
        for (c, x) in row.iter_mut().enumerate() {
            *x = out[(r, c)];
        }
        right(&mut row);
        for (c, x) in row.iter().enumerate() {
            out[(r, c)] = *x;
        }
    }
    out
}

fn dft_closure(size: usize, direction: Direction, planner: &mut FftPlanner<f64>) -> impl FnMut(&mut [Complex64]) {
    let dft = UnitaryDft::with_planner(planner, size, direction);
    let mut scratch = dft.scratch();
    move |buf: &mut [Complex64]| dft.process(buf, &mut scratch)
}

fn kron_closure(fact: Factorization, direction: Direction, planner: &mut FftPlanner<f64>) -> impl FnMut(&mut [Complex64]) {
    let dft = UnitaryDft::with_planner(planner, fact.n(), direction);
    let mut scratch = dft.scratch();
    let mut row = vec![Complex64::default(); fact.n()];
    move |buf: &mut [Complex64]| rows_in_place(fact.m(), &dft, buf, &mut row, &mut scratch)
}

/// `H_ft = F · H_dt`.
pub fn to_ft(h: &DomainMatrix) -> Result<DomainMatrix> {
    h.expect(Domain::DelayTime)?;
    let mut planner = FftPlanner::new();
    let mut fwd = dft_closure(h.size(), Direction::Forward, &mut planner);
    let mut out = h.entries.clone();
    for mut col in out.column_iter_mut() {
        fwd(col.as_mut_slice());
    }
    Ok(DomainMatrix { domain: Domain::FrequencyTime, entries: out, fact: h.fact })
}

/// `H_fD = F · H_dt · F^H`.
pub fn to_fd(h: &DomainMatrix) -> Result<DomainMatrix> {
    h.expect(Domain::DelayTime)?;
    let mut planner = FftPlanner::new();
    let fwd = dft_closure(h.size(), Direction::Forward, &mut planner);
    let inv = dft_closure(h.size(), Direction::Inverse, &mut planner);
    let out = conjugate(&h.entries, fwd, inv);
    Ok(DomainMatrix { domain: Domain::FrequencyDoppler, entries: out, fact: h.fact })
}

/// `H_dD = (F_N ⊗ I_M) · H_dt · (F_N^H ⊗ I_M)`.
pub fn to_dd_otfs(h: &DomainMatrix, fact: Factorization) -> Result<DomainMatrix> {
    h.expect(Domain::DelayTime)?;
    if fact.p() != h.size() {
        return Err(Error::InvalidFactorization { p: h.size(), m: fact.m(), n: fact.n() });
    }
    let mut planner = FftPlanner::new();
    let fwd = kron_closure(fact, Direction::Forward, &mut planner);
    let inv = kron_closure(fact, Direction::Inverse, &mut planner);
    let out = conjugate(&h.entries, fwd, inv);
    Ok(DomainMatrix { domain: Domain::DelayDopplerOtfs, entries: out, fact: Some(fact) })
}

/// `H_dD,direct = F^H · H_fD · F`.
pub fn to_dd_direct(h: &DomainMatrix) -> Result<DomainMatrix> {
    h.expect(Domain::FrequencyDoppler)?;
    let mut planner = FftPlanner::new();
    let inv = dft_closure(h.size(), Direction::Inverse, &mut planner);
    let fwd = dft_closure(h.size(), Direction::Forward, &mut planner);
    let out = conjugate(&h.entries, inv, fwd);
    Ok(DomainMatrix { domain: Domain::DelayDopplerDirect, entries: out, fact: h.fact })
}

/// Analytic frequency-Doppler matrix,
/// `H[m,n] = Σ_ℓ h_ℓ · conj(D((m-n-ν_ℓ) mod P)) · exp(-j2π·n·τ_ℓ/P)`.
///
/// `D` is [`dirichlet`]. The kernel enters conjugated because the frequency
/// side kernel is the IDFT (not the DTFT) of the rectangular window; with this
/// orientation the closed form equals `F · H_dt · F^H` entry by entry.
pub fn fd_closed_form(paths: &PathSet, p: usize) -> Result<DomainMatrix> {
    if paths.is_empty() {
        return Err(Error::EmptyPathSet);
    }
    let mut h = DMatrix::<Complex64>::zeros(p, p);
    for path in &paths.paths {
        let kernel: Vec<Complex64> = (0..p).map(|d| dirichlet(d as f64 - path.doppler, p).conj()).collect();
        for n in 0..p {
            let turns = (n as f64 * path.delay).rem_euclid(p as f64);
            let phase = path.gain * Complex64::from_polar(1.0, -2.0 * PI * turns / p as f64);
            for m in 0..p {
                h[(m, n)] += kernel[(m + p - n) % p] * phase;
            }
        }
    }
    Ok(DomainMatrix::new(Domain::FrequencyDoppler, h))
}

/// The eq-domain matrices the equalizers work with.
pub fn to_domain(h_dt: &DomainMatrix, target: Domain, fact: Factorization) -> Result<DomainMatrix> {
    match target {
        Domain::DelayTime => {
            h_dt.expect(Domain::DelayTime)?;
            Ok(h_dt.clone())
        }
        Domain::FrequencyTime => to_ft(h_dt),
        Domain::FrequencyDoppler => to_fd(h_dt),
        Domain::DelayDopplerOtfs => to_dd_otfs(h_dt, fact),
        Domain::DelayDopplerDirect => to_dd_direct(&to_fd(h_dt)?),
    }
}

/// Domain of a signal vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SignalDomain {
    Time,
    Frequency,
    DelayDoppler,
}

impl SignalDomain {
    pub fn tag(self) -> &'static str {
        match self {
            SignalDomain::Time => "time",
            SignalDomain::Frequency => "freq",
            SignalDomain::DelayDoppler => "dd",
        }
    }
}

impl fmt::Display for SignalDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SignalDomain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "time" | "t" => Ok(SignalDomain::Time),
            "freq" | "frequency" | "f" => Ok(SignalDomain::Frequency),
            "dd" | "dD" | "delayDoppler" => Ok(SignalDomain::DelayDoppler),
            other => Err(Error::UnknownTag(other.to_string())),
        }
    }
}

/// A length-`P` signal vector tagged with its domain.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    pub domain: SignalDomain,
    pub values: Vec<Complex64>,
}

impl SymbolFrame {
    pub fn new(domain: SignalDomain, values: Vec<Complex64>) -> Self {
        Self { domain, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }
}

fn frame_to_time(v: &SymbolFrame, fact: Factorization) -> Result<Vec<Complex64>> {
    match v.domain {
        SignalDomain::Time => Ok(v.values.clone()),
        SignalDomain::Frequency => unitary_dft(&v.values, Direction::Inverse),
        SignalDomain::DelayDoppler => kron_idft_rows(&v.values, fact),
    }
}

fn time_to(values: Vec<Complex64>, target: SignalDomain, fact: Factorization) -> Result<Vec<Complex64>> {
    match target {
        SignalDomain::Time => Ok(values),
        SignalDomain::Frequency => unitary_dft(&values, Direction::Forward),
        SignalDomain::DelayDoppler => kron_dft_rows(&values, fact),
    }
}

/// Moves a frame between time, frequency and delay-Doppler.
pub fn convert_frame(v: &SymbolFrame, target: SignalDomain, fact: Factorization) -> Result<SymbolFrame> {
    if v.len() != fact.p() {
        return Err(Error::LengthMismatch { expected: fact.p(), got: v.len() });
    }
    if v.domain == target {
        return Ok(v.clone());
    }
    let t = frame_to_time(v, fact)?;
    Ok(SymbolFrame::new(target, time_to(t, target, fact)?))
}

/// Received magnitudes for a unit symbol sent at `probe` in `input`, observed
/// in `observe` and laid out column-wise as an `M×N` array.
pub fn impulse_pattern(
    paths: &PathSet,
    input: SignalDomain,
    observe: SignalDomain,
    probe: usize,
    fact: Factorization,
) -> Result<DMatrix<f64>> {
    let p = fact.p();
    if probe >= p {
        return Err(Error::IndexOutOfRange { index: probe, len: p });
    }
    let h = build_h_dt(paths, p)?;
    let mut tx = vec![Complex64::default(); p];
    tx[probe] = Complex64::new(1.0, 0.0);
    let x_t = frame_to_time(&SymbolFrame::new(input, tx), fact)?;
    let y_t = h.apply(&x_t)?;
    let rx = time_to(y_t, observe, fact)?;
    Ok(DMatrix::from_column_slice(fact.m(), fact.n(), &rx).map(|x| x.norm()))
}
