//! Seeded Monte Carlo sweeps: BER over SNR, sparsity over window size, plus
//! AWGN injection, scenario files and CSV output.
//!
//! Randomness is keyed, not sequential. A trial's channel depends on
//! `(seed, case, trial)` only, so every scheme and SNR point sees the same
//! channel draws. Payload bits and noise depend on
//! `(seed, case, scheme, SNR index, trial)`; the three OTFS equalizer
//! variants therefore receive identical frames and differ only in how they
//! equalize.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::{build_h_dt, case_config, sample_paths_with, ChannelConfig, DopplerRange};
use crate::domains::{convert_frame, Domain, DomainMatrix, SignalDomain, SymbolFrame};
use crate::equalize::{check_pairing, eq_channel, estimate_to_data, ChannelMode, EqDomain, MmseFilter, NormalEquations};
use crate::error::{Error, Result};
use crate::modem::{hard_demap, map_bits, modulate, Constellation, Modulation, Scheme};
use crate::rng::{keyed_stream, SeedKey, Stream};
use crate::sparsity::{PowerProfile, SparsityRecord};
use crate::spectral::Factorization;

/// Adds circular complex Gaussian noise of variance `σ²` per sample.
pub fn awgn(v: &[Complex64], noise_variance: f64, seed: u64) -> Result<Vec<Complex64>> {
    let mut rng = keyed_stream(seed, Stream::Noise, SeedKey::default());
    let mut out = v.to_vec();
    add_noise(&mut out, noise_variance, &mut rng)?;
    Ok(out)
}

fn add_noise(v: &mut [Complex64], noise_variance: f64, rng: &mut ChaCha8Rng) -> Result<()> {
    if noise_variance.is_nan() || noise_variance < 0.0 {
        return Err(Error::InvalidConfig(format!("noise variance {noise_variance} must be non-negative")));
    }
    if noise_variance == 0.0 {
        return Ok(());
    }
    let std = (noise_variance / 2.0).sqrt();
    for x in v {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *x += Complex64::new(re, im) * std;
    }
    Ok(())
}

/// Noise variance for an SNR in dB, with unit signal power.
pub fn noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// A modulation scheme together with the domain its receiver equalizes in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Setup {
    pub scheme: Scheme,
    pub domain: EqDomain,
}

impl Setup {
    pub const SC: Setup = Setup { scheme: Scheme::Sc, domain: EqDomain::DelayTime };
    pub const OFDM: Setup = Setup { scheme: Scheme::Ofdm, domain: EqDomain::FrequencyDoppler };
    pub const OTFS_DD: Setup = Setup { scheme: Scheme::Otfs, domain: EqDomain::DelayDoppler };
    pub const OTFS_DT: Setup = Setup { scheme: Scheme::Otfs, domain: EqDomain::DelayTime };
    pub const OTFS_FD: Setup = Setup { scheme: Scheme::Otfs, domain: EqDomain::FrequencyDoppler };
    pub const ALL: [Setup; 5] = [Setup::SC, Setup::OFDM, Setup::OTFS_DD, Setup::OTFS_DT, Setup::OTFS_FD];

    pub fn new(scheme: Scheme, domain: EqDomain) -> Result<Self> {
        check_pairing(scheme, domain)?;
        Ok(Self { scheme, domain })
    }
}

impl fmt::Display for Setup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.scheme {
            Scheme::Sc => f.write_str("sc"),
            Scheme::Ofdm => f.write_str("ofdm"),
            Scheme::Otfs => match self.domain {
                EqDomain::DelayDoppler => f.write_str("otfs-dd"),
                EqDomain::DelayTime => f.write_str("otfs-dt"),
                EqDomain::FrequencyDoppler => f.write_str("otfs-fd"),
            },
        }
    }
}

impl FromStr for Setup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Setup::ALL
            .into_iter()
            .find(|setup| setup.to_string() == s)
            .ok_or_else(|| Error::UnknownTag(s.to_string()))
    }
}

impl Serialize for Setup {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Setup {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Where a scenario's channels come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelSource {
    /// One of the four reference cases.
    Case(u8),
    Custom(ChannelConfig),
    /// `H = I`. Used to calibrate the noise path.
    Identity,
}

/// A full sweep description; this is also the scenario-file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub channel: ChannelSource,
    #[serde(default = "default_fact")]
    pub fact: Factorization,
    #[serde(default)]
    pub doppler_range: DopplerRange,
    #[serde(default = "default_setups")]
    pub setups: Vec<Setup>,
    #[serde(default)]
    pub channel_mode: ChannelMode,
    #[serde(default = "default_snr")]
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub modulation: Modulation,
    /// Upper bound on trials per SNR point.
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// A point may stop early only after this many trials...
    #[serde(default = "default_min_trials")]
    pub min_trials: usize,
    /// ...and this many bit errors.
    #[serde(default = "default_min_errors")]
    pub min_bit_errors: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_fact() -> Factorization {
    Factorization::new(16, 16).expect("16x16 is valid")
}

fn default_setups() -> Vec<Setup> {
    Setup::ALL.to_vec()
}

fn default_snr() -> Vec<f64> {
    (0..=10).map(|k| 2.0 * k as f64).collect()
}

fn default_trials() -> usize {
    100
}

fn default_min_trials() -> usize {
    10
}

fn default_min_errors() -> u64 {
    200
}

impl Scenario {
    /// Defaults for a reference case: 16×16 frame, all five setups, full
    /// channel, QPSK, 0..20 dB in 2 dB steps.
    pub fn for_case(case_id: u8) -> Self {
        Self {
            channel: ChannelSource::Case(case_id),
            fact: default_fact(),
            doppler_range: DopplerRange::default(),
            setups: default_setups(),
            channel_mode: ChannelMode::Full,
            snr_db: default_snr(),
            modulation: Modulation::Qpsk,
            trials: default_trials(),
            min_trials: default_min_trials(),
            min_bit_errors: default_min_errors(),
            seed: 0,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(s).map_err(|e| Error::InvalidScenario(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidScenario("trials must be at least 1".into()));
        }
        if self.snr_db.is_empty() {
            return Err(Error::InvalidScenario("SNR grid is empty".into()));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidScenario("SNR values must be finite".into()));
        }
        if self.snr_db.len() > u16::MAX as usize {
            return Err(Error::InvalidScenario("SNR grid too long".into()));
        }
        if self.trials > u32::MAX as usize {
            return Err(Error::InvalidScenario("too many trials".into()));
        }
        for s in &self.setups {
            check_pairing(s.scheme, s.domain)?;
        }
        match self.channel_mode {
            ChannelMode::Band(l) | ChannelMode::TopK(l) if 2 * l + 1 > self.fact.p() => {
                return Err(Error::WindowTooLarge { l_c: l, p: self.fact.p() });
            }
            _ => {}
        }
        self.channel_config().map(|_| ())
    }

    /// Channel parameters, or `None` for the identity hook.
    pub fn channel_config(&self) -> Result<Option<ChannelConfig>> {
        let f = self.fact;
        let cfg = match &self.channel {
            ChannelSource::Identity => return Ok(None),
            ChannelSource::Case(id) => case_config(*id, f.p(), f.m(), f.n())?,
            ChannelSource::Custom(cfg) => {
                if cfg.fact != f {
                    return Err(Error::InvalidScenario("custom channel frame size differs from the scenario's".into()));
                }
                cfg.clone()
            }
        };
        let cfg = cfg.with_doppler_range(self.doppler_range);
        cfg.validate()?;
        Ok(Some(cfg))
    }

    fn case_key(&self) -> u8 {
        match &self.channel {
            ChannelSource::Case(id) => *id,
            ChannelSource::Custom(cfg) => cfg.case_id.unwrap_or(0),
            ChannelSource::Identity => 0,
        }
    }

    fn case_id(&self) -> Option<u8> {
        match &self.channel {
            ChannelSource::Case(id) => Some(*id),
            ChannelSource::Custom(cfg) => cfg.case_id,
            ChannelSource::Identity => None,
        }
    }

    /// Delay-time channel of trial `t`.
    pub fn channel_realization(&self, trial: usize) -> Result<DomainMatrix> {
        let p = self.fact.p();
        match self.channel_config()? {
            None => Ok(DomainMatrix::new(Domain::DelayTime, DMatrix::identity(p, p)).with_factorization(self.fact)),
            Some(cfg) => {
                let key = SeedKey { case: self.case_key(), trial: trial as u32, ..Default::default() };
                let mut rng = keyed_stream(self.seed, Stream::Channel, key);
                let paths = sample_paths_with(&cfg, self.seed, &mut rng);
                Ok(build_h_dt(&paths, p)?.with_factorization(self.fact))
            }
        }
    }
}

/// One point of a BER curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerRecord {
    pub case: Option<u8>,
    pub scheme: Scheme,
    pub eq_domain: EqDomain,
    pub channel_mode: String,
    pub snr_db: f64,
    pub bit_errors: u64,
    pub bits_sent: u64,
    pub ber: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    errors: u64,
    bits: u64,
    trials: usize,
}

impl Tally {
    fn done(&self, sc: &Scenario) -> bool {
        self.trials >= sc.trials || (self.trials >= sc.min_trials && self.errors >= sc.min_bit_errors)
    }
}

/// Runs a BER sweep. Points are listed setup-major, then by SNR.
pub fn run_ber(sc: &Scenario) -> Result<Vec<BerRecord>> {
    sc.validate()?;
    let fact = sc.fact;
    let p = fact.p();
    let constellation = Constellation::new(sc.modulation);
    let bits_per_frame = p * constellation.bits_per_symbol;
    let case = sc.case_key();
    let variances: Vec<f64> = sc.snr_db.iter().map(|&s| noise_variance(s)).collect();

    let mut tallies = vec![vec![Tally::default(); sc.snr_db.len()]; sc.setups.len()];
    for trial in 0..sc.trials {
        let active: Vec<(usize, usize)> = (0..sc.setups.len())
            .flat_map(|i| (0..sc.snr_db.len()).map(move |j| (i, j)))
            .filter(|&(i, j)| !tallies[i][j].done(sc))
            .collect();
        if active.is_empty() {
            break;
        }
        let h_dt = sc.channel_realization(trial)?;

        let mut normals: HashMap<EqDomain, NormalEquations> = HashMap::new();
        for &(i, _) in &active {
            let d = sc.setups[i].domain;
            if let std::collections::hash_map::Entry::Vacant(e) = normals.entry(d) {
                let h = eq_channel(&h_dt, d, sc.channel_mode, fact)?;
                e.insert(NormalEquations::new(h.entries()));
            }
        }
        let mut filters: HashMap<(EqDomain, usize), MmseFilter<'_>> = HashMap::new();
        let mut received: HashMap<(Scheme, usize), (Vec<u8>, Vec<Complex64>)> = HashMap::new();

        for (i, j) in active {
            let setup = sc.setups[i];
            let (bits, y_t) = match received.get(&(setup.scheme, j)) {
                Some(r) => r,
                None => {
                    let key = SeedKey { case, scheme: setup.scheme.index(), point: j as u16, trial: trial as u32 };
                    let mut payload = keyed_stream(sc.seed, Stream::Payload, key);
                    let bits: Vec<u8> = (0..bits_per_frame).map(|_| payload.gen_range(0..=1u8)).collect();
                    let s = map_bits(&bits, &constellation)?;
                    let x_t = modulate(setup.scheme, &s, fact)?;
                    let mut y = h_dt.apply(&x_t.values)?;
                    add_noise(&mut y, variances[j], &mut keyed_stream(sc.seed, Stream::Noise, key))?;
                    received.entry((setup.scheme, j)).or_insert((bits, y))
                }
            };

            let filter = match filters.entry((setup.domain, j)) {
                std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                std::collections::hash_map::Entry::Vacant(e) => e.insert(normals[&setup.domain].factor(variances[j])?),
            };
            let y_eq = convert_frame(&SymbolFrame::new(SignalDomain::Time, y_t.clone()), setup.domain.signal_domain(), fact)?;
            let x_eq = filter.apply(&y_eq.values)?;
            let s_hat = estimate_to_data(setup.scheme, setup.domain, x_eq, fact)?;
            let decided = hard_demap(&s_hat, &constellation);
            let errors = decided.iter().zip(bits.iter()).filter(|(a, b)| a != b).count() as u64;

            let t = &mut tallies[i][j];
            t.errors += errors;
            t.bits += bits_per_frame as u64;
            t.trials += 1;
        }
    }

    let mut out = Vec::with_capacity(sc.setups.len() * sc.snr_db.len());
    for (i, setup) in sc.setups.iter().enumerate() {
        for (j, &snr_db) in sc.snr_db.iter().enumerate() {
            let t = tallies[i][j];
            out.push(BerRecord {
                case: sc.case_id(),
                scheme: setup.scheme,
                eq_domain: setup.domain,
                channel_mode: sc.channel_mode.to_string(),
                snr_db,
                bit_errors: t.errors,
                bits_sent: t.bits,
                ber: t.errors as f64 / t.bits as f64,
                trials: t.trials,
                seed: sc.seed,
            });
        }
    }
    Ok(out)
}

/// Domains covered by a sparsity sweep.
pub const SPARSITY_DOMAINS: [Domain; 3] = [Domain::DelayTime, Domain::FrequencyDoppler, Domain::DelayDopplerOtfs];

/// Averages LPR and SPR over `sc.trials` channel draws for each window
/// half-width in `lc_grid`.
pub fn run_sparsity(sc: &Scenario, lc_grid: &[usize]) -> Result<Vec<SparsityRecord>> {
    sc.validate()?;
    if lc_grid.is_empty() {
        return Err(Error::InvalidScenario("L_c grid is empty".into()));
    }
    let p = sc.fact.p();
    // A window of P or more rows keeps everything; those points are exactly 1.
    let full = |l_c: usize| 2 * l_c + 1 >= p;
    let max_l_c = lc_grid.iter().copied().filter(|&l| !full(l)).max();
    let mut sums = vec![vec![(0.0, 0.0); lc_grid.len()]; SPARSITY_DOMAINS.len()];
    for trial in 0..sc.trials {
        let h_dt = sc.channel_realization(trial)?;
        let Some(max_l_c) = max_l_c else { break };
        for (d, &domain) in SPARSITY_DOMAINS.iter().enumerate() {
            let h = crate::domains::to_domain(&h_dt, domain, sc.fact)?;
            let profile = PowerProfile::new(&h, max_l_c)?;
            for (k, &l_c) in lc_grid.iter().enumerate() {
                if full(l_c) {
                    continue;
                }
                sums[d][k].0 += profile.lpr(l_c)?;
                sums[d][k].1 += profile.spr(l_c)?;
            }
        }
    }
    let n = sc.trials as f64;
    let mut out = Vec::new();
    for (d, &domain) in SPARSITY_DOMAINS.iter().enumerate() {
        for (k, &l_c) in lc_grid.iter().enumerate() {
            let (lpr, spr) = sums[d][k];
            let (lpr, spr) = if full(l_c) {
                (1.0, 1.0)
            } else {
                let lpr = (lpr / n).min(1.0);
                (lpr, (spr / n).min(1.0).max(lpr))
            };
            out.push(SparsityRecord { case_id: sc.case_id(), domain, l_c, lpr, spr, realizations: sc.trials, seed: sc.seed });
        }
    }
    Ok(out)
}

fn case_field(case: Option<u8>) -> String {
    case.map(|c| c.to_string()).unwrap_or_else(|| "custom".into())
}

/// Writes sparsity records as `case,domain,metric,L_c,value,realizations,seed`,
/// one row per metric.
pub fn write_sparsity_csv<W: Write>(records: &[SparsityRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["case", "domain", "metric", "L_c", "value", "realizations", "seed"]).map_err(csv_err)?;
    for metric in ["LPR", "SPR"] {
        for r in records {
            let value = if metric == "LPR" { r.lpr } else { r.spr };
            w.write_record([
                case_field(r.case_id),
                r.domain.tag().to_string(),
                metric.to_string(),
                r.l_c.to_string(),
                value.to_string(),
                r.realizations.to_string(),
                r.seed.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes BER records, one row per point.
pub fn write_ber_csv<W: Write>(records: &[BerRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["case", "scheme", "eq_domain", "channel_mode", "snr_db", "bit_errors", "bits_sent", "ber", "trials", "seed"])
        .map_err(csv_err)?;
    for r in records {
        w.write_record([
            case_field(r.case),
            r.scheme.name().to_string(),
            r.eq_domain.tag().to_string(),
            r.channel_mode.clone(),
            r.snr_db.to_string(),
            r.bit_errors.to_string(),
            r.bits_sent.to_string(),
            r.ber.to_string(),
            r.trials.to_string(),
            r.seed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes an `M×N` magnitude pattern preceded by a `#` metadata line.
pub fn write_pattern_csv<W: Write>(pattern: &DMatrix<f64>, header: &str, mut out: W) -> Result<()> {
    writeln!(out, "# {header}")?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in pattern.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidConfig(format!("csv: {other:?}")),
    }
}
