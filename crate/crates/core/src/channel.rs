//! Random doubly selective channels and their delay-time matrix.
//!
//! Delays are in samples (normalized to `1/B`) and Dopplers in Doppler bins
//! (normalized to `B/P`); both may be off-grid.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domains::{Domain, DomainMatrix};
use crate::error::{Error, Result};
use crate::rng::{keyed_stream, SeedKey, Stream};
use crate::spectral::Factorization;

/// Sampling interval for path Dopplers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DopplerRange {
    /// Uniform on `[-F_d, F_d]`.
    #[default]
    TwoSided,
    /// Uniform on `[0, F_d]`.
    OneSided,
}

/// Parameters of one channel scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// `Some(1..=4)` for the reference cases, `None` for a custom channel.
    pub case_id: Option<u8>,
    /// Number of paths `L`.
    pub paths: usize,
    /// Maximum delay spread `T_d` in samples.
    pub max_delay: f64,
    /// Maximum Doppler `F_d` in Doppler bins.
    pub max_doppler: f64,
    /// Rician factor in dB.
    pub rician_db: f64,
    pub fact: Factorization,
    #[serde(default)]
    pub doppler_range: DopplerRange,
}

/// `(L, T_d, F_d, R_f)` for the four reference cases.
const CASES: [(usize, f64, f64, f64); 4] = [
    (2, 5.0, 2.0, 10.0), // LEO satellite
    (2, 8.0, 0.5, 5.0),  // airplane
    (8, 16.0, 0.1, 6.0), // high-speed train, strong LOS
    (8, 24.0, 0.2, 2.0), // high-speed train, weak LOS
];

/// The reference scenario `case_id` at frame size `P = M·N`.
pub fn case_config(case_id: u8, p: usize, m: usize, n: usize) -> Result<ChannelConfig> {
    let (paths, max_delay, max_doppler, rician_db) = match case_id {
        1..=4 => CASES[case_id as usize - 1],
        other => return Err(Error::UnknownCase(other)),
    };
    let cfg = ChannelConfig {
        case_id: Some(case_id),
        paths,
        max_delay,
        max_doppler,
        rician_db,
        fact: Factorization::with_total(p, m, n)?,
        doppler_range: DopplerRange::TwoSided,
    };
    cfg.validate()?;
    Ok(cfg)
}

impl ChannelConfig {
    pub fn p(&self) -> usize {
        self.fact.p()
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::InvalidConfig("path count must be at least 1".into()));
        }
        if !(self.max_delay >= 0.0 && self.max_delay < self.p() as f64) {
            return Err(Error::InvalidConfig(format!("T_d = {} outside [0, {})", self.max_delay, self.p())));
        }
        if !(self.max_doppler >= 0.0 && self.max_doppler.is_finite()) {
            return Err(Error::InvalidConfig(format!("F_d = {} must be finite and non-negative", self.max_doppler)));
        }
        if !self.rician_db.is_finite() {
            return Err(Error::InvalidConfig("Rician factor must be finite".into()));
        }
        Ok(())
    }

    pub fn with_doppler_range(mut self, range: DopplerRange) -> Self {
        self.doppler_range = range;
        self
    }
}

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub gain: Complex64,
    pub delay: f64,
    pub doppler: f64,
}

/// A realized channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub paths: Vec<Path>,
    pub seed: u64,
    pub case_id: Option<u8>,
}

impl PathSet {
    pub fn new(paths: Vec<Path>) -> Self {
        Self { paths, seed: 0, case_id: None }
    }

    /// A single path with unit gain.
    pub fn single(delay: f64, doppler: f64) -> Self {
        Self::new(vec![Path { gain: Complex64::new(1.0, 0.0), delay, doppler }])
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn total_power(&self) -> f64 {
        self.paths.iter().map(|p| p.gain.norm_sqr()).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&PathSetRecord::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rec: PathSetRecord = serde_json::from_str(s)?;
        Ok(rec.into())
    }
}

#[derive(Serialize, Deserialize)]
struct PathRecord {
    re: f64,
    im: f64,
    delay: f64,
    doppler: f64,
}

/// Reproducibility dump: `{seed, case, paths: [{re, im, delay, doppler}]}`.
#[derive(Serialize, Deserialize)]
struct PathSetRecord {
    seed: u64,
    case: Option<u8>,
    paths: Vec<PathRecord>,
}

impl From<&PathSet> for PathSetRecord {
    fn from(ps: &PathSet) -> Self {
        Self {
            seed: ps.seed,
            case: ps.case_id,
            paths: ps
                .paths
                .iter()
                .map(|p| PathRecord { re: p.gain.re, im: p.gain.im, delay: p.delay, doppler: p.doppler })
                .collect(),
        }
    }
}

impl From<PathSetRecord> for PathSet {
    fn from(rec: PathSetRecord) -> Self {
        Self {
            seed: rec.seed,
            case_id: rec.case,
            paths: rec
                .paths
                .into_iter()
                .map(|p| Path { gain: Complex64::new(p.re, p.im), delay: p.delay, doppler: p.doppler })
                .collect(),
        }
    }
}

/// Draws a channel realization.
///
/// Path 1 carries the line-of-sight component of power `K/(K+1)`, every path
/// carries a scattered term of power `1/((K+1)·L)`, and the gains are finally
/// normalized to unit total power.
pub fn sample_paths(cfg: &ChannelConfig, seed: u64) -> Result<PathSet> {
    cfg.validate()?;
    let mut rng = keyed_stream(seed, Stream::Channel, SeedKey::default());
    Ok(sample_paths_with(cfg, seed, &mut rng))
}

pub(crate) fn sample_paths_with(cfg: &ChannelConfig, seed: u64, rng: &mut ChaCha8Rng) -> PathSet {
    let l = cfg.paths;
    let k = 10f64.powf(cfg.rician_db / 10.0);
    let scatter_std = (1.0 / ((k + 1.0) * l as f64) / 2.0).sqrt();
    let (lo, hi) = match cfg.doppler_range {
        DopplerRange::TwoSided => (-cfg.max_doppler, cfg.max_doppler),
        DopplerRange::OneSided => (0.0, cfg.max_doppler),
    };

    let mut paths: Vec<Path> = (0..l)
        .map(|i| {
            let delay = uniform(rng, 0.0, cfg.max_delay);
            let doppler = uniform(rng, lo, hi);
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            let mut gain = Complex64::new(re, im) * scatter_std;
            if i == 0 {
                gain += (k / (k + 1.0)).sqrt();
            }
            Path { gain, delay, doppler }
        })
        .collect();

    let norm = paths.iter().map(|p| p.gain.norm_sqr()).sum::<f64>().sqrt();
    for p in &mut paths {
        p.gain /= norm;
    }
    PathSet { paths, seed, case_id: cfg.case_id }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

/// Dirichlet kernel `(1/P)·Σ_{p<P} exp(j2π·p·x/P)`, evaluated in closed form.
pub fn dirichlet(x: f64, p: usize) -> Complex64 {
    let pf = p as f64;
    let x = x.rem_euclid(pf);
    let den = (PI * x / pf).sin();
    if den.abs() < 1e-14 {
        return Complex64::new(1.0, 0.0);
    }
    let mag = (PI * x).sin() / (pf * den);
    Complex64::from_polar(1.0, PI * x * (pf - 1.0) / pf) * mag
}

/// Delay-time channel matrix:
/// `H[m,n] = Σ_ℓ h_ℓ · D((m-n-τ_ℓ) mod P) · exp(j2π·m·ν_ℓ/P)`.
///
/// Receive windowing and transmit filtering are rectangular, so the filter is
/// the Dirichlet kernel `D` itself.
pub fn build_h_dt(paths: &PathSet, p: usize) -> Result<DomainMatrix> {
    if paths.is_empty() {
        return Err(Error::EmptyPathSet);
    }
    if p == 0 {
        return Err(Error::EmptyInput);
    }
    for path in &paths.paths {
        if !(path.delay >= 0.0 && path.delay < p as f64) {
            return Err(Error::DelayOutOfRange { delay: path.delay, p });
        }
    }

    // The kernel depends on (m-n) mod P only; the Doppler phase on m only.
    let kernels: Vec<Vec<Complex64>> = paths
        .paths
        .iter()
        .map(|path| (0..p).map(|d| path.gain * dirichlet(d as f64 - path.delay, p)).collect())
        .collect();
    let phases: Vec<Vec<Complex64>> = paths
        .paths
        .iter()
        .map(|path| {
            (0..p)
                .map(|m| {
                    // Wrap m·ν into [0, P) before forming the angle.
                    let turns = (m as f64 * path.doppler).rem_euclid(p as f64);
                    Complex64::from_polar(1.0, 2.0 * PI * turns / p as f64)
                })
                .collect()
        })
        .collect();

    let mut h = DMatrix::<Complex64>::zeros(p, p);
    for (n, mut col) in h.column_iter_mut().enumerate() {
        for (kernel, phase) in kernels.iter().zip(&phases) {
            for m in 0..p {
                let d = (m + p - n) % p;
                col[m] += kernel[d] * phase[m];
            }
        }
    }
    Ok(DomainMatrix::new(Domain::DelayTime, h))
}
