//! Linear ZF/MMSE equalization on full or truncated channel matrices, the
//! per-scheme receive pipelines, and the equalization-domain recommender.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelConfig;
use crate::domains::{convert_frame, to_domain, Domain, DomainMatrix, SignalDomain, SymbolFrame};
use crate::error::{Error, Result};
use crate::modem::Scheme;
use crate::sparsity::{lpr, truncate_band, truncate_topk};
use crate::spectral::Factorization;

/// Domain in which the equalizer solves for the transmitted vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EqDomain {
    #[serde(rename = "dt")]
    DelayTime,
    #[serde(rename = "fD")]
    FrequencyDoppler,
    #[serde(rename = "dD")]
    DelayDoppler,
}

impl EqDomain {
    pub const ALL: [EqDomain; 3] = [EqDomain::DelayTime, EqDomain::FrequencyDoppler, EqDomain::DelayDoppler];

    pub fn matrix_domain(self) -> Domain {
        match self {
            EqDomain::DelayTime => Domain::DelayTime,
            EqDomain::FrequencyDoppler => Domain::FrequencyDoppler,
            EqDomain::DelayDoppler => Domain::DelayDopplerOtfs,
        }
    }

    /// Domain of the vectors the eq-domain matrix acts on.
    pub fn signal_domain(self) -> SignalDomain {
        match self {
            EqDomain::DelayTime => SignalDomain::Time,
            EqDomain::FrequencyDoppler => SignalDomain::Frequency,
            EqDomain::DelayDoppler => SignalDomain::DelayDoppler,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            EqDomain::DelayTime => "dt",
            EqDomain::FrequencyDoppler => "fD",
            EqDomain::DelayDoppler => "dD",
        }
    }
}

impl fmt::Display for EqDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for EqDomain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dt" | "td" => Ok(EqDomain::DelayTime),
            "fD" | "fd" => Ok(EqDomain::FrequencyDoppler),
            "dD" | "dd" | "dD_otfs" => Ok(EqDomain::DelayDoppler),
            other => Err(Error::UnknownTag(other.to_string())),
        }
    }
}

/// Which part of the eq-domain channel the equalizer is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelMode {
    #[default]
    Full,
    /// Peak-centred window of half-width `L_c` per column.
    Band(usize),
    /// Strongest `2·L_c + 1` entries per column.
    TopK(usize),
}

impl ChannelMode {
    pub fn apply(self, h: DomainMatrix) -> Result<DomainMatrix> {
        match self {
            ChannelMode::Full => Ok(h),
            ChannelMode::Band(l_c) => truncate_band(&h, l_c),
            ChannelMode::TopK(l_c) => truncate_topk(&h, l_c),
        }
    }
}

impl fmt::Display for ChannelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelMode::Full => f.write_str("full"),
            ChannelMode::Band(l) => write!(f, "band:{l}"),
            ChannelMode::TopK(l) => write!(f, "topk:{l}"),
        }
    }
}

impl FromStr for ChannelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse_lc = |v: &str| v.parse::<usize>().map_err(|_| Error::UnknownTag(s.to_string()));
        match s.split_once(':') {
            None if s == "full" => Ok(ChannelMode::Full),
            Some(("band", v)) => Ok(ChannelMode::Band(parse_lc(v)?)),
            Some(("topk", v)) => Ok(ChannelMode::TopK(parse_lc(v)?)),
            _ => Err(Error::UnknownTag(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Zf,
    Mmse,
}

/// How to equalize one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EqualizerSpec {
    pub method: Method,
    pub domain: EqDomain,
    pub mode: ChannelMode,
    pub noise_variance: f64,
}

impl EqualizerSpec {
    pub fn mmse(domain: EqDomain, mode: ChannelMode, noise_variance: f64) -> Self {
        Self { method: Method::Mmse, domain, mode, noise_variance }
    }

    pub fn zf(domain: EqDomain, mode: ChannelMode) -> Self {
        Self { method: Method::Zf, domain, mode, noise_variance: 0.0 }
    }

    fn regularization(&self) -> f64 {
        match self.method {
            Method::Zf => 0.0,
            Method::Mmse => self.noise_variance,
        }
    }
}

/// Normal-equation matrix `H^H·H` of one channel, reusable across noise
/// levels.
#[derive(Debug, Clone)]
pub struct NormalEquations {
    h: DMatrix<Complex64>,
    gram: DMatrix<Complex64>,
}

impl NormalEquations {
    pub fn new(h: &DMatrix<Complex64>) -> Self {
        let n = h.ncols();
        let mut gram = DMatrix::<Complex64>::zeros(n, n);
        for j in 0..n {
            let hj = h.column(j);
            for i in 0..=j {
                let g = dotc(h.column(i).as_slice(), hj.as_slice());
                gram[(i, j)] = g;
                gram[(j, i)] = g.conj();
            }
        }
        Self { h: h.clone(), gram }
    }

    pub fn gram(&self) -> &DMatrix<Complex64> {
        &self.gram
    }

    /// Factors `H^H·H + σ²·I`.
    pub fn factor(&self, noise_variance: f64) -> Result<MmseFilter<'_>> {
        if noise_variance.is_nan() || noise_variance < 0.0 {
            return Err(Error::InvalidConfig(format!("noise variance {noise_variance} must be non-negative")));
        }
        let mut a = self.gram.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += noise_variance;
        }
        let chol = cholesky_in_place(a)?;
        Ok(MmseFilter { h: &self.h, chol })
    }
}

/// A factored MMSE (or ZF, at `σ² = 0`) equalizer.
#[derive(Debug, Clone)]
pub struct MmseFilter<'a> {
    h: &'a DMatrix<Complex64>,
    /// Lower Cholesky factor, column-major.
    chol: DMatrix<Complex64>,
}

impl MmseFilter<'_> {
    /// `x̂ = (H^H·H + σ²·I)^{-1}·H^H·y`.
    pub fn apply(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.h.nrows();
        if y.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: y.len() });
        }
        let mut x: Vec<Complex64> = self.h.column_iter().map(|col| dotc(col.as_slice(), y)).collect();
        solve_cholesky(&self.chol, &mut x);
        Ok(x)
    }
}

/// `Σ conj(a_k)·b_k`.
fn dotc(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let (mut re0, mut im0, mut re1, mut im1) = (0.0, 0.0, 0.0, 0.0);
    let mut pairs = a.chunks_exact(2).zip(b.chunks_exact(2));
    for (x, y) in &mut pairs {
        re0 += x[0].re * y[0].re + x[0].im * y[0].im;
        im0 += x[0].re * y[0].im - x[0].im * y[0].re;
        re1 += x[1].re * y[1].re + x[1].im * y[1].im;
        im1 += x[1].re * y[1].im - x[1].im * y[1].re;
    }
    if a.len() % 2 == 1 {
        let (x, y) = (a[a.len() - 1], b[b.len() - 1]);
        re0 += x.re * y.re + x.im * y.im;
        im0 += x.re * y.im - x.im * y.re;
    }
    Complex64::new(re0 + re1, im0 + im1)
}

/// Left-looking Cholesky of a Hermitian matrix; returns the lower factor.
fn cholesky_in_place(mut a: DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let n = a.nrows();
    let scale = (0..n).map(|i| a[(i, i)].re.abs()).fold(0.0, f64::max);
    let tol = scale * 1e-13;
    let data = a.as_mut_slice();
    for j in 0..n {
        let (done, rest) = data.split_at_mut(j * n);
        let col_j = &mut rest[..n];
        for k in 0..j {
            let col_k = &done[k * n..(k + 1) * n];
            let f = col_k[j].conj();
            if f == Complex64::default() {
                continue;
            }
            for (x, l) in col_j[j..].iter_mut().zip(&col_k[j..]) {
                *x -= f * l;
            }
        }
        let pivot = col_j[j].re;
        if pivot.is_nan() || pivot <= tol {
            return Err(Error::Singular { column: j, pivot });
        }
        let d = pivot.sqrt();
        col_j[j] = Complex64::new(d, 0.0);
        for x in &mut col_j[j + 1..] {
            *x /= d;
        }
        for x in &mut col_j[..j] {
            *x = Complex64::default();
        }
    }
    Ok(a)
}

/// Solves `L·L^H·x = b` in place.
fn solve_cholesky(l: &DMatrix<Complex64>, x: &mut [Complex64]) {
    let n = l.nrows();
    let data = l.as_slice();
    // Forward: L·z = b, column-oriented.
    for j in 0..n {
        let col = &data[j * n..(j + 1) * n];
        x[j] /= col[j].re;
        let xj = x[j];
        for (xi, lij) in x[j + 1..].iter_mut().zip(&col[j + 1..]) {
            *xi -= lij * xj;
        }
    }
    // Backward: L^H·x = z; row j of L^H is column j of L conjugated.
    for j in (0..n).rev() {
        let col = &data[j * n..(j + 1) * n];
        let s = dotc(&col[j + 1..], &x[j + 1..]);
        x[j] = (x[j] - s) / col[j].re;
    }
}

/// MMSE estimate `(H^H·H + σ²·I)^{-1}·H^H·y` by a dense Hermitian solve.
/// With `σ² = 0` this is zero forcing and fails on a singular `H`.
pub fn mmse_solve(h: &DMatrix<Complex64>, y: &[Complex64], noise_variance: f64) -> Result<Vec<Complex64>> {
    if !h.is_square() {
        return Err(Error::InvalidConfig("channel matrix must be square".into()));
    }
    NormalEquations::new(h).factor(noise_variance)?.apply(y)
}

/// Whether `scheme` may be equalized in `domain`.
pub fn check_pairing(scheme: Scheme, domain: EqDomain) -> Result<()> {
    let ok = matches!(
        (scheme, domain),
        (Scheme::Sc, EqDomain::DelayTime) | (Scheme::Ofdm, EqDomain::FrequencyDoppler) | (Scheme::Otfs, _)
    );
    if ok {
        Ok(())
    } else {
        Err(Error::IncompatibleScheme { scheme: scheme.name(), domain: domain.tag() })
    }
}

/// Equalization-domain channel, truncated per `mode`.
pub fn eq_channel(h_dt: &DomainMatrix, domain: EqDomain, mode: ChannelMode, fact: Factorization) -> Result<DomainMatrix> {
    mode.apply(to_domain(h_dt, domain.matrix_domain(), fact)?)
}

/// Full receive chain: build the eq-domain channel from `h_dt`, truncate it,
/// move `y_t` into the eq domain, solve, and return the estimate in the
/// scheme's data domain.
pub fn equalize(
    scheme: Scheme,
    spec: &EqualizerSpec,
    h_dt: &DomainMatrix,
    y_t: &SymbolFrame,
    fact: Factorization,
) -> Result<Vec<Complex64>> {
    check_pairing(scheme, spec.domain)?;
    if y_t.domain != SignalDomain::Time {
        return Err(Error::WrongDomain { expected: "time", got: y_t.domain.tag() });
    }
    let h = eq_channel(h_dt, spec.domain, spec.mode, fact)?;
    let y_eq = convert_frame(y_t, spec.domain.signal_domain(), fact)?;
    let x_eq = mmse_solve(h.entries(), &y_eq.values, spec.regularization())?;
    estimate_to_data(scheme, spec.domain, x_eq, fact)
}

pub(crate) fn estimate_to_data(scheme: Scheme, domain: EqDomain, x_eq: Vec<Complex64>, fact: Factorization) -> Result<Vec<Complex64>> {
    let frame = SymbolFrame::new(domain.signal_domain(), x_eq);
    Ok(convert_frame(&frame, scheme.data_domain(), fact)?.values)
}

/// Thresholds of the rule-based recommender.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecommendThresholds {
    /// `T_d` at or below which the delay-time domain wins.
    pub max_delay: f64,
    /// `F_d` at or below which the frequency-Doppler domain wins.
    pub max_doppler: f64,
    /// Delay-Doppler LPR at or above which the channel counts as sparse there.
    pub dd_lpr: f64,
}

impl Default for RecommendThresholds {
    fn default() -> Self {
        Self { max_delay: 8.0, max_doppler: 0.5, dd_lpr: 0.9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecommendMode {
    Rule,
    Metric,
}

impl FromStr for RecommendMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rule" => Ok(RecommendMode::Rule),
            "metric" => Ok(RecommendMode::Metric),
            other => Err(Error::UnknownTag(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainRecommendation {
    pub domain: EqDomain,
    pub rule_fired: String,
    /// LPR per domain tag, for whatever the recommender had to compute.
    pub metrics: BTreeMap<String, f64>,
}

/// Picks the equalization domain for a channel.
///
/// Rule mode walks the table: small `T_d` → dt; otherwise small `F_d` → fD;
/// otherwise a sparse delay-Doppler channel (LPR at `l_c` above threshold) →
/// dD; anything else → fD. Metric mode returns the domain with the largest
/// LPR at `l_c`, preferring fD on ties.
pub fn recommend_domain(
    cfg: Option<&ChannelConfig>,
    h_dt: Option<&DomainMatrix>,
    mode: RecommendMode,
    l_c: Option<usize>,
    thresholds: &RecommendThresholds,
) -> Result<DomainRecommendation> {
    let mut metrics = BTreeMap::new();
    match mode {
        RecommendMode::Rule => {
            let cfg = cfg.ok_or(Error::MissingInput("channel configuration"))?;
            if cfg.max_delay <= thresholds.max_delay {
                return Ok(DomainRecommendation { domain: EqDomain::DelayTime, rule_fired: "Small T_d".into(), metrics });
            }
            if cfg.max_doppler <= thresholds.max_doppler {
                return Ok(DomainRecommendation {
                    domain: EqDomain::FrequencyDoppler,
                    rule_fired: "T_d is large and F_d is not very large".into(),
                    metrics,
                });
            }
            let h = h_dt.ok_or(Error::MissingInput("delay-time channel matrix"))?;
            let l_c = l_c.unwrap_or(cfg.max_delay.round() as usize);
            let dd = lpr(&eq_channel(h, EqDomain::DelayDoppler, ChannelMode::Full, cfg.fact)?, l_c)?;
            metrics.insert(EqDomain::DelayDoppler.tag().to_string(), dd);
            if dd >= thresholds.dd_lpr {
                Ok(DomainRecommendation { domain: EqDomain::DelayDoppler, rule_fired: "Sparse channels in dD-domain".into(), metrics })
            } else {
                Ok(DomainRecommendation { domain: EqDomain::FrequencyDoppler, rule_fired: "Other channels".into(), metrics })
            }
        }
        RecommendMode::Metric => {
            let h = h_dt.ok_or(Error::MissingInput("delay-time channel matrix"))?;
            let l_c = l_c.ok_or(Error::MissingInput("window half-width L_c"))?;
            let fact = h
                .factorization()
                .or_else(|| cfg.map(|c| c.fact))
                .ok_or(Error::MissingInput("frame factorization"))?;
            let mut best = (EqDomain::FrequencyDoppler, f64::NEG_INFINITY);
            // fD is scored first so that it keeps ties.
            for domain in [EqDomain::FrequencyDoppler, EqDomain::DelayTime, EqDomain::DelayDoppler] {
                let value = lpr(&eq_channel(h, domain, ChannelMode::Full, fact)?, l_c)?;
                metrics.insert(domain.tag().to_string(), value);
                if value > best.1 {
                    best = (domain, value);
                }
            }
            Ok(DomainRecommendation { domain: best.0, rule_fired: "max LPR".into(), metrics })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_h_dt, case_config, sample_paths, PathSet};
    use crate::modem::modulate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
        (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
    }

    fn max_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn identity_channel_scales_by_one_plus_sigma() {
        let h = DMatrix::<Complex64>::identity(4, 4);
        let y: Vec<Complex64> = (0..4).map(|k| Complex64::new(1.0, k as f64)).collect();
        let x = mmse_solve(&h, &y, 0.5).unwrap();
        let want: Vec<Complex64> = y.iter().map(|v| v / 1.5).collect();
        assert!(max_err(&x, &want) < 1e-15);
    }

    #[test]
    fn zero_forcing_inverts() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = random_matrix(&mut rng, 12);
        let x = random_vec(&mut rng, 12);
        let y: Vec<Complex64> = (&h * nalgebra::DVector::from_column_slice(&x)).as_slice().to_vec();
        assert!(max_err(&mmse_solve(&h, &y, 0.0).unwrap(), &x) < 1e-8);
    }

    #[test]
    fn singular_channel_fails_without_regularization() {
        let mut h = DMatrix::<Complex64>::identity(3, 3);
        h[(2, 2)] = Complex64::default();
        let y = vec![Complex64::new(1.0, 0.0); 3];
        assert!(matches!(mmse_solve(&h, &y, 0.0), Err(Error::Singular { column: 2, .. })));
        assert!(mmse_solve(&h, &y, 0.1).is_ok());
        assert!(mmse_solve(&h, &y, -1.0).is_err());
    }

    #[test]
    fn residual_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [1, 4, 17, 64] {
            let h = random_matrix(&mut rng, n);
            let y = random_vec(&mut rng, n);
            let x = mmse_solve(&h, &y, 0.05).unwrap();
            let a = h.adjoint() * &h + DMatrix::<Complex64>::identity(n, n) * Complex64::new(0.05, 0.0);
            let b = h.adjoint() * nalgebra::DVector::from_column_slice(&y);
            let r = &a * nalgebra::DVector::from_column_slice(&x) - &b;
            assert!(r.norm() / b.norm() < 1e-8);
        }
    }

    #[test]
    fn mmse_approaches_zf() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let h = random_matrix(&mut rng, 8) + DMatrix::<Complex64>::identity(8, 8) * Complex64::new(3.0, 0.0);
        let y = random_vec(&mut rng, 8);
        let zf = mmse_solve(&h, &y, 0.0).unwrap();
        let mmse = mmse_solve(&h, &y, 1e-6).unwrap();
        let d: f64 = zf.iter().zip(&mmse).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(d < 1e-4);
    }

    #[test]
    fn pairing_rules() {
        assert!(check_pairing(Scheme::Sc, EqDomain::DelayTime).is_ok());
        assert!(check_pairing(Scheme::Ofdm, EqDomain::FrequencyDoppler).is_ok());
        for d in EqDomain::ALL {
            assert!(check_pairing(Scheme::Otfs, d).is_ok());
        }
        assert!(matches!(
            check_pairing(Scheme::Sc, EqDomain::FrequencyDoppler),
            Err(Error::IncompatibleScheme { scheme: "SC", domain: "fD" })
        ));
        assert!(check_pairing(Scheme::Ofdm, EqDomain::DelayDoppler).is_err());
    }

    #[test]
    fn identity_channel_recovers_symbols() {
        let fact = Factorization::new(4, 4).unwrap();
        let h = build_h_dt(&PathSet::single(0.0, 0.0), 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_vec(&mut rng, 16);
        for (scheme, domain) in [
            (Scheme::Sc, EqDomain::DelayTime),
            (Scheme::Ofdm, EqDomain::FrequencyDoppler),
            (Scheme::Otfs, EqDomain::DelayTime),
            (Scheme::Otfs, EqDomain::FrequencyDoppler),
            (Scheme::Otfs, EqDomain::DelayDoppler),
        ] {
            let y = modulate(scheme, &s, fact).unwrap();
            let est = equalize(scheme, &EqualizerSpec::zf(domain, ChannelMode::Full), &h, &y, fact).unwrap();
            assert!(max_err(&est, &s) < 1e-10, "{scheme} {domain}");
        }
    }

    #[test]
    fn full_channel_estimates_agree_across_domains() {
        let fact = Factorization::new(8, 8).unwrap();
        let cfg = case_config(2, 64, 8, 8).unwrap();
        let h = build_h_dt(&sample_paths(&cfg, 3).unwrap(), 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = random_vec(&mut rng, 64);
        let x = modulate(Scheme::Otfs, &s, fact).unwrap();
        let mut y = h.apply(&x.values).unwrap();
        for v in &mut y {
            *v += Complex64::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1));
        }
        let y = SymbolFrame::new(SignalDomain::Time, y);
        let ests: Vec<Vec<Complex64>> = EqDomain::ALL
            .iter()
            .map(|&d| equalize(Scheme::Otfs, &EqualizerSpec::mmse(d, ChannelMode::Full, 0.01), &h, &y, fact).unwrap())
            .collect();
        let n0 = ests[0].iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        for e in &ests[1..] {
            let d: f64 = e.iter().zip(&ests[0]).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            assert!(d / n0 < 1e-8);
        }
        // Truncation is the only thing that separates the domains.
        let band: Vec<Vec<Complex64>> = EqDomain::ALL
            .iter()
            .map(|&d| equalize(Scheme::Otfs, &EqualizerSpec::mmse(d, ChannelMode::Band(2), 0.01), &h, &y, fact).unwrap())
            .collect();
        assert!(max_err(&band[0], &band[2]) > 1e-6);
    }

    #[test]
    fn channel_mode_parsing() {
        assert_eq!("full".parse::<ChannelMode>().unwrap(), ChannelMode::Full);
        assert_eq!("band:5".parse::<ChannelMode>().unwrap(), ChannelMode::Band(5));
        assert_eq!("topk:12".parse::<ChannelMode>().unwrap(), ChannelMode::TopK(12));
        assert!("band".parse::<ChannelMode>().is_err());
        assert!("band:x".parse::<ChannelMode>().is_err());
        assert_eq!(ChannelMode::Band(5).to_string(), "band:5");
    }

    #[test]
    fn rule_recommendations() {
        let t = RecommendThresholds::default();
        let mut small = case_config(1, 256, 16, 16).unwrap();
        small.max_delay = 2.0;
        let r = recommend_domain(Some(&small), None, RecommendMode::Rule, None, &t).unwrap();
        assert_eq!((r.domain, r.rule_fired.as_str()), (EqDomain::DelayTime, "Small T_d"));

        for case in [3, 4] {
            let cfg = case_config(case, 256, 16, 16).unwrap();
            let r = recommend_domain(Some(&cfg), None, RecommendMode::Rule, None, &t).unwrap();
            assert_eq!(r.domain, EqDomain::FrequencyDoppler);
        }
        let r = recommend_domain(Some(&case_config(1, 256, 16, 16).unwrap()), None, RecommendMode::Rule, None, &t).unwrap();
        assert_eq!(r.domain, EqDomain::DelayTime);

        let mut fast = case_config(3, 256, 16, 16).unwrap();
        fast.max_doppler = 3.0;
        assert!(matches!(
            recommend_domain(Some(&fast), None, RecommendMode::Rule, None, &t),
            Err(Error::MissingInput(_))
        ));
        let h = build_h_dt(&sample_paths(&fast, 1).unwrap(), 256).unwrap();
        let r = recommend_domain(Some(&fast), Some(&h), RecommendMode::Rule, Some(16), &t).unwrap();
        assert!(r.metrics.contains_key("dD"));
        assert!(matches!(r.domain, EqDomain::DelayDoppler | EqDomain::FrequencyDoppler));
        assert!(recommend_domain(None, None, RecommendMode::Rule, None, &t).is_err());
    }

    #[test]
    fn metric_recommendation_is_scale_invariant() {
        let cfg = case_config(2, 256, 16, 16).unwrap();
        let h = build_h_dt(&sample_paths(&cfg, 12).unwrap(), 256).unwrap().with_factorization(cfg.fact);
        let t = RecommendThresholds::default();
        let r = recommend_domain(Some(&cfg), Some(&h), RecommendMode::Metric, Some(8), &t).unwrap();
        assert_eq!(r.metrics.len(), 3);
        assert_ne!(r.domain, EqDomain::DelayDoppler);
        let best = r.metrics[r.domain.tag()];
        assert!(r.metrics.values().all(|&v| v <= best));

        let scaled = h.replace(h.entries() * Complex64::new(0.0, 7.5));
        let r2 = recommend_domain(Some(&cfg), Some(&scaled), RecommendMode::Metric, Some(8), &t).unwrap();
        assert_eq!(r.domain, r2.domain);
        assert!(recommend_domain(Some(&cfg), Some(&h), RecommendMode::Metric, None, &t).is_err());
    }
}
