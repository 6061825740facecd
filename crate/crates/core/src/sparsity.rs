//! Localized (LPR) and sorted (SPR) power ratios, and the matching channel
//! truncations.
//!
//! Both metrics look at one column at a time. LPR keeps the circular window of
//! `2·L_c + 1` entries centred on the column's peak; SPR keeps the `2·L_c + 1`
//! strongest entries wherever they are. Each returns the retained fraction of
//! column power, averaged over all `P` columns. Peaks and ranks break ties
//! toward the smaller row index.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::domains::{Domain, DomainMatrix};
use crate::error::{Error, Result};

/// One averaged point of a sparsity sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparsityRecord {
    pub case_id: Option<u8>,
    pub domain: Domain,
    pub l_c: usize,
    pub lpr: f64,
    pub spr: f64,
    pub realizations: usize,
    pub seed: u64,
}

fn check_window(l_c: usize, p: usize) -> Result<()> {
    if 2 * l_c + 1 > p {
        return Err(Error::WindowTooLarge { l_c, p });
    }
    Ok(())
}

/// Descending power, then ascending index.
fn rank(powers: &[f64], a: usize, b: usize) -> Ordering {
    powers[b].partial_cmp(&powers[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b))
}

fn peak_index(powers: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in powers.iter().enumerate() {
        if x > powers[best] {
            best = i;
        }
    }
    best
}

/// Row indices of the `k` strongest entries, strongest first.
fn top_indices(powers: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..powers.len()).collect();
    if k < idx.len() {
        idx.select_nth_unstable_by(k, |&a, &b| rank(powers, a, b));
        idx.truncate(k);
    }
    idx.sort_unstable_by(|&a, &b| rank(powers, a, b));
    idx
}

/// Per-column power data of one matrix, reusable across a sweep of `L_c`.
#[derive(Debug, Clone)]
pub struct PowerProfile {
    p: usize,
    /// Column-major `|h|²`.
    powers: Vec<f64>,
    totals: Vec<f64>,
    peaks: Vec<usize>,
    /// Per column, running sums of the strongest entries in rank order.
    sorted_prefix: Vec<Vec<f64>>,
    max_l_c: usize,
}

impl PowerProfile {
    /// Prepares LPR and SPR queries for every `L_c ≤ max_l_c`.
    pub fn new(h: &DomainMatrix, max_l_c: usize) -> Result<Self> {
        let p = h.size();
        check_window(max_l_c, p)?;
        let powers: Vec<f64> = h.entries().iter().map(|x| x.norm_sqr()).collect();
        let k = 2 * max_l_c + 1;
        let mut totals = Vec::with_capacity(p);
        let mut peaks = Vec::with_capacity(p);
        let mut sorted_prefix = Vec::with_capacity(p);
        for col in powers.chunks_exact(p) {
            totals.push(col.iter().sum::<f64>());
            peaks.push(peak_index(col));
            let mut acc = 0.0;
            sorted_prefix.push(
                top_indices(col, k)
                    .into_iter()
                    .map(|i| {
                        acc += col[i];
                        acc
                    })
                    .collect(),
            );
        }
        Ok(Self { p, powers, totals, peaks, sorted_prefix, max_l_c })
    }

    fn check(&self, l_c: usize) -> Result<()> {
        check_window(l_c, self.p)?;
        if l_c > self.max_l_c {
            return Err(Error::WindowTooLarge { l_c, p: 2 * self.max_l_c + 1 });
        }
        Ok(())
    }

    fn window_power(&self, col: usize, l_c: usize) -> f64 {
        let p = self.p;
        let column = &self.powers[col * p..(col + 1) * p];
        let start = (self.peaks[col] + p - l_c) % p;
        (0..2 * l_c + 1).map(|k| column[(start + k) % p]).sum()
    }

    fn ratio(&self, col: usize, retained: f64) -> f64 {
        let total = self.totals[col];
        if total == 0.0 {
            1.0
        } else {
            (retained / total).min(1.0)
        }
    }

    fn lpr_column(&self, col: usize, l_c: usize) -> f64 {
        if 2 * l_c + 1 == self.p {
            return 1.0;
        }
        self.ratio(col, self.window_power(col, l_c))
    }

    pub fn lpr(&self, l_c: usize) -> Result<f64> {
        self.check(l_c)?;
        let sum: f64 = (0..self.p).map(|c| self.lpr_column(c, l_c)).sum();
        Ok(sum / self.p as f64)
    }

    pub fn spr(&self, l_c: usize) -> Result<f64> {
        self.check(l_c)?;
        let sum: f64 = (0..self.p)
            .map(|c| {
                let top = self.ratio(c, self.sorted_prefix[c][2 * l_c]);
                // Summation order differs from the window sum; the strongest
                // set can never retain less.
                top.max(self.lpr_column(c, l_c))
            })
            .sum();
        Ok(sum / self.p as f64)
    }
}

/// Localized power ratio of `h` for window half-width `l_c`.
pub fn lpr(h: &DomainMatrix, l_c: usize) -> Result<f64> {
    PowerProfile::new(h, l_c)?.lpr(l_c)
}

/// Sorted power ratio of `h` for `2·l_c + 1` retained entries per column.
pub fn spr(h: &DomainMatrix, l_c: usize) -> Result<f64> {
    PowerProfile::new(h, l_c)?.spr(l_c)
}

/// Zeroes every entry outside the peak-centred window of each column.
pub fn truncate_band(h: &DomainMatrix, l_c: usize) -> Result<DomainMatrix> {
    let p = h.size();
    check_window(l_c, p)?;
    let mut out = DMatrix::<Complex64>::zeros(p, p);
    let mut powers = vec![0.0; p];
    for (n, col) in h.entries().column_iter().enumerate() {
        for (x, v) in powers.iter_mut().zip(col.iter()) {
            *x = v.norm_sqr();
        }
        let q = peak_index(&powers);
        for k in 0..2 * l_c + 1 {
            let m = (q + p - l_c + k) % p;
            out[(m, n)] = col[m];
        }
    }
    Ok(h.replace(out))
}

/// Keeps the `2·l_c + 1` strongest entries of each column.
pub fn truncate_topk(h: &DomainMatrix, l_c: usize) -> Result<DomainMatrix> {
    let p = h.size();
    check_window(l_c, p)?;
    let mut out = DMatrix::<Complex64>::zeros(p, p);
    let mut powers = vec![0.0; p];
    for (n, col) in h.entries().column_iter().enumerate() {
        for (x, v) in powers.iter_mut().zip(col.iter()) {
            *x = v.norm_sqr();
        }
        for m in top_indices(&powers, 2 * l_c + 1) {
            out[(m, n)] = col[m];
        }
    }
    Ok(h.replace(out))
}
