//! Unitary DFTs, the Kronecker-structured OTFS transform, and the three-stage
//! layered IFFT.
//!
//! Every transform here carries `1/√size` scaling, so all of them are
//! orthonormal and norms are preserved end to end.
//!
//! Arrays of size `M×N` are addressed as `(m, n)` with `m < M` (row) and
//! `n < N` (column). "Column-wise vectorization" means index `m + M·n`;
//! "row-wise fill" means index `N·m + n`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Direction of a discrete Fourier transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `exp(-j2πkp/P)` kernel.
    Forward,
    /// `exp(+j2πkp/P)` kernel.
    Inverse,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Forward => Direction::Inverse,
            Direction::Inverse => Direction::Forward,
        }
    }
}

/// A `P = M·N` split of the frame length.
///
/// `M` is the size of the column-wise (delay) transform and `N` the size of
/// the row-wise (Doppler) transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization {
    m: usize,
    n: usize,
}

impl Factorization {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidFactorization { p: m * n, m, n });
        }
        Ok(Self { m, n })
    }

    /// Checks `p == m·n` before building.
    pub fn with_total(p: usize, m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 || m * n != p {
            return Err(Error::InvalidFactorization { p, m, n });
        }
        Ok(Self { m, n })
    }

    pub fn p(&self) -> usize {
        self.m * self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.p() {
            return Err(Error::LengthMismatch { expected: self.p(), got: len });
        }
        Ok(())
    }
}

/// Twiddle weights of the layered IFFT, `W(m, n) = exp(-j2π·m·n/P)`.
#[derive(Debug, Clone)]
pub struct TwiddleMatrix {
    m: usize,
    n: usize,
    entries: Vec<Complex64>,
}

impl TwiddleMatrix {
    pub fn new(fact: Factorization) -> Self {
        let (m, n, p) = (fact.m(), fact.n(), fact.p());
        let mut entries = Vec::with_capacity(p);
        for row in 0..m {
            for col in 0..n {
                // Reduce the exponent first so large P keeps full phase accuracy.
                let k = (row * col) % p;
                entries.push(Complex64::from_polar(1.0, -2.0 * PI * k as f64 / p as f64));
            }
        }
        Self { m, n, entries }
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.n + col]
    }
}

/// A planned unitary DFT of fixed size.
#[derive(Clone)]
pub struct UnitaryDft {
    fft: Arc<dyn Fft<f64>>,
    scale: f64,
    scratch_len: usize,
}

impl UnitaryDft {
    pub fn new(size: usize, direction: Direction) -> Self {
        let mut planner = FftPlanner::new();
        Self::with_planner(&mut planner, size, direction)
    }

    pub fn with_planner(planner: &mut FftPlanner<f64>, size: usize, direction: Direction) -> Self {
        let fft = match direction {
            Direction::Forward => planner.plan_fft_forward(size),
            Direction::Inverse => planner.plan_fft_inverse(size),
        };
        let scratch_len = fft.get_inplace_scratch_len();
        Self { fft, scale: 1.0 / (size as f64).sqrt(), scratch_len }
    }

    pub fn len(&self) -> usize {
        self.fft.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fft.len() == 0
    }

    pub fn scratch(&self) -> Vec<Complex64> {
        vec![Complex64::default(); self.scratch_len]
    }

    /// Transforms `buf` in place; `scratch` must come from [`UnitaryDft::scratch`].
    pub fn process(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.fft.process_with_scratch(buf, scratch);
        for x in buf.iter_mut() {
            *x *= self.scale;
        }
    }
}

/// Unitary `P`-point DFT (forward) or IDFT (inverse).
pub fn unitary_dft(v: &[Complex64], direction: Direction) -> Result<Vec<Complex64>> {
    if v.is_empty() {
        return Err(Error::EmptyInput);
    }
    let dft = UnitaryDft::new(v.len(), direction);
    let mut out = v.to_vec();
    dft.process(&mut out, &mut dft.scratch());
    Ok(out)
}

/// Applies a unitary `N`-point transform along every row of the `M×N` array
/// whose column-wise vectorization is `buf`.
pub(crate) fn rows_in_place(m: usize, dft: &UnitaryDft, buf: &mut [Complex64], row: &mut [Complex64], scratch: &mut [Complex64]) {
    let n = dft.len();
    for r in 0..m {
        for (c, x) in row.iter_mut().enumerate() {
            *x = buf[r + m * c];
        }
        dft.process(row, scratch);
        for (c, x) in row.iter().enumerate() {
            buf[r + m * c] = *x;
        }
    }
    debug_assert_eq!(row.len(), n);
}

/// Row-wise transform of the column-wise `M×N` view, the matrix
/// `F_N^H ⊗ I_M` (inverse) or `F_N ⊗ I_M` (forward).
pub(crate) fn kron_rows(v: &[Complex64], fact: Factorization, direction: Direction) -> Result<Vec<Complex64>> {
    fact.check_len(v.len())?;
    let dft = UnitaryDft::new(fact.n(), direction);
    let mut out = v.to_vec();
    let mut row = vec![Complex64::default(); fact.n()];
    rows_in_place(fact.m(), &dft, &mut out, &mut row, &mut dft.scratch());
    Ok(out)
}

/// OTFS transform from delay-Doppler to time: reshape column-wise to `M×N`,
/// unitary `N`-point IDFT along each row, vectorize column-wise.
pub fn kron_idft_rows(v: &[Complex64], fact: Factorization) -> Result<Vec<Complex64>> {
    kron_rows(v, fact, Direction::Inverse)
}

/// Adjoint of [`kron_idft_rows`]: time back to delay-Doppler.
pub fn kron_dft_rows(v: &[Complex64], fact: Factorization) -> Result<Vec<Complex64>> {
    kron_rows(v, fact, Direction::Forward)
}

/// `P`-point unitary IDFT built from its three layers: column-wise `M`-point
/// IDFT, element-wise weighting by `conj(W)`, row-wise `N`-point IDFT.
///
/// The input enters the `M×N` array row-wise and the result leaves it
/// column-wise. The output equals `unitary_dft(v, Inverse)`.
pub fn layered_idft(v: &[Complex64], fact: Factorization) -> Result<Vec<Complex64>> {
    fact.check_len(v.len())?;
    let (m, n) = (fact.m(), fact.n());
    let twiddle = TwiddleMatrix::new(fact);
    let col_idft = UnitaryDft::new(m, Direction::Inverse);
    let row_idft = UnitaryDft::new(n, Direction::Inverse);

    // Work array in column-major order: element (r, c) at r + m·c.
    let mut work = vec![Complex64::default(); m * n];
    let mut col = vec![Complex64::default(); m];
    let mut scratch = col_idft.scratch();
    for c in 0..n {
        for (r, x) in col.iter_mut().enumerate() {
            *x = v[n * r + c];
        }
        col_idft.process(&mut col, &mut scratch);
        for (r, x) in col.iter().enumerate() {
            work[r + m * c] = *x * twiddle.entry(r, c).conj();
        }
    }

    let mut row = vec![Complex64::default(); n];
    rows_in_place(m, &row_idft, &mut work, &mut row, &mut row_idft.scratch());
    Ok(work)
}

/// OTFS seen as precoded OFDM: maps delay-Doppler symbols to the frequency
/// vector whose layered IDFT is the OTFS time signal.
///
/// Undoes the first two layers: weight by `W`, then column-wise `M`-point
/// DFT, then read the array out row-wise.
pub fn otfs_precoder(s: &[Complex64], fact: Factorization) -> Result<Vec<Complex64>> {
    fact.check_len(s.len())?;
    let (m, n) = (fact.m(), fact.n());
    let twiddle = TwiddleMatrix::new(fact);
    let col_dft = UnitaryDft::new(m, Direction::Forward);

    let mut out = vec![Complex64::default(); m * n];
    let mut col = vec![Complex64::default(); m];
    let mut scratch = col_dft.scratch();
    for c in 0..n {
        for (r, x) in col.iter_mut().enumerate() {
            *x = s[r + m * c] * twiddle.entry(r, c);
        }
        col_dft.process(&mut col, &mut scratch);
        for (r, x) in col.iter().enumerate() {
            out[n * r + c] = *x;
        }
    }
    Ok(out)
}
