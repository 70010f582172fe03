//! Truncated power series `Σ_{k ≤ K} c_k zᵏ` with matrix (or column vector)
//! coefficients, used as coordinates for elements of `H²(ℂᵈ)`.

use rustfft::FftPlanner;

use crate::cauchy::OffsetGrid;
use crate::linalg::{CMatrix, C64};

/// Coefficients below this (relative to the largest) count as rounding noise.
pub const NOISE_FLOOR: f64 = 1e-13;
const TAIL_WINDOW: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct TaylorRep {
    coeffs: Vec<CMatrix>,
    rows: usize,
    cols: usize,
    /// Estimate of `Σ_{k>K} ‖c_k‖²`.
    pub tail_bound: f64,
}

impl TaylorRep {
    pub fn new(coeffs: Vec<CMatrix>) -> Self {
        let (rows, cols) = coeffs.first().map(|c| c.shape()).unwrap_or((0, 0));
        assert!(coeffs.iter().all(|c| c.shape() == (rows, cols)), "inconsistent coefficient shapes");
        TaylorRep { coeffs, rows, cols, tail_bound: 0.0 }
    }

    pub fn zeros(rows: usize, cols: usize, k: usize) -> Self {
        TaylorRep::new(vec![CMatrix::zeros(rows, cols); k + 1])
    }

    /// `zᵖ · m`, truncated at degree `k`.
    pub fn monomial(p: usize, m: &CMatrix, k: usize) -> Self {
        let mut out = TaylorRep::zeros(m.nrows(), m.ncols(), k);
        if p <= k {
            out.coeffs[p] = m.clone();
        }
        out
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn coeffs(&self) -> &[CMatrix] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> CMatrix {
        self.coeffs.get(k).cloned().unwrap_or_else(|| CMatrix::zeros(self.rows, self.cols))
    }

    pub fn eval(&self, z: C64) -> CMatrix {
        let mut out = CMatrix::zeros(self.rows, self.cols);
        for c in self.coeffs.iter().rev() {
            out = out * z + c;
        }
        out
    }

    /// `⟨self, other⟩ = Σ_k tr(other_k* self_k)`, linear in `self`.
    pub fn dot(&self, other: &TaylorRep) -> C64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| b.iter().zip(a.iter()).map(|(x, y)| x.conj() * y).sum::<C64>())
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt()
    }

    pub fn with_degree(&self, k: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(k + 1, CMatrix::zeros(self.rows, self.cols));
        TaylorRep { coeffs, rows: self.rows, cols: self.cols, tail_bound: self.tail_bound }
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|c| c * s)
    }

    pub fn map(&self, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        TaylorRep::new(self.coeffs.iter().map(f).collect())
    }

    pub fn add(&self, other: &TaylorRep) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &TaylorRep) -> Self {
        self.zip(other, |a, b| a - b)
    }

    fn zip(&self, other: &TaylorRep, f: impl Fn(&CMatrix, &CMatrix) -> CMatrix) -> Self {
        let k = self.degree().max(other.degree());
        let a = self.with_degree(k);
        let b = other.with_degree(k);
        let mut out = TaylorRep::new(a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| f(x, y)).collect());
        out.tail_bound = self.tail_bound + other.tail_bound;
        out
    }

    /// Multiplication by `zˢ` keeping the degree; for `s < 0` low
    /// coefficients are dropped (backward shift).
    pub fn shift(&self, s: isize) -> Self {
        let k = self.degree() as isize;
        let coeffs = (0..=k)
            .map(|i| {
                let j = i - s;
                if j >= 0 && j <= k {
                    self.coeffs[j as usize].clone()
                } else {
                    CMatrix::zeros(self.rows, self.cols)
                }
            })
            .collect();
        TaylorRep::new(coeffs)
    }

    /// Cauchy product truncated at the larger of the two degrees.
    pub fn mul(&self, other: &TaylorRep) -> Self {
        let k = self.degree().max(other.degree());
        let mut coeffs = vec![CMatrix::zeros(self.rows, other.cols); k + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.iter().all(|x| *x == C64::from(0.0)) {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if i + j > k {
                    break;
                }
                coeffs[i + j] += a * b;
            }
        }
        TaylorRep::new(coeffs)
    }

    pub fn mul_right(&self, m: &CMatrix) -> Self {
        self.map(|c| c * m)
    }

    pub fn mul_left(&self, m: &CMatrix) -> Self {
        self.map(|c| m * c)
    }

    pub fn column(&self, j: usize) -> Self {
        self.map(|c| c.columns(j, 1).into_owned())
    }

    /// Side-by-side concatenation of column series.
    pub fn from_columns(cols: &[TaylorRep]) -> Self {
        let k = cols.iter().map(|c| c.degree()).max().unwrap_or(0);
        let rows = cols.first().map(|c| c.rows).unwrap_or(0);
        let width: usize = cols.iter().map(|c| c.cols).sum();
        let coeffs = (0..=k)
            .map(|i| {
                let mut m = CMatrix::zeros(rows, width);
                let mut off = 0;
                for c in cols {
                    m.view_mut((0, off), (rows, c.cols)).copy_from(&c.coeff(i));
                    off += c.cols;
                }
                m
            })
            .collect();
        TaylorRep::new(coeffs)
    }

    /// Geometric extrapolation of `Σ_{k>K}‖c_k‖²` from the last coefficients.
    pub fn estimate_tail(&self) -> f64 {
        let norms: Vec<f64> = self.coeffs.iter().map(|c| c.norm()).collect();
        let scale = norms.iter().cloned().fold(1.0, f64::max);
        let w = TAIL_WINDOW.min(norms.len());
        let window = &norms[norms.len() - w..];
        let amax = window.iter().cloned().fold(0.0, f64::max);
        if amax <= NOISE_FLOOR * scale {
            return w as f64 * amax * amax;
        }
        if w < 2 || window[0] == 0.0 {
            return f64::INFINITY;
        }
        let rho = (window[w - 1].max(NOISE_FLOOR * scale) / window[0]).powf(1.0 / (w - 1) as f64);
        if rho >= 1.0 {
            return f64::INFINITY;
        }
        amax * amax * rho * rho / (1.0 - rho * rho)
    }

    pub fn certify_tail(mut self) -> Self {
        self.tail_bound = self.estimate_tail();
        self
    }
}

/// Result of extracting Taylor coefficients from boundary samples.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySeries {
    pub rep: TaylorRep,
    /// `ℓ²` mass of the Fourier coefficients at negative frequencies; near zero
    /// when the sampled function extends analytically to the disk.
    pub negative_mass: f64,
}

/// Fourier coefficients `0..=k` of matrix samples on an offset grid.
pub fn series_from_samples(grid: &OffsetGrid, samples: &[CMatrix], k: usize) -> BoundarySeries {
    let n = grid.n;
    assert_eq!(samples.len(), n);
    assert!(k < n / 2, "degree must stay below half the grid size");
    let (rows, cols) = samples[0].shape();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut coeffs = vec![CMatrix::zeros(rows, cols); k + 1];
    let mut negative = 0.0;
    let mut buf = vec![C64::from(0.0); n];
    for r in 0..rows {
        for c in 0..cols {
            for (b, s) in buf.iter_mut().zip(samples) {
                *b = s[(r, c)];
            }
            fft.process(&mut buf);
            for (m, coeff) in coeffs.iter_mut().enumerate() {
                let unrotate = C64::from_polar(1.0 / n as f64, -(m as f64) * grid.phase);
                coeff[(r, c)] = buf[m] * unrotate;
            }
            negative += buf[n / 2..].iter().map(|v| v.norm_sqr()).sum::<f64>() / (n * n) as f64;
        }
    }
    BoundarySeries { rep: TaylorRep::new(coeffs).certify_tail(), negative_mass: negative.sqrt() }
}

/// Values at the roots of unity `e^{2πik/n}`, `k = 0..n`.
pub fn sample_on_roots(rep: &TaylorRep, n: usize) -> Vec<CMatrix> {
    assert!(rep.degree() < n, "degree must stay below the number of roots");
    let (rows, cols) = rep.shape();
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let mut out = vec![CMatrix::zeros(rows, cols); n];
    let mut buf = vec![C64::from(0.0); n];
    for r in 0..rows {
        for c in 0..cols {
            buf.iter_mut().for_each(|b| *b = C64::from(0.0));
            for (b, coeff) in buf.iter_mut().zip(rep.coeffs()) {
                *b = coeff[(r, c)];
            }
            fft.process(&mut buf);
            for (o, b) in out.iter_mut().zip(&buf) {
                o[(r, c)] = *b;
            }
        }
    }
    out
}

/// Fourier coefficients `0..=k` of samples at the roots of unity.
pub fn coeffs_from_roots(samples: &[CMatrix], k: usize) -> TaylorRep {
    let n = samples.len();
    let (rows, cols) = samples[0].shape();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut coeffs = vec![CMatrix::zeros(rows, cols); k + 1];
    let mut buf = vec![C64::from(0.0); n];
    let scale = 1.0 / n as f64;
    for r in 0..rows {
        for c in 0..cols {
            for (b, s) in buf.iter_mut().zip(samples) {
                *b = s[(r, c)];
            }
            fft.process(&mut buf);
            for (coeff, b) in coeffs.iter_mut().zip(&buf) {
                coeff[(r, c)] = b * scale;
            }
        }
    }
    TaylorRep::new(coeffs)
}
