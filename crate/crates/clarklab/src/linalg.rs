//! Dense complex linear algebra shared by the other modules.
//!
//! Matrices here are small (at most a few dozen rows), so everything goes
//! through full eigen/singular value decompositions from `nalgebra`.

use nalgebra::{DMatrix, DVector};

use crate::error::{ClarkError, Result};

pub type C64 = num_complex::Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const RANK_TOL: f64 = 1e-9;
pub const PSD_TOL: f64 = 1e-10;
/// Condition numbers above this are reported as [`ClarkError::SingularCore`].
pub const COND_CAP: f64 = 1e12;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn eye(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Spectral norm.
pub fn op_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    singular_values(a).iter().cloned().fold(0.0, f64::max)
}

pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().singular_values().iter().cloned().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    s
}

/// Number of singular values strictly above `tol × σ_max`.
pub fn numerical_rank(a: &CMatrix, tol: f64) -> usize {
    let s = singular_values(a);
    let smax = s.first().cloned().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > tol * smax).count()
}

/// Ratio of extreme singular values; infinite for singular or empty input.
pub fn condition(a: &CMatrix) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// A matrix certified Hermitian at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HermMatrix(CMatrix);

impl HermMatrix {
    pub fn new(a: CMatrix, tol: f64) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(ClarkError::DimensionMismatch(format!(
                "Hermitian matrix must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let asym = (&a - a.adjoint()).norm();
        if asym > tol * a.norm().max(1.0) {
            return Err(ClarkError::NotHermitian { asym });
        }
        Ok(HermMatrix::symmetrized(a))
    }

    /// `(A + A*)/2`, always Hermitian.
    pub fn symmetrized(a: CMatrix) -> Self {
        let h = (&a + a.adjoint()) * C64::from(0.5);
        HermMatrix(h)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Eigenvalues in ascending order with matching eigenvector columns.
    pub fn eigen(&self) -> (Vec<f64>, CMatrix) {
        let n = self.dim();
        if n == 0 {
            return (Vec::new(), CMatrix::zeros(0, 0));
        }
        let eig = self.0.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
        let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vecs = CMatrix::zeros(n, n);
        for (k, &i) in order.iter().enumerate() {
            vecs.set_column(k, &eig.eigenvectors.column(i));
        }
        (vals, vecs)
    }

    /// Applies a real function to the spectrum.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let (vals, q) = self.eigen();
        let n = vals.len();
        let mut scaled = q.clone();
        for k in 0..n {
            let s = C64::from(f(vals[k]));
            for i in 0..n {
                scaled[(i, k)] *= s;
            }
        }
        scaled * q.adjoint()
    }
}

fn check_psd(vals: &[f64], tol: f64) -> Result<f64> {
    let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let min = vals.first().cloned().unwrap_or(0.0);
    if min < -tol * scale {
        return Err(ClarkError::NotPsd { min_eig: min });
    }
    Ok(scale)
}

/// Principal square root of a positive semidefinite matrix.
///
/// Eigenvalues within `tol` (relative to `max(1, ‖A‖)`) of zero are set to
/// zero, so `‖S² − A‖ ≤ tol·max(1, ‖A‖)`.
pub fn herm_sqrt(a: &HermMatrix, tol: f64) -> Result<CMatrix> {
    let (vals, _) = a.eigen();
    let scale = check_psd(&vals, tol)?;
    let cut = tol * scale;
    Ok(a.map_spectrum(|v| if v <= cut { 0.0 } else { v.sqrt() }))
}

/// Inverse of the principal square root of a positive definite matrix.
pub fn herm_inv_sqrt(a: &HermMatrix) -> Result<CMatrix> {
    let (vals, _) = a.eigen();
    check_psd(&vals, PSD_TOL)?;
    let lo = vals.first().cloned().unwrap_or(1.0);
    let hi = vals.last().cloned().unwrap_or(1.0);
    if lo <= 0.0 || (hi / lo).sqrt() > COND_CAP {
        return Err(ClarkError::SingularCore {
            cond: if lo <= 0.0 { f64::INFINITY } else { (hi / lo).sqrt() },
        });
    }
    Ok(a.map_spectrum(|v| 1.0 / v.sqrt()))
}

/// Moore–Penrose pseudoinverse; singular values `≤ rank_tol × σ_max` are dropped.
pub fn pinv(a: &CMatrix, rank_tol: f64) -> CMatrix {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return CMatrix::zeros(n, m);
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mut out = CMatrix::zeros(n, m);
    if smax == 0.0 {
        return out;
    }
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > rank_tol * smax {
            let vk = vt.row(k).adjoint();
            let uk = u.column(k);
            out += vk * uk.adjoint() * C64::from(1.0 / s);
        }
    }
    out
}

/// Solves `A X = B`, refusing ill-conditioned `A`.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.nrows() != a.ncols() || a.nrows() != b.nrows() {
        return Err(ClarkError::DimensionMismatch(format!(
            "solve: A is {}x{}, B is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let cond = condition(a);
    if !(cond <= COND_CAP) {
        return Err(ClarkError::SingularCore { cond });
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or(ClarkError::SingularCore { cond: f64::INFINITY })
}

/// Solves `X A = B`.
pub fn solve_right(b: &CMatrix, a: &CMatrix) -> Result<CMatrix> {
    Ok(solve(&a.adjoint(), &b.adjoint())?.adjoint())
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    solve(a, &eye(a.nrows()))
}

/// `(I_n − C·D·B*)⁻¹ = I_n + C(I_d − D·B*·C)⁻¹D·B*`, inverting only the `d×d` core.
pub fn woodbury_inverse(c_mat: &CMatrix, d_mat: &CMatrix, bstar: &CMatrix) -> Result<CMatrix> {
    let n = c_mat.nrows();
    let d = d_mat.nrows();
    if d_mat.ncols() != d || c_mat.ncols() != d || bstar.nrows() != d || bstar.ncols() != n {
        return Err(ClarkError::DimensionMismatch(format!(
            "woodbury: C {:?}, D {:?}, B* {:?}",
            c_mat.shape(),
            d_mat.shape(),
            bstar.shape()
        )));
    }
    let db = d_mat * bstar;
    let core = eye(d) - &db * c_mat;
    let x = solve(&core, &db)?;
    Ok(eye(n) + c_mat * x)
}

/// Orthonormal basis (columns) of the range of a Hermitian PSD matrix:
/// eigenvectors with eigenvalue above `tol × max(1, λ_max)`.
pub fn range_basis(a: &HermMatrix, tol: f64) -> CMatrix {
    let (vals, q) = a.eigen();
    let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > tol * scale).collect();
    let mut out = CMatrix::zeros(a.dim(), keep.len());
    for (j, &k) in keep.iter().enumerate() {
        out.set_column(j, &q.column(k));
    }
    out
}

/// Orthonormal basis of the null space of `A`: right singular vectors with
/// singular value `≤ tol × max(1, σ_max)`.
pub fn null_space(a: &CMatrix, tol: f64) -> CMatrix {
    let (m, n) = a.shape();
    let mut padded = CMatrix::zeros(m.max(n), n);
    padded.view_mut((0, 0), (m, n)).copy_from(a);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("svd v_t");
    let scale = svd.singular_values.iter().cloned().fold(1.0, f64::max);
    let keep: Vec<usize> =
        (0..n).filter(|&k| svd.singular_values[k] <= tol * scale).collect();
    let mut out = CMatrix::zeros(n, keep.len());
    for (j, &k) in keep.iter().enumerate() {
        out.set_column(j, &vt.row(k).adjoint());
    }
    out
}

pub fn mat_pow(a: &CMatrix, k: usize) -> CMatrix {
    let mut out = eye(a.nrows());
    for _ in 0..k {
        out = &out * a;
    }
    out
}

/// Block-diagonal stack of the given matrices.
pub fn block_diag(blocks: &[CMatrix]) -> CMatrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let (mut r, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r, c0), b.shape()).copy_from(b);
        r += b.nrows();
        c0 += b.ncols();
    }
    out
}

/// Vertical stack `[top; bottom]`.
pub fn vstack(top: &CMatrix, bottom: &CMatrix) -> CMatrix {
    assert_eq!(top.ncols(), bottom.ncols());
    let mut out = CMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.view_mut((0, 0), top.shape()).copy_from(top);
    out.view_mut((top.nrows(), 0), bottom.shape()).copy_from(bottom);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_iterator(v.len(), v.iter().map(|&x| C64::from(x))))
    }

    #[test]
    fn sqrt_identity_and_diagonal() {
        let s = herm_sqrt(&HermMatrix::new(eye(2), HERMITIAN_TOL).unwrap(), PSD_TOL).unwrap();
        assert!((s - eye(2)).norm() < 1e-14);
        let s = herm_sqrt(&HermMatrix::new(diag(&[4.0, 0.0]), HERMITIAN_TOL).unwrap(), PSD_TOL).unwrap();
        assert!((s - diag(&[2.0, 0.0])).norm() < 1e-14);
    }

    #[test]
    fn sqrt_rejects_negative_and_nonhermitian() {
        let a = HermMatrix::new(diag(&[1.0, -0.5]), HERMITIAN_TOL).unwrap();
        assert!(matches!(herm_sqrt(&a, PSD_TOL), Err(ClarkError::NotPsd { .. })));
        let mut b = eye(2);
        b[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(HermMatrix::new(b, HERMITIAN_TOL), Err(ClarkError::NotHermitian { .. })));
    }

    #[test]
    fn sqrt_clamps_tiny_negative() {
        let a = HermMatrix::new(diag(&[1.0, -1e-13]), HERMITIAN_TOL).unwrap();
        let s = herm_sqrt(&a, PSD_TOL).unwrap();
        assert!((s - diag(&[1.0, 0.0])).norm() < 1e-14);
    }

    #[test]
    fn pinv_small_cases() {
        let a = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(1.0, 0.0), c(0.0, 1.0), c(3.0, 0.0)]);
        let p = pinv(&a, RANK_TOL);
        assert!((&a * &p - eye(2)).norm() < 1e-13);
        assert_eq!(pinv(&CMatrix::zeros(2, 3), RANK_TOL), CMatrix::zeros(3, 2));
    }

    #[test]
    fn woodbury_trivial_cases() {
        let cm = CMatrix::from_element(3, 1, c(1.0, 0.0));
        let w = woodbury_inverse(&cm, &CMatrix::zeros(1, 1), &cm.adjoint()).unwrap();
        assert!((w - eye(3)).norm() < 1e-15);
        let one = CMatrix::from_element(1, 1, c(1.0, 0.0));
        let half = CMatrix::from_element(1, 1, c(0.5, 0.0));
        let w = woodbury_inverse(&one, &half, &one).unwrap();
        assert!((w[(0, 0)] - c(2.0, 0.0)).norm() < 1e-15);
        assert!(matches!(
            woodbury_inverse(&one, &one, &one),
            Err(ClarkError::SingularCore { .. })
        ));
    }

    #[test]
    fn norms_and_ranks() {
        assert!((op_norm(&eye(3)) - 1.0).abs() < 1e-15);
        assert_eq!(numerical_rank(&diag(&[1.0, 1e-14]), 1e-9), 1);
        assert_eq!(numerical_rank(&CMatrix::zeros(2, 2), 1e-9), 0);
    }
}
