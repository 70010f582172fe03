//! The perturbed operator `T = U + B(Γ − I)B*U` and its defect operators.

use crate::error::{ClarkError, Result};
use crate::linalg::{
    eye, herm_inv_sqrt, herm_sqrt, mat_pow, null_space, op_norm, range_basis, CMatrix, HermMatrix,
    PSD_TOL, RANK_TOL,
};
use crate::measure::EmbeddedOperators;

/// `Γ` with `‖Γ‖ < 1 − STRICT_MARGIN` is treated as a strict contraction.
pub const STRICT_MARGIN: f64 = 1e-6;
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum ContractionClass {
    Strict,
    Unitary,
    General,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionParam {
    gamma: CMatrix,
    class: ContractionClass,
    norm: f64,
}

impl ContractionParam {
    pub fn new(gamma: CMatrix) -> Result<Self> {
        if gamma.nrows() != gamma.ncols() {
            return Err(ClarkError::DimensionMismatch(format!(
                "Γ must be square, got {}x{}",
                gamma.nrows(),
                gamma.ncols()
            )));
        }
        let norm = op_norm(&gamma);
        let d = gamma.nrows();
        let class = if norm < 1.0 - STRICT_MARGIN {
            ContractionClass::Strict
        } else if op_norm(&(gamma.adjoint() * &gamma - eye(d))) <= UNITARY_TOL {
            ContractionClass::Unitary
        } else if norm <= 1.0 + UNITARY_TOL {
            ContractionClass::General
        } else {
            return Err(ClarkError::NotContraction { norm });
        };
        Ok(ContractionParam { gamma, class, norm })
    }

    pub fn zero(d: usize) -> Self {
        ContractionParam::new(CMatrix::zeros(d, d)).unwrap()
    }

    pub fn gamma(&self) -> &CMatrix {
        &self.gamma
    }

    pub fn class(&self) -> ContractionClass {
        self.class
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn d(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn require_strict(&self) -> Result<()> {
        if self.class != ContractionClass::Strict {
            return Err(ClarkError::GammaNotStrict { norm: self.norm });
        }
        Ok(())
    }
}

/// `D_Γ = (I − Γ*Γ)^{1/2}`, `D_{Γ*} = (I − ΓΓ*)^{1/2}` and their inverses.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaDefects {
    pub gamma: CMatrix,
    pub d: CMatrix,
    pub d_star: CMatrix,
    pub d_inv: CMatrix,
    pub d_star_inv: CMatrix,
}

impl GammaDefects {
    pub fn new(param: &ContractionParam) -> Result<Self> {
        param.require_strict()?;
        let g = param.gamma().clone();
        let k = g.nrows();
        let a = HermMatrix::symmetrized(eye(k) - g.adjoint() * &g);
        let a_star = HermMatrix::symmetrized(eye(k) - &g * g.adjoint());
        Ok(GammaDefects {
            d: herm_sqrt(&a, PSD_TOL)?,
            d_star: herm_sqrt(&a_star, PSD_TOL)?,
            d_inv: herm_inv_sqrt(&a)?,
            d_star_inv: herm_inv_sqrt(&a_star)?,
            gamma: g,
        })
    }

    pub fn dim(&self) -> usize {
        self.gamma.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Defects {
    pub d_t: CMatrix,
    pub d_t_star: CMatrix,
    pub d_gamma: CMatrix,
    pub d_gamma_star: CMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedOperator {
    pub t: CMatrix,
    pub gamma: ContractionParam,
    pub parent: EmbeddedOperators,
    /// Closed-form defects `U*B D_Γ B*U` and `B D_{Γ*} B*`.
    pub defects: Defects,
    /// `‖(I − T*T)^{1/2} − U*B D_Γ B*U‖` and the same for `T*`.
    pub defect_route_residual: f64,
}

pub fn build_t(emb: &EmbeddedOperators, gamma: &ContractionParam) -> Result<PerturbedOperator> {
    let d = emb.d;
    if gamma.d() != d {
        return Err(ClarkError::DimensionMismatch(format!("Γ is {}x{}, d = {d}", gamma.d(), gamma.d())));
    }
    let b = &emb.b_emb;
    let u = &emb.u;
    let g = gamma.gamma();
    let t = u + b * (g - eye(d)) * b.adjoint() * u;
    let d_gamma = herm_sqrt(&HermMatrix::symmetrized(eye(d) - g.adjoint() * g), PSD_TOL)?;
    let d_gamma_star = herm_sqrt(&HermMatrix::symmetrized(eye(d) - g * g.adjoint()), PSD_TOL)?;
    let d_t = u.adjoint() * b * &d_gamma * b.adjoint() * u;
    let d_t_star = b * &d_gamma_star * b.adjoint();
    let n = emb.n;
    let spectral_t = herm_sqrt(&HermMatrix::symmetrized(eye(n) - t.adjoint() * &t), PSD_TOL)?;
    let spectral_ts = herm_sqrt(&HermMatrix::symmetrized(eye(n) - &t * t.adjoint()), PSD_TOL)?;
    let defect_route_residual = op_norm(&(spectral_t - &d_t)).max(op_norm(&(spectral_ts - &d_t_star)));
    Ok(PerturbedOperator {
        t,
        gamma: gamma.clone(),
        parent: emb.clone(),
        defects: Defects { d_t, d_t_star, d_gamma, d_gamma_star },
        defect_route_residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefectReport {
    pub rank_d_t: usize,
    pub rank_d_t_star: usize,
    pub rank_d_gamma: usize,
    /// Orthonormal columns spanning the defect spaces.
    pub basis_d_t: CMatrix,
    pub basis_d_t_star: CMatrix,
    /// `‖(I − P_{𝔇_{T*}}) T P_{𝔇_T}‖`.
    pub forward_inclusion: f64,
    /// `‖(I − P_{𝔇_T}) T* P_{𝔇_{T*}}‖`.
    pub backward_inclusion: f64,
}

pub fn defect_report(op: &PerturbedOperator) -> DefectReport {
    let n = op.t.nrows();
    let sq = |m: &CMatrix| HermMatrix::symmetrized(m * m);
    let basis_d_t = range_basis(&sq(&op.defects.d_t), RANK_TOL);
    let basis_d_t_star = range_basis(&sq(&op.defects.d_t_star), RANK_TOL);
    let rank_d_gamma = range_basis(&sq(&op.defects.d_gamma), RANK_TOL).ncols();
    let p_star = &basis_d_t_star * basis_d_t_star.adjoint();
    let p = &basis_d_t * basis_d_t.adjoint();
    let forward_inclusion = op_norm(&((eye(n) - &p_star) * &op.t * &basis_d_t));
    let backward_inclusion = op_norm(&((eye(n) - &p) * op.t.adjoint() * &basis_d_t_star));
    DefectReport {
        rank_d_t: basis_d_t.ncols(),
        rank_d_t_star: basis_d_t_star.ncols(),
        rank_d_gamma,
        basis_d_t,
        basis_d_t_star,
        forward_inclusion,
        backward_inclusion,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnuCertificate {
    pub cnu: bool,
    pub star_cyclic: bool,
    /// Orthonormal basis of `{x : ‖Tᵏx‖ = ‖x‖ = ‖T*ᵏx‖, k ≤ n}`.
    pub witness: CMatrix,
}

impl CnuCertificate {
    pub fn unitary_part_dim(&self) -> usize {
        self.witness.ncols()
    }
}

/// Complete non-unitarity: the unitary part is the common kernel of
/// `I − T*ᵏTᵏ` and `I − TᵏT*ᵏ` for `k = 1..n`.
pub fn cnu_certificate(op: &PerturbedOperator) -> Result<CnuCertificate> {
    op.gamma.require_strict()?;
    let n = op.t.nrows();
    let mut stacked = CMatrix::zeros(2 * n * n, n);
    for k in 1..=n {
        let tk = mat_pow(&op.t, k);
        let a = eye(n) - tk.adjoint() * &tk;
        let b = eye(n) - &tk * tk.adjoint();
        stacked.view_mut((2 * (k - 1) * n, 0), (n, n)).copy_from(&a);
        stacked.view_mut(((2 * k - 1) * n, 0), (n, n)).copy_from(&b);
    }
    let witness = null_space(&stacked, RANK_TOL);
    let star_cyclic = op.parent.cyclic;
    Ok(CnuCertificate { cnu: star_cyclic && witness.ncols() == 0, star_cyclic, witness })
}

/// Rank of `{Uᵏ B e_l : |k| ≤ n}` for a unitary `U` (`U*` powers for negative `k`).
pub fn orbit_rank(u: &CMatrix, b: &CMatrix) -> usize {
    let n = u.nrows();
    let d = b.ncols();
    let mut cols = CMatrix::zeros(n, (2 * n + 1) * d);
    let mut fwd = b.clone();
    let mut bwd = b.clone();
    cols.view_mut((0, 0), (n, d)).copy_from(b);
    for k in 1..=n {
        fwd = u * fwd;
        bwd = u.adjoint() * bwd;
        cols.view_mut((0, (2 * k - 1) * d), (n, d)).copy_from(&fwd);
        cols.view_mut((0, 2 * k * d), (n, d)).copy_from(&bwd);
    }
    crate::linalg::numerical_rank(&cols, RANK_TOL)
}

impl PerturbedOperator {
    pub fn n(&self) -> usize {
        self.t.nrows()
    }

    /// `‖T*T − I‖`.
    pub fn unitarity_defect(&self) -> f64 {
        op_norm(&(self.t.adjoint() * &self.t - eye(self.n())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, C64};
    use crate::measure::{Atom, SpectralMeasure};

    fn scalar(x: f64) -> CMatrix {
        CMatrix::from_element(1, 1, C64::from(x))
    }

    #[test]
    fn one_dimensional_case() {
        let m = SpectralMeasure::new(vec![Atom::at_turn(0.0, 1.0, scalar(1.0))], 1).unwrap();
        let g = ContractionParam::new(CMatrix::from_element(1, 1, c(0.3, 0.2))).unwrap();
        let op = build_t(&m.embed(), &g).unwrap();
        assert!((op.t[(0, 0)] - c(0.3, 0.2)).norm() < 1e-15);
        let one = ContractionParam::new(scalar(1.0)).unwrap();
        assert_eq!(one.class(), ContractionClass::Unitary);
        let op = build_t(&m.embed(), &one).unwrap();
        assert!(matches!(cnu_certificate(&op), Err(ClarkError::GammaNotStrict { .. })));
        assert!(matches!(
            ContractionParam::new(scalar(1.5)),
            Err(ClarkError::NotContraction { .. })
        ));
    }

    #[test]
    fn diagonal_defects() {
        let g = CMatrix::from_diagonal(&crate::CVector::from_vec(vec![c(0.5, 0.0), c(0.0, 0.0)]));
        let gd = GammaDefects::new(&ContractionParam::new(g).unwrap()).unwrap();
        assert!((gd.d[(0, 0)] - c(3f64.sqrt() / 2.0, 0.0)).norm() < 1e-15);
        assert!((gd.d[(1, 1)] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn reducing_subspace_is_found() {
        let s = 2f64.sqrt();
        let m = SpectralMeasure::new(
            vec![Atom::at_turn(0.0, 0.5, scalar(s)), Atom::at_turn(0.5, 0.5, scalar(0.0))],
            1,
        )
        .unwrap();
        let op = build_t(&m.embed(), &ContractionParam::zero(1)).unwrap();
        let cert = cnu_certificate(&op).unwrap();
        assert!(!cert.cnu);
        assert_eq!(cert.unitary_part_dim(), 1);
        assert!(cert.witness[(0, 0)].norm() < 1e-12);
        assert!((cert.witness[(1, 0)].norm() - 1.0).abs() < 1e-12);
    }
}
