//! Truncated minimal unitary dilation of `T` on
//! `ℂ^{Nd} ⊕ ℂⁿ ⊕ ℂ^{Nd}` (incoming cells, `H`, outgoing cells).
//!
//! Incoming cell `k + 1` moves to cell `k`; cell 0 feeds `H` through
//! `D_{T*}B` and outgoing cell 0 through `−B*UT*B`. `H` maps by `T` plus
//! `B*UD_T` into outgoing cell 0, and outgoing cell `k` moves to `k + 1`.
//! The last outgoing cell is dropped, so `𝒰_N` is an isometry only on
//! vectors with no mass there.

use crate::error::{ClarkError, Result};
use crate::linalg::{eye, herm_sqrt, mat_pow, op_norm, CMatrix, HermMatrix, PSD_TOL};
use crate::perturbation::PerturbedOperator;

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedDilation {
    pub cells: usize,
    pub d: usize,
    pub n: usize,
    pub u: CMatrix,
    t: CMatrix,
}

impl TruncatedDilation {
    pub fn dim(&self) -> usize {
        2 * self.cells * self.d + self.n
    }

    /// First index of `H`.
    pub fn h_offset(&self) -> usize {
        self.cells * self.d
    }

    pub fn incoming(&self, k: usize) -> usize {
        k * self.d
    }

    pub fn outgoing(&self, k: usize) -> usize {
        self.h_offset() + self.n + k * self.d
    }

    /// `‖𝒰_N*𝒰_N − I‖` restricted to the coordinates before the last
    /// outgoing cell.
    pub fn isometry_residual(&self) -> f64 {
        let m = self.outgoing(self.cells - 1);
        let g = self.u.columns(0, m).adjoint() * self.u.columns(0, m);
        op_norm(&(g - eye(m)))
    }

    /// `‖𝒰_N𝒰_N* − I‖` with the last incoming cell removed, since
    /// nothing maps into it.
    pub fn coisometry_residual(&self) -> f64 {
        let m = self.dim() - self.d;
        let rows = self.u.clone().remove_rows(self.incoming(self.cells - 1), self.d);
        op_norm(&(&rows * rows.adjoint() - eye(m)))
    }
}

pub fn build_dilation(op: &PerturbedOperator, cells: usize) -> Result<TruncatedDilation> {
    if cells == 0 {
        return Err(ClarkError::DimensionMismatch("dilation needs at least one cell".into()));
    }
    let emb = &op.parent;
    let (n, d) = (emb.n, emb.d);
    let b = &emb.b_emb;
    let v = b.adjoint() * &emb.u;
    let mut dil = TruncatedDilation { cells, d, n, u: CMatrix::zeros(2 * cells * d + n, 2 * cells * d + n), t: op.t.clone() };
    let h = dil.h_offset();
    let (g0, a0) = (dil.outgoing(0), dil.incoming(0));
    let u = &mut dil.u;
    for k in 1..cells {
        u.view_mut((a0 + (k - 1) * d, a0 + k * d), (d, d)).copy_from(&eye(d));
    }
    u.view_mut((h, a0), (n, d)).copy_from(&(&op.defects.d_t_star * b));
    u.view_mut((g0, a0), (d, d)).copy_from(&(-(&v * op.t.adjoint() * b)));
    u.view_mut((h, h), (n, n)).copy_from(&op.t);
    u.view_mut((g0, h), (d, n)).copy_from(&(&v * &op.defects.d_t));
    for k in 0..cells - 1 {
        u.view_mut((g0 + (k + 1) * d, g0 + k * d), (d, d)).copy_from(&eye(d));
    }
    Ok(dil)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DilationResiduals {
    /// `max_n ‖P_H𝒰ⁿ|_H − Tⁿ‖`
    pub forward: f64,
    /// `max_n ‖P_H(𝒰*)ⁿ|_H − (T*)ⁿ‖`
    pub backward: f64,
}

/// Compression check for `0 ≤ n ≤ n_max`; requires `n_max ≤ N − 1`.
pub fn dilation_property_check(dil: &TruncatedDilation, n_max: usize) -> Result<DilationResiduals> {
    if n_max + 1 > dil.cells {
        return Err(ClarkError::HorizonTooLarge { n_max, bound: dil.cells - 1 });
    }
    let (h, n) = (dil.h_offset(), dil.n);
    let ua = dil.u.adjoint();
    let mut fwd = dil.u.columns(h, n).into_owned();
    let mut bwd = ua.columns(h, n).into_owned();
    // n = 0 is the identity on H by construction.
    let mut out = DilationResiduals { forward: 0.0, backward: 0.0 };
    let ts = dil.t.adjoint();
    for p in 1..=n_max {
        if p > 1 {
            fwd = &dil.u * fwd;
            bwd = &ua * bwd;
        }
        out.forward = out.forward.max(op_norm(&(fwd.rows(h, n) - mat_pow(&dil.t, p))));
        out.backward = out.backward.max(op_norm(&(bwd.rows(h, n) - mat_pow(&ts, p))));
    }
    Ok(out)
}

/// `‖(2,1) block − (I − TT*)^{1/2}B‖`, the incoming coupling against the
/// spectrally computed defect.
pub fn defect_block_residual(dil: &TruncatedDilation, op: &PerturbedOperator) -> Result<f64> {
    let n = dil.n;
    let ds = herm_sqrt(&HermMatrix::symmetrized(eye(n) - &op.t * op.t.adjoint()), PSD_TOL)?;
    let block = dil.u.view((dil.h_offset(), dil.incoming(0)), (n, dil.d));
    Ok(op_norm(&(block - ds * &op.parent.b_emb)))
}
