//! The adjoint Clark operator `Φ*: L²(μ; E) → K_θ` and its inverse.
//!
//! Functions on the atoms are handled in embedded coordinates
//! `x_j = √μ_j f_j` (see [`crate::measure::FiberFunction`]), so that `Φ*`
//! becomes an `n × n` matrix once an orthonormal basis of `K_θ` is fixed.

use crate::cauchy::{radial_limit, MatrixCauchy, MatrixMeasure, OffsetGrid, RadialSchedule, Side, LIMIT_TOL};
use crate::charfn::{CharFnEvaluator, ThetaMethod};
use crate::error::{ClarkError, Result};
use crate::linalg::{eye, null_space, op_norm, pinv, solve, CMatrix, CVector, C64, RANK_TOL};
use crate::measure::{EmbeddedOperators, FiberFunction, SpectralMeasure};
use crate::model::ModelSpace;
use crate::perturbation::build_t;
use crate::taylor::{series_from_samples, TaylorRep};

/// Highest `|power|` accepted by [`phi_star_universal`].
pub const MAX_TRIG_DEGREE: usize = 16;

/// Values of the functions entering the representation formulas at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiValues {
    pub theta: CMatrix,
    pub delta: CMatrix,
    pub f: CMatrix,
    /// `(I + θΓ*)D_{Γ*}⁻¹`
    pub c_star_top: CMatrix,
    /// `ΔΓ*D_{Γ*}⁻¹`
    pub c_star_bottom: CMatrix,
    /// `D_{Γ*}⁻¹(I − Γ) + θD_Γ⁻¹(Γ* − I)`
    pub c1_top: CMatrix,
    /// `ΔD_Γ⁻¹(Γ* − I)`
    pub c1_bottom: CMatrix,
    /// `‖(I + θΓ*)D_{Γ*}⁻¹ − C₁^{top} F‖`
    pub psi1_residual: f64,
}

impl PsiValues {
    /// `C₁` as a `2d × d` block column.
    pub fn c1(&self) -> CMatrix {
        crate::linalg::vstack(&self.c1_top, &self.c1_bottom)
    }

    pub fn c_star(&self) -> CMatrix {
        crate::linalg::vstack(&self.c_star_top, &self.c_star_bottom)
    }
}

pub fn c1_cstar_eval(ev: &CharFnEvaluator, z: C64) -> Result<PsiValues> {
    let g = ev.defects();
    let d = ev.d();
    let i = eye(d);
    let theta = ev.theta(z, ThetaMethod::Cauchy)?;
    let delta = ev.delta(z)?;
    let f = ev.f(z)?;
    let gs = g.gamma.adjoint();
    let c_star_top = (&i + &theta * &gs) * &g.d_star_inv;
    let c_star_bottom = &delta * &gs * &g.d_star_inv;
    let c1_top = &g.d_star_inv * (&i - &g.gamma) + &theta * &g.d_inv * (&gs - &i);
    let c1_bottom = &delta * &g.d_inv * (&gs - &i);
    let psi1_residual = op_norm(&(&c_star_top - &c1_top * &f));
    Ok(PsiValues { theta, delta, f, c_star_top, c_star_bottom, c1_top, c1_bottom, psi1_residual })
}

/// `B*·diag(1/(1 − ξ̄_i z))`, so that `cauchy_matrix(z)·x = 𝒞[B*fμ](z)`.
fn cauchy_matrix(emb: &EmbeddedOperators, z: C64) -> CMatrix {
    let mut out = emb.b_emb.adjoint();
    for i in 0..emb.n {
        let k = C64::from(1.0) / (C64::from(1.0) - emb.u[(i, i)].conj() * z);
        for r in 0..emb.d {
            out[(r, i)] *= k;
        }
    }
    out
}

/// `(I + θΓ*)D_{Γ*}⁻¹F(z)⁻¹·cauchy_matrix(z)`: column `i` is `Φ*e_i` at `z`.
pub fn phi_star_matrix_at(ev: &CharFnEvaluator, emb: &EmbeddedOperators, z: C64) -> Result<CMatrix> {
    let g = ev.defects();
    let theta = ev.theta(z, ThetaMethod::Cauchy)?;
    let left = (eye(ev.d()) + theta * g.gamma.adjoint()) * &g.d_star_inv;
    Ok(left * solve(&ev.f(z)?, &cauchy_matrix(emb, z))?)
}

/// Power series of `Φ*e_i` for every standard basis vector `e_i` of the
/// embedded space (a `d × n` series), by sampling on the boundary grid of
/// the model space.
pub fn phi_star_nf(ev: &CharFnEvaluator, model: &ModelSpace) -> Result<TaylorRep> {
    let measure = ev.measure().ok_or_else(|| ClarkError::NotInner("density input".into()))?;
    if measure.is_ac_approximation() {
        return Err(ClarkError::NotInner("measure is a quadrature proxy of an a.c. density".into()));
    }
    let emb = measure.embed();
    let grid = model.theta.grid;
    let samples: Vec<CMatrix> =
        grid.points().into_iter().map(|z| phi_star_matrix_at(ev, &emb, z)).collect::<Result<_>>()?;
    Ok(series_from_samples(&grid, &samples, model.theta.degree()).rep)
}

/// `Φ*` in model coordinates together with its verification residuals.
#[derive(Debug, Clone)]
pub struct ClarkPair {
    /// Column `i` is the series of `Φ*e_i`.
    pub images: TaylorRep,
    /// `n × n` matrix of `Φ*` from embedded coordinates to the model basis.
    pub matrix: CMatrix,
    pub t: CMatrix,
    pub unitarity: f64,
    pub intertwining: f64,
    /// `‖Φ*(U*B) − C‖`
    pub agreement_c: f64,
    /// `‖Φ*B − C_*‖`
    pub agreement_c_star: f64,
    /// Part of the images outside the span of the basis.
    pub membership: f64,
}

impl ClarkPair {
    /// Model coordinates of `Φ*x`.
    pub fn adjoint_apply(&self, x: &CVector) -> CVector {
        &self.matrix * x
    }

    /// Embedded coordinates of `Φy`, `Φ = (Φ*)*`.
    pub fn direct_apply(&self, y: &CVector) -> CVector {
        self.matrix.adjoint() * y
    }
}

pub fn assemble_clark(ev: &CharFnEvaluator, model: &ModelSpace) -> Result<ClarkPair> {
    let measure = ev.measure().ok_or_else(|| ClarkError::NotInner("density input".into()))?;
    let emb = measure.embed();
    let op = build_t(&emb, ev.param())?;
    let images = phi_star_nf(ev, model)?;
    let matrix = model.coords(&images);
    let n = emb.n;
    let unitarity = (matrix.adjoint() * &matrix - eye(n)).norm();
    let intertwining = (&matrix * &op.t - &model.m_theta * &matrix).norm();
    let agreement_c = (&matrix * (emb.u.adjoint() * &emb.b_emb) - &model.c_coords).norm();
    let agreement_c_star = (&matrix * &emb.b_emb - &model.c_star_coords).norm();
    let membership = model.membership_residual(&images);
    Ok(ClarkPair { images, matrix, t: op.t, unitarity, intertwining, agreement_c, agreement_c_star, membership })
}

/// Atom values recovered from a model-space element by radial limits.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectRecovery {
    /// Embedded coordinates.
    pub values: CVector,
    pub est_errors: Vec<f64>,
}

/// `f_j = lim R_j* F(z) D_{Γ*}(I + θ(z)Γ*)⁻¹ h(z) / 𝒞[μ](z)` as `z → ξ_j`
/// radially, for a column series `h ∈ K_θ`.
pub fn phi_direct(ev: &CharFnEvaluator, h: &TaylorRep) -> Result<DirectRecovery> {
    let measure = ev.measure().ok_or_else(|| ClarkError::NotInner("density input".into()))?;
    let mm = MatrixMeasure::new(measure);
    let emb = measure.embed();
    let g = ev.defects();
    let d = ev.d();
    let mut values = CVector::zeros(emb.n);
    let mut est_errors = Vec::with_capacity(measure.atoms().len());
    for (j, atom) in measure.atoms().iter().enumerate() {
        let r_star = emb.right_inverses[j].adjoint();
        let lim = radial_limit(atom.point, Side::Inside, RadialSchedule::default(), LIMIT_TOL, |z| {
            let theta = ev.theta(z, ThetaMethod::Cauchy)?;
            let inner = eye(d) + theta * g.gamma.adjoint();
            let v = solve(&inner, &h.eval(z))?;
            Ok(&r_star * ev.f(z)? * &g.d_star * v / mm.scalar_cauchy(z)?)
        })?;
        if !lim.converged {
            return Err(ClarkError::NoConvergence { increment: lim.est_error });
        }
        let off = emb.offsets[j];
        for r in 0..atom.fiber_dim() {
            values[off + r] = lim.value[(r, 0)] * emb.sqrt_weights[j];
        }
        est_errors.push(lim.est_error);
    }
    Ok(DirectRecovery { values, est_errors })
}

/// Scalar trigonometric polynomial `h(ξ) = Σ_i c_i ξ^{min_power + i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly {
    pub min_power: i32,
    pub coeffs: Vec<C64>,
}

impl TrigPoly {
    pub fn new(min_power: i32, coeffs: Vec<C64>) -> Self {
        TrigPoly { min_power, coeffs }
    }

    pub fn monomial(p: i32) -> Self {
        TrigPoly::new(p, vec![C64::from(1.0)])
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, C64)> + '_ {
        self.coeffs.iter().enumerate().map(move |(i, c)| (self.min_power + i as i32, *c))
    }

    pub fn eval(&self, xi: C64) -> C64 {
        self.terms().map(|(p, c)| c * xi.powi(p)).sum()
    }

    pub fn max_abs_power(&self) -> usize {
        self.terms().filter(|(_, c)| *c != C64::from(0.0)).map(|(p, _)| p.unsigned_abs() as usize).max().unwrap_or(0)
    }

    /// Embedded coordinates of `h·Ba`.
    pub fn times_range(&self, measure: &SpectralMeasure, a: &CVector) -> CVector {
        let f = FiberFunction::from_range(measure, a);
        let values = measure.atoms().iter().zip(f.values).map(|(at, v)| v * self.eval(at.point)).collect();
        FiberFunction { values }.to_embedded(measure)
    }
}

/// Output of [`phi_star_universal`].
#[derive(Debug, Clone)]
pub struct UniversalImage {
    pub rep: TaylorRep,
    /// Size of the negative-power coefficients, which must cancel.
    pub negative_residual: f64,
}

/// `Φ*(h·Ba) = hC_*a + C₁∫(h(ξ) − h(z))/(1 − ξ̄z) M a dμ`, with the
/// difference quotient expanded as a finite geometric sum.
pub fn phi_star_universal(model: &ModelSpace, measure: &SpectralMeasure, h: &TrigPoly, a: &CVector) -> Result<UniversalImage> {
    if h.max_abs_power() > MAX_TRIG_DEGREE {
        return Err(ClarkError::UnsupportedTestFunction(format!(
            "trigonometric degree {} exceeds {MAX_TRIG_DEGREE}",
            h.max_abs_power()
        )));
    }
    let d = model.d();
    let k = model.theta.degree();
    let off = MAX_TRIG_DEGREE;
    let a_mat = CMatrix::from_column_slice(d, 1, a.as_slice());
    let cs = model.c_star.mul_right(&a_mat);
    let c1 = model.c_star.sub(&model.c.shift(1));
    // Moments Σ μ_j ξ_j^m M_j a for m in -16..=16.
    let moment = |m: i32| {
        measure.atoms().iter().fold(CMatrix::zeros(d, 1), |acc, at| {
            acc + at.density() * &a_mat * (at.point.powi(m) * at.weight)
        })
    };
    let mut buf = vec![CMatrix::zeros(d, 1); off + k + 1];
    let mut add = |series: &TaylorRep, shift: i32, scale: C64| {
        for (i, c) in series.coeffs().iter().enumerate() {
            let idx = off as i64 + i as i64 + shift as i64;
            if idx >= 0 && (idx as usize) < buf.len() {
                buf[idx as usize] += c * scale;
            }
        }
    };
    for (n, hn) in h.terms() {
        if hn == C64::from(0.0) {
            continue;
        }
        add(&cs, n, hn);
        if n >= 1 {
            for j in 0..n {
                add(&c1.mul_right(&moment(n - j)), j, hn);
            }
        } else if n < 0 {
            let p = -n;
            for j in 0..p {
                add(&c1.mul_right(&moment(-j)), j - p, -hn);
            }
        }
    }
    let negative_residual = buf[..off].iter().map(|c| c.norm_squared()).sum::<f64>().sqrt();
    Ok(UniversalImage { rep: TaylorRep::new(buf.split_off(off)), negative_residual })
}

/// `Ψ̃₂` by both algebraic forms.
#[derive(Debug, Clone, PartialEq)]
pub struct Psi2Values {
    /// `ΔD_Γ⁻¹(Γ* + (I − Γ*)F)`
    pub tilde: CMatrix,
    /// `ΔD_Γ⁻¹(I − Γ*θ₀)F`
    pub tilde_alt: CMatrix,
    pub form_spread: f64,
}

pub fn psi2_eval(ev: &CharFnEvaluator, z: C64) -> Result<Psi2Values> {
    let g = ev.defects();
    let i = eye(ev.d());
    let gs = g.gamma.adjoint();
    let f = ev.f(z)?;
    let th0 = ev.theta_zero(z)?;
    let left = ev.delta(z)? * &g.d_inv;
    let tilde = &left * (&gs + (&i - &gs) * &f);
    let tilde_alt = &left * (&i - &gs * th0) * f;
    let form_spread = op_norm(&(&tilde - &tilde_alt));
    Ok(Psi2Values { tilde, tilde_alt, form_spread })
}

/// Comparison of `Ψ̃₂R` for two right inverses of `B(ξ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RightInverseComparison {
    pub kernel_dim: usize,
    /// `‖Ψ̃₂R₁ − Ψ̃₂R₂‖`
    pub residual: f64,
    /// `‖B R₂ − I‖`, confirming `R₂` is a right inverse.
    pub right_inverse_residual: f64,
}

/// `R₁ = B⁺`, `R₂ = R₁ + N X` with `N` spanning `ker B(ξ)`.
pub fn compare_right_inverses(psi2_tilde: &CMatrix, b_xi: &CMatrix, x: &CMatrix) -> RightInverseComparison {
    let r1 = pinv(b_xi, RANK_TOL);
    let kernel = null_space(b_xi, RANK_TOL);
    let kernel_dim = kernel.ncols();
    let r2 = if kernel_dim == 0 { r1.clone() } else { &r1 + &kernel * x.rows(0, kernel_dim) };
    RightInverseComparison {
        kernel_dim,
        residual: op_norm(&(psi2_tilde * &r1 - psi2_tilde * &r2)),
        right_inverse_residual: op_norm(&(b_xi * &r2 - eye(b_xi.nrows()))),
    }
}

/// `‖Ψ̃₂*Ψ̃₂ − B(ξ)*B(ξ)‖`.
pub fn psi2_gram_residual(psi2_tilde: &CMatrix, b_xi: &CMatrix) -> f64 {
    op_norm(&(psi2_tilde.adjoint() * psi2_tilde - b_xi.adjoint() * b_xi))
}

/// Interior form of the a.c.-part identity: with
/// `h₁ = (I + θΓ*)D_{Γ*}⁻¹F⁻¹t` and `h₂ = Ψ̃₂s + ΔD_Γ⁻¹(Γ* − I)t`,
/// `F*(I − θ₀*Γ)D_Γ⁻¹Δ h₂ − F*(I − θ₀*Γ)D_Γ⁻¹Δ²D_Γ⁻¹(Γ* − I)FD_{Γ*}(I + θΓ*)⁻¹h₁ = 𝒫s`.
/// Returns the residual of this form and of the form where the second term
/// is written with `Δ₀²` as `F*Δ₀²(I − Γ*θ₀)⁻¹(Γ* − I)FD_{Γ*}(I + θΓ*)⁻¹h₁`.
pub fn ac_part_identity_residuals(ev: &CharFnEvaluator, z: C64, t: &CVector, s: &CVector) -> Result<(f64, f64)> {
    let g = ev.defects();
    let i = eye(ev.d());
    let gs = g.gamma.adjoint();
    let theta = ev.theta(z, ThetaMethod::Cauchy)?;
    let th0 = ev.theta_zero(z)?;
    let delta = ev.delta(z)?;
    let f = ev.f(z)?;
    let p = ev.spectral().poisson(z)?.into_matrix();
    let psi = psi2_eval(ev, z)?.tilde;
    let inner = &i + &theta * &gs;
    let h1 = &inner * &g.d_star_inv * solve(&f, &CMatrix::from_column_slice(t.len(), 1, t.as_slice()))?;
    let s_m = CMatrix::from_column_slice(s.len(), 1, s.as_slice());
    let t_m = CMatrix::from_column_slice(t.len(), 1, t.as_slice());
    let h2 = &psi * &s_m + &delta * &g.d_inv * (&gs - &i) * &t_m;
    let back = &f * &g.d_star * solve(&inner, &h1)?;
    let a = f.adjoint() * (&i - th0.adjoint() * &g.gamma) * &g.d_inv;
    let rhs = p * &s_m;
    let first = &a * &delta * &h2;
    let second = &a * &delta * &delta * &g.d_inv * (&gs - &i) * &back;
    let r1 = (&first - second - &rhs).norm();
    let d02 = &i - th0.adjoint() * &th0;
    let second_alt = f.adjoint() * d02 * solve(&(&i - &gs * &th0), &((&gs - &i) * &back))?;
    let r2 = (first - second_alt - rhs).norm();
    Ok((r1, r2))
}

/// The two-term splitting `Φ*f = C₁T_±f + Ψ_±f` on boundary points.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiPmReport {
    /// `max ‖C_* − C₁F_±‖`, the multiplication part (zero in the inner case).
    pub psi_norm: f64,
    /// `max ‖C₁T_±f + Ψ_±·(B*-coefficients) − Φ*f‖` against the series of `Φ*f`.
    pub total_residual: f64,
    pub max_est_error: f64,
}

/// Boundary values from side `side` at off-atom points `xi`, compared with
/// the power series `phi_f` of `Φ*f` for embedded `x`.
pub fn psi_pm_split(ev: &CharFnEvaluator, x: &CVector, phi_f: &TaylorRep, side: Side, points: &[C64]) -> Result<PsiPmReport> {
    let measure = ev.measure().ok_or_else(|| ClarkError::NotInner("density input".into()))?;
    let mm = MatrixMeasure::new(measure);
    let f = FiberFunction::from_embedded(measure, x);
    let mut report = PsiPmReport { psi_norm: 0.0, total_residual: 0.0, max_est_error: 0.0 };
    for &xi in points {
        let vals = c1_cstar_eval(ev, xi)?;
        let tf = radial_limit(xi, side, RadialSchedule::default(), LIMIT_TOL, |z| {
            let v = mm.cauchy_of(&f, z)?;
            Ok(CMatrix::from_column_slice(v.len(), 1, v.as_slice()))
        })?;
        let fb = radial_limit(xi, side, RadialSchedule::default(), LIMIT_TOL, |z| ev.f(z))?;
        if !tf.converged || !fb.converged {
            return Err(ClarkError::NoConvergence { increment: tf.est_error.max(fb.est_error) });
        }
        let psi = vals.c_star() - vals.c1() * &fb.value;
        let total = vals.c1() * &tf.value;
        let expected = crate::linalg::vstack(&phi_f.eval(xi), &CMatrix::zeros(ev.d(), 1));
        report.psi_norm = report.psi_norm.max(op_norm(&psi));
        report.total_residual = report.total_residual.max((total - expected).norm());
        report.max_est_error = report.max_est_error.max(tf.est_error).max(fb.est_error);
    }
    Ok(report)
}

/// Largest observed `‖C₁R f‖_{L²(grid)} / ‖f‖` for the partial sums and the
/// off-circle restrictions of the Cauchy transform.
#[derive(Debug, Clone, PartialEq)]
pub struct SioBounds {
    pub partial_sum_ratio: f64,
    pub radius_ratio: f64,
}

/// Grid-certified bounds for `C₁P_n(B*fμ)`, `|n| ≤ n_max`, and
/// `C₁T_r(B*fμ)`, `r ∈ radii`, over the given embedded vectors.
pub fn sio_bounds(ev: &CharFnEvaluator, n_grid: usize, n_max: i64, radii: &[f64], samples: &[CVector]) -> Result<SioBounds> {
    let measure = ev.measure().ok_or_else(|| ClarkError::NotInner("density input".into()))?;
    let emb = measure.embed();
    let d = ev.d();
    let grid = OffsetGrid::for_measure(n_grid, measure);
    let pts = grid.points();
    // Weight G(ξ) = C₁(ξ)*C₁(ξ), stored row-major per point.
    let weights: Vec<Vec<C64>> = pts
        .iter()
        .map(|&xi| {
            let c1 = c1_cstar_eval(ev, xi)?.c1();
            let g = c1.adjoint() * c1;
            Ok((0..d * d).map(|k| g[(k / d, k % d)]).collect())
        })
        .collect::<Result<_>>()?;
    let quad = |v: &[C64], w: &[C64]| -> f64 {
        let mut s = C64::from(0.0);
        for r in 0..d {
            for c in 0..d {
                s += v[r].conj() * w[r * d + c] * v[c];
            }
        }
        s.re.max(0.0)
    };
    let xi_conj: Vec<C64> = (0..emb.n).map(|i| emb.u[(i, i)].conj()).collect();
    let mut out = SioBounds { partial_sum_ratio: 0.0, radius_ratio: 0.0 };
    for x in samples {
        let fnorm = x.norm();
        if fnorm == 0.0 {
            continue;
        }
        // ν̂(k) = Σ_i ξ̄_iᵏ (B* block)_i x_i
        let moment = |k: i64| -> Vec<C64> {
            let mut m = vec![C64::from(0.0); d];
            for i in 0..emb.n {
                let w = xi_conj[i].powi(k as i32) * x[i];
                for (r, mr) in m.iter_mut().enumerate() {
                    *mr += emb.b_emb[(i, r)].conj() * w;
                }
            }
            m
        };
        for sign in [1i64, -1] {
            let mut acc: Vec<Vec<C64>> = vec![vec![C64::from(0.0); d]; pts.len()];
            let range: Vec<i64> = if sign > 0 { (0..=n_max).collect() } else { (1..=n_max).map(|k| -k).collect() };
            for k in range {
                let m = moment(k);
                let mut total = 0.0;
                for (p, &xi) in pts.iter().enumerate() {
                    let w = xi.powi(k as i32);
                    for r in 0..d {
                        acc[p][r] += m[r] * w;
                    }
                    total += quad(&acc[p], &weights[p]);
                }
                let ratio = (total / pts.len() as f64).sqrt() / fnorm;
                out.partial_sum_ratio = out.partial_sum_ratio.max(ratio);
            }
        }
        for &r in radii {
            if !(r > 0.0) || (r - 1.0).abs() < f64::EPSILON {
                return Err(ClarkError::BadRadius);
            }
            let mut total = 0.0;
            let mut v = vec![C64::from(0.0); d];
            for (p, &xi) in pts.iter().enumerate() {
                v.iter_mut().for_each(|c| *c = C64::from(0.0));
                for i in 0..emb.n {
                    let k = x[i] / (C64::from(1.0) - xi_conj[i] * xi * r);
                    for (rr, vr) in v.iter_mut().enumerate() {
                        *vr += emb.b_emb[(i, rr)].conj() * k;
                    }
                }
                total += quad(&v, &weights[p]);
            }
            let ratio = (total / pts.len() as f64).sqrt() / fnorm;
            out.radius_ratio = out.radius_ratio.max(ratio);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::theta_coefficients_auto;
    use crate::perturbation::{ContractionParam, GammaDefects};
    use crate::scenario::s2;

    fn s2_setup() -> (CharFnEvaluator, ModelSpace) {
        let s = s2();
        let ev = CharFnEvaluator::new(&s.measure, &s.gamma).unwrap();
        let th = theta_coefficients_auto(&ev).unwrap();
        let ms = ModelSpace::build(th, &GammaDefects::new(&ContractionParam::zero(1)).unwrap(), 2).unwrap();
        (ev, ms)
    }

    #[test]
    fn s2_hand_values() {
        let (ev, ms) = s2_setup();
        let pair = assemble_clark(&ev, &ms).unwrap();
        // f = (1, 0) has embedded coordinates (√½, 0).
        let x = CVector::from_vec(vec![C64::from(0.5f64.sqrt()), C64::from(0.0)]);
        let img = pair.images.mul_right(&CMatrix::from_column_slice(2, 1, x.as_slice()));
        assert!((img.coeff(0)[(0, 0)] - C64::from(0.5)).norm() < 1e-12);
        assert!((img.coeff(1)[(0, 0)] - C64::from(0.5)).norm() < 1e-12);
        assert!(img.coeffs()[2..].iter().all(|c| c.norm() < 1e-12));
        assert!(pair.unitarity < 1e-12 && pair.intertwining < 1e-12);

        let back = phi_direct(&ev, &img).unwrap();
        assert!((back.values - x).norm() < 1e-7);
    }

    #[test]
    fn universal_shift_of_constant() {
        let (ev, ms) = s2_setup();
        let m = ev.measure().unwrap().clone();
        let a = CVector::from_element(1, C64::from(1.0));
        let img = phi_star_universal(&ms, &m, &TrigPoly::monomial(1), &a).unwrap();
        assert!(img.negative_residual < 1e-12);
        assert!((img.rep.coeff(1)[(0, 0)] - C64::from(1.0)).norm() < 1e-12);
        assert!(img.rep.coeff(0).norm() < 1e-12 && img.rep.coeff(2).norm() < 1e-12);
        assert!(matches!(
            phi_star_universal(&ms, &m, &TrigPoly::monomial(17), &a),
            Err(ClarkError::UnsupportedTestFunction(_))
        ));
    }
}
