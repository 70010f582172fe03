//! Model space `K_θ = H²(ℂᵈ) ⊖ θH²(ℂᵈ)` for inner `θ`, in truncated
//! power-series coordinates, with the compressed shift `M_θ` and the
//! parametrizing operators `C`, `C_*`.

use crate::cauchy::OffsetGrid;
use crate::charfn::{CharFnEvaluator, ThetaMethod};
use crate::error::{ClarkError, Result};
use crate::linalg::{eye, op_norm, range_basis, CMatrix, HermMatrix, C64};
use crate::perturbation::GammaDefects;
use crate::taylor::{coeffs_from_roots, sample_on_roots, series_from_samples, TaylorRep};

/// Allowed `max ‖θ(ξ)*θ(ξ) − I‖` on the boundary grid.
pub const INNER_TOL: f64 = 1e-8;
/// Hard limit on the certified squared tail.
pub const TAIL_BUDGET: f64 = 1e-10;
/// Degree is doubled until the squared tail falls below this.
pub const TAIL_TARGET: f64 = 1e-26;
pub const MAX_DEGREE: usize = 4096;
pub const DROP_TOL: f64 = 1e-9;

/// Taylor data of an inner characteristic function.
#[derive(Debug, Clone)]
pub struct InnerFunctionRep {
    pub series: TaylorRep,
    pub theta_at_zero: CMatrix,
    pub grid: OffsetGrid,
    pub boundary_unitarity: f64,
    pub negative_mass: f64,
    /// Values of the truncated series at `2^⌈log₂(2K+2)⌉` roots of unity.
    theta_samples: Vec<CMatrix>,
}

impl InnerFunctionRep {
    pub fn degree(&self) -> usize {
        self.series.degree()
    }

    pub fn d(&self) -> usize {
        self.series.shape().0
    }

    pub fn coeff(&self, k: usize) -> CMatrix {
        self.series.coeff(k)
    }

    pub fn eval(&self, z: C64) -> CMatrix {
        self.series.eval(z)
    }

    /// `h − θ P₊(θ* h)` for a column series `h`.
    pub fn project(&self, h: &TaylorRep) -> TaylorRep {
        let k = self.degree();
        let h = h.with_degree(k);
        let g = self.anti_part(&h);
        let n = self.theta_samples.len();
        let prod: Vec<CMatrix> =
            self.theta_samples.iter().zip(sample_on_roots(&g, n)).map(|(t, g)| t * g).collect();
        h.sub(&coeffs_from_roots(&prod, k))
    }

    /// `P₊(θ* h)`, coefficients `0..=K`. The sampling grid has more than
    /// `2K + 1` points, so both products are exact linear convolutions.
    fn anti_part(&self, h: &TaylorRep) -> TaylorRep {
        let n = self.theta_samples.len();
        let prod: Vec<CMatrix> = self
            .theta_samples
            .iter()
            .zip(sample_on_roots(h, n))
            .map(|(t, h)| t.adjoint() * h)
            .collect();
        coeffs_from_roots(&prod, self.degree())
    }

    /// `max_{k,l} |⟨h, θ zᵏ e_l⟩|` over `k ≤ K/2`.
    pub fn orthogonality_residual(&self, h: &TaylorRep) -> f64 {
        let g = self.anti_part(&h.with_degree(self.degree()));
        g.coeffs()
            .iter().take(self.degree() / 2 + 1).map(|c| c.iter().map(|x| x.norm()).fold(0.0, f64::max)).fold(0.0, f64::max)
    }
}

/// Taylor coefficients of `θ` from boundary samples on an `n_fft`-point grid.
pub fn theta_coefficients(ev: &CharFnEvaluator, n_fft: usize, k: usize) -> Result<InnerFunctionRep> {
    let measure = ev
        .measure()
        .ok_or_else(|| ClarkError::NotInner("spectral data has an absolutely continuous density".into()))?;
    if measure.is_ac_approximation() {
        return Err(ClarkError::NotInner("measure is a quadrature proxy of an a.c. density".into()));
    }
    if n_fft < 4 * k {
        return Err(ClarkError::DimensionMismatch(format!("grid size {n_fft} below 4·{k}")));
    }
    let grid = OffsetGrid::for_measure(n_fft, measure);
    let d = ev.d();
    let samples: Vec<CMatrix> =
        grid.points().into_iter().map(|z| ev.theta(z, ThetaMethod::Cauchy)).collect::<Result<_>>()?;
    let unitarity = samples
        .iter()
        .map(|t| (t.adjoint() * t - eye(d)).norm())
        .fold(0.0, f64::max);
    if unitarity > INNER_TOL {
        return Err(ClarkError::NotInner(format!("boundary unitarity residual {unitarity:.3e}")));
    }
    let bs = series_from_samples(&grid, &samples, k);
    let theta_samples = sample_on_roots(&bs.rep, (2 * k + 2).next_power_of_two());
    Ok(InnerFunctionRep {
        theta_at_zero: bs.rep.coeff(0),
        series: bs.rep,
        grid,
        boundary_unitarity: unitarity,
        negative_mass: bs.negative_mass,
        theta_samples,
    })
}

/// [`theta_coefficients`] with degree doubling from `8n + 32` until the tail
/// is negligible.
pub fn theta_coefficients_auto(ev: &CharFnEvaluator) -> Result<InnerFunctionRep> {
    let n = ev.measure().map_or(1, |m| m.n());
    let mut k = 8 * n + 32;
    loop {
        let n_fft = (4 * k).max(2048).next_power_of_two();
        let rep = theta_coefficients(ev, n_fft, k)?;
        let tail = rep.series.tail_bound;
        if tail <= TAIL_TARGET {
            return Ok(rep);
        }
        if 2 * k > MAX_DEGREE {
            if tail <= TAIL_BUDGET {
                return Ok(rep);
            }
            return Err(ClarkError::TruncationOverflow { tail, budget: TAIL_BUDGET });
        }
        k *= 2;
    }
}

/// Orthonormal basis of `K_θ` with `M_θ`, `C`, `C_*`.
#[derive(Debug, Clone)]
pub struct ModelSpace {
    pub theta: InnerFunctionRep,
    pub gamma: GammaDefects,
    pub basis: Vec<TaylorRep>,
    pub gram_residual: f64,
    /// Whether reproducing kernels were needed to complete the monomial span.
    pub augmented: bool,
    pub m_theta: CMatrix,
    /// `C e = z⁻¹(θ − θ(0))D_Γ⁻¹ e`.
    pub c: TaylorRep,
    /// `C_* e = (I + θΓ*)D_{Γ*}⁻¹ e`.
    pub c_star: TaylorRep,
    pub c_coords: CMatrix,
    pub c_star_coords: CMatrix,
}

impl ModelSpace {
    /// Builds the basis; `n` is the expected dimension.
    pub fn build(theta: InnerFunctionRep, gamma: &GammaDefects, n: usize) -> Result<Self> {
        let d = theta.d();
        let k = theta.degree();
        let unit = |l: usize| {
            let mut e = CMatrix::zeros(d, 1);
            e[(l, 0)] = C64::from(1.0);
            e
        };
        let mut basis: Vec<TaylorRep> = Vec::new();
        for p in 0..=n.min(k) {
            for l in 0..d {
                let cand = theta.project(&TaylorRep::monomial(p, &unit(l), k));
                push_orthogonal(&theta, &mut basis, cand);
            }
        }
        let mut augmented = false;
        if basis.len() < n {
            augmented = true;
            let m = 4 * n;
            for j in 0..m {
                let w = C64::from_polar(0.95, std::f64::consts::TAU * (j as f64 + 0.5) / m as f64);
                for l in 0..d {
                    let kernel = TaylorRep::new((0..=k).map(|i| unit(l) * w.conj().powu(i as u32)).collect());
                    push_orthogonal(&theta, &mut basis, theta.project(&kernel));
                }
            }
        }
        if basis.len() != n {
            return Err(ClarkError::ModelDimension { expected: n, found: basis.len() });
        }
        let gram = CMatrix::from_fn(n, n, |i, j| basis[j].dot(&basis[i]));
        let gram_residual = (gram - eye(n)).norm();
        let m_theta = CMatrix::from_fn(n, n, |i, j| basis[j].shift(1).dot(&basis[i]));

        let g = &gamma.gamma;
        let c_star = TaylorRep::new(
            (0..=k)
                .map(|i| {
                    let mut c = theta.coeff(i) * g.adjoint() * &gamma.d_star_inv;
                    if i == 0 {
                        c += &gamma.d_star_inv;
                    }
                    c
                })
                .collect(),
        );
        let c = TaylorRep::new((0..=k).map(|i| theta.coeff(i + 1) * &gamma.d_inv).collect());
        let coords_of = |f: &TaylorRep| CMatrix::from_fn(n, d, |i, l| f.column(l).dot(&basis[i]));
        let c_coords = coords_of(&c);
        let c_star_coords = coords_of(&c_star);
        Ok(ModelSpace {
            theta,
            gamma: gamma.clone(),
            basis,
            gram_residual,
            augmented,
            m_theta,
            c,
            c_star,
            c_coords,
            c_star_coords,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn d(&self) -> usize {
        self.theta.d()
    }

    pub fn coords(&self, h: &TaylorRep) -> CMatrix {
        CMatrix::from_fn(self.dim(), h.shape().1, |i, l| h.column(l).dot(&self.basis[i]))
    }

    pub fn from_coords(&self, x: &CMatrix) -> TaylorRep {
        let cols: Vec<TaylorRep> = (0..x.ncols())
            .map(|l| {
                self.basis.iter().enumerate().fold(
                    TaylorRep::zeros(self.d(), 1, self.theta.degree()),
                    |acc, (i, e)| acc.add(&e.scale(x[(i, l)])),
                )
            })
            .collect();
        TaylorRep::from_columns(&cols)
    }

    /// Norm of the part of `h` outside `span(basis)`.
    pub fn membership_residual(&self, h: &TaylorRep) -> f64 {
        let x = self.coords(h);
        h.sub(&self.from_coords(&x)).norm()
    }

    pub fn m_norm(&self) -> f64 {
        op_norm(&self.m_theta)
    }

    /// `max(‖C‖ isometry defect, ‖C_*‖ isometry defect, membership)`.
    pub fn isometry_residual(&self) -> f64 {
        let d = self.d();
        let a = (self.c_coords.adjoint() * &self.c_coords - eye(d)).norm();
        let b = (self.c_star_coords.adjoint() * &self.c_star_coords - eye(d)).norm();
        let m = self.membership_residual(&self.c).max(self.membership_residual(&self.c_star));
        a.max(b).max(m)
    }

    /// `(‖M_θC − C_*Γ‖, ‖M_θ*C_* − CΓ*‖)` in coordinates.
    pub fn intertwining_residuals(&self) -> (f64, f64) {
        let g = &self.gamma.gamma;
        let a = (&self.m_theta * &self.c_coords - &self.c_star_coords * g).norm();
        let b = (self.m_theta.adjoint() * &self.c_star_coords - &self.c_coords * g.adjoint()).norm();
        (a, b)
    }

    /// `M_θ = M_z + (C_*Γ − M_zC)C*` and
    /// `M_θ* = M_z̄ + (CΓ* − M_z̄C_*)C_**` applied to every basis vector.
    pub fn resolution_residual(&self) -> f64 {
        let g = &self.gamma.gamma;
        let mut worst: f64 = 0.0;
        for (j, e) in self.basis.iter().enumerate() {
            let cj = self.c_coords.rows(j, 1).adjoint();
            let sj = self.c_star_coords.rows(j, 1).adjoint();

            let zc = self.c.mul_right(&cj).shift(1);
            let lhs = e
                .shift(1)
                .add(&self.c_star.mul_right(&(g * &cj)))
                .sub(&zc);
            let rhs = self.from_coords(&self.m_theta.columns(j, 1).into_owned());
            worst = worst.max(lhs.sub(&rhs).norm());

            // z̄·h has a z⁻¹ term h(0); track it separately.
            let cs = self.c_star.mul_right(&sj);
            let neg = (e.coeff(0) - cs.coeff(0)).norm();
            let lhs = e.shift(-1).add(&self.c.mul_right(&(g.adjoint() * &sj))).sub(&cs.shift(-1));
            let rhs = self.from_coords(&self.m_theta.rows(j, 1).adjoint());
            worst = worst.max(lhs.sub(&rhs).norm()).max(neg);
        }
        worst
    }

    /// `(I − M_θM_θ*)f = (I − θθ(0)*)f(0)` on the basis.
    pub fn defect_commutation_residual(&self) -> f64 {
        let n = self.dim();
        let defect = eye(n) - &self.m_theta * self.m_theta.adjoint();
        let t0 = self.theta.theta_at_zero.adjoint();
        let k = self.theta.degree();
        let mut worst: f64 = 0.0;
        for (j, e) in self.basis.iter().enumerate() {
            let lhs = self.from_coords(&defect.columns(j, 1).into_owned());
            let f0 = e.coeff(0);
            let rhs = TaylorRep::monomial(0, &f0, k).sub(&self.theta.series.mul_right(&(&t0 * &f0)));
            worst = worst.max(lhs.sub(&rhs).norm());
        }
        worst
    }

    /// `‖P(e) − (I − θθ(0)*)e‖` over the standard basis of `ℂᵈ`.
    pub fn constant_projection_residual(&self) -> f64 {
        let d = self.d();
        let k = self.theta.degree();
        let expected = TaylorRep::monomial(0, &eye(d), k).sub(&self.theta.series.mul_right(&self.theta.theta_at_zero.adjoint()));
        let got = self.theta.project(&TaylorRep::monomial(0, &eye(d), k));
        got.sub(&expected).norm()
    }

    /// Sines of the largest principal angles between `Ran C` and
    /// `Ran(I − M*M)`, and between `Ran C_*` and `Ran(I − MM*)`.
    pub fn defect_range_angles(&self) -> (f64, f64) {
        let n = self.dim();
        let dm = HermMatrix::symmetrized(eye(n) - self.m_theta.adjoint() * &self.m_theta);
        let dms = HermMatrix::symmetrized(eye(n) - &self.m_theta * self.m_theta.adjoint());
        (subspace_gap(&self.c_coords, &range_basis(&dm, 1e-9)), subspace_gap(&self.c_star_coords, &range_basis(&dms, 1e-9)))
    }

    /// `sup ‖C(ξ)‖` and `sup ‖C_*(ξ)‖` over an `n_grid`-point boundary grid.
    pub fn c_sup_norms(&self, n_grid: usize) -> (f64, f64) {
        let grid = OffsetGrid::new(n_grid, &[]);
        grid.points().into_iter().fold((0.0f64, 0.0f64), |(a, b), z| {
            (a.max(op_norm(&self.c.eval(z))), b.max(op_norm(&self.c_star.eval(z))))
        })
    }

    /// `max_j` orthogonality residual of the basis against `θH²`.
    pub fn orthogonality_residual(&self) -> f64 {
        self.basis.iter().map(|e| self.theta.orthogonality_residual(e)).fold(0.0, f64::max)
    }
}

fn push_orthogonal(theta: &InnerFunctionRep, basis: &mut Vec<TaylorRep>, cand: TaylorRep) {
    let orth = |mut v: TaylorRep, basis: &[TaylorRep]| {
        for _ in 0..2 {
            for q in basis {
                let c = v.dot(q);
                v = v.sub(&q.scale(c));
            }
        }
        v
    };
    let v = orth(cand, basis);
    let nrm = v.norm();
    if nrm <= DROP_TOL {
        return;
    }
    // Re-project to remove noise amplified by the normalization.
    let v = orth(theta.project(&v.scale(C64::from(1.0 / nrm))), basis);
    let nrm = v.norm();
    let mut v = v.scale(C64::from(1.0 / nrm));
    v.tail_bound = 0.0;
    basis.push(v);
}

/// `‖(I − QQ*)A‖`-type gap between `span(a)` and the orthonormal columns `q`,
/// taken symmetrically; 1 when the dimensions differ.
fn subspace_gap(a: &CMatrix, q: &CMatrix) -> f64 {
    let qa = crate::linalg::range_basis(&HermMatrix::symmetrized(a * a.adjoint()), 1e-9);
    if qa.ncols() != q.ncols() {
        return 1.0;
    }
    let n = q.nrows();
    let p = eye(n) - q * q.adjoint();
    let pa = eye(n) - &qa * qa.adjoint();
    op_norm(&(p * &qa)).max(op_norm(&(pa * q)))
}
