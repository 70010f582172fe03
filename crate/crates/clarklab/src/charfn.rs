//! Pointwise evaluation of the characteristic function `θ_Γ` of `T_Γ`, of
//! the defect function `Δ_Γ = (I − θ_Γ*θ_Γ)^{1/2}` and of the transforms
//! `F, F₁, F₂`.
//!
//! Two independent routes are provided for `θ_Γ`:
//! - resolvent: `B*(−T + z D_{T*}(I − zT*)⁻¹ D_T)U*B` on the embedded space;
//! - Cauchy: `−Γ + D_{Γ*} F₁ (I − (Γ* − I)F₁)⁻¹ D_Γ` from the matrix measure.

use crate::cauchy::{radial_limit, CauchyKind, MatrixCauchy, MatrixMeasure, OffsetGrid, RadialSchedule, Side, LIMIT_TOL};
use crate::error::{ClarkError, Result};
use crate::linalg::{eye, herm_sqrt, op_norm, solve, solve_right, CMatrix, HermMatrix, C64, PSD_TOL};
use crate::measure::{SpectralMeasure, TrigDensity};
use crate::perturbation::{build_t, ContractionParam, GammaDefects};

/// Direct boundary evaluation is used only this far from every atom.
pub const BOUNDARY_DIRECT_DIST: f64 = 1e-6;
const ON_CIRCLE: f64 = 1e-12;
/// The dense resolvent route is prepared only up to this many embedded
/// dimensions; large quadrature measures use the Cauchy route alone.
pub const RESOLVENT_MAX_DIM: usize = 512;

/// Spectral data behind an evaluator.
#[derive(Debug, Clone)]
pub enum Spectral {
    Atomic(MatrixMeasure),
    Density(TrigDensity),
}

impl MatrixCauchy for Spectral {
    fn dim(&self) -> usize {
        match self {
            Spectral::Atomic(m) => m.dim(),
            Spectral::Density(t) => t.dim(),
        }
    }

    fn transform(&self, kind: CauchyKind, z: C64) -> Result<CMatrix> {
        match self {
            Spectral::Atomic(m) => m.transform(kind, z),
            Spectral::Density(t) => t.transform(kind, z),
        }
    }

    fn poisson(&self, z: C64) -> Result<HermMatrix> {
        match self {
            Spectral::Atomic(m) => m.poisson(z),
            Spectral::Density(t) => t.poisson(z),
        }
    }

    fn is_atomic(&self) -> bool {
        match self {
            Spectral::Atomic(m) => m.is_atomic(),
            Spectral::Density(_) => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaMethod {
    Resolvent,
    Cauchy,
}

#[derive(Debug, Clone)]
struct ResolventData {
    b_star: CMatrix,
    u_star_b: CMatrix,
    t_star: CMatrix,
    d_t_u_star_b: CMatrix,
    b_star_d_t_star: CMatrix,
}

fn resolvent_data(measure: &SpectralMeasure, gamma: &ContractionParam) -> Result<ResolventData> {
    let emb = measure.embed();
    let op = build_t(&emb, gamma)?;
    let n = emb.n;
    let t = &op.t;
    let d_t = herm_sqrt(&HermMatrix::symmetrized(eye(n) - t.adjoint() * t), PSD_TOL)?;
    let d_ts = herm_sqrt(&HermMatrix::symmetrized(eye(n) - t * t.adjoint()), PSD_TOL)?;
    let u_star_b = emb.u.adjoint() * &emb.b_emb;
    let b_star = emb.b_emb.adjoint();
    Ok(ResolventData {
        d_t_u_star_b: &d_t * &u_star_b,
        b_star_d_t_star: &b_star * &d_ts,
        t_star: t.adjoint(),
        b_star,
        u_star_b,
    })
}

#[derive(Debug, Clone)]
pub struct CharFnEvaluator {
    spectral: Spectral,
    param: ContractionParam,
    defects: GammaDefects,
    resolvent: Option<ResolventData>,
}

impl CharFnEvaluator {
    pub fn new(measure: &SpectralMeasure, gamma: &ContractionParam) -> Result<Self> {
        let defects = GammaDefects::new(gamma)?;
        if gamma.d() != measure.d() {
            return Err(ClarkError::DimensionMismatch(format!("Γ is {0}x{0}, d = {1}", gamma.d(), measure.d())));
        }
        let resolvent = if measure.n() <= RESOLVENT_MAX_DIM { Some(resolvent_data(measure, gamma)?) } else { None };
        Ok(CharFnEvaluator {
            spectral: Spectral::Atomic(MatrixMeasure::new(measure)),
            param: gamma.clone(),
            defects,
            resolvent,
        })
    }

    pub fn from_density(density: &TrigDensity, gamma: &ContractionParam) -> Result<Self> {
        Ok(CharFnEvaluator {
            spectral: Spectral::Density(density.clone()),
            param: gamma.clone(),
            defects: GammaDefects::new(gamma)?,
            resolvent: None,
        })
    }

    /// Same spectral data, different `Γ`.
    pub fn with_gamma(&self, gamma: &ContractionParam) -> Result<Self> {
        match &self.spectral {
            Spectral::Atomic(m) => CharFnEvaluator::new(m.measure(), gamma),
            Spectral::Density(t) => CharFnEvaluator::from_density(t, gamma),
        }
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn measure(&self) -> Option<&SpectralMeasure> {
        match &self.spectral {
            Spectral::Atomic(m) => Some(m.measure()),
            Spectral::Density(_) => None,
        }
    }

    pub fn matrix_measure(&self) -> Option<&MatrixMeasure> {
        match &self.spectral {
            Spectral::Atomic(m) => Some(m),
            Spectral::Density(_) => None,
        }
    }

    pub fn param(&self) -> &ContractionParam {
        &self.param
    }

    pub fn gamma(&self) -> &CMatrix {
        &self.defects.gamma
    }

    pub fn defects(&self) -> &GammaDefects {
        &self.defects
    }

    pub fn d(&self) -> usize {
        self.defects.dim()
    }

    pub fn f(&self, z: C64) -> Result<CMatrix> {
        self.spectral.transform(CauchyKind::C, z)
    }

    pub fn f1(&self, z: C64) -> Result<CMatrix> {
        self.spectral.transform(CauchyKind::C1, z)
    }

    pub fn f2(&self, z: C64) -> Result<CMatrix> {
        self.spectral.transform(CauchyKind::C2, z)
    }

    pub fn theta(&self, z: C64, method: ThetaMethod) -> Result<CMatrix> {
        match method {
            ThetaMethod::Resolvent => self.theta_resolvent(z),
            ThetaMethod::Cauchy => {
                let r = z.norm();
                if r < 1.0 - ON_CIRCLE {
                    self.theta_cauchy_direct(z)
                } else if r <= 1.0 + ON_CIRCLE {
                    self.theta_boundary(z)
                } else {
                    Err(ClarkError::OutsideDisk { modulus: r })
                }
            }
        }
    }

    fn theta_resolvent(&self, z: C64) -> Result<CMatrix> {
        let r = self.resolvent.as_ref().ok_or_else(|| {
            ClarkError::DimensionMismatch(format!("resolvent route needs an atomic measure with n <= {RESOLVENT_MAX_DIM}"))
        })?;
        if z.norm() >= 1.0 {
            return Err(ClarkError::OutsideDisk { modulus: z.norm() });
        }
        let n = r.t_star.nrows();
        let core = eye(n) - &r.t_star * z;
        let x = solve(&core, &r.d_t_u_star_b)?;
        let t = r.t_star.adjoint();
        Ok(-(&r.b_star * t * &r.u_star_b) + &r.b_star_d_t_star * x * z)
    }

    fn theta_from_f1(&self, f1: &CMatrix) -> Result<CMatrix> {
        let g = &self.defects;
        let d = self.d();
        let core = eye(d) - (g.gamma.adjoint() - eye(d)) * f1;
        let x = solve(&core, &g.d)?;
        Ok(-&g.gamma + &g.d_star * f1 * x)
    }

    fn theta_cauchy_direct(&self, z: C64) -> Result<CMatrix> {
        self.theta_from_f1(&self.f1(z)?)
    }

    /// Boundary value at `|ξ| = 1`; a radial limit when `ξ` is near an atom.
    pub fn theta_boundary(&self, xi: C64) -> Result<CMatrix> {
        let near = match &self.spectral {
            Spectral::Atomic(m) => m.measure().nearest_atom(xi).1 <= BOUNDARY_DIRECT_DIST,
            Spectral::Density(_) => false,
        };
        if !near {
            return self.theta_cauchy_direct(xi);
        }
        let lim = radial_limit(xi, Side::Inside, RadialSchedule::default(), LIMIT_TOL, |z| {
            self.theta_cauchy_direct(z)
        })?;
        if !lim.converged {
            return Err(ClarkError::NoConvergence { increment: lim.est_error });
        }
        Ok(lim.value)
    }

    /// `θ₀ = F₁(I + F₁)⁻¹`, independent of `Γ`.
    pub fn theta_zero(&self, z: C64) -> Result<CMatrix> {
        let f1 = self.f1(z)?;
        solve_right(&f1, &(eye(self.d()) + &f1))
    }

    pub fn theta_zero_formulas(&self, z: C64) -> Result<ThetaZeroForms> {
        let i = eye(self.d());
        let f1 = self.f1(z)?;
        let f2 = self.f2(z)?;
        Ok(ThetaZeroForms {
            f1_right: solve_right(&f1, &(&i + &f1))?,
            f1_left: solve(&(&i + &f1), &f1)?,
            f2_right: solve_right(&(&f2 - &i), &(&f2 + &i))?,
            f2_left: solve(&(&f2 + &i), &(&f2 - &i))?,
        })
    }

    /// `I − θ*θ` at `z`.
    pub fn delta_squared(&self, z: C64) -> Result<HermMatrix> {
        let th = self.theta(z, ThetaMethod::Cauchy)?;
        Ok(HermMatrix::symmetrized(eye(self.d()) - th.adjoint() * th))
    }

    pub fn delta(&self, z: C64) -> Result<CMatrix> {
        herm_sqrt(&self.delta_squared(z)?, PSD_TOL)
    }

    /// `‖Δ_Γ² − D_Γ(I − θ₀*Γ)⁻¹Δ₀²(I − Γ*θ₀)⁻¹D_Γ‖`.
    pub fn delta_relation_check(&self, z: C64) -> Result<f64> {
        let i = eye(self.d());
        let g = &self.defects;
        let th0 = if z.norm() < 1.0 - ON_CIRCLE { self.theta_zero(z)? } else { self.theta_zero_boundary(z)? };
        let dg2 = self.delta_squared(z)?.into_matrix();
        let d02 = &i - th0.adjoint() * &th0;
        let right = solve(&(&i - g.gamma.adjoint() * &th0), &g.d)?;
        let rhs = right.adjoint() * d02 * right;
        Ok(op_norm(&(dg2 - rhs)))
    }

    fn theta_zero_boundary(&self, xi: C64) -> Result<CMatrix> {
        self.with_gamma(&ContractionParam::zero(self.d()))?.theta_boundary(xi)
    }

    /// `‖F(I − θ₀) − I‖`.
    pub fn f_identity_residual(&self, z: C64) -> Result<f64> {
        let i = eye(self.d());
        Ok(op_norm(&(self.f(z)? * (&i - self.theta_zero(z)?) - i)))
    }

    /// `‖(I − θ₀*)𝒫(I − θ₀) − (I − θ₀*θ₀)‖`, `𝒫` the Poisson extension of `B*Bμ`.
    pub fn ac_identity_residual(&self, z: C64) -> Result<f64> {
        let i = eye(self.d());
        let th0 = self.theta_zero(z)?;
        let p = self.spectral.poisson(z)?.into_matrix();
        let lhs = (&i - th0.adjoint()) * p * (&i - &th0);
        Ok(op_norm(&(lhs - (&i - th0.adjoint() * &th0))))
    }

    /// Number of eigenvalues of `Δ₀²(z)` above `threshold`.
    pub fn delta_zero_rank(&self, z: C64, threshold: f64) -> Result<usize> {
        let th0 = self.theta_zero(z)?;
        let d02 = HermMatrix::symmetrized(eye(self.d()) - th0.adjoint() * th0);
        Ok(d02.eigen().0.iter().filter(|&&v| v > threshold).count())
    }

    pub fn ac_diagnose(&self, z_grid: &[C64], boundary_samples: usize) -> Result<AcReport> {
        let mut residuals = Vec::with_capacity(z_grid.len());
        for &z in z_grid {
            residuals.push(self.ac_identity_residual(z)?);
        }
        let max_identity_residual = residuals.iter().cloned().fold(0.0, f64::max);
        let mut radial_decay = Vec::new();
        if let Spectral::Atomic(m) = &self.spectral {
            let grid = OffsetGrid::for_measure(boundary_samples.max(1), m.measure());
            for xi in grid.points() {
                let mut norms = Vec::new();
                for (z, _) in RadialSchedule::default().points(xi, Side::Inside) {
                    let th0 = self.theta_zero(z)?;
                    norms.push(op_norm(&(eye(self.d()) - th0.adjoint() * th0)).sqrt());
                }
                radial_decay.push(RadialDecay { xi: (xi.re, xi.im), delta_norms: norms });
            }
        }
        Ok(AcReport { residuals, max_identity_residual, radial_decay })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaZeroForms {
    /// `F₁(I + F₁)⁻¹`
    pub f1_right: CMatrix,
    /// `(I + F₁)⁻¹F₁`
    pub f1_left: CMatrix,
    /// `(F₂ − I)(F₂ + I)⁻¹`
    pub f2_right: CMatrix,
    /// `(F₂ + I)⁻¹(F₂ − I)`
    pub f2_left: CMatrix,
}

impl ThetaZeroForms {
    pub fn spread(&self) -> f64 {
        let all = [&self.f1_left, &self.f2_right, &self.f2_left];
        all.iter().map(|m| op_norm(&(*m - &self.f1_right))).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RadialDecay {
    pub xi: (f64, f64),
    /// `‖Δ₀(r_k ξ)‖` along the default radial schedule.
    pub delta_norms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct AcReport {
    pub residuals: Vec<f64>,
    pub max_identity_residual: f64,
    pub radial_decay: Vec<RadialDecay>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LftDirection {
    ZeroToGamma,
    GammaToZero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LftResult {
    pub value: CMatrix,
    /// Every algebraically equivalent form that was evaluated; `value` is the first.
    pub forms: Vec<CMatrix>,
}

impl LftResult {
    pub fn spread(&self) -> f64 {
        self.forms.iter().map(|m| op_norm(&(m - &self.value))).fold(0.0, f64::max)
    }
}

/// Linear fractional relation between `θ₀` and `θ_Γ` at a single point.
pub fn lft_apply(direction: LftDirection, theta_in: &CMatrix, g: &GammaDefects) -> Result<LftResult> {
    let i = eye(g.dim());
    let gs = g.gamma.adjoint();
    let th = theta_in;
    let forms = match direction {
        LftDirection::ZeroToGamma => {
            let left = &i - &gs * th;
            let right = &i - th * &gs;
            let diff = th - &g.gamma;
            vec![
                &g.d_star_inv * solve_right(&diff, &left)? * &g.d,
                &g.d_star * solve(&right, &diff)? * &g.d_inv,
                -&g.gamma + &g.d_star * solve_right(th, &left)? * &g.d,
                -&g.gamma + &g.d_star * solve(&right, th)? * &g.d,
            ]
        }
        LftDirection::GammaToZero => {
            let sum = th + &g.gamma;
            vec![
                &g.d_star * solve(&(&i + th * &gs), &sum)? * &g.d_inv,
                &g.d_star_inv * solve_right(&sum, &(&i + &gs * th))? * &g.d,
            ]
        }
    };
    Ok(LftResult { value: forms[0].clone(), forms })
}
