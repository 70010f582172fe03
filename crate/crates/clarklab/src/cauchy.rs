//! Cauchy-type transforms of the matrix measure `M μ` (with `M_j = B_j*B_j`),
//! the Poisson extension, the regularized operators `T_r` and `P_n`, and
//! radial boundary limits.

use std::f64::consts::{PI, TAU};

use crate::error::{ClarkError, Result};
use crate::linalg::{eye, CMatrix, CVector, HermMatrix, C64};
use crate::measure::{FiberFunction, SpectralMeasure, TrigDensity};

/// Minimum distance from an atom for direct evaluation.
pub const EVAL_GUARD: f64 = 1e-8;
/// Cauchy tolerance for successive extrapolated radial estimates.
pub const LIMIT_TOL: f64 = 1e-7;
pub const DEFAULT_GRID: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CauchyKind {
    /// kernel `1/(1 − ξ̄z)`
    C,
    /// kernel `ξ̄z/(1 − ξ̄z)`
    C1,
    /// kernel `(1 + ξ̄z)/(1 − ξ̄z)`
    C2,
}

fn kernel(kind: CauchyKind, t: C64) -> C64 {
    let one = C64::from(1.0);
    match kind {
        CauchyKind::C => one / (one - t),
        CauchyKind::C1 => t / (one - t),
        CauchyKind::C2 => (one + t) / (one - t),
    }
}

/// Anything whose matrix Cauchy transforms can be evaluated pointwise.
pub trait MatrixCauchy {
    fn dim(&self) -> usize;
    fn transform(&self, kind: CauchyKind, z: C64) -> Result<CMatrix>;

    /// `Re 𝒞₂` inside the disk.
    fn poisson(&self, z: C64) -> Result<HermMatrix> {
        if z.norm() >= 1.0 - EVAL_GUARD {
            return Err(ClarkError::OutsideDisk { modulus: z.norm() });
        }
        Ok(HermMatrix::symmetrized(self.transform(CauchyKind::C2, z)?))
    }

    /// True when the measure is purely atomic and exact (not a quadrature proxy).
    fn is_atomic(&self) -> bool;
}

/// Atomic matrix measure `Σ μ_j M_j δ_{ξ_j}`.
#[derive(Debug, Clone)]
pub struct MatrixMeasure {
    measure: SpectralMeasure,
    densities: Vec<CMatrix>,
}

impl MatrixMeasure {
    pub fn new(measure: &SpectralMeasure) -> Self {
        let densities = measure.atoms().iter().map(|a| a.density() * C64::from(a.weight)).collect();
        MatrixMeasure { measure: measure.clone(), densities }
    }

    pub fn measure(&self) -> &SpectralMeasure {
        &self.measure
    }

    fn guard(&self, z: C64) -> Result<()> {
        let (atom, dist) = self.measure.nearest_atom(z);
        if dist <= EVAL_GUARD {
            return Err(ClarkError::TooCloseToAtom { z: format!("{z}"), atom, dist });
        }
        Ok(())
    }

    /// Poisson extension `Σ P(z, ξ_j) μ_j M_j`.
    pub fn poisson_eval(&self, z: C64) -> Result<HermMatrix> {
        if z.norm() >= 1.0 - EVAL_GUARD {
            return Err(ClarkError::OutsideDisk { modulus: z.norm() });
        }
        let d = self.measure.d();
        let mut out = CMatrix::zeros(d, d);
        for (a, m) in self.measure.atoms().iter().zip(&self.densities) {
            let p = (1.0 - z.norm_sqr()) / (a.point - z).norm_sqr();
            out += m * C64::from(p);
        }
        Ok(HermMatrix::symmetrized(out))
    }

    /// Scalar transform `𝒞[μ](z) = Σ μ_j/(1 − ξ̄_j z)`.
    pub fn scalar_cauchy(&self, z: C64) -> Result<C64> {
        self.guard(z)?;
        Ok(self
            .measure
            .atoms()
            .iter()
            .map(|a| kernel(CauchyKind::C, a.point.conj() * z) * a.weight)
            .sum())
    }

    /// `𝒞[B*fμ](z) = Σ μ_j B_j* f_j/(1 − ξ̄_j z)`.
    pub fn cauchy_of(&self, f: &FiberFunction, z: C64) -> Result<CVector> {
        self.guard(z)?;
        Ok(self.cauchy_of_unguarded(f, z))
    }

    fn cauchy_of_unguarded(&self, f: &FiberFunction, z: C64) -> CVector {
        let mut out = CVector::zeros(self.measure.d());
        for (a, v) in self.measure.atoms().iter().zip(&f.values) {
            let k = kernel(CauchyKind::C, a.point.conj() * z) * a.weight;
            out += a.b_block.adjoint() * v * k;
        }
        out
    }

    /// Moments `ν̂(k) = Σ μ_j ξ̄_jᵏ B_j* f_j` of `B*fμ`.
    pub fn moment(&self, f: &FiberFunction, k: i64) -> CVector {
        let mut out = CVector::zeros(self.measure.d());
        for (a, v) in self.measure.atoms().iter().zip(&f.values) {
            let w = a.point.conj().powi(k as i32) * a.weight;
            out += a.b_block.adjoint() * v * w;
        }
        out
    }
}

impl MatrixCauchy for MatrixMeasure {
    fn dim(&self) -> usize {
        self.measure.d()
    }

    fn transform(&self, kind: CauchyKind, z: C64) -> Result<CMatrix> {
        self.guard(z)?;
        let d = self.measure.d();
        let mut out = CMatrix::zeros(d, d);
        for (a, m) in self.measure.atoms().iter().zip(&self.densities) {
            out += m * kernel(kind, a.point.conj() * z);
        }
        Ok(out)
    }

    fn poisson(&self, z: C64) -> Result<HermMatrix> {
        self.poisson_eval(z)
    }

    fn is_atomic(&self) -> bool {
        !self.measure.is_ac_approximation()
    }
}

impl MatrixCauchy for TrigDensity {
    fn dim(&self) -> usize {
        self.d()
    }

    /// Evaluated on the closed disk; on the circle this is the limit from inside.
    fn transform(&self, kind: CauchyKind, z: C64) -> Result<CMatrix> {
        if z.norm() > 1.0 + 1e-12 {
            return Err(ClarkError::OutsideDisk { modulus: z.norm() });
        }
        let d = self.d();
        let m0 = self.moment(0);
        let mut tail = CMatrix::zeros(d, d);
        for k in (1..=self.degree() as i64).rev() {
            tail = (tail + self.moment(k)) * z;
        }
        Ok(match kind {
            CauchyKind::C => m0 + tail,
            CauchyKind::C1 => tail,
            CauchyKind::C2 => m0 + tail * C64::from(2.0),
        })
    }

    fn is_atomic(&self) -> bool {
        false
    }
}

pub fn cauchy_eval(kind: CauchyKind, mm: &impl MatrixCauchy, z: C64) -> Result<CMatrix> {
    mm.transform(kind, z)
}

/// Regularization of the singular integral operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularization {
    /// `T_r f(z) = 𝒞[B*fμ](rz)`, `r ≠ 1`.
    Radius(f64),
    /// Analytic (`n ≥ 0`) or anti-analytic (`n < 0`) partial sum of the moments.
    PartialSum(i64),
}

pub fn regularized_apply(
    mode: Regularization,
    mm: &MatrixMeasure,
    f: &FiberFunction,
    z_grid: &[C64],
) -> Result<Vec<CVector>> {
    match mode {
        Regularization::Radius(r) => {
            if !(r > 0.0) || (r - 1.0).abs() < f64::EPSILON {
                return Err(ClarkError::BadRadius);
            }
            z_grid.iter().map(|&z| mm.cauchy_of(f, z * r)).collect()
        }
        Regularization::PartialSum(n) => {
            let range: Vec<i64> = if n >= 0 { (0..=n).collect() } else { (n..0).collect() };
            let moments: Vec<CVector> = range.iter().map(|&k| mm.moment(f, k)).collect();
            Ok(z_grid
                .iter()
                .map(|&z| {
                    let mut out = CVector::zeros(mm.dim());
                    for (&k, m) in range.iter().zip(&moments) {
                        out += m * z.powi(k as i32);
                    }
                    out
                })
                .collect())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Inside,
    Outside,
}

/// Radii `r_k = 1 − 2⁻ᵏ` for `k_min ≤ k ≤ k_max` (reciprocals outside).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialSchedule {
    pub k_min: u32,
    pub k_max: u32,
}

impl Default for RadialSchedule {
    fn default() -> Self {
        RadialSchedule { k_min: 4, k_max: 20 }
    }
}

impl RadialSchedule {
    pub fn points(&self, xi: C64, side: Side) -> Vec<(C64, f64)> {
        (self.k_min..=self.k_max)
            .map(|k| {
                let r = 1.0 - 0.5f64.powi(k as i32);
                match side {
                    Side::Inside => (xi * r, 1.0 - r),
                    Side::Outside => (xi / r, 1.0 / r - 1.0),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialLimit {
    pub value: CMatrix,
    pub converged: bool,
    pub est_error: f64,
}

/// Limit of `g(rξ)` as `r → 1` along the schedule, with first-order
/// Richardson extrapolation in the distance `|1 − r|`.
pub fn radial_limit(
    xi: C64,
    side: Side,
    schedule: RadialSchedule,
    tol: f64,
    mut g: impl FnMut(C64) -> Result<CMatrix>,
) -> Result<RadialLimit> {
    let pts = schedule.points(xi, side);
    let mut vals = Vec::with_capacity(pts.len());
    for (z, _) in &pts {
        vals.push(g(*z)?);
    }
    let mut est = Vec::with_capacity(vals.len());
    for k in 0..vals.len().saturating_sub(1) {
        let (h0, h1) = (pts[k].1, pts[k + 1].1);
        est.push((&vals[k + 1] * C64::from(h0) - &vals[k] * C64::from(h1)) / C64::from(h0 - h1));
    }
    let (value, est_error) = match est.len() {
        0 => (vals.last().cloned().unwrap_or_else(|| CMatrix::zeros(0, 0)), f64::INFINITY),
        1 => (est[0].clone(), f64::INFINITY),
        m => (est[m - 1].clone(), (&est[m - 1] - &est[m - 2]).norm()),
    };
    let converged = est_error <= tol * value.norm().max(1.0);
    Ok(RadialLimit { value, converged, est_error })
}

/// Radial limit of `𝒞[B*fμ]` at `ξ`; diverges (and errors) at atoms where
/// `B_j* f_j ≠ 0`.
pub fn boundary_value(
    mm: &MatrixMeasure,
    f: &FiberFunction,
    xi: C64,
    side: Side,
    schedule: RadialSchedule,
) -> Result<RadialLimit> {
    let lim = radial_limit(xi, side, schedule, LIMIT_TOL, |z| {
        let v = mm.cauchy_of(f, z)?;
        Ok(CMatrix::from_column_slice(v.len(), 1, v.as_slice()))
    })?;
    if !lim.converged {
        return Err(ClarkError::NoConvergence { increment: lim.est_error });
    }
    Ok(lim)
}

/// Radial limit of the normalized transform `𝒞[B*fμ]/𝒞[μ]`.
pub fn normalized_boundary_value(
    mm: &MatrixMeasure,
    f: &FiberFunction,
    xi: C64,
    side: Side,
    schedule: RadialSchedule,
) -> Result<RadialLimit> {
    let lim = radial_limit(xi, side, schedule, LIMIT_TOL, |z| {
        let v = mm.cauchy_of(f, z)? / mm.scalar_cauchy(z)?;
        Ok(CMatrix::from_column_slice(v.len(), 1, v.as_slice()))
    })?;
    if !lim.converged {
        return Err(ClarkError::NoConvergence { increment: lim.est_error });
    }
    Ok(lim)
}

/// Equispaced grid on the circle, rotated off the atoms.
///
/// Starts from the half-step offset and, if needed, rotates within one cell
/// so that every atom is at angular distance at least `π/(2N)` from the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetGrid {
    pub n: usize,
    pub phase: f64,
}

impl OffsetGrid {
    pub fn new(n: usize, avoid: &[C64]) -> Self {
        let step = TAU / n as f64;
        let clearance = |phase: f64| {
            avoid
                .iter()
                .map(|a| {
                    let delta = (a.arg() - phase).rem_euclid(step);
                    delta.min(step - delta)
                })
                .fold(f64::INFINITY, f64::min)
        };
        const TRIES: usize = 32;
        let mut best = (step / 2.0, clearance(step / 2.0));
        for j in 0..TRIES {
            let phase = step / 2.0 + step * j as f64 / TRIES as f64;
            let cl = clearance(phase);
            if cl >= PI / (2.0 * n as f64) {
                return OffsetGrid { n, phase };
            }
            if cl > best.1 {
                best = (phase, cl);
            }
        }
        OffsetGrid { n, phase: best.0 }
    }

    pub fn for_measure(n: usize, measure: &SpectralMeasure) -> Self {
        let pts: Vec<C64> = measure.atoms().iter().map(|a| a.point).collect();
        OffsetGrid::new(n, &pts)
    }

    pub fn point(&self, k: usize) -> C64 {
        C64::from_polar(1.0, self.phase + TAU * k as f64 / self.n as f64)
    }

    pub fn points(&self) -> Vec<C64> {
        (0..self.n).map(|k| self.point(k)).collect()
    }
}

/// Trapezoid `L²(m)` norm of samples on an equispaced grid.
pub fn grid_l2_norm(values: &[CVector]) -> f64 {
    let s: f64 = values.iter().map(|v| v.norm_squared()).sum();
    (s / values.len() as f64).sqrt()
}

/// `F = I + F₁` and `F₂ = I + 2F₁` residual at `z` (requires unit total mass).
pub fn kernel_algebra_residual(mm: &impl MatrixCauchy, z: C64) -> Result<f64> {
    let f = mm.transform(CauchyKind::C, z)?;
    let f1 = mm.transform(CauchyKind::C1, z)?;
    let f2 = mm.transform(CauchyKind::C2, z)?;
    let i = eye(mm.dim());
    Ok((&f - &i - &f1).norm().max((f2 - i - f1 * C64::from(2.0)).norm()))
}
