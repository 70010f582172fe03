//! Discrete matrix-valued spectral data of the unperturbed unitary.
//!
//! An atom carries a point `ξ` on the circle, a weight `μ > 0` and a block
//! `B_j` (fiber dimension × `d`). The isometry `B: ℂᵈ → L²(μ; E)` is
//! `a ↦ (B_j a)_j`, and it is an isometry exactly when `Σ μ_j B_j*B_j = I`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{ClarkError, Result};
use crate::linalg::{block_diag, eye, numerical_rank, op_norm, pinv, CMatrix, CVector, C64, RANK_TOL};

pub const ISO_TOL: f64 = 1e-10;
pub const UNIT_TOL: f64 = 1e-12;
pub const DISTINCT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub point: C64,
    pub weight: f64,
    /// `m_j × d`; column `k` is `b_k(ξ_j)`.
    pub b_block: CMatrix,
}

impl Atom {
    pub fn new(point: C64, weight: f64, b_block: CMatrix) -> Self {
        Atom { point, weight, b_block }
    }

    /// Atom at angle `2π·turns`.
    pub fn at_turn(turns: f64, weight: f64, b_block: CMatrix) -> Self {
        Atom::new(C64::from_polar(1.0, std::f64::consts::TAU * turns), weight, b_block)
    }

    pub fn fiber_dim(&self) -> usize {
        self.b_block.nrows()
    }

    /// `M_j = B_j*B_j`.
    pub fn density(&self) -> CMatrix {
        self.b_block.adjoint() * &self.b_block
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure {
    atoms: Vec<Atom>,
    d: usize,
    ac_approximation: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ValidationReport {
    pub isometry_residual: f64,
    pub total_mass: f64,
    pub min_separation: f64,
    pub max_unit_deviation: f64,
    pub min_weight: f64,
    pub failures: Vec<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct StarCyclicity {
    pub cyclic: bool,
    pub failing_atoms: Vec<usize>,
}

impl SpectralMeasure {
    /// Checks only shapes and finiteness; use [`SpectralMeasure::validate`]
    /// for the measure-theoretic conditions.
    pub fn new(atoms: Vec<Atom>, d: usize) -> Result<Self> {
        if atoms.is_empty() {
            return Err(ClarkError::InvalidMeasure("no atoms".into()));
        }
        if d == 0 {
            return Err(ClarkError::InvalidMeasure("d must be positive".into()));
        }
        for (j, a) in atoms.iter().enumerate() {
            if a.b_block.ncols() != d || a.b_block.nrows() == 0 {
                return Err(ClarkError::InvalidMeasure(format!(
                    "atom {j}: block is {}x{}, expected m x {d} with m > 0",
                    a.b_block.nrows(),
                    a.b_block.ncols()
                )));
            }
            let finite = a.point.re.is_finite()
                && a.point.im.is_finite()
                && a.weight.is_finite()
                && a.b_block.iter().all(|z| z.re.is_finite() && z.im.is_finite());
            if !finite {
                return Err(ClarkError::InvalidMeasure(format!("atom {j}: non-finite data")));
            }
        }
        Ok(SpectralMeasure { atoms, d, ac_approximation: false })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Total embedded dimension `Σ m_j`.
    pub fn n(&self) -> usize {
        self.atoms.iter().map(|a| a.fiber_dim()).sum()
    }

    /// True for quadrature grids standing in for an absolutely continuous measure.
    pub fn is_ac_approximation(&self) -> bool {
        self.ac_approximation
    }

    pub(crate) fn mark_ac_approximation(mut self) -> Self {
        self.ac_approximation = true;
        self
    }

    /// `Σ μ_j B_j*B_j`.
    pub fn gram(&self) -> CMatrix {
        let mut g = CMatrix::zeros(self.d, self.d);
        for a in &self.atoms {
            g += a.density() * C64::from(a.weight);
        }
        g
    }

    pub fn validate(&self) -> ValidationReport {
        let mut failures = Vec::new();
        let isometry_residual = op_norm(&(self.gram() - eye(self.d)));
        if isometry_residual > ISO_TOL {
            failures.push(format!("isometry residual {isometry_residual:e} > {ISO_TOL:e}"));
        }
        let total_mass: f64 = self.atoms.iter().map(|a| a.weight).sum();
        if total_mass > 1.0 + ISO_TOL {
            failures.push(format!("total mass {total_mass} exceeds 1"));
        }
        let min_weight = self.atoms.iter().map(|a| a.weight).fold(f64::INFINITY, f64::min);
        if min_weight <= 0.0 {
            failures.push(format!("non-positive weight {min_weight}"));
        }
        let max_unit_deviation =
            self.atoms.iter().map(|a| (a.point.norm() - 1.0).abs()).fold(0.0, f64::max);
        if max_unit_deviation > UNIT_TOL {
            failures.push(format!("atom off the unit circle by {max_unit_deviation:e}"));
        }
        let mut min_separation = f64::INFINITY;
        for i in 0..self.atoms.len() {
            for j in i + 1..self.atoms.len() {
                min_separation = min_separation.min((self.atoms[i].point - self.atoms[j].point).norm());
            }
        }
        if min_separation <= DISTINCT_TOL {
            failures.push(format!("atoms closer than {DISTINCT_TOL:e}: {min_separation:e}"));
        }
        ValidationReport {
            isometry_residual,
            total_mass,
            min_separation,
            max_unit_deviation,
            min_weight,
            pass: failures.is_empty(),
            failures,
        }
    }

    /// `Ran B` is star-cyclic iff every block has full row rank.
    pub fn star_cyclic_check(&self) -> StarCyclicity {
        let failing_atoms: Vec<usize> = self
            .atoms
            .iter()
            .enumerate()
            .filter(|(_, a)| numerical_rank(&a.b_block, RANK_TOL) < a.fiber_dim())
            .map(|(j, _)| j)
            .collect();
        StarCyclicity { cyclic: failing_atoms.is_empty(), failing_atoms }
    }

    /// A random `α ∈ ℂᵈ` with `B_j α ≠ 0` at every atom (scalar fibers only).
    pub fn random_cyclic_vector(&self, seed: u64) -> Result<CVector> {
        for (j, a) in self.atoms.iter().enumerate() {
            if a.fiber_dim() != 1 {
                return Err(ClarkError::NotScalarFibers { atom: j, dim: a.fiber_dim() });
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        const ATTEMPTS: usize = 32;
        for _ in 0..ATTEMPTS {
            let alpha = CVector::from_iterator(
                self.d,
                (0..self.d).map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    C64::new(re, im)
                }),
            );
            if self.is_cyclic_vector(&alpha) {
                return Ok(alpha);
            }
        }
        Err(ClarkError::ExhaustedRetries(ATTEMPTS))
    }

    pub fn is_cyclic_vector(&self, alpha: &CVector) -> bool {
        self.atoms.iter().all(|a| {
            let v = &a.b_block * alpha;
            v.norm() > RANK_TOL * a.b_block.norm().max(1.0) * alpha.norm()
        })
    }

    pub fn embed(&self) -> EmbeddedOperators {
        let mut offsets = Vec::with_capacity(self.atoms.len());
        let mut off = 0;
        for a in &self.atoms {
            offsets.push(off);
            off += a.fiber_dim();
        }
        let n = off;
        let u = block_diag(
            &self.atoms.iter().map(|a| eye(a.fiber_dim()) * a.point).collect::<Vec<_>>(),
        );
        let mut b_emb = CMatrix::zeros(n, self.d);
        for (a, &o) in self.atoms.iter().zip(&offsets) {
            let blk = &a.b_block * C64::from(a.weight.sqrt());
            b_emb.view_mut((o, 0), blk.shape()).copy_from(&blk);
        }
        let right_inverses = self.atoms.iter().map(|a| pinv(&a.b_block, RANK_TOL)).collect();
        EmbeddedOperators {
            n,
            d: self.d,
            u,
            b_emb,
            right_inverses,
            offsets,
            sqrt_weights: self.atoms.iter().map(|a| a.weight.sqrt()).collect(),
            cyclic: self.star_cyclic_check().cyclic,
        }
    }

    /// Distance from `z` to the nearest atom and that atom's index.
    pub fn nearest_atom(&self, z: C64) -> (usize, f64) {
        self.atoms
            .iter()
            .enumerate()
            .map(|(j, a)| (j, (z - a.point).norm()))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
    }
}

/// The measure realized on `ℂⁿ` with the standard inner product.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedOperators {
    pub n: usize,
    pub d: usize,
    /// `diag(ξ_j I_{m_j})`.
    pub u: CMatrix,
    /// `n × d`, block `j` is `√μ_j B_j`.
    pub b_emb: CMatrix,
    /// Per atom `R_j` (`d × m_j`) with `B_j R_j = I` on the range of `B_j`.
    pub right_inverses: Vec<CMatrix>,
    pub offsets: Vec<usize>,
    pub sqrt_weights: Vec<f64>,
    pub cyclic: bool,
}

impl EmbeddedOperators {
    /// `V = B*U`.
    pub fn v(&self) -> CMatrix {
        self.b_emb.adjoint() * &self.u
    }

    /// `V_* = B*`.
    pub fn v_star(&self) -> CMatrix {
        self.b_emb.adjoint()
    }
}

/// A function on the atoms, `f_j ∈ ℂ^{m_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberFunction {
    pub values: Vec<CVector>,
}

impl FiberFunction {
    pub fn zeros(measure: &SpectralMeasure) -> Self {
        FiberFunction {
            values: measure.atoms().iter().map(|a| CVector::zeros(a.fiber_dim())).collect(),
        }
    }

    /// `(B_j a)_j`, the element `B a` of `Ran B`.
    pub fn from_range(measure: &SpectralMeasure, a: &CVector) -> Self {
        FiberFunction { values: measure.atoms().iter().map(|at| &at.b_block * a).collect() }
    }

    /// Embedded coordinates `x_j = √μ_j f_j`.
    pub fn to_embedded(&self, measure: &SpectralMeasure) -> CVector {
        let mut out = Vec::with_capacity(measure.n());
        for (a, v) in measure.atoms().iter().zip(&self.values) {
            let s = a.weight.sqrt();
            out.extend(v.iter().map(|z| z * s));
        }
        CVector::from_vec(out)
    }

    pub fn from_embedded(measure: &SpectralMeasure, x: &CVector) -> Self {
        let mut values = Vec::with_capacity(measure.atoms().len());
        let mut off = 0;
        for a in measure.atoms() {
            let m = a.fiber_dim();
            let s = 1.0 / a.weight.sqrt();
            values.push(CVector::from_iterator(m, x.rows(off, m).iter().map(|z| z * s)));
            off += m;
        }
        FiberFunction { values }
    }

    /// Norm in `L²(μ; E)`.
    pub fn norm(&self, measure: &SpectralMeasure) -> f64 {
        self.to_embedded(measure).norm()
    }

    /// `B*f = Σ μ_j B_j* f_j`.
    pub fn b_adjoint(&self, measure: &SpectralMeasure) -> CVector {
        let mut out = CVector::zeros(measure.d());
        for (a, v) in measure.atoms().iter().zip(&self.values) {
            out += a.b_block.adjoint() * v * C64::from(a.weight);
        }
        out
    }
}

/// Lebesgue measure with a trigonometric-polynomial block `B(ξ) = Σ_k B̂_k ξᵏ`
/// (`k ≥ 0`, each `m × d`). Used as an exactly computable absolutely
/// continuous example.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigDensity {
    coeffs: Vec<CMatrix>,
    d: usize,
    m: usize,
}

impl TrigDensity {
    pub fn new(coeffs: Vec<CMatrix>) -> Result<Self> {
        let first = coeffs
            .first()
            .ok_or_else(|| ClarkError::InvalidMeasure("empty coefficient list".into()))?;
        let (m, d) = first.shape();
        if coeffs.iter().any(|c| c.shape() != (m, d)) || m == 0 || d == 0 {
            return Err(ClarkError::InvalidMeasure("inconsistent coefficient shapes".into()));
        }
        Ok(TrigDensity { coeffs, d, m })
    }

    /// `B(ξ) = (1, ξ)`: fiber dimension 1 inside `ℂ²`.
    pub fn shift_pair() -> Self {
        let b0 = CMatrix::from_row_slice(1, 2, &[C64::from(1.0), C64::from(0.0)]);
        let b1 = CMatrix::from_row_slice(1, 2, &[C64::from(0.0), C64::from(1.0)]);
        TrigDensity::new(vec![b0, b1]).unwrap()
    }

    /// `B(ξ) = [[1, 0, 0], [0, 1, ξ]]`: fiber dimension 2 inside `ℂ³`.
    pub fn split_triple() -> Self {
        let one = C64::from(1.0);
        let zero = C64::from(0.0);
        let b0 = CMatrix::from_row_slice(2, 3, &[one, zero, zero, zero, one, zero]);
        let b1 = CMatrix::from_row_slice(2, 3, &[zero, zero, zero, zero, zero, one]);
        TrigDensity::new(vec![b0, b1]).unwrap()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn fiber_dim(&self) -> usize {
        self.m
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[CMatrix] {
        &self.coeffs
    }

    pub fn eval(&self, xi: C64) -> CMatrix {
        let mut out = CMatrix::zeros(self.m, self.d);
        for c in self.coeffs.iter().rev() {
            out = out * xi + c;
        }
        out
    }

    /// `∫ B*B ξ̄ⁿ dm` for `n ∈ ℤ`.
    pub fn moment(&self, n: i64) -> CMatrix {
        let mut out = CMatrix::zeros(self.d, self.d);
        for (k, bk) in self.coeffs.iter().enumerate() {
            for (l, bl) in self.coeffs.iter().enumerate() {
                if l as i64 - k as i64 == n {
                    out += bk.adjoint() * bl;
                }
            }
        }
        out
    }

    pub fn isometry_residual(&self) -> f64 {
        op_norm(&(self.moment(0) - eye(self.d)))
    }

    /// Equispaced quadrature of `N` atoms (offset by half a step) with
    /// weights `1/N`; exact for the isometry condition when `N > 2·degree`.
    pub fn quadrature(&self, n_atoms: usize) -> SpectralMeasure {
        let atoms = (0..n_atoms)
            .map(|k| {
                let turns = (k as f64 + 0.5) / n_atoms as f64;
                let xi = C64::from_polar(1.0, std::f64::consts::TAU * turns);
                Atom::new(xi, 1.0 / n_atoms as f64, self.eval(xi))
            })
            .collect();
        SpectralMeasure::new(atoms, self.d).unwrap().mark_ac_approximation()
    }
}
