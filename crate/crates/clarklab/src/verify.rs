//! Verification suites producing deterministic JSON reports.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cauchy::{OffsetGrid, Side};
use crate::charfn::{lft_apply, CharFnEvaluator, LftDirection, ThetaMethod};
use crate::clark::{
    ac_part_identity_residuals, assemble_clark, compare_right_inverses, phi_direct, phi_star_matrix_at,
    phi_star_universal, psi2_eval, psi2_gram_residual, psi_pm_split, sio_bounds, ClarkPair, TrigPoly,
};
use crate::dilation::{build_dilation, defect_block_residual, dilation_property_check};
use crate::error::{ClarkError, Result};
use crate::linalg::{op_norm, CMatrix, CVector, C64};
use crate::measure::TrigDensity;
use crate::model::{theta_coefficients_auto, ModelSpace};
use crate::perturbation::{build_t, ContractionParam, GammaDefects};
use crate::scenario::Scenario;

pub const TOL_ENV: &str = "CLARKLAB_TOL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Charfn,
    Model,
    Clark,
    Dilation,
    Sio,
}

impl std::str::FromStr for Suite {
    type Err = ClarkError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => Suite::All,
            "charfn" => Suite::Charfn,
            "model" => Suite::Model,
            "clark" => Suite::Clark,
            "dilation" => Suite::Dilation,
            "sio" => Suite::Sio,
            other => return Err(ClarkError::DimensionMismatch(format!("unknown suite `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check_id: String,
    pub anchor: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub scenario: String,
    pub suite: Suite,
    pub seed: u64,
    pub tolerance_scale: f64,
    pub version: &'static str,
    pub n: usize,
    pub d: usize,
    pub records: Vec<CheckRecord>,
    pub pass: bool,
}

impl Report {
    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.pass)
    }
}

/// Tolerance multiplier from the environment, 1 when unset or unparsable.
pub fn env_tolerance_scale() -> f64 {
    std::env::var(TOL_ENV).ok().and_then(|v| v.parse::<f64>().ok()).filter(|v| *v > 0.0).unwrap_or(1.0)
}

struct Recorder {
    scale: f64,
    records: Vec<CheckRecord>,
}

impl Recorder {
    fn push(&mut self, id: &str, anchor: &str, tol: f64, residual: Result<f64>) {
        let tolerance = tol * self.scale;
        let rec = match residual {
            Ok(r) => CheckRecord {
                check_id: id.into(),
                anchor: anchor.into(),
                residual: r,
                tolerance,
                pass: r.is_finite() && r <= tolerance,
                error: None,
            },
            Err(e) => CheckRecord {
                check_id: id.into(),
                anchor: anchor.into(),
                residual: f64::INFINITY,
                tolerance,
                pass: false,
                error: Some(e.to_string()),
            },
        };
        self.records.push(rec);
    }
}

fn max_over<T>(items: impl IntoIterator<Item = T>, mut f: impl FnMut(T) -> Result<f64>) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for it in items {
        worst = worst.max(f(it)?);
    }
    Ok(worst)
}

/// Uniform points in the disk of radius `r_max`.
pub fn interior_points(rng: &mut ChaCha8Rng, count: usize, r_max: f64) -> Vec<C64> {
    (0..count)
        .map(|_| {
            let r = r_max * rng.random::<f64>().sqrt();
            C64::from_polar(r, std::f64::consts::TAU * rng.random::<f64>())
        })
        .collect()
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

/// Cached objects shared between suites.
struct Pipeline<'a> {
    scenario: &'a Scenario,
    ev: CharFnEvaluator,
    model: Option<std::result::Result<(ModelSpace, ClarkPair), String>>,
}

impl Pipeline<'_> {
    fn inner(&mut self) -> Result<&(ModelSpace, ClarkPair)> {
        if self.model.is_none() {
            let built = (|| {
                let th = theta_coefficients_auto(&self.ev)?;
                let ms = ModelSpace::build(th, &GammaDefects::new(&self.scenario.gamma)?, self.scenario.n())?;
                let pair = assemble_clark(&self.ev, &ms)?;
                Ok::<_, ClarkError>((ms, pair))
            })();
            self.model = Some(built.map_err(|e| e.to_string()));
        }
        match self.model.as_ref().expect("just set") {
            Ok(v) => Ok(v),
            Err(e) => Err(ClarkError::NotInner(e.clone())),
        }
    }
}

pub fn run_suite(scenario: &Scenario, suite: Suite, seed: u64) -> Result<Report> {
    run_suite_scaled(scenario, suite, seed, env_tolerance_scale())
}

pub fn run_suite_scaled(scenario: &Scenario, suite: Suite, seed: u64, env_scale: f64) -> Result<Report> {
    let ev = CharFnEvaluator::new(&scenario.measure, &scenario.gamma)?;
    let scale = env_scale * scenario.tolerance_scale;
    let mut rec = Recorder { scale, records: Vec::new() };
    let mut pipe = Pipeline { scenario, ev, model: None };
    let want = |s: Suite| suite == Suite::All || suite == s;
    if want(Suite::Charfn) {
        charfn_checks(&mut rec, &pipe.ev, seed);
    }
    if want(Suite::Model) {
        model_checks(&mut rec, &mut pipe);
    }
    if want(Suite::Clark) {
        clark_checks(&mut rec, &mut pipe, seed);
    }
    if want(Suite::Dilation) {
        dilation_checks(&mut rec, scenario);
    }
    if want(Suite::Sio) {
        sio_checks(&mut rec, &pipe.ev, seed);
    }
    let pass = rec.records.iter().all(|r| r.pass);
    Ok(Report {
        scenario: scenario.name.clone(),
        suite,
        seed,
        tolerance_scale: scale,
        version: env!("CARGO_PKG_VERSION"),
        n: scenario.n(),
        d: scenario.d(),
        records: rec.records,
        pass,
    })
}

fn charfn_checks(rec: &mut Recorder, ev: &CharFnEvaluator, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = interior_points(&mut rng, 50, 0.9);
    let few = &pts[..20];
    rec.push(
        "charfn.cross_formula",
        "resolvent realization vs Cauchy-integral formula for the characteristic function",
        1e-9,
        max_over(&pts, |&z| {
            Ok(op_norm(&(ev.theta(z, ThetaMethod::Resolvent)? - ev.theta(z, ThetaMethod::Cauchy)?)))
        }),
    );
    rec.push(
        "charfn.value_at_origin",
        "characteristic function at 0 equals minus the contraction parameter",
        1e-12,
        ev.theta(C64::from(0.0), ThetaMethod::Cauchy).map(|t| op_norm(&(t + ev.gamma()))),
    );
    rec.push(
        "charfn.theta_zero_forms",
        "unperturbed characteristic function via F1 and F2, left and right quotients",
        1e-10,
        max_over(few, |&z| Ok(ev.theta_zero_formulas(z)?.spread())),
    );
    rec.push(
        "charfn.f_identity",
        "F(I - theta_0) = I",
        1e-10,
        max_over(few, |&z| ev.f_identity_residual(z)),
    );
    let g = ev.defects();
    let zero = GammaDefects::new(&ContractionParam::zero(ev.d()));
    rec.push(
        "charfn.lft_round_trip",
        "linear fractional map zero -> Gamma -> zero is the identity",
        1e-10,
        max_over(few, |&z| {
            let t0 = ev.theta_zero(z)?;
            let tg = lft_apply(LftDirection::ZeroToGamma, &t0, g)?.value;
            let back = lft_apply(LftDirection::GammaToZero, &tg, g)?.value;
            let direct = ev.theta(z, ThetaMethod::Cauchy)?;
            Ok(op_norm(&(back - t0)).max(op_norm(&(tg - direct))))
        }),
    );
    rec.push(
        "charfn.lft_forms",
        "additive and factored forms of the linear fractional map agree",
        1e-11,
        max_over(few, |&z| {
            let t0 = ev.theta_zero(z)?;
            let a = lft_apply(LftDirection::ZeroToGamma, &t0, g)?;
            let b = lft_apply(LftDirection::GammaToZero, &a.value, g)?;
            Ok(a.spread().max(b.spread()))
        }),
    );
    rec.push(
        "charfn.zero_parameter_lft",
        "linear fractional map with zero parameter is the identity",
        1e-12,
        zero.and_then(|z0| {
            max_over(few, |&z| {
                let t0 = ev.theta_zero(z)?;
                Ok(op_norm(&(lft_apply(LftDirection::ZeroToGamma, &t0, &z0)?.value - t0)))
            })
        }),
    );
    rec.push(
        "charfn.defect_relation",
        "defect of theta_Gamma through the defect of theta_0",
        1e-9,
        max_over(few, |&z| ev.delta_relation_check(z)),
    );
    rec.push(
        "charfn.ac_identity",
        "(I - theta_0*) P (I - theta_0) = I - theta_0* theta_0 with P the Poisson extension",
        1e-10,
        max_over(few, |&z| ev.ac_identity_residual(z)),
    );
}

fn model_checks(rec: &mut Recorder, pipe: &mut Pipeline) {
    let built = pipe.inner();
    let ms = match built {
        Ok((ms, _)) => ms,
        Err(e) => {
            rec.push("model.build", "orthonormal basis of the model space", 0.0, Err(e));
            return;
        }
    };
    let s = ms.gamma.gamma.clone();
    let gnorm = op_norm(&s);
    let (a, b) = ms.intertwining_residuals();
    let (x, y) = ms.defect_range_angles();
    let (sup_c, sup_cs) = ms.c_sup_norms(1024);
    let bound = ((1.0 + gnorm) / (1.0 - gnorm)).sqrt() * (1.0 + 1e-9);
    let checks: [(&str, &str, f64, f64); 12] = [
        ("model.tail", "truncation tail of the characteristic function series", 1e-10, ms.theta.series.tail_bound),
        ("model.inner", "boundary values of theta are unitary", 1e-8, ms.theta.boundary_unitarity),
        ("model.gram", "basis is orthonormal", 1e-10, ms.gram_residual),
        ("model.orthogonality", "basis is orthogonal to theta H2", 1e-9, ms.orthogonality_residual()),
        ("model.c_isometry", "C and C_* are isometries into the model space", 1e-8, ms.isometry_residual()),
        ("model.intertwine_c", "M_theta C = C_* Gamma", 1e-8, a),
        ("model.intertwine_c_star", "M_theta* C_* = C Gamma*", 1e-8, b),
        ("model.resolution", "model operator resolved through shift and parametrizing operators", 1e-8, ms.resolution_residual()),
        ("model.defect_commutation", "I - M M* acts as evaluation at 0 followed by projection", 1e-8, ms.defect_commutation_residual()),
        ("model.defect_ranges", "ranges of C, C_* are the defect spaces of M_theta", 1e-7, x.max(y)),
        ("model.contraction", "model operator is a contraction", 1e-10, (ms.m_norm() - 1.0).max(0.0)),
        ("model.c_sup_bound", "pointwise norm of C, C_* below sqrt((1+|Gamma|)/(1-|Gamma|))", 0.0, (sup_c.max(sup_cs) - bound).max(0.0)),
    ];
    for (id, anchor, tol, r) in checks {
        rec.push(id, anchor, tol, Ok(r));
    }
}

fn clark_checks(rec: &mut Recorder, pipe: &mut Pipeline, seed: u64) {
    let ev = pipe.ev.clone();
    let measure = pipe.scenario.measure.clone();
    let (ms, pair) = match pipe.inner() {
        Ok(v) => v,
        Err(e) => {
            rec.push("clark.build", "adjoint Clark operator in model coordinates", 0.0, Err(e));
            return;
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let (n, d) = (measure.n(), measure.d());
    let emb = measure.embed();
    rec.push("clark.unitarity", "adjoint Clark operator is unitary", 1e-8, Ok(pair.unitarity));
    rec.push("clark.intertwining", "M_theta Phi* = Phi* T", 1e-8, Ok(pair.intertwining));
    rec.push("clark.agreement_c", "Phi* U* B = C", 1e-8, Ok(pair.agreement_c));
    rec.push("clark.agreement_c_star", "Phi* B = C_*", 1e-8, Ok(pair.agreement_c_star));
    rec.push("clark.membership", "images of Phi* lie in the model space", 1e-8, Ok(pair.membership));
    let pts = interior_points(&mut rng, 20, 0.9);
    rec.push(
        "clark.normalized_cauchy",
        "normalized Cauchy transform matches the assembled Phi* columns pointwise",
        1e-8,
        {
            let assembled = ms.from_coords(&pair.matrix);
            max_over(&pts, |&z| {
                let direct = phi_star_matrix_at(&ev, &emb, z)?;
                Ok((&direct - pair.images.eval(z)).norm().max((direct - assembled.eval(z)).norm()))
            })
        },
    );
    let x = random_vector(&mut rng, n);
    let y = pair.adjoint_apply(&x);
    let h = ms.from_coords(&CMatrix::from_column_slice(n, 1, y.as_slice()));
    rec.push(
        "clark.direct_recovery",
        "atom values recovered by radial limits match Phi = (Phi*)*",
        1e-6,
        phi_direct(&ev, &h).map(|r| (r.values - pair.direct_apply(&y)).norm()),
    );
    let a = random_vector(&mut rng, d);
    let hp = TrigPoly::new(-3, (0..7).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect());
    rec.push(
        "clark.universal",
        "universal representation of Phi* on trigonometric multiples of B a",
        1e-8,
        phi_star_universal(ms, &measure, &hp, &a).map(|img| {
            let xv = hp.times_range(&measure, &a);
            let exp = pair.images.mul_right(&CMatrix::from_column_slice(n, 1, xv.as_slice()));
            img.rep.sub(&exp).norm().max(img.negative_residual)
        }),
    );
    let hf = pair.images.mul_right(&CMatrix::from_column_slice(n, 1, x.as_slice()));
    let grid = OffsetGrid::for_measure(7, &measure);
    let bpts = grid.points();
    rec.push(
        "clark.psi_pm",
        "Phi* f = C_1 T_(+-) f + Psi_(+-) f on the boundary, Psi_(+-) = 0 for inner theta",
        1e-7,
        max_over([Side::Inside, Side::Outside], |side| {
            let r = psi_pm_split(&ev, &x, &hf, side, &bpts)?;
            Ok(r.total_residual.max(r.psi_norm))
        }),
    );
    let zs = interior_points(&mut rng, 10, 0.9);
    rec.push(
        "clark.psi_one",
        "(I + theta Gamma*) D_Gamma*^{-1} = C_1 F",
        1e-9,
        max_over(&zs, |&z| Ok(crate::clark::c1_cstar_eval(&ev, z)?.psi1_residual)),
    );
    rec.push(
        "clark.psi_two_forms",
        "two algebraic forms of Psi_2",
        1e-9,
        max_over(&zs, |&z| Ok(psi2_eval(&ev, z)?.form_spread)),
    );
    let (t, s) = (random_vector(&mut rng, d), random_vector(&mut rng, d));
    rec.push(
        "clark.ac_part_identity",
        "interior identity behind the absolutely continuous part of Phi",
        1e-8,
        max_over(&zs, |&z| {
            let (r1, r2) = ac_part_identity_residuals(&ev, z, &t, &s)?;
            Ok(r1.max(r2))
        }),
    );
}

fn dilation_checks(rec: &mut Recorder, scenario: &Scenario) {
    let built = build_t(&scenario.measure.embed(), &scenario.gamma).and_then(|op| Ok((build_dilation(&op, 8)?, op)));
    let (dil, op) = match built {
        Ok(v) => v,
        Err(e) => {
            rec.push("dilation.build", "truncated minimal unitary dilation", 0.0, Err(e));
            return;
        }
    };
    let res = dilation_property_check(&dil, 5);
    rec.push("dilation.forward", "P_H U^n |_H = T^n", 1e-10, res.as_ref().map(|r| r.forward).map_err(Clone::clone));
    rec.push("dilation.backward", "P_H U*^n |_H = T*^n", 1e-10, res.map(|r| r.backward));
    rec.push("dilation.isometry", "dilation is isometric away from the truncation edge", 1e-12, Ok(dil.isometry_residual()));
    rec.push("dilation.coisometry", "dilation is co-isometric away from the truncation edge", 1e-12, Ok(dil.coisometry_residual()));
    rec.push("dilation.defect_block", "incoming coupling equals D_T* B", 1e-12, defect_block_residual(&dil, &op));
}

fn sio_checks(rec: &mut Recorder, ev: &CharFnEvaluator, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let n = ev.measure().map_or(0, |m| m.n());
    let samples: Vec<CVector> = (0..50).map(|_| random_vector(&mut rng, n)).collect();
    let b = sio_bounds(ev, 2048, 64, &[0.5, 0.9, 0.99, 1.01, 1.5], &samples);
    let limit = 2.0 * (1.0 + 1e-3);
    let (p, r) = match b {
        Ok(b) => (Ok(b.partial_sum_ratio), Ok(b.radius_ratio)),
        Err(e) => (Err(e.clone()), Err(e)),
    };
    rec.push("sio.partial_sums", "C_1 P_n bounded by 2 uniformly in n", limit, p);
    rec.push("sio.radii", "C_1 T_r bounded by 2 uniformly in r", limit, r);
}

/// Checks of `Ψ₂` for an absolutely continuous trigonometric density whose
/// fibers are smaller than `d`, at `count` boundary points.
pub fn density_psi2_checks(density: &TrigDensity, gamma: &ContractionParam, count: usize, seed: u64) -> Result<Vec<CheckRecord>> {
    let ev = CharFnEvaluator::from_density(density, gamma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rec = Recorder { scale: env_tolerance_scale(), records: Vec::new() };
    let d = density.d();
    let pts: Vec<C64> = (0..count).map(|_| C64::from_polar(1.0, std::f64::consts::TAU * rng.random::<f64>())).collect();
    let xs: Vec<CMatrix> = pts
        .iter()
        .map(|_| CMatrix::from_fn(d, density.fiber_dim(), |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * 4.0))
        .collect();
    let mut kernel_dim = usize::MAX;
    rec.push(
        "psi2.right_inverse",
        "Psi_2 does not depend on the choice of right inverse",
        1e-10,
        max_over(pts.iter().zip(&xs), |(&xi, x)| {
            let psi = psi2_eval(&ev, xi)?.tilde;
            let cmp = compare_right_inverses(&psi, &density.eval(xi), x);
            kernel_dim = kernel_dim.min(cmp.kernel_dim);
            Ok(cmp.residual.max(cmp.right_inverse_residual))
        }),
    );
    rec.push(
        "psi2.rank_deficient",
        "fibers have nontrivial kernel so the right inverse is not unique",
        0.0,
        Ok(if kernel_dim >= 1 && kernel_dim != usize::MAX { 0.0 } else { 1.0 }),
    );
    rec.push(
        "psi2.gram",
        "Psi_2* Psi_2 = B* B on the boundary",
        1e-10,
        max_over(&pts, |&xi| Ok(psi2_gram_residual(&psi2_eval(&ev, xi)?.tilde, &density.eval(xi)))),
    );
    rec.push(
        "psi2.forms",
        "two algebraic forms of Psi_2 on the boundary",
        1e-10,
        max_over(&pts, |&xi| Ok(psi2_eval(&ev, xi)?.form_spread)),
    );
    rec.push(
        "psi2.f_identity",
        "F(I - theta_0) = I for the density",
        1e-10,
        max_over(&pts, |&xi| ev.f_identity_residual(xi * 0.9)),
    );
    rec.push(
        "psi2.ac_identity",
        "(I - theta_0*) P (I - theta_0) = I - theta_0* theta_0 for the density",
        1e-10,
        max_over(&pts, |&xi| ev.ac_identity_residual(xi * 0.9)),
    );
    Ok(rec.records)
}

/// `max ‖Ψ̃₂(rξ)‖` difference between an `N`-atom quadrature of the density
/// and the exact density, both at `rξ`. Comparing against the exact boundary
/// value instead would add the `O(√(1 − r))` radial error of `Δ`.
pub fn density_quadrature_gap(density: &TrigDensity, gamma: &ContractionParam, atoms: usize, r: f64, points: &[C64]) -> Result<f64> {
    let exact = CharFnEvaluator::from_density(density, gamma)?;
    let proxy = CharFnEvaluator::new(&density.quadrature(atoms), gamma)?;
    max_over(points, |&xi| {
        let a = psi2_eval(&exact, xi * r)?.tilde;
        let b = psi2_eval(&proxy, xi * r)?.tilde;
        Ok(op_norm(&(a - b)))
    })
}
