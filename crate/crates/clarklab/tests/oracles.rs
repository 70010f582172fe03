//! Checks against independently derived values.

use clarklab::charfn::{CharFnEvaluator, ThetaMethod};
use clarklab::clark::{assemble_clark, phi_direct, phi_star_universal, psi2_eval, TrigPoly};
use clarklab::dilation::{build_dilation, dilation_property_check};
use clarklab::linalg::{eye, herm_sqrt, mat_pow, HermMatrix, PSD_TOL};
use clarklab::measure::TrigDensity;
use clarklab::model::{theta_coefficients_auto, ModelSpace};
use clarklab::perturbation::{build_t, ContractionParam, GammaDefects};
use clarklab::scenario::{random_gamma, random_scenario, s1, s2, s3, Scenario};
use clarklab::{CMatrix, CVector, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn scalar_gamma(g: C64) -> ContractionParam {
    ContractionParam::new(CMatrix::from_element(1, 1, g)).unwrap()
}

fn model(s: &Scenario) -> (CharFnEvaluator, ModelSpace) {
    let ev = CharFnEvaluator::new(&s.measure, &s.gamma).unwrap();
    let th = theta_coefficients_auto(&ev).unwrap();
    let ms = ModelSpace::build(th, &GammaDefects::new(&s.gamma).unwrap(), s.n()).unwrap();
    (ev, ms)
}

/// Taylor coefficients from the realization `θ(z) = −B*TU*B + zB*D_{T*}(I − zT*)⁻¹D_TU*B`.
fn realization_coefficients(s: &Scenario, k: usize) -> Vec<CMatrix> {
    let e = s.measure.embed();
    let op = build_t(&e, &s.gamma).unwrap();
    let n = s.n();
    let t = &op.t;
    let d_t = herm_sqrt(&HermMatrix::symmetrized(eye(n) - t.adjoint() * t), PSD_TOL).unwrap();
    let d_ts = herm_sqrt(&HermMatrix::symmetrized(eye(n) - t * t.adjoint()), PSD_TOL).unwrap();
    let b = &e.b_emb;
    let ub = e.u.adjoint() * b;
    let mut out = vec![-(b.adjoint() * t * &ub)];
    for j in 1..=k {
        out.push(b.adjoint() * &d_ts * mat_pow(&t.adjoint(), j - 1) * &d_t * &ub);
    }
    out
}

#[test]
fn series_matches_realization() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = random_gamma(&mut rng, 2, 0.3, 0.7);
    for s in [s3().with_gamma(g), random_scenario(2), random_scenario(8)] {
        let ev = CharFnEvaluator::new(&s.measure, &s.gamma).unwrap();
        let th = theta_coefficients_auto(&ev).unwrap();
        let oracle = realization_coefficients(&s, 40);
        for (j, c) in oracle.iter().enumerate() {
            assert!((th.coeff(j) - c).norm() < 1e-10, "{} coefficient {j}", s.name);
        }
    }
}

#[test]
fn one_atom_mobius() {
    let g = C64::new(0.3, -0.4);
    let s = s1().with_gamma(scalar_gamma(g));
    let ev = CharFnEvaluator::new(&s.measure, &s.gamma).unwrap();
    for z in [C64::new(0.1, 0.2), C64::new(-0.7, 0.1), C64::new(0.0, 0.95)] {
        let expected = (z - g) / (C64::from(1.0) - g.conj() * z);
        for m in [ThetaMethod::Resolvent, ThetaMethod::Cauchy] {
            assert!((ev.theta(z, m).unwrap()[(0, 0)] - expected).norm() < 1e-13);
        }
    }
}

#[test]
fn parametrizing_sup_norm_exceeds_one() {
    // C(z) = √(1 − |γ|²)/(1 − γ̄z) for one atom; at γ = ½ the sup is √3.
    let s = s1().with_gamma(scalar_gamma(C64::from(0.5)));
    let (_, ms) = model(&s);
    let (sup_c, sup_cs) = ms.c_sup_norms(4096);
    assert!((sup_c - 3f64.sqrt()).abs() < 1e-5, "{sup_c}");
    assert!(sup_cs > 1.0);
    let bound = (1.5f64 / 0.5).sqrt();
    assert!(sup_c <= bound * (1.0 + 1e-9));

    // With Γ = 0 both are inner-valued isometries.
    let (_, ms) = model(&random_scenario(6).with_gamma(ContractionParam::zero(random_scenario(6).d())));
    let (a, b) = ms.c_sup_norms(2048);
    assert!((a - 1.0).abs() < 1e-8 && (b - 1.0).abs() < 1e-8);
}

#[test]
fn two_atom_clark_matrix() {
    let s = s2();
    let (ev, ms) = model(&s);
    let pair = assemble_clark(&ev, &ms).unwrap();
    // Up to basis phases the matrix is the 2×2 DFT / √2.
    for v in pair.matrix.iter() {
        assert!((v.norm() - 0.5f64.sqrt()).abs() < 1e-12);
    }
    let x = CMatrix::from_column_slice(2, 1, &[C64::from(0.5f64.sqrt()), C64::from(-(0.5f64.sqrt()))]);
    let img = pair.images.mul_right(&x);
    // f = (1, −1): 𝒞[fμ]/𝒞[μ] = (z/(1 − z²))/(1/(1 − z²)) = z.
    assert!((img.coeff(0)[(0, 0)] - C64::from(0.0)).norm() < 1e-12);
    assert!((img.coeff(1)[(0, 0)] - C64::from(1.0)).norm() < 1e-12);
}

#[test]
fn universal_formula_two_atoms() {
    let s = s2();
    let (_, ms) = model(&s);
    let a = CVector::from_element(1, C64::from(1.0));
    // h(ξ) = ξ̄: on ±1 this equals ξ, so the image is z again.
    let img = phi_star_universal(&ms, &s.measure, &TrigPoly::monomial(-1), &a).unwrap();
    assert!(img.negative_residual < 1e-12);
    assert!((img.rep.coeff(1)[(0, 0)] - C64::from(1.0)).norm() < 1e-12);
    assert!(img.rep.coeff(0).norm() < 1e-12);
}

#[test]
fn direct_recovery_three_atoms() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let s = s3().with_gamma(random_gamma(&mut rng, 2, 0.2, 0.6));
    let (ev, ms) = model(&s);
    let pair = assemble_clark(&ev, &ms).unwrap();
    let x = CVector::from_vec(vec![C64::new(0.2, 0.1), C64::new(-0.5, 0.0), C64::new(0.0, 0.7)]);
    let h = pair.images.mul_right(&CMatrix::from_column_slice(3, 1, x.as_slice()));
    let rec = phi_direct(&ev, &h).unwrap();
    assert!((rec.values - x).norm() < 1e-6);
}

#[test]
fn shift_pair_boundary_values() {
    let dens = TrigDensity::shift_pair();
    let ev = CharFnEvaluator::from_density(&dens, &ContractionParam::zero(2)).unwrap();
    let z = C64::new(0.3, -0.5);
    let f = ev.f(z).unwrap();
    let expected_f = CMatrix::from_row_slice(2, 2, &[C64::from(1.0), z, C64::from(0.0), C64::from(1.0)]);
    assert!((f - expected_f).norm() < 1e-13);
    let xi = C64::from_polar(1.0, 1.1);
    let psi = psi2_eval(&ev, xi).unwrap().tilde;
    let expected = CMatrix::from_row_slice(2, 2, &[C64::from(1.0), xi, C64::from(0.0), C64::from(0.0)]);
    assert!((&psi - expected).norm() < 1e-10);
    let kernel = CMatrix::from_column_slice(2, 1, &[-xi, C64::from(1.0)]);
    assert!((psi * kernel).norm() < 1e-10);
}

#[test]
fn dilation_examples() {
    // S2 with Γ = 0: every column except the last outgoing cell is a unit vector.
    let s = s2();
    let op = build_t(&s.measure.embed(), &s.gamma).unwrap();
    let dil = build_dilation(&op, 6).unwrap();
    let gram = dil.u.adjoint() * &dil.u;
    let last = dil.outgoing(5);
    for j in 0..dil.dim() {
        let expected = if j == last { 0.0 } else { 1.0 };
        assert!((gram[(j, j)].re - expected).abs() < 1e-14);
    }
    assert!(dil.isometry_residual() < 1e-14);

    // S3 with a random Γ against dense powers.
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let s = s3().with_gamma(random_gamma(&mut rng, 2, 0.3, 0.8));
    let op = build_t(&s.measure.embed(), &s.gamma).unwrap();
    let dil = build_dilation(&op, 8).unwrap();
    let h = dil.h_offset();
    let mut p = eye(dil.dim());
    for k in 1..=5 {
        p = &dil.u * p;
        let block = p.view((h, h), (3, 3)).into_owned();
        assert!((block - mat_pow(&op.t, k)).norm() < 1e-10);
    }
    let r = dilation_property_check(&dil, 5).unwrap();
    assert!(r.forward < 1e-10 && r.backward < 1e-10);
}
