use clarklab::cauchy::MatrixMeasure;
use clarklab::charfn::{lft_apply, CharFnEvaluator, LftDirection, ThetaMethod};
use clarklab::clark::compare_right_inverses;
use clarklab::dilation::{build_dilation, dilation_property_check};
use clarklab::linalg::{eye, herm_sqrt, op_norm, pinv, woodbury_inverse, HermMatrix, PSD_TOL, RANK_TOL};
use clarklab::measure::{FiberFunction, TrigDensity};
use clarklab::perturbation::{build_t, ContractionParam, GammaDefects};
use clarklab::scenario::{random_scenario, Scenario};
use clarklab::taylor::TaylorRep;
use clarklab::{CMatrix, CVector, C64};
use proptest::prelude::*;

fn cmatrix(rows: usize, cols: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), rows * cols)
        .prop_map(move |v| CMatrix::from_iterator(rows, cols, v.into_iter().map(|(a, b)| C64::new(a, b))))
}

fn square() -> impl Strategy<Value = CMatrix> {
    (1usize..6).prop_flat_map(|n| cmatrix(n, n))
}

fn disk_point(r_max: f64) -> impl Strategy<Value = C64> {
    (0.0f64..r_max, 0.0f64..std::f64::consts::TAU).prop_map(|(r, t)| C64::from_polar(r, t))
}

/// Scales `g` to have operator norm `target`.
fn with_norm(g: CMatrix, target: f64) -> CMatrix {
    let n = op_norm(&g);
    if n < 1e-12 {
        CMatrix::zeros(g.nrows(), g.ncols())
    } else {
        g * C64::from(target / n)
    }
}

fn scenario_with(seed: u64, g: Option<(CMatrix, f64)>) -> Scenario {
    let s = random_scenario(seed);
    match g {
        Some((m, norm)) => {
            let d = s.d();
            let m = with_norm(m.view((0, 0), (d, d)).into_owned(), norm);
            s.with_gamma(ContractionParam::new(m).unwrap())
        }
        None => s,
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn sqrt_squares_back(x in square()) {
        let a = &x * x.adjoint();
        let s = herm_sqrt(&HermMatrix::symmetrized(a.clone()), PSD_TOL).unwrap();
        prop_assert!((&s - s.adjoint()).norm() < 1e-12);
        prop_assert!((&s * &s - &a).norm() < 1e-10 * (1.0 + a.norm()));
        let (vals, _) = HermMatrix::symmetrized(s).eigen();
        prop_assert!(vals.iter().all(|v| *v > -1e-10));
    }

    #[test]
    fn penrose_identities(x in (1usize..5, 1usize..5).prop_flat_map(|(r, c)| cmatrix(r, c))) {
        let p = pinv(&x, RANK_TOL);
        prop_assert!((&x * &p * &x - &x).norm() < 1e-9);
        prop_assert!((&p * &x * &p - &p).norm() < 1e-9 * (1.0 + p.norm()));
        let xp = &x * &p;
        let px = &p * &x;
        prop_assert!((&xp - xp.adjoint()).norm() < 1e-9);
        prop_assert!((&px - px.adjoint()).norm() < 1e-9);
    }

    #[test]
    fn woodbury_matches_dense(
        (c, d, b) in (2usize..7, 1usize..4).prop_flat_map(|(n, k)| (cmatrix(n, k), cmatrix(k, k), cmatrix(k, n)))
    ) {
        let n = c.nrows();
        let dense = eye(n) - &c * &d * &b;
        prop_assume!(clarklab::linalg::condition(&dense) < 1e6);
        let w = woodbury_inverse(&c, &d, &b).unwrap();
        prop_assert!((&dense * &w - eye(n)).norm() < 1e-8);
    }

    #[test]
    fn lft_round_trip(t in cmatrix(2, 2), g in cmatrix(2, 2), s in 0.0f64..0.95, gn in 0.0f64..0.8) {
        let theta = with_norm(t, s);
        let param = ContractionParam::new(with_norm(g, gn)).unwrap();
        let gd = GammaDefects::new(&param).unwrap();
        let fwd = lft_apply(LftDirection::ZeroToGamma, &theta, &gd).unwrap();
        let back = lft_apply(LftDirection::GammaToZero, &fwd.value, &gd).unwrap();
        prop_assert!(op_norm(&(&back.value - &theta)) < 1e-10);
        prop_assert!(fwd.spread() < 1e-11 && back.spread() < 1e-11);
        // Strict contractions map to strict contractions.
        prop_assert!(op_norm(&fwd.value) < 1.0);
    }

    #[test]
    fn taylor_product_evaluates_pointwise(a in cmatrix(2, 2), b in cmatrix(2, 2), z in disk_point(0.9)) {
        let k = 12;
        let fa = TaylorRep::new((0..=k).map(|i| &a * C64::from(0.5f64.powi(i as i32))).collect());
        let fb = TaylorRep::new((0..=k).map(|i| &b * C64::from((-0.3f64).powi(i as i32))).collect());
        let full = fa.mul(&fb);
        // Products are truncated at degree k; compare against the truncated
        // Cauchy product evaluated directly.
        let mut expected = CMatrix::zeros(2, 2);
        for i in 0..=k {
            for j in 0..=(k - i) {
                expected += fa.coeff(i) * fb.coeff(j) * z.powu((i + j) as u32);
            }
        }
        prop_assert!((full.eval(z) - expected).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn embedding_is_isometric(seed in 0u64..10_000) {
        let s = random_scenario(seed);
        let e = s.measure.embed();
        prop_assert!((e.b_emb.adjoint() * &e.b_emb - eye(s.d())).norm() < 1e-12);
        prop_assert!((e.u.adjoint() * &e.u - eye(s.n())).norm() < 1e-12);
    }

    #[test]
    fn perturbation_is_contraction(seed in 0u64..10_000, g in cmatrix(3, 3), gn in 0.0f64..0.99) {
        let s = scenario_with(seed, Some((g, gn)));
        let op = build_t(&s.measure.embed(), &s.gamma).unwrap();
        prop_assert!(op_norm(&op.t) <= 1.0 + 1e-12);
        prop_assert!(op.defect_route_residual < 1e-8);
        // T and U agree on the orthogonal complement of Ran B.
        let e = s.measure.embed();
        let p = eye(s.n()) - &e.b_emb * e.b_emb.adjoint();
        prop_assert!((&p * (&op.t - &e.u)).norm() < 1e-12);
    }

    #[test]
    fn commutation_with_defects(seed in 0u64..10_000, g in cmatrix(3, 3), gn in 0.0f64..0.9) {
        let s = scenario_with(seed, Some((g, gn)));
        let op = build_t(&s.measure.embed(), &s.gamma).unwrap();
        let t = &op.t;
        prop_assert!((t * &op.defects.d_t - &op.defects.d_t_star * t).norm() < 1e-10);
    }

    #[test]
    fn charfn_identities(seed in 0u64..10_000, g in cmatrix(3, 3), gn in 0.0f64..0.8, z in disk_point(0.9)) {
        let s = scenario_with(seed, Some((g, gn)));
        let ev = CharFnEvaluator::new(&s.measure, &s.gamma).unwrap();
        let a = ev.theta(z, ThetaMethod::Resolvent).unwrap();
        let b = ev.theta(z, ThetaMethod::Cauchy).unwrap();
        prop_assert!(op_norm(&(&a - &b)) < 1e-9);
        prop_assert!(op_norm(&b) < 1.0 + 1e-12);
        prop_assert!(ev.f_identity_residual(z).unwrap() < 1e-10);
        prop_assert!(ev.delta_relation_check(z).unwrap() < 1e-9);
        prop_assert!(ev.ac_identity_residual(z).unwrap() < 1e-10);
    }

    #[test]
    fn cauchy_transform_is_linear(seed in 0u64..10_000, z in disk_point(0.9), w in (-2.0f64..2.0, -2.0f64..2.0)) {
        let s = random_scenario(seed);
        let mm = MatrixMeasure::new(&s.measure);
        let x = CVector::from_fn(s.n(), |i, _| C64::new((i as f64).cos(), 0.3 * i as f64));
        let y = CVector::from_fn(s.n(), |i, _| C64::new(0.1 * i as f64, (i as f64).sin()));
        let w = C64::new(w.0, w.1);
        let cf = |v: &CVector| mm.cauchy_of(&FiberFunction::from_embedded(&s.measure, v), z).unwrap();
        let lhs = cf(&(&x + &y * w));
        prop_assert!((lhs - (cf(&x) + cf(&y) * w)).norm() < 1e-12);
    }

    #[test]
    fn dilation_compresses_to_powers(seed in 0u64..10_000, g in cmatrix(3, 3), gn in 0.0f64..0.9, cells in 1usize..9) {
        let s = scenario_with(seed, Some((g, gn)));
        let op = build_t(&s.measure.embed(), &s.gamma).unwrap();
        let dil = build_dilation(&op, cells).unwrap();
        let r = dilation_property_check(&dil, cells - 1).unwrap();
        prop_assert!(r.forward < 1e-10 && r.backward < 1e-10);
        prop_assert!(dil.isometry_residual() < 1e-12);
        prop_assert!(dilation_property_check(&dil, cells).is_err());
    }

    #[test]
    fn scenario_json_round_trip(seed in 0u64..10_000) {
        let s = random_scenario(seed);
        let back = Scenario::from_json(&s.to_json()).unwrap();
        prop_assert_eq!(back.n(), s.n());
        prop_assert!((back.measure.embed().b_emb - s.measure.embed().b_emb).norm() < 1e-14);
        prop_assert!((back.gamma.gamma() - s.gamma.gamma()).norm() < 1e-15);
    }

    #[test]
    fn psi2_ignores_kernel_directions(t in 0.0f64..1.0, x in cmatrix(2, 1), gn in 0.0f64..0.8, g in cmatrix(2, 2)) {
        let dens = TrigDensity::shift_pair();
        let param = ContractionParam::new(with_norm(g, gn)).unwrap();
        let ev = CharFnEvaluator::from_density(&dens, &param).unwrap();
        let xi = C64::from_polar(1.0, std::f64::consts::TAU * t);
        let psi = clarklab::clark::psi2_eval(&ev, xi).unwrap();
        let cmp = compare_right_inverses(&psi.tilde, &dens.eval(xi), &(x * C64::from(5.0)));
        prop_assert_eq!(cmp.kernel_dim, 1);
        prop_assert!(cmp.residual < 1e-10 && cmp.right_inverse_residual < 1e-10);
        prop_assert!(clarklab::clark::psi2_gram_residual(&psi.tilde, &dens.eval(xi)) < 1e-10);
    }
}

#[test]
fn unitary_gamma_keeps_unitarity() {
    let s = random_scenario(3);
    let d = s.d();
    // A unitary Γ makes T unitary.
    let h = HermMatrix::symmetrized(CMatrix::from_fn(d, d, |i, j| C64::new((i + j) as f64, i as f64 - j as f64)));
    let (_, q) = h.eigen();
    let op = build_t(&s.measure.embed(), &ContractionParam::new(q).unwrap()).unwrap();
    assert!((op.t.adjoint() * &op.t - eye(s.n())).norm() < 1e-10);
}
