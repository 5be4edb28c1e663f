use std::f64::consts::PI;

use proptest::prelude::*;
use sectoria::linalg::{c, diag_real, identity, solve_vec, vec_rel_diff};
use sectoria::model::{
    alpha_independence_check, boundary_pairing, cauchy_transform, char_fn, char_fn_spectrum_check, control_map,
    ctr_intertwining_check, default_battery, hankel_apply, inv_char_fn, kernel_check, model_resolvent,
    obs_intertwining_check, observation_map, pairing, pairing_residue_check, theta_robustness_check,
    verify_factorization, w1_values, BoundaryFunction, CharFn, EvalSet, ObservationMap, RationalFunction, Side,
    DEFAULT_MARGIN,
};
use sectoria::operator::resolvent;
use sectoria::spectral::spectral_function;
use sectoria::{make_family, CVector, Contour, FamilySpec, QuadConfig, RadialGrid, SectorialOperator, C64};

fn op(values: &[f64]) -> SectorialOperator {
    SectorialOperator::new(diag_real(values), "diag").unwrap()
}

fn cfg() -> QuadConfig {
    QuadConfig::default()
}

fn v(xs: &[(f64, f64)]) -> CVector {
    CVector::from_vec(xs.iter().map(|&(a, b)| c(a, b)).collect())
}

fn basis(n: usize, k: usize) -> CVector {
    let mut x = CVector::zeros(n);
    x[k] = c(1.0, 0.0);
    x
}

fn u(lambda: C64, x: CVector) -> RationalFunction {
    RationalFunction::resolvent_kernel(lambda, x)
}

fn boundary_points(theta: f64, n: usize) -> Vec<C64> {
    (0..n)
        .map(|k| {
            let r = 10f64.powf(-3.0 + 6.0 * (k / 2) as f64 / (n / 2) as f64);
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            C64::from_polar(r, s * theta)
        })
        .collect()
}

#[test]
fn char_fn_values() {
    let a = SectorialOperator::new(identity(2) * c(3.0, 0.0), "3I").unwrap();
    let cf = CharFn::new(&a, 0.5, &cfg()).unwrap();
    assert!(char_fn(&cf, c(3.0, 0.0)).unwrap().norm() < 1e-12);

    let i = SectorialOperator::new(identity(1), "I").unwrap();
    let cf = CharFn::new(&i, 1.0, &cfg()).unwrap();
    let d = char_fn(&cf, c(0.0, 1.0)).unwrap();
    assert!((d[(0, 0)] - c(0.0, -1.0)).norm() < 1e-12);

    let one = CharFn::new(&op(&[1.0]), 1.0, &cfg()).unwrap();
    assert!(inv_char_fn(&one, c(-1.0, 0.0)).unwrap().norm() < 1e-12);
}

#[test]
fn char_fn_forms_agree_and_invert() {
    let a = make_family(&FamilySpec::random_accretive(4, 2)).unwrap();
    let theta = 2.0;
    let cf = CharFn::new(&a, 0.5, &cfg()).unwrap();
    for z in boundary_points(theta, 32) {
        let d = cf.delta(z).unwrap();
        assert!((&d - cf.delta_alt(z).unwrap()).norm() < 1e-12 * d.norm().max(1.0));
        let di = cf.inv_delta(z).unwrap();
        assert!((&d * &di - identity(4)).norm() < 1e-10);
        assert!((&di * &d - identity(4)).norm() < 1e-10);
    }
}

#[test]
fn identity_determinant_formula() {
    let n = 3;
    let a = SectorialOperator::new(identity(n), "I").unwrap();
    let alpha = 0.5;
    let cf = CharFn::new(&a, alpha, &cfg()).unwrap();
    for z in [c(0.3, 0.2), c(2.0, -1.0), c(1.0, 0.0), c(0.5, 0.0)] {
        let za = z.powf(alpha);
        let want = ((1.0 - za) / (alpha * (1.0 + za))).powi(n as i32);
        let got = cf.delta(z).unwrap().determinant();
        assert!((got - want).norm() < 1e-12, "{z}");
    }
    let rep = char_fn_spectrum_check(&cf, 2.0, &[c(1.0, 0.0), c(0.5, 0.0), c(2.0, 1.0)], 1e-3).unwrap();
    assert!(rep.pass);
    assert_eq!(rep.constants["spectral_probes"], 1.0);
}

#[test]
fn spectrum_of_delta_matches_eigenvalues() {
    let a = op(&[1.0, 2.0]);
    let cf = CharFn::new(&a, 0.5, &cfg()).unwrap();
    let rep = char_fn_spectrum_check(&cf, 2.0, &[c(1.0, 0.0), c(2.0, 0.0), c(1.5, 0.0)], 1e-3).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert_eq!(rep.constants["spectral_probes"], 2.0);
    assert!(rep.constants["boundary_min_singular_value"] > 0.0);
}

#[test]
fn observation_map_values() {
    let one = v(&[(1.0, 0.0)]);
    let got = observation_map(&op(&[1.0]), &one, c(2.0, 0.0), &cfg()).unwrap();
    assert!((got[0] - c(1.0, 0.0)).norm() < 1e-12);
    let got = observation_map(&op(&[4.0]), &one, c(-2.0, 0.0), &cfg()).unwrap();
    assert!((got[0] - c(-1.0 / 3.0, 0.0)).norm() < 1e-12);
}

#[test]
fn observation_map_round_trip() {
    let a = make_family(&FamilySpec::random_accretive(4, 7)).unwrap();
    let obs = ObservationMap::new(&a, &cfg()).unwrap();
    let x = v(&[(1.0, 0.5), (-0.2, 0.0), (0.0, 2.0), (0.7, -0.7)]);
    let lam = c(-1.5, 0.4);
    let o = obs.apply(&x, lam).unwrap();
    let back = (identity(4) * lam - a.matrix()) * solve_vec(obs.sqrt_a(), &o).unwrap();
    assert!(vec_rel_diff(&back, &x) < 1e-8);
}

#[test]
fn control_map_on_resolvent_kernels() {
    // W(u_{λ,x}) = 2√A(λ − A)⁻¹x, with √A from the spectral oracle.
    let a = make_family(&FamilySpec::random_accretive(3, 4)).unwrap();
    let sqrt_a = spectral_function(a.matrix(), |z| z.sqrt()).unwrap();
    let x = v(&[(1.0, 0.0), (0.5, -0.5), (0.0, 1.0)]);
    for lam in [c(-1.0, 0.0), C64::from_polar(2.5, 2.6)] {
        let w = control_map(&a, 2.0, &u(lam, x.clone()), &cfg()).unwrap().values.remove(0);
        let want = &sqrt_a * (resolvent(&a, lam).unwrap() * &x) * c(2.0, 0.0);
        assert!(vec_rel_diff(&w, &want) < 1e-7);
    }
}

#[test]
fn w1_holds_with_factor_two_on_nonzero_branch() {
    let a = op(&[2.0, 5.0]);
    let x = v(&[(1.0, 0.0), (1.0, 0.0)]);
    let w = w1_values(&a, PI / 2.0, 1, 1.0, &x, &cfg()).unwrap();
    assert!(w.residual_factor_two < 1e-7, "{}", w.residual_factor_two);
    // The principal branch without the factor two is off by O(1).
    let w0 = w1_values(&a, PI / 2.0, 0, 1.0, &x, &cfg()).unwrap();
    assert!(w0.residual_as_stated > 0.1);
}

#[test]
fn kernel_contains_delta_multiples() {
    let a = make_family(&FamilySpec::random_accretive(3, 5)).unwrap();
    let theta = 2.0;
    for h in default_battery(3, theta).iter().step_by(2) {
        let rep = kernel_check(&a, theta, 0.5, h, &cfg()).unwrap();
        assert!(rep.residuals["relative_norm"] < 1e-5, "{rep:?}");
    }
}

#[test]
fn cauchy_projections_on_rational_data() {
    let theta = 2.0;
    let x = v(&[(1.0, 0.0), (0.0, 1.0)]);
    let lam0 = C64::from_polar(1.5, 2.7);
    let f = u(lam0, x.clone());
    let inside = [c(1.0, 0.0), C64::from_polar(3.0, 1.2), C64::from_polar(0.2, -1.5)];
    let got = cauchy_transform(theta, &f, &inside, Side::Interior, DEFAULT_MARGIN, &cfg()).unwrap();
    for (z, g) in inside.iter().zip(&got.values) {
        assert!(vec_rel_diff(g, &(&x / (lam0 - z))) < 1e-8);
    }
    let outside = [c(-1.0, 0.0), C64::from_polar(4.0, 2.4)];
    let got = cauchy_transform(theta, &f, &outside, Side::Exterior, DEFAULT_MARGIN, &cfg()).unwrap();
    for g in &got.values {
        assert!(g.norm() < 1e-8 * x.norm());
    }
    // A pole inside the sector makes the function exterior-class: P_int kills it.
    let g = u(c(2.0, 0.0), x.clone());
    let got = cauchy_transform(theta, &g, &inside, Side::Interior, DEFAULT_MARGIN, &cfg()).unwrap();
    for h in &got.values {
        assert!(h.norm() < 1e-8 * x.norm());
    }
}

#[test]
fn cauchy_transform_respects_margin() {
    let f = u(c(-1.0, 0.0), v(&[(1.0, 0.0)]));
    let on_edge = C64::from_polar(1.0, 2.0 + 0.01);
    let err = cauchy_transform(2.0, &f, &[on_edge], Side::Exterior, DEFAULT_MARGIN, &cfg()).unwrap_err();
    assert!(err.is_invalid_input());
}

#[test]
fn hankel_of_zero_is_zero() {
    let a = op(&[1.0, 2.0]);
    let cf = CharFn::new(&a, 0.5, &cfg()).unwrap();
    let zero = u(c(-1.0, 0.0), CVector::zeros(2));
    let out = hankel_apply(&cf, 2.0, &zero, &[c(-1.5, 0.0)], DEFAULT_MARGIN, &cfg()).unwrap();
    assert_eq!(out.values[0].norm(), 0.0);
}

#[test]
fn factorization_on_diagonal_and_jordan() {
    let a = op(&[1.0, 2.0]);
    let theta = 3.0 * PI / 4.0;
    let eval = EvalSet::default_for(&a, theta).unwrap();
    let f = u(c(-1.0, 0.0), v(&[(1.0, 0.0), (1.0, 0.0)]));
    let rep = verify_factorization(&a, theta, 0.5, &f, &eval, &cfg()).unwrap();
    assert!(rep.residuals["max_relative"] < 1e-5, "{rep:?}");

    let j = make_family(&FamilySpec::jordan_shifted(3, 1.0, 1.0)).unwrap();
    let eval = EvalSet::default_for(&j, 2.0).unwrap();
    let f = u(c(-2.0, 0.0), basis(3, 2));
    let rep = verify_factorization(&j, 2.0, 0.5, &f, &eval, &cfg()).unwrap();
    assert!(rep.residuals["max_relative"] < 1e-4, "{rep:?}");
}

#[test]
fn factorization_residuals_agree_across_alpha() {
    let a = make_family(&FamilySpec::random_accretive(3, 9)).unwrap();
    let theta = 2.0;
    let eval = EvalSet::default_for(&a, theta).unwrap();
    let f = u(c(-1.0, 0.0), basis(3, 0));
    let r: Vec<f64> = [0.3, 0.5]
        .iter()
        .map(|&al| verify_factorization(&a, theta, al, &f, &eval, &cfg()).unwrap().residuals["max_relative"])
        .collect();
    assert!((r[0] - r[1]).abs() < 1e-4 && r[0] < 1e-4);
}

#[test]
fn factorization_with_alpha_one() {
    let a = make_family(&FamilySpec::random_accretive(4, 1)).unwrap();
    let theta = 2.0 * PI / 3.0;
    let eval = EvalSet::default_for(&a, theta).unwrap();
    let f = u(c(-2.0, 0.0), basis(4, 1));
    let rep = verify_factorization(&a, theta, 1.0, &f, &eval, &cfg()).unwrap();
    assert!(rep.pass, "{rep:?}");
}

#[test]
fn hankel_alpha_independent() {
    let a = make_family(&FamilySpec::random_accretive(4, 1)).unwrap();
    let theta = 2.0 * PI / 3.0;
    let eval = EvalSet::default_for(&a, theta).unwrap();
    let f = u(c(-1.0, 0.0), v(&[(0.3, 0.1), (1.0, 0.0), (-0.4, 0.2), (0.0, 0.9)]));
    let rep = alpha_independence_check(&a, theta, &[0.5, 1.0], &f, &eval, &cfg()).unwrap();
    assert!(rep.pass, "{rep:?}");
}

#[test]
fn model_resolvent_examples() {
    let cvec = v(&[(2.0, 1.0)]);
    // f(w) = (w + 1)⁻¹c at λ = −2.
    let f = u(c(-1.0, 0.0), -cvec.clone());
    for w in [c(1.0, 0.0), c(0.3, 2.0)] {
        let got = model_resolvent(&f, c(-2.0, 0.0), w).unwrap();
        assert!(vec_rel_diff(&got, &(&cvec / (w + 1.0))) < 1e-14);
    }

    let a = make_family(&FamilySpec::random_accretive(3, 3)).unwrap();
    let obs = ObservationMap::new(&a, &cfg()).unwrap();
    let x = v(&[(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]);
    let lam = c(-1.0, 0.5);
    let w = C64::from_polar(2.0, 2.5);
    let got = model_resolvent(&obs.of(x.clone()), lam, w).unwrap();
    let want = obs.apply(&(resolvent(&a, lam).unwrap() * &x), w).unwrap();
    assert!(vec_rel_diff(&got, &(-want)) < 1e-8);
}

#[test]
fn model_resolvent_of_constant_is_zero() {
    struct Constant(CVector);
    impl sectoria::model::VectorFunction for Constant {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn eval(&self, _: C64) -> sectoria::Result<CVector> {
            Ok(self.0.clone())
        }
    }
    let got = model_resolvent(&Constant(v(&[(1.0, 2.0)])), c(-1.0, 0.0), c(-3.0, 1.0)).unwrap();
    assert_eq!(got.norm(), 0.0);
}

#[test]
fn obs_intertwining_examples() {
    let a = op(&[1.0]);
    let one = v(&[(1.0, 0.0)]);
    let lam = c(-1.0, 0.0);
    let w = c(-2.0, 0.0);
    let obs = ObservationMap::new(&a, &cfg()).unwrap();
    let lhs = obs.apply(&(resolvent(&a, lam).unwrap() * &one), w).unwrap();
    let rhs = (obs.apply(&one, w).unwrap() - obs.apply(&one, lam).unwrap()) / (lam - w);
    assert!((lhs[0] - c(1.0 / 6.0, 0.0)).norm() < 1e-15);
    assert!((rhs[0] - c(1.0 / 6.0, 0.0)).norm() < 1e-15);
    assert!(obs_intertwining_check(&a, &one, lam, &[w], &cfg()).unwrap().pass);

    let b = make_family(&FamilySpec::random_accretive(5, 8)).unwrap();
    let x = basis(5, 3);
    let pts = EvalSet::default_for(&b, 2.0).unwrap().exterior;
    let rep = obs_intertwining_check(&b, &x, c(-0.7, 0.15), &pts, &cfg()).unwrap();
    assert!(rep.residuals["max_relative"] < 1e-9);

    assert!(obs_intertwining_check(&b, &x, c(-1.0, 0.0), &[c(-1.0, 0.0)], &cfg()).is_err());
}

#[test]
fn ctr_intertwining_examples() {
    let a = op(&[1.0, 3.0]);
    let theta = PI / 2.0;
    let x = v(&[(1.0, 0.0), (2.0, 0.0)]);
    let mu = c(-2.0, 0.5);
    let lam = c(-1.0, 0.0);
    let rep = ctr_intertwining_check(&a, theta, &u(mu, x.clone()), lam, &cfg()).unwrap();
    assert!(rep.residuals["multiplication_form"] < 1e-6, "{rep:?}");
    assert!(rep.residuals["quotient_form_corrected"] < 1e-6);
    // Closed form: (A − λ)⁻¹W(u_{μ,x}) = 2(A + 1)⁻¹√A(μ − A)⁻¹x.
    let w = control_map(&a, theta, &u(mu, x.clone()), &cfg()).unwrap().values.remove(0);
    let lhs = solve_vec(&(a.matrix() - identity(2) * lam), &w).unwrap();
    let want = v(&[(1.0, 0.0), (3.0, 0.0)])
        .zip_map(&x, |l, xi| 2.0 * l.sqrt() * xi / ((l - lam) * (mu - l)));
    assert!(vec_rel_diff(&lhs, &want) < 1e-7);

    let sq = RationalFunction::new(vec![c(-2.0, 0.0)], vec![x.clone()], Some(vec![2])).unwrap();
    let rep = ctr_intertwining_check(&a, theta, &sq, lam, &cfg()).unwrap();
    assert!(rep.residuals["multiplication_form"] < 1e-5, "{rep:?}");
}

#[test]
fn control_map_is_linear() {
    let a = op(&[1.0, 3.0]);
    let x = v(&[(1.0, 0.0), (2.0, 0.0)]);
    let mu = c(-2.0, 0.5);
    let w1 = control_map(&a, PI / 2.0, &u(mu, x.clone()), &cfg()).unwrap().values.remove(0);
    let w3 = control_map(&a, PI / 2.0, &u(mu, &x * c(3.0, 0.0)), &cfg()).unwrap().values.remove(0);
    assert!(vec_rel_diff(&w3, &(w1 * c(3.0, 0.0))) < 1e-12);
}

#[test]
fn pairing_examples() {
    let theta = 2.0;
    let x = v(&[(1.0, 0.0), (0.5, 0.5)]);
    let y = v(&[(0.0, 1.0), (1.0, 0.0)]);
    let mu = C64::from_polar(1.5, 2.6);
    let nus = [C64::from_polar(0.8, 0.6), C64::from_polar(2.0, -1.0), mu.conj() * 1.7, c(-3.0, 0.0)];
    let rep = pairing_residue_check(theta, &x, &y, mu, &nus, &cfg()).unwrap();
    assert!(rep.pass, "{rep:?}");

    // Two interior-class functions pair to zero.
    let f = u(mu, x.clone());
    let g = u(c(-1.0, 0.0), y.clone());
    assert!(pairing(theta, &f, &g, &cfg()).unwrap().norm() < 1e-9);

    let contour = Contour::new(theta, RadialGrid::with_density(-20.0, 20.0, 16.0).unwrap()).unwrap();
    let fs = BoundaryFunction::sample(&contour, &f).unwrap();
    let zero = BoundaryFunction::zeros(&contour, 2);
    assert_eq!(boundary_pairing(&fs, &zero).unwrap(), c(0.0, 0.0));
}

#[test]
fn theta_robustness_on_random_accretive() {
    let a = make_family(&FamilySpec::random_accretive(3, 2)).unwrap();
    let f = u(c(-1.0, 0.0), basis(3, 1));
    let rep = theta_robustness_check(&a, (1.9, 2.5), 0.5, &f, C64::from_polar(1.5, 2.8), &cfg()).unwrap();
    assert!(rep.pass, "{rep:?}");
}

fn pole_outside(theta: f64) -> impl Strategy<Value = C64> {
    (-1.0f64..1.0, 0.1f64..0.9, any::<bool>()).prop_map(move |(lr, f, up)| {
        let ang = theta + f * (PI - theta);
        C64::from_polar(10f64.powf(lr), if up { ang } else { -ang })
    })
}

fn pole_inside(theta: f64) -> impl Strategy<Value = C64> {
    (-1.0f64..1.0, -0.8f64..0.8).prop_map(move |(lr, f)| C64::from_polar(10f64.powf(lr), f * theta))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn delta_times_inverse_is_identity(seed in 0u64..500, r in -2.0f64..2.0, up in any::<bool>(), alpha in 0.2f64..0.75) {
        let a = make_family(&FamilySpec::random_accretive(3, seed)).unwrap();
        let theta = 2.0;
        let cf = CharFn::new(&a, alpha, &cfg()).unwrap();
        let z = C64::from_polar(10f64.powf(r), if up { theta } else { -theta });
        let d = cf.delta(z).unwrap();
        let di = cf.inv_delta(z).unwrap();
        prop_assert!((&d * &di - identity(3)).norm() < 1e-10);
        prop_assert!((&di * &d - identity(3)).norm() < 1e-10);
    }

    #[test]
    fn projections_split_rational_data(p in pole_outside(2.0), q in pole_inside(2.0)) {
        let theta = 2.0;
        let x = v(&[(1.0, 0.0), (0.0, -1.0)]);
        let y = v(&[(0.5, 0.5), (2.0, 0.0)]);
        let int = u(p, x.clone());
        // y/(z − q): exterior-class.
        let ext = u(q, -y.clone());
        let f = int.plus(&ext).unwrap();
        let zin = [c(1.0, 0.0), C64::from_polar(0.3, 1.0)];
        let zout = [c(-1.0, 0.0), C64::from_polar(2.0, -2.5)];
        let pin = cauchy_transform(theta, &f, &zin, Side::Interior, DEFAULT_MARGIN, &cfg()).unwrap();
        for (z, val) in zin.iter().zip(&pin.values) {
            let want = &x / (p - z);
            prop_assert!((val - &want).norm() < 1e-7 * (x.norm() + y.norm()));
        }
        let pout = cauchy_transform(theta, &f, &zout, Side::Exterior, DEFAULT_MARGIN, &cfg()).unwrap();
        for (z, val) in zout.iter().zip(&pout.values) {
            let want = &y / (z - q);
            prop_assert!((val - &want).norm() < 1e-7 * (x.norm() + y.norm()));
        }
    }
}
