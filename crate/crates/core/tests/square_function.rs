use std::f64::consts::PI;
use std::sync::OnceLock;

use proptest::prelude::*;
use sectoria::linalg::{c, diag_real, hermitian_eigen, identity};
use sectoria::square::{
    admissibility_integral, duality_batch, equivalence_constants, gap_of, gram_operator, log_gap_batch, log_gap_check,
    mcintosh_identity_batch, psi_independence_check, sample_vectors, square_norm, GramOperator,
};
use sectoria::{make_family, CMatrix, CVector, FamilySpec, QuadConfig, ScalarSymbol, SectorialOperator};

fn op(values: &[f64]) -> SectorialOperator {
    SectorialOperator::new(diag_real(values), "diag").unwrap()
}

fn cfg() -> QuadConfig {
    QuadConfig::default()
}

fn v(xs: &[(f64, f64)]) -> CVector {
    CVector::from_vec(xs.iter().map(|&(a, b)| c(a, b)).collect())
}

fn kappa(a: &SectorialOperator) -> f64 {
    let g = gram_operator(a, &ScalarSymbol::sqrt_over_1p(), &cfg()).unwrap();
    equivalence_constants(&g).unwrap().kappa
}

#[test]
fn positive_diagonal_gram_is_identity() {
    let g = gram_operator(&op(&[1.0, 2.0]), &ScalarSymbol::sqrt_over_1p(), &cfg()).unwrap();
    assert!((&g.matrix - identity(2)).norm() < 1e-6);
    let x = v(&[(3.0, 0.0), (0.0, 4.0)]);
    assert!((square_norm(&g, &x) - 5.0).abs() < 1e-6);
    assert_eq!(square_norm(&g, &v(&[(0.0, 0.0), (0.0, 0.0)])), 0.0);
    let gap = equivalence_constants(&g).unwrap();
    assert!((gap.kappa - 1.0).abs() < 1e-6);
}

#[test]
fn identity_gram_constants() {
    let gap = gap_of(&identity(3)).unwrap();
    assert_eq!((gap.m, gap.big_m, gap.kappa), (1.0, 1.0, 1.0));
}

#[test]
fn jordan_gram_is_hermitian_psd_and_not_scalar() {
    let a = make_family(&FamilySpec::jordan_shifted(2, 1.0, 0.5)).unwrap();
    let g = gram_operator(&a, &ScalarSymbol::sqrt_over_1p(), &cfg()).unwrap();
    assert!((&g.matrix - g.matrix.adjoint()).norm() < 1e-14);
    let (vals, _) = hermitian_eigen(&g.matrix);
    assert!(vals[0] > 0.0);
    assert!(vals[1] - vals[0] > 1e-3);
}

#[test]
fn jordan_kappa_increases_with_eps() {
    let ks: Vec<f64> = [0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&e| kappa(&make_family(&FamilySpec::jordan_shifted(2, 1.0, e)).unwrap()))
        .collect();
    for w in ks.windows(2) {
        assert!(w[1] > w[0], "{ks:?}");
    }
}

#[test]
fn psi_independence_on_diagonal() {
    // ∫ s(1+s)⁻² ds/s = 1 and ∫ s²(1+s)⁻⁴ ds/s = B(2, 2) = 1/6.
    let a = op(&[1.0, 3.0]);
    let rep =
        psi_independence_check(&a, &ScalarSymbol::sqrt_over_1p(), &ScalarSymbol::phi(), &cfg()).unwrap();
    assert!(rep.pass);
    assert!((rep.constants["ratio_min"] - 6.0).abs() < 1e-6);
    assert!((rep.constants["ratio_max"] - 6.0).abs() < 1e-6);
    assert!((rep.constants["kappa"] - 1.0).abs() < 1e-6);

    let same = psi_independence_check(&a, &ScalarSymbol::phi(), &ScalarSymbol::phi(), &cfg()).unwrap();
    assert!((same.constants["kappa"] - 1.0).abs() < 1e-9);
}

#[test]
fn psi_independence_on_random_accretive() {
    let a = make_family(&FamilySpec::random_accretive(4, 1)).unwrap();
    let rep =
        psi_independence_check(&a, &ScalarSymbol::sqrt_over_1p(), &ScalarSymbol::phi(), &cfg()).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert!(rep.constants["kappa"].is_finite());
}

#[test]
fn mcintosh_examples() {
    let r = mcintosh_identity_batch(&op(&[1.0]), &[v(&[(1.0, 0.0)])], &cfg()).unwrap();
    assert!(r[0].residuals["relative_difference"] < 1e-6);
    assert!((r[0].constants["square_norm_sq"] - 1.0).abs() < 1e-6);
    assert!((r[0].constants["boundary_l2_sq"] - 1.0).abs() < 1e-6);

    let r = mcintosh_identity_batch(&op(&[1.0, 2.0]), &[v(&[(1.0, 0.0), (1.0, 0.0)])], &cfg()).unwrap();
    assert!(r[0].residuals["relative_difference"] < 1e-5);

    let a = make_family(&FamilySpec::random_accretive(5, 4)).unwrap();
    let xs = sample_vectors(5, 2, 11);
    for rep in mcintosh_identity_batch(&a, &xs, &cfg()).unwrap() {
        assert!(rep.residuals["relative_difference"] < 1e-4);
    }
}

#[test]
fn log_gap_scalar_value() {
    let rep = log_gap_check(&op(&[1.0]), 1, 1.0, &[v(&[(1.0, 0.0)])], &cfg()).unwrap();
    let want = 1.0 / (2.0 * PI);
    assert!((rep.constants["c_lower"] - want).abs() < 1e-8);
    assert!((rep.constants["c_upper"] - want).abs() < 1e-8);
}

#[test]
fn log_gap_positive_diagonal_stable_and_monotone_in_r() {
    let a = make_family(&FamilySpec::positive_diagonal(&[1.0, 10.0, 100.0])).unwrap();
    let samples = sample_vectors(3, 8, 0);
    let reps = log_gap_batch(&a, &[(1, 0.6), (1, 1.0), (1, 2.0)], &samples, &cfg()).unwrap();
    for r in &reps {
        assert!(r.pass, "{r:?}");
    }
    for key in ["c_lower", "c_upper"] {
        let cs: Vec<f64> = reps.iter().map(|r| r.constants[key]).collect();
        assert!(cs[0] > cs[1] && cs[1] > cs[2], "{key}: {cs:?}");
    }
}

#[test]
fn log_gap_finite_while_kappa_grows() {
    let samples = sample_vectors(2, 4, 0);
    let mut kappas = Vec::new();
    for eps in [0.5, 4.0] {
        let a = make_family(&FamilySpec::jordan_shifted(2, 1.0, eps)).unwrap();
        let rep = log_gap_check(&a, 1, 1.0, &samples, &cfg()).unwrap();
        assert!(rep.constants["c_lower"].is_finite() && rep.constants["c_upper"].is_finite());
        kappas.push(rep.constants["kappa"]);
    }
    assert!(kappas[1] > kappas[0]);
}

#[test]
fn admissibility_scalar_values() {
    let a = op(&[1.0]);
    let x = v(&[(1.0, 0.0)]);
    assert!((admissibility_integral(&a, None, &x, &cfg()).unwrap() - 0.5).abs() < 1e-9);
    let w = admissibility_integral(&a, Some((1, 1.0)), &x, &cfg()).unwrap();
    let want = 0.5 / (2.0 * PI).powi(2);
    assert!((w - want).abs() < 1e-9 * want.max(1.0), "{w}");
}

#[test]
fn admissibility_matches_exponential_gram() {
    // ∫|√(2s)e^{−s}|² ds/s = 1, so ∫‖√A e^{−tA}x‖²dt = ½‖x‖²_G for this generator.
    let a = op(&[0.5, 2.0, 7.0]);
    let g = gram_operator(&a, &ScalarSymbol::sqrt2z_exp(), &cfg()).unwrap();
    let x = v(&[(1.0, 0.0), (2.0, -1.0), (0.0, 0.5)]);
    let lhs = admissibility_integral(&a, None, &x, &cfg()).unwrap();
    let rhs = 0.5 * square_norm(&g, &x).powi(2);
    assert!((lhs - rhs).abs() < 1e-6 * rhs, "{lhs} vs {rhs}");
}

#[test]
fn duality_examples() {
    let a = op(&[1.0, 2.0]);
    let e1 = v(&[(1.0, 0.0), (0.0, 0.0)]);
    let e2 = v(&[(0.0, 0.0), (1.0, 0.0)]);
    let x = v(&[(1.0, 0.0), (1.0, 1.0)]);
    let reps = duality_batch(&a, &[(e1, e2), (x.clone(), x.clone())], &cfg()).unwrap();
    let orth = &reps[0];
    assert!(orth.constants["lhs_re"].abs() < 1e-10 && orth.constants["rhs_re"].abs() < 1e-10);
    assert!(orth.pass);
    // Self-adjoint case with x = y is the McIntosh identity.
    let m = mcintosh_identity_batch(&a, &[x], &cfg()).unwrap();
    assert!((reps[1].constants["lhs_re"] - m[0].constants["square_norm_sq"]).abs() < 1e-8);
    assert!((reps[1].constants["rhs_re"] - m[0].constants["boundary_l2_sq"]).abs() < 1e-6);

    let b = make_family(&FamilySpec::random_accretive(4, 3)).unwrap();
    let s = sample_vectors(4, 2, 5);
    let reps = duality_batch(&b, &[(s[4].clone(), s[5].clone())], &cfg()).unwrap();
    assert!(reps[0].residuals["relative_difference"] < 1e-4);
}

/// Deterministic unitary from the QR factor of a fixed complex matrix.
fn unitary(n: usize) -> CMatrix {
    let m = CMatrix::from_fn(n, n, |i, j| c((1.3 * i as f64 + 0.7 * j as f64).sin(), (0.4 * (i * j) as f64 + 1.1).cos()));
    m.qr().q()
}

#[test]
fn kappa_unitarily_invariant() {
    let a = make_family(&FamilySpec::random_accretive(3, 12)).unwrap();
    let u = unitary(3);
    assert!((u.adjoint() * &u - identity(3)).norm() < 1e-12);
    let b = SectorialOperator::new(u.adjoint() * a.matrix() * &u, "rotated").unwrap();
    let (k1, k2) = (kappa(&a), kappa(&b));
    assert!((k1 - k2).abs() < 1e-8 * k1, "{k1} vs {k2}");
}

fn shared_gram() -> &'static GramOperator {
    static G: OnceLock<GramOperator> = OnceLock::new();
    G.get_or_init(|| {
        let a = make_family(&FamilySpec::conjugated_accretive(3)).unwrap();
        gram_operator(&a, &ScalarSymbol::sqrt_over_1p(), &cfg()).unwrap()
    })
}

fn vec_strategy(n: usize) -> impl Strategy<Value = CVector> {
    prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), n).prop_map(|xs| CVector::from_vec(xs.into_iter().map(|(a, b)| c(a, b)).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn square_norm_is_a_norm(x in vec_strategy(4), y in vec_strategy(4), s in -3.0f64..3.0) {
        let g = shared_gram();
        let (nx, ny) = (square_norm(g, &x), square_norm(g, &y));
        prop_assert!(square_norm(g, &(&x + &y)) <= (nx + ny) * (1.0 + 1e-12) + 1e-12);
        prop_assert!((square_norm(g, &(&x * c(s, 0.0))) - s.abs() * nx).abs() <= 1e-10 * (1.0 + nx));
        let gap = equivalence_constants(g).unwrap();
        prop_assert!(nx >= gap.m * x.norm() * (1.0 - 1e-10) && nx <= gap.big_m * x.norm() * (1.0 + 1e-10));
    }
}
