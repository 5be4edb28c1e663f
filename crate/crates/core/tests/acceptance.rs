//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so the lines always print. Exits non-zero if a
//! criterion outside `KNOWN_FAILING` fails, or if a known failure starts passing.

use std::f64::consts::PI;
use std::time::Instant;

use sectoria::contour::{dunford_riesz_default, extended_calculus, group_growth_scan, log_power_matrix};
use sectoria::linalg::{c, diag_real, hermitian_eigen, rel_diff, CVector};
use sectoria::model::{
    alpha_independence_check, char_fn_spectrum_check, default_battery, default_probes, kernel_check,
    theta_robustness_check, verify_factorization, w1_values, CharFn, EvalSet,
};
use sectoria::spectral::spectral_function;
use sectoria::square::{
    admissibility_gramian, admissibility_integral, admissibility_observer, duality_batch, equivalence_constants,
    gram_operator, log_gap_batch, lyapunov_gramian, mcintosh_identity_batch, refined_config, sample_vectors,
};
use sectoria::{make_family, FamilySpec, QuadConfig, ScalarSymbol, SectorialOperator};

type Outcome = sectoria::Result<(bool, String)>;

/// Criteria whose literal statement does not hold; see the README.
const KNOWN_FAILING: &[u32] = &[12];

fn families() -> Vec<SectorialOperator> {
    [
        FamilySpec::positive_diagonal(&[0.5, 1.0, 3.0]),
        FamilySpec::complex_diagonal(&[(1.0, 0.5), (2.0 * (-0.8f64).cos(), 2.0 * (-0.8f64).sin()), (0.7, 0.0)]),
        FamilySpec::jordan_shifted(3, 1.0, 4.0),
        FamilySpec::conjugated_accretive(11),
        FamilySpec::random_accretive(4, 5),
    ]
    .iter()
    .map(|s| make_family(s).expect("built-in family"))
    .collect()
}

fn unit(n: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[k] = c(1.0, 0.0);
    v
}

fn c1_calculus(cfg: &QuadConfig) -> Outcome {
    let psi_names = ["sqrt_over_1p", "z_over_1pz2", "phi"];
    let ext_names = ["sqrt_over_1p", "z_over_1pz2", "phi", "z_pow:0.5", "z_pow:1.7", "log", "z_ipow:1.3"];
    let mut worst = 0.0f64;
    let mut count = 0;
    for seed in 0..20u64 {
        let dim = 2 + (seed as usize % 7);
        let spec = if seed % 4 == 3 {
            FamilySpec::conjugated_accretive(seed).with("dim", dim)
        } else {
            FamilySpec::random_accretive(dim, seed)
        };
        let a = make_family(&spec)?;
        for name in psi_names {
            let s = ScalarSymbol::from_name(name)?;
            let oracle = spectral_function(a.matrix(), |z| s.eval(z)).expect("diagonalizable");
            worst = worst.max(rel_diff(&dunford_riesz_default(&a, &s, cfg)?.value, &oracle));
            count += 1;
        }
        for name in ext_names {
            let s = ScalarSymbol::from_name(name)?;
            let oracle = spectral_function(a.matrix(), |z| s.eval(z)).expect("diagonalizable");
            worst = worst.max(rel_diff(&extended_calculus(&a, &s, cfg)?.value, &oracle));
            count += 1;
        }
    }
    Ok((worst <= 1e-7, format!("{count} evaluations, max relative error {worst:.3e}")))
}

fn c2_square_constant(cfg: &QuadConfig) -> Outcome {
    // Independent value of ∫₀^∞(1+s)⁻²ds by composite Simpson in u = log s.
    let n = 200_000;
    let (lo, hi) = (-60.0f64, 60.0f64);
    let h = (hi - lo) / n as f64;
    let f = |u: f64| {
        let s = u.exp();
        s / ((1.0 + s) * (1.0 + s))
    };
    let mut acc = f(lo) + f(hi);
    for j in 1..n {
        acc += f(lo + j as f64 * h) * if j % 2 == 1 { 4.0 } else { 2.0 };
    }
    let oracle = acc * h / 3.0;
    let psi = ScalarSymbol::sqrt_over_1p();
    let mut worst = (oracle - 1.0).abs();
    for vals in [vec![1.0], vec![0.5, 1.0, 3.0], vec![0.01, 1.0, 100.0]] {
        let a = SectorialOperator::new(diag_real(&vals), "positive_diagonal")?;
        let gap = equivalence_constants(&gram_operator(&a, &psi, cfg)?)?;
        worst = worst.max((gap.m - oracle).abs()).max((gap.big_m - oracle).abs());
    }
    Ok((worst <= 1e-6, format!("oracle {oracle:.12}, max |constant − oracle| {worst:.3e}")))
}

fn c3_mcintosh(cfg: &QuadConfig) -> Outcome {
    let mut worst = 0.0f64;
    for dim in 2..=8usize {
        let a = make_family(&FamilySpec::random_accretive(dim, 100 + dim as u64))?;
        let xs: Vec<CVector> = sample_vectors(dim, 2, dim as u64).into_iter().skip(dim - 1).collect();
        for rep in mcintosh_identity_batch(&a, &xs, cfg)? {
            worst = worst.max(rep.max_residual());
        }
    }
    Ok((worst <= 1e-4, format!("max relative difference {worst:.3e}")))
}

fn c4_factorization(cfg: &QuadConfig) -> Outcome {
    let mut worst = 0.0f64;
    let mut min_points = usize::MAX;
    for a in families() {
        for theta in [2.0, 2.5] {
            let eval = EvalSet::default_for(&a, theta)?;
            min_points = min_points.min(eval.exterior.len());
            for u in default_battery(a.dim(), theta) {
                worst = worst.max(verify_factorization(&a, theta, 0.5, &u, &eval, cfg)?.max_residual());
            }
        }
    }
    Ok((
        worst <= 1e-4 && min_points >= 8,
        format!("{min_points} exterior points per case, max relative residual {worst:.3e}"),
    ))
}

fn c5_alpha_independence(cfg: &QuadConfig) -> Outcome {
    let theta = 2.0;
    let alphas = [0.3, 0.5, 0.9 / theta * (PI / 2.0)];
    let mut worst = 0.0f64;
    for a in families() {
        let eval = EvalSet::default_for(&a, theta)?;
        for u in default_battery(a.dim(), theta).iter().step_by(a.dim()) {
            worst = worst.max(alpha_independence_check(&a, theta, &alphas, u, &eval, cfg)?.max_residual());
        }
    }
    Ok((worst <= 1e-4, format!("max pairwise residual / ‖u‖ {worst:.3e}")))
}

fn c6_kernel(cfg: &QuadConfig) -> Outcome {
    let theta = 2.0;
    let mut worst = 0.0f64;
    for a in families() {
        for h in default_battery(a.dim(), theta) {
            worst = worst.max(kernel_check(&a, theta, 0.5, &h, cfg)?.max_residual());
        }
    }
    Ok((worst <= 1e-4, format!("max ‖W(δh)‖/‖h‖ {worst:.3e}")))
}

fn c7_spectrum(cfg: &QuadConfig) -> Outcome {
    let theta = 2.0;
    let mut wrong = 0.0;
    let mut probes = 0;
    for a in families() {
        let cf = CharFn::new(&a, 0.5, cfg)?;
        let p = default_probes(&a, theta);
        probes += p.len();
        wrong += char_fn_spectrum_check(&cf, theta, &p, 1e-3)?.max_residual();
    }
    Ok((wrong == 0.0, format!("{probes} probes, {wrong} misclassified")))
}

fn c8_log_gap(cfg: &QuadConfig) -> Outcome {
    let mut worst = 0.0f64;
    let mut finite = true;
    for a in families() {
        let xs = sample_vectors(a.dim(), 4, 3);
        for rep in log_gap_batch(&a, &[(1, 0.6), (1, 1.0), (-1, 1.0)], &xs, cfg)? {
            finite &= rep.constants["c_lower"].is_finite() && rep.constants["c_upper"].is_finite();
            worst = worst.max(rep.residuals["refinement_drift"]);
        }
    }
    Ok((finite && worst < 1e-2, format!("constants finite: {finite}, max refinement drift {worst:.3e}")))
}

fn c9_admissibility(cfg: &QuadConfig) -> Outcome {
    let one = SectorialOperator::new(diag_real(&[1.0]), "diag(1)")?;
    let exact = (2.0 * PI).powi(-2) / 2.0;
    let val = admissibility_integral(&one, Some((1, 1.0)), &unit(1, 0), cfg)?;
    let scalar_err = (val - exact).abs() / exact;
    let mut drift = 0.0f64;
    let mut bound = 0.0f64;
    let mut oracle = 0.0f64;
    for dim in 2..=6usize {
        let a = make_family(&FamilySpec::random_accretive(dim, 40 + dim as u64))?;
        assert!(a.omega_est() < PI / 2.0);
        let q = admissibility_gramian(&a, Some((1, 1.0)), cfg)?.value;
        let qf = admissibility_gramian(&a, Some((1, 1.0)), &refined_config(cfg))?.value;
        let (k, kf) = (hermitian_eigen(&q).0[dim - 1], hermitian_eigen(&qf).0[dim - 1]);
        drift = drift.max((k - kf).abs() / kf);
        let cm = admissibility_observer(&a, Some((1, 1.0)), cfg)?;
        oracle = oracle.max(rel_diff(&qf, &lyapunov_gramian(a.matrix(), &cm)?));
        for x in sample_vectors(dim, 3, 9) {
            let v = admissibility_integral(&a, Some((1, 1.0)), &x, cfg)?;
            bound = bound.max(v / (kf * x.norm_squared()));
        }
    }
    let pass = scalar_err <= 1e-6 && drift <= 1e-6 && oracle <= 1e-6 && bound <= 1.0 + 1e-8;
    Ok((
        pass,
        format!(
            "scalar rel err {scalar_err:.3e}; K drift {drift:.3e}; Lyapunov diff {oracle:.3e}; max integral/(K‖x‖²) {bound:.9}"
        ),
    ))
}

fn c10_imaginary_powers(cfg: &QuadConfig) -> Outcome {
    let s: Vec<f64> = (-20..=20).map(|j| j as f64 * 0.25).collect();
    let mut sup_err = 0.0f64;
    let mut group = 0.0f64;
    for vals in [vec![1.0, 2.0, 3.0], vec![0.05, 1.0, 40.0]] {
        let a = SectorialOperator::new(diag_real(&vals), "positive_diagonal")?;
        let rep = group_growth_scan(&a, 0.1, &s, cfg)?;
        sup_err = sup_err.max((rep.constants["sup_norm"] - 1.0).abs());
        group = group.max(rep.residuals["group_law"]);
    }
    Ok((
        sup_err <= 1e-6 && group <= 1e-6,
        format!("|sup‖A^is‖ − 1| {sup_err:.3e}, group-law residual {group:.3e}"),
    ))
}

fn c11_theta_robustness(cfg: &QuadConfig) -> Outcome {
    let mut pass = true;
    let mut worst = 0.0f64;
    for a in families() {
        let u = &default_battery(a.dim(), 2.6)[0];
        let rep = theta_robustness_check(&a, (2.0, 2.6), 0.5, u, c(-1.5, 0.2), cfg)?;
        pass &= rep.pass;
        worst = worst.max(rep.max_residual());
    }
    Ok((pass, format!("max residual or cross-θ drift {worst:.3e} (tolerance 1e-4, drift 2e-4)")))
}

fn c12_w1(cfg: &QuadConfig) -> Outcome {
    let a = SectorialOperator::new(diag_real(&[2.0, 5.0]), "diag(2,5)")?;
    let x = CVector::from_element(2, c(1.0, 0.0));
    let mut worst = 0.0f64;
    let mut other = 0.0f64;
    for r in [0.6, 1.0] {
        worst = worst.max(w1_values(&a, 2.0, 0, r, &x, cfg)?.residual_as_stated);
        other = other.max(w1_values(&a, 2.0, 1, r, &x, cfg)?.residual_factor_two);
    }
    let target = log_power_matrix(&a, 0, 1.0, cfg)? * &x;
    Ok((
        worst <= 1e-4,
        format!(
            "W(φ) vs Λ₀(A)^(−r)x: max relative residual {worst:.3e} (|Λ₀(A)^(−1)x| = {:.4}); W(φ) vs 2Λ₁(A)^(−r)x: {other:.3e}",
            target.norm()
        ),
    ))
}

fn c13_duality(cfg: &QuadConfig) -> Outcome {
    let a = make_family(&FamilySpec::random_accretive(4, 5))?;
    let vs = sample_vectors(4, 3, 21);
    let pairs: Vec<(CVector, CVector)> = (2..vs.len()).map(|i| (vs[i].clone(), vs[(i + 3) % vs.len()].clone())).collect();
    let mut worst = 0.0f64;
    for rep in duality_batch(&a, &pairs, cfg)? {
        worst = worst.max(rep.max_residual());
    }
    Ok((worst <= 1e-4, format!("max relative difference {worst:.3e}")))
}

fn main() {
    let cfg = QuadConfig::default();
    let criteria: Vec<(u32, &str, fn(&QuadConfig) -> Outcome)> = vec![
        (1, "calculus oracle", c1_calculus),
        (2, "square-function constant", c2_square_constant),
        (3, "McIntosh identity", c3_mcintosh),
        (4, "factorization OW = -J", c4_factorization),
        (5, "alpha-independence of J", c5_alpha_independence),
        (6, "kernel membership", c6_kernel),
        (7, "characteristic-function spectrum", c7_spectrum),
        (8, "log-gap constants", c8_log_gap),
        (9, "admissibility", c9_admissibility),
        (10, "imaginary powers", c10_imaginary_powers),
        (11, "theta-robustness", c11_theta_robustness),
        (12, "W(phi) = Lambda_0(A)^-r x", c12_w1),
        (13, "duality", c13_duality),
    ];
    let mut unexpected = Vec::new();
    for (id, name, run) in criteria {
        let t = Instant::now();
        let (pass, detail) = match run(&cfg) {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        let secs = t.elapsed().as_secs_f64();
        println!(
            "{} criterion {id:>2} {name}: {detail} [{secs:.1}s]",
            if pass { "PASS" } else { "FAIL" }
        );
        let known = KNOWN_FAILING.contains(&id);
        if pass == known {
            unexpected.push(id);
        }
        if secs > 60.0 {
            println!("     criterion {id} exceeded the 60 s budget");
            unexpected.push(id);
        }
    }
    if !KNOWN_FAILING.is_empty() {
        println!("known failing (statement does not hold as written): {KNOWN_FAILING:?}");
    }
    if !unexpected.is_empty() {
        println!("unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
