//! Acceptance suite: every release criterion as one test with a printed
//! pass/fail line. Tolerances are relative to the larger compared side
//! unless a check is an exact integer or boolean. Runtime budgets are
//! asserted; the full automorphism count is behind `--ignored`.

use std::collections::HashMap;
use std::time::{Duration, Instant};
use theta_forms::e8::{e8_gram, Lattice, E8_AUTOMORPHISM_ORDER};
use theta_forms::f2char::{all_f2_vectors, enumerate_characteristics, ParityFilter};
use theta_forms::forms::decomp::{
    m_matrix, pull_back_quadric, quadric_criterion, witness_pattern_residual, DecompVerdict,
};
use theta_forms::forms::pairing::{
    adjugate_theorem_check, adjugate_w_identity_check, det_a_weight_check,
};
use theta_forms::forms::conversion_identities_check;
use theta_forms::linalg::{self, CMatrix, IMatrix, OrderedSubset};
use theta_forms::symplectic::{sample_subgroup_tame, sample_theta24_nonstar_tame};
use theta_forms::theta::{heat_equation_residual, TransformKind};
use theta_forms::{Characteristic, F2Vector, PeriodMatrix, SubgroupTag, ThetaEngine};

const RANK_TOL: f64 = 1e-8;

fn engine() -> ThetaEngine {
    ThetaEngine::default()
}

fn wide_engine() -> ThetaEngine {
    ThetaEngine {
        tol: 1e-12,
        radius_cap: 160,
    }
}

fn report(criterion: &str, residual: f64, tol: f64, elapsed: Duration, budget: Duration) {
    let status = if residual <= tol { "PASS" } else { "FAIL" };
    println!(
        "[{criterion}] residual {residual:.3e} vs tol {tol:.1e} in {:.2}s (budget {:.0}s): {status}",
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    assert!(
        residual <= tol,
        "{criterion}: residual {residual:.3e} above {tol:.1e}"
    );
    assert!(
        elapsed <= budget,
        "{criterion}: took {:.1}s, budget {:.0}s",
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
}

#[test]
fn acceptance_01_heat_equation() {
    let started = Instant::now();
    let e = engine();
    let mut worst = 0.0f64;
    for g in 1..=3usize {
        let chars = enumerate_characteristics(g, ParityFilter::All).unwrap();
        for k in 0..10u64 {
            let tau = PeriodMatrix::random(g, 1000 + 17 * g as u64 + k);
            for m in &chars {
                worst = worst.max(heat_equation_residual(&e, m, &tau).unwrap());
            }
        }
    }
    report(
        "criterion 01: heat equation g=1..3",
        worst,
        1e-9,
        started.elapsed(),
        Duration::from_secs(30),
    );
}

#[test]
fn acceptance_02_bilinear_and_addition() {
    let started = Instant::now();
    let e = engine();
    let mut worst = 0.0f64;
    for g in 1..=2usize {
        let chars = enumerate_characteristics(g, ParityFilter::All).unwrap();
        let sigmas = all_f2_vectors(g);
        for k in 0..5u64 {
            let tau = PeriodMatrix::random(g, 2000 + 29 * g as u64 + k);
            let z = PeriodMatrix::random_z(g, 40 + k);
            for m in &chars {
                worst = worst.max(e.riemann_bilinear_residual(m, &tau, &z).unwrap());
            }
            for alpha in &sigmas {
                for eps in &sigmas {
                    worst = worst.max(e.addition_residual(alpha, eps, &tau).unwrap());
                }
            }
        }
    }
    report(
        "criterion 02: bilinear + addition relations",
        worst,
        1e-9,
        started.elapsed(),
        Duration::from_secs(10),
    );
}

#[test]
fn acceptance_03_conversion_identities() {
    let started = Instant::now();
    let e = engine();
    let mut worst = 0.0f64;
    for g in 1..=3usize {
        for k in 0..2u64 {
            let tau = PeriodMatrix::random(g, 3000 + 31 * g as u64 + k);
            let rep = conversion_identities_check(&e, &tau).unwrap();
            worst = worst.max(rep.c_from_a).max(rep.a_from_c);
        }
    }
    // the identities keep holding on the product locus
    let tau = PeriodMatrix::block_diag(
        &PeriodMatrix::random(1, 3100),
        &PeriodMatrix::random(1, 3101),
    );
    let rep = conversion_identities_check(&e, &tau).unwrap();
    worst = worst.max(rep.c_from_a).max(rep.a_from_c);
    report(
        "criterion 03: conversion identities both directions g=1..3",
        worst,
        1e-9,
        started.elapsed(),
        Duration::from_secs(60),
    );
}

#[test]
fn acceptance_04_decomposability() {
    let started = Instant::now();
    let e = wide_engine();

    // five product points, two of them transported by the full group
    struct ProductCase {
        tau: PeriodMatrix,
        gamma: Option<theta_forms::SymplecticElement>,
        base: Option<PeriodMatrix>,
        split: usize,
        g: usize,
    }
    let mut cases = Vec::new();
    for k in 0..2u64 {
        let base = PeriodMatrix::block_diag(
            &PeriodMatrix::random(1, 4000 + k),
            &PeriodMatrix::random(1, 4100 + k),
        );
        cases.push(ProductCase {
            tau: base,
            gamma: None,
            base: None,
            split: 1,
            g: 2,
        });
    }
    {
        let base = PeriodMatrix::block_diag(
            &PeriodMatrix::random(1, 4200),
            &PeriodMatrix::random(1, 4201),
        );
        let gamma = sample_subgroup_tame(2, SubgroupTag::Full, 4, 11, &base, 0.05);
        cases.push(ProductCase {
            tau: gamma.act(&base).unwrap(),
            gamma: Some(gamma),
            base: Some(base),
            split: 1,
            g: 2,
        });
    }
    {
        let base = PeriodMatrix::block_diag(
            &PeriodMatrix::random(1, 4300),
            &PeriodMatrix::random(2, 4301),
        );
        cases.push(ProductCase {
            tau: base,
            gamma: None,
            base: None,
            split: 1,
            g: 3,
        });
    }
    {
        let base = PeriodMatrix::block_diag(
            &PeriodMatrix::random(1, 4400),
            &PeriodMatrix::random(2, 4401),
        );
        let gamma = sample_subgroup_tame(3, SubgroupTag::Full, 3, 13, &base, 0.05);
        cases.push(ProductCase {
            tau: gamma.act(&base).unwrap(),
            gamma: Some(gamma),
            base: Some(base),
            split: 1,
            g: 3,
        });
    }
    assert_eq!(cases.len(), 5);
    for (idx, case) in cases.iter().enumerate() {
        let rep = quadric_criterion(&e, &case.tau, RANK_TOL).unwrap();
        assert_eq!(
            rep.verdict,
            DecompVerdict::DecomposableSuspect,
            "product case {idx} read as indecomposable"
        );
        // every witness matches the cross-block pattern, after pulling
        // transported ones back
        for w in &rep.witnesses {
            let local = match (&case.gamma, &case.base) {
                (Some(gamma), Some(base)) => pull_back_quadric(gamma, base, w),
                _ => w.clone(),
            };
            let pattern = witness_pattern_residual(&local, case.split);
            assert!(
                pattern < 1e-5,
                "case {idx}: witness off pattern by {pattern:.3e}"
            );
        }
        // rank deficiency is also visible in the stacked constants matrix
        let n = case.g * (case.g + 1) / 2;
        assert!(linalg::numerical_rank(&m_matrix(&e, &case.tau).unwrap(), RANK_TOL) < n + 1);
    }

    // ten generic points with full rank
    for k in 0..10u64 {
        let g = if k < 6 { 2 } else { 3 };
        let tau = PeriodMatrix::random(g, 4500 + k);
        let rep = quadric_criterion(&e, &tau, RANK_TOL).unwrap();
        assert_eq!(
            rep.verdict,
            DecompVerdict::Indecomposable,
            "generic sample {k} read as decomposable"
        );
        let n = g * (g + 1) / 2;
        assert_eq!(
            linalg::numerical_rank(&m_matrix(&e, &tau).unwrap(), RANK_TOL),
            n + 1
        );
    }
    report(
        "criterion 04: decomposability verdicts (5 products + 10 generic)",
        0.0,
        1.0,
        started.elapsed(),
        Duration::from_secs(30),
    );
}

#[test]
fn acceptance_05_adjugate_theorem() {
    let started = Instant::now();
    let e = engine();
    let mut worst = 0.0f64;
    let mut literal_gap = f64::INFINITY;
    for k in 0..5u64 {
        let tau = PeriodMatrix::random(2, 5000 + k);
        let eps = F2Vector::parse("00").unwrap();
        let delta = F2Vector::parse("11").unwrap();
        let rep = adjugate_theorem_check(&e, &tau, &eps, &delta).unwrap();
        worst = worst.max(rep.residual);
        literal_gap = literal_gap.min(rep.residual_half_constant);
    }
    for k in 0..2u64 {
        let tau = PeriodMatrix::random(3, 5100 + k);
        let eps = F2Vector::parse("001").unwrap();
        let delta = F2Vector::parse("010").unwrap();
        let rep = adjugate_theorem_check(&e, &tau, &eps, &delta).unwrap();
        worst = worst.max(rep.residual);
    }
    println!(
        "[criterion 05] note: constant is (8 pi i)^(g-1)/(g-1)!; halving it \
         (the (4 pi i)^(g-1) variant) leaves a residual of at least {literal_gap:.3}"
    );
    report(
        "criterion 05: adjugate equals scaled pairing (5 x g=2, 2 x g=3)",
        worst,
        1e-7,
        started.elapsed(),
        Duration::from_secs(120),
    );
}

#[test]
fn acceptance_06_wedge_sum_identity() {
    let started = Instant::now();
    let e = engine();
    let mut worst = 0.0f64;
    for k in 0..5u64 {
        let tau = PeriodMatrix::random(2, 6000 + k);
        let eps = F2Vector::parse("10").unwrap();
        let delta = F2Vector::parse("01").unwrap();
        worst = worst.max(adjugate_w_identity_check(&e, &tau, &eps, &delta).unwrap());
    }
    report(
        "criterion 06: adjugate equals signed wedge-form sum (g=2)",
        worst,
        1e-7,
        started.elapsed(),
        Duration::from_secs(60),
    );
}

#[test]
fn acceptance_07_det_a_nonvanishing_and_weight() {
    let started = Instant::now();
    let e = wide_engine();
    let eps = F2Vector::parse("00").unwrap();
    let delta = F2Vector::parse("10").unwrap();
    let taus: Vec<PeriodMatrix> = (0..20).map(|k| PeriodMatrix::random(2, 7000 + k)).collect();
    let base = PeriodMatrix::random(2, 7100);
    let gammas: Vec<_> = (0..5)
        .map(|k| {
            (
                sample_subgroup_tame(2, SubgroupTag::ThetaStar24, 5, 7200 + k, &base, 0.05),
                base.clone(),
            )
        })
        .collect();
    let rep = det_a_weight_check(&e, &taus, &gammas, &eps, &delta).unwrap();
    assert!(
        rep.max_scaled_det > 1e-6,
        "det A never rose above threshold: {:.3e}",
        rep.max_scaled_det
    );
    report(
        "criterion 07: det A nonzero and of weight g+2",
        rep.weight_residual,
        1e-6,
        started.elapsed(),
        Duration::from_secs(60),
    );
}

#[test]
fn acceptance_08_transformation_laws() {
    let started = Instant::now();
    let e = wide_engine();
    let tau = PeriodMatrix::random(2, 8000);
    let even = enumerate_characteristics(2, ParityFilter::Even).unwrap();
    let mut worst_modulus = 0.0f64;
    let mut worst_rho4 = 0.0f64;
    let mut worst_ratio = 0.0f64;
    let mut worst_star = 0.0f64;
    for k in 0..10u64 {
        let gamma = sample_subgroup_tame(2, SubgroupTag::Principal(2), 5, 8100 + k, &tau, 0.05);
        let m = even[k as usize % even.len()].clone();
        let rep = e
            .transformation_check(&gamma, &tau, TransformKind::WeightHalf(m))
            .unwrap();
        worst_modulus = worst_modulus.max(rep.modulus_residual);
        worst_rho4 = worst_rho4.max(rep.law_residual);

        let gamma = if k % 2 == 0 {
            sample_subgroup_tame(2, SubgroupTag::Theta(2), 5, 8200 + k, &tau, 0.05)
        } else {
            sample_theta24_nonstar_tame(2, 3, 8200 + k, &tau, 0.05)
        };
        let rep = e
            .transformation_check(&gamma, &tau, TransformKind::SecondOrder)
            .unwrap();
        worst_ratio = worst_ratio.max(rep.law_residual);

        let gamma = sample_subgroup_tame(2, SubgroupTag::ThetaStar24, 5, 8300 + k, &tau, 0.05);
        let rep = e
            .transformation_check(&gamma, &tau, TransformKind::SecondOrderSquared)
            .unwrap();
        worst_star = worst_star.max(rep.law_residual);
    }
    assert!(worst_modulus < 1e-8, "modulus residual {worst_modulus:.3e}");
    assert!(worst_rho4 < 1e-7, "rho^4 residual {worst_rho4:.3e}");
    assert!(worst_star < 1e-8, "star ratio residual {worst_star:.3e}");
    report(
        "criterion 08: transformation laws (10 gamma per subgroup)",
        worst_modulus.max(worst_rho4).max(worst_ratio).max(worst_star),
        1e-7,
        started.elapsed(),
        Duration::from_secs(60),
    );
}

#[test]
fn acceptance_09_e8_counts_fast() {
    let started = Instant::now();
    let lat = Lattice::e8();
    assert_eq!(lat.vectors_of_norm(2).unwrap().len(), 240);
    assert_eq!(lat.vectors_of_norm(4).unwrap().len(), 2160);
    let shell_elapsed = started.elapsed();
    assert!(shell_elapsed < Duration::from_secs(1), "shell counts too slow");

    // N_T for the rank-9 padded Gram target, given the automorphism count
    let t9_started = Instant::now();
    let mut t9 = IMatrix::zeros(9, 9);
    t9.view_mut((0, 0), (8, 8)).copy_from(&e8_gram());
    let mut known = HashMap::new();
    known.insert(
        e8_gram().transpose().iter().cloned().collect::<Vec<i64>>(),
        E8_AUTOMORPHISM_ORDER,
    );
    let n_t = lat.theta_coefficient(&t9, u64::MAX, &known).unwrap();
    assert_eq!(n_t, E8_AUTOMORPHISM_ORDER);
    assert_eq!(n_t, 696_729_600);
    assert!(t9_started.elapsed() < Duration::from_secs(1));
    report(
        "criterion 09 (fast): roots 240, norm-4 2160, N_T by reduction",
        0.0,
        1.0,
        started.elapsed(),
        Duration::from_secs(2),
    );
}

#[test]
#[ignore = "full 696729600-leaf count; run with -- --ignored"]
fn acceptance_09_e8_automorphism_order_slow() {
    let started = Instant::now();
    let lat = Lattice::e8();
    let out = lat.diophantine_count(&e8_gram(), u64::MAX).unwrap();
    let factorial = |n: u64| (1..=n).product::<u64>();
    assert_eq!(out.count, factorial(4) * factorial(6) * factorial(8));
    report(
        "criterion 09 (slow): automorphism order 4!6!8!",
        0.0,
        1.0,
        started.elapsed(),
        Duration::from_secs(600),
    );
}

#[test]
fn acceptance_10_igusa_identity() {
    let started = Instant::now();
    let e = engine();
    let lat = Lattice::e8();
    let mut worst = 0.0f64;
    for tau_val in [
        num_complex::Complex64::new(0.0, 2.0),
        num_complex::Complex64::new(0.3, 1.0),
        num_complex::Complex64::new(-0.4, 1.3),
    ] {
        worst = worst.max(theta_forms::e8::igusa_cross_check(&e, &lat, tau_val, 1e-13).unwrap());
    }
    // q-coefficients of the lattice series come from the shell counts
    assert_eq!(lat.vectors_of_norm(0).unwrap().len(), 1);
    assert_eq!(lat.vectors_of_norm(2).unwrap().len(), 240);
    assert_eq!(lat.vectors_of_norm(4).unwrap().len(), 2160);
    report(
        "criterion 10: genus-1 identity sum theta_m^8 = 2 Theta_E8",
        worst,
        1e-9,
        started.elapsed(),
        Duration::from_secs(10),
    );
}

#[test]
fn acceptance_11_linalg_properties() {
    use num_complex::Complex64;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(11_000);
    let mut cmat = |r: usize, c: usize| {
        CMatrix::from_fn(r, c, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    };
    let mut worst = 0.0f64;

    for n in 2..=6 {
        let m = cmat(n, n);
        let adj = linalg::adjugate(&m).unwrap();
        let det = linalg::det(&m).unwrap();
        let id = CMatrix::identity(n, n);
        worst = worst.max(linalg::rel_residual(&(&m * &adj), &(id * det)));
    }
    for (rows, cols) in [(2, 4), (3, 3), (3, 5)] {
        let a = cmat(rows, cols);
        let b = cmat(cols, rows);
        let scale = linalg::max_abs(&(&a * &b)).max(1.0);
        worst = worst.max(linalg::binet_check(&a, &b).unwrap() / scale);
    }
    for k in 0..=4usize {
        let m = cmat(4, 4);
        let j = OrderedSubset::enumerate_range(4, k.min(4));
        for cols in j {
            let scale = linalg::max_abs(&m).max(1.0);
            worst =
                worst.max(linalg::laplace_block_expansion_check(&m, &cols).unwrap() / scale);
        }
    }
    // exhaustive interleaving-sign identity for n <= 5
    for n in 1..=5usize {
        for k in 0..=n {
            let subsets = OrderedSubset::enumerate_range(n, k);
            for i in &subsets {
                for j in &subsets {
                    let lhs = i.sign() * j.sign();
                    let rhs = if (i.element_sum() + j.element_sum()) % 2 == 0 {
                        1
                    } else {
                        -1
                    };
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }
    report(
        "criterion 11: linear-algebra property suite",
        worst,
        1e-12,
        started.elapsed(),
        Duration::from_secs(5),
    );
}

#[test]
fn acceptance_12_oracle_independence_spotchecks() {
    // The dedicated oracle suite lives in tests/oracles.rs; this criterion
    // re-derives three frozen values here with self-contained oracles so
    // the acceptance run is complete on its own.
    let started = Instant::now();

    // direct summation oracle for theta[0,0](i)
    let mut direct = 0.0f64;
    for p in -40i64..=40 {
        direct += (-std::f64::consts::PI * (p * p) as f64).exp();
    }
    assert!((direct - 1.0864348112133080).abs() < 1e-13);

    // the engine agrees with the oracle
    let e = engine();
    let tau = PeriodMatrix::new(CMatrix::from_element(
        1,
        1,
        num_complex::Complex64::new(0.0, 1.0),
    ))
    .unwrap();
    let m = Characteristic::zero(1);
    let v = e.theta(&m, &tau, &nalgebra::DVector::zeros(1)).unwrap();
    assert!((v.value.re - direct).abs() < 1e-12);

    // recursive-expansion determinant oracle against the LU path
    fn det_recursive(m: &CMatrix) -> num_complex::Complex64 {
        let n = m.nrows();
        if n == 1 {
            return m[(0, 0)];
        }
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        for j in 0..n {
            let minor = m.clone().remove_row(0).remove_column(j);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += m[(0, j)] * det_recursive(&minor) * num_complex::Complex64::new(sign, 0.0);
        }
        acc
    }
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    let mut rng = StdRng::seed_from_u64(12_000);
    let m = CMatrix::from_fn(5, 5, |_, _| {
        num_complex::Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let lu = linalg::det(&m).unwrap();
    let rec = det_recursive(&m);
    assert!((lu - rec).norm() < 1e-12 * rec.norm());

    // finite-difference oracle for the odd gradient at tau = i
    let m_odd = Characteristic::new(F2Vector::parse("1").unwrap(), F2Vector::parse("1").unwrap())
        .unwrap();
    let h = 1e-4;
    let at = |x: f64| {
        e.theta(
            &m_odd,
            &tau,
            &nalgebra::DVector::from_element(1, num_complex::Complex64::new(x, 0.0)),
        )
        .unwrap()
        .value
    };
    let coarse = (at(h) - at(-h)) / num_complex::Complex64::new(2.0 * h, 0.0);
    let fine = (at(h / 2.0) - at(-h / 2.0)) / num_complex::Complex64::new(h, 0.0);
    let richardson = (fine * num_complex::Complex64::new(4.0, 0.0) - coarse)
        / num_complex::Complex64::new(3.0, 0.0);
    assert!((richardson.norm() - 2.8486946039877873).abs() < 1e-9);
    let grad = e.theta_gradient(&m_odd, &tau, false).unwrap().gradient[0];
    assert!((grad - richardson).norm() < 1e-9);

    report(
        "criterion 12: oracle spot-checks (full matrix in tests/oracles.rs)",
        0.0,
        1.0,
        started.elapsed(),
        Duration::from_secs(10),
    );
}
