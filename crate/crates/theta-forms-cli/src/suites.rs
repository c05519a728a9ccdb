//! The named identity suites behind `verify --suite ...`. Each suite runs a
//! fixed set of checks at the configured genus, seed, and tolerance and
//! returns one row per check. Tolerances are the acceptance thresholds for
//! the corresponding identities.

use crate::report::CheckRow;
use std::time::Instant;
use theta_forms::f2char::{all_f2_vectors, enumerate_characteristics, ParityFilter};
use theta_forms::forms::pairing::{
    adjugate_theorem_check, adjugate_w_identity_check, det_a_weight_check, freitag_pairing,
};
use theta_forms::forms::{conversion_identities_check, ThetaBasis};
use theta_forms::linalg;
use theta_forms::symplectic::{sample_subgroup_tame, sample_theta24_nonstar_tame};
use theta_forms::theta::{heat_equation_residual, TransformKind};
use theta_forms::{CMatrix, Error, F2Vector, PeriodMatrix, Result, SubgroupTag, ThetaEngine};

pub struct SuiteContext {
    pub engine: ThetaEngine,
    pub g: usize,
    pub seed: u64,
    pub taus: Vec<PeriodMatrix>,
}

impl SuiteContext {
    /// Engine with a generous radius cap for evaluations at transported
    /// points.
    fn wide(&self) -> ThetaEngine {
        ThetaEngine {
            tol: self.engine.tol,
            radius_cap: self.engine.radius_cap.max(160),
        }
    }

    fn tau(&self, k: usize) -> &PeriodMatrix {
        &self.taus[k % self.taus.len()]
    }
}

fn timed<F: FnOnce() -> Result<f64>>(name: &str, tol: f64, f: F) -> Result<CheckRow> {
    let started = Instant::now();
    let residual = f()?;
    Ok(CheckRow::new(
        name,
        residual,
        tol,
        started.elapsed().as_millis() as u64,
    ))
}

pub fn heat(ctx: &SuiteContext) -> Result<Vec<CheckRow>> {
    let chars = enumerate_characteristics(ctx.g, ParityFilter::All)?;
    let mut rows = Vec::new();
    for (k, tau) in ctx.taus.iter().enumerate() {
        let started = Instant::now();
        let mut worst = 0.0f64;
        for m in &chars {
            worst = worst.max(heat_equation_residual(&ctx.engine, m, tau)?);
        }
        rows.push(CheckRow::new(
            format!("heat g={} tau#{k}", ctx.g),
            worst,
            1e-9,
            started.elapsed().as_millis() as u64,
        ));
    }
    Ok(rows)
}

pub fn bilinear(ctx: &SuiteContext) -> Result<Vec<CheckRow>> {
    let chars = enumerate_characteristics(ctx.g, ParityFilter::All)?;
    let mut rows = Vec::new();
    for (k, tau) in ctx.taus.iter().enumerate() {
        let z = PeriodMatrix::random_z(ctx.g, ctx.seed.wrapping_add(k as u64));
        let started = Instant::now();
        let mut worst = 0.0f64;
        for m in &chars {
            worst = worst.max(ctx.engine.riemann_bilinear_residual(m, tau, &z)?);
        }
        rows.push(CheckRow::new(
            format!("bilinear g={} (tau,z)#{k}", ctx.g),
            worst,
            1e-9,
            started.elapsed().as_millis() as u64,
        ));
    }
    Ok(rows)
}

pub fn addition(ctx: &SuiteContext) -> Result<Vec<CheckRow>> {
    let sigmas = all_f2_vectors(ctx.g);
    let mut rows = Vec::new();
    for (k, tau) in ctx.taus.iter().enumerate() {
        let started = Instant::now();
        let mut worst = 0.0f64;
        for alpha in &sigmas {
            for eps in &sigmas {
                worst = worst.max(ctx.engine.addition_residual(alpha, eps, tau)?);
            }
        }
        rows.push(CheckRow::new(
            format!("addition g={} tau#{k}", ctx.g),
            worst,
            1e-9,
            started.elapsed().as_millis() as u64,
        ));
    }
    Ok(rows)
}

pub fn conversion(ctx: &SuiteContext) -> Result<Vec<CheckRow>> {
    if ctx.g > 3 {
        return Err(Error::SizeLimit("conversion suite runs at g <= 3".into()));
    }
    let mut rows = Vec::new();
    for (k, tau) in ctx.taus.iter().enumerate() {
        let started = Instant::now();
        let rep = conversion_identities_check(&ctx.engine, tau)?;
        let elapsed = started.elapsed().as_millis() as u64;
        rows.push(CheckRow::new(
            format!("conversion C<-A g={} tau#{k}", ctx.g),
            rep.c_from_a,
            1e-9,
            elapsed,
        ));
        rows.push(CheckRow::new(
            format!("conversion A<-C g={} tau#{k}", ctx.g),
            rep.a_from_c,
            1e-9,
            elapsed,
        ));
    }
    Ok(rows)
}

pub fn transformation(ctx: &SuiteContext, samples: usize) -> Result<Vec<CheckRow>> {
    let engine = ctx.wide();
    let tau = ctx.tau(0);
    let even = enumerate_characteristics(ctx.g, ParityFilter::Even)?;
    let mut rows = Vec::new();
    for k in 0..samples {
        let seed = ctx.seed.wrapping_add(k as u64);
        // weight-1/2 law on the level-2 group
        let gamma = sample_subgroup_tame(ctx.g, SubgroupTag::Principal(2), 5, seed, tau, 0.05);
        let m = even[(seed as usize) % even.len()].clone();
        let started = Instant::now();
        let rep = engine.transformation_check(&gamma, tau, TransformKind::WeightHalf(m))?;
        let elapsed = started.elapsed().as_millis() as u64;
        rows.push(CheckRow::new(
            format!("weight-half modulus gamma#{k}"),
            rep.modulus_residual,
            1e-8,
            elapsed,
        ));
        rows.push(CheckRow::new(
            format!("weight-half rho^4 gamma#{k}"),
            rep.law_residual,
            1e-7,
            elapsed,
        ));

        // second-order ratio on the theta group (mix star and non-star)
        let gamma = if k % 2 == 0 {
            sample_subgroup_tame(ctx.g, SubgroupTag::Theta(2), 5, seed, tau, 0.05)
        } else {
            sample_theta24_nonstar_tame(ctx.g, 3, seed, tau, 0.05)
        };
        let started = Instant::now();
        let rep = engine.transformation_check(&gamma, tau, TransformKind::SecondOrder)?;
        rows.push(CheckRow::new(
            format!("second-order ratio +-1 gamma#{k}"),
            rep.law_residual,
            1e-8,
            started.elapsed().as_millis() as u64,
        ));

        // trivial squared character on the index-two subgroup
        let gamma = sample_subgroup_tame(ctx.g, SubgroupTag::ThetaStar24, 5, seed, tau, 0.05);
        let started = Instant::now();
        let rep = engine.transformation_check(&gamma, tau, TransformKind::SecondOrderSquared)?;
        rows.push(CheckRow::new(
            format!("second-order ratio +1 on star gamma#{k}"),
            rep.law_residual,
            1e-8,
            started.elapsed().as_millis() as u64,
        ));
    }
    Ok(rows)
}

fn distinct_pair(g: usize, seed: u64) -> (F2Vector, F2Vector) {
    let sigmas = all_f2_vectors(g);
    let a = (seed as usize) % sigmas.len();
    let b = (a + 1 + (seed as usize / sigmas.len()) % (sigmas.len() - 1)) % sigmas.len();
    (sigmas[a].clone(), sigmas[b].clone())
}

pub fn adjoint(ctx: &SuiteContext) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    for (k, tau) in ctx.taus.iter().enumerate() {
        let (eps, delta) = distinct_pair(ctx.g, ctx.seed.wrapping_add(k as u64));
        rows.push(timed(
            &format!("adjugate identity g={} tau#{k}", ctx.g),
            1e-7,
            || Ok(adjugate_theorem_check(&ctx.engine, tau, &eps, &delta)?.residual),
        )?);
    }
    Ok(rows)
}

pub fn adjoint_w(ctx: &SuiteContext) -> Result<Vec<CheckRow>> {
    if !(2..=3).contains(&ctx.g) {
        return Err(Error::SizeLimit("wedge-sum suite runs at g = 2 or 3".into()));
    }
    let mut rows = Vec::new();
    for (k, tau) in ctx.taus.iter().enumerate() {
        let (eps, delta) = distinct_pair(ctx.g, ctx.seed.wrapping_add(k as u64));
        rows.push(timed(
            &format!("wedge-sum identity g={} tau#{k}", ctx.g),
            1e-7,
            || adjugate_w_identity_check(&ctx.engine, tau, &eps, &delta),
        )?);
    }
    Ok(rows)
}

pub fn det_weight(ctx: &SuiteContext) -> Result<Vec<CheckRow>> {
    let (eps, delta) = distinct_pair(ctx.g, ctx.seed);
    let taus: Vec<PeriodMatrix> = (0..20)
        .map(|k| PeriodMatrix::random(ctx.g, ctx.seed.wrapping_add(1000 + k)))
        .collect();
    let base = ctx.tau(0).clone();
    let gammas: Vec<_> = (0..5)
        .map(|k| {
            (
                sample_subgroup_tame(
                    ctx.g,
                    SubgroupTag::ThetaStar24,
                    5,
                    ctx.seed.wrapping_add(k),
                    &base,
                    0.05,
                ),
                base.clone(),
            )
        })
        .collect();
    let started = Instant::now();
    let rep = det_a_weight_check(&ctx.wide(), &taus, &gammas, &eps, &delta)?;
    let elapsed = started.elapsed().as_millis() as u64;
    let mut rows = Vec::new();
    // non-vanishing: at least one sampled determinant above threshold;
    // report as a residual that must stay below 1 - 1e-6
    let nonvanish_residual = if rep.max_scaled_det > 1e-6 { 0.0 } else { 1.0 };
    rows.push(CheckRow::new(
        format!("det A nonvanishing over 20 tau (max {:.3e})", rep.max_scaled_det),
        nonvanish_residual,
        0.5,
        elapsed,
    ));
    rows.push(CheckRow::new(
        "det A weight g+2 over 5 gamma",
        rep.weight_residual,
        1e-6,
        elapsed,
    ));
    Ok(rows)
}

pub fn binet(ctx: &SuiteContext) -> Result<Vec<CheckRow>> {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    let mut rng = StdRng::seed_from_u64(ctx.seed);
    let mut cmat = |r: usize, c: usize| {
        CMatrix::from_fn(r, c, |_, _| {
            num_complex::Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    };
    let mut rows = Vec::new();

    let a = cmat(2, 4);
    let b = cmat(4, 2);
    rows.push(timed("binet 2x4", 1e-12, || {
        Ok(linalg::binet_check(&a, &b)? / linalg::max_abs(&(&a * &b)).max(1.0))
    })?);

    let a = cmat(3, 3);
    let b = cmat(3, 3);
    rows.push(timed("binet square 3x3", 1e-12, || {
        Ok(linalg::binet_check(&a, &b)? / linalg::max_abs(&(&a * &b)).max(1.0))
    })?);

    let a = cmat(3, 2);
    let b = cmat(2, 3);
    rows.push(timed("binet empty sum 3x2", 1e-12, || {
        linalg::binet_check(&a, &b)
    })?);

    let m = cmat(5, 5);
    rows.push(timed("adjugate identity 5x5", 1e-12, || {
        let adj = linalg::adjugate(&m)?;
        let det = linalg::det(&m)?;
        let id = CMatrix::identity(5, 5);
        Ok(linalg::rel_residual(&(&m * &adj), &(id * det)))
    })?);

    let m = cmat(4, 4);
    rows.push(timed("block expansion 4x4 k=2", 1e-12, || {
        let j = linalg::OrderedSubset::of_range(4, vec![1, 3])?;
        Ok(linalg::laplace_block_expansion_check(&m, &j)? / linalg::max_abs(&m).max(1.0))
    })?);

    rows.push(timed("interleaving signs n<=5", 0.0, || {
        for n in 1..=5usize {
            for k in 0..=n {
                let subsets = linalg::OrderedSubset::enumerate_range(n, k);
                for i in &subsets {
                    for j in &subsets {
                        let lhs = i.sign() * j.sign();
                        let rhs = if (i.element_sum() + j.element_sum()) % 2 == 0 {
                            1
                        } else {
                            -1
                        };
                        if lhs != rhs {
                            return Ok(1.0);
                        }
                    }
                }
            }
        }
        Ok(0.0)
    })?);
    Ok(rows)
}

pub fn pairing_parity(ctx: &SuiteContext) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    let sign = if ctx.g % 2 == 0 { -1.0 } else { 1.0 };
    for (k, tau) in ctx.taus.iter().enumerate() {
        let (eps, delta) = distinct_pair(ctx.g, ctx.seed.wrapping_add(k as u64));
        rows.push(timed(
            &format!("pairing parity g={} tau#{k}", ctx.g),
            1e-10,
            || {
                let basis = ThetaBasis::compute(&ctx.engine, tau)?;
                let fwd = freitag_pairing(&basis, &eps, &delta)?;
                let bwd = freitag_pairing(&basis, &delta, &eps)?;
                let expect = bwd.matrix() * num_complex::Complex64::new(sign, 0.0);
                Ok(linalg::rel_residual(fwd.matrix(), &expect))
            },
        )?);
    }
    Ok(rows)
}
