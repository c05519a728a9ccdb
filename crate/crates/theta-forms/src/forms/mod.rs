//! Vector-valued modular forms built from theta constants.
//!
//! For second-order constants Theta[sigma] with z-Hessians H[sigma] at
//! z = 0, the symmetric matrix forms are
//!
//!   C_{eps,delta} = 2 v v^t            (v = grad theta[eps;delta] at 0, [eps;delta] odd)
//!   A_{eps,delta} = H[delta] Theta[eps] - H[eps] Theta[delta]
//!
//! and the two are linear combinations of each other over the
//! characteristic group:
//!
//!   C_{eps,delta}   = 1/2 sum over alpha of (-1)^(alpha.delta) A_{eps+alpha, alpha}
//!   A_{eps+alpha,alpha} = 2^(1-g) sum over odd [eps, delta] of
//!                         (-1)^(alpha.delta) C_{eps,delta}.
//!
//! Symmetric g x g matrices are flattened to length N = g(g+1)/2 vectors in
//! the canonical pair order (1,1), (1,2), ..., (1,g), (2,2), ..., (g,g).
//! Where a flattened vector acts as a trace pairing row (tr(B C) for
//! symmetric B), the off-diagonal entries carry weight 2.

pub mod decomp;
pub mod pairing;

use crate::error::{Error, Result};
use crate::f2char::{all_f2_vectors, Characteristic, F2Vector};
use crate::linalg::{CMatrix, CVector};
use crate::theta::{PeriodMatrix, SecondOrderBasis, ThetaEngine};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Linear position of the pair (i, j), 0-based with i <= j, in the
/// canonical order (0,0), (0,1), ..., (0,g-1), (1,1), ..., (g-1,g-1).
pub fn sym_pair_position(i: usize, j: usize, g: usize) -> usize {
    debug_assert!(i <= j && j < g);
    i * g - i * (i + 1) / 2 + j
}

/// The canonical pair list, 0-based.
pub fn sym_pairs(g: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(g * (g + 1) / 2);
    for i in 0..g {
        for j in i..g {
            out.push((i, j));
        }
    }
    out
}

/// A symmetric matrix-valued form together with its flattened views.
#[derive(Debug, Clone)]
pub struct FormMatrix {
    mat: CMatrix,
}

impl FormMatrix {
    pub fn new(mat: CMatrix) -> Self {
        debug_assert_eq!(mat.nrows(), mat.ncols());
        FormMatrix { mat }
    }

    pub fn g(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    /// Plain entries in canonical pair order.
    pub fn flatten(&self) -> CVector {
        let g = self.g();
        CVector::from_iterator(
            g * (g + 1) / 2,
            sym_pairs(g).into_iter().map(|(i, j)| self.mat[(i, j)]),
        )
    }

    /// Entries weighted so that row . vec(B) = tr(B M) for symmetric B
    /// flattened plainly: off-diagonal pairs appear twice in the trace.
    pub fn flatten_trace_weighted(&self) -> CVector {
        let g = self.g();
        CVector::from_iterator(
            g * (g + 1) / 2,
            sym_pairs(g).into_iter().map(|(i, j)| {
                let w = if i == j { 1.0 } else { 2.0 };
                self.mat[(i, j)] * Complex64::new(w, 0.0)
            }),
        )
    }
}

/// Second-order constants and Hessians at one tau, indexed by the canonical
/// sigma order, plus the derived tau-derivative operator matrices.
#[derive(Debug, Clone)]
pub struct ThetaBasis {
    g: usize,
    inner: SecondOrderBasis,
}

impl ThetaBasis {
    pub fn compute(engine: &ThetaEngine, tau: &PeriodMatrix) -> Result<Self> {
        Ok(ThetaBasis {
            g: tau.g(),
            inner: engine.second_order_basis(tau)?,
        })
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn trunc_bound(&self) -> f64 {
        self.inner.trunc_bound
    }

    pub fn value(&self, sigma: &F2Vector) -> Complex64 {
        self.inner.values[sigma.index()]
    }

    pub fn hessian(&self, sigma: &F2Vector) -> &CMatrix {
        &self.inner.hessians[sigma.index()]
    }

    /// The matrix of normalized tau-derivatives
    /// (d_ab) Theta[sigma] with d_ab = (1 + delta_ab)/2 d/dtau_ab,
    /// which equals Hessian / (8 pi i).
    pub fn d_op_matrix(&self, sigma: &F2Vector) -> CMatrix {
        self.hessian(sigma) / Complex64::new(0.0, 8.0 * PI)
    }
}

/// C_{eps,delta} = 2 v v^t for the gradient v of the odd theta function
/// theta[eps;delta] at z = 0; rank at most 1.
pub fn c_matrix(
    engine: &ThetaEngine,
    tau: &PeriodMatrix,
    eps: &F2Vector,
    delta: &F2Vector,
) -> Result<FormMatrix> {
    let m = Characteristic::new(eps.clone(), delta.clone())?;
    if m.is_even() {
        return Err(Error::Parity(
            "C is defined for odd characteristics only".into(),
        ));
    }
    let v = engine.theta_gradient(&m, tau, false)?.gradient;
    Ok(c_from_gradient(&v))
}

/// C built from an already-computed gradient.
pub fn c_from_gradient(v: &CVector) -> FormMatrix {
    let g = v.len();
    let mat = CMatrix::from_fn(g, g, |i, j| Complex64::new(2.0, 0.0) * v[i] * v[j]);
    FormMatrix::new(mat)
}

/// A_{eps,delta} = Hess(Theta[delta]) Theta[eps] - Hess(Theta[eps]) Theta[delta],
/// antisymmetric under swapping eps and delta.
pub fn a_matrix(basis: &ThetaBasis, eps: &F2Vector, delta: &F2Vector) -> FormMatrix {
    let te = basis.value(eps);
    let td = basis.value(delta);
    let he = basis.hessian(eps);
    let hd = basis.hessian(delta);
    FormMatrix::new(hd * te - he * td)
}

/// Max-entry relative residuals of the two conversion identities at one tau,
/// over every admissible index combination.
#[derive(Debug, Clone)]
pub struct ConversionReport {
    /// C from gradients against the alpha-sum of A's.
    pub c_from_a: f64,
    /// A against the odd-characteristic sum of C's.
    pub a_from_c: f64,
}

pub fn conversion_identities_check(
    engine: &ThetaEngine,
    tau: &PeriodMatrix,
) -> Result<ConversionReport> {
    let g = tau.g();
    if g > 3 {
        return Err(Error::SizeLimit(
            "conversion check enumerates 4^g identities; use g <= 3".into(),
        ));
    }
    let basis = ThetaBasis::compute(engine, tau)?;
    let sigmas = all_f2_vectors(g);

    // all C matrices for odd [eps, delta], keyed by (eps.index, delta.index)
    let gradients = engine.odd_gradients(tau)?;
    let mut c_by_index = vec![vec![None; 1 << g]; 1 << g];
    for (m, v) in &gradients {
        c_by_index[m.eps.index()][m.delta.index()] = Some(c_from_gradient(v));
    }

    // identity 1: C_{eps,delta} = 1/2 sum_alpha (-1)^(alpha.delta) A_{eps+alpha, alpha}
    let mut c_from_a = 0.0f64;
    for (m, _) in &gradients {
        let mut sum = CMatrix::zeros(g, g);
        for alpha in &sigmas {
            let a = a_matrix(&basis, &m.eps.add(alpha), alpha);
            sum += a.matrix() * Complex64::new(alpha.pairing_sign(&m.delta), 0.0);
        }
        sum *= Complex64::new(0.5, 0.0);
        let c = c_by_index[m.eps.index()][m.delta.index()]
            .as_ref()
            .expect("gradient computed above");
        c_from_a = c_from_a.max(crate::linalg::rel_residual(c.matrix(), &sum));
    }

    // identity 2: A_{eps+alpha, alpha} = 2^(1-g) sum over odd [eps, delta] of
    // (-1)^(alpha.delta) C_{eps,delta}
    let mut a_from_c = 0.0f64;
    let scale = Complex64::new((2.0f64).powi(1 - g as i32), 0.0);
    for eps in &sigmas {
        for alpha in &sigmas {
            let a = a_matrix(&basis, &eps.add(alpha), alpha);
            let mut sum = CMatrix::zeros(g, g);
            for delta in &sigmas {
                if let Some(c) = &c_by_index[eps.index()][delta.index()] {
                    sum += c.matrix() * Complex64::new(alpha.pairing_sign(delta), 0.0);
                }
            }
            sum *= scale;
            // both sides vanish when eps = 0; rel_residual treats 0-vs-0 as 0
            a_from_c = a_from_c.max(crate::linalg::rel_residual(a.matrix(), &sum));
        }
    }

    Ok(ConversionReport { c_from_a, a_from_c })
}

/// Coefficients of the degree-(N-1) differential form tr(M dtau-hat) in the
/// canonical basis, for a symmetric matrix form M: entry (i, j), i <= j,
/// carries weight (2 - delta_ij) because the full trace visits off-diagonal
/// pairs twice.
pub fn trace_form_coefficients(m: &FormMatrix) -> CVector {
    m.flatten_trace_weighted()
}

/// Coefficient vector of omega = tr(adj(A_{eps,delta}) dtau-hat).
pub fn omega_coefficients(
    engine: &ThetaEngine,
    tau: &PeriodMatrix,
    eps: &F2Vector,
    delta: &F2Vector,
) -> Result<CVector> {
    if eps == delta {
        return Err(Error::Domain(
            "omega needs distinct characteristics (A vanishes for eps = delta)".into(),
        ));
    }
    let basis = ThetaBasis::compute(engine, tau)?;
    let a = a_matrix(&basis, eps, delta);
    let adj = crate::linalg::adjugate(a.matrix())?;
    Ok(trace_form_coefficients(&FormMatrix::new(adj)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::f2char::{enumerate_characteristics, ParityFilter};
    use crate::linalg::{max_abs, numerical_rank, rel_residual};

    fn engine() -> ThetaEngine {
        ThetaEngine::default()
    }

    #[test]
    fn pair_positions() {
        // g = 3: (0,0) (0,1) (0,2) (1,1) (1,2) (2,2)
        let expect = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
        assert_eq!(sym_pairs(3), expect);
        for (pos, (i, j)) in expect.iter().enumerate() {
            assert_eq!(sym_pair_position(*i, *j, 3), pos);
        }
    }

    #[test]
    fn c_has_rank_one() {
        let e = engine();
        let tau = PeriodMatrix::random(2, 101);
        for m in enumerate_characteristics(2, ParityFilter::Odd).unwrap() {
            let c = c_matrix(&e, &tau, &m.eps, &m.delta).unwrap();
            assert!(numerical_rank(c.matrix(), 1e-8) <= 1);
        }
    }

    #[test]
    fn c_rejects_even() {
        let e = engine();
        let tau = PeriodMatrix::random(2, 103);
        let m = Characteristic::zero(2);
        assert!(matches!(
            c_matrix(&e, &tau, &m.eps, &m.delta),
            Err(Error::Parity(_))
        ));
    }

    #[test]
    fn c_value_g1() {
        // C = 2 v^2 with |v| = 2 pi eta(i)^3 at tau = i
        let e = engine();
        let tau = PeriodMatrix::new(CMatrix::from_element(
            1,
            1,
            Complex64::new(0.0, 1.0),
        ))
        .unwrap();
        let one = F2Vector::parse("1").unwrap();
        let c = c_matrix(&e, &tau, &one, &one).unwrap();
        let expected = 2.0 * 2.8486946039877873f64.powi(2);
        assert!(
            (max_abs(c.matrix()) - expected).abs() < 1e-9,
            "|C| = {}, expected {expected}",
            max_abs(c.matrix())
        );
    }

    #[test]
    fn a_antisymmetry() {
        let e = engine();
        let tau = PeriodMatrix::random(2, 107);
        let basis = ThetaBasis::compute(&e, &tau).unwrap();
        let sigmas = all_f2_vectors(2);
        for eps in &sigmas {
            for delta in &sigmas {
                let fwd = a_matrix(&basis, eps, delta);
                let bwd = a_matrix(&basis, delta, eps);
                let sum = fwd.matrix() + bwd.matrix();
                let scale = max_abs(fwd.matrix()).max(1.0);
                assert!(max_abs(&sum) < 1e-12 * scale);
                if eps == delta {
                    assert!(max_abs(fwd.matrix()) == 0.0);
                }
            }
        }
    }

    #[test]
    fn a_quotient_form() {
        // A_{eps,delta} = -8 pi i Theta[delta]^2 d(Theta[eps]/Theta[delta])
        // via the tau-derivative operator matrix.
        let e = engine();
        let tau = PeriodMatrix::random(2, 109);
        let basis = ThetaBasis::compute(&e, &tau).unwrap();
        let eps = F2Vector::parse("01").unwrap();
        let delta = F2Vector::parse("10").unwrap();
        let a = a_matrix(&basis, &eps, &delta);
        let p = basis.d_op_matrix(&eps) * basis.value(&delta)
            - basis.d_op_matrix(&delta) * basis.value(&eps);
        let quotient_form = p * Complex64::new(0.0, -8.0 * PI);
        assert!(rel_residual(a.matrix(), &quotient_form) < 1e-12);
    }

    #[test]
    fn conversion_identities_g1_g2() {
        let e = engine();
        for g in 1..=2 {
            let tau = PeriodMatrix::random(g, 111 + g as u64);
            let rep = conversion_identities_check(&e, &tau).unwrap();
            assert!(rep.c_from_a < 1e-10, "g = {g}: {rep:?}");
            assert!(rep.a_from_c < 1e-10, "g = {g}: {rep:?}");
        }
    }

    #[test]
    fn conversion_identities_on_product_locus() {
        let e = engine();
        let tau = PeriodMatrix::block_diag(
            &PeriodMatrix::random(1, 117),
            &PeriodMatrix::random(1, 119),
        );
        let rep = conversion_identities_check(&e, &tau).unwrap();
        assert!(rep.c_from_a < 1e-10, "{rep:?}");
        assert!(rep.a_from_c < 1e-10, "{rep:?}");
    }

    #[test]
    fn omega_expansion_g2() {
        let e = engine();
        let tau = PeriodMatrix::random(2, 127);
        let eps = F2Vector::parse("01").unwrap();
        let delta = F2Vector::parse("10").unwrap();
        let coeffs = omega_coefficients(&e, &tau, &eps, &delta).unwrap();
        assert!(coeffs.iter().any(|c| c.norm() > 1e-8));

        // coefficients are (adj A)_11, 2 (adj A)_12, (adj A)_22
        let basis = ThetaBasis::compute(&e, &tau).unwrap();
        let a = a_matrix(&basis, &eps, &delta);
        let adj = crate::linalg::adjugate(a.matrix()).unwrap();
        assert!((coeffs[0] - adj[(0, 0)]).norm() < 1e-12 * max_abs(&adj));
        assert!((coeffs[1] - adj[(0, 1)] * Complex64::new(2.0, 0.0)).norm() < 1e-12 * max_abs(&adj));
        assert!((coeffs[2] - adj[(1, 1)]).norm() < 1e-12 * max_abs(&adj));

        // equal characteristics are rejected
        assert!(matches!(
            omega_coefficients(&e, &tau, &eps, &eps),
            Err(Error::Domain(_))
        ));
    }
}
