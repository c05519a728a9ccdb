//! Pairings and wedge constructions producing degree-(N-1) differential
//! forms, and the Fourier-coefficient pairing on q-expansions.
//!
//! The pairing of two weight-(g-1)/2 scalar forms f, h is the matrix
//!
//!   B_ij = (-1)^(i+j) sum_{k=0}^{g-1} (-1)^k / binom(g-1, k)
//!          sum over I in P*_k(X_g minus i), J in P*_k(X_g minus j) of
//!          s(I) s(J) |d^I_J| f . |d^(I^c)_(J^c)| h,
//!
//! with d_ab = (1 + delta_ab)/2 d/dtau_ab. When f and h are (g-1)-st powers
//! of second-order theta constants, the heat equation collapses the
//! operator determinants to
//!
//!   |d^I_J| Theta^n = n (n-1) ... (n-k+1) Theta^(n-k) |(d Theta)^I_J|,
//!
//! so every entry is assembled from first-order derivative minors only;
//! the k-sum coefficient then simplifies to (-1)^k (g-1)!.
//!
//! With A = Hess(Theta[delta]) Theta[eps] - Hess(Theta[eps]) Theta[delta]
//! (so A = -8 pi i [dTheta[eps] Theta[delta] - Theta[eps] dTheta[delta]]),
//! expanding the adjugate by complementary minors gives the exact identity
//!
//!   adj(A_{eps,delta}) = (8 pi i)^(g-1) / (g-1)! . B_{eps,delta}.
//!
//! The same adjugate equals a signed sum of rank-one wedge forms
//!
//!   adj(A_{eps,delta}) = (pi^2 / 2^(g-2))^(g-1) .
//!       sum over sets {a_1 < ... < a_(g-1)} of distinct alpha with
//!       [eps+delta, alpha_j] odd of
//!       (-1)^(delta.(a_1+...+a_(g-1))) W([eps+delta,a_1], ..., [eps+delta,a_(g-1)]).

use super::{a_matrix, FormMatrix, ThetaBasis};
use crate::error::{Error, Result};
use crate::f2char::{all_f2_vectors, Characteristic, F2Vector};
use crate::linalg::{adjugate, int_is_psd, int_minor_det, max_abs, minor_det, rel_residual,
                    CMatrix, OrderedSubset};
use crate::symplectic::{IMatrix, SymplecticElement};
use crate::theta::{PeriodMatrix, ThetaEngine};
use num_complex::Complex64;
use num_rational::Ratio;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Wedge vector of g-1 gradients: component i is (-1)^(i+1) times the
/// determinant of the gradient matrix with row i removed.
fn wedge_vector(columns: &[nalgebra::DVector<Complex64>]) -> Result<nalgebra::DVector<Complex64>> {
    let g = columns.len() + 1;
    let mat = CMatrix::from_fn(g, g - 1, |r, c| columns[c][r]);
    let mut f = nalgebra::DVector::zeros(g);
    for i in 0..g {
        let minor = mat.clone().remove_row(i);
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        f[i] = crate::linalg::det(&minor)? * Complex64::new(sign, 0.0);
    }
    Ok(f)
}

/// W(m_1, ..., m_(g-1)) = pi^(2-2g) F^t F for the wedge F of the gradients
/// of g-1 distinct odd characteristics; symmetric of rank at most 1.
pub fn wedge_form(
    engine: &ThetaEngine,
    tau: &PeriodMatrix,
    chars: &[Characteristic],
) -> Result<FormMatrix> {
    let g = tau.g();
    if chars.len() != g - 1 {
        return Err(Error::Shape(format!(
            "wedge form needs g - 1 = {} characteristics, got {}",
            g - 1,
            chars.len()
        )));
    }
    for (i, m) in chars.iter().enumerate() {
        if m.is_even() {
            return Err(Error::Domain("wedge form needs odd characteristics".into()));
        }
        if chars[..i].contains(m) {
            return Err(Error::Domain(
                "wedge form needs distinct characteristics".into(),
            ));
        }
    }
    let gradients: Result<Vec<_>> = chars
        .iter()
        .map(|m| Ok(engine.theta_gradient(m, tau, false)?.gradient))
        .collect();
    let f = wedge_vector(&gradients?)?;
    let scale = Complex64::new(PI.powi(2 - 2 * g as i32), 0.0);
    let mat = CMatrix::from_fn(g, g, |i, j| scale * f[i] * f[j]);
    Ok(FormMatrix::new(mat))
}

/// The pairing matrix B for f = Theta[eps]^(g-1), h = Theta[delta]^(g-1),
/// assembled through the derivative-minor closed form. Defined for any
/// eps, delta; for eps = delta and even g it vanishes by the parity
/// {f, h} = (-1)^(g+1) {h, f}.
pub fn freitag_pairing(basis: &ThetaBasis, eps: &F2Vector, delta: &F2Vector) -> Result<FormMatrix> {
    let g = basis.g();
    if g < 2 {
        return Err(Error::SizeLimit("the pairing needs g >= 2".into()));
    }
    let te = basis.value(eps);
    let td = basis.value(delta);
    let de = basis.d_op_matrix(eps);
    let dd = basis.d_op_matrix(delta);
    let factorial: f64 = (1..g).map(|x| x as f64).product();

    let mut b = CMatrix::zeros(g, g);
    for i in 1..=g {
        for j in 1..=g {
            let mut entry = Complex64::new(0.0, 0.0);
            for k in 0..g {
                let subsets_i: Vec<OrderedSubset> = OrderedSubset::enumerate(
                    &(1..=g).filter(|&x| x != i).collect::<Vec<_>>(),
                    k,
                );
                let subsets_j: Vec<OrderedSubset> = OrderedSubset::enumerate(
                    &(1..=g).filter(|&x| x != j).collect::<Vec<_>>(),
                    k,
                );
                let power = te.powi((g - 1 - k) as i32) * td.powi(k as i32);
                let k_sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let mut inner = Complex64::new(0.0, 0.0);
                for si in &subsets_i {
                    let si_c = si.complement();
                    for sj in &subsets_j {
                        let sj_c = sj.complement();
                        let sgn = (si.sign() * sj.sign()) as f64;
                        let first = minor_det(&de, si.elems(), sj.elems())?;
                        let second = minor_det(&dd, si_c.elems(), sj_c.elems())?;
                        inner += Complex64::new(sgn, 0.0) * first * second;
                    }
                }
                entry += Complex64::new(k_sign, 0.0) * power * inner;
            }
            let outer_sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            b[(i - 1, j - 1)] = Complex64::new(outer_sign * factorial, 0.0) * entry;
        }
    }
    Ok(FormMatrix::new(b))
}

/// The proportionality constant between adj(A) and B forced by the
/// definitions here: (8 pi i)^(g-1) / (g-1)!.
pub fn adjugate_pairing_constant(g: usize) -> Complex64 {
    let factorial: f64 = (1..g).map(|x| x as f64).product();
    Complex64::new(0.0, 8.0 * PI).powi(g as i32 - 1) / Complex64::new(factorial, 0.0)
}

#[derive(Debug, Clone)]
pub struct AdjugateReport {
    /// Residual against (8 pi i)^(g-1)/(g-1)! B.
    pub residual: f64,
    /// Residual against (4 pi i)^(g-1)/(g-1)! B, kept as a diagnostic: with
    /// genuine z-Hessians in A this constant is off by exactly 2^(g-1).
    pub residual_half_constant: f64,
}

/// Compares adj(A_{eps,delta}) with the scaled pairing matrix B.
pub fn adjugate_theorem_check(
    engine: &ThetaEngine,
    tau: &PeriodMatrix,
    eps: &F2Vector,
    delta: &F2Vector,
) -> Result<AdjugateReport> {
    if eps == delta {
        return Err(Error::Domain("adjugate identity needs eps != delta".into()));
    }
    let g = tau.g();
    let basis = ThetaBasis::compute(engine, tau)?;
    let adj = adjugate(a_matrix(&basis, eps, delta).matrix())?;
    let b = freitag_pairing(&basis, eps, delta)?;
    let scaled = b.matrix() * adjugate_pairing_constant(g);
    let halved = &scaled * Complex64::new(0.5f64.powi(g as i32 - 1), 0.0);
    Ok(AdjugateReport {
        residual: rel_residual(&adj, &scaled),
        residual_half_constant: rel_residual(&adj, &halved),
    })
}

/// Compares adj(A_{eps,delta}) with the signed sum of wedge forms over sets
/// of distinct admissible alpha.
pub fn adjugate_w_identity_check(
    engine: &ThetaEngine,
    tau: &PeriodMatrix,
    eps: &F2Vector,
    delta: &F2Vector,
) -> Result<f64> {
    if eps == delta {
        return Err(Error::Domain("W-sum identity needs eps != delta".into()));
    }
    let g = tau.g();
    if !(2..=3).contains(&g) {
        return Err(Error::SizeLimit(
            "W-sum check enumerates subsets of admissible alpha; use g = 2 or 3".into(),
        ));
    }
    let basis = ThetaBasis::compute(engine, tau)?;
    let adj = adjugate(a_matrix(&basis, eps, delta).matrix())?;

    let top = eps.add(delta);
    let admissible: Vec<F2Vector> = all_f2_vectors(g)
        .into_iter()
        .filter(|alpha| top.dot(alpha) == 1)
        .collect();
    // [eps+delta, alpha] odd leaves exactly 2^(g-1) choices
    assert_eq!(admissible.len(), 1 << (g - 1));

    let mut total = CMatrix::zeros(g, g);
    for set in OrderedSubset::enumerate_range(admissible.len(), g - 1) {
        let chars: Vec<Characteristic> = set
            .elems()
            .iter()
            .map(|&pos| Characteristic::new(top.clone(), admissible[pos - 1].clone()).unwrap())
            .collect();
        let w = wedge_form(engine, tau, &chars)?;
        let parity: u8 = set
            .elems()
            .iter()
            .map(|&pos| delta.dot(&admissible[pos - 1]))
            .sum::<u8>()
            % 2;
        let sign = if parity == 0 { 1.0 } else { -1.0 };
        total += w.matrix() * Complex64::new(sign, 0.0);
    }
    let constant = Complex64::new(
        (PI * PI / 2f64.powi(g as i32 - 2)).powi(g as i32 - 1),
        0.0,
    );
    Ok(rel_residual(&adj, &(total * constant)))
}

#[derive(Debug, Clone)]
pub struct DetWeightReport {
    /// Largest |det A| over the sampled tau, relative to the entry scale.
    pub max_scaled_det: f64,
    /// Worst relative error of |det A(gamma tau)| against
    /// |det(C tau + D)|^(g+2) |det A(tau)| over the sampled elements.
    pub weight_residual: f64,
}

/// Non-vanishing and weight-(g+2) absolute-value transformation of det A.
pub fn det_a_weight_check(
    engine: &ThetaEngine,
    taus: &[PeriodMatrix],
    gammas: &[(SymplecticElement, PeriodMatrix)],
    eps: &F2Vector,
    delta: &F2Vector,
) -> Result<DetWeightReport> {
    let mut max_scaled_det = 0.0f64;
    for tau in taus {
        let basis = ThetaBasis::compute(engine, tau)?;
        let a = a_matrix(&basis, eps, delta);
        let d = crate::linalg::det(a.matrix())?;
        let scale = max_abs(a.matrix()).max(1e-300).powi(tau.g() as i32);
        max_scaled_det = max_scaled_det.max(d.norm() / scale);
    }

    let mut weight_residual = 0.0f64;
    for (gamma, tau) in gammas {
        let g = tau.g();
        let basis = ThetaBasis::compute(engine, tau)?;
        let det_here = crate::linalg::det(a_matrix(&basis, eps, delta).matrix())?;
        let moved = gamma.act(tau)?;
        let basis_moved = ThetaBasis::compute(engine, &moved)?;
        let det_moved = crate::linalg::det(a_matrix(&basis_moved, eps, delta).matrix())?;
        let denom = crate::linalg::det(&gamma.denominator(tau))?;
        let predicted = denom.norm().powi(g as i32 + 2) * det_here.norm();
        let scale = det_moved.norm().max(predicted).max(1e-300);
        weight_residual = weight_residual.max((det_moved.norm() - predicted).abs() / scale);
    }
    Ok(DetWeightReport {
        max_scaled_det,
        weight_residual,
    })
}

// ---- Fourier-coefficient pairing (exact arithmetic) ------------------------

pub type Rat = Ratio<i128>;

/// Finite Fourier-coefficient map: symmetric integer matrix T (row-major
/// flattening as the key) to its coefficient.
pub type FourierMap = BTreeMap<Vec<i64>, i128>;

pub fn fourier_key(t: &IMatrix) -> Vec<i64> {
    t.transpose().iter().cloned().collect()
}

/// Inserts a coefficient, validating symmetry.
pub fn fourier_insert(map: &mut FourierMap, t: &IMatrix, coeff: i128) -> Result<()> {
    if t != &t.transpose() {
        return Err(Error::Shape("Fourier index must be symmetric".into()));
    }
    map.insert(fourier_key(t), coeff);
    Ok(())
}

/// One summand of the pairing coefficient: the splitting used and its value.
#[derive(Debug, Clone)]
pub struct PairingSummand {
    pub t1: IMatrix,
    pub value: Rat,
}

#[derive(Debug, Clone)]
pub struct PairingCoefficient {
    pub value: Rat,
    pub summands: Vec<PairingSummand>,
}

/// The gg Fourier coefficient of the pairing of f and h at the symmetric
/// integer matrix T:
///
///   sum_{k=1}^{g} (-1)^k / binom(g-1, k-1)
///   sum over I, J in P*_(k-1)(X_(g-1)) and splittings T = T1 + T2 of
///   s(I) s(J) |T1|^I_J |T2|^(I^c)_(J^c) a_f(T1) a_h(T2),
///
/// where only positive-semidefinite splittings contribute (coefficients of
/// non-PSD indexes vanish): T1 runs over the support of f and T2 = T - T1
/// must pass an exact PSD check.
pub fn fourier_coefficient_pairing(
    g: usize,
    t: &IMatrix,
    f: &FourierMap,
    h: &FourierMap,
) -> Result<PairingCoefficient> {
    if g == 0 || g > 9 {
        return Err(Error::SizeLimit("pairing coefficient supports 1 <= g <= 9".into()));
    }
    if t.nrows() != g || t.ncols() != g {
        return Err(Error::Shape(format!("T must be {g}x{g}")));
    }
    if t != &t.transpose() {
        return Err(Error::Shape("T must be symmetric".into()));
    }

    // precompute the subset data per k
    let ground: Vec<usize> = (1..g).collect();
    let mut total = Rat::from_integer(0);
    let mut summands = Vec::new();

    for (key, &af) in f {
        let t1 = key_to_matrix(key, g);
        let t2 = t - &t1;
        if !int_is_psd(&t2) {
            continue;
        }
        let ah = match h.get(&fourier_key(&t2)) {
            Some(&v) => v,
            None => continue,
        };
        if af == 0 || ah == 0 {
            continue;
        }
        let mut value = Rat::from_integer(0);
        for k in 1..=g {
            let subsets = OrderedSubset::enumerate(&ground, k - 1);
            let mut inner = Rat::from_integer(0);
            for si in &subsets {
                let si_c = si.complement();
                for sj in &subsets {
                    let sj_c = sj.complement();
                    let sgn = (si.sign() * sj.sign()) as i128;
                    let m1 = int_minor_det(&t1, si.elems(), sj.elems());
                    let m2 = int_minor_det(&t2, si_c.elems(), sj_c.elems());
                    inner += Rat::from_integer(sgn * m1 * m2);
                }
            }
            let k_sign = if k % 2 == 0 { 1 } else { -1 };
            let coeff = Rat::new(k_sign, int_binomial(g - 1, k - 1));
            value += coeff * inner;
        }
        let contribution = value * Rat::from_integer(af as i128 * ah as i128);
        if contribution != Rat::from_integer(0) {
            summands.push(PairingSummand {
                t1,
                value: contribution,
            });
        }
        total += contribution;
    }
    Ok(PairingCoefficient {
        value: total,
        summands,
    })
}

fn key_to_matrix(key: &[i64], g: usize) -> IMatrix {
    IMatrix::from_fn(g, g, |r, c| key[r * g + c])
}

fn int_binomial(n: usize, k: usize) -> i128 {
    if k > n {
        return 0;
    }
    let mut acc: i128 = 1;
    for i in 0..k.min(n - k) {
        acc = acc * (n - i) as i128 / (i + 1) as i128;
    }
    acc
}
