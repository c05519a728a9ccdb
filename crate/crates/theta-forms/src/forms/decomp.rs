//! Rank criteria detecting decomposable principally polarized abelian
//! varieties.
//!
//! A point tau is indecomposable exactly when the (N+1) x 2^g matrix M(tau)
//! stacking the second-order constants over their tau-derivatives has
//! maximal rank N+1. Equivalently: the Gauss images of the odd two-torsion
//! points lie on no quadric, i.e. the system tr(B C_m) = 0 over all odd m
//! has no non-zero symmetric solution B, i.e. the flattened C-matrix has
//! rank N. On the product locus the solutions are spanned by the reducible
//! quadrics X_i X_j with i and j in different blocks.

use super::{a_matrix, c_from_gradient, sym_pairs, ThetaBasis};
use crate::error::Result;
use crate::f2char::all_f2_vectors;
use crate::linalg::{null_space, singular_values, CMatrix, CVector};
use crate::symplectic::SymplecticElement;
use crate::theta::{PeriodMatrix, ThetaEngine};
use num_complex::Complex64;

/// The (N+1) x 2^g matrix with first row Theta[sigma] and remaining rows
/// d Theta[sigma] / d tau_ij in canonical pair order.
pub fn m_matrix(engine: &ThetaEngine, tau: &PeriodMatrix) -> Result<CMatrix> {
    let g = tau.g();
    let n = g * (g + 1) / 2;
    let basis = ThetaBasis::compute(engine, tau)?;
    let cols = 1usize << g;
    let mut out = CMatrix::zeros(n + 1, cols);
    for (col, sigma) in all_f2_vectors(g).into_iter().enumerate() {
        out[(0, col)] = basis.value(&sigma);
        let d = basis.d_op_matrix(&sigma);
        for (row, (i, j)) in sym_pairs(g).into_iter().enumerate() {
            // d_op carries the (1 + delta_ij)/2 weight; undo it to get the
            // plain tau_ij derivative
            let undo = if i == j { 1.0 } else { 2.0 };
            out[(row + 1, col)] = d[(i, j)] * Complex64::new(undo, 0.0);
        }
    }
    Ok(out)
}

/// The N x (number of unordered pairs alpha != beta) matrix whose columns
/// are the flattened A_{alpha,beta}.
pub fn bold_a_matrix(engine: &ThetaEngine, tau: &PeriodMatrix) -> Result<CMatrix> {
    let g = tau.g();
    let n = g * (g + 1) / 2;
    let basis = ThetaBasis::compute(engine, tau)?;
    let sigmas = all_f2_vectors(g);
    let pairs: Vec<(usize, usize)> = (0..sigmas.len())
        .flat_map(|a| ((a + 1)..sigmas.len()).map(move |b| (a, b)))
        .collect();
    let mut out = CMatrix::zeros(n, pairs.len());
    for (col, (a, b)) in pairs.iter().enumerate() {
        let form = a_matrix(&basis, &sigmas[*a], &sigmas[*b]);
        out.set_column(col, &form.flatten());
    }
    Ok(out)
}

/// Verdict of the quadric criterion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecompVerdict {
    /// The Gauss images of the odd two-torsion points lie on a quadric.
    DecomposableSuspect,
    Indecomposable,
}

#[derive(Debug, Clone)]
pub struct QuadricReport {
    pub verdict: DecompVerdict,
    /// Singular values of the (odd count) x N coefficient matrix.
    pub singular_values: Vec<f64>,
    /// Null-space vectors reassembled as symmetric quadric-coefficient
    /// matrices B with tr(B C_m) = 0 for every odd m.
    pub witnesses: Vec<CMatrix>,
}

/// Builds the (#odd) x N matrix whose row for odd m is the flattened C_m
/// with doubled off-diagonal weights, so that row . vec(B) = tr(B C_m),
/// and decides decomposability by its rank.
pub fn quadric_criterion(
    engine: &ThetaEngine,
    tau: &PeriodMatrix,
    rank_tol: f64,
) -> Result<QuadricReport> {
    let g = tau.g();
    if g < 2 {
        return Err(crate::error::Error::Domain(
            "the quadric criterion needs g >= 2".into(),
        ));
    }
    let n = g * (g + 1) / 2;
    let gradients = engine.odd_gradients(tau)?;
    let mut rows = CMatrix::zeros(gradients.len(), n);
    for (r, (_, v)) in gradients.iter().enumerate() {
        let c = c_from_gradient(v);
        rows.set_row(r, &c.flatten_trace_weighted().transpose());
    }
    let sv = singular_values(&rows);
    let max = sv.first().copied().unwrap_or(0.0);
    let rank = sv.iter().filter(|&&s| s > rank_tol * max).count();
    let verdict = if rank < n {
        DecompVerdict::DecomposableSuspect
    } else {
        DecompVerdict::Indecomposable
    };
    let witnesses = if verdict == DecompVerdict::DecomposableSuspect {
        null_space(&rows, rank_tol)
            .into_iter()
            .map(|vec| unflatten_symmetric(&vec, g))
            .collect()
    } else {
        Vec::new()
    };
    Ok(QuadricReport {
        verdict,
        singular_values: sv,
        witnesses,
    })
}

/// Rebuilds a symmetric matrix from its canonical flattening.
pub fn unflatten_symmetric(v: &CVector, g: usize) -> CMatrix {
    let mut m = CMatrix::zeros(g, g);
    for (pos, (i, j)) in sym_pairs(g).into_iter().enumerate() {
        m[(i, j)] = v[pos];
        m[(j, i)] = v[pos];
    }
    m
}

/// Pulls a quadric witness found at gamma.tau back to tau: gradients move
/// by v -> (scalar) (C tau + D) v, so a quadric B' at the moved point
/// corresponds to (C tau + D)^t B' (C tau + D) at the original point.
pub fn pull_back_quadric(
    gamma: &SymplecticElement,
    tau: &PeriodMatrix,
    witness: &CMatrix,
) -> CMatrix {
    let denom = gamma.denominator(tau);
    denom.transpose() * witness * denom
}

/// Largest off-pattern magnitude of a product-locus witness, after
/// normalizing the largest entry to 1. For a split at g1, allowed positions
/// are (i, j) with i < g1 <= j (cross-block); everything else must vanish
/// for B to be a combination of the reducible quadrics X_i X_j.
pub fn witness_pattern_residual(b: &CMatrix, g1: usize) -> f64 {
    let g = b.nrows();
    let scale = crate::linalg::max_abs(b);
    if scale == 0.0 {
        return f64::INFINITY;
    }
    let mut worst = 0.0f64;
    for i in 0..g {
        for j in 0..g {
            let cross = (i < g1 && j >= g1) || (j < g1 && i >= g1);
            if !cross {
                worst = worst.max(b[(i, j)].norm() / scale);
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::numerical_rank;
    use crate::symplectic::{sample_subgroup_tame, SubgroupTag};

    fn engine() -> ThetaEngine {
        ThetaEngine::default()
    }

    #[test]
    fn m_matrix_generic_rank() {
        let e = engine();
        // g = 2: shape 4 x 4, generically full rank
        let tau = PeriodMatrix::random(2, 201);
        let m = m_matrix(&e, &tau).unwrap();
        assert_eq!((m.nrows(), m.ncols()), (4, 4));
        assert_eq!(numerical_rank(&m, 1e-8), 4);

        // g = 1: shape 2 x 2, generically rank 2
        let tau = PeriodMatrix::random(1, 203);
        let m = m_matrix(&e, &tau).unwrap();
        assert_eq!((m.nrows(), m.ncols()), (2, 2));
        assert_eq!(numerical_rank(&m, 1e-8), 2);
    }

    #[test]
    fn m_matrix_generic_rank_g4() {
        let e = engine();
        let tau = PeriodMatrix::random(4, 204);
        let m = m_matrix(&e, &tau).unwrap();
        assert_eq!((m.nrows(), m.ncols()), (11, 16));
        assert_eq!(numerical_rank(&m, 1e-8), 11);
    }

    #[test]
    fn m_matrix_drops_rank_on_products() {
        let e = engine();
        let tau = PeriodMatrix::block_diag(
            &PeriodMatrix::random(1, 205),
            &PeriodMatrix::random(1, 207),
        );
        let m = m_matrix(&e, &tau).unwrap();
        assert!(numerical_rank(&m, 1e-8) <= 3);
    }

    #[test]
    fn bold_a_rank_tracks_m_rank() {
        let e = engine();
        // generic: rank N = 3 and M has rank 4
        let tau = PeriodMatrix::random(2, 209);
        let a = bold_a_matrix(&e, &tau).unwrap();
        assert_eq!((a.nrows(), a.ncols()), (3, 6));
        assert_eq!(numerical_rank(&a, 1e-8), 3);
        assert_eq!(numerical_rank(&m_matrix(&e, &tau).unwrap(), 1e-8), 4);

        // product: both drop
        let tau = PeriodMatrix::block_diag(
            &PeriodMatrix::random(1, 211),
            &PeriodMatrix::random(1, 213),
        );
        assert!(numerical_rank(&bold_a_matrix(&e, &tau).unwrap(), 1e-8) < 3);
        assert!(numerical_rank(&m_matrix(&e, &tau).unwrap(), 1e-8) < 4);
    }

    #[test]
    fn bold_a_columns_are_wedge_minors() {
        // Column (alpha, beta) matches the 2x2 minors of rows
        // (Theta, dTheta/dtau_ij) of M, up to the weight -4 pi i (1+delta_ij)
        // per pair row.
        let e = engine();
        let tau = PeriodMatrix::random(2, 215);
        let m = m_matrix(&e, &tau).unwrap();
        let a = bold_a_matrix(&e, &tau).unwrap();
        let pairs = sym_pairs(2);
        // column order of bold A: (0,1), (0,2), (0,3), (1,2), (1,3), (2,3)
        let col_pairs: Vec<(usize, usize)> =
            (0..4).flat_map(|x| ((x + 1)..4).map(move |y| (x, y))).collect();
        for (col, (x, y)) in col_pairs.iter().enumerate() {
            for (row, (i, j)) in pairs.iter().enumerate() {
                let minor = m[(0, *x)] * m[(row + 1, *y)] - m[(0, *y)] * m[(row + 1, *x)];
                let heat = if i == j { 8.0 } else { 4.0 };
                let expect = minor * Complex64::new(0.0, heat * std::f64::consts::PI);
                let got = a[(row, col)];
                assert!(
                    (got - expect).norm() < 1e-9 * got.norm().max(1e-3),
                    "col {col} row {row}: {got} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn quadric_criterion_generic_vs_product() {
        let e = engine();
        let tau = PeriodMatrix::random(2, 217);
        let rep = quadric_criterion(&e, &tau, 1e-8).unwrap();
        assert_eq!(rep.verdict, DecompVerdict::Indecomposable);
        assert!(rep.witnesses.is_empty());

        let tau = PeriodMatrix::block_diag(
            &PeriodMatrix::random(1, 219),
            &PeriodMatrix::random(1, 221),
        );
        let rep = quadric_criterion(&e, &tau, 1e-8).unwrap();
        assert_eq!(rep.verdict, DecompVerdict::DecomposableSuspect);
        assert_eq!(rep.witnesses.len(), 1);
        // witness is proportional to the off-diagonal pattern X_1 X_2
        assert!(witness_pattern_residual(&rep.witnesses[0], 1) < 1e-6);
    }

    #[test]
    fn quadric_needs_genus_two() {
        let e = engine();
        let tau = PeriodMatrix::random(1, 222);
        assert!(quadric_criterion(&e, &tau, 1e-8).is_err());
    }

    #[test]
    fn c_columns_supported_on_blocks_for_products() {
        // on diag(tau_1, tau_2) every gradient lives in one factor, so each
        // C matrix is supported on a single diagonal block
        let e = engine();
        let tau = PeriodMatrix::block_diag(
            &PeriodMatrix::random(1, 231),
            &PeriodMatrix::random(1, 233),
        );
        for (_, v) in e.odd_gradients(&tau).unwrap() {
            let c = super::super::c_from_gradient(&v);
            let m = c.matrix();
            let scale = crate::linalg::max_abs(m).max(1e-300);
            // cross-block entries vanish
            assert!(m[(0, 1)].norm() / scale < 1e-9);
            assert!(m[(1, 0)].norm() / scale < 1e-9);
        }
    }

    #[test]
    fn quadric_verdict_is_transport_invariant() {
        let e = ThetaEngine {
            tol: 1e-12,
            radius_cap: 160,
        };
        let product = PeriodMatrix::block_diag(
            &PeriodMatrix::random(1, 223),
            &PeriodMatrix::random(1, 225),
        );
        let gamma = sample_subgroup_tame(2, SubgroupTag::Full, 4, 9, &product, 0.05);
        let moved = gamma.act(&product).unwrap();
        let rep = quadric_criterion(&e, &moved, 1e-8).unwrap();
        assert_eq!(rep.verdict, DecompVerdict::DecomposableSuspect);

        // pulling the witness back reveals the cross-block pattern
        let back = pull_back_quadric(&gamma, &product, &rep.witnesses[0]);
        assert!(
            witness_pattern_residual(&back, 1) < 1e-5,
            "pattern residual {}",
            witness_pattern_residual(&back, 1)
        );
    }
}
