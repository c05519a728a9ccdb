//! Dense complex linear algebra and ordered-subset combinatorics.
//!
//! Determinants use closed forms for n <= 3 and partial-pivot LU above
//! that. The adjugate is assembled from cofactors so it stays finite when
//! the matrix is singular. Ordered subsets carry the interleaving sign
//! s(I): the sign of the permutation sorting the concatenation (I, I^c)
//! of a subset and its complement back into increasing order.

pub mod dd;

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Determinant by closed form (n <= 3) or partial-pivot LU.
pub fn det(m: &CMatrix) -> Result<Complex64> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape(format!(
            "determinant of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    Ok(match n {
        0 => Complex64::new(1.0, 0.0),
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        3 => {
            m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
                - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
                + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
        }
        _ => lu_det(m),
    })
}

fn lu_det(m: &CMatrix) -> Complex64 {
    let n = m.nrows();
    let mut a = m.clone();
    let mut sign = 1.0;
    let mut result = Complex64::new(1.0, 0.0);
    for k in 0..n {
        // partial pivoting on column k
        let mut pivot = k;
        let mut best = a[(k, k)].norm_sqr();
        for r in k + 1..n {
            let mag = a[(r, k)].norm_sqr();
            if mag > best {
                best = mag;
                pivot = r;
            }
        }
        if best == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != k {
            a.swap_rows(pivot, k);
            sign = -sign;
        }
        let piv = a[(k, k)];
        result *= piv;
        for r in k + 1..n {
            let factor = a[(r, k)] / piv;
            for c in k + 1..n {
                let sub = factor * a[(k, c)];
                a[(r, c)] -= sub;
            }
        }
    }
    result * sign
}

/// Adjugate: transpose of the cofactor matrix, so M * adj(M) = det(M) * I.
/// For n = 1 the adjugate is [[1]].
pub fn adjugate(m: &CMatrix) -> Result<CMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape(format!(
            "adjugate of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    if n == 0 {
        return Err(Error::Shape("adjugate of an empty matrix".into()));
    }
    if n == 1 {
        return Ok(CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)));
    }
    let mut adj = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let minor = m.clone().remove_row(i).remove_column(j);
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            // adj[j, i] = cofactor[i, j]
            adj[(j, i)] = det(&minor)? * Complex64::new(sign, 0.0);
        }
    }
    Ok(adj)
}

/// An increasingly ordered subset of an increasingly ordered ground set.
///
/// The ground set is arbitrary (e.g. {1,..,g} with one element removed);
/// the canonical case `of_range(n, elems)` uses X_n = {1,..,n} with
/// 1-based elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedSubset {
    ambient: Vec<usize>,
    elems: Vec<usize>,
}

impl OrderedSubset {
    pub fn new(ambient: Vec<usize>, elems: Vec<usize>) -> Result<Self> {
        if ambient.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("ground set must be strictly increasing".into()));
        }
        if elems.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("subset must be strictly increasing".into()));
        }
        if elems.iter().any(|e| !ambient.contains(e)) {
            return Err(Error::Invalid(
                "subset contains elements outside the ground set".into(),
            ));
        }
        Ok(OrderedSubset { ambient, elems })
    }

    /// Subset of X_n = {1, ..., n}.
    pub fn of_range(n: usize, elems: Vec<usize>) -> Result<Self> {
        OrderedSubset::new((1..=n).collect(), elems)
    }

    /// Subset of X_g with the element `removed` deleted from the ground set.
    /// Errors if `removed` appears in `elems`.
    pub fn of_punctured_range(g: usize, removed: usize, elems: Vec<usize>) -> Result<Self> {
        if elems.contains(&removed) {
            return Err(Error::Invalid(format!(
                "subset contains the removed element {removed}"
            )));
        }
        let ambient: Vec<usize> = (1..=g).filter(|&x| x != removed).collect();
        OrderedSubset::new(ambient, elems)
    }

    pub fn elems(&self) -> &[usize] {
        &self.elems
    }

    pub fn ambient(&self) -> &[usize] {
        &self.ambient
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    /// Complement inside the ground set, as an ordered subset.
    pub fn complement(&self) -> OrderedSubset {
        let elems: Vec<usize> = self
            .ambient
            .iter()
            .copied()
            .filter(|x| !self.elems.contains(x))
            .collect();
        OrderedSubset {
            ambient: self.ambient.clone(),
            elems,
        }
    }

    /// The interleaving sign s(I): sign of the permutation that sorts the
    /// concatenation (I, I^c) of the ground set into increasing order.
    /// Equals (-1)^#{(a, b) : a in I, b in I^c, a > b}.
    pub fn sign(&self) -> i32 {
        let comp = self.complement();
        let mut inversions = 0usize;
        for &a in &self.elems {
            for &b in comp.elems() {
                if a > b {
                    inversions += 1;
                }
            }
        }
        if inversions % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// Sum of the elements (used in the (-1)^(I+J) block-expansion signs,
    /// where elements are 1-based positions).
    pub fn element_sum(&self) -> usize {
        self.elems.iter().sum()
    }

    /// All k-element ordered subsets of the given ground set.
    pub fn enumerate(ambient: &[usize], k: usize) -> Vec<OrderedSubset> {
        let n = ambient.len();
        if k > n {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            out.push(OrderedSubset {
                ambient: ambient.to_vec(),
                elems: idx.iter().map(|&i| ambient[i]).collect(),
            });
            // advance the combination
            let mut pos = k;
            while pos > 0 {
                pos -= 1;
                if idx[pos] != pos + n - k {
                    idx[pos] += 1;
                    for later in pos + 1..k {
                        idx[later] = idx[later - 1] + 1;
                    }
                    break;
                }
                if pos == 0 {
                    return out;
                }
            }
            if k == 0 {
                return out;
            }
        }
    }

    /// All k-element ordered subsets of X_n.
    pub fn enumerate_range(n: usize, k: usize) -> Vec<OrderedSubset> {
        let ambient: Vec<usize> = (1..=n).collect();
        OrderedSubset::enumerate(&ambient, k)
    }
}

/// Sign s(I) for I a subset of X_g \ {removed}.
pub fn subset_sign(g: usize, removed: usize, elems: &[usize]) -> Result<i32> {
    Ok(OrderedSubset::of_punctured_range(g, removed, elems.to_vec())?.sign())
}

/// Submatrix of `m` with rows `i` and columns `j`, both given as 1-based
/// positions into the row/column index ranges.
pub fn submatrix(m: &CMatrix, rows: &[usize], cols: &[usize]) -> Result<CMatrix> {
    for &r in rows {
        if r == 0 || r > m.nrows() {
            return Err(Error::Shape(format!("row index {r} out of bounds")));
        }
    }
    for &c in cols {
        if c == 0 || c > m.ncols() {
            return Err(Error::Shape(format!("column index {c} out of bounds")));
        }
    }
    Ok(CMatrix::from_fn(rows.len(), cols.len(), |a, b| {
        m[(rows[a] - 1, cols[b] - 1)]
    }))
}

/// Minor determinant |M^I_J| over ordered index subsets. The empty minor
/// is 1.
pub fn minor_det(m: &CMatrix, rows: &[usize], cols: &[usize]) -> Result<Complex64> {
    if rows.len() != cols.len() {
        return Err(Error::Shape(format!(
            "minor with {} rows but {} columns",
            rows.len(),
            cols.len()
        )));
    }
    if rows.is_empty() {
        return Ok(Complex64::new(1.0, 0.0));
    }
    det(&submatrix(m, rows, cols)?)
}

/// Residual of the generalized Binet identity
/// det(AB) = sum over S in P*_m(X_n) of det(A_S) det(B^S)
/// for A of shape m x n and B of shape n x m. For m > n both sides are
/// zero and the sum is empty.
pub fn binet_check(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    let (m, n) = (a.nrows(), a.ncols());
    if b.nrows() != n || b.ncols() != m {
        return Err(Error::Shape(format!(
            "Binet check needs shapes m x n and n x m, got {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let lhs = det(&(a * b))?;
    let mut rhs = Complex64::new(0.0, 0.0);
    let all_rows: Vec<usize> = (1..=m).collect();
    for s in OrderedSubset::enumerate_range(n, m) {
        let a_s = minor_det(a, &all_rows, s.elems())?;
        let b_s = minor_det(b, s.elems(), &all_rows)?;
        rhs += a_s * b_s;
    }
    Ok((lhs - rhs).norm())
}

/// Residual of the expansion of det(M) into complementary block minors:
/// for fixed columns J of size k,
/// det(M) = sum over I in P*_k(X_n) of (-1)^(I+J) |M^I_J| |M^(I^c)_(J^c)|
/// where (-1)^I means (-1) to the sum of the 1-based indices in I.
pub fn laplace_block_expansion_check(m: &CMatrix, cols: &OrderedSubset) -> Result<f64> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Shape("block expansion needs a square matrix".into()));
    }
    let k = cols.len();
    let j_comp = cols.complement();
    let lhs = det(m)?;
    let mut rhs = Complex64::new(0.0, 0.0);
    for i in OrderedSubset::enumerate_range(n, k) {
        let i_comp = i.complement();
        let sign = if (i.element_sum() + cols.element_sum()) % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        let top = minor_det(m, i.elems(), cols.elems())?;
        let rest = minor_det(m, i_comp.elems(), j_comp.elems())?;
        rhs += Complex64::new(sign, 0.0) * top * rest;
    }
    Ok((lhs - rhs).norm())
}

/// Numerical rank: the number of singular values above
/// rel_tol * (largest singular value). The zero matrix has rank 0.
pub fn numerical_rank(m: &CMatrix, rel_tol: f64) -> usize {
    assert!(rel_tol > 0.0 && rel_tol < 1.0, "rel_tol must be in (0, 1)");
    let sv = singular_values(m);
    let max = sv.iter().cloned().fold(0.0f64, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let svd = m.clone().svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// Right null-space basis: right singular vectors whose singular values are
/// at most rel_tol * (largest singular value).
pub fn null_space(m: &CMatrix, rel_tol: f64) -> Vec<CVector> {
    // The SVD here is thin; pad wide matrices with zero rows so every right
    // singular vector is produced.
    let work = if m.nrows() < m.ncols() {
        let mut padded = CMatrix::zeros(m.ncols(), m.ncols());
        padded.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = work.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let max = svd
        .singular_values
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    let mut basis = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if max == 0.0 || s <= rel_tol * max {
            basis.push(v_t.row(k).transpose().map(|z| z.conj()));
        }
    }
    basis
}

/// Largest absolute entry.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Max-entry difference relative to the larger of the two matrices' max
/// entries. Zero-vs-zero compares as zero residual.
pub fn rel_residual(a: &CMatrix, b: &CMatrix) -> f64 {
    let scale = max_abs(a).max(max_abs(b));
    if scale == 0.0 {
        return 0.0;
    }
    max_abs(&(a - b)) / scale
}

pub type IMatrix = DMatrix<i64>;

/// Exact determinant of a 1-based (rows, cols) submatrix of an integer
/// matrix by fraction-free Bareiss elimination. The empty minor is 1.
pub fn int_minor_det(m: &IMatrix, rows: &[usize], cols: &[usize]) -> i128 {
    debug_assert_eq!(rows.len(), cols.len());
    let n = rows.len();
    if n == 0 {
        return 1;
    }
    let mut a = vec![vec![0i128; n]; n];
    for (r, &ri) in rows.iter().enumerate() {
        for (c, &ci) in cols.iter().enumerate() {
            a[r][c] = m[(ri - 1, ci - 1)] as i128;
        }
    }
    let mut sign: i128 = 1;
    let mut prev: i128 = 1;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            let swap = (k + 1..n).find(|&r| a[r][k] != 0);
            match swap {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
            a[i][k] = 0;
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

/// Exact positive-semidefinite test for a symmetric integer matrix by
/// rational LDL^t elimination: every pivot must be non-negative, and a zero
/// pivot forces its whole row to vanish.
pub fn int_is_psd(m: &IMatrix) -> bool {
    use num_rational::Ratio;
    type Rat = Ratio<i128>;
    let n = m.nrows();
    if m != &m.transpose() {
        return false;
    }
    let mut a = vec![vec![Rat::from_integer(0); n]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = Rat::from_integer(m[(i, j)] as i128);
        }
    }
    let zero = Rat::from_integer(0);
    for k in 0..n {
        if a[k][k] < zero {
            return false;
        }
        if a[k][k] == zero {
            if (k..n).any(|j| a[k][j] != zero) {
                return false;
            }
            continue;
        }
        let pivot = a[k][k];
        for i in k + 1..n {
            let factor = a[i][k] / pivot;
            for j in k..n {
                let sub = factor * a[k][j];
                a[i][j] -= sub;
            }
        }
    }
    true
}

/// n choose k as f64 (n <= 20 keeps this exact).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut acc = 1.0f64;
    for i in 0..k.min(n - k) {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}
