//! The integer symplectic group Sp(2g, Z): block arithmetic, the action on
//! the Siegel upper half-space, congruence-subgroup membership tests, and
//! deterministic sampling of test elements.
//!
//! An element gamma = (A, B; C, D) acts as tau -> (A tau + B)(C tau + D)^-1.
//! The congruence conditions are exact integer tests:
//! Gamma_g(n) is gamma = 1 mod n; the theta group Gamma_g(n, 2n) further
//! requires diag(A^t B) = diag(C^t D) = 0 mod 2n; and the index-two
//! subgroup Gamma*_g(2, 4) of Gamma_g(2, 4) requires Tr(A - 1) = 0 mod 4.

use crate::error::{Error, Result};
use crate::f2char::Characteristic;
use crate::theta::PeriodMatrix;
use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::Rational64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

pub type IMatrix = DMatrix<i64>;

/// An element of Sp(2g, Z) stored by its g x g blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymplecticElement {
    #[serde(rename = "A", with = "imatrix_serde")]
    pub a: IMatrix,
    #[serde(rename = "B", with = "imatrix_serde")]
    pub b: IMatrix,
    #[serde(rename = "C", with = "imatrix_serde")]
    pub c: IMatrix,
    #[serde(rename = "D", with = "imatrix_serde")]
    pub d: IMatrix,
}

mod imatrix_serde {
    use super::IMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &IMatrix, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<i64>> = (0..m.nrows())
            .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<IMatrix, D::Error> {
        let rows: Vec<Vec<i64>> = Vec::deserialize(d)?;
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(serde::de::Error::custom("ragged matrix"));
        }
        Ok(IMatrix::from_fn(nrows, ncols, |r, c| rows[r][c]))
    }
}

/// Congruence subgroups used for transformation tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubgroupTag {
    /// The full group Sp(2g, Z).
    Full,
    /// Principal congruence subgroup of level n.
    Principal(i64),
    /// Theta group: Gamma_g(n) with diag(A^t B) = diag(C^t D) = 0 mod 2n.
    Theta(i64),
    /// Index-two subgroup of the level-(2,4) theta group cut out by
    /// Tr(A - 1) = 0 mod 4.
    ThetaStar24,
}

impl SymplecticElement {
    pub fn new(a: IMatrix, b: IMatrix, c: IMatrix, d: IMatrix) -> Result<Self> {
        let g = a.nrows();
        for (name, m) in [("A", &a), ("B", &b), ("C", &c), ("D", &d)] {
            if m.nrows() != g || m.ncols() != g {
                return Err(Error::Shape(format!("block {name} is not {g}x{g}")));
            }
        }
        let gamma = SymplecticElement { a, b, c, d };
        if !gamma.is_symplectic() {
            return Err(Error::Invalid(
                "blocks do not satisfy the symplectic relations".into(),
            ));
        }
        Ok(gamma)
    }

    pub fn g(&self) -> usize {
        self.a.nrows()
    }

    pub fn identity(g: usize) -> Self {
        SymplecticElement {
            a: IMatrix::identity(g, g),
            b: IMatrix::zeros(g, g),
            c: IMatrix::zeros(g, g),
            d: IMatrix::identity(g, g),
        }
    }

    /// The inversion (0, -I; I, 0), sending tau to -tau^-1.
    pub fn inversion(g: usize) -> Self {
        SymplecticElement {
            a: IMatrix::zeros(g, g),
            b: -IMatrix::identity(g, g),
            c: IMatrix::identity(g, g),
            d: IMatrix::zeros(g, g),
        }
    }

    /// Translation (I, S; 0, I) for integer symmetric S.
    pub fn translation(s: &IMatrix) -> Result<Self> {
        if s != &s.transpose() {
            return Err(Error::Invalid("translation block must be symmetric".into()));
        }
        let g = s.nrows();
        Ok(SymplecticElement {
            a: IMatrix::identity(g, g),
            b: s.clone(),
            c: IMatrix::zeros(g, g),
            d: IMatrix::identity(g, g),
        })
    }

    /// Lower shear (I, 0; S, I) for integer symmetric S.
    pub fn shear(s: &IMatrix) -> Result<Self> {
        if s != &s.transpose() {
            return Err(Error::Invalid("shear block must be symmetric".into()));
        }
        let g = s.nrows();
        Ok(SymplecticElement {
            a: IMatrix::identity(g, g),
            b: IMatrix::zeros(g, g),
            c: s.clone(),
            d: IMatrix::identity(g, g),
        })
    }

    /// Embedding (U, 0; 0, U^-t) of U in GL(g, Z); `u_inv_t` must be the
    /// transposed inverse, checked exactly.
    pub fn gl_embedding(u: &IMatrix, u_inv_t: &IMatrix) -> Result<Self> {
        let g = u.nrows();
        if u * u_inv_t.transpose() != IMatrix::identity(g, g) {
            return Err(Error::Invalid("u_inv_t is not the transposed inverse".into()));
        }
        Ok(SymplecticElement {
            a: u.clone(),
            b: IMatrix::zeros(g, g),
            c: IMatrix::zeros(g, g),
            d: u_inv_t.clone(),
        })
    }

    /// Exact check of gamma^t J gamma = J:
    /// A^t C and B^t D symmetric, A^t D - C^t B = 1.
    pub fn is_symplectic(&self) -> bool {
        let atc = self.a.transpose() * &self.c;
        let btd = self.b.transpose() * &self.d;
        let atd = self.a.transpose() * &self.d;
        let ctb = self.c.transpose() * &self.b;
        let g = self.g();
        atc == atc.transpose() && btd == btd.transpose() && atd - ctb == IMatrix::identity(g, g)
    }

    /// Group law (matrix product).
    pub fn compose(&self, other: &SymplecticElement) -> SymplecticElement {
        SymplecticElement {
            a: &self.a * &other.a + &self.b * &other.c,
            b: &self.a * &other.b + &self.b * &other.d,
            c: &self.c * &other.a + &self.d * &other.c,
            d: &self.c * &other.b + &self.d * &other.d,
        }
    }

    /// C tau + D as a complex matrix.
    pub fn denominator(&self, tau: &PeriodMatrix) -> DMatrix<Complex64> {
        let g = self.g();
        let c = self.c.map(|x| Complex64::new(x as f64, 0.0));
        let d = self.d.map(|x| Complex64::new(x as f64, 0.0));
        c * tau.matrix() + d.view((0, 0), (g, g))
    }

    /// The action tau -> (A tau + B)(C tau + D)^-1. Fails if C tau + D is
    /// numerically too close to singular.
    pub fn act(&self, tau: &PeriodMatrix) -> Result<PeriodMatrix> {
        if self.g() != tau.g() {
            return Err(Error::Shape(format!(
                "element has g = {} but tau has g = {}",
                self.g(),
                tau.g()
            )));
        }
        let denom = self.denominator(tau);
        let sv = crate::linalg::singular_values(&denom);
        let (smax, smin) = (sv[0], sv[sv.len() - 1]);
        if smin <= 0.0 || smax / smin > 1e12 {
            return Err(Error::Conditioning(format!(
                "C tau + D has condition number above 1e12 (sigma_min = {smin:.3e})"
            )));
        }
        let inv = denom
            .try_inverse()
            .ok_or_else(|| Error::Conditioning("C tau + D is singular".into()))?;
        let a = self.a.map(|x| Complex64::new(x as f64, 0.0));
        let b = self.b.map(|x| Complex64::new(x as f64, 0.0));
        let num = a * tau.matrix() + b;
        PeriodMatrix::new(num * inv)
    }

    /// Membership in the given congruence subgroup, by exact integer
    /// congruences.
    pub fn is_member(&self, tag: SubgroupTag) -> bool {
        if !self.is_symplectic() {
            return false;
        }
        match tag {
            SubgroupTag::Full => true,
            SubgroupTag::Principal(n) => self.congruent_to_identity(n),
            SubgroupTag::Theta(n) => {
                self.congruent_to_identity(n) && self.theta_diag_condition(2 * n)
            }
            SubgroupTag::ThetaStar24 => {
                self.is_member(SubgroupTag::Theta(2)) && {
                    let g = self.g();
                    let trace: i64 = (0..g).map(|i| self.a[(i, i)] - 1).sum();
                    trace.rem_euclid(4) == 0
                }
            }
        }
    }

    fn congruent_to_identity(&self, n: i64) -> bool {
        let g = self.g();
        let id = IMatrix::identity(g, g);
        let zero = IMatrix::zeros(g, g);
        mod_eq(&self.a, &id, n)
            && mod_eq(&self.d, &id, n)
            && mod_eq(&self.b, &zero, n)
            && mod_eq(&self.c, &zero, n)
    }

    fn theta_diag_condition(&self, modulus: i64) -> bool {
        let atb = self.a.transpose() * &self.b;
        let ctd = self.c.transpose() * &self.d;
        (0..self.g()).all(|i| {
            atb[(i, i)].rem_euclid(modulus) == 0 && ctd[(i, i)].rem_euclid(modulus) == 0
        })
    }

    /// The exact rational phase exponent
    /// phi_m = -(1/8)(e^t B^t D e + d^t A^t C d - 2 e^t B^t C d)
    ///         + (1/4) diag(A^t B)^t (D e - C d)
    /// attached to a characteristic m = [e, d]; defined on Gamma_g(2).
    /// The denominator divides 8.
    pub fn phi_m(&self, m: &Characteristic) -> Result<Rational64> {
        if !self.is_member(SubgroupTag::Principal(2)) {
            return Err(Error::Domain(
                "phi_m is defined only on the level-2 principal congruence subgroup".into(),
            ));
        }
        if m.g() != self.g() {
            return Err(Error::Shape("characteristic size does not match".into()));
        }
        let g = self.g();
        let e = IMatrix::from_fn(g, 1, |i, _| m.eps.bit(i) as i64);
        let d = IMatrix::from_fn(g, 1, |i, _| m.delta.bit(i) as i64);

        let btd = self.b.transpose() * &self.d;
        let atc = self.a.transpose() * &self.c;
        let btc = self.b.transpose() * &self.c;

        let q1 = (e.transpose() * &btd * &e)[(0, 0)];
        let q2 = (d.transpose() * &atc * &d)[(0, 0)];
        let q3 = (e.transpose() * &btc * &d)[(0, 0)];

        let atb = self.a.transpose() * &self.b;
        let diag = IMatrix::from_fn(g, 1, |i, _| atb[(i, i)]);
        let lin = (diag.transpose() * (&self.d * &e - &self.c * &d))[(0, 0)];

        Ok(Rational64::new(-(q1 + q2 - 2 * q3), 8) + Rational64::new(lin, 4))
    }

    /// e^(4 pi i phi_m), which is exactly a power of i.
    pub fn phi_m_quartic_phase(&self, m: &Characteristic) -> Result<Complex64> {
        let phi = self.phi_m(m)?;
        // 4 pi i k/8 = pi i k / 2 with k = 8 phi
        let k = (phi * Rational64::from_integer(8)).to_integer().rem_euclid(4);
        Ok(match k {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        })
    }

    /// The element (A, 2B; C/2, D) conjugating the doubling map:
    /// 2 (gamma . tau) = gamma~ . (2 tau). Requires C = 0 mod 2.
    pub fn double_cover_element(&self) -> Result<SymplecticElement> {
        if self.c.iter().any(|&x| x % 2 != 0) {
            return Err(Error::Domain(
                "double cover element needs an even C block".into(),
            ));
        }
        SymplecticElement::new(
            self.a.clone(),
            &self.b * 2,
            self.c.map(|x| x / 2),
            self.d.clone(),
        )
    }
}

fn mod_eq(a: &IMatrix, b: &IMatrix, n: i64) -> bool {
    a.iter()
        .zip(b.iter())
        .all(|(x, y)| (x - y).rem_euclid(n) == 0)
}

/// Deterministic pseudo-random element of the given subgroup: a product of
/// `word_length` generators drawn from a pool that lies inside the subgroup
/// (translations, lower shears, and GL(g, Z) embeddings with the right
/// congruences). The pool is a pragmatic generating set for test coverage,
/// not a claim of generating the full subgroup. Falls back to a guaranteed
/// translation if the product ever fails the membership test.
pub fn sample_subgroup(
    g: usize,
    tag: SubgroupTag,
    word_length: usize,
    seed: u64,
) -> SymplecticElement {
    let mut rng = StdRng::seed_from_u64(seed ^ 0x715e_55ed_c0ff_ee00);
    let mut gamma = SymplecticElement::identity(g);
    for _ in 0..word_length {
        let gen = random_generator(g, tag, &mut rng);
        gamma = gamma.compose(&gen);
    }
    if gamma.is_member(tag) {
        return gamma;
    }
    // Guaranteed fallback: (I, nB'; 0, I) with diag(B') even is in every
    // supported subgroup.
    let n = match tag {
        SubgroupTag::Full => 1,
        SubgroupTag::Principal(n) | SubgroupTag::Theta(n) => n,
        SubgroupTag::ThetaStar24 => 2,
    };
    let mut s = random_symmetric(g, &mut rng, 1);
    for i in 0..g {
        s[(i, i)] *= 2;
    }
    SymplecticElement::translation(&(s * n)).expect("symmetric by construction")
}

fn random_symmetric(g: usize, rng: &mut StdRng, bound: i64) -> IMatrix {
    let mut s = IMatrix::zeros(g, g);
    for i in 0..g {
        for j in i..g {
            let v = rng.gen_range(-bound..=bound);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    s
}

fn random_generator(g: usize, tag: SubgroupTag, rng: &mut StdRng) -> SymplecticElement {
    let n = match tag {
        SubgroupTag::Full => 1,
        SubgroupTag::Principal(n) | SubgroupTag::Theta(n) => n,
        SubgroupTag::ThetaStar24 => 2,
    };
    // Theta groups constrain diag(A^t B) and diag(C^t D) mod 2n, so the
    // translation/shear blocks there must have even diagonal.
    let needs_even_diag = matches!(tag, SubgroupTag::Theta(_) | SubgroupTag::ThetaStar24);

    let kind = rng.gen_range(0..if tag == SubgroupTag::Full { 4 } else { 3 });
    match kind {
        0 | 1 => {
            let mut s = random_symmetric(g, rng, 1);
            if needs_even_diag {
                for i in 0..g {
                    s[(i, i)] *= 2;
                }
            }
            let block = s * n;
            if kind == 0 {
                SymplecticElement::translation(&block).unwrap()
            } else {
                SymplecticElement::shear(&block).unwrap()
            }
        }
        2 => {
            // U = I + n E_ij with i != j; U^-1 = I - n E_ij.
            if g == 1 {
                return SymplecticElement::identity(1);
            }
            let i = rng.gen_range(0..g);
            let mut j = rng.gen_range(0..g - 1);
            if j >= i {
                j += 1;
            }
            let mut u = IMatrix::identity(g, g);
            u[(i, j)] = n;
            let mut u_inv = IMatrix::identity(g, g);
            u_inv[(i, j)] = -n;
            SymplecticElement::gl_embedding(&u, &u_inv.transpose()).unwrap()
        }
        _ => SymplecticElement::inversion(g),
    }
}

/// Like [`sample_subgroup`], but retries (deterministically, by stepping the
/// seed) until the transported point gamma.tau keeps Im above `y_floor`, so
/// series evaluations at the moved point stay cheap. Falls back to the last
/// candidate if none of the attempts is tame.
pub fn sample_subgroup_tame(
    g: usize,
    tag: SubgroupTag,
    word_length: usize,
    seed: u64,
    tau: &PeriodMatrix,
    y_floor: f64,
) -> SymplecticElement {
    let mut last = SymplecticElement::identity(g);
    for attempt in 0..64u64 {
        let gamma = sample_subgroup(g, tag, word_length, seed.wrapping_add(attempt << 32));
        if let Ok(moved) = gamma.act(tau) {
            last = gamma;
            if moved.y_min() >= y_floor {
                return last;
            }
        }
    }
    last
}

/// A sample in Gamma_g(2,4) that is NOT in Gamma*_g(2,4): a word in the
/// theta-group pool times the embedding of U = diag(-1, 1, ..., 1), whose
/// trace condition fails.
pub fn sample_theta24_nonstar(g: usize, word_length: usize, seed: u64) -> SymplecticElement {
    let base = sample_subgroup(g, SubgroupTag::Theta(2), word_length, seed);
    let mut u = IMatrix::identity(g, g);
    u[(0, 0)] = -1;
    let flip = SymplecticElement::gl_embedding(&u, &u).unwrap();
    let gamma = base.compose(&flip);
    debug_assert!(gamma.is_member(SubgroupTag::Theta(2)));
    debug_assert!(!gamma.is_member(SubgroupTag::ThetaStar24));
    gamma
}

/// Tame version of [`sample_theta24_nonstar`]; see [`sample_subgroup_tame`].
pub fn sample_theta24_nonstar_tame(
    g: usize,
    word_length: usize,
    seed: u64,
    tau: &PeriodMatrix,
    y_floor: f64,
) -> SymplecticElement {
    let mut last = sample_theta24_nonstar(g, word_length, seed);
    for attempt in 0..64u64 {
        let gamma = sample_theta24_nonstar(g, word_length, seed.wrapping_add(attempt << 32));
        if let Ok(moved) = gamma.act(tau) {
            last = gamma;
            if moved.y_min() >= y_floor {
                return last;
            }
        }
    }
    last
}
