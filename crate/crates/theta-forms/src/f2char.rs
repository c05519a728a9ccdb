//! Theta characteristics: vectors over F_2^g, their parities, enumeration,
//! and the two-torsion points they label.
//!
//! A characteristic is a pair m = [eps, delta] of vectors in F_2^g. It is
//! even or odd according to the scalar product eps·delta mod 2, and for a
//! fixed period matrix tau it labels the two-torsion point
//! x_m = (eps·tau + delta)/2.

use crate::error::{Error, Result};
use crate::theta::PeriodMatrix;
use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A vector over F_2 with entries stored as 0/1 bytes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct F2Vector(Vec<u8>);

impl F2Vector {
    /// Builds a vector from 0/1 entries.
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::Invalid("F2 entries must be 0 or 1".into()));
        }
        Ok(F2Vector(bits))
    }

    pub fn zeros(g: usize) -> Self {
        F2Vector(vec![0; g])
    }

    /// Decodes `index` as a big-endian bit string of length `g`
    /// (bit 0 is the most significant), so that "01" parses to [0, 1].
    pub fn from_index(index: usize, g: usize) -> Self {
        let bits = (0..g).map(|k| ((index >> (g - 1 - k)) & 1) as u8).collect();
        F2Vector(bits)
    }

    /// Parses a bit string such as "01".
    pub fn parse(s: &str) -> Result<Self> {
        let bits: Result<Vec<u8>> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(Error::Invalid(format!("invalid bit character '{c}'"))),
            })
            .collect();
        F2Vector::new(bits?)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn bit(&self, k: usize) -> u8 {
        self.0[k]
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&b| b == 0)
    }

    /// Component-wise sum mod 2.
    pub fn add(&self, other: &F2Vector) -> F2Vector {
        assert_eq!(self.len(), other.len(), "F2 vector length mismatch");
        F2Vector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| (a + b) % 2)
                .collect(),
        )
    }

    /// Scalar product in F_2.
    pub fn dot(&self, other: &F2Vector) -> u8 {
        assert_eq!(self.len(), other.len(), "F2 vector length mismatch");
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a * b)
            .sum::<u8>()
            % 2
    }

    /// (-1)^(self·other) as a real sign.
    pub fn pairing_sign(&self, other: &F2Vector) -> f64 {
        if self.dot(other) == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Reads the bits as a big-endian binary number.
    pub fn index(&self) -> usize {
        self.0.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
    }

    /// Concatenation, for block-diagonal period matrices.
    pub fn concat(&self, other: &F2Vector) -> F2Vector {
        let mut bits = self.0.clone();
        bits.extend_from_slice(&other.0);
        F2Vector(bits)
    }

    /// The entries as real 0.0/1.0 values.
    pub fn to_real(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.0.iter().map(|&b| b as f64))
    }
}

/// All 2^g vectors of F_2^g in canonical (big-endian index) order.
pub fn all_f2_vectors(g: usize) -> Vec<F2Vector> {
    (0..1usize << g).map(|i| F2Vector::from_index(i, g)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

/// Filter for characteristic enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParityFilter {
    All,
    Even,
    Odd,
}

/// A theta characteristic m = [eps, delta].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Characteristic {
    pub eps: F2Vector,
    pub delta: F2Vector,
}

impl Characteristic {
    pub fn new(eps: F2Vector, delta: F2Vector) -> Result<Self> {
        if eps.len() != delta.len() {
            return Err(Error::Shape(format!(
                "eps has length {} but delta has length {}",
                eps.len(),
                delta.len()
            )));
        }
        Ok(Characteristic { eps, delta })
    }

    pub fn zero(g: usize) -> Self {
        Characteristic {
            eps: F2Vector::zeros(g),
            delta: F2Vector::zeros(g),
        }
    }

    pub fn g(&self) -> usize {
        self.eps.len()
    }

    pub fn parity(&self) -> Parity {
        if self.eps.dot(&self.delta) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn is_even(&self) -> bool {
        self.parity() == Parity::Even
    }

    pub fn is_odd(&self) -> bool {
        self.parity() == Parity::Odd
    }

    /// Component-wise sum mod 2 of both halves.
    pub fn add(&self, other: &Characteristic) -> Characteristic {
        Characteristic {
            eps: self.eps.add(&other.eps),
            delta: self.delta.add(&other.delta),
        }
    }

    /// Canonical integer index: eps and delta read as binary, eps major.
    /// Fixes the column order of every matrix indexed "for all m".
    pub fn index(&self) -> usize {
        (self.eps.index() << self.g()) | self.delta.index()
    }

    /// Characteristic for the block period matrix diag(tau_1, tau_2) built
    /// from characteristics of the factors.
    pub fn direct_sum(&self, other: &Characteristic) -> Characteristic {
        Characteristic {
            eps: self.eps.concat(&other.eps),
            delta: self.delta.concat(&other.delta),
        }
    }

    /// The two-torsion point x_m = (eps·tau + delta)/2 on the torus defined
    /// by `tau`.
    pub fn two_torsion_point(&self, tau: &PeriodMatrix) -> Result<TwoTorsionPoint> {
        if tau.g() != self.g() {
            return Err(Error::Shape(format!(
                "characteristic has g = {} but tau has g = {}",
                self.g(),
                tau.g()
            )));
        }
        let e = self.eps.to_real().map(Complex64::from);
        let d = self.delta.to_real().map(Complex64::from);
        let coords = (tau.matrix() * e + d) * Complex64::new(0.5, 0.0);
        Ok(TwoTorsionPoint {
            characteristic: self.clone(),
            coords,
        })
    }
}

/// A two-torsion point (eps·tau + delta)/2 together with its label.
#[derive(Debug, Clone)]
pub struct TwoTorsionPoint {
    pub characteristic: Characteristic,
    pub coords: DVector<Complex64>,
}

/// Number of even characteristics in genus g: 2^(g-1) (2^g + 1).
pub fn even_count(g: usize) -> usize {
    (1 << (g - 1)) * ((1 << g) + 1)
}

/// Number of odd characteristics in genus g: 2^(g-1) (2^g - 1).
pub fn odd_count(g: usize) -> usize {
    (1 << (g - 1)) * ((1 << g) - 1)
}

/// Enumerates characteristics in lexicographic order (eps major, delta
/// minor), optionally filtered by parity. Enumeration size is 4^g, so g is
/// capped at 12.
pub fn enumerate_characteristics(g: usize, filter: ParityFilter) -> Result<Vec<Characteristic>> {
    if g == 0 || g > 12 {
        return Err(Error::SizeLimit(format!(
            "characteristic enumeration requires 1 <= g <= 12, got {g}"
        )));
    }
    let mut out = Vec::new();
    for ei in 0..1usize << g {
        let eps = F2Vector::from_index(ei, g);
        for di in 0..1usize << g {
            let m = Characteristic {
                eps: eps.clone(),
                delta: F2Vector::from_index(di, g),
            };
            let keep = match filter {
                ParityFilter::All => true,
                ParityFilter::Even => m.is_even(),
                ParityFilter::Odd => m.is_odd(),
            };
            if keep {
                out.push(m);
            }
        }
    }
    Ok(out)
}
