//! Double-double scalars: unevaluated sums hi + lo of two doubles giving
//! roughly 32 significant digits. Used by oracle cross-checks to separate
//! series-truncation error from f64 rounding; the production paths stay in
//! plain f64.

/// An extended-precision real number hi + lo with |lo| <= ulp(hi)/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DD {
    pub hi: f64,
    pub lo: f64,
}

impl DD {
    pub const ZERO: DD = DD { hi: 0.0, lo: 0.0 };
    pub const ONE: DD = DD { hi: 1.0, lo: 0.0 };

    pub fn new(hi: f64, lo: f64) -> Self {
        let (s, e) = two_sum(hi, lo);
        DD { hi: s, lo: e }
    }

    pub fn from_f64(x: f64) -> Self {
        DD { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, other: DD) -> DD {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = quick_two_sum(s, e);
        DD { hi, lo }
    }

    pub fn sub(self, other: DD) -> DD {
        self.add(DD {
            hi: -other.hi,
            lo: -other.lo,
        })
    }

    pub fn mul(self, other: DD) -> DD {
        let (p, e) = two_prod(self.hi, other.hi);
        let e = e + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = quick_two_sum(p, e);
        DD { hi, lo }
    }

    /// Integer power by binary exponentiation.
    pub fn powi(self, n: u64) -> DD {
        let mut base = self;
        let mut acc = DD::ONE;
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(base);
            }
            base = base.mul(base);
            k >>= 1;
        }
        acc
    }

    pub fn abs(self) -> DD {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            DD {
                hi: -self.hi,
                lo: -self.lo,
            }
        } else {
            self
        }
    }
}

/// Knuth two-sum: s + e = a + b exactly.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let v = s - a;
    let e = (a - (s - v)) + (b - v);
    (s, e)
}

/// Requires |a| >= |b|.
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

/// Dekker product via fused multiply-add: p + e = a * b exactly.
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = f64::mul_add(a, b, -p);
    (p, e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_keeps_extra_digits() {
        // (1 + 2^-60) round-trips through add/sub without losing the tail
        let tiny = DD::from_f64((2.0f64).powi(-60));
        let x = DD::ONE.add(tiny);
        assert_eq!(x.sub(DD::ONE).to_f64(), (2.0f64).powi(-60));

        // squaring sqrt(2) recovers 2 to ~1e-32
        let root2 = DD::new(std::f64::consts::SQRT_2, -9.667293313452913e-17);
        let two = root2.mul(root2);
        assert!(two.sub(DD::from_f64(2.0)).abs().to_f64() < 1e-31);
    }

    #[test]
    fn powers_match_repeated_multiplication() {
        let x = DD::new(0.9995, 3.3e-18);
        let mut direct = DD::ONE;
        for _ in 0..13 {
            direct = direct.mul(x);
        }
        let fast = x.powi(13);
        assert!(fast.sub(direct).abs().to_f64() < 1e-30);
    }
}
