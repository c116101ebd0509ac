//! Compensated (double-double) arithmetic.
//!
//! Used in two places: the Cramer-rule determinant oracle, where cofactor
//! cancellation near root degeneracies would otherwise eat the 1e-10
//! comparison budget, and kernel-ratio evaluation below the small-rho cutoff,
//! where the determinant formulas lose three orders to cancellation.

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn add(self, o: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(s1, s2 + self.lo + o.lo);
        Dd { hi, lo }
    }

    #[inline]
    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    #[inline]
    pub fn mul(self, o: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(p1, p2 + self.hi * o.lo + self.lo * o.hi);
        Dd { hi, lo }
    }

    #[inline]
    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::from_f64(q1)));
        let q2 = (r.hi + r.lo) / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn scale(self, x: f64) -> Dd {
        self.mul(Dd::from_f64(x))
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Complex value with double-double real and imaginary parts.
#[derive(Debug, Clone, Copy)]
pub struct DdC {
    pub re: Dd,
    pub im: Dd,
}

impl DdC {
    pub const ZERO: DdC = DdC { re: Dd::ZERO, im: Dd::ZERO };
    pub const ONE: DdC = DdC { re: Dd::ONE, im: Dd::ZERO };

    pub fn from_c64(z: Complex64) -> DdC {
        DdC { re: Dd::from_f64(z.re), im: Dd::from_f64(z.im) }
    }

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn add(self, o: DdC) -> DdC {
        DdC { re: self.re.add(o.re), im: self.im.add(o.im) }
    }

    pub fn sub(self, o: DdC) -> DdC {
        DdC { re: self.re.sub(o.re), im: self.im.sub(o.im) }
    }

    pub fn neg(self) -> DdC {
        DdC { re: self.re.neg(), im: self.im.neg() }
    }

    pub fn mul(self, o: DdC) -> DdC {
        DdC {
            re: self.re.mul(o.re).sub(self.im.mul(o.im)),
            im: self.re.mul(o.im).add(self.im.mul(o.re)),
        }
    }

    pub fn div(self, o: DdC) -> DdC {
        let denom = o.re.mul(o.re).add(o.im.mul(o.im));
        let num = self.mul(DdC { re: o.re, im: o.im.neg() });
        DdC { re: num.re.div(denom), im: num.im.div(denom) }
    }

    pub fn scale(self, x: f64) -> DdC {
        DdC { re: self.re.scale(x), im: self.im.scale(x) }
    }

    /// exp(z) by Taylor series; callers keep |z| small (degenerate-limit
    /// evaluation uses |z| < ~2e-3, where 12 terms reach full dd precision).
    pub fn exp_small(self) -> DdC {
        let mut term = DdC::ONE;
        let mut sum = DdC::ONE;
        for k in 1..=12 {
            term = term.mul(self).scale(1.0 / k as f64);
            sum = sum.add(term);
        }
        sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dd_recovers_cancelled_bits() {
        // (1 + 1e-18) - 1 is 0 in f64 but representable in dd
        let a = Dd::ONE.add(Dd::from_f64(1e-18));
        let d = a.sub(Dd::ONE);
        assert!((d.to_f64() - 1e-18).abs() < 1e-32);
    }

    #[test]
    fn dd_product_is_compensated() {
        let x = Dd::from_f64(1.0 + 2f64.powi(-30));
        let y = x.mul(x);
        let exact = 1.0 + 2.0 * 2f64.powi(-30) + 2f64.powi(-60);
        assert!((y.to_f64() - exact).abs() < 1e-30);
    }

    #[test]
    fn dd_division_round_trips() {
        let a = Dd::from_f64(std::f64::consts::PI);
        let b = Dd::from_f64(std::f64::consts::E);
        let q = a.div(b).mul(b);
        assert!((q.to_f64() - std::f64::consts::PI).abs() < 1e-30);
    }

    #[test]
    fn ddc_exp_small_matches_f64_exp() {
        let z = Complex64::new(1.5e-3, -0.8e-3);
        let e = DdC::from_c64(z).exp_small().to_c64();
        let r = z.exp();
        assert!((e - r).norm() < 1e-15 * r.norm());
    }
}
