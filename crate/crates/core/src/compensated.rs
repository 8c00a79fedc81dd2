//! Double-word accumulation: a value is carried as an unevaluated sum
//! `hi + lo` of two scalars, built from the error-free TwoSum and FMA
//! products. Used where a result is a short alternating sum of terms far
//! larger than itself.

use num_complex::Complex;

use crate::scalar::Scalar;

#[inline]
fn two_sum<T: Scalar>(a: T, b: T) -> (T, T) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod<T: Scalar>(a: T, b: T) -> (T, T) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Dw<T> {
    hi: T,
    lo: T,
}

impl<T: Scalar> Dw<T> {
    pub(crate) fn from_value(x: T) -> Self {
        Self { hi: x, lo: T::zero() }
    }

    pub(crate) fn value(self) -> T {
        self.hi + self.lo
    }

    fn add(self, o: Self) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        let (hi, lo) = two_sum(s, e + self.lo + o.lo);
        Self { hi, lo }
    }

    fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }
    }

    fn scale(self, t: T) -> Self {
        let (p, e) = two_prod(self.hi, t);
        let (hi, lo) = two_sum(p, e + self.lo * t);
        Self { hi, lo }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct ComplexDw<T> {
    re: Dw<T>,
    im: Dw<T>,
}

impl<T: Scalar> ComplexDw<T> {
    pub(crate) fn from_value(z: Complex<T>) -> Self {
        Self { re: Dw::from_value(z.re), im: Dw::from_value(z.im) }
    }

    pub(crate) fn value(self) -> Complex<T> {
        Complex::new(self.re.value(), self.im.value())
    }

    pub(crate) fn add(self, o: Self) -> Self {
        Self { re: self.re.add(o.re), im: self.im.add(o.im) }
    }

    pub(crate) fn sub(self, o: Self) -> Self {
        Self { re: self.re.add(o.re.neg()), im: self.im.add(o.im.neg()) }
    }

    pub(crate) fn add_value(self, z: Complex<T>) -> Self {
        self.add(Self::from_value(z))
    }

    pub(crate) fn sub_value(self, z: Complex<T>) -> Self {
        self.sub(Self::from_value(z))
    }

    /// Product with a plain complex number.
    pub(crate) fn mul_value(self, w: Complex<T>) -> Self {
        Self {
            re: self.re.scale(w.re).add(self.im.scale(w.im).neg()),
            im: self.re.scale(w.im).add(self.im.scale(w.re)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn recovers_cancelled_digits() {
        let big = 1e17;
        let acc = Dw::from_value(big).add(Dw::from_value(1.0)).add(Dw::from_value(-big));
        assert_eq!(acc.value(), 1.0);
    }

    #[test]
    fn complex_product_is_nearly_exact() {
        let x = ComplexDw::from_value(Complex64::new(1.0 + 2f64.powi(-40), 3.0));
        let w = Complex64::new(1.0 + 2f64.powi(-30), -1.0);
        // (1 + a + 3i)(1 + b − i) with a = 2^-40, b = 2^-30
        let got = x.mul_value(w).sub_value(Complex64::new(4.0, 2.0)).value();
        let (a, b) = (2f64.powi(-40), 2f64.powi(-30));
        assert_eq!(got, Complex64::new(a + b + a * b, -a + 3.0 * b));
    }
}
