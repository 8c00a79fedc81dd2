//! Extended-precision coefficient expansion for small degrees.
//!
//! This is a test oracle, deliberately independent of the Aberth path: it
//! multiplies out `∏(z - Z_i)` in binary floating point of the requested
//! precision, differentiates the coefficients, and finds the zeros by damped
//! Newton iteration with deflation.

use std::ops::{Add, Mul, Sub};

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use num_complex::{Complex, Complex64};

use crate::error::{Error, Result};
use crate::polynomial::RootSet;
use crate::scalar::Scalar;

pub type BigFloat = FBig<HalfEven>;

pub const DEFAULT_PRECISION_BITS: usize = 512;
pub const MAX_ORACLE_DEGREE: usize = 128;

fn big(x: f64, precision: usize) -> BigFloat {
    BigFloat::try_from(x).expect("finite f64").with_precision(precision).value()
}

fn to_f64(x: &BigFloat) -> f64 {
    x.to_f64().value()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BigComplex {
    pub re: BigFloat,
    pub im: BigFloat,
}

impl BigComplex {
    pub fn from_complex<T: Scalar>(z: Complex<T>, precision: usize) -> Self {
        Self { re: big(z.re.as_f64(), precision), im: big(z.im.as_f64(), precision) }
    }

    pub fn zero(precision: usize) -> Self {
        Self { re: big(0.0, precision), im: big(0.0, precision) }
    }

    pub fn one(precision: usize) -> Self {
        Self { re: big(1.0, precision), im: big(0.0, precision) }
    }

    pub fn to_complex64(&self) -> Complex64 {
        Complex64::new(to_f64(&self.re), to_f64(&self.im))
    }

    pub fn norm_sqr(&self) -> BigFloat {
        &self.re * &self.re + &self.im * &self.im
    }

    /// `|z|` rounded to `f64`; tiny values underflow to zero.
    pub fn norm_f64(&self) -> f64 {
        to_f64(&self.re).hypot(to_f64(&self.im))
    }

    pub fn scale(&self, s: &BigFloat) -> Self {
        Self { re: &self.re * s, im: &self.im * s }
    }

    pub fn div(&self, other: &Self) -> Self {
        let den = other.norm_sqr();
        let re = (&self.re * &other.re + &self.im * &other.im) / &den;
        let im = (&self.im * &other.re - &self.re * &other.im) / &den;
        Self { re, im }
    }
}

impl Add for &BigComplex {
    type Output = BigComplex;
    fn add(self, o: &BigComplex) -> BigComplex {
        BigComplex { re: &self.re + &o.re, im: &self.im + &o.im }
    }
}

impl Sub for &BigComplex {
    type Output = BigComplex;
    fn sub(self, o: &BigComplex) -> BigComplex {
        BigComplex { re: &self.re - &o.re, im: &self.im - &o.im }
    }
}

impl Mul for &BigComplex {
    type Output = BigComplex;
    fn mul(self, o: &BigComplex) -> BigComplex {
        BigComplex {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }
}

/// Monomial coefficients `c_0..=c_n` of `P_n`, lowest degree first.
pub fn expand_coefficients<T: Scalar>(roots: &RootSet<T>, precision_bits: usize) -> Result<Vec<BigComplex>> {
    let n = roots.len();
    if n > MAX_ORACLE_DEGREE {
        return Err(Error::DegreeTooLarge { degree: n, limit: MAX_ORACLE_DEGREE });
    }
    let p = precision_bits.max(64);
    let mut coeffs = vec![BigComplex::one(p)];
    for z in roots.iter() {
        let neg = BigComplex::from_complex(-*z, p);
        let mut next = vec![BigComplex::zero(p); coeffs.len() + 1];
        for (j, c) in coeffs.iter().enumerate() {
            next[j + 1] = &next[j + 1] + c;
            next[j] = &next[j] + &(c * &neg);
        }
        coeffs = next;
    }
    Ok(coeffs)
}

/// Coefficients of the `k`-th derivative.
pub fn differentiate(coeffs: &[BigComplex], k: usize) -> Vec<BigComplex> {
    if k >= coeffs.len() {
        return Vec::new();
    }
    let precision = coeffs[0].re.precision().max(64);
    (k..coeffs.len())
        .map(|j| {
            let falling: f64 = ((j - k + 1)..=j).map(|t| t as f64).product();
            coeffs[j].scale(&big(falling, precision))
        })
        .collect()
}

/// Horner evaluation.
pub fn evaluate(coeffs: &[BigComplex], z: &BigComplex) -> BigComplex {
    let mut acc = coeffs.last().cloned().expect("non-empty polynomial");
    for c in coeffs.iter().rev().skip(1) {
        acc = &(&acc * z) + c;
    }
    acc
}

/// `∏ (z - Z_i)` directly in extended precision.
pub fn evaluate_product<T: Scalar>(roots: &RootSet<T>, z: &BigComplex, precision_bits: usize) -> BigComplex {
    roots.iter().fold(BigComplex::one(precision_bits), |acc, r| {
        &acc * &(z - &BigComplex::from_complex(*r, precision_bits))
    })
}

/// Synthetic division by `(z - root)`; the remainder is dropped.
fn deflate(coeffs: &[BigComplex], root: &BigComplex) -> Vec<BigComplex> {
    let d = coeffs.len() - 1;
    let mut out = vec![coeffs[d].clone()];
    for j in (1..d).rev() {
        let next = &coeffs[j] + &(out.last().unwrap() * root);
        out.push(next);
    }
    out.reverse();
    out
}

/// Damped Newton on `coeffs` from `start`. `None` if it stalls.
fn newton(coeffs: &[BigComplex], start: BigComplex, max_iter: usize) -> Option<BigComplex> {
    let deriv = differentiate(coeffs, 1);
    let precision = coeffs[0].re.precision();
    let target = 2f64.powi(-((precision as i32) - 40).min(1000));
    let half = big(0.5, precision);
    let mut z = start;
    let mut fz = evaluate(coeffs, &z);
    for _ in 0..max_iter {
        if fz.norm_f64() == 0.0 && fz.norm_sqr() == BigFloat::ZERO {
            return Some(z);
        }
        let dz = evaluate(&deriv, &z);
        if dz.norm_sqr() == BigFloat::ZERO {
            return None;
        }
        let mut step = fz.div(&dz);
        let mut accepted = false;
        for _ in 0..40 {
            let cand = &z - &step;
            let fc = evaluate(coeffs, &cand);
            if fc.norm_sqr() < fz.norm_sqr() {
                z = cand;
                fz = fc;
                accepted = true;
                break;
            }
            step = step.scale(&half);
        }
        let size = step.norm_f64();
        if !accepted || size <= target * (1.0 + z.norm_f64()) {
            return Some(z);
        }
    }
    None
}

/// The zeros of `P_n^(k)` by Newton with deflation at `precision_bits`.
///
/// Newton starts from the roots of `P_n` in order (each root of a random
/// polynomial sits close to a critical point) and, if that stalls, from
/// points on a circle around the roots. Every zero is polished against the
/// undeflated polynomial before rounding to `f64`.
pub fn oracle_derivative_zeros<T: Scalar>(
    roots: &RootSet<T>,
    k: usize,
    precision_bits: usize,
) -> Result<Vec<Complex64>> {
    let n = roots.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidOrder { k, n });
    }
    let p = precision_bits.max(64);
    let full = differentiate(&expand_coefficients(roots, p)?, k);
    let mut current = full.clone();
    let radius = 1.0 + roots.iter().map(|z| z.norm().as_f64()).fold(0.0, f64::max);
    let mut zeros = Vec::with_capacity(n - k);
    for idx in 0..n - k {
        let mut found = None;
        for attempt in 0..n + 16 {
            let start = if attempt < n {
                let z = roots.roots()[(idx + attempt) % n];
                Complex64::new(z.re.as_f64() + 1e-7, z.im.as_f64() - 1e-7)
            } else {
                Complex64::from_polar(radius, 2.4 * attempt as f64)
            };
            if let Some(z) = newton(&current, BigComplex::from_complex(start, p), 200) {
                found = Some(z);
                break;
            }
        }
        let z = found.ok_or(Error::NotConverged)?;
        let polished = newton(&full, z.clone(), 8).unwrap_or(z);
        current = deflate(&current, &polished);
        zeros.push(polished.to_complex64());
    }
    Ok(zeros)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real_roots(xs: &[f64]) -> RootSet<f64> {
        RootSet::new(xs.iter().map(|&x| Complex64::new(x, 0.0)).collect()).unwrap()
    }

    fn re_parts(c: &[BigComplex]) -> Vec<f64> {
        c.iter().map(|z| z.to_complex64().re).collect()
    }

    #[test]
    fn expand_small() {
        let c = expand_coefficients(&real_roots(&[1.0, -1.0]), 512).unwrap();
        assert_eq!(re_parts(&c), vec![-1.0, 0.0, 1.0]);
        let c = expand_coefficients(&real_roots(&[0.0, 1.0, 2.0]), 512).unwrap();
        assert_eq!(re_parts(&c), vec![0.0, 2.0, -3.0, 1.0]);
    }

    #[test]
    fn derivative_coefficients() {
        let c = expand_coefficients(&real_roots(&[0.0, 1.0, 2.0]), 512).unwrap();
        assert_eq!(re_parts(&differentiate(&c, 1)), vec![2.0, -6.0, 3.0]);
        assert_eq!(re_parts(&differentiate(&c, 2)), vec![-6.0, 6.0]);
    }

    #[test]
    fn degree_limit() {
        let r = RootSet::new(vec![Complex64::new(0.5, 0.0); 129]).unwrap();
        assert!(matches!(expand_coefficients(&r, 512), Err(Error::DegreeTooLarge { .. })));
    }

    #[test]
    fn oracle_zeros_of_cubic_derivative() {
        let mut z = oracle_derivative_zeros(&real_roots(&[0.0, 1.0, 2.0]), 1, 512).unwrap();
        z.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        let s = 1.0 / 3f64.sqrt();
        assert!((z[0].re - (1.0 - s)).abs() < 1e-15);
        assert!((z[1].re - (1.0 + s)).abs() < 1e-15);
    }
}
