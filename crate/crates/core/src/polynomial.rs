//! Evaluation of `P_n`, `log|P_n|` and `S_n = P_n^(k) / (k! P_n)` straight
//! from the roots.
//!
//! `S_n(z)` is the elementary symmetric polynomial `e_k` of the reciprocals
//! `w_i = 1/(z - Z_i)`. Two routes are provided: power sums of the `w_i` fed
//! through Newton's identities, and the product recurrence for the
//! coefficients of `∏(1 + w_i x)`. Neither expands the coefficients of `P_n`
//! in `z`.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The roots `Z_1, ..., Z_n` of `P_n`, in sampling order.
#[derive(Clone, Debug, PartialEq)]
pub struct RootSet<T> {
    roots: Vec<Complex<T>>,
}

impl<T: Scalar> RootSet<T> {
    pub fn new(roots: Vec<Complex<T>>) -> Result<Self> {
        if roots.is_empty() {
            return Err(Error::EmptyRootSet);
        }
        if let Some(i) = roots.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFiniteRoot(i));
        }
        Ok(Self { roots })
    }

    pub(crate) fn from_vec_unchecked(roots: Vec<Complex<T>>) -> Self {
        debug_assert!(!roots.is_empty());
        Self { roots }
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn roots(&self) -> &[Complex<T>] {
        &self.roots
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Complex<T>> {
        self.roots.iter()
    }

    pub fn into_vec(self) -> Vec<Complex<T>> {
        self.roots
    }

    /// The first `m` roots.
    pub fn prefix(&self, m: usize) -> Self {
        Self::from_vec_unchecked(self.roots[..m.clamp(1, self.len())].to_vec())
    }

    pub fn translated(&self, by: Complex<T>) -> Self {
        Self::from_vec_unchecked(self.roots.iter().map(|z| z + by).collect())
    }

    pub fn centroid(&self) -> Complex<T> {
        self.roots.iter().copied().sum::<Complex<T>>() / T::from_usize(self.len()).unwrap()
    }

    /// Largest pairwise distance.
    pub fn diameter(&self) -> T {
        let mut d = T::zero();
        for (i, a) in self.roots.iter().enumerate() {
            for b in &self.roots[i + 1..] {
                d = d.max((a - b).norm());
            }
        }
        d
    }

    /// Smallest `|z - Z_i|`.
    pub fn min_distance(&self, z: Complex<T>) -> T {
        self.roots.iter().map(|r| (z - r).norm()).fold(T::infinity(), T::min)
    }
}

fn is_pole<T: Scalar>(min_distance: T, z: Complex<T>) -> bool {
    min_distance < T::pole_rtol() * (T::one() + z.norm()) || min_distance < T::overflow_guard()
}

fn check_order(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidOrder { k, n });
    }
    Ok(())
}

/// `p_j = Σ_i (z - Z_i)^(-j)` for `j = 1..=k`.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSums<T> {
    pub z: Complex<T>,
    /// `sums[j - 1] = p_j`.
    pub sums: Vec<Complex<T>>,
    pub min_distance: T,
    pub is_pole: bool,
}

pub fn power_sums<T: Scalar>(roots: &RootSet<T>, z: Complex<T>, k: usize) -> PowerSums<T> {
    let min_distance = roots.min_distance(z);
    if is_pole(min_distance, z) {
        return PowerSums {
            z,
            sums: vec![Complex::new(T::infinity(), T::zero()); k],
            min_distance,
            is_pole: true,
        };
    }
    let mut sums = vec![Complex::zero(); k];
    for r in roots.iter() {
        let w = (z - r).inv();
        let mut wj = w;
        for s in sums.iter_mut() {
            *s += wj;
            wj *= w;
        }
    }
    PowerSums { z, sums, min_distance, is_pole: false }
}

/// Newton's identities: `e_0 = 1`, `m e_m = Σ_{j=1..m} (-1)^(j-1) e_{m-j} p_j`.
///
/// `p[j - 1]` holds `p_j`; the result holds `e_0..=e_k` with `k = p.len()`.
pub fn elementary_from_power_sums<T: Scalar>(p: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut e = Vec::with_capacity(p.len() + 1);
    e.push(Complex::one());
    for m in 1..=p.len() {
        let mut acc = Complex::zero();
        for j in 1..=m {
            let term = e[m - j] * p[j - 1];
            if j % 2 == 1 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        e.push(acc / T::from_usize(m).unwrap());
    }
    e
}

/// `S_n(z)` with its log-magnitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnValue<T> {
    pub value: Complex<T>,
    /// `ln|S_n(z)|`: `-∞` at a zero, `+∞` at a pole.
    pub log_abs: T,
    pub is_pole: bool,
}

impl<T: Scalar> SnValue<T> {
    fn pole() -> Self {
        Self {
            value: Complex::new(T::infinity(), T::zero()),
            log_abs: T::infinity(),
            is_pole: true,
        }
    }

    /// `|S_n(z)|`, `+∞` at a pole.
    pub fn abs(&self) -> T {
        if self.is_pole {
            T::infinity()
        } else {
            self.value.norm()
        }
    }
}

/// Value and `z`-derivative of `S_n`, plus `p_1 = P'/P`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct SnJet<T> {
    pub s: Complex<T>,
    pub ds: Complex<T>,
    pub p1: Complex<T>,
    pub is_pole: bool,
}

/// Product recurrence for `e_k(w)` and `d/dz e_k(w)`, with `dw_i/dz = -w_i²`.
pub(crate) fn sn_jet<T: Scalar>(roots: &[Complex<T>], z: Complex<T>, k: usize) -> SnJet<T> {
    let mut e = vec![Complex::<T>::zero(); k + 1];
    let mut de = vec![Complex::<T>::zero(); k + 1];
    e[0] = Complex::one();
    let mut p1 = Complex::zero();
    let mut min_distance = T::infinity();
    for r in roots {
        let d = z - r;
        min_distance = min_distance.min(d.norm());
        let w = d.inv();
        let dw = -w * w;
        p1 += w;
        for j in (1..=k).rev() {
            de[j] = de[j] + dw * e[j - 1] + w * de[j - 1];
            e[j] = e[j] + w * e[j - 1];
        }
    }
    SnJet { s: e[k], ds: de[k], p1, is_pole: is_pole(min_distance, z) }
}

/// Pieces of the Newton step for `P^(k)` with up to `k` roots inside
/// `near_tol` of `z` factored out: `P = R ∏_near (z - c)` and
/// `P^(k) / (k! R) = t`, the `x^k` coefficient of
/// `∏_far (1 + w_i x) ∏_near ((z - c) + x)`. Removes the spurious pole of
/// `S_n` at a root of `P` that is also a zero of `P^(k)`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PkJet<T> {
    pub t: Complex<T>,
    pub dt: Complex<T>,
    /// `R'/R`.
    pub far_p1: Complex<T>,
}

pub(crate) fn pk_jet<T: Scalar>(roots: &[Complex<T>], z: Complex<T>, k: usize, near_tol: T) -> PkJet<T> {
    let mut e = vec![Complex::<T>::zero(); k + 1];
    let mut de = vec![Complex::<T>::zero(); k + 1];
    e[0] = Complex::one();
    let mut far_p1 = Complex::zero();
    let mut near = 0;
    for r in roots {
        let d = z - r;
        if near < k && d.norm() < near_tol {
            near += 1;
            for j in (0..=k).rev() {
                let lower = if j > 0 { e[j - 1] } else { Complex::zero() };
                let dlower = if j > 0 { de[j - 1] } else { Complex::zero() };
                de[j] = e[j] + d * de[j] + dlower;
                e[j] = d * e[j] + lower;
            }
            continue;
        }
        let w = d.inv();
        let dw = -w * w;
        far_p1 += w;
        for j in (1..=k).rev() {
            de[j] = de[j] + dw * e[j - 1] + w * de[j - 1];
            e[j] = e[j] + w * e[j - 1];
        }
    }
    PkJet { t: e[k], dt: de[k], far_p1 }
}

/// `S_n(z) = Σ_{i_1<…<i_k} ∏ 1/(z - Z_{i_j})`.
pub fn evaluate_sn<T: Scalar>(roots: &RootSet<T>, z: Complex<T>, k: usize) -> Result<SnValue<T>> {
    check_order(roots.len(), k)?;
    Ok(sn_value(roots.roots(), z, k))
}

/// [`evaluate_sn`] over a bare slice; `k ≤ roots.len()` is the caller's job.
pub(crate) fn sn_value<T: Scalar>(roots: &[Complex<T>], z: Complex<T>, k: usize) -> SnValue<T> {
    let mut e = vec![Complex::<T>::zero(); k + 1];
    e[0] = Complex::one();
    let mut min_distance = T::infinity();
    for r in roots {
        let d = z - r;
        min_distance = min_distance.min(d.norm());
        let w = d.inv();
        for j in (1..=k).rev() {
            e[j] = e[j] + w * e[j - 1];
        }
    }
    if is_pole(min_distance, z) {
        return SnValue::pole();
    }
    let value = e[k];
    SnValue { value, log_abs: value.norm().ln(), is_pole: false }
}

/// `S_n'(z) / S_n(z)` by differentiating Newton's identities, using
/// `dp_j/dz = -j p_{j+1}`.
pub fn sn_log_derivative<T: Scalar>(roots: &RootSet<T>, z: Complex<T>, k: usize) -> Result<Complex<T>> {
    check_order(roots.len(), k)?;
    let ps = power_sums(roots, z, k + 1);
    if ps.is_pole {
        return Err(Error::Pole);
    }
    let p = &ps.sums;
    let mut e = vec![Complex::<T>::one()];
    let mut de = vec![Complex::<T>::zero()];
    for m in 1..=k {
        let (mut acc, mut dacc) = (Complex::zero(), Complex::zero());
        for j in 1..=m {
            let dp = -p[j] * T::from_usize(j).unwrap();
            let term = e[m - j] * p[j - 1];
            let dterm = de[m - j] * p[j - 1] + e[m - j] * dp;
            if j % 2 == 1 {
                acc += term;
                dacc += dterm;
            } else {
                acc -= term;
                dacc -= dterm;
            }
        }
        let inv_m = T::one() / T::from_usize(m).unwrap();
        e.push(acc * inv_m);
        de.push(dacc * inv_m);
    }
    if e[k].norm() < T::overflow_guard() {
        return Err(Error::Underflow);
    }
    Ok(de[k] / e[k])
}

/// `Σ_i ln|z - Z_i|`, `-∞` at a root.
pub fn log_abs_p<T: Scalar>(roots: &RootSet<T>, z: Complex<T>) -> T {
    roots.iter().map(|r| (z - r).norm().ln()).sum()
}

/// The Newton step `P^(k)(z) / P^(k)'(z)`.
///
/// Uses `P^(k)'/P^(k) = S_n'/S_n + p_1`, rearranged as `S / (S' + p_1 S)` so
/// that a zero of `S_n` gives a zero step instead of a division by zero.
pub fn pk_newton_ratio<T: Scalar>(roots: &RootSet<T>, z: Complex<T>, k: usize) -> Result<Complex<T>> {
    check_order(roots.len(), k)?;
    let jet = sn_jet(roots.roots(), z, k);
    if jet.is_pole {
        return Err(Error::Pole);
    }
    let denom = jet.ds + jet.p1 * jet.s;
    if denom.norm() < T::overflow_guard() {
        return Err(Error::Underflow);
    }
    Ok(jet.s / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real_roots(xs: &[f64]) -> RootSet<f64> {
        RootSet::new(xs.iter().map(|&x| c(x, 0.0)).collect()).unwrap()
    }

    #[test]
    fn power_sums_small() {
        let ps = power_sums(&real_roots(&[1.0, -1.0]), c(0.0, 0.0), 2);
        assert!(!ps.is_pole);
        assert!((ps.sums[0] - c(0.0, 0.0)).norm() < 1e-15);
        assert!((ps.sums[1] - c(2.0, 0.0)).norm() < 1e-15);
        assert_eq!(ps.min_distance, 1.0);

        let ps = power_sums(&real_roots(&[1.0]), c(2.0, 0.0), 1);
        assert_eq!(ps.sums[0], c(1.0, 0.0));
    }

    #[test]
    fn power_sums_flag_poles() {
        let ps = power_sums(&real_roots(&[1.0, 3.0]), c(1.0, 0.0), 2);
        assert!(ps.is_pole);
        let ps = power_sums(&real_roots(&[1.0, 3.0]), c(1.0 + 1e-9, 0.0), 2);
        assert!(!ps.is_pole);
    }

    #[test]
    fn newton_identities_small() {
        let e = elementary_from_power_sums(&[c(0.0, 0.0), c(2.0, 0.0)]);
        assert_eq!(e, vec![c(1.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        let e = elementary_from_power_sums(&[c(0.25, -3.0)]);
        assert_eq!(e[1], c(0.25, -3.0));
    }

    #[test]
    fn sn_small_cases() {
        let r = real_roots(&[1.0, -1.0]);
        assert!(evaluate_sn(&r, c(0.0, 0.0), 1).unwrap().value.norm() < 1e-15);
        let v = evaluate_sn(&r, c(0.0, 0.0), 2).unwrap();
        assert_eq!(v.value, c(-1.0, 0.0));
        assert_eq!(v.log_abs, 0.0);
        assert!(evaluate_sn(&r, c(0.0, 0.0), 3).is_err());
        assert!(evaluate_sn(&r, c(0.0, 0.0), 0).is_err());
    }

    #[test]
    fn sn_pole_convention() {
        let v = evaluate_sn(&real_roots(&[1.0, -1.0]), c(1.0, 0.0), 1).unwrap();
        assert!(v.is_pole);
        assert_eq!(v.log_abs, f64::INFINITY);
        assert_eq!(v.abs(), f64::INFINITY);
    }

    #[test]
    fn sn_zero_has_negative_infinite_log() {
        let v = evaluate_sn(&real_roots(&[1.0, -1.0]), c(0.0, 0.0), 1).unwrap();
        assert_eq!(v.value, c(0.0, 0.0));
        assert_eq!(v.log_abs, f64::NEG_INFINITY);
    }

    #[test]
    fn log_derivative_single_root() {
        let r = real_roots(&[0.0]);
        let g = sn_log_derivative(&r, c(1.0, 0.0), 1).unwrap();
        assert!((g - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn log_abs_small() {
        assert_eq!(log_abs_p(&real_roots(&[1.0, -1.0]), c(0.0, 0.0)), 0.0);
        assert!((log_abs_p(&real_roots(&[0.0]), c(std::f64::consts::E, 0.0)) - 1.0).abs() < 1e-15);
        assert_eq!(log_abs_p(&real_roots(&[0.0, 2.0]), c(2.0, 0.0)), f64::NEG_INFINITY);
    }

    #[test]
    fn newton_ratio_small() {
        let step = pk_newton_ratio(&real_roots(&[1.0, -1.0]), c(3.0, 0.0), 1).unwrap();
        assert!((step - c(3.0, 0.0)).norm() < 1e-14);
        let step = pk_newton_ratio(&real_roots(&[0.0, 1.0, 2.0]), c(5.0, 0.0), 1).unwrap();
        assert!((step - c(47.0 / 24.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn f32_evaluation() {
        let r = RootSet::new(vec![Complex::new(1.0f32, 0.0), Complex::new(-1.0, 0.0)]).unwrap();
        let v = evaluate_sn(&r, Complex::new(0.0f32, 0.0), 2).unwrap();
        assert_eq!(v.value, Complex::new(-1.0f32, 0.0));
    }

    #[test]
    fn rootset_rejects_bad_input() {
        assert_eq!(RootSet::<f64>::new(vec![]), Err(Error::EmptyRootSet));
        assert_eq!(RootSet::new(vec![c(0.0, f64::NAN)]), Err(Error::NonFiniteRoot(0)));
    }
}
