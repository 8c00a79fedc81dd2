//! Independent checks on a [`RootFindResult`]: Gauss–Lucas containment,
//! argument-principle zero counts and the trace identity.

use num_complex::Complex;
use num_traits::Zero;

use super::RootFindResult;
use crate::error::{Error, Result};
use crate::polynomial::{sn_value, RootSet};
use crate::scalar::Scalar;

const MAX_CONTOUR_SAMPLES: usize = 1 << 20;

/// Number of zeros of `P^(k)` inside the circle `C(center, radius)`.
///
/// `P^(k) = k! S_n P_n`, so the count is the number of roots of `P_n` inside
/// plus the winding number of `S_n` along the contour. The winding number is
/// accumulated from phase increments between consecutive samples; the sample
/// count doubles until every increment is below π/4 and two successive
/// resolutions agree.
pub fn count_zeros_argument_principle<T: Scalar>(
    roots: &RootSet<T>,
    k: usize,
    center: Complex<T>,
    radius: T,
    m_samples: usize,
) -> Result<usize> {
    let n = roots.len();
    if k == 0 || k > n {
        return Err(Error::InvalidOrder { k, n });
    }
    if !(radius > T::zero()) {
        return Err(Error::InvalidArgument(format!("contour radius {radius}")));
    }
    let margin = T::lit(1e-6) * radius;
    let mut inside = 0i64;
    for z in roots.iter() {
        let d = (z - center).norm();
        if (d - radius).abs() < margin {
            return Err(Error::ContourTooClose);
        }
        if d < radius {
            inside += 1;
        }
    }

    let mut m = m_samples.max(64);
    let mut previous = None;
    while m <= MAX_CONTOUR_SAMPLES {
        let (winding, max_step) = winding_of_sn(roots.roots(), k, center, radius, m)?;
        if max_step < T::FRAC_PI_4() {
            if previous == Some(winding) {
                let count = inside + winding;
                return usize::try_from(count).map_err(|_| Error::WindingUnstable(m));
            }
            previous = Some(winding);
        } else {
            previous = None;
        }
        m *= 2;
    }
    Err(Error::WindingUnstable(MAX_CONTOUR_SAMPLES))
}

fn winding_of_sn<T: Scalar>(
    roots: &[Complex<T>],
    k: usize,
    center: Complex<T>,
    radius: T,
    m: usize,
) -> Result<(i64, T)> {
    let step = T::TAU() / T::from_usize(m).unwrap();
    let sample = |t: usize| -> Result<Complex<T>> {
        let z = center + Complex::from_polar(radius, step * T::from_usize(t).unwrap());
        let v = sn_value(roots, z, k);
        if v.is_pole || !(v.value.norm() > T::zero()) || !v.value.norm().is_finite() {
            return Err(Error::ContourTooClose);
        }
        Ok(v.value)
    };
    let first = sample(0)?;
    let mut prev = first;
    let mut total = T::zero();
    let mut max_step = T::zero();
    for t in 1..=m {
        let cur = if t == m { first } else { sample(t)? };
        let dphi = (cur / prev).arg();
        max_step = max_step.max(dphi.abs());
        total += dphi;
        prev = cur;
    }
    Ok(((total / T::TAU()).round().to_i64().unwrap_or(i64::MAX), max_step))
}

/// Convex hull in counter-clockwise order (Andrew's monotone chain).
/// Collinear points are dropped; degenerate inputs give 1 or 2 vertices.
pub fn convex_hull<T: Scalar>(points: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: Complex<T>, a: Complex<T>, b: Complex<T>| {
        (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
    };
    let mut hull: Vec<Complex<T>> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Complex<T>>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= T::zero()
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn segment_distance<T: Scalar>(p: Complex<T>, a: Complex<T>, b: Complex<T>) -> T {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == T::zero() {
        return (p - a).norm();
    }
    let t = ((p - a) * ab.conj()).re / len2;
    (p - (a + ab * t.max(T::zero()).min(T::one()))).norm()
}

/// Distance from `p` to the hull; zero inside.
pub fn hull_excess<T: Scalar>(hull: &[Complex<T>], p: Complex<T>) -> T {
    match hull.len() {
        0 => T::infinity(),
        1 => (p - hull[0]).norm(),
        2 => segment_distance(p, hull[0], hull[1]),
        m => {
            let mut inside = true;
            let mut best = T::infinity();
            for i in 0..m {
                let (a, b) = (hull[i], hull[(i + 1) % m]);
                let cross = (b.re - a.re) * (p.im - a.im) - (b.im - a.im) * (p.re - a.re);
                if cross < T::zero() {
                    inside = false;
                }
                best = best.min(segment_distance(p, a, b));
            }
            if inside {
                T::zero()
            } else {
                best
            }
        }
    }
}

/// A disk strictly containing the hull of the roots with a margin of 1.
pub fn hull_disk<T: Scalar>(roots: &RootSet<T>) -> (Complex<T>, T) {
    let c = roots.centroid();
    let r = roots.iter().map(|z| (z - c).norm()).fold(T::zero(), T::max);
    (c, r + T::one())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub converged: bool,
    /// Largest distance of a zero outside the root hull.
    pub gauss_lucas_excess: f64,
    pub gauss_lucas_ok: bool,
    /// Argument-principle count over [`hull_disk`], when it could be computed.
    pub count: Option<usize>,
    pub count_ok: bool,
    /// `|Σρ - (n-k)/n · ΣZ|`.
    pub trace_error: f64,
    pub trace_ok: bool,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.converged && self.gauss_lucas_ok && self.count_ok && self.trace_ok
    }
}

/// Runs every check on a solver result.
pub fn certify<T: Scalar>(roots: &RootSet<T>, k: usize, result: &RootFindResult<T>) -> Certificate {
    let n = roots.len();
    let hull = convex_hull(roots.roots());
    let diameter = roots.diameter();
    let excess = result
        .zeros
        .iter()
        .map(|z| hull_excess(&hull, *z))
        .fold(T::zero(), T::max);
    let gl_tol = T::lit(1e-8) * diameter.max(T::min_positive_value());

    let (center, radius) = hull_disk(roots);
    let count = count_zeros_argument_principle(roots, k, center, radius, 64).ok();

    let nf = T::from_usize(n).unwrap();
    let d = T::from_usize(n.saturating_sub(k)).unwrap();
    let zero_sum: Complex<T> = result.zeros.iter().fold(Complex::zero(), |a, z| a + z);
    let root_sum: Complex<T> = roots.iter().fold(Complex::zero(), |a, z| a + z);
    let trace_error = (zero_sum - root_sum * (d / nf)).norm();
    let max_abs = roots.iter().map(|z| z.norm()).fold(T::zero(), T::max);

    Certificate {
        converged: result.converged && result.zeros.len() + k == n,
        gauss_lucas_excess: excess.as_f64(),
        gauss_lucas_ok: excess <= gl_tol,
        count,
        count_ok: count == Some(n - k),
        trace_error: trace_error.as_f64(),
        trace_ok: trace_error <= T::lit(1e-8) * d * (T::one() + max_abs),
    }
}
