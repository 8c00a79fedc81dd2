//! Zeros of `P_n^(k)` computed from the roots of `P_n`.
//!
//! The solver is an Aberth–Ehrlich simultaneous iteration whose Newton ratio
//! comes from [`crate::polynomial`], so the coefficients of `P_n` are never
//! formed. Repeated roots (atomic μ) are split off exactly: a root of
//! multiplicity `m > k` is a zero of `P^(k)` of multiplicity `m - k`, and the
//! iteration only runs on the quotient.

mod certify;
pub mod oracle;

pub use certify::{
    certify, convex_hull, count_zeros_argument_principle, hull_disk, hull_excess, Certificate,
};

use num_complex::Complex;
use num_traits::Zero;
use rand::Rng;

use crate::error::{Error, Result};
use crate::polynomial::{pk_jet, RootSet};
use crate::sampling::{domain, keyed_rng};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct AberthOptions {
    pub max_sweeps: usize,
    pub tol_root: f64,
    pub restarts: usize,
    /// Seeds the jitter of the initial guesses.
    pub seed: u64,
}

impl Default for AberthOptions {
    fn default() -> Self {
        Self { max_sweeps: 200, tol_root: 1e-11, restarts: 3, seed: 0 }
    }
}

impl AberthOptions {
    fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 || !(self.tol_root > 0.0) {
            return Err(Error::InvalidArgument(format!("bad Aberth options {self:?}")));
        }
        Ok(())
    }
}

/// The `n - k` zeros of `P^(k)`, counted with multiplicity.
#[derive(Clone, Debug, PartialEq)]
pub struct RootFindResult<T> {
    pub zeros: Vec<Complex<T>>,
    /// `|P^(k)(ρ) / P^(k)'(ρ)|` at each returned zero.
    pub residuals: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Scalar> RootFindResult<T> {
    pub fn max_residual(&self) -> T {
        self.residuals.iter().copied().fold(T::zero(), T::max)
    }
}

/// Distinct root values with multiplicities, in order of first appearance.
pub(crate) fn group_roots<T: Scalar>(roots: &[Complex<T>]) -> Vec<(Complex<T>, usize)> {
    let mut order: Vec<usize> = (0..roots.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (roots[a], roots[b]);
        x.re.partial_cmp(&y.re)
            .unwrap()
            .then(x.im.partial_cmp(&y.im).unwrap())
            .then(a.cmp(&b))
    });
    let mut groups: Vec<(usize, Complex<T>, usize)> = Vec::new();
    for idx in order {
        match groups.last_mut() {
            Some(g) if g.1 == roots[idx] => g.2 += 1,
            _ => groups.push((idx, roots[idx], 1)),
        }
    }
    groups.sort_by_key(|g| g.0);
    groups.into_iter().map(|(_, z, m)| (z, m)).collect()
}

/// Newton ratio of the quotient `Q = P^(k) / ∏ (z - c_j)^(m_j - k)₊`.
struct QuotientNewton<'a, T> {
    roots: &'a [Complex<T>],
    k: usize,
    /// `(c_j, (m_j - k)₊)` for roots repeated more than `k` times.
    excess: Vec<(Complex<T>, T)>,
    near_tol: T,
}

impl<T: Scalar> QuotientNewton<'_, T> {
    /// `Q(z) / Q'(z)`, or `None` when it is not finite.
    fn step(&self, z: Complex<T>) -> Option<Complex<T>> {
        let jet = pk_jet(self.roots, z, self.k, self.near_tol);
        let q1 = jet.far_p1 - self.excess.iter().map(|(c, m)| (z - c).inv() * *m).sum::<Complex<T>>();
        let denom = jet.dt + q1 * jet.t;
        let step = jet.t / denom;
        (denom.norm() >= T::overflow_guard() && step.re.is_finite() && step.im.is_finite())
            .then_some(step)
    }
}

/// All `n - k` zeros of `P_n^(k)`.
///
/// Fails only on bad arguments; non-convergence after every restart comes
/// back as `converged = false` with the best iterate found.
pub fn derivative_zeros<T: Scalar>(
    roots: &RootSet<T>,
    k: usize,
    opts: &AberthOptions,
) -> Result<RootFindResult<T>> {
    let n = roots.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidOrder { k, n });
    }
    opts.validate()?;

    let groups = group_roots(roots.roots());
    let mut fixed = Vec::new();
    for (c, m) in &groups {
        fixed.extend(std::iter::repeat_n(*c, m.saturating_sub(k)));
    }
    let free = n - k - fixed.len();
    let scale = roots.diameter().max(T::min_positive_value().sqrt());
    let newton = QuotientNewton {
        roots: roots.roots(),
        k,
        excess: groups
            .iter()
            .filter(|(_, m)| *m > k)
            .map(|(c, m)| (*c, T::from_usize(m - k).unwrap()))
            .collect(),
        near_tol: scale * T::lit(1e-6),
    };

    let finish = |free_zeros: Vec<Complex<T>>, free_res: Vec<T>, iterations: usize| {
        let converged = free_zeros
            .iter()
            .zip(&free_res)
            .all(|(z, r)| r.is_finite() && *r < T::lit(opts.tol_root) * (T::one() + z.norm()));
        let mut residuals = vec![T::zero(); fixed.len()];
        residuals.extend(free_res);
        let mut zeros = fixed.clone();
        zeros.extend(free_zeros);
        RootFindResult { zeros, residuals, iterations, converged }
    };
    if free == 0 {
        return Ok(finish(Vec::new(), Vec::new(), 0));
    }

    // Innermost distinct roots first: outer roots are the ones without a
    // nearby critical point.
    let centroid = roots.centroid();
    let mut candidates: Vec<Complex<T>> = groups.iter().map(|g| g.0).collect();
    candidates.sort_by(|a, b| (a - centroid).norm().partial_cmp(&(b - centroid).norm()).unwrap());

    let mut total_sweeps = 0;
    let mut best: Option<(Vec<Complex<T>>, Vec<T>)> = None;
    for attempt in 0..=opts.restarts {
        let mut rng = keyed_rng(opts.seed, domain::JITTER, attempt as u64);
        let mut z: Vec<Complex<T>> = (0..free)
            .map(|i| {
                let lap = T::from_usize(1 + i / candidates.len()).unwrap();
                let jitter = Complex::from_polar(
                    T::lit(1e-3) * scale * lap * T::lit(1.0 + rng.random::<f64>()),
                    T::lit(std::f64::consts::TAU * rng.random::<f64>()),
                );
                candidates[i % candidates.len()] + jitter
            })
            .collect();
        let sweeps = aberth_sweeps(&newton, &mut z, opts, scale);
        total_sweeps += sweeps;
        let residuals = polish(&newton, &mut z);
        let worst = residuals.iter().zip(&z).fold(T::zero(), |acc, (r, zi)| {
            let rel = if r.is_finite() { *r / (T::one() + zi.norm()) } else { T::infinity() };
            acc.max(rel)
        });
        let improves = match &best {
            None => true,
            Some((bz, br)) => {
                let prev = br
                    .iter()
                    .zip(bz)
                    .fold(T::zero(), |acc, (r, zi)| acc.max(*r / (T::one() + zi.norm())));
                !(worst >= prev)
            }
        };
        if improves {
            best = Some((z, residuals));
        }
        if worst < T::lit(opts.tol_root) {
            break;
        }
    }
    let (z, residuals) = best.expect("at least one attempt");
    Ok(finish(z, residuals, total_sweeps))
}

/// Gauss–Seidel Aberth sweeps; iterates freeze once their correction is
/// below tolerance. Returns the number of sweeps taken.
fn aberth_sweeps<T: Scalar>(
    newton: &QuotientNewton<'_, T>,
    z: &mut [Complex<T>],
    opts: &AberthOptions,
    scale: T,
) -> usize {
    let tol = T::lit(opts.tol_root);
    let nudge = scale * T::lit(1e-9);
    let mut frozen = vec![false; z.len()];
    for sweep in 1..=opts.max_sweeps {
        let mut active = false;
        for i in 0..z.len() {
            if frozen[i] {
                continue;
            }
            active = true;
            let zi = z[i];
            let Some(ratio) = newton.step(zi) else {
                z[i] = zi + Complex::new(nudge, nudge);
                continue;
            };
            let mut repulsion = Complex::zero();
            for (j, zj) in z.iter().enumerate() {
                if j != i {
                    repulsion += (zi - zj).inv();
                }
            }
            let corr = ratio / (Complex::new(T::one(), T::zero()) - ratio * repulsion);
            if !(corr.re.is_finite() && corr.im.is_finite()) {
                z[i] = zi + Complex::new(nudge, -nudge);
                continue;
            }
            z[i] = zi - corr;
            if corr.norm() <= tol * (T::one() + z[i].norm()) {
                frozen[i] = true;
            }
        }
        if !active {
            return sweep;
        }
    }
    opts.max_sweeps
}

/// A few guarded Newton steps per zero; returns the final Newton-step sizes.
fn polish<T: Scalar>(newton: &QuotientNewton<'_, T>, z: &mut [Complex<T>]) -> Vec<T> {
    let mut residuals = Vec::with_capacity(z.len());
    for i in 0..z.len() {
        let separation = z
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, w)| (z[i] - w).norm())
            .fold(T::infinity(), T::min);
        let mut res = T::infinity();
        for _ in 0..4 {
            let Some(step) = newton.step(z[i]) else { break };
            let size = step.norm();
            res = size;
            if size == T::zero() || size > separation * T::lit(0.1) {
                break;
            }
            let next = z[i] - step;
            match newton.step(next) {
                Some(s2) if s2.norm() < size => {
                    z[i] = next;
                    res = s2.norm();
                }
                _ => break,
            }
        }
        residuals.push(res);
    }
    residuals
}
