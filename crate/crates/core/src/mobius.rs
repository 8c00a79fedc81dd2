//! Möbius transformations, generalized circles, the `log_±` potentials and
//! the Jensen-formula audit.
//!
//! For `S = P^(k)/(k! P)` and a Möbius map ψ, Jensen's formula applied to
//! `S ∘ ψ⁻¹` on the unit disk gives
//!
//! ```text
//! Σ_ρ log₋|ψ(ρ)| − Σ_ζ log₋|ψ(ζ)|  ≤  max_{ψ⁻¹(C(0,1))} log|S|  −  log|S(ψ⁻¹(0))|
//! ```
//!
//! with ρ the zeros of `P^(k)` and ζ the roots of `P`. [`jensen_audit`]
//! measures both sides; the maximum is taken over a refined grid, which can
//! only underestimate it.

use num_complex::{Complex, Complex64};
use num_traits::{One, Zero};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::measures::EmpiricalMeasure;
use crate::polynomial::{sn_value, RootSet};
use crate::rootfinding::RootFindResult;
use crate::scalar::{cast_complex, Scalar};

/// A point of the Riemann sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Extended<T> {
    Finite(Complex<T>),
    Infinity,
}

impl<T: Scalar> Extended<T> {
    pub fn finite(self) -> Option<Complex<T>> {
        match self {
            Self::Finite(z) => Some(z),
            Self::Infinity => None,
        }
    }

    /// `|z|`, `+∞` at infinity.
    pub fn modulus(self) -> T {
        match self {
            Self::Finite(z) => z.norm(),
            Self::Infinity => T::infinity(),
        }
    }
}

impl<T> From<Complex<T>> for Extended<T> {
    fn from(z: Complex<T>) -> Self {
        Self::Finite(z)
    }
}

/// `ψ(z) = (az + b)/(cz + d)`, stored with `ad − bc = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MobiusTransform<T> {
    a: Complex<T>,
    b: Complex<T>,
    c: Complex<T>,
    d: Complex<T>,
}

impl<T: Scalar> MobiusTransform<T> {
    pub fn new(a: Complex<T>, b: Complex<T>, c: Complex<T>, d: Complex<T>) -> Result<Self> {
        let det = a * d - b * c;
        if !(det.norm() > T::lit(1e-12)) {
            return Err(Error::DegenerateMobius(det.norm().as_f64()));
        }
        let s = det.sqrt().inv();
        Ok(Self { a: a * s, b: b * s, c: c * s, d: d * s })
    }

    pub fn identity() -> Self {
        let (o, z) = (Complex::one(), Complex::zero());
        Self { a: o, b: z, c: z, d: o }
    }

    pub fn coefficients(&self) -> [Complex<T>; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn apply(&self, z: Extended<T>) -> Extended<T> {
        match z {
            Extended::Infinity => {
                if self.c == Complex::zero() {
                    Extended::Infinity
                } else {
                    Extended::Finite(self.a / self.c)
                }
            }
            Extended::Finite(z) => self.apply_finite(z),
        }
    }

    pub fn apply_finite(&self, z: Complex<T>) -> Extended<T> {
        let den = self.c * z + self.d;
        if den == Complex::zero() {
            Extended::Infinity
        } else {
            Extended::Finite((self.a * z + self.b) / den)
        }
    }

    pub fn inverse(&self) -> Self {
        Self { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    /// `λψ`; `|λ| = 1` leaves every modulus `|ψ(z)|` unchanged.
    pub fn rotated(&self, lambda: Complex<T>) -> Result<Self> {
        Self::new(self.a * lambda, self.b * lambda, self.c, self.d)
    }

    /// `ψ⁻¹(0) = −b/a`.
    pub fn zero_preimage(&self) -> Extended<T> {
        self.inverse().apply_finite(Complex::zero())
    }

    /// `ψ⁻¹(∞) = −d/c`.
    pub fn pole_preimage(&self) -> Extended<T> {
        self.inverse().apply(Extended::Infinity)
    }

    /// `{z : |ψ(z)| = 1}` from `|az + b|² = |cz + d|²`.
    pub fn preimage_unit_circle(&self) -> GeneralizedCircle<T> {
        let quad = self.a.norm_sqr() - self.c.norm_sqr();
        let beta = self.a * self.b.conj() - self.c * self.d.conj();
        let constant = self.b.norm_sqr() - self.d.norm_sqr();
        if quad.abs() <= T::lit(1e-12) {
            let len = beta.norm();
            GeneralizedCircle::Line {
                unit_normal: beta.conj() / len,
                offset: -constant / (T::lit(2.0) * len),
            }
        } else {
            GeneralizedCircle::Circle { center: -beta.conj() / quad, radius: T::one() / quad.abs() }
        }
    }
}

/// A circle or a line in the plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GeneralizedCircle<T> {
    Circle { center: Complex<T>, radius: T },
    /// `{z : Re(z · conj(unit_normal)) = offset}`.
    Line { unit_normal: Complex<T>, offset: T },
}

impl<T: Scalar> GeneralizedCircle<T> {
    /// The circle by angle `t`, the line by signed arclength `t` from its
    /// point nearest the origin.
    pub fn point_at(&self, t: T) -> Complex<T> {
        match *self {
            Self::Circle { center, radius } => center + Complex::from_polar(radius, t),
            Self::Line { unit_normal, offset } => {
                unit_normal * offset + unit_normal * Complex::new(T::zero(), t)
            }
        }
    }
}

/// `log₋ x = |log x|` on `[0, 1]`, `0` above, `+∞` at `0`.
pub fn log_minus<T: Scalar>(x: T) -> Result<T> {
    if !(x >= T::zero()) {
        return Err(Error::NegativeLogArgument(x.as_f64()));
    }
    Ok(if x >= T::one() { T::zero() } else { -x.ln() })
}

/// `log₊ x = max(log x, 0)`.
pub fn log_plus<T: Scalar>(x: T) -> Result<T> {
    if !(x >= T::zero()) {
        return Err(Error::NegativeLogArgument(x.as_f64()));
    }
    Ok(if x <= T::one() { T::zero() } else { x.ln() })
}

fn log_minus_ext<T: Scalar>(w: Extended<T>) -> T {
    match w {
        Extended::Infinity => T::zero(),
        Extended::Finite(z) => {
            let m = z.norm();
            if m >= T::one() {
                T::zero()
            } else {
                -m.ln()
            }
        }
    }
}

fn standard_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Raw `(a, b, c, d)`: i.i.d. standard complex Gaussians, redrawn until
/// `|ad − bc| > 1e-6`.
pub fn sample_mobius_coefficients<R: Rng + ?Sized>(rng: &mut R) -> [Complex64; 4] {
    loop {
        let q = [0; 4].map(|_| standard_complex_normal(rng));
        if (q[0] * q[3] - q[1] * q[2]).norm() > 1e-6 {
            return q;
        }
    }
}

/// A random Möbius map whose law is absolutely continuous with respect to
/// Lebesgue measure on the coefficients.
pub fn sample_mobius<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> MobiusTransform<T> {
    let [a, b, c, d] = sample_mobius_coefficients(rng).map(cast_complex::<f64, T>);
    MobiusTransform::new(a, b, c, d).expect("determinant bounded away from zero")
}

/// `∫ log₋|ψ| dm`, `+∞` when an atom maps to 0.
pub fn potential_integral<T: Scalar>(psi: &MobiusTransform<T>, m: &EmpiricalMeasure<T>) -> T {
    let total: T = m.points().iter().map(|z| log_minus_ext(psi.apply_finite(*z))).sum();
    total * m.weight()
}

/// Grid maximum of `log|S_n|` along a generalized circle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircleMax<T> {
    pub max_log: T,
    pub grid_size: usize,
    /// False if the refinement cap was reached before the maximum settled.
    pub stabilized: bool,
}

const MAX_GRID: usize = 1 << 18;
const GRID_TOL: f64 = 1e-3;

/// Maximum of `log|S_n|` on `circle` over `m_grid` equispaced parameters,
/// doubling the grid until the maximum moves by less than `1e-3`.
///
/// Lines are cut to the window `[−T, T]` with `T = 10 (1 + diam)`, centred on
/// the projection of the root centroid. Each refinement contains the previous
/// grid, so the reported maximum never decreases as the grid grows.
pub fn max_log_sn_on_circle<T: Scalar>(
    roots: &RootSet<T>,
    k: usize,
    circle: &GeneralizedCircle<T>,
    m_grid: usize,
) -> Result<CircleMax<T>> {
    let n = roots.len();
    if k == 0 || k > n {
        return Err(Error::InvalidOrder { k, n });
    }
    let eval = |z: Complex<T>| sn_value(roots.roots(), z, k).log_abs;
    // point(j, m): j-th grid point of the m-interval grid
    let point: Box<dyn Fn(usize, usize) -> Complex<T>> = match *circle {
        GeneralizedCircle::Circle { .. } => Box::new(move |j, m| {
            circle.point_at(T::TAU() * T::from_usize(j).unwrap() / T::from_usize(m).unwrap())
        }),
        GeneralizedCircle::Line { unit_normal, offset } => {
            let half = T::lit(10.0) * (T::one() + roots.diameter());
            let tangent = unit_normal * Complex::new(T::zero(), T::one());
            let c = roots.centroid();
            let along = (c * tangent.conj()).re;
            let base = unit_normal * offset + tangent * along;
            Box::new(move |j, m| {
                let t = -half + T::lit(2.0) * half * T::from_usize(j).unwrap() / T::from_usize(m).unwrap();
                base + tangent * t
            })
        }
    };
    let endpoints = matches!(circle, GeneralizedCircle::Line { .. }) as usize;

    let mut m = m_grid.max(8);
    let mut best = (0..m + endpoints).map(|j| eval(point(j, m))).fold(T::neg_infinity(), T::max);
    loop {
        if best == T::infinity() {
            return Ok(CircleMax { max_log: best, grid_size: m, stabilized: true });
        }
        if 2 * m > MAX_GRID {
            return Ok(CircleMax { max_log: best, grid_size: m, stabilized: false });
        }
        let finer = 2 * m;
        let fresh = (0..m).map(|j| eval(point(2 * j + 1, finer))).fold(T::neg_infinity(), T::max);
        let next = best.max(fresh);
        let moved = next - best;
        best = next;
        m = finer;
        if moved < T::lit(GRID_TOL) {
            return Ok(CircleMax { max_log: best, grid_size: m, stabilized: true });
        }
    }
}

/// Both sides of the Jensen inequality for one `(P_n, k, ψ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JensenAudit<T> {
    /// `Σ_ρ log₋|ψ(ρ)| − Σ_ζ log₋|ψ(ζ)|`.
    pub lhs: T,
    /// Grid maximum of `log|S_n|` on `ψ⁻¹(C(0,1))`.
    pub rhs_max_term: T,
    /// `log|S_n(ψ⁻¹(0))|`.
    pub rhs_center_term: T,
    pub grid_size: usize,
    pub stabilized: bool,
    /// `rhs_max_term − rhs_center_term − lhs`.
    pub slack: T,
}

/// Why an instance was left out of the audit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AuditRejection {
    NotConverged,
    /// `ψ⁻¹(0)` or `ψ⁻¹(∞)` within `1e-9` of a root of `P_n` or `P_n^(k)`.
    Coincidence,
    /// `ψ⁻¹(0) = ∞`.
    CenterAtInfinity,
    NonFinite,
}

const COINCIDENCE_TOL: f64 = 1e-9;

pub fn jensen_audit<T: Scalar>(
    roots: &RootSet<T>,
    k: usize,
    psi: &MobiusTransform<T>,
    zeros: &RootFindResult<T>,
    m_grid: usize,
) -> std::result::Result<JensenAudit<T>, AuditRejection> {
    if !zeros.converged {
        return Err(AuditRejection::NotConverged);
    }
    let center = psi.zero_preimage().finite().ok_or(AuditRejection::CenterAtInfinity)?;
    let pole = psi.pole_preimage().finite();
    let tol = T::lit(COINCIDENCE_TOL);
    for x in roots.iter().chain(zeros.zeros.iter()) {
        if (center - x).norm() < tol || pole.is_some_and(|p| (p - x).norm() < tol) {
            return Err(AuditRejection::Coincidence);
        }
    }

    let zero_side: T = zeros.zeros.iter().map(|z| log_minus_ext(psi.apply_finite(*z))).sum();
    let root_side: T = roots.iter().map(|z| log_minus_ext(psi.apply_finite(*z))).sum();
    let lhs = zero_side - root_side;
    let circle_max = max_log_sn_on_circle(roots, k, &psi.preimage_unit_circle(), m_grid)
        .map_err(|_| AuditRejection::NonFinite)?;
    let center_term = sn_value(roots.roots(), center, k).log_abs;
    if !(lhs.is_finite() && center_term.is_finite() && circle_max.max_log.is_finite()) {
        return Err(AuditRejection::NonFinite);
    }
    Ok(JensenAudit {
        lhs,
        rhs_max_term: circle_max.max_log,
        rhs_center_term: center_term,
        grid_size: circle_max.grid_size,
        stabilized: circle_max.stabilized,
        slack: circle_max.max_log - center_term - lhs,
    })
}
