//! Seeded, prefix-consistent sampling of i.i.d. root sequences.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream keyed by
//! `(seed, domain, index)`: the seed picks the experiment path, the domain tag
//! separates unrelated uses of the same seed (roots, Monte Carlo trials,
//! projection directions, ...), and the index selects an independent stream
//! inside that domain. Trial `i` of a Monte Carlo run therefore sees the same
//! randomness no matter which thread evaluates it.

use std::fmt;

use num_complex::{Complex, Complex64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::polynomial::RootSet;
use crate::scalar::{cast_complex, Scalar};

const WEIGHT_TOL: f64 = 1e-12;

/// Domain tags for [`keyed_rng`].
pub mod domain {
    pub const ROOTS: u64 = 0x526f_6f74;
    pub const TRIALS: u64 = 0x5472_6961;
    pub const REFERENCE: u64 = 0x5265_6672;
    pub const DIRECTIONS: u64 = 0x4469_7273;
    pub const MOBIUS: u64 = 0x4d6f_6269;
    pub const JITTER: u64 = 0x4a69_7474;
    pub const INSTANCES: u64 = 0x496e_7374;
}

/// SplitMix64 finalizer.
#[inline]
pub const fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based generator for stream `index` of `domain` under `seed`.
pub fn keyed_rng(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let key = mix64(seed.wrapping_add(0x9e37_79b9_7f4a_7c15) ^ mix64(domain));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}

/// The law μ of the roots.
#[derive(Clone, Debug, PartialEq)]
pub enum RootDistribution {
    /// Uniform on the closed disk `|z| ≤ radius`.
    UniformDisk { radius: f64 },
    /// Uniform on the circle `|z| = radius`.
    UniformCircle { radius: f64 },
    /// `scale · (N₁ + iN₂)/√2`, so that `E|Z|² = scale²`.
    ComplexGaussian { scale: f64 },
    /// Finitely many atoms with the given probabilities.
    Discrete { atoms: Vec<Complex64>, weights: Vec<f64> },
    /// Draw a component with the given probabilities, then sample from it.
    Mixture { components: Vec<RootDistribution>, weights: Vec<f64> },
}

impl RootDistribution {
    pub fn uniform_disk(radius: f64) -> Result<Self> {
        let d = Self::UniformDisk { radius };
        d.validate()?;
        Ok(d)
    }

    pub fn uniform_circle(radius: f64) -> Result<Self> {
        let d = Self::UniformCircle { radius };
        d.validate()?;
        Ok(d)
    }

    pub fn complex_gaussian(scale: f64) -> Result<Self> {
        let d = Self::ComplexGaussian { scale };
        d.validate()?;
        Ok(d)
    }

    pub fn discrete(atoms: Vec<Complex64>, weights: Vec<f64>) -> Result<Self> {
        let d = Self::Discrete { atoms, weights };
        d.validate()?;
        Ok(d)
    }

    pub fn mixture(components: Vec<RootDistribution>, weights: Vec<f64>) -> Result<Self> {
        let d = Self::Mixture { components, weights };
        d.validate()?;
        Ok(d)
    }

    /// The symmetric two-atom law on `{1, -1}`.
    pub fn two_atom() -> Self {
        Self::Discrete {
            atoms: vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
            weights: vec![0.5, 0.5],
        }
    }

    pub fn point_mass(at: Complex64) -> Self {
        Self::Discrete { atoms: vec![at], weights: vec![1.0] }
    }

    /// Checks every invariant, recursing into mixture components.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDistribution(msg));
        match self {
            Self::UniformDisk { radius } | Self::UniformCircle { radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return bad(format!("radius must be positive, got {radius}"));
                }
            }
            Self::ComplexGaussian { scale } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return bad(format!("scale must be positive, got {scale}"));
                }
            }
            Self::Discrete { atoms, weights } => {
                if atoms.is_empty() {
                    return bad("discrete distribution needs at least one atom".into());
                }
                if atoms.len() != weights.len() {
                    return bad(format!("{} atoms but {} weights", atoms.len(), weights.len()));
                }
                if let Some(i) = atoms.iter().position(|a| !(a.re.is_finite() && a.im.is_finite())) {
                    return bad(format!("atom {i} is not finite"));
                }
                for i in 0..atoms.len() {
                    for j in i + 1..atoms.len() {
                        if atoms[i] == atoms[j] {
                            return bad(format!("atoms {i} and {j} coincide"));
                        }
                    }
                }
                check_weights(weights)?;
            }
            Self::Mixture { components, weights } => {
                if components.is_empty() {
                    return bad("mixture needs at least one component".into());
                }
                if components.len() != weights.len() {
                    return bad(format!(
                        "{} components but {} weights",
                        components.len(),
                        weights.len()
                    ));
                }
                check_weights(weights)?;
                for c in components {
                    c.validate()?;
                }
            }
        }
        Ok(())
    }

    /// True iff μ is supported on finitely many points.
    pub fn has_finite_support(&self) -> bool {
        match self {
            Self::Discrete { .. } => true,
            Self::Mixture { components, .. } => components.iter().all(Self::has_finite_support),
            _ => false,
        }
    }

    /// The support points of a finitely supported law, with their probabilities.
    pub fn atoms(&self) -> Option<Vec<(Complex64, f64)>> {
        match self {
            Self::Discrete { atoms, weights } => {
                Some(atoms.iter().copied().zip(weights.iter().copied()).collect())
            }
            Self::Mixture { components, weights } => {
                let mut out: Vec<(Complex64, f64)> = Vec::new();
                for (c, w) in components.iter().zip(weights) {
                    for (a, p) in c.atoms()? {
                        match out.iter_mut().find(|(b, _)| *b == a) {
                            Some(slot) => slot.1 += w * p,
                            None => out.push((a, w * p)),
                        }
                    }
                }
                Some(out)
            }
            _ => None,
        }
    }

    /// The kind name used in configuration files.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::UniformDisk { .. } => "uniform-disk",
            Self::UniformCircle { .. } => "uniform-circle",
            Self::ComplexGaussian { .. } => "complex-gaussian",
            Self::Discrete { .. } => "discrete",
            Self::Mixture { .. } => "mixture",
        }
    }

    /// One draw from μ.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        match self {
            Self::UniformDisk { radius } => {
                let r = radius * rng.random::<f64>().sqrt();
                Complex64::from_polar(r, std::f64::consts::TAU * rng.random::<f64>())
            }
            Self::UniformCircle { radius } => {
                Complex64::from_polar(*radius, std::f64::consts::TAU * rng.random::<f64>())
            }
            Self::ComplexGaussian { scale } => {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) * (scale * std::f64::consts::FRAC_1_SQRT_2)
            }
            Self::Discrete { atoms, weights } => atoms[pick(weights, rng.random())],
            Self::Mixture { components, weights } => {
                components[pick(weights, rng.random())].sample(rng)
            }
        }
    }

    /// `n` consecutive draws from `rng`.
    pub fn sample_n<T: Scalar, R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<Complex<T>> {
        (0..n).map(|_| cast_complex(self.sample(rng))).collect()
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::InvalidDistribution(format!("weight {w} is negative or not finite")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::InvalidDistribution(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

fn pick(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding gap above the last cumulative weight
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(weights.len() - 1)
}

impl fmt::Display for RootDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UniformDisk { radius } => write!(f, "uniform-disk({radius})"),
            Self::UniformCircle { radius } => write!(f, "uniform-circle({radius})"),
            Self::ComplexGaussian { scale } => write!(f, "complex-gaussian({scale})"),
            Self::Discrete { atoms, weights } => {
                write!(f, "discrete(")?;
                for (i, (a, w)) in atoms.iter().zip(weights).enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}:{w}")?;
                }
                write!(f, ")")
            }
            Self::Mixture { components, weights } => {
                write!(f, "mixture(")?;
                for (i, (c, w)) in components.iter().zip(weights).enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{w}:{c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// The i.i.d. sequence `Z_1, Z_2, ...` determined by a law and a seed.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleStream {
    distribution: RootDistribution,
    seed: u64,
}

impl SampleStream {
    pub fn new(distribution: RootDistribution, seed: u64) -> Result<Self> {
        distribution.validate()?;
        Ok(Self { distribution, seed })
    }

    pub fn distribution(&self) -> &RootDistribution {
        &self.distribution
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `Z_1, ..., Z_n`. The first `m` entries of `sample_prefix(n)` equal
    /// `sample_prefix(m)` for every `m < n`.
    pub fn sample_prefix<T: Scalar>(&self, n: usize) -> RootSet<T> {
        let mut rng = keyed_rng(self.seed, domain::ROOTS, 0);
        RootSet::from_vec_unchecked(self.distribution.sample_n(&mut rng, n.max(1)))
    }

    /// A sample of μ from a stream independent of the path, for use as a
    /// reference measure.
    pub fn reference_sample<T: Scalar>(&self, size: usize) -> Vec<Complex<T>> {
        let mut rng = keyed_rng(self.seed, domain::REFERENCE, 0);
        self.distribution.sample_n(&mut rng, size)
    }

    /// The generator for Monte Carlo trial `index`.
    pub fn trial_rng(&self, index: u64) -> ChaCha8Rng {
        keyed_rng(self.seed, domain::TRIALS, index)
    }
}
