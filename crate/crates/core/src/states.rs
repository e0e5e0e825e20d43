//! Admissible test vectors `Φ = ρ(P)φ`.
//!
//! `ρ` is a C∞ bump with compact support away from the exclusion region of
//! the singular set, `φ` a Gaussian packet (or a finite sum of such vectors).
//! A [`TestVector`] can only be obtained through certification, so every
//! instance carries negligible mass on masked frequencies and near the
//! periodic boundary.

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, StateVector};
use crate::scalar::Real;
use crate::spectral::{masked_mass, MultiplierOp, SingularSet};

pub const MASKED_MASS_LIMIT: f64 = 1e-12;
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-10;
pub const DEFAULT_BOUNDARY_FRACTION: f64 = 0.05;

/// The mollifier `ρ(k) = exp(1 - 1/(1 - u²))`, `u = (2k - a - b)/(b - a)`,
/// supported on `[a, b]` with peak value 1 at the midpoint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpProfile {
    pub a: f64,
    pub b: f64,
}

impl BumpProfile {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidBump(a, b));
        }
        Ok(BumpProfile { a, b })
    }

    pub fn eval<T: Real>(&self, k: T) -> T {
        let (a, b) = (T::lit(self.a), T::lit(self.b));
        let u = (T::lit(2.0) * k - a - b) / (b - a);
        let one = T::one();
        if u.abs() >= one {
            T::zero()
        } else {
            (one - one / (one - u * u)).exp()
        }
    }

    /// Fails if `[a, b]` meets some `[z - δ, z + δ]`.
    pub fn check_disjoint(&self, z: &SingularSet) -> Result<()> {
        for &p in z.points() {
            if self.b >= p - z.margin() && self.a <= p + z.margin() {
                return Err(Error::BumpOverlapsSingularSet {
                    a: self.a,
                    b: self.b,
                    z: p,
                    margin: z.margin(),
                });
            }
        }
        Ok(())
    }

    pub fn multiplier<T: Real>(&self, grid: &Grid<T>) -> Result<MultiplierOp<T>> {
        MultiplierOp::from_fn(grid, |k| Complex::new(self.eval(k), T::zero()))
    }
}

/// Parameters of a Gaussian packet `exp(-(x-x0)²/(2σ²)) e^{ik0x}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianParams {
    pub x0: f64,
    pub sigma: f64,
    pub k0: f64,
}

/// Unit-norm Gaussian packet. The interval `[x0 - 6σ, x0 + 6σ]` must fit in
/// the domain.
pub fn gaussian<T: Real>(grid: &Grid<T>, x0: f64, sigma: f64, k0: f64) -> Result<StateVector<T>> {
    if !(sigma > 0.0) || !x0.is_finite() || !k0.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "gaussian needs σ > 0 and finite x0, k0 (got x0 = {x0}, σ = {sigma}, k0 = {k0})"
        )));
    }
    let half = grid.length().as_f64() / 2.0;
    let (lo, hi) = (x0 - 6.0 * sigma, x0 + 6.0 * sigma);
    if lo < -half || hi > half {
        return Err(Error::FootprintExceedsDomain { lo, hi, half });
    }
    let (x0, sigma, k0) = (T::lit(x0), T::lit(sigma), T::lit(k0));
    let two = T::lit(2.0);
    StateVector::from_fn(grid, |x| {
        let d = x - x0;
        Complex::from_polar((-(d * d) / (two * sigma * sigma)).exp(), k0 * x)
    })
    .normalized()
}

/// Share of `‖ψ‖²` within the outer `fraction` of the domain at each end.
pub fn boundary_mass<T: Real>(psi: &StateVector<T>, fraction: f64) -> Result<T> {
    if !(fraction > 0.0 && fraction < 0.5) {
        return Err(Error::InvalidArgument(format!("boundary fraction must be in (0, 0.5), got {fraction}")));
    }
    let total = psi.amplitudes().iter().fold(T::zero(), |s, a| s + a.norm_sqr());
    if total == T::zero() {
        return Ok(T::zero());
    }
    let edge = T::lit((0.5 - fraction) * psi.grid().length().as_f64());
    let outer = psi
        .amplitudes()
        .iter()
        .zip(psi.grid().positions())
        .filter(|(_, x)| x.abs() >= edge)
        .fold(T::zero(), |s, (a, _)| s + a.norm_sqr());
    Ok(outer / total)
}

/// Admissibility measurements recorded when a test vector is built.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub masked_mass: f64,
    pub boundary_mass: f64,
}

/// Unit-norm vector of the core, certified against a singular set.
#[derive(Clone, Debug)]
pub struct TestVector<T: Real> {
    state: StateVector<T>,
    bumps: Vec<BumpProfile>,
    base: Vec<GaussianParams>,
    certificate: Certificate,
}

impl<T: Real> TestVector<T> {
    /// Filters `phi` through the bump, renormalizes and certifies the result.
    pub fn new(phi: &StateVector<T>, bump: BumpProfile, z: &SingularSet) -> Result<Self> {
        bump.check_disjoint(z)?;
        let filtered = bump.multiplier(phi.grid())?.apply(phi)?;
        let state = filtered.normalized().map_err(|_| {
            Error::InvalidArgument(format!("bump [{}, {}] annihilates the base state", bump.a, bump.b))
        })?;
        Self::certify(state, vec![bump], Vec::new(), z)
    }

    /// The default construction: a Gaussian base filtered through `bump`.
    pub fn gaussian(grid: &Grid<T>, params: GaussianParams, bump: BumpProfile, z: &SingularSet) -> Result<Self> {
        let phi = gaussian(grid, params.x0, params.sigma, params.k0)?;
        let mut tv = Self::new(&phi, bump, z)?;
        tv.base.push(params);
        Ok(tv)
    }

    /// Normalized linear combination of test vectors, recertified.
    pub fn combine(terms: &[(Complex<T>, &TestVector<T>)], z: &SingularSet) -> Result<Self> {
        let (first, rest) = terms
            .split_first()
            .ok_or_else(|| Error::InvalidArgument("empty linear combination".into()))?;
        let mut state = first.1.state.scaled(first.0);
        let mut bumps = first.1.bumps.clone();
        let mut base = first.1.base.clone();
        for (c, tv) in rest {
            state = state.axpy(*c, &tv.state)?;
            bumps.extend(&tv.bumps);
            base.extend(&tv.base);
        }
        for b in &bumps {
            b.check_disjoint(z)?;
        }
        let state = state.normalized()?;
        Self::certify(state, bumps, base, z)
    }

    fn certify(state: StateVector<T>, bumps: Vec<BumpProfile>, base: Vec<GaussianParams>, z: &SingularSet) -> Result<Self> {
        let masked = masked_mass(&state, z).as_f64();
        if masked > MASKED_MASS_LIMIT {
            return Err(Error::Inadmissible {
                what: "masked mass",
                value: masked,
                limit: MASKED_MASS_LIMIT,
            });
        }
        let boundary = boundary_mass(&state, DEFAULT_BOUNDARY_FRACTION)?.as_f64();
        if boundary > BOUNDARY_MASS_LIMIT {
            return Err(Error::Inadmissible {
                what: "boundary mass",
                value: boundary,
                limit: BOUNDARY_MASS_LIMIT,
            });
        }
        Ok(TestVector {
            state,
            bumps,
            base,
            certificate: Certificate {
                masked_mass: masked,
                boundary_mass: boundary,
            },
        })
    }

    pub fn state(&self) -> &StateVector<T> {
        &self.state
    }

    pub fn bumps(&self) -> &[BumpProfile] {
        &self.bumps
    }

    pub fn base(&self) -> &[GaussianParams] {
        &self.base
    }

    pub fn certificate(&self) -> Certificate {
        self.certificate
    }
}

impl<T: Real> AsRef<StateVector<T>> for TestVector<T> {
    fn as_ref(&self) -> &StateVector<T> {
        &self.state
    }
}

/// Frequencies a random bump may occupy: `|k| ≤ min(k_max / 2, 8)`.
const RANDOM_BUMP_RANGE: f64 = 8.0;
const RANDOM_ATTEMPTS: usize = 200;
/// Lower bound on `w·σ` (bump width times Gaussian width). The bump is
/// smooth but not analytic, so its position-space tails decay slowly; they
/// stay negligible only if the Gaussian is ~e^{-32} at the bump edges.
const MIN_WIDTH_PRODUCT: f64 = 16.0;

/// A random element of the core: a combination of two Gaussians with random
/// centres and widths, each filtered through a random bump disjoint from the
/// exclusion region of `z`, with random complex coefficients.
///
/// Widths lie in `[0.04 L, 0.08 L]` and centres within `0.45 L − 5.5σ` of
/// the origin, so each base Gaussian has negligible boundary mass.
pub fn random_admissible<T: Real, R: Rng + ?Sized>(grid: &Grid<T>, z: &SingularSet, rng: &mut R) -> Result<TestVector<T>> {
    let length = grid.length().as_f64();
    let range = (0.5 * grid.spec().k_max().as_f64()).min(RANDOM_BUMP_RANGE);
    let term = |rng: &mut R| -> Result<TestVector<T>> {
        for _ in 0..RANDOM_ATTEMPTS {
            let sigma = rng.gen_range(0.04 * length..=0.08 * length);
            let min_width = MIN_WIDTH_PRODUCT / sigma;
            let width = rng.gen_range(min_width..=min_width + 2.0);
            if width >= 2.0 * range {
                continue;
            }
            let centre = rng.gen_range(-range + 0.5 * width..=range - 0.5 * width);
            let bump = BumpProfile::new(centre - 0.5 * width, centre + 0.5 * width)?;
            if bump.check_disjoint(z).is_err() {
                continue;
            }
            let reach = 0.45 * length - 5.5 * sigma;
            let params = GaussianParams {
                x0: rng.gen_range(-reach..=reach),
                sigma,
                k0: centre,
            };
            return TestVector::gaussian(grid, params, bump, z);
        }
        Err(Error::InvalidArgument(
            "no random bump avoids the singular set within the frequency range".into(),
        ))
    };
    let a = term(rng)?;
    let b = term(rng)?;
    let coeff = |rng: &mut R| Complex::from_polar(T::lit(rng.gen_range(0.5..1.5)), T::lit(rng.gen_range(0.0..std::f64::consts::TAU)));
    let (ca, cb) = (coeff(rng), coeff(rng));
    TestVector::combine(&[(ca, &a), (cb, &b)], z)
}
