use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::roots::find_zeros;
use super::{parse, Expr};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Number of random points used by [`SpectralSymbol::check_derivative`].
pub const DEFAULT_FD_SAMPLES: usize = 1000;

const FD_SEED: u64 = 0x5eed_0f_9e1;
const FD_REL_TOL: f64 = 1e-6;
const FD_EXCLUSION: f64 = 1e-3;
const DENSE_ZERO_FRACTION: f64 = 0.1;

/// A real symbol `g` together with its derivative and non-smooth set.
///
/// The non-smooth set `K` is located structurally: every argument of
/// `abs`/`log`/`sqrt`, every denominator, and every base of a non-integer
/// or negative power contributes its zeros. This over-approximates the true
/// set of points where `g` fails to be twice differentiable, which is safe
/// since those points are only ever excluded.
#[derive(Clone, Debug)]
pub struct SpectralSymbol {
    text: String,
    g: Expr,
    gprime: Expr,
    window: (f64, f64),
    resolution: f64,
    nonsmooth: Vec<f64>,
    nonsmooth_outside: Vec<f64>,
    validated: bool,
}

impl SpectralSymbol {
    /// Parses and analyses `text` on the spectral window `[lo, hi]`.
    /// The result is not yet validated.
    pub fn parse(text: &str, params: &BTreeMap<String, f64>, window: (f64, f64), resolution: f64) -> Result<Self> {
        let g = parse(text, params)?;
        let mut sym = Self::from_expr(g, window, resolution)?;
        sym.text = text.to_string();
        Ok(sym)
    }

    pub fn from_expr(g: Expr, window: (f64, f64), resolution: f64) -> Result<Self> {
        let (lo, hi) = window;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidWindow(lo, hi));
        }
        if !(resolution > 0.0) {
            return Err(Error::InvalidArgument(format!("scan resolution must be positive, got {resolution}")));
        }
        let pad = 0.1 * (hi - lo);
        let mut nonsmooth = Vec::new();
        let mut outside = Vec::new();
        for arg in g.singular_arguments() {
            let scan = find_zeros(|x| arg.eval(x), lo - pad, hi + pad, resolution, &[]);
            for z in scan.zeros {
                if (lo..=hi).contains(&z) {
                    nonsmooth.push(z);
                } else {
                    outside.push(z);
                }
            }
        }
        for set in [&mut nonsmooth, &mut outside] {
            set.sort_by(f64::total_cmp);
            set.dedup_by(|a, b| (*a - *b).abs() <= 1e-9);
        }
        Ok(SpectralSymbol {
            text: g.to_string(),
            gprime: g.differentiate(),
            g,
            window,
            resolution,
            nonsmooth,
            nonsmooth_outside: outside,
            validated: false,
        })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn g(&self) -> &Expr {
        &self.g
    }

    pub fn gprime(&self) -> &Expr {
        &self.gprime
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Points of the window where `g` may fail to be C².
    pub fn nonsmooth_points(&self) -> &[f64] {
        &self.nonsmooth
    }

    /// Candidate non-smooth points detected just outside the window.
    pub fn nonsmooth_outside(&self) -> &[f64] {
        &self.nonsmooth_outside
    }

    pub fn is_validated(&self) -> bool {
        self.validated
    }

    #[inline]
    pub fn eval<T: Real>(&self, x: T) -> T {
        self.g.eval(x)
    }

    #[inline]
    pub fn eval_prime<T: Real>(&self, x: T) -> T {
        self.gprime.eval(x)
    }

    /// Checks the admissibility conditions on the window: `g` real-valued
    /// away from `K`, the zero set of `g'` Lebesgue-null, and the symbolic
    /// derivative consistent with central differences.
    pub fn validate(&mut self) -> Result<()> {
        let (lo, hi) = self.window;
        let cells = ((hi - lo) / self.resolution).ceil() as usize;
        let step = (hi - lo) / cells as f64;
        for i in 0..=cells {
            let x = lo + step * i as f64;
            if self.distance_to_nonsmooth(x) <= step {
                continue;
            }
            let v = self.g.eval(x);
            if !v.is_finite() {
                return Err(Error::NotRealValued { at: x, value: v });
            }
        }
        self.singular_points()?;
        self.check_derivative(DEFAULT_FD_SAMPLES)?;
        self.validated = true;
        Ok(())
    }

    pub fn into_validated(mut self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// The singular set on this symbol's window: see [`singular_points`].
    pub fn singular_points(&self) -> Result<Vec<f64>> {
        singular_points(self, self.window, self.resolution)
    }

    fn distance_to_nonsmooth(&self, x: f64) -> f64 {
        self.nonsmooth
            .iter()
            .chain(&self.nonsmooth_outside)
            .map(|z| (x - z).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Compares `g'` with a central difference of `g` at `samples` uniformly
    /// random points of the window, staying `1e-3` away from `K`. The step is
    /// `1e-5` times the distance to `K`, capped at `1e-5`.
    pub fn check_derivative(&self, samples: usize) -> Result<()> {
        let (lo, hi) = self.window;
        let mut rng = ChaCha8Rng::seed_from_u64(FD_SEED);
        let mut done = 0;
        let mut attempts = 0;
        while done < samples {
            attempts += 1;
            if attempts > 100 * samples.max(1) {
                return Err(Error::InvalidArgument(
                    "window has no room away from the non-smooth set for derivative checks".into(),
                ));
            }
            let x: f64 = rng.gen_range(lo..=hi);
            let dist = self.distance_to_nonsmooth(x);
            if dist < FD_EXCLUSION {
                continue;
            }
            let h = 1e-5 * dist.min(1.0);
            let symbolic = self.gprime.eval(x);
            let numeric = (self.g.eval(x + h) - self.g.eval(x - h)) / (2.0 * h);
            if !(symbolic.is_finite() && numeric.is_finite()) {
                return Err(Error::NotRealValued { at: x, value: symbolic });
            }
            if (symbolic - numeric).abs() > FD_REL_TOL * (1.0 + symbolic.abs()) {
                return Err(Error::DerivativeMismatch { at: x, symbolic, numeric });
            }
            done += 1;
        }
        Ok(())
    }
}

/// The set where `g'(λ)^{-1}` is singular: the non-smooth points of `g` in
/// the window together with the zeros of `g'` elsewhere in the window.
///
/// Zeros are found by a sign-change scan at step `resolution`, refined by
/// bisection to `1e-12`; touching zeros are found from local minima of `|g'|`.
/// Fails with [`Error::DenseZeroSet`] when more than 10% of the scan points
/// have `|g'| < 1e-14`.
pub fn singular_points(sym: &SpectralSymbol, window: (f64, f64), resolution: f64) -> Result<Vec<f64>> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::InvalidWindow(lo, hi));
    }
    if !(resolution > 0.0) {
        return Err(Error::InvalidArgument(format!("scan resolution must be positive, got {resolution}")));
    }
    let scan = find_zeros(|x| sym.gprime.eval(x), lo, hi, resolution, &sym.nonsmooth);
    if scan.vanishing_fraction() > DENSE_ZERO_FRACTION {
        return Err(Error::DenseZeroSet {
            fraction: 100.0 * scan.vanishing_fraction(),
        });
    }
    let mut points: Vec<f64> = sym
        .nonsmooth
        .iter()
        .copied()
        .filter(|z| (lo..=hi).contains(z))
        .chain(scan.zeros)
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup_by(|a, b| (*a - *b).abs() <= 1e-9);
    Ok(points)
}
