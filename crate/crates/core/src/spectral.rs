//! Functional calculus of the momentum operator.
//!
//! `f(P)` acts as multiplication by `f(k_n)` on the Fourier representation.
//! The regularized derivative `g'(P)` is set to zero on a neighbourhood of
//! the singular set `Z`, and `g'(P)^{-1}` is defined as `1/g'(k)` off that
//! neighbourhood and zero on it.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::expr::SpectralSymbol;
use crate::grid::{Grid, Spectrum, StateVector};
use crate::scalar::Real;

/// `|g'|` below this on an unmasked bin is a hard error.
pub const MIN_UNMASKED_DERIVATIVE: f64 = 1e-13;
/// Largest fraction of `‖ψ‖²` an evolution may see on bins where `g` is undefined.
pub const UNDEFINED_MASS_LIMIT: f64 = 1e-14;

/// Finite set of excluded frequencies with a common exclusion half-width.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularSet {
    points: Vec<f64>,
    margin: f64,
}

impl SingularSet {
    pub fn new(points: Vec<f64>, margin: f64) -> Result<Self> {
        if !(margin > 0.0) || !margin.is_finite() {
            return Err(Error::InvalidSingularSet(format!("margin must be positive, got {margin}")));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidSingularSet("points must be finite".into()));
        }
        if points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidSingularSet("points must be sorted and distinct".into()));
        }
        Ok(SingularSet { points, margin })
    }

    pub fn empty(margin: f64) -> Result<Self> {
        Self::new(Vec::new(), margin)
    }

    /// `max(0.5, 4·dk)`.
    pub fn default_margin<T: Real>(grid: &Grid<T>) -> f64 {
        (4.0 * grid.dk().as_f64()).max(0.5)
    }

    /// Singular set with the default margin for `grid`.
    pub fn for_grid<T: Real>(points: Vec<f64>, grid: &Grid<T>) -> Result<Self> {
        Self::new(points, Self::default_margin(grid))
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// True when `k` lies in some `[z - δ, z + δ]`.
    pub fn excludes(&self, k: f64) -> bool {
        self.points.iter().any(|z| (k - z).abs() <= self.margin)
    }

    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().map(|z| (z - self.margin, z + self.margin))
    }

    /// Excluded-bin flags for `grid`, in FFT order.
    pub fn mask<T: Real>(&self, grid: &Grid<T>) -> Vec<bool> {
        grid.frequencies().iter().map(|k| self.excludes(k.as_f64())).collect()
    }

    fn check_margin<T: Real>(&self, grid: &Grid<T>) -> Result<()> {
        let min = 2.0 * grid.dk().as_f64();
        if self.margin > min {
            Ok(())
        } else {
            Err(Error::MarginTooSmall { margin: self.margin, min })
        }
    }
}

/// A Fourier multiplier on a fixed grid.
#[derive(Clone, Debug)]
pub struct MultiplierOp<T: Real> {
    grid: Grid<T>,
    values: Vec<Complex<T>>,
    mask: Vec<bool>,
    undefined: Vec<bool>,
}

fn ensure_finite<T: Real>(k: T, v: Complex<T>) -> Result<Complex<T>> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteSymbol { k: k.as_f64() })
    }
}

impl<T: Real> MultiplierOp<T> {
    /// Samples `f` on every frequency bin.
    pub fn from_fn(grid: &Grid<T>, f: impl Fn(T) -> Complex<T>) -> Result<Self> {
        let values = grid
            .frequencies()
            .iter()
            .map(|&k| ensure_finite(k, f(k)))
            .collect::<Result<_>>()?;
        Ok(MultiplierOp {
            grid: grid.clone(),
            values,
            mask: vec![false; grid.n()],
            undefined: vec![false; grid.n()],
        })
    }

    /// Samples `f` off the exclusion region of `z`; excluded bins carry 0
    /// and `f` is not evaluated there.
    pub fn from_fn_masked(grid: &Grid<T>, z: &SingularSet, f: impl Fn(T) -> Complex<T>) -> Result<Self> {
        let mask = z.mask(grid);
        let zero = Complex::new(T::zero(), T::zero());
        let values = grid
            .frequencies()
            .iter()
            .zip(&mask)
            .map(|(&k, &m)| if m { Ok(zero) } else { ensure_finite(k, f(k)) })
            .collect::<Result<_>>()?;
        Ok(MultiplierOp {
            grid: grid.clone(),
            values,
            mask,
            undefined: vec![false; grid.n()],
        })
    }

    /// `e^{-itg(k)}`. Bins where `g` is not finite get the value 1 and are
    /// flagged; applying the operator to a state with mass there fails.
    pub fn evolution(grid: &Grid<T>, g: &SpectralSymbol, t: T) -> Self {
        let mut undefined = vec![false; grid.n()];
        let values = grid
            .frequencies()
            .iter()
            .zip(undefined.iter_mut())
            .map(|(&k, flag)| {
                let gk = g.eval(k);
                if t == T::zero() {
                    Complex::new(T::one(), T::zero())
                } else if gk.is_finite() {
                    Complex::from_polar(T::one(), -t * gk)
                } else {
                    *flag = true;
                    Complex::new(T::one(), T::zero())
                }
            })
            .collect();
        MultiplierOp {
            grid: grid.clone(),
            values,
            mask: vec![false; grid.n()],
            undefined,
        }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    /// Multiplier values in FFT order.
    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    /// Bins excluded by the singular set.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Bins where the symbol itself is undefined.
    pub fn undefined(&self) -> &[bool] {
        &self.undefined
    }

    /// Pointwise product `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let zip = |a: &[bool], b: &[bool]| a.iter().zip(b).map(|(x, y)| *x || *y).collect();
        Ok(MultiplierOp {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
            mask: zip(&self.mask, &other.mask),
            undefined: zip(&self.undefined, &other.undefined),
        })
    }

    pub fn apply_spectrum(&self, s: &Spectrum<T>) -> Result<Spectrum<T>> {
        if *s.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        if self.undefined.iter().any(|&u| u) {
            let total = s.norm_sqr();
            for ((a, &u), &k) in s.amplitudes().iter().zip(&self.undefined).zip(self.grid.frequencies()) {
                if u {
                    let mass = (a.norm_sqr() * self.grid.dx() / total).as_f64();
                    if mass > UNDEFINED_MASS_LIMIT {
                        return Err(Error::UndefinedOnSupport { k: k.as_f64(), mass });
                    }
                }
            }
        }
        Ok(s.map_indexed(|i, a| a * self.values[i]))
    }

    /// True when every value is exactly 1 and the symbol is defined everywhere.
    pub fn is_identity(&self) -> bool {
        let one = Complex::new(T::one(), T::zero());
        !self.undefined.iter().any(|&u| u) && self.values.iter().all(|v| *v == one)
    }

    /// Applies the multiplier; an identity multiplier returns `psi` unchanged
    /// without a transform round trip.
    pub fn apply(&self, psi: &StateVector<T>) -> Result<StateVector<T>> {
        if *psi.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        if self.is_identity() {
            return Ok(psi.clone());
        }
        Ok(self.apply_spectrum(&psi.to_fourier())?.from_fourier())
    }
}

/// `f(P)ψ` for a raw frequency function.
pub fn apply_multiplier<T: Real>(f: impl Fn(T) -> Complex<T>, psi: &StateVector<T>) -> Result<StateVector<T>> {
    MultiplierOp::from_fn(psi.grid(), f)?.apply(psi)
}

/// `f(P)ψ` for a real symbol.
pub fn apply_symbol<T: Real>(f: &SpectralSymbol, psi: &StateVector<T>) -> Result<StateVector<T>> {
    apply_multiplier(|k| Complex::new(f.eval(k), T::zero()), psi)
}

/// `e^{-itg(P)}ψ`, computed with the exact multiplier.
pub fn evolve<T: Real>(g: &SpectralSymbol, t: T, psi: &StateVector<T>) -> Result<StateVector<T>> {
    MultiplierOp::evolution(psi.grid(), g, t).apply(psi)
}

/// The regularized multiplier `g'(P)`: `g'(k)` off the exclusion region of
/// `z`, exactly zero on it.
pub fn gprime_op<T: Real>(sym: &SpectralSymbol, z: &SingularSet, grid: &Grid<T>) -> Result<MultiplierOp<T>> {
    z.check_margin(grid)?;
    MultiplierOp::from_fn_masked(grid, z, |k| Complex::new(sym.eval_prime(k), T::zero()))
}

/// `g'(P)^{-1}` on the complement of the exclusion region, zero on it.
/// An unmasked bin with `|g'| < 1e-13` is an error, never clamped.
pub fn gprime_inv_op<T: Real>(sym: &SpectralSymbol, z: &SingularSet, grid: &Grid<T>) -> Result<MultiplierOp<T>> {
    let mut op = gprime_op(sym, z, grid)?;
    for ((v, &masked), &k) in op.values.iter_mut().zip(&op.mask).zip(grid.frequencies()) {
        if masked {
            continue;
        }
        if v.re.abs() < T::lit(MIN_UNMASKED_DERIVATIVE) {
            return Err(Error::NearZeroDerivative {
                k: k.as_f64(),
                value: v.re.as_f64(),
            });
        }
        *v = Complex::new(T::one() / v.re, T::zero());
    }
    Ok(op)
}

/// Fraction of `‖ψ‖²` carried by Fourier bins excluded by `z`.
pub fn masked_mass<T: Real>(psi: &StateVector<T>, z: &SingularSet) -> T {
    let s = psi.to_fourier();
    let total = s.amplitudes().iter().fold(T::zero(), |acc, a| acc + a.norm_sqr());
    if total == T::zero() {
        return T::zero();
    }
    let masked = s
        .amplitudes()
        .iter()
        .zip(psi.grid().frequencies())
        .filter(|(_, k)| z.excludes(k.as_f64()))
        .fold(T::zero(), |acc, (a, _)| acc + a.norm_sqr());
    masked / total
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::grid::make_grid;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    fn symbol(text: &str, params: &[(&str, f64)], grid: &Grid<f64>) -> SpectralSymbol {
        let params: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        SpectralSymbol::parse(text, &params, grid.frequency_window(), grid.dk() / 4.0)
            .unwrap()
            .into_validated()
            .unwrap()
    }

    fn wavy(grid: &Grid<f64>) -> StateVector<f64> {
        StateVector::from_fn(grid, |x| Complex::new((-x * x / 8.0).exp(), (x / 3.0).sin() * (-x * x / 20.0).exp()))
    }

    #[test]
    fn identity_multiplier() {
        let g = make_grid(128, 20.0_f64).unwrap();
        let psi = wavy(&g);
        let out = apply_multiplier(|_| c(1.0), &psi).unwrap();
        assert!(out.sub(&psi).unwrap().norm() < 1e-14);
    }

    #[test]
    fn frequency_multiplier_on_plane_wave() {
        let g = make_grid(128, 20.0_f64).unwrap();
        let k5 = g.frequencies()[5];
        let psi = StateVector::from_fn(&g, |x| Complex::from_polar(1.0, k5 * x));
        let out = apply_multiplier(|k| c(k), &psi).unwrap();
        assert!(out.sub(&psi.scaled_real(k5)).unwrap().norm() < 1e-12);
    }

    #[test]
    fn half_square_derivative_is_momentum() {
        let g = make_grid(256, 30.0_f64).unwrap();
        let sym = symbol("x^2/2", &[], &g);
        let z = SingularSet::for_grid(sym.singular_points().unwrap(), &g).unwrap();
        let psi = wavy(&g);
        let lhs = gprime_op(&sym, &z, &g).unwrap().apply(&psi).unwrap();
        let rhs = MultiplierOp::from_fn_masked(&g, &z, |k| c(k)).unwrap().apply(&psi).unwrap();
        assert!(lhs.sub(&rhs).unwrap().norm() < 1e-14);
    }

    #[test]
    fn identity_symbol_has_trivial_inverse() {
        let g = make_grid(128, 20.0_f64).unwrap();
        let sym = symbol("x", &[], &g);
        let z = SingularSet::for_grid(sym.singular_points().unwrap(), &g).unwrap();
        assert!(z.is_empty());
        let inv = gprime_inv_op(&sym, &z, &g).unwrap();
        assert!(inv.values().iter().all(|v| *v == c(1.0)));
        assert!(inv.mask().iter().all(|m| !m));
    }

    #[test]
    fn log_abs_inverse_is_momentum() {
        let g = make_grid(256, 30.0_f64).unwrap();
        let sym = symbol("log(abs(x))", &[], &g);
        let z = SingularSet::for_grid(sym.singular_points().unwrap(), &g).unwrap();
        assert_eq!(z.points(), &[0.0]);
        let inv = gprime_inv_op(&sym, &z, &g).unwrap();
        for ((v, &m), &k) in inv.values().iter().zip(inv.mask()).zip(g.frequencies()) {
            if m {
                assert!(k.abs() <= z.margin());
                assert_eq!(*v, c(0.0));
            } else {
                assert!((v.re - k).abs() <= 1e-12 * k.abs());
            }
        }
    }

    #[test]
    fn fractional_inverse_matches_closed_form() {
        let g = make_grid(512, 40.0_f64).unwrap();
        let (alpha, m) = (0.6, 1.0);
        let sym = symbol("(x^2 + m^2)^(alpha/2)", &[("alpha", alpha), ("m", m)], &g);
        let z = SingularSet::for_grid(sym.singular_points().unwrap(), &g).unwrap();
        let inv = gprime_inv_op(&sym, &z, &g).unwrap();
        for ((v, &masked), &k) in inv.values().iter().zip(inv.mask()).zip(g.frequencies()) {
            if masked {
                continue;
            }
            let s = k * k + m * m;
            let closed = s / k * s.powf(-alpha / 2.0) / alpha;
            assert!((v.re - closed).abs() <= 1e-12 * closed.abs(), "{k}: {} vs {closed}", v.re);
        }
    }

    #[test]
    fn masked_bins_are_exactly_zero() {
        let g = make_grid(256, 30.0_f64).unwrap();
        let sym = symbol("x^3/3", &[], &g);
        let z = SingularSet::for_grid(sym.singular_points().unwrap(), &g).unwrap();
        let op = gprime_op(&sym, &z, &g).unwrap();
        let n_masked = op.mask().iter().filter(|m| **m).count();
        assert!(n_masked >= 5);
        for (v, &m) in op.values().iter().zip(op.mask()) {
            if m {
                assert_eq!(*v, c(0.0));
            }
        }
    }

    #[test]
    fn inverse_undoes_derivative_off_the_mask() {
        let g = make_grid(256, 30.0_f64).unwrap();
        let sym = symbol("sqrt(x^2 + m^2)", &[("m", 1.0)], &g);
        let z = SingularSet::for_grid(sym.singular_points().unwrap(), &g).unwrap();
        let psi = StateVector::from_fn(&g, |x| Complex::from_polar((-x * x / 10.0).exp(), 2.5 * x));
        // remove whatever sits in the exclusion region
        let clean = MultiplierOp::from_fn_masked(&g, &z, |_| c(1.0)).unwrap().apply(&psi).unwrap();
        let d = gprime_op(&sym, &z, &g).unwrap();
        let dinv = gprime_inv_op(&sym, &z, &g).unwrap();
        let round = d.apply(&dinv.apply(&clean).unwrap()).unwrap();
        assert!(round.sub(&clean).unwrap().norm() <= 1e-12 * clean.norm());
    }

    #[test]
    fn narrow_margin_and_missed_zero_are_errors() {
        let g = make_grid(256, 30.0_f64).unwrap();
        let sym = symbol("x^2/2", &[], &g);
        let tight = SingularSet::new(vec![0.0], 1.5 * g.dk()).unwrap();
        assert!(matches!(gprime_op(&sym, &tight, &g), Err(Error::MarginTooSmall { .. })));
        let none = SingularSet::empty(1.0).unwrap();
        assert!(matches!(gprime_inv_op(&sym, &none, &g), Err(Error::NearZeroDerivative { .. })));
    }

    #[test]
    fn masked_mass_of_plane_waves() {
        let g = make_grid(128, 20.0_f64).unwrap();
        let z = SingularSet::new(vec![0.0], 0.5).unwrap();
        let k = g.frequencies()[10];
        assert!(k > 0.5);
        let far = StateVector::from_fn(&g, |x| Complex::from_polar(1.0, k * x));
        assert!(masked_mass(&far, &z) < 1e-28);
        let near = StateVector::from_fn(&g, |x| Complex::from_polar(1.0, g.frequencies()[1] * x));
        assert!((masked_mass(&near, &z) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn evolution_by_zero_time_is_identity() {
        let g = make_grid(128, 20.0_f64).unwrap();
        let sym = symbol("log(abs(x))", &[], &g);
        let psi = StateVector::from_fn(&g, |x| Complex::from_polar((-x * x / 4.0).exp(), 3.0 * x));
        let out = evolve(&sym, 0.0, &psi).unwrap();
        assert!(out.sub(&psi).unwrap().norm() < 1e-14);
    }

    #[test]
    fn evolution_refuses_mass_where_the_symbol_is_undefined() {
        let g = make_grid(128, 20.0_f64).unwrap();
        let sym = symbol("log(abs(x))", &[], &g);
        let dc = StateVector::from_fn(&g, |_| c(1.0));
        assert!(matches!(evolve(&sym, 1.0, &dc), Err(Error::UndefinedOnSupport { .. })));
    }

    #[test]
    fn singular_set_validation() {
        assert!(SingularSet::new(vec![1.0, 0.0], 0.5).is_err());
        assert!(SingularSet::new(vec![0.0, 0.0], 0.5).is_err());
        assert!(SingularSet::new(vec![0.0], 0.0).is_err());
        let z = SingularSet::new(vec![-1.0, 2.0], 0.25).unwrap();
        assert!(z.excludes(-1.25) && z.excludes(2.1) && !z.excludes(0.0));
        assert_eq!(z.intervals().collect::<Vec<_>>(), vec![(-1.25, -0.75), (1.75, 2.25)]);
    }
}
