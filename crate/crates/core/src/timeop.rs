//! The position operator `Q` and the generalized time operator
//! `D = ½(g'(P)^{-1}Q + Q g'(P)^{-1})` on the core.
//!
//! `D` is only ever applied to vectors of the core (test vectors and their
//! evolutions); its closure is not represented.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::expr::SpectralSymbol;
use crate::grid::{Grid, StateVector};
use crate::scalar::Real;
use crate::spectral::{gprime_inv_op, masked_mass, MultiplierOp, SingularSet};
use crate::states::{boundary_mass, DEFAULT_BOUNDARY_FRACTION, MASKED_MASS_LIMIT};

/// Boundary mass above which multiplication by the periodic coordinate is flagged.
pub const Q_BOUNDARY_WARNING: f64 = 1e-6;

/// `(Qψ)_j = x_j ψ_j`.
pub fn apply_q<T: Real>(psi: &StateVector<T>) -> StateVector<T> {
    let x = psi.grid().positions();
    psi.map_indexed(|j, a| a * x[j])
}

/// Returns the boundary mass of `psi` if it is large enough that `Q`, being
/// a sawtooth on the periodic grid, no longer approximates the coordinate.
pub fn q_boundary_warning<T: Real>(psi: &StateVector<T>) -> Option<f64> {
    let m = boundary_mass(psi, DEFAULT_BOUNDARY_FRACTION).ok()?.as_f64();
    (m > Q_BOUNDARY_WARNING).then_some(m)
}

/// `⟨D⟩` and the imaginary part of `(Φ, DΦ)/‖Φ‖²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Expectation {
    pub value: f64,
    pub symmetry_defect: f64,
}

/// The time operator associated with `g(P)`.
#[derive(Clone, Debug)]
pub struct TimeOperator<T: Real> {
    symbol: SpectralSymbol,
    singular: SingularSet,
    grid: Grid<T>,
    inverse: MultiplierOp<T>,
}

impl<T: Real> TimeOperator<T> {
    /// Fails unless the symbol is validated, its window covers the grid's
    /// frequencies, and `singular` contains every singular point of the symbol.
    pub fn new(symbol: SpectralSymbol, singular: SingularSet, grid: &Grid<T>) -> Result<Self> {
        if !symbol.is_validated() {
            return Err(Error::NotValidated);
        }
        let (lo, hi) = grid.frequency_window();
        let (wlo, whi) = symbol.window();
        if wlo > lo.as_f64() || whi < hi.as_f64() {
            return Err(Error::InvalidArgument(format!(
                "symbol window [{wlo}, {whi}] does not cover the grid frequencies [{lo}, {hi}]"
            )));
        }
        for z in symbol.singular_points()? {
            if !singular.points().iter().any(|p| (p - z).abs() <= 1e-9) {
                return Err(Error::InvalidSingularSet(format!(
                    "singular point {z} of `{}` is missing",
                    symbol.text()
                )));
            }
        }
        let inverse = gprime_inv_op(&symbol, &singular, grid)?;
        Ok(TimeOperator {
            symbol,
            singular,
            grid: grid.clone(),
            inverse,
        })
    }

    /// Builds the singular set from the symbol with the default margin.
    pub fn from_symbol(symbol: SpectralSymbol, grid: &Grid<T>) -> Result<Self> {
        let singular = SingularSet::for_grid(symbol.singular_points()?, grid)?;
        Self::new(symbol, singular, grid)
    }

    pub fn symbol(&self) -> &SpectralSymbol {
        &self.symbol
    }

    pub fn singular_set(&self) -> &SingularSet {
        &self.singular
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    /// The masked multiplier `g'(P)^{-1}`.
    pub fn inverse_derivative(&self) -> &MultiplierOp<T> {
        &self.inverse
    }

    /// Fails if `psi` carries more than `1e-12` of its mass on excluded bins.
    pub fn check_admissible(&self, psi: &StateVector<T>) -> Result<()> {
        let m = masked_mass(psi, &self.singular).as_f64();
        if m > MASKED_MASS_LIMIT {
            return Err(Error::Inadmissible {
                what: "masked mass",
                value: m,
                limit: MASKED_MASS_LIMIT,
            });
        }
        Ok(())
    }

    /// The two orderings `(g'(P)^{-1}QΦ, Qg'(P)^{-1}Φ)`, computed independently.
    pub fn parts(&self, phi: &StateVector<T>) -> Result<(StateVector<T>, StateVector<T>)> {
        if *phi.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        let left = self.inverse.apply(&apply_q(phi))?;
        let right = apply_q(&self.inverse.apply(phi)?);
        Ok((left, right))
    }

    /// `DΦ = ½(g'(P)^{-1}QΦ + Qg'(P)^{-1}Φ)`.
    pub fn apply(&self, phi: &StateVector<T>) -> Result<StateVector<T>> {
        let (left, right) = self.parts(phi)?;
        Ok(left.add(&right)?.scaled_real(T::lit(0.5)))
    }

    /// `Re (Φ, DΦ)/‖Φ‖²`, with the imaginary part reported as a symmetry defect.
    pub fn expectation(&self, phi: &StateVector<T>) -> Result<Expectation> {
        let dphi = self.apply(phi)?;
        let z = phi.inner(&dphi)? / phi.norm_sqr();
        Ok(Expectation {
            value: z.re.as_f64(),
            symmetry_defect: z.im.abs().as_f64(),
        })
    }
}

/// Hard-coded forms of `D` for the standard symbols, written in the operator
/// ordering in which they are usually displayed. They share nothing with the
/// expression-tree path except the exclusion mask.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ClosedForm {
    /// `g(λ) = λ`: `D = Q`.
    Position,
    /// `g(λ) = λ²/2`: `½(P^{-1}Q + QP^{-1})`.
    AharonovBohm,
    /// `g(λ) = log|λ|`: `½(PQ + QP)`.
    LogAbs,
    /// `g(λ) = √(λ² + m²)`: `½(H(P)P^{-1}Q + QP^{-1}H(P))`.
    SemiRelativistic { m: f64 },
    /// `g(λ) = (λ² + m²)^{α/2}`:
    /// `(1/2α)((P²+m²)P^{-1}H_α(P)^{-1}Q + QH_α(P)^{-1}P^{-1}(P²+m²))`.
    Fractional { alpha: f64, m: f64 },
}

impl ClosedForm {
    pub fn name(&self) -> &'static str {
        match self {
            ClosedForm::Position => "position",
            ClosedForm::AharonovBohm => "aharonov_bohm",
            ClosedForm::LogAbs => "log_abs",
            ClosedForm::SemiRelativistic { .. } => "semirelativistic",
            ClosedForm::Fractional { .. } => "fractional",
        }
    }

    /// The displayed operator as a formula.
    pub fn display(&self) -> &'static str {
        match self {
            ClosedForm::Position => "Q",
            ClosedForm::AharonovBohm => "½(P⁻¹Q + QP⁻¹)",
            ClosedForm::LogAbs => "½(PQ + QP)",
            ClosedForm::SemiRelativistic { .. } => "½(H(P)P⁻¹Q + QP⁻¹H(P)),  H(P) = √(P² + m²)",
            ClosedForm::Fractional { .. } => {
                "(1/2α)((P²+m²)P⁻¹H_α(P)⁻¹Q + QH_α(P)⁻¹P⁻¹(P²+m²)),  H_α(P) = (P² + m²)^(α/2)"
            }
        }
    }

    /// Pointwise value of the multiplier standing next to `Q`, i.e. `1/g'(k)`,
    /// assembled from the displayed factors.
    pub fn inverse_derivative<T: Real>(&self, k: T) -> T {
        let one = T::one();
        match *self {
            ClosedForm::Position => one,
            ClosedForm::AharonovBohm => one / k,
            ClosedForm::LogAbs => k,
            ClosedForm::SemiRelativistic { m } => {
                let h = (k * k + T::lit(m * m)).sqrt();
                h * (one / k)
            }
            ClosedForm::Fractional { alpha, m } => {
                let s = k * k + T::lit(m * m);
                let h_alpha = s.powf(T::lit(alpha / 2.0));
                s * (one / k) * (one / h_alpha) / T::lit(alpha)
            }
        }
    }

    /// The factor multiplier. It carries the same mask on `Z ± δ` as the
    /// generic `g'(P)^{-1}`, so the two operators agree on every vector and
    /// not only on vectors supported away from `Z`; for `log|λ|` the factor
    /// `P` is bounded there, so masking it changes nothing of substance.
    pub fn multiplier<T: Real>(&self, grid: &Grid<T>, z: &SingularSet) -> Result<MultiplierOp<T>> {
        let f = |k: T| Complex::new(self.inverse_derivative(k), T::zero());
        match self {
            ClosedForm::Position => MultiplierOp::from_fn(grid, f),
            _ => MultiplierOp::from_fn_masked(grid, z, f),
        }
    }

    /// Applies the displayed operator to `phi`.
    pub fn apply<T: Real>(&self, grid: &Grid<T>, z: &SingularSet, phi: &StateVector<T>) -> Result<StateVector<T>> {
        if let ClosedForm::Position = self {
            return Ok(apply_q(phi));
        }
        let m = self.multiplier(grid, z)?;
        let left = m.apply(&apply_q(phi))?;
        let right = apply_q(&m.apply(phi)?);
        Ok(left.add(&right)?.scaled_real(T::lit(0.5)))
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::grid::make_grid;
    use crate::states::{BumpProfile, GaussianParams, TestVector};

    fn operator(text: &str, params: &[(&str, f64)], grid: &Grid<f64>) -> TimeOperator<f64> {
        let params: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let sym = SpectralSymbol::parse(text, &params, grid.frequency_window(), grid.dk() / 4.0)
            .unwrap()
            .into_validated()
            .unwrap();
        TimeOperator::from_symbol(sym, grid).unwrap()
    }

    fn vector(op: &TimeOperator<f64>, x0: f64) -> TestVector<f64> {
        TestVector::gaussian(
            op.grid(),
            GaussianParams { x0, sigma: 5.0, k0: 3.0 },
            BumpProfile::new(1.0, 5.0).unwrap(),
            op.singular_set(),
        )
        .unwrap()
    }

    #[test]
    fn q_scales_pointwise() {
        let g = make_grid(16, 16.0_f64).unwrap();
        let mut amps = vec![Complex::new(0.0, 0.0); 16];
        amps[11] = Complex::new(1.0, 2.0);
        let delta = StateVector::new(&g, amps).unwrap();
        let out = apply_q(&delta);
        assert_eq!(out.amplitudes()[11], Complex::new(3.0, 6.0));
        assert!(out.amplitudes().iter().enumerate().all(|(i, a)| i == 11 || *a == Complex::new(0.0, 0.0)));
    }

    #[test]
    fn q_expectation_of_gaussian() {
        let g = make_grid(4096, 200.0_f64).unwrap();
        let psi = crate::states::gaussian(&g, 2.0, 5.0, 3.0).unwrap();
        let mean = psi.inner(&apply_q(&psi)).unwrap();
        assert!((mean.re - 2.0).abs() < 1e-10);
        assert!(q_boundary_warning(&psi).is_none());
        let wave = StateVector::from_fn(&g, |x| Complex::from_polar(1.0, g.frequencies()[5] * x));
        let m = q_boundary_warning(&wave).unwrap();
        assert!((m - 0.1).abs() < 1e-3);
    }

    #[test]
    fn identity_symbol_gives_position() {
        let g = make_grid(4096, 200.0_f64).unwrap();
        let op = operator("x", &[], &g);
        let phi = vector(&op, 0.0);
        let d = op.apply(phi.state()).unwrap();
        assert_eq!(d.sub(&apply_q(phi.state())).unwrap().norm(), 0.0);
        let e = op.expectation(vector(&op, 2.0).state()).unwrap();
        assert!((e.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn generic_path_matches_closed_forms() {
        let g = make_grid(4096, 200.0_f64).unwrap();
        let cases: Vec<(&str, Vec<(&str, f64)>, ClosedForm)> = vec![
            ("x^2/2", vec![], ClosedForm::AharonovBohm),
            ("log(abs(x))", vec![], ClosedForm::LogAbs),
            ("sqrt(x^2 + m^2)", vec![("m", 1.0)], ClosedForm::SemiRelativistic { m: 1.0 }),
            ("(x^2 + m^2)^(alpha/2)", vec![("alpha", 0.6), ("m", 1.0)], ClosedForm::Fractional { alpha: 0.6, m: 1.0 }),
        ];
        for (text, params, form) in cases {
            let op = operator(text, &params, &g);
            let phi = vector(&op, 1.5);
            let generic = op.apply(phi.state()).unwrap();
            let closed = form.apply(&g, op.singular_set(), phi.state()).unwrap();
            let rel = generic.sub(&closed).unwrap().norm() / generic.norm();
            assert!(rel <= 1e-12, "{text}: {rel:e}");
        }
    }

    #[test]
    fn operator_is_symmetric_on_the_core() {
        let g = make_grid(4096, 200.0_f64).unwrap();
        let op = operator("log(abs(x))", &[], &g);
        let a = vector(&op, -3.0);
        let b = TestVector::gaussian(
            &g,
            GaussianParams { x0: 4.0, sigma: 4.0, k0: 2.5 },
            BumpProfile::new(1.2, 4.0).unwrap(),
            op.singular_set(),
        )
        .unwrap();
        let lhs = a.state().inner(&op.apply(b.state()).unwrap()).unwrap();
        let rhs = op.apply(a.state()).unwrap().inner(b.state()).unwrap();
        assert!((lhs - rhs).norm() <= 1e-10);
        assert!(op.expectation(a.state()).unwrap().symmetry_defect <= 1e-10);
    }

    #[test]
    fn requires_validated_symbol_and_complete_singular_set() {
        let g = make_grid(256, 30.0_f64).unwrap();
        let sym = SpectralSymbol::parse("x^2/2", &BTreeMap::new(), g.frequency_window(), g.dk() / 4.0).unwrap();
        assert!(matches!(
            TimeOperator::from_symbol(sym.clone(), &g),
            Err(Error::NotValidated)
        ));
        let sym = sym.into_validated().unwrap();
        let empty = SingularSet::empty(1.0).unwrap();
        assert!(matches!(
            TimeOperator::new(sym, empty, &g),
            Err(Error::InvalidSingularSet(_))
        ));
    }
}
