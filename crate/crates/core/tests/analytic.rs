//! Evolution against closed-form solutions of the free equations.

use std::collections::BTreeMap;

use num_complex::Complex64;

use weyl_lab::expr::SpectralSymbol;
use weyl_lab::grid::make_grid;
use weyl_lab::spectral::evolve;
use weyl_lab::states::gaussian;
use weyl_lab::{Grid64, StateVector64};

const X0: f64 = -10.0;
const SIGMA: f64 = 5.0;
const K0: f64 = 3.0;

fn setup(text: &str) -> (Grid64, SpectralSymbol) {
    let grid = make_grid(4096, 200.0).unwrap();
    let sym = SpectralSymbol::parse(text, &BTreeMap::new(), grid.frequency_window(), grid.dk() / 4.0).unwrap();
    (grid, sym)
}

fn relative_error(a: &StateVector64, b: &StateVector64) -> f64 {
    a.sub(b).unwrap().norm() / b.norm()
}

#[test]
fn linear_symbol_translates_the_packet() {
    let (grid, sym) = setup("x");
    let psi = gaussian(&grid, X0, SIGMA, K0).unwrap();
    for t in [0.5, 3.0, 17.25, -8.0] {
        let evolved = evolve(&sym, t, &psi).unwrap();
        // ψ(x − t) = e^{−ik0t} × (the same packet centred at x0 + t).
        let expected = gaussian(&grid, X0 + t, SIGMA, K0).unwrap().scaled(Complex64::from_polar(1.0, -K0 * t));
        let err = relative_error(&evolved, &expected);
        assert!(err <= 1e-10, "t = {t}: {err:e}");
    }
}

#[test]
fn quadratic_symbol_spreads_the_packet() {
    let (grid, sym) = setup("x^2/2");
    let psi = gaussian(&grid, X0, SIGMA, K0).unwrap();
    // `gaussian` normalizes on the grid; use the same constant here.
    let amplitude = 1.0
        / StateVector64::from_fn(&grid, |x| Complex64::new((-(x - X0).powi(2) / (2.0 * SIGMA * SIGMA)).exp(), 0.0)).norm();
    let s2 = SIGMA * SIGMA;
    for t in [0.25, 1.0, 4.0, 10.0, -3.0] {
        let evolved = evolve(&sym, t, &psi).unwrap();
        let width = Complex64::new(s2, t);
        let prefactor = (Complex64::new(s2, 0.0) / width).sqrt() * amplitude;
        let expected = StateVector64::from_fn(&grid, |x| {
            let d = x - X0 - K0 * t;
            prefactor * (-(d * d) / (2.0 * width) + Complex64::new(0.0, K0 * (x - K0 * t / 2.0))).exp()
        });
        let err = relative_error(&evolved, &expected);
        assert!(err <= 1e-10, "t = {t}: {err:e}");
    }
}
