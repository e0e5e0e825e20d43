//! Dense-matrix reference backend.
//!
//! Every operator is built as an explicit `N × N` matrix without going
//! through the FFT, and every residual of [`crate::verify`] is recomputed by
//! plain matrix–vector products. The discretization is the same as the fast
//! path's; only the computational path differs, so a disagreement points at
//! an implementation bug rather than at discretization error.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::SpectralSymbol;
use crate::grid::{Grid, StateVector};
use crate::spectral::SingularSet;
use crate::verify::{self, Setup};

/// Largest grid for which dense matrices are built.
pub const DENSE_CAP: usize = 1024;
/// Hermiticity threshold for matrices that claim it.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// An explicit complex matrix acting on state vectors of one grid.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    grid: Grid<f64>,
    label: String,
    /// Row-major entries.
    data: Vec<Complex64>,
}

/// The operators the oracle can build.
#[derive(Clone, Copy)]
pub enum DenseKind<'a> {
    /// `Q = diag(x_j)`.
    Position,
    /// `f(P)`, with bins inside `mask` set to zero when given.
    Multiplier {
        f: &'a dyn Fn(f64) -> Complex64,
        mask: Option<&'a SingularSet>,
    },
    /// `e^{-itg(P)}`.
    Evolution { g: &'a SpectralSymbol, t: f64 },
    /// `D = ½(G⁻¹Q + QG⁻¹)` with `G⁻¹` the masked inverse of `g'(P)`.
    TimeOperator { g: &'a SpectralSymbol, z: &'a SingularSet },
}

fn check_cap(n: usize) -> Result<()> {
    if n > DENSE_CAP {
        return Err(Error::ResourceCap(format!("dense oracle needs N <= {DENSE_CAP}, got {n}")));
    }
    Ok(())
}

/// `e^{2πi r/N}` for `r = 0..N`.
fn twiddles(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|r| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * r as f64 / n as f64))
        .collect()
}

impl DenseOperator {
    pub fn build(kind: DenseKind<'_>, grid: &Grid<f64>) -> Result<Self> {
        check_cap(grid.n())?;
        match kind {
            DenseKind::Position => Ok(Self::diagonal(grid, "Q", grid.positions().iter().map(|&x| Complex64::new(x, 0.0)))),
            DenseKind::Multiplier { f, mask } => {
                let excluded = mask.map(|z| z.mask(grid)).unwrap_or_else(|| vec![false; grid.n()]);
                let values = grid
                    .frequencies()
                    .iter()
                    .zip(&excluded)
                    .map(|(&k, &m)| if m { Ok(Complex64::new(0.0, 0.0)) } else { finite(f(k), k) })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self::circulant(grid, "f(P)", &values))
            }
            DenseKind::Evolution { g, t } => {
                let values: Vec<Complex64> = grid
                    .frequencies()
                    .iter()
                    .map(|&k| {
                        let gk = g.eval(k);
                        if t == 0.0 || !gk.is_finite() {
                            Complex64::new(1.0, 0.0)
                        } else {
                            Complex64::from_polar(1.0, -t * gk)
                        }
                    })
                    .collect();
                Ok(Self::circulant(grid, "exp(-itg(P))", &values))
            }
            DenseKind::TimeOperator { g, z } => {
                let inv = |k: f64| Complex64::new(1.0 / g.eval_prime(k), 0.0);
                let ginv = Self::build(DenseKind::Multiplier { f: &inv, mask: Some(z) }, grid)?;
                let x = grid.positions();
                let n = grid.n();
                let data = (0..n * n)
                    .map(|idx| ginv.data[idx] * (0.5 * (x[idx / n] + x[idx % n])))
                    .collect();
                Ok(DenseOperator {
                    grid: grid.clone(),
                    label: "D".into(),
                    data,
                })
            }
        }
    }

    fn diagonal(grid: &Grid<f64>, label: &str, diag: impl Iterator<Item = Complex64>) -> Self {
        let n = grid.n();
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for (j, d) in diag.enumerate() {
            data[j * n + j] = d;
        }
        DenseOperator {
            grid: grid.clone(),
            label: label.into(),
            data,
        }
    }

    /// The matrix of the multiplier with values `f` (FFT order):
    /// `M_{jl} = c_{(j-l) mod N}`, `c_m = (1/N) Σ_i f_i e^{2πi·im/N}`.
    fn circulant(grid: &Grid<f64>, label: &str, f: &[Complex64]) -> Self {
        let n = grid.n();
        let tw = twiddles(n);
        let c: Vec<Complex64> = (0..n)
            .map(|m| f.iter().enumerate().map(|(i, &fi)| fi * tw[(i * m) % n]).sum::<Complex64>() / n as f64)
            .collect();
        let data = (0..n * n).map(|idx| c[(idx / n + n - idx % n) % n]).collect();
        DenseOperator {
            grid: grid.clone(),
            label: label.into(),
            data,
        }
    }

    /// The unitary transform matrix `F_{nj} = e^{-2πi·nj/N}/√N`.
    pub fn dft_matrix(grid: &Grid<f64>) -> Result<Self> {
        let n = grid.n();
        check_cap(n)?;
        let tw = twiddles(n);
        let scale = 1.0 / (n as f64).sqrt();
        let data = (0..n * n).map(|idx| tw[(idx / n * (idx % n)) % n].conj() * scale).collect();
        Ok(DenseOperator {
            grid: grid.clone(),
            label: "F".into(),
            data,
        })
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn grid(&self) -> &Grid<f64> {
        &self.grid
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.n() + col]
    }

    pub fn apply(&self, psi: &StateVector<f64>) -> Result<StateVector<f64>> {
        if psi.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let n = self.n();
        let a = psi.amplitudes();
        let out = self
            .data
            .chunks_exact(n)
            .map(|row| row.iter().zip(a).map(|(m, v)| m * v).sum())
            .collect();
        StateVector::new(&self.grid, out)
    }

    /// The conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let n = self.n();
        let data = (0..n * n).map(|idx| self.data[(idx % n) * n + idx / n].conj()).collect();
        DenseOperator {
            grid: self.grid.clone(),
            label: format!("{}^*", self.label),
            data,
        }
    }

    /// Plain `O(N³)` matrix product `self · other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let n = self.n();
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        Ok(DenseOperator {
            grid: self.grid.clone(),
            label: format!("{}{}", self.label, other.label),
            data,
        })
    }

    /// `max_{jl} |A_{jl} − conj(A_{lj})|`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.n();
        (0..n * n)
            .map(|idx| (self.data[idx] - self.data[(idx % n) * n + idx / n].conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_defect() <= HERMITIAN_TOL
    }

    /// `max_{jl} |A_{jl} − B_{jl}|`.
    pub fn max_difference(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// `max_{jl} |(A*A − I)_{jl}|`.
    pub fn unitarity_defect(&self) -> Result<f64> {
        let prod = self.adjoint().matmul(self)?;
        let n = self.n();
        Ok((0..n * n)
            .map(|idx| {
                let id = if idx / n == idx % n { 1.0 } else { 0.0 };
                (prod.data[idx] - id).norm()
            })
            .fold(0.0, f64::max))
    }
}

fn finite(v: Complex64, k: f64) -> Result<Complex64> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteSymbol { k })
    }
}

fn relative(diff: &StateVector<f64>, reference: &StateVector<f64>) -> f64 {
    diff.norm() / reference.norm()
}

/// A residual computed along both paths.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathComparison {
    pub name: String,
    pub fast: f64,
    pub dense: f64,
}

impl PathComparison {
    pub fn deviation(&self) -> f64 {
        (self.fast - self.dense).abs()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossCheck {
    pub comparisons: Vec<PathComparison>,
    /// `max |⟨Φ,DΨ⟩ − ⟨DΦ,Ψ⟩|/(‖Φ‖‖Ψ‖)` over the probe pairs, dense path.
    pub dense_symmetry_defect: f64,
}

impl CrossCheck {
    pub fn max_deviation(&self) -> f64 {
        self.comparisons.iter().map(PathComparison::deviation).fold(0.0, f64::max)
    }
}

/// The frequency functions used for the commutator identity
/// `Qf(P)φ = f(P)Qφ + if'(P)φ` in cross-checks: `sin λ`, `e^{-iλ}` and
/// `(1+λ²)^{-1}`, each with its derivative.
#[allow(clippy::type_complexity)]
pub fn reference_functions() -> Vec<(&'static str, fn(f64) -> Complex64, fn(f64) -> Complex64)> {
    vec![
        ("sin", |k| Complex64::new(k.sin(), 0.0), |k| Complex64::new(k.cos(), 0.0)),
        (
            "exp(-i x)",
            |k| Complex64::from_polar(1.0, -k),
            |k| Complex64::new(0.0, -1.0) * Complex64::from_polar(1.0, -k),
        ),
        (
            "1/(1+x^2)",
            |k| Complex64::new(1.0 / (1.0 + k * k), 0.0),
            |k| Complex64::new(-2.0 * k / (1.0 + k * k).powi(2), 0.0),
        ),
    ]
}

/// Recomputes every residual of the scenario along the dense path and
/// compares it with the fast path.
pub fn cross_check(setup: &Setup<f64>, times: &[f64], weyl_pairs: &[(f64, f64)], partners: &[StateVector<f64>]) -> Result<CrossCheck> {
    let grid = &setup.grid;
    let op = &setup.op;
    let phi = setup.phi.state();
    let g = op.symbol();
    let z = op.singular_set();
    let i = Complex64::new(0.0, 1.0);

    let q = DenseOperator::build(DenseKind::Position, grid)?;
    let d = DenseOperator::build(DenseKind::TimeOperator { g, z }, grid)?;
    let deriv = |k: f64| Complex64::new(g.eval_prime(k), 0.0);
    let gp = DenseOperator::build(DenseKind::Multiplier { f: &deriv, mask: Some(z) }, grid)?;
    let inv = |k: f64| Complex64::new(1.0 / g.eval_prime(k), 0.0);
    let gi = DenseOperator::build(DenseKind::Multiplier { f: &inv, mask: Some(z) }, grid)?;

    let mut out = Vec::new();
    let mut push = |name: String, fast: f64, dense: f64| out.push(PathComparison { name, fast, dense });

    let d_phi = d.apply(phi)?;
    let q_phi = q.apply(phi)?;
    for &t in times {
        let u = DenseOperator::build(DenseKind::Evolution { g, t }, grid)?;
        let tc = Complex64::new(t, 0.0);
        let u_phi = u.apply(phi)?;

        let weak = d.apply(&u_phi)?.sub(&u.apply(&d_phi.axpy(tc, phi)?)?)?;
        push(format!("weak_weyl(t={t})"), verify::weak_weyl_residual(op, phi, t)?, relative(&weak, phi));

        let steps = verify::step_residuals(op, phi, t)?;
        let chi = q.apply(&gi.apply(&u_phi)?)?.sub(&u.apply(&q.apply(&gi.apply(phi)?)?.axpy(tc, phi)?)?)?;
        let eq5 = q.apply(&u_phi)?.sub(&u.apply(&q_phi.axpy(tc, &gp.apply(phi)?)?)?)?;
        let eq6 = gi.apply(&q.apply(&u_phi)?)?.sub(&u.apply(&gi.apply(&q_phi)?.axpy(tc, phi)?)?)?;
        push(format!("step_chi(t={t})"), steps.chi, relative(&chi, phi));
        push(format!("step_eq5(t={t})"), steps.eq5, relative(&eq5, phi));
        push(format!("step_eq6(t={t})"), steps.eq6, relative(&eq6, phi));

        let before = phi.inner(&d_phi)?.re / phi.norm_sqr();
        let after = u_phi.inner(&d.apply(&u_phi)?)?.re / u_phi.norm_sqr();
        push(
            format!("expectation(t={t})"),
            verify::expectation_shift_residual(op, phi, t)?,
            (after - before - t).abs(),
        );
    }

    for &(s, t) in weyl_pairs {
        let shift_fn = move |k: f64| Complex64::from_polar(1.0, -t * k);
        let shift = DenseOperator::build(DenseKind::Multiplier { f: &shift_fn, mask: None }, grid)?;
        let x = grid.positions();
        let phase = DenseOperator::diagonal(grid, "exp(-isQ)", x.iter().map(|&xj| Complex64::from_polar(1.0, -s * xj)));
        let lhs = phase.apply(&shift.apply(phi)?)?;
        let rhs = shift.apply(&phase.apply(phi)?)?.scaled(Complex64::from_polar(1.0, -s * t));
        push(
            format!("weyl_pq(s={s},t={t})"),
            verify::weyl_residual_pq(phi, s, t)?,
            relative(&lhs.sub(&rhs)?, phi),
        );
    }

    for (name, f, fp) in reference_functions() {
        let fm = DenseOperator::build(DenseKind::Multiplier { f: &f, mask: None }, grid)?;
        let fpm = DenseOperator::build(DenseKind::Multiplier { f: &fp, mask: None }, grid)?;
        let res = q.apply(&fm.apply(phi)?)?.sub(&fm.apply(&q_phi)?.axpy(i, &fpm.apply(phi)?)?)?;
        push(format!("arai({name})"), verify::arai_residual_with(f, fp, phi)?, relative(&res, phi));
    }

    let mut dense_symmetry_defect: f64 = 0.0;
    for psi in partners {
        let lhs = phi.inner(&d.apply(psi)?)?;
        let rhs = d_phi.inner(psi)?;
        let dense = (lhs - rhs).norm() / (phi.norm() * psi.norm());
        dense_symmetry_defect = dense_symmetry_defect.max(dense);
        push("symmetry".into(), verify::symmetry_defect(op, phi, psi)?, dense);
    }

    Ok(CrossCheck {
        comparisons: out,
        dense_symmetry_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn grid(n: usize, l: f64) -> Grid<f64> {
        Grid::new(n, l).unwrap()
    }

    fn symbol(text: &str, g: &Grid<f64>) -> SpectralSymbol {
        let (lo, hi) = g.frequency_window();
        SpectralSymbol::parse(text, &BTreeMap::new(), (lo, hi), g.dk() / 4.0)
            .unwrap()
            .into_validated()
            .unwrap()
    }

    #[test]
    fn position_matrix_on_small_grid() {
        let g = grid(8, 8.0);
        let q = DenseOperator::build(DenseKind::Position, &g).unwrap();
        for j in 0..8 {
            for l in 0..8 {
                let expect = if j == l { j as f64 - 4.0 } else { 0.0 };
                assert_eq!(q.entry(j, l), Complex64::new(expect, 0.0));
            }
        }
        assert_eq!(q.hermitian_defect(), 0.0);
    }

    #[test]
    fn unit_multiplier_is_identity() {
        let g = grid(64, 20.0);
        let one = |_: f64| Complex64::new(1.0, 0.0);
        let m = DenseOperator::build(DenseKind::Multiplier { f: &one, mask: None }, &g).unwrap();
        for j in 0..64 {
            for l in 0..64 {
                let expect = if j == l { 1.0 } else { 0.0 };
                assert!((m.entry(j, l) - expect).norm() <= 1e-14);
            }
        }
    }

    #[test]
    fn circulant_matches_conjugated_diagonal() {
        let g = grid(32, 10.0);
        let f = |k: f64| Complex64::new(k.cos() + 0.5 * k, 0.0);
        let m = DenseOperator::build(DenseKind::Multiplier { f: &f, mask: None }, &g).unwrap();
        let fmat = DenseOperator::dft_matrix(&g).unwrap();
        let diag = DenseOperator::diagonal(&g, "f", g.frequencies().iter().map(|&k| f(k)));
        let reference = fmat.adjoint().matmul(&diag).unwrap().matmul(&fmat).unwrap();
        assert!(m.max_difference(&reference).unwrap() <= 1e-12);
        assert!(m.is_hermitian());
    }

    #[test]
    fn transform_matrix_is_unitary_and_matches_fft() {
        let g = grid(128, 30.0);
        let f = DenseOperator::dft_matrix(&g).unwrap();
        assert!(f.unitarity_defect().unwrap() <= 1e-12);
        let psi = StateVector::from_fn(&g, |x| Complex64::new((-x * x / 9.0).exp(), x.sin()));
        let dense = f.apply(&psi).unwrap();
        let fast = psi.to_fourier();
        let err = dense
            .amplitudes()
            .iter()
            .zip(fast.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err <= 1e-12, "{err}");
    }

    #[test]
    fn time_operator_of_identity_symbol_is_position() {
        let g = grid(64, 20.0);
        let sym = symbol("x", &g);
        let z = SingularSet::empty(0.5).unwrap();
        let d = DenseOperator::build(DenseKind::TimeOperator { g: &sym, z: &z }, &g).unwrap();
        let q = DenseOperator::build(DenseKind::Position, &g).unwrap();
        assert!(d.max_difference(&q).unwrap() <= 1e-13);
    }

    #[test]
    fn cap_is_enforced() {
        let g = grid(2048, 100.0);
        assert!(matches!(DenseOperator::build(DenseKind::Position, &g), Err(Error::ResourceCap(_))));
        assert!(matches!(DenseOperator::dft_matrix(&g), Err(Error::ResourceCap(_))));
    }

    #[test]
    fn non_finite_symbol_is_rejected() {
        let g = grid(16, 16.0);
        let f = |k: f64| Complex64::new(1.0 / k, 0.0);
        let r = DenseOperator::build(DenseKind::Multiplier { f: &f, mask: None }, &g);
        assert!(matches!(r, Err(Error::NonFiniteSymbol { .. })));
    }
}
