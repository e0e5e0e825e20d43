//! Periodic discretization of L²(ℝ) and its Fourier dual.
//!
//! Positions are `x_j = -L/2 + jL/N`, frequencies are stored in FFT order:
//! bin `n` carries `k_n = 2πn/L` for `n < N/2` and `2π(n-N)/L` otherwise.
//! Both representations use the quadrature weight `L/N` in their inner
//! product, and the transform is scaled by `1/√N`, so it is unitary.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Grid dimensions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec<T> {
    pub n: usize,
    pub length: T,
}

impl<T: Real> GridSpec<T> {
    pub fn dx(&self) -> T {
        self.length / T::from_usize_lossy(self.n)
    }

    pub fn dk(&self) -> T {
        T::TAU() / self.length
    }

    /// Largest |k| on the grid, `πN/L`.
    pub fn k_max(&self) -> T {
        T::PI() * T::from_usize_lossy(self.n) / self.length
    }
}

struct GridInner<T: Real> {
    spec: GridSpec<T>,
    x: Vec<T>,
    k: Vec<T>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

/// A grid with precomputed coordinates and transform plans. Cheap to clone.
#[derive(Clone)]
pub struct Grid<T: Real> {
    inner: Arc<GridInner<T>>,
}

impl<T: Real> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.inner.spec.n)
            .field("length", &self.inner.spec.length)
            .finish()
    }
}

impl<T: Real> PartialEq for Grid<T> {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner.spec == other.inner.spec
    }
}

/// Builds a grid of `n` points on a domain of length `length`.
pub fn make_grid<T: Real>(n: usize, length: T) -> Result<Grid<T>> {
    Grid::new(n, length)
}

impl<T: Real> Grid<T> {
    pub fn new(n: usize, length: T) -> Result<Self> {
        let reject = |reason| Error::InvalidGrid {
            n,
            length: length.as_f64(),
            reason,
        };
        if n < 8 {
            return Err(reject("N must be at least 8"));
        }
        if !n.is_power_of_two() {
            return Err(reject("N must be a power of two"));
        }
        if !(length > T::zero()) || !length.is_finite() {
            return Err(reject("L must be positive and finite"));
        }
        let spec = GridSpec { n, length };
        let dx = spec.dx();
        let dk = spec.dk();
        let half = length / T::lit(2.0);
        let x = (0..n).map(|j| -half + dx * T::from_usize_lossy(j)).collect();
        let k = (0..n)
            .map(|i| {
                if i < n / 2 {
                    dk * T::from_usize_lossy(i)
                } else {
                    -(dk * T::from_usize_lossy(n - i))
                }
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Grid {
            inner: Arc::new(GridInner {
                spec,
                x,
                k,
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            }),
        })
    }

    pub fn spec(&self) -> GridSpec<T> {
        self.inner.spec
    }

    pub fn n(&self) -> usize {
        self.inner.spec.n
    }

    pub fn length(&self) -> T {
        self.inner.spec.length
    }

    pub fn dx(&self) -> T {
        self.inner.spec.dx()
    }

    pub fn dk(&self) -> T {
        self.inner.spec.dk()
    }

    /// Positions `x_j`.
    pub fn positions(&self) -> &[T] {
        &self.inner.x
    }

    /// Frequencies `k_n` in FFT order.
    pub fn frequencies(&self) -> &[T] {
        &self.inner.k
    }

    /// Smallest and largest frequency on the grid: `[-πN/L, π(N-2)/L]`.
    pub fn frequency_window(&self) -> (T, T) {
        let n = self.n();
        (self.inner.k[n / 2], self.inner.k[n / 2 - 1])
    }

    fn weight(&self) -> T {
        self.dx()
    }

    fn transform(&self, data: &mut [Complex<T>], plan: &Arc<dyn Fft<T>>) {
        plan.process(data);
        let scale = T::one() / T::from_usize_lossy(self.n()).sqrt();
        for v in data.iter_mut() {
            *v = *v * scale;
        }
    }
}

/// Amplitudes of a state in the position representation.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T: Real> {
    grid: Grid<T>,
    amps: Vec<Complex<T>>,
}

/// Amplitudes of a state in the Fourier representation, in FFT order.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<T: Real> {
    grid: Grid<T>,
    amps: Vec<Complex<T>>,
}

macro_rules! vector_common {
    ($ty:ident) => {
        impl<T: Real> $ty<T> {
            /// Wraps amplitudes; fails if the length does not match the grid
            /// or an entry is not finite.
            pub fn new(grid: &Grid<T>, amps: Vec<Complex<T>>) -> Result<Self> {
                if amps.len() != grid.n() {
                    return Err(Error::InvalidArgument(format!(
                        "expected {} amplitudes, got {}",
                        grid.n(),
                        amps.len()
                    )));
                }
                if amps.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
                    return Err(Error::InvalidArgument("amplitudes must be finite".into()));
                }
                Ok(Self { grid: grid.clone(), amps })
            }

            pub fn zeros(grid: &Grid<T>) -> Self {
                Self {
                    grid: grid.clone(),
                    amps: vec![Complex::new(T::zero(), T::zero()); grid.n()],
                }
            }

            pub(crate) fn from_raw(grid: &Grid<T>, amps: Vec<Complex<T>>) -> Self {
                debug_assert_eq!(amps.len(), grid.n());
                Self { grid: grid.clone(), amps }
            }

            pub fn grid(&self) -> &Grid<T> {
                &self.grid
            }

            pub fn amplitudes(&self) -> &[Complex<T>] {
                &self.amps
            }

            pub fn into_amplitudes(self) -> Vec<Complex<T>> {
                self.amps
            }

            pub fn len(&self) -> usize {
                self.amps.len()
            }

            pub fn is_empty(&self) -> bool {
                self.amps.is_empty()
            }

            /// `Σ conj(a_j) b_j · L/N`.
            pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
                if self.grid != other.grid {
                    return Err(Error::GridMismatch);
                }
                let sum = self
                    .amps
                    .iter()
                    .zip(&other.amps)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b);
                Ok(sum * self.grid.weight())
            }

            pub fn norm_sqr(&self) -> T {
                self.amps.iter().map(|a| a.norm_sqr()).fold(T::zero(), |s, v| s + v) * self.grid.weight()
            }

            pub fn norm(&self) -> T {
                self.norm_sqr().sqrt()
            }

            pub fn scaled(&self, c: Complex<T>) -> Self {
                Self::from_raw(&self.grid, self.amps.iter().map(|a| a * c).collect())
            }

            pub fn scaled_real(&self, c: T) -> Self {
                Self::from_raw(&self.grid, self.amps.iter().map(|a| a * c).collect())
            }

            /// `self + c·other`.
            pub fn axpy(&self, c: Complex<T>, other: &Self) -> Result<Self> {
                if self.grid != other.grid {
                    return Err(Error::GridMismatch);
                }
                Ok(Self::from_raw(
                    &self.grid,
                    self.amps.iter().zip(&other.amps).map(|(a, b)| a + b * c).collect(),
                ))
            }

            pub fn add(&self, other: &Self) -> Result<Self> {
                self.axpy(Complex::new(T::one(), T::zero()), other)
            }

            pub fn sub(&self, other: &Self) -> Result<Self> {
                self.axpy(Complex::new(-T::one(), T::zero()), other)
            }

            /// Returns the vector scaled to unit norm; fails on the zero vector.
            pub fn normalized(&self) -> Result<Self> {
                let n = self.norm();
                if !(n > T::zero()) {
                    return Err(Error::InvalidArgument("cannot normalize the zero vector".into()));
                }
                Ok(self.scaled_real(T::one() / n))
            }

            /// Pointwise map with access to the index.
            pub fn map_indexed(&self, f: impl Fn(usize, Complex<T>) -> Complex<T>) -> Self {
                Self::from_raw(
                    &self.grid,
                    self.amps.iter().enumerate().map(|(i, &a)| f(i, a)).collect(),
                )
            }
        }
    };
}

vector_common!(StateVector);
vector_common!(Spectrum);

impl<T: Real> StateVector<T> {
    /// Samples `f(x_j)` on the grid.
    pub fn from_fn(grid: &Grid<T>, f: impl Fn(T) -> Complex<T>) -> Self {
        Self::from_raw(grid, grid.positions().iter().map(|&x| f(x)).collect())
    }

    pub fn to_fourier(&self) -> Spectrum<T> {
        to_fourier(self)
    }

    pub fn conj(&self) -> Self {
        self.map_indexed(|_, a| a.conj())
    }
}

impl<T: Real> Spectrum<T> {
    pub fn from_fn(grid: &Grid<T>, f: impl Fn(T) -> Complex<T>) -> Self {
        Self::from_raw(grid, grid.frequencies().iter().map(|&k| f(k)).collect())
    }

    pub fn from_fourier(&self) -> StateVector<T> {
        from_fourier(self)
    }
}

/// Unitary forward transform to the Fourier representation.
pub fn to_fourier<T: Real>(psi: &StateVector<T>) -> Spectrum<T> {
    let mut data = psi.amps.clone();
    psi.grid.transform(&mut data, &psi.grid.inner.forward);
    Spectrum::from_raw(&psi.grid, data)
}

/// Inverse of [`to_fourier`].
pub fn from_fourier<T: Real>(spec: &Spectrum<T>) -> StateVector<T> {
    let mut data = spec.amps.clone();
    spec.grid.transform(&mut data, &spec.grid.inner.inverse);
    StateVector::from_raw(&spec.grid, data)
}

/// `(ψ, φ)`, antilinear in the first argument.
pub fn inner<T: Real>(psi: &StateVector<T>, phi: &StateVector<T>) -> Result<Complex<T>> {
    psi.inner(phi)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn naive_dft(psi: &[Complex<f64>]) -> Vec<Complex<f64>> {
        let n = psi.len();
        (0..n)
            .map(|m| {
                psi.iter()
                    .enumerate()
                    .map(|(j, a)| {
                        let phase = -2.0 * PI * ((m * j) % n) as f64 / n as f64;
                        a * Complex::from_polar(1.0, phase)
                    })
                    .sum::<Complex<f64>>()
                    / (n as f64).sqrt()
            })
            .collect()
    }

    #[test]
    fn small_grid_coordinates() {
        let g = make_grid(8, 8.0f64).unwrap();
        assert_eq!(g.positions(), &[-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
        let mut k: Vec<f64> = g.frequencies().to_vec();
        k.sort_by(f64::total_cmp);
        for (i, kv) in k.iter().enumerate() {
            let n = i as f64 - 4.0;
            assert!((kv - PI * n / 4.0).abs() < 1e-15);
        }
        assert_eq!(g.frequency_window(), (-PI, 3.0 * PI / 4.0));
    }

    #[test]
    fn default_grid_spacing() {
        let g = make_grid(4096, 200.0f64).unwrap();
        assert!((g.dk() - 0.031_415_926_535_897_93).abs() < 1e-15);
        assert!((g.spec().k_max() - 64.339_817_545_518_97).abs() < 1e-12);
        assert!((-g.frequency_window().0 - g.spec().k_max()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(matches!(make_grid(10, 8.0f64), Err(Error::InvalidGrid { .. })));
        assert!(matches!(make_grid(4, 8.0f64), Err(Error::InvalidGrid { .. })));
        assert!(matches!(make_grid(16, 0.0f64), Err(Error::InvalidGrid { .. })));
        assert!(matches!(make_grid(16, -1.0f64), Err(Error::InvalidGrid { .. })));
    }

    #[test]
    fn constant_vector_lands_in_dc_bin() {
        let g = make_grid(64, 10.0f64).unwrap();
        let psi = StateVector::from_fn(&g, |_| c(1.0, 0.0));
        let s = psi.to_fourier();
        assert!((s.amplitudes()[0].norm() - 8.0).abs() < 1e-12);
        assert!(s.amplitudes()[1..].iter().all(|a| a.norm() < 1e-12));
    }

    #[test]
    fn plane_wave_occupies_a_single_bin() {
        let g = make_grid(64, 10.0f64).unwrap();
        let k5 = g.frequencies()[5];
        let psi = StateVector::from_fn(&g, |x| Complex::from_polar(1.0, k5 * x));
        let s = psi.to_fourier();
        for (i, a) in s.amplitudes().iter().enumerate() {
            if i == 5 {
                assert!(a.norm() > 1.0);
            } else {
                assert!(a.norm() < 1e-12, "bin {i}: {a}");
            }
        }
    }

    #[test]
    fn fast_transform_matches_naive_dft() {
        let g = make_grid(128, 7.0f64).unwrap();
        let psi = StateVector::from_fn(&g, |x| c((3.0 * x).sin() + x * x * 0.1, (x * 0.7).cos()));
        let fast = psi.to_fourier();
        let slow = naive_dft(psi.amplitudes());
        for (a, b) in fast.amplitudes().iter().zip(&slow) {
            assert!((a - b).norm() < 1e-12);
        }
        let back = fast.from_fourier();
        let err = back.sub(&psi).unwrap().norm();
        assert!(err <= 1e-13 * psi.norm(), "{err}");
    }

    #[test]
    fn inner_product_conventions() {
        let g = make_grid(64, 16.0f64).unwrap();
        let a = StateVector::from_fn(&g, |x| if x < 0.0 { c(1.0, 1.0) } else { c(0.0, 0.0) });
        let b = StateVector::from_fn(&g, |x| if x >= 0.0 { c(2.0, 0.0) } else { c(0.0, 0.0) });
        assert_eq!(inner(&a, &b).unwrap(), c(0.0, 0.0));
        let aa = inner(&a, &a).unwrap();
        assert!(aa.im == 0.0 && aa.re > 0.0);
        assert!((aa.re - a.norm_sqr()).abs() < 1e-14);
        // antilinear in the first slot
        let ia = a.scaled(c(0.0, 1.0));
        assert_eq!(inner(&ia, &a).unwrap(), aa * c(0.0, -1.0));

        let (k1, k2) = (g.frequencies()[3], g.frequencies()[7]);
        let p1 = StateVector::from_fn(&g, |x| Complex::from_polar(1.0, k1 * x));
        let p2 = StateVector::from_fn(&g, |x| Complex::from_polar(1.0, k2 * x));
        assert!(inner(&p1, &p2).unwrap().norm() < 1e-13);
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let g1 = make_grid(16, 1.0f64).unwrap();
        let g2 = make_grid(16, 2.0f64).unwrap();
        let a = StateVector::zeros(&g1);
        let b = StateVector::zeros(&g2);
        assert!(matches!(inner(&a, &b), Err(Error::GridMismatch)));
    }

    #[test]
    fn single_precision_grid() {
        let g = make_grid(64, 10.0f32).unwrap();
        let psi = StateVector::from_fn(&g, |x| Complex::new((-x * x).exp(), 0.0));
        let back = psi.to_fourier().from_fourier();
        assert!(back.sub(&psi).unwrap().norm() < 1e-5);
    }
}
