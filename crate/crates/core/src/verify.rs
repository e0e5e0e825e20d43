//! Residuals of the operator identities and grid-refinement studies.
//!
//! Every residual is normalized by the norm of the input state, so all of
//! them are invariant under rescaling and global phase of that state.

use std::collections::BTreeMap;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::SpectralSymbol;
use crate::grid::{Grid, StateVector};
use crate::scalar::Real;
use crate::spectral::{gprime_op, MultiplierOp, SingularSet};
use crate::states::{BumpProfile, GaussianParams, TestVector};
use crate::timeop::{apply_q, TimeOperator};

/// Slack allowed on the triangle diagnostic for rounding.
pub const TRIANGLE_SLACK: f64 = 1e-13;
/// Residuals below this floor are treated as converged in refinement studies.
pub const CONVERGENCE_FLOOR: f64 = 1e-11;
/// Minimum residual reduction per refinement level above the floor.
pub const CONVERGENCE_RATIO: f64 = 4.0;
/// Largest grid a refinement study may reach.
pub const MAX_STUDY_POINTS: usize = 1 << 22;

fn relative<T: Real>(diff: &StateVector<T>, reference: &StateVector<T>) -> T {
    diff.norm() / reference.norm()
}

fn c<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// `‖D e^{-itg(P)}Φ − e^{-itg(P)}(D + t)Φ‖ / ‖Φ‖`.
pub fn weak_weyl_residual<T: Real>(op: &TimeOperator<T>, phi: &StateVector<T>, t: T) -> Result<T> {
    let u = MultiplierOp::evolution(op.grid(), op.symbol(), t);
    let lhs = op.apply(&u.apply(phi)?)?;
    let rhs = u.apply(&op.apply(phi)?.axpy(c(t), phi)?)?;
    Ok(relative(&lhs.sub(&rhs)?, phi))
}

/// `‖Q f(P)φ − f(P)Qφ − i f'(P)φ‖ / ‖φ‖` for a complex frequency function
/// and its derivative. Both must be finite on every frequency of the grid.
pub fn arai_residual_with<T: Real>(
    f: impl Fn(T) -> Complex<T>,
    fprime: impl Fn(T) -> Complex<T>,
    phi: &StateVector<T>,
) -> Result<T> {
    let grid = phi.grid();
    let fop = MultiplierOp::from_fn(grid, f)?;
    let dop = MultiplierOp::from_fn(grid, fprime)?;
    let lhs = apply_q(&fop.apply(phi)?);
    let rhs = fop
        .apply(&apply_q(phi))?
        .axpy(Complex::new(T::zero(), T::one()), &dop.apply(phi)?)?;
    Ok(relative(&lhs.sub(&rhs)?, phi))
}

/// [`arai_residual_with`] for a real symbol and its symbolic derivative.
pub fn arai_residual<T: Real>(f: &SpectralSymbol, phi: &StateVector<T>) -> Result<T> {
    arai_residual_with(|k| c(f.eval(k)), |k| c(f.eval_prime(k)), phi)
}

/// [`arai_residual_with`] for `f(λ) = e^{-iτλ}`, `f'(λ) = −iτ e^{-iτλ}`.
pub fn arai_residual_exp<T: Real>(tau: T, phi: &StateVector<T>) -> Result<T> {
    arai_residual_with(
        |k| Complex::from_polar(T::one(), -tau * k),
        |k| Complex::new(T::zero(), -tau) * Complex::from_polar(T::one(), -tau * k),
        phi,
    )
}

/// The three intermediate identities behind the weak Weyl relation for `D`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepResiduals {
    /// `Q g'(P)^{-1} U Φ = U(Q g'(P)^{-1} + t)Φ`
    pub chi: f64,
    /// `Q U Φ = U(Q + t g'(P))Φ`
    pub eq5: f64,
    /// `g'(P)^{-1} Q U Φ = U(g'(P)^{-1} Q + t)Φ`
    pub eq6: f64,
}

impl StepResiduals {
    /// The weak Weyl residual of `D` is half the norm of the sum of the
    /// `chi` and `eq6` defects, so it is bounded by their mean.
    pub fn triangle_holds(&self, weak_weyl: f64) -> bool {
        weak_weyl <= 0.5 * (self.chi + self.eq6) + TRIANGLE_SLACK
    }

    pub fn max(&self) -> f64 {
        self.chi.max(self.eq5).max(self.eq6)
    }
}

pub fn step_residuals<T: Real>(op: &TimeOperator<T>, phi: &StateVector<T>, t: T) -> Result<StepResiduals> {
    let u = MultiplierOp::evolution(op.grid(), op.symbol(), t);
    let inv = op.inverse_derivative();
    let deriv = gprime_op(op.symbol(), op.singular_set(), op.grid())?;
    let uphi = u.apply(phi)?;

    let chi_l = apply_q(&inv.apply(&uphi)?);
    let chi_r = u.apply(&apply_q(&inv.apply(phi)?).axpy(c(t), phi)?)?;

    let eq5_l = apply_q(&uphi);
    let eq5_r = u.apply(&apply_q(phi).axpy(c(t), &deriv.apply(phi)?)?)?;

    let eq6_l = inv.apply(&apply_q(&uphi))?;
    let eq6_r = u.apply(&inv.apply(&apply_q(phi))?.axpy(c(t), phi)?)?;

    Ok(StepResiduals {
        chi: relative(&chi_l.sub(&chi_r)?, phi).as_f64(),
        eq5: relative(&eq5_l.sub(&eq5_r)?, phi).as_f64(),
        eq6: relative(&eq6_l.sub(&eq6_r)?, phi).as_f64(),
    })
}

/// `‖e^{-isQ}e^{-itP}ψ − e^{-ist}e^{-itP}e^{-isQ}ψ‖ / ‖ψ‖`.
pub fn weyl_residual_pq<T: Real>(psi: &StateVector<T>, s: T, t: T) -> Result<T> {
    let grid = psi.grid();
    let shift = MultiplierOp::from_fn(grid, |k| Complex::from_polar(T::one(), -t * k))?;
    let x = grid.positions();
    let phase = |v: &StateVector<T>| v.map_indexed(|j, a| a * Complex::from_polar(T::one(), -s * x[j]));
    let lhs = phase(&shift.apply(psi)?);
    let rhs = shift.apply(&phase(psi))?.scaled(Complex::from_polar(T::one(), -s * t));
    Ok(relative(&lhs.sub(&rhs)?, psi))
}

/// `|⟨D⟩_{e^{-itg(P)}Φ} − ⟨D⟩_Φ − t|`.
pub fn expectation_shift_residual<T: Real>(op: &TimeOperator<T>, phi: &StateVector<T>, t: T) -> Result<T> {
    let evolved = crate::spectral::evolve(op.symbol(), t, phi)?;
    let before = op.expectation(phi)?.value;
    let after = op.expectation(&evolved)?.value;
    Ok(T::lit((after - before - t.as_f64()).abs()))
}

/// `|(Φ, DΨ) − (DΦ, Ψ)| / (‖Φ‖‖Ψ‖)`.
pub fn symmetry_defect<T: Real>(op: &TimeOperator<T>, a: &StateVector<T>, b: &StateVector<T>) -> Result<T> {
    let lhs = a.inner(&op.apply(b)?)?;
    let rhs = op.apply(a)?.inner(b)?;
    Ok((lhs - rhs).norm() / (a.norm() * b.norm()))
}

/// Pass thresholds per residual family. Analytically exact cases (`t = 0`,
/// `s = 0`, constant `f`) are held to `exact` instead.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub weak_weyl: f64,
    pub steps: f64,
    pub arai: f64,
    pub weyl_pq: f64,
    pub expectation: f64,
    pub symmetry: f64,
    pub closed_form: f64,
    pub oracle: f64,
    pub exact: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            weak_weyl: 1e-6,
            steps: 1e-6,
            arai: 1e-8,
            weyl_pq: 1e-8,
            expectation: 1e-8,
            symmetry: 1e-10,
            closed_form: 1e-12,
            oracle: 1e-10,
            exact: 1e-13,
        }
    }
}

impl Tolerances {
    pub fn entries(&self) -> [(&'static str, f64); 9] {
        [
            ("weak_weyl", self.weak_weyl),
            ("steps", self.steps),
            ("arai", self.arai),
            ("weyl_pq", self.weyl_pq),
            ("expectation", self.expectation),
            ("symmetry", self.symmetry),
            ("closed_form", self.closed_form),
            ("oracle", self.oracle),
            ("exact", self.exact),
        ]
    }

    /// `exact` when `exact_case` holds, `tolerance` otherwise.
    pub fn pick(&self, tolerance: f64, exact_case: bool) -> f64 {
        if exact_case {
            self.exact
        } else {
            tolerance
        }
    }
}

/// A symbol, grid and test vector: everything needed to evaluate residuals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    pub symbol: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub n: usize,
    pub length: f64,
    pub bump: (f64, f64),
    pub gaussian: GaussianParams,
    /// Exclusion half-width; defaults to `max(0.5, 4·dk)`.
    #[serde(default)]
    pub margin: Option<f64>,
}

impl Scenario {
    /// The reference configuration: `N = 4096`, `L = 200`, Gaussian at 0
    /// with `σ = 5`, `k0 = 3`, bump on `[1, 5]`.
    pub fn standard(id: &str, symbol: &str, params: &[(&str, f64)]) -> Self {
        Scenario {
            id: id.to_string(),
            symbol: symbol.to_string(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            n: 4096,
            length: 200.0,
            bump: (1.0, 5.0),
            gaussian: GaussianParams {
                x0: 0.0,
                sigma: 5.0,
                k0: 3.0,
            },
            margin: None,
        }
    }

    pub fn with_grid(mut self, n: usize, length: f64) -> Self {
        self.n = n;
        self.length = length;
        self
    }

    /// Grid, validated operator and certified test vector.
    pub fn build<T: Real>(&self) -> Result<Setup<T>> {
        let grid = Grid::new(self.n, T::lit(self.length))?;
        let (lo, hi) = grid.frequency_window();
        let symbol = SpectralSymbol::parse(
            &self.symbol,
            &self.params,
            (lo.as_f64(), hi.as_f64()),
            grid.dk().as_f64() / 4.0,
        )?
        .into_validated()?;
        let points = symbol.singular_points()?;
        let singular = match self.margin {
            Some(m) => SingularSet::new(points, m)?,
            None => SingularSet::for_grid(points, &grid)?,
        };
        let op = TimeOperator::new(symbol, singular, &grid)?;
        let bump = BumpProfile::new(self.bump.0, self.bump.1)?;
        let phi = TestVector::gaussian(&grid, self.gaussian, bump, op.singular_set())?;
        Ok(Setup { grid, op, phi })
    }
}

#[derive(Clone, Debug)]
pub struct Setup<T: Real> {
    pub grid: Grid<T>,
    pub op: TimeOperator<T>,
    pub phi: TestVector<T>,
}

/// One refinement level of a study.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Level {
    pub n: usize,
    pub length: f64,
    pub residual: f64,
    /// Bound the residual must meet: the caller's bound on the first level
    /// (infinite unless the case is exact), `max(previous / 4, 1e-11)` afterwards.
    pub tolerance: f64,
    /// `previous / residual`, absent on the first level.
    pub ratio: Option<f64>,
}

impl Level {
    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub scenario: String,
    pub t: f64,
    pub levels: Vec<Level>,
}

impl ConvergenceStudy {
    /// Every ratio is at least 4 until the residual reaches the floor.
    pub fn passed(&self) -> bool {
        self.levels.iter().all(Level::passed)
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.residual).collect()
    }
}

/// Weak Weyl residual at `(N, L), (2N, 2L), …`. Doubling both keeps the
/// frequency window fixed while halving `dk`.
pub fn convergence_study<T: Real>(scenario: &Scenario, t: f64, levels: usize, base_tolerance: f64) -> Result<ConvergenceStudy> {
    if levels < 2 {
        return Err(Error::InvalidArgument(format!("a convergence study needs at least 2 levels, got {levels}")));
    }
    let finest = scenario
        .n
        .checked_mul(1usize.checked_shl(levels as u32 - 1).unwrap_or(usize::MAX))
        .unwrap_or(usize::MAX);
    if finest > MAX_STUDY_POINTS {
        return Err(Error::ResourceCap(format!(
            "convergence study would reach N = {finest} (cap {MAX_STUDY_POINTS})"
        )));
    }
    let mut out = Vec::with_capacity(levels);
    let mut current = scenario.clone();
    for i in 0..levels {
        let setup = current.build::<T>()?;
        let residual = weak_weyl_residual(&setup.op, setup.phi.state(), T::lit(t))?.as_f64();
        let (tolerance, ratio) = match out.last() {
            None => (base_tolerance, None),
            Some(prev @ Level { .. }) => {
                let prev: &Level = prev;
                ((prev.residual / CONVERGENCE_RATIO).max(CONVERGENCE_FLOOR), Some(prev.residual / residual))
            }
        };
        out.push(Level {
            n: current.n,
            length: current.length,
            residual,
            tolerance,
            ratio,
        });
        if i + 1 < levels {
            current = current.clone().with_grid(current.n * 2, current.length * 2.0);
        }
    }
    Ok(ConvergenceStudy {
        scenario: scenario.id.clone(),
        t,
        levels: out,
    })
}

/// A named residual with its tolerance and verdict.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualEntry {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    pub n: usize,
    pub length: f64,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// All residuals computed for one scenario.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub scenario_id: String,
    pub symbol: String,
    pub derivative: String,
    pub params: BTreeMap<String, f64>,
    pub n: usize,
    pub length: f64,
    pub bump: BumpProfile,
    pub gaussian: GaussianParams,
    pub singular_points: Vec<f64>,
    pub margin: f64,
    pub entries: Vec<ResidualEntry>,
    pub convergence: Vec<ConvergenceStudy>,
    /// Displayed form of `D` that the closed-form suite compared against.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<String>,
    /// Fast-path versus dense-path comparison, when the oracle suite ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<crate::oracle::CrossCheck>,
    pub warnings: Vec<String>,
    pub wall_time_ms: f64,
}

impl ResidualReport {
    pub fn new<T: Real>(scenario: &Scenario, setup: &Setup<T>) -> Self {
        ResidualReport {
            scenario_id: scenario.id.clone(),
            symbol: scenario.symbol.clone(),
            derivative: setup.op.symbol().gprime().to_string(),
            params: scenario.params.clone(),
            n: scenario.n,
            length: scenario.length,
            bump: BumpProfile {
                a: scenario.bump.0,
                b: scenario.bump.1,
            },
            gaussian: scenario.gaussian,
            singular_points: setup.op.singular_set().points().to_vec(),
            margin: setup.op.singular_set().margin(),
            entries: Vec::new(),
            convergence: Vec::new(),
            closed_form: None,
            oracle: None,
            warnings: Vec::new(),
            wall_time_ms: 0.0,
        }
    }

    /// Records a residual at the report's grid; the verdict is `value ≤ tolerance`.
    pub fn record(&mut self, name: impl Into<String>, t: Option<f64>, s: Option<f64>, value: f64, tolerance: f64) {
        let (n, length) = (self.n, self.length);
        self.record_at(name, t, s, n, length, value, tolerance);
    }

    #[allow(clippy::too_many_arguments)]
    pub fn record_at(
        &mut self,
        name: impl Into<String>,
        t: Option<f64>,
        s: Option<f64>,
        n: usize,
        length: f64,
        value: f64,
        tolerance: f64,
    ) {
        self.entries.push(ResidualEntry {
            name: name.into(),
            t,
            s,
            n,
            length,
            value,
            tolerance,
            pass: value <= tolerance,
        });
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }
}
