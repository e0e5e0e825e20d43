//! Numerical checks of time-operator identities on a periodic grid.

pub mod cli;
pub mod error;
pub mod expr;
pub mod grid;
pub mod oracle;
pub mod scalar;
pub mod spectral;
pub mod states;
pub mod timeop;
pub mod verify;

pub use error::{Error, Result};
pub use expr::{parse, Expr, SpectralSymbol};
pub use grid::{Grid, Spectrum, StateVector};
pub use scalar::Real;
pub use spectral::{MultiplierOp, SingularSet};
pub use states::{BumpProfile, GaussianParams, TestVector};
pub use timeop::{ClosedForm, TimeOperator};

pub type Grid64 = Grid<f64>;
pub type StateVector64 = StateVector<f64>;
pub type TimeOperator64 = TimeOperator<f64>;
