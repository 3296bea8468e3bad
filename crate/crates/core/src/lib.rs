//! Simulation and analysis engine for the biased multi-subset qubit-boson
//! model: mean-field phase diagrams and multicritical points, Landau
//! normal-form coefficients, exact low-lying spectra at finite frequency
//! ratio, coupling-quench dynamics with phonon heating, scaling/collapse
//! analysis, and the trapped-ion parameter bridge.

pub mod eigen;
pub mod error;
pub mod ion;
pub mod landau;
pub mod model;
pub mod ode;
pub mod phase;
pub mod quench;
pub mod scaling;
pub mod series;
pub mod sparse;
pub mod spectrum;

pub use error::{Error, Result};
pub use model::{HilbertSpace, ModelParams};
pub use sparse::CsrMatrix;
