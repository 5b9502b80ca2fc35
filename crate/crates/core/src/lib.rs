//! Rough-path driven quadratic Hamiltonians.
//!
//! Builds the affine symplectic flow of `H(t) + β̇ K` for a Hölder driver `β`
//! by solving an integral equation in which `β` only enters through point
//! values, the exact propagator kernel (Herman–Kluk Gaussian integral and the
//! Mehler/Van Vleck form), closed-form Gaussian propagation, grid propagation,
//! and a mild nonlinear Schrödinger solver on top of the rough linear part.
//!
//! Everything numerical is generic over [`Real`]; the `*64` aliases below fix
//! the scalar to `f64`, which is what the tolerances in the tests assume.

pub mod error;
pub mod flow;
pub mod hamiltonians;
pub mod kernel;
pub mod io;
pub mod linalg;
pub mod nls;
pub mod paths;
pub mod propagator;
pub mod scenario;
pub mod scalar;

pub use error::{Error, Result};
pub use flow::{AffineSymplecticMap, FlowOptions};
pub use hamiltonians::{HypothesisReport, NoiseHamiltonian, QuadraticHamiltonian};
pub use kernel::{KernelClosedForm, SiegelMatrix};
pub use nls::{NlsConfig, NlsMethod, Trajectory};
pub use paths::{DriverPath, TimeGrid};
pub use propagator::{CauchyReport, GaussianState, KernelMethod, WaveFunction};
pub use scenario::{ConfigError, Scenario};
pub use scalar::Real;

pub type TimeGrid64 = TimeGrid<f64>;
pub type DriverPath64 = DriverPath<f64>;
pub type Hamiltonian64 = QuadraticHamiltonian<f64>;
pub type Noise64 = NoiseHamiltonian<f64>;
pub type Flow64 = AffineSymplecticMap<f64>;
pub type Kernel64 = KernelClosedForm<f64>;
pub type Siegel64 = SiegelMatrix<f64>;
pub type WaveFunction64 = WaveFunction<f64>;
pub type GaussianState64 = GaussianState<f64>;
pub type NlsConfig64 = NlsConfig<f64>;

/// Library version embedded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
