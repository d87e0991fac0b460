//! Intensity-difference surface-plasmon-resonance sensing with twin-mode
//! quantum light.
//!
//! - [`materials`]: metal permittivity from tabulated or model data.
//! - [`fresnel`]: TM reflection of the Kretschmann stack, resonance and
//!   inflection search.
//! - [`quantum_states`]: truncated two-mode Fock states and their photon
//!   statistics.
//! - [`metrology`]: signal, noise, index precision and enhancement ratio.
//! - [`fock_oracle`]: brute-force loss-channel moments used to validate
//!   [`metrology`].
//! - [`validation`]: the oracle-vs-analytic check suite.

pub mod fock_oracle;
pub mod fresnel;
pub mod materials;
pub mod metrology;
pub mod optimize;
pub mod quantum_states;
pub mod validation;

pub use fresnel::{IncidenceGeometry, KretschmannStack, ReflectionResult};
pub use materials::{ComplexPermittivity, DispersionTable, MetalModel};
pub use metrology::{ChannelEfficiencies, MeasurementStats, PrecisionResult};
pub use quantum_states::{FockCoefficients, PhotonStatistics, StateFamily};
