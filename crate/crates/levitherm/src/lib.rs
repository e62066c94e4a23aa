//! Thermalization of the internal energy of a levitated nanoparticle coupled
//! to a thermal electromagnetic field: the quasi-equilibrium radiative
//! baseline and an exactly solvable coupled-oscillator model (propagators,
//! noise kernels, asymptotics, specific heat), with plot-ready outputs.

pub mod constants;
pub mod energy;
pub mod error;
pub mod expsum;
pub mod fed;
pub mod kernels;
pub mod matching;
pub mod materials;
pub mod ode;
pub mod propagators;
pub mod quad;
pub mod roots;

pub use constants::{bose_occupation, thermal_coth, PhysConstants};
pub use error::{Error, Result};
pub use expsum::{ExpSum, ExpTerm};
pub use matching::{ModelParams, TemperatureSet};
pub use materials::{Geometry, MaterialSpec};
pub use quad::{QuadratureSpec, QuadResult};
