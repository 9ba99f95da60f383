//! Robust battery dispatch under cloud-cover uncertainty.
//!
//! Cloud cover follows a bounded mean-reverting diffusion driving the solar
//! influx into a battery. The operator minimizes an Orlicz-risk of the
//! discharge disutility under drift ambiguity; the value solves an HJB
//! equation handled here by an explicit monotone finite-difference scheme.
//!
//! The numerical modules are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod hjb;
pub mod mc;
pub mod meteo;
pub mod optim;
pub mod oracle;
pub mod orlicz;
pub mod quad;
pub mod scalar;
pub mod system;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Cloud = meteo::CloudParams<f64>;
pub type Density = meteo::DensityTable<f64>;
pub type Irradiance = meteo::IrradianceConfig<f64>;
pub type Influx = meteo::InfluxParams<f64>;
pub type Battery = system::BatteryConfig<f64>;
pub type Penalty = system::PenaltyWeights<f64>;
pub type Target = system::TargetSchedule<f64>;
pub type Orlicz = orlicz::OrliczSpec<f64>;
pub type Problem = hjb::ProblemSpec<f64>;
pub type Lattice = hjb::Grid<f64>;
pub type Scheme = hjb::SchemeOptions<f64>;
pub type Solution = hjb::SolutionFields<f64>;
pub type Cir = oracle::CIRParams<f64>;
