//! Affine frequency-division multiplexing (AFDM) baseband simulation with
//! integrated sensing and communication processing chains.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root pin the double-precision instantiation used by the
//! experiment runner.

pub mod channel;
pub mod config;
pub mod detect;
pub mod error;
pub mod frame;
pub mod fullduplex;
pub mod io;
pub mod linalg;
pub mod rng;
pub mod scalar;
pub mod sensing;
pub mod transform;
pub mod waveform;

pub use config::ChirpConfig;
pub use error::{Error, Result};
pub use frame::TimeFrame;
pub use scalar::Real;
pub use transform::{add_cpp, chirp_phase_vector, daft, daft_matrix, idaft, remove_cpp, remove_cpp_symbol, Daft};

pub type Cf64 = num_complex::Complex<f64>;
pub type Cf32 = num_complex::Complex<f32>;

pub type Frame64 = TimeFrame<f64>;
pub type Frame32 = TimeFrame<f32>;
pub type Daft64 = Daft<f64>;
pub type Daft32 = Daft<f32>;
pub type Matrix64 = linalg::CMatrix<f64>;
pub type Matrix32 = linalg::CMatrix<f32>;
pub type Grid64 = waveform::DaftGrid<f64>;
pub type Channel64 = channel::LtvChannel<f64>;
pub type Surface64 = sensing::AmbiguitySurface<f64>;
