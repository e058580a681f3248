//! Data detection and BER simulation.

mod ber;
mod ml;
mod mmse;

pub use ber::{
    estimate_diversity_order, rayleigh_bpsk_ber, run_ber, separating_c1_k, BerCurve, BerPoint, BerSetup, Detector,
    Waveform,
};
pub use ml::{ml_detect, SphereDecoder, ML_BUDGET};
pub use mmse::{mmse_detect, mmse_equalize};
