//! Sensing: ambiguity functions, matched filtering, Cramér–Rao bounds and
//! the dechirping receiver.

mod af;
mod crb;
mod dechirp;
mod mf;

pub use af::{
    ambiguity_function, ambiguity_function_direct, depression_line, expected_squared_af, unambiguity_parallelogram,
    uniform_axis, AmbiguitySurface, ExpectedAfSetup, Parallelogram, SurfaceKind,
};
pub use crb::{
    averaged_crb, crb_sweep, echo_model, fim_crb, fim_min_relative_eigenvalue, fisher_information, invert_fim,
    relative_fluctuation, rrc_rms_bandwidth_sqr, CrbGridPoint, CrbReport, CrbSetup, EchoModel, SPEED_OF_LIGHT,
};
pub use dechirp::{dechirp_pipeline, synthesize_monostatic, DechirpConfig, DechirpDiagnostics, MonostaticScene, SceneSpec};
pub use mf::{detect_peaks, estimate_peak, matched_filter, parabolic_offset, MfDomain, SensingEstimate};
