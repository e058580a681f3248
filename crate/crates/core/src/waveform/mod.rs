//! Constellations, DAFT-domain grid layouts, modulation and pulse shaping.

mod constellation;
mod grid;
mod rrc;

pub use constellation::Constellation;
pub use grid::{build_grid, DaftGrid, GridLayout, Role};
pub use rrc::{convolve, matched_downsample, pulse_shape, rrc_impulse, RrcConfig};

use num_complex::Complex;

use crate::config::ChirpConfig;
use crate::error::{Error, Result};
use crate::frame::TimeFrame;
use crate::scalar::Real;
use crate::transform::{add_cpp, remove_cpp_symbol, Daft};

/// IDAFT followed by the chirp-periodic prefix: one symbol-rate frame.
pub fn modulate<T: Real>(grid: &DaftGrid<T>, cfg: &ChirpConfig) -> Result<TimeFrame<T>> {
    modulate_with(&Daft::new(cfg), &grid.symbols)
}

/// [`modulate`] with a reusable transform plan.
pub fn modulate_with<T: Real>(plan: &Daft<T>, symbols: &[Complex<T>]) -> Result<TimeFrame<T>> {
    let cfg = plan.config();
    let body = plan.idaft(symbols)?;
    Ok(TimeFrame::new(add_cpp(&body, cfg)?, 1, true, cfg.sample_interval()))
}

/// Modulates several grids back to back.
pub fn modulate_symbols<T: Real>(plan: &Daft<T>, grids: &[Vec<Complex<T>>]) -> Result<TimeFrame<T>> {
    let cfg = plan.config();
    let mut samples = Vec::with_capacity(grids.len() * cfg.symbol_len());
    for g in grids {
        samples.extend(modulate_with(plan, g)?.samples);
    }
    Ok(TimeFrame::new(samples, 1, true, cfg.sample_interval()))
}

/// Drops the prefix of symbol `k` and applies the DAFT.
pub fn demodulate<T: Real>(plan: &Daft<T>, frame: &TimeFrame<T>, k: usize) -> Result<Vec<Complex<T>>> {
    if frame.osf != 1 {
        return Err(crate::error::invalid("frame", "demodulation expects a symbol-rate frame"));
    }
    plan.daft(&remove_cpp_symbol(frame, plan.config(), k)?)
}

/// Time waveform of a unit DAFT-domain impulse at index `m` (no prefix).
/// With `osf == 1` these are the raw symbol-rate samples; otherwise they are
/// RRC-shaped with the default roll-off and span.
pub fn subcarrier_waveform<T: Real>(m: usize, cfg: &ChirpConfig, osf: usize) -> Result<TimeFrame<T>> {
    let n = cfg.n();
    if m >= n {
        return Err(Error::IndexOutOfRange { index: m, len: n });
    }
    let mut x = vec![Complex::new(T::zero(), T::zero()); n];
    x[m] = Complex::new(T::one(), T::zero());
    let body = Daft::new(cfg).idaft(&x)?;
    let frame = TimeFrame::new(body, 1, false, cfg.sample_interval());
    if osf == 1 {
        Ok(frame)
    } else {
        let rrc = RrcConfig { osf, ..RrcConfig::default() };
        pulse_shape(&frame, &rrc)
    }
}
