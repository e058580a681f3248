//! Root-raised-cosine pulse shaping.

use num_complex::Complex;

use crate::error::{invalid, Result};
use crate::frame::TimeFrame;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RrcConfig {
    pub beta: f64,
    /// Filter length in symbol intervals.
    pub span: usize,
    pub osf: usize,
}

impl Default for RrcConfig {
    fn default() -> Self {
        Self { beta: 0.25, span: 24, osf: 8 }
    }
}

impl RrcConfig {
    pub fn new(beta: f64, span: usize, osf: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(invalid("beta", format!("roll-off {beta} outside [0, 1]")));
        }
        if span == 0 || span % 2 != 0 {
            return Err(invalid("span", "span must be a positive even number of symbols"));
        }
        if osf == 0 {
            return Err(invalid("osf", "oversampling factor must be positive"));
        }
        Ok(Self { beta, span, osf })
    }

    pub fn num_taps(&self) -> usize {
        self.span * self.osf + 1
    }

    /// Group delay in output samples.
    pub fn delay(&self) -> usize {
        self.span * self.osf / 2
    }

    /// Unit-energy, even-symmetric taps.
    pub fn taps<T: Real>(&self) -> Vec<T> {
        let half = self.delay() as f64;
        let raw: Vec<f64> = (0..self.num_taps())
            .map(|i| rrc_impulse((i as f64 - half) / self.osf as f64, self.beta))
            .collect();
        let e = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        raw.iter().map(|v| T::lit(v / e)).collect()
    }
}

/// Continuous RRC impulse response at `t` symbol periods (unnormalized).
pub fn rrc_impulse(t: f64, beta: f64) -> f64 {
    use std::f64::consts::PI;
    if t == 0.0 {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    if beta > 0.0 && (4.0 * beta * t.abs() - 1.0).abs() < 1e-12 {
        let a = PI / (4.0 * beta);
        return beta / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * t * (1.0 - beta)).sin() + 4.0 * beta * t * (PI * t * (1.0 + beta)).cos();
    let den = PI * t * (1.0 - (4.0 * beta * t).powi(2));
    num / den
}

/// Full linear convolution of complex samples with real taps.
pub fn convolve<T: Real>(x: &[Complex<T>], taps: &[T]) -> Vec<Complex<T>> {
    if x.is_empty() || taps.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex::new(T::zero(), T::zero()); x.len() + taps.len() - 1];
    for (i, &v) in x.iter().enumerate() {
        if v.re == T::zero() && v.im == T::zero() {
            continue;
        }
        for (j, &h) in taps.iter().enumerate() {
            out[i + j] = out[i + j] + v * h;
        }
    }
    out
}

/// Upsamples a symbol-rate frame by `rrc.osf` and filters it. The output
/// carries the filter tails: symbol `k` peaks at sample `k·osf + delay`.
pub fn pulse_shape<T: Real>(frame: &TimeFrame<T>, rrc: &RrcConfig) -> Result<TimeFrame<T>> {
    if frame.osf != 1 {
        return Err(invalid("frame", "pulse shaping expects a symbol-rate frame"));
    }
    let osf = rrc.osf;
    let mut up = vec![Complex::new(T::zero(), T::zero()); frame.len() * osf];
    for (i, v) in frame.samples.iter().enumerate() {
        up[i * osf] = *v;
    }
    // the tail after the last symbol is only the filter's own decay
    let taps = rrc.taps::<T>();
    let mut shaped = convolve(&up, &taps);
    shaped.truncate(frame.len() * osf + taps.len() - osf);
    Ok(TimeFrame::new(shaped, osf, frame.has_cpp, frame.sample_interval / osf as f64))
}

/// Matched filter followed by symbol-instant sampling; inverse of
/// [`pulse_shape`] up to finite-span ISI.
pub fn matched_downsample<T: Real>(shaped: &TimeFrame<T>, rrc: &RrcConfig, n_symbols: usize) -> Result<TimeFrame<T>> {
    if shaped.osf != rrc.osf {
        return Err(invalid("frame", "oversampling factor differs from filter configuration"));
    }
    let taps = rrc.taps::<T>();
    let filtered = convolve(&shaped.samples, &taps);
    let start = 2 * rrc.delay();
    let samples = (0..n_symbols)
        .map(|k| filtered.get(start + k * rrc.osf).copied().unwrap_or_else(|| Complex::new(T::zero(), T::zero())))
        .collect();
    Ok(TimeFrame::new(samples, 1, shaped.has_cpp, shaped.sample_interval * rrc.osf as f64))
}
