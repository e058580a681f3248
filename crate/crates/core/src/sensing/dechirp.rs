//! FMCW-style receiver: dechirp with the pilot chirp, notch the
//! self-interference at DC, low-pass, decimate, and read delay and Doppler
//! from the beat tone.

use num_complex::Complex;
use rand::Rng;
use rustfft::FftPlanner;

use crate::channel::{add_noise, apply_channel, LtvChannel, PathEntry};
use crate::config::ChirpConfig;
use crate::error::{invalid, Error, Result};
use crate::frame::TimeFrame;
use crate::transform::{remove_cpp_symbol, Daft};
use crate::waveform::{build_grid, modulate_symbols, Constellation, GridLayout, Role};

use super::mf::{parabolic_offset, SensingEstimate};

/// Receiver settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DechirpConfig {
    /// Largest delay the receiver must cover, in samples.
    pub max_delay: usize,
    /// Largest Doppler magnitude, in DAFT bins `1/(NΔt)`.
    pub max_doppler_bins: f64,
    /// Decimation factor after the low-pass filter.
    pub decimation: usize,
    /// Zero-padding factor of the fast- and slow-time spectra.
    pub zero_pad: usize,
    pub dc_blocker: bool,
}

impl DechirpConfig {
    pub fn new(max_delay: usize, max_doppler_bins: f64, decimation: usize) -> Self {
        Self { max_delay, max_doppler_bins, decimation, zero_pad: 8, dc_blocker: true }
    }

    /// Half-width `S` of the pilot-echo band in beat bins: `k·lmax + αmax`.
    pub fn cutoff_bins(&self, cfg: &ChirpConfig) -> Result<usize> {
        let k = cfg
            .c1_k()
            .ok_or_else(|| invalid("c1", "dechirping needs 2N·c1 to be an integer"))?;
        Ok((k.unsigned_abs() as f64 * self.max_delay as f64 + self.max_doppler_bins).ceil() as usize)
    }

    /// Checks the layout and decimation against the configured extents.
    pub fn validate(&self, cfg: &ChirpConfig, layout: &GridLayout) -> Result<usize> {
        let n = cfg.n();
        let s = self.cutoff_bins(cfg)?;
        if cfg.c1_k() == Some(0) {
            return Err(invalid("c1", "dechirping needs a chirp slope (c1 ≠ 0)"));
        }
        if self.max_delay > cfg.cpp_len() {
            return Err(invalid("max_delay", "maximum delay exceeds the prefix length"));
        }
        let p = layout
            .pilot_index()
            .ok_or_else(|| Error::InvalidLayout("dechirping needs a pilot".into()))?;
        if layout.n() != n {
            return Err(Error::LengthMismatch { expected: n, actual: layout.n() });
        }
        let guard = (1..n)
            .find(|&d| {
                layout.role((p + d) % n) == Role::Data || layout.role((p + n - d) % n) == Role::Data
            })
            .map_or(n, |d| d - 1);
        if guard < 2 * s {
            return Err(Error::InvalidLayout(format!(
                "guard of {guard} per side is below 2·S = {} for S = {s} beat bins",
                2 * s
            )));
        }
        if self.decimation == 0 || n % self.decimation != 0 {
            return Err(invalid("decimation", format!("must divide N = {n}")));
        }
        if n / self.decimation < 2 * s + 1 {
            return Err(invalid(
                "decimation",
                format!("{} samples per symbol after decimation cannot hold {} beat bins", n / self.decimation, 2 * s + 1),
            ));
        }
        if self.zero_pad == 0 {
            return Err(invalid("zero_pad", "must be positive"));
        }
        Ok(s)
    }
}

/// Power bookkeeping of one pipeline run, averaged over symbols.
#[derive(Clone, Debug, PartialEq)]
pub struct DechirpDiagnostics {
    pub input_power: f64,
    /// Power of the per-symbol means removed by the DC blocker.
    pub dc_power: f64,
    /// Power left after DC blocking and low-pass filtering.
    pub passband_power: f64,
    /// Power discarded by the low-pass filter.
    pub stopband_power: f64,
    /// `passband_power / input_power` in dB.
    pub residual_db: f64,
    /// Estimated beat frequency in bins.
    pub beat_bin: f64,
    pub cutoff_bins: usize,
    /// Decimated fast-time samples per symbol, one row per symbol.
    pub decimated: Vec<Vec<Complex<f64>>>,
}

/// Runs the receiver on `m_symbols` consecutive prefixed symbols.
pub fn dechirp_pipeline(
    rx: &TimeFrame<f64>,
    cfg: &ChirpConfig,
    layout: &GridLayout,
    dsp: &DechirpConfig,
    m_symbols: usize,
) -> Result<(SensingEstimate, DechirpDiagnostics)> {
    let s = dsp.validate(cfg, layout)?;
    if m_symbols == 0 {
        return Err(invalid("m_symbols", "need at least one symbol"));
    }
    if rx.osf != 1 {
        return Err(invalid("rx", "the dechirping receiver runs on symbol-rate frames"));
    }
    let n = cfg.n();
    let nf = n as f64;
    let k = cfg.c1_k().expect("validated") as f64;
    let p = layout.pilot_index().expect("validated");
    let plan = Daft::<f64>::new(cfg);
    let mut unit = vec![Complex::new(0.0, 0.0); n];
    unit[p] = Complex::new(1.0, 0.0);
    let reference: Vec<Complex<f64>> = plan.idaft(&unit)?.iter().map(|v| v.conj() * nf.sqrt()).collect();

    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let kd = n / dsp.decimation;
    let mut diag = DechirpDiagnostics {
        input_power: 0.0,
        dc_power: 0.0,
        passband_power: 0.0,
        stopband_power: 0.0,
        residual_db: f64::NEG_INFINITY,
        beat_bin: 0.0,
        cutoff_bins: s,
        decimated: Vec::with_capacity(m_symbols),
    };
    for m in 0..m_symbols {
        let body = remove_cpp_symbol(rx, cfg, m)?;
        diag.input_power += body.iter().map(|v| v.norm_sqr()).sum::<f64>() / nf;
        let mut z: Vec<Complex<f64>> = body.iter().zip(&reference).map(|(a, b)| a * b).collect();
        if dsp.dc_blocker {
            let mean = z.iter().sum::<Complex<f64>>() / nf;
            diag.dc_power += mean.norm_sqr();
            z.iter_mut().for_each(|v| *v -= mean);
        }
        fwd.process(&mut z);
        for (bin, v) in z.iter_mut().enumerate() {
            let f = if bin <= n / 2 { bin as i64 } else { bin as i64 - n as i64 };
            let e = v.norm_sqr() / (nf * nf);
            if f.unsigned_abs() as usize > s {
                diag.stopband_power += e;
                *v = Complex::new(0.0, 0.0);
            } else {
                diag.passband_power += e;
            }
        }
        inv.process(&mut z);
        diag.decimated.push((0..kd).map(|i| z[i * dsp.decimation] / nf).collect());
    }
    let mf = m_symbols as f64;
    diag.input_power /= mf;
    diag.dc_power /= mf;
    diag.passband_power /= mf;
    diag.stopband_power /= mf;
    diag.residual_db = 10.0 * (diag.passband_power / diag.input_power).log10();

    // fast time: non-coherent sum of zero-padded spectra; bins ↔ beat bins
    let pad = kd * dsp.zero_pad;
    let fft_pad = planner.plan_fft_forward(pad);
    let mut acc = vec![0.0; pad];
    for u in &diag.decimated {
        let mut buf = vec![Complex::new(0.0, 0.0); pad];
        buf[..kd].copy_from_slice(u);
        fft_pad.process(&mut buf);
        for (a, v) in acc.iter_mut().zip(&buf) {
            *a += v.norm_sqr();
        }
    }
    let to_bin = |i: usize| {
        let f = if i < pad / 2 { i as f64 } else { i as f64 - pad as f64 };
        f / dsp.zero_pad as f64
    };
    let limit = s as f64 + 0.5;
    let best = (0..pad)
        .filter(|&i| to_bin(i).abs() <= limit)
        .max_by(|&a, &b| acc[a].partial_cmp(&acc[b]).unwrap())
        .ok_or_else(|| Error::InsufficientStatistics("empty beat search band".into()))?;
    let beat = to_bin(best)
        + parabolic_offset(acc[(best + pad - 1) % pad].sqrt(), acc[best].sqrt(), acc[(best + 1) % pad].sqrt())
            / dsp.zero_pad as f64;
    diag.beat_bin = beat;

    // slow time: beat-tone phasor per symbol across the frame
    let phasors: Vec<Complex<f64>> = diag
        .decimated
        .iter()
        .map(|u| {
            u.iter()
                .enumerate()
                .map(|(i, v)| v * Complex::from_polar(1.0, -std::f64::consts::TAU * beat * (i * dsp.decimation) as f64 / nf))
                .sum()
        })
        .collect();
    let sym_len = cfg.symbol_len() as f64;
    let period = 1.0 / sym_len;
    let nu_slow = if m_symbols == 1 {
        0.0
    } else {
        let spad = (m_symbols * dsp.zero_pad).next_power_of_two();
        let mut buf = vec![Complex::new(0.0, 0.0); spad];
        buf[..m_symbols].copy_from_slice(&phasors);
        planner.plan_fft_forward(spad).process(&mut buf);
        let mag: Vec<f64> = buf.iter().map(|v| v.norm()).collect();
        let i = (0..spad).max_by(|&a, &b| mag[a].partial_cmp(&mag[b]).unwrap()).unwrap();
        let off = parabolic_offset(mag[(i + spad - 1) % spad], mag[i], mag[(i + 1) % spad]);
        let f = if i < spad / 2 { i as f64 } else { i as f64 - spad as f64 };
        (f + off) / spad as f64 * period
    };

    // delay–Doppler coupling: β = α − k·l; choose the delay whose implied
    // Doppler agrees with the slow-time phase progression
    let mut best_nu = 0.0;
    let mut best_err = f64::INFINITY;
    for l in 0..=dsp.max_delay as i64 {
        let nu_l = (beat + k * l as f64) / nf;
        // a single symbol carries no slow-time phase: take the slowest target
        let (nu_u, err) = if m_symbols == 1 {
            (nu_l, nu_l.abs())
        } else {
            let u = nu_slow + period * ((nu_l - nu_slow) / period).round();
            (u, (u - nu_l).abs())
        };
        if err < best_err {
            best_err = err;
            best_nu = nu_u;
        }
    }
    let alpha = best_nu * nf;
    let delay_samples = (alpha - beat) / k;
    let dt = cfg.sample_interval();
    let peak = acc[best].sqrt();
    let estimate = SensingEstimate {
        delay_hat: delay_samples * dt,
        doppler_hat: best_nu / dt,
        peak_magnitude: peak,
        method: "dechirp".to_string(),
        ambiguous_grid: (alpha.abs() > dsp.max_doppler_bins + 0.5)
            || !(-0.5..=dsp.max_delay as f64 + 0.5).contains(&delay_samples),
    };
    Ok((estimate, diag))
}

/// Components of a synthetic monostatic receive frame.
#[derive(Clone, Debug)]
pub struct MonostaticScene {
    pub rx: TimeFrame<f64>,
    pub si: TimeFrame<f64>,
    pub echo: TimeFrame<f64>,
    pub echo_pilot_only: TimeFrame<f64>,
    pub noise_var: f64,
}

/// Parameters of [`synthesize_monostatic`].
#[derive(Clone, Debug)]
pub struct SceneSpec {
    pub constellation: Constellation,
    pub m_symbols: usize,
    /// Self-interference gain (delay 0, no Doppler).
    pub si_gain: Complex<f64>,
    pub target: Option<PathEntry<f64>>,
    /// Echo-to-noise ratio per sample, relative to the mean transmit power.
    pub snr_db: f64,
}

/// Transmit `m_symbols` random-data symbols and form SI + echo + noise.
pub fn synthesize_monostatic<R: Rng + ?Sized>(
    cfg: &ChirpConfig,
    layout: &GridLayout,
    spec: &SceneSpec,
    rng: &mut R,
) -> Result<MonostaticScene> {
    let plan = Daft::<f64>::new(cfg);
    let c = spec.constellation;
    let nd = layout.count(Role::Data);
    let mut grids = Vec::with_capacity(spec.m_symbols);
    let mut pilots = Vec::with_capacity(spec.m_symbols);
    for _ in 0..spec.m_symbols {
        let data: Vec<Complex<f64>> = (0..nd).map(|_| c.point(rng.random_range(0..c.order()))).collect();
        grids.push(build_grid(layout, &data, layout.pilot_value())?.symbols);
        pilots.push(build_grid(layout, &vec![Complex::new(0.0, 0.0); nd], layout.pilot_value())?.symbols);
    }
    let tx = modulate_symbols(&plan, &grids)?;
    let tx_pilot = modulate_symbols(&plan, &pilots)?;
    let si = apply_channel(&tx, &LtvChannel::single(spec.si_gain, 0.0, 0.0))?;
    let zero = TimeFrame::new(vec![Complex::new(0.0, 0.0); tx.len()], 1, true, tx.sample_interval);
    let (echo, echo_pilot_only, noise_var) = match spec.target {
        Some(t) => {
            let ch = LtvChannel::new(vec![t])?;
            let e = apply_channel(&tx, &ch)?;
            let ep = apply_channel(&tx_pilot, &ch)?;
            let nv = t.gain.norm_sqr() * tx.power() / 10f64.powf(spec.snr_db / 10.0);
            (e, ep, nv)
        }
        None => (zero.clone(), zero, 0.0),
    };
    let clean = si.superpose(&echo);
    let rx = if noise_var > 0.0 && spec.snr_db.is_finite() { add_noise(&clean, noise_var, rng) } else { clean };
    Ok(MonostaticScene { rx, si, echo, echo_pilot_only, noise_var })
}
