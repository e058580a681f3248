//! Fisher information and Cramér–Rao bounds for single-target delay and
//! Doppler estimation from an oversampled, pulse-shaped symbol.

use num_complex::Complex;
use rand::Rng;
use rustfft::FftPlanner;

use crate::config::ChirpConfig;
use crate::error::{invalid, Error, Result};
use crate::linalg::{invert_real, symmetric_eigenvalues};
use crate::rng::trial_rng;
use crate::transform::Daft;
use crate::waveform::{modulate_with, pulse_shape, Constellation, RrcConfig};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Target and measurement conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct CrbSetup {
    pub carrier_hz: f64,
    pub snr_db: f64,
    pub rrc: RrcConfig,
    pub constellation: Constellation,
    /// Seconds.
    pub delay: f64,
    /// Hertz.
    pub doppler: f64,
    pub amplitude: Complex<f64>,
}

impl CrbSetup {
    /// Monostatic target at round-trip distance `distance_m` moving at
    /// `speed_mps`; Doppler is `2·v·fc/c`.
    pub fn monostatic(carrier_hz: f64, snr_db: f64, distance_m: f64, speed_mps: f64, constellation: Constellation) -> Self {
        Self {
            carrier_hz,
            snr_db,
            rrc: RrcConfig::default(),
            constellation,
            delay: distance_m / SPEED_OF_LIGHT,
            doppler: 2.0 * speed_mps * carrier_hz / SPEED_OF_LIGHT,
            amplitude: Complex::new(1.0, 0.0),
        }
    }
}

/// FIM over `(τ, ν, Re α, Im α)` and the resulting bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct CrbReport {
    pub fim: [[f64; 4]; 4],
    /// s².
    pub crb_delay: f64,
    /// Hz².
    pub crb_doppler: f64,
    /// m², round-trip distance `c·τ`.
    pub crb_distance: f64,
    /// (m/s)², via `ν = 2·v·fc/c`.
    pub crb_velocity: f64,
    pub echo: Vec<(String, String)>,
}

impl CrbReport {
    fn from_bounds(fim: [[f64; 4]; 4], crb_delay: f64, crb_doppler: f64, cfg: &ChirpConfig, setup: &CrbSetup) -> Self {
        let c = SPEED_OF_LIGHT;
        let v_per_hz = c / (2.0 * setup.carrier_hz);
        let mut echo = vec![
            ("fc_hz".to_string(), format!("{}", setup.carrier_hz)),
            ("n".to_string(), cfg.n().to_string()),
            ("dt_s".to_string(), format!("{}", cfg.sample_interval())),
            ("cpp_len".to_string(), cfg.cpp_len().to_string()),
            ("snr_db".to_string(), format!("{}", setup.snr_db)),
            ("c1".to_string(), format!("{}", cfg.c1())),
            ("c2".to_string(), format!("{}", cfg.c2())),
            ("constellation".to_string(), setup.constellation.name().to_string()),
            ("doppler_convention".to_string(), "monostatic nu=2*v*fc/c, distance=c*tau".to_string()),
            ("rrc_beta".to_string(), format!("{}", setup.rrc.beta)),
            ("rrc_span".to_string(), setup.rrc.span.to_string()),
            ("osf".to_string(), setup.rrc.osf.to_string()),
        ];
        echo.sort();
        Self {
            fim,
            crb_delay,
            crb_doppler,
            crb_distance: c * c * crb_delay,
            crb_velocity: v_per_hz * v_per_hz * crb_doppler,
            echo,
        }
    }
}

/// Noise-free received samples and their parameter derivatives.
pub struct EchoModel {
    /// Sample interval of the oversampled grid.
    pub ts: f64,
    pub mu: Vec<Complex<f64>>,
    pub d_delay: Vec<Complex<f64>>,
    pub d_doppler: Vec<Complex<f64>>,
    /// Mean power of the transmitted frame over its nominal duration.
    pub signal_power: f64,
}

/// Builds `μ(t) = α·s(t − τ)·e^{j2πνt}` for a shaped transmit signal placed
/// in a zero-padded buffer. The delay is applied in the frequency domain,
/// which also gives `∂μ/∂τ` through multiplication by `−j2πf`.
pub fn echo_model(shaped: &[Complex<f64>], ts: f64, nominal_len: usize, delay: f64, doppler: f64, alpha: Complex<f64>) -> EchoModel {
    let shift = delay / ts;
    let len = (shaped.len() + shift.abs().ceil() as usize + 64).next_power_of_two();
    let mut spec = vec![Complex::new(0.0, 0.0); len];
    spec[..shaped.len()].copy_from_slice(shaped);
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(len).process(&mut spec);
    let mut delayed = spec.clone();
    let mut deriv = spec;
    for k in 0..len {
        let f = if k < len / 2 {
            k as f64
        } else if k == len / 2 {
            0.0
        } else {
            k as f64 - len as f64
        } / (len as f64 * ts);
        let ramp = Complex::from_polar(1.0, -std::f64::consts::TAU * f * delay);
        delayed[k] *= ramp / len as f64;
        deriv[k] *= Complex::new(0.0, -std::f64::consts::TAU * f) * ramp / len as f64;
        if k == len / 2 {
            delayed[k] = Complex::new(0.0, 0.0);
        }
    }
    let inv = planner.plan_fft_inverse(len);
    inv.process(&mut delayed);
    inv.process(&mut deriv);
    // time origin at the buffer centre keeps the Doppler column well scaled
    let t0 = len as f64 / 2.0;
    let mut mu = Vec::with_capacity(len);
    let mut d_delay = Vec::with_capacity(len);
    let mut d_doppler = Vec::with_capacity(len);
    for n in 0..len {
        let t = (n as f64 - t0) * ts;
        let rot = alpha * Complex::from_polar(1.0, std::f64::consts::TAU * doppler * t);
        let m = rot * delayed[n];
        mu.push(m);
        d_delay.push(rot * deriv[n]);
        d_doppler.push(Complex::new(0.0, std::f64::consts::TAU * t) * m);
    }
    let signal_power = shaped.iter().map(|v| v.norm_sqr()).sum::<f64>() / nominal_len as f64;
    EchoModel { ts, mu, d_delay, d_doppler, signal_power }
}

/// `(2/σ²)·Re Σ ∂μ*/∂θi · ∂μ/∂θj`.
pub fn fisher_information(model: &EchoModel, alpha: Complex<f64>, noise_var: f64) -> [[f64; 4]; 4] {
    let a_inv = Complex::new(1.0, 0.0) / alpha;
    let cols: [Vec<Complex<f64>>; 4] = [
        model.d_delay.clone(),
        model.d_doppler.clone(),
        model.mu.iter().map(|m| m * a_inv).collect(),
        model.mu.iter().map(|m| m * a_inv * Complex::new(0.0, 1.0)).collect(),
    ];
    let mut fim = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in i..4 {
            let s: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| (a.conj() * b).re).sum();
            fim[i][j] = 2.0 * s / noise_var;
            fim[j][i] = fim[i][j];
        }
    }
    fim
}

/// Inverse of a FIM after diagonal equilibration; the parameters live on
/// scales that differ by many orders of magnitude.
pub fn invert_fim(fim: &[[f64; 4]; 4]) -> Result<[[f64; 4]; 4]> {
    let d: Vec<f64> = (0..4).map(|i| fim[i][i]).collect();
    if d.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Singular("FIM has a non-positive diagonal entry (no information on a parameter)".into()));
    }
    let s: Vec<f64> = d.iter().map(|v| 1.0 / v.sqrt()).collect();
    let scaled: Vec<f64> = (0..16).map(|k| fim[k / 4][k % 4] * s[k / 4] * s[k % 4]).collect();
    let inv = invert_real(&scaled, 4).map_err(|e| Error::Singular(format!("FIM not invertible: {e}")))?;
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = inv[i * 4 + j] * s[i] * s[j];
        }
    }
    Ok(out)
}

fn shaped_symbol(plan: &Daft<f64>, x: &[Complex<f64>], rrc: &RrcConfig) -> Result<(Vec<Complex<f64>>, f64)> {
    let frame = pulse_shape(&modulate_with(plan, x)?, rrc)?;
    Ok((frame.samples, frame.sample_interval))
}

/// Bounds for one known data grid `x`.
pub fn fim_crb(cfg: &ChirpConfig, setup: &CrbSetup, x: &[Complex<f64>]) -> Result<CrbReport> {
    fim_crb_with(&Daft::new(cfg), setup, x)
}

fn fim_crb_with(plan: &Daft<f64>, setup: &CrbSetup, x: &[Complex<f64>]) -> Result<CrbReport> {
    let cfg = plan.config();
    if x.len() != cfg.n() {
        return Err(Error::LengthMismatch { expected: cfg.n(), actual: x.len() });
    }
    if setup.rrc.osf < 2 {
        return Err(invalid("osf", "CRB evaluation needs an oversampled frame"));
    }
    if !(setup.delay >= 0.0 && setup.delay < cfg.symbol_duration()) {
        return Err(invalid("delay", "target delay must lie within the symbol duration"));
    }
    if setup.amplitude.norm() == 0.0 {
        return Err(invalid("amplitude", "target amplitude must be non-zero"));
    }
    let (shaped, ts) = shaped_symbol(plan, x, &setup.rrc)?;
    let nominal = cfg.symbol_len() * setup.rrc.osf;
    let model = echo_model(&shaped, ts, nominal, setup.delay, setup.doppler, setup.amplitude);
    let snr = 10f64.powf(setup.snr_db / 10.0);
    let noise_var = setup.amplitude.norm_sqr() * model.signal_power / snr;
    if !(noise_var > 0.0) {
        return Err(Error::Singular("zero-power signal".into()));
    }
    let fim = fisher_information(&model, setup.amplitude, noise_var);
    let inv = invert_fim(&fim)?;
    Ok(CrbReport::from_bounds(fim, inv[0][0], inv[1][1], cfg, setup))
}

/// Mean bounds over `trials` random data grids. Draw `t` uses stream 0,
/// trial `t` of `seed`, so different configurations see the same data.
pub fn averaged_crb(cfg: &ChirpConfig, setup: &CrbSetup, trials: usize, seed: u64) -> Result<CrbReport> {
    if trials == 0 {
        return Err(invalid("trials", "need at least one draw"));
    }
    let plan = Daft::<f64>::new(cfg);
    let c = setup.constellation;
    let mut fim = [[0.0; 4]; 4];
    let (mut d, mut v) = (0.0, 0.0);
    for t in 0..trials {
        let mut rng = trial_rng(seed, 0, t as u64);
        let x: Vec<Complex<f64>> = (0..cfg.n()).map(|_| c.point(rng.random_range(0..c.order()))).collect();
        let r = fim_crb_with(&plan, setup, &x)?;
        for i in 0..4 {
            for j in 0..4 {
                fim[i][j] += r.fim[i][j] / trials as f64;
            }
        }
        d += r.crb_delay;
        v += r.crb_doppler;
    }
    let mut report = CrbReport::from_bounds(fim, d / trials as f64, v / trials as f64, cfg, setup);
    report.echo.push(("trials".to_string(), trials.to_string()));
    report.echo.push(("seed".to_string(), seed.to_string()));
    report.echo.sort();
    Ok(report)
}

/// One configuration of a `(k, c2)` sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct CrbGridPoint {
    pub k: i64,
    pub c2: f64,
    pub report: CrbReport,
}

/// [`averaged_crb`] over every `k = 2N·c1` and `c2`, all configurations on
/// the same data draws.
pub fn crb_sweep(base: &ChirpConfig, ks: &[i64], c2s: &[f64], setup: &CrbSetup, trials: usize, seed: u64) -> Result<Vec<CrbGridPoint>> {
    use rayon::prelude::*;
    let grid: Vec<(i64, f64)> = ks.iter().flat_map(|&k| c2s.iter().map(move |&c2| (k, c2))).collect();
    grid.into_par_iter()
        .map(|(k, c2)| {
            let cfg = ChirpConfig::with_integer_c1(base.n(), k, c2, base.sample_interval(), base.cpp_len())?;
            Ok(CrbGridPoint { k, c2, report: averaged_crb(&cfg, setup, trials, seed)? })
        })
        .collect()
}

/// `max |x − mean| / mean`.
pub fn relative_fluctuation(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean).abs() / mean).fold(0.0, f64::max)
}

/// Smallest eigenvalue relative to the largest; PSD up to rounding when
/// this is `≥ −1e−9` on the equilibrated matrix.
pub fn fim_min_relative_eigenvalue(fim: &[[f64; 4]; 4]) -> f64 {
    let s: Vec<f64> = (0..4).map(|i| 1.0 / fim[i][i].abs().sqrt().max(1e-300)).collect();
    let m: Vec<f64> = (0..16).map(|k| fim[k / 4][k % 4] * s[k / 4] * s[k % 4]).collect();
    let ev = symmetric_eigenvalues(&m, 4);
    let max = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    min / max
}

/// Squared RMS bandwidth (Hz²) of a root-raised-cosine pulse with symbol
/// period `t` and roll-off `beta`, from its raised-cosine power spectrum.
pub fn rrc_rms_bandwidth_sqr(t: f64, beta: f64) -> f64 {
    use std::f64::consts::PI;
    let f1 = (1.0 - beta) / (2.0 * t);
    let w = beta / t;
    let flat = t * f1.powi(3) / 3.0;
    let roll = 0.5 * t * (((f1 + w).powi(3) - f1.powi(3)) / 3.0 - 4.0 * f1 * w * w / (PI * PI) - 2.0 * w.powi(3) / (PI * PI));
    2.0 * (flat + roll)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig5_setup() -> (ChirpConfig, CrbSetup) {
        let cfg = ChirpConfig::with_integer_c1(128, 5, 0.2, 0.78e-6, 8).unwrap();
        let setup = CrbSetup::monostatic(60e9, 10.0, 1000.0, 300.0 / 3.6, Constellation::Qpsk);
        (cfg, setup)
    }

    fn qpsk(n: usize, seed: u64) -> Vec<Complex<f64>> {
        let mut rng = trial_rng(seed, 0, 0);
        (0..n).map(|_| Constellation::Qpsk.point(rng.random_range(0..4))).collect()
    }

    #[test]
    fn spectral_derivative_matches_central_difference() {
        let (cfg, setup) = fig5_setup();
        let (shaped, ts) = shaped_symbol(&Daft::new(&cfg), &qpsk(128, 1), &setup.rrc).unwrap();
        let nom = cfg.symbol_len() * 8;
        let a = setup.amplitude;
        let m = echo_model(&shaped, ts, nom, setup.delay, setup.doppler, a);
        // fourth-order central differences (Richardson on steps h and 2h)
        let diff = |f: &dyn Fn(f64) -> Vec<Complex<f64>>, h: f64| -> Vec<Complex<f64>> {
            let (p1, m1, p2, m2) = (f(h), f(-h), f(2.0 * h), f(-2.0 * h));
            (0..p1.len()).map(|i| (8.0 * (p1[i] - m1[i]) - (p2[i] - m2[i])) / (12.0 * h)).collect()
        };
        let max_rel = |fd: &[Complex<f64>], d: &[Complex<f64>]| {
            let err = fd.iter().zip(d).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            err / d.iter().map(|v| v.norm()).fold(0.0, f64::max)
        };
        let by_delay = |dh: f64| echo_model(&shaped, ts, nom, setup.delay + dh, setup.doppler, a).mu;
        let e = max_rel(&diff(&by_delay, ts / 100.0), &m.d_delay);
        assert!(e <= 1e-6, "delay derivative {e:e}");
        let by_doppler = |dn: f64| echo_model(&shaped, ts, nom, setup.delay, setup.doppler + dn, a).mu;
        let e = max_rel(&diff(&by_doppler, 1.0 / (cfg.symbol_duration() * 100.0)), &m.d_doppler);
        assert!(e <= 1e-6, "doppler derivative {e:e}");
    }

    #[test]
    fn single_pulse_matches_rms_bandwidth_formula() {
        let rrc = RrcConfig::default();
        let dt = 1e-6;
        let ts = dt / rrc.osf as f64;
        let pulse: Vec<Complex<f64>> = rrc.taps::<f64>().into_iter().map(|v| Complex::new(v, 0.0)).collect();
        let energy: f64 = pulse.iter().map(|v| v.norm_sqr()).sum();
        let alpha = Complex::new(0.7, 0.2);
        let m = echo_model(&pulse, ts, pulse.len(), 3.3 * ts, 0.0, alpha);
        let noise_var = 0.01;
        let inv = invert_fim(&fisher_information(&m, alpha, noise_var)).unwrap();
        let b2 = rrc_rms_bandwidth_sqr(dt, rrc.beta);
        // samples carry energy `energy`; the continuous formula in sample units
        let expected = noise_var / (8.0 * std::f64::consts::PI.powi(2) * b2 * energy * alpha.norm_sqr());
        assert!((inv[0][0] / expected - 1.0).abs() <= 0.01, "{} vs {}", inv[0][0], expected);
    }

    #[test]
    fn fim_is_symmetric_psd() {
        let (cfg, setup) = fig5_setup();
        let r = fim_crb(&cfg, &setup, &qpsk(128, 2)).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(r.fim[i][j], r.fim[j][i]);
            }
        }
        assert!(fim_min_relative_eigenvalue(&r.fim) >= -1e-9);
        assert!(r.crb_delay > 0.0 && r.crb_doppler > 0.0);
    }

    #[test]
    fn bound_scales_inversely_with_snr() {
        let (cfg, mut setup) = fig5_setup();
        let x = qpsk(128, 3);
        let a = fim_crb(&cfg, &setup, &x).unwrap();
        setup.snr_db += 10.0 * 2f64.log10();
        let b = fim_crb(&cfg, &setup, &x).unwrap();
        assert!((a.crb_delay / b.crb_delay - 2.0).abs() <= 2e-9);
        assert!((a.crb_doppler / b.crb_doppler - 2.0).abs() <= 2e-9);
    }

    #[test]
    fn unit_conversions() {
        let (cfg, setup) = fig5_setup();
        let r = fim_crb(&cfg, &setup, &qpsk(128, 4)).unwrap();
        let c = SPEED_OF_LIGHT;
        assert!((r.crb_distance - c * c * r.crb_delay).abs() <= 1e-12 * r.crb_distance);
        let k = c / (2.0 * 60e9);
        assert!((r.crb_velocity - k * k * r.crb_doppler).abs() <= 1e-12 * r.crb_velocity);
        // 300 km/h at 60 GHz
        assert!((setup.doppler - 2.0 * (300.0 / 3.6) * 60e9 / c).abs() < 1e-9);
    }

    #[test]
    fn zero_signal_rejected() {
        let (cfg, setup) = fig5_setup();
        assert!(fim_crb(&cfg, &setup, &vec![Complex::new(0.0, 0.0); 128]).is_err());
    }
}
