//! Monte Carlo bit-error-rate harness.

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;

use crate::channel::{apply_channel, effective_matrix_with, ChannelSpec};
use crate::config::ChirpConfig;
use crate::error::{invalid, Error, Result};
use crate::rng::trial_rng;
use crate::transform::Daft;
use crate::waveform::{demodulate, modulate_with, Constellation};

use super::{ml_detect, mmse_detect, SphereDecoder};

/// Chirp parameters of the waveform under test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Waveform {
    Ofdm,
    Ocdm,
    Afdm { c1: f64, c2: f64 },
}

impl Waveform {
    pub fn label(&self) -> &'static str {
        match self {
            Waveform::Ofdm => "ofdm",
            Waveform::Ocdm => "ocdm",
            Waveform::Afdm { .. } => "afdm",
        }
    }

    pub fn config(&self, n: usize, sample_interval: f64, cpp_len: usize) -> Result<ChirpConfig> {
        match *self {
            Waveform::Ofdm => ChirpConfig::ofdm(n, sample_interval, cpp_len),
            Waveform::Ocdm => ChirpConfig::ocdm(n, sample_interval, cpp_len),
            Waveform::Afdm { c1, c2 } => ChirpConfig::new(n, c1, c2, sample_interval, cpp_len),
        }
    }
}

/// Smallest `k ≥ 1` such that every `(l, α)` with `0 ≤ l ≤ max_delay` and
/// `|α| ≤ max_alpha` lands on its own DAFT shift `(α − k·l) mod N`.
pub fn separating_c1_k(n: usize, max_delay: usize, max_alpha: usize) -> Option<i64> {
    let n_i = n as i64;
    (1..n_i).find(|&k| {
        let mut seen = vec![false; n];
        for l in 0..=max_delay as i64 {
            for a in -(max_alpha as i64)..=max_alpha as i64 {
                let s = (a - k * l).rem_euclid(n_i) as usize;
                if seen[s] {
                    return false;
                }
                seen[s] = true;
            }
        }
        true
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Detector {
    /// Exhaustive enumeration.
    Ml,
    /// Sphere decoding; the same ML decision, found faster.
    Sphere,
    Mmse,
}

impl Detector {
    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "ml" => Ok(Detector::Ml),
            "sphere" => Ok(Detector::Sphere),
            "mmse" => Ok(Detector::Mmse),
            other => Err(invalid("detector", format!("unknown detector '{other}' (ml, sphere, mmse)"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Detector::Ml => "ml",
            Detector::Sphere => "sphere",
            Detector::Mmse => "mmse",
        }
    }
}

/// Fixed part of a BER experiment.
#[derive(Clone, Debug)]
pub struct BerSetup {
    pub n: usize,
    pub constellation: Constellation,
    pub channel: ChannelSpec,
    pub cpp_len: usize,
    pub sample_interval: f64,
    pub detector: Detector,
    pub min_errors: u64,
    pub max_trials: u64,
    /// Trials per scheduling batch; stopping is checked between batches.
    pub batch: u64,
    pub parallel: bool,
}

impl BerSetup {
    /// Diversity comparison scenario: N = 12, BPSK, four paths, delays up to
    /// two samples and Doppler up to one bin on the integer grid.
    pub fn diversity_scenario() -> Self {
        let n = 12;
        Self {
            n,
            constellation: Constellation::Bpsk,
            channel: ChannelSpec::comm(4, 2.0, 1.0 / n as f64).with_integer_doppler(n),
            cpp_len: 2,
            sample_interval: 1.0 / 24e6,
            detector: Detector::Sphere,
            min_errors: 200,
            max_trials: 4_000_000,
            batch: 2048,
            parallel: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        if self.batch == 0 {
            return Err(invalid("batch", "must be positive"));
        }
        if self.max_trials == 0 {
            return Err(invalid("max_trials", "must be positive"));
        }
        if (self.channel.max_delay.ceil() as usize) > self.cpp_len {
            return Err(invalid("cpp_len", "prefix shorter than the maximum delay"));
        }
        Ok(())
    }
}

/// One SNR point of a curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BerPoint {
    pub snr_db: f64,
    pub errors: u64,
    pub bits: u64,
    pub trials: u64,
}

impl BerPoint {
    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.errors as f64 / self.bits as f64
        }
    }

    /// Normal-approximation 95% half-width.
    pub fn ci95(&self) -> f64 {
        if self.bits == 0 {
            return 0.0;
        }
        let p = self.ber();
        1.96 * (p * (1.0 - p) / self.bits as f64).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BerCurve {
    pub label: String,
    pub points: Vec<BerPoint>,
    /// Effective settings, as sorted key/value pairs.
    pub metadata: Vec<(String, String)>,
}

impl BerCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("snr_db,ber,errors,bits,ci95\n");
        for p in &self.points {
            s.push_str(&format!("{},{:.6e},{},{},{:.6e}\n", p.snr_db, p.ber(), p.errors, p.bits, p.ci95()));
        }
        s
    }
}

fn trial(
    setup: &BerSetup,
    plan: &Daft<f64>,
    sphere: &SphereDecoder,
    noise_var: f64,
    seed: u64,
    stream: u64,
    index: u64,
) -> Result<u64> {
    let mut rng = trial_rng(seed, stream, index);
    let ch = setup.channel.draw::<f64, _>(&mut rng)?;
    let c = setup.constellation;
    let bits: Vec<u8> = (0..setup.n * c.bits_per_symbol()).map(|_| rng.random_range(0..2u8)).collect();
    let x = c.map_bits::<f64>(&bits)?;
    let tx = modulate_with(plan, &x)?;
    let mut rx = apply_channel(&tx, &ch)?;
    if noise_var > 0.0 {
        let s = (noise_var / 2.0).sqrt();
        for v in rx.samples.iter_mut() {
            let (a, b): (f64, f64) = (
                rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng),
                rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng),
            );
            *v += Complex::new(a * s, b * s);
        }
    }
    let y = demodulate(plan, &rx, 0)?;
    let m = effective_matrix_with(plan, &ch)?;
    let decided = match setup.detector {
        Detector::Ml => ml_detect(&y, &m, c)?,
        Detector::Sphere => sphere.detect(&y, &m)?,
        Detector::Mmse => mmse_detect(&y, &m, c, noise_var.max(1e-12))?,
    };
    Ok(decided.iter().zip(&bits).filter(|(a, b)| a != b).count() as u64)
}

/// Simulates one waveform over an SNR list. SNR is the per-symbol
/// `Es/N0` with unit-energy symbols, so the noise variance is `10^(−snr/10)`
/// in both time and DAFT domains. Each SNR index is its own random stream,
/// shared across waveforms so that curves see the same channels and bits.
pub fn run_ber(setup: &BerSetup, waveform: Waveform, snr_db: &[f64], seed: u64) -> Result<BerCurve> {
    setup.validate()?;
    let cfg = waveform.config(setup.n, setup.sample_interval, setup.cpp_len)?;
    let plan = Daft::<f64>::new(&cfg);
    let sphere = SphereDecoder::new(setup.constellation);
    let bits_per_trial = (setup.n * setup.constellation.bits_per_symbol()) as u64;
    let mut points = Vec::with_capacity(snr_db.len());
    for (si, &snr) in snr_db.iter().enumerate() {
        let noise_var = if snr == f64::INFINITY { 0.0 } else { 10f64.powf(-snr / 10.0) };
        let mut errors = 0u64;
        let mut trials = 0u64;
        while trials < setup.max_trials && errors < setup.min_errors {
            let end = (trials + setup.batch).min(setup.max_trials);
            let run = |i: u64| trial(setup, &plan, &sphere, noise_var, seed, si as u64, i);
            let batch: Result<u64> = if setup.parallel {
                (trials..end).into_par_iter().map(run).try_reduce(|| 0, |a, b| Ok(a + b))
            } else {
                (trials..end).map(run).sum()
            };
            errors += batch?;
            trials = end;
            if snr == f64::INFINITY {
                break;
            }
        }
        points.push(BerPoint { snr_db: snr, errors, bits: trials * bits_per_trial, trials });
    }
    let mut metadata = vec![
        ("waveform".to_string(), waveform.label().to_string()),
        ("c1".to_string(), format!("{}", cfg.c1())),
        ("c2".to_string(), format!("{}", cfg.c2())),
        ("n".to_string(), setup.n.to_string()),
        ("constellation".to_string(), setup.constellation.name().to_string()),
        ("detector".to_string(), setup.detector.name().to_string()),
        ("paths".to_string(), setup.channel.paths.to_string()),
        ("max_delay".to_string(), setup.channel.max_delay.to_string()),
        ("max_doppler".to_string(), setup.channel.max_doppler.to_string()),
        ("doppler_grid".to_string(), setup.channel.doppler_mode.name().to_string()),
        ("delay_grid".to_string(), setup.channel.delay_mode.name().to_string()),
        ("seed".to_string(), seed.to_string()),
    ];
    if let Some(k) = cfg.c1_k() {
        metadata.push(("c1_k".to_string(), k.to_string()));
    }
    metadata.sort();
    Ok(BerCurve { label: waveform.label().to_string(), points, metadata })
}

/// Negated least-squares slope of `log10(BER)` against `log10(SNR)` over the
/// points in `[lo_db, hi_db]` that have at least `min_errors` errors.
pub fn estimate_diversity_order(curve: &BerCurve, lo_db: f64, hi_db: f64, min_errors: u64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter(|p| p.snr_db >= lo_db && p.snr_db <= hi_db && p.errors >= min_errors && p.errors > 0)
        .map(|p| (p.snr_db / 10.0, p.ber().log10()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientStatistics(format!(
            "{} usable points in [{lo_db}, {hi_db}] dB, need 2 with at least {min_errors} errors",
            pts.len()
        )));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(-sxy / sxx)
}

/// Average BPSK bit error probability on a flat Rayleigh channel with mean
/// SNR `gamma` (linear).
pub fn rayleigh_bpsk_ber(gamma: f64) -> f64 {
    0.5 * (1.0 - (gamma / (1.0 + gamma)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(points: &[(f64, u64, u64)]) -> BerCurve {
        BerCurve {
            label: "t".into(),
            points: points.iter().map(|&(s, e, b)| BerPoint { snr_db: s, errors: e, bits: b, trials: 1 }).collect(),
            metadata: vec![],
        }
    }

    #[test]
    fn separating_rule_for_small_grid() {
        // N = 12, l ≤ 2, |α| ≤ 1: k = 1, 2 collide, k = 3 separates
        assert_eq!(separating_c1_k(12, 2, 1), Some(3));
        assert_eq!(separating_c1_k(12, 0, 1), Some(1));
        // 3·5 = 15 cells never fit 12 shifts
        assert_eq!(separating_c1_k(12, 4, 1), None);
    }

    #[test]
    fn synthetic_power_law_slope() {
        // BER = SNR^-2 exactly
        let pts: Vec<(f64, u64, u64)> = [0.0, 5.0, 10.0, 15.0]
            .iter()
            .map(|&s: &f64| {
                let ber = 10f64.powf(-2.0 * s / 10.0);
                let bits = 1u64 << 50;
                (s, (ber * bits as f64).round() as u64, bits)
            })
            .collect();
        let d = estimate_diversity_order(&curve(&pts), 0.0, 20.0, 200).unwrap();
        assert!((d - 2.0).abs() < 1e-6, "{d}");
    }

    #[test]
    fn analytic_rayleigh_slope_near_one() {
        let bits = 1u64 << 50;
        let pts: Vec<(f64, u64, u64)> = [20.0, 25.0, 30.0]
            .iter()
            .map(|&s: &f64| (s, (rayleigh_bpsk_ber(10f64.powf(s / 10.0)) * bits as f64) as u64, bits))
            .collect();
        let d = estimate_diversity_order(&curve(&pts), 20.0, 30.0, 200).unwrap();
        assert!((d - 1.0).abs() < 0.02, "{d}");
    }

    #[test]
    fn insufficient_points_rejected() {
        let c = curve(&[(0.0, 500, 1000), (10.0, 50, 100000)]);
        assert!(matches!(estimate_diversity_order(&c, 0.0, 10.0, 200), Err(Error::InsufficientStatistics(_))));
    }

    #[test]
    fn ci_and_ber_consistent() {
        let p = BerPoint { snr_db: 0.0, errors: 250, bits: 1000, trials: 1 };
        assert_eq!(p.ber(), 0.25);
        assert!((p.ci95() - 1.96 * (0.25f64 * 0.75 / 1000.0).sqrt()).abs() < 1e-15);
    }
}
