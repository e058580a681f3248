//! Matched filtering against delay/Doppler-shifted copies of the known
//! transmit symbol, in the time domain or after DAFT demodulation.

use num_complex::Complex;

use crate::channel::{path_matrix, PathEntry};
use crate::config::ChirpConfig;
use crate::error::{invalid, Error, Result};
use crate::frame::TimeFrame;
use crate::scalar::{cis, inner, Real};
use crate::transform::{remove_cpp, Daft};
use crate::waveform::modulate_with;

use super::af::{AmbiguitySurface, SurfaceKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MfDomain {
    Time,
    Daft,
}

impl MfDomain {
    pub fn name(&self) -> &'static str {
        match self {
            MfDomain::Time => "time",
            MfDomain::Daft => "daft",
        }
    }
}

/// Point estimate of one target.
#[derive(Clone, Debug, PartialEq)]
pub struct SensingEstimate {
    /// Seconds.
    pub delay_hat: f64,
    /// Hertz.
    pub doppler_hat: f64,
    pub peak_magnitude: f64,
    pub method: String,
    /// Set when the search grid is larger than the unambiguous region, so a
    /// replica may have won.
    pub ambiguous_grid: bool,
}

/// Correlates a received single-symbol frame with shifted references built
/// from the transmitted DAFT-domain symbols `x`.
///
/// A cell `(l, b)` is the integer delay `l` (samples, `≤ L`) and Doppler `b`
/// bins of `1/(NΔt)`. Its value is `⟨H_{l,b}·s, r⟩` over the prefix-free
/// body, computed either on time samples or on DAFT coefficients through the
/// closed-form path response.
pub fn matched_filter<T: Real>(
    rx: &TimeFrame<T>,
    x: &[Complex<T>],
    cfg: &ChirpConfig,
    domain: MfDomain,
    delays: &[usize],
    doppler_bins: &[f64],
) -> Result<(AmbiguitySurface<T>, SensingEstimate)> {
    let n = cfg.n();
    if x.len() != n {
        return Err(Error::LengthMismatch { expected: n, actual: x.len() });
    }
    if rx.osf != 1 || !rx.has_cpp {
        return Err(invalid("rx", "matched filter expects a symbol-rate frame with prefix"));
    }
    if let Some(&l) = delays.iter().find(|&&l| l > cfg.cpp_len()) {
        return Err(invalid("delays", format!("delay {l} exceeds prefix length {}", cfg.cpp_len())));
    }
    let plan = Daft::<T>::new(cfg);
    let body = remove_cpp(rx, cfg)?;
    let nf = n as f64;
    let mut values = Vec::with_capacity(delays.len() * doppler_bins.len());
    match domain {
        MfDomain::Time => {
            let tx = modulate_with(&plan, x)?.samples;
            let lcp = cfg.cpp_len();
            for &l in delays {
                for &b in doppler_bins {
                    let nu = b / nf;
                    let reference: Vec<Complex<T>> = (0..n)
                        .map(|i| tx[i + lcp - l] * cis::<T>((nu * (i + lcp) as f64).fract()))
                        .collect();
                    values.push(inner(&reference, &body));
                }
            }
        }
        MfDomain::Daft => {
            let y = plan.daft(&body)?;
            for &l in delays {
                for &b in doppler_bins {
                    let path = PathEntry::new(Complex::new(T::one(), T::zero()), l as f64, b / nf);
                    let h = path_matrix(&path, cfg)?;
                    values.push(inner(&h.mul_vec(x)?, &y));
                }
            }
        }
    }
    let dt = cfg.sample_interval();
    let surface = AmbiguitySurface::new(
        delays.iter().map(|&l| l as f64 * dt).collect(),
        doppler_bins.iter().map(|b| b / (nf * dt)).collect(),
        values,
        SurfaceKind::Complex,
    )?;
    let mut est = estimate_peak(&surface, domain.name());
    est.ambiguous_grid = grid_is_ambiguous(cfg, delays, doppler_bins);
    Ok((surface, est))
}

/// Vertex of the parabola through three equally spaced samples, as an
/// offset in `(−0.5, 0.5)` from the middle one.
pub fn parabolic_offset(left: f64, mid: f64, right: f64) -> f64 {
    let den = left - 2.0 * mid + right;
    if den >= 0.0 {
        return 0.0;
    }
    (0.5 * (left - right) / den).clamp(-0.5, 0.5)
}

fn refine(axis: &[f64], idx: usize, mag: impl Fn(usize) -> f64) -> f64 {
    if idx == 0 || idx + 1 >= axis.len() {
        return axis[idx];
    }
    let step = axis[idx + 1] - axis[idx];
    if ((axis[idx] - axis[idx - 1]) - step).abs() > 1e-9 * step.abs() {
        return axis[idx];
    }
    axis[idx] + step * parabolic_offset(mag(idx - 1), mag(idx), mag(idx + 1))
}

/// Argmax cell with three-point parabolic refinement on each axis.
pub fn estimate_peak<T: Real>(surface: &AmbiguitySurface<T>, method: &str) -> SensingEstimate {
    let (i, j) = surface.argmax();
    let delay_hat = refine(&surface.delay_axis, i, |r| surface.magnitude(r, j));
    let doppler_hat = refine(&surface.doppler_axis, j, |c| surface.magnitude(i, c));
    SensingEstimate {
        delay_hat,
        doppler_hat,
        peak_magnitude: surface.magnitude(i, j),
        method: method.to_string(),
        ambiguous_grid: false,
    }
}

/// Local maxima at least `threshold_db` above the median cell power.
pub fn detect_peaks<T: Real>(surface: &AmbiguitySurface<T>, threshold_db: f64) -> Vec<(usize, usize)> {
    let (rows, cols) = surface.shape();
    let mut powers: Vec<f64> = (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))).map(|(i, j)| surface.power(i, j)).collect();
    powers.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = powers[powers.len() / 2];
    let floor = median * 10f64.powf(threshold_db / 10.0);
    surface
        .local_maxima(f64::INFINITY)
        .into_iter()
        .filter(|&(i, j)| surface.power(i, j) >= floor)
        .collect()
}

/// Whether two cells of the search grid differ by a non-zero replica
/// lattice vector `(Δl, k·Δl + m·N)`.
fn grid_is_ambiguous(cfg: &ChirpConfig, delays: &[usize], doppler_bins: &[f64]) -> bool {
    let Some(k) = cfg.c1_k() else { return false };
    let n = cfg.n() as i64;
    let span = |v: &[f64]| {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    let ds: Vec<f64> = delays.iter().map(|&d| d as f64).collect();
    let sd = span(&ds).round() as i64;
    let sb = span(doppler_bins);
    for dl in -sd..=sd {
        let base = (k * dl).rem_euclid(n);
        for m in -1..=1 {
            let db = base + m * n;
            if (dl, db) != (0, 0) && (db as f64).abs() <= sb + 1e-9 {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{add_noise, apply_channel, LtvChannel};
    use crate::rng::trial_rng;
    use crate::waveform::Constellation;
    use rand::Rng;

    type C = Complex<f64>;

    fn qpsk_symbols(n: usize, seed: u64) -> Vec<C> {
        let mut rng = trial_rng(seed, 1, 0);
        (0..n).map(|_| Constellation::Qpsk.point(rng.random_range(0..4))).collect()
    }

    #[test]
    fn integer_delay_recovered_exactly() {
        let cfg = ChirpConfig::with_integer_c1(64, 3, 0.0, 1e-6, 8).unwrap();
        let x = qpsk_symbols(64, 1);
        let tx = modulate_with(&Daft::new(&cfg), &x).unwrap();
        let rx = apply_channel(&tx, &LtvChannel::single(C::new(1.0, 0.0), 3.0, 0.0)).unwrap();
        let delays: Vec<usize> = (0..=8).collect();
        let bins: Vec<f64> = (-4..=4).map(|b| b as f64).collect();
        for domain in [MfDomain::Time, MfDomain::Daft] {
            let (_, est) = matched_filter(&rx, &x, &cfg, domain, &delays, &bins).unwrap();
            assert!((est.delay_hat - 3e-6).abs() < 1e-12, "{domain:?} {}", est.delay_hat);
            assert!(est.doppler_hat.abs() < 1e-6);
        }
    }

    #[test]
    fn domains_agree() {
        let cfg = ChirpConfig::with_integer_c1(32, 5, 0.3, 1e-6, 6).unwrap();
        let x = qpsk_symbols(32, 2);
        let tx = modulate_with(&Daft::new(&cfg), &x).unwrap();
        let rx = apply_channel(&tx, &LtvChannel::single(C::new(0.6, -0.2), 4.0, 1.0 / 32.0)).unwrap();
        let delays: Vec<usize> = (0..=6).collect();
        let bins: Vec<f64> = (-8..=8).map(|b| b as f64 * 0.25).collect();
        let (a, _) = matched_filter(&rx, &x, &cfg, MfDomain::Time, &delays, &bins).unwrap();
        let (b, _) = matched_filter(&rx, &x, &cfg, MfDomain::Daft, &delays, &bins).unwrap();
        let peak = a.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (u, v) in a.values.iter().zip(&b.values) {
            assert!((u - v).norm() <= 1e-10 * peak);
        }
    }

    #[test]
    fn two_close_targets_resolved() {
        let cfg = ChirpConfig::with_integer_c1(64, 3, 0.0, 1e-6, 10).unwrap();
        let x = qpsk_symbols(64, 3);
        let tx = modulate_with(&Daft::new(&cfg), &x).unwrap();
        let ch = LtvChannel::new(vec![
            PathEntry::new(C::new(1.0, 0.0), 3.0, 0.0),
            PathEntry::new(C::new(0.0, 1.0), 5.0, 0.0),
        ])
        .unwrap();
        let mut rng = trial_rng(3, 3, 3);
        let clean = apply_channel(&tx, &ch).unwrap();
        // 20 dB per target
        let rx = add_noise(&clean, 0.01, &mut rng);
        let delays: Vec<usize> = (0..=10).collect();
        let bins: Vec<f64> = (-8..=8).map(|b| b as f64 * 0.5).collect();
        let (s, _) = matched_filter(&rx, &x, &cfg, MfDomain::Daft, &delays, &bins).unwrap();
        let peaks = detect_peaks(&s, 10.0);
        let mut found: Vec<usize> = peaks.iter().map(|&(i, _)| delays[i]).collect();
        found.sort();
        found.dedup();
        assert!(found.contains(&3) && found.contains(&5), "{found:?}");
    }

    #[test]
    fn parabola_vertex() {
        // samples of −(t − 0.3)² at −1, 0, 1
        let f = |t: f64| -(t - 0.3) * (t - 0.3);
        assert!((parabolic_offset(f(-1.0), f(0.0), f(1.0)) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn oversized_grid_flagged() {
        let cfg = ChirpConfig::with_integer_c1(16, 3, 0.0, 1.0, 4).unwrap();
        assert!(!grid_is_ambiguous(&cfg, &[0, 1], &[-1.0, 0.0, 1.0]));
        // Δl = 1 with Doppler span 3 bins reaches the replica at (1, 3)
        assert!(grid_is_ambiguous(&cfg, &[0, 1], &[-1.0, 0.0, 1.0, 2.0]));
    }
}
