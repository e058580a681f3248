//! Doubly-dispersive channels: random path draws, time-domain application,
//! AWGN, and DAFT-domain effective matrices.
//!
//! Conventions: delays are in symbol-rate samples, Dopplers in cycles per
//! symbol-rate sample (`α = doppler·N` is the Doppler in DAFT bins), and the
//! Doppler phase runs on the absolute frame index, so a path is
//! `r[n] = gain · exp(j2π·doppler·n/osf) · s[n − delay·osf]`.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use crate::config::ChirpConfig;
use crate::error::{invalid, Result};
use crate::frame::TimeFrame;
use crate::linalg::CMatrix;
use crate::scalar::{cis, Real};
use crate::transform::{add_cpp, remove_cpp, Daft};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathEntry<T> {
    pub gain: Complex<T>,
    /// Symbol-rate samples.
    pub delay: f64,
    /// Cycles per symbol-rate sample.
    pub doppler: f64,
}

impl<T: Real> PathEntry<T> {
    pub fn new(gain: Complex<T>, delay: f64, doppler: f64) -> Self {
        Self { gain, delay, doppler }
    }

    /// Doppler in DAFT bins for an `n`-point symbol.
    pub fn alpha(&self, n: usize) -> f64 {
        self.doppler * n as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LtvChannel<T> {
    pub paths: Vec<PathEntry<T>>,
    /// Gains were drawn with total expected power one.
    pub normalized: bool,
}

impl<T: Real> LtvChannel<T> {
    pub fn new(paths: Vec<PathEntry<T>>) -> Result<Self> {
        if paths.is_empty() {
            return Err(invalid("paths", "a channel needs at least one path"));
        }
        Ok(Self { paths, normalized: false })
    }

    pub fn identity() -> Self {
        Self { paths: vec![PathEntry::new(Complex::new(T::one(), T::zero()), 0.0, 0.0)], normalized: true }
    }

    pub fn single(gain: Complex<T>, delay: f64, doppler: f64) -> Self {
        Self { paths: vec![PathEntry::new(gain, delay, doppler)], normalized: false }
    }

    pub fn total_power(&self) -> T {
        self.paths.iter().fold(T::zero(), |a, p| a + p.gain.norm_sqr())
    }

    pub fn max_delay(&self) -> f64 {
        self.paths.iter().map(|p| p.delay).fold(0.0, f64::max)
    }

    pub fn scaled(&self, g: Complex<T>) -> Self {
        Self {
            paths: self.paths.iter().map(|p| PathEntry { gain: p.gain * g, ..*p }).collect(),
            normalized: false,
        }
    }
}

/// How path delays are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DelayMode {
    /// Distinct integers in `0..=⌊max_delay⌋` (distinct delay/Doppler cells
    /// when Dopplers are integer bins).
    Integer,
    /// Integers in `0..=⌊max_delay⌋`, drawn with replacement.
    IntegerShared,
    /// Uniform reals in `[0, max_delay]`.
    Continuous,
}

/// How path Dopplers are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DopplerMode {
    /// Uniform in `[−max, +max]`.
    Continuous,
    /// `max·cos θ` with `θ` uniform on `[0, 2π)`.
    Jakes,
    /// Integer DAFT-bin indices `α/N`, `|α| ≤ ⌊max·N⌋`, for an `N`-point symbol.
    IntegerBins { n: usize },
}

impl DelayMode {
    pub fn name(&self) -> &'static str {
        match self {
            DelayMode::Integer => "distinct",
            DelayMode::IntegerShared => "shared",
            DelayMode::Continuous => "continuous",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "distinct" => Ok(DelayMode::Integer),
            "shared" => Ok(DelayMode::IntegerShared),
            "continuous" => Ok(DelayMode::Continuous),
            _ => Err(invalid("delay_mode", format!("unknown mode `{name}` (distinct, shared, continuous)"))),
        }
    }
}

impl DopplerMode {
    pub fn name(&self) -> &'static str {
        match self {
            DopplerMode::Continuous => "uniform",
            DopplerMode::Jakes => "jakes",
            DopplerMode::IntegerBins { .. } => "integer",
        }
    }

    /// `n` is the symbol length used by the integer-bin mode.
    pub fn from_name(name: &str, n: usize) -> Result<Self> {
        match name {
            "uniform" => Ok(DopplerMode::Continuous),
            "jakes" => Ok(DopplerMode::Jakes),
            "integer" => Ok(DopplerMode::IntegerBins { n }),
            _ => Err(invalid("doppler_mode", format!("unknown mode `{name}` (uniform, jakes, integer)"))),
        }
    }
}

/// Distribution of a random doubly-dispersive channel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelSpec {
    pub paths: usize,
    pub max_delay: f64,
    pub max_doppler: f64,
    pub delay_mode: DelayMode,
    pub doppler_mode: DopplerMode,
}

impl ChannelSpec {
    /// Integer delays, continuous Doppler.
    pub fn comm(paths: usize, max_delay: f64, max_doppler: f64) -> Self {
        Self { paths, max_delay, max_doppler, delay_mode: DelayMode::Integer, doppler_mode: DopplerMode::Continuous }
    }

    pub fn with_integer_doppler(mut self, n: usize) -> Self {
        self.doppler_mode = DopplerMode::IntegerBins { n };
        self
    }

    pub fn with_modes(mut self, delay_mode: DelayMode, doppler_mode: DopplerMode) -> Self {
        self.delay_mode = delay_mode;
        self.doppler_mode = doppler_mode;
        self
    }

    fn max_alpha(&self) -> Option<i64> {
        match self.doppler_mode {
            DopplerMode::IntegerBins { n } => Some((self.max_doppler * n as f64 + 1e-9).floor() as i64),
            DopplerMode::Continuous | DopplerMode::Jakes => None,
        }
    }

    /// Number of distinct path positions available when positions must be
    /// distinct.
    pub fn distinct_slots(&self) -> Option<usize> {
        if self.delay_mode != DelayMode::Integer {
            return None;
        }
        let delays = (self.max_delay + 1e-9).floor() as usize + 1;
        Some(match self.max_alpha() {
            Some(a) => delays * (2 * a as usize + 1),
            None => delays,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(invalid("paths", "need at least one path"));
        }
        if !(self.max_delay >= 0.0 && self.max_delay.is_finite()) {
            return Err(invalid("max_delay", "must be finite and non-negative"));
        }
        if !(0.0..0.5).contains(&self.max_doppler) {
            return Err(invalid("max_doppler", "must lie in [0, 0.5) cycles/sample"));
        }
        if let Some(slots) = self.distinct_slots() {
            if self.paths > slots {
                return Err(invalid(
                    "paths",
                    format!("{} paths exceed the {slots} distinct integer delay/Doppler positions", self.paths),
                ));
            }
        }
        Ok(())
    }

    /// Draws one channel with i.i.d. `CN(0, 1/P)` gains.
    pub fn draw<T: Real, R: Rng + ?Sized>(&self, rng: &mut R) -> Result<LtvChannel<T>> {
        self.validate()?;
        let p = self.paths;
        let gain_std = (0.5 / p as f64).sqrt();
        let mut paths = Vec::with_capacity(p);
        let max_alpha = self.max_alpha();
        let max_l = (self.max_delay + 1e-9).floor() as i64;
        let mut cells: Vec<(i64, i64)> = Vec::new();
        if self.delay_mode == DelayMode::Integer {
            let alphas = max_alpha.unwrap_or(0);
            for l in 0..=max_l {
                for a in -alphas..=alphas {
                    cells.push((l, a));
                }
            }
        }
        for _ in 0..p {
            let g: (f64, f64) = (StandardNormal.sample(rng), StandardNormal.sample(rng));
            let gain = Complex::new(T::lit(g.0 * gain_std), T::lit(g.1 * gain_std));
            let (delay, doppler) = match self.delay_mode {
                DelayMode::Integer => {
                    let idx = rng.random_range(0..cells.len());
                    let (l, a) = cells.swap_remove(idx);
                    match self.doppler_mode {
                        DopplerMode::IntegerBins { n } => (l as f64, a as f64 / n as f64),
                        // distinct delays: the cell list holds one entry per delay
                        _ => (l as f64, self.draw_doppler(rng)),
                    }
                }
                DelayMode::IntegerShared => {
                    let l = rng.random_range(0..=max_l);
                    (l as f64, self.draw_doppler(rng))
                }
                DelayMode::Continuous => {
                    let d = rng.random::<f64>() * self.max_delay;
                    (d, self.draw_doppler(rng))
                }
            };
            paths.push(PathEntry::new(gain, delay, doppler));
        }
        Ok(LtvChannel { paths, normalized: true })
    }

    fn draw_doppler<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.max_doppler == 0.0 {
            return 0.0;
        }
        match self.doppler_mode {
            DopplerMode::Continuous => (2.0 * rng.random::<f64>() - 1.0) * self.max_doppler,
            DopplerMode::Jakes => self.max_doppler * (std::f64::consts::TAU * rng.random::<f64>()).cos(),
            DopplerMode::IntegerBins { n } => {
                let a = self.max_alpha().unwrap_or(0);
                rng.random_range(-a..=a) as f64 / n as f64
            }
        }
    }
}

/// `P` paths with distinct integer delays and continuous Doppler.
pub fn random_channel<T: Real, R: Rng + ?Sized>(
    paths: usize,
    max_delay: f64,
    max_doppler: f64,
    rng: &mut R,
) -> Result<LtvChannel<T>> {
    ChannelSpec::comm(paths, max_delay, max_doppler).draw(rng)
}

fn is_integer(v: f64) -> bool {
    (v - v.round()).abs() < 1e-12
}

/// Passes a frame through the channel. Output length equals input length.
pub fn apply_channel<T: Real>(frame: &TimeFrame<T>, ch: &LtvChannel<T>) -> Result<TimeFrame<T>> {
    let osf = frame.osf.max(1);
    let len = frame.len();
    let zero = Complex::new(T::zero(), T::zero());
    let mut out = vec![zero; len];
    for path in &ch.paths {
        if path.delay < 0.0 {
            return Err(invalid("delay", "path delays must be non-negative"));
        }
        let shift = path.delay * osf as f64;
        let delayed: Vec<Complex<T>> = if is_integer(shift) {
            let d = shift.round() as usize;
            (0..len).map(|n| if n >= d { frame.samples[n - d] } else { zero }).collect()
        } else if osf == 1 {
            return Err(invalid("delay", "fractional delay needs an oversampled frame"));
        } else {
            fractional_delay(&frame.samples, shift)
        };
        let step = path.doppler / osf as f64;
        for (n, (o, v)) in out.iter_mut().zip(&delayed).enumerate() {
            *o = *o + path.gain * cis::<T>((step * n as f64).fract()) * v;
        }
    }
    Ok(TimeFrame::new(out, frame.osf, frame.has_cpp, frame.sample_interval))
}

/// Band-limited delay by `shift` samples (zero-padded, truncated to the
/// input length).
pub fn fractional_delay<T: Real>(x: &[Complex<T>], shift: f64) -> Vec<Complex<T>> {
    let len = x.len();
    let pad = (len + shift.abs().ceil() as usize + 64).next_power_of_two() * 2;
    let mut buf = vec![Complex::new(T::zero(), T::zero()); pad];
    buf[..len].copy_from_slice(x);
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(pad).process(&mut buf);
    for (k, v) in buf.iter_mut().enumerate() {
        let f = if k < pad / 2 { k as f64 } else { k as f64 - pad as f64 } / pad as f64;
        if k == pad / 2 {
            // Nyquist bin: keep the delayed signal real-symmetric
            *v = *v * T::lit((std::f64::consts::TAU * 0.5 * shift).cos());
            continue;
        }
        *v = *v * cis::<T>((-f * shift).fract());
    }
    planner.plan_fft_inverse(pad).process(&mut buf);
    let s = T::one() / T::from_usize_lossy(pad);
    buf.truncate(len);
    buf.iter_mut().for_each(|v| *v = *v * s);
    buf
}

/// Adds white circular Gaussian noise at `snr_db` relative to the frame's
/// own mean sample power. `f64::INFINITY` leaves the frame unchanged.
pub fn add_awgn<T: Real, R: Rng + ?Sized>(frame: &TimeFrame<T>, snr_db: f64, rng: &mut R) -> Result<TimeFrame<T>> {
    if frame.is_empty() {
        return Err(invalid("frame", "cannot add noise to an empty frame"));
    }
    if snr_db == f64::INFINITY {
        return Ok(frame.clone());
    }
    let noise_var = frame.power().as_f64() / 10f64.powf(snr_db / 10.0);
    Ok(add_noise(frame, noise_var, rng))
}

/// Adds `CN(0, noise_var)` samples.
pub fn add_noise<T: Real, R: Rng + ?Sized>(frame: &TimeFrame<T>, noise_var: f64, rng: &mut R) -> TimeFrame<T> {
    let mut out = frame.clone();
    if noise_var <= 0.0 {
        return out;
    }
    let s = (noise_var / 2.0).sqrt();
    for v in out.samples.iter_mut() {
        let (a, b): (f64, f64) = (StandardNormal.sample(rng), StandardNormal.sample(rng));
        *v = *v + Complex::new(T::lit(a * s), T::lit(b * s));
    }
    out
}

/// Largest `N` accepted by [`effective_matrix`].
pub const EFFECTIVE_MATRIX_MAX_N: usize = 1024;

fn check_comm_channel<T: Real>(ch: &LtvChannel<T>, cfg: &ChirpConfig) -> Result<()> {
    if cfg.n() > EFFECTIVE_MATRIX_MAX_N {
        return Err(invalid("n", format!("effective matrix limited to N <= {EFFECTIVE_MATRIX_MAX_N}")));
    }
    for p in &ch.paths {
        if !is_integer(p.delay) {
            return Err(invalid("delay", format!("effective matrix needs integer delays, got {}", p.delay)));
        }
        if p.delay.round() as usize > cfg.cpp_len() {
            return Err(invalid("delay", format!("delay {} exceeds prefix length {}", p.delay, cfg.cpp_len())));
        }
    }
    Ok(())
}

/// DAFT-domain channel matrix built by pushing every unit vector through
/// IDAFT, prefix insertion, the channel, prefix removal and DAFT.
pub fn effective_matrix<T: Real>(ch: &LtvChannel<T>, cfg: &ChirpConfig) -> Result<CMatrix<T>> {
    effective_matrix_with(&Daft::new(cfg), ch)
}

pub fn effective_matrix_with<T: Real>(plan: &Daft<T>, ch: &LtvChannel<T>) -> Result<CMatrix<T>> {
    let cfg = plan.config();
    check_comm_channel(ch, cfg)?;
    let n = cfg.n();
    let zero = Complex::new(T::zero(), T::zero());
    let mut m = CMatrix::zeros(n, n);
    let mut unit = vec![zero; n];
    for q in 0..n {
        unit.iter_mut().for_each(|v| *v = zero);
        unit[q] = Complex::new(T::one(), T::zero());
        let body = plan.idaft(&unit)?;
        let frame = TimeFrame::new(add_cpp(&body, cfg)?, 1, true, cfg.sample_interval());
        let rx = apply_channel(&frame, ch)?;
        let y = plan.daft(&remove_cpp(&rx, cfg)?)?;
        for (p, v) in y.into_iter().enumerate() {
            m[(p, q)] = v;
        }
    }
    Ok(m)
}

/// Closed-form DAFT-domain response of one path with integer delay `l`
/// (`≤ L`) and arbitrary Doppler, for a single-symbol frame starting at
/// absolute index 0:
///
/// `H[p,q] = (g/N)·e^{j2π(ν·L + c2(q²−p²) + c1·l² − l·q/N)} · Σ_n e^{j2πn(ν − 2c1·l + (q−p)/N)}`
pub fn path_matrix<T: Real>(path: &PathEntry<T>, cfg: &ChirpConfig) -> Result<CMatrix<T>> {
    let ch = LtvChannel { paths: vec![*path], normalized: false };
    check_comm_channel(&ch, cfg)?;
    let n = cfg.n();
    let l = path.delay.round() as i64;
    let nu = path.doppler;
    let nf = n as f64;
    let base = nu * cfg.cpp_len() as f64 + cfg.c1_phase_cycles(l);
    let offset = nu - 2.0 * cfg.c1() * l as f64;
    let kernel: Vec<Complex<f64>> = (0..n)
        .map(|d| geometric_sum(offset + d as f64 / nf, n) / nf)
        .collect();
    let gain = Complex::new(path.gain.re.as_f64(), path.gain.im.as_f64());
    Ok(CMatrix::from_fn(n, n, |p, q| {
        let phase = base + cfg.c2_phase_cycles(q as i64) - cfg.c2_phase_cycles(p as i64)
            - ((l * q as i64).rem_euclid(n as i64)) as f64 / nf;
        let diff = (q as i64 - p as i64).rem_euclid(n as i64) as usize;
        let v = gain * kernel[diff] * cis::<f64>(phase.fract());
        Complex::new(T::lit(v.re), T::lit(v.im))
    }))
}

/// Sum of closed-form path responses.
pub fn effective_matrix_closed_form<T: Real>(ch: &LtvChannel<T>, cfg: &ChirpConfig) -> Result<CMatrix<T>> {
    let n = cfg.n();
    let mut total = CMatrix::zeros(n, n);
    for p in &ch.paths {
        let m = path_matrix(p, cfg)?;
        for r in 0..n {
            for c in 0..n {
                total[(r, c)] = total[(r, c)] + m[(r, c)];
            }
        }
    }
    Ok(total)
}

/// `Σ_{n<len} exp(j2π·θ·n)`.
fn geometric_sum(theta: f64, len: usize) -> Complex<f64> {
    let frac = theta - theta.round();
    if frac.abs() < 1e-12 {
        return Complex::new(len as f64, 0.0);
    }
    let num = Complex::new(1.0, 0.0) - Complex::from_polar(1.0, std::f64::consts::TAU * (theta * len as f64).fract());
    let den = Complex::new(1.0, 0.0) - Complex::from_polar(1.0, std::f64::consts::TAU * frac);
    num / den
}

/// Dominant row offset `(row − col) mod N` per column of a matrix.
pub fn dominant_offsets<T: Real>(m: &CMatrix<T>) -> Vec<usize> {
    let n = m.rows();
    (0..m.cols())
        .map(|c| {
            let r = (0..n)
                .max_by(|&a, &b| m[(a, c)].norm().partial_cmp(&m[(b, c)].norm()).unwrap())
                .unwrap();
            (r + n - c % n) % n
        })
        .collect()
}

/// Returns an error unless every path has an integer delay within the
/// prefix; used by detectors that rely on the single-symbol matrix model.
pub fn require_comm_channel<T: Real>(ch: &LtvChannel<T>, cfg: &ChirpConfig) -> Result<()> {
    check_comm_channel(ch, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_rng;
    use crate::scalar::rel_error;
    use crate::waveform::modulate_with;

    type C = Complex<f64>;

    fn frame(n: usize) -> TimeFrame<f64> {
        TimeFrame::new((0..n).map(|i| C::new((i as f64 * 0.37).cos(), (i as f64 * 0.11).sin())).collect(), 1, true, 1.0)
    }

    #[test]
    fn identity_channel_is_identity() {
        let f = frame(20);
        assert_eq!(apply_channel(&f, &LtvChannel::identity()).unwrap(), f);
        let cfg = ChirpConfig::new(8, 0.05, 0.3, 1.0, 2).unwrap();
        let m = effective_matrix::<f64>(&LtvChannel::identity(), &cfg).unwrap();
        assert!(m.max_abs_diff(&CMatrix::identity(8)) < 1e-12);
    }

    #[test]
    fn superposition() {
        let f = frame(32);
        let a = PathEntry::new(C::new(0.5, 0.1), 2.0, 0.03);
        let b = PathEntry::new(C::new(-0.2, 0.7), 5.0, -0.01);
        let both = apply_channel(&f, &LtvChannel::new(vec![a, b]).unwrap()).unwrap();
        let sum = apply_channel(&f, &LtvChannel::new(vec![a]).unwrap())
            .unwrap()
            .superpose(&apply_channel(&f, &LtvChannel::new(vec![b]).unwrap()).unwrap());
        assert!(rel_error(&both.samples, &sum.samples) < 1e-14);
    }

    #[test]
    fn rejects_fractional_delay_at_symbol_rate() {
        let ch = LtvChannel::single(C::new(1.0, 0.0), 1.5, 0.0);
        assert!(apply_channel(&frame(8), &ch).is_err());
        let mut over = frame(64);
        over.osf = 4;
        assert!(apply_channel(&over, &ch).is_ok());
    }

    #[test]
    fn fractional_delay_matches_integer_shift() {
        let x: Vec<C> = (0..64).map(|i| C::new((-((i as f64 - 20.0) / 4.0).powi(2)).exp(), 0.0)).collect();
        let y = fractional_delay(&x, 3.0);
        for i in 3..64 {
            assert!((y[i] - x[i - 3]).norm() < 1e-9);
        }
    }

    #[test]
    fn ofdm_single_tap_phase_ramp() {
        // pure delay l with c1 = c2 = 0: diagonal with e^{−j2π q l / N}
        let cfg = ChirpConfig::ofdm(16, 1.0, 4).unwrap();
        let ch = LtvChannel::single(C::new(1.0, 0.0), 3.0, 0.0);
        let m = effective_matrix::<f64>(&ch, &cfg).unwrap();
        for p in 0..16 {
            for q in 0..16 {
                let e = if p == q { C::from_polar(1.0, -std::f64::consts::TAU * 3.0 * q as f64 / 16.0) } else { C::new(0.0, 0.0) };
                assert!((m[(p, q)] - e).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn shift_law_matches_brute_force() {
        // N = 16, c1 = 3/32, path (l = 2, α = 1)
        let cfg = ChirpConfig::with_integer_c1(16, 3, 0.4, 1.0, 4).unwrap();
        let ch = LtvChannel::single(C::new(0.8, -0.3), 2.0, 1.0 / 16.0);
        let m = effective_matrix::<f64>(&ch, &cfg).unwrap();
        let predicted = cfg.path_shift_index(2, 1).unwrap();
        assert_eq!(predicted, (1 - 6_i64).rem_euclid(16) as usize);
        for (col, off) in dominant_offsets(&m).into_iter().enumerate() {
            assert_eq!(off, predicted, "column {col}");
            // single dominant entry: all others vanish for integer cells
            let r = (col + off) % 16;
            for row in 0..16 {
                if row != r {
                    assert!(m[(row, col)].norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn closed_form_matches_brute_force() {
        let cfg = ChirpConfig::new(12, 0.031, 0.77, 1.0, 3).unwrap();
        let ch = LtvChannel::new(vec![
            PathEntry::new(C::new(0.3, 0.4), 0.0, 0.021),
            PathEntry::new(C::new(-0.5, 0.1), 2.0, -0.07),
            PathEntry::new(C::new(0.2, -0.6), 3.0, 0.0),
        ])
        .unwrap();
        let brute = effective_matrix::<f64>(&ch, &cfg).unwrap();
        let closed = effective_matrix_closed_form(&ch, &cfg).unwrap();
        assert!(brute.max_abs_diff(&closed) < 1e-10);
    }

    #[test]
    fn effective_matrix_predicts_chain() {
        let mut rng = trial_rng(1, 2, 3);
        for trial in 0..100u64 {
            let n = [8, 12, 16][trial as usize % 3];
            let mut r = trial_rng(5, 9, trial);
            let c1 = rand::Rng::random::<f64>(&mut r) * 0.2;
            let c2 = rand::Rng::random::<f64>(&mut r);
            let cfg = ChirpConfig::new(n, c1, c2, 1.0, 3).unwrap();
            let ch: LtvChannel<f64> = random_channel(3, 3.0, 0.1, &mut rng).unwrap();
            let plan = Daft::new(&cfg);
            let x: Vec<C> = (0..n).map(|_| C::new(rand::Rng::random::<f64>(&mut r) - 0.5, rand::Rng::random::<f64>(&mut r) - 0.5)).collect();
            let rx = apply_channel(&modulate_with(&plan, &x).unwrap(), &ch).unwrap();
            let y = plan.daft(&remove_cpp(&rx, &cfg).unwrap()).unwrap();
            let m = effective_matrix_with(&plan, &ch).unwrap();
            let pred = m.mul_vec(&x).unwrap();
            let err: f64 = y.iter().zip(&pred).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            let xn: f64 = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!(err <= 1e-9 * xn);
        }
    }

    #[test]
    fn cpp_removed_output_is_chirp_circular_convolution() {
        // brute-force: body[n] = Σ g·e^{j2πν n_abs}·s_ext[n − l], s_ext chirp-periodic
        let cfg = ChirpConfig::new(16, 0.013, 0.2, 1.0, 4).unwrap();
        let plan = Daft::new(&cfg);
        let x: Vec<C> = (0..16).map(|i| C::new(i as f64 % 3.0, 1.0 - i as f64 % 2.0)).collect();
        let s = plan.idaft(&x).unwrap();
        let ch = LtvChannel::new(vec![
            PathEntry::new(C::new(1.0, 0.0), 0.0, 0.0),
            PathEntry::new(C::new(0.5, 0.5), 3.0, 0.02),
        ])
        .unwrap();
        let rx = apply_channel(&modulate_with(&plan, &x).unwrap(), &ch).unwrap();
        let body = remove_cpp(&rx, &cfg).unwrap();
        for n in 0..16i64 {
            let mut acc = C::new(0.0, 0.0);
            for p in &ch.paths {
                let l = p.delay as i64;
                let idx = n - l;
                let v = if idx >= 0 {
                    s[idx as usize]
                } else {
                    let ph = -std::f64::consts::TAU * 0.013 * (256.0 + 32.0 * idx as f64);
                    s[(16 + idx) as usize] * C::from_polar(1.0, ph)
                };
                acc += p.gain * C::from_polar(1.0, std::f64::consts::TAU * p.doppler * (n + 4) as f64) * v;
            }
            assert!((body[n as usize] - acc).norm() < 1e-12);
        }
    }

    #[test]
    fn random_channel_rules() {
        let mut rng = trial_rng(3, 0, 0);
        let flat: LtvChannel<f64> = random_channel(1, 0.0, 0.0, &mut rng).unwrap();
        assert_eq!(flat.paths.len(), 1);
        assert_eq!(flat.paths[0].delay, 0.0);
        assert_eq!(flat.paths[0].doppler, 0.0);
        assert!(random_channel::<f64, _>(4, 2.0, 0.0, &mut rng).is_err());
        let spec = ChannelSpec::comm(4, 2.0, 1.0 / 12.0).with_integer_doppler(12);
        for _ in 0..50 {
            let ch: LtvChannel<f64> = spec.draw(&mut rng).unwrap();
            let mut cells: Vec<(i64, i64)> =
                ch.paths.iter().map(|p| (p.delay as i64, (p.doppler * 12.0).round() as i64)).collect();
            cells.sort();
            cells.dedup();
            assert_eq!(cells.len(), 4);
            assert!(cells.iter().all(|&(l, a)| (0..=2).contains(&l) && a.abs() <= 1));
        }
    }

    #[test]
    fn ensemble_power_is_unit() {
        let spec = ChannelSpec::comm(4, 2.0, 1.0 / 12.0).with_integer_doppler(12);
        let draws = 10_000u64;
        let mean: f64 = (0..draws)
            .map(|t| spec.draw::<f64, _>(&mut trial_rng(11, 0, t)).unwrap().total_power())
            .sum::<f64>()
            / draws as f64;
        assert!((mean - 1.0).abs() < 0.03, "{mean}");
    }

    #[test]
    fn awgn_statistics() {
        let sig = TimeFrame::new(vec![C::new(1.0, 0.0); 1_000_000], 1, false, 1.0);
        let mut rng = trial_rng(8, 8, 8);
        assert_eq!(add_awgn(&sig, f64::INFINITY, &mut rng).unwrap(), sig);
        let noisy = add_awgn(&sig, 10.0, &mut rng).unwrap();
        let noise: Vec<C> = noisy.samples.iter().zip(&sig.samples).map(|(a, b)| a - b).collect();
        let p: f64 = noise.iter().map(|z| z.norm_sqr()).sum::<f64>() / noise.len() as f64;
        assert!((10.0 * (1.0 / p).log10() - 10.0).abs() < 0.1);
        let lag1: C = noise.windows(2).map(|w| w[1] * w[0].conj()).sum::<C>() / noise.len() as f64;
        assert!(lag1.norm() / p <= 0.01);
        let empty = TimeFrame::<f64>::new(vec![], 1, false, 1.0);
        assert!(add_awgn(&empty, 3.0, &mut rng).is_err());
    }
}
