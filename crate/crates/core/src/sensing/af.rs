//! Ambiguity functions and the replica lattice of chirp subcarriers.

use num_complex::Complex;
use num_rational::Ratio;
use rand::Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::channel::fractional_delay;
use crate::config::ChirpConfig;
use crate::error::{invalid, Error, Result};
use crate::frame::TimeFrame;
use crate::rng::trial_rng;
use crate::scalar::Real;
use crate::transform::Daft;
use crate::waveform::{build_grid, modulate_with, pulse_shape, Constellation, GridLayout, RrcConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SurfaceKind {
    /// Complex correlation values.
    Complex,
    /// Real, non-negative power (stored in the real part).
    Power,
}

/// Values over a delay × Doppler grid, row-major by delay.
#[derive(Clone, Debug, PartialEq)]
pub struct AmbiguitySurface<T> {
    /// Seconds.
    pub delay_axis: Vec<f64>,
    /// Hertz.
    pub doppler_axis: Vec<f64>,
    pub values: Vec<Complex<T>>,
    pub kind: SurfaceKind,
}

impl<T: Real> AmbiguitySurface<T> {
    pub fn new(delay_axis: Vec<f64>, doppler_axis: Vec<f64>, values: Vec<Complex<T>>, kind: SurfaceKind) -> Result<Self> {
        if values.len() != delay_axis.len() * doppler_axis.len() {
            return Err(Error::LengthMismatch { expected: delay_axis.len() * doppler_axis.len(), actual: values.len() });
        }
        for axis in [&delay_axis, &doppler_axis] {
            if axis.is_empty() || axis.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(invalid("axis", "axes must be non-empty and strictly increasing"));
            }
        }
        Ok(Self { delay_axis, doppler_axis, values, kind })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.delay_axis.len(), self.doppler_axis.len())
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.values[i * self.doppler_axis.len() + j]
    }

    /// `|A|` for complex surfaces, the stored value for power surfaces.
    pub fn magnitude(&self, i: usize, j: usize) -> f64 {
        let v = self.get(i, j);
        match self.kind {
            SurfaceKind::Complex => v.norm().as_f64(),
            SurfaceKind::Power => v.re.as_f64(),
        }
    }

    /// Power-like quantity: `|A|²` or the stored power.
    pub fn power(&self, i: usize, j: usize) -> f64 {
        let v = self.get(i, j);
        match self.kind {
            SurfaceKind::Complex => v.norm_sqr().as_f64(),
            SurfaceKind::Power => v.re.as_f64(),
        }
    }

    /// Index of the largest magnitude cell.
    pub fn argmax(&self) -> (usize, usize) {
        let (rows, cols) = self.shape();
        let mut best = (0, 0);
        let mut bv = f64::NEG_INFINITY;
        for i in 0..rows {
            for j in 0..cols {
                let v = self.power(i, j);
                if v > bv {
                    bv = v;
                    best = (i, j);
                }
            }
        }
        best
    }

    /// Local maxima (8-neighbourhood, strict against earlier cells) whose
    /// power is within `floor_db` of the global maximum.
    pub fn local_maxima(&self, floor_db: f64) -> Vec<(usize, usize)> {
        let (rows, cols) = self.shape();
        let (mi, mj) = self.argmax();
        let threshold = self.power(mi, mj) * 10f64.powf(-floor_db.abs() / 10.0);
        let mut out = Vec::new();
        for i in 0..rows {
            for j in 0..cols {
                let v = self.power(i, j);
                if v < threshold {
                    continue;
                }
                let mut is_max = true;
                for di in -1i64..=1 {
                    for dj in -1i64..=1 {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        let (a, b) = (i as i64 + di, j as i64 + dj);
                        if a < 0 || b < 0 || a >= rows as i64 || b >= cols as i64 {
                            continue;
                        }
                        let w = self.power(a as usize, b as usize);
                        // ties resolved in favour of the first cell in scan order
                        if w > v || (w == v && (a, b) < (i as i64, j as i64)) {
                            is_max = false;
                        }
                    }
                }
                if is_max {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Long-format CSV: `delay_s,doppler_hz,re,im,abs` or
    /// `delay_s,doppler_hz,value`.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        match self.kind {
            SurfaceKind::Complex => s.push_str("delay_s,doppler_hz,re,im,abs\n"),
            SurfaceKind::Power => s.push_str("delay_s,doppler_hz,value\n"),
        }
        for (i, d) in self.delay_axis.iter().enumerate() {
            for (j, f) in self.doppler_axis.iter().enumerate() {
                let v = self.get(i, j);
                match self.kind {
                    SurfaceKind::Complex => s.push_str(&format!(
                        "{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}\n",
                        d,
                        f,
                        v.re.as_f64(),
                        v.im.as_f64(),
                        v.norm().as_f64()
                    )),
                    SurfaceKind::Power => s.push_str(&format!("{:.9e},{:.9e},{:.9e}\n", d, f, v.re.as_f64())),
                }
            }
        }
        s
    }
}

/// Uniform grid `start + i·step` for `i < count`.
pub fn uniform_axis(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| start + i as f64 * step).collect()
}

/// Delayed copy `s[n − shift]` with zeros outside the support; integer
/// shifts are exact, others use band-limited interpolation.
fn shifted<T: Real>(s: &[Complex<T>], shift: f64) -> Vec<Complex<T>> {
    let r = shift.round();
    if (shift - r).abs() < 1e-9 {
        let d = r as i64;
        let len = s.len() as i64;
        let zero = Complex::new(T::zero(), T::zero());
        (0..len)
            .map(|n| {
                let k = n - d;
                if (0..len).contains(&k) {
                    s[k as usize]
                } else {
                    zero
                }
            })
            .collect()
    } else {
        fractional_delay(s, shift)
    }
}

fn check_grid(frame_len: usize, ts: f64, delays: &[f64], dopplers: &[f64]) -> Result<()> {
    let half_duration = frame_len as f64 * ts / 2.0;
    let nyquist = 1.0 / (2.0 * ts);
    let tol = 1e-9;
    if delays.iter().any(|d| d.abs() > half_duration * (1.0 + tol)) {
        return Err(invalid("delay_grid", format!("delays must lie within ±{half_duration:e} s")));
    }
    if dopplers.iter().any(|f| f.abs() > nyquist * (1.0 + tol)) {
        return Err(invalid("doppler_grid", format!("Dopplers must lie within ±{nyquist:e} Hz")));
    }
    Ok(())
}

/// Per-delay Doppler sums `Σ_n p[n]·e^{−j2πνnTs}`, through an FFT when the
/// grid is uniform with `Δν·Ts = 1/K` for an integer `K`.
struct DopplerBank {
    fft_len: Option<usize>,
    start_bin: f64,
    phases: Vec<f64>,
}

impl DopplerBank {
    fn new(dopplers: &[f64], ts: f64) -> Self {
        let phases: Vec<f64> = dopplers.iter().map(|f| f * ts).collect();
        let mut fft_len = None;
        let mut start_bin = 0.0;
        if phases.len() >= 2 {
            let step = phases[1] - phases[0];
            let uniform = phases.windows(2).all(|w| ((w[1] - w[0]) - step).abs() < 1e-12 * step.abs().max(1e-300));
            let k = 1.0 / step;
            if uniform && (k - k.round()).abs() < 1e-6 && k.round() >= phases.len() as f64 {
                let kk = k.round() as usize;
                let sb = phases[0] * kk as f64;
                if (sb - sb.round()).abs() < 1e-6 {
                    fft_len = Some(kk);
                    start_bin = sb.round();
                }
            }
        }
        Self { fft_len, start_bin, phases }
    }

    fn apply<T: Real>(&self, p: &[Complex<T>], planner: &mut FftPlanner<T>, out: &mut [Complex<T>]) {
        match self.fft_len {
            Some(k) => {
                let mut buf = vec![Complex::new(T::zero(), T::zero()); k];
                for (n, v) in p.iter().enumerate() {
                    buf[n % k] = buf[n % k] + *v;
                }
                planner.plan_fft_forward(k).process(&mut buf);
                for (j, o) in out.iter_mut().enumerate() {
                    let bin = (self.start_bin as i64 + j as i64).rem_euclid(k as i64) as usize;
                    *o = buf[bin];
                }
            }
            None => direct_doppler(p, &self.phases, out),
        }
    }
}

fn direct_doppler<T: Real>(p: &[Complex<T>], phases: &[f64], out: &mut [Complex<T>]) {
    for (o, &ph) in out.iter_mut().zip(phases) {
        let mut acc = Complex::new(0.0, 0.0);
        for (n, v) in p.iter().enumerate() {
            let (s, c) = (-std::f64::consts::TAU * (ph * n as f64).fract()).sin_cos();
            acc += Complex::new(v.re.as_f64(), v.im.as_f64()) * Complex::new(c, s);
        }
        *o = Complex::new(T::lit(acc.re), T::lit(acc.im));
    }
}

/// Discrete ambiguity function `A(τ,ν) = Σ_n s[n]·s*[n − τ/Ts]·e^{−j2πνnTs}`
/// of a frame, on the given delay (seconds) and Doppler (Hz) grids.
pub fn ambiguity_function<T: Real>(frame: &TimeFrame<T>, delays: &[f64], dopplers: &[f64]) -> Result<AmbiguitySurface<T>> {
    let ts = frame.sample_interval;
    check_grid(frame.len(), ts, delays, dopplers)?;
    let bank = DopplerBank::new(dopplers, ts);
    let cols = dopplers.len();
    let rows: Vec<Vec<Complex<T>>> = delays
        .par_iter()
        .map_init(FftPlanner::new, |planner, &tau| {
            let sh = shifted(&frame.samples, tau / ts);
            let p: Vec<Complex<T>> = frame.samples.iter().zip(&sh).map(|(a, b)| a * b.conj()).collect();
            let mut row = vec![Complex::new(T::zero(), T::zero()); cols];
            bank.apply(&p, planner, &mut row);
            row
        })
        .collect();
    AmbiguitySurface::new(delays.to_vec(), dopplers.to_vec(), rows.concat(), SurfaceKind::Complex)
}

/// Direct double sum with no FFT, used as a reference.
pub fn ambiguity_function_direct<T: Real>(
    frame: &TimeFrame<T>,
    delays: &[f64],
    dopplers: &[f64],
) -> Result<AmbiguitySurface<T>> {
    let ts = frame.sample_interval;
    check_grid(frame.len(), ts, delays, dopplers)?;
    let phases: Vec<f64> = dopplers.iter().map(|f| f * ts).collect();
    let mut values = Vec::with_capacity(delays.len() * dopplers.len());
    for &tau in delays {
        let sh = shifted(&frame.samples, tau / ts);
        let p: Vec<Complex<T>> = frame.samples.iter().zip(&sh).map(|(a, b)| a * b.conj()).collect();
        let mut row = vec![Complex::new(T::zero(), T::zero()); dopplers.len()];
        direct_doppler(&p, &phases, &mut row);
        values.extend(row);
    }
    AmbiguitySurface::new(delays.to_vec(), dopplers.to_vec(), values, SurfaceKind::Complex)
}

/// Replica lattice of a chirp subcarrier and its reduced fundamental cell.
///
/// Coordinates are integers: delay in samples `Δt` and Doppler in bins
/// `1/(NΔt)`. The lattice is generated by `(1, k)` and `(0, N)` with
/// `k = 2N·c1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Parallelogram {
    pub n: usize,
    pub k: i64,
    /// Reduced generators.
    pub basis: [(i64, i64); 2],
    /// Corners `±(g1 ± g2)/2`, in (samples, bins), counter-clockwise.
    pub vertices: [(f64, f64); 4],
}

impl Parallelogram {
    /// Area in normalized units (delay in `Δt`, Doppler in `1/Δt`).
    pub fn area(&self) -> Ratio<i64> {
        let [(a, b), (c, d)] = self.basis;
        Ratio::new((a * d - b * c).abs(), self.n as i64)
    }

    /// Lattice points within a delay range, Doppler folded into
    /// `(−N/2, N/2]` bins.
    pub fn lattice_points(&self, max_delay: i64) -> Vec<(i64, i64)> {
        let n = self.n as i64;
        (-max_delay..=max_delay)
            .map(|l| {
                let mut b = (self.k * l).rem_euclid(n);
                if b > n / 2 {
                    b -= n;
                }
                (l, b)
            })
            .collect()
    }

    /// Distance in grid cells from `(delay, bin)` to the nearest lattice
    /// point, using the Chebyshev metric with Doppler taken modulo `N`.
    pub fn cell_distance(&self, delay: f64, bin: f64) -> f64 {
        let n = self.n as f64;
        let mut best = f64::INFINITY;
        for l in [delay.floor() as i64 - 1, delay.floor() as i64, delay.ceil() as i64, delay.ceil() as i64 + 1] {
            let b = (self.k * l) as f64;
            let mut db = (bin - b).rem_euclid(n);
            if db > n / 2.0 {
                db = n - db;
            }
            best = best.min((delay - l as f64).abs().max(db));
        }
        best
    }
}

/// Gauss–Lagrange reduction of a 2-D integer basis under the Euclidean
/// metric.
fn gauss_reduce(mut u: (i64, i64), mut v: (i64, i64)) -> [(i64, i64); 2] {
    let dot = |a: (i64, i64), b: (i64, i64)| a.0 * b.0 + a.1 * b.1;
    if dot(u, u) > dot(v, v) {
        std::mem::swap(&mut u, &mut v);
    }
    loop {
        let m = (dot(u, v) as f64 / dot(u, u) as f64).round() as i64;
        v = (v.0 - m * u.0, v.1 - m * u.1);
        if dot(v, v) >= dot(u, u) {
            return [u, v];
        }
        std::mem::swap(&mut u, &mut v);
    }
}

/// Fundamental region of the replica lattice for integer `2N·c1`.
pub fn unambiguity_parallelogram(cfg: &ChirpConfig) -> Result<Parallelogram> {
    let k = cfg
        .c1_k()
        .ok_or_else(|| invalid("c1", "parallelogram geometry needs 2N·c1 to be an integer"))?;
    let n = cfg.n() as i64;
    let kr = k.rem_euclid(n);
    let basis = if kr == 0 { [(1, 0), (0, n)] } else { gauss_reduce((1, kr), (0, n)) };
    let [(a, b), (c, d)] = basis;
    let (a, b, c, d) = (a as f64, b as f64, c as f64, d as f64);
    let vertices = [
        ((-a - c) / 2.0, (-b - d) / 2.0),
        ((a - c) / 2.0, (b - d) / 2.0),
        ((a + c) / 2.0, (b + d) / 2.0),
        ((c - a) / 2.0, (d - b) / 2.0),
    ];
    Ok(Parallelogram { n: cfg.n(), k: kr, basis, vertices })
}

/// Settings for a Monte Carlo average of `|A|²` over random data symbols.
#[derive(Clone, Debug)]
pub struct ExpectedAfSetup {
    pub constellation: Constellation,
    pub layout: GridLayout,
    pub rrc: Option<RrcConfig>,
    pub trials: usize,
    /// Delay grid in symbol intervals `Δt`.
    pub delays: Vec<f64>,
    /// Doppler grid in bins `1/(NΔt)`.
    pub doppler_bins: Vec<f64>,
}

/// Mean of `|A(τ,ν)|²` over `trials` independent data grids.
pub fn expected_squared_af(cfg: &ChirpConfig, setup: &ExpectedAfSetup, seed: u64) -> Result<AmbiguitySurface<f64>> {
    if setup.trials < 50 {
        return Err(invalid("trials", "expected squared AF needs at least 50 trials"));
    }
    if setup.layout.n() != cfg.n() {
        return Err(Error::LengthMismatch { expected: cfg.n(), actual: setup.layout.n() });
    }
    let plan = Daft::<f64>::new(cfg);
    let dt = cfg.sample_interval();
    let nf = cfg.n() as f64;
    let delays: Vec<f64> = setup.delays.iter().map(|d| d * dt).collect();
    let dopplers: Vec<f64> = setup.doppler_bins.iter().map(|b| b / (nf * dt)).collect();
    let data_idx = setup.layout.data_indices();
    let c = setup.constellation;
    let one = |t: usize| -> Result<Vec<f64>> {
        let mut rng = trial_rng(seed, 0, t as u64);
        let labels: Vec<Complex<f64>> =
            (0..data_idx.len()).map(|_| c.point(rng.random_range(0..c.order()))).collect();
        let grid = build_grid(&setup.layout, &labels, setup.layout.pilot_value())?;
        let mut frame = modulate_with(&plan, &grid.symbols)?;
        if let Some(rrc) = setup.rrc {
            frame = pulse_shape(&frame, &rrc)?;
        }
        let af = ambiguity_function(&frame, &delays, &dopplers)?;
        Ok(af.values.iter().map(|v| v.norm_sqr()).collect())
    };
    let sums = (0..setup.trials)
        .map(one)
        .try_fold(vec![0.0; delays.len() * dopplers.len()], |mut acc, r| -> Result<Vec<f64>> {
            for (a, v) in acc.iter_mut().zip(r?) {
                *a += v;
            }
            Ok(acc)
        })?;
    let r = setup.trials as f64;
    let values = sums.into_iter().map(|v| Complex::new(v / r, 0.0)).collect();
    AmbiguitySurface::new(delays, dopplers, values, SurfaceKind::Power)
}

/// For each delay row, the Doppler index of the smallest value among cells
/// whose Doppler lies outside `exclude` of zero: the depression line.
pub fn depression_line(surface: &AmbiguitySurface<f64>, exclude: f64) -> Vec<usize> {
    let (rows, cols) = surface.shape();
    (0..rows)
        .map(|i| {
            (0..cols)
                .filter(|&j| surface.doppler_axis[j].abs() >= exclude)
                .min_by(|&a, &b| surface.power(i, a).partial_cmp(&surface.power(i, b)).unwrap())
                .unwrap_or(0)
        })
        .collect()
}
