//! Discrete affine Fourier transform and chirp-periodic prefix handling.
//!
//! Convention used throughout the crate:
//!
//! ```text
//! s[n] = (1/√N) Σ_m x[m] · exp(+j2π(c1·n² + c2·m² + n·m/N))      (IDAFT)
//! x[m] = (1/√N) Σ_n s[n] · exp(−j2π(c1·n² + c2·m² + n·m/N))      (DAFT)
//! ```
//!
//! The IDAFT is computed as conj-c2 chirp scaling, a unitary inverse FFT, then
//! conj-c1 chirp scaling. [`daft_matrix`] builds the same map densely.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::config::ChirpConfig;
use crate::error::{invalid, Error, Result};
use crate::frame::TimeFrame;
use crate::linalg::CMatrix;
use crate::scalar::{cis, Real};

/// `exp(−j2π·c·n²)` for `n = 0..len`.
pub fn chirp_phase_vector<T: Real>(c: f64, len: usize) -> Vec<Complex<T>> {
    (0..len).map(|n| cis(-(c * (n as f64) * (n as f64)).fract())).collect()
}

/// Precomputed DAFT plan for one configuration.
#[derive(Clone)]
pub struct Daft<T: Real> {
    cfg: ChirpConfig,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    /// exp(−j2π c1 n²)
    chirp1: Vec<Complex<T>>,
    /// exp(−j2π c2 m²)
    chirp2: Vec<Complex<T>>,
    scale: T,
}

impl<T: Real> fmt::Debug for Daft<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Daft").field("cfg", &self.cfg).finish_non_exhaustive()
    }
}

impl<T: Real> Daft<T> {
    pub fn new(cfg: &ChirpConfig) -> Self {
        let n = cfg.n();
        let mut planner = FftPlanner::new();
        Self {
            cfg: *cfg,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            chirp1: (0..n).map(|i| cis(-cfg.c1_phase_cycles(i as i64))).collect(),
            chirp2: (0..n).map(|m| cis(-cfg.c2_phase_cycles(m as i64))).collect(),
            scale: T::one() / T::from_usize_lossy(n).sqrt(),
        }
    }

    pub fn config(&self) -> &ChirpConfig {
        &self.cfg
    }

    pub fn n(&self) -> usize {
        self.cfg.n()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(Error::LengthMismatch { expected: self.n(), actual: len });
        }
        Ok(())
    }

    /// DAFT-domain symbols to time samples.
    pub fn idaft(&self, x: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        self.check_len(x.len())?;
        let mut buf = x.to_vec();
        self.idaft_in_place(&mut buf);
        Ok(buf)
    }

    /// Time samples to DAFT-domain symbols.
    pub fn daft(&self, s: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        self.check_len(s.len())?;
        let mut buf = s.to_vec();
        self.daft_in_place(&mut buf);
        Ok(buf)
    }

    /// In-place IDAFT. Panics if `buf.len() != N`.
    pub fn idaft_in_place(&self, buf: &mut [Complex<T>]) {
        assert_eq!(buf.len(), self.n());
        for (v, c) in buf.iter_mut().zip(&self.chirp2) {
            *v = *v * c.conj();
        }
        self.inverse.process(buf);
        for (v, c) in buf.iter_mut().zip(&self.chirp1) {
            *v = *v * c.conj() * self.scale;
        }
    }

    /// In-place DAFT. Panics if `buf.len() != N`.
    pub fn daft_in_place(&self, buf: &mut [Complex<T>]) {
        assert_eq!(buf.len(), self.n());
        for (v, c) in buf.iter_mut().zip(&self.chirp1) {
            *v = *v * c;
        }
        self.forward.process(buf);
        for (v, c) in buf.iter_mut().zip(&self.chirp2) {
            *v = *v * c * self.scale;
        }
    }
}

pub fn idaft<T: Real>(x: &[Complex<T>], cfg: &ChirpConfig) -> Result<Vec<Complex<T>>> {
    Daft::new(cfg).idaft(x)
}

pub fn daft<T: Real>(s: &[Complex<T>], cfg: &ChirpConfig) -> Result<Vec<Complex<T>>> {
    Daft::new(cfg).daft(s)
}

/// Unitary DFT, `X[k] = (1/√N) Σ x[n] e^{−j2πkn/N}`.
pub fn dft_unitary<T: Real>(x: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut buf = x.to_vec();
    if buf.is_empty() {
        return buf;
    }
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    let s = T::one() / T::from_usize_lossy(x.len()).sqrt();
    buf.iter_mut().for_each(|v| *v = *v * s);
    buf
}

/// Unitary inverse DFT.
pub fn idft_unitary<T: Real>(x: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut buf = x.to_vec();
    if buf.is_empty() {
        return buf;
    }
    FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
    let s = T::one() / T::from_usize_lossy(x.len()).sqrt();
    buf.iter_mut().for_each(|v| *v = *v * s);
    buf
}

/// Largest transform size accepted by [`daft_matrix`].
pub const DAFT_MATRIX_MAX_N: usize = 4096;

/// Dense forward DAFT matrix: entry `(m, n)` is
/// `(1/√N)·exp(−j2π(c1·n² + c2·m² + n·m/N))`. The inverse transform is its
/// adjoint.
pub fn daft_matrix<T: Real>(cfg: &ChirpConfig) -> Result<CMatrix<T>> {
    let n = cfg.n();
    if n > DAFT_MATRIX_MAX_N {
        return Err(invalid("n", format!("dense DAFT matrix limited to N <= {DAFT_MATRIX_MAX_N}")));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let (c1, c2) = (cfg.c1(), cfg.c2());
    Ok(CMatrix::from_fn(n, n, |m, k| {
        let (m, k) = (m as f64, k as f64);
        let phase = -std::f64::consts::TAU * (c1 * k * k + c2 * m * m + k * m / n as f64);
        Complex::new(T::lit(scale * phase.cos()), T::lit(scale * phase.sin()))
    }))
}

/// Prepends the chirp-periodic prefix: sample `n ∈ −L..−1` is
/// `s[N+n]·exp(−j2π·c1·(N² + 2N·n))`.
pub fn add_cpp<T: Real>(s: &[Complex<T>], cfg: &ChirpConfig) -> Result<Vec<Complex<T>>> {
    let n = cfg.n();
    if s.len() != n {
        return Err(Error::LengthMismatch { expected: n, actual: s.len() });
    }
    let l = cfg.cpp_len();
    let mut out = Vec::with_capacity(n + l);
    for i in (1..=l as i64).rev() {
        out.push(s[n - i as usize] * cis::<T>(-cpp_phase_cycles(cfg, -i)));
    }
    out.extend_from_slice(s);
    Ok(out)
}

/// Fractional part of `c1·(N² + 2N·n)` for a prefix position `n < 0`.
pub(crate) fn cpp_phase_cycles(cfg: &ChirpConfig, n: i64) -> f64 {
    let big_n = cfg.n() as i64;
    match cfg.c1_k() {
        Some(k) => {
            let den = 2 * big_n as i128;
            let num = (k as i128 * (big_n as i128 * big_n as i128 + 2 * big_n as i128 * n as i128)).rem_euclid(den);
            num as f64 / den as f64
        }
        None => {
            let nn = big_n as f64;
            (cfg.c1() * (nn * nn + 2.0 * nn * n as f64)).fract()
        }
    }
}

/// The `N·osf` body samples of symbol 0, dropping its prefix.
pub fn remove_cpp<T: Real>(frame: &TimeFrame<T>, cfg: &ChirpConfig) -> Result<Vec<Complex<T>>> {
    remove_cpp_symbol(frame, cfg, 0)
}

/// The body samples of symbol `k` in a concatenated multi-symbol frame.
pub fn remove_cpp_symbol<T: Real>(frame: &TimeFrame<T>, cfg: &ChirpConfig, k: usize) -> Result<Vec<Complex<T>>> {
    if !frame.has_cpp {
        return Err(invalid("frame", "frame carries no prefix"));
    }
    let osf = frame.osf.max(1);
    let sym = cfg.symbol_len() * osf;
    let start = k * sym + cfg.cpp_len() * osf;
    let end = (k + 1) * sym;
    if frame.samples.len() < end {
        return Err(Error::FrameTooShort { needed: end, available: frame.samples.len() });
    }
    Ok(frame.samples[start..end].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rel_error;
    use approx::assert_abs_diff_eq;

    type C = Complex<f64>;

    fn cfg(n: usize, c1: f64, c2: f64, l: usize) -> ChirpConfig {
        ChirpConfig::new(n, c1, c2, 1.0, l).unwrap()
    }

    fn ramp(n: usize) -> Vec<C> {
        (0..n).map(|i| C::new((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos() - 0.2)).collect()
    }

    #[test]
    fn chirp_vector_examples() {
        let v = chirp_phase_vector::<f64>(0.0, 4);
        assert!(v.iter().all(|z| (z - C::new(1.0, 0.0)).norm() < 1e-15));
        let v = chirp_phase_vector::<f64>(1.0 / 8.0, 4);
        let expect = [0.0, -0.25, -1.0, -2.25].map(|p: f64| C::from_polar(1.0, std::f64::consts::PI * p));
        for (a, b) in v.iter().zip(&expect) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-14);
            assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-14);
        }
        // c = 1/(2N), N = 128, n = 16: exp(−j2π·256/256) = 1
        let v = chirp_phase_vector::<f64>(1.0 / 256.0, 17);
        let direct = C::from_polar(1.0, -std::f64::consts::TAU * 256.0 / 256.0);
        assert!((v[16] - direct).norm() < 1e-14);
        assert!((v[16] - C::new(1.0, 0.0)).norm() < 1e-14);
        assert!(v.iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
    }

    #[test]
    fn impulse_idaft_is_constant() {
        let mut x = vec![C::new(0.0, 0.0); 8];
        x[0] = C::new(1.0, 0.0);
        let s = idaft(&x, &cfg(8, 0.0, 0.0, 0)).unwrap();
        for v in s {
            assert_abs_diff_eq!(v.re, 1.0 / 8f64.sqrt(), epsilon = 1e-15);
            assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn rejects_length_mismatch() {
        let c = cfg(8, 0.1, 0.2, 0);
        assert!(matches!(idaft(&ramp(7), &c), Err(Error::LengthMismatch { expected: 8, actual: 7 })));
        assert!(daft(&ramp(9), &c).is_err());
        assert!(add_cpp(&ramp(9), &c).is_err());
    }

    #[test]
    fn matches_dense_oracle() {
        let c = cfg(16, 3.0 / 32.0, 0.7, 0);
        let x = ramp(16);
        let a = daft_matrix::<f64>(&c).unwrap();
        let s = idaft(&x, &c).unwrap();
        let oracle = a.adjoint().mul_vec(&x).unwrap();
        assert!(rel_error(&s, &oracle) < 1e-10);
        // forward matrix undoes the fast inverse
        assert!(rel_error(&a.mul_vec(&s).unwrap(), &x) < 1e-10);
    }

    #[test]
    fn dft_matrix_when_chirps_vanish() {
        let a = daft_matrix::<f64>(&cfg(4, 0.0, 0.0, 0)).unwrap();
        for m in 0..4 {
            for k in 0..4 {
                let e = C::from_polar(0.5, -std::f64::consts::TAU * (m * k) as f64 / 4.0);
                assert!((a[(m, k)] - e).norm() < 1e-15);
            }
        }
        let a = daft_matrix::<f64>(&cfg(64, 5.0 / 128.0, 1.3, 0)).unwrap();
        assert!(a.unitarity_error() <= 1e-9);
    }

    #[test]
    fn cpp_is_cp_for_integer_c1_even_n() {
        let c = ChirpConfig::with_integer_c1(16, 3, 0.4, 1.0, 5).unwrap();
        let s = idaft(&ramp(16), &c).unwrap();
        let framed = add_cpp(&s, &c).unwrap();
        for i in 0..5 {
            assert!((framed[i] - s[11 + i]).norm() < 1e-12);
        }
        // zero chirp is a plain cyclic prefix
        let c0 = cfg(16, 0.0, 0.0, 3);
        let f0 = add_cpp(&s, &c0).unwrap();
        assert_eq!(&f0[..3], &s[13..]);
    }

    #[test]
    fn cpp_direct_formula_for_irrational_c1() {
        let c = cfg(16, 0.013, 0.0, 4);
        let s = ramp(16);
        let framed = add_cpp(&s, &c).unwrap();
        for (pos, n) in (-4_i64..0).enumerate() {
            let phase = -std::f64::consts::TAU * 0.013 * (256.0 + 32.0 * n as f64);
            let expect = s[(16 + n) as usize] * C::from_polar(1.0, phase);
            assert!((framed[pos] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn cpp_continues_idaft_formula() {
        // The prefix equals the IDAFT kernel evaluated at negative time.
        let c = cfg(12, 0.031, 0.2, 5);
        let x = ramp(12);
        let framed = add_cpp(&idaft(&x, &c).unwrap(), &c).unwrap();
        for (pos, n) in (-5_i64..0).enumerate() {
            let v: C = (0..12)
                .map(|m| {
                    let p = 0.031 * (n * n) as f64 + 0.2 * (m * m) as f64 + (n * m as i64) as f64 / 12.0;
                    x[m] * C::from_polar(1.0 / 12f64.sqrt(), std::f64::consts::TAU * p)
                })
                .sum();
            assert!((framed[pos] - v).norm() < 1e-11);
        }
    }

    #[test]
    fn remove_cpp_indexes_symbols() {
        let c = cfg(8, 0.0, 0.0, 2);
        let samples: Vec<C> = (0..30).map(|i| C::new(i as f64, 0.0)).collect();
        let frame = TimeFrame::new(samples, 1, true, 1.0);
        let body = remove_cpp_symbol(&frame, &c, 2).unwrap();
        assert_eq!(body.iter().map(|z| z.re as usize).collect::<Vec<_>>(), (22..30).collect::<Vec<_>>());
        assert!(matches!(remove_cpp_symbol(&frame, &c, 3), Err(Error::FrameTooShort { .. })));
        let no_cpp = TimeFrame::new(vec![C::new(0.0, 0.0); 8], 1, false, 1.0);
        assert!(remove_cpp(&no_cpp, &c).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let c = cfg(64, 5.0 / 128.0, 0.3, 0);
        let x: Vec<Complex<f32>> = ramp(64).iter().map(|z| Complex::new(z.re as f32, z.im as f32)).collect();
        let back = daft(&idaft(&x, &c).unwrap(), &c).unwrap();
        assert!(rel_error(&back, &x) < 1e-5);
    }
}
