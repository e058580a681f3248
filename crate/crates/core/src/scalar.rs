//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Real floating-point scalar: `f32` or `f64`.
///
/// Parameters that describe a configuration (chirp rates, sample intervals,
/// carrier frequencies) stay in `f64`; sample buffers and matrices use `T`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` constant.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 literal")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize fits in float")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Unit phasor `exp(j·2π·cycles)`, evaluated in `f64` and cast down.
#[inline]
pub fn cis<T: Real>(cycles: f64) -> Complex<T> {
    let (s, c) = (std::f64::consts::TAU * cycles).sin_cos();
    Complex::new(T::lit(c), T::lit(s))
}

/// Squared Euclidean norm of a complex slice.
pub fn energy<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

pub fn norm<T: Real>(v: &[Complex<T>]) -> T {
    energy(v).sqrt()
}

/// `‖a − b‖₂ / ‖b‖₂` (absolute norm when `b` is zero).
pub fn rel_error<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    assert_eq!(a.len(), b.len(), "rel_error length mismatch");
    let diff = a
        .iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + (*x - *y).norm_sqr())
        .sqrt();
    let base = norm(b);
    if base > T::zero() {
        diff / base
    } else {
        diff
    }
}

/// Inner product `Σ conj(a[i])·b[i]`.
pub fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter()
        .zip(b)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y)
}

pub fn db(power_ratio: f64) -> f64 {
    10.0 * power_ratio.log10()
}
