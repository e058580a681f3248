use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::Real;
use crate::waveform::Constellation;

/// Linear MMSE estimate `(MᴴM + σ²I)⁻¹Mᴴy` for unit-energy symbols.
pub fn mmse_equalize<T: Real>(y: &[Complex<T>], m: &CMatrix<T>, noise_var: f64) -> Result<Vec<Complex<T>>> {
    if !(noise_var > 0.0 && noise_var.is_finite()) {
        return Err(invalid("noise_var", "must be positive and finite"));
    }
    if y.len() != m.rows() {
        return Err(Error::LengthMismatch { expected: m.rows(), actual: y.len() });
    }
    let mh = m.adjoint();
    let mut gram = mh.matmul(m)?;
    for i in 0..gram.rows() {
        gram[(i, i)] = gram[(i, i)] + Complex::new(T::lit(noise_var), T::zero());
    }
    gram.solve(&mh.mul_vec(y)?)
}

/// MMSE equalization followed by per-symbol slicing and demapping.
pub fn mmse_detect<T: Real>(y: &[Complex<T>], m: &CMatrix<T>, c: Constellation, noise_var: f64) -> Result<Vec<u8>> {
    Ok(c.demap(&mmse_equalize(y, m, noise_var)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::ml_detect;
    use crate::rng::trial_rng;
    use rand::Rng;

    type C = Complex<f64>;

    #[test]
    fn rejects_non_positive_noise() {
        let m = CMatrix::<f64>::identity(2);
        assert!(mmse_detect(&[C::new(1.0, 0.0); 2], &m, Constellation::Bpsk, 0.0).is_err());
    }

    #[test]
    fn identity_matches_ml_slicer() {
        let m = CMatrix::<f64>::identity(8);
        let mut rng = trial_rng(4, 4, 4);
        let y: Vec<C> = (0..8).map(|_| C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        for c in [Constellation::Bpsk, Constellation::Qpsk] {
            let yy: Vec<C> = if c == Constellation::Bpsk { y.clone() } else { y[..8].to_vec() };
            assert_eq!(mmse_detect(&yy, &m, c, 0.1).unwrap(), ml_detect(&yy, &m, c).unwrap());
        }
    }

    #[test]
    fn zero_forcing_limit_equals_ml() {
        let mut rng = trial_rng(5, 5, 5);
        for _ in 0..50 {
            let m = CMatrix::from_fn(6, 6, |r, k| {
                C::new(if r == k { 2.0 } else { 0.0 } + rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            });
            let bits: Vec<u8> = (0..6).map(|_| rng.random_range(0..2u8)).collect();
            let y = m.mul_vec(&Constellation::Bpsk.map_bits(&bits).unwrap()).unwrap();
            assert_eq!(mmse_detect(&y, &m, Constellation::Bpsk, 1e-12).unwrap(), bits);
            assert_eq!(ml_detect(&y, &m, Constellation::Bpsk).unwrap(), bits);
        }
    }
}
