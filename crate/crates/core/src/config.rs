//! Chirp waveform parameters.

use crate::error::{invalid, Result};

/// Parameters of one AFDM symbol.
///
/// `c1` is held both as a float and, when it is an integer multiple of
/// `1/(2N)`, as that integer. Phase arithmetic uses the integer when present
/// so chirp-periodic prefixes and replica lattices are exact.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChirpConfig {
    n: usize,
    c1: f64,
    c1_k: Option<i64>,
    c2: f64,
    sample_interval: f64,
    cpp_len: usize,
}

impl ChirpConfig {
    /// Arbitrary real `c1`. If `2N·c1` is within 1e-9 of an integer the
    /// exact form is recorded.
    pub fn new(n: usize, c1: f64, c2: f64, sample_interval: f64, cpp_len: usize) -> Result<Self> {
        Self::validate(n, sample_interval, cpp_len)?;
        if !c1.is_finite() {
            return Err(invalid("c1", "must be finite"));
        }
        if !c2.is_finite() {
            return Err(invalid("c2", "must be finite"));
        }
        let scaled = c1 * 2.0 * n as f64;
        let c1_k = ((scaled - scaled.round()).abs() < 1e-9).then(|| scaled.round() as i64);
        let c1 = c1_k.map_or(c1, |k| k as f64 / (2.0 * n as f64));
        Ok(Self { n, c1, c1_k, c2, sample_interval, cpp_len })
    }

    /// `c1 = k/(2N)` exactly.
    pub fn with_integer_c1(n: usize, k: i64, c2: f64, sample_interval: f64, cpp_len: usize) -> Result<Self> {
        Self::validate(n, sample_interval, cpp_len)?;
        if !c2.is_finite() {
            return Err(invalid("c2", "must be finite"));
        }
        Ok(Self { n, c1: k as f64 / (2.0 * n as f64), c1_k: Some(k), c2, sample_interval, cpp_len })
    }

    /// `c1 = c2 = 0`: the transform collapses to the DFT.
    pub fn ofdm(n: usize, sample_interval: f64, cpp_len: usize) -> Result<Self> {
        Self::with_integer_c1(n, 0, 0.0, sample_interval, cpp_len)
    }

    /// `c1 = c2 = 1/(2N)`.
    pub fn ocdm(n: usize, sample_interval: f64, cpp_len: usize) -> Result<Self> {
        Self::with_integer_c1(n, 1, 1.0 / (2.0 * n as f64), sample_interval, cpp_len)
    }

    fn validate(n: usize, sample_interval: f64, cpp_len: usize) -> Result<()> {
        if n < 2 {
            return Err(invalid("n", format!("N must be at least 2, got {n}")));
        }
        if cpp_len >= n {
            return Err(invalid("cpp_len", format!("prefix length {cpp_len} must be below N = {n}")));
        }
        if !(sample_interval.is_finite() && sample_interval > 0.0) {
            return Err(invalid("sample_interval", "must be positive and finite"));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    /// The integer `k` with `c1 = k/(2N)`, if `c1` was given in that form.
    pub fn c1_k(&self) -> Option<i64> {
        self.c1_k
    }

    pub fn c1_is_integer_multiple(&self) -> bool {
        self.c1_k.is_some()
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn sample_interval(&self) -> f64 {
        self.sample_interval
    }

    pub fn cpp_len(&self) -> usize {
        self.cpp_len
    }

    /// Samples per symbol including the prefix, at symbol rate.
    pub fn symbol_len(&self) -> usize {
        self.n + self.cpp_len
    }

    pub fn symbol_duration(&self) -> f64 {
        self.symbol_len() as f64 * self.sample_interval
    }

    pub fn with_c1_c2(&self, c1: f64, c2: f64) -> Result<Self> {
        Self::new(self.n, c1, c2, self.sample_interval, self.cpp_len)
    }

    pub fn with_cpp_len(&self, cpp_len: usize) -> Result<Self> {
        let mut out = *self;
        Self::validate(self.n, self.sample_interval, cpp_len)?;
        out.cpp_len = cpp_len;
        Ok(out)
    }

    /// Fractional part of `c1·n²` in cycles, for any integer `n`.
    pub fn c1_phase_cycles(&self, n: i64) -> f64 {
        match self.c1_k {
            Some(k) => {
                let den = 2 * self.n as i128;
                let num = (k as i128 * (n as i128) * (n as i128)).rem_euclid(den);
                num as f64 / den as f64
            }
            None => (self.c1 * (n as f64) * (n as f64)).fract(),
        }
    }

    /// Fractional part of `c2·m²` in cycles.
    pub fn c2_phase_cycles(&self, m: i64) -> f64 {
        (self.c2 * (m as f64) * (m as f64)).fract()
    }

    /// DAFT-domain index shift of a path with integer delay `l` and
    /// normalized Doppler `alpha` (Doppler bins): `alpha − 2N·c1·l`.
    pub fn path_shift(&self, delay: i64, alpha: f64) -> f64 {
        alpha - 2.0 * self.n as f64 * self.c1 * delay as f64
    }

    /// Integer form of [`Self::path_shift`] reduced into `0..N`, available
    /// when `2N·c1` is an integer.
    pub fn path_shift_index(&self, delay: i64, alpha: i64) -> Option<usize> {
        self.c1_k.map(|k| (alpha - k * delay).rem_euclid(self.n as i64) as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(ChirpConfig::new(1, 0.0, 0.0, 1.0, 0).is_err());
        assert!(ChirpConfig::new(8, 0.0, 0.0, 1.0, 8).is_err());
        assert!(ChirpConfig::new(8, 0.0, 0.0, 0.0, 0).is_err());
    }

    #[test]
    fn detects_integer_multiple() {
        let cfg = ChirpConfig::new(128, 9.0 / 256.0, 0.0, 1.0, 0).unwrap();
        assert_eq!(cfg.c1_k(), Some(9));
        let cfg = ChirpConfig::new(16, 0.013, 0.0, 1.0, 0).unwrap();
        assert_eq!(cfg.c1_k(), None);
    }

    #[test]
    fn exact_phase_matches_float() {
        let cfg = ChirpConfig::with_integer_c1(128, 9, 0.0, 1.0, 0).unwrap();
        for n in [-5_i64, 0, 3, 16, 127, 1000] {
            let f = (9.0 * (n * n) as f64 / 256.0).fract();
            assert!((cfg.c1_phase_cycles(n) - f.rem_euclid(1.0)).abs() < 1e-12);
        }
        // c1·16² = 9·256/256 = 9 full cycles
        assert_eq!(cfg.c1_phase_cycles(16), 0.0);
    }
}
