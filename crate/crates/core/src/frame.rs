use num_complex::Complex;

use crate::scalar::{energy, Real};

/// Baseband samples of one or more concatenated symbols.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeFrame<T> {
    pub samples: Vec<Complex<T>>,
    /// Oversampling factor relative to the symbol-rate grid (1 = symbol rate).
    pub osf: usize,
    pub has_cpp: bool,
    /// Seconds between consecutive entries of `samples` (`Δt / osf`).
    pub sample_interval: f64,
}

impl<T: Real> TimeFrame<T> {
    pub fn new(samples: Vec<Complex<T>>, osf: usize, has_cpp: bool, sample_interval: f64) -> Self {
        Self { samples, osf, has_cpp, sample_interval }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> T {
        energy(&self.samples)
    }

    /// Mean power per sample.
    pub fn power(&self) -> T {
        if self.samples.is_empty() {
            T::zero()
        } else {
            self.energy() / T::from_usize_lossy(self.samples.len())
        }
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.sample_interval
    }

    /// Concatenates frames with identical sampling.
    pub fn concat(frames: &[TimeFrame<T>]) -> Option<Self> {
        let first = frames.first()?;
        let mut samples = Vec::with_capacity(frames.iter().map(|f| f.len()).sum());
        for f in frames {
            if f.osf != first.osf || f.has_cpp != first.has_cpp || f.sample_interval != first.sample_interval {
                return None;
            }
            samples.extend_from_slice(&f.samples);
        }
        Some(Self::new(samples, first.osf, first.has_cpp, first.sample_interval))
    }

    /// Elementwise sum; the result takes the longer length.
    pub fn superpose(&self, other: &Self) -> Self {
        let len = self.len().max(other.len());
        let zero = Complex::new(T::zero(), T::zero());
        let samples = (0..len)
            .map(|i| *self.samples.get(i).unwrap_or(&zero) + *other.samples.get(i).unwrap_or(&zero))
            .collect();
        Self::new(samples, self.osf, self.has_cpp, self.sample_interval)
    }

    pub fn scaled(&self, g: Complex<T>) -> Self {
        Self::new(self.samples.iter().map(|z| z * g).collect(), self.osf, self.has_cpp, self.sample_interval)
    }
}
