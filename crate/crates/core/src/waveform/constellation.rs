use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Gray-labelled, unit-average-energy constellations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Constellation {
    Bpsk,
    /// Also called 4QAM.
    Qpsk,
    Qam16,
}

/// Gray-coded 4-PAM levels for bit pairs `00, 01, 10, 11`.
const PAM4: [f64; 4] = [-3.0, -1.0, 3.0, 1.0];

impl Constellation {
    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Self::Bpsk),
            "qpsk" | "4qam" => Ok(Self::Qpsk),
            "16qam" | "qam16" => Ok(Self::Qam16),
            other => Err(invalid("constellation", format!("unknown constellation `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Bpsk => "bpsk",
            Self::Qpsk => "qpsk",
            Self::Qam16 => "16qam",
        }
    }

    pub fn bits_per_symbol(&self) -> usize {
        match self {
            Self::Bpsk => 1,
            Self::Qpsk => 2,
            Self::Qam16 => 4,
        }
    }

    pub fn order(&self) -> usize {
        1 << self.bits_per_symbol()
    }

    /// Constellation point for a label whose bits are read MSB first.
    pub fn point<T: Real>(&self, label: usize) -> Complex<T> {
        match self {
            Self::Bpsk => Complex::new(if label & 1 == 0 { T::one() } else { -T::one() }, T::zero()),
            Self::Qpsk => {
                let s = T::lit(std::f64::consts::FRAC_1_SQRT_2);
                let re = if label & 0b10 == 0 { s } else { -s };
                let im = if label & 0b01 == 0 { s } else { -s };
                Complex::new(re, im)
            }
            Self::Qam16 => {
                let s = 1.0 / 10f64.sqrt();
                Complex::new(T::lit(PAM4[(label >> 2) & 3] * s), T::lit(PAM4[label & 3] * s))
            }
        }
    }

    pub fn points<T: Real>(&self) -> Vec<Complex<T>> {
        (0..self.order()).map(|l| self.point(l)).collect()
    }

    /// `E|x|⁴` for the unit-energy alphabet.
    pub fn fourth_moment(&self) -> f64 {
        let pts = self.points::<f64>();
        pts.iter().map(|p| p.norm_sqr().powi(2)).sum::<f64>() / pts.len() as f64
    }

    pub fn map_bits<T: Real>(&self, bits: &[u8]) -> Result<Vec<Complex<T>>> {
        let bps = self.bits_per_symbol();
        if bits.len() % bps != 0 {
            return Err(Error::LengthMismatch { expected: bits.len().div_ceil(bps) * bps, actual: bits.len() });
        }
        bits.chunks_exact(bps)
            .map(|chunk| {
                let mut label = 0usize;
                for &b in chunk {
                    if b > 1 {
                        return Err(invalid("bits", format!("bit value {b} is not 0 or 1")));
                    }
                    label = (label << 1) | b as usize;
                }
                Ok(self.point(label))
            })
            .collect()
    }

    /// Label of the nearest constellation point.
    pub fn slice<T: Real>(&self, z: Complex<T>) -> usize {
        let (re, im) = (z.re.as_f64(), z.im.as_f64());
        match self {
            Self::Bpsk => usize::from(re < 0.0),
            Self::Qpsk => (usize::from(re < 0.0) << 1) | usize::from(im < 0.0),
            Self::Qam16 => {
                let s = 10f64.sqrt();
                (pam4_label(re * s) << 2) | pam4_label(im * s)
            }
        }
    }

    pub fn label_bits(&self, label: usize, out: &mut Vec<u8>) {
        for b in (0..self.bits_per_symbol()).rev() {
            out.push(((label >> b) & 1) as u8);
        }
    }

    /// Hard-decision demapping by nearest point.
    pub fn demap<T: Real>(&self, symbols: &[Complex<T>]) -> Vec<u8> {
        let mut out = Vec::with_capacity(symbols.len() * self.bits_per_symbol());
        for &z in symbols {
            self.label_bits(self.slice(z), &mut out);
        }
        out
    }
}

fn pam4_label(v: f64) -> usize {
    if v < -2.0 {
        0
    } else if v < 0.0 {
        1
    } else if v < 2.0 {
        3
    } else {
        2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [Constellation; 3] = [Constellation::Bpsk, Constellation::Qpsk, Constellation::Qam16];

    #[test]
    fn unit_average_energy() {
        for c in ALL {
            let e: f64 = c.points::<f64>().iter().map(|p| p.norm_sqr()).sum::<f64>() / c.order() as f64;
            assert!((e - 1.0).abs() < 1e-12, "{c:?}");
        }
    }

    #[test]
    fn simple_mappings() {
        let b: Vec<Complex<f64>> = Constellation::Bpsk.map_bits(&[0, 1]).unwrap();
        assert_eq!(b, vec![Complex::new(1.0, 0.0), Complex::new(-1.0, 0.0)]);
        let q: Vec<Complex<f64>> = Constellation::Qpsk.map_bits(&[0, 1, 1, 0]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((q[0] - Complex::new(s, -s)).norm() < 1e-15);
        assert!((q[1] - Complex::new(-s, s)).norm() < 1e-15);
        assert!(Constellation::Qpsk.map_bits::<f64>(&[0, 1, 1]).is_err());
        assert!(Constellation::Bpsk.map_bits::<f64>(&[2]).is_err());
    }

    #[test]
    fn exhaustive_round_trip_and_gray_adjacency() {
        for c in ALL {
            for label in 0..c.order() {
                let mut bits = Vec::new();
                c.label_bits(label, &mut bits);
                let sym: Vec<Complex<f64>> = c.map_bits(&bits).unwrap();
                assert_eq!(c.demap(&sym), bits);
            }
            // nearest neighbours differ in exactly one bit
            let pts = c.points::<f64>();
            let dmin = (0..pts.len())
                .flat_map(|i| (0..pts.len()).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| (pts[i] - pts[j]).norm())
                .fold(f64::INFINITY, f64::min);
            for i in 0..pts.len() {
                for j in 0..pts.len() {
                    if i != j && ((pts[i] - pts[j]).norm() - dmin).abs() < 1e-9 {
                        assert_eq!((i ^ j).count_ones(), 1, "{c:?} {i} {j}");
                    }
                }
            }
        }
    }

    #[test]
    fn fourth_moments() {
        assert!((Constellation::Qpsk.fourth_moment() - 1.0).abs() < 1e-12);
        assert!((Constellation::Qam16.fourth_moment() - 1.32).abs() < 1e-12);
    }
}
