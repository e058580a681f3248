//! Maximum-likelihood detection: exhaustive enumeration (the reference) and
//! a Schnorr–Euchner sphere decoder that returns the same minimizer.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::Real;
use crate::waveform::Constellation;

/// Largest number of candidate vectors [`ml_detect`] will enumerate.
pub const ML_BUDGET: usize = 1 << 20;

/// Exhaustive ML: the bits of `argmin_x ‖y − M·x‖²` over all constellation
/// vectors. Ties go to the lexicographically smallest bit pattern.
pub fn ml_detect<T: Real>(y: &[Complex<T>], m: &CMatrix<T>, c: Constellation) -> Result<Vec<u8>> {
    let n = m.cols();
    if y.len() != m.rows() {
        return Err(Error::LengthMismatch { expected: m.rows(), actual: y.len() });
    }
    let q = c.order();
    let candidates = (q as f64).powi(n as i32);
    if candidates > ML_BUDGET as f64 {
        return Err(Error::BudgetExceeded { candidates, budget: ML_BUDGET });
    }
    let points = c.points::<T>();
    let cols: Vec<Vec<Complex<T>>> = (0..n).map(|j| m.column(j)).collect();
    let mut labels = vec![0usize; n];
    // residual r = y − M·x for the all-zero-label vector
    let mut r = y.to_vec();
    for col in &cols {
        for (ri, mi) in r.iter_mut().zip(col) {
            *ri = *ri - mi * points[0];
        }
    }
    let cost = |r: &[Complex<T>]| r.iter().fold(T::zero(), |a, z| a + z.norm_sqr());
    let mut best = cost(&r);
    let mut best_labels = labels.clone();
    // odometer over labels, last symbol least significant: visits bit
    // patterns in increasing lexicographic order
    'outer: loop {
        let mut pos = n;
        loop {
            if pos == 0 {
                break 'outer;
            }
            pos -= 1;
            let old = labels[pos];
            let new = (old + 1) % q;
            labels[pos] = new;
            let delta = points[new] - points[old];
            for (ri, mi) in r.iter_mut().zip(&cols[pos]) {
                *ri = *ri - mi * delta;
            }
            if new != 0 {
                break;
            }
        }
        let v = cost(&r);
        if v < best {
            best = v;
            best_labels.copy_from_slice(&labels);
        }
    }
    let mut bits = Vec::with_capacity(n * c.bits_per_symbol());
    for l in best_labels {
        c.label_bits(l, &mut bits);
    }
    Ok(bits)
}

/// Per-real-dimension alphabet of a constellation: values and the bit
/// labels they carry.
fn real_alphabet(c: Constellation) -> (Vec<f64>, usize) {
    match c {
        Constellation::Bpsk => (vec![1.0, -1.0], 1),
        Constellation::Qpsk => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            (vec![s, -s], 1)
        }
        Constellation::Qam16 => {
            let s = 1.0 / 10f64.sqrt();
            (vec![-3.0 * s, -s, 3.0 * s, s], 2)
        }
    }
}

/// Exact ML via depth-first sphere decoding on the real-valued model.
/// Agrees with [`ml_detect`] except on exact ties.
#[derive(Debug, Clone)]
pub struct SphereDecoder {
    constellation: Constellation,
    alphabet: Vec<f64>,
    bits_per_dim: usize,
}

impl SphereDecoder {
    pub fn new(constellation: Constellation) -> Self {
        let (alphabet, bits_per_dim) = real_alphabet(constellation);
        Self { constellation, alphabet, bits_per_dim }
    }

    pub fn detect<T: Real>(&self, y: &[Complex<T>], m: &CMatrix<T>) -> Result<Vec<u8>> {
        let rows = m.rows();
        let n = m.cols();
        if y.len() != rows {
            return Err(Error::LengthMismatch { expected: rows, actual: y.len() });
        }
        let complex_symbols = self.constellation != Constellation::Bpsk;
        let dims = if complex_symbols { 2 * n } else { n };
        let real_rows = 2 * rows;
        // column-major real model H (real_rows × dims)
        let mut h = vec![0.0f64; real_rows * dims];
        for j in 0..n {
            for i in 0..rows {
                let v = m[(i, j)];
                let (re, im) = (v.re.as_f64(), v.im.as_f64());
                h[j * real_rows + i] = re;
                h[j * real_rows + rows + i] = im;
                if complex_symbols {
                    h[(n + j) * real_rows + i] = -im;
                    h[(n + j) * real_rows + rows + i] = re;
                }
            }
        }
        let mut b: Vec<f64> = y.iter().map(|z| z.re.as_f64()).chain(y.iter().map(|z| z.im.as_f64())).collect();
        let r = householder_qr(&mut h, &mut b, real_rows, dims)?;
        let z = self.search(&r, &b[..dims], dims);
        let mut bits = Vec::with_capacity(n * self.constellation.bits_per_symbol());
        for j in 0..n {
            let label = if complex_symbols {
                (z[j] << self.bits_per_dim) | z[n + j]
            } else {
                z[j]
            };
            self.constellation.label_bits(label, &mut bits);
        }
        Ok(bits)
    }

    /// Depth-first search with Schnorr–Euchner ordering. Returns alphabet
    /// indices per dimension.
    fn search(&self, r: &[f64], yt: &[f64], dims: usize) -> Vec<usize> {
        let a = &self.alphabet;
        let q = a.len();
        let mut best = f64::INFINITY;
        let mut best_z = vec![0usize; dims];
        let mut z = vec![0usize; dims];
        // per level: candidate order and position within it
        let mut order = vec![[0usize; 4]; dims];
        let mut next = vec![0usize; dims];
        let mut partial = vec![0.0f64; dims + 1];
        let mut centre = vec![0.0f64; dims];
        let mut level = dims;
        let compute_order = |k: usize, z: &[usize], order: &mut [[usize; 4]], centre: &mut [f64]| {
            let mut acc = yt[k];
            for j in k + 1..dims {
                acc -= r[k * dims + j] * a[z[j]];
            }
            let c = acc / r[k * dims + k];
            centre[k] = c;
            let mut idx: Vec<usize> = (0..q).collect();
            idx.sort_by(|&u, &v| (a[u] - c).abs().partial_cmp(&(a[v] - c).abs()).unwrap().then(u.cmp(&v)));
            for (slot, i) in order[k].iter_mut().zip(idx) {
                *slot = i;
            }
        };
        // descend to the first level
        level -= 1;
        compute_order(level, &z, &mut order, &mut centre);
        next[level] = 0;
        loop {
            if next[level] >= q {
                // exhausted this level: backtrack
                level += 1;
                if level == dims {
                    break;
                }
                continue;
            }
            let cand = order[level][next[level]];
            next[level] += 1;
            let rkk = r[level * dims + level];
            let d = rkk * (a[cand] - centre[level]);
            let pd = partial[level + 1] + d * d;
            if pd >= best {
                // later candidates at this level are farther from the centre
                next[level] = q;
                continue;
            }
            z[level] = cand;
            partial[level] = pd;
            if level == 0 {
                best = pd;
                best_z.copy_from_slice(&z);
                next[0] = q;
                continue;
            }
            level -= 1;
            compute_order(level, &z, &mut order, &mut centre);
            next[level] = 0;
        }
        best_z
    }
}

/// In-place Householder QR of a column-major `rows×cols` matrix; applies the
/// reflections to `b` and returns the row-major upper-triangular `R`.
fn householder_qr(h: &mut [f64], b: &mut [f64], rows: usize, cols: usize) -> Result<Vec<f64>> {
    if rows < cols {
        return Err(Error::Singular("underdetermined real model".into()));
    }
    for k in 0..cols {
        let col = &mut h[k * rows..(k + 1) * rows];
        let norm = col[k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if col[k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = col[k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..cols {
            let cj = &mut h[j * rows..(j + 1) * rows];
            let dot: f64 = v.iter().zip(&cj[k..]).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / vnorm2;
            for (c, vi) in cj[k..].iter_mut().zip(&v) {
                *c -= f * vi;
            }
        }
        let dot: f64 = v.iter().zip(&b[k..]).map(|(a, b)| a * b).sum();
        let f = 2.0 * dot / vnorm2;
        for (c, vi) in b[k..].iter_mut().zip(&v) {
            *c -= f * vi;
        }
    }
    let mut r = vec![0.0; cols * cols];
    for i in 0..cols {
        for j in i..cols {
            r[i * cols + j] = h[j * rows + i];
        }
        if r[i * cols + i].abs() < 1e-300 {
            return Err(Error::Singular(format!("rank deficient channel at column {i}")));
        }
    }
    Ok(r)
}
