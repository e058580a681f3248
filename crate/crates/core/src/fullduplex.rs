//! Two-user full-duplex ISAC at user A's receiver: A's own echo and B's
//! uplink share one AFDM symbol, their pilots sit in disjoint DAFT regions,
//! the echo is sensed from A's pilot, rebuilt and subtracted, and B's data
//! is detected from what remains.

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;

use crate::channel::{add_noise, apply_channel, path_matrix, ChannelSpec, DopplerMode, LtvChannel, PathEntry};
use crate::config::ChirpConfig;
use crate::detect::mmse_detect;
use crate::error::{invalid, Error, Result};
use crate::linalg::CMatrix;
use crate::rng::{stream_id, trial_rng};
use crate::scalar::cis;
use crate::transform::Daft;
use crate::waveform::{build_grid, demodulate, modulate_symbols, Constellation, GridLayout, Role};

type C64 = Complex<f64>;

/// A fixed channel or a distribution drawn once per trial.
#[derive(Clone, Debug, PartialEq)]
pub enum ChannelSource {
    Fixed(LtvChannel<f64>),
    Random(ChannelSpec),
}

impl ChannelSource {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<LtvChannel<f64>> {
        match self {
            Self::Fixed(ch) => Ok(ch.clone()),
            Self::Random(spec) => spec.draw(rng),
        }
    }

    /// Largest delay in samples.
    pub fn max_delay(&self) -> usize {
        match self {
            Self::Fixed(ch) => ch.max_delay().ceil() as usize,
            Self::Random(spec) => (spec.max_delay + 1e-9).floor() as usize,
        }
    }

    /// Largest |Doppler| in DAFT bins.
    pub fn max_alpha(&self, n: usize) -> f64 {
        match self {
            Self::Fixed(ch) => ch.paths.iter().map(|p| p.alpha(n).abs()).fold(0.0, f64::max),
            Self::Random(spec) => spec.max_doppler * n as f64,
        }
    }

    fn integer_doppler(&self, n: usize) -> bool {
        match self {
            Self::Fixed(ch) => ch.paths.iter().all(|p| (p.alpha(n) - p.alpha(n).round()).abs() < 1e-9),
            Self::Random(spec) => matches!(spec.doppler_mode, DopplerMode::IntegerBins { .. }),
        }
    }
}

/// How A treats its own echo.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FdMode {
    /// Echo sensed from A's pilot, rebuilt and subtracted.
    Estimated,
    /// Echo subtracted with the true AA channel.
    Genie,
    /// A does not transmit; B's link alone.
    HalfDuplex,
}

impl FdMode {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Estimated => "estimated",
            Self::Genie => "genie",
            Self::HalfDuplex => "half-duplex",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "estimated" => Ok(Self::Estimated),
            "genie" => Ok(Self::Genie),
            "half-duplex" | "halfduplex" => Ok(Self::HalfDuplex),
            _ => Err(invalid("mode", format!("unknown mode `{name}` (estimated, genie, half-duplex)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FdScenario {
    pub cfg: ChirpConfig,
    pub layout_a: GridLayout,
    pub layout_b: GridLayout,
    /// Monostatic channel of A's own echo.
    pub sensing: ChannelSource,
    /// Amplitude applied to every AA path; 0 removes the echo.
    pub echo_gain: f64,
    /// B → A communication channel.
    pub comm: ChannelSource,
    pub constellation: Constellation,
    /// Es/N0 of B's unit-energy data symbols.
    pub snr_db: f64,
    pub m_symbols: usize,
    pub trials: usize,
    pub seed: u64,
    /// Doppler grid points per DAFT bin in the path dictionary.
    pub doppler_oversample: usize,
    /// OMP stops after this many paths.
    pub max_paths: usize,
    /// B transmits nothing (its pilot region stays empty).
    pub remote_silent: bool,
}

impl FdScenario {
    /// Mirrored layouts: A's pilot at N/4, B's at 3N/4, guards of
    /// `2S + extra_guard` per side with `S` the larger of the two channel
    /// spreads, each user reserving the other's pilot region as guard
    /// band, and pilot amplitude `√(2G+1)`.
    pub fn mirrored(
        cfg: ChirpConfig,
        sensing: ChannelSource,
        comm: ChannelSource,
        constellation: Constellation,
        snr_db: f64,
        extra_guard: usize,
    ) -> Result<Self> {
        let n = cfg.n();
        let s = spread(&cfg, &sensing)?.max(spread(&cfg, &comm)?);
        let g = 2 * s + extra_guard;
        if 2 * (2 * g + 1) >= n {
            return Err(invalid("n", format!("two pilot regions of width {} leave no data in N = {n}", 2 * g + 1)));
        }
        let (pa, pb) = (n / 4, 3 * n / 4);
        let amp = ((2 * g + 1) as f64).sqrt();
        let layout_a = GridLayout::embedded_pilot(n, pa, g, amp)?.with_guard_band(pb, g)?;
        let layout_b = GridLayout::embedded_pilot(n, pb, g, amp)?.with_guard_band(pa, g)?;
        let sc = Self {
            cfg,
            layout_a,
            layout_b,
            sensing,
            echo_gain: 1.0,
            comm,
            constellation,
            snr_db,
            m_symbols: 1,
            trials: 500,
            seed: 0,
            doppler_oversample: 1,
            max_paths: 4,
            remote_silent: false,
        };
        sc.validate()?;
        Ok(sc)
    }

    /// Default desk-scale scene: N = 64, k = 3, L = 4, single-path echo
    /// and two-path remote link on integer cells with `l ≤ 1`, `|α| ≤ 1`.
    pub fn default_scene(snr_db: f64) -> Result<Self> {
        let cfg = ChirpConfig::with_integer_c1(64, 3, 0.0, 1e-6, 4)?;
        let n = cfg.n();
        let spec = |p| ChannelSource::Random(ChannelSpec::comm(p, 1.0, 1.0 / n as f64).with_integer_doppler(n));
        Self::mirrored(cfg, spec(1), spec(2), Constellation::Qpsk, snr_db, 0)
    }

    /// Same scene with A and B exchanging roles.
    pub fn swapped(&self) -> Self {
        let mut s = self.clone();
        std::mem::swap(&mut s.layout_a, &mut s.layout_b);
        s
    }

    fn noise_var(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.cfg.n();
        if self.layout_a.n() != n || self.layout_b.n() != n {
            return Err(Error::LengthMismatch { expected: n, actual: self.layout_a.n().min(self.layout_b.n()) });
        }
        let s = spread(&self.cfg, &self.sensing)?.max(spread(&self.cfg, &self.comm)?);
        for (name, own, other) in [("layout_a", &self.layout_a, &self.layout_b), ("layout_b", &self.layout_b, &self.layout_a)] {
            let p = own.pilot_index().ok_or_else(|| Error::InvalidLayout(format!("{name} has no pilot")))?;
            let g = guard_half_width(own, p);
            if g < 2 * s {
                return Err(Error::InvalidLayout(format!("{name}: guard {g} per side below 2S = {}", 2 * s)));
            }
            for i in region(p, g, n) {
                if other.role(i) != Role::GuardBand {
                    return Err(Error::InvalidLayout(format!(
                        "{name}: pilot region index {i} is {:?} in the other user's layout, expected GuardBand",
                        other.role(i)
                    )));
                }
            }
        }
        for (name, src) in [("sensing", &self.sensing), ("comm", &self.comm)] {
            if src.max_delay() > self.cfg.cpp_len() {
                return Err(invalid("max_delay", format!("{name} delay exceeds the prefix length {}", self.cfg.cpp_len())));
            }
        }
        if !(self.snr_db.is_finite()) {
            return Err(invalid("snr_db", "must be finite"));
        }
        if !(self.echo_gain >= 0.0 && self.echo_gain.is_finite()) {
            return Err(invalid("echo_gain", "must be finite and non-negative"));
        }
        if self.m_symbols == 0 || self.trials == 0 {
            return Err(invalid("trials", "need at least one trial and one symbol"));
        }
        if self.doppler_oversample == 0 || self.max_paths == 0 {
            return Err(invalid("doppler_oversample", "dictionary oversampling and max_paths must be positive"));
        }
        let integer = self.sensing.integer_doppler(n) && self.comm.integer_doppler(n);
        if integer && self.doppler_oversample == 1 {
            let lmax = self.sensing.max_delay().max(self.comm.max_delay()) as i64;
            let amax = self.sensing.max_alpha(n).max(self.comm.max_alpha(n)).round() as i64;
            let mut seen = std::collections::HashSet::new();
            for l in 0..=lmax {
                for a in -amax..=amax {
                    let idx = self.cfg.path_shift_index(l, a);
                    if !seen.insert(idx) {
                        return Err(invalid("c1", "integer cells do not map to distinct DAFT offsets; choose a larger 2N·c1"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// `S = k·lmax + ⌈|α|max⌉` in DAFT bins.
fn spread(cfg: &ChirpConfig, src: &ChannelSource) -> Result<usize> {
    let lmax = src.max_delay();
    let k = match cfg.c1_k() {
        Some(k) => k.unsigned_abs() as usize,
        None => return Err(invalid("c1", "full-duplex separation needs 2N·c1 to be an integer")),
    };
    if k == 0 && lmax > 0 {
        return Err(invalid("c1", "c1 = 0 cannot separate delays in the DAFT domain"));
    }
    Ok(k * lmax + (src.max_alpha(cfg.n()) - 1e-9).ceil().max(0.0) as usize)
}

fn guard_half_width(layout: &GridLayout, p: usize) -> usize {
    let n = layout.n();
    let mut g = 0;
    while g + 1 < n / 2 && layout.role((p + g + 1) % n) == Role::Guard && layout.role((p + n - (g + 1) % n) % n) == Role::Guard {
        g += 1;
    }
    g
}

fn region(center: usize, half: usize, n: usize) -> Vec<usize> {
    (-(half as i64)..=half as i64).map(|d| (center as i64 + d).rem_euclid(n as i64) as usize).collect()
}

/// Unit-gain path candidates with their DAFT-domain matrices.
struct Dictionary {
    atoms: Vec<(usize, f64)>,
    matrices: Vec<CMatrix<f64>>,
}

impl Dictionary {
    fn new(cfg: &ChirpConfig, lmax: usize, amax: f64, oversample: usize) -> Result<Self> {
        let n = cfg.n() as f64;
        let steps = (amax * oversample as f64).round() as i64;
        let mut atoms = Vec::new();
        let mut matrices = Vec::new();
        for l in 0..=lmax {
            for s in -steps..=steps {
                let alpha = s as f64 / oversample as f64;
                matrices.push(path_matrix(&PathEntry::new(C64::new(1.0, 0.0), l as f64, alpha / n), cfg)?);
                atoms.push((l, alpha));
            }
        }
        Ok(Self { atoms, matrices })
    }
}

/// Orthogonal matching pursuit of the pilot response over `window`:
/// atoms are accepted while their normalized correlation with the residual
/// exceeds `3σ`; gains are refitted jointly by least squares.
fn estimate_paths(y: &[C64], window: &[usize], pilot: usize, amp: f64, dict: &Dictionary, noise_var: f64, max_paths: usize) -> Result<Vec<(usize, C64)>> {
    let cols: Vec<Vec<C64>> = dict.matrices.iter().map(|m| window.iter().map(|&r| m[(r, pilot)] * amp).collect()).collect();
    let norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()).collect();
    let target: Vec<C64> = window.iter().map(|&r| y[r]).collect();
    let threshold = 3.0 * noise_var.sqrt();
    let mut chosen: Vec<usize> = Vec::new();
    let mut gains: Vec<C64> = Vec::new();
    let mut resid = target.clone();
    while chosen.len() < max_paths {
        let best = (0..cols.len())
            .filter(|i| !chosen.contains(i) && norms[*i] > 0.0)
            .map(|i| (i, (dot(&cols[i], &resid) / norms[i]).norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((i, c)) if c > threshold => chosen.push(i),
            _ => break,
        }
        let k = chosen.len();
        let gram = CMatrix::from_fn(k, k, |a, b| dot(&cols[chosen[a]], &cols[chosen[b]]));
        let rhs: Vec<C64> = chosen.iter().map(|&a| dot(&cols[a], &target)).collect();
        gains = gram.solve(&rhs)?;
        resid = target.clone();
        for (&a, g) in chosen.iter().zip(&gains) {
            for (r, v) in resid.iter_mut().zip(&cols[a]) {
                *r -= g * v;
            }
        }
    }
    Ok(chosen.into_iter().zip(gains).collect())
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn combine(dict: &Dictionary, paths: &[(usize, C64)], n: usize) -> CMatrix<f64> {
    let mut h = CMatrix::zeros(n, n);
    for (a, g) in paths {
        let m = &dict.matrices[*a];
        for r in 0..n {
            for c in 0..n {
                h[(r, c)] += g * m[(r, c)];
            }
        }
    }
    h
}

/// Per-symbol DAFT-domain matrix of a channel inside a multi-symbol frame.
fn symbol_matrix(ch: &LtvChannel<f64>, cfg: &ChirpConfig, m: usize) -> Result<CMatrix<f64>> {
    let n = cfg.n();
    let mut h = CMatrix::zeros(n, n);
    for p in &ch.paths {
        let offset = (p.doppler * (m * cfg.symbol_len()) as f64).fract();
        let path = PathEntry::new(p.gain * cis::<f64>(offset), p.delay, p.doppler);
        let pm = path_matrix(&path, cfg)?;
        for r in 0..n {
            for c in 0..n {
                h[(r, c)] += pm[(r, c)];
            }
        }
    }
    Ok(h)
}

/// Outcome of one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct FdTrial {
    pub trial: u64,
    pub errors: usize,
    pub bits: usize,
    /// Strongest estimated echo path minus the strongest true one.
    pub delay_err: Option<f64>,
    pub doppler_err: Option<f64>,
    pub echo_energy: f64,
    pub residual_energy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FdReport {
    pub mode: FdMode,
    pub rows: Vec<FdTrial>,
    pub errors: usize,
    pub bits: usize,
    /// `None` when B sends no data.
    pub ber_remote_data: Option<f64>,
    /// Samples².
    pub sensing_delay_mse: Option<f64>,
    /// DAFT bins².
    pub sensing_doppler_mse: Option<f64>,
    /// Trials in which no echo path was detected.
    pub sensing_misses: usize,
    /// Echo error energy after subtraction relative to echo energy.
    pub residual_after_subtraction_db: Option<f64>,
    pub metadata: Vec<(String, String)>,
}

impl FdReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("trial,errors,bits,delay_err,doppler_err,echo_energy,residual_energy\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{:e},{:e}\n",
                r.trial,
                r.errors,
                r.bits,
                opt(r.delay_err),
                opt(r.doppler_err),
                r.echo_energy,
                r.residual_energy
            ));
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        format!(
            "mode,trials,errors,bits,ber,delay_mse,doppler_mse,misses,residual_db\n{},{},{},{},{},{},{},{},{}\n",
            self.mode.name(),
            self.rows.len(),
            self.errors,
            self.bits,
            opt(self.ber_remote_data),
            opt(self.sensing_delay_mse),
            opt(self.sensing_doppler_mse),
            self.sensing_misses,
            opt(self.residual_after_subtraction_db)
        )
    }
}

fn random_labels<R: Rng + ?Sized>(c: Constellation, count: usize, rng: &mut R) -> Vec<usize> {
    (0..count).map(|_| rng.random_range(0..c.order())).collect()
}

fn strongest(paths: &[(f64, f64, f64)]) -> Option<(f64, f64)> {
    paths.iter().max_by(|a, b| a.2.total_cmp(&b.2)).map(|p| (p.0, p.1))
}

/// Runs all trials. B's data, the BA channel and the noise come from
/// streams that do not depend on the mode, so runs with the same seed are
/// paired across modes.
pub fn simulate_fullduplex(sc: &FdScenario, mode: FdMode) -> Result<FdReport> {
    sc.validate()?;
    let cfg = &sc.cfg;
    let n = cfg.n();
    let plan = Daft::<f64>::new(cfg);
    let s = spread(cfg, &sc.sensing)?.max(spread(cfg, &sc.comm)?);
    let lmax = sc.sensing.max_delay().max(sc.comm.max_delay());
    let amax = sc.sensing.max_alpha(n).max(sc.comm.max_alpha(n)).ceil();
    let dict = Dictionary::new(cfg, lmax, amax, sc.doppler_oversample)?;
    let pa = sc.layout_a.pilot_index().expect("validated");
    let pb = sc.layout_b.pilot_index().expect("validated");
    let win_a = region(pa, s, n);
    let win_b = region(pb, s, n);
    let noise_var = sc.noise_var();
    let data_b = sc.layout_b.data_indices();

    let run = |t: u64| -> Result<FdTrial> {
        let mut rng_bdata = trial_rng(sc.seed, stream_id("fd-b-data"), t);
        let mut rng_ba = trial_rng(sc.seed, stream_id("fd-ba-channel"), t);
        let mut rng_noise = trial_rng(sc.seed, stream_id("fd-noise"), t);
        let mut rng_adata = trial_rng(sc.seed, stream_id("fd-a-data"), t);
        let mut rng_aa = trial_rng(sc.seed, stream_id("fd-aa-channel"), t);

        let c = sc.constellation;
        let ba = sc.comm.draw(&mut rng_ba)?;
        let aa = sc.sensing.draw(&mut rng_aa)?.scaled(C64::new(sc.echo_gain, 0.0));
        let labels_b: Vec<Vec<usize>> = (0..sc.m_symbols).map(|_| random_labels(c, data_b.len(), &mut rng_bdata)).collect();
        let labels_a: Vec<Vec<usize>> =
            (0..sc.m_symbols).map(|_| random_labels(c, sc.layout_a.count(Role::Data), &mut rng_adata)).collect();

        let grid = |layout: &GridLayout, labels: &[usize], silent: bool| -> Result<Vec<C64>> {
            let data: Vec<C64> = labels.iter().map(|&l| if silent { C64::new(0.0, 0.0) } else { c.point(l) }).collect();
            let pilot = if silent { C64::new(0.0, 0.0) } else { layout.pilot_value() };
            Ok(build_grid(layout, &data, pilot)?.symbols)
        };
        let grids_a = labels_a.iter().map(|l| grid(&sc.layout_a, l, false)).collect::<Result<Vec<_>>>()?;
        let grids_b = labels_b.iter().map(|l| grid(&sc.layout_b, l, sc.remote_silent)).collect::<Result<Vec<_>>>()?;

        let rx_b = apply_channel(&modulate_symbols(&plan, &grids_b)?, &ba)?;
        let rx = if mode == FdMode::HalfDuplex {
            rx_b
        } else {
            rx_b.superpose(&apply_channel(&modulate_symbols(&plan, &grids_a)?, &aa)?)
        };
        let rx = add_noise(&rx, noise_var, &mut rng_noise);

        let mut row = FdTrial { trial: t, errors: 0, bits: 0, delay_err: None, doppler_err: None, echo_energy: 0.0, residual_energy: 0.0 };
        let (mut derr, mut nerr, mut hits) = (0.0, 0.0, 0usize);
        for m in 0..sc.m_symbols {
            let mut y = demodulate(&plan, &rx, m)?;
            if mode != FdMode::HalfDuplex {
                let h_true = symbol_matrix(&aa, cfg, m)?;
                let echo = h_true.mul_vec(&grids_a[m])?;
                let h_hat = if mode == FdMode::Genie {
                    h_true
                } else {
                    let paths = estimate_paths(&y, &win_a, pa, sc.layout_a.pilot_amplitude(), &dict, noise_var, sc.max_paths)?;
                    let est: Vec<(f64, f64, f64)> = paths.iter().map(|(a, g)| (dict.atoms[*a].0 as f64, dict.atoms[*a].1, g.norm())).collect();
                    let truth: Vec<(f64, f64, f64)> = aa.paths.iter().map(|p| (p.delay, p.alpha(n), p.gain.norm())).collect();
                    if let (Some(e), Some(tr)) = (strongest(&est), strongest(&truth)) {
                        derr += e.0 - tr.0;
                        nerr += e.1 - tr.1;
                        hits += 1;
                    }
                    combine(&dict, &paths, n)
                };
                let rebuilt = h_hat.mul_vec(&grids_a[m])?;
                for ((v, e), r) in y.iter_mut().zip(&echo).zip(&rebuilt) {
                    *v -= r;
                    row.echo_energy += e.norm_sqr();
                    row.residual_energy += (e - r).norm_sqr();
                }
            }
            if sc.remote_silent {
                continue;
            }
            let paths = estimate_paths(&y, &win_b, pb, sc.layout_b.pilot_amplitude(), &dict, noise_var, sc.max_paths)?;
            let h_ba = combine(&dict, &paths, n);
            let pilot_col = h_ba.column(pb);
            let amp = sc.layout_b.pilot_amplitude();
            let y_data: Vec<C64> = y.iter().zip(&pilot_col).map(|(v, p)| v - p * amp).collect();
            let bits = mmse_detect(&y_data, &h_ba.select_columns(&data_b), c, noise_var)?;
            let mut truth = Vec::with_capacity(bits.len());
            for &l in &labels_b[m] {
                c.label_bits(l, &mut truth);
            }
            row.errors += bits.iter().zip(&truth).filter(|(a, b)| a != b).count();
            row.bits += truth.len();
        }
        if hits > 0 {
            row.delay_err = Some(derr / hits as f64);
            row.doppler_err = Some(nerr / hits as f64);
        }
        Ok(row)
    };

    let rows = (0..sc.trials as u64).into_par_iter().map(run).collect::<Result<Vec<_>>>()?;
    let errors = rows.iter().map(|r| r.errors).sum();
    let bits: usize = rows.iter().map(|r| r.bits).sum();
    let sensed: Vec<&FdTrial> = rows.iter().filter(|r| r.delay_err.is_some()).collect();
    let mse = |f: fn(&FdTrial) -> f64| (!sensed.is_empty()).then(|| sensed.iter().map(|r| f(r).powi(2)).sum::<f64>() / sensed.len() as f64);
    let echo: f64 = rows.iter().map(|r| r.echo_energy).sum();
    let resid: f64 = rows.iter().map(|r| r.residual_energy).sum();
    let estimated = mode == FdMode::Estimated;
    let report = FdReport {
        mode,
        errors,
        bits,
        ber_remote_data: (bits > 0).then(|| errors as f64 / bits as f64),
        sensing_delay_mse: if estimated { mse(|r| r.delay_err.unwrap()) } else { None },
        sensing_doppler_mse: if estimated { mse(|r| r.doppler_err.unwrap()) } else { None },
        sensing_misses: if estimated { rows.len() - sensed.len() } else { 0 },
        residual_after_subtraction_db: (mode != FdMode::HalfDuplex && echo > 0.0).then(|| 10.0 * (resid / echo).max(1e-300).log10()),
        metadata: metadata(sc, mode, s),
        rows,
    };
    Ok(report)
}

fn metadata(sc: &FdScenario, mode: FdMode, s: usize) -> Vec<(String, String)> {
    let mut m = vec![
        ("mode".to_string(), mode.name().to_string()),
        ("n".to_string(), sc.cfg.n().to_string()),
        ("c1".to_string(), format!("{}", sc.cfg.c1())),
        ("c2".to_string(), format!("{}", sc.cfg.c2())),
        ("cpp_len".to_string(), sc.cfg.cpp_len().to_string()),
        ("spread_bins".to_string(), s.to_string()),
        ("pilot_a".to_string(), format!("{:?}", sc.layout_a.pilot_index())),
        ("pilot_b".to_string(), format!("{:?}", sc.layout_b.pilot_index())),
        ("pilot_amplitude".to_string(), format!("{}", sc.layout_a.pilot_amplitude())),
        ("snr_db".to_string(), format!("{}", sc.snr_db)),
        ("echo_gain".to_string(), format!("{}", sc.echo_gain)),
        ("m_symbols".to_string(), sc.m_symbols.to_string()),
        ("trials".to_string(), sc.trials.to_string()),
        ("seed".to_string(), sc.seed.to_string()),
        ("constellation".to_string(), sc.constellation.name().to_string()),
    ];
    m.sort();
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene(trials: usize) -> FdScenario {
        let mut sc = FdScenario::default_scene(15.0).unwrap();
        sc.trials = trials;
        sc.seed = 11;
        sc
    }

    #[test]
    fn mirrored_layouts_are_disjoint() {
        let sc = scene(1);
        let a = &sc.layout_a;
        let b = &sc.layout_b;
        for i in 0..a.n() {
            let busy_a = matches!(a.role(i), Role::Pilot | Role::Guard);
            let busy_b = matches!(b.role(i), Role::Pilot | Role::Guard);
            assert!(!(busy_a && busy_b), "index {i}");
            if busy_a {
                assert_eq!(b.role(i), Role::GuardBand);
            }
        }
        assert_eq!(a.count(Role::Data), 30);
    }

    #[test]
    fn overlapping_pilot_regions_rejected() {
        let mut sc = scene(1);
        sc.layout_b = GridLayout::embedded_pilot(64, 48, 8, 4.0).unwrap();
        assert!(matches!(sc.validate(), Err(Error::InvalidLayout(_))));
        let mut sc = scene(1);
        sc.layout_a = GridLayout::embedded_pilot(64, 16, 5, 4.0).unwrap().with_guard_band(48, 8).unwrap();
        assert!(sc.validate().is_err());
    }

    #[test]
    fn remote_silent_noiseless_senses_exactly() {
        let mut sc = scene(20);
        sc.remote_silent = true;
        sc.snr_db = 200.0;
        let r = simulate_fullduplex(&sc, FdMode::Estimated).unwrap();
        assert_eq!(r.ber_remote_data, None);
        assert_eq!(r.sensing_misses, 0);
        for row in &r.rows {
            assert!(row.delay_err.unwrap().abs() <= 0.1);
            assert!(row.doppler_err.unwrap().abs() <= 0.1);
        }
        assert!(r.residual_after_subtraction_db.unwrap() < -150.0);
    }

    #[test]
    fn no_echo_equals_half_duplex() {
        let mut sc = scene(40);
        sc.echo_gain = 0.0;
        let fd = simulate_fullduplex(&sc, FdMode::Estimated).unwrap();
        let hd = simulate_fullduplex(&sc, FdMode::HalfDuplex).unwrap();
        assert_eq!(fd.errors, hd.errors);
        assert_eq!(fd.bits, hd.bits);
        for (a, b) in fd.rows.iter().zip(&hd.rows) {
            assert_eq!(a.errors, b.errors);
        }
    }

    #[test]
    fn genie_residual_at_numerical_floor() {
        let sc = scene(20);
        let g = simulate_fullduplex(&sc, FdMode::Genie).unwrap();
        let hd = simulate_fullduplex(&sc, FdMode::HalfDuplex).unwrap();
        assert!(g.residual_after_subtraction_db.unwrap() <= -80.0);
        assert_eq!(g.errors, hd.errors);
    }

    #[test]
    fn swapped_roles_still_separate() {
        let sc = scene(30).swapped();
        let r = simulate_fullduplex(&sc, FdMode::Estimated).unwrap();
        assert!(r.residual_after_subtraction_db.unwrap() < -20.0);
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let sc = scene(16);
        let a = simulate_fullduplex(&sc, FdMode::Estimated).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| simulate_fullduplex(&sc, FdMode::Estimated).unwrap());
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn mode_names_round_trip() {
        for m in [FdMode::Estimated, FdMode::Genie, FdMode::HalfDuplex] {
            assert_eq!(FdMode::from_name(m.name()).unwrap(), m);
        }
        assert!(FdMode::from_name("both").is_err());
    }
}
