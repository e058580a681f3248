//! Fast oracle checks run by `afdm selftest`.

use afdm::channel::{effective_matrix, effective_matrix_closed_form, random_channel, ChannelSpec};
use afdm::detect::{ml_detect, SphereDecoder};
use afdm::fullduplex::{simulate_fullduplex, FdMode, FdScenario};
use afdm::linalg::CMatrix;
use afdm::rng::trial_rng;
use afdm::sensing::{dechirp_pipeline, fim_crb, matched_filter, synthesize_monostatic, unambiguity_parallelogram, CrbSetup, DechirpConfig, MfDomain, SceneSpec};
use afdm::waveform::{build_grid, modulate, Constellation, GridLayout};
use afdm::{ChirpConfig, Daft};
use num_complex::Complex;
use rand::Rng;

type C = Complex<f64>;

pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String), afdm::Error>) -> Check {
    match f() {
        Ok((pass, detail)) => Check { name, pass, detail },
        Err(e) => Check { name, pass: false, detail: format!("error: {e}") },
    }
}

fn random_vec(n: usize, rng: &mut impl Rng) -> Vec<C> {
    (0..n).map(|_| C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
}

fn rel_err(a: &[C], b: &[C]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

/// Inverse transform from its defining sum.
fn idaft_direct(x: &[C], c1: f64, c2: f64) -> Vec<C> {
    let n = x.len();
    let nf = n as f64;
    (0..n)
        .map(|t| {
            x.iter()
                .enumerate()
                .map(|(m, v)| {
                    let ph = c1 * (t * t) as f64 + c2 * (m * m) as f64 + (t * m) as f64 / nf;
                    v * C::from_polar(1.0, std::f64::consts::TAU * ph.fract())
                })
                .sum::<C>()
                / nf.sqrt()
        })
        .collect()
}

pub fn run() -> Vec<Check> {
    let mut rng = trial_rng(0x5e1f, 0, 0);
    let mut out = Vec::new();

    out.push(check("transform round trip and direct sum", || {
        let mut worst: f64 = 0.0;
        for n in [8, 12, 16, 64] {
            for _ in 0..5 {
                let (c1, c2) = (rng.random::<f64>(), rng.random::<f64>());
                let cfg = ChirpConfig::new(n, c1, c2, 1.0, 0)?;
                let plan = Daft::<f64>::new(&cfg);
                let x = random_vec(n, &mut rng);
                let s = plan.idaft(&x)?;
                worst = worst.max(rel_err(&s, &idaft_direct(&x, c1, c2)));
                worst = worst.max(rel_err(&plan.daft(&s)?, &x));
            }
        }
        Ok((worst <= 1e-10, format!("max relative error {worst:.2e}")))
    }));

    out.push(check("closed-form channel matrix", || {
        let cfg = ChirpConfig::with_integer_c1(12, 3, 0.1, 1.0, 2)?;
        let mut worst: f64 = 0.0;
        for _ in 0..5 {
            let ch = random_channel::<f64, _>(3, 2.0, 1.5 / 12.0, &mut rng)?;
            let d = effective_matrix(&ch, &cfg)?.max_abs_diff(&effective_matrix_closed_form(&ch, &cfg)?);
            worst = worst.max(d);
        }
        Ok((worst <= 1e-10, format!("max abs difference {worst:.2e}")))
    }));

    out.push(check("sphere decoder equals exhaustive ML", || {
        let c = Constellation::Qpsk;
        let mut mismatches = 0;
        for _ in 0..100 {
            let m = CMatrix::from_fn(4, 4, |_, _| C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let y = random_vec(4, &mut rng);
            if ml_detect(&y, &m, c)? != SphereDecoder::new(c).detect(&y, &m)? {
                mismatches += 1;
            }
        }
        Ok((mismatches == 0, format!("{mismatches} mismatches in 100 draws")))
    }));

    out.push(check("matched filter time vs DAFT domain", || {
        let cfg = ChirpConfig::with_integer_c1(32, 3, 0.0, 1.0, 4)?;
        let c = Constellation::Qpsk;
        let data: Vec<C> = (0..32).map(|_| c.point(rng.random_range(0..4))).collect();
        let grid = build_grid(&GridLayout::all_data(32), &data, C::new(0.0, 0.0))?;
        let rx = modulate(&grid, &cfg)?;
        let bins: Vec<f64> = (-4..=4).map(|b| b as f64 * 0.5).collect();
        let (a, _) = matched_filter(&rx, &grid.symbols, &cfg, MfDomain::Time, &[0, 1, 2, 3, 4], &bins)?;
        let (b, _) = matched_filter(&rx, &grid.symbols, &cfg, MfDomain::Daft, &[0, 1, 2, 3, 4], &bins)?;
        let scale = a.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let d = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale;
        Ok((d <= 1e-8, format!("max relative difference {d:.2e}")))
    }));

    out.push(check("unambiguity parallelogram area", || {
        let mut bad = Vec::new();
        for k in 0..12 {
            let p = unambiguity_parallelogram(&ChirpConfig::with_integer_c1(128, k, 0.0, 1.0, 0)?)?;
            if !(p.area().is_integer() && p.area().to_integer() == 1) {
                bad.push(k);
            }
        }
        Ok((bad.is_empty(), format!("k in 0..12, non-unit areas at {bad:?}")))
    }));

    out.push(check("CRB scales with 1/SNR", || {
        let cfg = ChirpConfig::with_integer_c1(32, 3, 0.0, 1e-6, 4)?;
        let c = Constellation::Qpsk;
        let x: Vec<C> = (0..32).map(|_| c.point(rng.random_range(0..4))).collect();
        let a = fim_crb(&cfg, &CrbSetup::monostatic(60e9, 10.0, 300.0, 20.0, c), &x)?;
        let b = fim_crb(&cfg, &CrbSetup::monostatic(60e9, 10.0 + 10.0 * 2f64.log10(), 300.0, 20.0, c), &x)?;
        let e = (a.crb_delay / b.crb_delay / 2.0 - 1.0).abs().max((a.crb_doppler / b.crb_doppler / 2.0 - 1.0).abs());
        Ok((e <= 1e-9, format!("relative deviation {e:.2e}")))
    }));

    out.push(check("dechirp self-interference suppression", || {
        let cfg = ChirpConfig::with_integer_c1(64, 3, 0.0, 1e-7, 8)?;
        let dsp = DechirpConfig::new(2, 1.0, 4);
        let s = dsp.cutoff_bins(&cfg)?;
        let layout = GridLayout::embedded_pilot(64, 32, 2 * s, ((4 * s + 1) as f64).sqrt())?;
        let spec = SceneSpec { constellation: Constellation::Qpsk, m_symbols: 4, si_gain: C::new(30.0, 0.0), target: None, snr_db: f64::INFINITY };
        let scene = synthesize_monostatic(&cfg, &layout, &spec, &mut rng)?;
        let (_, d) = dechirp_pipeline(&scene.rx, &cfg, &layout, &dsp, 4)?;
        Ok((d.residual_db <= -60.0, format!("residual {:.1} dB", d.residual_db)))
    }));

    out.push(check("full-duplex genie equals half-duplex", || {
        let mut sc = FdScenario::default_scene(12.0)?;
        sc.trials = 50;
        sc.seed = 3;
        let g = simulate_fullduplex(&sc, FdMode::Genie)?;
        let h = simulate_fullduplex(&sc, FdMode::HalfDuplex)?;
        let res = g.residual_after_subtraction_db.unwrap_or(0.0);
        Ok((g.errors == h.errors && res <= -80.0, format!("errors {} vs {}, residual {res:.0} dB", g.errors, h.errors)))
    }));

    let spec = ChannelSpec::comm(4, 2.0, 1.0 / 12.0).with_integer_doppler(12);
    out.push(check("channel draw validation", || {
        let too_many = ChannelSpec { paths: 10, ..spec };
        Ok((spec.validate().is_ok() && too_many.validate().is_err(), "9 integer cells for N = 12".to_string()))
    }));
    out
}
