use std::fs;
use std::path::Path;

use afdm::channel::{add_awgn, apply_channel, ChannelSpec, DelayMode, DopplerMode, LtvChannel, PathEntry};
use afdm::detect::{estimate_diversity_order, run_ber, separating_c1_k, BerSetup, Detector, Waveform};
use afdm::fullduplex::{simulate_fullduplex, ChannelSource, FdMode, FdScenario};
use afdm::io::write_csv_with_metadata;
use afdm::rng::{stream_id, trial_rng};
use afdm::sensing::{
    ambiguity_function, crb_sweep, averaged_crb, dechirp_pipeline, depression_line, expected_squared_af, matched_filter,
    relative_fluctuation, synthesize_monostatic, unambiguity_parallelogram, uniform_axis, CrbSetup, DechirpConfig,
    ExpectedAfSetup, MfDomain, SceneSpec,
};
use afdm::waveform::{build_grid, modulate, pulse_shape, Constellation, GridLayout, RrcConfig};
use afdm::ChirpConfig;
use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;

use crate::error::CliError;
use crate::params::Params;

type Lines = Vec<String>;

fn meta(p: &Params, extra: &[(String, String)]) -> Vec<(String, String)> {
    let mut m = vec![("experiment".to_string(), p.experiment.to_string())];
    m.extend(p.entries());
    m.extend(extra.iter().cloned());
    m
}

fn constellation(p: &Params) -> Result<Constellation, CliError> {
    Constellation::from_name(p.str("constellation")).map_err(|e| CliError::Config(format!("{}.constellation: {e}", p.experiment)))
}

fn chirp(p: &Params, cpp_len: usize) -> Result<ChirpConfig, CliError> {
    Ok(ChirpConfig::with_integer_c1(p.usize("n")?, p.i64("k")?, p.f64("c2")?, p.f64("sample_interval")?, cpp_len)?)
}

fn rrc(p: &Params) -> Result<Option<RrcConfig>, CliError> {
    let osf = p.usize("osf")?;
    if osf <= 1 {
        return Ok(None);
    }
    Ok(Some(RrcConfig::new(p.f64("rrc_beta")?, p.usize("rrc_span")?, osf)?))
}

pub fn ber(p: &Params, out: &Path) -> Result<Lines, CliError> {
    let n = p.usize("n")?;
    let max_delay = p.f64("max_delay")?;
    let max_bins = p.f64("max_doppler_bins")?;
    let delay_mode = DelayMode::from_name(p.str("delay_mode")).map_err(|e| CliError::Config(e.to_string()))?;
    let doppler_mode = DopplerMode::from_name(p.str("doppler_mode"), n).map_err(|e| CliError::Config(e.to_string()))?;
    let detector = Detector::from_name(p.str("detector")).map_err(|e| CliError::Config(e.to_string()))?;
    let setup = BerSetup {
        n,
        constellation: constellation(p)?,
        channel: ChannelSpec::comm(p.usize("paths")?, max_delay, max_bins / n as f64).with_modes(delay_mode, doppler_mode),
        cpp_len: p.usize("cpp_len")?,
        sample_interval: p.f64("sample_interval")?,
        detector,
        min_errors: p.u64("min_errors")?,
        max_trials: p.u64("max_trials")?,
        batch: p.u64("batch")?,
        parallel: true,
    };
    let k = match p.str("afdm_k") {
        "auto" => separating_c1_k(n, max_delay.floor() as usize, max_bins.ceil() as usize)
            .ok_or_else(|| CliError::Runtime(format!("no 2N·c1 separates the channel cells for N = {n}")))?,
        _ => p.i64("afdm_k")?,
    };
    let snr = p.f64_list("snr_db")?;
    let pts = p.usize("diversity_points")?.clamp(2, snr.len().max(2));
    let mut lines = Vec::new();
    let mut div = String::from("waveform,diversity_order,lo_db,hi_db\n");
    for name in p.list("waveforms") {
        let wf = match name.as_str() {
            "ofdm" => Waveform::Ofdm,
            "ocdm" => Waveform::Ocdm,
            "afdm" => Waveform::Afdm { c1: k as f64 / (2.0 * n as f64), c2: p.f64("afdm_c2")? },
            other => return Err(CliError::Config(format!("ber.waveforms: unknown waveform `{other}`"))),
        };
        let curve = run_ber(&setup, wf, &snr, p.seed()?)?;
        write_csv_with_metadata(out, &format!("ber_{name}"), &curve.to_csv(), &meta(p, &curve.metadata))?;
        let (lo, hi) = (snr[snr.len().saturating_sub(pts)], snr[snr.len() - 1]);
        let d = estimate_diversity_order(&curve, lo, hi, 1);
        let shown = d.as_ref().map(|v| format!("{v:.4}")).unwrap_or_else(|_| "nan".into());
        div.push_str(&format!("{name},{shown},{lo},{hi}\n"));
        let top = curve.points.last().map(|pt| pt.ber()).unwrap_or(f64::NAN);
        lines.push(format!("{name}: diversity {shown} over [{lo}, {hi}] dB, BER {top:.3e} at {hi} dB"));
    }
    fs::write(out.join("diversity.csv"), div)?;
    Ok(lines)
}

pub fn af(p: &Params, out: &Path) -> Result<Lines, CliError> {
    let cfg = chirp(p, 0)?;
    let n = cfg.n();
    let dt = cfg.sample_interval();
    let layout = GridLayout::point_pilot(n, p.usize("pilot_index")?, 1.0)?;
    let grid = build_grid::<f64>(&layout, &[], layout.pilot_value())?;
    let mut frame = modulate(&grid, &cfg)?;
    if let Some(r) = rrc(p)? {
        frame = pulse_shape(&frame, &r)?;
    }
    let (d0, d1, ds) = (p.f64("delay_min")?, p.f64("delay_max")?, p.f64("delay_step")?);
    if !(ds > 0.0 && d1 >= d0) {
        return Err(CliError::Config("af.delay_step must be positive and delay_max ≥ delay_min".into()));
    }
    let count = ((d1 - d0) / ds + 1e-9).floor() as usize + 1;
    let delays = uniform_axis(d0 * dt, ds * dt, count);
    let os = p.usize("doppler_oversample")?.max(1);
    let dopplers = uniform_axis(-0.5 / dt, 1.0 / (n as f64 * dt * os as f64), n * os);
    let surface = ambiguity_function(&frame, &delays, &dopplers)?;
    let lattice = unambiguity_parallelogram(&cfg)?;
    let mut peaks = String::from("delay_samples,doppler_bins,magnitude,lattice_distance\n");
    let found = surface.local_maxima(p.f64("peak_floor_db")?);
    let mut worst: f64 = 0.0;
    for &(i, j) in &found {
        let (d, b) = (delays[i] / dt, dopplers[j] * n as f64 * dt);
        let dist = lattice.cell_distance(d, b).abs();
        worst = worst.max(dist);
        peaks.push_str(&format!("{d},{b},{:e},{dist}\n", surface.magnitude(i, j)));
    }
    let mut geo = String::from("item,delay_samples,doppler_bins\n");
    for (i, g) in lattice.basis.iter().enumerate() {
        geo.push_str(&format!("basis{},{},{}\n", i + 1, g.0, g.1));
    }
    for (i, v) in lattice.vertices.iter().enumerate() {
        geo.push_str(&format!("vertex{},{},{}\n", i + 1, v.0, v.1));
    }
    let area = lattice.area();
    let extra = vec![("area".to_string(), area.to_string())];
    write_csv_with_metadata(out, "af", &surface.to_csv(), &meta(p, &extra))?;
    fs::write(out.join("af_peaks.csv"), peaks)?;
    fs::write(out.join("parallelogram.csv"), geo)?;
    Ok(vec![
        format!("lattice basis {:?}, area {area}", lattice.basis),
        format!("{} peaks within {} dB, worst lattice distance {worst} cells", found.len(), p.str("peak_floor_db")),
    ])
}

pub fn af_expected(p: &Params, out: &Path) -> Result<Lines, CliError> {
    let cfg = ChirpConfig::with_integer_c1(p.usize("n")?, p.i64("k")?, p.f64("c2")?, 1.0, 0)?;
    let (d0, d1) = (p.i64("delay_min")?, p.i64("delay_max")?);
    let (b0, b1) = (p.i64("doppler_min")?, p.i64("doppler_max")?);
    let setup = ExpectedAfSetup {
        constellation: constellation(p)?,
        layout: GridLayout::all_data(cfg.n()),
        rrc: rrc(p)?,
        trials: p.usize("trials")?,
        delays: (d0..=d1).map(|d| d as f64).collect(),
        doppler_bins: (b0..=b1).map(|b| b as f64).collect(),
    };
    let surface = expected_squared_af(&cfg, &setup, p.seed()?)?;
    let floor = surface.values.iter().map(|v| v.re).sum::<f64>() / surface.values.len() as f64;
    let line = depression_line(&surface, p.f64("exclude_bins")? / cfg.n() as f64);
    let mut csv = String::from("delay_samples,doppler_bins,power,relative_to_mean\n");
    for (i, &j) in line.iter().enumerate() {
        let b = surface.doppler_axis[j] * cfg.n() as f64;
        csv.push_str(&format!("{},{},{:e},{:e}\n", setup.delays[i], b, surface.power(i, j), surface.power(i, j) / floor));
    }
    write_csv_with_metadata(out, "af_expected", &surface.to_csv(), &meta(p, &[]))?;
    fs::write(out.join("depression.csv"), csv)?;
    let bins: Vec<String> = line.iter().map(|&j| format!("{}", (surface.doppler_axis[j] * cfg.n() as f64).round())).collect();
    Ok(vec![format!("depression line (Doppler bin per delay): {}", bins.join(" "))])
}

pub fn crb(p: &Params, out: &Path) -> Result<Lines, CliError> {
    let mut setup = CrbSetup::monostatic(
        p.f64("carrier_hz")?,
        p.f64("snr_db")?,
        p.f64("distance_m")?,
        p.f64("speed_kmh")? / 3.6,
        constellation(p)?,
    );
    setup.rrc = RrcConfig::new(p.f64("rrc_beta")?, p.usize("rrc_span")?, p.usize("osf")?)?;
    let (n, dt, l) = (p.usize("n")?, p.f64("sample_interval")?, p.usize("cpp_len")?);
    let trials = p.usize("trials")?;
    let seed = p.seed()?;
    let ofdm = averaged_crb(&ChirpConfig::ofdm(n, dt, l)?, &setup, trials, seed)?;
    let ocdm = averaged_crb(&ChirpConfig::ocdm(n, dt, l)?, &setup, trials, seed)?;
    let grid = crb_sweep(&ChirpConfig::ofdm(n, dt, l)?, &p.i64_list("k_values")?, &p.f64_list("c2_values")?, &setup, trials, seed)?;
    let mut csv = String::from("waveform,k,c2,crb_delay_s2,crb_doppler_hz2,crb_distance_m2,crb_velocity_m2s2,distance_excess_pct\n");
    let row = |w: &str, k: String, c2: String, r: &afdm::sensing::CrbReport| {
        format!(
            "{w},{k},{c2},{:e},{:e},{:e},{:e},{:.6}\n",
            r.crb_delay,
            r.crb_doppler,
            r.crb_distance,
            r.crb_velocity,
            100.0 * (r.crb_distance / ofdm.crb_distance - 1.0)
        )
    };
    csv.push_str(&row("ofdm", String::new(), String::new(), &ofdm));
    csv.push_str(&row("ocdm", String::new(), String::new(), &ocdm));
    for g in &grid {
        csv.push_str(&row("afdm", g.k.to_string(), g.c2.to_string(), &g.report));
    }
    let dist: Vec<f64> = grid.iter().map(|g| g.report.crb_distance).collect();
    let vel: Vec<f64> = grid.iter().map(|g| g.report.crb_velocity).collect();
    let excess = dist.iter().map(|d| 100.0 * (d / ofdm.crb_distance - 1.0)).fold(f64::NEG_INFINITY, f64::max);
    let (fd, fv) = (100.0 * relative_fluctuation(&dist), 100.0 * relative_fluctuation(&vel));
    write_csv_with_metadata(out, "crb", &csv, &meta(p, &ofdm.echo))?;
    fs::write(
        out.join("crb_summary.csv"),
        format!("max_distance_excess_pct,distance_fluctuation_pct,velocity_fluctuation_pct\n{excess:.6},{fd:.6},{fv:.6}\n"),
    )?;
    Ok(vec![
        format!("OFDM distance CRB {:.6e} m², velocity CRB {:.6e} (m/s)²", ofdm.crb_distance, ofdm.crb_velocity),
        format!("AFDM grid: max distance excess {excess:.4}%, fluctuation distance {fd:.4}% velocity {fv:.4}%"),
    ])
}

pub fn mf(p: &Params, out: &Path) -> Result<Lines, CliError> {
    let cfg = chirp(p, p.usize("cpp_len")?)?;
    let n = cfg.n();
    let c = constellation(p)?;
    let mut rng = trial_rng(p.seed()?, stream_id("mf"), 0);
    let data: Vec<Complex<f64>> = (0..n).map(|_| c.point(rng.random_range(0..c.order()))).collect();
    let layout = GridLayout::all_data(n);
    let grid = build_grid(&layout, &data, Complex::new(0.0, 0.0))?;
    let tx = modulate(&grid, &cfg)?;
    let target = PathEntry::new(Complex::new(1.0, 0.0), p.f64("target_delay")?, p.f64("target_doppler_bins")? / n as f64);
    let rx = add_awgn(&apply_channel(&tx, &LtvChannel::new(vec![target])?)?, p.f64("snr_db")?, &mut rng)?;
    let delays: Vec<usize> = (0..=p.usize("max_delay")?).collect();
    let (b0, b1, bs) = (p.f64("doppler_min")?, p.f64("doppler_max")?, p.f64("doppler_step")?);
    if !(bs > 0.0 && b1 >= b0) {
        return Err(CliError::Config("mf.doppler_step must be positive and doppler_max ≥ doppler_min".into()));
    }
    let bins = uniform_axis(b0, bs, ((b1 - b0) / bs + 1e-9).floor() as usize + 1);
    let domains = match p.str("domain") {
        "time" => vec![MfDomain::Time],
        "daft" => vec![MfDomain::Daft],
        "both" => vec![MfDomain::Time, MfDomain::Daft],
        other => return Err(CliError::Config(format!("mf.domain: unknown domain `{other}` (time, daft, both)"))),
    };
    let mut est = String::from("domain,delay_s,doppler_hz,peak_magnitude,ambiguous_grid\n");
    let mut lines = Vec::new();
    let mut surfaces = Vec::new();
    for d in domains {
        let (s, e) = matched_filter(&rx, &grid.symbols, &cfg, d, &delays, &bins)?;
        write_csv_with_metadata(out, &format!("mf_{}", d.name()), &s.to_csv(), &meta(p, &[]))?;
        est.push_str(&format!("{},{:e},{:e},{:e},{}\n", d.name(), e.delay_hat, e.doppler_hat, e.peak_magnitude, e.ambiguous_grid));
        lines.push(format!(
            "{}: delay {:.4} samples, Doppler {:.4} bins",
            d.name(),
            e.delay_hat / cfg.sample_interval(),
            e.doppler_hat * n as f64 * cfg.sample_interval()
        ));
        surfaces.push(s);
    }
    if let [a, b] = surfaces.as_slice() {
        let scale = a.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let diff = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale;
        lines.push(format!("time vs DAFT max relative difference {diff:.3e}"));
    }
    fs::write(out.join("mf_estimate.csv"), est)?;
    Ok(lines)
}

pub fn dechirp(p: &Params, out: &Path) -> Result<Lines, CliError> {
    let cfg = chirp(p, p.usize("cpp_len")?)?;
    let n = cfg.n();
    let dt = cfg.sample_interval();
    let max_delay = p.usize("max_delay")?;
    let mut dsp = DechirpConfig::new(max_delay, p.f64("max_doppler_bins")?, p.usize("decimation")?);
    dsp.zero_pad = p.usize("zero_pad")?;
    let s = dsp.cutoff_bins(&cfg)?;
    let guard = p.auto_usize("guard")?.unwrap_or(2 * s);
    let amp = p.auto_f64("pilot_amplitude")?.unwrap_or(((2 * guard + 1) as f64).sqrt());
    let layout = GridLayout::embedded_pilot(n, n / 2, guard, amp)?;
    dsp.validate(&cfg, &layout)?;
    let m = p.usize("m_symbols")?;
    let c = constellation(p)?;
    let si_gain = Complex::new(p.f64("si_gain")?, 0.0);
    let nu = 2.0 * p.f64("speed_kmh")? / 3.6 * p.f64("carrier_hz")? / afdm::sensing::SPEED_OF_LIGHT * dt;
    let seed = p.seed()?;

    let si_only = SceneSpec { constellation: c, m_symbols: m, si_gain, target: None, snr_db: f64::INFINITY };
    let scene = synthesize_monostatic(&cfg, &layout, &si_only, &mut trial_rng(seed, stream_id("dechirp-si"), 0))?;
    let (_, d) = dechirp_pipeline(&scene.rx, &cfg, &layout, &dsp, m)?;
    let si_db = d.residual_db;

    let trials = p.usize("trials")?;
    let bin = m as f64 * cfg.symbol_len() as f64;
    let rows = (0..trials as u64)
        .into_par_iter()
        .map(|t| -> Result<(f64, f64, f64, f64), CliError> {
            let mut rng = trial_rng(seed, stream_id("dechirp"), t);
            let l = rng.random_range(1..=max_delay.max(1)) as f64;
            let ph: f64 = rng.random();
            let spec = SceneSpec {
                constellation: c,
                m_symbols: m,
                si_gain,
                target: Some(PathEntry::new(Complex::from_polar(1.0, std::f64::consts::TAU * ph), l, nu)),
                snr_db: p.f64("snr_db")?,
            };
            let sc = synthesize_monostatic(&cfg, &layout, &spec, &mut rng)?;
            let (e, _) = dechirp_pipeline(&sc.rx, &cfg, &layout, &dsp, m)?;
            Ok((l, e.delay_hat / dt, nu * bin, e.doppler_hat * dt * bin))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut csv = String::from("trial,delay_true,delay_hat,doppler_true_bins,doppler_hat_bins,delay_err_bins,doppler_err_bins,within_half_bin\n");
    let mut ok = 0;
    for (t, (l, lh, b, bh)) in rows.iter().enumerate() {
        let (de, be) = ((lh - l).abs(), (bh - b).abs());
        let good = de <= 0.5 && be <= 0.5;
        ok += good as usize;
        csv.push_str(&format!("{t},{l},{lh:.6},{b:.6},{bh:.6},{de:.6},{be:.6},{good}\n"));
    }
    let extra = vec![
        ("cutoff_bins".to_string(), s.to_string()),
        ("guard".to_string(), guard.to_string()),
        ("pilot_amplitude".to_string(), amp.to_string()),
        ("doppler_bin_hz".to_string(), format!("{:e}", 1.0 / (bin * dt))),
    ];
    write_csv_with_metadata(out, "dechirp", &csv, &meta(p, &extra))?;
    let frac = ok as f64 / trials.max(1) as f64;
    fs::write(out.join("dechirp_summary.csv"), format!("trials,within_half_bin,fraction,si_residual_db\n{trials},{ok},{frac:.6},{si_db:.3}\n"))?;
    Ok(vec![
        format!("SI-only residual after DC blocking {si_db:.1} dB"),
        format!("{ok}/{trials} trials within half a bin in delay and Doppler"),
    ])
}

pub fn fullduplex(p: &Params, out: &Path) -> Result<Lines, CliError> {
    let cfg = chirp(p, p.usize("cpp_len")?)?;
    let n = cfg.n();
    let doppler_mode = DopplerMode::from_name(p.str("doppler_mode"), n).map_err(|e| CliError::Config(e.to_string()))?;
    let (ld, bins) = (p.f64("max_delay")?, p.f64("max_doppler_bins")?);
    let spec = |paths| ChannelSource::Random(ChannelSpec::comm(paths, ld, bins / n as f64).with_modes(DelayMode::Integer, doppler_mode));
    let mut sc = FdScenario::mirrored(
        cfg,
        spec(p.usize("echo_paths")?),
        spec(p.usize("comm_paths")?),
        constellation(p)?,
        p.f64("snr_db")?,
        p.usize("extra_guard")?,
    )?;
    sc.echo_gain = p.f64("echo_gain")?;
    sc.doppler_oversample = p.usize("doppler_oversample")?;
    sc.max_paths = p.usize("max_paths")?;
    sc.m_symbols = p.usize("m_symbols")?;
    sc.trials = p.usize("trials")?;
    sc.remote_silent = p.bool("remote_silent")?;
    sc.seed = p.seed()?;
    let mut summary = String::new();
    let mut lines = Vec::new();
    for name in p.list("modes") {
        let mode = FdMode::from_name(&name).map_err(|e| CliError::Config(e.to_string()))?;
        let r = simulate_fullduplex(&sc, mode)?;
        write_csv_with_metadata(out, &format!("fullduplex_{}", mode.name()), &r.to_csv(), &meta(p, &r.metadata))?;
        let s = r.summary_csv();
        if summary.is_empty() {
            summary.push_str(s.lines().next().unwrap_or_default());
            summary.push('\n');
        }
        summary.push_str(s.lines().nth(1).unwrap_or_default());
        summary.push('\n');
        let ber = r.ber_remote_data.map(|b| format!("{b:.4e}")).unwrap_or_else(|| "n/a".into());
        let res = r.residual_after_subtraction_db.map(|v| format!("{v:.2} dB")).unwrap_or_else(|| "n/a".into());
        lines.push(format!("{}: BER {ber}, residual {res}", mode.name()));
    }
    fs::write(out.join("fullduplex_summary.csv"), summary)?;
    Ok(lines)
}
