use std::path::Path;
use std::process::{Command, Output};

fn afdm(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_afdm")).args(args).arg("--out").arg(out).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn unknown_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = afdm(&["mf", "--set", "bogus=1"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bogus"));
}

#[test]
fn unknown_section_in_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.ini");
    std::fs::write(&cfg, "[nosuch]\nx = 1\n").unwrap();
    let o = afdm(&["mf", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(code(&o), 2);
}

#[test]
fn malformed_value_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = afdm(&["mf", "--set", "n=sixty"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("mf.n"));
}

#[test]
fn library_rejection_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // Prefix shorter than the largest delay.
    let o = afdm(&["ber", "--set", "cpp_len=1", "--set", "snr_db=0"], dir.path());
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = afdm(&["selftest"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let csv = std::fs::read_to_string(dir.path().join("selftest.csv")).unwrap();
    assert!(!csv.contains(",false,"));
}

#[test]
fn echo_round_trips_as_config() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = afdm(&["fullduplex", "--seed", "4", "--set", "trials=20", "--set", "fullduplex.snr_db=12"], &a);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let echo = a.join("config.ini");
    let text = std::fs::read_to_string(&echo).unwrap();
    assert!(text.contains("seed = 4") && text.contains("trials = 20") && text.contains("snr_db = 12"));
    let o = afdm(&["fullduplex", "--config", echo.to_str().unwrap()], &b);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["config.ini", "fullduplex_summary.csv", "fullduplex_estimated.csv", "fullduplex_genie.meta"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seed_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    afdm(&["dechirp", "--seed", "1", "--set", "trials=5", "--set", "m_symbols=8"], &a);
    afdm(&["dechirp", "--seed", "2", "--set", "trials=5", "--set", "m_symbols=8"], &b);
    assert_ne!(std::fs::read(a.join("dechirp.csv")).unwrap(), std::fs::read(b.join("dechirp.csv")).unwrap());
}

#[test]
fn each_experiment_writes_csv_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[(&str, &[&str], &[&str])] = &[
        ("ber", &["snr_db=0,5", "max_trials=2048", "min_errors=20", "waveforms=ofdm, afdm"], &["ber_ofdm", "ber_afdm"]),
        ("af", &["n=32", "k=3", "delay_min=-8", "delay_max=8"], &["af"]),
        ("af-expected", &["n=32", "k=4", "osf=1", "trials=50", "doppler_min=-16", "doppler_max=15"], &["af_expected"]),
        ("crb", &["n=32", "trials=5", "k_values=2", "c2_values=0", "osf=2"], &["crb"]),
        ("mf", &["domain=daft"], &["mf_daft"]),
        ("dechirp", &["trials=4", "m_symbols=8"], &["dechirp"]),
        ("fullduplex", &["trials=10", "modes=genie"], &["fullduplex_genie"]),
    ];
    for (exp, sets, stems) in cases {
        let out = dir.path().join(exp);
        let mut args = vec![*exp];
        for s in *sets {
            args.push("--set");
            args.push(s);
        }
        let o = afdm(&args, &out);
        assert_eq!(code(&o), 0, "{exp}: {}", stderr(&o));
        assert!(out.join("config.ini").exists());
        for stem in *stems {
            let csv = std::fs::read_to_string(out.join(format!("{stem}.csv"))).unwrap();
            assert!(csv.lines().count() >= 2, "{stem}.csv is empty");
            let meta = std::fs::read_to_string(out.join(format!("{stem}.meta"))).unwrap();
            assert!(meta.contains(&format!("experiment={exp}")), "{stem}.meta: {meta}");
            assert!(meta.contains("seed="));
        }
    }
}
