//! Experiment parameters: defaults, config files, `--set` overrides and the
//! config echo.
//!
//! Grammar of a config file:
//!
//! ```text
//! # comment
//! [run]
//! seed = 7
//! [ber]
//! snr_db = 0, 5, 10
//! ```
//!
//! One `key = value` per line under a `[section]` header. Sections are
//! `run` and the experiment names. Keys before any header belong to the
//! experiment being run (or to `run`). Lists are comma separated. Unknown
//! sections and keys are errors.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::CliError;

pub struct Key {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

const fn key(name: &'static str, default: &'static str, help: &'static str) -> Key {
    Key { name, default, help }
}

pub const RUN: &[Key] = &[key("seed", "1", "master seed for every random stream")];

pub const BER: &[Key] = &[
    key("n", "12", "subcarriers"),
    key("constellation", "bpsk", "bpsk, qpsk or qam16"),
    key("paths", "4", "channel paths"),
    key("max_delay", "2", "largest path delay (samples)"),
    key("max_doppler_bins", "1", "largest |Doppler| in DAFT bins"),
    key("delay_mode", "distinct", "distinct, shared or continuous"),
    key("doppler_mode", "integer", "integer, uniform or jakes"),
    key("cpp_len", "2", "prefix length"),
    key("sample_interval", "4.166666666666667e-8", "seconds"),
    key("detector", "sphere", "sphere, ml or mmse"),
    key("waveforms", "ofdm, ocdm, afdm", "waveforms to simulate"),
    key("afdm_k", "auto", "2N·c1 for AFDM; auto picks the smallest separating value"),
    key("afdm_c2", "0", "AFDM c2"),
    key("snr_db", "0, 2.5, 5, 7.5, 10, 12.5, 15, 17.5", "SNR grid (dB)"),
    key("min_errors", "200", "bit errors per point before stopping"),
    key("max_trials", "4000000", "trial cap per point"),
    key("batch", "2048", "trials per batch"),
    key("diversity_points", "3", "top SNR points used for the diversity slope"),
];

pub const AF: &[Key] = &[
    key("n", "128", "subcarriers"),
    key("k", "9", "2N·c1"),
    key("c2", "0", "c2"),
    key("sample_interval", "1e-6", "seconds"),
    key("osf", "1", "oversampling; above 1 the pilot is RRC shaped"),
    key("rrc_beta", "0.25", "RRC roll-off"),
    key("rrc_span", "24", "RRC span (symbols)"),
    key("pilot_index", "0", "DAFT index of the pilot"),
    key("delay_min", "-30", "delay grid start (samples)"),
    key("delay_max", "30", "delay grid end (samples)"),
    key("delay_step", "1", "delay grid step (samples)"),
    key("doppler_oversample", "1", "Doppler grid points per DAFT bin"),
    key("peak_floor_db", "3", "local maxima within this many dB of the global peak"),
];

pub const AF_EXPECTED: &[Key] = &[
    key("n", "128", "subcarriers"),
    key("k", "8", "2N·c1"),
    key("c2", "0", "c2"),
    key("constellation", "qam16", "data constellation"),
    key("osf", "8", "oversampling; above 1 the symbol is RRC shaped"),
    key("rrc_beta", "0.25", "RRC roll-off"),
    key("rrc_span", "24", "RRC span (symbols)"),
    key("trials", "100", "random data draws"),
    key("delay_min", "1", "delay grid start (samples)"),
    key("delay_max", "12", "delay grid end (samples)"),
    key("doppler_min", "-64", "Doppler grid start (bins)"),
    key("doppler_max", "63", "Doppler grid end (bins)"),
    key("exclude_bins", "0", "Doppler half-width skipped by the depression search"),
];

pub const CRB: &[Key] = &[
    key("carrier_hz", "60e9", "carrier frequency"),
    key("snr_db", "10", "echo SNR (dB)"),
    key("distance_m", "1000", "round-trip distance"),
    key("speed_kmh", "300", "radial speed"),
    key("constellation", "qpsk", "data constellation"),
    key("n", "128", "subcarriers"),
    key("sample_interval", "0.78e-6", "seconds"),
    key("cpp_len", "8", "prefix length"),
    key("osf", "8", "oversampling"),
    key("rrc_beta", "0.25", "RRC roll-off"),
    key("rrc_span", "24", "RRC span (symbols)"),
    key("trials", "1000", "random data draws per configuration"),
    key("k_values", "2, 4, 6, 8, 10", "2N·c1 grid"),
    key("c2_values", "0, 0.1, 0.2, 0.3, 0.4", "c2 grid"),
];

pub const MF: &[Key] = &[
    key("n", "64", "subcarriers"),
    key("k", "3", "2N·c1"),
    key("c2", "0", "c2"),
    key("cpp_len", "8", "prefix length"),
    key("sample_interval", "1e-7", "seconds"),
    key("constellation", "qpsk", "data constellation"),
    key("target_delay", "3", "target delay (samples)"),
    key("target_doppler_bins", "2", "target Doppler (DAFT bins)"),
    key("snr_db", "20", "echo SNR (dB)"),
    key("max_delay", "8", "largest delay hypothesis (samples)"),
    key("doppler_min", "-4", "Doppler grid start (bins)"),
    key("doppler_max", "4", "Doppler grid end (bins)"),
    key("doppler_step", "0.25", "Doppler grid step (bins)"),
    key("domain", "both", "time, daft or both"),
];

pub const DECHIRP: &[Key] = &[
    key("n", "64", "subcarriers"),
    key("k", "3", "2N·c1"),
    key("c2", "0", "c2"),
    key("cpp_len", "8", "prefix length"),
    key("sample_interval", "1e-7", "seconds"),
    key("constellation", "qpsk", "data constellation"),
    key("max_delay", "2", "largest target delay (samples)"),
    key("max_doppler_bins", "1", "largest |Doppler| (DAFT bins)"),
    key("decimation", "4", "decimation after the low-pass filter"),
    key("zero_pad", "8", "spectral zero-padding factor"),
    key("guard", "auto", "pilot guard per side; auto is twice the cutoff"),
    key("pilot_amplitude", "auto", "auto is sqrt(2·guard + 1)"),
    key("si_gain", "30", "self-interference amplitude"),
    key("carrier_hz", "60e9", "carrier frequency"),
    key("speed_kmh", "300", "radial speed"),
    key("m_symbols", "32", "symbols per trial"),
    key("snr_db", "10", "echo SNR (dB)"),
    key("trials", "200", "Monte Carlo trials"),
];

pub const FULLDUPLEX: &[Key] = &[
    key("n", "64", "subcarriers"),
    key("k", "3", "2N·c1"),
    key("c2", "0", "c2"),
    key("cpp_len", "4", "prefix length"),
    key("sample_interval", "1e-6", "seconds"),
    key("constellation", "qpsk", "data constellation"),
    key("max_delay", "1", "largest delay of both channels (samples)"),
    key("max_doppler_bins", "1", "largest |Doppler| of both channels (DAFT bins)"),
    key("doppler_mode", "integer", "integer, uniform or jakes"),
    key("echo_paths", "1", "paths of A's echo channel"),
    key("comm_paths", "2", "paths of the B to A channel"),
    key("echo_gain", "1", "amplitude scale of A's echo"),
    key("extra_guard", "0", "guard added beyond twice the spread"),
    key("doppler_oversample", "1", "dictionary points per Doppler bin"),
    key("max_paths", "4", "path limit of the estimator"),
    key("snr_db", "15", "Es/N0 of B's data (dB)"),
    key("m_symbols", "1", "symbols per trial"),
    key("trials", "500", "Monte Carlo trials"),
    key("remote_silent", "false", "B transmits nothing"),
    key("modes", "estimated, genie, half-duplex", "receiver modes to run"),
];

pub const SELFTEST: &[Key] = &[];

pub const SECTIONS: &[(&str, &[Key])] = &[
    ("run", RUN),
    ("ber", BER),
    ("af", AF),
    ("af-expected", AF_EXPECTED),
    ("crb", CRB),
    ("mf", MF),
    ("dechirp", DECHIRP),
    ("fullduplex", FULLDUPLEX),
    ("selftest", SELFTEST),
];

fn section_keys(name: &str) -> Option<&'static [Key]> {
    SECTIONS.iter().find(|(s, _)| *s == name).map(|(_, k)| *k)
}

/// Effective values for one experiment.
#[derive(Clone, Debug)]
pub struct Params {
    pub experiment: &'static str,
    run: BTreeMap<String, String>,
    values: BTreeMap<String, String>,
}

impl Params {
    pub fn defaults(experiment: &'static str) -> Result<Self, CliError> {
        let keys = section_keys(experiment).ok_or_else(|| CliError::Config(format!("unknown experiment `{experiment}`")))?;
        let collect = |k: &[Key]| k.iter().map(|k| (k.name.to_string(), k.default.to_string())).collect();
        Ok(Self { experiment, run: collect(RUN), values: collect(keys) })
    }

    /// Applies a config file: the experiment's own section and `run` are
    /// taken, other known sections are checked and ignored.
    pub fn load_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        self.load_str(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn load_str(&mut self, text: &str) -> Result<(), CliError> {
        let ini = ini::Ini::load_from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        for (section, props) in ini.iter() {
            for (k, v) in props.iter() {
                match section {
                    None => self.set_bare(k, v)?,
                    Some(s) => self.set_in(s, k, v)?,
                }
            }
        }
        Ok(())
    }

    /// `key=value` or `section.key=value`.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), CliError> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set `{assignment}`: expected key=value")))?;
        let (k, v) = (k.trim(), v.trim());
        match k.split_once('.') {
            Some((s, k)) => self.set_in(s, k, v),
            None => self.set_bare(k, v),
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.run.insert("seed".into(), seed.to_string());
    }

    fn set_bare(&mut self, k: &str, v: &str) -> Result<(), CliError> {
        if let Some(slot) = self.values.get_mut(k) {
            *slot = v.to_string();
        } else if let Some(slot) = self.run.get_mut(k) {
            *slot = v.to_string();
        } else {
            return Err(CliError::Config(format!("unknown key `{k}` for experiment `{}`", self.experiment)));
        }
        Ok(())
    }

    fn set_in(&mut self, section: &str, k: &str, v: &str) -> Result<(), CliError> {
        let keys = section_keys(section).ok_or_else(|| CliError::Config(format!("unknown section `[{section}]`")))?;
        if !keys.iter().any(|key| key.name == k) {
            return Err(CliError::Config(format!("unknown key `{section}.{k}`")));
        }
        if section == "run" {
            self.run.insert(k.to_string(), v.to_string());
        } else if section == self.experiment {
            self.values.insert(k.to_string(), v.to_string());
        }
        Ok(())
    }

    /// Config file holding every effective value; loading it reproduces
    /// the run.
    pub fn echo(&self) -> String {
        let mut s = String::from("[run]\n");
        for key in RUN {
            s.push_str(&format!("# {}\n{} = {}\n", key.help, key.name, self.run[key.name]));
        }
        s.push_str(&format!("\n[{}]\n", self.experiment));
        let keys = section_keys(self.experiment).unwrap_or(&[]);
        for key in keys {
            s.push_str(&format!("# {}\n{} = {}\n", key.help, key.name, self.values[key.name]));
        }
        s
    }

    /// `(key, value)` pairs of the experiment section, in declaration order.
    pub fn entries(&self) -> Vec<(String, String)> {
        let keys = section_keys(self.experiment).unwrap_or(&[]);
        let mut v: Vec<(String, String)> = keys.iter().map(|k| (k.name.to_string(), self.values[k.name].clone())).collect();
        v.push(("seed".into(), self.run["seed"].clone()));
        v
    }

    fn raw(&self, k: &str) -> &str {
        self.values
            .get(k)
            .or_else(|| self.run.get(k))
            .unwrap_or_else(|| panic!("`{k}` is not a declared key of `{}`", self.experiment))
    }

    fn bad(&self, k: &str, expected: &str) -> CliError {
        CliError::Config(format!("invalid value `{}` for key `{}.{k}`: expected {expected}", self.raw(k), self.experiment))
    }

    pub fn str(&self, k: &str) -> &str {
        self.raw(k)
    }

    pub fn f64(&self, k: &str) -> Result<f64, CliError> {
        self.raw(k).parse::<f64>().ok().filter(|v| !v.is_nan()).ok_or_else(|| self.bad(k, "a number"))
    }

    pub fn usize(&self, k: &str) -> Result<usize, CliError> {
        self.raw(k).parse().map_err(|_| self.bad(k, "a non-negative integer"))
    }

    pub fn i64(&self, k: &str) -> Result<i64, CliError> {
        self.raw(k).parse().map_err(|_| self.bad(k, "an integer"))
    }

    pub fn u64(&self, k: &str) -> Result<u64, CliError> {
        self.raw(k).parse().map_err(|_| self.bad(k, "a non-negative integer"))
    }

    pub fn bool(&self, k: &str) -> Result<bool, CliError> {
        match self.raw(k) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(self.bad(k, "true or false")),
        }
    }

    /// `None` for the literal `auto`.
    pub fn auto_f64(&self, k: &str) -> Result<Option<f64>, CliError> {
        if self.raw(k) == "auto" {
            Ok(None)
        } else {
            self.f64(k).map(Some)
        }
    }

    pub fn auto_usize(&self, k: &str) -> Result<Option<usize>, CliError> {
        if self.raw(k) == "auto" {
            Ok(None)
        } else {
            self.usize(k).map(Some)
        }
    }

    pub fn list(&self, k: &str) -> Vec<String> {
        self.raw(k).split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
    }

    pub fn f64_list(&self, k: &str) -> Result<Vec<f64>, CliError> {
        let v: Option<Vec<f64>> = self.list(k).iter().map(|s| s.parse().ok()).collect();
        v.filter(|v| !v.is_empty()).ok_or_else(|| self.bad(k, "a comma-separated list of numbers"))
    }

    pub fn i64_list(&self, k: &str) -> Result<Vec<i64>, CliError> {
        let v: Option<Vec<i64>> = self.list(k).iter().map(|s| s.parse().ok()).collect();
        v.filter(|v| !v.is_empty()).ok_or_else(|| self.bad(k, "a comma-separated list of integers"))
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.u64("seed")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_and_sections_rejected() {
        let mut p = Params::defaults("ber").unwrap();
        assert!(p.load_str("[ber]\nbogus = 1\n").is_err());
        assert!(p.load_str("[nope]\nn = 1\n").is_err());
        assert!(p.apply_override("zzz=1").is_err());
        assert!(p.apply_override("n").is_err());
        // a key of another experiment is valid in its own section only
        assert!(p.load_str("[crb]\ntrials = 5\n").is_ok());
        assert!(p.load_str("[crb]\nwaveforms = ofdm\n").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let mut p = Params::defaults("crb").unwrap();
        p.apply_override("trials=7").unwrap();
        p.apply_override("run.seed=42").unwrap();
        let mut q = Params::defaults("crb").unwrap();
        q.load_str(&p.echo()).unwrap();
        assert_eq!(q.echo(), p.echo());
        assert_eq!(q.usize("trials").unwrap(), 7);
        assert_eq!(q.seed().unwrap(), 42);
    }

    #[test]
    fn typed_errors_name_the_key() {
        let mut p = Params::defaults("mf").unwrap();
        p.apply_override("n=sixty").unwrap();
        let e = p.usize("n").unwrap_err().to_string();
        assert!(e.contains("mf.n"), "{e}");
        assert_eq!(p.f64_list("doppler_min").unwrap(), vec![-4.0]);
    }

    #[test]
    fn every_section_has_unique_keys() {
        for (s, keys) in SECTIONS {
            let mut names: Vec<_> = keys.iter().map(|k| k.name).collect();
            names.sort();
            names.dedup();
            assert_eq!(names.len(), keys.len(), "{s}");
            assert!(keys.iter().all(|k| !k.help.is_empty()));
        }
    }
}
