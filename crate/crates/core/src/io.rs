//! CSV outputs with a `key=value` metadata sidecar.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// `key=value` lines in the given order.
pub fn format_metadata(meta: &[(String, String)]) -> String {
    meta.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

/// Parses the output of [`format_metadata`]; blank lines and `#` comments
/// are skipped.
pub fn parse_metadata(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key=value", i + 1))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Writes `<dir>/<stem>.csv` and `<dir>/<stem>.meta`; returns both paths.
pub fn write_csv_with_metadata(dir: &Path, stem: &str, csv: &str, meta: &[(String, String)]) -> io::Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let data = dir.join(format!("{stem}.csv"));
    let side = dir.join(format!("{stem}.meta"));
    fs::write(&data, csv)?;
    fs::write(&side, format_metadata(meta))?;
    Ok((data, side))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metadata_round_trip() {
        let meta = vec![("a".to_string(), "1".to_string()), ("b key".to_string(), "x=y".to_string())];
        assert_eq!(parse_metadata(&format_metadata(&meta)).unwrap(), meta);
        assert!(parse_metadata("novalue\n").is_err());
    }

    #[test]
    fn writes_both_files() {
        let dir = std::env::temp_dir().join(format!("afdm-io-{}", std::process::id()));
        let (c, m) = write_csv_with_metadata(&dir, "t", "x,y\n1,2\n", &[("seed".into(), "3".into())]).unwrap();
        assert_eq!(fs::read_to_string(c).unwrap(), "x,y\n1,2\n");
        assert_eq!(fs::read_to_string(m).unwrap(), "seed=3\n");
        fs::remove_dir_all(dir).unwrap();
    }
}
