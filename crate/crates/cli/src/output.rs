use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// JSON has no infinities; they are written as the strings `"inf"` and `"-inf"`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else if x.is_nan() {
        Value::from("nan")
    } else if x > 0.0 {
        Value::from("inf")
    } else {
        Value::from("-inf")
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

/// Writes to `path`, or to standard output when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, text.as_bytes()),
        None => io::stdout().write_all(text.as_bytes()).map_err(CliError::io("<stdout>")),
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    fs::write(path, bytes).map_err(CliError::io(path))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// `i,L_i` rows with 1-based `i`.
pub fn growth_csv(totals: &[usize]) -> String {
    let mut out = String::from("i,L_i\n");
    for (i, l) in totals.iter().enumerate() {
        let _ = writeln!(out, "{},{l}", i + 1);
    }
    out
}

pub fn degree_csv(hist: &[u64]) -> String {
    let mut out = String::from("degree,count\n");
    for (d, c) in hist.iter().enumerate().filter(|(_, &c)| c > 0) {
        let _ = writeln!(out, "{d},{c}");
    }
    out
}

pub fn cdf_csv(cdf: &[f64]) -> String {
    let mut out = String::from("k,cdf\n");
    for (k, v) in cdf.iter().enumerate() {
        let _ = writeln!(out, "{},{v}", k + 1);
    }
    out
}

pub fn trace_csv(objective: &[f64]) -> String {
    let mut out = String::from("step,objective\n");
    for (s, v) in objective.iter().enumerate() {
        let _ = writeln!(out, "{},{v}", s + 1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn infinities_become_strings() {
        assert_eq!(num(f64::INFINITY), Value::from("inf"));
        assert_eq!(num(f64::NEG_INFINITY), Value::from("-inf"));
        assert_eq!(num(1.5), Value::from(1.5));
    }
}
