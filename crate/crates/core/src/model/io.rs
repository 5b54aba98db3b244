//! Text formats for attribute matrices and fitness vectors.
//!
//! A matrix file starts with the header line `n L alpha beta c seed`, where
//! unknown fields are written as `?`, followed by one line per node listing its
//! 0-based feature indices in ascending order. A fitness file holds one value
//! per line. Floats are written in their shortest round-trip form.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use super::{AttributeMatrix, FitnessVector, ModelError};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn parse_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        message: message.into(),
    }
}

/// Optional header fields of a matrix file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MatrixMeta {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub c: Option<f64>,
    pub seed: Option<u64>,
}

fn field<T: ToString>(value: Option<T>) -> String {
    value.map_or_else(|| "?".to_string(), |v| v.to_string())
}

fn parse_field<T: FromStr>(token: &str, name: &str) -> Result<Option<T>, FormatError> {
    if token == "?" {
        return Ok(None);
    }
    token
        .parse()
        .map(Some)
        .map_err(|_| parse_err(1, format!("invalid {name} {token:?}")))
}

pub fn write_matrix<W: Write>(out: W, matrix: &AttributeMatrix, meta: &MatrixMeta) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(
        out,
        "{} {} {} {} {} {}",
        matrix.n(),
        matrix.num_features(),
        field(meta.alpha),
        field(meta.beta),
        field(meta.c),
        field(meta.seed)
    )?;
    for row in matrix.rows() {
        let mut first = true;
        for k in row {
            if !first {
                out.write_all(b" ")?;
            }
            write!(out, "{k}")?;
            first = false;
        }
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_matrix<R: BufRead>(input: R) -> Result<(AttributeMatrix, MatrixMeta), FormatError> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| parse_err(1, "missing header"))??;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 6 {
        return Err(parse_err(1, "header must read `n L alpha beta c seed`"));
    }
    let n: usize = tokens[0].parse().map_err(|_| parse_err(1, "invalid n"))?;
    let num_features: usize = tokens[1].parse().map_err(|_| parse_err(1, "invalid L"))?;
    let meta = MatrixMeta {
        alpha: parse_field(tokens[2], "alpha")?,
        beta: parse_field(tokens[3], "beta")?,
        c: parse_field(tokens[4], "c")?,
        seed: parse_field(tokens[5], "seed")?,
    };
    let mut rows = Vec::with_capacity(n);
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let lineno = idx + 2;
        if rows.len() == n {
            if line.trim().is_empty() {
                continue;
            }
            return Err(parse_err(lineno, format!("more than {n} rows")));
        }
        let row = line
            .split_whitespace()
            .map(|t| t.parse::<u32>().map_err(|_| parse_err(lineno, format!("invalid index {t:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    if rows.len() != n {
        return Err(parse_err(n + 1, format!("expected {n} rows, found {}", rows.len())));
    }
    let matrix = AttributeMatrix::from_rows(rows)?;
    if matrix.num_features() != num_features {
        return Err(parse_err(
            1,
            format!("header declares {num_features} features, rows hold {}", matrix.num_features()),
        ));
    }
    Ok((matrix, meta))
}

pub fn write_fitness<W: Write>(out: W, fitness: &[f64]) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    for v in fitness {
        writeln!(out, "{v}")?;
    }
    out.flush()
}

pub fn read_fitness<R: BufRead>(input: R) -> Result<FitnessVector, FormatError> {
    let mut values = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        values.push(t.parse::<f64>().map_err(|_| parse_err(idx + 1, format!("invalid value {t:?}")))?);
    }
    Ok(FitnessVector::new(values)?)
}

pub fn save_matrix(path: &Path, matrix: &AttributeMatrix, meta: &MatrixMeta) -> io::Result<()> {
    write_matrix(File::create(path)?, matrix, meta)
}

pub fn load_matrix(path: &Path) -> Result<(AttributeMatrix, MatrixMeta), FormatError> {
    read_matrix(BufReader::new(File::open(path)?))
}

pub fn save_fitness(path: &Path, fitness: &[f64]) -> io::Result<()> {
    write_fitness(File::create(path)?, fitness)
}

pub fn load_fitness(path: &Path) -> Result<FitnessVector, FormatError> {
    read_fitness(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip() {
        let m = AttributeMatrix::from_rows(vec![vec![0, 1], vec![], vec![0, 2, 3]]).unwrap();
        let meta = MatrixMeta {
            alpha: Some(3.0),
            beta: Some(0.1 + 0.2),
            c: None,
            seed: Some(u64::MAX),
        };
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m, &meta).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("3 4 3 0.30000000000000004 ? 18446744073709551615\n0 1\n\n0 2 3\n"));
        let (back, back_meta) = read_matrix(&buf[..]).unwrap();
        assert_eq!(back, m);
        assert_eq!(back_meta, meta);
    }

    #[test]
    fn fitness_round_trip_is_exact() {
        let values = vec![0.1, 1.0 / 3.0, 1.75, 2.0f64.sqrt()];
        let mut buf = Vec::new();
        write_fitness(&mut buf, &values).unwrap();
        assert_eq!(read_fitness(&buf[..]).unwrap().values(), &values[..]);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(read_matrix(&b""[..]).is_err());
        assert!(read_matrix(&b"2 1 ? ? ? ?\n0\n"[..]).is_err());
        assert!(read_matrix(&b"1 2 ? ? ? ?\n0\n"[..]).is_err());
        assert!(read_matrix(&b"1 1 ? ? ? ?\nx\n"[..]).is_err());
        assert!(read_matrix(&b"1 1 ? ? ?\n0\n"[..]).is_err());
        assert!(read_fitness(&b"1.0\n-2\n"[..]).is_err());
    }
}
