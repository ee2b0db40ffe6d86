//! File formats: graphs, node sets, Markov sequences and node dynamics are
//! JSON; state matrices are CSV with the dimension on the first line.
//!
//! ```text
//! 3
//! 0,1,0
//! 1,0,2
//! 0,2,0
//! ```

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;

use crate::error::{Error, Result};

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

/// Parses JSON, reporting the line and column of any syntax or schema
/// error.
pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    // serde_json's message already ends with "at line L column C"
    serde_json::from_str(text).map_err(|e| Error::Format(format!("{origin}: {e}")))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    parse_json(&read_text(path)?, &path.display().to_string())
}

pub fn parse_matrix_csv(text: &str, origin: &str) -> Result<DMatrix<f64>> {
    let err = |line: usize, msg: String| Error::Format(format!("{origin}: line {line}: {msg}"));
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or_else(|| err(1, "empty matrix file".into()))?;
    let n: usize = header
        .parse()
        .map_err(|_| err(hline, format!("expected the dimension n, found {header:?}")))?;
    let mut m = DMatrix::zeros(n, n);
    let mut rows = 0;
    for (lineno, line) in lines {
        if rows == n {
            return Err(err(lineno, format!("more than {n} rows")));
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != n {
            return Err(err(lineno, format!("expected {n} entries, found {}", fields.len())));
        }
        for (j, f) in fields.iter().enumerate() {
            let v: f64 = f
                .parse()
                .map_err(|_| err(lineno, format!("entry {} is not a number: {f:?}", j + 1)))?;
            if !v.is_finite() {
                return Err(err(lineno, format!("entry {} is not finite", j + 1)));
            }
            m[(rows, j)] = v;
        }
        rows += 1;
    }
    if rows != n {
        return Err(err(text.lines().count().max(1), format!("expected {n} rows, found {rows}")));
    }
    Ok(m)
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    parse_matrix_csv(&read_text(path)?, &path.display().to_string())
}

/// Square matrices only; `{}` formatting of `f64` round-trips exactly.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = format!("{}\n", m.nrows());
    for row in m.row_iter() {
        let fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    fs::write(path, matrix_to_csv(m)).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Graph, NodeSet};

    #[test]
    fn csv_round_trip() {
        let m = DMatrix::from_row_slice(2, 2, &[0.1, -2.5e-17, 1.0 / 3.0, 7.0]);
        assert_eq!(parse_matrix_csv(&matrix_to_csv(&m), "m").unwrap(), m);
    }

    #[test]
    fn csv_errors_name_the_line() {
        let e = parse_matrix_csv("2\n1,2\n3,x\n", "m.csv").unwrap_err();
        assert!(matches!(&e, Error::Format(s) if s.contains("line 3")), "{e}");
        assert!(parse_matrix_csv("2\n1,2\n", "m").is_err());
        assert!(parse_matrix_csv("2\n1,2\n3,4\n5,6\n", "m").is_err());
        assert!(parse_matrix_csv("two\n", "m").is_err());
        assert!(parse_matrix_csv("", "m").is_err());
        assert!(parse_matrix_csv("1\nNaN\n", "m").is_err());
    }

    #[test]
    fn json_errors_carry_position() {
        let e = parse_json::<Graph>("{\"n\": 3,\n \"edges\": [[1, 2],]}", "g.json").unwrap_err();
        assert!(matches!(&e, Error::Format(s) if s.contains("line 2")), "{e}");
        let e = parse_json::<Graph>("{\"n\": 2, \"edges\": [[1, 5]]}", "g.json").unwrap_err();
        assert!(matches!(e, Error::Format(_)));
        assert_eq!(parse_json::<NodeSet>("[3,1]", "s").unwrap(), NodeSet::from([1, 3]));
    }
}
