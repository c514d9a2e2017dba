//! Plain-text matrix and vector format.
//!
//! First line `rows cols`, then one whitespace-separated row per line.
//! Values are written in decimal scientific notation with 17 significant
//! digits, which round-trips every f64 exactly. Vectors are written as
//! N x 1 matrices; the parser also accepts 1 x N.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::Signal;

pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    out.push_str(&format!("{} {}\n", m.nrows(), m.ncols()));
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn format_signal(x: &Signal) -> String {
    let m = DMatrix::from_column_slice(x.len(), 1, x.as_slice());
    format_matrix(&m)
}

/// Parse one matrix starting at `lines[*pos]`; advances `*pos` past it.
fn parse_one(lines: &[(usize, &str)], pos: &mut usize) -> Result<DMatrix<f64>> {
    let (line_no, header) = lines.get(*pos).copied().ok_or(Error::Parse {
        line: lines.last().map_or(0, |l| l.0),
        msg: "expected a matrix header 'rows cols'".into(),
    })?;
    let mut it = header.split_whitespace();
    let rows: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or(Error::Parse {
            line: line_no,
            msg: "bad row count".into(),
        })?;
    let cols: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or(Error::Parse {
            line: line_no,
            msg: "bad column count".into(),
        })?;
    if it.next().is_some() {
        return Err(Error::Parse {
            line: line_no,
            msg: "trailing tokens after 'rows cols'".into(),
        });
    }
    if rows == 0 || cols == 0 {
        return Err(Error::Parse {
            line: line_no,
            msg: "dimensions must be >= 1".into(),
        });
    }
    *pos += 1;
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let (line_no, row) = lines.get(*pos).copied().ok_or(Error::Parse {
            line: line_no,
            msg: format!("expected {rows} data rows"),
        })?;
        let vals: Vec<f64> = row
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: line_no,
                msg: format!("bad value: {e}"),
            })?;
        if vals.len() != cols {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected {cols} values, found {}", vals.len()),
            });
        }
        data.extend_from_slice(&vals);
        *pos += 1;
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

fn nonempty_lines(s: &str) -> Vec<(usize, &str)> {
    s.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect()
}

pub fn parse_matrix(s: &str) -> Result<DMatrix<f64>> {
    let lines = nonempty_lines(s);
    let mut pos = 0;
    let m = parse_one(&lines, &mut pos)?;
    if pos != lines.len() {
        return Err(Error::Parse {
            line: lines[pos].0,
            msg: "unexpected trailing content".into(),
        });
    }
    Ok(m)
}

/// Parse a concatenated sequence of matrices (e.g. a subspace basis list).
pub fn parse_matrices(s: &str) -> Result<Vec<DMatrix<f64>>> {
    let lines = nonempty_lines(s);
    let mut pos = 0;
    let mut out = Vec::new();
    while pos < lines.len() {
        out.push(parse_one(&lines, &mut pos)?);
    }
    if out.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "no matrices found".into(),
        });
    }
    Ok(out)
}

pub fn parse_signal(s: &str) -> Result<Signal> {
    let m = parse_matrix(s)?;
    if m.ncols() != 1 && m.nrows() != 1 {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected a vector, found {}x{}", m.nrows(), m.ncols()),
        });
    }
    Signal::from_slice(m.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;

    #[test]
    fn roundtrip_is_exact() {
        let mut rng = Rng::new(1);
        let m = rng.normal_matrix(4, 7);
        let parsed = parse_matrix(&format_matrix(&m)).unwrap();
        assert_eq!(m, parsed);
    }

    #[test]
    fn signal_roundtrip_and_row_vector() {
        let x = Signal::from_slice(&[1.5, -2.25, 1e-300]).unwrap();
        let parsed = parse_signal(&format_signal(&x)).unwrap();
        assert_eq!(x.as_slice(), parsed.as_slice());
        let row = parse_signal("1 3\n1 2 3\n").unwrap();
        assert_eq!(row.as_slice(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_matrix("2 2\n1 2\n3\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert!(parse_matrix("0 2\n").is_err());
        assert!(parse_matrix("2 2\n1 2\n3 4\n5 6\n").is_err());
    }

    #[test]
    fn matrix_sequence() {
        let text = format!(
            "{}{}",
            format_matrix(&nalgebra::DMatrix::identity(2, 2)),
            format_matrix(&nalgebra::DMatrix::zeros(1, 3))
        );
        let ms = parse_matrices(&text).unwrap();
        assert_eq!(ms.len(), 2);
        assert_eq!(ms[0].nrows(), 2);
        assert_eq!(ms[1].ncols(), 3);
    }

    proptest! {
        #[test]
        fn any_f64_roundtrips(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            let m = nalgebra::DMatrix::from_row_slice(1, 1, &[v]);
            let parsed = parse_matrix(&format_matrix(&m)).unwrap();
            prop_assert_eq!(parsed[(0, 0)].to_bits(), v.to_bits());
        }
    }
}
