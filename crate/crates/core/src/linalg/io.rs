//! Matrix CSV: row-major, no header, shortest round-trip decimal per entry.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::matrix::Matrix;
use crate::error::{Error, Result};

pub fn write_csv<W: Write>(m: &Matrix<f64>, mut out: W) -> Result<()> {
    out.write_all(to_csv_string(m).as_bytes())?;
    Ok(())
}

pub fn to_csv_string(m: &Matrix<f64>) -> String {
    let mut s = String::new();
    for row in m.row_iter() {
        for (j, x) in row.iter().enumerate() {
            if j > 0 {
                s.push(',');
            }
            // `Display` for f64 is the shortest representation that round-trips.
            write!(s, "{x}").expect("writing to String");
        }
        s.push('\n');
    }
    s
}

pub fn read_csv<R: BufRead>(input: R) -> Result<Matrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {tok:?}: {e}", lineno + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let m = Matrix::from_rows(&rows)?;
    m.ensure_finite()?;
    Ok(m)
}

pub fn read_csv_file(path: impl AsRef<std::path::Path>) -> Result<Matrix<f64>> {
    let f = std::fs::File::open(path)?;
    read_csv(std::io::BufReader::new(f))
}

pub fn write_csv_file(m: &Matrix<f64>, path: impl AsRef<std::path::Path>) -> Result<()> {
    std::fs::write(path, to_csv_string(m))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decimal_notation() {
        let m = Matrix::from_rows(&[vec![0.1, -2.0, 1e-7]]).unwrap();
        assert_eq!(to_csv_string(&m), "0.1,-2,0.0000001\n");
    }

    #[test]
    fn rejects_ragged_and_garbage() {
        assert!(read_csv("1,2\n3\n".as_bytes()).is_err());
        assert!(read_csv("1,x\n".as_bytes()).is_err());
        assert!(matches!(read_csv("1,NaN\n".as_bytes()), Err(Error::NonFinite)));
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(vals in prop::collection::vec(-1e300f64..1e300, 1..40), cols in 1usize..5) {
            let rows = vals.len() / cols;
            prop_assume!(rows > 0);
            let m = Matrix::from_vec(rows, cols, vals[..rows * cols].to_vec()).unwrap();
            let back = read_csv(to_csv_string(&m).as_bytes()).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
