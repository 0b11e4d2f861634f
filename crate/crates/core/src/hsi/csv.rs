//! Plain-text formats for small tensors, matrices and residual traces.
//!
//! Tensor CSV: a `dims: I1,I2,...` line followed by `i,j,k,value` rows with
//! 1-based indices. Unlisted entries are zero. Values are written in
//! shortest round-trip exponent form, so reading back is exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, Matrix};

pub fn format_tensor(t: &DenseTensor) -> String {
    let dims: Vec<String> = t.dims().iter().map(usize::to_string).collect();
    let mut out = format!("dims: {}\n", dims.join(","));
    let mut idx = vec![0usize; t.order()];
    for &v in t.data() {
        for i in &idx {
            write!(out, "{},", i + 1).expect("write to string");
        }
        writeln!(out, "{v:e}").expect("write to string");
        for (i, &d) in idx.iter_mut().zip(t.dims()) {
            *i += 1;
            if *i < d {
                break;
            }
            *i = 0;
        }
    }
    out
}

pub fn parse_tensor(text: &str) -> Result<DenseTensor> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let first = lines
        .next()
        .ok_or_else(|| Error::Format("empty tensor file".into()))?;
    let dims_text = first
        .trim()
        .strip_prefix("dims:")
        .ok_or_else(|| Error::Format(format!("expected a 'dims:' line, got {first:?}")))?;
    let dims = dims_text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| Error::Format(format!("bad extent {s:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = DenseTensor::new(dims.clone(), vec![0.0; dims.iter().product()])
        .map_err(|e| Error::Format(e.to_string()))?;
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != dims.len() + 1 {
            return Err(Error::Format(format!(
                "row {}: expected {} fields, got {}",
                lineno + 2,
                dims.len() + 1,
                fields.len()
            )));
        }
        let index = fields[..dims.len()]
            .iter()
            .map(|f| match f.parse::<usize>() {
                Ok(i) if i >= 1 => Ok(i - 1),
                _ => Err(Error::Format(format!("row {}: bad index {f:?}", lineno + 2))),
            })
            .collect::<Result<Vec<_>>>()?;
        let value: f64 = fields[dims.len()]
            .parse()
            .map_err(|e| Error::Format(format!("row {}: bad value: {e}", lineno + 2)))?;
        t.set(&index, value)
            .map_err(|e| Error::Format(format!("row {}: {e}", lineno + 2)))?;
    }
    Ok(t)
}

pub fn read_tensor(path: &Path) -> Result<DenseTensor> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tensor(&text)
}

pub fn write_tensor(t: &DenseTensor, path: &Path) -> Result<()> {
    fs::write(path, format_tensor(t)).map_err(|e| Error::io(path, e))
}

/// One matrix row per line, comma separated.
pub fn format_matrix(m: &Matrix) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<Matrix> {
    let rows = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Format(format!("bad matrix entry {f:?}: {e}")))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Format("ragged matrix rows".into()));
    }
    Ok(Matrix::from_row_iterator(
        rows.len(),
        ncols,
        rows.into_iter().flatten(),
    ))
}

pub fn write_matrix(m: &Matrix, path: &Path) -> Result<()> {
    fs::write(path, format_matrix(m)).map_err(|e| Error::io(path, e))
}

/// `iteration,residual` header followed by one 1-based row per sweep.
pub fn format_trace(residuals: &[f64]) -> String {
    let mut out = String::from("iteration,residual\n");
    for (i, r) in residuals.iter().enumerate() {
        writeln!(out, "{},{r:e}", i + 1).expect("write to string");
    }
    out
}

pub fn parse_trace(text: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines();
    match lines.next() {
        Some("iteration,residual") => {}
        other => return Err(Error::Format(format!("bad trace header {other:?}"))),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let (it, res) = line
                .split_once(',')
                .ok_or_else(|| Error::Format(format!("bad trace row {line:?}")))?;
            if it.parse::<usize>().ok() != Some(i + 1) {
                return Err(Error::Format(format!("trace row {} has iteration {it:?}", i + 1)));
            }
            res.parse::<f64>()
                .map_err(|e| Error::Format(format!("bad residual {res:?}: {e}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tensor_csv_layout() {
        let t = DenseTensor::new(vec![2, 1, 2], vec![1.0, 2.0, 3.0, 4.5]).unwrap();
        let text = format_tensor(&t);
        assert_eq!(
            text,
            "dims: 2,1,2\n1,1,1,1e0\n2,1,1,2e0\n1,1,2,3e0\n2,1,2,4.5e0\n"
        );
    }

    #[test]
    fn sparse_tensor_csv() {
        let t = parse_tensor("dims: 2,2,2\n2,2,2,7.5\n").unwrap();
        assert_eq!(t.get(&[1, 1, 1]), Some(7.5));
        assert_eq!(t.frobenius_norm(), 7.5);
        assert!(parse_tensor("dims: 2,2\n3,1,1.0\n").is_err());
        assert!(parse_tensor("dims: 2,2\n0,1,1.0\n").is_err());
        assert!(parse_tensor("2,2\n").is_err());
    }

    #[test]
    fn trace_format() {
        let text = format_trace(&[3.0, 1.5]);
        assert_eq!(text, "iteration,residual\n1,3e0\n2,1.5e0\n");
        assert_eq!(parse_trace(&text).unwrap(), vec![3.0, 1.5]);
        assert!(parse_trace("it,res\n").is_err());
        assert!(parse_trace("iteration,residual\n2,1.0\n").is_err());
    }

    proptest! {
        #[test]
        fn tensor_csv_round_trip(dims in proptest::collection::vec(1usize..4, 1..4), seed in any::<u64>()) {
            let mut state = seed;
            let t = DenseTensor::from_fn(&dims, |_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                f64::from_bits(state >> 12 | 0x3FF0_0000_0000_0000) - 1.5
            });
            let back = parse_tensor(&format_tensor(&t)).unwrap();
            prop_assert_eq!(back, t);
        }

        #[test]
        fn matrix_csv_round_trip(rows in 1usize..5, cols in 1usize..5, scale in -1e6f64..1e6) {
            let m = Matrix::from_fn(rows, cols, |i, j| scale / (1.0 + i as f64 + 3.0 * j as f64));
            prop_assert_eq!(parse_matrix(&format_matrix(&m)).unwrap(), m);
        }
    }
}
