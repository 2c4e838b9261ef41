//! Matrix Market (dense `array` flavour) export of forward matrices, plus a
//! sidecar text file recording the trace ordering and the frame size.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use super::ForwardModel;
use crate::error::{Error, Result};

pub fn write_matrix_market(a: &DMatrix<f64>) -> String {
    let mut out = String::from("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(out, "{} {}", a.nrows(), a.ncols());
    // Column-major, as the format prescribes.
    for v in a.iter() {
        let _ = writeln!(out, "{v:e}");
    }
    out
}

pub fn read_matrix_market(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let h: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if h.len() < 5
        || h[0] != "%%matrixmarket"
        || h[1] != "matrix"
        || h[2] != "array"
        || h[3] != "real"
        || h[4] != "general"
    {
        return Err(Error::Parse {
            line: 1,
            msg: "expected `%%MatrixMarket matrix array real general`".into(),
        });
    }
    let mut lines = lines.filter(|(_, l)| !l.starts_with('%'));
    let (dim_line, dims) = lines.next().ok_or(Error::Parse {
        line: 2,
        msg: "missing size line".into(),
    })?;
    let dims: Vec<usize> = dims
        .split_whitespace()
        .map(|s| s.parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Parse {
            line: dim_line + 1,
            msg: "bad size line".into(),
        })?;
    let [m, n] = dims[..] else {
        return Err(Error::Parse {
            line: dim_line + 1,
            msg: "size line must hold two integers".into(),
        });
    };
    let mut values = Vec::with_capacity(m * n);
    for (i, l) in lines {
        values.push(l.trim().parse::<f64>().map_err(|_| Error::Parse {
            line: i + 1,
            msg: "bad matrix entry".into(),
        })?);
    }
    if values.len() != m * n {
        return Err(Error::Parse {
            line: 0,
            msg: format!("expected {} entries, found {}", m * n, values.len()),
        });
    }
    Ok(DMatrix::from_column_slice(m, n, &values))
}

pub fn write_sidecar(model: &ForwardModel) -> String {
    let mut out = format!("frame_size {}\ntrace_order", model.n());
    for t in &model.trace_order {
        let _ = write!(out, " {t}");
    }
    out.push_str("\nboundary_mass");
    for w in &model.boundary_mass {
        let _ = write!(out, " {w:e}");
    }
    out.push('\n');
    out
}

/// Returns `(frame_size, trace_order, boundary_mass)`.
pub fn read_sidecar(text: &str) -> Result<(usize, Vec<usize>, Vec<f64>)> {
    let mut frame = None;
    let mut order = None;
    let mut mass = None;
    for (i, line) in text.lines().enumerate() {
        let bad = || Error::Parse {
            line: i + 1,
            msg: "malformed sidecar record".into(),
        };
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("frame_size") => frame = Some(tok.next().ok_or_else(bad)?.parse().map_err(|_| bad())?),
            Some("trace_order") => {
                order = Some(
                    tok.map(str::parse)
                        .collect::<std::result::Result<Vec<usize>, _>>()
                        .map_err(|_| bad())?,
                )
            }
            Some("boundary_mass") => {
                mass = Some(
                    tok.map(str::parse)
                        .collect::<std::result::Result<Vec<f64>, _>>()
                        .map_err(|_| bad())?,
                )
            }
            None => {}
            Some(_) => return Err(bad()),
        }
    }
    let missing = |what: &str| Error::Parse {
        line: 0,
        msg: format!("sidecar lacks `{what}`"),
    };
    Ok((
        frame.ok_or_else(|| missing("frame_size"))?,
        order.ok_or_else(|| missing("trace_order"))?,
        mass.ok_or_else(|| missing("boundary_mass"))?,
    ))
}

impl ForwardModel {
    /// Writes `<stem>.mtx` and `<stem>.trace`.
    pub fn save(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let dir = dir.as_ref();
        let mtx = dir.join(format!("{stem}.mtx"));
        std::fs::write(&mtx, write_matrix_market(&self.a)).map_err(|e| Error::io(&mtx, e))?;
        let side = dir.join(format!("{stem}.trace"));
        std::fs::write(&side, write_sidecar(self)).map_err(|e| Error::io(&side, e))
    }
}

pub fn read_forward(matrix: &str, sidecar: &str) -> Result<ForwardModel> {
    let a = read_matrix_market(matrix)?;
    let (frame, trace_order, boundary_mass) = read_sidecar(sidecar)?;
    if frame != a.ncols() || trace_order.len() != a.nrows() || boundary_mass.len() != a.nrows() {
        return Err(Error::Dimension(format!(
            "sidecar ({frame} frame functions, {} trace rows) does not match a {}x{} matrix",
            trace_order.len(),
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(ForwardModel {
        a,
        trace_order,
        boundary_mass,
    })
}
