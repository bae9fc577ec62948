//! Artifact writers and the protocol table reader.

use std::fs;
use std::path::{Path, PathBuf};

use gaussinv::corner::trap_center;
use gaussinv::invariant::Protocol;
use gaussinv::linalg::{Matrix, Vector};
use serde::Serialize;

use crate::CliError;

/// Seventeen significant digits: enough to round-trip any binary64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn entries(v: &Vector) -> Vec<f64> {
    v.iter().copied().collect()
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    write_text(path, &text)
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::io(path, source),
        other => CliError::Parse { path: path.to_path_buf(), message: format!("{other:?}") },
    }
}

/// Write `records` (header first) as CSV.
pub fn write_csv(path: &Path, records: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in records {
        w.write_record(&r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Column names of the protocol table for `d` dimensions.
pub fn protocol_header(d: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    if d == 1 {
        h.extend(["M", "F", "C", "L"].map(String::from));
        return h;
    }
    for i in 1..=d {
        for j in i..=d {
            h.push(format!("M{i}{j}"));
        }
    }
    for prefix in ["F", "C", "L"] {
        h.extend((1..=d).map(|i| format!("{prefix}{i}")));
    }
    h
}

/// One row of the protocol table.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRow {
    pub t: f64,
    pub curvature: Matrix,
    pub force: Vector,
    /// NaN where the curvature is singular.
    pub center: Vector,
    pub path: Vector,
}

pub fn protocol_rows(p: &Protocol) -> Vec<ProtocolRow> {
    let d = p.dim();
    p.points
        .iter()
        .map(|pt| ProtocolRow {
            t: pt.t,
            curvature: pt.curvature.clone(),
            force: pt.force.clone(),
            center: trap_center(&pt.curvature, &pt.force, p.mass).unwrap_or_else(|_| Vector::from_element(d, f64::NAN)),
            path: pt.path.l.clone(),
        })
        .collect()
}

fn row_record(r: &ProtocolRow) -> Vec<String> {
    let d = r.force.len();
    let mut out = vec![fmt_f64(r.t)];
    for i in 0..d {
        for j in i..d {
            out.push(fmt_f64(r.curvature[(i, j)]));
        }
    }
    for v in [&r.force, &r.center, &r.path] {
        out.extend(v.iter().map(|x| fmt_f64(*x)));
    }
    out
}

pub fn write_protocol_csv(path: &Path, rows: &[ProtocolRow]) -> Result<(), CliError> {
    let d = rows.first().map_or(1, |r| r.force.len());
    write_csv(path, std::iter::once(protocol_header(d)).chain(rows.iter().map(row_record)))
}

/// Read a table written by [`write_protocol_csv`].
pub fn read_protocol_csv(path: &Path) -> Result<Vec<ProtocolRow>, CliError> {
    let parse_err = |message: String| CliError::Parse { path: path.to_path_buf(), message };
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header: Vec<String> = r.headers().map_err(|e| csv_error(path, e))?.iter().map(String::from).collect();
    let d = (1..=16)
        .find(|&d| protocol_header(d) == header)
        .ok_or_else(|| parse_err("header is not a protocol table".into()))?;
    let mut out = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let vals = record
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| parse_err(format!("row {}: {e}", line + 1)))?;
        let mut it = vals.into_iter().skip(1);
        let mut curvature = Matrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let v = it.next().unwrap_or(f64::NAN);
                curvature[(i, j)] = v;
                curvature[(j, i)] = v;
            }
        }
        let mut take = || Vector::from_iterator(d, it.by_ref().take(d));
        let (force, center, path) = (take(), take(), take());
        out.push(ProtocolRow { t: record[0].parse().unwrap_or(f64::NAN), curvature, force, center, path });
    }
    Ok(out)
}

#[derive(Serialize)]
struct PointJson {
    t: f64,
    curvature: Vec<Vec<f64>>,
    force: Vec<f64>,
    center: Option<Vec<f64>>,
    l: Vec<f64>,
    l_dot: Vec<f64>,
    r: Vec<Vec<f64>>,
    r_dot: Vec<Vec<f64>>,
    j: Vec<Vec<f64>>,
    gamma: Vec<Vec<f64>>,
    w: Vec<f64>,
    theta: f64,
}

#[derive(Serialize)]
struct ProtocolJson {
    dim: usize,
    mass: f64,
    steps: usize,
    duration: f64,
    points: Vec<PointJson>,
}

pub fn write_protocol_json(path: &Path, p: &Protocol) -> Result<(), CliError> {
    let doc = ProtocolJson {
        dim: p.dim(),
        mass: p.mass,
        steps: p.grid.steps(),
        duration: p.grid.end() - p.grid.start(),
        points: p
            .points
            .iter()
            .map(|pt| PointJson {
                t: pt.t,
                curvature: rows(&pt.curvature),
                force: entries(&pt.force),
                center: trap_center(&pt.curvature, &pt.force, p.mass).ok().map(|c| entries(&c)),
                l: entries(&pt.path.l),
                l_dot: entries(&pt.path.l_dot),
                r: rows(&pt.shape.r),
                r_dot: rows(&pt.shape.r_dot),
                j: rows(&pt.j),
                gamma: rows(&pt.invariant.gamma),
                w: entries(&pt.invariant.w),
                theta: pt.invariant.theta,
            })
            .collect(),
    };
    write_json(path, &doc)
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    Ok(dir.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headers() {
        assert_eq!(protocol_header(1).join(","), "t,M,F,C,L");
        assert_eq!(protocol_header(2).join(","), "t,M11,M12,M22,F1,F2,C1,C2,L1,L2");
        assert_eq!(protocol_header(3).len(), 1 + 6 + 9);
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, std::f64::consts::PI * 1e-300, -2.5e300, f64::MIN_POSITIVE, 5e-324] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert!(fmt_f64(f64::NAN).parse::<f64>().unwrap().is_nan());
    }
}
