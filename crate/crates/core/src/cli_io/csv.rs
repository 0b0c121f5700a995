//! CSV sample files.

use std::path::Path;

use crate::chart_metric::MetricField;
use crate::duality::{DualPoint, SlopeTriple};
use crate::error::{HexError, Result};
use crate::geodesic_flow::Trajectory;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn io(e: csv::Error) -> HexError {
    HexError::Io(e.to_string())
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// `u, v, E, F, G` on an `n x n` grid; points where the metric fails are skipped.
pub fn write_metric_samples(path: &Path, field: &MetricField, n: usize) -> Result<()> {
    let rows = field.domain.grid(n).into_iter().filter_map(|p| {
        let j = field.jet(p).ok()?;
        Some(vec![num(p.u), num(p.v), num(j.E()), num(j.F()), num(j.G())])
    });
    write_rows(path, &["u", "v", "E", "F", "G"], rows)
}

/// `z, y, P, Q, R` on an `n x n` grid.
pub fn write_slope_samples(path: &Path, t: &SlopeTriple, n: usize) -> Result<()> {
    let rows = t.domain.grid(n).into_iter().filter_map(|p| {
        let s = t.slopes(p.u, p.v).ok()?;
        Some(vec![num(p.u), num(p.v), num(s[0].re), num(s[1].re), num(s[2].re)])
    });
    write_rows(path, &["z", "y", "P", "Q", "R"], rows)
}

/// One row per vertex: foliation, leaf index, vertex index and chart point.
pub fn write_leaves(path: &Path, leaves: &[Vec<Vec<[f64; 2]>>; 3]) -> Result<()> {
    let mut rows = Vec::new();
    for (k, fol) in leaves.iter().enumerate() {
        for (l, line) in fol.iter().enumerate() {
            for (i, p) in line.iter().enumerate() {
                rows.push(vec![k.to_string(), l.to_string(), i.to_string(), num(p[0]), num(p[1])]);
            }
        }
    }
    write_rows(path, &["foliation", "leaf", "index", "u", "v"], rows)
}

pub fn write_trajectories(path: &Path, trajs: &[Trajectory]) -> Result<()> {
    let mut rows = Vec::new();
    for (k, tr) in trajs.iter().enumerate() {
        for (t, x) in tr.t.iter().zip(&tr.x) {
            rows.push(vec![k.to_string(), num(*t), num(x.u), num(x.v), num(x.p), num(x.q)]);
        }
    }
    write_rows(path, &["trajectory", "t", "u", "v", "p", "q"], rows)
}

/// Dual points of each foliation: `foliation, index, A, B, C, D`.
pub fn write_duals(path: &Path, duals: &[Vec<DualPoint>]) -> Result<()> {
    let mut rows = Vec::new();
    for (k, pts) in duals.iter().enumerate() {
        for (i, p) in pts.iter().enumerate() {
            rows.push(vec![k.to_string(), i.to_string(), num(p.a), num(p.b), num(p.c), num(p.d)]);
        }
    }
    write_rows(path, &["foliation", "index", "A", "B", "C", "D"], rows)
}
