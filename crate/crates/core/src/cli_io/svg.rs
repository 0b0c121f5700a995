//! Standalone SVG 1.1 documents for webs and dual scenes.

use std::fmt::Write;

use crate::chart_metric::Domain;
use crate::duality::{DualPoint, PlaneSection};

pub const FOLIATION_COLORS: [&str; 3] = ["#d62728", "#1f77b4", "#2ca02c"];

fn fmt(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

fn polyline(out: &mut String, pts: &[[f64; 2]]) {
    if pts.len() < 2 {
        return;
    }
    let coords: Vec<String> = pts.iter().map(|p| format!("{},{}", fmt(p[0]), fmt(p[1]))).collect();
    let _ = writeln!(out, "    <polyline points=\"{}\"/>", coords.join(" "));
}

fn header(out: &mut String, x0: f64, y0: f64, w: f64, h: f64) {
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"{} {} {} {}\" width=\"600\" height=\"{}\">",
        fmt(x0),
        fmt(y0),
        fmt(w),
        fmt(h),
        (600.0 * h / w).round().max(1.0)
    );
}

/// Leaves of the three foliations over the chart rectangle, one group per
/// foliation. Chart `v` points up.
pub fn emit_svg(leaves: &[Vec<Vec<[f64; 2]>>; 3], domain: &Domain) -> String {
    let mut out = String::new();
    header(&mut out, domain.u0, domain.v0, domain.width(), domain.height());
    let _ = writeln!(out, "  <g transform=\"matrix(1 0 0 -1 0 {})\">", fmt(domain.v0 + domain.v1));
    let _ = writeln!(
        out,
        "  <g id=\"axes\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1\" vector-effect=\"non-scaling-stroke\">"
    );
    let _ = writeln!(
        out,
        "    <rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" vector-effect=\"non-scaling-stroke\"/>",
        fmt(domain.u0),
        fmt(domain.v0),
        fmt(domain.width()),
        fmt(domain.height())
    );
    out.push_str("  </g>\n");
    for (k, fol) in leaves.iter().enumerate() {
        let _ = writeln!(
            out,
            "  <g id=\"foliation-{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1\">",
            k + 1,
            FOLIATION_COLORS[k]
        );
        for line in fol {
            polyline(&mut out, line);
        }
        out.push_str("  </g>\n");
    }
    out.push_str("  </g>\n</svg>\n");
    out.replace("<polyline ", "<polyline vector-effect=\"non-scaling-stroke\" ")
}

/// Dual-space picture in the affine chart `A = 1`, where the quadric reads
/// `C = B² − εD²`, drawn in an oblique projection.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DualScene {
    pub wireframe: Vec<Vec<[f64; 2]>>,
    pub focal: Vec<Vec<[f64; 2]>>,
    pub sections: Vec<Vec<[f64; 2]>>,
}

const SCENE_HALF: f64 = 2.0;

/// Layer id, stroke colour and polylines.
type Layer<'a> = (&'a str, &'a str, &'a Vec<Vec<[f64; 2]>>);

fn project(b: f64, c: f64, d: f64) -> [f64; 2] {
    [b + 0.45 * d, c + 0.3 * d]
}

fn affine(p: &DualPoint) -> Option<[f64; 3]> {
    let n = p.as_array().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(p.a.abs() > 1e-6 * n) {
        return None;
    }
    let (b, c, d) = (p.b / p.a, p.c / p.a, p.d / p.a);
    (b.abs() <= 4.0 * SCENE_HALF && d.abs() <= 4.0 * SCENE_HALF).then_some([b, c, d])
}

impl DualScene {
    /// Lines `B = const` and `D = const` on the quadric.
    pub fn with_quadric(mut self, eps: f64, lines: usize) -> Self {
        let m = 40;
        let h = SCENE_HALF;
        for i in 0..=lines {
            let t = -h + 2.0 * h * i as f64 / lines as f64;
            let along_d: Vec<[f64; 2]> = (0..=m)
                .map(|k| {
                    let d = -h + 2.0 * h * k as f64 / m as f64;
                    project(t, t * t - eps * d * d, d)
                })
                .collect();
            let along_b: Vec<[f64; 2]> = (0..=m)
                .map(|k| {
                    let b = -h + 2.0 * h * k as f64 / m as f64;
                    project(b, b * b - eps * t * t, t)
                })
                .collect();
            self.wireframe.push(along_d);
            self.wireframe.push(along_b);
        }
        self
    }

    /// The conic cut from the quadric by `pl`, as up to two branches.
    pub fn with_section(mut self, eps: f64, pl: &PlaneSection) -> Self {
        // a + bB + c(B² − εD²) + δD = 0, quadratic in D
        let m = 200;
        let h = 2.0 * SCENE_HALF;
        let mut branches: [Vec<Vec<[f64; 2]>>; 2] = [vec![Vec::new()], vec![Vec::new()]];
        for k in 0..=m {
            let b = -h + 2.0 * h * k as f64 / m as f64;
            let qa = -pl.c * eps;
            let qb = pl.delta;
            let qc = pl.a + pl.b * b + pl.c * b * b;
            let roots: Option<[f64; 2]> = if qa.abs() < 1e-14 {
                (qb != 0.0).then(|| [-qc / qb; 2])
            } else {
                let disc = qb * qb - 4.0 * qa * qc;
                (disc >= 0.0).then(|| {
                    let s = disc.sqrt();
                    [(-qb - s) / (2.0 * qa), (-qb + s) / (2.0 * qa)]
                })
            };
            for (i, br) in branches.iter_mut().enumerate() {
                match roots {
                    Some(r) if r[i].abs() <= h => {
                        let d = r[i];
                        br.last_mut().expect("open segment").push(project(b, b * b - eps * d * d, d));
                    }
                    _ => {
                        if !br.last().expect("open segment").is_empty() {
                            br.push(Vec::new());
                        }
                    }
                }
            }
        }
        for br in branches {
            self.sections.extend(br.into_iter().filter(|s| s.len() > 1));
        }
        self
    }

    pub fn with_focal(mut self, pts: &[DualPoint]) -> Self {
        let mut cur: Vec<[f64; 2]> = Vec::new();
        for p in pts {
            match affine(p) {
                Some([b, c, d]) => cur.push(project(b, c, d)),
                None => {
                    if cur.len() > 1 {
                        self.focal.push(std::mem::take(&mut cur));
                    }
                    cur.clear();
                }
            }
        }
        if cur.len() > 1 {
            self.focal.push(cur);
        }
        self
    }

    fn bounds(&self) -> [f64; 4] {
        let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for p in self.wireframe.iter().chain(&self.focal).chain(&self.sections).flatten() {
            b = [b[0].min(p[0]), b[1].max(p[0]), b[2].min(p[1]), b[3].max(p[1])];
        }
        if !b[0].is_finite() {
            return [-1.0, 1.0, -1.0, 1.0];
        }
        let pad = 0.05 * (b[1] - b[0]).max(b[3] - b[2]).max(1e-9);
        [b[0] - pad, b[1] + pad, b[2] - pad, b[3] + pad]
    }

    pub fn to_svg(&self) -> String {
        let [x0, x1, y0, y1] = self.bounds();
        let mut out = String::new();
        header(&mut out, x0, y0, x1 - x0, y1 - y0);
        let _ = writeln!(out, "  <g transform=\"matrix(1 0 0 -1 0 {})\">", fmt(y0 + y1));
        let layers: [Layer; 3] = [
            ("quadric", "#999999", &self.wireframe),
            ("sections", "#000000", &self.sections),
            ("focal-curves", "#d62728", &self.focal),
        ];
        for (id, color, lines) in layers {
            let _ = writeln!(out, "  <g id=\"{id}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1\">");
            for l in lines {
                polyline(&mut out, l);
            }
            out.push_str("  </g>\n");
        }
        out.push_str("  </g>\n</svg>\n");
        out.replace("<polyline ", "<polyline vector-effect=\"non-scaling-stroke\" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_leaves_give_axes_only() {
        let d = Domain::new(0.0, 2.0, -1.0, 1.0);
        let s = emit_svg(&[vec![], vec![], vec![]], &d);
        assert!(s.contains("viewBox=\"0.000000 -1.000000 2.000000 2.000000\""));
        assert!(s.contains("<rect"));
        assert!(!s.contains("<polyline"));
        assert_eq!(s.matches("<g id=\"foliation-").count(), 3);
    }

    #[test]
    fn section_of_quadric_is_drawn() {
        let scene = DualScene::default().with_quadric(1.0, 4).with_section(1.0, &PlaneSection::default());
        assert_eq!(scene.wireframe.len(), 10);
        assert!(!scene.sections.is_empty());
        let svg = scene.to_svg();
        assert!(svg.contains("id=\"sections\""));
    }
}
