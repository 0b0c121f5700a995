//! Three-webs as triples of direction fields: extraction from cubic integrals,
//! Chern connection and Blaschke curvature, Thomsen hexagon closure, and leaf
//! geodesicity.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::chart_metric::{geodesic_slope_rhs, ChartPoint, Domain, MetricField};
use crate::cubic::{binary_roots, RootClass};
use crate::error::{HexError, Result};
use crate::geodesic_flow::CubicForm;
use crate::jet::Jet2;
use crate::linalg;
use crate::ode::{dopri5, IntegratorConfig, Stop};
use crate::scalar::Real;

/// Pairwise transversality threshold on `|sin|` of the angle between directions.
pub const TRANSVERSALITY_TOL: f64 = 1e-6;

/// Relative discriminant threshold for three distinct real roots.
pub const ROOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WebSource {
    FromIntegral,
    CoordinateWeb,
    DualDim3,
    DualDim2,
    Custom,
}

/// A tangent direction field `ξ ∂u + η ∂v` as jets in `(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Direction<T = f64> {
    pub xi: Jet2<T>,
    pub eta: Jet2<T>,
}

/// A slope `dv/du`, or vertical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Slope<T = f64> {
    Finite(T),
    Vertical,
}

impl<T: Real> Direction<T> {
    pub fn new(xi: Jet2<T>, eta: Jet2<T>) -> Self {
        Self { xi, eta }
    }

    pub fn from_slope(m: Jet2<T>) -> Self {
        Self::new(Jet2::constant(T::one()), m)
    }

    pub fn vertical() -> Self {
        Self::new(Jet2::constant(T::zero()), Jet2::constant(T::one()))
    }

    pub fn value(&self) -> [T; 2] {
        [self.xi.re, self.eta.re]
    }

    pub fn unit(&self) -> [T; 2] {
        let [a, b] = self.value();
        let n = (a * a + b * b).sqrt();
        [a / n, b / n]
    }

    pub fn slope(&self) -> Slope<T> {
        let [a, b] = self.value();
        if a.abs() <= T::lit(1e-14) * b.abs() {
            Slope::Vertical
        } else {
            Slope::Finite(b / a)
        }
    }
}

impl<T: Real> std::ops::Neg for Direction<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.xi, -self.eta)
    }
}

fn sin_between<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    let cross = a[0] * b[1] - a[1] * b[0];
    let n = ((a[0] * a[0] + a[1] * a[1]) * (b[0] * b[0] + b[1] * b[1])).sqrt();
    if n == T::zero() {
        T::zero()
    } else {
        cross.abs() / n
    }
}

pub type DirectionEvaluator<T> = dyn Fn(T, T) -> Result<[Direction<T>; 3]> + Send + Sync;

/// Three direction fields over a chart rectangle.
#[derive(Clone)]
pub struct Web3Field<T = f64> {
    eval: Arc<DirectionEvaluator<T>>,
    pub domain: Domain<T>,
    pub source: WebSource,
}

impl<T: Real> std::fmt::Debug for Web3Field<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Web3Field").field("domain", &self.domain).field("source", &self.source).finish()
    }
}

impl<T: Real> Web3Field<T> {
    pub fn new(
        domain: Domain<T>,
        source: WebSource,
        eval: impl Fn(T, T) -> Result<[Direction<T>; 3]> + Send + Sync + 'static,
    ) -> Self {
        Self { eval: Arc::new(eval), domain, source }
    }

    /// A web given by closed-form direction fields, differentiated with jets.
    pub fn analytic<F>(domain: Domain<T>, source: WebSource, f: F) -> Self
    where
        F: Fn(Jet2<T>, Jet2<T>) -> [Direction<T>; 3] + Send + Sync + 'static,
    {
        Self::new(domain, source, move |u, v| {
            let (ju, jv) = Jet2::seed(u, v);
            Ok(f(ju, jv))
        })
    }

    /// The web `u = const`, `v = const`, `u + v = const`.
    pub fn coordinate(domain: Domain<T>) -> Self {
        Self::analytic(domain, WebSource::CoordinateWeb, |_, _| {
            let one = Jet2::constant(T::one());
            [Direction::vertical(), Direction::from_slope(Jet2::constant(T::zero())), Direction::from_slope(-one)]
        })
    }

    /// Raw directions (no transversality check).
    pub fn directions_raw(&self, u: T, v: T) -> Result<[Direction<T>; 3]> {
        (self.eval)(u, v)
    }

    /// Directions at a point, failing with `NonTransversal`.
    pub fn directions(&self, p: ChartPoint<T>) -> Result<[Direction<T>; 3]> {
        let d = self.directions_raw(p.u, p.v)?;
        let vals = d.map(|x| x.value());
        let tol = T::lit(TRANSVERSALITY_TOL);
        for (a, b) in [(0, 1), (1, 2), (0, 2)] {
            if !(sin_between(vals[a], vals[b]) > tol) {
                return Err(HexError::NonTransversal { u: p.u.as_f64(), v: p.v.as_f64() });
            }
        }
        Ok(d)
    }

    pub fn slopes(&self, p: ChartPoint<T>) -> Result<[Slope<T>; 3]> {
        Ok(self.directions(p)?.map(|d| d.slope()))
    }

    /// The same web with the third direction rotated by the angle
    /// `c · ū · v̄`, where `ū, v̄` are the chart coordinates centred and scaled to
    /// the domain. A generic non-hexagonal control.
    pub fn perturbed(&self, c: T) -> Self {
        let inner = self.eval.clone();
        let dom = self.domain;
        let ctr = dom.center();
        Self::new(dom, WebSource::Custom, move |u, v| {
            let mut d = inner(u, v)?;
            let (ju, jv) = Jet2::seed(u, v);
            let phi = (ju - ctr.u) / dom.width() * ((jv - ctr.v) / dom.height()) * c;
            let (s, co) = (sin_jet(phi), cos_jet(phi));
            let [a, b] = [d[2].xi, d[2].eta];
            d[2] = Direction::new(a * co - b * s, a * s + b * co);
            Ok(d)
        })
    }

    /// Exchanges the labels of two foliations.
    pub fn relabeled(&self, perm: [usize; 3]) -> Self {
        let inner = self.eval.clone();
        Self::new(self.domain, self.source, move |u, v| {
            let d = inner(u, v)?;
            Ok([d[perm[0]], d[perm[1]], d[perm[2]]])
        })
    }
}

fn sin_jet<T: Real>(x: Jet2<T>) -> Jet2<T> {
    let (s, c) = x.re.sin_cos();
    x.chain(s, c, -s)
}

fn cos_jet<T: Real>(x: Jet2<T>) -> Jet2<T> {
    let (s, c) = x.re.sin_cos();
    x.chain(c, -s, -c)
}

fn angle_mod_pi<T: Real>(d: [T; 2]) -> T {
    let a = d[1].atan2(d[0]);
    if a < T::zero() {
        a + T::PI()
    } else if a >= T::PI() {
        a - T::PI()
    } else {
        a
    }
}

fn angle_gap<T: Real>(a: T, b: T) -> T {
    let d = (a - b).abs() % T::PI();
    d.min(T::PI() - d)
}

fn integral_directions<T: Real>(field: &MetricField<T>, i: &CubicForm<T>, u: T, v: T) -> Result<[Direction<T>; 3]> {
    let jet = field.jet_at(u, v)?;
    let k = i.coefficients(u, v)?;
    let roots = binary_roots(k, T::lit(ROOT_TOL)).map_err(|c| match c {
        RootClass::Repeated => HexError::RepeatedRoots { u: u.as_f64(), v: v.as_f64() },
        _ => HexError::ComplexRoots { u: u.as_f64(), v: v.as_f64() },
    })?;
    Ok(roots.map(|[p, q]| Direction::new(jet.g * p - jet.f * q, jet.e * q - jet.f * p)))
}

/// The web whose directions are the real roots of `I`, mapped to velocities.
///
/// Labels and orientations are fixed at the domain centre (sorted by slope
/// angle in `[0, π)`) and continued to other points by nearest angle.
pub fn web_from_cubic_integral<T: Real>(field: &MetricField<T>, i: &CubicForm<T>) -> Result<Web3Field<T>> {
    let c = field.domain.center();
    let mut refs = integral_directions(field, i, c.u, c.v)?.map(|d| d.unit());
    refs.sort_by(|a, b| angle_mod_pi(*a).partial_cmp(&angle_mod_pi(*b)).unwrap_or(std::cmp::Ordering::Equal));
    let ref_angles = refs.map(angle_mod_pi);
    let f = field.clone();
    let ii = i.clone();
    Ok(Web3Field::new(field.domain, WebSource::FromIntegral, move |u, v| {
        let d = integral_directions(&f, &ii, u, v)?;
        let ang = d.map(|x| angle_mod_pi(x.value()));
        // best of the six assignments
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut best = (T::infinity(), perms[0]);
        for p in perms {
            let cost = (0..3).fold(T::zero(), |a, l| a.max(angle_gap(ang[p[l]], ref_angles[l])));
            if cost < best.0 {
                best = (cost, p);
            }
        }
        let mut out = [Direction::default(); 3];
        for l in 0..3 {
            let x = d[best.1[l]];
            let w = x.value();
            out[l] = if w[0] * refs[l][0] + w[1] * refs[l][1] < T::zero() { -x } else { x };
        }
        Ok(out)
    }))
}

/// Connection form `Γ = Γu du + Γv dv` and Blaschke curvature `dΓ = K_B du∧dv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChernData<T = f64> {
    pub gamma_u: T,
    pub gamma_v: T,
    pub k_b: T,
}

/// Chern connection and Blaschke curvature at `p`.
///
/// With `ωi = ηi du - ξi dv` annihilating the i-th direction, the forms
/// `θi = λi ωi` are scaled so `θ1 + θ2 + θ3 = 0`; the connection is defined by
/// `dθi = Γ ∧ θi`. For the coordinate normalisation (`u`, `v` and
/// `L du + K dv`) this gives `Γ = (Ku/K) du + (Lv/L) dv`.
pub fn blaschke_curvature<T: Real>(web: &Web3Field<T>, p: ChartPoint<T>) -> Result<ChernData<T>> {
    let d = web.directions(p)?;
    let a = d.map(|x| x.eta);
    let b = d.map(|x| -x.xi);
    let lam = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    let ta: [Jet2<T>; 3] = std::array::from_fn(|i| lam[i] * a[i]);
    let tb: [Jet2<T>; 3] = std::array::from_fn(|i| lam[i] * b[i]);
    // dθi = (∂u bi - ∂v ai) du∧dv
    let c: [Jet2<T>; 3] = std::array::from_fn(|i| tb[i].diff_x() - ta[i].diff_y());
    // Γ∧θi = (Γu bi - Γv ai) du∧dv = ci; use the best-conditioned pair
    let pairs = [(0, 1), (1, 2), (0, 2)];
    let mut best = (T::zero(), 0, 1);
    for (i, j) in pairs {
        let det = (tb[i].re * (-ta[j].re) - (-ta[i].re) * tb[j].re).abs();
        if det > best.0 {
            best = (det, i, j);
        }
    }
    let (det_abs, i, j) = best;
    let scale = (0..3).fold(T::zero(), |s, k| s.max(ta[k].re.abs()).max(tb[k].re.abs()));
    if !(det_abs > T::lit(1e-12) * scale * scale) {
        return Err(HexError::NonTransversal { u: p.u.as_f64(), v: p.v.as_f64() });
    }
    // [bi -ai; bj -aj] [Γu; Γv] = [ci; cj]
    let det = tb[i] * (-ta[j]) - (-ta[i]) * tb[j];
    let gu = (c[i] * (-ta[j]) - (-ta[i]) * c[j]) / det;
    let gv = (tb[i] * c[j] - c[i] * tb[j]) / det;
    Ok(ChernData { gamma_u: gu.re, gamma_v: gv.re, k_b: gv.dx - gu.dy })
}

/// Max `|K_B|` over an `n x n` grid of `dom`.
pub fn max_blaschke<T: Real>(web: &Web3Field<T>, dom: &Domain<T>, n: usize) -> Result<T> {
    let vals: Result<Vec<T>> =
        dom.grid(n).par_iter().map(|p| blaschke_curvature(web, *p).map(|c| c.k_b.abs())).collect();
    Ok(vals?.into_iter().fold(T::zero(), |a, b| a.max(b)))
}

fn unit_field<T: Real>(web: &Web3Field<T>, k: usize, u: T, v: T) -> Option<[T; 2]> {
    if !web.domain.contains(u, v) {
        return None;
    }
    let d = web.directions_raw(u, v).ok()?;
    let w = d[k].unit();
    if w[0].is_finite() && w[1].is_finite() {
        Some(w)
    } else {
        None
    }
}

/// The leaf of foliation `k` (0-based) through `p`, at signed chart arclength `s`.
pub fn leaf_point<T: Real>(web: &Web3Field<T>, k: usize, p: [T; 2], s: T, cfg: &IntegratorConfig<T>) -> Result<[T; 2]> {
    if s == T::zero() {
        return Ok(p);
    }
    let sol = dopri5(|_, y: &[T; 2]| unit_field(web, k, y[0], y[1]), T::zero(), p, s, cfg)?;
    if sol.stop == Stop::Guard {
        let (t, y) = sol.last();
        return Err(HexError::DomainExit {
            t: t.as_f64(),
            partial: vec![[t.as_f64(), y[0].as_f64(), y[1].as_f64(), 0.0, 0.0]],
        });
    }
    Ok(sol.last().1)
}

/// Sampled leaf of foliation `k` through `p` over arclength `[-len, len]`,
/// truncated at the domain boundary.
pub fn trace_leaf<T: Real>(
    web: &Web3Field<T>,
    k: usize,
    p: ChartPoint<T>,
    len: T,
    cfg: &IntegratorConfig<T>,
) -> Result<Vec<ChartPoint<T>>> {
    let f = |_: T, y: &[T; 2]| unit_field(web, k, y[0], y[1]);
    let fwd = dopri5(f, T::zero(), [p.u, p.v], len, cfg)?;
    let bwd = dopri5(f, T::zero(), [p.u, p.v], -len, cfg)?;
    let mut out: Vec<ChartPoint<T>> = bwd.y.iter().skip(1).rev().map(|y| ChartPoint::new(y[0], y[1])).collect();
    out.extend(fwd.y.iter().map(|y| ChartPoint::new(y[0], y[1])));
    Ok(out)
}

/// Intersection of the leaf of foliation `a` through `p` with the leaf of
/// foliation `b` through `o`, by Newton iteration on the two arclengths.
fn intersect<T: Real>(
    web: &Web3Field<T>,
    a: usize,
    p: [T; 2],
    b: usize,
    o: [T; 2],
    cfg: &IntegratorConfig<T>,
) -> Result<[T; 2]> {
    let nt = |x: [T; 2]| HexError::NonTransversal { u: x[0].as_f64(), v: x[1].as_f64() };
    let da = unit_field(web, a, p[0], p[1]).ok_or_else(|| nt(p))?;
    let db = unit_field(web, b, o[0], o[1]).ok_or_else(|| nt(o))?;
    // p + σ da = o + τ db
    let rhs = [o[0] - p[0], o[1] - p[1]];
    let [mut s, mut t] = linalg::solve2([[da[0], -db[0]], [da[1], -db[1]]], rhs).ok_or_else(|| nt(p))?;
    let scale = (p[0].abs() + p[1].abs() + o[0].abs() + o[1].abs()).max(T::one());
    for _ in 0..40 {
        let x = leaf_point(web, a, p, s, cfg)?;
        let y = leaf_point(web, b, o, t, cfg)?;
        let res = [x[0] - y[0], x[1] - y[1]];
        if (res[0].abs() + res[1].abs()) < T::lit(1e-15) * scale {
            return Ok(x);
        }
        let ua = unit_field(web, a, x[0], x[1]).ok_or_else(|| nt(x))?;
        let ub = unit_field(web, b, y[0], y[1]).ok_or_else(|| nt(y))?;
        let step = linalg::solve2([[ua[0], -ub[0]], [ua[1], -ub[1]]], res).ok_or_else(|| nt(x))?;
        s = s - step[0];
        t = t - step[1];
        if step[0].abs() + step[1].abs() < T::epsilon() * T::lit(8.0) * (s.abs() + t.abs() + T::one()) {
            let x = leaf_point(web, a, p, s, cfg)?;
            return Ok(x);
        }
    }
    leaf_point(web, a, p, s, cfg)
}

/// The vertices `A1..A7` of the Thomsen hexagon at `p0` with side scale `eps`.
pub fn hexagon_vertices<T: Real>(
    web: &Web3Field<T>,
    p0: ChartPoint<T>,
    eps: T,
    cfg: &IntegratorConfig<T>,
) -> Result<Vec<[T; 2]>> {
    web.directions(p0)?;
    let o = [p0.u, p0.v];
    let mut pts = vec![leaf_point(web, 0, o, eps, cfg)?];
    // (leaf followed, leaf through o that is hit)
    let steps = [(1, 2), (0, 1), (2, 0), (1, 2), (0, 1), (2, 0)];
    for (a, b) in steps {
        let cur = *pts.last().expect("non-empty");
        pts.push(intersect(web, a, cur, b, o, cfg)?);
    }
    Ok(pts)
}

/// Metric distance between the first and last vertex of the Thomsen hexagon.
pub fn hexagon_closure_defect<T: Real>(
    field: &MetricField<T>,
    web: &Web3Field<T>,
    p0: ChartPoint<T>,
    eps: T,
    cfg: &IntegratorConfig<T>,
) -> Result<T> {
    let pts = hexagon_vertices(web, p0, eps, cfg)?;
    let (a, z) = (pts[0], pts[6]);
    let jet = field.jet_at(a[0], a[1])?;
    let (du, dv) = (z[0] - a[0], z[1] - a[1]);
    let two = T::lit(2.0);
    let q = jet.E() * du * du + two * jet.F() * du * dv + jet.G() * dv * dv;
    Ok(q.abs().sqrt())
}

/// Geodesic-equation residual of each foliation's leaves at `p`.
///
/// Along a leaf with slope `m = dv/du` the curvature of the leaf is
/// `m_u + m m_v`, compared with the geodesic right-hand side. Near-vertical
/// directions are handled in the swapped chart. Residuals are relative to
/// `1 + |rhs|`.
pub fn leaf_geodesic_residual<T: Real>(field: &MetricField<T>, web: &Web3Field<T>, p: ChartPoint<T>) -> Result<[T; 3]> {
    let d = web.directions(p)?;
    let jet = field.jet(p)?;
    let mut out = [T::zero(); 3];
    for (k, dir) in d.iter().enumerate() {
        let (num, den, j) = if dir.xi.re.abs() >= dir.eta.re.abs() {
            (dir.eta, dir.xi, jet)
        } else {
            (dir.xi.swap_xy(), dir.eta.swap_xy(), jet.swap())
        };
        let m = num / den;
        let lhs = m.dx + m.re * m.dy;
        let rhs = geodesic_slope_rhs(&j, m.re)?;
        out[k] = (lhs - rhs).abs() / (T::one() + rhs.abs());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::constant_curvature::{flat, make_constant_curvature, CurvatureKind};
    use crate::geodesic_flow::cubic_integral_from_solution;

    #[test]
    fn flat_coordinate_web() {
        let f = flat::<f64>();
        let w = Web3Field::coordinate(f.domain);
        let c = blaschke_curvature(&w, ChartPoint::new(0.1, 0.2)).unwrap();
        assert_eq!(c.k_b, 0.0);
        let d = hexagon_closure_defect(&f, &w, ChartPoint::new(0.0, 0.0), 0.1, &IntegratorConfig::default()).unwrap();
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn flat_integral_web_slopes() {
        let f = flat::<f64>();
        let i = cubic_integral_from_solution(&f).unwrap();
        let w = web_from_cubic_integral(&f, &i).unwrap();
        let s = w.slopes(ChartPoint::new(0.3, -0.2)).unwrap();
        assert_eq!(s[0], Slope::Finite(0.0));
        assert!(matches!(s[1], Slope::Vertical));
        assert!(matches!(s[2], Slope::Finite(m) if (m + 1.0).abs() < 1e-14));
    }

    #[test]
    fn one_real_root_is_complex() {
        let f = flat::<f64>();
        let i = CubicForm::constant(f.domain, [1.0, 0.0, 0.0, -1.0]);
        let w = web_from_cubic_integral(&f, &i);
        assert!(matches!(w, Err(HexError::ComplexRoots { .. })));
    }

    #[test]
    fn coordinate_normalisation() {
        // third foliation L du + K dv = 0 with L = e^v, K = 1 + u^2
        let dom = Domain::<f64>::new(-0.5, 0.5, -0.5, 0.5);
        let w = Web3Field::analytic(dom, WebSource::Custom, |u, v| {
            let l = crate::scalar::Scalar::exp(v);
            let k = u * u + 1.0;
            [Direction::vertical(), Direction::from_slope(Jet2::constant(0.0)), Direction::new(k, -l)]
        });
        let p = ChartPoint::new(0.2, 0.1);
        let c = blaschke_curvature(&w, p).unwrap();
        assert!((c.gamma_u - 2.0 * 0.2 / 1.04).abs() < 1e-12);
        assert!((c.gamma_v - 1.0).abs() < 1e-12);
        assert!(c.k_b.abs() < 1e-12);
    }

    #[test]
    fn sphere_web_is_hexagonal() {
        let f = make_constant_curvature::<f64>(CurvatureKind::Sphere);
        let i = cubic_integral_from_solution(&f).unwrap();
        let w = web_from_cubic_integral(&f, &i).unwrap();
        let kb = max_blaschke(&w, &f.domain.shrink(0.9), 5).unwrap();
        assert!(kb < 1e-9, "{kb}");
        let cfg = IntegratorConfig::default();
        let d = hexagon_closure_defect(&f, &w, f.domain.center(), 0.1, &cfg).unwrap();
        assert!(d < 1e-9, "{d}");
        let r = leaf_geodesic_residual(&f, &w, ChartPoint::new(0.1, -0.2)).unwrap();
        assert!(r.iter().all(|x| *x < 1e-9), "{r:?}");
        let bad = w.perturbed(0.5);
        assert!(max_blaschke(&bad, &f.domain.shrink(0.9), 5).unwrap() > 1e-4);
        assert!(hexagon_closure_defect(&f, &bad, f.domain.center(), 0.1, &cfg).unwrap() > 1e-4);
    }

    #[test]
    fn relabeling_keeps_curvature() {
        let f = make_constant_curvature::<f64>(CurvatureKind::Sphere);
        let w = web_from_cubic_integral(&f, &cubic_integral_from_solution(&f).unwrap()).unwrap().perturbed(0.5);
        let p = ChartPoint::new(0.1, 0.15);
        let a = blaschke_curvature(&w, p).unwrap().k_b;
        let b = blaschke_curvature(&w.relabeled([2, 0, 1]), p).unwrap().k_b;
        let c = blaschke_curvature(&w.relabeled([1, 0, 2]), p).unwrap().k_b;
        assert!((a - b).abs() < 1e-9 && (a - c).abs() < 1e-9, "{a} {b} {c}");
    }
}
