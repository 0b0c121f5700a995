//! Projective duality for metrics with a three-dimensional projective algebra,
//! and hexagonal webs for the two-dimensional case.
//!
//! In the chart `(z, y)` geodesics solve `z³ y'' = ε y'³` and are the conics
//! `A y² + 2B y + C + D z² = 0`; their duals `[A:B:C:D]` fill the quadric
//! `AC − B² + εD² = 0`. A web with slopes `P, Q, R = 0` is hexagonal exactly
//! when the duals of the `P`- and `Q`-leaves lie on one plane section.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart_metric::Domain;
use crate::error::{HexError, Result};
use crate::jet::Jet2;
use crate::scalar::{Real, Scalar};

fn check_eps<T: Real>(eps: f64) -> Result<T> {
    if eps == 1.0 || eps == -1.0 {
        Ok(T::lit(eps))
    } else {
        Err(HexError::InvalidParameter(format!("epsilon must be 1 or -1, got {eps}")))
    }
}

/// Homogeneous coordinates `[A:B:C:D]` of a geodesic conic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualPoint<T = f64> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Real> DualPoint<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Self { a, b, c, d }
    }

    pub fn as_array(&self) -> [T; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// Divides by the component of largest magnitude.
    pub fn normalized(&self) -> Self {
        let v = self.as_array();
        let m = v.iter().fold(T::zero(), |m, x| if x.abs() > m.abs() { *x } else { m });
        if m == T::zero() {
            return *self;
        }
        Self::new(v[0] / m, v[1] / m, v[2] / m, v[3] / m)
    }

    /// `AC − B² + εD²` of the normalized point.
    pub fn quadric_residual(&self, eps: T) -> T {
        let p = self.normalized();
        p.a * p.c - p.b * p.b + eps * p.d * p.d
    }

    /// Value of the conic at `(z, y)`.
    pub fn conic_at(&self, z: T, y: T) -> T {
        self.a * y * y + T::lit(2.0) * self.b * y + self.c + self.d * z * z
    }
}

/// A geodesic `k²(y − l)² − k z² = ε`, or the special solution `y = l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConicGeodesic {
    Regular { k: f64, l: f64 },
    Special { l: f64 },
}

pub fn geodesic_to_dual<T: Real>(g: ConicGeodesic, eps: f64) -> Result<DualPoint<T>> {
    let e = check_eps::<T>(eps)?;
    Ok(match g {
        ConicGeodesic::Regular { k, l } => {
            if k == 0.0 {
                return Err(HexError::InvalidParameter("k must be non-zero".into()));
            }
            let (k, l) = (T::lit(k), T::lit(l));
            DualPoint::new(k * k, -(k * k * l), k * k * l * l - e, -k)
        }
        ConicGeodesic::Special { l } => {
            let l = T::lit(l);
            DualPoint::new(T::one(), -l, l * l, T::zero())
        }
    }
    .normalized())
}

/// Dual of the geodesic through `(z, y)` with slope `dy/dz = p`, with `D = 1`
/// for `p ≠ 0`.
pub fn dual_of_slope<S: Scalar>(z: S, y: S, p: S, eps: S::Re) -> [S; 4] {
    let w = p.recip();
    let ez = z.recip() * z.recip() * eps;
    [
        -(w * w) + ez,
        -(z * w) + y * w * w - y * ez,
        -(z * z) + z * y * w * S::lit(2.0) - y * y * w * w + y * y * ez,
        S::lit(1.0),
    ]
}

/// The plane `aA + bB + cC + δD = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneSection {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub delta: f64,
}

impl PlaneSection {
    pub fn new(a: f64, b: f64, c: f64, delta: f64) -> Self {
        Self { a, b, c, delta }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.delta]
    }

    pub fn eval(&self, p: &DualPoint<f64>) -> f64 {
        self.a * p.a + self.b * p.b + self.c * p.c + self.delta * p.d
    }
}

impl Default for PlaneSection {
    fn default() -> Self {
        Self::new(1.0, 0.5, 0.2, 2.0)
    }
}

pub fn plane_group_action(pl: PlaneSection, t1: f64, t2: f64, t3: f64) -> PlaneSection {
    let PlaneSection { a, b, c, delta } = pl;
    let (a, b) = (a + t1 * b + t1 * t1 * c, b + 2.0 * t1 * c);
    let (a, c) = (t2.exp() * a, (-t2).exp() * c);
    let (b, c) = (b + 2.0 * t3 * a, c + t3 * b + t3 * t3 * a);
    PlaneSection { a, b, c, delta }
}

/// `[4ac − b² : δ²]`, scaled to unit Euclidean norm.
pub fn orbit_invariant(pl: PlaneSection) -> Result<[f64; 2]> {
    if pl.as_array().iter().all(|x| *x == 0.0) {
        return Err(HexError::InvalidParameter("zero plane".into()));
    }
    let m = [4.0 * pl.a * pl.c - pl.b * pl.b, pl.delta * pl.delta];
    let n = m[0].hypot(m[1]);
    if n == 0.0 {
        return Ok([0.0, 0.0]);
    }
    let s = if m[0] < 0.0 || (m[0] == 0.0 && m[1] < 0.0) { -1.0 } else { 1.0 };
    Ok([s * m[0] / n, s * m[1] / n])
}

/// `|μ1 ν2 − μ2 ν1|` for unit representatives.
pub fn projective_distance(m: [f64; 2], n: [f64; 2]) -> f64 {
    let nm = m[0].hypot(m[1]);
    let nn = n[0].hypot(n[1]);
    if nm == 0.0 || nn == 0.0 {
        return if nm == nn { 0.0 } else { 1.0 };
    }
    (m[0] * n[1] - m[1] * n[0]).abs() / (nm * nn)
}

/// Which geodesic equation the slopes belong to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regime {
    /// `z³ y'' = ε y'³`.
    Dim3,
    /// `z y'' = ρ y' + ε y'³`.
    Dim2 { rho: f64 },
}

pub type SlopeEvaluator<T> = dyn Fn(T, T) -> Result<[Jet2<T>; 3]> + Send + Sync;

/// Slopes `P, Q, R` of the fields `∂z + P ∂y` and so on over a `(z, y)` chart,
/// as jets with `x = z`.
#[derive(Clone)]
pub struct SlopeTriple<T = f64> {
    eval: Arc<SlopeEvaluator<T>>,
    pub domain: Domain<T>,
    pub eps: T,
    pub regime: Regime,
}

impl<T: Real> std::fmt::Debug for SlopeTriple<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SlopeTriple")
            .field("domain", &self.domain)
            .field("eps", &self.eps)
            .field("regime", &self.regime)
            .finish()
    }
}

/// Default working chart `z ∈ [1, 2]`, `y ∈ [0, 1]`.
pub fn default_chart<T: Real>() -> Domain<T> {
    Domain::new(T::one(), T::lit(2.0), T::zero(), T::one())
}

impl<T: Real> SlopeTriple<T> {
    pub fn new(
        domain: Domain<T>,
        eps: T,
        regime: Regime,
        eval: impl Fn(T, T) -> Result<[Jet2<T>; 3]> + Send + Sync + 'static,
    ) -> Self {
        Self { eval: Arc::new(eval), domain, eps, regime }
    }

    pub fn slopes(&self, z: T, y: T) -> Result<[Jet2<T>; 3]> {
        (self.eval)(z, y)
    }

    /// Replaces slope `i` by `f(z, y, slope)`.
    pub fn map_slope(
        &self,
        i: usize,
        f: impl Fn(Jet2<T>, Jet2<T>, Jet2<T>) -> Jet2<T> + Send + Sync + 'static,
    ) -> Self {
        let inner = self.eval.clone();
        Self {
            eval: Arc::new(move |z, y| {
                let mut s = inner(z, y)?;
                let (jz, jy) = Jet2::seed(z, y);
                s[i] = f(jz, jy, s[i]);
                Ok(s)
            }),
            domain: self.domain,
            eps: self.eps,
            regime: self.regime,
        }
    }

    /// Residuals of the geodesic PDE for each slope, relative to the size of
    /// its terms.
    pub fn pde_residuals(&self, z: T, y: T) -> Result<[T; 3]> {
        let s = self.slopes(z, y)?;
        let e = self.eps;
        Ok(s.map(|p| {
            let conv = p.dx + p.re * p.dy;
            let (lhs, rhs, scale) = match self.regime {
                Regime::Dim3 => {
                    let z3 = z * z * z;
                    (z3 * conv, e * p.re.powi(3), (z3 * p.dx).abs() + (z3 * p.re * p.dy).abs())
                }
                Regime::Dim2 { rho } => {
                    let r = T::lit(rho);
                    (z * conv, r * p.re + e * p.re.powi(3), (z * p.dx).abs() + (z * p.re * p.dy).abs())
                }
            };
            (lhs - rhs).abs() / (T::one() + scale + rhs.abs())
        }))
    }

    /// Residual of the vanishing-curvature constraint, relative to its terms.
    pub fn curvature_residual(&self, z: T, y: T) -> Result<T> {
        let s = self.slopes(z, y)?;
        let e = self.eps;
        let three = T::lit(3.0);
        let sum = |f: &dyn Fn(&Jet2<T>) -> T| s.iter().fold(T::zero(), |a, p| a + f(p));
        let t1 = sum(&|p| p.dyy);
        let ppy = sum(&|p| p.re * p.dy);
        let p1 = sum(&|p| p.re);
        let p3 = sum(&|p| p.re.powi(3));
        let terms = match self.regime {
            Regime::Dim3 => [t1, -(three * e / z.powi(3)) * ppy, -(three * e / z.powi(4)) * p1, p3 / z.powi(6)],
            Regime::Dim2 { rho } => {
                [t1, -(three * e / z) * ppy, p3 / (z * z), e * (T::lit(rho) - T::one()) * p1 / (z * z)]
            }
        };
        let total = terms.iter().fold(T::zero(), |a, t| a + *t);
        let scale = s.iter().fold(T::zero(), |a, p| a + p.dyy.abs()) + terms.iter().fold(T::zero(), |a, t| a + t.abs());
        Ok(total.abs() / (T::one() + scale))
    }

    /// Residuals of the total-differential system for `(P, Q, P_y)`, assuming
    /// `R = 0`.
    pub fn pfaff_residuals(&self, z: T, y: T) -> Result<[T; 6]> {
        let [p, q, _] = self.slopes(z, y)?;
        let e = self.eps;
        let (pp, qq, py) = (p.re, q.re, p.dy);
        let (z2, z3) = (z * z, z * z * z);
        let z6 = z3 * z3;
        let (two, three, four) = (T::lit(2.0), T::lit(3.0), T::lit(4.0));
        let k = (e * pp * pp - z2) * (e * pp * pp - z2);
        let want = [
            e * pp.powi(3) / z3 - pp * py,
            py,
            qq * qq * py / pp - qq * (e * pp * pp * qq + z2 * pp + z2 * qq) / (z3 * pp),
            (pp + qq) * (e * pp * qq + z2) / (z3 * pp) - qq * py / pp,
            py * py * (pp - three * qq) / (qq - pp)
                + (four * e * pp * pp * qq + z2 * pp + three * z2 * qq) * py / (z3 * (qq - pp))
                + (pp + qq) * k / (z6 * (pp - qq)),
            two * qq * py * py / (pp * (qq - pp))
                + (three * e * pp.powi(3) + e * pp * pp * qq + z2 * pp + three * z2 * qq) * py / (z3 * pp * (pp - qq))
                + (pp + qq) * k / (z6 * pp * (qq - pp)),
        ];
        let have = [p.dx, p.dy, q.dx, q.dy, p.dxy, p.dyy];
        Ok(std::array::from_fn(|i| (have[i] - want[i]).abs() / (T::one() + want[i].abs())))
    }

    /// Worst residuals over an `n × n` cell-centred grid.
    pub fn certify(&self, n: usize, with_pfaff: bool) -> Result<TripleReport> {
        let pts = self.domain.grid(n);
        let rows: Vec<Result<(f64, f64, f64)>> = pts
            .par_iter()
            .map(|p| {
                let pde = self.pde_residuals(p.u, p.v)?.iter().fold(T::zero(), |a, x| a.max(*x));
                let cur = self.curvature_residual(p.u, p.v)?;
                let pf = if with_pfaff {
                    self.pfaff_residuals(p.u, p.v)?.iter().fold(T::zero(), |a, x| a.max(*x))
                } else {
                    T::zero()
                };
                Ok((pde.as_f64(), cur.as_f64(), pf.as_f64()))
            })
            .collect();
        let mut r = TripleReport::default();
        for row in rows {
            let (a, b, c) = row?;
            r.pde = r.pde.max(a);
            r.curvature = r.curvature.max(b);
            r.pfaff = if with_pfaff { Some(r.pfaff.unwrap_or(0.0).max(c)) } else { None };
        }
        Ok(r)
    }

    /// Duals of the leaves of foliation `i` through `n` points on the
    /// diagonal of the chart.
    pub fn focal_curve(&self, i: usize, n: usize) -> Result<Vec<DualPoint<T>>> {
        let d = self.domain.shrink(T::lit(0.9));
        (0..n)
            .map(|k| {
                let t = T::lit((k as f64 + 0.5) / n as f64);
                let (z, y) = (d.u0 + (d.u1 - d.u0) * t, d.v0 + (d.v1 - d.v0) * t);
                let p = self.slopes(z, y)?[i].re;
                if p == T::zero() {
                    return Ok(DualPoint::new(T::one(), -y, y * y, T::zero()).normalized());
                }
                let [a, b, c, dd] = dual_of_slope(Jet2::constant(z), Jet2::constant(y), Jet2::constant(p), self.eps);
                Ok(DualPoint::new(a.re, b.re, c.re, dd.re).normalized())
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TripleReport {
    pub pde: f64,
    pub curvature: f64,
    pub pfaff: Option<f64>,
}

/// Roots `P` of `γP² + βP + α = 0`, the slopes at `(z, y)` of the geodesics
/// whose duals lie on `pl`.
fn plane_slopes<T: Real>(pl: &PlaneSection, eps: T, z: Jet2<T>, y: Jet2<T>) -> Result<[Jet2<T>; 2]> {
    let [a, b, c, d] = pl.as_array().map(T::lit);
    let q = Jet2::constant(a) - y * b + y * y * c;
    let al = -q;
    let be = -(z * (Jet2::constant(b) - y * (c + c)));
    let ga = q * eps / (z * z) - z * z * c + Jet2::constant(d);
    let disc = be * be - al * ga * T::lit(4.0);
    let scale = be.re * be.re + (al.re * ga.re).abs() * T::lit(4.0);
    let at = || (z.re.as_f64(), y.re.as_f64());
    if !(disc.re > T::lit(1e-12) * scale) || !(disc.re > T::zero()) {
        let (z, y) = at();
        return Err(if disc.re < T::zero() {
            HexError::NoRealIntersection { z, y }
        } else {
            HexError::SlopeAmbiguity { z, y }
        });
    }
    let sq = disc.sqrt();
    let (dp, dm) = (-be - sq, -be + sq);
    let tiny = T::lit(1e-10) * (be.re.abs() + sq.re.abs());
    if !(dp.re.abs() > tiny && dm.re.abs() > tiny) || al.re == T::zero() {
        let (z, y) = at();
        return Err(HexError::SlopeAmbiguity { z, y });
    }
    Ok([al * T::lit(2.0) / dp, al * T::lit(2.0) / dm])
}

/// The web whose `P`- and `Q`-leaves are dual to the section of the quadric by
/// `pl`, with `R = 0`.
pub fn web_from_planes<T: Real>(eps: f64, pl: PlaneSection) -> Result<SlopeTriple<T>> {
    web_from_planes_on(eps, pl, default_chart())
}

pub fn web_from_planes_on<T: Real>(eps: f64, pl: PlaneSection, domain: Domain<T>) -> Result<SlopeTriple<T>> {
    let e = check_eps::<T>(eps)?;
    if pl.delta == 0.0 {
        return Err(HexError::InvalidParameter("the plane must differ from D = 0 (delta != 0)".into()));
    }
    if !(domain.u0 > T::zero()) {
        return Err(HexError::InvalidParameter("the z-range must be positive".into()));
    }
    let triple = SlopeTriple::new(domain, e, Regime::Dim3, move |z, y| {
        let (jz, jy) = Jet2::seed(z, y);
        let [p, q] = plane_slopes(&pl, e, jz, jy)?;
        Ok([p, q, Jet2::constant(T::zero())])
    });
    check_labels(&triple)?;
    Ok(triple)
}

/// `P` from the section by `pl1`, `Q` from the section by `pl2`; not
/// hexagonal unless the planes agree.
pub fn web_from_two_planes<T: Real>(eps: f64, pl1: PlaneSection, pl2: PlaneSection) -> Result<SlopeTriple<T>> {
    let e = check_eps::<T>(eps)?;
    let triple = SlopeTriple::new(default_chart(), e, Regime::Dim3, move |z, y| {
        let (jz, jy) = Jet2::seed(z, y);
        let [p, _] = plane_slopes(&pl1, e, jz, jy)?;
        let [_, q] = plane_slopes(&pl2, e, jz, jy)?;
        Ok([p, q, Jet2::constant(T::zero())])
    });
    check_labels(&triple)?;
    Ok(triple)
}

/// Walks the grid and rejects labelings where `P` and `Q` swap order or meet.
fn check_labels<T: Real>(t: &SlopeTriple<T>) -> Result<()> {
    let mut sign = None;
    for p in t.domain.grid(12) {
        let [a, b, r] = t.slopes(p.u, p.v)?.map(|x| x.re);
        let gap = (a - b).abs().min((a - r).abs()).min((b - r).abs());
        let s = a > b;
        if !(gap > T::lit(1e-6)) || sign.is_some_and(|x| x != s) {
            return Err(HexError::SlopeAmbiguity { z: p.u.as_f64(), y: p.v.as_f64() });
        }
        sign = Some(s);
    }
    Ok(())
}

/// Least-squares plane through dual points: the right singular vector of the
/// smallest singular value, and the largest residual `|n · x|` over points
/// scaled to unit length.
pub fn best_fit_plane(points: &[DualPoint<f64>]) -> Result<(PlaneSection, f64)> {
    if points.len() < 4 {
        return Err(HexError::InvalidParameter("need at least four points".into()));
    }
    let rows: Vec<[f64; 4]> = points
        .iter()
        .map(|p| {
            let v = p.as_array();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.map(|x| x / n)
        })
        .collect();
    let m = DMatrix::from_fn(rows.len(), 4, |i, j| rows[i][j]);
    let svd = m.svd(false, true);
    let vt = svd.v_t.ok_or(HexError::LinearSolveSingular { value: 0.0 })?;
    let (k, _) =
        svd.singular_values.iter().enumerate().fold((0, f64::INFINITY), |b, (i, s)| if *s < b.1 { (i, *s) } else { b });
    let n = [vt[(k, 0)], vt[(k, 1)], vt[(k, 2)], vt[(k, 3)]];
    let res = rows.iter().map(|r| (r[0] * n[0] + r[1] * n[1] + r[2] * n[2] + r[3] * n[3]).abs()).fold(0.0, f64::max);
    Ok((PlaneSection::new(n[0], n[1], n[2], n[3]), res))
}

/// Residual of `pl` on points, each scaled to unit length, with `pl` of unit norm.
pub fn plane_residual(pl: &PlaneSection, points: &[DualPoint<f64>]) -> f64 {
    let n = pl.as_array().iter().map(|x| x * x).sum::<f64>().sqrt();
    points
        .iter()
        .map(|p| {
            let m = p.as_array().iter().map(|x| x * x).sum::<f64>().sqrt();
            (pl.eval(p) / (n * m)).abs()
        })
        .fold(0.0, f64::max)
}

/// Planarity of the `P`-focal curve and membership of the `Q`-duals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanarityReport {
    pub plane: PlaneSection,
    pub p_residual: f64,
    pub q_residual: f64,
}

pub fn planarity_check(t: &SlopeTriple<f64>, n: usize) -> Result<PlanarityReport> {
    let pts = t.slopes_grid_duals(0, n)?;
    let (plane, p_residual) = best_fit_plane(&pts)?;
    let q = t.slopes_grid_duals(1, n)?;
    Ok(PlanarityReport { plane, p_residual, q_residual: plane_residual(&plane, &q) })
}

impl SlopeTriple<f64> {
    /// Duals of the leaves of foliation `i` through every point of an
    /// `n × n` grid.
    pub fn slopes_grid_duals(&self, i: usize, n: usize) -> Result<Vec<DualPoint<f64>>> {
        self.domain
            .grid(n)
            .iter()
            .map(|p| {
                let s = self.slopes(p.u, p.v)?[i].re;
                let [a, b, c, d] = dual_of_slope(p.u, p.v, s, self.eps);
                Ok(DualPoint::new(a, b, c, d).normalized())
            })
            .collect()
    }
}

/// Parameters of the web with `P_y = 0`, `z P' = ρP + εP³`, `Q = −P`, `R = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dim2Spec {
    pub rho: f64,
    pub eps: f64,
    pub p0: f64,
    pub z0: f64,
    /// `[z0, z1, y0, y1]`.
    pub domain: [f64; 4],
}

impl Dim2Spec {
    pub fn new(rho: f64, eps: f64, p0: f64, z0: f64) -> Self {
        Self { rho, eps, p0, z0, domain: [1.0, 2.0, 0.0, 1.0] }
    }

    /// Whether `ρ + εP0² = 0`, i.e. the slopes are constant.
    pub fn is_constant(&self) -> bool {
        (self.rho + self.eps * self.p0 * self.p0).abs() <= 1e-14 * (1.0 + self.rho.abs())
    }
}

/// `1/P²` solves `z w' = −2ρw − 2ε`, so
/// `w = −ε/ρ + (w0 + ε/ρ)(z/z0)^{−2ρ}`, or `w = w0 − 2ε ln(z/z0)` when `ρ = 0`.
fn dim2_slope<T: Real>(spec: &Dim2Spec, z: Jet2<T>) -> Result<Jet2<T>> {
    let (rho, eps) = (T::lit(spec.rho), T::lit(spec.eps));
    let w0 = T::lit(1.0 / (spec.p0 * spec.p0));
    let x = z / T::lit(spec.z0);
    let w = if spec.is_constant() {
        Jet2::constant(w0)
    } else if spec.rho == 0.0 {
        Jet2::constant(w0) - x.ln() * (eps + eps)
    } else {
        let k = -(eps / rho);
        Scalar::powf(x, T::lit(-2.0) * rho) * (w0 - k) + Jet2::constant(k)
    };
    if !(w.re > T::zero()) {
        return Err(HexError::InvalidParameter(format!("slope blows up before z = {}", z.re.as_f64())));
    }
    Ok(Scalar::powf(w, T::lit(-0.5)) * T::lit(spec.p0.signum()))
}

pub fn dim2_web<T: Real>(spec: &Dim2Spec) -> Result<SlopeTriple<T>> {
    let e = check_eps::<T>(spec.eps)?;
    if spec.rho == 1.0 || spec.rho == -0.5 {
        return Err(HexError::ExcludedRho { rho: spec.rho });
    }
    if spec.p0 == 0.0 {
        return Err(HexError::ZeroInitialSlope);
    }
    let [z0, z1, y0, y1] = spec.domain;
    if !(z0 > 0.0 && z1 > z0 && y1 > y0 && spec.z0 > 0.0) {
        return Err(HexError::InvalidParameter("z-range must be positive and non-empty".into()));
    }
    let spec = *spec;
    let domain = Domain::new(T::lit(z0), T::lit(z1), T::lit(y0), T::lit(y1));
    for p in domain.grid(8) {
        dim2_slope(&spec, Jet2::constant(p.u))?;
    }
    Ok(SlopeTriple::new(domain, e, Regime::Dim2 { rho: spec.rho }, move |z, _y| {
        let (jz, _) = Jet2::seed(z, T::zero());
        let p = dim2_slope(&spec, jz)?;
        Ok([p, -p, Jet2::constant(T::zero())])
    }))
}

/// Largest projective distance between the invariant of `pl` and that of
/// `n` random images of it.
pub fn invariant_sweep(pl: PlaneSection, n: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = orbit_invariant(pl)?;
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let t: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let img = plane_group_action(pl, t[0], t[1], t[2]);
        worst = worst.max(projective_distance(m, orbit_invariant(img)?));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn special_and_regular_duals() {
        let d = geodesic_to_dual::<f64>(ConicGeodesic::Special { l: 2.0 }, 1.0).unwrap();
        assert_eq!(d.as_array(), [0.25, -0.5, 1.0, 0.0]);
        let d = geodesic_to_dual::<f64>(ConicGeodesic::Regular { k: 1.0, l: 0.0 }, 1.0).unwrap();
        assert_eq!(d.as_array(), [1.0, 0.0, -1.0, -1.0]);
        assert!(d.quadric_residual(1.0).abs() < 1e-15);
        assert!(d.conic_at(1.0, 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn plane_web_is_hexagonal() {
        for eps in [1.0, -1.0] {
            let t = web_from_planes::<f64>(eps, PlaneSection::default()).unwrap();
            let r = t.certify(10, true).unwrap();
            assert!(r.pde < 1e-12 && r.curvature < 1e-10 && r.pfaff.unwrap() < 1e-10, "{r:?}");
        }
    }

    #[test]
    fn two_planes_not_hexagonal() {
        let t =
            web_from_two_planes::<f64>(1.0, PlaneSection::default(), PlaneSection::new(1.0, -0.3, 0.4, 1.5)).unwrap();
        let r = t.certify(10, true).unwrap();
        assert!(r.pde < 1e-12 && r.curvature > 1e-3);
    }

    #[test]
    fn planarity_recovers_plane() {
        let pl = PlaneSection::default();
        let t = web_from_planes::<f64>(1.0, pl).unwrap();
        let r = planarity_check(&t, 6).unwrap();
        assert!(r.p_residual < 1e-12 && r.q_residual < 1e-12);
        let n = r.plane.as_array();
        let k = n[3] / pl.delta;
        for (x, y) in n.iter().zip(pl.as_array()) {
            assert!((x - k * y).abs() < 1e-10);
        }
    }

    #[test]
    fn group_action_and_invariant() {
        let pl = PlaneSection::new(0.3, -0.7, 1.1, 0.9);
        assert_eq!(plane_group_action(pl, 0.0, 0.0, 0.0), pl);
        assert!(invariant_sweep(pl, 100, 3).unwrap() < 1e-10);
        assert_eq!(orbit_invariant(PlaneSection::new(0.0, 0.0, 1.0, 1.0)).unwrap(), [0.0, 1.0]);
        let m = orbit_invariant(PlaneSection::new(1.0, 0.0, 1.0, 1.0)).unwrap();
        assert!(projective_distance(m, [4.0, 1.0]) < 1e-15);
    }

    #[test]
    fn dim2_constant_and_varying() {
        let t = dim2_web::<f64>(&Dim2Spec::new(-1.0, 1.0, 1.0, 1.0)).unwrap();
        let s = t.slopes(1.7, 0.2).unwrap();
        assert_eq!((s[0].re, s[1].re, s[0].dx), (1.0, -1.0, 0.0));
        let t = dim2_web::<f64>(&Dim2Spec::new(2.0, -1.0, 0.5, 1.0)).unwrap();
        let r = t.certify(10, false).unwrap();
        assert!(r.pde < 1e-12 && r.curvature < 1e-12);
        assert!((t.slopes(1.0, 0.0).unwrap()[0].re - 0.5).abs() < 1e-15);
        assert!((t.slopes(2.0, 0.0).unwrap()[0].re - 0.5).abs() > 1e-3);
        assert!(matches!(dim2_web::<f64>(&Dim2Spec::new(1.0, 1.0, 1.0, 1.0)), Err(HexError::ExcludedRho { .. })));
        assert!(matches!(dim2_web::<f64>(&Dim2Spec::new(2.0, 1.0, 0.0, 1.0)), Err(HexError::ZeroInitialSlope)));
    }
}
