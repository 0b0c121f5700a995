//! Metrics in web-adapted coordinates `(u, v)`: second-order jets, Christoffel
//! symbols, Gaussian curvature and the slope form of the geodesic equation.
//!
//! On a web-adapted chart the foliations `u = const`, `v = const` and
//! `u + v = const` are geodesic. A [`MetricField`] is a deterministic evaluator
//! from chart points to [`MetricJet2`] over a rectangle.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{HexError, Result};
use crate::jet::Jet2;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ChartPoint<T = f64> {
    pub u: T,
    pub v: T,
}

impl<T: Real> ChartPoint<T> {
    pub fn new(u: T, v: T) -> Self {
        Self { u, v }
    }

    /// The third web function `w = -u - v`.
    pub fn w(&self) -> T {
        -self.u - self.v
    }
}

/// Axis-aligned chart rectangle `[u0, u1] x [v0, v1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Domain<T = f64> {
    pub u0: T,
    pub u1: T,
    pub v0: T,
    pub v1: T,
}

impl<T: Real> Domain<T> {
    pub fn new(u0: T, u1: T, v0: T, v1: T) -> Self {
        Self { u0, u1, v0, v1 }
    }

    pub fn contains(&self, u: T, v: T) -> bool {
        u >= self.u0 && u <= self.u1 && v >= self.v0 && v <= self.v1
    }

    pub fn center(&self) -> ChartPoint<T> {
        let h = T::lit(0.5);
        ChartPoint::new((self.u0 + self.u1) * h, (self.v0 + self.v1) * h)
    }

    pub fn width(&self) -> T {
        self.u1 - self.u0
    }

    pub fn height(&self) -> T {
        self.v1 - self.v0
    }

    /// Concentric sub-rectangle scaled by `frac`.
    pub fn shrink(&self, frac: T) -> Self {
        let c = self.center();
        let hw = self.width() * frac * T::lit(0.5);
        let hh = self.height() * frac * T::lit(0.5);
        Self::new(c.u - hw, c.u + hw, c.v - hh, c.v + hh)
    }

    /// `n x n` cell-centre grid, row-major in `v` then `u`.
    pub fn grid(&self, n: usize) -> Vec<ChartPoint<T>> {
        let nn = T::from_usize(n).unwrap();
        let mut out = Vec::with_capacity(n * n);
        for j in 0..n {
            let y = T::from_usize(j).unwrap() + T::lit(0.5);
            for i in 0..n {
                let x = T::from_usize(i).unwrap() + T::lit(0.5);
                out.push(ChartPoint::new(self.u0 + self.width() * x / nn, self.v0 + self.height() * y / nn));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    Flat,
    Translation,
    Spiral,
    Dilation,
    SimpleWave,
    DualDim3,
    DualDim2,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignatureMode {
    #[default]
    Riemannian,
    Pseudo,
}

/// Values and partial derivatives up to order two of `E`, `F`, `G` at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricJet2<T = f64> {
    pub e: Jet2<T>,
    pub f: Jet2<T>,
    pub g: Jet2<T>,
}

#[allow(non_snake_case)]
impl<T: Real> MetricJet2<T> {
    pub fn new(e: Jet2<T>, f: Jet2<T>, g: Jet2<T>) -> Self {
        Self { e, f, g }
    }

    /// A constant metric (all partials zero).
    pub fn constant(e: T, f: T, g: T) -> Self {
        Self::new(Jet2::constant(e), Jet2::constant(f), Jet2::constant(g))
    }

    pub fn E(&self) -> T {
        self.e.re
    }
    pub fn F(&self) -> T {
        self.f.re
    }
    pub fn G(&self) -> T {
        self.g.re
    }
    pub fn Eu(&self) -> T {
        self.e.dx
    }
    pub fn Ev(&self) -> T {
        self.e.dy
    }
    pub fn Fu(&self) -> T {
        self.f.dx
    }
    pub fn Fv(&self) -> T {
        self.f.dy
    }
    pub fn Gu(&self) -> T {
        self.g.dx
    }
    pub fn Gv(&self) -> T {
        self.g.dy
    }

    /// `EG - F^2`.
    pub fn det(&self) -> T {
        self.E() * self.G() - self.F() * self.F()
    }

    /// `EG - F^2` as a jet.
    pub fn det_jet(&self) -> Jet2<T> {
        self.e * self.g - self.f * self.f
    }

    pub fn scale(&self) -> T {
        self.E().abs().max(self.F().abs()).max(self.G().abs())
    }

    /// Exchanges the chart variables `u <-> v` (and hence `E <-> G`).
    pub fn swap(&self) -> Self {
        Self::new(self.g.swap_xy(), self.f.swap_xy(), self.e.swap_xy())
    }

    /// Fails with `DegenerateMetric` when `|EG - F^2| <= 1e-12 scale^2`.
    pub fn check_nondegenerate(&self, at: ChartPoint<T>) -> Result<T> {
        let d = self.det();
        let s = self.scale();
        if !(d.abs() > T::lit(1e-12) * s * s) || !d.is_finite() {
            return Err(HexError::DegenerateMetric { u: at.u.as_f64(), v: at.v.as_f64(), det: d.as_f64() });
        }
        Ok(d)
    }

    fn det_or_err(&self) -> Result<T> {
        self.check_nondegenerate(ChartPoint::new(T::nan(), T::nan()))
    }

    /// Signature check: Riemannian requires `E > 0` and `EG - F^2 > 0`.
    pub fn check_signature(&self, mode: SignatureMode, at: T) -> Result<()> {
        let d = self.det();
        let ok = match mode {
            SignatureMode::Riemannian => self.E() > T::zero() && d > T::zero(),
            SignatureMode::Pseudo => d != T::zero(),
        };
        if ok && d.is_finite() {
            Ok(())
        } else {
            Err(HexError::PositivityViolation { at: at.as_f64(), e: self.E().as_f64(), det: d.as_f64() })
        }
    }
}

pub type MetricEvaluator<T> = dyn Fn(T, T) -> Result<MetricJet2<T>> + Send + Sync;

/// An evaluator from chart points to metric jets over a rectangle.
#[derive(Clone)]
pub struct MetricField<T = f64> {
    eval: Arc<MetricEvaluator<T>>,
    pub domain: Domain<T>,
    pub family: FamilyTag,
    pub signature: SignatureMode,
    pub name: String,
}

impl<T: Real> fmt::Debug for MetricField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField")
            .field("name", &self.name)
            .field("family", &self.family)
            .field("domain", &self.domain)
            .field("signature", &self.signature)
            .finish()
    }
}

impl<T: Real> MetricField<T> {
    pub fn new(
        name: impl Into<String>,
        family: FamilyTag,
        domain: Domain<T>,
        eval: impl Fn(T, T) -> Result<MetricJet2<T>> + Send + Sync + 'static,
    ) -> Self {
        Self { eval: Arc::new(eval), domain, family, signature: SignatureMode::Riemannian, name: name.into() }
    }

    /// A field defined by a closed-form expression, differentiated with jets.
    pub fn analytic<F>(name: impl Into<String>, family: FamilyTag, domain: Domain<T>, formula: F) -> Self
    where
        F: Fn(Jet2<T>, Jet2<T>) -> [Jet2<T>; 3] + Send + Sync + 'static,
    {
        Self::new(name, family, domain, move |u, v| {
            let (ju, jv) = Jet2::seed(u, v);
            let [e, f, g] = formula(ju, jv);
            Ok(MetricJet2::new(e, f, g))
        })
    }

    pub fn with_signature(mut self, mode: SignatureMode) -> Self {
        self.signature = mode;
        self
    }

    pub fn jet(&self, p: ChartPoint<T>) -> Result<MetricJet2<T>> {
        (self.eval)(p.u, p.v)
    }

    pub fn jet_at(&self, u: T, v: T) -> Result<MetricJet2<T>> {
        (self.eval)(u, v)
    }

    /// Same metric in the chart with `u` and `v` exchanged.
    pub fn swapped(&self) -> Self {
        let inner = self.eval.clone();
        let d = self.domain;
        Self {
            eval: Arc::new(move |u, v| inner(v, u).map(|j| j.swap())),
            domain: Domain::new(d.v0, d.v1, d.u0, d.u1),
            family: self.family,
            signature: self.signature,
            name: format!("{} (swapped)", self.name),
        }
    }

    /// Checks the signature at every point of an `n x n` grid.
    pub fn check_grid(&self, n: usize) -> Result<()> {
        for p in self.domain.grid(n) {
            let j = self.jet(p)?;
            j.check_signature(self.signature, p.u).map_err(|e| match e {
                HexError::PositivityViolation { e, det, .. } => {
                    HexError::PositivityViolation { at: p.u.as_f64(), e, det }
                }
                other => other,
            })?;
        }
        Ok(())
    }
}

/// Levi-Civita symbols `Γ^i_{jk}`; `g122` is `Γ¹₂₂` and so on.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ChristoffelSymbols<T = f64> {
    pub g111: T,
    pub g112: T,
    pub g122: T,
    pub g211: T,
    pub g212: T,
    pub g222: T,
}

pub fn christoffel<T: Real>(jet: &MetricJet2<T>) -> Result<ChristoffelSymbols<T>> {
    let d = jet.det_or_err()?;
    let (e, f, g) = (jet.E(), jet.F(), jet.G());
    let (eu, ev, fu, fv, gu, gv) = (jet.Eu(), jet.Ev(), jet.Fu(), jet.Fv(), jet.Gu(), jet.Gv());
    let two = T::lit(2.0);
    let den = two * d;
    Ok(ChristoffelSymbols {
        g111: (g * eu - two * f * fu + f * ev) / den,
        g112: (g * ev - f * gu) / den,
        g122: (two * g * fv - g * gu - f * gv) / den,
        g211: (two * e * fu - e * ev - f * eu) / den,
        g212: (e * gu - f * ev) / den,
        g222: (e * gv - two * f * fv + f * gu) / den,
    })
}

/// Gaussian curvature by the Brioschi formula.
pub fn gaussian_curvature<T: Real>(jet: &MetricJet2<T>) -> Result<T> {
    let d = jet.det_or_err()?;
    let h = T::lit(0.5);
    let (e, f, g) = (jet.E(), jet.F(), jet.G());
    let (eu, ev, fu, fv, gu, gv) = (jet.Eu(), jet.Ev(), jet.Fu(), jet.Fv(), jet.Gu(), jet.Gv());
    let evv = jet.e.dyy;
    let fuv = jet.f.dxy;
    let guu = jet.g.dxx;
    let det3 = |m: [[T; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let m1 = [[-h * evv + fuv - h * guu, h * eu, fu - h * ev], [fv - h * gu, e, f], [h * gv, f, g]];
    let m2 = [[T::zero(), h * ev, h * gu], [h * ev, e, f], [h * gu, f, g]];
    Ok((det3(m1) - det3(m2)) / (d * d))
}

/// `d²v/du²` along a geodesic through the jet's point with slope `m = dv/du`.
pub fn geodesic_slope_rhs<T: Real>(jet: &MetricJet2<T>, m: T) -> Result<T> {
    let c = christoffel(jet)?;
    let two = T::lit(2.0);
    Ok(-c.g211 + (c.g111 - two * c.g212) * m - (c.g222 - two * c.g112) * m * m + c.g122 * m * m * m)
}

/// Relative size of the hydrodynamic residual, used to decide whether the reduced
/// geodesic coefficient is meaningful.
pub const WEB_ADAPTED_TOL: f64 = 1e-6;

/// `K(u, v)` with `d²v/du² = K m (1 + m)` on web-adapted charts.
pub fn reduced_geodesic_coefficient<T: Real>(jet: &MetricJet2<T>) -> Result<T> {
    let d = jet.det_or_err()?;
    let rel = crate::hydro_system::hydro_residual(jet).relative(jet);
    if rel > T::lit(WEB_ADAPTED_TOL) {
        return Err(HexError::NotWebAdapted { residual: rel.as_f64() });
    }
    let (e, f, g) = (jet.E(), jet.F(), jet.G());
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    Ok((g * jet.Eu() + three * f * jet.Ev() - two * f * jet.Fu() - two * e * jet.Gu()) / (two * d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Scalar;

    fn translation_jet(u: f64, v: f64) -> MetricJet2 {
        let (ju, jv) = Jet2::seed(u, v);
        let h = (jv - ju).sin() + 2.0;
        let e = h * h;
        MetricJet2::new(e, h * 5.0 - e, e)
    }

    fn sphere_jet(u: f64, v: f64) -> MetricJet2 {
        let (ju, _) = Jet2::seed(u, v);
        MetricJet2::new(Jet2::constant(1.0), Jet2::constant(0.0), ju.sin().sq())
    }

    #[test]
    fn flat_jet_has_no_symbols() {
        let j = MetricJet2::constant(1.0, 0.0, 1.0);
        assert_eq!(christoffel(&j).unwrap(), ChristoffelSymbols::default());
        assert_eq!(gaussian_curvature(&j).unwrap(), 0.0);
        assert_eq!(geodesic_slope_rhs(&j, 0.7).unwrap(), 0.0);
        assert_eq!(reduced_geodesic_coefficient(&j).unwrap(), 0.0);
    }

    #[test]
    fn christoffel_solves_the_linear_system() {
        let j = translation_jet(0.3, 1.7);
        let c = christoffel(&j).unwrap();
        // g * Γ^·_{11} = (Eu/2, Fu - Ev/2)
        let (e, f, g) = (j.E(), j.F(), j.G());
        let rhs = [0.5 * j.Eu(), j.Fu() - 0.5 * j.Ev()];
        let d = e * g - f * f;
        let g211 = (e * rhs[1] - f * rhs[0]) / d;
        let g111 = (g * rhs[0] - f * rhs[1]) / d;
        assert!((c.g211 - g211).abs() < 1e-12);
        assert!((c.g111 - g111).abs() < 1e-12);
    }

    #[test]
    fn sphere_curvature_is_one() {
        for u in [0.3, 1.0, 2.0] {
            let k = gaussian_curvature(&sphere_jet(u, 0.2)).unwrap();
            assert!((k - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_metric_rejected() {
        let j = MetricJet2::constant(1.0, 1.0, 1.0);
        assert!(matches!(christoffel(&j), Err(HexError::DegenerateMetric { .. })));
    }

    #[test]
    fn swap_exchanges_roles() {
        let j = translation_jet(0.1, 1.5);
        let s = j.swap();
        assert_eq!(s.E(), j.G());
        assert_eq!(s.Eu(), j.Gv());
        let c = christoffel(&j).unwrap();
        let cs = christoffel(&s).unwrap();
        assert!((c.g111 - cs.g222).abs() < 1e-12);
        assert!((c.g211 - cs.g122).abs() < 1e-12);
    }

    #[test]
    fn reduced_coefficient_matches_slope_rhs() {
        let j = translation_jet(0.0, 1.6);
        let k = reduced_geodesic_coefficient(&j).unwrap();
        let r1 = geodesic_slope_rhs(&j, 1.0).unwrap();
        assert!((r1 - 2.0 * k).abs() < 1e-10);
        assert!(geodesic_slope_rhs(&j, 0.0).unwrap().abs() < 1e-12);
        assert!(geodesic_slope_rhs(&j, -1.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn non_adapted_jet_is_refused() {
        let (ju, _) = Jet2::seed(0.2, 0.0);
        let j = MetricJet2::new(ju + 1.0, Jet2::constant(0.0), Jet2::constant(1.0));
        assert!(matches!(reduced_geodesic_coefficient(&j), Err(HexError::NotWebAdapted { .. })));
    }

    #[test]
    fn grid_is_cell_centred() {
        let d = Domain::new(0.0, 1.0, 0.0, 2.0);
        let g = d.grid(2);
        assert_eq!(g.len(), 4);
        assert_eq!(g[0], ChartPoint::new(0.25, 0.5));
        assert_eq!(g[3], ChartPoint::new(0.75, 1.5));
    }
}
