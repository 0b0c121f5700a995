//! Constant-curvature baselines.
//!
//! The gnomonic sphere and the Beltrami–Klein disc map geodesics to straight
//! lines, so the coordinate web `u, v, u + v` is geodesic and the hydrodynamic system holds.
//! The polar sphere and the half-plane charts are the textbook ones.

use serde::{Deserialize, Serialize};

use crate::chart_metric::{Domain, FamilyTag, MetricField};
use crate::jet::Jet2;
use crate::scalar::{Real, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureKind {
    Flat,
    /// Gnomonic chart of the unit sphere (web-adapted).
    Sphere,
    /// Beltrami–Klein chart of the hyperbolic plane (web-adapted).
    Hyperbolic,
    /// Geodesic polar chart `du² + sin²u dv²`.
    SpherePolar,
    /// Upper half-plane `(du² + dv²)/v²`.
    HalfPlane,
}

impl CurvatureKind {
    pub fn curvature(self) -> f64 {
        match self {
            CurvatureKind::Flat => 0.0,
            CurvatureKind::Sphere | CurvatureKind::SpherePolar => 1.0,
            CurvatureKind::Hyperbolic | CurvatureKind::HalfPlane => -1.0,
        }
    }

    pub fn is_web_adapted(self) -> bool {
        matches!(self, CurvatureKind::Flat | CurvatureKind::Sphere | CurvatureKind::Hyperbolic)
    }
}

pub fn make_constant_curvature<T: Real>(kind: CurvatureKind) -> MetricField<T> {
    let l = |x: f64| T::lit(x);
    match kind {
        CurvatureKind::Flat => {
            MetricField::analytic("flat", FamilyTag::Flat, Domain::new(l(-1.0), l(1.0), l(-1.0), l(1.0)), |_, _| {
                [Jet2::constant(T::one()), Jet2::constant(T::zero()), Jet2::constant(T::one())]
            })
        }
        CurvatureKind::Sphere => MetricField::analytic(
            "sphere",
            FamilyTag::Custom,
            Domain::new(l(-0.5), l(0.5), l(-0.5), l(0.5)),
            |u: Jet2<T>, v: Jet2<T>| {
                let w = (u * u + v * v + T::one()).sq();
                [(v * v + T::one()) / w, -(u * v) / w, (u * u + T::one()) / w]
            },
        ),
        CurvatureKind::Hyperbolic => MetricField::analytic(
            "hyperbolic",
            FamilyTag::Custom,
            Domain::new(l(-0.4), l(0.4), l(-0.4), l(0.4)),
            |u: Jet2<T>, v: Jet2<T>| {
                let w = (-(u * u) - v * v + T::one()).sq();
                [(-(v * v) + T::one()) / w, (u * v) / w, (-(u * u) + T::one()) / w]
            },
        ),
        CurvatureKind::SpherePolar => MetricField::analytic(
            "sphere_polar",
            FamilyTag::Custom,
            Domain::new(l(0.3), l(std::f64::consts::PI - 0.3), l(-1.0), l(8.0)),
            |u: Jet2<T>, _| [Jet2::constant(T::one()), Jet2::constant(T::zero()), u.sin().sq()],
        ),
        CurvatureKind::HalfPlane => MetricField::analytic(
            "half_plane",
            FamilyTag::Custom,
            Domain::new(l(-1.0), l(1.0), l(0.5), l(2.0)),
            |_, v: Jet2<T>| {
                let w = (v * v).recip();
                [w, Jet2::constant(T::zero()), w]
            },
        ),
    }
}

pub fn flat<T: Real>() -> MetricField<T> {
    make_constant_curvature(CurvatureKind::Flat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart_metric::gaussian_curvature;
    use crate::hydro_system::hydro_residual;

    #[test]
    fn curvatures_are_constant() {
        for kind in [
            CurvatureKind::Flat,
            CurvatureKind::Sphere,
            CurvatureKind::Hyperbolic,
            CurvatureKind::SpherePolar,
            CurvatureKind::HalfPlane,
        ] {
            let f = make_constant_curvature::<f64>(kind);
            for p in f.domain.grid(7) {
                let j = f.jet(p).unwrap();
                let k = gaussian_curvature(&j).unwrap();
                assert!((k - kind.curvature()).abs() < 1e-10, "{kind:?} {k}");
                if kind.is_web_adapted() {
                    assert!(hydro_residual(&j).max_abs() < 1e-12, "{kind:?}");
                }
            }
        }
    }
}
