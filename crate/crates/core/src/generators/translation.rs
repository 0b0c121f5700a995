//! Solutions invariant under `∂u + ∂v`: `E = G = h²(s)`, `F = f0 h(s) - h²(s)`
//! with `s = v - u`.

use serde::{Deserialize, Serialize};

use crate::chart_metric::{Domain, FamilyTag, MetricField, MetricJet2};
use crate::error::{HexError, Result};
use crate::generators::profile::Profile;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranslationFamilySpec {
    pub h: Profile,
    pub f0: f64,
    /// `[u0, u1, v0, v1]`.
    pub domain: [f64; 4],
}

impl Default for TranslationFamilySpec {
    fn default() -> Self {
        Self {
            h: Profile::Trig { offset: 2.0, amp: 1.0, freq: 1.0, phase: 0.0 },
            f0: 5.0,
            domain: [-0.4, 0.4, 1.2, 2.0],
        }
    }
}

/// Whether `∂u + κ∂v`-invariant solutions can be non-constant.
pub fn classify_translation_kappa(kappa: f64) -> bool {
    [1.0, -0.5, -2.0].iter().any(|k| (kappa - k).abs() < 1e-12)
}

/// Closed-form Gaussian curvature from `h, h', h''` and `f0`.
pub fn translation_curvature<T: Real>(h: T, dh: T, ddh: T, f0: T) -> T {
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let a = f0 - two * h;
    ddh / (h * h * a) + (three * h - f0) * dh * dh / (h * h * h * a * a)
}

pub fn make_translation_family<T: Real>(spec: &TranslationFamilySpec) -> Result<MetricField<T>> {
    spec.h.validate()?;
    if !(spec.f0.is_finite() && spec.f0 != 0.0) {
        return Err(HexError::InvalidParameter("f0 must be a non-zero constant".into()));
    }
    let [u0, u1, v0, v1] = spec.domain.map(T::lit);
    if !(u0 < u1 && v0 < v1) {
        return Err(HexError::InvalidParameter("empty domain".into()));
    }
    let domain = Domain::new(u0, u1, v0, v1);
    let f0 = T::lit(spec.f0);
    let h = spec.h.clone();
    // positivity on the s-range covered by the domain
    let (s0, s1) = ((v0 - u1).as_f64(), (v1 - u0).as_f64());
    for k in 0..=400 {
        let s = T::lit(s0 + (s1 - s0) * k as f64 / 400.0);
        let [hv, _, _] = h.eval_real(s);
        let e = hv * hv;
        let f = f0 * hv - e;
        let det = e * e - f * f;
        if !(hv > T::zero() && det > T::zero()) {
            return Err(HexError::PositivityViolation { at: s.as_f64(), e: e.as_f64(), det: det.as_f64() });
        }
    }
    let name = format!("translation(f0={})", spec.f0);
    Ok(MetricField::new(name, FamilyTag::Translation, domain, move |u, v| {
        let (ju, jv) = crate::jet::Jet2::seed(u, v);
        let hs = h.eval(jv - ju);
        let e = hs * hs;
        Ok(MetricJet2::new(e, hs * f0 - e, e))
    }))
}
