//! Immersion of `e^u (h du² + 2f du dv + g dv²)` as a spiral surface
//! `x = e^θ r cos αθ`, `y = e^θ r sin αθ`, `z = e^θ W(r)`, pulled back through
//! `u = 2θ + U(r)`, `v = V(r)`.
//!
//! Matching the two metrics gives
//!
//! * `4 e^U h = (1 + α²) r² + W²`,
//! * `2 e^U (h U' + f V') = r + W W'`,
//! * `e^U (h U'² + 2 f U' V' + g V'²) = 1 + W'²`,
//!
//! with `h, f, g` evaluated at `V`. The first two give `V'` and `W`; the third
//! is a quadratic in `U'` with discriminant `D`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chart_metric::MetricField;
use crate::error::{HexError, Result};
use crate::ode::{dopri5, DenseTable, IntegratorConfig, Stop};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LieSpiralSpec {
    pub alpha: f64,
    /// `[r0, r1]`; integration starts at `r0`.
    pub r_interval: [f64; 2],
    /// `V(r0)`; defaults to the middle of the field's `v`-range.
    #[serde(default)]
    pub v0: Option<f64>,
    /// `U(r0)`; searched for when absent.
    #[serde(default)]
    pub u0: Option<f64>,
    /// Sign of the square root taken for `U'`.
    #[serde(default = "default_branch")]
    pub branch: i8,
}

fn default_branch() -> i8 {
    1
}

impl Default for LieSpiralSpec {
    fn default() -> Self {
        Self { alpha: 2.0, r_interval: [1.0, 1.2], v0: None, u0: None, branch: 1 }
    }
}

/// `h, f, g` and `h'` of an `e^u`-invariant metric along `v`.
#[derive(Clone)]
struct Coeffs<T> {
    field: MetricField<T>,
    u_ref: T,
}

impl<T: Real> Coeffs<T> {
    fn at(&self, v: T) -> Result<[T; 4]> {
        let d = self.field.domain;
        if !(v >= d.v0 && v <= d.v1) {
            return Err(HexError::IntervalExhausted { r: v.as_f64() });
        }
        let j = self.field.jet_at(self.u_ref, v)?;
        let s = (-self.u_ref).exp();
        Ok([j.E() * s, j.F() * s, j.G() * s, j.Ev() * s])
    }
}

/// Quantities derived at one `(r, U, V)`.
#[derive(Debug, Clone, Copy)]
struct Local<T> {
    w: T,
    du: T,
    dv: T,
    dw: T,
    disc: T,
}

#[derive(Debug)]
enum Fail<T> {
    Disc(T),
    Width,
    Other(HexError),
}

fn local<T: Real>(c: &Coeffs<T>, alpha: T, branch: T, r: T, uu: T, vv: T) -> std::result::Result<Local<T>, Fail<T>> {
    let [h, f, g, hv] = c.at(vv).map_err(Fail::Other)?;
    let one = T::one();
    let two = T::lit(2.0);
    let eu = uu.exp();
    let w2 = T::lit(4.0) * eu * h - (one + alpha * alpha) * r * r;
    if !(w2 > T::zero()) {
        return Err(Fail::Width);
    }
    let w = w2.sqrt();
    let denom = two * eu * (hv - f);
    if !(denom.abs() > T::lit(1e-12)) {
        return Err(Fail::Other(HexError::LinearSolveSingular { value: denom.as_f64() }));
    }
    let dv = alpha * alpha * r / denom;
    let a = two * eu * h;
    let b = two * eu * f * dv - r;
    let qa = eu * h - a * a / w2;
    let qb = two * eu * f * dv - two * a * b / w2;
    let qc = eu * g * dv * dv - one - b * b / w2;
    let disc = qb * qb - T::lit(4.0) * qa * qc;
    if !(disc >= T::zero()) {
        return Err(Fail::Disc(disc));
    }
    if !(qa.abs() > T::lit(1e-14)) {
        return Err(Fail::Other(HexError::LinearSolveSingular { value: qa.as_f64() }));
    }
    let du = (-qb + branch * disc.sqrt()) / (two * qa);
    let dw = (a * du + b) / w;
    Ok(Local { w, du, dv, dw, disc })
}

/// Numeric profiles `U, V, W` of the immersion.
#[derive(Clone)]
pub struct LieSpiralImmersion<T = f64> {
    pub alpha: T,
    pub r_range: (T, T),
    pub min_discriminant: T,
    branch: T,
    coeffs: Coeffs<T>,
    table: DenseTable<T, 2>,
}

impl<T: Real> std::fmt::Debug for LieSpiralImmersion<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LieSpiralImmersion")
            .field("alpha", &self.alpha)
            .field("r_range", &self.r_range)
            .field("min_discriminant", &self.min_discriminant)
            .finish()
    }
}

fn check_invariance<T: Real>(field: &MetricField<T>) -> Result<T> {
    let d = field.domain;
    let c = d.center();
    let du = d.width() * T::lit(0.3);
    for v in [c.v - d.height() * T::lit(0.3), c.v, c.v + d.height() * T::lit(0.3)] {
        let a = field.jet_at(c.u, v)?;
        let b = field.jet_at(c.u + du, v)?;
        let s = (-du).exp();
        let scale = a.scale();
        let diff = (b.E() * s - a.E()).abs().max((b.F() * s - a.F()).abs()).max((b.G() * s - a.G()).abs());
        if !(diff < T::lit(1e-9) * scale) {
            return Err(HexError::InvalidParameter("metric is not of the form e^u (h, f, g)(v)".into()));
        }
    }
    Ok(c.u)
}

pub fn immerse_lie_spiral<T: Real>(field: &MetricField<T>, spec: &LieSpiralSpec) -> Result<LieSpiralImmersion<T>> {
    let u_ref = check_invariance(field)?;
    let coeffs = Coeffs { field: field.clone(), u_ref };
    let alpha = T::lit(spec.alpha);
    let branch = if spec.branch < 0 { -T::one() } else { T::one() };
    let [r0, r1] = spec.r_interval.map(T::lit);
    if !(r0 > T::zero() && r1 > r0) {
        return Err(HexError::InvalidParameter("r_interval must satisfy 0 < r0 < r1".into()));
    }
    let v0 = spec.v0.map(T::lit).unwrap_or_else(|| field.domain.center().v);
    let candidates = match spec.u0 {
        Some(u) => vec![T::lit(u)],
        None => seed_candidates(&coeffs, alpha, branch, r0, v0)?,
    };
    let mut last = HexError::NegativeDiscriminant { r: r0.as_f64(), d: f64::NEG_INFINITY };
    for u0 in candidates {
        match integrate(&coeffs, alpha, branch, r0, r1, u0, v0) {
            Ok(table) => {
                let min_d = table.1;
                return Ok(LieSpiralImmersion {
                    alpha,
                    r_range: (r0, r1),
                    min_discriminant: min_d,
                    branch,
                    coeffs,
                    table: table.0,
                });
            }
            Err(e) => last = e,
        }
    }
    Err(last)
}

fn integrate<T: Real>(c: &Coeffs<T>, alpha: T, branch: T, r0: T, r1: T, u0: T, v0: T) -> Result<(DenseTable<T, 2>, T)> {
    match local(c, alpha, branch, r0, u0, v0) {
        Ok(_) => {}
        Err(Fail::Disc(d)) => return Err(HexError::NegativeDiscriminant { r: r0.as_f64(), d: d.as_f64() }),
        Err(Fail::Width) => return Err(HexError::IntervalExhausted { r: r0.as_f64() }),
        Err(Fail::Other(e)) => return Err(e),
    }
    let rhs = |r: T, y: &[T; 2]| local(c, alpha, branch, r, y[0], y[1]).ok().map(|l| [l.du, l.dv]);
    let cfg = IntegratorConfig {
        rel_tol: T::lit(1e-12),
        abs_tol: T::lit(1e-14),
        max_step: (r1 - r0) * T::lit(0.01),
        initial_step: (r1 - r0) * T::lit(1e-4),
        max_steps: 1_000_000,
    };
    let sol = dopri5(rhs, r0, [u0, v0], r1, &cfg)?;
    if sol.stop == Stop::Guard {
        let (r, y) = sol.last();
        return Err(match local(c, alpha, branch, r, y[0], y[1]) {
            Err(Fail::Disc(d)) => HexError::NegativeDiscriminant { r: r.as_f64(), d: d.as_f64() },
            _ => HexError::IntervalExhausted { r: r.as_f64() },
        });
    }
    let mut min_d = T::infinity();
    for (r, y) in sol.t.iter().zip(&sol.y) {
        if let Ok(l) = local(c, alpha, branch, *r, y[0], y[1]) {
            min_d = min_d.min(l.disc);
        }
    }
    Ok((DenseTable::from_branches(None, &sol), min_d))
}

/// Values of `U(r0)` with a positive discriminant, scanned upward from the
/// edge `W(r0) = 0`.
fn seed_candidates<T: Real>(c: &Coeffs<T>, alpha: T, branch: T, r0: T, v0: T) -> Result<Vec<T>> {
    let [h, ..] = c.at(v0)?;
    if !(h > T::zero()) {
        return Err(HexError::PositivityViolation { at: v0.as_f64(), e: h.as_f64(), det: 0.0 });
    }
    let edge = ((T::one() + alpha * alpha) * r0 * r0 / (T::lit(4.0) * h)).ln();
    let mut worst = T::neg_infinity();
    let mut out = vec![];
    for k in 1..=400 {
        let u = edge + T::lit(0.02 * k as f64);
        match local(c, alpha, branch, r0, u, v0) {
            Ok(_) => out.push(u),
            Err(Fail::Disc(d)) => worst = worst.max(d),
            Err(_) => {}
        }
    }
    if out.is_empty() {
        return Err(HexError::NegativeDiscriminant { r: r0.as_f64(), d: worst.as_f64() });
    }
    Ok(out)
}

impl<T: Real> LieSpiralImmersion<T> {
    fn local(&self, r: T) -> Result<Local<T>> {
        let [u, v] = self.table.eval(r);
        local(&self.coeffs, self.alpha, self.branch, r, u, v).map_err(|e| match e {
            Fail::Disc(d) => HexError::NegativeDiscriminant { r: r.as_f64(), d: d.as_f64() },
            Fail::Width => HexError::IntervalExhausted { r: r.as_f64() },
            Fail::Other(e) => e,
        })
    }

    /// `[U, V, W]` at `r`.
    pub fn profiles(&self, r: T) -> Result<[T; 3]> {
        let [u, v] = self.table.eval(r);
        Ok([u, v, self.local(r)?.w])
    }

    /// `[U', V', W']` at `r`.
    pub fn derivatives(&self, r: T) -> Result<[T; 3]> {
        let l = self.local(r)?;
        Ok([l.du, l.dv, l.dw])
    }

    /// Point of the surface.
    pub fn point(&self, theta: T, r: T) -> Result<[T; 3]> {
        let w = self.profiles(r)?[2];
        let e = theta.exp();
        let a = self.alpha * theta;
        Ok([e * r * a.cos(), e * r * a.sin(), e * w])
    }

    /// Relative residuals of the three matching equations at `r`.
    pub fn equation_residuals(&self, r: T) -> Result<[T; 3]> {
        let [uu, vv, w] = self.profiles(r)?;
        let [du, dv, dw] = self.derivatives(r)?;
        let [h, f, g, _] = self.coeffs.at(vv)?;
        let eu = uu.exp();
        let one = T::one();
        let two = T::lit(2.0);
        let rel = |a: T, b: T| (a - b).abs() / (a.abs().max(b.abs()).max(T::lit(1e-300)));
        Ok([
            rel(T::lit(4.0) * eu * h, (one + self.alpha * self.alpha) * r * r + w * w),
            rel(two * eu * (h * du + f * dv), r + w * dw),
            rel(eu * (h * du * du + two * f * du * dv + g * dv * dv), one + dw * dw),
        ])
    }

    /// Induced metric `(E, F, G)` in `(θ, r)` from central differences of the
    /// embedding.
    pub fn induced_metric(&self, theta: T, r: T) -> Result<[T; 3]> {
        let h = T::lit(1e-5) * (self.r_range.1 - self.r_range.0).max(T::lit(1e-3));
        let (lo, hi) = self.r_range;
        let (ra, rb) = ((r - h).max(lo), (r + h).min(hi));
        let p = |t: T, s: T| self.point(t, s);
        let (ta, tb) = (p(theta + h, r)?, p(theta - h, r)?);
        let (sa, sb) = (p(theta, rb)?, p(theta, ra)?);
        let xt: [T; 3] = std::array::from_fn(|i| (ta[i] - tb[i]) / (h + h));
        let xr: [T; 3] = std::array::from_fn(|i| (sa[i] - sb[i]) / (rb - ra));
        let dot = |a: &[T; 3], b: &[T; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        Ok([dot(&xt, &xt), dot(&xt, &xr), dot(&xr, &xr)])
    }

    /// The field's metric pulled back through `u = 2θ + U(r)`, `v = V(r)`.
    pub fn pulled_back_metric(&self, theta: T, r: T) -> Result<[T; 3]> {
        let [uu, vv, _] = self.profiles(r)?;
        let [du, dv, _] = self.derivatives(r)?;
        let two = T::lit(2.0);
        let j = self.coeffs.field.jet_at(two * theta + uu, vv)?;
        let (e, f, g) = (j.E(), j.F(), j.G());
        Ok([T::lit(4.0) * e, two * (e * du + f * dv), e * du * du + two * f * du * dv + g * dv * dv])
    }

    /// Largest relative mismatch between induced and pulled-back metrics over
    /// `n` random points with `u` inside the field's domain.
    pub fn pullback_mismatch(&self, n: usize, seed: u64) -> Result<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = self.coeffs.field.domain.shrink(T::lit(0.9));
        let (lo, hi) = self.r_range;
        let mut worst = T::zero();
        for _ in 0..n {
            let r = lo + (hi - lo) * T::lit(rng.gen_range(0.05..0.95));
            let u = d.u0 + (d.u1 - d.u0) * T::lit(rng.gen::<f64>());
            let theta = (u - self.profiles(r)?[0]) * T::lit(0.5);
            let a = self.induced_metric(theta, r)?;
            let b = self.pulled_back_metric(theta, r)?;
            let scale = b[0].abs().max(b[2].abs());
            for i in 0..3 {
                worst = worst.max((a[i] - b[i]).abs() / scale);
            }
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::ode_family::{OdeFamilySpec, OdeSolution};

    fn spiral_field() -> MetricField {
        let spec = OdeFamilySpec::spiral(1.0, 0.0, 2.0, 1.0, 0.5, [-0.3, 0.3, -0.3, 0.3]);
        OdeSolution::<f64>::solve(&spec).unwrap().exp_invariant_field().unwrap()
    }

    #[test]
    fn pullback_matches() {
        let f = spiral_field();
        let imm = immerse_lie_spiral(&f, &LieSpiralSpec::default()).unwrap();
        assert!(imm.min_discriminant >= 0.0);
        let (a, b) = imm.r_range;
        for k in 0..5 {
            let r = a + (b - a) * k as f64 / 4.0;
            assert!(imm.equation_residuals(r).unwrap().iter().all(|x| *x < 1e-10));
        }
        assert!(imm.pullback_mismatch(50, 7).unwrap() < 1e-6);
    }

    #[test]
    fn bad_seed_rejected() {
        let f = spiral_field();
        let spec = LieSpiralSpec { u0: Some(-8.0), ..LieSpiralSpec::default() };
        assert!(matches!(
            immerse_lie_spiral(&f, &spec),
            Err(HexError::NegativeDiscriminant { .. } | HexError::IntervalExhausted { .. })
        ));
    }

    #[test]
    fn non_invariant_field_rejected() {
        let f = crate::generators::flat::<f64>();
        assert!(matches!(immerse_lie_spiral(&f, &LieSpiralSpec::default()), Err(HexError::InvalidParameter(_))));
    }
}
