//! Hamiltonian form of the geodesic flow, cubic first integrals built from
//! solutions of the hydrodynamic system, and their verification.
//!
//! With momenta `(p, q)` conjugate to `(u, v)` the Hamiltonian is
//! `H = (G p² - 2F pq + E q²) / (2(EG - F²))`. On a web-adapted chart the cubic
//! `I = μ (Gp - Fq)(Eq - Fp)[(G - F)p + (E - F)q]` Poisson-commutes with `H`
//! for the right power `μ = (EG - F²)^(-m)`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chart_metric::{ChartPoint, Domain, MetricField, MetricJet2, WEB_ADAPTED_TOL};
use crate::error::{HexError, Result};
use crate::hydro_system::hydro_residual;
use crate::jet::Jet2;
use crate::ode::{dopri5, IntegratorConfig, Stop};
use crate::scalar::{Real, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PhasePoint<T = f64> {
    pub u: T,
    pub v: T,
    pub p: T,
    pub q: T,
}

impl<T: Real> PhasePoint<T> {
    pub fn new(u: T, v: T, p: T, q: T) -> Self {
        Self { u, v, p, q }
    }

    pub fn position(&self) -> ChartPoint<T> {
        ChartPoint::new(self.u, self.v)
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite() && self.p.is_finite() && self.q.is_finite()
    }
}

pub fn hamiltonian<T: Real>(jet: &MetricJet2<T>, p: T, q: T) -> Result<T> {
    let d = jet.check_nondegenerate(ChartPoint::new(T::nan(), T::nan()))?;
    let two = T::lit(2.0);
    Ok((jet.G() * p * p - two * jet.F() * p * q + jet.E() * q * q) / (two * d))
}

/// `(ξ, η) = ((Gp - Fq), (Eq - Fp)) / (EG - F²)`.
pub fn momentum_to_velocity<T: Real>(jet: &MetricJet2<T>, p: T, q: T) -> Result<(T, T)> {
    let d = jet.check_nondegenerate(ChartPoint::new(T::nan(), T::nan()))?;
    Ok(((jet.G() * p - jet.F() * q) / d, (jet.E() * q - jet.F() * p) / d))
}

/// `(p, q) = (Eξ + Fη, Fξ + Gη)`.
pub fn velocity_to_momentum<T: Real>(jet: &MetricJet2<T>, xi: T, eta: T) -> (T, T) {
    (jet.E() * xi + jet.F() * eta, jet.F() * xi + jet.G() * eta)
}

/// How the exponent of the integrating factor was fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MuDecision {
    /// The exponent `m` in `μ = (EG - F²)^(-m)`.
    pub exponent: u8,
    /// Max relative `{I, H}` on the probe set for `m = 1`.
    pub residual_m1: f64,
    /// Max relative `{I, H}` on the probe set for `m = 2`.
    pub residual_m2: f64,
    /// Both exponents pass because `EG - F²` is constant on the probes.
    pub indistinguishable: bool,
}

/// Relative bracket threshold for accepting an exponent during calibration.
pub const CALIBRATION_TOL: f64 = 1e-8;

pub type CoefficientEvaluator<T> = dyn Fn(T, T) -> Result<[Jet2<T>; 4]> + Send + Sync;

/// `K3 p³ + K2 p²q + K1 pq² + K0 q³` with jet coefficients in `(u, v)`.
#[derive(Clone)]
pub struct CubicForm<T = f64> {
    eval: Arc<CoefficientEvaluator<T>>,
    pub domain: Domain<T>,
    pub mu: Option<MuDecision>,
}

impl<T: Real> std::fmt::Debug for CubicForm<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CubicForm").field("domain", &self.domain).field("mu", &self.mu).finish()
    }
}

fn monomials<T: Real>(p: T, q: T) -> ([T; 4], [T; 4], [T; 4]) {
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    (
        [p * p * p, p * p * q, p * q * q, q * q * q],
        [three * p * p, two * p * q, q * q, T::zero()],
        [T::zero(), p * p, two * p * q, three * q * q],
    )
}

impl<T: Real> CubicForm<T> {
    pub fn new(domain: Domain<T>, eval: impl Fn(T, T) -> Result<[Jet2<T>; 4]> + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(eval), domain, mu: None }
    }

    /// A form with constant coefficients.
    pub fn constant(domain: Domain<T>, k: [T; 4]) -> Self {
        Self::new(domain, move |_, _| Ok(k.map(Jet2::constant)))
    }

    /// Coefficients `[K3, K2, K1, K0]` as jets at `(u, v)`.
    pub fn coefficients(&self, u: T, v: T) -> Result<[Jet2<T>; 4]> {
        (self.eval)(u, v)
    }

    pub fn value(&self, x: &PhasePoint<T>) -> Result<T> {
        let k = self.coefficients(x.u, x.v)?;
        let (m, _, _) = monomials(x.p, x.q);
        Ok((0..4).fold(T::zero(), |a, i| a + k[i].re * m[i]))
    }

    /// `Σ |Ki| |monomial_i|`, the size of the individual terms.
    pub fn magnitude(&self, x: &PhasePoint<T>) -> Result<T> {
        let k = self.coefficients(x.u, x.v)?;
        let (m, _, _) = monomials(x.p, x.q);
        Ok((0..4).fold(T::zero(), |a, i| a + (k[i].re * m[i]).abs()))
    }

    /// Multiplies one coefficient (`0` for `K3` through `3` for `K0`) by `factor`.
    pub fn scale_coefficient(&self, index: usize, factor: T) -> Self {
        let inner = self.eval.clone();
        Self {
            eval: Arc::new(move |u, v| {
                let mut k = inner(u, v)?;
                k[index] = k[index] * factor;
                Ok(k)
            }),
            domain: self.domain,
            mu: self.mu,
        }
    }
}

/// The web cubic `(Gp - Fq)(Eq - Fp)[(G - F)p + (E - F)q]` with factor `μ`,
/// expanded in `(p, q)`.
pub fn web_cubic_coefficients<T: Real>(jet: &MetricJet2<T>, mu: Jet2<T>) -> [Jet2<T>; 4] {
    let (e, f, g) = (jet.e, jet.f, jet.g);
    // three linear factors a p + b q
    let (a1, b1) = (g, -f);
    let (a2, b2) = (-f, e);
    let (a3, b3) = (g - f, e - f);
    [
        a1 * a2 * a3 * mu,
        (a1 * a2 * b3 + a1 * b2 * a3 + b1 * a2 * a3) * mu,
        (a1 * b2 * b3 + b1 * a2 * b3 + b1 * b2 * a3) * mu,
        b1 * b2 * b3 * mu,
    ]
}

fn mu_jet<T: Real>(jet: &MetricJet2<T>, det0: T, m: u8) -> Jet2<T> {
    let d = jet.det_jet() / det0;
    let r = d.recip();
    if m == 1 {
        r
    } else {
        r * r
    }
}

/// The web cubic of a field with a fixed exponent, normalised so `μ = 1` at the
/// domain centre.
pub fn cubic_integral_with_exponent<T: Real>(field: &MetricField<T>, m: u8) -> Result<CubicForm<T>> {
    if !(m == 1 || m == 2) {
        return Err(HexError::InvalidParameter(format!("mu exponent must be 1 or 2, got {m}")));
    }
    let c = field.domain.center();
    let det0 = field.jet(c)?.check_nondegenerate(c)?;
    let f = field.clone();
    Ok(CubicForm::new(field.domain, move |u, v| {
        let jet = f.jet_at(u, v)?;
        jet.check_nondegenerate(ChartPoint::new(u, v))?;
        Ok(web_cubic_coefficients(&jet, mu_jet(&jet, det0, m)))
    }))
}

/// Deterministic probe phase points: a `3 x 3` grid in the inner part of the
/// domain with four unit chart directions each.
fn probe_points<T: Real>(field: &MetricField<T>) -> Result<Vec<PhasePoint<T>>> {
    let mut out = Vec::new();
    for c in field.domain.shrink(T::lit(0.8)).grid(3) {
        let jet = field.jet(c)?;
        for k in 0..4 {
            let th = T::lit(0.37 + 0.81 * k as f64);
            let (p, q) = velocity_to_momentum(&jet, th.cos(), th.sin());
            out.push(PhasePoint::new(c.u, c.v, p, q));
        }
    }
    Ok(out)
}

fn max_relative_bracket<T: Real>(field: &MetricField<T>, i: &CubicForm<T>, pts: &[PhasePoint<T>]) -> Result<f64> {
    let mut worst = 0.0f64;
    for x in pts {
        let (b, s) = bracket_with_scale(field, &PhaseFn::Cubic(i), &PhaseFn::Hamiltonian, x)?;
        let r = if s == T::zero() { T::zero() } else { b.abs() / s };
        worst = worst.max(r.as_f64());
    }
    Ok(worst)
}

/// Checks the hydrodynamic residual on a grid and fails with `NotASolution`.
pub fn check_solution<T: Real>(field: &MetricField<T>, n: usize, tol: T) -> Result<T> {
    let mut worst = T::zero();
    for p in field.domain.grid(n) {
        let jet = field.jet(p)?;
        let rel = hydro_residual(&jet).relative(&jet);
        if !(rel <= tol) {
            return Err(HexError::NotASolution { residual: rel.as_f64(), u: p.u.as_f64(), v: p.v.as_f64() });
        }
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// The cubic first integral of a web-adapted metric, with the exponent of the
/// integrating factor fixed by the bracket test on probe points.
pub fn cubic_integral_from_solution<T: Real>(field: &MetricField<T>) -> Result<CubicForm<T>> {
    check_solution(field, 8, T::lit(WEB_ADAPTED_TOL))?;
    let pts = probe_points(field)?;
    let i1 = cubic_integral_with_exponent(field, 1)?;
    let i2 = cubic_integral_with_exponent(field, 2)?;
    let r1 = max_relative_bracket(field, &i1, &pts)?;
    let r2 = max_relative_bracket(field, &i2, &pts)?;
    let tol = CALIBRATION_TOL;
    let (pass1, pass2) = (r1 < tol, r2 < tol);
    let (mut chosen, exponent, indistinguishable) = match (pass1, pass2) {
        (true, false) => (i1, 1, false),
        (false, true) => (i2, 2, false),
        (true, true) if det_is_constant(field)? => (i2, 2, true),
        _ => return Err(HexError::CalibrationAmbiguous { r1, r2 }),
    };
    chosen.mu = Some(MuDecision { exponent, residual_m1: r1, residual_m2: r2, indistinguishable });
    Ok(chosen)
}

fn det_is_constant<T: Real>(field: &MetricField<T>) -> Result<bool> {
    let mut worst = T::zero();
    for p in field.domain.shrink(T::lit(0.8)).grid(3) {
        let jet = field.jet(p)?;
        let d = jet.det_jet();
        let s = jet.scale();
        worst = worst.max((d.dx.abs() + d.dy.abs()) / (s * s));
    }
    Ok(worst < T::lit(CALIBRATION_TOL))
}

/// A phase-space function the bracket can be taken of.
#[derive(Clone, Copy)]
pub enum PhaseFn<'a, T = f64> {
    Hamiltonian,
    Cubic(&'a CubicForm<T>),
}

/// Value and partials `(f, f_u, f_v, f_p, f_q)`.
pub fn phase_partials<T: Real>(field: &MetricField<T>, a: &PhaseFn<'_, T>, x: &PhasePoint<T>) -> Result<[T; 5]> {
    match a {
        PhaseFn::Hamiltonian => {
            let jet = field.jet_at(x.u, x.v)?;
            hamiltonian_partials(&jet, x.p, x.q)
        }
        PhaseFn::Cubic(c) => {
            let k = c.coefficients(x.u, x.v)?;
            let (m, mp, mq) = monomials(x.p, x.q);
            let mut out = [T::zero(); 5];
            for i in 0..4 {
                out[0] = out[0] + k[i].re * m[i];
                out[1] = out[1] + k[i].dx * m[i];
                out[2] = out[2] + k[i].dy * m[i];
                out[3] = out[3] + k[i].re * mp[i];
                out[4] = out[4] + k[i].re * mq[i];
            }
            Ok(out)
        }
    }
}

/// `(H, H_u, H_v, H_p, H_q)`.
pub fn hamiltonian_partials<T: Real>(jet: &MetricJet2<T>, p: T, q: T) -> Result<[T; 5]> {
    jet.check_nondegenerate(ChartPoint::new(T::nan(), T::nan()))?;
    let two = T::lit(2.0);
    let d = jet.det_jet();
    let h = (jet.g * (p * p) - jet.f * (two * p * q) + jet.e * (q * q)) / (d * two);
    let (xi, eta) = momentum_to_velocity(jet, p, q)?;
    Ok([h.re, h.dx, h.dy, xi, eta])
}

fn bracket_with_scale<T: Real>(
    field: &MetricField<T>,
    a: &PhaseFn<'_, T>,
    b: &PhaseFn<'_, T>,
    x: &PhasePoint<T>,
) -> Result<(T, T)> {
    let da = phase_partials(field, a, x)?;
    let db = phase_partials(field, b, x)?;
    let terms = [da[3] * db[1], -(da[1] * db[3]), da[4] * db[2], -(da[2] * db[4])];
    let sum = terms.iter().fold(T::zero(), |s, t| s + *t);
    let scale = terms.iter().fold(T::zero(), |s, t| s + t.abs());
    Ok((sum, scale))
}

/// Canonical bracket `{A, B} = A_p B_u - A_u B_p + A_q B_v - A_v B_q`.
pub fn poisson_bracket<T: Real>(
    field: &MetricField<T>,
    a: &PhaseFn<'_, T>,
    b: &PhaseFn<'_, T>,
    x: &PhasePoint<T>,
) -> Result<T> {
    bracket_with_scale(field, a, b, x).map(|(s, _)| s)
}

/// `{A, B}` divided by the sum of the magnitudes of its four terms.
pub fn relative_bracket<T: Real>(
    field: &MetricField<T>,
    a: &PhaseFn<'_, T>,
    b: &PhaseFn<'_, T>,
    x: &PhasePoint<T>,
) -> Result<T> {
    let (s, m) = bracket_with_scale(field, a, b, x)?;
    Ok(if m == T::zero() { T::zero() } else { s.abs() / m })
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory<T = f64> {
    pub t: Vec<T>,
    pub x: Vec<PhasePoint<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn last(&self) -> PhasePoint<T> {
        *self.x.last().expect("non-empty")
    }
}

/// Hamilton's equations for `H` from `x0` over affine time `t_span`.
pub fn integrate_geodesic<T: Real>(
    field: &MetricField<T>,
    x0: PhasePoint<T>,
    t_span: T,
    cfg: &IntegratorConfig<T>,
) -> Result<Trajectory<T>> {
    if !x0.is_finite() || !field.domain.contains(x0.u, x0.v) {
        return Err(HexError::DomainExit { t: 0.0, partial: vec![] });
    }
    let h0 = hamiltonian(&field.jet(x0.position())?, x0.p, x0.q)?;
    if !h0.is_finite() {
        return Err(HexError::InvalidParameter("initial energy not finite".into()));
    }
    let dom = field.domain;
    let sol = dopri5(
        |_, y: &[T; 4]| {
            if !dom.contains(y[0], y[1]) {
                return None;
            }
            let jet = field.jet_at(y[0], y[1]).ok()?;
            let d = hamiltonian_partials(&jet, y[2], y[3]).ok()?;
            Some([d[3], d[4], -d[1], -d[2]])
        },
        T::zero(),
        [x0.u, x0.v, x0.p, x0.q],
        t_span,
        cfg,
    )?;
    let traj =
        Trajectory { t: sol.t.clone(), x: sol.y.iter().map(|y| PhasePoint::new(y[0], y[1], y[2], y[3])).collect() };
    if sol.stop == Stop::Guard {
        let partial = traj
            .t
            .iter()
            .zip(&traj.x)
            .map(|(t, x)| [t.as_f64(), x.u.as_f64(), x.v.as_f64(), x.p.as_f64(), x.q.as_f64()])
            .collect();
        return Err(HexError::DomainExit { t: sol.last().0.as_f64(), partial });
    }
    Ok(traj)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryDrift {
    pub start: PhasePoint<f64>,
    /// `max |I(t) - I(0)|` over the trajectory divided by the term magnitude of `I(0)`.
    pub rel_drift: Option<f64>,
    /// Same for the Hamiltonian.
    pub energy_drift: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConservationReport {
    pub max_rel_drift: f64,
    pub max_energy_drift: f64,
    pub failed: usize,
    pub per_trajectory: Vec<TrajectoryDrift>,
}

/// Random unit-chart-speed starts in the inner half of the domain, scaled so
/// the chart displacement over `t_span` is a small fraction of the domain.
pub fn random_starts<T: Real>(field: &MetricField<T>, n: usize, t_span: T, seed: u64) -> Result<Vec<PhasePoint<T>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inner = field.domain.shrink(T::lit(0.5));
    let speed = T::lit(0.1) * field.domain.width().min(field.domain.height()) / t_span.abs().max(T::lit(1e-12));
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let a: f64 = rng.gen();
        let b: f64 = rng.gen();
        let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let u = inner.u0 + inner.width() * T::lit(a);
        let v = inner.v0 + inner.height() * T::lit(b);
        let jet = field.jet_at(u, v)?;
        let (p, q) = velocity_to_momentum(&jet, speed * T::lit(th.cos()), speed * T::lit(th.sin()));
        out.push(PhasePoint::new(u, v, p, q));
    }
    Ok(out)
}

/// Relative drift of `I` (and `H`) along `n` seeded random geodesics.
pub fn conservation_report<T: Real>(
    field: &MetricField<T>,
    i: &CubicForm<T>,
    n: usize,
    t_span: T,
    cfg: &IntegratorConfig<T>,
    seed: u64,
) -> Result<ConservationReport> {
    let starts = random_starts(field, n, t_span, seed)?;
    let per: Vec<TrajectoryDrift> = starts
        .par_iter()
        .map(|x0| {
            let start = PhasePoint::new(x0.u.as_f64(), x0.v.as_f64(), x0.p.as_f64(), x0.q.as_f64());
            match drift_along(field, i, *x0, t_span, cfg) {
                Ok((d, e)) => TrajectoryDrift { start, rel_drift: Some(d), energy_drift: Some(e), error: None },
                Err(err) => {
                    TrajectoryDrift { start, rel_drift: None, energy_drift: None, error: Some(err.to_string()) }
                }
            }
        })
        .collect();
    let max_rel_drift = per.iter().filter_map(|d| d.rel_drift).fold(0.0, f64::max);
    let max_energy_drift = per.iter().filter_map(|d| d.energy_drift).fold(0.0, f64::max);
    let failed = per.iter().filter(|d| d.error.is_some()).count();
    Ok(ConservationReport { max_rel_drift, max_energy_drift, failed, per_trajectory: per })
}

fn drift_along<T: Real>(
    field: &MetricField<T>,
    i: &CubicForm<T>,
    x0: PhasePoint<T>,
    t_span: T,
    cfg: &IntegratorConfig<T>,
) -> Result<(f64, f64)> {
    let traj = integrate_geodesic(field, x0, t_span, cfg)?;
    let i0 = i.value(&x0)?;
    let scale = i.magnitude(&x0)?;
    let h0 = hamiltonian(&field.jet(x0.position())?, x0.p, x0.q)?;
    let mut di = T::zero();
    let mut dh = T::zero();
    for x in &traj.x {
        di = di.max((i.value(x)? - i0).abs());
        dh = dh.max((hamiltonian(&field.jet(x.position())?, x.p, x.q)? - h0).abs());
    }
    let di = if scale == T::zero() { di } else { di / scale };
    Ok((di.as_f64(), (dh / h0.abs()).as_f64()))
}

/// Residuals of the five first-order relations resolved from `{I, H} = 0` for a
/// factored integral `(Gp - Fq)(Eq - Fp)[L(Gp - Fq) + K(Eq - Fp)]`. For the web
/// cubic `L = K = μ`. Order: `Eu, Fu, Gu, Lu, Kv`, each relative to its largest term.
pub fn factored_relations_residual<T: Real>(field: &MetricField<T>, exponent: u8, at: ChartPoint<T>) -> Result<[T; 5]> {
    let c = field.domain.center();
    let det0 = field.jet(c)?.det();
    let jet = field.jet(at)?;
    let d = jet.check_nondegenerate(at)?;
    let mu = mu_jet(&jet, det0, exponent);
    let (l, k) = (mu, mu);
    let (e, f, g) = (jet.E(), jet.F(), jet.G());
    let (ev, fv, gv) = (jet.Ev(), jet.Fv(), jet.Gv());
    let (lv, ku) = (l.dy, k.dx);
    let (lr, kr) = (l.re, k.re);
    let n = |x: f64| T::lit(x);
    // (prefactor, terms): residual relative to the largest term
    let rel = |lhs: T, pre: T, terms: &[T]| {
        let rhs = terms.iter().fold(T::zero(), |a, t| a + *t) * pre;
        let s = terms.iter().fold(T::zero(), |a, t| a.max(t.abs())) * pre.abs();
        let s = s.max(lhs.abs());
        if s == T::zero() {
            T::zero()
        } else {
            (lhs - rhs).abs() / s
        }
    };
    let eu = rel(
        jet.Eu(),
        e / (n(5.0) * kr),
        &[
            n(2.0) * (kr * f - lr * g) / d * ev,
            n(4.0) * (lr * f - kr * e) / d * fv,
            (n(2.0) * kr * e * f + n(3.0) * lr * f * f - n(5.0) * lr * e * g) / (g * d) * gv,
            -n(2.0) * lv,
            -n(2.0) * ku,
        ],
    );
    let fu = rel(
        jet.Fu(),
        T::one() / (n(5.0) * kr),
        &[
            (n(5.0) * kr * e * g - n(2.0) * lr * f * g - n(3.0) * kr * f * f) / (n(2.0) * d) * ev,
            f * n(2.0) * (lr * f - kr * e) / d * fv,
            f * (n(2.0) * kr * e * f - n(5.0) * lr * e * g + n(3.0) * lr * f * f) / (n(2.0) * g * d) * gv,
            -f * lv,
            -f * ku,
        ],
    );
    let gu = rel(jet.Gu(), T::one(), &[n(2.0) * fv, -f / g * gv]);
    let lu = rel(
        l.dx,
        n(2.0) * lr / (n(5.0) * kr),
        &[
            (n(2.0) * lr * g + n(3.0) * kr * f) / d * ev,
            -n(2.0) * (n(2.0) * lr * f + n(3.0) * kr * e) / d * fv,
            (n(3.0) * kr * e * f + n(5.0) * lr * e * g - n(3.0) * lr * f * f) / (g * d) * gv,
            n(2.0) * lv,
            n(2.0) * ku,
        ],
    );
    let kv = rel(k.dy, n(2.0) * kr / d, &[n(2.0) * f * fv, -g * ev, -e * gv]);
    Ok([eu, fu, gu, lu, kv])
}
