//! Simple waves: solutions with two Riemann invariants frozen.
//!
//! With `R1 = c1` and `R2 = c2` fixed, `λ2` and `F` become functions of `λ3`,
//! and so does `R3`. The remaining invariant solves `λ3(R)u + v = f(R)`.
//! The metric follows from the speeds and `F` by Vieta.

use serde::{Deserialize, Serialize};

use super::profile::Profile;
use crate::chart_metric::{Domain, FamilyTag, MetricField, MetricJet2};
use crate::error::{HexError, Result};
use crate::hydro_system::{characteristic_speeds, invariant_phi, invariants_at, lambda1_from, metric_from_speeds};
use crate::jet::Jet2;
use crate::scalar::{Real, Scalar};

/// How the third invariant depends on the chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WaveProfile {
    /// `λ3(R)u + v = f(R)`.
    Hopf { profile: Profile },
    /// `R3` constant; the metric is constant.
    Frozen { r3: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimpleWaveSpec {
    pub c1: f64,
    pub c2: f64,
    pub wave: WaveProfile,
    /// Starting value of `λ3` for the pointwise Newton solve.
    pub lambda3_seed: f64,
    /// Interval bracketing `λ2` for every `λ3` met on the domain.
    pub lambda2_bracket: [f64; 2],
    /// `[u0, u1, v0, v1]`.
    pub domain: [f64; 4],
}

const NEWTON_TOL: f64 = 1e-12;

/// Speeds, `F` and `R3`.
type WaveState<T> = ([Jet2<T>; 3], Jet2<T>, Jet2<T>);

impl SimpleWaveSpec {
    /// A wave through the constant metric `(e, f, g)`: `c1, c2` are its first
    /// two invariants and the square of half-width `half` is centred at
    /// `(0, f(R3))`. The profile is linear with slope chosen so that `R3`
    /// varies by about a fifth of its value over the square.
    pub fn around_metric(e: f64, f: f64, g: f64, half: f64) -> Result<Self> {
        let jet = MetricJet2::constant(e, f, g);
        let l = characteristic_speeds(&jet)?.real().ok_or(HexError::ComplexSpeeds)?;
        let r = invariants_at(&jet)?;
        let gap = (l[2] - l[1]).min(l[1] - l[0]);
        let slope = 5.0 * (1.0 + l[2].abs()) * half / r.r3.abs();
        let vc = slope * r.r3;
        Ok(Self {
            c1: r.r1,
            c2: r.r2,
            wave: WaveProfile::Hopf { profile: Profile::linear(slope, 0.0) },
            lambda3_seed: l[2],
            lambda2_bracket: [l[1] - 0.03 * gap, l[1] + 0.03 * gap],
            domain: [-half, half, vc - half, vc + half],
        })
    }

    /// The constant metric with the same `c1, c2` and third invariant `r3`.
    pub fn frozen(mut self, r3: f64) -> Self {
        self.wave = WaveProfile::Frozen { r3 };
        self
    }

    pub fn validate(&self) -> Result<()> {
        let [a, b] = self.lambda2_bracket;
        if !(a < b) {
            return Err(HexError::InvalidParameter("lambda2_bracket must be increasing".into()));
        }
        let [u0, u1, v0, v1] = self.domain;
        if !(u0 < u1 && v0 < v1) {
            return Err(HexError::InvalidParameter("empty domain".into()));
        }
        if !(self.c1 != 0.0 && self.c1.is_finite() && self.c2.is_finite()) {
            return Err(HexError::InvalidParameter("c1 must be finite and non-zero".into()));
        }
        if let WaveProfile::Hopf { profile } = &self.wave {
            profile.validate()?;
        }
        Ok(())
    }
}

fn phi<S: Scalar>(a: S, b: S) -> Result<S> {
    invariant_phi(a, b, S::lit(1.0))
}

/// `c1·φ(λ3, λ1) − c2·φ(λ2, λ3)`, whose zeros give `λ2` for a fixed `λ3`.
pub fn eliminant<S: Scalar>(l2: S, l3: S, c1: S::Re, c2: S::Re) -> Result<S> {
    let l1 = lambda1_from(l2, l3)?;
    Ok(phi(l3, l1)? * c1 - phi(l2, l3)? * c2)
}

/// Real wave data: bracket and frozen invariants.
#[derive(Debug, Clone)]
struct Wave<T> {
    c1: T,
    c2: T,
    bracket: [T; 2],
}

impl<T: Real> Wave<T> {
    fn g(&self, l2: T, l3: T) -> Result<T> {
        Ok(eliminant(Jet2::constant(l2), Jet2::constant(l3), self.c1, self.c2)?.re)
    }

    fn dg(&self, l2: T, l3: T) -> Result<T> {
        Ok(eliminant(Jet2::var_x(l2), Jet2::constant(l3), self.c1, self.c2)?.dx)
    }

    /// Bisection on the bracket, polished by Newton.
    fn lambda2(&self, l3: T) -> Result<T> {
        let [mut a, mut b] = self.bracket;
        let no_root = |why: &str| HexError::NoRoot(format!("lambda2 at lambda3 = {}: {why}", l3.as_f64()));
        let mut ga = self.g(a, l3).map_err(|_| no_root("eliminant undefined at bracket end"))?;
        let gb = self.g(b, l3).map_err(|_| no_root("eliminant undefined at bracket end"))?;
        if ga * gb > T::zero() {
            return Err(no_root("no sign change on the bracket"));
        }
        while b - a > T::lit(1e-9) * (T::one() + a.abs()) {
            let m = (a + b) * T::lit(0.5);
            let gm = self.g(m, l3).map_err(|_| no_root("eliminant undefined inside the bracket"))?;
            if gm == T::zero() {
                a = m;
                b = m;
                break;
            }
            if (gm > T::zero()) == (ga > T::zero()) {
                a = m;
                ga = gm;
            } else {
                b = m;
            }
        }
        let mut x = (a + b) * T::lit(0.5);
        for _ in 0..3 {
            let d = self.dg(x, l3)?;
            if d == T::zero() {
                break;
            }
            let step = self.g(x, l3)? / d;
            if !(step.abs() < (b - a).abs() + T::lit(1e-12) * (T::one() + x.abs())) {
                break;
            }
            x = x - step;
        }
        Ok(x)
    }

    /// Lifts `λ2` to a jet along a jet of `λ3`.
    fn lambda2_jet(&self, l3: Jet2<T>) -> Result<Jet2<T>> {
        let x0 = self.lambda2(l3.re)?;
        let d = self.dg(x0, l3.re)?;
        let mut x = Jet2::constant(x0);
        for _ in 0..4 {
            x = x - eliminant(x, l3, self.c1, self.c2)? / d;
        }
        Ok(x)
    }

    /// Speeds, `F` and `R3` along a jet of `λ3`.
    fn state(&self, l3: Jet2<T>) -> Result<WaveState<T>> {
        let l2 = self.lambda2_jet(l3)?;
        let l1 = lambda1_from(l2, l3)?;
        let f = Jet2::constant(self.c1) / phi(l2, l3)?;
        let r3 = f * phi(l1, l2)?;
        Ok(([l1, l2, l3], f, r3))
    }
}

/// Residual of the equation fixing `λ3` at `(u, v)`.
fn residual<T: Real>(wave: &Wave<T>, kind: &WaveProfile, l3: Jet2<T>, u: Jet2<T>, v: Jet2<T>) -> Result<Jet2<T>> {
    let (_, _, r3) = wave.state(l3)?;
    Ok(match kind {
        WaveProfile::Hopf { profile } => l3 * u + v - profile.eval(r3),
        WaveProfile::Frozen { r3: target } => r3 - Jet2::constant(T::lit(*target)),
    })
}

fn solve_lambda3<T: Real>(wave: &Wave<T>, kind: &WaveProfile, seed: T, u: T, v: T) -> Result<T> {
    let (cu, cv) = (Jet2::constant(u), Jet2::constant(v));
    let mut x = seed;
    for _ in 0..60 {
        let r = residual(wave, kind, Jet2::var_x(x), cu, cv)?;
        if !(r.dx.abs() > T::zero()) {
            break;
        }
        let step = r.re / r.dx;
        x = x - step;
        if !x.is_finite() {
            break;
        }
        if step.abs() < T::lit(NEWTON_TOL) * (T::one() + x.abs()) {
            let r = residual(wave, kind, Jet2::constant(x), cu, cv)?.re;
            if r.abs() < T::lit(1e-10) * (T::one() + u.abs() + v.abs()) {
                return Ok(x);
            }
            break;
        }
    }
    Err(HexError::NewtonDiverged(format!("lambda3 at ({}, {})", u.as_f64(), v.as_f64())))
}

/// Metric jets of the wave at `(u, v)`.
fn wave_metric<T: Real>(wave: &Wave<T>, kind: &WaveProfile, seed: T, u: T, v: T) -> Result<MetricJet2<T>> {
    let x0 = solve_lambda3(wave, kind, seed, u, v)?;
    let (ju, jv) = Jet2::seed(u, v);
    let d = residual(wave, kind, Jet2::var_x(x0), Jet2::constant(u), Jet2::constant(v))?.dx;
    let mut l3 = Jet2::constant(x0);
    for _ in 0..4 {
        l3 = l3 - residual(wave, kind, l3, ju, jv)? / d;
    }
    let (l, f, _) = wave.state(l3)?;
    let [e, f, g] = metric_from_speeds(l, f);
    Ok(MetricJet2::new(e, f, g))
}

pub fn make_simple_wave<T: Real>(spec: &SimpleWaveSpec) -> Result<MetricField<T>> {
    spec.validate()?;
    let wave = Wave { c1: T::lit(spec.c1), c2: T::lit(spec.c2), bracket: spec.lambda2_bracket.map(T::lit) };
    let l3 = T::lit(spec.lambda3_seed);
    let l2 = wave.lambda2(l3)?;
    lambda1_from(Jet2::constant(l2), Jet2::constant(l3))?;
    let [u0, u1, v0, v1] = spec.domain.map(T::lit);
    let kind = spec.wave.clone();
    let seed = l3;
    let field = MetricField::new(
        format!("simple_wave(c1={}, c2={})", spec.c1, spec.c2),
        FamilyTag::SimpleWave,
        Domain::new(u0, u1, v0, v1),
        move |u, v| wave_metric(&wave, &kind, seed, u, v),
    );
    field.check_grid(20)?;
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hydro_system::hydro_residual;

    #[test]
    fn linear_profile_wave() {
        let spec = SimpleWaveSpec::around_metric(1.3, 0.2, 0.9, 0.2).unwrap();
        let f = make_simple_wave::<f64>(&spec).unwrap();
        let mut r3 = vec![];
        for p in f.domain.grid(6) {
            let j = f.jet(p).unwrap();
            assert!(hydro_residual(&j).relative(&j) < 1e-9);
            let r = invariants_at(&j).unwrap();
            assert!((r.r1 - spec.c1).abs() < 1e-9 * spec.c1.abs());
            assert!((r.r2 - spec.c2).abs() < 1e-9 * spec.c2.abs().max(1e-3));
            r3.push(r.r3);
        }
        let spread =
            r3.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - r3.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread > 1e-3);
    }

    #[test]
    fn frozen_wave_is_constant() {
        let base = SimpleWaveSpec::around_metric(1.3, 0.2, 0.9, 0.2).unwrap();
        let r3 = invariants_at(&MetricJet2::constant(1.3, 0.2, 0.9)).unwrap().r3;
        let f = make_simple_wave::<f64>(&base.frozen(r3)).unwrap();
        let j = f.jet(f.domain.center()).unwrap();
        assert!((j.E() - 1.3).abs() < 1e-10 && (j.F() - 0.2).abs() < 1e-10 && (j.G() - 0.9).abs() < 1e-10);
        assert!(j.Eu().abs() < 1e-12 && j.Gv().abs() < 1e-12);
    }

    #[test]
    fn empty_bracket_reports_no_root() {
        let mut spec = SimpleWaveSpec::around_metric(1.3, 0.2, 0.9, 0.2).unwrap();
        let [a, b] = spec.lambda2_bracket;
        spec.lambda2_bracket = [b + 1e-3, b + 1e-3 + (b - a) * 0.01];
        assert!(matches!(make_simple_wave::<f64>(&spec), Err(HexError::NoRoot(_))));
    }

    #[test]
    fn singular_lambda1_denominator() {
        assert!(matches!(
            lambda1_from(Jet2::constant(1.0f64), Jet2::constant(2.0)),
            Err(HexError::LinearSolveSingular { .. })
        ));
    }
}
