//! Adaptive Dormand–Prince 5(4) integration over fixed-size states, plus
//! cubic Hermite dense tables built from the accepted steps.

use crate::error::{HexError, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig<T = f64> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_step: T,
    pub initial_step: T,
    pub max_steps: usize,
}

impl<T: Real> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::lit(1e-12),
            abs_tol: T::lit(1e-14),
            max_step: T::lit(0.05),
            initial_step: T::lit(1e-3),
            max_steps: 200_000,
        }
    }
}

impl<T: Real> IntegratorConfig<T> {
    pub fn with_tol(rel_tol: T) -> Self {
        Self { rel_tol, abs_tol: rel_tol * T::lit(1e-2), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > T::zero() && self.abs_tol > T::zero() && self.max_step > T::zero()) {
            return Err(HexError::InvalidParameter("integrator tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Why an integration stopped before reaching its end time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    Completed,
    /// The right-hand side or the guard rejected the state.
    Guard,
}

/// Accepted steps of an integration: times, states and derivatives.
#[derive(Debug, Clone)]
pub struct Solution<T, const N: usize> {
    pub t: Vec<T>,
    pub y: Vec<[T; N]>,
    pub dy: Vec<[T; N]>,
    pub stop: Stop,
}

impl<T: Real, const N: usize> Solution<T, N> {
    pub fn last(&self) -> (T, [T; N]) {
        (*self.t.last().expect("non-empty"), *self.y.last().expect("non-empty"))
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<T: Real, const N: usize>(y: &[T; N], h: T, terms: &[(f64, &[T; N])]) -> [T; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = T::zero();
        for (c, k) in terms {
            acc = acc + T::lit(*c) * k[i];
        }
        out[i] = out[i] + h * acc;
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction). The
/// right-hand side returns `None` to reject a state (e.g. outside the chart),
/// which ends the integration with [`Stop::Guard`] at the last accepted state.
pub fn dopri5<T, const N: usize, F>(f: F, t0: T, y0: [T; N], t1: T, cfg: &IntegratorConfig<T>) -> Result<Solution<T, N>>
where
    T: Real,
    F: Fn(T, &[T; N]) -> Option<[T; N]>,
{
    cfg.validate()?;
    let dir = if t1 >= t0 { T::one() } else { -T::one() };
    let span = (t1 - t0).abs();
    let k1_0 = match f(t0, &y0) {
        Some(k) => k,
        None => return Ok(Solution { t: vec![t0], y: vec![y0], dy: vec![[T::zero(); N]], stop: Stop::Guard }),
    };
    let mut sol = Solution { t: vec![t0], y: vec![y0], dy: vec![k1_0], stop: Stop::Completed };
    if span == T::zero() {
        return Ok(sol);
    }
    let mut t = t0;
    let mut y = y0;
    let mut k1 = k1_0;
    let mut h = cfg.initial_step.min(cfg.max_step).min(span);
    let tiny = T::epsilon() * T::lit(16.0) * (T::one() + t0.abs().max(t1.abs()));
    let mut steps = 0usize;
    while (t1 - t) * dir > tiny {
        steps += 1;
        if steps > cfg.max_steps {
            return Err(HexError::StepFailure { t: t.as_f64(), h: h.as_f64() });
        }
        h = h.min(cfg.max_step).min((t1 - t).abs());
        let hs = h * dir;
        let stage = |c: f64, yy: [T; N]| f(t + hs * T::lit(c), &yy);
        let k2 = stage(C2, axpy(&y, hs, &[(A21, &k1)]));
        let k3 = k2.and_then(|k2| stage(C3, axpy(&y, hs, &[(A31, &k1), (A32, &k2)])));
        let k4 = match (k2, k3) {
            (Some(k2), Some(k3)) => stage(C4, axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)])),
            _ => None,
        };
        let k5 = match (k2, k3, k4) {
            (Some(k2), Some(k3), Some(k4)) => {
                stage(C5, axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))
            }
            _ => None,
        };
        let k6 = match (k2, k3, k4, k5) {
            (Some(k2), Some(k3), Some(k4), Some(k5)) => {
                stage(1.0, axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))
            }
            _ => None,
        };
        let (k3, k4, k5, k6) = match (k3, k4, k5, k6) {
            (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
            _ => {
                // a stage left the admissible region: shrink, or stop if already tiny
                h = h * T::lit(0.25);
                if h < tiny {
                    sol.stop = Stop::Guard;
                    return Ok(sol);
                }
                continue;
            }
        };
        let y5 = axpy(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = match f(t + hs, &y5) {
            Some(k) => k,
            None => {
                h = h * T::lit(0.25);
                if h < tiny {
                    sol.stop = Stop::Guard;
                    return Ok(sol);
                }
                continue;
            }
        };
        let mut err = T::zero();
        for i in 0..N {
            let e = hs
                * (T::lit(E1) * k1[i]
                    + T::lit(E3) * k3[i]
                    + T::lit(E4) * k4[i]
                    + T::lit(E5) * k5[i]
                    + T::lit(E6) * k6[i]
                    + T::lit(E7) * k7[i]);
            let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y5[i].abs());
            err = err + (e / sc) * (e / sc);
        }
        let err = (err / T::from_usize(N).unwrap()).sqrt();
        if !err.is_finite() {
            h = h * T::lit(0.25);
            if h < tiny {
                return Err(HexError::StepFailure { t: t.as_f64(), h: h.as_f64() });
            }
            continue;
        }
        let fac = if err == T::zero() {
            T::lit(5.0)
        } else {
            (T::lit(0.9) * err.powf(T::lit(-0.2))).min(T::lit(5.0)).max(T::lit(0.2))
        };
        if err <= T::one() {
            t = t + hs;
            y = y5;
            k1 = k7;
            sol.t.push(t);
            sol.y.push(y);
            sol.dy.push(k7);
            h = h * fac;
        } else {
            h = h * fac.min(T::one());
            if h < tiny {
                return Err(HexError::StepFailure { t: t.as_f64(), h: h.as_f64() });
            }
        }
    }
    Ok(sol)
}

/// Piecewise cubic Hermite interpolant through `(t, y, y')` samples with strictly
/// monotone `t` (either direction).
#[derive(Debug, Clone)]
pub struct DenseTable<T, const N: usize> {
    t: Vec<T>,
    y: Vec<[T; N]>,
    dy: Vec<[T; N]>,
}

impl<T: Real, const N: usize> DenseTable<T, N> {
    /// Builds a table from one or two solutions sharing their start point
    /// (a backward and a forward branch).
    pub fn from_branches(backward: Option<&Solution<T, N>>, forward: &Solution<T, N>) -> Self {
        let mut t = Vec::new();
        let mut y = Vec::new();
        let mut dy = Vec::new();
        if let Some(b) = backward {
            for i in (1..b.t.len()).rev() {
                t.push(b.t[i]);
                y.push(b.y[i]);
                dy.push(b.dy[i]);
            }
        }
        t.extend_from_slice(&forward.t);
        y.extend_from_slice(&forward.y);
        dy.extend_from_slice(&forward.dy);
        if t.len() >= 2 && t[0] > t[1] {
            t.reverse();
            y.reverse();
            dy.reverse();
        }
        Self { t, y, dy }
    }

    pub fn range(&self) -> (T, T) {
        (self.t[0], *self.t.last().expect("non-empty"))
    }

    pub fn contains(&self, s: T) -> bool {
        let (a, b) = self.range();
        s >= a && s <= b
    }

    /// Interpolated state at `s` (clamped to the table range).
    pub fn eval(&self, s: T) -> [T; N] {
        let n = self.t.len();
        if n == 1 {
            return self.y[0];
        }
        let (a, b) = self.range();
        let s = s.max(a).min(b);
        let i = match self.t.binary_search_by(|x| x.partial_cmp(&s).unwrap()) {
            Ok(i) => return self.y[i],
            Err(i) => i.clamp(1, n - 1) - 1,
        };
        let h = self.t[i + 1] - self.t[i];
        let x = (s - self.t[i]) / h;
        let x2 = x * x;
        let x3 = x2 * x;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let h00 = two * x3 - three * x2 + T::one();
        let h10 = x3 - two * x2 + x;
        let h01 = three * x2 - two * x3;
        let h11 = x3 - x2;
        std::array::from_fn(|k| {
            h00 * self.y[i][k] + h10 * h * self.dy[i][k] + h01 * self.y[i + 1][k] + h11 * h * self.dy[i + 1][k]
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let cfg = IntegratorConfig { rel_tol: 1e-12, abs_tol: 1e-14, ..Default::default() };
        let sol = dopri5(|_, y: &[f64; 2]| Some([y[1], -y[0]]), 0.0, [1.0, 0.0], 2.0, &cfg).unwrap();
        let (t, y) = sol.last();
        assert_eq!(t, 2.0);
        assert!((y[0] - 2f64.cos()).abs() < 1e-11);
        assert!((y[1] + 2f64.sin()).abs() < 1e-11);
    }

    #[test]
    fn backward_integration_and_table() {
        let cfg = IntegratorConfig { rel_tol: 1e-12, abs_tol: 1e-14, max_step: 0.01, ..Default::default() };
        let f = |_: f64, y: &[f64; 1]| Some([y[0]]);
        let fw = dopri5(f, 0.0, [1.0], 1.0, &cfg).unwrap();
        let bw = dopri5(f, 0.0, [1.0], -1.0, &cfg).unwrap();
        let tab = DenseTable::from_branches(Some(&bw), &fw);
        for s in [-0.93, -0.2, 0.0, 0.377, 0.999] {
            assert!((tab.eval(s)[0] - f64::exp(s)).abs() < 1e-10, "{s}");
        }
    }

    #[test]
    fn guard_stops_integration() {
        let cfg = IntegratorConfig::default();
        let sol = dopri5(|_, y: &[f64; 1]| if y[0] < 0.5 { Some([1.0]) } else { None }, 0.0, [0.0], 1.0, &cfg).unwrap();
        assert_eq!(sol.stop, Stop::Guard);
        assert!(sol.last().1[0] < 0.5 && sol.last().1[0] > 0.49);
    }

    #[test]
    fn f32_integration() {
        let cfg = IntegratorConfig::<f32> { rel_tol: 1e-6, abs_tol: 1e-7, ..Default::default() };
        let sol = dopri5(|_, y: &[f32; 1]| Some([-y[0]]), 0.0f32, [1.0f32], 1.0, &cfg).unwrap();
        assert!((sol.last().1[0] - (-1f32).exp()).abs() < 1e-5);
    }
}
