//! Group-invariant solutions reduced to ODEs in the invariant `s`.
//!
//! * spiral: `E = e^u e(s)`, `F = e^u f(s)`, `G = e^u j(s)` with `s = v - κu`;
//! * dilation: `E = u^κ e(s)` and so on with `s = v/u`;
//! * the degenerate dilation branch with `κ = 0`, where `e` is algebraic in
//!   `(s, j, f)` and only `j, f` are integrated.
//!
//! Solutions are stored as dense tables; jets of `e, j, f` come from the table
//! value, the right-hand side and its derivative along the flow.

use serde::{Deserialize, Serialize};

use crate::chart_metric::{Domain, FamilyTag, MetricField, MetricJet2};
use crate::error::{HexError, Result};
use crate::jet::Jet2;
use crate::ode::{dopri5, DenseTable, IntegratorConfig, Solution, Stop};
use crate::scalar::{Real, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OdeFamily {
    Spiral,
    Dilation,
    /// Dilation branch with vanishing discriminant (`κ = 0`).
    Discr,
}

/// Constant-curvature constraints of the `κ = -2` dilation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DilationBranch {
    #[default]
    Generic,
    /// `(2f - j)s² + (2s + 1)e = 0`.
    A,
    /// `(s² + 2s)j + 2f - e = 0`.
    B,
    /// `js² - e = 0`.
    C,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeFamilySpec {
    pub family: OdeFamily,
    #[serde(default)]
    pub kappa: f64,
    pub s0: f64,
    /// Initial `e`; ignored for the degenerate branch where it is derived.
    #[serde(default)]
    pub e0: f64,
    pub j0: f64,
    pub f0: f64,
    /// `[u0, u1, v0, v1]`.
    pub domain: [f64; 4],
    #[serde(default)]
    pub branch: DilationBranch,
}

impl OdeFamilySpec {
    pub fn spiral(kappa: f64, s0: f64, e0: f64, j0: f64, f0: f64, domain: [f64; 4]) -> Self {
        Self { family: OdeFamily::Spiral, kappa, s0, e0, j0, f0, domain, branch: DilationBranch::Generic }
    }

    pub fn dilation(kappa: f64, s0: f64, e0: f64, j0: f64, f0: f64, domain: [f64; 4]) -> Self {
        Self { family: OdeFamily::Dilation, kappa, s0, e0, j0, f0, domain, branch: DilationBranch::Generic }
    }

    pub fn with_branch(mut self, branch: DilationBranch) -> Self {
        self.branch = branch;
        self
    }

    pub fn discr(s0: f64, j0: f64, f0: f64, domain: [f64; 4]) -> Self {
        Self { family: OdeFamily::Discr, kappa: 0.0, s0, e0: 0.0, j0, f0, domain, branch: DilationBranch::Generic }
    }
}

/// `δ = -jκ³ + (f - 2j)κ² + (2e - f)κ + e`.
pub fn spiral_delta<S: Scalar>(y: [S; 3], k: S::Re) -> S {
    let [e, j, f] = y;
    let n = |x: f64| <S::Re as Real>::lit(x);
    let (k2, k3) = (k * k, k * k * k);
    -(j * k3) + (f - j * n(2.0)) * k2 + (e * n(2.0) - f) * k + e
}

/// `Δ = -js³ + (f - 2j)s² + (2e - f)s + e`.
pub fn dilation_delta<S: Scalar>(s: S, y: [S; 3]) -> S {
    let [e, j, f] = y;
    let n = |x: f64| <S::Re as Real>::lit(x);
    -(j * s * s * s) + (f - j * n(2.0)) * s * s + (e * n(2.0) - f) * s + e
}

/// Right-hand side for `(e, j, f)` of the spiral family.
pub fn spiral_rhs<S: Scalar>(y: [S; 3], k: S::Re) -> [S; 3] {
    let [e, j, f] = y;
    let n = |x: f64| <S::Re as Real>::lit(x);
    let d = spiral_delta(y, k);
    let k2 = k * k;
    [
        e * (f - j * k) * (k + n(1.0)) / d,
        j * (-(j * k2) + (f * n(2.0) - j * n(2.0)) * k + e) / d,
        (-(f * j * (n(2.0) * k2)) + (f * f * n(2.0) - f * j * n(3.0) + j * e) * k + e * (f + j)) / (d * n(2.0)),
    ]
}

/// Right-hand side for `(e, j, f)` of the dilation family.
pub fn dilation_rhs<S: Scalar>(s: S, y: [S; 3], k: S::Re) -> [S; 3] {
    let [e, j, f] = y;
    let n = |x: f64| <S::Re as Real>::lit(x);
    let d = dilation_delta(s, y);
    [
        (s + n(1.0)) * e * (f - j * s) * k / d,
        j * (-(j * s * s) + (f * n(2.0) - j * n(2.0)) * s + e) * k / d,
        (-(f * j * s * s * n(2.0)) + (f * f * n(2.0) - f * j * n(3.0) + j * e) * s + e * (f + j)) * k / (d * n(2.0)),
    ]
}

/// `e = s(js² + (2j - f)s + f)/(2s + 1)` on the degenerate branch.
pub fn discr_e<S: Scalar>(s: S, j: S, f: S) -> S {
    let n = |x: f64| <S::Re as Real>::lit(x);
    s * (j * s * s + (j * n(2.0) - f) * s + f) / (s * n(2.0) + n(1.0))
}

/// Right-hand side for `(j, f)` on the degenerate branch.
pub fn discr_rhs<S: Scalar>(s: S, y: [S; 2]) -> [S; 2] {
    let [j, f] = y;
    let n = |x: f64| <S::Re as Real>::lit(x);
    let a = j * s + j * n(2.0) - f * n(3.0);
    let quart = j * s * s * s * n(4.0) + (j * n(7.0) - f * n(2.0)) * s * s + (j * n(4.0) - f * n(2.0)) * s + f;
    let w = j * s + f;
    let den = (s - n(1.0)) * (s * n(2.0) + n(1.0)) * (s + n(2.0)) * w * w;
    [j * a * quart * n(2.0) / den, (f - j * s) * a * quart / den]
}

/// Residual of a `κ = -2` constraint, relative to its largest term.
pub fn branch_constraint<T: Real>(b: DilationBranch, s: T, y: [T; 3]) -> T {
    let [e, j, f] = y;
    let two = T::lit(2.0);
    let terms: Vec<T> = match b {
        DilationBranch::Generic => return T::zero(),
        DilationBranch::A => vec![two * f * s * s, -j * s * s, two * s * e, e],
        DilationBranch::B => vec![s * s * j, two * s * j, two * f, -e],
        DilationBranch::C => vec![j * s * s, -e],
    };
    let sum = terms.iter().fold(T::zero(), |a, t| a + *t);
    let scale = terms.iter().fold(T::zero(), |a, t| a.max(t.abs()));
    if scale == T::zero() {
        T::zero()
    } else {
        sum.abs() / scale
    }
}

/// Printed constant curvature of a `κ = -2` branch at `(s, e, j, f)`.
pub fn branch_curvature<T: Real>(b: DilationBranch, s: T, y: [T; 3]) -> Option<T> {
    let [e, j, f] = y;
    let w = j * s + f;
    let two = T::lit(2.0);
    match b {
        DilationBranch::Generic => None,
        DilationBranch::A => Some(-j / (w * w)),
        DilationBranch::B => Some(-e / ((s + two) * (s + two) * w * w)),
        DilationBranch::C => Some((two * f - e - j) / ((s - T::one()) * (s - T::one()) * w * w)),
    }
}

/// Printed Gaussian curvature of the spiral family at `u` with state `(e, j, f)`.
pub fn spiral_curvature<T: Real>(u: T, y: [T; 3], k: T) -> T {
    let [e, j, f] = y;
    let two = T::lit(2.0);
    let d = spiral_delta(y.map(Jet2::constant), k).re;
    let a = j * (two * f - j);
    let b = e * (two * f - e);
    let bracket = a * k.powi(4) + two * a * k.powi(3) - two * b * k - b;
    k * (k + T::one()) * bracket / (T::lit(4.0) * u.exp() * d * d * d)
}

/// Dense solution of one of the reduced systems.
#[derive(Debug, Clone)]
pub struct OdeSolution<T = f64> {
    pub spec: OdeFamilySpec,
    table: DenseTable<T, 3>,
    nodes: Vec<T>,
}

const DELTA_TOL: f64 = 1e-9;

fn table_cfg<T: Real>() -> IntegratorConfig<T> {
    IntegratorConfig {
        rel_tol: T::lit(1e-13),
        abs_tol: T::lit(1e-15),
        max_step: T::lit(2e-3),
        initial_step: T::lit(1e-4),
        max_steps: 2_000_000,
    }
}

impl<T: Real> OdeSolution<T> {
    /// `(e, j, f)` at `s`.
    pub fn eval(&self, s: T) -> [T; 3] {
        let y = self.table.eval(s);
        match self.spec.family {
            OdeFamily::Discr => [discr_e(Jet2::constant(s), Jet2::constant(y[0]), Jet2::constant(y[1])).re, y[0], y[1]],
            _ => y,
        }
    }

    pub fn range(&self) -> (T, T) {
        self.table.range()
    }

    /// The `s` values of the accepted integration steps.
    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    fn kappa(&self) -> T {
        T::lit(self.spec.kappa)
    }

    /// `(e, j, f)` as jets in the single variable `s`.
    pub fn jets_1d(&self, s: T) -> Result<[Jet2<T>; 3]> {
        let (a, b) = self.range();
        if !(s >= a && s <= b) {
            return Err(HexError::InvalidParameter(format!("s = {} outside the solved interval", s.as_f64())));
        }
        let y = self.table.eval(s);
        let k = self.kappa();
        let c = Jet2::constant;
        match self.spec.family {
            OdeFamily::Discr => {
                let y2 = [y[0], y[1]];
                let d1 = discr_rhs(c(s), y2.map(c)).map(|x| x.re);
                let lin: [Jet2<T>; 2] =
                    std::array::from_fn(|i| Jet2::new(y2[i], d1[i], T::zero(), T::zero(), T::zero(), T::zero()));
                let d2 = discr_rhs(Jet2::var_x(s), lin).map(|x| x.dx);
                let jf: [Jet2<T>; 2] =
                    std::array::from_fn(|i| Jet2::new(y2[i], d1[i], T::zero(), d2[i], T::zero(), T::zero()));
                let e = discr_e(Jet2::var_x(s), jf[0], jf[1]);
                Ok([e, jf[0], jf[1]])
            }
            fam => {
                let rhs = |sj: Jet2<T>, yj: [Jet2<T>; 3]| match fam {
                    OdeFamily::Spiral => spiral_rhs(yj, k),
                    _ => dilation_rhs(sj, yj, k),
                };
                let d1 = rhs(c(s), y.map(c)).map(|x| x.re);
                let lin: [Jet2<T>; 3] =
                    std::array::from_fn(|i| Jet2::new(y[i], d1[i], T::zero(), T::zero(), T::zero(), T::zero()));
                let d2 = rhs(Jet2::var_x(s), lin).map(|x| x.dx);
                Ok(std::array::from_fn(|i| Jet2::new(y[i], d1[i], T::zero(), d2[i], T::zero(), T::zero())))
            }
        }
    }

    /// Metric jets at `(u, v)`.
    pub fn metric(&self, u: T, v: T) -> Result<MetricJet2<T>> {
        let (ju, jv) = Jet2::seed(u, v);
        let (s, pre) = match self.spec.family {
            OdeFamily::Spiral => (jv - ju * self.kappa(), ju.exp()),
            _ => {
                if !(u > T::zero()) {
                    return Err(HexError::InvalidParameter("dilation family needs u > 0".into()));
                }
                (jv / ju, Scalar::powf(ju, self.kappa()))
            }
        };
        let y = self.jets_1d(s.re)?;
        let z = Jet2::constant(T::zero());
        let [e, j, f] = y.map(|x| x.compose(s, z) * pre);
        Ok(MetricJet2::new(e, f, j))
    }

    fn s_range(spec: &OdeFamilySpec) -> Result<(f64, f64)> {
        let [u0, u1, v0, v1] = spec.domain;
        if !(u0 < u1 && v0 < v1) {
            return Err(HexError::InvalidParameter("empty domain".into()));
        }
        let corners = [(u0, v0), (u0, v1), (u1, v0), (u1, v1)];
        let s: Vec<f64> = match spec.family {
            OdeFamily::Spiral => corners.iter().map(|(u, v)| v - spec.kappa * u).collect(),
            _ => {
                if !(u0 > 0.0) {
                    return Err(HexError::InvalidParameter("dilation domain must have u > 0".into()));
                }
                corners.iter().map(|(u, v)| v / u).collect()
            }
        };
        let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let pad = 0.02 * (hi - lo).max(1e-3);
        Ok((lo.min(spec.s0) - pad, hi.max(spec.s0) + pad))
    }

    pub fn solve(spec: &OdeFamilySpec) -> Result<Self> {
        let (lo, hi) = Self::s_range(spec)?;
        let s0 = T::lit(spec.s0);
        let k = T::lit(spec.kappa);
        let cfg = table_cfg::<T>();
        let (fwd, bwd) = match spec.family {
            OdeFamily::Discr => {
                if spec.kappa != 0.0 {
                    return Err(HexError::InvalidParameter("the degenerate branch forces kappa = 0".into()));
                }
                for bad in [1.0, -0.5, -2.0] {
                    if (lo..=hi).contains(&bad) {
                        return Err(HexError::InvalidParameter(format!("s-interval contains the pole s = {bad}")));
                    }
                }
                let y0 = [T::lit(spec.j0), T::lit(spec.f0)];
                let rhs = |s: T, y: &[T; 3]| {
                    let c = Jet2::constant;
                    let w = y[0] * s + y[1];
                    if w.abs() < T::lit(DELTA_TOL) * (y[0].abs() + y[1].abs()) {
                        return None;
                    }
                    let d = discr_rhs(c(s), [c(y[0]), c(y[1])]);
                    Some([d[0].re, d[1].re, T::zero()])
                };
                let f = dopri5(rhs, s0, [y0[0], y0[1], T::zero()], T::lit(hi), &cfg)?;
                let b = dopri5(rhs, s0, [y0[0], y0[1], T::zero()], T::lit(lo), &cfg)?;
                (f, b)
            }
            fam => {
                let y0 = [T::lit(spec.e0), T::lit(spec.j0), T::lit(spec.f0)];
                if fam == OdeFamily::Dilation && spec.branch != DilationBranch::Generic && spec.kappa != -2.0 {
                    return Err(HexError::InvalidParameter("constraint branches need kappa = -2".into()));
                }
                let rhs = move |s: T, y: &[T; 3]| {
                    let c = Jet2::constant;
                    let yj = y.map(c);
                    let (d, scale) = match fam {
                        OdeFamily::Spiral => (
                            spiral_delta(yj, k).re,
                            (T::one() + k.abs()).powi(3) * y.iter().fold(T::zero(), |a, x| a.max(x.abs())),
                        ),
                        _ => (
                            dilation_delta(c(s), yj).re,
                            (T::one() + s.abs()).powi(3) * y.iter().fold(T::zero(), |a, x| a.max(x.abs())),
                        ),
                    };
                    if !(d.abs() > T::lit(DELTA_TOL) * scale) {
                        return None;
                    }
                    let r = match fam {
                        OdeFamily::Spiral => spiral_rhs(yj, k),
                        _ => dilation_rhs(c(s), yj, k),
                    };
                    Some(r.map(|x| x.re))
                };
                if rhs(s0, &y0).is_none() {
                    return Err(HexError::DeltaVanished { s: spec.s0 });
                }
                let f = dopri5(rhs, s0, y0, T::lit(hi), &cfg)?;
                let b = dopri5(rhs, s0, y0, T::lit(lo), &cfg)?;
                (f, b)
            }
        };
        for sol in [&fwd, &bwd] {
            if sol.stop == Stop::Guard {
                return Err(HexError::DeltaVanished { s: sol.last().0.as_f64() });
            }
        }
        let table = DenseTable::from_branches(Some(&bwd), &fwd);
        let nodes = collect_nodes(&bwd, &fwd);
        let out = Self { spec: spec.clone(), table, nodes };
        out.check_positivity()?;
        out.check_constraint()?;
        Ok(out)
    }

    fn check_positivity(&self) -> Result<()> {
        for &s in &self.nodes {
            let [e, j, f] = self.eval(s);
            let det = e * j - f * f;
            if !(e > T::zero() && j > T::zero() && det > T::zero()) {
                return Err(HexError::PositivityViolation { at: s.as_f64(), e: e.as_f64(), det: det.as_f64() });
            }
        }
        Ok(())
    }

    /// Max relative residual of the branch constraint over the nodes.
    pub fn constraint_drift(&self) -> (T, T) {
        let mut worst = (T::zero(), T::lit(self.spec.s0));
        for &s in &self.nodes {
            let r = branch_constraint(self.spec.branch, s, self.eval(s));
            if r > worst.0 {
                worst = (r, s);
            }
        }
        worst
    }

    fn check_constraint(&self) -> Result<()> {
        let (r, s) = self.constraint_drift();
        if !(r < T::lit(1e-8)) {
            return Err(HexError::ConstraintDrift { residual: r.as_f64(), s: s.as_f64() });
        }
        Ok(())
    }

    /// For the spiral family, the same metric in coordinates `(u, s)`, where it
    /// reads `e^u (h du² + 2f̃ du ds + g ds²)` with `h = e + 2κf + κ²j`,
    /// `f̃ = f + κj`, `g = j`.
    pub fn exp_invariant_field(&self) -> Result<MetricField<T>> {
        if self.spec.family != OdeFamily::Spiral {
            return Err(HexError::InvalidParameter("only the spiral family has an e^u-invariant form".into()));
        }
        let [u0, u1, ..] = self.spec.domain.map(T::lit);
        let (a, b) = self.range();
        let k = self.kappa();
        let me = self.clone();
        Ok(MetricField::new(
            format!("spiral(kappa={}) in (u, s)", self.spec.kappa),
            FamilyTag::Spiral,
            Domain::new(u0, u1, a, b),
            move |u, s| {
                let (ju, js) = Jet2::seed(u, s);
                let z = Jet2::constant(T::zero());
                let [e, j, f] = me.jets_1d(s)?.map(|x| x.compose(js, z));
                let pre = ju.exp();
                let h = e + f * (k + k) + j * (k * k);
                Ok(MetricJet2::new(h * pre, (f + j * k) * pre, j * pre))
            },
        ))
    }

    pub fn field(&self) -> MetricField<T> {
        let [u0, u1, v0, v1] = self.spec.domain.map(T::lit);
        let tag = match self.spec.family {
            OdeFamily::Spiral => FamilyTag::Spiral,
            _ => FamilyTag::Dilation,
        };
        let name = match self.spec.family {
            OdeFamily::Spiral => format!("spiral(kappa={})", self.spec.kappa),
            OdeFamily::Dilation => format!("dilation(kappa={}, branch={:?})", self.spec.kappa, self.spec.branch),
            OdeFamily::Discr => "dilation(discriminant branch)".to_string(),
        };
        let me = self.clone();
        MetricField::new(name, tag, Domain::new(u0, u1, v0, v1), move |u, v| me.metric(u, v))
    }
}

fn collect_nodes<T: Real>(bwd: &Solution<T, 3>, fwd: &Solution<T, 3>) -> Vec<T> {
    let mut out: Vec<T> = bwd.t.iter().skip(1).rev().cloned().collect();
    out.extend(fwd.t.iter().cloned());
    out
}

fn check_family(spec: &OdeFamilySpec, want: OdeFamily) -> Result<()> {
    if spec.family != want {
        return Err(HexError::InvalidParameter(format!("expected a {want:?} spec")));
    }
    if !(spec.j0 > 0.0) || (want != OdeFamily::Discr && !(spec.e0 > 0.0 && spec.e0 * spec.j0 - spec.f0 * spec.f0 > 0.0))
    {
        return Err(HexError::PositivityViolation {
            at: spec.s0,
            e: spec.e0,
            det: spec.e0 * spec.j0 - spec.f0 * spec.f0,
        });
    }
    Ok(())
}

pub fn make_spiral_family<T: Real>(spec: &OdeFamilySpec) -> Result<MetricField<T>> {
    check_family(spec, OdeFamily::Spiral)?;
    Ok(OdeSolution::<T>::solve(spec)?.field())
}

pub fn make_dilation_family<T: Real>(spec: &OdeFamilySpec) -> Result<MetricField<T>> {
    check_family(spec, OdeFamily::Dilation)?;
    Ok(OdeSolution::<T>::solve(spec)?.field())
}

pub fn make_discr_family<T: Real>(spec: &OdeFamilySpec) -> Result<MetricField<T>> {
    check_family(spec, OdeFamily::Discr)?;
    Ok(OdeSolution::<T>::solve(spec)?.field())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart_metric::gaussian_curvature;
    use crate::hydro_system::hydro_residual;

    fn max_hydro(f: &MetricField) -> f64 {
        f.domain
            .grid(8)
            .iter()
            .map(|p| {
                let j = f.jet(*p).unwrap();
                hydro_residual(&j).relative(&j)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn spiral_solves_system() {
        let spec = OdeFamilySpec::spiral(1.0, 0.0, 2.0, 1.0, 0.5, [-0.3, 0.3, -0.3, 0.3]);
        let sol = OdeSolution::<f64>::solve(&spec).unwrap();
        let f = sol.field();
        assert!(max_hydro(&f) < 1e-12);
        for p in f.domain.grid(5) {
            let k = gaussian_curvature(&f.jet(p).unwrap()).unwrap();
            let y = sol.eval(p.v - p.u);
            let want = spiral_curvature(p.u, y, 1.0);
            assert!((k - want).abs() < 1e-9 * want.abs().max(1.0), "{k} {want}");
        }
    }

    #[test]
    fn flat_spirals() {
        for kappa in [0.0, -1.0] {
            let spec = OdeFamilySpec::spiral(kappa, 0.0, 2.0, 1.0, 0.5, [-0.3, 0.3, -0.3, 0.3]);
            let f = make_spiral_family::<f64>(&spec).unwrap();
            for p in f.domain.grid(5) {
                assert!(gaussian_curvature(&f.jet(p).unwrap()).unwrap().abs() < 1e-9);
            }
        }
    }

    #[test]
    fn branch_a_constant_curvature() {
        let spec =
            OdeFamilySpec::dilation(-2.0, 1.0, 1.0, 4.0, 0.5, [1.0, 1.5, 1.1, 1.6]).with_branch(DilationBranch::A);
        let sol = OdeSolution::<f64>::solve(&spec).unwrap();
        let f = sol.field();
        assert!(max_hydro(&f) < 1e-10);
        let k0 = branch_curvature(DilationBranch::A, 1.0, [1.0, 4.0, 0.5]).unwrap();
        for p in f.domain.grid(5) {
            let k = gaussian_curvature(&f.jet(p).unwrap()).unwrap();
            assert!((k - k0).abs() < 1e-8, "{k} {k0}");
        }
    }

    #[test]
    fn wrong_constraint_reported() {
        let spec =
            OdeFamilySpec::dilation(-2.0, 1.0, 1.0, 4.0, 0.6, [1.0, 1.5, 1.1, 1.6]).with_branch(DilationBranch::A);
        assert!(matches!(OdeSolution::<f64>::solve(&spec), Err(HexError::ConstraintDrift { .. })));
    }

    #[test]
    fn discr_branch() {
        let spec = OdeFamilySpec::discr(0.5, 1.0, 0.5, [1.6, 2.0, 0.65, 1.05]);
        let f = make_discr_family::<f64>(&spec).unwrap();
        assert!(max_hydro(&f) < 1e-10);
        let ks: Vec<f64> = f.domain.grid(4).iter().map(|p| gaussian_curvature(&f.jet(*p).unwrap()).unwrap()).collect();
        let spread =
            ks.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - ks.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread > 1e-4);
    }
}
