//! The quasilinear system satisfied by web-adapted metrics, its characteristic
//! speeds and Riemann invariants.
//!
//! Writing `Z = (E, F, G)` the system reads `A(Z) Z_u + B(Z) Z_v = 0` with
//! residual components
//!
//! ```text
//! r1 = 2E Fu - F Eu - E Ev
//! r2 = 2G Fv - F Gv - G Gu
//! r3 = G Eu + E Gv - 2F (Fu + Fv) + (3F - 2G) Ev + (3F - 2E) Gu
//! ```
//!
//! The speeds are the roots of `G λ³ + (F - 2G) λ² + (F - 2E) λ + E = 0`.

use num_complex::Complex;
use num_traits::Float;
use serde::Serialize;

use crate::chart_metric::{ChartPoint, MetricField, MetricJet2};
use crate::cubic;
use crate::error::{HexError, Result};
use crate::jet::Jet2;
use crate::linalg;
use crate::ode::{dopri5, IntegratorConfig};
use crate::scalar::{Real, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct HydroResidual<T = f64> {
    pub r1: T,
    pub r2: T,
    pub r3: T,
}

impl<T: Real> HydroResidual<T> {
    pub fn max_abs(&self) -> T {
        self.r1.abs().max(self.r2.abs()).max(self.r3.abs())
    }

    /// Residual divided by the magnitude of the individual terms.
    pub fn relative(&self, jet: &MetricJet2<T>) -> T {
        let s = hydro_terms_scale(jet);
        if s == T::zero() {
            T::zero()
        } else {
            self.max_abs() / s
        }
    }
}

fn hydro_terms_scale<T: Real>(j: &MetricJet2<T>) -> T {
    let (e, f, g) = (j.E().abs(), j.F().abs(), j.G().abs());
    let d = [j.Eu(), j.Ev(), j.Fu(), j.Fv(), j.Gu(), j.Gv()].iter().fold(T::zero(), |a, x| a.max(x.abs()));
    (e.max(f).max(g)) * d
}

pub fn hydro_residual<T: Real>(j: &MetricJet2<T>) -> HydroResidual<T> {
    let (e, f, g) = (j.E(), j.F(), j.G());
    let (eu, ev, fu, fv, gu, gv) = (j.Eu(), j.Ev(), j.Fu(), j.Fv(), j.Gu(), j.Gv());
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    HydroResidual {
        r1: two * e * fu - f * eu - e * ev,
        r2: two * g * fv - f * gv - g * gu,
        r3: g * eu + e * gv - two * f * (fu + fv) + (three * f - two * g) * ev + (three * f - two * e) * gu,
    }
}

/// Roots of the characteristic cubic, sorted by real part then imaginary part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharSpeeds<T = f64> {
    pub lambda: [Complex<T>; 3],
}

impl<T: Real> CharSpeeds<T> {
    /// The three speeds when all are real.
    pub fn real(&self) -> Option<[T; 3]> {
        if self.lambda.iter().all(|z| z.im == T::zero()) {
            Some(self.lambda.map(|z| z.re))
        } else {
            None
        }
    }

    /// Relative Vieta residuals against the cubic of `jet`.
    pub fn vieta_residuals(&self, jet: &MetricJet2<T>) -> [T; 3] {
        let [a, b, c] = self.lambda;
        let (e, f, g) = (jet.E(), jet.F(), jet.G());
        let s1 = a + b + c;
        let s2 = a * b + b * c + c * a;
        let s3 = a * b * c;
        let t1 = (T::lit(2.0) * g - f) / g;
        let t2 = (f - T::lit(2.0) * e) / g;
        let t3 = -e / g;
        let rel = |x: Complex<T>, t: T| (x - t).norm() / (T::one() + t.abs());
        [rel(s1, t1), rel(s2, t2), rel(s3, t3)]
    }

    /// `Σ λiλj + Σ λi - 2 - 2 λ1λ2λ3`, which vanishes identically.
    pub fn identity_residual(&self) -> T {
        let [a, b, c] = self.lambda;
        let two = T::lit(2.0);
        (a * b + b * c + c * a + a + b + c - two - a * b * c * two).norm()
    }
}

pub fn characteristic_speeds<T: Real>(jet: &MetricJet2<T>) -> Result<CharSpeeds<T>> {
    let (e, f, g) = (jet.E(), jet.F(), jet.G());
    if g.abs() <= T::lit(1e-12) * jet.scale() || g == T::zero() {
        return Err(HexError::LeadingCoefficientZero { g: g.as_f64() });
    }
    let two = T::lit(2.0);
    Ok(CharSpeeds { lambda: cubic::roots(g, f - two * g, f - two * e, e) })
}

/// Real characteristic speeds as jets in the chart variables.
pub fn speeds_jet<T: Real>(jet: &MetricJet2<T>) -> Result<[Jet2<T>; 3]> {
    let speeds = characteristic_speeds(jet)?;
    let re = speeds.real().ok_or(HexError::ComplexSpeeds)?;
    let two = T::lit(2.0);
    let coef = [jet.g, jet.f - jet.g * two, jet.f - jet.e * two, jet.e];
    Ok(re.map(|l| cubic::lift_root(coef, l)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiemannInvariants<T = f64> {
    pub r1: T,
    pub r2: T,
    pub r3: T,
}

impl<T: Real> RiemannInvariants<T> {
    pub fn as_array(&self) -> [T; 3] {
        [self.r1, self.r2, self.r3]
    }
}

/// The five denominator factors of the invariant `R(a, b, F)`.
pub fn invariant_denominators<S: Scalar>(a: S, b: S) -> [S; 5] {
    let n = |x: f64| <S::Re as Real>::lit(x);
    let ab = a * b;
    [
        ab * n(2.0) - a - b - S::lit(1.0),
        ab + a + b - S::lit(2.0),
        ab - a * n(2.0) - b * n(2.0) + S::lit(1.0),
        ab * n(2.0) - a - b + S::lit(2.0),
        a * a * b * n(2.0) + a * b * b * n(2.0) + (a + b) * n(2.0) - ab * n(5.0) - a * a - b * b,
    ]
}

/// `R(a, b, F)`; with sorted speeds `R1 = R(λ2, λ3)`, `R2 = R(λ3, λ1)`, `R3 = R(λ1, λ2)`.
pub fn invariant_phi<S: Scalar>(a: S, b: S, f: S) -> Result<S> {
    let n = |x: f64| <S::Re as Real>::lit(x);
    let dens = invariant_denominators(a, b);
    let scale = <S::Re as num_traits::One>::one() + a.re().abs().max(b.re().abs());
    for (i, (d, deg)) in dens.iter().zip([2, 2, 2, 2, 3]).enumerate() {
        if !(d.re().abs() > <S::Re as Real>::lit(1e-10) * scale.powi(deg)) {
            return Err(HexError::DenominatorBlowup { factor: i + 1, value: d.re().as_f64() });
        }
    }
    let ab = a * b;
    let n1 = ab * n(2.0) + b * b - a - b * n(2.0);
    let n2 = ab * n(2.0) + a * a - a * n(2.0) - b;
    let den = dens[0] * dens[1] * dens[2] * dens[3] * dens[4];
    Ok(f * n1 * n1 * n2 * n2 / den)
}

/// All three invariants from sorted speeds and `F`, generic over jets.
pub fn invariants_of<S: Scalar>(f: S, l: [S; 3]) -> Result<[S; 3]> {
    Ok([invariant_phi(l[1], l[2], f)?, invariant_phi(l[2], l[0], f)?, invariant_phi(l[0], l[1], f)?])
}

pub fn riemann_invariants<T: Real>(f: T, speeds: &CharSpeeds<T>) -> Result<RiemannInvariants<T>> {
    let l = speeds.real().ok_or(HexError::ComplexSpeeds)?;
    let [r1, r2, r3] = invariants_of(Jet2::constant(f), l.map(Jet2::constant))?.map(|x| x.re);
    Ok(RiemannInvariants { r1, r2, r3 })
}

/// Invariants of a metric jet.
pub fn invariants_at<T: Real>(jet: &MetricJet2<T>) -> Result<RiemannInvariants<T>> {
    riemann_invariants(jet.F(), &characteristic_speeds(jet)?)
}

/// Solves the identity among the speeds for `λ1` given `λ2`, `λ3`.
pub fn lambda1_from<S: Scalar>(l2: S, l3: S) -> Result<S> {
    let n = |x: f64| <S::Re as Real>::lit(x);
    let den = l2 + l3 + S::lit(1.0) - l2 * l3 * n(2.0);
    let s = <S::Re as num_traits::One>::one() + l2.re().abs().max(l3.re().abs());
    if !(den.re().abs() > <S::Re as Real>::lit(1e-12) * s * s) {
        return Err(HexError::LinearSolveSingular { value: den.re().as_f64() });
    }
    Ok((S::lit(2.0) - l2 * l3 - l2 - l3) / den)
}

/// Recovers `(E, F, G)` from sorted speeds and `F` via Vieta.
pub fn metric_from_speeds<S: Scalar>(l: [S; 3], f: S) -> [S; 3] {
    let g = f / (S::lit(2.0) - l[0] - l[1] - l[2]);
    let e = -(g * l[0] * l[1] * l[2]);
    [e, f, g]
}

/// Inverts `(λ2, λ3, F) -> (R1, R2, R3)` near a known real solution `x0`,
/// evaluated on jet targets. Returns speeds and `F` as jets.
fn invert_invariants<T: Real>(target: [Jet2<T>; 3], x0: [T; 3]) -> Result<([Jet2<T>; 3], Jet2<T>)> {
    let eval = |l2: Jet2<T>, l3: Jet2<T>, f: Jet2<T>| -> Result<[Jet2<T>; 3]> {
        let l1 = lambda1_from(l2, l3)?;
        invariants_of(f, [l1, l2, l3])
    };
    // exact Jacobian at the base point
    let (s2, s3) = Jet2::seed(x0[0], x0[1]);
    let base = eval(s2, s3, Jet2::constant(x0[2]))?;
    let mut jac = [[T::zero(); 3]; 3];
    for r in 0..3 {
        jac[r] = [base[r].dx, base[r].dy, base[r].re / x0[2]];
    }
    let inv = linalg::inverse3(jac).ok_or(HexError::NonInvertibleInvariantChart { ratio: 0.0 })?;
    let mut x = x0.map(Jet2::constant);
    for _ in 0..5 {
        let r = eval(x[0], x[1], x[2])?;
        let res = [r[0] - target[0], r[1] - target[1], r[2] - target[2]];
        let mut nx = x;
        for a in 0..3 {
            let mut step = Jet2::constant(T::zero());
            for b in 0..3 {
                step += res[b] * inv[a][b];
            }
            nx[a] = x[a] - step;
        }
        x = nx;
    }
    let l1 = lambda1_from(x[0], x[1])?;
    Ok(([l1, x[0], x[1]], x[2]))
}

/// Real-valued inversion by Newton iteration with exact Jacobians.
fn invert_invariants_real<T: Real>(target: [T; 3], mut x: [T; 3]) -> Result<[T; 3]> {
    for _ in 0..60 {
        let (s2, s3) = Jet2::seed(x[0], x[1]);
        let f = Jet2::constant(x[2]);
        let l1 = lambda1_from(s2, s3)?;
        let r = invariants_of(f, [l1, s2, s3])?;
        let mut jac = [[T::zero(); 3]; 3];
        let mut res = [T::zero(); 3];
        for k in 0..3 {
            jac[k] = [r[k].dx, r[k].dy, r[k].re / x[2]];
            res[k] = r[k].re - target[k];
        }
        let step = linalg::solve3(jac, res).ok_or(HexError::NonInvertibleInvariantChart { ratio: 0.0 })?;
        let mut small = true;
        for k in 0..3 {
            x[k] = x[k] - step[k];
            if step[k].abs() > T::epsilon() * T::lit(4.0) * (T::one() + x[k].abs()) {
                small = false;
            }
        }
        if small {
            return Ok(x);
        }
    }
    Ok(x)
}

fn check_indices(i: usize, j: usize, k: usize) -> Result<()> {
    let ok = (1..=3).contains(&i) && (1..=3).contains(&j) && (1..=3).contains(&k) && i != j && j != k && i != k;
    if ok {
        Ok(())
    } else {
        Err(HexError::BadIndices { i, j, k })
    }
}

struct SemiHBase<T> {
    r0: [T; 3],
    x0: [T; 3],
}

fn semi_h_base<T: Real>(field: &MetricField<T>, p: ChartPoint<T>, j: usize, k: usize) -> Result<SemiHBase<T>> {
    let jet = field.jet(p)?;
    let lj = speeds_jet(&jet)?;
    let r = invariants_of(jet.f, lj)?;
    // rank of (u, v) -> (Rj, Rk)
    let (a, b) = (r[j - 1], r[k - 1]);
    let det = a.dx * b.dy - a.dy * b.dx;
    let na = (a.dx * a.dx + a.dy * a.dy).sqrt();
    let nb = (b.dx * b.dx + b.dy * b.dy).sqrt();
    let nmax = r.iter().fold(T::zero(), |m, x| m.max((x.dx * x.dx + x.dy * x.dy).sqrt()));
    let tiny = T::lit(1e-8) * nmax;
    let ratio = if na <= tiny || nb <= tiny { T::zero() } else { det.abs() / (na * nb) };
    if !(ratio > T::lit(1e-8)) {
        return Err(HexError::NonInvertibleInvariantChart { ratio: ratio.as_f64() });
    }
    let l = lj.map(|x| x.re);
    Ok(SemiHBase { r0: r.map(|x| x.re), x0: [l[1], l[2], jet.F()] })
}

fn semi_h_expr<T: Real>(l: [Jet2<T>; 3], i: usize, j: usize, k: usize) -> Result<T> {
    let (li, lj, lk) = (l[i - 1], l[j - 1], l[k - 1]);
    let dj = lj - li;
    let dk = lk - li;
    let gap = dj.re.abs().min(dk.re.abs());
    if !(gap > T::lit(1e-10)) {
        return Err(HexError::CoincidingSpeeds { gap: gap.as_f64() });
    }
    // x = Rj, y = Rk
    let a = (li.dxy * dj.re - li.dx * dj.dy) / (dj.re * dj.re);
    let b = (li.dxy * dk.re - li.dy * dk.dx) / (dk.re * dk.re);
    Ok(a - b)
}

/// `∂k(∂jλi / (λj - λi)) - ∂j(∂kλi / (λk - λi))` at the hodograph point of `p`,
/// derivatives taken in Riemann-invariant coordinates with `Ri` held fixed.
pub fn semi_hamiltonian_residual<T: Real>(
    field: &MetricField<T>,
    p: ChartPoint<T>,
    i: usize,
    j: usize,
    k: usize,
) -> Result<T> {
    check_indices(i, j, k)?;
    let base = semi_h_base(field, p, j, k)?;
    let mut target = base.r0.map(Jet2::constant);
    target[j - 1] = Jet2::var_x(base.r0[j - 1]);
    target[k - 1] = Jet2::var_y(base.r0[k - 1]);
    let (l, _) = invert_invariants(target, base.x0)?;
    semi_h_expr(l, i, j, k)
}

/// Same quantity with all derivatives from central differences of step
/// `h * max(|R|, 1e-3)` in each invariant.
pub fn semi_hamiltonian_fd<T: Real>(
    field: &MetricField<T>,
    p: ChartPoint<T>,
    i: usize,
    j: usize,
    k: usize,
    h: T,
) -> Result<T> {
    check_indices(i, j, k)?;
    let base = semi_h_base(field, p, j, k)?;
    let hj = h * base.r0[j - 1].abs().max(T::lit(1e-3));
    let hk = h * base.r0[k - 1].abs().max(T::lit(1e-3));
    let mut vals = [[[T::zero(); 3]; 3]; 3];
    for (ai, a) in [-1i32, 0, 1].iter().enumerate() {
        for (bi, b) in [-1i32, 0, 1].iter().enumerate() {
            let mut t = base.r0;
            t[j - 1] = t[j - 1] + hj * T::from_i32(*a).unwrap();
            t[k - 1] = t[k - 1] + hk * T::from_i32(*b).unwrap();
            let x = invert_invariants_real(t, base.x0)?;
            let l1 = lambda1_from(Jet2::constant(x[0]), Jet2::constant(x[1]))?.re;
            vals[ai][bi] = [l1, x[0], x[1]];
        }
    }
    let two = T::lit(2.0);
    let jet_of = |m: usize| -> Jet2<T> {
        let f = |a: usize, b: usize| vals[a][b][m];
        Jet2::new(
            f(1, 1),
            (f(2, 1) - f(0, 1)) / (two * hj),
            (f(1, 2) - f(1, 0)) / (two * hk),
            T::zero(),
            (f(2, 2) - f(2, 0) - f(0, 2) + f(0, 0)) / (T::lit(4.0) * hj * hk),
            T::zero(),
        )
    };
    semi_h_expr([jet_of(0), jet_of(1), jet_of(2)], i, j, k)
}

/// Integrates the characteristic curve `dv/du = -λk` from `p0` over a `u`-length
/// `len` and returns the maximal relative variation of `Rk` along it.
pub fn invariant_transport_defect<T: Real>(
    field: &MetricField<T>,
    p0: ChartPoint<T>,
    k: usize,
    len: T,
    cfg: &IntegratorConfig<T>,
) -> Result<T> {
    if !(1..=3).contains(&k) {
        return Err(HexError::BadIndices { i: k, j: k, k });
    }
    let r_at = |u: T, v: T| -> Result<T> { Ok(invariants_at(&field.jet_at(u, v)?)?.as_array()[k - 1]) };
    let r0 = r_at(p0.u, p0.v)?;
    let dom = field.domain;
    let sol = dopri5(
        |u: T, y: &[T; 1]| {
            if !dom.contains(u, y[0]) {
                return None;
            }
            let jet = field.jet_at(u, y[0]).ok()?;
            let l = characteristic_speeds(&jet).ok()?.real()?;
            Some([-l[k - 1]])
        },
        p0.u,
        [p0.v],
        p0.u + len,
        cfg,
    )?;
    let mut worst = T::zero();
    for (u, y) in sol.t.iter().zip(sol.y.iter()) {
        let r = r_at(*u, y[0])?;
        worst = worst.max((r - r0).abs() / r0.abs().max(T::one()));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_jet_solves_system() {
        let j = MetricJet2::constant(1.3, 0.2, 0.9);
        assert_eq!(hydro_residual(&j).max_abs(), 0.0);
    }

    #[test]
    fn non_solution_residual() {
        let (u, _) = Jet2::seed(0.5, 0.0);
        let j = MetricJet2::new(u + 1.0, Jet2::constant(0.0), Jet2::constant(1.0));
        let r = hydro_residual(&j);
        assert_eq!((r.r1, r.r2, r.r3), (0.0, 0.0, 1.0));
    }

    #[test]
    fn flat_speeds() {
        let s = characteristic_speeds(&MetricJet2::constant(1.0, 0.0, 1.0)).unwrap();
        let l = s.real().unwrap();
        let r5 = 5f64.sqrt();
        assert!((l[0] + 1.0).abs() < 1e-12);
        assert!((l[1] - (3.0 - r5) / 2.0).abs() < 1e-12);
        assert!((l[2] - (3.0 + r5) / 2.0).abs() < 1e-12);
        assert!(s.identity_residual() < 1e-12);
    }

    #[test]
    fn speeds_resubstitute_for_f_two() {
        let j = MetricJet2::constant(1.0, 2.0, 1.0);
        let s = characteristic_speeds(&j).unwrap();
        for z in s.lambda {
            let p = ((z * 1.0 + 0.0) * z + 0.0) * z + 1.0;
            assert!(p.norm() < 1e-12);
        }
        assert!(s.vieta_residuals(&j).iter().all(|r| *r < 1e-12));
    }

    #[test]
    fn zero_g_is_reported() {
        let j = MetricJet2::constant(1.0, 0.5, 0.0);
        assert!(matches!(characteristic_speeds(&j), Err(HexError::LeadingCoefficientZero { .. })));
    }

    #[test]
    fn invariants_cycle_with_speeds() {
        let l = [-1.2, 0.4, 2.5];
        let r = invariants_of(0.3, l).unwrap();
        let rc = invariants_of(0.3, [l[1], l[2], l[0]]).unwrap();
        assert!((rc[0] - r[1]).abs() < 1e-12 * r[1].abs().max(1.0));
        assert!((rc[1] - r[2]).abs() < 1e-12 * r[2].abs().max(1.0));
        assert!((rc[2] - r[0]).abs() < 1e-12 * r[0].abs().max(1.0));
    }

    #[test]
    fn lambda1_singular() {
        // l2 + l3 + 1 - 2 l2 l3 = 0 at l2 = 1, l3 = 2
        assert!(matches!(lambda1_from(1.0, 2.0), Err(HexError::LinearSolveSingular { .. })));
    }

    #[test]
    fn inversion_round_trip() {
        let jet = MetricJet2::constant(1.3, 0.2, 0.9);
        let l = characteristic_speeds(&jet).unwrap().real().unwrap();
        let r = invariants_of(0.2, l).unwrap();
        let x = invert_invariants_real(r, [l[1] + 0.01, l[2] - 0.02, 0.21]).unwrap();
        assert!((x[0] - l[1]).abs() < 1e-10 && (x[1] - l[2]).abs() < 1e-10 && (x[2] - 0.2).abs() < 1e-10);
        let [e, f, g] = metric_from_speeds(l, 0.2);
        assert!((e - 1.3).abs() < 1e-12 && (f - 0.2).abs() < 1e-15 && (g - 0.9).abs() < 1e-12);
    }

    #[test]
    fn bad_indices() {
        let f = crate::generators::constant_curvature::flat::<f64>();
        let p = f.domain.center();
        assert!(matches!(semi_hamiltonian_residual(&f, p, 1, 1, 2), Err(HexError::BadIndices { .. })));
    }
}
