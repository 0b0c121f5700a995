//! generate → integrate → verify → report.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{Check, Command, FamilyConfig, RunConfig};
use super::csv as csv_out;
use super::report::{to_fixed_json, CheckResult, Status, VerificationReport, SCHEMA_VERSION};
use super::svg::{emit_svg, DualScene};
use crate::chart_metric::{gaussian_curvature, ChartPoint, Domain, FamilyTag, MetricField, MetricJet2};
use crate::duality::{dim2_web, planarity_check, web_from_planes_on, Regime, SlopeTriple, TripleReport};
use crate::error::{HexError, Result};
use crate::generators::ode_family::{branch_curvature, spiral_curvature};
use crate::generators::{
    immerse_lie_spiral, make_constant_curvature, make_simple_wave, make_translation_family, translation_curvature,
    DilationBranch, OdeFamily, OdeSolution,
};
use crate::geodesic_flow::{
    conservation_report, cubic_integral_from_solution, integrate_geodesic, random_starts, relative_bracket, CubicForm,
    PhaseFn, Trajectory, CALIBRATION_TOL,
};
use crate::hydro_system::{hydro_residual, invariants_at, semi_hamiltonian_fd, semi_hamiltonian_residual};
use crate::jet::Jet2;
use crate::ode::IntegratorConfig;
use crate::web3::{
    blaschke_curvature, hexagon_closure_defect, max_blaschke, trace_leaf, Direction, Web3Field, WebSource,
};

pub const PDE_TOL_ANALYTIC: f64 = 1e-9;
pub const PDE_TOL_NUMERIC: f64 = 1e-6;
pub const BRACKET_TOL: f64 = 1e-8;
/// Orders of magnitude by which the rejected exponent must fail.
pub const REJECTION_ORDERS: f64 = 5.0;
pub const CONSERVATION_TOL: f64 = 1e-8;
pub const BLASCHKE_TOL: f64 = 1e-7;
pub const CLOSURE_TOL: f64 = 1e-7;
pub const CONTROL_MIN: f64 = 1e-4;
/// Rotation strength of the non-hexagonal control web.
pub const CONTROL_STRENGTH: f64 = 0.5;
pub const CURVATURE_TOL: f64 = 1e-8;
pub const SPIRAL_CURVATURE_TOL: f64 = 1e-6;
pub const FLAT_TOL: f64 = 1e-9;
/// Agreement with the curvature of a central-difference metric jet.
pub const FD_CURVATURE_TOL: f64 = 1e-5;
pub const SEMIH_TOL: f64 = 1e-4;
pub const INVARIANT_TOL: f64 = 1e-7;
pub const PCA_TOL: f64 = 1e-6;
pub const LIE_TOL: f64 = 1e-6;
pub const DIM3_TOL: f64 = 1e-8;
pub const DIM2_TOL: f64 = 1e-10;
pub const PFAFF_TOL: f64 = 1e-6;
pub const PLANARITY_TOL: f64 = 1e-7;
pub const ORBIT_TOL: f64 = 1e-10;

/// What the family section generates.
enum Subject {
    Metric { field: MetricField, ode: Option<OdeSolution> },
    Dual(SlopeTriple),
}

fn generate(family: &FamilyConfig) -> Result<Subject> {
    Ok(match family {
        FamilyConfig::Translation(s) => Subject::Metric { field: make_translation_family(s)?, ode: None },
        FamilyConfig::Ode(s) => {
            let sol = OdeSolution::solve(s)?;
            Subject::Metric { field: sol.field(), ode: Some(sol) }
        }
        FamilyConfig::SimpleWave(s) => Subject::Metric { field: make_simple_wave(s)?, ode: None },
        FamilyConfig::ConstantCurvature { curvature } => {
            Subject::Metric { field: make_constant_curvature(*curvature), ode: None }
        }
        FamilyConfig::DualDim3 { eps, plane, domain } => {
            let [z0, z1, y0, y1] = *domain;
            Subject::Dual(web_from_planes_on(*eps, *plane, Domain::new(z0, z1, y0, y1))?)
        }
        FamilyConfig::DualDim2(s) => Subject::Dual(dim2_web(s)?),
    })
}

/// The web of a slope triple as a chart web in `(z, y)`.
pub fn web_of_triple(t: &SlopeTriple) -> Web3Field {
    let src = match t.regime {
        Regime::Dim3 => WebSource::DualDim3,
        Regime::Dim2 { .. } => WebSource::DualDim2,
    };
    let t = t.clone();
    Web3Field::new(t.domain, src, move |z, y| Ok(t.slopes(z, y)?.map(Direction::from_slope)))
}

fn euclidean(domain: Domain) -> MetricField {
    MetricField::analytic("euclidean", FamilyTag::Flat, domain, |_, _| {
        [Jet2::constant(1.0), Jet2::constant(0.0), Jet2::constant(1.0)]
    })
}

fn grid_label(n: usize) -> String {
    format!("{n}x{n}")
}

fn uv(p: ChartPoint) -> [(&'static str, f64); 2] {
    [("u", p.u), ("v", p.v)]
}

/// Worst value of `f` over the points, with the point it occurs at.
fn worst_over<F>(pts: &[ChartPoint], f: F) -> Result<(f64, ChartPoint)>
where
    F: Fn(ChartPoint) -> Result<f64> + Sync,
{
    let vals: Vec<Result<(f64, ChartPoint)>> = pts.par_iter().map(|p| f(*p).map(|x| (x, *p))).collect();
    let mut best = (f64::NEG_INFINITY, pts.first().copied().unwrap_or_default());
    for v in vals {
        let (x, p) = v?;
        if !(x <= best.0) {
            best = (x, p);
        }
    }
    Ok(best)
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: VerificationReport,
    pub json: String,
    /// Wall-clock seconds per check, kept out of the report so it stays reproducible.
    pub timing: BTreeMap<String, f64>,
    pub files: Vec<PathBuf>,
}

struct MetricCtx<'a> {
    cfg: &'a RunConfig,
    field: &'a MetricField,
    ode: Option<&'a OdeSolution>,
    icfg: IntegratorConfig,
    integral: Option<Result<CubicForm>>,
    web: Option<Result<Web3Field>>,
}

impl MetricCtx<'_> {
    fn integral(&mut self) -> Result<CubicForm> {
        if self.integral.is_none() {
            self.integral = Some(cubic_integral_from_solution(self.field));
        }
        self.integral.clone().expect("set")
    }

    fn web(&mut self) -> Result<Web3Field> {
        if self.web.is_none() {
            let w = self.integral().and_then(|i| crate::web3::web_from_cubic_integral(self.field, &i));
            self.web = Some(w);
        }
        self.web.clone().expect("set")
    }
}

fn pde_check(ctx: &MetricCtx) -> CheckResult {
    let tol = if ctx.cfg.family.is_analytic() { PDE_TOL_ANALYTIC } else { PDE_TOL_NUMERIC };
    let n = ctx.cfg.grid.n;
    let c = CheckResult::new("pde", tol, grid_label(n));
    if let Err(e) = ctx.field.check_grid(n) {
        return c.failed(&e);
    }
    match worst_over(&ctx.field.domain.grid(n), |p| {
        let j = ctx.field.jet(p)?;
        Ok(hydro_residual(&j).relative(&j))
    }) {
        Ok((r, p)) => c.judge(r).at(&uv(p)),
        Err(e) => c.failed(&e),
    }
}

fn integral_check(ctx: &mut MetricCtx, mu: &mut Option<crate::geodesic_flow::MuDecision>) -> CheckResult {
    let g = &ctx.cfg.grid;
    let c = CheckResult::new("integral", BRACKET_TOL, format!("{} phase points", g.probe));
    let i = match ctx.integral() {
        Ok(i) => i,
        Err(e) => return c.failed(&e),
    };
    let d = i.mu.expect("calibrated integral carries its decision");
    *mu = Some(d);
    let starts = match random_starts(ctx.field, g.probe, g.t_span, ctx.cfg.seed) {
        Ok(s) => s,
        Err(e) => return c.failed(&e),
    };
    let mut worst = (0.0f64, starts[0]);
    for x in &starts {
        match relative_bracket(ctx.field, &PhaseFn::Cubic(&i), &PhaseFn::Hamiltonian, x) {
            Ok(r) if !(r <= worst.0) => worst = (r, *x),
            Ok(_) => {}
            Err(e) => return c.failed(&e),
        }
    }
    let rejected = if d.exponent == 1 { d.residual_m2 } else { d.residual_m1 };
    let margin_ok = d.indistinguishable || rejected >= CALIBRATION_TOL * 10f64.powf(REJECTION_ORDERS);
    let x = worst.1;
    c.judge(worst.0)
        .and(margin_ok)
        .at(&[("u", x.u), ("v", x.v), ("p", x.p), ("q", x.q)])
        .with("mu_exponent", d.exponent as f64)
        .with("residual_m1", d.residual_m1)
        .with("residual_m2", d.residual_m2)
        .with("rejected_residual", rejected)
}

fn conservation_check(ctx: &mut MetricCtx) -> CheckResult {
    let g = &ctx.cfg.grid;
    let c = CheckResult::new(
        "conservation",
        CONSERVATION_TOL,
        format!("{} geodesics, t in [0, {}]", g.trajectories, g.t_span),
    );
    let i = match ctx.integral() {
        Ok(i) => i,
        Err(e) => return c.failed(&e),
    };
    match conservation_report(ctx.field, &i, g.trajectories, g.t_span, &ctx.icfg, ctx.cfg.seed) {
        Ok(r) => {
            let worst = r
                .per_trajectory
                .iter()
                .find(|t| t.rel_drift.is_none() || t.rel_drift == Some(r.max_rel_drift))
                .map(|t| t.start);
            let mut c = c
                .judge(r.max_rel_drift)
                .and(r.failed == 0)
                .with("energy_drift", r.max_energy_drift)
                .with("failed_trajectories", r.failed as f64);
            if let Some(s) = worst {
                c = c.at(&[("u", s.u), ("v", s.v), ("p", s.p), ("q", s.q)]);
            }
            if let Some(e) = r.per_trajectory.iter().find_map(|t| t.error.clone()) {
                c.error = Some(e);
            }
            c
        }
        Err(e) => c.failed(&e),
    }
}

fn blaschke_check(web: Result<Web3Field>, n: usize) -> CheckResult {
    let c = CheckResult::new("blaschke", BLASCHKE_TOL, format!("{n}x{n} inner"));
    let web = match web {
        Ok(w) => w,
        Err(e) => return c.failed(&e),
    };
    let inner = web.domain.shrink(0.5);
    let worst = worst_over(&inner.grid(n), |p| Ok(blaschke_curvature(&web, p)?.k_b.abs()));
    let control = max_blaschke(&web.perturbed(CONTROL_STRENGTH), &inner, n);
    match (worst, control) {
        (Ok((k, p)), Ok(ctl)) => c.judge(k).and(ctl > CONTROL_MIN).at(&uv(p)).with("control", ctl),
        (Err(e), _) | (_, Err(e)) => c.failed(&e),
    }
}

fn closure_check(field: &MetricField, web: Result<Web3Field>, eps: f64, icfg: &IntegratorConfig) -> CheckResult {
    let c = CheckResult::new("closure", CLOSURE_TOL, format!("eps = {eps}"));
    let web = match web {
        Ok(w) => w,
        Err(e) => return c.failed(&e),
    };
    let p = web.domain.center();
    let d = hexagon_closure_defect(field, &web, p, eps, icfg);
    let ctl = [[0, 1, 2], [1, 2, 0], [2, 0, 1]]
        .iter()
        .map(|perm| hexagon_closure_defect(field, &web.relabeled(*perm).perturbed(CONTROL_STRENGTH), p, eps, icfg))
        .try_fold(0.0f64, |m, x| x.map(|x| m.max(x)));
    match (d, ctl) {
        (Ok(d), Ok(ctl)) => c.judge(d).and(ctl > CONTROL_MIN).at(&uv(p)).with("control", ctl),
        (Err(e), _) | (_, Err(e)) => c.failed(&e),
    }
}

/// Metric jet whose second derivatives are central differences, with step
/// `h`, of the first derivatives of the field's jets.
pub fn fd_metric_jet(field: &MetricField, p: ChartPoint, h: f64) -> Result<MetricJet2> {
    let at = |du: f64, dv: f64| -> Result<[Jet2<f64>; 3]> {
        let j = field.jet_at(p.u + du, p.v + dv)?;
        Ok([j.e, j.f, j.g])
    };
    let (c, up, um, vp, vm) = (at(0.0, 0.0)?, at(h, 0.0)?, at(-h, 0.0)?, at(0.0, h)?, at(0.0, -h)?);
    let jet = |m: usize| {
        let dxy = 0.5 * ((vp[m].dx - vm[m].dx) + (up[m].dy - um[m].dy)) / (2.0 * h);
        Jet2::new(c[m].re, c[m].dx, c[m].dy, (up[m].dx - um[m].dx) / (2.0 * h), dxy, (vp[m].dy - vm[m].dy) / (2.0 * h))
    };
    Ok(MetricJet2::new(jet(0), jet(1), jet(2)))
}

fn curvature_check(ctx: &MetricCtx, constant: &mut Option<f64>) -> CheckResult {
    let n = ctx.cfg.grid.n;
    let field = ctx.field;
    let pts = field.domain.grid(n);
    let ks: Result<Vec<f64>> = pts.par_iter().map(|p| gaussian_curvature(&field.jet(*p)?)).collect();
    let ks = match ks {
        Ok(k) => k,
        Err(e) => return CheckResult::new("curvature", CURVATURE_TOL, grid_label(n)).failed(&e),
    };
    let (kmin, kmax) = ks.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), k| (a.min(*k), b.max(*k)));
    let kc = ks[ks.len() / 2];
    let spread = (kmax - kmin) / (1.0 + kc.abs());
    if spread < CURVATURE_TOL {
        *constant = Some(kc);
    }
    let rel = |a: f64, b: f64| (a - b).abs() / (1.0 + b.abs());
    let oracle_residual = |tol: f64, name: &str, oracle: &(dyn Fn(ChartPoint) -> Result<f64> + Sync)| {
        let c = CheckResult::new("curvature", tol, grid_label(n)).with("k_min", kmin).with("k_max", kmax);
        match worst_over(&pts, |p| Ok(rel(gaussian_curvature(&field.jet(p)?)?, oracle(p)?))) {
            Ok((r, p)) => c.judge(r).at(&uv(p)),
            Err(e) => c.failed(&e),
        }
        .with(name, 1.0)
    };
    let fd_oracle = |p: ChartPoint| -> Result<f64> {
        let h = 1e-4 * field.domain.width().min(field.domain.height());
        gaussian_curvature(&fd_metric_jet(field, p, h)?)
    };
    match (&ctx.cfg.family, ctx.ode) {
        (FamilyConfig::Translation(s), _) => {
            let f0 = s.f0;
            let h = s.h.clone();
            oracle_residual(CURVATURE_TOL, "closed_form", &move |p: ChartPoint| {
                let [hv, dh, ddh] = h.eval_real(p.v - p.u);
                Ok(translation_curvature(hv, dh, ddh, f0))
            })
        }
        (FamilyConfig::ConstantCurvature { curvature }, _) => {
            let k = curvature.curvature();
            oracle_residual(FLAT_TOL, "closed_form", &move |_| Ok(k))
        }
        (FamilyConfig::Ode(spec), Some(sol)) => match spec.family {
            OdeFamily::Spiral => {
                let k = spec.kappa;
                oracle_residual(SPIRAL_CURVATURE_TOL, "closed_form", &move |p: ChartPoint| {
                    Ok(spiral_curvature(p.u, sol.eval(p.v - k * p.u), k))
                })
            }
            OdeFamily::Dilation if spec.branch != DilationBranch::Generic => {
                let b = spec.branch;
                let y0 = sol.eval(spec.s0);
                let printed = branch_curvature(b, spec.s0, y0).expect("branch has a printed curvature");
                let c = oracle_residual(CURVATURE_TOL, "closed_form", &move |p: ChartPoint| {
                    branch_curvature(b, p.v / p.u, sol.eval(p.v / p.u))
                        .ok_or(HexError::InvalidParameter("no branch".into()))
                });
                c.and(spread < CURVATURE_TOL && rel(kc, printed) < CURVATURE_TOL)
                    .with("printed_at_initial_point", printed)
                    .with("spread", spread)
            }
            OdeFamily::Dilation if spec.kappa == 0.0 => oracle_residual(FLAT_TOL, "flat", &|_| Ok(0.0)),
            _ => oracle_residual(FD_CURVATURE_TOL, "finite_difference", &fd_oracle),
        },
        _ => oracle_residual(FD_CURVATURE_TOL, "finite_difference", &fd_oracle),
    }
}

fn semih_check(ctx: &MetricCtx) -> CheckResult {
    let g = &ctx.cfg.grid;
    let c = CheckResult::new("semih", SEMIH_TOL, format!("{} interior points", g.semih_points));
    let inner = ctx.field.domain.shrink(0.6);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
    let pts: Vec<ChartPoint> = (0..g.semih_points)
        .map(|_| {
            let (a, b): (f64, f64) = (rng.gen(), rng.gen());
            ChartPoint::new(inner.u0 + inner.width() * a, inner.v0 + inner.height() * b)
        })
        .collect();
    let triples = [(1, 2, 3), (2, 3, 1), (3, 1, 2)];
    let rows: Vec<Result<(f64, f64, f64, ChartPoint)>> = pts
        .par_iter()
        .map(|p| {
            let (mut a, mut coarse, mut fine) = (0.0f64, 0.0f64, 0.0f64);
            for (i, j, k) in triples {
                a = a.max(semi_hamiltonian_residual(ctx.field, *p, i, j, k)?.abs());
                coarse = coarse.max(semi_hamiltonian_fd(ctx.field, *p, i, j, k, 1e-2)?.abs());
                fine = fine.max(semi_hamiltonian_fd(ctx.field, *p, i, j, k, 1e-3)?.abs());
            }
            Ok((a, coarse, fine, *p))
        })
        .collect();
    let (mut worst, mut wp, mut coarse, mut fine, mut shrinks) = (0.0f64, pts[0], 0.0f64, 0.0f64, true);
    for r in rows {
        match r {
            Ok((a, c1, c2, p)) => {
                if a > worst {
                    (worst, wp) = (a, p);
                }
                coarse = coarse.max(c1);
                fine = fine.max(c2);
                shrinks &= c2 < c1 || c2 < 1e-9;
            }
            Err(e) => return c.failed(&e),
        }
    }
    c.judge(worst).and(shrinks).at(&uv(wp)).with("fd_coarse", coarse).with("fd_fine", fine)
}

/// Largest-to-second singular value ratio of the centred point cloud.
pub fn pca_residual(pts: &[[f64; 3]]) -> f64 {
    let n = pts.len() as f64;
    let mean = pts.iter().fold([0.0; 3], |m, p| [m[0] + p[0] / n, m[1] + p[1] / n, m[2] + p[2] / n]);
    let m = DMatrix::from_fn(pts.len(), 3, |i, j| pts[i][j] - mean[j]);
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    if s[0] == 0.0 {
        0.0
    } else {
        s[1] / s[0]
    }
}

fn invariants_check(ctx: &MetricCtx) -> CheckResult {
    let n = ctx.cfg.grid.n;
    let c = CheckResult::new("invariants", INVARIANT_TOL, grid_label(n));
    let rs: Result<Vec<[f64; 3]>> =
        ctx.field.domain.grid(n).par_iter().map(|p| Ok(invariants_at(&ctx.field.jet(*p)?)?.as_array())).collect();
    let rs = match rs {
        Ok(r) => r,
        Err(e) => return c.failed(&e),
    };
    let spread = |k: usize| {
        let (a, b) = rs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r[k]), b.max(r[k])));
        (b - a) / (1.0 + a.abs().max(b.abs()))
    };
    let (s1, s2) = (spread(0), spread(1));
    let pca = pca_residual(&rs);
    c.judge(s1.max(s2)).and(pca < PCA_TOL).with("r1_spread", s1).with("r2_spread", s2).with("pca_residual", pca)
}

fn lie_check(ctx: &MetricCtx) -> CheckResult {
    let g = &ctx.cfg.grid;
    let c = CheckResult::new("lie", LIE_TOL, format!("{} sample points", g.lie_points));
    let (Some(sol), Some(spec)) = (ctx.ode, ctx.cfg.lie_spiral.as_ref()) else {
        return c
            .failed(&HexError::InvalidParameter("lie check needs a spiral family and a lie_spiral section".into()));
    };
    let run = || -> Result<(f64, f64)> {
        let f = sol.exp_invariant_field()?;
        let imm = immerse_lie_spiral(&f, spec)?;
        Ok((imm.pullback_mismatch(g.lie_points, ctx.cfg.seed)?, imm.min_discriminant))
    };
    match run() {
        Ok((m, d)) => c.judge(m).with("min_discriminant", d),
        Err(e) => c.failed(&e),
    }
}

fn dual_checks(
    cfg: &RunConfig,
    t: &SlopeTriple,
    checks: &[Check],
    timing: &mut BTreeMap<String, f64>,
) -> Vec<CheckResult> {
    let n = cfg.grid.n;
    let dim3 = t.regime == Regime::Dim3;
    let tol = if dim3 { DIM3_TOL } else { DIM2_TOL };
    let needs_cert = checks.iter().any(|c| matches!(c, Check::Pde | Check::Curvature | Check::Pfaff));
    let t0 = Instant::now();
    let cert: Option<Result<TripleReport>> = needs_cert.then(|| t.certify(n, dim3 && checks.contains(&Check::Pfaff)));
    let cert_time = t0.elapsed().as_secs_f64();
    let from_cert = |name: &str, tol: f64, pick: &dyn Fn(&TripleReport) -> f64| {
        let c = CheckResult::new(name, tol, grid_label(n));
        match cert.as_ref().expect("certified") {
            Ok(r) => c.judge(pick(r)),
            Err(e) => c.failed(e),
        }
    };
    let web = web_of_triple(t);
    let mut out = Vec::new();
    for check in checks {
        let t1 = Instant::now();
        let r = match check {
            Check::Pde => from_cert("pde", tol, &|r| r.pde),
            Check::Curvature => from_cert("curvature", tol, &|r| r.curvature),
            Check::Pfaff => from_cert("pfaff", PFAFF_TOL, &|r| r.pfaff.unwrap_or(f64::NAN)),
            Check::Planarity => {
                let c = CheckResult::new("planarity", PLANARITY_TOL, grid_label(n));
                match planarity_check(t, n) {
                    Ok(p) => c
                        .judge(p.p_residual.max(p.q_residual))
                        .with("p_residual", p.p_residual)
                        .with("q_residual", p.q_residual)
                        .with("plane_a", p.plane.a)
                        .with("plane_b", p.plane.b)
                        .with("plane_c", p.plane.c)
                        .with("plane_delta", p.plane.delta),
                    Err(e) => c.failed(&e),
                }
            }
            Check::Orbit => {
                let c = CheckResult::new("orbit", ORBIT_TOL, format!("{} group elements", cfg.grid.orbit_samples));
                let FamilyConfig::DualDim3 { plane, .. } = &cfg.family else {
                    return vec![c.failed(&HexError::InvalidParameter("orbit needs a dim-3 plane".into()))];
                };
                match crate::duality::invariant_sweep(*plane, cfg.grid.orbit_samples, cfg.seed) {
                    Ok(d) => c.judge(d),
                    Err(e) => c.failed(&e),
                }
            }
            Check::Blaschke => blaschke_check(Ok(web.clone()), cfg.grid.blaschke_n),
            Check::Closure => {
                closure_check(&euclidean(t.domain), Ok(web.clone()), cfg.grid.eps, &cfg.integrator.to_config())
            }
            other => CheckResult::new(other.as_str(), 0.0, "")
                .failed(&HexError::InvalidParameter(format!("{} does not apply to dual webs", other.as_str()))),
        };
        let mut dt = t1.elapsed().as_secs_f64();
        if matches!(check, Check::Pde | Check::Curvature | Check::Pfaff) {
            dt += cert_time / 3.0;
        }
        timing.insert(check.as_str().into(), dt);
        out.push(r);
    }
    out
}

/// Seeds on the chart diagonal, one leaf per seed and foliation.
pub fn sample_leaves(web: &Web3Field, count: usize) -> [Vec<Vec<[f64; 2]>>; 3] {
    let d = web.domain;
    let len = d.width().hypot(d.height());
    let cfg = IntegratorConfig { max_step: len / 50.0, ..IntegratorConfig::with_tol(1e-9) };
    std::array::from_fn(|k| {
        (0..count)
            .into_par_iter()
            .filter_map(|i| {
                let t = (i as f64 + 0.5) / count as f64;
                let p = ChartPoint::new(d.u0 + d.width() * t, d.v0 + d.height() * t);
                let pts = trace_leaf(web, k, p, len, &cfg).ok()?;
                let mut line: Vec<[f64; 2]> = Vec::with_capacity(pts.len());
                for q in pts {
                    if line.last().is_none_or(|l| (l[0] - q.u).hypot(l[1] - q.v) > 1e-5 * len) {
                        line.push([q.u, q.v]);
                    }
                }
                Some(line)
            })
            .collect()
    })
}

fn sample_trajectories(field: &MetricField, cfg: &RunConfig) -> Vec<Trajectory> {
    let icfg = cfg.integrator.to_config();
    let Ok(starts) = random_starts(field, cfg.grid.trajectories, cfg.grid.t_span, cfg.seed) else {
        return Vec::new();
    };
    starts.par_iter().filter_map(|x| integrate_geodesic(field, *x, cfg.grid.t_span, &icfg).ok()).collect()
}

/// The tolerance a check is held to for a family.
pub fn nominal_tolerance(check: Check, family: &FamilyConfig) -> f64 {
    let dim2 = matches!(family, FamilyConfig::DualDim2(_));
    match check {
        Check::Pde | Check::Curvature if dim2 => DIM2_TOL,
        Check::Pde | Check::Curvature if family.is_dual() => DIM3_TOL,
        Check::Pde if family.is_analytic() => PDE_TOL_ANALYTIC,
        Check::Pde => PDE_TOL_NUMERIC,
        Check::Curvature => match family {
            FamilyConfig::ConstantCurvature { .. } => FLAT_TOL,
            FamilyConfig::Ode(s) if s.family == OdeFamily::Spiral => SPIRAL_CURVATURE_TOL,
            FamilyConfig::Ode(s) if s.family == OdeFamily::Dilation && s.branch != DilationBranch::Generic => {
                CURVATURE_TOL
            }
            FamilyConfig::Ode(s) if s.family == OdeFamily::Dilation && s.kappa == 0.0 => FLAT_TOL,
            FamilyConfig::Translation(_) => CURVATURE_TOL,
            _ => FD_CURVATURE_TOL,
        },
        Check::Integral => BRACKET_TOL,
        Check::Conservation => CONSERVATION_TOL,
        Check::Blaschke => BLASCHKE_TOL,
        Check::Closure => CLOSURE_TOL,
        Check::Semih => SEMIH_TOL,
        Check::Invariants => INVARIANT_TOL,
        Check::Lie => LIE_TOL,
        Check::Pfaff => PFAFF_TOL,
        Check::Planarity => PLANARITY_TOL,
        Check::Orbit => ORBIT_TOL,
    }
}

/// Runs the configured checks without touching the file system.
pub fn evaluate(cfg: &RunConfig) -> (VerificationReport, BTreeMap<String, f64>, Option<Artifacts>) {
    let checks = cfg.enabled_checks();
    let mut timing = BTreeMap::new();
    let t_all = Instant::now();
    let mut mu = None;
    let mut constant = None;
    let t0 = Instant::now();
    let subject = generate(&cfg.family);
    timing.insert("generate".into(), t0.elapsed().as_secs_f64());
    let (results, artifacts) = match subject {
        Err(e) => {
            let r = checks
                .iter()
                .map(|c| {
                    let mut r = CheckResult::new(c.as_str(), nominal_tolerance(*c, &cfg.family), "").failed(&e);
                    if *c != Check::Pde {
                        r.error = Some(format!("family could not be generated: {e}"));
                    }
                    r
                })
                .collect();
            (r, None)
        }
        Ok(Subject::Dual(t)) => {
            let r = dual_checks(cfg, &t, &checks, &mut timing);
            (r, Some(Artifacts::Dual(t)))
        }
        Ok(Subject::Metric { field, ode }) => {
            let mut ctx = MetricCtx {
                cfg,
                field: &field,
                ode: ode.as_ref(),
                icfg: cfg.integrator.to_config(),
                integral: None,
                web: None,
            };
            let mut out = Vec::new();
            for c in &checks {
                let t1 = Instant::now();
                let r = match c {
                    Check::Pde => pde_check(&ctx),
                    Check::Integral => integral_check(&mut ctx, &mut mu),
                    Check::Conservation => conservation_check(&mut ctx),
                    Check::Blaschke => blaschke_check(ctx.web(), cfg.grid.blaschke_n),
                    Check::Closure => closure_check(&field, ctx.web(), cfg.grid.eps, &ctx.icfg),
                    Check::Curvature => curvature_check(&ctx, &mut constant),
                    Check::Semih => semih_check(&ctx),
                    Check::Invariants => invariants_check(&ctx),
                    Check::Lie => lie_check(&ctx),
                    other => CheckResult::new(other.as_str(), 0.0, "").failed(&HexError::InvalidParameter(format!(
                        "{} does not apply to metric families",
                        other.as_str()
                    ))),
                };
                timing.insert(c.as_str().into(), t1.elapsed().as_secs_f64());
                out.push(r);
            }
            if mu.is_none() {
                if let Some(Ok(i)) = &ctx.integral {
                    mu = i.mu;
                }
            }
            let web = ctx.web.take().and_then(|w| w.ok());
            (out, Some(Artifacts::Metric { field, web }))
        }
    };
    timing.insert("total".into(), t_all.elapsed().as_secs_f64());
    let all_passed = results.iter().all(|r| r.status == Status::Pass);
    let report = VerificationReport {
        schema_version: SCHEMA_VERSION,
        command: cfg.command.as_str().into(),
        family: cfg.family.name().into(),
        seed: cfg.seed,
        grid_n: cfg.grid.n,
        mu,
        curvature_constant: constant,
        checks: results,
        all_passed,
        outputs: Vec::new(),
    };
    (report, timing, artifacts)
}

/// Generated objects available for sample output.
pub enum Artifacts {
    Metric { field: MetricField, web: Option<Web3Field> },
    Dual(SlopeTriple),
}

fn metric_web(field: &MetricField, web: Option<Web3Field>) -> Option<Web3Field> {
    web.or_else(|| {
        let i = cubic_integral_from_solution(field).ok()?;
        crate::web3::web_from_cubic_integral(field, &i).ok()
    })
}

/// Writes the sample files the command asks for and returns their names.
fn write_artifacts(cfg: &RunConfig, art: Artifacts) -> Result<Vec<String>> {
    let dir = &cfg.output.dir;
    let mut names = Vec::new();
    let leaves_and_svg = |web: &Web3Field, names: &mut Vec<String>| -> Result<()> {
        let leaves = sample_leaves(web, cfg.grid.leaves);
        if cfg.output.csv {
            csv_out::write_leaves(&dir.join("leaves.csv"), &leaves)?;
            names.push("leaves.csv".into());
        }
        if cfg.output.svg {
            std::fs::write(dir.join("web.svg"), emit_svg(&leaves, &web.domain))?;
            names.push("web.svg".into());
        }
        Ok(())
    };
    match (cfg.command, art) {
        (Command::Verify, _) => {}
        (Command::Generate, Artifacts::Metric { field, .. }) => {
            if cfg.output.csv {
                csv_out::write_metric_samples(&dir.join("metric.csv"), &field, cfg.grid.n)?;
                names.push("metric.csv".into());
            }
        }
        (Command::Generate, Artifacts::Dual(t)) => {
            if cfg.output.csv {
                csv_out::write_slope_samples(&dir.join("slopes.csv"), &t, cfg.grid.n)?;
                names.push("slopes.csv".into());
            }
        }
        (Command::Trace, Artifacts::Metric { field, .. }) => {
            if cfg.output.csv {
                csv_out::write_trajectories(&dir.join("trajectories.csv"), &sample_trajectories(&field, cfg))?;
                names.push("trajectories.csv".into());
            }
        }
        (Command::Trace, Artifacts::Dual(t)) => leaves_and_svg(&web_of_triple(&t), &mut names)?,
        (Command::Plot, Artifacts::Metric { field, web }) => {
            if let Some(w) = metric_web(&field, web) {
                leaves_and_svg(&w, &mut names)?;
            }
        }
        (Command::Plot | Command::Dual, Artifacts::Dual(t)) => {
            if cfg.command == Command::Plot {
                leaves_and_svg(&web_of_triple(&t), &mut names)?;
            }
            let n = cfg.grid.n;
            let duals = vec![t.slopes_grid_duals(0, n)?, t.slopes_grid_duals(1, n)?];
            if cfg.output.csv {
                csv_out::write_duals(&dir.join("duals.csv"), &duals)?;
                names.push("duals.csv".into());
            }
            if cfg.output.svg {
                let eps = t.eps;
                let mut scene = DualScene::default().with_quadric(eps, 8);
                if let FamilyConfig::DualDim3 { plane, .. } = &cfg.family {
                    scene = scene.with_section(eps, plane);
                }
                for i in 0..2 {
                    scene = scene.with_focal(&t.focal_curve(i, 60)?);
                }
                std::fs::write(dir.join("dual.svg"), scene.to_svg())?;
                names.push("dual.svg".into());
            }
        }
        (Command::Dual, Artifacts::Metric { .. }) => {}
    }
    Ok(names)
}

/// Runs the pipeline and writes the report, timing and samples under the
/// output directory.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(|e| HexError::Io(format!("{}: {e}", dir.display())))?;
    let (mut report, timing, art) = evaluate(cfg);
    if let Some(a) = art {
        report.outputs = write_artifacts(cfg, a)?;
    }
    let json = to_fixed_json(&report)?;
    let mut files = Vec::new();
    let path = dir.join(&cfg.output.json);
    std::fs::write(&path, &json).map_err(|e| HexError::Io(format!("{}: {e}", path.display())))?;
    files.push(path);
    if cfg.output.timing {
        let p = dir.join("timing.json");
        std::fs::write(&p, to_fixed_json(&timing)?)?;
        files.push(p);
    }
    files.extend(report.outputs.iter().map(|n| dir.join(n)));
    Ok(RunOutput { report, json, timing, files })
}
