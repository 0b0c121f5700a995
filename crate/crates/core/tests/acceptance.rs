//! End-to-end acceptance criteria. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use hexweb::chart_metric::{gaussian_curvature, MetricJet2};
use hexweb::cli_io::{evaluate, load_config, run_pipeline, Check, Command, RunConfig, VerificationReport};
use hexweb::duality::{dim2_web, web_from_two_planes, Dim2Spec, PlaneSection};
use hexweb::hydro_system::characteristic_speeds;
use hexweb::{make_dilation_family, make_spiral_family, HexError, MetricField, OdeFamilySpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(name: &str) -> RunConfig {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.toml"));
    load_config(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn run(name: &str, checks: &[Check]) -> VerificationReport {
    let mut cfg = config(name);
    cfg.command = Command::Verify;
    cfg.checks = Some(checks.to_vec());
    evaluate(&cfg).0
}

struct Outcome {
    ok: bool,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { ok: true, notes: Vec::new() }
    }

    fn require(&mut self, ok: bool, note: impl Into<String>) {
        let note = note.into();
        if !ok {
            self.ok = false;
            self.notes.push(format!("FAILED {note}"));
        } else {
            self.notes.push(note);
        }
    }

    /// Requires `check` in `report` to have a residual below `tol` and to have passed.
    fn residual(&mut self, report: &VerificationReport, check: &str, tol: f64) -> f64 {
        let label = format!("{}:{check}", report.family);
        match report.check(check) {
            Some(c) => {
                let r = c.max_residual.unwrap_or(f64::NAN);
                let why = c.error.as_deref().map(|e| format!(" ({e})")).unwrap_or_default();
                self.require(r < tol && c.passed(), format!("{label} {r:.2e} < {tol:.0e}{why}"));
                r
            }
            None => {
                self.require(false, format!("{label} missing"));
                f64::NAN
            }
        }
    }

    fn detail(&self, report: &VerificationReport, check: &str, key: &str) -> f64 {
        report.check(check).and_then(|c| c.detail.get(key).copied()).unwrap_or(f64::NAN)
    }
}

fn grid_max(field: &MetricField, n: usize, f: impl Fn(&MetricJet2<f64>) -> f64) -> Result<f64, HexError> {
    let mut worst = 0.0f64;
    for p in field.domain.grid(n) {
        let r = f(&field.jet(p)?);
        if !(r <= worst) {
            worst = r;
        }
    }
    Ok(worst)
}

fn speeds_and_vieta() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut ident, mut vieta) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let e: f64 = rng.gen_range(0.1..10.0);
        let g: f64 = rng.gen_range(0.1..10.0);
        let f = (e * g).sqrt() * rng.gen_range(-0.99..0.99);
        let jet = MetricJet2::constant(e, f, g);
        let s = characteristic_speeds(&jet).expect("G > 0");
        let m = s.lambda.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        ident = ident.max(s.identity_residual() / (1.0 + m).powi(3));
        vieta = vieta.max(s.vieta_residuals(&jet).into_iter().fold(0.0, f64::max));
    }
    o.require(ident < 1e-10, format!("identity {ident:.2e} < 1e-10"));
    o.require(vieta < 1e-10, format!("vieta {vieta:.2e} < 1e-10"));
    let flat = characteristic_speeds(&MetricJet2::constant(1.0, 0.0, 1.0)).unwrap().real();
    let r5 = 5f64.sqrt();
    let want = [-1.0, (3.0 - r5) / 2.0, (3.0 + r5) / 2.0];
    let err = flat.map_or(f64::INFINITY, |l| l.iter().zip(want).fold(0.0, |a, (x, y)| a.max((x - y).abs())));
    o.require(err < 1e-12, format!("flat roots {err:.2e} < 1e-12"));
    o
}

const METRIC_FAMILIES: [&str; 7] =
    ["translation", "spiral", "dilation", "dilation_branch_a", "dilation_branch_b", "dilation_branch_c", "discr"];

fn hydro_families() -> Outcome {
    let mut o = Outcome::new();
    for name in METRIC_FAMILIES.iter().chain(&["simple_wave"]) {
        let r = run(name, &[Check::Pde]);
        o.require(r.grid_n == 20, format!("{name} grid {}", r.grid_n));
        let tol = if *name == "translation" { 1e-9 } else { 1e-6 };
        o.residual(&r, "pde", tol);
    }
    o
}

fn first_integral() -> Outcome {
    let mut o = Outcome::new();
    for name in METRIC_FAMILIES.iter().chain(&["simple_wave"]) {
        let mut cfg = config(name);
        o.require(
            cfg.grid.probe == 10
                && cfg.grid.trajectories == 100
                && cfg.grid.t_span == 1.0
                && cfg.integrator.rel_tol == 1e-12,
            format!("{name} sampling"),
        );
        cfg.checks = Some(vec![Check::Integral, Check::Conservation]);
        let r = evaluate(&cfg).0;
        o.residual(&r, "integral", 1e-8);
        o.residual(&r, "conservation", 1e-8);
        match r.mu {
            Some(d) => {
                let rejected = if d.exponent == 1 { d.residual_m2 } else { d.residual_m1 };
                let kept = if d.exponent == 1 { d.residual_m1 } else { d.residual_m2 };
                let ok = d.indistinguishable || rejected >= 1e-8 * 1e5;
                o.require(ok, format!("{name} mu exponent {} kept {kept:.1e} rejected {rejected:.1e}", d.exponent));
            }
            None => o.require(false, format!("{name} no mu decision")),
        }
    }
    o
}

fn blaschke_closure() -> Outcome {
    let mut o = Outcome::new();
    for name in METRIC_FAMILIES.iter().chain(&["simple_wave"]) {
        let r = run(name, &[Check::Blaschke, Check::Closure]);
        o.residual(&r, "blaschke", 1e-7);
        o.residual(&r, "closure", 1e-7);
        let (cb, cc) = (o.detail(&r, "blaschke", "control"), o.detail(&r, "closure", "control"));
        o.require(cb > 1e-4 && cc > 1e-4, format!("{name} controls {cb:.1e} {cc:.1e} > 1e-4"));
    }
    o
}

fn flat_curvature(field: &MetricField, label: &str, o: &mut Outcome) {
    match grid_max(field, 20, |j| gaussian_curvature(j).map_or(f64::NAN, f64::abs)) {
        Ok(k) => o.require(k < 1e-9, format!("{label} |K| {k:.2e} < 1e-9")),
        Err(e) => o.require(false, format!("{label}: {e}")),
    }
}

fn curvature() -> Outcome {
    let mut o = Outcome::new();
    o.residual(&run("translation", &[Check::Curvature]), "curvature", 1e-8);
    o.residual(&run("spiral", &[Check::Curvature]), "curvature", 1e-6);
    let base = |k: f64| OdeFamilySpec::spiral(k, 0.0, 2.0, 1.0, 0.5, [-0.3, 0.3, -0.3, 0.3]);
    for k in [0.0, -1.0] {
        match make_spiral_family::<f64>(&base(k)) {
            Ok(f) => flat_curvature(&f, &format!("spiral kappa {k}"), &mut o),
            Err(e) => o.require(false, format!("spiral kappa {k}: {e}")),
        }
    }
    match make_dilation_family::<f64>(&OdeFamilySpec::dilation(0.0, 0.0, 2.0, 1.0, 0.5, [1.0, 1.5, -0.25, 0.25])) {
        Ok(f) => flat_curvature(&f, "dilation kappa 0", &mut o),
        Err(e) => o.require(false, format!("dilation kappa 0: {e}")),
    }
    for b in ["a", "b", "c"] {
        let r = run(&format!("dilation_branch_{b}"), &[Check::Curvature]);
        o.residual(&r, "curvature", 1e-8);
        let spread = o.detail(&r, "curvature", "spread");
        let printed = o.detail(&r, "curvature", "printed_at_initial_point");
        let k = r.curvature_constant.unwrap_or(f64::NAN);
        o.require(
            spread < 1e-8 && (k - printed).abs() / (1.0 + printed.abs()) < 1e-8,
            format!("branch {b} K = {k:.10} printed {printed:.10} spread {spread:.1e}"),
        );
    }
    o
}

fn dim3() -> Outcome {
    let mut o = Outcome::new();
    let r = run("dual_dim3", &[Check::Pde, Check::Curvature, Check::Pfaff, Check::Planarity, Check::Orbit]);
    o.residual(&r, "pde", 1e-8);
    o.residual(&r, "curvature", 1e-8);
    o.residual(&r, "pfaff", 1e-6);
    o.residual(&r, "planarity", 1e-7);
    o.residual(&r, "orbit", 1e-10);
    o.require(config("dual_dim3").grid.orbit_samples == 100, "100 group elements");
    let ctl = web_from_two_planes::<f64>(1.0, PlaneSection::default(), PlaneSection::new(1.0, -0.3, 0.4, 1.5))
        .and_then(|t| t.certify(20, false));
    match ctl {
        Ok(c) => o.require(c.curvature > 1e-3, format!("two-plane control curvature {:.2e} > 1e-3", c.curvature)),
        Err(e) => o.require(false, format!("two-plane control: {e}")),
    }
    o
}

fn dim2() -> Outcome {
    let mut o = Outcome::new();
    let r = run("dual_dim2", &[Check::Pde, Check::Curvature]);
    o.residual(&r, "pde", 1e-10);
    o.residual(&r, "curvature", 1e-10);
    for rho in [1.0f64, -1.0] {
        for eps in [1.0f64, -1.0] {
            let p0_sq = -rho / eps;
            let exists = p0_sq > 0.0;
            o.require(exists == (eps * rho < 0.0), format!("constant slope rho {rho} eps {eps}: {exists}"));
            if exists && rho != 1.0 {
                let spec = Dim2Spec::new(rho, eps, p0_sq.sqrt(), 1.0);
                let built = dim2_web::<f64>(&spec).and_then(|t| Ok((t.slopes(1.9, 0.3)?, t.certify(20, false)?)));
                match built {
                    Ok((s, c)) => o.require(
                        spec.is_constant() && s[0].dx == 0.0 && (s[0].re - p0_sq.sqrt()).abs() < 1e-15 && c.pde < 1e-10,
                        format!("constant web rho {rho} eps {eps} pde {:.1e}", c.pde),
                    ),
                    Err(e) => o.require(false, format!("constant web rho {rho} eps {eps}: {e}")),
                }
            }
        }
    }
    for rho in [1.0, -0.5] {
        let rejected = matches!(dim2_web::<f64>(&Dim2Spec::new(rho, 1.0, 1.0, 1.0)), Err(HexError::ExcludedRho { .. }));
        o.require(rejected, format!("rho {rho} rejected"));
    }
    o
}

fn simple_wave() -> Outcome {
    let mut o = Outcome::new();
    let r =
        run("simple_wave", &[Check::Invariants, Check::Integral, Check::Conservation, Check::Blaschke, Check::Closure]);
    o.residual(&r, "invariants", 1e-7);
    let pca = o.detail(&r, "invariants", "pca_residual");
    o.require(pca < 1e-6, format!("pca {pca:.2e} < 1e-6"));
    o.residual(&r, "integral", 1e-8);
    o.residual(&r, "conservation", 1e-8);
    o.residual(&r, "blaschke", 1e-7);
    o.residual(&r, "closure", 1e-7);
    o
}

fn semi_hamiltonian() -> Outcome {
    let mut o = Outcome::new();
    let r = run("dilation", &[Check::Semih]);
    o.residual(&r, "semih", 1e-4);
    let (c, f) = (o.detail(&r, "semih", "fd_coarse"), o.detail(&r, "semih", "fd_fine"));
    o.require(f < c, format!("finite differences {c:.1e} -> {f:.1e}"));
    o
}

fn lie_pullback() -> Outcome {
    let mut o = Outcome::new();
    let cfg = config("spiral");
    o.require(cfg.grid.lie_points == 50, "50 sample points");
    let r = run("spiral", &[Check::Lie]);
    o.residual(&r, "lie", 1e-6);
    o
}

fn determinism() -> Outcome {
    let mut o = Outcome::new();
    for name in ["translation", "dual_dim3"] {
        let outs: Vec<_> = (0..2)
            .map(|_| {
                let dir = tempfile::tempdir().expect("tempdir");
                let cfg = config(name)
                    .with_overrides(Some(Command::Plot), Some(dir.path().to_path_buf()), Some(11), None)
                    .expect("overrides");
                let out = run_pipeline(&cfg).expect("pipeline");
                let files: Vec<(String, Vec<u8>)> = out
                    .report
                    .outputs
                    .iter()
                    .chain(std::iter::once(&cfg.output.json))
                    .map(|f| (f.clone(), std::fs::read(dir.path().join(f)).expect("read")))
                    .collect();
                files
            })
            .collect();
        o.require(outs[0] == outs[1], format!("{name}: {} files byte-identical", outs[0].len()));
    }
    o
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("characteristic speeds", speeds_and_vieta),
        ("hydrodynamic system", hydro_families),
        ("cubic first integral", first_integral),
        ("hexagonality", blaschke_closure),
        ("curvature formulas", curvature),
        ("dim-3 dual webs", dim3),
        ("dim-2 dual webs", dim2),
        ("simple wave", simple_wave),
        ("semi-Hamiltonian", semi_hamiltonian),
        ("Lie pullback", lie_pullback),
        ("determinism", determinism),
    ];
    let verbose = std::env::var_os("HEXWEB_ACCEPTANCE_VERBOSE").is_some();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        let tag = if o.ok { "PASS" } else { "FAIL" };
        println!("{tag} {:>2} {name}", i + 1);
        for n in o.notes.iter().filter(|n| verbose || n.starts_with("FAILED")) {
            println!("        {n}");
        }
        failed += usize::from(!o.ok);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
