//! Strict TOML run configuration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::duality::{Dim2Spec, PlaneSection};
use crate::error::{HexError, Result};
use crate::generators::{
    CurvatureKind, DilationBranch, LieSpiralSpec, OdeFamily, OdeFamilySpec, SimpleWaveSpec, TranslationFamilySpec,
};
use crate::ode::IntegratorConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Generate,
    #[default]
    Verify,
    Trace,
    Dual,
    Plot,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Verify => "verify",
            Command::Trace => "trace",
            Command::Dual => "dual",
            Command::Plot => "plot",
        }
    }
}

impl std::str::FromStr for Command {
    type Err = HexError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "generate" => Command::Generate,
            "verify" => Command::Verify,
            "trace" => Command::Trace,
            "dual" => Command::Dual,
            "plot" => Command::Plot,
            _ => {
                return Err(HexError::Validation { field: "command".into(), message: format!("unknown command `{s}`") })
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// Hydrodynamic residual, or the slope PDEs for dual webs.
    Pde,
    /// Bracket of the calibrated cubic with the Hamiltonian.
    Integral,
    /// Drift of the cubic along random geodesics.
    Conservation,
    Blaschke,
    Closure,
    Curvature,
    Semih,
    /// Riemann invariants of a simple wave.
    Invariants,
    Lie,
    Pfaff,
    Planarity,
    Orbit,
}

impl Check {
    pub const ALL: [Check; 12] = [
        Check::Pde,
        Check::Integral,
        Check::Conservation,
        Check::Blaschke,
        Check::Closure,
        Check::Curvature,
        Check::Semih,
        Check::Invariants,
        Check::Lie,
        Check::Pfaff,
        Check::Planarity,
        Check::Orbit,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Check::Pde => "pde",
            Check::Integral => "integral",
            Check::Conservation => "conservation",
            Check::Blaschke => "blaschke",
            Check::Closure => "closure",
            Check::Curvature => "curvature",
            Check::Semih => "semih",
            Check::Invariants => "invariants",
            Check::Lie => "lie",
            Check::Pfaff => "pfaff",
            Check::Planarity => "planarity",
            Check::Orbit => "orbit",
        }
    }
}

impl std::str::FromStr for Check {
    type Err = HexError;

    fn from_str(s: &str) -> Result<Self> {
        Check::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim())
            .ok_or_else(|| HexError::Validation { field: "checks".into(), message: format!("unknown check `{s}`") })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Side of the square grids used for residual checks.
    pub n: usize,
    /// Random phase points for the bracket test.
    pub probe: usize,
    pub trajectories: usize,
    pub t_span: f64,
    /// Side scale of the hexagon.
    pub eps: f64,
    /// Side of the grid for the Blaschke curvature.
    pub blaschke_n: usize,
    /// Interior points for the semi-Hamiltonian diagnostic.
    pub semih_points: usize,
    /// Sample points for the Lie spiral pullback.
    pub lie_points: usize,
    /// Random group elements for the orbit invariant.
    pub orbit_samples: usize,
    /// Leaves traced per foliation for CSV and SVG output.
    pub leaves: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n: 20,
            probe: 10,
            trajectories: 100,
            t_span: 1.0,
            eps: 0.1,
            blaschke_n: 10,
            semih_points: 10,
            lie_points: 50,
            orbit_samples: 100,
            leaves: 9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let d = IntegratorConfig::<f64>::default();
        Self { rel_tol: 1e-12, abs_tol: 1e-14, max_step: None, max_steps: d.max_steps }
    }
}

impl IntegratorSection {
    pub fn to_config(&self) -> IntegratorConfig<f64> {
        let d = IntegratorConfig::default();
        IntegratorConfig {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_steps: self.max_steps,
            max_step: self.max_step.unwrap_or(d.max_step),
            ..d
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Report file name inside `dir`.
    pub json: String,
    pub csv: bool,
    pub svg: bool,
    /// Write `timing.json` next to the report.
    pub timing: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("hexweb-out"), json: "report.json".into(), csv: true, svg: true, timing: true }
    }
}

/// Spiral and dilation data without the family tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeSection {
    #[serde(default)]
    pub kappa: f64,
    pub s0: f64,
    #[serde(default)]
    pub e0: f64,
    pub j0: f64,
    pub f0: f64,
    pub domain: [f64; 4],
    #[serde(default)]
    pub branch: DilationBranch,
}

impl OdeSection {
    fn to_spec(&self, family: OdeFamily) -> OdeFamilySpec {
        OdeFamilySpec {
            family,
            kappa: if family == OdeFamily::Discr { 0.0 } else { self.kappa },
            s0: self.s0,
            e0: self.e0,
            j0: self.j0,
            f0: self.f0,
            domain: self.domain,
            branch: self.branch,
        }
    }
}

/// Either full simple-wave data or a constant metric to build the wave around.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SimpleWaveSection {
    Around { around: [f64; 3], half: f64 },
    Full(SimpleWaveSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantCurvatureSection {
    pub kind: CurvatureKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualDim3Section {
    pub eps: f64,
    #[serde(default)]
    pub plane: PlaneSection,
    /// `[z0, z1, y0, y1]`.
    #[serde(default = "default_dual_domain")]
    pub domain: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualDim2Section {
    pub rho: f64,
    pub eps: f64,
    pub p0: f64,
    #[serde(default = "one")]
    pub z0: f64,
    #[serde(default = "default_dual_domain")]
    pub domain: [f64; 4],
}

fn default_dual_domain() -> [f64; 4] {
    [1.0, 2.0, 0.0, 1.0]
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFamily {
    translation: Option<TranslationFamilySpec>,
    spiral: Option<OdeSection>,
    dilation: Option<OdeSection>,
    discr: Option<OdeSection>,
    simple_wave: Option<SimpleWaveSection>,
    constant_curvature: Option<ConstantCurvatureSection>,
    dual_dim3: Option<DualDim3Section>,
    dual_dim2: Option<DualDim2Section>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    command: Command,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    checks: Option<Vec<String>>,
    #[serde(default)]
    grid: GridConfig,
    #[serde(default)]
    integrator: IntegratorSection,
    #[serde(default)]
    output: OutputConfig,
    #[serde(default)]
    family: RawFamily,
    #[serde(default)]
    lie_spiral: Option<LieSpiralSpec>,
}

/// The single family a run works on.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyConfig {
    Translation(TranslationFamilySpec),
    Ode(OdeFamilySpec),
    SimpleWave(SimpleWaveSpec),
    ConstantCurvature { curvature: CurvatureKind },
    DualDim3 { eps: f64, plane: PlaneSection, domain: [f64; 4] },
    DualDim2(Dim2Spec),
}

impl FamilyConfig {
    pub fn name(&self) -> &'static str {
        match self {
            FamilyConfig::Translation(_) => "translation",
            FamilyConfig::Ode(s) => match s.family {
                OdeFamily::Spiral => "spiral",
                OdeFamily::Dilation => "dilation",
                OdeFamily::Discr => "discr",
            },
            FamilyConfig::SimpleWave(_) => "simple_wave",
            FamilyConfig::ConstantCurvature { .. } => "constant_curvature",
            FamilyConfig::DualDim3 { .. } => "dual_dim3",
            FamilyConfig::DualDim2(_) => "dual_dim2",
        }
    }

    pub fn is_dual(&self) -> bool {
        matches!(self, FamilyConfig::DualDim3 { .. } | FamilyConfig::DualDim2(_))
    }

    /// Whether the metric is given in closed form.
    pub fn is_analytic(&self) -> bool {
        matches!(self, FamilyConfig::Translation(_) | FamilyConfig::ConstantCurvature { .. })
    }

    /// Checks that make sense for this family.
    pub fn applicable(&self, lie: bool) -> Vec<Check> {
        use Check::*;
        match self {
            FamilyConfig::DualDim3 { .. } => vec![Pde, Curvature, Pfaff, Planarity, Orbit, Blaschke, Closure],
            FamilyConfig::DualDim2(_) => vec![Pde, Curvature, Blaschke, Closure],
            FamilyConfig::ConstantCurvature { .. } => vec![Pde, Integral, Conservation, Blaschke, Closure, Curvature],
            // hodograph is a curve: the invariants are not coordinates
            FamilyConfig::SimpleWave(_) => vec![Pde, Integral, Conservation, Blaschke, Closure, Curvature, Invariants],
            FamilyConfig::Ode(s) if s.family == OdeFamily::Spiral && lie => {
                vec![Pde, Integral, Conservation, Blaschke, Closure, Curvature, Semih, Lie]
            }
            FamilyConfig::Ode(s) if s.family != OdeFamily::Discr => {
                vec![Pde, Integral, Conservation, Blaschke, Closure, Curvature, Semih]
            }
            // hodograph is a curve: the invariants are not coordinates
            _ => vec![Pde, Integral, Conservation, Blaschke, Closure, Curvature],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    /// Explicit check list; `None` selects the command defaults.
    pub checks: Option<Vec<Check>>,
    pub grid: GridConfig,
    pub integrator: IntegratorSection,
    pub output: OutputConfig,
    pub family: FamilyConfig,
    pub lie_spiral: Option<LieSpiralSpec>,
}

impl RunConfig {
    pub fn new(family: FamilyConfig) -> Self {
        Self {
            command: Command::default(),
            seed: 0,
            checks: None,
            grid: GridConfig::default(),
            integrator: IntegratorSection::default(),
            output: OutputConfig::default(),
            family,
            lie_spiral: None,
        }
    }

    /// The checks the run performs, in canonical order.
    pub fn enabled_checks(&self) -> Vec<Check> {
        let applicable = self.family.applicable(self.lie_spiral.is_some());
        let mut out: Vec<Check> = match &self.checks {
            Some(c) => c.clone(),
            None => match self.command {
                Command::Verify => applicable,
                Command::Generate => vec![Check::Pde],
                Command::Trace => {
                    if self.family.is_dual() {
                        vec![Check::Pde]
                    } else {
                        vec![Check::Integral, Check::Conservation]
                    }
                }
                Command::Plot => vec![Check::Blaschke],
                Command::Dual => {
                    applicable.into_iter().filter(|c| !matches!(c, Check::Blaschke | Check::Closure)).collect()
                }
            },
        };
        out.sort();
        out.dedup();
        out
    }

    /// Applies command-line overrides and re-validates.
    pub fn with_overrides(
        mut self,
        command: Option<Command>,
        out: Option<PathBuf>,
        seed: Option<u64>,
        checks: Option<&str>,
    ) -> Result<Self> {
        if let Some(c) = command {
            self.command = c;
        }
        if let Some(d) = out {
            self.output.dir = d;
        }
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(list) = checks {
            let parsed: Result<Vec<Check>> = list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect();
            self.checks = Some(parsed?);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad =
            |field: &str, message: &str| Err(HexError::Validation { field: field.into(), message: message.into() });
        let g = &self.grid;
        if g.n < 2 {
            return bad("grid.n", "must be at least 2");
        }
        if g.probe == 0 {
            return bad("grid.probe", "must be positive");
        }
        if g.blaschke_n == 0 {
            return bad("grid.blaschke_n", "must be positive");
        }
        if !(g.t_span.is_finite() && g.t_span > 0.0) {
            return bad("grid.t_span", "must be positive");
        }
        if !(g.eps.is_finite() && g.eps > 0.0) {
            return bad("grid.eps", "must be positive");
        }
        let it = &self.integrator;
        if !(it.rel_tol > 0.0 && it.rel_tol < 1.0) {
            return bad("integrator.rel_tol", "must lie in (0, 1)");
        }
        if !(it.abs_tol > 0.0 && it.abs_tol < 1.0) {
            return bad("integrator.abs_tol", "must lie in (0, 1)");
        }
        if it.max_step.is_some_and(|h| !(h > 0.0)) {
            return bad("integrator.max_step", "must be positive");
        }
        if self.output.json.is_empty() || self.output.json.contains(['/', '\\']) {
            return bad("output.json", "must be a plain file name");
        }
        if self.command == Command::Dual && !self.family.is_dual() {
            return bad("command", "`dual` needs a dual_dim3 or dual_dim2 family");
        }
        if let Some(c) = &self.checks {
            let ok = self.family.applicable(self.lie_spiral.is_some());
            if let Some(x) = c.iter().find(|x| !ok.contains(x)) {
                return Err(HexError::Validation {
                    field: "checks".into(),
                    message: format!("`{}` does not apply to the {} family", x.as_str(), self.family.name()),
                });
            }
        }
        if self.lie_spiral.is_some() && !matches!(&self.family, FamilyConfig::Ode(s) if s.family == OdeFamily::Spiral) {
            return bad("lie_spiral", "needs a spiral family");
        }
        Ok(())
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let head = &text[..offset.min(text.len())];
    let line = head.matches('\n').count() + 1;
    let col = head.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

/// Parses and validates a run configuration. Unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
        HexError::Parse { line, column, message: e.message().to_string() }
    })?;
    let checks = match raw.checks {
        None => None,
        Some(list) => Some(list.iter().map(|s| s.parse()).collect::<Result<Vec<Check>>>()?),
    };
    let f = raw.family;
    let mut found: Vec<(&str, FamilyConfig)> = Vec::new();
    if let Some(t) = f.translation {
        found.push(("translation", FamilyConfig::Translation(t)));
    }
    if let Some(s) = f.spiral {
        found.push(("spiral", FamilyConfig::Ode(s.to_spec(OdeFamily::Spiral))));
    }
    if let Some(s) = f.dilation {
        found.push(("dilation", FamilyConfig::Ode(s.to_spec(OdeFamily::Dilation))));
    }
    if let Some(s) = f.discr {
        found.push(("discr", FamilyConfig::Ode(s.to_spec(OdeFamily::Discr))));
    }
    if let Some(w) = f.simple_wave {
        let spec = match w {
            SimpleWaveSection::Around { around: [e, ff, g], half } => SimpleWaveSpec::around_metric(e, ff, g, half)
                .map_err(|err| HexError::Validation { field: "family.simple_wave".into(), message: err.to_string() })?,
            SimpleWaveSection::Full(s) => s,
        };
        found.push(("simple_wave", FamilyConfig::SimpleWave(spec)));
    }
    if let Some(c) = f.constant_curvature {
        found.push(("constant_curvature", FamilyConfig::ConstantCurvature { curvature: c.kind }));
    }
    if let Some(d) = f.dual_dim3 {
        found.push(("dual_dim3", FamilyConfig::DualDim3 { eps: d.eps, plane: d.plane, domain: d.domain }));
    }
    if let Some(d) = f.dual_dim2 {
        found.push((
            "dual_dim2",
            FamilyConfig::DualDim2(Dim2Spec { rho: d.rho, eps: d.eps, p0: d.p0, z0: d.z0, domain: d.domain }),
        ));
    }
    if found.len() != 1 {
        let names: Vec<&str> = found.iter().map(|(n, _)| *n).collect();
        return Err(HexError::Validation {
            field: "family".into(),
            message: if names.is_empty() {
                "exactly one family section is required, found none".into()
            } else {
                format!("exactly one family section is required, found {}", names.join(", "))
            },
        });
    }
    let family = found.pop().expect("one family").1;
    let cfg = RunConfig {
        command: raw.command,
        seed: raw.seed,
        checks,
        grid: raw.grid,
        integrator: raw.integrator,
        output: raw.output,
        family,
        lie_spiral: raw.lie_spiral,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &std::path::Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| HexError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}
