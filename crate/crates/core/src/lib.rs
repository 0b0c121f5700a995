//! Metrics whose geodesics carry hexagonal 3-webs: the hydrodynamic system for
//! web-adapted metrics, cubic first integrals of the geodesic flow, web
//! curvature and hexagon closure, solution families, projective duality of
//! webs on the quadric, and a batch pipeline around them.
//!
//! Numerical code is generic over `f32`/`f64` through [`scalar::Real`]; the
//! aliases below fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chart_metric;
pub mod cli_io;
pub mod cubic;
pub mod duality;
pub mod error;
pub mod generators;
pub mod geodesic_flow;
pub mod hydro_system;
pub mod jet;
pub mod linalg;
pub mod ode;
pub mod scalar;
pub mod web3;

pub use chart_metric::{gaussian_curvature, ChartPoint, FamilyTag, SignatureMode};
pub use cli_io::{parse_config, run_pipeline, Check, RunConfig, VerificationReport};
pub use duality::{dim2_web, web_from_planes, ConicGeodesic, Dim2Spec, PlaneSection, Regime};
pub use error::{HexError, Result};
pub use generators::{
    make_constant_curvature, make_dilation_family, make_discr_family, make_simple_wave, make_spiral_family,
    make_translation_family, CurvatureKind, DilationBranch, LieSpiralSpec, OdeFamilySpec, Profile, SimpleWaveSpec,
    TranslationFamilySpec,
};
pub use geodesic_flow::{cubic_integral_from_solution, MuDecision};
pub use hydro_system::{characteristic_speeds, hydro_residual};
pub use jet::Jet2;
pub use scalar::Real;
pub use web3::{blaschke_curvature, hexagon_closure_defect, web_from_cubic_integral, WebSource};

pub type Domain = chart_metric::Domain<f64>;
pub type MetricJet = chart_metric::MetricJet2<f64>;
pub type MetricField = chart_metric::MetricField<f64>;
pub type CubicForm = geodesic_flow::CubicForm<f64>;
pub type PhasePoint = geodesic_flow::PhasePoint<f64>;
pub type Trajectory = geodesic_flow::Trajectory<f64>;
pub type Web3Field = web3::Web3Field<f64>;
pub type Direction = web3::Direction<f64>;
pub type DualPoint = duality::DualPoint<f64>;
pub type SlopeTriple = duality::SlopeTriple<f64>;
pub type OdeSolution = generators::OdeSolution<f64>;
pub type LieSpiralImmersion = generators::LieSpiralImmersion<f64>;
pub type IntegratorConfig = ode::IntegratorConfig<f64>;
