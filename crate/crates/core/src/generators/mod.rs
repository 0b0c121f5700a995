//! Metric families solving the hydrodynamic system, constant-curvature
//! baselines, and the Lie spiral immersion.

pub mod constant_curvature;
pub mod lie_spiral;

pub mod ode_family;
pub mod profile;
pub mod simple_wave;

pub mod translation;

pub use constant_curvature::{flat, make_constant_curvature, CurvatureKind};
pub use lie_spiral::{immerse_lie_spiral, LieSpiralImmersion, LieSpiralSpec};

pub use ode_family::{
    make_dilation_family, make_discr_family, make_spiral_family, DilationBranch, OdeFamily, OdeFamilySpec, OdeSolution,
};
pub use profile::Profile;
pub use simple_wave::{make_simple_wave, SimpleWaveSpec, WaveProfile};

pub use translation::{
    classify_translation_kappa, make_translation_family, translation_curvature, TranslationFamilySpec,
};
