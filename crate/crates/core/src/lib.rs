//! Autoresonant phase locking under combined external and parametric chirped driving
//! with weak dissipation: phase-function roots, parameter-plane partition, asymptotic
//! series for the locked solutions, stability classification and direct simulation.

pub mod designer;
pub mod error;
pub mod model;
pub mod ode;
pub mod partition;
pub mod phase;
pub mod series;
pub mod simulator;
pub mod stability;

pub use designer::{design_excitation, Design, DesignSpec};
pub use error::{Error, Result};
pub use model::{ModelParams, PhaseParams};
pub use partition::{
    bifurcation_curves, classify_region, multiple_root_domain, p_functions, special_points, z_functions,
    BifurcationCurve, CurveBranch, Partition, RegionLabel,
};
pub use phase::{eval_p, find_roots, PhaseRoot, RootOptions};
pub use series::{build_series, evaluate_series, residual_norm, Branch, SeriesCase, SeriesSolution};
pub use simulator::{
    basin_sample, detect_capture, integrate, integrate_perturbation, simulate_full_oscillator, Capture, CaptureOptions,
    InitGrid, Mode, OscillatorParams, PerturbOptions, Reference, SimOptions, Trajectory,
};
pub use stability::{
    classify_stability, exponent_power_fit, linearization_exponents, lyapunov_value, verify_decrease, LyapunovFrame,
    StabilityVerdict, Status,
};
