//! Numerical toolkit for a family of three-dimensional quadratic
//! diffeomorphisms and for a model map with a homoclinic tangency whose
//! first-return maps approach those quadratic families under rescaling.
//! Provides orbit and Lyapunov-spectrum computation, attractor
//! classification, and parameter-space sweeps.

pub mod atlas;
pub mod dd;
pub mod error;
pub mod lyapunov;
pub mod maps;
pub mod model;
pub mod rescale;

pub use atlas::{
    boundary_fraction, delta_k_scan, linspace, region_extract, seed_state, sweep_grid, Atlas,
    AtlasCell, DeltaKCell, DeltaKScan, Region, SeedPolicy, SweepAxis, SweepConfig,
};
pub use error::{Error, Result};
pub use maps::henon::{
    fixed_points, hatted_params, henon3d_inverse_jacobian, henon3d_inverse_step, henon3d_invert,
    henon3d_jacobian, henon3d_step, mira_step, FixedPointAnalysis, Henon3d, HenonParams,
    InverseHenon3d, InverseHenonParams,
};
pub use maps::limit::{
    case1_from_case2_coords, case_equivalence_check, limit_map_case1, limit_map_case2, LimitCase1,
    LimitCase2,
};
pub use lyapunov::{
    classify_attractor, lyapunov_spectrum, orbit, AttractorClass, AttractorKind, ClassifyConfig,
    LyapunovSpectrum, OrbitStats,
};
pub use maps::{is_escaped, Map3, State3, DIVERGENCE_RADIUS};
pub use model::{
    apply_unfolding, classify_tangency, default_saddle, global_map_jacobian, global_map_step,
    local_map_step, local_map_power, FirstReturnMap, GlobalMapCoefficients, Model, ModelConfig,
    SaddleParams, Strip, TailCoefficients, TangencyCase, UnfoldingParams, MODEL_SCHEMA,
};
pub use rescale::{
    convergence_report, deviation_from_limit, limit_fixed_point, limit_jacobian, limit_step,
    naive_params_for_targets, newton_fixed_point, params_for_targets, rescaled_return_map,
    rescaled_return_map_for_targets, ConvergenceReport, ConvergenceRow, DeviationStats,
    LimitParams, RescaleChart, RescaledReturnMap,
};
