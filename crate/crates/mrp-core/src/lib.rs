//! Markov-renewal tick-by-tick price model.
//!
//! A marked point process (T_n, J_n) drives a pure-jump price: marks are
//! signed tick increments whose signs follow a two-state chain with
//! correlation alpha (microstructure noise), and sojourns follow renewal
//! laws that may depend on whether consecutive jumps agree in direction
//! (volatility clustering). The crate provides exact simulation,
//! parametric and nonparametric estimation from tick data, the analytic
//! mean signature plot, and the diffusive scaling-limit variance.

pub mod chain;
pub mod convolve;
pub mod error;
pub mod estimate;
pub mod grid;
pub mod laws;
pub mod model;
pub mod rng;
pub mod signature;
pub mod simulate;
pub mod special;
pub mod stats;

pub use chain::{
    build_transition_matrix, drift_constant, expected_ln_squared, invariant_law,
    macroscopic_variance_general, sign_autocorrelation, Mark, ReturnChainSpec, StationaryLaw,
    TransitionMatrix,
};
pub use error::{Error, Result};
pub use estimate::{
    build_subsamples, estimate_alpha, estimate_size_probs, fit_gamma_mle, fit_gamma_moments,
    fit_model, histogram_density, ingest_ticks, kernel_density, kernel_hazard, EstimatorChoice,
    FitConfig, FitReport, HazardTarget, SubsampleIndex, SubsampleMode, TickSeries,
};
pub use grid::{GridFunction, GridSpec};
pub use laws::RenewalLaw;
pub use model::{load_model, save_model, Kernels, MixtureF, ModelDocument, MrpModel};
pub use signature::{
    compute_g_alpha, default_tau_grid, empirical_signature, mean_signature_analytic,
    mean_signature_monte_carlo, signature_limits, GAlphaTable, Provenance, SignatureCurve,
};
pub use simulate::{
    generator_apply, semigroup_check, simulate_batch, simulate_n_jumps, simulate_path,
    stationary_delay_sample, write_paths_csv, BatchMeta, InitMode, PricePath, SemiMarkovState,
    SemigroupCheck, StationaryDelay, TestFunction,
};
