//! Reference experiments: synthetic noisy data, Morozov parameter choice,
//! convergence-rate studies, weighted versus unweighted comparisons and
//! artifact export.
//!
//! Data for every example is generated on the once-refined mesh and inverted
//! on the coarse one.

mod config;
mod convergence;
mod examples;
mod export;
mod model;
mod morozov;
mod noise;

pub use config::{ConductivityChoice, DomainChoice, ExampleConfig, PointSource};
pub use convergence::{
    convergence_study, default_c, loglog_fit, sign_preserving_bound, ConvergenceOptions, ConvergenceRecord,
    ConvergenceStudy, LineFit, DEFAULT_BOUND_FRACTION,
};
pub use examples::{
    run_example, run_scenario, DataSource, ExampleBundle, MorozovRecord, Scenario, SolutionRecord, SourceSummary,
    SupportComparison,
};
pub use export::{export_artifacts, heatmap_svg, results_csv, singular_values_csv, support_csv};
pub use model::{Formulation, InverseModel};
pub use morozov::{
    log_grid, morozov_select_alpha, DiscrepancyPoint, MorozovSelection, DEFAULT_ETA, DEFAULT_POINTS_PER_DECADE,
};
pub use noise::{add_noise, data_spread, make_noisy_observation, scaled_perturbation, standard_normal, NoisySpec};
