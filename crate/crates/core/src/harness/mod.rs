//! Monte Carlo experiment engine: trials, confidence intervals, bound
//! verdicts, IDS curves and result files.

mod config;
mod output;
mod run;
mod stats;

pub use config::{
    EnergyGrid, ExperimentConfig, ExperimentKind, ExperimentSpec, OracleCase, OutputSpec, PhiSpec,
    MIN_TRIALS,
};
pub use output::{
    read_results_csv, run_experiment, write_ids_csv, write_results_csv, ResultRow, RunOutcome,
    RESULTS_HEADER,
};
pub use run::{
    build_phi, estimate_ids, run_correlated_trials, run_multiparticle_trials, run_oracle,
    run_wegner_trials, single_site_probability, Conditioning, ExperimentResult, IdsCurve,
    IdsResult, OracleResult, ProbabilityEstimate, RunOptions, Verdict, IDS_TIE_TOLERANCE,
    MAX_FAILURE_FRACTION,
};
pub use stats::{derive_trial_seed, wilson_interval};
