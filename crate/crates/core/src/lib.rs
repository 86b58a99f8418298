//! Order-restricted estimation of normal means and step-up identification of
//! the minimum effective dose (MED).
//!
//! * [`isotonic`]: weighted monotone regression of group means.
//! * [`summary`]: group summaries, pooled `S` and its degrees of freedom.
//! * [`tdist`]: Student-t tail probabilities and quantiles.
//! * [`calibration`]: Monte Carlo cutoffs for the step-up test.
//! * [`med`]: the step-up test and the Hsu–Berger step-down comparator.
//! * [`sim`]: error-rate, power and stochastic-ordering studies.

pub mod calibration;
pub mod error;
pub mod io;
pub mod isotonic;
pub mod med;
pub mod report;
pub mod rng;
pub mod sim;
pub mod summary;
pub mod tdist;

pub use calibration::{
    calibrate, simulate_lfc_replicate, verify_level, CalibrationConfig, CriticalValues, Estimate,
};
pub use error::{Error, Result};
pub use isotonic::{
    combined_mean, oracle_fit, pava_fit, sdmmsa_fit, Block, FitMethod, IsotonicFit, WeightedMeans,
};
pub use med::{dominance_check_med1, hsu_berger_med, step_up_identify_med, MedDecision, MedMethod};
pub use sim::{run_error_study, run_ordering_study, run_power_study, ScenarioConfig, StudyResult};
pub use summary::{pool_from_summaries, summarize_raw, DoseResponseData, GroupSummary};
pub use tdist::t_quantile;
