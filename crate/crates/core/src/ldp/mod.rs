//! Rate-function evaluation by optimal control, Monte Carlo rare-event
//! estimates, and weak-convergence diagnostics for the skeleton map.

mod montecarlo;
mod optimize;
mod target;
mod weak;

pub use montecarlo::{mc_rare_event, RareEventRow};
pub use optimize::{
    rate_function, Method, OptimizerConfig, RateFunctionResult, StageTrace, StartTrace,
};
pub use target::{PenaltyCost, TargetSet};
pub use weak::{
    condition_b_experiment, oscillatory_control, refine_control, weak_energy_check, ConditionBRow,
    TestFunction, WeakEnergyReport,
};
