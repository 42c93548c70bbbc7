//! PCTL reachability and until properties over DTMCs and MDPs.

mod check;
mod endcomp;
mod formula;
mod linear;
mod qualitative;

pub use check::{
    admissible_action_sets, check_dtmc, check_dtmc_with, check_mdp, check_mdp_with, extract_scheduler,
    optimal_action_sets, CheckResult, Scheduler, SolveMethod, SolverOptions, SolverStats, DEFAULT_OPTIMALITY_EPSILON,
    SCHEDULER_TOLERANCE,
};
pub use formula::{
    load_property_file, parse_property, parse_property_file, Bound, Direction, PathFormula, PctlFormula, PropertyEntry,
    Query, StateFormula,
};
pub use qualitative::Prob01;
