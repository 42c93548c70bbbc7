//! Explicit-state probabilistic model checking and policy analysis.
//!
//! The crate parses a single-module PRISM subset into explicit MDPs, checks
//! PCTL reachability and until properties (with optimal scheduler synthesis),
//! builds the Markov chain induced by a policy, and explains neural policies
//! through feature pruning and permutation importance.

pub mod error;
pub mod explain;
pub mod induction;
pub mod learning;
pub mod model;
pub mod pctl;
pub mod policy;
pub mod prism;
pub mod random;

pub use error::{Error, Location, ParseError, Result};
pub use model::{
    validate_dtmc, validate_mdp, ActionId, Choice, ExplicitDtmc, ExplicitMdp, LabelRuleSet, Labels, ObservationTable,
    StateId,
};
