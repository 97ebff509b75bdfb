//! One-step influence, shadow constants, and Monte-Carlo verifiers.

pub mod influence;
pub mod verify;

pub use influence::{influence, shadow_constant, InfluenceMethod, InfluenceQuery};
pub use verify::{
    check_expected_submodularity, check_greedy_bound, check_influence_submodularity,
    check_selection_rule_distribution, describe_topology, BoundReport, DistributionReport,
    ViolationReport,
};
