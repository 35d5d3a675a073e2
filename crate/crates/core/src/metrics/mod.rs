//! Accuracy and fairness metrics, information quantities, Pareto filtering
//! and the exact fairness-accuracy oracle.

pub mod info;
pub mod oracle;
pub mod pareto;
pub mod rates;

pub use info::{
    binary_entropy, conditional_entropy, entropy, mutual_info_my, mutual_information, plugin_conditional_entropy,
    plugin_mutual_information,
};
pub use oracle::{brute_force_fair_optimal, classifier_rates, eqodds_violation, FairOptimum, JointTable};
pub use pareto::{pareto_frontier, pareto_indices, TradeoffPoint};
pub use rates::{
    accuracy, accuracy_raw, disparity, group_rates, group_rates_raw, group_rates_soft, DisparityKind, GroupRate,
    GroupRates,
};
