//! Base classifier, fairness interventions and the fair bagging ensemble.

pub mod bagging;
pub mod intervention;
pub mod linear;
pub mod penalty;
pub mod postprocess;

pub use bagging::{ensemble_predict, fair_miss_bag, train_bag_member, BagMember, EnsembleMode, EnsembleOutput, FairEnsemble};
pub use intervention::{train_intervention, FairModel, Intervention};
pub use linear::{minimize, sigmoid, train_logreg, LinearModel, LogisticObjective, Minimum, Objective, OptimizerSettings};
pub use penalty::{train_fair_penalty, PenaltyConfig, PenaltyConstraint, PenaltyObjective};
pub use postprocess::{postprocess_eqodds, postprocess_eqodds_raw, PostprocessRates};
