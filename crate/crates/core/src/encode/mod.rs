//! Missingness-aware encoders and missing-pattern clustering.

pub mod cluster;
pub mod features;

pub use cluster::{
    assign_cluster, cluster_missing_patterns, cluster_missing_patterns_validated, ClusterConfig, ClusterPartition,
    LeafRecord, Node, SplitRecord,
};
pub use features::{encode_affine, encode_indicators, encode_zero, Column, EncodedDataset, Encoder, EncoderKind};
