//! Model-size reduction: pass-through junction contraction and k-means
//! aggregation of buildings into consumer nodes.

mod aggregate;
mod contract;
mod kmeans;

pub use self::aggregate::{aggregate_clusters, consumer_node_id};
pub use self::contract::contract_degree2;
pub use self::kmeans::{kmeans, kmeans_best_of, within_cluster_ss, ClusterAssignment, ClusterConfig};
