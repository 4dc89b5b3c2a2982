//! Exact all-levels reliability of multistate flow networks.
//!
//! A multistate flow network is an undirected simple graph whose edges carry
//! random integer capacities. For every flow level `d` the engine computes
//! the probability `r_d` that exactly `d` units, and `R_d` that at least `d`
//! units, can be sent from vertex 1 to vertex `n`, in a single sweep over
//! the mixed-radix state space.
//!
//! ```
//! use mfn_core::model::bridge_example;
//! use mfn_core::reliability::{all_levels_reliability, EngineOptions};
//!
//! let (net, dist) = bridge_example();
//! let report = all_levels_reliability(&net, &dist, &EngineOptions::default()).unwrap();
//! assert_eq!(report.d_max, 4);
//! assert_eq!(report.n_processed, 215);
//! ```

pub mod cli;
pub mod enumeration;
pub mod generate;
pub mod maxflow;
pub mod model;
pub mod reliability;
pub mod sum;

pub use enumeration::{find_first_connected_vector, FirstConnectedVector, RadixProfile, Rank};
pub use maxflow::{max_flow, min_cut_oracle, FlowResult, FlowScratch};
pub use model::{
    parse_network, pr_vector, serialize_report, uniform_distribution, AllLevelsReport,
    EdgeStateDistribution, Network, ReportFormat, StateVector,
};
pub use reliability::{
    all_levels_reliability, exhaustive_oracle, monte_carlo, suffix_sums, EngineError,
    EngineOptions, MonteCarloReport,
};
