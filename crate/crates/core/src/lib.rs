//! Interference modeling for IEEE 802.11 Basic Access networks whose nodes
//! use omnidirectional or multi-interface directional antennas.
//!
//! The crate builds the link-interference graph (i-graph) and the
//! transmitter/receiver-side carrier-sense graphs (tc-graph, rc-graph) over
//! the links of a [`Topology`], folds them into the improved and the
//! classic (Liew) Attacking Case metrics, assigns transmit power under four
//! schemes, and ships a small discrete-event DCF simulator for checking the
//! metric against aggregated throughput.

pub mod constraints;
pub mod error;
pub mod graphs;
pub mod metrics;
pub mod power;
pub mod propagation;
pub mod simulator;
pub mod sweep;
pub mod topology;

pub use constraints::{PairContext, Radio, RxSidePrevention, TransmissionPairKind, TxSidePrevention};
pub use error::{Error, Result};
pub use graphs::{
    build_graph_set, build_i_graph, build_rc_graph, build_tc_graph, AnalysisMode,
    InterferenceGraphSet, WeightedDigraph,
};
pub use metrics::{
    attacking_case_improved, attacking_case_liew, component_breakdown, throughput_gain,
    AttackingCase, Components, Formula, MetricsReport, Summary,
};
pub use power::{PowerAssignment, PowerScheme};
pub use propagation::{AntennaKind, AntennaPattern, Environment, Point, Profile};
pub use simulator::{simulate, LinkStats, SimConfig, SimResult};
pub use sweep::{CellKey, SweepConfig, SweepGrid, SweepRow};

pub use topology::{
    generate_grid_scenario, load_topology, save_topology, AntennaMode, Link, LinkId, NodeId,
    NodeSpec, Role, ScenarioSpec, Topology,
};
