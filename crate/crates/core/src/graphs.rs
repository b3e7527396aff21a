//! The three weighted digraphs over link vertices.
//!
//! * i-graph: weight = how many of the four DATA/ACK pair kinds collide.
//! * tc-graph: `1[DATA CS ∨ DATA TX at T_j] + 1[ACK CS at T_j]`.
//! * rc-graph: `1[DATA CS ∨ DATA TX at R_j] + 1[ACK CS at R_j]`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::constraints::{
    physical_collision, rx_side_prevention, tx_side_prevention, LinkRadios, PairContext,
    RxSidePrevention, TransmissionPairKind, TxSidePrevention,
};
use crate::error::{Error, Result};
use crate::power::PowerAssignment;
use crate::topology::{LinkId, Topology};

/// How antenna patterns enter the constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum AnalysisMode {
    /// Direction-aware: each node's actual interface patterns.
    Improved,
    /// Direction-blind: every pattern replaced by an omni of `reference_gain`.
    Liew { reference_gain: f64 },
}

impl AnalysisMode {
    pub const fn liew() -> Self {
        AnalysisMode::Liew { reference_gain: 1.0 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AnalysisMode::Improved => "improved",
            AnalysisMode::Liew { .. } => "liew",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedDigraph {
    vertices: Vec<LinkId>,
    /// source → (target → weight), both levels sorted.
    adjacency: BTreeMap<LinkId, BTreeMap<LinkId, u8>>,
}

impl WeightedDigraph {
    pub fn new(vertices: impl IntoIterator<Item = LinkId>) -> Self {
        let mut vertices: Vec<LinkId> = vertices.into_iter().collect();
        vertices.sort_unstable();
        vertices.dedup();
        WeightedDigraph {
            vertices,
            adjacency: BTreeMap::new(),
        }
    }

    /// Sets `w(i → j)`; weight 0 removes the edge.
    pub fn set_weight(&mut self, i: LinkId, j: LinkId, weight: u8) {
        assert_ne!(i, j, "self-edges are not allowed");
        if weight == 0 {
            if let Some(row) = self.adjacency.get_mut(&i) {
                row.remove(&j);
                if row.is_empty() {
                    self.adjacency.remove(&i);
                }
            }
        } else {
            self.adjacency.entry(i).or_default().insert(j, weight);
        }
    }

    pub fn vertices(&self) -> &[LinkId] {
        &self.vertices
    }

    /// Weight of `i → j`, 0 when there is no edge.
    pub fn weight(&self, i: LinkId, j: LinkId) -> u8 {
        self.adjacency.get(&i).and_then(|row| row.get(&j)).copied().unwrap_or(0)
    }

    pub fn contains_edge(&self, i: LinkId, j: LinkId) -> bool {
        self.weight(i, j) > 0
    }

    /// Edges sorted by `(source, target)`.
    pub fn edges(&self) -> impl Iterator<Item = (LinkId, LinkId, u8)> + '_ {
        self.adjacency
            .iter()
            .flat_map(|(&i, row)| row.iter().map(move |(&j, &w)| (i, j, w)))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.values().map(BTreeMap::len).sum()
    }

    pub fn total_weight(&self) -> u64 {
        self.edges().map(|(_, _, w)| u64::from(w)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceGraphSet {
    pub mode: AnalysisMode,
    pub i_graph: WeightedDigraph,
    pub tc_graph: WeightedDigraph,
    pub rc_graph: WeightedDigraph,
}

fn resolve_all(topology: &Topology, power: &PowerAssignment, mode: AnalysisMode) -> Result<Vec<LinkRadios>> {
    topology
        .links()
        .iter()
        .map(|l| {
            LinkRadios::resolve(topology, power, l.id, mode)
                .ok_or_else(|| Error::InvalidTopology(format!("link {} has no power entry", l.id)))
        })
        .collect()
}

fn build_with(
    topology: &Topology,
    power: &PowerAssignment,
    mode: AnalysisMode,
    weight: impl Fn(&PairContext<'_>) -> u8,
) -> Result<WeightedDigraph> {
    let radios = resolve_all(topology, power, mode)?;
    let env = topology.environment();
    let mut g = WeightedDigraph::new(radios.iter().map(|r| r.id));
    for a in &radios {
        for b in &radios {
            if a.id == b.id {
                continue;
            }
            let w = weight(&PairContext::new(a.clone(), b.clone(), env));
            g.set_weight(a.id, b.id, w);
        }
    }
    Ok(g)
}

pub fn i_weight(ctx: &PairContext<'_>) -> u8 {
    TransmissionPairKind::ALL
        .iter()
        .filter(|&&k| physical_collision(ctx, k))
        .count() as u8
}

pub fn tc_weight(ctx: &PairContext<'_>) -> u8 {
    let data = tx_side_prevention(ctx, TxSidePrevention::DataDataCs)
        || tx_side_prevention(ctx, TxSidePrevention::DataDataTx);
    let ack = tx_side_prevention(ctx, TxSidePrevention::AckDataCs);
    u8::from(data) + u8::from(ack)
}

pub fn rc_weight(ctx: &PairContext<'_>) -> u8 {
    let data = rx_side_prevention(ctx, RxSidePrevention::DataAckCs)
        || rx_side_prevention(ctx, RxSidePrevention::DataAckTx);
    let ack = rx_side_prevention(ctx, RxSidePrevention::AckAckCs);
    u8::from(data) + u8::from(ack)
}

pub fn build_i_graph(topology: &Topology, power: &PowerAssignment, mode: AnalysisMode) -> Result<WeightedDigraph> {
    build_with(topology, power, mode, i_weight)
}

pub fn build_tc_graph(topology: &Topology, power: &PowerAssignment, mode: AnalysisMode) -> Result<WeightedDigraph> {
    build_with(topology, power, mode, tc_weight)
}

pub fn build_rc_graph(topology: &Topology, power: &PowerAssignment, mode: AnalysisMode) -> Result<WeightedDigraph> {
    build_with(topology, power, mode, rc_weight)
}

pub fn build_graph_set(
    topology: &Topology,
    power: &PowerAssignment,
    mode: AnalysisMode,
) -> Result<InterferenceGraphSet> {
    let radios = resolve_all(topology, power, mode)?;
    let env = topology.environment();
    let ids = radios.iter().map(|r| r.id);
    let (mut i_graph, mut tc_graph, mut rc_graph) = (
        WeightedDigraph::new(ids.clone()),
        WeightedDigraph::new(ids.clone()),
        WeightedDigraph::new(ids),
    );
    for a in &radios {
        for b in &radios {
            if a.id == b.id {
                continue;
            }
            let ctx = PairContext::new(a.clone(), b.clone(), env);
            i_graph.set_weight(a.id, b.id, i_weight(&ctx));
            tc_graph.set_weight(a.id, b.id, tc_weight(&ctx));
            rc_graph.set_weight(a.id, b.id, rc_weight(&ctx));
        }
    }
    Ok(InterferenceGraphSet {
        mode,
        i_graph,
        tc_graph,
        rc_graph,
    })
}

impl InterferenceGraphSet {
    pub fn graphs(&self) -> [(&'static str, &WeightedDigraph); 3] {
        [("i_graph", &self.i_graph), ("tc_graph", &self.tc_graph), ("rc_graph", &self.rc_graph)]
    }

    /// One `digraph` block per graph. Vertices are arrow-shaped and labelled
    /// with the link id and its `T<tx>->R<rx>` endpoints.
    pub fn to_dot(&self, topology: &Topology) -> String {
        let mut out = String::new();
        for (name, g) in self.graphs() {
            let _ = writeln!(out, "digraph {}_{} {{", name, self.mode.name());
            let _ = writeln!(out, "    node [shape=rarrow];");
            for &v in g.vertices() {
                let ends = topology
                    .link(v)
                    .map(|l| format!("T{}->R{}", l.tx, l.rx))
                    .unwrap_or_default();
                let _ = writeln!(out, "    {v} [label=\"{v}\\n{ends}\"];");
            }
            for (i, j, w) in g.edges() {
                let _ = writeln!(out, "    {i} -> {j} [weight={w}, label=\"{w}\"];");
            }
            out.push_str("}\n");
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph set serializes")
    }
}
