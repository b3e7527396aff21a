//! Pairwise constraints between an ordered link pair `(i, j)`.
//!
//! Physical collision constraints compare the wanted signal at one of link
//! `j`'s nodes against `K` times the interference from one of link `i`'s
//! nodes. Collision prevention constraints compare a distance against the
//! carrier-sense or transmission range of one of link `i`'s nodes along the
//! bearing to the victim. Every predicate looks at exactly two links.
//!
//! Physical collisions are received through the victim's serving interface.
//! Carrier sensing is node-wide: a node defers when any of its interfaces
//! senses the channel busy, so prevention predicates take the best of the
//! victim's interfaces toward the source.
//!
//! A node is always "in range" of itself: a link that shares a node with
//! another link collides with it on any frame that node sends or receives.

use std::sync::Arc;

use crate::error::Result;
use crate::graphs::AnalysisMode;
use crate::power::PowerAssignment;
use crate::propagation::{self, AntennaPattern, Environment, Point};
use crate::topology::{LinkId, NodeId, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TransmissionPairKind {
    DataData,
    DataAck,
    AckData,
    AckAck,
}

impl TransmissionPairKind {
    pub const ALL: [TransmissionPairKind; 4] = [
        TransmissionPairKind::DataData,
        TransmissionPairKind::DataAck,
        TransmissionPairKind::AckData,
        TransmissionPairKind::AckAck,
    ];
}

/// Transmitter-side prevention: link `i` activity sensed at `T_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TxSidePrevention {
    /// `|T_j − T_i| < CSRange` of `T_i`'s DATA.
    DataDataCs,
    /// `|T_j − R_i| < CSRange` of `R_i`'s ACK.
    AckDataCs,
    /// `|T_j − T_i| < TXRange` of `T_i`'s DATA.
    DataDataTx,
}

/// Receiver-side prevention: link `i` activity sensed at `R_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RxSidePrevention {
    /// `|R_j − T_i| < CSRange` of `T_i`'s DATA.
    DataAckCs,
    /// `|R_j − R_i| < CSRange` of `R_i`'s ACK.
    AckAckCs,
    /// `|R_j − T_i| < TXRange` of `T_i`'s DATA.
    DataAckTx,
}

/// A link endpoint as seen by the constraints: where it is, which pattern it
/// radiates and receives through, the patterns it senses the channel with, and
/// how much power it sends.
#[derive(Debug, Clone, PartialEq)]
pub struct Radio {
    pub node: NodeId,
    pub position: Point,
    pub pattern: AntennaPattern,
    pub sense_patterns: Arc<[AntennaPattern]>,
    pub tx_power_w: f64,
}

impl Radio {
    /// Power this radio delivers to `victim`; infinite when both are the same
    /// node or co-located.
    pub fn power_at(&self, victim: &Radio, env: &Environment) -> f64 {
        if self.node == victim.node {
            return f64::INFINITY;
        }
        propagation::received_power(
            &self.pattern,
            &victim.pattern,
            self.position,
            victim.position,
            self.tx_power_w,
            env,
        )
        .unwrap_or(f64::INFINITY)
    }

    /// `|victim − self| < range(self → victim)` for the given threshold.
    pub fn reaches(&self, victim: &Radio, threshold_w: f64, env: &Environment) -> bool {
        if self.node == victim.node {
            return true;
        }
        let d = self.position.distance(&victim.position);
        if d == 0.0 {
            return true;
        }
        let bearing = self.position.bearing_to(&victim.position);
        victim.sense_patterns.iter().any(|ear| {
            d < propagation::range_for_threshold(&self.pattern, ear, self.tx_power_w, threshold_w, bearing, env)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkRadios {
    pub id: LinkId,
    pub tx: Radio,
    pub rx: Radio,
}

impl LinkRadios {
    /// Resolves a link's endpoints. In Liew mode every pattern, including the
    /// sensing ones, is replaced by an omni pattern of the reference gain (node
    /// heights are kept).
    pub fn resolve(topology: &Topology, power: &PowerAssignment, link: LinkId, mode: AnalysisMode) -> Option<Self> {
        let l = topology.link(link)?;
        let radio = |node: NodeId, iface: usize| {
            let n = topology.node(node)?;
            let native = *n.interfaces.get(iface)?;
            let pattern = match mode {
                AnalysisMode::Improved => native,
                AnalysisMode::Liew { reference_gain } => AntennaPattern::omni(reference_gain, native.height_m),
            };
            let sense_patterns: Arc<[AntennaPattern]> = match mode {
                AnalysisMode::Improved => n.interfaces.as_slice().into(),
                AnalysisMode::Liew { .. } => Arc::new([pattern]),
            };
            Some(Radio {
                node,
                position: n.position,
                pattern,
                sense_patterns,
                tx_power_w: power.try_get(node, iface)?,
            })
        };
        Some(LinkRadios {
            id: l.id,
            tx: radio(l.tx, l.tx_interface)?,
            rx: radio(l.rx, l.rx_interface)?,
        })
    }
}

/// The ordered pair `(i, j)` under one power assignment.
#[derive(Debug, Clone)]
pub struct PairContext<'a> {
    pub link_i: LinkRadios,
    pub link_j: LinkRadios,
    pub env: &'a Environment,
}

impl<'a> PairContext<'a> {
    pub fn new(link_i: LinkRadios, link_j: LinkRadios, env: &'a Environment) -> Self {
        debug_assert_ne!(link_i.id, link_j.id, "a pair needs two distinct links");
        PairContext { link_i, link_j, env }
    }

    pub fn from_topology(
        topology: &'a Topology,
        power: &PowerAssignment,
        i: LinkId,
        j: LinkId,
        mode: AnalysisMode,
    ) -> Result<Self> {
        let missing = |id| crate::Error::InvalidTopology(format!("link {id} missing or unpowered"));
        let link_i = LinkRadios::resolve(topology, power, i, mode).ok_or_else(|| missing(i))?;
        let link_j = LinkRadios::resolve(topology, power, j, mode).ok_or_else(|| missing(j))?;
        Ok(Self::new(link_i, link_j, topology.environment()))
    }
}

/// True when link `i`'s frame of the given kind corrupts link `j`'s frame.
pub fn physical_collision(ctx: &PairContext<'_>, kind: TransmissionPairKind) -> bool {
    let (i, j) = (&ctx.link_i, &ctx.link_j);
    let (interferer, signal_src, victim) = match kind {
        TransmissionPairKind::DataData => (&i.tx, &j.tx, &j.rx),
        TransmissionPairKind::DataAck => (&i.tx, &j.rx, &j.tx),
        TransmissionPairKind::AckData => (&i.rx, &j.tx, &j.rx),
        TransmissionPairKind::AckAck => (&i.rx, &j.rx, &j.tx),
    };
    let signal = signal_src.power_at(victim, ctx.env);
    let interference = interferer.power_at(victim, ctx.env);
    signal < ctx.env.sir_requirement * interference
}

pub fn tx_side_prevention(ctx: &PairContext<'_>, which: TxSidePrevention) -> bool {
    let (i, j) = (&ctx.link_i, &ctx.link_j);
    let env = ctx.env;
    match which {
        TxSidePrevention::DataDataCs => i.tx.reaches(&j.tx, env.cs_threshold_w, env),
        TxSidePrevention::AckDataCs => i.rx.reaches(&j.tx, env.cs_threshold_w, env),
        TxSidePrevention::DataDataTx => i.tx.reaches(&j.tx, env.rx_threshold_w, env),
    }
}

pub fn rx_side_prevention(ctx: &PairContext<'_>, which: RxSidePrevention) -> bool {
    let (i, j) = (&ctx.link_i, &ctx.link_j);
    let env = ctx.env;
    match which {
        RxSidePrevention::DataAckCs => i.tx.reaches(&j.rx, env.cs_threshold_w, env),
        RxSidePrevention::AckAckCs => i.rx.reaches(&j.rx, env.cs_threshold_w, env),
        RxSidePrevention::DataAckTx => i.tx.reaches(&j.rx, env.rx_threshold_w, env),
    }
}
