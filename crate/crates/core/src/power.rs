//! Transmit power assignment: ns-2 default power and three minimum-power
//! schemes (per network, per node, per interface).

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagation::{self, db_to_linear, DEFAULT_TX_POWER_W};
use crate::topology::{InterfaceId, Link, LinkId, NodeId, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PowerScheme {
    #[serde(rename = "DP-NChan")]
    DpNchan,
    #[serde(rename = "MP-PNetw")]
    MpPnetw,
    #[serde(rename = "MP-PNode")]
    MpPnode,
    #[serde(rename = "MP-PInte")]
    MpPinte,
}

impl PowerScheme {
    pub const ALL: [PowerScheme; 4] = [
        PowerScheme::DpNchan,
        PowerScheme::MpPnetw,
        PowerScheme::MpPnode,
        PowerScheme::MpPinte,
    ];

    /// Short CLI spelling (`dp`, `net`, `node`, `iface`).
    pub fn flag(&self) -> &'static str {
        match self {
            PowerScheme::DpNchan => "dp",
            PowerScheme::MpPnetw => "net",
            PowerScheme::MpPnode => "node",
            PowerScheme::MpPinte => "iface",
        }
    }
}

impl fmt::Display for PowerScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PowerScheme::DpNchan => "DP-NChan",
            PowerScheme::MpPnetw => "MP-PNetw",
            PowerScheme::MpPnode => "MP-PNode",
            PowerScheme::MpPinte => "MP-PInte",
        })
    }
}

impl FromStr for PowerScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dp" | "dp-nchan" => Ok(PowerScheme::DpNchan),
            "net" | "mp-pnetw" => Ok(PowerScheme::MpPnetw),
            "node" | "mp-pnode" => Ok(PowerScheme::MpPnode),
            "iface" | "mp-pinte" => Ok(PowerScheme::MpPinte),
            other => Err(Error::Config(format!(
                "unknown power scheme `{other}` (expected dp, net, node or iface)"
            ))),
        }
    }
}

/// Transmit power for every `(node, interface)` of a topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAssignment {
    pub scheme: PowerScheme,
    /// Margin the minima were derived with; `None` for fixed or rescaled
    /// assignments.
    #[serde(default)]
    pub margin_db: Option<f64>,
    powers: BTreeMap<(NodeId, InterfaceId), f64>,
}

impl PowerAssignment {
    /// Power of an interface. Panics if the entry is missing, which cannot
    /// happen for assignments built from the same topology.
    pub fn get(&self, node: NodeId, interface: InterfaceId) -> f64 {
        match self.powers.get(&(node, interface)) {
            Some(&p) => p,
            None => panic!("no power entry for node {node} interface {interface}"),
        }
    }

    pub fn try_get(&self, node: NodeId, interface: InterfaceId) -> Option<f64> {
        self.powers.get(&(node, interface)).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = ((NodeId, InterfaceId), f64)> + '_ {
        self.powers.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.powers.is_empty()
    }

    /// Every entry multiplied by `factor`. The scheme tag is kept but the
    /// result no longer counts as derived.
    pub fn scaled(&self, factor: f64) -> Self {
        PowerAssignment {
            scheme: self.scheme,
            margin_db: None,
            powers: self.powers.iter().map(|(&k, &v)| (k, v * factor)).collect(),
        }
    }

    /// The same policy applied to `view`, a re-fitted twin of the topology
    /// this assignment was built for. Derived minima are recomputed without the
    /// cap, since the twin is hypothetical; anything else is carried over.
    pub fn for_view(&self, view: &Topology) -> Result<Self> {
        match self.margin_db {
            Some(margin_db) if self.scheme != PowerScheme::DpNchan => {
                assign_with_cap(view, self.scheme, margin_db, None)
            }
            _ => Ok(self.clone()),
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "node,interface,power_w,scheme")?;
        for ((node, iface), p) in self.entries() {
            writeln!(out, "{node},{iface},{p:e},{}", self.scheme)?;
        }
        Ok(())
    }
}

/// Same power on every interface, tagged as default power.
pub fn uniform_power(topology: &Topology, watts: f64) -> PowerAssignment {
    PowerAssignment {
        scheme: PowerScheme::DpNchan,
        margin_db: None,
        powers: topology.interfaces().map(|k| (k, watts)).collect(),
    }
}

pub fn default_power(topology: &Topology) -> PowerAssignment {
    uniform_power(topology, DEFAULT_TX_POWER_W)
}

/// Smallest power at which `from` (on its link interface) reaches `to` at the
/// receive threshold, multiplied by the margin.
fn required_power(topology: &Topology, link: &Link, reverse: bool, margin: f64) -> f64 {
    let (from, from_if, to, to_if) = if reverse {
        (link.rx, link.rx_interface, link.tx, link.tx_interface)
    } else {
        (link.tx, link.tx_interface, link.rx, link.rx_interface)
    };
    let env = topology.environment();
    let a = topology.node(from).expect("link endpoint exists");
    let b = topology.node(to).expect("link endpoint exists");
    let (pa, pb) = (&a.interfaces[from_if], &b.interfaces[to_if]);
    let r = a.position.distance(&b.position);
    let c = propagation::coupling(pa, pb, a.position.bearing_to(&b.position));
    let target = env.rx_threshold_w * margin;
    let mut p = target * r.powf(env.path_loss_exponent) / c;
    // Guard against the inversion landing one ulp under the threshold.
    let received = |p: f64| {
        propagation::received_power(pa, pb, a.position, b.position, p, env).expect("distinct endpoints")
    };
    while received(p) < target {
        p = p.next_up();
    }
    p
}

/// Per-interface minima over the links each interface serves (DATA from the
/// transmitter and ACK from the receiver), checked against the default cap.
fn serving_minima(
    topology: &Topology,
    margin_db: f64,
    cap: Option<f64>,
) -> Result<BTreeMap<(NodeId, InterfaceId), f64>> {
    let margin = db_to_linear(margin_db);
    let mut minima: BTreeMap<(NodeId, InterfaceId), f64> = BTreeMap::new();
    for link in topology.links() {
        for (reverse, key) in [(false, (link.tx, link.tx_interface)), (true, (link.rx, link.rx_interface))] {
            let p = required_power(topology, link, reverse, margin);
            if let Some(cap_w) = cap {
                check_cap(link.id, p, cap_w)?;
            }
            let e = minima.entry(key).or_insert(0.0);
            *e = e.max(p);
        }
    }
    Ok(minima)
}

fn check_cap(link: LinkId, required_w: f64, cap_w: f64) -> Result<()> {
    if required_w > cap_w {
        return Err(Error::PowerExceedsCap { link, required_w, cap_w });
    }
    Ok(())
}

fn network_value(minima: &BTreeMap<(NodeId, InterfaceId), f64>) -> f64 {
    if minima.is_empty() {
        DEFAULT_TX_POWER_W
    } else {
        minima.values().copied().fold(0.0, f64::max)
    }
}

/// One value per node: the largest of its serving interfaces' minima. Nodes
/// serving no link take the network-wide value so the per-node scheme never
/// exceeds the per-network one.
fn node_values(topology: &Topology, minima: &BTreeMap<(NodeId, InterfaceId), f64>) -> BTreeMap<NodeId, f64> {
    let fallback = network_value(minima);
    topology
        .nodes()
        .iter()
        .map(|n| {
            let own = minima
                .iter()
                .filter(|((node, _), _)| *node == n.id)
                .map(|(_, &p)| p)
                .fold(None, |acc: Option<f64>, p| Some(acc.map_or(p, |a| a.max(p))));
            (n.id, own.unwrap_or(fallback))
        })
        .collect()
}

pub fn min_power_per_interface(topology: &Topology, margin_db: f64) -> Result<PowerAssignment> {
    assign(topology, PowerScheme::MpPinte, margin_db)
}

pub fn min_power_per_node(topology: &Topology, margin_db: f64) -> Result<PowerAssignment> {
    assign(topology, PowerScheme::MpPnode, margin_db)
}

pub fn min_power_per_network(topology: &Topology, margin_db: f64) -> Result<PowerAssignment> {
    assign(topology, PowerScheme::MpPnetw, margin_db)
}

/// Assignment for `scheme`. Minimum-power schemes fail with
/// [`Error::PowerExceedsCap`] when a link needs more than the default power.
pub fn assign(topology: &Topology, scheme: PowerScheme, margin_db: f64) -> Result<PowerAssignment> {
    assign_with_cap(topology, scheme, margin_db, Some(DEFAULT_TX_POWER_W))
}

fn assign_with_cap(
    topology: &Topology,
    scheme: PowerScheme,
    margin_db: f64,
    cap: Option<f64>,
) -> Result<PowerAssignment> {
    if scheme == PowerScheme::DpNchan {
        return Ok(default_power(topology));
    }
    let minima = serving_minima(topology, margin_db, cap)?;
    let per_node = node_values(topology, &minima);
    let network = network_value(&minima);
    let powers = topology
        .interfaces()
        .map(|key| {
            let p = match scheme {
                PowerScheme::MpPinte => minima.get(&key).copied().unwrap_or(per_node[&key.0]),
                PowerScheme::MpPnode => per_node[&key.0],
                _ => network,
            };
            (key, p)
        })
        .collect();
    Ok(PowerAssignment {
        scheme,
        margin_db: Some(margin_db),
        powers,
    })
}
