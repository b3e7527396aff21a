//! Network scene: nodes with one omni or four sector interfaces, uplink
//! STA→AP links, nearest-AP association, the seeded 3×3 grid scenario and
//! the JSON topology file format.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagation::{
    self, AntennaKind, AntennaPattern, Environment, Point, DEFAULT_TX_POWER_W,
};

pub type NodeId = u32;
pub type LinkId = u32;
pub type InterfaceId = usize;

pub const DEFAULT_QUEUE_CAPACITY: usize = 50;
pub const DA_GAIN: f64 = 2.0;
pub const DA_BEAMWIDTH_DEG: f64 = 90.0;
pub const DA_BORESIGHTS_DEG: [f64; 4] = [0.0, 90.0, 180.0, 270.0];
pub const OA_GAIN: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Role {
    Ap,
    Sta,
}

/// Antenna setup of a whole scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AntennaMode {
    Oa,
    Da,
}

impl fmt::Display for AntennaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AntennaMode::Oa => "oa",
            AntennaMode::Da => "da",
        })
    }
}

impl FromStr for AntennaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "oa" | "omni" => Ok(AntennaMode::Oa),
            "da" | "directional" => Ok(AntennaMode::Da),
            other => Err(Error::Config(format!("unknown antenna mode `{other}` (expected oa or da)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: NodeId,
    pub role: Role,
    pub position: Point,
    pub interfaces: Vec<AntennaPattern>,
    pub queue_capacity: usize,
}

impl NodeSpec {
    pub fn omni(id: NodeId, role: Role, position: Point, gain: f64, height_m: f64) -> Self {
        NodeSpec {
            id,
            role,
            position,
            interfaces: vec![AntennaPattern::omni(gain, height_m)],
            queue_capacity: DEFAULT_QUEUE_CAPACITY,
        }
    }

    /// Four 90° sectors pointed at 0°, 90°, 180° and 270°.
    pub fn directional(id: NodeId, role: Role, position: Point, gain: f64, height_m: f64) -> Self {
        NodeSpec {
            id,
            role,
            position,
            interfaces: DA_BORESIGHTS_DEG
                .iter()
                .map(|&b| AntennaPattern::sector(b, DA_BEAMWIDTH_DEG, gain, height_m))
                .collect(),
            queue_capacity: DEFAULT_QUEUE_CAPACITY,
        }
    }

    pub fn with_mode(id: NodeId, role: Role, position: Point, mode: AntennaMode, height_m: f64) -> Self {
        match mode {
            AntennaMode::Oa => Self::omni(id, role, position, OA_GAIN, height_m),
            AntennaMode::Da => Self::directional(id, role, position, DA_GAIN, height_m),
        }
    }

    pub fn is_directional(&self) -> bool {
        self.interfaces.iter().any(|p| p.kind == AntennaKind::Sector)
    }

    pub fn peak_gain(&self) -> f64 {
        self.interfaces.iter().map(|p| p.peak_gain).fold(0.0, f64::max)
    }

    pub fn height_m(&self) -> f64 {
        self.interfaces[0].height_m
    }

    /// Omni pattern with this node's peak gain and height.
    pub fn reference_pattern(&self) -> AntennaPattern {
        AntennaPattern::omni(self.peak_gain(), self.height_m())
    }
}

/// Interface used to reach a peer at `bearing`.
///
/// Sector interfaces cover the half-open span `[boresight − w/2, boresight + w/2)`
/// so a bearing on a shared edge belongs to exactly one of them. If no sector
/// covers the bearing, the one with the nearest boresight wins.
pub fn select_interface(node: &NodeSpec, bearing: f64) -> InterfaceId {
    if node.interfaces.len() <= 1 {
        return 0;
    }
    let bearing = propagation::normalize_bearing(bearing);
    let mut nearest = (0, f64::INFINITY);
    for (k, p) in node.interfaces.iter().enumerate() {
        if p.kind == AntennaKind::Omni {
            return k;
        }
        let start = p.boresight_deg - p.beamwidth_deg / 2.0;
        if propagation::normalize_bearing(bearing - start) < p.beamwidth_deg {
            return k;
        }
        let d = propagation::angular_distance(bearing, p.boresight_deg);
        if d < nearest.1 {
            nearest = (k, d);
        }
    }
    nearest.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub id: LinkId,
    pub tx: NodeId,
    pub rx: NodeId,
    pub tx_interface: InterfaceId,
    pub rx_interface: InterfaceId,
    /// Bearing from the transmitter toward the receiver.
    pub tx_bearing_deg: f64,
    /// Bearing from the receiver back toward the transmitter.
    pub rx_bearing_deg: f64,
}

impl Link {
    pub fn between(id: LinkId, tx: &NodeSpec, rx: &NodeSpec) -> Self {
        let tx_bearing = tx.position.bearing_to(&rx.position);
        let rx_bearing = rx.position.bearing_to(&tx.position);
        Link {
            id,
            tx: tx.id,
            rx: rx.id,
            tx_interface: select_interface(tx, tx_bearing),
            rx_interface: select_interface(rx, rx_bearing),
            tx_bearing_deg: tx_bearing,
            rx_bearing_deg: rx_bearing,
        }
    }
}

/// Immutable scene. Nodes and links keep their construction order.
#[derive(Debug, Clone, Serialize)]
pub struct Topology {
    nodes: Vec<NodeSpec>,
    links: Vec<Link>,
    environment: Environment,
    #[serde(skip)]
    index: HashMap<NodeId, usize>,
}

impl PartialEq for Topology {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.links == other.links && self.environment == other.environment
    }
}

impl Topology {
    /// Builds a topology from nodes and `(link_id, tx, rx)` triples, deriving
    /// interfaces and bearings.
    pub fn new(
        nodes: Vec<NodeSpec>,
        links: impl IntoIterator<Item = (LinkId, NodeId, NodeId)>,
        environment: Environment,
    ) -> Result<Self> {
        environment.validate()?;
        let mut index = HashMap::with_capacity(nodes.len());
        for (k, n) in nodes.iter().enumerate() {
            if index.insert(n.id, k).is_some() {
                return Err(Error::InvalidTopology(format!("duplicate node id {}", n.id)));
            }
            if !(n.position.x.is_finite() && n.position.y.is_finite()) {
                return Err(Error::InvalidTopology(format!("node {} has a non-finite position", n.id)));
            }
            if n.interfaces.is_empty() {
                return Err(Error::InvalidTopology(format!("node {} has no interfaces", n.id)));
            }
            if n.interfaces.iter().any(|p| !(p.peak_gain > 0.0 && p.height_m > 0.0)) {
                return Err(Error::InvalidTopology(format!(
                    "node {} has a non-positive antenna gain or height",
                    n.id
                )));
            }
        }
        let mut topo = Topology {
            nodes,
            links: Vec::new(),
            environment,
            index,
        };
        let mut link_ids = BTreeSet::new();
        let mut pairs = BTreeSet::new();
        for (id, tx, rx) in links {
            let (Some(t), Some(r)) = (topo.node(tx), topo.node(rx)) else {
                return Err(Error::InvalidTopology(format!(
                    "link {id} references an unknown node ({tx} -> {rx})"
                )));
            };
            if tx == rx {
                return Err(Error::InvalidTopology(format!("link {id} is a self-loop on node {tx}")));
            }
            if t.position == r.position {
                return Err(Error::InvalidTopology(format!("link {id} endpoints are co-located")));
            }
            if !link_ids.insert(id) {
                return Err(Error::InvalidTopology(format!("duplicate link id {id}")));
            }
            if !pairs.insert((tx, rx)) {
                return Err(Error::InvalidTopology(format!("more than one link {tx} -> {rx}")));
            }
            let link = Link::between(id, t, r);
            topo.links.push(link);
        }
        Ok(topo)
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn environment(&self) -> &Environment {
        &self.environment
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeSpec> {
        self.index.get(&id).map(|&k| &self.nodes[k])
    }

    pub fn link(&self, id: LinkId) -> Option<&Link> {
        self.links.iter().find(|l| l.id == id)
    }

    /// Same scene with a different environment.
    pub fn with_environment(&self, environment: Environment) -> Result<Self> {
        environment.validate()?;
        Ok(Topology {
            environment,
            ..self.clone()
        })
    }

    /// Same positions and links with every node re-fitted for `mode`.
    pub fn with_antenna_mode(&self, mode: AntennaMode) -> Result<Self> {
        let nodes = self
            .nodes
            .iter()
            .map(|n| NodeSpec {
                queue_capacity: n.queue_capacity,
                ..NodeSpec::with_mode(n.id, n.role, n.position, mode, n.height_m())
            })
            .collect();
        Topology::new(nodes, self.links.iter().map(|l| (l.id, l.tx, l.rx)), self.environment)
    }

    /// Same nodes, links and interface bindings with every pattern replaced by
    /// an omni pattern of `gain` at the node's height.
    pub fn omni_view(&self, gain: f64) -> Topology {
        let mut view = self.clone();
        for n in &mut view.nodes {
            for p in &mut n.interfaces {
                *p = AntennaPattern::omni(gain, p.height_m);
            }
        }
        view
    }

    /// Pattern a node uses on a given interface.
    pub fn pattern(&self, node: NodeId, interface: InterfaceId) -> Option<&AntennaPattern> {
        self.node(node).and_then(|n| n.interfaces.get(interface))
    }

    /// Every `(node, interface)` pair in node order.
    pub fn interfaces(&self) -> impl Iterator<Item = (NodeId, InterfaceId)> + '_ {
        self.nodes
            .iter()
            .flat_map(|n| (0..n.interfaces.len()).map(move |k| (n.id, k)))
    }
}

/// Uplink from `sta` to the AP it hears strongest, ties going to the lowest
/// AP id. Powers use the serving interfaces at both ends, which for the
/// ideal sector patterns equals an omni reference at peak gain.
pub fn associate(
    sta: &NodeSpec,
    aps: &[NodeSpec],
    env: &Environment,
    tx_power_w: f64,
    link_id: LinkId,
) -> Result<Link> {
    let mut best: Option<(f64, &NodeSpec)> = None;
    let mut sorted: Vec<&NodeSpec> = aps.iter().collect();
    sorted.sort_by_key(|a| a.id);
    for ap in sorted {
        if ap.position == sta.position {
            continue;
        }
        let link = Link::between(link_id, sta, ap);
        let p = propagation::received_power(
            &sta.interfaces[link.tx_interface],
            &ap.interfaces[link.rx_interface],
            sta.position,
            ap.position,
            tx_power_w,
            env,
        )?;
        if best.is_none_or(|(bp, _)| p > bp) {
            best = Some((p, ap));
        }
    }
    match best {
        Some((p, ap)) if p >= env.rx_threshold_w => Ok(Link::between(link_id, sta, ap)),
        _ => Err(Error::UnassociableSta { sta: sta.id }),
    }
}

/// Parameters of the seeded grid scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub n_sta: usize,
    pub antenna: AntennaMode,
    pub grid_dim: usize,
    pub spacing_m: f64,
}

impl ScenarioSpec {
    pub fn new(seed: u64, n_sta: usize, antenna: AntennaMode) -> Self {
        ScenarioSpec {
            seed,
            n_sta,
            antenna,
            grid_dim: 3,
            spacing_m: 250.0,
        }
    }
}

const MAX_PLACEMENT_ATTEMPTS: usize = 100;

/// Grid of APs (ids `0..grid_dim²`, row-major from the origin) plus `n_sta`
/// STAs drawn uniformly over the grid's bounding square. STA `k` gets node id
/// `grid_dim² + k` and uplink id `k + 1`.
///
/// Positions depend only on the seed, so OA and DA scenarios with the same
/// seed are twins.
pub fn generate_grid_scenario(spec: &ScenarioSpec, env: &Environment) -> Result<Topology> {
    env.validate()?;
    if spec.grid_dim == 0 || !(spec.spacing_m > 0.0) {
        return Err(Error::Config("grid needs at least one AP and positive spacing".into()));
    }
    let h = env.antenna_height_m;
    let n_ap = spec.grid_dim * spec.grid_dim;
    let mut nodes = Vec::with_capacity(n_ap + spec.n_sta);
    for row in 0..spec.grid_dim {
        for col in 0..spec.grid_dim {
            let id = (row * spec.grid_dim + col) as NodeId;
            let pos = Point::new(col as f64 * spec.spacing_m, row as f64 * spec.spacing_m);
            nodes.push(NodeSpec::with_mode(id, Role::Ap, pos, spec.antenna, h));
        }
    }
    let aps = nodes.clone();
    let side = (spec.grid_dim - 1) as f64 * spec.spacing_m;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut links = Vec::with_capacity(spec.n_sta);
    for k in 0..spec.n_sta {
        let id = (n_ap + k) as NodeId;
        let link_id = (k + 1) as LinkId;
        let mut placed = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let pos = Point::new(rng.random::<f64>() * side, rng.random::<f64>() * side);
            if nodes.iter().any(|n: &NodeSpec| n.position == pos) {
                continue;
            }
            let sta = NodeSpec::with_mode(id, Role::Sta, pos, spec.antenna, h);
            match associate(&sta, &aps, env, DEFAULT_TX_POWER_W, link_id) {
                Ok(link) => {
                    placed = Some((sta, link));
                    break;
                }
                Err(Error::UnassociableSta { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        let (sta, link) = placed.ok_or(Error::UnassociableSta { sta: id })?;
        links.push((link.id, link.tx, link.rx));
        nodes.push(sta);
    }
    Topology::new(nodes, links, *env)
}

// ---- file format ----

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyFile {
    environment: EnvironmentFile,
    nodes: Vec<NodeFile>,
    #[serde(default)]
    links: Vec<LinkFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvironmentFile {
    alpha: f64,
    rx_threshold_w: f64,
    cs_threshold_w: f64,
    sir_db: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    antenna_height_m: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeFile {
    id: NodeId,
    role: Role,
    x_m: f64,
    y_m: f64,
    antenna: AntennaFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    height_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    queue_capacity: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AntennaFile {
    kind: AntennaKind,
    peak_gain: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beamwidth_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    boresights_deg: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkFile {
    id: LinkId,
    tx: NodeId,
    rx: NodeId,
}

impl TopologyFile {
    fn from_topology(t: &Topology) -> Self {
        let env = t.environment();
        TopologyFile {
            environment: EnvironmentFile {
                alpha: env.path_loss_exponent,
                rx_threshold_w: env.rx_threshold_w,
                cs_threshold_w: env.cs_threshold_w,
                sir_db: env.sir_db(),
                antenna_height_m: Some(env.antenna_height_m),
            },
            nodes: t
                .nodes()
                .iter()
                .map(|n| {
                    let first = &n.interfaces[0];
                    let antenna = match first.kind {
                        AntennaKind::Omni => AntennaFile {
                            kind: AntennaKind::Omni,
                            peak_gain: first.peak_gain,
                            beamwidth_deg: None,
                            boresights_deg: None,
                        },
                        AntennaKind::Sector => AntennaFile {
                            kind: AntennaKind::Sector,
                            peak_gain: first.peak_gain,
                            beamwidth_deg: Some(first.beamwidth_deg),
                            boresights_deg: Some(n.interfaces.iter().map(|p| p.boresight_deg).collect()),
                        },
                    };
                    NodeFile {
                        id: n.id,
                        role: n.role,
                        x_m: n.position.x,
                        y_m: n.position.y,
                        antenna,
                        height_m: Some(first.height_m),
                        queue_capacity: (n.queue_capacity != DEFAULT_QUEUE_CAPACITY).then_some(n.queue_capacity),
                    }
                })
                .collect(),
            links: t
                .links()
                .iter()
                .map(|l| LinkFile {
                    id: l.id,
                    tx: l.tx,
                    rx: l.rx,
                })
                .collect(),
        }
    }

    fn into_topology(self) -> Result<Topology> {
        let env = Environment {
            path_loss_exponent: self.environment.alpha,
            rx_threshold_w: self.environment.rx_threshold_w,
            cs_threshold_w: self.environment.cs_threshold_w,
            sir_requirement: propagation::db_to_linear(self.environment.sir_db),
            antenna_height_m: self
                .environment
                .antenna_height_m
                .unwrap_or(propagation::DEFAULT_ANTENNA_HEIGHT_M),
        };
        env.validate()?;
        let mut seen = BTreeSet::new();
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for (k, n) in self.nodes.into_iter().enumerate() {
            if !seen.insert(n.id) {
                return Err(Error::InvalidTopology(format!("nodes[{k}].id: duplicate node id {}", n.id)));
            }
            let h = n.height_m.unwrap_or(env.antenna_height_m);
            let position = Point::new(n.x_m, n.y_m);
            let interfaces = match n.antenna.kind {
                AntennaKind::Omni => {
                    if n.antenna.boresights_deg.is_some() {
                        return Err(Error::InvalidTopology(format!(
                            "nodes[{k}].antenna.boresights_deg: not allowed for omni antennas"
                        )));
                    }
                    vec![AntennaPattern::omni(n.antenna.peak_gain, h)]
                }
                AntennaKind::Sector => {
                    let width = n.antenna.beamwidth_deg.unwrap_or(DA_BEAMWIDTH_DEG);
                    if !(width > 0.0 && width <= 360.0) {
                        return Err(Error::InvalidTopology(format!(
                            "nodes[{k}].antenna.beamwidth_deg: {width} outside (0, 360]"
                        )));
                    }
                    let boresights = n.antenna.boresights_deg.unwrap_or_else(|| DA_BORESIGHTS_DEG.to_vec());
                    if boresights.is_empty() {
                        return Err(Error::InvalidTopology(format!(
                            "nodes[{k}].antenna.boresights_deg: at least one boresight required"
                        )));
                    }
                    boresights
                        .iter()
                        .map(|&b| AntennaPattern::sector(b, width, n.antenna.peak_gain, h))
                        .collect()
                }
            };
            nodes.push(NodeSpec {
                id: n.id,
                role: n.role,
                position,
                interfaces,
                queue_capacity: n.queue_capacity.unwrap_or(DEFAULT_QUEUE_CAPACITY),
            });
        }
        Topology::new(nodes, self.links.into_iter().map(|l| (l.id, l.tx, l.rx)), env)
    }
}

pub fn topology_from_json(text: &str) -> Result<Topology> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: TopologyFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::Schema {
            path,
            message: inner.to_string(),
            line: inner.line(),
            column: inner.column(),
        }
    })?;
    file.into_topology()
}

pub fn topology_to_json(topology: &Topology) -> String {
    let mut s = serde_json::to_string_pretty(&TopologyFile::from_topology(topology))
        .expect("topology file serializes");
    s.push('\n');
    s
}

pub fn load_topology(path: impl AsRef<Path>) -> Result<Topology> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    topology_from_json(&text)
}

pub fn save_topology(topology: &Topology, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, topology_to_json(topology)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn da(id: NodeId) -> NodeSpec {
        NodeSpec::directional(id, Role::Ap, Point::new(0.0, 0.0), DA_GAIN, 1.5)
    }

    #[test]
    fn interface_selection() {
        assert_eq!(select_interface(&da(0), 30.0), 0);
        assert_eq!(select_interface(&da(0), 45.0), 1);
        assert_eq!(select_interface(&da(0), 315.0), 0);
        assert_eq!(select_interface(&da(0), 314.9), 3);
        assert_eq!(select_interface(&da(0), 180.0), 2);
        assert_eq!(select_interface(&da(0), -46.0), 3);
        let oa = NodeSpec::omni(1, Role::Sta, Point::new(0.0, 0.0), 1.0, 1.5);
        assert_eq!(select_interface(&oa, 211.0), 0);
    }

    fn ap(id: NodeId, x: f64, y: f64) -> NodeSpec {
        NodeSpec::omni(id, Role::Ap, Point::new(x, y), 1.0, 1.5)
    }

    fn sta(x: f64, y: f64) -> NodeSpec {
        NodeSpec::omni(100, Role::Sta, Point::new(x, y), 1.0, 1.5)
    }

    #[test]
    fn associates_with_nearest_ap() {
        let env = Environment::paper_ranges();
        let aps = [ap(0, 0.0, 0.0), ap(1, 250.0, 0.0)];
        let link = associate(&sta(100.0, 100.0), &aps, &env, DEFAULT_TX_POWER_W, 1).unwrap();
        assert_eq!((link.tx, link.rx), (100, 0));
    }

    #[test]
    fn association_tie_goes_to_lowest_id() {
        let env = Environment::paper_ranges();
        let aps = [ap(7, 250.0, 0.0), ap(3, 0.0, 0.0)];
        let link = associate(&sta(125.0, 0.0), &aps, &env, DEFAULT_TX_POWER_W, 1).unwrap();
        assert_eq!(link.rx, 3);
    }

    #[test]
    fn far_sta_is_unassociable() {
        let env = Environment::paper_ranges();
        let aps = [ap(0, 0.0, 0.0), ap(1, 1200.0, 0.0)];
        let err = associate(&sta(600.0, 0.0), &aps, &env, DEFAULT_TX_POWER_W, 1).unwrap_err();
        assert!(matches!(err, Error::UnassociableSta { sta: 100 }));
    }

    #[test]
    fn grid_scenario_counts() {
        let env = Environment::paper_ranges();
        let t = generate_grid_scenario(&ScenarioSpec::new(14, 9, AntennaMode::Oa), &env).unwrap();
        assert_eq!(t.nodes().len(), 18);
        assert_eq!(t.links().len(), 9);
        assert_eq!(t.nodes().iter().filter(|n| n.role == Role::Ap).count(), 9);

        let empty = generate_grid_scenario(&ScenarioSpec::new(14, 0, AntennaMode::Oa), &env).unwrap();
        assert_eq!(empty.nodes().len(), 9);
        assert!(empty.links().is_empty());
    }

    #[test]
    fn oa_and_da_scenarios_are_twins() {
        let env = Environment::paper_ranges();
        let oa = generate_grid_scenario(&ScenarioSpec::new(3, 36, AntennaMode::Oa), &env).unwrap();
        let da = generate_grid_scenario(&ScenarioSpec::new(3, 36, AntennaMode::Da), &env).unwrap();
        for (a, b) in oa.nodes().iter().zip(da.nodes()) {
            assert_eq!(a.position, b.position);
        }
        for (a, b) in oa.links().iter().zip(da.links()) {
            assert_eq!((a.tx, a.rx), (b.tx, b.rx));
        }
        assert_eq!(oa.with_antenna_mode(AntennaMode::Da).unwrap(), da);
    }

    const TWO_LINKS: &str = r#"{
      "environment": {"alpha": 4, "rx_threshold_w": 3.65e-10, "cs_threshold_w": 1.559e-11, "sir_db": 10},
      "nodes": [
        {"id": 1, "role": "STA", "x_m": 0, "y_m": 0, "antenna": {"kind": "omni", "peak_gain": 1}, "height_m": 1.5},
        {"id": 2, "role": "AP", "x_m": 200, "y_m": 0, "antenna": {"kind": "omni", "peak_gain": 1}, "height_m": 1.5},
        {"id": 3, "role": "STA", "x_m": 0, "y_m": 50, "antenna": {"kind": "sector", "peak_gain": 2}},
        {"id": 4, "role": "AP", "x_m": 200, "y_m": 50, "antenna": {"kind": "sector", "peak_gain": 2, "beamwidth_deg": 90, "boresights_deg": [0, 90, 180, 270]}}
      ],
      "links": [{"id": 1, "tx": 1, "rx": 2}, {"id": 2, "tx": 3, "rx": 4}]
    }"#;

    #[test]
    fn parses_two_link_file() {
        let t = topology_from_json(TWO_LINKS).unwrap();
        assert_eq!(t.nodes().len(), 4);
        assert_eq!(t.links().len(), 2);
        let l2 = t.link(2).unwrap();
        assert_eq!((l2.tx_interface, l2.rx_interface), (0, 2));
        assert_eq!(t.node(3).unwrap().interfaces.len(), 4);
    }

    #[test]
    fn duplicate_node_id_is_named() {
        let text = TWO_LINKS.replace(r#""id": 3, "role""#, r#""id": 2, "role""#);
        let err = topology_from_json(&text).unwrap_err().to_string();
        assert!(err.contains("duplicate node id 2"), "{err}");
    }

    #[test]
    fn schema_error_has_path_and_line() {
        let text = TWO_LINKS.replace(r#""x_m": 200, "y_m": 50"#, r#""x_m": "far", "y_m": 50"#);
        match topology_from_json(&text).unwrap_err() {
            Error::Schema { path, line, .. } => {
                assert_eq!(path, "nodes[3].x_m");
                assert_eq!(line, 7);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn unknown_link_endpoint_rejected() {
        let text = TWO_LINKS.replace(r#""tx": 3, "rx": 4"#, r#""tx": 3, "rx": 9"#);
        assert!(topology_from_json(&text).is_err());
    }

    #[test]
    fn save_and_load_file() {
        let env = Environment::paper_table();
        let t = generate_grid_scenario(&ScenarioSpec::new(21, 18, AntennaMode::Da), &env).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        save_topology(&t, &path).unwrap();
        assert_eq!(load_topology(&path).unwrap(), t);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn generation_is_deterministic_and_roundtrips(seed in any::<u64>(), n in 0usize..40, da in any::<bool>()) {
            let env = Environment::paper_ranges();
            let mode = if da { AntennaMode::Da } else { AntennaMode::Oa };
            let spec = ScenarioSpec::new(seed, n, mode);
            let a = generate_grid_scenario(&spec, &env).unwrap();
            let b = generate_grid_scenario(&spec, &env).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(topology_from_json(&topology_to_json(&a)).unwrap(), a);
        }

        #[test]
        fn association_is_optimal_and_covered(seed in any::<u64>(), da in any::<bool>()) {
            let env = Environment::paper_ranges();
            let mode = if da { AntennaMode::Da } else { AntennaMode::Oa };
            let t = generate_grid_scenario(&ScenarioSpec::new(seed, 36, mode), &env).unwrap();
            for l in t.links() {
                let s = t.node(l.tx).unwrap();
                let chosen = s.position.distance(&t.node(l.rx).unwrap().position);
                for a in t.nodes().iter().filter(|n| n.role == Role::Ap) {
                    prop_assert!(s.position.distance(&a.position) >= chosen);
                }
                let tx_p = &s.interfaces[l.tx_interface];
                prop_assert_eq!(tx_p.gain_toward(l.tx_bearing_deg), tx_p.peak_gain);
                let rx_p = &t.node(l.rx).unwrap().interfaces[l.rx_interface];
                prop_assert_eq!(rx_p.gain_toward(l.rx_bearing_deg), rx_p.peak_gain);
            }
        }
    }
}
