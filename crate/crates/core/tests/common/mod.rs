//! Shared helpers for the integration tests: a random topology generator and
//! a brute-force weight oracle written straight from the constraint
//! definitions, without going through the crate's `constraints` module.

#![allow(dead_code)]

use std::collections::BTreeMap;

use acmeter::power::{self, PowerAssignment, PowerScheme};
use acmeter::{AntennaMode, AntennaPattern, Environment, LinkId, NodeSpec, Point, Role, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Mixed OA/DA topology with `n_links` links. Some links reuse an existing
/// node as transmitter or receiver, so shared-node pairs are exercised.
pub fn random_topology(seed: u64, n_links: usize, env: Environment) -> Topology {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes: Vec<NodeSpec> = Vec::new();
    let mut links = Vec::new();
    let new_node = |rng: &mut ChaCha8Rng, nodes: &mut Vec<NodeSpec>, at: Point| {
        let mode = if rng.random_bool(0.5) { AntennaMode::Oa } else { AntennaMode::Da };
        let id = nodes.len() as u32;
        nodes.push(NodeSpec::with_mode(id, Role::Sta, at, mode, env.antenna_height_m));
        id
    };
    while links.len() < n_links {
        let tx = if !nodes.is_empty() && rng.random_bool(0.2) {
            rng.random_range(0..nodes.len()) as u32
        } else {
            let p = Point::new(rng.random_range(0.0..1200.0), rng.random_range(0.0..1200.0));
            new_node(&mut rng, &mut nodes, p)
        };
        let origin = nodes[tx as usize].position;
        let r = rng.random_range(20.0..230.0);
        let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let rx = new_node(&mut rng, &mut nodes, Point::new(origin.x + r * a.cos(), origin.y + r * a.sin()));
        // Occasionally flip direction so shared nodes also receive.
        let (tx, rx) = if rng.random_bool(0.3) { (rx, tx) } else { (tx, rx) };
        links.push((links.len() as LinkId + 1, tx, rx));
    }
    Topology::new(nodes, links, env).expect("random topology is valid")
}

/// A power assignment drawn from all four schemes plus a random uniform one.
pub fn random_power(t: &Topology, seed: u64) -> PowerAssignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    match rng.random_range(0..5) {
        4 => power::uniform_power(t, rng.random_range(0.01..0.5)),
        k => power::assign(t, PowerScheme::ALL[k], 0.0).expect("links are short enough for every scheme"),
    }
}

fn gain(p: &AntennaPattern, bearing_deg: f64) -> f64 {
    match p.kind {
        acmeter::AntennaKind::Omni => p.peak_gain,
        acmeter::AntennaKind::Sector => {
            let off = (bearing_deg - p.boresight_deg).rem_euclid(360.0);
            if off.min(360.0 - off) <= p.beamwidth_deg / 2.0 {
                p.peak_gain
            } else {
                0.0
            }
        }
    }
}

#[derive(Clone)]
struct End {
    node: u32,
    at: Point,
    pattern: AntennaPattern,
    ears: Vec<AntennaPattern>,
    watts: f64,
}

/// Power `from` delivers at `to` through `to_pattern`.
fn delivered(from: &End, to: &End, to_pattern: &AntennaPattern, env: &Environment) -> f64 {
    if from.node == to.node {
        return f64::INFINITY;
    }
    let (dx, dy) = (to.at.x - from.at.x, to.at.y - from.at.y);
    let d = dx.hypot(dy);
    if d == 0.0 {
        return f64::INFINITY;
    }
    let b = dy.atan2(dx).to_degrees();
    let g = gain(&from.pattern, b) * gain(to_pattern, b + 180.0);
    g * from.pattern.height_m.powi(2) * to_pattern.height_m.powi(2) * from.watts / d.powf(env.path_loss_exponent)
}

fn senses(from: &End, to: &End, threshold: f64, env: &Environment) -> bool {
    from.node == to.node || to.ears.iter().any(|e| delivered(from, to, e, env) > threshold)
}

fn collides(interferer: &End, src: &End, victim: &End, env: &Environment) -> bool {
    delivered(src, victim, &victim.pattern, env) < env.sir_requirement * delivered(interferer, victim, &victim.pattern, env)
}

/// `(w_I, w_TC, w_RC)` for every ordered pair of distinct links. With
/// `liew_gain` set, every pattern becomes an omni of that gain.
pub fn oracle_weights(
    t: &Topology,
    p: &PowerAssignment,
    liew_gain: Option<f64>,
) -> BTreeMap<(LinkId, LinkId), (u8, u8, u8)> {
    let env = t.environment();
    let end = |node: u32, iface: usize| {
        let n = t.node(node).unwrap();
        let swap = |q: &AntennaPattern| match liew_gain {
            Some(g) => AntennaPattern::omni(g, q.height_m),
            None => *q,
        };
        let pattern = swap(&n.interfaces[iface]);
        End {
            node,
            at: n.position,
            pattern,
            ears: match liew_gain {
                Some(_) => vec![pattern],
                None => n.interfaces.clone(),
            },
            watts: p.get(node, iface),
        }
    };
    let ends: Vec<(LinkId, End, End)> = t
        .links()
        .iter()
        .map(|l| (l.id, end(l.tx, l.tx_interface), end(l.rx, l.rx_interface)))
        .collect();
    let mut out = BTreeMap::new();
    for (i, ti, ri) in &ends {
        for (j, tj, rj) in &ends {
            if i == j {
                continue;
            }
            let w_i = [
                collides(ti, tj, rj, env),
                collides(ti, rj, tj, env),
                collides(ri, tj, rj, env),
                collides(ri, rj, tj, env),
            ]
            .iter()
            .filter(|&&c| c)
            .count() as u8;
            let (cs, rx) = (env.cs_threshold_w, env.rx_threshold_w);
            let w_tc = u8::from(senses(ti, tj, cs, env) || senses(ti, tj, rx, env)) + u8::from(senses(ri, tj, cs, env));
            let w_rc = u8::from(senses(ti, rj, cs, env) || senses(ti, rj, rx, env)) + u8::from(senses(ri, rj, cs, env));
            out.insert((*i, *j), (w_i, w_tc, w_rc));
        }
    }
    out
}

/// The same triples read off the crate's graphs.
pub fn graph_weights(gs: &acmeter::InterferenceGraphSet) -> BTreeMap<(LinkId, LinkId), (u8, u8, u8)> {
    let ids = gs.i_graph.vertices().to_vec();
    let mut out = BTreeMap::new();
    for &i in &ids {
        for &j in &ids {
            if i != j {
                out.insert((i, j), (gs.i_graph.weight(i, j), gs.tc_graph.weight(i, j), gs.rc_graph.weight(i, j)));
            }
        }
    }
    out
}
