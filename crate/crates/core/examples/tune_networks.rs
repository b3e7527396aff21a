//! Searches two-link layouts whose OA, DA and DR graph weights match the
//! worked-example goldens, and writes the chosen layout as topology files.
//!
//! Both links are 200 m long. Network 1 puts `T2` 200 m from `R1`; Network 2
//! puts `R2` 200 m from `R1`. The two remaining angles are scanned in whole
//! degrees. The layout hitting the most target weights wins, provided its
//! weights survive a 1 m nudge of every node so the shipped files do not sit
//! on a range or sector edge.
//!
//! ```text
//! cargo run -p acmeter --example tune_networks -- data
//! ```

use std::path::PathBuf;

use acmeter::graphs::{build_graph_set, AnalysisMode};
use acmeter::power::{default_power, uniform_power};
use acmeter::propagation::DEFAULT_TX_POWER_W;
use acmeter::topology::{save_topology, AntennaMode, NodeSpec, Role, Topology};
use acmeter::{Environment, Point};

const LEG_M: f64 = 200.0;

/// `(w_I, w_TC, w_RC)` for `1 -> 2` and `2 -> 1`.
type Weights = [(u8, u8, u8); 2];

#[derive(Clone, Copy)]
enum Network {
    One,
    Two,
}

impl Network {
    fn name(self) -> &'static str {
        match self {
            Network::One => "network1",
            Network::Two => "network2",
        }
    }

    /// Targets for OA, DA and DR.
    fn targets(self) -> [Weights; 3] {
        match self {
            Network::One => [[(3, 2, 2); 2], [(1, 1, 1); 2], [(1, 1, 1); 2]],
            Network::Two => [[(1, 1, 2); 2], [(0, 1, 1); 2], [(0, 0, 1); 2]],
        }
    }

    /// `[T1, R1, T2, R2]` for the two free angles.
    fn layout(self, a_deg: f64, b_deg: f64) -> [Point; 4] {
        let step = |p: Point, deg: f64| {
            let t = deg.to_radians();
            Point::new(p.x + LEG_M * t.cos(), p.y + LEG_M * t.sin())
        };
        let t1 = Point::new(0.0, 0.0);
        let r1 = Point::new(LEG_M, 0.0);
        match self {
            Network::One => {
                let t2 = step(r1, a_deg);
                [t1, r1, t2, step(t2, b_deg)]
            }
            Network::Two => {
                let r2 = step(r1, a_deg);
                [t1, r1, step(r2, b_deg), r2]
            }
        }
    }
}

fn topology(points: &[Point; 4], mode: AntennaMode) -> Topology {
    let roles = [Role::Sta, Role::Ap, Role::Sta, Role::Ap];
    let nodes = points
        .iter()
        .zip(roles)
        .enumerate()
        .map(|(id, (&p, role))| NodeSpec::with_mode(id as u32 + 1, role, p, mode, 1.5))
        .collect();
    Topology::new(nodes, [(1, 1, 2), (2, 3, 4)], Environment::paper_ranges()).expect("valid layout")
}

fn weights(points: &[Point; 4]) -> [Weights; 3] {
    let oa = topology(points, AntennaMode::Oa);
    let da = topology(points, AntennaMode::Da);
    // DR: directional gain 2 at each end, power cut so the beam reaches as
    // far as the omni setup.
    let dr_power = uniform_power(&da, DEFAULT_TX_POWER_W / 4.0);
    let runs = [
        (&oa, default_power(&oa)),
        (&da, default_power(&da)),
        (&da, dr_power),
    ];
    runs.map(|(t, p)| {
        let g = build_graph_set(t, &p, AnalysisMode::Improved).expect("graphs build");
        [(1, 2), (2, 1)].map(|(i, j)| (g.i_graph.weight(i, j), g.tc_graph.weight(i, j), g.rc_graph.weight(i, j)))
    })
}

/// Setups matched in full, then the number of the 18 target weights hit.
fn score(w: &[Weights; 3], target: &[Weights; 3]) -> (usize, usize) {
    let setups = w.iter().zip(target).filter(|(a, b)| a == b).count();
    let hits = w
        .iter()
        .flatten()
        .zip(target.iter().flatten())
        .map(|(a, b)| usize::from(a.0 == b.0) + usize::from(a.1 == b.1) + usize::from(a.2 == b.2))
        .sum();
    (setups, hits)
}

/// True if nudging any node by 1 m leaves every weight unchanged.
fn robust(points: &[Point; 4], w: &[Weights; 3]) -> bool {
    (0..4).all(|k| {
        [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)].iter().all(|&(dx, dy)| {
            let mut nudged = *points;
            nudged[k] = Point::new(nudged[k].x + dx, nudged[k].y + dy);
            weights(&nudged) == *w
        })
    })
}

fn main() {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    std::fs::create_dir_all(&out).expect("output directory");
    for net in [Network::One, Network::Two] {
        let target = net.targets();
        let mut best: Option<((usize, usize), u32, [Point; 4])> = None;
        for a in 0..360u32 {
            for b in 0..360u32 {
                // Whole-metre coordinates so the files hold exactly what was scored.
                let pts = net.layout(a as f64, b as f64).map(|p| Point::new(p.x.round(), p.y.round()));
                let w = weights(&pts);
                let s = score(&w, &target);
                // Prefer the layout closest to a straight line.
                let bend = a.min(360 - a) + b.min(360 - b);
                let better = best.is_none_or(|(bs, bb, _)| s > bs || (s == bs && bend < bb));
                if better && robust(&pts, &w) {
                    best = Some((s, bend, pts));
                }
            }
        }
        let ((_, hits), _, pts) = best.expect("some layout is robust");
        let w = weights(&pts);
        println!("{}: {hits}/18 weights match at {:?}", net.name(), pts.map(|p| (p.x, p.y)));
        for (setup, (got, want)) in ["OA", "DA", "DR"].iter().zip(w.iter().zip(&target)) {
            if got != want {
                println!("  {setup}: got {got:?}, want {want:?}");
            }
        }
        for mode in [AntennaMode::Oa, AntennaMode::Da] {
            let path = out.join(format!("{}_{}.json", net.name(), mode));
            save_topology(&topology(&pts, mode), &path).expect("write topology");
            println!("wrote {}", path.display());
        }
    }
}
