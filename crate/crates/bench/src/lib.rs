//! Scenario fixtures shared by the benchmarks.

use acmeter::power::{self, PowerScheme};
use acmeter::{generate_grid_scenario, AntennaMode, Environment, PowerAssignment, ScenarioSpec, Topology};

/// The 3x3 grid scenario with `n_sta` STAs under the table thresholds.
pub fn scenario(seed: u64, n_sta: usize, antenna: AntennaMode, scheme: PowerScheme) -> (Topology, PowerAssignment) {
    let t = generate_grid_scenario(&ScenarioSpec::new(seed, n_sta, antenna), &Environment::paper_table())
        .expect("grid scenario");
    let p = power::assign(&t, scheme, 0.0).expect("power assignment");
    (t, p)
}
