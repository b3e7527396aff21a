//! Scenario sweeps over seeds × STA counts × antenna setups × power schemes.
//!
//! Each cell generates its grid scenario, assigns power, folds both metrics
//! and optionally simulates. Cells are independent and run on the rayon pool;
//! rows are merged in canonical key order, so the output does not depend on
//! scheduling. The CSV starts with a `#` line naming the format version and
//! the settings that shaped the rows, which is what makes resuming safe.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{Components, MetricsReport};
use crate::power::{self, PowerScheme};
use crate::propagation::{Environment, Profile};
use crate::simulator::{simulate, SimConfig};
use crate::topology::{generate_grid_scenario, AntennaMode, ScenarioSpec};

pub const CSV_FORMAT_VERSION: u32 = 1;

/// One cell of the grid. Orders by STA count, antenna, scheme, then seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub n_sta: usize,
    pub antenna: AntennaMode,
    pub scheme: PowerScheme,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub seeds: Vec<u64>,
    pub n_sta: Vec<usize>,
    pub antennas: Vec<AntennaMode>,
    pub schemes: Vec<PowerScheme>,
}

impl SweepGrid {
    /// 40 seeds × {9, 18, 27, 36} STAs × both antenna setups × `schemes`.
    pub fn standard(schemes: Vec<PowerScheme>) -> Self {
        SweepGrid {
            seeds: (0..40).collect(),
            n_sta: vec![9, 18, 27, 36],
            antennas: vec![AntennaMode::Oa, AntennaMode::Da],
            schemes,
        }
    }

    /// Distinct cells in canonical order.
    pub fn cells(&self) -> Vec<CellKey> {
        let mut cells = Vec::with_capacity(self.seeds.len() * self.n_sta.len() * self.antennas.len() * self.schemes.len());
        for &n_sta in &self.n_sta {
            for &antenna in &self.antennas {
                for &scheme in &self.schemes {
                    for &seed in &self.seeds {
                        cells.push(CellKey { n_sta, antenna, scheme, seed });
                    }
                }
            }
        }
        cells.sort_unstable();
        cells.dedup();
        cells
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub profile: Profile,
    pub margin_db: f64,
    pub liew_reference_gain: f64,
    /// Run the simulator on every cell. The cell seed is added to `sim.seed`.
    pub sim: Option<SimConfig>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            profile: Profile::PaperRanges,
            margin_db: 0.0,
            liew_reference_gain: 1.0,
            sim: None,
        }
    }
}

impl SweepConfig {
    /// The `#` line written at the top of the CSV.
    pub fn header_line(&self) -> String {
        let mut line = format!(
            "# acmeter sweep v{CSV_FORMAT_VERSION} profile={} margin_db={} liew_gain={}",
            self.profile, self.margin_db, self.liew_reference_gain
        );
        match &self.sim {
            None => line.push_str(" sim=off"),
            Some(sim) => {
                let json = serde_json::to_string(sim).expect("sim config serializes");
                line.push_str(&format!(" sim={json}"));
            }
        }
        line
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub throughput_bps: f64,
    pub delivered: u64,
    pub collisions: u64,
    pub drops: u64,
    pub retransmissions: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub key: CellKey,
    pub links: usize,
    pub ac_improved: u64,
    pub improved: Components,
    pub ac_liew: u64,
    pub liew: Components,
    pub sim: Option<SimSummary>,
}

pub fn run_cell(key: CellKey, cfg: &SweepConfig) -> Result<SweepRow> {
    let env = Environment::from_profile(cfg.profile);
    let topology = generate_grid_scenario(&ScenarioSpec::new(key.seed, key.n_sta, key.antenna), &env)?;
    let power = power::assign(&topology, key.scheme, cfg.margin_db)?;
    let report = MetricsReport::analyze(&topology, &power, cfg.liew_reference_gain)?;
    let sim = match &cfg.sim {
        None => None,
        Some(base) => {
            let sim_cfg = SimConfig {
                seed: base.seed.wrapping_add(key.seed),
                ..base.clone()
            };
            let r = simulate(&topology, &power, &sim_cfg)?;
            Some(SimSummary {
                throughput_bps: r.aggregated_throughput_bps,
                delivered: r.delivered(),
                collisions: r.collisions,
                drops: r.drops,
                retransmissions: r.retransmissions,
            })
        }
    };
    Ok(SweepRow {
        key,
        links: topology.links().len(),
        ac_improved: report.ac_improved,
        improved: report.components_improved,
        ac_liew: report.ac_liew,
        liew: report.components_liew,
        sim,
    })
}

/// Runs `cells` on the rayon pool and returns the rows in key order.
/// `progress` is called once per finished cell with the number finished so
/// far and the total.
pub fn run_cells(cells: &[CellKey], cfg: &SweepConfig, progress: &(dyn Fn(usize, usize) + Sync)) -> Result<Vec<SweepRow>> {
    if let Some(sim) = &cfg.sim {
        sim.validate()?;
    }
    let total = cells.len();
    let finished = AtomicUsize::new(0);
    let mut rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|&key| {
            let row = run_cell(key, cfg);
            progress(finished.fetch_add(1, AtomicOrdering::Relaxed) + 1, total);
            row
        })
        .collect::<Result<_>>()?;
    rows.sort_by_key(|r| r.key);
    Ok(rows)
}

/// Runs every cell of `grid` missing from `done` and returns all rows in key
/// order.
pub fn sweep(
    grid: &SweepGrid,
    cfg: &SweepConfig,
    done: Vec<SweepRow>,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<Vec<SweepRow>> {
    let mut rows: BTreeMap<CellKey, SweepRow> = done.into_iter().map(|r| (r.key, r)).collect();
    let todo: Vec<CellKey> = grid.cells().into_iter().filter(|k| !rows.contains_key(k)).collect();
    rows.extend(run_cells(&todo, cfg, progress)?.into_iter().map(|r| (r.key, r)));
    Ok(rows.into_values().collect())
}

/// Flat CSV record. Simulation columns are present only when simulating.
#[derive(Debug, Serialize, Deserialize)]
struct Record {
    seed: u64,
    n_sta: usize,
    antenna: AntennaMode,
    scheme: PowerScheme,
    links: usize,
    ac_improved: u64,
    c1_improved: u64,
    c2_improved: u64,
    c3_improved: u64,
    ac_liew: u64,
    c1_liew: u64,
    c2_liew: u64,
    c3_liew: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct SimRecord {
    seed: u64,
    n_sta: usize,
    antenna: AntennaMode,
    scheme: PowerScheme,
    links: usize,
    ac_improved: u64,
    c1_improved: u64,
    c2_improved: u64,
    c3_improved: u64,
    ac_liew: u64,
    c1_liew: u64,
    c2_liew: u64,
    c3_liew: u64,
    throughput_bps: f64,
    delivered: u64,
    collisions: u64,
    drops: u64,
    retransmissions: u64,
}

impl Record {
    fn of(r: &SweepRow) -> Self {
        Record {
            seed: r.key.seed,
            n_sta: r.key.n_sta,
            antenna: r.key.antenna,
            scheme: r.key.scheme,
            links: r.links,
            ac_improved: r.ac_improved,
            c1_improved: r.improved.i_part,
            c2_improved: r.improved.tc_part,
            c3_improved: r.improved.rc_part,
            ac_liew: r.ac_liew,
            c1_liew: r.liew.i_part,
            c2_liew: r.liew.tc_part,
            c3_liew: r.liew.rc_part,
        }
    }

    fn into_row(self, sim: Option<SimSummary>) -> SweepRow {
        SweepRow {
            key: CellKey {
                n_sta: self.n_sta,
                antenna: self.antenna,
                scheme: self.scheme,
                seed: self.seed,
            },
            links: self.links,
            ac_improved: self.ac_improved,
            improved: Components {
                i_part: self.c1_improved,
                tc_part: self.c2_improved,
                rc_part: self.c3_improved,
            },
            ac_liew: self.ac_liew,
            liew: Components {
                i_part: self.c1_liew,
                tc_part: self.c2_liew,
                rc_part: self.c3_liew,
            },
            sim,
        }
    }
}

impl SimRecord {
    fn of(r: &SweepRow, s: &SimSummary) -> Self {
        let b = Record::of(r);
        SimRecord {
            seed: b.seed,
            n_sta: b.n_sta,
            antenna: b.antenna,
            scheme: b.scheme,
            links: b.links,
            ac_improved: b.ac_improved,
            c1_improved: b.c1_improved,
            c2_improved: b.c2_improved,
            c3_improved: b.c3_improved,
            ac_liew: b.ac_liew,
            c1_liew: b.c1_liew,
            c2_liew: b.c2_liew,
            c3_liew: b.c3_liew,
            throughput_bps: s.throughput_bps,
            delivered: s.delivered,
            collisions: s.collisions,
            drops: s.drops,
            retransmissions: s.retransmissions,
        }
    }

    fn into_row(self) -> SweepRow {
        let sim = SimSummary {
            throughput_bps: self.throughput_bps,
            delivered: self.delivered,
            collisions: self.collisions,
            drops: self.drops,
            retransmissions: self.retransmissions,
        };
        Record {
            seed: self.seed,
            n_sta: self.n_sta,
            antenna: self.antenna,
            scheme: self.scheme,
            links: self.links,
            ac_improved: self.ac_improved,
            c1_improved: self.c1_improved,
            c2_improved: self.c2_improved,
            c3_improved: self.c3_improved,
            ac_liew: self.ac_liew,
            c1_liew: self.c1_liew,
            c2_liew: self.c2_liew,
            c3_liew: self.c3_liew,
        }
        .into_row(Some(sim))
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Config(format!("sweep CSV: {e}"))
}

/// Writes the header line and `rows`. Every row must carry simulation
/// results iff `cfg.sim` is set.
pub fn write_csv<W: Write>(rows: &[SweepRow], cfg: &SweepConfig, mut out: W) -> Result<()> {
    let io = |e| Error::io("<sweep output>", e);
    writeln!(out, "{}", cfg.header_line()).map_err(io)?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        match (&cfg.sim, &r.sim) {
            (None, None) => w.serialize(Record::of(r)),
            (Some(_), Some(s)) => w.serialize(SimRecord::of(r, s)),
            _ => return Err(Error::Config(format!("row {:?} does not match the simulation setting", r.key))),
        }
        .map_err(csv_error)?;
    }
    w.flush().map_err(io)
}

/// Reads rows written by [`write_csv`] under the same `cfg`. A header line
/// from different settings is an error so a resumed sweep cannot mix them.
pub fn read_csv<R: BufRead>(mut input: R, cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    let mut header = String::new();
    input
        .read_line(&mut header)
        .map_err(|e| Error::io("<sweep input>", e))?;
    let expected = cfg.header_line();
    if header.trim_end() != expected {
        return Err(Error::Config(format!(
            "existing sweep output was written with different settings\n  found:    {}\n  expected: {expected}",
            header.trim_end()
        )));
    }
    let mut rd = csv::Reader::from_reader(input);
    if cfg.sim.is_some() {
        rd.deserialize::<SimRecord>()
            .map(|r| r.map(SimRecord::into_row).map_err(csv_error))
            .collect()
    } else {
        rd.deserialize::<Record>()
            .map(|r| r.map(|r| r.into_row(None)).map_err(csv_error))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> SweepGrid {
        SweepGrid {
            seeds: vec![0, 1],
            n_sta: vec![0, 4],
            antennas: vec![AntennaMode::Oa, AntennaMode::Da],
            schemes: vec![PowerScheme::DpNchan, PowerScheme::MpPinte],
        }
    }

    fn run(grid: &SweepGrid, cfg: &SweepConfig, done: Vec<SweepRow>) -> Vec<SweepRow> {
        sweep(grid, cfg, done, &|_, _| {}).unwrap()
    }

    #[test]
    fn standard_grid_cardinality() {
        assert_eq!(SweepGrid::standard(vec![PowerScheme::DpNchan]).cells().len(), 320);
        assert_eq!(SweepGrid::standard(PowerScheme::ALL.to_vec()).cells().len(), 1280);
    }

    #[test]
    fn rows_are_sorted_and_deterministic() {
        let cfg = SweepConfig::default();
        let a = run(&small_grid(), &cfg, vec![]);
        let b = run(&small_grid(), &cfg, vec![]);
        assert_eq!(a.len(), 16);
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].key < w[1].key));
        for r in &a {
            assert_eq!(r.ac_improved, r.improved.total());
            assert_eq!(r.ac_liew, r.liew.total());
            if r.key.n_sta == 0 {
                assert_eq!((r.links, r.ac_improved, r.ac_liew), (0, 0, 0));
            }
        }
    }

    #[test]
    fn csv_round_trips_and_resumes() {
        let cfg = SweepConfig {
            sim: Some(SimConfig {
                sim_time_s: 0.2,
                ..SimConfig::default()
            }),
            ..SweepConfig::default()
        };
        let full = run(&small_grid(), &cfg, vec![]);
        let mut buf = Vec::new();
        write_csv(&full, &cfg, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), &cfg).unwrap();
        assert_eq!(back, full);

        let partial = run(&small_grid(), &cfg, full[..5].to_vec());
        let mut again = Vec::new();
        write_csv(&partial, &cfg, &mut again).unwrap();
        assert_eq!(again, buf);
    }

    #[test]
    fn mismatched_header_is_rejected() {
        let cfg = SweepConfig::default();
        let mut buf = Vec::new();
        write_csv(&[], &cfg, &mut buf).unwrap();
        let other = SweepConfig {
            profile: Profile::PaperTable,
            ..cfg
        };
        assert!(matches!(read_csv(buf.as_slice(), &other), Err(Error::Config(_))));
    }
}
