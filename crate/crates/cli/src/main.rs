//! `acmeter`: scenario generation, Attacking Case analysis, sweeps,
//! simulation and graph export.
//!
//! Exit codes: 0 success, 1 internal failure, 2 configuration error,
//! 3 unassociable STA or unviable link.

mod config;

use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use acmeter::graphs::build_graph_set;
use acmeter::metrics::liew_graph_set;
use acmeter::power::{self, PowerAssignment, PowerScheme};
use acmeter::sweep::{self, CellKey, SweepConfig, SweepGrid, SweepRow};
use acmeter::topology::topology_to_json;
use acmeter::{
    generate_grid_scenario, load_topology, simulate, AnalysisMode, AntennaMode, AttackingCase, Environment,
    Error, InterferenceGraphSet, Profile, ScenarioSpec, SimConfig, Topology,
};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{FileConfig, List, NumberList};

/// `println!` that reports a closed pipe as an error instead of panicking.
macro_rules! out {
    ($($arg:tt)*) => {
        writeln!(io::stdout().lock(), $($arg)*)?
    };
}

/// Invalid flags, config files or settings. Exits with code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Improved,
    Liew,
    Both,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "improved" => Ok(Mode::Improved),
            "liew" => Ok(Mode::Liew),
            "both" => Ok(Mode::Both),
            other => Err(format!("unknown mode `{other}` (expected improved, liew or both)")),
        }
    }
}

impl Mode {
    fn improved(self) -> bool {
        self != Mode::Liew
    }

    fn liew(self) -> bool {
        self != Mode::Improved
    }
}

#[derive(Parser)]
#[command(name = "acmeter", version, about = "Attacking Case interference metrics for 802.11 networks")]
struct Cli {
    /// TOML file supplying defaults for any long flag, plus a `[sim]` table.
    #[arg(long, global = true, env = "ACMETER_CONFIG")]
    config: Option<PathBuf>,

    /// Threshold preset: paper-table or paper-ranges [default: paper-ranges].
    #[arg(long, global = true, env = "ACMETER_PROFILE")]
    profile: Option<Profile>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded 3x3-AP grid scenario and write it as JSON.
    Gen(GenArgs),
    /// Build the interference graphs and print both Attacking Case metrics.
    Analyze(AnalyzeArgs),
    /// Run a seeds × STA counts × antennas × power schemes grid into a CSV.
    Sweep(SweepArgs),
    /// Simulate DCF traffic over a scenario and report throughput.
    Simulate(SimulateArgs),
    /// Write graphs, power assignment and topology files.
    Export(ExportArgs),
}

/// Where the topology comes from: a file, or the grid generator.
#[derive(Args)]
struct SourceArgs {
    /// Topology JSON file. Mutually exclusive with --seed/--sta.
    #[arg(long, env = "ACMETER_TOPOLOGY", conflicts_with_all = ["seed", "sta"])]
    topology: Option<PathBuf>,
    /// Generator seed [default: 0].
    #[arg(long, env = "ACMETER_SEED")]
    seed: Option<u64>,
    /// Number of STAs for the generator [default: 9].
    #[arg(long, env = "ACMETER_STA")]
    sta: Option<usize>,
    /// oa or da. With --topology, refits every node with this antenna.
    #[arg(long, env = "ACMETER_ANTENNA")]
    antenna: Option<AntennaMode>,
}

#[derive(Args)]
struct PowerArgs {
    /// dp, net, node or iface [default: dp].
    #[arg(long, env = "ACMETER_POWER")]
    power: Option<PowerScheme>,
    /// Uniform transmit power in watts instead of the default power (dp only).
    #[arg(long, env = "ACMETER_TX_POWER")]
    tx_power: Option<f64>,
    /// Extra margin above the receive threshold for minimum-power schemes.
    #[arg(long, env = "ACMETER_MARGIN_DB")]
    margin_db: Option<f64>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, env = "ACMETER_SEED")]
    seed: Option<u64>,
    #[arg(long, env = "ACMETER_STA")]
    sta: Option<usize>,
    #[arg(long, env = "ACMETER_ANTENNA")]
    antenna: Option<AntennaMode>,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    power: PowerArgs,
    /// improved, liew or both [default: both].
    #[arg(long, env = "ACMETER_MODE")]
    mode: Option<Mode>,
    /// Omni gain substituted for every antenna in the Liew analysis [default: 1].
    #[arg(long, env = "ACMETER_LIEW_GAIN")]
    liew_gain: Option<f64>,
    /// Write the metrics as a CSV row ("-" for standard output).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the graphs in DOT format.
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Write the graphs as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Seeds as a list of numbers and `a..b` ranges [default: 0..40].
    #[arg(long, env = "ACMETER_SEEDS")]
    seeds: Option<NumberList>,
    /// STA counts [default: 9,18,27,36].
    #[arg(long, env = "ACMETER_STA")]
    sta: Option<NumberList>,
    /// Antenna setups [default: oa,da].
    #[arg(long, env = "ACMETER_ANTENNA")]
    antenna: Option<List<AntennaMode>>,
    /// Power schemes [default: dp].
    #[arg(long, env = "ACMETER_POWER")]
    power: Option<List<PowerScheme>>,
    #[arg(long, env = "ACMETER_MARGIN_DB")]
    margin_db: Option<f64>,
    #[arg(long, env = "ACMETER_LIEW_GAIN")]
    liew_gain: Option<f64>,
    /// Also simulate every cell and append throughput columns.
    #[arg(long, env = "ACMETER_SIMULATE")]
    simulate: bool,
    #[command(flatten)]
    sim: SimFlags,
    /// Worker threads [default: all cores].
    #[arg(long, env = "ACMETER_JOBS")]
    jobs: Option<usize>,
    /// Output CSV. Completed cells already in the file are kept and skipped.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct SimFlags {
    /// Simulated seconds [default: 120].
    #[arg(long, env = "ACMETER_SIM_TIME")]
    sim_time: Option<f64>,
    /// Offered load per link in packets per second [default: 550].
    #[arg(long, env = "ACMETER_LOAD")]
    load: Option<f64>,
    /// Simulator seed [default: 0].
    #[arg(long, env = "ACMETER_SIM_SEED")]
    sim_seed: Option<u64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    power: PowerArgs,
    #[command(flatten)]
    sim: SimFlags,
    /// Write per-link statistics as CSV ("-" for standard output).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    power: PowerArgs,
    /// Graph set(s) to export: improved, liew or both [default: both].
    #[arg(long, env = "ACMETER_MODE")]
    mode: Option<Mode>,
    #[arg(long, env = "ACMETER_LIEW_GAIN")]
    liew_gain: Option<f64>,
    #[arg(long)]
    dot: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    /// Power assignment as CSV.
    #[arg(long)]
    power_csv: Option<PathBuf>,
    /// The resolved topology as JSON.
    #[arg(long)]
    topology_out: Option<PathBuf>,
}

struct Ctx {
    file: FileConfig,
    /// Set when given by flag, environment or config file. Topology files
    /// keep their own environment otherwise.
    profile: Option<Profile>,
}

impl Ctx {
    fn environment(&self) -> Environment {
        Environment::from_profile(self.profile.unwrap_or_default())
    }

    fn topology(&self, s: &SourceArgs) -> Result<Topology> {
        let path = match s.topology.clone() {
            Some(p) => Some(p),
            None if s.seed.is_none() && s.sta.is_none() => self.file.get::<PathBuf>("topology")?,
            None => None,
        };
        let antenna: Option<AntennaMode> = match s.antenna {
            Some(a) => Some(a),
            None => self.file.get("antenna")?,
        };
        match path {
            Some(p) => {
                let mut t = load_topology(&p)?;
                if self.profile.is_some() {
                    t = t.with_environment(self.environment())?;
                }
                Ok(match antenna {
                    Some(a) => t.with_antenna_mode(a)?,
                    None => t,
                })
            }
            None => {
                let seed = self.file.pick(s.seed, "seed", 0)?;
                let sta = self.file.pick(s.sta, "sta", 9)?;
                let spec = ScenarioSpec::new(seed, sta, antenna.unwrap_or(AntennaMode::Oa));
                Ok(generate_grid_scenario(&spec, &self.environment())?)
            }
        }
    }

    fn power(&self, t: &Topology, p: &PowerArgs) -> Result<PowerAssignment> {
        let scheme = self.file.pick(p.power, "power", PowerScheme::DpNchan)?;
        let margin = self.file.pick(p.margin_db, "margin-db", 0.0)?;
        let tx_power = match p.tx_power {
            Some(w) => Some(w),
            None => self.file.get::<f64>("tx-power")?,
        };
        match tx_power {
            None => Ok(power::assign(t, scheme, margin)?),
            Some(w) if scheme != PowerScheme::DpNchan => {
                bail!(ConfigError(format!("--tx-power {w} only applies to --power dp, not {}", scheme.flag())))
            }
            Some(w) if !(w.is_finite() && w > 0.0) => bail!(ConfigError(format!("--tx-power must be positive, got {w}"))),
            Some(w) => Ok(power::uniform_power(t, w)),
        }
    }

    fn mode(&self, m: Option<Mode>) -> Result<Mode> {
        Ok(self.file.pick(m, "mode", Mode::Both)?)
    }

    fn liew_gain(&self, g: Option<f64>) -> Result<f64> {
        let g = self.file.pick(g, "liew-gain", 1.0)?;
        if !(g.is_finite() && g > 0.0) {
            bail!(ConfigError(format!("--liew-gain must be positive, got {g}")));
        }
        Ok(g)
    }

    fn sim(&self, f: &SimFlags) -> Result<SimConfig> {
        let base = self.file.sim.clone().unwrap_or_default();
        let cfg = SimConfig {
            sim_time_s: self.file.pick(f.sim_time, "sim-time", base.sim_time_s)?,
            offered_load_pps: self.file.pick(f.load, "load", base.offered_load_pps)?,
            seed: self.file.pick(f.sim_seed, "sim-seed", base.seed)?,
            ..base
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Opens `path` for writing; `-` is standard output.
fn output(path: &Path) -> Result<Box<dyn Write>> {
    if path == Path::new("-") {
        return Ok(Box::new(io::stdout().lock()));
    }
    let f = File::create(path).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })?;
    Ok(Box::new(BufWriter::new(f)))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    let mut out = output(path)?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn environment_name(env: &Environment) -> String {
    [Profile::PaperTable, Profile::PaperRanges]
        .into_iter()
        .find(|&p| Environment::from_profile(p) == *env)
        .map_or_else(|| "custom environment".to_string(), |p| p.to_string())
}

fn summary_line(t: &Topology) -> String {
    let aps = t.nodes().iter().filter(|n| n.role == acmeter::Role::Ap).count();
    let da = t.nodes().iter().any(|n| n.is_directional());
    format!(
        "{} nodes ({aps} APs, {} STAs), {} links, {}, {}",
        t.nodes().len(),
        t.nodes().len() - aps,
        t.links().len(),
        if da { "directional" } else { "omni" },
        environment_name(t.environment()),
    )
}

fn cmd_gen(ctx: &Ctx, a: &GenArgs) -> Result<()> {
    let seed = ctx.file.pick(a.seed, "seed", 0)?;
    let sta = ctx.file.pick(a.sta, "sta", 9)?;
    let antenna = ctx.file.pick(a.antenna, "antenna", AntennaMode::Oa)?;
    let t = generate_grid_scenario(&ScenarioSpec::new(seed, sta, antenna), &ctx.environment())?;
    match &a.out {
        Some(path) => {
            write_file(path, &topology_to_json(&t))?;
            out!("{}: {}", path.display(), summary_line(&t));
        }
        None => {
            io::stdout().lock().write_all(topology_to_json(&t).as_bytes())?;
            eprintln!("{}", summary_line(&t));
        }
    }
    Ok(())
}

struct Analysis {
    improved: Option<(InterferenceGraphSet, AttackingCase)>,
    liew: Option<(InterferenceGraphSet, AttackingCase)>,
}

fn analysis(t: &Topology, p: &PowerAssignment, mode: Mode, liew_gain: f64) -> Result<Analysis> {
    let improved = if mode.improved() {
        let gs = build_graph_set(t, p, AnalysisMode::Improved)?;
        let ac = acmeter::attacking_case_improved(&gs)?;
        Some((gs, ac))
    } else {
        None
    };
    let liew = if mode.liew() {
        let gs = liew_graph_set(t, p, liew_gain)?;
        let ac = acmeter::attacking_case_liew(&gs)?;
        Some((gs, ac))
    } else {
        None
    };
    Ok(Analysis { improved, liew })
}

impl Analysis {
    fn sets(&self) -> impl Iterator<Item = &(InterferenceGraphSet, AttackingCase)> {
        self.improved.iter().chain(self.liew.iter())
    }

    fn dot(&self, t: &Topology) -> String {
        self.sets().map(|(gs, _)| gs.to_dot(t)).collect()
    }

    fn json(&self) -> String {
        let parts: Vec<String> = self.sets().map(|(gs, _)| gs.to_json()).collect();
        format!("[\n{}\n]\n", parts.join(",\n"))
    }
}

fn cmd_analyze(ctx: &Ctx, a: &AnalyzeArgs) -> Result<()> {
    let t = ctx.topology(&a.source)?;
    let p = ctx.power(&t, &a.power)?;
    let mode = ctx.mode(a.mode)?;
    let r = analysis(&t, &p, mode, ctx.liew_gain(a.liew_gain)?)?;

    out!("{}; power {}", summary_line(&t), p.scheme);
    out!("{:<9} {:>8} {:>8} {:>8} {:>8}", "metric", "C1", "C2", "C3", "AC");
    for (name, ac) in [("improved", &r.improved), ("liew", &r.liew)] {
        if let Some((_, ac)) = ac {
            let c = ac.components;
            out!("{name:<9} {:>8} {:>8} {:>8} {:>8}", c.i_part, c.tc_part, c.rc_part, ac.value);
        }
    }

    if let Some(path) = &a.csv {
        let mut w = csv::Writer::from_writer(output(path)?);
        let mut header = vec!["nodes".to_string(), "links".into(), "scheme".into()];
        let mut row = vec![t.nodes().len().to_string(), t.links().len().to_string(), p.scheme.to_string()];
        for (name, ac) in [("improved", &r.improved), ("liew", &r.liew)] {
            if let Some((_, ac)) = ac {
                let c = ac.components;
                header.extend(["ac", "c1", "c2", "c3"].map(|k| format!("{k}_{name}")));
                row.extend([ac.value, c.i_part, c.tc_part, c.rc_part].map(|v| v.to_string()));
            }
        }
        w.write_record(&header)?;
        w.write_record(&row)?;
        w.flush()?;
    }
    if let Some(path) = &a.dot {
        write_file(path, &r.dot(&t))?;
    }
    if let Some(path) = &a.json {
        write_file(path, &r.json())?;
    }
    Ok(())
}

/// Cells per checkpoint: the CSV is rewritten after each chunk so an
/// interrupted sweep loses at most one chunk.
const SWEEP_CHUNK: usize = 64;

fn cmd_sweep(ctx: &Ctx, a: &SweepArgs) -> Result<()> {
    let seeds = ctx.file.pick(a.seeds.clone(), "seeds", NumberList((0..40).collect()))?.0;
    let n_sta = ctx.file.pick(a.sta.clone(), "sta", NumberList(vec![9, 18, 27, 36]))?.0;
    let antennas = ctx.file.pick(a.antenna.clone(), "antenna", List(vec![AntennaMode::Oa, AntennaMode::Da]))?.0;
    let schemes = ctx.file.pick(a.power.clone(), "power", List(vec![PowerScheme::DpNchan]))?.0;
    let simulate = a.simulate || ctx.file.get::<bool>("simulate")?.unwrap_or(false);
    let grid = SweepGrid {
        seeds,
        n_sta: n_sta.into_iter().map(|n| n as usize).collect(),
        antennas,
        schemes,
    };
    let cfg = SweepConfig {
        profile: ctx.profile.unwrap_or_default(),
        margin_db: ctx.file.pick(a.margin_db, "margin-db", 0.0)?,
        liew_reference_gain: ctx.liew_gain(a.liew_gain)?,
        sim: if simulate { Some(ctx.sim(&a.sim)?) } else { None },
    };
    let jobs = match a.jobs {
        Some(j) => Some(j),
        None => ctx.file.get::<usize>("jobs")?,
    };
    if let Some(jobs) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring worker threads")?;
    }

    let mut rows: Vec<SweepRow> = if a.out.exists() {
        let f = File::open(&a.out).map_err(|e| Error::Io {
            path: a.out.clone(),
            source: e,
        })?;
        let done = sweep::read_csv(BufReader::new(f), &cfg)?;
        eprintln!("{}: resuming with {} completed cells", a.out.display(), done.len());
        done
    } else {
        Vec::new()
    };
    let have: std::collections::BTreeSet<CellKey> = rows.iter().map(|r| r.key).collect();
    let todo: Vec<CellKey> = grid.cells().into_iter().filter(|k| !have.contains(k)).collect();
    let total = todo.len();
    let mut finished = 0;
    checkpoint(&a.out, &rows, &cfg)?;
    for chunk in todo.chunks(SWEEP_CHUNK) {
        let fresh = sweep::run_cells(chunk, &cfg, &|_, _| {})?;
        rows.extend(fresh);
        rows.sort_by_key(|r| r.key);
        checkpoint(&a.out, &rows, &cfg)?;
        finished += chunk.len();
        eprintln!("sweep: {finished}/{total} cells");
    }
    out!("{}: {} rows", a.out.display(), rows.len());
    Ok(())
}

/// Rewrites the sweep CSV through a temporary file and a rename.
fn checkpoint(path: &Path, rows: &[SweepRow], cfg: &SweepConfig) -> Result<()> {
    let tmp = path.with_extension("csv.partial");
    let f = File::create(&tmp).map_err(|e| Error::Io {
        path: tmp.clone(),
        source: e,
    })?;
    sweep::write_csv(rows, cfg, BufWriter::new(f))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })?;
    Ok(())
}

fn cmd_simulate(ctx: &Ctx, a: &SimulateArgs) -> Result<()> {
    let t = ctx.topology(&a.source)?;
    let p = ctx.power(&t, &a.power)?;
    let cfg = ctx.sim(&a.sim)?;
    let r = simulate(&t, &p, &cfg)?;
    out!("{}; power {}", summary_line(&t), p.scheme);
    out!(
        "throughput {:.4} Mb/s over {} s; delivered {}, collisions {}, drops {}, retransmissions {}",
        r.aggregated_throughput_bps / 1e6,
        cfg.sim_time_s,
        r.delivered(),
        r.collisions,
        r.drops,
        r.retransmissions
    );
    if let Some(path) = &a.csv {
        let mut w = csv::Writer::from_writer(output(path)?);
        w.write_record([
            "link",
            "generated",
            "delivered",
            "acked",
            "collisions",
            "retransmissions",
            "retry_drops",
            "queue_drops",
            "in_flight",
            "queued",
        ])?;
        for l in &r.per_link {
            let v = [
                u64::from(l.link),
                l.generated,
                l.delivered,
                l.acked,
                l.collisions,
                l.retransmissions,
                l.retry_drops,
                l.queue_drops,
                l.in_flight,
                l.queued,
            ];
            w.write_record(v.map(|x| x.to_string()))?;
        }
        w.flush()?;
    }
    Ok(())
}

fn cmd_export(ctx: &Ctx, a: &ExportArgs) -> Result<()> {
    let t = ctx.topology(&a.source)?;
    let p = ctx.power(&t, &a.power)?;
    let mode = ctx.mode(a.mode)?;
    let r = analysis(&t, &p, mode, ctx.liew_gain(a.liew_gain)?)?;
    let mut wrote = 0;
    if let Some(path) = &a.dot {
        write_file(path, &r.dot(&t))?;
        wrote += 1;
    }
    if let Some(path) = &a.json {
        write_file(path, &r.json())?;
        wrote += 1;
    }
    if let Some(path) = &a.power_csv {
        let mut out = output(path)?;
        p.write_csv(&mut out)?;
        out.flush()?;
        wrote += 1;
    }
    if let Some(path) = &a.topology_out {
        write_file(path, &topology_to_json(&t))?;
        wrote += 1;
    }
    if wrote == 0 {
        bail!(ConfigError("nothing to export: pass --dot, --json, --power-csv or --topology-out".into()));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let profile = match cli.profile {
        Some(p) => Some(p),
        None => file.get("profile")?,
    };
    let ctx = Ctx { file, profile };
    match &cli.command {
        Command::Gen(a) => cmd_gen(&ctx, a),
        Command::Analyze(a) => cmd_analyze(&ctx, a),
        Command::Sweep(a) => cmd_sweep(&ctx, a),
        Command::Simulate(a) => cmd_simulate(&ctx, a),
        Command::Export(a) => cmd_export(&ctx, a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::UnassociableSta { .. } | Error::PowerExceedsCap { .. } | Error::LinkNotViable { .. }) => 3,
        Some(
            Error::Config(_)
            | Error::Schema { .. }
            | Error::InvalidTopology(_)
            | Error::InvalidEnvironment(_)
            | Error::Io { .. },
        ) => 2,
        _ => 1,
    }
}

fn is_broken_pipe(err: &anyhow::Error) -> bool {
    err.downcast_ref::<io::Error>()
        .is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe)
}

/// The error chain, skipping causes the previous message already quotes.
fn message(err: &anyhow::Error) -> String {
    let mut text = String::new();
    for cause in err.chain() {
        let part = cause.to_string();
        if !text.contains(&part) {
            if !text.is_empty() {
                text.push_str(": ");
            }
            text.push_str(&part);
        }
    }
    text
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", message(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
