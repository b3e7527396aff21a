//! Discrete-event IEEE 802.11 DCF simulator, Basic Access (DATA/ACK) only.
//!
//! Every link is a Poisson flow from its transmitter to its receiver. Each
//! `(node, interface)` pair has its own receiver that locks onto the first
//! frame above the receive threshold; a locked frame is lost as soon as one
//! overlapping frame violates the pairwise SIR test, and a corrupted lock can
//! be taken over by a later frame whose own SIR holds (capture). Carrier sense
//! is node-wide, so a node with several interfaces still transmits on at most
//! one of them at a time.
//!
//! Time is kept in integer nanoseconds and ties are broken by scheduling
//! order, so a run is a pure function of its inputs and seed.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::power::PowerAssignment;
use crate::propagation::{self, AntennaPattern, Environment, Point};
use crate::topology::{LinkId, Topology};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub data_rate_bps: f64,
    pub basic_rate_bps: f64,
    pub payload_bytes: u32,
    pub mac_header_bytes: u32,
    pub ack_bytes: u32,
    pub cw_min: u32,
    pub cw_max: u32,
    pub slot_us: f64,
    pub sifs_us: f64,
    pub difs_us: f64,
    pub plcp_us: f64,
    pub retry_limit: u32,
    /// Overrides every node's queue capacity when set.
    pub ifq_len: Option<usize>,
    /// Packets per second generated at each link's transmitter. The default
    /// is one packet per 1818.181 µs on average, which keeps every queue busy.
    pub offered_load_pps: f64,
    pub sim_time_s: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            data_rate_bps: 11e6,
            basic_rate_bps: 1e6,
            payload_bytes: 1500,
            mac_header_bytes: 28,
            ack_bytes: 14,
            cw_min: 31,
            cw_max: 1023,
            slot_us: 20.0,
            sifs_us: 10.0,
            difs_us: 50.0,
            plcp_us: 192.0,
            retry_limit: 7,
            ifq_len: None,
            offered_load_pps: 550.0,
            sim_time_s: 120.0,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("data_rate_bps", self.data_rate_bps),
            ("basic_rate_bps", self.basic_rate_bps),
            ("slot_us", self.slot_us),
            ("sifs_us", self.sifs_us),
            ("difs_us", self.difs_us),
            ("plcp_us", self.plcp_us),
            ("offered_load_pps", self.offered_load_pps),
            ("sim_time_s", self.sim_time_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.payload_bytes == 0 {
            return Err(Error::Config("payload_bytes must be positive".into()));
        }
        if self.cw_min >= self.cw_max {
            return Err(Error::Config(format!(
                "cw_min ({}) must be below cw_max ({})",
                self.cw_min, self.cw_max
            )));
        }
        Ok(())
    }

    /// DATA airtime: preamble plus MAC header and payload at the data rate.
    pub fn data_airtime_us(&self) -> f64 {
        self.plcp_us + f64::from(self.mac_header_bytes + self.payload_bytes) * 8.0 / self.data_rate_bps * 1e6
    }

    /// ACK airtime: preamble plus the ACK body at the basic rate.
    pub fn ack_airtime_us(&self) -> f64 {
        self.plcp_us + f64::from(self.ack_bytes) * 8.0 / self.basic_rate_bps * 1e6
    }

    /// How long a sender waits after its DATA ends before declaring failure.
    pub fn ack_timeout_us(&self) -> f64 {
        self.sifs_us + self.ack_airtime_us() + 2.0 * self.slot_us
    }

    /// Throughput of one uncontended, saturated link: one DATA/ACK exchange
    /// per DIFS plus an average backoff of `cw_min / 2` slots.
    pub fn saturation_throughput_bps(&self) -> f64 {
        let cycle_us = self.difs_us
            + f64::from(self.cw_min) / 2.0 * self.slot_us
            + self.data_airtime_us()
            + self.sifs_us
            + self.ack_airtime_us();
        f64::from(self.payload_bytes) * 8.0 / (cycle_us * 1e-6)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkStats {
    pub link: LinkId,
    pub generated: u64,
    /// Distinct packets the receiver accepted.
    pub delivered: u64,
    /// Packets whose ACK reached the sender.
    pub acked: u64,
    /// DATA attempts that went unacknowledged.
    pub collisions: u64,
    pub retransmissions: u64,
    /// Packets abandoned after the retry limit.
    pub retry_drops: u64,
    /// Packets refused by a full queue.
    pub queue_drops: u64,
    /// 1 if a packet was being served when the run ended.
    pub in_flight: u64,
    pub queued: u64,
}

impl LinkStats {
    /// Every generated packet is accounted for exactly once.
    pub fn is_conserved(&self) -> bool {
        self.generated == self.acked + self.retry_drops + self.queue_drops + self.in_flight + self.queued
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub aggregated_throughput_bps: f64,
    pub collisions: u64,
    pub drops: u64,
    pub retransmissions: u64,
    pub per_link: Vec<LinkStats>,
}

impl SimResult {
    pub fn delivered(&self) -> u64 {
        self.per_link.iter().map(|l| l.delivered).sum()
    }
}

/// Checks that every DATA and ACK reaches its peer at the receive threshold.
pub fn check_viability(topology: &Topology, power: &PowerAssignment) -> Result<()> {
    let env = topology.environment();
    for l in topology.links() {
        let (t, r) = (topology.node(l.tx).expect("tx exists"), topology.node(l.rx).expect("rx exists"));
        let (tp, rp) = (&t.interfaces[l.tx_interface], &r.interfaces[l.rx_interface]);
        for (frame, from, to, pa, pb, p) in [
            ("DATA", t, r, tp, rp, power.get(l.tx, l.tx_interface)),
            ("ACK", r, t, rp, tp, power.get(l.rx, l.rx_interface)),
        ] {
            let received = propagation::received_power(pa, pb, from.position, to.position, p, env)?;
            if received < env.rx_threshold_w {
                return Err(Error::LinkNotViable {
                    link: l.id,
                    frame,
                    received_w: received,
                });
            }
        }
    }
    Ok(())
}

/// Runs one simulation. Fails only if a link cannot close under `power`.
pub fn simulate(topology: &Topology, power: &PowerAssignment, cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    check_viability(topology, power)?;
    let mut sim = Sim::new(topology, power, cfg);
    sim.run();
    Ok(sim.finish())
}

fn ns(us: f64) -> u64 {
    (us * 1e3).round() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FrameKind {
    Data,
    Ack,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Event {
    Arrival { flow: usize },
    DifsDone { flow: usize, gen: u64 },
    BackoffDone { flow: usize, gen: u64 },
    TxEnd { frame: u64 },
    AckTimeout { flow: usize, gen: u64 },
    SendAck { flow: usize, seq: u64 },
    NavEnd { node: usize },
}

#[derive(Debug, PartialEq, Eq)]
struct Scheduled {
    at: u64,
    order: u64,
    event: Event,
}

impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on (time, scheduling order).
        (other.at, other.order).cmp(&(self.at, self.order))
    }
}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Frame {
    kind: FrameKind,
    flow: usize,
    seq: u64,
    src: usize,
    dst: usize,
    /// Received power at every PHY, indexed like `Sim::phys`.
    power_at: Vec<f64>,
    /// Nodes whose carrier sense this frame holds busy.
    sensed_by: Vec<usize>,
}

struct Phy {
    node: usize,
    pattern: AntennaPattern,
    /// Frame being received and whether it is already lost.
    lock: Option<(u64, bool)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    /// Nothing to send.
    Idle,
    /// Waiting for the medium to go idle.
    Deferring,
    Difs,
    /// Counting down since the given time.
    Countdown(u64),
    Transmitting,
    AwaitingAck,
}

struct Packet {
    seq: u64,
    retries: u32,
}

struct Flow {
    tx: usize,
    rx: usize,
    tx_pattern: AntennaPattern,
    rx_pattern: AntennaPattern,
    tx_power: f64,
    rx_power: f64,
    capacity: usize,
    phase: Phase,
    gen: u64,
    cw: u32,
    backoff: u32,
    head: Option<Packet>,
    queue: VecDeque<Packet>,
    next_seq: u64,
    last_delivered: Option<u64>,
    stats: LinkStats,
}

struct NodeState {
    position: Point,
    phys: Vec<usize>,
    flows: Vec<usize>,
    transmitting: bool,
    busy_frames: u32,
    nav_until: u64,
    idle: bool,
}

struct Sim<'a> {
    cfg: &'a SimConfig,
    env: Environment,
    now: u64,
    end: u64,
    order: u64,
    queue: BinaryHeap<Scheduled>,
    rng: ChaCha8Rng,
    arrivals: Exp<f64>,
    nodes: Vec<NodeState>,
    phys: Vec<Phy>,
    flows: Vec<Flow>,
    frames: BTreeMap<u64, Frame>,
    next_frame: u64,
    data_ns: u64,
    ack_ns: u64,
    slot_ns: u64,
    sifs_ns: u64,
    difs_ns: u64,
    ack_timeout_ns: u64,
}

impl<'a> Sim<'a> {
    fn new(topology: &Topology, power: &PowerAssignment, cfg: &'a SimConfig) -> Self {
        let index: BTreeMap<_, _> = topology.nodes().iter().enumerate().map(|(i, n)| (n.id, i)).collect();
        let mut phys = Vec::new();
        let mut nodes: Vec<NodeState> = topology
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let start = phys.len();
                phys.extend(n.interfaces.iter().map(|&pattern| Phy {
                    node: i,
                    pattern,
                    lock: None,
                }));
                NodeState {
                    position: n.position,
                    phys: (start..phys.len()).collect(),
                    flows: Vec::new(),
                    transmitting: false,
                    busy_frames: 0,
                    nav_until: 0,
                    idle: true,
                }
            })
            .collect();
        let flows = topology
            .links()
            .iter()
            .enumerate()
            .map(|(f, l)| {
                let tx = index[&l.tx];
                let rx = index[&l.rx];
                nodes[tx].flows.push(f);
                let t = topology.node(l.tx).expect("tx exists");
                let r = topology.node(l.rx).expect("rx exists");
                Flow {
                    tx,
                    rx,
                    tx_pattern: t.interfaces[l.tx_interface],
                    rx_pattern: r.interfaces[l.rx_interface],
                    tx_power: power.get(l.tx, l.tx_interface),
                    rx_power: power.get(l.rx, l.rx_interface),
                    capacity: cfg.ifq_len.unwrap_or(t.queue_capacity),
                    phase: Phase::Idle,
                    gen: 0,
                    cw: cfg.cw_min,
                    backoff: 0,
                    head: None,
                    queue: VecDeque::new(),
                    next_seq: 0,
                    last_delivered: None,
                    stats: LinkStats {
                        link: l.id,
                        ..LinkStats::default()
                    },
                }
            })
            .collect();
        Sim {
            cfg,
            env: *topology.environment(),
            now: 0,
            end: ns(cfg.sim_time_s * 1e6),
            order: 0,
            queue: BinaryHeap::new(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            arrivals: Exp::new(cfg.offered_load_pps).expect("positive rate"),
            nodes,
            phys,
            flows,
            frames: BTreeMap::new(),
            next_frame: 0,
            data_ns: ns(cfg.data_airtime_us()),
            ack_ns: ns(cfg.ack_airtime_us()),
            slot_ns: ns(cfg.slot_us),
            sifs_ns: ns(cfg.sifs_us),
            difs_ns: ns(cfg.difs_us),
            ack_timeout_ns: ns(cfg.ack_timeout_us()),
        }
    }

    fn schedule(&mut self, at: u64, event: Event) {
        self.order += 1;
        self.queue.push(Scheduled {
            at,
            order: self.order,
            event,
        });
    }

    fn schedule_arrival(&mut self, flow: usize) {
        let gap_s: f64 = self.arrivals.sample(&mut self.rng);
        let at = self.now + ns(gap_s * 1e6).max(1);
        if at <= self.end {
            self.schedule(at, Event::Arrival { flow });
        }
    }

    fn run(&mut self) {
        for f in 0..self.flows.len() {
            self.schedule_arrival(f);
        }
        while let Some(Scheduled { at, event, .. }) = self.queue.pop() {
            if at > self.end {
                break;
            }
            self.now = at;
            match event {
                Event::Arrival { flow } => self.on_arrival(flow),
                Event::DifsDone { flow, gen } if self.flows[flow].gen == gen => self.on_difs_done(flow),
                Event::BackoffDone { flow, gen } if self.flows[flow].gen == gen => self.start_data(flow),
                Event::TxEnd { frame } => self.on_tx_end(frame),
                Event::AckTimeout { flow, gen } if self.flows[flow].gen == gen => self.on_failure(flow),
                Event::SendAck { flow, seq } => self.send_ack(flow, seq),
                Event::NavEnd { node } => self.refresh_idle(node),
                _ => {}
            }
        }
    }

    fn finish(mut self) -> SimResult {
        let mut per_link = Vec::with_capacity(self.flows.len());
        for f in &mut self.flows {
            f.stats.in_flight = u64::from(f.head.is_some());
            f.stats.queued = f.queue.len() as u64;
            per_link.push(f.stats.clone());
        }
        let delivered: u64 = per_link.iter().map(|s| s.delivered).sum();
        SimResult {
            aggregated_throughput_bps: delivered as f64 * f64::from(self.cfg.payload_bytes) * 8.0 / self.cfg.sim_time_s,
            collisions: per_link.iter().map(|s| s.collisions).sum(),
            drops: per_link.iter().map(|s| s.queue_drops + s.retry_drops).sum(),
            retransmissions: per_link.iter().map(|s| s.retransmissions).sum(),
            per_link,
        }
    }

    // ---- MAC ----

    fn on_arrival(&mut self, flow: usize) {
        let f = &mut self.flows[flow];
        f.stats.generated += 1;
        let packet = Packet {
            seq: f.next_seq,
            retries: 0,
        };
        f.next_seq += 1;
        if f.head.is_none() {
            f.head = Some(packet);
            self.begin_contention(flow);
        } else if f.queue.len() < f.capacity {
            f.queue.push_back(packet);
        } else {
            f.stats.queue_drops += 1;
        }
        self.schedule_arrival(flow);
    }

    /// Draws a fresh backoff for the head packet and waits for the medium.
    fn begin_contention(&mut self, flow: usize) {
        let cw = self.flows[flow].cw;
        let backoff = self.rng.random_range(0..=cw);
        let f = &mut self.flows[flow];
        f.backoff = backoff;
        f.gen += 1;
        f.phase = Phase::Deferring;
        if self.nodes[f.tx].idle {
            self.start_difs(flow);
        }
    }

    fn start_difs(&mut self, flow: usize) {
        let f = &mut self.flows[flow];
        f.gen += 1;
        f.phase = Phase::Difs;
        let gen = f.gen;
        self.schedule(self.now + self.difs_ns, Event::DifsDone { flow, gen });
    }

    fn on_difs_done(&mut self, flow: usize) {
        let f = &mut self.flows[flow];
        if f.backoff == 0 {
            self.start_data(flow);
            return;
        }
        f.phase = Phase::Countdown(self.now);
        let gen = f.gen;
        let at = self.now + u64::from(f.backoff) * self.slot_ns;
        self.schedule(at, Event::BackoffDone { flow, gen });
    }

    /// The medium went busy: stop the DIFS wait or bank the elapsed slots.
    fn freeze(&mut self, flow: usize) {
        let slot = self.slot_ns;
        let now = self.now;
        let f = &mut self.flows[flow];
        match f.phase {
            Phase::Difs => {}
            Phase::Countdown(since) => {
                let elapsed = ((now - since) / slot) as u32;
                f.backoff -= elapsed.min(f.backoff);
            }
            _ => return,
        }
        f.gen += 1;
        f.phase = Phase::Deferring;
    }

    fn on_success(&mut self, flow: usize) {
        let cw_min = self.cfg.cw_min;
        let f = &mut self.flows[flow];
        f.gen += 1;
        f.stats.acked += 1;
        f.cw = cw_min;
        self.next_packet(flow);
    }

    fn on_failure(&mut self, flow: usize) {
        let (cw_min, cw_max, limit) = (self.cfg.cw_min, self.cfg.cw_max, self.cfg.retry_limit);
        let f = &mut self.flows[flow];
        f.gen += 1;
        f.stats.collisions += 1;
        let head = f.head.as_mut().expect("a packet was in flight");
        head.retries += 1;
        if head.retries > limit {
            f.stats.retry_drops += 1;
            f.cw = cw_min;
            self.next_packet(flow);
        } else {
            f.stats.retransmissions += 1;
            f.cw = (2 * f.cw + 1).min(cw_max);
            self.begin_contention(flow);
        }
    }

    fn next_packet(&mut self, flow: usize) {
        let f = &mut self.flows[flow];
        f.head = f.queue.pop_front();
        if f.head.is_some() {
            self.begin_contention(flow);
        } else {
            f.phase = Phase::Idle;
        }
    }

    fn start_data(&mut self, flow: usize) {
        let f = &self.flows[flow];
        if self.nodes[f.tx].transmitting {
            // Another interface of this node won the same instant.
            self.flows[flow].phase = Phase::Deferring;
            self.flows[flow].backoff = 0;
            return;
        }
        let seq = f.head.as_ref().expect("contending without a packet").seq;
        let (src, dst, pattern, power) = (f.tx, f.rx, f.tx_pattern, f.tx_power);
        self.flows[flow].phase = Phase::Transmitting;
        self.transmit(FrameKind::Data, flow, seq, src, dst, pattern, power, self.data_ns);
    }

    fn send_ack(&mut self, flow: usize, seq: u64) {
        let f = &self.flows[flow];
        let (src, dst, pattern, power) = (f.rx, f.tx, f.rx_pattern, f.rx_power);
        if self.nodes[src].transmitting {
            return;
        }
        self.transmit(FrameKind::Ack, flow, seq, src, dst, pattern, power, self.ack_ns);
    }

    // ---- PHY ----

    #[allow(clippy::too_many_arguments)]
    fn transmit(
        &mut self,
        kind: FrameKind,
        flow: usize,
        seq: u64,
        src: usize,
        dst: usize,
        pattern: AntennaPattern,
        power: f64,
        airtime: u64,
    ) {
        debug_assert!(!self.nodes[src].transmitting, "node {src} already on the air");
        let id = self.next_frame;
        self.next_frame += 1;
        let origin = self.nodes[src].position;
        let power_at: Vec<f64> = self
            .phys
            .iter()
            .map(|p| {
                if p.node == src {
                    0.0
                } else {
                    propagation::received_power(&pattern, &p.pattern, origin, self.nodes[p.node].position, power, &self.env)
                        .unwrap_or(f64::INFINITY)
                }
            })
            .collect();

        // Half-duplex: anything this node was receiving is lost.
        self.nodes[src].transmitting = true;
        for &p in &self.nodes[src].phys {
            if let Some((_, lost)) = self.phys[p].lock.as_mut() {
                *lost = true;
            }
        }

        let k = self.env.sir_requirement;
        let rx_threshold = self.env.rx_threshold_w;
        for p in 0..self.phys.len() {
            let node = self.phys[p].node;
            if node == src {
                continue;
            }
            let mine = power_at[p];
            match self.phys[p].lock {
                Some((held, lost)) => {
                    let theirs = self.frames[&held].power_at[p];
                    let lost = lost || theirs < k * mine;
                    self.phys[p].lock = Some((held, lost));
                    if lost && mine >= rx_threshold && self.clean_against_active(p, mine) {
                        self.phys[p].lock = Some((id, false));
                    }
                }
                None if !self.nodes[node].transmitting && mine >= rx_threshold => {
                    let lost = !self.clean_against_active(p, mine);
                    self.phys[p].lock = Some((id, lost));
                }
                None => {}
            }
        }

        let cs = self.env.cs_threshold_w;
        let sensed_by: Vec<usize> = (0..self.nodes.len())
            .filter(|&n| n != src && self.nodes[n].phys.iter().any(|&p| power_at[p] >= cs))
            .collect();
        for &n in &sensed_by {
            self.nodes[n].busy_frames += 1;
        }
        self.frames.insert(
            id,
            Frame {
                kind,
                flow,
                seq,
                src,
                dst,
                power_at,
                sensed_by: sensed_by.clone(),
            },
        );
        self.schedule(self.now + airtime, Event::TxEnd { frame: id });
        self.refresh_idle(src);
        for n in sensed_by {
            self.refresh_idle(n);
        }
    }

    /// True if a frame arriving at PHY `p` with power `mine` beats every frame
    /// already on the air there.
    fn clean_against_active(&self, p: usize, mine: f64) -> bool {
        let k = self.env.sir_requirement;
        self.frames.values().all(|h| mine >= k * h.power_at[p])
    }

    fn on_tx_end(&mut self, id: u64) {
        let frame = self.frames.remove(&id).expect("frame on the air");
        self.nodes[frame.src].transmitting = false;
        let mut decoded_at: Vec<usize> = Vec::new();
        for phy in &mut self.phys {
            if let Some((held, lost)) = phy.lock {
                if held == id {
                    phy.lock = None;
                    if !lost && !decoded_at.contains(&phy.node) {
                        decoded_at.push(phy.node);
                    }
                }
            }
        }
        for &n in &frame.sensed_by {
            self.nodes[n].busy_frames -= 1;
        }
        if frame.kind == FrameKind::Data {
            let f = &mut self.flows[frame.flow];
            f.phase = Phase::AwaitingAck;
            f.gen += 1;
            let gen = f.gen;
            self.schedule(self.now + self.ack_timeout_ns, Event::AckTimeout { flow: frame.flow, gen });
        }
        self.refresh_idle(frame.src);
        for &n in &frame.sensed_by {
            self.refresh_idle(n);
        }

        for n in decoded_at {
            if n == frame.dst {
                match frame.kind {
                    FrameKind::Data => self.receive_data(&frame),
                    FrameKind::Ack => self.receive_ack(&frame),
                }
            } else if frame.kind == FrameKind::Data {
                // Overheard DATA: stay quiet for the ACK that follows.
                let until = self.now + self.sifs_ns + self.ack_ns;
                if until > self.nodes[n].nav_until {
                    self.nodes[n].nav_until = until;
                    self.schedule(until, Event::NavEnd { node: n });
                    self.refresh_idle(n);
                }
            }
        }
    }

    fn receive_data(&mut self, frame: &Frame) {
        let node = &self.nodes[frame.dst];
        // A receiver that hears another transmission keeps quiet.
        if node.busy_frames > 0 || node.transmitting {
            return;
        }
        let f = &mut self.flows[frame.flow];
        if f.last_delivered.is_none_or(|s| frame.seq > s) {
            f.last_delivered = Some(frame.seq);
            f.stats.delivered += 1;
        }
        self.schedule(
            self.now + self.sifs_ns,
            Event::SendAck {
                flow: frame.flow,
                seq: frame.seq,
            },
        );
    }

    fn receive_ack(&mut self, frame: &Frame) {
        let f = &self.flows[frame.flow];
        let expected = f.head.as_ref().map(|p| p.seq);
        if f.phase == Phase::AwaitingAck && expected == Some(frame.seq) {
            self.on_success(frame.flow);
        }
    }

    fn refresh_idle(&mut self, node: usize) {
        let n = &self.nodes[node];
        let idle = !n.transmitting && n.busy_frames == 0 && self.now >= n.nav_until;
        if idle == n.idle {
            return;
        }
        self.nodes[node].idle = idle;
        let flows = self.nodes[node].flows.clone();
        for flow in flows {
            if idle {
                if self.flows[flow].phase == Phase::Deferring {
                    self.start_difs(flow);
                }
            } else {
                self.freeze(flow);
            }
        }
    }
}
