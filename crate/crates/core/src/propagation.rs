//! Two-ray ground propagation with directional gains.
//!
//! Received power at `b` from `a` is `P_a · G_a(θ) · G_b(θ + 180°) · h_a² · h_b² / r^α`,
//! where `θ` is the bearing from `a` to `b`. Bearings are planar angles in
//! degrees measured counter-clockwise from the +x axis, normalized to `[0, 360)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// ns-2's default transmit power, in watts.
pub const DEFAULT_TX_POWER_W: f64 = 0.28184;
pub const DEFAULT_ANTENNA_HEIGHT_M: f64 = 1.5;
pub const DEFAULT_RX_THRESHOLD_W: f64 = 3.65e-10;
/// Carrier-sense threshold as printed in the simulation parameter table.
pub const TABLE_CS_THRESHOLD_W: f64 = 1.79e-12;
/// Carrier-sense threshold that yields a 550 m CSRange at the default power.
pub const RANGES_CS_THRESHOLD_W: f64 = 1.559e-11;
pub const DEFAULT_SIR_DB: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }

    /// Bearing from `self` toward `other`.
    pub fn bearing_to(&self, other: &Point) -> f64 {
        normalize_bearing((other.y - self.y).atan2(other.x - self.x).to_degrees())
    }
}

pub fn normalize_bearing(deg: f64) -> f64 {
    let b = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs.
    if b >= 360.0 {
        0.0
    } else {
        b
    }
}

/// Smallest absolute angle between two bearings, in `[0, 180]`.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = normalize_bearing(a - b);
    d.min(360.0 - d)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub path_loss_exponent: f64,
    pub rx_threshold_w: f64,
    pub cs_threshold_w: f64,
    /// SIR requirement `K` as a linear ratio.
    pub sir_requirement: f64,
    pub antenna_height_m: f64,
}

impl Environment {
    /// Thresholds exactly as in the simulation parameter table
    /// (CSRange ≈ 945 m at the default power).
    pub fn paper_table() -> Self {
        Environment {
            path_loss_exponent: 4.0,
            rx_threshold_w: DEFAULT_RX_THRESHOLD_W,
            cs_threshold_w: TABLE_CS_THRESHOLD_W,
            sir_requirement: db_to_linear(DEFAULT_SIR_DB),
            antenna_height_m: DEFAULT_ANTENNA_HEIGHT_M,
        }
    }

    /// Carrier-sense threshold chosen so that TXRange = 250 m and CSRange = 550 m.
    pub fn paper_ranges() -> Self {
        Environment {
            cs_threshold_w: RANGES_CS_THRESHOLD_W,
            ..Self::paper_table()
        }
    }

    pub fn from_profile(profile: Profile) -> Self {
        match profile {
            Profile::PaperTable => Self::paper_table(),
            Profile::PaperRanges => Self::paper_ranges(),
        }
    }

    pub fn sir_db(&self) -> f64 {
        linear_to_db(self.sir_requirement)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [
            self.path_loss_exponent,
            self.rx_threshold_w,
            self.cs_threshold_w,
            self.sir_requirement,
            self.antenna_height_m,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidEnvironment("non-finite parameter".into()));
        }
        if self.path_loss_exponent <= 0.0 {
            return Err(Error::InvalidEnvironment("path loss exponent must be > 0".into()));
        }
        if !(self.rx_threshold_w > self.cs_threshold_w && self.cs_threshold_w > 0.0) {
            return Err(Error::InvalidEnvironment(
                "thresholds must satisfy rx_threshold > cs_threshold > 0".into(),
            ));
        }
        if self.sir_requirement <= 1.0 {
            return Err(Error::InvalidEnvironment("SIR requirement must exceed 1 (0 dB)".into()));
        }
        if self.antenna_height_m <= 0.0 {
            return Err(Error::InvalidEnvironment("antenna height must be > 0".into()));
        }
        Ok(())
    }
}

impl Default for Environment {
    fn default() -> Self {
        Self::paper_ranges()
    }
}

/// Named environment presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    PaperTable,
    #[default]
    PaperRanges,
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::PaperTable => "paper-table",
            Profile::PaperRanges => "paper-ranges",
        })
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-table" => Ok(Profile::PaperTable),
            "paper-ranges" => Ok(Profile::PaperRanges),
            other => Err(Error::Config(format!(
                "unknown profile `{other}` (expected paper-table or paper-ranges)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AntennaKind {
    Omni,
    Sector,
}

/// Ideal antenna pattern: constant for omni, pie-slice without side or back
/// lobes for sector antennas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaPattern {
    pub kind: AntennaKind,
    pub boresight_deg: f64,
    pub beamwidth_deg: f64,
    pub peak_gain: f64,
    pub height_m: f64,
}

impl AntennaPattern {
    pub fn omni(peak_gain: f64, height_m: f64) -> Self {
        AntennaPattern {
            kind: AntennaKind::Omni,
            boresight_deg: 0.0,
            beamwidth_deg: 360.0,
            peak_gain,
            height_m,
        }
    }

    pub fn sector(boresight_deg: f64, beamwidth_deg: f64, peak_gain: f64, height_m: f64) -> Self {
        AntennaPattern {
            kind: AntennaKind::Sector,
            boresight_deg: normalize_bearing(boresight_deg),
            beamwidth_deg,
            peak_gain,
            height_m,
        }
    }

    /// Linear gain toward `bearing`. Sector edges are inclusive.
    pub fn gain_toward(&self, bearing: f64) -> f64 {
        match self.kind {
            AntennaKind::Omni => self.peak_gain,
            AntennaKind::Sector => {
                if angular_distance(bearing, self.boresight_deg) <= self.beamwidth_deg / 2.0 {
                    self.peak_gain
                } else {
                    0.0
                }
            }
        }
    }
}

/// Two-ray constant `G_tx · G_rx · h_tx² · h_rx²` for a transmitter radiating
/// along `bearing` (receiver looks back along `bearing + 180°`).
pub fn coupling(tx_pattern: &AntennaPattern, rx_pattern: &AntennaPattern, bearing: f64) -> f64 {
    let g_tx = tx_pattern.gain_toward(bearing);
    let g_rx = rx_pattern.gain_toward(bearing + 180.0);
    if g_tx == 0.0 || g_rx == 0.0 {
        return 0.0;
    }
    g_tx * g_rx * tx_pattern.height_m.powi(2) * rx_pattern.height_m.powi(2)
}

pub fn received_power(
    tx_pattern: &AntennaPattern,
    rx_pattern: &AntennaPattern,
    tx_pos: Point,
    rx_pos: Point,
    tx_power_w: f64,
    env: &Environment,
) -> Result<f64> {
    let r = tx_pos.distance(&rx_pos);
    if r == 0.0 {
        return Err(Error::ZeroDistance);
    }
    let c = coupling(tx_pattern, rx_pattern, tx_pos.bearing_to(&rx_pos));
    Ok(c * tx_power_w / r.powf(env.path_loss_exponent))
}

/// Distance along `bearing` at which the received power drops to `threshold_w`.
/// Zero when no power is radiated (or received) along that bearing.
pub fn range_for_threshold(
    tx_pattern: &AntennaPattern,
    rx_pattern: &AntennaPattern,
    tx_power_w: f64,
    threshold_w: f64,
    bearing: f64,
    env: &Environment,
) -> f64 {
    let c = coupling(tx_pattern, rx_pattern, bearing);
    if c == 0.0 || tx_power_w <= 0.0 {
        return 0.0;
    }
    (c * tx_power_w / threshold_w).powf(1.0 / env.path_loss_exponent)
}

pub fn tx_range(
    tx_pattern: &AntennaPattern,
    rx_pattern: &AntennaPattern,
    tx_power_w: f64,
    bearing: f64,
    env: &Environment,
) -> f64 {
    range_for_threshold(tx_pattern, rx_pattern, tx_power_w, env.rx_threshold_w, bearing, env)
}

pub fn cs_range(
    tx_pattern: &AntennaPattern,
    rx_pattern: &AntennaPattern,
    tx_power_w: f64,
    bearing: f64,
    env: &Environment,
) -> f64 {
    range_for_threshold(tx_pattern, rx_pattern, tx_power_w, env.cs_threshold_w, bearing, env)
}
