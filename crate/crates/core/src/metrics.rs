//! Attacking Case metrics.
//!
//! Improved: `Σ 2·w_I·1[e∈E_I] + w_TC·1[e∈E_TC ∧ e∉E_I] + w_RC·1[e∈E_RC ∧ e∉E_I]`.
//! Liew:     `Σ 2·1[e∈E_I] + 1[e∈E_TC ∧ e∉E_I] + 1[e∈E_RC ∧ e∉E_TC ∧ e∉E_I]`.
//!
//! Both sums run over ordered pairs `i ≠ j`. Note the rc term of the
//! improved form only excludes i-edges while Liew's also excludes tc-edges.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::{AnalysisMode, InterferenceGraphSet};
use crate::power::PowerAssignment;
use crate::topology::{LinkId, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formula {
    Improved,
    Liew,
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Formula::Improved => "improved",
            Formula::Liew => "liew",
        })
    }
}

/// The three partial sums (components 1–3).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Components {
    pub i_part: u64,
    pub tc_part: u64,
    pub rc_part: u64,
}

impl Components {
    /// `2·C1 + C2 + C3`.
    pub fn total(&self) -> u64 {
        2 * self.i_part + self.tc_part + self.rc_part
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeContribution {
    pub source: LinkId,
    pub target: LinkId,
    pub improved: u64,
    pub liew: u64,
}

fn pair_terms(gs: &InterferenceGraphSet, i: LinkId, j: LinkId, formula: Formula) -> Components {
    let wi = u64::from(gs.i_graph.weight(i, j));
    let wtc = u64::from(gs.tc_graph.weight(i, j));
    let wrc = u64::from(gs.rc_graph.weight(i, j));
    match formula {
        Formula::Improved => {
            if wi > 0 {
                Components { i_part: wi, ..Default::default() }
            } else {
                Components { i_part: 0, tc_part: wtc, rc_part: wrc }
            }
        }
        Formula::Liew => Components {
            i_part: u64::from(wi > 0),
            tc_part: u64::from(wi == 0 && wtc > 0),
            rc_part: u64::from(wi == 0 && wtc == 0 && wrc > 0),
        },
    }
}

fn ordered_pairs(gs: &InterferenceGraphSet) -> impl Iterator<Item = (LinkId, LinkId)> + '_ {
    let v = gs.i_graph.vertices();
    v.iter()
        .flat_map(move |&i| v.iter().filter(move |&&j| j != i).map(move |&j| (i, j)))
}

/// Components of either formula; works on graphs from any mode.
pub fn component_breakdown(gs: &InterferenceGraphSet, formula: Formula) -> Components {
    ordered_pairs(gs).fold(Components::default(), |acc, (i, j)| {
        let t = pair_terms(gs, i, j, formula);
        Components {
            i_part: acc.i_part + t.i_part,
            tc_part: acc.tc_part + t.tc_part,
            rc_part: acc.rc_part + t.rc_part,
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackingCase {
    pub formula: Formula,
    pub value: u64,
    pub components: Components,
}

fn attacking_case(gs: &InterferenceGraphSet, formula: Formula) -> AttackingCase {
    let components = component_breakdown(gs, formula);
    AttackingCase {
        formula,
        value: components.total(),
        components,
    }
}

pub fn attacking_case_improved(gs: &InterferenceGraphSet) -> Result<AttackingCase> {
    match gs.mode {
        AnalysisMode::Improved => Ok(attacking_case(gs, Formula::Improved)),
        other => Err(Error::ModeMismatch {
            expected: "improved",
            found: other.name(),
        }),
    }
}

pub fn attacking_case_liew(gs: &InterferenceGraphSet) -> Result<AttackingCase> {
    match gs.mode {
        AnalysisMode::Liew { .. } => Ok(attacking_case(gs, Formula::Liew)),
        other => Err(Error::ModeMismatch {
            expected: "liew",
            found: other.name(),
        }),
    }
}

/// Improved and Liew metrics for one scenario, with per-pair detail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ac_improved: u64,
    pub ac_liew: u64,
    pub components_improved: Components,
    pub components_liew: Components,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_edge_contributions: Vec<EdgeContribution>,
}

impl MetricsReport {
    pub fn from_graph_sets(improved: &InterferenceGraphSet, liew: &InterferenceGraphSet) -> Result<Self> {
        let imp = attacking_case_improved(improved)?;
        let lw = attacking_case_liew(liew)?;
        let per_edge_contributions = ordered_pairs(improved)
            .map(|(i, j)| EdgeContribution {
                source: i,
                target: j,
                improved: pair_terms(improved, i, j, Formula::Improved).total(),
                liew: pair_terms(liew, i, j, Formula::Liew).total(),
            })
            .filter(|c| c.improved > 0 || c.liew > 0)
            .collect();
        Ok(MetricsReport {
            ac_improved: imp.value,
            ac_liew: lw.value,
            components_improved: imp.components,
            components_liew: lw.components,
            per_edge_contributions,
        })
    }

    /// Builds both graph sets and folds them. `liew_reference_gain` is the
    /// omni gain substituted for every antenna in the Liew analysis, which is
    /// antenna-blind throughout: a derived power assignment is recomputed for
    /// the omni view of the topology.
    pub fn analyze(topology: &Topology, power: &PowerAssignment, liew_reference_gain: f64) -> Result<Self> {
        let improved = crate::graphs::build_graph_set(topology, power, AnalysisMode::Improved)?;
        let liew = liew_graph_set(topology, power, liew_reference_gain)?;
        Self::from_graph_sets(&improved, &liew)
    }

    pub fn without_detail(mut self) -> Self {
        self.per_edge_contributions.clear();
        self
    }
}

/// Liew-mode graphs with the power policy re-applied to the omni view.
pub fn liew_graph_set(
    topology: &Topology,
    power: &PowerAssignment,
    reference_gain: f64,
) -> Result<crate::graphs::InterferenceGraphSet> {
    let view = topology.omni_view(reference_gain);
    let view_power = power.for_view(&view)?;
    crate::graphs::build_graph_set(&view, &view_power, AnalysisMode::Liew { reference_gain })
}

/// Relative throughput gain of DA over OA, in percent.
pub fn throughput_gain(tput_da: f64, tput_oa: f64) -> Result<f64> {
    if tput_oa == 0.0 {
        return Err(Error::UndefinedGain);
    }
    Ok((tput_da - tput_oa) * 100.0 / tput_oa)
}

/// Arithmetic mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub std_dev: f64,
}

impl Summary {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        let n = v.len();
        if n == 0 {
            return Summary { n, mean: f64::NAN, std_dev: f64::NAN };
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let std_dev = if n > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Summary { n, mean, std_dev }
    }
}
