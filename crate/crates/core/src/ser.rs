//! Per-node soft error rate: bit-flip rate × latching probability ×
//! sensitization probability, and the circuit total.
//!
//! Rates are unit-agnostic; with the default rate and latching probability
//! of 1.0 a report is a pure sensitization profile.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::epp::EppReport;
use crate::netlist::{NetId, Netlist};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Aggregation {
    /// `1 − Π(1 − EPP_o)` over reachable outputs.
    #[default]
    Any,
    /// Largest single-output EPP.
    Max,
}

impl Aggregation {
    pub fn name(self) -> &'static str {
        match self {
            Aggregation::Any => "any",
            Aggregation::Max => "max",
        }
    }

    pub fn pick(self, report: &EppReport) -> f64 {
        match self {
            Aggregation::Any => report.aggregate_any,
            Aggregation::Max => report.aggregate_max,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SerError {
    NegativeRate { node: Option<NetId>, value: f64 },
    ProbabilityOutOfRange { node: Option<NetId>, value: f64 },
    MissingReport(NetId),
    UnknownNet(NetId),
}

impl fmt::Display for SerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SerError::NegativeRate { node: Some(n), value } => write!(f, "negative upset rate {value} at {n}"),
            SerError::NegativeRate { node: None, value } => write!(f, "negative upset rate {value}"),
            SerError::ProbabilityOutOfRange { node: Some(n), value } => {
                write!(f, "probability {value} at {n} is outside [0, 1]")
            }
            SerError::ProbabilityOutOfRange { node: None, value } => {
                write!(f, "probability {value} is outside [0, 1]")
            }
            SerError::MissingReport(n) => write!(f, "no sensitization result for {n}"),
            SerError::UnknownNet(n) => write!(f, "unknown net {n}"),
        }
    }
}

impl core::error::Error for SerError {}

#[derive(Clone, Debug, PartialEq)]
pub struct SerConfig {
    pub default_r_seu: f64,
    pub default_p_latched: f64,
    pub r_seu: BTreeMap<NetId, f64>,
    pub p_latched: BTreeMap<NetId, f64>,
    pub aggregation: Aggregation,
}

impl Default for SerConfig {
    fn default() -> Self {
        SerConfig {
            default_r_seu: 1.0,
            default_p_latched: 1.0,
            r_seu: BTreeMap::new(),
            p_latched: BTreeMap::new(),
            aggregation: Aggregation::Any,
        }
    }
}

impl SerConfig {
    pub fn r_seu_of(&self, node: NetId) -> f64 {
        self.r_seu.get(&node).copied().unwrap_or(self.default_r_seu)
    }

    pub fn p_latched_of(&self, node: NetId) -> f64 {
        self.p_latched.get(&node).copied().unwrap_or(self.default_p_latched)
    }

    pub fn validate(&self, netlist: &Netlist) -> Result<(), SerError> {
        check_rate(None, self.default_r_seu)?;
        check_prob(None, self.default_p_latched)?;
        for (&n, &v) in &self.r_seu {
            netlist.check(n).map_err(|_| SerError::UnknownNet(n))?;
            check_rate(Some(n), v)?;
        }
        for (&n, &v) in &self.p_latched {
            netlist.check(n).map_err(|_| SerError::UnknownNet(n))?;
            check_prob(Some(n), v)?;
        }
        Ok(())
    }
}

fn check_rate(node: Option<NetId>, value: f64) -> Result<f64, SerError> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(SerError::NegativeRate { node, value })
    }
}

fn check_prob(node: Option<NetId>, value: f64) -> Result<f64, SerError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(SerError::ProbabilityOutOfRange { node, value })
    }
}

pub fn node_ser(r_seu: f64, p_latched: f64, p_sensitized: f64) -> Result<f64, SerError> {
    Ok(check_rate(None, r_seu)? * check_prob(None, p_latched)? * check_prob(None, p_sensitized)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SerRow {
    pub node: NetId,
    pub r_seu: f64,
    pub p_latched: f64,
    /// `None` when the node was not analyzed.
    pub p_sensitized: Option<f64>,
    pub ser: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SerReport {
    /// One row per net, in net id order.
    pub rows: Vec<SerRow>,
    pub total_ser: f64,
    /// Analyzed nodes by decreasing SER; ties keep net id order.
    pub ranking: Vec<NetId>,
    pub aggregation: Aggregation,
}

impl SerReport {
    pub fn analyzed(&self) -> usize {
        self.rows.iter().filter(|r| r.ser.is_some()).count()
    }
}

/// Report over every net; fails if any net lacks an [`EppReport`].
pub fn build_report(netlist: &Netlist, epp: &[EppReport], cfg: &SerConfig) -> Result<SerReport, SerError> {
    let by_site = index_reports(netlist, epp)?;
    if let Some(missing) = netlist.nets().find(|n| by_site[n.index()].is_none()) {
        return Err(SerError::MissingReport(missing));
    }
    assemble(netlist, &by_site, cfg)
}

/// Report where nets without an [`EppReport`] appear as skipped rows.
pub fn build_partial_report(netlist: &Netlist, epp: &[EppReport], cfg: &SerConfig) -> Result<SerReport, SerError> {
    let by_site = index_reports(netlist, epp)?;
    assemble(netlist, &by_site, cfg)
}

fn index_reports<'r>(netlist: &Netlist, epp: &'r [EppReport]) -> Result<Vec<Option<&'r EppReport>>, SerError> {
    let mut by_site = alloc::vec![None; netlist.net_count()];
    for r in epp {
        netlist.check(r.site).map_err(|_| SerError::UnknownNet(r.site))?;
        by_site[r.site.index()] = Some(r);
    }
    Ok(by_site)
}

fn assemble(netlist: &Netlist, by_site: &[Option<&EppReport>], cfg: &SerConfig) -> Result<SerReport, SerError> {
    cfg.validate(netlist)?;
    let mut rows = Vec::with_capacity(netlist.net_count());
    for node in netlist.nets() {
        let r_seu = cfg.r_seu_of(node);
        let p_latched = cfg.p_latched_of(node);
        let p_sensitized = by_site[node.index()].map(|r| cfg.aggregation.pick(r));
        let ser = p_sensitized.map(|p| node_ser(r_seu, p_latched, p)).transpose()?;
        rows.push(SerRow { node, r_seu, p_latched, p_sensitized, ser });
    }
    let total_ser = rows.iter().filter_map(|r| r.ser).sum();
    let mut ranked: Vec<&SerRow> = rows.iter().filter(|r| r.ser.is_some()).collect();
    ranked.sort_by(|x, y| y.ser.partial_cmp(&x.ser).unwrap_or(Ordering::Equal));
    let ranking = ranked.iter().map(|r| r.node).collect();
    Ok(SerReport { rows, total_ser, ranking, aggregation: cfg.aggregation })
}
