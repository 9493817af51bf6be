//! Four-valued error propagation probability.
//!
//! During the analysis of one error site every on-path net carries a
//! distribution over four symbols:
//!
//! * `a`: the net equals the (unknown) erroneous value, reached through an
//!   even number of inversions;
//! * `ā`: the net equals its complement (odd number of inversions);
//! * `1` / `0`: the net is a constant, so the error is blocked.
//!
//! Off-path nets are lifted from their signal probability into `{1, 0}`.
//! Gates combine their input distributions pairwise through fixed two-input
//! tables in which `a` behaves as a free Boolean variable and `ā` as its
//! complement; `a·ā = 0`, `a+ā = 1` and `a⊕ā = 1` are what make
//! reconvergent paths with opposite polarity cancel. Distinct inputs are
//! combined as independent, which is the approximation of the method.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::netlist::{ConeInfo, GateKind, NetId, Netlist, NetlistError};
use crate::sigprob::SpMap;

/// Tolerance used when validating that a distribution is normalized.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    A = 0,
    ABar = 1,
    One = 2,
    Zero = 3,
}

impl Symbol {
    pub const ALL: [Symbol; 4] = [Symbol::A, Symbol::ABar, Symbol::One, Symbol::Zero];

    pub fn inverted(self) -> Symbol {
        match self {
            Symbol::A => Symbol::ABar,
            Symbol::ABar => Symbol::A,
            Symbol::One => Symbol::Zero,
            Symbol::Zero => Symbol::One,
        }
    }

    /// Value of the symbol when the erroneous value `a` is `error`.
    pub fn value(self, error: bool) -> bool {
        match self {
            Symbol::A => error,
            Symbol::ABar => !error,
            Symbol::One => true,
            Symbol::Zero => false,
        }
    }
}

use Symbol::{ABar as N, One as I, Zero as O, A};

// Rows/columns in `Symbol::ALL` order: a, ā, 1, 0.
const AND_TABLE: [[Symbol; 4]; 4] = [[A, O, A, O], [O, N, N, O], [A, N, I, O], [O, O, O, O]];
const OR_TABLE: [[Symbol; 4]; 4] = [[A, I, I, A], [I, N, I, N], [I, I, I, I], [A, N, I, O]];
const XOR_TABLE: [[Symbol; 4]; 4] = [[O, I, N, A], [I, O, A, N], [N, A, O, I], [A, N, I, O]];

/// Two-input four-valued table for a combinational base function.
pub fn two_input_table(kind: GateKind) -> Option<&'static [[Symbol; 4]; 4]> {
    match kind {
        GateKind::And | GateKind::Nand => Some(&AND_TABLE),
        GateKind::Or | GateKind::Nor => Some(&OR_TABLE),
        GateKind::Xor | GateKind::Xnor => Some(&XOR_TABLE),
        _ => None,
    }
}

/// Which polarity the error is seeded with at the site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Polarity {
    #[default]
    Even,
    Odd,
}

/// Probability mass over `{a, ā, 1, 0}`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct FourValueDist {
    pub p_a: f64,
    pub p_abar: f64,
    pub p_one: f64,
    pub p_zero: f64,
}

impl FourValueDist {
    pub const fn new(p_a: f64, p_abar: f64, p_one: f64, p_zero: f64) -> Self {
        FourValueDist { p_a, p_abar, p_one, p_zero }
    }

    pub fn point(symbol: Symbol) -> Self {
        let mut m = [0.0; 4];
        m[symbol as usize] = 1.0;
        Self::from_array(m)
    }

    pub fn seed(polarity: Polarity) -> Self {
        match polarity {
            Polarity::Even => Self::point(Symbol::A),
            Polarity::Odd => Self::point(Symbol::ABar),
        }
    }

    pub const fn from_array(m: [f64; 4]) -> Self {
        FourValueDist { p_a: m[0], p_abar: m[1], p_one: m[2], p_zero: m[3] }
    }

    pub const fn to_array(self) -> [f64; 4] {
        [self.p_a, self.p_abar, self.p_one, self.p_zero]
    }

    pub fn get(&self, symbol: Symbol) -> f64 {
        self.to_array()[symbol as usize]
    }

    pub fn total(&self) -> f64 {
        self.p_a + self.p_abar + self.p_one + self.p_zero
    }

    /// Probability that the error is still visible: `p_a + p_ā`.
    pub fn epp(&self) -> f64 {
        (self.p_a + self.p_abar).min(1.0)
    }

    pub fn inverted(self) -> Self {
        FourValueDist { p_a: self.p_abar, p_abar: self.p_a, p_one: self.p_zero, p_zero: self.p_one }
    }

    pub fn is_normalized(&self) -> bool {
        self.to_array().iter().all(|p| (0.0..=1.0).contains(p))
            && (self.total() - 1.0).abs() <= NORMALIZATION_TOLERANCE
    }
}

impl fmt::Display for FourValueDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (p, label) in self.to_array().iter().zip(["a", "ā", "1", "0"]) {
            if *p == 0.0 {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            write!(f, "{p}({label})")?;
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EppError {
    Arity { kind: GateKind, got: usize },
    NotCombinational(GateKind),
    NotNormalized { total: f64 },
    OutOfRange(f64),
    SpMismatch { expected: usize, got: usize },
    Netlist(NetlistError),
}

impl fmt::Display for EppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EppError::Arity { kind, got } => write!(f, "{kind} cannot take {got} input(s)"),
            EppError::NotCombinational(kind) => write!(f, "{kind} is not a combinational gate"),
            EppError::NotNormalized { total } => {
                write!(f, "input distribution is not normalized (total {total})")
            }
            EppError::OutOfRange(p) => write!(f, "signal probability {p} is outside [0, 1]"),
            EppError::SpMismatch { expected, got } => {
                write!(f, "signal probability map covers {got} nets, netlist has {expected}")
            }
            EppError::Netlist(e) => e.fmt(f),
        }
    }
}

impl core::error::Error for EppError {}

impl From<NetlistError> for EppError {
    fn from(e: NetlistError) -> Self {
        EppError::Netlist(e)
    }
}

/// Off-path lift: an off-path net can only be a constant.
pub fn lift_off_path(sp: f64) -> Result<FourValueDist, EppError> {
    if !(0.0..=1.0).contains(&sp) {
        return Err(EppError::OutOfRange(sp));
    }
    Ok(FourValueDist::from_array(lift(sp)))
}

#[inline]
fn lift(sp: f64) -> [f64; 4] {
    [0.0, 0.0, sp, 1.0 - sp]
}

#[cfg(test)]
fn combine(table: &[[Symbol; 4]; 4], x: &[f64; 4], y: &[f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (row, px) in table.iter().zip(x) {
        if *px == 0.0 {
            continue;
        }
        for (sym, py) in row.iter().zip(y) {
            out[*sym as usize] += px * py;
        }
    }
    out
}

/// The two-input tables unrolled: for each output symbol, the sum of the
/// input products that land on it.
#[inline(always)]
fn combine_fast(kind: GateKind, x: &[f64; 4], y: &[f64; 4]) -> [f64; 4] {
    let [xa, xn, x1, x0] = *x;
    let [ya, yn, y1, y0] = *y;
    match kind {
        GateKind::And | GateKind::Nand => {
            let ys = ya + yn + y1 + y0;
            [
                xa * (ya + y1) + x1 * ya,
                xn * (yn + y1) + x1 * yn,
                x1 * y1,
                x0 * ys + xa * (yn + y0) + xn * (ya + y0) + x1 * y0,
            ]
        }
        GateKind::Or | GateKind::Nor => {
            let ys = ya + yn + y1 + y0;
            [
                xa * (ya + y0) + x0 * ya,
                xn * (yn + y0) + x0 * yn,
                x1 * ys + xa * (yn + y1) + xn * (ya + y1) + x0 * y1,
                x0 * y0,
            ]
        }
        _ => [
            xa * y0 + xn * y1 + x1 * yn + x0 * ya,
            xn * y0 + xa * y1 + x1 * ya + x0 * yn,
            xa * yn + xn * ya + x1 * y0 + x0 * y1,
            xa * ya + xn * yn + x1 * y1 + x0 * y0,
        ],
    }
}

#[inline]
fn invert(m: [f64; 4]) -> [f64; 4] {
    [m[1], m[0], m[3], m[2]]
}

/// Unchecked gate evaluation: left-to-right fold, then the inversion map
/// for inverting kinds. Components are clamped into `[0, 1]` to absorb
/// rounding.
#[inline]
fn apply_rule(kind: GateKind, mut inputs: impl Iterator<Item = [f64; 4]>) -> [f64; 4] {
    let first = inputs.next().unwrap_or([0.0, 0.0, 0.0, 1.0]);
    let base = match kind {
        GateKind::Not | GateKind::Buff | GateKind::Input | GateKind::Dff => first,
        _ => inputs.fold(first, |acc, next| combine_fast(kind, &acc, &next)),
    };
    let out = if kind.is_inverting() { invert(base) } else { base };
    out.map(|p| p.clamp(0.0, 1.0))
}

/// Output distribution of a combinational gate from its input distributions.
pub fn gate_rule(kind: GateKind, inputs: &[FourValueDist]) -> Result<FourValueDist, EppError> {
    if kind.is_source() {
        return Err(EppError::NotCombinational(kind));
    }
    if !kind.arity_ok(inputs.len()) {
        return Err(EppError::Arity { kind, got: inputs.len() });
    }
    if let Some(bad) = inputs.iter().find(|d| !d.is_normalized()) {
        return Err(EppError::NotNormalized { total: bad.total() });
    }
    Ok(FourValueDist::from_array(apply_rule(kind, inputs.iter().map(|d| d.to_array()))))
}

/// Distributions of every on-path net for one error site.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteDists {
    site: NetId,
    dists: BTreeMap<NetId, FourValueDist>,
}

impl SiteDists {
    pub fn site(&self) -> NetId {
        self.site
    }

    /// `None` for nets that are not on-path.
    pub fn get(&self, net: NetId) -> Option<&FourValueDist> {
        self.dists.get(&net)
    }

    pub fn iter(&self) -> impl Iterator<Item = (NetId, &FourValueDist)> {
        self.dists.iter().map(|(k, v)| (*k, v))
    }

    pub fn len(&self) -> usize {
        self.dists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dists.is_empty()
    }
}

/// EPP at `output`: `p_a + p_ā`. Nets outside the cone yield 0; use
/// [`SiteDists::get`] to tell that case apart.
pub fn epp_of(dists: &SiteDists, output: NetId) -> f64 {
    dists.get(output).map_or(0.0, FourValueDist::epp)
}

/// Per-site sensitization result.
#[derive(Clone, Debug, PartialEq)]
pub struct EppReport {
    pub site: NetId,
    /// EPP to each reachable capture point, sorted by net id.
    pub per_output: Vec<(NetId, f64)>,
    /// `1 − Π(1 − EPP_o)`, treating outputs as independent.
    pub aggregate_any: f64,
    pub aggregate_max: f64,
}

impl EppReport {
    fn from_outputs(site: NetId, per_output: Vec<(NetId, f64)>) -> Self {
        let survive: f64 = per_output.iter().map(|(_, e)| 1.0 - e).product();
        let aggregate_max = per_output.iter().map(|(_, e)| *e).fold(0.0, f64::max);
        let aggregate_any = if per_output.is_empty() { 0.0 } else { (1.0 - survive).clamp(aggregate_max, 1.0) };
        EppReport { site, per_output, aggregate_any, aggregate_max }
    }

    pub fn epp_to(&self, output: NetId) -> f64 {
        self.per_output
            .binary_search_by_key(&output, |(o, _)| *o)
            .map_or(0.0, |i| self.per_output[i].1)
    }
}

/// Reusable per-worker analysis state over a shared netlist and SP map.
/// Each site is analyzed by one sweep of the topological order from the
/// site's position: a gate is on-path when any of its inputs is.
#[derive(Clone, Debug)]
pub struct EppEngine<'a> {
    netlist: &'a Netlist,
    // everything below is indexed by topological position
    lifted: Vec<[f64; 4]>,
    capture: Vec<bool>,
    stamp: Vec<u32>,
    epoch: u32,
    dist: Vec<[f64; 4]>,
    order: Vec<u32>,
}

impl<'a> EppEngine<'a> {
    pub fn new(netlist: &'a Netlist, sp: &SpMap) -> Result<Self, EppError> {
        if sp.len() != netlist.net_count() {
            return Err(EppError::SpMismatch { expected: netlist.net_count(), got: sp.len() });
        }
        let topo = netlist.topo_order();
        Ok(EppEngine {
            netlist,
            lifted: topo.iter().map(|&n| lift(sp.get(n))).collect(),
            capture: topo.iter().map(|&n| netlist.is_capture(n)).collect(),
            stamp: vec![0; topo.len()],
            epoch: 0,
            dist: vec![[0.0; 4]; topo.len()],
            order: Vec::new(),
        })
    }

    fn propagate(&mut self, site: NetId, polarity: Polarity) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        let epoch = self.epoch;
        let (kinds, start, args) = self.netlist.topo_program();
        let (stamp, dist, lifted, order) = (&mut self.stamp, &mut self.dist, &self.lifted, &mut self.order);
        let first = self.netlist.topo_position(site);
        stamp[first] = epoch;
        dist[first] = FourValueDist::seed(polarity).to_array();
        order.clear();
        order.push(first as u32);
        for k in first + 1..kinds.len() {
            let ins = &args[start[k] as usize..start[k + 1] as usize];
            if !ins.iter().any(|&a| stamp[a as usize] == epoch) {
                continue;
            }
            stamp[k] = epoch;
            order.push(k as u32);
            let inputs = ins.iter().map(|&a| {
                let a = a as usize;
                if stamp[a] == epoch {
                    dist[a]
                } else {
                    lifted[a]
                }
            });
            dist[k] = apply_rule(kinds[k], inputs);
        }
    }

    pub fn analyze_site(&mut self, site: NetId) -> Result<EppReport, EppError> {
        self.netlist.check(site)?;
        self.propagate(site, Polarity::Even);
        let topo = self.netlist.topo_order();
        let mut per_output: Vec<(NetId, f64)> = self
            .order
            .iter()
            .map(|&k| k as usize)
            .filter(|&k| self.capture[k])
            .map(|k| (topo[k], FourValueDist::from_array(self.dist[k]).epp()))
            .collect();
        per_output.sort_unstable_by_key(|(n, _)| *n);
        Ok(EppReport::from_outputs(site, per_output))
    }

    pub fn site_dists(&mut self, site: NetId, polarity: Polarity) -> Result<SiteDists, EppError> {
        self.netlist.check(site)?;
        self.propagate(site, polarity);
        let topo = self.netlist.topo_order();
        let dists = self
            .order
            .iter()
            .map(|&k| (topo[k as usize], FourValueDist::from_array(self.dist[k as usize])))
            .collect();
        Ok(SiteDists { site, dists })
    }
}

/// Propagate the error seeded at `cone.site()` through its cone. The map
/// covers exactly the on-path nets.
pub fn propagate_from_site(netlist: &Netlist, cone: &ConeInfo, sp: &SpMap) -> Result<SiteDists, EppError> {
    propagate_with_polarity(netlist, cone, sp, Polarity::Even)
}

pub fn propagate_with_polarity(
    netlist: &Netlist,
    cone: &ConeInfo,
    sp: &SpMap,
    polarity: Polarity,
) -> Result<SiteDists, EppError> {
    if sp.len() != netlist.net_count() {
        return Err(EppError::SpMismatch { expected: netlist.net_count(), got: sp.len() });
    }
    let site = cone.site();
    netlist.check(site)?;
    let mut dists: BTreeMap<NetId, FourValueDist> = BTreeMap::new();
    dists.insert(site, FourValueDist::seed(polarity));
    for &net in cone.on_path_gates() {
        let gate = netlist.gate(net);
        let inputs = gate.inputs.iter().map(|i| match dists.get(i) {
            Some(d) => d.to_array(),
            None => lift(sp.get(*i)),
        });
        let out = apply_rule(gate.kind, inputs);
        dists.insert(net, FourValueDist::from_array(out));
    }
    Ok(SiteDists { site, dists })
}

pub fn analyze_site(netlist: &Netlist, sp: &SpMap, site: NetId) -> Result<EppReport, EppError> {
    EppEngine::new(netlist, sp)?.analyze_site(site)
}

/// One report per net, in net id order.
pub fn analyze_all(netlist: &Netlist, sp: &SpMap) -> Result<Vec<EppReport>, EppError> {
    let mut engine = EppEngine::new(netlist, sp)?;
    netlist.nets().map(|site| engine.analyze_site(site)).collect()
}
