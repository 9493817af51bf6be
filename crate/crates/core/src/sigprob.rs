//! Signal probability: the probability that each net carries logic 1.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::faultsim::MAX_EXHAUSTIVE_INPUTS;
use crate::netlist::{GateKind, NetId, Netlist};
use crate::patterns::{ones_per_net, ExhaustivePatterns, Patterns, RandomPatterns};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpMethod {
    Independent,
    MonteCarlo,
    Exact,
}

impl SpMethod {
    pub fn name(self) -> &'static str {
        match self {
            SpMethod::Independent => "independent",
            SpMethod::MonteCarlo => "montecarlo",
            SpMethod::Exact => "exact",
        }
    }
}

impl fmt::Display for SpMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpError {
    OutOfRange { net: NetId, value: f64 },
    NotAnInput(NetId),
    Missing(NetId),
    LengthMismatch { expected: usize, got: usize },
    ZeroVectors,
    TooManyInputs { count: usize, limit: usize },
}

impl fmt::Display for SpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpError::OutOfRange { net, value } => {
                write!(f, "signal probability {value} for {net} is outside [0, 1]")
            }
            SpError::NotAnInput(net) => {
                write!(f, "{net} is not a primary input or flip-flop output")
            }
            SpError::Missing(net) => write!(f, "no signal probability given for input {net}"),
            SpError::LengthMismatch { expected, got } => {
                write!(f, "expected {expected} signal probabilities, got {got}")
            }
            SpError::ZeroVectors => f.write_str("vector count must be at least 1"),
            SpError::TooManyInputs { count, limit } => write!(
                f,
                "exact enumeration supports at most {limit} pseudo-inputs, circuit has {count}"
            ),
        }
    }
}

impl core::error::Error for SpError {}

/// Probabilities assigned to pseudo-inputs (primary inputs and DFF outputs).
///
/// Unlisted primary inputs take `default_input`, unlisted DFF outputs take
/// `default_state`. Either default may be disabled, in which case every
/// such input must be listed explicitly.
#[derive(Clone, Debug, PartialEq)]
pub struct InputSp {
    default_input: Option<f64>,
    default_state: Option<f64>,
    overrides: BTreeMap<NetId, f64>,
}

impl Default for InputSp {
    fn default() -> Self {
        InputSp::uniform(0.5)
    }
}

impl InputSp {
    pub fn uniform(p: f64) -> Self {
        InputSp { default_input: Some(p), default_state: Some(p), overrides: BTreeMap::new() }
    }

    /// No defaults: every pseudo-input must be set.
    pub fn strict() -> Self {
        InputSp { default_input: None, default_state: None, overrides: BTreeMap::new() }
    }

    pub fn with(mut self, net: NetId, p: f64) -> Self {
        self.set(net, p);
        self
    }

    pub fn set(&mut self, net: NetId, p: f64) {
        self.overrides.insert(net, p);
    }

    pub fn set_default_input(&mut self, p: Option<f64>) {
        self.default_input = p;
    }

    pub fn set_default_state(&mut self, p: Option<f64>) {
        self.default_state = p;
    }

    /// Per-pseudo-input probabilities in [`Netlist::pseudo_inputs`] order.
    pub fn resolve(&self, netlist: &Netlist) -> Result<Vec<f64>, SpError> {
        for (&net, &value) in &self.overrides {
            if net.index() >= netlist.net_count() || !netlist.kind(net).is_source() {
                return Err(SpError::NotAnInput(net));
            }
            check_range(net, value)?;
        }
        netlist
            .pseudo_inputs()
            .iter()
            .map(|&net| {
                let default = match netlist.kind(net) {
                    GateKind::Dff => self.default_state,
                    _ => self.default_input,
                };
                let p = self.overrides.get(&net).copied().or(default).ok_or(SpError::Missing(net))?;
                check_range(net, p)
            })
            .collect()
    }
}

fn check_range(net: NetId, value: f64) -> Result<f64, SpError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(SpError::OutOfRange { net, value })
    }
}

/// Per-net signal probability, indexed by [`NetId`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpMap {
    values: Vec<f64>,
    method: SpMethod,
}

impl SpMap {
    pub fn from_values(netlist: &Netlist, values: Vec<f64>, method: SpMethod) -> Result<SpMap, SpError> {
        if values.len() != netlist.net_count() {
            return Err(SpError::LengthMismatch { expected: netlist.net_count(), got: values.len() });
        }
        for (i, &v) in values.iter().enumerate() {
            check_range(NetId::new(i), v)?;
        }
        Ok(SpMap { values, method })
    }

    pub fn get(&self, net: NetId) -> f64 {
        self.values[net.index()]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn method(&self) -> SpMethod {
        self.method
    }
}

/// One topological pass assuming gate inputs are independent.
pub fn sp_independent(netlist: &Netlist, input_sp: &InputSp) -> Result<SpMap, SpError> {
    let inputs = input_sp.resolve(netlist)?;
    let mut values = alloc::vec![0.0; netlist.net_count()];
    for (net, p) in netlist.pseudo_inputs().iter().zip(&inputs) {
        values[net.index()] = *p;
    }
    for &net in &netlist.topo_order()[inputs.len()..] {
        let gate = netlist.gate(net);
        let mut ps = gate.inputs.iter().map(|i| values[i.index()]);
        let base = match gate.kind {
            GateKind::And | GateKind::Nand => ps.product::<f64>(),
            GateKind::Or | GateKind::Nor => 1.0 - ps.map(|p| 1.0 - p).product::<f64>(),
            GateKind::Xor | GateKind::Xnor => {
                let first = ps.next().unwrap_or(0.0);
                ps.fold(first, |acc, p| acc * (1.0 - p) + p * (1.0 - acc))
            }
            GateKind::Not | GateKind::Buff | GateKind::Input | GateKind::Dff => ps.next().unwrap_or(0.0),
        };
        let p = if gate.kind.is_inverting() { 1.0 - base } else { base };
        values[net.index()] = p.clamp(0.0, 1.0);
    }
    Ok(SpMap { values, method: SpMethod::Independent })
}

/// Fraction of `vectors` random input vectors for which each net is 1.
/// Reproducible for a fixed seed.
pub fn sp_montecarlo(netlist: &Netlist, input_sp: &InputSp, vectors: u64, seed: u64) -> Result<SpMap, SpError> {
    if vectors == 0 {
        return Err(SpError::ZeroVectors);
    }
    let inputs = input_sp.resolve(netlist)?;
    let patterns = Patterns::Random(RandomPatterns::new(&inputs, vectors, seed));
    let (counts, _) = ones_per_net(netlist, &patterns);
    let values = counts.iter().map(|&c| c as f64 / vectors as f64).collect();
    Ok(SpMap { values, method: SpMethod::MonteCarlo })
}

/// Weighted enumeration of every input vector.
pub fn sp_exact(netlist: &Netlist, input_sp: &InputSp) -> Result<SpMap, SpError> {
    let count = netlist.pseudo_inputs().len();
    if count > MAX_EXHAUSTIVE_INPUTS {
        return Err(SpError::TooManyInputs { count, limit: MAX_EXHAUSTIVE_INPUTS });
    }
    let inputs = input_sp.resolve(netlist)?;
    let patterns = Patterns::Exhaustive(ExhaustivePatterns::new(&inputs));
    let (_, mass) = ones_per_net(netlist, &patterns);
    let values = mass.into_iter().map(|m| m.clamp(0.0, 1.0)).collect();
    Ok(SpMap { values, method: SpMethod::Exact })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::NetlistBuilder;

    fn circuit(kind: GateKind, n_inputs: usize) -> Netlist {
        let mut b = NetlistBuilder::new("t");
        let names: Vec<alloc::string::String> = (0..n_inputs).map(|i| alloc::format!("I{i}")).collect();
        for n in &names {
            b.input(n.clone());
        }
        b.output("Y").gate("Y", kind, names);
        b.build().unwrap()
    }

    fn y(n: &Netlist) -> NetId {
        n.find("Y").unwrap()
    }

    #[test]
    fn independent_gate_rules() {
        let n = circuit(GateKind::And, 2);
        assert_eq!(sp_independent(&n, &InputSp::uniform(0.5)).unwrap().get(y(&n)), 0.25);

        let n = circuit(GateKind::Not, 1);
        let a = n.find("I0").unwrap();
        let sp = sp_independent(&n, &InputSp::uniform(0.5).with(a, 0.3)).unwrap();
        assert!((sp.get(y(&n)) - 0.7).abs() < 1e-15);

        let n = circuit(GateKind::Xor, 2);
        assert_eq!(sp_independent(&n, &InputSp::uniform(0.5)).unwrap().get(y(&n)), 0.5);

        let n = circuit(GateKind::Nor, 3);
        assert_eq!(sp_independent(&n, &InputSp::uniform(0.5)).unwrap().get(y(&n)), 0.125);
    }

    #[test]
    fn exact_handles_reconvergence() {
        let mut b = NetlistBuilder::new("contra");
        b.input("A").output("Y").gate("N", GateKind::Not, ["A"]).gate("Y", GateKind::And, ["A", "N"]);
        let n = b.build().unwrap();
        let y = y(&n);
        assert_eq!(sp_exact(&n, &InputSp::default()).unwrap().get(y), 0.0);
        assert_eq!(sp_independent(&n, &InputSp::default()).unwrap().get(y), 0.25);

        let mut b = NetlistBuilder::new("idem");
        b.input("A").output("Y").gate("Y", GateKind::Or, ["A", "A"]);
        let n = b.build().unwrap();
        let a = n.find("A").unwrap();
        let sp = sp_exact(&n, &InputSp::default().with(a, 0.3)).unwrap();
        assert!((sp.get(n.find("Y").unwrap()) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn montecarlo_degenerate_and_reproducible() {
        let n = circuit(GateKind::Buff, 1);
        for seed in [0, 1, 99] {
            let sp = sp_montecarlo(&n, &InputSp::uniform(1.0), 1000, seed).unwrap();
            assert_eq!(sp.get(y(&n)), 1.0);
        }
        let n = circuit(GateKind::And, 2);
        let a = sp_montecarlo(&n, &InputSp::default(), 5000, 3).unwrap();
        let b = sp_montecarlo(&n, &InputSp::default(), 5000, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(sp_montecarlo(&n, &InputSp::default(), 0, 3), Err(SpError::ZeroVectors));
    }

    #[test]
    fn montecarlo_and_within_bound() {
        // 3 sigma for p = 0.25, N = 1e5 is 0.0041; the stated tolerance is 0.01
        let n = circuit(GateKind::And, 2);
        let sp = sp_montecarlo(&n, &InputSp::default(), 100_000, 2024).unwrap();
        assert!((sp.get(y(&n)) - 0.25).abs() <= 0.01);
    }

    #[test]
    fn input_coverage() {
        let n = circuit(GateKind::And, 2);
        let a = n.find("I0").unwrap();
        let b = n.find("I1").unwrap();
        assert_eq!(InputSp::strict().with(a, 0.2).resolve(&n), Err(SpError::Missing(b)));
        assert_eq!(InputSp::strict().with(a, 0.2).with(b, 0.9).resolve(&n).unwrap(), [0.2, 0.9]);
        assert!(matches!(InputSp::default().with(a, 1.5).resolve(&n), Err(SpError::OutOfRange { .. })));
        assert_eq!(InputSp::default().with(y(&n), 0.5).resolve(&n), Err(SpError::NotAnInput(y(&n))));
    }

    #[test]
    fn exact_input_guard() {
        let n = circuit(GateKind::Or, MAX_EXHAUSTIVE_INPUTS + 1);
        assert_eq!(
            sp_exact(&n, &InputSp::default()),
            Err(SpError::TooManyInputs { count: 25, limit: 24 })
        );
    }

    #[test]
    fn state_default_is_separate() {
        let mut b = NetlistBuilder::new("ff");
        b.input("A").output("Y").gate("Q", GateKind::Dff, ["Y"]).gate("Y", GateKind::And, ["A", "Q"]);
        let n = b.build().unwrap();
        let mut isp = InputSp::uniform(0.5);
        isp.set_default_state(Some(1.0));
        let sp = sp_independent(&n, &isp).unwrap();
        assert_eq!(sp.get(n.find("Y").unwrap()), 0.5);
    }
}
