//! Logic simulation with single bit-flip injection.
//!
//! [`simulate_vector`] and [`simulate_pair`] are scalar, full-circuit
//! evaluations used as oracles. [`SimPlan`] is the bit-parallel engine
//! behind [`mc_epp`] and [`exhaustive_epp`]: per block of 64 vectors it runs
//! one golden simulation and then re-evaluates only the fan-out cone of each
//! site with the site complemented.
//!
//! Work is divided into fixed-size chunks of blocks. Each chunk produces an
//! independent [`SimTally`]; tallies are merged in chunk order, so results
//! do not depend on how chunks are scheduled across threads.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::netlist::{ConeWalker, GateKind, NetId, Netlist, NetlistError};
use crate::patterns::{eval_word, ExhaustivePatterns, Patterns, RandomPatterns, WordOp, WordSim};
use crate::sigprob::{InputSp, SpError};

/// Upper bound on pseudo-inputs for exhaustive enumeration.
pub const MAX_EXHAUSTIVE_INPUTS: usize = 24;

/// Blocks of 64 vectors per chunk.
pub const CHUNK_BLOCKS: u64 = 16;

#[derive(Clone, Debug, PartialEq)]
pub enum SimError {
    Netlist(NetlistError),
    Sp(SpError),
    IncompleteVector { expected: usize, got: usize },
    MissingAssignment(NetId),
    NotAnInput(NetId),
    ZeroVectors,
    TooManyInputs { count: usize, limit: usize },
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Netlist(e) => e.fmt(f),
            SimError::Sp(e) => e.fmt(f),
            SimError::IncompleteVector { expected, got } => {
                write!(f, "vector has {got} values, circuit has {expected} pseudo-inputs")
            }
            SimError::MissingAssignment(net) => write!(f, "vector assigns no value to {net}"),
            SimError::NotAnInput(net) => write!(f, "{net} is not a pseudo-input"),
            SimError::ZeroVectors => f.write_str("vector count must be at least 1"),
            SimError::TooManyInputs { count, limit } => write!(
                f,
                "exhaustive simulation supports at most {limit} pseudo-inputs, circuit has {count}"
            ),
        }
    }
}

impl core::error::Error for SimError {}

impl From<NetlistError> for SimError {
    fn from(e: NetlistError) -> Self {
        SimError::Netlist(e)
    }
}

impl From<SpError> for SimError {
    fn from(e: SpError) -> Self {
        SimError::Sp(e)
    }
}

/// Assignment to every pseudo-input, in [`Netlist::pseudo_inputs`] order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Vector {
    bits: Vec<bool>,
}

impl Vector {
    pub fn new(netlist: &Netlist, bits: Vec<bool>) -> Result<Vector, SimError> {
        let expected = netlist.pseudo_inputs().len();
        if bits.len() != expected {
            return Err(SimError::IncompleteVector { expected, got: bits.len() });
        }
        Ok(Vector { bits })
    }

    pub fn from_assignments(
        netlist: &Netlist,
        assignments: impl IntoIterator<Item = (NetId, bool)>,
    ) -> Result<Vector, SimError> {
        let inputs = netlist.pseudo_inputs();
        let mut bits: Vec<Option<bool>> = vec![None; inputs.len()];
        for (net, value) in assignments {
            let pos = inputs.binary_search(&net).map_err(|_| SimError::NotAnInput(net))?;
            bits[pos] = Some(value);
        }
        let bits = bits
            .iter()
            .zip(inputs)
            .map(|(b, net)| b.ok_or(SimError::MissingAssignment(*net)))
            .collect::<Result<_, _>>()?;
        Ok(Vector { bits })
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
}

fn eval_bool(kind: GateKind, inputs: impl Iterator<Item = bool>) -> bool {
    eval_word(kind, inputs.map(|b| if b { !0 } else { 0 })) & 1 == 1
}

fn simulate_with(netlist: &Netlist, v: &Vector, forced: Option<(NetId, bool)>) -> Vec<bool> {
    let mut values = vec![false; netlist.net_count()];
    for (net, bit) in netlist.pseudo_inputs().iter().zip(v.bits()) {
        values[net.index()] = *bit;
    }
    for &net in netlist.topo_order() {
        let gate = netlist.gate(net);
        if !gate.kind.is_source() {
            values[net.index()] = eval_bool(gate.kind, gate.inputs.iter().map(|i| values[i.index()]));
        }
        if let Some((site, value)) = forced {
            if site == net {
                values[net.index()] = value;
            }
        }
    }
    values
}

/// Golden values of every net for one vector, indexed by [`NetId`].
pub fn simulate_vector(netlist: &Netlist, v: &Vector) -> Result<Vec<bool>, SimError> {
    Vector::new(netlist, v.bits.clone())?;
    Ok(simulate_with(netlist, v, None))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairOutcome {
    pub golden: Vec<bool>,
    pub faulty: Vec<bool>,
    /// Capture points whose faulty value differs, sorted by id.
    pub flipped_outputs: Vec<NetId>,
}

/// Full re-simulation with `site` held at `value`.
pub fn simulate_forced(netlist: &Netlist, v: &Vector, site: NetId, value: bool) -> Result<PairOutcome, SimError> {
    netlist.check(site)?;
    let golden = simulate_vector(netlist, v)?;
    let faulty = simulate_with(netlist, v, Some((site, value)));
    let flipped_outputs = netlist
        .capture_points()
        .iter()
        .copied()
        .filter(|o| golden[o.index()] != faulty[o.index()])
        .collect();
    Ok(PairOutcome { golden, faulty, flipped_outputs })
}

/// Golden run and a run with `site` complemented.
pub fn simulate_pair(netlist: &Netlist, v: &Vector, site: NetId) -> Result<PairOutcome, SimError> {
    netlist.check(site)?;
    let golden_value = simulate_vector(netlist, v)?[site.index()];
    simulate_forced(netlist, v, site, !golden_value)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SimMethod {
    MonteCarlo,
    Exhaustive,
}

impl SimMethod {
    pub fn name(self) -> &'static str {
        match self {
            SimMethod::MonteCarlo => "montecarlo",
            SimMethod::Exhaustive => "exhaustive",
        }
    }
}

impl fmt::Display for SimMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimEppResult {
    pub site: NetId,
    /// Flip probability of every reachable capture point, sorted by id.
    pub per_output: Vec<(NetId, f64)>,
    /// Probability that at least one capture point flips.
    pub any_output: f64,
    pub vectors_used: u64,
    pub method: SimMethod,
}

impl SimEppResult {
    pub fn epp_to(&self, output: NetId) -> f64 {
        self.per_output
            .binary_search_by_key(&output, |(o, _)| *o)
            .map_or(0.0, |i| self.per_output[i].1)
    }
}

const LOCAL: u32 = 1 << 31;

/// Faulty re-evaluation of one site's cone. Local slot 0 is the site; op
/// `k` writes local slot `k + 1`. Arguments with the `LOCAL` bit read the
/// faulty local slots, the others read golden values.
#[derive(Clone, Debug)]
struct SiteProgram {
    site: NetId,
    ops: Vec<WordOp>,
    args: Vec<u32>,
    outputs: Vec<(NetId, u32)>,
    tally_offset: usize,
}

impl SiteProgram {
    fn compile(netlist: &Netlist, site: NetId, walker: &mut ConeWalker, slot: &mut [u32]) -> Self {
        walker.walk(netlist, site);
        for (local, net) in walker.order.iter().enumerate() {
            slot[net.index()] = local as u32;
        }
        let mut ops = Vec::with_capacity(walker.order.len().saturating_sub(1));
        let mut args = Vec::new();
        for (k, &net) in walker.order.iter().enumerate().skip(1) {
            let start = args.len() as u32;
            for &i in &netlist.gate(net).inputs {
                args.push(if walker.contains(i) { slot[i.index()] | LOCAL } else { i.index() as u32 });
            }
            ops.push(WordOp { kind: netlist.kind(net), out: k as u32, start, end: args.len() as u32 });
        }
        let mut outputs: Vec<(NetId, u32)> = walker
            .order
            .iter()
            .filter(|n| netlist.is_capture(**n))
            .map(|&n| (n, slot[n.index()]))
            .collect();
        outputs.sort_unstable();
        SiteProgram { site, ops, args, outputs, tally_offset: 0 }
    }

    /// Fills `local` with faulty words; returns nothing, caller reads outputs.
    #[inline]
    fn run(&self, golden: &[u64], local: &mut Vec<u64>) {
        local.clear();
        local.push(!golden[self.site.index()]);
        for op in &self.ops {
            let args = &self.args[op.start as usize..op.end as usize];
            let w = eval_word(
                op.kind,
                args.iter().map(|&a| if a & LOCAL != 0 { local[(a & !LOCAL) as usize] } else { golden[a as usize] }),
            );
            local.push(w);
        }
    }
}

/// Accumulated flips for every (site, output) slot plus one "any" slot per
/// site. Monte Carlo counts hits, exhaustive enumeration sums probability.
#[derive(Clone, Debug, PartialEq)]
pub struct SimTally {
    hits: Vec<u64>,
    mass: Vec<f64>,
}

impl SimTally {
    fn new(slots: usize) -> Self {
        SimTally { hits: vec![0; slots], mass: vec![0.0; slots] }
    }

    pub fn merge(&mut self, other: &SimTally) {
        for (a, b) in self.hits.iter_mut().zip(&other.hits) {
            *a += b;
        }
        for (a, b) in self.mass.iter_mut().zip(&other.mass) {
            *a += b;
        }
    }
}

/// Bit-parallel fault simulation of a set of sites over one pattern source.
#[derive(Clone, Debug)]
pub struct SimPlan<'a> {
    netlist: &'a Netlist,
    sim: WordSim,
    patterns: Patterns,
    programs: Vec<SiteProgram>,
    slots: usize,
}

impl<'a> SimPlan<'a> {
    pub fn monte_carlo(
        netlist: &'a Netlist,
        sites: &[NetId],
        input_sp: &InputSp,
        vectors: u64,
        seed: u64,
    ) -> Result<Self, SimError> {
        if vectors == 0 {
            return Err(SimError::ZeroVectors);
        }
        let probs = input_sp.resolve(netlist)?;
        Self::new(netlist, sites, Patterns::Random(RandomPatterns::new(&probs, vectors, seed)))
    }

    pub fn exhaustive(netlist: &'a Netlist, sites: &[NetId], input_sp: &InputSp) -> Result<Self, SimError> {
        let count = netlist.pseudo_inputs().len();
        if count > MAX_EXHAUSTIVE_INPUTS {
            return Err(SimError::TooManyInputs { count, limit: MAX_EXHAUSTIVE_INPUTS });
        }
        let probs = input_sp.resolve(netlist)?;
        Self::new(netlist, sites, Patterns::Exhaustive(ExhaustivePatterns::new(&probs)))
    }

    fn new(netlist: &'a Netlist, sites: &[NetId], patterns: Patterns) -> Result<Self, SimError> {
        let mut walker = ConeWalker::new(netlist.net_count());
        let mut slot = vec![0u32; netlist.net_count()];
        let mut programs = Vec::with_capacity(sites.len());
        let mut slots = 0;
        for &site in sites {
            netlist.check(site)?;
            let mut p = SiteProgram::compile(netlist, site, &mut walker, &mut slot);
            p.tally_offset = slots;
            slots += p.outputs.len() + 1;
            programs.push(p);
        }
        Ok(SimPlan { netlist, sim: WordSim::new(netlist), patterns, programs, slots })
    }

    pub fn method(&self) -> SimMethod {
        match self.patterns {
            Patterns::Random(_) => SimMethod::MonteCarlo,
            Patterns::Exhaustive(_) => SimMethod::Exhaustive,
        }
    }

    pub fn vectors(&self) -> u64 {
        self.patterns.vectors()
    }

    pub fn chunk_count(&self) -> usize {
        self.patterns.blocks().div_ceil(CHUNK_BLOCKS) as usize
    }

    pub fn empty_tally(&self) -> SimTally {
        SimTally::new(self.slots)
    }

    pub fn run_chunk(&self, chunk: usize) -> SimTally {
        let mut tally = self.empty_tally();
        let mut pattern = vec![0u64; self.sim.inputs()];
        let mut golden = vec![0u64; self.sim.nets()];
        let mut local = Vec::new();
        let first = chunk as u64 * CHUNK_BLOCKS;
        let last = (first + CHUNK_BLOCKS).min(self.patterns.blocks());
        for block in first..last {
            let mask = self.patterns.fill(block, &mut pattern);
            self.sim.run(&pattern, &mut golden);
            let block_weight = match &self.patterns {
                Patterns::Exhaustive(e) => e.block_weight(block),
                Patterns::Random(_) => 0.0,
            };
            for program in &self.programs {
                program.run(&golden, &mut local);
                let mut any = 0u64;
                for (k, &(out, idx)) in program.outputs.iter().enumerate() {
                    let diff = (local[idx as usize] ^ golden[out.index()]) & mask;
                    any |= diff;
                    self.record(&mut tally, program.tally_offset + k, diff, block_weight);
                }
                self.record(&mut tally, program.tally_offset + program.outputs.len(), any, block_weight);
            }
        }
        tally
    }

    #[inline]
    fn record(&self, tally: &mut SimTally, slot: usize, diff: u64, block_weight: f64) {
        if diff == 0 {
            return;
        }
        match &self.patterns {
            Patterns::Random(_) => tally.hits[slot] += u64::from(diff.count_ones()),
            Patterns::Exhaustive(e) => tally.mass[slot] += block_weight * e.lane_mass(diff),
        }
    }

    /// Convert a fully merged tally into per-site results, in site order.
    pub fn finish(&self, tally: &SimTally) -> Vec<SimEppResult> {
        let vectors = self.vectors();
        let value = |slot: usize| match self.patterns {
            Patterns::Random(_) => tally.hits[slot] as f64 / vectors as f64,
            Patterns::Exhaustive(_) => tally.mass[slot].clamp(0.0, 1.0),
        };
        self.programs
            .iter()
            .map(|p| {
                let per_output: Vec<(NetId, f64)> =
                    p.outputs.iter().enumerate().map(|(k, (o, _))| (*o, value(p.tally_offset + k))).collect();
                let max = per_output.iter().map(|(_, e)| *e).fold(0.0, f64::max);
                SimEppResult {
                    site: p.site,
                    any_output: value(p.tally_offset + p.outputs.len()).max(max),
                    per_output,
                    vectors_used: vectors,
                    method: self.method(),
                }
            })
            .collect()
    }

    /// Sequential run: all chunks in order.
    pub fn run(&self) -> Vec<SimEppResult> {
        let mut total = self.empty_tally();
        for chunk in 0..self.chunk_count() {
            total.merge(&self.run_chunk(chunk));
        }
        self.finish(&total)
    }

    pub fn netlist(&self) -> &Netlist {
        self.netlist
    }
}

/// Monte Carlo EPP of one site over `vectors` random vectors.
pub fn mc_epp(
    netlist: &Netlist,
    site: NetId,
    input_sp: &InputSp,
    vectors: u64,
    seed: u64,
) -> Result<SimEppResult, SimError> {
    let plan = SimPlan::monte_carlo(netlist, &[site], input_sp, vectors, seed)?;
    Ok(plan.run().remove(0))
}

/// Exact EPP of one site by weighted enumeration of all input vectors.
pub fn exhaustive_epp(netlist: &Netlist, site: NetId, input_sp: &InputSp) -> Result<SimEppResult, SimError> {
    let plan = SimPlan::exhaustive(netlist, &[site], input_sp)?;
    Ok(plan.run().remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::NetlistBuilder;

    fn and2() -> Netlist {
        let mut b = NetlistBuilder::new("and2");
        b.input("A").input("B").output("Y").gate("Y", GateKind::And, ["A", "B"]);
        b.build().unwrap()
    }

    fn vec_of(n: &Netlist, pairs: &[(&str, bool)]) -> Vector {
        Vector::from_assignments(n, pairs.iter().map(|(s, b)| (n.find(s).unwrap(), *b))).unwrap()
    }

    #[test]
    fn truth_tables() {
        let n = and2();
        let y = n.find("Y").unwrap();
        assert!(simulate_vector(&n, &vec_of(&n, &[("A", true), ("B", true)])).unwrap()[y.index()]);

        let mut b = NetlistBuilder::new("xor");
        b.input("A").input("B").output("Y").gate("Y", GateKind::Xor, ["A", "B"]);
        let x = b.build().unwrap();
        assert!(!simulate_vector(&x, &vec_of(&x, &[("A", true), ("B", true)])).unwrap()[y.index()]);

        let mut b = NetlistBuilder::new("not");
        b.input("A").output("Y").gate("Y", GateKind::Not, ["A"]);
        let inv = b.build().unwrap();
        let yy = inv.find("Y").unwrap();
        assert!(simulate_vector(&inv, &vec_of(&inv, &[("A", false)])).unwrap()[yy.index()]);
    }

    #[test]
    fn vector_validation() {
        let n = and2();
        let a = n.find("A").unwrap();
        let b = n.find("B").unwrap();
        let y = n.find("Y").unwrap();
        assert_eq!(Vector::new(&n, vec![true]), Err(SimError::IncompleteVector { expected: 2, got: 1 }));
        assert_eq!(Vector::from_assignments(&n, [(a, true)]), Err(SimError::MissingAssignment(b)));
        assert_eq!(Vector::from_assignments(&n, [(y, true)]), Err(SimError::NotAnInput(y)));
    }

    #[test]
    fn pair_examples() {
        let n = and2();
        let (a, y) = (n.find("A").unwrap(), n.find("Y").unwrap());
        let out = simulate_pair(&n, &vec_of(&n, &[("A", true), ("B", true)]), a).unwrap();
        assert!(out.golden[y.index()]);
        assert!(!out.faulty[y.index()]);
        assert_eq!(out.flipped_outputs, [y]);
        let out = simulate_pair(&n, &vec_of(&n, &[("A", true), ("B", false)]), a).unwrap();
        assert!(out.flipped_outputs.is_empty());
    }

    fn reconvergent() -> Netlist {
        let mut b = NetlistBuilder::new("rc");
        b.input("S")
            .output("Y")
            .gate("X", GateKind::Not, ["S"])
            .gate("Z", GateKind::Buff, ["S"])
            .gate("Y", GateKind::And, ["X", "Z"]);
        b.build().unwrap()
    }

    #[test]
    fn reconvergent_never_flips() {
        let n = reconvergent();
        let s = n.find("S").unwrap();
        let y = n.find("Y").unwrap();
        for value in [false, true] {
            let out = simulate_pair(&n, &vec_of(&n, &[("S", value)]), s).unwrap();
            assert!(!out.golden[y.index()] && !out.faulty[y.index()]);
            assert!(out.flipped_outputs.is_empty());
        }
        assert_eq!(exhaustive_epp(&n, s, &InputSp::default()).unwrap().any_output, 0.0);
    }

    #[test]
    fn exhaustive_examples() {
        let n = and2();
        let a = n.find("A").unwrap();
        let r = exhaustive_epp(&n, a, &InputSp::default()).unwrap();
        assert_eq!(r.any_output, 0.5);
        assert_eq!(r.vectors_used, 4);
        assert_eq!(r.method, SimMethod::Exhaustive);

        // majority: input A is critical iff B != C, i.e. 4 of 8 vectors
        let mut b = NetlistBuilder::new("maj");
        b.input("A")
            .input("B")
            .input("C")
            .output("M")
            .gate("AB", GateKind::And, ["A", "B"])
            .gate("AC", GateKind::And, ["A", "C"])
            .gate("BC", GateKind::And, ["B", "C"])
            .gate("M", GateKind::Or, ["AB", "AC", "BC"]);
        let maj = b.build().unwrap();
        let r = exhaustive_epp(&maj, maj.find("A").unwrap(), &InputSp::default()).unwrap();
        assert_eq!(r.any_output, 0.5);
    }

    #[test]
    fn xor_always_propagates() {
        let mut b = NetlistBuilder::new("xor");
        b.input("A").input("B").output("Y").gate("Y", GateKind::Xor, ["A", "B"]);
        let n = b.build().unwrap();
        let a = n.find("A").unwrap();
        for seed in [0, 5, 77] {
            for vectors in [1, 63, 64, 65, 1000] {
                let r = mc_epp(&n, a, &InputSp::default(), vectors, seed).unwrap();
                assert_eq!(r.any_output, 1.0);
                assert_eq!(r.vectors_used, vectors);
            }
        }
    }

    #[test]
    fn mc_and_within_bound_and_reproducible() {
        let n = and2();
        let a = n.find("A").unwrap();
        let r = mc_epp(&n, a, &InputSp::default(), 100_000, 9).unwrap();
        assert!((r.any_output - 0.5).abs() <= 0.01);
        assert_eq!(r, mc_epp(&n, a, &InputSp::default(), 100_000, 9).unwrap());
        assert_eq!(mc_epp(&n, a, &InputSp::default(), 0, 9), Err(SimError::ZeroVectors));
    }

    #[test]
    fn exhaustive_guard() {
        let mut b = NetlistBuilder::new("wide");
        let names: Vec<alloc::string::String> = (0..25).map(|i| alloc::format!("I{i}")).collect();
        for n in &names {
            b.input(n.clone());
        }
        b.output("Y").gate("Y", GateKind::Or, names);
        let n = b.build().unwrap();
        assert_eq!(
            exhaustive_epp(&n, NetId::new(0), &InputSp::default()),
            Err(SimError::TooManyInputs { count: 25, limit: 24 })
        );
    }

    #[test]
    fn dff_input_is_a_capture_point() {
        let mut b = NetlistBuilder::new("ff");
        b.input("A")
            .input("B")
            .output("Q")
            .gate("D", GateKind::And, ["A", "B"])
            .gate("Q", GateKind::Dff, ["D"]);
        let n = b.build().unwrap();
        let (a, d, q) = (n.find("A").unwrap(), n.find("D").unwrap(), n.find("Q").unwrap());
        let r = exhaustive_epp(&n, a, &InputSp::default()).unwrap();
        assert_eq!(r.per_output, [(d, 0.5)]);
        let r = exhaustive_epp(&n, q, &InputSp::default()).unwrap();
        assert_eq!(r.per_output, [(q, 1.0)]);
    }
}
