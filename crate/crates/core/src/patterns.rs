//! Bit-parallel evaluation: 64 input vectors per machine word.
//!
//! Two pattern sources feed the simulators. [`RandomPatterns`] derives the
//! words of block `b` from a ChaCha8 stream selected by `(seed, b)`, so any
//! block can be regenerated independently of how blocks are partitioned.
//! [`ExhaustivePatterns`] enumerates all `2^n` assignments, the low six
//! pseudo-inputs varying across lanes and the rest across blocks.

use alloc::vec;
use alloc::vec::Vec;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::netlist::{GateKind, Netlist};

pub(crate) const LANES: u64 = 64;

#[inline]
pub(crate) fn eval_word(kind: GateKind, mut inputs: impl Iterator<Item = u64>) -> u64 {
    let first = inputs.next().unwrap_or(0);
    let base = match kind {
        GateKind::And | GateKind::Nand => inputs.fold(first, |acc, w| acc & w),
        GateKind::Or | GateKind::Nor => inputs.fold(first, |acc, w| acc | w),
        GateKind::Xor | GateKind::Xnor => inputs.fold(first, |acc, w| acc ^ w),
        GateKind::Not | GateKind::Buff | GateKind::Input | GateKind::Dff => first,
    };
    if kind.is_inverting() {
        !base
    } else {
        base
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct WordOp {
    pub kind: GateKind,
    pub out: u32,
    pub start: u32,
    pub end: u32,
}

/// Flattened combinational netlist for word-level golden simulation.
#[derive(Clone, Debug)]
pub(crate) struct WordSim {
    sources: Vec<u32>,
    ops: Vec<WordOp>,
    args: Vec<u32>,
    nets: usize,
}

impl WordSim {
    pub(crate) fn new(netlist: &Netlist) -> Self {
        let sources: Vec<u32> = netlist.pseudo_inputs().iter().map(|n| n.index() as u32).collect();
        let mut ops = Vec::with_capacity(netlist.net_count());
        let mut args = Vec::new();
        for &net in &netlist.topo_order()[sources.len()..] {
            let gate = netlist.gate(net);
            let start = args.len() as u32;
            args.extend(gate.inputs.iter().map(|i| i.index() as u32));
            ops.push(WordOp { kind: gate.kind, out: net.index() as u32, start, end: args.len() as u32 });
        }
        WordSim { sources, ops, args, nets: netlist.net_count() }
    }

    pub(crate) fn nets(&self) -> usize {
        self.nets
    }

    pub(crate) fn inputs(&self) -> usize {
        self.sources.len()
    }

    /// `pattern` is indexed by pseudo-input position, `values` by net.
    pub(crate) fn run(&self, pattern: &[u64], values: &mut [u64]) {
        for (src, &word) in self.sources.iter().zip(pattern) {
            values[*src as usize] = word;
        }
        for op in &self.ops {
            let args = &self.args[op.start as usize..op.end as usize];
            values[op.out as usize] = eval_word(op.kind, args.iter().map(|&a| values[a as usize]));
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Threshold {
    Never,
    Always,
    /// Lane is 1 when a uniform 64-bit draw is below this value.
    Below(u64),
}

impl Threshold {
    fn new(p: f64) -> Self {
        if p <= 0.0 {
            Threshold::Never
        } else if p >= 1.0 {
            Threshold::Always
        } else {
            match (p * 18_446_744_073_709_551_616.0) as u64 {
                0 => Threshold::Never,
                t => Threshold::Below(t),
            }
        }
    }
}

/// 64 independent Bernoulli lanes via a bit-sliced comparison `U < t`,
/// scanning the bits of `t` from the lowest set bit upward. One draw per
/// remaining bit; `p = 0.5` costs a single draw.
fn bernoulli_word(rng: &mut ChaCha8Rng, t: u64) -> u64 {
    let mut less = 0u64;
    for bit in t.trailing_zeros()..64 {
        let u = rng.next_u64();
        if (t >> bit) & 1 == 1 {
            less |= !u;
        } else {
            less &= !u;
        }
    }
    less
}

#[derive(Clone, Debug)]
pub(crate) struct RandomPatterns {
    seed: u64,
    vectors: u64,
    thresholds: Vec<Threshold>,
}

impl RandomPatterns {
    pub(crate) fn new(probs: &[f64], vectors: u64, seed: u64) -> Self {
        RandomPatterns { seed, vectors, thresholds: probs.iter().map(|&p| Threshold::new(p)).collect() }
    }

    pub(crate) fn vectors(&self) -> u64 {
        self.vectors
    }

    pub(crate) fn blocks(&self) -> u64 {
        self.vectors.div_ceil(LANES)
    }

    /// Writes block `block` and returns the mask of lanes holding real vectors.
    pub(crate) fn fill(&self, block: u64, out: &mut [u64]) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(block);
        for (slot, th) in out.iter_mut().zip(&self.thresholds) {
            *slot = match *th {
                Threshold::Never => 0,
                Threshold::Always => !0,
                Threshold::Below(t) => bernoulli_word(&mut rng, t),
            };
        }
        let used = self.vectors - block * LANES;
        if used >= LANES {
            !0
        } else {
            (1u64 << used) - 1
        }
    }
}

const LANE_PATTERNS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

#[derive(Clone, Debug)]
pub(crate) struct ExhaustivePatterns {
    probs: Vec<f64>,
    valid: u64,
    // byte_mass[k][b]: total lane weight of the lanes selected by byte `b`
    // at byte position `k`
    byte_mass: Vec<[f64; 256]>,
}

impl ExhaustivePatterns {
    pub(crate) fn new(probs: &[f64]) -> Self {
        let low = probs.len().min(6);
        let lanes = 1usize << low;
        let mut lane_weight = [0.0f64; 64];
        for (lane, w) in lane_weight.iter_mut().enumerate().take(lanes) {
            *w = (0..low)
                .map(|k| if (lane >> k) & 1 == 1 { probs[k] } else { 1.0 - probs[k] })
                .product();
        }
        let byte_mass = (0..8)
            .map(|k| {
                let mut table = [0.0f64; 256];
                for (b, slot) in table.iter_mut().enumerate() {
                    *slot = (0..8).filter(|bit| (b >> bit) & 1 == 1).map(|bit| lane_weight[k * 8 + bit]).sum();
                }
                table
            })
            .collect();
        let valid = if lanes == 64 { !0 } else { (1u64 << lanes) - 1 };
        ExhaustivePatterns { probs: probs.to_vec(), valid, byte_mass }
    }

    pub(crate) fn vectors(&self) -> u64 {
        1u64 << self.probs.len()
    }

    pub(crate) fn blocks(&self) -> u64 {
        1u64 << self.probs.len().saturating_sub(6)
    }

    pub(crate) fn fill(&self, block: u64, out: &mut [u64]) -> u64 {
        for (k, slot) in out.iter_mut().enumerate().take(self.probs.len()) {
            *slot = if k < 6 {
                LANE_PATTERNS[k]
            } else if (block >> (k - 6)) & 1 == 1 {
                !0
            } else {
                0
            };
        }
        self.valid
    }

    /// Probability of the high (block-selected) part of the assignment.
    pub(crate) fn block_weight(&self, block: u64) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .skip(6)
            .map(|(k, &p)| if (block >> (k - 6)) & 1 == 1 { p } else { 1.0 - p })
            .product()
    }

    /// Sum of lane weights over the set lanes of `word`.
    #[inline]
    pub(crate) fn lane_mass(&self, word: u64) -> f64 {
        let mut sum = 0.0;
        let mut w = word & self.valid;
        let mut k = 0;
        while w != 0 {
            sum += self.byte_mass[k][(w & 0xFF) as usize];
            w >>= 8;
            k += 1;
        }
        sum
    }
}

/// Where a simulation run draws its vectors from.
#[derive(Clone, Debug)]
pub(crate) enum Patterns {
    Random(RandomPatterns),
    Exhaustive(ExhaustivePatterns),
}

impl Patterns {
    pub(crate) fn blocks(&self) -> u64 {
        match self {
            Patterns::Random(r) => r.blocks(),
            Patterns::Exhaustive(e) => e.blocks(),
        }
    }

    pub(crate) fn vectors(&self) -> u64 {
        match self {
            Patterns::Random(r) => r.vectors(),
            Patterns::Exhaustive(e) => e.vectors(),
        }
    }

    pub(crate) fn fill(&self, block: u64, out: &mut [u64]) -> u64 {
        match self {
            Patterns::Random(r) => r.fill(block, out),
            Patterns::Exhaustive(e) => e.fill(block, out),
        }
    }
}

/// Per-net count of ones (random) or probability mass of ones (exhaustive).
pub(crate) fn ones_per_net(netlist: &Netlist, patterns: &Patterns) -> (Vec<u64>, Vec<f64>) {
    let sim = WordSim::new(netlist);
    let mut pattern = vec![0u64; sim.inputs()];
    let mut values = vec![0u64; sim.nets()];
    let mut counts = vec![0u64; sim.nets()];
    let mut mass = vec![0.0f64; sim.nets()];
    for block in 0..patterns.blocks() {
        let mask = patterns.fill(block, &mut pattern);
        sim.run(&pattern, &mut values);
        match patterns {
            Patterns::Random(_) => {
                for (c, v) in counts.iter_mut().zip(&values) {
                    *c += u64::from((v & mask).count_ones());
                }
            }
            Patterns::Exhaustive(e) => {
                let bw = e.block_weight(block);
                for (m, v) in mass.iter_mut().zip(&values) {
                    *m += bw * e.lane_mass(*v);
                }
            }
        }
    }
    (counts, mass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lane_patterns_enumerate_low_bits() {
        for lane in 0..64u64 {
            for (k, pat) in LANE_PATTERNS.iter().enumerate() {
                assert_eq!((pat >> lane) & 1, (lane >> k) & 1);
            }
        }
    }

    #[test]
    fn exhaustive_mass_sums_to_one() {
        for n in 0..9 {
            let probs: Vec<f64> = (0..n).map(|k| 0.1 + 0.08 * k as f64).collect();
            let e = ExhaustivePatterns::new(&probs);
            let total: f64 = (0..e.blocks()).map(|b| e.block_weight(b) * e.lane_mass(!0)).sum();
            assert!((total - 1.0).abs() < 1e-12, "n={n} total={total}");
        }
    }

    #[test]
    fn random_blocks_are_reproducible_and_masked() {
        let r = RandomPatterns::new(&[0.5, 0.3, 0.0, 1.0], 100, 7);
        assert_eq!(r.blocks(), 2);
        let mut a = [0u64; 4];
        let mut b = [0u64; 4];
        assert_eq!(r.fill(1, &mut a), (1u64 << 36) - 1);
        r.fill(1, &mut b);
        assert_eq!(a, b);
        assert_eq!(a[2], 0);
        assert_eq!(a[3], !0);
        r.fill(0, &mut b);
        assert_ne!(a[0], b[0]);
    }

    #[test]
    fn bernoulli_word_frequency() {
        let p = 0.3;
        let r = RandomPatterns::new(&[p], 64 * 4000, 11);
        let mut w = [0u64];
        let ones: u64 = (0..r.blocks()).map(|b| {
            r.fill(b, &mut w);
            u64::from(w[0].count_ones())
        }).sum();
        let n = r.vectors() as f64;
        let sigma = (p * (1.0 - p) / n).sqrt();
        assert!((ones as f64 / n - p).abs() < 4.0 * sigma);
    }
}
