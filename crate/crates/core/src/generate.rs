//! Synthetic circuit generators for tests, corpora and benchmarks.
//!
//! Inputs are named `I<k>`, flip-flop outputs `Q<k>`, gates `G<k>`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use crate::netlist::{ConeWalker, GateKind, Netlist, NetlistBuilder};

fn random_logic_kind<R: Rng + ?Sized>(rng: &mut R, allow_unary: bool) -> GateKind {
    let kinds: &[GateKind] = if allow_unary { &GateKind::LOGIC } else { &GateKind::LOGIC[..6] };
    kinds[rng.random_range(0..kinds.len())]
}

#[derive(Clone, Debug)]
pub struct TreeParams {
    pub max_inputs: usize,
    pub max_depth: usize,
    pub max_fanin: usize,
    pub trees: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_inputs: 12, max_depth: 8, max_fanin: 3, trees: 2 }
    }
}

struct TreeBuilder<'p> {
    params: &'p TreeParams,
    builder: NetlistBuilder,
    inputs: usize,
    gates: usize,
}

impl TreeBuilder<'_> {
    /// Grows a subtree using at most `budget` leaves; returns its root name
    /// and the number of leaves used.
    fn grow<R: Rng + ?Sized>(&mut self, rng: &mut R, depth: usize, budget: usize) -> (String, usize) {
        let stop = depth >= self.params.max_depth || rng.random_bool(0.15 + 0.05 * depth as f64);
        if budget == 0 || (stop && depth > 0) {
            let name = format!("I{}", self.inputs);
            self.inputs += 1;
            self.builder.input(name.clone());
            return (name, 1);
        }
        let kind = random_logic_kind(rng, true);
        let arity = match kind {
            GateKind::Not | GateKind::Buff => 1,
            _ if budget < 2 => return self.unary_over_leaf(rng, depth, budget),
            _ => rng.random_range(2..=self.params.max_fanin.min(budget).max(2)),
        };
        let mut remaining = budget;
        let mut children = Vec::with_capacity(arity);
        for i in 0..arity {
            let reserve = arity - i - 1;
            let share = if i + 1 == arity { remaining } else { rng.random_range(1..=remaining - reserve) };
            let (child, used) = self.grow(rng, depth + 1, share);
            remaining -= used;
            children.push(child);
        }
        let name = format!("G{}", self.gates);
        self.gates += 1;
        self.builder.gate(name.clone(), kind, children);
        (name, budget - remaining)
    }

    fn unary_over_leaf<R: Rng + ?Sized>(&mut self, rng: &mut R, depth: usize, budget: usize) -> (String, usize) {
        let (child, used) = self.grow(rng, self.params.max_depth.max(depth + 1), budget);
        let kind = if rng.random_bool(0.5) { GateKind::Not } else { GateKind::Buff };
        let name = format!("G{}", self.gates);
        self.gates += 1;
        self.builder.gate(name.clone(), kind, [child]);
        (name, used)
    }
}

/// Fanout-free forest: every net feeds at most one gate and only tree
/// roots are outputs.
pub fn fanout_free<R: Rng + ?Sized>(rng: &mut R, name: &str, params: &TreeParams) -> Netlist {
    let mut t = TreeBuilder { params, builder: NetlistBuilder::new(name), inputs: 0, gates: 0 };
    let trees = params.trees.max(1);
    let mut budget = params.max_inputs.max(trees);
    for k in 0..trees {
        let share = if k + 1 == trees { budget } else { rng.random_range(1..=budget - (trees - k - 1)) };
        let (root, used) = t.grow(rng, 0, share);
        budget -= used;
        t.builder.output(root);
        if budget == 0 {
            break;
        }
    }
    t.builder.build().expect("generated forest is valid")
}

#[derive(Clone, Debug)]
pub struct DagParams {
    pub inputs: usize,
    pub dffs: usize,
    pub gates: usize,
    pub max_fanin: usize,
    /// When set, gate inputs are drawn from the most recent `window` nets
    /// (pseudo-inputs are always eligible with a small probability).
    pub window: Option<usize>,
    /// Probability that a gate with fan-out is additionally made an output.
    pub extra_output_rate: f64,
}

impl Default for DagParams {
    fn default() -> Self {
        DagParams { inputs: 8, dffs: 0, gates: 40, max_fanin: 3, window: None, extra_output_rate: 0.05 }
    }
}

/// Random combinational DAG (cut at flip-flops). Nets without readers
/// become primary outputs, so nothing dangles.
pub fn random_dag<R: Rng + ?Sized>(rng: &mut R, name: &str, params: &DagParams) -> Netlist {
    let mut b = NetlistBuilder::new(name);
    let mut nets: Vec<String> = Vec::new();
    for k in 0..params.inputs.max(1) {
        let n = format!("I{k}");
        b.input(n.clone());
        nets.push(n);
    }
    let sources = nets.len() + params.dffs;
    for k in 0..params.dffs {
        nets.push(format!("Q{k}"));
    }
    let mut read = vec![false; sources + params.gates];
    let mut gates = Vec::with_capacity(params.gates);
    for g in 0..params.gates {
        let kind = random_logic_kind(rng, true);
        let arity = match kind {
            GateKind::Not | GateKind::Buff => 1,
            _ => rng.random_range(2..=params.max_fanin.max(2)),
        };
        let pool = nets.len();
        let lo = match params.window {
            Some(w) => pool.saturating_sub(w),
            None => 0,
        };
        let mut picks: Vec<usize> = Vec::with_capacity(arity);
        while picks.len() < arity.min(pool) {
            let idx = if lo > 0 && rng.random_bool(0.1) {
                rng.random_range(0..sources)
            } else if picks.is_empty() && rng.random_bool(0.5) {
                // prefer unread nets so few gates end up as outputs
                let unread: Vec<usize> = (lo..pool).filter(|&i| !read[i]).collect();
                if unread.is_empty() {
                    rng.random_range(lo..pool)
                } else {
                    unread[rng.random_range(0..unread.len())]
                }
            } else {
                rng.random_range(lo..pool)
            };
            if !picks.contains(&idx) {
                picks.push(idx);
            }
        }
        let kind = if picks.len() == 1 && arity > 1 { GateKind::Not } else { kind };
        for &p in &picks {
            read[p] = true;
        }
        let name = format!("G{g}");
        gates.push((name.clone(), kind, picks.iter().map(|&p| nets[p].clone()).collect::<Vec<_>>()));
        nets.push(name);
    }
    let gate_base = sources;
    for k in 0..params.dffs {
        let d = if params.gates > 0 { gate_base + rng.random_range(0..params.gates) } else { rng.random_range(0..params.inputs.max(1)) };
        read[d] = true;
        b.gate(format!("Q{k}"), GateKind::Dff, [nets[d].clone()]);
    }
    for (name, kind, inputs) in gates {
        b.gate(name, kind, inputs);
    }
    let mut any_output = false;
    for (i, net) in nets.iter().enumerate().skip(gate_base) {
        if !read[i] || rng.random_bool(params.extra_output_rate) {
            b.output(net.clone());
            any_output = true;
        }
    }
    for (i, net) in nets.iter().enumerate().take(gate_base) {
        if !read[i] {
            b.output(net.clone());
            any_output = true;
        }
    }
    if !any_output {
        b.output(nets[nets.len() - 1].clone());
    }
    b.build().expect("generated DAG is valid")
}

/// True if some net's cone contains a gate with two or more on-path inputs.
pub fn has_reconvergent_fanout(netlist: &Netlist) -> bool {
    let mut walker = ConeWalker::new(netlist.net_count());
    netlist.nets().filter(|&n| netlist.fanouts(n).len() > 1).any(|site| {
        walker.walk(netlist, site);
        walker.order[1..]
            .iter()
            .any(|&g| netlist.gate(g).inputs.iter().filter(|&&i| walker.contains(i)).count() >= 2)
    })
}

/// True if every net feeds at most one gate or flip-flop.
pub fn is_fanout_free(netlist: &Netlist) -> bool {
    let mut readers = vec![0u32; netlist.net_count()];
    for g in netlist.gates() {
        for i in &g.inputs {
            readers[i.index()] += 1;
        }
    }
    readers.iter().all(|&r| r <= 1)
}
