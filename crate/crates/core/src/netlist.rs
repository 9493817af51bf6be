//! Immutable circuit graph, construction/validation and cone queries.
//!
//! Nets are identified by dense [`NetId`]s assigned in declaration order.
//! Each net has exactly one driver: a primary input, a flip-flop, or a
//! combinational gate. The graph is cut at flip-flops: a DFF output is a
//! pseudo-primary input and a DFF data input is a capture point.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Dense index of a net (the output line of its driver).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NetId(u32);

impl NetId {
    #[inline]
    pub const fn new(index: usize) -> Self {
        NetId(index as u32)
    }

    #[inline]
    pub const fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GateKind {
    And,
    Nand,
    Or,
    Nor,
    Xor,
    Xnor,
    Not,
    Buff,
    Input,
    Dff,
}

impl GateKind {
    pub const ALL: [GateKind; 10] = [
        GateKind::And,
        GateKind::Nand,
        GateKind::Or,
        GateKind::Nor,
        GateKind::Xor,
        GateKind::Xnor,
        GateKind::Not,
        GateKind::Buff,
        GateKind::Input,
        GateKind::Dff,
    ];

    /// The combinational kinds, i.e. everything a fan-out cone can contain.
    pub const LOGIC: [GateKind; 8] = [
        GateKind::And,
        GateKind::Nand,
        GateKind::Or,
        GateKind::Nor,
        GateKind::Xor,
        GateKind::Xnor,
        GateKind::Not,
        GateKind::Buff,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Nand => "NAND",
            GateKind::Or => "OR",
            GateKind::Nor => "NOR",
            GateKind::Xor => "XOR",
            GateKind::Xnor => "XNOR",
            GateKind::Not => "NOT",
            GateKind::Buff => "BUFF",
            GateKind::Input => "INPUT",
            GateKind::Dff => "DFF",
        }
    }

    /// Case-insensitive lookup of a gate keyword. `BUF` is accepted as an
    /// alias of `BUFF`. `INPUT` is a declaration, not a gate, so it is not
    /// returned here.
    pub fn from_keyword(word: &str) -> Option<GateKind> {
        let kinds = [
            ("AND", GateKind::And),
            ("NAND", GateKind::Nand),
            ("OR", GateKind::Or),
            ("NOR", GateKind::Nor),
            ("XOR", GateKind::Xor),
            ("XNOR", GateKind::Xnor),
            ("NOT", GateKind::Not),
            ("INV", GateKind::Not),
            ("BUFF", GateKind::Buff),
            ("BUF", GateKind::Buff),
            ("DFF", GateKind::Dff),
        ];
        kinds
            .iter()
            .find(|(kw, _)| kw.eq_ignore_ascii_case(word))
            .map(|&(_, k)| k)
    }

    pub fn arity_ok(self, n: usize) -> bool {
        match self {
            GateKind::Input => n == 0,
            GateKind::Not | GateKind::Buff | GateKind::Dff => n == 1,
            _ => n >= 2,
        }
    }

    /// Output is the complement of the base function (NAND, NOR, XNOR, NOT).
    pub fn is_inverting(self) -> bool {
        matches!(
            self,
            GateKind::Nand | GateKind::Nor | GateKind::Xnor | GateKind::Not
        )
    }

    /// Sources of the combinational graph: primary inputs and flip-flop outputs.
    pub fn is_source(self) -> bool {
        matches!(self, GateKind::Input | GateKind::Dff)
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Driver of one net.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateKind,
    pub inputs: Vec<NetId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NetlistError {
    UndefinedSignal { name: String, line: Option<u32> },
    MultipleDrivers { name: String, line: Option<u32> },
    CombinationalCycle { name: String },
    Arity { name: String, kind: GateKind, got: usize, line: Option<u32> },
    NoCapturePoints,
    UnknownNet(NetId),
}

impl fmt::Display for NetlistError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn at(f: &mut fmt::Formatter<'_>, line: &Option<u32>) -> fmt::Result {
            match line {
                Some(l) => write!(f, "line {l}: "),
                None => Ok(()),
            }
        }
        match self {
            NetlistError::UndefinedSignal { name, line } => {
                at(f, line)?;
                write!(f, "undefined signal `{name}`")
            }
            NetlistError::MultipleDrivers { name, line } => {
                at(f, line)?;
                write!(f, "signal `{name}` has multiple drivers")
            }
            NetlistError::CombinationalCycle { name } => {
                write!(f, "combinational cycle through signal `{name}`")
            }
            NetlistError::Arity { name, kind, got, line } => {
                at(f, line)?;
                write!(f, "gate `{name}`: {kind} cannot take {got} input(s)")
            }
            NetlistError::NoCapturePoints => {
                f.write_str("netlist has no primary outputs or flip-flops")
            }
            NetlistError::UnknownNet(id) => write!(f, "unknown net {id}"),
        }
    }
}

impl core::error::Error for NetlistError {}

#[derive(Clone, Debug)]
enum Decl {
    Input { name: String, line: Option<u32> },
    Output { name: String, line: Option<u32> },
    Gate { name: String, kind: GateKind, inputs: Vec<String>, line: Option<u32> },
}

/// Collects declarations in source order; forward references are resolved
/// in [`NetlistBuilder::build`].
#[derive(Clone, Debug, Default)]
pub struct NetlistBuilder {
    name: String,
    decls: Vec<Decl>,
    line: Option<u32>,
}

impl NetlistBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        NetlistBuilder { name: name.into(), decls: Vec::new(), line: None }
    }

    /// Source line attached to subsequent declarations, for error messages.
    pub fn set_line(&mut self, line: Option<u32>) -> &mut Self {
        self.line = line;
        self
    }

    pub fn input(&mut self, name: impl Into<String>) -> &mut Self {
        let line = self.line;
        self.decls.push(Decl::Input { name: name.into(), line });
        self
    }

    pub fn output(&mut self, name: impl Into<String>) -> &mut Self {
        let line = self.line;
        self.decls.push(Decl::Output { name: name.into(), line });
        self
    }

    pub fn gate<S: Into<String>>(
        &mut self,
        name: impl Into<String>,
        kind: GateKind,
        inputs: impl IntoIterator<Item = S>,
    ) -> &mut Self {
        let line = self.line;
        self.decls.push(Decl::Gate {
            name: name.into(),
            kind,
            inputs: inputs.into_iter().map(Into::into).collect(),
            line,
        });
        self
    }

    pub fn build(&self) -> Result<Netlist, NetlistError> {
        let mut index: BTreeMap<String, NetId> = BTreeMap::new();
        let mut names = Vec::new();
        for decl in &self.decls {
            let (name, line) = match decl {
                Decl::Input { name, line } | Decl::Gate { name, line, .. } => (name, line),
                Decl::Output { .. } => continue,
            };
            if index.contains_key(name) {
                return Err(NetlistError::MultipleDrivers { name: name.clone(), line: *line });
            }
            index.insert(name.clone(), NetId::new(names.len()));
            names.push(name.clone());
        }

        let lookup = |name: &String, line: &Option<u32>| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| NetlistError::UndefinedSignal { name: name.clone(), line: *line })
        };

        let mut gates = Vec::with_capacity(names.len());
        let mut primary_outputs = Vec::new();
        for decl in &self.decls {
            match decl {
                Decl::Input { .. } => gates.push(Gate { kind: GateKind::Input, inputs: Vec::new() }),
                Decl::Gate { name, kind, inputs, line } => {
                    if *kind == GateKind::Input || !kind.arity_ok(inputs.len()) {
                        return Err(NetlistError::Arity {
                            name: name.clone(),
                            kind: *kind,
                            got: inputs.len(),
                            line: *line,
                        });
                    }
                    let inputs = inputs
                        .iter()
                        .map(|i| lookup(i, line))
                        .collect::<Result<Vec<_>, _>>()?;
                    gates.push(Gate { kind: *kind, inputs });
                }
                Decl::Output { name, line } => {
                    let id = lookup(name, line)?;
                    if !primary_outputs.contains(&id) {
                        primary_outputs.push(id);
                    }
                }
            }
        }

        Netlist::assemble(self.name.clone(), names, index, gates, primary_outputs)
    }
}

/// Validated, immutable gate-level circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct Netlist {
    name: String,
    names: Vec<String>,
    index: BTreeMap<String, NetId>,
    gates: Vec<Gate>,
    primary_inputs: Vec<NetId>,
    primary_outputs: Vec<NetId>,
    ff_inputs: Vec<NetId>,
    ff_outputs: Vec<NetId>,
    pseudo_inputs: Vec<NetId>,
    capture_points: Vec<NetId>,
    is_capture: Vec<bool>,
    // combinational fan-out in CSR form; DFF data pins are not edges
    fanout_start: Vec<u32>,
    fanout: Vec<NetId>,
    topo: Vec<NetId>,
    topo_pos: Vec<u32>,
    // gates in topological order with inputs given as topological
    // positions; sources have no inputs here
    prog_kind: Vec<GateKind>,
    prog_start: Vec<u32>,
    prog_args: Vec<u32>,
}

impl Netlist {
    fn assemble(
        name: String,
        names: Vec<String>,
        index: BTreeMap<String, NetId>,
        gates: Vec<Gate>,
        primary_outputs: Vec<NetId>,
    ) -> Result<Netlist, NetlistError> {
        let n = gates.len();
        let ids = || (0..n).map(NetId::new);
        let primary_inputs: Vec<NetId> =
            ids().filter(|id| gates[id.index()].kind == GateKind::Input).collect();
        let ff_outputs: Vec<NetId> =
            ids().filter(|id| gates[id.index()].kind == GateKind::Dff).collect();
        let pseudo_inputs: Vec<NetId> =
            ids().filter(|id| gates[id.index()].kind.is_source()).collect();
        let mut ff_inputs: Vec<NetId> =
            ff_outputs.iter().map(|q| gates[q.index()].inputs[0]).collect();
        ff_inputs.sort_unstable();
        ff_inputs.dedup();

        let mut is_capture = vec![false; n];
        for id in primary_outputs.iter().chain(&ff_inputs) {
            is_capture[id.index()] = true;
        }
        let capture_points: Vec<NetId> = ids().filter(|id| is_capture[id.index()]).collect();
        if capture_points.is_empty() {
            return Err(NetlistError::NoCapturePoints);
        }

        let mut fanout_start = vec![0u32; n + 1];
        for g in gates.iter().filter(|g| g.kind != GateKind::Dff) {
            for i in &g.inputs {
                fanout_start[i.index() + 1] += 1;
            }
        }
        for i in 0..n {
            fanout_start[i + 1] += fanout_start[i];
        }
        let mut fill = fanout_start.clone();
        let mut fanout = vec![NetId(0); fanout_start[n] as usize];
        for (id, g) in gates.iter().enumerate() {
            if g.kind == GateKind::Dff {
                continue;
            }
            for i in &g.inputs {
                let slot = &mut fill[i.index()];
                fanout[*slot as usize] = NetId::new(id);
                *slot += 1;
            }
        }

        let mut netlist = Netlist {
            name,
            names,
            index,
            gates,
            primary_inputs,
            primary_outputs,
            ff_inputs,
            ff_outputs,
            pseudo_inputs,
            capture_points,
            is_capture,
            fanout_start,
            fanout,
            topo: Vec::new(),
            topo_pos: Vec::new(),
            prog_kind: Vec::new(),
            prog_start: Vec::new(),
            prog_args: Vec::new(),
        };
        netlist.sort_topologically()?;
        Ok(netlist)
    }

    /// Kahn's algorithm seeded with sources in id order, FIFO afterwards.
    fn sort_topologically(&mut self) -> Result<(), NetlistError> {
        let n = self.gates.len();
        let mut pending: Vec<u32> = self
            .gates
            .iter()
            .map(|g| if g.kind.is_source() { 0 } else { g.inputs.len() as u32 })
            .collect();
        let mut order: Vec<NetId> = (0..n).map(NetId::new).filter(|id| pending[id.index()] == 0).collect();
        let mut head = 0;
        while head < order.len() {
            let net = order[head];
            head += 1;
            for &succ in self.fanouts(net) {
                let p = &mut pending[succ.index()];
                *p -= 1;
                if *p == 0 {
                    order.push(succ);
                }
            }
        }
        if order.len() != n {
            return Err(NetlistError::CombinationalCycle { name: self.cycle_member(&pending) });
        }
        let mut topo_pos = vec![0u32; n];
        for (pos, id) in order.iter().enumerate() {
            topo_pos[id.index()] = pos as u32;
        }
        let mut prog_start = Vec::with_capacity(n + 1);
        let mut prog_args = Vec::new();
        prog_start.push(0);
        for id in &order {
            let g = &self.gates[id.index()];
            if !g.kind.is_source() {
                prog_args.extend(g.inputs.iter().map(|i| topo_pos[i.index()]));
            }
            prog_start.push(prog_args.len() as u32);
        }
        self.prog_kind = order.iter().map(|id| self.gates[id.index()].kind).collect();
        self.prog_start = prog_start;
        self.prog_args = prog_args;
        self.topo = order;
        self.topo_pos = topo_pos;
        Ok(())
    }

    /// Walk backwards through unresolved drivers until a net repeats.
    fn cycle_member(&self, pending: &[u32]) -> String {
        let start = pending.iter().position(|&p| p > 0).unwrap_or(0);
        let mut seen = vec![false; pending.len()];
        let mut cur = start;
        while !seen[cur] {
            seen[cur] = true;
            let next = self.gates[cur]
                .inputs
                .iter()
                .find(|i| pending[i.index()] > 0 && !self.gates[i.index()].kind.is_source());
            match next {
                Some(i) => cur = i.index(),
                None => break,
            }
        }
        self.names[cur].clone()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn net_count(&self) -> usize {
        self.gates.len()
    }

    /// Number of gates that are neither inputs nor flip-flops.
    pub fn logic_gate_count(&self) -> usize {
        self.gates.iter().filter(|g| !g.kind.is_source()).count()
    }

    pub fn nets(&self) -> impl ExactSizeIterator<Item = NetId> + '_ {
        (0..self.gates.len()).map(NetId::new)
    }

    pub fn check(&self, net: NetId) -> Result<(), NetlistError> {
        if net.index() < self.gates.len() {
            Ok(())
        } else {
            Err(NetlistError::UnknownNet(net))
        }
    }

    pub fn gate(&self, net: NetId) -> &Gate {
        &self.gates[net.index()]
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn kind(&self, net: NetId) -> GateKind {
        self.gates[net.index()].kind
    }

    pub fn net_name(&self, net: NetId) -> &str {
        &self.names[net.index()]
    }

    pub fn find(&self, name: &str) -> Option<NetId> {
        self.index.get(name).copied()
    }

    pub fn primary_inputs(&self) -> &[NetId] {
        &self.primary_inputs
    }

    pub fn primary_outputs(&self) -> &[NetId] {
        &self.primary_outputs
    }

    /// Nets feeding a DFF data pin, sorted by id.
    pub fn ff_inputs(&self) -> &[NetId] {
        &self.ff_inputs
    }

    pub fn ff_outputs(&self) -> &[NetId] {
        &self.ff_outputs
    }

    /// Primary inputs and DFF outputs, in id order. This is the coordinate
    /// order of every input [`Vector`](crate::faultsim::Vector).
    pub fn pseudo_inputs(&self) -> &[NetId] {
        &self.pseudo_inputs
    }

    /// Primary outputs and DFF data inputs, sorted by id.
    pub fn capture_points(&self) -> &[NetId] {
        &self.capture_points
    }

    pub fn is_capture(&self, net: NetId) -> bool {
        self.is_capture[net.index()]
    }

    /// Combinational fan-out (gates reading `net`, DFFs excluded).
    pub fn fanouts(&self, net: NetId) -> &[NetId] {
        let i = net.index();
        &self.fanout[self.fanout_start[i] as usize..self.fanout_start[i + 1] as usize]
    }

    pub fn topo_order(&self) -> &[NetId] {
        &self.topo
    }

    pub fn topo_position(&self, net: NetId) -> usize {
        self.topo_pos[net.index()] as usize
    }

    /// Kinds, input offsets and input positions, all indexed by
    /// topological position.
    pub(crate) fn topo_program(&self) -> (&[GateKind], &[u32], &[u32]) {
        (&self.prog_kind, &self.prog_start, &self.prog_args)
    }

    /// Nets that are neither read by any gate or flip-flop nor a capture point.
    pub fn dangling_nets(&self) -> Vec<NetId> {
        let mut read = vec![false; self.gates.len()];
        for g in &self.gates {
            for i in &g.inputs {
                read[i.index()] = true;
            }
        }
        self.nets().filter(|n| !read[n.index()] && !self.is_capture(*n)).collect()
    }

    /// Error-site cone query: on-path nets are the site plus its transitive
    /// combinational fan-out.
    pub fn fanout_cone(&self, site: NetId) -> Result<ConeInfo, NetlistError> {
        self.check(site)?;
        let mut walker = ConeWalker::new(self.net_count());
        walker.walk(self, site);
        let topological = walker.order.clone();
        let mut on_path_nets = topological.clone();
        on_path_nets.sort_unstable();
        let on_path_gates: Vec<NetId> = topological.iter().copied().filter(|&n| n != site).collect();
        let mut off_path_nets: Vec<NetId> = on_path_gates
            .iter()
            .flat_map(|g| self.gate(*g).inputs.iter().copied())
            .filter(|i| !walker.contains(*i))
            .collect();
        off_path_nets.sort_unstable();
        off_path_nets.dedup();
        let reachable_outputs = on_path_nets.iter().copied().filter(|n| self.is_capture(*n)).collect();
        Ok(ConeInfo { site, topological, on_path_nets, on_path_gates, off_path_nets, reachable_outputs })
    }
}

/// Structural paths from one error site.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConeInfo {
    site: NetId,
    topological: Vec<NetId>,
    on_path_nets: Vec<NetId>,
    on_path_gates: Vec<NetId>,
    off_path_nets: Vec<NetId>,
    reachable_outputs: Vec<NetId>,
}

impl ConeInfo {
    pub fn site(&self) -> NetId {
        self.site
    }

    /// On-path nets sorted by id.
    pub fn on_path_nets(&self) -> &[NetId] {
        &self.on_path_nets
    }

    /// On-path nets in a topological order starting with the site.
    pub fn topological(&self) -> &[NetId] {
        &self.topological
    }

    /// Gates with at least one on-path input, in topological order.
    pub fn on_path_gates(&self) -> &[NetId] {
        &self.on_path_gates
    }

    /// Inputs of on-path gates that are not themselves on-path, sorted by id.
    pub fn off_path_nets(&self) -> &[NetId] {
        &self.off_path_nets
    }

    /// Capture points inside the cone, sorted by id.
    pub fn reachable_outputs(&self) -> &[NetId] {
        &self.reachable_outputs
    }

    pub fn is_on_path(&self, net: NetId) -> bool {
        self.on_path_nets.binary_search(&net).is_ok()
    }
}

/// Reusable scratch for repeated cone walks. Membership is tracked with an
/// epoch stamp so nothing is cleared between sites.
#[derive(Clone, Debug)]
pub(crate) struct ConeWalker {
    stamp: Vec<u32>,
    epoch: u32,
    // (net, next fan-out edge, end of its edges)
    stack: Vec<(NetId, u32, u32)>,
    pub(crate) order: Vec<NetId>,
}

impl ConeWalker {
    pub(crate) fn new(nets: usize) -> Self {
        ConeWalker { stamp: vec![0; nets], epoch: 0, stack: Vec::new(), order: Vec::new() }
    }

    /// Fills `order` with the cone of `site` in reverse DFS post-order,
    /// which is a topological order of the cone.
    pub(crate) fn walk(&mut self, netlist: &Netlist, site: NetId) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        let epoch = self.epoch;
        let (start, edges) = (&netlist.fanout_start, &netlist.fanout);
        let (stamp, stack, order) = (&mut self.stamp, &mut self.stack, &mut self.order);
        order.clear();
        stack.clear();
        let s = site.index();
        stamp[s] = epoch;
        stack.push((site, start[s], start[s + 1]));
        while let Some(top) = stack.last_mut() {
            let (net, next, end) = *top;
            if next < end {
                top.1 = next + 1;
                let child = edges[next as usize];
                let c = child.index();
                if stamp[c] != epoch {
                    stamp[c] = epoch;
                    stack.push((child, start[c], start[c + 1]));
                }
            } else {
                order.push(net);
                stack.pop();
            }
        }
        self.order.reverse();
    }

    #[inline]
    pub(crate) fn contains(&self, net: NetId) -> bool {
        self.stamp[net.index()] == self.epoch
    }
}
