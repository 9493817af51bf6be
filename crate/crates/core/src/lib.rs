//! Analytical soft-error sensitization analysis for gate-level netlists.
//!
//! The crate computes, for every net treated as an error site, the
//! probability that a single bit flip there reaches a primary output or a
//! flip-flop input. The analytical engine ([`epp`]) propagates a four-valued
//! distribution over `{a, ā, 1, 0}` through the fan-out cone in one
//! topological pass; [`faultsim`] provides the bit-parallel fault-injection
//! baseline and an exhaustive oracle for small circuits.
//!
//! Everything here is `no_std` + `alloc`. Text formats, configuration and
//! parallel orchestration live in the `epp-cli` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod epp;
pub mod faultsim;
pub mod generate;
pub mod netlist;
mod patterns;
pub mod ser;
pub mod sigprob;

pub use epp::{
    analyze_all, analyze_site, epp_of, gate_rule, lift_off_path, propagate_from_site, EppEngine,
    EppError, EppReport, FourValueDist, Polarity, SiteDists, Symbol,
};
pub use faultsim::{
    exhaustive_epp, mc_epp, simulate_pair, simulate_vector, SimEppResult, SimError, SimMethod,
    SimPlan, Vector, MAX_EXHAUSTIVE_INPUTS,
};
pub use netlist::{ConeInfo, Gate, GateKind, NetId, Netlist, NetlistBuilder, NetlistError};
pub use ser::{build_partial_report, build_report, node_ser, Aggregation, SerConfig, SerError, SerReport, SerRow};
pub use sigprob::{sp_exact, sp_independent, sp_montecarlo, InputSp, SpError, SpMap, SpMethod};
