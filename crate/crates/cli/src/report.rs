//! CSV and JSON renderings of analysis results.
//!
//! Every number goes through [`num`], so a value prints identically in
//! both formats. Timing never appears here: these outputs are meant to be
//! byte-for-byte reproducible.

use std::fmt::Write as _;

use epp_core::{Netlist, SerReport, SimEppResult, SpMap};
use serde_json::{json, Map, Value};

use crate::commands::{Comparison, SiteComparison};

/// Shortest round-trip decimal form of `x`.
pub fn num(x: f64) -> String {
    serde_json::Number::from_f64(x).map_or_else(|| "null".into(), |n| n.to_string())
}

fn field(s: &str) -> String {
    if s.contains(['"', ',', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn status(analyzed: bool) -> &'static str {
    if analyzed {
        "analyzed"
    } else {
        "skipped"
    }
}

pub fn ser_csv(netlist: &Netlist, report: &SerReport) -> String {
    let mut out = String::from("name,r_seu,p_latched,p_sensitized,ser,status\n");
    for row in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            field(netlist.net_name(row.node)),
            num(row.r_seu),
            num(row.p_latched),
            opt_num(row.p_sensitized),
            opt_num(row.ser),
            status(row.ser.is_some())
        );
    }
    out
}

pub fn ser_json(netlist: &Netlist, report: &SerReport, sp: &SpMap) -> String {
    let nodes: Vec<Value> = report
        .rows
        .iter()
        .map(|row| {
            json!({
                "name": netlist.net_name(row.node),
                "r_seu": row.r_seu,
                "p_latched": row.p_latched,
                "p_sensitized": row.p_sensitized,
                "ser": row.ser,
                "status": status(row.ser.is_some()),
            })
        })
        .collect();
    let ranking: Vec<&str> = report.ranking.iter().map(|&n| netlist.net_name(n)).collect();
    pretty(&json!({
        "circuit": netlist.name(),
        "sp_method": sp.method().name(),
        "aggregation_mode": report.aggregation.name(),
        "analyzed": report.analyzed(),
        "nodes": nodes,
        "ranking": ranking,
        "total_ser": report.total_ser,
    }))
}

pub fn sp_csv(netlist: &Netlist, sp: &SpMap) -> String {
    let mut out = String::from("net_name,sp\n");
    for net in netlist.nets() {
        let _ = writeln!(out, "{},{}", field(netlist.net_name(net)), num(sp.get(net)));
    }
    out
}

pub fn sp_json(netlist: &Netlist, sp: &SpMap) -> String {
    let nets: Vec<Value> =
        netlist.nets().map(|n| json!({ "net_name": netlist.net_name(n), "sp": sp.get(n) })).collect();
    pretty(&json!({ "circuit": netlist.name(), "sp_method": sp.method().name(), "nets": nets }))
}

pub fn sim_csv(netlist: &Netlist, results: &[SimEppResult]) -> String {
    let captures = netlist.capture_points();
    let mut out = String::from("site_name,method,vectors,any_output");
    for &c in captures {
        out.push(',');
        out.push_str(&field(netlist.net_name(c)));
    }
    out.push('\n');
    for r in results {
        let _ = write!(out, "{},{},{},{}", field(netlist.net_name(r.site)), r.method.name(), r.vectors_used, num(r.any_output));
        for &c in captures {
            out.push(',');
            out.push_str(&num(r.epp_to(c)));
        }
        out.push('\n');
    }
    out
}

pub fn sim_json(netlist: &Netlist, results: &[SimEppResult], seed: Option<u64>) -> String {
    let sites: Vec<Value> = results
        .iter()
        .map(|r| {
            let per_output: Map<String, Value> =
                r.per_output.iter().map(|&(o, e)| (netlist.net_name(o).to_string(), json!(e))).collect();
            json!({
                "site_name": netlist.net_name(r.site),
                "method": r.method.name(),
                "vectors": r.vectors_used,
                "any_output": r.any_output,
                "per_output": per_output,
            })
        })
        .collect();
    pretty(&json!({ "circuit": netlist.name(), "seed": seed, "sites": sites }))
}

const COMPARE_HEADER: &str = "site_name,analytical_any,analytical_max,simulated,abs_diff,rel_diff\n";

fn compare_row(netlist: &Netlist, s: &SiteComparison) -> String {
    format!(
        "{},{},{},{},{},{}\n",
        field(netlist.net_name(s.site)),
        num(s.analytical_any),
        num(s.analytical_max),
        num(s.simulated),
        num(s.abs_diff),
        opt_num(s.rel_diff)
    )
}

pub fn compare_csv(netlist: &Netlist, c: &Comparison) -> String {
    let mut out = String::from(COMPARE_HEADER);
    for s in &c.sites {
        out.push_str(&compare_row(netlist, s));
    }
    out
}

pub fn compare_summary_json(netlist: &Netlist, c: &Comparison) -> String {
    pretty(&compare_summary(netlist, c))
}

fn compare_summary(netlist: &Netlist, c: &Comparison) -> Value {
    let by_method: Map<String, Value> = c
        .by_sp_method
        .iter()
        .map(|m| {
            let v = match &m.accuracy {
                Ok(a) => json!({ "mean_abs_diff": a.mean_abs_diff, "max_abs_diff": a.max_abs_diff }),
                Err(e) => json!({ "unavailable": e }),
            };
            (m.method.name().to_string(), v)
        })
        .collect();
    json!({
        "circuit": netlist.name(),
        "sp_method": c.sp_method.name(),
        "aggregation_mode": c.aggregation.name(),
        "reference": c.reference.name(),
        "vectors": c.vectors,
        "seed": c.seed,
        "sites": c.sites.len(),
        "mean_abs_diff": c.accuracy.mean_abs_diff,
        "max_abs_diff": c.accuracy.max_abs_diff,
        "mean_abs_diff_per_output": c.per_output.mean_abs_diff,
        "max_abs_diff_per_output": c.per_output.max_abs_diff,
        "by_sp_method": by_method,
    })
}

pub fn compare_json(netlist: &Netlist, c: &Comparison) -> String {
    let rows: Vec<Value> = c
        .sites
        .iter()
        .map(|s| {
            json!({
                "site_name": netlist.net_name(s.site),
                "analytical_any": s.analytical_any,
                "analytical_max": s.analytical_max,
                "simulated": s.simulated,
                "abs_diff": s.abs_diff,
                "rel_diff": s.rel_diff,
            })
        })
        .collect();
    pretty(&json!({ "summary": compare_summary(netlist, c), "sites": rows }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_are_shortest_round_trip() {
        assert_eq!(num(0.5), "0.5");
        assert_eq!(num(1.0), "1.0");
        assert_eq!(num(4e-6), "4e-6");
        assert_eq!(num(0.1 + 0.2), "0.30000000000000004");
        assert_eq!(serde_json::to_string(&json!(4e-6)).unwrap(), num(4e-6));
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(field("a"), "a");
        assert_eq!(field("a\"b"), "\"a\"\"b\"");
    }
}
