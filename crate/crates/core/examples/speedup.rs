//! Times analytical EPP against per-site Monte Carlo on a generated circuit.
//!
//! cargo run --release -p epp-core --example speedup -- [gates] [window] [sample-every]

use std::time::Instant;

use epp_core::generate::{random_dag, DagParams};
use epp_core::*;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().unwrap()).collect();
    let gates = args.first().copied().unwrap_or(2000);
    let window = args.get(1).copied().filter(|&w| w > 0);
    let every = args.get(2).copied().unwrap_or(1).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let params = DagParams { inputs: 100, dffs: 20, gates, window, ..DagParams::default() };
    let n = random_dag(&mut rng, "speed", &params);
    let isp = InputSp::default();
    let sp = sp_independent(&n, &isp).unwrap();

    let t = Instant::now();
    let reports = analyze_all(&n, &sp).unwrap();
    let analytical = t.elapsed().as_secs_f64();
    let cone: usize = n.nets().map(|s| n.fanout_cone(s).unwrap().on_path_nets().len()).sum();

    let sites: Vec<NetId> = n.nets().step_by(every).collect();
    let t = Instant::now();
    for &s in &sites {
        std::hint::black_box(mc_epp(&n, s, &isp, 10_000, 7).unwrap());
    }
    let sim = t.elapsed().as_secs_f64() * every as f64;
    println!(
        "nets {} mean cone {:.1} reports {} analytical {:.4}s simulation {:.3}s ratio {:.1}",
        n.net_count(),
        cone as f64 / n.net_count() as f64,
        reports.len(),
        analytical,
        sim,
        sim / analytical
    );
}
