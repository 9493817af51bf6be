//! The analyses behind each subcommand, parallelized over a rayon pool.
//!
//! Work is split so that results never depend on the number of workers:
//! sites are analyzed independently and collected in order, and
//! simulation chunks are merged in chunk order.

use std::time::{Duration, Instant};

use epp_core::{
    build_partial_report, sp_exact, sp_independent, sp_montecarlo, Aggregation, EppEngine, EppReport,
    InputSp, NetId, Netlist, SerReport, SimEppResult, SimMethod, SimPlan, SpMap, SpMethod,
    MAX_EXHAUSTIVE_INPUTS,
};
use rayon::prelude::*;

use crate::config::{named, RunConfig, DEFAULT_VECTORS};
use crate::Failure;

/// Sites handed to one engine at a time.
const SITE_BATCH: usize = 32;

pub fn compute_sp(netlist: &Netlist, method: SpMethod, cfg: &RunConfig) -> Result<SpMap, Failure> {
    let sp = match method {
        SpMethod::Independent => sp_independent(netlist, &cfg.input_sp),
        SpMethod::MonteCarlo => {
            sp_montecarlo(netlist, &cfg.input_sp, cfg.vectors.unwrap_or(DEFAULT_VECTORS), cfg.seed)
        }
        SpMethod::Exact => sp_exact(netlist, &cfg.input_sp),
    };
    sp.map_err(|e| Failure::Runtime(named(netlist, &e.to_string())))
}

pub fn analyze_sites(netlist: &Netlist, sp: &SpMap, sites: &[NetId]) -> Result<Vec<EppReport>, Failure> {
    let batches: Vec<Vec<EppReport>> = sites
        .par_chunks(SITE_BATCH)
        .map(|batch| {
            let mut engine = EppEngine::new(netlist, sp)?;
            batch.iter().map(|&s| engine.analyze_site(s)).collect()
        })
        .collect::<Result<_, _>>()
        .map_err(|e: epp_core::EppError| Failure::Runtime(named(netlist, &e.to_string())))?;
    Ok(batches.into_iter().flatten().collect())
}

/// Runs a simulation plan; chunks are evaluated in parallel a wave at a
/// time and merged in chunk order.
pub fn run_plan(plan: &SimPlan<'_>) -> Vec<SimEppResult> {
    let wave = 4 * rayon::current_num_threads().max(1);
    let mut total = plan.empty_tally();
    let mut next = 0;
    while next < plan.chunk_count() {
        let end = (next + wave).min(plan.chunk_count());
        let tallies: Vec<_> = (next..end).into_par_iter().map(|c| plan.run_chunk(c)).collect();
        for t in &tallies {
            total.merge(t);
        }
        next = end;
    }
    plan.finish(&total)
}

pub fn simulate_sites(
    netlist: &Netlist,
    sites: &[NetId],
    input_sp: &InputSp,
    method: SimMethod,
    vectors: u64,
    seed: u64,
) -> Result<Vec<SimEppResult>, Failure> {
    let plan = match method {
        SimMethod::Exhaustive => SimPlan::exhaustive(netlist, sites, input_sp),
        SimMethod::MonteCarlo => SimPlan::monte_carlo(netlist, sites, input_sp, vectors, seed),
    }
    .map_err(|e| Failure::Runtime(named(netlist, &e.to_string())))?;
    Ok(run_plan(&plan))
}

#[derive(Clone, Debug)]
pub struct Analysis {
    pub sp: SpMap,
    pub epp: Vec<EppReport>,
    pub report: SerReport,
    pub sp_time: Duration,
    pub epp_time: Duration,
}

pub fn analyze(netlist: &Netlist, cfg: &RunConfig) -> Result<Analysis, Failure> {
    let t = Instant::now();
    let sp = compute_sp(netlist, cfg.sp_method, cfg)?;
    let sp_time = t.elapsed();
    let sites = cfg.site_list(netlist);
    let t = Instant::now();
    let epp = analyze_sites(netlist, &sp, &sites)?;
    let epp_time = t.elapsed();
    let report = build_partial_report(netlist, &epp, &cfg.ser).map_err(|e| Failure::Runtime(named(netlist, &e.to_string())))?;
    Ok(Analysis { sp, epp, report, sp_time, epp_time })
}

/// Exhaustive enumeration when `sp_method` is exact, random vectors
/// otherwise.
pub fn simulation_method(cfg: &RunConfig) -> SimMethod {
    match cfg.sp_method {
        SpMethod::Exact => SimMethod::Exhaustive,
        _ => SimMethod::MonteCarlo,
    }
}

#[derive(Clone, Debug)]
pub struct Simulation {
    pub results: Vec<SimEppResult>,
    pub time: Duration,
}

pub fn simulate(netlist: &Netlist, cfg: &RunConfig) -> Result<Simulation, Failure> {
    let sites = cfg.site_list(netlist);
    let t = Instant::now();
    let results = simulate_sites(
        netlist,
        &sites,
        &cfg.input_sp,
        simulation_method(cfg),
        cfg.vectors.unwrap_or(DEFAULT_VECTORS),
        cfg.seed,
    )?;
    Ok(Simulation { results, time: t.elapsed() })
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Accuracy {
    pub mean_abs_diff: f64,
    pub max_abs_diff: f64,
}

impl Accuracy {
    fn of(diffs: impl Iterator<Item = f64>) -> Accuracy {
        let (mut sum, mut max, mut count) = (0.0, 0.0f64, 0usize);
        for d in diffs {
            sum += d;
            max = max.max(d);
            count += 1;
        }
        Accuracy { mean_abs_diff: if count == 0 { 0.0 } else { sum / count as f64 }, max_abs_diff: max }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SiteComparison {
    pub site: NetId,
    pub analytical_any: f64,
    pub analytical_max: f64,
    pub simulated: f64,
    pub abs_diff: f64,
    /// `None` when the simulated value is zero and the analytical one is not.
    pub rel_diff: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodAccuracy {
    pub method: SpMethod,
    /// Error text when the method cannot run on this circuit.
    pub accuracy: Result<Accuracy, String>,
}

#[derive(Clone, Debug)]
pub struct Comparison {
    pub sp_method: SpMethod,
    pub aggregation: Aggregation,
    pub reference: SimMethod,
    pub vectors: u64,
    /// Only meaningful for a random-vector reference.
    pub seed: Option<u64>,
    pub sites: Vec<SiteComparison>,
    /// Over sites, using the configured aggregation.
    pub accuracy: Accuracy,
    /// Over every (site, capture point) pair.
    pub per_output: Accuracy,
    pub by_sp_method: Vec<MethodAccuracy>,
    pub analytical_time: Duration,
    pub simulation_time: Duration,
}

fn site_accuracy(reports: &[EppReport], sims: &[SimEppResult], aggregation: Aggregation) -> Accuracy {
    Accuracy::of(reports.iter().zip(sims).map(|(r, s)| (aggregation.pick(r) - s.any_output).abs()))
}

fn output_accuracy(netlist: &Netlist, reports: &[EppReport], sims: &[SimEppResult]) -> Accuracy {
    let captures = netlist.capture_points();
    Accuracy::of(
        reports.iter().zip(sims).flat_map(|(r, s)| captures.iter().map(move |&c| (r.epp_to(c) - s.epp_to(c)).abs())),
    )
}

/// Analytical EPP against simulation over the selected sites. The
/// reference is exhaustive when `sp_method` is exact and random-vector
/// simulation otherwise, in which case `vectors` must be given.
pub fn compare(netlist: &Netlist, cfg: &RunConfig) -> Result<Comparison, Failure> {
    let reference = simulation_method(cfg);
    let vectors = match (reference, cfg.vectors) {
        (SimMethod::MonteCarlo, Some(v)) => v,
        (SimMethod::MonteCarlo, None) => {
            return Err(Failure::Usage("compare against random simulation needs --vectors".into()))
        }
        (SimMethod::Exhaustive, _) => {
            let count = netlist.pseudo_inputs().len();
            if count > MAX_EXHAUSTIVE_INPUTS {
                return Err(Failure::Runtime(format!(
                    "exhaustive reference supports at most {MAX_EXHAUSTIVE_INPUTS} pseudo-inputs, circuit has {count}"
                )));
            }
            1u64 << count
        }
    };
    let sites = cfg.site_list(netlist);
    let sp = compute_sp(netlist, cfg.sp_method, cfg)?;
    let t = Instant::now();
    let reports = analyze_sites(netlist, &sp, &sites)?;
    let analytical_time = t.elapsed();
    let t = Instant::now();
    let sims = simulate_sites(netlist, &sites, &cfg.input_sp, reference, vectors, cfg.seed)?;
    let simulation_time = t.elapsed();

    let aggregation = cfg.ser.aggregation;
    let rows = reports
        .iter()
        .zip(&sims)
        .map(|(r, s)| {
            let abs_diff = (aggregation.pick(r) - s.any_output).abs();
            let rel_diff = if s.any_output > 0.0 {
                Some(abs_diff / s.any_output)
            } else if abs_diff == 0.0 {
                Some(0.0)
            } else {
                None
            };
            SiteComparison {
                site: r.site,
                analytical_any: r.aggregate_any,
                analytical_max: r.aggregate_max,
                simulated: s.any_output,
                abs_diff,
                rel_diff,
            }
        })
        .collect();

    let mut by_sp_method = Vec::new();
    for method in [SpMethod::Independent, SpMethod::MonteCarlo, SpMethod::Exact] {
        let accuracy = if method == cfg.sp_method {
            Ok(site_accuracy(&reports, &sims, aggregation))
        } else {
            compute_sp(netlist, method, cfg)
                .and_then(|sp| analyze_sites(netlist, &sp, &sites))
                .map(|r| site_accuracy(&r, &sims, aggregation))
                .map_err(|e| e.to_string())
        };
        by_sp_method.push(MethodAccuracy { method, accuracy });
    }

    Ok(Comparison {
        sp_method: cfg.sp_method,
        aggregation,
        reference,
        vectors,
        seed: (reference == SimMethod::MonteCarlo).then_some(cfg.seed),
        accuracy: site_accuracy(&reports, &sims, aggregation),
        per_output: output_accuracy(netlist, &reports, &sims),
        sites: rows,
        by_sp_method,
        analytical_time,
        simulation_time,
    })
}
