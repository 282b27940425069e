//! One function per subcommand. Each writes its files into `out` and returns
//! the summary that goes into the manifest.

use anyhow::Context;
use serde_json::{json, Value};
use surface17_ion::circuit::build_cnot_reference_circuit;
use surface17_ion::layout::{
    anneal_restarts, equilibrium_positions, evaluate_schedule, gamma4_scan, layout_cost, TrapParams,
};
use surface17_ion::noise::AuxSource;
use surface17_ion::sampler::{
    crossing, direct_monte_carlo_with, estimate_with, geometric_bisect, write_subset_csv, CircuitExperiment,
    NoisyCircuit, RateCache,
};
use surface17_ion::{
    build_lookup_tables, build_surface17_circuit, CycleSimulator, MatchingTable, NoiseModel, Protocol, TimedCircuit,
};

use crate::config::Config;
use crate::output::{Axes, Csv, OutputDir};
use crate::{row, ConfigError};

pub fn decode_tables(cfg: &Config, out: &mut OutputDir) -> anyhow::Result<Value> {
    let (layout, label) = cfg.layout()?;
    let lookup = build_lookup_tables().to_canonical_text();
    let matching = MatchingTable::build(&build_surface17_circuit(&layout)).to_text();
    out.write("lookup_table.txt", &lookup)?;
    out.write("matching_table.txt", &matching)?;
    Ok(json!({
        "layout": label,
        "lookup_entries": lookup.lines().count(),
        "matching_entries": matching.lines().count(),
    }))
}

pub fn single_fault_audit(cfg: &Config, out: &mut OutputDir) -> anyhow::Result<Value> {
    let (layout, label) = cfg.layout()?;
    let mut csv = Csv::new("circuit,protocol,rounds,sites,faults_checked,failures");
    let mut failures = 0usize;
    for (name, circuit) in [("ms", build_surface17_circuit(&layout)), ("cnot", build_cnot_reference_circuit(&layout))] {
        let per_round: usize = circuit.sites.iter().map(|s| if s.arity == 2 { 15 } else { 3 }).sum();
        for protocol in [Protocol::AdaptiveLookup, Protocol::MatchingTable] {
            let bad = CycleSimulator::new(&circuit, protocol).single_fault_failures(&circuit);
            failures += bad.len();
            let rounds = protocol.max_rounds();
            row!(csv, name, protocol.name(), rounds, circuit.sites.len(), rounds * per_round, bad.len());
        }
    }
    out.write("audit.csv", csv.into_string())?;
    Ok(json!({ "layout": label, "failing_single_faults": failures }))
}

fn sweep_circuit(cfg: &Config) -> anyhow::Result<TimedCircuit> {
    let (layout, _) = cfg.layout()?;
    match cfg.sweep.circuit.to_ascii_lowercase().as_str() {
        "cnot" => Ok(build_cnot_reference_circuit(&layout)),
        "ms" => Ok(build_surface17_circuit(&layout)),
        other => Err(ConfigError(format!("sweep.circuit must be `cnot` or `ms`, got {other:?}")).into()),
    }
}

pub fn depolarizing_threshold(cfg: &Config, out: &mut OutputDir) -> anyhow::Result<Value> {
    let seed = cfg.require_seed()?;
    let points = cfg.sweep_points()?;
    let protocols = cfg.protocols()?;
    if cfg.sweep.shots == 0 {
        return Err(ConfigError("sweep.shots must be positive".into()).into());
    }
    let circuit = sweep_circuit(cfg)?;
    let mut csv = Csv::new("protocol,p,failures,shots,p_L,stderr");
    let mut crossings = serde_json::Map::new();
    for protocol in protocols {
        let sim = CycleSimulator::new(&circuit, protocol);
        let mut curve = Vec::new();
        for &p in &points {
            let noisy = NoisyCircuit::new(&circuit, &NoiseModel::Depolarizing { p }, protocol.max_rounds());
            let mc = direct_monte_carlo_with(&sim, &noisy, cfg.sweep.shots, seed);
            row!(csv, protocol.name(), p, mc.failures, mc.shots, mc.rate(), mc.stderr());
            curve.push((p, mc.rate()));
        }
        crossings.insert(protocol.name().into(), json!(crossing(&curve)));
    }
    out.write_plot("threshold.csv", csv, Axes { x: "p", y: "p_L", series: Some("protocol"), log: true })?;
    Ok(json!({ "circuit": cfg.sweep.circuit, "crossing": crossings }))
}

/// Bisection bracket for the critical value of each source.
fn bracket(source: AuxSource) -> (f64, f64) {
    match source {
        AuxSource::Heating => (0.5, 500.0),
        AuxSource::Depolarizing => (1e-6, 1e-2),
        AuxSource::Dephasing => (0.1, 500.0),
    }
}

pub fn single_source_sweep(cfg: &Config, out: &mut OutputDir) -> anyhow::Result<Value> {
    let seed = cfg.require_seed()?;
    let est = cfg.estimator(seed)?;
    let points = cfg.sweep_points()?;
    let protocol = cfg.protocol()?;
    let source = cfg.source()?;
    let value = cfg.sweep.value.unwrap_or_else(|| source.green_value());
    let (layout, label) = cfg.layout()?;
    let circuit = build_surface17_circuit(&layout);
    let sim = CycleSimulator::new(&circuit, protocol);
    let mut cache = RateCache::new();
    let mut run = |p_xx: f64, v: f64| {
        let noise = NoiseModel::IonTrap(source.params(p_xx, v));
        noise.validate().map_err(|e| ConfigError(e.to_string()))?;
        let exp = CircuitExperiment::with_simulator(sim.clone(), &circuit, &noise);
        Ok::<_, ConfigError>(estimate_with(&exp, &est, Some(&mut cache)))
    };

    let mut csv = Csv::new("source,value,p_xx,p_L,stderr,truncation_bound,subsets");
    let mut curve = Vec::new();
    for &p in &points {
        let e = run(p, value)?;
        row!(csv, source.name(), value, p, e.p_l, e.stderr(), e.truncation_bound, e.subsets.len());
        curve.push((p, e.p_l));
    }
    out.write_plot("sweep.csv", csv, Axes { x: "p_xx", y: "p_L", series: Some("source"), log: true })?;

    let mut result = json!({
        "layout": label,
        "protocol": protocol.name(),
        "source": source.name(),
        "value": value,
        "crossing": crossing(&curve),
    });
    if cfg.sweep.critical {
        let target = cfg.sweep.critical_p_xx;
        let (lo, hi) = bracket(source);
        let mut failed = None;
        let root = geometric_bisect(
            |v| match run(target, v) {
                Ok(e) => e.p_l - target,
                Err(err) => {
                    failed.get_or_insert(err);
                    f64::INFINITY
                }
            },
            lo,
            hi,
            24,
        );
        if let Some(err) = failed {
            return Err(err.into());
        }
        result["critical"] = json!({ "p_xx": target, "value": root });
    }
    Ok(result)
}

pub fn subset_table(cfg: &Config, out: &mut OutputDir) -> anyhow::Result<Value> {
    let seed = cfg.require_seed()?;
    let est = cfg.estimator(seed)?;
    let protocol = cfg.protocol()?;
    let (layout, label) = cfg.layout()?;
    let noise = NoiseModel::IonTrap(cfg.noise.params());
    noise.validate().map_err(|e| ConfigError(e.to_string()))?;
    let circuit = build_surface17_circuit(&layout);
    let e = estimate_with(&CircuitExperiment::new(&circuit, &noise, protocol), &est, None);
    let ranked = e.ranked();
    let mut buf = Vec::new();
    write_subset_csv(&mut buf, &ranked).context("formatting subsets")?;
    out.write("subsets.csv", buf)?;
    let top: Vec<String> = ranked.iter().take(5).map(|s| s.index.to_string()).collect();
    Ok(json!({
        "layout": label,
        "protocol": protocol.name(),
        "p_L": e.p_l,
        "stderr": e.stderr(),
        "truncation_bound": e.truncation_bound,
        "subsets": e.subsets.len(),
        "top_subsets": top,
    }))
}

pub fn layout_anneal(cfg: &Config, out: &mut OutputDir) -> anyhow::Result<Value> {
    let seed = cfg.require_seed()?;
    let (mode, objective, anneal) = cfg.anneal()?;
    let runs = anneal_restarts(mode, objective, &anneal, seed, cfg.anneal.restarts);
    let mut csv = Csv::new("restart,initial_temperature,initial_cost,cost,ordering");
    for (i, r) in runs.iter().enumerate() {
        let ordering: Vec<String> = r.layout.ordering().iter().map(|q| q.to_string()).collect();
        row!(csv, i, r.initial_temperature, r.initial_cost, r.cost, ordering.join(" "));
    }
    out.write("restarts.csv", csv.into_string())?;
    // first restart wins ties so the choice does not depend on scheduling
    let best = runs.iter().fold(&runs[0], |b, r| if r.cost < b.cost { r } else { b });
    out.write("best_layout.txt", best.layout.to_text())?;
    let s = evaluate_schedule(&best.layout, true);
    Ok(json!({
        "mode": mode.to_string(),
        "objective": objective.to_string(),
        "best_cost": best.cost,
        "best_total_us": s.total_us,
        "best_max_dist": layout_cost(&best.layout, surface17_ion::layout::Objective::MaxDist),
        "best_avg_dist": layout_cost(&best.layout, surface17_ion::layout::Objective::AvgDist),
    }))
}

pub fn equilibrium(cfg: &Config, out: &mut OutputDir) -> anyhow::Result<Value> {
    let t = &cfg.trap;
    let trap = TrapParams::new(t.l0, t.gamma4, t.n).map_err(|e| ConfigError(e.to_string()))?;
    let chain = equilibrium_positions(trap)?;
    let mut csv = Csv::new("ion,position_um");
    for (i, x) in chain.positions.iter().enumerate() {
        row!(csv, i, *x);
    }
    out.write_plot("positions.csv", csv, Axes { x: "position_um", y: "ion", series: None, log: false })?;

    if !(t.scan_step > 0.0 && t.scan_start > 0.0 && t.scan_stop >= t.scan_start) {
        return Err(ConfigError("trap scan needs 0 < scan_start <= scan_stop and scan_step > 0".into()).into());
    }
    let steps = ((t.scan_stop - t.scan_start) / t.scan_step + 1e-9).floor() as usize;
    let values: Vec<f64> = (0..=steps).map(|i| t.scan_start + t.scan_step * i as f64).collect();
    let scan = gamma4_scan(t.l0, t.n, &values)?;
    let mut csv = Csv::new("gamma4,relative_spacing_std");
    for &(g, s) in &scan {
        row!(csv, g, s);
    }
    out.write_plot("scan.csv", csv, Axes { x: "gamma4", y: "relative_spacing_std", series: None, log: false })?;
    let argmin = scan.iter().min_by(|a, b| a.1.total_cmp(&b.1)).map(|&(g, _)| g);
    Ok(json!({
        "mean_spacing_um": chain.mean_spacing(),
        "relative_spacing_std": chain.relative_spacing_std(),
        "residual": chain.residual,
        "iterations": chain.iterations,
        "scan_argmin_gamma4": argmin,
    }))
}

pub fn schedule(cfg: &Config, out: &mut OutputDir) -> anyhow::Result<Value> {
    let (layout, label) = cfg.layout()?;
    let serial = evaluate_schedule(&layout, false);
    let parallel = evaluate_schedule(&layout, true);
    let mut csv = Csv::new("component,serial_us,parallel_us");
    row!(csv, "Logic", serial.logic_us, parallel.logic_us);
    row!(csv, "Shuttle", serial.shuttle_us, parallel.shuttle_us);
    row!(csv, "Measure", serial.measure_us, parallel.measure_us);
    row!(csv, "Total", serial.total_us, parallel.total_us);
    out.write("schedule.csv", csv.into_string())?;
    out.write("circuit.txt", build_surface17_circuit(&layout).dump())?;
    Ok(json!({
        "layout": label,
        "serial_total_us": serial.total_us,
        "parallel_total_us": parallel.total_us,
        "measurement_episodes": serial.episodes.len(),
    }))
}
