//! One line per acceptance criterion, `PASS` or `FAIL` with the measured
//! value. Set `ACCEPTANCE_STRICT=1` to turn any failure into a nonzero exit.

use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use surface17_ion::circuit::{build_cnot_reference_circuit, run_round, vector_to_frame};
use surface17_ion::code::{build_lookup_tables, DataErrorVector, LookupTable};
use surface17_ion::layout::{
    anneal_restarts, equilibrium_positions, evaluate_schedule, gamma4_scan, layout_cost, AnnealConfig, LayoutMode,
    Objective, TrapParams,
};
use surface17_ion::noise::AuxSource;
use surface17_ion::pauli::NUM_DATA;
use surface17_ion::sampler::{
    category_weights, crossing, direct_monte_carlo_with, estimate_with, geometric_bisect, CircuitExperiment,
    EstimatorConfig, NoisyCircuit, RateCache, SubsetExperiment, NUM_CATEGORIES,
};
use surface17_ion::{build_surface17_circuit, ChainLayout, CycleSimulator, NoiseModel, NoiseParams, PrintedLayout, Protocol};

struct Report {
    failed: usize,
    total: usize,
}

impl Report {
    fn line(&mut self, name: &str, pass: bool, detail: String, started: Instant) {
        self.total += 1;
        if !pass {
            self.failed += 1;
        }
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("{verdict}  {name:<34} {detail}  [{:.1}s]", started.elapsed().as_secs_f64());
    }
}

const SWEEP: [f64; 7] = [1e-3, 1.5e-3, 2e-3, 3e-3, 4e-3, 5.5e-3, 8e-3];
const SHOTS: u64 = 300_000;

fn depolarizing_crossing(protocol: Protocol) -> (Option<f64>, Vec<(f64, f64)>) {
    let circuit = build_cnot_reference_circuit(&ChainLayout::printed(PrintedLayout::MT));
    let sim = CycleSimulator::new(&circuit, protocol);
    let points: Vec<(f64, f64)> = SWEEP
        .iter()
        .map(|&p| {
            let noisy = NoisyCircuit::new(&circuit, &NoiseModel::Depolarizing { p }, protocol.max_rounds());
            (p, direct_monte_carlo_with(&sim, &noisy, SHOTS, 17).rate())
        })
        .collect();
    (crossing(&points), points)
}

fn pseudothreshold(report: &mut Report, name: &str, protocol: Protocol, target: f64) {
    let t = Instant::now();
    let (x, points) = depolarizing_crossing(protocol);
    let (lo, hi) = (0.7 * target, 1.3 * target);
    let ratios: Vec<String> = points.iter().map(|(p, pl)| format!("{:.2}", pl / p)).collect();
    let detail = match x {
        Some(x) => format!("crossing {x:.3e}, want [{lo:.2e}, {hi:.2e}]; p_L/p = {}", ratios.join(" ")),
        None => format!("no crossing in sweep; p_L/p = {}", ratios.join(" ")),
    };
    report.line(name, x.is_some_and(|x| (lo..=hi).contains(&x)), detail, t);
}

fn single_faults(report: &mut Report) {
    let t = Instant::now();
    let circuit = build_surface17_circuit(&ChainLayout::printed(PrintedLayout::MT));
    let counts: Vec<usize> = [Protocol::AdaptiveLookup, Protocol::MatchingTable]
        .iter()
        .map(|&p| CycleSimulator::new(&circuit, p).single_fault_failures(&circuit).len())
        .collect();
    report.line(
        "single-fault exhaustiveness",
        counts.iter().all(|&c| c == 0),
        format!("failing faults: lookup {}, matching {}", counts[0], counts[1]),
        t,
    );
}

/// Minimum-weight tables found by measuring every half-pattern with the
/// compiled round.
fn brute_force_tables() -> LookupTable {
    let circuit = build_surface17_circuit(&ChainLayout::printed(PrintedLayout::MT));
    let mut x_table = [None::<u16>; 16];
    let mut z_table = [None::<u16>; 16];
    // weight first, then the value with qubit 0 as the most significant bit
    let order = |m: u16| (m.count_ones(), (0..NUM_DATA).fold(0u32, |acc, q| acc << 1 | u32::from(m >> q & 1)));
    for mask in 0u16..1 << NUM_DATA {
        for (is_x, table) in [(true, &mut x_table), (false, &mut z_table)] {
            let v = if is_x { DataErrorVector::from_parts(mask, 0) } else { DataErrorVector::from_parts(0, mask) };
            let (s, _) = run_round(vector_to_frame(&v), &circuit, &[]).expect("no injected faults");
            let key = if is_x { s.x_half() } else { s.z_half() } as usize;
            let slot = &mut table[key];
            if slot.is_none_or(|cur| order(mask) < order(cur)) {
                *slot = Some(mask);
            }
        }
    }
    LookupTable { x_table: x_table.map(|m| m.unwrap()), z_table: z_table.map(|m| m.unwrap()) }
}

fn lookup_oracle(report: &mut Report) {
    let t = Instant::now();
    let built = build_lookup_tables().to_canonical_text();
    let oracle = brute_force_tables().to_canonical_text();
    report.line(
        "lookup-table oracle equivalence",
        built == oracle,
        format!("{} bytes, identical: {}", built.len(), built == oracle),
        t,
    );
}

fn ion_circuit() -> surface17_ion::TimedCircuit {
    build_surface17_circuit(&ChainLayout::printed(PrintedLayout::MA))
}

fn estimator() -> EstimatorConfig {
    EstimatorConfig { weight_cutoff: 1e-6, samples_per_subset: 30_000, seed: 2024 }
}

fn green_curve(report: &mut Report) {
    let t = Instant::now();
    let exp = CircuitExperiment::new(&ion_circuit(), &NoiseModel::IonTrap(NoiseParams::green_curve()), Protocol::AdaptiveLookup);
    let e = estimate_with(&exp, &estimator(), None);
    let ranked = e.ranked();
    let top: Vec<[usize; 5]> = ranked.iter().take(2).map(|r| r.index.counts()).collect();
    let want = [[0, 0, 1, 0, 1], [0, 0, 1, 1, 0]];
    let rate_ok = (1e-3 / 1.5..=1.5e-3).contains(&e.p_l);
    let rank_ok = want.iter().all(|w| top.contains(w));
    let pos = |w: &[usize; 5]| ranked.iter().position(|r| &r.index.counts() == w).map_or(0, |i| i + 1);
    report.line(
        "green-curve reproduction",
        rate_ok && rank_ok,
        format!(
            "p_L {:.3e} ± {:.1e} (want 1e-3 within x1.5); top two {:?} {:?}; (0,0,1,0,1) rank {}, (0,0,1,1,0) rank {}",
            e.p_l,
            e.stderr(),
            top[0],
            top[1],
            pos(&want[0]),
            pos(&want[1])
        ),
        t,
    );
}

fn critical_rates(report: &mut Report) {
    let t = Instant::now();
    let circuit = ion_circuit();
    let sim = CycleSimulator::new(&circuit, Protocol::AdaptiveLookup);
    let cfg = estimator();
    let mut cache = RateCache::new();
    let mut parts = Vec::new();
    let mut all = true;
    for (source, tol, lo, hi) in
        [(AuxSource::Heating, 8.0, 0.5, 500.0), (AuxSource::Depolarizing, 3e-4, 1e-6, 1e-2), (AuxSource::Dephasing, 5.0, 0.1, 500.0)]
    {
        let mut p_l = |v: f64| {
            let exp = CircuitExperiment::with_simulator(sim.clone(), &circuit, &NoiseModel::IonTrap(source.params(1e-3, v)));
            estimate_with(&exp, &cfg, Some(&mut cache)).p_l - 1e-3
        };
        let root = geometric_bisect(&mut p_l, lo, hi, 24);
        let want = source.green_value();
        let ok = root.is_some_and(|r| (r - want).abs() <= tol);
        all &= ok;
        parts.push(match root {
            Some(r) => format!("{} {r:.3e} (want {want:e} ± {tol:e})", source.name()),
            None => format!("{} not bracketed", source.name()),
        });
    }
    report.line("single-source critical rates", all, parts.join("; "), t);
}

fn is_vs_mc(report: &mut Report) {
    let t = Instant::now();
    let circuit = ion_circuit();
    let sim = CycleSimulator::new(&circuit, Protocol::AdaptiveLookup);
    let mut parts = Vec::new();
    let mut all = true;
    for p_xx in [1.5e-3, 3e-3, 6e-3] {
        let noise = NoiseModel::IonTrap(NoiseParams::coupled(p_xx, 0.0, 0.0, 0.0));
        let exp = CircuitExperiment::with_simulator(sim.clone(), &circuit, &noise);
        let is = estimate_with(&exp, &estimator(), None);
        let mc = direct_monte_carlo_with(&sim, &exp.noisy, 1_000_000, 99);
        let sigma = (is.stderr().powi(2) + mc.stderr().powi(2)).sqrt();
        let z = (is.p_l - mc.rate()).abs() / sigma;
        all &= z <= 2.0;
        parts.push(format!("p_xx {p_xx:e}: IS {:.3e} MC {:.3e} ({z:.2} sigma)", is.p_l, mc.rate()));
    }
    report.line("importance sampling vs direct MC", all, parts.join("; "), t);
}

fn equilibrium(report: &mut Report) {
    let t = Instant::now();
    let mean = equilibrium_positions(TrapParams::operating_point()).map(|c| c.mean_spacing());
    let values: Vec<f64> = (0..=60).map(|i| 0.5 + 0.01 * i as f64).collect();
    let argmin = gamma4_scan(25.0, 17, &values)
        .ok()
        .and_then(|s| s.into_iter().min_by(|a, b| a.1.total_cmp(&b.1)).map(|(g, _)| g));
    let ok = matches!(mean, Ok(m) if (m - 8.2).abs() <= 0.2) && argmin.is_some_and(|g| (0.80..=0.92).contains(&g));
    report.line(
        "equilibrium chain",
        ok,
        format!(
            "mean spacing {} um (want 8.2 ± 0.2); scan minimum at gamma4 = {} (want [0.80, 0.92])",
            mean.as_ref().map_or_else(|e| e.to_string(), |m| format!("{m:.3}")),
            argmin.map_or_else(|| "none".to_string(), |g| format!("{g:.2}"))
        ),
        t,
    );
}

fn schedules(report: &mut Report) {
    let t = Instant::now();
    let table = [
        (PrintedLayout::SM, 7650.0, 200.0, 100.0),
        (PrintedLayout::SA, 7240.0, 200.0, 100.0),
        (PrintedLayout::MM, 3080.0, 1200.0, 500.0),
        (PrintedLayout::MA, 2300.0, 1800.0, 800.0),
        (PrintedLayout::MT, 4300.0, 700.0, 300.0),
    ];
    let mut parts = Vec::new();
    let mut all = true;
    for (p, logic, shuttle, measure) in table {
        let s = evaluate_schedule(&ChainLayout::printed(p), false);
        let dev = (s.logic_us - logic).abs() / logic;
        let ok = s.shuttle_us == shuttle && s.measure_us == measure && dev <= 0.10;
        all &= ok;
        parts.push(format!("{p:?} {}/{}/{} ({:+.1}%)", s.logic_us, s.shuttle_us, s.measure_us, 100.0 * (s.logic_us - logic) / logic));
    }
    report.line("schedule reproduction", all, parts.join("; "), t);
}

fn annealer(report: &mut Report) {
    let t = Instant::now();
    let mut parts = Vec::new();
    let mut all = true;
    for (p, objective) in [
        (PrintedLayout::MM, Objective::MaxDist),
        (PrintedLayout::MA, Objective::AvgDist),
        (PrintedLayout::MT, Objective::TotalTime),
    ] {
        let oracle = layout_cost(&ChainLayout::printed(p), objective);
        let runs = anneal_restarts(LayoutMode::Mixed, objective, &AnnealConfig::default(), 31, 10);
        let hits = runs.iter().filter(|r| r.cost <= oracle + 1e-9).count();
        all &= hits >= 8;
        parts.push(format!("{objective}: {hits}/10 at or below {oracle:.3}"));
    }
    report.line("annealer quality", all, parts.join("; "), t);
}

/// Twelve independent sites spread over the five categories; fails when two
/// or more odd-numbered sites are in error.
struct Toy {
    probs: [Vec<f64>; NUM_CATEGORIES],
}

impl Toy {
    fn new() -> Self {
        Toy {
            probs: [
                vec![0.05, 0.02, 0.1],
                vec![0.01, 0.03, 0.002],
                vec![0.2, 0.001],
                vec![1e-4, 0.05],
                vec![0.3, 0.004],
            ],
        }
    }

    fn global(&self, c: usize, j: usize) -> usize {
        self.probs[..c].iter().map(Vec::len).sum::<usize>() + j
    }

    fn fails_global(set: u32) -> bool {
        (set & 0b1010_1010_1010).count_ones() >= 2
    }
}

impl SubsetExperiment for Toy {
    fn category_probabilities(&self) -> [Vec<f64>; NUM_CATEGORIES] {
        self.probs.clone()
    }

    fn shape_key(&self) -> u64 {
        0
    }

    fn fails(&self, chosen: &[Vec<usize>; NUM_CATEGORIES], _rng: &mut ChaCha8Rng) -> bool {
        let mut set = 0u32;
        for (c, js) in chosen.iter().enumerate() {
            for &j in js {
                set |= 1 << self.global(c, j);
            }
        }
        Toy::fails_global(set)
    }
}

fn subset_normalization(report: &mut Report) {
    let t = Instant::now();
    let noisy = NoisyCircuit::new(&ion_circuit(), &NoiseModel::IonTrap(NoiseParams::green_curve()), 2);
    let worst_sum = noisy
        .category_probabilities()
        .iter()
        .map(|p| (category_weights(p, p.len()).iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);

    let toy = Toy::new();
    let flat: Vec<(usize, f64)> = toy.probs.iter().enumerate().flat_map(|(c, ps)| ps.iter().map(move |&p| (c, p))).collect();
    let cfg = EstimatorConfig { weight_cutoff: 1e-6, samples_per_subset: 20_000, seed: 5 };
    let est = estimate_with(&toy, &cfg, None);
    let included: std::collections::HashSet<[usize; 5]> = est.subsets.iter().map(|s| s.index.counts()).collect();
    let (mut omitted, mut exact_fail) = (0.0, 0.0);
    for set in 0u32..1 << flat.len() {
        let mut prob = 1.0;
        let mut counts = [0usize; NUM_CATEGORIES];
        for (i, &(c, p)) in flat.iter().enumerate() {
            if set >> i & 1 == 1 {
                prob *= p;
                counts[c] += 1;
            } else {
                prob *= 1.0 - p;
            }
        }
        if !included.contains(&counts) {
            omitted += prob;
        }
        if Toy::fails_global(set) {
            exact_fail += prob;
        }
    }
    let bound_ok = (est.truncation_bound - omitted).abs() <= 1e-12;
    let rate_ok = exact_fail >= est.p_l - 4.0 * est.stderr() && exact_fail <= est.p_l + est.truncation_bound + 4.0 * est.stderr();
    report.line(
        "subset-weight normalization",
        worst_sum <= 1e-12 && bound_ok && rate_ok,
        format!(
            "max |sum W - 1| = {worst_sum:.1e}; toy bound {:.3e} vs omitted {omitted:.3e}; toy p_L {:.4e} vs exact {exact_fail:.4e}",
            est.truncation_bound, est.p_l
        ),
        t,
    );
}

fn main() {
    let mut report = Report { failed: 0, total: 0 };
    pseudothreshold(&mut report, "lookup-table pseudothreshold", Protocol::AdaptiveLookup, 3.0e-3);
    pseudothreshold(&mut report, "matching-table pseudothreshold", Protocol::MatchingTable, 5.5e-3);
    single_faults(&mut report);
    lookup_oracle(&mut report);
    green_curve(&mut report);
    critical_rates(&mut report);
    is_vs_mc(&mut report);
    equilibrium(&mut report);
    schedules(&mut report);
    annealer(&mut report);
    subset_normalization(&mut report);
    println!("{} of {} criteria met", report.total - report.failed, report.total);
    if report.failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
