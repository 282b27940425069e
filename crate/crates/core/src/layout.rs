//! Ion-chain physics and scheduling.
//!
//! Equilibrium positions in the anharmonic trap, the gate-time fit, serial
//! and parallel schedule evaluation with shuttle/measure costs, and
//! simulated annealing of the qubit-to-ion map.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::{surface17_gate_list, Gate, GateKind, TimedGate, SINGLE_QUBIT_GATE_US};
use crate::error::{Error, Result};
use crate::pauli::{NUM_DATA, NUM_QUBITS};

pub const SHUTTLE_HOP_US: f64 = 100.0;
pub const MEASURE_US: f64 = 100.0;

// ---------------------------------------------------------------- equilibrium

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapParams {
    /// Length unit in micrometers.
    pub l0: f64,
    pub gamma4: f64,
    pub n: usize,
}

impl TrapParams {
    pub fn new(l0: f64, gamma4: f64, n: usize) -> Result<Self> {
        if !(l0 > 0.0 && l0.is_finite()) {
            return Err(Error::InvalidTrap(format!("l0 must be positive, got {l0}")));
        }
        if !(gamma4 > 0.0 && gamma4.is_finite()) {
            return Err(Error::InvalidTrap(format!("gamma4 must be positive, got {gamma4}")));
        }
        if n < 2 {
            return Err(Error::InvalidTrap(format!("need at least 2 ions, got {n}")));
        }
        Ok(TrapParams { l0, gamma4, n })
    }

    /// The operating point of the 17-ion chain.
    pub fn operating_point() -> Self {
        TrapParams { l0: 25.0, gamma4: 0.86, n: NUM_QUBITS }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumChain {
    pub trap: TrapParams,
    /// Micrometers, ascending.
    pub positions: Vec<f64>,
    /// Max-norm of the dimensionless gradient at the solution.
    pub residual: f64,
    pub iterations: usize,
}

impl EquilibriumChain {
    pub fn spacings(&self) -> Vec<f64> {
        self.positions.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn mean_spacing(&self) -> f64 {
        let s = self.spacings();
        s.iter().sum::<f64>() / s.len() as f64
    }

    /// Standard deviation of the spacings over their mean.
    pub fn relative_spacing_std(&self) -> f64 {
        let s = self.spacings();
        let mean = self.mean_spacing();
        let var = s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / s.len() as f64;
        var.sqrt() / mean
    }
}

/// Dimensionless potential `Σ(−u²/2 + γ₄u⁴/4) + Σ_{i<j} 1/|u_i − u_j|`.
pub fn dimensionless_potential(u: &[f64], gamma4: f64) -> f64 {
    let mut v = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        v += -ui * ui / 2.0 + gamma4 * ui.powi(4) / 4.0;
        for &uj in &u[i + 1..] {
            v += 1.0 / (ui - uj).abs();
        }
    }
    v
}

pub fn dimensionless_gradient(u: &[f64], gamma4: f64) -> Vec<f64> {
    let n = u.len();
    let mut g = vec![0.0; n];
    for i in 0..n {
        g[i] = -u[i] + gamma4 * u[i].powi(3);
        for j in 0..n {
            if i != j {
                let d = u[i] - u[j];
                g[i] -= d.signum() / (d * d);
            }
        }
    }
    g
}

fn hessian(u: &[f64], gamma4: f64) -> DMatrix<f64> {
    let n = u.len();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = -1.0 + 3.0 * gamma4 * u[i] * u[i];
        for j in 0..n {
            if i != j {
                let c = 2.0 / (u[i] - u[j]).abs().powi(3);
                h[(i, i)] += c;
                h[(i, j)] = -c;
            }
        }
    }
    h
}

const NEWTON_MAX_ITER: usize = 500;
const GRADIENT_TOL: f64 = 1e-10;

/// Equilibrium positions by damped Newton iteration from a uniform start.
pub fn equilibrium_positions(trap: TrapParams) -> Result<EquilibriumChain> {
    TrapParams::new(trap.l0, trap.gamma4, trap.n)?;
    let n = trap.n;
    let g4 = trap.gamma4;
    // the outer ions sit roughly where the quartic wall balances the chain
    let half = (1.0 / g4).sqrt() + 0.1 * n as f64;
    let mut u: Vec<f64> = (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect();
    let max_norm = |g: &[f64]| g.iter().fold(0.0f64, |m, x| m.max(x.abs()));

    let mut grad = dimensionless_gradient(&u, g4);
    for it in 0..NEWTON_MAX_ITER {
        let gnorm = max_norm(&grad);
        if gnorm < GRADIENT_TOL {
            return Ok(finish(trap, u, gnorm, it));
        }
        let mut h = hessian(&u, g4);
        let gv = DVector::from_column_slice(&grad);
        // Levenberg shift until the Hessian is positive definite
        let mut shift = 0.0;
        let step = loop {
            if let Some(ch) = h.clone().cholesky() {
                break -ch.solve(&gv);
            }
            let bump = if shift == 0.0 { 1e-3 } else { shift * 9.0 };
            for i in 0..n {
                h[(i, i)] += bump;
            }
            shift += bump;
        };
        let v0 = dimensionless_potential(&u, g4);
        let mut alpha = 1.0;
        let mut accepted = false;
        while alpha > 1e-12 {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(a, s)| a + alpha * s).collect();
            let ordered = trial.windows(2).all(|w| w[0] < w[1]);
            if ordered && dimensionless_potential(&trial, g4) <= v0 + 1e-14 * v0.abs() {
                u = trial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(Error::NonConvergence { iterations: it, gradient: gnorm });
        }
        grad = dimensionless_gradient(&u, g4);
    }
    Err(Error::NonConvergence { iterations: NEWTON_MAX_ITER, gradient: max_norm(&grad) })
}

fn finish(trap: TrapParams, mut u: Vec<f64>, residual: f64, iterations: usize) -> EquilibriumChain {
    u.sort_by(f64::total_cmp);
    EquilibriumChain {
        trap,
        positions: u.iter().map(|x| x * trap.l0).collect(),
        residual,
        iterations,
    }
}

/// Relative spacing spread for each `gamma4` in `values`.
pub fn gamma4_scan(l0: f64, n: usize, values: &[f64]) -> Result<Vec<(f64, f64)>> {
    values
        .iter()
        .map(|&g| {
            let chain = equilibrium_positions(TrapParams::new(l0, g, n)?)?;
            Ok((g, chain.relative_spacing_std()))
        })
        .collect()
}

// ----------------------------------------------------------------- gate time

/// XX gate time in microseconds for ions `d` positions apart.
pub fn gate_time(d: usize) -> Result<f64> {
    if !(1..NUM_QUBITS).contains(&d) {
        return Err(Error::DistanceOutOfRange(d));
    }
    Ok(10.0 + 38.0 * d as f64)
}

// -------------------------------------------------------------------- layout

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayoutMode {
    Separated,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    MaxDist,
    AvgDist,
    TotalTime,
}

impl fmt::Display for LayoutMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LayoutMode::Separated => "separated",
            LayoutMode::Mixed => "mixed",
        })
    }
}

impl std::str::FromStr for LayoutMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "separated" | "s" => Ok(LayoutMode::Separated),
            "mixed" | "m" => Ok(LayoutMode::Mixed),
            _ => Err(Error::InvalidLayout(format!("unknown mode {s:?}"))),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::MaxDist => "max-dist",
            Objective::AvgDist => "avg-dist",
            Objective::TotalTime => "total-time",
        })
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "max-dist" | "maxdist" | "m" => Ok(Objective::MaxDist),
            "avg-dist" | "avgdist" | "a" => Ok(Objective::AvgDist),
            "total-time" | "totaltime" | "t" => Ok(Objective::TotalTime),
            _ => Err(Error::InvalidLayout(format!("unknown objective {s:?}"))),
        }
    }
}

/// The five orderings printed with the trap timing table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrintedLayout {
    SM,
    SA,
    MM,
    MA,
    MT,
}

impl PrintedLayout {
    pub const ALL: [PrintedLayout; 5] =
        [PrintedLayout::SM, PrintedLayout::SA, PrintedLayout::MT, PrintedLayout::MM, PrintedLayout::MA];

    pub fn ordering(self) -> [usize; NUM_QUBITS] {
        match self {
            PrintedLayout::SM => [1, 2, 5, 8, 0, 4, 3, 6, 7, 9, 12, 11, 14, 15, 13, 10, 16],
            PrintedLayout::SA => [0, 2, 6, 8, 1, 4, 3, 7, 5, 11, 12, 10, 15, 13, 14, 9, 16],
            PrintedLayout::MM => [5, 15, 2, 12, 14, 9, 8, 1, 4, 7, 11, 3, 13, 16, 0, 10, 6],
            PrintedLayout::MA => [2, 9, 1, 12, 5, 15, 8, 14, 4, 11, 0, 10, 3, 13, 7, 16, 6],
            PrintedLayout::MT => [10, 15, 9, 5, 0, 1, 11, 12, 14, 7, 4, 3, 8, 2, 6, 13, 16],
        }
    }

    pub fn mode(self) -> LayoutMode {
        match self {
            PrintedLayout::SM | PrintedLayout::SA => LayoutMode::Separated,
            _ => LayoutMode::Mixed,
        }
    }

    pub fn objective(self) -> Objective {
        match self {
            PrintedLayout::SM | PrintedLayout::MM => Objective::MaxDist,
            PrintedLayout::SA | PrintedLayout::MA => Objective::AvgDist,
            PrintedLayout::MT => Objective::TotalTime,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PrintedLayout::SM => "SM",
            PrintedLayout::SA => "SA",
            PrintedLayout::MM => "MM",
            PrintedLayout::MA => "MA",
            PrintedLayout::MT => "MT",
        }
    }
}

impl std::str::FromStr for PrintedLayout {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PrintedLayout::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidLayout(format!("unknown printed layout {s:?}")))
    }
}

/// Assignment of code qubits to chain positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChainLayout {
    /// `ordering[position]` is the qubit id at that position.
    ordering: [usize; NUM_QUBITS],
    position: [usize; NUM_QUBITS],
    pub mode: LayoutMode,
    pub objective: Objective,
}

impl ChainLayout {
    pub fn new(ordering: [usize; NUM_QUBITS], mode: LayoutMode, objective: Objective) -> Result<Self> {
        let mut position = [usize::MAX; NUM_QUBITS];
        for (pos, &q) in ordering.iter().enumerate() {
            if q >= NUM_QUBITS || position[q] != usize::MAX {
                return Err(Error::InvalidLayout(format!("{ordering:?} is not a permutation of 0..17")));
            }
            position[q] = pos;
        }
        if mode == LayoutMode::Separated {
            let data: Vec<usize> = (0..NUM_DATA).map(|q| position[q]).collect();
            let lo = *data.iter().min().expect("nine data qubits");
            let hi = *data.iter().max().expect("nine data qubits");
            if hi - lo + 1 != NUM_DATA {
                return Err(Error::InvalidLayout("separated layout needs a contiguous data block".into()));
            }
        }
        Ok(ChainLayout { ordering, position, mode, objective })
    }

    pub fn printed(p: PrintedLayout) -> Self {
        ChainLayout::new(p.ordering(), p.mode(), p.objective()).expect("printed orderings are valid")
    }

    pub fn ordering(&self) -> &[usize; NUM_QUBITS] {
        &self.ordering
    }

    pub fn position_of(&self, qubit: usize) -> usize {
        self.position[qubit]
    }

    pub fn distance(&self, a: usize, b: usize) -> usize {
        self.position[a].abs_diff(self.position[b])
    }

    fn swap_positions(&mut self, i: usize, j: usize) {
        self.ordering.swap(i, j);
        self.position[self.ordering[i]] = i;
        self.position[self.ordering[j]] = j;
    }

    /// Two lines: `mode=... objective=...` then the 17 ids in chain order.
    pub fn to_text(&self) -> String {
        let ids: Vec<String> = self.ordering.iter().map(|q| q.to_string()).collect();
        format!("mode={} objective={}\n{}\n", self.mode, self.objective, ids.join(" "))
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse { line: 1, message: "empty layout".into() })?;
        let mut mode = None;
        let mut objective = None;
        for tok in header.split_whitespace() {
            match tok.split_once('=') {
                Some(("mode", v)) => mode = Some(v.parse::<LayoutMode>()?),
                Some(("objective", v)) => objective = Some(v.parse::<Objective>()?),
                _ => return Err(Error::Parse { line: 1, message: format!("unexpected token {tok:?}") }),
            }
        }
        let perm = lines.next().ok_or_else(|| Error::Parse { line: 2, message: "missing ordering".into() })?;
        let ids = perm
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse { line: 2, message: e.to_string() })?;
        let ordering: [usize; NUM_QUBITS] = ids
            .try_into()
            .map_err(|v: Vec<usize>| Error::Parse { line: 2, message: format!("expected 17 ids, got {}", v.len()) })?;
        let missing = |what: &str| Error::Parse { line: 1, message: format!("missing {what}") };
        ChainLayout::new(ordering, mode.ok_or_else(|| missing("mode"))?, objective.ok_or_else(|| missing("objective"))?)
    }
}

impl fmt::Display for ChainLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.ordering.iter().map(|q| q.to_string()).collect();
        f.write_str(&ids.join(" "))
    }
}

// ------------------------------------------------------------------ schedule

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScheduleMode {
    Serial,
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub logic_us: f64,
    pub shuttle_us: f64,
    pub measure_us: f64,
    pub total_us: f64,
    /// Start time of each gate of the round, in gate-list order.
    pub gate_starts: Vec<f64>,
    /// Ancilla ids measured together, in chain order.
    pub episodes: Vec<Vec<usize>>,
}

fn is_ancilla(q: usize) -> bool {
    q >= NUM_DATA
}

/// Maximal runs of adjacent ancilla ions, as position ranges.
fn ancilla_runs(layout: &ChainLayout) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for pos in 0..NUM_QUBITS {
        match (is_ancilla(layout.ordering[pos]), start) {
            (true, None) => start = Some(pos),
            (false, Some(s)) => {
                runs.push((s, pos - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, NUM_QUBITS - 1));
    }
    runs
}

/// Shuttle cost of each episode and of the final rejoin, for the cheaper of
/// the two chain orientations relative to the SPAM zone.
///
/// An episode at the chain end facing SPAM needs one hop; any other needs a
/// second hop to move the flanking data ions aside. Rejoining costs one hop
/// when everything measured sat at that end and two otherwise.
fn shuttle_plan(runs: &[(usize, usize)]) -> (Vec<f64>, f64) {
    let last = NUM_QUBITS - 1;
    let plan = |at_edge: &dyn Fn(&(usize, usize)) -> bool| {
        let hops: Vec<f64> = runs
            .iter()
            .map(|r| if at_edge(r) { SHUTTLE_HOP_US } else { 2.0 * SHUTTLE_HOP_US })
            .collect();
        let rejoin = if runs.iter().all(at_edge) { SHUTTLE_HOP_US } else { 2.0 * SHUTTLE_HOP_US };
        (hops, rejoin)
    };
    let right = plan(&|r: &(usize, usize)| r.1 == last);
    let left = plan(&|r: &(usize, usize)| r.0 == 0);
    let cost = |p: &(Vec<f64>, f64)| p.0.iter().sum::<f64>() + p.1;
    if cost(&left) < cost(&right) {
        left
    } else {
        right
    }
}

fn schedule_logic(gates: &[Gate], layout: &ChainLayout, mode: ScheduleMode) -> (Vec<f64>, Vec<f64>) {
    let duration = |g: &Gate| -> f64 {
        match g.kind {
            GateKind::Xx(_) | GateKind::Cnot => gate_time(layout.distance(g.qubits[0], g.qubits[1]))
                .expect("distinct qubits on a 17-ion chain"),
            GateKind::Prep | GateKind::Meas => 0.0,
            _ => SINGLE_QUBIT_GATE_US,
        }
    };
    let durations: Vec<f64> = gates.iter().map(duration).collect();
    let mut starts = vec![0.0; gates.len()];
    let mut free = [0.0f64; NUM_QUBITS];
    match mode {
        ScheduleMode::Serial => {
            // XX gates one after another; each block of consecutive rotations
            // runs as parallel layers after the preceding XX gates
            let mut barrier = 0.0f64;
            let mut block_end = 0.0f64;
            for (i, g) in gates.iter().enumerate() {
                match g.kind {
                    GateKind::Prep | GateKind::Meas => {}
                    GateKind::Xx(_) | GateKind::Cnot => {
                        let t = barrier.max(block_end);
                        starts[i] = t;
                        barrier = t + durations[i];
                        block_end = barrier;
                        for &q in g.support() {
                            free[q] = barrier;
                        }
                    }
                    _ => {
                        let q = g.qubits[0];
                        let t = barrier.max(free[q]);
                        starts[i] = t;
                        free[q] = t + durations[i];
                        block_end = block_end.max(free[q]);
                    }
                }
            }
        }
        ScheduleMode::Parallel => {
            let mut xx_busy: Vec<(f64, f64)> = Vec::new();
            for (i, g) in gates.iter().enumerate() {
                if matches!(g.kind, GateKind::Prep | GateKind::Meas) {
                    continue;
                }
                let ready = g.support().iter().map(|&q| free[q]).fold(0.0, f64::max);
                let d = durations[i];
                let t = if g.kind.arity() == 2 {
                    let fits = |t: f64| xx_busy.iter().filter(|&&(s, e)| s < t + d && t < e).count() < 2;
                    let mut candidates: Vec<f64> =
                        std::iter::once(ready).chain(xx_busy.iter().map(|&(_, e)| e).filter(|&e| e > ready)).collect();
                    candidates.sort_by(f64::total_cmp);
                    let t = candidates.into_iter().find(|&t| fits(t)).expect("latest end always fits");
                    xx_busy.push((t, t + d));
                    t
                } else {
                    ready
                };
                starts[i] = t;
                for &q in g.support() {
                    free[q] = t + d;
                }
            }
        }
    }
    (starts, durations)
}

fn build_schedule(gates: &[Gate], layout: &ChainLayout, mode: ScheduleMode) -> (Schedule, Vec<f64>) {
    let (mut starts, mut durations) = schedule_logic(gates, layout, mode);
    let logic_us = gates
        .iter()
        .enumerate()
        .filter(|(_, g)| !matches!(g.kind, GateKind::Prep | GateKind::Meas))
        .map(|(i, _)| starts[i] + durations[i])
        .fold(0.0, f64::max);
    let runs = ancilla_runs(layout);
    let (hops, rejoin) = shuttle_plan(&runs);
    let episodes: Vec<Vec<usize>> =
        runs.iter().map(|&(a, b)| layout.ordering[a..=b].to_vec()).collect();
    let shuttle_us = hops.iter().sum::<f64>() + rejoin;
    let measure_us = MEASURE_US * runs.len() as f64;

    // MEAS and PREP of an ancilla share its episode's measurement slot
    let mut slot = [0.0f64; NUM_QUBITS];
    let mut t = logic_us;
    for (ep, hop) in episodes.iter().zip(&hops) {
        t += hop;
        for &q in ep {
            slot[q] = t;
        }
        t += MEASURE_US;
    }
    for (i, g) in gates.iter().enumerate() {
        match g.kind {
            GateKind::Meas => {
                starts[i] = slot[g.qubits[0]];
                durations[i] = MEASURE_US;
            }
            GateKind::Prep => {
                starts[i] = 0.0;
                durations[i] = 0.0;
            }
            _ => {}
        }
    }
    let schedule = Schedule {
        logic_us,
        shuttle_us,
        measure_us,
        total_us: logic_us + shuttle_us + measure_us,
        gate_starts: starts,
        episodes,
    };
    (schedule, durations)
}

/// Times a gate list on `layout`.
pub fn time_gates(gates: &[Gate], layout: &ChainLayout, mode: ScheduleMode) -> Vec<TimedGate> {
    let (schedule, durations) = build_schedule(gates, layout, mode);
    gates
        .iter()
        .zip(schedule.gate_starts.iter().zip(&durations))
        .map(|(&gate, (&start_us, &duration_us))| TimedGate { gate, start_us, duration_us })
        .collect()
}

pub fn evaluate_schedule(layout: &ChainLayout, parallel: bool) -> Schedule {
    let mode = if parallel { ScheduleMode::Parallel } else { ScheduleMode::Serial };
    build_schedule(&surface17_gate_list(), layout, mode).0
}

/// Ion distances of the 24 XX gates.
pub fn xx_distances(layout: &ChainLayout) -> Vec<usize> {
    surface17_gate_list()
        .iter()
        .filter(|g| g.kind.arity() == 2)
        .map(|g| layout.distance(g.qubits[0], g.qubits[1]))
        .collect()
}

/// Value of `objective` for `layout`.
pub fn layout_cost(layout: &ChainLayout, objective: Objective) -> f64 {
    match objective {
        Objective::MaxDist => xx_distances(layout).into_iter().max().unwrap_or(0) as f64,
        Objective::AvgDist => {
            let d = xx_distances(layout);
            d.iter().sum::<usize>() as f64 / d.len() as f64
        }
        Objective::TotalTime => evaluate_schedule(layout, true).total_us,
    }
}

// ----------------------------------------------------------------- annealing

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealConfig {
    pub proposals: usize,
    pub cooling: f64,
    /// Number of temperature steps spread evenly over the proposals.
    pub cooling_steps: usize,
    pub calibration_samples: usize,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        AnnealConfig { proposals: 100_000, cooling: 0.995, cooling_steps: 1000, calibration_samples: 100 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealResult {
    pub layout: ChainLayout,
    pub cost: f64,
    pub initial_cost: f64,
    pub initial_temperature: f64,
}

fn random_layout<R: Rng + ?Sized>(mode: LayoutMode, objective: Objective, rng: &mut R) -> ChainLayout {
    let mut ordering: [usize; NUM_QUBITS] = std::array::from_fn(|i| i);
    match mode {
        LayoutMode::Mixed => ordering.shuffle(rng),
        LayoutMode::Separated => {
            ordering[..NUM_DATA].shuffle(rng);
            ordering[NUM_DATA..].shuffle(rng);
        }
    }
    ChainLayout::new(ordering, mode, objective).expect("shuffled identity is a permutation")
}

fn random_swap<R: Rng + ?Sized>(mode: LayoutMode, rng: &mut R) -> (usize, usize) {
    let (lo, hi) = match mode {
        LayoutMode::Mixed => (0, NUM_QUBITS),
        LayoutMode::Separated => {
            if rng.gen_bool(NUM_DATA as f64 / NUM_QUBITS as f64) {
                (0, NUM_DATA)
            } else {
                (NUM_DATA, NUM_QUBITS)
            }
        }
    };
    let i = rng.gen_range(lo..hi);
    let mut j = rng.gen_range(lo..hi - 1);
    if j >= i {
        j += 1;
    }
    (i, j)
}

/// One simulated-annealing run with swap moves; returns the best layout seen.
pub fn anneal_layout<R: Rng + ?Sized>(
    mode: LayoutMode,
    objective: Objective,
    config: &AnnealConfig,
    rng: &mut R,
) -> AnnealResult {
    let samples: Vec<f64> = (0..config.calibration_samples.max(2))
        .map(|_| layout_cost(&random_layout(mode, objective, rng), objective))
        .collect();
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let t0 = (samples.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (samples.len() - 1) as f64).sqrt();
    let t0 = if t0 > 0.0 { t0 } else { 1.0 };

    let mut current = random_layout(mode, objective, rng);
    let mut cost = layout_cost(&current, objective);
    let initial_cost = cost;
    let mut best = current.clone();
    let mut best_cost = cost;
    let mut temperature = t0;
    let every = (config.proposals / config.cooling_steps.max(1)).max(1);
    for k in 0..config.proposals {
        let (i, j) = random_swap(mode, rng);
        current.swap_positions(i, j);
        let trial = layout_cost(&current, objective);
        let delta = trial - cost;
        if delta <= 0.0 || rng.gen::<f64>() < (-delta / temperature).exp() {
            cost = trial;
            if cost < best_cost {
                best_cost = cost;
                best = current.clone();
            }
        } else {
            current.swap_positions(i, j);
        }
        if (k + 1) % every == 0 {
            temperature *= config.cooling;
        }
    }
    AnnealResult { layout: best, cost: best_cost, initial_cost, initial_temperature: t0 }
}

/// Independent restarts in parallel, restart `i` on stream `i` of `seed`.
pub fn anneal_restarts(
    mode: LayoutMode,
    objective: Objective,
    config: &AnnealConfig,
    seed: u64,
    restarts: usize,
) -> Vec<AnnealResult> {
    (0..restarts)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            anneal_layout(mode, objective, config, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gate_time_examples() {
        assert_eq!(gate_time(1).unwrap(), 48.0);
        assert_eq!(gate_time(7).unwrap(), 276.0);
        assert_eq!(gate_time(11).unwrap(), 428.0);
        assert_eq!(gate_time(0), Err(Error::DistanceOutOfRange(0)));
        assert_eq!(gate_time(17), Err(Error::DistanceOutOfRange(17)));
    }

    #[test]
    fn printed_shuttle_and_measure() {
        let expect = [
            (PrintedLayout::SM, 200.0, 100.0),
            (PrintedLayout::SA, 200.0, 100.0),
            (PrintedLayout::MT, 700.0, 300.0),
            (PrintedLayout::MM, 1200.0, 500.0),
            (PrintedLayout::MA, 1800.0, 800.0),
        ];
        for (p, shuttle, measure) in expect {
            let s = evaluate_schedule(&ChainLayout::printed(p), false);
            assert_eq!((s.shuttle_us, s.measure_us), (shuttle, measure), "{}", p.name());
            let covered: usize = s.episodes.iter().map(Vec::len).sum();
            assert_eq!(covered, 8);
        }
    }

    #[test]
    fn serial_logic_is_xx_sum_plus_four_layers() {
        for p in PrintedLayout::ALL {
            let l = ChainLayout::printed(p);
            let xx: f64 = xx_distances(&l).into_iter().map(|d| gate_time(d).unwrap()).sum();
            let s = evaluate_schedule(&l, false);
            assert_eq!(s.logic_us, xx + 40.0, "{}", p.name());
        }
    }

    #[test]
    fn printed_oracle_costs() {
        assert_eq!(layout_cost(&ChainLayout::printed(PrintedLayout::MM), Objective::MaxDist), 5.0);
        let ma = layout_cost(&ChainLayout::printed(PrintedLayout::MA), Objective::AvgDist);
        assert!((ma - 52.0 / 24.0).abs() < 1e-12);
    }

    #[test]
    fn parallel_never_slower() {
        for p in PrintedLayout::ALL {
            let l = ChainLayout::printed(p);
            assert!(evaluate_schedule(&l, true).logic_us <= evaluate_schedule(&l, false).logic_us);
        }
    }

    #[test]
    fn layout_text_round_trip() {
        let l = ChainLayout::printed(PrintedLayout::MT);
        let text = l.to_text();
        assert!(text.ends_with("10 15 9 5 0 1 11 12 14 7 4 3 8 2 6 13 16\n"));
        assert_eq!(ChainLayout::from_text(&text).unwrap(), l);
        assert!(ChainLayout::from_text("mode=mixed objective=max-dist\n0 1 2").is_err());
    }

    #[test]
    fn separated_needs_contiguous_data() {
        let o = PrintedLayout::MT.ordering();
        assert!(ChainLayout::new(o, LayoutMode::Separated, Objective::MaxDist).is_err());
        let mut bad = o;
        bad[0] = bad[1];
        assert!(ChainLayout::new(bad, LayoutMode::Mixed, Objective::MaxDist).is_err());
    }

    #[test]
    fn two_ions_are_symmetric() {
        let c = equilibrium_positions(TrapParams::new(1.0, 50.0, 2).unwrap()).unwrap();
        assert!((c.positions[0] + c.positions[1]).abs() < 1e-12);
        assert!(c.positions[0] < 0.0);
    }

    #[test]
    fn operating_chain_is_balanced() {
        let c = equilibrium_positions(TrapParams::operating_point()).unwrap();
        assert!(c.residual < 1e-10);
        let n = c.positions.len();
        for i in 0..n {
            assert!((c.positions[i] + c.positions[n - 1 - i]).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_trap_rejected() {
        assert!(TrapParams::new(0.0, 0.86, 17).is_err());
        assert!(TrapParams::new(25.0, -1.0, 17).is_err());
        assert!(TrapParams::new(25.0, 0.86, 1).is_err());
    }

    #[test]
    fn anneal_keeps_best_and_stays_valid() {
        let cfg = AnnealConfig { proposals: 2000, cooling_steps: 100, ..AnnealConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for mode in [LayoutMode::Mixed, LayoutMode::Separated] {
            let r = anneal_layout(mode, Objective::AvgDist, &cfg, &mut rng);
            assert!(r.cost <= r.initial_cost);
            assert_eq!(layout_cost(&r.layout, Objective::AvgDist), r.cost);
            assert!(ChainLayout::new(*r.layout.ordering(), mode, Objective::AvgDist).is_ok());
        }
    }
}
