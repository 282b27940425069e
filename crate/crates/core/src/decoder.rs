//! Fault-tolerant correction cycles over syndrome streams.
//!
//! Two protocols are provided. The adaptive lookup protocol measures once and,
//! if anything fired, measures again and decodes the second syndrome. The
//! matching protocol always measures three times and decodes the pattern of
//! syndrome changes with a table derived from minimum-weight explanations
//! over the circuit's single-fault mechanisms.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use rand::Rng;

use crate::circuit::{FaultEffects, RoundEffect, TimedCircuit};
use crate::code::{build_lookup_tables, syndrome_of, DataErrorVector, LogicalOperators, LookupTable, Syndrome};
use crate::error::{Error, Result};
use crate::noise::{Channel, NoiseModel};
use crate::pauli::{LocalPauli, Pauli};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    AdaptiveLookup,
    MatchingTable,
}

impl Protocol {
    /// Largest number of noisy rounds one cycle can consume.
    pub fn max_rounds(self) -> usize {
        match self {
            Protocol::AdaptiveLookup => 2,
            Protocol::MatchingTable => MATCHING_ROUNDS,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Protocol::AdaptiveLookup => "lookup",
            Protocol::MatchingTable => "matching",
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lookup" | "adaptive" | "adaptive-lookup" => Ok(Protocol::AdaptiveLookup),
            "matching" | "matching-table" => Ok(Protocol::MatchingTable),
            _ => Err(Error::InvalidNoise(format!("unknown protocol {s:?}"))),
        }
    }
}

/// One adaptive cycle. Returns the correction and the rounds consumed.
pub fn adaptive_cycle<I>(table: &LookupTable, mut stream: I) -> Result<(DataErrorVector, usize)>
where
    I: Iterator<Item = Syndrome>,
{
    let a = stream.next().ok_or(Error::StreamExhausted(0))?;
    if a.is_trivial() {
        return Ok((DataErrorVector::ZERO, 1));
    }
    let b = stream.next().ok_or(Error::StreamExhausted(1))?;
    Ok((table.decode(b), 2))
}

pub const MATCHING_ROUNDS: usize = 3;
const MATCHING_KEYS: usize = 1 << (4 * MATCHING_ROUNDS);

/// Error rate used to weigh fault mechanisms when building the table.
pub const MATCHING_REFERENCE_RATE: f64 = 1e-3;

/// Half of the decoding problem: X-part with the `H` syndrome half, or
/// Z-part with the `Gt` half.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Half {
    X,
    Z,
}

impl Half {
    fn syndrome(self, s: Syndrome) -> u16 {
        u16::from(match self {
            Half::X => s.x_half(),
            Half::Z => s.z_half(),
        })
    }

    fn data(self, d: DataErrorVector) -> u16 {
        match self {
            Half::X => d.x_part(),
            Half::Z => d.z_part(),
        }
    }
}

/// Detection-event key of one half: the first syndrome, then the changes
/// between consecutive rounds, four bits each.
fn event_key(half: Half, rounds: &[Syndrome; MATCHING_ROUNDS]) -> usize {
    let mut key = 0usize;
    let mut prev = 0u16;
    for (r, s) in rounds.iter().enumerate() {
        let cur = half.syndrome(*s);
        key |= usize::from(cur ^ prev) << (4 * r);
        prev = cur;
    }
    key
}

/// Three-round correction table for the two halves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchingTable {
    x: Vec<u16>,
    z: Vec<u16>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Mechanism {
    events: u16,
    data: u16,
    weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Node(f64, u16);

impl Eq for Node {}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl MatchingTable {
    /// Builds the table from the single-fault mechanisms of `circuit` under
    /// depolarizing noise at the reference rate.
    pub fn build(circuit: &TimedCircuit) -> Self {
        let effects = FaultEffects::new(circuit);
        let model = NoiseModel::Depolarizing { p: MATCHING_REFERENCE_RATE };
        // (round, effect) pairs with their total probability
        let mut faults: HashMap<(usize, RoundEffect), f64> = HashMap::new();
        for (i, site) in circuit.sites.iter().enumerate() {
            let Some(channel) = model.channel(site) else { continue };
            let p = model.site_probability(site);
            for (pauli, w) in channel.support() {
                let e = effects.effect(i, pauli);
                if e.is_trivial() {
                    continue;
                }
                for r in 0..MATCHING_ROUNDS {
                    *faults.entry((r, e)).or_default() += p * w;
                }
            }
        }
        let mut sorted: Vec<_> = faults.into_iter().collect();
        sorted.sort_by_key(|((r, e), _)| (*r, e.0));
        MatchingTable { x: Self::solve(Half::X, &sorted), z: Self::solve(Half::Z, &sorted) }
    }

    fn solve(half: Half, faults: &[((usize, RoundEffect), f64)]) -> Vec<u16> {
        let mut merged: HashMap<(u16, u16), f64> = HashMap::new();
        for &((r, e), p) in faults {
            let flips = half.syndrome(e.syndrome());
            // data first seen in the last round is left to the next round
            let data = if r + 1 < MATCHING_ROUNDS { half.data(e.data()) } else { 0 };
            let mut events = flips << (4 * r);
            if r + 1 < MATCHING_ROUNDS {
                let later = flips ^ half.syndrome(syndrome_of(e.data()));
                events ^= later << (4 * (r + 1));
            }
            if events != 0 {
                *merged.entry((events, data)).or_default() += p;
            }
        }
        let mut mechanisms: Vec<Mechanism> = merged
            .into_iter()
            .map(|((events, data), p)| Mechanism { events, data, weight: ((1.0 - p) / p).ln() })
            .collect();
        mechanisms.sort_by_key(|m| (m.events, m.data));

        let mut dist = vec![f64::INFINITY; MATCHING_KEYS];
        let mut correction = vec![0u16; MATCHING_KEYS];
        let mut heap = BinaryHeap::new();
        dist[0] = 0.0;
        heap.push(Node(0.0, 0));
        while let Some(Node(d, key)) = heap.pop() {
            if d > dist[key as usize] {
                continue;
            }
            for m in &mechanisms {
                let next = (key ^ m.events) as usize;
                let nd = d + m.weight;
                if nd < dist[next] - 1e-12 {
                    dist[next] = nd;
                    correction[next] = correction[key as usize] ^ m.data;
                    heap.push(Node(nd, next as u16));
                }
            }
        }
        debug_assert!(dist.iter().all(|d| d.is_finite()));
        Self::enforce_single_fault_safety(half, faults, &mut correction);
        correction
    }

    /// Makes every single fault correctable: after the table's correction,
    /// its residual must be fixed by a perfect round with lookup decoding.
    /// Where the minimum-weight choice breaks this, the first safe candidate
    /// among the faults' own data (and the empty correction) is used.
    fn enforce_single_fault_safety(half: Half, faults: &[((usize, RoundEffect), f64)], correction: &mut [u16]) {
        let lookup = build_lookup_tables();
        let logicals = LogicalOperators::default();
        let safe = |residual: u16| -> bool {
            let v = match half {
                Half::X => DataErrorVector::from_parts(residual, 0),
                Half::Z => DataErrorVector::from_parts(0, residual),
            };
            let cleaned = v.compose(&lookup.decode(syndrome_of(v)));
            logicals.failures(cleaned) == (false, false)
        };
        let mut by_key: HashMap<usize, Vec<u16>> = HashMap::new();
        for &((r, e), _) in faults {
            let flips = half.syndrome(e.syndrome());
            let mut events = usize::from(flips) << (4 * r);
            if r + 1 < MATCHING_ROUNDS {
                let later = flips ^ half.syndrome(syndrome_of(e.data()));
                events ^= usize::from(later) << (4 * (r + 1));
            }
            by_key.entry(events).or_default().push(half.data(e.data()));
        }
        let mut keys: Vec<usize> = by_key.keys().copied().collect();
        keys.sort_unstable();
        for key in keys {
            let mut data = by_key.remove(&key).expect("key from map");
            data.sort_unstable();
            data.dedup();
            let ok = |c: u16| data.iter().all(|&d| safe(d ^ c));
            if ok(correction[key]) {
                continue;
            }
            if let Some(c) = std::iter::once(0).chain(data.iter().copied()).find(|&c| ok(c)) {
                correction[key] = c;
            }
        }
    }

    pub fn decode(&self, rounds: &[Syndrome; MATCHING_ROUNDS]) -> DataErrorVector {
        DataErrorVector::from_parts(self.x[event_key(Half::X, rounds)], self.z[event_key(Half::Z, rounds)])
    }

    /// One line per key of `half key correction`, X half first. The 12-bit
    /// key holds the first syndrome half in its low nibble, then the two
    /// round-to-round changes.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(2 * MATCHING_KEYS * 16);
        for (half, table) in [("x", &self.x), ("z", &self.z)] {
            for (key, &mask) in table.iter().enumerate() {
                let v = if half == "x" { DataErrorVector::from_parts(mask, 0) } else { DataErrorVector::from_parts(0, mask) };
                out.push_str(&format!("{half} {key:03x} {v}\n"));
            }
        }
        out
    }
}

pub fn matching_cycle(table: &MatchingTable, rounds: &[Syndrome; MATCHING_ROUNDS]) -> DataErrorVector {
    table.decode(rounds)
}

/// A Pauli inserted at `site` during noisy round `round` of a cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fault {
    pub round: usize,
    pub site: usize,
    pub pauli: LocalPauli,
}

/// Runs correction cycles on a compiled round using precomputed fault
/// effects.
#[derive(Debug, Clone)]
pub struct CycleSimulator {
    effects: FaultEffects,
    lookup: LookupTable,
    matching: Option<MatchingTable>,
    logicals: LogicalOperators,
    protocol: Protocol,
}

impl CycleSimulator {
    pub fn new(circuit: &TimedCircuit, protocol: Protocol) -> Self {
        CycleSimulator {
            effects: FaultEffects::new(circuit),
            lookup: build_lookup_tables(),
            matching: (protocol == Protocol::MatchingTable).then(|| MatchingTable::build(circuit)),
            logicals: LogicalOperators::default(),
            protocol,
        }
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol
    }

    pub fn effects(&self) -> &FaultEffects {
        &self.effects
    }

    pub fn lookup(&self) -> &LookupTable {
        &self.lookup
    }

    pub fn matching(&self) -> Option<&MatchingTable> {
        self.matching.as_ref()
    }

    /// Folds faults into one accumulated effect per round.
    pub fn round_effects(&self, faults: &[Fault]) -> [RoundEffect; MATCHING_ROUNDS] {
        let mut acc = [RoundEffect::default(); MATCHING_ROUNDS];
        for f in faults {
            if f.round < self.protocol.max_rounds() {
                acc[f.round] ^= self.effects.effect(f.site, f.pauli);
            }
        }
        acc
    }

    /// One cycle from `incoming`; returns the corrected data error and the
    /// number of rounds consumed.
    pub fn correct(&self, incoming: DataErrorVector, rounds: &[RoundEffect; MATCHING_ROUNDS]) -> (DataErrorVector, usize) {
        let mut data = incoming;
        match self.protocol {
            Protocol::AdaptiveLookup => {
                let (a, d) = self.effects.round(data, rounds[0]);
                data = d;
                if a.is_trivial() {
                    return (data, 1);
                }
                let (b, d) = self.effects.round(data, rounds[1]);
                (d.compose(&self.lookup.decode(b)), 2)
            }
            Protocol::MatchingTable => {
                let mut syn = [Syndrome::TRIVIAL; MATCHING_ROUNDS];
                for (s, r) in syn.iter_mut().zip(rounds) {
                    let (out, d) = self.effects.round(data, *r);
                    *s = out;
                    data = d;
                }
                let table = self.matching.as_ref().expect("matching table built for this protocol");
                (data.compose(&table.decode(&syn)), MATCHING_ROUNDS)
            }
        }
    }

    /// Applies a perfect round with lookup decoding and scores the result.
    pub fn score(&self, residual: DataErrorVector) -> (bool, bool) {
        let cleaned = residual.compose(&self.lookup.decode(syndrome_of(residual)));
        self.logicals.failures(cleaned)
    }

    /// Single-cycle memory experiment with the given faults.
    pub fn run(&self, faults: &[Fault]) -> (bool, bool) {
        self.run_effects(&self.round_effects(faults))
    }

    #[inline]
    pub fn run_effects(&self, rounds: &[RoundEffect; MATCHING_ROUNDS]) -> (bool, bool) {
        self.score(self.correct(DataErrorVector::ZERO, rounds).0)
    }

    /// Consecutive cycles with the residual carried over; the perfect round
    /// is applied only after the last cycle.
    pub fn run_cycles(&self, cycles: &[[RoundEffect; MATCHING_ROUNDS]]) -> (bool, bool) {
        let residual = cycles.iter().fold(DataErrorVector::ZERO, |data, r| self.correct(data, r).0);
        self.score(residual)
    }

    /// Every (round, site, Pauli) single fault that causes a logical failure.
    pub fn single_fault_failures(&self, circuit: &TimedCircuit) -> Vec<Fault> {
        let mut failures = Vec::new();
        for round in 0..self.protocol.max_rounds() {
            for (site, s) in circuit.sites.iter().enumerate() {
                let paulis: Vec<LocalPauli> = if s.arity == 2 {
                    LocalPauli::two_qubit_non_identity().collect()
                } else {
                    Pauli::NON_IDENTITY.iter().map(|&p| LocalPauli::one(p)).collect()
                };
                for pauli in paulis {
                    let f = Fault { round, site, pauli };
                    let (x, z) = self.run(&[f]);
                    if x || z {
                        failures.push(f);
                    }
                }
            }
        }
        failures
    }
}

/// Draws independent faults for one cycle from `noise` and scores it.
///
/// Builds the simulator on every call; sampling loops should hold a
/// [`CycleSimulator`] and a [`crate::sampler::NoisyCircuit`] instead.
pub fn memory_experiment<R: Rng + ?Sized>(
    circuit: &TimedCircuit,
    noise: &NoiseModel,
    protocol: Protocol,
    rng: &mut R,
) -> (bool, bool) {
    let sim = CycleSimulator::new(circuit, protocol);
    let mut faults = Vec::new();
    for round in 0..protocol.max_rounds() {
        for (site, s) in circuit.sites.iter().enumerate() {
            let Some(channel) = noise.channel(s) else { continue };
            if rng.gen::<f64>() < noise.site_probability(s) {
                faults.push(Fault { round, site, pauli: channel_draw(channel, rng) });
            }
        }
    }
    sim.run(&faults)
}

fn channel_draw<R: Rng + ?Sized>(c: Channel, rng: &mut R) -> LocalPauli {
    c.sample(rng)
}
