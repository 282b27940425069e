//! Logical error rate estimation: direct Monte Carlo and importance sampling
//! over error subsets with heterogeneous per-site rates.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::io::{self, Write};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::{RoundEffect, TimedCircuit};
use crate::decoder::{CycleSimulator, Protocol, MATCHING_ROUNDS};
use crate::error::{Error, Result};
use crate::noise::{Category, Channel, NoiseModel};

/// Largest count per category that the base-7 index can carry.
pub const MAX_PER_CATEGORY: usize = 6;
pub const NUM_CATEGORIES: usize = 5;

/// Error counts per category `(s, t, h, dep, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SubsetIndex {
    pub s: usize,
    pub t: usize,
    pub h: usize,
    pub dep: usize,
    pub z: usize,
}

impl SubsetIndex {
    pub fn from_counts(c: [usize; NUM_CATEGORIES]) -> Self {
        SubsetIndex { s: c[0], t: c[1], h: c[2], dep: c[3], z: c[4] }
    }

    pub fn counts(&self) -> [usize; NUM_CATEGORIES] {
        [self.s, self.t, self.h, self.dep, self.z]
    }

    pub fn total(&self) -> usize {
        self.counts().iter().sum()
    }

    pub fn base7_id(&self) -> Result<u32> {
        let names = ["s", "t", "h", "dep", "z"];
        let mut id = 0u32;
        for (i, &c) in self.counts().iter().enumerate().rev() {
            if c > MAX_PER_CATEGORY {
                return Err(Error::SubsetComponent { component: names[i], value: c, limit: MAX_PER_CATEGORY });
            }
            id = id * 7 + c as u32;
        }
        Ok(id)
    }

    pub fn from_base7(mut id: u32) -> Option<Self> {
        let mut c = [0usize; NUM_CATEGORIES];
        for slot in &mut c {
            *slot = (id % 7) as usize;
            id /= 7;
        }
        (id == 0).then_some(SubsetIndex::from_counts(c))
    }
}

impl std::fmt::Display for SubsetIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{},{},{})", self.s, self.t, self.h, self.dep, self.z)
    }
}

pub fn subset_base7_id(index: &SubsetIndex) -> Result<u32> {
    index.base7_id()
}

/// Coefficients of `x^0..=x^kmax` in `∏((1 − pᵢ) + pᵢ x)`.
pub fn elementary_symmetric(probs: &[f64], kmax: usize) -> Vec<f64> {
    let mut c = vec![0.0; kmax + 1];
    c[0] = 1.0;
    for &p in probs {
        for k in (0..=kmax).rev() {
            c[k] = c[k] * (1.0 - p) + if k > 0 { c[k - 1] * p } else { 0.0 };
        }
    }
    c
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn is_homogeneous(probs: &[f64]) -> bool {
    probs.windows(2).all(|w| w[0] == w[1])
}

/// Probability of exactly `k` errors among sites with the given rates, for
/// `k = 0..=kmax`.
pub fn category_weights(probs: &[f64], kmax: usize) -> Vec<f64> {
    if is_homogeneous(probs) {
        let n = probs.len();
        let p = probs.first().copied().unwrap_or(0.0);
        (0..=kmax)
            .map(|k| if k > n { 0.0 } else { binomial(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32) })
            .collect()
    } else {
        elementary_symmetric(probs, kmax)
    }
}

/// Draws `k`-subsets of sites with probability proportional to
/// `∏_{chosen} pᵢ ∏_{others} (1 − pᵢ)`.
#[derive(Debug, Clone)]
pub struct CombinationSampler {
    probs: Vec<f64>,
    kmax: usize,
    homogeneous: bool,
    /// `prefix[i][k]`: coefficient of `x^k` over the first `i` sites.
    prefix: Vec<Vec<f64>>,
}

impl CombinationSampler {
    pub fn new(probs: &[f64], kmax: usize) -> Self {
        let homogeneous = is_homogeneous(probs);
        let mut prefix = Vec::new();
        if !homogeneous {
            prefix.reserve(probs.len() + 1);
            let mut c = vec![0.0; kmax + 1];
            c[0] = 1.0;
            prefix.push(c.clone());
            for &p in probs {
                for k in (0..=kmax).rev() {
                    c[k] = c[k] * (1.0 - p) + if k > 0 { c[k - 1] * p } else { 0.0 };
                }
                prefix.push(c.clone());
            }
        }
        CombinationSampler { probs: probs.to_vec(), kmax, homogeneous, prefix }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Indices of `k` distinct sites, ascending in the heterogeneous case.
    pub fn sample<R: Rng + ?Sized>(&self, k: usize, rng: &mut R, out: &mut Vec<usize>) {
        out.clear();
        assert!(k <= self.kmax && k <= self.probs.len(), "cannot draw {k} of {} sites", self.probs.len());
        if k == 0 {
            return;
        }
        if self.homogeneous {
            out.extend(index::sample(rng, self.probs.len(), k));
            return;
        }
        // walk sites from the back, including each with its conditional
        // probability given how many remain to be chosen
        let mut need = k;
        let mut i = self.probs.len();
        while need > 0 {
            let p = self.probs[i - 1];
            let with = p * self.prefix[i - 1][need - 1];
            let total = self.prefix[i][need];
            if need == i || rng.gen::<f64>() * total < with {
                out.push(i - 1);
                need -= 1;
            }
            i -= 1;
        }
        out.reverse();
    }
}

/// One potential fault: a site in a given noisy round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultInstance {
    pub round: usize,
    pub site: usize,
    pub probability: f64,
    pub channel: Channel,
    pub category: Category,
}

/// The fault instances of one correction cycle under a noise model.
#[derive(Debug, Clone)]
pub struct NoisyCircuit {
    pub instances: Vec<FaultInstance>,
    by_category: [Vec<usize>; NUM_CATEGORIES],
    /// Instances with equal probability, for geometric skipping.
    groups: Vec<(f64, Vec<usize>)>,
}

impl NoisyCircuit {
    pub fn new(circuit: &TimedCircuit, noise: &NoiseModel, rounds: usize) -> Self {
        let mut instances = Vec::new();
        for round in 0..rounds {
            for (site, s) in circuit.sites.iter().enumerate() {
                if let Some(channel) = noise.channel(s) {
                    instances.push(FaultInstance {
                        round,
                        site,
                        probability: noise.site_probability(s),
                        channel,
                        category: Category::of(s),
                    });
                }
            }
        }
        let mut by_category: [Vec<usize>; NUM_CATEGORIES] = Default::default();
        for (i, inst) in instances.iter().enumerate() {
            by_category[inst.category.index()].push(i);
        }
        let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
        for (i, inst) in instances.iter().enumerate() {
            if inst.probability <= 0.0 {
                continue;
            }
            match groups.iter_mut().find(|(p, _)| *p == inst.probability) {
                Some((_, v)) => v.push(i),
                None => groups.push((inst.probability, vec![i])),
            }
        }
        NoisyCircuit { instances, by_category, groups }
    }

    pub fn category_instances(&self, c: Category) -> &[usize] {
        &self.by_category[c.index()]
    }

    pub fn category_probabilities(&self) -> [Vec<f64>; NUM_CATEGORIES] {
        std::array::from_fn(|c| self.by_category[c].iter().map(|&i| self.instances[i].probability).collect())
    }

    /// Independently fires every instance with its probability and returns
    /// the accumulated per-round effects.
    pub fn sample_direct<R: Rng + ?Sized>(&self, sim: &CycleSimulator, rng: &mut R) -> [RoundEffect; MATCHING_ROUNDS] {
        let mut acc = [RoundEffect::default(); MATCHING_ROUNDS];
        for (p, members) in &self.groups {
            if *p >= 1.0 {
                for &i in members {
                    self.fire(i, sim, rng, &mut acc);
                }
                continue;
            }
            let log_q = (-p).ln_1p();
            let mut pos = 0usize;
            loop {
                let u: f64 = 1.0 - rng.gen::<f64>();
                let skip = (u.ln() / log_q).floor();
                if skip >= (members.len() - pos) as f64 {
                    break;
                }
                pos += skip as usize;
                self.fire(members[pos], sim, rng, &mut acc);
                pos += 1;
                if pos >= members.len() {
                    break;
                }
            }
        }
        acc
    }

    #[inline]
    fn fire<R: Rng + ?Sized>(&self, i: usize, sim: &CycleSimulator, rng: &mut R, acc: &mut [RoundEffect; MATCHING_ROUNDS]) {
        let inst = &self.instances[i];
        let pauli = inst.channel.sample(rng);
        acc[inst.round] ^= sim.effects().effect(inst.site, pauli);
    }
}

/// Per-category weight tables.
#[derive(Debug, Clone)]
pub struct SubsetWeights {
    weights: [Vec<f64>; NUM_CATEGORIES],
    sizes: [usize; NUM_CATEGORIES],
}

impl SubsetWeights {
    pub fn new(probs: &[Vec<f64>; NUM_CATEGORIES]) -> Self {
        SubsetWeights {
            weights: std::array::from_fn(|c| category_weights(&probs[c], MAX_PER_CATEGORY)),
            sizes: std::array::from_fn(|c| probs[c].len()),
        }
    }

    /// `P(exactly k errors in category c)` for `k = 0..=6`.
    pub fn category(&self, c: Category) -> &[f64] {
        &self.weights[c.index()]
    }

    pub fn weight(&self, index: &SubsetIndex) -> Result<f64> {
        let names = ["s", "t", "h", "dep", "z"];
        let mut w = 1.0;
        for (c, &k) in index.counts().iter().enumerate() {
            if k > self.sizes[c] || k > MAX_PER_CATEGORY {
                return Err(Error::SubsetComponent {
                    component: names[c],
                    value: k,
                    limit: self.sizes[c].min(MAX_PER_CATEGORY),
                });
            }
            w *= self.weights[c][k];
        }
        Ok(w)
    }
}

/// Statistical weight of a subset for a circuit under a noise model.
pub fn subset_weight(index: &SubsetIndex, circuit: &TimedCircuit, noise: &NoiseModel, protocol: Protocol) -> Result<f64> {
    let noisy = NoisyCircuit::new(circuit, noise, protocol.max_rounds());
    SubsetWeights::new(&noisy.category_probabilities()).weight(index)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub weight_cutoff: f64,
    pub samples_per_subset: usize,
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig { weight_cutoff: 1e-6, samples_per_subset: 30_000, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsetResult {
    pub index: SubsetIndex,
    pub weight: f64,
    pub logical_rate: f64,
    pub failures: usize,
    pub samples: usize,
    pub stderr: f64,
}

impl SubsetResult {
    fn new(index: SubsetIndex, weight: f64, failures: usize, samples: usize) -> Self {
        let a = if samples == 0 { 0.0 } else { failures as f64 / samples as f64 };
        let stderr = if samples == 0 { 0.0 } else { (a * (1.0 - a) / samples as f64).sqrt() };
        SubsetResult { index, weight, logical_rate: a, failures, samples, stderr }
    }

    pub fn contribution(&self) -> f64 {
        self.weight * self.logical_rate
    }
}

/// Something whose failure probability can be importance-sampled by error
/// subsets.
pub trait SubsetExperiment: Sync {
    /// Per-site error probabilities of each category.
    fn category_probabilities(&self) -> [Vec<f64>; NUM_CATEGORIES];

    /// Identifies the conditional sampling distribution inside each subset,
    /// so cached rates can be reused when only the overall rate scale moves.
    fn shape_key(&self) -> u64;

    /// Scores one configuration with the given sites in error (indices into
    /// each category's probability list).
    fn fails(&self, chosen: &[Vec<usize>; NUM_CATEGORIES], rng: &mut ChaCha8Rng) -> bool;
}

/// Importance-sampling view of a correction cycle.
#[derive(Debug, Clone)]
pub struct CircuitExperiment {
    pub sim: CycleSimulator,
    pub noisy: NoisyCircuit,
    shape: u64,
}

impl CircuitExperiment {
    pub fn new(circuit: &TimedCircuit, noise: &NoiseModel, protocol: Protocol) -> Self {
        let sim = CycleSimulator::new(circuit, protocol);
        Self::with_simulator(sim, circuit, noise)
    }

    /// Reuses an already built simulator (its tables do not depend on noise).
    pub fn with_simulator(sim: CycleSimulator, circuit: &TimedCircuit, noise: &NoiseModel) -> Self {
        let noisy = NoisyCircuit::new(circuit, noise, sim.protocol().max_rounds());
        let mut h = DefaultHasher::new();
        sim.protocol().hash(&mut h);
        circuit.dump().hash(&mut h);
        for c in Category::ALL {
            let members = noisy.category_instances(c);
            let max = members.iter().map(|&i| noisy.instances[i].probability).fold(0.0, f64::max);
            for &i in members {
                let inst = &noisy.instances[i];
                (inst.round, inst.site, inst.channel).hash(&mut h);
                let rel = if max > 0.0 { inst.probability / max } else { 0.0 };
                ((rel * 1e9).round() as u64).hash(&mut h);
            }
        }
        CircuitExperiment { sim, noisy, shape: h.finish() }
    }
}

impl SubsetExperiment for CircuitExperiment {
    fn category_probabilities(&self) -> [Vec<f64>; NUM_CATEGORIES] {
        self.noisy.category_probabilities()
    }

    fn shape_key(&self) -> u64 {
        self.shape
    }

    fn fails(&self, chosen: &[Vec<usize>; NUM_CATEGORIES], rng: &mut ChaCha8Rng) -> bool {
        let mut acc = [RoundEffect::default(); MATCHING_ROUNDS];
        for c in Category::ALL {
            let members = self.noisy.category_instances(c);
            for &j in &chosen[c.index()] {
                self.noisy.fire(members[j], &self.sim, rng, &mut acc);
            }
        }
        let (x, z) = self.sim.run_effects(&acc);
        x || z
    }
}

/// Subset rates keyed by (base-7 id, experiment shape).
#[derive(Debug, Clone, Default)]
pub struct RateCache {
    map: HashMap<(u32, u64), (usize, usize)>,
}

impl RateCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub p_l: f64,
    /// Total weight of the subsets that were not sampled.
    pub truncation_bound: f64,
    /// Sampled subsets in order of increasing total count, then id.
    pub subsets: Vec<SubsetResult>,
}

impl Estimate {
    /// Combined standard error of `p_l` from the per-subset binomial errors.
    pub fn stderr(&self) -> f64 {
        self.subsets.iter().map(|s| (s.weight * s.stderr).powi(2)).sum::<f64>().sqrt()
    }

    /// Subsets sorted by decreasing `W·A`.
    pub fn ranked(&self) -> Vec<SubsetResult> {
        let mut v = self.subsets.clone();
        v.sort_by(|a, b| b.contribution().total_cmp(&a.contribution()).then(a.index.cmp(&b.index)));
        v
    }
}

/// Every subset index with `W ≥ cutoff`, with its weight.
pub fn significant_subsets(weights: &SubsetWeights, cutoff: f64) -> Vec<(SubsetIndex, f64)> {
    let mut out = Vec::new();
    for id in 0..7u32.pow(NUM_CATEGORIES as u32) {
        let index = SubsetIndex::from_base7(id).expect("id below 7^5");
        if let Ok(w) = weights.weight(&index) {
            if w >= cutoff && w > 0.0 {
                out.push((index, w));
            }
        }
    }
    out.sort_by_key(|(i, _)| (i.total(), i.base7_id().expect("components at most 6")));
    out
}

/// Draws `n` configurations of subset `index` and counts failures.
pub fn sample_subset<E: SubsetExperiment + ?Sized>(
    exp: &E,
    samplers: &[CombinationSampler; NUM_CATEGORIES],
    index: &SubsetIndex,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> usize {
    let counts = index.counts();
    let mut chosen: [Vec<usize>; NUM_CATEGORIES] = Default::default();
    let mut failures = 0;
    for _ in 0..n {
        for c in 0..NUM_CATEGORIES {
            samplers[c].sample(counts[c], rng, &mut chosen[c]);
        }
        if exp.fails(&chosen, rng) {
            failures += 1;
        }
    }
    failures
}

fn subset_stream(seed: u64, id: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(id));
    rng
}

/// Importance-sampled failure probability of `exp`.
///
/// Subsets whose weight reaches the cutoff are sampled, in parallel, each on
/// its own stream derived from the seed and the subset id; results found in
/// `cache` are reused.
pub fn estimate_with<E: SubsetExperiment + ?Sized>(
    exp: &E,
    config: &EstimatorConfig,
    cache: Option<&mut RateCache>,
) -> Estimate {
    let probs = exp.category_probabilities();
    let weights = SubsetWeights::new(&probs);
    let samplers: [CombinationSampler; NUM_CATEGORIES] =
        std::array::from_fn(|c| CombinationSampler::new(&probs[c], MAX_PER_CATEGORY));
    let subsets = significant_subsets(&weights, config.weight_cutoff);
    let shape = exp.shape_key();

    let cached = |id: u32| cache.as_ref().and_then(|c| c.map.get(&(id, shape)).copied());
    let todo: Vec<(SubsetIndex, u32)> = subsets
        .iter()
        .map(|(i, _)| (*i, i.base7_id().expect("components at most 6")))
        .filter(|(_, id)| cached(*id).is_none())
        .collect();
    let fresh: HashMap<u32, (usize, usize)> = todo
        .par_iter()
        .map(|&(index, id)| {
            let n = if index.total() == 0 { 0 } else { config.samples_per_subset };
            let mut rng = subset_stream(config.seed, id);
            (id, (sample_subset(exp, &samplers, &index, n, &mut rng), n))
        })
        .collect();

    let results: Vec<SubsetResult> = subsets
        .iter()
        .map(|&(index, w)| {
            let id = index.base7_id().expect("components at most 6");
            let (f, n) = fresh.get(&id).copied().or_else(|| cached(id)).expect("sampled or cached");
            SubsetResult::new(index, w, f, n)
        })
        .collect();
    if let Some(c) = cache {
        for (id, v) in fresh {
            c.map.insert((id, shape), v);
        }
    }
    let p_l = results.iter().map(SubsetResult::contribution).sum();
    let included: f64 = results.iter().map(|r| r.weight).sum();
    Estimate { p_l, truncation_bound: (1.0 - included).max(0.0), subsets: results }
}

pub fn estimate_logical_rate(
    config: &EstimatorConfig,
    circuit: &TimedCircuit,
    noise: &NoiseModel,
    protocol: Protocol,
) -> Result<Estimate> {
    noise.validate()?;
    Ok(estimate_with(&CircuitExperiment::new(circuit, noise, protocol), config, None))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McResult {
    pub failures: u64,
    pub shots: u64,
}

impl McResult {
    pub fn rate(&self) -> f64 {
        self.failures as f64 / self.shots as f64
    }

    pub fn stderr(&self) -> f64 {
        let p = self.rate();
        (p * (1.0 - p) / self.shots as f64).sqrt()
    }
}

const MC_CHUNK: u64 = 10_000;

/// Direct Monte Carlo over independent site faults, chunked over workers
/// with one stream per chunk.
pub fn direct_monte_carlo_with(sim: &CycleSimulator, noisy: &NoisyCircuit, shots: u64, seed: u64) -> McResult {
    let chunks = shots.div_ceil(MC_CHUNK);
    let failures = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let n = MC_CHUNK.min(shots - k * MC_CHUNK);
            (0..n)
                .filter(|_| {
                    let (x, z) = sim.run_effects(&noisy.sample_direct(sim, &mut rng));
                    x || z
                })
                .count() as u64
        })
        .sum();
    McResult { failures, shots }
}

pub fn direct_monte_carlo(
    circuit: &TimedCircuit,
    noise: &NoiseModel,
    protocol: Protocol,
    shots: u64,
    seed: u64,
) -> Result<McResult> {
    noise.validate()?;
    let sim = CycleSimulator::new(circuit, protocol);
    let noisy = NoisyCircuit::new(circuit, noise, protocol.max_rounds());
    Ok(direct_monte_carlo_with(&sim, &noisy, shots, seed))
}

/// Writes the subset table as CSV.
/// First crossing of `p_L = p` in a sweep of `(p, p_L)` points sorted by
/// `p`, interpolating `ln(p_L/p)` linearly in `ln p` between the bracketing
/// points. `None` if the sweep never changes sign or touches `p_L = 0`.
pub fn crossing(points: &[(f64, f64)]) -> Option<f64> {
    let g = |&(p, pl): &(f64, f64)| (p.ln(), (pl / p).ln());
    points.windows(2).find_map(|w| {
        if w[0].1 <= 0.0 || w[1].1 <= 0.0 {
            return None;
        }
        let (x0, y0) = g(&w[0]);
        let (x1, y1) = g(&w[1]);
        if y0 == 0.0 {
            return Some(w[0].0);
        }
        if y0 * y1 > 0.0 || y0 == y1 {
            return None;
        }
        Some((x0 - y0 * (x1 - x0) / (y1 - y0)).exp())
    })
}

/// Root of an increasing `f` on `[lo, hi]` by bisection in `ln x`.
/// `None` unless `f(lo) < 0 ≤ f(hi)`.
pub fn geometric_bisect(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, iterations: usize) -> Option<f64> {
    if !(lo > 0.0 && hi > lo) || f(lo) >= 0.0 || f(hi) < 0.0 {
        return None;
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..iterations {
        let m = (a * b).sqrt();
        if f(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Some((a * b).sqrt())
}

pub fn write_subset_csv<W: Write>(mut w: W, subsets: &[SubsetResult]) -> io::Result<()> {
    writeln!(w, "base7_id,s,t,h,dep,z,W,A,stderr,samples")?;
    for r in subsets {
        let i = r.index;
        writeln!(
            w,
            "{},{},{},{},{},{},{:e},{:e},{:e},{}",
            i.base7_id().map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?,
            i.s,
            i.t,
            i.h,
            i.dep,
            i.z,
            r.weight,
            r.logical_rate,
            r.stderr,
            r.samples
        )?;
    }
    Ok(())
}
