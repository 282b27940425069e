//! The compiled syndrome-extraction round and Pauli-frame propagation.
//!
//! One round is: PREP on the eight ancillas, the MS(X) block (XX gates then
//! `R_X` fix-ups), the MS(Z) block (`R_Y` basis change, XX gates, `R_X`
//! fix-ups, `R_Y` back), and finally MEAS on the ancillas. XX gates per
//! ancilla follow the listing order, which keeps hook errors perpendicular
//! to the logical operators.
//!
//! The first block of the check matrix `T` (rows of `H`) is measured by the
//! MS(X) ancillas 9, 11, 14, 16; those report X-type parities and therefore
//! flip on frame Z. The bridge between frames and [`DataErrorVector`]s thus
//! exchanges X and Z on the data qubits: the error vector's X-part is the
//! frame's Z plane and vice versa.

use std::fmt;
use std::str::FromStr;

use crate::code::{syndrome_of, DataErrorVector, Syndrome};
use crate::error::{Error, Result};
use crate::layout::{self, ChainLayout, ScheduleMode};
use crate::pauli::{LocalPauli, Pauli, PauliFrame, NUM_DATA, NUM_QUBITS};

/// Ancilla reporting each syndrome bit, in `T` row order.
pub const SYNDROME_ANCILLAS: [usize; 8] = [9, 11, 14, 16, 10, 12, 13, 15];

pub const SINGLE_QUBIT_GATE_US: f64 = 10.0;

/// Ancilla and ordered (data, sign) pairs of the MS(X) block.
const MS_X_BLOCK: [(usize, &[(usize, i8)]); 4] = [
    (16, &[(6, 1), (7, -1)]),
    (11, &[(0, 1), (1, -1), (3, 1), (4, -1)]),
    (14, &[(4, 1), (5, -1), (7, 1), (8, -1)]),
    (9, &[(1, 1), (2, -1)]),
];

/// Ancilla and ordered (data, sign) pairs of the MS(Z) block.
const MS_Z_BLOCK: [(usize, &[(usize, i8)]); 4] = [
    (10, &[(0, -1), (3, 1)]),
    (12, &[(1, -1), (4, -1), (2, 1), (5, 1)]),
    (13, &[(3, -1), (6, -1), (4, 1), (7, 1)]),
    (15, &[(5, -1), (8, 1)]),
];

/// `R_X(±π/2)` fix-ups after the MS(X) block.
const MS_X_FIXUPS: [(usize, i8); 6] = [(0, -1), (2, 1), (3, -1), (5, 1), (6, -1), (8, 1)];

/// `R_X(±π/2)` fix-ups inside the MS(Z) block.
const MS_Z_FIXUPS: [(usize, i8); 6] = [(0, 1), (1, 1), (2, 1), (6, -1), (7, -1), (8, -1)];

/// Primitive gates. Rotation angles are integer multiples of π/2; XX carries
/// the sign `s` of its `s·π/4` angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    Prep,
    Meas,
    Rx(i8),
    Ry(i8),
    Rz(i8),
    Xx(i8),
    /// Hadamard, used only by the CNOT reference round.
    H,
    /// `qubits = [control, target]`.
    Cnot,
}

impl GateKind {
    pub fn arity(&self) -> usize {
        match self {
            GateKind::Xx(_) | GateKind::Cnot => 2,
            _ => 1,
        }
    }

    pub fn is_rotation(&self) -> bool {
        matches!(self, GateKind::Rx(_) | GateKind::Ry(_) | GateKind::Rz(_))
    }

    fn name(&self) -> &'static str {
        match self {
            GateKind::Prep => "PREP",
            GateKind::Meas => "MEAS",
            GateKind::Rx(_) => "RX",
            GateKind::Ry(_) => "RY",
            GateKind::Rz(_) => "RZ",
            GateKind::Xx(_) => "XX",
            GateKind::H => "H",
            GateKind::Cnot => "CNOT",
        }
    }
}

/// Gate with its qubits; `qubits[1]` is meaningful only for XX.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: [usize; 2],
}

impl Gate {
    pub fn one(kind: GateKind, q: usize) -> Self {
        Gate { kind, qubits: [q, q] }
    }

    pub fn xx(sign: i8, a: usize, b: usize) -> Self {
        Gate { kind: GateKind::Xx(sign), qubits: [a, b] }
    }

    pub fn support(&self) -> &[usize] {
        &self.qubits[..self.kind.arity()]
    }
}

/// The untimed gate sequence of one syndrome-extraction round.
pub fn surface17_gate_list() -> Vec<Gate> {
    let mut gates = Vec::with_capacity(70);
    for &anc in &SYNDROME_ANCILLAS {
        gates.push(Gate::one(GateKind::Prep, anc));
    }
    for (anc, pairs) in MS_X_BLOCK {
        for &(d, s) in pairs {
            gates.push(Gate::xx(s, d, anc));
        }
    }
    for (q, s) in MS_X_FIXUPS {
        gates.push(Gate::one(GateKind::Rx(s), q));
    }
    for q in 0..NUM_DATA {
        gates.push(Gate::one(GateKind::Ry(1), q));
    }
    for (anc, pairs) in MS_Z_BLOCK {
        for &(d, s) in pairs {
            gates.push(Gate::xx(s, d, anc));
        }
    }
    for (q, s) in MS_Z_FIXUPS {
        gates.push(Gate::one(GateKind::Rx(s), q));
    }
    for q in 0..NUM_DATA {
        gates.push(Gate::one(GateKind::Ry(-1), q));
    }
    for &anc in &SYNDROME_ANCILLAS {
        gates.push(Gate::one(GateKind::Meas, anc));
    }
    gates
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedGate {
    pub gate: Gate,
    pub start_us: f64,
    pub duration_us: f64,
}

impl TimedGate {
    pub fn kind(&self) -> GateKind {
        self.gate.kind
    }

    pub fn end_us(&self) -> f64 {
        self.start_us + self.duration_us
    }
}

/// Axis of a single-qubit over-rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn pauli(self) -> Pauli {
        match self {
            Axis::X => Pauli::X,
            Axis::Y => Pauli::Y,
            Axis::Z => Pauli::Z,
        }
    }
}

/// What physical process a fault site models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SiteKind {
    /// After a rotation gate, about its own axis.
    RotationError(Axis),
    /// After an XX gate, `XX` over-rotation.
    XxError,
    /// After an XX gate, motional heating.
    Heating,
    /// After a gate, on one participating qubit.
    GateDepolarizing,
    /// After a gate, on one participating qubit, rate times gate time.
    Dephasing,
    /// After PREP.
    PrepDepolarizing,
    /// Before MEAS.
    MeasDepolarizing,
    /// After an H or CNOT gate of the reference round.
    CliffordError,
}

/// A location where the noise model may insert a Pauli.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultSite {
    pub kind: SiteKind,
    /// The fault is applied just before gate `location`; `gates.len()` means
    /// after the last gate.
    pub location: usize,
    pub qubits: [usize; 2],
    pub arity: usize,
    /// Duration of the gate the site is attached to.
    pub duration_us: f64,
}

impl FaultSite {
    pub fn support(&self) -> &[usize] {
        &self.qubits[..self.arity]
    }
}

/// One timed syndrome-extraction round plus its fault sites.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedCircuit {
    pub gates: Vec<TimedGate>,
    pub sites: Vec<FaultSite>,
}

/// Per-category site counts of one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SiteCensus {
    pub single_qubit_gate: usize,
    pub two_qubit_gate: usize,
    pub heating: usize,
    pub depolarizing: usize,
    pub dephasing: usize,
    pub measurement: usize,
}

impl TimedCircuit {
    /// Attaches fault sites to an already timed gate list.
    pub fn from_timed_gates(gates: Vec<TimedGate>) -> Self {
        let mut sites = Vec::new();
        for (g, tg) in gates.iter().enumerate() {
            let gate = tg.gate;
            let d = tg.duration_us;
            let site = |kind, qubits: [usize; 2], arity| FaultSite {
                kind,
                location: g + 1,
                qubits,
                arity,
                duration_us: d,
            };
            match gate.kind {
                GateKind::Prep => {
                    sites.push(site(SiteKind::PrepDepolarizing, gate.qubits, 1));
                }
                GateKind::Meas => sites.push(FaultSite {
                    kind: SiteKind::MeasDepolarizing,
                    location: g,
                    qubits: gate.qubits,
                    arity: 1,
                    duration_us: d,
                }),
                GateKind::Rx(_) | GateKind::Ry(_) | GateKind::Rz(_) => {
                    let axis = match gate.kind {
                        GateKind::Rx(_) => Axis::X,
                        GateKind::Ry(_) => Axis::Y,
                        _ => Axis::Z,
                    };
                    sites.push(site(SiteKind::RotationError(axis), gate.qubits, 1));
                    sites.push(site(SiteKind::GateDepolarizing, gate.qubits, 1));
                    sites.push(site(SiteKind::Dephasing, gate.qubits, 1));
                }
                GateKind::H => sites.push(site(SiteKind::CliffordError, gate.qubits, 1)),
                GateKind::Cnot => sites.push(site(SiteKind::CliffordError, gate.qubits, 2)),
                GateKind::Xx(_) => {
                    let [a, b] = gate.qubits;
                    sites.push(site(SiteKind::XxError, [a, b], 2));
                    sites.push(site(SiteKind::Heating, [a, b], 2));
                    for q in [a, b] {
                        sites.push(site(SiteKind::GateDepolarizing, [q, q], 1));
                        sites.push(site(SiteKind::Dephasing, [q, q], 1));
                    }
                }
            }
        }
        TimedCircuit { gates, sites }
    }

    pub fn census(&self) -> SiteCensus {
        let mut c = SiteCensus::default();
        for s in &self.sites {
            match s.kind {
                SiteKind::RotationError(_) => c.single_qubit_gate += 1,
                SiteKind::XxError => c.two_qubit_gate += 1,
                SiteKind::Heating => c.heating += 1,
                SiteKind::GateDepolarizing | SiteKind::PrepDepolarizing => c.depolarizing += 1,
                SiteKind::Dephasing => c.dephasing += 1,
                SiteKind::MeasDepolarizing => c.measurement += 1,
                SiteKind::CliffordError if s.arity == 2 => c.two_qubit_gate += 1,
                SiteKind::CliffordError => c.single_qubit_gate += 1,
            }
        }
        c
    }

    pub fn count_gates(&self, pred: impl Fn(&GateKind) -> bool) -> usize {
        self.gates.iter().filter(|g| pred(&g.gate.kind)).count()
    }

    pub fn untimed(&self) -> Vec<Gate> {
        self.gates.iter().map(|g| g.gate).collect()
    }

    /// One gate per line: `KIND s q1 [q2] start_us duration_us`.
    ///
    /// `s` is `+`/`-` for XX, the signed number of quarter turns for
    /// rotations, and `.` for PREP/MEAS.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for tg in &self.gates {
            out.push_str(&format_timed_gate(tg));
            out.push('\n');
        }
        out
    }

    /// Parses [`TimedCircuit::dump`] output; fault sites are rebuilt.
    pub fn parse_dump(text: &str) -> Result<Self> {
        let gates = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                parse_timed_gate(l).map_err(|message| Error::Parse { line: i + 1, message })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TimedCircuit::from_timed_gates(gates))
    }
}

impl fmt::Display for TimedCircuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

fn format_timed_gate(tg: &TimedGate) -> String {
    let g = tg.gate;
    let sign = match g.kind {
        GateKind::Prep | GateKind::Meas | GateKind::H | GateKind::Cnot => ".".to_string(),
        GateKind::Xx(s) => if s > 0 { "+" } else { "-" }.to_string(),
        GateKind::Rx(k) | GateKind::Ry(k) | GateKind::Rz(k) => format!("{k:+}"),
    };
    let qubits = match g.kind.arity() {
        2 => format!("{} {}", g.qubits[0], g.qubits[1]),
        _ => g.qubits[0].to_string(),
    };
    format!("{} {} {} {} {}", g.kind.name(), sign, qubits, tg.start_us, tg.duration_us)
}

fn parse_timed_gate(line: &str) -> std::result::Result<TimedGate, String> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    let (name, sign) = match fields.as_slice() {
        [name, sign, ..] => (*name, *sign),
        _ => return Err(format!("too few fields in {line:?}")),
    };
    let arity = if name == "XX" || name == "CNOT" { 2 } else { 1 };
    if fields.len() != 4 + arity {
        return Err(format!("expected {} fields in {line:?}", 4 + arity));
    }
    let qubit = |s: &str| -> std::result::Result<usize, String> {
        let q = usize::from_str(s).map_err(|e| format!("bad qubit {s:?}: {e}"))?;
        if q >= NUM_QUBITS {
            return Err(format!("qubit {q} out of range"));
        }
        Ok(q)
    };
    let quarter = |s: &str| i8::from_str(s).map_err(|e| format!("bad angle {s:?}: {e}"));
    let kind = match name {
        "PREP" => GateKind::Prep,
        "MEAS" => GateKind::Meas,
        "H" => GateKind::H,
        "CNOT" => GateKind::Cnot,
        "RX" => GateKind::Rx(quarter(sign)?),
        "RY" => GateKind::Ry(quarter(sign)?),
        "RZ" => GateKind::Rz(quarter(sign)?),
        "XX" => match sign {
            "+" => GateKind::Xx(1),
            "-" => GateKind::Xx(-1),
            _ => return Err(format!("bad XX sign {sign:?}")),
        },
        _ => return Err(format!("unknown gate {name:?}")),
    };
    let q0 = qubit(fields[2])?;
    let q1 = if arity == 2 { qubit(fields[3])? } else { q0 };
    if arity == 2 && q0 == q1 {
        return Err(format!("{name} needs two distinct qubits"));
    }
    let time = |s: &str| f64::from_str(s).map_err(|e| format!("bad time {s:?}: {e}"));
    Ok(TimedGate {
        gate: Gate { kind, qubits: [q0, q1] },
        start_us: time(fields[2 + arity])?,
        duration_us: time(fields[3 + arity])?,
    })
}

/// Builds the timed round for `layout` with the serial schedule.
pub fn build_surface17_circuit(layout: &ChainLayout) -> TimedCircuit {
    build_surface17_circuit_with(layout, ScheduleMode::Serial)
}

pub fn build_surface17_circuit_with(layout: &ChainLayout, mode: ScheduleMode) -> TimedCircuit {
    let gates = surface17_gate_list();
    let timed = layout::time_gates(&gates, layout, mode);
    TimedCircuit::from_timed_gates(timed)
}

/// CNOT version of the round: X-type ancillas are sandwiched by H and act as
/// controls, Z-type ancillas are targets. Data order per ancilla matches the
/// MS round. Only used with the depolarizing model.
pub fn cnot_reference_gate_list() -> Vec<Gate> {
    let x_anc = &SYNDROME_ANCILLAS[..4];
    let mut gates = Vec::with_capacity(56);
    for &anc in &SYNDROME_ANCILLAS {
        gates.push(Gate::one(GateKind::Prep, anc));
    }
    for &anc in x_anc {
        gates.push(Gate::one(GateKind::H, anc));
    }
    for (anc, pairs) in MS_X_BLOCK {
        for &(d, _) in pairs {
            gates.push(Gate { kind: GateKind::Cnot, qubits: [anc, d] });
        }
    }
    for &anc in x_anc {
        gates.push(Gate::one(GateKind::H, anc));
    }
    for (anc, pairs) in MS_Z_BLOCK {
        for &(d, _) in pairs {
            gates.push(Gate { kind: GateKind::Cnot, qubits: [d, anc] });
        }
    }
    for &anc in &SYNDROME_ANCILLAS {
        gates.push(Gate::one(GateKind::Meas, anc));
    }
    gates
}

pub fn build_cnot_reference_circuit(layout: &ChainLayout) -> TimedCircuit {
    let timed = layout::time_gates(&cnot_reference_gate_list(), layout, ScheduleMode::Serial);
    TimedCircuit::from_timed_gates(timed)
}

/// Conjugates `frame` by `gate`, phase dropped. MEAS leaves the frame as is.
pub fn propagate(frame: PauliFrame, gate: &Gate) -> PauliFrame {
    let mut x = frame.x_mask();
    let mut z = frame.z_mask();
    let [a, b] = gate.qubits;
    match gate.kind {
        GateKind::Prep => {
            x &= !(1 << a);
            z &= !(1 << a);
        }
        GateKind::Meas => {}
        // anticommuting with X picks up a factor X
        GateKind::Rx(k) if k & 1 == 1 => x ^= z & (1 << a),
        GateKind::Rz(k) if k & 1 == 1 => z ^= x & (1 << a),
        GateKind::Ry(k) if k & 1 == 1 => {
            let anti = (x ^ z) & (1 << a);
            x ^= anti;
            z ^= anti;
        }
        // π rotations act trivially on the phase-free frame
        GateKind::Rx(_) | GateKind::Ry(_) | GateKind::Rz(_) => {}
        GateKind::Xx(_) => {
            if (z >> a ^ z >> b) & 1 == 1 {
                x ^= 1 << a | 1 << b;
            }
        }
        GateKind::H => {
            let swap = (x ^ z) & (1 << a);
            x ^= swap;
            z ^= swap;
        }
        GateKind::Cnot => {
            x ^= (x >> a & 1) << b;
            z ^= (z >> b & 1) << a;
        }
    }
    PauliFrame::from_masks(x, z)
}

/// Applies a local Pauli to the qubits of a site.
pub fn inject(frame: &mut PauliFrame, qubits: &[usize], p: LocalPauli) {
    frame.apply(qubits[0], p.first);
    if qubits.len() > 1 {
        frame.apply(qubits[1], p.second);
    }
}

/// Decoder-domain view of the data qubits of a frame (X and Z exchanged).
pub fn frame_to_vector(frame: &PauliFrame) -> DataErrorVector {
    let data = (1u32 << NUM_DATA) - 1;
    DataErrorVector::from_parts((frame.z_mask() & data) as u16, (frame.x_mask() & data) as u16)
}

/// Inverse of [`frame_to_vector`]; ancillas are left clean.
pub fn vector_to_frame(v: &DataErrorVector) -> PauliFrame {
    PauliFrame::from_masks(u32::from(v.z_part()), u32::from(v.x_part()))
}

/// Runs one round from `initial`, inserting `injected` Paulis at their sites.
///
/// Returns the ancilla outcomes as a syndrome and the post-round frame of the
/// data qubits.
pub fn run_round(
    initial: PauliFrame,
    circuit: &TimedCircuit,
    injected: &[(usize, LocalPauli)],
) -> Result<(Syndrome, PauliFrame)> {
    let n_sites = circuit.sites.len();
    for &(site, p) in injected {
        let s = circuit.sites.get(site).ok_or(Error::SiteOutOfRange { site, count: n_sites })?;
        if s.arity == 1 && p.second != Pauli::I {
            return Err(Error::ArityMismatch { pauli: format!("{}{}", p.first, p.second), arity: 1 });
        }
    }
    let mut frame = initial;
    let mut outcomes = 0u8;
    let inject_at = |frame: &mut PauliFrame, location: usize| {
        for &(site, p) in injected {
            let s = &circuit.sites[site];
            if s.location == location {
                inject(frame, s.support(), p);
            }
        }
    };
    for (g, tg) in circuit.gates.iter().enumerate() {
        inject_at(&mut frame, g);
        if tg.gate.kind == GateKind::Meas {
            let anc = tg.gate.qubits[0];
            if let Some(bit) = SYNDROME_ANCILLAS.iter().position(|&a| a == anc) {
                if frame.x_mask() >> anc & 1 == 1 {
                    outcomes |= 1 << bit;
                }
            }
        }
        frame = propagate(frame, &tg.gate);
    }
    inject_at(&mut frame, circuit.gates.len());
    let data = (1u32 << NUM_DATA) - 1;
    let data_frame = PauliFrame::from_masks(frame.x_mask() & data, frame.z_mask() & data);
    Ok((Syndrome::from_bits(outcomes), data_frame))
}

/// Effect of one Pauli fault on a round, packed for XOR accumulation:
/// bits 0–7 syndrome flips, bits 8–25 the data error vector it leaves.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct RoundEffect(pub u32);

impl RoundEffect {
    pub fn new(syndrome: Syndrome, data: DataErrorVector) -> Self {
        RoundEffect(u32::from(syndrome.bits()) | data.bits() << 8)
    }

    #[inline]
    pub fn syndrome(&self) -> Syndrome {
        Syndrome::from_bits(self.0 as u8)
    }

    #[inline]
    pub fn data(&self) -> DataErrorVector {
        DataErrorVector::from_bits(self.0 >> 8)
    }

    #[inline]
    pub fn is_trivial(&self) -> bool {
        self.0 == 0
    }
}

impl std::ops::BitXor for RoundEffect {
    type Output = RoundEffect;
    #[inline]
    fn bitxor(self, rhs: RoundEffect) -> RoundEffect {
        RoundEffect(self.0 ^ rhs.0)
    }
}

impl std::ops::BitXorAssign for RoundEffect {
    #[inline]
    fn bitxor_assign(&mut self, rhs: RoundEffect) {
        self.0 ^= rhs.0;
    }
}

/// Precomputed fault effects for a round.
///
/// Frame propagation is linear over F2, so the effect of any set of faults is
/// the XOR of single-fault effects, and an incoming data error contributes
/// only its ideal syndrome.
#[derive(Debug, Clone)]
pub struct FaultEffects {
    /// `[site][basis]` with basis 0 = X on the first qubit, 1 = Z on the
    /// first, 2 = X on the second, 3 = Z on the second.
    per_site: Vec<[RoundEffect; 4]>,
}

impl FaultEffects {
    pub fn new(circuit: &TimedCircuit) -> Self {
        let per_site = circuit
            .sites
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let eff = |q: usize, p: Pauli| -> RoundEffect {
                    let lp = if q == 0 { LocalPauli::one(p) } else { LocalPauli::two(Pauli::I, p) };
                    let (syn, data) = run_round(PauliFrame::IDENTITY, circuit, &[(i, lp)])
                        .expect("site index is in range");
                    RoundEffect::new(syn, frame_to_vector(&data))
                };
                let second = |p| if s.arity == 2 { eff(1, p) } else { RoundEffect::default() };
                [eff(0, Pauli::X), eff(0, Pauli::Z), second(Pauli::X), second(Pauli::Z)]
            })
            .collect();
        FaultEffects { per_site }
    }

    pub fn len(&self) -> usize {
        self.per_site.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_site.is_empty()
    }

    /// Effect of Pauli `p` inserted at `site`.
    #[inline]
    pub fn effect(&self, site: usize, p: LocalPauli) -> RoundEffect {
        let e = &self.per_site[site];
        let mut out = RoundEffect::default();
        if p.first.x_bit() {
            out ^= e[0];
        }
        if p.first.z_bit() {
            out ^= e[1];
        }
        if p.second.x_bit() {
            out ^= e[2];
        }
        if p.second.z_bit() {
            out ^= e[3];
        }
        out
    }

    /// Syndrome and outgoing data error of a round entered with `incoming`.
    #[inline]
    pub fn round(&self, incoming: DataErrorVector, faults: RoundEffect) -> (Syndrome, DataErrorVector) {
        (syndrome_of(incoming) ^ faults.syndrome(), incoming.compose(&faults.data()))
    }
}
