//! Phase-free Pauli operators on the 17 qubits of the code.

use std::fmt;

/// Number of physical qubits: data 0–8, ancillas 9–16.
pub const NUM_QUBITS: usize = 17;
pub const NUM_DATA: usize = 9;

const QUBIT_MASK: u32 = (1 << NUM_QUBITS) - 1;

/// Single-qubit Pauli, phase ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    pub const NON_IDENTITY: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    #[inline]
    pub fn x_bit(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    #[inline]
    pub fn z_bit(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }

    pub fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// Pauli operator on at most two qubits; the qubit ids live in the fault site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LocalPauli {
    pub first: Pauli,
    pub second: Pauli,
}

impl LocalPauli {
    pub const fn one(p: Pauli) -> Self {
        LocalPauli { first: p, second: Pauli::I }
    }

    pub const fn two(a: Pauli, b: Pauli) -> Self {
        LocalPauli { first: a, second: b }
    }

    pub fn is_identity(&self) -> bool {
        self.first == Pauli::I && self.second == Pauli::I
    }

    /// The 15 non-identity two-qubit Paulis, `IX` first, `ZZ` last.
    pub fn two_qubit_non_identity() -> impl Iterator<Item = LocalPauli> {
        Pauli::ALL
            .into_iter()
            .flat_map(|a| Pauli::ALL.into_iter().map(move |b| LocalPauli::two(a, b)))
            .filter(|p| !p.is_identity())
    }
}

/// Pauli frame over all 17 qubits as two bit-planes.
///
/// Qubit `q` carries X iff bit `q` of `x` is set, Z iff bit `q` of `z` is set,
/// and Y iff both.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct PauliFrame {
    x: u32,
    z: u32,
}

impl PauliFrame {
    pub const IDENTITY: PauliFrame = PauliFrame { x: 0, z: 0 };

    /// Builds a frame from raw masks; bits above qubit 16 are dropped.
    pub fn from_masks(x: u32, z: u32) -> Self {
        PauliFrame { x: x & QUBIT_MASK, z: z & QUBIT_MASK }
    }

    pub fn single(qubit: usize, p: Pauli) -> Self {
        let mut f = PauliFrame::IDENTITY;
        f.apply(qubit, p);
        f
    }

    #[inline]
    pub fn x_mask(&self) -> u32 {
        self.x
    }

    #[inline]
    pub fn z_mask(&self) -> u32 {
        self.z
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        Pauli::from_bits(self.x >> qubit & 1 == 1, self.z >> qubit & 1 == 1)
    }

    /// Multiplies `p` onto `qubit`.
    #[inline]
    pub fn apply(&mut self, qubit: usize, p: Pauli) {
        debug_assert!(qubit < NUM_QUBITS);
        if p.x_bit() {
            self.x ^= 1 << qubit;
        }
        if p.z_bit() {
            self.z ^= 1 << qubit;
        }
    }

    #[inline]
    pub fn compose(&self, other: &PauliFrame) -> PauliFrame {
        PauliFrame { x: self.x ^ other.x, z: self.z ^ other.z }
    }

    /// Clears both bit-planes on `qubit`.
    #[inline]
    pub fn reset(&mut self, qubit: usize) {
        self.x &= !(1 << qubit);
        self.z &= !(1 << qubit);
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Number of qubits with a non-identity component.
    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }
}

impl fmt::Display for PauliFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..NUM_QUBITS {
            write!(f, "{}", self.get(q))?;
        }
        Ok(())
    }
}
