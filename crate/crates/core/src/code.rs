//! The surface-17 code: check matrices, syndromes, logical operators and
//! the minimum-weight lookup tables.
//!
//! Error vectors follow the binary symplectic layout `(X-part | Z-part)`
//! over the nine data qubits, and syndromes are the rows of the block
//! diagonal check matrix `T = diag(H, G^T)` in printed order.

use std::fmt;

use crate::error::{Error, Result};
use crate::pauli::{Pauli, NUM_DATA};

const HALF_MASK: u32 = (1 << NUM_DATA) - 1;

/// Rows of `H` (applied to the X-part), as data-qubit supports.
pub const H_ROWS: [&[usize]; 4] = [&[1, 2], &[0, 1, 3, 4], &[4, 5, 7, 8], &[6, 7]];

/// Rows of `G^T` (applied to the Z-part), as data-qubit supports.
pub const GT_ROWS: [&[usize]; 4] = [&[0, 3], &[1, 2, 4, 5], &[3, 4, 6, 7], &[5, 8]];

const fn support_mask(support: &[usize]) -> u16 {
    let mut m = 0u16;
    let mut i = 0;
    while i < support.len() {
        m |= 1 << support[i];
        i += 1;
    }
    m
}

/// Element of F2^18: bits 0–8 are X components on data qubits 0–8, bits
/// 9–17 are Z components.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct DataErrorVector(u32);

impl DataErrorVector {
    pub const ZERO: DataErrorVector = DataErrorVector(0);

    pub fn from_bits(bits: u32) -> Self {
        DataErrorVector(bits & ((1 << 18) - 1))
    }

    pub fn from_parts(x_part: u16, z_part: u16) -> Self {
        let x = u32::from(x_part) & HALF_MASK;
        let z = u32::from(z_part) & HALF_MASK;
        DataErrorVector(x | z << NUM_DATA)
    }

    /// Builds a vector from the 18 entries of the row vector, index 0 first.
    pub fn from_row(row: &[u8; 18]) -> Self {
        let bits = row
            .iter()
            .enumerate()
            .fold(0u32, |acc, (i, &b)| acc | (u32::from(b & 1) << i));
        DataErrorVector(bits)
    }

    pub fn single(qubit: usize, p: Pauli) -> Self {
        let x = if p.x_bit() { 1u16 << qubit } else { 0 };
        let z = if p.z_bit() { 1u16 << qubit } else { 0 };
        Self::from_parts(x, z)
    }

    #[inline]
    pub fn bits(&self) -> u32 {
        self.0
    }

    #[inline]
    pub fn x_part(&self) -> u16 {
        (self.0 & HALF_MASK) as u16
    }

    #[inline]
    pub fn z_part(&self) -> u16 {
        (self.0 >> NUM_DATA & HALF_MASK) as u16
    }

    pub fn bit(&self, index: usize) -> bool {
        self.0 >> index & 1 == 1
    }

    pub fn pauli(&self, qubit: usize) -> Pauli {
        Pauli::from_bits(self.x_part() >> qubit & 1 == 1, self.z_part() >> qubit & 1 == 1)
    }

    /// Qubits with any non-identity component; Y counts once.
    pub fn weight(&self) -> u32 {
        (self.x_part() | self.z_part()).count_ones()
    }

    pub fn is_zero(&self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn compose(&self, other: &DataErrorVector) -> DataErrorVector {
        DataErrorVector(self.0 ^ other.0)
    }

    /// Sort key for lexicographic comparison with index 0 most significant.
    pub fn lex_key(&self) -> u32 {
        self.0.reverse_bits() >> (32 - 18)
    }

    pub fn to_pauli_string(&self) -> String {
        (0..NUM_DATA).map(|q| self.pauli(q).to_char()).collect()
    }

    pub fn from_pauli_string(s: &str) -> Option<Self> {
        if s.chars().count() != NUM_DATA {
            return None;
        }
        let mut v = DataErrorVector::ZERO;
        for (q, c) in s.chars().enumerate() {
            v = v.compose(&DataErrorVector::single(q, Pauli::from_char(c)?));
        }
        Some(v)
    }
}

impl fmt::Display for DataErrorVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_pauli_string())
    }
}

/// Eight stabilizer outcomes; bits 0–3 are the rows of `H`, bits 4–7 the
/// rows of `G^T`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Syndrome(u8);

impl Syndrome {
    pub const TRIVIAL: Syndrome = Syndrome(0);

    pub fn from_bits(bits: u8) -> Self {
        Syndrome(bits)
    }

    pub fn from_halves(x_half: u8, z_half: u8) -> Self {
        Syndrome((x_half & 0xf) | (z_half & 0xf) << 4)
    }

    #[inline]
    pub fn bits(&self) -> u8 {
        self.0
    }

    /// Outcomes of the `H` rows.
    #[inline]
    pub fn x_half(&self) -> u8 {
        self.0 & 0xf
    }

    /// Outcomes of the `G^T` rows.
    #[inline]
    pub fn z_half(&self) -> u8 {
        self.0 >> 4
    }

    pub fn bit(&self, row: usize) -> bool {
        self.0 >> row & 1 == 1
    }

    pub fn is_trivial(&self) -> bool {
        self.0 == 0
    }

    pub fn to_array(&self) -> [u8; 8] {
        std::array::from_fn(|i| (self.0 >> i) & 1)
    }
}

impl std::ops::BitXor for Syndrome {
    type Output = Syndrome;
    fn bitxor(self, rhs: Syndrome) -> Syndrome {
        Syndrome(self.0 ^ rhs.0)
    }
}

/// `H`, `G^T` and the 8x18 block-diagonal map `T` between them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckMatrices {
    pub h: [u16; 4],
    pub gt: [u16; 4],
}

impl Default for CheckMatrices {
    fn default() -> Self {
        Self::surface17()
    }
}

impl CheckMatrices {
    pub fn surface17() -> Self {
        CheckMatrices {
            h: H_ROWS.map(support_mask),
            gt: GT_ROWS.map(support_mask),
        }
    }

    /// Rows of `T` as 18-bit masks over the error vector.
    pub fn t_rows(&self) -> [u32; 8] {
        std::array::from_fn(|r| {
            if r < 4 {
                u32::from(self.h[r])
            } else {
                u32::from(self.gt[r - 4]) << NUM_DATA
            }
        })
    }

    /// `T` as a dense 0/1 matrix, rows and columns in printed order.
    pub fn t_matrix(&self) -> [[u8; 18]; 8] {
        let rows = self.t_rows();
        std::array::from_fn(|r| std::array::from_fn(|c| (rows[r] >> c & 1) as u8))
    }

    #[inline]
    pub fn x_half_syndrome(&self, x_part: u16) -> u8 {
        half_syndrome(&self.h, x_part)
    }

    #[inline]
    pub fn z_half_syndrome(&self, z_part: u16) -> u8 {
        half_syndrome(&self.gt, z_part)
    }

    /// `T e^T` over F2.
    #[inline]
    pub fn syndrome_of(&self, e: DataErrorVector) -> Syndrome {
        Syndrome::from_halves(self.x_half_syndrome(e.x_part()), self.z_half_syndrome(e.z_part()))
    }
}

#[inline]
fn half_syndrome(rows: &[u16; 4], part: u16) -> u8 {
    rows.iter()
        .enumerate()
        .fold(0u8, |acc, (i, &row)| acc | (((row & part).count_ones() & 1) as u8) << i)
}

/// Syndrome of `e` under the surface-17 check matrices.
pub fn syndrome_of(e: DataErrorVector) -> Syndrome {
    CheckMatrices::surface17().syndrome_of(e)
}

/// Logical operators in the `(X-part | Z-part)` convention of the check
/// matrices: `logical_x` is an X-part mask, `logical_z` a Z-part mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LogicalOperators {
    pub logical_x: u16,
    pub logical_z: u16,
}

impl Default for LogicalOperators {
    fn default() -> Self {
        LogicalOperators {
            logical_x: support_mask(&[0, 1, 2]),
            logical_z: support_mask(&[0, 3, 6]),
        }
    }
}

impl LogicalOperators {
    pub fn logical_x_vector(&self) -> DataErrorVector {
        DataErrorVector::from_parts(self.logical_x, 0)
    }

    pub fn logical_z_vector(&self) -> DataErrorVector {
        DataErrorVector::from_parts(0, self.logical_z)
    }

    /// Scores a residual with trivial syndrome: `(x_failure, z_failure)`.
    pub fn failures(&self, residual: DataErrorVector) -> (bool, bool) {
        let x_fail = (residual.x_part() & self.logical_z).count_ones() & 1 == 1;
        let z_fail = (residual.z_part() & self.logical_x).count_ones() & 1 == 1;
        (x_fail, z_fail)
    }
}

/// Checks whether a syndrome-free residual implements a logical operator.
pub fn is_logical_failure(residual: DataErrorVector) -> Result<(bool, bool)> {
    if !syndrome_of(residual).is_trivial() {
        return Err(Error::NontrivialResidual(residual.to_pauli_string()));
    }
    Ok(LogicalOperators::default().failures(residual))
}

/// Two 16-entry tables from half-syndrome to minimum-weight correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LookupTable {
    /// Keyed on the `H` half; values are X-part masks.
    pub x_table: [u16; 16],
    /// Keyed on the `G^T` half; values are Z-part masks.
    pub z_table: [u16; 16],
}

impl Default for LookupTable {
    fn default() -> Self {
        build_lookup_tables()
    }
}

/// Minimum-weight correction for every half-syndrome, ties broken towards the
/// lexicographically smallest vector (qubit 0 most significant).
pub fn build_lookup_tables() -> LookupTable {
    let checks = CheckMatrices::surface17();
    LookupTable {
        x_table: build_half(|m| checks.x_half_syndrome(m)),
        z_table: build_half(|m| checks.z_half_syndrome(m)),
    }
}

fn build_half(key_of: impl Fn(u16) -> u8) -> [u16; 16] {
    let mut best: [Option<u16>; 16] = [None; 16];
    // with one half zero, comparing full vectors reduces to this 9-bit key
    let lex = |m: u16| m.reverse_bits() >> 7;
    for mask in 0u16..1 << NUM_DATA {
        let slot = &mut best[key_of(mask) as usize];
        let better = match *slot {
            None => true,
            Some(cur) => (mask.count_ones(), lex(mask)) < (cur.count_ones(), lex(cur)),
        };
        if better {
            *slot = Some(mask);
        }
    }
    best.map(|m| m.expect("every half-syndrome is reachable"))
}

impl LookupTable {
    pub fn decode(&self, s: Syndrome) -> DataErrorVector {
        DataErrorVector::from_parts(
            self.x_table[s.x_half() as usize],
            self.z_table[s.z_half() as usize],
        )
    }

    /// 32 lines of `half correction`, X table first.
    pub fn to_canonical_text(&self) -> String {
        let mut out = String::with_capacity(32 * 12);
        for (key, &mask) in self.x_table.iter().enumerate() {
            let v = DataErrorVector::from_parts(mask, 0);
            out.push_str(&format!("{key:x} {v}\n"));
        }
        for (key, &mask) in self.z_table.iter().enumerate() {
            let v = DataErrorVector::from_parts(0, mask);
            out.push_str(&format!("{key:x} {v}\n"));
        }
        out
    }

    pub fn from_canonical_text(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().collect();
        if lines.len() != 32 {
            return Err(Error::Parse {
                line: lines.len(),
                message: format!("expected 32 lines, found {}", lines.len()),
            });
        }
        let mut table = LookupTable { x_table: [0; 16], z_table: [0; 16] };
        for (i, line) in lines.iter().enumerate() {
            let err = |message: String| Error::Parse { line: i + 1, message };
            let mut parts = line.split_whitespace();
            let (Some(key), Some(pauli), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(err(format!("malformed line {line:?}")));
            };
            let key = u8::from_str_radix(key, 16)
                .ok()
                .filter(|&k| k < 16)
                .ok_or_else(|| err(format!("bad half-syndrome {key:?}")))?;
            if key as usize != i % 16 {
                return Err(err(format!("expected key {:x}, found {key:x}", i % 16)));
            }
            let v = DataErrorVector::from_pauli_string(pauli)
                .ok_or_else(|| err(format!("bad Pauli string {pauli:?}")))?;
            if i < 16 {
                if v.z_part() != 0 {
                    return Err(err("X table entry carries Z components".into()));
                }
                table.x_table[key as usize] = v.x_part();
            } else {
                if v.x_part() != 0 {
                    return Err(err("Z table entry carries X components".into()));
                }
                table.z_table[key as usize] = v.z_part();
            }
        }
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PRINTED_T: [[u8; 18]; 8] = [
        [0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
        [1, 1, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 1, 1, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 0, 1, 1, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 0, 1, 1, 0],
        [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 1],
    ];

    #[test]
    fn t_matches_printed_matrix() {
        assert_eq!(CheckMatrices::surface17().t_matrix(), PRINTED_T);
    }

    #[test]
    fn row_weights_are_two_or_four() {
        let c = CheckMatrices::surface17();
        for row in c.h.iter().chain(c.gt.iter()) {
            assert!(matches!(row.count_ones(), 2 | 4));
        }
    }

    #[test]
    fn syndrome_examples() {
        assert!(syndrome_of(DataErrorVector::ZERO).is_trivial());
        let x0 = DataErrorVector::single(0, Pauli::X);
        assert_eq!(syndrome_of(x0).to_array(), [0, 1, 0, 0, 0, 0, 0, 0]);
        let e2563 =
            DataErrorVector::from_row(&[0, 0, 0, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 1, 1]);
        assert_eq!(e2563.to_pauli_string(), "IIIIIIXZY");
        assert_eq!(syndrome_of(e2563).to_array(), [0, 0, 1, 1, 0, 0, 1, 1]);
    }

    #[test]
    fn weight_counts_y_once() {
        let y = DataErrorVector::single(3, Pauli::Y);
        assert_eq!(y.weight(), 1);
        assert!(y.bit(3) && y.bit(12));
    }

    #[test]
    fn stabilizer_rows_have_trivial_syndrome() {
        // rows of one block are stabilizers acting on the other part
        let c = CheckMatrices::surface17();
        for &row in &c.h {
            assert!(c.syndrome_of(DataErrorVector::from_parts(0, row)).is_trivial());
        }
        for &row in &c.gt {
            assert!(c.syndrome_of(DataErrorVector::from_parts(row, 0)).is_trivial());
        }
    }

    #[test]
    fn logical_operators() {
        let l = LogicalOperators::default();
        let lx = l.logical_x_vector();
        let lz = l.logical_z_vector();
        assert!(syndrome_of(lx).is_trivial());
        assert!(syndrome_of(lz).is_trivial());
        assert_eq!(lx.weight(), 3);
        assert_eq!(lz.weight(), 3);
        // odd overlap: they anticommute
        assert_eq!((l.logical_x & l.logical_z).count_ones() % 2, 1);
    }

    #[test]
    fn logical_failure_examples() {
        assert_eq!(is_logical_failure(DataErrorVector::ZERO), Ok((false, false)));
        let l = LogicalOperators::default();
        assert_eq!(is_logical_failure(l.logical_x_vector()), Ok((true, false)));
        assert_eq!(is_logical_failure(l.logical_z_vector()), Ok((false, true)));
        let c = CheckMatrices::surface17();
        for &row in &c.h {
            assert_eq!(is_logical_failure(DataErrorVector::from_parts(0, row)), Ok((false, false)));
        }
        for &row in &c.gt {
            assert_eq!(is_logical_failure(DataErrorVector::from_parts(row, 0)), Ok((false, false)));
        }
        assert!(is_logical_failure(DataErrorVector::single(4, Pauli::X)).is_err());
    }

    #[test]
    fn lookup_zero_and_single_bit_entries() {
        let t = build_lookup_tables();
        assert_eq!(t.x_table[0], 0);
        assert_eq!(t.z_table[0], 0);
        // only the {1,2} row fires: X on qubit 2
        assert_eq!(t.x_table[0b0001], 1 << 2);
    }

    #[test]
    fn lookup_reproduces_its_keys() {
        let c = CheckMatrices::surface17();
        let t = build_lookup_tables();
        for key in 0..16u8 {
            assert_eq!(c.x_half_syndrome(t.x_table[key as usize]), key);
            assert_eq!(c.z_half_syndrome(t.z_table[key as usize]), key);
        }
    }

    #[test]
    fn canonical_text_round_trip() {
        let t = build_lookup_tables();
        let text = t.to_canonical_text();
        assert_eq!(text.lines().count(), 32);
        assert!(text.starts_with("0 IIIIIIIII\n1 IIXIIIIII\n"));
        assert_eq!(LookupTable::from_canonical_text(&text), Ok(t));
    }

    #[test]
    fn canonical_text_rejects_garbage() {
        let t = build_lookup_tables();
        let text = t.to_canonical_text().replacen("1 IIXIIIIII", "1 IIZIIIIII", 1);
        assert!(matches!(
            LookupTable::from_canonical_text(&text),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(LookupTable::from_canonical_text("0 IIIIIIIII\n").is_err());
    }
}
