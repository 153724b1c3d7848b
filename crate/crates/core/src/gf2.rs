//! Dense linear algebra over GF(2).
//!
//! Vectors are packed little-endian into `u64` words; bit `j` of a vector lives
//! in word `j / 64` at position `j % 64`. Every row operation is a word-wise XOR.

use std::fmt;
use std::ops::{BitXor, BitXorAssign};
use std::str::FromStr;

use crate::error::{Error, Result};

const WORD: usize = 64;

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (j, &b) in bits.iter().enumerate() {
            if b {
                v.set(j, true);
            }
        }
        v
    }

    /// Builds a vector of `len` bits from the low bits of `value` (bit j = coordinate j).
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= WORD, "from_u64 supports at most 64 bits");
        let mut v = Self::zeros(len);
        if len > 0 {
            let mask = if len == WORD { u64::MAX } else { (1u64 << len) - 1 };
            v.words[0] = value & mask;
        }
        v
    }

    /// Unit vector with a single one at `pos`.
    pub fn unit(len: usize, pos: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(pos, true);
        v
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self::zeros(len);
        for j in 0..len {
            v.set(j, true);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, j: usize) -> bool {
        debug_assert!(j < self.len);
        (self.words[j / WORD] >> (j % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, j: usize, bit: bool) {
        debug_assert!(j < self.len);
        let mask = 1u64 << (j % WORD);
        if bit {
            self.words[j / WORD] |= mask;
        } else {
            self.words[j / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, j: usize) {
        self.words[j / WORD] ^= 1u64 << (j % WORD);
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Index of the first nonzero coordinate.
    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(k, w)| k * WORD + w.trailing_zeros() as usize)
    }

    /// Index of the last nonzero coordinate.
    pub fn last_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &w)| w != 0)
            .map(|(k, w)| k * WORD + (WORD - 1 - w.leading_zeros() as usize))
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &BitVector) -> bool {
        assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum::<u32>()
            % 2
            == 1
    }

    /// Coordinates `[start, end)` as a new vector.
    pub fn slice(&self, start: usize, end: usize) -> BitVector {
        assert!(start <= end && end <= self.len);
        let mut out = BitVector::zeros(end - start);
        for j in start..end {
            if self.get(j) {
                out.set(j - start, true);
            }
        }
        out
    }

    /// Writes `src` into coordinates starting at `offset`.
    pub fn place(&mut self, offset: usize, src: &BitVector) {
        assert!(offset + src.len <= self.len);
        for j in 0..src.len {
            self.set(offset + j, src.get(j));
        }
    }

    pub fn concat(&self, other: &BitVector) -> BitVector {
        let mut out = BitVector::zeros(self.len + other.len);
        out.place(0, self);
        out.place(self.len, other);
        out
    }

    /// Low 64 coordinates packed into an integer (coordinate j is bit j).
    pub fn to_u64(&self) -> u64 {
        assert!(self.len <= WORD, "vector longer than 64 bits");
        self.words.first().copied().unwrap_or(0)
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|j| self.get(j)).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |j| self.get(j))
    }

    /// Hexadecimal rendering, most significant nibble first, `len` bits wide.
    pub fn to_hex(&self) -> String {
        if self.len == 0 {
            return String::from("-");
        }
        let nibbles = self.len.div_ceil(4);
        let mut s = String::with_capacity(nibbles);
        for k in (0..nibbles).rev() {
            let mut nib = 0u32;
            for b in 0..4 {
                let j = 4 * k + b;
                if j < self.len && self.get(j) {
                    nib |= 1 << b;
                }
            }
            s.push(std::char::from_digit(nib, 16).unwrap());
        }
        s
    }
}

impl BitXorAssign<&BitVector> for BitVector {
    fn bitxor_assign(&mut self, rhs: &BitVector) {
        assert_eq!(self.len, rhs.len, "xor of vectors with different lengths");
        for (a, b) in self.words.iter_mut().zip(&rhs.words) {
            *a ^= b;
        }
    }
}

impl BitXor<&BitVector> for &BitVector {
    type Output = BitVector;
    fn bitxor(self, rhs: &BitVector) -> BitVector {
        let mut out = self.clone();
        out ^= rhs;
        out
    }
}

impl FromIterator<bool> for BitVector {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        BitVector::from_bits(&iter.into_iter().collect::<Vec<_>>())
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl FromStr for BitVector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse {
                    line: 1,
                    msg: format!("unexpected character {other:?}"),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BitVector::from_bits(&bits))
    }
}

/// Binary matrix stored as packed rows. A matrix may have zero rows (an empty
/// generator), but always has at least one column.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    cols: usize,
    rows: Vec<BitVector>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            cols,
            rows: vec![BitVector::zeros(cols); rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            cols: n,
            rows: (0..n).map(|i| BitVector::unit(n, i)).collect(),
        }
    }

    pub fn from_rows(cols: usize, rows: Vec<BitVector>) -> Result<Self> {
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch(format!(
                "row of length {} in a matrix with {cols} columns",
                bad.len()
            )));
        }
        Ok(Self { cols, rows })
    }

    /// Convenience constructor from nested `0`/`1` literals.
    pub fn from_u8_rows(rows: &[&[u8]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let rows = rows
            .iter()
            .map(|r| {
                assert_eq!(r.len(), cols);
                BitVector::from_bits(&r.iter().map(|&b| b != 0).collect::<Vec<_>>())
            })
            .collect();
        Self { cols, rows }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &BitVector {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[BitVector] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<BitVector> {
        self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].get(j)
    }

    pub fn set(&mut self, i: usize, j: usize, bit: bool) {
        self.rows[i].set(j, bit);
    }

    /// Row vector times matrix: `x · self`.
    pub fn left_mul(&self, x: &BitVector) -> BitVector {
        assert_eq!(x.len(), self.n_rows());
        let mut out = BitVector::zeros(self.cols);
        for (i, row) in self.rows.iter().enumerate() {
            if x.get(i) {
                out ^= row;
            }
        }
        out
    }

    pub fn mat_mul(&self, other: &BitMatrix) -> Result<BitMatrix> {
        mat_mul(self, other)
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.n_rows());
        for (i, row) in self.rows.iter().enumerate() {
            for j in 0..self.cols {
                if row.get(j) {
                    t.rows[j].set(i, true);
                }
            }
        }
        t
    }

    /// Columns `[start, end)` of every row.
    pub fn columns(&self, start: usize, end: usize) -> BitMatrix {
        BitMatrix {
            cols: end - start,
            rows: self.rows.iter().map(|r| r.slice(start, end)).collect(),
        }
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &BitMatrix) -> BitMatrix {
        let (r1, c1) = (self.n_rows(), self.cols);
        let (r2, c2) = (other.n_rows(), other.cols);
        let mut out = BitMatrix::zeros(r1 * r2, c1 * c2);
        for i1 in 0..r1 {
            for j1 in 0..c1 {
                if !self.get(i1, j1) {
                    continue;
                }
                for i2 in 0..r2 {
                    for j2 in 0..c2 {
                        if other.get(i2, j2) {
                            out.set(i1 * r2 + i2, j1 * c2 + j2, true);
                        }
                    }
                }
            }
        }
        out
    }

    pub fn rank(&self) -> usize {
        rank(self)
    }

    /// Parses the text format: a `rows cols` header, then one line of `0`/`1`
    /// characters per row. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<BitMatrix> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing 'rows cols' header".into(),
        })?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: hline,
                msg: format!("bad header: {e}"),
            })?;
        let [rows, cols] = dims[..] else {
            return Err(Error::Parse {
                line: hline,
                msg: "header must be 'rows cols'".into(),
            });
        };
        if rows == 0 || cols == 0 {
            return Err(Error::Parse {
                line: hline,
                msg: "matrix dimensions must be positive".into(),
            });
        }
        let mut out = Vec::with_capacity(rows);
        for (ln, line) in lines {
            if out.len() == rows {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("extra row beyond the declared {rows}"),
                });
            }
            if line.chars().count() != cols {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("expected {cols} characters, found {}", line.chars().count()),
                });
            }
            let row = line.parse::<BitVector>().map_err(|_| Error::Parse {
                line: ln,
                msg: "row must consist of '0' and '1' only".into(),
            })?;
            out.push(row);
        }
        if out.len() != rows {
            return Err(Error::Parse {
                line: text.lines().count(),
                msg: format!("expected {rows} rows, found {}", out.len()),
            });
        }
        Ok(BitMatrix { cols, rows: out })
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n_rows(), self.cols);
        for r in &self.rows {
            s.push_str(&r.to_string());
            s.push('\n');
        }
        s
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitMatrix[")?;
        for (i, r) in self.rows.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, "]")
    }
}

/// Incrementally built echelon basis that remembers, for every stored row,
/// which input rows were combined to produce it.
///
/// Rows are inserted in order; a row that reduces to zero is dependent and is
/// recorded as such. Reducing a target against the basis yields its remainder
/// together with the input-row combination, so `solve` is deterministic: any
/// coordinate of a dependent input row is zero.
#[derive(Clone, Debug)]
pub struct EchelonBasis {
    len: usize,
    inputs: usize,
    pivots: Vec<usize>,
    rows: Vec<BitVector>,
    combos: Vec<BitVector>,
    dependents: Vec<BitVector>,
}

impl EchelonBasis {
    pub fn new(len: usize, capacity: usize) -> Self {
        Self {
            len,
            inputs: 0,
            pivots: Vec::new(),
            rows: Vec::new(),
            combos: Vec::with_capacity(capacity),
            dependents: Vec::new(),
        }
    }

    pub fn from_rows<'a>(len: usize, rows: impl IntoIterator<Item = &'a BitVector>) -> Self {
        let rows: Vec<&BitVector> = rows.into_iter().collect();
        let n = rows.len();
        let mut b = Self::new(len, n);
        for r in rows {
            b.push_sized(r, n);
        }
        b
    }

    fn push_sized(&mut self, row: &BitVector, total_inputs: usize) -> bool {
        assert_eq!(row.len(), self.len);
        let k = self.inputs;
        self.inputs += 1;
        let mut combo = BitVector::zeros(total_inputs);
        combo.set(k, true);
        let mut r = row.clone();
        for (idx, &p) in self.pivots.iter().enumerate() {
            if r.get(p) {
                r ^= &self.rows[idx];
                combo ^= &self.combos[idx];
            }
        }
        match r.first_one() {
            Some(p) => {
                self.pivots.push(p);
                self.rows.push(r);
                self.combos.push(combo);
                true
            }
            None => {
                self.dependents.push(combo);
                false
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn input_count(&self) -> usize {
        self.inputs
    }

    /// Reduces `target`; returns the remainder and the input-row combination used.
    pub fn reduce(&self, target: &BitVector) -> (BitVector, BitVector) {
        let mut r = target.clone();
        let mut combo = BitVector::zeros(self.inputs);
        for (idx, &p) in self.pivots.iter().enumerate() {
            if r.get(p) {
                r ^= &self.rows[idx];
                combo ^= &self.combos[idx];
            }
        }
        (r, combo)
    }

    pub fn contains(&self, target: &BitVector) -> bool {
        let mut r = target.clone();
        for (idx, &p) in self.pivots.iter().enumerate() {
            if r.get(p) {
                r ^= &self.rows[idx];
            }
        }
        r.is_zero()
    }

    /// Coefficients `x` with `x · inputs == target`, if `target` is in the span.
    pub fn solve(&self, target: &BitVector) -> Option<BitVector> {
        let (rem, combo) = self.reduce(target);
        rem.is_zero().then_some(combo)
    }

    /// Basis of the left kernel: combinations of input rows summing to zero.
    pub fn left_kernel(&self) -> &[BitVector] {
        &self.dependents
    }
}

pub fn mat_mul(a: &BitMatrix, b: &BitMatrix) -> Result<BitMatrix> {
    if a.n_cols() != b.n_rows() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} times {}x{}",
            a.n_rows(),
            a.n_cols(),
            b.n_rows(),
            b.n_cols()
        )));
    }
    Ok(BitMatrix {
        cols: b.n_cols(),
        rows: a.rows.iter().map(|r| b.left_mul(r)).collect(),
    })
}

pub fn rank(m: &BitMatrix) -> usize {
    EchelonBasis::from_rows(m.n_cols(), m.rows()).rank()
}

/// Solves `x · a == b`. When several solutions exist, coordinates belonging to
/// rows that are dependent on earlier rows of `a` are zero.
pub fn solve_left(a: &BitMatrix, b: &BitVector) -> Result<Option<BitVector>> {
    if a.n_cols() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "system with {} columns, right-hand side of length {}",
            a.n_cols(),
            b.len()
        )));
    }
    Ok(EchelonBasis::from_rows(a.n_cols(), a.rows()).solve(b))
}

/// Left kernel basis of `m`: all `x` with `x · m == 0`.
pub fn left_kernel(m: &BitMatrix) -> Vec<BitVector> {
    EchelonBasis::from_rows(m.n_cols(), m.rows())
        .left_kernel()
        .to_vec()
}

/// Canonical (fully reduced, sorted by pivot) basis of the row space spanned by
/// `rows`. Two sets of vectors span the same space iff their canonical bases
/// are equal.
pub fn canonical_basis(len: usize, rows: &[BitVector]) -> Vec<BitVector> {
    let basis = EchelonBasis::from_rows(len, rows);
    let mut pairs: Vec<(usize, BitVector)> = basis
        .pivots
        .iter()
        .copied()
        .zip(basis.rows.iter().cloned())
        .collect();
    pairs.sort_by_key(|(p, _)| *p);
    // Back-substitute so every pivot column has a single one.
    for i in (0..pairs.len()).rev() {
        let (p, row) = pairs[i].clone();
        for (_, other) in pairs.iter_mut().take(i) {
            if other.get(p) {
                *other ^= &row;
            }
        }
    }
    pairs.into_iter().map(|(_, r)| r).collect()
}

/// Generator matrix in minimum span form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MsfForm {
    pub matrix: BitMatrix,
    pub starts: Vec<usize>,
    pub ends: Vec<usize>,
}

/// Minimum span form: a forward elimination makes the row starts distinct, then
/// rows sharing an end are combined (the later-starting row is added to the
/// earlier one) until the ends are distinct as well.
pub fn minimum_span_form(g: &BitMatrix) -> Result<MsfForm> {
    let r = rank(g);
    if r < g.n_rows() {
        return Err(Error::RankDeficient {
            rank: r,
            rows: g.n_rows(),
        });
    }
    let mut rows: Vec<BitVector> = g.rows().to_vec();
    let n = rows.len();
    // forward pass
    let mut top = 0;
    for col in 0..g.n_cols() {
        if top == n {
            break;
        }
        let Some(p) = (top..n).find(|&i| rows[i].get(col)) else {
            continue;
        };
        rows.swap(top, p);
        let pivot = rows[top].clone();
        for row in rows.iter_mut().skip(top + 1) {
            if row.get(col) {
                *row ^= &pivot;
            }
        }
        top += 1;
    }
    // backward pass
    loop {
        let mut by_end: Vec<Option<usize>> = vec![None; g.n_cols()];
        let mut clash = None;
        for (i, row) in rows.iter().enumerate().take(n) {
            let e = row.last_one().expect("full rank rows are nonzero");
            match by_end[e] {
                Some(k) => {
                    clash = Some((k, i));
                    break;
                }
                None => by_end[e] = Some(i),
            }
        }
        let Some((a, b)) = clash else { break };
        let (sa, sb) = (rows[a].first_one().unwrap(), rows[b].first_one().unwrap());
        let (early, late) = if sa < sb { (a, b) } else { (b, a) };
        let late_row = rows[late].clone();
        rows[early] ^= &late_row;
    }
    let starts = rows.iter().map(|r| r.first_one().unwrap()).collect();
    let ends = rows.iter().map(|r| r.last_one().unwrap()).collect();
    Ok(MsfForm {
        matrix: BitMatrix {
            cols: g.n_cols(),
            rows,
        },
        starts,
        ends,
    })
}
