//! Bit-packed linear algebra over GF(2).
//!
//! Bits are packed into `u64` words, row-major, so that row XOR — the hot
//! operation in tableau updates and Gaussian elimination — is word-wide.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum F2Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid dense matrix text at line {line}: {reason}")]
    ParseError { line: usize, reason: String },
}

const WORD_BITS: usize = 64;

fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

/// A fixed-length vector over GF(2), packed into `u64` words.
///
/// Unused high bits of the last word are kept zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self { len, words: vec![0; words_for(len)] }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Basis vector with a single one at `i`.
    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(i, true);
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        self.words[i / WORD_BITS] >> (i % WORD_BITS) & 1 != 0
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        self.words[i / WORD_BITS] ^= 1u64 << (i % WORD_BITS);
    }

    pub fn xor_assign(&mut self, other: &Self) {
        assert_eq!(self.len, other.len, "length mismatch in xor_assign");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= *b;
        }
    }

    /// Parity of the AND of two vectors, i.e. the GF(2) inner product.
    pub fn dot(&self, other: &Self) -> bool {
        assert_eq!(self.len, other.len, "length mismatch in dot");
        self.words
            .iter()
            .zip(&other.words)
            .fold(0u64, |acc, (a, b)| acc ^ (a & b))
            .count_ones()
            & 1
            != 0
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    pub fn clear(&mut self) {
        self.words.fill(0);
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            write!(f, "{}", u8::from(self.get(i)))?;
        }
        Ok(())
    }
}

/// One step of a row reduction, replayable with [`BitMatrix::apply_row_op`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowOp {
    Swap(usize, usize),
    /// XOR row `src` into row `dst`.
    AddInto { src: usize, dst: usize },
}

/// A dense matrix over GF(2), rows packed into `u64` words.
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = words_for(cols);
        Self { rows, cols, words_per_row, data: vec![0; rows * words_per_row] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_rows(rows: &[BitVec]) -> Self {
        let cols = rows.first().map_or(0, BitVec::len);
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged rows in BitMatrix::from_rows");
            m.row_mut(i).copy_from_slice(r.words());
        }
        m
    }

    /// Parse a dense 0/1 text block, one row per line.
    ///
    /// Blank lines and lines starting with `#` are skipped.
    pub fn parse_dense(text: &str) -> Result<Self, F2Error> {
        let mut rows: Vec<BitVec> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut bits = Vec::with_capacity(line.len());
            for c in line.chars() {
                match c {
                    '0' => bits.push(false),
                    '1' => bits.push(true),
                    c if c.is_whitespace() => {}
                    c => {
                        return Err(F2Error::ParseError {
                            line: lineno + 1,
                            reason: format!("unexpected character {c:?}"),
                        })
                    }
                }
            }
            let row = BitVec::from_bools(&bits);
            if let Some(first) = rows.first() {
                if row.len() != first.len() {
                    return Err(F2Error::ParseError {
                        line: lineno + 1,
                        reason: format!(
                            "row has {} columns, expected {}",
                            row.len(),
                            first.len()
                        ),
                    });
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(F2Error::ParseError { line: 0, reason: "no rows".into() });
        }
        Ok(Self::from_rows(&rows))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of range");
        self.data[i * self.words_per_row + j / WORD_BITS] >> (j % WORD_BITS) & 1 != 0
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of range");
        let w = i * self.words_per_row + j / WORD_BITS;
        let mask = 1u64 << (j % WORD_BITS);
        if value {
            self.data[w] |= mask;
        } else {
            self.data[w] &= !mask;
        }
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.words_per_row..(i + 1) * self.words_per_row]
    }

    fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.data[i * self.words_per_row..(i + 1) * self.words_per_row]
    }

    pub fn row_bits(&self, i: usize) -> BitVec {
        BitVec { len: self.cols, words: self.row(i).to_vec() }
    }

    pub fn set_row(&mut self, i: usize, bits: &BitVec) {
        assert_eq!(bits.len(), self.cols, "row length mismatch");
        self.row_mut(i).copy_from_slice(bits.words());
    }

    pub fn row_is_zero(&self, i: usize) -> bool {
        self.row(i).iter().all(|&w| w == 0)
    }

    /// XOR row `src` into row `dst`.
    pub fn row_add(&mut self, src: usize, dst: usize) {
        assert!(src < self.rows && dst < self.rows, "row index out of range");
        assert_ne!(src, dst, "row_add with src == dst");
        let (s, d) = (src * self.words_per_row, dst * self.words_per_row);
        for k in 0..self.words_per_row {
            self.data[d + k] ^= self.data[s + k];
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        assert!(a < self.rows && b < self.rows, "row index out of range");
        let (a, b) = (a * self.words_per_row, b * self.words_per_row);
        for k in 0..self.words_per_row {
            self.data.swap(a + k, b + k);
        }
    }

    pub fn apply_row_op(&mut self, op: RowOp) {
        match op {
            RowOp::Swap(a, b) => self.swap_rows(a, b),
            RowOp::AddInto { src, dst } => self.row_add(src, dst),
        }
    }

    /// Reduce to reduced row-echelon form with pivots chosen in the given
    /// column order, logging every row operation.
    ///
    /// Ties are broken toward the lowest row index so the reduction is
    /// bit-exact reproducible. Columns not listed are left untouched by pivot
    /// selection (they still change under the logged row ops). Returns the
    /// reduced matrix and the log; row space is unchanged.
    pub fn gaussian_eliminate(&self, column_order: &[usize]) -> (Self, Vec<RowOp>) {
        let mut m = self.clone();
        let mut log = Vec::new();
        m.eliminate_in_place(column_order, &mut log);
        (m, log)
    }

    fn eliminate_in_place(&mut self, column_order: &[usize], log: &mut Vec<RowOp>) -> usize {
        let mut pivot_row = 0;
        for &col in column_order {
            assert!(col < self.cols, "pivot column {col} out of range");
            if pivot_row == self.rows {
                break;
            }
            let Some(r) = (pivot_row..self.rows).find(|&r| self.get(r, col)) else {
                continue;
            };
            if r != pivot_row {
                self.swap_rows(r, pivot_row);
                log.push(RowOp::Swap(r, pivot_row));
            }
            for other in 0..self.rows {
                if other != pivot_row && self.get(other, col) {
                    self.row_add(pivot_row, other);
                    log.push(RowOp::AddInto { src: pivot_row, dst: other });
                }
            }
            pivot_row += 1;
        }
        pivot_row
    }

    /// Dimension of the row space. Works on a scratch copy; `self` is kept
    /// intact for oracle comparisons.
    pub fn rank(&self) -> usize {
        let order: Vec<usize> = (0..self.cols).collect();
        let mut m = self.clone();
        m.eliminate_in_place(&order, &mut Vec::new())
    }

    /// Whether `target` lies in the row space.
    pub fn contains_in_row_space(&self, target: &BitVec) -> bool {
        self.decompose(target).is_some()
    }

    /// Coefficients `c` with `sum_i c_i row_i == target`, if the target lies
    /// in the row space.
    pub fn decompose(&self, target: &BitVec) -> Option<Vec<bool>> {
        assert_eq!(target.len(), self.cols, "target length mismatch");
        // Eliminate with an identity block appended on the right to track the
        // row combinations, then reduce the target against the pivots.
        let n = self.rows;
        let mut aug = BitMatrix::zeros(n, self.cols + n);
        for i in 0..n {
            for (k, &w) in self.row(i).iter().enumerate() {
                aug.row_mut(i)[k] = w;
            }
            aug.set(i, self.cols + i, true);
        }
        let order: Vec<usize> = (0..self.cols).collect();
        let mut log = Vec::new();
        aug.eliminate_in_place(&order, &mut log);

        let mut residue = target.clone();
        let mut combo = BitVec::zeros(n);
        for i in 0..n {
            let lead = (0..self.cols).find(|&j| aug.get(i, j));
            let Some(lead) = lead else { break };
            if residue.get(lead) {
                for j in 0..self.cols {
                    if aug.get(i, j) {
                        residue.flip(j);
                    }
                }
                for j in 0..n {
                    if aug.get(i, self.cols + j) {
                        combo.flip(j);
                    }
                }
            }
        }
        if residue.is_zero() {
            Some((0..n).map(|i| combo.get(i)).collect())
        } else {
            None
        }
    }

    /// Basis for the null space `{ x : M x = 0 }` (column vectors, returned
    /// as `BitVec`s of length `cols`).
    pub fn null_space(&self) -> Vec<BitVec> {
        let order: Vec<usize> = (0..self.cols).collect();
        let (red, _) = self.gaussian_eliminate(&order);
        let mut pivot_of_col = vec![None; self.cols];
        for i in 0..red.rows {
            if let Some(lead) = (0..red.cols).find(|&j| red.get(i, j)) {
                pivot_of_col[lead] = Some(i);
            }
        }
        let mut basis = Vec::new();
        for j in 0..self.cols {
            if pivot_of_col[j].is_some() {
                continue;
            }
            let mut v = BitVec::unit(self.cols, j);
            for (c, pivot) in pivot_of_col.iter().enumerate() {
                if let Some(i) = pivot {
                    if red.get(*i, j) {
                        v.set(c, true);
                    }
                }
            }
            basis.push(v);
        }
        basis
    }

    /// GF(2) matrix product `self * rhs`.
    pub fn multiply(&self, rhs: &Self) -> Result<Self, F2Error> {
        if self.cols != rhs.rows {
            return Err(F2Error::DimensionMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self.get(i, k) {
                    let (dst, src) = (i * out.words_per_row, k * rhs.words_per_row);
                    for w in 0..out.words_per_row {
                        out.data[dst + w] ^= rhs.data[src + w];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product over GF(2).
    pub fn apply(&self, x: &BitVec) -> BitVec {
        assert_eq!(x.len(), self.cols, "vector length mismatch");
        let mut y = BitVec::zeros(self.rows);
        for i in 0..self.rows {
            let parity = self
                .row(i)
                .iter()
                .zip(x.words())
                .fold(0u64, |acc, (a, b)| acc ^ (a & b))
                .count_ones()
                & 1;
            if parity != 0 {
                y.set(i, true);
            }
        }
        y
    }

    /// Rank of the submatrix formed by the listed columns.
    pub fn rank_of_columns(&self, cols: &[usize]) -> usize {
        let mut sub = BitMatrix::zeros(self.rows, cols.len());
        for i in 0..self.rows {
            for (jj, &j) in cols.iter().enumerate() {
                if self.get(i, j) {
                    sub.set(i, jj, true);
                }
            }
        }
        sub.rank()
    }

    pub fn clear_row(&mut self, i: usize) {
        self.row_mut(i).fill(0);
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            for j in 0..self.cols {
                write!(f, "{}", u8::from(self.get(i, j)))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// An affine map `x -> M x + c` on GF(2) vectors of a fixed length.
///
/// This is the classical shadow of a coherence-free circuit: CNOTs act as
/// invertible row operations, bit erasers zero a row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineMapF2 {
    matrix: BitMatrix,
    offset: BitVec,
}

impl AffineMapF2 {
    pub fn identity(n: usize) -> Self {
        Self { matrix: BitMatrix::identity(n), offset: BitVec::zeros(n) }
    }

    pub fn new(matrix: BitMatrix, offset: BitVec) -> Result<Self, F2Error> {
        if matrix.rows() != matrix.cols() || matrix.rows() != offset.len() {
            return Err(F2Error::DimensionMismatch(format!(
                "matrix {}x{}, offset {}",
                matrix.rows(),
                matrix.cols(),
                offset.len()
            )));
        }
        Ok(Self { matrix, offset })
    }

    pub fn len(&self) -> usize {
        self.offset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offset.is_empty()
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.matrix
    }

    pub fn offset(&self) -> &BitVec {
        &self.offset
    }

    pub fn apply(&self, x: &BitVec) -> BitVec {
        let mut y = self.matrix.apply(x);
        y.xor_assign(&self.offset);
        y
    }

    /// Composition `self ∘ rhs`: the result applied to `x` equals
    /// `self(rhs(x))`.
    pub fn compose(&self, rhs: &Self) -> Result<Self, F2Error> {
        if self.len() != rhs.len() {
            return Err(F2Error::DimensionMismatch(format!(
                "compose {} with {}",
                self.len(),
                rhs.len()
            )));
        }
        let matrix = self.matrix.multiply(&rhs.matrix)?;
        let mut offset = self.matrix.apply(&rhs.offset);
        offset.xor_assign(&self.offset);
        Ok(Self { matrix, offset })
    }

    /// In-place update `x_dst ^= x_src`, i.e. left-compose with the map that
    /// XORs bit `src` into bit `dst`.
    pub fn add_bit_into(&mut self, src: usize, dst: usize) {
        assert_ne!(src, dst, "add_bit_into with src == dst");
        self.matrix.row_add(src, dst);
        if self.offset.get(src) {
            self.offset.flip(dst);
        }
    }

    /// In-place update `x_i = 0`, i.e. left-compose with an eraser on bit `i`.
    pub fn erase_bit(&mut self, i: usize) {
        self.matrix.clear_row(i);
        self.offset.set(i, false);
    }

    /// Shannon entropy, in bits, of the image distribution under a uniform
    /// input: equal to the rank of the linear part.
    ///
    /// For a deterministic map on a uniform input ensemble the input and
    /// joint entropies both equal the full register size, so this is also the
    /// input-output mutual information.
    pub fn image_entropy(&self) -> usize {
        self.matrix.rank()
    }

    /// Image entropy when only the listed input bits are uniformly random and
    /// the rest are fixed: the rank of the corresponding columns.
    pub fn image_entropy_on(&self, inputs: &[usize]) -> usize {
        self.matrix.rank_of_columns(inputs)
    }
}
