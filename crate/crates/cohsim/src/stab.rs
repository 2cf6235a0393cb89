//! Mixed stabilizer states and their updates.
//!
//! A state on `L` qubits is represented by `N_s <= L` independent, mutually
//! commuting signed Pauli generators; the density matrix is the normalized
//! product of `(1 + g_i)/2` and its von Neumann entropy is `L - N_s` bits.
//! Entropies and coherences are exact non-negative integers; there is no
//! floating point in this kernel.

use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

use crate::f2::{BitMatrix, BitVec};
use crate::pauli::{Axis, Gate, LocalPauliBasis, PauliError, PauliString};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StabError {
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error("generators do not mutually commute (rows {0} and {1})")]
    NonCommutingGenerators(usize, usize),
    #[error("generators are not independent")]
    DependentGenerators,
    #[error("postselected outcome {wanted} contradicts deterministic outcome {actual}")]
    PostselectionFailure { wanted: bool, actual: bool },
    #[error("system and ancilla regions overlap at site {0}")]
    OverlappingRegions(usize),
    #[error("site {site} out of range for {len} qubits")]
    SiteOutOfRange { site: usize, len: usize },
    #[error("invalid tableau snapshot: {0}")]
    ParseError(String),
}

/// How a measurement outcome is chosen when the state does not determine it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasurePolicy {
    /// Draw uncertain outcomes uniformly from the supplied RNG.
    Random,
    /// Demand the given outcome; fails if the state determines the opposite.
    Postselect(bool),
    /// Record the given outcome for uncertain measurements; deterministic
    /// outcomes are reported as-is without failing.
    ForcedRecord(bool),
}

/// The three possible effects of a Pauli measurement on a stabilizer state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasureCase {
    /// `±op` is already in the stabilizer group: deterministic outcome, no
    /// state change.
    NoEffect,
    /// `op` commutes with the group but is not in it: it joins the
    /// generators and the entropy drops by one bit.
    EntropyReducing,
    /// `op` anticommutes with at least one generator: the gauge is fixed so
    /// exactly one generator anticommutes and that generator is replaced;
    /// the entropy is unchanged and the outcome is uniformly random.
    StateChanging,
}

/// Outcome report for a single measurement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasurementRecord {
    pub op: PauliString,
    /// Eigenvalue bit: `false` for +1, `true` for -1.
    pub outcome: bool,
    pub deterministic: bool,
    pub case: MeasureCase,
}

/// A mixed stabilizer state.
///
/// Randomness is injected per call; the tableau itself carries no RNG.
#[derive(Clone, PartialEq, Eq)]
pub struct StabilizerTableau {
    len: usize,
    gens: Vec<PauliString>,
}

impl StabilizerTableau {
    /// The maximally mixed state: no generators.
    pub fn maximally_mixed(len: usize) -> Self {
        Self { len, gens: Vec::new() }
    }

    /// Pure product state with the given per-site polarization; `sign = true`
    /// selects the -1 eigenstate of the axis operator.
    pub fn product(polarizations: &[(Axis, bool)]) -> Self {
        let len = polarizations.len();
        let gens = polarizations
            .iter()
            .enumerate()
            .map(|(i, &(axis, sign))| {
                let mut g = PauliString::single(len, i, axis);
                g.set_sign(sign);
                g
            })
            .collect();
        Self { len, gens }
    }

    /// Pure product of +X eigenstates.
    pub fn x_product(len: usize) -> Self {
        Self::product(&vec![(Axis::X, false); len])
    }

    /// Validate and adopt a generator list: all pairs must commute and the
    /// stacked check matrix must have full row rank (this also excludes -I
    /// from the generated group).
    pub fn from_generators(len: usize, gens: Vec<PauliString>) -> Result<Self, StabError> {
        for g in &gens {
            if g.len() != len {
                return Err(PauliError::LengthMismatch(g.len(), len).into());
            }
        }
        for i in 0..gens.len() {
            for j in i + 1..gens.len() {
                if !gens[i].commutes_with(&gens[j])? {
                    return Err(StabError::NonCommutingGenerators(i, j));
                }
            }
        }
        let state = Self { len, gens };
        if state.check_matrix().rank() != state.gens.len() {
            return Err(StabError::DependentGenerators);
        }
        Ok(state)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_generators(&self) -> usize {
        self.gens.len()
    }

    pub fn generators(&self) -> &[PauliString] {
        &self.gens
    }

    /// Von Neumann entropy in bits: `L - N_s`.
    pub fn entropy(&self) -> usize {
        self.len - self.gens.len()
    }

    pub fn is_pure(&self) -> bool {
        self.entropy() == 0
    }

    /// Stacked check matrix: one row per generator, X block then Z block.
    pub fn check_matrix(&self) -> BitMatrix {
        let mut m = BitMatrix::zeros(self.gens.len(), 2 * self.len);
        for (i, g) in self.gens.iter().enumerate() {
            for j in 0..self.len {
                if g.x_bit(j) {
                    m.set(i, j, true);
                }
                if g.z_bit(j) {
                    m.set(i, self.len + j, true);
                }
            }
        }
        m
    }

    fn sympl_row(&self, p: &PauliString) -> BitVec {
        let mut v = BitVec::zeros(2 * self.len);
        for j in 0..self.len {
            if p.x_bit(j) {
                v.set(j, true);
            }
            if p.z_bit(j) {
                v.set(self.len + j, true);
            }
        }
        v
    }

    /// Conjugate every generator by a gate; entropy is unchanged.
    pub fn apply_gate(&mut self, gate: Gate) -> Result<(), StabError> {
        // Validate once against the register size even if there are no
        // generators to update.
        PauliString::identity(self.len).conjugate_by_gate(gate)?;
        for g in &mut self.gens {
            g.apply_gate(gate).expect("validated gate");
        }
        Ok(())
    }

    /// Conjugate the state by `Z_site` (flips the sign of every generator
    /// with X or Y there).
    pub(crate) fn apply_z_conjugation(&mut self, site: usize) {
        for g in &mut self.gens {
            g.apply_z_conjugation(site);
        }
    }

    fn anticommuting_indices(&self, op: &PauliString) -> Vec<usize> {
        self.gens
            .iter()
            .enumerate()
            .filter(|(_, g)| !g.commutes_with(op).expect("equal lengths"))
            .map(|(i, _)| i)
            .collect()
    }

    /// If `±op` is in the group, return the sign with which it appears.
    fn group_sign_of(&self, op: &PauliString) -> Option<bool> {
        let coeffs = self.check_matrix().decompose(&self.sympl_row(op))?;
        let mut product = PauliString::identity(self.len);
        for (i, &c) in coeffs.iter().enumerate() {
            if c {
                product = product.multiply(&self.gens[i]).expect("generators commute");
            }
        }
        debug_assert_eq!(product.x_mask(), op.x_mask());
        debug_assert_eq!(product.z_mask(), op.z_mask());
        Some(product.sign())
    }

    /// Which of the three measurement cases `op` falls into, without
    /// touching the state.
    pub fn classify_measurement(&self, op: &PauliString) -> Result<MeasureCase, StabError> {
        if op.len() != self.len {
            return Err(PauliError::LengthMismatch(op.len(), self.len).into());
        }
        if !self.anticommuting_indices(op).is_empty() {
            return Ok(MeasureCase::StateChanging);
        }
        if self.group_sign_of(op).is_some() {
            Ok(MeasureCase::NoEffect)
        } else {
            Ok(MeasureCase::EntropyReducing)
        }
    }

    /// Projectively measure a Pauli string.
    ///
    /// The outcome bit reports the eigenvalue `(-1)^outcome` of `op`. The
    /// entropy change is 0 (no-effect and state-changing cases) or -1
    /// (entropy-reducing case). Under [`MeasurePolicy::Random`] the uncertain
    /// cases draw a uniform outcome from `rng`.
    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        op: &PauliString,
        policy: MeasurePolicy,
        rng: &mut R,
    ) -> Result<MeasurementRecord, StabError> {
        if op.len() != self.len {
            return Err(PauliError::LengthMismatch(op.len(), self.len).into());
        }
        let anti = self.anticommuting_indices(op);
        if !anti.is_empty() {
            // State-changing case: gauge-fix on the lowest-index
            // anticommuting generator, then replace it with ±op.
            let pivot = anti[0];
            let pivot_gen = self.gens[pivot].clone();
            for &i in &anti[1..] {
                self.gens[i] =
                    self.gens[i].multiply(&pivot_gen).expect("generators commute");
            }
            let outcome = match policy {
                MeasurePolicy::Random => rng.gen(),
                MeasurePolicy::Postselect(b) | MeasurePolicy::ForcedRecord(b) => b,
            };
            let mut new_gen = op.clone();
            if outcome {
                new_gen.flip_sign();
            }
            self.gens[pivot] = new_gen;
            return Ok(MeasurementRecord {
                op: op.clone(),
                outcome,
                deterministic: false,
                case: MeasureCase::StateChanging,
            });
        }
        match self.group_sign_of(op) {
            Some(group_sign) => {
                let outcome = group_sign ^ op.sign();
                if let MeasurePolicy::Postselect(wanted) = policy {
                    if wanted != outcome {
                        return Err(StabError::PostselectionFailure {
                            wanted,
                            actual: outcome,
                        });
                    }
                }
                Ok(MeasurementRecord {
                    op: op.clone(),
                    outcome,
                    deterministic: true,
                    case: MeasureCase::NoEffect,
                })
            }
            None => {
                // In the centralizer but not the group: both outcomes have
                // probability 1/2 and the measured operator joins the
                // generators.
                let outcome = match policy {
                    MeasurePolicy::Random => rng.gen(),
                    MeasurePolicy::Postselect(b) | MeasurePolicy::ForcedRecord(b) => b,
                };
                let mut new_gen = op.clone();
                if outcome {
                    new_gen.flip_sign();
                }
                self.gens.push(new_gen);
                Ok(MeasurementRecord {
                    op: op.clone(),
                    outcome,
                    deterministic: false,
                    case: MeasureCase::EntropyReducing,
                })
            }
        }
    }

    /// Measure-and-forget: project onto `op` without recording the outcome.
    ///
    /// If `op` anticommutes with some generator, the gauge-fixed
    /// anticommuting generator is removed and the entropy grows by one bit;
    /// otherwise the state is unchanged. Returns whether a generator was
    /// removed.
    pub fn dephase(&mut self, op: &PauliString) -> Result<bool, StabError> {
        if op.len() != self.len {
            return Err(PauliError::LengthMismatch(op.len(), self.len).into());
        }
        let anti = self.anticommuting_indices(op);
        let Some(&pivot) = anti.first() else {
            return Ok(false);
        };
        let pivot_gen = self.gens[pivot].clone();
        for &i in &anti[1..] {
            self.gens[i] = self.gens[i].multiply(&pivot_gen).expect("generators commute");
        }
        self.gens.remove(pivot);
        Ok(true)
    }

    fn validate_region(&self, region: &[usize]) -> Result<Vec<bool>, StabError> {
        let mut mask = vec![false; self.len];
        for &site in region {
            if site >= self.len {
                return Err(StabError::SiteOutOfRange { site, len: self.len });
            }
            mask[site] = true;
        }
        Ok(mask)
    }

    /// Entanglement entropy of a set of sites, in bits:
    /// `|A| - log2 |S_A|` where `S_A` is the subgroup supported inside the
    /// region.
    pub fn subsystem_entropy(&self, region: &[usize]) -> Result<usize, StabError> {
        let mask = self.validate_region(region)?;
        let region_size = mask.iter().filter(|&&b| b).count();
        let complement_cols: Vec<usize> = (0..self.len)
            .filter(|&j| !mask[j])
            .flat_map(|j| [j, self.len + j])
            .collect();
        let outside_rank = self.check_matrix().rank_of_columns(&complement_cols);
        // |S_A| has log2 equal to N_s - rank(outside columns).
        Ok(region_size + outside_rank - self.gens.len())
    }

    /// Entanglement entropies of all prefix regions `[0, x)` for
    /// `x = 0..=limit`, computed in a single elimination pass over the check
    /// matrix with columns ordered from the last site backwards.
    pub fn prefix_entropies(&self, limit: usize) -> Vec<usize> {
        assert!(limit <= self.len, "prefix limit {limit} exceeds {} sites", self.len);
        let mut work = self.check_matrix();
        let n_rows = self.gens.len();
        let mut pivot_count = 0usize;
        // rank_from[x] = rank of the columns belonging to sites x..len.
        let mut rank_from = vec![0usize; self.len + 1];
        for site in (0..self.len).rev() {
            for col in [site, self.len + site] {
                if pivot_count == n_rows {
                    break;
                }
                if let Some(r) = (pivot_count..n_rows).find(|&r| work.get(r, col)) {
                    work.swap_rows(r, pivot_count);
                    for other in pivot_count + 1..n_rows {
                        if work.get(other, col) {
                            work.row_add(pivot_count, other);
                        }
                    }
                    pivot_count += 1;
                }
            }
            rank_from[site] = pivot_count;
        }
        (0..=limit).map(|x| x + rank_from[x] - n_rows).collect()
    }

    /// Coherent information `S(system) - S(system ∪ ancilla)` between the
    /// evolving system and a static reference register.
    pub fn coherent_information(
        &self,
        system: &[usize],
        ancilla: &[usize],
    ) -> Result<i64, StabError> {
        let sys_mask = self.validate_region(system)?;
        for &site in ancilla {
            if site >= self.len {
                return Err(StabError::SiteOutOfRange { site, len: self.len });
            }
            if sys_mask[site] {
                return Err(StabError::OverlappingRegions(site));
            }
        }
        let joint: Vec<usize> = system.iter().chain(ancilla).copied().collect();
        let s_sys = self.subsystem_entropy(system)? as i64;
        let s_joint = self.subsystem_entropy(&joint)? as i64;
        Ok(s_sys - s_joint)
    }

    /// Rotate a copy of the tableau into the frame where each basis operator
    /// plays the role of X on its site.
    pub(crate) fn to_basis_frame(&self, basis: &LocalPauliBasis) -> Self {
        assert_eq!(basis.len(), self.len, "basis length mismatch");
        let mut state = self.clone();
        for site in 0..self.len {
            match basis.axis_at(site) {
                Axis::X => {}
                Axis::Y => {
                    for g in &mut state.gens {
                        g.apply_phase_inverse(site);
                    }
                }
                Axis::Z => {
                    for g in &mut state.gens {
                        g.apply_hadamard(site);
                    }
                }
            }
        }
        state
    }

    /// Undo [`Self::to_basis_frame`] on a tableau expressed in that frame.
    fn from_basis_frame(mut state: Self, basis: &LocalPauliBasis) -> Self {
        for site in 0..state.len {
            match basis.axis_at(site) {
                Axis::X => {}
                Axis::Y => {
                    for g in &mut state.gens {
                        g.apply_gate(Gate::Phase { site }).expect("site in range");
                    }
                }
                Axis::Z => {
                    for g in &mut state.gens {
                        g.apply_hadamard(site);
                    }
                }
            }
        }
        state
    }

    /// Reduce to the CSS gauge with respect to a local Pauli basis.
    ///
    /// The basis-conjugate columns are eliminated first, then the
    /// basis-diagonal columns; pivots always take the lowest available row.
    /// The returned tableau represents the same state with generators
    /// reordered into the pure-diagonal, pure-conjugate, and mixed blocks.
    pub fn css_gauge(&self, basis: &LocalPauliBasis) -> CssGauge {
        let frame = self.to_basis_frame(basis);
        let mut rows = frame.gens.clone();
        let len = frame.len;

        // Phase one: RREF on the conjugate (Z-in-frame) columns. Pivot rows
        // float to the front; the rest end with an empty Z part.
        let mut pivot_count = 0;
        for col in 0..len {
            let Some(r) = (pivot_count..rows.len()).find(|&r| rows[r].z_bit(col)) else {
                continue;
            };
            rows.swap(r, pivot_count);
            let pivot = rows[pivot_count].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != pivot_count && row.z_bit(col) {
                    *row = row.multiply(&pivot).expect("generators commute");
                }
            }
            pivot_count += 1;
        }
        let mut mixed_candidates: Vec<PauliString> = rows.drain(..pivot_count).collect();
        let mut pure_diag: Vec<PauliString> = rows;

        // Phase two: reduce the candidates' X parts modulo the pure-diagonal
        // row space, then RREF the candidates' X parts among themselves.
        // Rows reduced to an empty X part become pure-conjugate; the
        // survivors are the mixed block with independent X and Z parts.
        Self::rref_x(&mut pure_diag);
        for col in 0..len {
            if let Some(p) = pure_diag
                .iter()
                .position(|g| leading_x(g) == Some(col))
            {
                let pivot = pure_diag[p].clone();
                for row in &mut mixed_candidates {
                    if row.x_bit(col) {
                        *row = row.multiply(&pivot).expect("generators commute");
                    }
                }
            }
        }
        let mut mixed: Vec<PauliString> = Vec::new();
        let mut pure_conj: Vec<PauliString> = Vec::new();
        let mut x_pivot_count = 0;
        for col in 0..len {
            let Some(r) = (x_pivot_count..mixed_candidates.len())
                .find(|&r| mixed_candidates[r].x_bit(col))
            else {
                continue;
            };
            mixed_candidates.swap(r, x_pivot_count);
            let pivot = mixed_candidates[x_pivot_count].clone();
            for (i, row) in mixed_candidates.iter_mut().enumerate() {
                if i != x_pivot_count && row.x_bit(col) {
                    *row = row.multiply(&pivot).expect("generators commute");
                }
            }
            x_pivot_count += 1;
        }
        for (i, row) in mixed_candidates.into_iter().enumerate() {
            if i < x_pivot_count {
                mixed.push(row);
            } else {
                pure_conj.push(row);
            }
        }

        let n_x = pure_diag.len();
        let n_z = pure_conj.len();
        let n_y = mixed.len();
        let mut ordered = pure_diag;
        ordered.extend(pure_conj);
        ordered.extend(mixed);
        let gauge_frame = Self { len, gens: ordered };
        let tableau = Self::from_basis_frame(gauge_frame, basis);
        CssGauge { n_x, n_z, n_y, tableau }
    }

    fn rref_x(rows: &mut [PauliString]) {
        let len = rows.first().map_or(0, PauliString::len);
        let mut pivot_count = 0;
        for col in 0..len {
            let Some(r) = (pivot_count..rows.len()).find(|&r| rows[r].x_bit(col)) else {
                continue;
            };
            rows.swap(r, pivot_count);
            let pivot = rows[pivot_count].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != pivot_count && row.x_bit(col) {
                    *row = row.multiply(&pivot).expect("generators commute");
                }
            }
            pivot_count += 1;
        }
    }

    /// Relative entropy of coherence in a local Pauli basis, in bits:
    /// the mixed plus pure-conjugate generator counts of the CSS gauge.
    pub fn coherence(&self, basis: &LocalPauliBasis) -> usize {
        let gauge = self.css_gauge(basis);
        gauge.n_y + gauge.n_z
    }

    /// Independent route to the coherence: sequentially measure the basis
    /// operators on a copy, count the uncertain outcomes `n_u`, and return
    /// `n_u + N_s - L`. Agrees exactly with [`Self::coherence`].
    pub fn coherence_oracle<R: Rng + ?Sized>(
        &self,
        basis: &LocalPauliBasis,
        rng: &mut R,
    ) -> usize {
        assert_eq!(basis.len(), self.len, "basis length mismatch");
        let mut copy = self.clone();
        let mut uncertain = 0usize;
        for site in 0..self.len {
            let op = basis.operator_at(site, self.len);
            let record = copy
                .measure(&op, MeasurePolicy::Random, rng)
                .expect("single-site measurement");
            if !record.deterministic {
                uncertain += 1;
            }
        }
        (uncertain + self.gens.len())
            .checked_sub(self.len)
            .expect("uncertain count at least the entropy")
    }

    /// Canonical representation: generators in reduced row-echelon form over
    /// the check matrix columns (X block first), signs carried exactly.
    ///
    /// Two tableaux describe the same state iff their canonical forms are
    /// equal.
    pub fn canonical(&self) -> Self {
        let mut rows = self.gens.clone();
        let len = self.len;
        let bit = |g: &PauliString, col: usize| {
            if col < len {
                g.x_bit(col)
            } else {
                g.z_bit(col - len)
            }
        };
        let mut pivot_count = 0;
        for col in 0..2 * len {
            let Some(r) = (pivot_count..rows.len()).find(|&r| bit(&rows[r], col)) else {
                continue;
            };
            rows.swap(r, pivot_count);
            let pivot = rows[pivot_count].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != pivot_count && bit(row, col) {
                    *row = row.multiply(&pivot).expect("generators commute");
                }
            }
            pivot_count += 1;
        }
        Self { len, gens: rows }
    }

    /// Whether two tableaux stabilize the same state (possibly in different
    /// gauges).
    pub fn same_state_as(&self, other: &Self) -> bool {
        self.len == other.len && self.canonical() == other.canonical()
    }

    /// Serialize as a text snapshot: a `L N_s` header line, then one Pauli
    /// text line per generator.
    pub fn write_snapshot(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{} {}", self.len, self.gens.len()).unwrap();
        for g in &self.gens {
            writeln!(out, "{g}").unwrap();
        }
        out
    }

    /// Parse and validate a text snapshot. Round-trips with
    /// [`Self::write_snapshot`].
    pub fn parse_snapshot(text: &str) -> Result<Self, StabError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| StabError::ParseError("empty snapshot".into()))?;
        let mut parts = header.split_whitespace();
        let len: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| StabError::ParseError("bad qubit count in header".into()))?;
        let n_s: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| StabError::ParseError("bad generator count in header".into()))?;
        if parts.next().is_some() {
            return Err(StabError::ParseError("trailing tokens in header".into()));
        }
        if n_s > len {
            return Err(StabError::ParseError(format!(
                "{n_s} generators exceed {len} qubits"
            )));
        }
        let mut gens = Vec::with_capacity(n_s);
        for line in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let p: PauliString = line
                .parse()
                .map_err(|e: PauliError| StabError::ParseError(e.to_string()))?;
            if p.len() != len {
                return Err(StabError::ParseError(format!(
                    "generator length {} does not match header {len}",
                    p.len()
                )));
            }
            if p.is_identity() {
                return Err(StabError::ParseError("identity generator".into()));
            }
            gens.push(p);
        }
        if gens.len() != n_s {
            return Err(StabError::ParseError(format!(
                "expected {n_s} generators, found {}",
                gens.len()
            )));
        }
        Self::from_generators(len, gens)
    }
}

impl std::fmt::Debug for StabilizerTableau {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "StabilizerTableau(L={}, S={}):", self.len, self.entropy())?;
        for g in &self.gens {
            write!(f, " {g}")?;
        }
        Ok(())
    }
}

fn leading_x(p: &PauliString) -> Option<usize> {
    (0..p.len()).find(|&j| p.x_bit(j))
}

/// Block decomposition of a tableau with respect to a local Pauli basis:
/// `n_x` generators built purely from basis-diagonal operators, `n_z` purely
/// from their conjugates, and `n_y` mixed generators whose diagonal and
/// conjugate parts are independent row sets.
#[derive(Clone, Debug)]
pub struct CssGauge {
    pub n_x: usize,
    pub n_z: usize,
    pub n_y: usize,
    /// The same state, generators reordered into block form.
    pub tableau: StabilizerTableau,
}

/// Random-state generators shared by unit tests across the crate.
#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// Random mixed stabilizer state from a random Clifford program over the
    /// crate's gate and measurement set, with some dephasing mixed in.
    pub(crate) fn random_state<R: Rng + ?Sized>(
        len: usize,
        rng: &mut R,
    ) -> StabilizerTableau {
        let mut state = random_pure_state(len, rng);
        for _ in 0..len {
            if rng.gen_bool(0.3) {
                state
                    .dephase(&PauliString::single(
                        len,
                        rng.gen_range(0..len),
                        Axis::sample(rng),
                    ))
                    .unwrap();
            }
        }
        scramble(&mut state, len, rng);
        state
    }

    /// Random pure stabilizer state (no dephasing).
    pub(crate) fn random_pure_state<R: Rng + ?Sized>(
        len: usize,
        rng: &mut R,
    ) -> StabilizerTableau {
        let mut state = StabilizerTableau::product(
            &(0..len)
                .map(|_| (Axis::sample(rng), rng.gen()))
                .collect::<Vec<_>>(),
        );
        scramble(&mut state, len, rng);
        state
    }

    fn scramble<R: Rng + ?Sized>(state: &mut StabilizerTableau, len: usize, rng: &mut R) {
        for _ in 0..4 * len {
            match rng.gen_range(0..3) {
                0 if len > 1 => {
                    let c = rng.gen_range(0..len);
                    let mut t = rng.gen_range(0..len);
                    while t == c {
                        t = rng.gen_range(0..len);
                    }
                    state.apply_gate(Gate::Cnot { control: c, target: t }).unwrap();
                }
                1 => {
                    state.apply_gate(Gate::Phase { site: rng.gen_range(0..len) }).unwrap();
                }
                _ => {
                    let op =
                        PauliString::single(len, rng.gen_range(0..len), Axis::sample(rng));
                    state.measure(&op, MeasurePolicy::Random, rng).unwrap();
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::random_state;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn x_basis(len: usize) -> LocalPauliBasis {
        LocalPauliBasis::uniform(Axis::X, len)
    }

    fn bell_pair() -> StabilizerTableau {
        StabilizerTableau::from_generators(2, vec![p("+XX"), p("+ZZ")]).unwrap()
    }

    #[test]
    fn entropy_counts_missing_generators() {
        assert_eq!(StabilizerTableau::maximally_mixed(4).entropy(), 4);
        assert_eq!(StabilizerTableau::x_product(4).entropy(), 0);
    }

    #[test]
    fn from_generators_rejects_bad_input() {
        assert_eq!(
            StabilizerTableau::from_generators(2, vec![p("+XI"), p("+ZI")]),
            Err(StabError::NonCommutingGenerators(0, 1))
        );
        assert_eq!(
            StabilizerTableau::from_generators(2, vec![p("+XX"), p("-XX")]),
            Err(StabError::DependentGenerators)
        );
    }

    #[test]
    fn measure_stabilized_operator_is_deterministic() {
        let mut state = StabilizerTableau::x_product(1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rec = state
            .measure(&p("+X"), MeasurePolicy::Random, &mut rng)
            .unwrap();
        assert_eq!(rec.case, MeasureCase::NoEffect);
        assert!(rec.deterministic);
        assert!(!rec.outcome);
        assert_eq!(state, StabilizerTableau::x_product(1));
        // Measuring -X reports the flipped eigenvalue bit.
        let rec = state
            .measure(&p("-X"), MeasurePolicy::Random, &mut rng)
            .unwrap();
        assert!(rec.outcome);
    }

    #[test]
    fn measure_conjugate_operator_replaces_generator() {
        let basis = x_basis(1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut zeros = 0;
        for trial in 0..400 {
            let mut state = StabilizerTableau::x_product(1);
            assert_eq!(state.coherence(&basis), 0);
            let rec = state
                .measure(&p("+Z"), MeasurePolicy::Random, &mut rng)
                .unwrap();
            assert_eq!(rec.case, MeasureCase::StateChanging);
            assert_eq!(state.entropy(), 0);
            assert_eq!(state.coherence(&basis), 1, "trial {trial}");
            if !rec.outcome {
                zeros += 1;
            }
        }
        // Outcomes are uniform; 400 flips stay within 5 sigma of half.
        assert!((zeros as f64 - 200.0).abs() < 50.0, "zeros = {zeros}");
    }

    #[test]
    fn measure_in_centralizer_reduces_entropy() {
        let mut state = StabilizerTableau::maximally_mixed(2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rec = state
            .measure(&p("+XX"), MeasurePolicy::Random, &mut rng)
            .unwrap();
        assert_eq!(rec.case, MeasureCase::EntropyReducing);
        assert_eq!(state.entropy(), 1);
    }

    #[test]
    fn postselect_contradiction_is_an_error() {
        let mut state = StabilizerTableau::x_product(1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let err = state
            .measure(&p("+X"), MeasurePolicy::Postselect(true), &mut rng)
            .unwrap_err();
        assert_eq!(
            err,
            StabError::PostselectionFailure { wanted: true, actual: false }
        );
    }

    #[test]
    fn dephase_on_polarized_qubit_mixes_it() {
        let mut state = StabilizerTableau::product(&[(Axis::Z, false)]);
        assert!(state.dephase(&p("+X")).unwrap());
        assert_eq!(state.entropy(), 1);
        assert_eq!(state.num_generators(), 0);
    }

    #[test]
    fn dephase_on_compatible_operator_is_identity() {
        let mut state = StabilizerTableau::x_product(1);
        let before = state.clone();
        assert!(!state.dephase(&p("+X")).unwrap());
        assert_eq!(state, before);
    }

    #[test]
    fn cnot_fixes_x_product_state() {
        let mut state = StabilizerTableau::x_product(2);
        state
            .apply_gate(Gate::Cnot { control: 0, target: 1 })
            .unwrap();
        assert!(state.same_state_as(&StabilizerTableau::x_product(2)));
    }

    #[test]
    fn phase_gate_rotates_x_polarized_to_y() {
        let basis = x_basis(1);
        let mut state = StabilizerTableau::x_product(1);
        assert_eq!(state.coherence(&basis), 0);
        state.apply_gate(Gate::Phase { site: 0 }).unwrap();
        assert_eq!(state.generators()[0], p("+Y"));
        assert_eq!(state.coherence(&basis), 1);
    }

    #[test]
    fn cnot_preserves_both_coherences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let len = 6;
        let xb = x_basis(len);
        let zb = LocalPauliBasis::uniform(Axis::Z, len);
        for _ in 0..100 {
            let mut state = random_state(len, &mut rng);
            let cx = state.coherence(&xb);
            let cz = state.coherence(&zb);
            let c = rng.gen_range(0..len);
            let mut t = rng.gen_range(0..len);
            while t == c {
                t = rng.gen_range(0..len);
            }
            state.apply_gate(Gate::Cnot { control: c, target: t }).unwrap();
            assert_eq!(state.coherence(&xb), cx);
            assert_eq!(state.coherence(&zb), cz);
        }
    }

    #[test]
    fn subsystem_entropy_examples() {
        let state = StabilizerTableau::x_product(4);
        assert_eq!(state.subsystem_entropy(&[0, 2]).unwrap(), 0);
        let bell = bell_pair();
        assert_eq!(bell.subsystem_entropy(&[0]).unwrap(), 1);
        assert_eq!(bell.subsystem_entropy(&[0, 1]).unwrap(), 0);
        let mixed = StabilizerTableau::maximally_mixed(3);
        assert_eq!(mixed.subsystem_entropy(&[1, 2]).unwrap(), 2);
    }

    #[test]
    fn css_gauge_block_counts() {
        let state = StabilizerTableau::x_product(3);
        let gauge = state.css_gauge(&x_basis(3));
        assert_eq!((gauge.n_x, gauge.n_z, gauge.n_y), (3, 0, 0));

        let gauge = bell_pair().css_gauge(&x_basis(2));
        assert_eq!((gauge.n_x, gauge.n_z, gauge.n_y), (1, 1, 0));

        let ghz = StabilizerTableau::from_generators(
            3,
            vec![p("+XXI"), p("+IXX"), p("+ZZZ")],
        )
        .unwrap();
        let gauge = ghz.css_gauge(&x_basis(3));
        assert_eq!((gauge.n_x, gauge.n_z, gauge.n_y), (2, 1, 0));
    }

    #[test]
    fn css_gauge_tableau_is_same_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let state = random_state(5, &mut rng);
            let basis = LocalPauliBasis::random(5, &mut rng);
            let gauge = state.css_gauge(&basis);
            assert_eq!(gauge.n_x + gauge.n_z + gauge.n_y, state.num_generators());
            assert_eq!(gauge.tableau.num_generators(), state.num_generators());
            // Same group: every gauge generator is a deterministic +1
            // measurement on the original state.
            let mut copy = state.clone();
            for g in gauge.tableau.generators() {
                let rec = copy
                    .measure(g, MeasurePolicy::Random, &mut rng)
                    .unwrap();
                assert_eq!(rec.case, MeasureCase::NoEffect);
                assert!(!rec.outcome);
            }
        }
    }

    #[test]
    fn coherence_of_polarized_products() {
        let basis = x_basis(1);
        let z_pol = StabilizerTableau::product(&[(Axis::Z, false)]);
        assert_eq!(z_pol.coherence(&basis), 1);

        // N_x X-polarized, N_z Z-polarized: coherence in X basis is N_z.
        let state = StabilizerTableau::product(&[
            (Axis::X, false),
            (Axis::X, true),
            (Axis::Z, false),
            (Axis::Z, true),
            (Axis::Z, false),
        ]);
        assert_eq!(state.coherence(&x_basis(5)), 3);

        // Adding maximally mixed sites leaves it unchanged.
        let mut gens = Vec::new();
        gens.push(p("+XIIII"));
        gens.push(p("+IZIII"));
        gens.push(p("+IIZII"));
        let state = StabilizerTableau::from_generators(5, gens).unwrap();
        assert_eq!(state.coherence(&x_basis(5)), 2);
    }

    #[test]
    fn coherence_oracle_matches_gauge_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let product = StabilizerTableau::x_product(4);
        assert_eq!(product.coherence_oracle(&x_basis(4), &mut rng), 0);
        assert_eq!(bell_pair().coherence_oracle(&x_basis(2), &mut rng), 1);
        for _ in 0..200 {
            let state = random_state(6, &mut rng);
            let basis = LocalPauliBasis::random(6, &mut rng);
            assert_eq!(
                state.coherence(&basis),
                state.coherence_oracle(&basis, &mut rng),
                "state {state:?} basis {basis}"
            );
        }
    }

    #[test]
    fn coherent_information_of_bell_encoding() {
        // A Bell pair between system site 0 and ancilla site 1.
        let state = bell_pair();
        assert_eq!(state.coherent_information(&[0], &[1]).unwrap(), 1);
        let product = StabilizerTableau::x_product(2);
        assert_eq!(product.coherent_information(&[0], &[1]).unwrap(), 0);
        assert_eq!(
            product.coherent_information(&[0], &[0]).unwrap_err(),
            StabError::OverlappingRegions(0)
        );
    }

    #[test]
    fn snapshot_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let state = random_state(7, &mut rng);
            let text = state.write_snapshot();
            let parsed = StabilizerTableau::parse_snapshot(&text).unwrap();
            assert_eq!(parsed, state);
        }
    }

    #[test]
    fn snapshot_rejects_malformed_input() {
        assert!(StabilizerTableau::parse_snapshot("").is_err());
        assert!(StabilizerTableau::parse_snapshot("2 3\n+XX\n+ZZ\n+YY").is_err());
        assert!(StabilizerTableau::parse_snapshot("2 1\n+XXX").is_err());
        assert!(StabilizerTableau::parse_snapshot("2 2\n+XX\n+ZI").is_err());
        assert!(StabilizerTableau::parse_snapshot("2 1\n+II").is_err());
    }
}
