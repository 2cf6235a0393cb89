//! Stabilizer error-correction codes and the coherence bounds on their
//! distance.
//!
//! A code on `n` qubits is a set of `n - k` commuting independent check
//! operators plus `k` logical pairs. The code distance is found by exhaustive
//! weight-ordered search; the code-space stabilizer states are enumerated
//! (for `k <= 3`) to evaluate the maximum-coherence bound `d <= C_PD` and its
//! tightened two-least-coherent-subspace variant.

use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

use crate::f2::{BitMatrix, BitVec};
use crate::pauli::{Axis, LocalPauliBasis, PauliError, PauliString};
use crate::stab::{MeasureCase, MeasurePolicy, StabError, StabilizerTableau};

#[derive(Debug, Error, PartialEq)]
pub enum CodesError {
    #[error("invalid code: {0}")]
    InvalidCode(String),
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    Stab(#[from] StabError),
    #[error("code-space enumeration supports k <= 3, got k = {0}")]
    EnumerationBudget(usize),
    #[error("distance search budget exceeded; no logical operator up to weight {searched}")]
    DistanceBudget { searched: usize },
    #[error("no basis-restricted logical operator exists")]
    NoDephasingLogical,
    #[error("coherence bound violated: d = {distance} > {bound} = {which} in basis {basis}")]
    BoundViolated { distance: usize, bound: usize, which: &'static str, basis: String },
    #[error("theorem precondition not met: {0}")]
    Precondition(String),
    #[error("invalid code file at line {line}: {reason}")]
    ParseError { line: usize, reason: String },
}

/// An `[[n, k, d]]` stabilizer code: checks plus a symplectic basis of
/// logical operators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeSpec {
    n: usize,
    k: usize,
    checks: Vec<PauliString>,
    logicals: Vec<(PauliString, PauliString)>,
}

impl CodeSpec {
    pub fn new(
        n: usize,
        checks: Vec<PauliString>,
        logicals: Vec<(PauliString, PauliString)>,
    ) -> Result<Self, CodesError> {
        let k = logicals.len();
        if checks.len() + k != n {
            return Err(CodesError::InvalidCode(format!(
                "{} checks and {k} logical pairs do not fill {n} qubits",
                checks.len()
            )));
        }
        // Checks must commute and be independent; reuse the tableau
        // validation.
        StabilizerTableau::from_generators(n, checks.clone())?;
        let all_logicals: Vec<&PauliString> =
            logicals.iter().flat_map(|(x, z)| [x, z]).collect();
        for (i, log) in all_logicals.iter().enumerate() {
            for check in &checks {
                if !log.commutes_with(check)? {
                    return Err(CodesError::InvalidCode(format!(
                        "logical {log} does not commute with check {check}"
                    )));
                }
            }
            for (j, other) in all_logicals.iter().enumerate() {
                let should_anticommute = (i / 2 == j / 2) && (i != j);
                if log.commutes_with(other)? == should_anticommute {
                    return Err(CodesError::InvalidCode(format!(
                        "logicals {log} and {other} have the wrong symplectic pairing"
                    )));
                }
            }
        }
        Ok(Self { n, k, checks, logicals })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn checks(&self) -> &[PauliString] {
        &self.checks
    }

    pub fn logicals(&self) -> &[(PauliString, PauliString)] {
        &self.logicals
    }

    /// The `L`-site repetition code: its code space is spanned by the
    /// X-basis states with equal bits, fixed by the XX parity checks.
    pub fn repetition(l: usize) -> Self {
        assert!(l >= 2, "repetition code needs at least 2 sites");
        let mut checks = Vec::with_capacity(l - 1);
        for i in 0..l - 1 {
            let mut g = PauliString::single(l, i, Axis::X);
            g.set_site(i + 1, Some(Axis::X));
            checks.push(g);
        }
        let logical_z = PauliString::single(l, 0, Axis::X);
        let mut logical_x = PauliString::identity(l);
        for i in 0..l {
            logical_x.set_site(i, Some(Axis::Z));
        }
        Self::new(l, checks, vec![(logical_x, logical_z)]).expect("valid repetition code")
    }

    /// Steane's [[7,1,3]] code from the Hamming [7,4] parity checks.
    pub fn steane() -> Self {
        let hamming = ["0001111", "0110011", "1010101"];
        let h = BitMatrix::parse_dense(&hamming.join("\n")).expect("valid matrix");
        Self::css(&h, &h).expect("valid Steane code")
    }

    /// Shor's [[9,1,3]] code.
    pub fn shor() -> Self {
        let n = 9;
        let mut checks = Vec::new();
        for block in 0..3 {
            for i in 0..2 {
                let site = 3 * block + i;
                let mut g = PauliString::single(n, site, Axis::Z);
                g.set_site(site + 1, Some(Axis::Z));
                checks.push(g);
            }
        }
        for start in [0, 3] {
            let mut g = PauliString::identity(n);
            for i in start..start + 6 {
                g.set_site(i, Some(Axis::X));
            }
            checks.push(g);
        }
        let mut logical_z = PauliString::identity(n);
        for i in 0..3 {
            logical_z.set_site(i, Some(Axis::X));
        }
        let mut logical_x = PauliString::identity(n);
        for i in [0, 3, 6] {
            logical_x.set_site(i, Some(Axis::Z));
        }
        Self::new(n, checks, vec![(logical_x, logical_z)]).expect("valid Shor code")
    }

    /// The perfect [[5,1,3]] code with cyclic XZZXI checks.
    pub fn five_qubit() -> Self {
        let n = 5;
        let pattern = [Axis::X, Axis::Z, Axis::Z, Axis::X];
        let mut checks = Vec::new();
        for shift in 0..4 {
            let mut g = PauliString::identity(n);
            for (offset, &axis) in pattern.iter().enumerate() {
                g.set_site((shift + offset) % n, Some(axis));
            }
            checks.push(g);
        }
        let mut logical_x = PauliString::identity(n);
        let mut logical_z = PauliString::identity(n);
        for i in 0..n {
            logical_x.set_site(i, Some(Axis::X));
            logical_z.set_site(i, Some(Axis::Z));
        }
        Self::new(n, checks, vec![(logical_x, logical_z)]).expect("valid five-qubit code")
    }

    /// CSS code from two parity-check matrices with orthogonal row spaces
    /// (`H_x H_z^T = 0`): the rows of `h_x` become X-type checks and the
    /// rows of `h_z` Z-type checks; canonical logicals are derived from the
    /// centralizer.
    pub fn css(h_x: &BitMatrix, h_z: &BitMatrix) -> Result<Self, CodesError> {
        if h_x.cols() != h_z.cols() {
            return Err(CodesError::InvalidCode(format!(
                "parity checks act on {} and {} bits",
                h_x.cols(),
                h_z.cols()
            )));
        }
        let n = h_x.cols();
        if h_x.rank() != h_x.rows() || h_z.rank() != h_z.rows() {
            return Err(CodesError::InvalidCode("parity-check rows are dependent".into()));
        }
        for i in 0..h_x.rows() {
            for j in 0..h_z.rows() {
                if h_x.row_bits(i).dot(&h_z.row_bits(j)) {
                    return Err(CodesError::InvalidCode(format!(
                        "row spaces are not orthogonal (H_x row {i} vs H_z row {j})"
                    )));
                }
            }
        }
        let mut checks = Vec::new();
        for i in 0..h_x.rows() {
            let mut g = PauliString::identity(n);
            for j in h_x.row_bits(i).iter_ones() {
                g.set_site(j, Some(Axis::X));
            }
            checks.push(g);
        }
        for i in 0..h_z.rows() {
            let mut g = PauliString::identity(n);
            for j in h_z.row_bits(i).iter_ones() {
                g.set_site(j, Some(Axis::Z));
            }
            checks.push(g);
        }
        let k = n
            .checked_sub(checks.len())
            .ok_or_else(|| CodesError::InvalidCode("more checks than qubits".into()))?;
        let logicals = canonical_logicals(n, &checks)?;
        debug_assert_eq!(logicals.len(), k);
        Self::new(n, checks, logicals)
    }

    /// Dimension of the classical Z code `K^z` when this is a CSS code:
    /// `n - (number of Z-type checks)`. Used by the Singleton comparisons.
    pub fn classical_k(&self, axis: Axis) -> usize {
        let pure = |g: &PauliString| {
            (0..self.n).all(|i| g.axis_at(i).is_none() || g.axis_at(i) == Some(axis))
        };
        self.n - self.checks.iter().filter(|g| pure(g)).count()
    }

    /// Serialize as a code file: `n k` header, then the checks, then the
    /// logical pairs (X then Z for each logical qubit).
    pub fn write_file(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{} {}", self.n, self.k).unwrap();
        for g in &self.checks {
            writeln!(out, "{g}").unwrap();
        }
        for (x, z) in &self.logicals {
            writeln!(out, "{x}").unwrap();
            writeln!(out, "{z}").unwrap();
        }
        out
    }

    /// Parse and validate the code file format. Round-trips with
    /// [`Self::write_file`].
    pub fn parse_file(text: &str) -> Result<Self, CodesError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (header_line, header) = lines
            .next()
            .ok_or(CodesError::ParseError { line: 0, reason: "empty file".into() })?;
        let mut parts = header.split_whitespace();
        let parse_count = |s: Option<&str>| {
            s.and_then(|v| v.parse::<usize>().ok()).ok_or(CodesError::ParseError {
                line: header_line,
                reason: "expected `n k` header".into(),
            })
        };
        let n = parse_count(parts.next())?;
        let k = parse_count(parts.next())?;
        if parts.next().is_some() {
            return Err(CodesError::ParseError {
                line: header_line,
                reason: "trailing tokens in header".into(),
            });
        }
        if k > n {
            return Err(CodesError::ParseError {
                line: header_line,
                reason: format!("k = {k} exceeds n = {n}"),
            });
        }
        let mut paulis = Vec::new();
        for (line, text) in lines {
            let p: PauliString = text.parse().map_err(|e: PauliError| {
                CodesError::ParseError { line, reason: e.to_string() }
            })?;
            if p.len() != n {
                return Err(CodesError::ParseError {
                    line,
                    reason: format!("operator length {} does not match n = {n}", p.len()),
                });
            }
            paulis.push(p);
        }
        if paulis.len() != n + k {
            return Err(CodesError::ParseError {
                line: 0,
                reason: format!(
                    "expected {} checks plus {} logical operators, found {}",
                    n - k,
                    2 * k,
                    paulis.len()
                ),
            });
        }
        let logicals_flat = paulis.split_off(n - k);
        let logicals = logicals_flat.chunks(2).map(|pair| (pair[0].clone(), pair[1].clone())).collect();
        Self::new(n, paulis, logicals)
    }
}

fn sympl_row(n: usize, p: &PauliString) -> BitVec {
    let mut v = BitVec::zeros(2 * n);
    for j in 0..n {
        if p.x_bit(j) {
            v.set(j, true);
        }
        if p.z_bit(j) {
            v.set(n + j, true);
        }
    }
    v
}

fn pauli_from_row(n: usize, v: &BitVec) -> PauliString {
    let mut x = BitVec::zeros(n);
    let mut z = BitVec::zeros(n);
    for j in 0..n {
        if v.get(j) {
            x.set(j, true);
        }
        if v.get(n + j) {
            z.set(j, true);
        }
    }
    PauliString::from_parts(x, z, false)
}

fn symplectic_product(n: usize, a: &BitVec, b: &BitVec) -> bool {
    let mut acc = false;
    for j in 0..n {
        acc ^= a.get(j) & b.get(n + j);
        acc ^= a.get(n + j) & b.get(j);
    }
    acc
}

/// Complete a check set to a full symplectic basis: representatives of the
/// centralizer modulo the stabilizer, paired into (X-like, Z-like) logicals
/// by symplectic Gram-Schmidt. All signs are +.
pub fn canonical_logicals(
    n: usize,
    checks: &[PauliString],
) -> Result<Vec<(PauliString, PauliString)>, CodesError> {
    let k = n - checks.len();
    let check_rows: Vec<BitVec> = checks.iter().map(|g| sympl_row(n, g)).collect();
    // Commutation with (gx | gz) tests the dot with the swapped row
    // (gz | gx); the centralizer is that matrix's null space.
    let mut swapped = BitMatrix::zeros(checks.len(), 2 * n);
    for (i, row) in check_rows.iter().enumerate() {
        for j in 0..n {
            if row.get(n + j) {
                swapped.set(i, j, true);
            }
            if row.get(j) {
                swapped.set(i, n + j, true);
            }
        }
    }
    let centralizer = swapped.null_space();

    // Pick 2k centralizer vectors independent modulo the stabilizer rows.
    let mut coset_reps: Vec<BitVec> = Vec::with_capacity(2 * k);
    let mut span_rows = check_rows;
    for v in centralizer {
        if coset_reps.len() == 2 * k {
            break;
        }
        if !BitMatrix::from_rows(&span_rows).contains_in_row_space(&v) {
            span_rows.push(v.clone());
            coset_reps.push(v);
        }
    }
    if coset_reps.len() != 2 * k {
        return Err(CodesError::InvalidCode(
            "could not complete a logical basis from the centralizer".into(),
        ));
    }

    // Symplectic Gram-Schmidt into anticommuting pairs.
    let mut pairs = Vec::with_capacity(k);
    let mut pool = coset_reps;
    while let Some(a) = pool.pop() {
        let partner_idx = pool
            .iter()
            .position(|b| symplectic_product(n, &a, b))
            .ok_or_else(|| {
                CodesError::InvalidCode("centralizer vector without symplectic partner".into())
            })?;
        let b = pool.swap_remove(partner_idx);
        for c in &mut pool {
            if symplectic_product(n, c, &b) {
                c.xor_assign(&a);
            }
            if symplectic_product(n, c, &a) {
                c.xor_assign(&b);
            }
        }
        pairs.push((pauli_from_row(n, &a), pauli_from_row(n, &b)));
    }
    pairs.reverse();
    Ok(pairs)
}

/// Exhaustive code distance: the minimum weight over Pauli strings that
/// commute with every check but lie outside the stabilizer group.
///
/// Enumeration is by increasing weight with early exit, so it is exact;
/// the candidate budget guards against infeasible inputs.
pub fn brute_force_distance(code: &CodeSpec) -> Result<usize, CodesError> {
    distance_search(code, &[Axis::X, Axis::Y, Axis::Z])
}

/// Distance against errors restricted to one axis (basis-diagonal strings
/// only), e.g. pure X-dephasing errors in the X basis.
pub fn dephasing_distance(code: &CodeSpec, axis: Axis) -> Result<usize, CodesError> {
    distance_search(code, &[axis])
}

fn distance_search(code: &CodeSpec, axes: &[Axis]) -> Result<usize, CodesError> {
    const CANDIDATE_BUDGET: u64 = 200_000_000;
    let n = code.n;
    let check_matrix =
        BitMatrix::from_rows(&code.checks.iter().map(|g| sympl_row(n, g)).collect::<Vec<_>>());
    let mut candidates_seen: u64 = 0;

    let mut sites = Vec::new();
    for weight in 1..=n {
        sites.clear();
        sites.extend(0..weight);
        loop {
            let axes_total = (axes.len() as u64).pow(weight as u32);
            if candidates_seen + axes_total > CANDIDATE_BUDGET {
                return Err(CodesError::DistanceBudget { searched: weight.saturating_sub(1) });
            }
            candidates_seen += axes_total;
            let mut assignment = vec![0usize; weight];
            loop {
                let mut candidate = PauliString::identity(n);
                for (slot, &site) in sites.iter().enumerate() {
                    candidate.set_site(site, Some(axes[assignment[slot]]));
                }
                let commutes_all = code
                    .checks
                    .iter()
                    .all(|g| candidate.commutes_with(g).expect("equal lengths"));
                if commutes_all
                    && !check_matrix.contains_in_row_space(&sympl_row(n, &candidate))
                {
                    return Ok(weight);
                }
                // Advance the mixed-radix axis assignment.
                let mut slot = 0;
                loop {
                    if slot == weight {
                        break;
                    }
                    assignment[slot] += 1;
                    if assignment[slot] < axes.len() {
                        break;
                    }
                    assignment[slot] = 0;
                    slot += 1;
                }
                if slot == weight {
                    break;
                }
            }
            // Advance the site combination (lexicographic).
            let mut i = weight;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                if sites[i] != i + n - weight {
                    sites[i] += 1;
                    for j in i + 1..weight {
                        sites[j] = sites[j - 1] + 1;
                    }
                    break;
                }
                if i == 0 {
                    sites.clear();
                    break;
                }
            }
            if sites.is_empty() {
                break;
            }
        }
    }
    if axes.len() < 3 {
        Err(CodesError::NoDephasingLogical)
    } else {
        Err(CodesError::DistanceBudget { searched: n })
    }
}

/// All stabilizer states in the code space: checks plus every maximal
/// commuting signed subgroup of the logical Pauli group. Feasible for
/// `k <= 3` (6, 60 and 1080 states).
pub fn enumerate_code_states(code: &CodeSpec) -> Result<Vec<StabilizerTableau>, CodesError> {
    if code.k > 3 {
        return Err(CodesError::EnumerationBudget(code.k));
    }
    if code.k == 0 {
        let tableau = StabilizerTableau::from_generators(code.n, code.checks.clone())?;
        return Ok(vec![tableau]);
    }
    let k = code.k;
    // Logical words are symplectic vectors on k qubits: (x bits | z bits).
    let word_bits = 2 * k;
    let words: Vec<u32> = (1..(1u32 << word_bits)).collect();
    let commute = |a: u32, b: u32| -> bool {
        let (ax, az) = (a & ((1 << k) - 1), a >> k);
        let (bx, bz) = (b & ((1 << k) - 1), b >> k);
        ((ax & bz).count_ones() + (az & bx).count_ones()) % 2 == 0
    };
    // Group closure as a sorted element list for deduplication.
    let closure = |gens: &[u32]| -> Vec<u32> {
        let mut elements = vec![0u32];
        for &g in gens {
            let current = elements.clone();
            for e in current {
                elements.push(e ^ g);
            }
        }
        elements.sort_unstable();
        elements
    };

    let mut seen = std::collections::HashSet::new();
    let mut unsigned_groups: Vec<Vec<u32>> = Vec::new();
    let mut stack: Vec<Vec<u32>> = vec![Vec::new()];
    while let Some(gens) = stack.pop() {
        if gens.len() == k {
            if seen.insert(closure(&gens)) {
                unsigned_groups.push(gens);
            }
            continue;
        }
        let start = gens.last().map_or(0, |&g| g + 1);
        for &w in words.iter().filter(|&&w| w >= start) {
            if gens.iter().all(|&g| commute(g, w)) {
                let closed = closure(&gens);
                if !closed.contains(&w) {
                    let mut next = gens.clone();
                    next.push(w);
                    stack.push(next);
                }
            }
        }
    }

    let mut states = Vec::new();
    for gens in &unsigned_groups {
        for signs in 0..(1u32 << k) {
            let mut tableau_gens = code.checks.clone();
            for (slot, &word) in gens.iter().enumerate() {
                let mut acc = PauliString::identity(code.n);
                if signs >> slot & 1 != 0 {
                    acc.flip_sign();
                }
                for j in 0..k {
                    let x = word >> j & 1 != 0;
                    let z = word >> (k + j) & 1 != 0;
                    let (logical_x, logical_z) = &code.logicals[j];
                    match (x, z) {
                        (false, false) => {}
                        (true, false) => acc = acc.multiply(logical_x)?,
                        (false, true) => acc = acc.multiply(logical_z)?,
                        (true, true) => {
                            // Logical Y_j = i X_j Z_j, Hermitian.
                            acc = acc.multiply(logical_x)?;
                            acc = acc.multiply_with_extra_phase(logical_z, 1)?;
                        }
                    }
                }
                tableau_gens.push(acc);
            }
            states.push(StabilizerTableau::from_generators(code.n, tableau_gens)?);
        }
    }
    Ok(states)
}

/// The maximally coherent stabilizer state in the code space and its
/// coherence `C_PD`, the weak bound on the code distance.
pub fn max_coherent_code_state(
    code: &CodeSpec,
    basis: &LocalPauliBasis,
) -> Result<(StabilizerTableau, usize), CodesError> {
    let states = enumerate_code_states(code)?;
    let best = states
        .into_iter()
        .map(|s| {
            let c = s.coherence(basis);
            (s, c)
        })
        .max_by_key(|(_, c)| *c)
        .expect("code space is never empty");
    Ok(best)
}

/// The tightened bound: the two least coherent logical-Z basis states span a
/// one-logical-qubit subcode whose maximal coherence still bounds `d` and is
/// at most one bit above the second-least coherent basis state.
pub fn tight_bound(code: &CodeSpec, basis: &LocalPauliBasis) -> Result<usize, CodesError> {
    if code.k > 3 {
        return Err(CodesError::EnumerationBudget(code.k));
    }
    if code.k == 0 {
        let tableau = StabilizerTableau::from_generators(code.n, code.checks.clone())?;
        return Ok(tableau.coherence(basis));
    }
    // Coherence of every diagonal basis state (sign pattern of the logical
    // Zs).
    let mut by_coherence: Vec<(usize, u32)> = Vec::new();
    for signs in 0..(1u32 << code.k) {
        let mut gens = code.checks.clone();
        for (j, (_, logical_z)) in code.logicals.iter().enumerate() {
            let mut g = logical_z.clone();
            if signs >> j & 1 != 0 {
                g.flip_sign();
            }
            gens.push(g);
        }
        let tableau = StabilizerTableau::from_generators(code.n, gens)?;
        by_coherence.push((tableau.coherence(basis), signs));
    }
    by_coherence.sort_unstable();
    let (_, signs_a) = by_coherence[0];
    let (_, signs_b) = by_coherence[1];
    let differing: Vec<usize> =
        (0..code.k).filter(|j| (signs_a ^ signs_b) >> j & 1 != 0).collect();
    debug_assert!(!differing.is_empty());

    // Build the 2-dimensional subcode spanned by those two basis states.
    let mut checks = code.checks.clone();
    for j in 0..code.k {
        if !differing.contains(&j) {
            let mut g = code.logicals[j].1.clone();
            if signs_a >> j & 1 != 0 {
                g.flip_sign();
            }
            checks.push(g);
        }
    }
    let pivot = differing[0];
    for &j in &differing[1..] {
        let mut g = code.logicals[pivot].1.multiply(&code.logicals[j].1)?;
        if (signs_a >> pivot ^ signs_a >> j) & 1 != 0 {
            g.flip_sign();
        }
        checks.push(g);
    }
    let mut logical_x = PauliString::identity(code.n);
    for &j in &differing {
        logical_x = logical_x.multiply(&code.logicals[j].0)?;
    }
    let mut logical_z = code.logicals[pivot].1.clone();
    if signs_a >> pivot & 1 != 0 {
        logical_z.flip_sign();
    }
    let subcode = CodeSpec::new(code.n, checks, vec![(logical_x, logical_z)])?;
    let (_, bound) = max_coherent_code_state(&subcode, basis)?;
    Ok(bound)
}

/// Per-basis bound evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisBound {
    pub basis: LocalPauliBasis,
    pub c_pd: usize,
    pub tight: usize,
}

/// Full bound report for one code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundReport {
    pub distance: usize,
    pub per_basis: Vec<BasisBound>,
}

/// Check `d <= tight <= C_PD` for every sampled basis. Any violation is a
/// hard error: it would falsify the implementation, not the theorems.
pub fn verify_coherence_bound(
    code: &CodeSpec,
    bases: &[LocalPauliBasis],
) -> Result<BoundReport, CodesError> {
    let distance = brute_force_distance(code)?;
    let mut per_basis = Vec::with_capacity(bases.len());
    for basis in bases {
        let (_, c_pd) = max_coherent_code_state(code, basis)?;
        let tight = tight_bound(code, basis)?;
        if tight > c_pd {
            return Err(CodesError::BoundViolated {
                distance: tight,
                bound: c_pd,
                which: "C_PD (tight bound exceeded it)",
                basis: basis.to_string(),
            });
        }
        if distance > tight {
            return Err(CodesError::BoundViolated {
                distance,
                bound: tight,
                which: "tight bound",
                basis: basis.to_string(),
            });
        }
        per_basis.push(BasisBound { basis: basis.clone(), c_pd, tight });
    }
    Ok(BoundReport { distance, per_basis })
}

/// The standard basis sample for bound checks: uniform X, Y, Z plus random
/// local bases.
pub fn bound_check_bases<R: Rng + ?Sized>(
    n: usize,
    random_count: usize,
    rng: &mut R,
) -> Vec<LocalPauliBasis> {
    let mut bases = vec![
        LocalPauliBasis::uniform(Axis::X, n),
        LocalPauliBasis::uniform(Axis::Y, n),
        LocalPauliBasis::uniform(Axis::Z, n),
    ];
    bases.extend((0..random_count).map(|_| LocalPauliBasis::random(n, rng)));
    bases
}

/// The entropy-reduction attack of the coherence-requirement theorem: given
/// a mixed state and `M` greater than its coherence, a sequence of `M`
/// single-site basis measurements whose application reduces the entropy by
/// `min(M - C_D, S(rho))`.
///
/// The first `C_D` measurements hit the unique leftmost conjugate-pivot
/// sites of the gauge-reduced non-diagonal generators (entropy-preserving);
/// the rest are entropy-reducing until the state purifies, then inert.
pub fn attack_sequence(
    state: &StabilizerTableau,
    basis: &LocalPauliBasis,
    m: usize,
) -> Result<Vec<PauliString>, CodesError> {
    let coherence = state.coherence(basis);
    if m <= coherence {
        return Err(CodesError::Precondition(format!(
            "need M > C_D = {coherence}, got M = {m}"
        )));
    }
    if state.is_pure() {
        return Err(CodesError::Precondition("state must be mixed".into()));
    }
    let len = state.len();
    let frame = state.to_basis_frame(basis);
    let gauge = frame.css_gauge(&LocalPauliBasis::uniform(Axis::X, len));
    // Stack the conjugate parts of the non-diagonal blocks and reduce: the
    // pivot columns are the unique leftmost sites.
    let conj_rows: Vec<BitVec> = gauge.tableau.generators()[gauge.n_x..]
        .iter()
        .map(|g| g.z_mask().clone())
        .collect();
    let mut sequence = Vec::with_capacity(m);
    let mut copy = state.clone();
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    if !conj_rows.is_empty() {
        let stacked = BitMatrix::from_rows(&conj_rows);
        let (reduced, _) = stacked.gaussian_eliminate(&(0..len).collect::<Vec<_>>());
        for i in 0..reduced.rows() {
            let Some(site) = (0..len).find(|&j| reduced.get(i, j)) else {
                continue;
            };
            let op = basis.operator_at(site, len);
            let record = copy.measure(&op, MeasurePolicy::ForcedRecord(false), &mut rng)?;
            debug_assert_eq!(record.case, MeasureCase::StateChanging);
            sequence.push(op);
        }
    }
    debug_assert_eq!(sequence.len(), coherence);
    debug_assert_eq!(copy.entropy(), state.entropy());

    // Entropy-reducing measurements: sites whose diagonal operator is not
    // yet in the group.
    for site in 0..len {
        if sequence.len() == m || copy.entropy() == 0 {
            break;
        }
        let op = basis.operator_at(site, len);
        if copy.classify_measurement(&op)? == MeasureCase::EntropyReducing {
            copy.measure(&op, MeasurePolicy::ForcedRecord(false), &mut rng)?;
            sequence.push(op);
        }
    }
    // Pad with inert measurements of already-determined sites.
    while sequence.len() < m {
        let op = sequence.last().expect("sequence nonempty").clone();
        debug_assert_eq!(copy.classify_measurement(&op)?, MeasureCase::NoEffect);
        sequence.push(op);
    }
    Ok(sequence)
}

/// The measurement positions that reduce a pure state to a product state in
/// the given basis: exactly the uncertain outcomes of a site-by-site sweep.
/// The sequence length equals the state's coherence.
pub fn reduce_to_product(
    state: &StabilizerTableau,
    basis: &LocalPauliBasis,
) -> Result<Vec<usize>, CodesError> {
    if !state.is_pure() {
        return Err(CodesError::Precondition("state must be pure".into()));
    }
    let len = state.len();
    let mut copy = state.clone();
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    let mut positions = Vec::new();
    for site in 0..len {
        let op = basis.operator_at(site, len);
        let record = copy.measure(&op, MeasurePolicy::ForcedRecord(false), &mut rng)?;
        if !record.deterministic {
            positions.push(site);
        }
    }
    debug_assert_eq!(copy.coherence(basis), 0);
    Ok(positions)
}
