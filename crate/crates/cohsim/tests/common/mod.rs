//! Dense density-matrix oracle for small registers.
//!
//! Everything here is brute force on 2^n x 2^n complex matrices and stays
//! independent of the stabilizer kernel: operators are built site-by-site
//! from the literal Pauli matrices, states evolve by matrix conjugation, and
//! entropies come from eigenvalues.

use cohsim::pauli::{Axis, Gate, LocalPauliBasis, PauliString};
use cohsim::stab::StabilizerTableau;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

pub type Matrix = DMatrix<C64>;

pub fn pauli_matrix(axis: Option<Axis>) -> Matrix {
    let (a, b, c, d) = match axis {
        None => (C64::new(1.0, 0.0), C64::ZERO, C64::ZERO, C64::new(1.0, 0.0)),
        Some(Axis::X) => (C64::ZERO, C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::ZERO),
        Some(Axis::Y) => (C64::ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::ZERO),
        Some(Axis::Z) => (C64::new(1.0, 0.0), C64::ZERO, C64::ZERO, C64::new(-1.0, 0.0)),
    };
    Matrix::from_row_slice(2, 2, &[a, b, c, d])
}

pub fn operator_matrix(p: &PauliString) -> Matrix {
    // Index bit i addresses site i, so each successive site factor goes on
    // the high side of the Kronecker product.
    let mut acc = Matrix::identity(1, 1);
    for site in 0..p.len() {
        acc = pauli_matrix(p.axis_at(site)).kronecker(&acc);
    }
    if p.sign() {
        acc = -acc;
    }
    acc
}

/// A density matrix on `n` qubits.
#[derive(Clone, Debug)]
pub struct DenseState {
    pub n: usize,
    pub rho: Matrix,
}

impl DenseState {
    pub fn from_tableau(state: &StabilizerTableau) -> Self {
        let n = state.len();
        let dim = 1usize << n;
        let mut rho = Matrix::identity(dim, dim);
        for g in state.generators() {
            let projector = (Matrix::identity(dim, dim) + operator_matrix(g)) * C64::new(0.5, 0.0);
            rho = projector * rho;
        }
        let trace = rho.trace();
        rho /= trace;
        Self { n, rho }
    }

    pub fn apply_gate(&mut self, gate: Gate) {
        let u = self.gate_matrix(gate);
        self.rho = &u * &self.rho * u.adjoint();
    }

    fn gate_matrix(&self, gate: Gate) -> Matrix {
        let dim = 1usize << self.n;
        match gate {
            Gate::Phase { site } => {
                let s = Matrix::from_row_slice(
                    2,
                    2,
                    &[C64::new(1.0, 0.0), C64::ZERO, C64::ZERO, C64::new(0.0, 1.0)],
                );
                let mut acc = Matrix::identity(1, 1);
                for i in 0..self.n {
                    let factor = if i == site { s.clone() } else { Matrix::identity(2, 2) };
                    acc = factor.kronecker(&acc);
                }
                acc
            }
            Gate::Cnot { control, target } => {
                // |0><0|_c (x) I + |1><1|_c (x) X_t, assembled entrywise in
                // the Z product basis (bit 0 of the index is site 0).
                let mut u = Matrix::zeros(dim, dim);
                for col in 0..dim {
                    let c_bit = col >> control & 1;
                    let row = if c_bit == 1 { col ^ (1 << target) } else { col };
                    u[(row, col)] = C64::new(1.0, 0.0);
                }
                u
            }
        }
    }

    /// Probability of eigenvalue `(-1)^outcome` for a Pauli measurement.
    pub fn outcome_probability(&self, op: &PauliString, outcome: bool) -> f64 {
        let projector = self.projector(op, outcome);
        (&projector * &self.rho).trace().re
    }

    fn projector(&self, op: &PauliString, outcome: bool) -> Matrix {
        let dim = 1usize << self.n;
        let sign = if outcome { -1.0 } else { 1.0 };
        (Matrix::identity(dim, dim) + operator_matrix(op) * C64::new(sign, 0.0))
            * C64::new(0.5, 0.0)
    }

    /// Project onto a recorded outcome and renormalize.
    pub fn project(&mut self, op: &PauliString, outcome: bool) {
        let p = self.projector(op, outcome);
        self.rho = &p * &self.rho * &p;
        let trace = self.rho.trace();
        assert!(trace.re > 1e-12, "projected onto an impossible outcome");
        self.rho /= trace;
    }

    /// Measure-and-forget: average the two projections.
    pub fn dephase(&mut self, op: &PauliString) {
        let g = operator_matrix(op);
        self.rho = (&self.rho + &g * &self.rho * &g) * C64::new(0.5, 0.0);
    }

    /// Conjugate by a Hermitian Pauli: `rho -> G rho G`.
    pub fn apply_pauli(&mut self, op: &PauliString) {
        let g = operator_matrix(op);
        self.rho = &g * &self.rho * &g;
    }

    /// The forgotten bit eraser as its literal Kraus pair acting on the X
    /// eigenbasis of one site: E1 = |0><0|, E2 = |0><1|.
    pub fn forgotten_eraser(&mut self, site: usize) {
        let plus = |m: &mut Matrix, row: usize, col: usize, v: f64| {
            m[(row, col)] += C64::new(v, 0.0);
        };
        // X eigenstates on one site: |0_x> = (|0> + |1>)/sqrt2 and
        // |1_x> = (|0> - |1>)/sqrt2 in the Z basis used for indexing.
        let mut e1 = Matrix::zeros(2, 2);
        plus(&mut e1, 0, 0, 0.5);
        plus(&mut e1, 0, 1, 0.5);
        plus(&mut e1, 1, 0, 0.5);
        plus(&mut e1, 1, 1, 0.5);
        let mut e2 = Matrix::zeros(2, 2);
        plus(&mut e2, 0, 0, 0.5);
        plus(&mut e2, 0, 1, -0.5);
        plus(&mut e2, 1, 0, 0.5);
        plus(&mut e2, 1, 1, -0.5);
        let lift = |m: &Matrix| {
            let mut acc = Matrix::identity(1, 1);
            for i in 0..self.n {
                let factor = if i == site { m.clone() } else { Matrix::identity(2, 2) };
                acc = factor.kronecker(&acc);
            }
            acc
        };
        let (k1, k2) = (lift(&e1), lift(&e2));
        self.rho = &k1 * &self.rho * k1.adjoint() + &k2 * &self.rho * k2.adjoint();
    }

    /// Von Neumann entropy in bits.
    pub fn entropy(&self) -> f64 {
        shannon(&self.rho)
    }

    /// Entropy of the reduced state on `region`.
    pub fn subsystem_entropy(&self, region: &[usize]) -> f64 {
        shannon(&self.partial_trace_keep(region))
    }

    /// Partial trace keeping the listed sites (in their original order).
    pub fn partial_trace_keep(&self, region: &[usize]) -> Matrix {
        let keep: Vec<usize> = region.to_vec();
        let kept = keep.len();
        let traced: Vec<usize> = (0..self.n).filter(|s| !keep.contains(s)).collect();
        let dim_keep = 1usize << kept;
        let dim_traced = 1usize << traced.len();
        let mut out = Matrix::zeros(dim_keep, dim_keep);
        let expand = |kept_bits: usize, traced_bits: usize| -> usize {
            let mut full = 0usize;
            for (pos, &site) in keep.iter().enumerate() {
                if kept_bits >> pos & 1 == 1 {
                    full |= 1 << site;
                }
            }
            for (pos, &site) in traced.iter().enumerate() {
                if traced_bits >> pos & 1 == 1 {
                    full |= 1 << site;
                }
            }
            full
        };
        for row in 0..dim_keep {
            for col in 0..dim_keep {
                let mut acc = C64::ZERO;
                for t in 0..dim_traced {
                    acc += self.rho[(expand(row, t), expand(col, t))];
                }
                out[(row, col)] = acc;
            }
        }
        out
    }

    /// Relative entropy of coherence in a local Pauli basis:
    /// `S(diag(V rho V^dagger)) - S(rho)` where `V` rotates each site's
    /// basis operator onto Z.
    pub fn coherence(&self, basis: &LocalPauliBasis) -> f64 {
        let h = Matrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(-1.0, 0.0),
            ],
        ) / C64::new(std::f64::consts::SQRT_2, 0.0);
        let s_dagger = Matrix::from_row_slice(
            2,
            2,
            &[C64::new(1.0, 0.0), C64::ZERO, C64::ZERO, C64::new(0.0, -1.0)],
        );
        let mut v = Matrix::identity(1, 1);
        for site in 0..self.n {
            let factor = match basis.axis_at(site) {
                Axis::Z => Matrix::identity(2, 2),
                Axis::X => h.clone(),
                // V Y V^dagger = Z for V = H S^dagger.
                Axis::Y => &h * &s_dagger,
            };
            v = factor.kronecker(&v);
        }
        let rotated = &v * &self.rho * v.adjoint();
        let diag_entropy: f64 = (0..rotated.nrows())
            .map(|i| {
                let p = rotated[(i, i)].re;
                if p > 1e-12 {
                    -p * p.log2()
                } else {
                    0.0
                }
            })
            .sum();
        diag_entropy - self.entropy()
    }

    pub fn max_difference(&self, other: &Matrix) -> f64 {
        (&self.rho - other).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

fn shannon(rho: &Matrix) -> f64 {
    // Hermitian eigenvalues are real.
    let eigenvalues = rho.clone().symmetric_eigen().eigenvalues;
    eigenvalues
        .iter()
        .map(|&p| if p > 1e-12 { -p * p.log2() } else { 0.0 })
        .sum()
}
