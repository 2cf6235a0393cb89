//! Stabilizer-circuit laboratory for coherence-limited hybrid dynamics.
//!
//! The crate simulates random hybrid circuits (CNOTs, single-site Pauli
//! measurements, phase gates, bit erasers) on mixed stabilizer states and
//! tracks information quantifiers: subsystem entanglement entropies, relative
//! entropy of coherence in any local Pauli basis, coherent information between
//! a system and a static ancilla register, and the classical mutual
//! information of the coherence-free sector.
//!
//! Organization:
//! - [`f2`]: bit-packed linear algebra over GF(2) — the substrate for
//!   tableaux, gauges, ranks, and classical affine-map shadows.
//! - [`pauli`]: signed Pauli strings with symplectic commutation and exact
//!   conjugation by CNOT and phase gates.
//! - [`stab`]: mixed stabilizer tableaux with measurement/gate/dephasing
//!   updates, subsystem entropy, the CSS gauge, and coherence.
//! - [`channels`]: bit-eraser variants and system+ancilla register
//!   initializers for purification experiments.
//! - [`circuit`]: the stochastic circuit engine, probe collection, seeded
//!   ensembles, and the classical affine-map shadow of coherence-free runs.
//! - [`markov`]: the measurement-driven random walk in the information known
//!   about the X and Z bases, its rate-equation integrators, and the
//!   finite-correlation-length steady-state solver.
//! - [`codes`]: stabilizer error-correction codes, brute-force distance, and
//!   the coherence bounds on code distance.

pub mod channels;
pub mod circuit;
pub mod codes;
pub mod collapse;
pub mod f2;
pub mod markov;
pub mod pauli;
pub mod stab;

pub use pauli::{Axis, Gate, LocalPauliBasis, PauliString};
pub use stab::StabilizerTableau;
