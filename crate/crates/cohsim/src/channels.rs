//! Composite error and encoding channels built from stabilizer primitives:
//! the bit-eraser variants and the system+ancilla register initializers used
//! by purification experiments.
//!
//! Register layout: system sites occupy `0..L`, ancilla sites `L..L+|A|`.
//! Ancilla `j` is paired with system site `j`. Circuit dynamics never touch
//! the ancillas.

use rand::Rng;

use crate::pauli::{Axis, PauliString};
use crate::stab::{MeasurePolicy, StabError, StabilizerTableau};

/// The three bit-eraser implementations. All reset the target qubit to the
/// +X eigenstate; they differ in what happens to the rest of the state.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize, Default,
)]
#[serde(rename_all = "snake_case")]
pub enum EraserKind {
    /// Measure Z first, then X, then flip: erases the bit while preserving
    /// the coherence carried by the erased qubit's branches.
    #[default]
    CoherenceMaintaining,
    /// Measure X directly (recording the outcome), then flip: learns the bit
    /// and destroys the coherence between its branches.
    CoherenceDestroying,
    /// Measure X and forget the outcome, then re-project onto x = 0: the
    /// Kraus pair |0><0|, |0><1| on the erased site.
    Forgotten,
}

/// The recorded outcomes of one eraser application; both fields are `None`
/// for the forgotten variant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EraserRecord {
    pub z_outcome: Option<bool>,
    pub x_outcome: Option<bool>,
}

/// Apply a bit eraser at `site`.
///
/// Measurement outcomes are recorded, never postselected: for Clifford
/// dynamics the entropies and coherences tracked here do not depend on the
/// outcome, and recording keeps sweeps total. The "flip X if x = 1" step is
/// conjugation by Z, the minimal Clifford that exchanges the X eigenstates.
pub fn apply_eraser<R: Rng + ?Sized>(
    state: &mut StabilizerTableau,
    site: usize,
    kind: EraserKind,
    rng: &mut R,
) -> Result<EraserRecord, StabError> {
    if site >= state.len() {
        return Err(StabError::SiteOutOfRange { site, len: state.len() });
    }
    let x_op = PauliString::single(state.len(), site, Axis::X);
    let mut record = EraserRecord::default();
    match kind {
        EraserKind::CoherenceMaintaining => {
            let z_op = PauliString::single(state.len(), site, Axis::Z);
            record.z_outcome = Some(state.measure(&z_op, MeasurePolicy::Random, rng)?.outcome);
            let rec = state.measure(&x_op, MeasurePolicy::Random, rng)?;
            record.x_outcome = Some(rec.outcome);
            if rec.outcome {
                state.apply_z_conjugation(site);
            }
        }
        EraserKind::CoherenceDestroying => {
            let rec = state.measure(&x_op, MeasurePolicy::Random, rng)?;
            record.x_outcome = Some(rec.outcome);
            if rec.outcome {
                state.apply_z_conjugation(site);
            }
        }
        EraserKind::Forgotten => {
            // The Kraus pair |0><0|, |0><1| replaces the site with the +X
            // eigenstate and traces it out of the rest: forget the X_i
            // branch, forget the would-be flip record (everything carrying
            // an X or Y at the site), then re-project onto x_i = 0.
            let z_op = PauliString::single(state.len(), site, Axis::Z);
            state.dephase(&x_op)?;
            state.dephase(&z_op)?;
            state.measure(&x_op, MeasurePolicy::ForcedRecord(false), rng)?;
        }
    }
    Ok(record)
}

/// Classically correlated system+ancilla register: each ancilla is paired
/// with a system site by an XX parity check and every other system site is
/// +X polarized.
///
/// The joint state has `S(rho_S) = S(rho_A) = S(rho_SA) = |A|` and no X
/// coherence.
pub fn init_classical_register(system_len: usize, ancilla_count: usize) -> StabilizerTableau {
    assert!(
        ancilla_count <= system_len,
        "ancilla count {ancilla_count} exceeds system size {system_len}"
    );
    let total = system_len + ancilla_count;
    let mut gens = Vec::with_capacity(system_len);
    for j in 0..ancilla_count {
        let mut g = PauliString::single(total, j, Axis::X);
        g.set_site(system_len + j, Some(Axis::X));
        gens.push(g);
    }
    for k in ancilla_count..system_len {
        gens.push(PauliString::single(total, k, Axis::X));
    }
    StabilizerTableau::from_generators(total, gens).expect("valid register")
}

/// Bell-pair encoded register: ancilla `j` and system site `j` share a Bell
/// pair (XX and ZZ generators) and every other system site is +X polarized.
///
/// The joint state is pure with `C_x = |A|`; the ancilla remembers the
/// initial quantum state of the first `|A|` system sites.
pub fn init_quantum_register(system_len: usize, ancilla_count: usize) -> StabilizerTableau {
    assert!(
        ancilla_count <= system_len,
        "ancilla count {ancilla_count} exceeds system size {system_len}"
    );
    let total = system_len + ancilla_count;
    let mut gens = Vec::with_capacity(total);
    for j in 0..ancilla_count {
        let mut xx = PauliString::single(total, j, Axis::X);
        xx.set_site(system_len + j, Some(Axis::X));
        gens.push(xx);
        let mut zz = PauliString::single(total, j, Axis::Z);
        zz.set_site(system_len + j, Some(Axis::Z));
        gens.push(zz);
    }
    for k in ancilla_count..system_len {
        gens.push(PauliString::single(total, k, Axis::X));
    }
    StabilizerTableau::from_generators(total, gens).expect("valid register")
}
