//! The random hybrid circuit engine.
//!
//! Each step independently samples, in fixed order, a CNOT (probability
//! `p_u`), a single-site Pauli measurement (`p_m`, axis per `p_x/p_y/p_z`),
//! a phase gate (`p_r`), and a bit eraser (`p_e`), all on uniformly random
//! system sites. Time is measured in units of `L` steps: `t = n / L`.
//!
//! Event sampling and measurement outcomes draw from two separate seeded
//! streams, so a coherence-free run can be replayed bit-identically as a
//! classical affine map over X-basis bit strings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channels::{apply_eraser, init_classical_register, init_quantum_register, EraserKind};
use crate::f2::AffineMapF2;
use crate::pauli::{Axis, Gate, LocalPauliBasis, PauliString};
use crate::stab::{MeasurePolicy, StabError, StabilizerTableau};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("schedule samples step {step} beyond duration {steps}")]
    ScheduleBeyondDuration { step: u64, steps: u64 },
    #[error("probe {0} requires a coherence-free circuit (p_m = p_r = 0)")]
    ShadowNeedsCoherenceFree(&'static str),
    #[error(
        "entanglement bound violated at step {step}: S(region [{start}, {end})) = {entropy} \
         exceeds min coherence {bound}"
    )]
    BoundViolation { step: u64, start: usize, end: usize, entropy: usize, bound: usize },
    #[error(transparent)]
    Stab(#[from] StabError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Periodic,
    Open,
}

/// Initial state of the system register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitState {
    /// Pure product state: `n_x` sites +X polarized, then `n_z` sites +Z,
    /// then `n_y` sites +Y. Counts must sum to the system size.
    PureProduct { n_x: usize, n_z: usize, n_y: usize },
    /// Classically correlated system+ancilla register (XX parity pairs).
    ClassicalRegister,
    /// Bell-pair encoded system+ancilla register.
    QuantumRegister,
}

impl Default for InitState {
    fn default() -> Self {
        InitState::PureProduct { n_x: 0, n_z: 0, n_y: 0 }
    }
}

/// Full parameterization of a circuit run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitConfig {
    /// Number of system qubits L.
    pub system_len: usize,
    /// Ancilla register size; only used by the register initial states.
    #[serde(default)]
    pub ancilla_count: usize,
    /// Per-step CNOT probability.
    pub p_u: f64,
    /// Per-step measurement probability.
    #[serde(default)]
    pub p_m: f64,
    /// Per-step phase-gate probability.
    #[serde(default)]
    pub p_r: f64,
    /// Per-step eraser probability.
    #[serde(default)]
    pub p_e: f64,
    /// Conditional probability of measuring X, given a measurement occurs.
    #[serde(default)]
    pub p_x: f64,
    /// Conditional probability of measuring Y.
    #[serde(default)]
    pub p_y: f64,
    /// Conditional probability of measuring Z.
    #[serde(default)]
    pub p_z: f64,
    /// Number of main-phase steps; `t = steps / L`.
    pub steps: u64,
    /// CNOT-only scrambling steps applied before the main phase.
    #[serde(default)]
    pub warmup_steps: u64,
    #[serde(default)]
    pub boundary: Boundary,
    pub seed: u64,
    #[serde(default)]
    pub eraser: EraserKind,
    pub init: InitState,
}

impl CircuitConfig {
    /// Measurement-axis imbalance `(p_x - p_z) / (1 - p_y)`.
    pub fn delta_x(&self) -> f64 {
        (self.p_x - self.p_z) / (1.0 - self.p_y)
    }

    /// Set the measurement axes from `(delta_x, p_y)` instead of
    /// `(p_x, p_z)`.
    pub fn set_delta_x(&mut self, delta_x: f64, p_y: f64) {
        self.p_y = p_y;
        self.p_x = (1.0 + delta_x) * (1.0 - p_y) / 2.0;
        self.p_z = (1.0 - delta_x) * (1.0 - p_y) / 2.0;
    }

    /// Duration in units of L steps.
    pub fn time(&self) -> f64 {
        self.steps as f64 / self.system_len as f64
    }

    pub fn steps_for_time(system_len: usize, t: f64) -> u64 {
        (t * system_len as f64).round() as u64
    }

    fn total_sites(&self) -> usize {
        match self.init {
            InitState::PureProduct { .. } => self.system_len,
            InitState::ClassicalRegister | InitState::QuantumRegister => {
                self.system_len + self.ancilla_count
            }
        }
    }

    /// Whether the event set can generate coherence in the X basis beyond
    /// what erasers and CNOTs do; the classical shadow exists iff not.
    pub fn is_coherence_free(&self) -> bool {
        self.p_m == 0.0 && self.p_r == 0.0
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let err = |msg: String| Err(RunError::Config(msg));
        if self.system_len == 0 {
            return err("system size must be positive".into());
        }
        for (name, p) in [
            ("p_u", self.p_u),
            ("p_m", self.p_m),
            ("p_r", self.p_r),
            ("p_e", self.p_e),
            ("p_x", self.p_x),
            ("p_y", self.p_y),
            ("p_z", self.p_z),
        ] {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return err(format!("{name} = {p} is not a probability"));
            }
        }
        if self.p_m > 0.0 {
            let total = self.p_x + self.p_y + self.p_z;
            if (total - 1.0).abs() > 1e-9 {
                return err(format!("p_x + p_y + p_z = {total}, expected 1"));
            }
        }
        if self.p_u > 0.0 && self.system_len < 2 {
            return err("CNOTs need at least two system sites".into());
        }
        match self.init {
            InitState::PureProduct { n_x, n_z, n_y } => {
                if n_x + n_z + n_y != self.system_len {
                    return err(format!(
                        "product init counts {n_x}+{n_z}+{n_y} do not sum to L = {}",
                        self.system_len
                    ));
                }
            }
            InitState::ClassicalRegister | InitState::QuantumRegister => {
                if self.ancilla_count > self.system_len {
                    return err(format!(
                        "ancilla count {} exceeds system size {}",
                        self.ancilla_count, self.system_len
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn initial_state(&self) -> StabilizerTableau {
        match self.init {
            InitState::PureProduct { n_x, n_z, n_y } => {
                let mut polarizations = Vec::with_capacity(self.system_len);
                polarizations.extend(std::iter::repeat((Axis::X, false)).take(n_x));
                polarizations.extend(std::iter::repeat((Axis::Z, false)).take(n_z));
                polarizations.extend(std::iter::repeat((Axis::Y, false)).take(n_y));
                StabilizerTableau::product(&polarizations)
            }
            InitState::ClassicalRegister => {
                init_classical_register(self.system_len, self.ancilla_count)
            }
            InitState::QuantumRegister => {
                init_quantum_register(self.system_len, self.ancilla_count)
            }
        }
    }

    fn system_sites(&self) -> Vec<usize> {
        (0..self.system_len).collect()
    }

    fn ancilla_sites(&self) -> Vec<usize> {
        (self.system_len..self.total_sites()).collect()
    }
}

/// The events of one circuit step, in their fixed application order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepEvents {
    pub cnot: Option<(usize, usize)>,
    pub measure: Option<(usize, Axis)>,
    pub phase: Option<usize>,
    pub erase: Option<usize>,
}

fn neighbor(site: usize, toward_right: bool, len: usize, boundary: Boundary) -> usize {
    match boundary {
        Boundary::Periodic => {
            if toward_right {
                (site + 1) % len
            } else {
                (site + len - 1) % len
            }
        }
        Boundary::Open => {
            // At an open edge the inward neighbor is the only choice.
            if site == 0 {
                1
            } else if site == len - 1 {
                len - 2
            } else if toward_right {
                site + 1
            } else {
                site - 1
            }
        }
    }
}

fn sample_cnot<R: Rng + ?Sized>(cfg: &CircuitConfig, rng: &mut R) -> (usize, usize) {
    let control = rng.gen_range(0..cfg.system_len);
    let toward_right = rng.gen::<bool>();
    let target = neighbor(control, toward_right, cfg.system_len, cfg.boundary);
    (control, target)
}

/// Sample one step's events. Events are independent: a single step may hold
/// a CNOT, a measurement, a phase gate, and an eraser.
pub fn sample_step<R: Rng + ?Sized>(cfg: &CircuitConfig, rng: &mut R) -> StepEvents {
    let mut events = StepEvents::default();
    if cfg.p_u > 0.0 && rng.gen_bool(cfg.p_u) {
        events.cnot = Some(sample_cnot(cfg, rng));
    }
    if cfg.p_m > 0.0 && rng.gen_bool(cfg.p_m) {
        let u: f64 = rng.gen();
        let axis = if u < cfg.p_x {
            Axis::X
        } else if u < cfg.p_x + cfg.p_y {
            Axis::Y
        } else {
            Axis::Z
        };
        events.measure = Some((rng.gen_range(0..cfg.system_len), axis));
    }
    if cfg.p_r > 0.0 && rng.gen_bool(cfg.p_r) {
        events.phase = Some(rng.gen_range(0..cfg.system_len));
    }
    if cfg.p_e > 0.0 && rng.gen_bool(cfg.p_e) {
        events.erase = Some(rng.gen_range(0..cfg.system_len));
    }
    events
}

fn apply_events<R: Rng + ?Sized>(
    state: &mut StabilizerTableau,
    events: &StepEvents,
    eraser: EraserKind,
    outcome_rng: &mut R,
) -> Result<(), StabError> {
    if let Some((control, target)) = events.cnot {
        state.apply_gate(Gate::Cnot { control, target })?;
    }
    if let Some((site, axis)) = events.measure {
        let op = PauliString::single(state.len(), site, axis);
        state.measure(&op, MeasurePolicy::Random, outcome_rng)?;
    }
    if let Some(site) = events.phase {
        state.apply_gate(Gate::Phase { site })?;
    }
    if let Some(site) = events.erase {
        apply_eraser(state, site, eraser, outcome_rng)?;
    }
    Ok(())
}

fn apply_events_shadow(map: &mut AffineMapF2, events: &StepEvents) {
    // CNOT controlling c on target t maps X-basis strings by x_c ^= x_t;
    // every eraser variant resets the classical bit to zero.
    if let Some((control, target)) = events.cnot {
        map.add_bit_into(target, control);
    }
    if let Some(site) = events.erase {
        map.erase_bit(site);
    }
}

/// Master-seed to per-realization RNG streams: one for the event sequence,
/// one for measurement outcomes. Keeping them separate lets the classical
/// shadow replay the event stream without consuming outcome draws.
pub fn child_rngs(seed: u64, realization: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut event_rng = ChaCha8Rng::seed_from_u64(seed);
    event_rng.set_stream(2 * realization);
    let mut outcome_rng = ChaCha8Rng::seed_from_u64(seed);
    outcome_rng.set_stream(2 * realization + 1);
    (event_rng, outcome_rng)
}

/// Information quantifiers that can be sampled during a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Probe {
    /// Entanglement entropy of every prefix cut `[0, x)`; one record per x.
    EntropyProfile,
    /// Entanglement entropy of the left half of the system.
    HalfCut,
    /// Relative entropy of coherence of the full state in the uniform X basis.
    CoherenceX,
    /// Same, Z basis.
    CoherenceZ,
    /// Antipodal mutual information of system quarters R1 and R3.
    I2,
    /// Tripartite mutual information `4 S(R1) - 2 S(R1 ∪ R2) - S(R1 ∪ R3)`.
    I3,
    /// Coherent information between system and ancilla.
    CoherentInfo,
    /// Entropy of the system marginal.
    SystemEntropy,
    /// Classical mutual information of the affine shadow map, i.e. the rank
    /// of its register-correlated input columns. Coherence-free runs only.
    ClassicalMutualInfo,
}

impl Probe {
    pub fn label(self) -> &'static str {
        match self {
            Probe::EntropyProfile => "S_profile",
            Probe::HalfCut => "S_half",
            Probe::CoherenceX => "C_x",
            Probe::CoherenceZ => "C_z",
            Probe::I2 => "I2",
            Probe::I3 => "I3",
            Probe::CoherentInfo => "coherent_info",
            Probe::SystemEntropy => "S_system",
            Probe::ClassicalMutualInfo => "I_x",
        }
    }
}

/// Which steps to sample and what to compute there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSchedule {
    /// Step indices (0 = initial state), sorted and deduplicated.
    pub times: Vec<u64>,
    pub probes: Vec<Probe>,
    /// Assert `S(region) <= min(C_x, C_z)` over a deterministic family of
    /// contiguous regions at every probe time where the state is pure.
    #[serde(default)]
    pub check_entanglement_bound: bool,
}

impl ProbeSchedule {
    pub fn new(mut times: Vec<u64>, probes: Vec<Probe>) -> Self {
        times.sort_unstable();
        times.dedup();
        Self { times, probes, check_entanglement_bound: false }
    }

    /// Schedule at times given in units of L steps.
    pub fn at_times(system_len: usize, ts: &[f64], probes: Vec<Probe>) -> Self {
        let times = ts
            .iter()
            .map(|&t| CircuitConfig::steps_for_time(system_len, t))
            .collect();
        Self::new(times, probes)
    }

    /// Sample only the final state.
    pub fn final_only(cfg: &CircuitConfig, probes: Vec<Probe>) -> Self {
        Self::new(vec![cfg.steps], probes)
    }

    fn validate(&self, cfg: &CircuitConfig) -> Result<(), RunError> {
        if let Some(&step) = self.times.iter().find(|&&s| s > cfg.steps) {
            return Err(RunError::ScheduleBeyondDuration { step, steps: cfg.steps });
        }
        if self.probes.contains(&Probe::ClassicalMutualInfo) && !cfg.is_coherence_free() {
            return Err(RunError::ShadowNeedsCoherenceFree("I_x"));
        }
        if (self.probes.contains(&Probe::I2) || self.probes.contains(&Probe::I3))
            && cfg.system_len % 4 != 0
        {
            return Err(RunError::Config(format!(
                "I2/I3 quarters need L divisible by 4, got {}",
                cfg.system_len
            )));
        }
        Ok(())
    }
}

/// One sampled value. `index` is the cut position for profile records and
/// unused otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub probe: Probe,
    pub step: u64,
    pub t: f64,
    pub index: Option<usize>,
    pub value: f64,
}

/// Per-realization output: the sampled series plus enough echo to reproduce
/// the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: CircuitConfig,
    pub realization: u64,
    pub records: Vec<ProbeRecord>,
}

/// Aggregated ensemble statistics for one probe at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRecord {
    pub probe: Probe,
    pub step: u64,
    pub t: f64,
    pub index: Option<usize>,
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub config: CircuitConfig,
    pub realizations: u64,
    pub records: Vec<EnsembleRecord>,
}

struct Runner<'a> {
    cfg: &'a CircuitConfig,
    schedule: &'a ProbeSchedule,
    state: StabilizerTableau,
    shadow: Option<AffineMapF2>,
    records: Vec<ProbeRecord>,
    x_basis: LocalPauliBasis,
    z_basis: LocalPauliBasis,
}

impl<'a> Runner<'a> {
    fn new(cfg: &'a CircuitConfig, schedule: &'a ProbeSchedule) -> Self {
        let total = cfg.total_sites();
        let needs_shadow = schedule.probes.contains(&Probe::ClassicalMutualInfo);
        Self {
            cfg,
            schedule,
            state: cfg.initial_state(),
            shadow: needs_shadow.then(|| AffineMapF2::identity(cfg.system_len)),
            records: Vec::new(),
            x_basis: LocalPauliBasis::uniform(Axis::X, total),
            z_basis: LocalPauliBasis::uniform(Axis::Z, total),
        }
    }

    fn quarter(&self, n: usize) -> Vec<usize> {
        let q = self.cfg.system_len / 4;
        ((n - 1) * q..n * q).collect()
    }

    fn sample(&mut self, step: u64) -> Result<(), RunError> {
        let t = step as f64 / self.cfg.system_len as f64;
        let mut new_records: Vec<ProbeRecord> = Vec::new();
        let mut push = |probe, index, value: f64| {
            new_records.push(ProbeRecord { probe, step, t, index, value });
        };
        let state = &self.state;
        let cfg = self.cfg;
        for &probe in &self.schedule.probes {
            match probe {
                Probe::EntropyProfile => {
                    for (x, s) in state.prefix_entropies(cfg.system_len).into_iter().enumerate() {
                        push(probe, Some(x), s as f64);
                    }
                }
                Probe::HalfCut => {
                    let region: Vec<usize> = (0..cfg.system_len / 2).collect();
                    push(probe, None, state.subsystem_entropy(&region)? as f64);
                }
                Probe::CoherenceX => push(probe, None, state.coherence(&self.x_basis) as f64),
                Probe::CoherenceZ => push(probe, None, state.coherence(&self.z_basis) as f64),
                Probe::I2 => {
                    let r1 = self.quarter(1);
                    let r3 = self.quarter(3);
                    let r13: Vec<usize> = r1.iter().chain(&r3).copied().collect();
                    let value = state.subsystem_entropy(&r1)? as f64
                        + state.subsystem_entropy(&r3)? as f64
                        - state.subsystem_entropy(&r13)? as f64;
                    push(probe, None, value);
                }
                Probe::I3 => {
                    let r1 = self.quarter(1);
                    let r12: Vec<usize> = (0..cfg.system_len / 2).collect();
                    let r13: Vec<usize> =
                        r1.iter().chain(&self.quarter(3)).copied().collect();
                    let value = 4.0 * state.subsystem_entropy(&r1)? as f64
                        - 2.0 * state.subsystem_entropy(&r12)? as f64
                        - state.subsystem_entropy(&r13)? as f64;
                    push(probe, None, value);
                }
                Probe::CoherentInfo => {
                    let value = state
                        .coherent_information(&cfg.system_sites(), &cfg.ancilla_sites())?;
                    push(probe, None, value as f64);
                }
                Probe::SystemEntropy => {
                    push(probe, None, state.subsystem_entropy(&cfg.system_sites())? as f64);
                }
                Probe::ClassicalMutualInfo => {
                    let shadow = self.shadow.as_ref().expect("shadow maintained");
                    let inputs: Vec<usize> = match cfg.init {
                        InitState::ClassicalRegister | InitState::QuantumRegister => {
                            (0..cfg.ancilla_count).collect()
                        }
                        InitState::PureProduct { .. } => (0..cfg.system_len).collect(),
                    };
                    push(probe, None, shadow.image_entropy_on(&inputs) as f64);
                }
            }
        }
        drop(push);
        self.records.extend(new_records);
        if self.schedule.check_entanglement_bound && self.state.is_pure() {
            self.check_bound(step)?;
        }
        Ok(())
    }

    /// Theorem-style entanglement bound: every contiguous region's entropy is
    /// at most min(C_x, C_z). Checked on all prefixes plus a deterministic
    /// grid of interior windows.
    fn check_bound(&self, step: u64) -> Result<(), RunError> {
        let len = self.cfg.total_sites();
        let bound = self
            .state
            .coherence(&self.x_basis)
            .min(self.state.coherence(&self.z_basis));
        let mut regions: Vec<(usize, usize)> = (1..=len).map(|x| (0, x)).collect();
        let stride = (len / 8).max(1);
        for start in (stride..len).step_by(stride) {
            for width in [stride, 2 * stride, 4 * stride] {
                if start + width <= len {
                    regions.push((start, start + width));
                }
            }
        }
        for (start, end) in regions {
            let region: Vec<usize> = (start..end).collect();
            let entropy = self.state.subsystem_entropy(&region)?;
            if entropy > bound {
                return Err(RunError::BoundViolation { step, start, end, entropy, bound });
            }
        }
        Ok(())
    }
}

/// Evolve one realization and sample the scheduled probes.
///
/// Equivalent to `run_realization(cfg, schedule, 0)`.
pub fn run(cfg: &CircuitConfig, schedule: &ProbeSchedule) -> Result<RunResult, RunError> {
    run_realization(cfg, schedule, 0)
}

/// Evolve the realization with the given index under the config's master
/// seed. Fixed (seed, realization) pairs replay bit-identically.
pub fn run_realization(
    cfg: &CircuitConfig,
    schedule: &ProbeSchedule,
    realization: u64,
) -> Result<RunResult, RunError> {
    cfg.validate()?;
    schedule.validate(cfg)?;
    let (mut event_rng, mut outcome_rng) = child_rngs(cfg.seed, realization);
    let mut runner = Runner::new(cfg, schedule);

    for _ in 0..cfg.warmup_steps {
        let cnot = sample_cnot(cfg, &mut event_rng);
        let events = StepEvents { cnot: Some(cnot), ..StepEvents::default() };
        apply_events(&mut runner.state, &events, cfg.eraser, &mut outcome_rng)?;
        if let Some(shadow) = runner.shadow.as_mut() {
            apply_events_shadow(shadow, &events);
        }
    }
    let mut next_sample = 0usize;
    if runner.schedule.times.first() == Some(&0) {
        runner.sample(0)?;
        next_sample = 1;
    }
    for step in 1..=cfg.steps {
        let events = sample_step(cfg, &mut event_rng);
        apply_events(&mut runner.state, &events, cfg.eraser, &mut outcome_rng)?;
        if let Some(shadow) = runner.shadow.as_mut() {
            apply_events_shadow(shadow, &events);
        }
        if runner.schedule.times.get(next_sample) == Some(&step) {
            runner.sample(step)?;
            next_sample += 1;
        }
    }
    Ok(RunResult { config: cfg.clone(), realization, records: runner.records })
}

/// Replay the identical event stream of a realization as an affine map on
/// X-basis bit strings. Valid only for coherence-free configs.
pub fn classical_shadow_run(cfg: &CircuitConfig, realization: u64) -> Result<AffineMapF2, RunError> {
    cfg.validate()?;
    if !cfg.is_coherence_free() {
        return Err(RunError::ShadowNeedsCoherenceFree("classical shadow"));
    }
    let (mut event_rng, _) = child_rngs(cfg.seed, realization);
    let mut map = AffineMapF2::identity(cfg.system_len);
    for _ in 0..cfg.warmup_steps {
        let cnot = sample_cnot(cfg, &mut event_rng);
        apply_events_shadow(&mut map, &StepEvents { cnot: Some(cnot), ..StepEvents::default() });
    }
    for _ in 1..=cfg.steps {
        let events = sample_step(cfg, &mut event_rng);
        apply_events_shadow(&mut map, &events);
    }
    Ok(map)
}

/// Fan a config out over independent realizations and aggregate each probe
/// into mean and standard error. Aggregation order is deterministic.
pub fn run_ensemble(
    cfg: &CircuitConfig,
    schedule: &ProbeSchedule,
    realizations: u64,
    workers: Option<usize>,
) -> Result<EnsembleResult, RunError> {
    assert!(realizations >= 1, "need at least one realization");
    let run_all = || {
        (0..realizations)
            .into_par_iter()
            .map(|r| run_realization(cfg, schedule, r))
            .collect::<Result<Vec<_>, _>>()
    };
    let results = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| RunError::Config(format!("worker pool: {e}")))?
            .install(run_all),
        None => run_all(),
    }?;

    // Every realization produces the same record skeleton; accumulate in
    // the order of the first one.
    let skeleton = &results[0].records;
    let mut sums = vec![0.0f64; skeleton.len()];
    let mut sq_sums = vec![0.0f64; skeleton.len()];
    for result in &results {
        assert_eq!(result.records.len(), skeleton.len(), "ragged probe series");
        for (i, rec) in result.records.iter().enumerate() {
            sums[i] += rec.value;
            sq_sums[i] += rec.value * rec.value;
        }
    }
    let n = realizations as f64;
    let records = skeleton
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let mean = sums[i] / n;
            let variance = if realizations > 1 {
                ((sq_sums[i] - n * mean * mean) / (n - 1.0)).max(0.0)
            } else {
                0.0
            };
            EnsembleRecord {
                probe: rec.probe,
                step: rec.step,
                t: rec.t,
                index: rec.index,
                mean,
                stderr: (variance / n).sqrt(),
                n: realizations as usize,
            }
        })
        .collect();
    Ok(EnsembleResult { config: cfg.clone(), realizations, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cnot_only(len: usize, n_z: usize, steps: u64, seed: u64) -> CircuitConfig {
        CircuitConfig {
            system_len: len,
            ancilla_count: 0,
            p_u: 1.0,
            p_m: 0.0,
            p_r: 0.0,
            p_e: 0.0,
            p_x: 0.0,
            p_y: 0.0,
            p_z: 0.0,
            steps,
            warmup_steps: 0,
            boundary: Boundary::Periodic,
            seed,
            eraser: EraserKind::CoherenceMaintaining,
            init: InitState::PureProduct { n_x: len - n_z, n_z, n_y: 0 },
        }
    }

    #[test]
    fn cnot_only_conserves_coherences() {
        let cfg = cnot_only(12, 5, 240, 42);
        let schedule = ProbeSchedule::at_times(
            12,
            &[0.0, 5.0, 10.0, 20.0],
            vec![Probe::CoherenceX, Probe::CoherenceZ],
        );
        let result = run(&cfg, &schedule).unwrap();
        for rec in &result.records {
            let expected = match rec.probe {
                Probe::CoherenceX => 5.0,
                Probe::CoherenceZ => 7.0,
                _ => unreachable!(),
            };
            assert_eq!(rec.value, expected, "at t = {}", rec.t);
        }
    }

    #[test]
    fn measurement_only_stays_product() {
        let cfg = CircuitConfig {
            p_u: 0.0,
            p_m: 1.0,
            p_x: 0.4,
            p_y: 0.3,
            p_z: 0.3,
            steps: 400,
            ..cnot_only(10, 0, 0, 7)
        };
        cfg.validate().unwrap();
        let (mut event_rng, mut outcome_rng) = child_rngs(cfg.seed, 0);
        let mut state = cfg.initial_state();
        for _ in 0..cfg.steps {
            let events = sample_step(&cfg, &mut event_rng);
            apply_events(&mut state, &events, cfg.eraser, &mut outcome_rng).unwrap();
            assert!(state.generators().iter().all(|g| g.weight() == 1));
        }
    }

    #[test]
    fn seeded_runs_replay_bit_identically() {
        let cfg = CircuitConfig {
            p_m: 0.1,
            p_x: 0.5,
            p_y: 0.25,
            p_z: 0.25,
            p_r: 0.05,
            p_e: 0.02,
            ..cnot_only(16, 4, 320, 1234)
        };
        let schedule = ProbeSchedule::at_times(
            16,
            &[1.0, 10.0, 20.0],
            vec![Probe::EntropyProfile, Probe::CoherenceX, Probe::HalfCut],
        );
        let a = run(&cfg, &schedule).unwrap();
        let b = run(&cfg, &schedule).unwrap();
        assert_eq!(a, b);
        let c = run_realization(&cfg, &schedule, 3).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn cnot_only_plateau_matches_coherence_bound() {
        // L = 16, C_x = 4: late-time mean S(x) fills the Page-like plateau
        // min(x, L - x, 4). The bound is never exceeded; away from the
        // plateau corners it is saturated tightly, while cuts at |x| = C_x
        // keep the O(1) rounding of a random GF(2) subspace (the expected
        // corank of a random square bit matrix, about 0.85).
        let cfg = cnot_only(16, 4, 16 * 200, 99);
        let schedule = ProbeSchedule::final_only(&cfg, vec![Probe::EntropyProfile]);
        let ensemble = run_ensemble(&cfg, &schedule, 60, None).unwrap();
        for rec in &ensemble.records {
            let x = rec.index.unwrap();
            let expected = (x as f64).min(16.0 - x as f64).min(4.0);
            assert!(rec.mean <= expected + 1e-12);
            let corner = x.min(16 - x) == 4;
            let tolerance = if corner { 1.3 } else { 0.5 };
            assert!(
                expected - rec.mean <= tolerance,
                "mean S({x}) = {} sits below plateau {expected}",
                rec.mean
            );
        }
    }

    #[test]
    fn ensemble_of_one_matches_run() {
        let cfg = CircuitConfig { p_m: 0.2, p_x: 1.0, ..cnot_only(8, 2, 80, 5) };
        let schedule =
            ProbeSchedule::at_times(8, &[5.0, 10.0], vec![Probe::CoherenceX, Probe::HalfCut]);
        let single = run(&cfg, &schedule).unwrap();
        let ensemble = run_ensemble(&cfg, &schedule, 1, None).unwrap();
        for (rec, agg) in single.records.iter().zip(&ensemble.records) {
            assert_eq!(rec.value, agg.mean);
            assert_eq!(agg.stderr, 0.0);
            assert_eq!(agg.n, 1);
        }
    }

    #[test]
    fn ensemble_mean_of_deterministic_probe_is_exact() {
        let cfg = cnot_only(12, 3, 120, 77);
        let schedule = ProbeSchedule::final_only(&cfg, vec![Probe::CoherenceX]);
        let ensemble = run_ensemble(&cfg, &schedule, 16, Some(2)).unwrap();
        assert_eq!(ensemble.records.len(), 1);
        assert_eq!(ensemble.records[0].mean, 3.0);
        assert_eq!(ensemble.records[0].stderr, 0.0);
    }

    #[test]
    fn shadow_requires_coherence_free_config() {
        let cfg = CircuitConfig { p_m: 0.5, p_x: 1.0, ..cnot_only(8, 0, 10, 3) };
        assert!(matches!(
            classical_shadow_run(&cfg, 0),
            Err(RunError::ShadowNeedsCoherenceFree(_))
        ));
        let schedule =
            ProbeSchedule::final_only(&cfg, vec![Probe::ClassicalMutualInfo]);
        assert!(matches!(
            run(&cfg, &schedule),
            Err(RunError::ShadowNeedsCoherenceFree(_))
        ));
    }

    #[test]
    fn cnot_only_shadow_has_full_rank() {
        let cfg = cnot_only(24, 0, 24 * 10, 11);
        let map = classical_shadow_run(&cfg, 0).unwrap();
        assert_eq!(map.image_entropy(), 24);
    }

    #[test]
    fn shadow_rank_matches_purification_entropy() {
        // Paired-seed comparison in the coherence-free sector: the tableau's
        // system entropy with a classical register equals the rank of the
        // shadow's register columns, realization by realization.
        for seed in 0..8 {
            let cfg = CircuitConfig {
                p_e: 0.05,
                ancilla_count: 8,
                init: InitState::ClassicalRegister,
                ..cnot_only(16, 0, 16 * 20, seed)
            };
            let schedule = ProbeSchedule::final_only(
                &cfg,
                vec![Probe::SystemEntropy, Probe::ClassicalMutualInfo],
            );
            let result = run(&cfg, &schedule).unwrap();
            let s_system = result.records[0].value;
            let i_x = result.records[1].value;
            assert_eq!(s_system, i_x, "seed {seed}");
            // And the standalone shadow op agrees with the in-run probe.
            let map = classical_shadow_run(&cfg, 0).unwrap();
            let cols: Vec<usize> = (0..8).collect();
            assert_eq!(map.image_entropy_on(&cols) as f64, i_x);
        }
    }

    #[test]
    fn schedule_validation_errors() {
        let cfg = cnot_only(8, 0, 10, 0);
        let schedule = ProbeSchedule::new(vec![11], vec![Probe::HalfCut]);
        assert!(matches!(
            run(&cfg, &schedule),
            Err(RunError::ScheduleBeyondDuration { step: 11, steps: 10 })
        ));
        let cfg = cnot_only(10, 0, 10, 0);
        let schedule = ProbeSchedule::new(vec![5], vec![Probe::I3]);
        assert!(matches!(run(&cfg, &schedule), Err(RunError::Config(_))));
    }

    #[test]
    fn open_boundary_neighbors_stay_in_range() {
        assert_eq!(neighbor(0, false, 8, Boundary::Open), 1);
        assert_eq!(neighbor(7, true, 8, Boundary::Open), 6);
        assert_eq!(neighbor(3, true, 8, Boundary::Open), 4);
        assert_eq!(neighbor(0, false, 8, Boundary::Periodic), 7);
        assert_eq!(neighbor(7, true, 8, Boundary::Periodic), 0);
    }

    #[test]
    fn delta_x_round_trip() {
        let mut cfg = cnot_only(8, 0, 10, 0);
        cfg.p_m = 0.5;
        cfg.set_delta_x(1.0 / 3.0, 0.25);
        assert!((cfg.p_x - 0.5).abs() < 1e-12);
        assert!((cfg.p_z - 0.25).abs() < 1e-12);
        assert!((cfg.delta_x() - 1.0 / 3.0).abs() < 1e-12);
        assert!((cfg.p_x + cfg.p_y + cfg.p_z - 1.0).abs() < 1e-12);
    }
}
