//! Analytic companions to the circuit dynamics: the Markov chain of
//! measurement-only evolution, the biased random walk of the weak-measurement
//! limit, their rate-equation integrators, and the phenomenological
//! finite-correlation-length steady state.
//!
//! The walker lives in the `(N_x, N_z)` plane of bits of information known
//! about the X and Z basis states (`N_a = L - C_a`), confined to the
//! triangle `N_x >= 0`, `N_z >= 0`, `N_x + N_z <= L`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MarkovError {
    #[error("rates ({0}, {1}, {2}) are not a probability triple")]
    InvalidRates(f64, f64, f64),
    #[error("fixed-point iteration did not converge: residual {residual} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },
}

/// Measurement-axis rates on the probability simplex.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub p_x: f64,
    pub p_y: f64,
    pub p_z: f64,
}

impl Rates {
    pub fn new(p_x: f64, p_y: f64, p_z: f64) -> Result<Self, MarkovError> {
        let ok = p_x >= 0.0
            && p_y >= 0.0
            && p_z >= 0.0
            && (p_x + p_y + p_z - 1.0).abs() < 1e-9;
        if !ok {
            return Err(MarkovError::InvalidRates(p_x, p_y, p_z));
        }
        Ok(Self { p_x, p_y, p_z })
    }
}

/// Walker coordinates: bits known about the X and Z bases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkerState {
    pub n_x: usize,
    pub n_z: usize,
    pub l: usize,
}

impl WalkerState {
    pub fn new(n_x: usize, n_z: usize, l: usize) -> Self {
        let w = Self { n_x, n_z, l };
        w.assert_valid();
        w
    }

    pub fn n_y(&self) -> usize {
        self.l - self.n_x - self.n_z
    }

    fn assert_valid(&self) {
        assert!(
            self.n_x + self.n_z <= self.l,
            "walker ({}, {}) escaped the N_x + N_z <= {} triangle",
            self.n_x,
            self.n_z,
            self.l
        );
    }

    fn moved_clamped(&self, dx: i64, dz: i64) -> Self {
        let clamp = |v: usize, d: i64| -> usize {
            (v as i64 + d).clamp(0, self.l as i64) as usize
        };
        let next = Self { n_x: clamp(self.n_x, dx), n_z: clamp(self.n_z, dz), l: self.l };
        next.assert_valid();
        next
    }
}

/// One step of the measurement-only chain: a measured axis only changes the
/// polarization counts when it hits a site polarized along a different axis,
/// so each conditional rate carries the current occupation fraction.
pub fn step_measurement_only<R: Rng + ?Sized>(
    w: WalkerState,
    rates: Rates,
    rng: &mut R,
) -> WalkerState {
    w.assert_valid();
    let l = w.l as f64;
    let (n_x, n_z, n_y) = (w.n_x as f64, w.n_z as f64, w.n_y() as f64);
    let moves: [(i64, i64, f64); 6] = [
        (1, 0, rates.p_x * n_y / l),
        (1, -1, rates.p_x * n_z / l),
        (0, 1, rates.p_z * n_y / l),
        (-1, 1, rates.p_z * n_x / l),
        (-1, 0, rates.p_y * n_x / l),
        (0, -1, rates.p_y * n_z / l),
    ];
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (dx, dz, p) in moves {
        acc += p;
        if u < acc {
            return w.moved_clamped(dx, dz);
        }
    }
    w
}

/// One step of the weak-measurement walk: every measurement hits an
/// effectively maximally mixed site, so the moves are state-independent in
/// the bulk; components that would leave the triangle are clamped, which
/// reproduces the edge rates (on N_z = 0 an X measurement moves +1 along
/// N_x and a Y measurement moves -1).
pub fn step_weak_limit<R: Rng + ?Sized>(
    w: WalkerState,
    rates: Rates,
    rng: &mut R,
) -> WalkerState {
    w.assert_valid();
    let u: f64 = rng.gen();
    let (dx, dz) = if u < rates.p_x {
        (1, -1)
    } else if u < rates.p_x + rates.p_z {
        (-1, 1)
    } else {
        (-1, -1)
    };
    w.moved_clamped(dx, dz)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkKind {
    MeasurementOnly,
    WeakLimit,
}

/// Deterministic mean-field trajectory: explicit Euler with a unit step per
/// measurement. Returns `(N_x, N_z)` after 0..=steps measurements.
pub fn integrate_rate_eq(
    kind: WalkKind,
    rates: Rates,
    l: usize,
    start: (f64, f64),
    steps: usize,
) -> Vec<(f64, f64)> {
    let lf = l as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let mut n = start;
    out.push(n);
    for _ in 0..steps {
        let (dx, dz) = match kind {
            WalkKind::MeasurementOnly => (
                rates.p_x * (lf - n.0) / lf - (rates.p_z + rates.p_y) * n.0 / lf,
                rates.p_z * (lf - n.1) / lf - (rates.p_x + rates.p_y) * n.1 / lf,
            ),
            WalkKind::WeakLimit => (
                rates.p_x - rates.p_z - rates.p_y,
                rates.p_z - rates.p_x - rates.p_y,
            ),
        };
        n.0 = (n.0 + dx).clamp(0.0, lf);
        n.1 = (n.1 + dz).clamp(0.0, lf);
        if n.0 + n.1 > lf {
            // Project back onto the N_x + N_z = L line.
            let excess = (n.0 + n.1 - lf) / 2.0;
            n.0 -= excess;
            n.1 -= excess;
        }
        out.push(n);
    }
    out
}

/// Converged steady state of the finite-`xi` rate equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiSteadyState {
    pub p_x: f64,
    pub p_y: f64,
    pub p_z: f64,
    pub xi: f64,
    pub l: usize,
    pub nx_bar: f64,
    pub nz_bar: f64,
    pub residual: f64,
}

fn xi_drift(rates: Rates, xi: f64, lf: f64, n_x: f64, n_z: f64) -> (f64, f64) {
    let pow = |v: f64| (v / lf).powf(xi);
    let dx = rates.p_x * (1.0 - pow(n_x))
        - rates.p_z * (1.0 - pow(n_z))
        - rates.p_y * (1.0 - pow(lf - n_x + n_z));
    // The paper writes only the N_x equation; the N_z companion is its
    // x <-> z mirror, including inside the p_y power.
    let dz = rates.p_z * (1.0 - pow(n_z))
        - rates.p_x * (1.0 - pow(n_x))
        - rates.p_y * (1.0 - pow(lf - n_z + n_x));
    (dx, dz)
}

/// Solve the phenomenological rate equation for its steady state by damped
/// fixed-point iteration (damping factor 0.5 on the natural step of L
/// measurements, scaled down by the equation stiffness `1 + xi`).
///
/// At `xi = 1` the equation relaxes like the measurement-only chain; as
/// `xi -> infinity` it reproduces the weak-measurement drift.
pub fn solve_xi_steady(rates: Rates, xi: f64, l: usize) -> Result<XiSteadyState, MarkovError> {
    assert!(xi >= 1.0, "xi must be at least 1, got {xi}");
    let lf = l as f64;
    let step = 0.5 * lf / (1.0 + xi);
    let max_iterations = 10_000;
    let tolerance = 1e-10;
    let mut n = (lf / 2.0, lf / 2.0);
    let mut residual = f64::INFINITY;
    for _ in 0..max_iterations {
        let (dx, dz) = xi_drift(rates, xi, lf, n.0, n.1);
        residual = dx.abs().max(dz.abs());
        if residual < tolerance {
            return Ok(XiSteadyState {
                p_x: rates.p_x,
                p_y: rates.p_y,
                p_z: rates.p_z,
                xi,
                l,
                nx_bar: n.0,
                nz_bar: n.1,
                residual,
            });
        }
        n.0 = (n.0 + step * dx).clamp(0.0, lf);
        n.1 = (n.1 + step * dz).clamp(0.0, lf);
    }
    Err(MarkovError::NoConvergence { residual, iterations: max_iterations })
}

/// Position of a `(p_R, p_x)` point relative to the coherence-balance
/// critical line of the phase-gate rate equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseGateBalance {
    /// Critical phase-gate rate `p_x (1 - (1 - K/L)^xi)`.
    pub critical_p_r: f64,
    /// Whether the supplied `p_R` exceeds it (coherence survives).
    pub above: bool,
}

/// Steady-state criterion of the coherence rate equation
/// `d C_x / dm = p_R - p_x (1 - (N_x/L)^xi)` with `K` bits of coherence to
/// protect: the phase-gate rate balances the X-measurement losses on the
/// critical line, which is linear in `p_x` at fixed `(K, L, xi)`.
pub fn phase_gate_rate_balance(
    p_r: f64,
    p_x: f64,
    xi: f64,
    l: usize,
    k: usize,
) -> PhaseGateBalance {
    assert!(k <= l, "coherence target {k} exceeds {l} qubits");
    let critical_p_r = p_x * (1.0 - (1.0 - k as f64 / l as f64).powf(xi));
    PhaseGateBalance { critical_p_r, above: p_r > critical_p_r }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn all_x_known_with_pure_x_rates_is_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rates = Rates::new(1.0, 0.0, 0.0).unwrap();
        let w = WalkerState::new(50, 0, 50);
        for _ in 0..100 {
            assert_eq!(step_measurement_only(w, rates, &mut rng), w);
        }
    }

    #[test]
    fn measurement_only_transition_frequencies() {
        // Frequencies out of a fixed interior state match the six
        // conditional rates within 5 sigma.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rates = Rates::new(0.5, 0.2, 0.3).unwrap();
        let l = 40;
        let w = WalkerState::new(10, 14, l);
        let trials = 100_000usize;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..trials {
            let next = step_measurement_only(w, rates, &mut rng);
            let delta = (next.n_x as i64 - w.n_x as i64, next.n_z as i64 - w.n_z as i64);
            *counts.entry(delta).or_insert(0usize) += 1;
        }
        let lf = l as f64;
        let (n_x, n_z, n_y) = (w.n_x as f64, w.n_z as f64, w.n_y() as f64);
        let expected = [
            ((1, 0), rates.p_x * n_y / lf),
            ((1, -1), rates.p_x * n_z / lf),
            ((0, 1), rates.p_z * n_y / lf),
            ((-1, 1), rates.p_z * n_x / lf),
            ((-1, 0), rates.p_y * n_x / lf),
            ((0, -1), rates.p_y * n_z / lf),
        ];
        let mut stay = 1.0;
        for ((dx, dz), p) in expected {
            stay -= p;
            let observed = *counts.get(&(dx, dz)).unwrap_or(&0) as f64;
            let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
            assert!(
                (observed - trials as f64 * p).abs() < 5.0 * sigma,
                "move ({dx},{dz}): observed {observed}, expected {}",
                trials as f64 * p
            );
        }
        let observed_stay = *counts.get(&(0, 0)).unwrap_or(&0) as f64;
        let sigma = (trials as f64 * stay * (1.0 - stay)).sqrt();
        assert!((observed_stay - trials as f64 * stay).abs() < 5.0 * sigma);
    }

    #[test]
    fn measurement_only_stationary_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rates = Rates::new(0.5, 0.2, 0.3).unwrap();
        let l = 100;
        let mut w = WalkerState::new(0, 0, l);
        let burn_in = 20_000;
        let samples = 200_000;
        for _ in 0..burn_in {
            w = step_measurement_only(w, rates, &mut rng);
        }
        let (mut sum_x, mut sum_z) = (0.0, 0.0);
        for _ in 0..samples {
            w = step_measurement_only(w, rates, &mut rng);
            sum_x += w.n_x as f64;
            sum_z += w.n_z as f64;
        }
        let mean_x = sum_x / samples as f64 / l as f64;
        let mean_z = sum_z / samples as f64 / l as f64;
        assert!((mean_x - rates.p_x).abs() < 0.02, "mean_x = {mean_x}");
        assert!((mean_z - rates.p_z).abs() < 0.02, "mean_z = {mean_z}");
    }

    #[test]
    fn y_dominant_walker_reaches_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rates = Rates::new(0.0, 1.0, 0.0).unwrap();
        let mut w = WalkerState::new(20, 30, 64);
        for _ in 0..100 {
            w = step_weak_limit(w, rates, &mut rng);
        }
        assert_eq!((w.n_x, w.n_z), (0, 0));
    }

    #[test]
    fn weak_limit_bulk_drift() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rates = Rates::new(0.45, 0.25, 0.3).unwrap();
        let l = 4000;
        let expected = (
            rates.p_x - rates.p_z - rates.p_y,
            rates.p_z - rates.p_x - rates.p_y,
        );
        // Many short bulk excursions from the center.
        let trials = 2000;
        let steps = 100;
        let (mut dx_sum, mut dz_sum) = (0.0f64, 0.0f64);
        for _ in 0..trials {
            let mut w = WalkerState::new(l / 3, l / 3, l);
            for _ in 0..steps {
                w = step_weak_limit(w, rates, &mut rng);
            }
            dx_sum += (w.n_x as f64 - (l / 3) as f64) / steps as f64;
            dz_sum += (w.n_z as f64 - (l / 3) as f64) / steps as f64;
        }
        let n = trials as f64;
        // Per-step increment variance is at most 1; the mean of
        // trials*steps increments has sigma below 1/sqrt(trials*steps).
        let sigma = 1.0 / (n * steps as f64).sqrt();
        assert!((dx_sum / n - expected.0).abs() < 3.0 * sigma);
        assert!((dz_sum / n - expected.1).abs() < 3.0 * sigma);
    }

    #[test]
    fn rate_eq_fixed_points() {
        let rates = Rates::new(1.0, 0.0, 0.0).unwrap();
        let traj = integrate_rate_eq(WalkKind::MeasurementOnly, rates, 64, (0.0, 0.0), 5000);
        let last = traj.last().unwrap();
        assert!((last.0 - 64.0).abs() < 1e-6);

        let thirds = Rates::new(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0).unwrap();
        let traj =
            integrate_rate_eq(WalkKind::MeasurementOnly, thirds, 60, (60.0, 0.0), 20000);
        let last = traj.last().unwrap();
        assert!((last.0 - 20.0).abs() < 1e-6, "N_x -> p_x L, got {}", last.0);
        assert!((last.1 - 20.0).abs() < 1e-6);
    }

    #[test]
    fn weak_limit_rate_eq_drifts_to_corner() {
        let rates = Rates::new(0.6, 0.1, 0.3).unwrap();
        let traj = integrate_rate_eq(WalkKind::WeakLimit, rates, 50, (25.0, 25.0), 1000);
        let last = traj.last().unwrap();
        assert_eq!((last.0, last.1), (50.0, 0.0));
    }

    #[test]
    fn xi_steady_state_trivial_and_closed_form() {
        let rates = Rates::new(1.0, 0.0, 0.0).unwrap();
        let s = solve_xi_steady(rates, 1.0, 32).unwrap();
        assert!((s.nx_bar - 32.0).abs() < 1e-6);
        assert!(s.residual < 1e-10);

        // p_y = 0 conserves N_x + N_z, so from the symmetric start the fixed
        // point lies on the pure line N_z = L - N_x and solves
        // p_x (1 - x^xi) = p_z (1 - (1-x)^xi). Bisection is the independent
        // route.
        for xi in [1.0, 2.7, 5.0, 8.0] {
            let (p_x, p_z) = (0.75, 0.25);
            let rates = Rates::new(p_x, 0.0, p_z).unwrap();
            let s = solve_xi_steady(rates, xi, 32).unwrap();
            let f = |x: f64| p_x * (1.0 - x.powf(xi)) - p_z * (1.0 - (1.0 - x).powf(xi));
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..200 {
                let mid = (lo + hi) / 2.0;
                if f(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let expected = 32.0 * lo;
            assert!(
                (s.nx_bar - expected).abs() < 1e-6,
                "xi = {xi}: got {}, expected {expected}",
                s.nx_bar
            );
            assert!((s.nx_bar + s.nz_bar - 32.0).abs() < 1e-6);
            assert!(s.residual < 1e-10);
        }
    }

    #[test]
    fn xi_steady_state_large_xi_goes_classical() {
        // As xi grows with Delta_x > 0 the X-known fraction approaches 1.
        let rates = Rates::new(0.6, 0.0, 0.4).unwrap();
        let moderate = solve_xi_steady(rates, 8.0, 64).unwrap();
        let large = solve_xi_steady(rates, 50.0, 64).unwrap();
        assert!(large.nx_bar > moderate.nx_bar);
        assert!(large.nx_bar / 64.0 > 0.97, "N_x/L = {}", large.nx_bar / 64.0);
    }

    #[test]
    fn phase_gate_balance_examples() {
        // No phase gates, finite X-measurement rate: below the line.
        let b = phase_gate_rate_balance(0.0, 0.5, 3.0, 128, 10);
        assert!(!b.above);
        assert!(b.critical_p_r > 0.0);
        // Nothing to protect: the critical rate vanishes.
        let b = phase_gate_rate_balance(0.0, 0.5, 3.0, 128, 0);
        assert_eq!(b.critical_p_r, 0.0);
        // Linearity in p_x at fixed (K, L, xi).
        let b1 = phase_gate_rate_balance(0.0, 0.2, 3.0, 128, 10);
        let b2 = phase_gate_rate_balance(0.0, 0.4, 3.0, 128, 10);
        assert!((b2.critical_p_r / b1.critical_p_r - 2.0).abs() < 1e-12);
    }

    #[test]
    #[should_panic(expected = "escaped")]
    fn invalid_walker_is_rejected() {
        WalkerState::new(30, 40, 64);
    }
}
