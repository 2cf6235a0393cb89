use cohsim::circuit::{child_rngs, sample_step, Boundary, CircuitConfig, InitState};
use cohsim::pauli::{Axis, Gate};
use cohsim::stab::StabilizerTableau;

fn main() {
    let l = 64usize;
    for c_x in [4usize, 8, 16, 32] {
        for t_end in [40u64, 100, 200, 400] {
            let cfg = CircuitConfig {
                system_len: l,
                ancilla_count: 0,
                p_u: 1.0,
                p_m: 0.0,
                p_r: 0.0,
                p_e: 0.0,
                p_x: 0.0,
                p_y: 0.0,
                p_z: 0.0,
                steps: l as u64 * t_end,
                warmup_steps: 0,
                boundary: Boundary::Periodic,
                seed: 5,
                eraser: Default::default(),
                init: InitState::PureProduct { n_x: l - c_x, n_z: c_x, n_y: 0 },
            };
            let reals = 200;
            let mut sums = vec![0.0f64; l + 1];
            for r in 0..reals {
                let (mut event_rng, _) = child_rngs(cfg.seed, r);
                // interleave: every (l/c_x)-th site Z-polarized
                let stride = l / c_x;
                let pol: Vec<(Axis, bool)> = (0..l)
                    .map(|i| {
                        if i % stride == 0 {
                            (Axis::Z, false)
                        } else {
                            (Axis::X, false)
                        }
                    })
                    .collect();
                let mut state = StabilizerTableau::product(&pol);
                for _ in 0..cfg.steps {
                    let ev = sample_step(&cfg, &mut event_rng);
                    if let Some((c, t)) = ev.cnot {
                        state.apply_gate(Gate::Cnot { control: c, target: t }).unwrap();
                    }
                }
                for (x, s) in state.prefix_entropies(l).into_iter().enumerate() {
                    sums[x] += s as f64;
                }
            }
            let mut worst = (0usize, 0.0f64);
            for (x, sum) in sums.iter().enumerate() {
                let mean = sum / reals as f64;
                let expected = (x as f64).min((l - x) as f64).min(c_x as f64);
                let gap = expected - mean;
                if gap > worst.1 {
                    worst = (x, gap);
                }
            }
            println!("C_x={c_x:2} t={t_end:4}: worst gap {:.3} at x={}", worst.1, worst.0);
        }
    }
}
