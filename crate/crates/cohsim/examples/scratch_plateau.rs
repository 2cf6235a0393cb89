use cohsim::circuit::{run_ensemble, CircuitConfig, InitState, Probe, ProbeSchedule};

fn main() {
    let l = 64;
    for c_x in [4usize, 8, 16, 32] {
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
            steps: (l as u64) * 40,
            warmup_steps: 0,
            boundary: cohsim::circuit::Boundary::Periodic,
            seed: 12345,
            eraser: Default::default(),
            init: InitState::PureProduct { n_x: l - c_x, n_z: c_x, n_y: 0 },
        };
        let schedule = ProbeSchedule::final_only(&cfg, vec![Probe::EntropyProfile]);
        let start = std::time::Instant::now();
        let ens = run_ensemble(&cfg, &schedule, 200, None).unwrap();
        let mut worst = (0usize, 0.0f64);
        for rec in &ens.records {
            let x = rec.index.unwrap();
            let expected = (x as f64).min((l - x) as f64).min(c_x as f64);
            let gap = expected - rec.mean;
            if gap > worst.1 {
                worst = (x, gap);
            }
        }
        println!(
            "C_x={c_x}: worst gap {:.3} at x={} ({:.2?})",
            worst.1, worst.0, start.elapsed()
        );
    }
}
