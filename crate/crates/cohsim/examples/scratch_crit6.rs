use cohsim::circuit::{run_ensemble, Boundary, CircuitConfig, InitState, Probe, ProbeSchedule};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let reals: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(40);
    let t_end: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(600.0);
    let deltas = [0.20, 0.25, 0.30, 0.3333, 0.3667, 0.40, 0.45];
    let start = std::time::Instant::now();
    for l in [48usize, 64, 96, 128] {
        print!("L={l:3}: ");
        for &delta in &deltas {
            let mut cfg = CircuitConfig {
                system_len: l,
                ancilla_count: 0,
                p_u: 1.0,
                p_m: 0.01,
                p_r: 0.0,
                p_e: 0.0,
                p_x: 0.0,
                p_y: 0.0,
                p_z: 0.0,
                steps: (t_end * l as f64) as u64,
                warmup_steps: 0,
                boundary: Boundary::Periodic,
                seed: 900 + (delta * 1000.0) as u64,
                eraser: Default::default(),
                init: InitState::PureProduct { n_x: l - l / 2, n_z: l / 2, n_y: 0 },
            };
            cfg.set_delta_x(delta, 0.25);
            let schedule = ProbeSchedule::at_times(
                l,
                &[t_end],
                vec![Probe::I3, Probe::CoherenceX],
            );
            let ens = run_ensemble(&cfg, &schedule, reals, None).unwrap();
            let i3 = ens.records.iter().find(|r| r.probe == Probe::I3).unwrap();
            let cx = ens.records.iter().find(|r| r.probe == Probe::CoherenceX).unwrap();
            print!("d={delta:.2}: I3={:6.2} Cx={:6.1} | ", i3.mean, cx.mean);
        }
        println!();
    }
    println!("elapsed {:.1?}", start.elapsed());
}
