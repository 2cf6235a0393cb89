use cohsim::circuit::{run_ensemble, Boundary, CircuitConfig, InitState, Probe, ProbeSchedule};

fn main() {
    let l = 64;
    let c_x = 32usize;
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
        steps: (l as u64) * 2000,
        warmup_steps: 0,
        boundary: Boundary::Periodic,
        seed: 7,
        eraser: Default::default(),
        init: InitState::PureProduct { n_x: l - c_x, n_z: c_x, n_y: 0 },
    };
    let times: Vec<f64> = vec![
        5.0, 10.0, 20.0, 40.0, 80.0, 160.0, 320.0, 640.0, 1280.0, 2000.0,
    ];
    let schedule = ProbeSchedule::at_times(l, &times, vec![Probe::HalfCut]);
    let ens = run_ensemble(&cfg, &schedule, 40, None).unwrap();
    for rec in &ens.records {
        println!("t={:7.1}  S(L/2) = {:6.3} +- {:.3}", rec.t, rec.mean, rec.stderr);
    }
}
