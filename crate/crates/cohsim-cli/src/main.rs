//! Command-line experiment driver.
//!
//! Subcommands: `sweep` (grid of circuit ensembles), `purify` (channel
//! capacity time series), `walker` (coherence random walk), `codes`
//! (distance vs coherence bound reports), `collapse` (critical point and
//! scaling-collapse fits). Worker count comes from `--workers` or the
//! `COHSIM_WORKERS` environment variable.
//!
//! Exit codes: 0 success, 1 usage or runtime error, 2 bound violation.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use cohsim::circuit::{run_ensemble, InitState};
use cohsim::codes::{
    bound_check_bases, brute_force_distance, dephasing_distance, verify_coherence_bound,
    CodeSpec, CodesError,
};
use cohsim::collapse::{collapse_fit, crossing_detect, CollapseForm};
use cohsim::f2::BitMatrix;
use cohsim::markov::{
    integrate_rate_eq, step_measurement_only, step_weak_limit, Rates, WalkKind, WalkerState,
};
use cohsim::pauli::{Axis, LocalPauliBasis};
use cohsim_cli::config::{parse_probe, RunFile};
use cohsim_cli::output::{parse_sweep_csv, sample_times, SweepWriter};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "cohsim", version, about = "Stabilizer-circuit coherence laboratory")]
struct Cli {
    /// Worker threads for ensembles (default: COHSIM_WORKERS or all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the (possibly swept) ensemble described by a run file.
    Sweep(SweepArgs),
    /// Purification time series: coherent information and system entropy.
    Purify(SweepArgs),
    /// Simulate the (N_x, N_z) random walk.
    Walker(WalkerArgs),
    /// Report code distance and coherence bounds for a stabilizer code.
    Codes(CodesArgs),
    /// Detect the critical point and fit a scaling collapse from sweep data.
    Collapse(CollapseArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// Run file (TOML).
    config: PathBuf,
    /// Output stem; writes <stem>.csv, <stem>.jsonl, <stem>.config.toml.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum WalkerKindArg {
    MeasurementOnly,
    WeakLimit,
}

#[derive(Args)]
struct WalkerArgs {
    kind: WalkerKindArg,
    #[arg(long)]
    p_x: f64,
    #[arg(long)]
    p_y: f64,
    #[arg(long)]
    p_z: f64,
    #[arg(long, default_value_t = 100)]
    l: usize,
    #[arg(long, default_value_t = 100_000)]
    steps: usize,
    #[arg(long, default_value_t = 4)]
    trajectories: usize,
    /// Steps to discard before accumulating the stationary histogram.
    #[arg(long, default_value_t = 10_000)]
    burn_in: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Starting point; defaults to the triangle center.
    #[arg(long)]
    start: Option<String>,
    /// Keep every k-th trajectory sample.
    #[arg(long)]
    sample_every: Option<usize>,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct CodesArgs {
    /// repetition:<L>, steane, shor, five-qubit, file:<path>, or css.
    code: String,
    /// Paths to the two dense parity-check matrices for `css`.
    #[arg(long)]
    hx: Option<PathBuf>,
    #[arg(long)]
    hz: Option<PathBuf>,
    /// Uniform bases to check (subset of X, Y, Z).
    #[arg(long, value_delimiter = ',', default_values_t = vec!['X', 'Y', 'Z'])]
    basis: Vec<char>,
    /// Additional random local bases.
    #[arg(long, default_value_t = 0)]
    random_bases: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    I3,
    CoherentInfo,
}

#[derive(Args)]
struct CollapseArgs {
    /// Sweep CSV produced by `sweep` or `purify`.
    data: PathBuf,
    #[arg(long)]
    form: FormArg,
    /// Probe column to fit; defaults to I3 or coherent_info per the form.
    #[arg(long)]
    probe: Option<String>,
    /// Restrict the fit to |delta_x - crossing| <= window.
    #[arg(long)]
    window: Option<f64>,
    /// Fit a single sample time (default: fit each time separately).
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, default_value_t = 4)]
    degree: usize,
    /// Output stem for the JSON report.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes; everything else is a
            // usage error.
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let workers = cli.workers.or_else(|| {
        std::env::var("COHSIM_WORKERS").ok().and_then(|v| v.parse().ok())
    });
    let outcome = match cli.command {
        Command::Sweep(args) => cmd_sweep(args, workers, false),
        Command::Purify(args) => cmd_sweep(args, workers, true),
        Command::Walker(args) => cmd_walker(args),
        Command::Codes(args) => cmd_codes(args),
        Command::Collapse(args) => cmd_collapse(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn cmd_sweep(args: SweepArgs, workers: Option<usize>, purify: bool) -> Result<ExitCode> {
    let mut file = RunFile::load(&args.config)?;
    if purify {
        let base = file.base_config()?;
        if !matches!(base.init, InitState::ClassicalRegister | InitState::QuantumRegister) {
            bail!("purify requires a classical_register or quantum_register init");
        }
        if file.probes.is_empty() {
            file.probes = vec!["coherent_info".into(), "S_system".into()];
            if base.is_coherence_free() {
                file.probes.push("I_x".into());
            }
        }
    }
    // Schedule validity is checked per grid point inside run().
    let echo = file.resolved()?;
    let points = file.sweep_points()?;
    let mut writer = SweepWriter::new(&args.out, &echo)?;
    for point in &points {
        let schedule = file.schedule(&point.config)?;
        let ensemble = run_ensemble(&point.config, &schedule, file.realizations, workers)
            .map_err(|e| anyhow::anyhow!("grid point (L={}, delta_x={}): {e}", point.l, point.delta_x))?;
        writer.push_point(point, &ensemble);
    }
    let (csv, jsonl, config) = writer.finish(&echo)?;
    eprintln!(
        "wrote {} points -> {}, {}, {}",
        points.len(),
        csv.display(),
        jsonl.display(),
        config.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_walker(args: WalkerArgs) -> Result<ExitCode> {
    let rates = Rates::new(args.p_x, args.p_y, args.p_z)
        .map_err(|e| anyhow::anyhow!(e.to_string()))?;
    let kind = match args.kind {
        WalkerKindArg::MeasurementOnly => WalkKind::MeasurementOnly,
        WalkerKindArg::WeakLimit => WalkKind::WeakLimit,
    };
    let start = match &args.start {
        None => WalkerState::new(args.l / 3, args.l / 3, args.l),
        Some(text) => {
            let (x, z) = text
                .split_once(',')
                .context("--start expects `n_x,n_z`")?;
            WalkerState::new(x.trim().parse()?, z.trim().parse()?, args.l)
        }
    };
    let sample_every = args.sample_every.unwrap_or_else(|| (args.steps / 10_000).max(1));

    let mut trajectories_csv = String::from("trajectory,m,n_x,n_z\n");
    let mut histogram = std::collections::BTreeMap::<(usize, usize), u64>::new();
    for trajectory in 0..args.trajectories {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        rng.set_stream(trajectory as u64);
        let mut walker = start;
        for m in 0..=args.steps {
            if m % sample_every == 0 {
                trajectories_csv.push_str(&format!(
                    "{trajectory},{m},{},{}\n",
                    walker.n_x, walker.n_z
                ));
            }
            if m >= args.burn_in {
                *histogram.entry((walker.n_x, walker.n_z)).or_insert(0) += 1;
            }
            walker = match kind {
                WalkKind::MeasurementOnly => step_measurement_only(walker, rates, &mut rng),
                WalkKind::WeakLimit => step_weak_limit(walker, rates, &mut rng),
            };
        }
    }
    let mut histogram_csv = String::from("n_x,n_z,count\n");
    for ((n_x, n_z), count) in &histogram {
        histogram_csv.push_str(&format!("{n_x},{n_z},{count}\n"));
    }
    // The deterministic mean-field curve alongside, for comparison plots.
    let mut rate_csv = String::from("m,nx_bar,nz_bar\n");
    let trajectory = integrate_rate_eq(
        kind,
        rates,
        args.l,
        (start.n_x as f64, start.n_z as f64),
        args.steps.min(100_000),
    );
    for (m, (nx, nz)) in trajectory.iter().enumerate().step_by(sample_every) {
        rate_csv.push_str(&format!("{m},{nx},{nz}\n"));
    }

    let write = |suffix: &str, body: &str| -> Result<PathBuf> {
        let path = args.out.with_extension(suffix);
        std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    };
    let a = write("trajectories.csv", &trajectories_csv)?;
    let b = write("histogram.csv", &histogram_csv)?;
    let c = write("rate_eq.csv", &rate_csv)?;
    eprintln!("wrote {}, {}, {}", a.display(), b.display(), c.display());
    Ok(ExitCode::SUCCESS)
}

fn load_code(args: &CodesArgs) -> Result<CodeSpec> {
    if let Some(rest) = args.code.strip_prefix("repetition:") {
        let l: usize = rest.parse().context("repetition:<L> expects a length")?;
        return Ok(CodeSpec::repetition(l));
    }
    match args.code.as_str() {
        "steane" => Ok(CodeSpec::steane()),
        "shor" => Ok(CodeSpec::shor()),
        "five-qubit" => Ok(CodeSpec::five_qubit()),
        "css" => {
            let hx_path = args.hx.as_ref().context("css requires --hx")?;
            let hz_path = args.hz.as_ref().context("css requires --hz")?;
            let hx = BitMatrix::parse_dense(&std::fs::read_to_string(hx_path)?)
                .map_err(|e| anyhow::anyhow!("{}: {e}", hx_path.display()))?;
            let hz = BitMatrix::parse_dense(&std::fs::read_to_string(hz_path)?)
                .map_err(|e| anyhow::anyhow!("{}: {e}", hz_path.display()))?;
            Ok(CodeSpec::css(&hx, &hz)?)
        }
        other => {
            if let Some(path) = other.strip_prefix("file:") {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {path}"))?;
                Ok(CodeSpec::parse_file(&text)?)
            } else {
                bail!(
                    "unknown code {other:?}; expected repetition:<L>, steane, shor, \
                     five-qubit, css, or file:<path>"
                )
            }
        }
    }
}

fn cmd_codes(args: CodesArgs) -> Result<ExitCode> {
    let code = load_code(&args)?;
    let n = code.n();
    println!("[[{}, {}]] code, {} checks", n, code.k(), code.checks().len());
    let distance = brute_force_distance(&code)?;
    println!("code distance d = {distance}");
    for (axis, label) in [(Axis::X, "X"), (Axis::Y, "Y"), (Axis::Z, "Z")] {
        match dephasing_distance(&code, axis) {
            Ok(d) => println!("{label}-dephasing distance = {d}"),
            Err(CodesError::NoDephasingLogical) => {
                println!("{label}-dephasing distance = none (no {label}-only logical)")
            }
            Err(e) => return Err(e.into()),
        }
    }

    let mut bases = Vec::new();
    for c in &args.basis {
        let axis = match c.to_ascii_uppercase() {
            'X' => Axis::X,
            'Y' => Axis::Y,
            'Z' => Axis::Z,
            other => bail!("unknown basis {other:?}"),
        };
        bases.push(LocalPauliBasis::uniform(axis, n));
    }
    if args.random_bases > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        bases.extend(bound_check_bases(n, args.random_bases, &mut rng).split_off(3));
    }

    match verify_coherence_bound(&code, &bases) {
        Ok(report) => {
            println!("basis            C_PD  tight  slack(tight-d)");
            for entry in &report.per_basis {
                println!(
                    "{:<16} {:>4}  {:>5}  {:>5}",
                    entry.basis.to_string(),
                    entry.c_pd,
                    entry.tight,
                    entry.tight - report.distance
                );
            }
            println!("bound d <= tight <= C_PD holds in all {} bases", bases.len());
            Ok(ExitCode::SUCCESS)
        }
        Err(e @ CodesError::BoundViolated { .. }) => {
            eprintln!("BOUND VIOLATION: {e}");
            Ok(ExitCode::from(2))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_collapse(args: CollapseArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.data)
        .with_context(|| format!("reading {}", args.data.display()))?;
    let (form, default_probe) = match args.form {
        FormArg::I3 => (CollapseForm::I3, "I3"),
        FormArg::CoherentInfo => (CollapseForm::CoherentInfo, "coherent_info"),
    };
    let probe = args.probe.clone().unwrap_or_else(|| default_probe.to_string());
    parse_probe(&probe)?;

    let times = match args.t {
        Some(t) => vec![t],
        None => sample_times(&text, &probe)?,
    };
    if times.is_empty() {
        bail!("no rows for probe {probe:?} in {}", args.data.display());
    }
    let mut reports = Vec::new();
    for &t in &times {
        let mut points = parse_sweep_csv(&text, &probe, Some(t))?;
        if points.is_empty() {
            continue;
        }
        let crossing = crossing_detect(&points).ok();
        if let (Some(window), Some(cross)) = (args.window, crossing.as_ref()) {
            points.retain(|p| (p.x - cross.x_c).abs() <= window);
        }
        let fit = collapse_fit(&points, form, args.degree)
            .map_err(|e| anyhow::anyhow!("t = {t}: {e}"))?;
        let report = serde_json::json!({
            "t": t,
            "probe": probe,
            "crossing": crossing,
            "fit": fit,
        });
        println!("{report}");
        reports.push(report);
    }
    if reports.len() > 1 {
        let nus: Vec<f64> =
            reports.iter().map(|r| r["fit"]["nu"].as_f64().unwrap()).collect();
        let mean = nus.iter().sum::<f64>() / nus.len() as f64;
        let spread = nus.iter().map(|n| (n - mean).abs()).fold(0.0, f64::max);
        println!(
            "{}",
            serde_json::json!({ "per_time_nu_mean": mean, "per_time_nu_spread": spread })
        );
    }
    if let Some(out) = &args.out {
        let path = out.with_extension("json");
        std::fs::write(&path, serde_json::to_string_pretty(&reports)?)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}
