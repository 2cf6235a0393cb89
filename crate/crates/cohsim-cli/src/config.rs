//! The declarative run file.
//!
//! A single TOML document describes one circuit configuration, the probes
//! and sample times, the ensemble size, and (optionally) a parameter grid to
//! sweep. Key names mirror the circuit config fields. Every command echoes
//! the resolved file next to its outputs; feeding the echo back in
//! reproduces the run byte for byte.

use anyhow::{bail, Context, Result};
use cohsim::channels::EraserKind;
use cohsim::circuit::{Boundary, CircuitConfig, InitState, Probe, ProbeSchedule};
use serde::{Deserialize, Serialize};

fn default_p_u() -> f64 {
    1.0
}

fn default_realizations() -> u64 {
    1
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

fn is_zero_f64(x: &f64) -> bool {
    *x == 0.0
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// Initial-state field: a named register or explicit product counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitSpec {
    Named(String),
    PureProduct { pure_product: [usize; 3] },
}

impl InitSpec {
    fn resolve(&self, l: usize) -> Result<InitState> {
        match self {
            InitSpec::Named(name) => match name.as_str() {
                "classical_register" => Ok(InitState::ClassicalRegister),
                "quantum_register" => Ok(InitState::QuantumRegister),
                "x_product" => Ok(InitState::PureProduct { n_x: l, n_z: 0, n_y: 0 }),
                "half_xz" => Ok(InitState::PureProduct { n_x: l - l / 2, n_z: l / 2, n_y: 0 }),
                other => bail!(
                    "unknown init {other:?}; expected classical_register, \
                     quantum_register, x_product, half_xz or {{ pure_product = [n_x, n_z, n_y] }}"
                ),
            },
            InitSpec::PureProduct { pure_product: [n_x, n_z, n_y] } => {
                Ok(InitState::PureProduct { n_x: *n_x, n_z: *n_z, n_y: *n_y })
            }
        }
    }
}

/// Parameter lists to sweep; the grid is the Cartesian product of every
/// non-empty list, in this field order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(rename = "L", default, skip_serializing_if = "Vec::is_empty")]
    pub l: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub delta_x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub p_e: Vec<f64>,
    #[serde(rename = "p_R", default, skip_serializing_if = "Vec::is_empty")]
    pub p_r: Vec<f64>,
    /// Dephasing fraction of a fixed total attack rate: at each value,
    /// `p_m = total * r_d` and `p_e = total * (1 - r_d)` with the total
    /// taken from the base config's `p_m + p_e`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub r_d: Vec<f64>,
}

impl SweepSpec {
    pub fn is_empty(&self) -> bool {
        self.l.is_empty()
            && self.delta_x.is_empty()
            && self.p_e.is_empty()
            && self.p_r.is_empty()
            && self.r_d.is_empty()
    }
}

/// The full run file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub ancillas: usize,
    #[serde(default = "default_p_u")]
    pub p_u: f64,
    #[serde(default, skip_serializing_if = "is_zero_f64")]
    pub p_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_z: Option<f64>,
    /// Alternative axis parameterization: `(delta_x, p_y)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_x: Option<f64>,
    #[serde(rename = "p_R", default, skip_serializing_if = "is_zero_f64")]
    pub p_r: f64,
    #[serde(default, skip_serializing_if = "is_zero_f64")]
    pub p_e: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    /// Duration in units of L steps; resolved into `steps`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "is_zero_f64")]
    pub warmup_t: f64,
    pub seed: u64,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub eraser: EraserKind,
    pub init: InitSpec,
    #[serde(default = "default_realizations")]
    pub realizations: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<String>,
    /// Sample times in units of L steps; empty means final state only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sample_t: Vec<f64>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub check_entanglement_bound: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

pub fn parse_probe(label: &str) -> Result<Probe> {
    let probe = match label {
        "S_profile" => Probe::EntropyProfile,
        "S_half" => Probe::HalfCut,
        "C_x" => Probe::CoherenceX,
        "C_z" => Probe::CoherenceZ,
        "I2" => Probe::I2,
        "I3" => Probe::I3,
        "coherent_info" => Probe::CoherentInfo,
        "S_system" => Probe::SystemEntropy,
        "I_x" => Probe::ClassicalMutualInfo,
        other => bail!(
            "unknown probe {other:?}; expected one of S_profile, S_half, C_x, C_z, \
             I2, I3, coherent_info, S_system, I_x"
        ),
    };
    Ok(probe)
}

/// One grid point of a sweep: the overridden coordinates plus the resolved
/// circuit config.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub l: usize,
    pub delta_x: f64,
    pub p_e: f64,
    pub p_r: f64,
    pub r_d: Option<f64>,
    pub config: CircuitConfig,
}

impl RunFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: RunFile = toml::from_str(text).context("parsing run file")?;
        file.validate()?;
        Ok(file)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<()> {
        if self.steps.is_none() && self.t.is_none() {
            bail!("one of `steps` or `t` is required");
        }
        if self.steps.is_some() && self.t.is_some() {
            bail!("`steps` and `t` are mutually exclusive");
        }
        if self.delta_x.is_some() && (self.p_x.is_some() || self.p_z.is_some()) {
            bail!("`delta_x` and explicit `p_x`/`p_z` are mutually exclusive");
        }
        if self.delta_x.is_some() && self.p_y.is_none() {
            bail!("`delta_x` requires `p_y`");
        }
        if self.realizations == 0 {
            bail!("`realizations` must be at least 1");
        }
        Ok(())
    }

    /// The canonical echo: the same run resolved to explicit axis rates and
    /// step counts, so that re-running the echo reproduces the output.
    pub fn resolved(&self) -> Result<RunFile> {
        let mut file = self.clone();
        let base = self.base_config()?;
        file.p_x = Some(base.p_x);
        file.p_y = Some(base.p_y);
        file.p_z = Some(base.p_z);
        file.delta_x = None;
        file.steps = Some(base.steps);
        file.t = None;
        Ok(file)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn base_config(&self) -> Result<CircuitConfig> {
        let steps = match (self.steps, self.t) {
            (Some(steps), _) => steps,
            (None, Some(t)) => CircuitConfig::steps_for_time(self.l, t),
            (None, None) => bail!("one of `steps` or `t` is required"),
        };
        let mut config = CircuitConfig {
            system_len: self.l,
            ancilla_count: self.ancillas,
            p_u: self.p_u,
            p_m: self.p_m,
            p_r: self.p_r,
            p_e: self.p_e,
            p_x: self.p_x.unwrap_or(0.0),
            p_y: self.p_y.unwrap_or(0.0),
            p_z: self.p_z.unwrap_or(0.0),
            steps,
            warmup_steps: CircuitConfig::steps_for_time(self.l, self.warmup_t),
            boundary: self.boundary,
            seed: self.seed,
            eraser: self.eraser,
            init: self.init.resolve(self.l)?,
        };
        if let Some(delta_x) = self.delta_x {
            let p_y = self.p_y.context("`delta_x` requires `p_y`")?;
            config.set_delta_x(delta_x, p_y);
        }
        config.validate().map_err(|e| anyhow::anyhow!(e.to_string()))?;
        Ok(config)
    }

    pub fn schedule(&self, config: &CircuitConfig) -> Result<ProbeSchedule> {
        let probes = self
            .probes
            .iter()
            .map(|label| parse_probe(label))
            .collect::<Result<Vec<_>>>()?;
        let mut schedule = if self.sample_t.is_empty() {
            ProbeSchedule::final_only(config, probes)
        } else {
            ProbeSchedule::at_times(config.system_len, &self.sample_t, probes)
        };
        schedule.check_entanglement_bound = self.check_entanglement_bound;
        Ok(schedule)
    }

    /// Expand the sweep grid. A missing or empty sweep table yields the
    /// single base point. Each point gets a decorrelated child seed derived
    /// from the base seed and its grid index.
    pub fn sweep_points(&self) -> Result<Vec<SweepPoint>> {
        let base = self.base_config()?;
        let sweep = self.sweep.clone().unwrap_or_default();
        let ls = if sweep.l.is_empty() { vec![base.system_len] } else { sweep.l };
        let deltas: Vec<Option<f64>> = if sweep.delta_x.is_empty() {
            vec![None]
        } else {
            sweep.delta_x.iter().copied().map(Some).collect()
        };
        let p_es: Vec<Option<f64>> = if sweep.p_e.is_empty() {
            vec![None]
        } else {
            sweep.p_e.iter().copied().map(Some).collect()
        };
        let p_rs: Vec<Option<f64>> = if sweep.p_r.is_empty() {
            vec![None]
        } else {
            sweep.p_r.iter().copied().map(Some).collect()
        };
        let r_ds: Vec<Option<f64>> = if sweep.r_d.is_empty() {
            vec![None]
        } else {
            sweep.r_d.iter().copied().map(Some).collect()
        };
        let attack_total = base.p_m + base.p_e;

        let mut points = Vec::new();
        let mut index = 0u64;
        for &l in &ls {
            for &delta in &deltas {
                for &p_e in &p_es {
                    for &p_r in &p_rs {
                        for &r_d in &r_ds {
                            let mut config = base.clone();
                            if l != base.system_len {
                                config.system_len = l;
                                // Keep durations fixed in units of t.
                                config.steps = CircuitConfig::steps_for_time(
                                    l,
                                    base.steps as f64 / base.system_len as f64,
                                );
                                config.warmup_steps = CircuitConfig::steps_for_time(
                                    l,
                                    base.warmup_steps as f64 / base.system_len as f64,
                                );
                                if let InitState::PureProduct { n_x: _, n_z, n_y } = base.init {
                                    let scale = |n: usize| n * l / base.system_len;
                                    let (n_z, n_y) = (scale(n_z), scale(n_y));
                                    config.init = InitState::PureProduct {
                                        n_x: l - n_z - n_y,
                                        n_z,
                                        n_y,
                                    };
                                }
                            }
                            if let Some(delta) = delta {
                                let p_y = config.p_y;
                                config.set_delta_x(delta, p_y);
                            }
                            if let Some(p_e) = p_e {
                                config.p_e = p_e;
                            }
                            if let Some(p_r) = p_r {
                                config.p_r = p_r;
                            }
                            if let Some(r_d) = r_d {
                                config.p_m = attack_total * r_d;
                                config.p_e = attack_total * (1.0 - r_d);
                            }
                            config.seed =
                                self.seed.wrapping_add(1_000_003u64.wrapping_mul(index));
                            config
                                .validate()
                                .map_err(|e| anyhow::anyhow!("grid point {index}: {e}"))?;
                            points.push(SweepPoint {
                                l: config.system_len,
                                delta_x: config.delta_x(),
                                p_e: config.p_e,
                                p_r: config.p_r,
                                r_d,
                                config,
                            });
                            index += 1;
                        }
                    }
                }
            }
        }
        Ok(points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
L = 16
seed = 7
t = 10.0
init = "x_product"
probes = ["C_x"]
"#;

    #[test]
    fn minimal_file_resolves() {
        let file = RunFile::parse(MINIMAL).unwrap();
        let config = file.base_config().unwrap();
        assert_eq!(config.system_len, 16);
        assert_eq!(config.steps, 160);
        assert_eq!(config.init, InitState::PureProduct { n_x: 16, n_z: 0, n_y: 0 });
    }

    #[test]
    fn resolved_echo_round_trips() {
        let text = r#"
L = 8
seed = 1
t = 2.0
p_m = 0.5
p_y = 0.25
delta_x = 0.3333
init = { pure_product = [4, 4, 0] }
probes = ["I3", "C_x"]
sample_t = [1.0, 2.0]
"#;
        let file = RunFile::parse(text).unwrap();
        let echo = file.resolved().unwrap().to_toml().unwrap();
        let reparsed = RunFile::parse(&echo).unwrap();
        assert_eq!(reparsed.base_config().unwrap(), file.base_config().unwrap());
        // The echo of the echo is byte-identical.
        assert_eq!(reparsed.resolved().unwrap().to_toml().unwrap(), echo);
    }

    #[test]
    fn sweep_grid_expands_in_field_order() {
        let text = r#"
L = 8
seed = 3
steps = 80
p_m = 0.04
p_e = 0.01
p_x = 1.0
init = "x_product"

[sweep]
L = [8, 12]
r_d = [0.5, 1.0]
"#;
        let file = RunFile::parse(text).unwrap();
        let points = file.sweep_points().unwrap();
        assert_eq!(points.len(), 4);
        assert_eq!(points[0].l, 8);
        assert_eq!(points[1].r_d, Some(1.0));
        assert!((points[1].config.p_m - 0.05).abs() < 1e-12);
        assert!((points[1].config.p_e - 0.0).abs() < 1e-12);
        assert_eq!(points[2].l, 12);
        // Durations scale with L to keep t fixed.
        assert_eq!(points[2].config.steps, 120);
        // Seeds are decorrelated but deterministic.
        let again = file.sweep_points().unwrap();
        assert_eq!(again[3].config.seed, points[3].config.seed);
        assert_ne!(points[0].config.seed, points[1].config.seed);
    }

    #[test]
    fn conflicting_keys_are_rejected() {
        assert!(RunFile::parse("L = 4\nseed = 0\ninit = \"x_product\"").is_err());
        let both = "L = 4\nseed = 0\nt = 1.0\nsteps = 4\ninit = \"x_product\"";
        assert!(RunFile::parse(both).is_err());
        let delta_and_px =
            "L = 4\nseed = 0\nt = 1.0\ninit = \"x_product\"\ndelta_x = 0.1\np_x = 0.5\np_y = 0.2";
        assert!(RunFile::parse(delta_and_px).is_err());
        let unknown = "L = 4\nseed = 0\nt = 1.0\ninit = \"x_product\"\nbogus = 1";
        assert!(RunFile::parse(unknown).is_err());
    }
}
