//! Experiment configs, batch commands and their CSV/JSON artifacts.
//!
//! A config is a single TOML document; see `configs/README.md` at the
//! repository root for the schema. Loading validates every section and fills
//! defaults, so a loaded [`Experiment`] is ready to run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::distribution::{sample_density, EnvDistribution, Envelope, MixtureParams};
use crate::dynamics::{
    gap_report, propagate, steady_state, Drive, GapReport, PropagationOptions, Trajectory, Waveform,
};
use crate::error::{Error, Result};
use crate::gas::{GasCoupling, QuadratureSpec, DEFAULT_COUPLING_SCALE};
use crate::learning::{
    run_ga_with, EnvironmentKind, GaConfig, GaRun, GenerationStats, ObjectiveMode, ObjectiveSpec,
    Physics,
};
use crate::quantum::{CMatrix, DensityMatrix, SystemSpec};
use crate::radiation::{RadiationCoupling, DEFAULT_G0};

pub const GENERATIONS_CSV: &str = "generations.csv";
pub const DISTRIBUTION_CSV: &str = "distribution.csv";
pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const BEST_PARAMS_CSV: &str = "best_params.csv";
pub const SUMMARY_JSON: &str = "summary.json";
/// Written next to partial artifacts when a simulation fails midway.
pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_true() -> bool {
    true
}
fn default_g0() -> f64 {
    DEFAULT_G0
}
fn default_scale() -> f64 {
    DEFAULT_COUPLING_SCALE
}
fn default_mass() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub dynamics: PropagationOptions,
    pub system: SystemSection,
    pub environment: EnvironmentSection,
    pub distribution: DistributionSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<StateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<StateSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observables: Vec<ObservableSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ga: Option<GaConfig>,
    #[serde(default)]
    pub sampling: SamplingSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub energies: Vec<f64>,
    /// Row-major.
    pub dipole: Vec<Vec<f64>>,
    #[serde(default = "default_true")]
    pub require_zero_diagonal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnvironmentSection {
    Radiation {
        #[serde(default = "default_g0")]
        g0: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        drive: Option<DriveSection>,
    },
    Gas {
        windows: Vec<(f64, f64)>,
        #[serde(default = "default_scale")]
        coupling_scale: f64,
        #[serde(default = "default_mass")]
        mass: f64,
        #[serde(default)]
        quadrature: QuadratureSection,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    pub times: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    pub k_min: f64,
    pub k_max: f64,
    pub nodes: usize,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        let q = QuadratureSpec::default();
        Self {
            k_min: q.k_min(),
            k_max: q.k_max(),
            nodes: q.nodes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistributionSection {
    Optimize,
    Mixture {
        centers: Vec<f64>,
        widths: Vec<f64>,
        /// Defaults to the environment's envelope.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        envelope: Option<Envelope>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
    },
    Planck {
        temperature: f64,
    },
    Boltzmann {
        beta: f64,
        total_density: f64,
        mass: f64,
    },
    Vacuum,
}

/// Either `diagonal` populations or a full matrix as `real` (+ optional `imag`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagonal: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub real: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imag: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSection {
    pub real: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imag: Option<Vec<Vec<f64>>>,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    pub k_min: f64,
    pub k_max: f64,
    pub points: usize,
}

impl Default for SamplingSection {
    fn default() -> Self {
        Self {
            k_min: 0.0,
            k_max: 40.0,
            points: 401,
        }
    }
}

/// A validated config with its runtime objects built.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub system: SystemSpec,
    pub physics: Physics,
    pub drive: Option<Drive>,
    /// `None` when the distribution is to be optimized.
    pub distribution: Option<EnvDistribution>,
    pub initial: DensityMatrix,
    pub objective: Option<ObjectiveSpec>,
    pub ga: Option<GaConfig>,
}

pub fn load_config(path: impl AsRef<Path>) -> Result<Experiment> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_config(text: &str) -> Result<Experiment> {
    let config: ExperimentConfig =
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    Experiment::from_config(config)
}

fn matrix(rows: &[Vec<f64>], d: usize, field: &'static str) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::param(field, format!("expected a {d}x{d} matrix")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

fn complex_matrix(
    real: &[Vec<f64>],
    imag: Option<&Vec<Vec<f64>>>,
    d: usize,
    field: &'static str,
) -> Result<CMatrix> {
    let re = matrix(real, d, field)?;
    let im = match imag {
        Some(rows) => matrix(rows, d, field)?,
        None => DMatrix::zeros(d, d),
    };
    Ok(CMatrix::from_fn(d, d, |i, j| {
        Complex64::new(re[(i, j)], im[(i, j)])
    }))
}

impl StateSection {
    fn build(&self, d: usize, field: &'static str) -> Result<DensityMatrix> {
        match (&self.diagonal, &self.real) {
            (Some(p), None) if self.imag.is_none() => {
                if p.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        actual: p.len(),
                    });
                }
                DensityMatrix::from_diagonal(p)
            }
            (None, Some(re)) => {
                DensityMatrix::new(complex_matrix(re, self.imag.as_ref(), d, field)?)
            }
            _ => Err(Error::param(
                field,
                "give either `diagonal` or `real` (with optional `imag`)",
            )),
        }
    }
}

impl Experiment {
    pub fn from_config(config: ExperimentConfig) -> Result<Self> {
        let s = &config.system;
        let d = s.energies.len();
        let dipole = matrix(&s.dipole, d, "system.dipole")?;
        let system = SystemSpec::with_options(s.energies.clone(), dipole, s.require_zero_diagonal)?;

        let (physics, waveform) = match &config.environment {
            EnvironmentSection::Radiation { g0, drive } => {
                let mut coupling = RadiationCoupling::new(*g0)?;
                let waveform = match drive {
                    Some(dr) => Some(Waveform::new(dr.times.clone(), dr.amplitudes.clone())?),
                    None => None,
                };
                if let Some(w) = &waveform {
                    coupling = coupling.with_drive(w.clone());
                }
                (Physics::Radiation(coupling), waveform)
            }
            EnvironmentSection::Gas {
                windows,
                coupling_scale,
                mass,
                quadrature,
            } => {
                let coupling = GasCoupling::new(windows.clone(), *coupling_scale, *mass)?;
                coupling.check(&system)?;
                let q = QuadratureSpec::new(quadrature.k_min, quadrature.k_max, quadrature.nodes)?;
                (Physics::Gas(coupling, q), None)
            }
        };
        let drive = waveform.map(|waveform| Drive {
            waveform,
            dipole: system.dipole_complex(),
        });

        let distribution = match &config.distribution {
            DistributionSection::Optimize => None,
            DistributionSection::Mixture {
                centers,
                widths,
                envelope,
                beta,
            } => {
                let (env_default, beta_default) = physics.kind().envelope();
                Some(EnvDistribution::Mixture(MixtureParams::new(
                    centers.clone(),
                    widths.clone(),
                    envelope.unwrap_or(env_default),
                    beta.unwrap_or(beta_default),
                )?))
            }
            DistributionSection::Planck { temperature } => {
                Some(EnvDistribution::planck(*temperature)?)
            }
            DistributionSection::Boltzmann {
                beta,
                total_density,
                mass,
            } => Some(EnvDistribution::boltzmann(*beta, *total_density, *mass)?),
            DistributionSection::Vacuum => Some(EnvDistribution::Vacuum),
        };

        let initial = match &config.initial {
            Some(st) => st.build(d, "initial")?,
            None => DensityMatrix::ground(d),
        };
        config.dynamics.validate()?;

        let target = config
            .target
            .as_ref()
            .map(|t| t.build(d, "target"))
            .transpose()?;
        let mode = if !config.observables.is_empty() {
            let obs = config
                .observables
                .iter()
                .map(|o| {
                    Ok((
                        complex_matrix(&o.real, o.imag.as_ref(), d, "observables")?,
                        o.value,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            Some(ObjectiveMode::Observables(obs))
        } else {
            target.map(ObjectiveMode::StateDistance)
        };
        let objective = mode
            .map(|m| {
                ObjectiveSpec::new(
                    m,
                    system.clone(),
                    physics.clone(),
                    initial.clone(),
                    config.dynamics,
                )
            })
            .transpose()?;

        let ga = match (&config.ga, distribution.is_none()) {
            (Some(g), _) => {
                let mut g = g.clone();
                g.seed = config.seed;
                g.validate()?;
                Some(g)
            }
            (None, true) => Some(GaConfig {
                seed: config.seed,
                ..GaConfig::default()
            }),
            (None, false) => None,
        };
        if distribution.is_none() && objective.is_none() {
            return Err(Error::param(
                "target",
                "optimization needs a target or observables",
            ));
        }

        let sm = &config.sampling;
        if !(sm.k_min >= 0.0 && sm.k_min < sm.k_max && sm.k_max.is_finite()) {
            return Err(Error::InvalidRange {
                lo: sm.k_min,
                hi: sm.k_max,
            });
        }
        if sm.points < 2 {
            return Err(Error::param("sampling.points", "need at least two samples"));
        }

        Ok(Self {
            config,
            system,
            physics,
            drive,
            distribution,
            initial,
            objective,
            ga,
        })
    }

    /// Rebuilds with a different seed; the config echo follows.
    pub fn with_seed(self, seed: u64) -> Result<Self> {
        let mut config = self.config;
        config.seed = seed;
        Self::from_config(config)
    }

    pub fn with_output_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.config.output_dir = dir.into();
        self
    }

    pub fn output_dir(&self) -> &Path {
        &self.config.output_dir
    }

    /// Canonical TOML for this experiment; parsing it rebuilds the same run.
    pub fn config_toml(&self) -> Result<String> {
        toml::to_string(&self.config).map_err(|e| Error::Config(e.to_string()))
    }

    fn fixed_distribution(&self) -> Result<&EnvDistribution> {
        self.distribution.as_ref().ok_or_else(|| {
            Error::param(
                "distribution",
                "this command needs a fixed distribution, not `optimize`",
            )
        })
    }

    fn sample(&self, dist: &EnvDistribution) -> Result<Vec<(f64, f64)>> {
        let sm = &self.config.sampling;
        sample_density(dist, sm.k_min, sm.k_max, sm.points)
    }
}

/// Float formatting shared by all artifacts: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_csv(
    path: &Path,
    header: &[String],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

fn strings(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

pub fn write_generations(dir: &Path, history: &[GenerationStats]) -> Result<()> {
    write_csv(
        &dir.join(GENERATIONS_CSV),
        &strings(&["generation", "best_J", "avg_J"]),
        history.iter().map(|s| {
            vec![
                s.generation.to_string(),
                fmt_f64(s.best),
                fmt_f64(s.average),
            ]
        }),
    )
}

pub fn write_distribution(dir: &Path, samples: &[(f64, f64)]) -> Result<()> {
    write_csv(
        &dir.join(DISTRIBUTION_CSV),
        &strings(&["k", "n_k"]),
        samples.iter().map(|&(k, n)| vec![fmt_f64(k), fmt_f64(n)]),
    )
}

pub fn write_trajectory(dir: &Path, traj: &Trajectory) -> Result<()> {
    let d = traj.final_state().dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("rho_{i}{i}")));
    header.push("max_offdiag".into());
    write_csv(
        &dir.join(TRAJECTORY_CSV),
        &header,
        traj.times.iter().zip(&traj.states).map(|(&t, rho)| {
            let mut row = vec![fmt_f64(t)];
            row.extend(rho.populations().into_iter().map(fmt_f64));
            row.push(fmt_f64(rho.max_offdiagonal()));
            row
        }),
    )
}

pub fn write_best_params(dir: &Path, params: &MixtureParams) -> Result<()> {
    write_csv(
        &dir.join(BEST_PARAMS_CSV),
        &strings(&["i", "k_i", "D_i"]),
        params
            .centers()
            .iter()
            .zip(params.widths())
            .enumerate()
            .map(|(i, (&k, &w))| vec![(i + 1).to_string(), fmt_f64(k), fmt_f64(w)]),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub real: Vec<Vec<f64>>,
    pub imag: Vec<Vec<f64>>,
}

impl From<&CMatrix> for MatrixRecord {
    fn from(m: &CMatrix) -> Self {
        let rows = |f: fn(&Complex64) -> f64| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        Self {
            real: rows(|z| z.re),
            imag: rows(|z| z.im),
        }
    }
}

/// Contents of `summary.json` after an optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    /// Best objective; `null` if no individual could be scored.
    pub final_j: Option<f64>,
    pub steady_state: MatrixRecord,
    pub populations: Vec<f64>,
    pub best_bits: String,
    pub config_toml: String,
}

pub fn read_summary(dir: &Path) -> Result<Summary> {
    let text = fs::read_to_string(dir.join(SUMMARY_JSON))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{SUMMARY_JSON}: {e}")))
}

#[derive(Debug, Clone)]
pub struct SimulateReport {
    pub final_state: DensityMatrix,
    pub final_time: f64,
    pub converged: bool,
    pub final_j: Option<f64>,
}

/// Propagates the fixed distribution's generator from the initial state and
/// writes `trajectory.csv` and `distribution.csv`.
pub fn cmd_simulate(exp: &Experiment) -> Result<SimulateReport> {
    let dist = exp.fixed_distribution()?;
    let dir = exp.output_dir();
    fs::create_dir_all(dir)?;
    let _ = fs::remove_file(dir.join(INCOMPLETE_MARKER));
    write_distribution(dir, &exp.sample(dist)?)?;
    let traj = exp
        .physics
        .liouvillian(&exp.system, dist)
        .and_then(|l| propagate(&l, &exp.initial, &exp.config.dynamics, exp.drive.as_ref()));
    let traj = match traj {
        Ok(t) => t,
        Err(e) => {
            fs::write(dir.join(INCOMPLETE_MARKER), format!("{e}\n"))?;
            return Err(e);
        }
    };
    write_trajectory(dir, &traj)?;
    let final_j = exp
        .objective
        .as_ref()
        .map(|o| o.score(traj.final_state()))
        .transpose()?;
    Ok(SimulateReport {
        final_state: traj.final_state().clone(),
        final_time: traj.final_time(),
        converged: traj.converged,
        final_j,
    })
}

#[derive(Debug, Clone)]
pub struct OptimizeReport {
    pub run: GaRun,
    pub summary: Summary,
}

impl OptimizeReport {
    pub fn best_objective(&self) -> f64 {
        self.run.best_objective()
    }
}

pub fn cmd_optimize(exp: &Experiment) -> Result<OptimizeReport> {
    cmd_optimize_with(exp, |_| {})
}

/// Runs the GA and writes the four CSVs plus `summary.json`. The trajectory
/// is the undriven relaxation from the initial state under the best
/// distribution.
pub fn cmd_optimize_with(
    exp: &Experiment,
    on_generation: impl FnMut(&GenerationStats),
) -> Result<OptimizeReport> {
    if exp.distribution.is_some() {
        return Err(Error::param(
            "distribution",
            "optimize needs `kind = \"optimize\"`",
        ));
    }
    let objective = exp.objective.as_ref().expect("checked at load");
    let ga = exp.ga.as_ref().expect("filled at load");
    let dir = exp.output_dir();
    fs::create_dir_all(dir)?;

    let run = run_ga_with(ga, objective, on_generation)?;
    let best = run.best_distribution();
    let l = exp.physics.liouvillian(&exp.system, &best)?;
    let traj = propagate(&l, &exp.initial, &exp.config.dynamics, None)?;
    let steady = objective.final_state(&best)?;

    write_generations(dir, &run.history)?;
    write_distribution(dir, &exp.sample(&best)?)?;
    write_trajectory(dir, &traj)?;
    write_best_params(dir, &run.best_params)?;

    let j = run.best_objective();
    let summary = Summary {
        seed: exp.config.seed,
        final_j: j.is_finite().then_some(j),
        steady_state: MatrixRecord::from(steady.matrix()),
        populations: steady.populations(),
        best_bits: run.best.bit_string(),
        config_toml: exp.config_toml()?,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(dir.join(SUMMARY_JSON), json + "\n")?;
    Ok(OptimizeReport { run, summary })
}

#[derive(Debug, Clone)]
pub struct SteadyReport {
    /// `None` when the invariant state is not unique.
    pub state: Option<DensityMatrix>,
    pub gap: GapReport,
}

impl SteadyReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        match &self.state {
            Some(rho) => {
                let m = rho.matrix();
                s.push_str("steady state (real part):\n");
                for i in 0..m.nrows() {
                    let row: Vec<String> = (0..m.ncols())
                        .map(|j| format!("{:+.10}", m[(i, j)].re))
                        .collect();
                    let _ = writeln!(s, "  {}", row.join(" "));
                }
                let _ = writeln!(s, "max |off-diagonal|: {:.3e}", rho.max_offdiagonal());
            }
            None => {
                let _ = writeln!(
                    s,
                    "steady state is ambiguous: null-space dimension {}",
                    self.gap.null_dim
                );
            }
        }
        let sv: Vec<String> = self
            .gap
            .singular_values
            .iter()
            .take(4)
            .map(|x| format!("{x:.3e}"))
            .collect();
        let _ = writeln!(s, "smallest singular values: {}", sv.join(" "));
        let _ = writeln!(s, "threshold: {:.3e}", self.gap.threshold);
        let _ = writeln!(s, "null-space dimension: {}", self.gap.null_dim);
        s
    }
}

pub fn cmd_steady(exp: &Experiment) -> Result<SteadyReport> {
    let l = exp
        .physics
        .liouvillian(&exp.system, exp.fixed_distribution()?)?;
    match steady_state(&l) {
        Ok((rho, gap)) => Ok(SteadyReport {
            state: Some(rho),
            gap,
        }),
        Err(Error::AmbiguousSteadyState { .. }) => Ok(SteadyReport {
            state: None,
            gap: gap_report(&l),
        }),
        Err(e) => Err(e),
    }
}

/// Samples the fixed distribution and writes `distribution.csv`.
pub fn cmd_sample_dist(exp: &Experiment) -> Result<Vec<(f64, f64)>> {
    let samples = exp.sample(exp.fixed_distribution()?)?;
    let dir = exp.output_dir();
    fs::create_dir_all(dir)?;
    write_distribution(dir, &samples)?;
    Ok(samples)
}

impl EnvironmentSection {
    pub fn kind(&self) -> EnvironmentKind {
        match self {
            EnvironmentSection::Radiation { .. } => EnvironmentKind::Radiation,
            EnvironmentSection::Gas { .. } => EnvironmentKind::Gas,
        }
    }
}
