//! Closed-loop learning control: a bitstring genetic algorithm over mixture
//! parameters, scored through the steady state of the chosen dissipator.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::{
    EnvDistribution, Envelope, MixtureParams, GAS_ENVELOPE_BETA, RADIATION_ENVELOPE_BETA,
};
use crate::dynamics::{propagate, steady_state, PropagationOptions};
use crate::error::{Error, Result};
use crate::gas::{build_gas_liouvillian, GasCoupling, QuadratureSpec};
use crate::quantum::{
    frobenius_distance, frobenius_norm, CMatrix, DensityMatrix, Superoperator, SystemSpec,
};
use crate::radiation::{build_radiation_liouvillian, RadiationCoupling};

/// Offset in the selection weight f = 1/(J + 0.01).
pub const FITNESS_OFFSET: f64 = 0.01;

fn default_population() -> usize {
    14
}
fn default_bits() -> usize {
    20
}
fn default_params() -> usize {
    20
}
fn default_crossover() -> f64 {
    0.9
}
fn default_mutation() -> f64 {
    0.7 / 400.0
}
fn default_elites() -> usize {
    2
}
fn default_generations() -> usize {
    100
}
fn default_k_range() -> (f64, f64) {
    (0.0, 30.0)
}
fn default_d_range() -> (f64, f64) {
    (0.01, 10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaConfig {
    #[serde(default = "default_population")]
    pub population_size: usize,
    #[serde(default = "default_bits")]
    pub bits_per_param: usize,
    /// Half are centers k_i, half are widths D_i.
    #[serde(default = "default_params")]
    pub params_per_individual: usize,
    #[serde(default = "default_crossover")]
    pub crossover_prob: f64,
    #[serde(default = "default_mutation")]
    pub mutation_prob_per_bit: f64,
    #[serde(default = "default_elites")]
    pub elite_count: usize,
    #[serde(default = "default_generations")]
    pub generations: usize,
    #[serde(default = "default_k_range")]
    pub k_range: (f64, f64),
    #[serde(default = "default_d_range")]
    pub d_range: (f64, f64),
    /// Set from the experiment's top-level seed rather than this table.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: default_population(),
            bits_per_param: default_bits(),
            params_per_individual: default_params(),
            crossover_prob: default_crossover(),
            mutation_prob_per_bit: default_mutation(),
            elite_count: default_elites(),
            generations: default_generations(),
            k_range: default_k_range(),
            d_range: default_d_range(),
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size <= self.elite_count {
            return Err(Error::param(
                "population_size",
                format!(
                    "must exceed elite_count ({} <= {})",
                    self.population_size, self.elite_count
                ),
            ));
        }
        if !(1..=52).contains(&self.bits_per_param) {
            return Err(Error::param("bits_per_param", "must be in 1..=52"));
        }
        if self.params_per_individual < 2 || !self.params_per_individual.is_multiple_of(2) {
            return Err(Error::param(
                "params_per_individual",
                "must be a positive even number",
            ));
        }
        for (name, p) in [
            ("crossover_prob", self.crossover_prob),
            ("mutation_prob_per_bit", self.mutation_prob_per_bit),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param(name, "must be a probability in [0, 1]"));
            }
        }
        let (klo, khi) = self.k_range;
        if !(0.0 <= klo && klo < khi && khi.is_finite()) {
            return Err(Error::param(
                "k_range",
                format!("invalid range [{klo}, {khi}]"),
            ));
        }
        let (dlo, dhi) = self.d_range;
        if !(0.0 < dlo && dlo < dhi && dhi.is_finite()) {
            return Err(Error::param(
                "d_range",
                format!("invalid range [{dlo}, {dhi}]"),
            ));
        }
        Ok(())
    }

    pub fn bit_length(&self) -> usize {
        self.bits_per_param * self.params_per_individual
    }

    pub fn components(&self) -> usize {
        self.params_per_individual / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvironmentKind {
    Radiation,
    Gas,
}

impl EnvironmentKind {
    /// Mixture envelope used when decoding individuals for this environment.
    pub fn envelope(self) -> (Envelope, f64) {
        match self {
            EnvironmentKind::Radiation => (Envelope::LinearExp, RADIATION_ENVELOPE_BETA),
            EnvironmentKind::Gas => (Envelope::QuadraticExp, GAS_ENVELOPE_BETA),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub bits: Vec<bool>,
    pub objective: Option<f64>,
}

impl Individual {
    pub fn new(bits: Vec<bool>) -> Self {
        Self {
            bits,
            objective: None,
        }
    }

    pub fn random(len: usize, rng: &mut impl Rng) -> Self {
        Self::new((0..len).map(|_| rng.gen::<bool>()).collect())
    }

    pub fn bit_string(&self) -> String {
        self.bits
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect()
    }
}

fn group_value(bits: &[bool]) -> u64 {
    bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
}

/// Maps each MSB-first group linearly onto its range: the first half of the
/// groups are centers, the second half widths.
pub fn decode_individual(
    ind: &Individual,
    cfg: &GaConfig,
    kind: EnvironmentKind,
) -> Result<MixtureParams> {
    let len = cfg.bit_length();
    if ind.bits.len() != len {
        return Err(Error::LengthMismatch {
            expected: len,
            actual: ind.bits.len(),
        });
    }
    let max = ((1u64 << cfg.bits_per_param) - 1) as f64;
    let decode =
        |group: &[bool], (lo, hi): (f64, f64)| lo + group_value(group) as f64 * (hi - lo) / max;
    let mut groups = ind.bits.chunks(cfg.bits_per_param);
    let n = cfg.components();
    let centers: Vec<f64> = groups
        .by_ref()
        .take(n)
        .map(|g| decode(g, cfg.k_range))
        .collect();
    let widths: Vec<f64> = groups.map(|g| decode(g, cfg.d_range)).collect();
    let (envelope, beta) = kind.envelope();
    MixtureParams::new(centers, widths, envelope, beta)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Physics {
    Radiation(RadiationCoupling),
    Gas(GasCoupling, QuadratureSpec),
}

impl Physics {
    pub fn kind(&self) -> EnvironmentKind {
        match self {
            Physics::Radiation(_) => EnvironmentKind::Radiation,
            Physics::Gas(..) => EnvironmentKind::Gas,
        }
    }

    pub fn liouvillian(&self, spec: &SystemSpec, dist: &EnvDistribution) -> Result<Superoperator> {
        match self {
            Physics::Radiation(c) => build_radiation_liouvillian(spec, dist, c),
            Physics::Gas(c, q) => build_gas_liouvillian(spec, dist, c, q),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveMode {
    /// J = ‖ρ − ρ_target‖_F
    StateDistance(DensityMatrix),
    /// J = Σ_i (Tr ρΘ_i − θ_i)²
    Observables(Vec<(CMatrix, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    pub mode: ObjectiveMode,
    pub system: SystemSpec,
    pub physics: Physics,
    pub initial: DensityMatrix,
    pub dynamics: PropagationOptions,
}

impl ObjectiveSpec {
    pub fn new(
        mode: ObjectiveMode,
        system: SystemSpec,
        physics: Physics,
        initial: DensityMatrix,
        dynamics: PropagationOptions,
    ) -> Result<Self> {
        let d = system.dim();
        match &mode {
            ObjectiveMode::StateDistance(t) if t.dim() != d => {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: t.dim(),
                })
            }
            ObjectiveMode::Observables(obs) => {
                for (theta, _) in obs {
                    if theta.nrows() != d || theta.ncols() != d {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            actual: theta.nrows(),
                        });
                    }
                    if frobenius_norm(&(theta - theta.adjoint())) > 1e-10 {
                        return Err(Error::param("observables", "observable is not Hermitian"));
                    }
                }
            }
            _ => {}
        }
        if initial.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: initial.dim(),
            });
        }
        dynamics.validate()?;
        Ok(Self {
            mode,
            system,
            physics,
            initial,
            dynamics,
        })
    }

    /// Long-time state under `dist`: the unique invariant state, or the end
    /// of a propagation from the initial state when it is not unique.
    pub fn final_state(&self, dist: &EnvDistribution) -> Result<DensityMatrix> {
        let l = self.physics.liouvillian(&self.system, dist)?;
        match steady_state(&l) {
            Ok((rho, _)) => Ok(rho),
            Err(Error::AmbiguousSteadyState { .. }) => {
                Ok(propagate(&l, &self.initial, &self.dynamics, None)?
                    .final_state()
                    .clone())
            }
            Err(e) => Err(e),
        }
    }

    pub fn score(&self, rho: &DensityMatrix) -> Result<f64> {
        match &self.mode {
            ObjectiveMode::StateDistance(target) => frobenius_distance(rho, target),
            ObjectiveMode::Observables(obs) => Ok(obs
                .iter()
                .map(|(theta, want)| ((rho.matrix() * theta).trace().re - want).powi(2))
                .sum()),
        }
    }

    pub fn evaluate_distribution(&self, dist: &EnvDistribution) -> Result<f64> {
        let j = self.score(&self.final_state(dist)?)?;
        Ok(if j.is_nan() { f64::INFINITY } else { j })
    }
}

/// Scores an individual, caching the result. Failures score +∞.
pub fn evaluate(ind: &mut Individual, cfg: &GaConfig, objective: &ObjectiveSpec) -> f64 {
    if let Some(j) = ind.objective {
        return j;
    }
    let j = decode_individual(ind, cfg, objective.physics.kind())
        .and_then(|m| objective.evaluate_distribution(&EnvDistribution::Mixture(m)))
        .unwrap_or(f64::INFINITY);
    ind.objective = Some(j);
    j
}

/// Evaluates every uncached individual in parallel; results land in
/// individual order, so the outcome does not depend on the worker count.
pub fn evaluate_population(pop: &mut [Individual], cfg: &GaConfig, objective: &ObjectiveSpec) {
    pop.par_iter_mut().for_each(|ind| {
        evaluate(ind, cfg, objective);
    });
}

pub fn fitness(objective: f64) -> f64 {
    if objective.is_finite() {
        1.0 / (objective + FITNESS_OFFSET)
    } else {
        0.0
    }
}

/// Index drawn with probability proportional to `weights`; uniform if all
/// weights are zero.
pub fn roulette_select(weights: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return rng.gen_range(0..weights.len());
    }
    let mut x = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if x < w {
            return i;
        }
        x -= w;
    }
    weights
        .iter()
        .rposition(|&w| w > 0.0)
        .expect("positive total")
}

pub fn crossover_one_point(a: &[bool], b: &[bool], point: usize) -> (Vec<bool>, Vec<bool>) {
    assert_eq!(a.len(), b.len());
    assert!(point <= a.len());
    let mut c1 = a[..point].to_vec();
    c1.extend_from_slice(&b[point..]);
    let mut c2 = b[..point].to_vec();
    c2.extend_from_slice(&a[point..]);
    (c1, c2)
}

/// Flips each bit independently with probability `p`; returns the flip count.
pub fn mutate(bits: &mut [bool], p: f64, rng: &mut impl Rng) -> usize {
    let mut flips = 0;
    for b in bits.iter_mut() {
        if rng.gen::<f64>() < p {
            *b = !*b;
            flips += 1;
        }
    }
    flips
}

/// Indices sorted by objective, ties broken by lower index.
fn ranking(pop: &[Individual]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.sort_by(|&a, &b| {
        let ja = pop[a].objective.unwrap_or(f64::INFINITY);
        let jb = pop[b].objective.unwrap_or(f64::INFINITY);
        ja.total_cmp(&jb)
    });
    order
}

/// One generation: elites are copied unchanged, the rest are offspring of
/// roulette-selected parents via single-point crossover and bit-flip mutation.
pub fn ga_step(pop: &[Individual], cfg: &GaConfig, rng: &mut impl Rng) -> Vec<Individual> {
    let order = ranking(pop);
    let mut next: Vec<Individual> = order
        .iter()
        .take(cfg.elite_count)
        .map(|&i| pop[i].clone())
        .collect();
    let weights: Vec<f64> = pop
        .iter()
        .map(|ind| fitness(ind.objective.unwrap_or(f64::INFINITY)))
        .collect();
    let len = cfg.bit_length();
    while next.len() < cfg.population_size {
        let pa = &pop[roulette_select(&weights, rng)];
        let pb = &pop[roulette_select(&weights, rng)];
        let crossed = rng.gen::<f64>() < cfg.crossover_prob && len > 1;
        let mut children = if crossed {
            let point = rng.gen_range(1..len);
            let (c1, c2) = crossover_one_point(&pa.bits, &pb.bits, point);
            [(Individual::new(c1), true), (Individual::new(c2), true)]
        } else {
            [(pa.clone(), false), (pb.clone(), false)]
        };
        for (child, changed) in children.iter_mut() {
            if mutate(&mut child.bits, cfg.mutation_prob_per_bit, rng) > 0 {
                *changed = true;
            }
            if *changed {
                child.objective = None;
            }
        }
        for (child, _) in children {
            if next.len() < cfg.population_size {
                next.push(child);
            }
        }
    }
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub average: f64,
}

fn stats(generation: usize, pop: &[Individual]) -> GenerationStats {
    let js: Vec<f64> = pop
        .iter()
        .map(|i| i.objective.unwrap_or(f64::INFINITY))
        .collect();
    let best = js.iter().copied().fold(f64::INFINITY, f64::min);
    let finite: Vec<f64> = js.iter().copied().filter(|j| j.is_finite()).collect();
    let average = if finite.is_empty() {
        f64::INFINITY
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    };
    GenerationStats {
        generation,
        best,
        average,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaRun {
    /// Generation 0 is the random initial population.
    pub history: Vec<GenerationStats>,
    pub best: Individual,
    pub best_params: MixtureParams,
    pub final_population: Vec<Individual>,
}

impl GaRun {
    pub fn best_objective(&self) -> f64 {
        self.best.objective.unwrap_or(f64::INFINITY)
    }

    pub fn best_distribution(&self) -> EnvDistribution {
        EnvDistribution::Mixture(self.best_params.clone())
    }
}

pub fn run_ga(cfg: &GaConfig, objective: &ObjectiveSpec) -> Result<GaRun> {
    run_ga_with(cfg, objective, |_| {})
}

/// Like [`run_ga`], calling `on_generation` after each generation is scored.
pub fn run_ga_with(
    cfg: &GaConfig,
    objective: &ObjectiveSpec,
    mut on_generation: impl FnMut(&GenerationStats),
) -> Result<GaRun> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let len = cfg.bit_length();
    let mut pop: Vec<Individual> = (0..cfg.population_size)
        .map(|_| Individual::random(len, &mut rng))
        .collect();
    evaluate_population(&mut pop, cfg, objective);
    let mut history = vec![stats(0, &pop)];
    on_generation(&history[0]);
    for g in 1..=cfg.generations {
        pop = ga_step(&pop, cfg, &mut rng);
        evaluate_population(&mut pop, cfg, objective);
        let s = stats(g, &pop);
        on_generation(&s);
        history.push(s);
    }
    let best = pop[ranking(&pop)[0]].clone();
    let best_params = decode_individual(&best, cfg, objective.physics.kind())?;
    Ok(GaRun {
        history,
        best,
        best_params,
        final_population: pop,
    })
}

/// Real-valued Hermitian observable helper.
pub fn real_observable(m: DMatrix<f64>) -> CMatrix {
    m.map(|x| num_complex::Complex64::new(x, 0.0))
}
