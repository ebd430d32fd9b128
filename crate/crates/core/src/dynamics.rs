//! Time propagation, steady states and the Pauli rate-equation propagator.
//!
//! Propagation is classical fixed-step RK4 on the vectorized state. For a
//! time-independent generator one RK4 step is the matrix polynomial
//! `P = I + hL + (hL)²/2 + (hL)³/6 + (hL)⁴/24`, so the steps between two
//! recorded samples are applied as the precomputed power `P^stride`. This is
//! the same scheme, just batched; it makes long horizons cheap.

use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{
    c, devectorize, frobenius_norm, hermitize, max_row_sum, vectorize, CMatrix, CVector,
    DensityMatrix, Superoperator, C64,
};

const DEFAULT_STOP_TOL: f64 = 1e-9;
const DEFAULT_STEP_FACTOR: f64 = 0.05;
const HORIZON_TIMESCALES: f64 = 50.0;
const TARGET_RECORDS: u64 = 1000;
const MAX_STEPS: u64 = 1 << 52;
const TRACE_DRIFT_TOL: f64 = 1e-9;

fn default_stop_tol() -> f64 {
    DEFAULT_STOP_TOL
}

/// Integration controls. Unset fields are derived from the generator: the
/// step is 0.05 over the max row sum of L, the horizon is 50 times the slowest
/// relaxation timescale, and about a thousand samples are recorded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default = "default_stop_tol")]
    pub stop_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<u64>,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            dt: None,
            t_max: None,
            stop_tol: DEFAULT_STOP_TOL,
            record_every: None,
        }
    }
}

impl PropagationOptions {
    pub fn validate(&self) -> Result<()> {
        if let Some(dt) = self.dt {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(Error::param("dt", "must be positive and finite"));
            }
        }
        if let Some(t) = self.t_max {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::param("t_max", "must be positive and finite"));
            }
        }
        if !(self.stop_tol > 0.0) {
            return Err(Error::param("stop_tol", "must be positive"));
        }
        if self.record_every == Some(0) {
            return Err(Error::param("record_every", "must be at least 1"));
        }
        Ok(())
    }

    fn resolve(&self, generator: &CMatrix) -> Result<Resolved> {
        self.validate()?;
        let norm = max_row_sum(generator);
        let dt = self.dt.unwrap_or(if norm > 0.0 {
            DEFAULT_STEP_FACTOR / norm
        } else {
            1.0
        });
        let t_max = match self.t_max {
            Some(t) => t,
            None => HORIZON_TIMESCALES * slowest_timescale(generator).unwrap_or(dt),
        };
        let steps = ((t_max / dt).ceil() as u64).clamp(1, MAX_STEPS);
        let stride = self
            .record_every
            .unwrap_or_else(|| steps.div_ceil(TARGET_RECORDS))
            .clamp(1, steps);
        Ok(Resolved {
            dt: t_max / steps as f64,
            steps,
            stride,
            stop_tol: self.stop_tol,
        })
    }
}

struct Resolved {
    dt: f64,
    steps: u64,
    stride: u64,
    stop_tol: f64,
}

/// Longest timescale of a generator: 1/|Re λ| for the slowest decaying
/// eigenvalue, or 2π/|Im λ| for the slowest oscillation if nothing decays.
pub fn slowest_timescale(generator: &CMatrix) -> Option<f64> {
    let norm = max_row_sum(generator);
    if norm == 0.0 {
        return None;
    }
    let eig = Schur::new(generator.clone()).eigenvalues()?;
    let floor = 1e-10 * norm;
    let decay = eig
        .iter()
        .map(|z| z.re.abs())
        .filter(|&r| r > floor)
        .fold(f64::INFINITY, f64::min);
    if decay.is_finite() {
        return Some(1.0 / decay);
    }
    let osc = eig
        .iter()
        .map(|z| z.im.abs())
        .filter(|&r| r > floor)
        .fold(f64::INFINITY, f64::min);
    osc.is_finite().then(|| 2.0 * std::f64::consts::PI / osc)
}

/// Sampled coherent field ε(t), linearly interpolated, zero outside the samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    times: Vec<f64>,
    amplitudes: Vec<f64>,
}

impl Waveform {
    pub fn new(times: Vec<f64>, amplitudes: Vec<f64>) -> Result<Self> {
        if times.len() != amplitudes.len() || times.is_empty() {
            return Err(Error::param(
                "drive",
                "times and amplitudes must be non-empty and of equal length",
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("drive", "times must be strictly increasing"));
        }
        if amplitudes.iter().chain(&times).any(|x| !x.is_finite()) {
            return Err(Error::param("drive", "non-finite sample"));
        }
        Ok(Self { times, amplitudes })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn amplitude_at(&self, t: f64) -> f64 {
        let ts = &self.times;
        if t < ts[0] || t > ts[ts.len() - 1] {
            return 0.0;
        }
        let i = ts.partition_point(|&x| x <= t);
        if i == 0 {
            return self.amplitudes[0];
        }
        if i == ts.len() {
            return self.amplitudes[ts.len() - 1];
        }
        let (t0, t1) = (ts[i - 1], ts[i]);
        let (a0, a1) = (self.amplitudes[i - 1], self.amplitudes[i]);
        a0 + (a1 - a0) * (t - t0) / (t1 - t0)
    }
}

/// A coherent drive entering as −i[−μ ε(t), ρ].
#[derive(Debug, Clone, PartialEq)]
pub struct Drive {
    pub waveform: Waveform,
    pub dipole: CMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub converged: bool,
}

impl Trajectory {
    pub fn final_state(&self) -> &DensityMatrix {
        self.states
            .last()
            .expect("trajectory holds the initial state")
    }

    /// Time of the last sample.
    pub fn final_time(&self) -> f64 {
        *self
            .times
            .last()
            .expect("trajectory holds the initial time")
    }
}

fn rk4_step_matrix(generator: &CMatrix, h: f64) -> CMatrix {
    let n = generator.nrows();
    let id = CMatrix::identity(n, n);
    let hl = generator * c(h);
    // Horner form of the degree-4 Taylor polynomial.
    let mut p = &id + &hl * c(0.25);
    p = &id + &hl * &p * c(1.0 / 3.0);
    p = &id + &hl * &p * c(0.5);
    &id + &hl * &p
}

fn matrix_power(base: &CMatrix, mut exp: u64) -> CMatrix {
    let n = base.nrows();
    let mut result = CMatrix::identity(n, n);
    let mut sq = base.clone();
    while exp > 0 {
        if exp & 1 == 1 {
            result = &result * &sq;
        }
        exp >>= 1;
        if exp > 0 {
            sq = &sq * &sq;
        }
    }
    result
}

fn all_finite(v: &CVector) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn vec_norm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Fixed-step RK4 for a time-independent linear generator. `fix` runs after
/// every recorded chunk; `derivative_norm` feeds the stationarity test.
fn integrate_autonomous(
    generator: &CMatrix,
    v0: CVector,
    run: &Resolved,
    mut fix: impl FnMut(&mut CVector) -> Result<()>,
    mut record: impl FnMut(f64, &CVector) -> Result<()>,
) -> Result<bool> {
    let step = rk4_step_matrix(generator, run.dt);
    let chunk = matrix_power(&step, run.stride);
    let mut v = v0;
    record(0.0, &v)?;
    if vec_norm(&(generator * &v)) < run.stop_tol {
        return Ok(true);
    }
    let mut done = 0u64;
    while done < run.steps {
        let n = run.stride.min(run.steps - done);
        v = if n == run.stride {
            &chunk * &v
        } else {
            matrix_power(&step, n) * &v
        };
        done += n;
        let t = done as f64 * run.dt;
        if !all_finite(&v) {
            return Err(Error::IntegrationDiverged { t });
        }
        fix(&mut v)?;
        record(t, &v)?;
        if vec_norm(&(generator * &v)) < run.stop_tol {
            return Ok(true);
        }
    }
    Ok(false)
}

fn commutator_superop(a: &CMatrix) -> CMatrix {
    let d = a.nrows();
    let id = CMatrix::identity(d, d);
    id.kronecker(a) - a.transpose().kronecker(&id)
}

/// Integrates dρ/dt = L ρ (+ i ε(t) [μ, ρ] with a drive) from `rho0`.
pub fn propagate(
    l: &Superoperator,
    rho0: &DensityMatrix,
    opts: &PropagationOptions,
    drive: Option<&Drive>,
) -> Result<Trajectory> {
    if rho0.dim() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            actual: rho0.dim(),
        });
    }
    if let Some(drv) = drive {
        if drv.dipole.nrows() != l.dim() || drv.dipole.ncols() != l.dim() {
            return Err(Error::DimensionMismatch {
                expected: l.dim(),
                actual: drv.dipole.nrows(),
            });
        }
    }
    let run = opts.resolve(l.matrix())?;
    let mut times = Vec::new();
    let mut states = Vec::new();
    let v0 = vectorize(rho0.matrix());

    let fix = |v: &mut CVector| -> Result<()> {
        let m = hermitize(&devectorize(v)?);
        *v = vectorize(&m);
        Ok(())
    };
    let record = |t: f64,
                  v: &CVector,
                  times: &mut Vec<f64>,
                  states: &mut Vec<DensityMatrix>|
     -> Result<()> {
        times.push(t);
        states.push(DensityMatrix::new_unchecked(devectorize(v)?));
        Ok(())
    };

    let converged = match drive {
        None => integrate_autonomous(l.matrix(), v0, &run, fix, |t, v| {
            record(t, v, &mut times, &mut states)
        })?,
        Some(drv) => {
            let comm = commutator_superop(&drv.dipole) * C64::new(0.0, 1.0);
            let rhs = |t: f64, v: &CVector| -> CVector {
                l.matrix() * v + (&comm * v) * c(drv.waveform.amplitude_at(t))
            };
            let h = run.dt;
            let mut v = v0;
            let mut converged = false;
            record(0.0, &v, &mut times, &mut states)?;
            for step in 0..run.steps {
                let t = step as f64 * h;
                let k1 = rhs(t, &v);
                let k2 = rhs(t + 0.5 * h, &(&v + &k1 * c(0.5 * h)));
                let k3 = rhs(t + 0.5 * h, &(&v + &k2 * c(0.5 * h)));
                let k4 = rhs(t + h, &(&v + &k3 * c(h)));
                v += (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(h / 6.0);
                let t_next = (step + 1) as f64 * h;
                if !all_finite(&v) {
                    return Err(Error::IntegrationDiverged { t: t_next });
                }
                let mut fixed = v.clone();
                fix(&mut fixed)?;
                v = fixed;
                if (step + 1) % run.stride == 0 || step + 1 == run.steps {
                    record(t_next, &v, &mut times, &mut states)?;
                    if vec_norm(&rhs(t_next, &v)) < run.stop_tol {
                        converged = true;
                        break;
                    }
                }
            }
            converged
        }
    };

    let last = states.pop().expect("initial state recorded").into_matrix();
    let tr = last.trace();
    let drift = (tr - c(1.0)).norm();
    if drift > TRACE_DRIFT_TOL {
        return Err(Error::TraceDrift { drift });
    }
    states.push(DensityMatrix::new_unchecked(hermitize(&last) / c(tr.re)));
    Ok(Trajectory {
        times,
        states,
        converged,
    })
}

/// Singular-value diagnostics for the null space of a generator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    /// Singular values of L in ascending order.
    pub singular_values: Vec<f64>,
    /// Values below this count toward the null space (1e−8 · ‖L‖₂).
    pub threshold: f64,
    pub null_dim: usize,
}

pub fn gap_report(l: &Superoperator) -> GapReport {
    let mut sv: Vec<f64> = l
        .matrix()
        .clone()
        .singular_values()
        .iter()
        .copied()
        .collect();
    sv.sort_by(f64::total_cmp);
    let largest = sv.last().copied().unwrap_or(0.0);
    let threshold = 1e-8 * largest;
    let null_dim = sv.iter().filter(|&&s| s <= threshold).count();
    GapReport {
        singular_values: sv,
        threshold,
        null_dim,
    }
}

/// Solves L ρ = 0 with Tr ρ = 1 through the bordered system
/// `[[L, t], [tᵀ, 0]] [v; s] = [0; 1]`, t = vec(I).
pub fn steady_state(l: &Superoperator) -> Result<(DensityMatrix, GapReport)> {
    let report = gap_report(l);
    if report.null_dim > 1 {
        return Err(Error::AmbiguousSteadyState {
            null_dim: report.null_dim,
        });
    }
    let d = l.dim();
    let n = d * d;
    let trace_vec = vectorize(&CMatrix::identity(d, d));
    let mut bordered = CMatrix::zeros(n + 1, n + 1);
    bordered.view_mut((0, 0), (n, n)).copy_from(l.matrix());
    for i in 0..n {
        bordered[(i, n)] = trace_vec[i];
        bordered[(n, i)] = trace_vec[i];
    }
    let mut rhs = CVector::zeros(n + 1);
    rhs[n] = c(1.0);
    let sol = bordered
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("bordered steady-state system".into()))?;
    let v = CVector::from_iterator(n, sol.iter().take(n).copied());
    let m = hermitize(&devectorize(&v)?);
    let tr = m.trace().re;
    let rho = DensityMatrix::new(m / c(tr))?;
    Ok((rho, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliTrajectory {
    pub times: Vec<f64>,
    pub populations: Vec<Vec<f64>>,
    pub converged: bool,
}

/// Generator of dp_l/dt = 2 Σ_n (w_ln p_n − w_nl p_l).
pub fn pauli_generator(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !w.is_square() {
        return Err(Error::DimensionMismatch {
            expected: w.nrows(),
            actual: w.ncols(),
        });
    }
    let d = w.nrows();
    for m in 0..d {
        for n in 0..d {
            let r = w[(m, n)];
            if r < 0.0 || !r.is_finite() {
                return Err(Error::NegativeRate {
                    row: m,
                    col: n,
                    rate: r,
                });
            }
        }
    }
    let mut g = DMatrix::zeros(d, d);
    for l in 0..d {
        for n in 0..d {
            if n != l {
                g[(l, n)] += 2.0 * w[(l, n)];
                g[(l, l)] -= 2.0 * w[(n, l)];
            }
        }
    }
    Ok(g)
}

/// Integrates the Pauli master equation with the same RK4 scheme as
/// [`propagate`].
pub fn pauli_propagate(
    w: &DMatrix<f64>,
    p0: &[f64],
    opts: &PropagationOptions,
) -> Result<PauliTrajectory> {
    let g = pauli_generator(w)?;
    let d = g.nrows();
    if p0.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: p0.len(),
        });
    }
    let total: f64 = p0.iter().sum();
    if p0.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::param("p0", "not a probability vector"));
    }
    let gc = g.map(c);
    let run = opts.resolve(&gc)?;
    let v0 = CVector::from_iterator(d, p0.iter().map(|&p| c(p)));
    let mut times = Vec::new();
    let mut populations: Vec<Vec<f64>> = Vec::new();
    let converged = integrate_autonomous(
        &gc,
        v0,
        &run,
        |_| Ok(()),
        |t, v| {
            times.push(t);
            populations.push(v.iter().map(|z| z.re).collect());
            Ok(())
        },
    )?;
    let last = populations
        .last_mut()
        .expect("initial populations recorded");
    let sum: f64 = last.iter().sum();
    if (sum - 1.0).abs() > TRACE_DRIFT_TOL {
        return Err(Error::TraceDrift {
            drift: (sum - 1.0).abs(),
        });
    }
    last.iter_mut().for_each(|p| *p /= sum);
    Ok(PauliTrajectory {
        times,
        populations,
        converged,
    })
}

/// ‖L ρ‖_F
pub fn stationarity(l: &Superoperator, rho: &DensityMatrix) -> Result<f64> {
    Ok(frobenius_norm(&l.apply(rho.matrix())?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{min_eigenvalue, SystemSpec};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn random_state(d: usize, seed: u64) -> DensityMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g = CMatrix::from_fn(d, d, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let m = &g * g.adjoint();
        let tr = m.trace();
        DensityMatrix::new(m / tr).unwrap()
    }

    fn two_level_decay(rate: f64) -> Superoperator {
        let mut a = CMatrix::zeros(2, 2);
        a[(0, 1)] = c(1.0);
        let h = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.0), c(1.0)]));
        Superoperator::hamiltonian(&h) + Superoperator::lindblad(&a, rate)
    }

    #[test]
    fn zero_generator_freezes_state() {
        let rho = random_state(3, 1);
        let opts = PropagationOptions {
            dt: Some(0.1),
            t_max: Some(5.0),
            ..Default::default()
        };
        let traj = propagate(&Superoperator::zeros(3), &rho, &opts, None).unwrap();
        assert!(traj.converged);
        for s in &traj.states {
            assert!(frobenius_norm(&(s.matrix() - rho.matrix())) < 1e-15);
        }
    }

    #[test]
    fn unitary_evolution_conserves_spectrum() {
        let spec = SystemSpec::four_level_example();
        let l = Superoperator::hamiltonian(&spec.hamiltonian());
        let rho = random_state(4, 9);
        let opts = PropagationOptions {
            dt: Some(2e-4),
            t_max: Some(10.0),
            ..Default::default()
        };
        let traj = propagate(&l, &rho, &opts, None).unwrap();
        assert!(!traj.converged);
        assert_abs_diff_eq!(traj.final_time(), 10.0, epsilon = 1e-12);
        let ev0 = rho.eigenvalues();
        for s in &traj.states {
            assert!((s.matrix().trace() - c(1.0)).norm() < 1e-9);
            assert_abs_diff_eq!(s.purity(), rho.purity(), epsilon = 1e-9);
            for (a, b) in s.eigenvalues().iter().zip(&ev0) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn two_level_decay_matches_exponential() {
        let gamma = 0.3;
        let l = two_level_decay(gamma);
        let rho = DensityMatrix::pure_level(2, 1);
        let opts = PropagationOptions {
            dt: Some(0.01),
            t_max: Some(3.0),
            record_every: Some(10),
            ..Default::default()
        };
        let traj = propagate(&l, &rho, &opts, None).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            // D[a] with the factor-2 convention empties the upper level at 2γ.
            assert_abs_diff_eq!(s.populations()[1], (-2.0 * gamma * t).exp(), epsilon = 1e-9);
        }
    }

    #[test]
    fn batched_steps_match_single_steps() {
        let l = two_level_decay(0.7);
        let rho = random_state(2, 3);
        let base = PropagationOptions {
            dt: Some(0.01),
            t_max: Some(2.0),
            stop_tol: 1e-14,
            record_every: Some(1),
        };
        let fine = propagate(&l, &rho, &base, None).unwrap();
        let coarse = propagate(
            &l,
            &rho,
            &PropagationOptions {
                record_every: Some(50),
                ..base
            },
            None,
        )
        .unwrap();
        assert_eq!(coarse.times.len(), 5);
        let a = fine.final_state().matrix();
        let b = coarse.final_state().matrix();
        assert!(frobenius_norm(&(a - b)) < 1e-12);
    }

    #[test]
    fn default_horizon_reaches_steady_state() {
        let l = two_level_decay(0.2);
        let rho = random_state(2, 5);
        let traj = propagate(&l, &rho, &PropagationOptions::default(), None).unwrap();
        assert!(traj.converged);
        let (ss, report) = steady_state(&l).unwrap();
        assert_eq!(report.null_dim, 1);
        assert!(frobenius_norm(&(traj.final_state().matrix() - ss.matrix())) < 1e-8);
        assert_abs_diff_eq!(ss.populations()[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn drive_rotates_populations() {
        // Resonant σx drive without dissipation: Rabi oscillation.
        let h = CMatrix::zeros(2, 2);
        let l = Superoperator::hamiltonian(&h);
        let mut mu = CMatrix::zeros(2, 2);
        mu[(0, 1)] = c(1.0);
        mu[(1, 0)] = c(1.0);
        let eps = 0.5;
        let drive = Drive {
            waveform: Waveform::new(vec![0.0, 100.0], vec![eps, eps]).unwrap(),
            dipole: mu,
        };
        let opts = PropagationOptions {
            dt: Some(1e-3),
            t_max: Some(2.0),
            record_every: Some(100),
            ..Default::default()
        };
        let traj = propagate(&l, &DensityMatrix::ground(2), &opts, Some(&drive)).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            assert_abs_diff_eq!(s.populations()[1], (eps * t).sin().powi(2), epsilon = 1e-9);
        }
    }

    #[test]
    fn waveform_interpolation() {
        let w = Waveform::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, -2.0]).unwrap();
        assert_eq!(w.amplitude_at(0.5), 1.0);
        assert_eq!(w.amplitude_at(2.0), 0.0);
        assert_eq!(w.amplitude_at(3.0), -2.0);
        assert_eq!(w.amplitude_at(3.5), 0.0);
        assert_eq!(w.amplitude_at(-0.1), 0.0);
        assert!(Waveform::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(Waveform::new(vec![0.0], vec![]).is_err());
    }

    #[test]
    fn diverging_generator_is_reported() {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = c(50.0);
        let l = Superoperator::from_matrix(m).unwrap();
        let opts = PropagationOptions {
            dt: Some(0.1),
            t_max: Some(1e4),
            record_every: Some(1),
            ..Default::default()
        };
        let err = propagate(&l, &DensityMatrix::ground(2), &opts, None).unwrap_err();
        assert!(matches!(err, Error::IntegrationDiverged { .. }), "{err}");
    }

    #[test]
    fn options_validation() {
        let bad = [
            PropagationOptions {
                dt: Some(0.0),
                ..Default::default()
            },
            PropagationOptions {
                t_max: Some(-1.0),
                ..Default::default()
            },
            PropagationOptions {
                stop_tol: 0.0,
                ..Default::default()
            },
            PropagationOptions {
                record_every: Some(0),
                ..Default::default()
            },
        ];
        for o in bad {
            assert!(o.validate().is_err());
        }
    }

    #[test]
    fn unitary_generator_has_ambiguous_steady_state() {
        let spec = SystemSpec::four_level_example();
        let l = Superoperator::hamiltonian(&spec.hamiltonian());
        let err = steady_state(&l).unwrap_err();
        assert!(
            matches!(err, Error::AmbiguousSteadyState { null_dim: 4 }),
            "{err}"
        );
        assert_eq!(gap_report(&l).null_dim, 4);
    }

    #[test]
    fn pauli_zero_rates_freeze() {
        let w = DMatrix::zeros(3, 3);
        let traj = pauli_propagate(
            &w,
            &[0.2, 0.5, 0.3],
            &PropagationOptions {
                t_max: Some(1.0),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(traj.converged);
        assert_eq!(traj.populations.last().unwrap(), &vec![0.2, 0.5, 0.3]);
    }

    #[test]
    fn pauli_two_level_closed_form() {
        let (w12, w21) = (0.3, 0.1);
        let w = DMatrix::from_row_slice(2, 2, &[0.0, w12, w21, 0.0]);
        let opts = PropagationOptions {
            dt: Some(1e-3),
            t_max: Some(20.0),
            stop_tol: 1e-15,
            record_every: Some(100),
        };
        let traj = pauli_propagate(&w, &[0.0, 1.0], &opts).unwrap();
        let p_inf = w12 / (w12 + w21);
        let rate = 2.0 * (w12 + w21);
        for (t, p) in traj.times.iter().zip(&traj.populations) {
            let want = p_inf * (1.0 - (-rate * t).exp());
            assert_abs_diff_eq!(p[0], want, epsilon = 1e-10);
            assert_abs_diff_eq!(p[0] + p[1], 1.0, epsilon = 1e-12);
            assert!(p.iter().all(|x| (-1e-12..=1.0 + 1e-12).contains(x)));
        }
    }

    #[test]
    fn pauli_rejects_bad_inputs() {
        let w = DMatrix::from_row_slice(2, 2, &[0.0, -0.1, 0.2, 0.0]);
        assert!(matches!(
            pauli_propagate(&w, &[1.0, 0.0], &PropagationOptions::default()),
            Err(Error::NegativeRate { .. })
        ));
        let w = DMatrix::from_row_slice(2, 2, &[0.0, 0.1, 0.2, 0.0]);
        assert!(pauli_propagate(&w, &[0.6, 0.6], &PropagationOptions::default()).is_err());
        assert!(pauli_propagate(&w, &[1.0], &PropagationOptions::default()).is_err());
    }

    #[test]
    fn trajectory_stays_positive() {
        let l = two_level_decay(1.5);
        let traj = propagate(
            &l,
            &random_state(2, 11),
            &PropagationOptions::default(),
            None,
        )
        .unwrap();
        for s in &traj.states {
            assert!(min_eigenvalue(s.matrix()) > -1e-7);
        }
    }
}
