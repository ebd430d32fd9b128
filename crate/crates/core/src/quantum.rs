//! Finite-level systems: spectra, Bohr-frequency tables, dipole-derived
//! transition operators, density matrices and superoperators.
//!
//! Density matrices are vectorized by stacking columns, so for any operators
//! `A`, `B` we have `vec(A X B) = (Bᵀ ⊗ A) vec(X)`. Every superoperator in the
//! crate follows this convention.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Default absolute tolerance for grouping degenerate Bohr frequencies.
pub const FREQUENCY_TOLERANCE: f64 = 1e-9;

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const POSITIVITY_TOL: f64 = 1e-9;

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest absolute row sum.
pub fn max_row_sum(m: &CMatrix) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// The controlled system: energy levels of H₀ and the coupling matrix μ.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    energies: Vec<f64>,
    dipole: DMatrix<f64>,
}

impl SystemSpec {
    /// Builds a spec whose dipole must have an exactly zero diagonal.
    pub fn new(energies: Vec<f64>, dipole: DMatrix<f64>) -> Result<Self> {
        Self::with_options(energies, dipole, true)
    }

    pub fn with_options(
        energies: Vec<f64>,
        dipole: DMatrix<f64>,
        require_zero_diagonal: bool,
    ) -> Result<Self> {
        let d = energies.len();
        if d == 0 {
            return Err(Error::InvalidSystem("no energy levels".into()));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidSystem("energies must be finite".into()));
        }
        if energies.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidSystem(
                "energies must be sorted non-decreasing".into(),
            ));
        }
        if dipole.nrows() != d || dipole.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: dipole.nrows(),
            });
        }
        for i in 0..d {
            for j in 0..d {
                let (a, b) = (dipole[(i, j)], dipole[(j, i)]);
                if !a.is_finite() || (a - b).abs() > 1e-12 {
                    return Err(Error::InvalidSystem(format!(
                        "dipole not symmetric at ({i}, {j})"
                    )));
                }
            }
            if require_zero_diagonal && dipole[(i, i)] != 0.0 {
                return Err(Error::InvalidSystem(format!(
                    "dipole diagonal entry ({i}, {i}) is nonzero"
                )));
            }
        }
        Ok(Self { energies, dipole })
    }

    /// H₀ = diag(0, 11, 13, 24) with the all-transitions-allowed dipole matrix
    /// used in the shipped experiments.
    pub fn four_level_example() -> Self {
        #[rustfmt::skip]
        let dipole = DMatrix::from_row_slice(4, 4, &[
            0.0, 0.8, 0.3, 0.5,
            0.8, 0.0, 0.2, 0.7,
            0.3, 0.2, 0.0, 1.0,
            0.5, 0.7, 1.0, 0.0,
        ]);
        Self::new(vec![0.0, 11.0, 13.0, 24.0], dipole).expect("valid example system")
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn dipole(&self) -> &DMatrix<f64> {
        &self.dipole
    }

    pub fn hamiltonian(&self) -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_iterator(
            self.dim(),
            self.energies.iter().map(|&e| c(e)),
        ))
    }

    pub fn dipole_complex(&self) -> CMatrix {
        self.dipole.map(c)
    }
}

/// One positive Bohr frequency and the level pairs `(lower, upper)` sharing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub frequency: f64,
    pub pairs: Vec<(usize, usize)>,
}

/// All positive Bohr frequencies of a spectrum, degenerate ones grouped.
/// Level indices are zero-based.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable {
    entries: Vec<Transition>,
    tolerance: f64,
}

impl TransitionTable {
    pub fn entries(&self) -> &[Transition] {
        &self.entries
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|t| t.frequency)
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn find(&self, frequency: f64) -> Option<&Transition> {
        self.entries
            .iter()
            .find(|t| (t.frequency - frequency).abs() <= self.tolerance)
    }
}

pub fn build_transition_table(spec: &SystemSpec) -> TransitionTable {
    build_transition_table_with_tolerance(spec, FREQUENCY_TOLERANCE)
}

pub fn build_transition_table_with_tolerance(spec: &SystemSpec, tol: f64) -> TransitionTable {
    let e = spec.energies();
    let mut raw: Vec<(f64, usize, usize)> = Vec::new();
    for m in 0..e.len() {
        for n in (m + 1)..e.len() {
            let w = e[n] - e[m];
            if w > tol {
                raw.push((w, m, n));
            }
        }
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));

    let mut entries: Vec<Transition> = Vec::new();
    let mut anchor = f64::NAN;
    for (w, m, n) in raw {
        match entries.last_mut() {
            Some(last) if (w - anchor).abs() <= tol => last.pairs.push((m, n)),
            _ => {
                anchor = w;
                entries.push(Transition {
                    frequency: w,
                    pairs: vec![(m, n)],
                });
            }
        }
    }
    for t in &mut entries {
        let sum: f64 = t.pairs.iter().map(|&(m, n)| e[n] - e[m]).sum();
        t.frequency = sum / t.pairs.len() as f64;
    }
    TransitionTable {
        entries,
        tolerance: tol,
    }
}

/// Lowering operator μ_ω = Σ_{ε_n−ε_m=ω} P_m μ P_n. Zero if ω is not a Bohr
/// frequency of the table.
pub fn transition_operator(spec: &SystemSpec, table: &TransitionTable, frequency: f64) -> CMatrix {
    let d = spec.dim();
    let mut op = CMatrix::zeros(d, d);
    if let Some(t) = table.find(frequency) {
        for &(m, n) in &t.pairs {
            op[(m, n)] = c(spec.dipole()[(m, n)]);
        }
    }
    op
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::InvalidDensityMatrix("matrix must be square".into()));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidDensityMatrix("non-finite entry".into()));
        }
        let asym = frobenius_norm(&(&m - m.adjoint()));
        if asym > HERMITIAN_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (‖ρ − ρ†‖ = {asym:e})"
            )));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace is {tr}")));
        }
        let min = min_eigenvalue(&m);
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(Self(m))
    }

    /// Wraps without checks; for integrator states already known to be close.
    pub(crate) fn new_unchecked(m: CMatrix) -> Self {
        Self(m)
    }

    pub fn from_diagonal(populations: &[f64]) -> Result<Self> {
        let v = CVector::from_iterator(populations.len(), populations.iter().map(|&p| c(p)));
        Self::new(CMatrix::from_diagonal(&v))
    }

    /// |i⟩⟨i| in dimension `d`.
    pub fn pure_level(d: usize, i: usize) -> Self {
        let mut m = CMatrix::zeros(d, d);
        m[(i, i)] = c(1.0);
        Self(m)
    }

    pub fn ground(d: usize) -> Self {
        Self::pure_level(d, 0)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }

    pub fn max_offdiagonal(&self) -> f64 {
        let d = self.dim();
        let mut max = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    max = max.max(self.0[(i, j)].norm());
                }
            }
        }
        max
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .0
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }

    /// ρ_eq ∝ exp(−H₀/T), diagonal in the energy basis.
    pub fn gibbs(energies: &[f64], temperature: f64) -> Result<Self> {
        if !(temperature > 0.0) {
            return Err(Error::param("temperature", "must be positive"));
        }
        let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = energies
            .iter()
            .map(|&e| (-(e - e0) / temperature).exp())
            .collect();
        let z: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|x| x / z).collect();
        Self::from_diagonal(&p)
    }
}

pub(crate) fn min_eigenvalue(m: &CMatrix) -> f64 {
    let h = (m + m.adjoint()) * c(0.5);
    h.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5)
}

/// J = sqrt(Σ |ρ_nm − σ_nm|²).
pub fn frobenius_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: sigma.dim(),
        });
    }
    Ok(frobenius_norm(&(rho.matrix() - sigma.matrix())))
}

pub fn vectorize(m: &CMatrix) -> CVector {
    // nalgebra storage is column-major, so this is column stacking.
    CVector::from_column_slice(m.as_slice())
}

pub fn devectorize(v: &CVector) -> Result<CMatrix> {
    let len = v.len();
    let d = (len as f64).sqrt().round() as usize;
    if d * d != len {
        return Err(Error::NotPerfectSquare(len));
    }
    Ok(CMatrix::from_column_slice(d, d, v.as_slice()))
}

/// A linear map on d×d matrices, stored as a d²×d² matrix acting on
/// column-stacked vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    matrix: CMatrix,
    dim: usize,
}

impl Superoperator {
    pub fn zeros(d: usize) -> Self {
        Self {
            matrix: CMatrix::zeros(d * d, d * d),
            dim: d,
        }
    }

    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotPerfectSquare(matrix.nrows()));
        }
        let n = matrix.nrows();
        let d = (n as f64).sqrt().round() as usize;
        if d * d != n {
            return Err(Error::NotPerfectSquare(n));
        }
        Ok(Self { matrix, dim: d })
    }

    /// −i[H, ·]
    pub fn hamiltonian(h: &CMatrix) -> Self {
        let d = h.nrows();
        let id = CMatrix::identity(d, d);
        let m = (id.kronecker(h) - h.transpose().kronecker(&id)) * C64::new(0.0, -1.0);
        Self { matrix: m, dim: d }
    }

    /// rate · (2AρA† − A†Aρ − ρA†A)
    pub fn lindblad(a: &CMatrix, rate: f64) -> Self {
        let d = a.nrows();
        let id = CMatrix::identity(d, d);
        let ada = a.adjoint() * a;
        let m = (a.conjugate().kronecker(a) * c(2.0)
            - id.kronecker(&ada)
            - ada.transpose().kronecker(&id))
            * c(rate);
        Self { matrix: m, dim: d }
    }

    /// weight · (A ρ B† − ½{B†A, ρ}); summing over pairs (A, B) with a
    /// positive semidefinite weight matrix yields a Lindblad generator.
    pub fn cross_dissipator(a: &CMatrix, b: &CMatrix, weight: f64) -> Self {
        let d = a.nrows();
        let id = CMatrix::identity(d, d);
        let bda = b.adjoint() * a;
        let m = (b.conjugate().kronecker(a)
            - (id.kronecker(&bda) + bda.transpose().kronecker(&id)) * c(0.5))
            * c(weight);
        Self { matrix: m, dim: d }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        if rho.nrows() != self.dim || rho.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: rho.nrows(),
            });
        }
        devectorize(&(&self.matrix * vectorize(rho)))
    }

    pub fn add_assign(&mut self, other: &Superoperator) {
        self.matrix += &other.matrix;
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            matrix: &self.matrix * c(s),
            dim: self.dim,
        }
    }

    pub fn norm(&self) -> f64 {
        max_row_sum(&self.matrix)
    }
}

impl std::ops::Add for Superoperator {
    type Output = Superoperator;

    fn add(mut self, rhs: Superoperator) -> Superoperator {
        self.add_assign(&rhs);
        self
    }
}
