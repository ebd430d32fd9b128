//! Dissipative generator for a fixed-in-space system immersed in a dilute gas.
//!
//! In the weak-coupling limit the two-body transition operator is replaced by
//! the interaction V_nm(k, k′) = λ μ_nm g_n(k) g_m(k′) with window functions
//! g_n = χ_[a_n, b_n](|k|). For an isotropic density n(k) the angular parts of
//! ∫d³k d³k′ δ(k′²/2M − k²/2M + ω) reduce to the radial weight
//!
//! ```text
//! 4πk² n(k) dk · 4πM k′,    k′ = √(k² − 2Mω)
//! ```
//!
//! The integrand jumps at every window edge and has a square-root onset where
//! an absorbing channel opens (k′ = 0). Each channel's momentum range is split
//! at those points and every smooth piece is integrated with composite
//! Gauss-Legendre panels. Absorbing channels are integrated in k′, where k is
//! smooth, and emitting channels in k.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::DMatrix;

use crate::distribution::Occupation;
use crate::error::{Error, Result};
use crate::quantum::{c, CMatrix, Superoperator, SystemSpec, FREQUENCY_TOLERANCE};

/// Coupling scale used by the shipped experiments. Steady states do not
/// depend on it.
pub const DEFAULT_COUPLING_SCALE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct GasCoupling {
    windows: Vec<(f64, f64)>,
    scale: f64,
    mass: f64,
}

impl GasCoupling {
    pub fn new(windows: Vec<(f64, f64)>, scale: f64, mass: f64) -> Result<Self> {
        for &(a, b) in &windows {
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return Err(Error::param("windows", format!("empty window [{a}, {b}]")));
            }
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::param(
                "coupling_scale",
                "must be positive and finite",
            ));
        }
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::param("mass", "must be positive and finite"));
        }
        Ok(Self {
            windows,
            scale,
            mass,
        })
    }

    /// Windows [2,12], [9,24], [3,17], [14,26] and M = 1.
    pub fn four_level_example() -> Self {
        Self::new(
            vec![(2.0, 12.0), (9.0, 24.0), (3.0, 17.0), (14.0, 26.0)],
            DEFAULT_COUPLING_SCALE,
            1.0,
        )
        .expect("valid example coupling")
    }

    pub fn windows(&self) -> &[(f64, f64)] {
        &self.windows
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        Self::new(self.windows.clone(), scale, self.mass)
    }

    /// g_n(k), closed on both ends.
    pub fn window(&self, level: usize, k: f64) -> f64 {
        let (a, b) = self.windows[level];
        if a <= k && k <= b {
            1.0
        } else {
            0.0
        }
    }

    /// One window per level.
    pub fn check(&self, spec: &SystemSpec) -> Result<()> {
        if self.windows.len() != spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                actual: self.windows.len(),
            });
        }
        Ok(())
    }
}

/// Momentum range and node budget for the gas integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    k_min: f64,
    k_max: f64,
    nodes: usize,
}

/// Gauss-Legendre points per panel.
pub const PANEL_ORDER: usize = 8;

impl QuadratureSpec {
    pub fn new(k_min: f64, k_max: f64, nodes: usize) -> Result<Self> {
        if !(0.0 <= k_min && k_min < k_max) || !k_max.is_finite() {
            return Err(Error::InvalidRange {
                lo: k_min,
                hi: k_max,
            });
        }
        if nodes < 16 {
            return Err(Error::param("nodes", "need at least 16 quadrature nodes"));
        }
        Ok(Self {
            k_min,
            k_max,
            nodes,
        })
    }

    pub fn k_min(&self) -> f64 {
        self.k_min
    }

    pub fn k_max(&self) -> f64 {
        self.k_max
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// Target panel width, chosen so that a single smooth piece spanning
    /// [k_min, k_max] would use about `nodes` points.
    pub fn panel_width(&self) -> f64 {
        (self.k_max - self.k_min) * PANEL_ORDER as f64 / self.nodes as f64
    }

    /// Composite Gauss-Legendre (node, weight) pairs on [a, b].
    pub fn composite(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        if !(b > a) {
            return Vec::new();
        }
        let rule = GaussLegendre::new(NonZeroUsize::new(PANEL_ORDER).expect("nonzero order"));
        let panels = ((b - a) / self.panel_width()).ceil().max(1.0) as usize;
        let h = (b - a) / panels as f64;
        let mut out = Vec::with_capacity(panels * PANEL_ORDER);
        for i in 0..panels {
            let lo = a + h * i as f64;
            let half = 0.5 * h;
            let mid = lo + half;
            for &(x, w) in rule.as_node_weight_pairs() {
                out.push((mid + half * x, half * w));
            }
        }
        out
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self::new(0.0, 40.0, 600).expect("default quadrature")
    }
}

/// Outgoing gas momentum after the system absorbs energy ω from a particle
/// of momentum k; `None` if the channel is closed.
pub fn energy_conserving_momentum(k: f64, frequency: f64, mass: f64) -> Option<f64> {
    let sq = k * k - 2.0 * mass * frequency;
    (sq >= 0.0).then(|| sq.sqrt())
}

/// Level pairs (m, n) with ε_m − ε_n = ω, in row-major order.
fn channel_pairs(spec: &SystemSpec, frequency: f64) -> Vec<(usize, usize)> {
    let e = spec.energies();
    let mu = spec.dipole();
    let mut pairs = Vec::new();
    for m in 0..e.len() {
        for n in 0..e.len() {
            if ((e[m] - e[n]) - frequency).abs() <= FREQUENCY_TOLERANCE && mu[(m, n)] != 0.0 {
                pairs.push((m, n));
            }
        }
    }
    pairs
}

/// Distinct signed frequencies ε_m − ε_n with a nonzero coupling, ascending.
fn signed_frequencies(spec: &SystemSpec) -> Vec<f64> {
    let e = spec.energies();
    let mu = spec.dipole();
    let mut freqs: Vec<f64> = Vec::new();
    for m in 0..e.len() {
        for n in 0..e.len() {
            if mu[(m, n)] != 0.0 {
                freqs.push(e[m] - e[n]);
            }
        }
    }
    freqs.sort_by(f64::total_cmp);
    freqs.dedup_by(|a, b| (*a - *b).abs() <= FREQUENCY_TOLERANCE);
    freqs
}

/// A_ω(k) = λ Σ_{ε_m−ε_n=ω} μ_mn g_m(k′) g_n(k) |m⟩⟨n|.
pub fn jump_operator(
    spec: &SystemSpec,
    coupling: &GasCoupling,
    frequency: f64,
    k: f64,
) -> Result<CMatrix> {
    coupling.check(spec)?;
    if k < 0.0 {
        return Err(Error::NegativeMomentum(k));
    }
    let d = spec.dim();
    let mut a = CMatrix::zeros(d, d);
    let Some(k_out) = energy_conserving_momentum(k, frequency, coupling.mass) else {
        return Ok(a);
    };
    for (m, n) in channel_pairs(spec, frequency) {
        let amp = coupling.scale
            * spec.dipole()[(m, n)]
            * coupling.window(m, k_out)
            * coupling.window(n, k);
        a[(m, n)] = c(amp);
    }
    Ok(a)
}

/// L = −i[H₀,·] + 2π Σ_{ω∈±B} Σ_j w_j(ω) (AρA† − ½{A†A, ρ}).
///
/// The node sum is folded into a coefficient matrix over level pairs per
/// channel before assembly; node order is fixed, so the result is
/// deterministic.
pub fn build_gas_liouvillian(
    spec: &SystemSpec,
    dist: &dyn Occupation,
    coupling: &GasCoupling,
    quad: &QuadratureSpec,
) -> Result<Superoperator> {
    coupling.check(spec)?;
    let d = spec.dim();
    let mut l = Superoperator::hamiltonian(&spec.hamiltonian());

    for omega in signed_frequencies(spec) {
        let pairs = channel_pairs(spec, omega);
        let np = pairs.len();
        let mut coeffs = vec![0.0; np * np];
        let mut amps = vec![0.0; np];
        for ChannelNode { k, k_out, dk } in channel_nodes(coupling, quad, omega, &pairs) {
            let n_k = dist.occupation(k)?;
            if n_k == 0.0 {
                continue;
            }
            let weight = 4.0 * PI * k * k * dk * n_k * 4.0 * PI * coupling.mass * k_out;
            for (p, &(m, n)) in pairs.iter().enumerate() {
                amps[p] = coupling.scale
                    * spec.dipole()[(m, n)]
                    * coupling.window(m, k_out)
                    * coupling.window(n, k);
            }
            for p in 0..np {
                if amps[p] == 0.0 {
                    continue;
                }
                for q in 0..np {
                    coeffs[p * np + q] += weight * amps[p] * amps[q];
                }
            }
        }
        for (p, &(mp, np_)) in pairs.iter().enumerate() {
            for (q, &(mq, nq)) in pairs.iter().enumerate() {
                let kpq = coeffs[p * np + q];
                if kpq == 0.0 {
                    continue;
                }
                let ep = unit(d, mp, np_);
                let eq = unit(d, mq, nq);
                l.add_assign(&Superoperator::cross_dissipator(&ep, &eq, 2.0 * PI * kpq));
            }
        }
    }
    Ok(l)
}

/// Pauli transition probabilities: entry (m, n) is
/// w_mn = π ∫ d³k n(k) ∫ d³k′ δ(E_f,m − E_i,n) |V_mn(k′, k)|², w_nn = 0.
pub fn pauli_rates(
    spec: &SystemSpec,
    dist: &dyn Occupation,
    coupling: &GasCoupling,
    quad: &QuadratureSpec,
) -> Result<DMatrix<f64>> {
    coupling.check(spec)?;
    let d = spec.dim();
    let e = spec.energies();
    let mut w = DMatrix::zeros(d, d);
    for m in 0..d {
        for n in 0..d {
            let mu = spec.dipole()[(m, n)];
            if m == n || mu == 0.0 {
                continue;
            }
            let omega = e[m] - e[n];
            let pairs = channel_pairs(spec, omega);
            let mut sum = 0.0;
            for ChannelNode { k, k_out, dk } in channel_nodes(coupling, quad, omega, &pairs) {
                let n_k = dist.occupation(k)?;
                if n_k == 0.0 {
                    continue;
                }
                let g = coupling.window(m, k_out) * coupling.window(n, k);
                sum += 4.0 * PI * k * k * dk * n_k * 4.0 * PI * coupling.mass * k_out * g;
            }
            w[(m, n)] = PI * coupling.scale.powi(2) * mu * mu * sum;
        }
    }
    Ok(w)
}

/// One quadrature node of a channel: incoming k, outgoing k′ and measure dk.
#[derive(Debug, Clone, Copy, PartialEq)]
struct ChannelNode {
    k: f64,
    k_out: f64,
    dk: f64,
}

/// Nodes for the channel ω over incoming momenta in [k_min, k_max], split at
/// every window edge of `pairs`.
fn channel_nodes(
    coupling: &GasCoupling,
    quad: &QuadratureSpec,
    frequency: f64,
    pairs: &[(usize, usize)],
) -> Vec<ChannelNode> {
    let shift = 2.0 * coupling.mass * frequency;
    // Integration variable s: k′ for absorbing channels, k otherwise.
    let absorbing = shift > 0.0;
    let from_k = |k: f64| -> Option<f64> {
        if absorbing {
            let sq = k * k - shift;
            (sq >= 0.0).then(|| sq.sqrt())
        } else {
            Some(k)
        }
    };
    let from_k_out = |k_out: f64| -> Option<f64> {
        if absorbing {
            Some(k_out)
        } else {
            let sq = k_out * k_out + shift;
            (sq >= 0.0).then(|| sq.sqrt())
        }
    };
    if absorbing && quad.k_max * quad.k_max <= shift {
        return Vec::new();
    }
    let s_lo = from_k(quad.k_min.max(shift.max(0.0).sqrt())).unwrap_or(0.0);
    let s_hi = from_k(quad.k_max).expect("channel open at k_max");

    let mut breaks = vec![s_lo, s_hi];
    for &(m, n) in pairs {
        let (a, b) = coupling.windows[n];
        breaks.extend([a, b].into_iter().filter_map(|e| from_k(e.max(0.0))));
        let (a, b) = coupling.windows[m];
        breaks.extend([a, b].into_iter().filter_map(|e| from_k_out(e.max(0.0))));
    }
    breaks.retain(|&x| x >= s_lo && x <= s_hi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let mut nodes = Vec::new();
    for piece in breaks.windows(2) {
        for (s, ds) in quad.composite(piece[0], piece[1]) {
            let node = if absorbing {
                let k = (s * s + shift).sqrt();
                ChannelNode {
                    k,
                    k_out: s,
                    dk: ds * s / k,
                }
            } else {
                ChannelNode {
                    k: s,
                    k_out: (s * s - shift).sqrt(),
                    dk: ds,
                }
            };
            nodes.push(node);
        }
    }
    nodes
}

fn unit(d: usize, row: usize, col: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    m[(row, col)] = c(1.0);
    m
}
