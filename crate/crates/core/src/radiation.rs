//! Dissipative generator for a system bathed in isotropic incoherent radiation.
//!
//! With a constant form factor g₀ the δ(|k| − ω) integral over the sphere
//! |k| = ω gives the emission and absorption rates
//!
//! ```text
//! γ↓(ω) = 4π² g₀² ω² (n(ω) + 1)      γ↑(ω) = 4π² g₀² ω² n(ω)
//! ```
//!
//! and each positive Bohr frequency contributes an emission channel through
//! the lowering operator μ_ω and an absorption channel through μ_ω†.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::distribution::Occupation;
use crate::dynamics::Waveform;
use crate::error::{Error, Result};
use crate::quantum::{build_transition_table, transition_operator, Superoperator, SystemSpec};

/// Form-factor amplitude used by the shipped experiments. Steady states do not
/// depend on it; it only sets the relaxation timescale.
pub const DEFAULT_G0: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct RadiationCoupling {
    g0: f64,
    drive: Option<Waveform>,
}

impl RadiationCoupling {
    pub fn new(g0: f64) -> Result<Self> {
        if !(g0 > 0.0) || !g0.is_finite() {
            return Err(Error::param("g0", "must be positive and finite"));
        }
        Ok(Self { g0, drive: None })
    }

    pub fn with_drive(mut self, drive: Waveform) -> Self {
        self.drive = Some(drive);
        self
    }

    pub fn g0(&self) -> f64 {
        self.g0
    }

    pub fn drive(&self) -> Option<&Waveform> {
        self.drive.as_ref()
    }
}

impl Default for RadiationCoupling {
    fn default() -> Self {
        Self::new(DEFAULT_G0).expect("default coupling")
    }
}

/// (γ↓, γ↑) at Bohr frequency ω.
pub fn radiation_rates(frequency: f64, dist: &dyn Occupation, g0: f64) -> Result<(f64, f64)> {
    if !(frequency > 0.0) {
        return Err(Error::NonPositiveFrequency(frequency));
    }
    let n = dist.occupation(frequency)?;
    let prefactor = 4.0 * PI * PI * g0 * g0 * frequency * frequency;
    Ok((prefactor * (n + 1.0), prefactor * n))
}

/// L = −i[H₀, ·] + Σ_ω { γ↓ D[μ_ω] + γ↑ D[μ_ω†] }, D[A]ρ = 2AρA† − {A†A, ρ}.
///
/// The drive waveform, if any, is not part of the stationary generator; pass
/// it to [`crate::dynamics::propagate`] instead.
pub fn build_radiation_liouvillian(
    spec: &SystemSpec,
    dist: &dyn Occupation,
    coupling: &RadiationCoupling,
) -> Result<Superoperator> {
    let table = build_transition_table(spec);
    let mut l = Superoperator::hamiltonian(&spec.hamiltonian());
    for t in table.entries() {
        let lower = transition_operator(spec, &table, t.frequency);
        let (down, up) = radiation_rates(t.frequency, dist, coupling.g0)?;
        l.add_assign(&Superoperator::lindblad(&lower, down));
        if up != 0.0 {
            l.add_assign(&Superoperator::lindblad(&lower.adjoint(), up));
        }
    }
    Ok(l)
}

/// Population transfer rates w (entry (m, n) is the n → m rate) of the
/// radiation generator, normalized so that dp_l/dt = 2 Σ_n (w_ln p_n − w_nl p_l).
pub fn radiation_pauli_rates(
    spec: &SystemSpec,
    dist: &dyn Occupation,
    coupling: &RadiationCoupling,
) -> Result<DMatrix<f64>> {
    let d = spec.dim();
    let table = build_transition_table(spec);
    let mut w = DMatrix::zeros(d, d);
    for t in table.entries() {
        let (down, up) = radiation_rates(t.frequency, dist, coupling.g0)?;
        for &(m, n) in &t.pairs {
            let mu2 = spec.dipole()[(m, n)].powi(2);
            w[(m, n)] += down * mu2;
            w[(n, m)] += up * mu2;
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::EnvDistribution;
    use approx::assert_abs_diff_eq;

    struct Constant(f64);

    impl Occupation for Constant {
        fn occupation(&self, _k: f64) -> Result<f64> {
            Ok(self.0)
        }
    }

    #[test]
    fn rates_for_unit_occupation() {
        let (down, up) = radiation_rates(2.0, &Constant(1.0), 1.0).unwrap();
        assert_abs_diff_eq!(down, 32.0 * PI * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(up, 16.0 * PI * PI, epsilon = 1e-12);
    }

    #[test]
    fn vacuum_has_no_absorption() {
        for w in [0.5, 2.0, 11.0, 24.0] {
            let (down, up) = radiation_rates(w, &EnvDistribution::Vacuum, 0.3).unwrap();
            assert_eq!(up, 0.0);
            assert!(down > 0.0);
        }
    }

    #[test]
    fn planck_rates_obey_detailed_balance() {
        for (t, w, g0) in [
            (1.0, 2.0, 1.0),
            (10.0, 11.0, 0.01),
            (50.0, 24.0, 3.0),
            (3.0, 0.7, 0.2),
        ] {
            let d = EnvDistribution::planck(t).unwrap();
            let (down, up) = radiation_rates(w, &d, g0).unwrap();
            assert_abs_diff_eq!(up / down, (-w / t).exp(), epsilon = 1e-14);
        }
    }

    #[test]
    fn rates_reject_non_positive_frequency() {
        assert!(matches!(
            radiation_rates(0.0, &Constant(1.0), 1.0),
            Err(Error::NonPositiveFrequency(_))
        ));
        assert!(radiation_rates(-2.0, &Constant(1.0), 1.0).is_err());
    }

    #[test]
    fn coupling_validation() {
        assert!(RadiationCoupling::new(0.0).is_err());
        assert!(RadiationCoupling::new(-1.0).is_err());
        assert!(RadiationCoupling::new(f64::INFINITY).is_err());
    }

    #[test]
    fn pauli_rates_follow_dipole_pattern() {
        let spec = SystemSpec::four_level_example();
        let coupling = RadiationCoupling::new(1.0).unwrap();
        let w = radiation_pauli_rates(&spec, &Constant(2.0), &coupling).unwrap();
        let pref = |om: f64| 4.0 * PI * PI * om * om;
        // 2 -> 1 emission at ω = 11 with μ = 0.8
        assert_abs_diff_eq!(w[(0, 1)], pref(11.0) * 3.0 * 0.64, epsilon = 1e-9);
        assert_abs_diff_eq!(w[(1, 0)], pref(11.0) * 2.0 * 0.64, epsilon = 1e-9);
        assert_eq!(w[(2, 2)], 0.0);
    }
}
