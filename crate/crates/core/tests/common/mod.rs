#![allow(dead_code)]

use ice_core::distribution::{EnvDistribution, MixtureParams};
use ice_core::gas::{GasCoupling, QuadratureSpec};
use ice_core::learning::{EnvironmentKind, Physics};
use ice_core::quantum::{CMatrix, DensityMatrix, SystemSpec};
use ice_core::radiation::RadiationCoupling;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

pub const TARGETS: [[f64; 4]; 3] = [
    [0.3, 0.3, 0.2, 0.2],
    [0.3, 0.2, 0.3, 0.2],
    [0.4, 0.1, 0.4, 0.1],
];

pub fn radiation() -> Physics {
    Physics::Radiation(RadiationCoupling::default())
}

pub fn gas() -> Physics {
    Physics::Gas(GasCoupling::four_level_example(), QuadratureSpec::default())
}

/// Same dipole as the shipped system, top level moved so that every Bohr
/// frequency is distinct.
pub fn nondegenerate_system() -> SystemSpec {
    let base = SystemSpec::four_level_example();
    SystemSpec::new(vec![0.0, 11.0, 13.0, 27.0], base.dipole().clone()).unwrap()
}

/// Ten components with centers in [0, 30] and widths in [0.01, 10], using
/// the environment's envelope.
pub fn random_mixture(kind: EnvironmentKind, rng: &mut impl Rng) -> EnvDistribution {
    let centers = (0..10).map(|_| rng.gen_range(0.0..30.0)).collect();
    let widths = (0..10).map(|_| rng.gen_range(0.01..10.0)).collect();
    let (envelope, beta) = kind.envelope();
    EnvDistribution::Mixture(MixtureParams::new(centers, widths, envelope, beta).unwrap())
}

pub fn random_hermitian(d: usize, rng: &mut impl Rng) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn random_state(d: usize, rng: &mut impl Rng) -> DensityMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let m = &g * g.adjoint();
    let tr = m.trace();
    DensityMatrix::new(m / tr).unwrap()
}

pub fn random_populations(d: usize, rng: &mut impl Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn real(m: DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn config_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(format!("{name}.toml"))
}
