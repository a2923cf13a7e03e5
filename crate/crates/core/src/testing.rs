//! Shared helpers for unit tests.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::spectral::{Grid, GridSpec, RealField, SpectralField};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// White noise samples.
pub fn random_real(spec: GridSpec, seed: u64) -> RealField {
    let mut r = rng(seed);
    let data = (0..spec.len())
        .map(|_| StandardNormal.sample(&mut r))
        .collect();
    RealField::from_vec(spec, data).unwrap()
}

/// Noise filtered to modes with every `|m_i| <= max_mode`.
pub fn random_smooth(grid: &Grid, seed: u64, max_mode: i64) -> SpectralField {
    let f = grid.forward(&random_real(grid.spec(), seed));
    grid.map_modes(&f, |m, c| {
        if m.m.iter().all(|v| v.abs() <= max_mode) {
            c
        } else {
            num_complex::Complex64::new(0.0, 0.0)
        }
    })
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Zero-mean divergence-free smooth velocity with every `|m_i| <= max_mode`.
pub fn random_solenoidal(grid: &Grid, seed: u64, max_mode: i64) -> crate::spectral::SpectralVector {
    let v = crate::spectral::Vector::new([0, 1, 2].map(|c| {
        let f = random_smooth(grid, seed * 3 + c, max_mode);
        grid.map_modes(&f, |m, c| {
            if m.is_zero() {
                num_complex::Complex64::new(0.0, 0.0)
            } else {
                c
            }
        })
    }));
    crate::operators::leray_project(grid, &v)
}
