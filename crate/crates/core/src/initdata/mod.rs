//! Initial data: the axisymmetric colliding-jets velocity, random solenoidal
//! fields, projection probes, the dilated perturbation family, and restarts.

use std::path::PathBuf;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dynamics::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::operators::{leray_project, strain_of, strain_project};
use crate::spectral::{
    Axis, Grid, RealField, RealVector, SpectralField, SpectralTensor, SpectralVector, SymTensor,
    Vector, SYM_PAIRS,
};

/// Box length below which Gaussian data no longer decays to roundoff at the boundary.
pub const MIN_BOX_LENGTH: f64 = 16.0;

/// Dilation factors accepted by [`perturbed_family`].
pub const DILATIONS: [usize; 4] = [1, 2, 4, 8];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `m·((1−2z²)(x,y,0) + (−2z+2(x²+y²)z)(0,0,1))·e^{−|x|²}` about `center`.
pub fn colliding_jets(grid: &Grid, m: f64, center: [f64; 3]) -> SpectralVector {
    let spec = grid.spec();
    if spec.box_length < MIN_BOX_LENGTH {
        log::warn!(
            "colliding_jets on L = {} < {MIN_BOX_LENGTH}: boundary truncation is no longer negligible",
            spec.box_length
        );
    }
    let [cx, cy, cz] = center;
    let g = |x: f64, y: f64, z: f64| (-(x * x + y * y + z * z)).exp();
    let u = RealVector::new([
        RealField::from_fn(spec, |x, y, z| {
            let (x, y, z) = (x - cx, y - cy, z - cz);
            m * (1.0 - 2.0 * z * z) * x * g(x, y, z)
        }),
        RealField::from_fn(spec, |x, y, z| {
            let (x, y, z) = (x - cx, y - cy, z - cz);
            m * (1.0 - 2.0 * z * z) * y * g(x, y, z)
        }),
        RealField::from_fn(spec, |x, y, z| {
            let (x, y, z) = (x - cx, y - cy, z - cz);
            m * (-2.0 * z + 2.0 * (x * x + y * y) * z) * g(x, y, z)
        }),
    ]);
    grid.forward_vector(&u)
}

/// Gaussian random velocity with shell spectrum `∝ |k|^slope` on the
/// dealiased modes, Leray-projected, zero mean, scaled to RMS `amplitude`.
pub fn random_solenoidal(
    grid: &Grid,
    seed: u64,
    slope: f64,
    amplitude: f64,
) -> Result<SpectralVector> {
    random_solenoidal_band(grid, seed, slope, amplitude, None)
}

/// [`random_solenoidal`] restricted to modes with every `|m_i| <= max_mode`.
pub fn random_solenoidal_band(
    grid: &Grid,
    seed: u64,
    slope: f64,
    amplitude: f64,
    max_mode: Option<i64>,
) -> Result<SpectralVector> {
    if !(slope < -1.0) {
        return Err(Error::InvalidParams(format!(
            "spectral slope must be < -1, got {slope}"
        )));
    }
    if !amplitude.is_finite() {
        return Err(Error::InvalidParams(format!(
            "amplitude must be finite, got {amplitude}"
        )));
    }
    let spec = grid.spec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Vector::new([0, 1, 2].map(|_| {
        let data = (0..spec.len())
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        grid.forward(&RealField::from_vec(spec, data).expect("length matches grid"))
    }));
    // shell energy ∝ |k|^slope over a shell area ∝ |k|², so |û| ∝ |k|^{(slope−2)/2}
    let shaped = noise.map(|f| {
        grid.map_modes(f, |m, c| {
            let keep = !m.is_zero()
                && grid.retained(m)
                && max_mode.is_none_or(|mm| m.m.iter().all(|v| v.abs() <= mm));
            if keep {
                c * m.k2().powf(0.25 * (slope - 2.0))
            } else {
                ZERO
            }
        })
    });
    let mut u = leray_project(grid, &shaped);
    let rms = (u.inner(&u) / spec.volume()).sqrt();
    if rms > 0.0 {
        u.scale(amplitude / rms);
    }
    Ok(u)
}

/// Fields in the orthogonal complement of the strain space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Probe {
    /// `Hess f` for `f = exp(−|x−c|²)`.
    GaussianHessian { center: [f64; 3] },
    /// `g·I₃` for a smooth random scalar `g`.
    ScalarIdentity { seed: u64 },
}

pub fn hessian_probe(grid: &Grid, probe: Probe) -> SpectralTensor {
    let spec = grid.spec();
    match probe {
        Probe::GaussianHessian {
            center: [cx, cy, cz],
        } => {
            let f = grid.forward(&RealField::from_fn(spec, |x, y, z| {
                let (x, y, z) = (x - cx, y - cy, z - cz);
                (-(x * x + y * y + z * z)).exp()
            }));
            let d1 = Axis::ALL.map(|a| grid.derivative(&f, a));
            SymTensor::new(SYM_PAIRS.map(|(i, j)| grid.derivative(&d1[i], Axis::ALL[j])))
        }
        Probe::ScalarIdentity { seed } => {
            let g = random_solenoidal_band(grid, seed, -4.0, 1.0, None)
                .expect("fixed valid parameters")
                .c[0]
                .clone();
            let z = SpectralField::zeros(spec);
            SymTensor::new([g.clone(), z.clone(), z.clone(), g.clone(), z, g])
        }
    }
}

/// `S^λ = M + Q^λ` with `Q^λ` the dilation sending mode `m` to `λm`.
///
/// Coefficients are scaled by `λ^{-3/2}`, so `‖Q^λ‖_{Ḣ¹} = λ^{-1/2}‖Q‖_{Ḣ¹}` as
/// for `Q(λx)` on ℝ³ (the box volume does not dilate). Coefficients of `Q`
/// below `1e-14` of its largest are treated as roundoff and dropped; any
/// larger one whose image leaves the dealiased band is an error.
pub fn perturbed_family(
    grid: &Grid,
    m: &SpectralTensor,
    q: &SpectralTensor,
    lambda: usize,
) -> Result<SpectralTensor> {
    if !DILATIONS.contains(&lambda) {
        return Err(Error::InvalidParams(format!(
            "dilation must be one of {DILATIONS:?}, got {lambda}"
        )));
    }
    let cutoff = grid.spec().cutoff();
    let peak =
        q.c.iter()
            .flat_map(|c| c.data().iter())
            .map(|v| v.norm())
            .fold(0.0, f64::max);
    let floor = 1e-14 * peak;
    let spec = grid.spec();
    let l = lambda as i64;
    let amp = (lambda as f64).powf(-1.5);
    let mut out = SpectralTensor::zeros(spec);
    for (src, dst) in q.c.iter().zip(out.c.iter_mut()) {
        for mode in grid.modes() {
            let c = src.data()[mode.index];
            if c.norm() <= floor {
                continue;
            }
            if let Some(&bad) = mode.m.iter().find(|v| (v.abs() * l) as usize >= cutoff) {
                return Err(Error::DilationOutOfRange {
                    lambda,
                    mode: bad,
                    cutoff,
                });
            }
            let [mx, my, mz] = mode.m.map(|v| v * l);
            let wrap = |v: i64| v.rem_euclid(spec.n as i64) as usize;
            // every mx here is >= 0 because the half spectrum stores kx in [0, n/2]
            let idx = spec.spectral_index(mx as usize, wrap(my), wrap(mz));
            dst.data_mut()[idx] = c * amp;
        }
    }
    out.axpy(1.0, m);
    Ok(strain_project(grid, &out))
}

/// What to build for a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    CollidingJets,
    RandomSolenoidal,
    HessianProbe,
    PerturbedFamily,
    FromCheckpoint,
}

impl InitKind {
    pub const ALL: [InitKind; 5] = [
        InitKind::CollidingJets,
        InitKind::RandomSolenoidal,
        InitKind::HessianProbe,
        InitKind::PerturbedFamily,
        InitKind::FromCheckpoint,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InitKind::CollidingJets => "colliding_jets",
            InitKind::RandomSolenoidal => "random_solenoidal",
            InitKind::HessianProbe => "hessian_probe",
            InitKind::PerturbedFamily => "perturbed_family",
            InitKind::FromCheckpoint => "from_checkpoint",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitSpec {
    pub kind: InitKind,
    /// Amplitude `m` of the colliding jets (also `M` in the perturbed family)
    /// or RMS velocity of random fields.
    pub amplitude: f64,
    pub seed: u64,
    /// Spectral slope of random fields.
    pub slope: f64,
    /// Dilation of the perturbation.
    pub lambda: usize,
    /// RMS velocity of the perturbation `Q`.
    pub q_amplitude: f64,
    /// Largest `|m_i|` of the perturbation `Q` before dilation.
    pub q_max_mode: i64,
    pub center: [f64; 3],
    pub path: Option<PathBuf>,
}

impl InitSpec {
    pub fn new(kind: InitKind) -> Self {
        Self {
            kind,
            amplitude: 1.0,
            seed: 0,
            slope: -4.0,
            lambda: 1,
            q_amplitude: 1.0,
            q_max_mode: 2,
            center: [0.0; 3],
            path: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() || !self.q_amplitude.is_finite() {
            return Err(Error::InvalidParams("amplitude must be finite".into()));
        }
        if self.kind == InitKind::PerturbedFamily && self.lambda < 1 {
            return Err(Error::InvalidParams("lambda must be >= 1".into()));
        }
        if self.kind == InitKind::FromCheckpoint && self.path.is_none() {
            return Err(Error::InvalidParams(
                "from_checkpoint requires a path".into(),
            ));
        }
        Ok(())
    }

    /// Initial strain, time, and (for restarts) the stored viscosity.
    pub fn build(&self, grid: &Grid) -> Result<InitialStrain> {
        self.validate()?;
        let strain = match self.kind {
            InitKind::CollidingJets => {
                strain_of(grid, &colliding_jets(grid, self.amplitude, self.center))?
            }
            InitKind::RandomSolenoidal => strain_of(
                grid,
                &random_solenoidal(grid, self.seed, self.slope, self.amplitude)?,
            )?,
            InitKind::HessianProbe => {
                return Err(Error::InvalidParams(
                    "hessian_probe lies outside the strain space and cannot start a run".into(),
                ))
            }
            InitKind::PerturbedFamily => {
                let m = strain_of(grid, &colliding_jets(grid, self.amplitude, self.center))?;
                let q = self.perturbation(grid)?;
                perturbed_family(grid, &m, &q, self.lambda)?
            }
            InitKind::FromCheckpoint => {
                let path = self.path.as_ref().expect("validated");
                let ck = Checkpoint::read(path, Some(grid.n()))?;
                if ck.strain.spec().box_length != grid.spec().box_length {
                    return Err(Error::Checkpoint(format!(
                        "checkpoint box length {} differs from configured {}",
                        ck.strain.spec().box_length,
                        grid.spec().box_length
                    )));
                }
                let s = grid.forward_tensor(&crate::spectral::RealTensor::new(
                    ck.strain
                        .c
                        .clone()
                        .map(|c| RealField::from_vec(grid.spec(), c.into_vec()).expect("same n")),
                ));
                return Ok(InitialStrain {
                    strain: s,
                    t: ck.t,
                    nu: Some(ck.nu),
                });
            }
        };
        Ok(InitialStrain {
            strain,
            t: 0.0,
            nu: None,
        })
    }

    /// The band-limited perturbation `Q` of the perturbed family, before dilation.
    pub fn perturbation(&self, grid: &Grid) -> Result<SpectralTensor> {
        let w = random_solenoidal_band(
            grid,
            self.seed,
            self.slope,
            self.q_amplitude,
            Some(self.q_max_mode),
        )?;
        strain_of(grid, &w)
    }
}

#[derive(Clone, Debug)]
pub struct InitialStrain {
    pub strain: SpectralTensor,
    pub t: f64,
    pub nu: Option<f64>,
}

#[cfg(test)]
mod tests;
