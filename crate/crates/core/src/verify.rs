//! Self-check suite: identity residuals, projection structure, trajectory
//! identities, and agreement with the naive oracles.

use std::f64::consts::PI;
use std::fmt;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::diagnostics::{
    self, enstrophy_identity_residual, isometry_residual, orthogonality_residual,
    vortex_det_residual, DiagnosticsRecord, EnstrophySample,
};
use crate::dynamics::{self, Equation, SimParams, StrainState};
use crate::error::Result;
use crate::initdata::{colliding_jets, hessian_probe, random_solenoidal_band, Probe};
use crate::operators::{
    eig_symtensor, strain_of, strain_project, strain_project_faulty, velocity_gradient,
};
use crate::oracle;
use crate::spectral::{
    Grid, GridSpec, RealField, SpectralTensor, SpectralVector, SymTensor, SYM_WEIGHTS,
};

/// How much of the suite to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    /// Small grids, a few seconds.
    Quick,
    /// Acceptance-size grids and sample counts.
    Full,
}

impl Level {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "quick" => Some(Level::Quick),
            "full" => Some(Level::Full),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Level::Quick => "quick",
            Level::Full => "full",
        }
    }
}

/// Deliberate defects for checking that the suite catches them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Faults {
    /// Use the sign-flipped strain projection.
    pub flip_projection_sign: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub level: Level,
    pub checks: Vec<Check>,
    pub elapsed: Duration,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<30} {:>12} {:>10} {:>9}  result",
            "check", "measured", "tolerance", "time"
        )?;
        for c in &self.checks {
            writeln!(
                f,
                "{:<30} {:>12.3e} {:>10.1e} {:>8.2}s  {}",
                c.name,
                c.measured,
                c.tolerance,
                c.elapsed.as_secs_f64(),
                if c.passed { "pass" } else { "FAIL" }
            )?;
        }
        let failed = self.failures().count();
        write!(
            f,
            "{} level: {} of {} checks passed in {:.1}s",
            self.level.name(),
            self.checks.len() - failed,
            self.checks.len(),
            self.elapsed.as_secs_f64()
        )
    }
}

struct Suite {
    level: Level,
    faults: Faults,
    checks: Vec<Check>,
}

impl Suite {
    fn check(
        &mut self,
        name: &'static str,
        tolerance: f64,
        f: impl FnOnce(&Self) -> Result<f64>,
    ) -> Result<()> {
        let start = Instant::now();
        let measured = f(self)?;
        let elapsed = start.elapsed();
        log::debug!("{name}: {measured:.3e} (tolerance {tolerance:.1e})");
        self.checks.push(Check {
            name,
            measured,
            tolerance,
            passed: measured <= tolerance,
            elapsed,
        });
        Ok(())
    }

    fn full(&self) -> bool {
        self.level == Level::Full
    }

    /// Sample count: `quick` for the quick level, `full` otherwise.
    fn count(&self, quick: usize, full: usize) -> usize {
        if self.full() {
            full
        } else {
            quick
        }
    }

    fn project(&self, grid: &Grid, t: &SpectralTensor) -> SpectralTensor {
        if self.faults.flip_projection_sign {
            strain_project_faulty(grid, t)
        } else {
            strain_project(grid, t)
        }
    }
}

fn grid(n: usize, l: f64) -> Result<Grid> {
    Grid::new(GridSpec::new(n, l)?)
}

fn random_velocity(grid: &Grid, seed: u64) -> Result<SpectralVector> {
    random_solenoidal_band(grid, seed, -5.0 / 3.0, 1.0, None)
}

fn random_strain(grid: &Grid, seed: u64) -> Result<SpectralTensor> {
    strain_of(grid, &random_velocity(grid, seed)?)
}

fn random_real(grid: &Grid, seed: u64) -> Result<RealField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..grid.spec().len())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    RealField::from_vec(grid.spec(), data)
}

fn random_tensor(grid: &Grid, seed: u64) -> Result<SpectralTensor> {
    let c: Vec<_> = (0..6)
        .map(|i| random_real(grid, seed * 6 + i).map(|f| grid.forward(&f)))
        .collect::<Result<_>>()?;
    let c: [_; 6] = c.try_into().expect("six components");
    Ok(grid.dealias_tensor(&SymTensor::new(c)))
}

fn diff_norm(a: &SpectralTensor, b: &SpectralTensor) -> f64 {
    let mut d = a.clone();
    d.axpy(-1.0, b);
    d.norm_l2()
}

fn cmax_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn cmax(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn worst_over<T>(
    items: impl IntoIterator<Item = T>,
    mut f: impl FnMut(T) -> Result<f64>,
) -> Result<f64> {
    items.into_iter().try_fold(0.0_f64, |w, x| Ok(w.max(f(x)?)))
}

fn random_trace_free(rng: &mut ChaCha8Rng) -> [[f64; 3]; 3] {
    let mut e: [f64; 6] = std::array::from_fn(|_| StandardNormal.sample(rng));
    let t = (e[0] + e[3] + e[5]) / 3.0;
    e[0] -= t;
    e[3] -= t;
    e[5] -= t;
    let [a, b, c, d, f, h] = e;
    [[a, b, c], [b, d, f], [c, f, h]]
}

fn algebra(s: &mut Suite) -> Result<()> {
    s.check("tr_m3_equals_3det", 1e-12, |_| {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut worst = 0.0_f64;
        for _ in 0..10_000 {
            let m = random_trace_free(&mut rng);
            let mut tr3 = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        tr3 += m[i][j] * m[j][k] * m[k][i];
                    }
                }
            }
            let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
            let scale = m.iter().flatten().map(|v| v * v).sum::<f64>().powf(1.5);
            worst = worst.max((tr3 - 3.0 * det).abs() / scale);
        }
        Ok(worst)
    })?;

    let n = s.count(16, 32);
    let fields = s.count(5, 20) as u64;
    let g = grid(n, 2.0 * PI)?;
    s.check("tr_grad_u_cubed_vanishes", 1e-8, |_| {
        worst_over(0..fields, |seed| {
            let u = random_velocity(&g, seed)?;
            let du: Vec<Vec<RealField>> = velocity_gradient(&g, &u)
                .iter()
                .map(|row| row.iter().map(|f| g.inverse(f)).collect::<Result<_>>())
                .collect::<Result<_>>()?;
            let (mut tr, mut l3) = (0.0, 0.0);
            for p in 0..g.spec().len() {
                let a: [[f64; 3]; 3] =
                    std::array::from_fn(|i| std::array::from_fn(|j| du[i][j].data()[p]));
                for i in 0..3 {
                    for j in 0..3 {
                        for k in 0..3 {
                            tr += a[i][j] * a[j][k] * a[k][i];
                        }
                    }
                }
                l3 += a.iter().flatten().map(|v| v * v).sum::<f64>().powf(1.5);
            }
            Ok(tr.abs() / l3)
        })
    })?;
    s.check("vortex_stretching_det", 1e-8, |_| {
        worst_over(0..fields, |seed| {
            vortex_det_residual(&g, &random_strain(&g, 100 + seed)?)
        })
    })?;
    s.check("isometry", 1e-10, |_| {
        worst_over(0..fields, |seed| {
            Ok(isometry_residual(&g, &random_strain(&g, 200 + seed)?))
        })
    })?;
    s.check("dropped_term_orthogonal", 1e-8, |_| {
        worst_over(0..fields, |seed| {
            orthogonality_residual(&g, &random_strain(&g, 300 + seed)?)
        })
    })
}

fn projection(s: &mut Suite) -> Result<()> {
    let n = s.count(16, 32);
    let g = grid(n, 8.0)?;
    let seeds = 0..s.count(3, 10) as u64;
    s.check("projection_idempotent", 1e-10, |s| {
        worst_over(seeds.clone(), |seed| {
            let p = s.project(&g, &random_tensor(&g, seed)?);
            Ok(diff_norm(&s.project(&g, &p), &p) / p.norm_l2())
        })
    })?;
    s.check("projection_self_adjoint", 1e-10, |s| {
        worst_over(seeds.clone(), |seed| {
            let (m, q) = (random_tensor(&g, seed)?, random_tensor(&g, seed + 50)?);
            let (a, b) = (s.project(&g, &m).inner(&q), m.inner(&s.project(&g, &q)));
            Ok((a - b).abs() / (m.norm_l2() * q.norm_l2()))
        })
    })?;
    s.check("projection_kills_hessian", 1e-10, |s| {
        let h = hessian_probe(
            &g,
            Probe::GaussianHessian {
                center: [0.5, -0.25, 0.0],
            },
        );
        Ok(s.project(&g, &h).norm_l2() / h.norm_l2())
    })?;
    s.check("projection_kills_identity", 1e-10, |s| {
        worst_over(seeds.clone(), |seed| {
            let gi = hessian_probe(&g, Probe::ScalarIdentity { seed });
            Ok(s.project(&g, &gi).norm_l2() / gi.norm_l2())
        })
    })?;
    s.check("projection_fixes_strain", 1e-10, |s| {
        worst_over(seeds.clone(), |seed| {
            let st = random_strain(&g, 400 + seed)?;
            Ok(diff_norm(&s.project(&g, &st), &st) / st.norm_l2())
        })
    })
}

/// Records of a fixed-step run from `s`.
fn trajectory(
    g: &Grid,
    s: SpectralTensor,
    equation: Equation,
    nu: f64,
    dt: f64,
    steps: usize,
) -> Result<Vec<DiagnosticsRecord>> {
    let mut p = SimParams::new(nu, equation, dt * steps as f64);
    p.dt_max = dt;
    p.dt_min = dt * 1e-3;
    p.cfl = 1.0;
    p.output_every = 1;
    let mut sink = Vec::new();
    dynamics::run(g, StrainState::new(s, 0.0, p), &mut sink)?;
    Ok(sink)
}

/// Worst centered-difference enstrophy identity residual along a short smooth run.
pub fn enstrophy_identity_worst(g: &Grid, equation: Equation, seed: u64) -> Result<f64> {
    let nu = 0.5;
    let u = random_solenoidal_band(g, seed, -5.0 / 3.0, 1.0, Some(3))?;
    let recs = trajectory(g, strain_of(g, &u)?, equation, nu, 1e-3, 6)?;
    let samples: Vec<_> = recs
        .iter()
        .map(|r| EnstrophySample {
            t: r.t,
            e: r.e,
            h1: r.h1,
            det: r.det_s,
        })
        .collect();
    worst_over(samples.windows(3), |w| enstrophy_identity_residual(w, nu))
}

fn trajectories(s: &mut Suite) -> Result<()> {
    let g = grid(s.count(16, 64), 2.0 * PI)?;
    s.check("enstrophy_identity_model", 1e-4, |_| {
        enstrophy_identity_worst(&g, Equation::Model, 1)
    })?;
    s.check("enstrophy_identity_full", 1e-4, |_| {
        enstrophy_identity_worst(&g, Equation::FullStrain, 2)
    })?;
    let g = grid(s.count(16, 32), 2.0 * PI)?;
    s.check("formulation_equivalence", 1e-6, |_| formulation_gap(&g, 50))
}

/// Relative gap between velocity-form and strain-form runs after `steps` fixed steps.
pub fn formulation_gap(g: &Grid, steps: usize) -> Result<f64> {
    let mut s0 = random_strain(g, 7)?;
    s0.scale(6.0 / s0.norm_l2());
    let dt = 5e-3;
    let mut a = StrainState::new(
        s0.clone(),
        0.0,
        SimParams::new(0.3, Equation::VelocityNs, 1.0),
    );
    let mut b = StrainState::new(s0, 0.0, SimParams::new(0.3, Equation::FullStrain, 1.0));
    for _ in 0..steps {
        a = dynamics::step(g, &a, dt)?;
        b = dynamics::step(g, &b, dt)?;
    }
    Ok(diff_norm(&a.s, &b.s) / b.s.norm_l2())
}

fn oracles(s: &mut Suite) -> Result<()> {
    let g = grid(8, 2.0 * PI)?;
    s.check("fft_vs_naive_dft", 1e-12, |_| {
        worst_over(0..3, |seed| {
            let f = random_real(&g, seed)?;
            let slow = oracle::naive_dft(&f)?;
            let fwd = cmax_diff(g.forward(&f).data(), slow.data()) / cmax(slow.data());
            let back = oracle::naive_idft(&slow)?;
            let fast = g.inverse(&slow)?;
            let inv = fast
                .data()
                .iter()
                .zip(back.data())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
                / back.max_abs();
            Ok(fwd.max(inv))
        })
    })?;
    s.check("product_vs_naive_convolution", 1e-12, |_| {
        worst_over(0..3, |seed| {
            let fa = g.forward(&random_real(&g, 10 + seed)?);
            let fb = g.forward(&random_real(&g, 20 + seed)?);
            let (ra, rb) = (g.inverse(&fa)?, g.inverse(&fb)?);
            let prod = ra
                .data()
                .iter()
                .zip(rb.data())
                .map(|(x, y)| x * y)
                .collect();
            let pseudo = oracle::full_spectrum(&g.forward(&RealField::from_vec(g.spec(), prod)?));
            let conv = oracle::naive_convolution(&fa, &fb)?;
            Ok(cmax_diff(&pseudo, &conv) / cmax(&conv))
        })
    })?;
    s.check("eig_vs_jacobi", 1e-10, |_| {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        worst_over(0..100, |_| {
            let e: [f64; 6] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
            let m = [[e[0], e[1], e[2]], [e[1], e[3], e[4]], [e[2], e[4], e[5]]];
            let fast = eig_symtensor(m).as_array();
            let slow = oracle::jacobi_eig(m);
            let scale = e
                .iter()
                .zip(SYM_WEIGHTS)
                .map(|(v, w)| w * v * v)
                .sum::<f64>()
                .sqrt();
            Ok(fast
                .iter()
                .zip(slow)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
                / scale)
        })
    })?;
    s.check("det_quadrature", 1e-9, |_| {
        let (q, c) = (
            oracle::det_integrand_quadrature(),
            oracle::det_integral_closed_form(),
        );
        Ok((q - c).abs() / c)
    })
}

/// `−∫det S` of unit colliding jets on an `n³` grid of side 16, relative to the closed form.
pub fn jets_det_error(n: usize) -> Result<f64> {
    let g = grid(n, 16.0)?;
    let s = strain_of(&g, &colliding_jets(&g, 1.0, [0.0; 3]))?;
    let det = -diagnostics::det_integral(&g, &s)?;
    let want = oracle::det_integral_closed_form();
    Ok((det - want).abs() / want)
}

/// Runs the suite. Errors are reserved for failures to evaluate a check.
pub fn run_suite(level: Level, faults: Faults) -> Result<Report> {
    let start = Instant::now();
    let mut s = Suite {
        level,
        faults,
        checks: Vec::new(),
    };
    algebra(&mut s)?;
    projection(&mut s)?;
    trajectories(&mut s)?;
    oracles(&mut s)?;
    if s.full() {
        s.check("jets_det_integral", 1e-6, |_| jets_det_error(128))?;
    }
    Ok(Report {
        level,
        checks: s.checks,
        elapsed: start.elapsed(),
    })
}
