//! Time integration of the model equation, the full strain equation, and
//! velocity-form Navier–Stokes.
//!
//! Diffusion is applied exactly through the heat multiplier and the
//! nonlinearity by classical RK4 on the transformed variable (Lawson's
//! integrating-factor RK4). Strain states are re-projected onto the strain
//! space after every step.

pub mod checkpoint;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    self, analyze, envelope_check, local_existence_constant, Accumulators, AnalysisOptions,
    DiagnosticsRecord, EnvelopeCheck,
};
use crate::error::{Error, Result};
use crate::operators::{
    advection_term_real, advection_velocity, leray_project, omega_outer_real, s_squared_shifted,
    strain_project_in_place, sym_gradient, velocity_of, velocity_unchecked, vorticity_of,
};
use crate::spectral::{Grid, SpectralTensor, SpectralVector};
use checkpoint::Checkpoint;

/// Which system to evolve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    /// `∂t S = νΔS − ⅔ P_st(S²)`
    Model,
    /// `∂t S = νΔS − P_st((u·∇)S + S² + ¼ω⊗ω)`
    FullStrain,
    /// `∂t u = νΔu − P_df ∇·(u⊗u)`
    VelocityNs,
}

impl Equation {
    pub const ALL: [Equation; 3] = [Equation::Model, Equation::FullStrain, Equation::VelocityNs];

    pub fn code(self) -> u8 {
        match self {
            Equation::Model => 0,
            Equation::FullStrain => 1,
            Equation::VelocityNs => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.code() == c)
    }

    pub fn name(self) -> &'static str {
        match self {
            Equation::Model => "model",
            Equation::FullStrain => "full_strain",
            Equation::VelocityNs => "velocity_ns",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub nu: f64,
    pub equation: Equation,
    pub t_end: f64,
    pub cfl: f64,
    pub dt_max: f64,
    /// Steps shorter than this count as blowup.
    pub dt_min: f64,
    /// Steps between diagnostics records.
    pub output_every: usize,
    /// Steps between checkpoints; 0 disables them.
    pub checkpoint_every: usize,
    /// Share of enstrophy in the top eighth of retained shells that counts as
    /// resolution loss.
    pub tail_threshold: f64,
    /// Compute the identity residuals on every record.
    pub residuals: bool,
    /// Drop the nonlinearity (pure diffusion).
    pub linear_only: bool,
}

impl SimParams {
    pub const DEFAULT_CFL: f64 = 0.4;
    pub const DEFAULT_TAIL_THRESHOLD: f64 = 0.01;
    /// Fraction of the retained band treated as its tail.
    pub const TAIL_BAND: f64 = 0.125;
    /// Enstrophy growth factor that counts as blowup.
    pub const BLOWUP_GROWTH: f64 = 1e6;

    pub fn new(nu: f64, equation: Equation, t_end: f64) -> Self {
        Self {
            nu,
            equation,
            t_end,
            cfl: Self::DEFAULT_CFL,
            dt_max: 1e-2,
            dt_min: 1e-10,
            output_every: 10,
            checkpoint_every: 0,
            tail_threshold: Self::DEFAULT_TAIL_THRESHOLD,
            residuals: true,
            linear_only: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return bad(format!("nu must be positive, got {}", self.nu));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be >= 0, got {}", self.t_end));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl must be in (0, 1], got {}", self.cfl));
        }
        if !(self.dt_min > 0.0 && self.dt_min < self.dt_max && self.dt_max.is_finite()) {
            return bad(format!(
                "need 0 < dt_min < dt_max, got {} and {}",
                self.dt_min, self.dt_max
            ));
        }
        if self.output_every == 0 {
            return bad("output_every must be >= 1".into());
        }
        if !(self.tail_threshold > 0.0) {
            return bad(format!(
                "tail_threshold must be positive, got {}",
                self.tail_threshold
            ));
        }
        Ok(())
    }
}

/// A strain field at time `t`, in spectral form.
#[derive(Clone, Debug)]
pub struct StrainState {
    pub s: SpectralTensor,
    pub t: f64,
    pub params: SimParams,
}

impl StrainState {
    pub fn new(s: SpectralTensor, t: f64, params: SimParams) -> Self {
        Self { s, t, params }
    }

    pub fn checkpoint(&self, grid: &Grid) -> Result<Checkpoint> {
        Ok(Checkpoint {
            t: self.t,
            nu: self.params.nu,
            equation: self.params.equation,
            strain: grid.inverse_tensor(&self.s)?,
        })
    }
}

/// `−⅔ P_st(S²)`
fn model_nonlinear(grid: &Grid, s: &SpectralTensor) -> Result<SpectralTensor> {
    let mut out = s_squared_shifted(grid, s)?;
    strain_project_in_place(grid, &mut out);
    out.scale(-2.0 / 3.0);
    Ok(out)
}

/// `−P_st((u·∇)S + S² + ¼ω⊗ω)` with `u`, `ω` recovered from `S`.
fn full_nonlinear(grid: &Grid, s: &SpectralTensor, u: &SpectralVector) -> Result<SpectralTensor> {
    let ur = grid.inverse_vector(u)?;
    let wr = grid.inverse_vector(&vorticity_of(grid, u))?;
    let mut acc = advection_term_real(grid, &ur, s)?;
    acc.axpy(1.0, &s_squared_shifted(grid, s)?);
    acc.axpy(
        0.25,
        &grid.dealias_tensor(&grid.forward_tensor(&omega_outer_real(&wr))),
    );
    strain_project_in_place(grid, &mut acc);
    acc.scale(-1.0);
    Ok(acc)
}

/// `−P_df ∇·(u⊗u)`
fn velocity_nonlinear(grid: &Grid, u: &SpectralVector) -> Result<SpectralVector> {
    let mut out = leray_project(grid, &advection_velocity(grid, u)?);
    out.scale(-1.0);
    Ok(out)
}

fn add_diffusion(
    grid: &Grid,
    mut nl: SpectralTensor,
    s: &SpectralTensor,
    nu: f64,
) -> SpectralTensor {
    nl.axpy(nu, &grid.laplacian_tensor(s));
    nl
}

/// `νΔS − ⅔ P_st(S²)`
pub fn model_rhs(grid: &Grid, s: &SpectralTensor, nu: f64) -> Result<SpectralTensor> {
    Ok(add_diffusion(grid, model_nonlinear(grid, s)?, s, nu))
}

/// `νΔS − P_st((u·∇)S + S² + ¼ω⊗ω)`
pub fn full_rhs(grid: &Grid, s: &SpectralTensor, nu: f64) -> Result<SpectralTensor> {
    let u = velocity_of(grid, s)?;
    Ok(add_diffusion(grid, full_nonlinear(grid, s, &u)?, s, nu))
}

/// `νΔu − P_df ∇·(u⊗u)`
pub fn velocity_rhs(grid: &Grid, u: &SpectralVector, nu: f64) -> Result<SpectralVector> {
    let mut out = velocity_nonlinear(grid, u)?;
    for (o, c) in out.c.iter_mut().zip(&u.c) {
        o.axpy(nu, &grid.laplacian(c));
    }
    Ok(out)
}

/// Right-hand side of `equation` expressed in strain form.
pub fn rhs(grid: &Grid, s: &SpectralTensor, nu: f64, equation: Equation) -> Result<SpectralTensor> {
    match equation {
        Equation::Model => model_rhs(grid, s, nu),
        Equation::FullStrain => full_rhs(grid, s, nu),
        Equation::VelocityNs => {
            let u = velocity_of(grid, s)?;
            Ok(sym_gradient(grid, &velocity_rhs(grid, &u, nu)?))
        }
    }
}

/// Fields the integrating-factor scheme can advance.
trait Evolving: Clone {
    fn axpy(&mut self, a: f64, x: &Self);
    fn heat(&mut self, grid: &Grid, nu_t: f64) -> Result<()>;
}

impl Evolving for SpectralTensor {
    fn axpy(&mut self, a: f64, x: &Self) {
        SpectralTensor::axpy(self, a, x)
    }
    fn heat(&mut self, grid: &Grid, nu_t: f64) -> Result<()> {
        grid.heat_tensor_in_place(self, nu_t)
    }
}

impl Evolving for SpectralVector {
    fn axpy(&mut self, a: f64, x: &Self) {
        SpectralVector::axpy(self, a, x)
    }
    fn heat(&mut self, grid: &Grid, nu_t: f64) -> Result<()> {
        grid.heat_vector_in_place(self, nu_t)
    }
}

/// One Lawson RK4 step of `x' = νΔx + N(x)`, written with the half-step
/// factor `E = e^{νhΔ/2}` only:
/// `x_{n+1} = E(Ex + h/6 Ek₁ + h/3 (k₂ + k₃)) + h/6 k₄`.
fn if_rk4<T: Evolving>(
    grid: &Grid,
    x: &T,
    nu: f64,
    h: f64,
    nl: impl Fn(&T) -> Result<T>,
) -> Result<T> {
    let nu_t = nu * h / 2.0;
    let mut ex = x.clone();
    ex.heat(grid, nu_t)?;
    let mut ek1 = nl(x)?;
    ek1.heat(grid, nu_t)?;

    let mut x2 = ex.clone();
    x2.axpy(h / 2.0, &ek1);
    let k2 = nl(&x2)?;
    let mut x3 = x2;
    x3.clone_from(&ex);
    x3.axpy(h / 2.0, &k2);
    let k3 = nl(&x3)?;
    let mut x4 = x3;
    x4.clone_from(&ex);
    x4.axpy(h, &k3);
    x4.heat(grid, nu_t)?;
    let k4 = nl(&x4)?;

    let mut out = ex;
    out.axpy(h / 6.0, &ek1);
    out.axpy(h / 3.0, &k2);
    out.axpy(h / 3.0, &k3);
    out.heat(grid, nu_t)?;
    out.axpy(h / 6.0, &k4);
    Ok(out)
}

/// Advances the state by `dt` and re-projects onto the strain space.
pub fn step(grid: &Grid, state: &StrainState, dt: f64) -> Result<StrainState> {
    let p = &state.params;
    if !(dt > 0.0) || dt > p.dt_max * (1.0 + 1e-12) {
        return Err(Error::InvalidParams(format!(
            "step size {dt} outside (0, dt_max = {}]",
            p.dt_max
        )));
    }
    let nu = p.nu;
    let s = if p.linear_only {
        grid.heat_tensor(&state.s, nu * dt)?
    } else {
        match p.equation {
            Equation::Model => if_rk4(grid, &state.s, nu, dt, |s| model_nonlinear(grid, s))?,
            Equation::FullStrain => if_rk4(grid, &state.s, nu, dt, |s| {
                full_nonlinear(grid, s, &velocity_unchecked(grid, s))
            })?,
            Equation::VelocityNs => {
                let u = velocity_unchecked(grid, &state.s);
                let u = if_rk4(grid, &u, nu, dt, |u| velocity_nonlinear(grid, u))?;
                sym_gradient(grid, &leray_project(grid, &u))
            }
        }
    };
    let mut s = s;
    strain_project_in_place(grid, &mut s);
    let t = state.t + dt;
    if !s.is_finite() {
        return Err(Error::NonFinite { t });
    }
    Ok(StrainState {
        s,
        t,
        params: state.params.clone(),
    })
}

/// `min(dt_max, cfl·Δx/max(1,‖u‖_∞), cfl/max(1,‖S‖_∞))`, not clamped below.
pub fn cfl_dt(grid: &Grid, state: &StrainState) -> Result<f64> {
    let p = &state.params;
    let u = grid
        .inverse_vector(&velocity_unchecked(grid, &state.s))?
        .max_norm();
    let s = grid.inverse_tensor(&state.s)?.max_norm();
    let dx = grid.spec().dx();
    Ok(p.dt_max
        .min(p.cfl * dx / u.max(1.0))
        .min(p.cfl / s.max(1.0)))
}

/// How a run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    ResolvedToTEnd,
    BlowupDetected,
    ResolutionLost,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::ResolvedToTEnd => "resolved_to_t_end",
            Outcome::BlowupDetected => "blowup_detected",
            Outcome::ResolutionLost => "resolution_lost",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::ResolvedToTEnd => 0,
            Outcome::BlowupDetected => 10,
            Outcome::ResolutionLost => 11,
        }
    }
}

/// Sanity check of the first step against the local-existence time `C/‖S⁰‖⁴_{L²}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalExistence {
    pub constant: f64,
    pub bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub within_bound: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub equation: Equation,
    pub nu: f64,
    pub e0: f64,
    pub k0: f64,
    pub f0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    /// `1/r₀`, present when `g₀ > 0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_star_envelope: Option<f64>,
    /// `(−E₀+√(E₀²+f₀K₀))/f₀`, present when `f₀ > 0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_star_perturbative: Option<f64>,
    pub outcome: Outcome,
    pub t_outcome: f64,
    pub steps: usize,
    pub records: usize,
    /// Records at or above the envelope; absent when `g₀ ≤ 0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub envelope_passes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub envelope_samples: Option<usize>,
    pub e_final: f64,
    pub local_existence: LocalExistence,
}

/// Consumer of run output, called in time order.
pub trait Sink {
    fn record(&mut self, record: &DiagnosticsRecord) -> Result<()>;

    fn checkpoint(&mut self, _checkpoint: &Checkpoint) -> Result<()> {
        Ok(())
    }
}

impl Sink for Vec<DiagnosticsRecord> {
    fn record(&mut self, record: &DiagnosticsRecord) -> Result<()> {
        self.push(record.clone());
        Ok(())
    }
}

/// Discards everything.
pub struct NullSink;

impl Sink for NullSink {
    fn record(&mut self, _: &DiagnosticsRecord) -> Result<()> {
        Ok(())
    }
}

struct Recorder<'a, S: Sink> {
    grid: &'a Grid,
    sink: &'a mut S,
    acc: Accumulators,
    opts: AnalysisOptions,
    samples: Vec<(f64, f64)>,
    count: usize,
}

impl<S: Sink> Recorder<'_, S> {
    fn emit(&mut self, state: &StrainState) -> Result<()> {
        let p = &state.params;
        let mut rec = analyze(self.grid, &state.s, p.nu, state.t, self.opts)?;
        let acc = self.acc.push(state.t, rec.lam2());
        [rec.acc_q1_5, rec.acc_q2, rec.acc_q3, rec.acc_qinf] = acc;
        if self.opts.residuals && rec.e > 0.0 {
            let r = rhs(self.grid, &state.s, p.nu, p.equation)?;
            let rate = if p.linear_only {
                -2.0 * p.nu * rec.h1
            } else {
                -2.0 * p.nu * rec.h1 - 4.0 * rec.det_s
            };
            let de = 2.0
                * state.s.inner(&if p.linear_only {
                    self.grid.laplacian_tensor(&state.s).map(|c| c * p.nu)
                } else {
                    r
                });
            rec.res_enstrophy = Some((de - rate).abs() / rate.abs().max(diagnostics::EPS));
        }
        self.samples.push((rec.t, rec.e));
        self.count += 1;
        self.sink.record(&rec)
    }
}

/// Steps `state0` until `t_end`, blowup, or resolution loss.
pub fn run<S: Sink>(grid: &Grid, state0: StrainState, sink: &mut S) -> Result<BlowupReport> {
    let p = state0.params.clone();
    p.validate()?;
    let s0 = &state0.s;
    let e0 = diagnostics::enstrophy(s0);
    let k0 = diagnostics::energy(grid, s0);
    let f0 = diagnostics::f_of(grid, s0, p.nu)?;
    let (g0, r0) = if e0 > 0.0 {
        (Some(f0 / e0.powf(1.5)), Some(f0 / (2.0 * e0)))
    } else {
        (None, None)
    };
    let t_star_envelope = match (g0, r0) {
        (Some(g), Some(r)) if g > 0.0 => Some(1.0 / r),
        _ => None,
    };
    let t_star_perturbative = (f0 > 0.0).then(|| (-e0 + (e0 * e0 + f0 * k0).sqrt()) / f0);
    let constant = local_existence_constant();
    let mut local = LocalExistence {
        constant,
        bound: constant / (e0 * e0),
        first_dt: None,
        within_bound: None,
    };

    let opts = AnalysisOptions {
        ratio: p.equation == Equation::FullStrain,
        residuals: p.residuals,
    };
    let mut rec = Recorder {
        grid,
        sink,
        acc: Accumulators::default(),
        opts,
        samples: Vec::new(),
        count: 0,
    };
    let mut state = state0;
    let t_start = state.t;
    let mut steps = 0usize;
    rec.emit(&state)?;
    let mut last_emitted = 0usize;

    let outcome = loop {
        let remaining = p.t_end - state.t;
        if remaining <= 1e-12 * p.t_end.max(1.0) {
            break Outcome::ResolvedToTEnd;
        }
        let dt_cfl = cfl_dt(grid, &state)?;
        if dt_cfl < p.dt_min {
            break Outcome::BlowupDetected;
        }
        let dt = dt_cfl.min(remaining);
        let next = match step(grid, &state, dt) {
            Ok(s) => s,
            Err(Error::NonFinite { .. }) => break Outcome::BlowupDetected,
            Err(e) => return Err(e),
        };
        if local.first_dt.is_none() {
            local.first_dt = Some(dt);
            local.within_bound = Some(dt <= local.bound);
        }
        state = next;
        steps += 1;
        if steps % p.output_every == 0 {
            rec.emit(&state)?;
            last_emitted = steps;
        }
        if p.checkpoint_every > 0 && steps % p.checkpoint_every == 0 {
            rec.sink.checkpoint(&state.checkpoint(grid)?)?;
        }
        if grid.tail_fraction(&state.s, SimParams::TAIL_BAND) > p.tail_threshold {
            break Outcome::ResolutionLost;
        }
        if diagnostics::enstrophy(&state.s) > SimParams::BLOWUP_GROWTH * e0 {
            break Outcome::BlowupDetected;
        }
    };
    if last_emitted != steps {
        rec.emit(&state)?;
    }

    let envelope = r0.filter(|_| t_star_envelope.is_some()).map(|r| {
        let shifted: Vec<(f64, f64)> = rec.samples.iter().map(|&(t, e)| (t - t_start, e)).collect();
        envelope_check(&shifted, e0, r)
    });
    let (envelope_passes, envelope_samples) = match &envelope {
        Some(c @ EnvelopeCheck::Checked(v)) => (Some(c.pass_count()), Some(v.len())),
        _ => (None, None),
    };
    Ok(BlowupReport {
        equation: p.equation,
        nu: p.nu,
        e0,
        k0,
        f0,
        g0,
        r0,
        t_star_envelope,
        t_star_perturbative,
        outcome,
        t_outcome: state.t,
        steps,
        records: rec.count,
        envelope_passes,
        envelope_samples,
        e_final: diagnostics::enstrophy(&state.s),
        local_existence: local,
    })
}
