//! Scalar functionals of a strain field and the residual monitors for the
//! identities they satisfy.
//!
//! All integrals are equal-weight grid sums times the cell volume, and
//! Sobolev norms use the multiplier `|k|^{2α}` with the zero mode dropped.
//! Because quadratic terms are dealiased, grid sums of triple products of
//! resolved fields are exact, so the identity residuals sit at roundoff.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{
    advection_term_real, lambda_fields_real, omega_outer_real, strain_project, velocity_unchecked,
    vorticity_of,
};
use crate::spectral::{
    Grid, RealField, RealTensor, RealVector, SpectralField, SpectralTensor, SYM_WEIGHTS,
};

/// Guard added to denominators of relative residuals.
pub const EPS: f64 = 1e-30;

/// Slack allowed on the blowup envelope.
pub const ENVELOPE_SLACK: f64 = 1e-3;

/// Exponents `q` of the λ₂⁺ norms, in record order.
pub const LAMBDA_Q: [f64; 4] = [1.5, 2.0, 3.0, f64::INFINITY];

/// Time exponent `p` paired with `q` by `3/q + 2/p = 2`.
pub fn time_exponent(q: f64) -> f64 {
    if q.is_infinite() {
        1.0
    } else {
        2.0 * q / (2.0 * q - 3.0)
    }
}

/// `‖S⁰‖_{Ḣ^{−1/2}}` below which model solutions decay: `3√3π/(4√2)`.
pub fn small_data_threshold() -> f64 {
    3.0 * 3f64.sqrt() * PI / (4.0 * 2f64.sqrt())
}

/// `‖λ₂⁺‖_{L^{3/2}}` exceeded by every strain with `f₀ > 0` at `ν = 1`: `(9/2)(π/2)^{4/3}`.
pub fn lambda2_screen_threshold() -> f64 {
    4.5 * (PI / 2.0).powf(4.0 / 3.0)
}

/// Local-existence constant `(3/(32‖G‖_{L²}))⁴` with `‖G‖_{L²} = (2π)^{−3/4}`
/// the norm of the unit-time heat kernel.
pub fn local_existence_constant() -> f64 {
    (3.0 / (32.0 * (2.0 * PI).powf(-0.75))).powi(4)
}

/// `Σ_c w_c Σ_m |k|^{2α} |Ŝ_c|²`, the squared `Ḣ^α` norm, `α ∈ (−3/2, 3/2)`.
pub fn hs_norm_sq(grid: &Grid, s: &SpectralTensor, alpha: f64) -> Result<f64> {
    if !(alpha > -1.5 && alpha < 1.5) {
        return Err(Error::InvalidExponent(alpha));
    }
    Ok(weighted_sum(grid, s.c.iter().zip(SYM_WEIGHTS), |k2| {
        k2.powf(alpha)
    }))
}

fn weighted_sum<'a>(
    grid: &Grid,
    comps: impl Iterator<Item = (&'a SpectralField, f64)>,
    mult: impl Fn(f64) -> f64,
) -> f64 {
    let table: Vec<f64> = grid
        .modes()
        .map(|m| if m.is_zero() { 0.0 } else { mult(m.k2()) })
        .collect();
    let mut acc = 0.0;
    for (f, cw) in comps {
        let part: f64 = f
            .data()
            .iter()
            .zip(f.weights())
            .zip(&table)
            .map(|((v, w), t)| w * t * v.norm_sqr())
            .sum();
        acc += cw * part;
    }
    acc * grid.spec().volume()
}

/// `E = ‖S‖²_{L²}`
pub fn enstrophy(s: &SpectralTensor) -> f64 {
    s.inner(s)
}

/// `K = ‖S‖²_{Ḣ^{−1}}`
pub fn energy(grid: &Grid, s: &SpectralTensor) -> f64 {
    weighted_sum(grid, s.c.iter().zip(SYM_WEIGHTS), |k2| 1.0 / k2)
}

/// `‖S‖²_{Ḣ¹}`
pub fn h1(grid: &Grid, s: &SpectralTensor) -> f64 {
    weighted_sum(grid, s.c.iter().zip(SYM_WEIGHTS), |k2| k2)
}

fn det6(e: [f64; 6]) -> f64 {
    let [a, b, c, d, f, g] = e;
    a * (d * g - f * f) - b * (b * g - f * c) + c * (b * f - d * c)
}

fn tr3_6(e: [f64; 6]) -> f64 {
    let [a, b, c, d, f, g] = e;
    a * a * a
        + d * d * d
        + g * g * g
        + 3.0 * (b * b * (a + d) + c * c * (a + g) + f * f * (d + g))
        + 6.0 * b * c * f
}

fn grid_integral(s: &RealTensor, f: impl Fn([f64; 6]) -> f64) -> f64 {
    let spec = s.spec();
    (0..spec.len()).map(|p| f(s.entries(p))).sum::<f64>() * spec.cell_volume()
}

/// `∫ det S`
pub fn det_integral_real(s: &RealTensor) -> f64 {
    grid_integral(s, det6)
}

/// `∫ tr(S³)`
pub fn trace_cubed_integral_real(s: &RealTensor) -> f64 {
    grid_integral(s, tr3_6)
}

pub fn det_integral(grid: &Grid, s: &SpectralTensor) -> Result<f64> {
    Ok(det_integral_real(&grid.inverse_tensor(s)?))
}

pub fn trace_cubed_integral(grid: &Grid, s: &SpectralTensor) -> Result<f64> {
    Ok(trace_cubed_integral_real(&grid.inverse_tensor(s)?))
}

/// `f = −3ν‖S‖²_{Ḣ¹} − 4∫det S`
pub fn f_of(grid: &Grid, s: &SpectralTensor, nu: f64) -> Result<f64> {
    Ok(f_from(nu, h1(grid, s), det_integral(grid, s)?))
}

pub fn f_from(nu: f64, h1: f64, det: f64) -> f64 {
    -3.0 * nu * h1 - 4.0 * det
}

/// `g = f / ‖S‖³_{L²}`
pub fn g_of(grid: &Grid, s: &SpectralTensor, nu: f64) -> Result<f64> {
    let e = nonzero_enstrophy(s)?;
    Ok(f_of(grid, s, nu)? / e.powf(1.5))
}

/// `r₀ = f / (2E)`
pub fn r0_of(grid: &Grid, s: &SpectralTensor, nu: f64) -> Result<f64> {
    let e = nonzero_enstrophy(s)?;
    Ok(f_of(grid, s, nu)? / (2.0 * e))
}

fn nonzero_enstrophy(s: &SpectralTensor) -> Result<f64> {
    let e = enstrophy(s);
    if e == 0.0 {
        Err(Error::ZeroField)
    } else {
        Ok(e)
    }
}

/// One trajectory sample for [`enstrophy_identity_residual`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnstrophySample {
    pub t: f64,
    pub e: f64,
    pub h1: f64,
    pub det: f64,
}

/// Centered difference of `E` at the middle sample against
/// `−2ν‖S‖²_{Ḣ¹} − 4∫det S`, relative to the larger of `|rhs|` and [`EPS`].
pub fn enstrophy_identity_residual(samples: &[EnstrophySample], nu: f64) -> Result<f64> {
    if samples.len() < 3 {
        return Err(Error::InsufficientSamples {
            needed: 3,
            got: samples.len(),
        });
    }
    let dts: Vec<f64> = samples.windows(2).map(|w| w[1].t - w[0].t).collect();
    let h = dts[0];
    if !(h > 0.0) || dts.iter().any(|d| (d - h).abs() > 1e-9 * h) {
        return Err(Error::UnevenSamples);
    }
    let mid = samples.len() / 2;
    let de = (samples[mid + 1].e - samples[mid - 1].e) / (2.0 * h);
    let c = &samples[mid];
    let rhs = -2.0 * nu * c.h1 - 4.0 * c.det;
    Ok((de - rhs).abs() / rhs.abs().max(EPS))
}

/// Fields recovered from a strain that several functionals share.
pub struct StrainFields {
    pub s: SpectralTensor,
    pub s_real: RealTensor,
    pub omega_real: RealVector,
    pub u_real: RealVector,
}

impl StrainFields {
    pub fn new(grid: &Grid, s: &SpectralTensor) -> Result<Self> {
        let u = velocity_unchecked(grid, s);
        let omega = vorticity_of(grid, &u);
        Ok(Self {
            s: s.clone(),
            s_real: grid.inverse_tensor(s)?,
            omega_real: grid.inverse_vector(&omega)?,
            u_real: grid.inverse_vector(&u)?,
        })
    }

    /// `(u·∇)S`, `S²`, `ω⊗ω`, all dealiased.
    pub fn quadratic_terms(&self, grid: &Grid) -> Result<[SpectralTensor; 3]> {
        let adv = advection_term_real(grid, &self.u_real, &self.s)?;
        let sq = grid
            .dealias_tensor(&grid.forward_tensor(&crate::operators::s_squared_real(&self.s_real)));
        let ww = grid.dealias_tensor(&grid.forward_tensor(&omega_outer_real(&self.omega_real)));
        Ok([adv, sq, ww])
    }
}

fn combine(grid: &Grid, terms: &[SpectralTensor; 3], coef: [f64; 3]) -> SpectralTensor {
    let mut acc = SpectralTensor::zeros(grid.spec());
    for (t, c) in terms.iter().zip(coef) {
        acc.axpy(c, t);
    }
    strain_project(grid, &acc)
}

/// `P_st((u·∇)S + ⅓S² + ¼ω⊗ω)`, the part of the full equation the model drops.
pub fn dropped_term(grid: &Grid, terms: &[SpectralTensor; 3]) -> SpectralTensor {
    combine(grid, terms, [1.0, 1.0 / 3.0, 0.25])
}

/// `|⟨D, S⟩| / (‖D‖‖S‖)` for the dropped term `D`; zero for `S = 0`.
pub fn orthogonality_residual(grid: &Grid, s: &SpectralTensor) -> Result<f64> {
    if enstrophy(s) == 0.0 {
        return Ok(0.0);
    }
    let fields = StrainFields::new(grid, s)?;
    let d = dropped_term(grid, &fields.quadratic_terms(grid)?);
    Ok(orthogonality_from(&d, s))
}

fn orthogonality_from(d: &SpectralTensor, s: &SpectralTensor) -> f64 {
    let denom = d.norm_l2() * s.norm_l2();
    if denom == 0.0 {
        0.0
    } else {
        d.inner(s).abs() / denom
    }
}

/// `⟨S, ω⊗ω⟩` as a grid sum.
pub fn stretching_integral(s: &RealTensor, w: &RealVector) -> f64 {
    let spec = s.spec();
    let sum: f64 = (0..spec.len())
        .map(|p| {
            let e = s.entries(p);
            let v = [w.c[0].data()[p], w.c[1].data()[p], w.c[2].data()[p]];
            e[0] * v[0] * v[0]
                + e[3] * v[1] * v[1]
                + e[5] * v[2] * v[2]
                + 2.0 * (e[1] * v[0] * v[1] + e[2] * v[0] * v[2] + e[4] * v[1] * v[2])
        })
        .sum();
    sum * spec.cell_volume()
}

fn l4_sq(w: &RealVector) -> f64 {
    let spec = w.spec();
    let s: f64 = (0..spec.len())
        .map(|p| {
            let m: f64 = (0..3).map(|i| w.c[i].data()[p].powi(2)).sum();
            m * m
        })
        .sum();
    (s * spec.cell_volume()).sqrt()
}

/// `|⟨S,ω⊗ω⟩ + 4∫det S| / (‖S‖_{L²}‖ω‖²_{L⁴} + ε)`
pub fn vortex_det_residual(grid: &Grid, s: &SpectralTensor) -> Result<f64> {
    let fields = StrainFields::new(grid, s)?;
    Ok(vortex_det_from(&fields))
}

fn vortex_det_from(f: &StrainFields) -> f64 {
    let lhs = stretching_integral(&f.s_real, &f.omega_real);
    let det = det_integral_real(&f.s_real);
    (lhs + 4.0 * det).abs() / (f.s.norm_l2() * l4_sq(&f.omega_real) + EPS)
}

/// Largest relative mismatch in `‖S‖²_{Ḣ^α} = ½‖ω‖²_{Ḣ^α} = ½‖∇u‖²_{Ḣ^α}`, `α ∈ {−1,0,1}`.
pub fn isometry_residual(grid: &Grid, s: &SpectralTensor) -> f64 {
    let u = velocity_unchecked(grid, s);
    let w = vorticity_of(grid, &u);
    let grad: Vec<SpectralField> = crate::operators::velocity_gradient(grid, &u)
        .into_iter()
        .flatten()
        .collect();
    let mut worst = 0.0_f64;
    for alpha in [-1.0_f64, 0.0, 1.0] {
        let m = move |k2: f64| k2.powf(alpha);
        let a = weighted_sum(grid, s.c.iter().zip(SYM_WEIGHTS), m);
        let b = 0.5 * weighted_sum(grid, w.c.iter().map(|c| (c, 1.0)), m);
        let c = 0.5 * weighted_sum(grid, grad.iter().map(|c| (c, 1.0)), m);
        let scale = a.abs().max(b.abs()).max(c.abs()).max(EPS);
        worst = worst.max((a - b).abs() / scale).max((a - c).abs() / scale);
    }
    worst
}

/// `‖P_st((u·∇)S+⅓S²+¼ω⊗ω)‖ / ‖−νΔS + P_st(½(u·∇)S+⅚S²+⅛ω⊗ω)‖`;
/// `+∞` when the denominator vanishes.
pub fn perturbative_ratio(grid: &Grid, s: &SpectralTensor, nu: f64) -> Result<f64> {
    let fields = StrainFields::new(grid, s)?;
    let terms = fields.quadratic_terms(grid)?;
    Ok(ratio_from(grid, s, nu, &terms))
}

fn ratio_from(grid: &Grid, s: &SpectralTensor, nu: f64, terms: &[SpectralTensor; 3]) -> f64 {
    let num = dropped_term(grid, terms).norm_l2();
    let mut den = combine(grid, terms, [0.5, 5.0 / 6.0, 0.125]);
    den.axpy(-nu, &grid.laplacian_tensor(s));
    let d = den.norm_l2();
    if d == 0.0 {
        f64::INFINITY
    } else {
        num / d
    }
}

/// Outcome of [`envelope_check`].
#[derive(Clone, Debug, PartialEq)]
pub enum EnvelopeCheck {
    /// `r₀ ≤ 0`: the blowup hypothesis does not hold.
    HypothesisUnmet,
    /// Per-sample verdicts for samples with `t < 1/r₀`.
    Checked(Vec<bool>),
}

impl EnvelopeCheck {
    pub fn pass_count(&self) -> usize {
        match self {
            EnvelopeCheck::HypothesisUnmet => 0,
            EnvelopeCheck::Checked(v) => v.iter().filter(|&&b| b).count(),
        }
    }

    pub fn all_pass(&self) -> bool {
        matches!(self, EnvelopeCheck::Checked(v) if v.iter().all(|&b| b))
    }
}

/// The lower envelope `E₀/(1−r₀t)²`.
pub fn envelope(e0: f64, r0: f64, t: f64) -> f64 {
    e0 / (1.0 - r0 * t).powi(2)
}

/// `E(t) ≥ E₀/(1−r₀t)²·(1−10⁻³)` at each `(t, E)` sample.
pub fn envelope_check(samples: &[(f64, f64)], e0: f64, r0: f64) -> EnvelopeCheck {
    if !(r0 > 0.0) {
        return EnvelopeCheck::HypothesisUnmet;
    }
    EnvelopeCheck::Checked(
        samples
            .iter()
            .filter(|(t, _)| r0 * t < 1.0)
            .map(|&(t, e)| e >= envelope(e0, r0, t) * (1.0 - ENVELOPE_SLACK))
            .collect(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    /// `f₀ > 0`
    pub member: bool,
    /// `f₀`
    pub margin: f64,
    /// `‖λ₂⁺‖_{L^{3/2}}`
    pub lambda2_l32: f64,
    pub threshold: f64,
    /// False when a member fails the λ₂⁺ screen.
    pub consistent: bool,
}

/// Membership in `{S : −3ν‖S‖²_{Ḣ¹} − 4∫det S > 0}` with the λ₂⁺ screen.
///
/// The screen threshold is scale-free only at `ν = 1`; for other viscosities
/// it is applied to `S/ν`, which has the same membership.
pub fn gamma_membership(grid: &Grid, s: &SpectralTensor, nu: f64) -> Result<Membership> {
    let margin = f_of(grid, s, nu)?;
    let lam = lambda_fields_real(&grid.inverse_tensor(s)?);
    let lambda2_l32 = lam.lambda2_plus.norm_lq(1.5) / nu;
    let threshold = lambda2_screen_threshold();
    let member = margin > 0.0;
    Ok(Membership {
        member,
        margin,
        lambda2_l32,
        threshold,
        consistent: !member || lambda2_l32 > threshold,
    })
}

/// One output row. Inapplicable values are `None` and are omitted from JSON.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "H1")]
    pub h1: f64,
    #[serde(rename = "detS")]
    pub det_s: f64,
    #[serde(rename = "trS3")]
    pub tr_s3: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    pub f: f64,
    #[serde(rename = "lam2_q1.5")]
    pub lam2_q1_5: f64,
    pub lam2_q2: f64,
    pub lam2_q3: f64,
    pub lam2_qinf: f64,
    #[serde(rename = "acc_q1.5")]
    pub acc_q1_5: f64,
    pub acc_q2: f64,
    pub acc_q3: f64,
    pub acc_qinf: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub res_enstrophy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub res_orth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub res_vortdet: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub res_isometry: Option<f64>,
}

impl DiagnosticsRecord {
    pub fn lam2(&self) -> [f64; 4] {
        [self.lam2_q1_5, self.lam2_q2, self.lam2_q3, self.lam2_qinf]
    }

    pub fn acc(&self) -> [f64; 4] {
        [self.acc_q1_5, self.acc_q2, self.acc_q3, self.acc_qinf]
    }

    /// One JSON line; non-finite optional values are dropped.
    pub fn to_json_line(&self) -> String {
        let mut r = self.clone();
        for v in [
            &mut r.g,
            &mut r.ratio,
            &mut r.res_enstrophy,
            &mut r.res_orth,
            &mut r.res_vortdet,
            &mut r.res_isometry,
        ] {
            if v.is_some_and(|x| !x.is_finite()) {
                *v = None;
            }
        }
        serde_json::to_string(&r).expect("record serializes")
    }
}

/// Running `∫‖λ₂⁺‖^p_{L^q} dt` by the trapezoid rule over output samples;
/// `p = ∞` (q = 3/2) keeps the running supremum instead.
#[derive(Clone, Debug, Default)]
pub struct Accumulators {
    last: Option<(f64, [f64; 4])>,
    acc: [f64; 4],
}

impl Accumulators {
    pub fn push(&mut self, t: f64, norms: [f64; 4]) -> [f64; 4] {
        for (i, &q) in LAMBDA_Q.iter().enumerate() {
            let p = time_exponent(q);
            if p.is_infinite() {
                self.acc[i] = self.acc[i].max(norms[i]);
            } else if let Some((t0, prev)) = self.last {
                self.acc[i] += 0.5 * (t - t0) * (prev[i].powf(p) + norms[i].powf(p));
            }
        }
        self.last = Some((t, norms));
        self.acc
    }

    pub fn values(&self) -> [f64; 4] {
        self.acc
    }
}

/// What [`analyze`] computes beyond the always-present functionals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AnalysisOptions {
    pub ratio: bool,
    pub residuals: bool,
}

/// Builds a record at time `t` (accumulators and `res_enstrophy` left to the caller).
pub fn analyze(
    grid: &Grid,
    s: &SpectralTensor,
    nu: f64,
    t: f64,
    opts: AnalysisOptions,
) -> Result<DiagnosticsRecord> {
    let fields = StrainFields::new(grid, s)?;
    let e = enstrophy(s);
    let h1v = h1(grid, s);
    let det = det_integral_real(&fields.s_real);
    let f = f_from(nu, h1v, det);
    let lam = lambda_fields_real(&fields.s_real).lambda2_plus;
    let norms = LAMBDA_Q.map(|q| lam.norm_lq(q));
    let mut rec = DiagnosticsRecord {
        t,
        e,
        k: energy(grid, s),
        h1: h1v,
        det_s: det,
        tr_s3: trace_cubed_integral_real(&fields.s_real),
        g: (e > 0.0).then(|| f / e.powf(1.5)),
        f,
        lam2_q1_5: norms[0],
        lam2_q2: norms[1],
        lam2_q3: norms[2],
        lam2_qinf: norms[3],
        ..Default::default()
    };
    if opts.ratio || opts.residuals {
        let terms = fields.quadratic_terms(grid)?;
        if opts.ratio && e > 0.0 {
            rec.ratio = Some(ratio_from(grid, s, nu, &terms));
        }
        if opts.residuals {
            rec.res_orth = Some(orthogonality_from(&dropped_term(grid, &terms), s));
            rec.res_vortdet = Some(vortex_det_from(&fields));
            rec.res_isometry = Some(isometry_residual(grid, s));
        }
    }
    Ok(rec)
}

/// `‖S‖_{Ḣ^{−1/2}}`
pub fn critical_norm(grid: &Grid, s: &SpectralTensor) -> f64 {
    weighted_sum(grid, s.c.iter().zip(SYM_WEIGHTS), |k2| 1.0 / k2.sqrt()).sqrt()
}

/// Pointwise `max(0, λ₂)` of a spectral strain.
pub fn lambda2_plus(grid: &Grid, s: &SpectralTensor) -> Result<RealField> {
    Ok(lambda_fields_real(&grid.inverse_tensor(s)?).lambda2_plus)
}
