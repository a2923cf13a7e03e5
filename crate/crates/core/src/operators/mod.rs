//! Strain, velocity, and vorticity conversions, the Leray and strain-space
//! projections, the quadratic terms of the strain equation, and pointwise
//! eigenvalue fields.
//!
//! Every first-order operator uses the derivative wavenumbers `kd` of
//! [`Mode`], so `strain_of`, `velocity_of`, `leray_project` and
//! `strain_project` are exact inverses and projections of one another on
//! the grid, not just up to discretization error.

mod eig;

use num_complex::Complex64;
use rayon::prelude::*;

pub use eig::{eig_sym, eig_symtensor, EigenTriple};

use crate::error::{Error, Result};
use crate::spectral::{
    sym_index, Axis, Grid, Mode, RealField, RealTensor, RealVector, SpectralField, SpectralTensor,
    SpectralVector, SymTensor, SYM_PAIRS,
};

/// Relative divergence accepted by [`strain_of`].
pub const DIVERGENCE_TOLERANCE: f64 = 1e-8;
/// Relative distance from the strain space accepted by [`velocity_of`].
pub const STRAIN_SPACE_TOLERANCE: f64 = 1e-6;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[inline]
fn times_i(c: Complex64) -> Complex64 {
    Complex64::new(-c.im, c.re)
}

/// Applies `op` to the six coefficients of every mode.
pub(crate) fn per_mode_tensor(
    grid: &Grid,
    t: &SpectralTensor,
    op: impl Fn(&Mode, [Complex64; 6]) -> [Complex64; 6] + Sync,
) -> SpectralTensor {
    let mut out = t.clone();
    per_mode_tensor_in_place(grid, &mut out, op);
    out
}

/// In-place [`per_mode_tensor`].
pub(crate) fn per_mode_tensor_in_place(
    grid: &Grid,
    t: &mut SpectralTensor,
    op: impl Fn(&Mode, [Complex64; 6]) -> [Complex64; 6] + Sync,
) {
    let spec = grid.spec();
    let (n, nh) = (spec.n, spec.nh());
    let [o0, o1, o2, o3, o4, o5] = &mut t.c;
    (
        o0.data_mut().par_chunks_mut(nh),
        o1.data_mut().par_chunks_mut(nh),
        o2.data_mut().par_chunks_mut(nh),
        o3.data_mut().par_chunks_mut(nh),
        o4.data_mut().par_chunks_mut(nh),
        o5.data_mut().par_chunks_mut(nh),
    )
        .into_par_iter()
        .enumerate()
        .for_each(|(row, (a, b, c, d, e, f))| {
            let base = row * nh;
            let (iy, iz) = (row % n, row / n);
            for kx in 0..nh {
                let m = grid.mode_at(kx, iy, iz, base + kx);
                let r = op(&m, [a[kx], b[kx], c[kx], d[kx], e[kx], f[kx]]);
                (a[kx], b[kx], c[kx], d[kx], e[kx], f[kx]) = (r[0], r[1], r[2], r[3], r[4], r[5]);
            }
        });
}

/// Applies `op` to the three coefficients of every mode.
pub(crate) fn per_mode_vector(
    grid: &Grid,
    v: &SpectralVector,
    op: impl Fn(&Mode, [Complex64; 3]) -> [Complex64; 3] + Sync,
) -> SpectralVector {
    let spec = grid.spec();
    let (n, nh) = (spec.n, spec.nh());
    let mut out = SpectralVector::zeros(spec);
    let [o0, o1, o2] = &mut out.c;
    let src = v.c.each_ref().map(|c| c.data());
    (
        o0.data_mut().par_chunks_mut(nh),
        o1.data_mut().par_chunks_mut(nh),
        o2.data_mut().par_chunks_mut(nh),
    )
        .into_par_iter()
        .enumerate()
        .for_each(|(row, (a, b, c))| {
            let base = row * nh;
            let (iy, iz) = (row % n, row / n);
            for kx in 0..nh {
                let i = base + kx;
                let r = op(&grid.mode_at(kx, iy, iz, i), src.map(|s| s[i]));
                (a[kx], b[kx], c[kx]) = (r[0], r[1], r[2]);
            }
        });
    out
}

/// Applies `op` to the six entries at every grid point.
pub(crate) fn pointwise_tensor(
    t: &RealTensor,
    op: impl Fn([f64; 6]) -> [f64; 6] + Sync,
) -> RealTensor {
    let mut out = t.clone();
    let [o0, o1, o2, o3, o4, o5] = &mut out.c;
    (
        o0.data_mut().par_iter_mut(),
        o1.data_mut().par_iter_mut(),
        o2.data_mut().par_iter_mut(),
        o3.data_mut().par_iter_mut(),
        o4.data_mut().par_iter_mut(),
        o5.data_mut().par_iter_mut(),
    )
        .into_par_iter()
        .enumerate()
        .for_each(|(p, (a, b, c, d, e, f))| {
            let r = op(t.entries(p));
            (*a, *b, *c, *d, *e, *f) = (r[0], r[1], r[2], r[3], r[4], r[5]);
        });
    out
}

/// `‖∇u‖_{L²}` from the spectrum.
pub fn gradient_norm(grid: &Grid, u: &SpectralVector) -> f64 {
    let mut acc = 0.0;
    for c in &u.c {
        for ((v, w), m) in c.data().iter().zip(c.weights()).zip(grid.modes()) {
            acc += w * m.kd2() * v.norm_sqr();
        }
    }
    (acc * grid.spec().volume()).sqrt()
}

/// `‖∇·u‖_{L²} / ‖∇u‖_{L²}`, zero for constant fields.
pub fn divergence_residual(grid: &Grid, u: &SpectralVector) -> f64 {
    let g = gradient_norm(grid, u);
    if g == 0.0 {
        return 0.0;
    }
    grid.divergence(u).norm_l2() / g
}

/// `S_ij = ½(∂_i u_j + ∂_j u_i)`.
pub fn strain_of(grid: &Grid, u: &SpectralVector) -> Result<SpectralTensor> {
    let residual = divergence_residual(grid, u);
    if residual > DIVERGENCE_TOLERANCE {
        return Err(Error::Divergence { residual });
    }
    Ok(sym_gradient(grid, u))
}

/// Symmetric gradient without the divergence check.
pub(crate) fn sym_gradient(grid: &Grid, u: &SpectralVector) -> SpectralTensor {
    let out = SpectralTensor::zeros(grid.spec());
    per_mode_tensor(grid, &out, |m, _| {
        let uh = [0, 1, 2].map(|k| u.c[k].data()[m.index]);
        SYM_PAIRS.map(|(i, j)| times_i(uh[j] * m.kd[i] + uh[i] * m.kd[j]) * 0.5)
    })
}

/// `u = −2 div (−Δ)⁻¹ S`, the inverse of [`strain_of`] on the strain space.
pub fn velocity_of(grid: &Grid, s: &SpectralTensor) -> Result<SpectralVector> {
    let residual = strain_space_residual(grid, s);
    if residual > STRAIN_SPACE_TOLERANCE {
        return Err(Error::NotInStrainSpace { residual });
    }
    Ok(velocity_unchecked(grid, s))
}

pub(crate) fn velocity_unchecked(grid: &Grid, s: &SpectralTensor) -> SpectralVector {
    let out = SpectralVector::zeros(grid.spec());
    per_mode_vector(grid, &out, |m, _| {
        let kd2 = m.kd2();
        if kd2 == 0.0 {
            return [ZERO; 3];
        }
        let sh = [0, 1, 2, 3, 4, 5].map(|k| s.c[k].data()[m.index]);
        [0, 1, 2].map(|i| {
            let div: Complex64 = (0..3).map(|j| sh[sym_index(i, j)] * m.kd[j]).sum();
            times_i(div) * (-2.0 / kd2)
        })
    })
}

/// `ω = ∇ × u`.
pub fn vorticity_of(grid: &Grid, u: &SpectralVector) -> SpectralVector {
    per_mode_vector(grid, u, |m, v| {
        let k = m.kd;
        [
            times_i(v[2] * k[1] - v[1] * k[2]),
            times_i(v[0] * k[2] - v[2] * k[0]),
            times_i(v[1] * k[0] - v[0] * k[1]),
        ]
    })
}

/// Helmholtz projection onto divergence-free fields; the mean is kept.
pub fn leray_project(grid: &Grid, v: &SpectralVector) -> SpectralVector {
    per_mode_vector(grid, v, |m, c| {
        let kd2 = m.kd2();
        if kd2 == 0.0 {
            return c;
        }
        let dot = (c[0] * m.kd[0] + c[1] * m.kd[1] + c[2] * m.kd[2]) / kd2;
        [0, 1, 2].map(|i| c[i] - dot * m.kd[i])
    })
}

/// Per-mode `k̂⊗b + b⊗k̂` with `b = (I − k̂k̂ᵀ)Mk̂`. `sign` is −1 for the
/// true projection; +1 corrupts the longitudinal term.
fn project_mode(m: &Mode, c: [Complex64; 6], sign: f64) -> [Complex64; 6] {
    let kd2 = m.kd2();
    if kd2 == 0.0 {
        return [ZERO; 6];
    }
    let kn = kd2.sqrt();
    let kh = m.kd.map(|v| v / kn);
    let a = [0, 1, 2].map(|i| {
        (0..3)
            .map(|j| c[sym_index(i, j)] * kh[j])
            .sum::<Complex64>()
    });
    let ka = a[0] * kh[0] + a[1] * kh[1] + a[2] * kh[2];
    let b = [0, 1, 2].map(|i| a[i] + ka * kh[i] * sign);
    SYM_PAIRS.map(|(i, j)| b[j] * kh[i] + b[i] * kh[j])
}

/// Orthogonal projection `P_st` onto symmetric gradients of divergence-free
/// fields, `∇_sym(−2(−Δ)⁻¹ P_df div M)`.
pub fn strain_project(grid: &Grid, t: &SpectralTensor) -> SpectralTensor {
    per_mode_tensor(grid, t, |m, c| project_mode(m, c, -1.0))
}

/// In-place [`strain_project`].
pub fn strain_project_in_place(grid: &Grid, t: &mut SpectralTensor) {
    per_mode_tensor_in_place(grid, t, |m, c| project_mode(m, c, -1.0))
}

/// A deliberately broken projection, used to check that the verification
/// suite catches a corrupted `P_st`.
#[doc(hidden)]
pub fn strain_project_faulty(grid: &Grid, t: &SpectralTensor) -> SpectralTensor {
    per_mode_tensor(grid, t, |m, c| project_mode(m, c, 1.0))
}

/// `‖S − P_st S‖ / ‖S‖`, zero for the zero field.
pub fn strain_space_residual(grid: &Grid, s: &SpectralTensor) -> f64 {
    let norm = s.norm_l2();
    if norm == 0.0 {
        return 0.0;
    }
    let mut d = strain_project(grid, s);
    d.axpy(-1.0, s);
    d.norm_l2() / norm
}

fn product_to_spectral(grid: &Grid, t: &RealTensor) -> SpectralTensor {
    let mut out = grid.forward_tensor(t);
    grid.dealias_tensor_in_place(&mut out);
    out
}

/// Pointwise `S²` of a real-space tensor.
pub fn s_squared_real(s: &RealTensor) -> RealTensor {
    pointwise_tensor(s, |e| {
        let [a, b, c, d, f, g] = e;
        [
            a * a + b * b + c * c,
            a * b + b * d + c * f,
            a * c + b * f + c * g,
            b * b + d * d + f * f,
            b * c + d * f + f * g,
            c * c + f * f + g * g,
        ]
    })
}

/// Dealiased pseudo-spectral `S²`.
pub fn s_squared(grid: &Grid, s: &SpectralTensor) -> Result<SpectralTensor> {
    Ok(product_to_spectral(
        grid,
        &s_squared_real(&grid.inverse_tensor(s)?),
    ))
}

/// Dealiased `S² − (S²)_zz I`, which has the same strain projection as
/// `S²` and needs one transform fewer.
pub(crate) fn s_squared_shifted(grid: &Grid, s: &SpectralTensor) -> Result<SpectralTensor> {
    let mut sq = s_squared_real(&grid.inverse_tensor(s)?);
    let [xx, _, _, yy, _, zz] = &mut sq.c;
    (xx.data_mut(), yy.data_mut())
        .into_par_iter()
        .zip(zz.data().par_iter())
        .for_each(|((a, d), g)| {
            *a -= g;
            *d -= g;
        });
    let mut out = SpectralTensor::zeros(grid.spec());
    for c in 0..5 {
        out.c[c] = grid.forward(&sq.c[c]);
        grid.dealias_in_place(&mut out.c[c]);
    }
    Ok(out)
}

/// Pointwise `ω⊗ω`, not dealiased.
pub fn omega_outer_real(w: &RealVector) -> RealTensor {
    SymTensor::new(SYM_PAIRS.map(|(i, j)| {
        let mut out = w.c[i].clone();
        out.data_mut()
            .par_iter_mut()
            .zip(w.c[j].data().par_iter())
            .for_each(|(a, b)| *a *= b);
        out
    }))
}

/// Dealiased pseudo-spectral `ω⊗ω`.
pub fn omega_outer(grid: &Grid, w: &SpectralVector) -> Result<SpectralTensor> {
    Ok(product_to_spectral(
        grid,
        &omega_outer_real(&grid.inverse_vector(w)?),
    ))
}

/// Dealiased pseudo-spectral `(u·∇)S`, given `u` in real space.
pub fn advection_term_real(
    grid: &Grid,
    u: &RealVector,
    s: &SpectralTensor,
) -> Result<SpectralTensor> {
    let comps = s.c.iter().map(|sc| {
        let mut acc = RealField::zeros(grid.spec());
        for axis in Axis::ALL {
            let d = grid.inverse(&grid.derivative(sc, axis))?;
            let ua = u.c[axis.index()].data();
            acc.data_mut()
                .par_iter_mut()
                .zip(d.data().par_iter().zip(ua.par_iter()))
                .for_each(|(a, (dv, uv))| *a += dv * uv);
        }
        Ok(grid.dealias(&grid.forward(&acc)))
    });
    let v: Vec<SpectralField> = comps.collect::<Result<_>>()?;
    let arr: [SpectralField; 6] = v.try_into().expect("six components");
    Ok(SymTensor::new(arr))
}

/// Dealiased pseudo-spectral `(u·∇)S`.
pub fn advection_term(
    grid: &Grid,
    u: &SpectralVector,
    s: &SpectralTensor,
) -> Result<SpectralTensor> {
    advection_term_real(grid, &grid.inverse_vector(u)?, s)
}

/// `∇·(u⊗u)` by the same product route, dealiased.
pub fn advection_velocity(grid: &Grid, u: &SpectralVector) -> Result<SpectralVector> {
    let ur = grid.inverse_vector(u)?;
    let uu = product_to_spectral(grid, &omega_outer_real(&ur));
    Ok(grid.divergence_tensor(&uu))
}

/// Pointwise eigenvalue fields of a strain.
#[derive(Clone, Debug)]
pub struct LambdaFields {
    pub lambda1: RealField,
    pub lambda2: RealField,
    /// `max(0, λ₂)`
    pub lambda2_plus: RealField,
}

pub fn lambda_fields_real(s: &RealTensor) -> LambdaFields {
    let spec = s.spec();
    let eigs: Vec<EigenTriple> = (0..spec.len())
        .into_par_iter()
        .map(|p| eig_sym(s.entries(p)))
        .collect();
    let build = |f: fn(&EigenTriple) -> f64| {
        RealField::from_vec(spec, eigs.iter().map(f).collect()).expect("length matches grid")
    };
    LambdaFields {
        lambda1: build(|e| e.lambda1),
        lambda2: build(|e| e.lambda2),
        lambda2_plus: build(|e| e.lambda2_plus()),
    }
}

pub fn lambda_fields(grid: &Grid, s: &SpectralTensor) -> Result<LambdaFields> {
    Ok(lambda_fields_real(&grid.inverse_tensor(s)?))
}

/// `∇u` as a full 3×3 array of spectral fields, `[i][j] = ∂_j u_i`.
pub fn velocity_gradient(grid: &Grid, u: &SpectralVector) -> [[SpectralField; 3]; 3] {
    [0, 1, 2].map(|i| Axis::ALL.map(|a| grid.derivative(&u.c[i], a)))
}
