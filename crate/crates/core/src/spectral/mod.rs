//! Periodic-box grids, 3-D transforms, and spectral multipliers.
//!
//! The box is `[-L/2, L/2)³` with `n` points per axis. Mode `m` has
//! wavenumber `k = 2πm/L` with `m ∈ [-n/2, n/2)`, and coefficients are
//! phased relative to the box center, `f(x) = Σ f̂_m e^{ik·x}`. The forward
//! transform divides by `n³`, so the zero mode is the field mean and
//! multipliers act exactly like their continuum symbols.
//!
//! Derivatives drop the Nyquist mode `m = -n/2`: its derivative wavenumber
//! is zero. Every first-order operator in the crate uses these derivative
//! wavenumbers so that discrete divergence, curl, and projections stay
//! mutually consistent.

mod fft;
mod field;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use field::{
    sym_index, RealField, RealTensor, RealVector, SpectralField, SpectralTensor, SpectralVector,
    SymTensor, Vector, SYM_PAIRS, SYM_WEIGHTS,
};

use crate::error::{Error, Result};

/// Relative Hermitian-symmetry residual above which an inverse transform is refused.
pub const HERMITIAN_TOLERANCE: f64 = 1e-8;

/// Discretization of the periodic cube.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Points per axis.
    pub n: usize,
    /// Side length `L`.
    pub box_length: f64,
    /// Fraction of modes kept per axis by [`Grid::dealias`].
    pub dealias_fraction: f64,
}

impl GridSpec {
    pub const DEFAULT_DEALIAS: f64 = 2.0 / 3.0;

    pub fn new(n: usize, box_length: f64) -> Result<Self> {
        Self::with_dealias(n, box_length, Self::DEFAULT_DEALIAS)
    }

    pub fn with_dealias(n: usize, box_length: f64, dealias_fraction: f64) -> Result<Self> {
        let spec = Self {
            n,
            box_length,
            dealias_fraction,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 8 || self.n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "n must be even and >= 8, got {}",
                self.n
            )));
        }
        if !(self.box_length.is_finite() && self.box_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "box length must be positive, got {}",
                self.box_length
            )));
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 1.0) {
            return Err(Error::InvalidGrid(format!(
                "dealias fraction must lie in (0, 1], got {}",
                self.dealias_fraction
            )));
        }
        if self.cutoff() < 1 {
            return Err(Error::InvalidGrid("dealias cutoff rounds to zero".into()));
        }
        Ok(())
    }

    /// Modes with any `|m_i| >= cutoff` are removed by dealiasing.
    pub fn cutoff(&self) -> usize {
        // the epsilon keeps exact products such as 2/3 * 24 from rounding down
        (self.dealias_fraction * (self.n / 2) as f64 + 1e-9).floor() as usize
    }

    /// Number of real samples, `n³`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Stored x-modes of the half spectrum.
    pub fn nh(&self) -> usize {
        self.n / 2 + 1
    }

    pub fn spectral_len(&self) -> usize {
        self.nh() * self.n * self.n
    }

    pub fn spectral_index(&self, kx: usize, ky: usize, kz: usize) -> usize {
        kx + self.nh() * (ky + self.n * kz)
    }

    pub fn real_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    pub fn dx(&self) -> f64 {
        self.box_length / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(3)
    }

    pub fn volume(&self) -> f64 {
        self.box_length.powi(3)
    }

    /// Coordinate of grid index `i` along any axis.
    pub fn coord(&self, i: usize) -> f64 {
        -0.5 * self.box_length + i as f64 * self.dx()
    }

    /// Signed mode number of a full-axis storage index.
    pub fn mode_of(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    pub fn wavenumber(&self, m: i64) -> f64 {
        2.0 * std::f64::consts::PI * m as f64 / self.box_length
    }
}

/// Coordinate axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X = 0,
    Y = 1,
    Z = 2,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// A stored spectral mode.
#[derive(Clone, Copy, Debug)]
pub struct Mode {
    pub index: usize,
    /// Signed mode numbers; the x-Nyquist entry is reported as `-n/2`.
    pub m: [i64; 3],
    /// Wavenumbers `2πm/L`.
    pub k: [f64; 3],
    /// Derivative wavenumbers (zero on Nyquist axes).
    pub kd: [f64; 3],
}

impl Mode {
    #[inline]
    pub fn k2(&self) -> f64 {
        self.k[0] * self.k[0] + self.k[1] * self.k[1] + self.k[2] * self.k[2]
    }

    #[inline]
    pub fn kd2(&self) -> f64 {
        self.kd[0] * self.kd[0] + self.kd[1] * self.kd[1] + self.kd[2] * self.kd[2]
    }

    pub fn is_zero(&self) -> bool {
        self.m == [0, 0, 0]
    }
}

/// Grid plus FFT plans and wavenumber tables. Build once per resolution and share.
#[derive(Debug)]
pub struct Grid {
    spec: GridSpec,
    fft: fft::Fft3,
    modes_full: Vec<i64>,
    k_full: Vec<f64>,
    kd_full: Vec<f64>,
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.n;
        let modes_full: Vec<i64> = (0..n).map(|i| spec.mode_of(i)).collect();
        let k_full: Vec<f64> = modes_full.iter().map(|&m| spec.wavenumber(m)).collect();
        let nyq = -(n as i64) / 2;
        let kd_full = modes_full
            .iter()
            .zip(&k_full)
            .map(|(&m, &k)| if m == nyq { 0.0 } else { k })
            .collect();
        Ok(Self {
            spec,
            fft: fft::Fft3::new(n),
            modes_full,
            k_full,
            kd_full,
        })
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    #[inline]
    pub fn mode(&self, index: usize) -> Mode {
        let nh = self.spec.nh();
        let row = index / nh;
        self.mode_at(
            index - row * nh,
            row % self.spec.n,
            row / self.spec.n,
            index,
        )
    }

    #[inline]
    pub(crate) fn mode_at(&self, kx: usize, iy: usize, iz: usize, index: usize) -> Mode {
        Mode {
            index,
            m: [
                self.modes_full[kx],
                self.modes_full[iy],
                self.modes_full[iz],
            ],
            k: [self.k_full[kx], self.k_full[iy], self.k_full[iz]],
            kd: [self.kd_full[kx], self.kd_full[iy], self.kd_full[iz]],
        }
    }

    /// Calls `op(row, modes)` for every x-line of the half spectrum in
    /// parallel; `row = ky + n*kz` indexes the line and `out` is its slice.
    pub(crate) fn for_each_row<T: Send>(
        &self,
        out: &mut [T],
        op: impl Fn(usize, &mut [T], &mut dyn Iterator<Item = Mode>) + Sync,
    ) {
        let nh = self.spec.nh();
        let n = self.spec.n;
        out.par_chunks_mut(nh).enumerate().for_each(|(row, line)| {
            let (iy, iz) = (row % n, row / n);
            let mut modes = (0..nh).map(|kx| self.mode_at(kx, iy, iz, row * nh + kx));
            op(row, line, &mut modes);
        });
    }

    pub fn modes(&self) -> impl Iterator<Item = Mode> + '_ {
        (0..self.spec.spectral_len()).map(move |i| self.mode(i))
    }

    /// Builds a field coefficient-by-coefficient.
    pub fn map_modes(
        &self,
        f: &SpectralField,
        op: impl Fn(&Mode, Complex64) -> Complex64 + Sync,
    ) -> SpectralField {
        let nh = self.spec.nh();
        let src = f.data();
        let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
        self.for_each_row(&mut out, |row, line, modes| {
            for ((o, m), c) in line.iter_mut().zip(modes).zip(&src[row * nh..]) {
                *o = op(&m, *c);
            }
        });
        SpectralField::from_vec(self.spec, out).expect("same length")
    }

    fn check(&self, spec: GridSpec) {
        assert_eq!(spec, self.spec, "field grid does not match transform grid");
    }

    /// Real samples to spectral coefficients (mean at the zero mode).
    pub fn forward(&self, f: &RealField) -> SpectralField {
        self.check(f.spec());
        let mut data = self.fft.forward(f.data());
        self.apply_center_phase(&mut data, 1.0 / self.spec.len() as f64);
        SpectralField::from_vec(self.spec, data).expect("transform preserves length")
    }

    /// Spectral coefficients to real samples. Fails if the coefficients are
    /// not the transform of a real field.
    pub fn inverse(&self, f: &SpectralField) -> Result<RealField> {
        self.check(f.spec());
        let residual = self.hermitian_residual(f);
        if residual > HERMITIAN_TOLERANCE {
            return Err(Error::HermitianViolation { residual });
        }
        let mut data = f.data().to_vec();
        self.symmetrize(&mut data);
        self.apply_center_phase(&mut data, 1.0);
        RealField::from_vec(self.spec, self.fft.inverse(data))
    }

    /// Multiplies by `scale·(-1)^{mx+my+mz}`, which moves the phase origin
    /// from grid index 0 to the box center, since `x_0 = -L/2` and `n` is even.
    fn apply_center_phase(&self, d: &mut [Complex64], scale: f64) {
        let nh = self.spec.nh();
        let n = self.spec.n;
        d.par_chunks_mut(nh).enumerate().for_each(|(row, line)| {
            let mut sign = if (row % n + row / n) % 2 == 0 {
                scale
            } else {
                -scale
            };
            for c in line {
                *c *= sign;
                sign = -sign;
            }
        });
    }

    /// Partner index of `(kx, ky, kz)` on a self-conjugate plane.
    fn partner(&self, kx: usize, ky: usize, kz: usize) -> usize {
        let n = self.spec.n;
        self.spec.spectral_index(kx, (n - ky) % n, (n - kz) % n)
    }

    /// `‖c − conj(c_partner)‖ / ‖c‖` over the `kx = 0` and `kx = n/2` planes.
    pub fn hermitian_residual(&self, f: &SpectralField) -> f64 {
        let n = self.spec.n;
        let d = f.data();
        let mut diff = 0.0;
        for kx in [0, n / 2] {
            for kz in 0..n {
                for ky in 0..n {
                    let a = d[self.spec.spectral_index(kx, ky, kz)];
                    let b = d[self.partner(kx, ky, kz)].conj();
                    diff += (a - b).norm_sqr();
                }
            }
        }
        let total: f64 = d
            .iter()
            .zip(f.weights())
            .map(|(c, w)| w * c.norm_sqr())
            .sum();
        if total == 0.0 {
            0.0
        } else {
            (0.5 * diff / total).sqrt()
        }
    }

    fn symmetrize(&self, d: &mut [Complex64]) {
        let n = self.spec.n;
        for kx in [0, n / 2] {
            for kz in 0..n {
                for ky in 0..n {
                    let i = self.spec.spectral_index(kx, ky, kz);
                    let j = self.partner(kx, ky, kz);
                    if j < i {
                        continue;
                    }
                    let avg = 0.5 * (d[i] + d[j].conj());
                    d[i] = avg;
                    d[j] = avg.conj();
                }
            }
        }
    }

    /// `∂_axis f`: multiply by `i k_axis`, zero on the Nyquist mode.
    pub fn derivative(&self, f: &SpectralField, axis: Axis) -> SpectralField {
        let a = axis.index();
        self.map_modes(f, |m, c| Complex64::new(-c.im, c.re) * m.kd[a])
    }

    /// `Δf`, multiply by `-|k|²`.
    pub fn laplacian(&self, f: &SpectralField) -> SpectralField {
        self.map_modes(f, |m, c| c * -m.k2())
    }

    /// `(−Δ)⁻¹ f`, with the zero mode set to zero.
    pub fn inverse_laplacian(&self, f: &SpectralField) -> SpectralField {
        self.map_modes(f, |m, c| {
            if m.is_zero() {
                Complex64::new(0.0, 0.0)
            } else {
                c / m.k2()
            }
        })
    }

    /// `e^{ν t Δ} f`, i.e. multiply by `exp(−ν t |k|²)`.
    pub fn heat(&self, f: &SpectralField, nu_t: f64) -> Result<SpectralField> {
        let mut out = f.clone();
        self.heat_in_place(&mut out, nu_t)?;
        Ok(out)
    }

    /// In-place [`Grid::heat`]; the factor separates into one table per axis.
    pub fn heat_in_place(&self, f: &mut SpectralField, nu_t: f64) -> Result<()> {
        if !(nu_t >= 0.0) {
            return Err(Error::NegativeHeatTime(nu_t));
        }
        if nu_t == 0.0 {
            return Ok(());
        }
        self.check(f.spec());
        let n = self.spec.n;
        let e: Vec<f64> = self.k_full.iter().map(|k| (-nu_t * k * k).exp()).collect();
        // the stored x-Nyquist index n/2 has |k| = πn/L, same as index n/2 of the full axis
        f.data_mut()
            .par_chunks_mut(self.spec.nh())
            .enumerate()
            .for_each(|(row, line)| {
                let eyz = e[row % n] * e[row / n];
                for (c, ex) in line.iter_mut().zip(&e) {
                    *c *= eyz * ex;
                }
            });
        Ok(())
    }

    /// True if the mode survives dealiasing.
    #[inline]
    pub fn retained(&self, m: &Mode) -> bool {
        let cut = self.spec.cutoff() as i64;
        m.m.iter().all(|&v| v.abs() < cut)
    }

    /// Zero every mode with some `|m_i| >= cutoff`.
    pub fn dealias(&self, f: &SpectralField) -> SpectralField {
        let mut out = f.clone();
        self.dealias_in_place(&mut out);
        out
    }

    pub fn dealias_in_place(&self, f: &mut SpectralField) {
        self.check(f.spec());
        let n = self.spec.n;
        let cut = self.spec.cutoff();
        let kept = |i: usize| i < cut || i > n - cut;
        f.data_mut()
            .par_chunks_mut(self.spec.nh())
            .enumerate()
            .for_each(|(row, line)| {
                let zero = Complex64::new(0.0, 0.0);
                if kept(row % n) && kept(row / n) {
                    line[cut..].fill(zero);
                } else {
                    line.fill(zero);
                }
            });
    }

    pub fn forward_vector(&self, v: &RealVector) -> SpectralVector {
        v.map(|c| self.forward(c))
    }

    pub fn inverse_vector(&self, v: &SpectralVector) -> Result<RealVector> {
        v.try_map(|c| self.inverse(c))
    }

    pub fn forward_tensor(&self, t: &RealTensor) -> SpectralTensor {
        t.map(|c| self.forward(c))
    }

    pub fn inverse_tensor(&self, t: &SpectralTensor) -> Result<RealTensor> {
        t.try_map(|c| self.inverse(c))
    }

    pub fn dealias_tensor_in_place(&self, t: &mut SpectralTensor) {
        for c in &mut t.c {
            self.dealias_in_place(c);
        }
    }

    pub fn heat_tensor_in_place(&self, t: &mut SpectralTensor, nu_t: f64) -> Result<()> {
        t.c.iter_mut().try_for_each(|c| self.heat_in_place(c, nu_t))
    }

    pub fn heat_vector_in_place(&self, v: &mut SpectralVector, nu_t: f64) -> Result<()> {
        v.c.iter_mut().try_for_each(|c| self.heat_in_place(c, nu_t))
    }

    pub fn dealias_tensor(&self, t: &SpectralTensor) -> SpectralTensor {
        t.map(|c| self.dealias(c))
    }

    pub fn dealias_vector(&self, v: &SpectralVector) -> SpectralVector {
        v.map(|c| self.dealias(c))
    }

    pub fn heat_tensor(&self, t: &SpectralTensor, nu_t: f64) -> Result<SpectralTensor> {
        t.try_map(|c| self.heat(c, nu_t))
    }

    pub fn heat_vector(&self, v: &SpectralVector, nu_t: f64) -> Result<SpectralVector> {
        v.try_map(|c| self.heat(c, nu_t))
    }

    pub fn laplacian_tensor(&self, t: &SpectralTensor) -> SpectralTensor {
        t.map(|c| self.laplacian(c))
    }

    /// `Σ_ij ∂_j M_ij`
    pub fn divergence_tensor(&self, t: &SpectralTensor) -> SpectralVector {
        Vector::new([0, 1, 2].map(|i| {
            let mut acc = SpectralField::zeros(self.spec);
            for j in Axis::ALL {
                acc += &self.derivative(t.get(i, j.index()), j);
            }
            acc
        }))
    }

    /// `Σ_i ∂_i v_i`
    pub fn divergence(&self, v: &SpectralVector) -> SpectralField {
        let mut acc = self.derivative(&v.c[0], Axis::X);
        acc += &self.derivative(&v.c[1], Axis::Y);
        acc += &self.derivative(&v.c[2], Axis::Z);
        acc
    }

    /// Share of `‖t‖²` in the top `fraction` of the complete shells.
    ///
    /// Shell `s` holds the modes with `round(|m|) = s`; shells `1..=cutoff`
    /// lie entirely inside the retained cube, and the tail is the shells with
    /// `(1 − fraction)·cutoff < s <= cutoff`. Partial shells beyond the cutoff
    /// (the cube corners) count toward the total only.
    pub fn tail_fraction(&self, t: &SpectralTensor, fraction: f64) -> f64 {
        let cut = self.spec.cutoff() as f64;
        let edge = (1.0 - fraction) * cut;
        let mut tail = 0.0;
        let mut total = 0.0;
        for (comp, w6) in t.c.iter().zip(SYM_WEIGHTS) {
            for (i, (v, w)) in comp.data().iter().zip(comp.weights()).enumerate() {
                let e = w6 * w * v.norm_sqr();
                total += e;
                let m = self.mode(i).m;
                let shell = ((m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64)
                    .sqrt()
                    .round();
                if shell > edge && shell <= cut {
                    tail += e;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }
}

#[cfg(test)]
mod tests;
