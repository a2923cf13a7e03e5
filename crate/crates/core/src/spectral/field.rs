use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use super::GridSpec;
use crate::error::{Error, Result};

/// Real-space samples on the `n³` grid, x-fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    spec: GridSpec,
    data: Vec<f64>,
}

impl RealField {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            data: vec![0.0; spec.len()],
        }
    }

    pub fn from_vec(spec: GridSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != spec.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                spec.len(),
                data.len()
            )));
        }
        Ok(Self { spec, data })
    }

    /// Samples `f(x, y, z)` at the grid points of `[-L/2, L/2)³`.
    pub fn from_fn(spec: GridSpec, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let n = spec.n;
        let mut data = Vec::with_capacity(spec.len());
        for k in 0..n {
            let z = spec.coord(k);
            for j in 0..n {
                let y = spec.coord(j);
                for i in 0..n {
                    data.push(f(spec.coord(i), y, z));
                }
            }
        }
        Self { spec, data }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Discrete L² inner product, `Σ f g · dV`.
    pub fn inner(&self, other: &Self) -> f64 {
        let s: f64 = self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum();
        s * self.spec.cell_volume()
    }

    pub fn norm_l2(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn rms(&self) -> f64 {
        (self.data.iter().map(|v| v * v).sum::<f64>() / self.data.len() as f64).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `(Σ |f|^q dV)^{1/q}`; `q = ∞` gives the grid maximum of `|f|`.
    pub fn norm_lq(&self, q: f64) -> f64 {
        if q.is_infinite() {
            return self.max_abs();
        }
        let s: f64 = self.data.iter().map(|v| v.abs().powf(q)).sum();
        (s * self.spec.cell_volume()).powf(1.0 / q)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            spec: self.spec,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Half-spectrum Fourier coefficients, normalized so the zero mode is the mean.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    spec: GridSpec,
    data: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            data: vec![Complex64::new(0.0, 0.0); spec.spectral_len()],
        }
    }

    pub fn from_vec(spec: GridSpec, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != spec.spectral_len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} coefficients, got {}",
                spec.spectral_len(),
                data.len()
            )));
        }
        Ok(Self { spec, data })
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    /// Coefficient at signed mode `(mx, my, mz)`, using conjugate symmetry
    /// for `mx < 0`.
    pub fn coeff(&self, m: [i64; 3]) -> Complex64 {
        let n = self.spec.n as i64;
        let wrap = |v: i64| v.rem_euclid(n) as usize;
        let [mx, my, mz] = m;
        if mx < 0 || mx > n / 2 {
            let idx = self.spec.spectral_index(wrap(-mx), wrap(-my), wrap(-mz));
            self.data[idx].conj()
        } else {
            self.data[self.spec.spectral_index(mx as usize, wrap(my), wrap(mz))]
        }
    }

    /// Weight of a stored coefficient in full-spectrum sums: entries with
    /// `0 < kx < n/2` stand for themselves and their conjugate partner.
    #[inline]
    pub(crate) fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        let nh = self.spec.nh();
        (0..nh)
            .map(move |kx| if kx == 0 || kx == nh - 1 { 1.0 } else { 2.0 })
            .cycle()
            .take(self.data.len())
    }

    /// Discrete L² inner product of the real fields, computed by Parseval.
    pub fn inner(&self, other: &Self) -> f64 {
        let s: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .zip(self.weights())
            .map(|((a, b), w)| w * (a.re * b.re + a.im * b.im))
            .sum();
        s * self.spec.volume()
    }

    pub fn norm_l2(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    pub fn scale(&mut self, a: f64) {
        self.data.iter_mut().for_each(|c| *c *= a);
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &Self) {
        self.data
            .iter_mut()
            .zip(&x.data)
            .for_each(|(c, v)| *c += a * v);
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

macro_rules! impl_field_arith {
    ($t:ty) => {
        impl Add for &$t {
            type Output = $t;
            fn add(self, rhs: Self) -> $t {
                let mut out = self.clone();
                out += rhs;
                out
            }
        }
        impl Sub for &$t {
            type Output = $t;
            fn sub(self, rhs: Self) -> $t {
                let mut out = self.clone();
                out -= rhs;
                out
            }
        }
        impl AddAssign<&$t> for $t {
            fn add_assign(&mut self, rhs: &$t) {
                debug_assert_eq!(self.spec, rhs.spec);
                self.data
                    .iter_mut()
                    .zip(&rhs.data)
                    .for_each(|(a, b)| *a += *b);
            }
        }
        impl SubAssign<&$t> for $t {
            fn sub_assign(&mut self, rhs: &$t) {
                debug_assert_eq!(self.spec, rhs.spec);
                self.data
                    .iter_mut()
                    .zip(&rhs.data)
                    .for_each(|(a, b)| *a -= *b);
            }
        }
        impl Mul<f64> for &$t {
            type Output = $t;
            fn mul(self, rhs: f64) -> $t {
                let mut out = self.clone();
                out.data.iter_mut().for_each(|a| *a *= rhs);
                out
            }
        }
        impl Neg for &$t {
            type Output = $t;
            fn neg(self) -> $t {
                self * -1.0
            }
        }
    };
}

impl_field_arith!(RealField);
impl_field_arith!(SpectralField);

/// Three components sharing one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Vector<F> {
    pub c: [F; 3],
}

/// Symmetric 3×3 tensor stored once per off-diagonal, in the order
/// `xx, xy, xz, yy, yz, zz`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensor<F> {
    pub c: [F; 6],
}

pub type RealVector = Vector<RealField>;
pub type SpectralVector = Vector<SpectralField>;
pub type RealTensor = SymTensor<RealField>;
pub type SpectralTensor = SymTensor<SpectralField>;

/// Component slot of matrix entry `(i, j)`.
pub const fn sym_index(i: usize, j: usize) -> usize {
    const SLOT: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];
    SLOT[i][j]
}

/// `(i, j)` pairs in storage order.
pub const SYM_PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

/// Multiplicity of each stored component in a Frobenius sum.
pub const SYM_WEIGHTS: [f64; 6] = [1.0, 2.0, 2.0, 1.0, 2.0, 1.0];

impl<F> Vector<F> {
    pub fn new(c: [F; 3]) -> Self {
        Self { c }
    }

    pub fn map<G>(&self, f: impl FnMut(&F) -> G) -> Vector<G> {
        Vector {
            c: each3(&self.c, f),
        }
    }

    pub fn try_map<G, E>(&self, mut f: impl FnMut(&F) -> Result<G, E>) -> Result<Vector<G>, E> {
        Ok(Vector {
            c: [f(&self.c[0])?, f(&self.c[1])?, f(&self.c[2])?],
        })
    }
}

impl<F> SymTensor<F> {
    pub fn new(c: [F; 6]) -> Self {
        Self { c }
    }

    pub fn get(&self, i: usize, j: usize) -> &F {
        &self.c[sym_index(i, j)]
    }

    pub fn map<G>(&self, mut f: impl FnMut(&F) -> G) -> SymTensor<G> {
        SymTensor {
            c: [
                f(&self.c[0]),
                f(&self.c[1]),
                f(&self.c[2]),
                f(&self.c[3]),
                f(&self.c[4]),
                f(&self.c[5]),
            ],
        }
    }

    pub fn try_map<G, E>(&self, mut f: impl FnMut(&F) -> Result<G, E>) -> Result<SymTensor<G>, E> {
        Ok(SymTensor {
            c: [
                f(&self.c[0])?,
                f(&self.c[1])?,
                f(&self.c[2])?,
                f(&self.c[3])?,
                f(&self.c[4])?,
                f(&self.c[5])?,
            ],
        })
    }
}

fn each3<F, G>(c: &[F; 3], mut f: impl FnMut(&F) -> G) -> [G; 3] {
    [f(&c[0]), f(&c[1]), f(&c[2])]
}

impl<F> Index<usize> for Vector<F> {
    type Output = F;
    fn index(&self, i: usize) -> &F {
        &self.c[i]
    }
}

impl<F> IndexMut<usize> for Vector<F> {
    fn index_mut(&mut self, i: usize) -> &mut F {
        &mut self.c[i]
    }
}

impl Vector<SpectralField> {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            c: [0; 3].map(|_| SpectralField::zeros(spec)),
        }
    }

    pub fn spec(&self) -> GridSpec {
        self.c[0].spec()
    }

    pub fn inner(&self, other: &Self) -> f64 {
        (0..3).map(|i| self.c[i].inner(&other.c[i])).sum()
    }

    pub fn norm_l2(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    pub fn axpy(&mut self, a: f64, x: &Self) {
        for i in 0..3 {
            self.c[i].axpy(a, &x.c[i]);
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.c.iter_mut().for_each(|f| f.scale(a));
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(SpectralField::is_finite)
    }
}

impl Vector<RealField> {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            c: [0; 3].map(|_| RealField::zeros(spec)),
        }
    }

    pub fn spec(&self) -> GridSpec {
        self.c[0].spec()
    }

    /// Grid maximum of the pointwise Euclidean length.
    pub fn max_norm(&self) -> f64 {
        let [a, b, c] = &self.c;
        a.data()
            .iter()
            .zip(b.data())
            .zip(c.data())
            .fold(0.0_f64, |m, ((x, y), z)| {
                m.max((x * x + y * y + z * z).sqrt())
            })
    }

    pub fn inner(&self, other: &Self) -> f64 {
        (0..3).map(|i| self.c[i].inner(&other.c[i])).sum()
    }
}

impl SymTensor<SpectralField> {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            c: [0; 6].map(|_| SpectralField::zeros(spec)),
        }
    }

    pub fn spec(&self) -> GridSpec {
        self.c[0].spec()
    }

    /// Frobenius L² inner product `Σ_ij ∫ M_ij Q_ij`.
    pub fn inner(&self, other: &Self) -> f64 {
        (0..6)
            .map(|i| SYM_WEIGHTS[i] * self.c[i].inner(&other.c[i]))
            .sum()
    }

    pub fn norm_l2(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    pub fn trace(&self) -> SpectralField {
        let mut t = self.c[0].clone();
        t += &self.c[3];
        t += &self.c[5];
        t
    }

    pub fn axpy(&mut self, a: f64, x: &Self) {
        for i in 0..6 {
            self.c[i].axpy(a, &x.c[i]);
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.c.iter_mut().for_each(|f| f.scale(a));
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(SpectralField::is_finite)
    }
}

impl SymTensor<RealField> {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            c: [0; 6].map(|_| RealField::zeros(spec)),
        }
    }

    pub fn spec(&self) -> GridSpec {
        self.c[0].spec()
    }

    /// Matrix at grid point `p`.
    #[inline]
    pub fn at(&self, p: usize) -> [[f64; 3]; 3] {
        let v = |i: usize| self.c[i].data()[p];
        [[v(0), v(1), v(2)], [v(1), v(3), v(4)], [v(2), v(4), v(5)]]
    }

    /// Six stored entries at grid point `p`.
    #[inline]
    pub fn entries(&self, p: usize) -> [f64; 6] {
        [0, 1, 2, 3, 4, 5].map(|i| self.c[i].data()[p])
    }

    /// Largest pointwise `|xx + yy + zz|` divided by the field RMS (0 for the zero field).
    pub fn trace_residual(&self) -> f64 {
        let n = self.spec().len();
        let mut worst = 0.0_f64;
        let mut sq = 0.0;
        for p in 0..n {
            let e = self.entries(p);
            worst = worst.max((e[0] + e[3] + e[5]).abs());
            sq += frob_sq(&e);
        }
        let rms = (sq / n as f64).sqrt();
        if rms == 0.0 {
            0.0
        } else {
            worst / rms
        }
    }

    /// Grid maximum of the pointwise Frobenius norm.
    pub fn max_norm(&self) -> f64 {
        (0..self.spec().len()).fold(0.0_f64, |m, p| m.max(frob_sq(&self.entries(p)).sqrt()))
    }

    pub fn inner(&self, other: &Self) -> f64 {
        (0..6)
            .map(|i| SYM_WEIGHTS[i] * self.c[i].inner(&other.c[i]))
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(RealField::is_finite)
    }
}

#[inline]
pub(crate) fn frob_sq(e: &[f64; 6]) -> f64 {
    e[0] * e[0] + e[3] * e[3] + e[5] * e[5] + 2.0 * (e[1] * e[1] + e[2] * e[2] + e[4] * e[4])
}
