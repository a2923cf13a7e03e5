//! Slow reference implementations used to check the production paths.
//!
//! Nothing here calls into the FFT, the spectral multipliers, or the
//! closed-form eigensolver. The O(n⁶) routines refuse grids larger than 8³.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{GridSpec, RealField, SpectralField};

/// Largest grid the direct-sum routines accept.
pub const MAX_ORACLE_N: usize = 8;

fn guard(spec: GridSpec) -> Result<()> {
    if spec.n > MAX_ORACLE_N {
        Err(Error::OracleTooLarge(spec.n))
    } else {
        Ok(())
    }
}

fn signed(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// `k·x` for storage indices, with `x` measured from the box center.
fn phase_of(k: [usize; 3], x: [usize; 3], n: usize) -> f64 {
    let half = (n / 2) as i64;
    let dot: i64 = (0..3).map(|a| signed(k[a], n) * (x[a] as i64 - half)).sum();
    2.0 * PI * dot as f64 / n as f64
}

/// Direct-sum forward DFT into the half-spectrum layout, normalized by `n³`,
/// with phases taken relative to the box center.
pub fn naive_dft(f: &RealField) -> Result<SpectralField> {
    let spec = f.spec();
    guard(spec)?;
    let n = spec.n;
    let nh = n / 2 + 1;
    let mut out = vec![Complex64::new(0.0, 0.0); nh * n * n];
    for kz in 0..n {
        for ky in 0..n {
            for kx in 0..nh {
                let mut acc = Complex64::new(0.0, 0.0);
                for z in 0..n {
                    for y in 0..n {
                        for x in 0..n {
                            let phase = -phase_of([kx, ky, kz], [x, y, z], n);
                            let v = f.data()[x + n * (y + n * z)];
                            acc += Complex64::new(v * phase.cos(), v * phase.sin());
                        }
                    }
                }
                out[kx + nh * (ky + n * kz)] = acc / (n * n * n) as f64;
            }
        }
    }
    SpectralField::from_vec(spec, out)
}

/// Direct-sum inverse DFT over the full spectrum, taking the real part.
pub fn naive_idft(f: &SpectralField) -> Result<RealField> {
    let spec = f.spec();
    guard(spec)?;
    let n = spec.n;
    let full = full_spectrum(f);
    let mut out = vec![0.0; n * n * n];
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for kz in 0..n {
                    for ky in 0..n {
                        for kx in 0..n {
                            let phase = phase_of([kx, ky, kz], [x, y, z], n);
                            acc += full[kx + n * (ky + n * kz)]
                                * Complex64::new(phase.cos(), phase.sin());
                        }
                    }
                }
                out[x + n * (y + n * z)] = acc.re;
            }
        }
    }
    RealField::from_vec(spec, out)
}

/// Expands a half spectrum to all `n³` coefficients, indexed like real data.
pub fn full_spectrum(f: &SpectralField) -> Vec<Complex64> {
    let n = f.spec().n;
    let mut full = vec![Complex64::new(0.0, 0.0); n * n * n];
    for kz in 0..n {
        for ky in 0..n {
            for kx in 0..n {
                let m = [signed(kx, n), signed(ky, n), signed(kz, n)];
                full[kx + n * (ky + n * kz)] = f.coeff(m);
            }
        }
    }
    full
}

/// Circular convolution of two coefficient arrays: the spectrum of the
/// pointwise grid product, aliasing included.
pub fn naive_convolution(f: &SpectralField, g: &SpectralField) -> Result<Vec<Complex64>> {
    guard(f.spec())?;
    let n = f.spec().n;
    let a = full_spectrum(f);
    let b = full_spectrum(g);
    let mut out = vec![Complex64::new(0.0, 0.0); n * n * n];
    for pz in 0..n {
        for py in 0..n {
            for px in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for qz in 0..n {
                    for qy in 0..n {
                        for qx in 0..n {
                            let rx = (px + n - qx) % n;
                            let ry = (py + n - qy) % n;
                            let rz = (pz + n - qz) % n;
                            acc += a[qx + n * (qy + n * qz)] * b[rx + n * (ry + n * rz)];
                        }
                    }
                }
                out[px + n * (py + n * pz)] = acc;
            }
        }
    }
    Ok(out)
}

/// Exact (non-periodic) convolution: product coefficients on modes `[-n, n)³`.
#[derive(Clone, Debug)]
pub struct ExtendedSpectrum {
    n: usize,
    data: Vec<Complex64>,
}

impl ExtendedSpectrum {
    pub fn get(&self, m: [i64; 3]) -> Complex64 {
        let w = 2 * self.n as i64;
        let idx = |v: i64| (v + self.n as i64) as usize;
        if m.iter()
            .any(|&v| v < -(self.n as i64) || v >= self.n as i64)
        {
            return Complex64::new(0.0, 0.0);
        }
        self.data[idx(m[0]) + w as usize * (idx(m[1]) + w as usize * idx(m[2]))]
    }
}

pub fn linear_convolution(f: &SpectralField, g: &SpectralField) -> Result<ExtendedSpectrum> {
    guard(f.spec())?;
    let n = f.spec().n;
    let w = 2 * n;
    let lo = -(n as i64) / 2;
    let hi = n as i64 / 2;
    let mut data = vec![Complex64::new(0.0, 0.0); w * w * w];
    for az in lo..hi {
        for ay in lo..hi {
            for ax in lo..hi {
                let ca = f.coeff([ax, ay, az]);
                if ca == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for bz in lo..hi {
                    for by in lo..hi {
                        for bx in lo..hi {
                            let p = [ax + bx, ay + by, az + bz];
                            let i = |v: i64| (v + n as i64) as usize;
                            data[i(p[0]) + w * (i(p[1]) + w * i(p[2]))] +=
                                ca * g.coeff([bx, by, bz]);
                        }
                    }
                }
            }
        }
    }
    Ok(ExtendedSpectrum { n, data })
}

/// Eigenvalues of a symmetric 3×3 matrix by cyclic Jacobi rotations, ascending.
#[allow(clippy::needless_range_loop)]
pub fn jacobi_eig(m: [[f64; 3]; 3]) -> [f64; 3] {
    let mut a = m;
    let scale = a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    if scale == 0.0 {
        return [0.0; 3];
    }
    for _sweep in 0..100 {
        let off = (a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2)).sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            // A <- Jᵀ A J with J the (p, q) rotation
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
        }
    }
    let mut d = [a[0][0], a[1][1], a[2][2]];
    d.sort_by(|x, y| x.partial_cmp(y).unwrap());
    d
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; order];
    let mut w = vec![0.0; order];
    for i in 0..order {
        let mut t = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=order {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = order as f64 * (t * p1 - p0) / (t * t - 1.0);
            let dt = p1 / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        x[i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
}

/// `π w √v (1−2v)(−7+2v+2w)² e^{−3w−3v}`, the unit-amplitude colliding-jets
/// integrand for `−∫det S` after the substitution `v = z², w = r²`.
pub fn det_integrand(v: f64, w: f64) -> f64 {
    PI * w
        * v.sqrt()
        * (1.0 - 2.0 * v)
        * (-7.0 + 2.0 * v + 2.0 * w).powi(2)
        * (-3.0 * w - 3.0 * v).exp()
}

/// `−∫det S` for unit-amplitude colliding jets by composite Gauss–Legendre
/// quadrature of [`det_integrand`] over `[0, 40]²`. The `√v` factor is
/// removed by integrating in `s = √v`. The neglected tail is below `e^{-100}`.
pub fn det_integrand_quadrature() -> f64 {
    const UPPER: f64 = 40.0;
    const PANELS: usize = 40;
    let (x, wt) = gauss_legendre(20);
    // s = √v on [0, √40], w on [0, 40]
    let s_max = UPPER.sqrt();
    let panel = |lo: f64, hi: f64, f: &dyn Fn(f64) -> f64| -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        x.iter()
            .zip(&wt)
            .map(|(xi, wi)| wi * f(mid + half * xi))
            .sum::<f64>()
            * half
    };
    let composite = |hi: f64, f: &dyn Fn(f64) -> f64| -> f64 {
        let h = hi / PANELS as f64;
        (0..PANELS)
            .map(|p| panel(p as f64 * h, (p + 1) as f64 * h, f))
            .sum()
    };
    composite(UPPER, &|w| {
        composite(s_max, &|s| det_integrand(s * s, w) * 2.0 * s)
    })
}

/// Closed form of the colliding-jets determinant integral, `8π^{3/2}/(81√3)`.
pub fn det_integral_closed_form() -> f64 {
    8.0 * PI.powf(1.5) / (81.0 * 3f64.sqrt())
}

/// Sixth-order centered periodic finite-difference derivative of real samples.
pub fn fd6_derivative(f: &RealField, axis: usize) -> RealField {
    let spec = f.spec();
    let n = spec.n;
    let h = spec.dx();
    const C: [f64; 3] = [45.0, -9.0, 1.0];
    let mut out = vec![0.0; spec.len()];
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let at = |off: i64| {
                    let mut p = [x, y, z];
                    p[axis] = (p[axis] as i64 + off).rem_euclid(n as i64) as usize;
                    f.data()[p[0] + n * (p[1] + n * p[2])]
                };
                let d: f64 = (1..=3)
                    .map(|s| C[s - 1] * (at(s as i64) - at(-(s as i64))))
                    .sum();
                out[x + n * (y + n * z)] = d / (60.0 * h);
            }
        }
    }
    RealField::from_vec(spec, out).expect("same grid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_on_diagonal_and_identity() {
        let d = jacobi_eig([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -2.0]]);
        assert_eq!(d, [-2.0, 1.0, 1.0]);
        let i = jacobi_eig([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert_eq!(i, [1.0, 1.0, 1.0]);
    }

    #[test]
    fn jacobi_matches_characteristic_roots() {
        // eigenvalues 1, 2, 4 rotated by a fixed orthogonal matrix
        let a = [[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 4.0]];
        let d = jacobi_eig(a);
        for (got, want) in d.iter().zip([1.0, 3.0, 4.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn integrand_vanishes_at_origin() {
        assert_eq!(det_integrand(0.0, 0.0), 0.0);
    }

    #[test]
    fn quadrature_reproduces_closed_form() {
        let q = det_integrand_quadrature();
        let exact = det_integral_closed_form();
        assert!(q > 0.0);
        assert!(((q - exact) / exact).abs() < 1e-9, "{q} vs {exact}");
        assert!((exact - 0.31752).abs() < 5e-6);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_large_grids() {
        let spec = GridSpec::new(16, 1.0).unwrap();
        let f = RealField::zeros(spec);
        assert!(matches!(naive_dft(&f), Err(Error::OracleTooLarge(16))));
        let s = SpectralField::zeros(spec);
        assert!(naive_convolution(&s, &s).is_err());
        assert!(naive_idft(&s).is_err());
    }

    #[test]
    fn convolution_with_constant_is_identity() {
        let spec = GridSpec::new(8, 2.0 * PI).unwrap();
        let mut one = SpectralField::zeros(spec);
        one.data_mut()[0] = Complex64::new(1.0, 0.0);
        let mut g = SpectralField::zeros(spec);
        g.data_mut()[spec.spectral_index(1, 2, 7)] = Complex64::new(0.3, -0.2);
        let conv = naive_convolution(&one, &g).unwrap();
        assert_eq!(conv, full_spectrum(&g));
    }

    #[test]
    fn single_modes_convolve_to_sum_mode() {
        let spec = GridSpec::new(8, 2.0 * PI).unwrap();
        let mut a = SpectralField::zeros(spec);
        a.data_mut()[spec.spectral_index(1, 0, 0)] = Complex64::new(1.0, 0.0);
        let mut b = SpectralField::zeros(spec);
        b.data_mut()[spec.spectral_index(0, 2, 0)] = Complex64::new(1.0, 0.0);
        let ext = linear_convolution(&a, &b).unwrap();
        assert_eq!(ext.get([1, 2, 0]), Complex64::new(1.0, 0.0));
        assert_eq!(ext.get([1, -2, 0]), Complex64::new(0.0, 0.0));
    }
}
