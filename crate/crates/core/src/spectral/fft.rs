//! Real-to-complex 3-D FFT on an `n³` cube.
//!
//! Real data is stored x-fastest (`x + n*(y + n*z)`); the half spectrum keeps
//! `nh = n/2 + 1` modes along x and is stored `kx + nh*(ky + n*kz)`.
//! Transforms are unnormalized; `Grid` applies the `1/n³` factor.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

pub(crate) struct Fft3 {
    n: usize,
    nh: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft3").field("n", &self.n).finish()
    }
}

impl Fft3 {
    pub(crate) fn new(n: usize) -> Self {
        let mut real = RealFftPlanner::<f64>::new();
        let mut cplx = FftPlanner::<f64>::new();
        Self {
            n,
            nh: n / 2 + 1,
            r2c: real.plan_fft_forward(n),
            c2r: real.plan_fft_inverse(n),
            fwd: cplx.plan_fft_forward(n),
            inv: cplx.plan_fft_inverse(n),
        }
    }

    pub(crate) fn forward(&self, input: &[f64]) -> Vec<Complex64> {
        let (n, nh) = (self.n, self.nh);
        debug_assert_eq!(input.len(), n * n * n);
        let mut out = vec![Complex64::new(0.0, 0.0); nh * n * n];
        out.par_chunks_mut(nh)
            .zip(input.par_chunks(n))
            .for_each_init(
                || (self.r2c.make_input_vec(), self.r2c.make_scratch_vec()),
                |(line, scratch), (dst, src)| {
                    line.copy_from_slice(src);
                    self.r2c
                        .process_with_scratch(line, dst, scratch)
                        .expect("r2c buffer sizes are fixed by the plan");
                },
            );
        self.pass_y(&mut out, &self.fwd);
        self.pass_z(&mut out, &self.fwd);
        out
    }

    /// Consumes a Hermitian-consistent half spectrum. The imaginary parts of
    /// the `kx = 0` and `kx = n/2` entries are discarded after the y/z passes.
    pub(crate) fn inverse(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        let (n, nh) = (self.n, self.nh);
        debug_assert_eq!(spec.len(), nh * n * n);
        self.pass_z(&mut spec, &self.inv);
        self.pass_y(&mut spec, &self.inv);
        let mut out = vec![0.0; n * n * n];
        out.par_chunks_mut(n)
            .zip(spec.par_chunks(nh))
            .for_each_init(
                || (self.c2r.make_input_vec(), self.c2r.make_scratch_vec()),
                |(line, scratch), (dst, src)| {
                    line.copy_from_slice(src);
                    line[0].im = 0.0;
                    line[nh - 1].im = 0.0;
                    self.c2r
                        .process_with_scratch(line, dst, scratch)
                        .expect("c2r buffer sizes are fixed by the plan");
                },
            );
        out
    }

    /// Transform along y inside every z-plane.
    fn pass_y(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let (n, nh) = (self.n, self.nh);
        let scratch_len = fft.get_inplace_scratch_len();
        data.par_chunks_mut(nh * n).for_each_init(
            || {
                (
                    vec![Complex64::new(0.0, 0.0); nh * n],
                    vec![Complex64::new(0.0, 0.0); scratch_len],
                )
            },
            |(tmp, scratch), plane| {
                // plane[ky][kx] -> tmp[kx][ky]
                for ky in 0..n {
                    for kx in 0..nh {
                        tmp[kx * n + ky] = plane[ky * nh + kx];
                    }
                }
                fft.process_with_scratch(tmp, scratch);
                for ky in 0..n {
                    for kx in 0..nh {
                        plane[ky * nh + kx] = tmp[kx * n + ky];
                    }
                }
            },
        );
    }

    /// Transform along z on blocks of `Z_BLOCK` adjacent columns, gathered
    /// into contiguous lines and scattered back.
    fn pass_z(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        const Z_BLOCK: usize = 16;
        let n = self.n;
        let p_len = self.nh * n;
        let scratch_len = fft.get_inplace_scratch_len();
        let base = SharedMut(data.as_mut_ptr());
        let total = data.len();
        (0..p_len.div_ceil(Z_BLOCK)).into_par_iter().for_each_init(
            || {
                (
                    vec![Complex64::new(0.0, 0.0); Z_BLOCK * n],
                    vec![Complex64::new(0.0, 0.0); scratch_len],
                )
            },
            |(buf, scratch), b| {
                let p0 = b * Z_BLOCK;
                let w = Z_BLOCK.min(p_len - p0);
                let lines = &mut buf[..w * n];
                for z in 0..n {
                    let off = z * p_len + p0;
                    debug_assert!(off + w <= total);
                    // SAFETY: block b owns columns p0..p0+w of every z-plane;
                    // blocks are disjoint and `data` outlives the loop.
                    let row = unsafe { std::slice::from_raw_parts(base.get().add(off), w) };
                    for (j, v) in row.iter().enumerate() {
                        lines[j * n + z] = *v;
                    }
                }
                fft.process_with_scratch(lines, scratch);
                for z in 0..n {
                    let off = z * p_len + p0;
                    // SAFETY: as above.
                    let row = unsafe { std::slice::from_raw_parts_mut(base.get().add(off), w) };
                    for (j, v) in row.iter_mut().enumerate() {
                        *v = lines[j * n + z];
                    }
                }
            },
        );
    }
}

#[derive(Clone, Copy)]
struct SharedMut(*mut Complex64);

impl SharedMut {
    fn get(self) -> *mut Complex64 {
        self.0
    }
}

// SAFETY: only used to hand disjoint column blocks to worker threads.
unsafe impl Send for SharedMut {}
unsafe impl Sync for SharedMut {}
