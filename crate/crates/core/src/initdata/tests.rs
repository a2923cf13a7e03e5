use num_complex::Complex64;
use rand::RngExt;

use super::*;
use crate::diagnostics::{det_integral, h1, hs_norm_sq};
use crate::operators::{divergence_residual, strain_space_residual, velocity_of, vorticity_of};
use crate::spectral::GridSpec;
use crate::testing::{rel, rng};

fn grid(n: usize) -> Grid {
    Grid::new(GridSpec::new(n, 16.0).unwrap()).unwrap()
}

fn max_abs(v: &RealVector) -> f64 {
    v.c.iter().map(|c| c.max_abs()).fold(0.0, f64::max)
}

/// Random grid points away from the symmetry axis.
fn sample_points(g: &Grid, count: usize, seed: u64) -> Vec<(usize, [f64; 3])> {
    let spec = g.spec();
    let n = spec.n;
    let mut r = rng(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let idx = [0, 1, 2].map(|_| r.random_range(n / 4..3 * n / 4));
        let x = idx.map(|i| spec.coord(i));
        if x[0].hypot(x[1]) > 0.05 {
            out.push((spec.real_index(idx[0], idx[1], idx[2]), x));
        }
    }
    out
}

#[test]
fn zero_amplitude_gives_zero_field() {
    let g = grid(16);
    let u = colliding_jets(&g, 0.0, [0.0; 3]);
    assert!(u
        .c
        .iter()
        .all(|c| c.data().iter().all(|v| *v == Complex64::new(0.0, 0.0))));
}

#[test]
fn colliding_jets_is_solenoidal() {
    let g = grid(64);
    let u = colliding_jets(&g, 1.0, [0.0; 3]);
    assert!(divergence_residual(&g, &u) <= 1e-10);
}

#[test]
fn colliding_jets_vorticity_matches_closed_form() {
    let g = grid(64);
    let u = colliding_jets(&g, 1.0, [0.0; 3]);
    let w = g.inverse_vector(&vorticity_of(&g, &u)).unwrap();
    let scale = max_abs(&w);
    for (p, [x, y, z]) in sample_points(&g, 100, 3) {
        let r = x.hypot(y);
        let theta =
            (-14.0 * r * z + 4.0 * r * z.powi(3) + 4.0 * r.powi(3) * z) * (-(r * r) - z * z).exp();
        let want = [-y / r * theta, x / r * theta, 0.0];
        for c in 0..3 {
            let got = w.c[c].data()[p];
            assert!(
                (got - want[c]).abs() <= 1e-6 * scale,
                "component {c} at {:?}: {got} vs {}",
                [x, y, z],
                want[c]
            );
        }
    }
}

#[test]
fn colliding_jets_azimuthal_strain() {
    let g = grid(64);
    let s = g
        .inverse_tensor(&strain_of(&g, &colliding_jets(&g, 1.0, [0.0; 3])).unwrap())
        .unwrap();
    for (p, [x, y, z]) in sample_points(&g, 100, 4) {
        let r = x.hypot(y);
        let e = [-y / r, x / r, 0.0];
        let m = s.at(p);
        let got: f64 = (0..3)
            .map(|i| (0..3).map(|j| e[i] * m[i][j] * e[j]).sum::<f64>())
            .sum();
        let want = (1.0 - 2.0 * z * z) * (-(r * r) - z * z).exp();
        assert!(
            (got - want).abs() <= 1e-6,
            "at {:?}: {got} vs {want}",
            [x, y, z]
        );
    }
}

#[test]
fn colliding_jets_homogeneity() {
    let g = grid(64);
    let s1 = strain_of(&g, &colliding_jets(&g, 1.0, [0.0; 3])).unwrap();
    let s2 = strain_of(&g, &colliding_jets(&g, 2.0, [0.0; 3])).unwrap();
    let (d1, d2) = (
        det_integral(&g, &s1).unwrap(),
        det_integral(&g, &s2).unwrap(),
    );
    assert!(rel(d2, 8.0 * d1) <= 1e-10);
    assert!(rel(h1(&g, &s2), 4.0 * h1(&g, &s1)) <= 1e-10);
}

#[test]
fn off_center_jets_are_translates() {
    let g = grid(32);
    let dx = g.spec().dx();
    let u0 = g
        .inverse_vector(&colliding_jets(&g, 1.0, [0.0; 3]))
        .unwrap();
    let u1 = g
        .inverse_vector(&colliding_jets(&g, 1.0, [2.0 * dx, 0.0, -dx]))
        .unwrap();
    let n = g.n();
    for (i, j, k) in [(16, 16, 16), (10, 20, 12), (18, 15, 17)] {
        let a = u0.c[2].data()[g.spec().real_index(i, j, k)];
        let b = u1.c[2].data()[g.spec().real_index((i + 2) % n, j, (k + n - 1) % n)];
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn random_field_zero_amplitude_and_determinism() {
    let g = grid(16);
    let z = random_solenoidal(&g, 1, -4.0, 0.0).unwrap();
    assert_eq!(z.norm_l2(), 0.0);
    let a = random_solenoidal(&g, 9, -4.0, 1.0).unwrap();
    let b = random_solenoidal(&g, 9, -4.0, 1.0).unwrap();
    for c in 0..3 {
        assert_eq!(a.c[c].data(), b.c[c].data());
    }
    let other = random_solenoidal(&g, 10, -4.0, 1.0).unwrap();
    assert_ne!(a.c[0].data(), other.c[0].data());
}

#[test]
fn random_field_is_solenoidal_with_requested_rms() {
    let g = grid(16);
    for seed in 0..20 {
        let u = random_solenoidal(&g, seed, -4.0, 0.7).unwrap();
        assert!(divergence_residual(&g, &u) <= 1e-12, "seed {seed}");
        let rms = (u.inner(&u) / g.spec().volume()).sqrt();
        assert!(rel(rms, 0.7) <= 1e-12);
        assert_eq!(u.c[0].coeff([0, 0, 0]), Complex64::new(0.0, 0.0));
    }
}

#[test]
fn random_field_respects_band_and_slope() {
    let g = grid(16);
    assert!(random_solenoidal(&g, 0, -1.0, 1.0).is_err());
    assert!(random_solenoidal(&g, 0, 0.5, 1.0).is_err());
    assert!(random_solenoidal(&g, 0, -4.0, f64::NAN).is_err());
    let u = random_solenoidal_band(&g, 2, -4.0, 1.0, Some(2)).unwrap();
    for m in g.modes() {
        if m.m.iter().any(|v| v.abs() > 2) {
            assert!(u
                .c
                .iter()
                .all(|c| c.data()[m.index] == Complex64::new(0.0, 0.0)));
        }
    }
}

#[test]
fn random_field_spectrum_follows_slope() {
    // per-mode energy ∝ |k|^{slope−2}: compensated averages agree across shells
    let g = grid(32);
    let slope = -3.0;
    let mut sums = [0.0; 2];
    let mut counts = [0usize; 2];
    for seed in 0..16 {
        let u = random_solenoidal(&g, seed, slope, 1.0).unwrap();
        for m in g.modes() {
            let r = m.k2().sqrt() * 16.0 / (2.0 * std::f64::consts::PI);
            let bin = if (1.5..2.5).contains(&r) {
                0
            } else if (3.5..4.5).contains(&r) {
                1
            } else {
                continue;
            };
            let e: f64 = u.c.iter().map(|c| c.data()[m.index].norm_sqr()).sum();
            sums[bin] += e / m.k2().powf(0.5 * (slope - 2.0));
            counts[bin] += 1;
        }
    }
    let ratio = (sums[1] / counts[1] as f64) / (sums[0] / counts[0] as f64);
    assert!((ratio - 1.0).abs() < 0.15, "compensated ratio {ratio}");
}

#[test]
fn hessian_probe_trace_is_laplacian() {
    let g = grid(64);
    let center = [0.5, -0.25, 0.0];
    let h = hessian_probe(&g, Probe::GaussianHessian { center });
    let f = g.forward(&RealField::from_fn(g.spec(), |x, y, z| {
        let (x, y, z) = (x - center[0], y - center[1], z - center[2]);
        (-(x * x + y * y + z * z)).exp()
    }));
    let lap = g.laplacian(&f);
    let mut diff = h.trace();
    diff -= &lap;
    // the Nyquist mode has zero derivative wavenumber but nonzero |k|²; the
    // Gaussian is negligible there
    assert!(diff.norm_l2() <= 1e-12 * lap.norm_l2());
    assert!(strain_space_residual(&g, &h) >= 1.0 - 1e-10);
    assert!(strain_project(&g, &h).norm_l2() <= 1e-10 * h.norm_l2());
}

#[test]
fn scalar_identity_probe_is_annihilated() {
    let g = grid(16);
    let h = hessian_probe(&g, Probe::ScalarIdentity { seed: 5 });
    assert!(h.norm_l2() > 0.0);
    assert_eq!(h.c[1].norm_l2(), 0.0);
    assert!(strain_project(&g, &h).norm_l2() <= 1e-10 * h.norm_l2());
}

fn family_parts(g: &Grid) -> (SpectralTensor, SpectralTensor) {
    let mut spec = InitSpec::new(InitKind::PerturbedFamily);
    spec.seed = 3;
    let m = strain_of(g, &colliding_jets(g, 1.0, [0.0; 3])).unwrap();
    (m, spec.perturbation(g).unwrap())
}

#[test]
fn family_at_unit_dilation_is_the_sum() {
    let g = grid(64);
    let (m, q) = family_parts(&g);
    let s = perturbed_family(&g, &m, &q, 1).unwrap();
    let mut want = m.clone();
    want.axpy(1.0, &q);
    let mut d = s.clone();
    d.axpy(-1.0, &want);
    assert!(d.norm_l2() <= 1e-12 * want.norm_l2());
}

#[test]
fn family_dilation_scales_h1_and_stays_in_strain_space() {
    let g = grid(64);
    let (_, q) = family_parts(&g);
    let zero = SpectralTensor::zeros(g.spec());
    let base = hs_norm_sq(&g, &q, 1.0).unwrap().sqrt();
    for lambda in DILATIONS {
        let ql = perturbed_family(&g, &zero, &q, lambda).unwrap();
        let got = hs_norm_sq(&g, &ql, 1.0).unwrap().sqrt();
        assert!(
            rel(got, base / (lambda as f64).sqrt()) <= 1e-10,
            "lambda {lambda}"
        );
        assert!(strain_space_residual(&g, &ql) <= 1e-12);
    }
}

#[test]
fn family_matches_dilated_velocity() {
    // dilating the velocity with amplitude λ^{-5/2} gives the same strain
    let g = grid(64);
    let spec = g.spec();
    let mut init = InitSpec::new(InitKind::PerturbedFamily);
    init.seed = 4;
    let w = random_solenoidal_band(&g, init.seed, init.slope, 1.0, Some(init.q_max_mode)).unwrap();
    let q = strain_of(&g, &w).unwrap();
    let lambda = 4usize;
    let amp = (lambda as f64).powf(-2.5);
    let n = spec.n as i64;
    let dilated = w.map(|c| {
        let mut out = SpectralField::zeros(spec);
        for m in g.modes() {
            let v = c.data()[m.index];
            if v.norm() == 0.0 {
                continue;
            }
            let [mx, my, mz] = m.m.map(|x| (x * lambda as i64).rem_euclid(n) as usize);
            out.data_mut()[spec.spectral_index(mx, my, mz)] = v * amp;
        }
        out
    });
    let want = strain_of(&g, &dilated).unwrap();
    let got = perturbed_family(&g, &SpectralTensor::zeros(spec), &q, lambda).unwrap();
    let mut d = got.clone();
    d.axpy(-1.0, &want);
    assert!(d.norm_l2() <= 1e-12 * want.norm_l2());
    let u = velocity_of(&g, &got).unwrap();
    assert!(divergence_residual(&g, &u) <= 1e-12);
}

#[test]
fn family_rejects_bad_dilations() {
    let g = grid(32);
    let mut spec = InitSpec::new(InitKind::PerturbedFamily);
    spec.seed = 3;
    let q = spec.perturbation(&g).unwrap();
    let m = SpectralTensor::zeros(g.spec());
    assert!(matches!(
        perturbed_family(&g, &m, &q, 3),
        Err(Error::InvalidParams(_))
    ));
    // cutoff 10 at n = 32: λ = 8 sends |m| = 2 to 16
    assert!(matches!(
        perturbed_family(&g, &m, &q, 8),
        Err(Error::DilationOutOfRange { lambda: 8, .. })
    ));
    assert!(perturbed_family(&g, &m, &q, 4).is_ok());
}

#[test]
fn init_spec_validation_and_names() {
    for k in InitKind::ALL {
        assert_eq!(InitKind::parse(k.name()), Some(k));
    }
    assert_eq!(InitKind::parse("vortex_ring"), None);
    let mut s = InitSpec::new(InitKind::CollidingJets);
    s.amplitude = f64::INFINITY;
    assert!(s.validate().is_err());
    let mut s = InitSpec::new(InitKind::PerturbedFamily);
    s.lambda = 0;
    assert!(s.validate().is_err());
    assert!(InitSpec::new(InitKind::FromCheckpoint).validate().is_err());
    let g = grid(16);
    assert!(InitSpec::new(InitKind::HessianProbe).build(&g).is_err());
}

#[test]
fn build_from_checkpoint_round_trip() {
    use crate::dynamics::Equation;
    let g = grid(16);
    let s = InitSpec::new(InitKind::RandomSolenoidal)
        .build(&g)
        .unwrap()
        .strain;
    let ck = Checkpoint {
        t: 0.5,
        nu: 0.25,
        equation: Equation::Model,
        strain: g.inverse_tensor(&s).unwrap(),
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ck.bin");
    ck.write(&path).unwrap();
    let mut spec = InitSpec::new(InitKind::FromCheckpoint);
    spec.path = Some(path);
    let back = spec.build(&g).unwrap();
    assert_eq!(back.t, 0.5);
    assert_eq!(back.nu, Some(0.25));
    let mut d = back.strain.clone();
    d.axpy(-1.0, &s);
    assert!(d.norm_l2() <= 1e-13 * s.norm_l2());
    assert!(spec.build(&grid(8)).is_err());
}
