use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::oracle;
use crate::testing::{random_real, random_smooth, rel};

fn grid(n: usize, l: f64) -> Grid {
    Grid::new(GridSpec::new(n, l).unwrap()).unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

fn cmax_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).norm()))
}

fn cmax(a: &[Complex64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.norm()))
}

#[test]
fn grid_spec_validation() {
    assert!(GridSpec::new(6, 1.0).is_err());
    assert!(GridSpec::new(9, 1.0).is_err());
    assert!(GridSpec::new(8, 0.0).is_err());
    assert!(GridSpec::with_dealias(8, 1.0, 0.0).is_err());
    assert!(GridSpec::with_dealias(8, 1.0, 1.5).is_err());
    assert!(GridSpec::with_dealias(8, 1.0, 0.2).is_err());
    let s = GridSpec::new(48, 1.0).unwrap();
    assert_eq!(s.cutoff(), 16);
    assert_eq!(GridSpec::new(128, 16.0).unwrap().cutoff(), 42);
    assert_eq!(GridSpec::new(8, 1.0).unwrap().cutoff(), 2);
}

#[test]
fn wavenumber_convention() {
    let s = GridSpec::new(8, 4.0).unwrap();
    let modes: Vec<i64> = (0..8).map(|i| s.mode_of(i)).collect();
    assert_eq!(modes, vec![0, 1, 2, 3, -4, -3, -2, -1]);
    assert!((s.wavenumber(1) - PI / 2.0).abs() < 1e-15);
    assert_eq!(s.coord(0), -2.0);
}

#[test]
fn forward_of_zero_is_zero() {
    let g = grid(8, 1.0);
    let f = g.forward(&RealField::zeros(g.spec()));
    assert!(f.data().iter().all(|c| *c == Complex64::new(0.0, 0.0)));
}

#[test]
fn forward_of_single_cosine() {
    for (n, l) in [(8, 1.0), (16, 2.0 * PI), (32, 16.0)] {
        let g = grid(n, l);
        let f = RealField::from_fn(g.spec(), |x, _, _| (2.0 * PI * x / l).cos());
        let c = g.forward(&f);
        assert!((c.coeff([1, 0, 0]) - 0.5).norm() < 1e-13);
        assert!((c.coeff([-1, 0, 0]) - 0.5).norm() < 1e-13);
        let others = g
            .modes()
            .filter(|m| m.m != [1, 0, 0])
            .map(|m| c.data()[m.index].norm())
            .fold(0.0_f64, f64::max);
        assert!(others < 1e-13);
    }
}

#[test]
fn forward_matches_naive_dft() {
    let g = grid(8, 3.0);
    for seed in 0..3 {
        let f = random_real(g.spec(), seed);
        let fast = g.forward(&f);
        let slow = oracle::naive_dft(&f).unwrap();
        assert!(cmax_diff(fast.data(), slow.data()) <= 1e-12 * cmax(slow.data()));
    }
}

#[test]
fn inverse_of_zero_and_cosine() {
    let g = grid(16, 2.0);
    let z = g.inverse(&SpectralField::zeros(g.spec())).unwrap();
    assert!(z.data().iter().all(|v| *v == 0.0));

    let mut c = SpectralField::zeros(g.spec());
    c.data_mut()[g.spec().spectral_index(1, 0, 0)] = Complex64::new(0.5, 0.0);
    let f = g.inverse(&c).unwrap();
    let want = RealField::from_fn(g.spec(), |x, _, _| (2.0 * PI * x / 2.0).cos());
    assert!(max_diff(f.data(), want.data()) < 1e-12);
}

#[test]
fn inverse_matches_naive_idft() {
    let g = grid(8, 1.0);
    for seed in 10..13 {
        let c = g.forward(&random_real(g.spec(), seed));
        let fast = g.inverse(&c).unwrap();
        let slow = oracle::naive_idft(&c).unwrap();
        assert!(max_diff(fast.data(), slow.data()) < 1e-12 * slow.max_abs().max(1.0));
    }
}

#[test]
fn inverse_rejects_non_hermitian_input() {
    let g = grid(8, 1.0);
    let mut c = SpectralField::zeros(g.spec());
    c.data_mut()[g.spec().spectral_index(0, 1, 0)] = Complex64::new(0.0, 1.0);
    assert!(matches!(
        g.inverse(&c),
        Err(Error::HermitianViolation { .. })
    ));
}

#[test]
fn round_trip_is_identity() {
    for n in [8, 16, 32] {
        let g = grid(n, 5.0);
        let f = random_real(g.spec(), n as u64);
        let back = g.inverse(&g.forward(&f)).unwrap();
        let err = (&back - &f).norm_l2() / f.norm_l2();
        assert!(err < 1e-12, "n={n} err={err}");
    }
}

#[test]
fn derivative_of_constant_and_cosine() {
    let g = grid(16, 3.0);
    let one = RealField::from_fn(g.spec(), |_, _, _| 1.0);
    let d = g.derivative(&g.forward(&one), Axis::X);
    assert!(cmax(d.data()) == 0.0);

    let l = 3.0;
    let f = RealField::from_fn(g.spec(), |x, _, _| (2.0 * PI * x / l).cos());
    let d = g.inverse(&g.derivative(&g.forward(&f), Axis::X)).unwrap();
    let want = RealField::from_fn(g.spec(), |x, _, _| {
        -(2.0 * PI / l) * (2.0 * PI * x / l).sin()
    });
    assert!(max_diff(d.data(), want.data()) < 1e-12);
}

#[test]
fn derivative_matches_sixth_order_differences() {
    let mut errs = vec![];
    for n in [32, 64] {
        let g = grid(n, 2.0 * PI);
        // same smooth field on both grids: a fixed trigonometric polynomial
        let f = RealField::from_fn(g.spec(), |x, y, z| {
            (x + 0.3).sin() * (2.0 * y).cos()
                + 0.5 * (3.0 * z - 1.0).sin() * x.cos()
                + (2.0 * x + y).cos()
        });
        let fh = g.forward(&f);
        for axis in Axis::ALL {
            let spectral = g.inverse(&g.derivative(&fh, axis)).unwrap();
            let fd = oracle::fd6_derivative(&f, axis.index());
            let e = max_diff(spectral.data(), fd.data()) / spectral.max_abs();
            if n == 64 {
                errs.push(e);
            } else {
                errs.insert(0, e);
            }
        }
    }
    // last three are n = 64; leading error term (k h)⁶/140 with k = 3, h = 2π/64
    for e in &errs[3..] {
        assert!(*e < 1e-5, "{e}");
    }
    // sixth order: doubling n cuts the error by ~64
    let ratio = errs[0] / errs[5];
    assert!(ratio > 40.0, "ratio {ratio}");
}

#[test]
fn nyquist_derivative_is_zero() {
    let g = grid(8, 1.0);
    let f = RealField::from_fn(g.spec(), |x, _, _| (8.0 * PI * x).cos());
    let d = g.derivative(&g.forward(&f), Axis::X);
    assert!(cmax(d.data()) == 0.0);
}

#[test]
fn inverse_laplacian_eigenfunction() {
    let l = 4.0;
    let g = grid(16, l);
    let f = RealField::from_fn(g.spec(), |x, _, _| (2.0 * PI * x / l).cos());
    let u = g.inverse(&g.inverse_laplacian(&g.forward(&f))).unwrap();
    let scale = (l / (2.0 * PI)).powi(2);
    assert!(max_diff(u.data(), f.map(|v| v * scale).data()) < 1e-12);

    let zero = g.inverse_laplacian(&SpectralField::zeros(g.spec()));
    assert!(cmax(zero.data()) == 0.0);
}

#[test]
fn laplacian_inverts_inverse_laplacian_on_zero_mean() {
    let g = grid(16, 2.0);
    let mut f = g.forward(&random_real(g.spec(), 3));
    f.data_mut()[0] = Complex64::new(0.0, 0.0);
    let back = -&g.laplacian(&g.inverse_laplacian(&f));
    assert!(cmax_diff(back.data(), f.data()) < 1e-12 * cmax(f.data()));
}

#[test]
fn heat_semigroup() {
    let l = 2.0;
    let g = grid(16, l);
    let f = g.forward(&random_real(g.spec(), 4));
    assert_eq!(g.heat(&f, 0.0).unwrap(), f);
    assert!(matches!(g.heat(&f, -1.0), Err(Error::NegativeHeatTime(_))));

    let c = RealField::from_fn(g.spec(), |x, _, _| (2.0 * PI * x / l).cos());
    let decayed = g
        .inverse(&g.heat(&g.forward(&c), (l / (2.0 * PI)).powi(2)).unwrap())
        .unwrap();
    assert!(max_diff(decayed.data(), c.map(|v| v * (-1.0f64).exp()).data()) < 1e-12);

    let ab = g.heat(&g.heat(&f, 0.01).unwrap(), 0.02).unwrap();
    let direct = g.heat(&f, 0.03).unwrap();
    assert!(cmax_diff(ab.data(), direct.data()) < 1e-12 * cmax(f.data()));
}

#[test]
fn dealias_is_idempotent_and_keeps_low_modes() {
    let g = grid(16, 1.0);
    let f = g.forward(&random_real(g.spec(), 5));
    let once = g.dealias(&f);
    assert_eq!(g.dealias(&once), once);
    let low = random_smooth(&g, 6, g.spec().cutoff() as i64 - 1);
    assert_eq!(g.dealias(&low), low);
}

#[test]
fn dealiased_product_equals_truncated_exact_product() {
    let g = grid(8, 2.0 * PI);
    let cut = g.spec().cutoff() as i64;
    // single modes at the edge of the retained band
    let a = RealField::from_fn(g.spec(), |x, _, _| x.cos());
    let b = RealField::from_fn(g.spec(), |x, y, _| (x + y).sin());
    let mut pairs = vec![(g.forward(&a), g.forward(&b))];
    pairs.push((random_smooth(&g, 7, cut - 1), random_smooth(&g, 8, cut - 1)));
    for (fa, fb) in pairs {
        let prod: Vec<f64> = {
            let ra = g.inverse(&fa).unwrap();
            let rb = g.inverse(&fb).unwrap();
            ra.data()
                .iter()
                .zip(rb.data())
                .map(|(x, y)| x * y)
                .collect()
        };
        let pseudo = g.dealias(&g.forward(&RealField::from_vec(g.spec(), prod).unwrap()));
        let exact = oracle::linear_convolution(&fa, &fb).unwrap();
        for m in g.modes() {
            let want = if g.retained(&m) {
                exact.get(m.m)
            } else {
                Complex64::new(0.0, 0.0)
            };
            assert!((pseudo.data()[m.index] - want).norm() < 1e-12, "{:?}", m.m);
        }
    }
}

#[test]
fn grid_product_matches_circular_convolution() {
    let g = grid(8, 1.0);
    let fa = g.forward(&random_real(g.spec(), 20));
    let fb = g.forward(&random_real(g.spec(), 21));
    let ra = g.inverse(&fa).unwrap();
    let rb = g.inverse(&fb).unwrap();
    let prod: Vec<f64> = ra
        .data()
        .iter()
        .zip(rb.data())
        .map(|(x, y)| x * y)
        .collect();
    let pseudo = oracle::full_spectrum(&g.forward(&RealField::from_vec(g.spec(), prod).unwrap()));
    let conv = oracle::naive_convolution(&fa, &fb).unwrap();
    assert!(cmax_diff(&pseudo, &conv) < 1e-12 * cmax(&conv));
}

#[test]
fn tail_fraction_counts_complete_top_shells() {
    let g = grid(32, 2.0 * PI);
    assert_eq!(g.spec().cutoff(), 10);
    let spec = g.spec();
    let with_modes = |modes: &[[usize; 3]]| {
        let mut t = SpectralTensor::zeros(spec);
        for &[x, y, z] in modes {
            t.c[1].data_mut()[spec.spectral_index(x, y, z)] = Complex64::new(1.0, 0.0);
        }
        t
    };
    assert_eq!(g.tail_fraction(&SpectralTensor::zeros(spec), 0.125), 0.0);
    assert_eq!(g.tail_fraction(&with_modes(&[[9, 0, 0]]), 0.125), 1.0);
    // |m| = 8.54 rounds into shell 9
    assert_eq!(g.tail_fraction(&with_modes(&[[8, 3, 0]]), 0.125), 1.0);
    assert_eq!(g.tail_fraction(&with_modes(&[[8, 0, 0]]), 0.125), 0.0);
    // corner mode, shell 12, beyond the complete shells
    assert_eq!(g.tail_fraction(&with_modes(&[[7, 7, 7]]), 0.125), 0.0);
    assert!((g.tail_fraction(&with_modes(&[[10, 0, 0], [1, 0, 0]]), 0.125) - 0.5).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn parseval(seed in any::<u64>(), which in 0usize..3) {
        let n = [8, 16, 32][which];
        let g = grid(n, 1.7);
        let f = random_real(g.spec(), seed);
        let c = g.forward(&f);
        prop_assert!(rel(c.norm_l2(), f.norm_l2()) < 1e-12);
    }

    #[test]
    fn operators_are_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let g = grid(16, 2.5);
        let f = g.forward(&random_real(g.spec(), seed));
        let h = g.forward(&random_real(g.spec(), seed.wrapping_add(1)));
        let mut comb = &f * a;
        comb.axpy(b, &h);
        let ops: Vec<Box<dyn Fn(&SpectralField) -> SpectralField>> = vec![
            Box::new(|x| g.derivative(x, Axis::Y)),
            Box::new(|x| g.inverse_laplacian(x)),
            Box::new(|x| g.heat(x, 0.05).unwrap()),
            Box::new(|x| g.dealias(x)),
        ];
        for op in ops {
            let lhs = op(&comb);
            let mut rhs = &op(&f) * a;
            rhs.axpy(b, &op(&h));
            let scale = cmax(lhs.data()).max(cmax(rhs.data())).max(1e-300);
            prop_assert!(cmax_diff(lhs.data(), rhs.data()) < 1e-12 * scale.max(cmax(f.data())));
        }
    }

    #[test]
    fn inverse_output_is_real(seed in any::<u64>()) {
        let g = grid(16, 1.0);
        let f = random_real(g.spec(), seed);
        let c = g.forward(&f);
        prop_assert!(g.hermitian_residual(&c) < 1e-12);
        let back = g.inverse(&c).unwrap();
        prop_assert!((&back - &f).max_abs() <= 1e-12 * f.rms());
    }

    #[test]
    fn derivative_is_antisymmetric(seed in any::<u64>(), axis in 0usize..3) {
        let g = grid(16, 3.0);
        let ax = Axis::ALL[axis];
        let f = g.forward(&random_real(g.spec(), seed));
        let h = g.forward(&random_real(g.spec(), seed ^ 0xabc));
        let lhs = g.derivative(&f, ax).inner(&h);
        let rhs = -f.inner(&g.derivative(&h, ax));
        let scale = g.derivative(&f, ax).norm_l2() * h.norm_l2();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * scale);
    }
}
