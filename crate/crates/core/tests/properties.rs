use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use mhdlab::grid::{lp_project, make_grid, vector_l2, Projection, SpectralField, Weight};
use mhdlab::kernel::{kernel_values, sinch, KernelValues, SpectralPoint};
use mhdlab::linear::{apply4, semigroup_matrix, Mat4};

fn field(seed_vals: &[f64], n: usize, l: f64) -> SpectralField {
    let g = make_grid(n, n, l, l).unwrap();
    SpectralField::from_physical(g, seed_vals)
}

fn mat_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut m = [[Complex64::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    m
}

fn mat_norm(a: &Mat4) -> f64 {
    a.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Whether the kernel takes the separated-branch path at this point.
fn separated(t: f64, xi: f64, eta: f64) -> bool {
    let p = SpectralPoint::new(xi, eta);
    let sq = |z: f64| Complex64::new(z, 0.0).sqrt();
    if p.c == 0.0 || (p.zp * t * t).abs().max((p.zm * t * t).abs()) <= 4.0 {
        return false;
    }
    let s = sq(p.zp) + sq(p.zm);
    s.norm() == 0.0 || (t * 2.0 * p.c / s).norm() > 1.0
}

fn fields(k: &KernelValues) -> [f64; 9] {
    [k.k, k.k1, k.dt_k, k.ddt_k, k.comp, k.comp_x, k.dt_comp, k.ddt_comp, k.dt_comp_x]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval(vals in prop::collection::vec(-1.0f64..1.0, 16 * 16), l in 1.0f64..20.0) {
        let f = field(&vals, 16, l);
        let h = l / 16.0;
        let direct: f64 = vals.iter().map(|v| v * v).sum::<f64>() * h * h;
        prop_assert!((f.l2_sq() - direct).abs() <= 1e-12 * direct.max(1e-300));
        let back = f.to_physical();
        let err = back.iter().zip(&vals).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-13);
    }

    #[test]
    fn bernstein_for_band_pieces(vals in prop::collection::vec(-1.0f64..1.0, 32 * 32), n in 0.5f64..6.0) {
        let f = field(&vals, 32, 4.0 * PI);
        let p = lp_project(&f, n, Projection::Band);
        let base = p.l2_sq().sqrt();
        prop_assume!(base > 0.0);
        let grad = vector_l2(&[&p.dx(), &p.dy()], Weight::Homogeneous(0.0)).unwrap();
        prop_assert!(grad <= n * (1.0 + 2e-4) * base * (1.0 + 1e-12));
        prop_assert!(grad >= 0.5 * n * base * (1.0 - 1e-12));
    }

    #[test]
    fn multipliers_commute(vals in prop::collection::vec(-1.0f64..1.0, 16 * 16), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let f = field(&vals, 16, 2.0 * PI);
        let m1 = move |x: f64, y: f64| 1.0 + a * x * x - b * y;
        let m2 = move |x: f64, y: f64| (a * x).cos() + b * x * y;
        let l = f.scaled_by(m1).unwrap().scaled_by(m2).unwrap().dx();
        let r = f.dx().scaled_by(m2).unwrap().scaled_by(m1).unwrap();
        let scale = l.coeffs.iter().map(|z| z.norm()).fold(1e-300, f64::max);
        let d = l.coeffs.iter().zip(&r.coeffs).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(d <= 1e-14 * scale);
    }

    #[test]
    fn semigroup_law(xi in -8.0f64..8.0, eta in -8.0f64..8.0, t in 0.0f64..5.0, s in 0.0f64..5.0) {
        let lhs = semigroup_matrix(t + s, xi, eta);
        let rhs = mat_mul(&semigroup_matrix(t, xi, eta), &semigroup_matrix(s, xi, eta));
        let d: Mat4 = std::array::from_fn(|i| std::array::from_fn(|j| lhs[i][j] - rhs[i][j]));
        prop_assert!(mat_norm(&d) <= 1e-10 * (1.0 + mat_norm(&lhs)), "{:e}", mat_norm(&d));
    }

    #[test]
    fn flow_at_zero_is_identity(xi in -8.0f64..8.0, eta in -8.0f64..8.0, re in -1.0f64..1.0) {
        let u = [Complex64::new(re, 0.5), Complex64::new(0.0, re), Complex64::new(1.0, 0.0), Complex64::new(-re, re)];
        let v = apply4(&semigroup_matrix(0.0, xi, eta), &u);
        for (a, b) in u.iter().zip(&v) {
            prop_assert!((a - b).norm() <= 1e-15);
        }
    }

    #[test]
    fn dt_comp_identity(lt in -3.0f64..3.0, lx in -8.0f64..1.0, ly in -8.0f64..1.0, sx in any::<bool>()) {
        let (t, xi, eta) = (10f64.powf(lt), 10f64.powf(lx) * if sx { -1.0 } else { 1.0 }, 10f64.powf(ly));
        let k = kernel_values(t, xi, eta);
        let a2 = xi * xi + eta * eta;
        let scale = 0.5 * a2 * k.comp.abs() + k.k1.abs();
        prop_assert!((k.dt_comp - (k.k1 - 0.5 * a2 * k.comp)).abs() <= 1e-10 * scale.max(1e-300), "{k:?}");
    }

    #[test]
    fn kernel_continuous_across_regimes(lt in -1.0f64..3.0, eta in 0.05f64..4.0) {
        let t = 10f64.powf(lt);
        let (mut lo, mut hi) = (1e-9f64, 10.0f64);
        prop_assume!(separated(t, lo, eta) != separated(t, hi, eta));
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if separated(t, mid, eta) == separated(t, lo, eta) { lo = mid } else { hi = mid }
        }
        // Four points straddling the switch; the middle increment crosses it.
        let h = 1e-7 * hi;
        let xs = [lo - h, lo, hi, hi + h];
        let vs: Vec<[f64; 9]> = xs.iter().map(|&x| fields(&kernel_values(t, x, eta))).collect();
        for q in 0..9 {
            let v: Vec<f64> = vs.iter().map(|r| r[q]).collect();
            let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let inc = |i: usize| (v[i + 1] - v[i]).abs();
            let side = inc(0).max(inc(2)) * (hi - lo + h) / h;
            prop_assert!(inc(1) <= 10.0 * side + 1e-10 * scale, "field {q}: {v:?}");
        }
    }

    #[test]
    fn sinch_series_switch_is_continuous(t in 0.01f64..100.0, sign in prop::sample::select(vec![-1.0f64, 1.0])) {
        let z0 = sign * 1e-2 / (t * t);
        let a = sinch(z0 * (1.0 - 1e-12), t);
        let b = sinch(z0 * (1.0 + 1e-12), t);
        prop_assert!((a - b).abs() <= 1e-14 * a.abs());
    }
}
