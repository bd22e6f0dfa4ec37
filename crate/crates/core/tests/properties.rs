use cyclic_cm::canonical::{act_all, act_particle, canonicalize, omega, orbit_distance, theta_closed};
use cyclic_cm::curves::{closed_curve, coefficient_distance};
use cyclic_cm::kernel::{char_poly, determinant, eigenvalues, lagrange_interp, lu_solve, poly_roots};
use cyclic_cm::model::{build_dual, build_qmodel, case_rng, sample_coupling, sample_point, sample_qpoint};
use cyclic_cm::{CMatrix, Coupling, DensePoly, SpectralPoint, SpinFraming, Tolerances, C64};
use proptest::prelude::*;

fn cx() -> impl Strategy<Value = C64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn square(max: usize) -> impl Strategy<Value = CMatrix> {
    (1..=max).prop_flat_map(|n| {
        prop::collection::vec(cx(), n * n).prop_map(move |v| CMatrix::from_fn(n, n, |r, c| v[r * n + c]))
    })
}

fn pair(max: usize) -> impl Strategy<Value = (CMatrix, CMatrix)> {
    (1..=max).prop_flat_map(|n| {
        (prop::collection::vec(cx(), n * n), prop::collection::vec(cx(), n * n)).prop_map(move |(a, b)| {
            (
                CMatrix::from_fn(n, n, |r, c| a[r * n + c]),
                CMatrix::from_fn(n, n, |r, c| b[r * n + c]),
            )
        })
    })
}

/// Seeded random case: point, framing, coupling.
fn case(seed: u64, m: usize, n: usize, d: usize) -> (SpectralPoint, Option<SpinFraming>, Coupling) {
    let mut rng = case_rng(seed, 0);
    let k = sample_coupling(&mut rng, m, 1e-10).unwrap();
    let (pt, fr) = sample_point(&mut rng, m, n, &k, d).unwrap();
    (pt, fr, k)
}

fn poly_scale(z: C64, n: usize) -> f64 {
    (1.0 + z.norm()).powi(n as i32)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn determinant_is_multiplicative((a, b) in pair(6)) {
        let tol = Tolerances::default();
        let ab = &a * &b;
        let lhs = determinant(&ab, tol.pivot_rel).unwrap();
        let rhs = determinant(&a, tol.pivot_rel).unwrap() * determinant(&b, tol.pivot_rel).unwrap();
        let scale = a.norm_fro().powi(a.rows() as i32) * b.norm_fro().powi(b.rows() as i32);
        prop_assert!((lhs - rhs).norm() <= 1e-11 * scale.max(1.0));
    }

    #[test]
    fn char_poly_matches_determinant(a in square(6), z in cx()) {
        let tol = Tolerances::default();
        let p = DensePoly::new(char_poly(&a).unwrap());
        let shifted = &CMatrix::identity(a.rows()).scale(z) - &a;
        let det = determinant(&shifted, tol.pivot_rel).unwrap();
        let scale = poly_scale(z, a.rows()) * (1.0 + a.norm_fro()).powi(a.rows() as i32);
        prop_assert!((p.eval(z) - det).norm() <= 1e-11 * scale);
        prop_assert_eq!(p.degree(), Some(a.rows()));
    }

    #[test]
    fn lu_solve_has_small_residual(a in square(8)) {
        let tol = Tolerances::default();
        let n = a.rows();
        let b = CMatrix::from_fn(n, 1, |r, _| C64::new(r as f64 + 1.0, -0.5));
        if let Ok(x) = lu_solve(&a, &b, tol.pivot_rel) {
            let r = &(&a * &x) - &b;
            prop_assert!(r.norm_max() <= 1e-9 * (1.0 + a.norm_fro() * x.norm_fro()));
        }
    }

    #[test]
    fn roots_rebuild_the_polynomial(roots in prop::collection::vec(cx(), 1..8)) {
        let p = DensePoly::from_roots(&roots);
        let found = poly_roots(&p, 1e-13, 500).unwrap();
        let rebuilt = DensePoly::from_roots(&found);
        for k in 0..=roots.len() {
            prop_assert!((p.coeff(k) - rebuilt.coeff(k)).norm() <= 1e-8 * p.max_abs().max(1.0));
        }
    }

    #[test]
    fn eigenvalues_are_roots_of_char_poly(a in square(5)) {
        let tol = Tolerances::default();
        let p = DensePoly::new(char_poly(&a).unwrap());
        if let Ok(ev) = eigenvalues(&a, tol.root_rel, tol.root_max_iter, tol.pivot_rel) {
            prop_assert_eq!(ev.len(), a.rows());
            for z in ev {
                prop_assert!(p.eval(z).norm() <= 1e-8 * p.eval_abs(z.norm()).max(1.0));
            }
        }
    }

    #[test]
    fn interpolation_reproduces_polynomials(coeffs in prop::collection::vec(cx(), 1..8)) {
        let tol = Tolerances::default();
        let p = DensePoly::new(coeffs.clone());
        let n = coeffs.len();
        let nodes: Vec<C64> = (0..n)
            .map(|k| C64::from_polar(1.0, std::f64::consts::TAU * (k as f64 + 0.5) / n as f64))
            .collect();
        let values: Vec<C64> = nodes.iter().map(|&z| p.eval(z)).collect();
        let q = lagrange_interp(&nodes, &values, tol.node_gap_rel, tol.pivot_rel).unwrap();
        for k in 0..n {
            prop_assert!((p.coeff(k) - q.coeff(k)).norm() <= 1e-12 * p.max_abs().max(1.0));
        }
    }

    #[test]
    fn derived_constants_sum_to_zero(g in prop::collection::vec(cx(), 1..6)) {
        let k = Coupling::new(g).unwrap();
        let sum: C64 = k.cs().iter().sum();
        let scale: f64 = k.g().iter().map(|x| x.norm()).sum::<f64>().max(1.0);
        prop_assert!(sum.norm() <= 1e-14 * scale * k.m() as f64);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn json_roundtrip_is_exact(seed in any::<u64>(), m in 1..=4usize, n in 1..=4usize, d in 0..=2usize) {
        let (pt, fr, k) = case(seed, m, n, d);
        let quad = build_dual(&pt, &k, fr.as_ref(), 1e-9).unwrap();
        let qp = sample_qpoint(&mut case_rng(seed, 1), m, n).unwrap();

        let back: Coupling = serde_json::from_str(&serde_json::to_string(&k).unwrap()).unwrap();
        prop_assert_eq!(&back, &k);
        let back: SpectralPoint = serde_json::from_str(&serde_json::to_string(&pt).unwrap()).unwrap();
        prop_assert_eq!(&back, &pt);
        if let Some(fr) = &fr {
            let back: SpinFraming = serde_json::from_str(&serde_json::to_string(fr).unwrap()).unwrap();
            prop_assert_eq!(&back, fr);
        }
        let back: cyclic_cm::QModelPoint = serde_json::from_str(&serde_json::to_string(&qp).unwrap()).unwrap();
        prop_assert_eq!(&back, &qp);
        let back: cyclic_cm::Quadruple = serde_json::from_str(&serde_json::to_string(&quad).unwrap()).unwrap();
        prop_assert_eq!(&back, &quad);
    }

    #[test]
    fn builders_satisfy_the_constraint(seed in any::<u64>(), m in 1..=4usize, n in 1..=5usize, d in 0..=3usize) {
        let (pt, fr, k) = case(seed, m, n, d);
        let quad = build_dual(&pt, &k, fr.as_ref(), 1e-9).unwrap();
        prop_assert!(quad.moment_residual(&k) <= 1e-10);
        prop_assert!(quad.off_pattern() == 0.0);
        let qp = sample_qpoint(&mut case_rng(seed, 2), m, n).unwrap();
        let qq = build_qmodel(&qp, &k, 1e-9).unwrap();
        prop_assert!(qq.moment_residual(&k) <= 1e-10);
        prop_assert_eq!(quad.convention, cyclic_cm::Convention::ADOPTED);
    }

    #[test]
    fn canonicalize_is_idempotent(seed in any::<u64>(), m in 1..=4usize, n in 1..=5usize, d in 0..=2usize, j in 0..5usize, k in -3..=3i64) {
        let (pt, fr, _) = case(seed, m, n, d);
        let once = canonicalize(&pt, fr.as_ref());
        let twice = canonicalize(&once.point, once.framing.as_ref());
        prop_assert_eq!(&once, &twice);
        prop_assert!(orbit_distance(&once.point, &pt) <= 1e-12);

        let mut moved = pt.clone();
        let mut moved_fr = fr.clone();
        act_particle(&mut moved, moved_fr.as_mut(), j % n, k);
        let again = canonicalize(&moved, moved_fr.as_ref());
        prop_assert!(orbit_distance(&again.point, &once.point) <= 1e-12);
    }

    #[test]
    fn theta_rotates_under_the_cyclic_action(seed in any::<u64>(), m in 1..=4usize, n in 1..=4usize, d in 0..=2usize) {
        let (pt, fr, k) = case(seed, m, n, d);
        let theta = theta_closed(&pt, &k, fr.as_ref());
        let (p2, f2) = act_all(&pt, fr.as_ref(), 1);
        let moved = theta_closed(&p2, &k, f2.as_ref());
        let w = omega(m);
        for (a, b) in theta.iter().zip(&moved) {
            prop_assert!((b - a / w).norm() <= 1e-9 * a.norm().max(1.0));
        }
    }

    #[test]
    fn closed_curves_are_invariant(seed in any::<u64>(), m in 1..=4usize, n in 1..=4usize, d in 0..=2usize, delta in 1..=2u8) {
        let (pt, fr, k) = case(seed, m, n, d);
        let base = closed_curve(&pt, &k, fr.as_ref(), delta).unwrap();
        let (p2, f2) = act_all(&pt, fr.as_ref(), 1);
        let moved = closed_curve(&p2, &k, f2.as_ref(), delta).unwrap();
        prop_assert!(coefficient_distance(&base, &moved) <= 1e-9);
    }
}
