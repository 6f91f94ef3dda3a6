use proptest::prelude::*;
use tmodes_core::analytic::{classify_regime, mean_na};
use tmodes_core::ensemble::{Moments, SimParams};
use tmodes_core::matprop::{compose, conjugate_density, propagator, Complex2x2, Su2};
use tmodes_core::renewal::{max_step, solve_populations};
use tmodes_core::telegraph::NoiseParams;
use tmodes_core::{Complex64, RelaxationParams};

fn eigenvalues(rho: &Complex2x2) -> (f64, f64) {
    let p = rho.e11.re;
    let q = rho.e22.re;
    let root = ((p - q).powi(2) + 4.0 * rho.e12.norm_sqr()).sqrt();
    (0.5 * (p + q - root), 0.5 * (p + q + root))
}

fn density() -> impl Strategy<Value = Complex2x2> {
    (0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(p, frac, arg)| {
        let bound = (p * (1.0 - p)).sqrt();
        Complex2x2::hermitian(p, 1.0 - p, Complex64::from_polar(frac * bound, arg))
    })
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn propagator_structure(g0 in 0.0f64..10.0, phi in 0.0f64..std::f64::consts::TAU, dt in 0.0f64..10.0) {
        let u = propagator(g0, phi, dt).unwrap();
        let m = u.matrix();
        let (s, c) = (g0 * dt).sin_cos();
        prop_assert!((m.e11 - c).norm() <= 1e-12);
        prop_assert!((m.e22 - c).norm() <= 1e-12);
        prop_assert!((m.e12 * m.e21 + s * s).norm() <= 1e-12);
        prop_assert!((m.e12 + m.e21.conj()).norm() <= 1e-12);
        prop_assert!((m.e12 * m.e21.conj() + Complex64::from_polar(s * s, 2.0 * phi)).norm() <= 1e-12);
        prop_assert!(m.unitarity_defect() <= 1e-12);
    }

    #[test]
    fn composition_is_associative(
        angles in proptest::collection::vec((0.0f64..5.0, 0.0f64..std::f64::consts::TAU, 0.0f64..3.0), 3)
    ) {
        let us: Vec<_> = angles.iter().map(|&(g, p, t)| propagator(g, p, t).unwrap()).collect();
        let left = compose(&compose(&us[2], &us[1]).unwrap(), &us[0]).unwrap();
        let right = compose(&us[2], &compose(&us[1], &us[0]).unwrap()).unwrap();
        prop_assert!(left.matrix().max_abs_diff(right.matrix()) <= 1e-12);
    }

    #[test]
    fn cayley_klein_product_matches_matrix_product(
        a in (0.0f64..5.0, 0.0f64..std::f64::consts::TAU), b in (0.0f64..5.0, 0.0f64..std::f64::consts::TAU)
    ) {
        let first = Su2::segment(a.0, a.1);
        let second = Su2::segment(b.0, b.1);
        let via_pairs = first.then(second).to_matrix();
        let via_matrices = second.to_matrix() * first.to_matrix();
        prop_assert!(via_pairs.max_abs_diff(&via_matrices) <= 1e-14);
    }

    #[test]
    fn conjugation_preserves_spectrum(
        rho in density(), g0 in 0.0f64..4.0, phi in 0.0f64..std::f64::consts::TAU, dt in 0.0f64..4.0
    ) {
        let u = propagator(g0, phi, dt).unwrap();
        let out = conjugate_density(&u, &rho).unwrap();
        prop_assert!((out.trace() - rho.trace()).norm() <= 1e-12);
        prop_assert!(out.hermiticity_defect() <= 1e-12);
        let (l0, l1) = eigenvalues(&rho);
        let (m0, m1) = eigenvalues(&out);
        prop_assert!((l0 - m0).abs() <= 1e-10 && (l1 - m1).abs() <= 1e-10);
    }

    #[test]
    fn occupation_stays_within_bounds(
        log_g0tau0 in -5.0f64..5.0, na0 in 0.0f64..5.0, nb0 in 0.0f64..5.0, t in 0.0f64..200.0
    ) {
        let p = RelaxationParams::new(1.0, 10f64.powf(log_g0tau0), na0, nb0).unwrap();
        let n = mean_na(t, &p).unwrap();
        let total = na0 + nb0;
        prop_assert!(n >= -1e-12 * total.max(1.0) && n <= total * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn occupation_is_continuous_in_coupling(g0tau0 in 0.01f64..20.0, t in 0.0f64..40.0) {
        let nearby = |x: f64| mean_na(t, &RelaxationParams::new(1.0, x, 0.0, 2.0).unwrap()).unwrap();
        let gap = (nearby(g0tau0 * (1.0 + 1e-9)) - nearby(g0tau0 * (1.0 - 1e-9))).abs();
        // dn/d(g0τ0) is bounded by a few multiples of t over the tested range.
        prop_assert!(gap <= 1e-9 * g0tau0 * (10.0 + 10.0 * t) / g0tau0.min(1.0), "gap {gap}");
    }

    #[test]
    fn regime_label_is_monotone(x in 0.001f64..100.0, y in 0.001f64..100.0) {
        let (lo, hi) = if x < y { (x, y) } else { (y, x) };
        let rank = |v: f64| classify_regime(1.0, v).unwrap().signed_omega().signum();
        prop_assert!(rank(lo) <= rank(hi));
    }

    #[test]
    fn renewal_preserves_trace(
        g0 in 0.2f64..3.0, tau0 in 0.1f64..5.0, na0 in 0.0f64..2.0, nb0 in 0.0f64..2.0
    ) {
        let sim = SimParams::new(g0, tau0, na0, nb0, vec![0.0, 1.0], 2, 0).unwrap();
        let h = max_step(g0, tau0);
        let grid = solve_populations(&sim, h, 300).unwrap();
        for (a, b) in grid.rho11.iter().zip(&grid.rho22) {
            prop_assert!((a + b - na0 - nb0).abs() <= 1e-9);
        }
    }

    #[test]
    fn segments_tile_the_horizon(tau0 in 0.01f64..2.0, horizon in 0.1f64..20.0, seed: u64, index: u64) {
        let traj = NoiseParams::new(tau0, seed).unwrap().trajectory(index, horizon).unwrap();
        let mut t = 0.0;
        for seg in traj.segments() {
            prop_assert_eq!(seg.start, t);
            prop_assert!(seg.end > seg.start);
            t = seg.end;
        }
        prop_assert_eq!(t, horizon);
    }

    #[test]
    fn merged_moments_match_sequential(xs in proptest::collection::vec(-10.0f64..10.0, 2..200), cut in 0usize..200) {
        let cut = cut.min(xs.len());
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let (mut left, mut right) = (Moments::default(), Moments::default());
        xs[..cut].iter().for_each(|&x| left.push(x));
        xs[cut..].iter().for_each(|&x| right.push(x));
        left.merge(&right);
        prop_assert_eq!(left.count, whole.count);
        prop_assert!((left.mean - whole.mean).abs() <= 1e-12);
        prop_assert!((left.variance() - whole.variance()).abs() <= 1e-10 * whole.variance().max(1.0));
    }
}
