//! Cross-checks of the closed form, the Laplace route and the renewal solver
//! against each other and against oracles written independently here.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tmodes_core::analytic::{
    classify_regime, effective_rate, mean_na, polariton_na, scr_na, wcr_na, DampingParams,
    RegimeKind,
};
use tmodes_core::ensemble::{uniform_grid, SimParams};
use tmodes_core::laplace::{
    f_hat, f_hat_from_kernels, invert_with, kernel_transforms, mean_na_numeric, order_profile,
    pole_expansion, unwrap_na, InversionOptions,
};
use tmodes_core::matprop::Complex2x2;
use tmodes_core::renewal::{
    g_matrices, g_matrices_mc, residual_check, residual_check_fn, solve_coherence,
    solve_populations,
};
use tmodes_core::{ensemble::TimeSeries, Complex64, RelaxationParams};

fn params(g0: f64, tau0: f64, na0: f64, nb0: f64) -> RelaxationParams {
    RelaxationParams::new(g0, tau0, na0, nb0).unwrap()
}

/// `z = n_a − N/2` obeys `z'' + z'/τ0 + 4g0² z = 0` with `z'(0) = 0`.
/// Classical RK4 on that system, sampled at multiples of `step`.
fn ode_oracle(p: &RelaxationParams, t_end: f64, step: f64) -> Vec<(f64, f64)> {
    let half_n = 0.5 * p.n_total();
    let k2 = 4.0 * p.g0 * p.g0;
    let damp = 1.0 / p.tau0;
    let rhs = |z: f64, v: f64| (v, -damp * v - k2 * z);
    let n = (t_end / step).round() as usize;
    let (mut z, mut v) = (p.na0 - half_n, 0.0);
    let mut out = vec![(0.0, p.na0)];
    for i in 1..=n {
        let (a1, b1) = rhs(z, v);
        let (a2, b2) = rhs(z + 0.5 * step * a1, v + 0.5 * step * b1);
        let (a3, b3) = rhs(z + 0.5 * step * a2, v + 0.5 * step * b2);
        let (a4, b4) = rhs(z + step * a3, v + step * b3);
        z += step / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        v += step / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        out.push((i as f64 * step, z + half_n));
    }
    out
}

#[test]
fn closed_form_matches_ode_oracle_in_every_regime() {
    for &(g0tau0, na0, nb0) in &[
        (10.0, 0.0, 2.0),
        (1.0, 1.5, 0.5),
        (0.25, 0.0, 2.0),
        (0.05, 2.0, 0.0),
        (0.01, 0.3, 0.7),
    ] {
        let p = params(1.0, g0tau0, na0, nb0);
        for (t, expected) in ode_oracle(&p, 20.0, 1e-3).into_iter().step_by(97) {
            let got = mean_na(t, &p).unwrap();
            assert!(
                (got - expected).abs() < 1e-9,
                "g0tau0={g0tau0} t={t}: {got} vs {expected}"
            );
        }
    }
}

#[test]
fn closed_form_matches_laplace_oracle() {
    let p = params(1.0, 1.0, 0.0, 2.0);
    for t in [0.5, 1.0, 2.0] {
        let inv = mean_na_numeric(t, &p, 24).unwrap();
        let exact = mean_na(t, &p).unwrap();
        assert!((inv.value - exact).abs() <= 1e-6, "t={t}");
        assert!(inv.converged);
    }
    for &(g0tau0, na0) in &[(10.0, 0.0), (0.05, 2.0), (0.3, 1.0)] {
        let p = params(1.0, g0tau0, na0, 2.0 - na0);
        for t in [0.25, 1.0, 3.0] {
            let inv = mean_na_numeric(t, &p, 32).unwrap();
            let exact = mean_na(t, &p).unwrap();
            assert!((inv.value - exact).abs() <= 1e-6, "g0tau0={g0tau0} t={t}");
        }
    }
}

#[test]
fn kernel_form_and_simplified_transform_agree() {
    let p = params(0.7, 1.3, 0.4, 1.1);
    for s in [
        Complex64::new(2.0, 0.0),
        Complex64::new(1.5, 3.0),
        Complex64::new(5.0, -0.5),
        Complex64::new(-0.5, 2.0),
    ] {
        let a = f_hat(s, &p).unwrap();
        let b = f_hat_from_kernels(s, &p).unwrap();
        assert!((a - b).norm() < 1e-13 * a.norm().max(1.0), "s={s}");
    }
}

#[test]
fn kernel_transforms_invert_to_their_kernels() {
    let (g0, tau0) = (1.0, 10.0);
    let opts = InversionOptions::new(48).abscissa(1.0 / tau0);
    let invert = |pick: fn(&tmodes_core::laplace::KernelTransforms) -> Complex64, t: f64| {
        invert_with(|s| pick(&kernel_transforms(s, g0, tau0).unwrap()), t, &opts)
            .unwrap()
            .value
    };
    for k in 1..=100 {
        let t = 0.1 * k as f64;
        assert!((invert(|k| k.g, t) - (2.0 * g0 * t).cos()).abs() <= 1e-7, "g at {t}");
        assert!((invert(|k| k.h, t) - (t / tau0).exp()).abs() <= 1e-7, "h at {t}");
        assert!((invert(|k| k.j, t) - (g0 * t).sin().powi(2)).abs() <= 1e-7, "j at {t}");
    }
}

#[test]
fn inversion_settles_as_order_grows() {
    let p = params(1.0, 1.0, 0.0, 2.0);
    let opts = InversionOptions::new(8).abscissa(1.0);
    let values = order_profile(
        |s| f_hat(s, &p).unwrap(),
        1.5,
        &[8, 12, 16, 20, 24],
        &opts,
    )
    .unwrap();
    let exact = mean_na(1.5, &p).unwrap();
    let errors: Vec<f64> = values
        .iter()
        .map(|v| (unwrap_na(*v, 1.5, 1.0) - exact).abs())
        .collect();
    for w in errors.windows(2) {
        assert!(w[1] < w[0] || w[1] < 1e-11, "{errors:?}");
    }
    assert!(errors[4] < 1e-9);
}

#[test]
fn pole_expansion_reproduces_closed_form() {
    for &(g0tau0, na0) in &[(3.0, 0.0), (1.0, 1.2), (0.1, 0.0), (0.2, 2.0)] {
        let p = params(1.0, g0tau0, na0, 2.0 - na0);
        let poles = pole_expansion(&p).unwrap();
        let a = 0.5 / g0tau0;
        let w = classify_regime(1.0, g0tau0).unwrap().omega_sq;
        assert!(poles.poles.iter().any(|q| (q - Complex64::new(2.0 * a, 0.0)).norm() < 1e-12));
        let expected_pair = Complex64::new(w, 0.0).sqrt() * Complex64::i();
        assert!(poles
            .poles
            .iter()
            .any(|q| (q - (a + expected_pair)).norm() < 1e-12));
        for k in 0..=40 {
            let t = 0.25 * k as f64;
            let via_poles = unwrap_na(poles.inverse(t), t, g0tau0);
            let exact = mean_na(t, &p).unwrap();
            assert!((via_poles - exact).abs() <= 1e-12 * p.n_total().max(1.0), "t={t}");
        }
        let s = Complex64::new(7.0, 1.5);
        assert!((poles.transform(s) - f_hat(s, &p).unwrap()).norm() < 1e-12);
    }
    assert!(pole_expansion(&params(1.0, 0.25, 0.0, 2.0)).is_err());
}

fn unit_populations(g0: f64, tau0: f64) -> SimParams {
    SimParams::new(g0, tau0, 0.0, 1.0, vec![0.0, 1.0], 2, 0).unwrap()
}

fn renewal_error(g0: f64, tau0: f64, h: f64, t_max: f64) -> f64 {
    let sim = unit_populations(g0, tau0);
    let n = (t_max / h).round() as usize;
    let grid = solve_populations(&sim, h, n).unwrap();
    let p = params(g0, tau0, 0.0, 1.0);
    grid.times()
        .iter()
        .zip(&grid.rho11)
        .map(|(&t, &x)| (x - mean_na(t, &p).unwrap()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn renewal_solver_converges_at_second_order() {
    for &g0tau0 in &[1.0, 4.0, 0.1] {
        let (g0, tau0): (f64, f64) = (1.0, g0tau0);
        let h = tau0.min(1.0 / g0) / 40.0;
        let coarse = renewal_error(g0, tau0, h, 20.0);
        let fine = renewal_error(g0, tau0, h / 2.0, 20.0);
        assert!(coarse <= 1e-3, "g0tau0={g0tau0}: error {coarse}");
        let ratio = coarse / fine;
        assert!((3.5..=4.5).contains(&ratio), "g0tau0={g0tau0}: ratio {ratio}");
    }
}

#[test]
fn renewal_conserves_trace() {
    let sim = SimParams::new(1.3, 0.4, 0.2, 1.7, vec![0.0, 1.0], 2, 0).unwrap();
    let grid = solve_populations(&sim, 0.01, 2000).unwrap();
    for (a, b) in grid.rho11.iter().zip(&grid.rho22) {
        assert!((a + b - 1.9).abs() <= 1e-9);
    }
}

#[test]
fn renewal_without_noise_is_coherent_exchange() {
    let g0 = 1.0;
    let sim = unit_populations(g0, 1e9);
    let grid = solve_populations(&sim, 0.01, 2000).unwrap();
    for (t, x) in grid.times().iter().zip(&grid.rho11) {
        assert!((x - (g0 * t).sin().powi(2)).abs() <= 1e-4, "t={t}");
    }
}

#[test]
fn coherence_decays_like_the_averaged_propagator() {
    // Only the cos² kernel feeds back, so ρ̄12 obeys the scalar renewal
    // equation; its Laplace transform is ρ12(0) c(s + 1/τ0) / (1 − c(s + 1/τ0)/τ0)
    // with c(s) = L[cos²(g0 t)] = (s² + 2g0²)/(s(s² + 4g0²)).
    let (g0, tau0) = (1.0, 0.7);
    let rho12 = Complex64::new(0.3, -0.2);
    let sim = SimParams::new(g0, tau0, 0.5, 0.5, vec![0.0, 1.0], 2, 0)
        .unwrap()
        .with_rho0(Complex2x2::hermitian(0.5, 0.5, rho12))
        .unwrap();
    let h = tau0.min(1.0 / g0) / 80.0;
    let grid = solve_coherence(&sim, h, (10.0 / h) as usize).unwrap();
    let c = |s: Complex64| (s * s + 2.0 * g0 * g0) / (s * (s * s + 4.0 * g0 * g0));
    let transform = |s: Complex64| {
        let shifted = c(s + 1.0 / tau0);
        shifted / (1.0 - shifted / tau0)
    };
    let opts = InversionOptions::new(32);
    for k in [40usize, 200, 800] {
        let t = k as f64 * h;
        let expected = invert_with(transform, t, &opts).unwrap().value;
        let got = grid.rho12[k];
        assert!((got - rho12 * expected).norm() < 2e-4, "t={t}");
    }
}

#[test]
fn residual_vanishes_for_the_closed_form() {
    for &g0tau0 in &[10.0, 0.05, 1.0, 0.25] {
        let p = params(1.0, g0tau0, 0.0, 2.0);
        let times = uniform_grid(20.0, 81);
        let r = residual_check_fn(|t| mean_na(t, &p).unwrap(), &times, &p);
        assert!(r <= 1e-6 * p.n_total(), "g0tau0={g0tau0}: residual {r}");
    }
}

#[test]
fn residual_of_sampled_series() {
    let p = params(1.0, 2.0, 0.0, 2.0);
    let times = uniform_grid(20.0, 2001);
    let mean: Vec<f64> = times.iter().map(|&t| mean_na(t, &p).unwrap()).collect();
    let series = TimeSeries {
        stderr: vec![0.0; times.len()],
        times,
        mean,
        ensemble_size: 1,
    };
    let r = residual_check(&series, &p).unwrap();
    assert!(r < 1e-6, "residual {r}");
}

/// The closed form with the sign of its sine term flipped.
fn mutated_mean_na(t: f64, p: &RelaxationParams) -> f64 {
    let a = 0.5 / p.tau0;
    let regime = classify_regime(p.g0, p.tau0).unwrap();
    let w = regime.omega;
    let bracket = match regime.kind {
        RegimeKind::Wcr => (w * t).cos() - a * (w * t).sin() / w,
        RegimeKind::Scr => (w * t).cosh() - a * (w * t).sinh() / w,
        RegimeKind::Critical => 1.0 - a * t,
    };
    0.5 * p.n_total() + (p.na0 - 0.5 * p.n_total()) * (-a * t).exp() * bracket
}

#[test]
fn residual_detects_a_sign_flip() {
    for &g0tau0 in &[10.0, 0.05] {
        let p = params(1.0, g0tau0, 0.0, 2.0);
        let times = uniform_grid(20.0, 81);
        let r = residual_check_fn(|t| mutated_mean_na(t, &p), &times, &p);
        assert!(r > 1e-6 * p.n_total(), "g0tau0={g0tau0}: residual {r}");
    }
}

#[test]
fn g_matrix_estimates_converge_at_root_n() {
    for &(g0, dt) in &[(1.0, 0.3), (2.0, 1.1), (0.5, 4.0)] {
        let exact = g_matrices(g0, dt).unwrap();
        for &samples in &[1_000usize, 10_000, 100_000] {
            let mut rng = ChaCha8Rng::seed_from_u64(samples as u64);
            let est = g_matrices_mc(g0, dt, samples, &mut rng).unwrap();
            let dev = est.max_deviation(&exact);
            assert!(dev <= 5.0 / (samples as f64).sqrt(), "dev {dev} at {samples}");
        }
    }
}

#[test]
fn g_matrices_are_complementary() {
    for k in 0..50 {
        let g = g_matrices(1.0, 0.137 * k as f64).unwrap();
        for l in 0..2 {
            for m in 0..2 {
                let identity = if l == m { 1.0 } else { 0.0 };
                assert!((g.g11[l][m] + g.g22[l][m] - identity).abs() < 1e-15);
                assert_eq!(g.g12[l][m], g.g21[m][l]);
            }
        }
    }
}

#[test]
fn regime_flips_at_the_critical_point() {
    let g0 = 1.7;
    let at = |x: f64| classify_regime(g0, x / g0).unwrap().kind;
    assert_eq!(at(0.25), RegimeKind::Critical);
    assert_eq!(at(0.25 * (1.0 + 1e-9)), RegimeKind::Wcr);
    assert_eq!(at(0.25 * (1.0 - 1e-9)), RegimeKind::Scr);
    let mut previous = at(0.01);
    let mut flips = 0;
    for k in 1..=400 {
        let kind = at(0.01 * 1000f64.powf(k as f64 / 400.0));
        if kind != previous && kind != RegimeKind::Critical {
            flips += 1;
        }
        previous = kind;
    }
    assert_eq!(flips, 1);
}

#[test]
fn closed_form_is_continuous_across_the_transition() {
    let eps = 1e-6;
    let g0 = 1.0;
    let n = 2.0;
    let below = params(g0, 0.25 * (1.0 - eps) / g0, 0.0, n);
    let above = params(g0, 0.25 * (1.0 + eps) / g0, 0.0, n);
    let critical = params(g0, 0.25 / g0, 0.0, n);
    let mut worst: f64 = 0.0;
    for k in 0..=2000 {
        let t = k as f64 * (20.0 * 0.25 / g0) / 2000.0;
        let (lo, hi) = (mean_na(t, &below).unwrap(), mean_na(t, &above).unwrap());
        let mid = mean_na(t, &critical).unwrap();
        worst = worst.max((lo - hi).abs());
        assert!((lo - mid).abs() <= 1e-5 * n && (hi - mid).abs() <= 1e-5 * n);
    }
    assert!(worst <= 1e-5 * n, "branch gap {worst}");
    assert!(worst <= 10.0 * eps * n, "branch gap {worst}");
}

#[test]
fn specializations_agree_with_general_form() {
    for &g0tau0 in &[0.3, 1.0, 50.0] {
        for k in 0..=100 {
            let t = 0.2 * k as f64;
            let general = mean_na(t, &params(1.0, g0tau0, 0.0, 2.0)).unwrap();
            let special = wcr_na(t, 2.0, 1.0, g0tau0).unwrap();
            assert!((general - special).abs() <= 1e-12 * general.abs().max(1e-3));
        }
    }
    for &g0tau0 in &[0.2, 0.05, 1e-3] {
        for k in 0..=100 {
            let t = 0.2 * k as f64;
            let general = mean_na(t, &params(1.0, g0tau0, 0.0, 2.0)).unwrap();
            let special = scr_na(t, 2.0, 1.0, g0tau0).unwrap();
            assert!((general - special).abs() <= 1e-12 * general.abs().max(1e-3), "g0tau0={g0tau0} t={t} {general} {special}");
        }
    }
    assert!(wcr_na(1.0, 2.0, 1.0, 0.1).is_err());
    assert!(scr_na(1.0, 2.0, 1.0, 1.0).is_err());
}

#[test]
fn pure_oscillation_limit() {
    let g0 = 1.3;
    let p = params(g0, 1e9 / g0, 0.0, 2.0);
    for k in 0..=1000 {
        let t = 0.02 * k as f64 / g0;
        let expected = 2.0 * (g0 * t).sin().powi(2);
        assert!((mean_na(t, &p).unwrap() - expected).abs() <= 1e-6);
    }
}

#[test]
fn freezing_regime() {
    let g0 = 1.0;
    let tau0 = 1e-4 / g0;
    let p = params(g0, tau0, 0.0, 2.0);
    for k in 0..=5000 {
        let t = 0.01 * k as f64 / g0;
        assert!(mean_na(t, &p).unwrap() < 0.05 * 2.0);
    }
    let rate = effective_rate(g0, tau0).unwrap();
    let small_coupling = 4.0 * g0 * g0 * tau0;
    assert!((rate / small_coupling - 1.0).abs() <= 0.01);
}

#[test]
fn long_time_limit_is_half_the_excitations() {
    for &g0tau0 in &[20.0, 1.0, 0.25, 0.01] {
        let p = params(1.0, g0tau0, 0.0, 2.0);
        let decay = match classify_regime(1.0, g0tau0).unwrap().kind {
            RegimeKind::Wcr => 0.5 / g0tau0,
            _ => effective_rate(1.0, g0tau0).unwrap(),
        };
        let t = 50.0 / decay;
        assert!((mean_na(t, &p).unwrap() - 1.0).abs() <= 1e-6, "g0tau0={g0tau0}");
    }
}

#[test]
fn polariton_limit_tracks_general_form() {
    for &g0tau0 in &[50.0, 200.0, 1e4] {
        let g0 = 1.0;
        let damping = DampingParams::new(0.3 / g0tau0, 0.7 / g0tau0).unwrap();
        assert!((damping.tau0() - g0tau0).abs() < 1e-9 * g0tau0);
        for k in 0..=400 {
            let t = 0.05 * k as f64;
            let full = wcr_na(t, 2.0, g0, damping.tau0()).unwrap();
            let approx = polariton_na(t, 2.0, g0, &damping).unwrap();
            assert!((full - approx).abs() <= 0.01 * 2.0, "g0tau0={g0tau0} t={t}");
        }
    }
}
