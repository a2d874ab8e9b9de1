use frac_helmholtz::fixed_point::{
    ball_radius, continue_branch, solve_contraction, solve_lipschitz, strong_residual, AffineNonlinearity,
    WeightedPower,
    BranchConfig, ContractionConfig, LipschitzConfig, PowerNonlinearity,
};
use frac_helmholtz::quadrature::{gauss_legendre, herglotz_wave, HerglotzSpec, SphereRule};
use frac_helmholtz::resolvent::{apply_fractional_laplacian, apply_resolvent};
use frac_helmholtz::{ComplexField, Error, Field64, Grid64, Params64, Space};
use nalgebra::DMatrix;
use num_complex::Complex;
use std::f64::consts::PI;

fn floor_params(s: f64, lambda: f64, g: &Grid64) -> Params64 {
    let p = Params64::new(3, s, lambda, 1.0).unwrap();
    let e = p.eps_floor(g);
    p.with_epsilon(e).unwrap()
}

/// Herglotz data with sup norm `amp`.
fn small_herglotz(g: &Grid64, k: f64, amp: f64, seed: u64) -> Field64 {
    let spec = HerglotzSpec::random(SphereRule::default(), k, 4, 0.5, seed).unwrap();
    let phi = herglotz_wave(&spec, g).unwrap();
    let m = phi.lp_norm(f64::INFINITY).unwrap();
    phi.scale(Complex::new(amp / m, 0.0))
}

fn reflect(f: &Field64) -> Field64 {
    let g = f.grid();
    let n = g.points_per_axis();
    let mut idx = vec![0usize; 3];
    let mut out = f.clone();
    for i in 0..g.size() {
        g.unravel(i, &mut idx);
        let r: Vec<i64> = idx.iter().map(|&j| ((n - j) % n) as i64).collect();
        out.values_mut()[g.ravel(&r)] = f.values()[i];
    }
    out
}

fn rel_lq(a: &Field64, b: &Field64, q: f64) -> f64 {
    a.sub(b).unwrap().lp_norm(q).unwrap() / b.lp_norm(q).unwrap().max(1e-300)
}

#[test]
fn gauss_legendre_integrates_polynomials_exactly() {
    let (x, w) = gauss_legendre::<f64>(17);
    assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    for d in 0..=33 {
        let got: f64 = x.iter().zip(&w).map(|(a, b)| b * a.powi(d)).sum();
        let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
        assert!((got - exact).abs() < 1e-14, "degree {d}: {got} vs {exact}");
    }
    let (x1, w1) = gauss_legendre::<f64>(1);
    assert_eq!((x1[0], w1[0]), (0.0, 2.0));
}

#[test]
fn sphere_rules_have_positive_weights_summing_to_area() {
    for rule in [SphereRule::default(), SphereRule::Fibonacci { count: 590 }] {
        let (nodes, w) = rule.nodes::<f64>().unwrap();
        assert!(w.iter().all(|&v| v > 0.0));
        assert!((w.iter().sum::<f64>() - 4.0 * PI).abs() < 1e-12);
        for n in &nodes {
            assert!((n[0] * n[0] + n[1] * n[1] + n[2] * n[2] - 1.0).abs() < 1e-14);
        }
    }
}

#[test]
fn on_lattice_plane_wave_solves_the_homogeneous_equation() {
    let g = Grid64::new(3, 32, 16.0).unwrap();
    let k = 4.0 * g.freq_spacing();
    let s = 0.8;
    let lambda = k.powf(2.0 * s);
    let phi = herglotz_wave(&HerglotzSpec::plane_wave([0.0, 1.0, 0.0], k), &g).unwrap();
    let r = apply_fractional_laplacian(&phi, s).unwrap().axpy(Complex::new(-lambda, 0.0), &phi).unwrap();
    assert!(r.lp_norm(2.0).unwrap() <= 1e-10 * phi.lp_norm(2.0).unwrap());
}

#[test]
fn uniform_density_gives_the_spherical_bessel_profile() {
    let g = Grid64::new(3, 32, 16.0).unwrap();
    let k = 1.0;
    let phi = herglotz_wave(&HerglotzSpec::uniform(SphereRule::default(), k, Complex::new(1.0, 0.0)).unwrap(), &g).unwrap();
    let center = g.ravel(&[16, 16, 16]);
    assert!((phi.values()[center] - Complex::new(4.0 * PI, 0.0)).norm() < 1e-12);
    let mut worst: f64 = 0.0;
    for (z, &r) in phi.values().iter().zip(g.x_norms()) {
        let exact = if r == 0.0 { 4.0 * PI } else { 4.0 * PI * (k * r).sin() / (k * r) };
        worst = worst.max((z - Complex::new(exact, 0.0)).norm());
    }
    eprintln!("worst uniform Herglotz error {worst:e}");
    assert!(worst <= 1e-6);
}

#[test]
fn herglotz_rejects_unresolved_wavenumber() {
    let g = Grid64::new(3, 16, 16.0).unwrap();
    let spec = HerglotzSpec::uniform(SphereRule::default(), 4.0, Complex::new(1.0, 0.0)).unwrap();
    assert!(matches!(herglotz_wave(&spec, &g), Err(Error::Config(_))));
}

#[test]
fn ball_radius_is_the_smallest_root() {
    let a: f64 = ball_radius(0.1, 1.0, 3.0).unwrap();
    assert!((0.1 + a.powi(3) - a).abs() < 1e-12);
    assert!(a < (1.0f64 / 3.0).sqrt());
    assert!(ball_radius(1.0, 1.0, 3.0).is_none());
    assert_eq!(ball_radius(0.0, 1.0, 3.0), Some(0.0));
}

#[test]
fn zero_data_gives_zero_solution() {
    let g = Grid64::new(3, 16, 16.0).unwrap();
    let params = floor_params(0.8, 1.0, &g);
    let zero = ComplexField::zeros(&g, Space::Physical);
    let sol = solve_contraction(&zero, &params, &ContractionConfig::new(3.0, 4.0), None).unwrap();
    assert_eq!(sol.trace.iterations, 1);
    assert!(sol.u.values().iter().all(|z| z.norm() == 0.0));
}

#[test]
fn contraction_converges_for_small_herglotz_data() {
    let g = Grid64::new(3, 32, 16.0).unwrap();
    let params = floor_params(0.8, 1.0, &g);
    let phi = small_herglotz(&g, params.wavenumber(), 0.1, 11);
    let cfg = ContractionConfig::new(3.0, 4.0);
    let sol = solve_contraction(&phi, &params, &cfg, None).unwrap();
    eprintln!(
        "ratio {} residual {:e} iterations {} a {} C {} predicted {} ||phi||_4 {}",
        sol.trace.observed_ratio,
        sol.trace.residual,
        sol.trace.iterations,
        sol.ball_radius,
        sol.operator_constant,
        sol.predicted_factor,
        phi.lp_norm(4.0).unwrap()
    );
    assert!(sol.trace.observed_ratio <= 0.9);
    assert!(sol.trace.residual <= 1e-8);
    let f = PowerNonlinearity { t: 3.0 };
    let strong = strong_residual(&sol.u, &phi, &params, &f).unwrap();
    assert!(strong <= 1e-6, "strong residual {strong:e}");
    // increments do not grow after the first three iterations
    let inc = &sol.trace.increments;
    for w in inc[3..].windows(2) {
        assert!(w[1] <= w[0] * 1.0001 || w[1] < 1e-13);
    }

    let u0 = phi.scale(Complex::new(0.0, 1.0));
    let other = solve_contraction(&phi, &params, &cfg, Some(&u0)).unwrap();
    let d = rel_lq(&other.u, &sol.u, 4.0);
    eprintln!("multi-start difference {d:e}");
    assert!(d <= 1e-8);
}

#[test]
fn contraction_commutes_with_translation_and_reflection() {
    let g = Grid64::new(3, 16, 16.0).unwrap();
    let params = floor_params(0.8, 1.0, &g);
    let phi = small_herglotz(&g, params.wavenumber(), 0.1, 5);
    let cfg = ContractionConfig::new(3.0, 4.0);
    let u = solve_contraction(&phi, &params, &cfg, None).unwrap().u;
    let shift = [3, -2, 5];
    let moved = solve_contraction(&phi.translate(&shift), &params, &cfg, None).unwrap().u;
    assert!(rel_lq(&moved, &u.translate(&shift), 4.0) <= 1e-9);
    let flipped = solve_contraction(&reflect(&phi), &params, &cfg, None).unwrap().u;
    assert!(rel_lq(&flipped, &reflect(&u), 4.0) <= 1e-9);
}

#[test]
fn large_data_is_rejected() {
    let g = Grid64::new(3, 16, 16.0).unwrap();
    let params = floor_params(0.8, 1.0, &g);
    let phi = small_herglotz(&g, params.wavenumber(), 20.0, 5);
    let err = solve_contraction(&phi, &params, &ContractionConfig::new(3.0, 4.0), None).unwrap_err();
    assert!(matches!(err, Error::NonContraction(_)), "{err:?}");
    let mut cfg = ContractionConfig::new(3.0, 4.0);
    cfg.ball_radius = Some(1e3);
    let err = solve_contraction(&phi, &params, &cfg, None).unwrap_err();
    assert!(matches!(err, Error::NonContraction(_) | Error::BallExit(_)), "{err:?}");
}

#[test]
fn affine_nonlinearity_is_solved_in_one_step() {
    let g = Grid64::new(3, 16, 16.0).unwrap();
    let params = floor_params(1.0, 1.0, &g);
    let phi = small_herglotz(&g, 1.0, 1.0, 2);
    let b = ComplexField::from_fn(&g, |x| {
        let r2: f64 = x.iter().map(|a| a * a).sum();
        Complex::new((-r2).exp(), 0.5 * (-r2 / 2.0).exp())
    });
    let f = AffineNonlinearity::new(&g, vec![0.0; g.size()], b.values().to_vec()).unwrap();
    let sol = solve_lipschitz(&phi, &params, &f, &LipschitzConfig::new(3.0)).unwrap();
    let exact = apply_resolvent(&b, &params).unwrap().axpy(Complex::new(1.0, 0.0), &phi).unwrap();
    assert!(rel_lq(&sol.u, &exact, f64::INFINITY) <= 1e-14);
    assert!(sol.trace.increments[1] <= 1e-15);

    let zero = AffineNonlinearity::new(&g, vec![0.0; g.size()], vec![Complex::new(0.0, 0.0); g.size()]).unwrap();
    let sol = solve_lipschitz(&phi, &params, &zero, &LipschitzConfig::new(3.0)).unwrap();
    assert!(rel_lq(&sol.u, &phi, f64::INFINITY) == 0.0);
}

#[test]
fn linear_case_rate_matches_dense_spectral_radius() {
    let g = Grid64::new(3, 8, 8.0).unwrap();
    let params = floor_params(1.0, 1.0, &g);
    let alpha = 3.0;
    let c = 1.2;
    let q: Vec<f64> = g.x_norms().iter().map(|&r| c * (1.0 + r * r).powf(-alpha / 2.0)).collect();
    let size = g.size();

    // dense A = R diag(Q)
    let mut a = DMatrix::<Complex<f64>>::zeros(size, size);
    for j in 0..size {
        let mut e = ComplexField::zeros(&g, Space::Physical);
        e.values_mut()[j] = Complex::new(q[j], 0.0);
        let col = apply_resolvent(&e, &params).unwrap();
        for i in 0..size {
            a[(i, j)] = col.values()[i];
        }
    }
    let rho = a
        .clone()
        .schur()
        .eigenvalues()
        .unwrap()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);

    let phi = ComplexField::from_fn(&g, |x| Complex::new(1.0 / (1.0 + x[0] * x[0]), x[1].cos()));
    let f = AffineNonlinearity::new(&g, q.clone(), vec![Complex::new(0.0, 0.0); size]).unwrap();
    let mut cfg = LipschitzConfig::new(alpha);
    cfg.tol = 1e-13;
    let sol = solve_lipschitz(&phi, &params, &f, &cfg).unwrap();
    let tail: Vec<f64> = sol
        .trace
        .ratios
        .iter()
        .zip(&sol.trace.increments[1..])
        .filter(|(_, &inc)| inc > 1e-11)
        .map(|(&r, _)| r)
        .collect();
    let rate = *tail.last().unwrap();
    eprintln!("rate {rate} rho {rho} l_alpha {:?}", sol.contraction_factor);

    // direct solve of (I - A) u = φ
    let mut m = -a;
    for i in 0..size {
        m[(i, i)] += Complex::new(1.0, 0.0);
    }
    let rhs = nalgebra::DVector::from_column_slice(phi.values());
    let direct = m.lu().solve(&rhs).unwrap();
    let direct = ComplexField::from_values(&g, direct.as_slice().to_vec(), Space::Physical).unwrap();
    assert!(rho < 1.0);
    assert!((rate - rho).abs() <= 0.05 * rho, "rate {rate} vs rho {rho}");
    assert!(rel_lq(&sol.u, &direct, f64::INFINITY) <= 1e-10);
}

#[test]
fn lipschitz_reports_the_contraction_factor() {
    let g = Grid64::new(3, 16, 16.0).unwrap();
    let params = floor_params(1.0, 1.0, &g);
    let q: Vec<f64> = g.x_norms().iter().map(|&r| 0.2 * (1.0 + r * r).powf(-1.5)).collect();
    let f = AffineNonlinearity::new(&g, q, vec![Complex::new(0.0, 0.0); g.size()]).unwrap();
    let phi = small_herglotz(&g, 1.0, 1.0, 9);
    let mut cfg = LipschitzConfig::new(3.0);
    cfg.kappa_est = Some(0.4);
    let sol = solve_lipschitz(&phi, &params, &f, &cfg).unwrap();
    assert!((sol.contraction_factor.unwrap() - 0.08).abs() < 1e-12);
    assert!(sol.contraction_asserted);
    cfg.q_threshold = Some(0.1);
    assert!(matches!(solve_lipschitz(&phi, &params, &f, &cfg), Err(Error::Config(_))));
}

#[test]
fn branch_starts_at_zero_and_grows_continuously() {
    let g = Grid64::new(3, 16, 16.0).unwrap();
    let params = floor_params(0.9, 1.0, &g);
    let q: Vec<f64> = g.x_norms().iter().map(|&r| (1.0 + r * r).powf(-1.5)).collect();
    let phi = small_herglotz(&g, params.wavenumber(), 1.0, 4);
    let mut path = vec![0.0, 1e-6];
    path.extend((1..=10).map(|j| 0.1 * j as f64));
    let br = continue_branch(&q, 3.0, &phi, &params, &path, &BranchConfig::default()).unwrap();
    assert!(br.truncated.is_none(), "{:?}", br.truncated);
    assert!(br.steps[0].u.values().iter().all(|z| z.norm() == 0.0));
    assert!(br.steps[1].iterations <= 3, "first corrector took {}", br.steps[1].iterations);
    let phi_sup = phi.lp_norm(f64::INFINITY).unwrap();
    for w in br.steps.windows(2) {
        let jump = (w[1].sup_norm - w[0].sup_norm).abs();
        assert!(jump <= 10.0 * (w[1].mu - w[0].mu) * phi_sup);
        assert!(w[1].residual <= 1e-9);
    }
    let last = br.steps.last().unwrap();
    let f = WeightedPower { q: q.clone(), p: 3.0 };
    let r = strong_residual(&last.u, &phi.scale(Complex::new(last.mu, 0.0)), &params, &f).unwrap();
    assert!(r <= 1e-8, "strong residual {r:e}");
}

#[test]
fn branch_rejects_bad_paths() {
    let g = Grid64::new(3, 16, 16.0).unwrap();
    let params = floor_params(0.9, 1.0, &g);
    let q = vec![1.0; g.size()];
    let phi = small_herglotz(&g, params.wavenumber(), 1.0, 4);
    let cfg = BranchConfig::default();
    assert!(matches!(continue_branch(&q, 3.0, &phi, &params, &[0.1, 0.2], &cfg), Err(Error::Usage(_))));
    assert!(matches!(continue_branch(&q, 3.0, &phi, &params, &[0.0, 0.2, 0.1], &cfg), Err(Error::Usage(_))));
    assert!(matches!(continue_branch(&q, 2.0, &phi, &params, &[0.0, 0.1], &cfg), Err(Error::Domain(_))));
}

#[test]
fn branch_truncates_when_the_corrector_diverges() {
    let g = Grid64::new(3, 16, 16.0).unwrap();
    let params = floor_params(0.9, 1.0, &g);
    let q = vec![1.0; g.size()];
    let phi = small_herglotz(&g, params.wavenumber(), 1.0, 4);
    let path = [0.0, 0.1, 1.0, 10.0, 100.0];
    let br = continue_branch(&q, 3.0, &phi, &params, &path, &BranchConfig::default()).unwrap();
    assert!(br.truncated.is_some());
    assert!(br.steps.len() < path.len());
}
