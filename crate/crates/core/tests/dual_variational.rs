use frac_helmholtz::dual::{
    mountain_pass_solve, recover_u, DualProblem, MountainPassConfig, WeightKind, WeightQ,
};
use frac_helmholtz::linalg::{gmres, GmresConfig};
use frac_helmholtz::{Error, Grid64, Params64};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const S: f64 = 0.9;
const P: f64 = 4.2;

fn problem(n: usize, l: f64, kind: WeightKind<f64>, richardson: bool) -> DualProblem<f64> {
    let g = Grid64::new(3, n, l).unwrap();
    let p0 = Params64::new(3, S, 1.0, 1.0).unwrap();
    let params = p0.with_epsilon(p0.eps_floor(&g)).unwrap();
    let w = WeightQ::new(kind, &g).unwrap();
    DualProblem::new(&g, w, &params, P, richardson).unwrap()
}

fn decaying(n: usize) -> DualProblem<f64> {
    problem(n, 4.0, WeightKind::Decaying { decay: 4.0 }, true)
}

/// Sum of a few random low Fourier modes, shifted to lie in `[offset - 0.5, offset + 0.5]`.
fn smooth_field(pr: &DualProblem<f64>, rng: &mut ChaCha8Rng, offset: f64) -> Vec<f64> {
    let g = pr.grid();
    let l = g.box_length();
    let modes: Vec<([f64; 3], f64, f64)> = (0..4)
        .map(|_| {
            let k = [0, 1, 2].map(|_| rng.gen_range(-2i32..=2) as f64 * std::f64::consts::TAU / l);
            (k, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    let mut x = [0.0; 3];
    (0..g.size())
        .map(|i| {
            g.position(i, &mut x);
            let s: f64 = modes.iter().map(|(k, a, ph)| a * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2] + ph).cos()).sum();
            offset + s / 8.0
        })
        .collect()
}

fn random_field(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn kp_of_zero_is_zero() {
    let pr = decaying(16);
    let z = vec![0.0; pr.grid().size()];
    assert!(pr.apply_kp(&z).unwrap().iter().all(|&a| a == 0.0));
    assert_eq!(pr.eval_j(&z).unwrap(), 0.0);
    assert!(pr.grad_j(&z).unwrap().iter().all(|&a| a == 0.0));
}

#[test]
fn kp_is_symmetric() {
    let pr = decaying(16);
    let size = pr.grid().size();
    for seed in 0..10 {
        let v = random_field(size, 2 * seed);
        let w = random_field(size, 2 * seed + 1);
        let a = pr.inner(&w, &pr.apply_kp(&v).unwrap());
        let b = pr.inner(&v, &pr.apply_kp(&w).unwrap());
        let scale = pr.inner(&v, &v).sqrt() * pr.inner(&w, &w).sqrt();
        assert!((a - b).abs() <= 1e-12 * scale, "{a} vs {b}");
    }
}

#[test]
fn kp_on_a_plane_cosine_is_diagonal() {
    for richardson in [false, true] {
        let pr = problem(16, 8.0, WeightKind::Constant { value: 1.0 }, richardson);
        let g = pr.grid().clone();
        let xi0 = [3.0 * g.freq_spacing(), -1.0 * g.freq_spacing(), 0.0];
        let mut x = [0.0; 3];
        let v: Vec<f64> = (0..g.size())
            .map(|i| {
                g.position(i, &mut x);
                (xi0[0] * x[0] + xi0[1] * x[1]).cos()
            })
            .collect();
        let r = (xi0[0] * xi0[0] + xi0[1] * xi0[1]).sqrt();
        let d = r.powf(2.0 * S) - 1.0;
        let e = pr.params.epsilon;
        let re = |e: f64| d / (d * d + e * e);
        let m = if richardson { 2.0 * re(e) - re(2.0 * e) } else { re(e) };
        let kv = pr.apply_kp(&v).unwrap();
        let err = kv.iter().zip(&v).map(|(a, b)| (a - m * b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-13, "richardson {richardson}: {err:e}");
    }
}

#[test]
fn kp_rejects_wrong_length() {
    let pr = decaying(16);
    assert!(matches!(pr.apply_kp(&[1.0; 7]), Err(Error::Usage(_))));
}

#[test]
fn j_splits_into_power_and_quadratic_parts() {
    let pr = decaying(16);
    let z = random_field(pr.grid().size(), 3);
    let a = pr.norm(&z, pr.p_conj).powf(pr.p_conj) / pr.p_conj;
    let b = 0.5 * pr.inner(&z, &pr.apply_kp(&z).unwrap());
    for t in [0.5, 1.0, 2.0] {
        let tz: Vec<f64> = z.iter().map(|&x| t * x).collect();
        let expect = t.powf(pr.p_conj) * a - t * t * b;
        let got = pr.eval_j(&tz).unwrap();
        assert!((got - expect).abs() <= 1e-10 * expect.abs().max(a), "t = {t}: {got} vs {expect}");
    }
}

#[test]
fn quadratic_part_is_positive_inside_a_bump() {
    let pr = problem(32, 4.0, WeightKind::BumpCompact { radius: 1.5 }, true);
    let g = pr.grid();
    let z: Vec<f64> = g.x_norms().iter().map(|&r| if r < 1.5 { (-r * r / 0.02).exp() } else { 0.0 }).collect();
    let b = 0.5 * pr.inner(&z, &pr.apply_kp(&z).unwrap());
    assert!(b > 0.0);
    let t = pr.ray_peak(&z).unwrap();
    let far: Vec<f64> = z.iter().map(|&x| 4.0 * t * x).collect();
    assert!(pr.eval_j(&far).unwrap() < 0.0);
    let near: Vec<f64> = z.iter().map(|&x| t * x).collect();
    assert!(pr.eval_j(&near).unwrap() > 0.0);
}

#[test]
fn j_is_even_and_gradient_odd() {
    let pr = decaying(16);
    let v = random_field(pr.grid().size(), 8);
    let mv: Vec<f64> = v.iter().map(|&a| -a).collect();
    assert_eq!(pr.eval_j(&v).unwrap(), pr.eval_j(&mv).unwrap());
    let g = pr.grad_j(&v).unwrap();
    let gm = pr.grad_j(&mv).unwrap();
    assert!(g.iter().zip(&gm).all(|(a, b)| *a == -*b));
}

#[test]
fn gradient_matches_central_differences() {
    let pr = decaying(16);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let delta = 1e-5;
    for _ in 0..20 {
        let v = smooth_field(&pr, &mut rng, 1.5);
        let w = smooth_field(&pr, &mut rng, 1.0);
        let plus: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a + delta * b).collect();
        let minus: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a - delta * b).collect();
        let fd = (pr.eval_j(&plus).unwrap() - pr.eval_j(&minus).unwrap()) / (2.0 * delta);
        let an = pr.inner(&pr.grad_j(&v).unwrap(), &w);
        assert!((fd - an).abs() <= 1e-5 * an.abs(), "{fd} vs {an}");
    }
}

#[test]
fn admissible_window_is_enforced() {
    let g = Grid64::new(3, 16, 4.0).unwrap();
    let p0 = Params64::new(3, S, 1.0, 1.0).unwrap();
    let w = WeightQ::new(WeightKind::Decaying { decay: 4.0 }, &g).unwrap();
    for p in [3.9, 4.0, 5.0, 6.0] {
        let err = DualProblem::new(&g, w.clone(), &p0, p, true).unwrap_err();
        assert!(matches!(err, Error::Domain(ref m) if m.contains("2(n+1)/(n-1)")), "{err}");
    }
}

#[test]
fn invalid_weights_are_rejected() {
    let g = Grid64::new(3, 16, 4.0).unwrap();
    assert!(matches!(WeightQ::new(WeightKind::Constant { value: 0.0 }, &g), Err(Error::Config(_))));
    assert!(matches!(WeightQ::new(WeightKind::Constant { value: -1.0 }, &g), Err(Error::Config(_))));
    assert!(matches!(
        WeightQ::new(WeightKind::PeriodicCell { cells: 3, amplitude: 0.5 }, &g),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        WeightQ::new(WeightKind::PeriodicCell { cells: 4, amplitude: 1.5 }, &g),
        Err(Error::Config(_))
    ));
    let q = WeightQ::new(WeightKind::PeriodicCell { cells: 4, amplitude: 0.5 }, &g).unwrap();
    // one cell is four lattice points
    let s = q.samples();
    for i in 0..16 {
        let a = s[g.ravel(&[i, 3, 5])];
        let b = s[g.ravel(&[i + 4, 3, 5])];
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn gmres_matches_a_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 60;
    let a = DMatrix::<f64>::from_fn(n, n, |i, j| if i == j { 4.0 } else { rng.gen_range(-0.3..0.3) });
    let b = DVector::<f64>::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    let exact = a.clone().lu().solve(&b).unwrap();
    for restart in [5, 100] {
        let cfg = GmresConfig { tol: 1e-12, restart, max_iter: 2000 };
        let res = gmres(|x: &[f64]| (&a * DVector::from_column_slice(x)).as_slice().to_vec(), b.as_slice(), None, &cfg);
        assert!(res.converged, "restart {restart}");
        let err = (DVector::from_vec(res.x) - &exact).norm() / exact.norm();
        assert!(err < 1e-10, "restart {restart}: {err:e}");
    }
    let zero = gmres(|x: &[f64]| x.to_vec(), &[0.0; 4], None, &GmresConfig::default());
    assert!(zero.converged && zero.x.iter().all(|&v| v == 0.0));
}

#[test]
fn recovery_of_zero_and_of_a_non_critical_point() {
    let pr = decaying(16);
    let size = pr.grid().size();
    let r = recover_u(&pr, &vec![0.0; size], 1e-5, 10.0).unwrap();
    assert!(r.u.values().iter().all(|z| z.norm() == 0.0));
    let v = random_field(size, 5);
    assert!(matches!(recover_u(&pr, &v, 1e-5, 10.0), Err(Error::Inconsistency(_))));
}

#[test]
fn mountain_pass_with_decaying_weight() {
    let pr = decaying(32);
    let cfg = MountainPassConfig { pairs: 2, ..Default::default() };
    let res = mountain_pass_solve(&pr, &cfg, None).unwrap();
    let cert = &res.certificate;
    assert!(cert.delta > 0.0 && cert.sphere_min >= cert.delta * (1.0 - 1e-9));
    assert!(cert.endpoint_j < 0.0);
    assert!(cert.ps_bounded);
    assert_eq!(res.pairs.len(), 2);
    let (a, b) = (&res.pairs[0], &res.pairs[1]);
    let diff = a.v.iter().zip(&b.v).map(|(x, y)| (x - y).abs().min((x + y).abs())).fold(0.0, f64::max);
    assert!(diff > 1e-3);
    for pair in &res.pairs {
        assert!(pair.j > 0.0);
        assert!(pair.relative_gradient <= 1e-5);
        let minus = pair.negated();
        assert_eq!(pr.eval_j(&minus).unwrap(), pr.eval_j(&pair.v).unwrap());
        assert!(pr.relative_gradient(&minus).unwrap() <= 1e-5);
        let rec = recover_u(&pr, &pair.v, 1e-5, 10.0).unwrap();
        assert!(rec.duality_residual <= 1e-4);
        assert!(rec.sup_norm.is_finite());
        assert!(rec.u.values().iter().all(|z| z.im == 0.0));
    }

    let fine = decaying(64);
    let fine_res = mountain_pass_solve(&fine, &MountainPassConfig::default(), None).unwrap();
    let coarse_sup = recover_u(&pr, &a.v, 1e-5, 10.0).unwrap().sup_norm;
    let fine_sup = recover_u(&fine, &fine_res.pairs[0].v, 1e-5, 10.0).unwrap().sup_norm;
    let change = (fine_sup - coarse_sup).abs() / fine_sup;
    eprintln!("sup |u|: {coarse_sup} on 32^3, {fine_sup} on 64^3");
    assert!(change <= 0.2, "refinement change {change}");
}

#[test]
fn mountain_pass_with_periodic_weight_is_translation_invariant() {
    let pr = problem(32, 4.0, WeightKind::PeriodicCell { cells: 4, amplitude: 0.5 }, true);
    let g = pr.grid().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let x0: Vec<f64> = g
        .x_norms()
        .iter()
        .map(|&r| (-r * r).exp() * (1.0 + 0.1 * rng.gen_range(-1.0..1.0)))
        .collect();
    let field = pr.to_field(&x0).unwrap();
    let moved = field.translate(&[8, 0, -8]).real_part();
    let cfg = MountainPassConfig::default();
    let a = mountain_pass_solve(&pr, &cfg, Some(&x0)).unwrap();
    let b = mountain_pass_solve(&pr, &cfg, Some(&moved)).unwrap();
    let (pa, pb) = (&a.pairs[0], &b.pairs[0]);
    assert!(pa.j > 0.0 && pa.relative_gradient <= 1e-5);
    assert!((pa.j - pb.j).abs() <= 1e-6 * pa.j);
    assert!((pa.norm - pb.norm).abs() <= 1e-6 * pa.norm);
    let rec = recover_u(&pr, &pa.v, 1e-5, 10.0).unwrap();
    assert!(rec.duality_residual <= 1e-4);
}

#[test]
fn zero_pairs_is_a_config_error() {
    let pr = decaying(16);
    let cfg = MountainPassConfig { pairs: 0, ..Default::default() };
    assert!(matches!(mountain_pass_solve(&pr, &cfg, None), Err(Error::Config(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn palais_smale_identity(seed in 0u64..1000, scale in 0.1f64..10.0) {
        let pr = decaying(16);
        let v: Vec<f64> = random_field(pr.grid().size(), seed).iter().map(|&a| scale * a).collect();
        let j = pr.eval_j(&v).unwrap();
        let g = pr.grad_j(&v).unwrap();
        let lhs = j - 0.5 * pr.inner(&g, &v);
        let rhs = (1.0 / pr.p_conj - 0.5) * pr.norm(&v, pr.p_conj).powf(pr.p_conj);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs);
    }

    #[test]
    fn kp_is_linear(seed in 0u64..1000, c in -3.0f64..3.0) {
        let pr = decaying(16);
        let size = pr.grid().size();
        let v = random_field(size, seed);
        let w = random_field(size, seed + 7);
        let comb: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a + c * b).collect();
        let lhs = pr.apply_kp(&comb).unwrap();
        let kv = pr.apply_kp(&v).unwrap();
        let kw = pr.apply_kp(&w).unwrap();
        let err = lhs.iter().zip(kv.iter().zip(&kw)).map(|(l, (a, b))| (l - a - c * b).abs()).fold(0.0, f64::max);
        let scale = kv.iter().chain(&kw).fold(0.0f64, |m, a| m.max(a.abs())) * (1.0 + c.abs());
        prop_assert!(err <= 1e-12 * scale);
    }
}
