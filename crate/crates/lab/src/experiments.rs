//! One function per experiment. Each writes its CSV (and snapshots) and
//! returns the summary that goes into the JSON file.

use crate::config::{ConfigError, Experiment, RunConfig};
use crate::output::{num, Artifacts};
use anyhow::Result;
use frac_helmholtz::dual::{mountain_pass_solve, recover_u, DualProblem, MountainPassConfig, WeightKind, WeightQ};
use frac_helmholtz::estimates::{
    local_estimate_sweep, opnorm_sweep, radiation_residual, spherical_wave, weighted_estimate_check, SweepConfig,
};
use frac_helmholtz::exponents::{
    rational_from_f64, tau_alpha, thm1_admissible, thm3_q_window, thm3_rows, ExponentTriple, TauVariant,
};
use frac_helmholtz::fixed_point::{
    continue_branch, solve_contraction, solve_lipschitz, strong_residual, AffineNonlinearity, BranchConfig,
    ContractionConfig, LipschitzConfig, PowerNonlinearity, Trace,
};
use frac_helmholtz::kernels::{check_kernel_envelope, split_kernel, KernelEnvelope, SplitKernelSpec};
use frac_helmholtz::quadrature::{herglotz_wave, HerglotzSpec, SphereRule};
use frac_helmholtz::resolvent::{apply_forward, apply_fractional_laplacian, apply_resolvent, limiting_absorption};
use frac_helmholtz::{ComplexField, EpsSequence, Extrapolation, Field64, Grid64, Params64};
use num_complex::Complex64;
use num_rational::Rational64;
use serde_json::{json, Value};

pub struct Report {
    pub pass: bool,
    pub summary: Value,
}

pub fn run(exp: Experiment, cfg: &RunConfig, art: &mut Artifacts) -> Result<Report> {
    match exp {
        Experiment::ResolventApply => resolvent_apply(cfg, art),
        Experiment::KernelTable => kernel_table(cfg, art),
        Experiment::SplitKernel => split(cfg, art),
        Experiment::Admissible => admissible(cfg, art),
        Experiment::QWindow => q_window(cfg, art),
        Experiment::Tau => tau(cfg, art),
        Experiment::OpnormSweep => opnorm(cfg, art),
        Experiment::LocalL2 => local(cfg, art),
        Experiment::WeightedCheck => weighted(cfg, art),
        Experiment::Radiation => radiation(cfg, art),
        Experiment::Herglotz => herglotz(cfg, art),
        Experiment::SolveComplex => solve_complex(cfg, art),
        Experiment::SolveLipschitz => lipschitz(cfg, art),
        Experiment::Branch => branch(cfg, art),
        Experiment::MountainPass => mountain_pass(cfg, art),
    }
}

fn setup(cfg: &RunConfig) -> Result<(Grid64, Params64)> {
    let g = cfg.grid()?;
    let p = cfg.params(&g)?;
    Ok((g, p))
}

/// Values along the first axis through the box center.
fn axis_profile(u: &Field64) -> Vec<Vec<String>> {
    let g = u.grid();
    let n = g.points_per_axis();
    let mut idx = vec![(n / 2) as i64; g.dim()];
    (0..n)
        .map(|j| {
            idx[0] = j as i64;
            let z = u.values()[g.ravel(&idx)];
            vec![num(g.coord(j)), num(z.re), num(z.im), num(z.norm())]
        })
        .collect()
}

fn trace_rows(t: &Trace<f64>) -> Vec<Vec<String>> {
    t.increments
        .iter()
        .enumerate()
        .map(|(j, &inc)| {
            let ratio = if j == 0 { String::new() } else { num(t.ratios[j - 1]) };
            vec![(j + 1).to_string(), num(inc), ratio, num(t.norms[j])]
        })
        .collect()
}

fn gaussian_source(g: &Grid64) -> Field64 {
    ComplexField::from_fn(g, |x| Complex64::new((-0.5 * x.iter().map(|a| a * a).sum::<f64>()).exp(), 0.0))
}

/// Random Herglotz wave with sup norm `amplitude`.
fn herglotz_data(cfg: &RunConfig, g: &Grid64, k: f64) -> Result<Field64> {
    let spec = HerglotzSpec::random(SphereRule::default(), k, 4, 0.5, cfg.solver.seed)?;
    let phi = herglotz_wave(&spec, g)?;
    let m = phi.lp_norm(f64::INFINITY)?;
    Ok(if m > 0.0 { phi.scale(Complex64::new(cfg.solver.amplitude / m, 0.0)) } else { phi })
}

fn rational(x: f64, key: &str) -> Result<Rational64> {
    rational_from_f64(x, 1000).ok_or_else(|| ConfigError(format!("{key}: {x} is not a rational with denominator ≤ 1000")).into())
}

/// Reduced fractions in the open interval `(lo, hi)` with denominator at most `max_den`, ascending.
fn fractions(lo: Rational64, hi: Rational64, max_den: i64) -> Vec<Rational64> {
    let mut out: Vec<Rational64> = Vec::new();
    for d in 1..=max_den {
        let start = (lo * d).floor().to_integer();
        let end = (hi * d).ceil().to_integer();
        for a in start..=end {
            let x = Rational64::new(a, d);
            if x > lo && x < hi && *x.denom() == d {
                out.push(x);
            }
        }
    }
    out.sort();
    out
}

fn rat(x: &Rational64) -> String {
    num(*x.numer() as f64 / *x.denom() as f64)
}

fn resolvent_apply(cfg: &RunConfig, art: &mut Artifacts) -> Result<Report> {
    let (g, params) = setup(cfg)?;
    let f = gaussian_source(&g);
    let (u, summary, pass) = match &cfg.physics.eps_sequence {
        Some(values) => {
            let seq = EpsSequence { values: values.clone() };
            let lim = limiting_absorption(&f, &params, &seq, &Extrapolation::OutgoingPhase { center: None })?;
            let pass = lim.report.converged;
            (lim.u_limit, json!({ "limit": lim.report }), pass)
        }
        None => {
            let u = apply_resolvent(&f, &params)?;
            let back = apply_forward(&u, &params)?;
            let res = back.sub(&f)?.lp_norm(2.0)? / f.lp_norm(2.0)?;
            (u, json!({ "epsilon": params.epsilon, "inversion_residual": res }), res <= 1e-10)
        }
    };
    art.csv(&cfg.csv_name(Experiment::ResolventApply), &["x", "re_u", "im_u", "abs_u"], &axis_profile(&u))?;
    art.snapshot("resolvent-apply-u", &u)?;
    let mut summary = summary;
    summary["l2_norm"] = json!(u.lp_norm(2.0)?);
    summary["sup_norm"] = json!(u.lp_norm(f64::INFINITY)?);
    Ok(Report { pass, summary })
}

fn kernel_table(cfg: &RunConfig, art: &mut Artifacts) -> Result<Report> {
    let (g, params) = setup(cfg)?;
    let env = KernelEnvelope::for_order(g.dim(), params.s);
    let rep = check_kernel_envelope(&params, &g, &env)?;
    let rows: Vec<Vec<String>> = rep
        .samples
        .iter()
        .map(|s| vec![num(s.r), num(s.value.re), num(s.value.im), num(s.envelope)])
        .collect();
    art.csv(&cfg.csv_name(Experiment::KernelTable), &["r", "re_k", "im_k", "envelope"], &rows)?;
    Ok(Report {
        pass: rep.finite(),
        summary: json!({
            "envelope": env,
            "small_max_ratio": rep.small_max_ratio,
            "large_max_ratio": rep.large_max_ratio,
            "epsilon": params.epsilon,
        }),
    })
}

fn split(cfg: &RunConfig, art: &mut Artifacts) -> Result<Report> {
    let (g, params) = setup(cfg)?;
    let spec = SplitKernelSpec::default();
    let sk = split_kernel(&params, &spec, &g)?;
    let r = &sk.report;
    let rows: Vec<Vec<String>> = r.samples.iter().map(|&(x, a, b)| vec![num(x), num(a), num(b)]).collect();
    art.csv(&cfg.csv_name(Experiment::SplitKernel), &["r", "abs_k1", "abs_k2"], &rows)?;
    let pass = r.k1_constant.is_finite() && r.k2_small_constant.is_finite() && r.k2_large_constant.is_finite();
    Ok(Report {
        pass,
        summary: json!({
            "spec": spec,
            "k2_small_fit": r.k2_small_fit,
            "k2_large_fit": r.k2_large_fit,
            "k1_large_fit": r.k1_large_fit,
            "k2_small_constant": r.k2_small_constant,
            "k2_large_constant": r.k2_large_constant,
            "k1_constant": r.k1_constant,
        }),
    })
}

const TABLE_HEADER: [&str; 9] = ["n", "s", "p", "q", "t", "case", "q_lo", "q_hi", "admissible"];

fn admissible(cfg: &RunConfig, art: &mut Artifacts) -> Result<Report> {
    let n = cfg.grid.n;
    let s = rational(cfg.physics.s, "physics.s")?;
    let one = Rational64::from_integer(1);
    let pairs: Vec<(Rational64, Rational64)> = match (cfg.exponents.p, cfg.exponents.q) {
        (Some(p), Some(q)) => vec![(rational(p, "exponents.p")?, rational(q, "exponents.q")?)],
        _ => {
            let recips = fractions(Rational64::from_integer(0), one, cfg.sweep.max_den);
            recips
                .iter()
                .flat_map(|&a| recips.iter().map(move |&b| (one / a, one / b)))
                .collect()
        }
    };
    let mut rows = Vec::with_capacity(pairs.len());
    let mut count = 0usize;
    let mut failed: std::collections::BTreeMap<String, usize> = Default::default();
    for (p, q) in &pairs {
        let v = thm1_admissible(n, &s, &ExponentTriple::pair(*p, *q)?)?;
        count += usize::from(v.admissible);
        for c in &v.failed_conditions {
            *failed.entry(c.label().to_string()).or_default() += 1;
        }
        rows.push(vec![
            n.to_string(),
            rat(&s),
            rat(p),
            rat(q),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            v.admissible.to_string(),
        ]);
    }
    art.csv(&cfg.csv_name(Experiment::Admissible), &TABLE_HEADER, &rows)?;
    Ok(Report {
        pass: true,
        summary: json!({ "checked": pairs.len(), "admissible": count, "failed_conditions": failed }),
    })
}

fn q_window(cfg: &RunConfig, art: &mut Artifacts) -> Result<Report> {
    let n = cfg.grid.n;
    let s = rational(cfg.physics.s, "physics.s")?;
    let (case, _) = thm3_rows(n, &s)?;
    let ts = match cfg.exponents.t {
        Some(t) => vec![rational(t, "exponents.t")?],
        None => {
            let hi = rational(cfg.sweep.t_max, "sweep.t_max")?;
            let mut v = fractions(Rational64::from_integer(1), hi, cfg.sweep.max_den);
            v.push(hi);
            v
        }
    };
    let q = cfg.exponents.q.map(|q| rational(q, "exponents.q")).transpose()?;
    let mut rows = Vec::with_capacity(ts.len());
    let mut nonempty = 0usize;
    for t in &ts {
        let w = thm3_q_window(n, &s, t)?;
        let ok = match &q {
            Some(q) => w.contains(q),
            None => !w.is_empty(),
        };
        nonempty += usize::from(!w.is_empty());
        let opt = |x: &Option<Rational64>| x.as_ref().map(rat).unwrap_or_default();
        rows.push(vec![
            n.to_string(),
            rat(&s),
            String::new(),
            q.as_ref().map(rat).unwrap_or_default(),
            rat(t),
            w.case.label().to_string(),
            opt(&w.q_lo),
            opt(&w.q_hi),
            ok.to_string(),
        ]);
    }
    art.csv(&cfg.csv_name(Experiment::QWindow), &TABLE_HEADER, &rows)?;
    Ok(Report {
        pass: true,
        summary: json!({ "case": case.label(), "t_values": ts.len(), "nonempty_windows": nonempty }),
    })
}

fn tau(cfg: &RunConfig, art: &mut Artifacts) -> Result<Report> {
    let n = cfg.grid.n;
    let alphas = match cfg.exponents.alpha {
        Some(a) => vec![rational(a, "exponents.alpha")?],
        None => fractions(
            Rational64::new(n as i64 + 1, 2),
            Rational64::from_integer(3 * n as i64),
            cfg.sweep.max_den,
        ),
    };
    let mut rows = Vec::with_capacity(alphas.len());
    for a in &alphas {
        let printed = tau_alpha(n, a, TauVariant::Printed)?;
        let cont = tau_alpha(n, a, TauVariant::Continuous)?;
        rows.push(vec![rat(a), rat(&printed), rat(&cont)]);
    }
    art.csv(&cfg.csv_name(Experiment::Tau), &["alpha", "tau_printed", "tau_continuous"], &rows)?;
    Ok(Report {
        pass: true,
        summary: json!({ "n": n, "alphas": alphas.len(), "variant": cfg.physics.tau_variant }),
    })
}

fn opnorm(cfg: &RunConfig, art: &mut Artifacts) -> Result<Report> {
    let g = cfg.grid()?;
    let (p, q) = (cfg.exponents.p.unwrap_or_default(), cfg.exponents.q.unwrap_or_default());
    let sw = &cfg.sweep;
    let mut sc = SweepConfig::new(sw.lambdas.clone(), sw.epsilons.clone());
    sc.eps_relative = sw.eps_relative;
    sc.slope_tol = sw.slope_tol;
    sc.allow_inadmissible = cfg.physics.negative_regime;
    let rep = opnorm_sweep(&g, cfg.physics.s, &cfg.families(), p, q, &sc)?;
    let rows: Vec<Vec<String>> = rep
        .rows
        .iter()
        .map(|r| vec![num(r.lambda), num(r.epsilon), num(r.max_ratio)])
        .collect();
    art.csv(&cfg.csv_name(Experiment::OpnormSweep), &["lambda", "epsilon", "max_ratio"], &rows)?;
    // growth of the max ratio across ε at the first λ
    let first_lambda: Vec<f64> = rep.rows.iter().filter(|r| r.lambda == rep.rows[0].lambda).map(|r| r.max_ratio).collect();
    let growth = first_lambda.last().copied().unwrap_or(f64::NAN) / first_lambda[0];
    let pass = if rep.admissible { rep.pass } else { growth >= 2.0 };
    Ok(Report {
        pass,
        summary: json!({
            "admissible": rep.admissible,
            "constant": rep.constant,
            "eps_variation": rep.eps_variation,
            "eps_stable": rep.eps_stable,
            "lambda_fits": rep.lambda_fits,
            "predicted_slope": rep.predicted_slope,
            "slope_ok": rep.slope_ok,
            "eps_growth": growth,
        }),
    })
}

fn local(cfg: &RunConfig, art: &mut Artifacts) -> Result<Report> {
    let g = cfg.grid()?;
    let sw = &cfg.sweep;
    let rep = local_estimate_sweep(
        &g,
        cfg.physics.s,
        &cfg.families(),
        cfg.exponents.p.unwrap_or_default(),
        &sw.lambdas,
        sw.epsilons[0],
        sw.quantity,
        sw.slope_tol,
    )?;
    let rows: Vec<Vec<String>> = rep.rows.iter().map(|&(l, v)| vec![num(l), num(v)]).collect();
    art.csv(&cfg.csv_name(Experiment::LocalL2), &["lambda", "local_ratio"], &rows)?;
    Ok(Report {
        pass: rep.pass,
        summary: json!({
            "quantity": rep.quantity,
            "fit": rep.fit,
            "predicted_slope": rep.predicted_slope,
            "stated_slope": rep.stated_slope,
        }),
    })
}

fn weighted(cfg: &RunConfig, art: &mut Artifacts) -> Result<Report> {
    let (g, params) = setup(cfg)?;
    let alpha = cfg.exponents.alpha.unwrap_or_default();
    let rep = weighted_estimate_check(&g, &cfg.families(), alpha, &params, cfg.physics.tau_variant)?;
    let rows: Vec<Vec<String>> = rep.ratios.iter().enumerate().map(|(i, &r)| vec![i.to_string(), num(r)]).collect();
    art.csv(&cfg.csv_name(Experiment::WeightedCheck), &["member", "ratio"], &rows)?;
    Ok(Report {
        pass: rep.pass,
        summary: json!({ "alpha": rep.alpha, "tau": rep.tau, "kappa": rep.kappa, "epsilon": params.epsilon }),
    })
}

fn radiation(cfg: &RunConfig, art: &mut Artifacts) -> Result<Report> {
    let (g, params) = setup(cfg)?;
    let l = g.box_length();
    let radii = cfg.sweep.radii.clone().unwrap_or_else(|| vec![l / 8.0, l / 4.0, 3.0 * l / 8.0]);
    let k = params.wavenumber();
    let (t0, t1) = (l * 13.0 / 32.0, l * 15.5 / 32.0);
    let out = radiation_residual(&spherical_wave(&g, k, true, t0, t1), &params, &radii, None, None)?;
    let inc = radiation_residual(&spherical_wave(&g, k, false, t0, t1), &params, &radii, None, None)?;
    let rows: Vec<Vec<String>> = out
        .rows
        .iter()
        .zip(&inc.rows)
        .map(|(a, b)| vec![num(a.radius), num(a.residual), num(a.density), num(b.residual), num(b.density)])
        .collect();
    art.csv(
        &cfg.csv_name(Experiment::Radiation),
        &["radius", "outgoing_residual", "outgoing_density", "incoming_residual", "incoming_density"],
        &rows,
    )?;
    Ok(Report {
        pass: out.density_decreasing && !inc.density_decreasing,
        summary: json!({
            "k": k,
            "outgoing_decreasing": out.density_decreasing,
            "incoming_decreasing": inc.density_decreasing,
        }),
    })
}

fn herglotz(cfg: &RunConfig, art: &mut Artifacts) -> Result<Report> {
    let (g, params) = setup(cfg)?;
    let phi = herglotz_data(cfg, &g, params.wavenumber())?;
    let lhs = apply_fractional_laplacian(&phi, params.s)?.axpy(Complex64::new(-params.lambda, 0.0), &phi)?;
    let res = lhs.lp_norm(2.0)? / phi.lp_norm(2.0)?;
    art.csv(&cfg.csv_name(Experiment::Herglotz), &["x", "re_phi", "im_phi", "abs_phi"], &axis_profile(&phi))?;
    art.snapshot("herglotz-phi", &phi)?;
    Ok(Report {
        pass: res.is_finite(),
        summary: json!({
            "k": params.wavenumber(),
            "sup_norm": phi.lp_norm(f64::INFINITY)?,
            "l2_norm": phi.lp_norm(2.0)?,
            "homogeneous_residual": res,
        }),
    })
}

fn solve_complex(cfg: &RunConfig, art: &mut Artifacts) -> Result<Report> {
    let (g, params) = setup(cfg)?;
    let phi = herglotz_data(cfg, &g, params.wavenumber())?;
    let mut cc = ContractionConfig::new(cfg.exponents.t.unwrap_or(3.0), cfg.exponents.q.unwrap_or(4.0));
    if let Some(m) = cfg.solver.max_iter {
        cc.max_iter = m;
    }
    if let Some(t) = cfg.solver.tol {
        cc.tol = t;
    }
    if let Some(d) = cfg.solver.damping {
        cc.damping = d;
    }
    let sol = solve_contraction(&phi, &params, &cc, None)?;
    let strong = strong_residual(&sol.u, &phi, &params, &PowerNonlinearity { t: cc.t })?;
    let t = &sol.trace;
    art.csv(&cfg.csv_name(Experiment::SolveComplex), &["iteration", "increment", "ratio", "norm"], &trace_rows(t))?;
    art.snapshot("solve-complex-u", &sol.u)?;
    Ok(Report {
        pass: t.observed_ratio <= 0.9 && t.residual <= cc.tol.max(1e-8) && strong <= 1e-6,
        summary: json!({
            "trace": t,
            "strong_residual": strong,
            "ball_radius": sol.ball_radius,
            "operator_constant": sol.operator_constant,
            "predicted_factor": sol.predicted_factor,
            "phi_q_norm": phi.lp_norm(cc.q)?,
        }),
    })
}

fn weight_samples(cfg: &RunConfig, g: &Grid64, default: WeightKind<f64>) -> Result<Vec<f64>> {
    let kind = cfg.weight.unwrap_or(default);
    Ok(WeightQ::new(kind, g)?.samples().to_vec())
}

fn lipschitz(cfg: &RunConfig, art: &mut Artifacts) -> Result<Report> {
    let (g, params) = setup(cfg)?;
    let alpha = cfg.exponents.alpha.unwrap_or(3.0);
    let q = weight_samples(cfg, &g, WeightKind::Decaying { decay: alpha })?;
    let f = AffineNonlinearity::new(&g, q, vec![Complex64::new(0.0, 0.0); g.size()])?;
    let phi = herglotz_data(cfg, &g, params.wavenumber())?;
    let mut lc = LipschitzConfig::new(alpha);
    lc.kappa_est = match cfg.solver.kappa {
        Some(k) => Some(k),
        None => Some(weighted_estimate_check(&g, &cfg.families(), alpha, &params, cfg.physics.tau_variant)?.kappa),
    };
    if let Some(m) = cfg.solver.max_iter {
        lc.max_iter = m;
    }
    if let Some(t) = cfg.solver.tol {
        lc.tol = t;
    }
    if let Some(d) = cfg.solver.damping {
        lc.fallback_damping = d;
    }
    let sol = solve_lipschitz(&phi, &params, &f, &lc)?;
    let t = &sol.trace;
    art.csv(&cfg.csv_name(Experiment::SolveLipschitz), &["iteration", "increment", "ratio", "norm"], &trace_rows(t))?;
    art.snapshot("solve-lipschitz-u", &sol.u)?;
    Ok(Report {
        pass: t.residual <= lc.tol.max(1e-8),
        summary: json!({
            "trace": t,
            "kappa": lc.kappa_est,
            "contraction_factor": sol.contraction_factor,
            "contraction_asserted": sol.contraction_asserted,
            "damped": sol.damped,
        }),
    })
}

fn branch(cfg: &RunConfig, art: &mut Artifacts) -> Result<Report> {
    let (g, params) = setup(cfg)?;
    let q = weight_samples(cfg, &g, WeightKind::Decaying { decay: 3.0 })?;
    let p = cfg.exponents.p.unwrap_or(3.0);
    let phi = herglotz_data(cfg, &g, params.wavenumber())?;
    let steps = cfg.solver.mu_steps;
    let path: Vec<f64> = (0..=steps).map(|j| cfg.solver.mu_max * j as f64 / steps as f64).collect();
    let mut bc = BranchConfig::default();
    if let Some(m) = cfg.solver.max_iter {
        bc.max_iter = m;
    }
    if let Some(t) = cfg.solver.tol {
        bc.tol = t;
    }
    let br = continue_branch(&q, p, &phi, &params, &path, &bc)?;
    let rows: Vec<Vec<String>> = br
        .steps
        .iter()
        .map(|s| vec![num(s.mu), s.iterations.to_string(), num(s.residual), num(s.sup_norm)])
        .collect();
    art.csv(&cfg.csv_name(Experiment::Branch), &["mu", "iterations", "residual", "sup_norm"], &rows)?;
    if let Some(last) = br.steps.last() {
        art.snapshot("branch-u", &last.u)?;
    }
    Ok(Report {
        pass: br.truncated.is_none(),
        summary: json!({
            "steps": br.steps.len(),
            "requested": path.len(),
            "truncated": br.truncated,
            "last_mu": br.steps.last().map(|s| s.mu),
        }),
    })
}

fn mountain_pass(cfg: &RunConfig, art: &mut Artifacts) -> Result<Report> {
    let (g, params) = setup(cfg)?;
    let kind = cfg.weight.unwrap_or(WeightKind::Decaying { decay: 4.0 });
    let w = WeightQ::new(kind, &g)?;
    let pr = DualProblem::new(&g, w, &params, cfg.exponents.p.unwrap_or(4.2), cfg.solver.richardson)?;
    let mut mc = MountainPassConfig {
        pairs: cfg.solver.pairs,
        seed: cfg.solver.seed,
        ..Default::default()
    };
    if let Some(t) = cfg.solver.tol {
        mc.tol = t;
    }
    if let Some(m) = cfg.solver.max_iter {
        mc.power_iter = m;
    }
    let res = mountain_pass_solve(&pr, &mc, None)?;
    let mut rows = Vec::new();
    let mut pairs = Vec::new();
    let mut pass = true;
    for (i, pair) in res.pairs.iter().enumerate() {
        let rec = recover_u(&pr, &pair.v, mc.tol, 10.0)?;
        pass &= pair.j > 0.0 && pair.relative_gradient <= mc.tol && rec.duality_residual <= 1e-4 && rec.sup_norm.is_finite();
        rows.push(vec![
            i.to_string(),
            num(pair.j),
            num(pair.relative_gradient),
            num(pair.norm),
            num(rec.duality_residual),
            num(rec.strong_residual),
            num(rec.sup_norm),
        ]);
        pairs.push(json!({
            "j": pair.j,
            "relative_gradient": pair.relative_gradient,
            "norm": pair.norm,
            "newton_steps": pair.newton_steps,
            "shift": pair.shift,
            "duality_residual": rec.duality_residual,
            "strong_residual": rec.strong_residual,
            "sup_norm": rec.sup_norm,
            "ps_trace": pair.trace,
        }));
        art.snapshot(&format!("mountain-pass-u{i}"), &rec.u)?;
    }
    art.csv(
        &cfg.csv_name(Experiment::MountainPass),
        &["pair", "j", "relative_gradient", "norm", "duality_residual", "strong_residual", "sup_u"],
        &rows,
    )?;
    Ok(Report {
        pass: pass && res.certificate.ps_bounded,
        summary: json!({ "certificate": res.certificate, "pairs": pairs, "weight": kind }),
    })
}
