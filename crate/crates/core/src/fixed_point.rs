//! Fixed-point solvers for `u = φ + R f(·, u)`.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimates::norm_ratio;
use crate::grid::{ComplexField, Grid, Space};
use crate::resolvent::{apply_forward, build_multiplier, ResolventParams};
use crate::scalar::{lit, Real};

/// Consecutive non-contracting iterations tolerated before giving up.
const STALL_LIMIT: usize = 5;

/// A nonlinearity evaluated pointwise in physical space.
pub trait Nonlinearity<T: Real>: Sync {
    /// `f(x_i, u)` at lattice index `i`.
    fn eval(&self, index: usize, u: Complex<T>) -> Complex<T>;

    /// `sup ⟨x⟩^α |∂_u f(x, ·)|` if known in closed form.
    fn weighted_lipschitz(&self, _grid: &Grid<T>, _alpha: T) -> Option<T> {
        None
    }

    fn apply(&self, u: &ComplexField<T>) -> ComplexField<T> {
        let mut out = u.clone();
        out.values_mut()
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, z)| *z = self.eval(i, *z));
        out
    }
}

/// `|u|^{t-1} u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerNonlinearity<T> {
    pub t: T,
}

impl<T: Real> Nonlinearity<T> for PowerNonlinearity<T> {
    fn eval(&self, _index: usize, u: Complex<T>) -> Complex<T> {
        let a = u.norm();
        if a == T::zero() {
            u
        } else {
            u * a.powf(self.t - T::one())
        }
    }
}

/// `Q(x) u + b(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineNonlinearity<T: Real> {
    pub q: Vec<T>,
    pub b: Vec<Complex<T>>,
}

impl<T: Real> AffineNonlinearity<T> {
    pub fn new(grid: &Grid<T>, q: Vec<T>, b: Vec<Complex<T>>) -> Result<Self> {
        if q.len() != grid.size() || b.len() != grid.size() {
            return Err(Error::Usage("Q and b must be sampled on the grid".into()));
        }
        Ok(AffineNonlinearity { q, b })
    }
}

impl<T: Real> Nonlinearity<T> for AffineNonlinearity<T> {
    fn eval(&self, index: usize, u: Complex<T>) -> Complex<T> {
        u * self.q[index] + self.b[index]
    }

    fn weighted_lipschitz(&self, grid: &Grid<T>, alpha: T) -> Option<T> {
        Some(weighted_sup(grid, &self.q, alpha))
    }
}

/// `Q(x) |u|^{p-2} u`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPower<T: Real> {
    pub q: Vec<T>,
    pub p: T,
}

impl<T: Real> Nonlinearity<T> for WeightedPower<T> {
    fn eval(&self, index: usize, u: Complex<T>) -> Complex<T> {
        let a = u.norm();
        if a == T::zero() {
            u
        } else {
            u * a.powf(self.p - lit(2.0)) * self.q[index]
        }
    }
}

/// `max ⟨x⟩^α |g(x)|` for real samples.
pub fn weighted_sup<T: Real>(grid: &Grid<T>, g: &[T], alpha: T) -> T {
    let half = alpha / lit(2.0);
    g.iter()
        .zip(grid.x_norms())
        .map(|(&v, &r)| (T::one() + r * r).powf(half) * v.abs())
        .fold(T::zero(), T::max)
}

/// The 2/3-rule filter: zero every mode with some `|ξ_a| > (2/3) ξ_Nyquist`.
pub fn dealias<T: Real>(f: &ComplexField<T>) -> Result<ComplexField<T>> {
    let grid = f.grid();
    let cut = grid.nyquist() * lit(2.0 / 3.0);
    let mask = ComplexField::from_spectral_fn(grid, |xi| {
        let keep = xi.iter().all(|&v| v.abs() <= cut);
        Complex::new(if keep { T::one() } else { T::zero() }, T::zero())
    });
    f.apply_multiplier(&mask)
}

/// One resolvent application `R g` with a cached multiplier.
struct Resolvent<T: Real> {
    m: ComplexField<T>,
}

impl<T: Real> Resolvent<T> {
    fn new(params: &ResolventParams<T>, grid: &Grid<T>, dealias: bool) -> Result<Self> {
        params.check_grid(grid)?;
        let mut m = build_multiplier(params, grid)?;
        if dealias {
            let cut = grid.nyquist() * lit(2.0 / 3.0);
            let mut xi = vec![T::zero(); grid.dim()];
            for (i, z) in m.values_mut().iter_mut().enumerate() {
                grid.frequency(i, &mut xi);
                if xi.iter().any(|&v| v.abs() > cut) {
                    *z = Complex::new(T::zero(), T::zero());
                }
            }
        }
        Ok(Resolvent { m })
    }

    fn apply(&self, g: &ComplexField<T>) -> Result<ComplexField<T>> {
        g.apply_multiplier(&self.m)
    }
}

fn rel<T: Real>(num: T, den: T) -> T {
    if den > T::zero() {
        num / den
    } else {
        num
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionConfig<T> {
    pub t: T,
    pub q: T,
    /// Radius `a` of the ball; `None` derives it from the measured operator norm.
    pub ball_radius: Option<T>,
    pub max_iter: usize,
    pub tol: T,
    pub damping: T,
    pub dealias: bool,
}

impl<T: Real> ContractionConfig<T> {
    pub fn new(t: T, q: T) -> Self {
        ContractionConfig {
            t,
            q,
            ball_radius: None,
            max_iter: 200,
            tol: lit(1e-11),
            damping: T::one(),
            dealias: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > T::zero()) {
            return Err(Error::Config("tol must be positive".into()));
        }
        if !(self.damping > T::zero() && self.damping <= T::one()) {
            return Err(Error::Config("damping must lie in (0, 1]".into()));
        }
        if let Some(a) = self.ball_radius {
            if !(a > T::zero()) {
                return Err(Error::Config("ball radius must be positive".into()));
            }
        }
        if !(self.t > T::one()) || !(self.q > self.t) {
            return Err(Error::Config(format!("need 1 < t < q, got t = {}, q = {}", self.t, self.q)));
        }
        Ok(())
    }
}

/// Per-iteration diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace<T> {
    /// Relative increments `||u_{j+1} - u_j|| / ||u_{j+1}||`.
    pub increments: Vec<T>,
    /// `increments[j] / increments[j-1]`.
    pub ratios: Vec<T>,
    pub norms: Vec<T>,
    /// Largest ratio after the first two iterations, above the roundoff floor.
    pub observed_ratio: T,
    /// Relative fixed-point residual of the returned iterate.
    pub residual: T,
    pub iterations: usize,
}

impl<T: Real> Trace<T> {
    fn push(&mut self, inc: T, norm: T) {
        if let Some(&prev) = self.increments.last() {
            self.ratios.push(rel(inc, prev));
        }
        self.increments.push(inc);
        self.norms.push(norm);
    }

    fn stalled(&self) -> bool {
        self.ratios.len() >= STALL_LIMIT && self.ratios[self.ratios.len() - STALL_LIMIT..].iter().all(|&r| r >= T::one())
    }

    fn finish(&mut self) {
        self.iterations = self.increments.len();
        // ratios at the roundoff floor carry no information
        let floor = T::epsilon() * lit(1e4);
        self.observed_ratio = self
            .ratios
            .iter()
            .enumerate()
            .skip(2)
            .filter(|&(j, r)| r.is_finite() && self.increments[j + 1] > floor)
            .map(|(_, &r)| r)
            .fold(T::zero(), T::max);
    }
}

/// Result of [`solve_contraction`].
#[derive(Debug, Clone)]
pub struct ContractionSolution<T: Real> {
    pub u: ComplexField<T>,
    pub trace: Trace<T>,
    pub ball_radius: T,
    /// Measured `||R||_{L^{q/t} → L^q}` surrogate.
    pub operator_constant: T,
    /// `C t a^{t-1}`, the contraction factor the ball argument predicts.
    pub predicted_factor: T,
}

/// Smallest positive root of `phi_norm + c a^t = a`, if any.
pub fn ball_radius<T: Real>(phi_norm: T, c: T, t: T) -> Option<T> {
    if phi_norm == T::zero() {
        return Some(T::zero());
    }
    let g = |a: T| phi_norm + c * a.powf(t) - a;
    // g decreases until a* = (c t)^{-1/(t-1)}
    let a_star = (c * t).recip().powf((t - T::one()).recip());
    if g(a_star) > T::zero() {
        return None;
    }
    let (mut lo, mut hi) = (T::zero(), a_star);
    for _ in 0..200 {
        let mid = (lo + hi) / lit(2.0);
        if g(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(hi)
}

/// Largest `||R f||_q / ||f||_{q/t}` over a small probe family built from
/// `φ` and Gaussians.
pub fn operator_constant<T: Real>(phi: &ComplexField<T>, params: &ResolventParams<T>, q: T, t: T) -> Result<T> {
    let grid = phi.grid();
    let k = params.wavenumber();
    let mut probes = vec![phi.clone(), phi.map(|z| z * z.norm())];
    for width in [T::one(), lit(2.0), lit(4.0)] {
        let w = width / k;
        probes.push(ComplexField::from_fn(grid, |x| {
            let r2: T = x.iter().map(|&a| a * a).sum();
            Complex::new((-r2 / (lit::<T>(2.0) * w * w)).exp(), T::zero())
        }));
    }
    let mut c = T::zero();
    for f in &probes {
        c = c.max(norm_ratio(f, params, q / t, q)?);
    }
    Ok(c)
}

/// Picard iteration for `u = φ + R(|u|^{t-1} u)` in the `L^q` ball.
pub fn solve_contraction<T: Real>(
    phi: &ComplexField<T>,
    params: &ResolventParams<T>,
    cfg: &ContractionConfig<T>,
    initial: Option<&ComplexField<T>>,
) -> Result<ContractionSolution<T>> {
    cfg.validate()?;
    phi.expect_space(Space::Physical)?;
    let grid = phi.grid();
    let res = Resolvent::new(params, grid, cfg.dealias)?;
    let f = PowerNonlinearity { t: cfg.t };
    let q = cfg.q;
    let phi_norm = phi.lp_norm(q)?;
    let c = operator_constant(phi, params, q, cfg.t)?;
    let a = match cfg.ball_radius {
        Some(a) => a,
        None => ball_radius(phi_norm, c, cfg.t).ok_or_else(|| {
            Error::NonContraction(format!(
                "||φ||_q = {phi_norm} is too large for a ball with C = {c}, t = {}",
                cfg.t
            ))
        })?,
    };
    // slack for discretization of the ball estimate
    let a_check = a * lit(1.0 + 1e-6) + T::epsilon();
    let predicted = c * cfg.t * a.powf(cfg.t - T::one());

    let map = |u: &ComplexField<T>| -> Result<ComplexField<T>> {
        let g = f.apply(u);
        phi.axpy(Complex::new(T::one(), T::zero()), &res.apply(&g)?)
    };

    let mut u = match initial {
        Some(u0) => {
            u0.expect_grid(grid)?;
            u0.clone()
        }
        None => ComplexField::zeros(grid, Space::Physical),
    };
    let theta = Complex::new(cfg.damping, T::zero());
    let mut trace = Trace::default();
    for _ in 0..cfg.max_iter {
        let tu = map(&u)?;
        let next = u.axpy(theta, &tu.sub(&u)?)?;
        let norm = next.lp_norm(q)?;
        let inc = rel(next.sub(&u)?.lp_norm(q)?, norm);
        u = next;
        trace.push(inc, norm);
        if !norm.is_finite() {
            return Err(Error::NonContraction(format!("iterate overflowed after {} steps", trace.increments.len())));
        }
        if norm > a_check && a > T::zero() {
            return Err(Error::BallExit(format!(
                "||u||_q = {norm} left the ball of radius {a} (C t a^(t-1) = {predicted})"
            )));
        }
        if inc <= cfg.tol {
            break;
        }
        if trace.stalled() {
            return Err(Error::NonContraction(format!(
                "increment ratio >= 1 for {STALL_LIMIT} iterations; C t a^(t-1) = {predicted}"
            )));
        }
    }
    trace.finish();
    let tu = map(&u)?;
    trace.residual = rel(u.sub(&tu)?.lp_norm(q)?, u.lp_norm(q)?);
    if !(trace.residual <= cfg.tol * lit(100.0)) {
        return Err(Error::Convergence(format!(
            "fixed-point residual {} after {} iterations",
            trace.residual, trace.iterations
        )));
    }
    Ok(ContractionSolution {
        u,
        trace,
        ball_radius: a,
        operator_constant: c,
        predicted_factor: predicted,
    })
}

/// `||((-Δ)^s - λ - iε) u - f(·, u)||_2 / ||u||_2`.
pub fn strong_residual<T: Real>(
    u: &ComplexField<T>,
    phi: &ComplexField<T>,
    params: &ResolventParams<T>,
    f: &dyn Nonlinearity<T>,
) -> Result<T> {
    let lhs = apply_forward(&u.sub(phi)?, params)?;
    let r = lhs.sub(&f.apply(u))?;
    Ok(rel(r.lp_norm(lit(2.0))?, u.lp_norm(lit(2.0))?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzConfig<T> {
    pub alpha: T,
    /// Empirical `κ_α` of the weighted resolvent bound.
    pub kappa_est: Option<T>,
    /// Weighted Lipschitz constant `l_α`; taken from the nonlinearity if `None`.
    pub lipschitz_const: Option<T>,
    /// Required `1 - κ l` for the contraction to be asserted.
    pub margin: T,
    /// Optional bound on `||Q||_{L^∞_α}`.
    pub q_threshold: Option<T>,
    pub max_iter: usize,
    pub tol: T,
    /// Damping used after the undamped iteration stalls.
    pub fallback_damping: T,
}

impl<T: Real> LipschitzConfig<T> {
    pub fn new(alpha: T) -> Self {
        LipschitzConfig {
            alpha,
            kappa_est: None,
            lipschitz_const: None,
            margin: T::zero(),
            q_threshold: None,
            max_iter: 500,
            tol: lit(1e-10),
            fallback_damping: lit(0.5),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LipschitzSolution<T: Real> {
    pub u: ComplexField<T>,
    pub trace: Trace<T>,
    /// `κ_α l_α` when both are known.
    pub contraction_factor: Option<T>,
    pub contraction_asserted: bool,
    pub damped: bool,
}

/// Fixed point of `u ↦ φ + R f(·, u)` in the sup norm.
pub fn solve_lipschitz<T: Real>(
    phi: &ComplexField<T>,
    params: &ResolventParams<T>,
    f: &dyn Nonlinearity<T>,
    cfg: &LipschitzConfig<T>,
) -> Result<LipschitzSolution<T>> {
    phi.expect_space(Space::Physical)?;
    if !(cfg.tol > T::zero()) {
        return Err(Error::Config("tol must be positive".into()));
    }
    let grid = phi.grid();
    let res = Resolvent::new(params, grid, false)?;
    let l = cfg.lipschitz_const.or_else(|| f.weighted_lipschitz(grid, cfg.alpha));
    if let (Some(thr), Some(lv)) = (cfg.q_threshold, l) {
        if lv > thr {
            return Err(Error::Config(format!("||Q||_α = {lv} exceeds the configured bound {thr}")));
        }
    }
    let factor = match (cfg.kappa_est, l) {
        (Some(k), Some(lv)) => Some(k * lv),
        _ => None,
    };
    let asserted = factor.map(|x| x < T::one() - cfg.margin).unwrap_or(false);
    let inf = T::infinity();
    let map = |u: &ComplexField<T>| -> Result<ComplexField<T>> {
        phi.axpy(Complex::new(T::one(), T::zero()), &res.apply(&f.apply(u))?)
    };

    let mut u = phi.clone();
    let mut theta = T::one();
    let mut damped = false;
    let mut trace = Trace::default();
    let mut converged = false;
    for _ in 0..cfg.max_iter {
        let tu = map(&u)?;
        let next = u.axpy(Complex::new(theta, T::zero()), &tu.sub(&u)?)?;
        let norm = next.lp_norm(inf)?;
        let inc = rel(next.sub(&u)?.lp_norm(inf)?, norm);
        u = next;
        trace.push(inc, norm);
        if !norm.is_finite() {
            return Err(Error::NonContraction(format!("iterate overflowed after {} steps", trace.increments.len())));
        }
        if inc <= cfg.tol {
            converged = true;
            break;
        }
        if trace.stalled() {
            if damped {
                break;
            }
            damped = true;
            theta = cfg.fallback_damping;
            trace.ratios.clear();
        }
    }
    trace.finish();
    let tu = map(&u)?;
    trace.residual = rel(u.sub(&tu)?.lp_norm(inf)?, u.lp_norm(inf)?);
    if !converged && !(trace.residual <= cfg.tol * lit(100.0)) {
        return Err(Error::Convergence(format!(
            "sup-norm iteration stagnated (residual {}, damped = {damped})",
            trace.residual
        )));
    }
    Ok(LipschitzSolution {
        u,
        trace,
        contraction_factor: factor,
        contraction_asserted: asserted,
        damped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchConfig<T> {
    pub max_iter: usize,
    pub tol: T,
    /// Corrector stops when the increment grows by this factor.
    pub divergence_factor: T,
    /// Linear extrapolation from the last two accepted steps.
    pub secant_predictor: bool,
}

impl<T: Real> Default for BranchConfig<T> {
    fn default() -> Self {
        BranchConfig {
            max_iter: 200,
            tol: lit(1e-10),
            divergence_factor: lit(1e3),
            secant_predictor: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BranchStep<T: Real> {
    pub mu: T,
    pub u: ComplexField<T>,
    pub iterations: usize,
    pub residual: T,
    pub sup_norm: T,
}

#[derive(Debug, Clone)]
pub struct Branch<T: Real> {
    pub steps: Vec<BranchStep<T>>,
    /// Why continuation stopped early, if it did.
    pub truncated: Option<String>,
}

/// Continuation of `u = R(Q |u|^{p-2} u) + μ φ` along increasing `μ`.
pub fn continue_branch<T: Real>(
    q: &[T],
    p_power: T,
    phi: &ComplexField<T>,
    params: &ResolventParams<T>,
    path: &[T],
    cfg: &BranchConfig<T>,
) -> Result<Branch<T>> {
    phi.expect_space(Space::Physical)?;
    let grid = phi.grid();
    if q.len() != grid.size() || q.iter().any(|&v| v < T::zero()) {
        return Err(Error::Usage("Q must be nonnegative and sampled on the grid".into()));
    }
    if !(p_power > lit(2.0)) {
        return Err(Error::Domain(format!("power p = {p_power} must exceed 2")));
    }
    if path.first().map(|&m| m != T::zero()).unwrap_or(true) {
        return Err(Error::Usage("path must start at 0".into()));
    }
    if path.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Usage("path must increase".into()));
    }
    let res = Resolvent::new(params, grid, false)?;
    let f = WeightedPower { q: q.to_vec(), p: p_power };
    let inf = T::infinity();

    let mut steps: Vec<BranchStep<T>> = vec![BranchStep {
        mu: T::zero(),
        u: ComplexField::zeros(grid, Space::Physical),
        iterations: 0,
        residual: T::zero(),
        sup_norm: T::zero(),
    }];
    for &mu in &path[1..] {
        let forcing = phi.scale(Complex::new(mu, T::zero()));
        let map = |u: &ComplexField<T>| -> Result<ComplexField<T>> {
            forcing.axpy(Complex::new(T::one(), T::zero()), &res.apply(&f.apply(u))?)
        };
        let last = steps.last().expect("nonempty");
        let mut u = match (cfg.secant_predictor, steps.len()) {
            (true, n) if n >= 2 => {
                let prev = &steps[n - 2];
                let w = (mu - last.mu) / (last.mu - prev.mu);
                last.u.axpy(Complex::new(w, T::zero()), &last.u.sub(&prev.u)?)?
            }
            _ => last.u.clone(),
        };
        let mut first_inc = None;
        let mut accepted = None;
        for it in 1..=cfg.max_iter {
            let next = map(&u)?;
            let norm = next.lp_norm(inf)?;
            let inc = rel(next.sub(&u)?.lp_norm(inf)?, norm);
            u = next;
            let base = *first_inc.get_or_insert(inc);
            if !norm.is_finite() || !inc.is_finite() || inc > base * cfg.divergence_factor {
                break;
            }
            if inc <= cfg.tol {
                accepted = Some(it);
                break;
            }
        }
        match accepted {
            Some(iterations) => {
                let residual = rel(u.sub(&map(&u)?)?.lp_norm(inf)?, u.lp_norm(inf)?);
                let sup_norm = u.lp_norm(inf)?;
                steps.push(BranchStep {
                    mu,
                    u,
                    iterations,
                    residual,
                    sup_norm,
                });
            }
            None => {
                return Ok(Branch {
                    steps,
                    truncated: Some(format!("corrector failed at mu = {mu}")),
                })
            }
        }
    }
    Ok(Branch { steps, truncated: None })
}
