//! Dual variational formulation for real solutions of
//! `(-Δ)^s u - λ u = Q |u|^{p-2} u`.
//!
//! The dual variable is `v = Q^{1/p'} |u|^{p-2} u`; critical points of
//! `J(v) = ||v||_{p'}^{p'} / p' - <v, K_p v> / 2` give solutions through
//! `u = Ψ(Q^{1/p} v)`, where `Ψ` is the real part of the resolvent.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid, Space};
use crate::linalg::{gmres, GmresConfig};
use crate::resolvent::ResolventParams;
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum WeightKind<T> {
    /// `exp(1 - 1/(1 - |x|²/r²))` inside the ball of radius `r`.
    BumpCompact { radius: T },
    /// `(1 + |x|²)^{-decay/2}`.
    Decaying { decay: T },
    /// `1 + amplitude Π cos(2π x_i / ℓ)` with `ℓ = L / cells`.
    PeriodicCell { cells: usize, amplitude: T },
    Constant { value: T },
}

/// Nonnegative weight `Q` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightQ<T: Real> {
    pub kind: WeightKind<T>,
    samples: Vec<T>,
}

impl<T: Real> WeightQ<T> {
    pub fn new(kind: WeightKind<T>, grid: &Grid<T>) -> Result<Self> {
        let one = T::one();
        let samples: Vec<T> = match kind {
            WeightKind::BumpCompact { radius } => {
                if !(radius > T::zero()) {
                    return Err(Error::Config(format!("bump radius {radius} must be positive")));
                }
                grid.x_norms()
                    .iter()
                    .map(|&r| {
                        let t = r / radius;
                        if t < one {
                            (one - (one - t * t).recip()).exp()
                        } else {
                            T::zero()
                        }
                    })
                    .collect()
            }
            WeightKind::Decaying { decay } => {
                if !(decay > T::zero()) {
                    return Err(Error::Config(format!("decay {decay} must be positive")));
                }
                let half = decay / lit(2.0);
                grid.x_norms().iter().map(|&r| (one + r * r).powf(-half)).collect()
            }
            WeightKind::PeriodicCell { cells, amplitude } => {
                if cells == 0 || grid.points_per_axis() % cells != 0 {
                    return Err(Error::Config(format!(
                        "{cells} cells do not divide {} points per axis",
                        grid.points_per_axis()
                    )));
                }
                if !(amplitude.abs() <= one) {
                    return Err(Error::Config(format!("|amplitude| = {} must not exceed 1", amplitude.abs())));
                }
                let k = T::TAU() * lit(cells as f64) / grid.box_length();
                let mut x = vec![T::zero(); grid.dim()];
                (0..grid.size())
                    .map(|i| {
                        grid.position(i, &mut x);
                        one + amplitude * x.iter().map(|&xi| (k * xi).cos()).fold(one, |a, c| a * c)
                    })
                    .collect()
            }
            WeightKind::Constant { value } => vec![value; grid.size()],
        };
        if samples.iter().any(|&q| !(q >= T::zero())) {
            return Err(Error::Config("Q must be nonnegative".into()));
        }
        if samples.iter().all(|&q| q == T::zero()) {
            return Err(Error::Config("Q vanishes on the whole grid".into()));
        }
        Ok(WeightQ { kind, samples })
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    /// Lattice shift of one period, if the weight is periodic.
    pub fn cell_points(&self, grid: &Grid<T>) -> Option<usize> {
        match self.kind {
            WeightKind::PeriodicCell { cells, .. } => Some(grid.points_per_axis() / cells),
            WeightKind::Constant { .. } => Some(1),
            _ => None,
        }
    }
}

/// Operator `K_p`, functional `J` and its gradient on a fixed grid.
#[derive(Debug, Clone)]
pub struct DualProblem<T: Real> {
    grid: Grid<T>,
    pub weight: WeightQ<T>,
    pub params: ResolventParams<T>,
    pub p: T,
    pub p_conj: T,
    /// Real multiplier `Ψ(ξ)`.
    psi: Vec<T>,
    q_root_p: Vec<T>,
    q_root_pconj: Vec<T>,
}

impl<T: Real> DualProblem<T> {
    /// `Ψ = Re m_ε`, or `Re(2 m_ε - m_{2ε})` with `richardson`.
    pub fn new(grid: &Grid<T>, weight: WeightQ<T>, params: &ResolventParams<T>, p: T, richardson: bool) -> Result<Self> {
        params.check_grid(grid)?;
        if weight.samples.len() != grid.size() {
            return Err(Error::Usage("weight sampled on a different grid".into()));
        }
        let n: T = lit(grid.dim() as f64);
        let lo = lit::<T>(2.0) * (n + T::one()) / (n - T::one());
        let two_s = lit::<T>(2.0) * params.s;
        let hi = if n > two_s { lit::<T>(2.0) * n / (n - two_s) } else { T::infinity() };
        if !(p > lo && p < hi) {
            return Err(Error::Domain(format!("p = {p} violates 2(n+1)/(n-1) = {lo} < p < 2n/(n-2s) = {hi}")));
        }
        let eps = params.epsilon;
        let two: T = lit(2.0);
        let psi = grid
            .xi_norms()
            .iter()
            .map(|&r| {
                let d = r.powf(two * params.s) - params.lambda;
                let re = |e: T| d / (d * d + e * e);
                if richardson {
                    two * re(eps) - re(two * eps)
                } else {
                    re(eps)
                }
            })
            .collect();
        let p_conj = p / (p - T::one());
        let q_root_p = weight.samples.iter().map(|&q| q.powf(p.recip())).collect();
        let q_root_pconj = weight.samples.iter().map(|&q| q.powf(p_conj.recip())).collect();
        Ok(DualProblem {
            grid: grid.clone(),
            weight,
            params: *params,
            p,
            p_conj,
            psi,
            q_root_p,
            q_root_pconj,
        })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn multiplier(&self) -> &[T] {
        &self.psi
    }

    fn check(&self, v: &[T]) -> Result<()> {
        if v.len() != self.grid.size() {
            return Err(Error::Usage(format!("field has {} samples, grid has {}", v.len(), self.grid.size())));
        }
        Ok(())
    }

    /// `Ψ f` for real `f`.
    fn apply_psi(&self, f: &[T]) -> Vec<T> {
        let field = ComplexField::from_real(&self.grid, f, Space::Physical).expect("length checked");
        let mut fh = field.to_spectrum().expect("physical");
        fh.values_mut().par_iter_mut().zip(&self.psi).for_each(|(z, &m)| *z = *z * m);
        fh.from_spectrum().expect("spectral").real_part()
    }

    pub fn apply_kp(&self, v: &[T]) -> Result<Vec<T>> {
        self.check(v)?;
        Ok(self.kp(v))
    }

    fn kp(&self, v: &[T]) -> Vec<T> {
        let f: Vec<T> = v.iter().zip(&self.q_root_p).map(|(&a, &q)| a * q).collect();
        self.apply_psi(&f).iter().zip(&self.q_root_p).map(|(&a, &q)| a * q).collect()
    }

    /// `Σ a b hⁿ`.
    pub fn inner(&self, a: &[T], b: &[T]) -> T {
        a.iter().zip(b).map(|(&x, &y)| x * y).sum::<T>() * self.grid.cell_volume()
    }

    pub fn norm(&self, v: &[T], r: T) -> T {
        let h = self.grid.cell_volume();
        if r.is_infinite() {
            return v.iter().fold(T::zero(), |m, &a| m.max(a.abs()));
        }
        (v.iter().map(|&a| a.abs().powf(r)).sum::<T>() * h).powf(r.recip())
    }

    /// `|v|^{p'-2} v`, zero where `v = 0`.
    pub fn duality_map(&self, v: &[T]) -> Vec<T> {
        let e = self.p_conj - T::one();
        v.iter().map(|&a| if a == T::zero() { T::zero() } else { a.signum() * a.abs().powf(e) }).collect()
    }

    /// Inverse of the duality map: `|w|^{p-2} w`.
    fn inverse_duality(&self, w: &[T]) -> Vec<T> {
        let e = self.p - T::one();
        // subnormal tails make every later FFT crawl
        let tiny = T::min_positive_value();
        w.iter()
            .map(|&a| {
                let r = a.abs().powf(e);
                if r < tiny {
                    T::zero()
                } else {
                    a.signum() * r
                }
            })
            .collect()
    }

    pub fn eval_j(&self, v: &[T]) -> Result<T> {
        self.check(v)?;
        Ok(self.j_with(v, &self.kp(v)))
    }

    fn j_with(&self, v: &[T], kv: &[T]) -> T {
        let a = self.norm(v, self.p_conj).powf(self.p_conj) / self.p_conj;
        a - self.inner(v, kv) / lit(2.0)
    }

    pub fn grad_j(&self, v: &[T]) -> Result<Vec<T>> {
        self.check(v)?;
        Ok(self.grad_with(v, &self.kp(v)))
    }

    fn grad_with(&self, v: &[T], kv: &[T]) -> Vec<T> {
        self.duality_map(v).iter().zip(kv).map(|(&a, &b)| a - b).collect()
    }

    /// `||grad J(v)||_p / ||v||_{p'}^{p'-1}`, the gradient norm relative to
    /// the size of the duality term.
    pub fn relative_gradient(&self, v: &[T]) -> Result<T> {
        let g = self.grad_j(v)?;
        Ok(self.norm(&g, self.p) / self.norm(v, self.p_conj).powf(self.p_conj - T::one()))
    }

    /// Point of the ray `t v`, `t > 0`, where `J` is largest, if `<v, K_p v> > 0`.
    pub fn ray_peak(&self, v: &[T]) -> Option<T> {
        let b = self.inner(v, &self.kp(v));
        if !(b > T::zero()) {
            return None;
        }
        let a = self.norm(v, self.p_conj).powf(self.p_conj);
        Some((a / b).powf((lit::<T>(2.0) - self.p_conj).recip()))
    }

    /// Embeds a real vector as a physical field.
    pub fn to_field(&self, v: &[T]) -> Result<ComplexField<T>> {
        ComplexField::from_real(&self.grid, v, Space::Physical)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MountainPassConfig<T> {
    /// Number of distinct `±v` pairs requested.
    pub pairs: usize,
    /// Accept a critical point once the relative gradient is below this.
    pub tol: T,
    pub power_iter: usize,
    pub power_tol: T,
    pub newton_iter: usize,
    /// Newton keeps going down to this level before it stops.
    pub newton_tol: T,
    pub gmres: GmresSettings<T>,
    /// Random directions sampled on the small sphere.
    pub sphere_samples: usize,
    /// Relative amplitude of the noise in the starting guesses.
    pub noise: T,
    /// Restarts allowed per requested pair.
    pub restarts: usize,
    pub seed: u64,
    /// Shift the iterate by whole periods so its centroid sits in the
    /// central cell (periodic weights only).
    pub recenter: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmresSettings<T> {
    pub tol: T,
    pub restart: usize,
    pub max_iter: usize,
}

impl<T: Real> Default for MountainPassConfig<T> {
    fn default() -> Self {
        MountainPassConfig {
            pairs: 1,
            tol: lit(1e-5),
            power_iter: 300,
            power_tol: lit(1e-4),
            newton_iter: 20,
            newton_tol: lit(1e-10),
            gmres: GmresSettings {
                tol: lit(1e-10),
                restart: 100,
                max_iter: 500,
            },
            sphere_samples: 32,
            noise: lit(0.1),
            restarts: 4,
            seed: 0,
            recenter: true,
        }
    }
}

/// One iterate of the critical-point search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsEntry<T> {
    pub j: T,
    /// `||grad J||_p`.
    pub grad_norm: T,
    /// `||v||_{p'}`.
    pub norm: T,
    /// `||v||_{p'}^{p'} <= (1/p' - 1/2)^{-1} (sup J + ||grad|| ||v||)`.
    pub bounded: bool,
}

#[derive(Debug, Clone)]
pub struct CriticalPair<T: Real> {
    /// One representative; `-v` is the other member of the pair.
    pub v: Vec<T>,
    pub j: T,
    pub relative_gradient: T,
    pub norm: T,
    pub trace: Vec<PsEntry<T>>,
    pub newton_steps: usize,
    /// Lattice shift applied by recentering.
    pub shift: Vec<i64>,
}

impl<T: Real> CriticalPair<T> {
    pub fn negated(&self) -> Vec<T> {
        self.v.iter().map(|&a| -a).collect()
    }
}

/// Numerical evidence for the mountain-pass geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate<T> {
    /// Largest sampled `<v, K_p v> / ||v||_{p'}^2`.
    pub operator_constant: T,
    pub rho: T,
    /// `ρ^{p'}/p' - C ρ²/2`.
    pub delta: T,
    pub sphere_min: T,
    pub endpoint_norm: T,
    pub endpoint_j: T,
    pub ps_bounded: bool,
}

#[derive(Debug, Clone)]
pub struct MountainPassResult<T: Real> {
    pub pairs: Vec<CriticalPair<T>>,
    pub certificate: Certificate<T>,
}

fn gaussian_field<T: Real>(rng: &mut ChaCha8Rng, len: usize) -> Vec<T> {
    (0..len).map(|_| lit(rng.sample::<f64, _>(StandardNormal))).collect()
}

/// Shift by whole cells taking the circular centroid of `|v|^{p'}` to the
/// central cell.
fn recenter_shift<T: Real>(problem: &DualProblem<T>, v: &[T], cell: usize) -> Vec<i64> {
    let g = problem.grid();
    let n = g.points_per_axis();
    let mut sums = vec![(0.0f64, 0.0f64); g.dim()];
    let mut idx = vec![0usize; g.dim()];
    let pc = crate::scalar::to_f64(problem.p_conj);
    for (i, &a) in v.iter().enumerate() {
        let w = crate::scalar::to_f64(a).abs().powf(pc);
        g.unravel(i, &mut idx);
        for (s, &j) in sums.iter_mut().zip(&idx) {
            let th = std::f64::consts::TAU * j as f64 / n as f64;
            s.0 += w * th.cos();
            s.1 += w * th.sin();
        }
    }
    sums.iter()
        .map(|&(c, s)| {
            if c == 0.0 && s == 0.0 {
                return 0;
            }
            let j = s.atan2(c).rem_euclid(std::f64::consts::TAU) / std::f64::consts::TAU * n as f64;
            let target = (n / 2) as f64;
            ((target - j) / cell as f64).round() as i64 * cell as i64
        })
        .collect()
}

fn shift_vec<T: Real>(grid: &Grid<T>, v: &[T], shift: &[i64]) -> Vec<T> {
    let f = ComplexField::from_real(grid, v, Space::Physical).expect("length checked");
    f.translate(shift).real_part()
}

/// Finds `pairs` distinct critical pairs `±v` of `J` at positive level.
///
/// Each pair comes from a nonlinear power iteration `v ← N(K_p v)` on the
/// `L^{p'}` sphere (deflated against earlier pairs), a rescale to the
/// maximum of `J` along the ray, and Newton–GMRES on `v = N(K_p v)`.
pub fn mountain_pass_solve<T: Real>(
    problem: &DualProblem<T>,
    cfg: &MountainPassConfig<T>,
    initial: Option<&[T]>,
) -> Result<MountainPassResult<T>> {
    if cfg.pairs == 0 {
        return Err(Error::Config("at least one pair must be requested".into()));
    }
    if let Some(v) = initial {
        problem.check(v)?;
    }
    let grid = problem.grid().clone();
    let size = grid.size();
    let pc = problem.p_conj;
    let half: T = lit(0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let start = |rng: &mut ChaCha8Rng, first: bool| -> Vec<T> {
        let noise = gaussian_field::<T>(rng, size);
        match (first, initial) {
            (true, Some(v)) => v.to_vec(),
            (true, None) => problem.q_root_pconj.iter().zip(&noise).map(|(&q, &z)| q * (T::one() + cfg.noise * z)).collect(),
            _ => problem.q_root_pconj.iter().zip(&noise).map(|(&q, &z)| q * z).collect(),
        }
    };

    let mut found: Vec<CriticalPair<T>> = Vec::new();
    let mut basis: Vec<Vec<T>> = Vec::new();
    let mut endpoint: Option<(T, T)> = None;
    let mut attempts = 0;
    while found.len() < cfg.pairs {
        if attempts > cfg.restarts * cfg.pairs {
            return Err(Error::Convergence(format!(
                "found {} of {} pairs after {attempts} restarts",
                found.len(),
                cfg.pairs
            )));
        }
        let first = attempts == 0;
        attempts += 1;
        let project = |v: &mut Vec<T>| {
            for b in &basis {
                let c = problem.inner(v, b);
                v.iter_mut().zip(b).for_each(|(a, &e)| *a = *a - c * e);
            }
        };
        let mut v = start(&mut rng, first);
        project(&mut v);
        let nv = problem.norm(&v, pc);
        if !(nv > T::zero()) {
            continue;
        }
        v.iter_mut().for_each(|a| *a = *a / nv);

        for _ in 0..cfg.power_iter {
            let mut w = problem.inverse_duality(&problem.kp(&v));
            project(&mut w);
            let nw = problem.norm(&w, pc);
            if !(nw > T::zero()) {
                break;
            }
            w.iter_mut().for_each(|a| *a = *a / nw);
            let d = problem.norm(&w.iter().zip(&v).map(|(&a, &b)| a - b).collect::<Vec<_>>(), pc);
            v = w;
            if d < cfg.power_tol {
                break;
            }
        }
        let Some(t) = problem.ray_peak(&v) else { continue };
        if endpoint.is_none() {
            // J(τ t v) < 0 once τ^{2-p'} > 2/p'
            let tau = (lit::<T>(4.0) / pc).powf((lit::<T>(2.0) - pc).recip());
            let e: Vec<T> = v.iter().map(|&a| a * t * tau).collect();
            endpoint = Some((problem.norm(&e, pc), problem.j_with(&e, &problem.kp(&e))));
        }
        v.iter_mut().for_each(|a| *a = *a * t);
        let shift = match (cfg.recenter, problem.weight.cell_points(&grid)) {
            (true, Some(cell)) => {
                let s = recenter_shift(problem, &v, cell);
                v = shift_vec(&grid, &v, &s);
                s
            }
            _ => vec![0; grid.dim()],
        };

        let (v, trace, steps) = newton(problem, v, cfg);
        let Some(last) = trace.last().copied() else { continue };
        let rel = last.grad_norm / last.norm.powf(pc - T::one());
        if !(rel <= cfg.tol) || !(last.j > T::zero()) {
            continue;
        }
        let distinct = found.iter().all(|f| {
            let scale = problem.norm(&f.v, pc);
            let dp = problem.norm(&v.iter().zip(&f.v).map(|(&a, &b)| a - b).collect::<Vec<_>>(), pc);
            let dm = problem.norm(&v.iter().zip(&f.v).map(|(&a, &b)| a + b).collect::<Vec<_>>(), pc);
            dp.min(dm) > lit::<T>(1e-3) * scale
        });
        if !distinct {
            continue;
        }
        // orthonormal deflation basis in the grid inner product
        let mut e = v.clone();
        project(&mut e);
        let ne = problem.inner(&e, &e).sqrt();
        if ne > T::zero() {
            e.iter_mut().for_each(|a| *a = *a / ne);
            basis.push(e);
        }
        found.push(CriticalPair {
            j: last.j,
            relative_gradient: rel,
            norm: last.norm,
            v,
            trace,
            newton_steps: steps,
            shift,
        });
    }

    let (endpoint_norm, endpoint_j) = endpoint.expect("set with the first pair");
    if !(endpoint_j < T::zero()) {
        return Err(Error::Geometry(format!("endpoint has J = {endpoint_j} >= 0")));
    }

    // operator constant over the critical points and random probes
    let mut c = T::zero();
    let mut probes: Vec<Vec<T>> = found.iter().map(|f| f.v.clone()).collect();
    for _ in 0..cfg.sphere_samples {
        probes.push(start(&mut rng, false));
    }
    for z in &probes {
        let n2 = problem.norm(z, pc).powi(2);
        if n2 > T::zero() {
            c = c.max(problem.inner(z, &problem.kp(z)) / n2);
        }
    }
    let two: T = lit(2.0);
    let rho = half.min(half * (two / (pc * c)).powf((two - pc).recip()));
    let delta = rho.powf(pc) / pc - c * rho * rho / two;
    let mut sphere_min = T::infinity();
    for z in &probes {
        let nz = problem.norm(z, pc);
        if nz > T::zero() {
            let y: Vec<T> = z.iter().map(|&a| a * rho / nz).collect();
            sphere_min = sphere_min.min(problem.j_with(&y, &problem.kp(&y)));
        }
    }
    if !(delta > T::zero() && sphere_min >= delta * (T::one() - lit(1e-9))) {
        return Err(Error::Geometry(format!(
            "sampled minimum {sphere_min} on the sphere of radius {rho} is below δ = {delta}"
        )));
    }
    if let Some(f) = found.iter().find(|f| !(f.j >= delta)) {
        return Err(Error::Geometry(format!("critical level {} is below δ = {delta}", f.j)));
    }
    let ps_bounded = found.iter().all(|f| f.trace.iter().all(|e| e.bounded));
    Ok(MountainPassResult {
        pairs: found,
        certificate: Certificate {
            operator_constant: c,
            rho,
            delta,
            sphere_min,
            endpoint_norm,
            endpoint_j,
            ps_bounded,
        },
    })
}

/// Newton–GMRES on `G(v) = v - N(K_p v)` with `N(w) = |w|^{p-2} w`,
/// globalized by backtracking on `||G||_2`. Stops early when no step
/// along the Newton direction reduces the residual.
fn newton<T: Real>(problem: &DualProblem<T>, mut v: Vec<T>, cfg: &MountainPassConfig<T>) -> (Vec<T>, Vec<PsEntry<T>>, usize) {
    let pc = problem.p_conj;
    let p = problem.p;
    let coeff: T = (pc.recip() - lit(0.5)).recip();
    let mut trace: Vec<PsEntry<T>> = Vec::new();
    let mut sup_j = T::neg_infinity();
    let gcfg = GmresConfig {
        tol: cfg.gmres.tol,
        restart: cfg.gmres.restart,
        max_iter: cfg.gmres.max_iter,
    };
    let residual = |v: &[T], kv: &[T]| -> Vec<T> {
        v.iter().zip(problem.inverse_duality(kv)).map(|(&a, b)| a - b).collect()
    };
    let l2 = |r: &[T]| r.iter().map(|&a| a * a).sum::<T>().sqrt();
    let mut kv = problem.kp(&v);
    let mut steps = 0;
    loop {
        let j = problem.j_with(&v, &kv);
        let g = problem.grad_with(&v, &kv);
        let gn = problem.norm(&g, p);
        let vn = problem.norm(&v, pc);
        sup_j = sup_j.max(j);
        let bounded = vn.powf(pc) <= coeff * (sup_j + gn * vn) * (T::one() + lit(1e-9)) + T::epsilon();
        trace.push(PsEntry {
            j,
            grad_norm: gn,
            norm: vn,
            bounded,
        });
        if !(vn > T::zero()) || !gn.is_finite() {
            return (v, trace, steps);
        }
        let rel = gn / vn.powf(pc - T::one());
        if rel <= cfg.newton_tol || steps >= cfg.newton_iter {
            return (v, trace, steps);
        }
        let rhs: Vec<T> = residual(&v, &kv).iter().map(|&a| -a).collect();
        let merit = l2(&rhs);
        let pm2 = p - lit(2.0);
        let d: Vec<T> = kv.iter().map(|&w| (p - T::one()) * w.abs().powf(pm2)).collect();
        let op = |z: &[T]| -> Vec<T> {
            let kz = problem.kp(z);
            z.iter().zip(&kz).zip(&d).map(|((&a, &b), &di)| a - di * b).collect()
        };
        let dz = gmres(op, &rhs, None, &gcfg).x;
        let mut alpha = T::one();
        let mut accepted = None;
        for _ in 0..8 {
            let trial: Vec<T> = v.iter().zip(&dz).map(|(&a, &b)| a + alpha * b).collect();
            let kt = problem.kp(&trial);
            if l2(&residual(&trial, &kt)) <= (T::one() - lit::<T>(1e-4) * alpha) * merit {
                accepted = Some((trial, kt));
                break;
            }
            alpha = alpha / lit(2.0);
        }
        let Some((nv, nk)) = accepted else {
            return (v, trace, steps);
        };
        v = nv;
        kv = nk;
        steps += 1;
    }
}

#[derive(Debug, Clone)]
pub struct Recovered<T: Real> {
    pub u: ComplexField<T>,
    /// `||v - Q^{1/p'} |u|^{p-2} u||_{p'} / ||v||_{p'}`.
    pub duality_residual: T,
    /// `||((-Δ)^s - λ) u - Q |u|^{p-2} u||_2 / ||Q |u|^{p-2} u||_2`, over
    /// frequencies with `||ξ|^{2s} - λ| >= band ε`.
    pub strong_residual: T,
    pub sup_norm: T,
}

/// `u = Ψ(Q^{1/p} v)` with consistency checks; fails with an
/// inconsistency error when the duality residual exceeds `10 tol`.
pub fn recover_u<T: Real>(problem: &DualProblem<T>, v: &[T], tol: T, band: T) -> Result<Recovered<T>> {
    problem.check(v)?;
    let grid = problem.grid();
    let f: Vec<T> = v.iter().zip(&problem.q_root_p).map(|(&a, &q)| a * q).collect();
    let u = problem.apply_psi(&f);
    let pm2 = problem.p - lit(2.0);
    let vn = problem.norm(v, problem.p_conj);
    let duality_residual = if vn > T::zero() {
        let r: Vec<T> = v
            .iter()
            .zip(&u)
            .zip(&problem.q_root_pconj)
            .map(|((&a, &b), &q)| a - q * b.abs().powf(pm2) * b)
            .collect();
        problem.norm(&r, problem.p_conj) / vn
    } else {
        T::zero()
    };
    if !(duality_residual <= lit::<T>(10.0) * tol) {
        return Err(Error::Inconsistency(format!(
            "duality residual {duality_residual} exceeds {}",
            lit::<T>(10.0) * tol
        )));
    }

    let rhs: Vec<T> = u.iter().zip(problem.weight.samples()).map(|(&b, &q)| q * b.abs().powf(pm2) * b).collect();
    let params = &problem.params;
    let two: T = lit(2.0);
    let uh = ComplexField::from_real(grid, &u, Space::Physical)?.to_spectrum()?;
    let rh = ComplexField::from_real(grid, &rhs, Space::Physical)?.to_spectrum()?;
    let (mut num, mut den) = (T::zero(), T::zero());
    for ((a, b), &r) in uh.values().iter().zip(rh.values()).zip(grid.xi_norms()) {
        let d = r.powf(two * params.s) - params.lambda;
        if d.abs() >= band * params.epsilon {
            num = num + (*a * d - *b).norm_sqr();
            den = den + b.norm_sqr();
        }
    }
    let strong_residual = if den > T::zero() { (num / den).sqrt() } else { num.sqrt() };
    let field = ComplexField::from_values(grid, u.iter().map(|&a| Complex::new(a, T::zero())).collect(), Space::Physical)?;
    let sup_norm = problem.norm(&u, T::infinity());
    Ok(Recovered {
        u: field,
        duality_residual,
        strong_residual,
        sup_norm,
    })
}
