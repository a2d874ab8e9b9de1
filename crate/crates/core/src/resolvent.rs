//! The absorbing fractional Helmholtz resolvent as a Fourier multiplier.
//!
//! `R f = F^{-1}[ m F f ]` with `m(ξ) = 1/(|ξ|^{2s} - λ - iε)`.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid, Space};
use crate::scalar::{lit, Real};

/// Dimension, order, spectral parameter and absorption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventParams<T> {
    pub dim: usize,
    pub s: T,
    pub lambda: T,
    pub epsilon: T,
}

impl<T: Real> ResolventParams<T> {
    /// Validated constructor requiring `n/(n+1) <= s < n/2`.
    pub fn new(dim: usize, s: T, lambda: T, epsilon: T) -> Result<Self> {
        let p = Self::relaxed(dim, s, lambda, epsilon)?;
        let nf: T = lit(dim as f64);
        let lo = nf / (nf + T::one());
        if s < lo {
            return Err(Error::Domain(format!(
                "s = {s} violates s >= n/(n+1) = {lo}"
            )));
        }
        if s >= nf / lit(2.0) {
            return Err(Error::Domain(format!("s = {s} violates s < n/2")));
        }
        Ok(p)
    }

    /// Constructor accepting any `s > 0`, for negative-regime experiments.
    pub fn relaxed(dim: usize, s: T, lambda: T, epsilon: T) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        if !(s > T::zero()) || !s.is_finite() {
            return Err(Error::Domain(format!("s = {s} must be positive")));
        }
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(Error::Domain(format!("lambda = {lambda} must be positive")));
        }
        if !(epsilon > T::zero()) || !epsilon.is_finite() {
            return Err(Error::Domain(format!("epsilon = {epsilon} must be positive")));
        }
        Ok(ResolventParams {
            dim,
            s,
            lambda,
            epsilon,
        })
    }

    pub fn with_epsilon(&self, epsilon: T) -> Result<Self> {
        Self::relaxed(self.dim, self.s, self.lambda, epsilon)
    }

    /// Radius `k = λ^{1/(2s)}` of the characteristic sphere.
    pub fn wavenumber(&self) -> T {
        self.lambda.powf((lit::<T>(2.0) * self.s).recip())
    }

    /// `(|ξ|^{2s} - λ - iε)^{-1}` at `|ξ| = r`.
    pub fn symbol(&self, r: T) -> Complex<T> {
        Complex::new(r.powf(lit::<T>(2.0) * self.s) - self.lambda, -self.epsilon).inv()
    }

    /// Smallest absorption the grid resolves: `2 Δξ max(1, 2s k^{2s-1})`.
    pub fn eps_floor(&self, grid: &Grid<T>) -> T {
        let two: T = lit(2.0);
        let slope = two * self.s * self.wavenumber().powf(two * self.s - T::one());
        two * grid.freq_spacing() * slope.max(T::one())
    }

    /// Errors unless the grid matches the dimension and resolves the sphere.
    pub fn check_grid(&self, grid: &Grid<T>) -> Result<()> {
        if grid.dim() != self.dim {
            return Err(Error::Usage(format!(
                "grid dimension {} differs from params dimension {}",
                grid.dim(),
                self.dim
            )));
        }
        let k = self.wavenumber();
        if !(grid.nyquist() > k) {
            return Err(Error::Config(format!(
                "characteristic sphere k = {k} lies outside the resolved band (Δξ N/2 = {})",
                grid.nyquist()
            )));
        }
        Ok(())
    }
}

/// Degree-7 smoothstep on `[0, 1]`, clamped outside.
pub fn smoothstep<T: Real>(t: T) -> T {
    if t <= T::zero() {
        return T::zero();
    }
    if t >= T::one() {
        return T::one();
    }
    let t2 = t * t;
    t2 * t2 * (lit::<T>(35.0) - lit::<T>(84.0) * t + lit::<T>(70.0) * t2 - lit::<T>(20.0) * t2 * t)
}

/// Radial cutoff equal to one up to `inner` and zero from `outer` on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec<T> {
    pub inner: T,
    pub outer: T,
}

impl<T: Real> Default for CutoffSpec<T> {
    fn default() -> Self {
        CutoffSpec {
            inner: lit(5.0 / 8.0),
            outer: lit(0.75),
        }
    }
}

impl<T: Real> CutoffSpec<T> {
    pub fn phi(&self, r: T) -> T {
        T::one() - smoothstep((r - self.inner) / (self.outer - self.inner))
    }
}

/// The multiplier `m` on the spectral lattice.
pub fn build_multiplier<T: Real>(params: &ResolventParams<T>, grid: &Grid<T>) -> Result<ComplexField<T>> {
    params.check_grid(grid)?;
    let values = grid.xi_norms().par_iter().map(|&r| params.symbol(r)).collect();
    ComplexField::from_values(grid, values, Space::Spectral)
}

/// `u = R f`.
pub fn apply_resolvent<T: Real>(f: &ComplexField<T>, params: &ResolventParams<T>) -> Result<ComplexField<T>> {
    f.expect_space(Space::Physical)?;
    let m = build_multiplier(params, f.grid())?;
    f.apply_multiplier(&m)
}

/// The forward operator `(-Δ)^s - λ - iε`, applied spectrally.
pub fn apply_forward<T: Real>(u: &ComplexField<T>, params: &ResolventParams<T>) -> Result<ComplexField<T>> {
    u.expect_space(Space::Physical)?;
    params.check_grid(u.grid())?;
    let two: T = lit(2.0);
    u.apply_radial_multiplier(|r| Complex::new(r.powf(two * params.s) - params.lambda, -params.epsilon))
}

/// `(-Δ)^s u`.
pub fn apply_fractional_laplacian<T: Real>(u: &ComplexField<T>, s: T) -> Result<ComplexField<T>> {
    apply_ds(u, lit::<T>(2.0) * s)
}

/// `D^s u`, the multiplier `|ξ|^s`.
pub fn apply_ds<T: Real>(f: &ComplexField<T>, s: T) -> Result<ComplexField<T>> {
    if !(s >= T::zero()) {
        return Err(Error::Domain(format!("order s = {s} must be nonnegative")));
    }
    f.expect_space(Space::Physical)?;
    f.apply_radial_multiplier(|r| Complex::new(pow0(r, s), T::zero()))
}

/// `r^s` with `0^0 = 1`.
fn pow0<T: Real>(r: T, s: T) -> T {
    if s == T::zero() {
        T::one()
    } else {
        r.powf(s)
    }
}

/// Pieces of `m = m1 + m2 + m3`: `m1` low, `m2` high, `m3` near the sphere.
#[derive(Debug, Clone)]
pub struct SplitMultiplier<T: Real> {
    pub m1: ComplexField<T>,
    pub m2: ComplexField<T>,
    pub m3: ComplexField<T>,
}

/// `m1 = φ(|ξ|/k) m`, `m2 = (1 - φ(|ξ|/(2k))) m`, `m3 = m - m1 - m2`.
pub fn split_multiplier<T: Real>(
    params: &ResolventParams<T>,
    cutoff: &CutoffSpec<T>,
    grid: &Grid<T>,
) -> Result<SplitMultiplier<T>> {
    let m = build_multiplier(params, grid)?;
    let k = params.wavenumber();
    let two: T = lit(2.0);
    let xi = grid.xi_norms();
    let mut m1 = m.clone();
    let mut m2 = m.clone();
    let mut m3 = m.clone();
    for i in 0..grid.size() {
        let z = m.values()[i];
        let a = z * cutoff.phi(xi[i] / k);
        let b = z * (T::one() - cutoff.phi(xi[i] / (two * k)));
        m1.values_mut()[i] = a;
        m2.values_mut()[i] = b;
        m3.values_mut()[i] = z - a - b;
    }
    Ok(SplitMultiplier { m1, m2, m3 })
}

/// A strictly decreasing list of absorptions for the ε → 0 limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsSequence<T> {
    pub values: Vec<T>,
}

impl<T: Real> EpsSequence<T> {
    pub fn geometric(start: T, ratio: T, terms: usize) -> Result<Self> {
        if !(ratio > T::zero() && ratio < T::one()) {
            return Err(Error::Config(format!("ratio {ratio} must lie in (0, 1)")));
        }
        if terms == 0 {
            return Err(Error::Config("need at least one absorption value".into()));
        }
        let values = (0..terms).map(|j| start * ratio.powi(j as i32)).collect();
        Ok(EpsSequence { values })
    }

    /// Sequence ending exactly at the grid's absorption floor.
    pub fn above_floor(params: &ResolventParams<T>, grid: &Grid<T>, ratio: T, terms: usize) -> Result<Self> {
        let floor = params.eps_floor(grid);
        let start = floor / ratio.powi(terms as i32 - 1);
        let mut seq = Self::geometric(start, ratio, terms)?;
        if let Some(last) = seq.values.last_mut() {
            *last = floor;
        }
        Ok(seq)
    }

    pub fn validate(&self, floor: T) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("empty absorption sequence".into()));
        }
        for w in self.values.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::Config("absorption sequence must strictly decrease".into()));
            }
        }
        let tol = floor * lit(1e-12);
        for &e in &self.values {
            if e < floor - tol {
                return Err(Error::Config(format!(
                    "epsilon = {e} is below the grid floor {floor}"
                )));
            }
        }
        Ok(())
    }
}

/// How the ε → 0 extrapolation treats the oscillatory factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Extrapolation<T> {
    /// Polynomial extrapolation of `u_ε` itself.
    Polynomial,
    /// Extrapolates `u_ε exp(-i κ(ε) |x - c|)` with `κ(ε) = (λ+iε)^{1/(2s)}`,
    /// then restores `exp(i k |x - c|)`. `center = None` uses the centroid of
    /// `|f|^2`. Distances are clipped at `L/4`.
    OutgoingPhase { center: Option<Vec<T>> },
}

/// Diagnostics of an ε → 0 extrapolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport<T> {
    pub epsilons: Vec<T>,
    /// `||u_{j+1} - u_j|| / ||u_j||` between consecutive absorptions.
    pub cauchy: Vec<T>,
    /// Relative change of the extrapolant when one more absorption is used.
    pub extrapolant_changes: Vec<T>,
    /// Radius of the ball (about the center) where the limit is trusted.
    pub resolved_radius: T,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct LimitResult<T: Real> {
    pub u_limit: ComplexField<T>,
    pub report: ConvergenceReport<T>,
}

/// Lagrange weights for evaluating the interpolant of nodes `x` at zero.
pub fn weights_at_zero<T: Real>(x: &[T]) -> Vec<T> {
    (0..x.len())
        .map(|j| {
            x.iter()
                .enumerate()
                .filter(|&(m, _)| m != j)
                .fold(T::one(), |acc, (_, &xm)| acc * xm / (xm - x[j]))
        })
        .collect()
}

/// Extrapolated `ε → 0` limit of `R_ε f` over the given absorptions.
pub fn limiting_absorption<T: Real>(
    f: &ComplexField<T>,
    base: &ResolventParams<T>,
    eps: &EpsSequence<T>,
    mode: &Extrapolation<T>,
) -> Result<LimitResult<T>> {
    f.expect_space(Space::Physical)?;
    let grid = f.grid();
    base.check_grid(grid)?;
    eps.validate(base.eps_floor(grid))?;
    let two: T = lit(2.0);

    // distance field used by the phase factor, or None
    let (dist, resolved_radius) = match mode {
        Extrapolation::Polynomial => (None, grid.box_length() / two),
        Extrapolation::OutgoingPhase { center } => {
            let c = match center {
                Some(c) if c.len() == grid.dim() => c.clone(),
                Some(_) => return Err(Error::Usage("center has the wrong dimension".into())),
                None => centroid(f),
            };
            let cap = grid.box_length() / lit(4.0);
            let mut x = vec![T::zero(); grid.dim()];
            let d: Vec<T> = (0..grid.size())
                .map(|i| {
                    grid.position(i, &mut x);
                    let r2: T = x.iter().zip(&c).map(|(a, b)| (*a - *b) * (*a - *b)).sum();
                    r2.sqrt().min(cap)
                })
                .collect();
            (Some(d), cap)
        }
    };

    let exponent = (two * base.s).recip();
    let mut fields = Vec::with_capacity(eps.values.len());
    for &e in &eps.values {
        let p = base.with_epsilon(e)?;
        let mut u = apply_resolvent(f, &p)?;
        if let Some(d) = &dist {
            let kappa = Complex::new(base.lambda, e).powf(exponent);
            u.values_mut()
                .par_iter_mut()
                .zip(d.par_iter())
                .for_each(|(z, &r)| *z = *z * (-Complex::<T>::i() * kappa * r).exp());
        }
        fields.push(u);
    }

    let norm = |v: &ComplexField<T>| -> T { v.lp_norm(two).unwrap_or(T::zero()) };
    let rel = |a: &ComplexField<T>, b: &ComplexField<T>| -> T {
        let d = norm(&a.sub(b).expect("same grid"));
        let s = norm(b);
        if s > T::zero() {
            d / s
        } else {
            d
        }
    };

    let cauchy: Vec<T> = fields.windows(2).map(|w| rel(&w[1], &w[0])).collect();
    let mut extrapolants = Vec::with_capacity(fields.len());
    for j in 1..=fields.len() {
        extrapolants.push(combine(&fields[..j], &weights_at_zero(&eps.values[..j])));
    }
    let changes: Vec<T> = extrapolants.windows(2).map(|w| rel(&w[1], &w[0])).collect();
    let converged = changes.windows(2).all(|w| w[1] <= w[0] || w[1] == T::zero());

    let mut u_limit = extrapolants.pop().expect("nonempty sequence");
    if let Some(d) = &dist {
        let k = base.wavenumber();
        u_limit
            .values_mut()
            .par_iter_mut()
            .zip(d.par_iter())
            .for_each(|(z, &r)| *z = *z * Complex::new(T::zero(), k * r).exp());
    }
    Ok(LimitResult {
        u_limit,
        report: ConvergenceReport {
            epsilons: eps.values.clone(),
            cauchy,
            extrapolant_changes: changes,
            resolved_radius,
            converged,
        },
    })
}

fn combine<T: Real>(fields: &[ComplexField<T>], w: &[T]) -> ComplexField<T> {
    let mut out = ComplexField::zeros(fields[0].grid(), Space::Physical);
    for (u, &c) in fields.iter().zip(w) {
        out.values_mut()
            .iter_mut()
            .zip(u.values())
            .for_each(|(a, &b)| *a = *a + b * c);
    }
    out
}

/// Centroid of `|f|^2` in centered coordinates (origin if `f = 0`).
pub fn centroid<T: Real>(f: &ComplexField<T>) -> Vec<T> {
    let grid = f.grid();
    let mut c = vec![T::zero(); grid.dim()];
    let mut mass = T::zero();
    let mut x = vec![T::zero(); grid.dim()];
    for (i, z) in f.values().iter().enumerate() {
        let w = z.norm_sqr();
        if w == T::zero() {
            continue;
        }
        grid.position(i, &mut x);
        for a in 0..grid.dim() {
            c[a] = c[a] + w * x[a];
        }
        mass = mass + w;
    }
    if mass > T::zero() {
        c.iter_mut().for_each(|v| *v = *v / mass);
    }
    c
}
