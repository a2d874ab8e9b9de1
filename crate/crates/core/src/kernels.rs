//! Synthesized resolvent kernels, envelope checks and the sphere/remainder split.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_loglog, LineFit};
use crate::grid::{ComplexField, Grid, Space};
use crate::resolvent::{build_multiplier, smoothstep, ResolventParams};
use crate::scalar::{lit, Real};

/// Inverse transform of a spectral multiplier with continuum normalization,
/// `K(x) = (2π)^{-n} ∫ m(ξ) e^{iξx} dξ`, centered at the origin sample.
pub fn synthesize_kernel<T: Real>(multiplier: &ComplexField<T>) -> Result<ComplexField<T>> {
    multiplier.expect_space(Space::Spectral)?;
    let g = multiplier.grid();
    let scale = lit::<T>(g.size() as f64).sqrt() / g.box_length().powi(g.dim() as i32);
    Ok(multiplier.from_spectrum()?.scale(Complex::new(scale, T::zero())))
}

/// The resolvent kernel `K` of the current parameters.
pub fn resolvent_kernel<T: Real>(params: &ResolventParams<T>, grid: &Grid<T>) -> Result<ComplexField<T>> {
    synthesize_kernel(&build_multiplier(params, grid)?)
}

/// `C r^{a}` below the crossover radius and `C' r^{b}` above it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelEnvelope<T> {
    pub c_small: T,
    pub exp_small: T,
    pub c_large: T,
    pub exp_large: T,
    pub crossover_radius: T,
}

impl<T: Real> KernelEnvelope<T> {
    /// Unit-constant envelope with exponents `2s - n` and `(1-n)/2`.
    pub fn for_order(dim: usize, s: T) -> Self {
        let n: T = lit(dim as f64);
        KernelEnvelope {
            c_small: T::one(),
            exp_small: lit::<T>(2.0) * s - n,
            c_large: T::one(),
            exp_large: (T::one() - n) / lit(2.0),
            crossover_radius: T::one(),
        }
    }

    pub fn eval(&self, r: T) -> T {
        if r <= self.crossover_radius {
            self.c_small * r.powf(self.exp_small)
        } else {
            self.c_large * r.powf(self.exp_large)
        }
    }
}

/// One kernel sample along a ray.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSample<T> {
    pub r: T,
    pub value: Complex<T>,
    pub envelope: T,
}

impl<T: Real> KernelSample<T> {
    pub fn ratio(&self) -> T {
        self.value.norm() / self.envelope
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport<T> {
    pub small_max_ratio: T,
    pub large_max_ratio: T,
    pub samples: Vec<KernelSample<T>>,
}

impl<T: Real> EnvelopeReport<T> {
    pub fn finite(&self) -> bool {
        self.small_max_ratio.is_finite() && self.large_max_ratio.is_finite()
    }

    /// Report recomputed over the samples whose radius appears in `radii`.
    pub fn restricted_to(&self, radii: &[T], crossover: T) -> Self {
        let tol: T = lit(1e-9);
        let samples: Vec<KernelSample<T>> = self
            .samples
            .iter()
            .filter(|s| radii.iter().any(|&r| (r - s.r).abs() <= tol * r))
            .copied()
            .collect();
        let pick = |small: bool| {
            samples
                .iter()
                .filter(|s| (s.r <= crossover) == small)
                .map(|s| s.ratio())
                .fold(T::zero(), T::max)
        };
        EnvelopeReport {
            small_max_ratio: pick(true),
            large_max_ratio: pick(false),
            samples,
        }
    }

    /// Both regime constants agree with `other` within relative `tol`.
    pub fn agrees_with(&self, other: &Self, tol: T) -> bool {
        let close = |a: T, b: T| (a - b).abs() <= tol * a.max(b);
        close(self.small_max_ratio, other.small_max_ratio) && close(self.large_max_ratio, other.large_max_ratio)
    }
}

/// Lattice points on the rays through the origin along `(1,0,..)`,
/// `(1,1,0,..)` and `(1,..,1)`, excluding the origin, with `|x| <= L/2`.
/// Returns `(|x|, flat index)`.
pub fn ray_samples<T: Real>(grid: &Grid<T>) -> Vec<(T, usize)> {
    let n = grid.dim();
    let half = (grid.points_per_axis() / 2) as i64;
    let mut dirs = vec![1usize, 2.min(n), n];
    dirs.dedup();
    let mut out = Vec::new();
    for ones in dirs {
        for j in 1..half {
            let idx: Vec<i64> = (0..n).map(|a| half + if a < ones { j } else { 0 }).collect();
            let r = grid.spacing() * lit::<T>(((ones as i64) * j * j) as f64).sqrt();
            if r <= grid.box_length() / lit(2.0) {
                out.push((r, grid.ravel(&idx)));
            }
        }
    }
    out
}

/// Ratios `|K|/envelope` along the sampling rays.
pub fn check_envelope_of<T: Real>(kernel: &ComplexField<T>, envelope: &KernelEnvelope<T>) -> Result<EnvelopeReport<T>> {
    kernel.expect_space(Space::Physical)?;
    let mut small = T::zero();
    let mut large = T::zero();
    let mut samples = Vec::new();
    for (r, idx) in ray_samples(kernel.grid()) {
        let s = KernelSample {
            r,
            value: kernel.values()[idx],
            envelope: envelope.eval(r),
        };
        if r <= envelope.crossover_radius {
            small = small.max(s.ratio());
        } else {
            large = large.max(s.ratio());
        }
        samples.push(s);
    }
    Ok(EnvelopeReport {
        small_max_ratio: small,
        large_max_ratio: large,
        samples,
    })
}

fn check_absorption<T: Real>(params: &ResolventParams<T>, grid: &Grid<T>) -> Result<()> {
    params.check_grid(grid)?;
    let floor = params.eps_floor(grid);
    if params.epsilon < floor {
        return Err(Error::Config(format!(
            "epsilon = {} is below the grid floor {floor}",
            params.epsilon
        )));
    }
    if params.epsilon * grid.box_length() < lit(4.0) {
        return Err(Error::Config(format!(
            "epsilon * L = {} violates epsilon * L >= 4",
            params.epsilon * grid.box_length()
        )));
    }
    Ok(())
}

/// Synthesizes the resolvent kernel and measures it against `envelope`.
pub fn check_kernel_envelope<T: Real>(
    params: &ResolventParams<T>,
    grid: &Grid<T>,
    envelope: &KernelEnvelope<T>,
) -> Result<EnvelopeReport<T>> {
    let expected = KernelEnvelope::for_order(params.dim, params.s);
    let tol: T = lit(1e-12);
    if (envelope.exp_small - expected.exp_small).abs() > tol || (envelope.exp_large - expected.exp_large).abs() > tol {
        return Err(Error::Config(format!(
            "envelope exponents ({}, {}) differ from 2s-n = {} and (1-n)/2 = {}",
            envelope.exp_small, envelope.exp_large, expected.exp_small, expected.exp_large
        )));
    }
    check_absorption(params, grid)?;
    check_envelope_of(&resolvent_kernel(params, grid)?, envelope)
}

/// Annulus cutoff `ψ̂`: one on `||ξ|/k - 1| <= plateau`, zero beyond `support`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitKernelSpec<T> {
    pub psi_plateau: T,
    pub psi_support: T,
}

impl<T: Real> Default for SplitKernelSpec<T> {
    fn default() -> Self {
        SplitKernelSpec {
            psi_plateau: lit(1.0 / 6.0),
            psi_support: lit(0.25),
        }
    }
}

impl<T: Real> SplitKernelSpec<T> {
    /// `ψ̂` at normalized radius `t = |ξ|/k`.
    pub fn psi(&self, t: T) -> T {
        let d = (t - T::one()).abs();
        T::one() - smoothstep((d - self.psi_plateau) / (self.psi_support - self.psi_plateau))
    }
}

/// Log-log fits and bound constants of the split kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport<T> {
    pub k2_small_fit: Option<LineFit<T>>,
    pub k2_large_fit: Option<LineFit<T>>,
    pub k1_large_fit: Option<LineFit<T>>,
    /// `max |K2| r^{n-2s}` over `r <= 1`.
    pub k2_small_constant: T,
    /// `max |K2| r^{n}` over `r > 1`.
    pub k2_large_constant: T,
    /// `max |K1| (1+r)^{(n-1)/2}`.
    pub k1_constant: T,
    pub samples: Vec<(T, T, T)>,
}

#[derive(Debug, Clone)]
pub struct SplitKernel<T: Real> {
    pub k1: ComplexField<T>,
    pub k2: ComplexField<T>,
    /// Spectral multiplier of `K2`, `(1 - ψ̂) m`.
    pub k2_hat: ComplexField<T>,
    pub report: DecayReport<T>,
}

/// `K = K1 + K2` with `K̂1 = ψ̂(|ξ|/k) m` and `K̂2 = (1 - ψ̂) m`.
pub fn split_kernel<T: Real>(
    params: &ResolventParams<T>,
    spec: &SplitKernelSpec<T>,
    grid: &Grid<T>,
) -> Result<SplitKernel<T>> {
    check_absorption(params, grid)?;
    let m = build_multiplier(params, grid)?;
    let k = params.wavenumber();
    let mut m1 = m.clone();
    let mut m2 = m.clone();
    for ((a, b), &r) in m1
        .values_mut()
        .iter_mut()
        .zip(m2.values_mut().iter_mut())
        .zip(grid.xi_norms())
    {
        let w = spec.psi(r / k);
        *a = *a * w;
        *b = *b * (T::one() - w);
    }
    let k1 = synthesize_kernel(&m1)?;
    let k2 = synthesize_kernel(&m2)?;

    let n: T = lit(grid.dim() as f64);
    let two: T = lit(2.0);
    let lower = two * grid.spacing();
    let (mut xs, mut ys, mut xl, mut yl, mut x1, mut y1) = (vec![], vec![], vec![], vec![], vec![], vec![]);
    let (mut c_small, mut c_large, mut c1) = (T::zero(), T::zero(), T::zero());
    let mut samples = Vec::new();
    for (r, idx) in ray_samples(grid) {
        let a = k1.values()[idx].norm();
        let b = k2.values()[idx].norm();
        samples.push((r, a, b));
        c1 = c1.max(a * (T::one() + r).powf((n - T::one()) / two));
        if r <= T::one() {
            c_small = c_small.max(b * r.powf(n - two * params.s));
            if r >= lower {
                xs.push(r);
                ys.push(b);
            }
        } else {
            c_large = c_large.max(b * r.powf(n));
            xl.push(r);
            yl.push(b);
            x1.push(r);
            y1.push(a);
        }
    }
    Ok(SplitKernel {
        k1,
        k2,
        k2_hat: m2,
        report: DecayReport {
            k2_small_fit: fit_loglog(&xs, &ys),
            k2_large_fit: fit_loglog(&xl, &yl),
            k1_large_fit: fit_loglog(&x1, &y1),
            k2_small_constant: c_small,
            k2_large_constant: c_large,
            k1_constant: c1,
            samples,
        },
    })
}
