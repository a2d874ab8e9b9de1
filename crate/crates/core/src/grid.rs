//! Uniform periodic box, unitary spectral transforms and discrete norms.
//!
//! Physical samples sit at `x_j = -L/2 + j h` on every axis, stored row-major
//! with the last axis fastest. Spectral samples use FFT ordering: index `k'`
//! on an axis stands for the integer frequency `k' - N` when `k' >= N/2`.
//! The transform is `F_k = N^{-n/2} sum_j f_j exp(-i xi_k . x_j)`, so it is
//! unitary on the sample vector and `sqrt(h^n sum |F|^2)` is the L2 norm.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Which lattice a field's samples live on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Physical,
    Spectral,
}

struct Cache<T> {
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
    xi_norm: OnceLock<Vec<T>>,
    x_norm: OnceLock<Vec<T>>,
}

/// An `n`-dimensional periodic box `[-L/2, L/2)^n` with `N` points per axis.
#[derive(Clone)]
pub struct Grid<T: Real> {
    dim: usize,
    points: usize,
    length: T,
    cache: Arc<Cache<T>>,
}

impl<T: Real> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("points", &self.points)
            .field("length", &self.length)
            .finish()
    }
}

impl<T: Real> PartialEq for Grid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.points == other.points && self.length == other.length
    }
}

impl<T: Real> Grid<T> {
    pub fn new(dim: usize, points: usize, length: T) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if points < 4 || !points.is_power_of_two() {
            return Err(Error::Config(format!(
                "points_per_axis = {points} must be a power of two >= 4"
            )));
        }
        if !(length > T::zero()) || !length.is_finite() {
            return Err(Error::Config("box_length must be positive and finite".into()));
        }
        if points.checked_pow(dim as u32).is_none() {
            return Err(Error::Config("grid too large".into()));
        }
        let mut planner = FftPlanner::new();
        let cache = Cache {
            fwd: planner.plan_fft_forward(points),
            inv: planner.plan_fft_inverse(points),
            xi_norm: OnceLock::new(),
            x_norm: OnceLock::new(),
        };
        Ok(Grid {
            dim,
            points,
            length,
            cache: Arc::new(cache),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    pub fn box_length(&self) -> T {
        self.length
    }

    /// Total number of samples, `N^n`.
    pub fn size(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn spacing(&self) -> T {
        self.length / lit(self.points as f64)
    }

    pub fn freq_spacing(&self) -> T {
        T::TAU() / self.length
    }

    /// Quadrature weight `h^n`.
    pub fn cell_volume(&self) -> T {
        self.spacing().powi(self.dim as i32)
    }

    /// Largest resolved frequency magnitude along an axis, `Δξ N/2`.
    pub fn nyquist(&self) -> T {
        self.freq_spacing() * lit((self.points / 2) as f64)
    }

    /// Factor `c` with `f̂(ξ_k) ≈ c F_k` for the unitary continuum transform
    /// `(2π)^{-n/2} ∫ f e^{-iξx} dx`.
    pub fn continuum_scale(&self) -> T {
        let n = self.dim as i32;
        let np: T = lit(self.points as f64);
        self.cell_volume() * np.powf(lit(self.dim as f64 / 2.0)) / T::TAU().powf(lit(n as f64 / 2.0))
    }

    /// Multi-index of a flat position.
    pub fn unravel(&self, mut idx: usize, out: &mut [usize]) {
        for a in (0..self.dim).rev() {
            out[a] = idx % self.points;
            idx /= self.points;
        }
    }

    /// Flat position of a multi-index (entries taken modulo `N`).
    pub fn ravel(&self, index: &[i64]) -> usize {
        let np = self.points as i64;
        index
            .iter()
            .fold(0usize, |acc, &i| acc * self.points + i.rem_euclid(np) as usize)
    }

    /// Physical coordinate of lattice index `j` on one axis.
    pub fn coord(&self, j: usize) -> T {
        -self.length / lit(2.0) + self.spacing() * lit(j as f64)
    }

    /// Physical position of a flat index.
    pub fn position(&self, idx: usize, out: &mut [T]) {
        let mut m = vec![0usize; self.dim];
        self.unravel(idx, &mut m);
        for a in 0..self.dim {
            out[a] = self.coord(m[a]);
        }
    }

    /// Signed integer frequency of FFT-ordered index `k`.
    pub fn signed_freq(&self, k: usize) -> i64 {
        if k < self.points / 2 {
            k as i64
        } else {
            k as i64 - self.points as i64
        }
    }

    /// Frequency vector of a flat spectral index.
    pub fn frequency(&self, idx: usize, out: &mut [T]) {
        let mut m = vec![0usize; self.dim];
        self.unravel(idx, &mut m);
        let dxi = self.freq_spacing();
        for a in 0..self.dim {
            out[a] = dxi * lit(self.signed_freq(m[a]) as f64);
        }
    }

    /// `|ξ|` for every spectral sample (cached).
    pub fn xi_norms(&self) -> &[T] {
        self.cache.xi_norm.get_or_init(|| {
            let dxi = self.freq_spacing();
            let sq: Vec<T> = (0..self.points)
                .map(|k| {
                    let v = dxi * lit(self.signed_freq(k) as f64);
                    v * v
                })
                .collect();
            self.radial_table(&sq)
        })
    }

    /// `|x|` for every physical sample (cached).
    pub fn x_norms(&self) -> &[T] {
        self.cache.x_norm.get_or_init(|| {
            let sq: Vec<T> = (0..self.points)
                .map(|j| {
                    let v = self.coord(j);
                    v * v
                })
                .collect();
            self.radial_table(&sq)
        })
    }

    fn radial_table(&self, sq: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.size()];
        let mut m = vec![0usize; self.dim];
        for (idx, o) in out.iter_mut().enumerate() {
            self.unravel(idx, &mut m);
            *o = m.iter().map(|&j| sq[j]).sum::<T>().sqrt();
        }
        out
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.size() {
            return Err(Error::Usage(format!(
                "field has {len} samples, grid expects {}",
                self.size()
            )));
        }
        Ok(())
    }

    /// Unnormalized FFT along every axis, in place.
    fn fft_nd(&self, data: &mut [Complex<T>], inverse: bool) {
        let n = self.points;
        let plan = if inverse {
            &self.cache.inv
        } else {
            &self.cache.fwd
        };
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                let rows = (data.len() / n).max(1);
                let chunk = n * rows.div_ceil(rayon::current_num_threads().max(1)).max(1);
                data.par_chunks_mut(chunk).for_each(|c| plan.process(c));
                continue;
            }
            data.par_chunks_mut(n * stride).for_each(|block| {
                let mut buf = vec![Complex::new(T::zero(), T::zero()); n * stride];
                for j in 0..n {
                    for i in 0..stride {
                        buf[i * n + j] = block[j * stride + i];
                    }
                }
                plan.process(&mut buf);
                for j in 0..n {
                    for i in 0..stride {
                        block[j * stride + i] = buf[i * n + j];
                    }
                }
            });
        }
    }

    /// Sign `(-1)^{k_1 + ... + k_n}` relating centered and FFT-origin phases.
    fn parity(&self, idx: usize) -> bool {
        let mut m = idx;
        let mut s = 0usize;
        for _ in 0..self.dim {
            s += m % self.points;
            m /= self.points;
        }
        s % 2 == 1
    }

    fn apply_phase_and_scale(&self, data: &mut [Complex<T>]) {
        let scale = lit::<T>(self.size() as f64).sqrt().recip();
        data.par_iter_mut().enumerate().for_each(|(i, z)| {
            *z = if self.parity(i) { -*z * scale } else { *z * scale };
        });
    }
}

/// Complex samples on a grid tagged with the lattice they live on.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField<T: Real> {
    grid: Grid<T>,
    values: Vec<Complex<T>>,
    space: Space,
}

impl<T: Real> ComplexField<T> {
    pub fn zeros(grid: &Grid<T>, space: Space) -> Self {
        ComplexField {
            grid: grid.clone(),
            values: vec![Complex::new(T::zero(), T::zero()); grid.size()],
            space,
        }
    }

    pub fn from_values(grid: &Grid<T>, values: Vec<Complex<T>>, space: Space) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(ComplexField {
            grid: grid.clone(),
            values,
            space,
        })
    }

    pub fn from_real(grid: &Grid<T>, values: &[T], space: Space) -> Result<Self> {
        grid.check_len(values.len())?;
        Self::from_values(
            grid,
            values.iter().map(|&v| Complex::new(v, T::zero())).collect(),
            space,
        )
    }

    /// Samples a function of position on the physical lattice.
    pub fn from_fn(grid: &Grid<T>, f: impl Fn(&[T]) -> Complex<T> + Sync) -> Self {
        let values = (0..grid.size())
            .into_par_iter()
            .map_init(
                || vec![T::zero(); grid.dim()],
                |x, i| {
                    grid.position(i, x);
                    f(x)
                },
            )
            .collect();
        ComplexField {
            grid: grid.clone(),
            values,
            space: Space::Physical,
        }
    }

    /// Samples a function of frequency on the spectral lattice.
    pub fn from_spectral_fn(grid: &Grid<T>, f: impl Fn(&[T]) -> Complex<T> + Sync) -> Self {
        let values = (0..grid.size())
            .into_par_iter()
            .map_init(
                || vec![T::zero(); grid.dim()],
                |xi, i| {
                    grid.frequency(i, xi);
                    f(xi)
                },
            )
            .collect();
        ComplexField {
            grid: grid.clone(),
            values,
            space: Space::Spectral,
        }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    pub fn real_part(&self) -> Vec<T> {
        self.values.iter().map(|z| z.re).collect()
    }

    pub fn expect_space(&self, space: Space) -> Result<()> {
        if self.space != space {
            return Err(Error::Usage(format!(
                "expected a {space:?} field, got {:?}",
                self.space
            )));
        }
        Ok(())
    }

    pub fn expect_grid(&self, grid: &Grid<T>) -> Result<()> {
        if &self.grid != grid {
            return Err(Error::Usage("grid mismatch".into()));
        }
        Ok(())
    }

    pub fn to_spectrum(&self) -> Result<Self> {
        self.expect_space(Space::Physical)?;
        let mut v = self.values.clone();
        self.grid.fft_nd(&mut v, false);
        self.grid.apply_phase_and_scale(&mut v);
        Ok(ComplexField {
            grid: self.grid.clone(),
            values: v,
            space: Space::Spectral,
        })
    }

    pub fn from_spectrum(&self) -> Result<Self> {
        self.expect_space(Space::Spectral)?;
        let mut v = self.values.clone();
        self.grid.apply_phase_and_scale(&mut v);
        self.grid.fft_nd(&mut v, true);
        Ok(ComplexField {
            grid: self.grid.clone(),
            values: v,
            space: Space::Physical,
        })
    }

    /// Applies a spectral multiplier given as a function of `|ξ|`.
    pub fn apply_radial_multiplier(&self, m: impl Fn(T) -> Complex<T> + Sync) -> Result<Self> {
        let mut spec = self.to_spectrum()?;
        let xi = self.grid.xi_norms();
        spec.values
            .par_iter_mut()
            .zip(xi.par_iter())
            .for_each(|(z, &r)| *z = *z * m(r));
        spec.from_spectrum()
    }

    /// Multiplies by a precomputed spectral multiplier field.
    pub fn apply_multiplier(&self, m: &ComplexField<T>) -> Result<Self> {
        m.expect_space(Space::Spectral)?;
        m.expect_grid(&self.grid)?;
        let mut spec = self.to_spectrum()?;
        spec.values
            .par_iter_mut()
            .zip(m.values.par_iter())
            .for_each(|(z, &w)| *z = *z * w);
        spec.from_spectrum()
    }

    /// Pointwise product of two fields in the same space.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        other.expect_grid(&self.grid)?;
        other.expect_space(self.space)?;
        let mut out = self.clone();
        out.values
            .par_iter_mut()
            .zip(other.values.par_iter())
            .for_each(|(a, &b)| *a = *a * b);
        Ok(out)
    }

    /// Discrete `L^p` norm with weight `h^n`; `p = ∞` gives the max modulus.
    ///
    /// For a spectral field the same sums are taken over the spectral samples.
    pub fn lp_norm(&self, p: T) -> Result<T> {
        lp_norm_of(&self.grid, self.values.iter().map(|z| z.norm()), p)
    }

    /// `max (1+|x|^2)^{α/2} |f(x)|` over the lattice.
    pub fn weighted_sup_norm(&self, alpha: T) -> Result<T> {
        self.expect_space(Space::Physical)?;
        let half: T = alpha / lit(2.0);
        Ok(self
            .values
            .iter()
            .zip(self.grid.x_norms())
            .map(|(z, &r)| (T::one() + r * r).powf(half) * z.norm())
            .fold(T::zero(), T::max))
    }

    /// Cyclic translation by a lattice vector: `out(x) = self(x - shift h)`.
    pub fn translate(&self, shift: &[i64]) -> Self {
        let g = &self.grid;
        let mut out = vec![Complex::new(T::zero(), T::zero()); g.size()];
        let mut m = vec![0usize; g.dim()];
        let mut target = vec![0i64; g.dim()];
        for (i, &z) in self.values.iter().enumerate() {
            g.unravel(i, &mut m);
            for a in 0..g.dim() {
                target[a] = m[a] as i64 + shift[a];
            }
            out[g.ravel(&target)] = z;
        }
        ComplexField {
            grid: g.clone(),
            values: out,
            space: self.space,
        }
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|z| *z = *z * c);
        out
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: Complex<T>, other: &Self) -> Result<Self> {
        other.expect_grid(&self.grid)?;
        if other.space != self.space {
            return Err(Error::Usage("space mismatch".into()));
        }
        let mut out = self.clone();
        out.values
            .iter_mut()
            .zip(&other.values)
            .for_each(|(a, &b)| *a = *a + b * c);
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(Complex::new(-T::one(), T::zero()), other)
    }

    pub fn map(&self, f: impl Fn(Complex<T>) -> Complex<T> + Sync) -> Self {
        let mut out = self.clone();
        out.values.par_iter_mut().for_each(|z| *z = f(*z));
        out
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }
}

/// Discrete `L^p` norm of a list of moduli sampled on `grid`.
pub fn lp_norm_of<T: Real>(grid: &Grid<T>, moduli: impl Iterator<Item = T>, p: T) -> Result<T> {
    if p.is_nan() || p < T::one() {
        return Err(Error::Domain(format!("p = {p} must satisfy p >= 1")));
    }
    if p.is_infinite() {
        // NaN must propagate; `max` would drop it
        return Ok(moduli.fold(T::zero(), |m, a| if a.is_nan() || m.is_nan() { T::nan() } else { m.max(a) }));
    }
    let sum: T = moduli.map(|a| a.powf(p)).sum();
    Ok((sum * grid.cell_volume()).powf(p.recip()))
}
