//! Gauss–Legendre and spherical quadrature, and Herglotz waves.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid};
use crate::scalar::{lit, Real};

/// Nodes and weights of the `m`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre<T: Real>(m: usize) -> (Vec<T>, Vec<T>) {
    let mut nodes = vec![0.0f64; m];
    let mut weights = vec![0.0f64; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // P_m(x) and P_m'(x) by the three-term recurrence
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 0 { 1.0 } else if m == 1 { x } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = m as f64 * (x * pm - pm1) / (x * x - 1.0);
            let dx = pm / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes.into_iter().map(lit).collect(), weights.into_iter().map(lit).collect())
}

/// Quadrature rule on the unit sphere of `R^3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum SphereRule {
    /// Gauss–Legendre in `cos θ` times the trapezoid rule in `φ`;
    /// exact for polynomials of degree `min(2 polar - 1, azimuth - 1)`.
    GaussProduct { polar: usize, azimuth: usize },
    /// Equal-weight Fibonacci lattice.
    Fibonacci { count: usize },
}

impl Default for SphereRule {
    fn default() -> Self {
        SphereRule::GaussProduct { polar: 17, azimuth: 34 }
    }
}

impl SphereRule {
    /// Unit nodes and positive weights summing to `4π`.
    pub fn nodes<T: Real>(&self) -> Result<(Vec<[T; 3]>, Vec<T>)> {
        let four_pi: T = lit(4.0 * std::f64::consts::PI);
        match *self {
            SphereRule::GaussProduct { polar, azimuth } => {
                if polar == 0 || azimuth == 0 {
                    return Err(Error::Config("sphere rule needs at least one node".into()));
                }
                let (z, wz) = gauss_legendre::<T>(polar);
                let dphi = T::TAU() / lit(azimuth as f64);
                let mut nodes = Vec::with_capacity(polar * azimuth);
                let mut weights = Vec::with_capacity(polar * azimuth);
                for (&c, &w) in z.iter().zip(&wz) {
                    let s = (T::one() - c * c).max(T::zero()).sqrt();
                    for j in 0..azimuth {
                        let phi = dphi * lit(j as f64);
                        nodes.push([s * phi.cos(), s * phi.sin(), c]);
                        weights.push(w * dphi);
                    }
                }
                Ok((nodes, weights))
            }
            SphereRule::Fibonacci { count } => {
                if count == 0 {
                    return Err(Error::Config("sphere rule needs at least one node".into()));
                }
                let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
                let nodes = (0..count)
                    .map(|i| {
                        let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
                        let r = (1.0 - z * z).sqrt();
                        let phi = golden * i as f64;
                        [lit(r * phi.cos()), lit(r * phi.sin()), lit(z)]
                    })
                    .collect();
                Ok((nodes, vec![four_pi / lit(count as f64); count]))
            }
        }
    }
}

/// Density `h` on the sphere nodes and the wavenumber of the wave.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HerglotzSpec<T> {
    pub nodes: Vec<[T; 3]>,
    pub weights: Vec<T>,
    pub density: Vec<Complex<T>>,
    pub k: T,
}

impl<T: Real> HerglotzSpec<T> {
    /// Constant density `c` on the given rule.
    pub fn uniform(rule: SphereRule, k: T, c: Complex<T>) -> Result<Self> {
        let (nodes, weights) = rule.nodes()?;
        let density = vec![c; nodes.len()];
        Ok(HerglotzSpec {
            nodes,
            weights,
            density,
            k,
        })
    }

    /// Density `h(ω) = Σ_j c_j exp(-|ω - ω_j|²/(2 width²))` with random
    /// centers `ω_j` and complex coefficients of modulus at most one.
    pub fn random(rule: SphereRule, k: T, bumps: usize, width: T, seed: u64) -> Result<Self> {
        let (nodes, weights) = rule.nodes::<T>()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut centers = Vec::with_capacity(bumps);
        for _ in 0..bumps {
            let z: f64 = rng.gen::<f64>() * 2.0 - 1.0;
            let phi: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
            let r = (1.0 - z * z).sqrt();
            let c = Complex::from_polar(lit::<T>(rng.gen::<f64>()), lit::<T>(rng.gen::<f64>() * std::f64::consts::TAU));
            centers.push(([lit::<T>(r * phi.cos()), lit(r * phi.sin()), lit(z)], c));
        }
        let two: T = lit(2.0);
        let density = nodes
            .iter()
            .map(|w| {
                centers.iter().fold(Complex::new(T::zero(), T::zero()), |acc, (c, a)| {
                    let d2: T = (0..3).map(|i| (w[i] - c[i]) * (w[i] - c[i])).sum();
                    acc + *a * (-d2 / (two * width * width)).exp()
                })
            })
            .collect();
        Ok(HerglotzSpec {
            nodes,
            weights,
            density,
            k,
        })
    }

    /// One node with unit weight and density one: a plane wave `e^{ik ω·x}`.
    pub fn plane_wave(direction: [T; 3], k: T) -> Self {
        HerglotzSpec {
            nodes: vec![direction],
            weights: vec![T::one()],
            density: vec![Complex::new(T::one(), T::zero())],
            k,
        }
    }

    pub fn scaled(mut self, c: Complex<T>) -> Self {
        self.density.iter_mut().for_each(|d| *d = *d * c);
        self
    }
}

/// `φ(x) = Σ_j w_j h(ω_j) e^{ik ω_j·x}` on a three-dimensional grid.
pub fn herglotz_wave<T: Real>(spec: &HerglotzSpec<T>, grid: &Grid<T>) -> Result<ComplexField<T>> {
    if grid.dim() != 3 {
        return Err(Error::Usage(format!("Herglotz waves need n = 3, got {}", grid.dim())));
    }
    if !(spec.k > T::zero()) || !(spec.k < grid.nyquist()) {
        return Err(Error::Config(format!(
            "wavenumber {} lies outside the resolved band (0, {})",
            spec.k,
            grid.nyquist()
        )));
    }
    if spec.weights.len() != spec.nodes.len() || spec.density.len() != spec.nodes.len() {
        return Err(Error::Usage("nodes, weights and density differ in length".into()));
    }
    let coef: Vec<(Complex<T>, [T; 3])> = spec
        .nodes
        .iter()
        .zip(&spec.weights)
        .zip(&spec.density)
        .map(|((w, &q), &h)| (h * q, [w[0] * spec.k, w[1] * spec.k, w[2] * spec.k]))
        .collect();
    let mut values = vec![Complex::new(T::zero(), T::zero()); grid.size()];
    values.par_iter_mut().enumerate().for_each(|(i, v)| {
        let mut x = [T::zero(); 3];
        grid.position(i, &mut x);
        let mut acc = Complex::new(T::zero(), T::zero());
        for (c, kw) in &coef {
            let phase = kw[0] * x[0] + kw[1] * x[1] + kw[2] * x[2];
            acc = acc + *c * Complex::new(phase.cos(), phase.sin());
        }
        *v = acc;
    });
    ComplexField::from_values(grid, values, crate::grid::Space::Physical)
}
