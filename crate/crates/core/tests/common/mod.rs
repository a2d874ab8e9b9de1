//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

pub mod exponents;

use num_complex::Complex64;

/// Outgoing solution of `(-Δ - κ²) u = f` in three dimensions for a radial
/// source, from the radial Green function split
/// `u(r) = [e^{iκr} ∫_0^r ρ f sin(κρ) dρ + sin(κr) ∫_r^∞ ρ f e^{iκρ} dρ] / (κ r)`.
pub struct RadialOutgoing {
    kappa: Complex64,
    step: f64,
    inner: Vec<Complex64>,
    outer: Vec<Complex64>,
}

impl RadialOutgoing {
    pub fn new(kappa: Complex64, f: impl Fn(f64) -> f64, rho_max: f64, step: f64) -> Self {
        let m = (rho_max / step).ceil() as usize;
        let g_in = |rho: f64| rho * f(rho) * (kappa * rho).sin();
        let g_out = |rho: f64| rho * f(rho) * (Complex64::i() * kappa * rho).exp();
        let mut inner = vec![Complex64::new(0.0, 0.0); m + 1];
        for j in 1..=m {
            let (a, b) = ((j - 1) as f64 * step, j as f64 * step);
            inner[j] = inner[j - 1] + simpson(&g_in, a, b);
        }
        let mut outer = vec![Complex64::new(0.0, 0.0); m + 1];
        for j in (0..m).rev() {
            let (a, b) = (j as f64 * step, (j + 1) as f64 * step);
            outer[j] = outer[j + 1] + simpson(&g_out, a, b);
        }
        RadialOutgoing {
            kappa,
            step,
            inner,
            outer,
        }
    }

    fn cumulative(table: &[Complex64], step: f64, r: f64) -> Complex64 {
        let x = r / step;
        let j = x.floor() as usize;
        if j + 1 >= table.len() {
            return table[table.len() - 1];
        }
        let t = x - j as f64;
        table[j] * (1.0 - t) + table[j + 1] * t
    }

    pub fn eval(&self, r: f64) -> Complex64 {
        let k = self.kappa;
        if r < 1e-12 {
            return self.outer[0];
        }
        let a = Self::cumulative(&self.inner, self.step, r);
        let b = Self::cumulative(&self.outer, self.step, r);
        ((Complex64::i() * k * r).exp() * a + (k * r).sin() * b) / (k * r)
    }

    /// Total moment `∫ ρ f sin(κρ) dρ` governing the field outside the source.
    pub fn far_moment(&self) -> Complex64 {
        self.inner[self.inner.len() - 1]
    }

    pub fn eval_far(&self, r: f64) -> Complex64 {
        let k = self.kappa;
        (Complex64::i() * k * r).exp() * self.far_moment() / (k * r)
    }
}

pub fn simpson<F: Fn(f64) -> Complex64>(g: &F, a: f64, b: f64) -> Complex64 {
    let m = 0.5 * (a + b);
    (g(a) + g(m) * 4.0 + g(b)) * ((b - a) / 6.0)
}

/// Relative L2 discrepancy over the masked entries.
pub fn rel_l2(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}
