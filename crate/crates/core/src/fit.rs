//! Least-squares line fits for scaling laws.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// `y ≈ slope x + intercept` with the root-mean-square residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit<T> {
    pub slope: T,
    pub intercept: T,
    pub residual: T,
    pub points: usize,
}

/// Ordinary least squares; `None` with fewer than two distinct abscissae.
pub fn fit_line<T: Real>(x: &[T], y: &[T]) -> Option<LineFit<T>> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let nf = T::from_usize(n)?;
    let mx = x[..n].iter().copied().sum::<T>() / nf;
    let my = y[..n].iter().copied().sum::<T>() / nf;
    let sxx: T = x[..n].iter().map(|&a| (a - mx) * (a - mx)).sum();
    if sxx <= T::zero() {
        return None;
    }
    let sxy: T = x[..n].iter().zip(&y[..n]).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: T = x[..n]
        .iter()
        .zip(&y[..n])
        .map(|(&a, &b)| {
            let r = b - slope * a - intercept;
            r * r
        })
        .sum();
    Some(LineFit {
        slope,
        intercept,
        residual: (ss / nf).sqrt(),
        points: n,
    })
}

/// Fit of `log y` against `log x`, skipping nonpositive entries.
pub fn fit_loglog<T: Real>(x: &[T], y: &[T]) -> Option<LineFit<T>> {
    let (lx, ly): (Vec<T>, Vec<T>) = x
        .iter()
        .zip(y)
        .filter(|(&a, &b)| a > T::zero() && b > T::zero())
        .map(|(&a, &b)| (a.ln(), b.ln()))
        .unzip();
    fit_line(&lx, &ly)
}
