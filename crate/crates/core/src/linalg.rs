//! Matrix-free Krylov solver for real systems.

use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresConfig<T> {
    /// Stop when `||b - A x|| <= tol ||b||`.
    pub tol: T,
    pub restart: usize,
    pub max_iter: usize,
}

impl<T: Real> Default for GmresConfig<T> {
    fn default() -> Self {
        GmresConfig {
            tol: lit(1e-10),
            restart: 100,
            max_iter: 1000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresResult<T> {
    pub x: Vec<T>,
    /// Relative residual `||b - A x|| / ||b||` of the returned iterate.
    pub residual: T,
    pub iterations: usize,
    pub converged: bool,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

fn residual<T: Real>(op: &impl Fn(&[T]) -> Vec<T>, b: &[T], x: &[T]) -> Vec<T> {
    let ax = op(x);
    b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect()
}

/// Restarted GMRES with modified Gram–Schmidt and Givens rotations.
pub fn gmres<T: Real>(op: impl Fn(&[T]) -> Vec<T>, b: &[T], x0: Option<&[T]>, cfg: &GmresConfig<T>) -> GmresResult<T> {
    let n = b.len();
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![T::zero(); n]);
    let bnorm = norm(b);
    if bnorm == T::zero() {
        return GmresResult {
            x: vec![T::zero(); n],
            residual: T::zero(),
            iterations: 0,
            converged: true,
        };
    }
    let m = cfg.restart.max(1);
    let mut iterations = 0;
    let mut r = residual(&op, b, &x);
    let mut rnorm = norm(&r);
    while rnorm > cfg.tol * bnorm && iterations < cfg.max_iter {
        let mut basis: Vec<Vec<T>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|&v| v / rnorm).collect());
        // Hessenberg columns, already rotated
        let mut h: Vec<Vec<T>> = Vec::with_capacity(m);
        let mut cs: Vec<(T, T)> = Vec::with_capacity(m);
        let mut g = vec![T::zero(); m + 1];
        g[0] = rnorm;
        let mut k = 0;
        while k < m && iterations < cfg.max_iter {
            let mut w = op(&basis[k]);
            let mut col = vec![T::zero(); k + 2];
            for (j, vj) in basis.iter().enumerate() {
                let hj = dot(&w, vj);
                col[j] = hj;
                w.iter_mut().zip(vj).for_each(|(a, &v)| *a = *a - hj * v);
            }
            let wn = norm(&w);
            col[k + 1] = wn;
            for (j, &(c, s)) in cs.iter().enumerate() {
                let (a, bb) = (col[j], col[j + 1]);
                col[j] = c * a + s * bb;
                col[j + 1] = -s * a + c * bb;
            }
            let d = col[k].hypot(col[k + 1]);
            let (c, s) = if d == T::zero() { (T::one(), T::zero()) } else { (col[k] / d, col[k + 1] / d) };
            col[k] = d;
            col[k + 1] = T::zero();
            cs.push((c, s));
            g[k + 1] = -s * g[k];
            g[k] = c * g[k];
            h.push(col);
            iterations += 1;
            k += 1;
            if g[k].abs() <= cfg.tol * bnorm || wn == T::zero() {
                break;
            }
            basis.push(w.iter().map(|&v| v / wn).collect());
        }
        // back substitution for the k coefficients
        let mut y = vec![T::zero(); k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for j in i + 1..k {
                acc = acc - h[j][i] * y[j];
            }
            y[i] = acc / h[i][i];
        }
        for (yi, vi) in y.iter().zip(&basis) {
            x.iter_mut().zip(vi).for_each(|(a, &v)| *a = *a + *yi * v);
        }
        r = residual(&op, b, &x);
        let new_norm = norm(&r);
        if !(new_norm < rnorm) && k < m {
            // breakdown without progress
            rnorm = new_norm;
            break;
        }
        rnorm = new_norm;
    }
    GmresResult {
        x,
        residual: rnorm / bnorm,
        iterations,
        converged: rnorm <= cfg.tol * bnorm,
    }
}
