//! Gamma and Hankel functions and the classical Helmholtz Green function.
//!
//! `H^{(1)}_ν` uses closed forms at half-integer order, ascending series
//! below `z = 14` and Hankel's expansion above. The switch sits at 14 rather
//! than 8: the asymptotic series cannot reach 1e-10 relative accuracy near 8.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Argument at which Hankel evaluation switches to the asymptotic series.
pub const HANKEL_CROSSOVER: f64 = 14.0;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Euler's Gamma function on the real line (Lanczos with reflection).
pub fn gamma<T: Real>(x: T) -> T {
    let half: T = lit(0.5);
    if x < half {
        // Γ(x) Γ(1-x) = π / sin(πx)
        return T::PI() / ((T::PI() * x).sin() * gamma(T::one() - x));
    }
    if x == x.floor() && x <= lit(30.0) {
        let mut acc = T::one();
        let mut k = T::one();
        while k < x {
            acc = acc * k;
            k = k + T::one();
        }
        return acc;
    }
    let x = x - T::one();
    let mut a: T = lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a = a + lit::<T>(c) / (x + lit(i as f64));
    }
    let t = x + lit(LANCZOS_G) + half;
    (T::TAU()).sqrt() * t.powf(x + half) * (-t).exp() * a
}

/// Digamma at a positive integer: `ψ(m) = -γ + Σ_{j<m} 1/j`.
fn digamma_int<T: Real>(m: usize) -> T {
    let euler: T = lit(0.577_215_664_901_532_9);
    (1..m).fold(-euler, |acc, j| acc + lit::<T>(1.0 / j as f64))
}

fn is_integer<T: Real>(x: T) -> bool {
    x == x.round()
}

fn is_half_integer<T: Real>(x: T) -> bool {
    let y = x - lit(0.5);
    y >= T::zero() && is_integer(y)
}

/// Hankel function of the first kind `H^{(1)}_ν(z) = J_ν(z) + i Y_ν(z)`.
pub fn hankel1<T: Real>(nu: T, z: T) -> Result<Complex<T>> {
    if !(z > T::zero()) || !z.is_finite() {
        return Err(Error::Domain(format!("Hankel argument z = {z} must be positive")));
    }
    if !(nu >= T::zero()) || !nu.is_finite() {
        return Err(Error::Domain(format!("Hankel order ν = {nu} must be nonnegative")));
    }
    if is_half_integer(nu) {
        return Ok(hankel_half_integer(nu, z));
    }
    if z >= lit(HANKEL_CROSSOVER) {
        return Ok(hankel_asymptotic(nu, z));
    }
    let j = bessel_j_series(nu, z);
    let y = if is_integer(nu) {
        bessel_y_integer_series(nu.to_usize().unwrap_or(0), z)
    } else {
        let (s, c) = (T::PI() * nu).sin_cos();
        (j * c - bessel_j_series(-nu, z)) / s
    };
    Ok(Complex::new(j, y))
}

/// Closed form for `ν = l + 1/2`.
fn hankel_half_integer<T: Real>(nu: T, z: T) -> Complex<T> {
    let l = (nu - lit(0.5)).to_usize().unwrap_or(0);
    let i = Complex::<T>::i();
    // Σ_k i^k (l+k)! / (k! (l-k)! (2z)^k)
    let mut sum = Complex::new(T::zero(), T::zero());
    let mut ik = Complex::new(T::one(), T::zero());
    for k in 0..=l {
        let mut c = T::one();
        for j in (l - k + 1)..=(l + k) {
            c = c * lit(j as f64);
        }
        for j in 1..=k {
            c = c / lit(j as f64);
        }
        sum = sum + ik * (c / (lit::<T>(2.0) * z).powi(k as i32));
        ik = ik * i;
    }
    let pref = (lit::<T>(2.0) / (T::PI() * z)).sqrt();
    (-i).powu(l as u32 + 1) * Complex::new(T::zero(), z).exp() * sum * pref
}

/// Hankel's expansion, truncated at its smallest term.
fn hankel_asymptotic<T: Real>(nu: T, z: T) -> Complex<T> {
    let mu = lit::<T>(4.0) * nu * nu;
    let omega = z - nu * T::FRAC_PI_2() - T::FRAC_PI_4();
    let i = Complex::<T>::i();
    let mut term = Complex::new(T::one(), T::zero());
    let mut sum = term;
    let mut prev = T::infinity();
    for k in 1..200 {
        let odd: T = lit((2 * k - 1) as f64);
        let next = term * i * ((mu - odd * odd) / (lit::<T>(8.0 * k as f64) * z));
        let size = next.norm();
        if size >= prev || size == T::zero() {
            break;
        }
        sum = sum + next;
        term = next;
        prev = size;
        if size < T::epsilon() * lit(1e-2) {
            break;
        }
    }
    let pref = (lit::<T>(2.0) / (T::PI() * z)).sqrt();
    Complex::new(T::zero(), omega).exp() * sum * pref
}

/// Ascending series for `J_ν`, valid for any real order with `Γ(ν+1)` finite.
fn bessel_j_series<T: Real>(nu: T, z: T) -> T {
    let half = z / lit(2.0);
    let q = -half * half;
    let mut term = half.powf(nu) / gamma(nu + T::one());
    let mut sum = term;
    for m in 1..500 {
        let mf: T = lit(m as f64);
        term = term * q / (mf * (mf + nu));
        sum = sum + term;
        if term.abs() <= T::epsilon() * lit(1e-3) * sum.abs() && mf > half {
            break;
        }
    }
    sum
}

/// Ascending series for `Y_n` at integer order.
fn bessel_y_integer_series<T: Real>(n: usize, z: T) -> T {
    let half = z / lit(2.0);
    let pi = T::PI();
    let jn = bessel_j_series(lit(n as f64), z);
    let mut finite = T::zero();
    for k in 0..n {
        let mut c = T::one();
        for j in 1..=(n - k - 1) {
            c = c * lit(j as f64);
        }
        for j in 1..=k {
            c = c / lit(j as f64);
        }
        finite = finite + c * half.powi(2 * k as i32 - n as i32);
    }
    let q = -half * half;
    let mut fact = T::one();
    for j in 1..=n {
        fact = fact * lit(j as f64);
    }
    let mut power = half.powi(n as i32) / fact;
    let mut series = T::zero();
    for k in 0..500usize {
        let kf: T = lit(k as f64);
        if k > 0 {
            power = power * q / (kf * (kf + lit(n as f64)));
        }
        let t = (digamma_int::<T>(k + 1) + digamma_int::<T>(n + k + 1)) * power;
        series = series + t;
        if k > 2 && kf > half && t.abs() <= T::epsilon() * lit(1e-3) * series.abs() {
            break;
        }
    }
    (lit::<T>(2.0) / pi) * jn * half.ln() - finite / pi - series / pi
}

/// Outgoing Green function of `-Δ - λ` in `R^n`:
/// `Φ_λ(r) = (i/4) (√λ/(2πr))^{(n-2)/2} H^{(1)}_{(n-2)/2}(√λ r)`.
pub fn green_classical<T: Real>(n: usize, lambda: T, r: T) -> Result<Complex<T>> {
    if n < 3 {
        return Err(Error::Domain(format!("dimension n = {n} must be at least 3")));
    }
    if !(lambda > T::zero()) {
        return Err(Error::Domain(format!("lambda = {lambda} must be positive")));
    }
    if !(r > T::zero()) {
        return Err(Error::Domain(format!("radius r = {r} must be positive")));
    }
    let k = lambda.sqrt();
    let nu: T = lit((n as f64 - 2.0) / 2.0);
    let pref = (k / (T::TAU() * r)).powf(nu);
    Ok(Complex::new(T::zero(), lit(0.25)) * hankel1(nu, k * r)? * pref)
}
