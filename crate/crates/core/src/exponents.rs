//! Exponent conditions for the resolvent estimates and the nonlinear problem.
//!
//! All routines are generic over [`Exact`], implemented for `f64` and for
//! `Rational64`; with the rational type every comparison is exact, so ties
//! land exactly on the printed boundary.

use std::fmt::{self, Debug, Display};
use std::ops::Neg;

use num_rational::Rational64;
use num_traits::{Num, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered field used for exponent arithmetic.
pub trait Exact: Clone + PartialOrd + Num + Neg<Output = Self> + Debug + Display {
    fn int(i: i64) -> Self;
    fn approx(&self) -> f64;
}

impl Exact for f64 {
    fn int(i: i64) -> Self {
        i as f64
    }
    fn approx(&self) -> f64 {
        *self
    }
}

impl Exact for Rational64 {
    fn int(i: i64) -> Self {
        Rational64::from_integer(i)
    }
    fn approx(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

fn frac<E: Exact>(a: i64, b: i64) -> E {
    E::int(a) / E::int(b)
}

/// Lebesgue exponents `p < q` and an optional nonlinearity power `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentTriple<E> {
    pub p: E,
    pub q: E,
    pub t: Option<E>,
}

impl<E: Exact> ExponentTriple<E> {
    pub fn new(p: E, q: E, t: Option<E>) -> Result<Self> {
        let one = E::one();
        if !(p > one) || !(q > one) {
            return Err(Error::Domain(format!("exponents p = {p}, q = {q} must exceed 1")));
        }
        if let Some(t) = &t {
            if !(t.clone() > one) {
                return Err(Error::Domain(format!("power t = {t} must exceed 1")));
            }
        }
        Ok(ExponentTriple { p, q, t })
    }

    pub fn pair(p: E, q: E) -> Result<Self> {
        Self::new(p, q, None)
    }

    /// `p' = p/(p-1)`.
    pub fn p_conjugate(&self) -> E {
        self.p.clone() / (self.p.clone() - E::one())
    }

    /// `1/p - 1/q`.
    pub fn gap(&self) -> E {
        E::one() / self.p.clone() - E::one() / self.q.clone()
    }
}

/// Named inequalities of the resolvent estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    /// `2/(n+1) <= 1/p - 1/q`
    GapLower,
    /// `1/p - 1/q <= 2s/n`
    GapUpper,
    /// `1/p > (n+1)/(2n)`
    PLower,
    /// `1/q < (n-1)/(2n)`
    QUpper,
    /// `s >= n/(n+1)`
    Regime,
}

impl Condition {
    pub fn label(&self) -> &'static str {
        match self {
            Condition::GapLower => "gap condition 2/(n+1) <= 1/p - 1/q",
            Condition::GapUpper => "gap condition 1/p - 1/q <= 2s/n",
            Condition::PLower => "1/p > (n+1)/(2n)",
            Condition::QUpper => "1/q < (n-1)/(2n)",
            Condition::Regime => "s >= n/(n+1)",
        }
    }
}

impl Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Uniform,
    NoUniformEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityVerdict {
    pub admissible: bool,
    pub failed_conditions: Vec<Condition>,
    pub regime: Regime,
}

fn check_dim_order<E: Exact>(n: usize, s: &E) -> Result<()> {
    if n < 3 {
        return Err(Error::Domain(format!("dimension n = {n} must be at least 3")));
    }
    let half_n = frac::<E>(n as i64, 2);
    if !(s.clone() > E::zero()) || !(s.clone() < half_n) {
        return Err(Error::Domain(format!("order s = {s} must satisfy 0 < s < n/2")));
    }
    Ok(())
}

/// Evaluates every condition of the uniform resolvent estimate.
pub fn thm1_admissible<E: Exact>(n: usize, s: &E, triple: &ExponentTriple<E>) -> Result<AdmissibilityVerdict> {
    check_dim_order(n, s)?;
    let ni = n as i64;
    let inv_p = E::one() / triple.p.clone();
    let inv_q = E::one() / triple.q.clone();
    let gap = triple.gap();
    let mut failed = Vec::new();
    if !(gap >= frac(2, ni + 1)) {
        failed.push(Condition::GapLower);
    }
    if !(gap <= E::int(2) * s.clone() / E::int(ni)) {
        failed.push(Condition::GapUpper);
    }
    if !(inv_p > frac(ni + 1, 2 * ni)) {
        failed.push(Condition::PLower);
    }
    if !(inv_q < frac(ni - 1, 2 * ni)) {
        failed.push(Condition::QUpper);
    }
    let regime = if s.clone() >= frac(ni, ni + 1) {
        Regime::Uniform
    } else {
        failed.push(Condition::Regime);
        Regime::NoUniformEstimate
    };
    Ok(AdmissibilityVerdict {
        admissible: failed.is_empty(),
        failed_conditions: failed,
        regime,
    })
}

/// Exponent of `λ` in the uniform bound, `(n/(2s))(1/p - 1/q) - 1`.
pub fn scaling_exponent<E: Exact>(n: usize, s: &E, triple: &ExponentTriple<E>) -> Result<E> {
    let v = thm1_admissible(n, s, triple)?;
    if !v.admissible {
        let names: Vec<&str> = v.failed_conditions.iter().map(|c| c.label()).collect();
        return Err(Error::Domain(format!("inadmissible exponents: {}", names.join(", "))));
    }
    Ok(scaling_exponent_formula(n, s, triple))
}

/// The scaling formula without the admissibility check.
pub fn scaling_exponent_formula<E: Exact>(n: usize, s: &E, triple: &ExponentTriple<E>) -> E {
    E::int(n as i64) / (E::int(2) * s.clone()) * triple.gap() - E::one()
}

/// The five parameter cases of the nonlinear existence result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    I,
    II,
    III,
    IV,
    V,
}

impl Case {
    pub fn label(&self) -> &'static str {
        match self {
            Case::I => "i",
            Case::II => "ii",
            Case::III => "iii",
            Case::IV => "iv",
            Case::V => "v",
        }
    }
}

/// Upper or lower end of an open interval, possibly infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Bound<E> {
    Finite(E),
    Infinite,
}

impl<E: Exact> Bound<E> {
    fn above(&self, x: &E) -> bool {
        match self {
            Bound::Finite(b) => x < b,
            Bound::Infinite => true,
        }
    }
    pub fn approx(&self) -> f64 {
        match self {
            Bound::Finite(b) => b.approx(),
            Bound::Infinite => f64::INFINITY,
        }
    }
}

/// Lower and upper `q` bounds as functions of `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QFormula {
    /// `n(t-1)/(2s)`
    ScaledGap,
    /// `2nt/(n+1)`
    TwoNtOverNPlusOne,
    /// `(n+1)(t-1)/2`
    HalfNPlusOneGap,
    /// `2n/(n-1)`
    TwoNOverNMinusOne,
    /// `t`
    T,
    /// `(n+1)/(t-1)`, as printed in one row of case (iii)
    NPlusOneOverGap,
}

impl QFormula {
    pub fn eval<E: Exact>(&self, n: usize, s: &E, t: &E) -> E {
        let ni = n as i64;
        let nn = E::int(ni);
        let tm = t.clone() - E::one();
        match self {
            QFormula::ScaledGap => nn * tm / (E::int(2) * s.clone()),
            QFormula::TwoNtOverNPlusOne => E::int(2 * ni) * t.clone() / E::int(ni + 1),
            QFormula::HalfNPlusOneGap => E::int(ni + 1) * tm / E::int(2),
            QFormula::TwoNOverNMinusOne => frac(2 * ni, ni - 1),
            QFormula::T => t.clone(),
            QFormula::NPlusOneOverGap => E::int(ni + 1) / tm,
        }
    }
}

/// One row: for `t_lo < t < t_hi`, `q_lo(t) < q < q_hi(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row<E> {
    pub t_lo: E,
    pub t_hi: Bound<E>,
    pub q_lo: QFormula,
    pub q_hi: QFormula,
}

impl<E: Exact> Row<E> {
    pub fn t_window_empty(&self) -> bool {
        !self.t_hi.above(&self.t_lo)
    }

    pub fn contains_t(&self, t: &E) -> bool {
        &self.t_lo < t && self.t_hi.above(t)
    }
}

/// The `q` window selected for a given `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QWindow<E> {
    pub case: Case,
    /// One-based row index, `None` when `t` lies in no row's window.
    pub row: Option<usize>,
    pub q_lo: Option<E>,
    pub q_hi: Option<E>,
}

impl<E: Exact> QWindow<E> {
    pub fn is_empty(&self) -> bool {
        match (&self.q_lo, &self.q_hi) {
            (Some(a), Some(b)) => a >= b,
            _ => true,
        }
    }

    pub fn contains(&self, q: &E) -> bool {
        match (&self.q_lo, &self.q_hi) {
            (Some(a), Some(b)) => a < q && q < b,
            _ => false,
        }
    }
}

/// Case and rows for `(n, s)`.
pub fn thm3_rows<E: Exact>(n: usize, s: &E) -> Result<(Case, Vec<Row<E>>)> {
    check_dim_order(n, s)?;
    let ni = n as i64;
    let s = s.clone();
    let four_s = E::int(4) * s.clone();
    let a: E = frac((ni + 1) * (ni + 1), (ni - 1) * (ni - 1));
    let c: E = (E::int(ni - 1) + four_s.clone()) / E::int(ni - 1);
    let d: E = frac(ni * ni + 4 * ni - 1, ni * ni - 1);
    let e: E = frac(2 * ni, ni - 1);
    let f = || -> Bound<E> {
        let den = E::int(ni) - E::int(2) * s.clone();
        Bound::Finite(E::int(ni) / den)
    };
    let fin = |x: &E| Bound::Finite(x.clone());
    use QFormula::*;
    let row = |t_lo: E, t_hi: Bound<E>, q_lo: QFormula, q_hi: QFormula| Row { t_lo, t_hi, q_lo, q_hi };
    let quarter = frac::<E>(ni + 1, 4);
    let band_lo = frac::<E>(ni, ni + 1);
    let sign = E::int(ni) * s.clone() - E::int(ni) - s.clone();
    let low_band = s >= band_lo && s < quarter;
    let b = || E::int(ni + 1) / (E::int(ni + 1) - four_s.clone());
    if low_band && sign > E::zero() {
        return Ok((
            Case::I,
            vec![
                row(a.clone(), fin(&b()), ScaledGap, TwoNtOverNPlusOne),
                row(c.clone(), fin(&a), ScaledGap, HalfNPlusOneGap),
                row(d.clone(), fin(&c), TwoNOverNMinusOne, HalfNPlusOneGap),
            ],
        ));
    }
    if low_band && sign < E::zero() {
        return Ok((
            Case::II,
            vec![
                row(c.clone(), fin(&b()), ScaledGap, TwoNtOverNPlusOne),
                row(a.clone(), fin(&c), TwoNOverNMinusOne, TwoNtOverNPlusOne),
                row(d.clone(), fin(&a), TwoNOverNMinusOne, HalfNPlusOneGap),
            ],
        ));
    }
    let three_or_four = n == 3 || n == 4;
    let mid = frac::<E>(2 * ni * ni, (ni + 1) * (ni + 1));
    let upper = frac::<E>(ni, 2);
    if three_or_four && s > quarter && s < mid {
        return Ok((
            Case::III,
            vec![
                row(a.clone(), Bound::Infinite, ScaledGap, TwoNtOverNPlusOne),
                row(e_nd(ni, &s), fin(&a), ScaledGap, NPlusOneOverGap),
                row(e.clone(), f(), T, HalfNPlusOneGap),
                row(d.clone(), fin(&e), TwoNOverNMinusOne, HalfNPlusOneGap),
            ],
        ));
    }
    if three_or_four && s >= mid && s < upper {
        return Ok((
            Case::IV,
            vec![
                row(e_nd(ni, &s), Bound::Infinite, ScaledGap, TwoNtOverNPlusOne),
                row(a.clone(), f(), T, TwoNtOverNPlusOne),
                row(e.clone(), fin(&a), T, HalfNPlusOneGap),
                row(d.clone(), fin(&e), TwoNOverNMinusOne, HalfNPlusOneGap),
            ],
        ));
    }
    if n >= 5 && s > quarter && s < upper {
        return Ok((
            Case::V,
            vec![
                row(e_nd(ni, &s), Bound::Infinite, ScaledGap, TwoNtOverNPlusOne),
                row(e.clone(), f(), T, TwoNtOverNPlusOne),
                row(a.clone(), fin(&e), TwoNOverNMinusOne, TwoNtOverNPlusOne),
                row(d, fin(&a), TwoNOverNMinusOne, HalfNPlusOneGap),
            ],
        ));
    }
    Err(Error::Domain(format!("(n, s) = ({n}, {s}) matches no parameter case")))
}

/// `n/(n-2s)`.
fn e_nd<E: Exact>(ni: i64, s: &E) -> E {
    E::int(ni) / (E::int(ni) - E::int(2) * s.clone())
}

/// The admissible `q` window for `(n, s, t)`; the first row whose `t`
/// window contains `t` is used.
pub fn thm3_q_window<E: Exact>(n: usize, s: &E, t: &E) -> Result<QWindow<E>> {
    let (case, rows) = thm3_rows(n, s)?;
    for (i, r) in rows.iter().enumerate() {
        if r.contains_t(t) {
            return Ok(QWindow {
                case,
                row: Some(i + 1),
                q_lo: Some(r.q_lo.eval(n, s, t)),
                q_hi: Some(r.q_hi.eval(n, s, t)),
            });
        }
    }
    Ok(QWindow {
        case,
        row: None,
        q_lo: None,
        q_hi: None,
    })
}

/// Which branch formula to use for `τ(α)` when `α >= n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TauVariant {
    /// `(n+1)/2`, as printed.
    #[default]
    Printed,
    /// `(n-1)/2`, continuous at `α = n`.
    Continuous,
}

/// Output weight `τ(α)` of the weighted resolvent bound.
pub fn tau_alpha<E: Exact>(n: usize, alpha: &E, variant: TauVariant) -> Result<E> {
    let ni = n as i64;
    let thr = frac::<E>(ni + 1, 2);
    if !(alpha.clone() > thr) {
        return Err(Error::Domain(format!("alpha = {alpha} must exceed (n+1)/2 = {thr}")));
    }
    if alpha.clone() < E::int(ni) {
        return Ok(alpha.clone() - thr);
    }
    Ok(match variant {
        TauVariant::Printed => thr,
        TauVariant::Continuous => frac(ni - 1, 2),
    })
}

/// Rational approximation of a decimal, for convenience at API boundaries.
pub fn rational_from_f64(x: f64, max_den: i64) -> Option<Rational64> {
    if !x.is_finite() {
        return None;
    }
    let mut best: Option<(f64, Rational64)> = None;
    for d in 1..=max_den {
        let n = (x * d as f64).round() as i64;
        let err = (n as f64 / d as f64 - x).abs();
        if best.as_ref().map(|(e, _)| err < *e - 1e-15).unwrap_or(true) {
            best = Some((err, Rational64::new(n, d)));
        }
    }
    best.filter(|(e, _)| *e <= 1e-12 * x.abs().max(1.0)).map(|(_, r)| r)
}
