//! Brute-force evaluators of the exponent inequalities in integer arithmetic.

use frac_helmholtz::exponents::{thm1_admissible, thm3_q_window, Case, Condition, ExponentTriple};
use frac_helmholtz::Error;
use num_integer::Integer;
use num_rational::Rational64;

pub fn r(a: i64, b: i64) -> Rational64 {
    Rational64::new(a, b)
}

/// Reduced fractions a/b in (lo, hi) with b <= max_den.
pub fn rationals(lo: i64, hi: i64, max_den: i64) -> Vec<(i64, i64)> {
    let mut out = vec![];
    for b in 1..=max_den {
        for a in (lo * b + 1)..(hi * b) {
            if a.gcd(&b) == 1 {
                out.push((a, b));
            }
        }
    }
    out
}

pub const S_SCAN: [(i64, i64); 6] = [(19, 25), (4, 5), (9, 10), (1, 1), (6, 5), (7, 5)];

// Integer fractions (num, den) with den > 0; comparisons by cross-multiplication.
pub type Q = (i128, i128);

pub fn norm(q: Q) -> Q {
    if q.1 < 0 {
        (-q.0, -q.1)
    } else {
        q
    }
}
pub fn lt(a: Q, b: Q) -> bool {
    let (a, b) = (norm(a), norm(b));
    a.0 * b.1 < b.0 * a.1
}
pub fn eq(a: Q, b: Q) -> bool {
    let (a, b) = (norm(a), norm(b));
    a.0 * b.1 == b.0 * a.1
}
pub fn from_rat(x: &Rational64) -> Q {
    (*x.numer() as i128, *x.denom() as i128)
}

pub fn oracle_admissible(n: i128, s: Q, ip: Q, iq: Q) -> Vec<Condition> {
    let (a, b) = ip;
    let (c, d) = iq;
    let (sn, sd) = s;
    let gap_num = a * d - c * b;
    let bd = b * d;
    let mut failed = vec![];
    if gap_num * (n + 1) < 2 * bd {
        failed.push(Condition::GapLower);
    }
    if gap_num * n * sd > 2 * sn * bd {
        failed.push(Condition::GapUpper);
    }
    if 2 * n * a <= (n + 1) * b {
        failed.push(Condition::PLower);
    }
    if 2 * n * c >= (n - 1) * d {
        failed.push(Condition::QUpper);
    }
    if sn * (n + 1) < n * sd {
        failed.push(Condition::Regime);
    }
    failed
}

#[derive(Debug, PartialEq)]
pub enum OracleWindow {
    NoCase,
    Outside(Case),
    Row(Case, usize, Q, Q),
}

pub fn oracle_q_window(n: i128, s: Q, t: Q) -> OracleWindow {
    let (sn, sd) = s;
    let (tn, td) = t;
    let a: Q = ((n + 1) * (n + 1), (n - 1) * (n - 1));
    let c: Q = ((n - 1) * sd + 4 * sn, (n - 1) * sd);
    let d: Q = (n * n + 4 * n - 1, n * n - 1);
    let e: Q = (2 * n, n - 1);
    let nd: Q = (n * sd, n * sd - 2 * sn);
    let b: Q = ((n + 1) * sd, (n + 1) * sd - 4 * sn);
    let scaled: Q = (n * (tn - td) * sd, 2 * sn * td);
    let two_nt: Q = (2 * n * tn, (n + 1) * td);
    let half: Q = ((n + 1) * (tn - td), 2 * td);
    let n_over_gap: Q = ((n + 1) * td, tn - td);
    const INF: Q = (1, 0);
    let inside = |lo: Q, hi: Q| lt(lo, t) && (hi == INF || lt(t, hi));

    let quarter: Q = (n + 1, 4);
    let ge = |x: Q, y: Q| !lt(x, y);
    let sign = n * sn - n * sd - sn;
    let low = ge(s, (n, n + 1)) && lt(s, quarter);
    let mid: Q = (2 * n * n, (n + 1) * (n + 1));
    let upper: Q = (n, 2);
    let (case, rows): (Case, Vec<(Q, Q, Q, Q)>) = if low && sign > 0 {
        (Case::I, vec![(a, b, scaled, two_nt), (c, a, scaled, half), (d, c, e, half)])
    } else if low && sign < 0 {
        (Case::II, vec![(c, b, scaled, two_nt), (a, c, e, two_nt), (d, a, e, half)])
    } else if (n == 3 || n == 4) && lt(quarter, s) && lt(s, mid) {
        (
            Case::III,
            vec![(a, INF, scaled, two_nt), (nd, a, scaled, n_over_gap), (e, nd, t, half), (d, e, e, half)],
        )
    } else if (n == 3 || n == 4) && ge(s, mid) && lt(s, upper) {
        (Case::IV, vec![(nd, INF, scaled, two_nt), (a, nd, t, two_nt), (e, a, t, half), (d, e, e, half)])
    } else if n >= 5 && lt(quarter, s) && lt(s, upper) {
        (Case::V, vec![(nd, INF, scaled, two_nt), (e, nd, t, two_nt), (a, e, e, two_nt), (d, a, e, half)])
    } else {
        return OracleWindow::NoCase;
    };
    for (i, (lo, hi, qlo, qhi)) in rows.into_iter().enumerate() {
        if inside(lo, hi) {
            return OracleWindow::Row(case, i + 1, qlo, qhi);
        }
    }
    OracleWindow::Outside(case)
}

pub fn scan_q_window(n: usize, s_values: &[(i64, i64)]) -> (usize, usize) {
    let ts = rationals(1, 16, 24);
    let (mut checked, mut mismatches) = (0, 0);
    for &(sn, sd) in s_values {
        let s = r(sn, sd);
        for &(tn, td) in &ts {
            let t = r(tn, td);
            let got = thm3_q_window(n, &s, &t);
            let want = oracle_q_window(n as i128, (sn as i128, sd as i128), (tn as i128, td as i128));
            let ok = match (&got, &want) {
                (Err(Error::Domain(_)), OracleWindow::NoCase) => true,
                (Ok(w), OracleWindow::Outside(c)) => w.case == *c && w.row.is_none() && w.is_empty(),
                (Ok(w), OracleWindow::Row(c, i, lo, hi)) => {
                    w.case == *c
                        && w.row == Some(*i)
                        && eq(from_rat(w.q_lo.as_ref().unwrap()), *lo)
                        && eq(from_rat(w.q_hi.as_ref().unwrap()), *hi)
                }
                _ => false,
            };
            if !ok {
                eprintln!("mismatch n={n} s={s} t={t}: {got:?} vs {want:?}");
                mismatches += 1;
            }
            checked += 1;
        }
    }
    (checked, mismatches)
}


/// Mismatches of `thm1_admissible` against the oracle over reciprocal pairs
/// with denominators up to `max_den`; returns (checked, mismatches).
pub fn scan_admissible(n: usize, s_values: &[(i64, i64)], max_den: i64) -> (usize, usize) {
    let recips = rationals(0, 1, max_den);
    let (mut checked, mut mismatches) = (0, 0);
    for &(sn, sd) in s_values {
        let s = r(sn, sd);
        for &(a, b) in &recips {
            for &(c, d) in &recips {
                let triple = ExponentTriple::pair(r(b, a), r(d, c)).unwrap();
                let v = thm1_admissible(n, &s, &triple).unwrap();
                let expect = oracle_admissible(n as i128, (sn as i128, sd as i128), (a as i128, b as i128), (c as i128, d as i128));
                if v.failed_conditions != expect || v.admissible != expect.is_empty() {
                    mismatches += 1;
                }
                checked += 1;
            }
        }
    }
    (checked, mismatches)
}
