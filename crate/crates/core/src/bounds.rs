//! Closed-form right-hand sides and the hypothesis checklists that decide
//! whether a comparison is in the regime where the inequality is proved.
//!
//! Bounds are carried as natural logs rounded upward, so they stay usable
//! far below the smallest positive `f64`. Left-hand sides are exact
//! rationals; a reported violation is therefore a real one.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};

use crate::error::{invalid, Result};
use crate::exact::{from_f64, int, ln_rational, pow, rat, round_up, Rational};

const LN_10: f64 = std::f64::consts::LN_10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperBound {
    ln: f64,
}

impl UpperBound {
    pub fn from_ln(ln: f64) -> Self {
        UpperBound { ln: round_up(ln) }
    }

    pub fn ln(&self) -> f64 {
        self.ln
    }

    pub fn log10(&self) -> f64 {
        self.ln / LN_10
    }

    /// Value as a float, rounded up; may be 0 or infinite out of range.
    pub fn value(&self) -> f64 {
        round_up(self.ln.exp())
    }

    /// `lhs <= self`, decided exactly whenever the bound is a normal float.
    pub fn admits(&self, lhs: &Rational) -> bool {
        if !lhs.is_positive() {
            return true;
        }
        let raw = self.ln.exp();
        if raw.is_infinite() {
            return true;
        }
        if raw >= f64::MIN_POSITIVE {
            return from_f64(round_up(raw)).is_some_and(|r| lhs <= &r);
        }
        ln_rational(lhs) <= self.ln
    }
}

/// Right-hand side of a comparison: exact when the bound is rational.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundValue {
    Exact(Rational),
    Float(UpperBound),
}

impl BoundValue {
    pub fn ln(&self) -> f64 {
        match self {
            BoundValue::Exact(r) => ln_rational(r),
            BoundValue::Float(b) => b.ln(),
        }
    }

    pub fn admits(&self, lhs: &Rational) -> bool {
        match self {
            BoundValue::Exact(r) => lhs <= r,
            BoundValue::Float(b) => b.admits(lhs),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            BoundValue::Exact(r) => crate::exact::to_f64(r),
            BoundValue::Float(b) => b.value(),
        }
    }
}

/// `log10(rhs) - log10(lhs)`; positive means the bound holds with room.
pub fn margin_log10(lhs: &Rational, rhs: &BoundValue) -> f64 {
    if !lhs.is_positive() {
        return f64::INFINITY;
    }
    (rhs.ln() - ln_rational(lhs)) / LN_10
}

fn check_common(d: f64, rho: &Rational) -> Result<f64> {
    if d.is_nan() || d < 1.0 || !d.is_finite() {
        return Err(invalid(format!("parameter D must be >= 1, got {d}")));
    }
    if !rho.is_positive() || rho >= &Rational::one() {
        return Err(invalid("rho must lie in (0, 1)"));
    }
    Ok(ln_rational(rho))
}

/// `D rho^(u/50)`.
pub fn bound_theorem1(d: f64, rho: &Rational, u: &Rational) -> Result<UpperBound> {
    let ln_rho = check_common(d, rho)?;
    if !u.is_positive() {
        return Err(invalid("u must be positive"));
    }
    Ok(UpperBound::from_ln(d.ln() + crate::exact::to_f64(u) / 50.0 * ln_rho))
}

/// `2 D rho^(p/4)`.
pub fn bound_theorem1a(d: f64, rho: &Rational, p: u64) -> Result<UpperBound> {
    let ln_rho = check_common(d, rho)?;
    if p == 0 {
        return Err(invalid("p must be positive"));
    }
    Ok(UpperBound::from_ln(
        std::f64::consts::LN_2 + d.ln() + p as f64 / 4.0 * ln_rho,
    ))
}

/// `D rho^(p/4)`.
pub fn bound_lemma21(d: f64, rho: &Rational, p: u64) -> Result<UpperBound> {
    let ln_rho = check_common(d, rho)?;
    if p == 0 {
        return Err(invalid("p must be positive"));
    }
    Ok(UpperBound::from_ln(d.ln() + p as f64 / 4.0 * ln_rho))
}

/// `2 D rho^(u/25)`.
pub fn bound_lemma31(d: f64, rho: &Rational, u: &Rational) -> Result<UpperBound> {
    let ln_rho = check_common(d, rho)?;
    if !u.is_positive() {
        return Err(invalid("u must be positive"));
    }
    Ok(UpperBound::from_ln(
        std::f64::consts::LN_2 + d.ln() + crate::exact::to_f64(u) / 25.0 * ln_rho,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statement {
    Theorem1,
    Theorem1A,
    Lemma21,
    Lemma31,
}

impl Statement {
    pub fn name(&self) -> &'static str {
        match self {
            Statement::Theorem1 => "theorem1",
            Statement::Theorem1A => "theorem1A",
            Statement::Lemma21 => "lemma2.1",
            Statement::Lemma31 => "lemma3.1",
        }
    }
}

/// Everything a hypothesis checklist may need; fields a statement does not
/// use are ignored, and a missing required field makes that hypothesis fail.
#[derive(Debug, Clone)]
pub struct RegimeParams {
    pub d: f64,
    pub l: Rational,
    pub rho: Rational,
    pub n: Option<u64>,
    pub u: Option<Rational>,
    pub p: Option<u64>,
    pub n0: Option<BigUint>,
    pub point_count: Option<BigUint>,
    pub sup_mean: Option<Rational>,
}

impl RegimeParams {
    pub fn new(d: f64, l: Rational, rho: Rational) -> Self {
        RegimeParams {
            d,
            l,
            rho,
            n: None,
            u: None,
            p: None,
            n0: None,
            point_count: None,
            sup_mean: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypothesis {
    pub name: String,
    pub holds: bool,
}

fn hyp(name: &str, holds: bool) -> Hypothesis {
    Hypothesis {
        name: name.to_string(),
        holds,
    }
}

fn big(x: &BigUint) -> Rational {
    Rational::from_integer(BigInt::from(x.clone()))
}

/// `c * N0^2 * rho^3` compared against 1, which decides `N0` against `rho^(-3/2)/sqrt(c)`.
fn n0_scaled(n0: &BigUint, rho: &Rational, c: i64) -> Rational {
    let n = big(n0);
    int(c) * &n * &n * pow(rho, 3)
}

pub fn regime_check(statement: Statement, params: &RegimeParams) -> Vec<Hypothesis> {
    let RegimeParams { d, l, rho, .. } = params;
    let one = Rational::one();
    let mut out = vec![hyp("D >= 1", *d >= 1.0), hyp("L >= 1", l >= &one)];
    let rho_pos = rho.is_positive();
    let n_pow = |exp: u32| -> Option<bool> {
        params
            .n
            .map(|n| rho_pos && rho * pow(&int(n as i64), exp) <= one)
    };
    match statement {
        Statement::Theorem1 => {
            out.push(hyp("n >= 2", params.n.is_some_and(|n| n >= 2)));
            out.push(hyp("0 < rho <= n^-200", n_pow(200).unwrap_or(false)));
            out.push(hyp(
                "u > 41L",
                params.u.as_ref().is_some_and(|u| u > &(int(41) * l)),
            ));
            if let Some(m) = &params.sup_mean {
                out.push(hyp("sup mean <= rho", m <= rho));
            }
        }
        Statement::Theorem1A => {
            out.push(hyp("0 < rho <= 1/1000", rho_pos && rho <= &rat(1, 1000)));
            out.push(hyp(
                "rho <= L^-20",
                rho_pos && l.is_positive() && rho * pow(l, 20) <= one,
            ));
            let p = params.p;
            out.push(hyp(
                "p >= 2L",
                p.is_some_and(|p| int(p as i64) >= int(2) * l),
            ));
            out.push(hyp(
                "p <= rho^(-1/100)",
                p.is_some_and(|p| rho_pos && rho * pow(&int(p as i64), 100) <= one),
            ));
            if let Some(n0) = &params.n0 {
                out.push(hyp("N0 > rho^(-3/2)/16", n0_scaled(n0, rho, 256) > one));
                out.push(hyp("N0 <= rho^(-3/2)/8", n0_scaled(n0, rho, 64) <= one));
                if let Some(n) = &params.point_count {
                    let ratio = n / n0;
                    out.push(hyp(
                        "N = 2^k N0",
                        (n % n0).is_zero() && ratio.count_ones() == 1,
                    ));
                }
            }
            if let Some(m) = &params.sup_mean {
                out.push(hyp("sup mean <= rho/2", m * int(2) <= *rho));
            }
        }
        Statement::Lemma21 => {
            out.push(hyp("0 < rho < 1", rho_pos && rho < &one));
            out.push(hyp(
                "N0 <= rho^(-3/2)/8",
                params
                    .n0
                    .as_ref()
                    .is_some_and(|n0| n0_scaled(n0, rho, 64) <= one),
            ));
            out.push(hyp(
                "p >= 2L",
                params.p.is_some_and(|p| int(p as i64) >= int(2) * l),
            ));
            if let Some(m) = &params.sup_mean {
                out.push(hyp("sup mean <= rho", m <= rho));
            }
        }
        Statement::Lemma31 => {
            out.push(hyp("0 < rho < 1", rho_pos && rho < &one));
            out.push(hyp("n >= 2", params.n.is_some_and(|n| n >= 2)));
            out.push(hyp("rho <= n^-200", n_pow(200).unwrap_or(false)));
            out.push(hyp(
                "N = 2^k >= rho^(-3/2)",
                params.point_count.as_ref().is_some_and(|n| {
                    n.count_ones() == 1 && {
                        let n = big(n);
                        &n * &n * pow(rho, 3) >= one
                    }
                }),
            ));
            out.push(hyp(
                "u >= 40L",
                params.u.as_ref().is_some_and(|u| u >= &(int(40) * l)),
            ));
            if let Some(m) = &params.sup_mean {
                out.push(hyp("sup mean <= rho", m <= rho));
            }
        }
    }
    out
}

pub fn in_regime(checks: &[Hypothesis]) -> bool {
    checks.iter().all(|h| h.holds)
}
