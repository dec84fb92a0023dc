//! Exact rational helpers shared by every module, plus the few float
//! conversions that need to be careful about range.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Parses `p/q`, a plain integer, or a decimal with optional exponent
/// (`0.3`, `1e-200`). Decimals are converted exactly.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || Error::ParseRational(text.to_string());
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i64 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: String = format!("{whole}{frac}");
    let mut numer: BigInt = if all.is_empty() { BigInt::zero() } else { all.parse().map_err(|_| bad())? };
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac.len() as i64;
    if scale.unsigned_abs() > 100_000 {
        return Err(bad());
    }
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

/// Always `p/q`, including integers (`1/1`).
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn to_f64(r: &Rational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    match r.to_f64() {
        Some(v) if v.is_finite() && v != 0.0 => v,
        _ => {
            let sign = if r.is_negative() { -1.0 } else { 1.0 };
            sign * ln_rational(&r.abs()).exp()
        }
    }
}

/// Exact rational value of a finite float.
pub fn from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

/// Natural log of a positive big integer, accurate to a few ulps at any size.
pub fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().map(f64::ln).unwrap_or(f64::INFINITY);
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn ln_bigint(x: &BigInt) -> f64 {
    match x.sign() {
        Sign::Plus => ln_biguint(x.magnitude()),
        Sign::NoSign => f64::NEG_INFINITY,
        Sign::Minus => f64::NAN,
    }
}

/// Natural log of a nonnegative rational; `-inf` for zero.
pub fn ln_rational(r: &Rational) -> f64 {
    ln_bigint(r.numer()) - ln_bigint(r.denom())
}

pub fn lcm_of_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

pub fn pow(r: &Rational, exponent: u32) -> Rational {
    num_traits::pow(r.clone(), exponent as usize)
}

pub fn floor_to_bigint(r: &Rational) -> BigInt {
    r.floor().to_integer()
}

pub fn ceil_to_bigint(r: &Rational) -> BigInt {
    r.ceil().to_integer()
}

/// Sign of `a*sqrt(2) + b` decided exactly.
pub fn sign_affine_sqrt2(a: &Rational, b: &Rational) -> std::cmp::Ordering {
    use std::cmp::Ordering::*;
    let sa = a.cmp(&Rational::zero());
    let sb = b.cmp(&Rational::zero());
    match (sa, sb) {
        (Equal, _) => sb,
        (_, Equal) => sa,
        (Greater, Greater) => Greater,
        (Less, Less) => Less,
        _ => {
            // opposite signs: compare 2a^2 with b^2
            let two_a2 = a * a * int(2);
            let b2 = b * b;
            match two_a2.cmp(&b2) {
                Equal => Equal,
                Greater => sa,
                Less => sb,
            }
        }
    }
}

/// Exact `floor(a*sqrt(2) + b)`.
pub fn floor_affine_sqrt2(a: &Rational, b: &Rational) -> BigInt {
    let guess = to_f64(a) * std::f64::consts::SQRT_2 + to_f64(b);
    let mut k = if guess.is_finite() && guess.abs() < 1e15 {
        BigInt::from(guess.floor() as i64)
    } else {
        // far outside float range: bracket with exact rational sqrt(2) bounds
        floor_to_bigint(&(a * rat(14142135623730951, 10000000000000000) + b))
    };
    // walk k until k <= x < k + 1
    loop {
        let below = b - Rational::from_integer(k.clone());
        if sign_affine_sqrt2(a, &below) == std::cmp::Ordering::Less {
            k -= 1;
            continue;
        }
        let above = b - Rational::from_integer(&k + 1);
        if sign_affine_sqrt2(a, &above) != std::cmp::Ordering::Less {
            k += 1;
            continue;
        }
        return k;
    }
}

const WIDEN: f64 = 1e-13;

/// Nudges a computed float upward far enough to cover accumulated
/// rounding from a short chain of libm calls.
pub fn round_up(x: f64) -> f64 {
    if x.is_nan() || x.is_infinite() {
        return x;
    }
    x + x.abs() * WIDEN + f64::MIN_POSITIVE
}

pub fn round_down(x: f64) -> f64 {
    if x.is_nan() || x.is_infinite() {
        return x;
    }
    x - x.abs() * WIDEN - f64::MIN_POSITIVE
}
