//! Closed forms for the class of indicators of all subsets with at most
//! `L` points under the uniform measure on `N` points.
//!
//! `P_n = P(sup S_n >= n)` is the chance that `n` uniform draws take at
//! most `L` distinct values, `N^-n Σ_{i<=L} C(N,i) i! S(n,i)`. The general
//! tail `P(sup S_n >= u)` depends only on the multiplicity profile of the
//! sample, so it is summed over integer partitions of `n`.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use crate::bounds::BoundValue;
use crate::combinat::{binomial, factorial, stirling2_row};
use crate::error::{invalid, Result};
use crate::exact::{int, pow, Rational};
use crate::space::SubsetClassHandle;
use crate::tail::{Method, TailResult};

fn big(x: BigUint) -> Rational {
    Rational::from_integer(BigInt::from(x))
}

impl SubsetClassHandle {
    fn validate(&self) -> Result<()> {
        if self.max_size == 0 || self.max_size > self.point_count {
            return Err(invalid("subset class needs 1 <= L <= N"));
        }
        Ok(())
    }

    /// `P(sup S_n >= n)`: at most `L` distinct points among `n` draws.
    pub fn p_n(&self, n: u64) -> Rational {
        let (big_n, l) = (self.point_count, self.max_size);
        if n <= l {
            return Rational::one();
        }
        let s = stirling2_row(n as usize);
        let count: BigUint = (1..=l.min(n))
            .map(|i| binomial(big_n, i) * factorial(i) * &s[i as usize])
            .sum();
        Rational::new(
            BigInt::from(count),
            BigInt::from(BigUint::from(big_n).pow(n as u32)),
        )
    }

    /// `P(sup S_n >= u)`, summed over multiplicity profiles of the sample.
    pub fn tail(&self, n: u64, u: &Rational) -> Rational {
        if u <= &Rational::zero() {
            return Rational::one();
        }
        let mut hits = BigUint::zero();
        let n_fact = factorial(n);
        let mut parts = Vec::new();
        self.visit_partitions(n, n, &mut parts, &mut |profile| {
            let top: u64 = profile.iter().take(self.max_size as usize).sum();
            if int(top as i64) >= *u {
                hits += self.profile_count(profile, &n_fact);
            }
        });
        Rational::new(
            BigInt::from(hits),
            BigInt::from(BigUint::from(self.point_count).pow(n as u32)),
        )
    }

    fn visit_partitions(&self, rest: u64, largest: u64, parts: &mut Vec<u64>, f: &mut impl FnMut(&[u64])) {
        if rest == 0 {
            f(parts);
            return;
        }
        if parts.len() as u64 == self.point_count {
            return;
        }
        for part in (1..=largest.min(rest)).rev() {
            parts.push(part);
            self.visit_partitions(rest - part, part, parts, f);
            parts.pop();
        }
    }

    /// Sequences whose multiplicities (sorted, descending) equal `profile`.
    fn profile_count(&self, profile: &[u64], n_fact: &BigUint) -> BigUint {
        let len = profile.len() as u64;
        let mut falling = BigUint::one();
        for i in 0..len {
            falling *= self.point_count - i;
        }
        let mut denom = BigUint::one();
        for &p in profile {
            denom *= factorial(p);
        }
        let mut run = 1u64;
        for w in profile.windows(2) {
            if w[0] == w[1] {
                run += 1;
            } else {
                denom *= factorial(run);
                run = 1;
            }
        }
        if !profile.is_empty() {
            denom *= factorial(run);
        }
        falling * n_fact / denom
    }
}

/// Exact `P_n` with both closed-form bounds attached:
/// `C(N,L)(L/N)^n` and `4^L ρ^(n-L)`, `ρ = L/N`.
pub fn intro_example_pn(point_count: u64, max_size: u64, n: u64) -> Result<TailResult> {
    let h = SubsetClassHandle {
        point_count,
        max_size,
    };
    h.validate()?;
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    let rho = h.rho();
    let mut result = TailResult::exact(h.p_n(n), Method::ClosedForm);
    let first = big(binomial(point_count, max_size)) * pow(&rho, n as u32);
    result.compare("C(N,L)(L/N)^n", BoundValue::Exact(first), true);
    result.compare("4^L rho^(n-L)", BoundValue::Exact(four_l_rho(&h, n as i64 - max_size as i64)), true);
    Ok(result)
}

fn four_l_rho(h: &SubsetClassHandle, exponent: i64) -> Rational {
    let rho = h.rho();
    let power = if exponent >= 0 {
        pow(&rho, exponent as u32)
    } else {
        pow(&rho.recip(), (-exponent) as u32)
    };
    pow(&int(4), h.max_size as u32) * power
}

#[derive(Debug, Clone, PartialEq)]
pub struct PunBound {
    /// `C(n,u) P_u`.
    pub binomial_form: Rational,
    /// `4^L n^u ρ^(u-L)`.
    pub closed_form: Rational,
    /// Exact `P(sup S_n >= u)`.
    pub exact_tail: Rational,
}

pub fn intro_example_pun_bound(point_count: u64, max_size: u64, n: u64, u: u64) -> Result<PunBound> {
    let h = SubsetClassHandle {
        point_count,
        max_size,
    };
    h.validate()?;
    if u > n {
        return Err(invalid("the estimate needs u <= n"));
    }
    let binomial_form = big(binomial(n, u)) * h.p_n(u);
    let closed_form = pow(&int(n as i64), u as u32) * four_l_rho(&h, u as i64 - max_size as i64);
    let exact_tail = h.tail(n, &int(u as i64));
    Ok(PunBound {
        binomial_form,
        closed_form,
        exact_tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    #[test]
    fn pn_examples() {
        let r = intro_example_pn(5, 2, 2).unwrap();
        assert_eq!(r.exact_value().unwrap(), &int(1));
        let r = intro_example_pn(4, 1, 3).unwrap();
        assert_eq!(r.exact_value().unwrap(), &rat(1, 16));
        assert_eq!(r.compared_bounds[0].value, BoundValue::Exact(rat(1, 16)));
        assert!(r.compared_bounds[0].satisfied);
        let r = intro_example_pn(3, 2, 3).unwrap();
        assert_eq!(r.exact_value().unwrap(), &rat(7, 9));
        assert_eq!(r.compared_bounds[0].value, BoundValue::Exact(rat(8, 9)));
        assert!(r.compared_bounds.iter().all(|b| b.satisfied));
        let r = intro_example_pn(12, 3, 4).unwrap();
        assert_eq!(r.compared_bounds[1].value, BoundValue::Exact(int(16)));
    }

    #[test]
    fn pun_examples() {
        let b = intro_example_pun_bound(4, 1, 3, 2).unwrap();
        assert_eq!(b.binomial_form, rat(3, 4));
        assert_eq!(b.exact_tail, rat(5, 8));
        let b = intro_example_pun_bound(4, 1, 3, 0).unwrap();
        assert_eq!(b.exact_tail, int(1));
        assert!(b.closed_form >= int(1) && b.binomial_form >= int(1));
        let b = intro_example_pun_bound(6, 2, 4, 4).unwrap();
        let h = SubsetClassHandle { point_count: 6, max_size: 2 };
        assert_eq!(b.binomial_form, h.p_n(4));
        assert_eq!(b.exact_tail, h.p_n(4));
        assert!(intro_example_pun_bound(4, 1, 3, 4).is_err());
        assert!(intro_example_pn(2, 3, 3).is_err());
    }
}
