//! Arbitrary-precision counting: binomials, factorials, Stirling numbers
//! of the second kind, and the log-domain forms used by the chain reports.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::exact::ln_biguint;

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

pub fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * i)
}

/// Row `n` of the Stirling numbers of the second kind: entry `i` is S(n, i).
pub fn stirling2_row(n: usize) -> Vec<BigUint> {
    let mut row = vec![BigUint::zero(); n + 1];
    row[0] = BigUint::one();
    for m in 1..=n {
        let mut next = vec![BigUint::zero(); n + 1];
        for i in 1..=m {
            // S(m, i) = i S(m-1, i) + S(m-1, i-1)
            next[i] = &row[i] * i + &row[i - 1];
        }
        row = next;
    }
    row
}

pub fn stirling2(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    stirling2_row(n).swap_remove(k)
}

/// ln C(2n, n), exact below 2000 and asymptotic above (error below 1e-12).
pub fn ln_central_binomial(n: f64) -> f64 {
    if n < 2000.0 && n.fract() == 0.0 {
        return ln_biguint(&binomial(2 * n as u64, n as u64));
    }
    2.0 * n * std::f64::consts::LN_2 - 0.5 * (std::f64::consts::PI * n).ln() - 1.0 / (8.0 * n)
        + 1.0 / (192.0 * n * n * n)
}

/// Iterates all `k`-subsets of `0..n` as bitmasks in increasing numeric order.
pub fn k_subsets(n: u32, k: u32) -> impl Iterator<Item = u64> {
    let limit = 1u64 << n;
    let mut current = if k == 0 {
        Some(0u64)
    } else if k > n {
        None
    } else {
        Some((1u64 << k) - 1)
    };
    std::iter::from_fn(move || {
        let out = current?;
        current = if out == 0 {
            None
        } else {
            // Gosper's hack
            let c = out & out.wrapping_neg();
            let r = out + c;
            let next = (((r ^ out) >> 2) / c) | r;
            (next < limit).then_some(next)
        };
        Some(out)
    })
}
