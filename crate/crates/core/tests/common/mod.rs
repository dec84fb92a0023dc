#![allow(dead_code)]

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use suplab::space::{FiniteSpace, FunctionTable};

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// A random class with values `k/value_denom` on `points` points and a
/// random measure with weights `w/weight_denom`.
pub fn random_instance(
    rng: &mut ChaCha8Rng,
    rows: usize,
    points: usize,
    value_denom: i64,
) -> (FunctionTable, FiniteSpace) {
    let table = (0..rows)
        .map(|_| (0..points).map(|_| rat(rng.random_range(0..=value_denom), value_denom)).collect())
        .collect();
    let raw: Vec<i64> = (0..points).map(|_| rng.random_range(1..=6)).collect();
    let total: i64 = raw.iter().sum();
    let space = FiniteSpace::new(raw.iter().map(|&w| rat(w, total)).collect()).unwrap();
    (FunctionTable::new(table).unwrap(), space)
}

/// `P(sup_f S_n(f) ≥ u)` (or `>`) by walking all `N^n` tuples. Values and
/// weights are scaled to integers so the walk is pure integer arithmetic.
pub fn naive_sup_tail(
    class: &FunctionTable,
    space: &FiniteSpace,
    n: u32,
    u: &BigRational,
    strict: bool,
) -> BigRational {
    let points = space.point_count();
    let vden = class
        .rows()
        .iter()
        .flatten()
        .fold(BigInt::from(1), |a, v| a.lcm(v.denom()));
    let wden = space.weights().iter().fold(BigInt::from(1), |a, w| a.lcm(w.denom()));
    let to_i = |r: &BigRational, d: &BigInt| -> i128 {
        let x = r * BigRational::from_integer(d.clone());
        i128::try_from(x.to_integer()).unwrap()
    };
    let vals: Vec<Vec<i128>> = class.rows().iter().map(|row| row.iter().map(|v| to_i(v, &vden)).collect()).collect();
    let w: Vec<u128> = space.weights().iter().map(|x| to_i(x, &wden) as u128).collect();
    let threshold = u * BigRational::from_integer(vden.clone());
    let hit = |s: i128| {
        let s = BigRational::from_integer(s.into());
        if strict { s > threshold } else { s >= threshold }
    };
    let mut idx = vec![0usize; n as usize];
    let mut total: u128 = 0;
    loop {
        let prob: u128 = idx.iter().map(|&i| w[i]).product();
        if prob != 0 && vals.iter().any(|row| hit(idx.iter().map(|&i| row[i]).sum())) {
            total += prob;
        }
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                let denom = num_traits::pow(wden.clone(), n as usize);
                return BigRational::new(BigInt::from(total), denom);
            }
            idx[pos] += 1;
            if idx[pos] < points {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// `random_instance` with row and point counts drawn from ranges.
pub fn random_sized(
    rng: &mut ChaCha8Rng,
    rows: std::ops::RangeInclusive<usize>,
    points: std::ops::RangeInclusive<usize>,
    value_denom: i64,
) -> (FunctionTable, FiniteSpace) {
    let (r, p) = (rng.random_range(rows), rng.random_range(points));
    random_instance(rng, r, p, value_denom)
}
