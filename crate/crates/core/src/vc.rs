//! Traces of set systems on finite ground sets: shatter coefficients, VC
//! dimension and the `B n^K` trace bound.

use num_bigint::{BigInt, BigUint};
use num_traits::Zero;

use crate::caps::Caps;
use crate::combinat::k_subsets;
use crate::error::{invalid, Error, Result};
use crate::exact::Rational;
use crate::space::FunctionTable;

/// Subsets of `{0, …, ground-1}` stored as bit masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetSystem {
    ground: usize,
    sets: Vec<u32>,
}

impl SetSystem {
    pub fn new(ground: usize, sets: &[Vec<usize>]) -> Result<Self> {
        check_ground(ground)?;
        let mut masks = Vec::with_capacity(sets.len());
        for set in sets {
            let mut m = 0u32;
            for &p in set {
                if p >= ground {
                    return Err(invalid(format!("point {p} outside ground set of size {ground}")));
                }
                m |= 1 << p;
            }
            masks.push(m);
        }
        Ok(Self::from_masks(ground, masks))
    }

    fn from_masks(ground: usize, mut sets: Vec<u32>) -> Self {
        sets.sort_unstable();
        sets.dedup();
        SetSystem { ground, sets }
    }

    /// All subsets with at most `max_size` points, the empty set included.
    pub fn at_most_l_subsets(ground: usize, max_size: usize) -> Result<Self> {
        check_ground(ground)?;
        let sets = (0..=max_size.min(ground) as u32)
            .flat_map(|k| k_subsets(ground as u32, k).map(|m| m as u32))
            .collect();
        Ok(Self::from_masks(ground, sets))
    }

    pub fn power_set(ground: usize) -> Result<Self> {
        check_ground(ground)?;
        Ok(Self::from_masks(ground, (0..1u32 << ground).collect()))
    }

    /// The sets `{x: f(x) = 1}` of an indicator class.
    pub fn from_indicator_class(class: &FunctionTable) -> Result<Self> {
        if let Some(row) = (0..class.class_size()).find(|&r| !class.is_indicator_row(r)) {
            return Err(Error::NotIndicator(row));
        }
        let ground = class.point_count();
        check_ground(ground)?;
        let sets = class
            .rows()
            .iter()
            .map(|row| row.iter().enumerate().filter(|(_, v)| !v.is_zero()).fold(0u32, |m, (p, _)| m | 1 << p))
            .collect();
        Ok(Self::from_masks(ground, sets))
    }

    pub fn ground(&self) -> usize {
        self.ground
    }

    /// Distinct sets, as sorted bit masks.
    pub fn sets(&self) -> &[u32] {
        &self.sets
    }
}

fn check_ground(ground: usize) -> Result<()> {
    let cap = Caps::global().shatter_ground.min(31);
    if ground > cap {
        return Err(Error::CapExceeded {
            what: format!("ground set of {ground} points"),
            cap: format!("{cap} points"),
            hint: "trace counts enumerate every n-subset of the ground set",
        });
    }
    Ok(())
}

/// Number of distinct traces `S ∩ D` on the subset `s` (a mask).
fn trace_count(system: &SetSystem, s: u32, limit: usize) -> usize {
    let positions: Vec<u32> = (0..32).filter(|b| s >> b & 1 == 1).collect();
    let mut seen = vec![0u64; (1usize << positions.len()).div_ceil(64)];
    let mut count = 0;
    for &d in &system.sets {
        let t = d & s;
        let key = positions.iter().enumerate().fold(0usize, |k, (i, &b)| k | (((t >> b) & 1) as usize) << i);
        let (word, bit) = (key / 64, key % 64);
        if seen[word] >> bit & 1 == 0 {
            seen[word] |= 1 << bit;
            count += 1;
            if count == limit {
                break;
            }
        }
    }
    count
}

/// Largest number of distinct traces on an `n`-point subset of the ground set.
pub fn shatter_coefficient(system: &SetSystem, n: usize) -> Result<BigUint> {
    if n > system.ground {
        return Err(invalid(format!("n = {n} exceeds the ground set size {}", system.ground)));
    }
    let most = (1usize << n).min(system.sets.len());
    let mut best = 0;
    for s in k_subsets(system.ground as u32, n as u32) {
        best = best.max(trace_count(system, s as u32, most));
        if best == most {
            break;
        }
    }
    Ok(BigUint::from(best))
}

/// Largest `n` such that some `n`-point set is shattered.
pub fn vc_dimension(system: &SetSystem) -> Result<usize> {
    if system.sets.is_empty() {
        return Err(invalid("the set system is empty"));
    }
    let mut n = 0;
    while n < system.ground && shatter_coefficient(system, n + 1)? == BigUint::from(1u64 << (n + 1)) {
        n += 1;
    }
    Ok(n)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VcRow {
    pub n: usize,
    pub trace_count: BigUint,
    /// `B n^K`, exact.
    pub bound: Rational,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VcParams {
    pub parameter_b: Rational,
    pub exponent_k: u32,
    pub per_n_report: Vec<VcRow>,
}

impl VcParams {
    pub fn all_hold(&self) -> bool {
        self.per_n_report.iter().all(|r| r.holds)
    }
}

/// Compares the exact trace count with `B n^K` for every `n` in the range.
/// The result is a report; failures are data, not errors.
pub fn check_vc_bound(
    system: &SetSystem,
    parameter_b: &Rational,
    exponent_k: u32,
    n_range: impl IntoIterator<Item = usize>,
) -> Result<VcParams> {
    if parameter_b <= &Rational::zero() || exponent_k == 0 {
        return Err(invalid("B must be positive and K at least 1"));
    }
    let mut rows = Vec::new();
    for n in n_range {
        let traces = shatter_coefficient(system, n)?;
        let bound = parameter_b * Rational::from_integer(BigInt::from(n).pow(exponent_k));
        let holds = Rational::from_integer(BigInt::from(traces.clone())) <= bound;
        rows.push(VcRow {
            n,
            trace_count: traces,
            bound,
            holds,
        });
    }
    Ok(VcParams {
        parameter_b: parameter_b.clone(),
        exponent_k,
        per_n_report: rows,
    })
}
