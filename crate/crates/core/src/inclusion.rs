//! Measure of the product-hit union `B_p = ∪_f {f = 1 in every coordinate}`
//! by inclusion-exclusion over the class:
//! `μ_p(B_p) = Σ_{∅≠T} (-1)^{|T|+1} μ(∩_{f∈T} A_f)^p`.
//!
//! Only intersection measures enter, so the underlying space never has to
//! be enumerated. An [`IndicatorFamily`] stores the disjoint pieces of the
//! Venn diagram (mask of containing sets, measure); every intersection
//! measure is a sum of pieces.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::caps::Caps;
use crate::error::{invalid, Error, Result};
use crate::exact::{lcm_of_denominators, Rational};
use crate::space::{FiniteSpace, FunctionTable};
use crate::tail::{Method, TailResult};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorFamily {
    set_count: usize,
    /// Venn pieces with nonempty mask; bit `f` set when the piece lies in `A_f`.
    pieces: Vec<(u32, Rational)>,
}

impl IndicatorFamily {
    pub fn from_pieces(set_count: usize, pieces: Vec<(u32, Rational)>) -> Result<Self> {
        if set_count == 0 || set_count > 32 {
            return Err(invalid(format!("indicator family needs 1..=32 sets, got {set_count}")));
        }
        let mut merged: HashMap<u32, Rational> = HashMap::new();
        for (mask, m) in pieces {
            if set_count < 32 && mask >> set_count != 0 {
                return Err(invalid(format!("piece mask {mask:#x} names a set beyond {set_count}")));
            }
            if m.is_negative() {
                return Err(invalid("piece measures must be nonnegative"));
            }
            if mask != 0 && !m.is_zero() {
                *merged.entry(mask).or_insert_with(Rational::zero) += m;
            }
        }
        let mut pieces: Vec<(u32, Rational)> = merged.into_iter().collect();
        pieces.sort_by_key(|(m, _)| *m);
        let covered: Rational = pieces.iter().map(|(_, m)| m).sum();
        if covered > Rational::one() {
            return Err(invalid("pieces carry more than total mass 1"));
        }
        Ok(IndicatorFamily { set_count, pieces })
    }

    /// Family of the 0/1 rows of an explicit class.
    pub fn from_class(class: &FunctionTable, space: &FiniteSpace) -> Result<Self> {
        class.check_space(space)?;
        if let Some(bad) = (0..class.class_size()).find(|&r| !class.is_indicator_row(r)) {
            return Err(Error::NotIndicator(bad));
        }
        if class.class_size() > 32 {
            return Err(invalid("indicator families are limited to 32 sets"));
        }
        let pieces = (0..space.point_count())
            .map(|p| {
                let mask = (0..class.class_size())
                    .filter(|&r| class.value(r, p).is_one())
                    .fold(0u32, |m, r| m | (1 << r));
                (mask, space.weight(p).clone())
            })
            .collect();
        IndicatorFamily::from_pieces(class.class_size(), pieces)
    }

    /// Family given by all intersection measures: `table[T] = μ(∩_{f∈T} A_f)`
    /// for every nonempty mask `T` (`table[0]` is ignored). Rejects tables no
    /// measure can realize.
    pub fn from_intersections(set_count: usize, table: &[Rational]) -> Result<Self> {
        if set_count == 0 || set_count > 24 {
            return Err(invalid("intersection tables are limited to 1..=24 sets"));
        }
        if table.len() != 1usize << set_count {
            return Err(Error::Dimension {
                expected: 1 << set_count,
                got: table.len(),
            });
        }
        let denom = lcm_of_denominators(table.iter().skip(1));
        let mut work: Vec<BigInt> = table
            .iter()
            .map(|m| (m * Rational::from_integer(denom.clone())).to_integer())
            .collect();
        work[0] = BigInt::zero();
        // superset Möbius transform: exact-mask piece measures
        for bit in 0..set_count {
            for mask in 0..work.len() {
                if mask & (1 << bit) == 0 {
                    let hi = work[mask | (1 << bit)].clone();
                    if mask != 0 {
                        work[mask] -= hi;
                    }
                }
            }
        }
        let mut pieces = Vec::new();
        for (mask, v) in work.into_iter().enumerate().skip(1) {
            if v.is_negative() {
                return Err(invalid(format!(
                    "intersection table is inconsistent: piece {mask:#x} would be negative"
                )));
            }
            if !v.is_zero() {
                pieces.push((mask as u32, Rational::new(v, denom.clone())));
            }
        }
        IndicatorFamily::from_pieces(set_count, pieces)
    }

    pub fn set_count(&self) -> usize {
        self.set_count
    }

    pub fn pieces(&self) -> &[(u32, Rational)] {
        &self.pieces
    }

    pub fn intersection_measure(&self, sets: u32) -> Rational {
        self.pieces
            .iter()
            .filter(|(m, _)| m & sets == sets)
            .map(|(_, v)| v)
            .sum()
    }

    pub fn set_measure(&self, f: usize) -> Rational {
        self.intersection_measure(1 << f)
    }

    /// The family as an explicit class on a space with one point per piece
    /// plus one for the uncovered remainder (if it has mass).
    pub fn to_table(&self) -> Result<(FunctionTable, FiniteSpace)> {
        let mut weights: Vec<Rational> = self.pieces.iter().map(|(_, m)| m.clone()).collect();
        let mut masks: Vec<u32> = self.pieces.iter().map(|(m, _)| *m).collect();
        let rest = Rational::one() - weights.iter().sum::<Rational>();
        if rest.is_positive() || weights.is_empty() {
            weights.push(rest);
            masks.push(0);
        }
        let rows = (0..self.set_count)
            .map(|f| {
                masks
                    .iter()
                    .map(|m| if m >> f & 1 == 1 { Rational::one() } else { Rational::zero() })
                    .collect()
            })
            .collect();
        Ok((FunctionTable::new(rows)?, FiniteSpace::new(weights)?))
    }
}

pub fn bp_measure(family: &IndicatorFamily, p: u32) -> Result<TailResult> {
    bp_measure_with_cap(family, p, Caps::global().bp_class)
}

pub fn bp_measure_with_cap(family: &IndicatorFamily, p: u32, class_cap: usize) -> Result<TailResult> {
    if family.set_count > class_cap {
        return Err(Error::CapExceeded {
            what: format!("inclusion-exclusion over {} sets", family.set_count),
            cap: format!("{class_cap} sets"),
            hint: "split the family or raise SUPLAB_BP_CAP",
        });
    }
    if p == 0 {
        return Err(invalid("p must be at least 1"));
    }
    let denom = lcm_of_denominators(family.pieces.iter().map(|(_, m)| m));
    let scaled: Vec<(u32, BigInt)> = family
        .pieces
        .iter()
        .map(|(mask, m)| (*mask, (m * Rational::from_integer(denom.clone())).to_integer()))
        .collect();
    // intersection numerators, only for masks with positive measure
    let mut inter: HashMap<u32, BigInt> = HashMap::new();
    for (mask, m) in &scaled {
        let mut sub = *mask;
        while sub != 0 {
            *inter.entry(sub).or_insert_with(BigInt::zero) += m;
            sub = (sub - 1) & mask;
        }
    }
    // group signed coefficients by intersection value
    let mut coeff: HashMap<BigInt, i64> = HashMap::new();
    for (mask, m) in inter {
        let sign = if mask.count_ones() % 2 == 1 { 1 } else { -1 };
        *coeff.entry(m).or_insert(0) += sign;
    }
    let mut total = BigInt::zero();
    for (m, c) in coeff {
        if c != 0 {
            total += BigInt::from(c) * num_traits::pow(m, p as usize);
        }
    }
    let value = Rational::new(total, num_traits::pow(denom, p as usize));
    debug_assert!(!value.is_negative());
    Ok(TailResult::exact(value, Method::InclusionExclusion))
}

/// `μ_p(B_p)` for an explicit class of 0/1 rows.
pub fn bp_measure_class(class: &FunctionTable, space: &FiniteSpace, p: u32) -> Result<TailResult> {
    bp_measure(&IndicatorFamily::from_class(class, space)?, p)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};

    fn value(family: &IndicatorFamily, p: u32) -> Rational {
        bp_measure(family, p).unwrap().exact_value().unwrap().clone()
    }

    #[test]
    fn single_set() {
        let f = IndicatorFamily::from_pieces(1, vec![(1, rat(3, 10))]).unwrap();
        assert_eq!(value(&f, 2), rat(9, 100));
    }

    #[test]
    fn overlapping_pair() {
        // μ(A1) = μ(A2) = 1/10, μ(A1 ∩ A2) = 1/20
        let f = IndicatorFamily::from_pieces(2, vec![(0b01, rat(1, 20)), (0b10, rat(1, 20)), (0b11, rat(1, 20))]).unwrap();
        assert_eq!(value(&f, 2), rat(7, 400));
        let table = vec![int(1), rat(1, 10), rat(1, 10), rat(1, 20)];
        assert_eq!(IndicatorFamily::from_intersections(2, &table).unwrap(), f);
    }

    #[test]
    fn disjoint_pair() {
        let f = IndicatorFamily::from_pieces(2, vec![(0b01, rat(1, 10)), (0b10, rat(1, 5))]).unwrap();
        assert_eq!(value(&f, 3), rat(9, 1000));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(IndicatorFamily::from_pieces(2, vec![(0b100, rat(1, 2))]).is_err());
        assert!(IndicatorFamily::from_pieces(1, vec![(1, rat(3, 2))]).is_err());
        // μ(A1 ∩ A2) larger than μ(A1)
        let table = vec![int(1), rat(1, 10), rat(1, 5), rat(1, 5)];
        assert!(IndicatorFamily::from_intersections(2, &table).is_err());
        let space = FiniteSpace::uniform(2).unwrap();
        let half = FunctionTable::new(vec![vec![rat(1, 2), int(0)]]).unwrap();
        assert!(matches!(IndicatorFamily::from_class(&half, &space), Err(Error::NotIndicator(0))));
        let big = IndicatorFamily::from_pieces(21, vec![(1, rat(1, 2))]).unwrap();
        assert!(matches!(bp_measure(&big, 2), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn table_view_preserves_measures() {
        let f = IndicatorFamily::from_pieces(2, vec![(0b01, rat(1, 20)), (0b11, rat(1, 20))]).unwrap();
        let (class, space) = f.to_table().unwrap();
        assert_eq!(class.integral(0, &space), rat(1, 10));
        assert_eq!(class.integral(1, &space), rat(1, 20));
        assert_eq!(bp_measure_class(&class, &space, 2).unwrap().exact_value().unwrap(), &value(&f, 2));
    }
}
