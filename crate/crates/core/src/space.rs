//! Finite probability spaces, function classes stored as explicit value
//! tables, and the partitions of the point set that the exact engines run on.
//!
//! Product measures are never materialized: a sample of size `n` is always
//! represented through occupancy counts over the atoms of a partition.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};

use crate::combinat::{binomial, k_subsets};
use crate::error::{invalid, Error, Result};
use crate::exact::{format_rational, int, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteSpace {
    weights: Vec<Rational>,
}

impl FiniteSpace {
    pub fn new(weights: Vec<Rational>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptySpace);
        }
        let total: Rational = weights.iter().sum();
        if weights.iter().any(|w| w.is_negative()) || !total.is_one() {
            return Err(Error::BadWeights(format_rational(&total)));
        }
        Ok(FiniteSpace { weights })
    }

    pub fn uniform(point_count: usize) -> Result<Self> {
        if point_count == 0 {
            return Err(Error::EmptySpace);
        }
        let w = Rational::new(BigInt::one(), BigInt::from(point_count));
        Ok(FiniteSpace {
            weights: vec![w; point_count],
        })
    }

    pub fn point_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn weight(&self, point: usize) -> &Rational {
        &self.weights[point]
    }

    pub fn measure_of(&self, points: &[usize]) -> Rational {
        points.iter().map(|&p| &self.weights[p]).sum()
    }

    pub fn is_uniform(&self) -> bool {
        self.weights.iter().all(|w| w == &self.weights[0])
    }
}

pub fn make_uniform_space(point_count: usize) -> Result<FiniteSpace> {
    FiniteSpace::uniform(point_count)
}

/// A finite class of functions on `0..point_count`, one row per function,
/// every value an exact rational in [0, 1]. Duplicate rows are allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionTable {
    point_count: usize,
    rows: Vec<Vec<Rational>>,
}

impl FunctionTable {
    pub fn new(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyClass)?;
        let point_count = first.len();
        if point_count == 0 {
            return Err(Error::EmptySpace);
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != point_count {
                return Err(Error::Dimension {
                    expected: point_count,
                    got: row.len(),
                });
            }
            for (c, v) in row.iter().enumerate() {
                if v.is_negative() || v > &Rational::one() {
                    return Err(Error::ValueOutOfRange {
                        row: r,
                        col: c,
                        value: format_rational(v),
                    });
                }
            }
        }
        Ok(FunctionTable { point_count, rows })
    }

    /// Indicator rows of the given point sets.
    pub fn from_indicators(point_count: usize, sets: &[Vec<usize>]) -> Result<Self> {
        let rows = sets
            .iter()
            .map(|set| {
                let mut row = vec![Rational::zero(); point_count];
                for &p in set {
                    if p >= point_count {
                        return Err(invalid(format!("point {p} outside 0..{point_count}")));
                    }
                    row[p] = Rational::one();
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        FunctionTable::new(rows)
    }

    pub fn class_size(&self) -> usize {
        self.rows.len()
    }

    pub fn point_count(&self) -> usize {
        self.point_count
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.rows[i]
    }

    pub fn value(&self, row: usize, point: usize) -> &Rational {
        &self.rows[row][point]
    }

    pub fn column(&self, point: usize) -> Vec<Rational> {
        self.rows.iter().map(|r| r[point].clone()).collect()
    }

    pub fn is_indicator_row(&self, i: usize) -> bool {
        self.rows[i].iter().all(|v| v.is_zero() || v.is_one())
    }

    pub fn is_indicator_class(&self) -> bool {
        (0..self.rows.len()).all(|i| self.is_indicator_row(i))
    }

    pub fn check_space(&self, space: &FiniteSpace) -> Result<()> {
        if space.point_count() != self.point_count {
            return Err(Error::Dimension {
                expected: self.point_count,
                got: space.point_count(),
            });
        }
        Ok(())
    }

    pub fn integral(&self, row: usize, space: &FiniteSpace) -> Rational {
        self.rows[row]
            .iter()
            .zip(space.weights())
            .map(|(v, w)| v * w)
            .sum()
    }

    /// Restriction of every row to the listed points, in that order.
    pub fn restrict(&self, points: &[usize]) -> Result<Self> {
        let rows = self
            .rows
            .iter()
            .map(|row| points.iter().map(|&p| row[p].clone()).collect())
            .collect();
        FunctionTable::new(rows)
    }

    /// Rows `{x : f(x) >= threshold}` as a 0/1 table.
    pub fn level_indicators(&self, threshold: &Rational) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| if v >= threshold { Rational::one() } else { Rational::zero() })
                    .collect()
            })
            .collect();
        FunctionTable {
            point_count: self.point_count,
            rows,
        }
    }

    pub fn map_values(&self, f: impl Fn(&Rational) -> Rational) -> Result<Self> {
        FunctionTable::new(
            self.rows
                .iter()
                .map(|row| row.iter().map(&f).collect())
                .collect(),
        )
    }
}

/// Largest mean over the class: the smallest `rho` with `∫ f dμ <= rho` for all rows.
pub fn sup_mean(class: &FunctionTable, space: &FiniteSpace) -> Result<Rational> {
    class.check_space(space)?;
    Ok((0..class.class_size())
        .map(|r| class.integral(r, space))
        .max()
        .unwrap_or_else(Rational::zero))
}

/// Disjoint point sets covering the space, with their exact measures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionAlgebra {
    pub atoms: Vec<Vec<usize>>,
    pub atom_measures: Vec<Rational>,
}

impl PartitionAlgebra {
    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// Groups points by a key; atoms are ordered by their smallest point.
    pub fn group_by<K: std::hash::Hash + Eq>(
        space: &FiniteSpace,
        key: impl Fn(usize) -> K,
    ) -> PartitionAlgebra {
        let mut index: HashMap<K, usize> = HashMap::new();
        let mut atoms: Vec<Vec<usize>> = Vec::new();
        for p in 0..space.point_count() {
            let slot = *index.entry(key(p)).or_insert_with(|| {
                atoms.push(Vec::new());
                atoms.len() - 1
            });
            atoms[slot].push(p);
        }
        let atom_measures = atoms.iter().map(|a| space.measure_of(a)).collect();
        PartitionAlgebra {
            atoms,
            atom_measures,
        }
    }
}

/// Atoms of the algebra generated by the level sets `{x : f(x) >= threshold}`.
pub fn atoms_of_level_sets(
    class: &FunctionTable,
    space: &FiniteSpace,
    threshold: &Rational,
) -> Result<PartitionAlgebra> {
    class.check_space(space)?;
    Ok(PartitionAlgebra::group_by(space, |p| {
        class
            .rows()
            .iter()
            .map(|row| &row[p] >= threshold)
            .collect::<Vec<bool>>()
    }))
}

/// Constancy cells of the whole class: points with identical value columns.
pub fn value_atoms(class: &FunctionTable, space: &FiniteSpace) -> Result<PartitionAlgebra> {
    class.check_space(space)?;
    Ok(PartitionAlgebra::group_by(space, |p| class.column(p)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsetClassMode {
    Explicit,
    Implicit,
}

/// Indicators of all subsets of an `n`-point set with between 1 and
/// `max_size` points, described without enumerating them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubsetClassHandle {
    pub point_count: u64,
    pub max_size: u64,
}

impl SubsetClassHandle {
    pub fn cardinality(&self) -> BigUint {
        (1..=self.max_size)
            .map(|i| binomial(self.point_count, i))
            .sum()
    }

    /// Common mean of the largest members under the uniform measure.
    pub fn rho(&self) -> Rational {
        Rational::new(
            BigInt::from(self.max_size),
            BigInt::from(self.point_count),
        )
    }
}

#[derive(Debug, Clone)]
pub enum SubsetClass {
    Explicit(FunctionTable),
    Implicit(SubsetClassHandle),
}

pub fn subset_indicator_class(
    point_count: usize,
    max_size: usize,
    mode: SubsetClassMode,
    row_cap: usize,
) -> Result<SubsetClass> {
    if max_size == 0 || max_size > point_count {
        return Err(invalid(format!(
            "subset class needs 1 <= L <= N, got L={max_size}, N={point_count}"
        )));
    }
    let handle = SubsetClassHandle {
        point_count: point_count as u64,
        max_size: max_size as u64,
    };
    if mode == SubsetClassMode::Implicit {
        return Ok(SubsetClass::Implicit(handle));
    }
    let rows = handle.cardinality();
    if rows > BigUint::from(row_cap) || point_count > 63 {
        return Err(Error::CapExceeded {
            what: format!("explicit subset class with {rows} rows"),
            cap: format!("{row_cap} rows"),
            hint: "use the implicit mode",
        });
    }
    let mut table = Vec::new();
    for size in 1..=max_size as u32 {
        // lexicographic order on sorted member lists
        let mut masks: Vec<u64> = k_subsets(point_count as u32, size).collect();
        masks.sort_by_key(|m| members(*m));
        for m in masks {
            table.push(
                (0..point_count)
                    .map(|p| int(((m >> p) & 1) as i64))
                    .collect(),
            );
        }
    }
    Ok(SubsetClass::Explicit(FunctionTable::new(table)?))
}

fn members(mask: u64) -> Vec<u32> {
    (0..64).filter(|b| (mask >> b) & 1 == 1).collect()
}
