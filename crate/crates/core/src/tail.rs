//! Exact tail probabilities of `sup_f S_n(f)` for finite nonnegative classes.
//!
//! The class is compressed to its constancy cells (points with identical
//! value columns). An i.i.d. sample of size `n` is then summarized by the
//! occupancy vector over the cells, which has a multinomial law, and every
//! partial sum is a linear function of that vector. The DP walks the
//! compositions of `n` depth-first, accepting a whole subtree as soon as the
//! supremum already clears the threshold and rejecting it once no
//! completion can.

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::bounds::{margin_log10, BoundValue};
use crate::caps::Caps;
use crate::combinat::binomial;
use crate::error::{invalid, Error, Result};
use crate::exact::{ceil_to_bigint, floor_to_bigint, lcm_of_denominators, Rational};
use crate::space::{value_atoms, FiniteSpace, FunctionTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ExactDp,
    InclusionExclusion,
    ClosedForm,
    MonteCarlo,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::ExactDp => "exact-dp",
            Method::InclusionExclusion => "inclusion-exclusion",
            Method::ClosedForm => "closed-form",
            Method::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Probability {
    Exact(Rational),
    Estimate {
        estimate: f64,
        ci_low: f64,
        ci_high: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundComparison {
    pub name: String,
    pub value: BoundValue,
    pub satisfied: bool,
    pub margin_log10: f64,
    pub in_regime: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailResult {
    pub probability: Probability,
    pub method: Method,
    pub compared_bounds: Vec<BoundComparison>,
}

impl TailResult {
    pub fn exact(value: Rational, method: Method) -> Self {
        TailResult {
            probability: Probability::Exact(value),
            method,
            compared_bounds: Vec::new(),
        }
    }

    pub fn exact_value(&self) -> Option<&Rational> {
        match &self.probability {
            Probability::Exact(r) => Some(r),
            Probability::Estimate { .. } => None,
        }
    }

    /// Records a bound comparison against the exact value.
    pub fn compare(&mut self, name: &str, value: BoundValue, in_regime: bool) -> &BoundComparison {
        let lhs = self
            .exact_value()
            .cloned()
            .expect("bound comparisons need an exact probability");
        let satisfied = value.admits(&lhs);
        let margin = margin_log10(&lhs, &value);
        self.compared_bounds.push(BoundComparison {
            name: name.to_string(),
            value,
            satisfied,
            margin_log10: margin,
            in_regime,
        });
        self.compared_bounds.last().unwrap()
    }
}

/// A class reduced to integer values on its positive-measure constancy
/// cells, ready for threshold queries.
#[derive(Debug, Clone)]
pub(crate) struct ScaledClass {
    /// `values[f][a]`: value of row `f` on cell `a`, times `scale`.
    pub values: Vec<Vec<i128>>,
    pub scale: BigInt,
    /// Cell weight numerators over the common denominator `weight_denom`.
    pub weights: Vec<BigUint>,
    pub weight_denom: BigUint,
}

const SCALE_LIMIT_BITS: u64 = 90;

impl ScaledClass {
    pub fn new(class: &FunctionTable, space: &FiniteSpace) -> Result<Self> {
        let atoms = value_atoms(class, space)?;
        let keep: Vec<usize> = (0..atoms.atom_count())
            .filter(|&a| atoms.atom_measures[a].is_positive())
            .collect();
        let reps: Vec<usize> = keep.iter().map(|&a| atoms.atoms[a][0]).collect();
        let scale = lcm_of_denominators(class.rows().iter().flat_map(|r| reps.iter().map(move |&p| &r[p])));
        if scale.bits() > SCALE_LIMIT_BITS {
            return Err(Error::ScaleOverflow);
        }
        let values = class
            .rows()
            .iter()
            .map(|row| {
                reps.iter()
                    .map(|&p| {
                        (&row[p] * Rational::from_integer(scale.clone()))
                            .to_integer()
                            .to_i128()
                            .ok_or(Error::ScaleOverflow)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let measures: Vec<&Rational> = keep.iter().map(|&a| &atoms.atom_measures[a]).collect();
        let denom = lcm_of_denominators(measures.iter().copied());
        let weights = measures
            .iter()
            .map(|m| {
                (*m * Rational::from_integer(denom.clone()))
                    .to_integer()
                    .to_biguint()
                    .expect("measures are nonnegative")
            })
            .collect();
        Ok(ScaledClass {
            values,
            scale,
            weights,
            weight_denom: denom.to_biguint().expect("positive"),
        })
    }

    pub fn cell_count(&self) -> usize {
        self.weights.len()
    }

    /// Smallest scaled integer sum that counts as a hit for `u`.
    pub fn threshold(&self, u: &Rational, strict: bool) -> BigInt {
        let scaled = u * Rational::from_integer(self.scale.clone());
        if strict {
            floor_to_bigint(&scaled) + 1
        } else {
            ceil_to_bigint(&scaled)
        }
    }
}

pub fn exact_sup_tail(
    class: &FunctionTable,
    space: &FiniteSpace,
    n: u32,
    u: &Rational,
    strict: bool,
) -> Result<TailResult> {
    exact_sup_tail_with_cap(class, space, n, u, strict, Caps::global().dp_states)
}

pub fn exact_sup_tail_with_cap(
    class: &FunctionTable,
    space: &FiniteSpace,
    n: u32,
    u: &Rational,
    strict: bool,
    state_cap: u64,
) -> Result<TailResult> {
    let scaled = ScaledClass::new(class, space)?;
    let p = occupancy_tail(&scaled, n, u, strict, state_cap)?;
    Ok(TailResult::exact(p, Method::ExactDp))
}

pub(crate) fn occupancy_tail(
    scaled: &ScaledClass,
    n: u32,
    u: &Rational,
    strict: bool,
    state_cap: u64,
) -> Result<Rational> {
    if n == 0 {
        return Err(invalid("sample size n must be at least 1"));
    }
    let q = scaled.cell_count() as u64;
    let states = binomial(n as u64 + q - 1, q - 1);
    if states > BigUint::from(state_cap) {
        return Err(Error::CapExceeded {
            what: format!("occupancy state count {states} (n={n}, cells={q})"),
            cap: state_cap.to_string(),
            hint: "estimate this tail with Monte Carlo instead",
        });
    }
    let threshold = scaled.threshold(u, strict);
    let max_sum = BigInt::from(n) * &scaled.scale;
    let total_mass = num_traits::pow(scaled.weight_denom.clone(), n as usize);
    let to_rational = |num: BigUint| {
        Rational::new(
            BigInt::from_biguint(Sign::Plus, num),
            BigInt::from_biguint(Sign::Plus, total_mass.clone()),
        )
    };
    if threshold > max_sum {
        return Ok(Rational::zero());
    }
    if !threshold.is_positive() {
        return Ok(Rational::one());
    }
    let threshold = threshold.to_i128().ok_or(Error::ScaleOverflow)?;
    let mut dp = Dfs::new(scaled, n, threshold);
    let mut sums = vec![0i128; scaled.values.len()];
    dp.walk(0, n as usize, &mut sums, BigUint::one());
    Ok(to_rational(dp.total))
}

struct Dfs<'a> {
    class: &'a ScaledClass,
    threshold: i128,
    /// `suffix_max[f][a]`: largest value of row `f` on cells `a..`.
    suffix_max: Vec<Vec<i128>>,
    /// `suffix_weight[a]`: total weight numerator of cells `a..`.
    suffix_weight: Vec<BigUint>,
    /// `weight_pow[a][c]`: `weights[a]^c`.
    weight_pow: Vec<Vec<BigUint>>,
    binom: Vec<Vec<BigUint>>,
    total: BigUint,
}

impl<'a> Dfs<'a> {
    fn new(class: &'a ScaledClass, n: u32, threshold: i128) -> Self {
        let q = class.cell_count();
        let n = n as usize;
        let suffix_max = class
            .values
            .iter()
            .map(|row| {
                let mut out = vec![0i128; q + 1];
                for a in (0..q).rev() {
                    out[a] = out[a + 1].max(row[a]);
                }
                out
            })
            .collect();
        let mut suffix_weight = vec![BigUint::zero(); q + 1];
        for a in (0..q).rev() {
            suffix_weight[a] = &suffix_weight[a + 1] + &class.weights[a];
        }
        let weight_pow = class
            .weights
            .iter()
            .map(|w| {
                let mut pows = Vec::with_capacity(n + 1);
                pows.push(BigUint::one());
                for c in 1..=n {
                    let next = &pows[c - 1] * w;
                    pows.push(next);
                }
                pows
            })
            .collect();
        let mut binom = vec![vec![BigUint::one()]];
        for r in 1..=n {
            let prev = &binom[r - 1];
            let mut row = vec![BigUint::one(); r + 1];
            for c in 1..r {
                row[c] = &prev[c - 1] + &prev[c];
            }
            binom.push(row);
        }
        Dfs {
            class,
            threshold,
            suffix_max,
            suffix_weight,
            weight_pow,
            binom,
            total: BigUint::zero(),
        }
    }

    fn walk(&mut self, cell: usize, remaining: usize, sums: &mut [i128], term: BigUint) {
        let current = sums.iter().copied().max().unwrap_or(0);
        if current >= self.threshold {
            // values are nonnegative: every completion is a hit
            self.total += term * num_traits::pow(self.suffix_weight[cell].clone(), remaining);
            return;
        }
        if remaining == 0 {
            return;
        }
        let reachable = sums
            .iter()
            .zip(&self.suffix_max)
            .any(|(s, m)| s + remaining as i128 * m[cell] >= self.threshold);
        if !reachable {
            return;
        }
        let last = cell + 1 == self.class.cell_count();
        let range = if last { remaining..=remaining } else { 0..=remaining };
        for c in range {
            if self.class.weights[cell].is_zero() && c > 0 {
                break;
            }
            let next_term = &term * &self.binom[remaining][c] * &self.weight_pow[cell][c];
            for (s, row) in sums.iter_mut().zip(&self.class.values) {
                *s += c as i128 * row[cell];
            }
            if last {
                if sums.iter().copied().max().unwrap_or(0) >= self.threshold {
                    self.total += next_term;
                }
            } else {
                self.walk(cell + 1, remaining - c, sums, next_term);
            }
            for (s, row) in sums.iter_mut().zip(&self.class.values) {
                *s -= c as i128 * row[cell];
            }
        }
    }
}
