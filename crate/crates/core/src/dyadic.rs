//! Dyadic truncation of a class, level hit counts, and the value-cell
//! discretization with dyadic measure rounding and the hat space.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::UpperBound;
use crate::caps::Caps;
use crate::combinat::binomial;
use crate::error::{invalid, Error, Result};
use crate::exact::{ceil_to_bigint, floor_affine_sqrt2, int, ln_rational, to_f64, Rational};
use crate::inclusion::{bp_measure, IndicatorFamily};
use crate::space::{FiniteSpace, FunctionTable, PartitionAlgebra};
use crate::tail::{exact_sup_tail, TailResult};

fn pow2(j: u32) -> Rational {
    Rational::from_integer(BigInt::one() << j as usize)
}

fn inv_pow2(j: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << j as usize)
}

/// Smallest `R` with `n < 2^R`; then also `2^R ≤ 2n`.
pub fn dyadic_level_count(n: u64) -> Result<u32> {
    if n < 2 {
        return Err(invalid("n must be at least 2"));
    }
    Ok(64 - n.leading_zeros())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicLevel {
    pub j: u32,
    /// `min(2^{-j}, f)`.
    pub truncated: FunctionTable,
    /// `2^j min(2^{-j}, f)`, equal to 1 exactly where `f ≥ 2^{-j}`.
    pub normalized: FunctionTable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicDecomposition {
    pub n: u64,
    pub level_count: u32,
    pub levels: Vec<DyadicLevel>,
    base: FunctionTable,
}

impl DyadicDecomposition {
    pub fn base(&self) -> &FunctionTable {
        &self.base
    }
}

pub fn dyadic_truncate(class: &FunctionTable, n: u64) -> Result<DyadicDecomposition> {
    let level_count = dyadic_level_count(n)?;
    let levels = (1..=level_count)
        .map(|j| {
            let cap = inv_pow2(j);
            let truncated = class.map_values(|v| v.clone().min(cap.clone()))?;
            let scale = pow2(j);
            let normalized = truncated.map_values(|v| v * &scale)?;
            Ok(DyadicLevel { j, truncated, normalized })
        })
        .collect::<Result<_>>()?;
    Ok(DyadicDecomposition {
        n,
        level_count,
        levels,
        base: class.clone(),
    })
}

/// `H_j = #{l : f(x_{s_l}) ≥ 2^{-j}}` for `j = 1..=R`, for one row.
pub fn level_counts(decomp: &DyadicDecomposition, row: usize, sample: &[usize]) -> Result<Vec<u64>> {
    if row >= decomp.base.class_size() {
        return Err(invalid(format!("row {row} out of range")));
    }
    if let Some(&p) = sample.iter().find(|&&p| p >= decomp.base.point_count()) {
        return Err(invalid(format!("sample point {p} out of range")));
    }
    Ok(decomp
        .levels
        .iter()
        .map(|lvl| sample.iter().filter(|&&p| lvl.normalized.value(row, p).is_one()).count() as u64)
        .collect())
}

/// `Σ_j 2^{1-j} H_j + 1`.
pub fn domination_rhs(counts: &[u64]) -> Rational {
    counts
        .iter()
        .enumerate()
        .map(|(i, &h)| Rational::new(BigInt::from(h) * 2, BigInt::one() << (i + 1)))
        .sum::<Rational>()
        + Rational::one()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DominationReport {
    pub trials: u64,
    pub violations: u64,
    /// Smallest and largest `rhs − S_n(f)` seen.
    pub min_slack: Rational,
    pub max_slack: Rational,
}

/// Draws `trials` random `(row, sample)` pairs and checks
/// `S_n(f) ≤ Σ_j 2^{1-j} H_j(f) + 1` exactly.
pub fn domination_check(
    class: &FunctionTable,
    space: &FiniteSpace,
    n: u64,
    trials: u64,
    seed: u64,
) -> Result<DominationReport> {
    class.check_space(space)?;
    let decomp = dyadic_truncate(class, n)?;
    let weights: Vec<f64> = space.weights().iter().map(to_f64).collect();
    let sampler = WeightedIndex::new(&weights).map_err(|e| invalid(format!("weights: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = DominationReport {
        trials,
        violations: 0,
        min_slack: Rational::zero(),
        max_slack: Rational::zero(),
    };
    for t in 0..trials {
        let row = rng.random_range(0..class.class_size());
        let sample: Vec<usize> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
        let lhs: Rational = sample.iter().map(|&p| class.value(row, p)).sum();
        let slack = domination_rhs(&level_counts(&decomp, row, &sample)?) - lhs;
        if slack.is_negative() {
            report.violations += 1;
        }
        if t == 0 || slack < report.min_slack {
            report.min_slack = slack.clone();
        }
        if t == 0 || slack > report.max_slack {
            report.max_slack = slack;
        }
    }
    Ok(report)
}

/// `t(j) = floor((√2 − 1)/2 · (u − 1) · 2^{j/2}) + 1`, exactly.
pub fn t_threshold(u: &Rational, j: u32) -> Result<BigInt> {
    if u < &Rational::one() || j == 0 {
        return Err(invalid("need u >= 1 and j >= 1"));
    }
    let c = u - Rational::one();
    let m = pow2(j / 2);
    let half = &c * &m / int(2);
    // (√2 − 1)/2 · c · 2^{j/2} written as a√2 + b
    let (a, b) = if j.is_multiple_of(2) { (half.clone(), -half) } else { (-half, c * m) };
    Ok(floor_affine_sqrt2(&a, &b) + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DnMeasure {
    pub j: u32,
    pub t: BigInt,
    /// `μ_n(D_n(u, j))`: some row hits its level set at least `t` times.
    pub measure: TailResult,
    /// `C(n, t) μ_t(B_t)` for the level-indicator family, when computable.
    pub overcount: Option<Rational>,
}

pub fn dn_measure(class: &FunctionTable, space: &FiniteSpace, n: u32, u: &Rational, j: u32) -> Result<DnMeasure> {
    let t = t_threshold(u, j)?;
    let levels = class.level_indicators(&inv_pow2(j));
    let measure = exact_sup_tail(&levels, space, n, &Rational::from_integer(t.clone()), false)?;
    let overcount = match t.to_u32() {
        Some(0) => Some(Rational::one()),
        Some(tt) if tt > n => Some(Rational::zero()),
        Some(tt) if class.class_size() <= Caps::global().bp_class => {
            let family = IndicatorFamily::from_class(&levels, space)?;
            let bp = bp_measure(&family, tt)?;
            let c = Rational::from_integer(BigInt::from(binomial(n as u64, tt as u64)));
            bp.exact_value().map(|v| v * c)
        }
        _ => None,
    };
    Ok(DnMeasure { j, t, measure, overcount })
}

/// The chain `2n^t D 2^{jL}(2^{j+1}ρ)^{t/4} ≤ 2D(8n^5ρ)^{t/4} ≤ 2Dρ^{t/5} ≤ Dρ^{ju/25}`
/// evaluated for reporting.
pub fn lemma31_pieces(d: f64, l: f64, rho: &Rational, n: u64, u: &Rational, j: u32) -> Result<Vec<(&'static str, UpperBound)>> {
    if d < 1.0 || !rho.is_positive() {
        return Err(invalid("need D >= 1 and rho > 0"));
    }
    let t = to_f64(&Rational::from_integer(t_threshold(u, j)?));
    let (ln_d, ln_rho, ln_n, ln2) = (d.ln(), ln_rational(rho), (n as f64).ln(), std::f64::consts::LN_2);
    Ok(vec![
        (
            "2 n^t D 2^(jL) (2^(j+1) rho)^(t/4)",
            UpperBound::from_ln(ln2 + t * ln_n + ln_d + j as f64 * l * ln2 + t / 4.0 * ((j as f64 + 1.0) * ln2 + ln_rho)),
        ),
        ("2 D (8 n^5 rho)^(t/4)", UpperBound::from_ln(ln2 + ln_d + t / 4.0 * (8f64.ln() + 5.0 * ln_n + ln_rho))),
        ("2 D rho^(t/5)", UpperBound::from_ln(ln2 + ln_d + t / 5.0 * ln_rho)),
        ("D rho^(ju/25)", UpperBound::from_ln(ln_d + j as f64 * to_f64(u) / 25.0 * ln_rho)),
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubadditivityReport {
    pub lhs: Rational,
    pub levels: Vec<DnMeasure>,
    pub rhs: Rational,
    pub holds: bool,
}

/// `μ_n(B_n(u)) ≤ Σ_j μ_n(D_n(u, j))`, both sides exact.
pub fn subadditivity_check(class: &FunctionTable, space: &FiniteSpace, n: u32, u: &Rational, strict: bool) -> Result<SubadditivityReport> {
    let r = dyadic_level_count(n as u64)?;
    let lhs = exact_sup_tail(class, space, n, u, strict)?
        .exact_value()
        .cloned()
        .expect("exact");
    if u < &Rational::one() {
        // t(j) needs u >= 1; the right side is then vacuous
        return Ok(SubadditivityReport { holds: true, lhs, levels: Vec::new(), rhs: Rational::from_integer(r.into()) });
    }
    let levels = (1..=r).map(|j| dn_measure(class, space, n, u, j)).collect::<Result<Vec<_>>>()?;
    let rhs: Rational = levels.iter().map(|l| l.measure.exact_value().cloned().unwrap()).sum();
    Ok(SubadditivityReport { holds: lhs <= rhs, lhs, levels, rhs })
}

/// Bin index `s ∈ 1..=n` of a value: `B_1 = [0, 1/n]`, `B_s = ((s−1)/n, s/n]`.
pub fn bin_index(value: &Rational, n: u64) -> u64 {
    let s = ceil_to_bigint(&(value * Rational::from_integer(n.into())));
    s.to_u64().unwrap_or(0).max(1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellPartition {
    pub bin_count: u64,
    /// Positive-measure cells, in lexicographic order of their signatures.
    pub cells: PartitionAlgebra,
    pub signatures: Vec<Vec<u64>>,
}

impl CellPartition {
    pub fn cell_count(&self) -> usize {
        self.signatures.len()
    }
}

pub fn cell_partition(class: &FunctionTable, space: &FiniteSpace, n: u64) -> Result<CellPartition> {
    class.check_space(space)?;
    if n == 0 {
        return Err(invalid("bin count must be positive"));
    }
    let signature = |p: usize| -> Vec<u64> { class.rows().iter().map(|row| bin_index(&row[p], n)).collect() };
    let all = PartitionAlgebra::group_by(space, signature);
    let mut cells: Vec<(Vec<u64>, Vec<usize>, Rational)> = all
        .atoms
        .into_iter()
        .zip(all.atom_measures)
        .filter(|(_, m)| m.is_positive())
        .map(|(a, m)| (signature(a[0]), a, m))
        .collect();
    cells.sort_by(|x, y| x.0.cmp(&y.0));
    let signatures = cells.iter().map(|c| c.0.clone()).collect();
    let (atoms, atom_measures) = cells.into_iter().map(|c| (c.1, c.2)).unzip();
    Ok(CellPartition {
        bin_count: n,
        cells: PartitionAlgebra { atoms, atom_measures },
        signatures,
    })
}

/// Conditional mean of every row on every cell. Points outside the cells
/// (zero measure) keep their original values.
pub fn cell_average(class: &FunctionTable, space: &FiniteSpace, cells: &CellPartition) -> Result<FunctionTable> {
    class.check_space(space)?;
    let mut rows = class.rows().to_vec();
    for (atom, mass) in cells.cells.atoms.iter().zip(&cells.cells.atom_measures) {
        for row in rows.iter_mut() {
            let mean: Rational = atom.iter().map(|&p| &row[p] * space.weight(p)).sum::<Rational>() / mass;
            for &p in atom {
                row[p] = mean.clone();
            }
        }
    }
    FunctionTable::new(rows)
}

/// One row per class row, one column per cell: the cell means.
pub fn cell_values(averaged: &FunctionTable, cells: &CellPartition) -> Result<FunctionTable> {
    FunctionTable::new(
        averaged
            .rows()
            .iter()
            .map(|row| cells.cells.atoms.iter().map(|a| row[a[0]].clone()).collect())
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundedMeasure {
    pub grid_exponent: u32,
    pub original: Vec<Rational>,
    /// `α` with rounded mass `α 2^{-k}`.
    pub alpha: Vec<u64>,
    /// Cumulative ceilings `β_s = ⌈2^k Σ_{l≤s} μ_l⌉`.
    pub beta: Vec<u64>,
}

impl RoundedMeasure {
    pub fn masses(&self) -> Vec<Rational> {
        self.alpha.iter().map(|&a| Rational::from_integer(a.into()) * inv_pow2(self.grid_exponent)).collect()
    }

    pub fn space(&self) -> Result<FiniteSpace> {
        FiniteSpace::new(self.masses())
    }

    /// `max |rounded − original|` over cells.
    pub fn max_deviation(&self) -> Rational {
        self.masses()
            .iter()
            .zip(&self.original)
            .map(|(a, b)| (a - b).abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }
}

pub fn round_measure(masses: &[Rational], k: u32) -> Result<RoundedMeasure> {
    if k > 62 {
        return Err(invalid("grid exponent above 62"));
    }
    if masses.is_empty() || masses.iter().any(|m| m.is_negative()) || !masses.iter().sum::<Rational>().is_one() {
        return Err(invalid("masses must be nonnegative and sum to 1"));
    }
    let grid = pow2(k);
    let mut acc = Rational::zero();
    let mut beta = Vec::with_capacity(masses.len());
    for m in masses {
        acc += m;
        beta.push(ceil_to_bigint(&(&acc * &grid)).to_u64().expect("at most 2^k"));
    }
    let alpha = beta.iter().scan(0u64, |prev, &b| {
        let a = b - *prev;
        *prev = b;
        Some(a)
    });
    Ok(RoundedMeasure {
        grid_exponent: k,
        original: masses.to_vec(),
        alpha: alpha.collect(),
        beta,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HatSpace {
    pub space: FiniteSpace,
    /// `ŝ_j = s(j)/n` on each block.
    pub class: FunctionTable,
    /// Consecutive point ranges, one per cell, of sizes `α`.
    pub blocks: Vec<std::ops::Range<usize>>,
}

fn check_hat_size(k: u32) -> Result<usize> {
    let cap = Caps::global().hat_log2;
    if k > cap {
        return Err(Error::CapExceeded {
            what: format!("hat space with 2^{k} points"),
            cap: format!("2^{cap} points"),
            hint: "use a smaller grid exponent",
        });
    }
    Ok(1usize << k)
}

/// Uniform space on `2^k` points split into blocks of sizes `α`, carrying
/// per-cell values `values[row][cell]`.
pub fn hat_space_with_values(rounded: &RoundedMeasure, values: &FunctionTable) -> Result<HatSpace> {
    let size = check_hat_size(rounded.grid_exponent)?;
    let total: u64 = rounded.alpha.iter().sum();
    assert_eq!(total, size as u64, "rounded masses must fill the grid");
    if values.point_count() != rounded.alpha.len() {
        return Err(Error::Dimension { expected: rounded.alpha.len(), got: values.point_count() });
    }
    let mut blocks = Vec::with_capacity(rounded.alpha.len());
    let mut start = 0usize;
    for &a in &rounded.alpha {
        blocks.push(start..start + a as usize);
        start += a as usize;
    }
    let rows = values
        .rows()
        .iter()
        .map(|row| {
            let mut out = Vec::with_capacity(size);
            for (cell, b) in blocks.iter().enumerate() {
                out.extend(std::iter::repeat_n(row[cell].clone(), b.len()));
            }
            out
        })
        .collect();
    Ok(HatSpace { space: FiniteSpace::uniform(size)?, class: FunctionTable::new(rows)?, blocks })
}

/// The bin-level values `s(j)/n` of every row on every cell.
pub fn signature_values(cells: &CellPartition, rows: usize) -> Result<FunctionTable> {
    let n = Rational::from_integer(cells.bin_count.into());
    FunctionTable::new(
        (0..rows)
            .map(|r| cells.signatures.iter().map(|s| Rational::from_integer(s[r].into()) / &n).collect())
            .collect(),
    )
}

pub fn hat_space(rounded: &RoundedMeasure, cells: &CellPartition, rows: usize) -> Result<HatSpace> {
    hat_space_with_values(rounded, &signature_values(cells, rows)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HatCheck {
    pub cell_count: usize,
    /// Bin values `s(j)/n`: tail under `μ̄_k` on cells and on the hat space.
    pub bin_cells: Rational,
    pub bin_hat: Rational,
    /// Cell averages `f̃`: the same two tails.
    pub mean_cells: Rational,
    pub mean_hat: Rational,
    /// `P_μ(sup S_n(f) > u + 1)` and `P_μ(sup S_n(f̃) > u)`.
    pub shifted_original: Rational,
    pub averaged: Rational,
}

impl HatCheck {
    pub fn identity_holds(&self) -> bool {
        self.bin_cells == self.bin_hat && self.mean_cells == self.mean_hat
    }

    pub fn averaging_holds(&self) -> bool {
        self.shifted_original <= self.averaged
    }
}

fn tail(class: &FunctionTable, space: &FiniteSpace, n: u32, u: &Rational, strict: bool) -> Result<Rational> {
    Ok(exact_sup_tail(class, space, n, u, strict)?.exact_value().cloned().expect("exact"))
}

/// Exact tails of `sup S_n` under `μ̄_k` on the cells against the uniform
/// hat space, for both the bin values and the cell averages.
pub fn hat_distribution_check(
    class: &FunctionTable,
    space: &FiniteSpace,
    n: u32,
    u: &Rational,
    k: u32,
    strict: bool,
) -> Result<HatCheck> {
    let cells = cell_partition(class, space, n as u64)?;
    let averaged = cell_average(class, space, &cells)?;
    let means = cell_values(&averaged, &cells)?;
    let bins = signature_values(&cells, class.class_size())?;
    let rounded = round_measure(&cells.cells.atom_measures, k)?;
    let cell_space = rounded.space()?;
    let bin_hat = hat_space_with_values(&rounded, &bins)?;
    let mean_hat = hat_space_with_values(&rounded, &means)?;
    Ok(HatCheck {
        cell_count: cells.cell_count(),
        bin_cells: tail(&bins, &cell_space, n, u, strict)?,
        bin_hat: tail(&bin_hat.class, &bin_hat.space, n, u, strict)?,
        mean_cells: tail(&means, &cell_space, n, u, strict)?,
        mean_hat: tail(&mean_hat.class, &mean_hat.space, n, u, strict)?,
        shifted_original: tail(class, space, n, &(u + Rational::one()), true)?,
        averaged: tail(&averaged, space, n, u, true)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub k: u32,
    pub tail_k: Rational,
    pub error: Rational,
    /// `n Q 2^{-k}`.
    pub envelope: Rational,
    pub within: bool,
}

/// Tail of `sup S_n(f̃) > u` under `μ̄_k` against its value under `μ`.
pub fn convergence_sweep(
    class: &FunctionTable,
    space: &FiniteSpace,
    n: u32,
    u: &Rational,
    ks: impl IntoIterator<Item = u32>,
) -> Result<(Rational, Vec<SweepRow>)> {
    let cells = cell_partition(class, space, n as u64)?;
    let means = cell_values(&cell_average(class, space, &cells)?, &cells)?;
    let exact_space = FiniteSpace::new(cells.cells.atom_measures.clone())?;
    let limit = tail(&means, &exact_space, n, u, true)?;
    let q = Rational::from_integer(BigInt::from(cells.cell_count() as u64 * n as u64));
    let rows = ks
        .into_iter()
        .map(|k| {
            let rounded = round_measure(&cells.cells.atom_measures, k)?;
            let tail_k = tail(&means, &rounded.space()?, n, u, true)?;
            let error = (&tail_k - &limit).abs();
            let envelope = &q * inv_pow2(k);
            Ok(SweepRow { k, within: error <= envelope, tail_k, error, envelope })
        })
        .collect::<Result<_>>()?;
    Ok((limit, rows))
}

/// Count of points `2^k` for the hat space, as a big integer.
pub fn hat_point_count(k: u32) -> BigUint {
    BigUint::one() << k as usize
}
