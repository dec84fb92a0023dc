//! L₁ covers of a class under a probability measure and the (D, L) fit.
//!
//! A cover must use rows of the class itself as centers, and every row has
//! to be strictly closer than `ε` to some center.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::caps::Caps;
use crate::combinat::k_subsets;
use crate::error::{invalid, Error, Result};
use crate::exact::{ln_rational, round_up, Rational};
use crate::space::{value_atoms, FiniteSpace, FunctionTable};

pub fn l1_distance(a: &[Rational], b: &[Rational], weights: &[Rational]) -> Result<Rational> {
    if a.len() != b.len() || a.len() != weights.len() {
        return Err(Error::Dimension {
            expected: weights.len(),
            got: if a.len() != weights.len() { a.len() } else { b.len() },
        });
    }
    Ok(a.iter()
        .zip(b)
        .zip(weights)
        .filter(|((x, y), _)| x != y)
        .map(|((x, y), w)| (x - y).abs() * w)
        .sum())
}

#[allow(clippy::needless_range_loop)]
fn distance_matrix(class: &FunctionTable, measure: &FiniteSpace) -> Result<Vec<Vec<Rational>>> {
    class.check_space(measure)?;
    let r = class.class_size();
    let mut d = vec![vec![Rational::zero(); r]; r];
    for i in 0..r {
        for j in i + 1..r {
            let v = l1_distance(class.row(i), class.row(j), measure.weights())?;
            d[i][j] = v.clone();
            d[j][i] = v;
        }
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverCertificate {
    pub epsilon: Rational,
    pub center_row_indices: Vec<usize>,
    /// Largest distance from a row to its nearest center.
    pub worst_gap: Rational,
}

impl CoverCertificate {
    pub fn size(&self) -> usize {
        self.center_row_indices.len()
    }

    /// Recomputes the gap from scratch and checks `worst_gap < ε`.
    pub fn verify(&self, class: &FunctionTable, measure: &FiniteSpace) -> Result<bool> {
        let mut worst = Rational::zero();
        for i in 0..class.class_size() {
            let mut best: Option<Rational> = None;
            for &c in &self.center_row_indices {
                let d = l1_distance(class.row(i), class.row(c), measure.weights())?;
                if best.as_ref().is_none_or(|b| &d < b) {
                    best = Some(d);
                }
            }
            let best = best.ok_or_else(|| invalid("certificate has no centers"))?;
            worst = worst.max(best);
        }
        Ok(worst == self.worst_gap && worst < self.epsilon)
    }
}

fn check_epsilon(epsilon: &Rational) -> Result<()> {
    if !epsilon.is_positive() || epsilon > &Rational::from_integer(BigInt::from(1)) {
        return Err(invalid("epsilon must lie in (0, 1]"));
    }
    Ok(())
}

/// Farthest-point selection starting from row 0; ties go to the lowest index.
pub fn greedy_cover(
    class: &FunctionTable,
    measure: &FiniteSpace,
    epsilon: &Rational,
) -> Result<CoverCertificate> {
    check_epsilon(epsilon)?;
    let d = distance_matrix(class, measure)?;
    Ok(greedy_from_matrix(&d, epsilon))
}

fn greedy_from_matrix(d: &[Vec<Rational>], epsilon: &Rational) -> CoverCertificate {
    let mut centers = vec![0usize];
    let mut gap: Vec<Rational> = d[0].clone();
    loop {
        let (far, worst) = gap
            .iter()
            .enumerate()
            .fold((0, &gap[0]), |(bi, bv), (i, v)| if v > bv { (i, v) } else { (bi, bv) });
        if worst < epsilon {
            return CoverCertificate {
                epsilon: epsilon.clone(),
                center_row_indices: centers,
                worst_gap: worst.clone(),
            };
        }
        centers.push(far);
        for (g, nd) in gap.iter_mut().zip(&d[far]) {
            if nd < g {
                *g = nd.clone();
            }
        }
    }
}

/// Minimal cover by exhaustive search over center sets of increasing size.
pub fn exact_min_cover_certificate(
    class: &FunctionTable,
    measure: &FiniteSpace,
    epsilon: &Rational,
    row_cap: usize,
) -> Result<CoverCertificate> {
    check_epsilon(epsilon)?;
    let r = class.class_size();
    if r > row_cap || r > 63 {
        return Err(Error::CapExceeded {
            what: format!("exhaustive cover search over {r} rows"),
            cap: format!("{} rows", row_cap.min(63)),
            hint: "use greedy_cover for larger classes",
        });
    }
    let d = distance_matrix(class, measure)?;
    Ok(exact_from_matrix(&d, epsilon))
}

fn exact_from_matrix(d: &[Vec<Rational>], epsilon: &Rational) -> CoverCertificate {
    let r = d.len();
    let full: u64 = if r == 64 { u64::MAX } else { (1u64 << r) - 1 };
    let reach: Vec<u64> = (0..r)
        .map(|c| (0..r).filter(|&i| &d[c][i] < epsilon).fold(0u64, |m, i| m | (1 << i)))
        .collect();
    let greedy = greedy_from_matrix(d, epsilon);
    for k in 1..greedy.size() {
        // lexicographically first center set that works
        let mut best: Option<Vec<usize>> = None;
        for mask in k_subsets(r as u32, k as u32) {
            let centers: Vec<usize> = (0..r).filter(|b| mask >> b & 1 == 1).collect();
            let covered = centers.iter().fold(0u64, |m, &c| m | reach[c]);
            if covered == full && best.as_ref().is_none_or(|b| &centers < b) {
                best = Some(centers);
            }
        }
        if let Some(centers) = best {
            let worst_gap = (0..r)
                .map(|i| centers.iter().map(|&c| &d[c][i]).min().unwrap().clone())
                .max()
                .unwrap();
            return CoverCertificate {
                epsilon: epsilon.clone(),
                center_row_indices: centers,
                worst_gap,
            };
        }
    }
    greedy
}

pub fn exact_min_cover(
    class: &FunctionTable,
    measure: &FiniteSpace,
    epsilon: &Rational,
    row_cap: usize,
) -> Result<usize> {
    exact_min_cover_certificate(class, measure, epsilon, row_cap).map(|c| c.size())
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub dirichlet_draws: usize,
    pub climb_steps: usize,
    pub seed: u64,
    pub exact_row_cap: usize,
    /// Include the given base measure itself in the family.
    pub include_base: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            dirichlet_draws: 64,
            climb_steps: 20,
            seed: 0,
            exact_row_cap: Caps::global().exact_cover_rows,
            include_base: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evidence {
    pub epsilon: Rational,
    pub measure_id: String,
    pub m_greedy: usize,
    pub m_exact: Option<usize>,
}

impl Evidence {
    /// Cover size used for the fit: the exact minimum when it was computed.
    pub fn m(&self) -> usize {
        self.m_exact.unwrap_or(self.m_greedy)
    }
}

/// `m ε^L`, rounded up.
pub fn implied_d(m: usize, epsilon: &Rational, exponent: f64) -> f64 {
    round_up((m as f64).ln() + exponent * ln_rational(epsilon)).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub parameter_d: f64,
    pub exponent_l: f64,
    pub evidence: Vec<Evidence>,
    /// `(L, D(L))` for every admissible candidate exponent.
    pub candidates: Vec<(f64, f64)>,
}

impl DenseParams {
    /// Every evidence entry satisfies `m <= D ε^-L`.
    pub fn evidence_holds(&self) -> bool {
        self.evidence
            .iter()
            .all(|e| implied_d(e.m(), &e.epsilon, self.exponent_l) <= self.parameter_d)
    }
}

const GRID: u64 = 1 << 20;

fn grid_measure(units: &[u64]) -> FiniteSpace {
    FiniteSpace::new(
        units
            .iter()
            .map(|&k| Rational::new(BigInt::from(k), BigInt::from(GRID)))
            .collect(),
    )
    .expect("grid units sum to GRID")
}

/// Splits `GRID` units proportionally to `x` (largest remainder).
fn to_grid(x: &[f64]) -> Vec<u64> {
    let total: f64 = x.iter().sum();
    let raw: Vec<f64> = x.iter().map(|v| v / total * GRID as f64).collect();
    let mut units: Vec<u64> = raw.iter().map(|v| v.floor() as u64).collect();
    let short = GRID - units.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = raw[a] - raw[a].floor();
        let fb = raw[b] - raw[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().take(short as usize) {
        units[i] += 1;
    }
    units
}

fn measure_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn covers_for(
    class: &FunctionTable,
    measure: &FiniteSpace,
    epsilons: &[Rational],
    exact_cap: usize,
) -> Vec<(usize, Option<usize>)> {
    let d = distance_matrix(class, measure).expect("dimensions checked by caller");
    epsilons
        .iter()
        .map(|e| {
            let g = greedy_from_matrix(&d, e).size();
            let x = (class.class_size() <= exact_cap.min(63)).then(|| exact_from_matrix(&d, e).size());
            (g, x)
        })
        .collect()
}

/// Fits `(D, L)` against a sampled family of measures. The result is a
/// lower-bound certificate for the true worst case over all measures.
pub fn fit_dense_params(
    class: &FunctionTable,
    base: &FiniteSpace,
    epsilon_grid: &[Rational],
    exponent_candidates: &[f64],
    config: &FitConfig,
) -> Result<DenseParams> {
    class.check_space(base)?;
    if epsilon_grid.is_empty() || exponent_candidates.is_empty() {
        return Err(invalid("epsilon grid and exponent candidates must be nonempty"));
    }
    for e in epsilon_grid {
        check_epsilon(e)?;
    }
    let exponents: Vec<f64> = exponent_candidates.iter().copied().filter(|l| *l >= 1.0).collect();
    if exponents.is_empty() {
        return Err(invalid("no exponent candidate is >= 1"));
    }
    let points = base.point_count();
    let mut family: Vec<(String, FiniteSpace)> = Vec::new();
    if config.include_base {
        family.push(("base".to_string(), base.clone()));
    }
    let atoms = value_atoms(class, base)?;
    for (i, atom) in atoms.atoms.iter().enumerate() {
        let mut units = vec![0u64; points];
        let share = GRID / atom.len() as u64;
        for &p in atom {
            units[p] = share;
        }
        units[atom[0]] += GRID - share * atom.len() as u64;
        family.push((format!("atom:{i}"), grid_measure(&units)));
    }
    let draws: Vec<Vec<u64>> = (0..config.dirichlet_draws)
        .map(|i| {
            let mut rng = measure_rng(config.seed, i as u64);
            let x: Vec<f64> = (0..points).map(|_| rng.sample::<f64, _>(Exp1)).collect();
            to_grid(&x)
        })
        .collect();
    family.extend(
        draws
            .iter()
            .enumerate()
            .map(|(i, u)| (format!("dirichlet:{i}"), grid_measure(u))),
    );

    let exact_cap = config.exact_row_cap;
    let results: Vec<Vec<(usize, Option<usize>)>> = family
        .par_iter()
        .map(|(_, m)| covers_for(class, m, epsilon_grid, exact_cap))
        .collect();
    let score = |covers: &[(usize, Option<usize>)]| -> usize {
        covers.iter().map(|(g, x)| x.unwrap_or(*g)).sum()
    };
    let mut evidence = Vec::new();
    let mut push = |id: &str, covers: &[(usize, Option<usize>)]| {
        for (e, (g, x)) in epsilon_grid.iter().zip(covers) {
            evidence.push(Evidence {
                epsilon: e.clone(),
                measure_id: id.to_string(),
                m_greedy: *g,
                m_exact: *x,
            });
        }
    };
    for ((id, _), covers) in family.iter().zip(&results) {
        push(id, covers);
    }

    // coordinate hill-climbing from the worst Dirichlet draw
    let offset = family.len() - draws.len();
    if !draws.is_empty() && config.climb_steps > 0 && points > 1 {
        let worst = (0..draws.len())
            .max_by(|&a, &b| score(&results[offset + a]).cmp(&score(&results[offset + b])).then(b.cmp(&a)))
            .unwrap();
        let mut units = draws[worst].clone();
        let mut current = score(&results[offset + worst]);
        let mut rng = measure_rng(config.seed, u64::MAX);
        for step in 0..config.climb_steps {
            let from = rng.random_range(0..points);
            let mut to = rng.random_range(0..points - 1);
            if to >= from {
                to += 1;
            }
            if units[from] == 0 {
                continue;
            }
            let delta = units[from].div_ceil(2);
            let mut trial = units.clone();
            trial[from] -= delta;
            trial[to] += delta;
            let covers = covers_for(class, &grid_measure(&trial), epsilon_grid, exact_cap);
            let s = score(&covers);
            if s >= current {
                current = s;
                units = trial;
                push(&format!("climb:{step}"), &covers);
            }
        }
    }

    let candidates: Vec<(f64, f64)> = exponents
        .iter()
        .map(|&l| {
            let d = evidence
                .iter()
                .map(|e| implied_d(e.m(), &e.epsilon, l))
                .fold(1.0f64, f64::max);
            (l, d)
        })
        .collect();
    let &(exponent_l, parameter_d) = candidates
        .iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.partial_cmp(&b.0).unwrap()))
        .unwrap();
    Ok(DenseParams {
        parameter_d,
        exponent_l,
        evidence,
        candidates,
    })
}
