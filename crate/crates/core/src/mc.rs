//! Seeded Monte Carlo estimates of `P(sup_f S_n(f) ≥ u)`.
//!
//! Sample `i` draws from its own ChaCha stream keyed by `(seed, i)`, so the
//! hit count does not depend on how samples are spread over workers.

use num_traits::{ToPrimitive, Zero};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::beta::beta_reg;

use crate::error::{invalid, Result};
use crate::exact::{to_f64, Rational};
use crate::space::{FiniteSpace, FunctionTable};
use crate::tail::{exact_sup_tail, Method, Probability, ScaledClass, TailResult};

/// Two-sided confidence level of every reported interval.
pub const CONFIDENCE: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub sample_count: u64,
    pub seed: u64,
    pub worker_count: usize,
}

impl McConfig {
    pub fn new(sample_count: u64, seed: u64) -> Self {
        McConfig {
            sample_count,
            seed,
            worker_count: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub hit_count: u64,
    pub sample_count: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl McEstimate {
    pub fn contains(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }

    pub fn to_tail_result(&self) -> TailResult {
        TailResult {
            probability: Probability::Estimate {
                estimate: self.estimate,
                ci_low: self.ci_low,
                ci_high: self.ci_high,
            },
            method: Method::MonteCarlo,
            compared_bounds: Vec::new(),
        }
    }
}

/// Solves `beta_reg(a, b, x) = target` for `x` by bisection; the left side
/// is increasing in `x`.
fn beta_quantile(a: f64, b: f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if beta_reg(a, b, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Exact binomial (Clopper–Pearson) interval at the given two-sided level.
pub fn clopper_pearson(hits: u64, trials: u64, level: f64) -> (f64, f64) {
    let alpha = 1.0 - level;
    let (k, n) = (hits as f64, trials as f64);
    let low = if hits == 0 { 0.0 } else { beta_quantile(k, n - k + 1.0, alpha / 2.0) };
    let high = if hits == trials { 1.0 } else { beta_quantile(k + 1.0, n - k, 1.0 - alpha / 2.0) };
    let est = k / n;
    (low.min(est), high.max(est))
}

enum Sampler {
    /// Cumulative integer weights over an exact common denominator.
    Exact { cumulative: Vec<u64>, total: u64 },
    Float(WeightedIndex<f64>),
}

impl Sampler {
    fn new(class: &ScaledClass) -> Self {
        let exact: Option<Vec<u64>> = class.weights.iter().map(|w| w.to_u64()).collect();
        if let (Some(weights), Some(total)) = (exact, class.weight_denom.to_u64()) {
            let mut acc = 0u64;
            let cumulative = weights
                .iter()
                .map(|w| {
                    acc += w;
                    acc
                })
                .collect();
            return Sampler::Exact { cumulative, total };
        }
        let ws: Vec<f64> = class
            .weights
            .iter()
            .map(|w| to_f64(&Rational::new(w.clone().into(), class.weight_denom.clone().into())))
            .collect();
        Sampler::Float(WeightedIndex::new(ws).expect("cell weights are positive"))
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        match self {
            Sampler::Exact { cumulative, total } => {
                let x = rng.random_range(0..*total);
                cumulative.partition_point(|&c| c <= x)
            }
            Sampler::Float(w) => w.sample(rng),
        }
    }
}

fn sample_hits(class: &ScaledClass, sampler: &Sampler, n: u32, threshold: i128, seed: u64, range: std::ops::Range<u64>) -> u64 {
    let mut sums = vec![0i128; class.values.len()];
    let mut hits = 0;
    for index in range {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        sums.iter_mut().for_each(|s| *s = 0);
        for _ in 0..n {
            let cell = sampler.draw(&mut rng);
            for (s, row) in sums.iter_mut().zip(&class.values) {
                *s += row[cell];
            }
        }
        if sums.iter().any(|&s| s >= threshold) {
            hits += 1;
        }
    }
    hits
}

pub fn mc_sup_tail(
    class: &FunctionTable,
    space: &FiniteSpace,
    n: u32,
    u: &Rational,
    strict: bool,
    config: &McConfig,
) -> Result<McEstimate> {
    if config.sample_count == 0 || config.worker_count == 0 || n == 0 {
        return Err(invalid("sample count, worker count and n must be positive"));
    }
    let scaled = ScaledClass::new(class, space)?;
    let threshold = scaled.threshold(u, strict);
    let total = config.sample_count;
    let hit_count = if threshold > num_bigint::BigInt::from(n) * &scaled.scale {
        0
    } else if threshold <= num_bigint::BigInt::zero() {
        total
    } else {
        let threshold = threshold.to_i128().ok_or(crate::Error::ScaleOverflow)?;
        let sampler = Sampler::new(&scaled);
        let chunk = 4096u64;
        let chunks: Vec<std::ops::Range<u64>> = (0..total.div_ceil(chunk))
            .map(|c| c * chunk..((c + 1) * chunk).min(total))
            .collect();
        let run = || -> u64 {
            chunks
                .par_iter()
                .map(|r| sample_hits(&scaled, &sampler, n, threshold, config.seed, r.clone()))
                .sum()
        };
        if config.worker_count == 1 {
            chunks
                .iter()
                .map(|r| sample_hits(&scaled, &sampler, n, threshold, config.seed, r.clone()))
                .sum()
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.worker_count)
                .build()
                .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?
                .install(run)
        }
    };
    let (ci_low, ci_high) = clopper_pearson(hit_count, total, CONFIDENCE);
    Ok(McEstimate {
        hit_count,
        sample_count: total,
        estimate: hit_count as f64 / total as f64,
        ci_low,
        ci_high,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct McComparison {
    pub estimate: McEstimate,
    pub exact: Option<Rational>,
    /// Why the exact side could not be computed.
    pub exact_error: Option<String>,
    pub exact_inside_ci: Option<bool>,
}

/// Runs both estimators; an infeasible exact side is reported, not fatal.
pub fn mc_vs_exact(
    class: &FunctionTable,
    space: &FiniteSpace,
    n: u32,
    u: &Rational,
    strict: bool,
    config: &McConfig,
) -> Result<McComparison> {
    let estimate = mc_sup_tail(class, space, n, u, strict, config)?;
    let (exact, exact_error) = match exact_sup_tail(class, space, n, u, strict) {
        Ok(r) => (r.exact_value().cloned(), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let exact_inside_ci = exact.as_ref().map(|p| {
        if p.is_zero() {
            estimate.hit_count == 0
        } else {
            estimate.contains(to_f64(p))
        }
    });
    Ok(McComparison {
        estimate,
        exact,
        exact_error,
        exact_inside_ci,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};
    use crate::space::make_uniform_space;

    fn singletons() -> (FunctionTable, FiniteSpace) {
        let class = FunctionTable::from_indicators(4, &[vec![0], vec![1], vec![2], vec![3]]).unwrap();
        (class, make_uniform_space(4).unwrap())
    }

    #[test]
    fn trivial_events() {
        let (class, space) = singletons();
        let cfg = McConfig::new(1000, 3);
        let none = mc_sup_tail(&class, &space, 2, &int(3), false, &cfg).unwrap();
        assert_eq!((none.hit_count, none.estimate), (0, 0.0));
        let all = mc_sup_tail(&class, &space, 2, &int(0), false, &cfg).unwrap();
        assert_eq!(all.estimate, 1.0);
    }

    #[test]
    fn quarter_instance_is_inside_ci() {
        let (class, space) = singletons();
        let cmp = mc_vs_exact(&class, &space, 2, &int(2), false, &McConfig::new(100_000, 1)).unwrap();
        assert_eq!(cmp.exact, Some(rat(1, 4)));
        assert_eq!(cmp.exact_inside_ci, Some(true));
    }

    #[test]
    fn constant_class_is_deterministic() {
        let space = make_uniform_space(3).unwrap();
        let class = FunctionTable::new(vec![vec![rat(2, 5); 3]]).unwrap();
        let cfg = McConfig::new(500, 0);
        let at = mc_vs_exact(&class, &space, 5, &int(2), false, &cfg).unwrap();
        assert_eq!((at.estimate.estimate, at.exact.clone()), (1.0, Some(int(1))));
        let above = mc_vs_exact(&class, &space, 5, &rat(201, 100), false, &cfg).unwrap();
        assert_eq!((above.estimate.estimate, above.exact.clone()), (0.0, Some(int(0))));
        assert_eq!(above.exact_inside_ci, Some(true));
    }

    #[test]
    fn hit_counts_do_not_depend_on_workers() {
        let (class, space) = singletons();
        let counts: Vec<u64> = [1, 2, 8]
            .iter()
            .map(|&w| {
                let cfg = McConfig { sample_count: 20_000, seed: 42, worker_count: w };
                mc_sup_tail(&class, &space, 3, &int(2), false, &cfg).unwrap().hit_count
            })
            .collect();
        assert!(counts.windows(2).all(|w| w[0] == w[1]), "{counts:?}");
    }

    #[test]
    fn clopper_pearson_reference_values() {
        // n = 10, k = 0: upper = 1 - (alpha/2)^(1/n)
        let (lo, hi) = clopper_pearson(0, 10, 0.99);
        assert_eq!(lo, 0.0);
        assert!((hi - (1.0 - 0.005f64.powf(0.1))).abs() < 1e-12);
        let (lo, hi) = clopper_pearson(10, 10, 0.99);
        assert!((lo - 0.005f64.powf(0.1)).abs() < 1e-12);
        assert_eq!(hi, 1.0);
        let (lo, hi) = clopper_pearson(25, 100, 0.99);
        assert!(lo < 0.25 && 0.25 < hi);
        // symmetric in hits vs misses
        let (lo2, hi2) = clopper_pearson(75, 100, 0.99);
        assert!((lo - (1.0 - hi2)).abs() < 1e-12 && (hi - (1.0 - lo2)).abs() < 1e-12);
    }

    #[test]
    fn weighted_space_uses_exact_sampler() {
        let space = FiniteSpace::new(vec![rat(1, 3), rat(2, 3)]).unwrap();
        let class = FunctionTable::from_indicators(2, &[vec![0]]).unwrap();
        let cmp = mc_vs_exact(&class, &space, 2, &int(1), false, &McConfig::new(50_000, 5)).unwrap();
        assert_eq!(cmp.exact, Some(rat(5, 9)));
        assert_eq!(cmp.exact_inside_ci, Some(true));
    }
}
