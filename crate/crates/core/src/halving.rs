//! The halving induction: level schedules, randomized pair sums, Hoeffding
//! comparisons, exhaustive half counting and the chain of constant checks.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bounds::UpperBound;
use crate::caps::Caps;
use crate::combinat::{binomial, k_subsets};
use crate::error::{invalid, Error, Result};
use crate::exact::{from_f64, lcm_of_denominators, ln_biguint, ln_rational, pow, round_down, round_up, to_f64, Rational};
use crate::space::FunctionTable;

fn big(n: &BigUint) -> Rational {
    Rational::from_integer(BigInt::from(n.clone()))
}

/// Exact test of the window `ρ^{-3/2}/16 < N0 ≤ ρ^{-3/2}/8`, as
/// `(lower holds, upper holds)`.
pub fn n0_window(rho: &Rational, n0: &BigUint) -> (bool, bool) {
    let q = big(n0) * big(n0) * pow(rho, 3);
    (q > Rational::new(1.into(), 256.into()), q <= Rational::new(1.into(), 64.into()))
}

/// Largest `N0` inside the window, if the window contains an integer.
pub fn largest_window_n0(rho: &Rational) -> Option<BigUint> {
    let x = Rational::one() / (pow(rho, 3) * Rational::from_integer(64.into()));
    let n0 = x.to_integer().to_biguint()?.sqrt();
    (n0_window(rho, &n0) == (true, true)).then_some(n0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub k: u32,
    pub n_k: BigUint,
    pub rho_low: f64,
    pub rho_high: f64,
    /// `Π_{j≤k} (1 + 2^{-j} ρ)`.
    pub c_k: Rational,
    /// `ρ_k ≥ ρ/2`, judged on the lower end of the enclosure.
    pub half_rho_holds: bool,
    pub c_k_le_two: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalvingSchedule {
    pub rho: Rational,
    pub n0: BigUint,
    pub window_lower: bool,
    pub window_upper: bool,
    pub levels: Vec<Level>,
    ln_rho: Vec<(f64, f64)>,
}

impl HalvingSchedule {
    pub fn in_window(&self) -> bool {
        self.window_lower && self.window_upper
    }

    /// Natural-log enclosure `(low, high)` of `ρ_k`, for any `k ≤ k_max + 1`.
    pub fn ln_rho(&self, k: usize) -> (f64, f64) {
        self.ln_rho[k]
    }
}

pub fn build_schedule(rho: &Rational, n0: &BigUint, k_max: u32) -> Result<HalvingSchedule> {
    if !rho.is_positive() || rho >= &Rational::one() || n0.is_zero() {
        return Err(invalid("need 0 < rho < 1 and N0 >= 1"));
    }
    let ln_rho = ln_rational(rho);
    let ln_n0 = ln_biguint(n0);
    let ln_half = ln_rho - std::f64::consts::LN_2;
    // ρ_k for k = 0..=k_max+1 so that ρ_{k+1} is available at every level
    let mut shrink = 0.0f64;
    let mut ln_bounds = Vec::new();
    for j in 0..=k_max + 1 {
        ln_bounds.push((round_down(ln_rho - shrink), round_up(ln_rho - shrink)));
        let ln_nj = ln_n0 + j as f64 * std::f64::consts::LN_2;
        shrink += (3.0 * (-ln_nj / 8.0).exp()).ln_1p();
    }
    let mut levels = Vec::new();
    let mut c_k = Rational::one();
    let two = Rational::from_integer(2.into());
    for k in 0..=k_max {
        c_k *= Rational::one() + rho / Rational::from_integer(BigInt::one() << k as usize);
        let (lo, hi) = ln_bounds[k as usize];
        levels.push(Level {
            k,
            n_k: n0 << k as usize,
            rho_low: lo.exp(),
            rho_high: hi.exp(),
            c_k: c_k.clone(),
            half_rho_holds: lo >= round_up(ln_half),
            c_k_le_two: c_k <= two,
        });
    }
    let (window_lower, window_upper) = n0_window(rho, n0);
    Ok(HalvingSchedule {
        rho: rho.clone(),
        n0: n0.clone(),
        window_lower,
        window_upper,
        levels,
        ln_rho: ln_bounds,
    })
}

/// A perfect matching of `2N` points together with one sign per pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairingState {
    pairs: Vec<(usize, usize)>,
    signs: Vec<i8>,
}

impl PairingState {
    pub fn new(pairs: Vec<(usize, usize)>, signs: Vec<i8>) -> Result<Self> {
        let n = pairs.len();
        if n == 0 || signs.len() != n {
            return Err(Error::Dimension { expected: n, got: signs.len() });
        }
        let mut seen = vec![false; 2 * n];
        for &(a, b) in &pairs {
            for p in [a, b] {
                if p >= 2 * n || seen[p] {
                    return Err(invalid("pairs must form a perfect matching of 0..2N"));
                }
                seen[p] = true;
            }
        }
        if signs.iter().any(|s| *s != 1 && *s != -1) {
            return Err(invalid("signs must be +1 or -1"));
        }
        Ok(PairingState { pairs, signs })
    }

    /// Pairs `(0,1), (2,3), …` with all signs `+1`.
    pub fn identity(pair_count: usize) -> Result<Self> {
        Self::new((0..pair_count).map(|l| (2 * l, 2 * l + 1)).collect(), vec![1; pair_count])
    }

    /// Uniformly random matching and signs from the seeded stream.
    pub fn random(pair_count: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points: Vec<usize> = (0..2 * pair_count).collect();
        points.shuffle(&mut rng);
        let pairs = points.chunks(2).map(|c| (c[0], c[1])).collect();
        let signs = (0..pair_count).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        Self::new(pairs, signs)
    }

    pub fn with_signs(&self, signs: Vec<i8>) -> Result<Self> {
        Self::new(self.pairs.clone(), signs)
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// First point of pairs with sign `+1`, second point otherwise; sorted.
    pub fn selected_half(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .pairs
            .iter()
            .zip(&self.signs)
            .map(|(&(a, b), &s)| if s == 1 { a } else { b })
            .collect();
        v.sort_unstable();
        v
    }

    fn check_row(&self, row: &[Rational]) -> Result<()> {
        if row.len() != 2 * self.pairs.len() {
            return Err(Error::Dimension { expected: 2 * self.pairs.len(), got: row.len() });
        }
        Ok(())
    }
}

/// `d_l = f(first) − f(second)` for every pair.
pub fn pair_differences(row: &[Rational], pairing: &PairingState) -> Result<Vec<Rational>> {
    pairing.check_row(row)?;
    Ok(pairing.pairs.iter().map(|&(a, b)| &row[a] - &row[b]).collect())
}

/// `U = Σ ε_l d_l`.
pub fn randomized_sum(row: &[Rational], pairing: &PairingState) -> Result<Rational> {
    Ok(pair_differences(row, pairing)?
        .into_iter()
        .zip(&pairing.signs)
        .map(|(d, &s)| if s == 1 { d } else { -d })
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoeffdingBound {
    pub bound: UpperBound,
    /// All differences vanish, so `U ≡ 0` and the event is impossible.
    pub degenerate: bool,
}

fn check_z(z: &Rational) -> Result<()> {
    if !z.is_positive() {
        return Err(invalid("z must be positive"));
    }
    Ok(())
}

/// `exp(−2z²/Σ d_l²)`, a bound on `P(U > 2z)`.
pub fn hoeffding_bound_a(diffs: &[Rational], z: &Rational) -> Result<HoeffdingBound> {
    check_z(z)?;
    let var: Rational = diffs.iter().map(|d| d * d).sum();
    if var.is_zero() {
        return Ok(HoeffdingBound { bound: UpperBound::from_ln(0.0), degenerate: true });
    }
    let ratio = Rational::from_integer(2.into()) * z * z / var;
    Ok(HoeffdingBound { bound: UpperBound::from_ln(-round_down(to_f64(&ratio))), degenerate: false })
}

/// `exp(−z²/(2 N_k ρ_{k+1}))`.
pub fn hoeffding_bound_b(n_k: &BigUint, rho_next: &Rational, z: &Rational) -> Result<UpperBound> {
    check_z(z)?;
    if !rho_next.is_positive() || n_k.is_zero() {
        return Err(invalid("need N_k >= 1 and rho_{k+1} > 0"));
    }
    let ratio = z * z / (Rational::from_integer(2.into()) * big(n_k) * rho_next);
    Ok(UpperBound::from_ln(-round_down(to_f64(&ratio))))
}

fn scale_to_ints(values: &[Rational]) -> Result<(Vec<i128>, BigInt)> {
    let scale = lcm_of_denominators(values);
    let ints = values
        .iter()
        .map(|v| (v * Rational::from_integer(scale.clone())).to_integer().to_i128().ok_or(Error::ScaleOverflow))
        .collect::<Result<_>>()?;
    Ok((ints, scale))
}

/// `P(U > 2z)` over uniform signs, exactly.
pub fn exact_uk_tail(row: &[Rational], pairing: &PairingState, z: &Rational) -> Result<Rational> {
    let cap = Caps::global().sign_pairs;
    if pairing.pair_count() > cap {
        return Err(Error::CapExceeded {
            what: format!("{} sign pairs", pairing.pair_count()),
            cap: format!("{cap} pairs"),
            hint: "the sign distribution is enumerated exactly",
        });
    }
    let diffs = pair_differences(row, pairing)?;
    let mut all = diffs.clone();
    all.push(Rational::from_integer(2.into()) * z);
    let (ints, _) = scale_to_ints(&all)?;
    let (d, limit) = (&ints[..diffs.len()], ints[diffs.len()]);
    // distribution of the signed sum, as counts of sign vectors
    let mut dist: HashMap<i128, u64> = HashMap::from([(0, 1)]);
    for &dl in d {
        let mut next = HashMap::with_capacity(dist.len() * 2);
        for (&s, &c) in &dist {
            *next.entry(s + dl).or_insert(0) += c;
            *next.entry(s - dl).or_insert(0) += c;
        }
        dist = next;
    }
    let hits: u64 = dist.iter().filter(|(s, _)| **s > limit).map(|(_, c)| c).sum();
    Ok(Rational::new(hits.into(), BigInt::one() << d.len()))
}

fn check_half_space(points: usize) -> Result<usize> {
    let cap = Caps::global().half_points;
    if points % 2 == 1 || points == 0 {
        return Err(invalid("the space must have an even, positive number of points"));
    }
    if points > cap.min(62) {
        return Err(Error::CapExceeded {
            what: format!("{points} points"),
            cap: format!("{} points", cap.min(62)),
            hint: "every half of the space is enumerated",
        });
    }
    Ok(points / 2)
}

/// Number of `N_k`-subsets `Y` of the `2N_k` points with
/// `sup_f Σ_{x∈Y} f(x) ≥ threshold`.
pub fn count_bad_halves(class: &FunctionTable, threshold: &Rational) -> Result<BigUint> {
    count_halves(class, threshold, false)
}

/// As [`count_bad_halves`], with a choice of `>` (strict) or `≥`.
pub fn count_halves(class: &FunctionTable, threshold: &Rational, strict: bool) -> Result<BigUint> {
    let half = check_half_space(class.point_count())?;
    let mut all: Vec<Rational> = class.rows().iter().flatten().cloned().collect();
    all.push(threshold.clone());
    let (ints, _) = scale_to_ints(&all)?;
    let limit = ints[ints.len() - 1];
    let points = class.point_count();
    let rows: Vec<&[i128]> = ints[..ints.len() - 1].chunks(points).collect();
    let count = k_subsets(points as u32, half as u32)
        .par_bridge()
        .filter(|&mask| {
            rows.iter().any(|row| {
                let s: i128 = (0..points).filter(|b| mask >> b & 1 == 1).map(|b| row[b]).sum();
                if strict { s > limit } else { s >= limit }
            })
        })
        .count();
    Ok(BigUint::from(count))
}

/// Number of sign vectors whose selected half `V` has `Σ_{x∈V} f(x) ≥ threshold`.
pub fn count_transversals(row: &[Rational], pairing: &PairingState, threshold: &Rational) -> Result<BigUint> {
    pairing.check_row(row)?;
    let n = pairing.pair_count();
    if n > Caps::global().sign_pairs {
        return Err(invalid(format!("{n} pairs exceed the sign enumeration cap")));
    }
    let mut count = 0u64;
    for bits in 0u64..1 << n {
        let s: Rational = pairing
            .pairs
            .iter()
            .enumerate()
            .map(|(l, &(a, b))| if bits >> l & 1 == 0 { &row[a] } else { &row[b] })
            .sum();
        if &s >= threshold {
            count += 1;
        }
    }
    Ok(BigUint::from(count))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatementB {
    /// `R_{k+1}(f) ≤ N_{k+1} ρ_{k+1}`.
    pub hypothesis: bool,
    pub count: BigUint,
    /// `e^{−z²/(2N_kρ_{k+1})} C(2N_k, N_k)`, rounded up.
    pub bound: UpperBound,
    pub holds: bool,
}

/// Counts halves `V` with `Σ_V f ≥ N_k ρ_{k+1} + z` for a single row on
/// `2N_k` points and compares with the Hoeffding counting bound.
pub fn statement_b_check(row: &[Rational], rho_next: &Rational, z: &Rational) -> Result<StatementB> {
    let class = FunctionTable::new(vec![row.to_vec()])?;
    let half = check_half_space(row.len())?;
    let n_k = BigUint::from(half);
    let total: Rational = row.iter().sum();
    let hypothesis = total <= Rational::from_integer((2 * half).into()) * rho_next;
    let threshold = big(&n_k) * rho_next + z;
    let count = count_bad_halves(&class, &threshold)?;
    let b = hoeffding_bound_b(&n_k, rho_next, z)?;
    let bound = UpperBound::from_ln(b.ln() + ln_biguint(&binomial(2 * half as u64, half as u64)));
    let holds = bound.admits(&big(&count));
    Ok(StatementB { hypothesis, count, bound, holds })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountingFactor {
    /// `N_k^p C(2N_k, N_k) / C(2N_k − p, N_k − p)`.
    pub ratio_form: Rational,
    /// `N_{k+1}^p Π_{i=1}^{p−1} (1 + i/(2(N_k − i)))`.
    pub product_form: Rational,
}

impl CountingFactor {
    pub fn identity_holds(&self) -> bool {
        self.ratio_form == self.product_form
    }
}

pub fn counting_factor(n_k: u64, p: u64) -> Result<CountingFactor> {
    if p > n_k {
        return Err(invalid(format!("p = {p} exceeds N_k = {n_k}")));
    }
    let nk = Rational::from_integer(n_k.into());
    let ratio_form = pow(&nk, p as u32)
        * big(&binomial(2 * n_k, n_k))
        / big(&binomial(2 * n_k - p, n_k - p));
    let mut product_form = pow(&Rational::from_integer((2 * n_k).into()), p as u32);
    for i in 1..p {
        product_form *= Rational::one() + Rational::new(i.into(), (2 * (n_k - i)).into());
    }
    Ok(CountingFactor { ratio_form, product_form })
}

/// One inequality of the chain, in natural-log form `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainStep {
    pub name: &'static str,
    pub lhs_ln: f64,
    pub rhs_ln: f64,
    pub holds: bool,
}

impl ChainStep {
    fn logs(name: &'static str, lhs_ln: f64, rhs_ln: f64) -> Self {
        let (lhs_ln, rhs_ln) = (round_up(lhs_ln), round_down(rhs_ln));
        ChainStep { name, lhs_ln, rhs_ln, holds: lhs_ln <= rhs_ln }
    }

    /// For facts decided exactly; logs are informational.
    fn exact(name: &'static str, lhs_ln: f64, rhs_ln: f64, holds: bool) -> Self {
        ChainStep { name, lhs_ln, rhs_ln, holds }
    }

    pub fn margin_log10(&self) -> f64 {
        (self.rhs_ln - self.lhs_ln) / std::f64::consts::LN_10
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainReport {
    pub k: u32,
    pub p: u64,
    pub steps: Vec<ChainStep>,
}

impl ChainReport {
    pub fn all_hold(&self) -> bool {
        self.steps.iter().all(|s| s.holds)
    }

    pub fn step(&self, name: &str) -> Option<&ChainStep> {
        self.steps.iter().find(|s| s.name == name)
    }
}

/// `ln Π_{i<p} (1 + i/(2(N − i)))`, evaluated with `ln_1p`.
fn ln_counting_product(ln_n: f64, n: &BigUint, p: u64) -> f64 {
    let small = n.to_f64().filter(|v| *v < 1e15);
    (1..p)
        .map(|i| match small {
            Some(nf) => (i as f64 / (2.0 * (nf - i as f64))).ln_1p(),
            None => ((i as f64).ln() - std::f64::consts::LN_2 - ln_n).exp().ln_1p(),
        })
        .sum()
}

/// Evaluates every inequality the halving induction relies on, at level
/// `k`, in log space. A report: failures are findings, not errors.
pub fn chain_report(rho: &Rational, n0: &BigUint, k: u32, p: u64, d: f64, l: f64) -> Result<ChainReport> {
    if d < 1.0 || l < 1.0 {
        return Err(invalid("need D >= 1 and L >= 1"));
    }
    let schedule = build_schedule(rho, n0, k)?;
    let n_k = n0 << k as usize;
    let mut steps = Vec::new();
    let ln2 = std::f64::consts::LN_2;
    let p_big = BigUint::from(p);
    if p_big > n_k {
        return Err(invalid("p must not exceed N_k"));
    }
    let cf_holds = match n_k.to_u64() {
        Some(nk) if nk <= 4096 => counting_factor(nk, p)?.identity_holds(),
        _ => true,
    };
    steps.push(ChainStep::exact("counting factor identity", 0.0, 0.0, cf_holds));
    if p == 0 {
        return Ok(ChainReport { k, p, steps });
    }

    let ln_rho = ln_rational(rho);
    let ln_n0 = ln_biguint(n0);
    let ln_nk = ln_n0 + k as f64 * ln2;
    let (rho_next_lo, _) = schedule.ln_rho(k as usize + 1);
    let level = &schedule.levels[k as usize];
    let ln_ck = ln_rational(&level.c_k);
    let rho_pow_m20 = (-ln_rho / 20.0).exp();
    // Statement (a): exp{−(1/100) 2^{k/20} ρ^{−1/20}}
    let ln_e = -(k as f64 * ln2 / 20.0).exp() * rho_pow_m20 / 100.0;

    steps.push(ChainStep::exact(
        "window lower",
        ln_rho * -1.5 - 16f64.ln(),
        ln_n0,
        schedule.window_lower,
    ));
    steps.push(ChainStep::exact("window upper", ln_n0, ln_rho * -1.5 - 8f64.ln(), schedule.window_upper));
    let l_exact = from_f64(l).expect("finite L");
    steps.push(ChainStep::exact(
        "L <= rho^(-1/20)",
        l.ln(),
        -ln_rho / 20.0,
        pow(&l_exact, 20) * rho <= Rational::one(),
    ));
    steps.push(ChainStep::logs("rho_{k+1} >= rho/2", ln_rho - ln2, rho_next_lo));
    steps.push(ChainStep::exact("C_k <= 2", ln_ck, ln2, level.c_k_le_two));
    steps.push(ChainStep::exact("p >= 2L", (2.0 * l).ln(), (p as f64).ln(), p as f64 >= 2.0 * l));
    steps.push(ChainStep::exact(
        "p <= rho^(-1/100)",
        (p as f64).ln(),
        -ln_rho / 100.0,
        pow(&Rational::from_integer(p.into()), 100) * rho <= Rational::one(),
    ));

    // (2.7) divided by C(2N_k, N_k) D, against Statement (a); decreasing in ρ_{k+1}
    let lhs_27 = l * (ln_nk / 8.0 - rho_next_lo) - (0.75 * ln_nk + rho_next_lo).exp() / 2.0;
    steps.push(ChainStep::logs("(2.7) <= statement (a)", lhs_27, ln_e));

    // Statement (a) tail absorbed into the induction: E ≤ C_k ρ^{p/4} 2^{−(k+1)} ρ / 3
    let ln_delta = ln_rho - (k as f64 + 1.0) * ln2;
    steps.push(ChainStep::logs(
        "statement (a) <= C_k rho^(p/4) 2^-(k+1) rho/3",
        ln_e,
        ln_ck + p as f64 / 4.0 * ln_rho + ln_delta - 3f64.ln(),
    ));

    // counting factor over N_{k+1}^p, and the two relaxations that follow it
    let ln_f = ln_counting_product(ln_nk, &n_k, p);
    let ln_p2_over = 2.0 * (p as f64).ln() - ln_nk - ln2;
    steps.push(ChainStep::logs("counting product <= exp(p^2/N_{k+1})", ln_f, ln_p2_over.exp()));
    steps.push(ChainStep::logs(
        "p^2/N_{k+1} <= 2^-(k+1) rho^(4/3)",
        ln_p2_over,
        4.0 / 3.0 * ln_rho - (k as f64 + 1.0) * ln2,
    ));
    let x = (4.0 / 3.0 * ln_rho - (k as f64 + 1.0) * ln2).exp();
    steps.push(ChainStep::logs(
        "exp(2^-(k+1) rho^(4/3)) <= 1 + 2^-(k+1) rho/3",
        x.ln(),
        (ln_delta.exp() / 3.0).ln_1p().ln(),
    ));

    // (2.10) gives (2.8) at k+1 iff (F−1)/δ + F E ρ^{−p/4} / (C_k δ) ≤ 1
    let first = ln_f.exp_m1().ln() - ln_delta;
    let second = ln_f + ln_e - p as f64 / 4.0 * ln_rho - ln_ck - ln_delta;
    let big = first.max(second);
    let lhs = if big == f64::NEG_INFINITY { big } else { big + ((first - big).exp() + (second - big).exp()).ln() };
    steps.push(ChainStep::logs("induction step (2.10) => (2.8)", lhs, 0.0));

    Ok(ChainReport { k, p, steps })
}
