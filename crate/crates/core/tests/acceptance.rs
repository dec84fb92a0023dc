//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{naive_sup_tail, random_instance, random_sized, rat};
use suplab::bounds::{bound_theorem1a, in_regime, regime_check, RegimeParams, Statement};
use suplab::combinat::binomial;
use suplab::covering::{fit_dense_params, FitConfig};
use suplab::dyadic::{
    cell_average, cell_partition, domination_check, hat_distribution_check, round_measure, subadditivity_check,
};
use suplab::halving::{
    build_schedule, counting_factor, exact_uk_tail, hoeffding_bound_a, pair_differences, statement_b_check,
    PairingState,
};
use suplab::inclusion::{bp_measure, IndicatorFamily};
use suplab::intro::intro_example_pn;
use suplab::mc::{mc_sup_tail, McConfig};
use suplab::space::{FiniteSpace, FunctionTable, SubsetClassHandle};
use suplab::tail::exact_sup_tail;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok { Ok(()) } else { Err(msg()) }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:.1?}, limit {limit:?}"))
}

fn big(x: &BigUint) -> BigRational {
    BigRational::from_integer(x.clone().into())
}

/// Exact tail DP against plain enumeration of all `N^n` samples.
fn exact_tail_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut largest = 0u64;
    for i in 0..100 {
        let points = rng.random_range(2..=10usize);
        let max_n = (1..=20u32).take_while(|&n| (points as u64).pow(n) <= 1_000_000).last().unwrap();
        let n = rng.random_range(1..=max_n);
        let rows = rng.random_range(1..=4);
        let denom = rng.random_range(1..=5);
        let (class, space) = random_instance(&mut rng, rows, points, denom);
        let u = rat(rng.random_range(0..=4 * n as i64), 4);
        let strict = rng.random_bool(0.5);
        let naive = naive_sup_tail(&class, &space, n, &u, strict);
        let exact = exact_sup_tail(&class, &space, n, &u, strict).map_err(|e| e.to_string())?;
        ensure(exact.exact_value() == Some(&naive), || format!("instance {i}: {:?} vs {naive}", exact.exact_value()))?;
        largest = largest.max((points as u64).pow(n));
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!("100 instances equal, largest N^n = {largest}, {:.1?}", start.elapsed()))
}

/// `P(at most L distinct values among n uniform draws from N)` by enumeration.
fn brute_distinct(points: u64, max_size: u64, n: u32) -> BigRational {
    let total = points.pow(n);
    let mut good = 0u64;
    let mut draw = vec![0u64; n as usize];
    for mut code in 0..total {
        for d in draw.iter_mut() {
            *d = code % points;
            code /= points;
        }
        let mut seen = 0u64;
        for &d in &draw {
            seen |= 1 << d;
        }
        if seen.count_ones() as u64 <= max_size {
            good += 1;
        }
    }
    BigRational::new(good.into(), total.into())
}

fn intro_example() -> Outcome {
    let mut validated = 0;
    for points in 1..=8u64 {
        for max_size in 1..=3.min(points) {
            for n in 1..=8u32 {
                if points.pow(n) > 2_000_000 {
                    continue;
                }
                let h = SubsetClassHandle { point_count: points, max_size };
                ensure(h.p_n(n as u64) == brute_distinct(points, max_size, n), || {
                    format!("closed form differs from enumeration at N={points} L={max_size} n={n}")
                })?;
                validated += 1;
            }
        }
    }
    let mut compared = 0;
    for points in 1..=12u64 {
        for max_size in 1..=3.min(points) {
            let rho = rat(max_size as i64, points as i64);
            for n in 1..=10u64 {
                let r = intro_example_pn(points, max_size, n).map_err(|e| e.to_string())?;
                let pn = r.exact_value().unwrap().clone();
                if n <= max_size {
                    ensure(pn.is_one(), || format!("P_n != 1 at N={points} L={max_size} n={n}"))?;
                    continue;
                }
                let first = big(&binomial(points, max_size)) * num_traits::pow(rho.clone(), n as usize);
                let second = num_traits::pow(rat(4, 1), max_size as usize) * num_traits::pow(rho.clone(), (n - max_size) as usize);
                ensure(pn <= first && pn <= second, || format!("bound fails at N={points} L={max_size} n={n}"))?;
                ensure(r.compared_bounds.iter().all(|b| b.satisfied), || "library comparison disagrees".into())?;
                compared += 1;
            }
        }
    }
    Ok(format!("{validated} closed forms match enumeration, {compared} bound pairs hold exactly"))
}

/// Random implicit family on `sets` sets, every set of measure at most `rho/2`.
fn implicit_family(rng: &mut ChaCha8Rng, sets: usize, rho: &BigRational) -> IndicatorFamily {
    let piece_count = rng.random_range(sets..=2 * sets);
    let masks: Vec<u32> = (0..piece_count)
        .map(|i| {
            let mut m = 1u32 << (i % sets);
            for _ in 0..rng.random_range(0..3) {
                m |= 1 << rng.random_range(0..sets);
            }
            m
        })
        .collect();
    let weights: Vec<i64> = (0..piece_count).map(|_| rng.random_range(1..=9)).collect();
    let total: i64 = weights.iter().sum();
    let pieces = masks
        .into_iter()
        .zip(weights)
        .map(|(m, w)| (m, rho * rat(w, 2 * total)))
        .collect();
    IndicatorFamily::from_pieces(sets, pieces).unwrap()
}

fn theorem_1a_in_regime() -> Outcome {
    let start = Instant::now();
    let rho = BigRational::new(1.into(), num_traits::pow(num_bigint::BigInt::from(2), 200));
    let l = rat(1, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut rows = 0;
    let mut worst = f64::INFINITY;
    for sets in [2usize, 3, 5, 8, 12, 20] {
        let family = implicit_family(&mut rng, sets, &rho);
        let (class, space) = family.to_table().map_err(|e| e.to_string())?;
        let eps = [rat(1, 2), rat(1, 4), rat(1, 8)];
        let fit = fit_dense_params(&class, &space, &eps, &[1.0], &FitConfig::default()).map_err(|e| e.to_string())?;
        ensure(fit.evidence_holds(), || "fit violates its own evidence".into())?;
        let mean = (0..sets).map(|f| family.set_measure(f)).max().unwrap();
        for p in [2u32, 3, 4] {
            let mut params = RegimeParams::new(fit.parameter_d, l.clone(), rho.clone());
            params.p = Some(p as u64);
            params.sup_mean = Some(mean.clone());
            let checks = regime_check(Statement::Theorem1A, &params);
            ensure(in_regime(&checks), || format!("R={sets} p={p} is not in regime: {checks:?}"))?;
            let lhs = bp_measure(&family, p).map_err(|e| e.to_string())?;
            let lhs = lhs.exact_value().unwrap();
            let rhs = bound_theorem1a(fit.parameter_d, &rho, p as u64).map_err(|e| e.to_string())?;
            ensure(rhs.admits(lhs), || format!("R={sets} p={p}: bound violated"))?;
            worst = worst.min(rhs.log10() - suplab::exact::ln_rational(lhs) / std::f64::consts::LN_10);
            rows += 1;
        }
    }
    within(start, Duration::from_secs(10))?;
    Ok(format!("{rows} in-regime comparisons at rho = 2^-200, smallest margin 10^{worst:.1}, {:.1?}", start.elapsed()))
}

fn counting_identity() -> Outcome {
    let start = Instant::now();
    let mut cases = 0;
    for n_k in 1..=30u64 {
        for p in 0..=n_k {
            let c = counting_factor(n_k, p).map_err(|e| e.to_string())?;
            ensure(c.identity_holds(), || format!("identity fails at N_k={n_k} p={p}"))?;
            cases += 1;
        }
    }
    within(start, Duration::from_secs(5))?;
    Ok(format!("{cases} (N_k, p) pairs equal exactly"))
}

fn random_row(rng: &mut ChaCha8Rng, len: usize) -> Vec<BigRational> {
    let denom = rng.random_range(1..=6);
    (0..len).map(|_| rat(rng.random_range(0..=denom), denom)).collect()
}

fn random_pairing(rng: &mut ChaCha8Rng, pairs: usize) -> PairingState {
    if rng.random_bool(0.5) {
        PairingState::identity(pairs).unwrap()
    } else {
        PairingState::random(pairs, rng.random()).unwrap()
    }
}

fn hoeffding_and_variance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut compared = 0;
    for i in 0..50 {
        let pairs = rng.random_range(1..=12);
        let row = random_row(&mut rng, 2 * pairs);
        let pairing = random_pairing(&mut rng, pairs);
        let diffs = pair_differences(&row, &pairing).map_err(|e| e.to_string())?;
        for step in 1..=20 {
            let z = rat(step, 8);
            let tail = exact_uk_tail(&row, &pairing, &z).map_err(|e| e.to_string())?;
            let bound = hoeffding_bound_a(&diffs, &z).map_err(|e| e.to_string())?;
            if bound.degenerate {
                ensure(tail.is_zero(), || format!("instance {i}: degenerate but tail {tail}"))?;
            }
            ensure(bound.bound.admits(&tail), || format!("instance {i}, z = {z}: {tail} above bound"))?;
            compared += 1;
        }
    }
    for i in 0..200 {
        let pairs = rng.random_range(1..=20);
        let row = random_row(&mut rng, 2 * pairs);
        let pairing = random_pairing(&mut rng, pairs);
        let diffs = pair_differences(&row, &pairing).map_err(|e| e.to_string())?;
        let var: BigRational = diffs.iter().map(|d| d * d).sum();
        let squares: BigRational = row.iter().map(|f| f * f).sum();
        let total: BigRational = row.iter().sum();
        ensure(var <= rat(2, 1) * &squares && squares <= total.clone(), || format!("variance step fails on row {i}"))?;
        ensure(var <= rat(2, 1) * total, || format!("variance step fails on row {i}"))?;
    }
    Ok(format!("{compared} tail/bound pairs and 200 variance checks hold"))
}

fn statement_b() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut instances, mut checked) = (0, 0);
    while instances < 40 {
        let half = rng.random_range(1..=6usize);
        let row = random_row(&mut rng, 2 * half);
        let total: BigRational = row.iter().sum();
        if total.is_zero() {
            continue;
        }
        // smallest admissible rho_{k+1}, sometimes with slack
        let rho_next = &total / rat(2 * half as i64, 1) * rat(rng.random_range(4..=8), 4);
        instances += 1;
        for step in 1..=12 {
            let z = rat(step, 4);
            let r = statement_b_check(&row, &rho_next, &z).map_err(|e| e.to_string())?;
            ensure(r.hypothesis, || "hypothesis should hold by construction".into())?;
            ensure(r.holds, || format!("count {} above bound at z = {z}", r.count))?;
            checked += 1;
        }
    }
    Ok(format!("{instances} instances, {checked} exact half counts within the bound"))
}

fn dyadic_domination() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut violations = 0;
    for draw in 0..1000u64 {
        let (class, space) = random_sized(&mut rng, 1..=4, 1..=6, 16);
        let n = rng.random_range(2..=64);
        violations += domination_check(&class, &space, n, 1, draw).map_err(|e| e.to_string())?.violations;
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    let mut sub = 0;
    for i in 0..24 {
        let (class, space) = random_sized(&mut rng, 1..=3, 1..=4, 4);
        let n = rng.random_range(2..=5);
        let u = rat(rng.random_range(4..=4 * n as i64), 4);
        let r = subadditivity_check(&class, &space, n, &u, i % 2 == 0).map_err(|e| e.to_string())?;
        ensure(r.holds, || format!("subadditivity fails on instance {i}: {} > {}", r.lhs, r.rhs))?;
        sub += 1;
    }
    Ok(format!("1000 draws with zero violations, {sub} subadditivity instances exact"))
}

fn discretization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..100 {
        let (class, space) = random_sized(&mut rng, 1..=4, 1..=8, 12);
        let n = rng.random_range(1..=10u64);
        let cells = cell_partition(&class, &space, n).map_err(|e| e.to_string())?;
        let avg = cell_average(&class, &space, &cells).map_err(|e| e.to_string())?;
        let step = rat(1, n as i64);
        for r in 0..class.class_size() {
            ensure(avg.integral(r, &space) == class.integral(r, &space), || format!("class {i}: integral moved"))?;
            for q in 0..class.point_count() {
                let dev = avg.value(r, q) - class.value(r, q);
                ensure(dev <= step && -dev <= step, || format!("class {i}: deviation above 1/n"))?;
            }
        }
    }
    for i in 0..100 {
        let len = rng.random_range(1..=10);
        let raw: Vec<i64> = (0..len).map(|_| rng.random_range(0..=30)).collect();
        let total: i64 = raw.iter().sum::<i64>().max(1);
        let mut masses: Vec<BigRational> = raw.iter().map(|&w| rat(w, total)).collect();
        if raw.iter().all(|&w| w == 0) {
            masses[0] = rat(1, 1);
        }
        let k = rng.random_range(1..=12u32);
        let r = round_measure(&masses, k).map_err(|e| e.to_string())?;
        let grid = rat(1, 1 << k);
        let rounded = r.masses();
        ensure(rounded.iter().sum::<BigRational>().is_one(), || format!("vector {i}: total not 1"))?;
        for (a, b) in rounded.iter().zip(&masses) {
            ensure((a / &grid).is_integer(), || format!("vector {i}: mass off the grid"))?;
            ensure(*a >= BigRational::zero(), || format!("vector {i}: negative mass"))?;
            let d = a - b;
            ensure(d <= grid && -d <= grid, || format!("vector {i}: deviation above 2^-k"))?;
        }
    }
    let mut matched = 0;
    for i in 0..12 {
        let (class, space) = random_sized(&mut rng, 1..=3, 2..=5, 10);
        let n = rng.random_range(1..=3);
        let u = rat(rng.random_range(0..=2 * n as i64), 2);
        let c = hat_distribution_check(&class, &space, n, &u, rng.random_range(3..=8), i % 2 == 1).map_err(|e| e.to_string())?;
        ensure(c.identity_holds(), || format!("hat instance {i}: tails differ"))?;
        ensure(c.averaging_holds(), || format!("hat instance {i}: averaging step fails"))?;
        matched += 1;
    }
    Ok(format!("100 classes, 100 mass vectors, {matched} hat spaces with equal tails"))
}

fn monte_carlo_calibration() -> Outcome {
    let class = FunctionTable::from_indicators(4, &[vec![0], vec![1], vec![2], vec![3]]).unwrap();
    let space = FiniteSpace::uniform(4).unwrap();
    let u = rat(2, 1);
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(8);
    let mut covered = 0;
    for seed in 0..200 {
        let cfg = McConfig { sample_count: 100_000, seed, worker_count: workers };
        let est = mc_sup_tail(&class, &space, 2, &u, false, &cfg).map_err(|e| e.to_string())?;
        covered += est.contains(0.25) as u32;
    }
    ensure(covered >= 195, || format!("only {covered}/200 intervals contain 1/4"))?;
    for seed in [0, 17, 199] {
        let hits: Vec<u64> = [1, 2, 8]
            .iter()
            .map(|&w| mc_sup_tail(&class, &space, 2, &u, false, &McConfig { sample_count: 100_000, seed, worker_count: w }).unwrap().hit_count)
            .collect();
        ensure(hits.windows(2).all(|w| w[0] == w[1]), || format!("seed {seed}: hit counts {hits:?}"))?;
    }
    Ok(format!("{covered}/200 intervals contain 1/4; hit counts identical for 1, 2, 8 workers"))
}

fn fragility_regression() -> Outcome {
    let rho = rat(1, 1000);
    let s = build_schedule(&rho, &BigUint::from(2048u32), 1).map_err(|e| e.to_string())?;
    let reference = 1e-3 / (1.0 + 3.0 * 2f64.powf(-11.0 / 8.0));
    let level = &s.levels[1];
    for v in [level.rho_low, level.rho_high] {
        ensure(((v - reference) / reference).abs() <= 1e-6, || format!("rho_1 = {v:e}, expected {reference:e}"))?;
    }
    ensure(!level.half_rho_holds, || "rho_1 >= rho/2 was reported".into())?;
    ensure(s.in_window(), || "N0 = 2048 should be inside the window".into())?;
    Ok(format!("rho_1 = {:.6e} < rho/2 reported (report-class finding)", level.rho_low))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("exact tail equals N^n enumeration", exact_tail_oracle),
        ("subset-class example bounds", intro_example),
        ("product-hit bound in regime", theorem_1a_in_regime),
        ("counting-factor identity", counting_identity),
        ("Hoeffding step and variance step", hoeffding_and_variance),
        ("half-counting bound", statement_b),
        ("dyadic domination and subadditivity", dyadic_domination),
        ("discretization suite", discretization),
        ("Monte Carlo calibration and determinism", monte_carlo_calibration),
        ("halving boundary regression", fragility_regression),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("PASS criterion {:>2}: {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {:>2}: {name}: {why}", i + 1);
            }
        }
    }
    println!("\n{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
