use std::path::Path;

use num_bigint::BigUint;
use num_traits::{One, Signed, Zero};

use super::scenario::*;
use super::{fmt_bool, fmt_f, fmt_log, fmt_rat, CheckClass, Outcome, Table};
use crate::bounds::{bound_lemma31, bound_theorem1, bound_theorem1a, in_regime, regime_check, BoundValue, RegimeParams, Statement};
use crate::covering::{fit_dense_params, implied_d, FitConfig};
use crate::dyadic::{
    cell_average, cell_partition, convergence_sweep, domination_check, hat_distribution_check, lemma31_pieces,
    round_measure, subadditivity_check,
};
use crate::error::{invalid, Error, Result};
use crate::exact::{format_rational, Rational};
use crate::halving::{build_schedule, chain_report, counting_factor, largest_window_n0, statement_b_check};
use crate::inclusion::{bp_measure, IndicatorFamily};
use crate::intro::intro_example_pn;
use crate::mc::{mc_sup_tail, McConfig};
use crate::space::sup_mean;
use crate::tail::exact_sup_tail;
use crate::vc::{check_vc_bound, vc_dimension, SetSystem};

use CheckClass::{Assert, Report};

struct Ctx<'a> {
    seed: u64,
    workers: usize,
    base: &'a Path,
    out: Outcome,
}

fn rats(v: &[Rat]) -> Vec<Rational> {
    v.iter().map(|r| r.0.clone()).collect()
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Runs a parsed scenario. `seed` overrides the scenario's own seed;
/// `workers` only changes how fast parallel sections finish.
pub fn run_scenario(s: &Scenario, seed: Option<u64>, workers: usize) -> Result<Outcome> {
    let seed = seed.unwrap_or(s.seed);
    let mut cx = Ctx {
        seed,
        workers: workers.max(1),
        base: &s.base_dir,
        out: Outcome { kind: s.kind.name().into(), seed, ..Default::default() },
    };
    if let Some(p) = &s.intro {
        intro(&mut cx, p)?;
    }
    if let Some(p) = &s.cover {
        cover(&mut cx, p)?;
    }
    if let Some(p) = &s.vc {
        vc(&mut cx, p)?;
    }
    if let Some(p) = &s.tail {
        tail(&mut cx, p)?;
    }
    if let Some(p) = &s.bp {
        bp(&mut cx, p)?;
    }
    if let Some(p) = &s.halving {
        halving(&mut cx, p)?;
    }
    if let Some(p) = &s.dyadic {
        dyadic(&mut cx, p)?;
    }
    if let Some(p) = &s.discretize {
        discretize(&mut cx, p)?;
    }
    Ok(cx.out)
}

fn intro(cx: &mut Ctx, p: &IntroParams) -> Result<()> {
    let mut t = Table::new("intro", &["n", "p_n", "bound", "rhs", "satisfied"]);
    let mut all = true;
    let mut saturated = true;
    for n in 1..=p.n_max {
        let r = intro_example_pn(p.points, p.max_size, n)?;
        let pn = r.exact_value().cloned().expect("closed form is exact");
        if n <= p.max_size {
            saturated &= pn.is_one();
        }
        for b in &r.compared_bounds {
            if n >= p.max_size {
                all &= b.satisfied;
            }
            let rhs = match &b.value {
                BoundValue::Exact(v) => fmt_rat(v),
                BoundValue::Float(u) => fmt_f(u.value()),
            };
            t.push(vec![n.to_string(), fmt_rat(&pn), b.name.clone(), rhs, fmt_bool(b.satisfied)]);
        }
    }
    cx.out.check(format!("intro: P_n within both closed-form bounds for L <= n <= {}", p.n_max), Assert, all);
    cx.out.check("intro: P_n = 1 when n <= L", Assert, saturated);
    cx.out.tables.push(t);
    Ok(())
}

fn cover(cx: &mut Ctx, p: &CoverParams) -> Result<()> {
    let (class, space) = p.data.load(cx.base)?;
    let mut cfg = FitConfig { seed: cx.seed, ..Default::default() };
    if let Some(d) = p.dirichlet_draws {
        cfg.dirichlet_draws = d;
    }
    if let Some(c) = p.climb_steps {
        cfg.climb_steps = c;
    }
    let fit = fit_dense_params(&class, &space, &rats(&p.epsilons), &p.exponents, &cfg)?;
    let mut ev = Table::new("cover_evidence", &["epsilon", "measure_id", "m_greedy", "m_exact", "d_implied"]);
    for e in &fit.evidence {
        ev.push(vec![
            fmt_rat(&e.epsilon),
            e.measure_id.clone(),
            e.m_greedy.to_string(),
            opt(e.m_exact),
            fmt_f(implied_d(e.m(), &e.epsilon, fit.exponent_l)),
        ]);
    }
    let mut ft = Table::new("cover_fit", &["exponent_l", "parameter_d", "selected"]);
    for (l, d) in &fit.candidates {
        ft.push(vec![fmt_f(*l), fmt_f(*d), fmt_bool(*l == fit.exponent_l)]);
    }
    cx.out.check("cover: every evidence entry has m <= D eps^-L", Assert, fit.evidence_holds());
    cx.out.check(
        "cover: exact minimum <= greedy size",
        Assert,
        fit.evidence.iter().all(|e| e.m_exact.is_none_or(|x| x <= e.m_greedy)),
    );
    cx.out.tables.extend([ev, ft]);
    Ok(())
}

fn vc(cx: &mut Ctx, p: &VcScenario) -> Result<()> {
    let system = match (&p.data, &p.sets, p.max_size, p.ground) {
        (Some(d), None, None, None) => SetSystem::from_indicator_class(&d.load(cx.base)?.0)?,
        (None, Some(sets), None, Some(g)) => SetSystem::new(g, sets)?,
        (None, None, Some(l), Some(g)) => SetSystem::at_most_l_subsets(g, l)?,
        _ => {
            return Err(Error::Schema("vc: give data, or ground with exactly one of sets and max_size".into()))
        }
    };
    let dim = vc_dimension(&system)?;
    let report = check_vc_bound(&system, &p.b.0, p.k, p.n_min..=p.n_max)?;
    let mut s = Table::new("vc_summary", &["ground", "set_count", "vc_dimension", "parameter_b", "exponent_k"]);
    s.push(vec![
        system.ground().to_string(),
        system.sets().len().to_string(),
        dim.to_string(),
        fmt_rat(&p.b.0),
        p.k.to_string(),
    ]);
    let mut t = Table::new("vc_traces", &["n", "trace_count", "bound", "holds"]);
    for r in &report.per_n_report {
        t.push(vec![r.n.to_string(), r.trace_count.to_string(), fmt_rat(&r.bound), fmt_bool(r.holds)]);
    }
    cx.out.check(
        format!("vc: trace count <= B n^K for {} <= n <= {}", p.n_min, p.n_max),
        Report,
        report.all_hold(),
    );
    cx.out.tables.extend([s, t]);
    Ok(())
}

const TAIL_COLUMNS: [&str; 15] = [
    "statement", "n", "u", "strict", "method", "lhs_exact", "estimate", "ci_low", "ci_high", "hit_count", "seed",
    "rhs_bound", "in_regime", "satisfied", "margin_log10",
];

fn tail(cx: &mut Ctx, p: &TailParams) -> Result<()> {
    let (class, space) = p.data.load(cx.base)?;
    let u = &p.u.0;
    let base = |statement: &str, method: &str| -> Vec<String> {
        let mut row = vec![String::new(); TAIL_COLUMNS.len()];
        row[0] = statement.into();
        row[1] = p.n.to_string();
        row[2] = fmt_rat(u);
        row[3] = fmt_bool(p.strict);
        row[4] = method.into();
        row
    };
    let mut t = Table::new("tail", &TAIL_COLUMNS);
    let exact = match exact_sup_tail(&class, &space, p.n, u, p.strict) {
        Ok(r) => Some(r),
        Err(Error::CapExceeded { .. }) if p.mc.is_some() => None,
        Err(e) => return Err(e),
    };
    if let Some(r) = &exact {
        let mut row = base("sup tail", r.method.tag());
        row[5] = fmt_rat(r.exact_value().expect("exact"));
        t.push(row);
        if let Some(want) = &p.expect {
            cx.out.check(
                format!("tail: exact value equals expected {}", fmt_rat(&want.0)),
                Assert,
                r.exact_value() == Some(&want.0),
            );
        }
    }
    if let Some(mc) = &p.mc {
        let cfg = McConfig { sample_count: mc.samples, seed: cx.seed, worker_count: cx.workers };
        let est = mc_sup_tail(&class, &space, p.n, u, p.strict, &cfg)?;
        let mut row = base("sup tail", "monte-carlo");
        row[6] = fmt_f(est.estimate);
        row[7] = fmt_f(est.ci_low);
        row[8] = fmt_f(est.ci_high);
        row[9] = est.hit_count.to_string();
        row[10] = cx.seed.to_string();
        t.push(row);
        if let Some(v) = exact.as_ref().and_then(|r| r.exact_value()) {
            let inside = if v.is_zero() { est.hit_count == 0 } else { est.contains(crate::exact::to_f64(v)) };
            cx.out.check("tail: exact value inside the 99% Clopper-Pearson interval", Report, inside);
        }
    }
    let mut regime = Table::new("tail_regime", &["statement", "hypothesis", "holds"]);
    if let Some(mut r) = exact {
        let mean = sup_mean(&class, &space)?;
        for b in &p.bounds {
            let (statement, bound) = match b.statement.as_str() {
                "theorem1" => (Statement::Theorem1, bound_theorem1(b.d, &b.rho.0, u)?),
                "lemma3.1" => (Statement::Lemma31, bound_lemma31(b.d, &b.rho.0, u)?),
                other => return Err(invalid(format!("tail: unknown statement {other:?} (theorem1, lemma3.1)"))),
            };
            let mut params = RegimeParams::new(b.d, b.l.0.clone(), b.rho.0.clone());
            params.n = Some(p.n as u64);
            params.u = Some(u.clone());
            params.point_count = Some(BigUint::from(space.point_count()));
            params.sup_mean = Some(mean.clone());
            let checks = regime_check(statement, &params);
            for h in &checks {
                regime.push(vec![statement.name().into(), h.name.clone(), fmt_bool(h.holds)]);
            }
            let inside = in_regime(&checks);
            let c = r.compare(statement.name(), BoundValue::Float(bound), inside).clone();
            let mut row = base(statement.name(), r.method.tag());
            row[5] = fmt_rat(r.exact_value().unwrap());
            row[11] = fmt_f(bound.value());
            row[12] = fmt_bool(inside);
            row[13] = fmt_bool(c.satisfied);
            row[14] = fmt_log(c.margin_log10);
            t.push(row);
            let class = if inside { Assert } else { Report };
            cx.out.check(format!("tail: {} bound (in regime: {inside})", statement.name()), class, c.satisfied);
        }
    }
    cx.out.tables.extend([t, regime]);
    Ok(())
}

fn bp_family(cx: &Ctx, p: &BpParams) -> Result<IndicatorFamily> {
    match (&p.data, p.set_count, &p.pieces) {
        (Some(d), None, None) => {
            let (class, space) = d.load(cx.base)?;
            IndicatorFamily::from_class(&class, &space)
        }
        (None, Some(n), Some(pieces)) => {
            let mut out = Vec::with_capacity(pieces.len());
            for piece in pieces {
                let mut mask = 0u32;
                for &s in &piece.sets {
                    if s >= n.min(32) {
                        return Err(invalid(format!("bp: piece names set {s} but set_count is {n}")));
                    }
                    mask |= 1 << s;
                }
                out.push((mask, piece.measure.0.clone()));
            }
            IndicatorFamily::from_pieces(n, out)
        }
        _ => Err(Error::Schema("bp: give either data or set_count with pieces".into())),
    }
}

fn bp(cx: &mut Ctx, p: &BpParams) -> Result<()> {
    let family = bp_family(cx, p)?;
    let mut t = Table::new(
        "bp",
        &["statement", "p", "method", "lhs_exact", "d", "l", "rho", "rhs_bound", "in_regime", "satisfied", "margin_log10"],
    );
    let mut regime = Table::new("bp_regime", &["p", "hypothesis", "holds"]);
    let fitted = match &p.theorem1a {
        Some(th) => Some(match (th.d, &th.fit) {
            (Some(d), None) => d,
            (None, Some(fit)) => {
                let (class, space) = family.to_table()?;
                let cfg = FitConfig { seed: cx.seed, ..Default::default() };
                fit_dense_params(&class, &space, &rats(&fit.epsilons), &fit.exponents, &cfg)?.parameter_d
            }
            _ => return Err(Error::Schema("bp.theorem1a: give exactly one of d and fit".into())),
        }),
        None => None,
    };
    let mean = (0..family.set_count()).map(|f| family.set_measure(f)).max().unwrap_or_else(Rational::zero);
    for &pp in &p.p {
        let mut r = bp_measure(&family, pp)?;
        let lhs = r.exact_value().cloned().expect("inclusion-exclusion is exact");
        let mut row = vec![String::new(); t.columns.len()];
        row[0] = "bp measure".into();
        row[1] = pp.to_string();
        row[2] = r.method.tag().into();
        row[3] = fmt_rat(&lhs);
        if let (Some(th), Some(d)) = (&p.theorem1a, fitted) {
            let bound = bound_theorem1a(d, &th.rho.0, pp as u64)?;
            let mut params = RegimeParams::new(d, th.l.0.clone(), th.rho.0.clone());
            params.p = Some(pp as u64);
            params.n0 = th.n0.map(BigUint::from);
            params.sup_mean = Some(mean.clone());
            let checks = regime_check(Statement::Theorem1A, &params);
            for h in &checks {
                regime.push(vec![pp.to_string(), h.name.clone(), fmt_bool(h.holds)]);
            }
            let inside = in_regime(&checks);
            let c = r.compare("theorem1A", BoundValue::Float(bound), inside).clone();
            row[0] = "theorem1A".into();
            row[4] = fmt_f(d);
            row[5] = fmt_rat(&th.l.0);
            row[6] = fmt_rat(&th.rho.0);
            row[7] = fmt_f(bound.value());
            row[8] = fmt_bool(inside);
            row[9] = fmt_bool(c.satisfied);
            row[10] = fmt_log(c.margin_log10);
            let class = if inside { Assert } else { Report };
            cx.out.check(format!("bp: theorem1A bound at p = {pp} (in regime: {inside})"), class, c.satisfied);
        }
        t.push(row);
    }
    cx.out.tables.extend([t, regime]);
    Ok(())
}

fn halving(cx: &mut Ctx, p: &HalvingParams) -> Result<()> {
    let rho = &p.rho.0;
    let n0 = match p.n0 {
        Some(n) => BigUint::from(n),
        None => largest_window_n0(rho).ok_or_else(|| invalid("halving: no N0 in the window for this rho"))?,
    };
    let deepest = p.chain.iter().map(|c| c.k).max().unwrap_or(0).max(p.k_max);
    let schedule = build_schedule(rho, &n0, deepest)?;
    let mut st = Table::new(
        "halving_schedule",
        &["k", "n_k", "rho_k_low", "rho_k_high", "c_k", "half_rho_holds", "c_k_le_two"],
    );
    let shown = &schedule.levels[..=p.k_max as usize];
    for l in shown {
        st.push(vec![
            l.k.to_string(),
            l.n_k.to_string(),
            fmt_f(l.rho_low),
            fmt_f(l.rho_high),
            fmt_rat(&l.c_k),
            fmt_bool(l.half_rho_holds),
            fmt_bool(l.c_k_le_two),
        ]);
    }
    cx.out.check(format!("halving: N0 = {n0} inside the window"), Report, schedule.in_window());
    cx.out.check(
        format!("halving: rho_k >= rho/2 for k <= {}", p.k_max),
        Report,
        shown.iter().all(|l| l.half_rho_holds),
    );
    cx.out.check(format!("halving: C_k <= 2 for k <= {}", p.k_max), Report, shown.iter().all(|l| l.c_k_le_two));
    let mut ct = Table::new(
        "halving_chain",
        &["k", "n_k", "rho_k_low", "rho_k_high", "c_k", "p", "step", "lhs_log", "rhs_log", "holds"],
    );
    for c in &p.chain {
        let report = chain_report(rho, &n0, c.k, c.p, c.d, c.l)?;
        let level = &schedule.levels[c.k as usize];
        for s in &report.steps {
            ct.push(vec![
                c.k.to_string(),
                level.n_k.to_string(),
                fmt_f(level.rho_low),
                fmt_f(level.rho_high),
                fmt_rat(&level.c_k),
                c.p.to_string(),
                s.name.to_string(),
                fmt_log(s.lhs_ln),
                fmt_log(s.rhs_ln),
                fmt_bool(s.holds),
            ]);
        }
        cx.out.check(format!("halving: chain at k = {}, p = {} holds", c.k, c.p), Report, report.all_hold());
    }
    cx.out.tables.extend([st, ct]);
    if let Some(max) = p.counting_max {
        let mut ok = true;
        for n_k in 1..=max {
            for q in 0..=n_k {
                ok &= counting_factor(n_k, q)?.identity_holds();
            }
        }
        cx.out.check(format!("halving: counting factor identity for N_k <= {max}"), Assert, ok);
    }
    if let Some(b) = &p.statement_b {
        let (class, _) = b.data.load(cx.base)?;
        let mut t = Table::new("statement_b", &["row", "z", "hypothesis", "count", "bound", "holds"]);
        let mut ok = true;
        for (i, row) in class.rows().iter().enumerate() {
            for z in &b.z {
                let r = statement_b_check(row, &b.rho_next.0, &z.0)?;
                if r.hypothesis {
                    ok &= r.holds;
                }
                t.push(vec![
                    i.to_string(),
                    fmt_rat(&z.0),
                    fmt_bool(r.hypothesis),
                    r.count.to_string(),
                    fmt_f(r.bound.value()),
                    fmt_bool(r.holds),
                ]);
            }
        }
        cx.out.check("halving: statement (b) wherever its hypothesis holds", Assert, ok);
        cx.out.tables.push(t);
    }
    Ok(())
}

fn dyadic(cx: &mut Ctx, p: &DyadicParams) -> Result<()> {
    let (class, space) = p.data.load(cx.base)?;
    let u = &p.u.0;
    let sub = subadditivity_check(&class, &space, p.n, u, p.strict)?;
    let dom = domination_check(&class, &space, p.n as u64, p.trials, cx.seed)?;
    let mut lt = Table::new(
        "dyadic_levels",
        &["j", "t", "dn_measure", "overcount", "piece1_log10", "piece2_log10", "piece3_log10", "piece4_log10"],
    );
    let mut chain_ok = true;
    for l in &sub.levels {
        let mut row = vec![
            l.j.to_string(),
            l.t.to_string(),
            fmt_rat(l.measure.exact_value().expect("exact")),
            l.overcount.as_ref().map(format_rational).unwrap_or_default(),
        ];
        match &p.lemma31 {
            Some(c) => {
                let pieces = lemma31_pieces(c.d, c.l, &c.rho.0, p.n as u64, u, l.j)?;
                chain_ok &= pieces.windows(2).all(|w| w[0].1.ln() <= w[1].1.ln());
                row.extend(pieces.iter().map(|(_, b)| fmt_log(b.log10())));
            }
            None => row.extend(std::iter::repeat_n(String::new(), 4)),
        }
        lt.push(row);
    }
    let mut s = Table::new(
        "dyadic_summary",
        &["n", "u", "strict", "lhs", "rhs", "subadditive", "trials", "violations", "min_slack", "max_slack"],
    );
    s.push(vec![
        p.n.to_string(),
        fmt_rat(u),
        fmt_bool(p.strict),
        fmt_rat(&sub.lhs),
        fmt_rat(&sub.rhs),
        fmt_bool(sub.holds),
        dom.trials.to_string(),
        dom.violations.to_string(),
        fmt_rat(&dom.min_slack),
        fmt_rat(&dom.max_slack),
    ]);
    cx.out.check(format!("dyadic: domination on {} random draws", p.trials), Assert, dom.violations == 0);
    cx.out.check("dyadic: tail <= sum of level measures", Assert, sub.holds);
    if p.lemma31.is_some() {
        cx.out.check("dyadic: level bound pieces decrease along the chain", Report, chain_ok);
    }
    cx.out.tables.extend([lt, s]);
    Ok(())
}

fn discretize(cx: &mut Ctx, p: &DiscretizeParams) -> Result<()> {
    let (class, space) = p.data.load(cx.base)?;
    let u = &p.u.0;
    let cells = cell_partition(&class, &space, p.n as u64)?;
    let averaged = cell_average(&class, &space, &cells)?;
    let step = Rational::new(1.into(), (p.n as u64).into());
    let mut avg_ok = true;
    for r in 0..class.class_size() {
        avg_ok &= averaged.integral(r, &space) == class.integral(r, &space);
        for q in 0..class.point_count() {
            avg_ok &= (averaged.value(r, q) - class.value(r, q)).abs() <= step;
        }
    }
    let rounded = round_measure(&cells.cells.atom_measures, p.k)?;
    let grid = Rational::new(1.into(), num_bigint::BigInt::one() << p.k as usize);
    let masses = rounded.masses();
    let round_ok = masses.iter().sum::<Rational>().is_one() && rounded.max_deviation() <= grid;
    let mut rt = Table::new("rounding", &["cell", "signature", "original_mass", "rounded_mass", "alpha"]);
    for (i, sig) in cells.signatures.iter().enumerate() {
        rt.push(vec![
            i.to_string(),
            sig.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";"),
            fmt_rat(&rounded.original[i]),
            fmt_rat(&masses[i]),
            rounded.alpha[i].to_string(),
        ]);
    }
    let hat = hat_distribution_check(&class, &space, p.n, u, p.k, p.strict)?;
    let mut ht = Table::new(
        "hat_check",
        &["n", "u", "k", "cells", "bin_cells", "bin_hat", "mean_cells", "mean_hat", "shifted_original", "averaged"],
    );
    ht.push(vec![
        p.n.to_string(),
        fmt_rat(u),
        p.k.to_string(),
        hat.cell_count.to_string(),
        fmt_rat(&hat.bin_cells),
        fmt_rat(&hat.bin_hat),
        fmt_rat(&hat.mean_cells),
        fmt_rat(&hat.mean_hat),
        fmt_rat(&hat.shifted_original),
        fmt_rat(&hat.averaged),
    ]);
    cx.out.check("discretize: cell averages stay within 1/n and keep integrals", Assert, avg_ok);
    cx.out.check(format!("discretize: rounded masses sum to 1 within 2^-{}", p.k), Assert, round_ok);
    cx.out.check("discretize: hat space reproduces the cell tails exactly", Assert, hat.identity_holds());
    cx.out.check("discretize: averaging loses at most 1 in the threshold", Assert, hat.averaging_holds());
    cx.out.tables.extend([rt, ht]);
    if !p.sweep.is_empty() {
        let (limit, rows) = convergence_sweep(&class, &space, p.n, u, p.sweep.iter().copied())?;
        let mut t = Table::new("convergence", &["k", "tail_k", "tail_limit", "error", "envelope", "within"]);
        for r in &rows {
            t.push(vec![
                r.k.to_string(),
                fmt_rat(&r.tail_k),
                fmt_rat(&limit),
                fmt_rat(&r.error),
                fmt_rat(&r.envelope),
                fmt_bool(r.within),
            ]);
        }
        cx.out.check("discretize: rounding error within n Q 2^-k", Report, rows.iter().all(|r| r.within));
        cx.out.tables.push(t);
    }
    Ok(())
}
