//! Acceptance gate. Runs every criterion at its stated tolerance, prints one
//! line per criterion and exits nonzero if any fails.

use std::fs;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use mterm::approx::{
    approx_error, assemble, budget_plan, greedy_baseline, oracle_profile, orthogonal_cubic, PlanKind, PlanParams,
    Scheme,
};
use mterm::decomposition::{lp_norm, mu_size, nikolskii_gap, BlockMode, DyadicBlocks};
use mterm::norms::{bq1_norm, ClassParams, SpaceParams};
use mterm::ratelab::{
    critical_branch_values, run_rate_experiment, theoretical_exponent, ExponentQuery, Quantity, RateExperiment, Target,
};
use mterm::spectrum::CoeffGrid;
use mterm::testfuncs::{random_sparse, single_block_extremal, GenKind, GenSpec};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

/// Seeded corpus of random polynomials: d in {1, 2}, halfwidth at most 32.
fn corpus(count: u64, base: u64) -> Vec<CoeffGrid> {
    (0..count)
        .map(|i| {
            let seed = base + i;
            let d = 1 + (i % 2) as usize;
            let halfwidth = match d {
                1 => 1 + (seed * 7 % 32) as usize,
                _ => 1 + (seed * 5 % 12) as usize,
            };
            let total = (2 * halfwidth + 1).pow(d as u32);
            let n = 1 + (seed * 31 % total as u64) as usize;
            random_sparse(d, n, halfwidth, seed).unwrap()
        })
        .collect()
}

fn within(elapsed: Duration, limit: Duration) -> Outcome {
    if elapsed <= limit {
        Ok(format!("{:.1}s", elapsed.as_secs_f64()))
    } else {
        Err(format!(
            "took {:.1}s, limit {}s",
            elapsed.as_secs_f64(),
            limit.as_secs()
        ))
    }
}

fn decomposition_exactness() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for f in corpus(200, 1000) {
        for mode in [BlockMode::Vp, BlockMode::Sharp] {
            let blocks = DyadicBlocks::new(&f, mode);
            let back = blocks.reconstruct(f.halfwidth());
            worst = worst.max(back.max_abs_diff(&f));
        }
    }
    if worst >= 1e-10 {
        return Err(format!("max coefficient error {worst:e}"));
    }
    let t = within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!("max coefficient error {worst:.2e}, {t}"))
}

fn norm_chain() -> Outcome {
    let slack = |x: f64| 1e-9 * x.max(1.0);
    let mut checks = 0;
    for (i, f) in corpus(200, 1000).iter().enumerate() {
        let b1 = bq1_norm(f, 1.0, BlockMode::Vp).map_err(|e| e.to_string())?;
        let binf = bq1_norm(f, f64::INFINITY, BlockMode::Vp).map_err(|e| e.to_string())?;
        for q in [1.0, 2.0, 4.0, f64::INFINITY] {
            let lq = lp_norm(f, q).map_err(|e| e.to_string())?;
            let bq = bq1_norm(f, q, BlockMode::Vp).map_err(|e| e.to_string())?;
            if lq > bq + slack(bq) || b1 > bq + slack(bq) || bq > binf + slack(binf) {
                return Err(format!(
                    "polynomial {i}, q={q}: L_q {lq}, B_q1 {bq}, B_11 {b1}, B_inf1 {binf}"
                ));
            }
            checks += 3;
        }
    }
    Ok(format!("{checks} inequalities"))
}

fn nikolskii() -> Outcome {
    let pairs = [(1.0, 2.0), (1.0, f64::INFINITY), (2.0, 4.0), (2.0, f64::INFINITY)];
    let mut worst: f64 = 0.0;
    for (i, f) in corpus(500, 5000).iter().enumerate() {
        let (p, q) = pairs[i % pairs.len()];
        let gap = nikolskii_gap(&f.to_poly(), p, q).map_err(|e| e.to_string())?;
        worst = worst.max(gap);
    }
    if worst <= 1.0 {
        Ok(format!("max gap {worst:.4}"))
    } else {
        Err(format!("max gap {worst}"))
    }
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let l2 = SpaceParams::lq(2.0).unwrap();
    let b41 = SpaceParams::bq1(4.0).unwrap();
    for seed in 0..100u64 {
        let n = 4 + (seed % 11) as usize;
        let f = random_sparse(1, n, 32, 70_000 + seed).unwrap();
        let prof_l2 = oracle_profile(&f, &l2).map_err(|e| e.to_string())?;
        let prof_b = oracle_profile(&f, &b41).map_err(|e| e.to_string())?;
        let floor = 1e-12 * prof_b[0].1;
        for m in 0..=n {
            let g = greedy_baseline(&f, m as u64);
            let e2 = approx_error(&f, &g, &l2).map_err(|e| e.to_string())?;
            let eb = approx_error(&f, &g, &b41).map_err(|e| e.to_string())?;
            if (e2 - prof_l2[m].1).abs() > 1e-10 {
                return Err(format!("seed {seed}, m={m}: greedy L2 {e2} vs oracle {}", prof_l2[m].1));
            }
            if eb < prof_b[m].1 * (1.0 - 1e-12) - floor {
                return Err(format!(
                    "seed {seed}, m={m}: greedy B4,1 {eb} below oracle {}",
                    prof_b[m].1
                ));
            }
        }
    }
    let t = within(start.elapsed(), Duration::from_secs(120))?;
    Ok(format!("100 instances, {t}"))
}

const PLAN_TUPLES: [(PlanKind, usize, f64, f64, f64); 20] = [
    (PlanKind::CaseA, 1, 2.0, 4.0, 0.3),
    (PlanKind::CaseA, 2, 2.0, 4.0, 0.6),
    (PlanKind::CaseA, 2, 2.0, 3.0, 0.5),
    (PlanKind::CaseA, 1, 1.25, 3.0, 0.5),
    (PlanKind::CaseA, 3, 2.0, 4.0, 1.0),
    (PlanKind::CaseA, 1, 2.0, 3.0, 0.25),
    (PlanKind::CaseA, 2, 1.5, 3.0, 0.8),
    (PlanKind::CaseB, 1, 2.0, 4.0, 2.0),
    (PlanKind::CaseB, 1, 2.0, 4.0, 1.0),
    (PlanKind::CaseB, 1, 1.5, 3.0, 1.5),
    (PlanKind::CaseB, 2, 2.0, 4.0, 1.5),
    (PlanKind::CaseB, 2, 2.0, 4.0, 3.0),
    (PlanKind::CaseB, 2, 1.5, 8.0, 2.0),
    (PlanKind::CaseB, 3, 2.0, 4.0, 2.5),
    (PlanKind::CaseB, 1, 2.0, 4.0, 0.75),
    (PlanKind::Univariate, 1, 2.0, f64::INFINITY, 0.75),
    (PlanKind::Univariate, 1, 2.0, f64::INFINITY, 1.0),
    (PlanKind::Univariate, 1, 2.0, f64::INFINITY, 1.5),
    (PlanKind::Univariate, 1, 2.0, f64::INFINITY, 2.0),
    (PlanKind::Univariate, 1, 2.0, f64::INFINITY, 3.0),
];

fn budget_soundness() -> Outcome {
    let dense: Vec<CoeffGrid> = [(1usize, 8191usize), (2, 255), (3, 31)]
        .iter()
        .map(|&(d, h)| random_sparse(d, (2 * h + 1).pow(d as u32), h, 90 + d as u64).unwrap())
        .collect();
    let mut plans = 0;
    let mut worst_ratio: f64 = 0.0;
    for &(kind, d, p, q, r) in &PLAN_TUPLES {
        let pp = match kind {
            PlanKind::Univariate => PlanParams::univariate(r),
            _ => PlanParams::new(d, p, q, r),
        };
        for e in 4..=12 {
            let m = 1u64 << e;
            let plan = budget_plan(kind, m, &pp).map_err(|e| format!("{kind:?} {d} {p} {q} {r}: {e}"))?;
            let a = assemble(&dense[d - 1], &plan).map_err(|e| e.to_string())?;
            if a.term_count() as u64 > m {
                return Err(format!(
                    "{kind:?} d={d} p={p} q={q} r={r} m={m}: {} terms",
                    a.term_count()
                ));
            }
            let ratio = plan.pre_shrink_total() as f64 / m as f64;
            if ratio > 8.0 {
                return Err(format!(
                    "{kind:?} d={d} p={p} q={q} r={r} m={m}: pre-shrink {ratio:.2}m"
                ));
            }
            worst_ratio = worst_ratio.max(ratio);
            plans += 1;
        }
    }
    Ok(format!("{plans} plans, pre-shrink total at most {worst_ratio:.2}m"))
}

fn slope_experiment(scheme: Scheme, d: usize, p: f64, q: f64, r: f64, s_max: usize) -> Result<f64, String> {
    let cp = ClassParams::new(d, r, p, f64::INFINITY).map_err(|e| e.to_string())?;
    let gen = GenSpec::new(GenKind::RandomBesov, cp, s_max, 0);
    let space = SpaceParams::bq1(q).map_err(|e| e.to_string())?;
    let grid = (4..=9).map(|e| 1u64 << e).collect();
    let mut exp = RateExperiment::new(gen, scheme, space, grid);
    exp.seeds = 5;
    let report = run_rate_experiment(&exp).map_err(|e| e.to_string())?;
    report.fitted_slope.ok_or_else(|| "no usable points".to_string())
}

fn univariate_slopes() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    for r in [1.0, 1.5, 2.0] {
        let slope = slope_experiment(Scheme::Univariate, 1, 2.0, f64::INFINITY, r, 14)?;
        if slope > -r + 0.3 {
            return Err(format!("r={r}: slope {slope:.3} above {:.2}", -r + 0.3));
        }
        parts.push(format!("r={r}: {slope:.3}"));
    }
    let t = within(start.elapsed(), Duration::from_secs(300))?;
    Ok(format!("{}, {t}", parts.join(", ")))
}

fn case_b_slope() -> Outcome {
    let slope = slope_experiment(Scheme::CaseB, 1, 2.0, 4.0, 2.0, 14)?;
    if slope <= -1.7 {
        Ok(format!("slope {slope:.3}"))
    } else {
        Err(format!("slope {slope:.3} above -1.7"))
    }
}

fn exponent_table() -> Outcome {
    let inf = f64::INFINITY;
    let cases = [
        (ExponentQuery::besov(Quantity::Em, Target::Bq1, 1, 0.4, 2.0, 4.0), -0.3),
        (ExponentQuery::besov(Quantity::Em, Target::Bq1, 2, 3.0, 2.0, 4.0), -1.5),
        (
            ExponentQuery::besov(Quantity::EmPerp, Target::Bq1, 1, 1.0, 4.0, 2.0),
            -1.0,
        ),
        (
            ExponentQuery::besov(Quantity::Em, Target::Binf1, 1, 2.0, 1.0, inf),
            -1.5,
        ),
    ];
    for (q, want) in &cases {
        let got = theoretical_exponent(q).map_err(|e| e.to_string())?.value;
        if (got - want).abs() > 1e-12 {
            return Err(format!("{q:?}: {got} vs {want}"));
        }
    }
    let tuples = [
        (1, 2.0, 4.0),
        (1, 2.0, 3.0),
        (1, 1.5, 3.0),
        (1, 1.25, 8.0),
        (2, 2.0, 4.0),
        (2, 1.5, 5.0),
        (2, 2.0, 2.5),
        (3, 2.0, 4.0),
        (3, 1.2, 6.0),
        (4, 1.8, 3.0),
    ];
    for (d, p, q) in tuples {
        let (small, large) = critical_branch_values(d, p, q);
        if (small - large).abs() > 1e-12 || (small + 0.5).abs() > 1e-12 {
            return Err(format!("d={d} p={p} q={q}: branches {small} and {large}"));
        }
    }
    Ok("4 values, 10 critical points".into())
}

fn separation() -> Outcome {
    let l2 = SpaceParams::lq(2.0).unwrap();
    let b41 = SpaceParams::bq1(4.0).unwrap();
    let mut instances = Vec::new();
    for (r, p) in [(1.5, 2.0), (2.0, 4.0)] {
        for s in 3..=8 {
            instances.push((1usize, s, r, p));
        }
        for s in 2..=5 {
            instances.push((2usize, s, r, p));
        }
    }
    let mut compared = 0;
    let mut b41_strict = true;
    for &(d, s, r, p) in &instances {
        let cp = ClassParams::new(d, r, p, f64::INFINITY).unwrap();
        let f = single_block_extremal(s, &cp).map_err(|e| e.to_string())?;
        let limit = mu_size(s, d).min(1u64 << (d * s));
        for m in 1..limit {
            let g = greedy_baseline(&f, m);
            let o = orthogonal_cubic(&f, m).map_err(|e| e.to_string())?;
            let (eg, eo) = (
                approx_error(&f, &g, &l2).map_err(|e| e.to_string())?,
                approx_error(&f, &o, &l2).map_err(|e| e.to_string())?,
            );
            if eg >= eo {
                return Err(format!("d={d} s={s} m={m}: greedy {eg} not below orthogonal {eo}"));
            }
            let bg = approx_error(&f, &g, &b41).map_err(|e| e.to_string())?;
            let bo = approx_error(&f, &o, &b41).map_err(|e| e.to_string())?;
            b41_strict &= bg < bo;
            compared += 1;
        }
    }
    Ok(format!(
        "{} instances, {compared} budgets in L2 (B4,1 strict: {b41_strict})",
        instances.len()
    ))
}

fn determinism() -> Outcome {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |name: &str| -> Result<Vec<u8>, String> {
        let out = root.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_mterm"))
            .args([
                "rates",
                "--r",
                "1.5",
                "--s-max",
                "12",
                "--seeds",
                "3",
                "--seed",
                "42",
                "--m-grid",
                "16,32,64,128,256",
            ])
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?
            .status;
        if status.code() != Some(0) {
            return Err(format!("rates exited with {status}"));
        }
        fs::read(out.join("rates.csv")).map_err(|e| e.to_string())
    };
    let (a, b) = (run("a")?, run("b")?);
    if a == b {
        Ok(format!("{} identical bytes", a.len()))
    } else {
        Err("CSV files differ".into())
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("decomposition exactness", decomposition_exactness),
        ("norm chain", norm_chain),
        ("nikolskii gap", nikolskii),
        ("oracle equivalence", oracle_equivalence),
        ("budget soundness", budget_soundness),
        ("univariate slopes", univariate_slopes),
        ("case-b slope", case_b_slope),
        ("exponent table", exponent_table),
        ("greedy/orthogonal separation", separation),
        ("rates determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
