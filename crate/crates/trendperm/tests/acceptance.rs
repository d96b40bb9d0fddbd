//! Acceptance gate: nine end-to-end criteria, one test per criterion.
//!
//! Every test prints a single machine-greppable line
//! `acceptance <k>: PASS|FAIL (<measured numbers>)` before asserting, so a
//! red run still reports what was measured. Monte Carlo tolerances are three
//! binomial standard errors at the stated replication counts.

use trendperm::config::{ExperimentConfig, MethodName, ProcessKind};
use trendperm::harness::{run_experiment, ResultTable};
use trendperm::powerstudy::{run_power_study, write_power_csv, POWER_CSV_HEADER};
use trendperm_core::generators::{generate, Innovations, ProcessSpec};
use trendperm_core::perm::{exact_permutation_distribution, permutation_distribution};
use trendperm_core::power::{ar1_sigma_sq, local_exact_variance};
use trendperm_core::seeding::split;
use trendperm_core::series::{global_mk, local_increments, local_mk, pair_sum_bruteforce};
use trendperm_core::statistic::Evaluator;
use trendperm_core::variance::{default_bandwidth, global_variance, VARIANCE_FLOOR};
use trendperm_core::{normal, Statistic, TiePolicy, TimeSeries};

fn conclude(criterion: u32, pass: bool, detail: &str) {
    println!(
        "acceptance {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "acceptance {criterion} failed: {detail}");
}

fn grid(
    process: ProcessKind,
    params: &[f64],
    ns: &[usize],
    methods: &[MethodName],
    window: Option<usize>,
    master_seed: u64,
) -> ExperimentConfig {
    ExperimentConfig {
        process,
        params: params.to_vec(),
        ns: ns.to_vec(),
        methods: methods.to_vec(),
        window,
        master_seed,
        ..ExperimentConfig::default()
    }
}

fn rate(table: &ResultTable, param: f64, n: usize, method: MethodName) -> f64 {
    table
        .rows
        .iter()
        .find(|r| r.param == param && r.n == n && r.method == method)
        .and_then(|r| r.reject_rate)
        .unwrap_or_else(|| panic!("no rate for param={param} n={n} method={method}"))
}

fn iid_gaussian(n: usize, seed: u64) -> TimeSeries {
    generate(
        &ProcessSpec::Iid {
            innovations: Innovations::Gaussian,
        },
        n,
        seed,
    )
    .expect("iid series")
}

#[test]
fn acceptance_1_global_rates_under_mdep_products() {
    use MethodName::{Classical, GlobalStud};
    let a = run_experiment(&grid(
        ProcessKind::Mdep,
        &[0.0],
        &[100],
        &[GlobalStud, Classical],
        None,
        1101,
    ))
    .unwrap();
    let b = run_experiment(&grid(
        ProcessKind::Mdep,
        &[20.0],
        &[1000],
        &[GlobalStud, Classical],
        None,
        1102,
    ))
    .unwrap();
    let stud_a = rate(&a, 0.0, 100, GlobalStud);
    let stud_b = rate(&b, 20.0, 1000, GlobalStud);
    let cls_a = rate(&a, 0.0, 100, Classical);
    let cls_b = rate(&b, 20.0, 1000, Classical);
    let pass = (stud_a - 0.05).abs() <= 0.021
        && (stud_b - 0.05).abs() <= 0.021
        && (cls_a - 0.047).abs() <= 0.021
        && (cls_b - 0.061).abs() <= 0.021;
    conclude(
        1,
        pass,
        &format!(
            "stud m=0,n=100: {stud_a:.3} and m=20,n=1000: {stud_b:.3}, both vs 0.05+-0.021; \
             classical: {cls_a:.3} vs 0.047+-0.021 and {cls_b:.3} vs 0.061+-0.021"
        ),
    );
}

#[test]
fn acceptance_2_global_rates_under_ar1() {
    use MethodName::{Classical, GlobalStud};
    let rhos = [-0.6, -0.2, 0.2, 0.6];
    let table = run_experiment(&grid(
        ProcessKind::Ar1,
        &rhos,
        &[1000],
        &[GlobalStud, Classical],
        None,
        1201,
    ))
    .unwrap();
    let stud: Vec<f64> = rhos
        .iter()
        .map(|&r| rate(&table, r, 1000, GlobalStud))
        .collect();
    let cls_pos = rate(&table, 0.6, 1000, Classical);
    let cls_neg = rate(&table, -0.6, 1000, Classical);
    let stud_ok = stud.iter().all(|&r| (0.029..=0.071).contains(&r));
    let pass = stud_ok && cls_pos >= 0.15 && cls_neg <= 0.01;
    conclude(
        2,
        pass,
        &format!(
            "stud at rho -0.6/-0.2/0.2/0.6: {:.3}/{:.3}/{:.3}/{:.3} vs [0.029, 0.071]; \
             classical {cls_pos:.3} >= 0.15 at 0.6 and {cls_neg:.3} <= 0.01 at -0.6",
            stud[0], stud[1], stud[2], stud[3]
        ),
    );
}

#[test]
fn acceptance_3_local_rates_under_mdep_products() {
    use MethodName::{LocalStud, LocalUnstud};
    let ms = [0.0, 1.0, 2.0, 3.0];
    let table = run_experiment(&grid(
        ProcessKind::Mdep,
        &ms,
        &[1000],
        &[LocalStud, LocalUnstud],
        Some(5),
        1302,
    ))
    .unwrap();
    let unstud_m3 = rate(&table, 3.0, 1000, LocalUnstud);
    let unstud_m0 = rate(&table, 0.0, 1000, LocalUnstud);
    let stud: Vec<f64> = ms
        .iter()
        .map(|&m| rate(&table, m, 1000, LocalStud))
        .collect();
    let stud_max = stud.iter().cloned().fold(0.0, f64::max);
    let pass = unstud_m3 >= 0.12 && (0.037..=0.079).contains(&unstud_m0) && stud_max <= 0.08;
    conclude(
        3,
        pass,
        &format!(
            "unstud m=3: {unstud_m3:.3} >= 0.12; unstud m=0: {unstud_m0:.3} vs [0.037, 0.079]; \
             stud max over m: {stud_max:.3} <= 0.08"
        ),
    );
}

#[test]
fn acceptance_4_local_rates_under_ar1() {
    use MethodName::{LocalStud, LocalUnstud};
    let table = run_experiment(&grid(
        ProcessKind::Ar1,
        &[0.6],
        &[1000],
        &[LocalStud, LocalUnstud],
        Some(5),
        1401,
    ))
    .unwrap();
    let unstud = rate(&table, 0.6, 1000, LocalUnstud);
    let stud = rate(&table, 0.6, 1000, LocalStud);
    let pass = unstud >= 0.09 && stud <= 0.08;
    conclude(
        4,
        pass,
        &format!("unstud {unstud:.3} >= 0.09; stud {stud:.3} <= 0.08"),
    );
}

#[test]
fn acceptance_5_exact_enumeration_oracles() {
    let d3 = exact_permutation_distribution(Statistic::GlobalU, 3).unwrap();
    let expected3 = [-1.0, -1.0 / 3.0, -1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 1.0];
    let dist_ok = d3.values() == expected3;

    let var4 = exact_permutation_distribution(Statistic::GlobalU, 4)
        .unwrap()
        .variance();
    let var4_ok = (var4 - 13.0 / 54.0).abs() <= 1e-12;

    let mut worst_rel = 0.0f64;
    for n in 3..=8usize {
        for g in 1..=((n - 1) / 2) {
            let d =
                exact_permutation_distribution(Statistic::LocalScaled { window: g }, n).unwrap();
            // Values are sqrt(n g) V, so Var(sum Y) = n g Var(values).
            let var_sum = (n * g) as f64 * d.variance();
            let target = local_exact_variance(n, g).unwrap();
            worst_rel = worst_rel.max((var_sum - target).abs() / target);
        }
    }
    let local_ok = worst_rel <= 1e-12;

    let pass = dist_ok && var4_ok && local_ok;
    conclude(
        5,
        pass,
        &format!(
            "n=3 U distribution exact: {dist_ok}; n=4 Var(U) {var4:.15} vs 13/54 within 1e-12: \
             {var4_ok}; local sum-variance worst relative error over n<=8: {worst_rel:.2e}"
        ),
    );
}

#[test]
fn acceptance_6_permutation_limit_variances() {
    let n = 2000usize;
    let global = permutation_distribution(Statistic::GlobalScaled, n, 10_000, 601)
        .unwrap()
        .variance();
    let global_target = 2.0 * (2 * n + 5) as f64 / (9.0 * (n - 1) as f64);

    let local = permutation_distribution(Statistic::LocalScaled { window: 3 }, n, 10_000, 602)
        .unwrap()
        .variance();
    let local_target = local_exact_variance(n, 3).unwrap() / (3 * n) as f64;

    let pass = (global - global_target).abs() <= 0.02 && (local - local_target).abs() <= 0.02;
    conclude(
        6,
        pass,
        &format!(
            "Var(sqrt(n) U) = {global:.4} vs {global_target:.4} +-0.02; \
             Var(sqrt(ng) V) = {local:.4} vs {local_target:.4} +-0.02"
        ),
    );
}

/// Per-draw in-band rates of the truncated-autocovariance studentizer. The
/// estimator's sampling spread at these (n, b) pairs is wider than the bands
/// below (its standard deviation scales like sqrt(b/n)), so this test is
/// expected to fail; it still reports the measured fractions. The estimator's
/// mean and the resulting test levels are pinned elsewhere in the suite.
#[test]
fn acceptance_7_estimator_consistency() {
    let reps = 200u64;
    let mut in_iid = 0u32;
    for r in 0..reps {
        let ts = iid_gaussian(5000, split(701, r));
        let v = global_variance(&ts, 17, VARIANCE_FLOOR).unwrap().value;
        in_iid += u32::from((v - 4.0 / 9.0).abs() <= 0.05);
    }
    let frac_iid = f64::from(in_iid) / reps as f64;

    let sigma_sq = ar1_sigma_sq(0.5).unwrap();
    let spec = ProcessSpec::Ar1 { rho: 0.5 };
    let mut in_ar1 = 0u32;
    for r in 0..reps {
        let ts = generate(&spec, 20_000, split(702, r)).unwrap();
        let b = default_bandwidth(20_000);
        let v = global_variance(&ts, b, VARIANCE_FLOOR).unwrap().value;
        in_ar1 += u32::from((v - sigma_sq).abs() <= 0.08);
    }
    let frac_ar1 = f64::from(in_ar1) / reps as f64;

    let pass = frac_iid >= 0.95 && frac_ar1 >= 0.95;
    conclude(
        7,
        pass,
        &format!(
            "iid n=5000 b=17: {frac_iid:.3} of {reps} draws within 4/9 +-0.05 (need >= 0.95); \
             ar1 rho=0.5 n=20000: {frac_ar1:.3} within {sigma_sq:.4} +-0.08 (need >= 0.95)"
        ),
    );
}

#[test]
fn acceptance_8_drift_power_study() {
    let study = run_power_study(&[0.0, 2.0, 4.0], 2000, 2000, 10_000, 0.05, 801).unwrap();
    let r: Vec<f64> = study.rows.iter().map(|row| row.reject_rate).collect();
    let monotone = r[0] <= r[1] && r[1] <= r[2];
    let level_ok = (r[0] - 0.05).abs() <= 0.02;

    // The two predictions ride along in the CSV, side by side.
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("power.csv");
    write_power_csv(&study, &csv_path).unwrap();
    let header = std::fs::read_to_string(&csv_path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    let csv_ok = header == POWER_CSV_HEADER && header.contains("pred_main,pred_supplement");

    // Column semantics: at h the main prediction is 1 - Phi(z_{0.95} - h/4).
    let z = normal::quantile(0.95).unwrap();
    let main_formula = 1.0 - normal::cdf(z - 1.0);
    let formula_ok = (study.rows[2].pred_main - main_formula).abs() <= 1e-10;

    let verdict = study
        .log
        .lines()
        .find(|l| l.starts_with("matching variant:"))
        .unwrap_or("")
        .to_string();
    let log_ok = !verdict.is_empty();

    let pass = monotone && level_ok && csv_ok && formula_ok && log_ok;
    conclude(
        8,
        pass,
        &format!(
            "rates at h=0/2/4: {:.3}/{:.3}/{:.3}, monotone: {monotone}, level within \
             0.05+-0.02: {level_ok}; csv columns: {csv_ok}; h=4 main prediction matches \
             1-Phi(z-1): {formula_ok}; log records `{verdict}`",
            r[0], r[1], r[2]
        ),
    );
}

/// All permutations of 0..k, by Heap's algorithm.
fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn go(k: usize, idx: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(idx.clone());
            return;
        }
        for i in 0..k {
            go(k - 1, idx, out);
            if k.is_multiple_of(2) {
                idx.swap(i, k - 1);
            } else {
                idx.swap(0, k - 1);
            }
        }
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut out = Vec::new();
    go(k, &mut idx, &mut out);
    out
}

#[test]
fn acceptance_9_property_suites() {
    // O(n log n) pair sum vs the O(n^2) brute force, 200 random cases.
    let mut brute_ok = 0u32;
    for k in 0..200u64 {
        let n = 2 + (split(901, k) % 499) as usize;
        let ts = iid_gaussian(n, split(902, k));
        let pairs = (n * (n - 1) / 2) as f64;
        if global_mk(&ts) == pair_sum_bruteforce(&ts) as f64 / pairs {
            brute_ok += 1;
        }
    }

    // Monotone invariance, antisymmetry, and the integer identity
    // sum(Y) = n g V, spot-checked on random series.
    let mut invariance_ok = true;
    for k in 0..20u64 {
        let ts = iid_gaussian(50, split(903, k));
        let cubed = TimeSeries::new(
            ts.values().iter().map(|v| v.powi(3)).collect(),
            TiePolicy::Reject,
        )
        .unwrap();
        let reversed = TimeSeries::new(
            ts.values().iter().rev().cloned().collect(),
            TiePolicy::Reject,
        )
        .unwrap();
        let negated =
            TimeSeries::new(ts.values().iter().map(|v| -v).collect(), TiePolicy::Reject).unwrap();
        invariance_ok &= global_mk(&ts) == global_mk(&cubed);
        invariance_ok &= global_mk(&reversed) == -global_mk(&ts);
        for g in [1usize, 4, 9] {
            let v = local_mk(&ts, g).unwrap();
            invariance_ok &= local_mk(&cubed, g).unwrap() == v;
            invariance_ok &= local_mk(&negated, g).unwrap() == -v;
            let sum = local_increments(&ts, g).unwrap().sum();
            invariance_ok &= (v * (50 * g) as f64 - sum as f64).abs() < 1e-9;
        }
    }

    // Distribution-free tabulation: enumerating the statistic over every
    // rearrangement of arbitrary tie-free data reproduces the rank-based
    // exact null bit for bit, at n=6.
    let data = [3.7, -1.2, 0.4, 9.9, -5.0, 2.2];
    let mut tabulation_ok = true;
    for statistic in [
        Statistic::GlobalScaled,
        Statistic::GlobalStudentized { bandwidth: None },
    ] {
        let exact = exact_permutation_distribution(statistic, 6).unwrap();
        let mut ev = Evaluator::new(statistic, 6).unwrap();
        let mut vals: Vec<f64> = permutations(6)
            .iter()
            .map(|perm| {
                let arranged: Vec<f64> = perm.iter().map(|&i| data[i]).collect();
                ev.evaluate_series(&TimeSeries::new(arranged, TiePolicy::Reject).unwrap())
            })
            .collect();
        vals.sort_by(f64::total_cmp);
        tabulation_ok &= vals == exact.values();
    }

    // Parallel determinism of run_experiment: worker count changes nothing
    // but timing.
    let base = grid(
        ProcessKind::Ar1,
        &[0.0, 0.5],
        &[20, 40],
        &[MethodName::GlobalStud, MethodName::Classical],
        None,
        904,
    );
    let mut cfg1 = base.clone();
    cfg1.n_sims = 40;
    cfg1.n_perms = 50;
    let mut cfg4 = cfg1.clone();
    cfg4.workers = 4;
    let t1 = run_experiment(&cfg1).unwrap();
    let t4 = run_experiment(&cfg4).unwrap();
    let determinism_ok = t1.rows.len() == t4.rows.len()
        && t1.rows.iter().zip(&t4.rows).all(|(a, b)| a.same_outcome(b));

    let pass = brute_ok == 200 && invariance_ok && tabulation_ok && determinism_ok;
    conclude(
        9,
        pass,
        &format!(
            "brute-force equality {brute_ok}/200; invariance and identities: {invariance_ok}; \
             distribution-free tabulation at n=6: {tabulation_ok}; \
             worker-count determinism: {determinism_ok}"
        ),
    );
}
