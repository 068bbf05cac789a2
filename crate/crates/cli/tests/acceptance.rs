//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Criteria 6 and 7 need the canonical CMAPSS training files
//! in `data/CMAPSS/` at the workspace root or in `$CMAPSS_DATA_DIR`.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use survmult::cmapss::{
    drop_constant_features, parse_cmapss, synthetic_fleet, to_survival, CensoringPolicy, ShortUnitPolicy, SubsetId,
    CONSTANT_TOLERANCE,
};
use survmult::forest::{fit_forest, fit_forest_with, ForestOptions, HyperParams, Resampling, SplitRule};
use survmult::metrics::{brier_score, c_index};
use survmult::rashomon::{multiplicity, sweep, RashomonSelection};
use survmult::survival::{km_estimate, na_cumhaz, reverse_km_censoring, risk_from_chf, StepFunction, SurvivalDataset};
use survmult::Execution;
use survmult_cli::config::{ExperimentConfig, GridConfig, Profile};
use survmult_cli::output::read_report;
use survmult_cli::pipeline::run_experiment;

use support::{
    c_index_oracle, cube_rows, empirical_survival, multiplicity_oracle, random_cube, random_dataset,
    random_times_events,
};

const EST_TOL: f64 = 1e-12;
const DELTAS: [f64; 3] = [0.01, 0.05, 0.1];

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(got: f64, want: f64, what: &str) -> Result<(), String> {
    check((got - want).abs() <= EST_TOL, || format!("{what}: got {got}, expected {want}"))
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    for case in 0..1000 {
        let m = rng.random_range(1..=10);
        let n = rng.random_range(1..=20);
        let reference = rng.random_range(0..m);
        let cube = random_cube(&mut rng, m, n, reference);
        let members: Vec<usize> = (0..m).filter(|_| rng.random_bool(0.5)).collect();
        let sel = RashomonSelection::from_members(reference, members);
        let delta = DELTAS[rng.random_range(0..3)];
        let got = multiplicity(&cube, &sel, delta).map_err(|e| e.to_string())?;
        let (a, d, o) = multiplicity_oracle(&cube_rows(&cube), reference, &sel.member_indices, delta);
        check(
            got.ambiguity.to_bits() == a.to_bits()
                && got.discrepancy.to_bits() == d.to_bits()
                && got.obscurity.to_bits() == o.to_bits(),
            || format!("case {case}: {got:?} vs oracle ({a}, {d}, {o})"),
        )?;
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("1000 cubes bit-equal in {:.2}s", elapsed.as_secs_f64()))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let eps = [0.01, 0.02, 0.05, 0.1, 0.2, 1.0];
    let deltas = [0.01, 0.05, 0.1, 0.25, 0.5];
    for case in 0..10_000 {
        let m = rng.random_range(1..=10);
        let n = rng.random_range(1..=20);
        let reference = rng.random_range(0..m);
        let cube = random_cube(&mut rng, m, n, reference);
        let report = sweep(&cube, &eps, &deltas).map_err(|e| e.to_string())?;
        let fail = |what: &str| format!("case {case}: {what}");
        for r in &report.rows {
            for v in [r.ambiguity, r.discrepancy, r.obscurity] {
                check((0.0..=1.0).contains(&v), || fail("value outside [0, 1]"))?;
            }
            check(r.obscurity <= r.ambiguity, || fail("O > A"))?;
            check(r.discrepancy <= r.ambiguity, || fail("D > A"))?;
        }
        let at = |e: usize, d: usize| &report.rows[e * deltas.len() + d];
        for e in 0..eps.len() {
            for d in 1..deltas.len() {
                let (lo, hi) = (at(e, d - 1), at(e, d));
                check(
                    hi.ambiguity <= lo.ambiguity && hi.discrepancy <= lo.discrepancy && hi.obscurity <= lo.obscurity,
                    || fail("increase in δ"),
                )?;
            }
        }
        for d in 0..deltas.len() {
            for e in 1..eps.len() {
                let (lo, hi) = (at(e - 1, d), at(e, d));
                check(hi.ambiguity >= lo.ambiguity && hi.discrepancy >= lo.discrepancy, || fail("decrease in ε"))?;
                check(hi.rashomon_size >= lo.rashomon_size, || fail("set shrinks in ε"))?;
            }
        }
        let single = RashomonSelection::from_members(reference, []);
        let z = multiplicity(&cube, &single, deltas[case % deltas.len()]).map_err(|e| e.to_string())?;
        check(z.ambiguity == 0.0 && z.discrepancy == 0.0 && z.obscurity == 0.0, || fail("singleton nonzero"))?;
    }
    Ok("10000 random cases, 0 violations".into())
}

fn criterion_3() -> Outcome {
    let e = |s: &StepFunction, t: f64| s.eval(t).unwrap();
    let s = km_estimate(&[1.0, 1.0, 2.0, 3.0], &[true, false, true, true]).map_err(|e| e.to_string())?;
    close(e(&s, 1.0), 0.75, "KM S(1)")?;
    close(e(&s, 2.0), 0.375, "KM S(2)")?;
    close(e(&s, 3.0), 0.0, "KM S(3)")?;
    let g = reverse_km_censoring(&[1.0, 2.0, 3.0], &[true, false, true]).map_err(|e| e.to_string())?;
    close(e(&g, 1.5), 1.0, "G(1.5)")?;
    for t in [2.0, 3.0, 100.0] {
        close(e(&g, t), 0.5, "G on [2, inf)")?;
    }
    let h = na_cumhaz(&[1.0, 2.0, 3.0], &[true; 3]).map_err(|e| e.to_string())?;
    close(e(&h, 1.0), 1.0 / 3.0, "H(1)")?;
    close(e(&h, 2.0), 5.0 / 6.0, "H(2)")?;
    close(e(&h, 3.0), 11.0 / 6.0, "H(3)")?;
    let tied = na_cumhaz(&[1.0, 1.0], &[true, true]).map_err(|e| e.to_string())?;
    close(e(&tied, 1.0), 1.0, "tied H(1)")?;
    let five = StepFunction::new(vec![1.0], vec![5.0], 0.0).map_err(|e| e.to_string())?;
    close(risk_from_chf(&five, 2.0).unwrap(), 1.0 - (-5.0f64).exp(), "risk at H=5")?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..1000 {
        let n = rng.random_range(1..=50);
        let (times, _) = random_times_events(&mut rng, n, 0.0);
        let km = km_estimate(&times, &vec![true; n]).map_err(|e| e.to_string())?;
        for &t in times.iter().chain(&[0.0, 0.5, 1e6]) {
            for u in [t - 0.5, t, t + 0.5] {
                if u < 0.0 {
                    continue;
                }
                close(e(&km, u), empirical_survival(&times, u), &format!("case {case}: KM vs empirical at {u}"))?;
            }
        }
    }
    Ok("hand examples within 1e-12; KM = empirical survival on 1000 uncensored samples".into())
}

fn dataset(times: &[f64], events: &[bool]) -> SurvivalDataset {
    SurvivalDataset::new(vec![vec![0.0]; times.len()], times.to_vec(), events.to_vec(), vec!["x".into()]).unwrap()
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..1000 {
        let n = rng.random_range(1..=100);
        let (times, _) = random_times_events(&mut rng, n, 0.0);
        let events = vec![true; n];
        let risks: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let t = rng.random_range(0.0..(n as f64 + 5.0));
        let g = reverse_km_censoring(&times, &events).map_err(|e| e.to_string())?;
        let bs = brier_score(&risks, &dataset(&times, &events), t, &g).map_err(|e| e.to_string())?;
        let mse = times
            .iter()
            .zip(&risks)
            .map(|(&ti, &r)| {
                let y = if ti <= t { 1.0 } else { 0.0 };
                (y - r) * (y - r)
            })
            .sum::<f64>()
            / n as f64;
        close(bs, mse, &format!("case {case}: Brier vs MSE"))?;
    }
    let mut compared = 0;
    for case in 0..1000 {
        let n = rng.random_range(2..=30);
        let (times, events) = random_times_events(&mut rng, n, 0.4);
        let risks: Vec<f64> = (0..n).map(|_| rng.random_range(0..10) as f64 / 10.0).collect();
        let got = c_index(&risks, &dataset(&times, &events)).ok();
        let want = c_index_oracle(&risks, &times, &events);
        check(got == want, || format!("case {case}: c-index {got:?} vs oracle {want:?}"))?;
        compared += usize::from(want.is_some());
    }
    Ok(format!("Brier = MSE on 1000 uncensored samples; c-index exact on {compared} censored samples"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..100 {
        let n = rng.random_range(20..=80);
        let d = rng.random_range(2..=6);
        let data = random_dataset(&mut rng, n, d);
        let hp = HyperParams {
            ntree: rng.random_range(1..=8),
            mtry: rng.random_range(1..=d),
            nodesize: rng.random_range(1..=8),
            nodedepth: rng.random_range(1..=6),
            splitrule: if rng.random_bool(0.5) { SplitRule::LogRank } else { SplitRule::LogRankScore },
            nsplit: rng.random_range(1..=10),
        };
        let seed = rng.random::<u64>();
        let forest = fit_forest(&data, &hp, seed).map_err(|e| e.to_string())?;
        let fail = |what: &str| format!("case {case} ({}): {what}", hp.id());
        check(forest.trees().len() == hp.ntree, || fail("tree count"))?;
        for tree in forest.trees() {
            check(tree.depth() <= hp.nodedepth, || fail("depth above nodedepth"))?;
            check(tree.leaves().all(|(_, c)| c >= hp.nodesize), || fail("leaf below nodesize"))?;
        }
        let again = fit_forest_with(&data, &hp, seed, ForestOptions { execution: Execution::Sequential, ..Default::default() })
            .map_err(|e| e.to_string())?;
        for i in 0..n {
            let x = data.row(i);
            let mut prev = 0.0;
            for t in [0.0, 2.0, 5.0, 10.0, 15.0, 20.0, 30.0, 1e3] {
                let r = forest.predict_risk(x, t).map_err(|e| e.to_string())?;
                check(r >= prev && r <= 1.0, || fail("risk not monotone in t"))?;
                prev = r;
                let r2 = again.predict_risk(x, t).map_err(|e| e.to_string())?;
                check(r.to_bits() == r2.to_bits(), || fail("retraining changed a prediction"))?;
            }
        }
    }

    for case in 0..20 {
        let (mut rows, mut times, mut events) = (vec![], vec![], vec![]);
        let per_group = rng.random_range(6..=20);
        for g in 0..2 {
            for k in 0..per_group {
                rows.push(vec![g as f64]);
                times.push(rng.random_range(1..=20) as f64 + 40.0 * g as f64);
                events.push(k == 0 || rng.random_bool(0.8));
            }
        }
        let data = SurvivalDataset::new(rows, times.clone(), events.clone(), vec!["g".into()]).unwrap();
        let hp = HyperParams {
            ntree: 1,
            mtry: 1,
            nodesize: 3,
            nodedepth: 1,
            splitrule: if case % 2 == 0 { SplitRule::LogRank } else { SplitRule::LogRankScore },
            nsplit: 10,
        };
        let options = ForestOptions { resampling: Resampling::None, execution: Execution::Sequential };
        let forest = fit_forest_with(&data, &hp, case as u64, options).map_err(|e| e.to_string())?;
        let tree = &forest.trees()[0];
        check(tree.depth() == 1, || format!("separating case {case}: depth {}", tree.depth()))?;
        for g in [0.0, 1.0] {
            let idx: Vec<usize> = (0..data.n_obs()).filter(|&i| data.row(i)[0] == g).collect();
            let gt: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
            let ge: Vec<bool> = idx.iter().map(|&i| events[i]).collect();
            let leaf = tree.leaf_chf(&[g]).map_err(|e| e.to_string())?;
            let direct = na_cumhaz(&gt, &ge).map_err(|e| e.to_string())?;
            for &t in gt.iter().chain(&[0.5, 100.0]) {
                close(leaf.eval(t).unwrap(), direct.eval(t).unwrap(), &format!("separating case {case}: leaf CHF at {t}"))?;
            }
        }
    }
    Ok("100 random forests: depth, nodesize, monotone risk, bit-exact refit; separating feature matches group NA".into())
}

fn data_dir() -> PathBuf {
    match std::env::var_os("CMAPSS_DATA_DIR") {
        Some(d) => PathBuf::from(d),
        None => Path::new(env!("CARGO_MANIFEST_DIR"))
            .ancestors()
            .nth(2)
            .expect("workspace root")
            .join("data/CMAPSS"),
    }
}

fn canonical(subset: SubsetId) -> Result<PathBuf, String> {
    let path = data_dir().join(subset.train_file_name());
    if path.is_file() {
        Ok(path)
    } else {
        Err(format!("canonical {} not found in {}", subset.train_file_name(), data_dir().display()))
    }
}

fn criterion_6() -> Outcome {
    let path = canonical(SubsetId::FD001)?;
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = ExperimentConfig {
        out_dir: out.path().to_path_buf(),
        grid: GridConfig::profile(Profile::Desk),
        censor_time: 250.0,
        eps_grid: vec![0.01, 0.05, 0.10],
        delta_grid: vec![0.01, 0.05, 0.10],
        ..Default::default()
    };
    cfg.paths.insert("FD001".into(), path);
    let cfg = cfg.resolve().map_err(|e| format!("{e:#}"))?;
    let start = Instant::now();
    run_experiment(&cfg).map_err(|e| format!("{e:#}"))?;
    let elapsed = start.elapsed();
    let rows = read_report(&out.path().join("report_FD001.csv")).map_err(|e| format!("{e:#}"))?;
    let get = |e: f64, d: f64| rows.iter().find(|r| r.epsilon == e && r.delta == d).unwrap();
    for e in [0.01, 0.05, 0.10] {
        check(get(e, 0.01).ambiguity >= get(e, 0.10).ambiguity, || format!("A(ε={e}) rises with δ"))?;
    }
    for d in [0.01, 0.05, 0.10] {
        check(get(0.10, d).ambiguity >= get(0.01, d).ambiguity, || format!("A(δ={d}) falls with ε"))?;
    }
    check(
        get(0.01, 0.01).rashomon_size <= get(0.05, 0.01).rashomon_size
            && get(0.05, 0.01).rashomon_size <= get(0.10, 0.01).rashomon_size,
        || "Rashomon size shrinks in ε".into(),
    )?;
    check(elapsed < Duration::from_secs(600), || format!("took {elapsed:?}"))?;
    Ok(format!("FD001 desk trends hold in {:.1}s", elapsed.as_secs_f64()))
}

fn criterion_7() -> Outcome {
    let expected_units = [
        (SubsetId::FD001, 100),
        (SubsetId::FD002, 260),
        (SubsetId::FD003, 100),
        (SubsetId::FD004, 260),
    ];
    let missing: Vec<String> = expected_units
        .iter()
        .filter(|(s, _)| canonical(*s).is_err())
        .map(|(s, _)| s.train_file_name())
        .collect();
    if !missing.is_empty() {
        return Err(format!("canonical {} not found in {}", missing.join(", "), data_dir().display()));
    }
    let policy = CensoringPolicy::new(250.0).unwrap();
    for (subset, units) in expected_units {
        let raw = parse_cmapss(canonical(subset)?, subset).map_err(|e| e.to_string())?;
        check(raw.units().len() == units, || format!("{subset}: {} units, expected {units}", raw.units().len()))?;
        let re = to_survival(&raw, policy, 30, ShortUnitPolicy::Skip).map_err(|e| e.to_string())?;
        let finals: Vec<(u32, u32)> = raw
            .by_unit()
            .into_iter()
            .map(|(u, recs)| (u, recs.iter().map(|r| r.cycle).max().unwrap()))
            .filter(|(u, _)| !re.skipped_units.contains(u))
            .collect();
        for (i, (unit, last)) in finals.iter().enumerate() {
            check(re.dataset.ids()[i] == *unit as u64, || format!("{subset}: unit order"))?;
            check(re.dataset.events()[i] == (*last <= 250), || format!("{subset} unit {unit}: censoring flag"))?;
        }
        if matches!(subset, SubsetId::FD001 | SubsetId::FD003) {
            let (kept, removed) = drop_constant_features(&re.dataset, CONSTANT_TOLERANCE).map_err(|e| e.to_string())?;
            for dash in ["op_set_3", "sensor_1"] {
                for stat in ["mean", "slope"] {
                    let name = format!("{dash}_{stat}");
                    check(removed.contains(&name), || format!("{subset}: {name} not flagged constant"))?;
                }
            }
            for ranged in ["op_set_1", "op_set_2", "sensor_2", "sensor_21"] {
                let name = format!("{ranged}_mean");
                check(kept.feature_names().contains(&name), || format!("{subset}: {name} flagged constant"))?;
            }
        }
    }
    Ok("unit counts 100/260/100/260, op_set_3 and sensor_1 flagged constant, censoring at 250".into())
}

fn criterion_8() -> Outcome {
    let data = tempfile::tempdir().map_err(|e| e.to_string())?;
    synthetic_fleet(SubsetId::FD001, 100, 8)
        .write(data.path().join("train_FD001.txt"))
        .map_err(|e| e.to_string())?;
    let outs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for out in &outs {
        let cfg = ExperimentConfig {
            data_dir: data.path().to_path_buf(),
            out_dir: out.path().to_path_buf(),
            grid: GridConfig::profile(Profile::Desk),
            ..Default::default()
        }
        .resolve()
        .map_err(|e| format!("{e:#}"))?;
        run_experiment(&cfg).map_err(|e| format!("{e:#}"))?;
    }
    let files = ["report_FD001.csv", "rashomon_FD001.csv", "models_FD001.csv", "cube_FD001.txt"];
    for f in files {
        let a = std::fs::read(outs[0].path().join(f)).map_err(|e| e.to_string())?;
        let b = std::fs::read(outs[1].path().join(f)).map_err(|e| e.to_string())?;
        check(a == b, || format!("{f} differs between runs"))?;
    }
    Ok("two desk runs on a synthetic FD001-format fleet give byte-identical CSVs and cube".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 metric oracle equivalence", criterion_1),
        ("2 metric invariant suite", criterion_2),
        ("3 estimator correctness", criterion_3),
        ("4 scoring correctness", criterion_4),
        ("5 forest structural invariants", criterion_5),
        ("6 desk-scale trend reproduction", criterion_6),
        ("7 ingestion conformance", criterion_7),
        ("8 pipeline determinism", criterion_8),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL criterion {name}: {reason}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
