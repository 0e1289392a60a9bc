//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p chsh-forge --test acceptance`.

mod common;

use std::f64::consts::SQRT_2;
use std::fs;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use chsh_forge::experiment::{estimate_runs, fluctuation_demo};
use chsh_forge::lhv::SettingUniverse;
use chsh_forge::optimizer::{brute_force_chsh, enumerate_deterministic, hunt};
use chsh_forge::pool::{
    chsh_nonlocal, draw_pool, full_target_matches, random_model, stitch_report, QuantumTargets, Schedule,
    StitchedModel,
};
use chsh_forge::LhvModel;
use rayon::prelude::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn bound_theorem() -> Outcome {
    let u = Arc::new(SettingUniverse::standard());
    let mut parts = Vec::new();
    let mut ok = true;
    for size in [2usize, 8, 64] {
        let r = hunt(20_141_202 + size as u64, 1_000_000, size, &u).map_err(|e| e.to_string())?;
        ok &= r.violations == 0 && r.max_abs_s <= 2.0 + 1e-12 && r.n_models == 1_000_000;
        parts.push(format!("size {size}: max|S| = {:.17}, violations {}", r.max_abs_s, r.violations));
    }
    ensure(ok, parts.join("; "))
}

fn integrand_reduction() -> Outcome {
    let u = Arc::new(SettingUniverse::standard());
    let (bad_values, worst) = (0..100_000u64)
        .into_par_iter()
        .map(|seed| {
            let m = random_model(seed, 8, &u).unwrap();
            let values = m.integrand_values();
            let bad = values.iter().filter(|v| v.value != 2 && v.value != -2).count();
            let mean: f64 = values.iter().map(|v| v.weight * f64::from(v.value)).sum();
            (bad, (mean - m.chsh()).abs())
        })
        .reduce(|| (0, 0.0), |a, b| (a.0 + b.0, a.1.max(b.1)));
    ensure(
        bad_values == 0 && worst <= 1e-12,
        format!("1e5 models: {bad_values} non-(+/-2) values, max |mean - S| = {worst:.3e}"),
    )
}

fn deterministic_enumeration() -> Outcome {
    let t = Instant::now();
    let all = enumerate_deterministic();
    let elapsed = t.elapsed();
    let plus = all.iter().filter(|(_, s)| *s == 2).count();
    let minus = all.iter().filter(|(_, s)| *s == -2).count();
    ensure(
        all.len() == 16 && plus == 8 && minus == 8 && elapsed.as_millis() < 50,
        format!("{} strategies, +2: {plus}, -2: {minus}, {:?}", all.len(), elapsed),
    )
}

fn stitched_quantum_demo() -> Outcome {
    let targets = QuantumTargets::quantum();
    let stitched = StitchedModel::from_targets(&targets, &Arc::new(SettingUniverse::standard())).map_err(|e| e.to_string())?;
    let report = stitch_report(&stitched, &targets, None);
    println!("      pair   target                 E_Lq(q)                own S");
    for c in &report.components {
        println!("      {}   {:+.17}   {:+.17}   {:+.12}", c.pair, c.target, c.selected_correlation, c.own_chsh);
    }
    let s_star = chsh_nonlocal(&stitched);
    ensure(
        (s_star - 2.0 * SQRT_2).abs() <= 1e-9 && report.components.iter().all(|c| c.own_chsh.abs() <= 2.0),
        format!("S* = {s_star:.17} (2 sqrt 2 = {:.17}), max component |S| = {}", 2.0 * SQRT_2, report.max_component_abs_chsh),
    )
}

fn no_single_model_match() -> Outcome {
    let u = Arc::new(SettingUniverse::standard());
    let targets = QuantumTargets::quantum();
    let mut parts = Vec::new();
    let mut ok = true;
    for seed in [1u64, 2, 3] {
        let pool = draw_pool(seed, 100_000, &u, 8, &Schedule::UniformRandom).map_err(|e| e.to_string())?;
        let hits = full_target_matches(&pool, &targets, 0.05);
        ok &= hits.is_empty();
        parts.push(format!("seed {seed}: {} full matches", hits.len()));
    }
    ensure(ok, format!("1e5 models per pool at tol 0.05; {}", parts.join(", ")))
}

fn estimator_consistency() -> Outcome {
    let u = Arc::new(SettingUniverse::standard());
    let models: [(&str, LhvModel); 3] = [
        ("deterministic S=-2", common::all_plus()),
        ("two-point S=2", common::two_point_s2()),
        ("random size-8", random_model(8_675_309, 8, &u).unwrap()),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (i, (name, m)) in models.iter().enumerate() {
        let s = m.chsh();
        let runs = estimate_runs(m, 100_000, 100, 1000 + i as u64).map_err(|e| e.to_string())?;
        let within = runs.iter().filter(|e| (e.s_hat - s).abs() <= 5.0 * e.s_stderr).count();
        ok &= within >= 99;
        parts.push(format!("{name}: {within}/100"));
    }
    ensure(ok, parts.join(", "))
}

fn fluctuation_counter_illustration() -> Outcome {
    let r = fluctuation_demo(&common::two_point_s2(), 100, 10_000, 7).map_err(|e| e.to_string())?;
    ensure(
        r.fraction_exceeding > 0.3 && r.exact_s == 2.0,
        format!("fraction s_hat > 2 = {:.4} over {} runs, exact S = {}", r.fraction_exceeding, r.runs, r.exact_s),
    )
}

fn oracle_equivalence() -> Outcome {
    let u = Arc::new(SettingUniverse::with_extra_settings(1));
    let mut worst = (0..10_000u64)
        .into_par_iter()
        .map(|seed| {
            let m = random_model(seed, 1 + (seed % 16) as usize, &u).unwrap();
            (brute_force_chsh(&m) - m.chsh()).abs()
        })
        .reduce(|| 0.0, f64::max);
    let golden = [common::all_plus(), common::two_point_s2(), common::s_one_and_half(), common::deterministic_s2()];
    for m in golden.iter().chain(enumerate_deterministic().iter().map(|(s, _)| s.to_model()).collect::<Vec<_>>().iter()) {
        worst = worst.max((brute_force_chsh(m) - m.chsh()).abs());
    }
    ensure(worst <= 1e-12, format!("1e4 random + 20 golden models, max route gap {worst:.3e}"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let model = d.join("model.json");
    fs::write(&model, common::two_point_s2().to_document().to_json()).map_err(|e| e.to_string())?;
    let model = model.to_str().unwrap();
    let commands: Vec<(&str, Vec<&str>, &str)> = vec![
        ("verify", vec!["verify", model], "json"),
        ("hunt", vec!["hunt", "--seed", "5", "--count", "200000"], "json"),
        ("stitch-demo", vec!["stitch-demo"], "json"),
        ("stitch-demo --pool-select", vec!["stitch-demo", "--pool-select", "--seed", "5", "--count", "20000"], "json"),
        ("pool-select", vec!["pool-select", "--seed", "5", "--count", "20000"], "jsonl"),
        ("estimate json", vec!["estimate", model, "--seed", "5", "--count", "10000", "--runs", "50"], "json"),
        ("estimate csv", vec!["estimate", model, "--seed", "5", "--count", "10000", "--format", "csv"], "csv"),
        ("enumerate", vec!["enumerate"], "json"),
    ];
    let mut checked = Vec::new();
    for (i, (name, args, ext)) in commands.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = d.join(format!("out{i}_{rep}.{ext}"));
            let threads = if rep == 0 { "1" } else { "4" };
            let status = Command::new(env!("CARGO_BIN_EXE_chsh-forge"))
                .args(args)
                .args(["--out", out.to_str().unwrap()])
                .env("CHSH_FORGE_THREADS", threads)
                .output()
                .map_err(|e| e.to_string())?;
            if !status.status.success() {
                return Err(format!("{name} exited with {:?}", status.status.code()));
            }
            outputs.push(fs::read(&out).map_err(|e| e.to_string())?);
        }
        if outputs[0] != outputs[1] || outputs[0].is_empty() {
            return Err(format!("{name}: reruns differ"));
        }
        checked.push(*name);
    }
    Ok(format!("{} commands byte-identical on rerun: {}", checked.len(), checked.join(", ")))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("AC1 bound theorem, desk scale", bound_theorem),
        ("AC2 integrand reduction", integrand_reduction),
        ("AC3 deterministic enumeration", deterministic_enumeration),
        ("AC4 stitched quantum demo", stitched_quantum_demo),
        ("AC5 no single-model match", no_single_model_match),
        ("AC6 estimator consistency", estimator_consistency),
        ("AC7 fluctuation counter-illustration", fluctuation_counter_illustration),
        ("AC8 oracle equivalence", oracle_equivalence),
        ("AC9 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let t = Instant::now();
        let outcome = check();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name} ({secs:.1}s): {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
