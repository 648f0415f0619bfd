//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs the named experiments at their default settings.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use wedgelab::algebra_probes::{string_locality_check, Relation, StringCheckOptions};
use wedgelab::experiments::{self, ExperimentConfig, ExperimentReport};
use wedgelab::mass_shell::{build_grid, GridSpec};
use wedgelab::testfn::{bump, spatial_bump, string_function, Branch};

struct Outcome {
    passed: bool,
    detail: String,
}

fn from_report(report: &ExperimentReport, elapsed: Duration, limit: Duration) -> Outcome {
    let failed: Vec<String> = report
        .failed()
        .iter()
        .map(|c| match c.tolerance {
            Some(t) => format!("{} = {:.3e} (tol {t:.0e})", c.name, c.value),
            None => c.name.clone(),
        })
        .collect();
    let in_time = elapsed <= limit;
    let mut detail = format!("{} checks, {:.1} s", report.checks.len(), elapsed.as_secs_f64());
    if !in_time {
        detail.push_str(&format!("; over the {} s budget", limit.as_secs()));
    }
    if !failed.is_empty() {
        detail.push_str(&format!("; failed: {}", failed.join("; ")));
    }
    Outcome { passed: report.passed() && in_time, detail }
}

fn timed(name: &str, cfg: &ExperimentConfig) -> Result<(ExperimentReport, Duration), String> {
    let start = Instant::now();
    let r = experiments::run(name, cfg).map_err(|e| format!("{name}: {e}"))?;
    Ok((r, start.elapsed()))
}

fn value(report: &ExperimentReport, name: &str) -> Result<f64, String> {
    report.check(name).map(|c| c.value).ok_or_else(|| format!("no check named {name:?}"))
}

fn car(cfg: &ExperimentConfig) -> Result<Outcome, String> {
    let (r, t) = timed("verify-car", cfg)?;
    let modes = value(&r, "modes")?;
    let functions = r.functions.len();
    let mut o = from_report(&r, t, Duration::from_secs(10));
    o.detail = format!("{functions} functions, M = {modes}; {}", o.detail);
    o.passed &= functions >= 4 && modes <= 8.0;
    Ok(o)
}

fn weak(cfg: &ExperimentConfig) -> Result<Outcome, String> {
    let (r, t) = timed("weak-locality", cfg)?;
    let control = r
        .checks
        .iter()
        .filter(|c| c.name.starts_with("control") && c.relation == Relation::Recorded && c.name.contains("max residual"))
        .map(|c| c.value)
        .fold(0.0, f64::max);
    let mut o = from_report(&r, t, Duration::from_secs(120));
    o.detail = format!("control {control:.3e}; {}", o.detail);
    o.passed &= control > 1e-3;
    Ok(o)
}

fn strings(cfg: &ExperimentConfig) -> Result<Outcome, String> {
    let (r, t) = timed("string-fields", cfg)?;
    let mut o = from_report(&r, t, Duration::from_secs(120));
    // The worked probe: slab (0, 1), l around x₁ = 1/2, f at (0, 3).
    let m = cfg.model.m;
    let l = spatial_bump(&[0.5], 0.25).map_err(|e| e.to_string())?;
    let sf = string_function(1.0, &l, Branch::LowerVanishing, m).map_err(|e| e.to_string())?;
    let probe = bump(&[0.0, 3.0], 0.5).map_err(|e| e.to_string())?;
    let grid = build_grid(cfg.model, GridSpec::resolving(256, 8.0, 4.0)).map_err(|e| e.to_string())?;
    let opts = StringCheckOptions { tolerance: 1e-5, profile_points: vec![], reference_points: vec![] };
    let extra = string_locality_check(&sf, &[probe], &[], &grid, &opts).map_err(|e| e.to_string())?;
    let worst = extra.checks.iter().filter(|c| c.name.contains("φ(h),φ")).map(|c| c.value).fold(0.0, f64::max);
    o.detail = format!("probe (0,3): {worst:.3e}; {}", o.detail);
    o.passed &= extra.passed();
    Ok(o)
}

fn plain(name: &str, limit: u64, cfg: &ExperimentConfig) -> Result<Outcome, String> {
    let (r, t) = timed(name, cfg)?;
    Ok(from_report(&r, t, Duration::from_secs(limit)))
}

fn main() -> ExitCode {
    let cfg = ExperimentConfig::default();
    let start = Instant::now();
    let criteria: Vec<(&str, Box<dyn Fn() -> Result<Outcome, String>>)> = vec![
        ("1 CAR exactness", Box::new(|| car(&cfg))),
        ("2 oracle equivalence", Box::new(|| plain("oracle-crosscheck", 120, &cfg))),
        ("3 relative locality", Box::new(|| plain("relative-locality", 120, &cfg))),
        ("4 nonlocality witness", Box::new(|| plain("nonlocality-witness", 120, &cfg))),
        ("5 weak locality", Box::new(|| weak(&cfg))),
        ("6 Bisognano-Wichmann", Box::new(|| plain("bisognano-wichmann", 120, &cfg))),
        ("7 string localization", Box::new(|| strings(&cfg))),
        ("8 local net", Box::new(|| plain("local-net", 120, &cfg))),
        ("9 Klein-Gordon", Box::new(|| plain("klein-gordon", 60, &cfg))),
    ];
    let mut failures = 0;
    for (label, f) in &criteria {
        let o = f().unwrap_or_else(|e| Outcome { passed: false, detail: format!("error: {e}") });
        if !o.passed {
            failures += 1;
        }
        println!("{} criterion {label}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
    }
    let total = start.elapsed();
    println!("{failures} of {} criteria failed in {:.1} s", criteria.len(), total.as_secs_f64());
    if total > Duration::from_secs(600) {
        println!("FAIL total runtime over 10 minutes");
        failures += 1;
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
