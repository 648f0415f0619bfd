//! Batch runner: reads a TOML experiment config, runs named experiments and
//! writes JSON reports plus CSV tables for plotting.
//!
//! Exit status: 0 all checks pass, 1 some check failed, 2 configuration or
//! usage error, 3 mode capacity exceeded.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};
use wedgelab::experiments::{self, ExperimentConfig, ExperimentReport, Tolerances};

#[derive(Parser, Debug)]
#[command(name = "wedgelab", version, about = "Locality experiments for a nonlocal Fermi field")]
struct Cli {
    /// TOML experiment configuration; built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for reports and CSV tables.
    #[arg(long, global = true, env = "WEDGELAB_OUT", default_value = "wedgelab-out")]
    out: PathBuf,
    /// Seed for randomized probes; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Profile::Default)]
    tolerance_profile: Profile,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Profile {
    Strict,
    Default,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Anticommutation relations, twist and parity identities.
    VerifyCar,
    /// Twisted field against the field for wedge-separated supports.
    RelativeLocality,
    /// Central-sequence projections and the vacuum witness.
    NonlocalityWitness,
    /// Vacuum expectations of wedge-separated words.
    WeakLocality,
    /// One-particle modular conjugation on wedge wave functions.
    BisognanoWichmann,
    /// String-localized smearing functions and their fields.
    StringFields,
    /// Even string monomials, isotony and locality.
    LocalNet,
    /// Matrix vacuum expectations against the Pfaffian oracle.
    OracleCrosscheck,
    /// Fields of Klein–Gordon images vanish.
    KleinGordon,
    /// Every experiment above.
    All,
}

impl Command {
    fn experiments(self) -> Vec<&'static str> {
        match self {
            Command::VerifyCar => vec!["verify-car"],
            Command::RelativeLocality => vec!["relative-locality"],
            Command::NonlocalityWitness => vec!["nonlocality-witness"],
            Command::WeakLocality => vec!["weak-locality"],
            Command::BisognanoWichmann => vec!["bisognano-wichmann"],
            Command::StringFields => vec!["string-fields"],
            Command::LocalNet => vec!["local-net"],
            Command::OracleCrosscheck => vec!["oracle-crosscheck"],
            Command::KleinGordon => vec!["klein-gordon"],
            Command::All => experiments::EXPERIMENTS.to_vec(),
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    config_hash: &'a str,
    version: &'static str,
    tolerance_profile: Profile,
    seed: u64,
    passed: bool,
    #[serde(flatten)]
    report: &'a ExperimentReport,
}

#[derive(Serialize)]
struct RunRecord<'a> {
    experiment: &'a str,
    config_hash: &'a str,
    passed: Option<bool>,
    error: Option<String>,
    seconds: f64,
    report: Option<String>,
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

/// Defaults for the chosen profile, overlaid with the config file.
fn load_config(path: Option<&Path>, profile: Profile) -> Result<ExperimentConfig, String> {
    let base = ExperimentConfig {
        tolerances: match profile {
            Profile::Strict => Tolerances::strict(),
            Profile::Default => Tolerances::default(),
        },
        ..Default::default()
    };
    let Some(path) = path else {
        return Ok(base);
    };
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let user: toml::Table = text.parse().map_err(|e| format!("{}: {e}", path.display()))?;
    let mut merged = toml::Table::try_from(&base).map_err(|e| e.to_string())?;
    overlay(&mut merged, user);
    let cfg: ExperimentConfig =
        toml::Value::Table(merged).try_into().map_err(|e: toml::de::Error| format!("{}: {e}", path.display()))?;
    cfg.validate().map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(cfg)
}

/// Recursive merge of tables; everything else is replaced.
fn overlay(base: &mut toml::Table, user: toml::Table) {
    for (k, v) in user {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(u)) => overlay(b, u),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn config_hash(cfg: &ExperimentConfig) -> String {
    let canonical = serde_json::to_vec(cfg).expect("config serializes");
    hex::encode(Sha256::digest(&canonical))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One CSV per report table: label, then the value columns in key order.
fn write_tables(dir: &Path, report: &ExperimentReport) -> std::io::Result<()> {
    for (name, rows) in &report.tables {
        let mut keys: Vec<&String> = rows.iter().flat_map(|r| r.values.keys()).collect();
        keys.sort();
        keys.dedup();
        let file: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
        let mut out = String::from("label");
        for k in &keys {
            out.push(',');
            out.push_str(&csv_field(k));
        }
        out.push('\n');
        for r in rows {
            out.push_str(&csv_field(&r.label));
            for k in &keys {
                out.push(',');
                if let Some(v) = r.values.get(*k) {
                    out.push_str(&format!("{v:e}"));
                }
            }
            out.push('\n');
        }
        fs::write(dir.join(format!("{file}.csv")), out)?;
    }
    Ok(())
}

fn append_record(out: &Path, record: &RunRecord) -> std::io::Result<()> {
    let mut f = fs::OpenOptions::new().create(true).append(true).open(out.join("runs.jsonl"))?;
    writeln!(f, "{}", serde_json::to_string(record).expect("record serializes"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.jobs {
        if n == 0 {
            return fail(2, "--jobs must be positive");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(2, e);
        }
    }
    let mut cfg = match load_config(cli.config.as_deref(), cli.tolerance_profile) {
        Ok(c) => c,
        Err(e) => return fail(2, format!("invalid config: {e}")),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let hash = config_hash(&cfg);
    if let Err(e) = fs::create_dir_all(&cli.out) {
        return fail(2, format!("cannot create {}: {e}", cli.out.display()));
    }
    let mut status = 0u8;
    for name in cli.command.experiments() {
        let start = Instant::now();
        let result = experiments::run(name, &cfg);
        let seconds = start.elapsed().as_secs_f64();
        let report = match result {
            Ok(r) => r,
            Err(e) => {
                let code = e.exit_code() as u8;
                let _ = append_record(
                    &cli.out,
                    &RunRecord { experiment: name, config_hash: &hash, passed: None, error: Some(e.to_string()), seconds, report: None },
                );
                eprintln!("{name}: error: {e}");
                status = status.max(code);
                continue;
            }
        };
        let passed = report.passed();
        let dir = cli.out.join(name);
        let file = format!("report-{}.json", &hash[..16]);
        let envelope = Envelope {
            config_hash: &hash,
            version: env!("CARGO_PKG_VERSION"),
            tolerance_profile: cli.tolerance_profile,
            seed: cfg.seed,
            passed,
            report: &report,
        };
        let body = serde_json::to_string_pretty(&envelope).expect("report serializes");
        let written = fs::create_dir_all(&dir)
            .and_then(|_| fs::write(dir.join(&file), body.as_bytes()))
            .and_then(|_| write_tables(&dir, &report))
            .and_then(|_| {
                append_record(
                    &cli.out,
                    &RunRecord {
                        experiment: name,
                        config_hash: &hash,
                        passed: Some(passed),
                        error: None,
                        seconds,
                        report: Some(format!("{name}/{file}")),
                    },
                )
            });
        if let Err(e) = written {
            return fail(2, format!("cannot write report for {name}: {e}"));
        }
        let asserted = report.checks.iter().filter(|c| c.tolerance.is_some() || c.relation == wedgelab::algebra_probes::Relation::Holds).count();
        println!("{name}: {} ({asserted} asserted checks, {seconds:.1} s)", if passed { "PASS" } else { "FAIL" });
        for c in report.failed() {
            match c.tolerance {
                Some(t) => println!("  failed: {} = {:.3e} (tolerance {t:.1e})", c.name, c.value),
                None => println!("  failed: {}", c.name),
            }
        }
        if !passed {
            status = status.max(1);
        }
    }
    ExitCode::from(status)
}
