mod config;
mod dataset;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use mbrb::engine::{fidelity_points, run_protocol};
use mbrb::exact::exact_sequence_fidelity;
use mbrb::fit::{bootstrap_ci, fit_decay, DecayFit};
use serde::Serialize;

use config::{ExperimentConfig, VerifyToggles};
use dataset::{provenance, read_dataset, render_dataset, write_file, TOOLKIT};

/// Error classes mapped onto exit codes.
#[derive(Debug)]
pub enum Failure {
    Validation(anyhow::Error),
    Io(anyhow::Error),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Io(_) => 2,
        }
    }
}

impl From<mbrb::Error> for Failure {
    fn from(e: mbrb::Error) -> Self {
        Failure::Validation(e.into())
    }
}

#[derive(Parser)]
#[command(name = "mbrb", version, about = "Randomized benchmarking on simulated linear cluster wires")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Experiment config (TOML)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override the config seed
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output path
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check the angle table, the design rotations, both 2-designs and the byproduct formulas
    Verify {
        #[arg(long, hide = true)]
        hook_pauli_design: bool,
        #[arg(long, hide = true)]
        hook_corrupt_table: bool,
    },
    /// Simulate the configured protocol and write a dataset
    Run,
    /// Fit the decay model to a dataset; writes a report and a decay table
    Fit {
        /// Dataset file (default: the config's output.dataset)
        dataset: Option<PathBuf>,
        /// Decay table path (default: next to the dataset)
        #[arg(long, value_name = "PATH")]
        table: Option<PathBuf>,
    },
    /// Exact sequence fidelities by enumeration, for small lengths
    Oracle {
        /// Comma-separated lengths overriding the config
        #[arg(long, value_delimiter = ',')]
        lengths: Option<Vec<usize>>,
    },
}

struct Ctx {
    quiet: bool,
}

impl Ctx {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }
}

fn load_config(global: &GlobalArgs) -> Result<ExperimentConfig, Failure> {
    let path = global.config.as_deref().ok_or_else(|| Failure::Validation(anyhow::anyhow!("--config is required")))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = global.seed {
        cfg.seed = seed;
        cfg.to_rb_config().map_err(Failure::Validation)?;
    }
    Ok(cfg)
}

fn cmd_verify(global: &GlobalArgs, ctx: &Ctx, hooks: verify::Hooks) -> Result<(), Failure> {
    let toggles = match &global.config {
        Some(_) => load_config(global)?.verify,
        None => VerifyToggles::default(),
    };
    let checks = verify::run_checks(toggles, hooks);
    let mut report = format!("# {TOOLKIT} verification\n");
    for c in &checks {
        report.push_str(&format!("[{}] {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
    }
    ctx.say(report.trim_end());
    if let Some(out) = &global.out {
        write_file(out, report.as_bytes())?;
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Validation(anyhow::anyhow!("verification failed: {}", failed.join(", "))))
    }
}

fn cmd_run(global: &GlobalArgs, ctx: &Ctx) -> Result<(), Failure> {
    let cfg = load_config(global)?;
    let rb = cfg.to_rb_config().map_err(Failure::Validation)?;
    let out = global.out.clone().or_else(|| cfg.output.dataset.clone()).unwrap_or_else(|| PathBuf::from("dataset.csv"));
    let ds = run_protocol(&rb)?;
    for w in &ds.warnings {
        eprintln!("warning: {w}");
    }
    let bytes = render_dataset(&cfg, &ds).map_err(Failure::Io)?;
    write_file(&out, &bytes)?;
    ctx.say(format!(
        "{}: {} records over {} lengths -> {}",
        rb.protocol.name(),
        ds.records.len(),
        ds.lengths().len(),
        out.display()
    ));
    Ok(())
}

#[derive(Serialize)]
struct FitSection {
    a0: f64,
    b0: f64,
    p: f64,
    avg_fidelity: f64,
    residual_norm: f64,
    ci_p: [f64; 2],
    bootstrap_resamples: usize,
    degenerate: bool,
    p_at_bound: bool,
    iterations: usize,
}

#[derive(Serialize)]
struct FitReport<'a> {
    toolkit: &'a str,
    protocol: &'a str,
    seed: u64,
    warnings: &'a [String],
    fit: FitSection,
    config: &'a ExperimentConfig,
}

fn derived_path(base: &Path, suffix: &str) -> PathBuf {
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "dataset".into());
    base.with_file_name(format!("{stem}.{suffix}"))
}

fn cmd_fit(global: &GlobalArgs, ctx: &Ctx, dataset: Option<PathBuf>, table: Option<PathBuf>) -> Result<(), Failure> {
    let path = match dataset {
        Some(p) => p,
        None => load_config(global)?
            .output
            .dataset
            .ok_or_else(|| Failure::Validation(anyhow::anyhow!("no dataset given and none in the config")))?,
    };
    let loaded = read_dataset(&path)?;
    let cfg = &loaded.config;
    let points = fidelity_points(&loaded.dataset);
    let fit: DecayFit = fit_decay(&points)?;
    let ci = bootstrap_ci(&loaded.dataset, cfg.bootstrap_resamples, cfg.seed)?;

    let report_path =
        global.out.clone().or_else(|| cfg.output.report.clone()).unwrap_or_else(|| derived_path(&path, "fit.toml"));
    let table_path = table.or_else(|| cfg.output.table.clone()).unwrap_or_else(|| derived_path(&path, "decay.csv"));

    let report = FitReport {
        toolkit: TOOLKIT,
        protocol: loaded.dataset.config.protocol.name(),
        seed: cfg.seed,
        warnings: &loaded.dataset.warnings,
        fit: FitSection {
            a0: fit.a0,
            b0: fit.b0,
            p: fit.p,
            avg_fidelity: fit.avg_fidelity,
            residual_norm: fit.residual_norm,
            ci_p: [ci.0, ci.1],
            bootstrap_resamples: cfg.bootstrap_resamples,
            degenerate: fit.degenerate,
            p_at_bound: fit.p_at_bound,
            iterations: fit.iterations,
        },
        config: cfg,
    };
    let text = toml::to_string(&report).context("serializing fit report").map_err(Failure::Io)?;
    write_file(&report_path, text.as_bytes())?;

    let mut rows = provenance("decay table", cfg, &loaded.dataset.warnings).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut rows);
        w.write_record(["s", "mean", "stderr", "model"]).map_err(|e| Failure::Io(e.into()))?;
        for pt in &points {
            let model = fit.a0 * fit.p.powi(pt.length as i32) + fit.b0;
            w.write_record([pt.length.to_string(), pt.mean.to_string(), pt.stderr.to_string(), model.to_string()])
                .map_err(|e| Failure::Io(e.into()))?;
        }
        w.flush().map_err(|e| Failure::Io(e.into()))?;
    }
    write_file(&table_path, &rows)?;

    ctx.say(format!(
        "p = {:.6} [{:.6}, {:.6}], average fidelity {:.6}{} -> {}, {}",
        fit.p,
        ci.0,
        ci.1,
        fit.avg_fidelity,
        if fit.degenerate { " (degenerate)" } else { "" },
        report_path.display(),
        table_path.display()
    ));
    Ok(())
}

fn cmd_oracle(global: &GlobalArgs, ctx: &Ctx, lengths: Option<Vec<usize>>) -> Result<(), Failure> {
    let mut cfg = load_config(global)?;
    if let Some(l) = lengths {
        cfg.lengths = l;
    }
    let rb = cfg.to_rb_config().map_err(Failure::Validation)?;
    let mut out = provenance("exact oracle", &cfg, &rb.warnings()).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["s", "enumerated", "analytic", "deviation"]).map_err(|e| Failure::Io(e.into()))?;
        for &s in &rb.lengths {
            let e = exact_sequence_fidelity(&rb, s)?;
            w.write_record([
                s.to_string(),
                e.enumerated.to_string(),
                e.analytic.to_string(),
                e.deviation().to_string(),
            ])
            .map_err(|e| Failure::Io(e.into()))?;
        }
        w.flush().map_err(|e| Failure::Io(e.into()))?;
    }
    match &global.out {
        Some(path) => {
            write_file(path, &out)?;
            ctx.say(format!("{} lengths -> {}", rb.lengths.len(), path.display()));
        }
        None => print!("{}", String::from_utf8_lossy(&out)),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Ctx { quiet: cli.global.quiet };
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Verify { hook_pauli_design, hook_corrupt_table } => cmd_verify(
            &cli.global,
            &ctx,
            verify::Hooks { pauli_as_design: hook_pauli_design, corrupt_table: hook_corrupt_table },
        ),
        Command::Run => cmd_run(&cli.global, &ctx),
        Command::Fit { dataset, table } => cmd_fit(&cli.global, &ctx, dataset, table),
        Command::Oracle { lengths } => cmd_oracle(&cli.global, &ctx, lengths),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Validation(e) | Failure::Io(e)) = &f;
            eprintln!("error: {e:#}");
            ExitCode::from(f.exit_code())
        }
    }
}
