use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use bogofluct::experiment::{
    compare_coherent, fit_rows, read_rows, run_convergence, run_single, verify_algebra, write_rates, ExperimentConfig,
    Gate, DEFAULT_SIZES,
};

#[derive(Parser)]
#[command(name = "bogofluct", version, about = "Fluctuation dynamics around the Hartree mean field")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convergence experiment over the configured particle numbers.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` from the configuration.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Also write the full diagnostic time series for this particle number.
        #[arg(long)]
        single: Option<usize>,
    },
    /// Dense identity and inequality suite.
    VerifyAlgebra {
        /// Comma-separated `MxN` sizes, e.g. `2x3,3x3`.
        #[arg(long, value_delimiter = ',', value_parser = parse_size)]
        sizes: Vec<(usize, usize)>,
    },
    /// Projected against unprojected kernels from the same start.
    CompareCoherent {
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Smallest accepted gap at `rate_time` when the interaction is nonzero.
        #[arg(long, default_value_t = 1e-3)]
        min_gap: f64,
    },
    /// Refit the convergence rates of an existing report.
    Rate { report: PathBuf },
}

fn parse_size(s: &str) -> std::result::Result<(usize, usize), String> {
    let (m, n) = s.split_once('x').ok_or_else(|| format!("expected MxN, got {s}"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v}: {e}"));
    Ok((parse(m)?, parse(n)?))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn print_gates(gates: &[Gate]) -> bool {
    println!("{:<24} {:>14}  {:<22} result", "gate", "value", "limit");
    for g in gates {
        println!("{:<24} {:>14.6e}  {:<22} {}", g.name, g.value, g.limit, if g.pass { "PASS" } else { "FAIL" });
    }
    gates.iter().all(|g| g.pass)
}

fn prepare(config: &Path, output_dir: Option<PathBuf>) -> Result<(ExperimentConfig, PathBuf)> {
    let cfg = ExperimentConfig::load(config).with_context(|| format!("loading {}", config.display()))?;
    let dir = output_dir.unwrap_or_else(|| cfg.output_dir.clone());
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("config.resolved.json"), cfg.to_json()?)?;
    Ok((cfg, dir))
}

fn run(config: &Path, output_dir: Option<PathBuf>, single: Option<usize>) -> Result<bool> {
    let (cfg, dir) = prepare(config, output_dir)?;
    let out = run_convergence(&cfg)?;
    out.report.write_csv(create(&dir, "report.csv")?)?;
    out.report.write_rates_csv(create(&dir, "rates.csv")?)?;
    out.trajectory.write_csv(create(&dir, "hartree.csv")?)?;
    out.fluctuation.write_csv(create(&dir, "bogoliubov.csv")?)?;
    for (n, reason) in &out.report.failures {
        log::error!("N = {n} aborted: {reason}");
    }
    if let Some(rate) = out.report.rate_at(cfg.rate_time) {
        if let Some(fit) = &rate.fit {
            println!(
                "t = {}: slope {:.4} (95% band [{:.4}, {:.4}]), r2 {:.4}",
                rate.time, fit.slope, fit.band[0], fit.band[1], fit.r2
            );
        }
    }
    let gates = out.report.gates(&cfg);
    let mut gate_file = csv::Writer::from_writer(create(&dir, "gates.csv")?);
    for g in &gates {
        gate_file.serialize(g)?;
    }
    gate_file.flush()?;
    if let Some(n) = single {
        let s = run_single(&cfg, n)?;
        s.write_csv(create(&dir, &format!("single_n{n}.csv"))?)?;
        println!("single N = {n}: Gronwall constant {:.4}", s.gronwall_c);
    }
    Ok(print_gates(&gates))
}

fn verify(sizes: Vec<(usize, usize)>) -> Result<bool> {
    let sizes = if sizes.is_empty() { DEFAULT_SIZES.to_vec() } else { sizes };
    let report = verify_algebra(&sizes)?;
    print!("{}", report.table());
    Ok(report.passes())
}

fn coherent(config: &Path, output_dir: Option<PathBuf>, min_gap: f64) -> Result<bool> {
    let (cfg, dir) = prepare(config, output_dir)?;
    let cmp = compare_coherent(&cfg)?;
    cmp.write_csv(create(&dir, "coherent.csv")?)?;
    let Some(gap) = cmp.gap_at(cfg.rate_time) else {
        bail!("rate_time {} is not on the sampling grid", cfg.rate_time);
    };
    println!("gap at t = {}: {gap:.6e}", cfg.rate_time);
    Ok(cmp.passes(cfg.rate_time, min_gap))
}

fn rate(report: &Path) -> Result<bool> {
    let file = File::open(report).with_context(|| format!("opening {}", report.display()))?;
    let rows = read_rows(file)?;
    let rates = fit_rows(&rows);
    write_rates(&rates, std::io::stdout())?;
    Ok(!rates.is_empty() && rates.iter().all(|r| r.fit.is_some()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, output_dir, single } => run(&config, output_dir, single),
        Command::VerifyAlgebra { sizes } => verify(sizes),
        Command::CompareCoherent { config, output_dir, min_gap } => coherent(&config, output_dir, min_gap),
        Command::Rate { report } => rate(&report),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
