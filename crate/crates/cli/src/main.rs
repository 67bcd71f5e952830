use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mumimo::config::{validate_config, RunConfig, ValidatedConfig};
use mumimo::engine::Engine;
use mumimo::report;

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "mumimo",
    version,
    about = "Massive MU-MIMO uplink BER simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a BER sweep and write results.csv, curve files and a plot script.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override a config field, e.g. `--set master_seed=7` or
        /// `--set stopping.max_bits=1000000`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Worker threads (0 = all cores). Results do not depend on it.
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Exact log-det sum rate against its favorable-propagation approximation.
    Capacity {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Favorable-propagation deviation statistics for i.i.d. Rayleigh channels.
    Diagnose {
        #[arg(long = "M", value_delimiter = ',', required = true)]
        antennas: Vec<usize>,
        #[arg(long = "K")]
        users: usize,
        #[arg(long)]
        realizations: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Use exactly orthogonal channel columns instead of Rayleigh draws.
        #[arg(long)]
        orthogonal: bool,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Self {
            code: EXIT_IO,
            message: format!("{}: {e}", path.display()),
        }
    }
}

fn load_config(path: &Path, overrides: &[String]) -> Result<ValidatedConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg = RunConfig::from_json(&text).map_err(|e| Failure::config(e.to_string()))?;
    for o in overrides {
        cfg = cfg
            .with_override(o)
            .map_err(|e| Failure::config(e.to_string()))?;
    }
    validate_config(cfg).map_err(|report| Failure::config(report.to_string()))
}

fn write_files(out: &Path, files: &[(String, String)]) -> Result<(), Failure> {
    fs::create_dir_all(out).map_err(|e| Failure::io(out, e))?;
    for (name, contents) in files {
        let path = out.join(name);
        fs::write(&path, contents).map_err(|e| Failure::io(&path, e))?;
    }
    Ok(())
}

fn simulate(
    config: &Path,
    out: &Path,
    overrides: &[String],
    workers: usize,
) -> Result<u8, Failure> {
    let cfg = load_config(config, overrides)?;
    let engine = Engine::new(workers);
    let sweep = engine.run_sweep_with_progress(&cfg, |p| {
        eprintln!(
            "{} M={} Eb/N0={} dB: BER {:.4e} ({} errors / {} bits)",
            p.receiver, p.antennas, p.ebno_db, p.ber, p.errors, p.bits
        );
    });
    let bundle = report::simulation_bundle(&sweep);
    let mut files = bundle.files;
    let mut failed = !sweep.failures.is_empty();
    if let Some(ps) = cfg.power_scaling.filter(|p| p.enabled) {
        let scaled = engine.run_power_scaling(&cfg, ps.reference_power, &cfg.antenna_list);
        failed |= !scaled.failures.is_empty();
        files.push(("power_scaling.csv".into(), report::results_csv(&scaled)));
        print!(
            "power scaling, rho = {}/M\n{}",
            ps.reference_power,
            report::summary(&scaled)
        );
    }
    write_files(out, &files)?;
    print!("{}", bundle.summary);
    Ok(if failed { EXIT_PARTIAL } else { 0 })
}

fn capacity(config: &Path, out: &Path) -> Result<u8, Failure> {
    let cfg = load_config(config, &[])?;
    let rows = report::capacity_rows(&cfg);
    write_files(out, &[("capacity.csv".into(), report::capacity_csv(&rows))])?;
    println!(
        "{:>6} {:>4} {:>12} {:>12} {:>12} {:>10}",
        "M", "K", "rho", "exact", "approx", "rel_err"
    );
    for r in &rows {
        println!(
            "{:>6} {:>4} {:>12.4e} {:>12.4} {:>12.4} {:>10.3e}",
            r.antennas, r.users, r.rho, r.exact, r.approx, r.rel_err
        );
    }
    if let Some(r) = rows.first() {
        println!("averaged over {} realizations per row", r.realizations);
    }
    Ok(0)
}

fn diagnose(
    antennas: &[usize],
    users: usize,
    realizations: usize,
    seed: u64,
    out: &Path,
    orthogonal: bool,
) -> Result<u8, Failure> {
    if realizations == 0 || users == 0 || antennas.contains(&0) {
        return Err(Failure::config(
            "realizations, K and every M must be at least 1",
        ));
    }
    if orthogonal && antennas.iter().any(|&m| m < users) {
        return Err(Failure::config("orthogonal columns need M >= K"));
    }
    let rows = report::favorable_rows(antennas, users, realizations, seed, orthogonal)
        .map_err(|e| Failure::config(e.to_string()))?;
    write_files(
        out,
        &[("favorable.csv".into(), report::favorable_csv(&rows))],
    )?;
    for r in &rows {
        println!(
            "M={:<6} K={:<4} mean_eps={:.5e} std_eps={:.5e}",
            r.antennas, r.users, r.mean_eps, r.std_eps
        );
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate {
            config,
            out,
            overrides,
            workers,
        } => simulate(config, out, overrides, *workers),
        Command::Capacity { config, out } => capacity(config, out),
        Command::Diagnose {
            antennas,
            users,
            realizations,
            seed,
            out,
            orthogonal,
        } => diagnose(antennas, *users, *realizations, *seed, out, *orthogonal),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
