use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use manetsim_core::harness::matrix::{aggregate, run_sweep, write_cells, Preset, Sweep};
use manetsim_core::harness::run::{read_rows, write_rows};
use manetsim_core::harness::sweep::{load_params, sweep, write_sweep};
use manetsim_core::harness::verdict::verdict;
use manetsim_core::harness::{run_with_log, ConfigError, Scenario};
use manetsim_core::routing::ErsSchedule;

#[derive(Parser, Debug)]
#[command(name = "manetsim", version, about = "Reactive MANET routing simulator")]
struct Cli {
    /// Write a per-event trace of the `simulate` run to this file.
    #[arg(long, global = true, value_name = "PATH")]
    event_log: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario and print its CSV row.
    Simulate {
        config: PathBuf,
        /// Write the row here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a preset (mobility, scalability, traffic) or every protocol on a config file.
    Matrix {
        source: String,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the cost model for a parameter file, one row per ring count.
    Analytic {
        params: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the directional trend claims against a per-run CSV.
    Verdict { csv: PathBuf },
}

enum Failure {
    Config(String),
    Verdict,
    Other(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Other(format!("cannot create {}: {e}", path.display())))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn cells_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("matrix");
    out.with_file_name(format!("{stem}_cells.csv"))
}

fn simulate(config: &Path, out: Option<&Path>, event_log: Option<&Path>) -> Result<(), Failure> {
    let sc = Scenario::load(config)?;
    let log: Option<Box<dyn Write>> = match event_log {
        Some(p) => Some(Box::new(create(p)?)),
        None => None,
    };
    let res = run_with_log(&sc, log)?;
    write_rows(output(out)?, &[res.row])?;
    let r = &res.report;
    eprintln!(
        "{}: delivered {}/{} packets, T_avg {:.1} b/s (plain {:.1}), p_nr {:.3}, violations {}",
        sc.id(),
        res.stats.data_delivered,
        res.stats.data_originated,
        r.t_avg,
        r.t_avg_plain,
        r.p_nr,
        r.violations
            .iter()
            .map(|v| format!("{}={}", v.id, v.count))
            .collect::<Vec<_>>()
            .join(" ")
    );
    Ok(())
}

fn matrix(source: &str, seeds: u64, out: &Path) -> Result<(), Failure> {
    if seeds == 0 {
        return Err(Failure::Config("--seeds must be at least 1".into()));
    }
    let sweep = match source.parse::<Preset>() {
        Ok(p) => Sweep::preset(p),
        Err(_) => {
            let path = Path::new(source);
            if !path.exists() {
                return Err(Failure::Config(format!(
                    "`{source}` is neither a preset (mobility, scalability, traffic) nor a config file"
                )));
            }
            let base = Scenario::load(path)?;
            let label = path.file_stem().and_then(|s| s.to_str()).unwrap_or("config");
            Sweep::from_scenario(label, &base)
        }
    };
    let rows = run_sweep(&sweep, seeds)?;
    write_rows(create(out)?, &rows)?;
    let cells = cells_path(out);
    write_cells(create(&cells)?, &aggregate(&rows))?;
    eprintln!("{} runs -> {}, cells -> {}", rows.len(), out.display(), cells.display());
    Ok(())
}

fn analytic(params: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let p = load_params(params)?;
    write_sweep(output(out)?, &sweep(&p, &ErsSchedule::default()))?;
    Ok(())
}

fn run_verdict(csv_path: &Path) -> Result<(), Failure> {
    let file = File::open(csv_path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", csv_path.display())))?;
    let rows = read_rows(file).map_err(|e| Failure::Config(format!("{}: {e}", csv_path.display())))?;
    let v = verdict(&rows);
    for r in &v.results {
        println!("{r}");
    }
    println!(
        "suite: {} of {} applicable claims hold, {} failed -> {}",
        v.passed,
        v.applicable,
        v.failed,
        if v.passes() { "PASS" } else { "FAIL" }
    );
    if v.passes() {
        Ok(())
    } else {
        Err(Failure::Verdict)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { config, out } => simulate(config, out.as_deref(), cli.event_log.as_deref()),
        Command::Matrix { source, seeds, out } => matrix(source, *seeds, out),
        Command::Analytic { params, out } => analytic(params, out.as_deref()),
        Command::Verdict { csv } => run_verdict(csv),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Verdict) => ExitCode::from(3),
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
