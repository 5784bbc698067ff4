use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use masr::config::{RunConfig, SweepAxis, SweepSection};
use masr::runner::{execute_all, jobs, verify_record, RunRecord};
use masr::{output, Result};

#[derive(Parser)]
#[command(version, about = "Robust transmission design for movable-antenna RIS symbiotic radio")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize every configured scheme and seed at the base parameters.
    Run(RunArgs),
    /// Repeat the runs for each value of one parameter.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// power_dbm, g_u, g_bs, antennas, ris_elements or primary_users.
        #[arg(long)]
        axis: Option<SweepAxis>,
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Re-check stored designs against freshly synthesized channels.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        /// A trace file or a results directory.
        path: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Print the default configuration as TOML.
    Defaults,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// psr or csr.
    #[arg(long)]
    scenario: Option<String>,
    /// proposed-sapso, proposed-pso, fpa or random-psi; repeatable.
    #[arg(long, value_delimiter = ',')]
    scheme: Vec<String>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    verify_samples: Option<usize>,
    /// Retry infeasible runs once with both SNR thresholds halved.
    #[arg(long)]
    gamma_halving_retry: bool,
}

fn load(path: Option<&Path>) -> Result<RunConfig> {
    path.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut c = load(self.config.as_deref())?;
        if !self.seed.is_empty() {
            c.run.seeds = self.seed.clone();
        }
        if let Some(s) = &self.scenario {
            c.system.scenario = s.clone();
        }
        if !self.scheme.is_empty() {
            c.run.schemes = self.scheme.clone();
        }
        if let Some(out) = &self.out {
            c.run.output = out.to_string_lossy().into_owned();
        }
        if let Some(w) = self.workers {
            c.run.workers = w;
        }
        if let Some(n) = self.verify_samples {
            c.run.verify_samples = n;
        }
        c.run.gamma_halving_retry |= self.gamma_halving_retry;
        Ok(c)
    }
}

fn run(config: RunConfig) -> Result<bool> {
    config.validate()?;
    let jobs = jobs(&config)?;
    eprintln!("{} runs on {} worker(s)", jobs.len(), if config.run.workers == 0 { "all".into() } else { config.run.workers.to_string() });
    let records = execute_all(&jobs, config.run.workers, config.run.verify_samples, config.run.gamma_halving_retry)?;
    let dir = PathBuf::from(&config.run.output);
    output::write_results(&dir, &records)?;
    std::fs::write(dir.join("config.toml"), config.to_toml()?)?;
    print!("{}", output::summary(&records));
    report_failures(&records);
    eprintln!("results written to {}", dir.display());
    Ok(records.iter().all(RunRecord::feasible))
}

fn report_failures(records: &[RunRecord]) {
    for r in records.iter().filter(|r| !r.feasible()) {
        let why = r.error.clone().unwrap_or_else(|| "robustness check failed".into());
        eprintln!("failed: {}: {why}", r.stem());
    }
}

fn verify(config: Option<&Path>, path: &Path, samples: usize) -> Result<bool> {
    let default_config = path.join("config.toml");
    let config = match config {
        Some(p) => RunConfig::load(p)?,
        None if default_config.is_file() => RunConfig::load(&default_config)?,
        None => RunConfig::default(),
    };
    let mut all = true;
    for file in output::trace_files(path)? {
        let record = output::read_trace(&file)?;
        if record.design.is_none() {
            println!("{}: no design ({})", record.stem(), record.error.as_deref().unwrap_or("unknown"));
            all = false;
            continue;
        }
        let v = verify_record(&config, &record, samples)?;
        println!(
            "{}: {} rate {:.6} (stored {:.6}) power {} spacing {} region {} sampled min {:.6} violations {}/{}",
            record.stem(),
            if v.passed() { "ok" } else { "FAIL" },
            v.recomputed_rate,
            record.rate_bpshz,
            v.power_ok,
            v.spacing_ok,
            v.in_region,
            v.robustness.min_sampled_rate,
            v.robustness.violations,
            v.robustness.samples,
        );
        all &= v.passed();
    }
    Ok(all)
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run(args) => {
            let mut c = args.config()?;
            c.sweep = None;
            run(c)
        }
        Command::Sweep { run: args, axis, values } => {
            let mut c = args.config()?;
            match (axis, values.is_empty()) {
                (Some(axis), false) => c.sweep = Some(SweepSection { axis, values }),
                (None, true) if c.sweep.is_some() => {}
                _ => return Err(masr::Error::Config("sweep needs --axis and --values, or a [sweep] section".into())),
            }
            run(c)
        }
        Command::Verify { config, path, samples } => verify(config.as_deref(), &path, samples),
        Command::Defaults => {
            print!("{}", RunConfig::default().to_toml()?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
