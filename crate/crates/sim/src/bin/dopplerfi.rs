use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dopplerfi::config::ExperimentConfig;
use dopplerfi::experiment::Scenario;
use dopplerfi::metrics::Metrics;
use dopplerfi::{export, legacy, sweep, trace, Direction, Error, Result};

#[derive(Parser)]
#[command(name = "dopplerfi", version, about = "Artificial-Doppler side-channel experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment file (TOML). Built-in defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the configured trial count.
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Trials at the first grid point; per-trial table and the DSK log of trial 0.
    Run(Common),
    /// Every grid point of the configuration.
    Sweep(Common),
    /// Legacy packet loss for the shifts in the `[legacy]` section.
    LegacyImpact(Common),
    /// Demodulator, CSI and IQ traces for one channel.
    Trace(Common),
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        cfg.validate()?;
        std::fs::create_dir_all(&self.out).map_err(|source| Error::Io { path: self.out.clone(), source })?;
        Ok(cfg)
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_owned(), source })
}

fn run(c: &Common) -> Result<()> {
    let cfg = c.load()?;
    let point = sweep::grid(&cfg)[0];
    if !matches!(cfg.direction, Direction::W2b | Direction::B2w) {
        let row = sweep::run_point(&cfg, point)?;
        export::write_sweep(&c.out.join("run.csv"), std::slice::from_ref(&row))?;
        println!(
            "{}: per {:.5} loss {:.5} over {} packets",
            row.direction,
            row.legacy_per.unwrap_or(f64::NAN),
            row.legacy_throughput_loss.unwrap_or(f64::NAN),
            row.legacy_packets.unwrap_or(0)
        );
        return Ok(());
    }
    let sc = Scenario::new(&cfg, point)?;
    let records = sc.run_trials(cfg.trials)?;
    let m = Metrics::from_records(&records);
    export::write_trials(&c.out.join("trials.csv"), &records)?;
    export::write_emitted_log(&c.out.join("emitted_log.csv"), &records[0].log)?;
    export::write_sweep(&c.out.join("run.csv"), &[sweep::side_channel_row(&sc, &m)])?;
    println!(
        "{}: ber {:.5} ± {:.5} ({} of {} bits), frames {}/{}, throughput {:.1} bps",
        sc.direction.name(),
        m.ber,
        m.ber_ci95,
        m.bit_errors,
        m.bits,
        m.frames_ok,
        m.frames,
        m.throughput_bps
    );
    Ok(())
}

fn run_sweep(c: &Common) -> Result<()> {
    let cfg = c.load()?;
    let rows = sweep::sweep(&cfg)?;
    export::write_sweep(&c.out.join("sweep.csv"), &rows)?;
    write_text(&c.out.join("plot_sweep.gp"), &export::sweep_plot_script("sweep.csv"))?;
    println!("{} rows written to {}", rows.len(), c.out.join("sweep.csv").display());
    Ok(())
}

fn run_legacy(c: &Common) -> Result<()> {
    let cfg = c.load()?;
    let rows = legacy::legacy_impact(&cfg)?;
    export::write_legacy(&c.out.join("legacy_impact.csv"), &rows)?;
    for r in &rows {
        println!("{:>4} {:>6.1} kHz: loss {:.5} ± {:.5}", r.kind.name(), r.shift_khz, r.legacy_throughput_loss, r.loss_ci95);
    }
    Ok(())
}

fn run_trace(c: &Common) -> Result<()> {
    let cfg = c.load()?;
    for p in trace::write_traces(&cfg, &c.out)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => run(c),
        Command::Sweep(c) => run_sweep(c),
        Command::LegacyImpact(c) => run_legacy(c),
        Command::Trace(c) => run_trace(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
