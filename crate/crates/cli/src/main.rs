use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wrse_cli::commands::{eval, generate, importance, sweep, train};
use wrse_cli::{CliResult, Experiment, Overrides};

/// Weighted resolution survival ensembles: cohorts, training, evaluation,
/// sweeps and feature importance.
///
/// Exit codes: 1 runtime failure, 2 invalid configuration, 3 invalid data.
#[derive(Parser)]
#[command(name = "wrse", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic cohort as dataset files.
    Generate(Common),
    /// Train the configured models on every split.
    Train(Common),
    /// Evaluate trained models on the test part of every split.
    Eval(Common),
    /// Train and evaluate a grid of WRSE variants.
    Sweep(Common),
    /// Permutation feature importance of the trained WRSE models.
    Importance(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; overrides runtime.workers.
    #[arg(long)]
    workers: Option<usize>,
    /// Master seed; overrides runtime.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides runtime.output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> CliResult<Experiment> {
        let overrides = Overrides {
            workers: self.workers,
            seed: self.seed,
            out: self.out.clone(),
        };
        Experiment::load(&self.config, &overrides)
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Generate(c) => {
            let exp = c.load()?;
            let s = generate::run(&exp)?;
            println!("{s}");
            println!("wrote {}", exp.output_dir.display());
        }
        Command::Train(c) => {
            let exp = c.load()?;
            let t = train::run(&exp)?;
            for s in &t.splits {
                let fmt = |v: Option<f64>| v.map_or_else(|| "-".into(), |x| format!("{x:.2}s"));
                println!(
                    "split {}: wrse {} (sequential {}), parametric {}",
                    s.split,
                    fmt(s.wrse_seconds),
                    fmt(s.wrse_sequential_seconds),
                    fmt(s.parametric_seconds)
                );
            }
        }
        Command::Eval(c) => {
            let exp = c.load()?;
            let s = eval::run(&exp)?;
            for m in &s.models {
                for w in &m.aggregate.weighted {
                    println!(
                        "{:<24} gamma {:<4} C^td,w {:.4} ± {:.4}  Cal^w {:.4} ± {:.4}",
                        m.model, w.gamma, w.ctd_w.mean, w.ctd_w.se, w.cal_w.mean, w.cal_w.se
                    );
                }
            }
        }
        Command::Sweep(c) => {
            let exp = c.load()?;
            let s = sweep::run(&exp)?;
            println!("{} cells ({} resumed from checkpoints)", s.rows.len(), s.resumed);
        }
        Command::Importance(c) => {
            let exp = c.load()?;
            let s = importance::run(&exp)?;
            for g in &s.summary {
                let top: Vec<String> = g
                    .features
                    .iter()
                    .map(|f| format!("f{} {:.4}±{:.4}", f.feature, f.mean, f.std))
                    .collect();
                println!("gamma {}: {}", g.gamma, top.join(", "));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
