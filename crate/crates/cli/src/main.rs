use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use effort_fs_cli::{cmd_curves, cmd_preprocess, cmd_run, RunConfig};

#[derive(Parser)]
#[command(version, about = "Feature selection experiments for effort estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean the input table and write it with a preprocessing report
    Preprocess(Common),
    /// Run every selected method and write the comparison tables
    Run(Common),
    /// Tabulate the two MSE-to-reward transforms and their derivatives
    Curves(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config; defaults apply to anything it leaves out
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override every seed in the config
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated methods, e.g. MARLFS,Expert,raw-RF,Filter,Wrapper-10
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
}

impl Common {
    fn resolve(&self) -> Result<(RunConfig, PathBuf)> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.set_seed(seed);
        }
        if let Some(m) = &self.methods {
            cfg.methods = m.clone();
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        let out = cfg.out_dir.clone();
        Ok((cfg, out))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Preprocess(c) => {
            let (cfg, out) = c.resolve()?;
            let r = cmd_preprocess(&cfg, &out)?;
            println!(
                "{} rows x {} features; dropped {} columns, {} rows -> {}",
                r.rows,
                r.features,
                r.dropped_columns.len(),
                r.dropped_rows.len(),
                out.display()
            );
        }
        Command::Run(c) => {
            let (cfg, out) = c.resolve()?;
            let r = cmd_run(&cfg, &out)?;
            for m in &r.methods {
                println!("{:<12} mse {:>12.4}  mae {:>8.4}", m.method, m.mse, m.mae);
            }
            println!("report written to {}", out.join("report.json").display());
        }
        Command::Curves(c) => {
            let (cfg, out) = c.resolve()?;
            let n = cmd_curves(&cfg, &out)?;
            println!("{n} rows -> {}", out.join("curves.csv").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
