use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::bail;
use clap::{Args, Parser, Subcommand};
use otoc_lab::{commands, config, exit, exit_code_for, regression, ConfigError};

#[derive(Parser, Debug)]
#[command(name = "otoc-lab", version, about = "Light-cone bound experiments on long-range spin lattices")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for grid parallelism; defaults to all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Shrink C0 by FACTOR (default from the config) to probe how tight the checks are.
    #[arg(long, global = true, num_args = 0..=1, value_name = "FACTOR")]
    sensitivity: Option<Option<f64>>,
    /// Suppress timestamps so every output is reproducible byte for byte.
    #[arg(long, global = true)]
    test_mode: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Lattice certificates (gamma, lambda) and shell tables.
    LatticeInfo,
    /// Interaction certificate and derived constants of the model.
    ModelCheck,
    /// OTOC grid C(R, t).
    Otoc,
    /// Measured errors against the rigorous right-hand sides.
    BoundCheck,
    /// String-sum audits, graph counts, decompositions, series consistency.
    ClusterAudit,
    /// Front extraction, exponent fit and cone containment.
    Fit,
    /// Runs whichever command the config names.
    Run,
    /// Re-executes the golden suite.
    Regression {
        #[arg(long)]
        suite: Option<PathBuf>,
        /// Only cases of this module.
        #[arg(long)]
        module: Option<String>,
        /// Regenerate the goldens instead of comparing against them.
        #[arg(long)]
        bless: bool,
    },
}

impl Command {
    fn config_name(&self) -> Option<&'static str> {
        Some(match self {
            Command::LatticeInfo => "lattice_info",
            Command::ModelCheck => "model_check",
            Command::Otoc => "otoc",
            Command::BoundCheck => "bound_check",
            Command::ClusterAudit => "cluster_audit",
            Command::Fit => "fit",
            Command::Run | Command::Regression { .. } => return None,
        })
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match real_main(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code_for(&e)
        }
    };
    ExitCode::from(code as u8)
}

fn real_main(cli: Cli) -> anyhow::Result<i32> {
    let g = cli.global;
    if let Some(w) = g.workers {
        if w == 0 {
            bail!(ConfigError("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(w).build_global()?;
    }
    if let Command::Regression { suite, module, bless } = &cli.command {
        let suite = suite.clone().unwrap_or_else(regression::default_suite);
        let out = g.out.clone().unwrap_or_else(|| PathBuf::from("out/regression"));
        let work = out.join("runs");
        if *bless {
            let s = regression::bless(&suite, module.as_deref(), &work)?;
            println!("blessed {} cases in {}", s.cases.len(), suite.display());
            return Ok(exit::OK);
        }
        let report = regression::run_suite(&suite, module.as_deref(), &work)?;
        let text = report.to_text();
        std::fs::write(out.join("regression.txt"), &text)?;
        std::fs::write(out.join("regression.json"), serde_json::to_vec_pretty(&report)?)?;
        print!("{text}");
        return Ok(if report.ok() { exit::OK } else { exit::VIOLATION });
    }
    let Some(path) = g.config else {
        bail!(ConfigError("--config is required".into()));
    };
    let loaded = config::load(&path)?;
    let named = loaded.config.experiment.command();
    if let Some(want) = cli.command.config_name() {
        if want != named {
            bail!(ConfigError(format!("config describes a {named} run, not {want}")));
        }
    }
    let report = commands::run(
        &loaded,
        &commands::RunOptions {
            seed: g.seed,
            out: g.out,
            sensitivity: g.sensitivity,
            test_mode: g.test_mode,
        },
    )?;
    println!(
        "{named}: wrote {} files to {} ({} violations)",
        report.manifest.files.len() + 1,
        report.out_dir.display(),
        report.violations
    );
    Ok(if report.violations > 0 { exit::VIOLATION } else { exit::OK })
}
