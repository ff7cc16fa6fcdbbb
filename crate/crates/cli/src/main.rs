use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use robust_design_cli::{execute, CliError, Mode, RunConfig};

#[derive(Debug, Parser)]
#[command(version, about = "Control-variable selection and robust parameter design")]
struct Args {
    /// Run config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory [default: the config's `output`, else ./out].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config mode.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Worker threads [default: all cores].
    #[arg(long)]
    jobs: Option<usize>,
}

fn load(args: &Args) -> Result<(RunConfig, PathBuf), CliError> {
    let mut cfg = RunConfig::from_file(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    if args.jobs.is_some() {
        cfg.jobs = args.jobs;
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok((cfg, out))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let result = load(&args).and_then(|(cfg, out)| execute(&cfg, &out).map(|e| (e, out)));
    match result {
        Ok((e, out)) => {
            eprintln!("wrote {} files to {} in {:.2?}", e.artifacts.len(), out.display(), e.elapsed);
            ExitCode::SUCCESS
        }
        Err(e) => {
            let record = serde_json::to_string(&e.record()).expect("error record serializes");
            eprintln!("{record}");
            ExitCode::from(e.status() as u8)
        }
    }
}
