use clap::Parser;
use modlab::config::{BranchArg, Format};
use modlab::{parse_config, parse_list, CliError, Command, Overrides};
use std::path::PathBuf;
use std::process::ExitCode;

/// Periodic traveling waves, Whitham modulation systems and
/// modulational-instability indices for Korteweg-type models.
#[derive(Debug, Parser)]
#[command(name = "modlab", version)]
struct Args {
    command: Command,
    #[arg(long)]
    config: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    /// `X` or `X,Y`.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// `a:b:n`, geometric from `a` to `b`.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, value_enum)]
    branch: Option<BranchArg>,
    #[arg(long)]
    quad_order: Option<usize>,
    #[arg(long)]
    precision: Option<usize>,
    /// Worker threads; `MODLAB_THREADS` takes precedence.
    #[arg(long)]
    threads: Option<usize>,
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    match std::env::var("MODLAB_THREADS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("MODLAB_THREADS={s:?} is not a positive integer"))),
        },
        Err(_) => Ok(flag),
    }
}

fn run(args: Args) -> Result<(), CliError> {
    if let Some(n) = threads(args.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let text = std::fs::read_to_string(&args.config)?;
    let (mut cfg, model) = parse_config(&text)?;
    let ov = Overrides {
        mu: args.mu,
        c: args.c,
        lambda: args.lambda.as_deref().map(parse_list).transpose()?,
        grid: args.grid,
        branch: args.branch,
        quad_order: args.quad_order,
        precision: args.precision,
        format: args.format,
        out: args.out.map(|p| p.display().to_string()),
    };
    ov.apply(&mut cfg)?;
    let out = modlab::execute(args.command, &cfg, &model, &ov)?;
    match &cfg.output.path {
        Some(p) => {
            std::fs::write(p, &out.primary)?;
            if let Some(s) = &out.sidecar {
                std::fs::write(format!("{p}.fit.json"), s)?;
            }
        }
        None => {
            print!("{}", out.primary);
            if let Some(s) = &out.sidecar {
                eprint!("{s}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
