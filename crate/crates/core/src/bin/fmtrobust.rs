use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use format_robustness::grammar::{
    compositional_split, verify_compositional_split, FormatComponentCatalog,
};
use format_robustness::runner::{self, ExecuteOptions, ReportOptions, RunConfig};
use format_robustness::Error;

#[derive(Parser)]
#[command(
    name = "fmtrobust",
    version,
    about = "Prompt-format robustness experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the work units of a config and write plan.json.
    Plan(RunArgs),
    /// Execute (or resume) a run, appending JSONL records.
    Run(RunArgs),
    /// Build CSV and Markdown reports from run directories.
    Report {
        /// Run directories holding records.jsonl and failures.jsonl.
        #[arg(required_unless_present = "config")]
        runs: Vec<PathBuf>,
        /// Use the output directory of this config as the run directory.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Report directory (defaults to `<first run>/report`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = format_robustness::metrics::DEFAULT_ALPHA)]
        alpha: f64,
    },
    /// Show catalog sizes and optionally sample formats.
    Catalog {
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Number of formats to sample and print.
        #[arg(long, default_value_t = 0)]
        sample: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sample option-free formats.
        #[arg(long)]
        no_options: bool,
    },
    /// Sample formats and split them into seen and unseen combinations.
    Split {
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        no_options: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override the run seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    concurrency: Option<usize>,
    /// Keep existing results and run only missing units.
    #[arg(long)]
    resume: bool,
    /// Stop after this many units.
    #[arg(long)]
    max_units: Option<usize>,
}

fn load_config(args: &RunArgs) -> format_robustness::Result<RunConfig> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.output_dir = out.clone();
    }
    if let Some(c) = args.concurrency {
        config.concurrency = c;
    }
    config.validate()?;
    Ok(config)
}

fn plan_cmd(args: &RunArgs) -> format_robustness::Result<ExitCode> {
    let config = load_config(args)?;
    let catalog = FormatComponentCatalog::load(config.catalog.as_deref())?;
    let plan = runner::plan(&config, &catalog)?;
    std::fs::create_dir_all(&config.output_dir)?;
    let path = config.output_dir.join(runner::PLAN_FILE);
    std::fs::write(&path, serde_json::to_string_pretty(&plan)? + "\n")?;
    println!("plan {}", plan.fingerprint);
    println!(
        "{} models x {} tasks x {} methods: {} units",
        plan.models.len(),
        plan.tasks.len(),
        plan.methods.len(),
        plan.unit_count()
    );
    println!("written to {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn run_cmd(args: &RunArgs) -> format_robustness::Result<ExitCode> {
    let config = load_config(args)?;
    let catalog = FormatComponentCatalog::load(config.catalog.as_deref())?;
    let plan = runner::plan(&config, &catalog)?;
    let backends = config.build_backends()?;
    let options = ExecuteOptions {
        resume: args.resume,
        concurrency: config.concurrency,
        max_units: args.max_units,
    };
    let summary = runner::execute(&plan, &catalog, &backends, &config.output_dir, options)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(if summary.total_failures > 0 {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    })
}

fn report_cmd(
    runs: &[PathBuf],
    config: Option<&Path>,
    out: Option<&Path>,
    alpha: f64,
) -> format_robustness::Result<ExitCode> {
    let mut dirs: Vec<PathBuf> = runs.to_vec();
    if let Some(path) = config {
        dirs.push(RunConfig::load(path)?.output_dir);
    }
    let out = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| dirs[0].join("report"));
    let refs: Vec<&Path> = dirs.iter().map(PathBuf::as_path).collect();
    let bundle = runner::report_files(&refs, &ReportOptions { alpha })?;
    bundle.write(&out)?;
    println!("wrote {} files to {}", bundle.files.len(), out.display());
    for gap in &bundle.gaps {
        println!("gap: {gap}");
    }
    Ok(ExitCode::SUCCESS)
}

fn catalog_cmd(
    path: Option<&Path>,
    sample: usize,
    seed: u64,
    no_options: bool,
) -> format_robustness::Result<ExitCode> {
    let catalog = FormatComponentCatalog::load(path)?;
    println!("{}", serde_json::to_string_pretty(&catalog.sizes())?);
    println!(
        "formats with options: {}",
        catalog.format_universe_size(true)
    );
    println!(
        "formats without options: {}",
        catalog.format_universe_size(false)
    );
    for f in catalog.sample_formats(!no_options, sample, seed)? {
        println!("{} {}", f.fingerprint(&catalog)?, f.describe(&catalog)?);
    }
    Ok(ExitCode::SUCCESS)
}

fn split_cmd(
    path: Option<&Path>,
    n: usize,
    seed: u64,
    no_options: bool,
) -> format_robustness::Result<ExitCode> {
    let catalog = FormatComponentCatalog::load(path)?;
    let formats = catalog.sample_formats(!no_options, n, seed)?;
    let (train, test) = compositional_split(&formats, seed)?;
    for (side, list) in [("train", &train), ("test", &test)] {
        for f in list.iter() {
            println!(
                "{side} {} {}",
                f.fingerprint(&catalog)?,
                f.describe(&catalog)?
            );
        }
    }
    match verify_compositional_split(&train, &test) {
        Ok(()) => println!("split verified: {} train, {} test", train.len(), test.len()),
        Err(e) => return Err(Error::SplitInfeasible(e)),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Plan(args) => plan_cmd(args),
        Command::Run(args) => run_cmd(args),
        Command::Report {
            runs,
            config,
            out,
            alpha,
        } => report_cmd(runs, config.as_deref(), out.as_deref(), *alpha),
        Command::Catalog {
            catalog,
            sample,
            seed,
            no_options,
        } => catalog_cmd(catalog.as_deref(), *sample, *seed, *no_options),
        Command::Split {
            catalog,
            n,
            seed,
            no_options,
        } => split_cmd(catalog.as_deref(), *n, *seed, *no_options),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Validation(_) | Error::Config(_) | Error::Toml(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
