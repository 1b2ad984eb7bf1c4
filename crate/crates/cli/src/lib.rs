//! Command-line driver: loads a JSON run config, runs pipeline stages,
//! caches their outputs and writes result files.

pub mod cache;
pub mod config;
pub mod stages;

use cache::ResultCache;
use clap::{Parser, ValueEnum};
use config::RunConfig;
use stages::{Context, Stage, StageOutput, ALL_STAGES};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CHECK: i32 = 2;

pub const DEFAULT_OUT: &str = "btrengine-out";

pub fn version() -> String {
    format!("{} ({})", env!("CARGO_PKG_VERSION"), env!("BTRENGINE_GIT_DESCRIBE"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    CheckAction,
    Wick,
    Curve,
    Density,
    Omega02,
    Btr,
    SdeCheck,
    TCheck,
    Sample,
    /// Every stage plus report.md.
    Report,
}

impl Command {
    fn stage(self) -> Option<Stage> {
        Some(match self {
            Command::CheckAction => Stage::CheckAction,
            Command::Wick => Stage::Wick,
            Command::Curve => Stage::Curve,
            Command::Density => Stage::Density,
            Command::Omega02 => Stage::Omega02,
            Command::Btr => Stage::Btr,
            Command::SdeCheck => Stage::SdeCheck,
            Command::TCheck => Stage::TCheck,
            Command::Sample => Stage::Sample,
            Command::Report => return None,
        })
    }
}

#[derive(Debug, Parser)]
#[command(name = "btrengine", version = env!("CARGO_PKG_VERSION"), about = "Spectral curves and blobbed topological recursion for multi-trace Dirac ensembles")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON run config; optional for check-action.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output` in the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Recompute even if a cached result exists.
    #[arg(long)]
    pub no_cache: bool,
    /// Seed for the sampler and the action check.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, short)]
    pub verbose: bool,
}

struct Failure(i32, String);

fn usage(msg: impl Into<String>) -> Failure {
    Failure(EXIT_USAGE, msg.into())
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, A>(argv: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(usage)?,
        None if cli.command == Command::CheckAction => {
            RunConfig::parse(r#"{"model": {"t": 1.0, "d": 2, "plain_1mm": true}}"#, "builtin").map_err(usage)?
        }
        None => return Err(usage(format!("--config is required for {:?}", cli.command))),
    };
    if let Some(seed) = cli.seed {
        cfg.sample.seed = seed;
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<i32, Failure> {
    let cfg = load_config(cli)?;
    let out_dir = cli.out.clone().or_else(|| cfg.output.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    std::fs::create_dir_all(&out_dir).map_err(|e| usage(format!("{}: {e}", out_dir.display())))?;
    let cache = ResultCache::from_env();
    let ctx = Context::new(&cfg);

    let targets: Vec<Stage> = match cli.command.stage() {
        Some(s) => vec![s],
        None => ALL_STAGES.to_vec(),
    };
    let mut outputs = vec![];
    for target in targets {
        let mut last = None;
        for stage in target.pipeline() {
            last = Some(run_stage(cli, &ctx, &cache, stage, &out_dir)?);
        }
        outputs.extend(last);
    }
    if cli.command == Command::Report {
        let md = stages::report(&outputs, &version());
        write(&out_dir, "report.md", &md)?;
    }
    let failed: Vec<_> = outputs.iter().flat_map(|o| &o.checks).filter(|c| !c.pass).collect();
    for c in &failed {
        eprintln!("check failed: {} = {:e} (bound {})", c.name, c.value, c.bound);
    }
    Ok(if failed.is_empty() { EXIT_OK } else { EXIT_CHECK })
}

fn run_stage(cli: &Cli, ctx: &Context, cache: &ResultCache, stage: Stage, dir: &Path) -> Result<StageOutput, Failure> {
    let material = serde_json::json!({"stage": stage.name(), "version": version(), "input": stage.key_material(ctx.cfg)});
    let key = ResultCache::key(&material.to_string());
    let cached = if cli.no_cache { None } else { cache.get(&key) };
    let out = match cached {
        Some(o) => {
            if cli.verbose {
                eprintln!("{}: cached ({key})", stage.name());
            }
            o
        }
        None => {
            let start = std::time::Instant::now();
            let o = ctx.run(stage).map_err(|e| Failure(EXIT_CHECK, e))?;
            if cli.verbose {
                eprintln!("{}: computed in {:.2?}", stage.name(), start.elapsed());
            }
            if let Err(e) = cache.put(&key, &o) {
                eprintln!("warning: cache write failed in {}: {e}", cache.dir().display());
            }
            o
        }
    };
    for (name, text) in &out.files {
        write(dir, name, text)?;
    }
    Ok(out)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), Failure> {
    let p = dir.join(name);
    std::fs::write(&p, text).map_err(|e| usage(format!("{}: {e}", p.display())))
}
