//! Command-line driver for the collision search toolkit.

use std::path::PathBuf;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use shacol_core::bridge::BridgeConfig;
use shacol_core::search::{
    self, load_start_point, results_csv, run_search, summary_table, CollisionRecord, SearchConfig,
};
use shacol_core::{ChainingValue, Encoder, MessageBlock};

#[derive(Parser)]
#[command(
    name = "shacol",
    about = "semi-free-start collision search for step-reduced SHA-256",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded collision searches against a starting point.
    Search(SearchArgs),
    /// Encode an instance and write DIMACS CNF plus the variable map.
    Encode(EncodeArgs),
    /// Verify a collision record file (or explicit hex words).
    Verify(VerifyArgs),
    /// Parse, row-drop and re-render a starting point.
    Show(ShowArgs),
}

#[derive(Args)]
struct SearchArgs {
    /// Number of compression steps (rows are dropped from the starting
    /// point's bottom to match).
    #[arg(long)]
    steps: usize,
    /// Starting-point file.
    #[arg(long = "start-point")]
    start_point: PathBuf,
    /// Comma-separated solver seeds.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8,9,10")]
    seeds: Vec<u64>,
    /// Wall-clock budget per seed, in seconds.
    #[arg(long, default_value_t = 3600)]
    timeout: u64,
    /// Optional conflict budget per seed.
    #[arg(long)]
    conflicts: Option<u64>,
    /// Disable the programmatic propagation layers (bitsliced + wordwise).
    #[arg(long = "no-prop")]
    no_prop: bool,
    /// Re-enable propagation (the default); kept for script symmetry.
    #[arg(long = "enable-prop", conflicts_with = "no_prop")]
    enable_prop: bool,
    /// Disable inconsistency blocking (two-bit-condition cycles).
    #[arg(long = "no-ib")]
    no_ib: bool,
    /// Re-enable inconsistency blocking (the default).
    #[arg(long = "enable-ib", conflicts_with = "no_ib")]
    enable_ib: bool,
    /// Treat '?' differences in auxiliary words as '-' during wordwise
    /// propagation (on by default; pass false to disable).
    #[arg(long = "aux-heuristic", default_value_t = true, action = clap::ArgAction::Set)]
    aux_heuristic: bool,
    /// Also write the instance as DIMACS next to the results.
    #[arg(long = "emit-dimacs")]
    emit_dimacs: bool,
    /// Output directory for results, collision records and statistics.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    steps: usize,
    #[arg(long = "start-point")]
    start_point: PathBuf,
    /// Output base path; writes <base>.cnf and <base>.map.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Collision record file (steps/h0/m/m2/h1 lines).
    #[arg(long, conflicts_with_all = ["cv", "m", "m2", "steps"])]
    record: Option<PathBuf>,
    #[arg(long)]
    cv: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    m2: Option<String>,
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Args)]
struct ShowArgs {
    #[arg(long = "start-point")]
    start_point: PathBuf,
    /// Target step count after dropping rows (defaults to the file's own).
    #[arg(long)]
    steps: Option<usize>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Search(args) => cmd_search(args),
        Command::Encode(args) => cmd_encode(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Show(args) => cmd_show(args),
    }
}

fn cmd_search(args: SearchArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.start_point)
        .with_context(|| format!("reading {}", args.start_point.display()))?;
    let sp = load_start_point(&text, args.steps)?;
    let prop = !args.no_prop;
    let bridge = BridgeConfig {
        bitsliced: prop,
        wordwise: prop,
        aux_heuristic: args.aux_heuristic,
        inconsistency_blocking: !args.no_ib,
        ..BridgeConfig::default()
    };
    let cfg = SearchConfig {
        steps: args.steps,
        start_point: sp,
        seeds: args.seeds.clone(),
        timeout: Some(Duration::from_secs(args.timeout)),
        max_conflicts: args.conflicts,
        bridge,
        out_dir: args.out.clone(),
    };
    if args.emit_dimacs {
        let constrained = search::collision_constrained(&cfg.start_point)?;
        let encoded = Encoder::new().build(args.steps, &constrained)?;
        let dir = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir)?;
        let base = dir.join(format!("instance-{}", args.steps));
        search::write_dimacs_with_map(&encoded, &base)?;
        eprintln!("wrote {}.cnf and {}.map", base.display(), base.display());
    }
    let results = run_search(&cfg)?;
    print!("{}", summary_table(&results));
    for r in &results {
        if let Some(c) = &r.collision {
            println!(
                "seed {} found a verified {}-step collision in {:.1}s",
                r.seed,
                r.steps,
                r.elapsed.as_secs_f64()
            );
            print!("{}", c.render());
        }
    }
    if args.out.is_none() {
        print!("{}", results_csv(&results));
    }
    Ok(())
}

fn cmd_encode(args: EncodeArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.start_point)
        .with_context(|| format!("reading {}", args.start_point.display()))?;
    let sp = load_start_point(&text, args.steps)?;
    let constrained = search::collision_constrained(&sp)?;
    let encoded = Encoder::new().build(args.steps, &constrained)?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    search::write_dimacs_with_map(&encoded, &args.out)?;
    println!(
        "{} variables, {} clauses -> {}.cnf / {}.map",
        encoded.cnf.num_vars,
        encoded.cnf.clauses.len(),
        args.out.display(),
        args.out.display()
    );
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<()> {
    let record = if let Some(path) = args.record {
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("reading {}", path.display()))?;
        CollisionRecord::parse(&text)?
    } else {
        let (Some(cv), Some(m), Some(m2), Some(steps)) = (args.cv, args.m, args.m2, args.steps)
        else {
            bail!("provide either --record or all of --cv/--m/--m2/--steps");
        };
        let cv = ChainingValue::from_hex(&cv)?;
        let m = MessageBlock::from_hex(&m)?;
        let m2 = MessageBlock::from_hex(&m2)?;
        CollisionRecord { steps, cv, m, m2, hash: shacol_core::sha256::compress(&cv, &m, steps) }
    };
    if record.verify() {
        println!(
            "verified: {}-step semi-free-start collision, hash {}",
            record.steps,
            record.hash.to_hex()
        );
        Ok(())
    } else {
        bail!("record does NOT verify");
    }
}

fn cmd_show(args: ShowArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.start_point)
        .with_context(|| format!("reading {}", args.start_point.display()))?;
    let sp = shacol_core::CondGrid::parse(&text)?;
    let steps = args.steps.unwrap_or_else(|| sp.n());
    let sp = load_start_point(&text, steps)?;
    print!("{}", sp.render());
    Ok(())
}
