use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fpwatch_cli::*;
use fpwatch_core::fptree::persist::read_profile;
use fpwatch_core::io::ParseMode;

#[derive(Parser)]
#[command(name = "fpwatch", version, about = "FP-tree behavior profiling and fraud scoring")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Engine configuration (TOML); built-in defaults when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Random seed for simulation
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Skip malformed transaction lines instead of failing
    #[arg(long, global = true)]
    lenient: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labelled transaction file from behavior profiles
    Simulate {
        /// Builtin profile name (regular, irregular) or profile document path
        #[arg(long, default_value = "regular")]
        profile: String,
        #[arg(long, default_value = "fraud")]
        fraud_profile: String,
        #[arg(long, default_value_t = 3000)]
        legal: usize,
        #[arg(long, default_value_t = 50)]
        fraud: usize,
        #[arg(long, default_value = "u1")]
        entity: String,
        /// Weeks after the default start date
        #[arg(long, default_value_t = 0)]
        start_week: i64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Build one profile per entity from a transaction file
    BuildProfile {
        #[arg(long)]
        transactions: PathBuf,
        /// Directory receiving `<entity>.fpt` files
        #[arg(long)]
        profiles: PathBuf,
    },
    /// Score transactions against stored profiles
    Score {
        #[arg(long)]
        transactions: PathBuf,
        #[arg(long)]
        profiles: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Accumulate scored records into alert values
    Accumulate {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// ROC, outcomes and cost of a scored, labelled run
    Evaluate {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Directory receiving roc.tsv, summary.tsv and roc.gp
        #[arg(long)]
        out: PathBuf,
        /// Also rank by accumulated alert value
        #[arg(long)]
        alert_level: bool,
    },
    /// Print the shape of a stored profile
    Stats { profile: PathBuf },
    /// Simulate, train, score, accumulate and evaluate in one go
    RunAll {
        #[arg(long, default_value = "regular")]
        profile: String,
        #[arg(long, default_value = "fraud")]
        fraud_profile: String,
        #[arg(long, default_value = "u1")]
        entity: String,
        #[arg(long, default_value_t = 3000)]
        train_legal: usize,
        #[arg(long, default_value_t = 50)]
        train_fraud: usize,
        #[arg(long, default_value_t = 3000)]
        test_legal: usize,
        #[arg(long, default_value_t = 20)]
        test_fraud: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn stats(path: &Path) -> fpwatch_core::Result<()> {
    let (entity, tree) = read_profile(io::BufReader::new(std::fs::File::open(path)?))?;
    let s = tree.stats();
    let mut out = io::stdout().lock();
    writeln!(out, "entity\t{entity}")?;
    writeln!(out, "min_sup\t{}", tree.min_sup())?;
    writeln!(out, "transactions\t{}", tree.total_transactions())?;
    writeln!(out, "nodes\t{}", s.node_count)?;
    writeln!(out, "depth\t{}", s.depth)?;
    writeln!(out, "header\t{}", s.header_size)?;
    for e in tree.header() {
        writeln!(out, "item\t{}\t{}", e.item, e.total_count)?;
    }
    Ok(())
}

fn run(cli: Cli) -> fpwatch_core::Result<()> {
    let cfg = load_config(cli.config.as_deref())?;
    let mode = if cli.lenient { ParseMode::Lenient } else { ParseMode::Strict };
    match cli.command {
        Command::Simulate { profile, fraud_profile, legal, fraud, entity, start_week, out, labels } => {
            let args = SimulateArgs {
                profile: load_behavior(&profile)?,
                fraud_profile: load_behavior(&fraud_profile)?,
                n_legal: legal,
                n_fraud: fraud,
                entity,
                start_week,
                seed: cli.seed,
            };
            write_dataset(&out, labels.as_deref(), &simulate(&args)?)
        }
        Command::BuildProfile { transactions, profiles } => {
            let txs = read_transactions(&transactions, mode)?;
            write_profiles(&profiles, &build_profiles(&txs, &cfg)?)
        }
        Command::Score { transactions, profiles, out } => {
            let txs = read_transactions(&transactions, mode)?;
            write_score_file(&out, &score(&txs, &read_profiles(&profiles)?, &cfg)?)
        }
        Command::Accumulate { scores, out } => write_alert_file(&out, &accumulate(&read_scores(&scores)?, &cfg)?),
        Command::Evaluate { scores, labels, out, alert_level } => {
            let eval = evaluate(&read_scores(&scores)?, &read_labels(&labels)?, &cfg, alert_level)?;
            write_evaluation(&out, &eval)
        }
        Command::Stats { profile } => stats(&profile),
        Command::RunAll { profile, fraud_profile, entity, train_legal, train_fraud, test_legal, test_fraud, out } => {
            let args = RunAllArgs {
                profile: load_behavior(&profile)?,
                fraud_profile: load_behavior(&fraud_profile)?,
                entity,
                train_legal,
                train_fraud,
                test_legal,
                test_fraud,
                seed: cli.seed,
            };
            let eval = run_all(&args, &cfg, &out)?;
            println!("auc\t{:.4}", eval.summary.auc);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fpwatch: {} error: {e}", e.category());
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
