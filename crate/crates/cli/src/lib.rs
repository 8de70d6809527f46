//! Batch pipeline stages behind the `fpwatch` binary.
//!
//! Each stage reads and writes the versioned files of [`fpwatch_core::io`].
//! Profiles live in a directory with one `<entity>.fpt` file per entity.
//! All outputs are ordered deterministically, so a fixed seed and config
//! reproduce every artifact byte for byte.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use fpwatch_core::accumulator::severity_for;
use fpwatch_core::evaluator::{missed_fraud_amounts, RocCurve};
use fpwatch_core::fptree::persist::{profile_file_name, read_profile, write_profile};
use fpwatch_core::io::{
    parse_labels, parse_scores, parse_transactions, write_alerts, write_labels, write_roc_table, write_scores,
    write_summary, write_transactions, AlertRecord, ParseMode, Summary,
};
use fpwatch_core::simulator::{builtin_profile, generate_with, weeks_for, SimOptions, DEFAULT_START, WEEK};
use fpwatch_core::{
    outcomes, roc, total_cost, window_select, AlertState, BehaviorProfile, EngineConfig, Error, FpTree, Label,
    LabeledDataset, Result, SuspicionRecord, Transaction, WindowAnchor,
};
use log::{info, warn};

/// Exit status for a failed run, one per error category.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        Error::Parse { .. } | Error::Format { .. } => 3,
        Error::Contract(_) => 4,
        Error::NoProfile(_) => 5,
        Error::Evaluation(_) => 6,
        Error::Io(_) => 7,
    }
}

pub fn load_config(path: Option<&Path>) -> Result<EngineConfig> {
    match path {
        None => Ok(EngineConfig::default()),
        Some(p) => EngineConfig::from_toml(&fs::read_to_string(p)?),
    }
}

/// A builtin profile name, or the path of a profile document.
pub fn load_behavior(name_or_path: &str) -> Result<BehaviorProfile> {
    let path = Path::new(name_or_path);
    if path.is_file() {
        return BehaviorProfile::from_toml(&fs::read_to_string(path)?);
    }
    builtin_profile(name_or_path)
        .ok_or_else(|| Error::Config(format!("`{name_or_path}` is neither a builtin profile nor a readable file")))
}

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub profile: BehaviorProfile,
    pub fraud_profile: BehaviorProfile,
    pub n_legal: usize,
    pub n_fraud: usize,
    pub entity: String,
    pub start_week: i64,
    pub seed: u64,
}

pub fn simulate(args: &SimulateArgs) -> Result<LabeledDataset> {
    let opts = SimOptions { entity_id: args.entity.clone(), start: DEFAULT_START + args.start_week * WEEK };
    generate_with(&args.profile, args.n_legal, args.n_fraud, &args.fraud_profile, args.seed, &opts)
}

pub fn read_transactions(path: &Path, mode: ParseMode) -> Result<Vec<Transaction>> {
    let report = parse_transactions(BufReader::new(File::open(path)?), mode)?;
    for (line, msg) in &report.skipped {
        warn!("{}: skipped line {line}: {msg}", path.display());
    }
    Ok(report.records)
}

pub fn read_labels(path: &Path) -> Result<Vec<Label>> {
    parse_labels(BufReader::new(File::open(path)?))
}

pub fn read_scores(path: &Path) -> Result<Vec<SuspicionRecord>> {
    parse_scores(BufReader::new(File::open(path)?))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn by_entity(transactions: &[Transaction]) -> BTreeMap<&str, Vec<Transaction>> {
    let mut groups: BTreeMap<&str, Vec<Transaction>> = BTreeMap::new();
    for t in transactions {
        groups.entry(&t.entity_id).or_default().push(t.clone());
    }
    groups
}

/// One profile per entity over the configured window, ending at the
/// entity's latest transaction. Labels never enter this stage.
pub fn build_profiles(transactions: &[Transaction], cfg: &EngineConfig) -> Result<BTreeMap<String, FpTree>> {
    if transactions.is_empty() {
        return Err(Error::NoProfile("no transactions to build a profile from".into()));
    }
    let mut profiles = BTreeMap::new();
    for (entity, txs) in by_entity(transactions) {
        let now = txs.last().map(|t| t.timestamp).expect("group is non-empty");
        let window = window_select(&txs, cfg.window, now)?;
        let itemsets = window.iter().map(|t| cfg.granularity.discretize_transaction(t)).collect::<Result<Vec<_>>>()?;
        let tree = FpTree::build(&itemsets, cfg.min_support());
        let s = tree.stats();
        info!("{entity}: {} transactions, {} nodes, {} header items", itemsets.len(), s.node_count, s.header_size);
        profiles.insert(entity.to_owned(), tree);
    }
    Ok(profiles)
}

pub fn write_profiles(dir: &Path, profiles: &BTreeMap<String, FpTree>) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (entity, tree) in profiles {
        let mut w = create(&dir.join(profile_file_name(entity)))?;
        write_profile(&mut w, entity, tree)?;
        w.flush()?;
    }
    Ok(())
}

/// Every `*.fpt` profile in `dir`, keyed by the entity recorded inside.
pub fn read_profiles(dir: &Path) -> Result<BTreeMap<String, FpTree>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "fpt"));
    paths.sort();
    let mut profiles = BTreeMap::new();
    for p in paths {
        let (entity, tree) = read_profile(BufReader::new(File::open(&p)?))?;
        profiles.insert(entity, tree);
    }
    Ok(profiles)
}

/// Scores transactions in input order.
pub fn score(
    transactions: &[Transaction],
    profiles: &BTreeMap<String, FpTree>,
    cfg: &EngineConfig,
) -> Result<Vec<SuspicionRecord>> {
    transactions
        .iter()
        .map(|t| {
            let tree = profiles
                .get(&t.entity_id)
                .ok_or_else(|| Error::NoProfile(format!("entity `{}` has no profile", t.entity_id)))?;
            let items = cfg.granularity.discretize_transaction(t)?;
            SuspicionRecord::score(t.clone(), &items, tree, &cfg.weights, cfg.credit_params())
        })
        .collect()
}

/// Alert value after each record, paired with the record's input index.
/// Sorted by entity, then time, then input order.
fn accumulate_indexed(records: &[SuspicionRecord], cfg: &EngineConfig) -> Result<Vec<(usize, AlertRecord)>> {
    let acc = &cfg.accumulator;
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        groups.entry(&r.transaction.entity_id).or_default().push(i);
    }
    let mut out = Vec::with_capacity(records.len());
    for (entity, mut idx) in groups {
        idx.sort_by_key(|&i| records[i].scored_at);
        let first = records[idx[0]].scored_at;
        // profiles are trained on what precedes the scored batch
        let mut state = AlertState::new(acc.shape, acc.anchor, acc.thresholds.clone(), first - 1, first)?;
        for i in idx {
            let r = &records[i];
            state.slide(r.scored_at, [r.clone()])?;
            let value = state.alert_value()?;
            out.push((
                i,
                AlertRecord {
                    entity_id: entity.to_owned(),
                    window_end: r.scored_at,
                    alert_value: value,
                    severity: severity_for(state.thresholds(), value).map(str::to_owned),
                    record_count: state.records().len(),
                },
            ));
        }
    }
    if let WindowAnchor::SinceLastUpdate = acc.anchor {
        info!("alert windows start just before each entity's first scored record");
    }
    Ok(out)
}

/// One alert line per scored record, ordered by entity and time.
pub fn accumulate(records: &[SuspicionRecord], cfg: &EngineConfig) -> Result<Vec<AlertRecord>> {
    Ok(accumulate_indexed(records, cfg)?.into_iter().map(|(_, a)| a).collect())
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub curve: RocCurve,
    pub summary: Summary,
}

/// ROC and cost of per-transaction suspicion against `labels` (one per
/// record, same order). With `alert_level`, also ranks records by the
/// accumulated alert value after each of them.
pub fn evaluate(
    records: &[SuspicionRecord],
    labels: &[Label],
    cfg: &EngineConfig,
    alert_level: bool,
) -> Result<Evaluation> {
    if records.len() != labels.len() {
        return Err(Error::Evaluation(format!("{} scored records but {} labels", records.len(), labels.len())));
    }
    let scores: Vec<f64> = records.iter().map(|r| r.suspicion).collect();
    let amounts: Vec<f64> = records.iter().map(|r| r.transaction.amount.as_f64()).collect();
    let curve = roc(&scores, labels)?;
    let threshold = cfg.evaluation.alert_threshold;
    let matrix = outcomes(&scores, labels, threshold)?;
    let missed = missed_fraud_amounts(&scores, labels, &amounts, threshold)?;
    let cost = total_cost(&matrix, Some(&missed), &cfg.evaluation.cost)?;
    let alert_level_auc = if alert_level {
        let mut values = vec![0.0; records.len()];
        for (i, a) in accumulate_indexed(records, cfg)? {
            values[i] = a.alert_value;
        }
        Some(roc(&values, labels)?.auc)
    } else {
        None
    };
    let summary = Summary {
        records: records.len(),
        fraud: labels.iter().filter(|&&l| l == Label::Fraud).count(),
        auc: curve.auc,
        alert_threshold: threshold,
        outcomes: matrix,
        cost,
        alert_level_auc,
    };
    Ok(Evaluation { curve, summary })
}

/// Gnuplot script drawing `roc_file` (relative to the script's directory).
pub fn gnuplot_script(roc_file: &str, auc: f64) -> String {
    format!(
        "set terminal pngcairo size 640,480\n\
         set output 'roc.png'\n\
         set xlabel 'false positive rate'\n\
         set ylabel 'true positive rate'\n\
         set xrange [0:1]\n\
         set yrange [0:1]\n\
         set key bottom right\n\
         plot '{roc_file}' using 2:3 with lines title 'AUC {auc:.4}', x with dots notitle\n"
    )
}

pub fn write_evaluation(dir: &Path, eval: &Evaluation) -> Result<()> {
    let mut w = create(&dir.join("roc.tsv"))?;
    write_roc_table(&mut w, &eval.curve)?;
    w.flush()?;
    let mut w = create(&dir.join("summary.tsv"))?;
    write_summary(&mut w, &eval.summary)?;
    w.flush()?;
    fs::write(dir.join("roc.gp"), gnuplot_script("roc.tsv", eval.curve.auc))?;
    Ok(())
}

pub fn write_dataset(transactions_path: &Path, labels_path: Option<&Path>, data: &LabeledDataset) -> Result<()> {
    let mut w = create(transactions_path)?;
    write_transactions(&mut w, &data.transactions)?;
    w.flush()?;
    if let Some(p) = labels_path {
        let mut w = create(p)?;
        write_labels(&mut w, &data.labels)?;
        w.flush()?;
    }
    Ok(())
}

pub fn write_score_file(path: &Path, records: &[SuspicionRecord]) -> Result<()> {
    let mut w = create(path)?;
    write_scores(&mut w, records)?;
    w.flush()?;
    Ok(())
}

pub fn write_alert_file(path: &Path, alerts: &[AlertRecord]) -> Result<()> {
    let mut w = create(path)?;
    write_alerts(&mut w, alerts)?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RunAllArgs {
    pub profile: BehaviorProfile,
    pub fraud_profile: BehaviorProfile,
    pub entity: String,
    pub train_legal: usize,
    pub train_fraud: usize,
    pub test_legal: usize,
    pub test_fraud: usize,
    pub seed: u64,
}

/// Train and test simulation, profile build, scoring, accumulation and
/// evaluation, with every artifact written under `out`:
///
/// ```text
/// config.toml  train.tsv  train.labels  test.tsv  test.labels
/// profiles/<entity>.fpt  scores.tsv  alerts.tsv  roc.tsv  summary.tsv  roc.gp
/// ```
///
/// The test set uses `seed + 1` and starts in the week after the training data.
pub fn run_all(args: &RunAllArgs, cfg: &EngineConfig, out: &Path) -> Result<Evaluation> {
    fs::create_dir_all(out)?;
    fs::write(out.join("config.toml"), cfg.to_toml())?;
    let train = simulate(&SimulateArgs {
        profile: args.profile.clone(),
        fraud_profile: args.fraud_profile.clone(),
        n_legal: args.train_legal,
        n_fraud: args.train_fraud,
        entity: args.entity.clone(),
        start_week: 0,
        seed: args.seed,
    })?;
    write_dataset(&out.join("train.tsv"), Some(&out.join("train.labels")), &train)?;
    let test = simulate(&SimulateArgs {
        profile: args.profile.clone(),
        fraud_profile: args.fraud_profile.clone(),
        n_legal: args.test_legal,
        n_fraud: args.test_fraud,
        entity: args.entity.clone(),
        start_week: weeks_for(&args.profile, args.train_legal + args.train_fraud),
        seed: args.seed.wrapping_add(1),
    })?;
    write_dataset(&out.join("test.tsv"), Some(&out.join("test.labels")), &test)?;

    let profiles = build_profiles(&train.transactions, cfg)?;
    write_profiles(&out.join("profiles"), &profiles)?;
    let records = score(&test.transactions, &profiles, cfg)?;
    write_score_file(&out.join("scores.tsv"), &records)?;
    write_alert_file(&out.join("alerts.tsv"), &accumulate(&records, cfg)?)?;
    let eval = evaluate(&records, &test.labels, cfg, true)?;
    write_evaluation(out, &eval)?;
    info!("auc {:.4}", eval.summary.auc);
    Ok(eval)
}
