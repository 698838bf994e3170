use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use density_order::density::DivergenceKind;
use density_order::evaluation::{
    binary_accuracy, evaluate_graded, kl_matrix, tune_threshold, volume_report, LabeledPairSet,
};
use density_order::experiment::{run_with, sweep, sweep_row_tsv, RunData, SweepGrid, SWEEP_HEADER};
use density_order::hierarchy::{split_closure, Closure, HierarchyGraph, NegSpec, NodeId, Pair};
use density_order::io::{
    graded_pairs, load_checkpoint, load_config, load_edges, load_graded, load_labeled_pairs,
    load_synset_map, save_checkpoint, write_labeled_pairs, write_pairs, Checkpoint,
    CheckpointMeta,
};
use density_order::oracle::battery;
use density_order::training::{train_on, AdamConfig, LossKind, TrainConfig};
use density_order::Error;

#[derive(Parser)]
#[command(name = "doe", version, about = "Gaussian density order embeddings for hierarchies")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Transitive closure of an edge list.
    Closure(ClosureArgs),
    /// Hold out labeled validation and test pairs from the closure.
    Split(SplitArgs),
    /// Train embeddings; writes model.ckpt and metrics.tsv.
    Train(TrainArgs),
    /// Tune a threshold on validation pairs and report test accuracy.
    EvalHypernym(EvalHypernymArgs),
    /// Spearman correlation against graded word pairs.
    EvalHyperlex(EvalHyperlexArgs),
    /// Pairwise divergence matrix and volumes for chosen nodes.
    Inspect(InspectArgs),
    /// Train and evaluate every cell of a hyperparameter grid.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct ClosureArgs {
    /// child<TAB>parent edge list
    #[arg(long)]
    edges: PathBuf,
    /// Output TSV; stats only when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 4000)]
    n_val: usize,
    #[arg(long, default_value_t = 4000)]
    n_test: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Training hyperparameters; each falls back to the config file, then the default.
#[derive(Args, Default)]
struct HyperArgs {
    /// Flat key = value file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    init_var: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// kl, reverse-kl, elk or renyi:<alpha>
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    /// e.g. s1:1,s2:1,s4:1
    #[arg(long)]
    neg: Option<String>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// doe or w2g-rank
    #[arg(long)]
    loss: Option<String>,
    #[arg(long)]
    renormalize_means: Option<bool>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    hyper: HyperArgs,
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Labeled pairs for per-epoch model selection
    #[arg(long)]
    val: Option<PathBuf>,
    /// Labeled-pair files whose positives are left out of training
    #[arg(long)]
    exclude: Vec<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct EvalHypernymArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    val: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Override the divergence stored in the checkpoint
    #[arg(long)]
    kind: Option<String>,
}

#[derive(Args)]
struct EvalHyperlexArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// word1<TAB>word2<TAB>score
    #[arg(long)]
    graded: PathBuf,
    /// word<TAB>synset1,synset2,...
    #[arg(long)]
    synsets: PathBuf,
    /// Per-pair scores TSV
    #[arg(long)]
    scores_out: Option<PathBuf>,
    #[arg(long)]
    kind: Option<String>,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long, required_unless_present = "verify")]
    checkpoint: Option<PathBuf>,
    /// Comma-separated node names
    #[arg(long, value_delimiter = ',', required_unless_present = "verify")]
    nodes: Vec<String>,
    /// Mark matrix cells below this divergence with '*'
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    kind: Option<String>,
    /// Run the oracle battery and print a pass/fail table
    #[arg(long)]
    verify: bool,
    #[arg(long, default_value_t = 0)]
    verify_seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    hyper: HyperArgs,
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Validation pairs; generated from the closure when omitted
    #[arg(long)]
    val: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long, default_value_t = 4000)]
    n_val: usize,
    #[arg(long, default_value_t = 4000)]
    n_test: usize,
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
    #[arg(long)]
    graded: Option<PathBuf>,
    #[arg(long)]
    synsets: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    margins: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    init_vars: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    gammas: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    kinds: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    dims: Vec<usize>,
    /// Negative specs separated by ';', e.g. "s1;s1,s2,s4"
    #[arg(long, value_delimiter = ';')]
    negs: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    losses: Vec<String>,
    /// Run cells on all cores
    #[arg(long)]
    parallel: bool,
    /// Summary TSV; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

const HYPER_KEYS: &[&str] = &[
    "margin", "init_var", "gamma", "kind", "dim", "neg", "batch_size", "epochs", "lr", "beta1",
    "beta2", "eps", "seed", "loss", "renormalize_means", "threads",
];
const PATH_KEYS: &[&str] = &["edges", "val", "test", "graded", "synsets", "out_dir"];

struct Resolved {
    cfg: TrainConfig,
    file: BTreeMap<String, String>,
}

impl Resolved {
    fn path(&self, flag: &Option<PathBuf>, key: &str) -> Option<PathBuf> {
        flag.clone().or_else(|| self.file.get(key).map(PathBuf::from))
    }

    fn require(&self, flag: &Option<PathBuf>, key: &str) -> CliResult<PathBuf> {
        self.path(flag, key)
            .ok_or_else(|| usage(format!("--{} is required", key.replace('_', "-"))))
    }
}

fn pick<T: FromStr>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str, default: T) -> CliResult<T> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match file.get(key) {
        Some(s) => s
            .parse()
            .map_err(|_| usage(format!("config value for '{key}' is invalid: '{s}'"))),
        None => Ok(default),
    }
}

fn parse_flag<T: FromStr<Err = Error>>(flag: &Option<String>) -> CliResult<Option<T>> {
    flag.as_deref().map(T::from_str).transpose().map_err(|e| usage(e.to_string()))
}

impl HyperArgs {
    fn resolve(&self) -> CliResult<Resolved> {
        let file = match &self.config {
            Some(p) => load_config(p)?,
            None => BTreeMap::new(),
        };
        if let Some(bad) = file
            .keys()
            .find(|k| !HYPER_KEYS.contains(&k.as_str()) && !PATH_KEYS.contains(&k.as_str()))
        {
            return Err(usage(format!("unknown config key '{bad}'")));
        }
        let d = TrainConfig::default();
        let cfg = TrainConfig {
            margin: pick(self.margin, &file, "margin", d.margin)?,
            init_var: pick(self.init_var, &file, "init_var", d.init_var)?,
            gamma: pick(self.gamma, &file, "gamma", d.gamma)?,
            kind: pick(parse_flag(&self.kind)?, &file, "kind", d.kind)?,
            dim: pick(self.dim, &file, "dim", d.dim)?,
            neg: pick(parse_flag::<NegSpec>(&self.neg)?, &file, "neg", d.neg)?,
            batch_size: pick(self.batch_size, &file, "batch_size", d.batch_size)?,
            epochs: pick(self.epochs, &file, "epochs", d.epochs)?,
            adam: AdamConfig {
                learning_rate: pick(self.lr, &file, "lr", d.adam.learning_rate)?,
                beta1: pick(self.beta1, &file, "beta1", d.adam.beta1)?,
                beta2: pick(self.beta2, &file, "beta2", d.adam.beta2)?,
                eps: pick(self.eps, &file, "eps", d.adam.eps)?,
            },
            seed: pick(self.seed, &file, "seed", d.seed)?,
            loss: pick(parse_flag::<LossKind>(&self.loss)?, &file, "loss", d.loss)?,
            renormalize_means: pick(self.renormalize_means, &file, "renormalize_means", d.renormalize_means)?,
            threads: pick(self.threads, &file, "threads", d.threads)?,
        };
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        Ok(Resolved { cfg, file })
    }
}

fn load_closure(edges: &Path) -> CliResult<Closure> {
    Ok(HierarchyGraph::from_edges(&load_edges(edges)?)?.transitive_closure()?)
}

/// Closure pairs minus the positives of `held`.
fn train_positives(closure: &Closure, held: &[&LabeledPairSet]) -> Vec<Pair> {
    let out: HashSet<Pair> = held
        .iter()
        .flat_map(|s| s.pairs.iter().filter(|p| p.label).map(|p| (p.u, p.v)))
        .collect();
    closure.pairs().iter().copied().filter(|p| !out.contains(p)).collect()
}

fn create(path: &Path) -> CliResult<std::io::BufWriter<fs::File>> {
    fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| CliError::Lib(Error::Io { path: path.to_owned(), source: e }))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| CliError::Lib(Error::Io { path: path.to_owned(), source: e }))
}

fn name_index(ck: &Checkpoint) -> HashMap<&str, NodeId> {
    ck.names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), NodeId(i as u32)))
        .collect()
}

fn kind_or(flag: &Option<String>, stored: DivergenceKind) -> CliResult<DivergenceKind> {
    Ok(parse_flag(flag)?.unwrap_or(stored))
}

fn cmd_closure(a: ClosureArgs) -> CliResult<()> {
    let closure = load_closure(&a.edges)?;
    if let Some(out) = &a.out {
        write_pairs(out, &closure)?;
    }
    println!("nodes\t{}\npairs\t{}", closure.node_count(), closure.pairs().len());
    Ok(())
}

fn cmd_split(a: SplitArgs) -> CliResult<()> {
    let closure = load_closure(&a.edges)?;
    let split = split_closure(&closure, a.n_val, a.n_test, a.seed)?;
    fs::create_dir_all(&a.out_dir).map_err(|e| Error::Io { path: a.out_dir.clone(), source: e })?;
    let names = closure.graph().names();
    write_labeled_pairs(a.out_dir.join("val.tsv"), &split.val, names)?;
    write_labeled_pairs(a.out_dir.join("test.tsv"), &split.test, names)?;
    println!(
        "val\t{}\ntest\t{}\ntrain_positives\t{}",
        split.val.len(),
        split.test.len(),
        split.train.len()
    );
    Ok(())
}

fn cmd_train(a: TrainArgs) -> CliResult<()> {
    let r = a.hyper.resolve()?;
    let edges = r.require(&a.edges, "edges")?;
    let out_dir = r.require(&a.out_dir, "out_dir")?;
    let closure = load_closure(&edges)?;
    let lookup = |n: &str| closure.id(n);
    let val = r.path(&a.val, "val").map(|p| load_labeled_pairs(p, lookup)).transpose()?;
    let excluded = a
        .exclude
        .iter()
        .map(|p| load_labeled_pairs(p, lookup))
        .collect::<Result<Vec<_>, _>>()?;
    let held: Vec<&LabeledPairSet> = excluded.iter().collect();
    let positives = train_positives(&closure, &held);
    let cfg = &r.cfg;
    eprintln!(
        "training on {} positives over {} nodes ({} excluded)",
        positives.len(),
        closure.node_count(),
        closure.pairs().len() - positives.len()
    );

    let (table, history, best) = match &val {
        Some(val) => {
            let data = RunData {
                closure: &closure,
                train: &positives,
                val,
                test: None,
                graded: None,
            };
            let res = run_with(data, cfg, |e, acc| eprintln!("epoch {e}\tval_accuracy {acc:.4}"))?;
            (res.table, res.history, res.best_epoch)
        }
        None => {
            let res = train_on(&closure, &positives, cfg, |e, _| {
                eprintln!("epoch {e}");
                Ok(None)
            })?;
            (res.table, res.history, res.best_epoch)
        }
    };

    fs::create_dir_all(&out_dir).map_err(|e| Error::Io { path: out_dir.clone(), source: e })?;
    let meta = CheckpointMeta {
        kind: cfg.kind,
        gamma: cfg.gamma,
        seed: cfg.seed,
    };
    save_checkpoint(out_dir.join("model.ckpt"), closure.graph().names(), &table, &meta)?;
    let mut metrics = String::from("epoch\ttrain_loss\tval_accuracy\n");
    for h in &history {
        let acc = h.val_accuracy.map_or_else(|| "NA".to_owned(), |a| a.to_string());
        metrics.push_str(&format!("{}\t{}\t{acc}\n", h.epoch, h.train_loss));
    }
    write_text(&out_dir.join("metrics.tsv"), &metrics)?;
    if let Some(e) = best {
        println!("best_epoch\t{e}");
    }
    println!("checkpoint\t{}", out_dir.join("model.ckpt").display());
    Ok(())
}

fn cmd_eval_hypernym(a: EvalHypernymArgs) -> CliResult<()> {
    let ck = load_checkpoint(&a.checkpoint)?;
    let idx = name_index(&ck);
    let lookup = |n: &str| idx.get(n).copied();
    let val = load_labeled_pairs(&a.val, lookup)?;
    let test = load_labeled_pairs(&a.test, lookup)?;
    let kind = kind_or(&a.kind, ck.meta.kind)?;
    let fit = tune_threshold(&val, &ck.table, kind)?;
    let acc = binary_accuracy(&test, fit.threshold, &ck.table, kind)?;
    println!(
        "threshold\t{}\nval_accuracy\t{}\ntest_accuracy\t{}",
        fit.threshold, fit.accuracy, acc
    );
    Ok(())
}

fn cmd_eval_hyperlex(a: EvalHyperlexArgs) -> CliResult<()> {
    let ck = load_checkpoint(&a.checkpoint)?;
    let idx = name_index(&ck);
    let graded = load_graded(&a.graded)?;
    let map = load_synset_map(&a.synsets)?;
    let pairs = graded_pairs(&graded, &map, |n| idx.get(n).copied());
    let kind = kind_or(&a.kind, ck.meta.kind)?;
    let rep = evaluate_graded(&pairs, &ck.table, kind)?;
    if let Some(out) = &a.scores_out {
        let mut text = String::from("word1\tword2\tgold\tscore\n");
        for (p, s) in pairs.iter().zip(&rep.scores) {
            text.push_str(&format!("{}\t{}\t{}\t{}\n", p.word_u, p.word_v, p.gold, s));
        }
        write_text(out, &text)?;
    }
    println!(
        "spearman_rho\t{}\npairs\t{}\nmissing\t{}",
        rep.spearman_rho,
        pairs.len(),
        rep.missing
    );
    Ok(())
}

fn cmd_inspect(a: InspectArgs) -> CliResult<()> {
    if a.verify {
        let rows = battery(a.verify_seed)?;
        let mut failed = 0;
        for r in &rows {
            println!("{}\t{}\t{}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            failed += usize::from(!r.passed);
        }
        println!("{} of {} checks passed", rows.len() - failed, rows.len());
        if failed > 0 {
            return Err(CliError::Lib(Error::Oracle(format!("{failed} oracle checks failed"))));
        }
        if a.checkpoint.is_none() {
            return Ok(());
        }
    }
    let path = a.checkpoint.as_ref().ok_or_else(|| usage("--checkpoint is required"))?;
    let ck = load_checkpoint(path)?;
    let idx = name_index(&ck);
    let nodes = a
        .nodes
        .iter()
        .map(|n| {
            idx.get(n.as_str())
                .copied()
                .ok_or_else(|| CliError::Lib(Error::Data(format!("unknown node '{n}'"))))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let kind = kind_or(&a.kind, ck.meta.kind)?;
    let m = kl_matrix(&nodes, &ck.table, kind)?;
    println!("# row = g, column = f, cell = D(f || g)");
    println!("node\t{}", a.nodes.join("\t"));
    for (name, row) in a.nodes.iter().zip(&m) {
        let cells: Vec<String> = row
            .iter()
            .map(|v| match a.threshold {
                Some(t) if *v < t => format!("{v:.1}*"),
                _ => format!("{v:.1}"),
            })
            .collect();
        println!("{name}\t{}", cells.join("\t"));
    }
    println!("# log det covariance, largest first");
    let named: Vec<(&str, NodeId)> = a.nodes.iter().map(String::as_str).zip(nodes).collect();
    for (name, v) in volume_report(&named, &ck.table)? {
        println!("{name}\t{v:.4}");
    }
    Ok(())
}

fn parse_list<T: FromStr<Err = Error>>(items: &[String]) -> CliResult<Vec<T>> {
    items
        .iter()
        .map(|s| s.parse().map_err(|e: Error| usage(e.to_string())))
        .collect()
}

fn or_single<T: Clone>(list: Vec<T>, base: T) -> Vec<T> {
    if list.is_empty() {
        vec![base]
    } else {
        list
    }
}

fn cmd_sweep(a: SweepArgs) -> CliResult<()> {
    let r = a.hyper.resolve()?;
    let edges = r.require(&a.edges, "edges")?;
    let closure = load_closure(&edges)?;
    let base = &r.cfg;
    let grid = SweepGrid {
        margins: or_single(a.margins.clone(), base.margin),
        init_vars: or_single(a.init_vars.clone(), base.init_var),
        gammas: or_single(a.gammas.clone(), base.gamma),
        kinds: or_single(parse_list(&a.kinds)?, base.kind),
        dims: or_single(a.dims.clone(), base.dim),
        negs: or_single(parse_list(&a.negs)?, base.neg),
        losses: or_single(parse_list(&a.losses)?, base.loss),
    };
    if grid.margins.iter().chain(&grid.init_vars).chain(&grid.gammas).any(|v| !v.is_finite()) {
        return Err(usage("grid values must be finite"));
    }

    let lookup = |n: &str| closure.id(n);
    let (val, test, train) = match (r.path(&a.val, "val"), r.path(&a.test, "test")) {
        (Some(v), Some(t)) => {
            let val = load_labeled_pairs(v, lookup)?;
            let test = load_labeled_pairs(t, lookup)?;
            let train = train_positives(&closure, &[&val, &test]);
            (val, test, train)
        }
        (None, None) => {
            let s = split_closure(&closure, a.n_val, a.n_test, a.split_seed)?;
            (s.val, s.test, s.train)
        }
        _ => return Err(usage("give both --val and --test, or neither")),
    };
    let graded = match (r.path(&a.graded, "graded"), r.path(&a.synsets, "synsets")) {
        (Some(g), Some(s)) => Some(graded_pairs(&load_graded(g)?, &load_synset_map(s)?, lookup)),
        (None, None) => None,
        _ => return Err(usage("give both --graded and --synsets, or neither")),
    };
    let data = RunData {
        closure: &closure,
        train: &train,
        val: &val,
        test: Some(&test),
        graded: graded.as_deref(),
    };
    eprintln!("sweeping {} cells", grid.len());
    let rows = sweep(data, &grid, base, a.parallel)?;
    let mut text = format!("{SWEEP_HEADER}\n");
    for row in &rows {
        text.push_str(&sweep_row_tsv(row));
        text.push('\n');
    }
    match &a.out {
        Some(p) => write_text(p, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) => 1,
        Error::Data(_)
        | Error::Parse { .. }
        | Error::Io { .. }
        | Error::Checkpoint(_)
        | Error::Sampling(_)
        | Error::UndefinedCorrelation(_) => 2,
        Error::Domain(_) | Error::NonFinite { .. } | Error::Diverged(_) | Error::Oracle(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match cli.cmd {
        Cmd::Closure(a) => cmd_closure(a),
        Cmd::Split(a) => cmd_split(a),
        Cmd::Train(a) => cmd_train(a),
        Cmd::EvalHypernym(a) => cmd_eval_hypernym(a),
        Cmd::EvalHyperlex(a) => cmd_eval_hyperlex(a),
        Cmd::Inspect(a) => cmd_inspect(a),
        Cmd::Sweep(a) => cmd_sweep(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
