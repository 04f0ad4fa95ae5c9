//! Subcommand implementations. Each reads and writes the documented text
//! formats and is deterministic for a fixed seed.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use farm_core::align::{prepare_samples, train_align, AlignConfig};
use farm_core::corpus::{generate_unique, read_corpus, Record};
use farm_core::fg::{assignment_json, detect, FgAssignment};
use farm_core::fragment::{fragment, FgGraph};
use farm_core::gnn::{evaluate_auc, train_link, FeatureLookup, GnnConfig, LinkModel};
use farm_core::kg::{build_kg, read_triples, write_triples, KgOptions, PrototypeSet};
use farm_core::kge::{self, ComplexEmbeddingTable, KgeConfig};
use farm_core::mol::{parse_smiles_with, MolGraph, ParseOptions};
use farm_core::nn::AdamConfig;
use farm_core::par::Execution;
use farm_core::tokenize::{lexicon_report, tokenize, TokenCounts, TokenSeq, Vocab};

use crate::error::{CliError, Result};
use crate::io::{open_input, read_to_string, write_with};

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// Corpus file, one `SMILES[<TAB>id]` per line (`.gz` accepted)
    #[arg(long)]
    pub input: PathBuf,
    /// Reject atoms that exceed every allowed valence
    #[arg(long)]
    pub strict_valence: bool,
    /// Fail (exit 3) when this fraction of records or more does not parse
    #[arg(long, default_value_t = 0.1)]
    pub max_failure_ratio: f64,
}

pub struct Parsed {
    pub record: Record,
    pub mol: MolGraph,
    pub fgs: FgAssignment,
}

/// Parses and annotates every record; failures are logged with line numbers.
pub fn load_corpus(args: &CorpusArgs, exec: Execution) -> Result<Vec<Parsed>> {
    let records = read_corpus(open_input(&args.input)?)?;
    let opts = ParseOptions { strict: args.strict_valence };
    let results = exec.map(&records, |r| parse_smiles_with(&r.smiles, opts).map(|g| (detect(&g), g)));
    let total = records.len();
    let mut out = Vec::with_capacity(total);
    let mut failures = 0;
    for (record, res) in records.into_iter().zip(results) {
        match res {
            Ok((fgs, mol)) => out.push(Parsed { record, mol, fgs }),
            Err(e) => {
                failures += 1;
                log::warn!("{}:{}: {e}; skipped", args.input.display(), record.line);
            }
        }
    }
    if total > 0 {
        let ratio = failures as f64 / total as f64;
        log::info!("{}: {} parsed, {failures} failed", args.input.display(), out.len());
        if ratio >= args.max_failure_ratio && failures > 0 {
            return Err(CliError::Data(format!(
                "{failures} of {total} records failed to parse (ratio {ratio:.3} >= {})",
                args.max_failure_ratio
            )));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Args)]
pub struct TokenizeArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Token file: one molecule per line, tokens space-separated
    #[arg(long)]
    pub output: PathBuf,
    /// Optional JSON-lines dump of the detected FG instances
    #[arg(long)]
    pub assignments: Option<PathBuf>,
}

pub fn tokenize_cmd(a: &TokenizeArgs, exec: Execution) -> Result<()> {
    let parsed = load_corpus(&a.corpus, exec)?;
    let lines = exec.map(&parsed, |p| tokenize(&p.mol, &p.fgs).to_line());
    write_with(&a.output, |w| lines.iter().try_for_each(|l| writeln!(w, "{l}")))?;
    if let Some(path) = &a.assignments {
        let dumps = exec.map(&parsed, |p| assignment_json(&p.mol, &p.fgs).to_string());
        write_with(path, |w| dumps.iter().try_for_each(|l| writeln!(w, "{l}")))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct FragmentArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// FG graph file (JSON lines)
    #[arg(long)]
    pub output: PathBuf,
}

pub fn fragment_cmd(a: &FragmentArgs, exec: Execution) -> Result<()> {
    let parsed = load_corpus(&a.corpus, exec)?;
    let lines = exec.map(&parsed, |p| fragment(&p.mol, &p.fgs).to_json_line());
    write_with(&a.output, |w| lines.iter().try_for_each(|l| writeln!(w, "{l}")))?;
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct BuildKgArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Triples file: `head<TAB>relation<TAB>tail`
    #[arg(long)]
    pub output: PathBuf,
}

pub fn build_kg_cmd(a: &BuildKgArgs, exec: Execution) -> Result<()> {
    let parsed = load_corpus(&a.corpus, exec)?;
    let smiles: Vec<&str> = parsed.iter().map(|p| p.record.smiles.as_str()).collect();
    let protos = PrototypeSet::from_smiles(&smiles, exec);
    let triples = build_kg(&protos, &KgOptions::default(), exec);
    log::info!("{} FG entities, {} triples", protos.len(), triples.len());
    write_with(&a.output, |w| write_triples(w, &triples))?;
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct TrainKgeArgs {
    /// Triples file
    #[arg(long)]
    pub triples: PathBuf,
    /// Embedding file to write
    #[arg(long)]
    pub output: PathBuf,
    /// Complex embedding dimension
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    /// Ranking margin
    #[arg(long, default_value_t = 1.0)]
    pub margin: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    /// Corrupted triples per positive
    #[arg(long, default_value_t = 1)]
    pub negatives: usize,
    #[arg(long, default_value_t = 0.0)]
    pub momentum: f64,
    /// Score with the conjugated tail (standard ComplEx)
    #[arg(long)]
    pub conjugate_tail: bool,
    #[arg(long, env = "FARM_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Per-epoch loss report (JSON lines)
    #[arg(long)]
    pub report: Option<PathBuf>,
}

impl TrainKgeArgs {
    pub fn config(&self) -> KgeConfig {
        KgeConfig {
            dim: self.dim,
            margin: self.margin,
            learning_rate: self.lr,
            batch_size: self.batch,
            epochs: self.epochs,
            negatives_per_positive: self.negatives,
            seed: self.seed,
            conjugate_tail: self.conjugate_tail,
            momentum: self.momentum,
            ..KgeConfig::default()
        }
    }
}

pub fn train_kge_cmd(a: &TrainKgeArgs, exec: Execution) -> Result<()> {
    train_kge_with(&a.triples, &a.output, a.report.as_deref(), &a.config(), exec)
}

pub fn train_kge_with(triples: &Path, output: &Path, report: Option<&Path>, cfg: &KgeConfig, exec: Execution) -> Result<()> {
    let triples = read_triples(open_input(triples)?)?;
    let (table, rep) = kge::train(&triples, cfg, exec)?;
    write_with(output, |w| table.write(w))?;
    if let Some(path) = report {
        write_with(path, |w| {
            for (i, l) in rep.epoch_losses.iter().enumerate() {
                writeln!(w, "{}", serde_json::json!({"epoch": i + 1, "loss": l}))?;
            }
            writeln!(w, "{}", serde_json::json!({"margin_fraction": rep.margin_fraction}))
        })?;
    }
    Ok(())
}

pub fn read_graphs(path: &Path) -> Result<Vec<FgGraph>> {
    let text = read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| FgGraph::from_json_line(l).map_err(|e| CliError::Data(format!("{}:{}: {e}", path.display(), i + 1))))
        .collect()
}

pub fn read_table(path: &Path) -> Result<ComplexEmbeddingTable> {
    Ok(ComplexEmbeddingTable::read(open_input(path)?)?)
}

#[derive(Debug, Clone, Args)]
pub struct TrainLinkArgs {
    /// FG graph file (JSON lines)
    #[arg(long)]
    pub graphs: PathBuf,
    /// KGE embedding file supplying node features
    #[arg(long)]
    pub kge: PathBuf,
    /// Model file to write
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub epochs: usize,
    /// Hidden width (default: the KGE dimension)
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    /// Graphs per optimizer step
    #[arg(long, default_value_t = 8)]
    pub batch: usize,
    /// Fraction of node pairs sampled for graphs with more than three nodes
    #[arg(long, default_value_t = 0.6)]
    pub sample_rate: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub lr: f64,
    #[arg(long, env = "FARM_SEED", default_value_t = 0)]
    pub seed: u64,
    /// JSON report with epoch losses and training ROC-AUC
    #[arg(long)]
    pub report: Option<PathBuf>,
}

impl TrainLinkArgs {
    pub fn config(&self) -> GnnConfig {
        GnnConfig {
            hidden: self.hidden,
            layers: self.layers,
            epochs: self.epochs,
            batch_graphs: self.batch,
            sample_rate: self.sample_rate,
            adam: AdamConfig { lr: self.lr, ..Default::default() },
            seed: self.seed,
        }
    }
}

pub fn train_link_cmd(a: &TrainLinkArgs, exec: Execution) -> Result<()> {
    train_link_with(&a.graphs, &a.kge, &a.output, a.report.as_deref(), &a.config(), exec)
}

pub fn train_link_with(graphs: &Path, kge: &Path, output: &Path, report: Option<&Path>, cfg: &GnnConfig, exec: Execution) -> Result<()> {
    let graphs = read_graphs(graphs)?;
    let table = read_table(kge)?;
    let feats = FeatureLookup::new(&table);
    let (model, rep) = train_link(&graphs, &feats, cfg, exec)?;
    if rep.unknown_nodes > 0 {
        log::warn!("{} nodes had no KGE entity and used the mean vector", rep.unknown_nodes);
    }
    write_with(output, |w| model.write(w))?;
    if let Some(path) = report {
        let auc = evaluate_auc(&model, &graphs, &feats)?;
        let v = serde_json::json!({"epoch_losses": rep.epoch_losses, "unknown_nodes": rep.unknown_nodes, "train_auc": auc});
        write_with(path, |w| writeln!(w, "{v}"))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct AlignArgs {
    /// Token file
    #[arg(long)]
    pub tokens: PathBuf,
    /// FG graph file, one line per token line
    #[arg(long)]
    pub graphs: PathBuf,
    /// Link model file
    #[arg(long)]
    pub gnn: PathBuf,
    /// KGE embedding file used as node features
    #[arg(long)]
    pub kge: PathBuf,
    /// Vocabulary TSV (default: built from the token file)
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Encoder file to write
    #[arg(long)]
    pub output: PathBuf,
    /// Per-epoch metrics (JSON lines; default stdout)
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    /// Where to write the link model when it is trained jointly
    #[arg(long)]
    pub gnn_output: Option<PathBuf>,
    /// Contrastive margin
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda_mlm: f64,
    #[arg(long, default_value_t = 0.5)]
    pub lambda_cl: f64,
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    #[arg(long, default_value_t = 126)]
    pub batch: usize,
    #[arg(long, default_value_t = 0.35)]
    pub mask_rate: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Token embedding width
    #[arg(long, default_value_t = 64)]
    pub embed_dim: usize,
    /// Context half-width for masked-token prediction
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    /// Backpropagate the contrastive loss into the link model
    #[arg(long)]
    pub train_gnn: bool,
    /// Also use another molecule of the batch as a negative
    #[arg(long)]
    pub in_batch_negatives: bool,
    #[arg(long, env = "FARM_SEED", default_value_t = 0)]
    pub seed: u64,
}

impl AlignArgs {
    pub fn config(&self) -> AlignConfig {
        AlignConfig {
            margin: self.gamma,
            lambda_mlm: self.lambda_mlm,
            lambda_cl: self.lambda_cl,
            batch_size: self.batch,
            epochs: self.epochs,
            mask_rate: self.mask_rate,
            seed: self.seed,
            embed_dim: self.embed_dim,
            window: self.window,
            adam: AdamConfig { lr: self.lr, ..Default::default() },
            train_gnn: self.train_gnn,
            in_batch_negatives: self.in_batch_negatives,
        }
    }
}

pub fn read_tokens(path: &Path) -> Result<Vec<TokenSeq>> {
    let text = read_to_string(path)?;
    text.lines()
        .enumerate()
        .map(|(i, l)| TokenSeq::from_line(l).map_err(|e| CliError::Data(format!("{}:{}: {e}", path.display(), i + 1))))
        .collect()
}

pub struct AlignPaths<'a> {
    pub tokens: &'a Path,
    pub graphs: &'a Path,
    pub gnn: &'a Path,
    pub kge: &'a Path,
    pub vocab: Option<&'a Path>,
    pub output: &'a Path,
    pub metrics: Option<&'a Path>,
    pub gnn_output: Option<&'a Path>,
}

pub fn align_cmd(a: &AlignArgs, exec: Execution) -> Result<()> {
    let paths = AlignPaths {
        tokens: &a.tokens,
        graphs: &a.graphs,
        gnn: &a.gnn,
        kge: &a.kge,
        vocab: a.vocab.as_deref(),
        output: &a.output,
        metrics: a.metrics.as_deref(),
        gnn_output: a.gnn_output.as_deref(),
    };
    align_with(&paths, &a.config(), exec)
}

pub fn align_with(p: &AlignPaths, cfg: &AlignConfig, exec: Execution) -> Result<()> {
    let tokens = read_tokens(p.tokens)?;
    let graphs = read_graphs(p.graphs)?;
    let vocab = match p.vocab {
        Some(v) => Vocab::read_tsv(open_input(v)?)?,
        None => {
            let lines: Vec<String> = tokens.iter().map(|t| t.to_line()).collect();
            Vocab::from_counts(&TokenCounts::from_lines(&lines, exec), 1)
        }
    };
    let index = vocab.index();
    let table = read_table(p.kge)?;
    let feats = FeatureLookup::new(&table);
    let mut gnn = LinkModel::read(open_input(p.gnn)?)?;
    if gnn.in_dim != feats.dim() {
        return Err(CliError::Data(format!("link model expects {} features, KGE gives {}", gnn.in_dim, feats.dim())));
    }
    let samples = prepare_samples(&tokens, &graphs, &index)?;
    let mut metrics: Vec<String> = Vec::new();
    let (enc, _) = train_align(&samples, index.len(), &mut gnn, &feats, cfg, exec, |m| {
        metrics.push(serde_json::to_string(m).expect("metrics serialize"));
    })?;
    write_with(p.output, |w| enc.write(w, &index))?;
    match p.metrics {
        Some(path) => write_with(path, |w| metrics.iter().try_for_each(|l| writeln!(w, "{l}")))?,
        None => {
            let mut out = std::io::stdout().lock();
            for l in &metrics {
                writeln!(out, "{l}")?;
            }
        }
    }
    if let Some(path) = p.gnn_output {
        write_with(path, |w| gnn.write(w))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false, id = "source")]
pub struct LexiconSource {
    /// Token file
    #[arg(long)]
    pub tokens: Option<PathBuf>,
    /// SMILES corpus, tokenized on the fly
    #[arg(long)]
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct LexiconArgs {
    #[command(flatten)]
    pub source: LexiconSource,
    /// Second token file; reports the share of its tokens covered by this vocabulary
    #[arg(long)]
    pub other: Option<PathBuf>,
    /// Minimum count for the coverage vocabulary
    #[arg(long, default_value_t = 1)]
    pub min_freq: u64,
    /// Write the vocabulary TSV (`token<TAB>count`)
    #[arg(long)]
    pub vocab_out: Option<PathBuf>,
    /// Report file (default stdout)
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn token_lines(a: &LexiconSource, exec: Execution) -> Result<Vec<String>> {
    if let Some(t) = &a.tokens {
        return Ok(read_to_string(t)?.lines().map(String::from).collect());
    }
    let corpus = a.corpus.clone().expect("clap enforces one source");
    let args = CorpusArgs { input: corpus, strict_valence: false, max_failure_ratio: 1.0 };
    let parsed = load_corpus(&args, exec)?;
    Ok(exec.map(&parsed, |p| tokenize(&p.mol, &p.fgs).to_line()))
}

pub fn lexicon_cmd(a: &LexiconArgs, exec: Execution) -> Result<()> {
    let lines = token_lines(&a.source, exec)?;
    let other: Option<Vec<String>> =
        a.other.as_ref().map(|p| read_to_string(p).map(|s| s.lines().map(String::from).collect())).transpose()?;
    let stats = lexicon_report(&lines, other.as_deref(), a.min_freq, exec);
    let json = serde_json::to_string_pretty(&stats)?;
    match &a.output {
        Some(p) => write_with(p, |w| writeln!(w, "{json}"))?,
        None => println!("{json}"),
    }
    if let Some(p) = &a.vocab_out {
        let vocab = Vocab::from_counts(&TokenCounts::from_lines(&lines, exec), a.min_freq);
        write_with(p, |w| vocab.write_tsv(w))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct GenCorpusArgs {
    /// Number of distinct molecules
    #[arg(long, default_value_t = 10_000)]
    pub count: usize,
    #[arg(long, env = "FARM_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
    /// Corpus whose molecules must not be repeated (for held-out sets)
    #[arg(long)]
    pub exclude: Option<PathBuf>,
}

pub fn gen_corpus_cmd(a: &GenCorpusArgs) -> Result<()> {
    let exclude = match &a.exclude {
        Some(p) => read_corpus(open_input(p)?)?.into_iter().map(|r| r.smiles).collect(),
        None => Default::default(),
    };
    let mols = generate_unique(a.count, a.seed, &exclude);
    write_with(&a.output, |w| mols.iter().try_for_each(|m| writeln!(w, "{m}")))?;
    Ok(())
}
