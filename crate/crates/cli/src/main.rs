//! `farm`: functional-group-aware molecular representation pipeline.

mod commands;
mod config;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use farm_core::par::{with_workers, Execution};

use commands::*;
use config::PipelineConfig;
use error::Result;

#[derive(Debug, Parser)]
#[command(name = "farm", version, about = "Functional-group-aware tokenization, FG graphs, FG knowledge-graph embeddings, link prediction and contrastive alignment")]
struct Cli {
    /// Worker threads for per-molecule stages (0 = all cores, 1 = sequential)
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Log level (error, warn, info, debug, trace)
    #[arg(long, global = true, default_value = "info")]
    log_level: String,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write FG-enhanced token sequences for a SMILES corpus
    Tokenize(TokenizeArgs),
    /// Write FG graphs (JSON lines) for a SMILES corpus
    Fragment(FragmentArgs),
    /// Build the FG knowledge graph triples from a SMILES corpus
    BuildKg(BuildKgArgs),
    /// Train ComplEx embeddings on a triples file
    TrainKge(TrainKgeArgs),
    /// Train the GCN link predictor on FG graphs
    TrainLink(TrainLinkArgs),
    /// Align token sequences with FG graph embeddings
    Align(AlignArgs),
    /// Lexicon diversity statistics and vocabulary
    Lexicon(LexiconArgs),
    /// Run every stage from a TOML config
    Pipeline(PipelineArgs),
    /// Generate a synthetic drug-like SMILES corpus
    GenCorpus(GenCorpusArgs),
}

#[derive(Debug, clap::Args)]
struct PipelineArgs {
    /// TOML config file
    #[arg(long)]
    config: PathBuf,
    /// Seed for every stage (overrides the config)
    #[arg(long, env = "FARM_SEED")]
    seed: Option<u64>,
}

fn run_pipeline(a: &PipelineArgs, exec: Execution) -> Result<()> {
    let mut cfg = PipelineConfig::load(&a.config)?;
    if let Some(seed) = a.seed.or(cfg.seed) {
        cfg = cfg.with_seed(seed);
    }
    let out = cfg.paths.out_dir.clone();
    let corpus = CorpusArgs {
        input: cfg.paths.corpus.clone(),
        strict_valence: cfg.strict_valence,
        max_failure_ratio: cfg.max_failure_ratio,
    };
    let tokens = out.join("tokens.txt");
    let graphs = out.join("graphs.jsonl");
    let triples = out.join("triples.tsv");
    let kge = out.join("kge.txt");
    let gnn = out.join("gnn.txt");
    let vocab = out.join("vocab.tsv");
    log::info!("pipeline: tokenize");
    tokenize_cmd(&TokenizeArgs { corpus: corpus.clone(), output: tokens.clone(), assignments: Some(out.join("assignments.jsonl")) }, exec)?;
    lexicon_cmd(
        &LexiconArgs {
            source: LexiconSource { tokens: Some(tokens.clone()), corpus: None },
            other: None,
            min_freq: cfg.min_frequency,
            vocab_out: Some(vocab.clone()),
            output: Some(out.join("lexicon.json")),
        },
        exec,
    )?;
    log::info!("pipeline: fragment");
    fragment_cmd(&FragmentArgs { corpus: corpus.clone(), output: graphs.clone() }, exec)?;
    log::info!("pipeline: build-kg");
    build_kg_cmd(&BuildKgArgs { corpus, output: triples.clone() }, exec)?;
    log::info!("pipeline: train-kge");
    train_kge_with(&triples, &kge, Some(&out.join("kge_report.jsonl")), &cfg.kge, exec)?;
    log::info!("pipeline: train-link");
    train_link_with(&graphs, &kge, &gnn, Some(&out.join("gnn_report.json")), &cfg.gnn, exec)?;
    log::info!("pipeline: align");
    let gnn_aligned = out.join("gnn_aligned.txt");
    let paths = AlignPaths {
        tokens: &tokens,
        graphs: &graphs,
        gnn: &gnn,
        kge: &kge,
        vocab: Some(&vocab),
        output: &out.join("encoder.txt"),
        metrics: Some(&out.join("align_metrics.jsonl")),
        gnn_output: cfg.align.train_gnn.then_some(gnn_aligned.as_path()),
    };
    align_with(&paths, &cfg.align, exec)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log_level).format_timestamp(None).init();
    let exec = if cli.workers == 1 { Execution::Sequential } else { Execution::Parallel };
    let result = with_workers(cli.workers, || match &cli.cmd {
        Command::Tokenize(a) => tokenize_cmd(a, exec),
        Command::Fragment(a) => fragment_cmd(a, exec),
        Command::BuildKg(a) => build_kg_cmd(a, exec),
        Command::TrainKge(a) => train_kge_cmd(a, exec),
        Command::TrainLink(a) => train_link_cmd(a, exec),
        Command::Align(a) => align_cmd(a, exec),
        Command::Lexicon(a) => lexicon_cmd(a, exec),
        Command::Pipeline(a) => run_pipeline(a, exec),
        Command::GenCorpus(a) => gen_corpus_cmd(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
