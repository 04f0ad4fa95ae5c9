//! End-to-end chaining of the stages over a SMILES corpus.

use crate::align::{prepare_samples, AlignSample};
use crate::fg::detect;
use crate::fragment::{fragment, FgGraph};
use crate::gnn::{train_link, FeatureLookup, GnnConfig, GnnError, LinkModel};
use crate::kg::{build_kg, KgOptions, PrototypeSet, Triple};
use crate::kge::{self, ComplexEmbeddingTable, KgeConfig, KgeError};
use crate::mol::{parse_smiles_with, ParseOptions};
use crate::par::Execution;
use crate::tokenize::{tokenize, TokenCounts, TokenIndex, TokenSeq, Vocab};

#[derive(Debug, Clone, PartialEq)]
pub struct Featurized {
    pub smiles: Vec<String>,
    pub tokens: Vec<TokenSeq>,
    pub graphs: Vec<FgGraph>,
    /// Input positions (0-based) that failed to parse, with the reason.
    pub rejected: Vec<(usize, String)>,
}

/// Tokens and FG graph of every parseable molecule, in input order.
pub fn featurize<S: AsRef<str> + Sync>(smiles: &[S], exec: Execution) -> Featurized {
    featurize_with(smiles, ParseOptions::default(), exec)
}

pub fn featurize_with<S: AsRef<str> + Sync>(smiles: &[S], opts: ParseOptions, exec: Execution) -> Featurized {
    let parts = exec.map(smiles, |s| {
        parse_smiles_with(s.as_ref(), opts).map(|g| {
            let a = detect(&g);
            (tokenize(&g, &a), fragment(&g, &a))
        })
    });
    let mut out = Featurized { smiles: Vec::new(), tokens: Vec::new(), graphs: Vec::new(), rejected: Vec::new() };
    for (i, r) in parts.into_iter().enumerate() {
        match r {
            Ok((t, g)) => {
                out.smiles.push(smiles[i].as_ref().to_string());
                out.tokens.push(t);
                out.graphs.push(g);
            }
            Err(e) => out.rejected.push((i, e.to_string())),
        }
    }
    out
}

impl Featurized {
    pub fn vocab(&self, min_frequency: u64, exec: Execution) -> Vocab {
        let lines: Vec<String> = self.tokens.iter().map(|t| t.to_line()).collect();
        Vocab::from_counts(&TokenCounts::from_lines(&lines, exec), min_frequency)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("no parseable molecules")]
    Empty,
    #[error(transparent)]
    Kge(#[from] KgeError),
    #[error(transparent)]
    Gnn(#[from] GnnError),
}

/// Every learned stage up to the alignment inputs.
#[derive(Debug, Clone)]
pub struct Trained {
    pub data: Featurized,
    pub index: TokenIndex,
    pub triples: Vec<Triple>,
    pub table: ComplexEmbeddingTable,
    pub gnn: LinkModel,
}

impl Trained {
    pub fn feats(&self) -> FeatureLookup<'_> {
        FeatureLookup::new(&self.table)
    }

    pub fn samples(&self) -> Vec<AlignSample> {
        prepare_samples(&self.data.tokens, &self.data.graphs, &self.index).expect("one graph per token sequence")
    }
}

/// Builds the KG from the corpus, then trains ComplEx and the link model.
pub fn train_stages<S: AsRef<str> + Sync>(
    smiles: &[S],
    kge_cfg: &KgeConfig,
    gnn_cfg: &GnnConfig,
    exec: Execution,
) -> Result<Trained, PipelineError> {
    let data = featurize(smiles, exec);
    if data.smiles.is_empty() {
        return Err(PipelineError::Empty);
    }
    let index = data.vocab(1, exec).index();
    let protos = PrototypeSet::from_smiles(&data.smiles, exec);
    let triples = build_kg(&protos, &KgOptions::default(), exec);
    let (table, _) = kge::train(&triples, kge_cfg, exec)?;
    let (gnn, _) = train_link(&data.graphs, &FeatureLookup::new(&table), gnn_cfg, exec)?;
    Ok(Trained { data, index, triples, table, gnn })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn featurize_keeps_order_and_reports_failures() {
        let f = featurize(&["CCO", "C1CC", "c1ccccc1O"], Execution::Sequential);
        assert_eq!(f.smiles, ["CCO", "c1ccccc1O"]);
        assert_eq!(f.graphs[1].num_nodes(), 2);
        assert_eq!(f.rejected.len(), 1);
        assert_eq!(f.rejected[0].0, 1);
    }
}
