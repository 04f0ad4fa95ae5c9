//! Contrastive alignment of sequence and FG-graph views of a molecule.
//!
//! The sequence side is a small masked-token encoder: a token embedding
//! table, a context vector that is the mean of unmasked neighbours within a
//! window, and a softmax over the real vocabulary. The molecule's sequence
//! embedding is a linear projection of its mean token embedding. The graph
//! side is the link-prediction GCN, mean pooled.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::io::{self, BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fragment::FgGraph;
use crate::gnn::{FeatureLookup, Forward, LinkModel, PreparedGraph};
use crate::mol::TokenKind;
use crate::nn::{self, Adam, AdamConfig};
use crate::par::Execution;
use crate::tokenize::{TokenIndex, TokenSeq, NUM_RESERVED};

const HEADER: &str = "FARM-ENC v1";
/// Samples per gradient shard; fixed so results do not depend on thread count.
const SHARD: usize = 16;

#[derive(Debug, thiserror::Error)]
pub enum AlignError {
    #[error("{tokens} token sequences but {graphs} graphs")]
    Mismatch { tokens: usize, graphs: usize },
    #[error("no samples to train on")]
    Empty,
    #[error("invalid config: {0}")]
    Config(String),
    #[error("graph {0}: {1}")]
    Graph(usize, String),
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFinite { epoch: usize, batch: usize },
    #[error("encoder file line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignConfig {
    pub margin: f64,
    pub lambda_mlm: f64,
    pub lambda_cl: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub mask_rate: f64,
    pub seed: u64,
    pub embed_dim: usize,
    pub window: usize,
    pub adam: AdamConfig,
    /// Backpropagate the contrastive loss into the GCN as well.
    pub train_gnn: bool,
    /// Add one other molecule of the batch as an extra negative per sample.
    pub in_batch_negatives: bool,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            margin: 0.5,
            lambda_mlm: 1.0,
            lambda_cl: 0.5,
            batch_size: 126,
            epochs: 5,
            mask_rate: 0.35,
            seed: 0,
            embed_dim: 64,
            window: 5,
            adam: AdamConfig::default(),
            train_gnn: false,
            in_batch_negatives: false,
        }
    }
}

impl AlignConfig {
    /// Small-corpus settings: batch 4, lr 0.01, GCN trained jointly.
    pub fn toy(seed: u64) -> Self {
        AlignConfig { batch_size: 4, adam: AdamConfig { lr: 0.01, ..Default::default() }, train_gnn: true, seed, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), AlignError> {
        let bad = |m: &str| Err(AlignError::Config(m.to_string()));
        if !(self.margin > 0.0) {
            return bad("margin must be positive");
        }
        if !(0.0..=1.0).contains(&self.mask_rate) {
            return bad("mask_rate must be in [0, 1]");
        }
        if !(self.lambda_mlm >= 0.0) || !(self.lambda_cl >= 0.0) {
            return bad("loss weights must be non-negative");
        }
        if self.batch_size == 0 || self.embed_dim == 0 {
            return bad("batch_size and embed_dim must be positive");
        }
        Ok(())
    }
}

/// Masked positions and the token ids they held.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskingSpec {
    pub positions: Vec<usize>,
    pub originals: Vec<usize>,
}

/// Atom-token positions whose token is in the vocabulary.
pub fn maskable_positions(ts: &TokenSeq, index: &TokenIndex) -> Vec<usize> {
    ts.tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.kind == TokenKind::Atom && index.id(&t.text) >= NUM_RESERVED)
        .map(|(i, _)| i)
        .collect()
}

/// Uniform mask of `max(1, round(rate * |maskable|))` positions, sorted.
pub fn sample_mask<R: Rng>(ids: &[usize], maskable: &[usize], rate: f64, rng: &mut R) -> MaskingSpec {
    if maskable.is_empty() {
        return MaskingSpec { positions: Vec::new(), originals: Vec::new() };
    }
    let k = ((rate * maskable.len() as f64).round() as usize).clamp(1, maskable.len());
    let mut positions: Vec<usize> = rand::seq::index::sample(rng, maskable.len(), k).into_iter().map(|i| maskable[i]).collect();
    positions.sort_unstable();
    let originals = positions.iter().map(|&p| ids[p]).collect();
    MaskingSpec { positions, originals }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AugmentMode {
    Delete,
    Swap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("graph cannot be augmented with {0:?}")]
pub struct NotAugmentable(pub AugmentMode);

/// Weisfeiler-Lehman colour multiset over node entity ids. Graphs with
/// different signatures are never isomorphic.
pub fn wl_signature(g: &FgGraph) -> Vec<u64> {
    let adj = g.adjacency();
    let mut colors: Vec<u64> = g
        .nodes
        .iter()
        .map(|n| {
            let mut h = DefaultHasher::new();
            n.entity_id().hash(&mut h);
            h.finish()
        })
        .collect();
    for _ in 0..g.num_nodes().max(1) {
        colors = (0..colors.len())
            .map(|i| {
                let mut nb: Vec<u64> = adj[i].iter().map(|&j| colors[j]).collect();
                nb.sort_unstable();
                let mut h = DefaultHasher::new();
                (colors[i], nb).hash(&mut h);
                h.finish()
            })
            .collect();
    }
    colors.sort_unstable();
    let mut sig = vec![g.num_nodes() as u64, g.edges.len() as u64];
    sig.extend(colors);
    sig
}

/// A negative view of `g`. Deletion drops one uniform node and its edges;
/// swapping exchanges the payloads of two nodes with different entities and
/// is retried until the result is not isomorphic to `g`.
pub fn augment_negative<R: Rng>(g: &FgGraph, mode: AugmentMode, rng: &mut R) -> Result<FgGraph, NotAugmentable> {
    let n = g.num_nodes();
    match mode {
        AugmentMode::Delete => {
            if n < 2 {
                return Err(NotAugmentable(mode));
            }
            let k = rng.gen_range(0..n);
            let keep: Vec<usize> = (0..n).filter(|&i| i != k).collect();
            let mut map = vec![usize::MAX; n];
            for (new, &old) in keep.iter().enumerate() {
                map[old] = new;
            }
            let nodes = keep.iter().map(|&i| g.nodes[i].clone()).collect();
            let edges: Vec<(usize, usize)> =
                g.edges.iter().filter(|&&(a, b)| a != k && b != k).map(|&(a, b)| (map[a], map[b])).collect();
            Ok(FgGraph::new(g.source_smiles.clone(), nodes, edges).expect("deletion keeps validity"))
        }
        AugmentMode::Swap => {
            let ids: Vec<String> = g.nodes.iter().map(|x| x.entity_id()).collect();
            let mut pairs: Vec<(usize, usize)> = crate::gnn::all_pairs(n).into_iter().filter(|&(i, j)| ids[i] != ids[j]).collect();
            let sig = wl_signature(g);
            pairs.shuffle(rng);
            for (i, j) in pairs {
                let mut out = g.clone();
                out.nodes.swap(i, j);
                if wl_signature(&out) != sig {
                    return Ok(out);
                }
            }
            Err(NotAugmentable(mode))
        }
    }
}

/// Mode drawn uniformly; the other mode is tried if the first is impossible.
pub fn random_negative<R: Rng>(g: &FgGraph, rng: &mut R) -> Result<(FgGraph, AugmentMode), NotAugmentable> {
    let first = if rng.gen_bool(0.5) { AugmentMode::Delete } else { AugmentMode::Swap };
    let second = if first == AugmentMode::Delete { AugmentMode::Swap } else { AugmentMode::Delete };
    augment_negative(g, first, rng)
        .map(|x| (x, first))
        .or_else(|_| augment_negative(g, second, rng).map(|x| (x, second)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedEmbedding {
    pub h_seq: Vec<f64>,
    pub h_pos: Vec<f64>,
    pub h_neg: Vec<f64>,
}

/// Per-pair hinge `max(0, margin - cos(seq, pos) + cos(seq, neg))`.
pub fn pair_hinge(p: &PairedEmbedding, margin: f64) -> f64 {
    (margin - nn::cosine(&p.h_seq, &p.h_pos) + nn::cosine(&p.h_seq, &p.h_neg)).max(0.0)
}

/// Mean hinge over the batch; 0 for an empty batch.
pub fn contrastive_loss(batch: &[PairedEmbedding], margin: f64) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    batch.iter().map(|p| pair_hinge(p, margin)).sum::<f64>() / batch.len() as f64
}

/// d cos(a, b) / d a.
fn cosine_grad(a: &[f64], b: &[f64]) -> Vec<f64> {
    let (na, nb) = (nn::norm(a), nn::norm(b));
    if na == 0.0 || nb == 0.0 {
        return vec![0.0; a.len()];
    }
    let c = nn::dot(a, b) / (na * nb);
    a.iter().zip(b).map(|(x, y)| y / (na * nb) - c * x / (na * na)).collect()
}

/// Token embedding table plus sequence-to-graph projection, in one flat
/// parameter vector: `vocab x dim` embeddings then `graph_dim x dim` projection.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    pub vocab: usize,
    pub dim: usize,
    pub graph_dim: usize,
    pub window: usize,
    pub theta: Vec<f64>,
}

impl Encoder {
    pub fn new(vocab: usize, dim: usize, graph_dim: usize, window: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut theta = vec![0.0; vocab * dim + graph_dim * dim];
        for x in theta[..vocab * dim].iter_mut() {
            *x = rng.gen_range(-0.1..0.1);
        }
        nn::glorot(&mut theta[vocab * dim..], graph_dim, dim, &mut rng);
        Encoder { vocab, dim, graph_dim, window, theta }
    }

    pub fn emb(&self, id: usize) -> &[f64] {
        &self.theta[id * self.dim..(id + 1) * self.dim]
    }

    fn proj_offset(&self) -> usize {
        self.vocab * self.dim
    }

    fn mean_embedding(&self, ids: &[usize]) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for &t in ids {
            for (a, b) in m.iter_mut().zip(self.emb(t)) {
                *a += b;
            }
        }
        if !ids.is_empty() {
            m.iter_mut().for_each(|a| *a /= ids.len() as f64);
        }
        m
    }

    /// Projected mean token embedding.
    pub fn sequence_embedding(&self, ids: &[usize]) -> Vec<f64> {
        let m = self.mean_embedding(ids);
        let p = &self.theta[self.proj_offset()..];
        (0..self.graph_dim).map(|r| nn::dot(&p[r * self.dim..(r + 1) * self.dim], &m)).collect()
    }

    /// Adds `scale * d(h_seq)/d(theta)^T d_h` into `grad`.
    fn sequence_backward(&self, ids: &[usize], d_h: &[f64], scale: f64, grad: &mut [f64]) {
        if ids.is_empty() {
            return;
        }
        let m = self.mean_embedding(ids);
        let po = self.proj_offset();
        let mut dm = vec![0.0; self.dim];
        for r in 0..self.graph_dim {
            let g = scale * d_h[r];
            for c in 0..self.dim {
                grad[po + r * self.dim + c] += g * m[c];
                dm[c] += g * self.theta[po + r * self.dim + c];
            }
        }
        let k = ids.len() as f64;
        for &t in ids {
            for c in 0..self.dim {
                grad[t * self.dim + c] += dm[c] / k;
            }
        }
    }

    fn context(&self, ids: &[usize], masked: &[bool], i: usize) -> Vec<usize> {
        let lo = i.saturating_sub(self.window);
        let hi = (i + self.window).min(ids.len() - 1);
        (lo..=hi).filter(|&j| j != i && !masked[j]).map(|j| ids[j]).collect()
    }

    /// Mean negative log-likelihood of the masked tokens under a softmax
    /// over the real (non-reserved) vocabulary.
    pub fn mlm_loss(&self, ids: &[usize], spec: &MaskingSpec) -> f64 {
        self.mlm_inner(ids, spec, 0.0, &mut [])
    }

    /// Loss as in [`Encoder::mlm_loss`], adding `scale * gradient` into `grad`.
    pub fn mlm_loss_grad(&self, ids: &[usize], spec: &MaskingSpec, scale: f64, grad: &mut [f64]) -> f64 {
        self.mlm_inner(ids, spec, scale, grad)
    }

    fn mlm_inner(&self, ids: &[usize], spec: &MaskingSpec, scale: f64, grad: &mut [f64]) -> f64 {
        let real = NUM_RESERVED..self.vocab;
        if spec.positions.is_empty() || real.is_empty() {
            return 0.0;
        }
        let want_grad = !grad.is_empty();
        let mut masked = vec![false; ids.len()];
        for &p in &spec.positions {
            masked[p] = true;
        }
        let w = 1.0 / spec.positions.len() as f64;
        let mut loss = 0.0;
        for (&p, &target) in spec.positions.iter().zip(&spec.originals) {
            let ctx = self.context(ids, &masked, p);
            let c = self.mean_embedding(&ctx);
            let logits: Vec<f64> = real.clone().map(|v| nn::dot(self.emb(v), &c)).collect();
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = logits.iter().map(|l| (l - max).exp()).sum();
            let log_z = max + z.ln();
            let t = target - NUM_RESERVED;
            loss += w * (log_z - logits[t]);
            if want_grad {
                let mut dc = vec![0.0; self.dim];
                for (k, v) in real.clone().enumerate() {
                    let d = scale * w * ((logits[k] - log_z).exp() - if k == t { 1.0 } else { 0.0 });
                    for i in 0..self.dim {
                        grad[v * self.dim + i] += d * c[i];
                        dc[i] += d * self.theta[v * self.dim + i];
                    }
                }
                if !ctx.is_empty() {
                    let n = ctx.len() as f64;
                    for &u in &ctx {
                        for i in 0..self.dim {
                            grad[u * self.dim + i] += dc[i] / n;
                        }
                    }
                }
            }
        }
        loss
    }

    pub fn write<W: Write>(&self, mut w: W, index: &TokenIndex) -> io::Result<()> {
        writeln!(w, "{HEADER} vocab={} dim={} graph_dim={} window={}", self.vocab, self.dim, self.graph_dim, self.window)?;
        let row = |w: &mut W, name: &str, xs: &[f64]| -> io::Result<()> {
            let vals: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
            writeln!(w, "{name}\t{}", vals.join(" "))
        };
        for v in 0..self.vocab {
            row(&mut w, &index.names[v], self.emb(v))?;
        }
        let po = self.proj_offset();
        for r in 0..self.graph_dim {
            row(&mut w, &format!("proj{r}"), &self.theta[po + r * self.dim..po + (r + 1) * self.dim])?;
        }
        Ok(())
    }

    /// Reads an encoder file, returning the token names in id order.
    pub fn read<R: BufRead>(r: R) -> Result<(Encoder, Vec<String>), AlignError> {
        let bad = |line: usize, msg: &str| AlignError::Format { line, msg: msg.to_string() };
        let mut lines = r.lines();
        let head = lines.next().ok_or_else(|| bad(1, "missing header"))??;
        let rest = head.strip_prefix(HEADER).ok_or_else(|| bad(1, "bad magic"))?;
        let mut f = std::collections::HashMap::new();
        for kv in rest.split_whitespace() {
            if let Some((k, v)) = kv.split_once('=') {
                f.insert(k.to_string(), v.parse::<usize>().map_err(|_| bad(1, "bad header value"))?);
            }
        }
        let get = |k: &str| f.get(k).copied().ok_or_else(|| bad(1, &format!("missing {k}")));
        let (vocab, dim, graph_dim, window) = (get("vocab")?, get("dim")?, get("graph_dim")?, get("window")?);
        let mut names = Vec::new();
        let mut theta = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            let (name, vals) = line.split_once('\t').ok_or_else(|| bad(i + 2, "expected name<TAB>values"))?;
            let before = theta.len();
            for v in vals.split(' ') {
                theta.push(v.parse::<f64>().map_err(|_| bad(i + 2, "bad number"))?);
            }
            if theta.len() - before != dim {
                return Err(bad(i + 2, "wrong row width"));
            }
            if names.len() < vocab {
                names.push(name.to_string());
            }
        }
        if theta.len() != (vocab + graph_dim) * dim {
            return Err(bad(0, "row count does not match header"));
        }
        Ok((Encoder { vocab, dim, graph_dim, window, theta }, names))
    }
}

/// One molecule ready for alignment.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignSample {
    pub ids: Vec<usize>,
    pub maskable: Vec<usize>,
    pub graph: FgGraph,
}

pub fn prepare_samples(tokens: &[TokenSeq], graphs: &[FgGraph], index: &TokenIndex) -> Result<Vec<AlignSample>, AlignError> {
    if tokens.len() != graphs.len() {
        return Err(AlignError::Mismatch { tokens: tokens.len(), graphs: graphs.len() });
    }
    Ok(tokens
        .iter()
        .zip(graphs)
        .map(|(ts, g)| AlignSample {
            ids: ts.tokens.iter().map(|t| index.id(&t.text)).collect(),
            maskable: maskable_positions(ts, index),
            graph: g.clone(),
        })
        .collect())
}

fn prepared(g: &FgGraph, feats: &FeatureLookup) -> PreparedGraph {
    PreparedGraph { adj: g.adjacency(), x: feats.graph(g), source: g.clone() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub l_mlm: f64,
    pub l_cl: f64,
    pub l_integration: f64,
    /// Fraction of pairs with cos(seq, pos) > cos(seq, neg) after the epoch.
    pub pos_gt_neg: f64,
    pub pairs: usize,
    /// Samples whose negative came from another molecule.
    pub in_batch_fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignReport {
    pub epochs: Vec<EpochMetrics>,
}

/// Work item for one sample in one step.
#[derive(Debug, Clone)]
pub struct Job {
    pub sample: usize,
    pub mask: MaskingSpec,
    /// Negative graphs for the hinge terms (augmented first).
    pub negatives: Vec<FgGraph>,
}

#[derive(Debug, Clone, Default)]
struct Partial {
    mlm: f64,
    mlm_n: usize,
    cl: f64,
    cl_n: usize,
    enc: Vec<f64>,
    gnn: Vec<f64>,
}

fn graph_embed(gnn: &LinkModel, g: &PreparedGraph) -> (Forward, Vec<f64>) {
    let fw = gnn.forward(&g.adj, &g.x).expect("feature width matches the model");
    let h = nn::mean_rows(&fw.out, gnn.hidden);
    (fw, h)
}

/// Losses and gradients for one batch. Each sample contributes
/// `lambda_mlm * mlm / n_mlm + lambda_cl * hinge / n_pairs`.
pub fn batch_objective(
    enc: &Encoder,
    gnn: &LinkModel,
    feats: &FeatureLookup,
    samples: &[AlignSample],
    jobs: &[Job],
    cfg: &AlignConfig,
    exec: Execution,
) -> (f64, f64, f64, Vec<f64>, Vec<f64>) {
    let n_mlm = jobs.iter().filter(|j| !j.mask.positions.is_empty()).count().max(1) as f64;
    let n_cl = jobs.iter().map(|j| j.negatives.len()).sum::<usize>().max(1) as f64;
    let shards: Vec<&[Job]> = jobs.chunks(SHARD).collect();
    let parts = exec.map(&shards, |shard| {
        let mut p = Partial {
            enc: vec![0.0; enc.theta.len()],
            gnn: if cfg.train_gnn { vec![0.0; gnn.theta.len()] } else { Vec::new() },
            ..Default::default()
        };
        for job in shard.iter() {
            let s = &samples[job.sample];
            if !job.mask.positions.is_empty() {
                p.mlm += enc.mlm_loss_grad(&s.ids, &job.mask, cfg.lambda_mlm / n_mlm, &mut p.enc);
                p.mlm_n += 1;
            }
            if job.negatives.is_empty() {
                continue;
            }
            let h_seq = enc.sequence_embedding(&s.ids);
            let pos_g = prepared(&s.graph, feats);
            let (pos_fw, h_pos) = graph_embed(gnn, &pos_g);
            for neg in &job.negatives {
                let neg_g = prepared(neg, feats);
                let (neg_fw, h_neg) = graph_embed(gnn, &neg_g);
                let pe = PairedEmbedding { h_seq: h_seq.clone(), h_pos: h_pos.clone(), h_neg };
                let hinge = pair_hinge(&pe, cfg.margin);
                p.cl += hinge;
                p.cl_n += 1;
                if hinge <= 0.0 {
                    continue;
                }
                let scale = cfg.lambda_cl / n_cl;
                let gp = cosine_grad(&pe.h_seq, &pe.h_pos);
                let gn = cosine_grad(&pe.h_seq, &pe.h_neg);
                let d_seq: Vec<f64> = gn.iter().zip(&gp).map(|(a, b)| a - b).collect();
                enc.sequence_backward(&s.ids, &d_seq, scale, &mut p.enc);
                if cfg.train_gnn {
                    for (g, fw, sign, h) in [(&pos_g, &pos_fw, -1.0, &pe.h_pos), (&neg_g, &neg_fw, 1.0, &pe.h_neg)] {
                        let dh = cosine_grad(h, &pe.h_seq);
                        let k = g.x.len() as f64;
                        let d_emb = vec![dh.iter().map(|x| sign * scale * x / k).collect::<Vec<f64>>(); g.x.len()];
                        gnn.gcn_backward(&g.adj, fw, d_emb, &mut p.gnn);
                    }
                }
            }
        }
        p
    });
    let mut total = Partial { enc: vec![0.0; enc.theta.len()], gnn: vec![0.0; gnn.theta.len()], ..Default::default() };
    for p in parts {
        total.mlm += p.mlm;
        total.mlm_n += p.mlm_n;
        total.cl += p.cl;
        total.cl_n += p.cl_n;
        for (a, b) in total.enc.iter_mut().zip(&p.enc) {
            *a += b;
        }
        for (a, b) in total.gnn.iter_mut().zip(&p.gnn) {
            *a += b;
        }
    }
    let l_mlm = total.mlm / total.mlm_n.max(1) as f64;
    let l_cl = total.cl / total.cl_n.max(1) as f64;
    let l = cfg.lambda_mlm * l_mlm + cfg.lambda_cl * l_cl;
    (l_mlm, l_cl, l, total.enc, total.gnn)
}

/// Draws the mask and negatives for every sample of a batch.
fn make_jobs<R: Rng>(samples: &[AlignSample], batch: &[usize], sigs: &[Vec<u64>], cfg: &AlignConfig, rng: &mut R) -> (Vec<Job>, usize) {
    let mut fallbacks = 0;
    let jobs = batch
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            let s = &samples[i];
            let mask = sample_mask(&s.ids, &s.maskable, cfg.mask_rate, rng);
            let mut negatives = Vec::new();
            let other = || {
                (1..batch.len())
                    .map(|d| batch[(k + d) % batch.len()])
                    .find(|&j| sigs[j] != sigs[i])
                    .map(|j| samples[j].graph.clone())
            };
            match random_negative(&s.graph, rng) {
                Ok((g, _)) => negatives.push(g),
                Err(_) => {
                    if let Some(g) = other() {
                        fallbacks += 1;
                        negatives.push(g);
                    }
                }
            }
            if cfg.in_batch_negatives {
                if let Some(g) = other() {
                    negatives.push(g);
                }
            }
            Job { sample: i, mask, negatives }
        })
        .collect();
    (jobs, fallbacks)
}

/// Fraction of samples whose positive cosine beats the primary (augmented or
/// fallback) negative; extra in-batch negatives are not counted.
pub fn pair_accuracy(enc: &Encoder, gnn: &LinkModel, feats: &FeatureLookup, samples: &[AlignSample], jobs: &[Job]) -> (f64, usize) {
    let (mut ok, mut n) = (0usize, 0usize);
    for job in jobs {
        let s = &samples[job.sample];
        let h_seq = enc.sequence_embedding(&s.ids);
        let (_, h_pos) = graph_embed(gnn, &prepared(&s.graph, feats));
        let cp = nn::cosine(&h_seq, &h_pos);
        if let Some(neg) = job.negatives.first() {
            let (_, h_neg) = graph_embed(gnn, &prepared(neg, feats));
            ok += (cp > nn::cosine(&h_seq, &h_neg)) as usize;
            n += 1;
        }
    }
    (if n == 0 { 0.0 } else { ok as f64 / n as f64 }, n)
}

/// Trains the encoder (and the GCN when `train_gnn` is set) on the weighted
/// sum of the masked-token and contrastive losses. `on_epoch` sees each
/// epoch's metrics as soon as they are computed.
pub fn train_align(
    samples: &[AlignSample],
    vocab: usize,
    gnn: &mut LinkModel,
    feats: &FeatureLookup,
    cfg: &AlignConfig,
    exec: Execution,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<(Encoder, AlignReport), AlignError> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(AlignError::Empty);
    }
    for (i, s) in samples.iter().enumerate() {
        if s.ids.iter().any(|&t| t >= vocab) {
            return Err(AlignError::Graph(i, "token id outside the vocabulary".into()));
        }
    }
    let mut enc = Encoder::new(vocab, cfg.embed_dim, gnn.hidden, cfg.window, cfg.seed);
    let mut opt = Adam::new(cfg.adam, enc.theta.len());
    let mut gnn_opt = Adam::new(cfg.adam, gnn.theta.len());
    let sigs: Vec<Vec<u64>> = samples.iter().map(|s| wl_signature(&s.graph)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xa119);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut epochs = Vec::new();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut sum_mlm, mut sum_cl, mut sum_l, mut batches) = (0.0, 0.0, 0.0, 0usize);
        let mut fallbacks = 0;
        let mut epoch_jobs = Vec::new();
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let (jobs, fb) = make_jobs(samples, batch, &sigs, cfg, &mut rng);
            fallbacks += fb;
            let (l_mlm, l_cl, l, g_enc, g_gnn) = batch_objective(&enc, gnn, feats, samples, &jobs, cfg, exec);
            if !l.is_finite() || g_enc.iter().any(|x| !x.is_finite()) {
                return Err(AlignError::NonFinite { epoch, batch: b });
            }
            opt.step(&mut enc.theta, &g_enc);
            if cfg.train_gnn {
                gnn_opt.step(&mut gnn.theta, &g_gnn);
            }
            sum_mlm += l_mlm;
            sum_cl += l_cl;
            sum_l += l;
            batches += 1;
            epoch_jobs.extend(jobs);
        }
        let (acc, pairs) = pair_accuracy(&enc, gnn, feats, samples, &epoch_jobs);
        let k = batches.max(1) as f64;
        let m = EpochMetrics {
            epoch: epoch + 1,
            l_mlm: sum_mlm / k,
            l_cl: sum_cl / k,
            l_integration: sum_l / k,
            pos_gt_neg: acc,
            pairs,
            in_batch_fallbacks: fallbacks,
        };
        log::info!("align epoch {}: mlm {:.4} cl {:.4} acc {:.3}", m.epoch, m.l_mlm, m.l_cl, m.pos_gt_neg);
        on_epoch(&m);
        epochs.push(m);
    }
    Ok((enc, AlignReport { epochs }))
}
