//! Mean-aggregation GCN over FG graphs with an MLP edge scorer, trained for
//! link prediction.

use std::collections::BTreeSet;
use std::io::{self, BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fragment::{FgGraph, FgNode};
use crate::kge::{ComplexEmbeddingTable, ComplexVec, KgIndex};
use crate::nn::{self, Adam, AdamConfig};
use crate::par::Execution;

const HEADER: &str = "FARM-GNN v1";

#[derive(Debug, thiserror::Error)]
pub enum GnnError {
    #[error("feature dimension {got} does not match model input {want}")]
    Dim { got: usize, want: usize },
    #[error("no graph yields any training pair")]
    Empty,
    #[error("invalid config: {0}")]
    Config(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFinite { epoch: usize, batch: usize },
    #[error("model file line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Node features from a KGE table: `re || im` of the node's entity, or the
/// mean entity vector for unknown entities.
#[derive(Debug, Clone)]
pub struct FeatureLookup<'a> {
    table: &'a ComplexEmbeddingTable,
    unk: Vec<f64>,
}

impl<'a> FeatureLookup<'a> {
    pub fn new(table: &'a ComplexEmbeddingTable) -> Self {
        let rows: Vec<Vec<f64>> = table.entities.iter().map(ComplexVec::concat).collect();
        let unk = nn::mean_rows(&rows, 2 * table.dim);
        FeatureLookup { table, unk }
    }

    pub fn dim(&self) -> usize {
        2 * self.table.dim
    }

    pub fn unk(&self) -> &[f64] {
        &self.unk
    }

    /// Feature vector and whether the entity was found.
    pub fn node(&self, n: &FgNode) -> (Vec<f64>, bool) {
        let id = n.kg_entity_id.clone().unwrap_or_else(|| n.entity_id());
        match self.table.entity_vec(&id) {
            Some(v) => (v.concat(), true),
            None => (self.unk.clone(), false),
        }
    }

    pub fn graph(&self, g: &FgGraph) -> Vec<Vec<f64>> {
        g.nodes.iter().map(|n| self.node(n).0).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSampleSet {
    pub positives: Vec<(usize, usize)>,
    pub negatives: Vec<(usize, usize)>,
}

impl EdgeSampleSet {
    pub fn is_empty(&self) -> bool {
        self.positives.is_empty() && self.negatives.is_empty()
    }
}

/// Unordered node pairs `(i, j)`, `i < j`, in lexicographic order.
pub fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// Training pairs for one graph. Graphs with more than three nodes keep every
/// edge plus `round(rate * C(n,2))` distinct pairs drawn uniformly; pairs that
/// are edges are not negatives. Smaller graphs use every pair.
pub fn sample_edges<R: Rng>(g: &FgGraph, rate: f64, rng: &mut R) -> EdgeSampleSet {
    let n = g.num_nodes();
    let positives: Vec<(usize, usize)> = {
        let s: BTreeSet<(usize, usize)> = g.edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
        s.into_iter().collect()
    };
    let pairs = all_pairs(n);
    let candidates: Vec<(usize, usize)> = if n > 3 {
        let m = ((rate * pairs.len() as f64).round() as usize).min(pairs.len());
        let mut idx = rand::seq::index::sample(rng, pairs.len(), m).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| pairs[i]).collect()
    } else {
        pairs
    };
    let negatives = candidates.into_iter().filter(|p| positives.binary_search(p).is_err()).collect();
    EdgeSampleSet { positives, negatives }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GnnConfig {
    /// Hidden width; `None` means half the feature width (the KGE dim).
    pub hidden: Option<usize>,
    pub layers: usize,
    pub epochs: usize,
    /// Graphs per optimizer step.
    pub batch_graphs: usize,
    pub sample_rate: f64,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for GnnConfig {
    fn default() -> Self {
        GnnConfig {
            hidden: None,
            layers: 2,
            epochs: 3,
            batch_graphs: 8,
            sample_rate: 0.6,
            adam: AdamConfig { lr: 1e-2, ..Default::default() },
            seed: 0,
        }
    }
}

/// Per-node neighbour lists used for aggregation; isolated nodes aggregate
/// themselves.
pub fn aggregation_lists(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    adj.iter()
        .enumerate()
        .map(|(i, nb)| if nb.is_empty() { vec![i] } else { nb.clone() })
        .collect()
}

/// GCN layers plus edge scorer, all parameters in one flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkModel {
    pub in_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub theta: Vec<f64>,
}

/// Intermediate values of one forward pass, kept for backprop.
#[derive(Debug, Clone)]
pub struct Forward {
    /// Aggregated inputs per layer.
    pub z: Vec<Vec<Vec<f64>>>,
    /// Pre-activations per layer.
    pub pre: Vec<Vec<Vec<f64>>>,
    /// Final node embeddings.
    pub out: Vec<Vec<f64>>,
}

impl LinkModel {
    pub fn new(in_dim: usize, hidden: usize, layers: usize, seed: u64) -> Self {
        assert!(in_dim > 0 && hidden > 0 && layers > 0);
        let mut m = LinkModel { in_dim, hidden, layers, theta: Vec::new() };
        m.theta = vec![0.0; m.num_params()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l in 0..layers {
            let (o, r, c) = m.layer_block(l);
            nn::glorot(&mut m.theta[o..o + r * c], r, c, &mut rng);
        }
        let (o, r, c) = m.v1_block();
        nn::glorot(&mut m.theta[o..o + r * c], r, c, &mut rng);
        let o = m.v2_offset();
        let h = m.hidden;
        nn::glorot(&mut m.theta[o..o + h], 1, h, &mut rng);
        m
    }

    fn layer_in(&self, l: usize) -> usize {
        if l == 0 {
            self.in_dim
        } else {
            self.hidden
        }
    }

    /// (offset, rows, cols) of layer `l`'s weight matrix.
    fn layer_block(&self, l: usize) -> (usize, usize, usize) {
        let mut off = 0;
        for k in 0..l {
            off += self.hidden * self.layer_in(k);
        }
        (off, self.hidden, self.layer_in(l))
    }

    /// Row-major `hidden x in` weight matrix of GCN layer `l`, with its shape.
    pub fn layer_weights(&self, l: usize) -> (&[f64], usize, usize) {
        let (o, rows, cols) = self.layer_block(l);
        (&self.theta[o..o + rows * cols], rows, cols)
    }

    fn v1_block(&self) -> (usize, usize, usize) {
        let (o, r, c) = self.layer_block(self.layers - 1);
        (o + r * c, self.hidden, 2 * self.hidden)
    }

    fn b1_offset(&self) -> usize {
        let (o, r, c) = self.v1_block();
        o + r * c
    }

    fn v2_offset(&self) -> usize {
        self.b1_offset() + self.hidden
    }

    fn b2_offset(&self) -> usize {
        self.v2_offset() + self.hidden
    }

    pub fn num_params(&self) -> usize {
        let gcn: usize = (0..self.layers).map(|l| self.hidden * self.layer_in(l)).sum();
        gcn + 2 * self.hidden * self.hidden + 2 * self.hidden + 1
    }

    /// Zeroes the scorer so every pair gets probability 0.5.
    pub fn zero_scorer(&mut self) {
        let (o, _, _) = self.v1_block();
        self.theta[o..].iter_mut().for_each(|x| *x = 0.0);
    }

    pub fn forward(&self, adj: &[Vec<usize>], x: &[Vec<f64>]) -> Result<Forward, GnnError> {
        for row in x {
            if row.len() != self.in_dim {
                return Err(GnnError::Dim { got: row.len(), want: self.in_dim });
            }
        }
        let agg = aggregation_lists(adj);
        let mut h: Vec<Vec<f64>> = x.to_vec();
        let (mut zs, mut pres) = (Vec::new(), Vec::new());
        for l in 0..self.layers {
            let (o, rows, cols) = self.layer_block(l);
            let w = &self.theta[o..o + rows * cols];
            let z: Vec<Vec<f64>> = agg
                .iter()
                .map(|nb| {
                    // summed in value order so relabelling nodes cannot change rounding
                    let mut rows: Vec<&Vec<f64>> = nb.iter().map(|&j| &h[j]).collect();
                    rows.sort_by(|a, b| {
                        a.iter().zip(b.iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
                    });
                    let mut m = vec![0.0; cols];
                    for row in rows {
                        for (a, b) in m.iter_mut().zip(row) {
                            *a += b;
                        }
                    }
                    m.iter_mut().for_each(|a| *a /= nb.len() as f64);
                    m
                })
                .collect();
            let pre: Vec<Vec<f64>> =
                z.iter().map(|zi| (0..rows).map(|r| nn::dot(&w[r * cols..(r + 1) * cols], zi)).collect()).collect();
            h = pre.iter().map(|p| p.iter().map(|&v| nn::relu(v)).collect()).collect();
            zs.push(z);
            pres.push(pre);
        }
        Ok(Forward { z: zs, pre: pres, out: h })
    }

    pub fn embed(&self, adj: &[Vec<usize>], x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, GnnError> {
        Ok(self.forward(adj, x)?.out)
    }

    /// Mean of the final node embeddings.
    pub fn graph_embedding(&self, adj: &[Vec<usize>], x: &[Vec<f64>]) -> Result<Vec<f64>, GnnError> {
        Ok(nn::mean_rows(&self.embed(adj, x)?, self.hidden))
    }

    /// Scorer pre-activation for the ordered concatenation `hi || hj`.
    pub fn logit(&self, hi: &[f64], hj: &[f64]) -> f64 {
        let (o, rows, cols) = self.v1_block();
        let v1 = &self.theta[o..o + rows * cols];
        let b1 = &self.theta[self.b1_offset()..self.b1_offset() + rows];
        let v2 = &self.theta[self.v2_offset()..self.v2_offset() + rows];
        let mut s = self.theta[self.b2_offset()];
        for r in 0..rows {
            let w = &v1[r * cols..(r + 1) * cols];
            let q = nn::dot(&w[..self.hidden], hi) + nn::dot(&w[self.hidden..], hj) + b1[r];
            s += v2[r] * nn::relu(q);
        }
        s
    }

    /// Edge probability; pairs are oriented (min, max).
    pub fn score_edge(&self, emb: &[Vec<f64>], i: usize, j: usize) -> f64 {
        let (a, b) = (i.min(j), i.max(j));
        nn::sigmoid(self.logit(&emb[a], &emb[b]))
    }

    /// Average of the per-class mean cross-entropies over non-empty classes.
    pub fn link_loss(&self, adj: &[Vec<usize>], x: &[Vec<f64>], s: &EdgeSampleSet) -> Result<f64, GnnError> {
        let emb = self.embed(adj, x)?;
        Ok(link_loss_from_logits(
            &s.positives.iter().map(|&(i, j)| self.logit(&emb[i], &emb[j])).collect::<Vec<_>>(),
            &s.negatives.iter().map(|&(i, j)| self.logit(&emb[i], &emb[j])).collect::<Vec<_>>(),
        ))
    }

    /// Loss and its gradient with respect to `theta`.
    pub fn loss_grad(
        &self,
        adj: &[Vec<usize>],
        x: &[Vec<f64>],
        s: &EdgeSampleSet,
    ) -> Result<(f64, Vec<f64>), GnnError> {
        let fw = self.forward(adj, x)?;
        let emb = &fw.out;
        let h = self.hidden;
        let mut grad = vec![0.0; self.theta.len()];
        let classes = (!s.positives.is_empty()) as usize + (!s.negatives.is_empty()) as usize;
        if classes == 0 {
            return Ok((0.0, grad));
        }
        let mut d_emb = vec![vec![0.0; h]; emb.len()];
        let (o1, rows, cols) = self.v1_block();
        let (ob1, ov2, ob2) = (self.b1_offset(), self.v2_offset(), self.b2_offset());
        let mut loss = 0.0;
        for (pairs, positive) in [(&s.positives, true), (&s.negatives, false)] {
            if pairs.is_empty() {
                continue;
            }
            let w = 1.0 / (classes as f64 * pairs.len() as f64);
            for &(i, j) in pairs.iter() {
                let u: Vec<f64> = emb[i].iter().chain(&emb[j]).copied().collect();
                let q: Vec<f64> = (0..rows)
                    .map(|r| nn::dot(&self.theta[o1 + r * cols..o1 + (r + 1) * cols], &u) + self.theta[ob1 + r])
                    .collect();
                let mut sc = self.theta[ob2];
                for r in 0..rows {
                    sc += self.theta[ov2 + r] * nn::relu(q[r]);
                }
                // -log p = softplus(-s), -log(1-p) = softplus(s)
                let (l, ds) = if positive {
                    (nn::softplus(-sc), nn::sigmoid(sc) - 1.0)
                } else {
                    (nn::softplus(sc), nn::sigmoid(sc))
                };
                loss += w * l;
                let ds = w * ds;
                grad[ob2] += ds;
                let mut du = vec![0.0; cols];
                for r in 0..rows {
                    grad[ov2 + r] += ds * nn::relu(q[r]);
                    if q[r] > 0.0 {
                        let dq = ds * self.theta[ov2 + r];
                        grad[ob1 + r] += dq;
                        let row = o1 + r * cols;
                        for c in 0..cols {
                            grad[row + c] += dq * u[c];
                            du[c] += dq * self.theta[row + c];
                        }
                    }
                }
                for c in 0..h {
                    d_emb[i][c] += du[c];
                    d_emb[j][c] += du[h + c];
                }
            }
        }
        self.gcn_backward(adj, &fw, d_emb, &mut grad);
        Ok((loss, grad))
    }

    /// Accumulates into `grad` the GCN weight gradients given the gradient
    /// of some loss with respect to the final node embeddings.
    pub fn gcn_backward(&self, adj: &[Vec<usize>], fw: &Forward, d_emb: Vec<Vec<f64>>, grad: &mut [f64]) {
        let n = d_emb.len();
        let agg = aggregation_lists(adj);
        let mut d_out = d_emb;
        for l in (0..self.layers).rev() {
            let (o, rows, cols) = self.layer_block(l);
            let mut d_in = vec![vec![0.0; cols]; n];
            for (i, nb) in agg.iter().enumerate() {
                let mut dz = vec![0.0; cols];
                for r in 0..rows {
                    if fw.pre[l][i][r] > 0.0 {
                        let dp = d_out[i][r];
                        let row = o + r * cols;
                        for c in 0..cols {
                            grad[row + c] += dp * fw.z[l][i][c];
                            dz[c] += dp * self.theta[row + c];
                        }
                    }
                }
                let k = nb.len() as f64;
                for &j in nb {
                    for c in 0..cols {
                        d_in[j][c] += dz[c] / k;
                    }
                }
            }
            d_out = d_in;
        }
    }

    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{HEADER} dims={},{} layers={} params={}", self.in_dim, self.hidden, self.layers, self.theta.len())?;
        let mut blocks: Vec<(String, usize, usize, usize)> = (0..self.layers)
            .map(|l| {
                let (o, r, c) = self.layer_block(l);
                (format!("W{}", l + 1), o, r, c)
            })
            .collect();
        let (o, r, c) = self.v1_block();
        blocks.push(("V1".into(), o, r, c));
        blocks.push(("b1".into(), self.b1_offset(), 1, self.hidden));
        blocks.push(("v2".into(), self.v2_offset(), 1, self.hidden));
        blocks.push(("b2".into(), self.b2_offset(), 1, 1));
        for (name, o, r, c) in blocks {
            writeln!(w, "{name} {r} {c}")?;
            for row in 0..r {
                let vals: Vec<String> = self.theta[o + row * c..o + (row + 1) * c].iter().map(|x| x.to_string()).collect();
                writeln!(w, "{}", vals.join(" "))?;
            }
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<LinkModel, GnnError> {
        let bad = |line: usize, msg: &str| GnnError::Format { line, msg: msg.to_string() };
        let lines: Vec<String> = r.lines().collect::<Result<_, _>>()?;
        let head = lines.first().ok_or_else(|| bad(1, "missing header"))?;
        let rest = head.strip_prefix(HEADER).ok_or_else(|| bad(1, "bad magic"))?;
        let (mut dims, mut layers) = (None, None);
        for f in rest.split_whitespace() {
            match f.split_once('=') {
                Some(("dims", v)) => dims = v.split_once(','),
                Some(("layers", v)) => layers = v.parse::<usize>().ok(),
                _ => {}
            }
        }
        let (i, h) = dims.ok_or_else(|| bad(1, "missing dims"))?;
        let (in_dim, hidden) = (
            i.parse::<usize>().map_err(|_| bad(1, "bad dims"))?,
            h.parse::<usize>().map_err(|_| bad(1, "bad dims"))?,
        );
        let layers = layers.ok_or_else(|| bad(1, "missing layers"))?;
        if in_dim == 0 || hidden == 0 || layers == 0 {
            return Err(bad(1, "zero dimension"));
        }
        let mut m = LinkModel { in_dim, hidden, layers, theta: Vec::new() };
        let want = m.num_params();
        let mut k = 1;
        while k < lines.len() {
            let hdr: Vec<&str> = lines[k].split_whitespace().collect();
            if hdr.is_empty() {
                k += 1;
                continue;
            }
            let rows: usize = hdr.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| bad(k + 1, "bad block header"))?;
            for row in 0..rows {
                let line = lines.get(k + 1 + row).ok_or_else(|| bad(k + 2 + row, "truncated block"))?;
                for v in line.split_whitespace() {
                    m.theta.push(v.parse().map_err(|_| bad(k + 2 + row, "bad number"))?);
                }
            }
            k += 1 + rows;
        }
        if m.theta.len() != want {
            return Err(bad(0, &format!("expected {want} parameters, found {}", m.theta.len())));
        }
        Ok(m)
    }
}

/// Loss from scorer logits; see [`LinkModel::link_loss`].
pub fn link_loss_from_logits(pos: &[f64], neg: &[f64]) -> f64 {
    let mut terms = Vec::new();
    if !pos.is_empty() {
        terms.push(pos.iter().map(|&s| nn::softplus(-s)).sum::<f64>() / pos.len() as f64);
    }
    if !neg.is_empty() {
        terms.push(neg.iter().map(|&s| nn::softplus(s)).sum::<f64>() / neg.len() as f64);
    }
    if terms.is_empty() {
        0.0
    } else {
        terms.iter().sum::<f64>() / terms.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    pub epoch_losses: Vec<f64>,
    pub unknown_nodes: usize,
}

/// Node features plus adjacency for one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedGraph {
    pub adj: Vec<Vec<usize>>,
    pub x: Vec<Vec<f64>>,
    pub source: FgGraph,
}

pub fn prepare(graphs: &[FgGraph], feats: &FeatureLookup) -> (Vec<PreparedGraph>, usize) {
    let mut unknown = 0;
    let prepared = graphs
        .iter()
        .map(|g| {
            let x = g
                .nodes
                .iter()
                .map(|n| {
                    let (v, known) = feats.node(n);
                    unknown += (!known) as usize;
                    v
                })
                .collect();
            PreparedGraph { adj: g.adjacency(), x, source: g.clone() }
        })
        .collect();
    (prepared, unknown)
}

pub fn train_link(
    graphs: &[FgGraph],
    feats: &FeatureLookup,
    cfg: &GnnConfig,
    exec: Execution,
) -> Result<(LinkModel, LinkReport), GnnError> {
    if cfg.layers == 0 || cfg.batch_graphs == 0 || !(0.0..=1.0).contains(&cfg.sample_rate) {
        return Err(GnnError::Config("layers, batch_graphs must be positive and sample_rate in [0, 1]".into()));
    }
    let (prepared, unknown_nodes) = prepare(graphs, feats);
    let usable: Vec<&PreparedGraph> = prepared.iter().filter(|g| g.x.len() >= 2).collect();
    if usable.is_empty() {
        return Err(GnnError::Empty);
    }
    let hidden = cfg.hidden.unwrap_or((feats.dim() / 2).max(1));
    let mut model = LinkModel::new(feats.dim(), hidden, cfg.layers, cfg.seed);
    let mut opt = Adam::new(cfg.adam, model.num_params());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6c69_6e6b);
    let mut order: Vec<usize> = (0..usable.len()).collect();
    let mut epoch_losses = Vec::new();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut total, mut count) = (0.0, 0usize);
        for (b, chunk) in order.chunks(cfg.batch_graphs).enumerate() {
            let jobs: Vec<(&PreparedGraph, EdgeSampleSet)> = chunk
                .iter()
                .map(|&i| (usable[i], sample_edges(&usable[i].source, cfg.sample_rate, &mut rng)))
                .filter(|(_, s)| !s.is_empty())
                .collect();
            if jobs.is_empty() {
                continue;
            }
            let parts = exec.map(&jobs, |(g, s)| model.loss_grad(&g.adj, &g.x, s));
            let mut grad = vec![0.0; model.num_params()];
            let mut loss = 0.0;
            for p in parts {
                let (l, g) = p?;
                loss += l;
                for (a, b) in grad.iter_mut().zip(&g) {
                    *a += b;
                }
            }
            let k = jobs.len() as f64;
            grad.iter_mut().for_each(|g| *g /= k);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(GnnError::NonFinite { epoch, batch: b });
            }
            opt.step(&mut model.theta, &grad);
            total += loss;
            count += jobs.len();
        }
        let mean = total / count.max(1) as f64;
        log::debug!("link epoch {epoch}: loss {mean:.6}");
        epoch_losses.push(mean);
    }
    Ok((model, LinkReport { epoch_losses, unknown_nodes }))
}

/// ROC-AUC over every node pair of every graph (edges positive, non-edges
/// negative).
pub fn evaluate_auc(model: &LinkModel, graphs: &[FgGraph], feats: &FeatureLookup) -> Result<Option<f64>, GnnError> {
    let (prepared, _) = prepare(graphs, feats);
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for g in &prepared {
        let emb = model.embed(&g.adj, &g.x)?;
        for (i, j) in all_pairs(g.x.len()) {
            let p = model.score_edge(&emb, i, j);
            if g.source.has_edge(i, j) {
                pos.push(p);
            } else {
                neg.push(p);
            }
        }
    }
    Ok(nn::roc_auc(&pos, &neg))
}

/// Cosine between the embedding shifts of two substitutions.
pub fn analogy_delta(a_before: &[f64], a_after: &[f64], b_before: &[f64], b_after: &[f64]) -> f64 {
    let da: Vec<f64> = a_after.iter().zip(a_before).map(|(x, y)| x - y).collect();
    let db: Vec<f64> = b_after.iter().zip(b_before).map(|(x, y)| x - y).collect();
    nn::cosine(&da, &db)
}

/// A synthetic link dataset: entities belong to `families` families, entity
/// vectors are a family centroid plus noise, and two nodes of a graph are
/// linked exactly when their entities share a family.
pub fn planted_link_data(seed: u64, graphs: usize, families: usize, kge_dim: usize) -> (ComplexEmbeddingTable, Vec<FgGraph>) {
    const PER_FAMILY: usize = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centroids: Vec<ComplexVec> = (0..families).map(|_| ComplexVec::uniform(kge_dim, 1.0, &mut rng)).collect();
    let mut ids = Vec::new();
    let mut vecs = Vec::new();
    for (f, c) in centroids.iter().enumerate() {
        for m in 0..PER_FAMILY {
            ids.push(format!("fam{f}_{m}|C"));
            let noise = ComplexVec::uniform(kge_dim, 0.3, &mut rng);
            vecs.push(ComplexVec::new(
                c.re.iter().zip(&noise.re).map(|(a, b)| a + b).collect(),
                c.im.iter().zip(&noise.im).map(|(a, b)| a + b).collect(),
            )
            .expect("equal lengths"));
        }
    }
    let table = ComplexEmbeddingTable {
        dim: kge_dim,
        index: KgIndex::new(ids.clone(), Vec::new()),
        entities: vecs,
        relations: Vec::new(),
        conjugate_tail: false,
        init: format!("planted seed={seed}"),
    };
    let out = (0..graphs)
        .map(|_| {
            let n = rng.gen_range(3..=9);
            let members: Vec<usize> = (0..n).map(|_| rng.gen_range(0..ids.len())).collect();
            let nodes = members
                .iter()
                .map(|&e| {
                    let (label, core) = ids[e].split_once('|').expect("planted id has a core");
                    FgNode::new(label, core)
                })
                .collect();
            let edges: Vec<(usize, usize)> = all_pairs(n)
                .into_iter()
                .filter(|&(i, j)| members[i] / PER_FAMILY == members[j] / PER_FAMILY)
                .collect();
            FgGraph::new("", nodes, edges).expect("planted graph is valid")
        })
        .collect();
    (table, out)
}
