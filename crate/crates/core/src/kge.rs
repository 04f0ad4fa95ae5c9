//! ComplEx knowledge-graph embeddings trained with a margin ranking loss.
//!
//! The default score is `Re(sum_k h_k * r_k * t_k)`. Setting
//! [`KgeConfig::conjugate_tail`] switches to `Re(sum_k h_k * r_k * conj(t_k))`.

use std::collections::{HashMap, HashSet};
use std::io::{self, BufRead, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::kg::Triple;
pub use crate::nn::cosine;
use crate::par::Execution;

pub const INIT_RANGE: f64 = 0.1;
const HEADER: &str = "FARM-KGE v1";

#[derive(Debug, thiserror::Error)]
pub enum KgeError {
    #[error("dimension mismatch: {0} vs {1}")]
    Dim(usize, usize),
    #[error("no triples to train on")]
    Empty,
    #[error("invalid config: {0}")]
    Config(String),
    #[error("unknown entity {0:?}")]
    UnknownEntity(String),
    #[error("unknown relation {0:?}")]
    UnknownRelation(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch} (last finite epoch loss {last})")]
    NonFinite { epoch: usize, batch: usize, last: f64 },
    #[error("embedding file line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexVec {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexVec {
    pub fn zeros(d: usize) -> Self {
        ComplexVec { re: vec![0.0; d], im: vec![0.0; d] }
    }

    pub fn new(re: Vec<f64>, im: Vec<f64>) -> Result<Self, KgeError> {
        if re.len() != im.len() {
            return Err(KgeError::Dim(re.len(), im.len()));
        }
        Ok(ComplexVec { re, im })
    }

    pub fn uniform<R: Rng>(d: usize, range: f64, rng: &mut R) -> Self {
        let re = (0..d).map(|_| rng.gen_range(-range..range)).collect();
        let im = (0..d).map(|_| rng.gen_range(-range..range)).collect();
        ComplexVec { re, im }
    }

    pub fn dim(&self) -> usize {
        self.re.len()
    }

    pub fn scaled(&self, a: f64) -> Self {
        ComplexVec {
            re: self.re.iter().map(|x| x * a).collect(),
            im: self.im.iter().map(|x| x * a).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.re.iter().chain(&self.im).all(|x| x.is_finite())
    }

    /// `re` followed by `im`.
    pub fn concat(&self) -> Vec<f64> {
        self.re.iter().chain(&self.im).copied().collect()
    }

    fn axpy(&mut self, a: f64, x: &ComplexVec) {
        for k in 0..self.dim() {
            self.re[k] += a * x.re[k];
            self.im[k] += a * x.im[k];
        }
    }
}

fn check_dims(h: &ComplexVec, r: &ComplexVec, t: &ComplexVec) -> Result<(), KgeError> {
    for v in [r, t] {
        if v.dim() != h.dim() {
            return Err(KgeError::Dim(h.dim(), v.dim()));
        }
    }
    Ok(())
}

/// Triple score.
pub fn score(h: &ComplexVec, r: &ComplexVec, t: &ComplexVec, conjugate_tail: bool) -> Result<f64, KgeError> {
    check_dims(h, r, t)?;
    Ok(score_unchecked(h, r, t, conjugate_tail))
}

fn score_unchecked(h: &ComplexVec, r: &ComplexVec, t: &ComplexVec, conjugate_tail: bool) -> f64 {
    let s = if conjugate_tail { -1.0 } else { 1.0 };
    let mut acc = 0.0;
    for k in 0..h.dim() {
        let (a, b, c, d) = (h.re[k], h.im[k], r.re[k], r.im[k]);
        let (e, f) = (t.re[k], s * t.im[k]);
        acc += (a * c - b * d) * e - (a * d + b * c) * f;
    }
    acc
}

/// Partial derivatives of the score with respect to h, r and t.
pub fn score_grad(
    h: &ComplexVec,
    r: &ComplexVec,
    t: &ComplexVec,
    conjugate_tail: bool,
) -> Result<[ComplexVec; 3], KgeError> {
    check_dims(h, r, t)?;
    let n = h.dim();
    let s = if conjugate_tail { -1.0 } else { 1.0 };
    let (mut gh, mut gr, mut gt) = (ComplexVec::zeros(n), ComplexVec::zeros(n), ComplexVec::zeros(n));
    for k in 0..n {
        let (a, b, c, d) = (h.re[k], h.im[k], r.re[k], r.im[k]);
        let (e, f) = (t.re[k], s * t.im[k]);
        gh.re[k] = c * e - d * f;
        gh.im[k] = -d * e - c * f;
        gr.re[k] = a * e - b * f;
        gr.im[k] = -b * e - a * f;
        gt.re[k] = a * c - b * d;
        gt.im[k] = -s * (a * d + b * c);
    }
    Ok([gh, gr, gt])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KgeConfig {
    pub dim: usize,
    pub margin: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub negatives_per_positive: usize,
    pub seed: u64,
    pub conjugate_tail: bool,
    /// Heavy-ball momentum; 0 is plain SGD.
    pub momentum: f64,
    pub max_retries: usize,
}

impl Default for KgeConfig {
    fn default() -> Self {
        KgeConfig {
            dim: 64,
            margin: 1.0,
            learning_rate: 1e-3,
            batch_size: 64,
            epochs: 50,
            negatives_per_positive: 1,
            seed: 0,
            conjugate_tail: false,
            momentum: 0.0,
            max_retries: 32,
        }
    }
}

impl KgeConfig {
    /// Settings for graphs with tens of entities: plain SGD, larger step,
    /// many negatives per positive.
    pub fn toy(seed: u64) -> Self {
        KgeConfig {
            dim: 32,
            learning_rate: 0.02,
            batch_size: 16,
            negatives_per_positive: 32,
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), KgeError> {
        if self.dim == 0 {
            return Err(KgeError::Config("dim must be at least 1".into()));
        }
        if !(self.margin > 0.0) {
            return Err(KgeError::Config("margin must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || self.batch_size == 0 || self.negatives_per_positive == 0 {
            return Err(KgeError::Config("learning_rate, batch_size and negatives must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(KgeError::Config("momentum must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Integer form of a triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ix {
    pub h: usize,
    pub r: usize,
    pub t: usize,
}

/// Id tables for entities and relations, in first-seen order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KgIndex {
    pub entities: Vec<String>,
    pub relations: Vec<String>,
    entity_ix: HashMap<String, usize>,
    relation_ix: HashMap<String, usize>,
}

impl KgIndex {
    pub fn new(entities: Vec<String>, relations: Vec<String>) -> Self {
        let entity_ix = entities.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let relation_ix = relations.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        KgIndex { entities, relations, entity_ix, relation_ix }
    }

    pub fn from_triples(triples: &[Triple]) -> (KgIndex, Vec<Ix>) {
        let mut idx = KgIndex::default();
        let ixs = triples
            .iter()
            .map(|t| Ix {
                h: idx.add_entity(&t.head),
                r: idx.add_relation(&t.relation),
                t: idx.add_entity(&t.tail),
            })
            .collect();
        (idx, ixs)
    }

    fn add_entity(&mut self, id: &str) -> usize {
        if let Some(&i) = self.entity_ix.get(id) {
            return i;
        }
        self.entities.push(id.to_string());
        self.entity_ix.insert(id.to_string(), self.entities.len() - 1);
        self.entities.len() - 1
    }

    fn add_relation(&mut self, id: &str) -> usize {
        if let Some(&i) = self.relation_ix.get(id) {
            return i;
        }
        self.relations.push(id.to_string());
        self.relation_ix.insert(id.to_string(), self.relations.len() - 1);
        self.relations.len() - 1
    }

    pub fn entity(&self, id: &str) -> Option<usize> {
        self.entity_ix.get(id).copied()
    }

    pub fn relation(&self, id: &str) -> Option<usize> {
        self.relation_ix.get(id).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corrupted {
    Head,
    Tail,
}

/// Corrupts head or tail (fair coin) with a uniform entity, retrying while the
/// result is a known positive. Gives up after `max_retries` and returns the
/// last corruption.
pub fn negative_sample<R: Rng>(
    pos: Ix,
    num_entities: usize,
    known: &HashSet<Ix>,
    max_retries: usize,
    rng: &mut R,
) -> (Ix, Corrupted) {
    let mut last = (pos, Corrupted::Head);
    for _ in 0..=max_retries {
        let side = if rng.gen_bool(0.5) { Corrupted::Head } else { Corrupted::Tail };
        let e = rng.gen_range(0..num_entities);
        let neg = match side {
            Corrupted::Head => Ix { h: e, ..pos },
            Corrupted::Tail => Ix { t: e, ..pos },
        };
        if !known.contains(&neg) {
            return (neg, side);
        }
        last = (neg, side);
    }
    log::warn!("negative sampling exhausted {max_retries} retries for {pos:?}");
    last
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexEmbeddingTable {
    pub dim: usize,
    pub index: KgIndex,
    pub entities: Vec<ComplexVec>,
    pub relations: Vec<ComplexVec>,
    pub conjugate_tail: bool,
    /// Free-form provenance recorded in the file header.
    pub init: String,
}

impl ComplexEmbeddingTable {
    pub fn init(index: KgIndex, dim: usize, seed: u64, conjugate_tail: bool) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entities = (0..index.entities.len()).map(|_| ComplexVec::uniform(dim, INIT_RANGE, &mut rng)).collect();
        let relations =
            (0..index.relations.len()).map(|_| ComplexVec::uniform(dim, INIT_RANGE, &mut rng)).collect();
        ComplexEmbeddingTable {
            dim,
            index,
            entities,
            relations,
            conjugate_tail,
            init: format!("uniform(-{INIT_RANGE},{INIT_RANGE}) seed={seed}"),
        }
    }

    pub fn score_ix(&self, x: Ix) -> f64 {
        score_unchecked(&self.entities[x.h], &self.relations[x.r], &self.entities[x.t], self.conjugate_tail)
    }

    pub fn score(&self, t: &Triple) -> Result<f64, KgeError> {
        let h = self.index.entity(&t.head).ok_or_else(|| KgeError::UnknownEntity(t.head.clone()))?;
        let r = self.index.relation(&t.relation).ok_or_else(|| KgeError::UnknownRelation(t.relation.clone()))?;
        let tt = self.index.entity(&t.tail).ok_or_else(|| KgeError::UnknownEntity(t.tail.clone()))?;
        Ok(self.score_ix(Ix { h, r, t: tt }))
    }

    pub fn entity_vec(&self, id: &str) -> Option<&ComplexVec> {
        self.index.entity(id).map(|i| &self.entities[i])
    }

    /// Top `k` entities by cosine similarity of the concatenated vectors,
    /// excluding the query itself; ties broken by id.
    pub fn nearest_neighbors(&self, entity: &str, k: usize) -> Result<Vec<(String, f64)>, KgeError> {
        let q = self.index.entity(entity).ok_or_else(|| KgeError::UnknownEntity(entity.to_string()))?;
        let qv = self.entities[q].concat();
        let mut all: Vec<(String, f64)> = (0..self.entities.len())
            .filter(|&i| i != q)
            .map(|i| (self.index.entities[i].clone(), cosine(&qv, &self.entities[i].concat())))
            .collect();
        all.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        all.truncate(k);
        Ok(all)
    }

    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "{HEADER} dim={} entities={} relations={} init={} conjugate_tail={}",
            self.dim,
            self.entities.len(),
            self.relations.len(),
            self.init.replace(' ', ";"),
            self.conjugate_tail
        )?;
        let ids = self.index.entities.iter().zip(&self.entities);
        let rels = self.index.relations.iter().zip(&self.relations);
        for (id, v) in ids.chain(rels) {
            write!(w, "{id}\t")?;
            write_nums(&mut w, &v.re)?;
            w.write_all(b"\t")?;
            write_nums(&mut w, &v.im)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self, KgeError> {
        let mut lines = r.lines();
        let bad = |line: usize, msg: &str| KgeError::Format { line, msg: msg.to_string() };
        let header = lines.next().ok_or_else(|| bad(1, "missing header"))??;
        let rest = header.strip_prefix(HEADER).ok_or_else(|| bad(1, "bad magic"))?;
        let mut fields: HashMap<&str, &str> = HashMap::new();
        for f in rest.split_whitespace() {
            let (k, v) = f.split_once('=').ok_or_else(|| bad(1, "bad header field"))?;
            fields.insert(k, v);
        }
        let num = |k: &str| -> Result<usize, KgeError> {
            fields.get(k).and_then(|v| v.parse().ok()).ok_or_else(|| bad(1, &format!("missing {k}")))
        };
        let (dim, ne, nr) = (num("dim")?, num("entities")?, num("relations")?);
        let conjugate_tail = fields.get("conjugate_tail").is_some_and(|v| *v == "true");
        let init = fields.get("init").map(|s| s.replace(';', " ")).unwrap_or_default();
        let mut ids = Vec::new();
        let mut vecs = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let c: Vec<&str> = line.split('\t').collect();
            if c.len() != 3 {
                return Err(bad(i + 2, "expected id, re, im"));
            }
            let parse = |s: &str| -> Result<Vec<f64>, KgeError> {
                s.split(' ').map(|x| x.parse::<f64>().map_err(|_| bad(i + 2, "bad number"))).collect()
            };
            let (re, im) = (parse(c[1])?, parse(c[2])?);
            if re.len() != dim || im.len() != dim {
                return Err(bad(i + 2, "wrong dimension"));
            }
            ids.push(c[0].to_string());
            vecs.push(ComplexVec { re, im });
        }
        if ids.len() != ne + nr {
            return Err(bad(0, "row count does not match header"));
        }
        let relations = vecs.split_off(ne);
        let rel_ids = ids.split_off(ne);
        Ok(ComplexEmbeddingTable {
            dim,
            index: KgIndex::new(ids, rel_ids),
            entities: vecs,
            relations,
            conjugate_tail,
            init,
        })
    }
}

fn write_nums<W: Write>(w: &mut W, xs: &[f64]) -> io::Result<()> {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            w.write_all(b" ")?;
        }
        write!(w, "{x}")?;
    }
    Ok(())
}


/// Margin ranking loss of one (positive, negative) pair.
pub fn pair_loss(table: &ComplexEmbeddingTable, pos: Ix, neg: Ix, margin: f64) -> f64 {
    let x = margin + table.score_ix(neg) - table.score_ix(pos);
    // keeps NaN visible, unlike f64::max
    if x > 0.0 || x.is_nan() {
        x
    } else {
        0.0
    }
}

/// Parameter slot touched by a gradient contribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Entity(usize),
    Relation(usize),
}

/// Gradient of the summed pair losses with respect to every touched vector,
/// in a fixed order.
fn pair_grads(table: &ComplexEmbeddingTable, pos: Ix, neg: Ix, margin: f64) -> Vec<(Slot, f64, ComplexVec)> {
    if pair_loss(table, pos, neg, margin) <= 0.0 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(6);
    for (x, sign) in [(neg, 1.0), (pos, -1.0)] {
        let [gh, gr, gt] = score_grad(
            &table.entities[x.h],
            &table.relations[x.r],
            &table.entities[x.t],
            table.conjugate_tail,
        )
        .expect("table vectors share a dimension");
        out.push((Slot::Entity(x.h), sign, gh));
        out.push((Slot::Relation(x.r), sign, gr));
        out.push((Slot::Entity(x.t), sign, gt));
    }
    out
}

/// Dense gradient of `sum pair_loss` over `pairs`; used by the optimizer and
/// exposed for finite-difference checks.
pub fn loss_gradient(
    table: &ComplexEmbeddingTable,
    pairs: &[(Ix, Ix)],
    margin: f64,
    exec: Execution,
) -> (f64, Vec<ComplexVec>, Vec<ComplexVec>) {
    let parts = exec.map(pairs, |&(p, n)| (pair_loss(table, p, n, margin), pair_grads(table, p, n, margin)));
    let mut ge = vec![ComplexVec::zeros(table.dim); table.entities.len()];
    let mut gr = vec![ComplexVec::zeros(table.dim); table.relations.len()];
    let mut loss = 0.0;
    for (l, grads) in parts {
        loss += l;
        for (slot, sign, g) in grads {
            match slot {
                Slot::Entity(i) => ge[i].axpy(sign, &g),
                Slot::Relation(i) => gr[i].axpy(sign, &g),
            }
        }
    }
    (loss, ge, gr)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KgeReport {
    /// Mean pair loss per epoch.
    pub epoch_losses: Vec<f64>,
    /// Fraction of training triples whose score beats a fresh negative by the margin.
    pub margin_fraction: f64,
}

pub fn train(
    triples: &[Triple],
    cfg: &KgeConfig,
    exec: Execution,
) -> Result<(ComplexEmbeddingTable, KgeReport), KgeError> {
    cfg.validate()?;
    if triples.is_empty() {
        return Err(KgeError::Empty);
    }
    let (index, ixs) = KgIndex::from_triples(triples);
    let mut table = ComplexEmbeddingTable::init(index, cfg.dim, cfg.seed, cfg.conjugate_tail);
    let report = train_table(&mut table, &ixs, cfg, exec)?;
    Ok((table, report))
}

/// Trains an initialized table in place on integer triples.
pub fn train_table(
    table: &mut ComplexEmbeddingTable,
    ixs: &[Ix],
    cfg: &KgeConfig,
    exec: Execution,
) -> Result<KgeReport, KgeError> {
    cfg.validate()?;
    if ixs.is_empty() {
        return Err(KgeError::Empty);
    }
    let known: HashSet<Ix> = ixs.iter().copied().collect();
    let ne = table.entities.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0001);
    let mut order: Vec<usize> = (0..ixs.len()).collect();
    let mut vel_e = vec![ComplexVec::zeros(table.dim); ne];
    let mut vel_r = vec![ComplexVec::zeros(table.dim); table.relations.len()];
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut last = f64::NAN;
    for epoch in 0..cfg.epochs {
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let mut total = 0.0;
        let mut count = 0usize;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let mut pairs = Vec::with_capacity(chunk.len() * cfg.negatives_per_positive);
            for &i in chunk {
                for _ in 0..cfg.negatives_per_positive {
                    let (neg, _) = negative_sample(ixs[i], ne, &known, cfg.max_retries, &mut rng);
                    pairs.push((ixs[i], neg));
                }
            }
            let (loss, ge, gr) = loss_gradient(table, &pairs, cfg.margin, exec);
            if !loss.is_finite() {
                return Err(KgeError::NonFinite { epoch, batch: b, last });
            }
            total += loss;
            count += pairs.len();
            step(&mut table.entities, &mut vel_e, &ge, cfg);
            step(&mut table.relations, &mut vel_r, &gr, cfg);
        }
        last = total / count as f64;
        log::debug!("kge epoch {epoch}: loss {last:.6}");
        epoch_losses.push(last);
    }
    if !table.entities.iter().chain(&table.relations).all(ComplexVec::is_finite) {
        return Err(KgeError::NonFinite { epoch: cfg.epochs, batch: 0, last });
    }
    let margin_fraction = margin_fraction(table, ixs, cfg.margin, cfg.seed, cfg.max_retries);
    Ok(KgeReport { epoch_losses, margin_fraction })
}

fn step(params: &mut [ComplexVec], vel: &mut [ComplexVec], grad: &[ComplexVec], cfg: &KgeConfig) {
    for ((p, v), g) in params.iter_mut().zip(vel.iter_mut()).zip(grad) {
        for k in 0..p.dim() {
            v.re[k] = cfg.momentum * v.re[k] + g.re[k];
            v.im[k] = cfg.momentum * v.im[k] + g.im[k];
            p.re[k] -= cfg.learning_rate * v.re[k];
            p.im[k] -= cfg.learning_rate * v.im[k];
        }
    }
}

/// Fraction of triples with `f(pos) > f(neg) + margin` for one fresh
/// filtered negative each.
pub fn margin_fraction(table: &ComplexEmbeddingTable, ixs: &[Ix], margin: f64, seed: u64, max_retries: usize) -> f64 {
    if ixs.is_empty() {
        return 0.0;
    }
    let known: HashSet<Ix> = ixs.iter().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xe7a1);
    let ok = ixs
        .iter()
        .filter(|&&p| {
            let (n, _) = negative_sample(p, table.entities.len(), &known, max_retries, &mut rng);
            table.score_ix(p) > table.score_ix(n) + margin
        })
        .count();
    ok as f64 / ixs.len() as f64
}

/// A knowledge graph with planted structure: 20 entities in four groups of
/// five and three relations chaining group g to group g+1. Head i links to
/// tail j of the next group unless (i + j) is divisible by 5.
pub fn planted_kg() -> Vec<Triple> {
    let mut out = Vec::new();
    for r in 0..3 {
        for i in 0..5 {
            for j in 0..5 {
                if (i + j) % 5 != 0 {
                    out.push(Triple::new(format!("e{}", 5 * r + i), format!("r{r}"), format!("e{}", 5 * (r + 1) + j)));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rand_vec(rng: &mut ChaCha8Rng, d: usize) -> ComplexVec {
        ComplexVec::uniform(d, 1.0, rng)
    }

    /// Scalar complex-arithmetic oracle, written against num-style tuples.
    fn oracle(h: &ComplexVec, r: &ComplexVec, t: &ComplexVec, conj: bool) -> f64 {
        let mul = |x: (f64, f64), y: (f64, f64)| (x.0 * y.0 - x.1 * y.1, x.0 * y.1 + x.1 * y.0);
        (0..h.dim())
            .map(|k| {
                let tk = if conj { (t.re[k], -t.im[k]) } else { (t.re[k], t.im[k]) };
                mul(mul((h.re[k], h.im[k]), (r.re[k], r.im[k])), tk).0
            })
            .sum()
    }

    #[test]
    fn score_examples() {
        let ones = ComplexVec { re: vec![1.0; 4], im: vec![0.0; 4] };
        assert_eq!(score(&ones, &ones, &ones, false).unwrap(), 4.0);
        let mut i = ComplexVec::zeros(4);
        i.im[0] = 1.0;
        let mut one = ComplexVec::zeros(4);
        one.re[0] = 1.0;
        assert_eq!(score(&i, &i, &one, false).unwrap(), -1.0);
        assert!(score(&ones, &ComplexVec::zeros(3), &ones, false).is_err());
    }

    #[test]
    fn score_matches_oracle_and_is_linear_in_tail() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let (h, r, t) = (rand_vec(&mut rng, 8), rand_vec(&mut rng, 8), rand_vec(&mut rng, 8));
            for conj in [false, true] {
                let s = score(&h, &r, &t, conj).unwrap();
                assert!((s - oracle(&h, &r, &t, conj)).abs() < 1e-12);
                let a: f64 = rng.gen_range(-3.0..3.0);
                let sa = score(&h, &r, &t.scaled(a), conj).unwrap();
                assert!((sa - a * s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn analytic_gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let eps = 1e-5;
        let mut worst: f64 = 0.0;
        for probe in 0..100 {
            let conj = probe % 2 == 1;
            let mut v = [rand_vec(&mut rng, 6), rand_vec(&mut rng, 6), rand_vec(&mut rng, 6)];
            let g = score_grad(&v[0], &v[1], &v[2], conj).unwrap();
            let which = rng.gen_range(0..3);
            let k = rng.gen_range(0..6);
            let imag = rng.gen_bool(0.5);
            let analytic = if imag { g[which].im[k] } else { g[which].re[k] };
            let mut f = |delta: f64| {
                let slot = if imag { &mut v[which].im[k] } else { &mut v[which].re[k] };
                *slot += delta;
                let s = score(&v[0], &v[1], &v[2], conj).unwrap();
                let slot = if imag { &mut v[which].im[k] } else { &mut v[which].re[k] };
                *slot -= delta;
                s
            };
            let numeric = (f(eps) - f(-eps)) / (2.0 * eps);
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(rel);
        }
        assert!(worst < 1e-5, "max relative error {worst}");
    }

    #[test]
    fn two_entity_corruptions() {
        let known: HashSet<Ix> = [Ix { h: 0, r: 0, t: 1 }].into();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..200 {
            let (n, _) = negative_sample(Ix { h: 0, r: 0, t: 1 }, 2, &known, 32, &mut rng);
            assert!(n == Ix { h: 1, r: 0, t: 1 } || n == Ix { h: 0, r: 0, t: 0 });
        }
    }

    #[test]
    fn head_flip_frequency_and_filtering() {
        let kg = planted_kg();
        let (idx, ixs) = KgIndex::from_triples(&kg);
        let known: HashSet<Ix> = ixs.iter().copied().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut heads = 0;
        let n = 10_000;
        for i in 0..n {
            let (neg, side) = negative_sample(ixs[i % ixs.len()], idx.entities.len(), &known, 32, &mut rng);
            assert!(!known.contains(&neg));
            assert_eq!(neg.r, ixs[i % ixs.len()].r);
            heads += (side == Corrupted::Head) as usize;
        }
        let freq = heads as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.05, "{freq}");
    }

    #[test]
    fn single_triple_separates() {
        let kg = vec![Triple::new("a", "r", "b"), Triple::new("c", "s", "d")];
        let cfg = KgeConfig { dim: 4, learning_rate: 0.1, batch_size: 1, epochs: 200, seed: 1, ..Default::default() };
        let (table, report) = train(&kg[..1], &cfg, Execution::Sequential).unwrap();
        let ixs = [Ix { h: 0, r: 0, t: 1 }];
        let all: HashSet<Ix> = ixs.iter().copied().collect();
        let mut loss: f64 = 0.0;
        for h in 0..2 {
            for t in 0..2 {
                let n = Ix { h, r: 0, t };
                if !all.contains(&n) && (h == 0 || t == 1) {
                    loss += pair_loss(&table, ixs[0], n, 1.0);
                }
            }
        }
        assert!(loss <= 1e-6, "{loss} {:?}", report.epoch_losses.last());
    }

    fn toy_cfg() -> KgeConfig {
        KgeConfig::toy(7)
    }

    #[test]
    fn planted_kg_converges() {
        let kg = planted_kg();
        assert_eq!(kg.len(), 60);
        let (table, report) = train(&kg, &toy_cfg(), Execution::Sequential).unwrap();
        assert!(report.margin_fraction >= 0.95, "{}", report.margin_fraction);
        // non-increasing up to 1% of the initial loss
        let l = &report.epoch_losses;
        for w in l.windows(2) {
            assert!(w[1] <= w[0] + 0.01 * l[0], "{l:?}");
        }
        // e0 shares its tails with e1..e4 and nothing with e5..e19
        let nn = table.nearest_neighbors("e0", 4).unwrap();
        let group: HashSet<&str> = ["e1", "e2", "e3", "e4"].into();
        let hits = nn.iter().filter(|(id, _)| group.contains(id.as_str())).count();
        assert!(hits >= 3, "{nn:?}");
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let kg = planted_kg();
        let cfg = KgeConfig { epochs: 5, ..toy_cfg() };
        let a = train(&kg, &cfg, Execution::Sequential).unwrap();
        let b = train(&kg, &cfg, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn neighbors_of_a_duplicate() {
        let kg = planted_kg();
        let (mut table, _) = train(&kg, &KgeConfig { epochs: 2, ..toy_cfg() }, Execution::Sequential).unwrap();
        let e3 = table.entities[table.index.entity("e3").unwrap()].clone();
        let copy = table.index.entity("e12").unwrap();
        table.entities[copy] = e3;
        assert_eq!(table.nearest_neighbors("e3", 1).unwrap()[0].0, "e12");
        assert_eq!(table.nearest_neighbors("e12", 1).unwrap()[0].0, "e3");
        assert!(table.nearest_neighbors("e3", 0).unwrap().is_empty());
        assert!(table.nearest_neighbors("zz", 1).is_err());
    }

    #[test]
    fn file_round_trip() {
        let (table, _) = train(&planted_kg(), &KgeConfig { epochs: 1, ..toy_cfg() }, Execution::Sequential).unwrap();
        let mut buf = Vec::new();
        table.write(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("FARM-KGE v1 dim=32 entities=20 relations=3 init=uniform(-0.1,0.1);seed=7"));
        let back = ComplexEmbeddingTable::read(&buf[..]).unwrap();
        assert_eq!(back, table);
        assert!(ComplexEmbeddingTable::read("nope\n".as_bytes()).is_err());
    }

    #[test]
    fn bad_configs_rejected() {
        let kg = planted_kg();
        for cfg in [
            KgeConfig { dim: 0, ..Default::default() },
            KgeConfig { margin: 0.0, ..Default::default() },
            KgeConfig { momentum: 1.0, ..Default::default() },
        ] {
            assert!(train(&kg, &cfg, Execution::Sequential).is_err());
        }
        assert!(matches!(train(&[], &KgeConfig::default(), Execution::Sequential), Err(KgeError::Empty)));
    }

    #[test]
    fn divergence_is_reported() {
        let (idx, ixs) = KgIndex::from_triples(&planted_kg());
        let mut table = ComplexEmbeddingTable::init(idx, 8, 1, false);
        table.entities[ixs[0].h].re[0] = f64::NAN;
        let r = train_table(&mut table, &ixs, &KgeConfig::toy(1), Execution::Sequential);
        assert!(matches!(r, Err(KgeError::NonFinite { epoch: 0, .. })), "{r:?}");
    }
}
