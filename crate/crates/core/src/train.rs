//! Unsupervised training loop: positive pairs per snapshot, degree-biased
//! negative sampling, margin ranking loss on the temporal embeddings, one
//! backward pass and optimizer step per epoch over the whole sequence.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::DynamicNetwork;
use crate::num::{
    derive_seed, seeded_rng, Matrix, NodeId, OptMethod, Optimizer, Prng, Scalar, Tape,
};
use crate::spatial::{
    spatial_forward, GcnConfig, GcnStackParams, WeightGruNodes, WeightGruParams,
};
use crate::temporal::{temporal_forward, TemporalGruNodes, TemporalGruParams};

/// Pipeline variant isolating each architectural component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AblationMode {
    /// Weight-evolution GRU + temporal GRU.
    Full,
    /// Static GCN weights, no temporal stage: embeddings are the final-layer
    /// convolution outputs.
    GcnOnly,
    /// Temporal GRU over the learnable node features; no convolution.
    GruOnly,
    /// Static GCN weights followed by the temporal GRU.
    GcnGru,
}

impl AblationMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            AblationMode::Full => "full",
            AblationMode::GcnOnly => "gcn_only",
            AblationMode::GruOnly => "gru_only",
            AblationMode::GcnGru => "gcn_gru",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(AblationMode::Full),
            "gcn_only" => Ok(AblationMode::GcnOnly),
            "gru_only" => Ok(AblationMode::GruOnly),
            "gcn_gru" => Ok(AblationMode::GcnGru),
            other => Err(Error::InvalidConfig(format!(
                "unknown ablation mode `{other}` (expected full, gcn_only, gru_only, gcn_gru)"
            ))),
        }
    }

    fn uses_weight_gru(&self) -> bool {
        matches!(self, AblationMode::Full)
    }

    fn uses_temporal(&self) -> bool {
        !matches!(self, AblationMode::GcnOnly)
    }

    fn uses_gcn(&self) -> bool {
        !matches!(self, AblationMode::GruOnly)
    }
}

#[derive(Clone, Debug)]
pub struct TrainConfig {
    /// Ranking margin m.
    pub margin: f64,
    /// Negative samples per positive pair (Q).
    pub negatives: usize,
    pub epochs: usize,
    pub lr: f64,
    /// Positive pairs per snapshot per epoch; `None` trains full-batch.
    pub batch_size: Option<usize>,
    pub seed: u64,
    pub ablation: AblationMode,
    pub optimizer: OptMethod,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            margin: 1.0,
            negatives: 5,
            epochs: 300,
            lr: 1e-3,
            batch_size: None,
            seed: 0,
            ablation: AblationMode::Full,
            optimizer: OptMethod::Adam,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.margin <= 0.0 {
            return Err(Error::InvalidConfig(format!("margin must be positive, got {}", self.margin)));
        }
        if self.negatives == 0 {
            return Err(Error::InvalidConfig("need at least one negative sample".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("need at least one epoch".into()));
        }
        if self.lr < 0.0 {
            return Err(Error::InvalidConfig(format!("learning rate must be >= 0, got {}", self.lr)));
        }
        if self.batch_size == Some(0) {
            return Err(Error::InvalidConfig("batch size must be positive when set".into()));
        }
        Ok(())
    }
}

/// Every learnable matrix in the pipeline, shaped by the ablation mode.
#[derive(Clone, Debug)]
pub struct GtennParams<S> {
    pub stack: GcnStackParams<S>,
    pub weight_grus: Option<Vec<WeightGruParams<S>>>,
    pub temporal: Option<TemporalGruParams<S>>,
    /// Whether f0 counts as a trainable parameter. Always true for the
    /// convolution-free mode, whose only node-distinguishing state is f0.
    pub learn_f0: bool,
}

impl<S: Scalar> GtennParams<S> {
    pub fn init(
        node_count: usize,
        model: &GcnConfig,
        ablation: AblationMode,
        rng: &mut Prng,
    ) -> Self {
        let mut stack = GcnStackParams::init(node_count, model, rng);
        let weight_grus = if ablation.uses_weight_gru() {
            Some(
                (1..model.dims.len())
                    .map(|l| WeightGruParams::init(model.dims[l - 1], model.dims[l], rng))
                    .collect(),
            )
        } else {
            None
        };
        let temporal = if ablation.uses_temporal() {
            let d = if ablation.uses_gcn() { model.embed_dim() } else { model.dims[0] };
            Some(TemporalGruParams::init(d, d, rng))
        } else {
            None
        };
        if !ablation.uses_gcn() {
            stack.weights.clear();
        }
        let learn_f0 = model.learn_features || !ablation.uses_gcn();
        Self { stack, weight_grus, temporal, learn_f0 }
    }

    /// Flat view in a fixed order: f0 (when trainable), layer weights,
    /// weight GRUs, temporal.
    pub fn flat(&self) -> Vec<&Matrix<S>> {
        let mut out = Vec::new();
        if self.learn_f0 {
            out.push(&self.stack.f0);
        }
        out.extend(self.stack.weights.iter());
        if let Some(grus) = &self.weight_grus {
            for g in grus {
                out.extend(g.matrices());
            }
        }
        if let Some(t) = &self.temporal {
            out.extend(t.matrices());
        }
        out
    }

    pub fn flat_mut(&mut self) -> Vec<&mut Matrix<S>> {
        let mut out = Vec::new();
        if self.learn_f0 {
            out.push(&mut self.stack.f0);
        }
        out.extend(self.stack.weights.iter_mut());
        if let Some(grus) = &mut self.weight_grus {
            for g in grus {
                out.extend(g.matrices_mut());
            }
        }
        if let Some(t) = &mut self.temporal {
            out.extend(t.matrices_mut());
        }
        out
    }

    /// Clone of this structure with every matrix replaced from `mats`
    /// (same order as [`GtennParams::flat`]); the gradient-check harness
    /// perturbs parameters through this.
    pub fn with_flat(&self, mats: &[Matrix<S>]) -> Result<Self> {
        let mut clone = self.clone();
        let mut slots = clone.flat_mut();
        if slots.len() != mats.len() {
            return Err(Error::LengthMismatch(format!(
                "{} parameter slots but {} matrices",
                slots.len(),
                mats.len()
            )));
        }
        for (slot, m) in slots.iter_mut().zip(mats.iter()) {
            **slot = m.clone();
        }
        drop(slots);
        Ok(clone)
    }

    pub fn leaves(&self, tape: &mut Tape<S>) -> GtennNodes {
        GtennNodes {
            f0: tape.leaf(self.stack.f0.clone()),
            weights: self.stack.weights.iter().map(|w| tape.leaf(w.clone())).collect(),
            weight_grus: self
                .weight_grus
                .as_ref()
                .map(|grus| grus.iter().map(|g| g.leaves(tape)).collect()),
            temporal: self.temporal.as_ref().map(|t| t.leaves(tape)),
            learn_f0: self.learn_f0,
        }
    }
}

/// Tape handles mirroring [`GtennParams`].
pub struct GtennNodes {
    pub f0: NodeId,
    pub weights: Vec<NodeId>,
    pub weight_grus: Option<Vec<WeightGruNodes>>,
    pub temporal: Option<TemporalGruNodes>,
    pub learn_f0: bool,
}

impl GtennNodes {
    /// Same order as [`GtennParams::flat`].
    pub fn flat_ids(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        if self.learn_f0 {
            out.push(self.f0);
        }
        out.extend(self.weights.iter().copied());
        if let Some(grus) = &self.weight_grus {
            for g in grus {
                out.extend(g.ids());
            }
        }
        if let Some(t) = &self.temporal {
            out.extend(t.ids());
        }
        out
    }
}

/// Runs the encoder over all snapshots and returns the per-snapshot
/// embeddings that the loss and clustering consume.
pub fn forward_embeddings<S: Scalar>(
    tape: &mut Tape<S>,
    nodes: &GtennNodes,
    a_hats: &[Matrix<S>],
    model: &GcnConfig,
    ablation: AblationMode,
) -> Result<Vec<NodeId>> {
    let spatial_seq: Vec<NodeId> = if ablation.uses_gcn() {
        let mut w_prev = nodes.weights.clone();
        let mut seq = Vec::with_capacity(a_hats.len());
        for a_hat in a_hats {
            let a = tape.leaf(a_hat.clone());
            let step = spatial_forward(
                tape,
                a,
                nodes.f0,
                &w_prev,
                nodes.weight_grus.as_deref(),
                model,
            )?;
            w_prev = step.weights;
            seq.push(step.features);
        }
        seq
    } else {
        vec![nodes.f0; a_hats.len()]
    };

    match &nodes.temporal {
        Some(gru) => temporal_forward(tape, &spatial_seq, gru),
        None => Ok(spatial_seq),
    }
}

// ---------------------------------------------------------------------------
// Pairs and negatives
// ---------------------------------------------------------------------------

/// Positive pairs at snapshot `t`: both orientations of every edge, so each
/// node anchors its own neighborhood.
pub fn positive_pairs(net: &DynamicNetwork, t: usize) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for &(a, b) in net.edges(t)? {
        out.push((a, b));
        out.push((b, a));
    }
    Ok(out)
}

/// Noise distribution for negative sampling: p(v) proportional to
/// degree(v)^(3/4); zero-degree nodes get probability zero.
pub fn negative_distribution(degrees: &[usize]) -> Result<Vec<f64>> {
    let weights: Vec<f64> = degrees.iter().map(|&d| (d as f64).powf(0.75)).collect();
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return Err(Error::InvalidConfig(
            "negative sampling needs at least one node with positive degree".into(),
        ));
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Batch of positives with `Q` sampled negatives per positive.
#[derive(Clone, Debug)]
pub struct PairBatch {
    pub positives: Vec<(usize, usize)>,
    /// negatives[i] holds the Q negative node ids for positives[i].
    pub negatives: Vec<Vec<usize>>,
}

/// Draws negatives for one snapshot's positive pairs. Rejection sampling
/// against the anchor's neighborhood, capped at 1000 tries per draw, then a
/// uniform fallback over the valid candidates; pairs with no valid candidate
/// are skipped and counted.
pub struct NegativeSampler<'a> {
    cdf: Vec<f64>,
    neighbors: &'a [Vec<usize>],
}

impl<'a> NegativeSampler<'a> {
    pub fn new(dist: &[f64], neighbors: &'a [Vec<usize>]) -> Self {
        let mut cdf = Vec::with_capacity(dist.len());
        let mut acc = 0.0;
        for p in dist {
            acc += p;
            cdf.push(acc);
        }
        Self { cdf, neighbors }
    }

    fn draw(&self, rng: &mut Prng) -> usize {
        let r = rng.gen_range(0.0..*self.cdf.last().unwrap());
        self.cdf.partition_point(|&c| c <= r).min(self.cdf.len() - 1)
    }

    fn is_valid(&self, anchor: usize, candidate: usize) -> bool {
        candidate != anchor && self.neighbors[anchor].binary_search(&candidate).is_err()
    }

    /// `Q` negatives for the pair anchored at `anchor`, or `None` when no
    /// valid candidate exists.
    pub fn sample(&self, anchor: usize, q: usize, rng: &mut Prng) -> Option<Vec<usize>> {
        let mut out = Vec::with_capacity(q);
        for _ in 0..q {
            let mut found = None;
            for _ in 0..1000 {
                let v = self.draw(rng);
                if self.is_valid(anchor, v) {
                    found = Some(v);
                    break;
                }
            }
            let v = match found {
                Some(v) => v,
                None => {
                    let valid: Vec<usize> = (0..self.cdf.len())
                        .filter(|&v| self.is_valid(anchor, v))
                        .collect();
                    if valid.is_empty() {
                        return None;
                    }
                    valid[rng.gen_range(0..valid.len())]
                }
            };
            out.push(v);
        }
        Some(out)
    }
}

/// Builds one snapshot's batch; returns the batch and how many positive
/// pairs were skipped for lack of a valid negative.
pub fn build_batch(
    positives: &[(usize, usize)],
    sampler: &NegativeSampler,
    q: usize,
    batch_size: Option<usize>,
    rng: &mut Prng,
) -> (PairBatch, usize) {
    let chosen: Vec<(usize, usize)> = match batch_size {
        Some(b) if b < positives.len() => {
            let mut idx: Vec<usize> = (0..positives.len()).collect();
            idx.shuffle(rng);
            let mut picked: Vec<usize> = idx.into_iter().take(b).collect();
            picked.sort_unstable();
            picked.into_iter().map(|i| positives[i]).collect()
        }
        _ => positives.to_vec(),
    };
    let mut kept = Vec::with_capacity(chosen.len());
    let mut negatives = Vec::with_capacity(chosen.len());
    let mut skipped = 0usize;
    for (x, y) in chosen {
        match sampler.sample(x, q, rng) {
            Some(negs) => {
                kept.push((x, y));
                negatives.push(negs);
            }
            None => skipped += 1,
        }
    }
    (PairBatch { positives: kept, negatives }, skipped)
}

/// Margin ranking loss on one snapshot's embeddings: mean over positives of
/// `sum_q max(0, m + ||h_x - h_y||^2 - ||h_x - h_vq||^2)`.
pub fn ranking_loss<S: Scalar>(
    tape: &mut Tape<S>,
    embeddings: NodeId,
    batch: &PairBatch,
    margin: f64,
) -> Result<NodeId> {
    if batch.positives.is_empty() {
        return Ok(tape.leaf(Matrix::zeros(1, 1)));
    }
    let q = batch.negatives[0].len();
    let xs: Vec<usize> = batch.positives.iter().map(|&(x, _)| x).collect();
    let ys: Vec<usize> = batch.positives.iter().map(|&(_, y)| y).collect();

    let sq_dist = |tape: &mut Tape<S>, a: NodeId, b: NodeId| -> Result<NodeId> {
        let diff = tape.sub(a, b)?;
        let sq = tape.hadamard(diff, diff)?;
        Ok(tape.row_sum(sq))
    };

    let hx = tape.gather_rows(embeddings, xs)?;
    let hy = tape.gather_rows(embeddings, ys)?;
    let d_pos = sq_dist(tape, hx, hy)?;

    let m = S::from_f64(margin);
    let mut total: Option<NodeId> = None;
    for k in 0..q {
        let negs: Vec<usize> = batch.negatives.iter().map(|ns| ns[k]).collect();
        let hu = tape.gather_rows(embeddings, negs)?;
        let d_neg = sq_dist(tape, hx, hu)?;
        let gap = tape.sub(d_pos, d_neg)?;
        let shifted = tape.add_scalar(gap, m);
        let hinge = tape.relu(shifted);
        total = Some(match total {
            Some(acc) => tape.add(acc, hinge)?,
            None => hinge,
        });
    }
    Ok(tape.mean_all(total.unwrap()))
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

/// One epoch's logged losses.
#[derive(Clone, Debug)]
pub struct EpochLoss {
    pub epoch: usize,
    pub total: f64,
    pub per_snapshot: Vec<f64>,
}

/// Training log CSV: epoch, total loss, one column per snapshot.
pub fn write_train_log(w: &mut impl Write, log: &[EpochLoss]) -> Result<()> {
    let t_count = log.first().map_or(0, |e| e.per_snapshot.len());
    write!(w, "epoch,total_loss")?;
    for t in 1..=t_count {
        write!(w, ",snapshot_{t}")?;
    }
    writeln!(w)?;
    for e in log {
        write!(w, "{},{}", e.epoch, e.total)?;
        for v in &e.per_snapshot {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub struct TrainOutput<S> {
    pub params: GtennParams<S>,
    /// Final per-snapshot embeddings h_1..h_T (n x d each).
    pub embeddings: Vec<Matrix<S>>,
    pub log: Vec<EpochLoss>,
    /// Positive pairs dropped because no valid negative existed.
    pub skipped_pairs: usize,
}

/// Trains the selected pipeline variant on the whole snapshot sequence.
///
/// Per epoch: fresh negatives (seed derived from epoch), one forward over all
/// snapshots, loss summed over snapshots, one backward pass, one optimizer
/// step. Aborts with diagnostics when the loss goes non-finite.
pub fn train<S: Scalar>(
    net: &DynamicNetwork,
    model: &GcnConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutput<S>> {
    model.validate()?;
    cfg.validate()?;
    if net.snapshot_count() == 0 {
        return Err(Error::InvalidConfig("network has no snapshots".into()));
    }

    let t_count = net.snapshot_count();
    let mut a_hats = Vec::with_capacity(t_count);
    let mut all_positives = Vec::with_capacity(t_count);
    let mut dists = Vec::with_capacity(t_count);
    let mut neighbor_lists = Vec::with_capacity(t_count);
    for t in 1..=t_count {
        let mats = net.snapshot_matrices::<S>(t)?;
        all_positives.push(positive_pairs(net, t)?);
        dists.push(if net.edges(t)?.is_empty() {
            None
        } else {
            Some(negative_distribution(&mats.degrees)?)
        });
        neighbor_lists.push(net.neighbor_lists(t)?);
        a_hats.push(mats.a_hat);
    }

    let mut params = GtennParams::<S>::init(
        net.node_count(),
        model,
        cfg.ablation,
        &mut seeded_rng(derive_seed(cfg.seed, 0)),
    );
    let mut optimizer = Optimizer::<S>::with_method(cfg.optimizer, cfg.lr);
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut skipped_total = 0usize;

    for epoch in 1..=cfg.epochs {
        let mut rng = seeded_rng(derive_seed(cfg.seed, epoch as u64));
        let mut tape = Tape::new();
        let nodes = params.leaves(&mut tape);
        let embeddings = forward_embeddings(&mut tape, &nodes, &a_hats, model, cfg.ablation)?;

        let mut per_snapshot = Vec::with_capacity(t_count);
        let mut total: Option<NodeId> = None;
        for t in 0..t_count {
            let loss_t = match &dists[t] {
                Some(dist) => {
                    let sampler = NegativeSampler::new(dist, &neighbor_lists[t]);
                    let (batch, skipped) = build_batch(
                        &all_positives[t],
                        &sampler,
                        cfg.negatives,
                        cfg.batch_size,
                        &mut rng,
                    );
                    skipped_total += skipped;
                    ranking_loss(&mut tape, embeddings[t], &batch, cfg.margin)?
                }
                None => tape.leaf(Matrix::zeros(1, 1)),
            };
            let value = tape.scalar(loss_t).as_f64();
            if !value.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, snapshot: t + 1, lr: cfg.lr });
            }
            per_snapshot.push(value);
            total = Some(match total {
                Some(acc) => tape.add(acc, loss_t)?,
                None => loss_t,
            });
        }
        let total = total.unwrap();
        let total_value = tape.scalar(total).as_f64();
        if !total_value.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, snapshot: 0, lr: cfg.lr });
        }

        let grads = tape.backward(total)?;
        let grad_mats: Vec<Matrix<S>> =
            nodes.flat_ids().iter().map(|&id| grads.wrt(id)).collect();
        let mut slots = params.flat_mut();
        optimizer.step(&mut slots, &grad_mats)?;
        drop(slots);

        log.push(EpochLoss { epoch, total: total_value, per_snapshot });
    }

    // read out embeddings from the trained parameters
    let mut tape = Tape::new();
    let nodes = params.leaves(&mut tape);
    let ids = forward_embeddings(&mut tape, &nodes, &a_hats, model, cfg.ablation)?;
    let embeddings = ids.into_iter().map(|id| tape.value(id).clone()).collect();

    Ok(TrainOutput { params, embeddings, log, skipped_pairs: skipped_total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Mat, Tape as T64};

    fn triangle() -> DynamicNetwork {
        DynamicNetwork::new(3, vec![vec![(0, 1), (1, 2), (0, 2)]]).unwrap()
    }

    #[test]
    fn positive_pairs_cases() {
        let empty = DynamicNetwork::new(3, vec![vec![]]).unwrap();
        assert!(positive_pairs(&empty, 1).unwrap().is_empty());

        let single = DynamicNetwork::new(2, vec![vec![(0, 1)]]).unwrap();
        assert_eq!(positive_pairs(&single, 1).unwrap(), vec![(0, 1), (1, 0)]);

        assert_eq!(positive_pairs(&triangle(), 1).unwrap().len(), 6);
    }

    #[test]
    fn negative_distribution_cases() {
        let uniform = negative_distribution(&[3, 3, 3]).unwrap();
        for p in &uniform {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }

        // 16^(3/4) = 8, 1^(3/4) = 1
        let biased = negative_distribution(&[16, 1]).unwrap();
        assert!((biased[0] - 8.0 / 9.0).abs() < 1e-12);
        assert!((biased[1] - 1.0 / 9.0).abs() < 1e-12);

        let sum: f64 = negative_distribution(&[5, 2, 9, 1]).unwrap().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);

        assert!(negative_distribution(&[0, 0]).is_err());
        // zero-degree nodes get zero probability
        let with_isolated = negative_distribution(&[4, 0, 4]).unwrap();
        assert_eq!(with_isolated[1], 0.0);
    }

    #[test]
    fn sample_negatives_only_valid_candidate() {
        // edge (0,1) on 3 nodes: the only negative for anchor 0 is node 2
        let net = DynamicNetwork::new(3, vec![vec![(0, 1)]]).unwrap();
        let degrees = vec![1usize, 1, 0];
        // give node 2 sampling mass despite degree 0 being excluded: use
        // uniform fallback by making the distribution all-but-useless
        let dist = negative_distribution(&[1, 1, 1]).unwrap();
        let neighbors = net.neighbor_lists(1).unwrap();
        let sampler = NegativeSampler::new(&dist, &neighbors);
        let mut rng = seeded_rng(4);
        let negs = sampler.sample(0, 3, &mut rng).unwrap();
        assert!(negs.iter().all(|&v| v == 2), "{negs:?}");
        let _ = degrees;
    }

    #[test]
    fn sample_negatives_none_when_graph_complete_from_anchor() {
        let net = triangle();
        let dist = negative_distribution(&[2, 2, 2]).unwrap();
        let neighbors = net.neighbor_lists(1).unwrap();
        let sampler = NegativeSampler::new(&dist, &neighbors);
        let mut rng = seeded_rng(4);
        assert!(sampler.sample(0, 1, &mut rng).is_none());
    }

    #[test]
    fn sample_negatives_deterministic_under_seed() {
        let net = DynamicNetwork::new(6, vec![vec![(0, 1), (2, 3), (4, 5), (1, 2)]]).unwrap();
        let mats = net.snapshot_matrices::<f64>(1).unwrap();
        let dist = negative_distribution(&mats.degrees).unwrap();
        let neighbors = net.neighbor_lists(1).unwrap();
        let sampler = NegativeSampler::new(&dist, &neighbors);
        let a = sampler.sample(0, 8, &mut seeded_rng(9)).unwrap();
        let b = sampler.sample(0, 8, &mut seeded_rng(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_frequencies_match_the_distribution() {
        // anchor 0 only neighbors node 1; candidates 2,3,4 have distinct
        // degrees, so accepted draws follow the renormalized d^(3/4) law
        let net =
            DynamicNetwork::new(5, vec![vec![(0, 1), (2, 3), (2, 4), (3, 4), (1, 2)]]).unwrap();
        let mats = net.snapshot_matrices::<f64>(1).unwrap();
        let dist = negative_distribution(&mats.degrees).unwrap();
        let neighbors = net.neighbor_lists(1).unwrap();
        let sampler = NegativeSampler::new(&dist, &neighbors);
        let mut rng = seeded_rng(123);
        let mut counts = [0usize; 5];
        let draws = 100_000;
        for negs in (0..draws).map(|_| sampler.sample(0, 1, &mut rng).unwrap()) {
            counts[negs[0]] += 1;
        }
        assert_eq!(counts[0] + counts[1], 0);
        let valid_mass: f64 = dist[2] + dist[3] + dist[4];
        for v in 2..5 {
            let expect = dist[v] / valid_mass;
            let freq = counts[v] as f64 / draws as f64;
            assert!(
                (freq - expect).abs() / expect < 0.02,
                "node {v}: freq {freq} vs {expect}"
            );
        }
    }

    #[test]
    fn ranking_loss_hand_cases() {
        // coincident positive, negative farther than the margin: hinge inactive
        let mut tape = T64::new();
        let h = tape.leaf(Mat::from_rows(&[&[0.0, 0.0], &[0.0, 0.0], &[3.0, 0.0]]));
        let batch = PairBatch { positives: vec![(0, 1)], negatives: vec![vec![2]] };
        let loss = ranking_loss(&mut tape, h, &batch, 1.0).unwrap();
        assert_eq!(tape.scalar(loss), 0.0);

        // hand arithmetic: m + 1 - 1 = 1
        let mut tape = T64::new();
        let h = tape.leaf(Mat::from_rows(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]));
        let batch = PairBatch { positives: vec![(0, 1)], negatives: vec![vec![2]] };
        let loss = ranking_loss(&mut tape, h, &batch, 1.0).unwrap();
        assert!((tape.scalar(loss) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ranking_loss_non_negative_and_empty_batch_zero() {
        let mut tape = T64::new();
        let h = tape.leaf(crate::num::glorot_uniform(6, 3, &mut seeded_rng(8)));
        let batch = PairBatch {
            positives: vec![(0, 1), (2, 3), (4, 5)],
            negatives: vec![vec![2, 4], vec![0, 5], vec![1, 3]],
        };
        let loss = ranking_loss(&mut tape, h, &batch, 0.5).unwrap();
        assert!(tape.scalar(loss) >= 0.0);

        let empty = PairBatch { positives: vec![], negatives: vec![] };
        let z = ranking_loss(&mut tape, h, &empty, 0.5).unwrap();
        assert_eq!(tape.scalar(z), 0.0);
    }

    #[test]
    fn hinge_homogeneous_in_margin_and_squared_distances() {
        // scaling m by c and embeddings by sqrt(c) scales every term by c and
        // never flips a term between active and inactive
        let h = crate::num::glorot_uniform::<f64>(5, 3, &mut seeded_rng(14));
        let batch = PairBatch {
            positives: vec![(0, 1), (1, 2), (3, 4)],
            negatives: vec![vec![3], vec![4], vec![0]],
        };
        let eval = |mat: &Mat, m: f64| {
            let mut tape = T64::new();
            let hh = tape.leaf(mat.clone());
            let l = ranking_loss(&mut tape, hh, &batch, m).unwrap();
            tape.scalar(l)
        };
        let base = eval(&h, 0.7);
        for c in [0.5_f64, 2.0, 10.0] {
            let scaled = eval(&h.scale(c.sqrt()), 0.7 * c);
            assert!(
                (scaled - c * base).abs() < 1e-9 * c.max(1.0),
                "c = {c}: {scaled} vs {}",
                c * base
            );
        }
    }

    #[test]
    fn ranking_loss_grad_check_small_graph() {
        // 4-node graph fixture straight through the loss
        let batch = PairBatch {
            positives: vec![(0, 1), (1, 0), (2, 3), (3, 2)],
            negatives: vec![vec![2], vec![3], vec![0], vec![1]],
        };
        let h0 = crate::num::glorot_uniform::<f64>(4, 3, &mut seeded_rng(2));
        let f = |p: &[Mat]| {
            let mut tape = T64::new();
            let h = tape.leaf(p[0].clone());
            let loss = ranking_loss(&mut tape, h, &batch, 1.0)?;
            let grads = tape.backward(loss)?;
            Ok((tape.scalar(loss), vec![grads.wrt(h)]))
        };
        let err = crate::num::grad_check(f, &[h0], 1e-5).unwrap();
        assert!(err < 1e-4, "relative error {err}");
    }

    #[test]
    fn zero_learning_rate_leaves_parameters_unchanged() {
        let net = DynamicNetwork::new(4, vec![vec![(0, 1), (2, 3)]]).unwrap();
        let model = GcnConfig::two_layer(3);
        let cfg = TrainConfig {
            lr: 0.0,
            epochs: 3,
            negatives: 1,
            seed: 5,
            ..TrainConfig::default()
        };
        let out = train::<f64>(&net, &model, &cfg).unwrap();
        let fresh = GtennParams::<f64>::init(
            4,
            &model,
            cfg.ablation,
            &mut seeded_rng(derive_seed(cfg.seed, 0)),
        );
        for (a, b) in out.params.flat().iter().zip(fresh.flat().iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn ablation_modes_wire_the_right_parameters() {
        let net = DynamicNetwork::new(4, vec![vec![(0, 1), (2, 3)], vec![(0, 2), (1, 3)]]).unwrap();
        let model = GcnConfig::two_layer(2);
        for (mode, has_wgru, has_temporal, has_weights) in [
            (AblationMode::Full, true, true, true),
            (AblationMode::GcnGru, false, true, true),
            (AblationMode::GcnOnly, false, false, true),
            (AblationMode::GruOnly, false, true, false),
        ] {
            let cfg = TrainConfig {
                epochs: 2,
                negatives: 1,
                seed: 3,
                ablation: mode,
                ..TrainConfig::default()
            };
            let out = train::<f64>(&net, &model, &cfg).unwrap();
            assert_eq!(out.params.weight_grus.is_some(), has_wgru, "{mode:?}");
            assert_eq!(out.params.temporal.is_some(), has_temporal, "{mode:?}");
            assert_eq!(!out.params.stack.weights.is_empty(), has_weights, "{mode:?}");
            assert_eq!(out.embeddings.len(), 2);
        }
    }

    #[test]
    fn gru_only_ignores_graph_structure() {
        // without convolution the embeddings depend only on F0 and the GRU
        let a = DynamicNetwork::new(4, vec![vec![(0, 1), (2, 3)]]).unwrap();
        let b = DynamicNetwork::new(4, vec![vec![(0, 3), (1, 2)]]).unwrap();
        let model = GcnConfig::two_layer(2);
        let cfg = TrainConfig {
            epochs: 1,
            lr: 0.0,
            negatives: 1,
            seed: 11,
            ablation: AblationMode::GruOnly,
            ..TrainConfig::default()
        };
        let ea = train::<f64>(&a, &model, &cfg).unwrap().embeddings;
        let eb = train::<f64>(&b, &model, &cfg).unwrap().embeddings;
        for (x, y) in ea.iter().zip(eb.iter()) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn gcn_only_embeddings_are_final_layer_features() {
        let net = DynamicNetwork::new(4, vec![vec![(0, 1), (1, 2)]]).unwrap();
        let model = GcnConfig::two_layer(2);
        let cfg = TrainConfig {
            epochs: 1,
            lr: 0.0,
            negatives: 1,
            seed: 7,
            ablation: AblationMode::GcnOnly,
            ..TrainConfig::default()
        };
        let out = train::<f64>(&net, &model, &cfg).unwrap();
        // recompute the spatial stack by hand from the same initial params
        let params = GtennParams::<f64>::init(
            4,
            &model,
            AblationMode::GcnOnly,
            &mut seeded_rng(derive_seed(7, 0)),
        );
        let a_hat: Mat = net.snapshot_matrices(1).unwrap().a_hat;
        let mut tape = T64::new();
        let nodes = params.leaves(&mut tape);
        let a = tape.leaf(a_hat);
        let step = spatial_forward(&mut tape, a, nodes.f0, &nodes.weights, None, &model).unwrap();
        assert_eq!(out.embeddings[0], *tape.value(step.features));
    }
}
