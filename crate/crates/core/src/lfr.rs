//! Dynamic LFR benchmark generator.
//!
//! Produces networks with planted power-law degree and community-size
//! distributions. Each node splits its degree into (1-mu) intra-community
//! stubs and mu inter-community stubs; stubs are matched configuration-model
//! style with repair sweeps that remove self-loops, duplicate edges, and
//! (for the inter pool) same-community pairs.
//!
//! Later snapshots evolve by membership churn: a configured fraction of nodes
//! migrates to a uniformly random different community and has its edges
//! rewired to restore the intra/inter split; edges between unmigrated nodes
//! are untouched.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{DynamicNetwork, Partition};
use crate::num::{seeded_rng, Prng};

const REPAIR_SWEEPS: usize = 100;
const SIZE_FIT_ROUNDS: usize = 10_000;

#[derive(Clone, Debug)]
pub struct LfrConfig {
    /// Node count N.
    pub nodes: usize,
    /// Snapshot count s.
    pub snapshots: usize,
    /// Mixing parameter: fraction of each node's edges leaving its community.
    pub mu: f64,
    /// Target average degree; the minimum degree is solved from it.
    pub avg_degree: f64,
    pub max_degree: usize,
    pub min_community: usize,
    pub max_community: usize,
    /// Degree power-law exponent.
    pub gamma: f64,
    /// Community-size power-law exponent.
    pub beta: f64,
    /// Fraction of nodes migrating between communities per snapshot.
    pub churn: f64,
    pub seed: u64,
}

impl LfrConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.nodes == 0 {
            return bad("LFR: node count must be positive".into());
        }
        if self.snapshots == 0 {
            return bad("LFR: snapshot count must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.mu) {
            return bad(format!("LFR: mu must be in [0,1], got {}", self.mu));
        }
        if self.avg_degree <= 0.0 || self.avg_degree > self.max_degree as f64 {
            return bad(format!(
                "LFR: avg degree {} must be in (0, max_degree {}]",
                self.avg_degree, self.max_degree
            ));
        }
        if self.max_degree >= self.nodes {
            return bad(format!(
                "LFR: max degree {} must be below node count {}",
                self.max_degree, self.nodes
            ));
        }
        if self.min_community == 0
            || self.min_community > self.max_community
            || self.max_community > self.nodes
        {
            return bad(format!(
                "LFR: community size range [{}, {}] invalid for {} nodes",
                self.min_community, self.max_community, self.nodes
            ));
        }
        if self.gamma <= 1.0 || self.beta <= 1.0 {
            return bad(format!(
                "LFR: power-law exponents must exceed 1 (gamma {}, beta {})",
                self.gamma, self.beta
            ));
        }
        if !(0.0..1.0).contains(&self.churn) {
            return bad(format!("LFR: churn must be in [0,1), got {}", self.churn));
        }
        Ok(())
    }
}

/// The eight benchmark presets: mu = 0.1 .. 0.8 on a 1000-node, 9-snapshot
/// network with average degree 15, max degree 30, community sizes 10..50,
/// gamma 2.5, beta 1.5.
pub fn lfr_preset(index: usize, seed: u64) -> Result<LfrConfig> {
    if !(1..=8).contains(&index) {
        return Err(Error::InvalidConfig(format!("LFR preset index {index} outside 1..=8")));
    }
    Ok(LfrConfig {
        nodes: 1000,
        snapshots: 9,
        mu: index as f64 / 10.0,
        avg_degree: 15.0,
        max_degree: 30,
        min_community: 10,
        max_community: 50,
        gamma: 2.5,
        beta: 1.5,
        churn: 0.1,
        seed,
    })
}

// ---------------------------------------------------------------------------
// Power-law sampling
// ---------------------------------------------------------------------------

fn powerlaw_weights(exponent: f64, lo: usize, hi: usize) -> Vec<f64> {
    (lo..=hi).map(|k| (k as f64).powf(-exponent)).collect()
}

fn sample_powerlaw_with(
    count: usize,
    exponent: f64,
    lo: usize,
    hi: usize,
    rng: &mut Prng,
) -> Result<Vec<usize>> {
    if lo == 0 || lo > hi {
        return Err(Error::InvalidConfig(format!("power-law bounds [{lo}, {hi}] infeasible")));
    }
    if exponent <= 1.0 {
        return Err(Error::InvalidConfig(format!("power-law exponent {exponent} must exceed 1")));
    }
    let weights = powerlaw_weights(exponent, lo, hi);
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in &weights {
        acc += w;
        cdf.push(acc);
    }
    let total = acc;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let r = rng.gen_range(0.0..total);
        let idx = cdf.partition_point(|&c| c <= r);
        out.push(lo + idx.min(hi - lo));
    }
    Ok(out)
}

/// Draws `count` integers with P(k) proportional to k^-exponent on [lo, hi].
pub fn sample_powerlaw(
    count: usize,
    exponent: f64,
    lo: usize,
    hi: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    sample_powerlaw_with(count, exponent, lo, hi, &mut seeded_rng(seed))
}

/// Degree sequence with even sum: resamples the last element until the
/// handshake parity holds.
fn even_degree_sequence(
    count: usize,
    exponent: f64,
    lo: usize,
    hi: usize,
    rng: &mut Prng,
) -> Result<Vec<usize>> {
    let mut degrees = sample_powerlaw_with(count, exponent, lo, hi, rng)?;
    let mut tries = 0;
    while degrees.iter().sum::<usize>() % 2 != 0 {
        tries += 1;
        if tries > 1000 {
            return Err(Error::Generation(
                "cannot reach an even degree sum; widen the degree bounds".into(),
            ));
        }
        let last = sample_powerlaw_with(1, exponent, lo, hi, rng)?[0];
        *degrees.last_mut().unwrap() = last;
    }
    Ok(degrees)
}

/// Mean of the truncated discrete power law, by direct summation.
fn truncated_mean(exponent: f64, lo: usize, hi: usize) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for k in lo..=hi {
        let w = (k as f64).powf(-exponent);
        num += k as f64 * w;
        den += w;
    }
    num / den
}

/// Smallest-degree bound that makes the truncated power-law mean hit the
/// configured average degree as closely as possible.
fn solve_min_degree(avg: f64, exponent: f64, hi: usize) -> usize {
    let mut best = 1;
    let mut best_err = f64::MAX;
    for lo in 1..=hi {
        let err = (truncated_mean(exponent, lo, hi) - avg).abs();
        if err < best_err {
            best_err = err;
            best = lo;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Stub matching
// ---------------------------------------------------------------------------

/// Pairs up stubs into edges, repairing self-loops, duplicates, and pairs the
/// validator rejects by random endpoint swaps. `existing` holds edges already
/// placed elsewhere in the graph that must not be duplicated.
///
/// A residue of structurally unmatched stubs below 0.5% (or two pairs, for
/// small pools) is dropped — degree drift that small is invisible at the
/// configured tolerances; anything larger is a hard failure.
fn match_stubs(
    mut stubs: Vec<usize>,
    valid: impl Fn(usize, usize) -> bool,
    existing: &HashSet<(usize, usize)>,
    rng: &mut Prng,
) -> Result<Vec<(usize, usize)>> {
    if stubs.len() % 2 != 0 {
        return Err(Error::Generation("odd stub count".into()));
    }
    if stubs.is_empty() {
        return Ok(Vec::new());
    }
    stubs.shuffle(rng);
    let mut pairs: Vec<(usize, usize)> = stubs.chunks(2).map(|c| (c[0], c[1])).collect();

    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let pair_ok = |a: usize, b: usize, used: &HashSet<(usize, usize)>| {
        a != b && valid(a, b) && !existing.contains(&key(a, b)) && !used.contains(&key(a, b))
    };

    for sweep in 0..=REPAIR_SWEEPS {
        // classify pairs; the first holder of an edge key is the good one
        let mut used: HashSet<(usize, usize)> = HashSet::new();
        let mut good = vec![false; pairs.len()];
        let mut bad = Vec::new();
        for (i, &(a, b)) in pairs.iter().enumerate() {
            if a != b && valid(a, b) && !existing.contains(&key(a, b)) && used.insert(key(a, b)) {
                good[i] = true;
            } else {
                bad.push(i);
            }
        }
        if bad.is_empty() {
            return Ok(pairs);
        }
        if sweep == REPAIR_SWEEPS {
            if bad.len() <= (pairs.len() / 200).max(2) {
                let kept: Vec<(usize, usize)> = pairs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| good[*i])
                    .map(|(_, &p)| p)
                    .collect();
                return Ok(kept);
            }
            return Err(Error::Generation(format!(
                "stub matching left {} of {} pairs unresolved after {REPAIR_SWEEPS} repair sweeps",
                bad.len(),
                pairs.len()
            )));
        }
        for &i in &bad {
            if good[i] {
                continue; // fixed by an earlier bad-bad swap this sweep
            }
            for _try in 0..50 {
                let j = rng.gen_range(0..pairs.len());
                if j == i {
                    continue;
                }
                let (a1, b1) = pairs[i];
                let (a2, b2) = pairs[j];
                let (k1, k2) = (key(a1, b2), key(a2, b1));
                if k1 == k2 || !pair_ok(a1, b2, &used) || !pair_ok(a2, b1, &used) {
                    continue;
                }
                if good[j] {
                    used.remove(&key(a2, b2));
                }
                used.insert(k1);
                used.insert(k2);
                pairs[i] = (a1, b2);
                pairs[j] = (a2, b1);
                good[i] = true;
                good[j] = true;
                break;
            }
        }
    }
    unreachable!("loop returns or errors on the final sweep")
}

// ---------------------------------------------------------------------------
// Static snapshot
// ---------------------------------------------------------------------------

/// Community sizes that sum to `n` exactly, resampled (never truncated) so
/// the size distribution keeps its power law.
fn community_sizes(cfg: &LfrConfig, rng: &mut Prng) -> Result<Vec<usize>> {
    let mut sizes: Vec<usize> = Vec::new();
    let mut total = 0usize;
    for _ in 0..SIZE_FIT_ROUNDS {
        while total < cfg.nodes {
            let s = sample_powerlaw_with(1, cfg.beta, cfg.min_community, cfg.max_community, rng)?[0];
            sizes.push(s);
            total += s;
        }
        if total == cfg.nodes {
            return Ok(sizes);
        }
        // overshoot: drop a random size and refill
        let drop = rng.gen_range(0..sizes.len());
        total -= sizes.swap_remove(drop);
    }
    Err(Error::Generation(
        "community sizes never tiled the node count; widen the size range".into(),
    ))
}

struct StaticSnapshot {
    edges: Vec<(usize, usize)>,
    labels: Vec<usize>,
}

fn generate_static_with(cfg: &LfrConfig, rng: &mut Prng) -> Result<StaticSnapshot> {
    let n = cfg.nodes;
    let lo = solve_min_degree(cfg.avg_degree, cfg.gamma, cfg.max_degree);
    let degrees = even_degree_sequence(n, cfg.gamma, lo, cfg.max_degree, rng)?;
    let sizes = community_sizes(cfg, rng)?;
    let comm_count = sizes.len();

    // intra/inter split per node
    let mut intra: Vec<usize> = degrees.iter().map(|&d| ((1.0 - cfg.mu) * d as f64).round() as usize).collect();

    // assign nodes to communities: hubs first so they land where they fit
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(intra[v]));
    let mut remaining = sizes.clone();
    let mut labels = vec![usize::MAX; n];
    for &v in &order {
        let fits: Vec<usize> = (0..comm_count)
            .filter(|&c| remaining[c] > 0 && sizes[c] > intra[v])
            .collect();
        let c = if fits.is_empty() {
            // no community is large enough; take any open one and clamp the
            // node's intra degree to what it can host
            let open: Vec<usize> = (0..comm_count).filter(|&c| remaining[c] > 0).collect();
            let c = open[rng.gen_range(0..open.len())];
            intra[v] = sizes[c] - 1;
            c
        } else {
            fits[rng.gen_range(0..fits.len())]
        };
        labels[v] = c;
        remaining[c] -= 1;
    }

    let mut inter: Vec<usize> = (0..n).map(|v| degrees[v] - intra[v]).collect();

    // parity inside each community: drop one intra stub from the heaviest node
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); comm_count];
    for v in 0..n {
        members[labels[v]].push(v);
    }
    for m in &members {
        let sum: usize = m.iter().map(|&v| intra[v]).sum();
        if sum % 2 != 0 {
            let heaviest = *m.iter().max_by_key(|&&v| (intra[v], std::cmp::Reverse(v))).unwrap();
            intra[heaviest] -= 1;
        }
    }
    // global parity for the inter pool
    if inter.iter().sum::<usize>() % 2 != 0 {
        let heaviest = (0..n).max_by_key(|&v| (inter[v], std::cmp::Reverse(v))).unwrap();
        inter[heaviest] -= 1;
    }

    // wire intra edges community by community
    let mut edge_set: HashSet<(usize, usize)> = HashSet::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for m in &members {
        let mut stubs = Vec::new();
        for &v in m {
            stubs.extend(std::iter::repeat(v).take(intra[v]));
        }
        let wired = match_stubs(stubs, |_, _| true, &edge_set, rng)?;
        for (a, b) in wired {
            edge_set.insert((a.min(b), a.max(b)));
            edges.push((a, b));
        }
    }

    // wire inter edges globally, rejecting same-community pairs
    let mut stubs = Vec::new();
    for v in 0..n {
        stubs.extend(std::iter::repeat(v).take(inter[v]));
    }
    let wired = match_stubs(stubs, |a, b| labels[a] != labels[b], &edge_set, rng)?;
    for (a, b) in wired {
        edge_set.insert((a.min(b), a.max(b)));
        edges.push((a, b));
    }

    Ok(StaticSnapshot { edges, labels })
}

/// Single static LFR snapshot: edge set plus node -> community labels.
pub fn generate_static_lfr(cfg: &LfrConfig) -> Result<(Vec<(usize, usize)>, Vec<usize>)> {
    cfg.validate()?;
    let snap = generate_static_with(cfg, &mut seeded_rng(cfg.seed))?;
    Ok((snap.edges, snap.labels))
}

// ---------------------------------------------------------------------------
// Evolution
// ---------------------------------------------------------------------------

fn evolve_with(
    prev_edges: &[(usize, usize)],
    prev_labels: &[usize],
    cfg: &LfrConfig,
    rng: &mut Prng,
) -> Result<(Vec<(usize, usize)>, Vec<usize>)> {
    let n = prev_labels.len();
    let migrate_count = (cfg.churn * n as f64).round() as usize;
    if migrate_count == 0 {
        return Ok((prev_edges.to_vec(), prev_labels.to_vec()));
    }

    let comm_ids: Vec<usize> = {
        let set: std::collections::BTreeSet<usize> = prev_labels.iter().copied().collect();
        set.into_iter().collect()
    };
    if comm_ids.len() < 2 {
        return Err(Error::Generation(
            "cannot migrate nodes: only one community present".into(),
        ));
    }

    // pick migrants
    let mut pool: Vec<usize> = (0..n).collect();
    pool.shuffle(rng);
    let mut migrants: Vec<usize> = pool[..migrate_count].to_vec();
    migrants.sort_unstable();

    // reassign each migrant to a uniformly random different community
    let mut labels = prev_labels.to_vec();
    for &v in &migrants {
        loop {
            let c = comm_ids[rng.gen_range(0..comm_ids.len())];
            if c != prev_labels[v] {
                labels[v] = c;
                break;
            }
        }
    }

    // strip migrant-incident edges, keep everything else
    let is_migrant: Vec<bool> = {
        let mut f = vec![false; n];
        for &v in &migrants {
            f[v] = true;
        }
        f
    };
    let mut degrees = vec![0usize; n];
    for &(a, b) in prev_edges {
        degrees[a] += 1;
        degrees[b] += 1;
    }
    let mut edge_set: HashSet<(usize, usize)> = HashSet::new();
    let mut new_degrees = vec![0usize; n];
    for &(a, b) in prev_edges {
        if !is_migrant[a] && !is_migrant[b] {
            edge_set.insert((a.min(b), a.max(b)));
            new_degrees[a] += 1;
            new_degrees[b] += 1;
        }
    }

    let mut members: Vec<Vec<usize>> = Vec::new();
    let comm_index = |c: usize| comm_ids.binary_search(&c).unwrap();
    members.resize(comm_ids.len(), Vec::new());
    for v in 0..n {
        members[comm_index(labels[v])].push(v);
    }

    // rewire each migrant to restore its intra/inter split at its new home
    for &v in &migrants {
        let target_degree = degrees[v];
        let home = comm_index(labels[v]);
        let mut want_intra = ((1.0 - cfg.mu) * target_degree as f64).round() as usize;
        let mut want_inter = target_degree - want_intra;

        let adjacent = |edge_set: &HashSet<(usize, usize)>, a: usize, b: usize| {
            edge_set.contains(&(a.min(b), a.max(b)))
        };

        // intra candidates: new community members, unlinked, not self
        let mut intra_pool: Vec<usize> = members[home]
            .iter()
            .copied()
            .filter(|&u| u != v && !adjacent(&edge_set, v, u))
            .collect();
        // prefer partners that still have degree headroom
        intra_pool.shuffle(rng);
        intra_pool.sort_by_key(|&u| new_degrees[u] >= cfg.max_degree);
        want_intra = want_intra.min(intra_pool.len());
        for &u in intra_pool.iter().take(want_intra) {
            edge_set.insert((v.min(u), v.max(u)));
            new_degrees[v] += 1;
            new_degrees[u] += 1;
        }

        let mut inter_pool: Vec<usize> = (0..n)
            .filter(|&u| u != v && labels[u] != labels[v] && !adjacent(&edge_set, v, u))
            .collect();
        inter_pool.shuffle(rng);
        inter_pool.sort_by_key(|&u| new_degrees[u] >= cfg.max_degree);
        want_inter = want_inter.min(inter_pool.len());
        for &u in inter_pool.iter().take(want_inter) {
            edge_set.insert((v.min(u), v.max(u)));
            new_degrees[v] += 1;
            new_degrees[u] += 1;
        }
    }

    let mut edges: Vec<(usize, usize)> = edge_set.into_iter().collect();
    edges.sort_unstable();
    Ok((edges, labels))
}

/// One evolution step: `churn * N` nodes migrate to a random different
/// community and get rewired; everything else is preserved.
pub fn evolve_snapshot(
    prev_edges: &[(usize, usize)],
    prev_labels: &[usize],
    cfg: &LfrConfig,
) -> Result<(Vec<(usize, usize)>, Vec<usize>)> {
    cfg.validate()?;
    evolve_with(prev_edges, prev_labels, cfg, &mut seeded_rng(cfg.seed))
}

/// Full dynamic benchmark: static first snapshot, then repeated churn steps,
/// with the planted partition attached as ground truth.
pub fn generate_dynamic_lfr(cfg: &LfrConfig) -> Result<DynamicNetwork> {
    cfg.validate()?;
    let mut rng = seeded_rng(cfg.seed);
    let first = generate_static_with(cfg, &mut rng)?;
    let mut snapshots = vec![first.edges];
    let mut truths = vec![Partition::new(1, first.labels)];
    for t in 2..=cfg.snapshots {
        let (edges, labels) = evolve_with(
            snapshots.last().unwrap(),
            &truths.last().unwrap().labels,
            cfg,
            &mut rng,
        )?;
        snapshots.push(edges);
        truths.push(Partition::new(t, labels));
    }
    DynamicNetwork::new(cfg.nodes, snapshots)?.with_ground_truth(truths)
}

/// Fraction of edges whose endpoints lie in different communities.
pub fn measured_mixing(edges: &[(usize, usize)], labels: &[usize]) -> f64 {
    if edges.is_empty() {
        return 0.0;
    }
    let inter = edges.iter().filter(|&&(a, b)| labels[a] != labels[b]).count();
    inter as f64 / edges.len() as f64
}
