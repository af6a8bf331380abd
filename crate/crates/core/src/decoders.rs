//! Decoders: generic maximum likelihood over an ensemble, the
//! agreement-counting and blockwise shortcuts that make the experiments
//! tractable, and the approximate-recovery-optimal rule for tiny families.
//!
//! Every decoder sees the samples only through [`PairStatistics`], and all
//! ties break toward the smallest member index, so trials are reproducible
//! and the shortcut decoders agree with `ml_decode` exactly.

use crate::ensembles::{pair_index, subset_rank, FamilyId, GraphEnsemble, MemberIndex,
    MAX_ENUMERABLE};
use crate::error::{Error, Result};
use crate::model::{log_add_exp, IsingModel, TableCache, TableKey};
use crate::sample::SampleMatrix;

/// Candidate-count times ball-size ceiling for the approximate-recovery rule.
pub const APPROX_ML_WORK_CAP: u128 = 1 << 24;

/// The sufficient statistic for all likelihoods: S_ij = sum over rows of
/// x_i x_j, with S_ii = n.
pub struct PairStatistics {
    p: usize,
    n: usize,
    s: Vec<i64>,
}

impl PairStatistics {
    pub fn from_samples(x: &SampleMatrix) -> Self {
        let p = x.p();
        let mut s = vec![0i64; p * p];
        for i in 0..p {
            s[i * p + i] = x.n() as i64;
            for j in (i + 1)..p {
                let v = x.pair_sum(i, j);
                s[i * p + j] = v;
                s[j * p + i] = v;
            }
        }
        PairStatistics { p, n: x.n(), s }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.s[i * self.p + j]
    }

    fn edge_sum(&self, edges: &[(u32, u32)]) -> i64 {
        edges
            .iter()
            .map(|&(a, b)| self.get(a as usize, b as usize))
            .sum()
    }
}

fn check_dims(e: &GraphEnsemble, s: &PairStatistics) -> Result<()> {
    if e.p() != s.p() {
        return Err(Error::DimensionMismatch {
            expected: e.p(),
            got: s.p(),
        });
    }
    Ok(())
}

// ---- generic maximum likelihood ----------------------------------------

struct MemberScore {
    edges: Vec<(u32, u32)>,
    log_z: f64,
}

/// Precomputed scoring data for exhaustive ML over every member: per-member
/// edge lists plus log-partition values cached per component structure.
pub struct MlPlan {
    lambda: f64,
    members: Vec<MemberScore>,
}

impl MlPlan {
    pub fn new(e: &GraphEnsemble, cache: &TableCache) -> Result<Self> {
        let card = e.cardinality().ok_or_else(|| {
            Error::ResourceCap("ml_decode: ensemble cardinality unknown".into())
        })?;
        if card > MAX_ENUMERABLE {
            return Err(Error::ResourceCap(format!(
                "ml_decode: |T| = {card} exceeds the search cap {MAX_ENUMERABLE}"
            )));
        }
        let mut members = Vec::with_capacity(card as usize);
        for idx in 0..card {
            let graph = e.index_to_graph(idx)?;
            let model = IsingModel::with_cache(graph, cache)?;
            members.push(MemberScore {
                edges: model.graph().edges().to_vec(),
                log_z: model.log_partition(),
            });
        }
        Ok(MlPlan {
            lambda: e.lambda(),
            members,
        })
    }

    fn score(&self, s: &PairStatistics, idx: usize) -> f64 {
        let m = &self.members[idx];
        self.lambda * s.edge_sum(&m.edges) as f64 - s.n() as f64 * m.log_z
    }

    pub fn decode(&self, s: &PairStatistics) -> MemberIndex {
        let mut best = 0usize;
        let mut best_score = self.score(s, 0);
        for idx in 1..self.members.len() {
            let score = self.score(s, idx);
            if score > best_score {
                best = idx;
                best_score = score;
            }
        }
        best as MemberIndex
    }

    /// Per-member log-likelihoods, for the approximate-recovery rule.
    fn log_likelihoods(&self, s: &PairStatistics) -> Vec<f64> {
        (0..self.members.len()).map(|i| self.score(s, i)).collect()
    }

    /// Approximate-recovery-optimal rule: argmax over members of the
    /// log-sum-exp of likelihoods within edit distance q_max, ties to the
    /// smallest index.
    fn decode_approx(&self, s: &PairStatistics, q_max: usize) -> MemberIndex {
        let logliks = self.log_likelihoods(s);
        let mut best = 0usize;
        let mut best_score = f64::NEG_INFINITY;
        for (g, center) in self.members.iter().enumerate() {
            let mut score = f64::NEG_INFINITY;
            for (gp, other) in self.members.iter().enumerate() {
                if crate::graph::edit_distance(&center.edges, &other.edges) <= q_max {
                    score = log_add_exp(score, logliks[gp]);
                }
            }
            if score > best_score {
                best = g;
                best_score = score;
            }
        }
        best as MemberIndex
    }

    #[cfg(test)]
    fn shifted(&self, delta: f64) -> MlPlan {
        MlPlan {
            lambda: self.lambda,
            members: self
                .members
                .iter()
                .map(|m| MemberScore {
                    edges: m.edges.clone(),
                    log_z: m.log_z + delta,
                })
                .collect(),
        }
    }
}

/// Exhaustive ML: argmax over members of lambda * sum_E S_ij - n log Z,
/// ties to the smallest index.
pub fn ml_decode(e: &GraphEnsemble, s: &PairStatistics) -> Result<MemberIndex> {
    check_dims(e, s)?;
    let cache = TableCache::new(e.lambda());
    Ok(MlPlan::new(e, &cache)?.decode(s))
}

// ---- agreement-sort shortcut --------------------------------------------

/// O(p^2 + sort) ML for the families whose members all share one partition
/// function: Ensemble 1a (pick the top-alpha fixed pairs by agreement count)
/// and the single-edge counterpart (pick the top pair overall).
pub struct AgreementPlan {
    family: FamilyId,
    p: usize,
    alpha: usize,
}

impl AgreementPlan {
    pub fn new(e: &GraphEnsemble) -> Result<Self> {
        match e.family() {
            FamilyId::Ens1a | FamilyId::CpSingleEdge => Ok(AgreementPlan {
                family: e.family(),
                p: e.p(),
                alpha: e.params().alpha,
            }),
            other => Err(Error::DecoderFamilyMismatch {
                decoder: "agreement",
                family: other.name(),
            }),
        }
    }

    pub fn decode(&self, s: &PairStatistics) -> MemberIndex {
        match self.family {
            FamilyId::Ens1a => {
                let pairs = self.p / 2;
                let mut order: Vec<(i64, usize)> = (0..pairs)
                    .map(|i| (s.get(2 * i, 2 * i + 1), i))
                    .collect();
                // Descending statistic, ascending pair index: the chosen set
                // is the smallest-index maximizer, matching ml_decode's ties.
                order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
                let mut chosen: Vec<usize> = order[..self.alpha].iter().map(|&(_, i)| i).collect();
                chosen.sort_unstable();
                subset_rank(&chosen)
            }
            FamilyId::CpSingleEdge => {
                let (mut best, mut best_s) = ((0usize, 1usize), i64::MIN);
                for a in 0..self.p {
                    for b in (a + 1)..self.p {
                        let v = s.get(a, b);
                        if v > best_s {
                            best = (a, b);
                            best_s = v;
                        }
                    }
                }
                pair_index(self.p, best.0, best.1)
            }
            _ => unreachable!("constructor restricts the family"),
        }
    }
}

pub fn ml_agreement_sort(e: &GraphEnsemble, s: &PairStatistics) -> Result<MemberIndex> {
    check_dims(e, s)?;
    Ok(AgreementPlan::new(e)?.decode(s))
}

// ---- blockwise factorized ML ---------------------------------------------

struct BlockPlan {
    bit_offset: usize,
    bits: usize,
    base_edges: Vec<(u32, u32)>,
    variable_edges: Vec<(u32, u32)>,
    /// log Z of the block for each local edge mask.
    log_z: Vec<f64>,
}

/// Factorized ML for the block-product families (Ensembles 2-4): per-block
/// argmax over the 2^bits local candidates, identical to `ml_decode` by the
/// factorization of both the likelihood and the member index.
pub struct BlockwisePlan {
    lambda: f64,
    blocks: Vec<BlockPlan>,
}

impl BlockwisePlan {
    pub fn new(e: &GraphEnsemble, cache: &TableCache) -> Result<Self> {
        let blocks = e.blocks().ok_or(Error::DecoderFamilyMismatch {
            decoder: "blockwise",
            family: e.family().name(),
        })?;
        let mut plans = Vec::with_capacity(blocks.len());
        for spec in blocks {
            let bits = spec.variable_edges.len();
            if bits >= 24 {
                return Err(Error::ResourceCap(format!(
                    "blockwise: 2^{bits} candidates per block exceeds the cap"
                )));
            }
            let mut log_z = Vec::with_capacity(1 << bits);
            for mask in 0u32..(1 << bits) {
                log_z.push(block_log_z(spec_key(spec, mask), cache));
            }
            plans.push(BlockPlan {
                bit_offset: spec.bit_offset,
                bits,
                base_edges: spec.base_edges.clone(),
                variable_edges: spec.variable_edges.clone(),
                log_z,
            });
        }
        Ok(BlockwisePlan {
            lambda: e.lambda(),
            blocks: plans,
        })
    }

    pub fn decode(&self, s: &PairStatistics) -> MemberIndex {
        let nf = s.n() as f64;
        let mut member: MemberIndex = 0;
        let mut edge_sums: Vec<i64> = Vec::new();
        for block in &self.blocks {
            let base: i64 = s.edge_sum(&block.base_edges);
            let n_masks = 1usize << block.bits;
            // Subset-sum DP: each mask extends mask & (mask - 1) by one edge.
            edge_sums.clear();
            edge_sums.resize(n_masks, 0);
            for mask in 1..n_masks {
                let bit = mask.trailing_zeros() as usize;
                let (a, b) = block.variable_edges[bit];
                edge_sums[mask] =
                    edge_sums[mask & (mask - 1)] + s.get(a as usize, b as usize);
            }
            let mut best_mask = 0usize;
            let mut best_score =
                self.lambda * (base + edge_sums[0]) as f64 - nf * block.log_z[0];
            for mask in 1..n_masks {
                let score =
                    self.lambda * (base + edge_sums[mask]) as f64 - nf * block.log_z[mask];
                if score > best_score {
                    best_mask = mask;
                    best_score = score;
                }
            }
            member |= (best_mask as MemberIndex) << block.bit_offset;
        }
        member
    }
}

/// Table key for a block with the given variable-edge mask, in the block's
/// local vertex labels.
fn spec_key(spec: &crate::ensembles::BlockSpec, mask: u32) -> TableKey {
    let lo = spec.vertices[0];
    let mut edges: Vec<(u8, u8)> = spec
        .base_edges
        .iter()
        .copied()
        .chain(
            spec.variable_edges
                .iter()
                .enumerate()
                .filter(|&(i, _)| (mask >> i) & 1 == 1)
                .map(|(_, &e)| e),
        )
        .map(|(a, b)| ((a - lo) as u8, (b - lo) as u8))
        .collect();
    edges.sort_unstable();
    TableKey {
        size: spec.vertices.len() as u8,
        edges,
    }
}

fn block_log_z(key: TableKey, cache: &TableCache) -> f64 {
    // Whole-block tables are exact regardless of connectivity; reuse the
    // shared cache so sampling and decoding share structures.
    cache.get_or_build(key).log_z
}

pub fn ml_blockwise(e: &GraphEnsemble, s: &PairStatistics) -> Result<MemberIndex> {
    check_dims(e, s)?;
    let cache = TableCache::new(e.lambda());
    Ok(BlockwisePlan::new(e, &cache)?.decode(s))
}

// ---- approximate-recovery-optimal rule ------------------------------------

/// The Bayes-optimal rule for the approximate criterion: argmax over members
/// G of log sum over members G' within edit distance q_max of exp(loglik G').
/// Reference implementation for tiny families; the ball is enumerated by
/// filtering on edit distance.
pub fn approx_ml_decode(
    e: &GraphEnsemble,
    x: &SampleMatrix,
    q_max: usize,
) -> Result<MemberIndex> {
    let card = e.cardinality().ok_or_else(|| {
        Error::ResourceCap("approx_ml_decode: ensemble cardinality unknown".into())
    })?;
    if card.saturating_mul(card) > APPROX_ML_WORK_CAP {
        return Err(Error::ResourceCap(format!(
            "approx_ml_decode: |T|^2 = {} exceeds the cap {APPROX_ML_WORK_CAP}",
            card.saturating_mul(card)
        )));
    }
    let s = PairStatistics::from_samples(x);
    check_dims(e, &s)?;
    let cache = TableCache::new(e.lambda());
    Ok(MlPlan::new(e, &cache)?.decode_approx(&s, q_max))
}

// ---- decoder selection for the harness ------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderKind {
    Ml,
    Agreement,
    Blockwise,
    ApproxMl,
}

impl DecoderKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "ml" => Ok(DecoderKind::Ml),
            "agreement" => Ok(DecoderKind::Agreement),
            "blockwise" => Ok(DecoderKind::Blockwise),
            "approx-ml" => Ok(DecoderKind::ApproxMl),
            other => Err(Error::Parse(format!(
                "unknown decoder {other:?} (expected ml, agreement, blockwise, approx-ml)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DecoderKind::Ml => "ml",
            DecoderKind::Agreement => "agreement",
            DecoderKind::Blockwise => "blockwise",
            DecoderKind::ApproxMl => "approx-ml",
        }
    }
}

/// A decoder prepared against a fixed ensemble, reusable across trials and
/// shareable across worker threads.
pub enum Decoder {
    Ml(MlPlan),
    Agreement(AgreementPlan),
    Blockwise(BlockwisePlan),
    ApproxMl { plan: MlPlan, q_max: usize },
}

impl Decoder {
    pub fn prepare(
        kind: DecoderKind,
        e: &GraphEnsemble,
        cache: &TableCache,
        q_max: usize,
    ) -> Result<Self> {
        match kind {
            DecoderKind::Ml => Ok(Decoder::Ml(MlPlan::new(e, cache)?)),
            DecoderKind::Agreement => Ok(Decoder::Agreement(AgreementPlan::new(e)?)),
            DecoderKind::Blockwise => Ok(Decoder::Blockwise(BlockwisePlan::new(e, cache)?)),
            DecoderKind::ApproxMl => {
                let card = e.cardinality().unwrap_or(u128::MAX);
                if card.saturating_mul(card) > APPROX_ML_WORK_CAP {
                    return Err(Error::ResourceCap(
                        "approx-ml decoder needs a tiny ensemble".into(),
                    ));
                }
                Ok(Decoder::ApproxMl {
                    plan: MlPlan::new(e, cache)?,
                    q_max,
                })
            }
        }
    }

    pub fn decode(&self, s: &PairStatistics) -> MemberIndex {
        match self {
            Decoder::Ml(plan) => plan.decode(s),
            Decoder::Agreement(plan) => plan.decode(s),
            Decoder::Blockwise(plan) => plan.decode(s),
            Decoder::ApproxMl { plan, q_max } => plan.decode_approx(s, *q_max),
        }
    }
}
