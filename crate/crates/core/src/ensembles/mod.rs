//! Restricted graph families used inside Fano's inequality, plus the
//! exact-recovery counterpart families they are compared against.
//!
//! Every ensemble is a finite indexed family T of graphs on p vertices with
//! a common coupling, a reference graph G', a KL radius bounding
//! D(P_G || P_G') over members G, and a distortion-ball counting expression
//! A(q). Members are addressed by a `MemberIndex`; `index_to_graph` and
//! `graph_to_index` are mutually inverse over the whole family.

mod separation;

pub use separation::{class_membership, verify_separation, ClassId, ClassParams,
    DEFAULT_SEPARATION_WORK_LIMIT};

use crate::bounds::{self, ln_choose};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{IsingModel, TableCache};
use crate::rng::SplitMix64;

pub type MemberIndex = u128;

/// Candidate sets larger than this cannot be enumerated by member index.
pub const MAX_ENUMERABLE: u128 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyId {
    Ens1,
    Ens1a,
    Ens2,
    Ens3,
    Ens4,
    CpSingleEdge,
    CpCliqueMinusEdge,
    CpDisjointPaths,
}

impl FamilyId {
    pub fn name(&self) -> &'static str {
        match self {
            FamilyId::Ens1 => "ens1",
            FamilyId::Ens1a => "ens1a",
            FamilyId::Ens2 => "ens2",
            FamilyId::Ens3 => "ens3",
            FamilyId::Ens4 => "ens4",
            FamilyId::CpSingleEdge => "cp_single_edge",
            FamilyId::CpCliqueMinusEdge => "cp_clique_minus_edge",
            FamilyId::CpDisjointPaths => "cp_disjoint_paths",
        }
    }
}

/// Family-specific parameters, as applicable.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FamilyParams {
    pub alpha: usize,
    pub m: usize,
    pub m_prime: usize,
    pub eta: usize,
    pub eta1: usize,
    pub eta2: usize,
    pub ell: usize,
}

/// One independent block of a block-product family (Ensembles 2-4): its
/// vertices, the edges present in every member, and the optional edges in
/// bit order. Bit `bit_offset + i` of a member index controls
/// `variable_edges[i]`.
#[derive(Debug, Clone)]
pub struct BlockSpec {
    pub vertices: Vec<u32>,
    pub base_edges: Vec<(u32, u32)>,
    pub variable_edges: Vec<(u32, u32)>,
    pub bit_offset: usize,
}

/// An indexed finite family of graphs with reference model and KL radius.
#[derive(Clone)]
pub struct GraphEnsemble {
    family: FamilyId,
    p: usize,
    params: FamilyParams,
    lambda: f64,
    log_cardinality: f64,
    cardinality: Option<u128>,
    reference_graph: Graph,
    kl_radius: f64,
    /// Edges present in every member (bit-structured families).
    base_edges: Vec<(u32, u32)>,
    /// Optional edges in global bit order (bit-structured families).
    variable_edges: Vec<(u32, u32)>,
    blocks: Option<Vec<BlockSpec>>,
    /// Matching-count table for Ensemble 1 rank/unrank; counts[s][a] is the
    /// number of a-edge matchings on s available vertices.
    matching_counts: Option<Vec<Vec<u128>>>,
}

pub(crate) fn binom_u128(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 1..=k {
        c = c.checked_mul((n - k + i) as u128)? / i as u128;
    }
    Some(c)
}

pub(crate) fn pair_index(p: usize, a: usize, b: usize) -> u128 {
    debug_assert!(a < b && b < p);
    let (a, b, p) = (a as u128, b as u128, p as u128);
    a * (2 * p - a - 1) / 2 + (b - a - 1)
}

fn pair_from_index(p: usize, mut idx: u128) -> (usize, usize) {
    for a in 0..p {
        let row = (p - a - 1) as u128;
        if idx < row {
            return (a, a + 1 + idx as usize);
        }
        idx -= row;
    }
    unreachable!("pair index out of range");
}

impl GraphEnsemble {
    pub fn family(&self) -> FamilyId {
        self.family
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn params(&self) -> &FamilyParams {
        &self.params
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// log |T|.
    pub fn log_cardinality(&self) -> f64 {
        self.log_cardinality
    }

    /// |T| exactly, when it fits in 128 bits.
    pub fn cardinality(&self) -> Option<u128> {
        self.cardinality
    }

    /// KL radius: an upper bound on D(P_G || P_G') over all members G.
    pub fn kl_radius(&self) -> f64 {
        self.kl_radius
    }

    pub fn reference_graph(&self) -> &Graph {
        &self.reference_graph
    }

    /// Builds the reference model G'. Lazy because large references (e.g.
    /// unions of 2m-cliques) are only needed by callers that decode or sample.
    pub fn reference_model(&self, cache: Option<&TableCache>) -> Result<IsingModel> {
        match cache {
            Some(c) => IsingModel::with_cache(self.reference_graph.clone(), c),
            None => IsingModel::new(self.reference_graph.clone(), self.lambda),
        }
    }

    /// Block decomposition for the block-product families (Ensembles 2-4).
    pub fn blocks(&self) -> Option<&[BlockSpec]> {
        self.blocks.as_deref()
    }

    /// Edges present in every member, for bit-structured families.
    pub fn base_edges(&self) -> &[(u32, u32)] {
        &self.base_edges
    }

    /// Optional edges in member-index bit order, for bit-structured families.
    pub fn variable_edges(&self) -> &[(u32, u32)] {
        &self.variable_edges
    }

    fn known_cardinality(&self) -> Result<u128> {
        self.cardinality.ok_or_else(|| {
            Error::IndexingUnavailable(format!(
                "family {} at these parameters has more than 2^127 members",
                self.family.name()
            ))
        })
    }

    fn check_index(&self, idx: MemberIndex) -> Result<()> {
        let card = self.known_cardinality()?;
        if idx >= card {
            return Err(Error::constraint(format!(
                "member index {idx} out of range for |T| = {card}"
            )));
        }
        Ok(())
    }

    /// The member graph at a given index.
    pub fn index_to_graph(&self, idx: MemberIndex) -> Result<Graph> {
        self.check_index(idx)?;
        let edges: Vec<(usize, usize)> = match self.family {
            FamilyId::Ens1 => self.matching_unrank(idx),
            FamilyId::Ens1a => {
                let pairs = self.p / 2;
                let chosen = subset_unrank(pairs, self.params.alpha, idx);
                chosen.iter().map(|&g| (2 * g, 2 * g + 1)).collect()
            }
            FamilyId::Ens2 | FamilyId::Ens3 | FamilyId::Ens4 => {
                let mut edges: Vec<(usize, usize)> = self
                    .base_edges
                    .iter()
                    .map(|&(a, b)| (a as usize, b as usize))
                    .collect();
                for (bit, &(a, b)) in self.variable_edges.iter().enumerate() {
                    if (idx >> bit) & 1 == 1 {
                        edges.push((a as usize, b as usize));
                    }
                }
                edges
            }
            FamilyId::CpSingleEdge => {
                let (a, b) = pair_from_index(self.p, idx);
                vec![(a, b)]
            }
            FamilyId::CpCliqueMinusEdge => {
                let removed = pair_from_index(self.params.m_prime, idx);
                let mut edges = Vec::new();
                for i in 0..self.params.m_prime {
                    for j in (i + 1)..self.params.m_prime {
                        if (i, j) != removed {
                            edges.push((i, j));
                        }
                    }
                }
                edges
            }
            FamilyId::CpDisjointPaths => {
                let skip = idx as usize;
                self.reference_graph
                    .edges()
                    .iter()
                    .map(|&(a, b)| (a as usize, b as usize))
                    .filter(|&(a, b)| {
                        // Block i's direct edge joins its first two vertices.
                        let base = skip * (2 + self.params.eta);
                        !(a == base && b == base + 1)
                    })
                    .collect()
            }
        };
        Graph::new(self.p, &edges)
    }

    /// The index of a member graph; errors when the graph is not a member.
    pub fn graph_to_index(&self, g: &Graph) -> Result<MemberIndex> {
        self.known_cardinality()?;
        if g.p() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                got: g.p(),
            });
        }
        let not_member =
            |why: &str| Error::constraint(format!("graph is not an ensemble member: {why}"));
        match self.family {
            FamilyId::Ens1 => self.matching_rank(g),
            FamilyId::Ens1a => {
                let mut chosen = Vec::new();
                for &(a, b) in g.edges() {
                    if b != a + 1 || a % 2 != 0 {
                        return Err(not_member("edge outside the fixed pairing"));
                    }
                    chosen.push(a as usize / 2);
                }
                if chosen.len() != self.params.alpha {
                    return Err(not_member("wrong number of connected pairs"));
                }
                Ok(subset_rank(&chosen))
            }
            FamilyId::Ens2 | FamilyId::Ens3 | FamilyId::Ens4 => {
                let mut idx: u128 = 0;
                let mut seen = 0usize;
                for &(a, b) in g.edges() {
                    if self.base_edges.binary_search(&(a, b)).is_ok() {
                        seen += 1;
                        continue;
                    }
                    match self.variable_edges.iter().position(|&e| e == (a, b)) {
                        Some(bit) => idx |= 1 << bit,
                        None => return Err(not_member("edge outside base and variable sets")),
                    }
                }
                if seen != self.base_edges.len() {
                    return Err(not_member("missing base edge"));
                }
                Ok(idx)
            }
            FamilyId::CpSingleEdge => {
                if g.edge_count() != 1 {
                    return Err(not_member("expected exactly one edge"));
                }
                let (a, b) = g.edges()[0];
                Ok(pair_index(self.p, a as usize, b as usize))
            }
            FamilyId::CpCliqueMinusEdge => {
                let m = self.params.m_prime;
                let mut missing = Vec::new();
                for i in 0..m {
                    for j in (i + 1)..m {
                        if !g.has_edge(i, j) {
                            missing.push((i, j));
                        }
                    }
                }
                let expected = m * (m - 1) / 2 - 1;
                if missing.len() != 1 || g.edge_count() != expected {
                    return Err(not_member("not a clique minus a single edge"));
                }
                Ok(pair_index(m, missing[0].0, missing[0].1))
            }
            FamilyId::CpDisjointPaths => {
                for b in 0..self.params.alpha {
                    let base = b * (2 + self.params.eta);
                    if !g.has_edge(base, base + 1) {
                        let expect = self.index_to_graph(b as u128)?;
                        if *g == expect {
                            return Ok(b as u128);
                        }
                        return Err(not_member("path edges do not match the base graph"));
                    }
                }
                Err(not_member("no block is missing its direct edge"))
            }
        }
    }

    /// Builds the Ising model of a member.
    pub fn member_model(&self, idx: MemberIndex, cache: Option<&TableCache>) -> Result<IsingModel> {
        let g = self.index_to_graph(idx)?;
        match cache {
            Some(c) => IsingModel::with_cache(g, c),
            None => IsingModel::new(g, self.lambda),
        }
    }

    /// log A(q): the family's distortion-ball counting expression.
    ///
    /// Ensembles 2-4 use the exact sum of binomials over their free edges
    /// (valid for q at most half the free-edge count). Ensembles 1/1a use
    /// the product-form upper bound (1+q)^2 C(alpha, floor(alpha/2)) C(p,2)^q
    /// so that Fano evaluations match the derivation they feed into.
    pub fn log_ball_count(&self, q: usize) -> Result<f64> {
        match self.family {
            FamilyId::Ens1 | FamilyId::Ens1a => {
                let alpha = self.params.alpha as u64;
                Ok(2.0 * (1.0 + q as f64).ln()
                    + ln_choose(alpha, alpha / 2)
                    + q as f64 * ln_choose(self.p as u64, 2))
            }
            FamilyId::Ens2 | FamilyId::Ens3 | FamilyId::Ens4 => {
                let free = self.variable_edges.len() as u64;
                if q as u64 > free / 2 {
                    return Err(Error::constraint(format!(
                        "ball count valid for q <= {} (half the free edges), got {q}",
                        free / 2
                    )));
                }
                Ok(bounds::ln_binomial_sum(free, q as u64))
            }
            FamilyId::CpSingleEdge | FamilyId::CpCliqueMinusEdge | FamilyId::CpDisjointPaths => {
                // Distinct members are always at edit distance exactly 2.
                if q < 2 {
                    Ok(0.0)
                } else {
                    Ok(self.log_cardinality)
                }
            }
        }
    }

    /// Exact ball size |{G' in T : |E(G) delta E(G')| <= q}| around the
    /// member at `center`. Closed form where the distance structure gives
    /// one; otherwise exhaustive enumeration over tiny families.
    pub fn exact_ball_count(&self, center: MemberIndex, q: usize) -> Result<u64> {
        let card = self.known_cardinality()?;
        self.check_index(center)?;
        match self.family {
            FamilyId::Ens1a => {
                // Swapping j chosen pairs for j others costs edit distance 2j.
                let (alpha, pairs) = (self.params.alpha as u64, (self.p / 2) as u64);
                let mut total: u128 = 0;
                for j in 0..=(q as u64 / 2).min(alpha).min(pairs - alpha) {
                    total += binom_u128(alpha, j).expect("small binomial")
                        * binom_u128(pairs - alpha, j).expect("small binomial");
                }
                Ok(total as u64)
            }
            FamilyId::CpSingleEdge | FamilyId::CpCliqueMinusEdge | FamilyId::CpDisjointPaths => {
                Ok(if q < 2 { 1 } else { card as u64 })
            }
            _ => {
                if card > 1 << 16 {
                    return Err(Error::ResourceCap(format!(
                        "exact ball counting needs |T| <= 65536, got {card}"
                    )));
                }
                let center_edges = self.index_to_graph(center)?.edges().to_vec();
                let mut count = 0u64;
                for idx in 0..card {
                    let g = self.index_to_graph(idx)?;
                    if crate::graph::edit_distance(&center_edges, g.edges()) <= q {
                        count += 1;
                    }
                }
                Ok(count)
            }
        }
    }

    /// Enumerated ball size, ignoring closed forms; the oracle the closed
    /// forms are themselves checked against at tiny scale.
    pub fn enumerated_ball_count(&self, center: MemberIndex, q: usize) -> Result<u64> {
        let card = self.known_cardinality()?;
        if card > 1 << 16 {
            return Err(Error::ResourceCap(format!(
                "ball enumeration needs |T| <= 65536, got {card}"
            )));
        }
        let center_edges = self.index_to_graph(center)?.edges().to_vec();
        let mut count = 0u64;
        for idx in 0..card {
            let g = self.index_to_graph(idx)?;
            if crate::graph::edit_distance(&center_edges, g.edges()) <= q {
                count += 1;
            }
        }
        Ok(count)
    }

    /// Draws a member uniformly; deterministic given the seed.
    pub fn uniform_draw(&self, seed: u64) -> Result<(MemberIndex, IsingModel)> {
        let idx = self.draw_index(seed)?;
        Ok((idx, self.member_model(idx, None)?))
    }

    /// Index-only uniform draw, for callers that manage their own model cache.
    pub fn draw_index(&self, seed: u64) -> Result<MemberIndex> {
        let card = self.known_cardinality()?;
        let mut rng = SplitMix64::new(seed);
        Ok(rng.next_below(card))
    }

    /// Rebuilds the same family and parameters at a different coupling.
    pub fn with_lambda(&self, lambda: f64) -> Result<GraphEnsemble> {
        let q = &self.params;
        match self.family {
            FamilyId::Ens1 => ensemble1(self.p, q.alpha, lambda),
            FamilyId::Ens1a => ensemble1a(self.p, q.alpha, lambda),
            FamilyId::Ens2 => ensemble2(self.p, q.m, q.alpha, lambda),
            FamilyId::Ens3 => ensemble3(self.p, q.m, q.alpha, lambda),
            FamilyId::Ens4 => ensemble4(self.p, q.eta1, q.eta2, q.m, q.ell, q.alpha, lambda),
            FamilyId::CpSingleEdge => counterpart_single_edge(self.p, lambda),
            FamilyId::CpCliqueMinusEdge => {
                counterpart_clique_minus_edge(self.p, q.m_prime, lambda)
            }
            FamilyId::CpDisjointPaths => {
                counterpart_disjoint_paths(self.p, q.alpha, q.eta, lambda)
            }
        }
    }

    /// Edit distance between two members, without materializing graphs where
    /// the index structure gives it directly.
    pub fn member_edit_distance(&self, a: MemberIndex, b: MemberIndex) -> Result<usize> {
        self.check_index(a)?;
        self.check_index(b)?;
        match self.family {
            FamilyId::Ens2 | FamilyId::Ens3 | FamilyId::Ens4 => Ok((a ^ b).count_ones() as usize),
            FamilyId::Ens1a => {
                let pairs = self.p / 2;
                let sa = subset_unrank(pairs, self.params.alpha, a);
                let sb = subset_unrank(pairs, self.params.alpha, b);
                let common = sa.iter().filter(|x| sb.contains(x)).count();
                Ok(2 * (self.params.alpha - common))
            }
            FamilyId::CpSingleEdge | FamilyId::CpCliqueMinusEdge | FamilyId::CpDisjointPaths => {
                Ok(if a == b { 0 } else { 2 })
            }
            FamilyId::Ens1 => {
                let ga = self.index_to_graph(a)?;
                let gb = self.index_to_graph(b)?;
                Ok(crate::graph::edit_distance(ga.edges(), gb.edges()))
            }
        }
    }

    /// Flat key-value descriptor, e.g. `family=ens3 p=8 m=4 alpha=1 lambda=0.5`.
    pub fn descriptor(&self) -> String {
        let p = self.p;
        let q = &self.params;
        let l = self.lambda;
        match self.family {
            FamilyId::Ens1 => format!("family=ens1 p={p} alpha={} lambda={l}", q.alpha),
            FamilyId::Ens1a => format!("family=ens1a p={p} alpha={} lambda={l}", q.alpha),
            FamilyId::Ens2 => format!("family=ens2 p={p} m={} alpha={} lambda={l}", q.m, q.alpha),
            FamilyId::Ens3 => format!("family=ens3 p={p} m={} alpha={} lambda={l}", q.m, q.alpha),
            FamilyId::Ens4 => format!(
                "family=ens4 p={p} eta1={} eta2={} m={} ell={} alpha={} lambda={l}",
                q.eta1, q.eta2, q.m, q.ell, q.alpha
            ),
            FamilyId::CpSingleEdge => format!("family=cp_single_edge p={p} lambda={l}"),
            FamilyId::CpCliqueMinusEdge => {
                format!("family=cp_clique_minus_edge p={p} mprime={} lambda={l}", q.m_prime)
            }
            FamilyId::CpDisjointPaths => format!(
                "family=cp_disjoint_paths p={p} alpha={} eta={} lambda={l}",
                q.alpha, q.eta
            ),
        }
    }

    /// Parses a descriptor produced by [`GraphEnsemble::descriptor`].
    pub fn from_descriptor(text: &str) -> Result<GraphEnsemble> {
        let mut family = None;
        let mut get = std::collections::HashMap::new();
        for tok in text.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("descriptor token {tok:?} is not key=value")))?;
            if k == "family" {
                family = Some(v.to_string());
            } else {
                let num: f64 = v
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad numeric value in {tok:?}")))?;
                get.insert(k.to_string(), num);
            }
        }
        let family = family.ok_or_else(|| Error::Parse("descriptor missing family=".into()))?;
        let int = |key: &str| -> Result<usize> {
            get.get(key)
                .map(|&v| v as usize)
                .ok_or_else(|| Error::Parse(format!("descriptor missing {key}=")))
        };
        let lambda = *get
            .get("lambda")
            .ok_or_else(|| Error::Parse("descriptor missing lambda=".into()))?;
        match family.as_str() {
            "ens1" => ensemble1(int("p")?, int("alpha")?, lambda),
            "ens1a" => ensemble1a(int("p")?, int("alpha")?, lambda),
            "ens2" => ensemble2(int("p")?, int("m")?, int("alpha")?, lambda),
            "ens3" => ensemble3(int("p")?, int("m")?, int("alpha")?, lambda),
            "ens4" => ensemble4(
                int("p")?,
                int("eta1")?,
                int("eta2")?,
                int("m")?,
                int("ell")?,
                int("alpha")?,
                lambda,
            ),
            "cp_single_edge" => counterpart_single_edge(int("p")?, lambda),
            "cp_clique_minus_edge" => counterpart_clique_minus_edge(int("p")?, int("mprime")?, lambda),
            "cp_disjoint_paths" => {
                counterpart_disjoint_paths(int("p")?, int("alpha")?, int("eta")?, lambda)
            }
            other => Err(Error::Parse(format!("unknown family {other:?}"))),
        }
    }

    // ---- Ensemble 1 matching rank/unrank ------------------------------

    /// counts[s][a]: number of ways to place `a` node-disjoint edges among
    /// `s` available vertices, with the recursion on the lowest vertex:
    /// counts[s][a] = counts[s-1][a] (lowest unmatched)
    ///             + (s-1) * counts[s-2][a-1] (lowest matched to any other).
    fn matching_count_table(p: usize, alpha: usize) -> Option<Vec<Vec<u128>>> {
        let mut counts = vec![vec![0u128; alpha + 1]; p + 1];
        for row in counts.iter_mut() {
            row[0] = 1;
        }
        for s in 2..=p {
            for a in 1..=alpha.min(s / 2) {
                let stay = counts[s - 1][a];
                let pair = (s as u128 - 1).checked_mul(counts[s - 2][a - 1])?;
                counts[s][a] = stay.checked_add(pair)?;
            }
        }
        Some(counts)
    }

    fn matching_unrank(&self, mut idx: u128) -> Vec<(usize, usize)> {
        let counts = self.matching_counts.as_ref().expect("table built for ens1");
        let mut avail: Vec<usize> = (0..self.p).collect();
        let mut left = self.params.alpha;
        let mut edges = Vec::with_capacity(left);
        while left > 0 {
            let s = avail.len();
            let skip = counts[s - 1][left];
            if idx < skip {
                avail.remove(0);
                continue;
            }
            idx -= skip;
            let per_partner = counts[s - 2][left - 1];
            let j = (idx / per_partner) as usize;
            idx %= per_partner;
            let v = avail[0];
            let u = avail[j + 1];
            edges.push((v, u));
            avail.remove(j + 1);
            avail.remove(0);
            left -= 1;
        }
        edges
    }

    fn matching_rank(&self, g: &Graph) -> Result<MemberIndex> {
        let not_member =
            |why: &str| Error::constraint(format!("graph is not an ensemble member: {why}"));
        if g.edge_count() != self.params.alpha {
            return Err(not_member("wrong edge count"));
        }
        if g.max_degree() > 1 {
            return Err(not_member("edges are not node-disjoint"));
        }
        let counts = self.matching_counts.as_ref().expect("table built for ens1");
        let mut partner = vec![usize::MAX; self.p];
        for &(a, b) in g.edges() {
            partner[a as usize] = b as usize;
            partner[b as usize] = a as usize;
        }
        let mut avail: Vec<usize> = (0..self.p).collect();
        let mut left = self.params.alpha;
        let mut idx: u128 = 0;
        while left > 0 {
            let s = avail.len();
            let v = avail[0];
            if partner[v] == usize::MAX {
                avail.remove(0);
                continue;
            }
            let u = partner[v];
            let j = avail
                .iter()
                .position(|&w| w == u)
                .expect("partner still available");
            idx += counts[s - 1][left];
            idx += (j as u128 - 1) * counts[s - 2][left - 1];
            avail.remove(j);
            avail.remove(0);
            left -= 1;
        }
        Ok(idx)
    }
}

/// Combinadic rank of a sorted subset: C(c_i, i+1) summed over elements.
pub(crate) fn subset_rank(sorted: &[usize]) -> u128 {
    let mut r: u128 = 0;
    for (i, &c) in sorted.iter().enumerate() {
        r += binom_u128(c as u64, i as u64 + 1).expect("small combinadic");
    }
    r
}

/// Inverse of [`subset_rank`] for subsets of size k from {0..n}.
fn subset_unrank(n: usize, k: usize, mut idx: u128) -> Vec<usize> {
    let mut out = vec![0usize; k];
    let mut hi = n;
    for i in (0..k).rev() {
        // Largest c with C(c, i+1) <= idx.
        let mut c = hi - 1;
        while binom_u128(c as u64, i as u64 + 1).expect("small combinadic") > idx {
            c -= 1;
        }
        out[i] = c;
        idx -= binom_u128(c as u64, i as u64 + 1).expect("small combinadic");
        hi = c;
    }
    out
}

// ---- constructors ------------------------------------------------------

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::NegativeCoupling(lambda));
    }
    Ok(())
}

/// Ensemble 1: all placements of exactly `alpha` node-disjoint edges.
pub fn ensemble1(p: usize, alpha: usize, lambda: f64) -> Result<GraphEnsemble> {
    check_lambda(lambda)?;
    if alpha < 1 {
        return Err(Error::constraint("ens1 requires alpha >= 1"));
    }
    if alpha > p / 4 {
        return Err(Error::constraint(format!(
            "ens1 requires alpha <= p/4 (alpha={alpha}, p={p})"
        )));
    }
    let counts = GraphEnsemble::matching_count_table(p, alpha);
    let cardinality = counts.as_ref().map(|c| c[p][alpha]);
    // log of (prod_{i<alpha} C(p-2i, 2)) / alpha!.
    let mut log_card = -statrs::function::gamma::ln_gamma(alpha as f64 + 1.0);
    for i in 0..alpha {
        log_card += ln_choose((p - 2 * i) as u64, 2);
    }
    Ok(GraphEnsemble {
        family: FamilyId::Ens1,
        p,
        params: FamilyParams {
            alpha,
            ..Default::default()
        },
        lambda,
        log_cardinality: log_card,
        cardinality,
        reference_graph: Graph::empty(p),
        kl_radius: alpha as f64 * bounds::single_edge_kl_bound(lambda),
        base_edges: Vec::new(),
        variable_edges: Vec::new(),
        blocks: None,
        matching_counts: counts,
    })
}

/// log of the ordered placement product prod_{i<alpha} C(p-2i, 2), the
/// counting form the per-family necessary condition is derived from.
pub fn ensemble1_log_placement_product(p: usize, alpha: usize) -> f64 {
    (0..alpha).map(|i| ln_choose((p - 2 * i) as u64, 2)).sum()
}

/// Ensemble 1a: the genie-aided variant connecting exactly `alpha` of the
/// fixed pairs (0,1), (2,3), ..., (p-2, p-1).
pub fn ensemble1a(p: usize, alpha: usize, lambda: f64) -> Result<GraphEnsemble> {
    check_lambda(lambda)?;
    if p % 2 != 0 {
        return Err(Error::constraint(format!("ens1a requires even p, got {p}")));
    }
    if alpha < 1 || alpha > p / 2 {
        return Err(Error::constraint(format!(
            "ens1a requires 1 <= alpha <= p/2 (alpha={alpha}, p={p})"
        )));
    }
    let cardinality = binom_u128((p / 2) as u64, alpha as u64);
    Ok(GraphEnsemble {
        family: FamilyId::Ens1a,
        p,
        params: FamilyParams {
            alpha,
            ..Default::default()
        },
        lambda,
        log_cardinality: ln_choose((p / 2) as u64, alpha as u64),
        cardinality,
        reference_graph: Graph::empty(p),
        kl_radius: alpha as f64 * bounds::single_edge_kl_bound(lambda),
        base_edges: Vec::new(),
        variable_edges: Vec::new(),
        blocks: None,
        matching_counts: None,
    })
}

fn assemble_blocks(
    family: FamilyId,
    p: usize,
    params: FamilyParams,
    lambda: f64,
    blocks: Vec<BlockSpec>,
    reference_extra: Vec<(u32, u32)>,
    kl_radius: f64,
) -> Result<GraphEnsemble> {
    let mut base_edges = Vec::new();
    let mut variable_edges = Vec::new();
    for b in &blocks {
        base_edges.extend_from_slice(&b.base_edges);
        variable_edges.extend_from_slice(&b.variable_edges);
    }
    base_edges.sort_unstable();
    let bits = variable_edges.len();
    let cardinality = if bits < 128 { Some(1u128 << bits) } else { None };
    let mut ref_edges: Vec<(usize, usize)> = base_edges
        .iter()
        .chain(reference_extra.iter())
        .map(|&(a, b)| (a as usize, b as usize))
        .collect();
    ref_edges.sort_unstable();
    Ok(GraphEnsemble {
        family,
        p,
        params,
        lambda,
        log_cardinality: bits as f64 * std::f64::consts::LN_2,
        cardinality,
        reference_graph: Graph::new(p, &ref_edges)?,
        kl_radius,
        base_edges,
        variable_edges,
        blocks: Some(blocks),
        matching_counts: None,
    })
}

/// Ensemble 2: `alpha` fixed groups of `m` consecutive vertices, with any
/// subset of within-group edges present.
pub fn ensemble2(p: usize, m: usize, alpha: usize, lambda: f64) -> Result<GraphEnsemble> {
    check_lambda(lambda)?;
    if m < 2 || alpha < 1 {
        return Err(Error::constraint("ens2 requires m >= 2 and alpha >= 1"));
    }
    if m * alpha > p {
        return Err(Error::constraint(format!(
            "ens2 requires m * alpha <= p ({m} * {alpha} > {p})"
        )));
    }
    let mut blocks = Vec::with_capacity(alpha);
    let mut bit = 0usize;
    for g in 0..alpha {
        let base = (g * m) as u32;
        let vertices: Vec<u32> = (base..base + m as u32).collect();
        let mut variable = Vec::new();
        for i in 0..m as u32 {
            for j in (i + 1)..m as u32 {
                variable.push((base + i, base + j));
            }
        }
        let len = variable.len();
        blocks.push(BlockSpec {
            vertices,
            base_edges: Vec::new(),
            variable_edges: variable,
            bit_offset: bit,
        });
        bit += len;
    }
    let radius = alpha as f64 * bounds::groups_kl_bound(m, lambda);
    assemble_blocks(
        FamilyId::Ens2,
        p,
        FamilyParams {
            m,
            alpha,
            ..Default::default()
        },
        lambda,
        blocks,
        Vec::new(),
        radius,
    )
}

/// Ensemble 3: `alpha` blocks of two m-cliques joined by m fixed
/// position-matched cross edges, plus any subset of the remaining
/// m(m-1) cross edges. The reference graph is the union of 2m-cliques.
pub fn ensemble3(p: usize, m: usize, alpha: usize, lambda: f64) -> Result<GraphEnsemble> {
    check_lambda(lambda)?;
    if m < 2 || alpha < 1 {
        return Err(Error::constraint("ens3 requires m >= 2 and alpha >= 1"));
    }
    if 2 * m * alpha > p {
        return Err(Error::constraint(format!(
            "ens3 requires 2 * m * alpha <= p (2 * {m} * {alpha} > {p})"
        )));
    }
    let mut blocks = Vec::with_capacity(alpha);
    let mut reference_extra = Vec::new();
    let mut bit = 0usize;
    for blk in 0..alpha {
        let base = (blk * 2 * m) as u32;
        let a0 = base; // clique A: base .. base+m
        let b0 = base + m as u32; // clique B: base+m .. base+2m
        let vertices: Vec<u32> = (base..base + 2 * m as u32).collect();
        let mut base_edges = Vec::new();
        for i in 0..m as u32 {
            for j in (i + 1)..m as u32 {
                base_edges.push((a0 + i, a0 + j));
                base_edges.push((b0 + i, b0 + j));
            }
        }
        for u in 0..m as u32 {
            base_edges.push((a0 + u, b0 + u));
        }
        base_edges.sort_unstable();
        let mut variable = Vec::new();
        for a in 0..m as u32 {
            for b in 0..m as u32 {
                if a != b {
                    variable.push((a0 + a, b0 + b));
                }
            }
        }
        reference_extra.extend_from_slice(&variable);
        let len = variable.len();
        blocks.push(BlockSpec {
            vertices,
            base_edges,
            variable_edges: variable,
            bit_offset: bit,
        });
        bit += len;
    }
    let radius = alpha as f64 * bounds::clique_block_kl_bound(m, lambda);
    assemble_blocks(
        FamilyId::Ens3,
        p,
        FamilyParams {
            m,
            alpha,
            ..Default::default()
        },
        lambda,
        blocks,
        reference_extra,
        radius,
    )
}

/// Ensemble 4: `alpha` blocks of eta1 center nodes joined consecutively
/// (with wrap-around) by eta2 length-2 paths and m length-ell paths, plus
/// any subset of the C(eta1, 2) center edges. The reference connects all
/// centers in every block.
pub fn ensemble4(
    p: usize,
    eta1: usize,
    eta2: usize,
    m: usize,
    ell: usize,
    alpha: usize,
    lambda: f64,
) -> Result<GraphEnsemble> {
    check_lambda(lambda)?;
    if eta1 < 2 || alpha < 1 {
        return Err(Error::constraint("ens4 requires eta1 >= 2 and alpha >= 1"));
    }
    if m > 0 && ell < 2 {
        return Err(Error::constraint(format!(
            "ens4 requires ell >= 2 when m > 0 (ell={ell}, m={m})"
        )));
    }
    let internals = eta2 + m * ell.saturating_sub(1);
    if alpha * eta1 * (1 + eta2 + m * ell.saturating_sub(1)) > p {
        return Err(Error::constraint(format!(
            "ens4 vertex budget exceeded: alpha*eta1*(1+eta2+m(ell-1)) = {} > p = {p}",
            alpha * eta1 * (1 + eta2 + m * ell.saturating_sub(1))
        )));
    }
    // Consecutive center pairs with wrap-around; eta1 = 2 has a single pair.
    let n_pairs = if eta1 == 2 { 1 } else { eta1 };
    let block_size = eta1 + n_pairs * internals;
    let mut blocks = Vec::with_capacity(alpha);
    let mut bit = 0usize;
    for blk in 0..alpha {
        let base = (blk * block_size) as u32;
        let centers: Vec<u32> = (base..base + eta1 as u32).collect();
        let mut next_free = base + eta1 as u32;
        let mut base_edges = Vec::new();
        for pair in 0..n_pairs {
            let u = centers[pair];
            let v = centers[(pair + 1) % eta1];
            for _ in 0..eta2 {
                let w = next_free;
                next_free += 1;
                base_edges.push((u.min(w), u.max(w)));
                base_edges.push((v.min(w), v.max(w)));
            }
            for _ in 0..m {
                let mut prev = u;
                for _ in 0..(ell - 1) {
                    let w = next_free;
                    next_free += 1;
                    base_edges.push((prev.min(w), prev.max(w)));
                    prev = w;
                }
                base_edges.push((prev.min(v), prev.max(v)));
            }
        }
        base_edges.sort_unstable();
        let vertices: Vec<u32> = (base..next_free).collect();
        let mut variable = Vec::new();
        for i in 0..eta1 as u32 {
            for j in (i + 1)..eta1 as u32 {
                variable.push((base + i, base + j));
            }
        }
        let len = variable.len();
        blocks.push(BlockSpec {
            vertices,
            base_edges,
            variable_edges: variable,
            bit_offset: bit,
        });
        bit += len;
    }
    let reference_extra = blocks
        .iter()
        .flat_map(|b| b.variable_edges.iter().copied())
        .collect();
    let radius = alpha as f64 * bounds::paths_block_kl_bound(eta1, eta2, m, ell, lambda);
    assemble_blocks(
        FamilyId::Ens4,
        p,
        FamilyParams {
            eta1,
            eta2,
            m,
            ell,
            alpha,
            ..Default::default()
        },
        lambda,
        blocks,
        reference_extra,
        radius,
    )
}

/// Exact-recovery counterpart: all C(p,2) single-edge graphs.
pub fn counterpart_single_edge(p: usize, lambda: f64) -> Result<GraphEnsemble> {
    check_lambda(lambda)?;
    if p < 2 {
        return Err(Error::constraint("cp_single_edge requires p >= 2"));
    }
    let card = (p as u128) * (p as u128 - 1) / 2;
    Ok(GraphEnsemble {
        family: FamilyId::CpSingleEdge,
        p,
        params: FamilyParams::default(),
        lambda,
        log_cardinality: (card as f64).ln(),
        cardinality: Some(card),
        reference_graph: Graph::empty(p),
        kl_radius: bounds::single_edge_kl_bound(lambda),
        base_edges: Vec::new(),
        variable_edges: Vec::new(),
        blocks: None,
        matching_counts: None,
    })
}

/// Exact-recovery counterpart: the m'-clique on the first m' vertices with
/// one edge removed.
pub fn counterpart_clique_minus_edge(p: usize, m_prime: usize, lambda: f64) -> Result<GraphEnsemble> {
    check_lambda(lambda)?;
    if m_prime < 3 {
        return Err(Error::constraint("cp_clique_minus_edge requires m' >= 3"));
    }
    if m_prime > p {
        return Err(Error::constraint(format!(
            "cp_clique_minus_edge requires m' <= p (m'={m_prime}, p={p})"
        )));
    }
    let card = (m_prime as u128) * (m_prime as u128 - 1) / 2;
    let radius = lambda * (1.0 - bounds::clique_correlation_lb(m_prime, lambda));
    Ok(GraphEnsemble {
        family: FamilyId::CpCliqueMinusEdge,
        p,
        params: FamilyParams {
            m_prime,
            ..Default::default()
        },
        lambda,
        log_cardinality: (card as f64).ln(),
        cardinality: Some(card),
        reference_graph: Graph::clique(p, m_prime)?,
        kl_radius: radius,
        base_edges: Vec::new(),
        variable_edges: Vec::new(),
        blocks: None,
        matching_counts: None,
    })
}

/// Exact-recovery counterpart: `alpha` blocks, each a vertex pair joined by
/// a direct edge and eta node-disjoint length-2 paths; each member removes
/// the direct edge from one block.
pub fn counterpart_disjoint_paths(
    p: usize,
    alpha: usize,
    eta: usize,
    lambda: f64,
) -> Result<GraphEnsemble> {
    check_lambda(lambda)?;
    if alpha < 1 {
        return Err(Error::constraint("cp_disjoint_paths requires alpha >= 1"));
    }
    if alpha * (2 + eta) > p {
        return Err(Error::constraint(format!(
            "cp_disjoint_paths vertex budget exceeded: alpha*(2+eta) = {} > p = {p}",
            alpha * (2 + eta)
        )));
    }
    let mut ref_edges = Vec::new();
    for b in 0..alpha {
        let base = b * (2 + eta);
        let (u, v) = (base, base + 1);
        ref_edges.push((u, v));
        for j in 0..eta {
            let w = base + 2 + j;
            ref_edges.push((u, w));
            ref_edges.push((v, w));
        }
    }
    let radius = lambda * (1.0 - bounds::path_correlation_lb(eta, 2, lambda));
    Ok(GraphEnsemble {
        family: FamilyId::CpDisjointPaths,
        p,
        params: FamilyParams {
            alpha,
            eta,
            ..Default::default()
        },
        lambda,
        log_cardinality: (alpha as f64).ln(),
        cardinality: Some(alpha as u128),
        reference_graph: Graph::new(p, &ref_edges)?,
        kl_radius: radius,
        base_edges: Vec::new(),
        variable_edges: Vec::new(),
        blocks: None,
        matching_counts: None,
    })
}

#[cfg(test)]
mod tests;
