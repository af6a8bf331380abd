//! Exact Ising inference by per-component spin enumeration.
//!
//! An [`IsingModel`] is a graph plus a uniform ferromagnetic coupling. Each
//! connected component of at most [`DEFAULT_ENUMERATION_CAP`] vertices gets a
//! fully enumerated table of log-domain configuration weights, from which the
//! log-partition function, pairwise statistics, KL divergences and exact
//! samples are all computed.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Components larger than this are rejected at model construction.
/// 2^24 log-weights is about 128 MB, a pragmatic ceiling.
pub const DEFAULT_ENUMERATION_CAP: usize = 24;

/// Compensated (Kahan) summation, so that 2^24-entry tables still
/// reconstruct probability mass to well under 1e-12.
#[derive(Default, Clone, Copy)]
struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    #[inline]
    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    fn total(&self) -> f64 {
        self.sum
    }
}

/// A component's structure up to relabeling: vertex count and local edge list.
/// Tables are cached per key, which is what makes ensemble decoding with
/// thousands of candidate graphs feasible.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TableKey {
    pub size: u8,
    pub edges: Vec<(u8, u8)>,
}

/// Enumerated configuration table for one connected component.
///
/// Local vertex `v` corresponds to bit `v` of a configuration word; a set bit
/// means spin +1. `log_weights[w] = lambda * energy(w)` and
/// `log_z = logsumexp(log_weights)`.
#[derive(Debug)]
pub struct ComponentTable {
    pub size: usize,
    pub edges: Vec<(u8, u8)>,
    pub log_weights: Vec<f64>,
    pub log_z: f64,
    /// Cumulative probabilities for inverse-CDF sampling; last entry is 1.0.
    pub cdf: Vec<f64>,
}

impl ComponentTable {
    /// Enumerates all 2^size configurations in Gray-code order so each step
    /// updates the energy in O(degree) time.
    pub fn build(size: usize, edges: &[(u8, u8)], lambda: f64) -> Self {
        assert!((1..=63).contains(&size));
        let n_configs = 1usize << size;
        let mut adj = vec![Vec::new(); size];
        for &(a, b) in edges {
            adj[a as usize].push(b as usize);
            adj[b as usize].push(a as usize);
        }

        let mut log_weights = vec![0.0; n_configs];
        // Start at all-spins-down: every edge contributes +1.
        let mut spins = vec![-1i64; size];
        let mut energy = edges.len() as i64;
        let mut word: usize = 0;
        log_weights[0] = lambda * energy as f64;
        for i in 1..n_configs {
            let bit = i.trailing_zeros() as usize;
            spins[bit] = -spins[bit];
            word ^= 1 << bit;
            let mut around = 0i64;
            for &u in &adj[bit] {
                around += spins[u];
            }
            energy += 2 * spins[bit] * around;
            log_weights[word] = lambda * energy as f64;
        }

        let log_z = log_sum_exp(&log_weights);

        let mut cdf = vec![0.0; n_configs];
        let mut acc = KahanSum::default();
        for (w, &lw) in log_weights.iter().enumerate() {
            acc.add((lw - log_z).exp());
            cdf[w] = acc.total();
        }
        let mass = acc.total();
        debug_assert!(
            (mass - 1.0).abs() <= 1e-12,
            "component probability mass off by {}",
            (mass - 1.0).abs()
        );
        // Pin the final entry so inverse-CDF lookups cannot fall off the end.
        *cdf.last_mut().unwrap() = 1.0;

        ComponentTable {
            size,
            edges: edges.to_vec(),
            log_weights,
            log_z,
            cdf,
        }
    }

    /// Total probability mass reconstructed from the log-domain table.
    pub fn probability_mass(&self) -> f64 {
        let mut acc = KahanSum::default();
        for &lw in &self.log_weights {
            acc.add((lw - self.log_z).exp());
        }
        acc.total()
    }

    /// E[x_a x_b] for local vertices a, b.
    pub fn correlation(&self, a: usize, b: usize) -> f64 {
        let mut acc = KahanSum::default();
        for (w, &lw) in self.log_weights.iter().enumerate() {
            let s = ((w >> a) & 1) ^ ((w >> b) & 1); // 0 = agree
            let prod = 1.0 - 2.0 * s as f64;
            acc.add((lw - self.log_z).exp() * prod);
        }
        acc.total()
    }

    /// E[sum over `pairs` of x_a x_b] in a single pass over the table.
    pub fn expected_pair_sum(&self, pairs: &[(u8, u8)]) -> f64 {
        let mut acc = KahanSum::default();
        for (w, &lw) in self.log_weights.iter().enumerate() {
            let mut s = 0i64;
            for &(a, b) in pairs {
                let d = ((w >> a) & 1) ^ ((w >> b) & 1);
                s += 1 - 2 * d as i64;
            }
            acc.add((lw - self.log_z).exp() * s as f64);
        }
        acc.total()
    }

    /// Inverse-CDF lookup: smallest configuration word with cdf > u.
    #[inline]
    pub fn draw(&self, u: f64) -> usize {
        self.cdf.partition_point(|&c| c <= u)
    }
}

/// Shared table cache, keyed by component structure. All tables in a cache
/// are built at the same coupling.
pub struct TableCache {
    lambda: f64,
    map: Mutex<HashMap<TableKey, Arc<ComponentTable>>>,
}

impl TableCache {
    pub fn new(lambda: f64) -> Self {
        TableCache {
            lambda,
            map: Mutex::new(HashMap::new()),
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn get_or_build(&self, key: TableKey) -> Arc<ComponentTable> {
        if let Some(t) = self.map.lock().unwrap().get(&key) {
            return Arc::clone(t);
        }
        // Build outside the lock; duplicated work on a race is harmless.
        let table = Arc::new(ComponentTable::build(key.size as usize, &key.edges, self.lambda));
        let mut map = self.map.lock().unwrap();
        Arc::clone(map.entry(key).or_insert(table))
    }
}

/// One connected component of a model: global vertex labels (ascending) plus
/// the enumerated table over their local indices.
#[derive(Clone)]
pub struct ModelComponent {
    pub vertices: Vec<u32>,
    pub table: Arc<ComponentTable>,
}

/// A ferromagnetic Ising model with uniform coupling `lambda >= 0`, immutable
/// after construction.
pub struct IsingModel {
    graph: Graph,
    lambda: f64,
    components: Vec<ModelComponent>,
    comp_of: Vec<u32>,
}

/// Builds the table key for a vertex subset (sorted ascending) and the edges
/// among them, relabeled to local indices.
fn local_key(vertices: &[usize], edges: impl Iterator<Item = (u32, u32)>) -> TableKey {
    let local = |v: u32| {
        vertices
            .binary_search(&(v as usize))
            .expect("edge endpoint inside the component") as u8
    };
    let mut out: Vec<(u8, u8)> = edges
        .map(|(a, b)| {
            let (x, y) = (local(a), local(b));
            if x < y {
                (x, y)
            } else {
                (y, x)
            }
        })
        .collect();
    out.sort_unstable();
    TableKey {
        size: vertices.len() as u8,
        edges: out,
    }
}

impl IsingModel {
    pub fn new(graph: Graph, lambda: f64) -> Result<Self> {
        Self::with_options(graph, lambda, DEFAULT_ENUMERATION_CAP, None)
    }

    pub fn with_cap(graph: Graph, lambda: f64, cap: usize) -> Result<Self> {
        Self::with_options(graph, lambda, cap, None)
    }

    pub fn with_cache(graph: Graph, cache: &TableCache) -> Result<Self> {
        Self::with_options(graph, cache.lambda(), DEFAULT_ENUMERATION_CAP, Some(cache))
    }

    pub fn with_options(
        graph: Graph,
        lambda: f64,
        cap: usize,
        cache: Option<&TableCache>,
    ) -> Result<Self> {
        if lambda < 0.0 || !lambda.is_finite() {
            return Err(Error::NegativeCoupling(lambda));
        }
        if let Some(c) = cache {
            assert_eq!(c.lambda(), lambda, "table cache built at a different coupling");
        }
        let comps = graph.connected_components();
        let mut comp_of = vec![0u32; graph.p()];
        let mut components = Vec::with_capacity(comps.len());
        for (id, members) in comps.into_iter().enumerate() {
            if members.len() > cap {
                return Err(Error::ComponentOverCap {
                    size: members.len(),
                    cap,
                });
            }
            for &v in &members {
                comp_of[v] = id as u32;
            }
            let in_comp =
                |e: &&(u32, u32)| members.binary_search(&(e.0 as usize)).is_ok();
            let key = local_key(&members, graph.edges().iter().filter(in_comp).copied());
            let table = match cache {
                Some(c) => c.get_or_build(key),
                None => Arc::new(ComponentTable::build(key.size as usize, &key.edges, lambda)),
            };
            components.push(ModelComponent {
                vertices: members.iter().map(|&v| v as u32).collect(),
                table,
            });
        }
        Ok(IsingModel {
            graph,
            lambda,
            components,
            comp_of,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn p(&self) -> usize {
        self.graph.p()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn components(&self) -> &[ModelComponent] {
        &self.components
    }

    /// log Z, summed over components. The addends are sorted first so that
    /// models whose components are the same multiset of structures get
    /// bit-identical values regardless of vertex labeling; exact ML ties
    /// then break the same way in every decoder.
    pub fn log_partition(&self) -> f64 {
        let mut parts: Vec<f64> = self.components.iter().map(|c| c.table.log_z).collect();
        parts.sort_by(f64::total_cmp);
        parts.into_iter().sum()
    }

    /// Component index and local index within it for a vertex.
    pub fn locate(&self, v: usize) -> Result<(usize, usize)> {
        if v >= self.p() {
            return Err(Error::VertexOutOfRange {
                vertex: v,
                p: self.p(),
            });
        }
        let comp = self.comp_of[v] as usize;
        let local = self.components[comp]
            .vertices
            .binary_search(&(v as u32))
            .expect("vertex present in its component");
        Ok((comp, local))
    }

    /// Exact E[X_i X_j]. Zero when i and j lie in different components.
    pub fn pair_correlation(&self, i: usize, j: usize) -> Result<f64> {
        if i == j {
            return Err(Error::constraint("pair_correlation requires i != j"));
        }
        let (ci, li) = self.locate(i)?;
        let (cj, lj) = self.locate(j)?;
        if ci != cj {
            return Ok(0.0);
        }
        Ok(self.components[ci].table.correlation(li, lj))
    }

    /// P[X_i = X_j] = (1 + E[X_i X_j]) / 2.
    pub fn agreement_probability(&self, i: usize, j: usize) -> Result<f64> {
        Ok((1.0 + self.pair_correlation(i, j)?) / 2.0)
    }

    fn check_comparable(&self, other: &IsingModel) -> Result<()> {
        if self.p() != other.p() {
            return Err(Error::ModelMismatch {
                what: "vertex count",
                left: self.p().to_string(),
                right: other.p().to_string(),
            });
        }
        if self.lambda != other.lambda {
            return Err(Error::ModelMismatch {
                what: "coupling",
                left: self.lambda.to_string(),
                right: other.lambda.to_string(),
            });
        }
        Ok(())
    }

    /// Exact D(P_self || P_other) in nats, via the exponential-family identity
    ///
    ///   D = lambda (sum_E E_G[xx] - sum_E' E_G[xx]) + log Z' - log Z,
    ///
    /// evaluated per component of the union graph E u E' so the factorization
    /// stays exact even when p is large.
    pub fn kl_divergence(&self, other: &IsingModel) -> Result<f64> {
        self.check_comparable(other)?;
        let union = self.graph.union(&other.graph)?;
        let mut total = 0.0;
        for members in union.connected_components() {
            if members.len() > DEFAULT_ENUMERATION_CAP {
                return Err(Error::ComponentOverCap {
                    size: members.len(),
                    cap: DEFAULT_ENUMERATION_CAP,
                });
            }
            let in_comp =
                |e: &&(u32, u32)| members.binary_search(&(e.0 as usize)).is_ok();
            let key_g = local_key(&members, self.graph.edges().iter().filter(in_comp).copied());
            let key_gp = local_key(&members, other.graph.edges().iter().filter(in_comp).copied());
            let table_g = ComponentTable::build(key_g.size as usize, &key_g.edges, self.lambda);
            let table_gp = ComponentTable::build(key_gp.size as usize, &key_gp.edges, self.lambda);
            let own = table_g.expected_pair_sum(&key_g.edges);
            let cross = table_g.expected_pair_sum(&key_gp.edges);
            total += self.lambda * (own - cross) + table_gp.log_z - table_g.log_z;
        }
        if total < 0.0 {
            if total < -1e-9 {
                return Err(Error::InternalConsistency(format!(
                    "KL divergence evaluated to {total}, below the floating-error floor"
                )));
            }
            total = 0.0;
        }
        Ok(total)
    }

    /// Analytic upper bounds on the KL divergence. Variant 1 sums coupling
    /// times correlation differences over the symmetric difference of the
    /// edge sets; variant 2 relaxes each difference to `1 - correlation`.
    pub fn kl_upper_bound(&self, other: &IsingModel, variant: KlBoundVariant) -> Result<f64> {
        self.check_comparable(other)?;
        let mut acc = 0.0;
        for &(a, b) in self.graph.edges() {
            if !other.graph.has_edge(a as usize, b as usize) {
                let e_g = self.pair_correlation(a as usize, b as usize)?;
                let e_gp = other.pair_correlation(a as usize, b as usize)?;
                acc += match variant {
                    KlBoundVariant::CorrelationDifference => e_g - e_gp,
                    KlBoundVariant::OneMinusCorrelation => 1.0 - e_gp,
                };
            }
        }
        for &(a, b) in other.graph.edges() {
            if !self.graph.has_edge(a as usize, b as usize) {
                let e_g = self.pair_correlation(a as usize, b as usize)?;
                let e_gp = other.pair_correlation(a as usize, b as usize)?;
                acc += match variant {
                    KlBoundVariant::CorrelationDifference => e_gp - e_g,
                    KlBoundVariant::OneMinusCorrelation => 1.0 - e_g,
                };
            }
        }
        Ok(self.lambda * acc)
    }

    /// log P_G[x] = lambda * sum over edges of S_ij − n log Z, where S is the
    /// pairwise sample statistic.
    pub fn log_likelihood(&self, x: &crate::sample::SampleMatrix) -> Result<f64> {
        if x.p() != self.p() {
            return Err(Error::DimensionMismatch {
                expected: self.p(),
                got: x.p(),
            });
        }
        let mut stat = 0i64;
        for &(a, b) in self.graph.edges() {
            stat += x.pair_sum(a as usize, b as usize);
        }
        Ok(self.lambda * stat as f64 - x.n() as f64 * self.log_partition())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KlBoundVariant {
    /// Correlation differences over the symmetric difference of edge sets.
    CorrelationDifference,
    /// The `1 - correlation` relaxation of the first variant.
    OneMinusCorrelation,
}

/// Numerically careful log(sum(exp(xs))).
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let mut acc = KahanSum::default();
    for &x in xs {
        acc.add((x - m).exp());
    }
    m + acc.total().ln()
}

/// Streaming two-value log-sum-exp.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}
