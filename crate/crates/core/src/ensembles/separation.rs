//! Brute-force verification of the (eta, gamma)-separation condition and
//! membership checks for the nested graph classes.

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Default ceiling on (candidate subsets) x (paths) work per vertex pair.
pub const DEFAULT_SEPARATION_WORK_LIMIT: u64 = 50_000_000;

/// Parameters of the graph classes: max edges k, max degree d, separator
/// size eta and path length gamma.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassParams {
    pub k: usize,
    pub d: usize,
    pub eta: usize,
    pub gamma: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassId {
    /// At most k edges.
    Gk,
    /// Additionally max degree at most d.
    Gkd,
    /// Additionally the (eta, gamma)-separation condition.
    Gkdeg,
}

/// Enumerates the internal-vertex sets (as bitmasks) of all simple u-v paths
/// with at most `gamma` edges.
fn enumerate_paths(adj: &[Vec<usize>], u: usize, v: usize, gamma: usize) -> Vec<u128> {
    let mut paths = Vec::new();
    let mut visited: u128 = 1 << u;
    let mut internal: Vec<usize> = Vec::new();

    fn dfs(
        adj: &[Vec<usize>],
        cur: usize,
        v: usize,
        depth_left: usize,
        visited: &mut u128,
        internal: &mut Vec<usize>,
        paths: &mut Vec<u128>,
    ) {
        if depth_left == 0 {
            return;
        }
        for &w in &adj[cur] {
            if w == v {
                let mut mask: u128 = 0;
                for &x in internal.iter() {
                    mask |= 1 << x;
                }
                paths.push(mask);
                continue;
            }
            if (*visited >> w) & 1 == 1 {
                continue;
            }
            *visited |= 1 << w;
            internal.push(w);
            dfs(adj, w, v, depth_left - 1, visited, internal, paths);
            internal.pop();
            *visited &= !(1 << w);
        }
    }

    dfs(adj, u, v, gamma, &mut visited, &mut internal, &mut paths);
    paths
}

/// Tests whether some `size`-subset of `candidates` intersects every path mask.
fn any_subset_hits(candidates: &[usize], paths: &[u128], size: usize) -> bool {
    let n = candidates.len();
    if size > n {
        return false;
    }
    let mut combo: Vec<usize> = (0..size).collect();
    loop {
        let mut mask: u128 = 0;
        for &i in &combo {
            mask |= 1 << candidates[i];
        }
        if paths.iter().all(|&pm| pm & mask != 0) {
            return true;
        }
        // Advance to the next lexicographic combination of `size` out of n.
        let mut i = size;
        loop {
            if i == 0 {
                return false;
            }
            i -= 1;
            if combo[i] != i + n - size {
                break;
            }
        }
        combo[i] += 1;
        for j in (i + 1)..size {
            combo[j] = combo[j - 1] + 1;
        }
    }
}

/// Searches for a subset of `candidates` of size at most `eta` whose mask
/// intersects every path mask. Plain combination enumeration.
fn has_hitting_set(candidates: &[usize], paths: &[u128], eta: usize) -> bool {
    if paths.is_empty() {
        return true;
    }
    (0..=eta.min(candidates.len())).any(|s| any_subset_hits(candidates, paths, s))
}

fn ln_combinations(n: usize, r: usize) -> f64 {
    crate::bounds::ln_choose(n as u64, r.min(n) as u64)
}

/// True iff for every non-adjacent pair (u, v) there is a set of at most
/// `eta` vertices (excluding u and v) meeting every u-v path of length at
/// most `gamma`. Brute force; intended for small graphs.
pub fn verify_separation(g: &Graph, eta: usize, gamma: usize) -> Result<bool> {
    verify_separation_with_limit(g, eta, gamma, DEFAULT_SEPARATION_WORK_LIMIT)
}

pub fn verify_separation_with_limit(
    g: &Graph,
    eta: usize,
    gamma: usize,
    work_limit: u64,
) -> Result<bool> {
    if g.p() > 128 {
        return Err(Error::ResourceCap(format!(
            "separation check uses 128-bit vertex masks; p = {} is too large",
            g.p()
        )));
    }
    let adj = g.adjacency();
    for u in 0..g.p() {
        for v in (u + 1)..g.p() {
            if g.has_edge(u, v) {
                continue;
            }
            let paths = enumerate_paths(&adj, u, v, gamma);
            if paths.is_empty() {
                continue;
            }
            let mut cand_mask: u128 = 0;
            for &pm in &paths {
                cand_mask |= pm;
            }
            let candidates: Vec<usize> = (0..g.p()).filter(|&x| (cand_mask >> x) & 1 == 1).collect();
            let work = ln_combinations(candidates.len(), eta) + (paths.len() as f64).ln().max(0.0);
            if work > (work_limit as f64).ln() {
                return Err(Error::ResourceCap(format!(
                    "separation check for pair ({u},{v}): C({},{}) x {} paths exceeds work limit",
                    candidates.len(),
                    eta.min(candidates.len()),
                    paths.len()
                )));
            }
            if !has_hitting_set(&candidates, &paths, eta) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Membership in one of the three nested graph classes.
pub fn class_membership(g: &Graph, cp: &ClassParams, class: ClassId) -> Result<bool> {
    let edges_ok = g.edge_count() <= cp.k;
    match class {
        ClassId::Gk => Ok(edges_ok),
        ClassId::Gkd => Ok(edges_ok && g.max_degree() <= cp.d),
        ClassId::Gkdeg => {
            if !(edges_ok && g.max_degree() <= cp.d) {
                return Ok(false);
            }
            verify_separation(g, cp.eta, cp.gamma)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_graph_always_separated() {
        let g = Graph::empty(5);
        assert!(verify_separation(&g, 0, 3).unwrap());
        assert!(verify_separation(&g, 2, 10).unwrap());
    }

    #[test]
    fn short_path_needs_no_blockers_when_gamma_small() {
        // 0 - 1 - 2: the only 0..2 path has length 2 > gamma = 1.
        let g = Graph::new(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(verify_separation(&g, 0, 1).unwrap());
        // With gamma = 2 the path must be blocked; eta = 0 fails, eta = 1 works.
        assert!(!verify_separation(&g, 0, 2).unwrap());
        assert!(verify_separation(&g, 1, 2).unwrap());
    }

    #[test]
    fn two_disjoint_paths_need_two_blockers() {
        // 0 and 1 joined by two length-2 paths through 2 and 3.
        let g = Graph::new(4, &[(0, 2), (2, 1), (0, 3), (3, 1)]).unwrap();
        assert!(!verify_separation(&g, 1, 2).unwrap());
        assert!(verify_separation(&g, 2, 2).unwrap());
    }

    #[test]
    fn class_membership_nesting() {
        let cp = ClassParams {
            k: 3,
            d: 1,
            eta: 0,
            gamma: 1,
        };
        let triangle = Graph::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert!(class_membership(&triangle, &cp, ClassId::Gk).unwrap());
        assert!(!class_membership(&triangle, &cp, ClassId::Gkd).unwrap());

        let empty = Graph::empty(4);
        for class in [ClassId::Gk, ClassId::Gkd, ClassId::Gkdeg] {
            assert!(class_membership(&empty, &cp, class).unwrap());
        }

        // A k-edge matching is in Gk with k edges.
        let matching = Graph::new(6, &[(0, 1), (2, 3), (4, 5)]).unwrap();
        assert!(class_membership(&matching, &cp, ClassId::Gk).unwrap());
    }

    #[test]
    fn work_limit_guard_trips() {
        let g = Graph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let err = verify_separation_with_limit(&g, 1, 2, 1).unwrap_err();
        assert!(matches!(err, Error::ResourceCap(_)));
    }
}
