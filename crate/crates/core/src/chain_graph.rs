//! Strict epsilon-adjacency graphs and chain connectivity.
//!
//! Two distinct points are adjacent at scale `eps` iff `d(i, j) < eps`. An
//! eps-chain of length `m` is a walk of `m` hops in this graph, so `B^m(x)` is
//! the BFS ball of hop radius `m` and the chainable component `B^inf(x)` is the
//! connected component of `x`.

use std::collections::VecDeque;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{check_eps, Error, Result};
use crate::exec::Execution;
use crate::metric::MetricSpace;

#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), rank: vec![0; n] }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }

    /// Component labels, each the smallest member index of its block.
    pub(crate) fn labels(&mut self) -> Vec<usize> {
        let n = self.parent.len();
        let mut smallest = vec![usize::MAX; n];
        for i in 0..n {
            let r = self.find(i);
            smallest[r] = smallest[r].min(i);
        }
        (0..n).map(|i| smallest[self.find(i)]).collect()
    }
}

/// An eps-chain `p_0, ..., p_m` with every hop strictly shorter than `eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainWitness {
    pub indices: Vec<usize>,
    pub eps: f64,
}

impl ChainWitness {
    /// Hop count.
    pub fn len(&self) -> usize {
        self.indices.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_valid_in(&self, space: &MetricSpace) -> bool {
        !self.indices.is_empty() && self.indices.windows(2).all(|w| space.d(w[0], w[1]) < self.eps)
    }
}

#[derive(Debug)]
pub struct ChainGraph<'a> {
    space: &'a MetricSpace,
    eps: f64,
    adjacency: Vec<Vec<usize>>,
    labels: Vec<usize>,
    component_count: usize,
    exec: Execution,
    eccentricities: OnceLock<Vec<usize>>,
}

impl<'a> ChainGraph<'a> {
    pub fn build(space: &'a MetricSpace, eps: f64) -> Result<Self> {
        Self::build_with(space, eps, Execution::default())
    }

    pub fn build_with(space: &'a MetricSpace, eps: f64, exec: Execution) -> Result<Self> {
        check_eps(eps)?;
        let n = space.len();
        let adjacency = exec.map_range(n, |i| (0..n).filter(|&j| j != i && space.d(i, j) < eps).collect::<Vec<_>>());
        let mut uf = UnionFind::new(n);
        for (i, nbrs) in adjacency.iter().enumerate() {
            for &j in nbrs.iter().filter(|&&j| j > i) {
                uf.union(i, j);
            }
        }
        let labels = uf.labels();
        let component_count = labels.iter().enumerate().filter(|&(i, &l)| i == l).count();
        Ok(ChainGraph { space, eps, adjacency, labels, component_count, exec, eccentricities: OnceLock::new() })
    }

    pub fn space(&self) -> &MetricSpace {
        self.space
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn component_count(&self) -> usize {
        self.component_count
    }

    /// Smallest index in the component of `x`.
    pub fn component_label(&self, x: usize) -> usize {
        self.labels[x]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// All components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.labels.len();
        let mut slot = vec![usize::MAX; n];
        let mut out: Vec<Vec<usize>> = Vec::with_capacity(self.component_count);
        for i in 0..n {
            let l = self.labels[i];
            if slot[l] == usize::MAX {
                slot[l] = out.len();
                out.push(Vec::new());
            }
            out[slot[l]].push(i);
        }
        out
    }

    pub fn same_component(&self, x: usize, y: usize) -> bool {
        self.labels[x] == self.labels[y]
    }

    /// Hop distances from `x`, `None` for unreachable points.
    pub fn hop_distances(&self, x: usize) -> Result<Vec<Option<usize>>> {
        self.space.check_index(x)?;
        Ok(self.bfs(x, usize::MAX).0)
    }

    fn bfs(&self, x: usize, max_depth: usize) -> (Vec<Option<usize>>, Vec<usize>) {
        let n = self.adjacency.len();
        let mut dist = vec![None; n];
        let mut parent = vec![usize::MAX; n];
        let mut queue = VecDeque::from([x]);
        dist[x] = Some(0);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            if du >= max_depth {
                continue;
            }
            for &v in &self.adjacency[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        (dist, parent)
    }

    /// `B^m(x)`: points joined to `x` by an eps-chain of length at most `m`.
    pub fn ball_layers(&self, x: usize, m: usize) -> Result<Vec<usize>> {
        self.space.check_index(x)?;
        if m == 0 {
            return Err(Error::NonPositiveLength);
        }
        let (dist, _) = self.bfs(x, m);
        Ok((0..dist.len()).filter(|&i| dist[i].is_some()).collect())
    }

    /// `B^inf(x)`.
    pub fn chain_component(&self, x: usize) -> Result<Vec<usize>> {
        self.space.check_index(x)?;
        let l = self.labels[x];
        Ok((0..self.labels.len()).filter(|&i| self.labels[i] == l).collect())
    }

    /// Shortest eps-chain from `x` to `y`, or `None` if none exists.
    pub fn find_chain(&self, x: usize, y: usize) -> Result<Option<ChainWitness>> {
        self.space.check_index(x)?;
        self.space.check_index(y)?;
        if !self.same_component(x, y) {
            return Ok(None);
        }
        let (_, parent) = self.bfs(x, usize::MAX);
        let mut path = vec![y];
        let mut cur = y;
        while cur != x {
            cur = parent[cur];
            path.push(cur);
        }
        path.reverse();
        Ok(Some(ChainWitness { indices: path, eps: self.eps }))
    }

    /// Per-point eccentricity within its own component, computed once.
    pub fn eccentricities(&self) -> &[usize] {
        self.eccentricities.get_or_init(|| {
            self.exec
                .map_range(self.adjacency.len(), |x| self.bfs(x, usize::MAX).0.into_iter().flatten().max().unwrap_or(0))
        })
    }

    pub fn covering_profile(&self) -> CoveringProfile {
        let ecc = self.eccentricities();
        let mut centers = Vec::with_capacity(self.component_count);
        let mut radii = Vec::with_capacity(self.component_count);
        for comp in self.components() {
            let best = comp.iter().copied().min_by_key(|&i| (ecc[i], i)).unwrap_or(0);
            centers.push(best);
            radii.push(ecc[best]);
        }
        CoveringProfile {
            eps: self.eps,
            k: self.component_count,
            m_star: radii.iter().copied().max().unwrap_or(0),
            centers,
            radii,
        }
    }
}

/// Finite-scale covering data at one scale.
///
/// `k` components are needed to cover with chainable components; with the
/// listed centers, `B^m_star` balls cover the space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringProfile {
    pub eps: f64,
    pub k: usize,
    pub m_star: usize,
    pub centers: Vec<usize>,
    pub radii: Vec<usize>,
}

pub fn is_chainable(space: &MetricSpace, eps: f64) -> Result<bool> {
    Ok(ChainGraph::build(space, eps)?.component_count() == 1)
}

pub fn covering_profile(space: &MetricSpace, eps: f64) -> Result<CoveringProfile> {
    covering_profile_with(space, eps, Execution::default())
}

pub fn covering_profile_with(space: &MetricSpace, eps: f64, exec: Execution) -> Result<CoveringProfile> {
    Ok(ChainGraph::build_with(space, eps, exec)?.covering_profile())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscretenessMode {
    /// Chains may pass through any point of the space.
    InAmbient,
    /// Chains are confined to the subset.
    InItself,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ThresholdGrid {
    /// `count` values `start * ratio^k`; `start` defaults to the diameter.
    Geometric { start: Option<f64>, ratio: f64, count: usize },
    /// Exact thresholds, which are always realized pairwise distances.
    ExactBreakpoints,
}

impl Default for ThresholdGrid {
    fn default() -> Self {
        ThresholdGrid::Geometric { start: None, ratio: 0.8, count: 40 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretenessReport {
    pub mode: DiscretenessMode,
    pub subset: Vec<usize>,
    /// Per subset point: largest reported delta with `B^inf_delta(x)` free of
    /// other subset points. `0` means no grid value qualifies.
    #[serde(with = "crate::json::vec")]
    pub thresholds: Vec<f64>,
    #[serde(with = "crate::json")]
    pub uniform: f64,
    /// Exact per-point thresholds (minimax chain distance to the rest of the subset).
    #[serde(with = "crate::json::vec")]
    pub exact: Vec<f64>,
}

/// Minimax ("bottleneck") distances from `source` over the complete graph on
/// `nodes`: the smallest `t` such that some chain from `source` to the node has
/// all hops at most `t`. A point lies in `B^inf_delta(source)` iff this value is
/// below `delta`.
fn bottleneck_from(space: &MetricSpace, nodes: &[usize], source: usize) -> Vec<f64> {
    let k = nodes.len();
    let mut best = vec![f64::INFINITY; k];
    let mut done = vec![false; k];
    best[source] = 0.0;
    for _ in 0..k {
        let mut u = usize::MAX;
        for i in 0..k {
            if !done[i] && (u == usize::MAX || best[i] < best[u]) {
                u = i;
            }
        }
        done[u] = true;
        for v in 0..k {
            if !done[v] {
                let via = best[u].max(space.d(nodes[u], nodes[v]));
                if via < best[v] {
                    best[v] = via;
                }
            }
        }
    }
    best
}

pub fn chain_discreteness(
    space: &MetricSpace,
    subset: &[usize],
    mode: DiscretenessMode,
    grid: ThresholdGrid,
) -> Result<DiscretenessReport> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    for &i in subset {
        space.check_index(i)?;
    }
    let mut subset = subset.to_vec();
    subset.sort_unstable();
    subset.dedup();
    let nodes: Vec<usize> = match mode {
        DiscretenessMode::InAmbient => (0..space.len()).collect(),
        DiscretenessMode::InItself => subset.clone(),
    };
    let position: Vec<usize> = subset.iter().map(|x| nodes.binary_search(x).unwrap_or(0)).collect();
    let exact = Execution::default().map_range(subset.len(), |a| {
        let b = bottleneck_from(space, &nodes, position[a]);
        position.iter().enumerate().filter(|&(c, _)| c != a).map(|(_, &p)| b[p]).fold(f64::INFINITY, f64::min)
    });
    let thresholds: Vec<f64> = match grid {
        ThresholdGrid::ExactBreakpoints => exact.clone(),
        ThresholdGrid::Geometric { start, ratio, count } => {
            if !(ratio > 0.0 && ratio < 1.0) || count == 0 {
                return Err(Error::BadParam(format!(
                    "geometric grid needs 0 < ratio < 1 and count >= 1, got {ratio}, {count}"
                )));
            }
            let start = start.unwrap_or_else(|| space.diameter());
            let candidates: Vec<f64> = (0..count).map(|k| start * ratio.powi(k as i32)).collect();
            exact.iter().map(|&t| candidates.iter().copied().find(|&c| c <= t).unwrap_or(0.0)).collect()
        }
    };
    let uniform = thresholds.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(DiscretenessReport { mode, subset, thresholds, uniform, exact })
}

/// Whether distinct subset points occupy distinct chain components at `delta`.
pub fn is_uniformly_chain_discrete_at(
    space: &MetricSpace,
    subset: &[usize],
    mode: DiscretenessMode,
    delta: f64,
) -> Result<bool> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mut subset = subset.to_vec();
    subset.sort_unstable();
    subset.dedup();
    let labels: Vec<usize> = match mode {
        DiscretenessMode::InAmbient => {
            let g = ChainGraph::build(space, delta)?;
            subset.iter().map(|&x| g.component_label(x)).collect()
        }
        DiscretenessMode::InItself => {
            let sub = space.subspace(&subset)?;
            let g = ChainGraph::build(&sub, delta)?;
            (0..subset.len()).map(|x| g.component_label(x)).collect()
        }
    };
    let mut seen = labels.clone();
    seen.sort_unstable();
    seen.dedup();
    Ok(seen.len() == labels.len())
}

/// `d(C+_eps, C-_eps)` where `C±_eps` keeps points of `C±` at distance at least
/// `eps` from `C+ ∩ C-`. Returns `+inf` when either trimmed side is empty.
pub fn u_placed_gap(space: &MetricSpace, cplus: &[usize], cminus: &[usize], eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let n = space.len();
    let mut in_plus = vec![false; n];
    let mut in_minus = vec![false; n];
    for &i in cplus {
        space.check_index(i)?;
        in_plus[i] = true;
    }
    for &i in cminus {
        space.check_index(i)?;
        in_minus[i] = true;
    }
    if let Some(x) = (0..n).find(|&i| !in_plus[i] && !in_minus[i]) {
        return Err(Error::NotACover(x));
    }
    let both: Vec<usize> = (0..n).filter(|&i| in_plus[i] && in_minus[i]).collect();
    let far = |x: usize| both.iter().all(|&c| space.d(x, c) >= eps);
    let plus: Vec<usize> = (0..n).filter(|&i| in_plus[i] && far(i)).collect();
    let minus: Vec<usize> = (0..n).filter(|&i| in_minus[i] && far(i)).collect();
    Ok(plus
        .iter()
        .flat_map(|&a| minus.iter().map(move |&b| (a, b)))
        .map(|(a, b)| space.d(a, b))
        .fold(f64::INFINITY, f64::min))
}
