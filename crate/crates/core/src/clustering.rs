//! Graph-theoretic cluster detection.
//!
//! Agents joined by a positive path (every edge positive definite) always
//! agree at equilibrium, so the positive-tree partition is the starting
//! point. Clusters then grow by merging:
//!
//! * **edge sum**: two clusters whose crossing-edge weights sum to a positive
//!   definite matrix must agree;
//! * **path condition**: a vertex `i` outside cluster `C` agrees with `C` when
//!   the nullspaces of all simple paths from `i` into `C` intersect trivially.
//!   A path's nullspace is the subspace sum of the nullspaces of its edge
//!   weights: the offset `x_i - x_C` can only accumulate along those
//!   directions.
//!
//! Merges repeat until a full sweep finds none. Every merge is sound (it only
//! joins agents that provably agree); the path condition treats paths
//! independently, so it may fail to join vertices that do agree.

use std::ops::ControlFlow;

use nalgebra::DMatrix;
use petgraph::unionfind::UnionFind;

use crate::error::{Error, Result};
use crate::graph::{MatrixWeight, MatrixWeightedGraph};
use crate::subspace::Subspace;
use crate::tolerance::DEFAULT_MAX_PATHS;

/// A maximal set of vertices joined by positive paths, with a spanning tree
/// of positive definite edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositiveTree {
    /// Ascending.
    pub vertices: Vec<usize>,
    /// Edge indices of the spanning tree (`vertices.len() - 1` of them).
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositiveTreePartition {
    /// Ordered by smallest member vertex.
    pub trees: Vec<PositiveTree>,
}

impl PositiveTreePartition {
    pub fn vertex_sets(&self) -> Vec<Vec<usize>> {
        self.trees.iter().map(|t| t.vertices.clone()).collect()
    }

    pub fn tree_of(&self, v: usize) -> Option<usize> {
        self.trees.iter().position(|t| t.vertices.contains(&v))
    }
}

/// Components of the subgraph of positive definite edges.
pub fn positive_tree_partition(g: &MatrixWeightedGraph) -> PositiveTreePartition {
    let n = g.vertex_count();
    let mut uf = UnionFind::<usize>::new(n);
    let mut tree_edges = Vec::new();
    for (k, e) in g.edges().iter().enumerate() {
        if e.weight.class().is_definite() && uf.union(e.tail, e.head) {
            tree_edges.push(k);
        }
    }
    let mut root_slot: Vec<Option<usize>> = vec![None; n];
    let mut trees: Vec<PositiveTree> = Vec::new();
    for v in 0..n {
        let root = uf.find(v);
        let slot = *root_slot[root].get_or_insert_with(|| {
            trees.push(PositiveTree {
                vertices: Vec::new(),
                edges: Vec::new(),
            });
            trees.len() - 1
        });
        trees[slot].vertices.push(v);
    }
    for k in tree_edges {
        let slot = root_slot[uf.find(g.edges()[k].tail)].expect("root assigned");
        trees[slot].edges.push(k);
    }
    PositiveTreePartition { trees }
}

/// Simple paths from `source` into a target vertex set.
#[derive(Debug, Clone)]
pub struct PathFamily {
    pub source: usize,
    pub target: Vec<usize>,
    pub paths: Vec<Vec<usize>>,
    pub path_nullspaces: Vec<Subspace>,
    /// Enumeration stopped at the path budget.
    pub truncated: bool,
}

/// Nullspace of every edge weight, indexed like `g.edges()`.
pub(crate) fn edge_nullspaces(g: &MatrixWeightedGraph) -> Result<Vec<Subspace>> {
    g.edges()
        .iter()
        .map(|e| Subspace::nullspace_of(e.weight.matrix(), g.tolerances().rank_tol))
        .collect()
}

fn check_query(g: &MatrixWeightedGraph, source: usize, target: &[usize]) -> Result<Vec<bool>> {
    let n = g.vertex_count();
    if source >= n {
        return Err(Error::VertexOutOfRange { vertex: source, n });
    }
    if let Some(&bad) = target.iter().find(|&&v| v >= n) {
        return Err(Error::VertexOutOfRange { vertex: bad, n });
    }
    if target.is_empty() {
        return Err(Error::InvalidVertexSet("empty target set".into()));
    }
    if target.contains(&source) {
        return Err(Error::InvalidVertexSet(format!(
            "source {source} lies inside the target set"
        )));
    }
    Ok(g.membership(target))
}

/// What the walker does with a partial path before extending it.
enum Descend {
    Yes,
    Prune,
}

struct PathWalker<'a> {
    g: &'a MatrixWeightedGraph,
    edge_null: &'a [Subspace],
    target: Vec<bool>,
    on_path: Vec<bool>,
    path: Vec<usize>,
    completed: usize,
    max_paths: usize,
    truncated: bool,
}

impl<'a> PathWalker<'a> {
    /// Depth-first over simple paths whose interior avoids the target,
    /// neighbors in ascending order. `visit` sees each completed path with its
    /// nullspace; `descend` may prune a partial path.
    fn walk(
        &mut self,
        nullspace: &Subspace,
        descend: &mut dyn FnMut(&Subspace) -> Descend,
        visit: &mut dyn FnMut(&[usize], &Subspace) -> ControlFlow<()>,
    ) -> Result<ControlFlow<()>> {
        let here = *self.path.last().expect("path starts at the source");
        for &(next, k) in self.g.neighbors(here) {
            if self.on_path[next] {
                continue;
            }
            if self.target[next] && self.completed >= self.max_paths {
                self.truncated = true;
                return Ok(ControlFlow::Break(()));
            }
            let extended = nullspace.sum(&self.edge_null[k])?;
            self.path.push(next);
            let flow = if self.target[next] {
                self.completed += 1;
                visit(&self.path, &extended)
            } else {
                match descend(&extended) {
                    Descend::Prune => ControlFlow::Continue(()),
                    Descend::Yes => {
                        self.on_path[next] = true;
                        let flow = self.walk(&extended, descend, visit)?;
                        self.on_path[next] = false;
                        flow
                    }
                }
            };
            self.path.pop();
            if flow.is_break() {
                return Ok(flow);
            }
        }
        Ok(ControlFlow::Continue(()))
    }
}

fn walker<'a>(
    g: &'a MatrixWeightedGraph,
    edge_null: &'a [Subspace],
    source: usize,
    target: Vec<bool>,
    max_paths: usize,
) -> PathWalker<'a> {
    let mut on_path = vec![false; g.vertex_count()];
    on_path[source] = true;
    PathWalker {
        g,
        edge_null,
        target,
        on_path,
        path: vec![source],
        completed: 0,
        max_paths,
        truncated: false,
    }
}

/// All simple paths from `source` to `target` that touch the target only at
/// their last vertex, up to `max_paths`.
pub fn enumerate_paths(
    g: &MatrixWeightedGraph,
    source: usize,
    target: &[usize],
    max_paths: usize,
) -> Result<PathFamily> {
    let mask = check_query(g, source, target)?;
    let edge_null = edge_nullspaces(g)?;
    let mut w = walker(g, &edge_null, source, mask, max_paths);
    let mut paths = Vec::new();
    let mut path_nullspaces = Vec::new();
    let _ = w.walk(
        &Subspace::zero(g.dim()),
        &mut |_| Descend::Yes,
        &mut |p, ns| {
            paths.push(p.to_vec());
            path_nullspaces.push(ns.clone());
            ControlFlow::Continue(())
        },
    )?;
    let mut target = target.to_vec();
    target.sort_unstable();
    Ok(PathFamily {
        source,
        target,
        paths,
        path_nullspaces,
        truncated: w.truncated,
    })
}

/// Subspace sum of the edge-weight nullspaces along `path`.
pub fn path_nullspace(g: &MatrixWeightedGraph, path: &[usize]) -> Result<Subspace> {
    if path.len() < 2 {
        return Err(Error::NotAPath(format!("{path:?} has fewer than two vertices")));
    }
    let mut seen = vec![false; g.vertex_count()];
    let mut acc = Subspace::zero(g.dim());
    for (idx, pair) in path.windows(2).enumerate() {
        let (u, v) = (pair[0], pair[1]);
        for w in [u, v] {
            if w >= g.vertex_count() {
                return Err(Error::VertexOutOfRange {
                    vertex: w,
                    n: g.vertex_count(),
                });
            }
        }
        if idx == 0 {
            seen[u] = true;
        }
        if seen[v] {
            return Err(Error::NotAPath(format!("{path:?} revisits vertex {v}")));
        }
        seen[v] = true;
        let weight = g
            .weight(u, v)
            .ok_or_else(|| Error::NotAPath(format!("no edge between {u} and {v}")))?;
        let ns = Subspace::nullspace_of(weight.matrix(), g.tolerances().rank_tol)?;
        acc = acc.sum(&ns)?;
    }
    Ok(acc)
}

/// Outcome of testing whether one vertex is forced to agree with a cluster.
#[derive(Debug, Clone)]
pub struct MembershipTest {
    pub vertex: usize,
    pub joins: bool,
    /// The path budget ran out before the intersection reached `{0}`.
    pub truncated: bool,
    /// Intersection of the path nullspaces examined (`None` if no path).
    pub intersection: Option<Subspace>,
    pub paths_examined: usize,
    /// Paths that shrank the running intersection, in discovery order.
    pub witness_paths: Vec<Vec<usize>>,
}

pub(crate) fn membership_test(
    g: &MatrixWeightedGraph,
    edge_null: &[Subspace],
    v: usize,
    cluster: &[usize],
    max_paths: usize,
) -> Result<MembershipTest> {
    let mask = check_query(g, v, cluster)?;
    let mut w = walker(g, edge_null, v, mask, max_paths);
    let running: std::cell::RefCell<Option<Subspace>> = std::cell::RefCell::new(None);
    let mut witness_paths = Vec::new();
    let mut failure: Option<Error> = None;
    // A partial path whose nullspace already contains the running
    // intersection cannot shrink it, and neither can any extension.
    let mut descend = |partial: &Subspace| match running.borrow().as_ref() {
        Some(current) if covers(partial, current) => Descend::Prune,
        _ => Descend::Yes,
    };
    let mut visit = |p: &[usize], ns: &Subspace| {
        let mut slot = running.borrow_mut();
        let next = match slot.as_ref() {
            None => Ok(ns.clone()),
            Some(current) => current.intersect(ns),
        };
        match next {
            Err(e) => {
                failure = Some(e);
                ControlFlow::Break(())
            }
            Ok(next) => {
                let shrank = slot.as_ref().is_none_or(|c| next.dimension() < c.dimension());
                if shrank {
                    witness_paths.push(p.to_vec());
                }
                let done = next.is_zero();
                *slot = Some(next);
                if done {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            }
        }
    };
    let _ = w.walk(&Subspace::zero(g.dim()), &mut descend, &mut visit)?;
    if let Some(e) = failure {
        return Err(e);
    }
    let intersection = running.into_inner();
    let joins = intersection.as_ref().is_some_and(Subspace::is_zero);
    Ok(MembershipTest {
        vertex: v,
        joins,
        truncated: w.truncated && !joins,
        intersection,
        paths_examined: w.completed,
        witness_paths,
    })
}

/// `inner ⊆ outer`, judged on projectors.
fn covers(outer: &Subspace, inner: &Subspace) -> bool {
    if inner.is_zero() {
        return true;
    }
    if outer.dimension() < inner.dimension() {
        return false;
    }
    let p = outer.projector();
    let b = inner.basis();
    (b - &p * b).amax() <= 1e-9
}

/// Path-nullspace membership test of `v` against `cluster`.
pub fn vertex_joins_cluster(
    g: &MatrixWeightedGraph,
    v: usize,
    cluster: &[usize],
    max_paths: usize,
) -> Result<MembershipTest> {
    let edge_null = edge_nullspaces(g)?;
    membership_test(g, &edge_null, v, cluster, max_paths)
}

/// Crossing edges between `c1` and `c2` when their weights sum to a positive
/// definite matrix.
pub fn edge_sum_witness(
    g: &MatrixWeightedGraph,
    c1: &[usize],
    c2: &[usize],
) -> Result<Option<Vec<usize>>> {
    let crossing = g.crossing_edges(c1, c2);
    if crossing.is_empty() {
        return Ok(None);
    }
    let d = g.dim();
    let total = crossing
        .iter()
        .fold(DMatrix::<f64>::zeros(d, d), |acc, &k| acc + g.edges()[k].weight.matrix());
    let sum = MatrixWeight::with_tolerances(total, g.tolerances())?;
    Ok(sum.class().is_definite().then_some(crossing))
}

/// Sufficient merge test: crossing-edge weights sum to a definite matrix.
pub fn merge_by_edge_sum(g: &MatrixWeightedGraph, c1: &[usize], c2: &[usize]) -> Result<bool> {
    Ok(edge_sum_witness(g, c1, c2)?.is_some())
}

#[derive(Debug, Clone, PartialEq)]
pub enum MergeRule {
    /// Crossing edges `(tail, head)` whose weights sum to a definite matrix.
    EdgeSum { edges: Vec<(usize, usize)> },
    /// `vertex` passed the path condition; `paths` shrank the intersection.
    PathCondition { vertex: usize, paths: Vec<Vec<usize>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeStep {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
    pub rule: MergeRule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Ascending.
    pub vertices: Vec<usize>,
    /// Indices into the positive-tree partition.
    pub trees: Vec<usize>,
    /// Indices into [`ClusterPartition::merges`] that built this cluster.
    pub merges: Vec<usize>,
}

/// A membership query that hit the path budget without a decision.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedQuery {
    pub vertex: usize,
    pub cluster: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ClusterPartition {
    /// Ordered by smallest member vertex.
    pub clusters: Vec<Cluster>,
    pub trees: PositiveTreePartition,
    /// Merge trace in the order merges were applied.
    pub merges: Vec<MergeStep>,
    pub truncated: Vec<TruncatedQuery>,
    n: usize,
}

impl ClusterPartition {
    pub fn spanning(&self) -> bool {
        self.clusters.len() == 1 && self.clusters[0].vertices.len() == self.n
    }

    pub fn vertex_sets(&self) -> Vec<Vec<usize>> {
        self.clusters.iter().map(|c| c.vertices.clone()).collect()
    }

    pub fn cluster_of(&self, v: usize) -> Option<usize> {
        self.clusters.iter().position(|c| c.vertices.contains(&v))
    }

    pub fn is_truncated(&self) -> bool {
        !self.truncated.is_empty()
    }
}

/// Iterative merge driver.
///
/// Clusters start as positive trees. Each sweep walks cluster pairs in order
/// of smallest member; the edge-sum test runs over all pairs first, and the
/// path condition (every vertex of one cluster against the other, both ways)
/// only when no edge-sum merge exists. The first merge found restarts the
/// sweep; a sweep without merges ends the loop.
pub fn find_clusters(g: &MatrixWeightedGraph, max_paths: usize) -> Result<ClusterPartition> {
    let trees = positive_tree_partition(g);
    let edge_null = edge_nullspaces(g)?;
    let mut clusters: Vec<Cluster> = trees
        .trees
        .iter()
        .enumerate()
        .map(|(idx, t)| Cluster {
            vertices: t.vertices.clone(),
            trees: vec![idx],
            merges: Vec::new(),
        })
        .collect();
    let mut merges: Vec<MergeStep> = Vec::new();
    let mut truncated: Vec<TruncatedQuery> = Vec::new();

    loop {
        clusters.sort_by_key(|c| c.vertices[0]);
        let found = match find_edge_sum_merge(g, &clusters)? {
            Some(hit) => Some(hit),
            None => find_path_merge(g, &edge_null, &clusters, max_paths, &mut truncated)?,
        };
        let Some((a, b, rule)) = found else { break };
        let second = clusters.remove(b);
        let first = &mut clusters[a];
        merges.push(MergeStep {
            first: first.vertices.clone(),
            second: second.vertices.clone(),
            rule,
        });
        first.vertices.extend(second.vertices);
        first.vertices.sort_unstable();
        first.trees.extend(second.trees);
        first.trees.sort_unstable();
        first.merges.extend(second.merges);
        first.merges.push(merges.len() - 1);
    }

    // Queries that were truncated against clusters that later merged anyway
    // are moot; keep only those still separating final clusters.
    truncated.retain(|q| {
        let home = clusters.iter().position(|c| c.vertices.contains(&q.vertex));
        let away = clusters.iter().position(|c| c.vertices.contains(&q.cluster[0]));
        home != away
    });
    truncated.dedup();

    Ok(ClusterPartition {
        clusters,
        trees,
        merges,
        truncated,
        n: g.vertex_count(),
    })
}

type MergeHit = (usize, usize, MergeRule);

fn find_edge_sum_merge(g: &MatrixWeightedGraph, clusters: &[Cluster]) -> Result<Option<MergeHit>> {
    for a in 0..clusters.len() {
        for b in a + 1..clusters.len() {
            if let Some(edges) = edge_sum_witness(g, &clusters[a].vertices, &clusters[b].vertices)? {
                let edges = edges
                    .into_iter()
                    .map(|k| (g.edges()[k].tail, g.edges()[k].head))
                    .collect();
                return Ok(Some((a, b, MergeRule::EdgeSum { edges })));
            }
        }
    }
    Ok(None)
}

fn find_path_merge(
    g: &MatrixWeightedGraph,
    edge_null: &[Subspace],
    clusters: &[Cluster],
    max_paths: usize,
    truncated: &mut Vec<TruncatedQuery>,
) -> Result<Option<MergeHit>> {
    for a in 0..clusters.len() {
        for b in a + 1..clusters.len() {
            for (from, to) in [(b, a), (a, b)] {
                let target = &clusters[to].vertices;
                for &v in &clusters[from].vertices {
                    let test = membership_test(g, edge_null, v, target, max_paths)?;
                    if test.joins {
                        let rule = MergeRule::PathCondition {
                            vertex: v,
                            paths: test.witness_paths,
                        };
                        return Ok(Some((a, b, rule)));
                    }
                    if test.truncated {
                        truncated.push(TruncatedQuery {
                            vertex: v,
                            cluster: target.clone(),
                        });
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Whether a single cluster spans the graph.
pub fn predict_consensus(g: &MatrixWeightedGraph) -> Result<bool> {
    Ok(find_clusters(g, DEFAULT_MAX_PATHS)?.spanning())
}
