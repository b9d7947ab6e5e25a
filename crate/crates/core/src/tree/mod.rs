//! Binary phylogenetic trees.
//!
//! A [`PhyloTree`] on `n` leaves stores vertices `0..2n-2`. Vertex `v < n` is
//! the leaf labelled `v + 1`; the remaining `n - 2` vertices are internal and
//! have degree three. Edges are addressed by a stable [`EdgeId`], the index
//! into the edge list.

mod enumerate;
mod newick;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::RationalMatrix;
use crate::rational;

pub use enumerate::{circular_trees, random_tree, tree_shapes};
pub use newick::{parse_newick, parse_newick_with, NewickError, ParseOptions, ParsedNewick};

pub type EdgeId = usize;
/// Leaf labels run over `1..=n`.
pub type Label = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("a binary tree needs at least 3 leaves, got {0}")]
    TooFewLeaves(usize),
    #[error("expected {expected} edges, found {found}")]
    EdgeCount { expected: usize, found: usize },
    #[error("vertex {0} is out of range")]
    VertexOutOfRange(usize),
    #[error("self loop at vertex {0}")]
    SelfLoop(usize),
    #[error("vertex {vertex} has degree {degree}, expected {expected}")]
    BadDegree {
        vertex: usize,
        degree: usize,
        expected: usize,
    },
    #[error("the edge set is not connected")]
    Disconnected,
    #[error("leaf label {0} does not exist")]
    InvalidLeaf(Label),
    #[error("leaf label {0} appears twice")]
    RepeatedLeaf(Label),
    #[error("edge {0} does not exist")]
    InvalidEdge(EdgeId),
    #[error("restriction needs at least 3 leaves, got {0}")]
    RestrictionTooSmall(usize),
    #[error("edge {0} has a non-positive length")]
    NonPositiveLength(EdgeId),
    #[error("expected {expected} edge lengths, found {found}")]
    LengthCount { expected: usize, found: usize },
    #[error("leaf labels are not in circular order")]
    NotCircular,
    #[error("invalid tree description: {0}")]
    Malformed(String),
}

/// Number of unordered leaf pairs.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Position of `(i, j)`, `1 <= i < j <= n`, in lexicographic order.
pub fn pair_index(n: usize, i: Label, j: Label) -> usize {
    debug_assert!(1 <= i && i < j && j <= n);
    (i - 1) * (2 * n - i) / 2 + (j - i - 1)
}

/// All pairs `(i, j)` with `i < j`, lexicographically.
pub fn pairs(n: usize) -> impl Iterator<Item = (Label, Label)> {
    (1..=n).flat_map(move |i| (i + 1..=n).map(move |j| (i, j)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhyloTree {
    n: usize,
    edges: Vec<[usize; 2]>,
    adjacency: Vec<Vec<(usize, EdgeId)>>,
}

/// A bipartition of the leaves induced by removing one edge.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Split {
    /// The smaller block; on ties, the block containing leaf 1.
    pub block_a: Vec<Label>,
    pub block_b: Vec<Label>,
    pub edge: EdgeId,
}

impl Split {
    pub fn is_trivial(&self) -> bool {
        self.block_a.len() < 2
    }
}

fn write_block(f: &mut fmt::Formatter<'_>, block: &[Label], compact: bool) -> fmt::Result {
    for (idx, x) in block.iter().enumerate() {
        if idx > 0 && !compact {
            write!(f, ",")?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Digits run together only when every label is a single digit.
        let compact = self.block_a.iter().chain(&self.block_b).all(|&x| x < 10);
        write_block(f, &self.block_a, compact)?;
        write!(f, "|")?;
        write_block(f, &self.block_b, compact)
    }
}

/// Topology of a four-leaf subtree, stored as `ab|cd` with `a < b`, `c < d`
/// and `a < c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Quartet {
    pub left: (Label, Label),
    pub right: (Label, Label),
}

impl Quartet {
    pub fn new(a: Label, b: Label, c: Label, d: Label) -> Self {
        let left = (a.min(b), a.max(b));
        let right = (c.min(d), c.max(d));
        if left.0 < right.0 {
            Quartet { left, right }
        } else {
            Quartet {
                left: right,
                right: left,
            }
        }
    }

    /// True when `{x, y}` is one of the two sides of the quartet.
    pub fn separates(&self, x: Label, y: Label) -> bool {
        let p = (x.min(y), x.max(y));
        p == self.left || p == self.right
    }

    pub fn leaves(&self) -> [Label; 4] {
        let mut l = [self.left.0, self.left.1, self.right.0, self.right.1];
        l.sort_unstable();
        l
    }
}

impl fmt::Display for Quartet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.left;
        let (c, d) = self.right;
        if [a, b, c, d].iter().all(|&x| x < 10) {
            write!(f, "{a}{b}|{c}{d}")
        } else {
            write!(f, "{a},{b}|{c},{d}")
        }
    }
}

/// A rooted caterpillar cut off by a single edge. Size-two clusters are
/// cherries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cluster {
    pub edge: EdgeId,
    /// Endpoint of `edge` inside the cluster.
    pub root: usize,
    pub leaves: Vec<Label>,
}

/// Result of restricting a tree to a subset of its leaves.
#[derive(Clone, Debug)]
pub struct Restriction {
    pub tree: PhyloTree,
    /// `leaf_map[new_label - 1]` is the original label.
    pub leaf_map: Vec<Label>,
    /// Original edges making up each new edge, in path order.
    pub edge_map: Vec<Vec<EdgeId>>,
}

/// Edge bookkeeping for [`PhyloTree::attach_leaf`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Attachment {
    /// Id of the subdivided edge in the old tree. Its slot is reused by `e_a`.
    pub removed: EdgeId,
    pub e_a: EdgeId,
    pub e_b: EdgeId,
    pub pendant: EdgeId,
    pub new_leaf: Label,
}

/// Positive edge lengths indexed by [`EdgeId`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeLengths(Vec<BigRational>);

impl EdgeLengths {
    pub fn new(lengths: Vec<BigRational>) -> Result<Self, TreeError> {
        if let Some(bad) = lengths.iter().position(|l| !l.is_positive()) {
            return Err(TreeError::NonPositiveLength(bad));
        }
        Ok(EdgeLengths(lengths))
    }

    pub fn unit(edge_count: usize) -> Self {
        EdgeLengths(vec![BigRational::one(); edge_count])
    }

    /// `1 + q_e / 1000` with `q_e` the `e`-th prime. Distinct per edge, so
    /// no coincidental ties beyond those forced by the topology.
    pub fn generic(edge_count: usize) -> Self {
        let primes = first_primes(edge_count);
        EdgeLengths(
            primes
                .into_iter()
                .map(|q| BigRational::one() + rational::ratio(q as i64, 1000))
                .collect(),
        )
    }

    pub fn values(&self) -> &[BigRational] {
        &self.0
    }

    pub fn scaled(&self, factor: &BigRational) -> Self {
        EdgeLengths(self.0.iter().map(|l| l * factor).collect())
    }
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while out.len() < count {
        if (2..candidate).take_while(|d| d * d <= candidate).all(|d| !candidate.is_multiple_of(d)) {
            out.push(candidate);
        }
        candidate += 1;
    }
    out
}

/// Weights `ω_ij` on Plücker variables, stored in [`pair_index`] order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightVector {
    n: usize,
    values: Vec<BigRational>,
}

impl WeightVector {
    pub fn from_values(n: usize, values: Vec<BigRational>) -> Self {
        assert_eq!(values.len(), pair_count(n));
        WeightVector { n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `None` when `(i, j)` falls outside `1..=n`.
    pub fn get(&self, i: Label, j: Label) -> Option<&BigRational> {
        let (a, b) = (i.min(j), i.max(j));
        if a == 0 || a == b || b > self.n {
            return None;
        }
        Some(&self.values[pair_index(self.n, a, b)])
    }

    pub fn values(&self) -> &[BigRational] {
        &self.values
    }
}

/// The 0/1 indicator of the leaf-to-leaf path `i -> j` over edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExponentVector {
    pub pair: (Label, Label),
    pub entries: Vec<u8>,
}

impl ExponentVector {
    pub fn support(&self) -> Vec<EdgeId> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, &x)| x == 1)
            .map(|(e, _)| e)
            .collect()
    }
}

/// Leaf-to-leaf paths for every pair, in [`pair_index`] order.
#[derive(Clone, Debug)]
pub struct PathTable {
    n: usize,
    paths: Vec<Vec<EdgeId>>,
}

impl PathTable {
    pub fn get(&self, i: Label, j: Label) -> &[EdgeId] {
        let (a, b) = (i.min(j), i.max(j));
        &self.paths[pair_index(self.n, a, b)]
    }

    pub fn iter(&self) -> impl Iterator<Item = ((Label, Label), &[EdgeId])> {
        pairs(self.n).zip(self.paths.iter().map(Vec::as_slice))
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

impl PhyloTree {
    /// Builds a tree from an edge list over vertices `0..2n-2` and validates
    /// binarity, the edge count and connectivity.
    pub fn from_edges(n: usize, edges: Vec<[usize; 2]>) -> Result<Self, TreeError> {
        if n < 3 {
            return Err(TreeError::TooFewLeaves(n));
        }
        let vertices = 2 * n - 2;
        if edges.len() != 2 * n - 3 {
            return Err(TreeError::EdgeCount {
                expected: 2 * n - 3,
                found: edges.len(),
            });
        }
        let mut adjacency = vec![Vec::new(); vertices];
        for (id, &[u, v]) in edges.iter().enumerate() {
            for w in [u, v] {
                if w >= vertices {
                    return Err(TreeError::VertexOutOfRange(w));
                }
            }
            if u == v {
                return Err(TreeError::SelfLoop(u));
            }
            adjacency[u].push((v, id));
            adjacency[v].push((u, id));
        }
        for (v, adj) in adjacency.iter().enumerate() {
            let expected = if v < n { 1 } else { 3 };
            if adj.len() != expected {
                return Err(TreeError::BadDegree {
                    vertex: v,
                    degree: adj.len(),
                    expected,
                });
            }
        }
        let tree = PhyloTree {
            n,
            edges,
            adjacency,
        };
        let reached = tree.bfs_parents(0).0.iter().filter(|p| p.is_some()).count();
        if reached != vertices {
            return Err(TreeError::Disconnected);
        }
        Ok(tree)
    }

    /// The three-leaf star.
    pub fn star() -> Self {
        PhyloTree::from_edges(3, vec![[0, 3], [1, 3], [2, 3]]).expect("star is valid")
    }

    pub fn leaf_count(&self) -> usize {
        self.n
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn endpoints(&self, e: EdgeId) -> [usize; 2] {
        self.edges[e]
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, EdgeId)] {
        &self.adjacency[v]
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        v < self.n
    }

    pub fn leaf_vertex(&self, label: Label) -> usize {
        label - 1
    }

    pub fn leaf_label(&self, v: usize) -> Option<Label> {
        (v < self.n).then_some(v + 1)
    }

    pub fn check_leaf(&self, label: Label) -> Result<(), TreeError> {
        if label == 0 || label > self.n {
            Err(TreeError::InvalidLeaf(label))
        } else {
            Ok(())
        }
    }

    fn check_edge(&self, e: EdgeId) -> Result<(), TreeError> {
        if e < self.edges.len() {
            Ok(())
        } else {
            Err(TreeError::InvalidEdge(e))
        }
    }

    /// Pendant edge of a leaf.
    pub fn pendant_edge(&self, label: Label) -> EdgeId {
        self.adjacency[label - 1][0].1
    }

    /// Parent vertex and parent edge for every vertex, rooted at `root`.
    fn bfs_parents(&self, root: usize) -> (Vec<Option<(usize, EdgeId)>>, Vec<usize>) {
        let mut parent: Vec<Option<(usize, EdgeId)>> = vec![None; self.vertex_count()];
        let mut order = Vec::with_capacity(self.vertex_count());
        parent[root] = Some((root, usize::MAX));
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &(w, e) in &self.adjacency[v] {
                if parent[w].is_none() {
                    parent[w] = Some((v, e));
                    queue.push_back(w);
                }
            }
        }
        (parent, order)
    }

    /// Edges on the path between two vertices, ordered from `from` to `to`.
    pub fn vertex_path(&self, from: usize, to: usize) -> Vec<EdgeId> {
        let (parent, _) = self.bfs_parents(to);
        let mut path = Vec::new();
        let mut v = from;
        while v != to {
            let (p, e) = parent[v].expect("tree is connected");
            path.push(e);
            v = p;
        }
        path
    }

    /// Edges on the path between leaves `i` and `j`.
    pub fn path(&self, i: Label, j: Label) -> Result<Vec<EdgeId>, TreeError> {
        self.check_leaf(i)?;
        self.check_leaf(j)?;
        Ok(self.vertex_path(i - 1, j - 1))
    }

    pub fn path_table(&self) -> PathTable {
        let n = self.n;
        let mut paths = vec![Vec::new(); pair_count(n)];
        for i in 1..n {
            let (parent, _) = self.bfs_parents(i - 1);
            for j in i + 1..=n {
                let mut path = Vec::new();
                let mut v = j - 1;
                while v != i - 1 {
                    let (p, e) = parent[v].expect("tree is connected");
                    path.push(e);
                    v = p;
                }
                path.reverse();
                paths[pair_index(n, i, j)] = path;
            }
        }
        PathTable { n, paths }
    }

    /// Number of edges between every pair of leaves, as an `n x n` table.
    pub fn leaf_distances(&self) -> Vec<Vec<usize>> {
        let mut out = vec![vec![0; self.n]; self.n];
        for i in 0..self.n {
            let mut dist = vec![usize::MAX; self.vertex_count()];
            dist[i] = 0;
            let mut queue = VecDeque::from([i]);
            while let Some(v) = queue.pop_front() {
                for &(w, _) in &self.adjacency[v] {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[v] + 1;
                        queue.push_back(w);
                    }
                }
            }
            out[i].copy_from_slice(&dist[..self.n]);
        }
        out
    }

    /// Vertices reachable from `start` without crossing edge `e`.
    fn side_vertices(&self, e: EdgeId, start: usize) -> Vec<usize> {
        let mut seen = vec![false; self.vertex_count()];
        seen[start] = true;
        let mut stack = vec![start];
        let mut out = Vec::new();
        while let Some(v) = stack.pop() {
            out.push(v);
            for &(w, f) in &self.adjacency[v] {
                if f != e && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        out
    }

    /// Sorted labels of the leaves on the `start` side of edge `e`.
    pub fn side_leaves(&self, e: EdgeId, start: usize) -> Vec<Label> {
        let mut leaves: Vec<Label> = self
            .side_vertices(e, start)
            .into_iter()
            .filter_map(|v| self.leaf_label(v))
            .collect();
        leaves.sort_unstable();
        leaves
    }

    pub fn split(&self, e: EdgeId) -> Result<Split, TreeError> {
        self.check_edge(e)?;
        let [u, v] = self.edges[e];
        let a = self.side_leaves(e, u);
        let b = self.side_leaves(e, v);
        let a_first = a.len() < b.len() || (a.len() == b.len() && a.first() == Some(&1));
        let (block_a, block_b) = if a_first { (a, b) } else { (b, a) };
        Ok(Split {
            block_a,
            block_b,
            edge: e,
        })
    }

    pub fn splits(&self) -> Vec<Split> {
        (0..self.edge_count())
            .map(|e| self.split(e).expect("edge in range"))
            .collect()
    }

    pub fn nontrivial_splits(&self) -> Vec<Split> {
        let mut s: Vec<Split> = self.splits().into_iter().filter(|s| !s.is_trivial()).collect();
        s.sort_by(|x, y| (x.block_a.len(), &x.block_a).cmp(&(y.block_a.len(), &y.block_a)));
        s
    }

    /// Canonical key of every edge: the side not containing leaf 1.
    pub fn split_keys(&self) -> Vec<Vec<Label>> {
        (0..self.edge_count())
            .map(|e| {
                let [u, v] = self.edges[e];
                let a = self.side_leaves(e, u);
                if a.first() == Some(&1) {
                    self.side_leaves(e, v)
                } else {
                    a
                }
            })
            .collect()
    }

    pub fn quartet(&self, i: Label, j: Label, k: Label, l: Label) -> Result<Quartet, TreeError> {
        let labels = [i, j, k, l];
        for &x in &labels {
            self.check_leaf(x)?;
        }
        for a in 0..4 {
            for b in a + 1..4 {
                if labels[a] == labels[b] {
                    return Err(TreeError::RepeatedLeaf(labels[a]));
                }
            }
        }
        let d = |x: Label, y: Label| self.vertex_path(x - 1, y - 1).len();
        let candidates = [
            (d(i, j) + d(k, l), Quartet::new(i, j, k, l)),
            (d(i, k) + d(j, l), Quartet::new(i, k, j, l)),
            (d(i, l) + d(j, k), Quartet::new(i, l, j, k)),
        ];
        Ok(candidates
            .iter()
            .min_by_key(|(s, _)| *s)
            .map(|(_, q)| *q)
            .expect("three candidates"))
    }

    /// Leaves in depth-first order from leaf 1, children visited by their
    /// smallest leaf label. For a circularly labelled tree this is `1..=n`.
    pub fn circular_order(&self) -> Vec<Label> {
        let root = 0;
        let (parent, order) = self.bfs_parents(root);
        let mut min_label = vec![usize::MAX; self.vertex_count()];
        for &v in order.iter().rev() {
            if let Some(l) = self.leaf_label(v) {
                min_label[v] = min_label[v].min(l);
            }
            if v != root {
                let p = parent[v].expect("connected").0;
                min_label[p] = min_label[p].min(min_label[v]);
            }
        }
        let mut out = Vec::with_capacity(self.n);
        let mut stack = vec![(root, usize::MAX)];
        while let Some((v, from)) = stack.pop() {
            if let Some(l) = self.leaf_label(v) {
                out.push(l);
            }
            let mut children: Vec<usize> = self.adjacency[v]
                .iter()
                .map(|&(w, _)| w)
                .filter(|&w| w != from)
                .collect();
            children.sort_by_key(|&w| std::cmp::Reverse(min_label[w]));
            stack.extend(children.into_iter().map(|w| (w, v)));
        }
        out
    }

    /// Every split block is a cyclic interval of `1..=n`.
    pub fn is_circular(&self) -> bool {
        let n = self.n;
        self.splits().iter().all(|s| {
            let mut in_block = vec![false; n];
            for &x in &s.block_a {
                in_block[x - 1] = true;
            }
            let boundaries = (0..n).filter(|&x| in_block[x] != in_block[(x + 1) % n]).count();
            boundaries <= 2
        })
    }

    /// Renames leaves: `new_label_of[old - 1]` is the new label of leaf `old`.
    /// Edge ids are preserved.
    pub fn relabel(&self, new_label_of: &[Label]) -> Result<PhyloTree, TreeError> {
        let n = self.n;
        let mut seen = vec![false; n];
        for &l in new_label_of {
            if l == 0 || l > n {
                return Err(TreeError::InvalidLeaf(l));
            }
            if std::mem::replace(&mut seen[l - 1], true) {
                return Err(TreeError::RepeatedLeaf(l));
            }
        }
        if new_label_of.len() != n {
            return Err(TreeError::Malformed("relabeling has wrong length".into()));
        }
        let map = |v: usize| if v < n { new_label_of[v] - 1 } else { v };
        let edges = self.edges.iter().map(|&[u, v]| [map(u), map(v)]).collect();
        PhyloTree::from_edges(n, edges)
    }

    /// Pairs of leaves sharing their neighbour, as 2-clusters.
    pub fn cherries(&self) -> Vec<(Label, Label)> {
        self.k_clusters(2)
            .into_iter()
            .map(|c| (c.leaves[0], c.leaves[1]))
            .collect()
    }

    /// True when the subtree hanging from `root` (away from `from`) is a
    /// rooted caterpillar: every internal vertex has a leaf child.
    fn is_rooted_caterpillar(&self, root: usize, from: usize) -> bool {
        let mut stack = vec![(root, from)];
        while let Some((v, p)) = stack.pop() {
            if self.is_leaf(v) {
                continue;
            }
            let children: Vec<usize> = self.adjacency[v]
                .iter()
                .map(|&(w, _)| w)
                .filter(|&w| w != p)
                .collect();
            if !children.iter().any(|&w| self.is_leaf(w)) {
                return false;
            }
            stack.extend(children.into_iter().map(|w| (w, v)));
        }
        true
    }

    /// All clusters of size at least two, ordered by edge id then side.
    pub fn clusters(&self) -> Vec<Cluster> {
        let mut out = Vec::new();
        for (e, &[u, v]) in self.edges.iter().enumerate() {
            for (root, from) in [(u, v), (v, u)] {
                if self.is_leaf(root) {
                    continue;
                }
                if self.is_rooted_caterpillar(root, from) {
                    out.push(Cluster {
                        edge: e,
                        root,
                        leaves: self.side_leaves(e, root),
                    });
                }
            }
        }
        out
    }

    pub fn k_clusters(&self, k: usize) -> Vec<Cluster> {
        let mut c: Vec<Cluster> = self
            .clusters()
            .into_iter()
            .filter(|c| c.leaves.len() == k)
            .collect();
        c.sort_by(|a, b| a.leaves.cmp(&b.leaves));
        c
    }

    /// `c_k`, the number of `k`-clusters.
    pub fn cluster_count(&self, k: usize) -> usize {
        self.clusters().iter().filter(|c| c.leaves.len() == k).count()
    }

    /// Pairs whose smallest enclosing cluster has exactly `k` leaves.
    pub fn cluster_variables(&self, k: usize) -> Vec<(Label, Label)> {
        let clusters = self.clusters();
        pairs(self.n)
            .filter(|&(i, j)| {
                clusters
                    .iter()
                    .filter(|c| c.leaves.binary_search(&i).is_ok() && c.leaves.binary_search(&j).is_ok())
                    .map(|c| c.leaves.len())
                    .min()
                    == Some(k)
            })
            .collect()
    }

    /// Induced subtree on `keep` with degree-two vertices suppressed. Kept
    /// leaves are relabelled `1..=|keep|` in increasing order.
    pub fn restrict(&self, keep: &[Label]) -> Result<Restriction, TreeError> {
        let mut labels: Vec<Label> = keep.to_vec();
        labels.sort_unstable();
        for w in labels.windows(2) {
            if w[0] == w[1] {
                return Err(TreeError::RepeatedLeaf(w[0]));
            }
        }
        for &l in &labels {
            self.check_leaf(l)?;
        }
        let m = labels.len();
        if m < 3 {
            return Err(TreeError::RestrictionTooSmall(m));
        }
        let root = labels[0] - 1;
        let (parent, _) = self.bfs_parents(root);
        let mut marked = vec![false; self.edge_count()];
        for &l in &labels[1..] {
            let mut v = l - 1;
            while v != root {
                let (p, e) = parent[v].expect("connected");
                if marked[e] {
                    break;
                }
                marked[e] = true;
                v = p;
            }
        }
        let degree = |v: usize| self.adjacency[v].iter().filter(|&&(_, e)| marked[e]).count();
        let mut new_id = vec![usize::MAX; self.vertex_count()];
        for (idx, &l) in labels.iter().enumerate() {
            new_id[l - 1] = idx;
        }
        let mut next = m;
        for v in self.n..self.vertex_count() {
            if degree(v) == 3 {
                new_id[v] = next;
                next += 1;
            }
        }
        let mut used = vec![false; self.edge_count()];
        let mut edges = Vec::new();
        let mut edge_map = Vec::new();
        for e in 0..self.edge_count() {
            if !marked[e] || used[e] {
                continue;
            }
            // Walk both directions from e through degree-two vertices.
            let mut ends = [0usize; 2];
            let mut halves: [Vec<EdgeId>; 2] = [Vec::new(), Vec::new()];
            for (side, start) in self.edges[e].iter().enumerate() {
                let mut v = *start;
                let mut came = e;
                while new_id[v] == usize::MAX {
                    let &(w, f) = self.adjacency[v]
                        .iter()
                        .find(|&&(_, f)| marked[f] && f != came)
                        .expect("degree two vertex continues");
                    halves[side].push(f);
                    came = f;
                    v = w;
                }
                ends[side] = v;
            }
            let mut path: Vec<EdgeId> = halves[0].iter().rev().copied().collect();
            path.push(e);
            path.extend(halves[1].iter().copied());
            for &f in &path {
                used[f] = true;
            }
            edges.push([new_id[ends[0]], new_id[ends[1]]]);
            edge_map.push(path);
        }
        let tree = PhyloTree::from_edges(m, edges)?;
        Ok(Restriction {
            tree,
            leaf_map: labels,
            edge_map,
        })
    }

    /// Subdivides edge `e` and hangs a new leaf from the midpoint. Leaves
    /// labelled `>= new_label` shift up by one. Edge ids other than `e` are
    /// kept; `e` becomes `e_a`, and `e_b` and the pendant edge are appended.
    pub fn attach_leaf(&self, e: EdgeId, new_label: Label) -> Result<(PhyloTree, Attachment), TreeError> {
        self.check_edge(e)?;
        let n = self.n;
        if new_label == 0 || new_label > n + 1 {
            return Err(TreeError::InvalidLeaf(new_label));
        }
        let map = |v: usize| {
            if v < n {
                if v + 1 >= new_label {
                    v + 1
                } else {
                    v
                }
            } else {
                v + 1
            }
        };
        let middle = 2 * (n + 1) - 3;
        let leaf = new_label - 1;
        let mut edges: Vec<[usize; 2]> = self.edges.iter().map(|&[u, v]| [map(u), map(v)]).collect();
        let [x, y] = edges[e];
        edges[e] = [x, middle];
        edges.push([middle, y]);
        edges.push([middle, leaf]);
        let tree = PhyloTree::from_edges(n + 1, edges)?;
        let attachment = Attachment {
            removed: e,
            e_a: e,
            e_b: 2 * n - 3,
            pendant: 2 * n - 2,
            new_leaf: new_label,
        };
        Ok((tree, attachment))
    }

    pub fn alpha_vector(&self, i: Label, j: Label) -> Result<ExponentVector, TreeError> {
        if i == j {
            return Err(TreeError::RepeatedLeaf(i));
        }
        let path = self.path(i, j)?;
        let mut entries = vec![0u8; self.edge_count()];
        for e in path {
            entries[e] = 1;
        }
        Ok(ExponentVector {
            pair: (i.min(j), i.max(j)),
            entries,
        })
    }

    /// `A(T)`: one row per leaf pair (in [`pair_index`] order), one column
    /// per edge.
    pub fn incidence_matrix(&self) -> RationalMatrix {
        let table = self.path_table();
        let mut m = RationalMatrix::zeros(pair_count(self.n), self.edge_count());
        for (row, (_, path)) in table.iter().enumerate() {
            for &e in path {
                m.set(row, e, BigRational::one());
            }
        }
        m
    }

    /// `ω_ij = d(i, j)`, the path length under `lengths`.
    pub fn tree_metric_weights(&self, lengths: &EdgeLengths) -> Result<WeightVector, TreeError> {
        if lengths.0.len() != self.edge_count() {
            return Err(TreeError::LengthCount {
                expected: self.edge_count(),
                found: lengths.0.len(),
            });
        }
        let table = self.path_table();
        let values = table
            .iter()
            .map(|(_, path)| rational::dot_with_support(&lengths.0, path))
            .collect();
        Ok(WeightVector { n: self.n, values })
    }

    /// Unrooted Newick text, rooted for printing at the neighbour of leaf 1,
    /// children ordered by smallest label.
    pub fn to_newick(&self) -> String {
        let order = self.circular_order();
        let rank: BTreeMap<Label, usize> = order.iter().enumerate().map(|(r, &l)| (l, r)).collect();
        let center = self.adjacency[0][0].0;
        let mut out = String::new();
        self.write_newick(center, usize::MAX, &rank, &mut out);
        out.push(';');
        out
    }

    fn min_rank(&self, v: usize, from: usize, rank: &BTreeMap<Label, usize>) -> usize {
        if let Some(l) = self.leaf_label(v) {
            return rank[&l];
        }
        self.adjacency[v]
            .iter()
            .filter(|&&(w, _)| w != from)
            .map(|&(w, _)| self.min_rank(w, v, rank))
            .min()
            .unwrap_or(usize::MAX)
    }

    fn write_newick(&self, v: usize, from: usize, rank: &BTreeMap<Label, usize>, out: &mut String) {
        if let Some(l) = self.leaf_label(v) {
            out.push_str(&l.to_string());
            return;
        }
        let mut children: Vec<usize> = self.adjacency[v]
            .iter()
            .map(|&(w, _)| w)
            .filter(|&w| w != from)
            .collect();
        children.sort_by_key(|&w| self.min_rank(w, v, rank));
        out.push('(');
        for (idx, w) in children.into_iter().enumerate() {
            if idx > 0 {
                out.push(',');
            }
            self.write_newick(w, v, rank, out);
        }
        out.push(')');
    }

    /// Same topology with the same leaf labels, ignoring vertex and edge ids.
    pub fn same_topology(&self, other: &PhyloTree) -> bool {
        if self.n != other.n {
            return false;
        }
        let a: BTreeSet<Vec<Label>> = self.split_keys().into_iter().collect();
        let b: BTreeSet<Vec<Label>> = other.split_keys().into_iter().collect();
        a == b
    }

    /// For each edge of `self`, the edge of `other` inducing the same split.
    /// `None` if the trees differ.
    pub fn edge_correspondence(&self, other: &PhyloTree) -> Option<Vec<EdgeId>> {
        if self.n != other.n {
            return None;
        }
        let theirs: BTreeMap<Vec<Label>, EdgeId> = other
            .split_keys()
            .into_iter()
            .enumerate()
            .map(|(e, k)| (k, e))
            .collect();
        self.split_keys()
            .into_iter()
            .map(|k| theirs.get(&k).copied())
            .collect()
    }

    pub fn to_json(&self) -> TreeJson {
        TreeJson {
            n: self.n,
            edges: self
                .edges
                .iter()
                .enumerate()
                .map(|(id, &[u, v])| [u + 1, v + 1, id])
                .collect(),
            leaf_order: self.circular_order(),
        }
    }

    pub fn from_json(json: &TreeJson) -> Result<Self, TreeError> {
        let mut edges = vec![None; json.edges.len()];
        for &[u, v, id] in &json.edges {
            if u == 0 || v == 0 {
                return Err(TreeError::Malformed("vertex ids start at 1".into()));
            }
            let slot = edges
                .get_mut(id)
                .ok_or_else(|| TreeError::Malformed(format!("edge id {id} out of range")))?;
            if slot.replace([u - 1, v - 1]).is_some() {
                return Err(TreeError::Malformed(format!("edge id {id} repeated")));
            }
        }
        let edges = edges
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| TreeError::Malformed("missing edge id".into()))?;
        PhyloTree::from_edges(json.n, edges)
    }
}

/// JSON dump `{n, edges: [[u, v, id]], leafOrder}`. Vertex ids are 1-based;
/// `1..=n` are the leaves carrying those labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeJson {
    pub n: usize,
    pub edges: Vec<[usize; 3]>,
    #[serde(rename = "leafOrder")]
    pub leaf_order: Vec<Label>,
}

/// A tree whose labels run `1..=n` clockwise around a circle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircularEmbedding {
    tree: PhyloTree,
    relabeling: Vec<Label>,
}

impl CircularEmbedding {
    /// Accepts a tree that is already circularly labelled.
    pub fn from_circular(tree: PhyloTree) -> Result<Self, TreeError> {
        if !tree.is_circular() {
            return Err(TreeError::NotCircular);
        }
        let relabeling = (1..=tree.leaf_count()).collect();
        Ok(CircularEmbedding { tree, relabeling })
    }

    pub fn tree(&self) -> &PhyloTree {
        &self.tree
    }

    pub fn into_tree(self) -> PhyloTree {
        self.tree
    }

    /// `relabeling()[old - 1]` is the clockwise position of the input leaf.
    pub fn relabeling(&self) -> &[Label] {
        &self.relabeling
    }

    pub fn quartet(&self, i: Label, j: Label, k: Label, l: Label) -> Result<Quartet, TreeError> {
        self.tree.quartet(i, j, k, l)
    }
}

/// Relabels leaves so that a depth-first planar traversal visits them in
/// order `1, 2, ..., n`.
pub fn circular_embed(tree: &PhyloTree) -> CircularEmbedding {
    let order = tree.circular_order();
    let mut relabeling = vec![0; tree.leaf_count()];
    for (pos, &old) in order.iter().enumerate() {
        relabeling[old - 1] = pos + 1;
    }
    let relabelled = tree.relabel(&relabeling).expect("order is a permutation");
    debug_assert!(relabelled.is_circular());
    CircularEmbedding {
        tree: relabelled,
        relabeling,
    }
}
