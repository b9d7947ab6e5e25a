//! Exhaustive and random tree generation.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{circular_embed, Label, PhyloTree};

#[derive(Clone)]
enum Planar {
    Leaf(Label),
    Node(Box<Planar>, Box<Planar>),
}

fn planar_trees(lo: Label, hi: Label) -> Vec<Planar> {
    if lo == hi {
        return vec![Planar::Leaf(lo)];
    }
    let mut out = Vec::new();
    for mid in lo..hi {
        for left in planar_trees(lo, mid) {
            for right in planar_trees(mid + 1, hi) {
                out.push(Planar::Node(Box::new(left.clone()), Box::new(right)));
            }
        }
    }
    out
}

impl Planar {
    /// Emits edges below `self`; returns the vertex id of `self`.
    fn emit(&self, next: &mut usize, edges: &mut Vec<[usize; 2]>) -> usize {
        match self {
            Planar::Leaf(l) => l - 1,
            Planar::Node(a, b) => {
                let v = *next;
                *next += 1;
                let x = a.emit(next, edges);
                let y = b.emit(next, edges);
                edges.push([v, x]);
                edges.push([v, y]);
                v
            }
        }
    }
}

/// Every binary tree whose leaves `1..=n` are in circular order, one per
/// triangulation of the `n`-gon (Catalan number `C(n-2)` of them).
pub fn circular_trees(n: usize) -> Vec<PhyloTree> {
    assert!(n >= 3, "need at least three leaves");
    planar_trees(1, n - 1)
        .into_iter()
        .map(|shape| {
            let mut next = n;
            let mut edges = Vec::new();
            let root = shape.emit(&mut next, &mut edges);
            edges.push([root, n - 1]);
            PhyloTree::from_edges(n, edges).expect("planar construction is binary")
        })
        .collect()
}

fn encode(tree: &PhyloTree, v: usize, from: usize) -> String {
    if tree.is_leaf(v) {
        return "L".to_string();
    }
    let mut parts: Vec<String> = tree
        .neighbors(v)
        .iter()
        .filter(|&&(w, _)| w != from)
        .map(|&(w, _)| encode(tree, w, v))
        .collect();
    parts.sort();
    format!("({})", parts.concat())
}

/// Isomorphism-invariant string for the unlabelled shape, rooted at the
/// tree centre.
pub(crate) fn shape_key(tree: &PhyloTree) -> String {
    let vcount = tree.vertex_count();
    let mut degree: Vec<usize> = (0..vcount).map(|v| tree.neighbors(v).len()).collect();
    let mut alive = vcount;
    let mut layer: Vec<usize> = (0..vcount).filter(|&v| degree[v] == 1).collect();
    let mut removed = vec![false; vcount];
    while alive > 2 {
        let mut next = Vec::new();
        for &v in &layer {
            removed[v] = true;
            alive -= 1;
            for &(w, _) in tree.neighbors(v) {
                if !removed[w] {
                    degree[w] -= 1;
                    if degree[w] == 1 {
                        next.push(w);
                    }
                }
            }
        }
        layer = next;
    }
    let centers: Vec<usize> = (0..vcount).filter(|&v| !removed[v]).collect();
    match centers.as_slice() {
        [c] => encode(tree, *c, usize::MAX),
        [a, b] => {
            let mut parts = [encode(tree, *a, *b), encode(tree, *b, *a)];
            parts.sort();
            format!("E{}{}", parts[0], parts[1])
        }
        _ => unreachable!("a tree has one or two centres"),
    }
}

/// One circularly embedded representative of every unlabelled binary tree
/// shape on `n` leaves, sorted by shape key.
pub fn tree_shapes(n: usize) -> Vec<PhyloTree> {
    assert!(n >= 3, "need at least three leaves");
    let mut current = vec![PhyloTree::star()];
    for m in 3..n {
        let mut found: BTreeMap<String, PhyloTree> = BTreeMap::new();
        for t in &current {
            for e in 0..t.edge_count() {
                let (bigger, _) = t.attach_leaf(e, m + 1).expect("edge in range");
                found.entry(shape_key(&bigger)).or_insert(bigger);
            }
        }
        current = found.into_values().collect();
    }
    let mut keyed: Vec<(String, PhyloTree)> = current
        .into_iter()
        .map(|t| (shape_key(&t), circular_embed(&t).into_tree()))
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed.into_iter().map(|(_, t)| t).collect()
}

/// Uniform over attachment sequences, then labels shuffled.
pub fn random_tree<R: Rng + ?Sized>(n: usize, rng: &mut R) -> PhyloTree {
    assert!(n >= 3, "need at least three leaves");
    let mut t = PhyloTree::star();
    for m in 3..n {
        let e = rng.gen_range(0..t.edge_count());
        t = t.attach_leaf(e, m + 1).expect("edge in range").0;
    }
    let mut labels: Vec<Label> = (1..=n).collect();
    labels.shuffle(rng);
    t.relabel(&labels).expect("permutation")
}
