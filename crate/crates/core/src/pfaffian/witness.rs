//! A Pfaffian whose initial form contains `p_{j,n+1}` to the first power.
//!
//! The tree is relabelled around a well-chosen split so that, starting from
//! the crossing monomial of the Pfaffian on `{1, ..., 2r, j, n+1}`, one or
//! two quartet exchanges of equal weight reach a monomial divisible by
//! `p_{j,n+1}`.

use num_rational::BigRational;

use super::{crossing_monomial, generic_weights, initial_form, omega_weight, pfaffian_polynomial, PfaffianError};
use crate::poly::{Monomial, PluckerVar, SparsePoly};
use crate::tree::{EdgeId, EdgeLengths, Label, PhyloTree, Quartet};

/// Which labelling produced the witness.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WitnessCase {
    /// Some split has a side with exactly `r + 1` leaves.
    SplitOfSizeRPlusOne,
    /// The smallest side with `r + 1 < |A| <= 2r`; the larger child of its
    /// root carries labels `n+1, 1, ..., k`.
    MinimalSplit { size: usize, k: usize },
}

impl WitnessCase {
    pub fn number(&self) -> u8 {
        match self {
            WitnessCase::SplitOfSizeRPlusOne => 1,
            WitnessCase::MinimalSplit { .. } => 2,
        }
    }
}

/// One exchange `from -> to` justified by a quartet whose split pairing is
/// neither side of the exchange.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessSwap {
    pub from: [PluckerVar; 2],
    pub to: [PluckerVar; 2],
    pub quartet: Quartet,
}

#[derive(Clone, Debug)]
pub struct LinearOccurrenceWitness {
    /// Input tree after relabelling.
    pub tree: PhyloTree,
    /// `relabeling[old - 1]` is the new label of input leaf `old`.
    pub relabeling: Vec<Label>,
    pub case: WitnessCase,
    pub split_edge: EdgeId,
    pub r: usize,
    pub j: Label,
    pub index_set: Vec<Label>,
    /// Starts at the crossing monomial; coefficients are the Pfaffian's.
    pub chain: Vec<Monomial>,
    pub swaps: Vec<WitnessSwap>,
    /// Initial form of the Pfaffian under the tree's generic weights.
    pub initial: SparsePoly,
    /// `initial = g * p_{j,n+1} + h`.
    pub g: SparsePoly,
    pub h: SparsePoly,
}

impl LinearOccurrenceWitness {
    pub fn target(&self) -> PluckerVar {
        var(self.j, self.tree.leaf_count())
    }

    /// Weights of the chain monomials under the given lengths on the
    /// relabelled tree.
    pub fn chain_weights(&self, lengths: &EdgeLengths) -> Result<Vec<BigRational>, PfaffianError> {
        let omega = self.tree.tree_metric_weights(lengths)?;
        self.chain.iter().map(|m| omega_weight(m, &omega)).collect()
    }
}

fn var(a: Label, b: Label) -> PluckerVar {
    PluckerVar::new(a, b).expect("distinct labels")
}

/// Leaf vertices below `v` (away from `from`) in depth-first order.
fn dfs_leaves(tree: &PhyloTree, v: usize, from: usize, out: &mut Vec<usize>) {
    if tree.is_leaf(v) {
        out.push(v);
        return;
    }
    for &(w, _) in tree.neighbors(v) {
        if w != from {
            dfs_leaves(tree, w, v, out);
        }
    }
}

/// Picks the labelling split. Sides are tried in edge order, `u` side
/// first.
fn choose_split(tree: &PhyloTree, r: usize) -> Option<(EdgeId, usize, usize, usize)> {
    let mut best: Option<(usize, EdgeId, usize, usize)> = None;
    for (e, &[u, v]) in tree.edges().iter().enumerate() {
        for (inside, outside) in [(u, v), (v, u)] {
            let size = tree.side_leaves(e, inside).len();
            if size == r + 1 {
                return Some((e, inside, outside, size));
            }
            if size > r + 1 && size <= 2 * r && best.is_none_or(|b| size < b.0) {
                best = Some((size, e, inside, outside));
            }
        }
    }
    best.map(|(size, e, inside, outside)| (e, inside, outside, size))
}

fn check_swap(tree: &PhyloTree, swap: &WitnessSwap) -> Result<(), PfaffianError> {
    let [a, b, c, d] = swap.quartet.leaves();
    let actual = tree.quartet(a, b, c, d)?;
    if actual != swap.quartet {
        return Err(PfaffianError::Check(format!(
            "cited quartet {} but the tree induces {}",
            swap.quartet, actual
        )));
    }
    let split_pairing = [
        var(actual.left.0, actual.left.1),
        var(actual.right.0, actual.right.1),
    ];
    for side in [&swap.from, &swap.to] {
        let labels: Vec<Label> = {
            let mut l = vec![side[0].i(), side[0].j(), side[1].i(), side[1].j()];
            l.sort_unstable();
            l
        };
        if labels != [a, b, c, d] {
            return Err(PfaffianError::Check(format!("exchange does not live on {actual}")));
        }
        if side.contains(&split_pairing[0]) {
            return Err(PfaffianError::Check(format!("exchange uses the split pairing of {actual}")));
        }
    }
    Ok(())
}

/// Builds the witness for a tree with `n + 1` leaves, `n >= 2r + 1` and
/// `2r < j <= n`. The labels `1..=2r`, `j` and `n+1` refer to the
/// relabelled tree.
pub fn linear_occurrence_witness(tree: &PhyloTree, r: usize, j: Label) -> Result<LinearOccurrenceWitness, PfaffianError> {
    let big_n = tree.leaf_count();
    let n = big_n - 1;
    if r == 0 || n < 2 * r + 1 {
        return Err(PfaffianError::Hypothesis(format!(
            "need n >= 2r + 1, got n = {n}, r = {r}"
        )));
    }
    if j <= 2 * r || j > n {
        return Err(PfaffianError::Hypothesis(format!("need 2r < j <= n, got j = {j}")));
    }
    let (edge, inside, outside, size) =
        choose_split(tree, r).ok_or_else(|| PfaffianError::Hypothesis("no admissible split".into()))?;

    let mut order = Vec::with_capacity(big_n);
    let case = if size == r + 1 {
        dfs_leaves(tree, inside, outside, &mut order);
        WitnessCase::SplitOfSizeRPlusOne
    } else {
        let mut children: Vec<(usize, Vec<usize>)> = tree
            .neighbors(inside)
            .iter()
            .filter(|&&(w, _)| w != outside)
            .map(|&(w, _)| {
                let mut leaves = Vec::new();
                dfs_leaves(tree, w, inside, &mut leaves);
                (w, leaves)
            })
            .collect();
        children.sort_by_key(|(_, leaves)| std::cmp::Reverse(leaves.len()));
        let k = children[0].1.len() - 1;
        for (_, leaves) in children {
            order.extend(leaves);
        }
        if k >= r {
            return Err(PfaffianError::Check(format!("expected k < r, got k = {k}")));
        }
        WitnessCase::MinimalSplit { size, k }
    };
    dfs_leaves(tree, outside, inside, &mut order);

    let mut relabeling = vec![0; big_n];
    for (pos, &v) in order.iter().enumerate() {
        let old = tree.leaf_label(v).expect("leaf vertex");
        relabeling[old - 1] = if pos == 0 { big_n } else { pos };
    }
    let relabelled = tree.relabel(&relabeling)?;
    if !relabelled.is_circular() {
        return Err(PfaffianError::Check("labelling is not circular".into()));
    }

    let mut index_set: Vec<Label> = (1..=2 * r).collect();
    index_set.push(j);
    index_set.push(big_n);
    let swaps = match case {
        WitnessCase::SplitOfSizeRPlusOne => vec![WitnessSwap {
            from: [var(r, j), var(r + 1, big_n)],
            to: [var(r, r + 1), var(j, big_n)],
            quartet: Quartet::new(r, big_n, r + 1, j),
        }],
        WitnessCase::MinimalSplit { k, .. } => vec![
            WitnessSwap {
                from: [var(k, k + r + 1), var(r + 1, big_n)],
                to: [var(k, r + 1), var(k + r + 1, big_n)],
                quartet: Quartet::new(big_n, k, r + 1, k + r + 1),
            },
            WitnessSwap {
                from: [var(r, j), var(k + r + 1, big_n)],
                to: [var(r, k + r + 1), var(j, big_n)],
                quartet: Quartet::new(r, big_n, j, k + r + 1),
            },
        ],
    };

    let pfaffian = pfaffian_polynomial(&index_set)?;
    let omega = generic_weights(&relabelled);
    let initial = initial_form(&pfaffian, &omega)?;
    let with_coeff = |m: Monomial| Monomial::new(pfaffian.coefficient(m.vars()), m.vars().to_vec());
    let mut chain = vec![with_coeff(crossing_monomial(&index_set)?)];
    for swap in &swaps {
        check_swap(&relabelled, swap)?;
        let next = chain
            .last()
            .expect("chain starts non-empty")
            .exchange(&swap.from, &swap.to)
            .ok_or_else(|| PfaffianError::Check(format!("{} does not divide the current monomial", swap.from[0])))?;
        chain.push(with_coeff(next));
    }
    let weight = omega_weight(&chain[0], &omega)?;
    for m in &chain {
        if !initial.contains_support(m) {
            return Err(PfaffianError::Check(format!("{} is not a term of the initial form", m.compact())));
        }
        if omega_weight(m, &omega)? != weight {
            return Err(PfaffianError::Check(format!("{} has a different weight", m.compact())));
        }
    }
    let target = var(j, big_n);
    let last = chain.last().expect("non-empty chain");
    if last.multiplicity(target) != 1 {
        return Err(PfaffianError::Check(format!("{target} does not divide the last monomial once")));
    }
    let (g, h) = initial.factor_out(target);
    if g.is_zero() || g.variables().iter().any(|v| v.contains(big_n)) {
        return Err(PfaffianError::Check(format!("{target} does not occur linearly")));
    }
    Ok(LinearOccurrenceWitness {
        tree: relabelled,
        relabeling,
        case,
        split_edge: edge,
        r,
        j,
        index_set,
        chain,
        swaps,
        initial,
        g,
        h,
    })
}
