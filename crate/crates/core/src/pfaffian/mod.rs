//! Pfaffians of the generic skew-symmetric matrix and their initial forms
//! under tree-metric weights.

use std::collections::BTreeSet;

use itertools::Itertools;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use thiserror::Error;

use crate::poly::{Monomial, PluckerVar, PolyError, SparsePoly};
use crate::tree::{EdgeLengths, Label, PhyloTree, TreeError, WeightVector};

mod witness;

pub use witness::{linear_occurrence_witness, LinearOccurrenceWitness, WitnessCase, WitnessSwap};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PfaffianError {
    #[error("index set has odd size {0}")]
    OddSet(usize),
    #[error("index set of size {0} is too small")]
    TooSmall(usize),
    #[error("label {0} repeated in index set")]
    DuplicateLabel(Label),
    #[error("no weight for {0}")]
    MissingWeight(PluckerVar),
    #[error("witness hypotheses fail: {0}")]
    Hypothesis(String),
    #[error("witness check failed: {0}")]
    Check(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// A perfect matching of an even label set, pairs stored `(a, b)` with
/// `a < b` and sorted by first element.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PerfectMatching {
    pairs: Vec<(Label, Label)>,
}

impl PerfectMatching {
    pub fn new(pairs: Vec<(Label, Label)>) -> Result<Self, PfaffianError> {
        let mut pairs: Vec<(Label, Label)> = pairs.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        pairs.sort_unstable();
        let mut seen = BTreeSet::new();
        for &(a, b) in &pairs {
            for x in [a, b] {
                if !seen.insert(x) {
                    return Err(PfaffianError::DuplicateLabel(x));
                }
            }
        }
        Ok(PerfectMatching { pairs })
    }

    pub fn pairs(&self) -> &[(Label, Label)] {
        &self.pairs
    }

    /// Number of pairs `(a, b), (c, d)` with `a < c < b < d`.
    pub fn crossings(&self) -> usize {
        self.pairs
            .iter()
            .tuple_combinations()
            .filter(|(&(a, b), &(c, d))| (a < c && c < b && b < d) || (c < a && a < d && d < b))
            .count()
    }

    pub fn monomial(&self) -> Monomial {
        Monomial::new(
            self.sign(),
            self.pairs
                .iter()
                .map(|&(a, b)| PluckerVar::new(a, b).expect("matched labels differ"))
                .collect(),
        )
    }

    pub fn sign(&self) -> i64 {
        matching_sign(self)
    }
}

/// `(-1)^crossings`.
pub fn matching_sign(m: &PerfectMatching) -> i64 {
    if m.crossings().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

fn sorted_index_set(k: &[Label]) -> Result<Vec<Label>, PfaffianError> {
    let mut s = k.to_vec();
    s.sort_unstable();
    if let Some(w) = s.windows(2).find(|w| w[0] == w[1]) {
        return Err(PfaffianError::DuplicateLabel(w[0]));
    }
    if s.len() % 2 == 1 {
        return Err(PfaffianError::OddSet(s.len()));
    }
    Ok(s)
}

fn matchings_of(rest: &[Label], acc: &mut Vec<(Label, Label)>, out: &mut Vec<PerfectMatching>) {
    let Some((&first, tail)) = rest.split_first() else {
        out.push(PerfectMatching { pairs: acc.clone() });
        return;
    };
    for idx in 0..tail.len() {
        let mut remaining = tail.to_vec();
        let partner = remaining.remove(idx);
        acc.push((first, partner));
        matchings_of(&remaining, acc, out);
        acc.pop();
    }
}

/// All `(|K| - 1)!!` perfect matchings; the first element is matched with
/// each later one in turn, recursively.
pub fn perfect_matchings(k: &[Label]) -> Result<Vec<PerfectMatching>, PfaffianError> {
    let s = sorted_index_set(k)?;
    if s.is_empty() {
        return Err(PfaffianError::TooSmall(0));
    }
    let mut out = Vec::new();
    matchings_of(&s, &mut Vec::new(), &mut out);
    Ok(out)
}

/// Pfaffian of the principal submatrix on `k` of the generic skew matrix.
pub fn pfaffian_polynomial(k: &[Label]) -> Result<SparsePoly, PfaffianError> {
    let s = sorted_index_set(k)?;
    if s.len() < 4 {
        return Err(PfaffianError::TooSmall(s.len()));
    }
    Ok(SparsePoly::from_terms(
        perfect_matchings(&s)?.iter().map(PerfectMatching::monomial),
    ))
}

/// The three-term relation `p_ij p_kl - p_ik p_jl + p_il p_jk`.
pub fn plucker_quadric(i: Label, j: Label, k: Label, l: Label) -> Result<SparsePoly, PfaffianError> {
    pfaffian_polynomial(&[i, j, k, l])
}

/// Pairs position `a` with position `a + r` in the sorted `2r`-set.
pub fn crossing_monomial(k: &[Label]) -> Result<Monomial, PfaffianError> {
    let s = sorted_index_set(k)?;
    if s.is_empty() {
        return Err(PfaffianError::TooSmall(0));
    }
    let r = s.len() / 2;
    Ok(Monomial::unit(
        (0..r)
            .map(|a| PluckerVar::new(s[a], s[a + r]).expect("distinct labels"))
            .collect(),
    ))
}

pub fn omega_weight(m: &Monomial, omega: &WeightVector) -> Result<BigRational, PfaffianError> {
    m.vars().iter().try_fold(BigRational::zero(), |acc, v| {
        omega
            .get(v.i(), v.j())
            .map(|w| acc + w)
            .ok_or(PfaffianError::MissingWeight(*v))
    })
}

/// Terms of maximal `ω`-weight.
pub fn initial_form(poly: &SparsePoly, omega: &WeightVector) -> Result<SparsePoly, PfaffianError> {
    let weighted = poly
        .terms()
        .map(|m| omega_weight(&m, omega).map(|w| (w, m)))
        .collect::<Result<Vec<_>, _>>()?;
    let Some(top) = weighted.iter().map(|(w, _)| w).max().cloned() else {
        return Ok(SparsePoly::zero());
    };
    Ok(SparsePoly::from_terms(
        weighted.into_iter().filter(|(w, _)| *w == top).map(|(_, m)| m),
    ))
}

/// Weights from the default generic edge lengths of `tree`.
pub fn generic_weights(tree: &PhyloTree) -> WeightVector {
    tree.tree_metric_weights(&EdgeLengths::generic(tree.edge_count()))
        .expect("one length per edge")
}

/// One binomial `p_xz p_yw - p_xw p_yz` per four-subset with quartet `xy|zw`,
/// in lexicographic order of the subsets.
pub fn jt_generators(tree: &PhyloTree) -> Vec<SparsePoly> {
    (1..=tree.leaf_count())
        .combinations(4)
        .map(|s| {
            let q = tree.quartet(s[0], s[1], s[2], s[3]).expect("valid labels");
            let ((x, y), (z, w)) = (q.left, q.right);
            let var = |a, b| PluckerVar::new(a, b).expect("distinct labels");
            SparsePoly::from_terms([
                Monomial::new(1, vec![var(x, z), var(y, w)]),
                Monomial::new(-1, vec![var(x, w), var(y, z)]),
            ])
        })
        .collect()
}

/// Initial forms of the `2(s+1)`-Pfaffians of `tree` under `omega`, one per
/// subset in lexicographic order. Empty when `n < 2(s+1)`.
pub fn initial_pfaffian_generators(
    tree: &PhyloTree,
    s: usize,
    omega: &WeightVector,
) -> Result<Vec<SparsePoly>, PfaffianError> {
    let size = 2 * (s + 1);
    let subsets: Vec<Vec<Label>> = (1..=tree.leaf_count()).combinations(size).collect();
    subsets
        .par_iter()
        .map(|k| initial_form(&pfaffian_polynomial(k)?, omega))
        .collect()
}

/// Products `p_ij p_kl` over incomparable pairs of the poset `p_ij <= p_kl`
/// iff `i <= k` and `j <= l`.
pub fn incomparable_pair_ideal(n: usize) -> Vec<Monomial> {
    let vars: Vec<PluckerVar> = (1..=n)
        .tuple_combinations()
        .map(|(i, j)| PluckerVar::new(i, j).expect("i < j"))
        .collect();
    let leq = |a: &PluckerVar, b: &PluckerVar| a.i() <= b.i() && a.j() <= b.j();
    vars.iter()
        .tuple_combinations()
        .filter(|(a, b)| !leq(a, b) && !leq(b, a))
        .map(|(a, b)| Monomial::unit(vec![*a, *b]))
        .collect()
}
