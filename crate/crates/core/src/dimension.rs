//! Dimension counts for secants of Plücker tree varieties.
//!
//! All dimensions are affine cone dimensions. The upper bounds come from
//! cherries and clusters; the Jacobian of the parametrization at random
//! points over a prime field gives a lower bound that is exact with high
//! probability.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{is_prime_u64, mul_mod, ModMatrix};
use crate::tree::{pair_count, PhyloTree};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DimensionError {
    #[error("{0} is not prime")]
    Composite(u64),
    #[error("modulus {0} must exceed 2^31")]
    PrimeTooSmall(u64),
    #[error("at least one trial is needed")]
    NoTrials,
    #[error("secant order must be at least {min}, got {r}")]
    OrderTooSmall { r: usize, min: usize },
}

/// `2rn - 2r^2 - r` when `n >= 2r`; below that the secant fills the
/// ambient space of dimension `n choose 2`.
pub fn expected_secant_dim(n: usize, r: usize) -> usize {
    if n >= 2 * r {
        2 * r * n - 2 * r * r - r
    } else {
        pair_count(n)
    }
}

/// `2rn - 3r - (r - 1) c_2`.
pub fn cherry_bound(tree: &PhyloTree, r: usize) -> i64 {
    let (n, r) = (tree.leaf_count() as i64, r as i64);
    2 * r * n - 3 * r - (r - 1) * tree.cluster_count(2) as i64
}

/// `2rn - 3r - sum_{k=2}^{r} (r - k + 1) c_k`.
pub fn cluster_bound(tree: &PhyloTree, r: usize) -> i64 {
    let n = tree.leaf_count() as i64;
    let ri = r as i64;
    2 * ri * n - 3 * ri - cluster_sum(tree, r) as i64
}

/// `sum_{k=2}^{r} (r - k + 1) c_k`.
pub fn cluster_sum(tree: &PhyloTree, r: usize) -> usize {
    let counts = cluster_counts(tree);
    (2..=r).map(|k| (r - k + 1) * counts.get(&k).copied().unwrap_or(0)).sum()
}

/// `k -> c_k` for every cluster size present.
pub fn cluster_counts(tree: &PhyloTree) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for c in tree.clusters() {
        *out.entry(c.leaves.len()).or_insert(0) += 1;
    }
    out
}

fn check_prime(prime: u64) -> Result<(), DimensionError> {
    if prime <= 1 << 31 {
        return Err(DimensionError::PrimeTooSmall(prime));
    }
    if !is_prime_u64(prime) {
        return Err(DimensionError::Composite(prime));
    }
    Ok(())
}

/// Rank of the Jacobian of `p_ij = sum_s prod_{e in path(i,j)} y_e^(s)` at
/// one point; columns are grouped by copy `s`.
fn jacobian_rank_at(tree: &PhyloTree, r: usize, prime: u64, point: &[Vec<u64>]) -> usize {
    let edges = tree.edge_count();
    let table = tree.path_table();
    let mut m = ModMatrix::zeros(prime, pair_count(tree.leaf_count()), r * edges).expect("checked prime");
    for (row, (_, path)) in table.iter().enumerate() {
        for (s, y) in point.iter().enumerate() {
            // prefix[i] * suffix[i + 1] is the product without path[i].
            let mut prefix = vec![1u64; path.len() + 1];
            for (i, &e) in path.iter().enumerate() {
                prefix[i + 1] = mul_mod(prefix[i], y[e], prime);
            }
            let mut suffix = 1u64;
            for (i, &e) in path.iter().enumerate().rev() {
                m.set(row, s * edges + e, mul_mod(prefix[i], suffix, prime));
                suffix = mul_mod(suffix, y[e], prime);
            }
        }
    }
    m.rank()
}

/// Per-trial Jacobian ranks and their maximum.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JacobianEstimate {
    pub rank: usize,
    pub trial_ranks: Vec<usize>,
}

/// Maximum Jacobian rank over `trials` uniformly random nonzero points.
pub fn jacobian_secant_dim(
    tree: &PhyloTree,
    r: usize,
    prime: u64,
    seed: u64,
    trials: usize,
) -> Result<JacobianEstimate, DimensionError> {
    check_prime(prime)?;
    if trials == 0 {
        return Err(DimensionError::NoTrials);
    }
    if r == 0 {
        return Err(DimensionError::OrderTooSmall { r, min: 1 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trial_ranks: Vec<usize> = (0..trials)
        .map(|_| {
            let point: Vec<Vec<u64>> = (0..r)
                .map(|_| (0..tree.edge_count()).map(|_| rng.gen_range(1..prime)).collect())
                .collect();
            jacobian_rank_at(tree, r, prime, &point)
        })
        .collect();
    Ok(JacobianEstimate {
        rank: trial_ranks.iter().copied().max().unwrap_or(0),
        trial_ranks,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// The Jacobian rank reaches the expected dimension.
    Equal,
    /// A cherry or cluster bound falls below the expected dimension.
    StrictlySmaller,
    /// The Jacobian rank falls short but no bound proves it.
    Undetermined,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Equal => "equal",
            Verdict::StrictlySmaller => "strictly-smaller",
            Verdict::Undetermined => "undetermined",
        }
    }
}

/// `Equal` when the Jacobian rank meets `expected` (it cannot exceed it);
/// `StrictlySmaller` when either combinatorial bound is below `expected`;
/// otherwise `Undetermined`.
pub fn equality_verdict(jacobian: usize, expected: usize, cherry: i64, cluster: i64) -> Verdict {
    if cherry.min(cluster) < expected as i64 {
        Verdict::StrictlySmaller
    } else if jacobian >= expected {
        Verdict::Equal
    } else {
        Verdict::Undetermined
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DimensionReport {
    pub newick: String,
    pub n: usize,
    pub r: usize,
    pub cluster_counts: BTreeMap<usize, usize>,
    pub expected_pfaffian_dim: usize,
    pub cherry_bound: i64,
    pub cluster_bound: i64,
    pub jacobian_dim: usize,
    pub trial_ranks: Vec<usize>,
    pub prime: u64,
    pub seed: u64,
    pub trials: usize,
    pub equality_verdict: Verdict,
    pub conjecture: ConjectureEvaluation,
}

pub fn dimension_report(
    tree: &PhyloTree,
    r: usize,
    prime: u64,
    seed: u64,
    trials: usize,
) -> Result<DimensionReport, DimensionError> {
    let n = tree.leaf_count();
    let jac = jacobian_secant_dim(tree, r, prime, seed, trials)?;
    let expected = expected_secant_dim(n, r);
    let cherry = cherry_bound(tree, r);
    let cluster = cluster_bound(tree, r);
    Ok(DimensionReport {
        newick: tree.to_newick(),
        n,
        r,
        cluster_counts: cluster_counts(tree),
        expected_pfaffian_dim: expected,
        cherry_bound: cherry,
        cluster_bound: cluster,
        jacobian_dim: jac.rank,
        trial_ranks: jac.trial_ranks,
        prime,
        seed,
        trials,
        equality_verdict: equality_verdict(jac.rank, expected, cherry, cluster),
        conjecture: conjecture_predicate(tree, r),
    })
}

/// A `(2r + 1)`-leaf caterpillar with a cherry hung on every leaf: `4r + 2`
/// leaves and `2r + 1` cherries. For `r >= 2` its cherry bound is below the
/// expected dimension.
pub fn counterexample_tree(r: usize) -> PhyloTree {
    let m = 2 * r + 1;
    let mut t = PhyloTree::star();
    for next in 4..=m {
        // Growing on the pendant edge of the newest leaf keeps a caterpillar.
        let e = t.pendant_edge(next - 1);
        t = t.attach_leaf(e, next).expect("edge in range").0;
    }
    for leaf in 1..=m {
        let e = t.pendant_edge(leaf);
        let label = t.leaf_count() + 1;
        t = t.attach_leaf(e, label).expect("edge in range").0;
    }
    crate::tree::circular_embed(&t).into_tree()
}

/// `sum_{k=2}^{r} (r - k + 1) c_k` against `2r^2 - 2r`, strictly and not.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConjectureEvaluation {
    pub sum: usize,
    pub threshold: usize,
    pub strict: bool,
    pub non_strict: bool,
}

pub fn conjecture_predicate(tree: &PhyloTree, r: usize) -> ConjectureEvaluation {
    let sum = cluster_sum(tree, r);
    let threshold = 2 * r * r - 2 * r;
    ConjectureEvaluation {
        sum,
        threshold,
        strict: sum < threshold,
        non_strict: sum <= threshold,
    }
}
