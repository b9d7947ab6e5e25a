//! Lower bounds on the dimension of the second secant of a Plücker tree
//! variety from winning directions.
//!
//! A pair `(v1, v2)` of edge vectors splits the leaf pairs by which copy has
//! the larger path weight. The ranks of the two resulting path-indicator
//! matrices add up to a lower bound on the dimension of the join. Witnesses
//! for small trees come from random search; larger trees are reached by
//! attaching leaves one at a time and solving for the new edge values.

use std::collections::BTreeSet;

use itertools::Itertools;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{support_matrix, RationalMatrix, Solution};
use crate::rational::{self, dot_with_support, pow2_inverse};
use crate::tree::{EdgeId, Label, PathTable, PhyloTree, TreeError, TreeJson};

pub const SCHEMA_VERSION: u32 = 1;

/// Coordinates are drawn from `-COORD_RANGE..=COORD_RANGE`.
pub const COORD_RANGE: i64 = 1000;

const LIFT_ATTEMPTS: usize = 40;

#[derive(Debug, Error)]
pub enum DraismaError {
    #[error("expected vectors of length {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("leaf {0} belongs to a cherry")]
    LeafInCherry(Label),
    #[error("the small tree is not the restriction of the big tree to its first n leaves")]
    NotRestriction,
    #[error("bad choice of side leaves: {0}")]
    BadSideLeaves(String),
    #[error("witness ranks ({rank1}, {rank2}) are below the required {required}")]
    InsufficientRank { rank1: usize, rank2: usize, required: usize },
    #[error("lifting system is not uniquely solvable")]
    SingularSystem,
    #[error("no generic perturbation found after {0} attempts")]
    PerturbationFailed(usize),
    #[error("no base witness for a tree with {cherries} cherries")]
    NoBase { cherries: usize },
    #[error("base tree does not match the stripped tree")]
    BaseMismatch,
    #[error("malformed certificate: {0}")]
    Malformed(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// `(v1, v2)`, both indexed by edge id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessPair {
    pub v1: Vec<BigRational>,
    pub v2: Vec<BigRational>,
}

impl WitnessPair {
    pub fn new(v1: Vec<BigRational>, v2: Vec<BigRational>) -> Result<Self, DraismaError> {
        if v1.len() != v2.len() {
            return Err(DraismaError::LengthMismatch {
                expected: v1.len(),
                found: v2.len(),
            });
        }
        Ok(WitnessPair { v1, v2 })
    }

    pub fn from_integers(v1: &[i64], v2: &[i64]) -> Result<Self, DraismaError> {
        Self::new(
            v1.iter().map(|&x| rational::int(x)).collect(),
            v2.iter().map(|&x| rational::int(x)).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.v1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v1.is_empty()
    }

    pub fn swapped(&self) -> Self {
        WitnessPair {
            v1: self.v2.clone(),
            v2: self.v1.clone(),
        }
    }

    /// Adds `c` to both vectors.
    pub fn translated(&self, c: &[BigRational]) -> Self {
        WitnessPair {
            v1: self.v1.iter().zip(c).map(|(x, y)| x + y).collect(),
            v2: self.v2.iter().zip(c).map(|(x, y)| x + y).collect(),
        }
    }

    fn check(&self, tree: &PhyloTree) -> Result<(), DraismaError> {
        let expected = tree.edge_count();
        for v in [&self.v1, &self.v2] {
            if v.len() != expected {
                return Err(DraismaError::LengthMismatch {
                    expected,
                    found: v.len(),
                });
            }
        }
        Ok(())
    }
}

/// Leaf pairs won by each copy, plus exact ties. Each list is in
/// lexicographic order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WinningSets {
    pub d1: Vec<(Label, Label)>,
    pub d2: Vec<(Label, Label)>,
    pub ties: Vec<(Label, Label)>,
}

impl WinningSets {
    /// `1`, `2`, or `0` for a tie.
    pub fn winner(&self, pair: (Label, Label)) -> u8 {
        if self.d1.binary_search(&pair).is_ok() {
            1
        } else if self.d2.binary_search(&pair).is_ok() {
            2
        } else {
            0
        }
    }
}

pub fn winning_directions(tree: &PhyloTree, w: &WitnessPair) -> Result<WinningSets, DraismaError> {
    w.check(tree)?;
    Ok(sets_from_table(&tree.path_table(), w))
}

fn sets_from_table(table: &PathTable, w: &WitnessPair) -> WinningSets {
    let mut sets = WinningSets::default();
    for (pair, path) in table.iter() {
        let a = dot_with_support(&w.v1, path);
        let b = dot_with_support(&w.v2, path);
        match a.cmp(&b) {
            std::cmp::Ordering::Greater => sets.d1.push(pair),
            std::cmp::Ordering::Less => sets.d2.push(pair),
            std::cmp::Ordering::Equal => sets.ties.push(pair),
        }
    }
    sets
}

fn pair_rank(table: &PathTable, pairs: &[(Label, Label)], cols: usize) -> usize {
    let supports: Vec<&[EdgeId]> = pairs.iter().map(|&(i, j)| table.get(i, j)).collect();
    support_matrix(&supports, cols).rank()
}

/// Exact ranks of the path vectors in `D1` and `D2`.
pub fn winning_ranks(tree: &PhyloTree, sets: &WinningSets) -> (usize, usize) {
    let table = tree.path_table();
    (
        pair_rank(&table, &sets.d1, tree.edge_count()),
        pair_rank(&table, &sets.d2, tree.edge_count()),
    )
}

/// `rank D1 + rank D2`.
pub fn lower_bound(tree: &PhyloTree, w: &WitnessPair) -> Result<usize, DraismaError> {
    let sets = winning_directions(tree, w)?;
    let (a, b) = winning_ranks(tree, &sets);
    Ok(a + b)
}

/// `4n - 10`, twice `2n - 5`.
pub fn expected_bound(n: usize) -> usize {
    4 * n - 10
}

/// A witness with its winning sets and ranks, all recomputable from the
/// tree and the two vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessCertificate {
    pub tree: PhyloTree,
    pub pair: WitnessPair,
    pub sets: WinningSets,
    pub rank1: usize,
    pub rank2: usize,
    pub bound: usize,
    pub seed: u64,
    pub method: String,
    pub iterations: u64,
}

impl WitnessCertificate {
    /// Computes sets and ranks exactly.
    pub fn build(tree: PhyloTree, pair: WitnessPair, seed: u64, method: &str, iterations: u64) -> Result<Self, DraismaError> {
        let sets = winning_directions(&tree, &pair)?;
        let (rank1, rank2) = winning_ranks(&tree, &sets);
        Ok(WitnessCertificate {
            tree,
            pair,
            sets,
            rank1,
            rank2,
            bound: rank1 + rank2,
            seed,
            method: method.to_string(),
            iterations,
        })
    }

    pub fn to_json(&self) -> CertificateJson {
        let pairs = |v: &[(Label, Label)]| v.iter().map(|&(i, j)| [i, j]).collect();
        CertificateJson {
            schema_version: SCHEMA_VERSION,
            tree: self.tree.to_json(),
            newick: Some(self.tree.to_newick()),
            v1: self.pair.v1.iter().map(rational::to_fraction_string).collect(),
            v2: self.pair.v2.iter().map(rational::to_fraction_string).collect(),
            d1: pairs(&self.sets.d1),
            d2: pairs(&self.sets.d2),
            ties: pairs(&self.sets.ties),
            rank1: self.rank1,
            rank2: self.rank2,
            bound: self.bound,
            seed: self.seed,
            method: self.method.clone(),
            iterations: self.iterations,
        }
    }

    /// Reads the stored fields as they are, without recomputation.
    pub fn from_json(json: &CertificateJson) -> Result<Self, DraismaError> {
        let tree = PhyloTree::from_json(&json.tree)?;
        let parse = |v: &[String]| {
            v.iter()
                .map(|s| rational::parse_fraction(s).map_err(|e| DraismaError::Malformed(e.to_string())))
                .collect::<Result<Vec<_>, _>>()
        };
        let pair = WitnessPair::new(parse(&json.v1)?, parse(&json.v2)?)?;
        pair.check(&tree)?;
        let pairs = |v: &[[Label; 2]]| v.iter().map(|&[i, j]| (i, j)).collect();
        Ok(WitnessCertificate {
            tree,
            pair,
            sets: WinningSets {
                d1: pairs(&json.d1),
                d2: pairs(&json.d2),
                ties: pairs(&json.ties),
            },
            rank1: json.rank1,
            rank2: json.rank2,
            bound: json.bound,
            seed: json.seed,
            method: json.method.clone(),
            iterations: json.iterations,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CertificateJson {
    pub schema_version: u32,
    pub tree: TreeJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub newick: Option<String>,
    pub v1: Vec<String>,
    pub v2: Vec<String>,
    pub d1: Vec<[Label; 2]>,
    pub d2: Vec<[Label; 2]>,
    pub ties: Vec<[Label; 2]>,
    pub rank1: usize,
    pub rank2: usize,
    pub bound: usize,
    pub seed: u64,
    #[serde(default)]
    pub method: String,
    #[serde(default)]
    pub iterations: u64,
}

/// Outcome of re-checking a certificate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationReport {
    pub rank1: usize,
    pub rank2: usize,
    /// First disagreement with the stored data, if any.
    pub mismatch: Option<String>,
}

impl VerificationReport {
    pub fn is_valid(&self) -> bool {
        self.mismatch.is_none()
    }
}

/// Recomputes winning sets and ranks from the tree and vectors alone.
pub fn verify_certificate(json: &CertificateJson) -> Result<VerificationReport, DraismaError> {
    if json.schema_version != SCHEMA_VERSION {
        return Err(DraismaError::Malformed(format!(
            "unsupported schema version {}",
            json.schema_version
        )));
    }
    let stored = WitnessCertificate::from_json(json)?;
    let fresh = WitnessCertificate::build(stored.tree.clone(), stored.pair.clone(), 0, "", 0)?;
    let mismatch = first_mismatch(&stored, &fresh);
    Ok(VerificationReport {
        rank1: fresh.rank1,
        rank2: fresh.rank2,
        mismatch,
    })
}

fn first_mismatch(stored: &WitnessCertificate, fresh: &WitnessCertificate) -> Option<String> {
    let lists = [
        ("d1", &stored.sets.d1, &fresh.sets.d1),
        ("d2", &stored.sets.d2, &fresh.sets.d2),
        ("ties", &stored.sets.ties, &fresh.sets.ties),
    ];
    for (name, s, f) in lists {
        let s: BTreeSet<_> = s.iter().collect();
        let f: BTreeSet<_> = f.iter().collect();
        if let Some(&&(i, j)) = s.symmetric_difference(&f).next() {
            let side = if f.contains(&(i, j)) { "missing from" } else { "wrongly listed in" };
            return Some(format!("pair ({i},{j}) {side} {name}"));
        }
    }
    if stored.rank1 != fresh.rank1 {
        return Some(format!("rank1 is {}, certificate says {}", fresh.rank1, stored.rank1));
    }
    if stored.rank2 != fresh.rank2 {
        return Some(format!("rank2 is {}, certificate says {}", fresh.rank2, stored.rank2));
    }
    if stored.bound != fresh.bound {
        return Some(format!("bound is {}, certificate says {}", fresh.bound, stored.bound));
    }
    None
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    pub target: usize,
    pub seed: u64,
    pub max_iters: u64,
    /// Also require `rank1 == rank2`, as the lift needs.
    pub balanced: bool,
}

impl SearchOptions {
    pub fn new(target: usize, seed: u64) -> Self {
        SearchOptions {
            target,
            seed,
            max_iters: 100_000,
            balanced: false,
        }
    }
}

/// Search gave up.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchFailure {
    pub iterations: u64,
    pub best_bound: usize,
}

/// Rank of 0/1 rows over `Z/p` for a 31-bit `p`. Never exceeds the rank
/// over `Q`; candidates are rechecked exactly.
fn quick_rank(rows: &[&[EdgeId]], cols: usize) -> usize {
    const P: u64 = 2_147_483_647;
    let mut m: Vec<Vec<u64>> = rows
        .iter()
        .map(|s| {
            let mut r = vec![0u64; cols];
            for &c in s.iter() {
                r[c] = 1;
            }
            r
        })
        .collect();
    let mut rank = 0;
    for col in 0..cols {
        let Some(p) = (rank..m.len()).find(|&r| m[r][col] != 0) else {
            continue;
        };
        m.swap(p, rank);
        let inv = crate::linalg::pow_mod(m[rank][col], P - 2, P);
        for c in col..cols {
            m[rank][c] = m[rank][c] * inv % P;
        }
        for r in rank + 1..m.len() {
            let f = m[r][col];
            if f == 0 {
                continue;
            }
            for c in col..cols {
                m[r][c] = (m[r][c] + P - f * m[rank][c] % P) % P;
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

/// Random integer witnesses until the bound reaches `target`, with no ties.
pub fn search_witness(tree: &PhyloTree, opts: &SearchOptions) -> Result<WitnessCertificate, SearchFailure> {
    let cols = tree.edge_count();
    let mut best_bound = 0;
    if opts.target > 2 * cols {
        return Err(SearchFailure {
            iterations: 0,
            best_bound,
        });
    }
    let table = tree.path_table();
    let paths: Vec<&[EdgeId]> = table.iter().map(|(_, p)| p).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for iter in 1..=opts.max_iters {
        let v1: Vec<i64> = (0..cols).map(|_| rng.gen_range(-COORD_RANGE..=COORD_RANGE)).collect();
        let v2: Vec<i64> = (0..cols).map(|_| rng.gen_range(-COORD_RANGE..=COORD_RANGE)).collect();
        let mut d1 = Vec::new();
        let mut d2 = Vec::new();
        let mut tie = false;
        for &path in &paths {
            let diff: i64 = path.iter().map(|&e| v1[e] - v2[e]).sum();
            match diff.signum() {
                1 => d1.push(path),
                -1 => d2.push(path),
                _ => tie = true,
            }
        }
        if tie {
            continue;
        }
        let (r1, r2) = (quick_rank(&d1, cols), quick_rank(&d2, cols));
        best_bound = best_bound.max(r1 + r2);
        if r1 + r2 < opts.target || (opts.balanced && r1 != r2) {
            continue;
        }
        let pair = WitnessPair::from_integers(&v1, &v2).expect("equal lengths");
        let cert = WitnessCertificate::build(tree.clone(), pair, opts.seed, "search", iter).expect("lengths match");
        if cert.bound >= opts.target && (!opts.balanced || cert.rank1 == cert.rank2) {
            return Ok(cert);
        }
    }
    Err(SearchFailure {
        iterations: opts.max_iters,
        best_bound,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftOptions {
    pub seed: u64,
    /// `[L1, L2, L3, L4]`; chosen automatically when absent.
    pub leaves: Option<[Label; 4]>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftReport {
    pub pair: WitnessPair,
    pub leaves: [Label; 4],
    /// Perturbation size `2^-k`.
    pub epsilon_exponent: u32,
    pub attempts: usize,
    pub rank1: usize,
    pub rank2: usize,
}

/// Extends a witness for `small = restrict(big, 1..=n)` to `big`, whose
/// leaf `n + 1` must not be in a cherry. The input must reach rank
/// `2n - 5` on both sides; the output reaches `2(n + 1) - 5` on both.
pub fn lift_witness(big: &PhyloTree, small: &PhyloTree, w: &WitnessPair, opts: &LiftOptions) -> Result<LiftReport, DraismaError> {
    let big_n = big.leaf_count();
    let n = big_n - 1;
    if small.leaf_count() != n {
        return Err(DraismaError::NotRestriction);
    }
    w.check(small)?;
    let new_leaf = big_n;
    let pendant = big.pendant_edge(new_leaf);
    let m = big.neighbors(new_leaf - 1)[0].0;
    if big.neighbors(m).iter().filter(|&&(v, _)| big.is_leaf(v)).count() > 1 {
        return Err(DraismaError::LeafInCherry(new_leaf));
    }

    let small_sets = winning_directions(small, w)?;
    let (r1, r2) = winning_ranks(small, &small_sets);
    let required = 2 * n - 5;
    if r1 < required || r2 < required {
        return Err(DraismaError::InsufficientRank {
            rank1: r1,
            rank2: r2,
            required,
        });
    }

    let keep: Vec<Label> = (1..=n).collect();
    let restriction = big.restrict(&keep)?;
    let corr = restriction
        .tree
        .edge_correspondence(small)
        .ok_or(DraismaError::NotRestriction)?;
    // Small-tree edge carried by each big edge, except the three new ones.
    let mut old_edge: Vec<Option<EdgeId>> = vec![None; big.edge_count()];
    let mut merged = None;
    for (e_r, path) in restriction.edge_map.iter().enumerate() {
        match path.as_slice() {
            [f] => old_edge[*f] = Some(corr[e_r]),
            [f, g] => merged = Some((corr[e_r], *f, *g)),
            _ => return Err(DraismaError::NotRestriction),
        }
    }
    let (e_small, e_a, e_b) = merged.ok_or(DraismaError::NotRestriction)?;
    let far = |e: EdgeId| {
        let [x, y] = big.endpoints(e);
        if x == m {
            y
        } else {
            x
        }
    };
    let (u_a, u_b) = (far(e_a), far(e_b));
    let side_a = big.side_leaves(e_a, u_a);
    let side_b = big.side_leaves(e_b, u_b);
    let leaves = match opts.leaves {
        Some(l) => {
            if l[0] == l[1] || l[2] == l[3] {
                return Err(DraismaError::BadSideLeaves("leaves on one side must differ".into()));
            }
            if !side_a.contains(&l[0]) || !side_a.contains(&l[1]) || !side_b.contains(&l[2]) || !side_b.contains(&l[3]) {
                return Err(DraismaError::BadSideLeaves(format!(
                    "{l:?} do not lie on the sides {side_a:?} and {side_b:?}"
                )));
            }
            l
        }
        None => [side_a[0], side_a[1], side_b[0], side_b[1]],
    };

    let weight = |from: usize, leaf: Label, v: &[BigRational]| -> BigRational {
        big.vertex_path(from, leaf - 1)
            .into_iter()
            .map(|e| &v[old_edge[e].expect("path avoids the new edges")])
            .sum()
    };
    let two = rational::int(2);
    let half_diff = |from: usize, leaf: Label| (weight(from, leaf, &w.v2) - weight(from, leaf, &w.v1)) / &two;
    // Unknowns: w1a, w1b, w1n, w2a, w2b, w2n.
    let system = RationalMatrix::from_i64_rows(
        &[
            vec![1, 0, 1, 0, 0, 0],
            vec![0, 0, 0, 1, 0, 1],
            vec![0, 1, 1, 0, 0, 0],
            vec![0, 0, 0, 0, 1, 1],
            vec![1, 1, 0, 0, 0, 0],
            vec![0, 0, 0, 1, 1, 0],
        ],
        6,
    )
    .expect("square system");
    let rhs = vec![
        half_diff(u_a, leaves[0]),
        -half_diff(u_a, leaves[1]),
        half_diff(u_b, leaves[2]),
        -half_diff(u_b, leaves[3]),
        w.v1[e_small].clone(),
        w.v2[e_small].clone(),
    ];
    let Ok(Solution::Unique(x)) = system.solve(&rhs) else {
        return Err(DraismaError::SingularSystem);
    };

    let mut base = WitnessPair {
        v1: vec![BigRational::zero(); big.edge_count()],
        v2: vec![BigRational::zero(); big.edge_count()],
    };
    for (e, old) in old_edge.iter().enumerate() {
        if let Some(o) = old {
            base.v1[e] = w.v1[*o].clone();
            base.v2[e] = w.v2[*o].clone();
        }
    }
    for (slot, e) in [e_a, e_b, pendant].into_iter().enumerate() {
        base.v1[e] = x[slot].clone();
        base.v2[e] = x[slot + 3].clone();
    }

    let table = big.path_table();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let target = 2 * big_n - 5;
    for attempt in 0..LIFT_ATTEMPTS {
        let k = 8u32 << (attempt % 4);
        let eps = pow2_inverse(k);
        let mut perturb = |v: &[BigRational]| -> Vec<BigRational> {
            v.iter()
                .map(|x| x + &eps * rational::int(rng.gen_range(-COORD_RANGE..=COORD_RANGE)))
                .collect()
        };
        let candidate = WitnessPair {
            v1: perturb(&base.v1),
            v2: perturb(&base.v2),
        };
        let sets = sets_from_table(&table, &candidate);
        if !sets.ties.is_empty() {
            continue;
        }
        let keeps_old = small_sets
            .d1
            .iter()
            .all(|&p| sets.winner(p) == 1)
            && small_sets.d2.iter().all(|&p| sets.winner(p) == 2);
        let splits = |a: Label, b: Label| sets.winner((a, new_leaf)) != sets.winner((b, new_leaf));
        if !keeps_old || !splits(leaves[0], leaves[1]) || !splits(leaves[2], leaves[3]) {
            continue;
        }
        let rank1 = pair_rank(&table, &sets.d1, big.edge_count());
        let rank2 = pair_rank(&table, &sets.d2, big.edge_count());
        if rank1 == target && rank2 == target {
            return Ok(LiftReport {
                pair: candidate,
                leaves,
                epsilon_exponent: k,
                attempts: attempt + 1,
                rank1,
                rank2,
            });
        }
    }
    Err(DraismaError::PerturbationFailed(LIFT_ATTEMPTS))
}

/// Leaf permutation and edge map taking `from` onto `to`, found by trying
/// every permutation. `perm[old - 1]` is the label in `to`; `edges[e]` is
/// the edge of `to` matching edge `e` of `from`.
pub fn find_leaf_isomorphism(from: &PhyloTree, to: &PhyloTree) -> Option<(Vec<Label>, Vec<EdgeId>)> {
    let n = from.leaf_count();
    if n != to.leaf_count() || n > 12 {
        return None;
    }
    let full: u32 = (1u32 << n) - 1;
    let normalize = |mask: u32| if mask & 1 == 1 { full & !mask } else { mask };
    let to_mask = |leaves: &[Label]| leaves.iter().fold(0u32, |m, &l| m | 1 << (l - 1));
    let target: std::collections::BTreeMap<u32, EdgeId> = to
        .split_keys()
        .iter()
        .enumerate()
        .map(|(e, k)| (normalize(to_mask(k)), e))
        .collect();
    let source: Vec<u32> = from.split_keys().iter().map(|k| to_mask(k)).collect();
    for perm in (1..=n).permutations(n) {
        let mapped = |mask: u32| {
            (0..n)
                .filter(|&b| mask >> b & 1 == 1)
                .fold(0u32, |m, b| m | 1 << (perm[b] - 1))
        };
        let edges: Option<Vec<EdgeId>> = source.iter().map(|&s| target.get(&normalize(mapped(s))).copied()).collect();
        if let Some(edges) = edges {
            return Some((perm, edges));
        }
    }
    None
}

/// Moves a witness across an isomorphism given by an edge map.
pub fn transfer_witness(w: &WitnessPair, edges: &[EdgeId]) -> WitnessPair {
    let mut out = WitnessPair {
        v1: vec![BigRational::zero(); w.len()],
        v2: vec![BigRational::zero(); w.len()],
    };
    for (e, &f) in edges.iter().enumerate() {
        out.v1[f] = w.v1[e].clone();
        out.v2[f] = w.v2[e].clone();
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftStep {
    pub leaves: usize,
    pub rank1: usize,
    pub rank2: usize,
    pub epsilon_exponent: u32,
}

#[derive(Clone, Debug)]
pub struct LiftChain {
    pub certificate: WitnessCertificate,
    pub steps: Vec<LiftStep>,
}

/// Strips the leaves outside cherries from `target` down to a tree made of
/// cherries only, places the matching base witness on it, and lifts back
/// up one leaf at a time. `bases` are balanced witnesses on trees whose
/// leaves all sit in cherries.
pub fn lift_chain(target: &PhyloTree, bases: &[WitnessCertificate], seed: u64) -> Result<LiftChain, DraismaError> {
    let big_n = target.leaf_count();
    let cherries = target.cherries();
    let c = cherries.len();
    let base = bases
        .iter()
        .find(|b| b.tree.leaf_count() == 2 * c && b.tree.cherries().len() == c)
        .ok_or(DraismaError::NoBase { cherries: c })?;

    let in_cherry: BTreeSet<Label> = cherries.iter().flat_map(|&(a, b)| [a, b]).collect();
    let mut relabeling = vec![0; big_n];
    let (mut next_cherry, mut next_other) = (1, 2 * c + 1);
    for old in 1..=big_n {
        let slot = if in_cherry.contains(&old) { &mut next_cherry } else { &mut next_other };
        relabeling[old - 1] = *slot;
        *slot += 1;
    }
    let relabelled = target.relabel(&relabeling)?;

    let mut trees = vec![relabelled];
    while trees.last().expect("non-empty").leaf_count() > 2 * c {
        let t = trees.last().expect("non-empty");
        let keep: Vec<Label> = (1..t.leaf_count()).collect();
        let smaller = t.restrict(&keep)?.tree;
        trees.push(smaller);
    }
    trees.reverse();

    let (_, edges) = find_leaf_isomorphism(&base.tree, &trees[0]).ok_or(DraismaError::BaseMismatch)?;
    let mut w = transfer_witness(&base.pair, &edges);
    let mut steps = Vec::new();
    for (idx, pair) in trees.windows(2).enumerate() {
        let report = lift_witness(
            &pair[1],
            &pair[0],
            &w,
            &LiftOptions {
                seed: seed.wrapping_add(idx as u64),
                leaves: None,
            },
        )?;
        steps.push(LiftStep {
            leaves: pair[1].leaf_count(),
            rank1: report.rank1,
            rank2: report.rank2,
            epsilon_exponent: report.epsilon_exponent,
        });
        w = report.pair;
    }
    // Relabelling keeps edge ids, so `w` indexes the target's edges too.
    let certificate = WitnessCertificate::build(target.clone(), w, seed, "lift-chain", steps.len() as u64)?;
    Ok(LiftChain { certificate, steps })
}

/// `v1` all ones, `v2` all zeros: copy one wins every pair.
pub fn trivial_pair(tree: &PhyloTree) -> WitnessPair {
    WitnessPair {
        v1: vec![BigRational::one(); tree.edge_count()],
        v2: vec![BigRational::zero(); tree.edge_count()],
    }
}
