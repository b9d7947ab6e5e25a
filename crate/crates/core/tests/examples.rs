//! Worked examples through the public API, one block per module.

use std::collections::BTreeSet;

use itertools::Itertools;
use num_rational::BigRational;
use plucker_tree::dimension::{
    cherry_bound, cluster_bound, conjecture_predicate, counterexample_tree, equality_verdict, expected_secant_dim,
    jacobian_secant_dim, Verdict,
};
use plucker_tree::draisma::{
    lift_witness, lower_bound, search_witness, trivial_pair, verify_certificate, winning_directions, DraismaError,
    LiftOptions, SearchOptions, WitnessPair,
};
use plucker_tree::linalg::{RationalMatrix, Solution, DEFAULT_PRIME};
use plucker_tree::pfaffian::{
    crossing_monomial, generic_weights, incomparable_pair_ideal, initial_form, initial_pfaffian_generators,
    jt_generators, matching_sign, perfect_matchings, pfaffian_polynomial, plucker_quadric, PerfectMatching,
};
use plucker_tree::poly::parse_compact;
use plucker_tree::tree::{circular_embed, parse_newick, parse_newick_with, NewickError, ParseOptions};
use plucker_tree::{PhyloTree, PluckerVar};

const SNOWFLAKE: &str = "((1,2),((3,4),(5,6)));";
const CATERPILLAR6: &str = "(1,2,(3,(4,(5,6))));";
const FIGURE_TREE: &str = "(((1,2),3),((4,5),6),((7,8),((9,10),((11,12),13))));";

fn tree(s: &str) -> PhyloTree {
    parse_newick(s).unwrap()
}

fn split_strings(t: &PhyloTree) -> BTreeSet<String> {
    t.nontrivial_splits().iter().map(|s| s.to_string()).collect()
}

/// Quartet from unit-length path distances: the pairing with the strictly
/// smallest distance sum.
fn brute_quartet(t: &PhyloTree, q: [usize; 4]) -> ((usize, usize), (usize, usize)) {
    let d = |a, b| t.path(a, b).unwrap().len();
    let [i, j, k, l] = q;
    [((i, j), (k, l)), ((i, k), (j, l)), ((i, l), (j, k))]
        .into_iter()
        .min_by_key(|&((a, b), (c, e))| d(a, b) + d(c, e))
        .unwrap()
}

#[test]
fn newick_examples() {
    let quartet = tree("((1,2),(3,4));");
    assert_eq!(split_strings(&quartet), BTreeSet::from(["12|34".to_string()]));

    let snow = tree(SNOWFLAKE);
    assert_eq!(
        split_strings(&snow),
        ["12|3456", "34|1256", "56|1234"].iter().map(|s| s.to_string()).collect()
    );

    // A two-child root is suppressed; a one-child vertex needs the flag.
    assert_eq!(tree("(1,(2,(3,4)));").leaf_count(), 4);
    let unary = "(1,((2,(3,4))));";
    assert!(matches!(parse_newick(unary), Err(NewickError::DegreeTwo(_))));
    let ok = parse_newick_with(unary, &ParseOptions { suppress_degree_two: true }).unwrap();
    assert_eq!(ok.tree.leaf_count(), 4);
}

#[test]
fn circular_embedding_examples() {
    let quartet = tree("((1,2),(3,4));");
    assert_eq!(circular_embed(&quartet).relabeling(), &[1, 2, 3, 4]);

    for scrambled in ["(4,1,(6,(2,(5,3))));", "((6,2),((1,4),(5,3)));"] {
        let t = tree(scrambled);
        let emb = circular_embed(&t);
        let e = emb.tree();
        for q in (1..=6).combinations(4) {
            let (left, _) = brute_quartet(e, [q[0], q[1], q[2], q[3]]);
            assert!(left == (q[0], q[1]) || left == (q[0], q[3]), "{scrambled}: {q:?}");
        }
        // Relabelling preserves the topology.
        let back: Vec<usize> = (1..=6).map(|old| emb.relabeling()[old - 1]).collect();
        assert!(t.relabel(&back).unwrap().same_topology(e));
    }

    // Cherries sit next to each other on the circle.
    let emb = circular_embed(&tree("((1,4),((2,5),(3,6)));"));
    for (a, b) in emb.tree().cherries() {
        assert!(b - a == 1 || (a, b) == (1, 6));
    }
}

#[test]
fn quartet_examples() {
    let cat = tree(CATERPILLAR6);
    let q = cat.quartet(1, 2, 5, 6).unwrap();
    assert_eq!((q.left, q.right), ((1, 2), (5, 6)));

    let snow = tree(SNOWFLAKE);
    let q = snow.quartet(1, 3, 5, 6).unwrap();
    assert_eq!((q.left, q.right), brute_quartet(&snow, [1, 3, 5, 6]));
    assert_eq!((q.left, q.right), ((1, 3), (5, 6)));

    let q = tree("((1,2),(3,4));").quartet(1, 2, 3, 4).unwrap();
    assert_eq!((q.left, q.right), ((1, 2), (3, 4)));
}

/// Sides of every edge that root a caterpillar with `k` leaves.
fn brute_clusters(t: &PhyloTree, k: usize) -> usize {
    let mut count = 0;
    for s in t.splits() {
        for side in [&s.block_a, &s.block_b] {
            if side.len() != k {
                continue;
            }
            // A k-leaf rooted binary tree is a caterpillar iff it has one
            // cherry, which holds for k <= 3 and otherwise needs checking.
            let inside: BTreeSet<usize> = side.iter().copied().collect();
            let cherries = t.cherries().iter().filter(|(a, b)| inside.contains(a) && inside.contains(b)).count();
            let nested = (2..k).all(|m| {
                t.splits().iter().any(|o| {
                    [&o.block_a, &o.block_b]
                        .iter()
                        .any(|b| b.len() == m && b.iter().all(|x| inside.contains(x)))
                })
            });
            if k == 2 || (cherries == 1 && nested) {
                count += 1;
            }
        }
    }
    count
}

#[test]
fn cluster_examples() {
    let fig = tree(FIGURE_TREE);
    assert_eq!(fig.cluster_count(2), 5);
    assert_eq!(fig.cluster_count(3), 3);
    let vars = |k| fig.cluster_variables(k).into_iter().collect::<BTreeSet<_>>();
    assert_eq!(vars(2), BTreeSet::from([(1, 2), (4, 5), (7, 8), (9, 10), (11, 12)]));
    assert_eq!(vars(3), BTreeSet::from([(1, 3), (2, 3), (4, 6), (5, 6), (11, 13), (12, 13)]));

    for n in 5..=9 {
        let newick = (3..n).fold("(1,2)".to_string(), |acc, x| format!("({acc},{x})"));
        let cat = tree(&format!("({newick},{n});"));
        assert_eq!(cat.cluster_count(2), 2, "caterpillar on {n} leaves");
    }

    let snow = tree(SNOWFLAKE);
    assert_eq!(snow.cluster_count(2), brute_clusters(&snow, 2));
    assert_eq!(snow.cluster_count(2), 3);
    // No edge of the snowflake cuts off three leaves.
    assert_eq!(snow.cluster_count(3), brute_clusters(&snow, 3));
    assert_eq!(snow.cluster_count(3), 0);
    assert_eq!(fig.cluster_count(3), brute_clusters(&fig, 3));
}

#[test]
fn restriction_and_attachment_examples() {
    let cat = tree(CATERPILLAR6);
    let r = cat.restrict(&[1, 2, 5, 6]).unwrap();
    let q = r.tree.quartet(1, 2, 3, 4).unwrap();
    assert_eq!((q.left, q.right), ((1, 2), (3, 4)));

    // Pendant edge of a cherry leaf: a 3-cluster appears.
    let snow = tree(SNOWFLAKE);
    let (bigger, att) = snow.attach_leaf(snow.pendant_edge(1), 7).unwrap();
    assert_eq!(bigger.cluster_count(3), 1);
    assert_eq!(att.new_leaf, 7);

    // Internal edge: still three cherries.
    let internal = (0..snow.edge_count()).find(|&e| snow.split(e).unwrap().block_a.len() >= 2).unwrap();
    let (seven, _) = snow.attach_leaf(internal, 7).unwrap();
    assert_eq!(seven.leaf_count(), 7);
    assert_eq!(seven.cherries().len(), 3);

    // A cherry on every leaf of a 5-leaf tree.
    let mut t = tree("((1,2),3,(4,5));");
    for leaf in 1..=5 {
        let label = t.leaf_count() + 1;
        t = t.attach_leaf(t.pendant_edge(leaf), label).unwrap().0;
    }
    assert_eq!(t.leaf_count(), 10);
    assert_eq!(t.cherries().len(), 5);
    assert_eq!(t.edge_count(), 17);
}

#[test]
fn matching_examples() {
    fn double_factorial(k: usize) -> usize {
        (1..k).step_by(2).product()
    }
    for size in [4usize, 6, 8] {
        let labels: Vec<usize> = (1..=size).collect();
        assert_eq!(perfect_matchings(&labels).unwrap().len(), double_factorial(size));
    }
    let sign = |p: Vec<(usize, usize)>| matching_sign(&PerfectMatching::new(p).unwrap());
    assert_eq!(sign(vec![(1, 2), (3, 4)]), 1);
    assert_eq!(sign(vec![(1, 3), (2, 4)]), -1);
    assert_eq!(sign(vec![(1, 4), (2, 3)]), 1);
    assert_eq!(sign(vec![(1, 4), (2, 5), (3, 6)]), -1);
    assert_eq!(sign(vec![(1, 6), (2, 5), (3, 4)]), 1);
}

#[test]
fn pfaffian_examples() {
    let four = pfaffian_polynomial(&[1, 2, 3, 4]).unwrap();
    assert_eq!(four, parse_compact("p12p34 - p13p24 + p14p23").unwrap());
    assert_eq!(pfaffian_polynomial(&[1, 2, 3, 4, 5, 6]).unwrap().len(), 15);
    assert!(pfaffian_polynomial(&[1, 2, 2, 4]).is_err());

    assert_eq!(crossing_monomial(&[1, 2, 3, 4]).unwrap().compact(), "p13p24");
    assert_eq!(crossing_monomial(&[1, 2, 3, 4, 5, 6]).unwrap().compact(), "p14p25p36");
    assert_eq!(
        crossing_monomial(&[1, 2, 3, 4, 5, 6, 7, 8, 14, 15]).unwrap().compact(),
        "p16p27p38p4,14p5,15"
    );
}

#[test]
fn plucker_degeneration_examples() {
    let t = tree("((1,2),(3,4));");
    let omega = generic_weights(&t);
    let init = initial_form(&plucker_quadric(1, 2, 3, 4).unwrap(), &omega).unwrap();
    let binomial = parse_compact("p13p24 - p14p23").unwrap();
    assert!(init.equal_up_to_sign(&binomial));
    assert_eq!(jt_generators(&t), vec![binomial]);
    assert_eq!(jt_generators(&tree(SNOWFLAKE)).len(), 15);

    let cat = tree(CATERPILLAR6);
    let gens = initial_pfaffian_generators(&cat, 2, &generic_weights(&cat)).unwrap();
    assert_eq!(gens.len(), 1);
    assert_eq!(gens[0].len(), 6);
    let snow = tree(SNOWFLAKE);
    let gens = initial_pfaffian_generators(&snow, 2, &generic_weights(&snow)).unwrap();
    assert_eq!(gens[0].len(), 8);
    let seven = circular_embed(&tree("(((1,2),3),(4,5),(6,7));")).into_tree();
    assert_eq!(initial_pfaffian_generators(&seven, 2, &generic_weights(&seven)).unwrap().len(), 7);
}

#[test]
fn incomparable_pairs_match_brute_force() {
    for n in 3..=7 {
        let vars: Vec<(usize, usize)> = (1..=n).tuple_combinations().collect();
        let mut want = BTreeSet::new();
        for (a, b) in vars.iter().tuple_combinations() {
            let le = |x: &(usize, usize), y: &(usize, usize)| x.0 <= y.0 && x.1 <= y.1;
            if !le(a, b) && !le(b, a) {
                let mut key = vec![PluckerVar::new(a.0, a.1).unwrap(), PluckerVar::new(b.0, b.1).unwrap()];
                key.sort();
                want.insert(key);
            }
        }
        let got: BTreeSet<Vec<PluckerVar>> = incomparable_pair_ideal(n).iter().map(|m| m.vars().to_vec()).collect();
        assert_eq!(got, want, "n = {n}");
    }
    assert!(incomparable_pair_ideal(3).is_empty());
    let four: Vec<String> = incomparable_pair_ideal(4).iter().map(|m| m.compact()).collect();
    assert_eq!(four, ["p14p23"]);
}

#[test]
fn linalg_examples() {
    assert_eq!(RationalMatrix::identity(5).rank(), 5);
    assert_eq!(tree(SNOWFLAKE).incidence_matrix().rank(), 9);
    let a = RationalMatrix::from_i64_rows(&[vec![1, 1], vec![2, 2]], 2).unwrap();
    let b: Vec<BigRational> = [1, 3].iter().map(|&x| BigRational::from_integer(x.into())).collect();
    assert_eq!(a.solve(&b).unwrap(), Solution::Inconsistent);
}

#[test]
fn winning_direction_examples() {
    let snow = tree(SNOWFLAKE);
    let same = WitnessPair::from_integers(&[3; 9], &[3; 9]).unwrap();
    let sets = winning_directions(&snow, &same).unwrap();
    assert!(sets.d1.is_empty() && sets.d2.is_empty());
    assert_eq!(sets.ties.len(), 15);
    assert_eq!(lower_bound(&snow, &same).unwrap(), 0);

    let trivial = trivial_pair(&snow);
    let sets = winning_directions(&snow, &trivial).unwrap();
    assert_eq!(sets.d1.len(), 15);
    assert_eq!(lower_bound(&snow, &trivial).unwrap(), 9);
}

#[test]
fn search_and_verify_examples() {
    let snow = tree(SNOWFLAKE);
    let mut opts = SearchOptions::new(14, 3);
    opts.balanced = true;
    let cert = search_witness(&snow, &opts).unwrap();
    assert_eq!((cert.rank1, cert.rank2), (7, 7));
    assert!(cert.sets.ties.is_empty());
    assert!(verify_certificate(&cert.to_json()).unwrap().is_valid());

    let mut json = cert.to_json();
    json.v1[0] = format!("{}", 1000 + 7);
    json.v1[1] = "-999".into();
    let report = verify_certificate(&json).unwrap();
    assert!(!report.is_valid());
    assert!(report.mismatch.is_some());

    let mut json = cert.to_json();
    json.bound += 1;
    assert!(!verify_certificate(&json).unwrap().is_valid());

    let impossible = SearchOptions { target: 19, seed: 0, max_iters: 500, balanced: false };
    assert!(search_witness(&snow, &impossible).is_err());
}

#[test]
fn lift_examples() {
    let small = tree(SNOWFLAKE);
    let mut opts = SearchOptions::new(14, 11);
    opts.balanced = true;
    let base = search_witness(&small, &opts).unwrap();

    // Leaf 7 on the edge separating {1,2}: three cherries remain.
    let e = (0..small.edge_count()).find(|&e| small.split(e).unwrap().block_a == [1, 2]).unwrap();
    let (big, _) = small.attach_leaf(e, 7).unwrap();
    assert_eq!(big.cherries().len(), 3);
    let report = lift_witness(&big, &small, &base.pair, &LiftOptions { seed: 0, leaves: None }).unwrap();
    assert_eq!(lower_bound(&big, &report.pair).unwrap(), 18);

    let degenerate = LiftOptions { seed: 0, leaves: Some([1, 1, 3, 4]) };
    assert!(matches!(
        lift_witness(&big, &small, &base.pair, &degenerate),
        Err(DraismaError::BadSideLeaves(_))
    ));
}

#[test]
fn dimension_formula_examples() {
    for n in 4..=12 {
        assert_eq!(expected_secant_dim(n, 2), 4 * n - 10);
    }
    assert_eq!(expected_secant_dim(13, 3), 57);
    assert_eq!(expected_secant_dim(4, 1), 5);

    let snow = tree(SNOWFLAKE);
    assert_eq!(cherry_bound(&snow, 2), 15);
    let cx = counterexample_tree(2);
    assert_eq!(cx.leaf_count(), 10);
    assert_eq!(cx.cluster_count(2), 5);
    assert_eq!(cherry_bound(&cx, 2), 29);
    assert_eq!(expected_secant_dim(10, 2), 30);
    let cat = tree(CATERPILLAR6);
    assert_eq!(cherry_bound(&cat, 2), 4 * 6 - 8);

    for t in [&snow, &cx, &cat, &tree(FIGURE_TREE)] {
        assert_eq!(cluster_bound(t, 2), cherry_bound(t, 2));
    }
    assert_eq!(cluster_bound(&tree(FIGURE_TREE), 3), 56);
    // Every pendant edge of the quartet tree cuts off a 3-leaf caterpillar.
    let q = tree("((1,2),(3,4));");
    assert_eq!((q.cluster_count(2), q.cluster_count(3)), (2, 4));
    assert_eq!(cluster_bound(&q, 3), 6 * 4 - 9 - (2 * 2 + 4));

    let cx3 = counterexample_tree(3);
    assert_eq!(cx3.leaf_count(), 14);
    assert_eq!(cx3.cluster_count(2), 7);
    assert_eq!(cherry_bound(&cx3, 3), 61);
    assert_eq!(expected_secant_dim(14, 3), 63);
}

#[test]
fn jacobian_and_verdict_examples() {
    for s in [SNOWFLAKE, CATERPILLAR6, FIGURE_TREE] {
        let t = tree(s);
        let n = t.leaf_count();
        assert_eq!(jacobian_secant_dim(&t, 1, DEFAULT_PRIME, 0, 2).unwrap().rank, 2 * n - 3);
    }
    let verdict = |t: &PhyloTree, r| {
        let n = t.leaf_count();
        let jac = jacobian_secant_dim(t, r, DEFAULT_PRIME, 0, 3).unwrap().rank;
        equality_verdict(jac, expected_secant_dim(n, r), cherry_bound(t, r), cluster_bound(t, r))
    };
    assert_eq!(verdict(&tree(SNOWFLAKE), 2), Verdict::Equal);
    assert_eq!(verdict(&counterexample_tree(2), 2), Verdict::StrictlySmaller);
    assert_eq!(verdict(&tree(FIGURE_TREE), 3), Verdict::StrictlySmaller);

    let fig = conjecture_predicate(&tree(FIGURE_TREE), 3);
    assert_eq!((fig.sum, fig.threshold, fig.strict, fig.non_strict), (13, 12, false, false));
    let snow = conjecture_predicate(&tree(SNOWFLAKE), 2);
    assert_eq!((snow.sum, snow.strict), (3, true));
    let four = conjecture_predicate(&tree("(((1,2),(3,4)),((5,6),(7,8)));"), 2);
    assert_eq!((four.sum, four.strict, four.non_strict), (4, false, true));
}
