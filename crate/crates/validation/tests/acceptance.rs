//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

#![allow(clippy::needless_range_loop)]

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_rational::BigRational;
use plucker_tree::dimension::{
    cluster_bound, cluster_counts, conjecture_predicate, dimension_report, equality_verdict, expected_secant_dim,
    jacobian_secant_dim, Verdict,
};
use plucker_tree::draisma::{
    expected_bound, lift_chain, search_witness, verify_certificate, SearchOptions, WitnessCertificate,
};
use plucker_tree::linalg::DEFAULT_PRIME;
use plucker_tree::pfaffian::{
    generic_weights, initial_form, jt_generators, linear_occurrence_witness, pfaffian_polynomial, plucker_quadric,
    WitnessCase,
};
use plucker_tree::tree::{circular_trees, parse_newick, random_tree, tree_shapes, EdgeLengths};
use plucker_tree::{Monomial, PhyloTree, PluckerVar, SparsePoly};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SNOWFLAKE: &str = "((1,2),(3,4),(5,6));";
const FOUR_CHERRIES: &str = "(((1,2),(3,4)),((5,6),(7,8)));";
const CATERPILLAR6: &str = "(1,2,(3,(4,(5,6))));";
const FIFTEEN: &str = "((((1,2),(3,4)),(5,(6,7))),(((8,9),(10,11)),((12,13),(14,15))));";
const FIGURE_TREE: &str = "(((1,2),3),((4,5),6),((7,8),((9,10),((11,12),13))));";

/// Leibniz expansion with exact 128-bit arithmetic.
fn leibniz_det(m: &[Vec<i64>]) -> i128 {
    fn rec(m: &[Vec<i64>], row: usize, used: &mut Vec<bool>, perm: &mut Vec<usize>, total: &mut i128) {
        let n = m.len();
        if row == n {
            let inversions = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).filter(|&(a, b)| perm[a] > perm[b]).count();
            let prod: i128 = (0..n).map(|i| m[i][perm[i]] as i128).product();
            *total += if inversions % 2 == 0 { prod } else { -prod };
            return;
        }
        for c in 0..n {
            if !used[c] && m[row][c] != 0 {
                used[c] = true;
                perm.push(c);
                rec(m, row + 1, used, perm, total);
                perm.pop();
                used[c] = false;
            }
        }
    }
    let mut total = 0;
    rec(m, 0, &mut vec![false; m.len()], &mut Vec::new(), &mut total);
    total
}

fn random_skew(size: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<i64>> {
    let mut m = vec![vec![0i64; size]; size];
    for i in 0..size {
        for j in i + 1..size {
            let x = rng.gen_range(-9..=9);
            m[i][j] = x;
            m[j][i] = -x;
        }
    }
    m
}

fn criterion_1() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for size in [4usize, 6, 8] {
        let labels: Vec<usize> = (1..=size).collect();
        let pf = pfaffian_polynomial(&labels).map_err(|e| e.to_string())?;
        for trial in 0..50 {
            let m = random_skew(size, &mut rng);
            let value = pf.evaluate_skew(&m);
            let det = leibniz_det(&m);
            if &value * &value != num_bigint::BigInt::from(det) {
                return Err(format!("size {size} trial {trial}: Pf^2 = {} but det = {det}", &value * &value));
            }
        }
    }
    Ok("150 matrices, Pf^2 = det exactly".into())
}

/// Reads `p_{a,b}p_{c,d}...` products separated by ` + ` or ` - `.
fn parse_printed(text: &str) -> SparsePoly {
    let cleaned: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let mut terms = Vec::new();
    let mut sign = 1;
    let mut vars = Vec::new();
    let mut chars = cleaned.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '+' | '-' => {
                if !vars.is_empty() {
                    terms.push(Monomial::new(sign, std::mem::take(&mut vars)));
                }
                sign = if c == '-' { -1 } else { 1 };
            }
            'p' => {
                assert_eq!(chars.next(), Some('_'));
                let body: String = if chars.peek() == Some(&'{') {
                    chars.next();
                    chars.by_ref().take_while(|&c| c != '}').collect()
                } else {
                    chars.by_ref().take(2).collect()
                };
                let (a, b) = match body.split_once(',') {
                    Some((a, b)) => (a.parse().unwrap(), b.parse().unwrap()),
                    None => (body[..1].parse().unwrap(), body[1..].parse().unwrap()),
                };
                vars.push(PluckerVar::new(a, b).unwrap());
            }
            _ => panic!("unexpected `{c}` in printed polynomial"),
        }
    }
    if !vars.is_empty() {
        terms.push(Monomial::new(sign, vars));
    }
    SparsePoly::from_terms(terms)
}

/// Explains a failed match: support differences first, then the terms
/// whose sign disagrees with the majority orientation.
fn sign_report(newick: &str, got: &SparsePoly, golden: &SparsePoly) -> String {
    let support = |p: &SparsePoly| p.terms().map(|m| m.vars().to_vec()).collect::<BTreeSet<_>>();
    if support(got) != support(golden) {
        return format!("{newick}: support differs; computed {got}, printed {golden}");
    }
    let (same, flipped): (Vec<Monomial>, Vec<Monomial>) =
        golden.terms().partition(|m| got.coefficient(m.vars()) == m.coeff);
    let odd = if same.len() <= flipped.len() { same } else { flipped };
    let names: Vec<String> = odd.iter().map(|m| m.support().compact()).collect();
    format!(
        "{newick}: same {} monomials, but {} carry the opposite relative sign to the alternating Pfaffian (computed {got})",
        golden.len(),
        names.join(", ")
    )
}

fn criterion_2() -> Result<String, String> {
    let printed = [
        (
            CATERPILLAR6,
            "p_{14}p_{25}p_{36}  - p_{14}p_{26}p_{35} - p_{15}p_{24}p_{36}   + p_{15}p_{26}p_{34} + p_{16}p_{24}p_{35}  - p_{16}p_{25}p_{34}",
            6,
        ),
        (
            SNOWFLAKE,
            "p_{14}p_{25}p_{36}  - p_{14}p_{26}p_{35} - p_{15}p_{24}p_{36}   + p_{13}p_{25}p_{46} + p_{16}p_{24}p_{35}  - p_{13}p_{26}p_{45} + p_{15}p_{23}p_{46}  - p_{16}p_{23}p_{45}",
            8,
        ),
    ];
    let pf = pfaffian_polynomial(&[1, 2, 3, 4, 5, 6]).map_err(|e| e.to_string())?;
    for (newick, text, terms) in printed {
        let t = parse_newick(newick).map_err(|e| e.to_string())?;
        let golden = parse_printed(text);
        if golden.len() != terms {
            return Err(format!("golden polynomial for {newick} has {} terms", golden.len()));
        }
        let got = initial_form(&pf, &generic_weights(&t)).map_err(|e| e.to_string())?;
        if !got.equal_up_to_sign(&golden) {
            return Err(sign_report(newick, &got, &golden));
        }
    }
    Ok("6-term caterpillar and 8-term snowflake forms match".into())
}

fn random_lengths(edges: usize, rng: &mut ChaCha8Rng) -> EdgeLengths {
    EdgeLengths::new(
        (0..edges)
            .map(|_| BigRational::new(rng.gen_range(1..=60i64).into(), rng.gen_range(1..=7i64).into()))
            .collect(),
    )
    .expect("positive")
}

/// Evaluates under `p_ij = prod of y_e over the path` in exact 128-bit
/// arithmetic; parameters stay below 64 so paths of seven edges fit.
fn phi_eval(t: &PhyloTree, poly: &SparsePoly, y: &[i128]) -> i128 {
    poly.terms()
        .map(|m| {
            let value: i128 = m
                .vars()
                .iter()
                .map(|v| t.path(v.i(), v.j()).unwrap().iter().map(|&e| y[e]).product::<i128>())
                .product();
            m.coeff as i128 * value
        })
        .sum()
}

fn criterion_3() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut trees = 0;
    for n in 4..=8 {
        for t in circular_trees(n) {
            trees += 1;
            let jt = jt_generators(&t);
            for _ in 0..5 {
                let lengths = random_lengths(t.edge_count(), &mut rng);
                let omega = t.tree_metric_weights(&lengths).map_err(|e| e.to_string())?;
                let mut k = 0;
                for i in 1..=n {
                    for j in i + 1..=n {
                        for a in j + 1..=n {
                            for b in a + 1..=n {
                                let q = plucker_quadric(i, j, a, b).map_err(|e| e.to_string())?;
                                let init = initial_form(&q, &omega).map_err(|e| e.to_string())?;
                                if !init.equal_up_to_sign(&jt[k]) {
                                    return Err(format!("{}: {{{i},{j},{a},{b}}} gives {init}, not {}", t.to_newick(), jt[k]));
                                }
                                k += 1;
                            }
                        }
                    }
                }
            }
            for _ in 0..50 {
                let y: Vec<i128> = (0..t.edge_count()).map(|_| rng.gen_range(1..64)).collect();
                for g in &jt {
                    if phi_eval(&t, g, &y) != 0 {
                        return Err(format!("{}: {g} does not vanish", t.to_newick()));
                    }
                }
            }
        }
    }
    Ok(format!("{trees} circular trees with 4 to 8 leaves"))
}

fn criterion_4() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in 4..=12 {
        for _ in 0..20 {
            let t = random_tree(n, &mut rng);
            let rank = t.incidence_matrix().rank();
            if rank != 2 * n - 3 {
                return Err(format!("{}: rank {rank}", t.to_newick()));
            }
        }
    }
    Ok("180 random trees, rank 2n-3".into())
}

fn criterion_5() -> Result<String, String> {
    let printed = [
        "p_{1,6}p_{2,7}p_{3,8}p_{4,14}p_{5,15}",
        "p_{1,6}p_{2,7}p_{3,5}p_{4,14}p_{8,15}",
        "p_{1,6}p_{2,7}p_{3,5}p_{4,8}p_{14,15}",
    ];
    let t = parse_newick(FIFTEEN).map_err(|e| e.to_string())?;
    let w = linear_occurrence_witness(&t, 4, 14).map_err(|e| e.to_string())?;
    if !matches!(w.case, WitnessCase::MinimalSplit { .. }) {
        return Err(format!("unexpected case {:?}", w.case));
    }
    let got: Vec<BTreeSet<PluckerVar>> = w.chain.iter().map(|m| m.vars().iter().copied().collect()).collect();
    let want: Vec<BTreeSet<PluckerVar>> = printed
        .iter()
        .map(|s| parse_printed(s).terms().next().unwrap().vars().iter().copied().collect())
        .collect();
    if got != want {
        return Err(format!("chain {:?}", w.chain.iter().map(|m| m.compact()).collect::<Vec<_>>()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let lengths = random_lengths(w.tree.edge_count(), &mut rng);
        let weights = w.chain_weights(&lengths).map_err(|e| e.to_string())?;
        if weights.iter().any(|x| *x != weights[0]) {
            return Err("chain weights differ".into());
        }
    }
    Ok("three printed monomials, equal weight under 20 random lengths".into())
}

fn base_search(newick: &str, seed: u64) -> Result<WitnessCertificate, String> {
    let t = parse_newick(newick).map_err(|e| e.to_string())?;
    let mut opts = SearchOptions::new(expected_bound(t.leaf_count()), seed);
    opts.balanced = true;
    opts.max_iters = 100_000;
    search_witness(&t, &opts).map_err(|f| format!("{newick}: no witness in {} iterations", f.iterations))
}

fn criterion_6() -> Result<String, String> {
    let mut notes = Vec::new();
    for (newick, half) in [(SNOWFLAKE, 7), (FOUR_CHERRIES, 11)] {
        let cert = base_search(newick, 0)?;
        if (cert.rank1, cert.rank2) != (half, half) {
            return Err(format!("{newick}: ranks ({}, {})", cert.rank1, cert.rank2));
        }
        let report = verify_certificate(&cert.to_json()).map_err(|e| e.to_string())?;
        if !report.is_valid() {
            return Err(format!("{newick}: {:?}", report.mismatch));
        }
        if base_search(newick, cert.seed)? != cert {
            return Err(format!("{newick}: search is not reproducible"));
        }
        notes.push(format!("({half},{half}) in {} iterations", cert.iterations));
    }
    Ok(notes.join(", "))
}

fn criterion_7() -> Result<String, String> {
    let bases = vec![base_search(SNOWFLAKE, 0)?, base_search(FOUR_CHERRIES, 0)?];
    let mut trees = 0;
    for n in 6..=12 {
        for t in tree_shapes(n) {
            let c = t.cherries().len();
            if c != 3 && c != 4 {
                continue;
            }
            trees += 1;
            let chain = lift_chain(&t, &bases, 7).map_err(|e| format!("{}: {e}", t.to_newick()))?;
            for s in &chain.steps {
                let half = 2 * s.leaves - 5;
                if (s.rank1, s.rank2) != (half, half) {
                    return Err(format!("{}: step to {} leaves gave ({}, {})", t.to_newick(), s.leaves, s.rank1, s.rank2));
                }
            }
            if chain.certificate.bound != expected_bound(n) {
                return Err(format!("{}: bound {}", t.to_newick(), chain.certificate.bound));
            }
            let report = verify_certificate(&chain.certificate.to_json()).map_err(|e| e.to_string())?;
            if !report.is_valid() {
                return Err(format!("{}: {:?}", t.to_newick(), report.mismatch));
            }
        }
    }
    Ok(format!("{trees} tree shapes lifted to 4n-10"))
}

fn criterion_8() -> Result<String, String> {
    let mut checked = 0;
    for n in 4..=11 {
        for t in tree_shapes(n) {
            let c = t.cherries().len();
            let want_equal = c <= 4 && n <= 10;
            let want_short = c == 5;
            if !want_equal && !want_short {
                continue;
            }
            checked += 1;
            let jac = jacobian_secant_dim(&t, 2, DEFAULT_PRIME, 0, 3).map_err(|e| e.to_string())?;
            if want_equal && jac.rank != 4 * n - 10 {
                return Err(format!("{}: rank {} with {c} cherries", t.to_newick(), jac.rank));
            }
            if want_short && jac.rank > 4 * n - 11 {
                return Err(format!("{}: rank {} with 5 cherries", t.to_newick(), jac.rank));
            }
        }
    }
    Ok(format!("{checked} tree shapes"))
}

fn criterion_9() -> Result<String, String> {
    let t = parse_newick(FIGURE_TREE).map_err(|e| e.to_string())?;
    let counts = cluster_counts(&t);
    if counts.get(&2) != Some(&5) || counts.get(&3) != Some(&3) {
        return Err(format!("cluster counts {counts:?}"));
    }
    let bound = cluster_bound(&t, 3);
    let expected = expected_secant_dim(13, 3);
    if (bound, expected) != (56, 57) {
        return Err(format!("cluster bound {bound}, expected dimension {expected}"));
    }
    let rep = dimension_report(&t, 3, DEFAULT_PRIME, 0, 3).map_err(|e| e.to_string())?;
    if rep.equality_verdict != Verdict::StrictlySmaller {
        return Err(format!("verdict {}", rep.equality_verdict.as_str()));
    }
    Ok(format!(
        "cluster bound 56 < expected 57, jacobian {}; printed 66/67 not reproducible from the formulas",
        rep.jacobian_dim
    ))
}

fn criterion_10() -> Result<String, String> {
    let mut findings = Vec::new();
    let mut decisive = 0;
    for r in [2usize, 3] {
        for n in 4..=9 {
            for t in tree_shapes(n) {
                let jac = jacobian_secant_dim(&t, r, DEFAULT_PRIME, 0, 3).map_err(|e| e.to_string())?;
                let expected = expected_secant_dim(n, r);
                let verdict = equality_verdict(
                    jac.rank,
                    expected,
                    plucker_tree::dimension::cherry_bound(&t, r),
                    cluster_bound(&t, r),
                );
                if verdict == Verdict::Undetermined {
                    continue;
                }
                decisive += 1;
                let pred = conjecture_predicate(&t, r);
                if pred.non_strict != (verdict == Verdict::Equal) {
                    let line = format!(
                        "r={r} {}: sum {} vs {}, jacobian {} of {}, verdict {}",
                        t.to_newick(),
                        pred.sum,
                        pred.threshold,
                        jac.rank,
                        expected,
                        verdict.as_str()
                    );
                    if r == 2 {
                        return Err(line);
                    }
                    findings.push(line);
                }
            }
        }
    }
    for f in &findings {
        println!("    finding: {f}");
    }
    Ok(format!("{decisive} decisive cases, {} r=3 findings", findings.len()))
}

type Criterion = fn() -> Result<String, String>;

fn main() {
    let criteria: [(&str, Criterion, Option<Duration>); 10] = [
        ("Pfaffian squared equals determinant", criterion_1, Some(Duration::from_secs(5))),
        ("golden six-set initial forms", criterion_2, None),
        ("quadric initial forms are quartet binomials", criterion_3, Some(Duration::from_secs(30))),
        ("tree-metric matrix has rank 2n-3", criterion_4, None),
        ("fifteen-leaf linear occurrence chain", criterion_5, None),
        ("base witnesses (7,7) and (11,11)", criterion_6, Some(Duration::from_secs(60))),
        ("lifting chain to 4n-10", criterion_7, None),
        ("second secant dimension for few cherries", criterion_8, Some(Duration::from_secs(300))),
        ("thirteen-leaf cluster bound arbitration", criterion_9, None),
        ("cluster predicate sweep", criterion_10, None),
    ];
    let mut failures = 0;
    for (idx, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(limit)) if elapsed > *limit => Err(format!("took {elapsed:.1?}, limit {limit:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{elapsed:.2?}]", idx + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{elapsed:.2?}]", idx + 1);
            }
        }
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 10 acceptance criteria passed");
}
