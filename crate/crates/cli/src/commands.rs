use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use plucker_tree::dimension::{self, DimensionReport, Verdict};
use plucker_tree::draisma::{
    self, CertificateJson, DraismaError, LiftOptions, SearchOptions, WitnessCertificate, SCHEMA_VERSION,
};
use plucker_tree::pfaffian;
use plucker_tree::tree::{circular_embed, parse_newick_with, tree_shapes, Label, ParseOptions, ParsedNewick};
use plucker_tree::PhyloTree;
use serde::Serialize;

use crate::{read_input, Cli, CliError, Command, Format};

/// Output text, or an error plus whatever report was produced before it.
pub type RunResult = Result<String, (CliError, Option<String>)>;

pub fn run(cli: &Cli) -> RunResult {
    let plain = |r: Result<String, CliError>| r.map_err(|e| (e, None));
    match &cli.command {
        Command::TreeInfo { tree, suppress_degree_two } => plain(tree_info(cli, tree, *suppress_degree_two)),
        Command::Generators { tree, secant } => plain(generators(cli, tree, *secant)),
        Command::DraismaSearch { tree, target, max_iters, balanced } => {
            plain(draisma_search(cli, tree, *target, *max_iters, *balanced))
        }
        Command::DraismaLift { tree, lift_chain, bases, from, leaves } => {
            plain(draisma_lift(cli, tree, *lift_chain, bases, from.as_deref(), leaves.as_deref()))
        }
        Command::DraismaVerify { certificate } => draisma_verify(cli, certificate),
        Command::Dimension { tree, r, prime, trials } => plain(dimension_cmd(cli, tree, *r, *prime, *trials)),
        Command::ConjectureSweep { trees, orders, shapes, cherries, prime, trials } => plain(conjecture_sweep(
            cli,
            trees,
            orders,
            shapes.as_deref(),
            cherries,
            *prime,
            *trials,
        )),
    }
}

fn parse_tree_text(text: &str, suppress: bool, origin: &str) -> Result<ParsedNewick, CliError> {
    parse_newick_with(
        text.trim(),
        &ParseOptions {
            suppress_degree_two: suppress,
        },
    )
    .map_err(|e| CliError::Input(format!("{origin}: {e}")))
}

fn load_tree(path: &Path) -> Result<PhyloTree, CliError> {
    let text = read_input(path)?;
    Ok(parse_tree_text(&text, false, &path.display().to_string())?.tree)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct TreeInfo {
    schema_version: u32,
    n: usize,
    newick: String,
    /// Input names by label, when the input did not use `1..n`.
    #[serde(skip_serializing_if = "Option::is_none")]
    names: Option<Vec<String>>,
    circular: bool,
    circular_order: Vec<Label>,
    relabeling: Vec<Label>,
    splits: Vec<String>,
    cherries: Vec<[Label; 2]>,
    cluster_counts: BTreeMap<usize, usize>,
}

fn tree_info(cli: &Cli, path: &Path, suppress: bool) -> Result<String, CliError> {
    let text = read_input(path)?;
    let parsed = parse_tree_text(&text, suppress, &path.display().to_string())?;
    let t = &parsed.tree;
    let numeric = parsed.names.iter().enumerate().all(|(i, s)| *s == (i + 1).to_string());
    let counts = dimension::cluster_counts(t);
    let top = counts.keys().copied().max().unwrap_or(0).max(3);
    let table: BTreeMap<usize, usize> = (2..=top).map(|k| (k, counts.get(&k).copied().unwrap_or(0))).collect();
    let info = TreeInfo {
        schema_version: SCHEMA_VERSION,
        n: t.leaf_count(),
        newick: t.to_newick(),
        names: (!numeric).then(|| parsed.names.clone()),
        circular: t.is_circular(),
        circular_order: t.circular_order(),
        relabeling: circular_embed(t).relabeling().to_vec(),
        splits: t.nontrivial_splits().iter().map(|s| s.to_string()).collect(),
        cherries: t.cherries().iter().map(|&(a, b)| [a, b]).collect(),
        cluster_counts: table,
    };
    if cli.format == Format::Json {
        return Ok(to_json(&info));
    }
    let join = |v: &[Label]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let mut out = String::new();
    out.push_str(&format!("n: {}\n", info.n));
    out.push_str(&format!("newick: {}\n", info.newick));
    if let Some(names) = &info.names {
        let pairs: Vec<String> = names.iter().enumerate().map(|(i, s)| format!("{}={}", i + 1, s)).collect();
        out.push_str(&format!("names: {}\n", pairs.join(" ")));
    }
    out.push_str(&format!("circular: {}\n", if info.circular { "yes" } else { "no" }));
    out.push_str(&format!("circular order: {}\n", join(&info.circular_order)));
    out.push_str(&format!("relabeling: {}\n", join(&info.relabeling)));
    out.push_str(&format!("splits: {}\n", info.splits.join(" ")));
    let cherries: Vec<String> = info.cherries.iter().map(|[a, b]| format!("{{{a},{b}}}")).collect();
    out.push_str(&format!("cherries ({}): {}\n", cherries.len(), cherries.join(" ")));
    for (k, c) in &info.cluster_counts {
        out.push_str(&format!("c_{k} = {c}\n"));
    }
    Ok(out)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct GeneratorHeader {
    schema_version: u32,
    n: usize,
    secant: usize,
    seed: u64,
    relabeling: Vec<Label>,
    count: usize,
}

fn generators(cli: &Cli, path: &Path, secant: usize) -> Result<String, CliError> {
    if secant == 0 {
        return Err(CliError::Input("--secant must be at least 1".into()));
    }
    let input = load_tree(path)?;
    let embedding = circular_embed(&input);
    let (polys, relabeling) = if secant == 1 {
        let identity: Vec<Label> = (1..=input.leaf_count()).collect();
        (pfaffian::jt_generators(&input), identity)
    } else {
        let t = embedding.tree();
        let omega = pfaffian::generic_weights(t);
        let polys = pfaffian::initial_pfaffian_generators(t, secant, &omega)
            .map_err(|e| CliError::Input(e.to_string()))?;
        (polys, embedding.relabeling().to_vec())
    };
    let header = GeneratorHeader {
        schema_version: SCHEMA_VERSION,
        n: input.leaf_count(),
        secant,
        seed: cli.seed,
        relabeling,
        count: polys.len(),
    };
    let mut out = String::new();
    match cli.format {
        Format::Json => {
            out.push_str(&serde_json::to_string(&header).expect("serializable"));
            out.push('\n');
            for p in &polys {
                out.push_str(&serde_json::to_string(&p.to_json()).expect("serializable"));
                out.push('\n');
            }
        }
        Format::Text => {
            let rl: Vec<String> = header.relabeling.iter().map(|x| x.to_string()).collect();
            out.push_str(&format!(
                "# n={} secant={} seed={} count={} relabeling={}\n",
                header.n,
                secant,
                cli.seed,
                header.count,
                rl.join(",")
            ));
            for p in &polys {
                out.push_str(&p.to_string());
                out.push('\n');
            }
        }
    }
    Ok(out)
}

fn certificate_output(cert: &WitnessCertificate) -> String {
    to_json(&cert.to_json())
}

fn draisma_search(
    cli: &Cli,
    path: &Path,
    target: Option<usize>,
    max_iters: u64,
    balanced: bool,
) -> Result<String, CliError> {
    let t = load_tree(path)?;
    let target = target.unwrap_or_else(|| draisma::expected_bound(t.leaf_count()));
    let opts = SearchOptions {
        target,
        seed: cli.seed,
        max_iters,
        balanced,
    };
    match draisma::search_witness(&t, &opts) {
        Ok(cert) => {
            eprintln!(
                "found witness: rank1={} rank2={} bound={} after {} iterations",
                cert.rank1, cert.rank2, cert.bound, cert.iterations
            );
            Ok(certificate_output(&cert))
        }
        Err(f) => Err(CliError::Failed(format!(
            "no witness reaching {target} in {} iterations (best bound {})",
            f.iterations, f.best_bound
        ))),
    }
}

fn read_certificate(path: &Path) -> Result<CertificateJson, CliError> {
    let text = read_input(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Balanced base witnesses for three and four cherries, found by search.
fn search_bases(seed: u64) -> Result<Vec<WitnessCertificate>, CliError> {
    let snowflake = "((1,2),(3,4),(5,6));";
    let four = "(((1,2),(3,4)),((5,6),(7,8)));";
    [snowflake, four]
        .iter()
        .map(|nw| {
            let t = parse_tree_text(nw, false, "base")?.tree;
            let mut opts = SearchOptions::new(draisma::expected_bound(t.leaf_count()), seed);
            opts.balanced = true;
            draisma::search_witness(&t, &opts).map_err(|f| {
                CliError::Failed(format!(
                    "base search on {nw} failed after {} iterations (best bound {})",
                    f.iterations, f.best_bound
                ))
            })
        })
        .collect()
}

fn draisma_lift(
    cli: &Cli,
    path: &Path,
    chain: bool,
    bases: &[PathBuf],
    from: Option<&Path>,
    leaves: Option<&[usize]>,
) -> Result<String, CliError> {
    let t = load_tree(path)?;
    let failed = |e: draisma::DraismaError| match e {
        DraismaError::BadSideLeaves(_)
        | DraismaError::LeafInCherry(_)
        | DraismaError::NotRestriction
        | DraismaError::NoBase { .. }
        | DraismaError::BaseMismatch => CliError::Input(e.to_string()),
        _ => CliError::Failed(e.to_string()),
    };
    if chain {
        let bases = if bases.is_empty() {
            search_bases(cli.seed)?
        } else {
            bases
                .iter()
                .map(|p| {
                    WitnessCertificate::from_json(&read_certificate(p)?)
                        .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))
                })
                .collect::<Result<Vec<_>, _>>()?
        };
        let result = draisma::lift_chain(&t, &bases, cli.seed).map_err(failed)?;
        for s in &result.steps {
            eprintln!(
                "lifted to {} leaves: rank1={} rank2={} epsilon=2^-{}",
                s.leaves, s.rank1, s.rank2, s.epsilon_exponent
            );
        }
        return Ok(certificate_output(&result.certificate));
    }
    let from = from.ok_or_else(|| CliError::Input("give --lift-chain or --from <certificate>".into()))?;
    let base = WitnessCertificate::from_json(&read_certificate(from)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", from.display())))?;
    let n = t.leaf_count();
    let small = t
        .restrict(&(1..n).collect::<Vec<_>>())
        .map_err(|e| CliError::Input(e.to_string()))?
        .tree;
    let (_, edges) = draisma::find_leaf_isomorphism(&base.tree, &small)
        .ok_or_else(|| CliError::Input("certificate tree does not match the tree without its last leaf".into()))?;
    let w = draisma::transfer_witness(&base.pair, &edges);
    let leaves = match leaves {
        Some(&[a, b, c, d]) => Some([a, b, c, d]),
        Some(_) => return Err(CliError::Input("--leaves takes four labels".into())),
        None => None,
    };
    let report = draisma::lift_witness(&t, &small, &w, &LiftOptions { seed: cli.seed, leaves }).map_err(failed)?;
    eprintln!(
        "lifted with leaves {:?}: rank1={} rank2={} epsilon=2^-{}",
        report.leaves, report.rank1, report.rank2, report.epsilon_exponent
    );
    let cert = WitnessCertificate::build(t, report.pair, cli.seed, "lift", report.attempts as u64).map_err(failed)?;
    Ok(certificate_output(&cert))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct VerifyOutput {
    schema_version: u32,
    valid: bool,
    rank1: usize,
    rank2: usize,
    bound: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    mismatch: Option<String>,
}

fn draisma_verify(cli: &Cli, path: &Path) -> RunResult {
    let json = read_certificate(path).map_err(|e| (e, None))?;
    let report = draisma::verify_certificate(&json)
        .map_err(|e| (CliError::Input(format!("{}: {e}", path.display())), None))?;
    let out = VerifyOutput {
        schema_version: SCHEMA_VERSION,
        valid: report.is_valid(),
        rank1: report.rank1,
        rank2: report.rank2,
        bound: report.rank1 + report.rank2,
        mismatch: report.mismatch.clone(),
    };
    let text = match cli.format {
        Format::Json => to_json(&out),
        Format::Text => match &out.mismatch {
            None => format!("valid: rank1={} rank2={} bound={}\n", out.rank1, out.rank2, out.bound),
            Some(m) => format!("invalid: {m}\n"),
        },
    };
    match report.mismatch {
        None => Ok(text),
        Some(m) => Err((CliError::Failed(format!("certificate does not verify: {m}")), Some(text))),
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Versioned<T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    inner: T,
}

fn report_for(t: &PhyloTree, r: usize, prime: u64, seed: u64, trials: usize) -> Result<DimensionReport, CliError> {
    dimension::dimension_report(t, r, prime, seed, trials).map_err(|e| CliError::Input(e.to_string()))
}

fn dimension_cmd(cli: &Cli, path: &Path, r: usize, prime: u64, trials: usize) -> Result<String, CliError> {
    let t = load_tree(path)?;
    let rep = report_for(&t, r, prime, cli.seed, trials)?;
    if cli.format == Format::Json {
        return Ok(to_json(&Versioned {
            schema_version: SCHEMA_VERSION,
            inner: rep,
        }));
    }
    let counts: Vec<String> = rep.cluster_counts.iter().map(|(k, c)| format!("c_{k}={c}")).collect();
    let ranks: Vec<String> = rep.trial_ranks.iter().map(|x| x.to_string()).collect();
    let mut out = String::new();
    out.push_str(&format!("newick: {}\n", rep.newick));
    out.push_str(&format!("n: {}  r: {}\n", rep.n, rep.r));
    out.push_str(&format!("clusters: {}\n", counts.join(" ")));
    out.push_str(&format!("expected dimension: {}\n", rep.expected_pfaffian_dim));
    out.push_str(&format!("cherry bound: {}\n", rep.cherry_bound));
    out.push_str(&format!("cluster bound: {}\n", rep.cluster_bound));
    out.push_str(&format!(
        "jacobian dimension: {} (trials {}; prime {}; seed {})\n",
        rep.jacobian_dim,
        ranks.join(","),
        rep.prime,
        rep.seed
    ));
    out.push_str(&format!("verdict: {}\n", rep.equality_verdict.as_str()));
    out.push_str(&format!(
        "cluster sum: {} vs threshold {} (strict {}, non-strict {})\n",
        rep.conjecture.sum, rep.conjecture.threshold, rep.conjecture.strict, rep.conjecture.non_strict
    ));
    Ok(out)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SweepRow {
    source: String,
    newick: String,
    n: usize,
    r: usize,
    cherries: usize,
    cluster_sum: usize,
    threshold: usize,
    expected: usize,
    jacobian: usize,
    verdict: Verdict,
    /// Strict predicate holds exactly when the verdict is `equal`.
    agrees_strict: bool,
    agrees_non_strict: bool,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SweepOutput {
    schema_version: u32,
    seed: u64,
    prime: u64,
    trials: usize,
    rows: Vec<SweepRow>,
    disagreements_strict: usize,
    disagreements_non_strict: usize,
}

fn parse_range(range: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Input(format!("bad --shapes range `{range}`; use `N` or `A..B`"));
    let (a, b) = match range.split_once("..") {
        Some((a, b)) => {
            let inclusive = b.strip_prefix('=');
            let a: usize = a.trim().parse().map_err(|_| bad())?;
            match inclusive {
                Some(b) => (a, b.trim().parse().map_err(|_| bad())?),
                None => {
                    let b: usize = b.trim().parse().map_err(|_| bad())?;
                    (a, b.checked_sub(1).ok_or_else(bad)?)
                }
            }
        }
        None => {
            let n = range.trim().parse().map_err(|_| bad())?;
            (n, n)
        }
    };
    if a < 4 || b < a || b > 14 {
        return Err(CliError::Input(format!("--shapes range `{range}` must lie within 4..=14")));
    }
    Ok((a, b))
}

fn conjecture_sweep(
    cli: &Cli,
    files: &[PathBuf],
    orders: &[usize],
    shapes: Option<&str>,
    cherry_filter: &[usize],
    prime: u64,
    trials: usize,
) -> Result<String, CliError> {
    let mut trees: Vec<(String, PhyloTree)> = Vec::new();
    for path in files {
        let text = read_input(path)?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let origin = format!("{}:{}", path.display(), lineno + 1);
            let t = parse_tree_text(line, false, &origin)?.tree;
            trees.push((origin, t));
        }
    }
    if let Some(range) = shapes {
        let (a, b) = parse_range(range)?;
        for n in a..=b {
            for (i, t) in tree_shapes(n).into_iter().enumerate() {
                trees.push((format!("shape:{n}:{i}"), t));
            }
        }
    }
    if trees.is_empty() {
        return Err(CliError::Input("no trees: give Newick files or --shapes".into()));
    }
    let mut rows = Vec::new();
    for (source, t) in &trees {
        let cherries = t.cherries().len();
        if !cherry_filter.is_empty() && !cherry_filter.contains(&cherries) {
            continue;
        }
        for &r in orders {
            let rep = report_for(t, r, prime, cli.seed, trials)?;
            let equal = rep.equality_verdict == Verdict::Equal;
            rows.push(SweepRow {
                source: source.clone(),
                newick: rep.newick,
                n: rep.n,
                r,
                cherries,
                cluster_sum: rep.conjecture.sum,
                threshold: rep.conjecture.threshold,
                expected: rep.expected_pfaffian_dim,
                jacobian: rep.jacobian_dim,
                verdict: rep.equality_verdict,
                agrees_strict: rep.conjecture.strict == equal,
                agrees_non_strict: rep.conjecture.non_strict == equal,
            });
        }
    }
    let out = SweepOutput {
        schema_version: SCHEMA_VERSION,
        seed: cli.seed,
        prime,
        trials,
        disagreements_strict: rows.iter().filter(|r| !r.agrees_strict).count(),
        disagreements_non_strict: rows.iter().filter(|r| !r.agrees_non_strict).count(),
        rows,
    };
    if cli.format == Format::Json {
        return Ok(to_json(&out));
    }
    let mut s = format!("# seed={} prime={} trials={}\n", out.seed, out.prime, out.trials);
    s.push_str("source\tn\tr\tcherries\tsum\tthreshold\texpected\tjacobian\tverdict\tstrict\tnon-strict\tnewick\n");
    let mark = |b: bool| if b { "agree" } else { "DISAGREE" };
    for row in &out.rows {
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            row.source,
            row.n,
            row.r,
            row.cherries,
            row.cluster_sum,
            row.threshold,
            row.expected,
            row.jacobian,
            row.verdict.as_str(),
            mark(row.agrees_strict),
            mark(row.agrees_non_strict),
            row.newick
        ));
    }
    s.push_str(&format!(
        "# rows={} strict disagreements={} non-strict disagreements={}\n",
        out.rows.len(),
        out.disagreements_strict,
        out.disagreements_non_strict
    ));
    Ok(s)
}
