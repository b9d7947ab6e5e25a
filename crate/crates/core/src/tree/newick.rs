//! Newick input.
//!
//! Leaf names that are exactly the integers `1..=n` are used as labels;
//! any other naming is mapped to `1..=n` in order of appearance. Branch
//! lengths, internal node names and `[...]` comments are skipped.
//!
//! A root with two children is how a rooted binary Newick string encodes an
//! unrooted tree, so it is always suppressed. Any other vertex of degree two
//! (a node with one child) is rejected unless
//! [`ParseOptions::suppress_degree_two`] is set.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{Label, PhyloTree, TreeError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NewickError {
    #[error("parse error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("leaf name `{0}` appears more than once")]
    DuplicateLabel(String),
    #[error("leaf without a name at byte {0}")]
    UnnamedLeaf(usize),
    #[error("vertex with {degree} neighbours is not binary")]
    NonBinary { degree: usize },
    #[error("degree-two vertex at byte {0}; enable suppression to collapse it")]
    DegreeTwo(usize),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

impl NewickError {
    pub fn position(&self) -> Option<usize> {
        match self {
            NewickError::Syntax { position, .. } => Some(*position),
            NewickError::UnnamedLeaf(p) | NewickError::DegreeTwo(p) => Some(*p),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOptions {
    /// Collapse one-child nodes instead of rejecting them.
    pub suppress_degree_two: bool,
}

#[derive(Clone, Debug)]
pub struct ParsedNewick {
    pub tree: PhyloTree,
    /// `names[label - 1]` is the name the leaf had in the input.
    pub names: Vec<String>,
}

pub fn parse_newick(text: &str) -> Result<PhyloTree, NewickError> {
    parse_newick_with(text, &ParseOptions::default()).map(|p| p.tree)
}

struct Node {
    name: Option<String>,
    children: Vec<usize>,
    position: usize,
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    nodes: Vec<Node>,
}

impl<'a> Parser<'a> {
    fn error(&self, message: impl Into<String>) -> NewickError {
        NewickError::Syntax {
            position: self.pos,
            message: message.into(),
        }
    }

    fn skip_blank(&mut self) -> Result<(), NewickError> {
        loop {
            match self.bytes.get(self.pos) {
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(b'[') => {
                    let start = self.pos;
                    while self.bytes.get(self.pos).is_some_and(|&b| b != b']') {
                        self.pos += 1;
                    }
                    if self.pos >= self.bytes.len() {
                        self.pos = start;
                        return Err(self.error("unterminated comment"));
                    }
                    self.pos += 1;
                }
                _ => return Ok(()),
            }
        }
    }

    fn peek(&mut self) -> Result<Option<u8>, NewickError> {
        self.skip_blank()?;
        Ok(self.bytes.get(self.pos).copied())
    }

    fn name(&mut self) -> Result<Option<String>, NewickError> {
        self.skip_blank()?;
        if self.bytes.get(self.pos) == Some(&b'\'') {
            self.pos += 1;
            let start = self.pos;
            while self.bytes.get(self.pos).is_some_and(|&b| b != b'\'') {
                self.pos += 1;
            }
            if self.pos >= self.bytes.len() {
                return Err(self.error("unterminated quoted name"));
            }
            let name = String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned();
            self.pos += 1;
            return Ok(Some(name));
        }
        let start = self.pos;
        while let Some(&b) = self.bytes.get(self.pos) {
            if b"(),:;[".contains(&b) || b.is_ascii_whitespace() {
                break;
            }
            self.pos += 1;
        }
        Ok((self.pos > start).then(|| String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned()))
    }

    fn branch_length(&mut self) -> Result<(), NewickError> {
        if self.peek()? == Some(b':') {
            self.pos += 1;
            self.skip_blank()?;
            let start = self.pos;
            while self
                .bytes
                .get(self.pos)
                .is_some_and(|&b| b.is_ascii_digit() || b"+-.eE".contains(&b))
            {
                self.pos += 1;
            }
            let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap_or("");
            if text.parse::<f64>().is_err() {
                self.pos = start;
                return Err(self.error("malformed branch length"));
            }
        }
        Ok(())
    }

    fn subtree(&mut self) -> Result<usize, NewickError> {
        let position = self.pos;
        let mut children = Vec::new();
        if self.peek()? == Some(b'(') {
            self.pos += 1;
            loop {
                children.push(self.subtree()?);
                match self.peek()? {
                    Some(b',') => self.pos += 1,
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.error("expected `,` or `)`")),
                }
            }
        }
        let name = self.name()?;
        self.branch_length()?;
        self.nodes.push(Node {
            name,
            children,
            position,
        });
        Ok(self.nodes.len() - 1)
    }
}

/// Parses a Newick string into a validated binary tree.
pub fn parse_newick_with(text: &str, options: &ParseOptions) -> Result<ParsedNewick, NewickError> {
    let mut parser = Parser {
        bytes: text.as_bytes(),
        pos: 0,
        nodes: Vec::new(),
    };
    if parser.peek()?.is_none() {
        return Err(parser.error("empty input"));
    }
    let root = parser.subtree()?;
    if parser.peek()? != Some(b';') {
        return Err(parser.error("expected `;`"));
    }
    parser.pos += 1;
    if parser.peek()?.is_some() {
        return Err(parser.error("trailing input after `;`"));
    }
    let nodes = parser.nodes;

    // Leaves and their labels.
    let mut leaf_nodes = Vec::new();
    let mut seen = BTreeSet::new();
    for (id, node) in nodes.iter().enumerate() {
        if node.children.is_empty() {
            let name = node.name.clone().ok_or(NewickError::UnnamedLeaf(node.position))?;
            if !seen.insert(name.clone()) {
                return Err(NewickError::DuplicateLabel(name));
            }
            leaf_nodes.push((id, name));
        }
    }
    let n = leaf_nodes.len();
    let numeric: Option<Vec<Label>> = leaf_nodes
        .iter()
        .map(|(_, name)| name.parse::<Label>().ok().filter(|&l| l >= 1 && l <= n))
        .collect();
    let labels: Vec<Label> = match numeric {
        Some(ls) => ls,
        None => (1..=n).collect(),
    };
    let mut names = vec![String::new(); n];
    let mut vertex_of = BTreeMap::new();
    for ((id, name), &label) in leaf_nodes.iter().zip(&labels) {
        names[label - 1] = name.clone();
        vertex_of.insert(*id, label - 1);
    }

    // Undirected graph over parsed nodes; leaves keep their label slots.
    let mut adjacency: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (id, node) in nodes.iter().enumerate() {
        adjacency.entry(id).or_default();
        for &c in &node.children {
            adjacency.entry(id).or_default().insert(c);
            adjacency.entry(c).or_default().insert(id);
        }
    }
    // Collapse the root first, then one-child nodes.
    let mut root_id = root;
    if nodes[root].children.len() == 1 {
        if !options.suppress_degree_two {
            return Err(NewickError::DegreeTwo(nodes[root].position));
        }
        let child = nodes[root].children[0];
        adjacency.remove(&root);
        adjacency.get_mut(&child).expect("child").remove(&root);
        root_id = child;
    }
    let internal: Vec<usize> = adjacency
        .keys()
        .copied()
        .filter(|id| !nodes[*id].children.is_empty())
        .collect();
    for id in internal {
        let degree = adjacency[&id].len();
        match degree {
            3 => {}
            2 => {
                if id != root_id && !options.suppress_degree_two {
                    return Err(NewickError::DegreeTwo(nodes[id].position));
                }
                let nbrs: Vec<usize> = adjacency[&id].iter().copied().collect();
                adjacency.remove(&id);
                for &x in &nbrs {
                    adjacency.get_mut(&x).expect("neighbor").remove(&id);
                }
                adjacency.get_mut(&nbrs[0]).expect("neighbor").insert(nbrs[1]);
                adjacency.get_mut(&nbrs[1]).expect("neighbor").insert(nbrs[0]);
            }
            d => return Err(NewickError::NonBinary { degree: d }),
        }
    }
    if n < 3 {
        return Err(TreeError::TooFewLeaves(n).into());
    }
    let mut next = n;
    for &id in adjacency.keys() {
        if let std::collections::btree_map::Entry::Vacant(e) = vertex_of.entry(id) {
            e.insert(next);
            next += 1;
        }
    }
    let mut edges = Vec::new();
    for (&id, nbrs) in &adjacency {
        for &other in nbrs {
            if id < other {
                edges.push([vertex_of[&id], vertex_of[&other]]);
            }
        }
    }
    edges.sort_unstable();
    let tree = PhyloTree::from_edges(n, edges)?;
    Ok(ParsedNewick { tree, names })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_quartet() {
        let t = parse_newick("((1,2),(3,4));").unwrap();
        assert_eq!(t.leaf_count(), 4);
        let splits: Vec<String> = t.nontrivial_splits().iter().map(|s| s.to_string()).collect();
        assert_eq!(splits, ["12|34"]);
    }

    #[test]
    fn snowflake_as_rooted_string() {
        let t = parse_newick("((1,2),((3,4),(5,6)));").unwrap();
        let splits: Vec<String> = t.nontrivial_splits().iter().map(|s| s.to_string()).collect();
        assert_eq!(splits, ["12|3456", "34|1256", "56|1234"]);
    }

    #[test]
    fn two_child_root_is_collapsed() {
        let t = parse_newick("(1,(2,(3,4)));").unwrap();
        assert_eq!(t.nontrivial_splits()[0].to_string(), "12|34");
    }

    #[test]
    fn unary_nodes_need_the_flag() {
        let text = "((1),2,(3,4));";
        assert!(matches!(parse_newick(text), Err(NewickError::DegreeTwo(_))));
        let opts = ParseOptions {
            suppress_degree_two: true,
        };
        let t = parse_newick_with(text, &opts).unwrap().tree;
        assert_eq!(t.leaf_count(), 4);
        assert!(matches!(parse_newick("((1,2,3));"), Err(NewickError::DegreeTwo(_))));
        assert_eq!(parse_newick_with("((1,2,3));", &opts).unwrap().tree.leaf_count(), 3);
    }

    #[test]
    fn names_lengths_and_comments() {
        let parsed = parse_newick_with(
            "((human:0.1,chimp:0.2)90:0.5,[note] gorilla, 'orang utan':1e-2);",
            &ParseOptions::default(),
        )
        .unwrap();
        assert_eq!(parsed.names, ["human", "chimp", "gorilla", "orang utan"]);
        assert_eq!(parsed.tree.cherries()[0], (1, 2));
    }

    #[test]
    fn numeric_labels_are_kept() {
        let parsed = parse_newick_with("((4,2),(3,1));", &ParseOptions::default()).unwrap();
        assert_eq!(parsed.names, ["1", "2", "3", "4"]);
        assert_eq!(parsed.tree.cherries(), vec![(1, 3), (2, 4)]);
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse_newick("((1,2),(3,4);").unwrap_err();
        assert!(matches!(err, NewickError::Syntax { .. }));
        assert_eq!(err.position(), Some(12));
        assert!(matches!(parse_newick("((1,2),(3,1));"), Err(NewickError::DuplicateLabel(_))));
        assert!(matches!(parse_newick("((1,2),(3,4,5));"), Err(NewickError::NonBinary { degree: 4 })));
        assert!(matches!(parse_newick("((1,2),(,4));"), Err(NewickError::UnnamedLeaf(_))));
        assert!(matches!(parse_newick("(1,2);"), Err(NewickError::Tree(TreeError::TooFewLeaves(2)))));
        assert!(parse_newick("").is_err());
        assert!(parse_newick("((1,2),(3,4)); x").is_err());
    }
}
