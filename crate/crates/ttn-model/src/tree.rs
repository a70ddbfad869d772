//! Ordered trees with labeled leaves, plus per-node dimensions and ranks.
//!
//! The text form is `tree = leaf | "[" tree ("," tree)+ "]"` with positive
//! integer leaf labels, e.g. `[[1,3,5],[4,2],6]`. A node is named by the text
//! of its subtree, which is how diagnostics and reports refer to it.

use crate::error::ModelError;
use std::collections::BTreeMap;
use std::fmt;

/// Ordered tree: a leaf label or at least two child trees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tree {
    Leaf(usize),
    Internal(Vec<Tree>),
}

impl Tree {
    pub fn is_leaf(&self) -> bool {
        matches!(self, Tree::Leaf(_))
    }

    pub fn height(&self) -> usize {
        match self {
            Tree::Leaf(_) => 0,
            Tree::Internal(children) => {
                1 + children.iter().map(Tree::height).max().unwrap_or(0)
            }
        }
    }

    /// Leaf labels in left-to-right tree order.
    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<usize>) {
        match self {
            Tree::Leaf(label) => out.push(*label),
            Tree::Internal(children) => {
                for c in children {
                    c.collect_leaves(out);
                }
            }
        }
    }

    /// Number of vertices (leaves plus internal nodes).
    pub fn node_count(&self) -> usize {
        match self {
            Tree::Leaf(_) => 1,
            Tree::Internal(children) => 1 + children.iter().map(Tree::node_count).sum::<usize>(),
        }
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tree::Leaf(label) => write!(f, "{label}"),
            Tree::Internal(children) => {
                write!(f, "[")?;
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// Parses the bracket grammar and checks the structural tree invariants
/// (≥ 2 children per internal node, pairwise distinct leaf labels).
pub fn parse_tree(text: &str) -> Result<Tree, ModelError> {
    let bytes = text.as_bytes();
    let mut pos = 0;
    let tree = parse_node(bytes, &mut pos)?;
    skip_ws(bytes, &mut pos);
    if pos != bytes.len() {
        return Err(ModelError::Parse {
            position: pos,
            message: "trailing input after tree".into(),
        });
    }
    let mut seen = std::collections::BTreeSet::new();
    for label in tree.leaves() {
        if !seen.insert(label) {
            return Err(ModelError::validation(format!(
                "duplicate leaf {label}: leaf labels must be pairwise distinct"
            )));
        }
    }
    Ok(tree)
}

fn skip_ws(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
}

fn parse_node(bytes: &[u8], pos: &mut usize) -> Result<Tree, ModelError> {
    skip_ws(bytes, pos);
    match bytes.get(*pos) {
        Some(b'[') => {
            let open = *pos;
            *pos += 1;
            let mut children = vec![parse_node(bytes, pos)?];
            loop {
                skip_ws(bytes, pos);
                match bytes.get(*pos) {
                    Some(b',') => {
                        *pos += 1;
                        children.push(parse_node(bytes, pos)?);
                    }
                    Some(b']') => {
                        *pos += 1;
                        break;
                    }
                    _ => {
                        return Err(ModelError::Parse {
                            position: *pos,
                            message: "expected ',' or ']'".into(),
                        })
                    }
                }
            }
            if children.len() < 2 {
                return Err(ModelError::Parse {
                    position: open,
                    message: "internal node needs at least two children".into(),
                });
            }
            Ok(Tree::Internal(children))
        }
        Some(c) if c.is_ascii_digit() => {
            let start = *pos;
            while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
                *pos += 1;
            }
            let label: usize = text_slice(bytes, start, *pos).parse().map_err(|_| {
                ModelError::Parse { position: start, message: "leaf label out of range".into() }
            })?;
            if label == 0 {
                return Err(ModelError::Parse {
                    position: start,
                    message: "leaf labels are positive integers".into(),
                });
            }
            Ok(Tree::Leaf(label))
        }
        _ => Err(ModelError::Parse {
            position: *pos,
            message: "expected leaf label or '['".into(),
        }),
    }
}

fn text_slice(bytes: &[u8], start: usize, end: usize) -> &str {
    std::str::from_utf8(&bytes[start..end]).unwrap()
}

/// Leaf dimensions: one value for every leaf, or a per-label map.
#[derive(Debug, Clone)]
pub enum DimSpec {
    Uniform(usize),
    PerLeaf(BTreeMap<usize, usize>),
}

/// Subtree ranks: one value for every non-root subtree, or a map keyed by the
/// subtree's text form (e.g. `[4,2]` or `6`). The root rank is always 1.
#[derive(Debug, Clone)]
pub enum RankSpec {
    Uniform(usize),
    PerNode(BTreeMap<String, usize>),
}

/// A tree with dimensions at the leaves and a rank at every subtree,
/// validated against the rank feasibility conditions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedTree {
    root: RankedNode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RankedNode {
    Leaf { label: usize, dim: usize, rank: usize },
    Internal { rank: usize, children: Vec<RankedNode> },
}

impl RankedNode {
    pub fn rank(&self) -> usize {
        match self {
            RankedNode::Leaf { rank, .. } => *rank,
            RankedNode::Internal { rank, .. } => *rank,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, RankedNode::Leaf { .. })
    }

    /// Product of the leaf dimensions below this node.
    pub fn dense_entries(&self) -> u128 {
        match self {
            RankedNode::Leaf { dim, .. } => *dim as u128,
            RankedNode::Internal { children, .. } => {
                children.iter().map(RankedNode::dense_entries).product()
            }
        }
    }

    pub fn tree(&self) -> Tree {
        match self {
            RankedNode::Leaf { label, .. } => Tree::Leaf(*label),
            RankedNode::Internal { children, .. } => {
                Tree::Internal(children.iter().map(RankedNode::tree).collect())
            }
        }
    }

    pub fn name(&self) -> String {
        self.tree().to_string()
    }

    /// Leaf dimensions below this node, in left-to-right tree order.
    pub fn leaf_dims(&self) -> Vec<usize> {
        match self {
            RankedNode::Leaf { dim, .. } => vec![*dim],
            RankedNode::Internal { children, .. } => {
                children.iter().flat_map(RankedNode::leaf_dims).collect()
            }
        }
    }

    fn validate(&self, is_root: bool) -> Result<(), ModelError> {
        match self {
            RankedNode::Leaf { label, dim, rank } => {
                if *dim == 0 || *rank == 0 {
                    return Err(ModelError::validation(format!(
                        "leaf {label}: dims and ranks must be positive"
                    )));
                }
                if *rank > *dim {
                    return Err(ModelError::validation(format!(
                        "leaf {label}: rank {rank} exceeds dimension {dim}"
                    )));
                }
                if is_root {
                    return Err(ModelError::validation(
                        "a single leaf is not a valid tree network",
                    ));
                }
            }
            RankedNode::Internal { rank, children } => {
                if *rank == 0 {
                    return Err(ModelError::validation(format!(
                        "node {}: ranks must be positive",
                        self.name()
                    )));
                }
                if is_root && *rank != 1 {
                    return Err(ModelError::validation(format!(
                        "root rank must be 1, got {rank}"
                    )));
                }
                let child_ranks: Vec<usize> = children.iter().map(RankedNode::rank).collect();
                let product: u128 = child_ranks.iter().map(|&r| r as u128).product();
                if (*rank as u128) > product {
                    return Err(ModelError::validation(format!(
                        "node {}: rank {rank} exceeds the product {product} of its child ranks",
                        self.name()
                    )));
                }
                for (i, &ri) in child_ranks.iter().enumerate() {
                    let others: u128 = child_ranks
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, &r)| r as u128)
                        .product();
                    if ri as u128 > *rank as u128 * others {
                        return Err(ModelError::validation(format!(
                            "node {}: child {} rank {ri} is infeasible against the sibling ranks",
                            self.name(),
                            i
                        )));
                    }
                }
                for c in children {
                    c.validate(false)?;
                }
            }
        }
        Ok(())
    }
}

impl RankedTree {
    /// Attaches dims and ranks to a parsed tree and validates feasibility.
    pub fn new(tree: &Tree, dims: &DimSpec, ranks: &RankSpec) -> Result<Self, ModelError> {
        let root = annotate(tree, dims, ranks, true)?;
        let ranked = RankedTree { root };
        ranked.root.validate(true)?;
        Ok(ranked)
    }

    pub fn root(&self) -> &RankedNode {
        &self.root
    }

    pub fn tree(&self) -> Tree {
        self.root.tree()
    }

    pub fn height(&self) -> usize {
        self.tree().height()
    }

    pub fn dense_entries(&self) -> u128 {
        self.root.dense_entries()
    }

    /// Leaf dimensions in left-to-right tree order.
    pub fn leaf_dims(&self) -> Vec<usize> {
        self.root.leaf_dims()
    }

    /// Total entries stored across all basis matrices and connection tensors.
    pub fn storage_entries(&self) -> usize {
        fn walk(node: &RankedNode) -> usize {
            match node {
                RankedNode::Leaf { dim, rank, .. } => dim * rank,
                RankedNode::Internal { rank, children } => {
                    let core: usize = rank * children.iter().map(|c| c.rank()).product::<usize>();
                    core + children.iter().map(walk).sum::<usize>()
                }
            }
        }
        walk(&self.root)
    }
}

fn annotate(
    tree: &Tree,
    dims: &DimSpec,
    ranks: &RankSpec,
    is_root: bool,
) -> Result<RankedNode, ModelError> {
    match tree {
        Tree::Leaf(label) => {
            let dim = match dims {
                DimSpec::Uniform(n) => *n,
                DimSpec::PerLeaf(map) => *map.get(label).ok_or_else(|| {
                    ModelError::validation(format!("dims: no entry for leaf {label}"))
                })?,
            };
            let rank = lookup_rank(&Tree::Leaf(*label).to_string(), ranks)?;
            Ok(RankedNode::Leaf { label: *label, dim, rank })
        }
        Tree::Internal(children) => {
            let rank = if is_root {
                match ranks {
                    // The root may appear in a rank map, but only with rank 1.
                    RankSpec::PerNode(map) => match map.get(&tree.to_string()) {
                        Some(1) | None => 1,
                        Some(r) => {
                            return Err(ModelError::validation(format!(
                                "ranks: root rank must be 1, got {r}"
                            )))
                        }
                    },
                    RankSpec::Uniform(_) => 1,
                }
            } else {
                lookup_rank(&tree.to_string(), ranks)?
            };
            let annotated = children
                .iter()
                .map(|c| annotate(c, dims, ranks, false))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(RankedNode::Internal { rank, children: annotated })
        }
    }
}

fn lookup_rank(name: &str, ranks: &RankSpec) -> Result<usize, ModelError> {
    match ranks {
        RankSpec::Uniform(r) => Ok(*r),
        RankSpec::PerNode(map) => map
            .get(name)
            .copied()
            .ok_or_else(|| ModelError::validation(format!("ranks: no entry for node {name}"))),
    }
}

/// Parses and validates a full tree description in one call.
pub fn parse_tree_spec(
    text: &str,
    dims: &DimSpec,
    ranks: &RankSpec,
) -> Result<RankedTree, ModelError> {
    let tree = parse_tree(text)?;
    RankedTree::new(&tree, dims, ranks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(text: &str, n: usize, r: usize) -> Result<RankedTree, ModelError> {
        parse_tree_spec(text, &DimSpec::Uniform(n), &RankSpec::Uniform(r))
    }

    #[test]
    fn parses_three_branch_tree() {
        let ranked = uniform("[[1,3,5],[4,2],6]", 16, 5).unwrap();
        assert_eq!(ranked.tree().to_string(), "[[1,3,5],[4,2],6]");
        assert_eq!(ranked.height(), 2);
        assert_eq!(ranked.tree().leaves(), vec![1, 3, 5, 4, 2, 6]);
        assert_eq!(ranked.dense_entries(), 16u128.pow(6));
        assert_eq!(ranked.root().rank(), 1);
    }

    #[test]
    fn storage_count_for_three_branch_tree() {
        // 6 bases of 16x5 plus cores 5^4, 1*5^3, 5^3.
        let ranked = uniform("[[1,3,5],[4,2],6]", 16, 5).unwrap();
        assert_eq!(ranked.storage_entries(), 6 * 16 * 5 + 625 + 2 * 125);
        assert_eq!(ranked.storage_entries(), 1355);
    }

    #[test]
    fn rejects_unary_internal_node() {
        let err = parse_tree("[1]").unwrap_err();
        let text = err.to_string();
        assert!(text.contains("two children"), "{text}");
    }

    #[test]
    fn rejects_duplicate_leaf() {
        let err = parse_tree("[[1,2],[2,3]]").unwrap_err();
        assert!(err.to_string().contains("duplicate leaf 2"), "{err}");
    }

    #[test]
    fn rejects_trailing_and_malformed_input() {
        assert!(parse_tree("[1,2]x").is_err());
        assert!(parse_tree("[1,").is_err());
        assert!(parse_tree("[,1]").is_err());
        assert!(parse_tree("").is_err());
        assert!(parse_tree("0").is_err());
    }

    #[test]
    fn parse_error_reports_position() {
        match parse_tree("[1;2]") {
            Err(ModelError::Parse { position, .. }) => assert_eq!(position, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_leaf_rank_above_dimension() {
        let err = uniform("[1,2]", 3, 4).unwrap_err();
        assert!(err.to_string().contains("rank 4 exceeds dimension 3"), "{err}");
    }

    #[test]
    fn rejects_infeasible_sibling_ranks() {
        // On a two-leaf tree the root rank 1 forces equal leaf ranks.
        let mut map = BTreeMap::new();
        map.insert("1".to_string(), 3);
        map.insert("2".to_string(), 2);
        let err =
            parse_tree_spec("[1,2]", &DimSpec::Uniform(4), &RankSpec::PerNode(map)).unwrap_err();
        assert!(err.to_string().contains("infeasible"), "{err}");
    }

    #[test]
    fn rejects_rank_above_child_rank_product() {
        let mut map = BTreeMap::new();
        map.insert("1".into(), 2);
        map.insert("2".into(), 2);
        map.insert("3".into(), 5);
        map.insert("[1,2]".into(), 5); // 5 > 2*2
        let err =
            parse_tree_spec("[[1,2],3]", &DimSpec::Uniform(8), &RankSpec::PerNode(map)).unwrap_err();
        assert!(err.to_string().contains("exceeds the product"), "{err}");
    }

    #[test]
    fn per_leaf_dims_and_per_node_ranks() {
        let mut dims = BTreeMap::new();
        dims.insert(1, 4);
        dims.insert(2, 6);
        dims.insert(3, 5);
        let mut ranks = BTreeMap::new();
        ranks.insert("1".into(), 2);
        ranks.insert("2".into(), 3);
        ranks.insert("3".into(), 2);
        ranks.insert("[1,2]".into(), 2);
        let ranked = parse_tree_spec(
            "[[1,2],3]",
            &DimSpec::PerLeaf(dims),
            &RankSpec::PerNode(ranks),
        )
        .unwrap();
        assert_eq!(ranked.leaf_dims(), vec![4, 6, 5]);
        match ranked.root() {
            RankedNode::Internal { children, .. } => {
                assert_eq!(children[0].rank(), 2);
                assert_eq!(children[1].rank(), 2);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn missing_map_entry_names_the_key() {
        let ranks = RankSpec::PerNode(BTreeMap::new());
        let err = parse_tree_spec("[1,2]", &DimSpec::Uniform(4), &ranks).unwrap_err();
        assert!(err.to_string().contains("no entry for node 1"), "{err}");
    }

    #[test]
    fn single_leaf_is_rejected_as_network() {
        let err = uniform("7", 4, 2).unwrap_err();
        assert!(err.to_string().contains("single leaf"), "{err}");
    }
}
