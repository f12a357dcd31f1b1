//! Derivation trees in first-child/next-sibling form.
//!
//! Nodes live in an arena and are linked by index. Replacing a variable
//! node's whole expansion is a single write to its `first_child` link (plus
//! its production), which is what makes store/restore during reduction
//! cheap: the detached chain stays in the arena untouched and can be linked
//! back. Nodes that become unreachable are never freed; [`DerivationTree::compact`]
//! produces a fresh copy holding only the reachable part.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::grammar::{GrammarSpec, Symbol};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DerivNode {
    pub symbol: Symbol,
    /// Ordinal of the expanding production; present iff `symbol` is a variable.
    pub production: Option<usize>,
    /// Instantiated value of a symbolic terminal.
    pub value: Option<i64>,
    pub first_child: Option<NodeId>,
    pub next_sibling: Option<NodeId>,
}

impl DerivNode {
    pub fn leaf(symbol: Symbol) -> Self {
        DerivNode {
            symbol,
            production: None,
            value: None,
            first_child: None,
            next_sibling: None,
        }
    }

    pub fn is_variable(&self) -> bool {
        self.symbol.is_variable()
    }

    /// Leaf text as it appears in a rendered test, tags aside.
    pub fn leaf_text(&self) -> Option<String> {
        match &self.symbol {
            Symbol::Literal(text) => Some(text.clone()),
            Symbol::Symbolic { .. } => self.value.map(|v| v.to_string()),
            Symbol::Variable(_) | Symbol::TagRef(_) => None,
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("node {0:?}: variable without a production")]
    MissingProduction(NodeId),
    #[error("node {node:?}: production {production} belongs to `{expected}`")]
    WrongVariable {
        node: NodeId,
        production: usize,
        expected: String,
    },
    #[error("node {node:?}: children do not match the rhs of production {production}")]
    ChildMismatch { node: NodeId, production: usize },
    #[error("node {0:?}: symbolic value missing or out of range")]
    BadValue(NodeId),
    #[error("node {0:?}: leaf has children")]
    LeafWithChildren(NodeId),
    #[error("node {0:?} is reachable more than once")]
    Shared(NodeId),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DerivationTree {
    nodes: Vec<DerivNode>,
    root: NodeId,
}

impl DerivationTree {
    /// Start a tree with a single root node.
    pub fn new(root: DerivNode) -> Self {
        DerivationTree {
            nodes: vec![root],
            root: NodeId(0),
        }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &DerivNode {
        &self.nodes[id.index()]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut DerivNode {
        &mut self.nodes[id.index()]
    }

    /// Add a detached node to the arena.
    pub fn push(&mut self, node: DerivNode) -> NodeId {
        let id = NodeId(u32::try_from(self.nodes.len()).expect("tree arena overflow"));
        self.nodes.push(node);
        id
    }

    /// Link `children` as a sibling chain and return its head.
    pub fn chain(&mut self, children: &[NodeId]) -> Option<NodeId> {
        for pair in children.windows(2) {
            self.nodes[pair[0].index()].next_sibling = Some(pair[1]);
        }
        if let Some(&last) = children.last() {
            self.nodes[last.index()].next_sibling = None;
        }
        children.first().copied()
    }

    /// Replace the expansion of `id`.
    pub fn set_expansion(
        &mut self,
        id: NodeId,
        production: Option<usize>,
        first_child: Option<NodeId>,
    ) {
        let node = &mut self.nodes[id.index()];
        node.production = production;
        node.first_child = first_child;
    }

    pub fn expansion(&self, id: NodeId) -> (Option<usize>, Option<NodeId>) {
        let node = self.node(id);
        (node.production, node.first_child)
    }

    pub fn children(&self, id: NodeId) -> Children<'_> {
        Children {
            tree: self,
            next: self.node(id).first_child,
        }
    }

    /// Reachable nodes in preorder.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            out.push(id);
            let kids: Vec<NodeId> = self.children(id).collect();
            stack.extend(kids.into_iter().rev());
        }
        out
    }

    pub fn node_count(&self) -> usize {
        self.subtree_size(self.root)
    }

    pub fn subtree_size(&self, id: NodeId) -> usize {
        1 + self
            .children(id)
            .map(|c| self.subtree_size(c))
            .sum::<usize>()
    }

    /// Height counted in variable nodes: a variable whose children are all
    /// terminals has height 1; leaves have height 0.
    pub fn height(&self) -> usize {
        self.subtree_height(self.root)
    }

    pub fn subtree_height(&self, id: NodeId) -> usize {
        if !self.node(id).is_variable() {
            return 0;
        }
        1 + self
            .children(id)
            .map(|c| self.subtree_height(c))
            .max()
            .unwrap_or(0)
    }

    /// Ordinals of all productions used by reachable nodes.
    pub fn productions_used(&self) -> BTreeSet<usize> {
        self.preorder()
            .into_iter()
            .filter_map(|id| self.node(id).production)
            .collect()
    }

    /// Copy of the reachable part with fresh, densely packed ids.
    pub fn compact(&self) -> DerivationTree {
        let mut out = DerivationTree::new(self.fresh(self.root));
        let mut stack = vec![(self.root, out.root)];
        while let Some((old, new)) = stack.pop() {
            let kids: Vec<NodeId> = self
                .children(old)
                .map(|c| {
                    let id = out.push(self.fresh(c));
                    stack.push((c, id));
                    id
                })
                .collect();
            let head = out.chain(&kids);
            out.nodes[new.index()].first_child = head;
        }
        out
    }

    fn fresh(&self, id: NodeId) -> DerivNode {
        DerivNode {
            first_child: None,
            next_sibling: None,
            ..self.node(id).clone()
        }
    }

    /// Check every reachable node against the grammar.
    pub fn validate(&self, spec: &GrammarSpec) -> Result<(), TreeError> {
        let mut seen = BTreeSet::new();
        for id in self.preorder() {
            if !seen.insert(id) {
                return Err(TreeError::Shared(id));
            }
            let node = self.node(id);
            match &node.symbol {
                Symbol::Variable(var) => {
                    let ordinal = node.production.ok_or(TreeError::MissingProduction(id))?;
                    let p = spec.production(ordinal);
                    if &p.lhs != var {
                        return Err(TreeError::WrongVariable {
                            node: id,
                            production: ordinal,
                            expected: p.lhs.clone(),
                        });
                    }
                    let kids: Vec<&Symbol> =
                        self.children(id).map(|c| &self.node(c).symbol).collect();
                    let matches = kids.len() == p.rhs.len()
                        && kids.iter().zip(&p.rhs).all(|(a, b)| a.same_kind(b));
                    if !matches {
                        return Err(TreeError::ChildMismatch {
                            node: id,
                            production: ordinal,
                        });
                    }
                }
                Symbol::Symbolic { lo, hi, .. } => {
                    if !node.value.is_some_and(|v| (*lo..=*hi).contains(&v)) {
                        return Err(TreeError::BadValue(id));
                    }
                }
                Symbol::Literal(_) | Symbol::TagRef(_) => {}
            }
            if !node.is_variable() && node.first_child.is_some() {
                return Err(TreeError::LeafWithChildren(id));
            }
        }
        Ok(())
    }
}

pub struct Children<'a> {
    tree: &'a DerivationTree,
    next: Option<NodeId>,
}

impl Iterator for Children<'_> {
    type Item = NodeId;

    fn next(&mut self) -> Option<NodeId> {
        let id = self.next?;
        self.next = self.tree.node(id).next_sibling;
        Some(id)
    }
}

/// Indented outline, one node per line. Handy in test failure output.
impl fmt::Display for DerivationTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(
            t: &DerivationTree,
            id: NodeId,
            depth: usize,
            f: &mut fmt::Formatter<'_>,
        ) -> fmt::Result {
            let node = t.node(id);
            let label = match &node.symbol {
                Symbol::Variable(v) => format!("{v} #{}", node.production.map_or(0, |p| p + 1)),
                Symbol::Literal(s) => format!("{s:?}"),
                Symbol::Symbolic { name, .. } => {
                    format!("[{name}]={}", node.value.unwrap_or_default())
                }
                Symbol::TagRef(n) => format!("$[{n}]"),
            };
            writeln!(f, "{:indent$}{label}", "", indent = depth * 2)?;
            for c in t.children(id) {
                go(t, c, depth + 1, f)?;
            }
            Ok(())
        }
        go(self, self.root, 0, f)
    }
}
