//! Rendering a derivation tree to test text.
//!
//! Leaves are concatenated left to right. A single space separates two
//! leaves only when the characters meeting at the boundary are both word
//! characters (`[A-Za-z0-9_]`), so `3*(8-4)=12` renders without spaces
//! while `while x {` keeps them.

use thiserror::Error;

use crate::grammar::Symbol;
use crate::semantics::TagEnv;
use crate::tree::{DerivationTree, NodeId};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum RenderError {
    #[error("tag $[{0}] has no binding in scope")]
    UnboundTag(u32),
}

fn is_word(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

#[derive(Default)]
struct Joiner {
    out: String,
}

impl Joiner {
    fn push(&mut self, piece: &str) {
        let (Some(last), Some(first)) = (self.out.chars().last(), piece.chars().next()) else {
            self.out.push_str(piece);
            return;
        };
        if is_word(last) && is_word(first) {
            self.out.push(' ');
        }
        self.out.push_str(piece);
    }
}

/// Render `tree`, replacing each tag reference by the binding of its
/// nearest enclosing anchor in `tags`.
pub fn yield_text(tree: &DerivationTree, tags: &TagEnv) -> Result<String, RenderError> {
    let mut joiner = Joiner::default();
    let mut ancestors = Vec::new();
    walk(tree, tree.root(), &mut ancestors, &mut |node, ancestors| {
        let text = match &node.symbol {
            Symbol::TagRef(n) => tags
                .resolve(ancestors, *n)
                .map(|v| v.tag_text())
                .ok_or(RenderError::UnboundTag(*n))?,
            _ => node.leaf_text().unwrap_or_default(),
        };
        joiner.push(&text);
        Ok(())
    })?;
    Ok(joiner.out)
}

/// Render the subtree at `id` with tag references left as `$[N]`.
pub fn yield_subtree_raw(tree: &DerivationTree, id: NodeId) -> String {
    let mut joiner = Joiner::default();
    let _ = walk(tree, id, &mut Vec::new(), &mut |node, _| {
        match &node.symbol {
            Symbol::TagRef(n) => joiner.push(&format!("$[{n}]")),
            _ => joiner.push(&node.leaf_text().unwrap_or_default()),
        }
        Ok::<(), RenderError>(())
    });
    joiner.out
}

fn walk<E>(
    tree: &DerivationTree,
    id: NodeId,
    ancestors: &mut Vec<NodeId>,
    leaf: &mut impl FnMut(&crate::tree::DerivNode, &[NodeId]) -> Result<(), E>,
) -> Result<(), E> {
    let node = tree.node(id);
    if !node.is_variable() {
        return leaf(node, ancestors);
    }
    ancestors.push(id);
    for child in tree.children(id) {
        walk(tree, child, ancestors, leaf)?;
    }
    ancestors.pop();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::grammar::parse_spec;
    use crate::semantics::{builtin_domain_arith, evaluate, SemValue};
    use crate::textparse::parse_text;
    use crate::tree::DerivNode;

    #[test]
    fn embeds_tag_value() {
        let spec = parse_spec(corpus::ARITH_ASSERT_SPEC).unwrap();
        let tree = parse_text(&spec, "3*(8-4)=99").unwrap();
        let ev = evaluate(&spec, &builtin_domain_arith(), &tree).unwrap();
        assert_eq!(yield_text(&tree, &ev.tags).unwrap(), "3*(8-4)=12");
    }

    #[test]
    fn single_literal() {
        let tree = DerivationTree::new(DerivNode::leaf(Symbol::Literal("x".into())));
        assert_eq!(yield_text(&tree, &TagEnv::default()).unwrap(), "x");
    }

    #[test]
    fn unbound_tag() {
        let tree = DerivationTree::new(DerivNode::leaf(Symbol::TagRef(7)));
        assert_eq!(
            yield_text(&tree, &TagEnv::default()),
            Err(RenderError::UnboundTag(7))
        );
    }

    #[test]
    fn word_boundaries_get_one_space() {
        let spec = parse_spec("S ::= while C '{' B '}'\nC ::= x\nB ::= 'y=1;'").unwrap();
        let tree = parse_text(&spec, "while x{y=1;}").unwrap();
        assert_eq!(
            yield_text(&tree, &TagEnv::default()).unwrap(),
            "while x{y=1;}"
        );
        let spec = parse_spec("S ::= go [K] times\n[K] ::= 1..9").unwrap();
        let tree = parse_text(&spec, "go 3 times").unwrap();
        assert_eq!(yield_text(&tree, &TagEnv::default()).unwrap(), "go 3 times");
    }

    #[test]
    fn nearest_binding_wins() {
        let spec = parse_spec(
            "S ::= I ';' $[1] @@ $[1] : I\nI ::= [K] '<' $[1] @@ $[1] : [K]\n[K] ::= 1..9",
        )
        .unwrap();
        let tree = parse_text(&spec, "4<x;y").unwrap();
        let ev = evaluate(&spec, &builtin_domain_arith(), &tree).unwrap();
        assert_eq!(ev.oracle, SemValue::Int(4));
        assert_eq!(yield_text(&tree, &ev.tags).unwrap(), "4<4;4");
    }
}
