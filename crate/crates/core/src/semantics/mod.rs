//! Valuation of derivation trees.
//!
//! Each production's term is evaluated bottom-up over a derivation tree;
//! the value at the root is the test oracle. Terms may capture values under
//! tag indices, and tag references on right-hand sides render as the
//! captured value of the nearest enclosing binding.

mod arith;
mod parking;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::grammar::{GrammarSpec, SemExpr, SemTerm, Symbol};
use crate::render::yield_subtree_raw;
use crate::tree::{DerivationTree, NodeId};

pub use arith::builtin_domain_arith;
pub use parking::{
    builtin_domain_parking, format_cents, LotType, RateError, RateTable, Rates, EPOCH, HALF_HOUR_MS,
};

/// A dynamically typed semantic value.
#[derive(Clone, Debug, PartialEq)]
pub enum SemValue {
    Int(i64),
    /// Durations and epoch offsets in milliseconds.
    Wide(i64),
    Real(f64),
    Text(String),
    Bool(bool),
}

impl SemValue {
    pub fn kind(&self) -> &'static str {
        match self {
            SemValue::Int(_) => "int",
            SemValue::Wide(_) => "wide",
            SemValue::Real(_) => "real",
            SemValue::Text(_) => "text",
            SemValue::Bool(_) => "bool",
        }
    }

    /// Interpret an unquoted constant from a term.
    pub fn from_constant(text: &str) -> SemValue {
        if let Ok(i) = text.parse::<i64>() {
            SemValue::Int(i)
        } else if let Ok(r) = text.parse::<f64>() {
            SemValue::Real(r)
        } else {
            match text {
                "true" => SemValue::Bool(true),
                "false" => SemValue::Bool(false),
                _ => SemValue::Text(text.to_string()),
            }
        }
    }

    /// Text substituted for a tag reference in a rendered test. Reals are
    /// prices there, so they print with two decimals.
    pub fn tag_text(&self) -> String {
        match self {
            SemValue::Real(r) => format!("{r:.2}"),
            other => other.to_string(),
        }
    }
}

impl fmt::Display for SemValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemValue::Int(i) | SemValue::Wide(i) => write!(f, "{i}"),
            SemValue::Real(r) => write!(f, "{r}"),
            SemValue::Text(s) => f.write_str(s),
            SemValue::Bool(b) => write!(f, "{b}"),
        }
    }
}

impl Serialize for SemValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("{op}: {reason}")]
    Op { op: String, reason: String },
    #[error("unknown operation `{0}`")]
    UnknownOperation(String),
    #[error("unbound tag $[{0}]")]
    UnboundTag(u32),
    #[error("malformed tree: {0}")]
    Malformed(String),
}

impl EvalError {
    pub fn op(op: &str, reason: impl Into<String>) -> Self {
        EvalError::Op {
            op: op.to_string(),
            reason: reason.into(),
        }
    }
}

type OpFn = dyn Fn(&[SemValue]) -> Result<SemValue, EvalError> + Send + Sync;

#[derive(Clone)]
pub struct Operation {
    arity: usize,
    eval: Arc<OpFn>,
}

impl Operation {
    pub fn arity(&self) -> usize {
        self.arity
    }
}

impl fmt::Debug for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operation/{}", self.arity)
    }
}

/// A named registry of semantic operations.
#[derive(Clone, Debug)]
pub struct Domain {
    name: String,
    ops: BTreeMap<String, Operation>,
}

impl Domain {
    pub fn new(name: impl Into<String>) -> Self {
        Domain {
            name: name.into(),
            ops: BTreeMap::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn register<F>(&mut self, op: &str, arity: usize, eval: F) -> &mut Self
    where
        F: Fn(&[SemValue]) -> Result<SemValue, EvalError> + Send + Sync + 'static,
    {
        self.ops.insert(
            op.to_string(),
            Operation {
                arity,
                eval: Arc::new(eval),
            },
        );
        self
    }

    pub fn operation(&self, op: &str) -> Option<&Operation> {
        self.ops.get(op)
    }

    pub fn op_names(&self) -> impl Iterator<Item = &str> {
        self.ops.keys().map(String::as_str)
    }

    pub fn apply(&self, op: &str, args: &[SemValue]) -> Result<SemValue, EvalError> {
        let o = self
            .ops
            .get(op)
            .ok_or_else(|| EvalError::UnknownOperation(op.to_string()))?;
        if o.arity != args.len() {
            return Err(EvalError::op(
                op,
                format!("expected {} operands, got {}", o.arity, args.len()),
            ));
        }
        (o.eval)(args)
    }
}

/// Domains addressable by name from a spec's `TAO-domain:` directive.
#[derive(Clone, Debug, Default)]
pub struct DomainCatalog {
    domains: BTreeMap<String, Domain>,
}

impl DomainCatalog {
    /// `arith` and `parking` (with the shipped rate table).
    pub fn builtin() -> Self {
        let mut catalog = DomainCatalog::default();
        catalog.insert(builtin_domain_arith());
        catalog.insert(builtin_domain_parking(RateTable::default()));
        catalog
    }

    pub fn insert(&mut self, domain: Domain) {
        self.domains.insert(domain.name.clone(), domain);
    }

    pub fn get(&self, name: &str) -> Option<&Domain> {
        self.domains.get(name)
    }
}

/// Captured tag values, each anchored at the node whose term bound it.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TagEnv {
    bindings: BTreeMap<(NodeId, u32), SemValue>,
}

impl TagEnv {
    pub fn bind(&mut self, anchor: NodeId, tag: u32, value: SemValue) {
        self.bindings.insert((anchor, tag), value);
    }

    pub fn get(&self, anchor: NodeId, tag: u32) -> Option<&SemValue> {
        self.bindings.get(&(anchor, tag))
    }

    /// Look `tag` up through `ancestors`, innermost last.
    pub fn resolve(&self, ancestors: &[NodeId], tag: u32) -> Option<&SemValue> {
        ancestors.iter().rev().find_map(|&a| self.get(a, tag))
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub oracle: SemValue,
    pub tags: TagEnv,
}

/// Evaluate `tree` bottom-up under `spec` and `domain`.
pub fn evaluate(
    spec: &GrammarSpec,
    domain: &Domain,
    tree: &DerivationTree,
) -> Result<Evaluation, EvalError> {
    let mut ev = Evaluator {
        spec,
        domain,
        tree,
        tags: TagEnv::default(),
    };
    let oracle = ev.node(tree.root())?;
    Ok(Evaluation {
        oracle,
        tags: ev.tags,
    })
}

/// Oracle of a possibly just-mutated tree. Evaluation is a pure function of
/// the reachable tree, so this recomputes from scratch.
pub fn instant_oracle(
    spec: &GrammarSpec,
    domain: &Domain,
    tree: &DerivationTree,
) -> Result<Evaluation, EvalError> {
    evaluate(spec, domain, tree)
}

struct Evaluator<'a> {
    spec: &'a GrammarSpec,
    domain: &'a Domain,
    tree: &'a DerivationTree,
    tags: TagEnv,
}

impl Evaluator<'_> {
    fn node(&mut self, id: NodeId) -> Result<SemValue, EvalError> {
        let node = self.tree.node(id);
        match &node.symbol {
            Symbol::Symbolic { .. } => {
                return node
                    .value
                    .map(SemValue::Int)
                    .ok_or_else(|| EvalError::Malformed("symbolic terminal without value".into()));
            }
            Symbol::Literal(text) => return Ok(SemValue::Text(text.clone())),
            Symbol::TagRef(n) => {
                return Err(EvalError::Malformed(format!("tag $[{n}] has no value")))
            }
            Symbol::Variable(_) => {}
        }
        let ordinal = node
            .production
            .ok_or_else(|| EvalError::Malformed("variable without production".into()))?;
        let production = self.spec.production(ordinal);

        let mut child_values: Vec<Option<SemValue>> = Vec::with_capacity(production.rhs.len());
        for child in self.tree.children(id) {
            let value = match self.tree.node(child).symbol {
                Symbol::Variable(_) | Symbol::Symbolic { .. } => Some(self.node(child)?),
                _ => None,
            };
            child_values.push(value);
        }
        if child_values.len() != production.rhs.len() {
            return Err(EvalError::Malformed(format!(
                "node has {} children, rule {} expects {}",
                child_values.len(),
                ordinal + 1,
                production.rhs.len()
            )));
        }

        let value = if let Some(term) = &production.sem {
            self.term(id, term, &child_values)?
        } else if let Some(i) = production.relay_child() {
            child_values[i].clone().expect("relay child is valued")
        } else {
            SemValue::Text(yield_subtree_raw(self.tree, id))
        };
        if self.tags.get(id, 0).is_none() {
            self.tags.bind(id, 0, value.clone());
        }
        Ok(value)
    }

    fn term(
        &mut self,
        anchor: NodeId,
        term: &SemTerm,
        children: &[Option<SemValue>],
    ) -> Result<SemValue, EvalError> {
        let value = match &term.expr {
            SemExpr::Child { index, name } => children
                .get(*index)
                .cloned()
                .flatten()
                .ok_or_else(|| EvalError::Malformed(format!("no value for `{name}`")))?,
            SemExpr::Const { text, quoted: true } => SemValue::Text(text.clone()),
            SemExpr::Const {
                text,
                quoted: false,
            } => SemValue::from_constant(text),
            SemExpr::Apply { op, args } => {
                let args = args
                    .iter()
                    .map(|a| self.term(anchor, a, children))
                    .collect::<Result<Vec<_>, _>>()?;
                self.domain.apply(op, &args)?
            }
        };
        if let Some(tag) = term.tag {
            self.tags.bind(anchor, tag, value.clone());
        }
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::grammar::parse_spec;
    use crate::textparse::parse_text;

    fn eval_arith(text: &str) -> Result<SemValue, EvalError> {
        let spec = parse_spec(corpus::ARITH_SPEC).unwrap();
        let tree = parse_text(&spec, text).unwrap();
        evaluate(&spec, &builtin_domain_arith(), &tree).map(|e| e.oracle)
    }

    #[test]
    fn worked_examples() {
        assert_eq!(eval_arith("3*(8-4)"), Ok(SemValue::Int(12)));
        assert_eq!(eval_arith("2*(5-3+4)"), Ok(SemValue::Int(12)));
        assert_eq!(eval_arith("7"), Ok(SemValue::Int(7)));
    }

    #[test]
    fn division_by_zero_is_an_eval_error() {
        assert!(matches!(eval_arith("1/(3-3)"), Err(EvalError::Op { op, .. }) if op == "intDiv"));
    }

    #[test]
    fn tag_binds_at_the_tagged_node() {
        let spec = parse_spec(corpus::ARITH_ASSERT_SPEC).unwrap();
        let tree = parse_text(&spec, "3*(8-4)=12").unwrap();
        let ev = evaluate(&spec, &builtin_domain_arith(), &tree).unwrap();
        assert_eq!(ev.oracle, SemValue::Int(12));
        assert_eq!(ev.tags.get(tree.root(), 1), Some(&SemValue::Int(12)));
        // every variable node binds the implicit $[0]
        assert_eq!(ev.tags.get(tree.root(), 0), Some(&SemValue::Int(12)));
    }

    #[test]
    fn unit_rule_without_term_yields_text() {
        let spec = parse_spec("S ::= Cal\nCal ::= 'click();' go").unwrap();
        let tree = parse_text(&spec, "click(); go").unwrap();
        let ev = evaluate(&spec, &builtin_domain_arith(), &tree).unwrap();
        assert_eq!(ev.oracle, SemValue::Text("click();go".into()));
    }

    #[test]
    fn constants() {
        assert_eq!(SemValue::from_constant("42"), SemValue::Int(42));
        assert_eq!(SemValue::from_constant("2.5"), SemValue::Real(2.5));
        assert_eq!(SemValue::from_constant("true"), SemValue::Bool(true));
        assert_eq!(
            SemValue::from_constant("short"),
            SemValue::Text("short".into())
        );
    }

    #[test]
    fn rendering() {
        assert_eq!(SemValue::Real(24.0).to_string(), "24");
        assert_eq!(SemValue::Real(0.1).to_string(), "0.1");
        assert_eq!(SemValue::Real(24.0).tag_text(), "24.00");
        assert_eq!(SemValue::Wide(-5).to_string(), "-5");
        assert_eq!(SemValue::Bool(false).to_string(), "false");
    }

    #[test]
    fn evaluation_is_deterministic() {
        let spec = parse_spec(corpus::ARITH_SPEC).unwrap();
        let tree = parse_text(&spec, "2*(5-3+4)").unwrap();
        let d = builtin_domain_arith();
        assert_eq!(evaluate(&spec, &d, &tree), evaluate(&spec, &d, &tree));
    }
}
