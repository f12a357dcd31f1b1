//! Grammar-directed delta debugging.
//!
//! A failing artifact is shrunk by splicing its derivation tree. Each
//! strategy walks the tree top-down and depth-first; at every variable node
//! it tries its candidate splices in order, re-derives text and oracle, and
//! asks the checker. A splice is kept if the artifact still fails in the
//! same [`FailureClass`], otherwise the node's expansion link is restored.
//! Passes over all strategies repeat until one changes nothing, so the
//! result is 1-minimal with respect to the candidate splices defined here.
//!
//! Candidates at a node labelled `A`:
//!
//! * `default`: relabel to `A`'s default rule, reusing existing children
//!   matched greedily left to right. Missing terminals are created fresh
//!   (a symbolic terminal takes its lower bound); a missing variable makes
//!   the strategy inapplicable. The result must be strictly smaller.
//! * `directRec`: take over the expansion of a direct child labelled `A`,
//!   leftmost first.
//! * `indirectRec: {A, ...}`: take over the expansion of a deeper
//!   descendant labelled `A`. Only the nearest such descendants qualify
//!   (no `A` in between), shallowest first, then leftmost.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::artifact::{ArtifactError, TestArtifact};
use crate::grammar::{GrammarSpec, Symbol};
use crate::harness::{FailureChecker, FailureClass, HarnessError, Verdict};
use crate::render::yield_text;
use crate::semantics::{instant_oracle, Domain, SemValue};
use crate::tree::{DerivNode, DerivationTree, NodeId, TreeError};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ReductionStrategy {
    Default,
    DirectRec,
    IndirectRec(Vec<String>),
}

impl ReductionStrategy {
    /// Parse a strategy list such as
    /// `{"default", "directRec", "indirectRec: {E,F,T}"}`. Braces and
    /// quotes are optional, so `default,directRec` also works.
    pub fn parse_list(src: &str) -> Result<Vec<Self>, String> {
        let mut body = src.trim();
        if let Some(inner) = body.strip_prefix('{').and_then(|b| b.strip_suffix('}')) {
            body = inner;
        }
        let mut items = Vec::new();
        let mut depth = 0usize;
        let mut start = 0;
        for (i, c) in body.char_indices() {
            match c {
                '{' => depth += 1,
                '}' => depth = depth.checked_sub(1).ok_or("unbalanced `}`")?,
                ',' if depth == 0 => {
                    items.push(&body[start..i]);
                    start = i + 1;
                }
                _ => {}
            }
        }
        if depth != 0 {
            return Err("unbalanced `{`".into());
        }
        items.push(&body[start..]);
        items
            .into_iter()
            .map(|s| s.trim().trim_matches('"').trim())
            .filter(|s| !s.is_empty())
            .map(Self::parse_one)
            .collect()
    }

    fn parse_one(item: &str) -> Result<Self, String> {
        let (name, arg) = match item.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (item, None),
        };
        match (name, arg) {
            ("default", None) => Ok(ReductionStrategy::Default),
            ("directRec", None) => Ok(ReductionStrategy::DirectRec),
            ("indirectRec", Some(vars)) => {
                let vars = vars
                    .strip_prefix('{')
                    .and_then(|v| v.strip_suffix('}'))
                    .unwrap_or(vars);
                let vars: Vec<String> = vars
                    .split(',')
                    .map(str::trim)
                    .filter(|v| !v.is_empty())
                    .map(String::from)
                    .collect();
                if vars.is_empty() {
                    return Err("indirectRec needs at least one variable".into());
                }
                Ok(ReductionStrategy::IndirectRec(vars))
            }
            ("indirectRec", None) => {
                Err("indirectRec needs a variable list, e.g. indirectRec: {E}".into())
            }
            _ => Err(format!("unknown reduction strategy `{item}`")),
        }
    }
}

impl fmt::Display for ReductionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReductionStrategy::Default => f.write_str("default"),
            ReductionStrategy::DirectRec => f.write_str("directRec"),
            ReductionStrategy::IndirectRec(vars) => {
                write!(f, "indirectRec: {{{}}}", vars.join(","))
            }
        }
    }
}

impl Serialize for ReductionStrategy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A kept splice.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReductionStep {
    pub strategy: ReductionStrategy,
    /// Preorder index of the spliced node in the tree before the splice.
    pub node_path: usize,
    pub before_text: String,
    pub after_text: String,
    pub oracle_after: SemValue,
    pub nodes_before: usize,
    pub nodes_after: usize,
}

/// Any tried splice, kept or not.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Attempt {
    pub strategy: ReductionStrategy,
    pub node_path: usize,
    /// Text after the splice, or `None` if the oracle could not be computed.
    pub text: Option<String>,
    pub kept: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionReport {
    pub original: TestArtifact,
    pub reduced: TestArtifact,
    pub failure: FailureClass,
    pub steps: Vec<ReductionStep>,
    pub attempts: Vec<Attempt>,
    /// Checker invocations, cache hits excluded.
    pub checks: usize,
}

impl ReductionReport {
    /// `1 - |reduced| / |original|` in characters.
    pub fn ratio(&self) -> f64 {
        let before = self.original.text.chars().count();
        if before == 0 {
            return 0.0;
        }
        1.0 - self.reduced.text.chars().count() as f64 / before as f64
    }
}

#[derive(Debug, Error)]
pub enum GddError {
    #[error("artifact does not fail: {0}")]
    NotFailing(Verdict),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("reduced artifact cannot be rebuilt: {0}")]
    Artifact(#[from] ArtifactError),
    #[error("splice broke the derivation tree: {0}")]
    InvalidTree(#[from] TreeError),
}

#[derive(Clone, Debug, Default)]
pub struct GddOptions {
    /// Re-validate the whole tree after every splice and every restore.
    pub validate_each: bool,
}

/// One way of rewriting a node's expansion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Splice {
    /// Relabel to `production`, with children drawn from existing nodes or
    /// created fresh.
    Default {
        production: usize,
        children: Vec<Source>,
    },
    /// Adopt the expansion of `from`, a same-labelled descendant.
    Adopt { from: NodeId },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Source {
    Existing(NodeId),
    Fresh(Symbol),
}

/// Candidate splices of `strategy` at node `id`, in trial order.
pub fn candidates(
    spec: &GrammarSpec,
    tree: &DerivationTree,
    id: NodeId,
    strategy: &ReductionStrategy,
) -> Vec<Splice> {
    let node = tree.node(id);
    let Some(var) = node.symbol.variable() else {
        return Vec::new();
    };
    match strategy {
        ReductionStrategy::Default => default_splice(spec, tree, id, var).into_iter().collect(),
        ReductionStrategy::DirectRec => tree
            .children(id)
            .filter(|&c| tree.node(c).symbol.variable() == Some(var))
            .map(|from| Splice::Adopt { from })
            .collect(),
        ReductionStrategy::IndirectRec(vars) => {
            if !vars.iter().any(|v| v == var) {
                return Vec::new();
            }
            let mut out = Vec::new();
            let mut queue: VecDeque<(NodeId, bool)> =
                tree.children(id).map(|c| (c, true)).collect();
            while let Some((x, direct)) = queue.pop_front() {
                if tree.node(x).symbol.variable() == Some(var) {
                    if !direct {
                        out.push(Splice::Adopt { from: x });
                    }
                    continue;
                }
                queue.extend(tree.children(x).map(|c| (c, false)));
            }
            out
        }
    }
}

fn default_splice(
    spec: &GrammarSpec,
    tree: &DerivationTree,
    id: NodeId,
    var: &str,
) -> Option<Splice> {
    let d = spec.default_of(var)?;
    if tree.node(id).production == Some(d.ordinal) {
        return None;
    }
    let kids: Vec<NodeId> = tree.children(id).collect();
    let mut next = 0;
    let mut children = Vec::with_capacity(d.rhs.len());
    let mut size = 1;
    for sym in &d.rhs {
        match kids[next..]
            .iter()
            .position(|&k| tree.node(k).symbol.same_kind(sym))
        {
            Some(offset) => {
                let k = kids[next + offset];
                next += offset + 1;
                size += tree.subtree_size(k);
                children.push(Source::Existing(k));
            }
            None if sym.is_terminal() => {
                size += 1;
                children.push(Source::Fresh(sym.clone()));
            }
            None => return None,
        }
    }
    (size < tree.subtree_size(id)).then_some(Splice::Default {
        production: d.ordinal,
        children,
    })
}

/// Apply `splice` at `id`. Returns the previous expansion for restoring.
pub fn splice(
    tree: &mut DerivationTree,
    id: NodeId,
    splice: &Splice,
) -> (Option<usize>, Option<NodeId>) {
    let saved = tree.expansion(id);
    match splice {
        Splice::Default {
            production,
            children,
        } => {
            let ids: Vec<NodeId> = children
                .iter()
                .map(|src| {
                    let node = match src {
                        // shallow copy: the detached sibling chain must stay intact
                        Source::Existing(k) => DerivNode {
                            next_sibling: None,
                            ..tree.node(*k).clone()
                        },
                        Source::Fresh(sym) => DerivNode {
                            value: match sym {
                                Symbol::Symbolic { lo, .. } => Some(*lo),
                                _ => None,
                            },
                            ..DerivNode::leaf(sym.clone())
                        },
                    };
                    tree.push(node)
                })
                .collect();
            let head = tree.chain(&ids);
            tree.set_expansion(id, Some(*production), head);
        }
        Splice::Adopt { from } => {
            let (p, head) = tree.expansion(*from);
            tree.set_expansion(id, p, head);
        }
    }
    saved
}

/// Every tree reachable from `tree` by one candidate splice.
pub fn neighbours(
    spec: &GrammarSpec,
    tree: &DerivationTree,
    strategies: &[ReductionStrategy],
) -> Vec<(ReductionStrategy, usize, DerivationTree)> {
    let mut out = Vec::new();
    for strategy in strategies {
        for (path, id) in tree.preorder().into_iter().enumerate() {
            for cand in candidates(spec, tree, id, strategy) {
                let mut t = tree.clone();
                splice(&mut t, id, &cand);
                out.push((strategy.clone(), path, t.compact()));
            }
        }
    }
    out
}

/// Reduce a failing artifact.
pub fn gdd(
    spec: &GrammarSpec,
    domain: &Domain,
    artifact: &TestArtifact,
    strategies: &[ReductionStrategy],
    checker: &dyn FailureChecker,
) -> Result<ReductionReport, GddError> {
    gdd_with(
        spec,
        domain,
        artifact,
        strategies,
        checker,
        &GddOptions::default(),
    )
}

pub fn gdd_with(
    spec: &GrammarSpec,
    domain: &Domain,
    artifact: &TestArtifact,
    strategies: &[ReductionStrategy],
    checker: &dyn FailureChecker,
    options: &GddOptions,
) -> Result<ReductionReport, GddError> {
    let verdict = checker.check(&artifact.text, &artifact.oracle)?;
    let Some(failure) = verdict.failure_class() else {
        return Err(GddError::NotFailing(verdict));
    };
    let mut session = Session {
        spec,
        domain,
        checker,
        options,
        failure,
        tree: artifact.tree.clone(),
        text: artifact.text.clone(),
        cache: HashMap::new(),
        steps: Vec::new(),
        attempts: Vec::new(),
        checks: 1,
    };
    loop {
        let mut changed = false;
        for strategy in strategies {
            let root = session.tree.root();
            changed |= session.apply(strategy, root)?;
        }
        if !changed {
            break;
        }
    }
    let reduced = TestArtifact::build(spec, domain, session.tree, None)?;
    Ok(ReductionReport {
        original: artifact.clone(),
        reduced,
        failure,
        steps: session.steps,
        attempts: session.attempts,
        checks: session.checks,
    })
}

struct Session<'a> {
    spec: &'a GrammarSpec,
    domain: &'a Domain,
    checker: &'a dyn FailureChecker,
    options: &'a GddOptions,
    failure: FailureClass,
    tree: DerivationTree,
    text: String,
    cache: HashMap<(String, String), bool>,
    steps: Vec<ReductionStep>,
    attempts: Vec<Attempt>,
    checks: usize,
}

impl Session<'_> {
    /// Top-down, depth-first pass of one strategy. True if anything was kept.
    fn apply(&mut self, strategy: &ReductionStrategy, id: NodeId) -> Result<bool, GddError> {
        let mut changed = false;
        if self.tree.node(id).is_variable() {
            for cand in candidates(self.spec, &self.tree, id, strategy) {
                let node_path = self
                    .tree
                    .preorder()
                    .iter()
                    .position(|&n| n == id)
                    .unwrap_or(0);
                let nodes_before = self.tree.node_count();
                let saved = splice(&mut self.tree, id, &cand);
                self.validate()?;
                let outcome = self.still_fails()?;
                let kept = outcome.as_ref().is_some_and(|(_, _, fails)| *fails);
                self.attempts.push(Attempt {
                    strategy: strategy.clone(),
                    node_path,
                    text: outcome.as_ref().map(|(t, _, _)| t.clone()),
                    kept,
                });
                if let (true, Some((text, oracle, _))) = (kept, outcome) {
                    self.steps.push(ReductionStep {
                        strategy: strategy.clone(),
                        node_path,
                        before_text: std::mem::replace(&mut self.text, text.clone()),
                        after_text: text,
                        oracle_after: oracle,
                        nodes_before,
                        nodes_after: self.tree.node_count(),
                    });
                    changed = true;
                    break;
                }
                self.tree.set_expansion(id, saved.0, saved.1);
                self.validate()?;
            }
        }
        let kids: Vec<NodeId> = self.tree.children(id).collect();
        for kid in kids {
            changed |= self.apply(strategy, kid)?;
        }
        Ok(changed)
    }

    /// Text, fresh oracle and whether the current tree still fails in the
    /// original class. `None` when the oracle cannot be computed.
    fn still_fails(&mut self) -> Result<Option<(String, SemValue, bool)>, GddError> {
        let Ok(ev) = instant_oracle(self.spec, self.domain, &self.tree) else {
            return Ok(None);
        };
        let Ok(text) = yield_text(&self.tree, &ev.tags) else {
            return Ok(None);
        };
        let key = (text.clone(), format!("{:?}", ev.oracle));
        let fails = match self.cache.get(&key) {
            Some(&f) => f,
            None => {
                self.checks += 1;
                let verdict = self.checker.check(&text, &ev.oracle)?;
                let f = verdict.failure_class() == Some(self.failure);
                self.cache.insert(key, f);
                f
            }
        };
        Ok(Some((text, ev.oracle, fails)))
    }

    fn validate(&self) -> Result<(), GddError> {
        if self.options.validate_each {
            self.tree.validate(self.spec)?;
        }
        Ok(())
    }
}
