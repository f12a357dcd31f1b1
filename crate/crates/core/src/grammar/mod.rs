//! Annotated grammar specifications.
//!
//! A specification is a context-free grammar whose productions may carry a
//! valuation term after an `@@` delimiter. Parsing lives in [`parse`], the
//! inverse pretty-printer in [`print`], and the static analyses used by the
//! generator and the reducer (properness, minimal heights) live here.

mod parse;
mod print;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

pub use parse::{parse_spec, parse_spec_with, SpecError};

use crate::gdd::ReductionStrategy;

/// A grammar symbol as it appears on a right-hand side.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Symbol {
    Variable(String),
    Literal(String),
    /// A finite integer class such as `[N] ::= 1 .. 1000`.
    Symbolic {
        name: String,
        lo: i64,
        hi: i64,
    },
    /// `$[N]`: replaced by the value captured under tag `N` when rendering.
    TagRef(u32),
}

impl Symbol {
    pub fn is_variable(&self) -> bool {
        matches!(self, Symbol::Variable(_))
    }

    pub fn is_terminal(&self) -> bool {
        !self.is_variable()
    }

    /// Variable name, if any.
    pub fn variable(&self) -> Option<&str> {
        match self {
            Symbol::Variable(v) => Some(v),
            _ => None,
        }
    }

    /// True when two symbols denote the same grammar entity. Symbolic classes
    /// compare by name only.
    pub fn same_kind(&self, other: &Symbol) -> bool {
        match (self, other) {
            (Symbol::Symbolic { name: a, .. }, Symbol::Symbolic { name: b, .. }) => a == b,
            _ => self == other,
        }
    }
}

/// The body of a valuation term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SemExpr {
    /// Singleton naming a right-hand-side symbol. `index` is the resolved
    /// position in the production's rhs; `name` is kept as written (`E`,
    /// `[N]`) for printing.
    Child { name: String, index: usize },
    /// Singleton constant. Quoted constants always evaluate to text.
    Const { text: String, quoted: bool },
    /// Prefix application `(op arg ...)`.
    Apply { op: String, args: Vec<SemTerm> },
}

/// A valuation term with an optional tag binding (`$[N] : term`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemTerm {
    pub tag: Option<u32>,
    pub expr: SemExpr,
}

impl SemTerm {
    pub fn untagged(expr: SemExpr) -> Self {
        SemTerm { tag: None, expr }
    }

    /// Visit this term and all nested argument terms in preorder.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a SemTerm)) {
        f(self);
        if let SemExpr::Apply { args, .. } = &self.expr {
            for arg in args {
                arg.walk(f);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Production {
    pub lhs: String,
    pub rhs: Vec<Symbol>,
    pub sem: Option<SemTerm>,
    pub is_default: bool,
    /// Position in file order, starting at zero.
    pub ordinal: usize,
}

impl Production {
    /// Indices of rhs positions holding a variable or a symbolic terminal.
    pub fn valued_children(&self) -> impl Iterator<Item = usize> + '_ {
        self.rhs
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, Symbol::Variable(_) | Symbol::Symbolic { .. }))
            .map(|(i, _)| i)
    }

    /// A production without a term whose rhs has exactly one valued symbol
    /// passes that symbol's value through unchanged.
    pub fn relay_child(&self) -> Option<usize> {
        if self.sem.is_some() {
            return None;
        }
        let mut it = self.valued_children();
        match (it.next(), it.next()) {
            (Some(i), None) => Some(i),
            _ => None,
        }
    }

    pub fn mentions(&self, var: &str) -> bool {
        self.rhs.iter().any(|s| s.variable() == Some(var))
    }
}

/// Declaration of a symbolic terminal class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolicClass {
    pub name: String,
    pub lo: i64,
    pub hi: i64,
}

/// An immutable, parsed grammar specification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrammarSpec {
    start: String,
    productions: Vec<Production>,
    symbolic: Vec<SymbolicClass>,
    reduction_directives: Vec<ReductionStrategy>,
    domain_name: String,
    by_lhs: BTreeMap<String, Vec<usize>>,
}

impl GrammarSpec {
    /// Assemble a spec from parts. Ordinals are reassigned from position.
    pub fn new(
        mut productions: Vec<Production>,
        symbolic: Vec<SymbolicClass>,
        reduction_directives: Vec<ReductionStrategy>,
        domain_name: impl Into<String>,
    ) -> Self {
        let mut by_lhs: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, p) in productions.iter_mut().enumerate() {
            p.ordinal = i;
            by_lhs.entry(p.lhs.clone()).or_default().push(i);
        }
        let start = productions
            .first()
            .map(|p| p.lhs.clone())
            .unwrap_or_default();
        GrammarSpec {
            start,
            productions,
            symbolic,
            reduction_directives,
            domain_name: domain_name.into(),
            by_lhs,
        }
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn production(&self, ordinal: usize) -> &Production {
        &self.productions[ordinal]
    }

    pub fn symbolic_classes(&self) -> &[SymbolicClass] {
        &self.symbolic
    }

    pub fn reduction_directives(&self) -> &[ReductionStrategy] {
        &self.reduction_directives
    }

    pub fn domain_name(&self) -> &str {
        &self.domain_name
    }

    pub fn is_variable(&self, name: &str) -> bool {
        self.by_lhs.contains_key(name)
    }

    /// Variables in order of first definition.
    pub fn variables(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.productions
            .iter()
            .filter(|p| seen.insert(p.lhs.as_str()))
            .map(|p| p.lhs.as_str())
            .collect()
    }

    /// Ordinals of the productions defining `var`.
    pub fn productions_of(&self, var: &str) -> &[usize] {
        self.by_lhs.get(var).map(Vec::as_slice).unwrap_or(&[])
    }

    /// The canonical default rule of `var`: its lowest-ordinal starred production.
    pub fn default_of(&self, var: &str) -> Option<&Production> {
        self.productions_of(var)
            .iter()
            .map(|&i| &self.productions[i])
            .find(|p| p.is_default)
    }

    /// Tag indices bound by some production term (nested terms included).
    pub fn defined_tags(&self) -> BTreeSet<u32> {
        let mut tags = BTreeSet::from([0]);
        for p in &self.productions {
            if let Some(sem) = &p.sem {
                sem.walk(&mut |t| {
                    if let Some(tag) = t.tag {
                        tags.insert(tag);
                    }
                });
            }
        }
        tags
    }

    /// Return a copy with the reduction directives replaced.
    pub fn with_reduction_directives(&self, strategies: Vec<ReductionStrategy>) -> Self {
        let mut spec = self.clone();
        spec.reduction_directives = strategies;
        spec
    }
}

impl fmt::Display for GrammarSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_spec(self, f)
    }
}

/// Findings of [`validate_properness`]. Empty findings mean the grammar may
/// be used for generation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub unproductive: Vec<String>,
    pub inaccessible: Vec<String>,
    /// Starred rules that are not strict reducers, with the reason.
    pub bad_defaults: Vec<(String, String)>,
    /// Tag references with no binding anywhere in the spec.
    pub undefined_tags: Vec<u32>,
}

impl ValidationReport {
    pub fn is_proper(&self) -> bool {
        self.unproductive.is_empty()
            && self.inaccessible.is_empty()
            && self.bad_defaults.is_empty()
            && self.undefined_tags.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_proper() {
            return writeln!(f, "proper");
        }
        if !self.unproductive.is_empty() {
            writeln!(f, "unproductive: {}", self.unproductive.join(", "))?;
        }
        if !self.inaccessible.is_empty() {
            writeln!(f, "inaccessible: {}", self.inaccessible.join(", "))?;
        }
        for (var, why) in &self.bad_defaults {
            writeln!(f, "bad default rule for {var}: {why}")?;
        }
        if !self.undefined_tags.is_empty() {
            let tags: Vec<String> = self
                .undefined_tags
                .iter()
                .map(|t| format!("$[{t}]"))
                .collect();
            writeln!(f, "undefined tags: {}", tags.join(", "))?;
        }
        Ok(())
    }
}

/// Check that every variable is productive and accessible from the start
/// variable, that starred rules strictly reduce, and that every tag
/// reference has a binding.
pub fn validate_properness(spec: &GrammarSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    let heights = min_height(spec);
    let vars = spec.variables();

    report.unproductive = vars
        .iter()
        .filter(|v| !heights.contains_key(**v))
        .map(|v| v.to_string())
        .collect();

    let mut reached = BTreeSet::new();
    let mut stack = vec![spec.start()];
    while let Some(var) = stack.pop() {
        if !reached.insert(var) {
            continue;
        }
        for &i in spec.productions_of(var) {
            for sym in &spec.productions[i].rhs {
                if let Symbol::Variable(w) = sym {
                    stack.push(w);
                }
            }
        }
    }
    report.inaccessible = vars
        .iter()
        .filter(|v| !reached.contains(**v))
        .map(|v| v.to_string())
        .collect();

    for p in spec.productions.iter().filter(|p| p.is_default) {
        if p.mentions(&p.lhs) {
            report.bad_defaults.push((
                p.lhs.clone(),
                format!("rule {} mentions its own variable", p.ordinal + 1),
            ));
        } else if let (Some(h), Some(&best)) = (production_height(p, &heights), heights.get(&p.lhs))
        {
            if h > best {
                report.bad_defaults.push((
                    p.lhs.clone(),
                    format!(
                        "rule {} has height {h} but {} completes in {best}",
                        p.ordinal + 1,
                        p.lhs
                    ),
                ));
            }
        }
    }

    let defined = spec.defined_tags();
    let mut undefined = BTreeSet::new();
    for p in &spec.productions {
        for sym in &p.rhs {
            if let Symbol::TagRef(t) = sym {
                if !defined.contains(t) {
                    undefined.insert(*t);
                }
            }
        }
    }
    report.undefined_tags = undefined.into_iter().collect();
    report
}

/// Height of one production under known variable heights: one plus the
/// largest rhs variable height, terminals counting zero. `None` if some rhs
/// variable has no known height.
pub fn production_height(p: &Production, heights: &BTreeMap<String, usize>) -> Option<usize> {
    let mut h = 0;
    for sym in &p.rhs {
        if let Symbol::Variable(v) = sym {
            h = h.max(*heights.get(v)?);
        }
    }
    Some(h + 1)
}

/// Minimal derivation-tree height of every productive variable.
/// Unproductive variables are absent from the map.
pub fn min_height(spec: &GrammarSpec) -> BTreeMap<String, usize> {
    let mut heights: BTreeMap<String, usize> = BTreeMap::new();
    loop {
        let mut changed = false;
        for p in &spec.productions {
            if let Some(h) = production_height(p, &heights) {
                let entry = heights.entry(p.lhs.clone()).or_insert(usize::MAX);
                if h < *entry {
                    *entry = h;
                    changed = true;
                }
            }
        }
        if !changed {
            return heights;
        }
    }
}
