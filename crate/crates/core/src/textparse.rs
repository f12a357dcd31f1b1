//! Parse rendered text back into a derivation tree.
//!
//! An Earley recognizer over characters, followed by a top-down tree
//! extraction over the completed items. Terminals are matched scannerless:
//! a literal is tried at the current position and again after skipping
//! whitespace; a symbolic terminal consumes a maximal run of digits; a tag
//! reference consumes any non-empty run of non-whitespace. Trailing whitespace
//! after the start symbol is accepted.
//!
//! Used to rebuild artifacts from user-supplied text (`reduce --input`) and
//! to state worked examples by their text rather than by hand-built trees.

use std::collections::{BTreeSet, HashMap, HashSet};

use thiserror::Error;

use crate::grammar::{GrammarSpec, Symbol};
use crate::tree::{DerivNode, DerivationTree, NodeId};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TextParseError {
    #[error("no parse: input rejected at byte {0}")]
    NoParse(usize),
    #[error("grammar has no productions")]
    EmptyGrammar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Item {
    prod: usize,
    dot: usize,
    origin: usize,
}

/// Parse `text` as a sentence of `spec`'s start variable.
pub fn parse_text(spec: &GrammarSpec, text: &str) -> Result<DerivationTree, TextParseError> {
    if spec.productions().is_empty() {
        return Err(TextParseError::EmptyGrammar);
    }
    let parser = Parser { spec, text };
    let completed = parser.recognize();
    let n = text.len();
    let ends: Vec<usize> = (0..=n)
        .rev()
        .filter(|&j| text.is_char_boundary(j) && text[j..].trim().is_empty())
        .collect();

    let mut builder = Builder {
        parser: &parser,
        completed: &completed,
        in_progress: HashSet::new(),
        failed: HashSet::new(),
        cycle_hits: 0,
    };
    for end in ends {
        if !completed.has(spec.start(), 0, end) {
            continue;
        }
        if let Some(root) = builder.variable(spec.start(), 0, end) {
            return Ok(root.into_tree());
        }
    }
    Err(TextParseError::NoParse(completed.furthest))
}

struct Parser<'a> {
    spec: &'a GrammarSpec,
    text: &'a str,
}

struct Completed {
    spans: HashSet<(usize, usize, usize)>,
    by_var: HashMap<(String, usize), BTreeSet<usize>>,
    furthest: usize,
}

impl Completed {
    fn has(&self, var: &str, start: usize, end: usize) -> bool {
        self.by_var
            .get(&(var.to_string(), start))
            .is_some_and(|e| e.contains(&end))
    }
}

impl Parser<'_> {
    /// End positions (and symbolic value) of `sym` scanned from `pos`.
    fn scan(&self, sym: &Symbol, pos: usize) -> Vec<(usize, Option<i64>)> {
        let rest = &self.text[pos..];
        let skipped = pos + (rest.len() - rest.trim_start().len());
        match sym {
            Symbol::Literal(lit) => {
                let mut out = Vec::new();
                for at in [pos, skipped] {
                    if self.text[at..].starts_with(lit.as_str())
                        && !out.iter().any(|(e, _)| *e == at + lit.len())
                    {
                        out.push((at + lit.len(), None));
                    }
                }
                out
            }
            Symbol::Symbolic { lo, hi, .. } => {
                let s = &self.text[skipped..];
                let sign = usize::from(*lo < 0 && s.starts_with('-'));
                let digits = s[sign..].bytes().take_while(u8::is_ascii_digit).count();
                if digits == 0 {
                    return Vec::new();
                }
                match s[..sign + digits].parse::<i64>() {
                    Ok(v) if (*lo..=*hi).contains(&v) => vec![(skipped + sign + digits, Some(v))],
                    _ => Vec::new(),
                }
            }
            Symbol::TagRef(_) => {
                let s = &self.text[skipped..];
                s.char_indices()
                    .take_while(|(_, c)| !c.is_whitespace())
                    .map(|(i, c)| (skipped + i + c.len_utf8(), None))
                    .collect()
            }
            Symbol::Variable(_) => Vec::new(),
        }
    }

    fn recognize(&self) -> Completed {
        let n = self.text.len();
        let prods = self.spec.productions();
        let mut chart: Vec<Vec<Item>> = vec![Vec::new(); n + 1];
        let mut seen: Vec<HashSet<Item>> = vec![HashSet::new(); n + 1];
        let mut done = Completed {
            spans: HashSet::new(),
            by_var: HashMap::new(),
            furthest: 0,
        };
        let add =
            |chart: &mut Vec<Vec<Item>>, seen: &mut Vec<HashSet<Item>>, at: usize, item: Item| {
                if seen[at].insert(item) {
                    chart[at].push(item);
                }
            };
        for &p in self.spec.productions_of(self.spec.start()) {
            add(
                &mut chart,
                &mut seen,
                0,
                Item {
                    prod: p,
                    dot: 0,
                    origin: 0,
                },
            );
        }
        for i in 0..=n {
            if !self.text.is_char_boundary(i) {
                continue;
            }
            // variables completed over the empty span at i
            let mut nullable_here: HashSet<String> = HashSet::new();
            let mut k = 0;
            while k < chart[i].len() {
                let item = chart[i][k];
                k += 1;
                done.furthest = done.furthest.max(i);
                let p = &prods[item.prod];
                match p.rhs.get(item.dot) {
                    None => {
                        done.spans.insert((item.prod, item.origin, i));
                        done.by_var
                            .entry((p.lhs.clone(), item.origin))
                            .or_default()
                            .insert(i);
                        if item.origin == i {
                            nullable_here.insert(p.lhs.clone());
                        }
                        let waiting: Vec<Item> = chart[item.origin]
                            .iter()
                            .filter(|w| {
                                prods[w.prod].rhs.get(w.dot).and_then(Symbol::variable)
                                    == Some(&p.lhs)
                            })
                            .copied()
                            .collect();
                        for w in waiting {
                            add(
                                &mut chart,
                                &mut seen,
                                i,
                                Item {
                                    dot: w.dot + 1,
                                    ..w
                                },
                            );
                        }
                    }
                    Some(Symbol::Variable(b)) => {
                        for &q in self.spec.productions_of(b) {
                            add(
                                &mut chart,
                                &mut seen,
                                i,
                                Item {
                                    prod: q,
                                    dot: 0,
                                    origin: i,
                                },
                            );
                        }
                        if nullable_here.contains(b) {
                            add(
                                &mut chart,
                                &mut seen,
                                i,
                                Item {
                                    dot: item.dot + 1,
                                    ..item
                                },
                            );
                        }
                    }
                    Some(term) => {
                        for (end, _) in self.scan(term, i) {
                            add(
                                &mut chart,
                                &mut seen,
                                end,
                                Item {
                                    dot: item.dot + 1,
                                    ..item
                                },
                            );
                        }
                    }
                }
            }
        }
        done
    }
}

/// A parse fragment, materialized into the arena once complete.
enum Frag {
    Leaf(Symbol, Option<i64>),
    Var(String, usize, Vec<Frag>),
}

impl Frag {
    fn into_tree(self) -> DerivationTree {
        match self {
            Frag::Leaf(symbol, value) => DerivationTree::new(DerivNode {
                value,
                ..DerivNode::leaf(symbol)
            }),
            Frag::Var(name, prod, kids) => {
                let mut tree = DerivationTree::new(DerivNode {
                    production: Some(prod),
                    ..DerivNode::leaf(Symbol::Variable(name))
                });
                let ids: Vec<NodeId> = kids.into_iter().map(|k| k.materialize(&mut tree)).collect();
                let head = tree.chain(&ids);
                let root = tree.root();
                tree.set_expansion(root, Some(prod), head);
                tree
            }
        }
    }

    fn materialize(self, tree: &mut DerivationTree) -> NodeId {
        match self {
            Frag::Leaf(symbol, value) => tree.push(DerivNode {
                value,
                ..DerivNode::leaf(symbol)
            }),
            Frag::Var(name, prod, kids) => {
                let ids: Vec<NodeId> = kids.into_iter().map(|k| k.materialize(tree)).collect();
                let head = tree.chain(&ids);
                tree.push(DerivNode {
                    production: Some(prod),
                    first_child: head,
                    ..DerivNode::leaf(Symbol::Variable(name))
                })
            }
        }
    }
}

struct Builder<'a> {
    parser: &'a Parser<'a>,
    completed: &'a Completed,
    in_progress: HashSet<(String, usize, usize)>,
    failed: HashSet<(usize, usize, usize, usize)>,
    /// Bumped whenever a lookup is refused because it is already in progress.
    cycle_hits: usize,
}

impl Builder<'_> {
    fn variable(&mut self, var: &str, start: usize, end: usize) -> Option<Frag> {
        let key = (var.to_string(), start, end);
        if !self.in_progress.insert(key.clone()) {
            self.cycle_hits += 1;
            return None;
        }
        let spec = self.parser.spec;
        let mut result = None;
        for &p in spec.productions_of(var) {
            if !self.completed.spans.contains(&(p, start, end)) {
                continue;
            }
            if let Some(kids) = self.split(p, 0, start, end) {
                result = Some(Frag::Var(var.to_string(), p, kids));
                break;
            }
        }
        self.in_progress.remove(&key);
        result
    }

    /// Derive rhs symbols `k..` of production `p` over `[pos, end)`.
    fn split(&mut self, p: usize, k: usize, pos: usize, end: usize) -> Option<Vec<Frag>> {
        let rhs = &self.parser.spec.production(p).rhs;
        if k == rhs.len() {
            return (pos == end).then(Vec::new);
        }
        if self.failed.contains(&(p, k, pos, end)) {
            return None;
        }
        let hits = self.cycle_hits;
        let sym = &rhs[k];
        let attempts: Vec<(usize, Option<i64>)> = match sym {
            Symbol::Variable(v) => self
                .completed
                .by_var
                .get(&(v.clone(), pos))
                .map(|e| {
                    e.iter()
                        .rev()
                        .filter(|&&e| e <= end)
                        .map(|&e| (e, None))
                        .collect()
                })
                .unwrap_or_default(),
            _ => self
                .parser
                .scan(sym, pos)
                .into_iter()
                .filter(|(e, _)| *e <= end)
                .collect(),
        };
        for (mid, value) in attempts {
            let Some(rest) = self.split(p, k + 1, mid, end) else {
                continue;
            };
            let head = match sym {
                Symbol::Variable(v) => match self.variable(v, pos, mid) {
                    Some(f) => f,
                    None => continue,
                },
                _ => Frag::Leaf(sym.clone(), value),
            };
            let mut out = Vec::with_capacity(rest.len() + 1);
            out.push(head);
            out.extend(rest);
            return Some(out);
        }
        // a failure caused by a refused cycle may succeed in another context
        if self.cycle_hits == hits {
            self.failed.insert((p, k, pos, end));
        }
        None
    }
}
