//! Derivation-tree generation.
//!
//! Two phases. The coverage phase builds, for every production not yet
//! used, one tree that steers from the start variable to that production's
//! lhs along a shortest path and completes everything else as shallowly as
//! possible. The diversification phase then expands at random, weighting
//! each production by `1 / (1 + uses)` over a global use counter, and falls
//! back to shortest completion once the depth budget is reached. Trees are
//! deduplicated by [`structural_hash`].
//!
//! Each diversification attempt draws from its own ChaCha stream
//! (`seed`, attempt index), so output is a pure function of spec and config.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashSet};
use std::hash::{Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::grammar::{
    min_height, production_height, validate_properness, GrammarSpec, Symbol, ValidationReport,
};
use crate::tree::{DerivNode, DerivationTree, NodeId};

pub const DEFAULT_DEPTH_BUDGET: usize = 12;
pub const DEFAULT_MAX_ATTEMPTS: usize = 1000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenConfig {
    pub seed: u64,
    pub count: usize,
    pub depth_budget: usize,
    pub max_attempts: usize,
}

impl GenConfig {
    pub fn new(seed: u64, count: usize) -> Self {
        GenConfig {
            seed,
            count,
            depth_budget: DEFAULT_DEPTH_BUDGET,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Coverage,
    Diversify,
}

/// Where a generated tree came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub stream: u64,
    pub phase: Phase,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub tree: DerivationTree,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum GenError {
    #[error("grammar is not proper:\n{0}")]
    NotProper(ValidationReport),
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
    #[error("gave up after repeated duplicates with {} distinct trees", trees.len())]
    Exhausted { trees: Vec<Generated> },
}

/// Coverage streams live in the upper half of the stream space.
const COVERAGE_STREAM: u64 = 1 << 63;

/// Generate up to `cfg.count` structurally distinct trees rooted at the
/// start variable.
pub fn generate(spec: &GrammarSpec, cfg: &GenConfig) -> Result<Vec<Generated>, GenError> {
    let report = validate_properness(spec);
    if !report.is_proper() {
        return Err(GenError::NotProper(report));
    }
    let heights = min_height(spec);
    let deepest = heights.values().copied().max().unwrap_or(0);
    if cfg.depth_budget < deepest.max(1) {
        return Err(GenError::InvalidConfig(format!(
            "depth budget {} is below the grammar's minimal height {deepest}",
            cfg.depth_budget
        )));
    }
    if cfg.max_attempts == 0 {
        return Err(GenError::InvalidConfig(
            "max_attempts must be positive".into(),
        ));
    }

    let mut gen = Generator::new(spec, &heights, cfg.depth_budget);
    let mut out: Vec<Generated> = Vec::with_capacity(cfg.count);
    let mut seen = HashSet::new();
    let mut covered = vec![false; spec.productions().len()];

    for p in 0..spec.productions().len() {
        if out.len() >= cfg.count {
            return Ok(out);
        }
        if covered[p] {
            continue;
        }
        let stream = COVERAGE_STREAM | p as u64;
        let tree = gen.build(cfg.seed, stream, Some(p));
        for used in tree.productions_used() {
            covered[used] = true;
        }
        if seen.insert(structural_hash(&tree)) {
            gen.count_uses(&tree);
            out.push(Generated {
                tree,
                provenance: Provenance {
                    seed: cfg.seed,
                    stream,
                    phase: Phase::Coverage,
                },
            });
        }
    }

    let mut attempt: u64 = 0;
    let mut dupes = 0;
    while out.len() < cfg.count {
        let tree = gen.build(cfg.seed, attempt, None);
        let stream = attempt;
        attempt += 1;
        if seen.insert(structural_hash(&tree)) {
            dupes = 0;
            out.push(Generated {
                tree,
                provenance: Provenance {
                    seed: cfg.seed,
                    stream,
                    phase: Phase::Diversify,
                },
            });
        } else {
            dupes += 1;
            if dupes >= cfg.max_attempts {
                return Err(GenError::Exhausted { trees: out });
            }
        }
    }
    Ok(out)
}

/// Digest of the tree's shape and production choices in preorder.
/// Symbolic values and tag text do not contribute.
pub fn structural_hash(tree: &DerivationTree) -> u64 {
    let mut h = DefaultHasher::new();
    for id in tree.preorder() {
        let node = tree.node(id);
        let kind: u8 = match node.symbol {
            Symbol::Variable(_) => 0,
            Symbol::Literal(_) => 1,
            Symbol::Symbolic { .. } => 2,
            Symbol::TagRef(_) => 3,
        };
        kind.hash(&mut h);
        node.production.hash(&mut h);
    }
    h.finish()
}

struct Generator<'a> {
    spec: &'a GrammarSpec,
    depth_budget: usize,
    /// Shallowest production per variable, lowest ordinal on ties.
    shortest: BTreeMap<&'a str, usize>,
    heights: BTreeMap<String, usize>,
    uses: Vec<u64>,
}

enum Mode {
    Free,
    Shortest,
    Toward {
        target: usize,
        dist: BTreeMap<String, usize>,
    },
}

impl<'a> Generator<'a> {
    fn new(spec: &'a GrammarSpec, heights: &BTreeMap<String, usize>, depth_budget: usize) -> Self {
        let mut shortest = BTreeMap::new();
        for var in spec.variables() {
            let best = spec
                .productions_of(var)
                .iter()
                .copied()
                .filter(|&q| {
                    production_height(spec.production(q), heights) == heights.get(var).copied()
                })
                .min()
                .expect("proper grammar has a shallowest production");
            shortest.insert(var, best);
        }
        Generator {
            spec,
            depth_budget,
            shortest,
            heights: heights.clone(),
            uses: vec![0; spec.productions().len()],
        }
    }

    fn count_uses(&mut self, tree: &DerivationTree) {
        for id in tree.preorder() {
            if let Some(p) = tree.node(id).production {
                self.uses[p] += 1;
            }
        }
    }

    fn build(&mut self, seed: u64, stream: u64, cover: Option<usize>) -> DerivationTree {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let start = self.spec.start().to_string();
        let mut tree = DerivationTree::new(DerivNode::leaf(Symbol::Variable(start)));
        let mode = match cover {
            Some(target) => Mode::Toward {
                target,
                dist: self.distances(&self.spec.production(target).lhs),
            },
            None => Mode::Free,
        };
        let root = tree.root();
        self.fill(&mut tree, root, 1, &mode, &mut rng);
        tree
    }

    /// Steps from each variable to `target` in the grammar graph.
    fn distances(&self, target: &str) -> BTreeMap<String, usize> {
        let mut dist = BTreeMap::from([(target.to_string(), 0)]);
        loop {
            let mut changed = false;
            for p in self.spec.productions() {
                let best = p
                    .rhs
                    .iter()
                    .filter_map(|s| s.variable().and_then(|v| dist.get(v)))
                    .min()
                    .map(|d| d + 1);
                if let Some(d) = best {
                    let e = dist.entry(p.lhs.clone()).or_insert(usize::MAX);
                    if d < *e {
                        *e = d;
                        changed = true;
                    }
                }
            }
            if !changed {
                return dist;
            }
        }
    }

    fn fill(
        &mut self,
        tree: &mut DerivationTree,
        id: NodeId,
        depth: usize,
        mode: &Mode,
        rng: &mut ChaCha8Rng,
    ) {
        let var = tree
            .node(id)
            .symbol
            .variable()
            .expect("variable node")
            .to_string();
        // which child (rhs index) continues toward the coverage target
        let mut steer: Option<usize> = None;
        let production = match mode {
            Mode::Toward { target, dist } => {
                if self.spec.production(*target).lhs == var {
                    *target
                } else {
                    let (q, i) = self.toward(&var, dist);
                    steer = Some(i);
                    q
                }
            }
            Mode::Shortest => self.shortest[var.as_str()],
            Mode::Free if depth >= self.depth_budget => self.shortest[var.as_str()],
            Mode::Free => self.pick(&var, rng),
        };
        // coverage trees are counted once accepted
        if matches!(mode, Mode::Free) {
            self.uses[production] += 1;
        }

        let rhs = self.spec.production(production).rhs.clone();
        let mut kids = Vec::with_capacity(rhs.len());
        for sym in &rhs {
            let value = match sym {
                Symbol::Symbolic { lo, hi, .. } => Some(rng.random_range(*lo..=*hi)),
                _ => None,
            };
            kids.push(tree.push(DerivNode {
                value,
                ..DerivNode::leaf(sym.clone())
            }));
        }
        let head = tree.chain(&kids);
        tree.set_expansion(id, Some(production), head);

        for (i, kid) in kids.into_iter().enumerate() {
            if !tree.node(kid).is_variable() {
                continue;
            }
            let child_mode = match mode {
                Mode::Free => mode,
                Mode::Toward { .. } if steer == Some(i) => mode,
                _ => &Mode::Shortest,
            };
            self.fill(tree, kid, depth + 1, child_mode, rng);
        }
    }

    /// Production of `var` (and the rhs index to follow) that gets closest
    /// to the target; shallower productions and lower ordinals win ties.
    fn toward(&self, var: &str, dist: &BTreeMap<String, usize>) -> (usize, usize) {
        self.spec
            .productions_of(var)
            .iter()
            .filter_map(|&q| {
                let p = self.spec.production(q);
                let (i, d) = p
                    .rhs
                    .iter()
                    .enumerate()
                    .filter_map(|(i, s)| s.variable().and_then(|v| dist.get(v)).map(|d| (i, *d)))
                    .min_by_key(|&(i, d)| (d, i))?;
                let h = production_height(p, &self.heights).unwrap_or(usize::MAX);
                Some(((d, h, q), (q, i)))
            })
            .min_by_key(|(key, _)| *key)
            .map(|(_, pick)| pick)
            .expect("target reachable from every accessible variable")
    }

    fn pick(&self, var: &str, rng: &mut ChaCha8Rng) -> usize {
        let options = self.spec.productions_of(var);
        let weights: Vec<f64> = options
            .iter()
            .map(|&q| 1.0 / (1.0 + self.uses[q] as f64))
            .collect();
        let total: f64 = weights.iter().sum();
        let mut x = rng.random::<f64>() * total;
        for (q, w) in options.iter().zip(&weights) {
            if x < *w {
                return *q;
            }
            x -= w;
        }
        *options.last().expect("variable has productions")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::grammar::parse_spec;

    fn arith() -> GrammarSpec {
        parse_spec(corpus::ARITH_SPEC).unwrap()
    }

    #[test]
    fn covers_every_production_early() {
        let spec = arith();
        for seed in [0, 1, 42] {
            let trees = generate(&spec, &GenConfig::new(seed, 9)).unwrap();
            let used: HashSet<usize> = trees
                .iter()
                .flat_map(|g| g.tree.productions_used())
                .collect();
            assert_eq!(used.len(), spec.productions().len());
        }
    }

    #[test]
    fn distinct_and_deterministic() {
        let spec = arith();
        let cfg = GenConfig::new(7, 1000);
        let a = generate(&spec, &cfg).unwrap();
        let b = generate(&spec, &cfg).unwrap();
        assert_eq!(a, b);
        let hashes: HashSet<u64> = a.iter().map(|g| structural_hash(&g.tree)).collect();
        assert_eq!(hashes.len(), 1000);
        for g in &a {
            g.tree.validate(&spec).unwrap();
        }
    }

    #[test]
    fn depth_bound() {
        let spec = arith();
        let cfg = GenConfig {
            depth_budget: 6,
            ..GenConfig::new(3, 300)
        };
        let deepest = min_height(&spec).values().copied().max().unwrap();
        for g in generate(&spec, &cfg).unwrap() {
            assert!(g.tree.height() <= cfg.depth_budget + deepest);
        }
    }

    #[test]
    fn singleton_language_exhausts() {
        let spec = parse_spec("S ::= a").unwrap();
        let cfg = GenConfig {
            max_attempts: 20,
            ..GenConfig::new(0, 3)
        };
        match generate(&spec, &cfg) {
            Err(GenError::Exhausted { trees }) => assert_eq!(trees.len(), 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn improper_grammar_refused() {
        let spec = parse_spec("S ::= S").unwrap();
        assert!(matches!(
            generate(&spec, &GenConfig::new(0, 1)),
            Err(GenError::NotProper(_))
        ));
    }

    #[test]
    fn budget_below_min_height_refused() {
        let cfg = GenConfig {
            depth_budget: 2,
            ..GenConfig::new(0, 1)
        };
        assert!(matches!(
            generate(&arith(), &cfg),
            Err(GenError::InvalidConfig(_))
        ));
    }

    #[test]
    fn zero_count_is_empty() {
        assert!(generate(&arith(), &GenConfig::new(0, 0))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn hash_ignores_values() {
        let spec = arith();
        let a = crate::textparse::parse_text(&spec, "2+3").unwrap();
        let b = crate::textparse::parse_text(&spec, "7+9").unwrap();
        let c = crate::textparse::parse_text(&spec, "2*3").unwrap();
        assert_eq!(structural_hash(&a), structural_hash(&b));
        assert_ne!(structural_hash(&a), structural_hash(&c));
        assert_eq!(structural_hash(&a), structural_hash(&a.compact()));
    }
}
