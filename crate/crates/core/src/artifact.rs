use thiserror::Error;

use crate::generate::Provenance;
use crate::grammar::GrammarSpec;
use crate::render::{yield_text, RenderError};
use crate::semantics::{evaluate, Domain, EvalError, SemValue, TagEnv};
use crate::tree::DerivationTree;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ArtifactError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Render(#[from] RenderError),
}

/// A test case: rendered text plus its expected value.
#[derive(Clone, Debug, PartialEq)]
pub struct TestArtifact {
    pub text: String,
    pub oracle: SemValue,
    pub tree: DerivationTree,
    pub tags: TagEnv,
    /// `None` for artifacts parsed from user text or produced by reduction.
    pub seed_info: Option<Provenance>,
}

impl TestArtifact {
    /// Evaluate and render `tree`. The stored tree is compacted.
    pub fn build(
        spec: &GrammarSpec,
        domain: &Domain,
        tree: DerivationTree,
        seed_info: Option<Provenance>,
    ) -> Result<Self, ArtifactError> {
        let tree = tree.compact();
        let ev = evaluate(spec, domain, &tree)?;
        let text = yield_text(&tree, &ev.tags)?;
        Ok(TestArtifact {
            text,
            oracle: ev.oracle,
            tree,
            tags: ev.tags,
            seed_info,
        })
    }
}
