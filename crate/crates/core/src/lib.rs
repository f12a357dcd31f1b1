//! Grammar-based generation of test cases with expected values, and
//! grammar-directed reduction of the ones that fail.
//!
//! A specification is a context-free grammar whose productions carry
//! valuation terms. [`generate`](generate::generate) derives structurally
//! distinct trees; [`semantics::evaluate`] computes each tree's expected
//! value; [`render::yield_text`] turns it into test text. Failing
//! artifacts are shrunk by [`gdd::gdd`], which splices the derivation tree
//! and re-evaluates the oracle after every change.
//!
//! ```
//! use gramtao::{corpus, gdd, generate, grammar, harness, semantics, TestArtifact};
//!
//! let spec = grammar::parse_spec(corpus::ARITH_SPEC)?;
//! let domain = semantics::builtin_domain_arith();
//! let trees = generate::generate(&spec, &generate::GenConfig::new(1, 20))?;
//! let sut = harness::InProcessSut::new(|s: &str| corpus::run_calc(corpus::Mutant::M1, s));
//! for g in trees {
//!     // some generated expressions divide by zero and have no oracle
//!     let Ok(a) = TestArtifact::build(&spec, &domain, g.tree, Some(g.provenance)) else {
//!         continue;
//!     };
//!     if let Ok(report) = gdd::gdd(&spec, &domain, &a, spec.reduction_directives(), &sut) {
//!         assert!(report.reduced.text.len() <= a.text.len());
//!     }
//! }
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod artifact;
pub mod corpus;
pub mod gdd;
pub mod generate;
pub mod grammar;
pub mod harness;
pub mod render;
pub mod semantics;
pub mod textparse;
pub mod tree;

pub use artifact::{ArtifactError, TestArtifact};
pub use gdd::{gdd, ReductionReport, ReductionStrategy};
pub use generate::{generate, GenConfig};
pub use grammar::{parse_spec, GrammarSpec};
pub use harness::{FailureChecker, SutSpec, Verdict};
pub use semantics::{evaluate, Domain, SemValue};
pub use textparse::parse_text;
pub use tree::DerivationTree;

/// The guide's code samples, compiled and run as doc-tests.
#[cfg(doctest)]
mod book {
    macro_rules! chapters {
        ($($name:ident => $file:literal),* $(,)?) => {
            $(
                #[doc = include_str!(concat!("../../../book/src/", $file))]
                pub struct $name;
            )*
        };
    }

    chapters! {
        Introduction => "introduction.md",
        Grammar => "grammar.md",
        Generation => "generation.md",
        Semantics => "semantics.md",
        Harness => "harness.md",
        Reduction => "reduction.md",
        Parking => "parking.md",
        Cli => "cli.md",
    }

    #[doc = include_str!("../../../README.md")]
    pub struct Readme;
}
