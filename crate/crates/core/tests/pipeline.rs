use gramtao::corpus::{self, FaultSet, Mutant};
use gramtao::gdd;
use gramtao::generate::{generate, structural_hash, GenConfig};
use gramtao::grammar::{parse_spec, GrammarSpec};
use gramtao::harness::{CompareMode, FailureChecker, InProcessSut};
use gramtao::semantics::{
    builtin_domain_arith, builtin_domain_parking, instant_oracle, Domain, RateTable,
};
use gramtao::{evaluate, parse_text, TestArtifact};
use proptest::prelude::*;

fn shipped() -> Vec<(GrammarSpec, Domain)> {
    vec![
        (
            parse_spec(corpus::ARITH_SPEC).unwrap(),
            builtin_domain_arith(),
        ),
        (
            parse_spec(corpus::ARITH_ASSERT_SPEC).unwrap(),
            builtin_domain_arith(),
        ),
        (
            parse_spec(corpus::PARKING_SPEC).unwrap(),
            builtin_domain_parking(RateTable::default()),
        ),
    ]
}

fn built(
    spec: &GrammarSpec,
    domain: &Domain,
    seed: u64,
    count: usize,
    depth: usize,
) -> Vec<TestArtifact> {
    let cfg = GenConfig {
        depth_budget: depth,
        ..GenConfig::new(seed, count)
    };
    generate(spec, &cfg)
        .unwrap()
        .into_iter()
        .filter_map(|g| TestArtifact::build(spec, domain, g.tree, Some(g.provenance)).ok())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn rendered_text_parses_back(seed in any::<u64>()) {
        for (spec, domain) in shipped() {
            for a in built(&spec, &domain, seed, 15, 7) {
                let tree = parse_text(&spec, &a.text).map_err(|e| TestCaseError::fail(format!("{e}: {:?}", a.text)))?;
                let again = TestArtifact::build(&spec, &domain, tree, None).unwrap();
                prop_assert_eq!(&again.text, &a.text);
                prop_assert_eq!(&again.oracle, &a.oracle);
            }
        }
    }

    #[test]
    fn unambiguous_grammar_parses_to_the_same_structure(seed in any::<u64>()) {
        let (spec, domain) = shipped().swap_remove(0);
        for a in built(&spec, &domain, seed, 20, 7) {
            let tree = parse_text(&spec, &a.text).unwrap();
            prop_assert_eq!(structural_hash(&tree), structural_hash(&a.tree));
        }
    }

    #[test]
    fn instant_oracle_matches_full_evaluation(seed in any::<u64>()) {
        for (spec, domain) in shipped() {
            let cfg = GenConfig { depth_budget: 7, ..GenConfig::new(seed, 15) };
            for g in generate(&spec, &cfg).unwrap() {
                prop_assert_eq!(evaluate(&spec, &domain, &g.tree), instant_oracle(&spec, &domain, &g.tree));
            }
        }
    }

    #[test]
    fn reduction_keeps_the_failure_and_never_grows(seed in any::<u64>(), m in 1usize..6) {
        let (spec, domain) = shipped().swap_remove(0);
        let sut = InProcessSut::new(move |s: &str| corpus::run_calc(Mutant::ALL[m], s));
        for a in built(&spec, &domain, seed, 12, 6) {
            let Ok(rep) = gdd::gdd(&spec, &domain, &a, spec.reduction_directives(), &sut) else { continue };
            prop_assert!(rep.reduced.tree.node_count() <= a.tree.node_count());
            prop_assert!(rep.reduced.text.len() <= a.text.len());
            let v = sut.check(&rep.reduced.text, &rep.reduced.oracle).unwrap();
            prop_assert_eq!(v.failure_class(), Some(rep.failure));
            prop_assert_eq!(rep.steps.last().map_or(&a.text, |s| &s.after_text), &rep.reduced.text);
        }
    }
}

#[test]
fn alternation_is_shorthand_for_separate_rules() {
    let joined = parse_spec("E* ::= F @@ F | E + F @@ (intAdd E F) | E - F @@ (intSub E F)\nF ::= [N] @@ [N]\n[N] ::= 1 .. 9\n").unwrap();
    let split = parse_spec("E* ::= F @@ F\nE ::= E + F @@ (intAdd E F)\nE ::= E - F @@ (intSub E F)\nF ::= [N] @@ [N]\n[N] ::= 1 .. 9\n").unwrap();
    assert_eq!(joined, split);
    let texts = |spec: &GrammarSpec| -> Vec<String> {
        built(spec, &builtin_domain_arith(), 3, 30, 6)
            .into_iter()
            .map(|a| format!("{}={}", a.text, a.oracle))
            .collect()
    };
    assert_eq!(texts(&joined), texts(&split));
}

#[test]
fn parking_faults_reduce_to_single_rounds() {
    let spec = parse_spec(corpus::PARKING_SPEC).unwrap();
    let rates = RateTable::default();
    let domain = builtin_domain_parking(rates.clone());
    let arts = built(&spec, &domain, 4, 60, 12);
    let correct = InProcessSut::new(|s: &str| corpus::run_park(&rates, FaultSet::default(), s))
        .with_compare(CompareMode::Currency);
    for a in &arts {
        assert!(
            correct.check(&a.text, &a.oracle).unwrap().is_pass(),
            "{}",
            a.text
        );
    }
    let faulty = InProcessSut::new(|s: &str| corpus::run_park(&rates, FaultSet::all(), s))
        .with_compare(CompareMode::Currency);
    let mut reduced = 0;
    for a in &arts {
        if let Ok(rep) = gdd::gdd(&spec, &domain, a, spec.reduction_directives(), &faulty) {
            assert_eq!(
                rep.reduced.text.matches("calc").count(),
                1,
                "{}",
                rep.reduced.text
            );
            reduced += 1;
        }
    }
    assert!(reduced > 0);
}
