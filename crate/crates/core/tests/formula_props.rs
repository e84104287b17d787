mod common;

use proptest::prelude::*;
use vacfv::formula::{emit_sva, parse_property, parse_property_block, Formula, Polarity};
use vacfv::mc::eval_on_lasso;

use common::*;

const AB: &[&str] = &["a", "b"];
const ABC: &[&str] = &["a", "b", "c"];

/// Polarity recomputed by walking the path from the root.
fn walk_polarity(f: &Formula, path: &[usize]) -> Polarity {
    let mut pol = Polarity::Positive;
    let mut node = f;
    for &i in path {
        match node {
            Formula::Not(_) => pol = pol.flip(),
            Formula::Implies(..) if i == 0 => pol = pol.flip(),
            _ => {}
        }
        node = node.children()[i];
    }
    pol
}

fn prefixed(p: usize, path: &[usize]) -> Vec<usize> {
    std::iter::once(p).chain(path.iter().copied()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_parse_round_trip(f in arb_formula(ABC, true)) {
        prop_assert_eq!(parse_property(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn emit_sva_round_trip(f in arb_formula(ABC, true)) {
        let sva = emit_sva(&f, "p", "clk", None);
        prop_assert_eq!(parse_property_block(&sva.text).unwrap().formula, f);
    }

    #[test]
    fn nnf_preserves_bounded_semantics(f in arb_formula(AB, true)) {
        let n = f.nnf();
        let m = universal_model();
        for l in canonical_lassos(4) {
            prop_assert_eq!(eval_on_lasso(&f, &m, &l).unwrap(), eval_on_lasso(&n, &m, &l).unwrap(), "{} on {:?}", n, l);
        }
    }

    #[test]
    fn nnf_negates_only_leaves(f in arb_formula(ABC, true)) {
        fn ok(f: &Formula) -> bool {
            match f {
                Formula::Not(g) => matches!(**g, Formula::Atom(_) | Formula::Past(_) | Formula::Stable(_)),
                Formula::Implies(..) => false,
                _ => f.children().into_iter().all(ok),
            }
        }
        prop_assert!(ok(&f.nnf()), "{}", f.nnf());
    }

    #[test]
    fn polarity_matches_path(f in arb_formula(ABC, true)) {
        for occ in f.occurrences() {
            prop_assert_eq!(occ.polarity, walk_polarity(&f, &occ.path));
        }
    }

    #[test]
    fn polarity_flips_under_negation_and_antecedent(f in arb_formula(ABC, false), g in arb_formula(ABC, false)) {
        let neg = Formula::not(f.clone()).occurrences();
        let ante = Formula::implies(f.clone(), g.clone()).occurrences();
        let cons = Formula::implies(g, f.clone()).occurrences();
        for occ in f.occurrences() {
            let find = |occs: &[vacfv::formula::OccurrencePath], p: Vec<usize>| occs.iter().find(|o| o.path == p).map(|o| o.polarity);
            prop_assert_eq!(find(&neg, prefixed(0, &occ.path)), Some(occ.polarity.flip()));
            prop_assert_eq!(find(&ante, prefixed(0, &occ.path)), Some(occ.polarity.flip()));
            prop_assert_eq!(find(&cons, prefixed(1, &occ.path)), Some(occ.polarity));
        }
    }

    #[test]
    fn substitute_is_local(f in arb_formula(ABC, true), pick in any::<prop::sample::Index>(), value in any::<bool>()) {
        let occs = f.occurrences();
        prop_assume!(!occs.is_empty());
        let occ = pick.get(&occs);
        let g = f.substitute(occ, value).unwrap();
        prop_assert_eq!(g.at(&occ.path), Some(&Formula::constant(value)));
        let original = f.at(&occ.path).unwrap().clone();
        prop_assert_eq!(g.replace_at(&occ.path, original).unwrap(), f.clone());
        for other in &occs {
            let related = other.path.starts_with(&occ.path) || occ.path.starts_with(&other.path);
            if !related {
                prop_assert_eq!(g.at(&other.path), f.at(&other.path));
            }
        }
    }

    #[test]
    fn occurrences_are_preorder(f in arb_formula(ABC, true)) {
        let paths: Vec<Vec<usize>> = f.occurrences().into_iter().map(|o| o.path).collect();
        let mut sorted = paths.clone();
        sorted.sort();
        prop_assert_eq!(paths, sorted);
    }
}

#[test]
fn stale_path_is_rejected() {
    let f = parse_property("G (p -> F q)").unwrap();
    assert!(f.replace_at(&[0, 7], Formula::True).is_err());
}
