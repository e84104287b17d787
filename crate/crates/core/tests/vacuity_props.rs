mod common;

use proptest::prelude::*;
use rand::Rng;
use vacfv::formula::{parse_property_file, Formula, Polarity, Property};
use vacfv::mc::{check, check_with, eval_on_lasso, CheckOptions};
use vacfv::model::{load_model, LoadOptions, Model};
use vacfv::vacuity::{check_vacuity, check_vacuity_with, interesting_witness_with, VacuityMode, VacuityReport, VacuityVerdict};

use common::*;

const V01: &[&str] = &["v0", "v1"];

/// Checks the report against independent checks. `witness_required`
/// demands a witness for every non-vacuous verdict, which holds on the
/// fixtures but not for every formula.
fn report_invariants(
    m: &Model,
    f: &Formula,
    r: &VacuityReport,
    opts: &CheckOptions,
    witness_required: bool,
) -> Result<(), String> {
    for o in &r.occurrences {
        if o.affects != (o.sat_under_true != o.sat_under_false) {
            return Err(format!("affects flag inconsistent at {:?}", o.occurrence.path));
        }
    }
    let holds = check_with(m, f, opts).map_err(|e| e.to_string())?.holds;
    if r.holds != holds {
        return Err("report disagrees with check".into());
    }
    match &r.verdict {
        VacuityVerdict::Fails if holds => return Err("fails verdict on a holding formula".into()),
        VacuityVerdict::Vacuous { .. } | VacuityVerdict::NonVacuous if !holds => {
            return Err("vacuity verdict on a failing formula".into())
        }
        _ => {}
    }
    if r.holds && r.witness.is_some() != interesting_witness_with(m, f, opts).map_err(|e| e.to_string())?.is_some() {
        return Err("report witness disagrees with interesting_witness".into());
    }
    if let Some(w) = &r.witness {
        let ok = eval_on_lasso(f, m, w).map_err(|e| e.to_string())?
            && eval_on_lasso(&f.witness_formula(), m, w).map_err(|e| e.to_string())?;
        if !ok {
            return Err("witness does not satisfy f and witness(f)".into());
        }
    }
    if witness_required && r.is_non_vacuous() && interesting_witness_with(m, f, opts).map_err(|e| e.to_string())?.is_none() {
        return Err("non-vacuous without an interesting witness".into());
    }
    Ok(())
}

/// True when some proper ancestor of `path` is `$stable`, whose argument
/// occurs with both polarities.
fn under_stable(f: &Formula, path: &[usize]) -> bool {
    (0..path.len()).any(|i| matches!(f.at(&path[..i]), Some(Formula::Stable(_))))
}

/// For a positive occurrence, `M |= f[psi <- false]` implies `M |= f`; for a
/// negative one the same holds with `true`.
fn polarity_monotone(m: &Model, f: &Formula, opts: &CheckOptions) -> Result<(), String> {
    let holds = check_with(m, f, opts).map_err(|e| e.to_string())?.holds;
    for occ in f.occurrences().into_iter().filter(|o| !under_stable(f, &o.path)) {
        let weakest = occ.polarity == Polarity::Negative;
        let g = f.substitute(&occ, weakest).map_err(|e| e.to_string())?;
        if check_with(m, &g, opts).map_err(|e| e.to_string())?.holds && !holds {
            return Err(format!("monotonicity fails at {:?}", occ.path));
        }
    }
    Ok(())
}

const FIXTURES: [(&str, &str); 4] = [
    ("models/p_never.json", "props/response.prop"),
    ("models/live.json", "props/response.prop"),
    ("models/validcounter_stuck.json", "props/validcounter_decrement.sva"),
    ("models/des3_analog.json", "props/k_update.sva"),
];

fn fixture_properties() -> Vec<(Model, Property)> {
    FIXTURES
        .iter()
        .flat_map(|(m, p)| {
            let model = load_model(fixture(m), &LoadOptions::default()).unwrap();
            let props = parse_property_file(&std::fs::read_to_string(fixture(p)).unwrap()).unwrap();
            props.into_iter().map(move |p| (model.clone(), p))
        })
        .collect()
}

#[test]
fn fixture_reports_satisfy_invariants() {
    for (m, p) in fixture_properties() {
        let opts = CheckOptions { assume: p.assumption(), ..Default::default() };
        for mode in [VacuityMode::Single, VacuityMode::AllOccurrences, VacuityMode::Exhaustive] {
            let r = check_vacuity_with(&m, &p.formula, mode, &opts).unwrap();
            report_invariants(&m, &p.formula, &r, &opts, true).unwrap_or_else(|e| panic!("{}: {e}", p.name));
        }
        polarity_monotone(&m, &p.formula, &opts).unwrap_or_else(|e| panic!("{}: {e}", p.name));
    }
}

#[test]
fn single_mode_is_a_subset_of_all_occurrences() {
    let m = load_model(fixture("models/p_never.json"), &LoadOptions::default()).unwrap();
    let f = vacfv::formula::parse_property("G (p -> X p)").unwrap();
    let single = check_vacuity(&m, &f, VacuityMode::Single).unwrap();
    let all = check_vacuity(&m, &f, VacuityMode::AllOccurrences).unwrap();
    assert_eq!(single.occurrences, all.occurrences);
    assert!(single.groups.is_empty());
    assert!(!all.groups.is_empty());
    assert!(all.is_vacuous());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn random_reports_satisfy_invariants(seed in any::<u64>(), f in arb_formula(V01, true)) {
        let mut rng = seeded(seed);
        let n = rng.gen_range(1..=4);
        let m = random_model(&mut rng, 2, n, 0.0);
        let r = check_vacuity(&m, &f, VacuityMode::AllOccurrences).unwrap();
        let opts = CheckOptions::default();
        let outcome = report_invariants(&m, &f, &r, &opts, false).and_then(|_| polarity_monotone(&m, &f, &opts));
        prop_assert!(outcome.is_ok(), "{}: {:?}", f, outcome);
    }

    #[test]
    fn vacuous_implies_holds(seed in any::<u64>(), f in arb_formula(V01, false)) {
        let mut rng = seeded(seed);
        let n = rng.gen_range(1..=4);
        let m = random_model(&mut rng, 2, n, 0.0);
        let r = check_vacuity(&m, &f, VacuityMode::Single).unwrap();
        if r.is_vacuous() {
            prop_assert!(check(&m, &f).unwrap().holds);
        }
    }
}
