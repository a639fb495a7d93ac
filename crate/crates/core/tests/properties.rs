//! Property tests for invariants that span modules: the extraction algebra,
//! trace-level composition, closed-form bounds, configuration overlay laws,
//! and report serialization.

use proptest::prelude::*;

use filtration_lab::coupling::{hitting_law_pmf, pnk_bound, pnk_bound_sum};
use filtration_lab::decimation::simulate_trace_adaptive;
use filtration_lab::entropy::{
    conditional_entropy, entropy, FinitePartition, FiniteSpace,
};
use filtration_lab::experiments::PartialConfig;
use filtration_lab::random_sets::{compose_subsets, extract_word, Letter, SubsetPrefix, WordPrefix};
use filtration_lab::report::{Check, Report};
use filtration_lab::rng::stream_rng;

fn subset_from(bits: &[bool]) -> SubsetPrefix {
    SubsetPrefix::from_bools(bits)
}

fn full_span_inner(seed: u64, outer_ones: u64) -> SubsetPrefix {
    let mut rng = stream_rng(seed, 1);
    SubsetPrefix::sample(&mut rng, 0.5, outer_ones).expect("valid density")
}

proptest! {
    /// Composing subset maps is associative when each inner prefix spans
    /// the full one-count of the one outside it.
    #[test]
    fn composition_is_associative(bits in prop::collection::vec(any::<bool>(), 0..60), seed in any::<u64>()) {
        let i = subset_from(&bits);
        let j = full_span_inner(seed, i.count_ones());
        let k = full_span_inner(seed.wrapping_add(1), j.count_ones());
        let ij = compose_subsets(&i, &j).unwrap();
        let jk = compose_subsets(&j, &k).unwrap();
        let left = compose_subsets(&ij, &k).unwrap();
        let right = compose_subsets(&i, &jk).unwrap();
        prop_assert_eq!(left, right);
    }

    /// Extracting with a composed subset equals extracting twice.
    #[test]
    fn composed_extraction_matches_two_step(
        bits in prop::collection::vec(any::<bool>(), 0..60),
        letters in prop::collection::vec(any::<bool>(), 60..80),
        seed in any::<u64>(),
    ) {
        let x = WordPrefix::from_letters(
            letters.iter().map(|&b| if b { Letter::A } else { Letter::B }).collect(),
        );
        let i = subset_from(&bits);
        let j = full_span_inner(seed, i.count_ones());
        let r = compose_subsets(&i, &j).unwrap();
        let k = j.count_ones();
        let two_step = extract_word(&extract_word(&x, &i, i.count_ones()).unwrap(), &j, k).unwrap();
        let one_step = extract_word(&x, &r, k).unwrap();
        prop_assert_eq!(two_step, one_step);
    }

    /// Folding a trace's innovations into one subset reproduces the final
    /// word from the deepest word in a single extraction.
    #[test]
    fn trace_innovations_fold_to_one_extraction(seed in any::<u64>(), depth in 1u32..4) {
        let (trace, _, _) = simulate_trace_adaptive(depth, 2, seed, 1 << 22).unwrap();
        let mut folded: Option<SubsetPrefix> = None;
        for step in &trace.steps {
            folded = Some(match folded {
                None => step.innovation.clone(),
                Some(acc) => compose_subsets(&acc, &step.innovation).unwrap(),
            });
        }
        let folded = folded.expect("depth >= 1");
        let final_word = trace.x_at(0).unwrap();
        let direct = extract_word(&trace.initial, &folded, final_word.len()).unwrap();
        prop_assert_eq!(&direct, final_word);
    }

    /// The first-hit pmf is a probability distribution for any density.
    #[test]
    fn hitting_pmf_normalizes(p in 0.05f64..0.95) {
        let mut total = 0.0;
        for s in 0..2000u64 {
            let mass = hitting_law_pmf(p, s);
            prop_assert!(mass >= 0.0);
            total += mass;
        }
        prop_assert!((total - 1.0).abs() < 1e-9, "sum {total}");
    }

    /// The per-index tail bound grows with the index and shrinks with
    /// depth; the window sum is monotone in the window length.
    #[test]
    fn tail_bounds_are_monotone(n in 1u32..40, k in 1u64..20, l in 1u64..20) {
        prop_assert!(pnk_bound(n, k + 1) >= pnk_bound(n, k));
        prop_assert!(pnk_bound(n + 1, k) <= pnk_bound(n, k));
        prop_assert!(pnk_bound_sum(n, l + 1) >= pnk_bound_sum(n, l));
    }

    /// Overlay is idempotent, has the empty config as identity, and is
    /// associative, so flag/file/default layering is order-safe.
    #[test]
    fn config_overlay_laws(
        seeds in prop::collection::vec(prop::option::of(any::<u64>()), 3),
        trials in prop::collection::vec(prop::option::of(any::<u64>()), 3),
        depths in prop::collection::vec(prop::option::of(any::<u32>()), 3),
    ) {
        let make = |idx: usize| PartialConfig {
            seed: seeds[idx],
            trials: trials[idx],
            depth: depths[idx],
            ..PartialConfig::default()
        };
        let (a, b, c) = (make(0), make(1), make(2));
        let empty = PartialConfig::default();
        prop_assert_eq!(a.over(&a), a.clone());
        prop_assert_eq!(a.over(&empty), a.clone());
        prop_assert_eq!(empty.over(&a), a.clone());
        prop_assert_eq!(a.over(&b).over(&c), a.over(&b.over(&c)));
    }

    /// Conditioning on a refinement of a partition removes all of its
    /// information, and refining can only increase entropy.
    #[test]
    fn refinement_conditions_away_everything(seed in any::<u64>(), atoms in 3usize..10) {
        let mut rng = stream_rng(seed, 7);
        let space = FiniteSpace::sample_random(&mut rng, atoms);
        let alpha = FinitePartition::sample_random(&mut rng, atoms, 4);
        let finer = alpha.join(&FinitePartition::sample_random(&mut rng, atoms, 3)).unwrap();
        prop_assert!(conditional_entropy(&space, &alpha, &finer).abs() < 1e-12);
        prop_assert!(entropy(&space, &finer) >= entropy(&space, &alpha) - 1e-12);
    }
}

fn arbitrary_check() -> impl Strategy<Value = Check> {
    (
        "[a-z][a-z0-9-]{0,14}",
        "[a-z][a-z0-9-]{0,14}",
        -1e9f64..1e9,
        -1e9f64..1e9,
        prop::option::of(0.5f64..8.0),
        prop::option::of(".{0,40}"),
    )
        .prop_map(|(name, anchor, observed, bound, sigma, detail)| {
            let mut check = match sigma {
                Some(s) => Check::stat_upper(&name, &anchor, observed, bound, s),
                None => Check::exact_upper(&name, &anchor, observed, bound),
            };
            if let Some(d) = detail {
                check = check.with_detail(d);
            }
            check
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Reports survive JSON round-trips and flatten to one CSV record per
    /// check for arbitrary names, values, and details.
    #[test]
    fn report_serialization_round_trips(checks in prop::collection::vec(arbitrary_check(), 0..8)) {
        let n_checks = checks.len();
        let report = Report::new("prop", &serde_json::json!({"seed": 1}), checks).unwrap();
        let json = report.to_json().unwrap();
        let back: Report = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back.to_json().unwrap(), json);

        let csv_text = report.to_csv().unwrap();
        let mut reader = csv::ReaderBuilder::new().from_reader(csv_text.as_bytes());
        let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
        prop_assert_eq!(rows.len(), n_checks);
        for (row, check) in rows.iter().zip(&back.checks) {
            prop_assert_eq!(&row[1], check.name.as_str());
            prop_assert_eq!(&row[2], check.anchor.as_str());
            prop_assert_eq!(&row[6], if check.pass { "true" } else { "false" });
        }
    }
}
