use eqgen::audit::{composed_transcendental, noninteger_power_of_transcendental};
use eqgen::axioms::{curated_axiom_set, load_axioms, RuleStatus};
use eqgen::record::{generate_dataset, DatasetConfig};
use eqgen::truegen::{random_instance, TrueGenConfig};
use eqgen::random::rng_from_seed;
use eqgen::{verify, OracleConfig, Outcome};

#[test]
fn filtered_false_records_match_true_ones_on_flagged_patterns() {
    let cfg = DatasetConfig {
        true_count: 1000,
        false_count: 1000,
        seed: 31,
        ..DatasetConfig::default()
    };
    assert!(cfg.falsegen.filter_artifacts);
    let (records, _) = generate_dataset(&curated_axiom_set(), &cfg).unwrap();
    let rate = |label: bool| {
        let group: Vec<_> = records.iter().filter(|r| r.label == label).collect();
        let flagged = group
            .iter()
            .filter(|r| {
                let eq = r.parsed_equation().unwrap();
                composed_transcendental(&eq) > 0 || noninteger_power_of_transcendental(&eq)
            })
            .count();
        flagged as f64 / group.len() as f64
    };
    let (t, f) = (rate(true), rate(false));
    assert!((t - f).abs() <= 0.05, "true {t} false {f}");
}

#[test]
fn a_thousand_bare_instances_verify_true() {
    let ax = curated_axiom_set();
    let cfg = TrueGenConfig::default();
    let mut rng = rng_from_seed(1000);
    let mut not_true = Vec::new();
    for _ in 0..1000 {
        let (eq, _) = random_instance(&ax, &cfg, &mut rng).unwrap();
        let v = verify(&eq, &OracleConfig::default(), &mut rng);
        if v.outcome != Outcome::True {
            not_true.push((eq.to_string(), v.outcome));
        }
    }
    assert!(not_true.is_empty(), "{} not true: {not_true:?}", not_true.len());
}

#[test]
fn long_trig_axiom_is_rejected() {
    let (set, report) = load_axioms("bogus", include_str!("fixtures/bogus_trig.ax")).unwrap();
    assert!(set.is_empty());
    let entry = &report.entries[0];
    assert!(matches!(entry.status, RuleStatus::RejectedDomainMismatch { .. }), "{}", entry.status);
    assert!(entry.status.to_string().contains("unsound"));
}
