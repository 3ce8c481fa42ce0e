use shrinkdyn::config::Config;
use shrinkdyn::experiments::{self, Lab, EXPERIMENTS};
use std::sync::OnceLock;

fn lab() -> &'static Lab {
    static LAB: OnceLock<Lab> = OnceLock::new();
    LAB.get_or_init(|| Lab::new(Config::defaults()).unwrap())
}

#[test]
fn unknown_name_is_a_config_error() {
    let e = experiments::run(lab(), "nope").unwrap_err();
    assert!(e.is_config());
    assert!(e.to_string().contains("ancient"));
}

#[test]
fn names_are_unique() {
    let mut v = EXPERIMENTS.to_vec();
    v.sort();
    v.dedup();
    assert_eq!(v.len(), EXPERIMENTS.len());
}

#[test]
fn entropy_equals_f_on_shrinkers() {
    let rep = experiments::run(lab(), "entropy").unwrap();
    assert!(rep.passed(), "{}", rep.summary());
}

#[test]
fn second_variation_coefficient_is_reported() {
    let rep = experiments::run(lab(), "entropy_decrease").unwrap();
    let c = rep.constant("coefficient_over_lambda1").unwrap();
    assert!(c > 0.4 && c < 0.6, "{c}");
    assert!(rep.assertions.iter().filter(|a| a.name.starts_with("f_decreases")).all(|a| a.passed));
}

#[test]
fn transplant_and_pipeline_pass() {
    for name in ["transplant", "pipeline"] {
        let rep = experiments::run(lab(), name).unwrap();
        assert!(rep.passed(), "{}", rep.summary());
    }
}

#[test]
fn reports_are_deterministic() {
    let a = experiments::run(lab(), "liyau").unwrap().to_json();
    let b = experiments::run(lab(), "liyau").unwrap().to_json();
    assert_eq!(a, b);
}

#[test]
fn report_json_has_sorted_keys() {
    let rep = experiments::run(lab(), "transplant").unwrap();
    let v: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn seed_changes_random_data() {
    let other = Lab::new(Config::load(Some("[run]\nseed = 7\n")).unwrap()).unwrap();
    let a = experiments::run(lab(), "cone").unwrap();
    let b = experiments::run(&other, "cone").unwrap();
    assert_ne!(a.to_json(), b.to_json());
    assert!(b.passed(), "{}", b.summary());
}
