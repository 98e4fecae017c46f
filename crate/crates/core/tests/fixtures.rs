use twistlab_core::oracles::{fixtures, Fixture};

fn stored() -> Vec<Fixture> {
    let text = include_str!("fixtures/oracles.json");
    serde_json::from_str(text).expect("valid fixtures file")
}

#[test]
fn committed_fixtures_are_reproducible() {
    let fresh = fixtures().unwrap();
    let old = stored();
    assert_eq!(old.len(), fresh.len());
    for (s, f) in old.iter().zip(&fresh) {
        assert_eq!(s.operation, f.operation);
        assert_eq!(s.params, f.params);
        assert!((s.value - f.value).abs() <= 1e-12 * s.value.abs().max(1.0), "{}: {} vs {}", s.operation, s.value, f.value);
    }
}

fn value(op: &str, n: Option<u64>) -> f64 {
    stored()
        .into_iter()
        .find(|f| f.operation == op && n.is_none_or(|n| f.params["n"] == n))
        .unwrap_or_else(|| panic!("no fixture {op}"))
        .value
}

#[test]
fn fixtures_back_the_documented_values() {
    assert!((value("kp_norm", None) - 1.904_342).abs() < 1e-6);
    assert!((value("f_map[0]", None) + 1.532_477).abs() < 1e-6);
    assert!((value("f_map[1]", None) + 0.892_574).abs() < 1e-6);
    assert!((value("quasilinearity_defect", None) - 0.245_065).abs() < 1e-6);
    assert!((value("grid_opnorm", None) - 1.0).abs() < 1e-6);
    assert!((value("grid_identity_to_l2", Some(1)) - 1.0).abs() < 1e-6);
    assert!((value("grid_identity_from_l2", Some(1)) - 2f64.sqrt()).abs() < 1e-6);
    assert!((value("grid_linf_inverse", Some(1)) - 2.0).abs() < 1e-12);
    assert!((value("two_level_phi", Some(4)) - 2f64.ln()).abs() < 1e-12);
    assert_eq!(value("two_level_phi", Some(1)), 0.0);
    assert!((value("exhaustive_signs", None) - 1.0).abs() < 1e-12);
}

#[test]
fn phi_search_matches_the_two_level_oracle() {
    for n in [2usize, 3, 4, 8] {
        let (lo, _) = twistlab_core::opnorm::phi_max(n).unwrap();
        let oracle = value("two_level_phi", Some(n as u64));
        assert!((lo.value - oracle).abs() <= 1e-6 * oracle.max(1.0), "n={n}: {} vs {oracle}", lo.value);
    }
}
