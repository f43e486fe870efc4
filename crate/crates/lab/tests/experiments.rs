use nls_lab::commands::inflate::{Decomposition, COLUMNS};
use nls_lab::{run, Config, ExperimentRegistry, LabError, Table};

fn cfg(pairs: &[&str]) -> Config {
    pairs.iter().fold(Config::default(), |c, p| c.with(p).unwrap())
}

#[test]
fn registry_lists_all_commands() {
    assert_eq!(
        ExperimentRegistry::default().names(),
        vec!["inflate", "oracle-compare", "sweep", "trees", "verify-lemmas", "xi1-bound"]
    );
    assert!(matches!(run("plot", &Config::default()), Err(LabError::Config(_))));
}

#[test]
fn trees_small_orders() {
    let r = run("trees", &cfg(&["jmax=3"])).unwrap();
    let t = r.table.as_ref().unwrap();
    assert_eq!(t.values("count"), vec![1.0, 1.0, 3.0, 12.0]);
    assert!(t.rows.iter().all(|row| row[3] == "true"));
    let r0 = run("trees", &cfg(&["jmax=0"])).unwrap();
    assert_eq!(r0.table.unwrap().values("count"), vec![1.0]);
    assert_eq!(run("trees", &cfg(&["jmax=9"])).unwrap_err().exit_code(), 3);
}

#[test]
fn unknown_keys_are_rejected() {
    for name in ExperimentRegistry::default().names() {
        let err = run(name, &cfg(&["bogus=1"])).unwrap_err();
        assert!(matches!(&err, LabError::Config(m) if m.contains("bogus")), "{name}: {err}");
    }
}

#[test]
fn xi1_bound_rules() {
    assert_eq!(run("xi1-bound", &cfg(&["c=0.02"])).unwrap_err().exit_code(), 1);
    let zero = run("xi1-bound", &cfg(&["N=32,64", "R=0"])).unwrap();
    assert!(zero.passed());
    assert_eq!(zero.get("max_xi1_hs"), Some("0.0"));
}

#[test]
fn lemma_checks_on_standard_family() {
    let r = run("verify-lemmas", &cfg(&["families=gaussian"])).unwrap();
    assert!(r.passed(), "{:?}", r.verdict);
    assert_eq!(r.get("zero_background_lhs"), Some("0.0"));
    assert!(run("verify-lemmas", &cfg(&["families=nope"])).is_err());
}

#[test]
fn sweep_needs_four_points() {
    let err = run("sweep", &cfg(&["axis=R", "values=1,2,4"])).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert!(run("sweep", &cfg(&["axis=x"])).is_err());
}

#[test]
fn oracle_compare_linear_row() {
    let r = run("oracle-compare", &cfg(&["J=2"])).unwrap();
    let errs = r.table.unwrap().values("relative_l2_error");
    assert_eq!(errs.len(), 3);
    assert!(errs[0] > errs[1] && errs[1] > errs[2]);
    assert!(run("oracle-compare", &cfg(&["t_fraction=0.9"])).is_err());
    assert!(run("oracle-compare", &cfg(&["u0=zero"])).is_err());
}

#[test]
fn inflate_rows_are_self_consistent() {
    let r = run("inflate", &cfg(&["N=16", "M=32", "points=6"])).unwrap();
    let table = r.table.as_ref().unwrap();
    assert_eq!(table.columns, COLUMNS.iter().map(|c| c.to_string()).collect::<Vec<_>>());
    let parsed = Table::from_csv(&table.to_csv(None).unwrap()).unwrap();
    for row in &parsed.rows {
        let values: Vec<f64> = row.iter().map(|v| v.parse().unwrap()).collect();
        let dec = Decomposition::from_row(&values);
        // The emitted ratio is recomputable and the triangle bound holds.
        assert_eq!(dec.dominance_ratio(), values[8]);
        assert!(dec.partial_sum >= dec.lower_bound() - 1e-12);
    }
    let dominance: f64 = r.get("dominance_ratio").unwrap().parse().unwrap();
    assert_eq!(r.passed(), dominance > 1.0 && r.verdict == nls_lab::Verdict::Pass);
}

#[test]
fn inflate_zero_background_uses_absolute_threshold() {
    let r = run("inflate", &cfg(&["N=16", "M=32", "points=4", "u0=zero"])).unwrap();
    let xi0: Vec<f64> = r.table.as_ref().unwrap().values("xi0_hs");
    let dist: Vec<f64> = r.table.as_ref().unwrap().values("data_dist_hs");
    // With u0 = 0 the linear term is the perturbation itself.
    for (a, b) in xi0.iter().zip(&dist) {
        assert!((a - b).abs() <= 1e-12 * b);
    }
}

#[test]
fn inflate_enforced_conditions_name_the_failure() {
    let err = run("inflate", &cfg(&["N=16", "M=32", "enforce_conditions=true"])).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("(ii)"), "{err}");
}
