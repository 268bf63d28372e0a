use qgyro::config::PropertiesConfig;
use qgyro::{Config, Experiment, RunContext};
use qgyro::experiments::Properties;

fn run(count: usize, inject_ky_sign_bug: bool, seed: u64) -> qgyro::ResultBundle {
    let config = Config { properties: PropertiesConfig { count, inject_ky_sign_bug }, ..Config::default() };
    Properties.run(&RunContext { config: &config, seed }).unwrap()
}

fn max_violation(b: &qgyro::ResultBundle, check: &str) -> f64 {
    let t = b.table("summary.csv").unwrap();
    let i = t.rows.iter().position(|r| r[0] == qgyro::output::Cell::Text(check.into())).unwrap();
    t.column("max_violation").unwrap()[i]
}

#[test]
fn clean_suite_has_no_violations() {
    let b = run(25, false, 11);
    assert_eq!(b.violations, 0);
    assert!(b.status().is_ok());
}

#[test]
fn flipped_ky_readout_is_caught() {
    let b = run(25, true, 11);
    assert!(max_violation(&b, "phase_covariance") > 1e-6, "{}", max_violation(&b, "phase_covariance"));
    // The mirror relations only rely on K_y being purely imaginary, which a
    // sign flip preserves.
    assert!(max_violation(&b, "k_y_odd") < 1e-10);
    assert!(b.violations > 0);
    let violations = b.table("violations.csv").unwrap();
    assert!(!violations.rows.is_empty());
    assert!(b.status().is_err());
}

#[test]
fn seed_determines_the_draws() {
    let a = run(5, false, 3);
    let b = run(5, false, 3);
    let c = run(5, false, 4);
    assert_eq!(a.tables, b.tables);
    assert_ne!(a.table("summary.csv").unwrap().to_csv(), c.table("summary.csv").unwrap().to_csv());
}
