use gnse_cli::verify::{run_suite, VerifyOptions, MODULES};

#[test]
fn suite_passes_on_every_module() {
    let checks = run_suite(None, VerifyOptions::default());
    assert!(checks.len() >= 20);
    for c in &checks {
        assert!(c.pass, "{}/{}: {}", c.module, c.name, c.value);
    }
    for m in MODULES {
        assert!(checks.iter().any(|c| c.module == m), "no checks for {m}");
    }
}

#[test]
fn flipped_l1_weight_breaks_the_power_rule() {
    let checks = run_suite(Some("fracops"), VerifyOptions { flip_l1_weight: true });
    let rule = checks.iter().find(|c| c.name == "caputo power rule t^2").unwrap();
    assert!(!rule.pass, "{}", rule.value);
}

#[test]
fn filter_selects_one_module() {
    let checks = run_suite(Some("wdomain"), VerifyOptions::default());
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c.module == "wdomain"));
    assert!(run_suite(Some("nope"), VerifyOptions::default()).is_empty());
}
