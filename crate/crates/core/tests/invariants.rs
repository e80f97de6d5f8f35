use critmarkets::verify::{run, Suite};

fn assert_suite(suite: Suite, skip: &[&str]) {
    let report = run(&[suite], 20_240_601, |c| println!("{c}"));
    let failed: Vec<_> = report
        .failures()
        .filter(|c| !skip.contains(&c.name.as_str()))
        .collect();
    assert!(failed.is_empty(), "failed checks: {failed:#?}");
}

#[test]
fn game_suite() {
    assert_suite(Suite::Game, &[]);
}

#[test]
fn logit_suite() {
    assert_suite(Suite::Logit, &[]);
}

#[test]
fn fixedpoint_suite() {
    assert_suite(Suite::Fixedpoint, &[]);
}

#[test]
fn sdt_suite() {
    assert_suite(Suite::Sdt, &[]);
}

// The Nash-limit check is asserted, at its stated tolerance, by the
// acceptance target; it is reported here but not repeated.
#[test]
fn qre_suite() {
    assert_suite(Suite::Qre, &["nash_limit"]);
}

#[test]
fn cusp_suite() {
    assert_suite(Suite::Cusp, &[]);
}

#[test]
fn twin_suite() {
    assert_suite(Suite::Twin, &[]);
}

#[test]
fn abm_suite() {
    assert_suite(Suite::Abm, &[]);
}
