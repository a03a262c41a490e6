#[path = "support/props.rs"]
mod props;

fn run(name: &str) {
    let suite = props::SUITES.iter().find(|s| s.name == name).expect("known suite");
    if let Err(e) = (suite.run)() {
        panic!("{name}: {e}");
    }
}

#[test]
fn conservation_and_debt_floor() {
    run("conservation and debt floor");
}

#[test]
fn determinism() {
    run("determinism");
}

#[test]
fn gini_vs_mean_absolute_difference() {
    run("gini vs mean absolute difference");
}

#[test]
fn gini_scale_and_order_invariance() {
    run("gini scale and order invariance");
}

#[test]
fn discrepancy_metric() {
    run("discrepancy metric");
}

#[test]
fn local_error_below_vertical_gap() {
    run("local error below vertical gap");
}

#[test]
fn potentials_vs_brute_force() {
    run("potentials vs brute force");
}
