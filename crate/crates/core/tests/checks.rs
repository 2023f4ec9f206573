use kmdp::verify::{run_check, CheckKind, GeneratorParams, RunOptions};

#[test]
fn every_check_passes_on_200_models() {
    for kind in CheckKind::ALL {
        let report = run_check(kind, 77, 200, &RunOptions::default());
        assert!(report.passed, "{kind}: {:?}", report.counterexample);
        assert!(report.max_discrepancy <= 1e-9);
    }
}

#[test]
fn every_check_passes_without_killing() {
    let options = RunOptions {
        params: GeneratorParams {
            zero_kill: true,
            ..GeneratorParams::default()
        },
        ..RunOptions::default()
    };
    for kind in CheckKind::ALL {
        assert!(run_check(kind, 5, 40, &options).passed, "{kind}");
    }
}

#[test]
fn larger_models_pass_the_exact_checks() {
    let params = GeneratorParams {
        max_states: 5,
        max_actions: 4,
        min_epochs: 4,
        max_epochs: 5,
        ..GeneratorParams::default()
    };
    let options = RunOptions {
        params,
        ..RunOptions::default()
    };
    for kind in [
        CheckKind::Oracle,
        CheckKind::Fundamental,
        CheckKind::Markov,
        CheckKind::Dp,
    ] {
        assert!(run_check(kind, 11, 20, &options).passed, "{kind}");
    }
}
