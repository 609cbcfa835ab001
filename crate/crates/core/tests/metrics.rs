use fmbench_core::metrics::{aggregate, ess, render_table, report_cells, TableFormat, UNDEFINED_CELL};
use fmbench_core::sim::TrialOutcome;
use proptest::prelude::*;

fn outcome(success: bool, t: f64, len: f64) -> TrialOutcome {
    TrialOutcome {
        success,
        completion_time: t,
        traveled_length: len,
        ..TrialOutcome::failed()
    }
}

fn trials() -> impl Strategy<Value = Vec<TrialOutcome>> {
    prop::collection::vec(
        (any::<bool>(), 1.0..500.0f64, 1.0..60.0f64).prop_map(|(s, t, l)| outcome(s, t, l)),
        1..20,
    )
}

proptest! {
    #[test]
    fn ess_is_sr_over_act(outcomes in trials()) {
        let r = aggregate("p", "s", &outcomes).unwrap();
        let wins: Vec<&TrialOutcome> = outcomes.iter().filter(|o| o.success).collect();
        let sr = 100.0 * wins.len() as f64 / outcomes.len() as f64;
        prop_assert!((r.sr - sr).abs() < 1e-9);
        match r.act {
            Some(act) => {
                let mean = wins.iter().map(|o| o.completion_time).sum::<f64>() / wins.len() as f64;
                prop_assert!((act - mean).abs() < 1e-9);
                prop_assert!((r.ess - sr / mean).abs() < 1e-9);
            }
            None => {
                prop_assert!(wins.is_empty());
                prop_assert_eq!(r.ess, 0.0);
            }
        }
    }

    #[test]
    fn aggregate_ignores_trial_order(mut outcomes in trials(), seed in any::<u64>()) {
        let a = aggregate("p", "s", &outcomes).unwrap();
        let n = outcomes.len();
        outcomes.rotate_left((seed % n as u64) as usize);
        outcomes.reverse();
        let b = aggregate("p", "s", &outcomes).unwrap();
        prop_assert!((a.ess - b.ess).abs() < 1e-9);
        prop_assert_eq!(a.successes, b.successes);
    }

    #[test]
    fn ess_scales_inversely_with_time(sr in 1.0..100.0f64, act in 1.0..500.0f64, k in 0.1..10.0f64) {
        prop_assert!((ess(sr, Some(act * k)) * k - ess(sr, Some(act))).abs() < 1e-9);
    }
}

#[test]
fn failed_row_renders_placeholders() {
    let r = aggregate("DeepSeek-R1", "S1", &vec![TrialOutcome::failed(); 10]).unwrap();
    let cells = report_cells(&r, true);
    assert_eq!(cells[1..], [UNDEFINED_CELL, UNDEFINED_CELL, "0%", "0.000"]);
}

#[test]
fn latex_row_layout() {
    let r = aggregate("A*", "S1", &vec![outcome(true, 80.0, 14.3); 10]).unwrap();
    let table = render_table(&[r], TableFormat::Latex);
    assert!(table.contains("A* & 80s & 14.3 & 100% & 1.250 \\\\"), "{table}");
}
