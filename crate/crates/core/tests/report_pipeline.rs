//! Simulation runs through comparison tables and the CSV file formats.

use edgeplace::metrics::{ArmTable, MetricsError};
use edgeplace::report::{
    delay_series, delay_series_from_rows, read_arm_table, read_delay_series, read_summary, read_ticks,
    tables_from_rows, write_arm_table, write_delay_series, write_summary, write_ticks, SummaryRow,
};
use edgeplace::sim::{run_trial, TraceSource};
use edgeplace::{compare_report, model, Arm, ScenarioConfig, TrialRun, ValidScenario};

fn small() -> ValidScenario {
    ScenarioConfig::from_toml_str("vehicle_count = 15\nhorizon = 20.0\n")
        .unwrap()
        .validate()
        .unwrap()
}

fn runs(arms: &[Arm], trials: usize) -> Vec<TrialRun> {
    let scenario = small();
    arms.iter()
        .flat_map(|&arm| (1..=trials).map(move |k| (arm, k)))
        .map(|(arm, k)| run_trial(&scenario, &TraceSource::Synthetic, arm, k, 100 + k as u64).unwrap())
        .collect()
}

#[test]
fn four_arms_five_trials_fill_the_table() {
    let all = runs(&Arm::ALL, 5);
    let report = compare_report(&all, &Arm::ALL).unwrap();
    for table in [&report.fairness, &report.utilization] {
        assert_eq!(table.trials, vec![1, 2, 3, 4, 5]);
        assert!(table.rows.iter().flatten().all(Option::is_some));
        for col in 0..4 {
            let mean = table.rows.iter().map(|r| r[col].unwrap()).sum::<f64>() / 5.0;
            assert!((table.average[col].unwrap() - mean).abs() < 1e-12);
        }
    }
    assert_eq!(report.series.len(), 20);
    // the same seed gives the same trace to every arm
    let first: Vec<_> = all.iter().filter(|r| r.trial == 1).map(|r| r.seed).collect();
    assert!(first.iter().all(|&s| s == first[0]));
}

#[test]
fn missing_arms_are_na_or_errors() {
    let only = runs(&[Arm::ALL[1]], 2);
    let report = compare_report(&only, &[]).unwrap();
    for row in &report.fairness.rows {
        assert!(row[1].is_some());
        assert!(row[0].is_none() && row[2].is_none() && row[3].is_none());
    }
    assert!(report.fairness.average[0].is_none());
    match compare_report(&only, &Arm::ALL) {
        Err(MetricsError::MissingArm(a)) => assert_eq!(a, Arm::ALL[0]),
        other => panic!("{:?}", other.map(|r| r.fairness)),
    }
    assert!(matches!(compare_report::<f64>(&[], &[]), Err(MetricsError::EmptyInput)));
}

#[test]
fn files_round_trip() {
    let all = runs(&Arm::ALL, 2);
    let run = &all[3];

    let mut buf = Vec::new();
    write_ticks(&run.ticks, &mut buf).unwrap();
    let rows = read_ticks::<f64, _>(buf.as_slice(), "ticks").unwrap();
    assert_eq!(rows.len(), run.ticks.len() * 6);
    let from_rows = delay_series_from_rows(&rows);
    let direct = delay_series(&run.ticks);
    assert_eq!(from_rows, direct);

    let mut buf = Vec::new();
    write_delay_series(&direct, &mut buf).unwrap();
    assert_eq!(read_delay_series::<f64, _>(buf.as_slice(), "series").unwrap(), direct);

    let refs: Vec<&TrialRun> = all.iter().collect();
    let mut buf = Vec::new();
    write_summary(&refs, &[&all[0].summary], &mut buf).unwrap();
    let rows: Vec<SummaryRow<f64>> = read_summary(buf.as_slice(), "summary").unwrap();
    let expected: Vec<_> = all
        .iter()
        .map(|r| SummaryRow::from_summary(r.trial, &r.summary))
        .collect();
    assert_eq!(rows, expected);

    let (fairness, utilization) = tables_from_rows(&rows);
    let report = compare_report(&all, &Arm::ALL).unwrap();
    assert_eq!(fairness, report.fairness);
    assert_eq!(utilization, report.utilization);

    let mut buf = Vec::new();
    write_arm_table(&fairness, &mut buf).unwrap();
    let back: ArmTable<f64> = read_arm_table(buf.as_slice(), "fairness").unwrap();
    assert_eq!(back, fairness);
}

#[test]
fn single_precision_runs_the_same_loop() {
    let scenario: model::ValidScenario<f32> =
        model::ScenarioConfig::<f32>::from_toml_str("vehicle_count = 10\nhorizon = 10.0\n")
            .unwrap()
            .validate()
            .unwrap();
    let run = run_trial(&scenario, &TraceSource::Synthetic, Arm::ALL[3], 1, 5).unwrap();
    assert_eq!(run.ticks.len(), 10);
    let j = run.summary.jain_index.unwrap();
    assert!(j > 0.0 && j <= 1.0 + 1e-6);
}
