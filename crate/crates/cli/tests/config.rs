use finicode_cli::{CodeName, ExperimentConfig, Format};

fn full() -> ExperimentConfig {
    ExperimentConfig {
        schema_version: 1,
        code: Some(CodeName::Phi),
        n: Some(2),
        trials: Some(123),
        half_width: Some(4567),
        seed: Some(u64::MAX),
        thresholds: Some(vec![10, 100]),
        thetas: Some(vec![0.1, 0.3333333333333333, 1.0]),
        n_list: Some(vec![5]),
        fit_range: Some((10, 1000)),
        depth: Some(4),
        windows: Some(2),
        blocks: Some(99),
        matrix: Some("chain.json".into()),
        input: Some("in.csv".into()),
        lo: Some(-17),
        output: Some("out.json".into()),
        format: Some(Format::Csv),
    }
}

#[test]
fn config_round_trips() {
    for config in [full(), ExperimentConfig::default(), ExperimentConfig::default().with_defaults()] {
        let text = serde_json::to_string(&config).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, config);
    }
}

#[test]
fn layers_take_the_first_set_value() {
    let flags = ExperimentConfig { seed: Some(1), ..Default::default() };
    let file = ExperimentConfig { seed: Some(2), trials: Some(3), ..Default::default() };
    let merged = flags.over(file).with_defaults();
    assert_eq!((merged.seed, merged.trials, merged.half_width), (Some(1), Some(3), Some(10_000)));
}

#[test]
fn caps_are_enforced() {
    assert!(full().validate().is_ok());
    for bad in [
        ExperimentConfig { n: Some(0), ..full() },
        ExperimentConfig { trials: Some(0), ..full() },
        ExperimentConfig { half_width: Some(u64::MAX), ..full() },
        ExperimentConfig { thetas: Some(vec![f64::NAN]), ..full() },
        ExperimentConfig { fit_range: Some((100, 100)), ..full() },
        ExperimentConfig { blocks: Some(1), ..full() },
    ] {
        assert_eq!(bad.validate().unwrap_err().exit_code(), 2, "{bad:?}");
    }
}

#[test]
fn recorded_config_keeps_only_what_a_command_reads() {
    let c = full().used_by("vectors");
    assert_eq!((c.n, c.depth, c.seed, c.code), (Some(2), Some(4), None, None));
    let c = ExperimentConfig { code: Some(CodeName::Meshalkin), ..full() }.used_by("tails");
    assert_eq!((c.n, c.trials, c.output.as_ref()), (None, Some(123), None));
}
