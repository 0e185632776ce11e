use std::path::{Path, PathBuf};

use parconc::config::{CheckConfig, CheckKind, GridConfig, MaximalConfig, ScenarioConfig};
use parconc::{run_config, run_scenario, run_suite, LabError, RunOptions};
use parconc_core::domain::Domain;
use parconc_core::solver::{Profile, SourceSpec};
use parconc_core::Exponent;
use proptest::prelude::*;

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.toml"))
}

fn opts(out: &Path) -> RunOptions {
    RunOptions {
        out: Some(out.to_path_buf()),
        ..RunOptions::default()
    }
}

fn small(checks: Vec<CheckConfig>) -> ScenarioConfig {
    ScenarioConfig {
        name: "small".into(),
        seed: 11,
        out: None,
        domain: Domain::interval(0.0, 1.0).unwrap(),
        source: SourceSpec::Constant { c: 1.0 },
        grid: GridConfig {
            h: 1.0 / 64.0,
            dt: 2.5e-4,
            t_end: 1.0,
        },
        maximal: None,
        checks,
    }
}

fn check(kind: CheckKind) -> CheckConfig {
    CheckConfig {
        label: None,
        sharpness: false,
        kind,
    }
}

fn parabolic(p: f64) -> CheckKind {
    CheckKind::Parabolic {
        alpha: 0.5,
        p: Exponent::Finite(p),
        t_min: None,
        samples: 1000,
        tolerance: None,
    }
}

#[test]
fn torch_scenario_passes() {
    let dir = tempfile::tempdir().unwrap();
    let rec = run_scenario(&bundled("torch-1d"), &opts(dir.path())).unwrap();
    assert!(rec.passed, "{rec:#?}");
    assert_eq!(rec.exit_code(), 0);
    assert_eq!(rec.results.len(), rec.config.checks.len());
    for f in ["summary.json", "reports.jsonl", "max.csv", "energy-3.csv"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let csv = std::fs::read_to_string(dir.path().join("energy-3.csv")).unwrap();
    assert!(csv.starts_with("t,value\n"));
    let lines = std::fs::read_to_string(dir.path().join("reports.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 4);
    let summary: parconc::RunRecord =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.without_timing(), rec.without_timing());
}

#[test]
fn sharp_scenario_exits_zero_because_checks_fail() {
    let dir = tempfile::tempdir().unwrap();
    let rec = run_scenario(&bundled("torch-1d-sharp"), &opts(dir.path())).unwrap();
    assert!(rec
        .results
        .iter()
        .all(|r| r.sharpness && !r.observed_pass && r.as_expected));
    assert_eq!(rec.exit_code(), 0);
}

#[test]
fn exit_code_contract() {
    let dir = tempfile::tempdir().unwrap();
    // a passing check marked as sharpness deviates
    let mut c = check(parabolic(0.5));
    c.sharpness = true;
    let rec = run_config(&small(vec![c]), &opts(dir.path())).unwrap();
    assert!(rec.results[0].observed_pass && !rec.passed);
    assert_eq!(rec.exit_code(), 1);
    // a failing ordinary check deviates
    let rec = run_config(&small(vec![check(parabolic(0.8))]), &opts(dir.path())).unwrap();
    assert!(!rec.results[0].observed_pass);
    assert_eq!(rec.exit_code(), 1);
}

#[test]
fn empty_checks_list_is_a_valid_run() {
    let dir = tempfile::tempdir().unwrap();
    let rec = run_config(&small(vec![]), &opts(dir.path())).unwrap();
    assert!(rec.results.is_empty() && rec.passed && rec.field.is_none());
    assert!(dir.path().join("summary.json").is_file());
    assert_eq!(std::fs::read_to_string(dir.path().join("reports.jsonl")).unwrap(), "");
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(vec![
        check(parabolic(0.5)),
        check(CheckKind::Spatial {
            p: Exponent::Finite(0.5),
            t: Some(0.5),
            samples: 500,
            tolerance: None,
        }),
    ]);
    let a = run_config(&cfg, &opts(&dir.path().join("a"))).unwrap();
    let b = run_config(&cfg, &opts(&dir.path().join("b"))).unwrap();
    assert_eq!(a.without_timing(), b.without_timing());
    assert_eq!(
        std::fs::read(dir.path().join("a/reports.jsonl")).unwrap(),
        std::fs::read(dir.path().join("b/reports.jsonl")).unwrap()
    );
    let c = run_config(
        &cfg,
        &RunOptions {
            seed: Some(12),
            ..opts(&dir.path().join("c"))
        },
    )
    .unwrap();
    assert_eq!(c.seed, 12);
    assert_ne!(a.without_timing(), c.without_timing());
}

#[test]
fn tolerance_scale_rescales_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(vec![check(parabolic(0.8))]);
    let base = run_config(&cfg, &opts(dir.path())).unwrap();
    let parconc::CheckDetail::Concavity { report } = &base.results[0].detail else {
        panic!("unexpected detail")
    };
    assert!(!base.results[0].observed_pass);
    let scale = 2.0 * report.worst_defect / report.tolerance;
    let loose = run_config(
        &cfg,
        &RunOptions {
            tolerance_scale: scale,
            ..opts(dir.path())
        },
    )
    .unwrap();
    assert!(loose.results[0].observed_pass);
    let bad = RunOptions {
        tolerance_scale: 0.0,
        ..opts(dir.path())
    };
    assert!(matches!(run_config(&cfg, &bad), Err(LabError::Options(_))));
}

#[test]
fn suite_of_one_matches_single_run_and_parallelism_is_invisible() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("scenarios");
    std::fs::create_dir_all(&scen).unwrap();
    let mut cfgs = Vec::new();
    for (i, p) in [0.5, 0.8, 0.4].into_iter().enumerate() {
        let mut cfg = small(vec![check(parabolic(p))]);
        cfg.name = format!("s{i}");
        std::fs::write(scen.join(format!("s{i}.toml")), cfg.to_toml().unwrap()).unwrap();
        cfgs.push(cfg);
    }
    let one = run_suite(&scen, 1, &opts(&dir.path().join("one"))).unwrap();
    let four = run_suite(&scen, 4, &opts(&dir.path().join("four"))).unwrap();
    assert_eq!(one.entries, four.entries);
    for (a, b) in one.records.iter().zip(&four.records) {
        assert_eq!(
            a.as_ref().unwrap().without_timing(),
            b.as_ref().unwrap().without_timing()
        );
    }
    assert!(!one.passed && one.exit_code() == 1);
    assert!(dir.path().join("one/s1/summary.json").is_file());
    assert!(dir.path().join("one/suite.json").is_file());

    let single = run_config(&cfgs[0], &opts(&dir.path().join("single"))).unwrap();
    assert_eq!(
        one.records[0].as_ref().unwrap().without_timing(),
        single.without_timing()
    );
}

#[test]
fn suite_isolates_broken_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.toml"), small(vec![]).to_toml().unwrap()).unwrap();
    std::fs::write(dir.path().join("b.toml"), "name = \"b\"\n[grid]\nh = 1\n").unwrap();
    let rep = run_suite(dir.path(), 2, &opts(&dir.path().join("out"))).unwrap();
    assert!(rep.entries[0].passed && rep.entries[0].error.is_none());
    assert!(!rep.entries[1].passed && rep.entries[1].error.is_some());
    assert!(!rep.passed);
    assert!(run_suite(&dir.path().join("out"), 1, &RunOptions::default()).is_err());
}

#[test]
fn bundled_suite_is_green() {
    let dir = tempfile::tempdir().unwrap();
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let rep = run_suite(&root, 4, &opts(dir.path())).unwrap();
    assert!(rep.passed, "{}", rep.table());
}

#[test]
fn invalid_configs_report_lines() {
    let text = "name = \"x\"\n[domain]\nshape = \"interval\"\na = 0.0\nb = \"one\"\n";
    let err = ScenarioConfig::from_toml(text).unwrap_err().to_string();
    assert!(err.contains("line ") && err.contains("\"one\""), "{err}");
    let mut cfg = small(vec![]);
    cfg.source = SourceSpec::SemilinearPower { gamma: 0.5 };
    assert!(cfg.validate().is_err());
    cfg.maximal = Some(MaximalConfig { eps: vec![1e-2, 1e-3] });
    assert!(cfg.validate().is_ok());
    cfg.source = SourceSpec::Constant { c: 1.0 };
    assert!(cfg.validate().is_err());
    let mut cfg = small(vec![check(CheckKind::Structure {
        alpha: 0.5,
        p: 1.5,
        samples: 10,
        tolerance: None,
    })]);
    assert!(cfg.validate().is_err());
    cfg.checks.clear();
    cfg.grid.dt = 0.0;
    assert!(cfg.validate().is_err());
}

#[test]
fn bundled_configs_round_trip() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    for path in parconc::suite::scenario_files(&root).unwrap() {
        let cfg = ScenarioConfig::load(&path).unwrap();
        let back = ScenarioConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, back, "{}", path.display());
    }
}

fn exponent() -> impl Strategy<Value = Exponent> {
    prop_oneof![
        Just(Exponent::PosInf),
        Just(Exponent::NegInf),
        (-5.0f64..5.0).prop_map(Exponent::Finite)
    ]
}

fn domain() -> impl Strategy<Value = Domain> {
    prop_oneof![
        (-2.0f64..0.0, 0.1f64..3.0).prop_map(|(a, w)| Domain::interval(a, a + w).unwrap()),
        (-1.0f64..1.0, -1.0f64..1.0, 0.1f64..2.0).prop_map(|(x, y, r)| Domain::disk([x, y], r).unwrap()),
        (0.1f64..2.0, 0.1f64..2.0)
            .prop_map(|(w, h)| Domain::polygon(vec![[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]]).unwrap()),
    ]
}

fn source() -> impl Strategy<Value = SourceSpec> {
    prop_oneof![
        (0.1f64..3.0).prop_map(|c| SourceSpec::Constant { c }),
        (0.1f64..1.0, 0.0f64..=0.5).prop_map(|(d, gamma)| SourceSpec::DistPower { d, gamma }),
        (0.0f64..=0.5, 0.1f64..2.0).prop_map(|(gamma, c)| SourceSpec::TimeWeighted {
            gamma,
            profile: Profile::Constant { c }
        }),
        (0.0f64..=0.5, 0.1f64..1.0).prop_map(|(gamma, d)| SourceSpec::TimeWeighted {
            gamma,
            profile: Profile::DistPower { d }
        }),
    ]
}

fn check_kind() -> impl Strategy<Value = CheckKind> {
    let opt = || proptest::option::of(1e-6f64..1.0);
    prop_oneof![
        (exponent(), opt(), 1usize..5000, opt()).prop_map(|(p, t, samples, tolerance)| CheckKind::Spatial {
            p,
            t,
            samples,
            tolerance
        }),
        (0.1f64..2.0, exponent(), opt(), 1usize..5000, opt()).prop_map(|(alpha, p, t_min, samples, tolerance)| {
            CheckKind::Parabolic {
                alpha,
                p,
                t_min,
                samples,
                tolerance,
            }
        }),
        (0.1f64..2.0, exponent(), 1e-4f64..1.0).prop_map(|(alpha, p, g)| CheckKind::Envelope {
            alpha,
            p,
            max_relative_gap: g
        }),
        (exponent(), 0.1f64..3.0, proptest::option::of(0.1f64..2.0), opt(), opt()).prop_map(
            |(q, m, alpha, t_min, tolerance)| CheckKind::Energy {
                q,
                m,
                alpha,
                t_min,
                tolerance
            }
        ),
        (0.1f64..2.0, 0.01f64..0.99, 1usize..5000, opt()).prop_map(|(alpha, p, samples, tolerance)| {
            CheckKind::Structure {
                alpha,
                p,
                samples,
                tolerance,
            }
        }),
        (0.1f64..2.0, 0.0f64..5.0, 1e-3f64..1.0).prop_map(|(alpha, expected, tolerance)| {
            CheckKind::BoundaryExponent {
                x_star: vec![0.0],
                y_star: vec![1.0],
                alpha,
                expected,
                tolerance,
            }
        }),
    ]
}

fn config() -> impl Strategy<Value = ScenarioConfig> {
    (
        "[a-z][a-z0-9-]{0,12}",
        any::<u64>(),
        domain(),
        source(),
        (1e-3f64..0.5, 1e-5f64..0.1, 0.01f64..10.0),
        proptest::collection::vec(
            (proptest::option::of("[a-z ]{1,10}"), any::<bool>(), check_kind()),
            0..6,
        ),
    )
        .prop_map(|(name, seed, domain, source, (h, dt, t_end), checks)| ScenarioConfig {
            name,
            seed,
            out: None,
            domain,
            source,
            grid: GridConfig { h, dt, t_end },
            maximal: None,
            checks: checks
                .into_iter()
                .map(|(label, sharpness, kind)| CheckConfig { label, sharpness, kind })
                .collect(),
        })
}

proptest! {
    #[test]
    fn config_round_trip(cfg in config()) {
        let text = cfg.to_toml().unwrap();
        let back = ScenarioConfig::from_toml(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_toml().unwrap(), text);
    }
}
