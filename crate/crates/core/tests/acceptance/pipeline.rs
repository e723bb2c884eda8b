use fmo_core::harness::{emit, parse_csv, run, to_csv, InitSpec, Measure, OutputFormat, RunConfig};
use fmo_core::{Error, FmoModel};

fn small() -> RunConfig {
    RunConfig {
        tmax: 2.0,
        points: 12,
        measures: vec![Measure::Mi, Measure::Discord, Measure::ReeSingle],
        ..RunConfig::default()
    }
}

#[test]
fn identical_configs_give_identical_csv() {
    let c = small();
    assert_eq!(
        to_csv(&run(&c).unwrap()).unwrap(),
        to_csv(&run(&c).unwrap()).unwrap()
    );
}

#[test]
fn emitted_csv_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let trace = run(&small()).unwrap();
    let path = dir.path().join("t.csv");
    emit(&trace, OutputFormat::Csv, &path).unwrap();
    let back = parse_csv(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back.config, trace.config);
    assert_eq!(back.rows.len(), trace.rows.len());
    for (a, b) in trace.rows.iter().zip(&back.rows) {
        for m in [Measure::Mi, Measure::Discord, Measure::ReeSingle] {
            let (x, y) = (a.get(m).unwrap(), b.get(m).unwrap());
            assert!((x - y).abs() <= 1e-11 * x.abs().max(1e-300), "{x} vs {y}");
        }
    }
    let files = emit(&trace, OutputFormat::Plotdata, &path).unwrap();
    assert_eq!(files.len(), 3);
}

#[test]
fn config_file_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(
        &path,
        "init = \"site6\"\ncut = \"A=3; B=1,2\"\ntemp = 300.0\ntmax = 1.0\npoints = 5\nmeasures = [\"MI\"]\n",
    )
    .unwrap();
    let c = RunConfig::load(&path).unwrap();
    assert_eq!(c.init, InitSpec::Site6);
    let t = run(&c).unwrap();
    assert_eq!(t.rows.len(), 5);
    assert!(t.rows.iter().all(|r| r.discord.is_none() && r.mi.is_some()));
}

#[test]
fn errors_carry_the_time_point() {
    let c = RunConfig {
        cut: "A=3;B=1,2,4,5".parse().unwrap(),
        tmax: 1.0,
        points: 3,
        measures: vec![Measure::ReeFull],
        ..RunConfig::default()
    };
    match run(&c).unwrap_err() {
        Error::AtTime { source, .. } => assert!(source.is_validation()),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn shipped_model_file_is_valid() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/fmo_default.model");
    assert_eq!(FmoModel::load(path).unwrap(), FmoModel::default_model());
}
