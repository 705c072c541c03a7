use std::path::Path;

use ambient_attitude::simulate::{run_scenario, LogRow, SimConfig, TrajectoryLog};
use ambient_attitude::so3::{Mat3, Vec3};
use ambient_attitude_cli::config::{parse_config, ScenarioFile};
use ambient_attitude_cli::csv::{read_csv, write_csv_file, HEADER};
use ambient_attitude_cli::CliError;
use ambient_attitude::{GainSet, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

fn random_row(rng: &mut impl Rng, t: f64) -> LogRow {
    // Spread magnitudes over many decades to exercise the exponent format.
    let mut v = || rng.gen_range(-1.0..1.0) * 10f64.powi(rng.gen_range(-300..300));
    LogRow {
        t,
        r: Mat3::from_fn(|_, _| v()),
        omega: Vec3::new(v(), v(), v()),
        u: Vec3::new(v(), v(), v()),
        err_r: v().abs(),
        err_omega: v().abs(),
        defect: v().abs(),
    }
}

#[test]
fn three_rows_make_four_lines() {
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let log = TrajectoryLog {
        rows: (0..3).map(|k| random_row(&mut rng, k as f64 * 0.01)).collect(),
    };
    let path = dir.path().join("log.csv");
    write_csv_file(&log, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert_eq!(text.lines().next(), Some(HEADER));
}

#[test]
fn round_trip_is_bit_exact() {
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut rows: Vec<LogRow> = (0..200).map(|k| random_row(&mut rng, k as f64 * 1e-3)).collect();
    rows[0].r = Mat3::from_fn(|i, j| [0.0, -0.0, f64::MIN_POSITIVE, 5e-324, f64::MAX, f64::MIN, 1.0 / 3.0, 0.1, 2.0 / 3.0][3 * i + j]);
    let log = TrajectoryLog { rows };
    let path = dir.path().join("log.csv");
    write_csv_file(&log, &path).unwrap();
    let back = read_csv(&path).unwrap();
    assert_eq!(back.len(), log.rows.len());
    for (row, parsed) in log.rows.iter().zip(&back) {
        assert_eq!(row.to_values().map(f64::to_bits), parsed.map(f64::to_bits));
    }
}

#[test]
fn simulated_log_round_trips() {
    let dir = TempDir::new().unwrap();
    let log = run_scenario(&SimConfig::benchmark_track()).unwrap();
    let path = dir.path().join("fig2.csv");
    write_csv_file(&log, &path).unwrap();
    let back = read_csv(&path).unwrap();
    assert_eq!(back.len(), log.rows.len());
    assert_eq!(log.rows.last().unwrap().to_values(), *back.last().unwrap());
    assert!(back.last().unwrap()[16] <= 1e-2);
}

#[test]
fn reader_rejects_bad_files() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "t,R11\n0,1\n").unwrap();
    assert!(matches!(read_csv(&path), Err(CliError::Schema(_))));
    std::fs::write(&path, format!("{HEADER}\n1,2,3\n")).unwrap();
    assert!(matches!(read_csv(&path), Err(CliError::Schema(_))));
}

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

#[test]
fn fixtures_encode_the_benchmarks() {
    let fig1 = parse_config(&fixture("fig1.json")).unwrap();
    let bench = SimConfig::benchmark_stabilize();
    assert_eq!(fig1.sim.scenario, Scenario::Stabilize);
    assert_eq!(
        *fig1.sim.controller.as_ref().unwrap().gains(),
        GainSet::Pd { kp: Mat3::identity() * 4.0, kd: Mat3::identity() * 2.0 }
    );
    assert_eq!((fig1.sim.dt, fig1.sim.t_final, fig1.sim.k_e), (bench.dt, bench.t_final, bench.k_e));
    assert!((fig1.sim.initial.r - bench.initial.r).amax() <= 1e-15);
    assert_eq!(fig1.sim.initial.omega, bench.initial.omega);
    assert_eq!(fig1.sim.reference.attitude(3.0), bench.reference.attitude(3.0));

    let fig2 = parse_config(&fixture("fig2.json")).unwrap();
    let bench = SimConfig::benchmark_track();
    assert_eq!(fig2.sim.scenario, Scenario::Track);
    assert_eq!(
        *fig2.sim.controller.as_ref().unwrap().gains(),
        GainSet::TrackPdEps { kp: 4.0, kd: Mat3::identity() * 2.0, eps: 1.0 }
    );
    assert!((fig2.sim.initial.r - bench.initial.r).amax() <= 1e-15);
    assert_eq!(fig2.sim.initial.omega, bench.initial.omega);
    for t in [0.0, 1.3, 7.0, 20.0] {
        assert_eq!(fig2.sim.reference.attitude(t), bench.reference.attitude(t));
        assert_eq!(fig2.sim.reference.feedforward(t), bench.reference.feedforward(t));
    }
}

#[test]
fn open_loop_needs_no_gains() {
    let text = std::fs::read_to_string(fixture("fig2.json")).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["scenario"] = "open_loop".into();
    doc.as_object_mut().unwrap().remove("gains");
    let parsed = ScenarioFile::from_json(&doc.to_string()).unwrap().into_config().unwrap();
    assert_eq!(parsed.sim.scenario, Scenario::OpenLoop);
    assert!(parsed.sim.controller.is_none());
}
