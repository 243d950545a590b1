mod common;

use common::config_round_trip_check;
use fsi_core::io::{
    parse_config, read_timeseries, serialize_config, write_timeseries, write_vtk_snapshot,
    RunManifest, TIMESERIES_HEADER,
};
use fsi_core::{
    benchmark_config, BenchmarkId, BoundarySpec, ObservableSeries, Observables, Simulation,
    SimulationConfig,
};
use proptest::prelude::*;

#[test]
fn presets_round_trip() {
    let r = config_round_trip_check();
    assert!(r.is_ok(), "{r:?}");
}

#[test]
fn config_errors_name_the_key() {
    let err = |text: &str| parse_config(text).unwrap_err().to_string();
    assert!(err("benchmark = example1\n[scheme]\nbeta = 2\n").contains("scheme.beta"));
    assert!(err("benchmark = example1\n[scheme]\ndt = -1\n").contains("scheme.dt"));
    assert!(err("benchmark = example1\n[wall]\nshape = round\n").contains("wall.shape"));
    assert!(err("benchmark = example1\n[fluid]\nmu = 1\nmu = 2\n").contains("fluid.mu"));
    assert!(err("[nowhere]\n").contains("nowhere"));
}

fn series(n: usize) -> ObservableSeries {
    let mut s = ObservableSeries::default();
    for k in 0..n {
        let x = k as f64;
        s.push(
            1e-4 * x,
            Observables {
                diameter: 1.0 + 1e-3 * x,
                flowrate: -2.5 * x,
                mean_pressure: 1333.22 * x.sin(),
                eta_z_mid: 1e-17 * x,
                eta_r_mid: 0.1 / (1.0 + x),
                centerline_velocity: 0.0,
            },
        );
    }
    s
}

fn columns(s: &ObservableSeries) -> [Vec<f64>; 6] {
    [
        s.t.clone(),
        s.diameter.clone(),
        s.flowrate.clone(),
        s.mean_pressure.clone(),
        s.eta_z_mid.clone(),
        s.eta_r_mid.clone(),
    ]
}

#[test]
fn timeseries_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for n in [0, 3] {
        let path = dir.path().join(format!("s{n}.csv"));
        let s = series(n);
        write_timeseries(&s, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next(), Some(TIMESERIES_HEADER));
        assert_eq!(text.lines().count(), n + 1);
        assert_eq!(columns(&read_timeseries(&path).unwrap()), columns(&s));
    }
}

#[test]
fn non_finite_values_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = series(3);
    s.flowrate[1] = f64::NAN;
    assert!(write_timeseries(&s, &dir.path().join("bad.csv")).is_err());

    let sim = Simulation::new(benchmark_config(BenchmarkId::Example1)).unwrap();
    let mut state = sim.initial_state().unwrap();
    state.fluid.p[0] = f64::INFINITY;
    assert!(write_vtk_snapshot(&state, &dir.path().join("bad.vtk")).is_err());
    std::fs::write(
        dir.path().join("garbled.csv"),
        format!("{TIMESERIES_HEADER}\n1,2,x,4,5,6\n"),
    )
    .unwrap();
    assert!(read_timeseries(&dir.path().join("garbled.csv")).is_err());
}

#[test]
fn vtk_snapshot_of_the_rest_state() {
    let dir = tempfile::tempdir().unwrap();
    let sim = Simulation::new(benchmark_config(BenchmarkId::Example1)).unwrap();
    let state = sim.initial_state().unwrap();
    let path = dir.path().join("rest.vtk");
    write_vtk_snapshot(&state, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let n = sim.mesh.fine.node_count();
    let nt = sim.mesh.fine.triangles.len();
    assert!(text.contains(&format!("POINTS {n} double")));
    assert!(text.contains(&format!("CELLS {nt} {}", 4 * nt)));
    assert!(text.contains(&format!("POINT_DATA {n}")));
    let after = text.split("VECTORS velocity double\n").nth(1).unwrap();
    for line in after.lines().take(n) {
        let v: Vec<f64> = line.split(' ').map(|x| x.parse().unwrap()).collect();
        assert_eq!(v, [0.0, 0.0, 0.0]);
    }
}

#[test]
fn manifest_resolves_cadence_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SimulationConfig {
        snapshot_every: 0,
        t_final: 5e-4,
        dt: 1e-4,
        ..benchmark_config(BenchmarkId::Example1)
    };
    let m = RunManifest::new(cfg.clone(), dir.path().join("out")).unwrap();
    assert_eq!(m.snapshot_every, 5);
    m.write().unwrap();
    let back =
        parse_config(&std::fs::read_to_string(dir.path().join("out/config.txt")).unwrap()).unwrap();
    assert_eq!(back, cfg);
    assert!(RunManifest::new(cfg, "".into()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn perturbed_configs_round_trip(
        preset in 0usize..BenchmarkId::ALL.len(),
        dt in 1e-7f64..1e-2,
        beta in 0.0f64..=1.0,
        n_z in 2usize..200,
        n_r in 2usize..50,
        young in 1e3f64..1e9,
        p_in in -1e5f64..1e5,
    ) {
        let base = benchmark_config(BenchmarkId::ALL[preset]);
        let cfg = SimulationConfig {
            benchmark: None,
            dt,
            beta,
            n_z,
            n_r,
            wall: fsi_core::WallParams { young, ..base.wall },
            boundary: BoundarySpec::Constant { p_in, p_out: 0.5 * p_in },
            ..base
        };
        let text = serialize_config(&cfg);
        let back = parse_config(&text);
        prop_assert!(back.is_ok(), "{:?}\n{}", back, text);
        prop_assert_eq!(back.unwrap(), cfg);
    }
}
