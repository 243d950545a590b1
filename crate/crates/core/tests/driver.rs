mod common;

use std::f64::consts::PI;

use common::{determinism_check, energy_oracle_check};
use fsi_core::benchmarks::{compute_edr, flowrate, mean_pressure};
use fsi_core::fluid::FluidState;
use fsi_core::mesh::build_mesh;
use fsi_core::{
    benchmark_config, run_simulation, BenchmarkId, BoundarySpec, Simulation, SimulationConfig,
};
use proptest::prelude::*;

fn short(id: BenchmarkId, steps: usize) -> SimulationConfig {
    let cfg = benchmark_config(id);
    SimulationConfig {
        t_final: steps as f64 * cfg.dt,
        ..cfg
    }
}

#[test]
fn unforced_rest_state_stays_at_rest() {
    let cfg = SimulationConfig {
        boundary: BoundarySpec::Zero,
        ..short(BenchmarkId::Example1, 10)
    };
    let mut sim = Simulation::new(cfg).unwrap();
    let s = sim.run(|_, _| Ok(())).unwrap();
    assert_eq!(s.step, 10);
    assert!(s.fluid.u.iter().chain(&s.fluid.p).all(|v| *v == 0.0));
    assert!(s.shell.displacement().iter().all(|v| *v == 0.0));
}

#[test]
fn beta_zero_runs_and_differs_from_beta_one() {
    let run = |beta: f64| {
        let cfg = SimulationConfig {
            beta,
            ..short(BenchmarkId::Example1, 20)
        };
        run_simulation(&cfg).unwrap()
    };
    let (a, b) = (run(0.0), run(1.0));
    assert!(a.final_state.shell.is_finite() && a.final_state.fluid.is_finite());
    let da = a
        .final_state
        .shell
        .eta_r
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(da > 0.0);
    assert_ne!(a.final_state.shell.eta_r, b.final_state.shell.eta_r);
    assert_eq!(a.series.t.len(), 21);
}

#[test]
fn energy_terms_match_quadrature_oracles() {
    let r = energy_oracle_check(20);
    assert!(r.is_ok(), "{r:?}");
}

#[test]
fn repeated_runs_are_bitwise_identical() {
    let r = determinism_check(10);
    assert!(r.is_ok(), "{r:?}");
}

#[test]
fn flowrate_and_mean_pressure_of_known_fields() {
    let mesh = build_mesh(9, 11, 2.0, 0.5).unwrap();
    let fine = &mesh.fine;
    let n = fine.node_count();
    let (a, radius) = (3.0, mesh.radius);
    let mut state = FluidState::zeros(&mesh);
    for (k, x) in fine.nodes.iter().enumerate() {
        state.u[k] = a * (radius * radius - x[1] * x[1]);
        state.u[n + k] = 7.0;
    }
    let q = flowrate(&state, &mesh, &fine.nodes, 1.0).unwrap();
    let exact = 2.0 * a * radius.powi(3) / 3.0;
    // trapezoid error for a quadratic: −R h² u''/12 with 20 fine intervals
    let h = radius / 20.0;
    let bias = radius * h * h * (2.0 * a) / 12.0;
    assert!(
        (q - (exact - bias)).abs() < 1e-12,
        "{q} vs {}",
        exact - bias
    );

    for (k, x) in mesh.coarse.nodes.iter().enumerate() {
        state.p[k] = 100.0 + 40.0 * x[1] - 5.0 * x[0];
    }
    let p = mean_pressure(&state, &mesh, &fine.nodes, 1.0).unwrap();
    assert!((p - (100.0 + 20.0 * radius - 5.0)).abs() < 1e-10, "{p}");
}

fn ellipse(n: usize) -> (Vec<f64>, Vec<f64>) {
    (0..=n)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / n as f64;
            (th.cos(), th.sin())
        })
        .unzip()
}

#[test]
fn edr_of_an_ellipse() {
    let (d, p) = ellipse(2000);
    let edr = compute_edr(&d, &p).unwrap();
    let exact = 100.0 * PI / (PI / 2.0 + 2.0);
    assert!((edr - exact).abs() < 0.005 * exact, "{edr} vs {exact}");
}

#[test]
fn edr_of_a_retraced_curve_is_zero() {
    let up: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
    let d: Vec<f64> = up.iter().chain(up.iter().rev().skip(1)).copied().collect();
    let p: Vec<f64> = d.iter().map(|x| 80.0 + 40.0 * x * x).collect();
    assert!(compute_edr(&d, &p).unwrap().abs() < 1e-12);
}

#[test]
fn edr_rejects_bad_loops() {
    assert!(compute_edr(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    let (d, mut p) = ellipse(100);
    p[3] = f64::NAN;
    assert!(compute_edr(&d, &p).is_err());
    let (d, p) = ellipse(100);
    assert!(compute_edr(&d[..60], &p[..60]).is_err());
}

proptest! {
    #[test]
    fn edr_is_invariant_under_positive_affine_maps(
        sd in 0.01f64..100.0, od in -10.0f64..10.0,
        sp in 0.01f64..1e4, op in -1e3f64..1e3,
        tilt in -0.9f64..0.9,
    ) {
        let (d, p) = ellipse(400);
        let p: Vec<f64> = p.iter().zip(&d).map(|(p, d)| p + tilt * d).collect();
        let base = compute_edr(&d, &p).unwrap();
        let d2: Vec<f64> = d.iter().map(|x| sd * x + od).collect();
        let p2: Vec<f64> = p.iter().map(|x| sp * x + op).collect();
        let moved = compute_edr(&d2, &p2).unwrap();
        prop_assert!((moved - base).abs() < 1e-9 * base.max(1.0), "{} vs {}", moved, base);
    }
}
