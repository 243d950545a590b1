mod common;

use common::{advection_checks, divergence_check, poiseuille_check, small_mesh, Lcg};
use fsi_core::benchmarks::stability_config;
use fsi_core::fluid::advect;
use fsi_core::mesh::{build_mesh, Point};
use fsi_core::{BenchmarkId, Simulation};
use proptest::prelude::*;

#[test]
fn zero_velocity_advection_is_identity() {
    let mesh = small_mesh();
    let fine = &mesh.fine;
    let mut rng = Lcg::new(3);
    let field: Vec<f64> = (0..fine.node_count()).map(|_| rng.next()).collect();
    let still = vec![[0.0, 0.0]; fine.node_count()];
    let out = advect(&field, &still, fine, &fine.nodes, 1e-3).unwrap();
    assert_eq!(out, field);
}

#[test]
fn uniform_flow_shifts_linear_data() {
    // Linear data under a uniform axial velocity is transported exactly where
    // the departure point stays inside the domain.
    let mesh = build_mesh(21, 5, 4.0, 1.0).unwrap();
    let fine = &mesh.fine;
    let (a, b, c) = (0.3, -1.2, 0.8);
    let field: Vec<f64> = fine.nodes.iter().map(|x| a + b * x[0] + c * x[1]).collect();
    let (u, dt) = (5.0, 0.02);
    let vel: Vec<Point> = vec![[u, 0.0]; fine.node_count()];
    let out = advect(&field, &vel, fine, &fine.nodes, dt).unwrap();
    for (k, x) in fine.nodes.iter().enumerate() {
        if x[0] - u * dt > 1e-12 {
            let exact = a + b * (x[0] - u * dt) + c * x[1];
            assert!(
                (out[k] - exact).abs() < 1e-12,
                "node {k}: {} vs {exact}",
                out[k]
            );
        }
    }
}

#[test]
fn stokes_velocity_is_discretely_divergence_free() {
    let r = divergence_check(5);
    assert!(r.is_ok(), "{r:?}");
}

#[test]
fn stiff_tube_recovers_poiseuille_flow() {
    let r = poiseuille_check();
    assert!(r.is_ok(), "{r:?}");
}

#[test]
fn centred_bump_evolves_mirror_symmetrically() {
    let cfg = stability_config(BenchmarkId::Example1, 1e-4, 1.0, 20);
    let mut sim = Simulation::new(cfg).unwrap();
    let state = sim.run(|_, _| Ok(())).unwrap();
    let mesh = &sim.mesh;
    let (nz, nr) = (mesh.fine_nz(), mesh.fine_nr());
    let (uz, ur) = (state.fluid.u_z(), state.fluid.u_r());
    let scale = uz.iter().chain(ur).fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(scale > 0.0);
    let mut worst: f64 = 0.0;
    for i in 0..nz {
        for j in 0..nr {
            let (k, m) = (mesh.fine_index(i, j), mesh.fine_index(nz - 1 - i, j));
            worst = worst.max((uz[k] + uz[m]).abs()).max((ur[k] - ur[m]).abs());
        }
    }
    assert!(worst < 1e-6 * scale, "asymmetry {worst:e} of {scale:e}");
    let n = state.shell.len();
    for k in 0..n {
        let d = (state.shell.eta_r[k] - state.shell.eta_r[n - 1 - k]).abs();
        assert!(
            d < 1e-6 * 0.02 * sim.cfg.radius,
            "wall asymmetry {d:e} at {k}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn advection_is_monotone_and_keeps_constants(seed in any::<u64>(), dt in 1e-4f64..5e-2) {
        let mesh = small_mesh();
        let r = advection_checks(&mesh, seed, dt);
        prop_assert!(r.is_ok(), "{:?}", r);
    }
}
