mod common;

use std::sync::Arc;

use common::{harmonic_extension_checks, interface_geometry_check, small_mesh, Lcg};
use fsi_core::ale::{domain_velocity, HarmonicExtension, MovingMesh};
use fsi_core::mesh::{build_mesh, Mesh};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

/// Dense P1 Laplacian with Dirichlet rows replaced by identity, from the
/// cotangent-free gradient formula on each triangle.
fn dense_extension(mesh: &Mesh, boundary: &[f64]) -> Vec<f64> {
    let fine = &mesh.fine;
    let n = fine.node_count();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for tri in &fine.triangles {
        let p = tri.map(|k| fine.nodes[k]);
        let twice_area =
            (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        // ∇φ_k = perp(opposite edge) / 2A
        let grad = |k: usize| {
            let (b, c) = (p[(k + 1) % 3], p[(k + 2) % 3]);
            [(b[1] - c[1]) / twice_area, (c[0] - b[0]) / twice_area]
        };
        for k in 0..3 {
            for l in 0..3 {
                let (gk, gl) = (grad(k), grad(l));
                a[(tri[k], tri[l])] += 0.5 * twice_area * (gk[0] * gl[0] + gk[1] * gl[1]);
            }
        }
    }
    let mut rhs = DVector::<f64>::zeros(n);
    for k in 0..n {
        if mesh.is_boundary(k) {
            a.row_mut(k).fill(0.0);
            a[(k, k)] = 1.0;
            rhs[k] = boundary[k];
        }
    }
    a.lu()
        .solve(&rhs)
        .expect("dense Laplacian")
        .iter()
        .copied()
        .collect()
}

#[test]
fn extension_matches_dense_oracle() {
    let mesh = build_mesh(9, 5, 3.0, 0.7).unwrap();
    let ext = HarmonicExtension::new(&mesh).unwrap();
    let mut rng = Lcg::new(11);
    let n = mesh.fine.node_count();
    let boundary: Vec<f64> = (0..n)
        .map(|k| if mesh.is_boundary(k) { rng.next() } else { 0.0 })
        .collect();
    let got = ext.extend(&boundary).unwrap();
    let want = dense_extension(&mesh, &boundary);
    for k in 0..n {
        assert!(
            (got[k] - want[k]).abs() < 1e-12,
            "node {k}: {} vs {}",
            got[k],
            want[k]
        );
    }
}

#[test]
fn interface_extension_vanishes_on_the_rest_of_the_boundary() {
    let mesh = small_mesh();
    let ext = HarmonicExtension::new(&mesh).unwrap();
    let nw = mesh.interface.len();
    let vals: Vec<f64> = (0..nw).map(|k| (k as f64 * 0.7).sin()).collect();
    let v = ext.extend_interface(&vals).unwrap();
    for (&node, &x) in mesh.interface.iter().zip(&vals) {
        assert_eq!(v[node], x);
    }
    for (k, x) in v.iter().enumerate() {
        if mesh.is_boundary(k) && !mesh.interface.contains(&k) {
            assert_eq!(*x, 0.0);
        }
    }
    assert!(ext.extend_interface(&vals[1..]).is_err());
}

#[test]
fn domain_velocity_rejects_bad_input() {
    let d = vec![[0.0, 1.0]; 4];
    assert!(domain_velocity(&d, &d, 0.0).is_err());
    assert!(domain_velocity(&d, &d, -1e-3).is_err());
    assert!(domain_velocity(&d, &d[..3], 1e-3).is_err());
    let w = domain_velocity(&[[1.0, 2.0]; 4], &d, 0.5).unwrap();
    assert!(w.iter().all(|v| *v == [2.0, 2.0]));
}

#[test]
fn folded_wall_is_reported_as_tangled() {
    let mesh = Arc::new(small_mesh());
    let ext = HarmonicExtension::new(&mesh).unwrap();
    let mut moving = MovingMesh::at_rest(mesh.clone());
    moving.check_valid().unwrap();
    let nw = mesh.interface.len();
    let mut dr = vec![0.0; nw];
    dr[nw / 2] = -1.5 * mesh.radius;
    let d = ext.extend_vector(&vec![0.0; nw], &dr).unwrap();
    moving.update(d, 1e-3).unwrap();
    assert!(moving.min_area() <= 0.0);
    assert!(moving.check_valid().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extension_keeps_range_and_affine_data(seed in any::<u64>(), nz in 3usize..9, nr in 2usize..6) {
        let mesh = build_mesh(nz, nr, 2.0, 0.5).unwrap();
        let r = harmonic_extension_checks(&mesh, seed);
        prop_assert!(r.is_ok(), "{:?}", r);
    }

    #[test]
    fn affine_wall_geometry_is_exact(seed in any::<u64>()) {
        let r = interface_geometry_check(seed);
        prop_assert!(r.is_ok(), "{:?}", r);
    }
}
