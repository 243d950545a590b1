//! Checks shared by the acceptance suite and the integration tests. Each
//! returns a short summary on success and the violation on failure.
#![allow(dead_code)]

use fsi_core::ale::{interface_geometry, HarmonicExtension};
use fsi_core::benchmarks::{benchmark_config, BenchmarkId};
use fsi_core::fluid::{advect, divergence_residual};
use fsi_core::io::{parse_config, serialize_config};
use fsi_core::mesh::{build_mesh, p1_gradients, Mesh, Point};
use fsi_core::shell::{ShellBc, ShellKinematics, ShellState, WallGrid};
use fsi_core::{BoundarySpec, CoupledState, Simulation, SimulationConfig};

pub type Check = Result<String, String>;

/// Small deterministic generator so the checks need no RNG state.
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Self(
            seed.wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407),
        )
    }

    /// Uniform in [-1, 1).
    pub fn next(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }
}

pub fn small_mesh() -> Mesh {
    build_mesh(11, 6, 2.0, 0.5).unwrap()
}

/// Extension values lie within the boundary range, and affine boundary data
/// is reproduced exactly.
pub fn harmonic_extension_checks(mesh: &Mesh, seed: u64) -> Check {
    let ext = HarmonicExtension::new(mesh).map_err(|e| e.to_string())?;
    let n = mesh.fine.node_count();
    let mut rng = Lcg::new(seed);
    let boundary: Vec<f64> = (0..n)
        .map(|k| if mesh.is_boundary(k) { rng.next() } else { 0.0 })
        .collect();
    let (lo, hi) = (0..n)
        .filter(|&k| mesh.is_boundary(k))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), k| {
            (a.min(boundary[k]), b.max(boundary[k]))
        });
    let v = ext.extend(&boundary).map_err(|e| e.to_string())?;
    let tol = 1e-12 * (hi - lo).max(1.0);
    if let Some(k) = (0..n).find(|&k| v[k] < lo - tol || v[k] > hi + tol) {
        return Err(format!("node {k}: {} outside [{lo}, {hi}]", v[k]));
    }
    let (a, b, c) = (rng.next(), rng.next(), rng.next());
    let affine = |x: Point| a + b * x[0] + c * x[1];
    let data: Vec<f64> = (0..n)
        .map(|k| {
            if mesh.is_boundary(k) {
                affine(mesh.fine.nodes[k])
            } else {
                0.0
            }
        })
        .collect();
    let v = ext.extend(&data).map_err(|e| e.to_string())?;
    let err = (0..n)
        .map(|k| (v[k] - affine(mesh.fine.nodes[k])).abs())
        .fold(0.0, f64::max);
    if err > 1e-11 {
        return Err(format!("affine data reproduced with error {err:e}"));
    }
    Ok(format!("range ok, affine error {err:.1e}"))
}

/// Semi-Lagrangian advection stays within the data range and keeps
/// constants.
pub fn advection_checks(mesh: &Mesh, seed: u64, dt: f64) -> Check {
    let fine = &mesh.fine;
    let n = fine.node_count();
    let mut rng = Lcg::new(seed);
    let field: Vec<f64> = (0..n).map(|_| rng.next()).collect();
    let (s0, s1) = (rng.next(), rng.next());
    let vel: Vec<Point> = fine
        .nodes
        .iter()
        .map(|x| [20.0 * (1.0 + s0 * x[1]), 10.0 * s1 * (x[0] * 3.0).sin()])
        .collect();
    let out = advect(&field, &vel, fine, &fine.nodes, dt).map_err(|e| e.to_string())?;
    let (lo, hi) = field
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    if let Some(k) = (0..n).find(|&k| out[k] < lo - 1e-14 || out[k] > hi + 1e-14) {
        return Err(format!("node {k}: {} outside [{lo}, {hi}]", out[k]));
    }
    let c = 0.5 + rng.next();
    let constant = vec![c; n];
    let out = advect(&constant, &vel, fine, &fine.nodes, dt).map_err(|e| e.to_string())?;
    let err = out.iter().map(|v| (v - c).abs()).fold(0.0, f64::max);
    if err > 1e-13 {
        return Err(format!("constant changed by {err:e}"));
    }
    Ok(format!("range ok, constant error {err:.1e}"))
}

/// Relative divergence residual after a few Example 1 steps.
pub fn divergence_check(steps: usize) -> Check {
    let cfg = SimulationConfig {
        t_final: steps as f64 * 1e-4,
        ..benchmark_config(BenchmarkId::Example1)
    };
    let mut sim = Simulation::new(cfg).map_err(|e| e.to_string())?;
    let mut state = sim.initial_state().map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        worst = worst.max(stokes_divergence(&sim, &state).map_err(|e| e.to_string())?);
        sim.advance(&mut state).map_err(|e| e.to_string())?;
    }
    if worst > 1e-8 {
        return Err(format!("relative divergence residual {worst:e}"));
    }
    Ok(format!("residual {worst:.1e}"))
}

/// Divergence of the Step 1 velocity on the mesh it was solved on.
pub fn stokes_divergence(sim: &Simulation, state: &CoupledState) -> fsi_core::Result<f64> {
    use fsi_core::ale::interface_geometry;
    use fsi_core::fluid::{StokesInput, StokesSolver};
    let mut solver = StokesSolver::new(sim.mesh.clone(), &sim.shell_ops)?;
    let geometry = interface_geometry(&state.shell, &sim.shell_ops.grid);
    let input = StokesInput {
        state: &state.fluid,
        positions: &state.mesh.positions,
        shell: &state.shell,
        shell_ops: &sim.shell_ops,
        geometry: &geometry,
        p_trace: &state.p_trace,
        boundary: &sim.boundary,
        t_new: state.t + sim.cfg.dt,
        beta: sim.cfg.beta,
        dt: sim.cfg.dt,
        fluid: &sim.cfg.fluid,
    };
    let out = solver.solve(&input)?;
    Ok(divergence_residual(
        &sim.mesh,
        &state.mesh.positions,
        &out.u,
    ))
}

/// Nearly rigid tube under a constant pressure drop, run to steady state;
/// the axial velocity across the middle section is compared with the planar
/// Poiseuille profile `G (R² − r²) / 2μ`.
pub fn poiseuille_check() -> Check {
    let base = benchmark_config(BenchmarkId::Example1);
    let (mu, dp) = (1.0, 48.0);
    let mut cfg = SimulationConfig {
        benchmark: None,
        n_z: 25,
        n_r: 9,
        fluid: fsi_core::FluidParams {
            density: 1.0,
            viscosity: mu,
        },
        wall: fsi_core::WallParams {
            young: base.wall.young * 1e4,
            ..base.wall
        },
        kinematics: ShellKinematics::RadialOnly,
        bc: ShellBc::Clamped,
        dt: 0.01,
        t_final: 2.0,
        boundary: BoundarySpec::Constant {
            p_in: dp,
            p_out: 0.0,
        },
        ..base
    };
    cfg.model = fsi_core::WallModel::Formaggia { k: 1.0, gamma: 0.0 };
    let (length, radius) = (cfg.length, cfg.radius);
    let mut sim = Simulation::new(cfg).map_err(|e| e.to_string())?;
    let state = sim.run(|_, _| Ok(())).map_err(|e| e.to_string())?;
    let mesh = &sim.mesh;
    let g = dp / length;
    let u_max = g * radius * radius / (2.0 * mu);
    let i = mesh.fine_nz() / 2;
    let mut worst: f64 = 0.0;
    for j in 0..mesh.fine_nr() {
        let k = mesh.fine_index(i, j);
        let r = state.mesh.positions[k][1];
        let exact = g * (radius * radius - r * r) / (2.0 * mu);
        worst = worst.max((state.fluid.u_z()[k] - exact).abs() / u_max);
    }
    if worst > 0.02 {
        return Err(format!(
            "max deviation {:.2}% of the peak velocity",
            100.0 * worst
        ));
    }
    Ok(format!(
        "max deviation {:.3}% of the peak velocity",
        100.0 * worst
    ))
}

/// Geometry of a linearly displaced wall is exact.
pub fn interface_geometry_check(seed: u64) -> Check {
    let mut rng = Lcg::new(seed);
    let grid = WallGrid::uniform(17, 3.0).map_err(|e| e.to_string())?;
    let n = grid.len();
    let (a, b, c, d) = (rng.next(), 0.1 * rng.next(), rng.next(), 0.1 * rng.next());
    let mut s = ShellState::rest(n);
    for (k, z) in grid.nodes().iter().enumerate() {
        s.eta_z[k] = a + b * z;
        s.eta_r[k] = c + d * z;
    }
    let g = interface_geometry(&s, &grid);
    let j = (1.0 + b).hypot(d);
    let n_exact = [-d / j, (1.0 + b) / j];
    let mut err: f64 = 0.0;
    for k in 0..n {
        err = err
            .max((g.jacobian[k] - j).abs())
            .max((g.normal[k][0] - n_exact[0]).abs())
            .max((g.normal[k][1] - n_exact[1]).abs());
    }
    if err > 1e-13 {
        return Err(format!("geometry error {err:e}"));
    }
    Ok(format!("error {err:.1e}"))
}

/// Kinetic energy by the edge-midpoint rule, which is exact for the squared
/// P1 velocity.
pub fn fluid_kinetic_oracle(state: &CoupledState, mesh: &Mesh, density: f64) -> f64 {
    let nf = mesh.fine.node_count();
    let u = &state.fluid.u;
    let pos = &state.mesh.positions;
    let mut e = 0.0;
    for t in &mesh.fine.triangles {
        let (area, _) = p1_gradients(pos[t[0]], pos[t[1]], pos[t[2]]);
        for c in 0..2 {
            let v = t.map(|n| u[c * nf + n]);
            let mids = [
                0.5 * (v[0] + v[1]),
                0.5 * (v[1] + v[2]),
                0.5 * (v[2] + v[0]),
            ];
            e += area / 3.0 * mids.iter().map(|m| m * m).sum::<f64>();
        }
    }
    0.5 * density * e
}

/// Shell kinetic and elastic energy by Simpson's rule per element.
pub fn shell_energy_oracle(state: &ShellState, sim: &Simulation) -> (f64, f64) {
    let c = &sim.shell_ops.coefficients;
    let m = sim.shell_ops.mass_per_length;
    let z = sim.shell_ops.grid.nodes();
    let (mut kin, mut ela) = (0.0, 0.0);
    for k in 0..z.len() - 1 {
        let l = z[k + 1] - z[k];
        let simpson = |f: &dyn Fn(f64) -> f64| l / 6.0 * (f(0.0) + 4.0 * f(0.5) + f(1.0));
        let lerp = |v: &[f64], s: f64| v[k] + s * (v[k + 1] - v[k]);
        let (vz, vr) = (&state.zeta_z, &state.zeta_r);
        kin += 0.5 * m * simpson(&|s| lerp(vz, s).powi(2) + lerp(vr, s).powi(2));
        let dez = (state.eta_z[k + 1] - state.eta_z[k]) / l;
        let der = (state.eta_r[k + 1] - state.eta_r[k]) / l;
        let er = &state.eta_r;
        ela += 0.5
            * simpson(&|s| {
                let r = lerp(er, s);
                c.c0 * r * r + c.c1 * der * der + 2.0 * c.c2 * r * dez + c.c3 * dez * dez
            });
    }
    (kin, ela)
}

/// Energy terms of a mid-run Example 2 state against the oracles.
pub fn energy_oracle_check(steps: usize) -> Check {
    let cfg = SimulationConfig {
        t_final: steps as f64 * 1e-4,
        ..benchmark_config(BenchmarkId::Example2)
    };
    let mut sim = Simulation::new(cfg).map_err(|e| e.to_string())?;
    let state = sim.run(|_, _| Ok(())).map_err(|e| e.to_string())?;
    let e = sim.energy(&state);
    let fk = fluid_kinetic_oracle(&state, &sim.mesh, sim.cfg.fluid.density);
    let (sk, se) = shell_energy_oracle(&state.shell, &sim);
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
    let worst = rel(e.fluid_kinetic, fk)
        .max(rel(e.shell_kinetic, sk))
        .max(rel(e.shell_elastic_membrane + e.shell_elastic_flexural, se));
    if !(fk > 0.0 && sk > 0.0 && se > 0.0) {
        return Err("oracle energies are not all positive".into());
    }
    if worst > 1e-8 {
        return Err(format!("relative disagreement {worst:e}"));
    }
    Ok(format!("relative disagreement {worst:.1e}"))
}

pub fn config_round_trip_check() -> Check {
    for id in BenchmarkId::ALL {
        let cfg = benchmark_config(id);
        let text = serialize_config(&cfg);
        let once = parse_config(&text).map_err(|e| e.to_string())?;
        let twice = parse_config(&serialize_config(&once)).map_err(|e| e.to_string())?;
        if once != cfg || twice != once || serialize_config(&once) != text {
            return Err(format!("{id} does not round-trip"));
        }
    }
    Ok(format!("{} presets", BenchmarkId::ALL.len()))
}

/// Two runs of the same configuration agree bit for bit.
pub fn determinism_check(steps: usize) -> Check {
    let cfg = SimulationConfig {
        t_final: steps as f64 * 1e-4,
        ..benchmark_config(BenchmarkId::Example1b)
    };
    let a = fsi_core::run_simulation(&cfg).map_err(|e| e.to_string())?;
    let b = fsi_core::run_simulation(&cfg).map_err(|e| e.to_string())?;
    let same = |x: &[f64], y: &[f64]| {
        x.len() == y.len() && x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits())
    };
    let (sa, sb) = (&a.final_state, &b.final_state);
    if !(same(&sa.fluid.u, &sb.fluid.u)
        && same(&sa.fluid.p, &sb.fluid.p)
        && same(&sa.shell.displacement(), &sb.shell.displacement())
        && a.series == b.series)
    {
        return Err("repeat runs differ".into());
    }
    Ok(format!("{steps} steps bitwise identical"))
}
