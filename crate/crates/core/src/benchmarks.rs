//! Benchmark presets, observables, convergence studies, the energy
//! dissipation ratio and the absorbing-vs-clamped comparison.

use std::fmt;
use std::str::FromStr;

use crate::driver::{
    BoundarySpec, CoupledState, InitialBump, Simulation, SimulationConfig, WallModel,
    WaveformSource,
};
use crate::error::{FsiError, Result};
use crate::fluid::{cosine_pulse, FluidParams, FluidState};
use crate::mesh::{Mesh, Point};
use crate::shell::{ShellBc, ShellKinematics, WallParams};
use crate::sparse::{CsrMatrix, TripletList};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchmarkId {
    Example1,
    Example1b,
    Example2,
    Cca,
}

impl BenchmarkId {
    pub const ALL: [BenchmarkId; 4] = [
        BenchmarkId::Example1,
        BenchmarkId::Example1b,
        BenchmarkId::Example2,
        BenchmarkId::Cca,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            BenchmarkId::Example1 => "example1",
            BenchmarkId::Example1b => "example1b",
            BenchmarkId::Example2 => "example2",
            BenchmarkId::Cca => "cca",
        }
    }
}

impl fmt::Display for BenchmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchmarkId {
    type Err = FsiError;
    fn from_str(s: &str) -> Result<Self> {
        BenchmarkId::ALL
            .into_iter()
            .find(|b| b.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| {
                FsiError::config(
                    "benchmark",
                    format!(
                        "unknown benchmark `{s}` (expected example1, example1b, example2 or cca)"
                    ),
                )
            })
    }
}

/// Inlet pulse `(p_max/2)(1 − cos(2πt/t_max))` on `[0, t_max]`, zero after.
pub fn inlet_pressure_pulse(t: f64, p_max: f64, t_max: f64) -> f64 {
    cosine_pulse(t, p_max, t_max)
}

/// Axial length of the carotid segment (cm).
pub const CCA_LENGTH: f64 = 5.0;
/// Mean pressure drop along the carotid segment (mmHg/cm).
pub const CCA_DROP_PER_CM: f64 = 0.0673;
/// Tabulated carotid `C0` (dyn/cm³).
pub const CCA_C0: f64 = 1.7022e6;

fn tube_wall() -> WallParams {
    WallParams {
        young: 0.75e6,
        poisson: 0.5,
        c_v: 0.0,
        d_v: 0.0,
        density: 1.1,
        thickness: 0.1,
        radius: 0.5,
    }
}

/// Fully populated configuration of a benchmark.
pub fn benchmark_config(id: BenchmarkId) -> SimulationConfig {
    let example1 = SimulationConfig {
        benchmark: Some(id),
        length: 6.0,
        radius: 0.5,
        n_z: 31,
        n_r: 11,
        fluid: FluidParams {
            density: 1.0,
            viscosity: 0.035,
        },
        wall: tube_wall(),
        model: WallModel::Formaggia {
            k: 1.0,
            gamma: 0.01,
        },
        kinematics: ShellKinematics::RadialOnly,
        c0_override: None,
        bc: ShellBc::Absorbing,
        dt: 1e-4,
        t_final: 0.012,
        beta: 1.0,
        boundary: BoundarySpec::Pulse {
            p_max: 2e4,
            t_max: 0.005,
        },
        initial_bump: None,
        snapshot_every: 0,
        observe_z: 3.0,
    };
    match id {
        BenchmarkId::Example1 => example1,
        BenchmarkId::Example1b => SimulationConfig {
            kinematics: ShellKinematics::Full,
            bc: ShellBc::Clamped,
            ..example1
        },
        BenchmarkId::Example2 => SimulationConfig {
            n_z: 61,
            n_r: 21,
            wall: WallParams {
                c_v: 30.0,
                d_v: 15.0,
                ..tube_wall()
            },
            model: WallModel::Koiter,
            kinematics: ShellKinematics::Full,
            bc: ShellBc::Clamped,
            ..example1
        },
        BenchmarkId::Cca => SimulationConfig {
            benchmark: Some(id),
            length: CCA_LENGTH,
            radius: 0.3,
            n_z: 41,
            n_r: 11,
            fluid: FluidParams {
                density: 1.055,
                viscosity: 0.04,
            },
            wall: WallParams {
                young: 2e6,
                poisson: 0.5,
                c_v: 3e4,
                d_v: 1.5e4,
                density: 1.055,
                thickness: 0.07,
                radius: 0.3,
            },
            model: WallModel::Koiter,
            kinematics: ShellKinematics::Full,
            c0_override: Some(CCA_C0),
            bc: ShellBc::Clamped,
            dt: 1e-4,
            t_final: 1.0,
            beta: 1.0,
            boundary: BoundarySpec::Waveform {
                source: WaveformSource::Bundled,
                outlet_delay: 0.0,
                drop_per_cm: CCA_DROP_PER_CM,
            },
            initial_bump: None,
            snapshot_every: 0,
            observe_z: CCA_LENGTH / 2.0,
        },
    }
}

/// Zero boundary data and a radial bump at mid-length.
pub fn stability_config(id: BenchmarkId, dt: f64, beta: f64, steps: usize) -> SimulationConfig {
    let base = benchmark_config(id);
    SimulationConfig {
        dt,
        beta,
        t_final: dt * steps as f64,
        boundary: BoundarySpec::Zero,
        initial_bump: Some(InitialBump {
            amplitude: 0.02 * base.radius,
            center: 0.5 * base.length,
            width: 0.1 * base.length,
        }),
        ..base
    }
}

/// Instantaneous observables at the observation section.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Observables {
    pub diameter: f64,
    pub flowrate: f64,
    pub mean_pressure: f64,
    pub eta_z_mid: f64,
    pub eta_r_mid: f64,
    /// Axial velocity on the symmetry axis at the section.
    pub centerline_velocity: f64,
}

/// Observables sampled in time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservableSeries {
    pub t: Vec<f64>,
    pub diameter: Vec<f64>,
    pub flowrate: Vec<f64>,
    pub mean_pressure: Vec<f64>,
    pub eta_z_mid: Vec<f64>,
    pub eta_r_mid: Vec<f64>,
    pub centerline_velocity: Vec<f64>,
}

impl ObservableSeries {
    pub fn push(&mut self, t: f64, o: Observables) {
        self.t.push(t);
        self.diameter.push(o.diameter);
        self.flowrate.push(o.flowrate);
        self.mean_pressure.push(o.mean_pressure);
        self.eta_z_mid.push(o.eta_z_mid);
        self.eta_r_mid.push(o.eta_r_mid);
        self.centerline_velocity.push(o.centerline_velocity);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Checks the time samples are increasing and all columns agree in length.
    pub fn validate(&self) -> Result<()> {
        let n = self.t.len();
        let cols = [
            &self.diameter,
            &self.flowrate,
            &self.mean_pressure,
            &self.eta_z_mid,
            &self.eta_r_mid,
        ];
        if cols.iter().any(|c| c.len() != n) {
            return Err(FsiError::Data("observable columns differ in length".into()));
        }
        if self
            .t
            .windows(2)
            .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
        {
            return Err(FsiError::Data("observable times must increase".into()));
        }
        Ok(())
    }
}

/// Current section nodes closest to `z`, bottom to top, with their `r`.
fn section_nodes(mesh: &Mesh, positions: &[Point], z: f64) -> Result<Vec<(usize, f64)>> {
    Ok(mesh
        .section(z)?
        .into_iter()
        .map(|n| (n, positions[n][1]))
        .collect())
}

/// `∫₀^{g(z)} u_z dr` by the trapezoid rule on the current section.
pub fn flowrate(state: &FluidState, mesh: &Mesh, positions: &[Point], z: f64) -> Result<f64> {
    let nodes = section_nodes(mesh, positions, z)?;
    Ok(trapezoid(&nodes, |n| state.u[n]))
}

/// Section average of the pressure, `(1/g(z)) ∫₀^{g(z)} p dr`.
pub fn mean_pressure(state: &FluidState, mesh: &Mesh, positions: &[Point], z: f64) -> Result<f64> {
    let nodes = section_nodes(mesh, positions, z)?;
    let p = mesh.prolongate(&state.p);
    let height = nodes.last().map(|n| n.1 - nodes[0].1).unwrap_or(0.0);
    if height <= 0.0 {
        return Err(FsiError::Mesh("section has no height".into()));
    }
    Ok(trapezoid(&nodes, |n| p[n]) / height)
}

fn trapezoid(nodes: &[(usize, f64)], f: impl Fn(usize) -> f64) -> f64 {
    nodes
        .windows(2)
        .map(|w| 0.5 * (f(w[0].0) + f(w[1].0)) * (w[1].1 - w[0].1))
        .sum()
}

/// All observables of `state` at section `z`.
pub fn observe(state: &CoupledState, mesh: &Mesh, z: f64) -> Result<Observables> {
    let pos = &state.mesh.positions;
    let grid = mesh.wall_grid();
    let k = grid.nearest(z);
    let axis = mesh.section(z)?[0];
    Ok(Observables {
        diameter: 2.0 * (mesh.radius + state.shell.eta_r[k]),
        flowrate: flowrate(&state.fluid, mesh, pos, z)?,
        mean_pressure: mean_pressure(&state.fluid, mesh, pos, z)?,
        eta_z_mid: state.shell.eta_z[k],
        eta_r_mid: state.shell.eta_r[k],
        centerline_velocity: state.fluid.u[axis],
    })
}

/// L² differences of velocity, pressure and displacement.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldErrors {
    pub u: f64,
    pub p: f64,
    pub eta: f64,
}

/// P1 mass matrix of a triangulation on its own node positions.
pub fn p1_mass(mesh: &crate::mesh::TriMesh) -> CsrMatrix {
    let n = mesh.node_count();
    let mut t = TripletList::with_capacity(n, n, 9 * mesh.triangles.len());
    for (k, tri) in mesh.triangles.iter().enumerate() {
        let a = mesh.signed_area(k, &mesh.nodes);
        for i in 0..3 {
            for j in 0..3 {
                t.push(tri[i], tri[j], a / 12.0 * if i == j { 2.0 } else { 1.0 });
            }
        }
    }
    t.to_csr()
}

/// Norms on the reference meshes for comparing two states.
#[derive(Debug, Clone)]
pub struct ErrorNorms {
    fine: CsrMatrix,
    coarse: CsrMatrix,
    wall: CsrMatrix,
}

impl ErrorNorms {
    pub fn new(mesh: &Mesh) -> Self {
        Self {
            fine: p1_mass(&mesh.fine),
            coarse: p1_mass(&mesh.coarse),
            wall: mesh.wall_grid().mass_matrix(),
        }
    }

    pub fn errors(&self, a: &CoupledState, b: &CoupledState) -> FieldErrors {
        let diff =
            |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(p, q)| p - q).collect() };
        let nf = self.fine.nrows();
        let du = diff(&a.fluid.u, &b.fluid.u);
        let u2 = self.fine.quad_form(&du[..nf]) + self.fine.quad_form(&du[nf..]);
        let p2 = self.coarse.quad_form(&diff(&a.fluid.p, &b.fluid.p));
        let eta2 = self.wall.quad_form(&diff(&a.shell.eta_z, &b.shell.eta_z))
            + self.wall.quad_form(&diff(&a.shell.eta_r, &b.shell.eta_r));
        FieldErrors {
            u: u2.max(0.0).sqrt(),
            p: p2.max(0.0).sqrt(),
            eta: eta2.max(0.0).sqrt(),
        }
    }
}

/// Errors and observed orders of a time-convergence study.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceReport {
    pub dt: Vec<f64>,
    pub errors: Vec<FieldErrors>,
    /// `orders[k]` compares `dt[k]` with `dt[k + 1]`.
    pub orders: Vec<FieldErrors>,
}

impl ConvergenceReport {
    pub fn from_errors(dt: Vec<f64>, errors: Vec<FieldErrors>) -> Self {
        let order = |a: f64, b: f64, ha: f64, hb: f64| (a / b).ln() / (ha / hb).ln();
        let orders = (1..dt.len())
            .map(|k| {
                let (e0, e1) = (errors[k - 1], errors[k]);
                FieldErrors {
                    u: order(e0.u, e1.u, dt[k - 1], dt[k]),
                    p: order(e0.p, e1.p, dt[k - 1], dt[k]),
                    eta: order(e0.eta, e1.eta, dt[k - 1], dt[k]),
                }
            })
            .collect();
        Self { dt, errors, orders }
    }

    /// CSV with one row per time step size.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("dt,err_u,err_p,err_eta,order_u,order_p,order_eta\n");
        for (k, (dt, e)) in self.dt.iter().zip(&self.errors).enumerate() {
            let o = if k == 0 { None } else { self.orders.get(k - 1) };
            let f = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
            s.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{},{},{}\n",
                dt,
                e.u,
                e.p,
                e.eta,
                f(o.map(|o| o.u)),
                f(o.map(|o| o.p)),
                f(o.map(|o| o.eta))
            ));
        }
        s
    }
}

/// Runs `cfg` with time step `dt` up to `t_eval`.
pub fn run_to(cfg: &SimulationConfig, dt: f64, t_eval: f64) -> Result<CoupledState> {
    let steps = (t_eval / dt).round();
    if (steps * dt - t_eval).abs() > 1e-9 * t_eval.max(dt) {
        return Err(FsiError::param(
            "t_eval",
            format!("{t_eval} is not a multiple of dt = {dt}"),
        ));
    }
    let cfg = SimulationConfig {
        dt,
        t_final: steps * dt,
        ..cfg.clone()
    };
    let mut sim = Simulation::new(cfg)?;
    sim.run(|_, _| Ok(()))
}

/// Errors of runs at each `dt` against a given reference state.
pub fn convergence_against(
    cfg: &SimulationConfig,
    dt_list: &[f64],
    reference: &CoupledState,
    t_eval: f64,
) -> Result<ConvergenceReport> {
    let sim = Simulation::new(cfg.clone())?;
    let norms = ErrorNorms::new(&sim.mesh);
    let mut errors = Vec::with_capacity(dt_list.len());
    for &dt in dt_list {
        let s = run_to(cfg, dt, t_eval)?;
        errors.push(norms.errors(&s, reference));
    }
    Ok(ConvergenceReport::from_errors(dt_list.to_vec(), errors))
}

/// Runs the reference and every `dt` of the list to `t_eval`.
pub fn convergence_study(
    cfg: &SimulationConfig,
    dt_list: &[f64],
    dt_ref: f64,
    t_eval: f64,
) -> Result<ConvergenceReport> {
    if dt_list.iter().any(|&dt| dt < dt_ref) {
        return Err(FsiError::param(
            "dt_ref",
            "must not exceed any dt of the list",
        ));
    }
    let reference = run_to(cfg, dt_ref, t_eval)?;
    convergence_against(cfg, dt_list, &reference, t_eval)
}

/// Energy dissipation ratio (%) of a diameter–pressure loop.
///
/// `A1` is the enclosed area; `A2` the area between the lower branch (from
/// minimum to maximum diameter) and the minimum pressure of the loop.
pub fn compute_edr(diameter: &[f64], pressure: &[f64]) -> Result<f64> {
    let n = diameter.len();
    if n != pressure.len() || n < 4 {
        return Err(FsiError::Data("EDR needs at least 4 paired samples".into()));
    }
    if diameter.iter().chain(pressure).any(|v| !v.is_finite()) {
        return Err(FsiError::Data(
            "EDR input contains non-finite values".into(),
        ));
    }
    let range = |v: &[f64]| {
        let (lo, hi) = v
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
                (a.min(x), b.max(x))
            });
        (lo, hi)
    };
    let (d_lo, d_hi) = range(diameter);
    let (p_lo, p_hi) = range(pressure);
    let tol = 0.05;
    if (diameter[n - 1] - diameter[0]).abs() > tol * (d_hi - d_lo)
        || (pressure[n - 1] - pressure[0]).abs() > tol * (p_hi - p_lo)
    {
        return Err(FsiError::Data(
            "diameter–pressure loop is not closed".into(),
        ));
    }
    if d_hi - d_lo == 0.0 {
        return Ok(0.0);
    }

    let mut a1 = 0.0;
    for k in 0..n {
        let j = (k + 1) % n;
        a1 += diameter[k] * pressure[j] - diameter[j] * pressure[k];
    }
    let a1 = 0.5 * a1.abs();

    let argmin = (0..n)
        .min_by(|&a, &b| diameter[a].total_cmp(&diameter[b]))
        .unwrap();
    let argmax = (0..n)
        .max_by(|&a, &b| diameter[a].total_cmp(&diameter[b]))
        .unwrap();
    // The two arcs of the closed loop from argmin to argmax.
    let arc = |forward: bool| -> Vec<usize> {
        let mut v = vec![argmin];
        let mut k = argmin;
        while k != argmax {
            k = if forward {
                (k + 1) % n
            } else {
                (k + n - 1) % n
            };
            v.push(k);
        }
        v
    };
    let under = |idx: &[usize]| -> f64 {
        idx.windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                0.5 * (pressure[a] + pressure[b] - 2.0 * p_lo) * (diameter[b] - diameter[a])
            })
            .sum()
    };
    let a2 = under(&arc(true)).min(under(&arc(false)));
    let total = a1 + a2;
    if total <= 0.0 {
        return Ok(0.0);
    }
    Ok(100.0 * a1 / total)
}

/// Radial displacement profiles of the two boundary treatments.
#[derive(Debug, Clone, PartialEq)]
pub struct BcProfiles {
    pub t: f64,
    pub z: Vec<f64>,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

/// Runs `cfg` with the two boundary kinds and returns `η_r(z)` at `times`.
pub fn bc_comparison_between(
    cfg: &SimulationConfig,
    times: &[f64],
    first: ShellBc,
    second: ShellBc,
) -> Result<Vec<BcProfiles>> {
    let t_end = times.iter().cloned().fold(0.0, f64::max);
    let run = |bc: ShellBc| -> Result<Vec<Vec<f64>>> {
        let c = SimulationConfig {
            bc,
            t_final: t_end,
            ..cfg.clone()
        };
        let mut sim = Simulation::new(c)?;
        let dt = sim.cfg.dt;
        let mut out = vec![Vec::new(); times.len()];
        sim.run(|_, s| {
            for (k, &t) in times.iter().enumerate() {
                if (s.t - t).abs() < 0.5 * dt {
                    out[k] = s.shell.eta_r.clone();
                }
            }
            Ok(())
        })?;
        Ok(out)
    };
    let a = run(first)?;
    let b = if first == second {
        a.clone()
    } else {
        run(second)?
    };
    let z = Simulation::new(cfg.clone())?
        .shell_ops
        .grid
        .nodes()
        .to_vec();
    Ok(times
        .iter()
        .zip(a.into_iter().zip(b))
        .map(|(&t, (first, second))| BcProfiles {
            t,
            z: z.clone(),
            first,
            second,
        })
        .collect())
}

/// Absorbing (`first`) versus clamped (`second`) profiles.
pub fn bc_comparison(cfg: &SimulationConfig, times: &[f64]) -> Result<Vec<BcProfiles>> {
    bc_comparison_between(cfg, times, ShellBc::Absorbing, ShellBc::Clamped)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pulse_examples() {
        assert_eq!(inlet_pressure_pulse(0.0, 2e4, 0.005), 0.0);
        assert!((inlet_pressure_pulse(0.0025, 2e4, 0.005) - 2e4).abs() < 1e-9);
        assert_eq!(inlet_pressure_pulse(0.006, 2e4, 0.005), 0.0);
    }

    #[test]
    fn ids_round_trip() {
        for id in BenchmarkId::ALL {
            assert_eq!(id.as_str().parse::<BenchmarkId>().unwrap(), id);
        }
        assert!(matches!(
            "example3".parse::<BenchmarkId>(),
            Err(FsiError::Config { .. })
        ));
    }

    #[test]
    fn presets_validate() {
        for id in BenchmarkId::ALL {
            benchmark_config(id).validate().unwrap();
        }
    }

    #[test]
    fn retraced_curve_has_zero_edr() {
        let d: Vec<f64> = (0..=20)
            .map(|k| (k as f64 / 10.0 * std::f64::consts::PI).sin())
            .collect();
        let p: Vec<f64> = d.iter().map(|x| 2.0 * x + 1.0).collect();
        let mut dd = d.clone();
        dd.extend(d.iter().rev());
        let mut pp = p.clone();
        pp.extend(p.iter().rev());
        assert!(compute_edr(&dd, &pp).unwrap().abs() < 1e-12);
    }

    #[test]
    fn open_loop_is_rejected() {
        let d = [0.0, 1.0, 2.0, 3.0];
        let p = [0.0, 1.0, 2.0, 3.0];
        assert!(matches!(compute_edr(&d, &p), Err(FsiError::Data(_))));
    }
}
