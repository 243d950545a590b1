//! Time stepping of the coupled problem with the kinematically coupled
//! β-scheme.
//!
//! Each step runs, on the frozen domain `Ω(tⁿ)`:
//! 1. Stokes with the shell's inertia and viscosity on the interface and the
//!    explicit pressure part `β pⁿ` of the wall load,
//! 2. advection by `uⁿ⁺¹ᐟ³ − wⁿ⁺¹ᐟ³`, where `w` extends the Step-1 interface
//!    velocity,
//! 3. shell elastodynamics loaded by `β pⁿ⁺¹`,
//!
//! and then moves the mesh to the harmonic extension of `ηⁿ⁺¹`.

use std::path::PathBuf;
use std::sync::Arc;

use log::debug;

use crate::ale::{interface_geometry, HarmonicExtension, MovingMesh};
use crate::benchmarks::{observe, BenchmarkId, Observables};
use crate::error::{positive, FsiError, Result};
use crate::fluid::{
    Advection, BoundaryData, FluidParams, FluidState, PressureSignal, StokesInput, StokesSolver,
    Waveform,
};
use crate::mesh::{build_mesh, p1_gradients, Boundary, Mesh};
use crate::shell::{
    assemble_shell_operators, formaggia_coefficients, koiter_coefficients, shell_energy,
    step3_solve, FormaggiaParams, KoiterCoefficients, ShellBc, ShellKinematics, ShellOperators,
    ShellState, WallParams,
};

/// Dyn/cm² per mmHg.
pub const MMHG: f64 = 1333.22;

/// Digitized carotid pressure waveform shipped with the crate (gauge, mmHg).
pub const BUNDLED_WAVEFORM: &str = include_str!("../data/cca_waveform.csv");

/// Which shell coefficients to use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WallModel {
    /// Full Koiter coefficients from the wall parameters.
    Koiter,
    /// Radial string model with shear correction `k` and viscosity `gamma`.
    Formaggia { k: f64, gamma: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum WaveformSource {
    Bundled,
    File(PathBuf),
}

impl WaveformSource {
    /// Loads the samples; waveform files are in mmHg and converted.
    pub fn load(&self) -> Result<Waveform> {
        let text = match self {
            WaveformSource::Bundled => BUNDLED_WAVEFORM.to_string(),
            WaveformSource::File(path) => std::fs::read_to_string(path)?,
        };
        let w = Waveform::parse_csv(&text)?;
        let (t, p) = w.samples();
        Waveform::new(t.to_vec(), p.iter().map(|v| v * MMHG).collect())
    }
}

/// Inlet/outlet data as configured.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundarySpec {
    Zero,
    /// Cosine pulse at the inlet, zero at the outlet.
    Pulse {
        p_max: f64,
        t_max: f64,
    },
    Constant {
        p_in: f64,
        p_out: f64,
    },
    /// Periodic waveform `W` at the inlet; the outlet sees
    /// `W(t − delay) − drop · L` with `drop` in mmHg/cm.
    Waveform {
        source: WaveformSource,
        outlet_delay: f64,
        drop_per_cm: f64,
    },
}

impl BoundarySpec {
    pub fn resolve(&self, length: f64) -> Result<BoundaryData> {
        Ok(match self {
            BoundarySpec::Zero => BoundaryData::zero(),
            BoundarySpec::Pulse { p_max, t_max } => {
                positive("t_max", *t_max)?;
                BoundaryData {
                    inlet: PressureSignal::Pulse {
                        p_max: *p_max,
                        t_max: *t_max,
                    },
                    outlet: PressureSignal::Zero,
                }
            }
            BoundarySpec::Constant { p_in, p_out } => BoundaryData {
                inlet: PressureSignal::Constant(*p_in),
                outlet: PressureSignal::Constant(*p_out),
            },
            BoundarySpec::Waveform {
                source,
                outlet_delay,
                drop_per_cm,
            } => {
                let w = Arc::new(source.load()?);
                BoundaryData {
                    inlet: PressureSignal::Waveform {
                        waveform: w.clone(),
                        delay: 0.0,
                        offset: 0.0,
                        scale: 1.0,
                    },
                    outlet: PressureSignal::Waveform {
                        waveform: w,
                        delay: *outlet_delay,
                        offset: -drop_per_cm * length * MMHG,
                        scale: 1.0,
                    },
                }
            }
        })
    }
}

/// Gaussian radial displacement `a exp(−((z − c)/w)²)` at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialBump {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub benchmark: Option<BenchmarkId>,
    pub length: f64,
    pub radius: f64,
    pub n_z: usize,
    pub n_r: usize,
    pub fluid: FluidParams,
    pub wall: WallParams,
    pub model: WallModel,
    pub kinematics: ShellKinematics,
    /// Replaces the computed `C0`.
    pub c0_override: Option<f64>,
    pub bc: ShellBc,
    pub dt: f64,
    pub t_final: f64,
    pub beta: f64,
    pub boundary: BoundarySpec,
    pub initial_bump: Option<InitialBump>,
    /// Steps between snapshots; 0 disables snapshots.
    pub snapshot_every: usize,
    /// Axial position of the observation section (cm).
    pub observe_z: f64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        positive("length", self.length)?;
        positive("radius", self.radius)?;
        positive("dt", self.dt)?;
        self.fluid.validate()?;
        self.wall.validate()?;
        if (self.wall.radius - self.radius).abs() > 1e-12 * self.radius {
            return Err(FsiError::param("radius", "wall and channel radius differ"));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(FsiError::param(
                "beta",
                format!("must lie in [0, 1], got {}", self.beta),
            ));
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(FsiError::param("t_final", "must be a non-negative number"));
        }
        if self.n_z < 2 || self.n_r < 2 {
            return Err(FsiError::param("mesh", "need at least 2 × 2 coarse nodes"));
        }
        if !(0.0..=self.length).contains(&self.observe_z) {
            return Err(FsiError::param("observe_z", "must lie inside the channel"));
        }
        if let Some(c0) = self.c0_override {
            positive("c0", c0)?;
        }
        if let WallModel::Formaggia { k, gamma } = self.model {
            FormaggiaParams::from_wall(&self.wall, k, gamma).validate()?;
        }
        Ok(())
    }

    /// Number of steps to reach `t_final`.
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    pub fn coefficients(&self) -> Result<KoiterCoefficients> {
        let c = match self.model {
            WallModel::Koiter => koiter_coefficients(&self.wall)?,
            WallModel::Formaggia { k, gamma } => formaggia_coefficients(
                &FormaggiaParams::from_wall(&self.wall, k, gamma),
                &self.wall,
            )?,
        };
        Ok(match self.c0_override {
            Some(c0) => c.with_c0_override(c0),
            None => c,
        })
    }
}

/// Everything that evolves in time.
#[derive(Debug, Clone)]
pub struct CoupledState {
    pub fluid: FluidState,
    pub shell: ShellState,
    pub mesh: MovingMesh,
    pub t: f64,
    pub step: usize,
    /// Pressure trace `pⁿ` at the wall nodes.
    pub p_trace: Vec<f64>,
}

/// Terms of the discrete energy balance at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBreakdown {
    pub fluid_kinetic: f64,
    pub shell_kinetic: f64,
    pub shell_elastic_membrane: f64,
    pub shell_elastic_flexural: f64,
    pub shell_viscous_rate: f64,
    pub fluid_viscous_rate: f64,
    /// Power delivered by the inlet/outlet normal stress.
    pub boundary_work_rate: f64,
}

impl EnergyBreakdown {
    /// Fluid kinetic + shell kinetic + shell elastic.
    pub fn total(&self) -> f64 {
        self.fluid_kinetic
            + self.shell_kinetic
            + self.shell_elastic_membrane
            + self.shell_elastic_flexural
    }
}

/// Pre-assembled operators and factorizations for one configuration.
pub struct Simulation {
    pub cfg: SimulationConfig,
    pub mesh: Arc<Mesh>,
    pub shell_ops: ShellOperators,
    pub boundary: BoundaryData,
    stokes: StokesSolver,
    advection: Advection,
    extension: HarmonicExtension,
}

impl std::fmt::Debug for Simulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Simulation")
            .field("cfg", &self.cfg)
            .finish()
    }
}

impl Simulation {
    pub fn new(cfg: SimulationConfig) -> Result<Self> {
        cfg.validate()?;
        let mesh = Arc::new(build_mesh(cfg.n_z, cfg.n_r, cfg.length, cfg.radius)?);
        let grid = mesh.wall_grid();
        let shell_ops = assemble_shell_operators(
            &cfg.coefficients()?,
            cfg.wall.mass_per_length(),
            &grid,
            cfg.bc,
            cfg.kinematics,
        )?;
        let stokes = StokesSolver::new(mesh.clone(), &shell_ops)?;
        let advection = Advection::new(mesh.clone());
        let extension = HarmonicExtension::new(&mesh)?;
        let boundary = cfg.boundary.resolve(cfg.length)?;
        Ok(Self {
            cfg,
            mesh,
            shell_ops,
            boundary,
            stokes,
            advection,
            extension,
        })
    }

    pub fn initial_state(&self) -> Result<CoupledState> {
        let nw = self.mesh.interface.len();
        let mut shell = ShellState::rest(nw);
        if let Some(b) = self.cfg.initial_bump {
            let free = self.shell_ops.free_mask();
            for (i, z) in self.shell_ops.grid.nodes().iter().enumerate() {
                if free[nw + i] {
                    shell.eta_r[i] = b.amplitude * (-((z - b.center) / b.width).powi(2)).exp();
                }
            }
        }
        let mut mesh = MovingMesh::at_rest(self.mesh.clone());
        let d = self.extension.extend_vector(&shell.eta_z, &shell.eta_r)?;
        mesh.update(d, 1.0)?;
        mesh.velocity.iter_mut().for_each(|w| *w = [0.0; 2]);
        mesh.check_valid()?;
        Ok(CoupledState {
            fluid: FluidState::zeros(&self.mesh),
            shell,
            mesh,
            t: 0.0,
            step: 0,
            p_trace: vec![0.0; nw],
        })
    }

    /// Advances `state` by one time step.
    pub fn advance(&mut self, state: &mut CoupledState) -> Result<()> {
        self.advance_inner(state).map_err(|e| FsiError::AtStep {
            step: state.step + 1,
            time: state.t + self.cfg.dt,
            source: Box::new(e),
        })
    }

    fn advance_inner(&mut self, state: &mut CoupledState) -> Result<()> {
        let dt = self.cfg.dt;
        let beta = self.cfg.beta;
        let mesh = self.mesh.clone();
        let geometry = interface_geometry(&state.shell, &self.shell_ops.grid);

        // Step 1
        let fluid1 = self.stokes.solve(&StokesInput {
            state: &state.fluid,
            positions: &state.mesh.positions,
            shell: &state.shell,
            shell_ops: &self.shell_ops,
            geometry: &geometry,
            p_trace: &state.p_trace,
            boundary: &self.boundary,
            t_new: state.t + dt,
            beta,
            dt,
            fluid: &self.cfg.fluid,
        })?;
        let zeta = fluid1.interface_velocity(&mesh);
        let nw = mesh.interface.len();

        // Step 2
        let w = self.extension.extend_vector(&zeta[..nw], &zeta[nw..])?;
        let mut fluid2 =
            self.advection
                .solve(&fluid1, &w, &state.mesh.positions, dt, self.stokes.dofs())?;

        // Step 3
        let p_fine = mesh.prolongate(&fluid2.p);
        let p_trace: Vec<f64> = mesh.interface.iter().map(|&n| p_fine[n]).collect();
        let shell_in = ShellState::from_blocks(&state.shell.displacement(), &zeta);
        let shell = step3_solve(&shell_in, &p_trace, &self.shell_ops, beta, dt)?;
        fluid2.set_interface_velocity(&mesh, &shell.velocity());

        // Mesh update
        let d = self.extension.extend_vector(&shell.eta_z, &shell.eta_r)?;
        state.mesh.update(d, dt)?;
        state.mesh.check_valid()?;
        if !(fluid2.is_finite() && shell.is_finite()) {
            return Err(FsiError::Step("non-finite values in the solution".into()));
        }

        state.fluid = fluid2;
        state.shell = shell;
        state.p_trace = p_trace;
        state.step += 1;
        state.t = state.step as f64 * dt;
        debug!("step {} t = {:.6e}", state.step, state.t);
        Ok(())
    }

    /// Energy terms of `state` on its current mesh.
    pub fn energy(&self, state: &CoupledState) -> EnergyBreakdown {
        energy_terms(
            state,
            &self.mesh,
            &self.shell_ops,
            &self.cfg.fluid,
            &self.boundary,
        )
    }

    pub fn observe(&self, state: &CoupledState) -> Result<Observables> {
        observe(state, &self.mesh, self.cfg.observe_z)
    }

    /// Runs to `t_final`, calling `observer` on the initial state and after
    /// every step.
    pub fn run(
        &mut self,
        mut observer: impl FnMut(&Simulation, &CoupledState) -> Result<()>,
    ) -> Result<CoupledState> {
        let mut state = self.initial_state()?;
        observer(self, &state)?;
        for _ in 0..self.cfg.steps() {
            self.advance(&mut state)?;
            observer(self, &state)?;
        }
        Ok(state)
    }
}

/// One step of the scheme for a stand-alone state.
///
/// Rebuilds operators and factorizations; use [`Simulation`] in time loops.
pub fn advance_step(state: &CoupledState, cfg: &SimulationConfig) -> Result<CoupledState> {
    let mut sim = Simulation::new(cfg.clone())?;
    let mut next = state.clone();
    sim.advance(&mut next)?;
    Ok(next)
}

/// Recorded output of a run.
#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub series: crate::benchmarks::ObservableSeries,
    pub final_state: CoupledState,
    pub snapshots: Vec<CoupledState>,
}

/// Runs a configuration from rest to `t_final`, recording observables every
/// step and snapshots every `snapshot_every` steps.
pub fn run_simulation(cfg: &SimulationConfig) -> Result<SimulationOutput> {
    let mut sim = Simulation::new(cfg.clone())?;
    let mut series = crate::benchmarks::ObservableSeries::default();
    let mut snapshots = Vec::new();
    let every = cfg.snapshot_every;
    let final_state = sim.run(|sim, state| {
        series.push(state.t, sim.observe(state)?);
        if every > 0 && state.step % every == 0 {
            snapshots.push(state.clone());
        }
        Ok(())
    })?;
    Ok(SimulationOutput {
        series,
        final_state,
        snapshots,
    })
}

/// Energy terms by exact quadrature of the P1 fields.
pub fn energy_report(state: &CoupledState, cfg: &SimulationConfig) -> Result<EnergyBreakdown> {
    let sim = Simulation::new(cfg.clone())?;
    Ok(sim.energy(state))
}

pub(crate) fn energy_terms(
    state: &CoupledState,
    mesh: &Mesh,
    ops: &ShellOperators,
    fluid: &FluidParams,
    boundary: &BoundaryData,
) -> EnergyBreakdown {
    let pos = &state.mesh.positions;
    let nf = mesh.fine.node_count();
    let u = &state.fluid.u;
    let mut kinetic = 0.0;
    let mut viscous = 0.0;
    for tri in &mesh.fine.triangles {
        let p = tri.map(|n| pos[n]);
        let (area, g) = p1_gradients(p[0], p[1], p[2]);
        for c in 0..2 {
            let v = tri.map(|n| u[c * nf + n]);
            let s: f64 = v.iter().sum();
            let sq: f64 = v.iter().map(|x| x * x).sum();
            kinetic += area / 12.0 * (s * s + sq);
        }
        // constant velocity gradient on the element
        let mut grad = [[0.0; 2]; 2];
        for (k, &n) in tri.iter().enumerate() {
            for c in 0..2 {
                for d in 0..2 {
                    grad[c][d] += u[c * nf + n] * g[k][d];
                }
            }
        }
        let dzr = 0.5 * (grad[0][1] + grad[1][0]);
        viscous += area * (grad[0][0].powi(2) + grad[1][1].powi(2) + 2.0 * dzr * dzr);
    }
    let p_in = boundary.inlet.eval(state.t);
    let p_out = boundary.outlet.eval(state.t);
    let mut work = 0.0;
    for e in &mesh.boundary_edges {
        let p = match e.tag {
            Boundary::Inlet => p_in,
            Boundary::Outlet => p_out,
            _ => continue,
        };
        let n = e.scaled_normal(pos);
        for c in 0..2 {
            work -= p * n[c] * 0.5 * (u[c * nf + e.a] + u[c * nf + e.b]);
        }
    }
    let s = shell_energy(
        &state.shell,
        &ops.coefficients,
        ops.mass_per_length,
        &ops.grid,
    );
    EnergyBreakdown {
        fluid_kinetic: 0.5 * fluid.density * kinetic,
        shell_kinetic: s.kinetic,
        shell_elastic_membrane: s.membrane_elastic,
        shell_elastic_flexural: s.flexural_elastic,
        shell_viscous_rate: s.viscous_rate(),
        fluid_viscous_rate: 2.0 * fluid.viscosity * viscous,
        boundary_work_rate: work,
    }
}
