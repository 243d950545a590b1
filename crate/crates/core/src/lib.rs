//! Fluid-structure interaction between an incompressible Navier–Stokes
//! fluid in a 2D channel and a viscoelastic cylindrical Koiter shell,
//! advanced in time by the kinematically coupled β-scheme.

pub mod ale;
pub mod benchmarks;
pub mod driver;
pub mod error;
pub mod fluid;
pub mod io;
pub mod mesh;
pub mod shell;
pub mod sparse;

pub use benchmarks::{benchmark_config, BenchmarkId, ObservableSeries, Observables};
pub use driver::{
    run_simulation, BoundarySpec, CoupledState, Simulation, SimulationConfig, SimulationOutput,
    WallModel, WaveformSource, MMHG,
};
pub use error::{FsiError, Result};
pub use fluid::{FluidParams, FluidState};
pub use shell::{KoiterCoefficients, ShellBc, ShellKinematics, ShellState, WallParams};

/// Caps the worker threads used by the sparse solvers; `0` or `1` runs
/// sequentially.
pub fn set_threads(n: usize) {
    let par = if n <= 1 {
        faer::Par::Seq
    } else {
        faer::Par::rayon(n)
    };
    faer::set_global_parallelism(par);
}
