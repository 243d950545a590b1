//! Fluid sub-problems on the frozen domain `Ω(tⁿ)`.
//!
//! Velocity is P1 on the fine mesh, pressure P1 on the coarse mesh
//! (P1-iso-P2). Velocity vectors use the block layout `[u_z (nf), u_r (nf)]`.
//!
//! The Stokes step treats the interface velocity DOFs as the shell velocity:
//! shell inertia and viscosity are added on those rows, so the kinematic
//! condition holds by construction.

use std::sync::Arc;

use crate::ale::InterfaceGeometry;
use crate::error::{positive, FsiError, Result};
use crate::mesh::{p1_gradients, Boundary, Mesh, Point, TriMesh};
use crate::shell::{ShellOperators, ShellState};
use crate::sparse::{PatternLu, TripletList};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidParams {
    /// Density (g/cm³).
    pub density: f64,
    /// Dynamic viscosity (poise).
    pub viscosity: f64,
}

impl FluidParams {
    pub fn validate(&self) -> Result<()> {
        positive("rho_f", self.density)?;
        positive("mu", self.viscosity)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    /// `[u_z; u_r]` per fine node.
    pub u: Vec<f64>,
    /// Pressure per coarse node.
    pub p: Vec<f64>,
}

impl FluidState {
    pub fn zeros(mesh: &Mesh) -> Self {
        Self {
            u: vec![0.0; 2 * mesh.fine.node_count()],
            p: vec![0.0; mesh.coarse.node_count()],
        }
    }

    pub fn nodes(&self) -> usize {
        self.u.len() / 2
    }

    pub fn velocity(&self, node: usize) -> Point {
        [self.u[node], self.u[self.nodes() + node]]
    }

    pub fn u_z(&self) -> &[f64] {
        &self.u[..self.nodes()]
    }

    pub fn u_r(&self) -> &[f64] {
        &self.u[self.nodes()..]
    }

    /// Interface velocity in shell block layout `[z (n), r (n)]`.
    pub fn interface_velocity(&self, mesh: &Mesh) -> Vec<f64> {
        let nf = self.nodes();
        let z = mesh.interface.iter().map(|&n| self.u[n]);
        let r = mesh.interface.iter().map(|&n| self.u[nf + n]);
        z.chain(r).collect()
    }

    /// Overwrites the interface velocity with shell values (block layout).
    pub fn set_interface_velocity(&mut self, mesh: &Mesh, zeta: &[f64]) {
        let nf = self.nodes();
        let nw = mesh.interface.len();
        for (i, &n) in mesh.interface.iter().enumerate() {
            self.u[n] = zeta[i];
            self.u[nf + n] = zeta[nw + i];
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.p).all(|v| v.is_finite())
    }
}

/// Sampled periodic pressure waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    t: Vec<f64>,
    p: Vec<f64>,
}

impl Waveform {
    /// One period of samples, the last sample closing the period.
    pub fn new(t: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if t.len() != p.len() || t.len() < 2 {
            return Err(FsiError::Data(
                "waveform needs at least 2 (t, p) samples".into(),
            ));
        }
        if t.windows(2)
            .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
        {
            return Err(FsiError::Data(
                "waveform times must be strictly increasing".into(),
            ));
        }
        if t.iter().chain(&p).any(|v| !v.is_finite()) {
            return Err(FsiError::Data("waveform contains non-finite values".into()));
        }
        let scale = p.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        if (p[0] - p[p.len() - 1]).abs() > 1e-6 * scale {
            return Err(FsiError::Data(
                "waveform period is not closed: first and last pressure differ".into(),
            ));
        }
        Ok(Self { t, p })
    }

    /// Two-column CSV `t,p`; `#` comments and one optional header line.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut t = Vec::new();
        let mut p = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (a, b) = (cols.next(), cols.next());
            let parsed = match (a, b) {
                (Some(a), Some(b)) => a.parse::<f64>().ok().zip(b.parse::<f64>().ok()),
                _ => None,
            };
            match parsed {
                Some((a, b)) => {
                    t.push(a);
                    p.push(b);
                }
                None if t.is_empty() => continue,
                None => {
                    return Err(FsiError::Data(format!("waveform line {}: `{line}`", k + 1)));
                }
            }
        }
        Self::new(t, p)
    }

    pub fn period(&self) -> f64 {
        self.t[self.t.len() - 1] - self.t[0]
    }

    pub fn samples(&self) -> (&[f64], &[f64]) {
        (&self.t, &self.p)
    }

    /// Periodic linear interpolation.
    pub fn eval(&self, t: f64) -> f64 {
        let t0 = self.t[0];
        let s = t0 + (t - t0).rem_euclid(self.period());
        let k = self
            .t
            .partition_point(|&x| x <= s)
            .clamp(1, self.t.len() - 1);
        let (ta, tb) = (self.t[k - 1], self.t[k]);
        let w = (s - ta) / (tb - ta);
        self.p[k - 1] * (1.0 - w) + self.p[k] * w
    }

    pub fn mean(&self) -> f64 {
        let mut acc = 0.0;
        for k in 1..self.t.len() {
            acc += 0.5 * (self.p[k] + self.p[k - 1]) * (self.t[k] - self.t[k - 1]);
        }
        acc / self.period()
    }
}

/// Normal-stress magnitude prescribed on an inlet or outlet (dyn/cm²).
#[derive(Debug, Clone, PartialEq)]
pub enum PressureSignal {
    Zero,
    Constant(f64),
    /// `(p_max/2)(1 − cos(2πt/t_max))` for `t ≤ t_max`, zero afterwards.
    Pulse {
        p_max: f64,
        t_max: f64,
    },
    /// `scale · W(t − delay) + offset`.
    Waveform {
        waveform: Arc<Waveform>,
        delay: f64,
        offset: f64,
        scale: f64,
    },
}

impl PressureSignal {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            PressureSignal::Zero => 0.0,
            PressureSignal::Constant(p) => *p,
            PressureSignal::Pulse { p_max, t_max } => cosine_pulse(t, *p_max, *t_max),
            PressureSignal::Waveform {
                waveform,
                delay,
                offset,
                scale,
            } => scale * waveform.eval(t - delay) + offset,
        }
    }
}

pub(crate) fn cosine_pulse(t: f64, p_max: f64, t_max: f64) -> f64 {
    if (0.0..=t_max).contains(&t) {
        0.5 * p_max * (1.0 - (2.0 * std::f64::consts::PI * t / t_max).cos())
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub inlet: PressureSignal,
    pub outlet: PressureSignal,
}

impl BoundaryData {
    pub fn zero() -> Self {
        Self {
            inlet: PressureSignal::Zero,
            outlet: PressureSignal::Zero,
        }
    }
}

/// Velocity unknown numbering after Dirichlet elimination.
#[derive(Debug, Clone)]
pub struct VelocityDofs {
    /// Unknown index for each `(component, fine node)` in block layout.
    pub map: Vec<Option<usize>>,
    pub count: usize,
    /// Fluid unknown of each shell DOF (full shell layout), if free.
    pub shell_map: Vec<Option<usize>>,
}

impl VelocityDofs {
    /// `u_r = 0` on the axis; interface DOFs follow the shell's free mask.
    pub fn new(mesh: &Mesh, shell_free: &[bool]) -> Self {
        let nf = mesh.fine.node_count();
        let nw = mesh.interface.len();
        let mut fixed = vec![false; 2 * nf];
        for n in 0..nf {
            if mesh.is_on(n, Boundary::Axis) {
                fixed[nf + n] = true;
            }
        }
        for (i, &n) in mesh.interface.iter().enumerate() {
            fixed[n] |= !shell_free[i];
            fixed[nf + n] |= !shell_free[nw + i];
        }
        let mut count = 0;
        let map: Vec<Option<usize>> = fixed
            .iter()
            .map(|&f| {
                (!f).then(|| {
                    count += 1;
                    count - 1
                })
            })
            .collect();
        let shell_map = (0..2 * nw)
            .map(|k| {
                let (c, i) = (k / nw, k % nw);
                map[c * nf + mesh.interface[i]]
            })
            .collect();
        Self {
            map,
            count,
            shell_map,
        }
    }
}

/// Time-dependent Stokes solver with shell inertia and viscosity on the
/// interface. The sparsity pattern is fixed, so the symbolic factorization
/// is computed once and reused.
pub struct StokesSolver {
    mesh: Arc<Mesh>,
    dofs: VelocityDofs,
    lu: Option<PatternLu>,
}

impl std::fmt::Debug for StokesSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StokesSolver")
            .field("velocity_unknowns", &self.dofs.count)
            .field("pressure_unknowns", &self.mesh.coarse.node_count())
            .finish()
    }
}

/// Inputs of one Stokes step.
#[derive(Debug, Clone, Copy)]
pub struct StokesInput<'a> {
    pub state: &'a FluidState,
    /// Fine-node positions of `Ω(tⁿ)`.
    pub positions: &'a [Point],
    pub shell: &'a ShellState,
    pub shell_ops: &'a ShellOperators,
    pub geometry: &'a InterfaceGeometry,
    /// Pressure trace `pⁿ` on the wall nodes.
    pub p_trace: &'a [f64],
    pub boundary: &'a BoundaryData,
    /// Time `tⁿ⁺¹` at which the boundary data is evaluated.
    pub t_new: f64,
    pub beta: f64,
    pub dt: f64,
    pub fluid: &'a FluidParams,
}

impl StokesSolver {
    pub fn new(mesh: Arc<Mesh>, shell_ops: &ShellOperators) -> Result<Self> {
        if shell_ops.nodes() != mesh.interface.len() {
            return Err(FsiError::Mesh(format!(
                "shell has {} nodes but the interface has {}",
                shell_ops.nodes(),
                mesh.interface.len()
            )));
        }
        let dofs = VelocityDofs::new(&mesh, shell_ops.free_mask());
        Ok(Self {
            mesh,
            dofs,
            lu: None,
        })
    }

    pub fn dofs(&self) -> &VelocityDofs {
        &self.dofs
    }

    /// One backward-Euler step; returns `uⁿ⁺¹ᐟ³` and `pⁿ⁺¹`.
    pub fn solve(&mut self, input: &StokesInput) -> Result<FluidState> {
        if !(input.dt.is_finite() && input.dt > 0.0) {
            return Err(FsiError::Step(format!(
                "Stokes step needs dt > 0, got {}",
                input.dt
            )));
        }
        input.fluid.validate()?;
        let mesh = &*self.mesh;
        let nf = mesh.fine.node_count();
        let nc = mesh.coarse.node_count();
        let nv = self.dofs.count;
        let dim = nv + nc;
        let map = &self.dofs.map;
        let dt = input.dt;
        let rho = input.fluid.density;
        let mu = input.fluid.viscosity;
        let pos = input.positions;

        let mut t = TripletList::with_capacity(dim, dim, 120 * mesh.fine.triangles.len());
        let mut rhs = vec![0.0; dim];
        let u0 = &input.state.u;

        for tri in &mesh.fine.triangles {
            let p = tri.map(|n| pos[n]);
            let (area, g) = p1_gradients(p[0], p[1], p[2]);
            if area <= 0.0 {
                return Err(FsiError::Mesh("Stokes step on a tangled mesh".into()));
            }
            for c in 0..2 {
                for k in 0..3 {
                    let row = map[c * nf + tri[k]];
                    for l in 0..3 {
                        let m = rho / dt * area / 12.0 * if k == l { 2.0 } else { 1.0 };
                        if let Some(r) = row {
                            rhs[r] += m * u0[c * nf + tri[l]];
                        }
                        for d in 0..2 {
                            let col = map[d * nf + tri[l]];
                            let (Some(r), Some(cc)) = (row, col) else {
                                continue;
                            };
                            let lap = if c == d {
                                g[l][0] * g[k][0] + g[l][1] * g[k][1]
                            } else {
                                0.0
                            };
                            let mut v = mu * area * (lap + g[l][c] * g[k][d]);
                            if c == d {
                                v += m;
                            }
                            t.push(r, cc, v);
                        }
                    }
                }
            }
            // −∫ q div v with q coarse P1 written in fine hat functions
            for &f in tri {
                for (qc, w) in mesh.prolongation.row(f) {
                    for l in 0..3 {
                        for d in 0..2 {
                            let Some(col) = map[d * nf + tri[l]] else {
                                continue;
                            };
                            let v = -w * area / 3.0 * g[l][d];
                            t.push(nv + qc, col, v);
                            t.push(col, nv + qc, v);
                        }
                    }
                }
            }
        }

        // Shell inertia and viscosity on the interface unknowns.
        let ops = input.shell_ops;
        let smap = &self.dofs.shell_map;
        let zeta0 = input.shell.velocity();
        for (matrix, scale) in [(&ops.mass, 1.0 / dt), (&ops.viscous, 1.0)] {
            for (i, j, v) in matrix.iter() {
                if let (Some(r), Some(c)) = (smap[i], smap[j]) {
                    t.push(r, c, scale * v);
                }
            }
        }
        for (i, j, v) in ops.mass.iter() {
            if let Some(r) = smap[i] {
                rhs[r] += v / dt * zeta0[j];
            }
        }

        // Explicit pressure part −β ∫ J pⁿ nⁿ · v on the wall.
        let nw = mesh.interface.len();
        let jn = input.geometry.scaled_normal();
        let unit_mass = ops.grid.mass_matrix();
        for (i, j, m) in unit_mass.iter() {
            let bp = input.beta * input.p_trace[j];
            for c in 0..2 {
                if let Some(r) = smap[c * nw + i] {
                    rhs[r] -= m * bp * jn[j][c];
                }
            }
        }

        // Normal stress −p n on inlet and outlet.
        let p_in = input.boundary.inlet.eval(input.t_new);
        let p_out = input.boundary.outlet.eval(input.t_new);
        for e in &mesh.boundary_edges {
            let p = match e.tag {
                Boundary::Inlet => p_in,
                Boundary::Outlet => p_out,
                _ => continue,
            };
            let n = e.scaled_normal(pos);
            for node in [e.a, e.b] {
                for c in 0..2 {
                    if let Some(r) = map[c * nf + node] {
                        rhs[r] -= 0.5 * p * n[c];
                    }
                }
            }
        }

        match &mut self.lu {
            Some(lu) => lu.factorize(&t)?,
            None => {
                let mut lu = PatternLu::analyze(&t, "Stokes saddle point")?;
                lu.factorize(&t)?;
                self.lu = Some(lu);
            }
        }
        let lu = self.lu.as_ref().expect("factorized above");
        lu.solve_in_place(&mut rhs)?;

        let mut u = vec![0.0; 2 * nf];
        for (k, m) in map.iter().enumerate() {
            if let Some(r) = m {
                u[k] = rhs[*r];
            }
        }
        Ok(FluidState {
            u,
            p: rhs[nv..].to_vec(),
        })
    }
}

/// One Stokes step with a freshly analyzed solver.
pub fn step1_stokes(mesh: Arc<Mesh>, input: &StokesInput) -> Result<FluidState> {
    StokesSolver::new(mesh, input.shell_ops)?.solve(input)
}

/// Relative discrete divergence `max|B u| / max(|B| |u|)` on `positions`.
pub fn divergence_residual(mesh: &Mesh, positions: &[Point], u: &[f64]) -> f64 {
    let nf = mesh.fine.node_count();
    let nc = mesh.coarse.node_count();
    let mut div = vec![0.0; nc];
    let mut scale = vec![0.0; nc];
    for tri in &mesh.fine.triangles {
        let p = tri.map(|n| positions[n]);
        let (area, g) = p1_gradients(p[0], p[1], p[2]);
        for &f in tri {
            for (qc, w) in mesh.prolongation.row(f) {
                for l in 0..3 {
                    for d in 0..2 {
                        let v = w * area / 3.0 * g[l][d] * u[d * nf + tri[l]];
                        div[qc] += v;
                        scale[qc] += v.abs();
                    }
                }
            }
        }
    }
    let num = div.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let den = scale.iter().fold(0.0f64, |m, v| m.max(*v));
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Point location on a triangulation by walking through neighbours.
#[derive(Debug, Clone)]
pub struct Locator {
    neighbors: Vec<[Option<usize>; 3]>,
    node_triangle: Vec<usize>,
}

/// Result of tracing a point: the triangle it ended in and barycentric
/// weights. `clamped` marks a point that left the domain and was pulled back
/// onto the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub triangle: usize,
    pub weights: [f64; 3],
    pub clamped: bool,
}

const WALK_CAP: usize = 100_000;

impl Locator {
    pub fn new(mesh: &TriMesh) -> Self {
        let mut node_triangle = vec![usize::MAX; mesh.node_count()];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            for &n in tri {
                if node_triangle[n] == usize::MAX {
                    node_triangle[n] = t;
                }
            }
        }
        Self {
            neighbors: mesh.neighbors(),
            node_triangle,
        }
    }

    pub fn node_triangle(&self, node: usize) -> usize {
        self.node_triangle[node]
    }

    /// Walks from `start` toward `target`.
    pub fn locate(
        &self,
        mesh: &TriMesh,
        positions: &[Point],
        start: usize,
        target: Point,
    ) -> Result<Location> {
        let mut t = start;
        for _ in 0..WALK_CAP {
            let tri = mesh.triangles[t];
            let p = tri.map(|n| positions[n]);
            let w = barycentric(p, target);
            let (k, min) =
                w.iter().enumerate().fold(
                    (0, f64::INFINITY),
                    |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc },
                );
            if min >= -1e-12 {
                return Ok(Location {
                    triangle: t,
                    weights: w,
                    clamped: false,
                });
            }
            match self.neighbors[t][k] {
                Some(next) => t = next,
                None => {
                    // Outside: project onto the boundary of this triangle.
                    let mut c = w.map(|v| v.max(0.0));
                    let s: f64 = c.iter().sum();
                    c.iter_mut().for_each(|v| *v /= s);
                    return Ok(Location {
                        triangle: t,
                        weights: c,
                        clamped: true,
                    });
                }
            }
        }
        Err(FsiError::Step("point location did not terminate".into()))
    }
}

fn barycentric(p: [Point; 3], x: Point) -> [f64; 3] {
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let l1 =
        ((x[0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (x[1] - p[0][1])) / det;
    let l2 =
        ((p[1][0] - p[0][0]) * (x[1] - p[0][1]) - (x[0] - p[0][0]) * (p[1][1] - p[0][1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

/// Maximum number of characteristic sub-steps per node.
pub const MAX_SUBSTEPS: usize = 1000;

/// Transports `field` (any number of nodal components stacked in blocks)
/// by `velocity` over `dt` with a backward characteristic trace per node.
///
/// Sub-steps keep each trace segment within half of the local element size.
/// Feet leaving the domain are pulled back to the boundary, which imposes the
/// inflow value there.
pub fn advect(
    field: &[f64],
    velocity: &[Point],
    mesh: &TriMesh,
    positions: &[Point],
    dt: f64,
) -> Result<Vec<f64>> {
    let locator = Locator::new(mesh);
    advect_with(&locator, field, velocity, mesh, positions, dt, &|_| false)
}

pub(crate) fn advect_with(
    locator: &Locator,
    field: &[f64],
    velocity: &[Point],
    mesh: &TriMesh,
    positions: &[Point],
    dt: f64,
    keep: &dyn Fn(usize) -> bool,
) -> Result<Vec<f64>> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(FsiError::Step(format!("advection needs dt > 0, got {dt}")));
    }
    let n = mesh.node_count();
    if !field.len().is_multiple_of(n) || velocity.len() != n {
        return Err(FsiError::Step(
            "advection field size does not match mesh".into(),
        ));
    }
    let comps = field.len() / n;

    // Local element size at each node: shortest incident edge.
    let mut hloc = vec![f64::INFINITY; n];
    for tri in &mesh.triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let l = (positions[a][0] - positions[b][0]).hypot(positions[a][1] - positions[b][1]);
            hloc[a] = hloc[a].min(l);
            hloc[b] = hloc[b].min(l);
        }
    }
    let interp = |loc: &Location, v: &dyn Fn(usize) -> f64| -> f64 {
        let tri = mesh.triangles[loc.triangle];
        (0..3).map(|k| loc.weights[k] * v(tri[k])).sum()
    };

    let mut out = field.to_vec();
    for node in 0..n {
        if keep(node) {
            continue;
        }
        let a0 = velocity[node];
        let speed = a0[0].hypot(a0[1]);
        if speed == 0.0 {
            continue;
        }
        let mut substeps = ((speed * dt) / (0.5 * hloc[node])).ceil().max(1.0) as usize;
        if substeps > MAX_SUBSTEPS {
            return Err(FsiError::Step(format!(
                "advection needs {substeps} sub-steps at node {node} (cap {MAX_SUBSTEPS})"
            )));
        }
        let mut x = positions[node];
        let mut tri = locator.node_triangle(node);
        let mut a = a0;
        let mut loc = None;
        let mut remaining = dt;
        while remaining > 0.0 {
            let h = remaining / substeps as f64;
            let target = [x[0] - h * a[0], x[1] - h * a[1]];
            let l = locator.locate(mesh, positions, tri, target)?;
            let t = mesh.triangles[l.triangle];
            x = [0, 1].map(|c| (0..3).map(|k| l.weights[k] * positions[t[k]][c]).sum());
            tri = l.triangle;
            loc = Some(l);
            remaining -= h;
            substeps -= 1;
            if l.clamped || substeps == 0 {
                break;
            }
            a = [
                interp(&l, &|m| velocity[m][0]),
                interp(&l, &|m| velocity[m][1]),
            ];
            let s = a[0].hypot(a[1]);
            let need = ((s * remaining) / (0.5 * hloc[node])).ceil() as usize;
            if need > MAX_SUBSTEPS {
                return Err(FsiError::Step(format!(
                    "advection needs {need} sub-steps at node {node} (cap {MAX_SUBSTEPS})"
                )));
            }
            substeps = substeps.max(need).max(1);
        }
        let loc = loc.expect("at least one sub-step");
        for c in 0..comps {
            out[c * n + node] = interp(&loc, &|m| field[c * n + m]);
        }
    }
    Ok(out)
}

/// Characteristics solver for the advection sub-problem, reusing the
/// neighbour structure of the fine mesh.
#[derive(Debug, Clone)]
pub struct Advection {
    mesh: Arc<Mesh>,
    locator: Locator,
}

impl Advection {
    pub fn new(mesh: Arc<Mesh>) -> Self {
        let locator = Locator::new(&mesh.fine);
        Self { mesh, locator }
    }

    /// `∂u/∂t + (uⁿ⁺¹ᐟ³ − w)·∇u = 0` on `positions`; interface values are
    /// held, as the shell velocity does not change in this step, and the
    /// `fixed` velocity DOFs are kept at zero. Pressure is unchanged.
    pub fn solve(
        &self,
        state: &FluidState,
        w: &[Point],
        positions: &[Point],
        dt: f64,
        dofs: &VelocityDofs,
    ) -> Result<FluidState> {
        let mesh = &*self.mesh;
        let nf = mesh.fine.node_count();
        let a: Vec<Point> = (0..nf)
            .map(|n| {
                let u = state.velocity(n);
                [u[0] - w[n][0], u[1] - w[n][1]]
            })
            .collect();
        let keep = |n: usize| mesh.is_on(n, Boundary::Interface);
        let mut u = advect_with(
            &self.locator,
            &state.u,
            &a,
            &mesh.fine,
            positions,
            dt,
            &keep,
        )?;
        for (k, m) in dofs.map.iter().enumerate() {
            if m.is_none() {
                u[k] = 0.0;
            }
        }
        Ok(FluidState {
            u,
            p: state.p.clone(),
        })
    }
}

/// One advection step with the mesh's own neighbour structure.
pub fn step2_advect(
    state: &FluidState,
    w: &[Point],
    mesh: Arc<Mesh>,
    positions: &[Point],
    dt: f64,
    dofs: &VelocityDofs,
) -> Result<FluidState> {
    Advection::new(mesh).solve(state, w, positions, dt, dofs)
}
