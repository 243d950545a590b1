//! Linearly viscoelastic cylindrical Koiter shell.
//!
//! The wall carries two displacement components per node of the 1D wall
//! grid, longitudinal `eta_z` and radial `eta_r`. All shell vectors use the
//! block layout `[z-block (n nodes), r-block (n nodes)]`.
//!
//! The elastic and viscous forms are assembled with P1 elements for every
//! term up to second order in space. The fourth-order bending terms
//! (`C4`, `D4`) are reported by [`koiter_coefficients`] but never assembled.

use crate::error::{non_negative, positive, FsiError, Result};
use crate::sparse::{solve_once, CsrMatrix, TripletList};

/// Material and geometric parameters of the wall, CGS units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallParams {
    /// Young's modulus (dyn/cm²).
    pub young: f64,
    /// Poisson ratio.
    pub poisson: f64,
    /// Viscous modulus `C_v = E_v / (1 - σ_v²)` (poise·cm).
    pub c_v: f64,
    /// Viscous modulus `D_v = E_v σ_v / (1 - σ_v²)` (poise·cm).
    pub d_v: f64,
    /// Wall density (g/cm³).
    pub density: f64,
    /// Wall thickness (cm).
    pub thickness: f64,
    /// Reference radius of the middle surface (cm).
    pub radius: f64,
}

impl WallParams {
    pub fn validate(&self) -> Result<()> {
        positive("young", self.young)?;
        positive("density", self.density)?;
        positive("thickness", self.thickness)?;
        positive("radius", self.radius)?;
        non_negative("c_v", self.c_v)?;
        non_negative("d_v", self.d_v)?;
        if !(self.poisson >= 0.0 && self.poisson < 1.0) {
            return Err(FsiError::param(
                "poisson",
                format!("must lie in [0, 1), got {}", self.poisson),
            ));
        }
        if self.thickness >= self.radius {
            return Err(FsiError::param(
                "thickness",
                "thin-shell model requires thickness < radius",
            ));
        }
        Ok(())
    }

    /// Shell inertia per unit reference length, `ρ_s h`.
    pub fn mass_per_length(&self) -> f64 {
        self.density * self.thickness
    }

    pub fn shear_modulus(&self) -> f64 {
        self.young / (2.0 * (1.0 + self.poisson))
    }
}

/// Coefficients of the shell equilibrium equations.
///
/// `c0_flexural` and `d0_flexural` record the bending share of `c0`/`d0`
/// (the `h²/12R²` correction); they are only used to split the elastic
/// energy into its membrane and flexural parts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KoiterCoefficients {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub d0: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
    pub c0_flexural: f64,
    pub d0_flexural: f64,
}

impl KoiterCoefficients {
    /// Replaces `c0` while keeping its flexural share proportional.
    pub fn with_c0_override(mut self, c0: f64) -> Self {
        if self.c0 != 0.0 {
            self.c0_flexural *= c0 / self.c0;
        }
        self.c0 = c0;
        self
    }

    pub fn as_array(&self) -> [f64; 10] {
        [
            self.c0, self.c1, self.c2, self.c3, self.c4, self.d0, self.d1, self.d2, self.d3,
            self.d4,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
            && self.c0_flexural.is_finite()
            && self.d0_flexural.is_finite()
    }
}

/// Closed-form Koiter shell coefficients.
pub fn koiter_coefficients(w: &WallParams) -> Result<KoiterCoefficients> {
    w.validate()?;
    let WallParams {
        young: e,
        poisson: s,
        c_v,
        d_v,
        thickness: h,
        radius: r,
        ..
    } = *w;
    let plane = 1.0 - s * s;
    let r2 = r * r;
    let bend = h * h / (12.0 * r2);
    let c0_membrane = h * e / (r2 * plane);
    let d0_membrane = h * c_v / r2;
    Ok(KoiterCoefficients {
        c0: c0_membrane * (1.0 + bend),
        c1: h.powi(3) / 6.0 * e * s / (r2 * plane),
        c2: h / r * e * s / plane,
        c3: h * e / plane,
        c4: h.powi(3) / 12.0 * e / plane,
        d0: d0_membrane * (1.0 + bend),
        d1: h.powi(3) / 6.0 * d_v / r2,
        d2: h * d_v / r,
        d3: h * c_v,
        d4: h.powi(3) / 12.0 * c_v,
        c0_flexural: c0_membrane * bend,
        d0_flexural: d0_membrane * bend,
    })
}

/// Parameters of the radial string model with shear-correction bending term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormaggiaParams {
    /// Timoshenko shear correction factor.
    pub k: f64,
    /// Shear modulus (dyn/cm²).
    pub shear_modulus: f64,
    /// Structural viscosity γ (poise·cm).
    pub gamma: f64,
}

impl FormaggiaParams {
    /// Uses `G = E / (2(1+σ))` from the wall parameters.
    pub fn from_wall(w: &WallParams, k: f64, gamma: f64) -> Self {
        Self {
            k,
            shear_modulus: w.shear_modulus(),
            gamma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("k", self.k)?;
        positive("shear_modulus", self.shear_modulus)?;
        non_negative("gamma", self.gamma)?;
        Ok(())
    }
}

/// Coefficients that reduce the shell equations to the radial string model.
pub fn formaggia_coefficients(f: &FormaggiaParams, w: &WallParams) -> Result<KoiterCoefficients> {
    w.validate()?;
    f.validate()?;
    let h = w.thickness;
    Ok(KoiterCoefficients {
        c0: w.young * h / (w.radius * w.radius * (1.0 - w.poisson * w.poisson)),
        c1: f.k * f.shear_modulus * h,
        d1: f.gamma,
        ..Default::default()
    })
}

/// Nodes of the 1D wall grid in reference coordinates `ẑ`.
#[derive(Debug, Clone, PartialEq)]
pub struct WallGrid {
    z: Vec<f64>,
}

impl WallGrid {
    pub fn new(z: Vec<f64>) -> Result<Self> {
        if z.len() < 3 {
            return Err(FsiError::Mesh(format!(
                "wall grid needs at least 3 nodes, got {}",
                z.len()
            )));
        }
        if z.windows(2)
            .any(|p| p[1].partial_cmp(&p[0]) != Some(std::cmp::Ordering::Greater))
            || z.iter().any(|v| !v.is_finite())
        {
            return Err(FsiError::Mesh(
                "wall grid must be strictly increasing".into(),
            ));
        }
        Ok(Self { z })
    }

    pub fn uniform(n: usize, length: f64) -> Result<Self> {
        if n < 2 {
            return Err(FsiError::Mesh("wall grid needs at least 2 nodes".into()));
        }
        Self::new((0..n).map(|i| length * i as f64 / (n - 1) as f64).collect())
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.z
    }

    pub fn length(&self) -> f64 {
        self.z[self.z.len() - 1] - self.z[0]
    }

    pub fn elements(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.z
            .windows(2)
            .enumerate()
            .map(|(i, p)| (i, i + 1, p[1] - p[0]))
    }

    /// Unit-density P1 mass matrix (n × n).
    pub fn mass_matrix(&self) -> CsrMatrix {
        let n = self.len();
        let mut t = TripletList::with_capacity(n, n, 4 * n);
        for (a, b, l) in self.elements() {
            push_block(&mut t, a, b, 0, 0, l / 6.0 * 2.0, l / 6.0);
        }
        t.to_csr()
    }

    /// Index of the node closest to `z`.
    pub fn nearest(&self, z: f64) -> usize {
        let mut best = 0;
        for (i, zi) in self.z.iter().enumerate() {
            if (zi - z).abs() < (self.z[best] - z).abs() {
                best = i;
            }
        }
        best
    }
}

/// Boundary conditions at the two wall endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShellBc {
    /// `η = 0` at both ends.
    Clamped,
    /// Characteristic (non-reflecting) condition on `η_r`; `η_z` stays clamped.
    Absorbing,
}

impl ShellBc {
    pub fn as_str(&self) -> &'static str {
        match self {
            ShellBc::Clamped => "clamped",
            ShellBc::Absorbing => "absorbing",
        }
    }
}

impl std::str::FromStr for ShellBc {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "clamped" | "dirichlet" => Ok(ShellBc::Clamped),
            "absorbing" => Ok(ShellBc::Absorbing),
            other => Err(format!("expected `clamped` or `absorbing`, got `{other}`")),
        }
    }
}

/// Which displacement components the wall may take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShellKinematics {
    /// Longitudinal and radial displacement.
    Full,
    /// Radial displacement only; `η_z ≡ 0`.
    RadialOnly,
}

/// Displacement and velocity of the wall at every wall-grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellState {
    pub eta_z: Vec<f64>,
    pub eta_r: Vec<f64>,
    pub zeta_z: Vec<f64>,
    pub zeta_r: Vec<f64>,
}

impl ShellState {
    pub fn rest(n: usize) -> Self {
        Self {
            eta_z: vec![0.0; n],
            eta_r: vec![0.0; n],
            zeta_z: vec![0.0; n],
            zeta_r: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.eta_r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta_r.is_empty()
    }

    /// Displacement in block layout `[η_z, η_r]`.
    pub fn displacement(&self) -> Vec<f64> {
        [self.eta_z.as_slice(), self.eta_r.as_slice()].concat()
    }

    /// Velocity in block layout `[ζ_z, ζ_r]`.
    pub fn velocity(&self) -> Vec<f64> {
        [self.zeta_z.as_slice(), self.zeta_r.as_slice()].concat()
    }

    pub fn from_blocks(displacement: &[f64], velocity: &[f64]) -> Self {
        let n = displacement.len() / 2;
        Self {
            eta_z: displacement[..n].to_vec(),
            eta_r: displacement[n..].to_vec(),
            zeta_z: velocity[..n].to_vec(),
            zeta_r: velocity[n..].to_vec(),
        }
    }

    pub fn is_finite(&self) -> bool {
        [&self.eta_z, &self.eta_r, &self.zeta_z, &self.zeta_r]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// Assembled shell operators on the full `2n` block layout.
#[derive(Debug, Clone)]
pub struct ShellOperators {
    pub grid: WallGrid,
    pub bc: ShellBc,
    pub kinematics: ShellKinematics,
    pub coefficients: KoiterCoefficients,
    pub mass_per_length: f64,
    /// `ρ_s h` times the P1 mass matrix, both components.
    pub mass: CsrMatrix,
    /// Elastic form built from `C0..C3`.
    pub elastic: CsrMatrix,
    /// Viscous form built from `D0..D3`.
    pub viscous: CsrMatrix,
    free: Vec<bool>,
}

impl ShellOperators {
    pub fn nodes(&self) -> usize {
        self.grid.len()
    }

    /// `true` for every full-layout DOF that is not removed by a boundary
    /// condition or the kinematic restriction.
    pub fn free_mask(&self) -> &[bool] {
        &self.free
    }

    pub fn free_dofs(&self) -> Vec<usize> {
        (0..self.free.len()).filter(|&i| self.free[i]).collect()
    }

    /// Map from full-layout DOF to its index among the free DOFs.
    pub fn free_index(&self) -> Vec<Option<usize>> {
        let mut next = 0;
        self.free
            .iter()
            .map(|&f| {
                f.then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    }

    /// Restricts a full-layout operator to the free DOFs.
    pub fn restrict(&self, m: &CsrMatrix) -> CsrMatrix {
        let idx = self.free_index();
        let nf = self.free.iter().filter(|&&f| f).count();
        let mut t = TripletList::new(nf, nf);
        t.extend_mapped(m, 1.0, |i| idx[i]);
        t.to_csr()
    }

    /// Wave speed of the radial string part, `sqrt(C1 / ρ_s h)`.
    pub fn wave_speed(&self) -> f64 {
        (self.coefficients.c1 / self.mass_per_length).sqrt()
    }
}

/// Assembles mass, elastic and viscous forms on the wall grid.
pub fn assemble_shell_operators(
    c: &KoiterCoefficients,
    mass_per_length: f64,
    grid: &WallGrid,
    bc: ShellBc,
    kinematics: ShellKinematics,
) -> Result<ShellOperators> {
    if grid.len() < 3 {
        return Err(FsiError::Mesh(
            "shell operators need at least 3 wall nodes".into(),
        ));
    }
    if !c.is_finite() {
        return Err(FsiError::param(
            "coefficients",
            "non-finite shell coefficient",
        ));
    }
    positive("mass_per_length", mass_per_length)?;
    let n = grid.len();
    let dim = 2 * n;
    let (z, r) = (0, n);

    let mut mass = TripletList::with_capacity(dim, dim, 8 * n);
    let mut elastic = TripletList::with_capacity(dim, dim, 16 * n);
    let mut viscous = TripletList::with_capacity(dim, dim, 16 * n);
    for (a, b, l) in grid.elements() {
        let m_diag = mass_per_length * l / 3.0;
        let m_off = mass_per_length * l / 6.0;
        push_block(&mut mass, a, b, z, z, m_diag, m_off);
        push_block(&mut mass, a, b, r, r, m_diag, m_off);
        for (t, [k0, k1, k2, k3]) in [
            (&mut elastic, [c.c0, c.c1, c.c2, c.c3]),
            (&mut viscous, [c.d0, c.d1, c.d2, c.d3]),
        ] {
            // k0 ∫ η_r ξ_r + k1 ∫ η_r' ξ_r'
            push_block(t, a, b, r, r, k0 * l / 3.0 + k1 / l, k0 * l / 6.0 - k1 / l);
            // k3 ∫ η_z' ξ_z'
            push_block(t, a, b, z, z, k3 / l, -k3 / l);
            // k2 (∫ η_z' ξ_r + ∫ η_r ξ_z'), symmetric coupling
            for (m, sm) in [(a, -1.0), (b, 1.0)] {
                for node in [a, b] {
                    let v = k2 * sm / l * l / 2.0;
                    t.push(r + node, z + m, v);
                    t.push(z + m, r + node, v);
                }
            }
        }
    }

    let mut free = vec![true; dim];
    match kinematics {
        ShellKinematics::RadialOnly => free[..n].iter_mut().for_each(|f| *f = false),
        ShellKinematics::Full => {
            free[z] = false;
            free[z + n - 1] = false;
        }
    }
    // Absorbing ends keep η_r free; step 3 replaces their rows.
    if bc == ShellBc::Clamped {
        free[r] = false;
        free[r + n - 1] = false;
    }

    Ok(ShellOperators {
        grid: grid.clone(),
        bc,
        kinematics,
        coefficients: *c,
        mass_per_length,
        mass: mass.to_csr(),
        elastic: elastic.to_csr(),
        viscous: viscous.to_csr(),
        free,
    })
}

/// 2×2 element block `[d o; o d]` on nodes `a, b` with block offsets.
fn push_block(
    t: &mut TripletList,
    a: usize,
    b: usize,
    row_off: usize,
    col_off: usize,
    d: f64,
    o: f64,
) {
    t.push(row_off + a, col_off + a, d);
    t.push(row_off + b, col_off + b, d);
    t.push(row_off + a, col_off + b, o);
    t.push(row_off + b, col_off + a, o);
}

/// Bilinear form of the pressure follower load, `∫ βp (η_r' ξ_z − η_z' ξ_r)`,
/// which turns `C2` into `C2 − βp` in the implicit-normal formulation.
pub fn follower_matrix(grid: &WallGrid, beta_p: &[f64]) -> CsrMatrix {
    let n = grid.len();
    let mut t = TripletList::with_capacity(2 * n, 2 * n, 8 * n);
    for (a, b, l) in grid.elements() {
        // ∫_e p φ_m for m = a, b with p linear on the element
        let pa = l / 6.0 * (2.0 * beta_p[a] + beta_p[b]);
        let pb = l / 6.0 * (beta_p[a] + 2.0 * beta_p[b]);
        for (m, pm) in [(a, pa), (b, pb)] {
            for (col, slope) in [(a, -1.0 / l), (b, 1.0 / l)] {
                t.push(m, n + col, slope * pm);
                t.push(n + m, col, -slope * pm);
            }
        }
    }
    t.to_csr()
}

/// One backward-Euler step of the elastodynamics sub-problem.
///
/// The wall is loaded by `β p` with the normal taken implicitly, so the
/// coupling coefficient becomes `C2 − β p` node by node and the radial
/// equation is forced by `β p`. `state` carries `η^n` and the interface
/// velocity coming out of the fluid sub-steps; the returned state holds
/// `η^{n+1}` and `ζ^{n+1} = (η^{n+1} − η^n)/Δt`.
pub fn step3_solve(
    state: &ShellState,
    p_trace: &[f64],
    ops: &ShellOperators,
    beta: f64,
    dt: f64,
) -> Result<ShellState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(FsiError::Step(format!("shell step needs dt > 0, got {dt}")));
    }
    let n = ops.nodes();
    if p_trace.len() != n || state.len() != n {
        return Err(FsiError::Step(format!(
            "shell step: expected {n} wall values, got pressure {} / state {}",
            p_trace.len(),
            state.len()
        )));
    }
    let beta_p: Vec<f64> = p_trace.iter().map(|p| beta * p).collect();
    let follower = follower_matrix(&ops.grid, &beta_p);
    let eta = state.displacement();
    let zeta0 = state.velocity();

    // RHS = M ζ⁰/Δt − K(p) ηⁿ + F(p), F_r = ∫ βp ξ_r
    let mut rhs = vec![0.0; 2 * n];
    ops.mass.mul_vec_add(1.0 / dt, &zeta0, &mut rhs);
    ops.elastic.mul_vec_add(-1.0, &eta, &mut rhs);
    follower.mul_vec_add(-1.0, &eta, &mut rhs);
    let unit_mass = ops.grid.mass_matrix();
    let mut load = vec![0.0; n];
    unit_mass.mul_vec_add(1.0, &beta_p, &mut load);
    for (dst, v) in rhs[n..].iter_mut().zip(&load) {
        *dst += v;
    }

    let idx = ops.free_index();
    let nf = idx.iter().flatten().count();
    let absorbing = ops.bc == ShellBc::Absorbing;
    let replaced = |row: usize| absorbing && (row == n || row == 2 * n - 1);
    let mut t = TripletList::with_capacity(nf, nf, ops.mass.nnz() * 4);
    for (m, scale) in [(&ops.mass, 1.0 / dt), (&ops.elastic, dt), (&follower, dt)] {
        for (i, j, v) in m.iter() {
            if let (Some(a), Some(b), false) = (idx[i], idx[j], replaced(i)) {
                t.push(a, b, scale * v);
            }
        }
    }
    if absorbing {
        // ∂η_r/∂t ∓ c ∂η_r/∂z = 0, implicit upwind difference into the domain
        let c = ops.wave_speed();
        let zs = ops.grid.nodes();
        for (end, inner) in [(0, 1), (n - 1, n - 2)] {
            let ratio = c / (zs[end] - zs[inner]).abs();
            let (ie, ii) = (
                idx[n + end].expect("free end"),
                idx[n + inner].expect("free node"),
            );
            t.push(ie, ie, 1.0 + dt * ratio);
            t.push(ie, ii, -dt * ratio);
            rhs[n + end] = ratio * (eta[n + inner] - eta[n + end]);
        }
    }
    let mut x: Vec<f64> = (0..2 * n).filter_map(|i| idx[i].map(|_| rhs[i])).collect();
    solve_once(&t, &mut x, "shell elastodynamics")?;

    let mut zeta = vec![0.0; 2 * n];
    for i in 0..2 * n {
        if let Some(k) = idx[i] {
            zeta[i] = x[k];
        }
    }
    let eta_new: Vec<f64> = eta.iter().zip(&zeta).map(|(e, v)| e + dt * v).collect();
    Ok(ShellState::from_blocks(&eta_new, &zeta))
}

/// Terms of the shell energy balance.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShellEnergy {
    pub kinetic: f64,
    pub membrane_elastic: f64,
    pub flexural_elastic: f64,
    /// Dissipation rate of the membrane viscous terms (erg/s per unit depth).
    pub membrane_viscous_rate: f64,
    /// Dissipation rate of the flexural viscous terms.
    pub flexural_viscous_rate: f64,
}

impl ShellEnergy {
    pub fn stored(&self) -> f64 {
        self.kinetic + self.membrane_elastic + self.flexural_elastic
    }

    pub fn viscous_rate(&self) -> f64 {
        self.membrane_viscous_rate + self.flexural_viscous_rate
    }
}

/// Shell kinetic, elastic and viscous-dissipation terms of the energy
/// balance, by exact element quadrature of the P1 fields.
///
/// Membrane terms are those of `C0 − C0_flex`, `C2`, `C3` (and their viscous
/// counterparts); flexural terms are those of `C0_flex` and `C1`.
pub fn shell_energy(
    state: &ShellState,
    c: &KoiterCoefficients,
    mass_per_length: f64,
    grid: &WallGrid,
) -> ShellEnergy {
    let quad = |k0: f64, k1: f64, k2: f64, k3: f64, z: &[f64], r: &[f64]| -> f64 {
        let mut acc = 0.0;
        for (a, b, l) in grid.elements() {
            let (ra, rb) = (r[a], r[b]);
            let r2 = l / 3.0 * (ra * ra + ra * rb + rb * rb);
            let r_mean = 0.5 * l * (ra + rb);
            let dz = (z[b] - z[a]) / l;
            let dr = (rb - ra) / l;
            acc += k0 * r2 + k1 * dr * dr * l + 2.0 * k2 * dz * r_mean + k3 * dz * dz * l;
        }
        acc
    };
    let sq = |v: &[f64]| -> f64 {
        grid.elements()
            .map(|(a, b, l)| l / 3.0 * (v[a] * v[a] + v[a] * v[b] + v[b] * v[b]))
            .sum()
    };
    let (ez, er, vz, vr) = (&state.eta_z, &state.eta_r, &state.zeta_z, &state.zeta_r);
    ShellEnergy {
        kinetic: 0.5 * mass_per_length * (sq(vz) + sq(vr)),
        membrane_elastic: 0.5 * quad(c.c0 - c.c0_flexural, 0.0, c.c2, c.c3, ez, er),
        flexural_elastic: 0.5 * quad(c.c0_flexural, c.c1, 0.0, 0.0, ez, er),
        membrane_viscous_rate: quad(c.d0 - c.d0_flexural, 0.0, c.d2, c.d3, vz, vr),
        flexural_viscous_rate: quad(c.d0_flexural, c.d1, 0.0, 0.0, vz, vr),
    }
}
