//! ALE mesh motion: harmonic extension of the wall displacement, domain
//! velocity and interface geometry.

use std::sync::Arc;

use crate::error::{FsiError, Result};
use crate::mesh::{p1_gradients, Mesh, Point};
use crate::shell::{ShellState, WallGrid};
use crate::sparse::{SpdFactor, TripletList};

/// P1 Laplacian on the reference fine mesh, factorized once, with Dirichlet
/// data on the whole boundary.
pub struct HarmonicExtension {
    factor: SpdFactor,
    /// Interior unknown index of each fine node, `None` on the boundary.
    interior: Vec<Option<usize>>,
    /// Boundary-to-interior coupling: `(interior row, boundary node, value)`.
    coupling: Vec<(usize, usize, f64)>,
    interface: Vec<usize>,
}

impl std::fmt::Debug for HarmonicExtension {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HarmonicExtension")
            .field("interior", &self.factor.dim())
            .finish()
    }
}

impl HarmonicExtension {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        let fine = &mesh.fine;
        let mut next = 0;
        let interior: Vec<Option<usize>> = (0..fine.node_count())
            .map(|n| {
                (!mesh.is_boundary(n)).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        let ni = next;
        let mut t = TripletList::with_capacity(ni, ni, 9 * fine.triangles.len());
        let mut coupling = Vec::new();
        for tri in &fine.triangles {
            let p = tri.map(|n| fine.nodes[n]);
            let (area, g) = p1_gradients(p[0], p[1], p[2]);
            if area <= 0.0 {
                return Err(FsiError::Mesh(
                    "reference mesh has a non-positive element".into(),
                ));
            }
            for (k, &row) in tri.iter().enumerate() {
                let Some(ri) = interior[row] else { continue };
                for (l, &col) in tri.iter().enumerate() {
                    let v = area * (g[k][0] * g[l][0] + g[k][1] * g[l][1]);
                    match interior[col] {
                        Some(ci) => t.push(ri, ci, v),
                        None => coupling.push((ri, col, v)),
                    }
                }
            }
        }
        let factor = if ni > 0 {
            SpdFactor::new(&t, "harmonic extension")
                .map_err(|e| FsiError::Mesh(format!("ALE Laplacian is singular: {e}")))?
        } else {
            SpdFactor::new(&TripletList::new(0, 0), "harmonic extension")?
        };
        Ok(Self {
            factor,
            interior,
            coupling,
            interface: mesh.interface.clone(),
        })
    }

    /// Extends boundary values (read at boundary nodes of `boundary`, which
    /// has one entry per fine node) into the interior.
    pub fn extend(&self, boundary: &[f64]) -> Result<Vec<f64>> {
        if boundary.len() != self.interior.len() {
            return Err(FsiError::Mesh(format!(
                "extension expects {} nodal values, got {}",
                self.interior.len(),
                boundary.len()
            )));
        }
        let mut rhs = vec![0.0; self.factor.dim()];
        for &(row, node, v) in &self.coupling {
            rhs[row] -= v * boundary[node];
        }
        if !rhs.is_empty() {
            self.factor.solve_in_place(&mut rhs)?;
        }
        Ok(self
            .interior
            .iter()
            .enumerate()
            .map(|(n, i)| match i {
                Some(k) => rhs[*k],
                None => boundary[n],
            })
            .collect())
    }

    /// Extends values given on the interface nodes, zero on the rest of the
    /// boundary.
    pub fn extend_interface(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.interface.len() {
            return Err(FsiError::Mesh(format!(
                "expected {} interface values, got {}",
                self.interface.len(),
                values.len()
            )));
        }
        let mut b = vec![0.0; self.interior.len()];
        for (&n, &v) in self.interface.iter().zip(values) {
            b[n] = v;
        }
        self.extend(&b)
    }

    /// Extends a two-component interface field (`[z, r]` per wall node).
    pub fn extend_vector(&self, z: &[f64], r: &[f64]) -> Result<Vec<Point>> {
        let ez = self.extend_interface(z)?;
        let er = self.extend_interface(r)?;
        Ok(ez.into_iter().zip(er).map(|(a, b)| [a, b]).collect())
    }
}

/// Harmonic extension of one scalar field of boundary data on `mesh`.
pub fn harmonic_extension(boundary: &[f64], mesh: &Mesh) -> Result<Vec<f64>> {
    HarmonicExtension::new(mesh)?.extend(boundary)
}

/// First-order domain velocity `(dⁿ⁺¹ − dⁿ) / Δt` per node.
pub fn domain_velocity(d_new: &[Point], d_old: &[Point], dt: f64) -> Result<Vec<Point>> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(FsiError::param("dt", format!("must be positive, got {dt}")));
    }
    if d_new.len() != d_old.len() {
        return Err(FsiError::Mesh(
            "displacement fields differ in length".into(),
        ));
    }
    Ok(d_new
        .iter()
        .zip(d_old)
        .map(|(a, b)| [(a[0] - b[0]) / dt, (a[1] - b[1]) / dt])
        .collect())
}

/// Jacobian and unit outward normal at every wall node.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceGeometry {
    pub jacobian: Vec<f64>,
    pub normal: Vec<Point>,
}

impl InterfaceGeometry {
    /// `J n = (−η_r', 1 + η_z')` per node.
    pub fn scaled_normal(&self) -> Vec<Point> {
        self.jacobian
            .iter()
            .zip(&self.normal)
            .map(|(j, n)| [j * n[0], j * n[1]])
            .collect()
    }
}

/// Nodal derivative by centered differences, second-order one-sided at the
/// ends. Works on non-uniform grids.
pub fn nodal_derivative(f: &[f64], z: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    // derivative at x0 of the parabola through (x0, x1, x2)
    let three_point = |x: [f64; 3], y: [f64; 3], at: f64| -> f64 {
        let mut s = 0.0;
        for k in 0..3 {
            let (a, b) = ((k + 1) % 3, (k + 2) % 3);
            let denom = (x[k] - x[a]) * (x[k] - x[b]);
            s += y[k] * ((at - x[a]) + (at - x[b])) / denom;
        }
        s
    };
    for i in 1..n - 1 {
        d[i] = three_point([z[i - 1], z[i], z[i + 1]], [f[i - 1], f[i], f[i + 1]], z[i]);
    }
    d[0] = three_point([z[0], z[1], z[2]], [f[0], f[1], f[2]], z[0]);
    d[n - 1] = three_point(
        [z[n - 3], z[n - 2], z[n - 1]],
        [f[n - 3], f[n - 2], f[n - 1]],
        z[n - 1],
    );
    d
}

/// `J = √((1 + η_z')² + η_r'²)` and `n = (−η_r', 1 + η_z') / J`.
pub fn interface_geometry(eta: &ShellState, grid: &WallGrid) -> InterfaceGeometry {
    let z = grid.nodes();
    let dz = nodal_derivative(&eta.eta_z, z);
    let dr = nodal_derivative(&eta.eta_r, z);
    let mut jacobian = Vec::with_capacity(z.len());
    let mut normal = Vec::with_capacity(z.len());
    for (a, b) in dz.iter().zip(&dr) {
        let j = (1.0 + a).hypot(*b);
        jacobian.push(j);
        normal.push([-b / j, (1.0 + a) / j]);
    }
    InterfaceGeometry { jacobian, normal }
}

/// Reference mesh, its current deformation and the domain velocity.
#[derive(Debug, Clone)]
pub struct MovingMesh {
    pub reference: Arc<Mesh>,
    pub displacement: Vec<Point>,
    pub positions: Vec<Point>,
    pub velocity: Vec<Point>,
}

impl MovingMesh {
    pub fn at_rest(reference: Arc<Mesh>) -> Self {
        let n = reference.fine.node_count();
        Self {
            positions: reference.fine.nodes.clone(),
            displacement: vec![[0.0; 2]; n],
            velocity: vec![[0.0; 2]; n],
            reference,
        }
    }

    /// Moves the mesh to a new displacement field and sets `w`.
    pub fn update(&mut self, displacement: Vec<Point>, dt: f64) -> Result<()> {
        self.velocity = domain_velocity(&displacement, &self.displacement, dt)?;
        self.positions = self
            .reference
            .fine
            .nodes
            .iter()
            .zip(&displacement)
            .map(|(x, d)| [x[0] + d[0], x[1] + d[1]])
            .collect();
        self.displacement = displacement;
        Ok(())
    }

    /// Smallest signed element area of the current fine mesh.
    pub fn min_area(&self) -> f64 {
        let fine = &self.reference.fine;
        (0..fine.triangles.len())
            .map(|t| fine.signed_area(t, &self.positions))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn check_valid(&self) -> Result<()> {
        let a = self.min_area();
        if a > 0.0 {
            Ok(())
        } else {
            Err(FsiError::Mesh(format!(
                "mesh tangled: smallest element area {a:e}"
            )))
        }
    }

    /// Current coordinates of the coarse (pressure) nodes.
    pub fn coarse_positions(&self) -> Vec<Point> {
        self.reference
            .coarse_to_fine
            .iter()
            .map(|&f| self.positions[f])
            .collect()
    }
}
