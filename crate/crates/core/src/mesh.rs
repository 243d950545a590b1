//! Structured triangulations of the channel `(0, L) × (0, R)`.
//!
//! A coarse grid of `n_z × n_r` nodes carries the pressure; the velocity
//! lives on its uniform refinement, `(2 n_z − 1) × (2 n_r − 1)` nodes. The
//! cell diagonals are mirrored about `z = L/2` so the triangulation itself is
//! symmetric under `z ↦ L − z`.
//!
//! Coordinates are stored as `[z, r]`.

use crate::error::{FsiError, Result};
use crate::shell::WallGrid;
use crate::sparse::{CsrMatrix, TripletList};

pub type Point = [f64; 2];

/// A triangulation with counter-clockwise elements.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub nodes: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriMesh {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// For each triangle, the neighbour across the edge opposite each vertex.
    pub fn neighbors(&self) -> Vec<[Option<usize>; 3]> {
        use std::collections::HashMap;
        let mut edges: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        let mut out = vec![[None; 3]; self.triangles.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let key = (a.min(b), a.max(b));
                if let Some(&(t2, k2)) = edges.get(&key) {
                    out[t][k] = Some(t2);
                    out[t2][k2] = Some(t);
                } else {
                    edges.insert(key, (t, k));
                }
            }
        }
        out
    }

    /// Signed area of triangle `t` on the given node positions.
    pub fn signed_area(&self, t: usize, positions: &[Point]) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(positions[a], positions[b], positions[c])
    }
}

pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Area and constant shape-function gradients of a P1 triangle.
pub fn p1_gradients(a: Point, b: Point, c: Point) -> (f64, [Point; 3]) {
    let area = signed_area(a, b, c);
    let inv = 0.5 / area;
    let grads = [
        [(b[1] - c[1]) * inv, (c[0] - b[0]) * inv],
        [(c[1] - a[1]) * inv, (a[0] - c[0]) * inv],
        [(a[1] - b[1]) * inv, (b[0] - a[0]) * inv],
    ];
    (area, grads)
}

/// Part of the channel boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Inlet,
    Outlet,
    Axis,
    Interface,
}

/// A boundary edge of the fine mesh and the opposite vertex of its triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub opposite: usize,
    pub tag: Boundary,
}

impl BoundaryEdge {
    /// Outward normal scaled by the edge length, on `positions`.
    pub fn scaled_normal(&self, positions: &[Point]) -> Point {
        let (pa, pb, po) = (
            positions[self.a],
            positions[self.b],
            positions[self.opposite],
        );
        let e = [pb[0] - pa[0], pb[1] - pa[1]];
        let mut n = [e[1], -e[0]];
        let to_opp = [po[0] - pa[0], po[1] - pa[1]];
        if n[0] * to_opp[0] + n[1] * to_opp[1] > 0.0 {
            n = [-n[0], -n[1]];
        }
        n
    }
}

/// Nested coarse (pressure) and fine (velocity) meshes of the channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub n_z: usize,
    pub n_r: usize,
    pub length: f64,
    pub radius: f64,
    pub coarse: TriMesh,
    pub fine: TriMesh,
    /// Fine-node index of each coarse node.
    pub coarse_to_fine: Vec<usize>,
    /// Interpolation of coarse P1 functions onto fine nodes (fine × coarse).
    pub prolongation: CsrMatrix,
    /// Fine nodes on `r = R`, ordered by increasing `z`.
    pub interface: Vec<usize>,
    pub boundary_edges: Vec<BoundaryEdge>,
    on_boundary: Vec<[bool; 4]>,
}

impl Mesh {
    pub fn fine_nz(&self) -> usize {
        2 * self.n_z - 1
    }

    pub fn fine_nr(&self) -> usize {
        2 * self.n_r - 1
    }

    /// Fine-node index of grid position `(i, j)` (`i` along `z`).
    pub fn fine_index(&self, i: usize, j: usize) -> usize {
        j * self.fine_nz() + i
    }

    pub fn is_on(&self, node: usize, tag: Boundary) -> bool {
        self.on_boundary[node][tag as usize]
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.on_boundary[node].iter().any(|&b| b)
    }

    /// Wall grid induced by the interface nodes.
    pub fn wall_grid(&self) -> WallGrid {
        WallGrid::new(
            self.interface
                .iter()
                .map(|&n| self.fine.nodes[n][0])
                .collect(),
        )
        .expect("interface nodes are strictly increasing")
    }

    /// Fine nodes of the vertical grid line closest to `z`, bottom to top.
    pub fn section(&self, z: f64) -> Result<Vec<usize>> {
        if !(z >= 0.0 && z <= self.length) {
            return Err(FsiError::param(
                "section",
                format!("z = {z} lies outside [0, {}]", self.length),
            ));
        }
        let dz = self.length / (self.fine_nz() - 1) as f64;
        let i = ((z / dz).round() as usize).min(self.fine_nz() - 1);
        Ok((0..self.fine_nr()).map(|j| self.fine_index(i, j)).collect())
    }

    /// Interpolates a coarse nodal field to the fine nodes.
    pub fn prolongate(&self, coarse: &[f64]) -> Vec<f64> {
        self.prolongation.mul_vec(coarse)
    }
}

/// Builds the nested structured meshes with `n_z × n_r` coarse nodes.
pub fn build_mesh(n_z: usize, n_r: usize, length: f64, radius: f64) -> Result<Mesh> {
    if n_z < 2 || n_r < 2 {
        return Err(FsiError::Mesh(format!(
            "need at least 2 × 2 coarse nodes, got {n_z} × {n_r}"
        )));
    }
    if !(length.is_finite() && length > 0.0 && radius.is_finite() && radius > 0.0) {
        return Err(FsiError::Mesh(format!(
            "channel must have positive size, got {length} × {radius}"
        )));
    }
    let coarse = structured(n_z, n_r, length, radius, 1);
    let fine = structured(2 * n_z - 1, 2 * n_r - 1, length, radius, 2);
    let fnz = 2 * n_z - 1;
    let fnr = 2 * n_r - 1;
    let fidx = |i: usize, j: usize| j * fnz + i;

    let coarse_to_fine: Vec<usize> = (0..n_r)
        .flat_map(|j| (0..n_z).map(move |i| fidx(2 * i, 2 * j)))
        .collect();

    // Coarse P1 functions are linear on each coarse triangle, so a fine node
    // on a coarse edge takes the mean of the edge endpoints.
    let mut fine_value: Vec<Vec<(usize, f64)>> = vec![Vec::new(); fnz * fnr];
    for (c, &f) in coarse_to_fine.iter().enumerate() {
        fine_value[f] = vec![(c, 1.0)];
    }
    for tri in &coarse.triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let (fa, fb) = (coarse_to_fine[a], coarse_to_fine[b]);
            let (ia, ja) = (fa % fnz, fa / fnz);
            let (ib, jb) = (fb % fnz, fb / fnz);
            let mid = fidx((ia + ib) / 2, (ja + jb) / 2);
            if fine_value[mid].is_empty() {
                fine_value[mid] = vec![(a, 0.5), (b, 0.5)];
            }
        }
    }
    let mut t = TripletList::with_capacity(fnz * fnr, n_z * n_r, 2 * fnz * fnr);
    for (f, entries) in fine_value.iter().enumerate() {
        if entries.is_empty() {
            return Err(FsiError::Mesh(format!(
                "fine node {f} is not nested in the coarse mesh"
            )));
        }
        for &(c, w) in entries {
            t.push(f, c, w);
        }
    }
    let prolongation = t.to_csr();

    let mut on_boundary = vec![[false; 4]; fnz * fnr];
    for j in 0..fnr {
        for i in 0..fnz {
            let b = &mut on_boundary[fidx(i, j)];
            b[Boundary::Inlet as usize] = i == 0;
            b[Boundary::Outlet as usize] = i == fnz - 1;
            b[Boundary::Axis as usize] = j == 0;
            b[Boundary::Interface as usize] = j == fnr - 1;
        }
    }
    let interface: Vec<usize> = (0..fnz).map(|i| fidx(i, fnr - 1)).collect();

    let mut boundary_edges = Vec::new();
    let neighbors = fine.neighbors();
    for (tri, nb) in fine.triangles.iter().zip(&neighbors) {
        for k in 0..3 {
            if nb[k].is_some() {
                continue;
            }
            let (a, b, opposite) = (tri[(k + 1) % 3], tri[(k + 2) % 3], tri[k]);
            let shared =
                |tag: Boundary| on_boundary[a][tag as usize] && on_boundary[b][tag as usize];
            let tag = [
                Boundary::Inlet,
                Boundary::Outlet,
                Boundary::Axis,
                Boundary::Interface,
            ]
            .into_iter()
            .find(|&tag| shared(tag))
            .ok_or_else(|| FsiError::Mesh("boundary edge without tag".into()))?;
            boundary_edges.push(BoundaryEdge {
                a,
                b,
                opposite,
                tag,
            });
        }
    }

    Ok(Mesh {
        n_z,
        n_r,
        length,
        radius,
        coarse,
        fine,
        coarse_to_fine,
        prolongation,
        interface,
        boundary_edges,
        on_boundary,
    })
}

/// Structured grid; `cells_per_parent` fine cells share one diagonal
/// orientation so that refinement is nested.
fn structured(nz: usize, nr: usize, length: f64, radius: f64, cells_per_parent: usize) -> TriMesh {
    let idx = |i: usize, j: usize| j * nz + i;
    let mut nodes = Vec::with_capacity(nz * nr);
    for j in 0..nr {
        for i in 0..nz {
            nodes.push([
                length * i as f64 / (nz - 1) as f64,
                radius * j as f64 / (nr - 1) as f64,
            ]);
        }
    }
    let parents = (nz - 1) / cells_per_parent;
    let mut triangles = Vec::with_capacity(2 * (nz - 1) * (nr - 1));
    for j in 0..nr - 1 {
        for i in 0..nz - 1 {
            let parent = i / cells_per_parent;
            // `/` diagonal left of the mid-plane, `\` right of it.
            let forward = 2 * parent < parents;
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            if forward {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }
    TriMesh { nodes, triangles }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_counts() {
        let m = build_mesh(31, 11, 6.0, 0.5).unwrap();
        assert_eq!(m.coarse.node_count(), 341);
        assert_eq!(m.fine.node_count(), 61 * 21);
        let m = build_mesh(2, 2, 1.0, 1.0).unwrap();
        assert_eq!(m.coarse.node_count(), 4);
        assert_eq!(m.coarse.triangles.len(), 2);
        assert_eq!(m.fine.triangles.len(), 8);
    }

    #[test]
    fn degenerate_counts_are_rejected() {
        assert!(matches!(build_mesh(1, 5, 1.0, 1.0), Err(FsiError::Mesh(_))));
        assert!(matches!(build_mesh(5, 1, 1.0, 1.0), Err(FsiError::Mesh(_))));
        assert!(matches!(build_mesh(5, 5, 0.0, 1.0), Err(FsiError::Mesh(_))));
    }

    #[test]
    fn coarse_nodes_are_fine_nodes() {
        let m = build_mesh(7, 4, 3.0, 0.7).unwrap();
        for (c, &f) in m.coarse_to_fine.iter().enumerate() {
            assert_eq!(m.coarse.nodes[c], m.fine.nodes[f]);
        }
    }

    #[test]
    fn all_triangles_positive() {
        let m = build_mesh(6, 5, 2.0, 1.0).unwrap();
        for mesh in [&m.coarse, &m.fine] {
            let total: f64 = (0..mesh.triangles.len())
                .map(|t| {
                    let a = mesh.signed_area(t, &mesh.nodes);
                    assert!(a > 0.0);
                    a
                })
                .sum();
            assert!((total - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fine_triangles_nest_in_coarse() {
        // every fine triangle's centroid lies in a coarse triangle whose
        // three vertices interpolate its nodes exactly
        let m = build_mesh(5, 4, 2.0, 1.0).unwrap();
        let coarse_fn: Vec<f64> = m
            .coarse
            .nodes
            .iter()
            .map(|p| 1.0 + 2.0 * p[0] - 3.0 * p[1])
            .collect();
        let fine = m.prolongate(&coarse_fn);
        for (f, p) in m.fine.nodes.iter().enumerate() {
            assert!((fine[f] - (1.0 + 2.0 * p[0] - 3.0 * p[1])).abs() < 1e-12);
        }
    }

    #[test]
    fn prolongation_partition_of_unity() {
        let m = build_mesh(8, 5, 3.0, 1.0).unwrap();
        let ones = m.prolongate(&vec![1.0; m.coarse.node_count()]);
        assert!(ones.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn boundary_edges_cover_perimeter() {
        let m = build_mesh(4, 3, 3.0, 2.0).unwrap();
        let mut len = [0.0; 4];
        for e in &m.boundary_edges {
            let n = e.scaled_normal(&m.fine.nodes);
            len[e.tag as usize] += n[0].hypot(n[1]);
            let expected = match e.tag {
                Boundary::Inlet => [-1.0, 0.0],
                Boundary::Outlet => [1.0, 0.0],
                Boundary::Axis => [0.0, -1.0],
                Boundary::Interface => [0.0, 1.0],
            };
            let l = n[0].hypot(n[1]);
            assert!((n[0] / l - expected[0]).abs() < 1e-14);
            assert!((n[1] / l - expected[1]).abs() < 1e-14);
        }
        assert_eq!(len, [2.0, 2.0, 3.0, 3.0]);
    }

    #[test]
    fn triangulation_is_mirror_symmetric() {
        let m = build_mesh(9, 3, 4.0, 1.0).unwrap();
        let key = |p: Point| ((p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64);
        let mut tris: Vec<Vec<(i64, i64)>> = m
            .fine
            .triangles
            .iter()
            .map(|t| {
                let mut v: Vec<_> = t.iter().map(|&n| key(m.fine.nodes[n])).collect();
                v.sort();
                v
            })
            .collect();
        let mut mirrored: Vec<Vec<(i64, i64)>> = m
            .fine
            .triangles
            .iter()
            .map(|t| {
                let mut v: Vec<_> = t
                    .iter()
                    .map(|&n| key([4.0 - m.fine.nodes[n][0], m.fine.nodes[n][1]]))
                    .collect();
                v.sort();
                v
            })
            .collect();
        tris.sort();
        mirrored.sort();
        assert_eq!(tris, mirrored);
    }

    #[test]
    fn interface_and_wall_grid() {
        let m = build_mesh(4, 3, 3.0, 0.5).unwrap();
        assert_eq!(m.interface.len(), 7);
        let g = m.wall_grid();
        assert_eq!(g.len(), 7);
        assert!((g.length() - 3.0).abs() < 1e-15);
        for &n in &m.interface {
            assert!(m.is_on(n, Boundary::Interface));
        }
        assert!(m.section(3.5).is_err());
        assert_eq!(m.section(1.5).unwrap().len(), 5);
    }
}
