//! Polygonal mesh representation with derived face topology.
//!
//! A mesh stores nodes and counter-clockwise cell loops; faces, cell
//! diameters, areas and barycenters are derived. The barycenter of a cell
//! is the sampling node carrying that cell's degree(s) of freedom.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{PrdgError, Result};
use crate::geom::{self, Point2};

/// An undirected mesh face (edge between two nodes).
#[derive(Debug, Clone)]
pub struct Face {
    pub nodes: [usize; 2],
    /// Face length h_e.
    pub length: f64,
    /// Incident cell indices; boundary faces have exactly one.
    pub cells: Vec<usize>,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.cells.len() == 1
    }
}

#[derive(Debug, Clone)]
pub struct PolygonalMesh {
    pub nodes: Vec<Point2>,
    /// Counter-clockwise node-index loops.
    pub cells: Vec<Vec<usize>>,
    pub faces: Vec<Face>,
    /// Per-cell list of face indices, in loop order.
    pub cell_faces: Vec<Vec<usize>>,
    /// Node-sharing adjacency Delta(K), excluding K itself.
    pub node_adjacency: Vec<Vec<usize>>,
    /// Face-sharing neighbours of each cell.
    pub face_adjacency: Vec<Vec<usize>>,
    pub cell_diameter: Vec<f64>,
    pub cell_area: Vec<f64>,
    /// Sampling nodes x_K.
    pub cell_barycenter: Vec<Point2>,
    /// Cells whose barycenter falls outside the cell (possible for
    /// non-convex cells); diagnostic only.
    pub nonconvex_warnings: Vec<usize>,
}

/// Shape-regularity diagnostics. Purely informative; no mesh is rejected.
#[derive(Debug, Clone)]
pub struct RegularityReport {
    /// min over cells of (min edge length / h_K).
    pub rho_v: f64,
    /// min over cells of h_K / max diameter in Delta(K).
    pub rho_s: f64,
    /// min over cells of (inradius estimate / h_K).
    pub tau: f64,
    pub worst_rho_v_cell: usize,
    pub worst_rho_s_cell: usize,
    pub worst_tau_cell: usize,
}

#[derive(Serialize, Deserialize)]
struct MeshFile {
    nodes: Vec<[f64; 2]>,
    cells: Vec<Vec<usize>>,
}

impl PolygonalMesh {
    /// Builds a mesh from raw nodes and cell loops, normalizing loop
    /// orientation and deriving faces and per-cell quantities.
    pub fn from_raw(nodes: Vec<Point2>, mut cells: Vec<Vec<usize>>) -> Result<Self> {
        let mut used = vec![false; nodes.len()];
        for (ci, cell) in cells.iter_mut().enumerate() {
            if cell.len() < 3 {
                return Err(PrdgError::MeshValidation(format!(
                    "cell {ci} has fewer than 3 nodes"
                )));
            }
            let mut seen = std::collections::HashSet::new();
            for &n in cell.iter() {
                if n >= nodes.len() {
                    return Err(PrdgError::MeshValidation(format!(
                        "cell {ci} references node {n} out of range"
                    )));
                }
                if !seen.insert(n) {
                    return Err(PrdgError::MeshValidation(format!(
                        "cell {ci} repeats node {n}"
                    )));
                }
                used[n] = true;
            }
            let verts: Vec<Point2> = cell.iter().map(|&n| nodes[n]).collect();
            if !geom::is_simple_polygon(&verts) {
                return Err(PrdgError::MeshValidation(format!(
                    "cell {ci} is not a simple polygon"
                )));
            }
            if geom::signed_area(&verts) < 0.0 {
                cell.reverse();
            }
        }
        if let Some(n) = used.iter().position(|&u| !u) {
            return Err(PrdgError::MeshValidation(format!(
                "node {n} is not referenced by any cell"
            )));
        }

        let mut mesh = PolygonalMesh {
            nodes,
            cells,
            faces: Vec::new(),
            cell_faces: Vec::new(),
            node_adjacency: Vec::new(),
            face_adjacency: Vec::new(),
            cell_diameter: Vec::new(),
            cell_area: Vec::new(),
            cell_barycenter: Vec::new(),
            nonconvex_warnings: Vec::new(),
        };
        mesh.compute_cell_quantities();
        mesh.build_face_topology()?;
        Ok(mesh)
    }

    fn compute_cell_quantities(&mut self) {
        let n = self.cells.len();
        self.cell_diameter = Vec::with_capacity(n);
        self.cell_area = Vec::with_capacity(n);
        self.cell_barycenter = Vec::with_capacity(n);
        self.nonconvex_warnings.clear();
        for (ci, cell) in self.cells.iter().enumerate() {
            let verts: Vec<Point2> = cell.iter().map(|&i| self.nodes[i]).collect();
            self.cell_diameter.push(geom::diameter(&verts));
            self.cell_area.push(geom::signed_area(&verts));
            let bc = geom::centroid(&verts);
            if !geom::point_in_polygon(&bc, &verts) {
                self.nonconvex_warnings.push(ci);
            }
            self.cell_barycenter.push(bc);
        }
    }

    /// Derives the undirected face list and the two adjacency relations.
    /// Each undirected node pair appearing in cell loops becomes one face;
    /// a pair owned by more than two cells is a non-manifold error.
    fn build_face_topology(&mut self) -> Result<()> {
        let mut face_of: HashMap<(usize, usize), usize> = HashMap::new();
        let mut faces: Vec<Face> = Vec::new();
        let mut cell_faces: Vec<Vec<usize>> = vec![Vec::new(); self.cells.len()];

        for (ci, cell) in self.cells.iter().enumerate() {
            let k = cell.len();
            for e in 0..k {
                let a = cell[e];
                let b = cell[(e + 1) % k];
                let key = (a.min(b), a.max(b));
                let fi = *face_of.entry(key).or_insert_with(|| {
                    faces.push(Face {
                        nodes: [key.0, key.1],
                        length: self.nodes[key.0].dist(&self.nodes[key.1]),
                        cells: Vec::new(),
                    });
                    faces.len() - 1
                });
                if faces[fi].cells.len() >= 2 {
                    return Err(PrdgError::NonManifold(format!(
                        "face ({}, {}) has more than two incident cells",
                        key.0, key.1
                    )));
                }
                faces[fi].cells.push(ci);
                cell_faces[ci].push(fi);
            }
        }

        // Face-sharing neighbours.
        let mut face_adj: Vec<Vec<usize>> = vec![Vec::new(); self.cells.len()];
        for face in &faces {
            if let [a, b] = face.cells[..] {
                face_adj[a].push(b);
                face_adj[b].push(a);
            }
        }
        for list in &mut face_adj {
            list.sort_unstable();
            list.dedup();
        }

        // Node-sharing adjacency Delta(K).
        let mut cells_of_node: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for (ci, cell) in self.cells.iter().enumerate() {
            for &n in cell {
                cells_of_node[n].push(ci);
            }
        }
        let mut node_adj: Vec<Vec<usize>> = vec![Vec::new(); self.cells.len()];
        for (ci, cell) in self.cells.iter().enumerate() {
            for &n in cell {
                for &other in &cells_of_node[n] {
                    if other != ci {
                        node_adj[ci].push(other);
                    }
                }
            }
        }
        for list in &mut node_adj {
            list.sort_unstable();
            list.dedup();
        }

        self.faces = faces;
        self.cell_faces = cell_faces;
        self.face_adjacency = face_adj;
        self.node_adjacency = node_adj;
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    /// Largest cell diameter h.
    pub fn h_max(&self) -> f64 {
        self.cell_diameter.iter().cloned().fold(0.0, f64::max)
    }

    pub fn cell_vertices(&self, cell: usize) -> Vec<Point2> {
        self.cells[cell].iter().map(|&i| self.nodes[i]).collect()
    }

    pub fn total_area(&self) -> f64 {
        self.cell_area.iter().sum()
    }

    pub fn regularity_report(&self) -> RegularityReport {
        let mut rho_v = f64::INFINITY;
        let mut rho_s = f64::INFINITY;
        let mut tau = f64::INFINITY;
        let (mut wv, mut ws, mut wt) = (0, 0, 0);
        for ci in 0..self.n_cells() {
            let h_k = self.cell_diameter[ci];
            let min_edge = self.cell_faces[ci]
                .iter()
                .map(|&f| self.faces[f].length)
                .fold(f64::INFINITY, f64::min);
            let rv = min_edge / h_k;
            if rv < rho_v {
                rho_v = rv;
                wv = ci;
            }
            let max_nbr = self.node_adjacency[ci]
                .iter()
                .map(|&c| self.cell_diameter[c])
                .fold(h_k, f64::max);
            let rs = h_k / max_nbr;
            if rs < rho_s {
                rho_s = rs;
                ws = ci;
            }
            let rt = self.inradius_estimate(ci) / h_k;
            if rt < tau {
                tau = rt;
                wt = ci;
            }
        }
        RegularityReport {
            rho_v,
            rho_s,
            tau,
            worst_rho_v_cell: wv,
            worst_rho_s_cell: ws,
            worst_tau_cell: wt,
        }
    }

    /// Inradius approximated by the largest boundary distance among the
    /// barycenter and midpoint refinements toward each vertex.
    fn inradius_estimate(&self, cell: usize) -> f64 {
        let verts = self.cell_vertices(cell);
        let bc = self.cell_barycenter[cell];
        let mut best = geom::dist_to_boundary(&bc, &verts);
        for v in &verts {
            for t in [0.25, 0.5] {
                let p = bc.lerp(v, t);
                if geom::point_in_polygon(&p, &verts) {
                    best = best.max(geom::dist_to_boundary(&p, &verts));
                }
            }
        }
        best
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: MeshFile = serde_json::from_str(text)?;
        let nodes = file
            .nodes
            .into_iter()
            .map(|[x, y]| Point2::new(x, y))
            .collect();
        Self::from_raw(nodes, file.cells)
    }

    pub fn to_json_string(&self) -> String {
        let file = MeshFile {
            nodes: self.nodes.iter().map(|p| [p.x, p.y]).collect(),
            cells: self.cells.clone(),
        };
        serde_json::to_string_pretty(&file).expect("mesh serialization cannot fail")
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }
}

/// Uniform triangular mesh on an axis-aligned rectangle: squares of side
/// `h` each split along the diagonal with positive slope. Cells are
/// emitted row-major, lower triangle first, so regeneration with the same
/// parameters is bit-identical.
pub fn generate_triangular_mesh(
    x_range: (f64, f64),
    y_range: (f64, f64),
    h: f64,
) -> Result<PolygonalMesh> {
    let (x0, x1) = x_range;
    let (y0, y1) = y_range;
    if !h.is_finite() || h <= 0.0 {
        return Err(PrdgError::InvalidParameter(format!(
            "mesh spacing h must be positive, got {h}"
        )));
    }
    let width = x1 - x0;
    let height = y1 - y0;
    if h > width.min(height) {
        return Err(PrdgError::InvalidParameter(format!(
            "mesh spacing h = {h} exceeds the smallest domain side"
        )));
    }
    let nx = (width / h).round().max(1.0) as usize;
    let ny = (height / h).round().max(1.0) as usize;

    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push(Point2::new(
                x0 + width * i as f64 / nx as f64,
                y0 + height * j as f64 / ny as f64,
            ));
        }
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            // Diagonal from (i, j) to (i+1, j+1).
            cells.push(vec![idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            cells.push(vec![idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    PolygonalMesh::from_raw(nodes, cells)
}
