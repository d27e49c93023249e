//! Classification of cells and faces against the interface and cut-cell
//! geometry extraction.
//!
//! A cut cell K is split by the interface into sub-polygons K0 (phi > 0
//! side) and K1 (phi < 0 side), joined along a polyline approximation of
//! the interface segment Gamma_K with vertices on {phi = 0}.

use std::collections::HashMap;

use crate::error::{PrdgError, Result};
use crate::geom::{self, Point2};
use crate::levelset::LevelSet;
use crate::mesh::PolygonalMesh;

pub const SIDE_OUTER: usize = 0;
pub const SIDE_INNER: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellClass {
    Pure0,
    Pure1,
    Cut,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FaceClass {
    Pure0,
    Pure1,
    /// Crossed once by the interface at `root`.
    Cut { root: Point2 },
    /// Lies on the interface itself, separating a side-0 cell from a
    /// side-1 cell. Arises when both endpoints sit on {phi = 0} and
    /// node snapping pushed the neighbours to opposite sides.
    Interface,
}

impl FaceClass {
    /// Side occupied by an uncut face.
    pub fn pure_side(&self) -> Option<usize> {
        match self {
            FaceClass::Pure0 => Some(SIDE_OUTER),
            FaceClass::Pure1 => Some(SIDE_INNER),
            FaceClass::Cut { .. } | FaceClass::Interface => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CutCellGeometry {
    /// Ordered points on {phi = 0}, endpoints on the cell boundary.
    pub polyline: Vec<Point2>,
    /// Sub-polygon K0 on the phi > 0 side.
    pub region0: Vec<Point2>,
    /// Sub-polygon K1 on the phi < 0 side.
    pub region1: Vec<Point2>,
    /// Uncut anchor cells (K_circ^0, K_circ^1) in Delta(K).
    pub anchor: [usize; 2],
}

#[derive(Debug, Clone)]
pub struct CutTopology {
    pub cell_class: Vec<CellClass>,
    pub face_class: Vec<FaceClass>,
    pub cut_cells: HashMap<usize, CutCellGeometry>,
    /// Number of polyline sub-segments used per cut cell.
    pub n_sub: usize,
}

impl CutTopology {
    pub fn is_cut(&self, cell: usize) -> bool {
        self.cell_class[cell] == CellClass::Cut
    }

    /// Whether the cell carries a degree of freedom on the given side,
    /// i.e. belongs to T_h^side.
    pub fn cell_on_side(&self, cell: usize, side: usize) -> bool {
        match self.cell_class[cell] {
            CellClass::Pure0 => side == SIDE_OUTER,
            CellClass::Pure1 => side == SIDE_INNER,
            CellClass::Cut => true,
        }
    }

    pub fn cut_cell_indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.cut_cells.keys().cloned().collect();
        v.sort_unstable();
        v
    }

    /// Sub-region of a cell on one side: the whole cell for a matching
    /// pure cell, the clipped sub-polygon for a cut cell, empty otherwise.
    pub fn cell_region(
        &self,
        mesh: &PolygonalMesh,
        cell: usize,
        side: usize,
    ) -> Option<Vec<Point2>> {
        match self.cell_class[cell] {
            CellClass::Pure0 if side == SIDE_OUTER => Some(mesh.cell_vertices(cell)),
            CellClass::Pure1 if side == SIDE_INNER => Some(mesh.cell_vertices(cell)),
            CellClass::Cut => {
                let g = &self.cut_cells[&cell];
                Some(if side == SIDE_OUTER {
                    g.region0.clone()
                } else {
                    g.region1.clone()
                })
            }
            _ => None,
        }
    }
}

/// A violation found by `verify_assumptions`.
#[derive(Debug, Clone)]
pub struct AssumptionViolation {
    pub assumption: u8,
    pub cell: usize,
    pub message: String,
}

/// Classifies all cells and faces against the level set and extracts
/// cut-cell geometry. `n_sub` controls how many straight sub-segments
/// approximate the interface within each cut cell.
pub fn classify(mesh: &PolygonalMesh, phi: &LevelSet, n_sub: usize) -> Result<CutTopology> {
    let n_sub = n_sub.max(1);
    let h = mesh.h_max();
    let snap_tol = 1e-12 * h;

    // Cell classification by snapped node signs.
    let mut cell_class = Vec::with_capacity(mesh.n_cells());
    let mut cell_signs: Vec<Vec<i8>> = Vec::with_capacity(mesh.n_cells());
    let mut cell_values: Vec<Vec<f64>> = Vec::with_capacity(mesh.n_cells());
    for cell in 0..mesh.n_cells() {
        let verts = mesh.cell_vertices(cell);
        let values: Vec<f64> = verts.iter().map(|v| phi.eval(v)).collect();
        let signs = snapped_signs(&values, snap_tol);
        let any_pos = signs.iter().any(|&s| s > 0);
        let any_neg = signs.iter().any(|&s| s < 0);
        cell_class.push(match (any_pos, any_neg) {
            (true, true) => CellClass::Cut,
            (false, true) => CellClass::Pure1,
            // An all-snapped degenerate cell counts as side 0.
            _ => CellClass::Pure0,
        });
        cell_signs.push(signs);
        cell_values.push(values);
    }

    // A cell can also be cut without any sign change at its nodes: when
    // an edge has both endpoints exactly on {phi = 0} and the interface
    // arc bulges from that chord into the cell interior, the sliver
    // between chord and arc belongs to the other subdomain. Node signs
    // alone would call such a cell pure and silently misassign the
    // sliver; detect it from the sign of phi at the chord midpoint and
    // reclassify the cell as cut through the two vertices.
    let mut vertex_cut: HashMap<usize, usize> = HashMap::new();
    for cell in 0..mesh.n_cells() {
        if cell_class[cell] == CellClass::Cut {
            continue;
        }
        let majority: i8 = if cell_class[cell] == CellClass::Pure0 { 1 } else { -1 };
        let verts = mesh.cell_vertices(cell);
        let values = &cell_values[cell];
        let n = verts.len();
        for i in 0..n {
            let j = (i + 1) % n;
            if values[i].abs() <= snap_tol && values[j].abs() <= snap_tol {
                let mid = verts[i].lerp(&verts[j], 0.5);
                let sm = snap_sign(phi.eval(&mid), snap_tol);
                if sm != 0 && sm != majority {
                    cell_class[cell] = CellClass::Cut;
                    vertex_cut.insert(cell, i);
                    break;
                }
            }
        }
    }

    // Face classification from raw endpoint values. Faces with both
    // endpoints on {phi = 0} follow the snapped classes of their cells
    // so faces and cells never disagree about sides.
    let mut face_class = Vec::with_capacity(mesh.faces.len());
    for face in &mesh.faces {
        let a = mesh.nodes[face.nodes[0]];
        let b = mesh.nodes[face.nodes[1]];
        let (fa, fb) = (phi.eval(&a), phi.eval(&b));
        let sa = snap_sign(fa, snap_tol);
        let sb = snap_sign(fb, snap_tol);
        face_class.push(if sa * sb < 0 {
            let root = edge_root(&a, &b, phi, snap_tol)?;
            FaceClass::Cut { root }
        } else if sa + sb > 0 {
            FaceClass::Pure0
        } else if sa + sb < 0 {
            FaceClass::Pure1
        } else if sa != 0 || sb != 0 {
            // One endpoint on the interface; the other decides.
            if sa > 0 || sb > 0 {
                FaceClass::Pure0
            } else {
                FaceClass::Pure1
            }
        } else {
            // Both endpoints on the interface. The face must carry a
            // side shared by all its cells; without one it separates
            // the snapped subdomains and is an interface face.
            let on0 = face
                .cells
                .iter()
                .all(|&c| cell_class[c] != CellClass::Pure1);
            let on1 = face
                .cells
                .iter()
                .all(|&c| cell_class[c] != CellClass::Pure0);
            match (on0, on1) {
                (true, false) => FaceClass::Pure0,
                (false, true) => FaceClass::Pure1,
                (true, true) => {
                    // All neighbours are cut; let the midpoint decide.
                    let mid = a.lerp(&b, 0.5);
                    if phi.eval(&mid) >= 0.0 {
                        FaceClass::Pure0
                    } else {
                        FaceClass::Pure1
                    }
                }
                (false, false) => FaceClass::Interface,
            }
        });
    }

    // Cut-cell geometry and anchors.
    let mut cut_cells = HashMap::new();
    for cell in 0..mesh.n_cells() {
        if cell_class[cell] != CellClass::Cut {
            continue;
        }
        let (polyline, region0, region1) = match vertex_cut.get(&cell) {
            Some(&edge) => {
                let verts = mesh.cell_vertices(cell);
                let majority: i8 = if cell_signs[cell].iter().any(|&s| s < 0) { -1 } else { 1 };
                split_polygon_vertex_cut(&verts, edge, majority, phi, n_sub, cell)?
            }
            None => cut_cell_geometry_signed(mesh, cell, &cell_signs[cell], phi, n_sub)?,
        };
        let anchor0 = select_anchor(mesh, &cell_class, cell, SIDE_OUTER)?;
        let anchor1 = select_anchor(mesh, &cell_class, cell, SIDE_INNER)?;
        cut_cells.insert(
            cell,
            CutCellGeometry {
                polyline,
                region0,
                region1,
                anchor: [anchor0, anchor1],
            },
        );
    }

    Ok(CutTopology {
        cell_class,
        face_class,
        cut_cells,
        n_sub,
    })
}

/// Signs of node values with near-zero values snapped to the majority
/// sign of the remaining nodes (ties resolve positive).
fn snapped_signs(values: &[f64], tol: f64) -> Vec<i8> {
    let mut majority: i64 = 0;
    for &v in values {
        if v.abs() > tol {
            majority += if v > 0.0 { 1 } else { -1 };
        }
    }
    let snap = if majority >= 0 { 1 } else { -1 };
    values
        .iter()
        .map(|&v| {
            if v.abs() <= tol {
                snap
            } else if v > 0.0 {
                1
            } else {
                -1
            }
        })
        .collect()
}

fn snap_sign(v: f64, tol: f64) -> i8 {
    if v.abs() <= tol {
        0
    } else if v > 0.0 {
        1
    } else {
        -1
    }
}

/// Root of phi along the segment [a, b] by bisection (guaranteed given a
/// sign change), to an arclength tolerance of 1e-12 times the segment
/// scale, followed by one Newton polish when a gradient is available.
pub fn edge_root(a: &Point2, b: &Point2, phi: &LevelSet, tol: f64) -> Result<Point2> {
    let fa = phi.eval(a);
    let fb = phi.eval(b);
    if fa.abs() <= tol {
        return Ok(*a);
    }
    if fb.abs() <= tol {
        return Ok(*b);
    }
    if fa * fb > 0.0 {
        return Err(PrdgError::Geometry {
            cell: usize::MAX,
            message: "edge_root called without a sign change".into(),
        });
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut flo = fa;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let fm = phi.eval(&a.lerp(b, mid));
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    let mut p = a.lerp(b, 0.5 * (lo + hi));
    if phi.has_analytic_gradient() {
        // Newton polish along the segment direction.
        let d = *b - *a;
        let (gx, gy) = phi.gradient(&p);
        let dd = gx * d.x + gy * d.y;
        if dd.abs() > 1e-300 {
            let dt = phi.eval(&p) / dd;
            let t = (0.5 * (lo + hi) - dt).clamp(0.0, 1.0);
            let q = a.lerp(b, t);
            if phi.eval(&q).abs() < phi.eval(&p).abs() {
                p = q;
            }
        }
    }
    Ok(p)
}

/// Projects a point onto {phi = 0} along direction `dir` by bracketing
/// and bisection, with a final Newton polish when a gradient exists.
pub fn project_to_interface(
    p: &Point2,
    dir: &Point2,
    phi: &LevelSet,
    scale: f64,
) -> Result<Point2> {
    let norm = (dir.x * dir.x + dir.y * dir.y).sqrt();
    if norm < 1e-300 {
        return Err(PrdgError::Geometry {
            cell: usize::MAX,
            message: "degenerate projection direction".into(),
        });
    }
    let d = Point2::new(dir.x / norm, dir.y / norm);
    let f0 = phi.eval(p);
    if f0 == 0.0 {
        return Ok(*p);
    }
    // Expanding bracket on both sides of p.
    let mut step = 1e-6 * scale;
    let mut bracket: Option<(f64, f64)> = None;
    while step <= 4.0 * scale {
        for s in [step, -step] {
            let q = Point2::new(p.x + s * d.x, p.y + s * d.y);
            if phi.eval(&q) * f0 <= 0.0 {
                bracket = Some((0.0, s));
                break;
            }
        }
        if bracket.is_some() {
            break;
        }
        step *= 2.0;
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| PrdgError::Geometry {
        cell: usize::MAX,
        message: "interface projection failed to bracket a root".into(),
    })?;
    let f_at = |s: f64| phi.eval(&Point2::new(p.x + s * d.x, p.y + s * d.y));
    let mut flo = f_at(lo);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let fm = f_at(mid);
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
        if (hi - lo).abs() < 1e-14 * scale {
            break;
        }
    }
    let mut s = 0.5 * (lo + hi);
    let mut q = Point2::new(p.x + s * d.x, p.y + s * d.y);
    if phi.has_analytic_gradient() {
        let (gx, gy) = phi.gradient(&q);
        let dd = gx * d.x + gy * d.y;
        if dd.abs() > 1e-300 {
            s -= phi.eval(&q) / dd;
            let q2 = Point2::new(p.x + s * d.x, p.y + s * d.y);
            if phi.eval(&q2).abs() < phi.eval(&q).abs() {
                q = q2;
            }
        }
    }
    Ok(q)
}

/// Extracts the interface polyline and the two sub-polygons of a cut
/// cell. Standalone variant working on an arbitrary polygon.
pub fn cut_cell_geometry(
    cell_vertices: &[Point2],
    phi: &LevelSet,
    n_sub: usize,
) -> Result<(Vec<Point2>, Vec<Point2>, Vec<Point2>)> {
    let h_k = geom::diameter(cell_vertices);
    let snap_tol = 1e-12 * h_k;
    let values: Vec<f64> = cell_vertices.iter().map(|v| phi.eval(v)).collect();
    let signs = snapped_signs(&values, snap_tol);
    split_polygon(cell_vertices, &signs, phi, n_sub.max(1), usize::MAX)
}

fn cut_cell_geometry_signed(
    mesh: &PolygonalMesh,
    cell: usize,
    signs: &[i8],
    phi: &LevelSet,
    n_sub: usize,
) -> Result<(Vec<Point2>, Vec<Point2>, Vec<Point2>)> {
    let verts = mesh.cell_vertices(cell);
    split_polygon(&verts, signs, phi, n_sub, cell)
}

fn split_polygon(
    verts: &[Point2],
    signs: &[i8],
    phi: &LevelSet,
    n_sub: usize,
    cell: usize,
) -> Result<(Vec<Point2>, Vec<Point2>, Vec<Point2>)> {
    let n = verts.len();
    let h_k = geom::diameter(verts);
    let snap_tol = 1e-12 * h_k;

    // Walk the loop inserting boundary crossings on sign-change edges.
    #[derive(Clone)]
    enum Entry {
        Vertex(Point2, i8),
        Crossing(Point2, usize),
    }
    let mut entries: Vec<Entry> = Vec::new();
    let mut n_crossings = 0;
    for i in 0..n {
        entries.push(Entry::Vertex(verts[i], signs[i]));
        let j = (i + 1) % n;
        if signs[i] * signs[j] < 0 {
            let root = edge_root(&verts[i], &verts[j], phi, snap_tol).map_err(|_| {
                PrdgError::Geometry {
                    cell,
                    message: "root-finding failed on a cut edge".into(),
                }
            })?;
            entries.push(Entry::Crossing(root, n_crossings));
            n_crossings += 1;
        }
    }
    if n_crossings != 2 {
        return Err(PrdgError::AssumptionViolated {
            assumption: 1,
            cell,
            message: format!(
                "interface crosses the cell boundary {n_crossings} times (expected 2); \
                 refine the mesh"
            ),
        });
    }

    // Rotate so the loop starts right after crossing 0.
    let start = entries
        .iter()
        .position(|e| matches!(e, Entry::Crossing(_, 0)))
        .unwrap();
    entries.rotate_left(start);
    let cross_a = match &entries[0] {
        Entry::Crossing(p, _) => *p,
        _ => unreachable!(),
    };
    let second = entries
        .iter()
        .position(|e| matches!(e, Entry::Crossing(_, 1)))
        .unwrap();
    let cross_b = match &entries[second] {
        Entry::Crossing(p, _) => *p,
        _ => unreachable!(),
    };

    // Arc between the crossings in loop order, and the complementary arc.
    let mut arc_ab: Vec<(Point2, i8)> = Vec::new();
    let mut arc_ba: Vec<(Point2, i8)> = Vec::new();
    for (k, e) in entries.iter().enumerate() {
        if let Entry::Vertex(p, s) = e {
            if k < second {
                arc_ab.push((*p, *s));
            } else {
                arc_ba.push((*p, *s));
            }
        }
    }
    let sign_ab = arc_ab.first().map(|&(_, s)| s).unwrap_or(0);
    let sign_ba = arc_ba.first().map(|&(_, s)| s).unwrap_or(0);
    if sign_ab != 0 && arc_ab.iter().any(|&(_, s)| s != sign_ab) {
        return Err(PrdgError::AssumptionViolated {
            assumption: 1,
            cell,
            message: "mixed signs on one boundary arc between crossings; refine the mesh".into(),
        });
    }

    // Interface polyline from cross_a to cross_b; interior points start
    // on the chord and are projected onto {phi = 0}. The sub-polygons
    // are bounded by a finer polyline than the reported one so their
    // areas track the curved interface more closely.
    let fine = project_polyline(&cross_a, &cross_b, phi, n_sub * REGION_REFINE, h_k, cell)?;
    let polyline: Vec<Point2> = (0..=n_sub).map(|k| fine[k * REGION_REFINE]).collect();

    // Assemble sub-polygons: boundary arc plus the fine polyline walked
    // back.
    let build = |arc: &[(Point2, i8)], forward: bool| -> Vec<Point2> {
        let mut poly: Vec<Point2> = Vec::new();
        if forward {
            // cross_a -> arc -> cross_b -> reversed polyline interior.
            poly.push(cross_a);
            poly.extend(arc.iter().map(|&(p, _)| p));
            poly.extend(fine.iter().rev().cloned());
        } else {
            // cross_b -> arc -> cross_a -> polyline forward.
            poly.push(cross_b);
            poly.extend(arc.iter().map(|&(p, _)| p));
            poly.extend(fine.iter().cloned());
        }
        dedup_loop(poly, 1e-13 * h_k)
    };
    let poly_ab = build(&arc_ab, true);
    let poly_ba = build(&arc_ba, false);

    // Decide which polygon is the phi > 0 region from the arc signs.
    let (region0, region1) = match (sign_ab, sign_ba) {
        (1, _) => (poly_ab, poly_ba),
        (-1, _) => (poly_ba, poly_ab),
        (_, 1) => (poly_ba, poly_ab),
        (_, -1) => (poly_ab, poly_ba),
        _ => {
            return Err(PrdgError::Geometry {
                cell,
                message: "could not orient cut sub-polygons".into(),
            })
        }
    };
    Ok((polyline, region0, region1))
}

/// Refinement factor between the reported n_sub-segment polyline and the
/// finer polyline used to bound the cut sub-polygons.
const REGION_REFINE: usize = 8;

/// Polyline with `n_seg` sub-segments from `a` to `b`, interior points
/// projected from the chord onto {phi = 0} along the level-set gradient.
fn project_polyline(
    a: &Point2,
    b: &Point2,
    phi: &LevelSet,
    n_seg: usize,
    h_k: f64,
    cell: usize,
) -> Result<Vec<Point2>> {
    let chord = *b - *a;
    let chord_normal = Point2::new(-chord.y, chord.x);
    let mut polyline = Vec::with_capacity(n_seg + 1);
    polyline.push(*a);
    for k in 1..n_seg {
        let t = k as f64 / n_seg as f64;
        let p = a.lerp(b, t);
        let (gx, gy) = phi.gradient(&p);
        let g2 = gx * gx + gy * gy;
        let dir = if g2 > 1e-20 {
            Point2::new(gx, gy)
        } else {
            chord_normal
        };
        let q = project_to_interface(&p, &dir, phi, h_k).map_err(|_| PrdgError::Geometry {
            cell,
            message: "interface projection did not converge".into(),
        })?;
        polyline.push(q);
    }
    polyline.push(*b);
    Ok(polyline)
}

/// Splits a cell whose interface enters and leaves through the two
/// endpoints of edge `edge_i` (both on {phi = 0}), with every other node
/// on the `majority` side. The region between the edge chord and the
/// interface arc is a sliver of the opposite side.
fn split_polygon_vertex_cut(
    verts: &[Point2],
    edge_i: usize,
    majority: i8,
    phi: &LevelSet,
    n_sub: usize,
    cell: usize,
) -> Result<(Vec<Point2>, Vec<Point2>, Vec<Point2>)> {
    let n = verts.len();
    let h_k = geom::diameter(verts);
    let cross_a = verts[edge_i];
    let cross_b = verts[(edge_i + 1) % n];

    let fine = project_polyline(&cross_a, &cross_b, phi, n_sub * REGION_REFINE, h_k, cell)?;
    let polyline: Vec<Point2> = (0..=n_sub).map(|k| fine[k * REGION_REFINE]).collect();

    // Sliver between the edge chord and the arc: chord forward, arc back.
    let mut sliver = vec![cross_a, cross_b];
    sliver.extend(fine.iter().rev().skip(1).take(fine.len() - 2).cloned());
    let sliver = dedup_loop(sliver, 1e-13 * h_k);

    // Main region: remaining boundary loop from cross_b around to
    // cross_a, then the arc forward.
    let mut main = Vec::with_capacity(n + fine.len());
    for k in 1..n {
        main.push(verts[(edge_i + 1 + k) % n]);
    }
    main.extend(fine.iter().cloned());
    let main = dedup_loop(main, 1e-13 * h_k);

    let (region0, region1) = if majority > 0 { (main, sliver) } else { (sliver, main) };
    Ok((polyline, region0, region1))
}

/// Quadrature on a curved interface represented by a polyline whose
/// vertices lie on {phi = 0}: per sub-segment, Gauss nodes on the chord
/// are projected onto the level set along its gradient and the weights
/// carry a finite-difference arclength Jacobian. Straight sub-segments
/// (chord midpoint already on the interface) keep the plain chord rule.
pub fn curved_polyline_rule(
    polyline: &[Point2],
    phi: &LevelSet,
    order: usize,
) -> crate::quadrature::QuadratureRule {
    use crate::quadrature::{gauss_legendre, gl_count, QuadTarget, QuadratureRule};
    let (nodes, wts) = gauss_legendre(gl_count(order));
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for pair in polyline.windows(2) {
        let (p, q) = (pair[0], pair[1]);
        let len = p.dist(&q);
        if len < 1e-300 {
            continue;
        }
        let chord = q - p;
        let chord_normal = Point2::new(-chord.y, chord.x);
        let project = |t: f64| -> Point2 {
            let c = p.lerp(&q, t);
            let (gx, gy) = phi.gradient(&c);
            let g2 = gx * gx + gy * gy;
            let dir = if g2 > 1e-20 {
                Point2::new(gx, gy)
            } else {
                chord_normal
            };
            project_to_interface(&c, &dir, phi, len).unwrap_or(c)
        };
        let mid = p.lerp(&q, 0.5);
        let straight = phi.eval(&mid).abs() <= 1e-12 * len;
        for (k, &x) in nodes.iter().enumerate() {
            let t = 0.5 * (x + 1.0);
            if straight {
                points.push(p.lerp(&q, t));
                weights.push(0.5 * wts[k] * len);
                continue;
            }
            let pos = project(t);
            // Arclength Jacobian |dgamma/dt| by central differences of
            // the projected parametrization, clamped against projection
            // breakdowns (e.g. at a level-set kink).
            let dt = 1e-3;
            let tp = (t + dt).min(1.0);
            let tm = (t - dt).max(0.0);
            let jac_raw = project(tp).dist(&project(tm)) / (tp - tm);
            let jac = jac_raw.clamp(0.2 * len, 5.0 * len);
            points.push(pos);
            weights.push(0.5 * wts[k] * jac);
        }
    }
    QuadratureRule {
        points,
        weights,
        target: QuadTarget::InterfaceSegment,
    }
}

fn dedup_loop(points: Vec<Point2>, tol: f64) -> Vec<Point2> {
    let mut out: Vec<Point2> = Vec::with_capacity(points.len());
    for p in points {
        if out.last().map(|q| q.dist(&p) > tol).unwrap_or(true) {
            out.push(p);
        }
    }
    while out.len() > 1 && out[0].dist(out.last().unwrap()) <= tol {
        out.pop();
    }
    out
}

/// Picks the pure side-`side` cell in Delta(K) whose barycenter is
/// nearest to x_K; ties break toward the lowest cell index.
fn select_anchor(
    mesh: &PolygonalMesh,
    cell_class: &[CellClass],
    cell: usize,
    side: usize,
) -> Result<usize> {
    let want = if side == SIDE_OUTER {
        CellClass::Pure0
    } else {
        CellClass::Pure1
    };
    let xk = mesh.cell_barycenter[cell];
    let mut best: Option<(f64, usize)> = None;
    for &nbr in &mesh.node_adjacency[cell] {
        if cell_class[nbr] != want {
            continue;
        }
        let d = mesh.cell_barycenter[nbr].dist(&xk);
        let better = match best {
            None => true,
            Some((bd, bi)) => d < bd - 1e-15 * mesh.h_max() || ((d - bd).abs() <= 1e-15 * mesh.h_max() && nbr < bi),
        };
        if better {
            best = Some((d, nbr));
        }
    }
    if let Some((_, i)) = best {
        return Ok(i);
    }

    // No uncut neighbour shares a node with K (can happen on coarse
    // unstructured meshes where whole clusters of cells are cut).
    // Widen the search ring by ring over node adjacency; the nearest
    // uncut cell in the first ring that has one wins, ties to the
    // lowest index. Reported as an assumption violation separately by
    // `verify_assumptions`.
    let mut visited = vec![false; mesh.n_cells()];
    visited[cell] = true;
    let mut ring: Vec<usize> = mesh.node_adjacency[cell].clone();
    for &c in &ring {
        visited[c] = true;
    }
    while !ring.is_empty() {
        let mut next = Vec::new();
        for &c in &ring {
            for &nbr in &mesh.node_adjacency[c] {
                if !visited[nbr] {
                    visited[nbr] = true;
                    next.push(nbr);
                }
            }
        }
        let mut best: Option<(f64, usize)> = None;
        for &c in &next {
            if cell_class[c] != want {
                continue;
            }
            let d = mesh.cell_barycenter[c].dist(&xk);
            let better = match best {
                None => true,
                Some((bd, bi)) => {
                    d < bd - 1e-15 * mesh.h_max()
                        || ((d - bd).abs() <= 1e-15 * mesh.h_max() && c < bi)
                }
            };
            if better {
                best = Some((d, c));
            }
        }
        if let Some((_, i)) = best {
            return Ok(i);
        }
        ring = next;
    }
    Err(PrdgError::AssumptionViolated {
        assumption: 2,
        cell,
        message: format!("no uncut side-{side} cell reachable from K"),
    })
}

/// Re-checks Assumptions 1 and 2 on a classified topology, returning all
/// violations found (an empty list on a valid configuration).
pub fn verify_assumptions(
    mesh: &PolygonalMesh,
    phi: &LevelSet,
    topology: &CutTopology,
) -> Vec<AssumptionViolation> {
    let mut violations = Vec::new();
    let h = mesh.h_max();
    let snap_tol = 1e-12 * h;
    for (&cell, geomdata) in &topology.cut_cells {
        // Boundary must be crossed exactly twice; each open face at most
        // once. Sample each face finely to catch double crossings that
        // node signs cannot see.
        for &fi in &mesh.cell_faces[cell] {
            let face = &mesh.faces[fi];
            let a = mesh.nodes[face.nodes[0]];
            let b = mesh.nodes[face.nodes[1]];
            let samples = 17;
            let mut crossings = 0;
            let mut prev = snap_sign(phi.eval(&a), snap_tol);
            for k in 1..=samples {
                let t = k as f64 / samples as f64;
                let s = snap_sign(phi.eval(&a.lerp(&b, t)), snap_tol);
                if s != 0 && prev != 0 && s != prev {
                    crossings += 1;
                }
                if s != 0 {
                    prev = s;
                }
            }
            if crossings > 1 {
                violations.push(AssumptionViolation {
                    assumption: 1,
                    cell,
                    message: format!("face {fi} is crossed {crossings} times"),
                });
            }
        }
        // Tangency within tolerance: a polyline endpoint lying on a face
        // whose both endpoints sit on the interface.
        for &fi in &mesh.cell_faces[cell] {
            let face = &mesh.faces[fi];
            let fa = phi.eval(&mesh.nodes[face.nodes[0]]);
            let fb = phi.eval(&mesh.nodes[face.nodes[1]]);
            if fa.abs() <= snap_tol && fb.abs() <= snap_tol {
                violations.push(AssumptionViolation {
                    assumption: 1,
                    cell,
                    message: format!("face {fi} is tangent to the interface within tolerance"),
                });
            }
        }
        // Anchors must be pure cells of the right side in Delta(K).
        for side in [SIDE_OUTER, SIDE_INNER] {
            let anchor = geomdata.anchor[side];
            let ok_class = topology.cell_class[anchor]
                == if side == SIDE_OUTER {
                    CellClass::Pure0
                } else {
                    CellClass::Pure1
                };
            let in_delta = mesh.node_adjacency[cell].contains(&anchor);
            if !ok_class {
                violations.push(AssumptionViolation {
                    assumption: 2,
                    cell,
                    message: format!("anchor {anchor} is not a pure side-{side} cell"),
                });
            } else if !in_delta {
                // The fallback search widened beyond Delta(K); accuracy
                // degrades but the run can proceed.
                violations.push(AssumptionViolation {
                    assumption: 2,
                    cell,
                    message: format!("anchor {anchor} for side {side} lies outside Delta(K)"),
                });
            }
        }
    }
    violations
}
