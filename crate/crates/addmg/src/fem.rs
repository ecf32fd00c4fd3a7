//! Q1 finite element assembly on a structured unit-square grid:
//! heterogeneous diagonal diffusion, mixed Dirichlet/Neumann boundaries,
//! and rasterization of thin equidimensional fractures.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Structured grid of `nx x ny` quadrilateral elements on (0,1)^2.
/// Node `(i, j)` has index `j * (nx + 1) + i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructuredGrid {
    pub nx: usize,
    pub ny: usize,
}

impl StructuredGrid {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument("grid needs nx >= 1 and ny >= 1".into()));
        }
        Ok(StructuredGrid { nx, ny })
    }

    pub fn hx(&self) -> f64 {
        1.0 / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        1.0 / self.ny as f64
    }

    pub fn n_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn n_elements(&self) -> usize {
        self.nx * self.ny
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn node_coords(&self, idx: usize) -> (usize, usize) {
        (idx % (self.nx + 1), idx / (self.nx + 1))
    }

    pub fn node_position(&self, idx: usize) -> (f64, f64) {
        let (i, j) = self.node_coords(idx);
        (i as f64 * self.hx(), j as f64 * self.hy())
    }

    /// Counterclockwise corner nodes of element `(ex, ey)`.
    pub fn element_nodes(&self, ex: usize, ey: usize) -> [usize; 4] {
        [
            self.node_index(ex, ey),
            self.node_index(ex + 1, ey),
            self.node_index(ex + 1, ey + 1),
            self.node_index(ex, ey + 1),
        ]
    }

    pub fn element_center(&self, ex: usize, ey: usize) -> (f64, f64) {
        (
            (ex as f64 + 0.5) * self.hx(),
            (ey as f64 + 0.5) * self.hy(),
        )
    }
}

/// Per-element diagonal diffusion tensor entries.
#[derive(Debug, Clone)]
pub struct DiffusionField {
    pub kxx: Vec<f64>,
    pub kyy: Vec<f64>,
}

impl DiffusionField {
    pub fn constant(grid: &StructuredGrid, kxx: f64, kyy: f64) -> Result<Self> {
        if kxx <= 0.0 || kyy <= 0.0 {
            return Err(Error::InvalidArgument("diffusion entries must be positive".into()));
        }
        Ok(DiffusionField {
            kxx: vec![kxx; grid.n_elements()],
            kyy: vec![kyy; grid.n_elements()],
        })
    }

    pub fn validate(&self, grid: &StructuredGrid) -> Result<()> {
        if self.kxx.len() != grid.n_elements() || self.kyy.len() != grid.n_elements() {
            return Err(Error::DimensionMismatch("diffusion field not sized to grid".into()));
        }
        if self.kxx.iter().chain(&self.kyy).any(|&k| k <= 0.0) {
            return Err(Error::InvalidArgument("diffusion entries must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeCondition {
    Dirichlet(f64),
    Neumann(f64),
}

/// Boundary conditions on the four sides of the unit square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySpec {
    pub left: EdgeCondition,
    pub right: EdgeCondition,
    pub bottom: EdgeCondition,
    pub top: EdgeCondition,
}

impl BoundarySpec {
    pub fn all_dirichlet(value: f64) -> Self {
        let d = EdgeCondition::Dirichlet(value);
        BoundarySpec { left: d, right: d, bottom: d, top: d }
    }

    pub fn has_dirichlet(&self) -> bool {
        [self.left, self.right, self.bottom, self.top]
            .iter()
            .any(|c| matches!(c, EdgeCondition::Dirichlet(_)))
    }
}

/// Fracture network: line segments of uniform thickness `delta`, with
/// fracture permeability `k_f` inside and matrix permeability `k_m` outside.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FractureNetwork {
    pub k_m: f64,
    pub k_f: f64,
    pub delta: f64,
    pub segments: Vec<[f64; 4]>,
}

impl FractureNetwork {
    pub fn validate(&self) -> Result<()> {
        if self.k_m <= 0.0 || self.k_f <= 0.0 || self.delta <= 0.0 {
            return Err(Error::InvalidArgument(
                "fracture network needs k_m, k_f, delta > 0".into(),
            ));
        }
        for s in &self.segments {
            if s.iter().any(|&c| !(0.0..=1.0).contains(&c)) {
                return Err(Error::InvalidArgument(format!(
                    "segment {s:?} has endpoints outside [0,1]^2"
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let net: FractureNetwork =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        net.validate()?;
        Ok(net)
    }
}

/// Exact Q1 stiffness matrix for one `hx x hy` element with constant
/// diagonal diffusion, 2x2 Gauss quadrature (exact for this integrand).
/// Node ordering is counterclockwise from the lower-left corner.
pub fn element_stiffness(kxx: f64, kyy: f64, hx: f64, hy: f64) -> Result<[[f64; 4]; 4]> {
    if kxx <= 0.0 || kyy <= 0.0 || hx <= 0.0 || hy <= 0.0 {
        return Err(Error::InvalidArgument("element_stiffness: inputs must be positive".into()));
    }
    // reference square [-1,1]^2
    const CORNERS: [(f64, f64); 4] = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
    let g = 1.0 / 3.0f64.sqrt();
    let qpoints = [(-g, -g), (g, -g), (g, g), (-g, g)];
    let jac = hx * hy / 4.0;

    let mut ke = [[0.0; 4]; 4];
    for &(xi, eta) in &qpoints {
        let mut dx = [0.0; 4];
        let mut dy = [0.0; 4];
        for a in 0..4 {
            let (xa, ea) = CORNERS[a];
            dx[a] = 0.25 * xa * (1.0 + ea * eta) * 2.0 / hx;
            dy[a] = 0.25 * ea * (1.0 + xa * xi) * 2.0 / hy;
        }
        for a in 0..4 {
            for b in 0..4 {
                ke[a][b] += jac * (kxx * dx[a] * dx[b] + kyy * dy[a] * dy[b]);
            }
        }
    }
    Ok(ke)
}

/// Assembles `A x = b` with explicit per-node Dirichlet values and an
/// already-populated load vector. Dirichlet DoFs are eliminated
/// symmetrically: couplings move to the right-hand side, the row and column
/// are cleared, and the diagonal is set to one.
pub fn assemble_general(
    grid: &StructuredGrid,
    field: &DiffusionField,
    dirichlet: &HashMap<usize, f64>,
    mut b: Vec<f64>,
) -> Result<(CsrMatrix, Vec<f64>)> {
    field.validate(grid)?;
    if dirichlet.is_empty() {
        return Err(Error::SingularSystem(
            "all-Neumann boundary: constants are in the kernel".into(),
        ));
    }
    if b.len() != grid.n_nodes() {
        return Err(Error::DimensionMismatch("load vector not sized to grid".into()));
    }

    let (hx, hy) = (grid.hx(), grid.hy());
    let mut triplets = Vec::with_capacity(grid.n_elements() * 16);
    for ey in 0..grid.ny {
        for ex in 0..grid.nx {
            let e = ey * grid.nx + ex;
            let ke = element_stiffness(field.kxx[e], field.kyy[e], hx, hy)?;
            let nodes = grid.element_nodes(ex, ey);
            for a in 0..4 {
                for c in 0..4 {
                    triplets.push((nodes[a], nodes[c], ke[a][c]));
                }
            }
        }
    }

    // symmetric Dirichlet elimination at triplet level
    let mut kept = Vec::with_capacity(triplets.len());
    for (i, j, v) in triplets {
        match (dirichlet.contains_key(&i), dirichlet.contains_key(&j)) {
            (false, false) => kept.push((i, j, v)),
            (false, true) => b[i] -= v * dirichlet[&j],
            _ => {}
        }
    }
    for (&d, &val) in dirichlet {
        kept.push((d, d, 1.0));
        b[d] = val;
    }

    let mut a = CsrMatrix::from_triplets(grid.n_nodes(), grid.n_nodes(), &kept)?;
    a.set_symmetric_flag(true);
    Ok((a, b))
}

/// Nodes fixed by the per-edge boundary spec, with their Dirichlet values.
pub fn dirichlet_nodes(grid: &StructuredGrid, bc: &BoundarySpec) -> HashMap<usize, f64> {
    let mut out = HashMap::new();
    let mut fix_side = |cond: EdgeCondition, nodes: Vec<usize>| {
        if let EdgeCondition::Dirichlet(v) = cond {
            for n in nodes {
                out.insert(n, v);
            }
        }
    };
    fix_side(bc.bottom, (0..=grid.nx).map(|i| grid.node_index(i, 0)).collect());
    fix_side(bc.top, (0..=grid.nx).map(|i| grid.node_index(i, grid.ny)).collect());
    fix_side(bc.left, (0..=grid.ny).map(|j| grid.node_index(0, j)).collect());
    fix_side(bc.right, (0..=grid.ny).map(|j| grid.node_index(grid.nx, j)).collect());
    out
}

/// Assembles the system for per-edge boundary conditions and a per-element
/// constant source. Neumann fluxes enter the load vector by edge-wise
/// trapezoidal integration.
pub fn assemble(
    grid: &StructuredGrid,
    field: &DiffusionField,
    bc: &BoundarySpec,
    source_per_element: &[f64],
) -> Result<(CsrMatrix, Vec<f64>)> {
    if source_per_element.len() != grid.n_elements() {
        return Err(Error::DimensionMismatch("source not sized to grid".into()));
    }
    if !bc.has_dirichlet() {
        return Err(Error::SingularSystem(
            "all-Neumann boundary: constants are in the kernel".into(),
        ));
    }

    let mut b = vec![0.0; grid.n_nodes()];
    let cell = grid.hx() * grid.hy();
    for ey in 0..grid.ny {
        for ex in 0..grid.nx {
            let f = source_per_element[ey * grid.nx + ex];
            // constant source over a Q1 element loads each corner equally
            for n in grid.element_nodes(ex, ey) {
                b[n] += f * cell / 4.0;
            }
        }
    }

    let mut add_neumann = |cond: EdgeCondition, nodes: Vec<usize>, h: f64| {
        if let EdgeCondition::Neumann(g) = cond {
            for w in nodes.windows(2) {
                b[w[0]] += g * h / 2.0;
                b[w[1]] += g * h / 2.0;
            }
        }
    };
    add_neumann(bc.bottom, (0..=grid.nx).map(|i| grid.node_index(i, 0)).collect(), grid.hx());
    add_neumann(bc.top, (0..=grid.nx).map(|i| grid.node_index(i, grid.ny)).collect(), grid.hx());
    add_neumann(bc.left, (0..=grid.ny).map(|j| grid.node_index(0, j)).collect(), grid.hy());
    add_neumann(bc.right, (0..=grid.ny).map(|j| grid.node_index(grid.nx, j)).collect(), grid.hy());

    let dirichlet = dirichlet_nodes(grid, bc);
    assemble_general(grid, field, &dirichlet, b)
}

/// Marks every element whose center lies within `delta/2` of a fracture
/// segment as fracture material (isotropic `k_f`), the rest as matrix
/// material (`k_m`).
pub fn rasterize_fractures(grid: &StructuredGrid, net: &FractureNetwork) -> Result<DiffusionField> {
    net.validate()?;
    let mut field = DiffusionField::constant(grid, net.k_m, net.k_m)?;
    for ey in 0..grid.ny {
        for ex in 0..grid.nx {
            let (cx, cy) = grid.element_center(ex, ey);
            let inside = net
                .segments
                .iter()
                .any(|s| point_segment_distance(cx, cy, s) <= net.delta / 2.0);
            if inside {
                let e = ey * grid.nx + ex;
                field.kxx[e] = net.k_f;
                field.kyy[e] = net.k_f;
            }
        }
    }
    Ok(field)
}

fn point_segment_distance(px: f64, py: f64, seg: &[f64; 4]) -> f64 {
    let (x1, y1, x2, y2) = (seg[0], seg[1], seg[2], seg[3]);
    let (dx, dy) = (x2 - x1, y2 - y1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((px - x1) * dx + (py - y1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (x1 + t * dx, y1 + t * dy);
    ((px - qx).powi(2) + (py - qy).powi(2)).sqrt()
}
