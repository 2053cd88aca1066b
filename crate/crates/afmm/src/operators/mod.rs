//! Tensor-product Chebyshev expansion operators.
//!
//! Every occupied cell can carry two length-`r^dim` coefficient vectors
//! over its tensor Chebyshev grid: *source weights* (an equivalent-charge
//! representation of the points below it, built by [`apply_p2m`] and merged
//! upward with transfer matrices) and a *local expansion* (incoming field
//! samples, pushed downward and read out by [`apply_l2p`]).
//!
//! Transfer matrices between nested cells are interpolation operators, so
//! moving weights up uses the transpose of the matrix that moves local
//! expansions down, and hopping several levels at once equals chaining
//! single-level hops (interpolation reproduces polynomials of degree below
//! `r` exactly). Cross-cell transfer matrices sample the kernel between two
//! grids; they depend only on level and integer cell offset, and for
//! homogeneous kernels a single unit-scale matrix per offset serves every
//! level. Kernels are assumed translation-invariant.
//!
//! Cell geometry entering these operators is derived from exact integer
//! anchors (see [`crate::tree::geometry`]), so transfer matrices stay
//! accurate at depths where subtracting physical coordinates would cancel.

pub mod chebyshev;

use crate::kernel::Kernel;
use crate::tree::geometry::Cell;
use crate::{Error, Mat, Result};
use std::collections::HashMap;

/// Smallest supported expansion order.
pub const MIN_ORDER: usize = 2;
/// Largest supported expansion order (dense transfer matrices grow as
/// `r^(2 dim)`).
pub const MAX_ORDER: usize = 12;

/// A tensor-product Chebyshev grid of order `r` in `dim` axes.
#[derive(Debug, Clone)]
pub struct ChebyshevGrid {
    pub r: usize,
    pub dim: usize,
    /// Reference nodes on `[-1, 1]`.
    nodes1: Vec<f64>,
    /// `T_k` evaluated at each reference node (row per node).
    node_t: Vec<Vec<f64>>,
}

impl ChebyshevGrid {
    pub fn new(r: usize, dim: usize) -> Result<Self> {
        if !(MIN_ORDER..=MAX_ORDER).contains(&r) {
            return Err(Error::Parameter(format!(
                "expansion order must lie in {MIN_ORDER}..={MAX_ORDER} (got {r})"
            )));
        }
        if !(1..=3).contains(&dim) {
            return Err(Error::Parameter(format!("dimension must be 1, 2 or 3 (got {dim})")));
        }
        let nodes1 = chebyshev::nodes(r);
        let node_t = nodes1.iter().map(|&n| chebyshev::chebyshev_row(n, r)).collect();
        Ok(ChebyshevGrid { r, dim, nodes1, node_t })
    }

    /// Number of tensor grid points, `r^dim`.
    pub fn size(&self) -> usize {
        self.r.pow(self.dim as u32)
    }

    /// Physical grid points of a cell, axis 0 varying fastest. Inactive
    /// axes are pinned to zero, where the point data lives.
    pub fn node_points(&self, anchor: &[f64; 3], edge: f64) -> Vec<[f64; 3]> {
        let r = self.r;
        let coord = |axis: usize, m: usize| -> f64 {
            anchor[axis] + 0.5 * edge * (1.0 + self.nodes1[m])
        };
        let (n1, n2) = match self.dim {
            1 => (1, 1),
            2 => (r, 1),
            _ => (r, r),
        };
        let mut pts = Vec::with_capacity(self.size());
        for m2 in 0..n2 {
            for m1 in 0..n1 {
                for m0 in 0..r {
                    pts.push([
                        coord(0, m0),
                        if self.dim >= 2 { coord(1, m1) } else { 0.0 },
                        if self.dim >= 3 { coord(2, m2) } else { 0.0 },
                    ]);
                }
            }
        }
        pts
    }

    /// Interpolation weights of one reference coordinate against the nodes.
    fn axis_weights(&self, xi: f64) -> Vec<f64> {
        let r = self.r;
        let tx = chebyshev::chebyshev_row(xi, r);
        (0..r)
            .map(|j| {
                let tn = &self.node_t[j];
                let mut s = 1.0;
                for k in 1..r {
                    s += 2.0 * tx[k] * tn[k];
                }
                s / r as f64
            })
            .collect()
    }

    /// Tensor interpolation weights of a physical point within a cell,
    /// written to `out` (length `size()`).
    pub fn point_weights(&self, p: &[f64; 3], anchor: &[f64; 3], edge: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.size());
        let unit = vec![1.0];
        let mut per_axis: [&Vec<f64>; 3] = [&unit, &unit, &unit];
        let mut computed: Vec<Vec<f64>> = Vec::with_capacity(self.dim);
        for a in 0..self.dim {
            let xi = chebyshev::to_reference(p[a], anchor[a], anchor[a] + edge);
            computed.push(self.axis_weights(xi));
        }
        for a in 0..self.dim {
            per_axis[a] = &computed[a];
        }
        let mut idx = 0;
        for w2 in per_axis[2] {
            for w1 in per_axis[1] {
                let w12 = w1 * w2;
                for w0 in per_axis[0] {
                    out[idx] = w0 * w12;
                    idx += 1;
                }
            }
        }
    }

    /// Reference coordinates of the grid nodes of `desc` inside the cell of
    /// `anc`, one list per axis, computed from integer anchors.
    fn relative_axis_targets(&self, desc: &Cell, anc: &Cell) -> Vec<Vec<f64>> {
        assert!(desc.depth > anc.depth);
        let s = desc.depth - anc.depth;
        let scale = (-(s as f64)).exp2();
        (0..self.dim)
            .map(|a| {
                // Exact integer midpoint offset of the descendant cell
                // within the ancestor cell, in descendant half-edges.
                let q = (2 * desc.index[a] as i128 + 1) - ((2 * anc.index[a] as i128 + 1) << s);
                let qf = q as f64;
                self.nodes1.iter().map(|&n| (qf + n) * scale).collect()
            })
            .collect()
    }

    /// Dense transfer matrix between the grids of a descendant cell and one
    /// of its ancestors: row `i`, column `m` holds the interpolation weight
    /// of ancestor node `m` at descendant node `i`. Moving local expansions
    /// down multiplies by it; merging source weights up multiplies by its
    /// transpose.
    pub fn path_matrix(&self, desc: &Cell, anc: &Cell) -> Mat {
        let axes = self.relative_axis_targets(desc, anc);
        let per_axis: Vec<Mat> = axes
            .iter()
            .map(|t| chebyshev::interp_matrix(t, self.r))
            .collect();
        let n = self.size();
        let r = self.r;
        let mut m = Mat::zeros(n, n);
        for row in 0..n {
            let (i0, i1, i2) = (row % r, (row / r) % r, row / (r * r));
            for col in 0..n {
                let (m0, m1, m2) = (col % r, (col / r) % r, col / (r * r));
                let mut v = per_axis[0].get(i0, m0);
                if self.dim >= 2 {
                    v *= per_axis[1].get(i1, m1);
                }
                if self.dim >= 3 {
                    v *= per_axis[2].get(i2, m2);
                }
                m.set(row, col, v);
            }
        }
        m
    }
}

/// Precomputed transfer matrices shared across a whole evaluation.
pub struct OperatorCache {
    pub grid: ChebyshevGrid,
    /// Child-to-parent transfers per child octant (level-independent).
    child: Vec<Mat>,
    /// Cross-transfer matrices per (level, offset).
    m2l: HashMap<(u32, [i8; 3]), Mat>,
    /// Unit-scale cross-transfer matrices per offset (homogeneous path).
    m2l_unit: HashMap<[i8; 3], Mat>,
    /// Reuse one unit-scale matrix per offset across levels, rescaling by
    /// the kernel's homogeneity degree.
    pub fast_scaling: bool,
}

impl OperatorCache {
    pub fn new(r: usize, dim: usize, fast_scaling: bool) -> Result<Self> {
        let grid = ChebyshevGrid::new(r, dim)?;
        let parent = Cell { depth: 0, index: [0, 0, 0], dim };
        let mut child = Vec::with_capacity(1 << dim);
        for octant in 0..1u32 << dim {
            let mut index = [0u128; 3];
            for a in 0..dim {
                index[a] = ((octant >> a) & 1) as u128;
            }
            let c = Cell { depth: 1, index, dim };
            child.push(grid.path_matrix(&c, &parent));
        }
        Ok(OperatorCache {
            grid,
            child,
            m2l: HashMap::new(),
            m2l_unit: HashMap::new(),
            fast_scaling,
        })
    }

    /// Transfer matrix for a child in the given octant of its parent.
    pub fn child_matrix(&self, octant: usize) -> &Mat {
        &self.child[octant]
    }

    fn build_m2l<K: Kernel>(grid: &ChebyshevGrid, kernel: &K, edge: f64, off: [i8; 3]) -> Mat {
        let target_anchor = [0.0; 3];
        let mut source_anchor = [0.0; 3];
        for a in 0..grid.dim {
            source_anchor[a] = off[a] as f64 * edge;
        }
        let targets = grid.node_points(&target_anchor, edge);
        let sources = grid.node_points(&source_anchor, edge);
        let n = grid.size();
        let mut m = Mat::zeros(n, n);
        for (i, x) in targets.iter().enumerate() {
            for (j, y) in sources.iter().enumerate() {
                m.set(i, j, kernel.evaluate(x, y));
            }
        }
        m
    }

    /// Accumulate `out += K_transfer(level, off) * w`, building and caching
    /// the matrix on first use.
    pub fn m2l_apply<K: Kernel>(
        &mut self,
        kernel: &K,
        level: u32,
        off: [i8; 3],
        w: &[f64],
        out: &mut [f64],
    ) {
        if self.fast_scaling {
            if let Some(m) = kernel.homogeneity() {
                let mat = self
                    .m2l_unit
                    .entry(off)
                    .or_insert_with(|| Self::build_m2l(&self.grid, kernel, 1.0, off));
                // Cells of edge 2^-level scale the unit geometry by
                // 2^-level, hence the kernel by 2^(-level * m).
                let scale = (-(level as f64) * m).exp2();
                mat.matvec_add_scaled(scale, w, out);
                return;
            }
        }
        let edge = (-(level as f64)).exp2();
        let mat = self
            .m2l
            .entry((level, off))
            .or_insert_with(|| Self::build_m2l(&self.grid, kernel, edge, off));
        mat.matvec_add(w, out);
    }

    /// Number of distinct cached cross-transfer matrices.
    pub fn cached_m2l(&self) -> usize {
        self.m2l.len() + self.m2l_unit.len()
    }
}

/// Scatter particle charges onto a cell's grid: `w[m] += q * weight_m(p)`.
pub fn apply_p2m(
    grid: &ChebyshevGrid,
    anchor: &[f64; 3],
    edge: f64,
    positions: &[[f64; 3]],
    intensities: &[f64],
    w: &mut [f64],
    scratch: &mut Vec<f64>,
) {
    scratch.resize(grid.size(), 0.0);
    for (p, &q) in positions.iter().zip(intensities) {
        grid.point_weights(p, anchor, edge, scratch);
        for (wm, &s) in w.iter_mut().zip(scratch.iter()) {
            *wm += q * s;
        }
    }
}

/// Read a local expansion at particle positions: `phi_i += weights(p_i) . l`.
pub fn apply_l2p(
    grid: &ChebyshevGrid,
    anchor: &[f64; 3],
    edge: f64,
    positions: &[[f64; 3]],
    local: &[f64],
    phi: &mut [f64],
    scratch: &mut Vec<f64>,
) {
    scratch.resize(grid.size(), 0.0);
    for (p, out) in positions.iter().zip(phi.iter_mut()) {
        grid.point_weights(p, anchor, edge, scratch);
        let mut acc = 0.0;
        for (&s, &l) in scratch.iter().zip(local) {
            acc += s * l;
        }
        *out += acc;
    }
}

/// Gather distant particles straight into a cell's local expansion:
/// `l[m] += sum_s q_s K(node_m, x_s)`.
pub fn apply_p2l<K: Kernel>(
    grid: &ChebyshevGrid,
    kernel: &K,
    anchor: &[f64; 3],
    edge: f64,
    positions: &[[f64; 3]],
    intensities: &[f64],
    local: &mut [f64],
) {
    let nodes = grid.node_points(anchor, edge);
    for (node, l) in nodes.iter().zip(local.iter_mut()) {
        let mut acc = 0.0;
        for (p, &q) in positions.iter().zip(intensities) {
            acc += q * kernel.evaluate(node, p);
        }
        *l += acc;
    }
}

/// Evaluate a cell's source weights at distant particle positions:
/// `phi_i += sum_m K(x_i, node_m) w[m]`.
pub fn apply_m2p<K: Kernel>(
    grid: &ChebyshevGrid,
    kernel: &K,
    anchor: &[f64; 3],
    edge: f64,
    w: &[f64],
    positions: &[[f64; 3]],
    phi: &mut [f64],
) {
    let nodes = grid.node_points(anchor, edge);
    for (p, out) in positions.iter().zip(phi.iter_mut()) {
        let mut acc = 0.0;
        for (node, &wm) in nodes.iter().zip(w) {
            acc += wm * kernel.evaluate(p, node);
        }
        *out += acc;
    }
}

/// Direct pairwise accumulation `phi_i += sum_s q_s K(x_i, y_s)`.
pub fn apply_p2p<K: Kernel>(
    kernel: &K,
    targets: &[[f64; 3]],
    sources: &[[f64; 3]],
    intensities: &[f64],
    phi: &mut [f64],
) {
    for (x, out) in targets.iter().zip(phi.iter_mut()) {
        let mut acc = 0.0;
        for (y, &q) in sources.iter().zip(intensities) {
            acc += q * kernel.evaluate(x, y);
        }
        *out += acc;
    }
}
