//! End-to-end field evaluation over an adaptive tree.
//!
//! [`run_fmm`] performs the classic sequence — charge aggregation upward,
//! cross-cell transfers, local-expansion pushdown, near-field direct sums —
//! with one structural twist: in the default *compressed* mode, singleton
//! nodes (one occupied child) carry no expansions at all. Their subtree's
//! weights live at the first non-singleton descendant, upward and downward
//! translations hop whole singleton chains in one multi-level transfer, and
//! cross-cell pairs that end on a singleton lazily materialize (or later
//! redistribute) the expansion through the same exact interpolation
//! relations. Because chained single-level transfers already compose
//! exactly (polynomial reproduction), compressed and uncompressed modes
//! agree to floating-point roundoff while the compressed translation count
//! stays proportional to the number of leaves, not the number of levels.
//!
//! All loops run in a fixed order determined by node ids, so repeated runs
//! on the same tree produce identical bits.

use crate::kernel::Kernel;
use crate::operators::{
    apply_l2p, apply_m2p, apply_p2l, apply_p2m, apply_p2p, OperatorCache,
};
use crate::tree::lists::build_interaction_lists;
use crate::tree::{NodeKind, Tree};
use crate::{Error, Result};
use std::time::Instant;

/// Refuse direct reference summations beyond this many points.
pub const DIRECT_SUM_CAP: usize = 20_000;

/// Evaluation parameters.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Expansion order per axis.
    pub order: usize,
    /// Skip expansions on singleton nodes (the compressed translation
    /// scheme). Turning this off runs the textbook per-level pipeline.
    pub modified: bool,
    /// Reuse one cross-transfer matrix per offset across levels when the
    /// kernel is homogeneous.
    pub fast_scaling: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { order: 4, modified: true, fast_scaling: false }
    }
}

/// How many times each operator ran, with the particle workloads that set
/// their cost.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct OperationCounts {
    /// Particles scattered onto leaf grids.
    pub p2m_particles: u64,
    /// Upward grid-to-grid merges.
    pub m2m_pairs: u64,
    /// Cross transfers between separated equal-depth cells.
    pub m2l_pairs: u64,
    /// Singleton source weights materialized on demand.
    pub m2l_fold_ups: u64,
    /// Singleton local expansions redistributed downward.
    pub m2l_fold_downs: u64,
    /// Distant-leaf gathers into local expansions.
    pub p2l_pairs: u64,
    /// Total source particles over all such gathers.
    pub p2l_source_particles: u64,
    /// Downward grid-to-grid pushes.
    pub l2l_pairs: u64,
    /// Particles reading their leaf's local expansion.
    pub l2p_particles: u64,
    /// Deep-source evaluations at leaf particles.
    pub m2p_pairs: u64,
    /// Total target particles over all such evaluations.
    pub m2p_target_particles: u64,
    /// Direct near-field leaf pairs (directed, including self).
    pub p2p_pairs: u64,
    /// Kernel evaluations inside those direct pairs.
    pub p2p_kernel_evals: u64,
}

impl OperationCounts {
    /// Total translation pairs in the up/down passes.
    pub fn translation_pairs(&self) -> u64 {
        self.m2m_pairs + self.l2l_pairs
    }
}

/// Result of one evaluation.
#[derive(Debug, Clone)]
pub struct FmmResult {
    /// Potentials in the order of the point set the tree was built from.
    pub potentials: Vec<f64>,
    pub counts: OperationCounts,
    pub wall_seconds: f64,
    pub order: usize,
    pub modified: bool,
}

struct Workspace<'t> {
    tree: &'t Tree,
    cache: OperatorCache,
    w: Vec<Option<Vec<f64>>>,
    local: Vec<Option<Vec<f64>>>,
    phi: Vec<f64>,
    counts: OperationCounts,
    modified: bool,
    scratch: Vec<f64>,
}

impl Workspace<'_> {
    fn size(&self) -> usize {
        self.cache.grid.size()
    }

    fn is_singleton(&self, id: u32) -> bool {
        matches!(self.tree.nodes[id as usize].kind, NodeKind::Singleton)
    }

    fn octant(&self, id: u32) -> usize {
        let n = &self.tree.nodes[id as usize];
        let mut o = 0usize;
        for a in 0..self.tree.config.dim {
            o |= ((n.index[a] & 1) as usize) << a;
        }
        o
    }

    /// Transfer matrix from a node's grid to an ancestor's grid, using the
    /// precomputed single-level matrices when possible.
    fn up_transfer(&mut self, id: u32, anc: u32, w_src: &[f64], w_dst: &mut [f64]) {
        let dim = self.tree.config.dim;
        let gap = self.tree.nodes[id as usize].depth - self.tree.nodes[anc as usize].depth;
        if gap == 1 {
            self.cache.child_matrix(self.octant(id)).tr_matvec_add(w_src, w_dst);
        } else {
            let m = self.cache.grid.path_matrix(
                &self.tree.nodes[id as usize].cell(dim),
                &self.tree.nodes[anc as usize].cell(dim),
            );
            m.tr_matvec_add(w_src, w_dst);
        }
    }

    fn down_transfer(&mut self, anc: u32, id: u32, l_src: &[f64], l_dst: &mut [f64]) {
        let dim = self.tree.config.dim;
        let gap = self.tree.nodes[id as usize].depth - self.tree.nodes[anc as usize].depth;
        if gap == 1 {
            self.cache.child_matrix(self.octant(id)).matvec_add(l_src, l_dst);
        } else {
            let m = self.cache.grid.path_matrix(
                &self.tree.nodes[id as usize].cell(dim),
                &self.tree.nodes[anc as usize].cell(dim),
            );
            m.matvec_add(l_src, l_dst);
        }
    }

    /// Source weights of `id`, materializing a singleton's on first use by
    /// pulling its effective carrier's weights up the chain.
    fn ensure_weights(&mut self, id: u32) {
        if self.w[id as usize].is_some() {
            return;
        }
        debug_assert!(self.modified && self.is_singleton(id));
        let eff = self.tree.effective[id as usize];
        let src = self.w[eff as usize].take().expect("carrier weights ready");
        let mut buf = vec![0.0; self.size()];
        self.up_transfer(eff, id, &src, &mut buf);
        self.w[eff as usize] = Some(src);
        self.w[id as usize] = Some(buf);
        self.counts.m2l_fold_ups += 1;
    }

    fn upward(&mut self) {
        let n = self.tree.nodes.len();
        // Leaf charges.
        for id in 0..n as u32 {
            let node = &self.tree.nodes[id as usize];
            if !node.is_leaf() {
                continue;
            }
            let mut w = vec![0.0; self.size()];
            apply_p2m(
                &self.cache.grid,
                &node.anchor(),
                node.edge(),
                self.tree.positions_in(id),
                self.tree.intensities_in(id),
                &mut w,
                &mut self.scratch,
            );
            self.counts.p2m_particles += node.num_points() as u64;
            self.w[id as usize] = Some(w);
        }
        // Merge upward, children before parents.
        if self.modified {
            for id in (0..n as u32).rev() {
                if !matches!(self.tree.nodes[id as usize].kind, NodeKind::Divided) {
                    continue;
                }
                let mut w = vec![0.0; self.size()];
                let children = self.tree.nodes[id as usize].divided_children.clone();
                for ch in children {
                    let src = self.w[ch as usize].take().expect("child weights ready");
                    self.up_transfer(ch, id, &src, &mut w);
                    self.w[ch as usize] = Some(src);
                    self.counts.m2m_pairs += 1;
                }
                self.w[id as usize] = Some(w);
            }
        } else {
            for id in (0..n as u32).rev() {
                let node = &self.tree.nodes[id as usize];
                if node.is_leaf() {
                    continue;
                }
                let mut w = vec![0.0; self.size()];
                let children = node.children.clone();
                for ch in children {
                    let src = self.w[ch as usize].take().expect("child weights ready");
                    self.up_transfer(ch, id, &src, &mut w);
                    self.w[ch as usize] = Some(src);
                    self.counts.m2m_pairs += 1;
                }
                self.w[id as usize] = Some(w);
            }
        }
    }
}

/// Evaluate potentials at every point of the tree's point set.
pub fn run_fmm<K: Kernel>(tree: &Tree, kernel: &K, options: &RunOptions) -> Result<FmmResult> {
    let start = Instant::now();
    let dim = tree.config.dim;
    let cache = OperatorCache::new(options.order, dim, options.fast_scaling)?;
    let n_nodes = tree.nodes.len();
    let n_points = tree.points.len();

    let mut ws = Workspace {
        tree,
        cache,
        w: vec![None; n_nodes],
        local: vec![None; n_nodes],
        phi: vec![0.0; n_points],
        counts: OperationCounts::default(),
        modified: options.modified,
        scratch: Vec::new(),
    };
    let size = ws.size();

    // Local expansions for every expansion-carrying node.
    for id in 0..n_nodes {
        if !options.modified || !matches!(tree.nodes[id].kind, NodeKind::Singleton) {
            ws.local[id] = Some(vec![0.0; size]);
        }
    }

    ws.upward();
    let lists = build_interaction_lists(tree);

    // Cross transfers between separated equal-depth cells.
    for id in 0..n_nodes as u32 {
        if lists.v[id as usize].is_empty() {
            continue;
        }
        let depth = tree.nodes[id as usize].depth;
        for &src in &lists.v[id as usize] {
            ws.ensure_weights(src);
            let src_w = ws.w[src as usize].take().expect("source weights ready");
            let mut local = ws
                .local[id as usize]
                .take()
                .unwrap_or_else(|| vec![0.0; size]);
            let mut off = [0i8; 3];
            for a in 0..dim {
                off[a] = (tree.nodes[src as usize].index[a] as i128
                    - tree.nodes[id as usize].index[a] as i128) as i8;
            }
            ws.cache.m2l_apply(kernel, depth, off, &src_w, &mut local);
            ws.counts.m2l_pairs += 1;
            ws.w[src as usize] = Some(src_w);
            ws.local[id as usize] = Some(local);
        }
    }

    // Distant leaves gathered straight into local expansions.
    for id in 0..n_nodes as u32 {
        if lists.x[id as usize].is_empty() {
            continue;
        }
        let node = &tree.nodes[id as usize];
        let mut local = ws
            .local[id as usize]
            .take()
            .unwrap_or_else(|| vec![0.0; size]);
        for &src in &lists.x[id as usize] {
            apply_p2l(
                &ws.cache.grid,
                kernel,
                &node.anchor(),
                node.edge(),
                tree.positions_in(src),
                tree.intensities_in(src),
                &mut local,
            );
            ws.counts.p2l_pairs += 1;
            ws.counts.p2l_source_particles += tree.nodes[src as usize].num_points() as u64;
        }
        ws.local[id as usize] = Some(local);
    }

    // Redistribute expansions accumulated on singletons to their carriers.
    if options.modified {
        for id in 0..n_nodes as u32 {
            if !ws.is_singleton(id) || ws.local[id as usize].is_none() {
                continue;
            }
            let eff = tree.effective[id as usize];
            let src = ws.local[id as usize].take().unwrap();
            let mut dst = ws.local[eff as usize].take().expect("carrier local ready");
            ws.down_transfer(id, eff, &src, &mut dst);
            ws.local[eff as usize] = Some(dst);
            ws.local[id as usize] = Some(src);
            ws.counts.m2l_fold_downs += 1;
        }
    }

    // Push local expansions down, parents before children.
    if options.modified {
        for id in 0..n_nodes as u32 {
            if !matches!(tree.nodes[id as usize].kind, NodeKind::Divided) {
                continue;
            }
            let src = ws.local[id as usize].take().expect("local ready");
            let children = tree.nodes[id as usize].divided_children.clone();
            for ch in children {
                let mut dst = ws.local[ch as usize].take().expect("child local ready");
                ws.down_transfer(id, ch, &src, &mut dst);
                ws.local[ch as usize] = Some(dst);
                ws.counts.l2l_pairs += 1;
            }
            ws.local[id as usize] = Some(src);
        }
    } else {
        for id in 0..n_nodes as u32 {
            let children = tree.nodes[id as usize].children.clone();
            let src = ws.local[id as usize].take().expect("local ready");
            for ch in children {
                let mut dst = ws.local[ch as usize].take().expect("child local ready");
                ws.down_transfer(id, ch, &src, &mut dst);
                ws.local[ch as usize] = Some(dst);
                ws.counts.l2l_pairs += 1;
            }
            ws.local[id as usize] = Some(src);
        }
    }

    // Deep separated sources evaluated directly at leaf particles.
    for id in 0..n_nodes as u32 {
        if lists.w[id as usize].is_empty() {
            continue;
        }
        let node = &tree.nodes[id as usize];
        let (lo, hi) = (node.point_start, node.point_end);
        for &src in &lists.w[id as usize] {
            ws.ensure_weights(src);
            let src_w = ws.w[src as usize].take().expect("source weights ready");
            let sn = &tree.nodes[src as usize];
            apply_m2p(
                &ws.cache.grid,
                kernel,
                &sn.anchor(),
                sn.edge(),
                &src_w,
                &tree.points.positions[lo..hi],
                &mut ws.phi[lo..hi],
            );
            ws.w[src as usize] = Some(src_w);
            ws.counts.m2p_pairs += 1;
            ws.counts.m2p_target_particles += (hi - lo) as u64;
        }
    }

    // Near-field direct interactions.
    for id in 0..n_nodes as u32 {
        let node = &tree.nodes[id as usize];
        if !node.is_leaf() {
            continue;
        }
        let (lo, hi) = (node.point_start, node.point_end);
        for &src in &lists.u[id as usize] {
            let sn = &tree.nodes[src as usize];
            apply_p2p(
                kernel,
                &tree.points.positions[lo..hi],
                &tree.points.positions[sn.point_start..sn.point_end],
                &tree.points.intensities[sn.point_start..sn.point_end],
                &mut ws.phi[lo..hi],
            );
            ws.counts.p2p_pairs += 1;
            ws.counts.p2p_kernel_evals += ((hi - lo) * sn.num_points()) as u64;
        }
    }

    // Read out local expansions at the particles.
    for id in 0..n_nodes as u32 {
        let node = &tree.nodes[id as usize];
        if !node.is_leaf() {
            continue;
        }
        let (lo, hi) = (node.point_start, node.point_end);
        let local = ws.local[id as usize].take().expect("leaf local ready");
        apply_l2p(
            &ws.cache.grid,
            &node.anchor(),
            node.edge(),
            &tree.points.positions[lo..hi],
            &local,
            &mut ws.phi[lo..hi],
            &mut ws.scratch,
        );
        ws.local[id as usize] = Some(local);
        ws.counts.l2p_particles += (hi - lo) as u64;
    }

    // Back to the input point order.
    let mut potentials = vec![0.0; n_points];
    for (slot, &orig) in tree.perm.iter().enumerate() {
        potentials[orig] = ws.phi[slot];
    }

    Ok(FmmResult {
        potentials,
        counts: ws.counts,
        wall_seconds: start.elapsed().as_secs_f64(),
        order: options.order,
        modified: options.modified,
    })
}

/// Reference quadratic summation in input order.
pub fn direct_sum<K: Kernel>(
    positions: &[[f64; 3]],
    intensities: &[f64],
    kernel: &K,
) -> Result<Vec<f64>> {
    if positions.len() > DIRECT_SUM_CAP {
        return Err(Error::Input(format!(
            "direct summation capped at {DIRECT_SUM_CAP} points (got {})",
            positions.len()
        )));
    }
    if positions.len() != intensities.len() {
        return Err(Error::Input("positions and intensities differ in length".into()));
    }
    let mut phi = vec![0.0; positions.len()];
    apply_p2p(kernel, positions, positions, intensities, &mut phi);
    Ok(phi)
}

/// Euclidean-norm relative deviation `‖approx − reference‖₂ / ‖reference‖₂`.
///
/// An all-zero reference has no scale to compare against, so the result is
/// `0.0` when the vectors agree exactly and `f64::INFINITY` otherwise.
pub fn relative_error(approx: &[f64], reference: &[f64]) -> f64 {
    assert_eq!(approx.len(), reference.len());
    let mut diff2 = 0.0;
    let mut ref2 = 0.0;
    for (a, e) in approx.iter().zip(reference) {
        diff2 += (a - e) * (a - e);
        ref2 += e * e;
    }
    if ref2 == 0.0 {
        if diff2 == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (diff2 / ref2).sqrt()
    }
}
