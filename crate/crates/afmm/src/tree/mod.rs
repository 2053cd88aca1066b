//! Adaptive dyadic trees over point sets in the unit cube.
//!
//! [`build_tree`] subdivides the unit cube until every leaf holds at most
//! `threshold` points (or a depth limit intervenes), keeping only occupied
//! cells. Nodes are classified by occupied-child count — [`NodeKind::Leaf`]
//! (none), [`NodeKind::Singleton`] (one), [`NodeKind::Divided`] (two or
//! more) — and each node records its *divided parent* (nearest ancestor
//! that is divided, or the root) so that translation stages can hop across
//! singleton chains instead of walking them level by level.
//!
//! Cell membership uses the lower-cell rule: a coordinate exactly on a
//! splitting plane belongs to the lower child, so per-axis cells behave as
//! intervals closed on the upper end and the whole unit cube (including
//! both faces) stays covered.
//!
//! Points are stored back-to-back in leaf order; [`Tree::perm`] maps a
//! storage slot back to the index of the point in the input set.

pub mod geometry;
pub mod lists;

use crate::pointgen::PointSet;
use crate::{Error, Result};
use geometry::Cell;

/// Hard recursion limit for subdivision; guards termination when points are
/// closer than the threshold ever resolves (but not identical).
pub const DEPTH_HARD_CAP: u32 = 96;

/// Parameters controlling subdivision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeConfig {
    /// Maximum points per leaf before a cell is subdivided (>= 1).
    pub threshold: usize,
    /// Depth limit; `None` means subdivision is bounded only by
    /// [`DEPTH_HARD_CAP`]. Leaves stopped by this limit may exceed
    /// `threshold` points by design.
    pub max_depth: Option<u32>,
    /// Spatial dimension (1, 2 or 3). Axes `>= dim` are ignored.
    pub dim: usize,
    /// When `false`, every leaf is pushed down to `max_depth` at build
    /// time, producing a uniform-depth (extended) tree in which no leaf has
    /// a deeper neighbour.
    pub enable_wx: bool,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig { threshold: 64, max_depth: None, dim: 3, enable_wx: true }
    }
}

/// Node classification by number of occupied children.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// No children: holds a contiguous range of points.
    Leaf,
    /// Exactly one occupied child; carries no expansion data of its own.
    Singleton,
    /// Two or more occupied children.
    Divided,
}

/// One occupied cell of the tree.
#[derive(Debug, Clone)]
pub struct Node {
    pub depth: u32,
    /// Per-axis integer anchor: the cell spans
    /// `[index * 2^-depth, (index + 1) * 2^-depth]` on each active axis.
    pub index: [u128; 3],
    pub parent: Option<u32>,
    /// Occupied children in child-cell order.
    pub children: Vec<u32>,
    /// Contiguous range of point slots covered by this node's subtree.
    pub point_start: usize,
    pub point_end: usize,
    pub kind: NodeKind,
    /// Leaf kept above `threshold` points by the duplicate-coordinate guard
    /// or the hard depth cap (never set on leaves at the configured
    /// `max_depth`, where exceeding the threshold is expected).
    pub oversized: bool,
    /// Nearest strict ancestor that is divided, or the root.
    pub divided_parent: Option<u32>,
    /// For divided nodes (and the root): descendants reachable by skipping
    /// singleton chains — every non-singleton node whose divided parent is
    /// this node.
    pub divided_children: Vec<u32>,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf)
    }

    pub fn num_points(&self) -> usize {
        self.point_end - self.point_start
    }

    /// Integer cell for geometric predicates.
    pub fn cell(&self, dim: usize) -> Cell {
        Cell { depth: self.depth, index: self.index, dim }
    }

    /// Cell edge length.
    pub fn edge(&self) -> f64 {
        (-(self.depth as f64)).exp2()
    }

    /// Lower corner of the cell in physical coordinates.
    pub fn anchor(&self) -> [f64; 3] {
        let e = self.edge();
        [self.index[0] as f64 * e, self.index[1] as f64 * e, self.index[2] as f64 * e]
    }

    /// Cell centre in physical coordinates.
    pub fn center(&self) -> [f64; 3] {
        let e = self.edge();
        let a = self.anchor();
        [a[0] + 0.5 * e, a[1] + 0.5 * e, a[2] + 0.5 * e]
    }
}

/// An adaptive tree with its reordered point data.
#[derive(Debug, Clone)]
pub struct Tree {
    pub config: TreeConfig,
    pub nodes: Vec<Node>,
    /// Point data permuted into leaf order.
    pub points: PointSet,
    /// `perm[slot]` is the index of the point in the original input set.
    pub perm: Vec<usize>,
    /// Node ids grouped by depth.
    pub levels: Vec<Vec<u32>>,
    /// For each node, itself if it carries expansions (leaf or divided),
    /// otherwise the unique non-singleton node its singleton chain leads to.
    pub effective: Vec<u32>,
}

impl Tree {
    pub fn node(&self, id: u32) -> &Node {
        &self.nodes[id as usize]
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    /// Deepest occupied level.
    pub fn depth(&self) -> u32 {
        self.levels.len() as u32 - 1
    }

    pub fn leaf_ids(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.nodes.len() as u32).filter(|&i| self.nodes[i as usize].is_leaf())
    }

    /// Positions of the points in a node's subtree.
    pub fn positions_in(&self, id: u32) -> &[[f64; 3]] {
        let n = self.node(id);
        &self.points.positions[n.point_start..n.point_end]
    }

    /// Intensities of the points in a node's subtree.
    pub fn intensities_in(&self, id: u32) -> &[f64] {
        let n = self.node(id);
        &self.points.intensities[n.point_start..n.point_end]
    }
}

/// Aggregate size figures for a built tree.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TreeStats {
    pub points: usize,
    pub nodes: usize,
    pub leaves: usize,
    pub depth: u32,
    /// Largest number of points in any leaf.
    pub max_leaf_points: usize,
    pub oversized_leaves: usize,
}

/// Node-kind census plus the longest run of consecutive singletons on any
/// root-to-leaf path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct StructureCounts {
    pub leaves: usize,
    pub singletons: usize,
    pub divided: usize,
    pub longest_singleton_chain: usize,
}

/// Occupied-cell counts per level, with leaves carried down below their own
/// depth at multiplicity one so the counts equal brute-force box counts
/// whenever leaves are fully resolved (single-point or duplicate leaves).
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyProfile {
    /// `occupied[l]`: cells of edge `2^-l` containing at least one point.
    pub occupied: Vec<u64>,
    /// `c[l] = log2(occupied[l]) / l` for `l >= 1`; `c[0] = 0`.
    pub c: Vec<f64>,
}

fn validate_config(config: &TreeConfig, points: &PointSet) -> Result<()> {
    if config.threshold == 0 {
        return Err(Error::Parameter("leaf threshold must be at least 1".into()));
    }
    if !(1..=3).contains(&config.dim) {
        return Err(Error::Parameter(format!(
            "dimension must be 1, 2 or 3 (got {})",
            config.dim
        )));
    }
    if points.dim != config.dim {
        return Err(Error::Parameter(format!(
            "tree dimension {} does not match point set dimension {}",
            config.dim, points.dim
        )));
    }
    if let Some(l) = config.max_depth {
        if l > DEPTH_HARD_CAP {
            return Err(Error::Parameter(format!(
                "max depth {l} exceeds the hard cap {DEPTH_HARD_CAP}"
            )));
        }
    }
    if !config.enable_wx && config.max_depth.is_none() {
        return Err(Error::Parameter(
            "uniform-depth mode (enable_wx = false) requires a finite max depth".into(),
        ));
    }
    if points.len() == 0 {
        return Err(Error::Input("cannot build a tree over an empty point set".into()));
    }
    for (i, p) in points.positions.iter().enumerate() {
        for a in 0..config.dim {
            if !(0.0..=1.0).contains(&p[a]) || !p[a].is_finite() {
                return Err(Error::Input(format!(
                    "point {i} lies outside the unit cube on axis {a} (coordinate {})",
                    p[a]
                )));
            }
        }
    }
    Ok(())
}

struct Builder<'a> {
    positions: &'a [[f64; 3]],
    order: Vec<u32>,
    scratch: Vec<u32>,
    nodes: Vec<Node>,
    dim: usize,
    threshold: usize,
    /// Subdivide every occupied cell down to exactly this depth.
    extend_to: Option<u32>,
    depth_limit: u32,
    /// Whether `depth_limit` came from the configuration (an expected
    /// stopping place) rather than from the hard cap (a guard).
    limit_is_configured: bool,
}

impl Builder<'_> {
    /// Child-cell code of a point inside the cell `(depth, index)`: bit `a`
    /// set when the point lies in the upper half on axis `a`. Coordinates
    /// exactly on the midplane go to the lower half.
    fn child_code(&self, p: &[f64; 3], depth: u32, index: &[u128; 3]) -> usize {
        let edge = (-(depth as f64)).exp2();
        let mut code = 0usize;
        for a in 0..self.dim {
            let mid = (index[a] as f64 + 0.5) * edge;
            if p[a] > mid {
                code |= 1 << a;
            }
        }
        code
    }

    fn all_points_identical(&self, start: usize, end: usize) -> bool {
        let first = self.positions[self.order[start] as usize];
        self.order[start + 1..end].iter().all(|&i| {
            let p = self.positions[i as usize];
            (0..self.dim).all(|a| p[a] == first[a])
        })
    }

    fn build(&mut self, depth: u32, index: [u128; 3], parent: Option<u32>, start: usize, end: usize) -> u32 {
        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            depth,
            index,
            parent,
            children: Vec::new(),
            point_start: start,
            point_end: end,
            kind: NodeKind::Leaf,
            oversized: false,
            divided_parent: None,
            divided_children: Vec::new(),
        });

        let count = end - start;
        let split = match self.extend_to {
            Some(target) => depth < target,
            None => {
                count > self.threshold
                    && depth < self.depth_limit
                    && !self.all_points_identical(start, end)
            }
        };
        if !split {
            // The configured max depth is an expected stopping place; only
            // guard-imposed stops (duplicates, hard cap) mark oversized.
            let at_configured_limit = self.limit_is_configured && depth == self.depth_limit;
            self.nodes[id as usize].oversized =
                count > self.threshold && self.extend_to.is_none() && !at_configured_limit;
            return id;
        }

        // Stable bucket sort of the slice by child code.
        let nbuckets = 1 << self.dim;
        let mut counts = [0usize; 8];
        let codes: Vec<u8> = self.order[start..end]
            .iter()
            .map(|&i| {
                let c = self.child_code(&self.positions[i as usize], depth, &index);
                counts[c] += 1;
                c as u8
            })
            .collect();
        let mut offsets = [0usize; 8];
        let mut acc = start;
        for c in 0..nbuckets {
            offsets[c] = acc;
            acc += counts[c];
        }
        self.scratch[start..end].copy_from_slice(&self.order[start..end]);
        let mut cursors = offsets;
        for (k, &code) in codes.iter().enumerate() {
            self.order[cursors[code as usize]] = self.scratch[start + k];
            cursors[code as usize] += 1;
        }

        for c in 0..nbuckets {
            if counts[c] == 0 {
                continue;
            }
            let mut child_index = [0u128; 3];
            for a in 0..self.dim {
                child_index[a] = (index[a] << 1) | ((c >> a) & 1) as u128;
            }
            let child = self.build(depth + 1, child_index, Some(id), offsets[c], offsets[c] + counts[c]);
            self.nodes[id as usize].children.push(child);
        }
        id
    }
}

fn build_inner(points: &PointSet, config: TreeConfig, extend_to: Option<u32>) -> Result<Tree> {
    validate_config(&config, points)?;
    let n = points.len();
    let mut builder = Builder {
        positions: &points.positions,
        order: (0..n as u32).collect(),
        scratch: vec![0; n],
        nodes: Vec::new(),
        dim: config.dim,
        threshold: config.threshold,
        extend_to,
        depth_limit: config.max_depth.unwrap_or(DEPTH_HARD_CAP),
        limit_is_configured: config.max_depth.is_some(),
    };
    builder.build(0, [0, 0, 0], None, 0, n);
    let mut nodes = builder.nodes;
    let order = builder.order;

    // Classify by occupied-child count.
    for v in &mut nodes {
        v.kind = match v.children.len() {
            0 => NodeKind::Leaf,
            1 => NodeKind::Singleton,
            _ => NodeKind::Divided,
        };
    }

    // Divided-parent links (nodes are in preorder, parents first).
    for id in 1..nodes.len() {
        let p = nodes[id].parent.unwrap() as usize;
        let dp = if p == 0 || matches!(nodes[p].kind, NodeKind::Divided) {
            p as u32
        } else {
            nodes[p].divided_parent.unwrap()
        };
        nodes[id].divided_parent = Some(dp);
        if !matches!(nodes[id].kind, NodeKind::Singleton) {
            nodes[dp as usize].divided_children.push(id as u32);
        }
    }

    // Effective carrier of each node's expansion data (children after
    // parents in preorder, so walk ids backwards).
    let mut effective: Vec<u32> = (0..nodes.len() as u32).collect();
    for id in (0..nodes.len()).rev() {
        if matches!(nodes[id].kind, NodeKind::Singleton) {
            effective[id] = effective[nodes[id].children[0] as usize];
        }
    }

    let depth = nodes.iter().map(|v| v.depth).max().unwrap();
    let mut levels = vec![Vec::new(); depth as usize + 1];
    for (id, v) in nodes.iter().enumerate() {
        levels[v.depth as usize].push(id as u32);
    }

    let perm: Vec<usize> = order.iter().map(|&i| i as usize).collect();
    let mut permuted = PointSet {
        positions: Vec::with_capacity(n),
        intensities: Vec::with_capacity(n),
        dim: points.dim,
    };
    for &src in &perm {
        permuted.positions.push(points.positions[src]);
        permuted.intensities.push(points.intensities[src]);
    }

    Ok(Tree { config, nodes, points: permuted, perm, levels, effective })
}

/// Build an adaptive tree over `points`.
pub fn build_tree(points: &PointSet, config: TreeConfig) -> Result<Tree> {
    let extend_to = if config.enable_wx { None } else { config.max_depth };
    build_inner(points, config, extend_to)
}

/// Rebuild a tree with every occupied cell subdivided down to a uniform
/// leaf depth (the configured max depth, or the tree's observed depth when
/// none is set). The result has no deeper-neighbour leaf pairs, and
/// extending an already uniform-depth tree reproduces it.
pub fn extend_tree(tree: &Tree) -> Result<Tree> {
    let target = tree.config.max_depth.unwrap_or_else(|| tree.depth());
    let config = TreeConfig { max_depth: Some(target), ..tree.config };
    let mut extended = build_inner(&tree.points, config, Some(target))?;
    // Compose permutations so slots still refer to the pre-extension input.
    for slot in &mut extended.perm {
        *slot = tree.perm[*slot];
    }
    Ok(extended)
}

/// Aggregate size figures.
pub fn tree_stats(tree: &Tree) -> TreeStats {
    let mut leaves = 0;
    let mut max_leaf_points = 0;
    let mut oversized = 0;
    for v in &tree.nodes {
        if v.is_leaf() {
            leaves += 1;
            max_leaf_points = max_leaf_points.max(v.num_points());
            oversized += v.oversized as usize;
        }
    }
    TreeStats {
        points: tree.points.len(),
        nodes: tree.nodes.len(),
        leaves,
        depth: tree.depth(),
        max_leaf_points,
        oversized_leaves: oversized,
    }
}

/// Census of node kinds and the longest singleton chain.
pub fn classify_structure(tree: &Tree) -> StructureCounts {
    let mut counts = StructureCounts {
        leaves: 0,
        singletons: 0,
        divided: 0,
        longest_singleton_chain: 0,
    };
    // run[id]: length of the singleton run ending at id (preorder pass).
    let mut run = vec![0usize; tree.nodes.len()];
    for (id, v) in tree.nodes.iter().enumerate() {
        match v.kind {
            NodeKind::Leaf => counts.leaves += 1,
            NodeKind::Divided => counts.divided += 1,
            NodeKind::Singleton => {
                counts.singletons += 1;
                run[id] = 1 + v.parent.map_or(0, |p| run[p as usize]);
                counts.longest_singleton_chain = counts.longest_singleton_chain.max(run[id]);
            }
        }
    }
    counts
}

/// Occupied-cell counts per level with carried-down leaves.
/// Largest point count held by any leaf at exactly `depth` (1 when none):
/// the threshold at which a depth-capped build and a pure-threshold build
/// produce the same tree, which is what makes the two subdivision rules
/// comparable on a common grid.
pub fn max_points_at_depth(tree: &Tree, depth: u32) -> u64 {
    tree.nodes
        .iter()
        .filter(|n| n.is_leaf() && n.depth == depth)
        .map(|n| n.num_points() as u64)
        .max()
        .unwrap_or(1)
}

pub fn occupancy_profile(tree: &Tree) -> OccupancyProfile {
    let depth = tree.depth() as usize;
    let mut at_level = vec![0u64; depth + 1];
    let mut leaves_above = vec![0u64; depth + 2];
    for v in &tree.nodes {
        at_level[v.depth as usize] += 1;
        if v.is_leaf() && (v.depth as usize) < depth {
            // This leaf keeps occupying one cell per level below it.
            leaves_above[v.depth as usize + 1] += 1;
        }
    }
    let mut carried = 0u64;
    let mut occupied = Vec::with_capacity(depth + 1);
    for l in 0..=depth {
        carried += leaves_above[l];
        occupied.push(at_level[l] + carried);
    }
    let c = occupied
        .iter()
        .enumerate()
        .map(|(l, &n)| if l == 0 { 0.0 } else { (n as f64).log2() / l as f64 })
        .collect();
    OccupancyProfile { occupied, c }
}
