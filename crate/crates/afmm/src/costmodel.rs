//! Machine-independent cost accounting.
//!
//! Every operator's work is summarized as `setup + slope * unit_work`,
//! where the unit work depends only on the expansion order `r` and the
//! dimension: `r^(d+1)` per particle scattered or read back, `r^(2d)` per
//! grid-to-grid translation, `r^d` per particle in the mixed
//! particle/grid operators, and one unit per direct kernel evaluation.
//! The sixteen coefficients (a setup/slope pair per operator) are derived
//! once by walking the implementation loops with fixed charges — 19 per
//! kernel evaluation, 4 per divide or square root, 1 per multiply-add or
//! branch — and frozen into `data/cost_table.json`. Setup terms are
//! deliberately zero: they are asymptotically irrelevant and keeping them
//! out makes order-scaling ratios exact.
//!
//! [`count_operations`] reproduces, without touching any floating-point
//! data, exactly the counters the evaluation engine reports, so cost
//! predictions can be made from tree structure alone. The module also
//! checks the structural inequalities that keep adaptive-tree work
//! proportional to the number of leaves ([`verify_complexity_bounds`]).

use crate::engine::OperationCounts;
use crate::tree::lists::{divided_anchor, visit_interaction_pairs, ListVisitor};
use crate::tree::{NodeKind, Tree};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Environment variable naming a JSON file that overrides the built-in
/// coefficient table.
pub const COST_TABLE_ENV: &str = "FMM_COST_TABLE";

/// Abstract charge per kernel evaluation.
pub const CHARGE_KERNEL: f64 = 19.0;
/// Abstract charge per divide or square root.
pub const CHARGE_DIV_SQRT: f64 = 4.0;
/// Abstract charge per multiply-add or branch.
pub const CHARGE_ADDMUL: f64 = 1.0;

/// The charges a table was derived with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Charges {
    pub kernel: f64,
    pub div_sqrt: f64,
    pub addmul: f64,
}

/// Frozen per-operator coefficients.
///
/// `c[0]..c[15]` hold the setup/slope pairs in operator order: particle
/// scatter, upward translation, cross transfer, distant-source gather,
/// downward translation, particle readback, distant-target evaluation,
/// direct summation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostTable {
    pub version: u32,
    pub charges: Charges,
    pub c: [f64; 16],
    pub derived_at_r: usize,
    pub derived_at_dim: usize,
}

/// Walks the arithmetic of the operator implementations, charging each
/// floating-point event, without running any of them.
mod micro {
    use super::{CHARGE_ADDMUL, CHARGE_DIV_SQRT};

    /// Three-term recurrence producing `T_0..T_{r-1}`.
    pub fn chebyshev_row(r: usize) -> f64 {
        // Two multiplies/subtracts per k in 2..r.
        2.0 * CHARGE_ADDMUL * r.saturating_sub(2) as f64
    }

    /// Affine map of one coordinate onto the reference interval.
    pub fn to_reference() -> f64 {
        4.0 * CHARGE_ADDMUL + CHARGE_DIV_SQRT
    }

    /// Interpolation weights of one reference coordinate against `r` nodes.
    pub fn axis_weights(r: usize) -> f64 {
        // One row for the point, then per node: (r-1) multiply-accumulate
        // pairs and a divide.
        chebyshev_row(r) + r as f64 * (2.0 * CHARGE_ADDMUL * (r - 1) as f64 + CHARGE_DIV_SQRT)
    }

    /// Tensor weights of one physical point in a cell.
    pub fn point_weights(r: usize, dim: usize) -> f64 {
        let (len1, len2) = match dim {
            1 => (1usize, 1usize),
            2 => (r, 1),
            _ => (r, r),
        };
        let axes = dim as f64 * (to_reference() + axis_weights(r));
        let middle = (len1 * len2) as f64 * CHARGE_ADDMUL;
        let inner = (r * len1 * len2) as f64 * CHARGE_ADDMUL;
        axes + middle + inner
    }

    /// Scatter one particle onto a grid.
    pub fn p2m_per_particle(r: usize, dim: usize) -> f64 {
        point_weights(r, dim) + r.pow(dim as u32) as f64 * CHARGE_ADDMUL
    }

    /// Read one particle's potential off a grid.
    pub fn l2p_per_particle(r: usize, dim: usize) -> f64 {
        point_weights(r, dim) + (r.pow(dim as u32) + 1) as f64 * CHARGE_ADDMUL
    }

    /// Dense matrix-vector accumulate of size `n`.
    pub fn matvec(n: usize) -> f64 {
        (n * n) as f64 * CHARGE_ADDMUL
    }
}

/// Derive the coefficient table by micro-counting the implementation loops
/// at reference order `r` in three dimensions.
pub fn derive_table(r: usize) -> CostTable {
    let dim = 3usize;
    let rd = r.pow(dim as u32) as f64;
    let rd1 = rd * r as f64;
    let r2d = rd * rd;
    let mut c = [0.0f64; 16];
    // Setup terms (even operator constants 1,3,5,...) stay zero; only the
    // slopes are derived.
    c[1] = micro::p2m_per_particle(r, dim) / rd1;
    c[3] = micro::matvec(rd as usize) / r2d;
    c[5] = micro::matvec(rd as usize) / r2d;
    c[7] = CHARGE_KERNEL + CHARGE_ADDMUL;
    c[9] = micro::matvec(rd as usize) / r2d;
    c[11] = micro::l2p_per_particle(r, dim) / rd1;
    c[13] = CHARGE_KERNEL + CHARGE_ADDMUL;
    c[15] = CHARGE_KERNEL + CHARGE_ADDMUL;
    CostTable {
        version: 1,
        charges: Charges {
            kernel: CHARGE_KERNEL,
            div_sqrt: CHARGE_DIV_SQRT,
            addmul: CHARGE_ADDMUL,
        },
        c,
        derived_at_r: r,
        derived_at_dim: dim,
    }
}

const BUILTIN_TABLE: &str = include_str!("../data/cost_table.json");

/// Load a table from a JSON file.
pub fn load_table(path: &Path) -> Result<CostTable> {
    let text = std::fs::read_to_string(path)?;
    let table: CostTable = serde_json::from_str(&text)?;
    if table.c.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Input(format!(
            "cost table {} contains negative or non-finite coefficients",
            path.display()
        )));
    }
    Ok(table)
}

/// The built-in table, or the file named by `FMM_COST_TABLE` when set.
pub fn default_table() -> Result<CostTable> {
    match std::env::var_os(COST_TABLE_ENV) {
        Some(path) => load_table(Path::new(&path)),
        None => Ok(serde_json::from_str(BUILTIN_TABLE).expect("built-in cost table parses")),
    }
}

/// Predicted cycles split by operator. Singleton fold work is billed under
/// the translation passes that perform it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CycleBreakdown {
    pub p2m: f64,
    pub m2m: f64,
    pub m2l: f64,
    pub p2l: f64,
    pub l2l: f64,
    pub l2p: f64,
    pub m2p: f64,
    pub p2p: f64,
}

impl CycleBreakdown {
    pub fn total(&self) -> f64 {
        self.p2m + self.m2m + self.m2l + self.p2l + self.l2l + self.l2p + self.m2p + self.p2p
    }

    /// Everything outside the four list-driven operators.
    pub fn other(&self) -> f64 {
        self.p2m + self.m2m + self.l2l + self.l2p
    }
}

/// Predicted per-operator cycles for a counted workload at order `r`.
pub fn cycle_breakdown(
    counts: &OperationCounts,
    table: &CostTable,
    r: usize,
    dim: usize,
) -> CycleBreakdown {
    let rd = (r.pow(dim as u32)) as f64;
    let rd1 = rd * r as f64;
    let r2d = rd * rd;
    let c = &table.c;
    CycleBreakdown {
        p2m: counts.p2m_particles as f64 * (c[0] + c[1] * rd1),
        m2m: (counts.m2m_pairs + counts.m2l_fold_ups) as f64 * (c[2] + c[3] * r2d),
        m2l: counts.m2l_pairs as f64 * (c[4] + c[5] * r2d),
        p2l: counts.p2l_pairs as f64 * c[6] + counts.p2l_source_particles as f64 * c[7] * rd,
        l2l: (counts.l2l_pairs + counts.m2l_fold_downs) as f64 * (c[8] + c[9] * r2d),
        l2p: counts.l2p_particles as f64 * (c[10] + c[11] * rd1),
        m2p: counts.m2p_pairs as f64 * c[12] + counts.m2p_target_particles as f64 * c[13] * rd,
        p2p: counts.p2p_pairs as f64 * c[14] + counts.p2p_kernel_evals as f64 * c[15],
    }
}

/// Predicted total cycles for a counted workload at order `r`.
pub fn estimate_cycles(counts: &OperationCounts, table: &CostTable, r: usize, dim: usize) -> f64 {
    cycle_breakdown(counts, table, r, dim).total()
}

struct Counter<'t> {
    tree: &'t Tree,
    counts: OperationCounts,
    modified: bool,
    src_used: Vec<bool>,
    tgt_used: Vec<bool>,
}

impl Counter<'_> {
    fn is_singleton(&self, id: u32) -> bool {
        matches!(self.tree.nodes[id as usize].kind, NodeKind::Singleton)
    }

    fn pts(&self, id: u32) -> u64 {
        self.tree.nodes[id as usize].num_points() as u64
    }
}

impl ListVisitor for Counter<'_> {
    fn on_u(&mut self, c: u32, a: u32) {
        self.counts.p2p_pairs += 1;
        self.counts.p2p_kernel_evals += self.pts(c) * self.pts(a);
    }

    fn on_v(&mut self, c: u32, a: u32) {
        self.counts.m2l_pairs += 1;
        if self.modified {
            if self.is_singleton(a) {
                self.src_used[a as usize] = true;
            }
            if self.is_singleton(c) {
                self.tgt_used[c as usize] = true;
            }
        }
    }

    fn on_w(&mut self, c: u32, a: u32) {
        self.counts.m2p_pairs += 1;
        self.counts.m2p_target_particles += self.pts(c);
        if self.modified && self.is_singleton(a) {
            self.src_used[a as usize] = true;
        }
    }

    fn on_x(&mut self, c: u32, a: u32) {
        self.counts.p2l_pairs += 1;
        self.counts.p2l_source_particles += self.pts(a);
        if self.modified && self.is_singleton(c) {
            self.tgt_used[c as usize] = true;
        }
    }
}

/// Predict the exact operation counters [`crate::engine::run_fmm`] would
/// report on this tree, from structure alone.
pub fn count_operations(tree: &Tree, modified: bool) -> OperationCounts {
    let n_nodes = tree.nodes.len();
    let mut counter = Counter {
        tree,
        counts: OperationCounts::default(),
        modified,
        src_used: vec![false; n_nodes],
        tgt_used: vec![false; n_nodes],
    };
    let n_points = tree.points.len() as u64;
    counter.counts.p2m_particles = n_points;
    counter.counts.l2p_particles = n_points;
    if modified {
        let pairs: u64 = tree
            .nodes
            .iter()
            .filter(|n| matches!(n.kind, NodeKind::Divided))
            .map(|n| n.divided_children.len() as u64)
            .sum();
        counter.counts.m2m_pairs = pairs;
        counter.counts.l2l_pairs = pairs;
    } else {
        counter.counts.m2m_pairs = (n_nodes - 1) as u64;
        counter.counts.l2l_pairs = (n_nodes - 1) as u64;
    }
    visit_interaction_pairs(tree, &mut counter);
    counter.counts.m2l_fold_ups = counter.src_used.iter().filter(|&&b| b).count() as u64;
    counter.counts.m2l_fold_downs = counter.tgt_used.iter().filter(|&&b| b).count() as u64;
    counter.counts
}

/// Measured structural quantities against their theoretical limits.
#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub leaves: u64,
    pub divided: u64,
    /// `sum over internal nodes of (occupied children - 1)`; always equal
    /// to `leaves - 1`.
    pub split_surplus: u64,
    pub split_identity_holds: bool,
    /// `divided <= leaves - 1`.
    pub divided_bound_holds: bool,
    /// Upward (= downward) translation pairs in compressed mode.
    pub translation_pairs: u64,
    /// Strict limit `2 * leaves` on translation pairs.
    pub translation_bound: u64,
    pub translation_bound_holds: bool,
    /// Largest number of cross-transfer pairs charged to one divided node.
    pub max_m2l_charge: u64,
    /// `(6^d - 3^d) + 2^d (6^d - 1)`.
    pub m2l_charge_bound: u64,
    pub m2l_charge_holds: bool,
    /// Largest directed near-field out-degree toward non-deeper leaves.
    pub max_shallow_degree: u64,
    /// Strict limit `3^d` on that degree.
    pub degree_bound: u64,
    pub degree_bound_holds: bool,
}

impl BoundsReport {
    pub fn all_hold(&self) -> bool {
        self.split_identity_holds
            && self.divided_bound_holds
            && self.translation_bound_holds
            && self.m2l_charge_holds
            && self.degree_bound_holds
    }
}

/// Ancestor of `id` at `depth` (which must not exceed the node's depth).
fn ancestor_at(tree: &Tree, mut id: u32, depth: u32) -> u32 {
    while tree.nodes[id as usize].depth > depth {
        id = tree.nodes[id as usize].parent.expect("non-root has a parent");
    }
    id
}

/// Lowest common ancestor of two equal-depth nodes via the integer cell
/// indices: the pair's paths merge where all axis indices agree.
fn lca_of_pair(tree: &Tree, a: u32, b: u32) -> u32 {
    let na = &tree.nodes[a as usize];
    let nb = &tree.nodes[b as usize];
    debug_assert_eq!(na.depth, nb.depth);
    let mut lift = 0u32;
    for axis in 0..tree.config.dim {
        let x = na.index[axis] ^ nb.index[axis];
        lift = lift.max(128 - x.leading_zeros());
    }
    ancestor_at(tree, a, na.depth - lift)
}

struct ChargeVisitor<'t> {
    tree: &'t Tree,
    charge: Vec<u64>,
    max_shallow_degree: u64,
    degree: Vec<u64>,
}

impl ChargeVisitor<'_> {
    /// The divided node that pays for endpoint `e` of a cross pair: its
    /// deepest divided ancestor-or-self, pulled down to the pair's lowest
    /// common ancestor when the anchor sits above it.
    fn candidate(&self, e: u32, lca: u32) -> u32 {
        let anchor = divided_anchor(self.tree, e);
        if self.tree.nodes[anchor as usize].depth >= self.tree.nodes[lca as usize].depth {
            anchor
        } else {
            lca
        }
    }
}

impl ListVisitor for ChargeVisitor<'_> {
    fn on_u(&mut self, c: u32, a: u32) {
        let nc = &self.tree.nodes[c as usize];
        let na = &self.tree.nodes[a as usize];
        if a != c && na.depth <= nc.depth {
            self.degree[c as usize] += 1;
            self.max_shallow_degree = self.max_shallow_degree.max(self.degree[c as usize]);
        }
    }

    fn on_v(&mut self, c: u32, a: u32) {
        // The cross list is symmetric and each exchange is paid for once,
        // so only process each unordered pair on its lower-id visit.
        if c > a {
            return;
        }
        let lca = lca_of_pair(self.tree, c, a);
        let ct = self.candidate(c, lca);
        let cs = self.candidate(a, lca);
        let (dt, ds) = (
            self.tree.nodes[ct as usize].depth,
            self.tree.nodes[cs as usize].depth,
        );
        if dt >= ds {
            self.charge[ct as usize] += 1;
        }
        if ds >= dt && cs != ct {
            self.charge[cs as usize] += 1;
        }
    }

    fn on_w(&mut self, _c: u32, _a: u32) {}

    fn on_x(&mut self, _c: u32, _a: u32) {}
}

/// Check the leaf-proportional work guarantees on a built tree.
pub fn verify_complexity_bounds(tree: &Tree) -> BoundsReport {
    let dim = tree.config.dim as u32;
    let leaves = tree.nodes.iter().filter(|n| n.is_leaf()).count() as u64;
    let divided = tree
        .nodes
        .iter()
        .filter(|n| matches!(n.kind, NodeKind::Divided))
        .count() as u64;
    let split_surplus: u64 = tree
        .nodes
        .iter()
        .filter(|n| !n.is_leaf())
        .map(|n| (n.children.len() - 1) as u64)
        .sum();
    let translation_pairs: u64 = tree
        .nodes
        .iter()
        .filter(|n| matches!(n.kind, NodeKind::Divided))
        .map(|n| n.divided_children.len() as u64)
        .sum();

    let mut visitor = ChargeVisitor {
        tree,
        charge: vec![0; tree.nodes.len()],
        max_shallow_degree: 0,
        degree: vec![0; tree.nodes.len()],
    };
    visit_interaction_pairs(tree, &mut visitor);
    let max_m2l_charge = visitor.charge.iter().copied().max().unwrap_or(0);

    let m2l_charge_bound =
        (6u64.pow(dim) - 3u64.pow(dim)) + 2u64.pow(dim) * (6u64.pow(dim) - 1);
    let degree_bound = 3u64.pow(dim);
    BoundsReport {
        leaves,
        divided,
        split_surplus,
        split_identity_holds: split_surplus == leaves - 1,
        divided_bound_holds: divided <= leaves.saturating_sub(1) || leaves == 1,
        translation_pairs,
        translation_bound: 2 * leaves,
        translation_bound_holds: translation_pairs < 2 * leaves,
        max_m2l_charge,
        m2l_charge_bound,
        m2l_charge_holds: max_m2l_charge <= m2l_charge_bound,
        max_shallow_degree: visitor.max_shallow_degree,
        degree_bound,
        degree_bound_holds: visitor.max_shallow_degree < degree_bound,
    }
}
