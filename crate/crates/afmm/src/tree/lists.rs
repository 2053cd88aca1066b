//! Interaction-list enumeration.
//!
//! For every node `C` of an adaptive tree, four lists drive the translation
//! stages:
//!
//! * **U** (leaves only): `C` itself plus every leaf whose closed cell
//!   touches `C`'s — near-field pairs evaluated directly.
//! * **V**: equal-depth nodes separated from `C` whose parents touch `C`'s
//!   parent — the far-field transfer pairs.
//! * **W** (leaves only): strictly deeper nodes not touching `C` whose
//!   parent touches `C` — their source expansions are evaluated at `C`'s
//!   points.
//! * **X**: the mirror of W; `a` is in `X(C)` exactly when `C` is in
//!   `W(a)`, so X members are always leaves and their points are gathered
//!   straight into `C`'s local expansion.
//!
//! Enumeration is visitor-based so that counting passes and materializing
//! passes share one traversal. All pairs are found through colleague lists
//! (equal-depth touching cells), computed level by level from the parent's
//! colleagues — no spatial hashing, and per-node work is bounded by the
//! 3^d - 1 colleague bound regardless of tree size.

use super::geometry::{adjacent, Cell};
use super::{NodeKind, Tree};

/// Receives each interaction pair exactly once per owning node.
pub trait ListVisitor {
    /// Leaf `c` interacts directly with adjacent leaf `a` (`a == c` for the
    /// self pair).
    fn on_u(&mut self, c: u32, a: u32);
    /// `a` is in the V list of `c`.
    fn on_v(&mut self, c: u32, a: u32);
    /// `a` is in the W list of leaf `c`.
    fn on_w(&mut self, c: u32, a: u32);
    /// Leaf `a` is in the X list of `c`.
    fn on_x(&mut self, c: u32, a: u32);
}

/// Max-norm offset between two equal-depth cells.
fn offset_inf(a: &Cell, b: &Cell) -> u128 {
    debug_assert_eq!(a.depth, b.depth);
    let mut m = 0u128;
    for axis in 0..a.dim {
        let d = a.index[axis].abs_diff(b.index[axis]);
        m = m.max(d);
    }
    m
}

/// Equal-depth adjacent nodes (excluding the node itself), indexed by node
/// id. Computed in one ascending pass: a node's colleagues are always
/// children of its parent or of its parent's colleagues.
pub fn colleague_lists(tree: &Tree) -> Vec<Vec<u32>> {
    let dim = tree.config.dim;
    let mut coll: Vec<Vec<u32>> = vec![Vec::new(); tree.nodes.len()];
    for id in 1..tree.nodes.len() as u32 {
        let node = &tree.nodes[id as usize];
        let cell = node.cell(dim);
        let parent = node.parent.unwrap();
        let mut mine = Vec::new();
        let scan = |candidate: u32, mine: &mut Vec<u32>| {
            for &ch in &tree.nodes[candidate as usize].children {
                if ch != id && offset_inf(&tree.nodes[ch as usize].cell(dim), &cell) <= 1 {
                    mine.push(ch);
                }
            }
        };
        scan(parent, &mut mine);
        for &pc in &coll[parent as usize] {
            scan(pc, &mut mine);
        }
        mine.sort_unstable();
        coll[id as usize] = mine;
    }
    coll
}

/// Walk every U/V/W/X pair of the tree once, in a deterministic order.
pub fn visit_interaction_pairs(tree: &Tree, visitor: &mut impl ListVisitor) {
    let dim = tree.config.dim;
    let coll = colleague_lists(tree);

    for id in 0..tree.nodes.len() as u32 {
        let node = &tree.nodes[id as usize];
        let cell = node.cell(dim);

        // V: separated children of the parent's colleagues. Children of
        // colleagues at offset <= 1 are colleagues; at offset >= 2 they are
        // separated with touching parents, which is exactly V membership.
        if let Some(parent) = node.parent {
            for &pc in &coll[parent as usize] {
                for &ch in &tree.nodes[pc as usize].children {
                    if offset_inf(&tree.nodes[ch as usize].cell(dim), &cell) >= 2 {
                        visitor.on_v(id, ch);
                    }
                }
            }
        }

        if !node.is_leaf() {
            continue;
        }

        // U: self, equal-depth adjacent leaves, and shallower adjacent
        // leaves (found as leaf colleagues of the ancestors).
        visitor.on_u(id, id);
        for &a in &coll[id as usize] {
            if tree.nodes[a as usize].is_leaf() {
                visitor.on_u(id, a);
            }
        }
        let mut anc = node.parent;
        while let Some(up) = anc {
            for &a in &coll[up as usize] {
                let an = &tree.nodes[a as usize];
                if an.is_leaf() && adjacent(&an.cell(dim), &cell) {
                    visitor.on_u(id, a);
                }
            }
            anc = tree.nodes[up as usize].parent;
        }

        // Deeper pairs: descend the subtrees of non-leaf colleagues. A
        // child that still touches the leaf is either a deeper U leaf or
        // descended further; a child that no longer touches has a touching
        // parent, which is W membership (and, mirrored, X membership).
        let mut stack: Vec<u32> = Vec::new();
        for &a in &coll[id as usize] {
            if !tree.nodes[a as usize].is_leaf() {
                stack.extend_from_slice(&tree.nodes[a as usize].children);
            }
        }
        while let Some(g) = stack.pop() {
            let gn = &tree.nodes[g as usize];
            if adjacent(&gn.cell(dim), &cell) {
                if gn.is_leaf() {
                    visitor.on_u(id, g);
                } else {
                    stack.extend_from_slice(&gn.children);
                }
            } else {
                visitor.on_w(id, g);
                visitor.on_x(g, id);
            }
        }
    }
}

/// Materialized interaction lists, indexed by node id. U and W are empty
/// for non-leaf nodes.
#[derive(Debug, Clone)]
pub struct InteractionLists {
    pub u: Vec<Vec<u32>>,
    pub v: Vec<Vec<u32>>,
    pub w: Vec<Vec<u32>>,
    pub x: Vec<Vec<u32>>,
}

struct Collector {
    lists: InteractionLists,
}

impl ListVisitor for Collector {
    fn on_u(&mut self, c: u32, a: u32) {
        self.lists.u[c as usize].push(a);
    }
    fn on_v(&mut self, c: u32, a: u32) {
        self.lists.v[c as usize].push(a);
    }
    fn on_w(&mut self, c: u32, a: u32) {
        self.lists.w[c as usize].push(a);
    }
    fn on_x(&mut self, c: u32, a: u32) {
        self.lists.x[c as usize].push(a);
    }
}

/// Build all four lists for every node.
pub fn build_interaction_lists(tree: &Tree) -> InteractionLists {
    let n = tree.nodes.len();
    let mut collector = Collector {
        lists: InteractionLists {
            u: vec![Vec::new(); n],
            v: vec![Vec::new(); n],
            w: vec![Vec::new(); n],
            x: vec![Vec::new(); n],
        },
    };
    visit_interaction_pairs(tree, &mut collector);
    for list in [
        &mut collector.lists.u,
        &mut collector.lists.v,
        &mut collector.lists.w,
        &mut collector.lists.x,
    ] {
        for l in list.iter_mut() {
            l.sort_unstable();
        }
    }
    collector.lists
}

/// Directed out-degree of leaf `c` toward adjacent leaves that are no
/// deeper than itself (excluding the self pair). In any tree this is at
/// most `3^dim - 1`, which is what bounds the total number of direct
/// near-field pairs.
pub fn shallow_adjacent_degree(tree: &Tree, lists: &InteractionLists, c: u32) -> usize {
    let depth = tree.nodes[c as usize].depth;
    lists.u[c as usize]
        .iter()
        .filter(|&&a| a != c && tree.nodes[a as usize].depth <= depth)
        .count()
}

/// The deepest divided node (or root) at or above `id`, hopping through
/// singleton chains: where expansion work for `id`'s subtree actually
/// happens on the coarse side.
pub fn divided_anchor(tree: &Tree, id: u32) -> u32 {
    let node = &tree.nodes[id as usize];
    if id == 0 || matches!(node.kind, NodeKind::Divided) {
        id
    } else {
        node.divided_parent.unwrap()
    }
}

#[cfg(test)]
mod tests;
