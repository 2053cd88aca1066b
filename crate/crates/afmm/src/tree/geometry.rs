//! Exact integer geometry for tree cells.
//!
//! Cells live on dyadic lattices: a node at depth `l` occupies the cube
//! `[i * 2^-l, (i+1) * 2^-l]` per axis, addressed by the integer anchor `i`.
//! All relation predicates (adjacency, vicinity overlap, separation) are
//! evaluated on a common lattice in integer arithmetic so they stay exact at
//! depths where floating-point cell coordinates would round.
//!
//! Two kinds of overlap are distinguished:
//!
//! * *adjacency* uses closed cubes, so cells touching in a face, edge or
//!   corner are adjacent;
//! * *vicinity* membership uses open interiors, so a cube merely touching
//!   the boundary of a vicinity region does not count as meeting it.
//!
//! The open-interior rule is what makes the vicinity of a cell consist of
//! its 3^d - 1 potential colleagues: on a common lattice, a cube meets the
//! vicinity of `C` exactly when it overlaps a potential colleague cube of
//! `C` in volume, not merely in a boundary point.

/// A dyadic lattice cell: per-axis integer anchors at a given depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub depth: u32,
    pub index: [u128; 3],
    pub dim: usize,
}

impl Cell {
    /// Parent cell (depth 0 has no parent).
    pub fn parent(&self) -> Option<Cell> {
        if self.depth == 0 {
            return None;
        }
        let mut index = [0u128; 3];
        for a in 0..self.dim {
            index[a] = self.index[a] >> 1;
        }
        Some(Cell { depth: self.depth - 1, index, dim: self.dim })
    }

    /// Per-axis closed integer interval `[lo, hi]` on the lattice of
    /// `common_depth >= self.depth`.
    fn span(&self, axis: usize, common_depth: u32) -> (i128, i128) {
        let shift = common_depth - self.depth;
        let lo = (self.index[axis] as i128) << shift;
        (lo, lo + (1i128 << shift))
    }
}

/// Closed cubes intersect (touching counts). This is the adjacency relation.
pub fn adjacent(a: &Cell, b: &Cell) -> bool {
    debug_assert_eq!(a.dim, b.dim);
    let g = a.depth.max(b.depth);
    for axis in 0..a.dim {
        let (alo, ahi) = a.span(axis, g);
        let (blo, bhi) = b.span(axis, g);
        if alo > bhi || blo > ahi {
            return false;
        }
    }
    true
}

/// The cube of `a` meets the vicinity of `c` (the union of the potential
/// colleague cubes of `c`) in an interior point.
pub fn meets_vicinity(a: &Cell, c: &Cell) -> bool {
    debug_assert_eq!(a.dim, c.dim);
    let g = a.depth.max(c.depth);
    let e = 1i128 << (g - c.depth); // edge of c on the common lattice
    for axis in 0..a.dim {
        let (alo, ahi) = a.span(axis, g);
        let (clo, chi) = c.span(axis, g);
        // Vicinity interval, dilated by one own-edge on both sides.
        let vlo = clo - e;
        let vhi = chi + e;
        if alo >= vhi || vlo >= ahi {
            return false;
        }
    }
    true
}

/// `a` is separated from `c`: `a` meets the vicinity of the parent of `c`
/// but not the vicinity of `c` itself. Nothing is separated from the root.
pub fn separated(a: &Cell, c: &Cell) -> bool {
    match c.parent() {
        None => false,
        Some(p) => !meets_vicinity(a, c) && meets_vicinity(a, &p),
    }
}

/// `a` is well-separated from `c`: separated, and `a` is no deeper than `c`.
pub fn well_separated(a: &Cell, c: &Cell) -> bool {
    a.depth <= c.depth && separated(a, c)
}
