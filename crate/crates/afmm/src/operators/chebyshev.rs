//! One-dimensional Chebyshev interpolation primitives.
//!
//! Expansions are anchored at the roots of the degree-`r` Chebyshev
//! polynomial of the first kind, and values move between point sets through
//! the associated interpolation function
//!
//! ```text
//! S_r(x, y) = 1/r + (2/r) * sum_{k=1}^{r-1} T_k(x) T_k(y)
//! ```
//!
//! which reproduces polynomials of degree below `r` exactly and has rows
//! summing to one. All higher-dimensional operators are tensor products of
//! these one-dimensional pieces.

use crate::Mat;

/// Roots of `T_r` on `[-1, 1]`, in the natural index order
/// `cos(pi (2i+1) / (2r))` (descending in `x`).
pub fn nodes(r: usize) -> Vec<f64> {
    (0..r)
        .map(|i| (std::f64::consts::PI * (2 * i + 1) as f64 / (2 * r) as f64).cos())
        .collect()
}

/// `[T_0(x), ..., T_{r-1}(x)]` by the three-term recurrence.
pub fn chebyshev_row(x: f64, r: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(r);
    t.push(1.0);
    if r > 1 {
        t.push(x);
    }
    for k in 2..r {
        t.push(2.0 * x * t[k - 1] - t[k - 2]);
    }
    t
}

/// Interpolation weights `S_r(x, n_j)` of one point against the nodes.
pub fn weights(x: f64, r: usize) -> Vec<f64> {
    let tx = chebyshev_row(x, r);
    nodes(r)
        .iter()
        .map(|&n| {
            let tn = chebyshev_row(n, r);
            let mut s = 1.0;
            for k in 1..r {
                s += 2.0 * tx[k] * tn[k];
            }
            s / r as f64
        })
        .collect()
}

/// Interpolation matrix: row `i` holds the node weights of `targets[i]`.
pub fn interp_matrix(targets: &[f64], r: usize) -> Mat {
    let node_rows: Vec<Vec<f64>> = nodes(r).iter().map(|&n| chebyshev_row(n, r)).collect();
    let mut m = Mat::zeros(targets.len(), r);
    for (i, &x) in targets.iter().enumerate() {
        let tx = chebyshev_row(x, r);
        for (j, tn) in node_rows.iter().enumerate() {
            let mut s = 1.0;
            for k in 1..r {
                s += 2.0 * tx[k] * tn[k];
            }
            m.set(i, j, s / r as f64);
        }
    }
    m
}

/// Affine map from `[lo, hi]` onto the reference interval `[-1, 1]`.
#[inline]
pub fn to_reference(x: f64, lo: f64, hi: f64) -> f64 {
    (2.0 * x - lo - hi) / (hi - lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_chebyshev_roots() {
        for r in 1..9 {
            for &n in &nodes(r) {
                let t = chebyshev_row(n, r + 1)[r];
                assert!(t.abs() < 1e-12, "T_{r}({n}) = {t}");
            }
        }
    }

    #[test]
    fn rows_sum_to_one() {
        for r in 2..9 {
            for &x in &[-1.0, -0.73, 0.0, 0.2, 0.999, 1.0] {
                let s: f64 = weights(x, r).iter().sum();
                assert!((s - 1.0).abs() < 1e-13, "r={r} x={x} sum={s}");
            }
        }
    }

    #[test]
    fn identity_at_the_nodes() {
        let r = 6;
        let ns = nodes(r);
        let m = interp_matrix(&ns, r);
        for i in 0..r {
            for j in 0..r {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((m.get(i, j) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reproduces_low_degree_polynomials() {
        let p = |x: f64| 3.0 * x * x * x - 2.0 * x + 1.0;
        let r = 4;
        let ns = nodes(r);
        let vals: Vec<f64> = ns.iter().map(|&n| p(n)).collect();
        for &x in &[-0.9, -0.31, 0.0, 0.44, 0.87] {
            let w = weights(x, r);
            let got: f64 = w.iter().zip(&vals).map(|(a, b)| a * b).sum();
            assert!((got - p(x)).abs() < 1e-12, "x={x} got={got}");
        }
    }

    #[test]
    fn interpolating_through_an_intermediate_grid_is_exact() {
        // Two-stage interpolation equals direct interpolation because each
        // column function S(., n_m) is itself a polynomial of degree < r.
        let r = 5;
        // Final targets inside [0, 1] mapped against the [-1, 1] grid of a
        // coarse interval, directly and via a middle interval [0, 1/2].
        let targets = [0.03, 0.11, 0.22, 0.61];
        let direct = interp_matrix(
            &targets.map(|x| to_reference(x, 0.0, 1.0)),
            r,
        );
        let mid_nodes: Vec<f64> = nodes(r)
            .iter()
            .map(|&n| 0.25 + 0.25 * n) // middle-interval nodes in [0, 1/2]
            .collect();
        let stage1 = interp_matrix(
            &targets.map(|x| to_reference(x, 0.0, 0.5)),
            r,
        );
        let stage2 = interp_matrix(
            &mid_nodes.iter().map(|&x| to_reference(x, 0.0, 1.0)).collect::<Vec<_>>(),
            r,
        );
        let composed = stage1.matmul(&stage2);
        assert!(direct.max_abs_diff(&composed) < 1e-12);
    }
}
