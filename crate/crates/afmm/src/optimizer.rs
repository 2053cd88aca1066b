//! Parameter tuning: cost sweeps over `(lmax, t)`, the uniform-grid
//! heuristic model and its closed-form optimum, near-optimal threshold
//! intervals, and box-counting dimension estimation from built trees.
//!
//! All sweep costs are modeled cycles computed from structure alone
//! ([`crate::costmodel`]), so results are machine-independent and
//! reproducible; no field evaluation runs during a sweep.

use crate::costmodel::{count_operations, cycle_breakdown, CostTable, CycleBreakdown};
use crate::pointgen::PointSet;
use crate::tree::{build_tree, max_points_at_depth, occupancy_profile, Tree, TreeConfig};
use crate::{Error, Result};

/// One evaluated `(lmax, t)` pair.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SweepCell {
    /// Depth cap; `None` means a pure-threshold build.
    pub lmax: Option<u32>,
    pub t: usize,
    /// Whether this cell reproduces the single-threshold rule at its cap:
    /// `t` equals the largest cap-depth leaf occupancy, so the cap never
    /// actually bites.
    pub conventional: bool,
    /// Depth the build actually reached.
    pub depth: u32,
    pub leaves: u64,
    pub counts: crate::engine::OperationCounts,
    pub cycles: CycleBreakdown,
    pub total_cycles: f64,
}

/// Cost grid over depth caps and thresholds.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SweepResult {
    pub n: usize,
    pub r: usize,
    pub dim: usize,
    pub cells: Vec<SweepCell>,
    /// Largest cap-depth leaf occupancy per swept cap, from a `t = 1`
    /// build: the threshold at which the cap stops mattering.
    pub s_at_cap: Vec<(u32, u64)>,
    /// Index of the cheapest cell.
    pub argmin: usize,
    /// Index of the cheapest single-threshold-equivalent cell.
    pub argmin_conventional: Option<usize>,
}

impl SweepResult {
    pub fn best(&self) -> &SweepCell {
        &self.cells[self.argmin]
    }

    pub fn best_conventional(&self) -> Option<&SweepCell> {
        self.argmin_conventional.map(|i| &self.cells[i])
    }
}

fn evaluate_cell(
    points: &PointSet,
    lmax: Option<u32>,
    t: usize,
    r: usize,
    table: &CostTable,
) -> Result<(Tree, SweepCell)> {
    let tree = build_tree(
        points,
        TreeConfig { threshold: t, max_depth: lmax, dim: points.dim, enable_wx: true },
    )?;
    let counts = count_operations(&tree, true);
    let cycles = cycle_breakdown(&counts, table, r, points.dim);
    let cell = SweepCell {
        lmax,
        t,
        conventional: false,
        depth: tree.depth(),
        leaves: tree.nodes.iter().filter(|n| n.is_leaf()).count() as u64,
        counts,
        cycles,
        total_cycles: cycles.total(),
    };
    Ok((tree, cell))
}

/// Evaluate modeled cycles on the grid `caps x thresholds`, adding for each
/// cap the single-threshold-equivalent cell `(cap, s(cap))` when that
/// threshold is not already on the grid.
pub fn sweep(
    points: &PointSet,
    caps: &[u32],
    thresholds: &[usize],
    r: usize,
    table: &CostTable,
) -> Result<SweepResult> {
    if caps.is_empty() || thresholds.is_empty() {
        return Err(Error::Parameter("sweep needs at least one cap and one threshold".into()));
    }
    if thresholds.iter().any(|&t| t == 0) {
        return Err(Error::Parameter("thresholds must be >= 1".into()));
    }
    let mut cells = Vec::new();
    let mut s_at_cap = Vec::new();
    for &cap in caps {
        // The t = 1 build determines the conventional threshold for this cap.
        let (probe, cell) = evaluate_cell(points, Some(cap), 1, r, table)?;
        let s = max_points_at_depth(&probe, cap) as usize;
        s_at_cap.push((cap, s as u64));
        for &t in thresholds {
            let mut cell = if t == 1 {
                cell.clone()
            } else {
                evaluate_cell(points, Some(cap), t, r, table)?.1
            };
            cell.conventional = t == s;
            cells.push(cell);
        }
        if !thresholds.contains(&s) {
            let mut cell = evaluate_cell(points, Some(cap), s, r, table)?.1;
            cell.conventional = true;
            cells.push(cell);
        }
    }
    let argmin = cells
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cycles.total_cmp(&b.1.total_cycles))
        .map(|(i, _)| i)
        .expect("non-empty grid");
    let argmin_conventional = cells
        .iter()
        .enumerate()
        .filter(|(_, c)| c.conventional)
        .min_by(|a, b| a.1.total_cycles.total_cmp(&b.1.total_cycles))
        .map(|(i, _)| i);
    Ok(SweepResult {
        n: points.len(),
        r,
        dim: points.dim,
        cells,
        s_at_cap,
        argmin,
        argmin_conventional,
    })
}

/// Inputs of the uniform-grid cost model: direct-interaction unit cost
/// `alpha`, cross-transfer unit cost `beta`, set dimension `d_h`, and point
/// count `n`.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct HeuristicParams {
    pub alpha: f64,
    pub beta: f64,
    pub d_h: f64,
    pub n: f64,
}

impl HeuristicParams {
    pub fn new(alpha: f64, beta: f64, d_h: f64, n: f64) -> Result<Self> {
        if !(alpha >= 0.0 && beta >= 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::Parameter("alpha and beta must be finite and >= 0".into()));
        }
        if !(d_h > 0.0 && d_h <= 3.0) {
            return Err(Error::Parameter(format!("dimension must lie in (0, 3] (got {d_h})")));
        }
        if !(n >= 1.0) {
            return Err(Error::Parameter("point count must be >= 1".into()));
        }
        Ok(HeuristicParams { alpha, beta, d_h, n })
    }
}

/// The two components of the model cost at a (possibly fractional) depth:
/// near-field direct work and cross-transfer work.
///
/// A set of dimension `d_h` fills about `2^(d_h l)` cells at depth `l`,
/// each holding `n / 2^(d_h l)` points with `3^d_h` near neighbours; every
/// occupied cell down the tree pays for up to `6^d_h - 3^d_h` cross
/// transfers.
pub fn heuristic_terms(p: &HeuristicParams, l: f64) -> (f64, f64) {
    let d = p.d_h;
    let boxes = 2f64.powf(d); // occupied cells multiply by this per level
    let near = p.alpha * 3f64.powf(d) * p.n * p.n * boxes.powf(-l);
    let transfer_slots = 6f64.powf(d) - 3f64.powf(d);
    // Occupied cells over depths 0..=l, as a geometric sum.
    let total_cells = (boxes.powf(l + 1.0) - 1.0) / (boxes - 1.0);
    (near, p.beta * transfer_slots * total_cells)
}

/// Model cost of running at depth `l`.
pub fn heuristic_cost(p: &HeuristicParams, l: u32) -> f64 {
    let (near, far) = heuristic_terms(p, l as f64);
    near + far
}

/// Closed-form minimizer of the model: the continuous optimal depth and
/// the cost there. Requires `alpha > 0` and `beta > 0`.
pub fn heuristic_optimum(p: &HeuristicParams) -> (f64, f64) {
    let d = p.d_h;
    let l_opt = (p.alpha / p.beta).log2() / (2.0 * d) + p.n.log2() / d - 0.5;
    let cost_opt = 3f64.powf(d)
        * (2.0 * (p.alpha * p.beta).sqrt() * p.n * 2f64.powf(d / 2.0) - p.beta);
    (l_opt, cost_opt)
}

/// Rate at which the log of the optimal model cost grows with dimension
/// (point count and unit costs held fixed): `ln 3 + (ln 2)/2`, about 1.445.
pub fn ln_cost_slope() -> f64 {
    3f64.ln() + 0.5 * std::f64::consts::LN_2
}

/// Fit `(alpha, beta)` to measured `(depth, direct + transfer cycles)`
/// samples by least squares on the relative residuals of the model.
pub fn fit_alpha_beta_from_samples(
    samples: &[(u32, f64)],
    d_h: f64,
    n: f64,
) -> Result<HeuristicParams> {
    if samples.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 depth samples to fit the model (got {})",
            samples.len()
        )));
    }
    let unit_near = HeuristicParams::new(1.0, 0.0, d_h, n)?;
    let unit_far = HeuristicParams::new(0.0, 1.0, d_h, n)?;
    // Weighted normal equations for min sum ((a g1 + b g2 - y) / y)^2.
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut informative = 0usize;
    for &(l, y) in samples {
        if !(y > 0.0) {
            continue;
        }
        informative += 1;
        let g1 = heuristic_cost(&unit_near, l);
        let g2 = heuristic_cost(&unit_far, l);
        let w = 1.0 / (y * y);
        a11 += w * g1 * g1;
        a12 += w * g1 * g2;
        a22 += w * g2 * g2;
        b1 += g1 / y;
        b2 += g2 / y;
    }
    if informative < 2 {
        return Err(Error::Fit("fewer than 2 informative depth samples".into()));
    }
    let det = a11 * a22 - a12 * a12;
    if det.abs() <= 1e-12 * a11.abs().max(a22.abs()).max(1e-300) {
        return Err(Error::Fit("degenerate depth samples: basis columns are collinear".into()));
    }
    let alpha = (b1 * a22 - b2 * a12) / det;
    let beta = (a11 * b2 - a12 * b1) / det;
    if !(alpha.is_finite() && beta.is_finite() && alpha >= 0.0 && beta >= 0.0) {
        return Err(Error::Fit(format!(
            "fit produced out-of-range unit costs alpha={alpha}, beta={beta}"
        )));
    }
    HeuristicParams::new(alpha, beta, d_h, n)
}

/// Fit the model against a sweep's `t = 1` column.
pub fn fit_alpha_beta(sweep: &SweepResult, d_h: f64) -> Result<HeuristicParams> {
    let mut samples: Vec<(u32, f64)> = sweep
        .cells
        .iter()
        .filter(|c| c.t == 1 && c.lmax.is_some())
        .map(|c| (c.lmax.unwrap(), c.cycles.p2p + c.cycles.m2l))
        .collect();
    samples.sort_unstable_by_key(|&(l, _)| l);
    samples.dedup_by_key(|&mut (l, _)| l);
    fit_alpha_beta_from_samples(&samples, d_h, sweep.n as f64)
}

/// Near-optimal threshold range for one point count.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct OptimalInterval {
    pub n: usize,
    /// Smallest threshold within tolerance of the minimum.
    pub t_lo: usize,
    /// Largest threshold within tolerance of the minimum.
    pub t_hi: usize,
    /// The cheapest threshold itself.
    pub t_best: usize,
    pub min_cycles: f64,
}

/// Aggregated near-optimal threshold statistics across a point-count
/// sweep in pure-threshold (uncapped) mode.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ThresholdIntervals {
    pub per_n: Vec<OptimalInterval>,
    /// Smallest interval start.
    pub t_min: usize,
    /// Largest interval start: the first threshold inside every interval
    /// when they all overlap.
    pub t_cut: usize,
    /// Smallest interval end — the other natural reading of "the cut".
    pub t_cut_intersection: usize,
    /// Largest interval end.
    pub t_max: usize,
    pub tolerance: f64,
    pub warnings: Vec<String>,
}

impl ThresholdIntervals {
    /// `sqrt(t_max / t_min)`: when the three key thresholds sit in the
    /// geometric progression `t_max / t_cut = t_cut / t_min = rho`, this
    /// recovers `rho`, which tracks `2^d` for a set of dimension `d`.
    pub fn fitted_ratio(&self) -> f64 {
        (self.t_max as f64 / self.t_min as f64).sqrt()
    }
}

/// Thresholds spaced by roughly `2^(1/4)` from 1 to `hi` inclusive. Quarter
/// octaves keep the relative quantisation error of interval endpoints below
/// ten percent, which the fitted interval ratio inherits.
pub fn threshold_grid(hi: usize) -> Vec<usize> {
    let mut grid = vec![];
    let mut x = 1.0f64;
    loop {
        let t = x.round() as usize;
        if t > hi {
            break;
        }
        if grid.last() != Some(&t) {
            grid.push(t);
        }
        x *= std::f64::consts::SQRT_2.sqrt();
    }
    if grid.last() != Some(&hi) {
        grid.push(hi);
    }
    grid
}

/// Sweep thresholds (uncapped builds) for each point count and extract the
/// near-optimal intervals and their aggregate statistics.
///
/// `generate` maps a point count to its point set; counts must be strictly
/// increasing. A non-contiguous near-optimal set is reduced to its widest
/// contiguous run with a warning.
pub fn threshold_intervals(
    generate: impl Fn(usize) -> Result<PointSet>,
    n_list: &[usize],
    r: usize,
    table: &CostTable,
    tolerance: f64,
) -> Result<ThresholdIntervals> {
    if n_list.is_empty() {
        return Err(Error::Parameter("need at least one point count".into()));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter("point counts must be strictly increasing".into()));
    }
    if !(tolerance > 0.0) {
        return Err(Error::Parameter("tolerance must be positive".into()));
    }
    let mut per_n = Vec::new();
    let mut warnings = Vec::new();
    for &n in n_list {
        let points = generate(n)?;
        let grid = threshold_grid((n / 2).max(1));
        let mut costs = Vec::with_capacity(grid.len());
        for &t in &grid {
            let (_, cell) = evaluate_cell(&points, None, t, r, table)?;
            costs.push(cell.total_cycles);
        }
        let (best_idx, &min_cycles) = costs
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty grid");
        let cutoff = min_cycles * (1.0 + tolerance);
        let qualify: Vec<bool> = costs.iter().map(|&c| c <= cutoff).collect();
        // Contiguous qualifying runs; keep the widest.
        let mut runs: Vec<(usize, usize)> = Vec::new();
        let mut start = None;
        for (i, &q) in qualify.iter().enumerate() {
            match (q, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    runs.push((s, i - 1));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push((s, qualify.len() - 1));
        }
        if runs.len() > 1 {
            warnings.push(format!(
                "n={n}: near-optimal thresholds split into {} runs; keeping the widest",
                runs.len()
            ));
        }
        let (lo, hi) = runs
            .into_iter()
            .max_by_key(|&(s, e)| (e - s, usize::MAX - s))
            .expect("argmin qualifies, so at least one run exists");
        per_n.push(OptimalInterval {
            n,
            t_lo: grid[lo],
            t_hi: grid[hi],
            t_best: grid[best_idx],
            min_cycles,
        });
    }
    let t_min = per_n.iter().map(|i| i.t_lo).min().unwrap();
    let t_cut = per_n.iter().map(|i| i.t_lo).max().unwrap();
    let t_cut_intersection = per_n.iter().map(|i| i.t_hi).min().unwrap();
    let t_max = per_n.iter().map(|i| i.t_hi).max().unwrap();
    if t_cut > t_cut_intersection {
        warnings.push("optimum intervals do not all overlap".into());
    }
    Ok(ThresholdIntervals {
        per_n,
        t_min,
        t_cut,
        t_cut_intersection,
        t_max,
        tolerance,
        warnings,
    })
}

/// Estimate the set's dimension from the tree's occupancy growth.
///
/// Fits `log2(occupied_l) = d*l + b` by weighted least squares and returns
/// the slope `d`. The window covers levels past the root but shallow enough
/// that cells still hold two or more points on average; deeper levels only
/// reflect that the input is a finite sample, and the root level is trivially
/// fully occupied. Fitting the slope rather than averaging `c_l =
/// log2(occupied_l)/l` matters: each `c_l` equals `d + b/l` for some
/// prefactor term `b`, so averaging is biased at any finite depth while the
/// fit cancels the prefactor exactly (it extrapolates `c_l` to its deep
/// limit). Weights grow as `l^1.5`: the limit lives at the tail, but a
/// harder tail emphasis would amplify the log-periodic wobble that
/// self-similar sets show across levels.
pub fn estimate_dimension(tree: &Tree) -> Result<f64> {
    let depth = tree.depth() as usize;
    if depth < 3 {
        return Err(Error::InsufficientData(format!(
            "dimension estimation needs tree depth >= 3 (got {depth})"
        )));
    }
    let profile = occupancy_profile(tree);
    let n = tree.points.len() as f64;
    let mut window = Vec::new();
    for l in 1..depth {
        if n / profile.occupied[l] as f64 >= 2.0 {
            window.push(l);
        } else {
            break;
        }
    }
    if window.len() < 2 {
        return Err(Error::InsufficientData(
            "fewer than 2 occupancy levels before single-point saturation".into(),
        ));
    }
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &l in &window {
        let w = (l as f64) * (l as f64).sqrt();
        let x = l as f64;
        let y = (profile.occupied[l] as f64).log2();
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    Ok((sw * sxy - sx * sy) / (sw * sxx - sx * sx))
}
