//! Release gate: end-to-end checks of accuracy, complexity, and tuning
//! behaviour. Each test prints exactly one `gate <name>: pass/FAIL` line so
//! the suite doubles as a scoreboard (`cargo test --test acceptance --
//! --nocapture`).

use afmm::costmodel::{default_table, verify_complexity_bounds, CostTable};
use afmm::engine::{direct_sum, relative_error, run_fmm, RunOptions};
use afmm::kernel::Laplace;
use afmm::optimizer::{
    estimate_dimension, sweep, threshold_grid, threshold_intervals, SweepCell, SweepResult,
};
use afmm::pointgen::{
    cantor_dimension, gamma_for_dimension, generate_cantor, generate_cantor_sampled,
    generate_singleton_stress, generate_standard, FractalSpec, IntensityRule, Placement,
    PointSet, StandardKind,
};
use afmm::tree::lists::build_interaction_lists;
use afmm::tree::{build_tree, extend_tree, TreeConfig};

/// Bail out of a gate body with a formatted failure message.
macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !($cond) {
            return Err(format!($($arg)+));
        }
    };
}

fn gate(label: &str, body: impl FnOnce() -> Result<String, String>) {
    match body() {
        Ok(detail) => println!("gate {label}: pass ({detail})"),
        Err(detail) => {
            println!("gate {label}: FAIL ({detail})");
            panic!("gate {label}: {detail}");
        }
    }
}

fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    (slope, (sy - slope * sx) / n)
}

fn r_squared(xs: &[f64], ys: &[f64]) -> f64 {
    let (m, b) = fit_line(xs, ys);
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - (m * x + b)).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

fn unit_threshold(cap: Option<u32>, dim: usize) -> TreeConfig {
    TreeConfig { threshold: 1, max_depth: cap, dim, enable_wx: true }
}

/// Random points of the self-similar measure with the requested growth
/// exponent, with random source intensities.
fn sampled_set(d_h: f64, n: usize, seed: u64) -> PointSet {
    let gamma = gamma_for_dimension(d_h, 3).unwrap();
    generate_cantor_sampled(gamma, 3, n, seed, Placement::RandomInLeaf, IntensityRule::RandomUniform)
        .unwrap()
}

/// Depth caps bracketing the unit-threshold cost optimum `~ log2(n) / d`
/// for a set whose occupancy grows with exponent `d` (the optimum sits
/// below that estimate because one far translation outweighs one kernel
/// pair).
fn caps_around(d: f64, n: usize) -> Vec<u32> {
    let center = ((n as f64).log2() / d).round() as i64;
    let lo = (center - 6).max(1);
    let hi = (center + 2).min(22);
    (lo as u32..=hi as u32).collect()
}

/// Every depth cap from 1 to just past the natural depth `log2(n) / d`.
/// When the threshold is free too, the best cap can sit many levels below
/// the unit-threshold optimum, so the range must not be clipped from below.
fn caps_full(d: f64, n: usize) -> Vec<u32> {
    let hi = (((n as f64).log2() / d).ceil() as i64 + 2).clamp(3, 22);
    (1..=hi as u32).collect()
}

fn best_unit_threshold_cell(sweep: &SweepResult) -> &SweepCell {
    sweep
        .cells
        .iter()
        .filter(|c| c.t == 1)
        .min_by(|a, b| a.total_cycles.total_cmp(&b.total_cycles))
        .expect("sweep grids always include t = 1")
}

type Family = (&'static str, Box<dyn Fn(usize, u64) -> PointSet>);

fn point_families() -> Vec<Family> {
    vec![
        ("uniform", Box::new(|n, s| generate_standard(StandardKind::Uniform, n, s).unwrap())),
        ("spiral", Box::new(|n, s| generate_standard(StandardKind::Spiral, n, s).unwrap())),
        (
            "cantor",
            Box::new(|n, s| {
                generate_cantor_sampled(
                    1.0 / 3.0,
                    3,
                    n,
                    s,
                    Placement::RandomInLeaf,
                    IntensityRule::RandomUniform,
                )
                .unwrap()
            }),
        ),
    ]
}

fn table() -> CostTable {
    default_table().unwrap()
}

/// Answers match brute-force summation to 1e-4 at order 6, and raising the
/// order tightens the answer in at least 19 of 20 seeded trials.
#[test]
fn matches_direct_summation_and_converges_in_order() {
    gate("oracle-accuracy", || {
        let table = table();
        let mut max_err: f64 = 0.0;
        for (label, make) in point_families() {
            for &n in &[100usize, 1000, 5000] {
                let pts = make(n, 40 + n as u64);
                let caps: Vec<u32> = (1..=6).collect();
                let sw = sweep(&pts, &caps, &[1], 6, &table).unwrap();
                let cap = best_unit_threshold_cell(&sw).lmax.unwrap();
                let tree = build_tree(&pts, unit_threshold(Some(cap), 3)).unwrap();
                let run =
                    run_fmm(&tree, &Laplace, &RunOptions { order: 6, ..Default::default() })
                        .unwrap();
                let exact = direct_sum(&pts.positions, &pts.intensities, &Laplace).unwrap();
                let err = relative_error(&run.potentials, &exact);
                ensure!(err <= 1e-4, "{label} n={n} cap={cap}: rel err {err:.3e} above 1e-4");
                max_err = max_err.max(err);
            }
        }
        let mut ordered = 0;
        let families = point_families();
        for seed in 0..20u64 {
            let (_, make) = &families[(seed % 3) as usize];
            let pts = make(800, 900 + seed);
            let tree = build_tree(&pts, unit_threshold(Some(3), 3)).unwrap();
            let exact = direct_sum(&pts.positions, &pts.intensities, &Laplace).unwrap();
            let err_at = |order: usize| {
                let run = run_fmm(&tree, &Laplace, &RunOptions { order, ..Default::default() })
                    .unwrap();
                relative_error(&run.potentials, &exact)
            };
            let (e2, e4, e6) = (err_at(2), err_at(4), err_at(6));
            if e6 < e4 && e4 < e2 {
                ordered += 1;
            }
        }
        ensure!(ordered >= 19, "order refinement monotone in only {ordered}/20 trials");
        Ok(format!("max rel err {max_err:.2e}, order-monotone {ordered}/20"))
    });
}

/// Modeled cycles at per-size optimal parameters grow linearly in the
/// number of points on both a curve-like and a surface-like set.
#[test]
fn optimal_cost_scales_linearly_in_points() {
    gate("linear-complexity", || {
        let table = table();
        let sizes = [1_000usize, 3_000, 10_000, 30_000, 100_000];
        let cases: [(&str, f64, Box<dyn Fn(usize, u64) -> PointSet>); 2] = [
            (
                "spiral",
                1.0,
                Box::new(|n, s| generate_standard(StandardKind::Spiral, n, s).unwrap()),
            ),
            ("cantor-d2", 2.0, Box::new(|n, s| sampled_set(2.0, n, s))),
        ];
        let mut detail = Vec::new();
        for (label, d, make) in cases {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for &n in &sizes {
                let pts = make(n, 70 + n as u64);
                let grid = [1usize, 2, 4, 8, 16, 32, 64, 128];
                let sw = sweep(&pts, &caps_full(d, n), &grid, 4, &table).unwrap();
                xs.push((n as f64).ln());
                ys.push(sw.best().total_cycles.ln());
            }
            let (slope, _) = fit_line(&xs, &ys);
            ensure!(
                (slope - 1.0).abs() <= 0.15,
                "{label}: log-log slope {slope:.3} outside 1.00 +- 0.15"
            );
            detail.push(format!("{label} slope {slope:.3}"));
        }
        Ok(detail.join(", "))
    });
}

/// On fully deepened trees the child-surplus identity is exact, divided
/// nodes stay below the leaf count, and translation pairs stay below twice
/// the leaf count; the same structural bounds hold on the adaptive trees.
#[test]
fn split_identity_and_translation_bounds_hold() {
    gate("split-identity", || {
        let matrix: Vec<(&str, PointSet, usize)> = vec![
            ("uniform", generate_standard(StandardKind::Uniform, 2000, 11).unwrap(), 8),
            ("spiral", generate_standard(StandardKind::Spiral, 2000, 12).unwrap(), 8),
            (
                "cantor-grid",
                generate_cantor(&FractalSpec::cantor(1.0 / 3.0, 4, 3, 13)).unwrap(),
                4,
            ),
            ("cantor-d2", sampled_set(2.0, 3000, 14), 4),
            ("chain", generate_singleton_stress(5, 15).unwrap(), 1),
        ];
        let mut checked = 0;
        for (label, pts, t) in matrix {
            let config = TreeConfig {
                threshold: t,
                max_depth: None,
                dim: pts.dim,
                enable_wx: true,
            };
            let tree = build_tree(&pts, config).unwrap();
            let ext = extend_tree(&tree).unwrap();
            for (shape, tr) in [("adaptive", &tree), ("extended", &ext)] {
                let report = verify_complexity_bounds(tr);
                ensure!(
                    report.split_identity_holds && report.split_surplus == report.leaves - 1,
                    "{label}/{shape}: child surplus {} != leaves - 1 = {}",
                    report.split_surplus,
                    report.leaves - 1
                );
                ensure!(
                    report.divided_bound_holds,
                    "{label}/{shape}: divided {} exceeds leaves - 1",
                    report.divided
                );
                ensure!(
                    report.translation_bound_holds,
                    "{label}/{shape}: {} translation pairs reach 2 x {} leaves",
                    report.translation_pairs,
                    report.leaves
                );
                checked += 1;
            }
        }
        Ok(format!("{checked} trees checked exactly"))
    });
}

/// Forcing every leaf to the bottom level leaves nothing for the
/// leaf-to-distant-node operators to do.
#[test]
fn fully_deep_trees_have_no_leaf_expansion_traffic() {
    gate("extended-tree", || {
        let pts = generate_standard(StandardKind::Uniform, 3000, 21).unwrap();
        let config =
            TreeConfig { threshold: 1, max_depth: Some(4), dim: 3, enable_wx: false };
        let tree = build_tree(&pts, config).unwrap();
        ensure!(
            tree.leaf_ids().all(|id| tree.node(id).depth == 4),
            "some leaves sit above the depth cap"
        );
        let lists = build_interaction_lists(&tree);
        let w: usize = lists.w.iter().map(Vec::len).sum();
        let x: usize = lists.x.iter().map(Vec::len).sum();
        ensure!(w == 0 && x == 0, "expected empty deep lists, found {w} + {x} entries");
        let run = run_fmm(&tree, &Laplace, &RunOptions { order: 3, ..Default::default() })
            .unwrap();
        ensure!(
            run.counts.m2p_pairs == 0 && run.counts.p2l_pairs == 0,
            "leaf expansion operators ran {} + {} times",
            run.counts.m2p_pairs,
            run.counts.p2l_pairs
        );
        Ok("deep lists empty, zero cross-depth applications".into())
    });
}

/// A unit threshold is within 10% of the best threshold at the optimal
/// depth cap, and the leaf-expansion share of the bill only grows as the
/// threshold does.
#[test]
fn unit_threshold_is_near_optimal() {
    gate("unit-threshold", || {
        let table = table();
        let mut detail = Vec::new();
        for (d_h, seed) in [(1.0, 31u64), (2.0, 32u64)] {
            let pts = sampled_set(d_h, 100_000, seed);
            let probe = sweep(&pts, &caps_around(d_h, 100_000), &[1], 4, &table).unwrap();
            let cap = best_unit_threshold_cell(&probe).lmax.unwrap();
            let s = probe
                .s_at_cap
                .iter()
                .find(|(c, _)| *c == cap)
                .map(|&(_, s)| s as usize)
                .unwrap();
            let mut ts = vec![1usize, 2, 3, 4, 6, 8];
            let mut t = 12usize;
            while t < s {
                ts.push(t);
                t = (t as f64 * 1.5).round() as usize;
            }
            ts.retain(|&t| t <= s);
            let sw = sweep(&pts, &[cap], &ts, 4, &table).unwrap();
            // The sweep appends a cell for the single-threshold rule at
            // t = s; the share comparison below is about growing t under
            // the depth-capped rule, so keep that extra cell out of it
            // (it still competes in the cost minimum).
            let mut cells: Vec<&SweepCell> = sw.cells.iter().collect();
            cells.sort_by_key(|c| c.t);
            cells.dedup_by_key(|c| c.t);
            let unit = cells.iter().find(|c| c.t == 1).unwrap().total_cycles;
            let min = cells
                .iter()
                .map(|c| c.total_cycles)
                .fold(f64::INFINITY, f64::min);
            ensure!(
                unit <= 1.10 * min,
                "d={d_h}: t=1 costs {unit:.3e}, {:.1}% above the best {min:.3e}",
                (unit / min - 1.0) * 100.0
            );
            let shares: Vec<f64> = cells
                .iter()
                .filter(|c| !c.conventional)
                .map(|c| (c.cycles.m2p + c.cycles.p2l) / c.total_cycles)
                .collect();
            for w in shares.windows(2) {
                ensure!(
                    w[1] >= w[0] * 0.95,
                    "d={d_h}: leaf-expansion share fell from {:.4} to {:.4}",
                    w[0],
                    w[1]
                );
            }
            detail.push(format!("d={d_h}: t=1 overhead {:.1}%", (unit / min - 1.0) * 100.0));
        }
        Ok(detail.join(", "))
    });
}

/// The depth-cap-plus-threshold grid never loses to the single-threshold
/// rule, wins outright on sparse sets, and ties within 2% on space-filling
/// ones.
#[test]
fn depth_cap_beats_single_threshold_rule() {
    gate("double-threshold", || {
        let table = table();
        let n = 100_000;
        let cases: Vec<(String, f64, PointSet)> = [1.0, 1.5, 2.0, 2.5]
            .iter()
            .map(|&d| (format!("d={d}"), d, sampled_set(d, n, 50 + (d * 10.0) as u64)))
            .chain(std::iter::once((
                "d=3 (uniform)".to_string(),
                3.0,
                generate_standard(StandardKind::Uniform, n, 55).unwrap(),
            )))
            .collect();
        let mut detail = Vec::new();
        for (label, d, pts) in cases {
            let full = sweep(&pts, &caps_around(d, n), &[1, 2, 4, 8, 16, 32, 64, 128], 4, &table)
                .unwrap()
                .best()
                .total_cycles;
            // A depth cap of 30 is never reached by these sets, so this
            // sweep evaluates the pure single-threshold rule.
            let conv = sweep(&pts, &[30], &threshold_grid(2048), 4, &table)
                .unwrap()
                .best()
                .total_cycles;
            let gain = conv / full;
            if d <= 2.0 {
                ensure!(full < conv, "{label}: no strict win (full {full:.3e} vs {conv:.3e})");
            } else if d >= 3.0 {
                ensure!(
                    (full - conv).abs() <= 0.02 * conv,
                    "{label}: expected a near-tie, got full {full:.3e} vs conv {conv:.3e}"
                );
            } else {
                ensure!(
                    full <= conv * 1.0001,
                    "{label}: capped grid lost (full {full:.3e} vs {conv:.3e})"
                );
            }
            detail.push(format!("{label} gain {gain:.2}x"));
        }
        Ok(detail.join(", "))
    });
}

/// The optimal depth cap is linear in the reciprocal growth exponent, and
/// the optimal near-plus-far cost grows like `2^(slope * d)` with slope
/// between 1 and 1.5.
#[test]
fn optimal_depth_and_cost_follow_scaling_laws() {
    gate("scaling-laws", || {
        let table = table();
        let n = 100_000;
        let dims = [1.0, 1.25, 1.5, 2.0, 2.5, 3.0];
        let mut inv_d = Vec::new();
        let mut l_opt = Vec::new();
        let mut log_cost = Vec::new();
        for &d in &dims {
            let pts = if d >= 3.0 {
                generate_standard(StandardKind::Uniform, n, 60).unwrap()
            } else {
                sampled_set(d, n, 60 + (d * 100.0) as u64)
            };
            let grid = [1usize, 2, 4, 8, 16, 32, 64, 128];
            let sw = sweep(&pts, &caps_full(d, n), &grid, 4, &table).unwrap();
            // The depth law is stated for unit threshold; the cost law is
            // about the full optimum over both parameters.
            let at_unit = best_unit_threshold_cell(&sw);
            let best = sw.best();
            inv_d.push(1.0 / d);
            l_opt.push(at_unit.lmax.unwrap() as f64);
            log_cost.push((best.cycles.p2p + best.cycles.m2l).log2());
        }
        let r2 = r_squared(&inv_d, &l_opt);
        ensure!(r2 >= 0.9, "optimal depth vs 1/d: R^2 = {r2:.3} below 0.9");
        let (slope, _) = fit_line(&dims, &log_cost);
        ensure!(
            (1.0..=1.5).contains(&slope),
            "log2 cost vs d slope {slope:.3} outside [1.0, 1.5]"
        );
        Ok(format!("depth R^2 {r2:.3}, cost slope {slope:.2}"))
    });
}

/// On sets built from ever-longer single-occupancy chains, compressed
/// translations stay linear in the point count while hop-by-hop
/// translations blow up superlinearly.
#[test]
fn chain_sets_stay_linear_only_when_compressed() {
    gate("chain-compression", || {
        let mut prev_per_point = 0.0;
        let mut prev_ratio = 0.0;
        let mut last = String::new();
        // Step 6 would need partner offsets past the f64 significand, so
        // the generator caps the construction at five steps.
        for steps in 2..=5u32 {
            let pts = generate_singleton_stress(steps, 7).unwrap();
            let n = pts.len() as f64;
            let tree = build_tree(&pts, unit_threshold(None, pts.dim)).unwrap();
            let run = |modified| {
                let opts = RunOptions { order: 2, modified, ..Default::default() };
                run_fmm(&tree, &Laplace, &opts).unwrap().counts
            };
            let compressed = run(true);
            let hops = run(false);
            // Direct divided-to-divided translations stay under two per
            // leaf; adding one chain-collapsing hop per single-child run
            // keeps the total under four per leaf.
            let direct = compressed.m2m_pairs as f64;
            let merged = (compressed.m2m_pairs + compressed.m2l_fold_ups) as f64;
            let hopped = hops.m2m_pairs as f64;
            ensure!(
                direct < 2.0 * n,
                "steps={steps}: {direct} direct compressed translations for {n} points"
            );
            ensure!(
                merged <= 4.0 * n,
                "steps={steps}: {merged} compressed translations for {n} points"
            );
            let per_point = hopped / n;
            ensure!(
                per_point > prev_per_point,
                "steps={steps}: hop-by-hop merges stopped growing superlinearly"
            );
            prev_per_point = per_point;
            let ratio = hopped / merged;
            ensure!(
                ratio > prev_ratio,
                "steps={steps}: hop/compressed ratio fell to {ratio:.2}"
            );
            prev_ratio = ratio;
            last = format!("steps=5: {merged} vs {hopped} merges, ratio {ratio:.1}");
        }
        Ok(last)
    });
}

/// Near-optimal threshold intervals shift by about 8x per 8x points on a
/// space-filling set and by strictly less on a curve-like set.
#[test]
fn threshold_intervals_scale_with_occupancy() {
    gate("threshold-intervals", || {
        let table = table();
        // The per-size optimal interval is a sawtooth in log N: it drifts up
        // with N and snaps down by 2^d each time the best depth deepens. Its
        // global extremes are reached just before and just after a snap, so
        // the sizes must sample each ~8x group densely: three per octave
        // over two full groups.
        let sizes = [
            2_000usize, 2_520, 3_175, 4_000, 5_040, 6_350, 8_000, 10_080, 12_700, 16_000,
            20_160, 25_400, 32_000,
        ];
        let ratio_for = |kind: StandardKind| {
            threshold_intervals(
                |n| generate_standard(kind, n, 80 + n as u64),
                &sizes,
                4,
                &table,
                0.02,
            )
            .map(|iv| iv.fitted_ratio())
        };
        let uniform = ratio_for(StandardKind::Uniform).unwrap();
        ensure!(
            (6.0..=10.0).contains(&uniform),
            "uniform interval ratio {uniform:.2} outside 8 +- 25%"
        );
        let spiral = ratio_for(StandardKind::Spiral).unwrap();
        ensure!(spiral < 8.0, "spiral interval ratio {spiral:.2} not below 8");
        Ok(format!("uniform ratio {uniform:.2}, spiral ratio {spiral:.2}"))
    });
}

/// The occupancy-based dimension estimate lands within 0.1 of the closed
/// form `d ln2 / ln(2/(1-gamma))` across removal fractions and ambient
/// dimensions.
#[test]
fn dimension_estimates_match_closed_form() {
    gate("dimension-estimate", || {
        let mut worst: f64 = 0.0;
        for &(dim, level) in &[(1usize, 8u32), (3, 7)] {
            for &gamma in &[0.2, 1.0 / 3.0, 0.5, 0.7] {
                let pts = generate_cantor(&FractalSpec::cantor(gamma, level, dim, 5)).unwrap();
                let tree = build_tree(&pts, unit_threshold(None, dim)).unwrap();
                let est = estimate_dimension(&tree).unwrap();
                let target = cantor_dimension(gamma, dim).unwrap();
                let err = (est - target).abs();
                ensure!(
                    err <= 0.1,
                    "gamma={gamma:.3} dim={dim}: estimate {est:.3} vs {target:.3} (err {err:.3})"
                );
                worst = worst.max(err);
            }
        }
        Ok(format!("worst |error| {worst:.3} across 8 sets"))
    });
}
