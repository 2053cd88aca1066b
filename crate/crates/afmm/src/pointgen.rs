//! Reproducible point-set generators.
//!
//! All generators place points inside the unit cube `[0,1]^d` and are fully
//! deterministic given their seed. Four families are provided:
//!
//! * **Generalized Cantor sets** ([`generate_cantor`]): at every construction
//!   step the open middle fraction `gamma` of each interval is removed,
//!   leaving two end intervals of relative length `(1 - gamma)/2`. After `k`
//!   steps a `d`-dimensional tensor product has `2^(d*k)` surviving boxes and
//!   one point is placed in each. The Hausdorff dimension is controlled by
//!   `gamma` alone (see [`cantor_dimension`] / [`gamma_for_dimension`]).
//! * **Uniform clouds** and an **accumulating spiral**
//!   ([`generate_standard`]): the spiral winds toward a single accumulation
//!   point, producing much deeper adaptive trees than a uniform cloud of the
//!   same size.
//! * **Singleton-stress sets** ([`generate_singleton_stress`]): a 1-D
//!   construction that shrinks intervals super-exponentially, producing
//!   arbitrarily long chains of single-child tree nodes. Useful for
//!   demonstrating why hop-by-hop moment passing is not linear-time.
//! * **Sampled Cantor sets** ([`generate_cantor_sampled`]): a fixed number of
//!   boxes drawn without replacement from the shallowest construction level
//!   that has enough boxes, for benchmarks that need arbitrary `N`.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Largest allowed `dim * level` for exact Cantor generation (2^26 = 67M
/// points is already beyond what the rest of the pipeline wants to hold).
const MAX_POINT_LOG2: u32 = 26;

/// Construction steps cap for [`generate_singleton_stress`]. At step `i` the
/// interval length shrinks by `2^(2^i)`; after five steps the partner
/// offsets sit at the 37th significand bit below the anchors and a sixth
/// step would need the 69th, beyond the 53 bits an `f64` carries.
const MAX_STRESS_STEPS: u32 = 5;

/// A set of `N` points with per-point source intensities.
///
/// Positions always carry three coordinates; for `dim < 3` the trailing
/// coordinates are zero. `dim` is the dimension the tree subdivides.
#[derive(Debug, Clone)]
pub struct PointSet {
    pub positions: Vec<[f64; 3]>,
    pub intensities: Vec<f64>,
    pub dim: usize,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Which fractal family a [`FractalSpec`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FractalKind {
    Cantor,
    Uniform,
    Spiral,
    SingletonStress,
}

/// Where the representative point of a surviving box is placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Placement {
    /// Box center: fully deterministic, independent of the seed.
    #[default]
    Center,
    /// Uniformly random inside the box, driven by the spec's seed.
    RandomInLeaf,
}

/// How per-point source intensities are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IntensityRule {
    /// Every intensity is exactly `1.0`.
    #[default]
    ConstantOne,
    /// Uniformly random in `[-1, 1]`, driven by the spec's seed.
    RandomUniform,
}

/// Full description of a fractal point set.
#[derive(Debug, Clone)]
pub struct FractalSpec {
    pub kind: FractalKind,
    /// Removed middle fraction, in `(0, 1)`. Only used by Cantor sets.
    pub gamma: f64,
    /// Construction steps `k >= 0`. Only used by Cantor sets.
    pub level: u32,
    /// Subdivision dimension, in `{1, 2, 3}`.
    pub dim: usize,
    pub seed: u64,
    pub placement: Placement,
    pub intensity: IntensityRule,
}

impl FractalSpec {
    /// A Cantor spec with default placement (center) and intensities (one).
    pub fn cantor(gamma: f64, level: u32, dim: usize, seed: u64) -> Self {
        FractalSpec {
            kind: FractalKind::Cantor,
            gamma,
            level,
            dim,
            seed,
            placement: Placement::default(),
            intensity: IntensityRule::default(),
        }
    }
}

/// Non-fractal reference distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StandardKind {
    /// I.i.d. uniform in the unit cube.
    Uniform,
    /// Conical spiral accumulating toward `(1/2, 1/2, 0)`.
    Spiral,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Parameter(format!(
            "gamma must lie strictly between 0 and 1, got {gamma}"
        )));
    }
    Ok(())
}

fn check_dim(dim: usize) -> Result<()> {
    if !(1..=3).contains(&dim) {
        return Err(Error::Parameter(format!("dim must be 1, 2 or 3, got {dim}")));
    }
    Ok(())
}

/// Hausdorff dimension of the `dim`-fold tensor product of the generalized
/// Cantor set with middle fraction `gamma`:
/// `d_H = -dim * log(2) / log((1 - gamma)/2)`.
pub fn cantor_dimension(gamma: f64, dim: usize) -> Result<f64> {
    check_gamma(gamma)?;
    check_dim(dim)?;
    let s = (1.0 - gamma) / 2.0;
    Ok(-(dim as f64) * std::f64::consts::LN_2 / s.ln())
}

/// Inverse of [`cantor_dimension`]: the `gamma` whose `dim`-dimensional
/// Cantor set has Hausdorff dimension `target`. Requires `0 < target < dim`.
pub fn gamma_for_dimension(target: f64, dim: usize) -> Result<f64> {
    check_dim(dim)?;
    if !(target > 0.0 && target < dim as f64) {
        return Err(Error::Parameter(format!(
            "target dimension must lie strictly between 0 and {dim}, got {target}"
        )));
    }
    Ok(1.0 - f64::exp2(1.0 - dim as f64 / target))
}

/// Per-axis left endpoint of the surviving interval addressed by the `level`
/// construction digits in `word` (most significant digit = first step).
///
/// After each step an interval `[x, x + scale]` splits into a left child at
/// `x` and a right child at `x + a * scale` with `a = (1 + gamma)/2`, both of
/// length `s * scale` with `s = (1 - gamma)/2`.
fn cantor_left_endpoint(word: u64, level: u32, gamma: f64) -> (f64, f64) {
    let a = (1.0 + gamma) / 2.0;
    let s = (1.0 - gamma) / 2.0;
    let mut x = 0.0;
    let mut scale = 1.0;
    for i in 0..level {
        if (word >> (level - 1 - i)) & 1 == 1 {
            x += a * scale;
        }
        scale *= s;
    }
    (x, scale)
}

fn cantor_points_from_boxes(
    boxes: &[u64],
    gamma: f64,
    level: u32,
    dim: usize,
    seed: u64,
    placement: Placement,
    intensity: IntensityRule,
) -> PointSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = Vec::with_capacity(boxes.len());
    let mask = if level == 0 { 0 } else { (1u64 << level) - 1 };
    for &b in boxes {
        let mut p = [0.0f64; 3];
        for (axis, coord) in p.iter_mut().take(dim).enumerate() {
            let word = (b >> (axis as u32 * level)) & mask;
            let (left, len) = cantor_left_endpoint(word, level, gamma);
            *coord = match placement {
                Placement::Center => left + len / 2.0,
                Placement::RandomInLeaf => left + rng.gen::<f64>() * len,
            };
        }
        positions.push(p);
    }
    let intensities = draw_intensities(positions.len(), intensity, &mut rng);
    PointSet { positions, intensities, dim }
}

fn draw_intensities(n: usize, rule: IntensityRule, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match rule {
        IntensityRule::ConstantOne => vec![1.0; n],
        IntensityRule::RandomUniform => (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
    }
}

/// Generates the full level-`k` generalized Cantor set: one point per
/// surviving box, `2^(dim * level)` points in total, ordered
/// lexicographically by box address.
pub fn generate_cantor(spec: &FractalSpec) -> Result<PointSet> {
    if spec.kind != FractalKind::Cantor {
        return Err(Error::Parameter(format!(
            "generate_cantor requires a Cantor spec, got {:?}",
            spec.kind
        )));
    }
    check_gamma(spec.gamma)?;
    check_dim(spec.dim)?;
    let total_log2 = spec.dim as u32 * spec.level;
    if total_log2 > MAX_POINT_LOG2 {
        return Err(Error::Parameter(format!(
            "dim * level = {total_log2} exceeds the {MAX_POINT_LOG2}-bit point-count cap"
        )));
    }
    let boxes: Vec<u64> = (0..(1u64 << total_log2)).collect();
    Ok(cantor_points_from_boxes(
        &boxes,
        spec.gamma,
        spec.level,
        spec.dim,
        spec.seed,
        spec.placement,
        spec.intensity,
    ))
}

/// Generates `count` points of a generalized Cantor set by sampling boxes
/// without replacement from the shallowest construction level that has at
/// least `count` boxes. Use this when a benchmark needs an arbitrary `N`
/// rather than the exact `2^(dim*k)` counts of [`generate_cantor`].
pub fn generate_cantor_sampled(
    gamma: f64,
    dim: usize,
    count: usize,
    seed: u64,
    placement: Placement,
    intensity: IntensityRule,
) -> Result<PointSet> {
    check_gamma(gamma)?;
    check_dim(dim)?;
    if count == 0 {
        return Err(Error::Parameter("count must be at least 1".into()));
    }
    // Smallest k with 2^(dim*k) >= count.
    let mut level = 0u32;
    while (1u128 << (dim as u32 * level)) < count as u128 {
        level += 1;
        if dim as u32 * level > MAX_POINT_LOG2 {
            return Err(Error::Parameter(format!(
                "count {count} exceeds the {MAX_POINT_LOG2}-bit point-count cap"
            )));
        }
    }
    let total = 1usize << (dim as u32 * level);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut boxes: Vec<u64> = sample(&mut rng, total, count).iter().map(|i| i as u64).collect();
    boxes.sort_unstable();
    Ok(cantor_points_from_boxes(&boxes, gamma, level, dim, seed.wrapping_add(1), placement, intensity))
}

/// Generates one of the non-fractal reference distributions (always 3-D).
///
/// The spiral places `n` points at evenly spaced parameters `theta` in
/// `[0, 12*pi]` along a logarithmic spiral whose radius shrinks by a factor
/// of eight per turn, `r(theta) = 2^(-18 * theta / (12*pi))`, descending a
/// cone `z = 0.99 * r` toward the accumulation point `(1/2, 1/2, 0)`.
/// Because the radius decays geometrically the curve looks the same at every
/// scale: successive turns stay about one cell width apart at each depth, so
/// the tree keeps deepening at a single point as `n` grows.
pub fn generate_standard(kind: StandardKind, n: usize, seed: u64) -> Result<PointSet> {
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions = match kind {
        StandardKind::Uniform => (0..n)
            .map(|_| [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()])
            .collect(),
        StandardKind::Spiral => {
            let big_theta = 12.0 * std::f64::consts::PI;
            let decay = 18.0 * std::f64::consts::LN_2 / big_theta;
            let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
            (0..n)
                .map(|i| {
                    let theta = big_theta * i as f64 / denom;
                    let radius = (-decay * theta).exp();
                    [
                        radius * theta.cos() / 2.0 + 0.5,
                        radius * theta.sin() / 2.0 + 0.5,
                        radius * 0.99,
                    ]
                })
                .collect()
        }
    };
    let n_points = n;
    Ok(PointSet { positions, intensities: vec![1.0; n_points], dim: 3 })
}

/// Generates the 1-D singleton-stress set.
///
/// Starting from a half-unit base interval, step `i` (for `i = 1..=steps`)
/// splits every interval in half and then shrinks each half to a
/// `1/2^(2^i)` fraction of its length, keeping the left endpoint. One
/// uniformly random point is placed in each of the `2^steps` final
/// intervals. Consecutive free binary digits of the surviving coordinates
/// are separated by runs of about `2^i` forced zeros, so an adaptive tree
/// with `t = 1` contains singleton chains whose length doubles with each
/// step.
///
/// The base interval starts at `1/3` rather than `0`: a non-dyadic anchor
/// keeps every constructed endpoint strictly off the dyadic subdivision
/// planes. Anchored at `0`, endpoints such as `1/2` would sit exactly on a
/// plane, and the tie rule (points on a plane go to the lower cell) would
/// strand them from their `2^-k`-distant partners at the very first level,
/// destroying the chains the set exists to exhibit.
///
/// `steps` is capped at 5 by `f64` precision: the step-`s` partner offset
/// is `2^-(2^s + 2^(s-1) + ... + 4)` below anchors whose leading bit is
/// `2^-2`, so step 6 would need offsets at the 69th significand bit while
/// `f64` carries 53. Beyond the cap the offsets round away entirely and
/// partner points coincide.
pub fn generate_singleton_stress(steps: u32, seed: u64) -> Result<PointSet> {
    if steps > MAX_STRESS_STEPS {
        return Err(Error::Parameter(format!(
            "steps must be at most {MAX_STRESS_STEPS} (partner offsets fall below f64 \
             significand resolution beyond that), got {steps}"
        )));
    }
    let mut intervals: Vec<(f64, f64)> = vec![(1.0 / 3.0, 0.5)];
    for i in 1..=steps {
        let shrink = f64::exp2(-(2.0f64.powi(i as i32))) / 2.0;
        let mut next = Vec::with_capacity(intervals.len() * 2);
        for &(a, len) in &intervals {
            next.push((a, len * shrink));
            next.push((a + len / 2.0, len * shrink));
        }
        intervals = next;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions: Vec<[f64; 3]> = intervals
        .iter()
        .map(|&(a, len)| [a + rng.gen::<f64>() * len, 0.0, 0.0])
        .collect();
    let n = positions.len();
    Ok(PointSet { positions, intensities: vec![1.0; n], dim: 1 })
}
