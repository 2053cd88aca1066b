//! Adaptive kernel-independent fast multipole method (FMM) with fractal
//! benchmark generators and cost-model-driven parameter tuning.
//!
//! The crate is organized around a small pipeline:
//!
//! 1. [`pointgen`] builds reproducible point sets: generalized Cantor sets
//!    with a prescribed fractal dimension, uniform clouds, an accumulating
//!    spiral, and a pathological singleton-stress set.
//! 2. [`tree`] builds the adaptive 2^d-tree under a *double threshold*
//!    subdivision rule (a leaf-size threshold `t` *and* a maximum depth
//!    `lmax`), classifies nodes into leaf/singleton/divided, and derives the
//!    U/V/W/X interaction lists.
//! 3. [`operators`] provides the Chebyshev interpolation machinery and the
//!    eight translation operators (P2M, M2M, M2L, P2L, L2L, L2P, M2P, P2P)
//!    for any user-supplied kernel.
//! 4. [`engine`] runs the full evaluation, skipping singleton nodes so that
//!    deep degenerate branches cost nothing extra.
//! 5. [`costmodel`] counts operator applications exactly and converts them
//!    to machine-independent cycle estimates.
//! 6. [`optimizer`] sweeps `(lmax, t)` grids, fits the two-parameter
//!    heuristic cost model, extracts near-optimal threshold intervals, and
//!    estimates the occupancy dimension of a point set from its tree.
//!
//! # Quick start
//!
//! ```
//! use afmm::engine::{direct_sum, relative_error, run_fmm, RunOptions};
//! use afmm::kernel::Laplace;
//! use afmm::pointgen::{self, StandardKind};
//! use afmm::tree::{build_tree, TreeConfig};
//!
//! let points = pointgen::generate_standard(StandardKind::Uniform, 200, 7).unwrap();
//! let config = TreeConfig { threshold: 8, ..TreeConfig::default() };
//! let tree = build_tree(&points, config).unwrap();
//! let result = run_fmm(&tree, &Laplace, &RunOptions::default()).unwrap();
//! let exact = direct_sum(&points.positions, &points.intensities, &Laplace).unwrap();
//! assert!(relative_error(&result.potentials, &exact) < 1e-3);
//! ```

pub mod cli;
pub mod costmodel;
pub mod engine;
mod error;
pub mod io;
pub mod kernel;
mod mat;
pub mod operators;
pub mod optimizer;
pub mod pointgen;
pub mod tree;

pub use error::{Error, Result};
pub use mat::Mat;

#[cfg(doctest)]
mod guide;
