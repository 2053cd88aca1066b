//! Compiles and runs every code block in the user guide as a doctest, so
//! the book cannot drift from the library. Built only under `cargo test`
//! (doctest collection); never part of the shipped crate.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}

#[doc = include_str!("../../../book/src/point-sets.md")]
mod point_sets {}

#[doc = include_str!("../../../book/src/adaptive-trees.md")]
mod adaptive_trees {}

#[doc = include_str!("../../../book/src/interaction-lists.md")]
mod interaction_lists {}

#[doc = include_str!("../../../book/src/chebyshev-operators.md")]
mod chebyshev_operators {}

#[doc = include_str!("../../../book/src/cost-model.md")]
mod cost_model {}

#[doc = include_str!("../../../book/src/parameter-tuning.md")]
mod parameter_tuning {}

#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
