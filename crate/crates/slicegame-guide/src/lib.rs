//! Keeps the guide honest: every chapter of `book/` is included here as
//! module documentation, so `cargo test --doc` compiles and runs the
//! guide's Rust code blocks. mdbook renders the same files for reading;
//! this crate exists only so the snippets cannot drift from the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/allocation-model.md")]
pub mod allocation_model {}

#[doc = include_str!("../../../book/src/best-response.md")]
pub mod best_response {}

#[doc = include_str!("../../../book/src/dynamics.md")]
pub mod dynamics {}

#[doc = include_str!("../../../book/src/efficiency-fairness.md")]
pub mod efficiency_fairness {}

#[doc = include_str!("../../../book/src/scenarios-experiments.md")]
pub mod scenarios_experiments {}
