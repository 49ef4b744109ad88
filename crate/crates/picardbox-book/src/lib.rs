//! mdbook cannot run a book's code fences against a crate dependency, so
//! each chapter is included here as a doc comment and `cargo test --doc`
//! exercises every snippet. One module per chapter keeps failures
//! attributable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/fields.md")]
pub mod fields {}

#[doc = include_str!("../../../book/src/kernels.md")]
pub mod kernels {}

#[doc = include_str!("../../../book/src/parabolic.md")]
pub mod parabolic {}

#[doc = include_str!("../../../book/src/burgers.md")]
pub mod burgers {}

#[doc = include_str!("../../../book/src/navier_stokes.md")]
pub mod navier_stokes {}

#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}
