//! Oracle, property and pipeline tests against the public API.
//!
//! They live in the library's test build so that they run before the
//! long-running `acceptance` integration target.

#[path = "../../tests/common/mod.rs"]
mod common;

mod pipeline;
