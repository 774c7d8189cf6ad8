//! Holds the `acceptance` test target; there is no library code.
//!
//! Kept in its own package so that `cargo test --workspace` runs it after
//! the unit and integration tests of the other crates.
