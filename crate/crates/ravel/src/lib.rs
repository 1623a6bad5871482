//! Vertex closures of Montesinos and algebraic tangles: when they are ravels,
//! when they are planar, and when they contain a non-trivial knot or link.

pub mod classify;
pub mod diagram;
pub mod dsl;
pub mod insertion;
pub mod invariants;
pub mod oracle;
pub mod rewrite;
pub mod tangle_core;
