//! Reformulation and annealing toolkit for optimal PMU placement.
//!
//! Models minimum dominating set on a power-grid graph as a penalized binary
//! quadratic model, solves it with exact search and simulated annealing,
//! minor-embeds it onto a Chimera hardware graph, and simulates small-instance
//! adiabatic annealing dynamics.

pub mod aqa;
pub mod bench;
pub mod chimera;
pub mod data;
pub mod graph;
pub mod reform;
pub mod sa;
