//! Laboratory runner for the chiral derivative NLS on a unit-modulus
//! background: initial-data catalog, JSON run configuration, and subcommands
//! that evolve, evaluate the closed-form solution, and compare the two.

pub mod commands;
pub mod config;
pub mod datum;
