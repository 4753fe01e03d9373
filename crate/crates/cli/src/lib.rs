//! Configuration-driven front end for the spectral ball solver: an expression
//! language for problem data, a TOML problem format with a built-in catalog,
//! convergence studies and solution files.

pub mod catalog;
pub mod config;
pub mod expr;
pub mod persistence;
pub mod problem;
pub mod quadcheck;
pub mod study;
