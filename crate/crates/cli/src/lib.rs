//! Library surface of the command-line front end, exposed so the acceptance
//! test suite drives the same criteria code as `ctrw selftest`.

pub mod commands;
pub mod config;
pub mod selftest;
