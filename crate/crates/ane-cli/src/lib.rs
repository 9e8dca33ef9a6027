//! Command-line front end: run configurations, artifact files, and the
//! bundled table-reproduction batteries. All numerics live in `ane-core`;
//! this crate only parses configuration, drives runs, and reads/writes the
//! artifact formats (checkpoint, CSV dumps).

pub mod config;
pub mod io;
pub mod reproduce;
pub mod runner;
