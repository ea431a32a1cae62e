//! Quasi-geostrophic flow on a bounded cylinder `Ω × [0, h]`.

pub mod cli;
pub mod config;
pub mod elliptic;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod grid;
pub mod mollify;
pub mod scenario;
pub mod solver;
pub mod sqg;
pub mod transport;

pub use error::{Error, Result};
