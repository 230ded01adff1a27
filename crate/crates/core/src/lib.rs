#![allow(clippy::needless_range_loop)]

pub mod basic;
pub mod chart;
pub mod error;
pub mod expr;
pub mod flow;
pub mod frame;
pub mod functionals;
pub mod grid;
pub mod jet;
pub mod local;
pub mod scenario;
pub mod soliton;
pub mod transverse;

pub use error::{Error, Result};
