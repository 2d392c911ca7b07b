//! Verification laboratory for the k = 0 conformal scalar sector on
//! Carter-family and Kerr–Newman backgrounds.

pub mod curvature;
pub mod metric;
pub mod poly;
pub mod linalg;
pub mod slab;
pub mod evolution;
pub mod modes;
pub mod kn;
pub mod horizon;
pub mod config;
pub mod runner;
