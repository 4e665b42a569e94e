pub mod chart;
pub mod error;
pub mod fiducial;
pub mod geometry;
pub mod harness;
pub mod models;
pub mod samplers;
pub mod quadrature;
