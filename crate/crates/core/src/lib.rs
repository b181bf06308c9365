//! Deterministic 2-D driving simulation with a scenario validation harness.

pub mod behavior;
pub mod canonical;
pub mod check;
pub mod closed_loop;
pub mod factory;
pub mod formats;
pub mod geometry;
pub mod harness;
pub mod reasoner;
pub mod sensor;
pub mod server;
pub mod shape;
pub mod trajectory;
pub mod world;
