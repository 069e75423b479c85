pub mod actions;
pub mod classify;
pub mod error;
pub mod exact;
pub mod geometry;
pub mod prolongation;
pub mod verify;

pub use error::{Error, Result};
