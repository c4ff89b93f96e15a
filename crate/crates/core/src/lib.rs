pub mod error;
pub mod grid;
pub mod model;
pub mod pde;

pub use error::{GmwbError, Result};
pub mod dp;
pub mod events;
pub mod fair_fee;
pub mod harness;
pub mod mc;
