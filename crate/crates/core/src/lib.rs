pub mod comparison;
pub mod connection;
pub mod curve;
pub mod direct;
pub mod engine;
pub mod error;
pub mod golden;
pub mod numeric;
pub mod path;
pub mod product;
pub mod quadrature;
pub mod transport;

pub use error::{Error, Result};
