pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod fit;
pub mod io;
pub mod linalg;
pub mod models;
pub mod refsolver;
pub mod spectral;
pub mod superadiabatic;
pub mod symbols;

pub use error::{Error, Result};
