pub mod audit;
pub mod baselines;
pub mod error;
pub mod init;
pub mod linalg;
pub mod objectives;
pub mod solver;

pub use error::{Error, Result};
