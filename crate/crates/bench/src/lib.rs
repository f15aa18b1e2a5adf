pub mod experiment;
pub mod instance;
pub mod spec;
pub mod stats;
