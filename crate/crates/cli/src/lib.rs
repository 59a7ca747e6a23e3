pub mod agents;
pub mod cli;
pub mod service;

pub use cli::run;
