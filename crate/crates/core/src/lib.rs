//! Two-front free-boundary simulation of West Nile virus transmission between
//! birds and mosquitoes, with threshold quantities and spreading/vanishing
//! classification.

pub mod commands;
pub mod config;
pub mod dynamics;
pub mod oracles;
pub mod output;
pub mod params;
pub mod solver;
pub mod thresholds;

pub use params::{ModelParams, ParamError, ParamName, ParamValues};
