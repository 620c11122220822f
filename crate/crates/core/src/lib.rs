//! Analytics, Monte Carlo validation and policy optimization for a two-tier
//! cache-enabled multi-antenna network with user-centric interference nulling.

pub mod analytics;
pub mod error;
pub mod optimizer;
pub mod params;
pub mod simulator;
pub mod specfun;

pub use analytics::{AnalyticReport, AseSplit, AseVariant, SbsKernel};
pub use error::{Error, Result};
pub use optimizer::{OptimizerConfig, Solution};
pub use params::{CachingPolicy, ContentConfig, NetworkParams};
pub use simulator::{SimConfig, SimEstimate};
pub use specfun::SpecFunConfig;
