//! Joint pilot and analog-combiner design for multi-cell massive MIMO
//! channel estimation, with a reproducible Monte-Carlo harness.

pub mod archive;
pub mod channel;
pub mod combiner;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod matlin;
pub mod pilots;
pub mod random;
pub mod selftest;

pub use channel::{ChannelRealization, CorrelationProfile, DecayGrid, Geometry, NetworkConfig, TransmitAssembly};
pub use combiner::{CombinerMethod, CombinerWeight, FeasibleSet, MagiqState};
pub use error::{Error, Result};
pub use estimator::{CombinerSet, EstimationReport, GramPolicy, NetworkEstimator, PilotSet};
pub use harness::{ResultRow, Scenario};
pub use matlin::{CMatrix, C64};
pub use pilots::{DictionaryKind, PilotMethod, PilotObjectiveContext};
