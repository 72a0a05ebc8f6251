pub mod csbp;
pub mod error;
pub mod mass;
pub mod measure;
pub mod partition;
pub mod report;
pub mod rng;
pub mod special;
pub mod stats;
pub mod subordinator;
pub mod tree;

pub use error::{Error, Result};
pub use mass::RankedMassSequence;
pub use partition::SetPartition;
pub use rng::RngStream;
pub use special::{Alpha, StableConstants};
pub use subordinator::JumpSequence;
pub use tree::{DiscreteHeightPath, MarkedTree};
