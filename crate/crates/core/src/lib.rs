pub mod baseline;
pub mod classifiers;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod inconsistency;
pub mod pipeline;
pub mod synth;
pub mod terms;
pub mod textprep;

pub use error::{Error, Result};
