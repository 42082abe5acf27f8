pub mod error;
pub mod numerics;

pub use error::{Error, Result};
pub mod rrnn;
pub mod embeddings;
pub mod loss;
pub mod model;
pub mod corpus;
pub mod trainer;
pub mod checkpoint;
pub mod compressor;
pub mod preprocess;
pub mod eval_report;
pub mod svfile;
pub mod cli;
