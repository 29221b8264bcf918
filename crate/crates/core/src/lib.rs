pub mod apps;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod linalg;
pub mod oracle;
pub mod problem;
pub mod recovery;
pub mod sdp;
pub mod sprocedure;
pub mod subsolvers;

pub use error::{Error, Result};
