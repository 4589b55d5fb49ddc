pub mod bootstrap;
pub mod config;
pub mod corpus_io;
pub mod discovery;
pub mod edit_tree;
pub mod error;
pub mod evaluation;
pub mod inflection;
mod par;
pub mod pipeline;
pub mod slot_clustering;
pub mod synthetic;
pub mod tagger;

pub use error::{Error, Result};
