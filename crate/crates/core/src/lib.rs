//! Network reconstruction and engagement analysis for archived online
//! debates.
//!
//! The crate rebuilds two complementary views of a debate from archived
//! interaction records: retweet networks, spatialized with a force-directed
//! layout to discover opinion groups, and reply trees aggregated into reply
//! networks to measure who actually engages. On top of those it computes
//! engagement tables, participation tests, and local assortativity
//! distributions under incomplete metadata, plus a seeded synthetic-corpus
//! generator for end-to-end verification.

pub mod assort;
pub mod classify;
pub mod error;
pub mod forest;
pub mod graph;
pub mod ingest;
pub mod layout;
pub mod plot;
pub mod record;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use record::{InteractionRecord, RecordKind, TweetId, UserId};
