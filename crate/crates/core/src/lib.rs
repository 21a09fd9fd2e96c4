//! Extraction of weighted finite automata from black-box stateful scorers.
//!
//! The learner runs weighted L* against an [`oracle::Oracle`]; equivalence
//! queries are answered either by a breadth-first scan or by a best-first
//! search guided by a regression model from scorer configurations to WFA
//! configurations.

pub mod datagen;
pub mod error;
pub mod harness;
pub mod learner;
pub mod numerics;
pub mod oracle;
pub mod regression;
pub mod search;
pub mod table;
pub mod wfa;

pub use error::{Error, Result};
pub use learner::{extract, resume, EqEngine, ExtractionConfig, ExtractionReport};
pub use oracle::{CachedOracle, LstmOracle, Oracle, RnnWeights, WfaOracle, WparenOracle};
pub use wfa::{Alphabet, Wfa, Word};
