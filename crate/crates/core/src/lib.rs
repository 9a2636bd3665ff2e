//! Conjunctive keyword search leakage simulation and the refined score
//! query-recovery attack adapted to keyword conjunctions.

pub mod attack;
pub mod bitset;
pub mod conjunction;
pub mod cooccurrence;
pub mod corpus;
pub mod error;
pub mod experiment;
pub mod scheme;
pub mod stem;

pub use error::{Error, Result};
