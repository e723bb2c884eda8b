//! Integration tests. `criteria` prints one PASS/FAIL line per acceptance
//! criterion; the other modules hold oracle, property and pipeline checks.
//! They share one binary so that a failing criterion does not stop the rest.

mod common;
mod criteria;
mod oracles;
mod pipeline;
mod properties;
