//! Slow, obviously-correct reference implementations used as test
//! oracles, plus seeded generators for random inputs.

pub mod bgp;
pub mod gen;
pub mod graph;
pub mod join;
pub mod jsonld;
pub mod sql;
