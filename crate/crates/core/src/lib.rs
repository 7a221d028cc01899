//! Exact certificates for the collapse of noncontextual 0/1 valuations.
//!
//! The crate builds, from a single assumed fact `v(x) = 1`, a derivation DAG of
//! valuation facts whose every geometric side condition is an exact identity
//! over [`scalar::ExactScalar`], compiles it to a finite set of orthogonal
//! triples, and checks with an independent search that no 0/1 assignment with
//! exactly one 1 per triple exists.

pub mod scalar;
pub mod geometry;
pub mod chain;
pub mod pipeline;
pub mod compiler;
pub mod oracle;
pub mod rules;
pub mod certificate;
