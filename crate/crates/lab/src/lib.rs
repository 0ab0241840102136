//! std companion to `unfolding-core`: arbitrary-precision period oracle,
//! Cauchy-Heine gluing, field specifications, and output writers.

pub mod glue;
pub mod mp;
pub mod spec;
pub mod svg;
