//! Test problems, theory-side quantities and the experiment driver.

pub mod experiment;
pub mod generators;
pub mod theory;
