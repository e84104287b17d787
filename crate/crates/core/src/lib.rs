//! Vacuity-aware formal property verification.

pub mod formula;
pub mod mc;
pub mod model;
pub mod vacuity;
pub mod coverage;
pub mod pipeline;
