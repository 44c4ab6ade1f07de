//! Certified transversality and measure/dimension probes for skew products
//! `T(x, y) = (bx mod 1, γy + ψ(x))` and the associated Weierstrass-type graphs.

pub mod error;
pub mod interval;
pub mod certify;
pub mod series;
pub mod sigma;
pub mod measure;
pub mod dimension;
pub mod hexfloat;
pub mod report;
pub mod app;

pub use error::{Error, Result};
pub use interval::Interval;
pub use series::{Code, PeriodicFn, SystemParams, Word};
