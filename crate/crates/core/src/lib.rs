//! Differentiable force-closure estimation and grasp synthesis over analytic
//! signed distance fields.

pub mod error;
pub mod fcest;
pub mod hand;
pub mod linalg;
pub mod lp;
pub mod oracle;
pub mod presets;
pub mod sampler;
pub mod sdf;

pub use error::{Error, Result};
