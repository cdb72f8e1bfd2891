//! Robust precoder design for a multiuser MISO downlink whose channel
//! estimates are only known up to a norm-bounded error.
//!
//! Two transmission schemes are supported: conventional linear precoding
//! with one private stream per user (NoRS), and rate splitting (RS), which
//! adds a common stream decoded by every user and removed by SIC before the
//! private stream. Designs maximize the worst-case max-min rate under a
//! power budget, or minimize power under a worst-case rate target, through
//! alternating optimization over conservative weighted-MSE bounds.

pub mod ao;
pub mod dof;
pub mod error;
pub mod lmi;
pub mod model;
pub mod uncertainty;
pub mod wmse;

pub use error::{Error, Result};
pub use model::{CMat, CVec, Precoder, RateSplit, SystemConfig, C64};
