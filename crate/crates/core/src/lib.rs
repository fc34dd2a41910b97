//! Safety-driven channel-access adaptation for p-persistent vehicular
//! broadcast.
//!
//! [`channel`] gives the closed-form packet success probability,
//! [`timing`] turns it into expected warning delays, [`kinematics`] runs a
//! braking chain, [`montecarlo`] averages random highways and sweeps access
//! probabilities, and [`adaptation`] splits drivers into Safe and Unsafe
//! classes with different access probabilities.

pub mod adaptation;
pub mod channel;
pub mod cli;
pub mod error;
pub mod kinematics;
pub mod montecarlo;
pub mod timing;
pub mod validate;

pub use error::{Error, Result};
