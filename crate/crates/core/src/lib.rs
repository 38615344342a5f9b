//! Equity-credit pricing with stopped CEV and time-changed squared Bessel
//! processes.

pub mod battery;
pub mod bessel_cev;
pub mod cli;
pub mod credit_swaps;
pub mod error;
pub mod quad;
pub mod specfun;
pub mod sv_pricing;
pub mod mc;
pub mod method;
pub mod time_change;
pub mod transform;
pub mod vanilla;

pub use error::{Error, Result};
pub use method::{Estimate, Method};
