//! Special functions: incomplete gamma, noncentral chi-square, modified
//! Bessel and Whittaker functions.

pub mod bessel;
pub mod gamma;
pub mod ncchi2;
pub mod whittaker;

pub use bessel::{
    bessel_i, bessel_i_deriv, bessel_i_scaled, bessel_ik, bessel_k, bessel_k_deriv,
    bessel_k_scaled, BesselIK,
};
pub use gamma::{gamma, gamma_head, gamma_tail, gamma_tail_density, ln_gamma, ln_gamma_complex};
pub use ncchi2::{
    gamma_tail_continued, ncchi2_cdf, ncchi2_density, ncchi2_q, ncchi2_truncated_moment,
    NoncentralChi2Args,
};
pub use whittaker::{hyperu, ln_hyperu_integral, ln_whittaker_w_complex, whittaker_w};

/// Arguments (x, y) of the gamma tail G(x, y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaTailArgs {
    pub shape: f64,
    pub threshold: f64,
}
