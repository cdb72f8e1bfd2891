//! Augmented weighted MSE `ξ = u ε − log₂ u`.
//!
//! For a fixed channel, minimizing `ξ` over the receive gain and the weight
//! gives exactly `1 − R`. Under uncertainty, fixing one `(g, u)` for the
//! whole region and bounding the worst-case MSE by `τ + |g|²σ²` turns
//! `1 − ξ` into a lower bound on the worst-case rate.

use crate::error::{Error, Result};
use crate::model::{mmse_equalizers, mse_pair, sinr_and_rate, CVec, Precoder, C64};

/// Fixed receive gains and weights for every user, common and private.
#[derive(Clone, Debug, PartialEq)]
pub struct WmseState {
    pub g_c: Vec<C64>,
    pub g: Vec<C64>,
    pub u_c: Vec<f64>,
    pub u: Vec<f64>,
}

impl WmseState {
    pub fn validate(&self) -> Result<()> {
        if self.u.iter().chain(&self.u_c).any(|u| !(*u > 0.0)) {
            return Err(Error::Domain("weights must be strictly positive".into()));
        }
        Ok(())
    }
}

pub fn wmse(eps: f64, u: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::Domain(format!("weight must be positive, got {u}")));
    }
    Ok(u * eps - u.log2())
}

pub fn optimal_weight(eps_mmse: f64) -> Result<f64> {
    if !(eps_mmse > 0.0) {
        return Err(Error::Domain(format!("MMSE must be positive, got {eps_mmse}")));
    }
    Ok(1.0 / eps_mmse)
}

/// `|min ξ − (1 − R)|` for the common and private stream of user `k`.
pub fn rate_wmse_identity_check(h: &CVec, p: &Precoder, sigma2: f64, k: usize) -> Result<(f64, f64)> {
    let (g_c, g) = mmse_equalizers(h, p, sigma2, k)?;
    let (eps_c, eps) = mse_pair(h, p, g_c, g, sigma2, k)?;
    let xi_c = wmse(eps_c, optimal_weight(eps_c)?)?;
    let xi = wmse(eps, optimal_weight(eps)?)?;
    let rates = sinr_and_rate(h, p, sigma2, k)?;
    Ok(((xi_c - (1.0 - rates.r_c)).abs(), (xi - (1.0 - rates.r)).abs()))
}

/// `1 − [u (τ + |g|² σ²) − log₂ u]`.
pub fn conservative_rate(tau: f64, g: C64, u: f64, sigma2: f64) -> f64 {
    1.0 - (u * (tau + g.norm_sqr() * sigma2) - u.log2())
}
