//! Degrees-of-freedom experiments with the constructive scheme: best-effort
//! zero-forcing private streams at power `P_t^α` plus a random common stream
//! carrying the rest of the budget.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{CMat, CVec, Precoder, C64};
use crate::uncertainty::{unit_direction, worst_case_oracle, ChannelInstance, Stream};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeExponents {
    pub a_c: f64,
    pub a: f64,
}

impl SchemeExponents {
    pub fn new(a_c: f64, a: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&a_c) || !(0.0..=1.0).contains(&a) {
            return Err(Error::Domain("power exponents must lie in [0, 1]".into()));
        }
        Ok(Self { a_c, a })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DofEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: Vec<(f64, f64)>,
}

/// Unit-norm columns of the pseudo-inverse of `Ĥᴴ`, so that
/// `ĥ_jᴴ p_k = 0` for `j ≠ k`.
pub fn zf_directions(h_hat: &CMat) -> Result<CMat> {
    let sv = h_hat.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if !(smax > 0.0) || smin <= 1e-10 * smax {
        return Err(Error::RankDeficient);
    }
    let gram = h_hat.adjoint() * h_hat;
    let inv = gram.try_inverse().ok_or(Error::RankDeficient)?;
    let mut w = h_hat * inv;
    for mut c in w.column_iter_mut() {
        let n = c.norm();
        c /= C64::from(n);
    }
    Ok(w)
}

/// ZF private precoders, each with power `P_t^α / K`.
pub fn zf_private_precoders(h_hat: &CMat, alpha: f64, pt: f64) -> Result<CMat> {
    if !(pt >= 1.0) {
        return Err(Error::Domain(format!("need Pt >= 1, got {pt}")));
    }
    let k = h_hat.ncols();
    let w = zf_directions(h_hat)?;
    Ok(w * C64::from((pt.powf(alpha) / k as f64).sqrt()))
}

pub fn random_common_precoder<R: Rng + ?Sized>(rng: &mut R, nt: usize, power: f64) -> Result<CVec> {
    if !(power >= 0.0) {
        return Err(Error::Domain(format!("power must be nonnegative, got {power}")));
    }
    let dir = unit_direction(rng, nt);
    if power == 0.0 {
        return Ok(CVec::zeros(nt));
    }
    Ok(dir * C64::from(power.sqrt()))
}

/// ZF private part at total power `P_t^α`, common stream at `P_t − P_t^α`.
pub fn constructive_scheme<R: Rng + ?Sized>(h_hat: &CMat, alpha: f64, pt: f64, rng: &mut R) -> Result<Precoder> {
    let pp = zf_private_precoders(h_hat, alpha, pt)?;
    let pc = random_common_precoder(rng, h_hat.nrows(), (pt - pt.powf(alpha)).max(0.0))?;
    Precoder::new(pc, pp)
}

/// Sampled worst-case total rate of every user, `R̄_k + R̄_c/K`, with
/// `R̄_c` the smallest sampled common rate (zero without a common stream).
pub fn evaluate_scheme_rates<R: Rng + ?Sized>(
    p: &Precoder,
    instances: &[ChannelInstance],
    sigma2: f64,
    n_samples: usize,
    rng: &mut R,
) -> (Vec<f64>, f64) {
    let k = instances.len();
    let mut private = Vec::with_capacity(k);
    let mut common = f64::INFINITY;
    for (i, inst) in instances.iter().enumerate() {
        let (r, _) = worst_case_oracle(&inst.region, p, sigma2, i, Stream::Private, n_samples, rng);
        private.push(r);
        if p.pc.norm_squared() > 0.0 {
            let (rc, _) = worst_case_oracle(&inst.region, p, sigma2, i, Stream::Common, n_samples, rng);
            common = common.min(rc);
        } else {
            common = 0.0;
        }
    }
    let share = common / k as f64;
    (private.iter().map(|r| r + share).collect(), common)
}

/// Sampled worst-case max-min total rate with the common rate split equally.
pub fn evaluate_scheme_minrate<R: Rng + ?Sized>(
    p: &Precoder,
    instances: &[ChannelInstance],
    sigma2: f64,
    n_samples: usize,
    rng: &mut R,
) -> f64 {
    let (totals, _) = evaluate_scheme_rates(p, instances, sigma2, n_samples, rng);
    totals.into_iter().fold(f64::INFINITY, f64::min)
}

/// Least-squares fit of rate against `log₂ P_t`.
pub fn dof_estimate(points: &[(f64, f64)]) -> Result<DofEstimate> {
    if points.len() < 3 {
        return Err(Error::Domain("need at least 3 points".into()));
    }
    if points.windows(2).any(|w| !(w[1].0 > w[0].0)) || points[0].0 <= 0.0 {
        return Err(Error::Domain("powers must be positive and strictly increasing".into()));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.log2()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(DofEstimate {
        slope,
        intercept,
        r2,
        points: points.to_vec(),
    })
}

/// Optimum max-min DoF `(NoRS, RS)` for `K` users and CSIT exponent `α`.
pub fn theorem1_predictions(k: usize, alpha: f64) -> Result<(f64, f64)> {
    if k < 2 {
        return Err(Error::Domain("predictions need K >= 2".into()));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let kf = k as f64;
    Ok((alpha, (1.0 + (kf - 1.0) * alpha) / kf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_channel() {
        let h = CMat::identity(2, 2);
        let pp = zf_private_precoders(&h, 1.0, 4.0).unwrap();
        assert!((pp[(0, 0)] - C64::from(2f64.sqrt())).norm() < 1e-12);
        assert!(pp[(1, 0)].norm() < 1e-12);
        let flat = zf_private_precoders(&h, 0.0, 50.0).unwrap();
        for c in flat.column_iter() {
            assert!((c.norm_squared() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_deficient_estimates_are_rejected() {
        let h = CMat::from_element(2, 2, C64::from(1.0));
        assert_eq!(zf_directions(&h), Err(Error::RankDeficient));
    }

    #[test]
    fn slope_fits() {
        let pts: Vec<(f64, f64)> = [1.0, 4.0, 16.0, 64.0].iter().map(|&p| (p, 0.5 * f64::log2(p) + 3.0)).collect();
        let e = dof_estimate(&pts).unwrap();
        assert!((e.slope - 0.5).abs() < 1e-12 && (e.r2 - 1.0).abs() < 1e-12);
        let flat = dof_estimate(&[(1.0, 2.0), (2.0, 2.0), (3.0, 2.0)]).unwrap();
        assert_eq!(flat.slope, 0.0);
        assert!(dof_estimate(&[(1.0, 2.0), (1.0, 2.0), (3.0, 2.0)]).is_err());
        assert!(dof_estimate(&[(1.0, 2.0), (2.0, 2.0)]).is_err());
    }

    #[test]
    fn predictions() {
        let (n, r) = theorem1_predictions(3, 0.5).unwrap();
        assert_eq!(n, 0.5);
        assert!((r - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(theorem1_predictions(4, 1.0).unwrap(), (1.0, 1.0));
        let (n, r) = theorem1_predictions(3, 0.0).unwrap();
        assert_eq!(n, 0.0);
        assert!((r - 1.0 / 3.0).abs() < 1e-15);
        assert!(theorem1_predictions(1, 0.5).is_err());
    }
}
