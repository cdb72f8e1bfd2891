//! CSIT error model: the true channel of user `k` lies in a ball of radius
//! `δ_k` around the transmitter's estimate `ĥ_k`.
//!
//! Random streams come from ChaCha8. An experiment seed selects the key and
//! the channel index selects the ChaCha stream, so channel `i` of an
//! experiment draws the same numbers regardless of scheduling.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{receive_powers, CVec, Precoder, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct UncertaintyRegion {
    pub h_hat: CVec,
    pub delta: f64,
}

impl UncertaintyRegion {
    pub fn new(h_hat: CVec, delta: f64) -> Result<Self> {
        if !(delta >= 0.0) {
            return Err(Error::Domain(format!("radius must be nonnegative, got {delta}")));
        }
        Ok(Self { h_hat, delta })
    }

    pub fn contains(&self, h: &CVec) -> bool {
        (h - &self.h_hat).norm() <= self.delta
    }
}

/// `δ(P_t) = δ₀ √(scale · P_t^{−α})`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadiusLaw {
    pub delta0: f64,
    pub alpha: f64,
    pub scale: f64,
}

impl RadiusLaw {
    pub fn new(delta0: f64, alpha: f64, scale: f64) -> Result<Self> {
        if !(delta0 > 0.0) || !(scale > 0.0) || !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!(
                "radius law needs delta0 > 0, scale > 0, alpha in [0,1]; got ({delta0}, {alpha}, {scale})"
            )));
        }
        Ok(Self { delta0, alpha, scale })
    }

    pub fn radius_at(&self, pt: f64) -> f64 {
        radius_at(self, pt)
    }
}

pub fn radius_at(law: &RadiusLaw, pt: f64) -> f64 {
    law.delta0 * (law.scale * pt.powf(-law.alpha)).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelInstance {
    pub h_true: CVec,
    pub region: UncertaintyRegion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorMode {
    Interior,
    Boundary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Common,
    Private,
}

/// Generator for channel `index` of an experiment seeded with `seed`.
pub fn channel_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// i.i.d. `CN(0, 1)` entries.
pub fn sample_channel<R: Rng + ?Sized>(rng: &mut R, nt: usize) -> CVec {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CVec::from_fn(nt, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    })
}

/// Uniform point on the unit sphere of `C^nt`.
pub(crate) fn unit_direction<R: Rng + ?Sized>(rng: &mut R, nt: usize) -> CVec {
    loop {
        let v = sample_channel(rng, nt);
        let n = v.norm();
        if n > 1e-300 {
            return v / C64::from(n);
        }
    }
}

/// CSIT error of radius at most `delta`: uniform in the `2Nt`-dimensional
/// real ball, or uniform on its boundary sphere.
pub fn sample_error<R: Rng + ?Sized>(rng: &mut R, delta: f64, mode: ErrorMode, nt: usize) -> CVec {
    if delta == 0.0 {
        return CVec::zeros(nt);
    }
    let dir = unit_direction(rng, nt);
    let r = match mode {
        ErrorMode::Boundary => delta,
        ErrorMode::Interior => {
            let u: f64 = rng.random();
            delta * u.powf(1.0 / (2 * nt) as f64)
        }
    };
    dir * C64::from(r)
}

/// True channel plus an estimate whose error is uniform in the ball.
pub fn sample_instance<R: Rng + ?Sized>(rng: &mut R, nt: usize, delta: f64) -> ChannelInstance {
    let h_true = sample_channel(rng, nt);
    let err = sample_error(rng, delta, ErrorMode::Interior, nt);
    ChannelInstance {
        region: UncertaintyRegion {
            h_hat: &h_true - err,
            delta,
        },
        h_true,
    }
}

/// Achievable rate of one stream at user `k` for a concrete channel.
pub fn stream_rate(h: &CVec, p: &Precoder, sigma2: f64, k: usize, stream: Stream) -> f64 {
    let pw = receive_powers(h, p, sigma2, k).expect("dimensions checked by caller");
    let sinr = match stream {
        Stream::Common => pw.s_c / pw.i_c,
        Stream::Private => pw.s / pw.i,
    };
    sinr.ln_1p() / std::f64::consts::LN_2
}

/// Minimum rate over the center and `n_samples` draws (90% on the boundary
/// sphere, 10% inside the ball), without refinement.
///
/// Sample `i` is interior exactly when `i % 10 == 9`, so for a fixed
/// generator state the draws for `n` samples are a prefix of those for any
/// larger count.
pub fn sampled_worst_case<R: Rng + ?Sized>(
    region: &UncertaintyRegion,
    p: &Precoder,
    sigma2: f64,
    k: usize,
    stream: Stream,
    n_samples: usize,
    rng: &mut R,
) -> (f64, CVec) {
    let nt = region.h_hat.len();
    let mut best_h = region.h_hat.clone();
    let mut best = stream_rate(&best_h, p, sigma2, k, stream);
    for i in 0..n_samples {
        let mode = if i % 10 == 9 {
            ErrorMode::Interior
        } else {
            ErrorMode::Boundary
        };
        let h = &region.h_hat + sample_error(rng, region.delta, mode, nt);
        let r = stream_rate(&h, p, sigma2, k, stream);
        if r < best {
            best = r;
            best_h = h;
        }
    }
    (best, best_h)
}

const REFINE_STEPS: usize = 50;

/// Sampling estimate of the worst-case rate over the region, sharpened by
/// projected random-direction descent from the best sample.
///
/// The result is attained by a channel in the region, so it is an upper
/// bound on the true worst case.
pub fn worst_case_oracle<R: Rng + ?Sized>(
    region: &UncertaintyRegion,
    p: &Precoder,
    sigma2: f64,
    k: usize,
    stream: Stream,
    n_samples: usize,
    rng: &mut R,
) -> (f64, CVec) {
    let (mut best, mut best_h) = sampled_worst_case(region, p, sigma2, k, stream, n_samples, rng);
    if region.delta == 0.0 {
        return (best, best_h);
    }
    let nt = region.h_hat.len();
    let mut step = 0.25 * region.delta;
    for _ in 0..REFINE_STEPS {
        let d = unit_direction(rng, nt) * C64::from(step);
        let mut improved = false;
        for cand in [&best_h + &d, &best_h - &d] {
            let mut e = cand - &region.h_hat;
            let n = e.norm();
            if n > region.delta {
                e *= C64::from(region.delta / n);
            }
            let h = &region.h_hat + e;
            let r = stream_rate(&h, p, sigma2, k, stream);
            if r < best {
                best = r;
                best_h = h;
                improved = true;
                break;
            }
        }
        if improved {
            step *= 1.5;
        } else {
            step *= 0.6;
        }
        step = step.min(region.delta);
    }
    (best, best_h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CMat;

    #[test]
    fn zero_radius_error_is_zero() {
        let mut rng = channel_rng(1, 0);
        assert_eq!(sample_error(&mut rng, 0.0, ErrorMode::Interior, 3), CVec::zeros(3));
    }

    #[test]
    fn boundary_errors_lie_on_sphere() {
        let mut rng = channel_rng(2, 0);
        for _ in 0..100 {
            let e = sample_error(&mut rng, 0.3, ErrorMode::Boundary, 3);
            assert!((e.norm() - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn radius_law_examples() {
        let law = RadiusLaw::new(0.1, 0.5, 10.0).unwrap();
        assert_eq!(law.radius_at(100.0), 0.1);
        let flat = RadiusLaw::new(0.2, 0.0, 4.0).unwrap();
        assert_eq!(flat.radius_at(3.7), 0.4);
        let steep = RadiusLaw::new(0.1, 1.0, 1.0).unwrap();
        assert!((steep.radius_at(10.0) / steep.radius_at(1000.0) - 10.0).abs() < 1e-12);
        assert!(RadiusLaw::new(0.1, 1.5, 1.0).is_err());
    }

    #[test]
    fn channel_streams_are_reproducible_and_distinct() {
        let a = sample_channel(&mut channel_rng(7, 3), 3);
        let b = sample_channel(&mut channel_rng(7, 3), 3);
        let c = sample_channel(&mut channel_rng(7, 4), 3);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 3);
    }

    #[test]
    fn oracle_at_zero_radius_is_nominal() {
        let mut rng = channel_rng(5, 0);
        let h = sample_channel(&mut rng, 2);
        let p = Precoder::new(sample_channel(&mut rng, 2), CMat::identity(2, 2)).unwrap();
        let region = UncertaintyRegion::new(h.clone(), 0.0).unwrap();
        for stream in [Stream::Common, Stream::Private] {
            let (r, _) = worst_case_oracle(&region, &p, 1.0, 1, stream, 50, &mut rng);
            assert_eq!(r, stream_rate(&h, &p, 1.0, 1, stream));
        }
    }
}
