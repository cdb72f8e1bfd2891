//! Signal model of the MISO downlink with one common and K private streams.
//!
//! User `k` receives `y = hᴴ(p_c s_c + Σ p_i s_i) + n` with unit-power
//! symbols and noise variance `σ²`. The common stream is decoded first,
//! treating every private stream as noise, and then removed (SIC) before the
//! private stream is decoded.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CVec = DVector<C64>;
pub type CMat = DMatrix<C64>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemConfig {
    pub k: usize,
    pub nt: usize,
    pub sigma2: f64,
    pub pt: f64,
}

impl SystemConfig {
    pub fn new(k: usize, nt: usize, sigma2: f64, pt: f64) -> Result<Self> {
        if k == 0 || k > nt {
            return Err(Error::Domain(format!("need 1 <= K <= Nt, got K={k}, Nt={nt}")));
        }
        if !(sigma2 > 0.0) || !(pt > 0.0) {
            return Err(Error::Domain("sigma2 and Pt must be positive".into()));
        }
        Ok(Self { k, nt, sigma2, pt })
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * (self.pt / self.sigma2).log10()
    }
}

/// `P = [p_c, p_1, …, p_K]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Precoder {
    pub pc: CVec,
    /// `Nt × K`, column `k` is `p_k`.
    pub pp: CMat,
}

impl Precoder {
    pub fn new(pc: CVec, pp: CMat) -> Result<Self> {
        if pc.len() != pp.nrows() {
            return Err(Error::Dimension(format!(
                "common precoder has {} entries, private block has {} rows",
                pc.len(),
                pp.nrows()
            )));
        }
        Ok(Self { pc, pp })
    }

    pub fn zeros(nt: usize, k: usize) -> Self {
        Self {
            pc: CVec::zeros(nt),
            pp: CMat::zeros(nt, k),
        }
    }

    /// Splits an `Nt × (K+1)` matrix whose first column is the common precoder.
    pub fn from_full(p: &CMat) -> Self {
        Self {
            pc: p.column(0).into_owned(),
            pp: p.columns(1, p.ncols() - 1).into_owned(),
        }
    }

    pub fn full(&self) -> CMat {
        let (nt, k) = self.pp.shape();
        let mut p = CMat::zeros(nt, k + 1);
        p.set_column(0, &self.pc);
        p.columns_mut(1, k).copy_from(&self.pp);
        p
    }

    pub fn nt(&self) -> usize {
        self.pp.nrows()
    }

    pub fn k(&self) -> usize {
        self.pp.ncols()
    }

    pub fn power(&self) -> f64 {
        precoder_power(self)
    }

    pub fn scaled(&self, f: f64) -> Self {
        Self {
            pc: &self.pc * C64::from(f),
            pp: &self.pp * C64::from(f),
        }
    }

    /// Same private part, common precoder removed.
    pub fn without_common(&self) -> Self {
        Self {
            pc: CVec::zeros(self.nt()),
            pp: self.pp.clone(),
        }
    }
}

/// Receive-power decomposition at one user.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerTerms {
    pub s_c: f64,
    pub s: f64,
    pub i: f64,
    /// Interference seen by the common stream, equal to `t`.
    pub i_c: f64,
    pub t: f64,
    pub t_c: f64,
}

/// Per-user split of the common rate.
#[derive(Clone, Debug, PartialEq)]
pub struct RateSplit {
    pub c: Vec<f64>,
    pub r_c: f64,
}

impl RateSplit {
    pub fn zero(k: usize) -> Self {
        Self {
            c: vec![0.0; k],
            r_c: 0.0,
        }
    }

    pub fn equal(k: usize, r_c: f64) -> Self {
        Self {
            c: vec![r_c / k as f64; k],
            r_c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(v) = self.c.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::Split(format!("negative portion {v}")));
        }
        let sum: f64 = self.c.iter().sum();
        if (sum - self.r_c).abs() > 1e-9 {
            return Err(Error::Split(format!("portions sum to {sum}, common rate is {}", self.r_c)));
        }
        Ok(())
    }
}

fn check_user(h: &CVec, p: &Precoder, k: usize) -> Result<()> {
    if h.len() != p.nt() {
        return Err(Error::Dimension(format!(
            "channel has {} entries, precoder has {} rows",
            h.len(),
            p.nt()
        )));
    }
    if k >= p.k() {
        return Err(Error::Dimension(format!("user {k} out of range for K={}", p.k())));
    }
    Ok(())
}

/// `hᴴv`.
pub(crate) fn inner(h: &CVec, v: nalgebra::DVectorView<'_, C64>) -> C64 {
    h.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Receive powers at user `k` (0-based) with channel `h`.
pub fn receive_powers(h: &CVec, p: &Precoder, sigma2: f64, k: usize) -> Result<PowerTerms> {
    check_user(h, p, k)?;
    let s_c = inner(h, p.pc.column(0)).norm_sqr();
    let mut s = 0.0;
    let mut i = sigma2;
    for j in 0..p.k() {
        let v = inner(h, p.pp.column(j)).norm_sqr();
        if j == k {
            s = v;
        } else {
            i += v;
        }
    }
    let t = s + i;
    Ok(PowerTerms {
        s_c,
        s,
        i,
        i_c: t,
        t,
        t_c: s_c + t,
    })
}

/// Common and private MSEs for receive gains `g_c`, `g`.
pub fn mse_pair(h: &CVec, p: &Precoder, g_c: C64, g: C64, sigma2: f64, k: usize) -> Result<(f64, f64)> {
    let pw = receive_powers(h, p, sigma2, k)?;
    let hc = inner(h, p.pc.column(0));
    let hk = inner(h, p.pp.column(k));
    let eps_c = g_c.norm_sqr() * pw.t_c - 2.0 * (g_c * hc).re + 1.0;
    let eps = g.norm_sqr() * pw.t - 2.0 * (g * hk).re + 1.0;
    Ok((eps_c, eps))
}

pub fn mmse_equalizers(h: &CVec, p: &Precoder, sigma2: f64, k: usize) -> Result<(C64, C64)> {
    let pw = receive_powers(h, p, sigma2, k)?;
    let hc = inner(h, p.pc.column(0));
    let hk = inner(h, p.pp.column(k));
    Ok((hc.conj() / pw.t_c, hk.conj() / pw.t))
}

pub fn mmse_values(h: &CVec, p: &Precoder, sigma2: f64, k: usize) -> Result<(f64, f64)> {
    let pw = receive_powers(h, p, sigma2, k)?;
    Ok((pw.i_c / pw.t_c, pw.i / pw.t))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StreamRates {
    pub gamma_c: f64,
    pub gamma: f64,
    pub r_c: f64,
    pub r: f64,
}

pub fn sinr_and_rate(h: &CVec, p: &Precoder, sigma2: f64, k: usize) -> Result<StreamRates> {
    let pw = receive_powers(h, p, sigma2, k)?;
    let gamma_c = pw.s_c / pw.i_c;
    let gamma = pw.s / pw.i;
    Ok(StreamRates {
        gamma_c,
        gamma,
        r_c: gamma_c.ln_1p() / std::f64::consts::LN_2,
        r: gamma.ln_1p() / std::f64::consts::LN_2,
    })
}

/// Rate at which the common stream is decodable by every user.
pub fn common_rate(rates_c: &[f64]) -> Result<f64> {
    if rates_c.is_empty() {
        return Err(Error::Dimension("empty common-rate vector".into()));
    }
    Ok(rates_c.iter().cloned().fold(f64::INFINITY, f64::min))
}

pub fn total_rates(private_rates: &[f64], split: &RateSplit) -> Result<Vec<f64>> {
    split.validate()?;
    if split.c.len() != private_rates.len() {
        return Err(Error::Dimension(format!(
            "{} private rates, {} split portions",
            private_rates.len(),
            split.c.len()
        )));
    }
    Ok(private_rates.iter().zip(&split.c).map(|(r, c)| r + c).collect())
}

/// `tr(PPᴴ)`.
pub fn precoder_power(p: &Precoder) -> f64 {
    p.pc.norm_squared() + p.pp.norm_squared()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn running_example() -> (CVec, Precoder) {
        let h = CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let p = Precoder::new(CVec::zeros(2), CMat::identity(2, 2)).unwrap();
        (h, p)
    }

    #[test]
    fn orthogonal_columns() {
        let (h, p) = running_example();
        let pw = receive_powers(&h, &p, 1.0, 0).unwrap();
        assert_eq!((pw.s_c, pw.s, pw.i, pw.t, pw.t_c), (0.0, 1.0, 1.0, 2.0, 2.0));
        let (_, eps) = mse_pair(&h, &p, c(0.0, 0.0), c(0.5, 0.0), 1.0, 0).unwrap();
        assert!((eps - 0.5).abs() < 1e-15);
        let (gc, g) = mmse_equalizers(&h, &p, 1.0, 0).unwrap();
        assert_eq!(gc, c(0.0, 0.0));
        assert_eq!(g, c(0.5, 0.0));
        assert_eq!(mmse_values(&h, &p, 1.0, 0).unwrap().1, 0.5);
        let r = sinr_and_rate(&h, &p, 1.0, 0).unwrap();
        assert_eq!((r.gamma, r.r), (1.0, 1.0));
    }

    #[test]
    fn zero_precoder() {
        let h = CVec::from_vec(vec![c(0.3, -1.0), c(2.0, 0.5)]);
        let p = Precoder::zeros(2, 2);
        let pw = receive_powers(&h, &p, 0.7, 1).unwrap();
        assert_eq!((pw.s_c, pw.s, pw.i, pw.t), (0.0, 0.0, 0.7, 0.7));
        assert_eq!(mse_pair(&h, &p, c(0.0, 0.0), c(0.0, 0.0), 0.7, 1).unwrap(), (1.0, 1.0));
        assert_eq!(mmse_values(&h, &p, 0.7, 1).unwrap(), (1.0, 1.0));
        let r = sinr_and_rate(&h, &p, 0.7, 1).unwrap();
        assert_eq!((r.r_c, r.r), (0.0, 0.0));
        assert_eq!(precoder_power(&p), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let h = CVec::zeros(3);
        let p = Precoder::zeros(2, 2);
        assert!(matches!(receive_powers(&h, &p, 1.0, 0), Err(Error::Dimension(_))));
        let h = CVec::zeros(2);
        assert!(receive_powers(&h, &p, 1.0, 2).is_err());
        assert!(Precoder::new(CVec::zeros(3), CMat::zeros(2, 2)).is_err());
    }

    #[test]
    fn common_rate_and_totals() {
        assert_eq!(common_rate(&[2.0, 1.0, 3.0]).unwrap(), 1.0);
        assert_eq!(common_rate(&[0.4]).unwrap(), 0.4);
        assert!(common_rate(&[]).is_err());
        let split = RateSplit {
            c: vec![0.5, 0.25, 0.25],
            r_c: 1.0,
        };
        assert_eq!(total_rates(&[1.0, 1.0, 1.0], &split).unwrap(), vec![1.5, 1.25, 1.25]);
        assert_eq!(total_rates(&[1.0, 2.0], &RateSplit::zero(2)).unwrap(), vec![1.0, 2.0]);
        let bad = RateSplit {
            c: vec![0.5, -0.1],
            r_c: 0.4,
        };
        assert!(total_rates(&[1.0, 1.0], &bad).is_err());
    }

    #[test]
    fn identity_precoder_power() {
        let p = Precoder::new(CVec::zeros(2), CMat::identity(2, 2)).unwrap();
        assert_eq!(precoder_power(&p), 2.0);
        let full = p.full();
        assert_eq!(Precoder::from_full(&full), p);
    }
}
