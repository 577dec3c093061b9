//! Training-data generation: moments of the SNR-blended LLR mixture, the
//! single-Gaussian approximation sampled in its place, and the initial BER
//! it predicts.
//!
//! A blend of `I` SNR points gives LLR components `Z_i ~ N(2/s_i, 4/s_i)`
//! with `s_i` the noise variance at point `i`. The approximation replaces the
//! mixture by one normal with the mixture's mean and variance.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal as NormalDist};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::channel::{all_zero_frame, snr_to_sigma2, stream_rng, ChannelBatch, DOMAIN_CHANNEL};
use crate::error::{Error, Result};
use crate::tanner::CodeParams;

const DOMAIN_APPROX: u64 = 0x4150_5258; // "APRX"
const DOMAIN_SHUFFLE: u64 = 0x5348_5546; // "SHUF"

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MixturePoints {
    /// `I` evenly spaced points in dB, endpoints included.
    Discrete(usize),
    /// The `I -> infinity` limit, uniform in noise standard deviation.
    Continuous,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixtureSpec {
    pub snr_lo_db: f64,
    pub snr_hi_db: f64,
    pub points: MixturePoints,
    pub code: CodeParams,
}

impl MixtureSpec {
    pub fn new(
        snr_lo_db: f64,
        snr_hi_db: f64,
        points: MixturePoints,
        code: CodeParams,
    ) -> Result<Self> {
        if !(snr_lo_db.is_finite() && snr_hi_db.is_finite()) || snr_lo_db > snr_hi_db {
            return Err(Error::InvalidArgument(format!(
                "SNR range [{snr_lo_db}, {snr_hi_db}] is not ordered"
            )));
        }
        if points == MixturePoints::Discrete(0) {
            return Err(Error::InvalidArgument(
                "mixture needs at least one SNR point".into(),
            ));
        }
        Ok(Self {
            snr_lo_db,
            snr_hi_db,
            points,
            code,
        })
    }

    /// The discrete SNR grid, lowest first. A single point sits mid-range.
    pub fn snr_points_db(&self) -> Result<Vec<f64>> {
        let i = match self.points {
            MixturePoints::Discrete(i) if i >= 1 => i,
            MixturePoints::Discrete(_) => {
                return Err(Error::InvalidArgument(
                    "mixture needs at least one SNR point".into(),
                ))
            }
            MixturePoints::Continuous => {
                return Err(Error::InvalidArgument(
                    "continuous mixture has no discrete grid".into(),
                ))
            }
        };
        if i == 1 {
            return Ok(vec![0.5 * (self.snr_lo_db + self.snr_hi_db)]);
        }
        let step = (self.snr_hi_db - self.snr_lo_db) / (i - 1) as f64;
        Ok((0..i).map(|p| self.snr_lo_db + step * p as f64).collect())
    }

    fn sigma2s(&self) -> Result<Vec<f64>> {
        self.snr_points_db()?
            .into_iter()
            .map(|db| snr_to_sigma2(db, &self.code))
            .collect()
    }

    /// CDF of the exact mixture `(1/I) sum_i F_{Z_i}(z)`.
    pub fn mixture_cdf(&self) -> Result<impl Fn(f64) -> f64> {
        let comps: Vec<Normal> = self
            .sigma2s()?
            .into_iter()
            .map(|s2| Normal::new(2.0 / s2, 2.0 / s2.sqrt()).expect("positive variance"))
            .collect();
        Ok(move |z: f64| comps.iter().map(|c| c.cdf(z)).sum::<f64>() / comps.len() as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxMoments {
    pub mu_a: f64,
    pub sigma2_a: f64,
}

/// Mean and variance of the equal-weight mixture over the discrete grid.
pub fn mixture_moments_discrete(spec: &MixtureSpec) -> Result<ApproxMoments> {
    let s2 = spec.sigma2s()?;
    let i = s2.len() as f64;
    let mu_a = s2.iter().map(|s| 2.0 / s).sum::<f64>() / i;
    let second = s2.iter().map(|s| (2.0 / s).powi(2) + 4.0 / s).sum::<f64>() / i;
    Ok(ApproxMoments {
        mu_a,
        sigma2_a: second - mu_a * mu_a,
    })
}

/// Continuous-limit moments, averaging uniformly over the noise standard
/// deviation between the two endpoints:
/// `mu = 2 / (s_lo s_hi)` and the second moment integrates `4 (x^-4 + x^-2)`.
pub fn mixture_moments_continuous(spec: &MixtureSpec) -> Result<ApproxMoments> {
    let s = snr_to_sigma2(spec.snr_hi_db, &spec.code)?.sqrt();
    let e = snr_to_sigma2(spec.snr_lo_db, &spec.code)?.sqrt();
    if s >= e {
        return Err(Error::InvalidArgument(
            "continuous mixture needs distinct endpoints; use a single-point mixture".into(),
        ));
    }
    let width = e - s;
    let mu_a = 2.0 / (s * e);
    let int_x4 = (s.powi(-3) - e.powi(-3)) / 3.0;
    let int_x2 = 1.0 / s - 1.0 / e;
    let second = 4.0 * (int_x4 + int_x2) / width;
    Ok(ApproxMoments {
        mu_a,
        sigma2_a: second - mu_a * mu_a,
    })
}

/// Dispatches on `spec.points`.
pub fn mixture_moments(spec: &MixtureSpec) -> Result<ApproxMoments> {
    match spec.points {
        MixturePoints::Discrete(_) => mixture_moments_discrete(spec),
        MixturePoints::Continuous => mixture_moments_continuous(spec),
    }
}

/// Fills `out` with i.i.d. `N(mu_a, sigma2_a)` draws.
pub fn approx_frame<R: rand::Rng>(m: &ApproxMoments, rng: &mut R, out: &mut [f64]) -> Result<()> {
    if !(m.sigma2_a > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "approximate variance must be positive, got {}",
            m.sigma2_a
        )));
    }
    let dist = NormalDist::new(m.mu_a, m.sigma2_a.sqrt())
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    for x in out {
        *x = dist.sample(rng);
    }
    Ok(())
}

/// A batch of all-zeros frames whose LLRs are drawn from the approximating
/// normal. Frame `f` uses its own random stream.
pub fn sample_approx_batch(
    m: &ApproxMoments,
    batch_size: usize,
    n: usize,
    seed: u64,
) -> Result<ChannelBatch> {
    if batch_size == 0 || n == 0 {
        return Err(Error::InvalidArgument(
            "batch size and code length must be positive".into(),
        ));
    }
    let mut llrs = vec![0.0; batch_size * n];
    for (f, frame) in llrs.chunks_exact_mut(n).enumerate() {
        approx_frame(m, &mut stream_rng(seed, DOMAIN_APPROX, f as u64), frame)?;
    }
    Ok(ChannelBatch {
        batch_size,
        n,
        llrs,
        labels: vec![0; batch_size * n],
        meta: format!("approximate normal mu_a={} sigma2_a={}", m.mu_a, m.sigma2_a),
    })
}

/// Frames per grid point: `batch_size / I` each, with the remainder going
/// one apiece to the lowest-SNR points.
pub fn blend_shares(batch_size: usize, points: usize) -> Vec<usize> {
    let (base, rem) = (batch_size / points, batch_size % points);
    (0..points).map(|p| base + usize::from(p < rem)).collect()
}

/// A batch blended from the discrete grid, frames assigned to points by
/// [`blend_shares`] and then shuffled deterministically.
pub fn sample_blended_batch(
    spec: &MixtureSpec,
    batch_size: usize,
    seed: u64,
) -> Result<ChannelBatch> {
    let n = spec.code.n;
    if batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    let s2 = spec.sigma2s()?;
    let mut assign: Vec<usize> = blend_shares(batch_size, s2.len())
        .into_iter()
        .enumerate()
        .flat_map(|(p, count)| std::iter::repeat_n(p, count))
        .collect();
    assign.shuffle(&mut stream_rng(seed, DOMAIN_SHUFFLE, 0));

    let mut llrs = vec![0.0; batch_size * n];
    for (f, frame) in llrs.chunks_exact_mut(n).enumerate() {
        let mut rng = stream_rng(seed, DOMAIN_CHANNEL, f as u64);
        all_zero_frame(s2[assign[f]], &mut rng, frame);
    }
    Ok(ChannelBatch {
        batch_size,
        n,
        llrs,
        labels: vec![0; batch_size * n],
        meta: format!(
            "blend of {} points over [{}, {}] dB",
            s2.len(),
            spec.snr_lo_db,
            spec.snr_hi_db
        ),
    })
}

/// Probability that an all-zeros LLR drawn from `N(mu_a, sigma2_a)` is
/// negative, i.e. decided as a one.
pub fn initial_ber(m: &ApproxMoments) -> Result<f64> {
    if !(m.sigma2_a > 0.0) {
        return Err(Error::InvalidArgument(
            "initial BER needs a positive variance".into(),
        ));
    }
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(std.cdf(-m.mu_a / m.sigma2_a.sqrt()))
}

/// Largest gap between the empirical CDF of `samples` and `cdf`.
pub fn ks_distance(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
