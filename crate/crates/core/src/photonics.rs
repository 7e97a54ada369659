//! Source, fiber and detector: Poisson photon statistics of a phase-averaged
//! weak coherent pulse, dB attenuation, and Bob's raw detection rate.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;
use thiserror::Error;

pub const DEFAULT_ALPHA_DB_PER_KM: f64 = 0.25;
pub const DEFAULT_ETA_DET: f64 = 0.1;
pub const DEFAULT_N_MAX: u32 = 20;
/// Largest Poisson mass allowed beyond `n_max`.
pub const TAIL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("mu must be positive and finite, got {0}")]
    Mu(f64),
    #[error("eta_det must lie in (0, 1], got {0}")]
    EtaDet(f64),
    #[error("alpha_db_per_km must be non-negative and finite, got {0}")]
    Alpha(f64),
    #[error("delta_db must be non-negative and finite, got {0}")]
    Delta(f64),
    #[error("chi must lie in [0, 1), got {0}")]
    Chi(f64),
    #[error("Poisson tail beyond n_max = {n_max} is {tail:e} for mu = {mu}")]
    Truncation { mu: f64, n_max: u32, tail: f64 },
}

/// Experiment configuration: source, line, detector and protocol overlap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Mean photon number per pulse.
    pub mu: f64,
    pub eta_det: f64,
    pub alpha_db_per_km: f64,
    pub delta_db: f64,
    /// Overlap of the two states in an announced set.
    pub chi: f64,
    /// Poisson truncation order.
    pub n_max: u32,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            mu: 0.1,
            eta_det: DEFAULT_ETA_DET,
            alpha_db_per_km: DEFAULT_ALPHA_DB_PER_KM,
            delta_db: 0.0,
            chi: FRAC_1_SQRT_2,
            n_max: DEFAULT_N_MAX,
        }
    }
}

impl ChannelParams {
    pub fn with_mu(self, mu: f64) -> Self {
        Self { mu, ..self }
    }

    pub fn with_delta(self, delta_db: f64) -> Self {
        Self { delta_db, ..self }
    }

    pub fn with_eta_det(self, eta_det: f64) -> Self {
        Self { eta_det, ..self }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(ParamError::Mu(self.mu));
        }
        if !(self.eta_det > 0.0 && self.eta_det <= 1.0) {
            return Err(ParamError::EtaDet(self.eta_det));
        }
        if !(self.alpha_db_per_km >= 0.0 && self.alpha_db_per_km.is_finite()) {
            return Err(ParamError::Alpha(self.alpha_db_per_km));
        }
        if !(self.delta_db >= 0.0 && self.delta_db.is_finite()) {
            return Err(ParamError::Delta(self.delta_db));
        }
        if !(self.chi >= 0.0 && self.chi < 1.0) {
            return Err(ParamError::Chi(self.chi));
        }
        let tail = poisson_tail(self.mu, self.n_max);
        if !(tail < TAIL_TOL) {
            return Err(ParamError::Truncation {
                mu: self.mu,
                n_max: self.n_max,
                tail,
            });
        }
        Ok(())
    }

    pub fn transmittance(&self) -> f64 {
        transmittance(self.delta_db)
    }

    pub fn length_km(&self) -> f64 {
        length_from_delta(self.delta_db, self.alpha_db_per_km)
    }
}

/// `e^{-μ} μ^n / n!`, evaluated in log space.
pub fn poisson_pmf(mu: f64, n: u32) -> f64 {
    if mu <= 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let ln_fact: f64 = (2..=n).map(|k| (k as f64).ln()).sum();
    (-mu + n as f64 * mu.ln() - ln_fact).exp()
}

/// `Σ_{n > n_max} p_n(μ)`, summed directly rather than as `1 - Σ`.
pub fn poisson_tail(mu: f64, n_max: u32) -> f64 {
    let mut tail = 0.0;
    for n in n_max + 1..n_max + 200 {
        let p = poisson_pmf(mu, n);
        tail += p;
        if n as f64 > mu && p < tail * 1e-17 {
            break;
        }
    }
    tail
}

/// `η_δ = 10^{-δ/10}`.
pub fn transmittance(delta_db: f64) -> f64 {
    10f64.powf(-delta_db / 10.0)
}

/// Inverse of [`transmittance`].
pub fn delta_from_transmittance(eta: f64) -> f64 {
    -10.0 * eta.log10()
}

/// `δ = α ℓ`.
pub fn delta_from_length(length_km: f64, alpha_db_per_km: f64) -> f64 {
    alpha_db_per_km * length_km
}

pub fn length_from_delta(delta_db: f64, alpha_db_per_km: f64) -> f64 {
    delta_db / alpha_db_per_km
}

/// Probability that a threshold detector fires when `n` photons each survive
/// independently with probability `eta`: `1 - (1-η)^n`.
pub fn detection_probability(n: u32, eta: f64) -> f64 {
    if n == 0 || eta <= 0.0 {
        return 0.0;
    }
    if eta >= 1.0 {
        return 1.0;
    }
    -(n as f64 * (-eta).ln_1p()).exp_m1()
}

/// `Σ_{n=1}^{n_max} p_n (1 - (1 - η_det η_δ)^n)`.
pub fn raw_rate_exact(params: &ChannelParams) -> f64 {
    raw_rate_at(params, params.delta_db)
}

/// [`raw_rate_exact`] at an explicit attenuation.
pub fn raw_rate_at(params: &ChannelParams, delta_db: f64) -> f64 {
    let eta = params.eta_det * transmittance(delta_db);
    (1..=params.n_max)
        .map(|n| poisson_pmf(params.mu, n) * detection_probability(n, eta))
        .sum()
}

/// Linearized rate `η_det η_δ μ`.
pub fn raw_rate_approx(params: &ChannelParams) -> f64 {
    params.eta_det * params.transmittance() * params.mu
}

/// Inverse-CDF Poisson draw from a uniform sample, capped at `n_max`.
pub fn photon_number_from_uniform(mu: f64, n_max: u32, u: f64) -> u32 {
    let mut cdf = 0.0;
    for n in 0..n_max {
        cdf += poisson_pmf(mu, n);
        if u < cdf {
            return n;
        }
    }
    n_max
}

pub fn sample_photon_number<R: Rng + ?Sized>(mu: f64, n_max: u32, rng: &mut R) -> u32 {
    photon_number_from_uniform(mu, n_max, rng.random::<f64>())
}

pub fn sample_detection<R: Rng + ?Sized>(n_photons: u32, eta: f64, rng: &mut R) -> bool {
    if n_photons == 0 {
        return false;
    }
    rng.random::<f64>() < detection_probability(n_photons, eta)
}
