//! Statistical fluctuations of observed gains under finite data.
//!
//! Each gain entering a decoy bound is observed over `N` uses of its
//! intensity-pair channel. Observed counts are taken at their expected value
//! `N * gain`; the fluctuation model then turns that count into an interval
//! for the expected gain, and the decoy bound is evaluated at whichever
//! endpoint weakens it.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use statrs::function::erf::erfc;

use crate::decoy::{self, DecoyEstimate, DecoyInputs, Estimator, GainBounds, Observable};
use crate::error::{Error, Result};
use crate::optics::Basis;

pub const DEFAULT_SIGMAS: f64 = 5.0;

/// Per-application failure probability; two applications make up a total
/// security bound of 5.73e-7.
pub const DEFAULT_CHERNOFF_EPSILON: f64 = 2.865e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Infinite data: observed gains equal expected gains.
    Asymptotic,
    /// Gaussian `n_sigma` fluctuation around the observed gain.
    Standard,
    /// Multiplicative Chernoff bound on the observed count.
    Chernoff,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Asymptotic, Method::Standard, Method::Chernoff];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Asymptotic => "asymptotic",
            Method::Standard => "standard",
            Method::Chernoff => "chernoff",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "asymptotic" => Ok(Method::Asymptotic),
            "standard" | "standard_5sigma" => Ok(Method::Standard),
            "chernoff" => Ok(Method::Chernoff),
            other => Err(format!(
                "unknown method `{other}` (expected asymptotic, standard or chernoff)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteKeyConfig {
    pub method: Method,
    /// Uses of each intensity-pair channel. Real-valued so that data sizes
    /// beyond `u64` can be expressed.
    pub pulse_pairs: f64,
    pub sigmas: f64,
    pub epsilon: f64,
}

impl Default for FiniteKeyConfig {
    fn default() -> Self {
        FiniteKeyConfig {
            method: Method::Standard,
            pulse_pairs: 1e14,
            sigmas: DEFAULT_SIGMAS,
            epsilon: DEFAULT_CHERNOFF_EPSILON,
        }
    }
}

impl FiniteKeyConfig {
    pub fn asymptotic() -> Self {
        FiniteKeyConfig {
            method: Method::Asymptotic,
            ..Default::default()
        }
    }

    pub fn new(method: Method, pulse_pairs: f64) -> Self {
        FiniteKeyConfig {
            method,
            pulse_pairs,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pulse_pairs >= 1.0 && self.pulse_pairs.is_finite()) {
            return Err(Error::domain(format!(
                "pulse pairs must be finite and >= 1, got {}",
                self.pulse_pairs
            )));
        }
        if !(self.sigmas > 0.0 && self.sigmas.is_finite()) {
            return Err(Error::domain("sigmas must be positive"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::domain("epsilon must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Interval for the expected gain given a gain observed over
    /// `pulse_pairs` uses.
    pub fn interval(&self, gain: f64) -> FluctuationInterval {
        match self.method {
            Method::Asymptotic => FluctuationInterval::exact(gain),
            Method::Standard => standard_interval(gain, self.pulse_pairs, self.sigmas),
            Method::Chernoff => {
                chernoff_interval(gain * self.pulse_pairs, self.pulse_pairs, self.epsilon)
            }
        }
    }
}

/// Two-sided Gaussian tail probability of `sigmas` standard deviations.
pub fn sigmas_to_epsilon(sigmas: f64) -> f64 {
    erfc(sigmas / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluctuationInterval {
    pub lower: f64,
    pub upper: f64,
    pub center: f64,
}

impl FluctuationInterval {
    pub fn exact(value: f64) -> Self {
        FluctuationInterval {
            lower: value,
            upper: value,
            center: value,
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// `gain * (1 +- n_sigma / sqrt(N gain))`, clamped at zero. A zero gain
/// gets the one-sided interval `[0, n_sigma^2 / N]`.
pub fn standard_interval(gain: f64, n_pulses: f64, sigmas: f64) -> FluctuationInterval {
    if gain <= 0.0 {
        return FluctuationInterval {
            lower: 0.0,
            upper: sigmas * sigmas / n_pulses,
            center: 0.0,
        };
    }
    let delta = sigmas / (n_pulses * gain).sqrt();
    FluctuationInterval {
        lower: (gain * (1.0 - delta)).max(0.0),
        upper: gain * (1.0 + delta),
        center: gain,
    }
}

/// Deviation allowed below the observed count: expected values under it are
/// excluded with probability at most `epsilon`.
pub fn chernoff_lower_deviation(count: f64, epsilon: f64) -> f64 {
    (2.0 * count * (-1.5 * epsilon.ln())).sqrt()
}

/// Deviation allowed above the observed count.
pub fn chernoff_upper_deviation(count: f64, epsilon: f64) -> f64 {
    (2.0 * count * (16f64.ln() - 4.0 * epsilon.ln())).sqrt()
}

/// Interval for the expected rate given `observed_count` successes in
/// `n_trials` Bernoulli trials.
pub fn chernoff_interval(observed_count: f64, n_trials: f64, epsilon: f64) -> FluctuationInterval {
    let x = observed_count.max(0.0);
    let lower = (x - chernoff_lower_deviation(x, epsilon)).clamp(0.0, n_trials);
    let upper = (x + chernoff_upper_deviation(x, epsilon)).clamp(0.0, n_trials);
    FluctuationInterval {
        lower: lower / n_trials,
        upper: upper / n_trials,
        center: x / n_trials,
    }
}

/// Draws `experiments` binomial counts of `n_trials` trials at `rate`.
/// Used only to check interval coverage; the pipeline itself is noiseless.
pub fn sample_counts(n_trials: u64, rate: f64, experiments: usize, seed: u64) -> Result<Vec<u64>> {
    let binomial = Binomial::new(n_trials, rate).map_err(|e| Error::domain(e.to_string()))?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    Ok((0..experiments)
        .map(|_| binomial.sample(&mut rng))
        .collect())
}

/// Fraction of sampled experiments whose interval misses the true rate.
pub fn chernoff_escape_fraction(
    n_trials: u64,
    rate: f64,
    epsilon: f64,
    experiments: usize,
    seed: u64,
) -> Result<f64> {
    let counts = sample_counts(n_trials, rate, experiments, seed)?;
    let misses = counts
        .iter()
        .filter(|&&x| !chernoff_interval(x as f64, n_trials as f64, epsilon).contains(rate))
        .count();
    Ok(misses as f64 / experiments as f64)
}

/// Gains observed with finite data: each one widened to its fluctuation
/// interval.
struct Widened<'a> {
    inputs: &'a DecoyInputs,
    config: &'a FiniteKeyConfig,
}

impl GainBounds for Widened<'_> {
    fn interval(&self, observable: Observable) -> Result<FluctuationInterval> {
        let value = self.inputs.value(observable)?;
        Ok(self.config.interval(value))
    }
}

/// Decoy estimate with every input gain moved to the endpoint of its
/// fluctuation interval that weakens the bound.
pub fn worst_case_decoy(
    inputs: &DecoyInputs,
    estimator: Estimator,
    basis: Basis,
    config: &FiniteKeyConfig,
) -> Result<DecoyEstimate> {
    config.validate()?;
    let widened = Widened { inputs, config };
    decoy::estimate_with(estimator, inputs, &widened, basis)
}
