//! Photon-number statistics of phase-randomized sources.
//!
//! Every source here is diagonal in the Fock basis once its phase is
//! randomized, so a source at a given intensity is fully described by the
//! probabilities `P(n)` of emitting `n` photons. Distributions are truncated
//! at the smallest cutoff whose analytic tail falls below a tolerance; the
//! tail is carried explicitly and the kept coefficients are never rescaled.

use std::fmt;
use std::str::FromStr;

use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};

/// Default bound on the probability mass discarded above the cutoff.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-15;

/// Largest tolerance accepted by [`build_distribution`].
pub const MAX_TAIL_TOLERANCE: f64 = 1e-6;

// Series terms are generated until they drop below this absolute size.
const SERIES_FLOOR: f64 = 1e-60;
const SERIES_MAX_TERMS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SourceKind {
    /// Ideal coherent-state superposition: odd photon numbers only.
    Css,
    /// CSS contaminated with even-photon components, weighted by `1 - a`.
    NonidealCss,
    /// Weak coherent state (Poisson statistics).
    Wcs,
    /// Ideal single-photon source.
    Sps,
    Vacuum,
}

impl SourceKind {
    pub const ALL: [SourceKind; 5] = [
        SourceKind::Css,
        SourceKind::NonidealCss,
        SourceKind::Wcs,
        SourceKind::Sps,
        SourceKind::Vacuum,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::Css => "css",
            SourceKind::NonidealCss => "nonideal_css",
            SourceKind::Wcs => "wcs",
            SourceKind::Sps => "sps",
            SourceKind::Vacuum => "vacuum",
        }
    }

    /// Whether the emitted state depends on the intensity parameter.
    pub fn uses_intensity(self) -> bool {
        !matches!(self, SourceKind::Sps | SourceKind::Vacuum)
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SourceKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        SourceKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown source kind `{s}`"))
    }
}

/// A source family at one intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    pub kind: SourceKind,
    /// Mean-photon-number parameter `mu = |alpha|^2`.
    pub intensity: f64,
    /// Weight `a` of the odd-photon component; 1 for an ideal CSS.
    pub odd_weight: f64,
}

impl SourceSpec {
    pub fn css(intensity: f64) -> Self {
        SourceSpec {
            kind: SourceKind::Css,
            intensity,
            odd_weight: 1.0,
        }
    }

    pub fn nonideal_css(intensity: f64, odd_weight: f64) -> Self {
        SourceSpec {
            kind: SourceKind::NonidealCss,
            intensity,
            odd_weight,
        }
    }

    pub fn wcs(intensity: f64) -> Self {
        SourceSpec {
            kind: SourceKind::Wcs,
            intensity,
            odd_weight: 1.0,
        }
    }

    pub fn sps() -> Self {
        SourceSpec {
            kind: SourceKind::Sps,
            intensity: 0.0,
            odd_weight: 1.0,
        }
    }

    pub fn vacuum() -> Self {
        SourceSpec {
            kind: SourceKind::Vacuum,
            intensity: 0.0,
            odd_weight: 1.0,
        }
    }

    /// Same family at a different intensity.
    pub fn with_intensity(self, intensity: f64) -> Self {
        SourceSpec { intensity, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind.uses_intensity() && !(self.intensity >= 0.0 && self.intensity.is_finite()) {
            return Err(Error::domain(format!(
                "intensity must be finite and non-negative, got {}",
                self.intensity
            )));
        }
        if !(0.0..=1.0).contains(&self.odd_weight) {
            return Err(Error::domain(format!(
                "odd weight must lie in [0, 1], got {}",
                self.odd_weight
            )));
        }
        if self.kind == SourceKind::Css && self.odd_weight != 1.0 {
            return Err(Error::domain("an ideal CSS has odd weight exactly 1"));
        }
        Ok(())
    }
}

/// Truncated photon-number distribution `P(0) .. P(cutoff)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonDistribution {
    probabilities: Vec<f64>,
    tail_mass: f64,
}

impl PhotonDistribution {
    /// Builds a distribution from explicit coefficients. The tail mass is
    /// whatever is missing from unity.
    pub fn from_probabilities(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::domain("a distribution needs at least one term"));
        }
        if let Some(p) = probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::domain(format!("probability {p} outside [0, 1]")));
        }
        let total: f64 = probabilities.iter().sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::domain(format!("probabilities sum to {total} > 1")));
        }
        Ok(PhotonDistribution {
            probabilities,
            tail_mass: (1.0 - total).max(0.0),
        })
    }

    /// Largest photon number kept.
    pub fn cutoff(&self) -> usize {
        self.probabilities.len() - 1
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// `P(n)`; zero above the cutoff.
    pub fn p(&self, n: usize) -> f64 {
        self.probabilities.get(n).copied().unwrap_or(0.0)
    }

    /// Probability mass above the cutoff.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Kept mass plus tail mass; equals 1 up to rounding.
    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum::<f64>() + self.tail_mass
    }

    /// Mean photon number of the truncated distribution.
    pub fn mean(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }
}

/// Builds the truncated photon-number distribution of `spec`.
pub fn build_distribution(spec: &SourceSpec, tail_tolerance: f64) -> Result<PhotonDistribution> {
    spec.validate()?;
    if !(tail_tolerance > 0.0 && tail_tolerance <= MAX_TAIL_TOLERANCE) {
        return Err(Error::domain(format!(
            "tail tolerance must lie in (0, {MAX_TAIL_TOLERANCE}], got {tail_tolerance}"
        )));
    }

    let mu = spec.intensity;
    let terms = match spec.kind {
        SourceKind::Vacuum => vec![1.0],
        SourceKind::Sps => vec![0.0, 1.0],
        SourceKind::Wcs if mu == 0.0 => vec![1.0],
        SourceKind::Css if mu == 0.0 => vec![0.0, 1.0],
        SourceKind::NonidealCss if mu == 0.0 => vec![1.0 - spec.odd_weight, spec.odd_weight],
        SourceKind::Wcs => series(|n| Some(-mu + log_power_term(mu, n))),
        SourceKind::Css | SourceKind::NonidealCss => {
            let a = spec.odd_weight;
            let ln_sinh = mu.sinh().ln();
            let ln_cosh = mu.cosh().ln();
            series(|n| {
                let (weight, ln_norm) = if n % 2 == 1 {
                    (a, ln_sinh)
                } else {
                    (1.0 - a, ln_cosh)
                };
                (weight > 0.0).then(|| weight.ln() - ln_norm + log_power_term(mu, n))
            })
        }
    };

    Ok(truncate(terms, tail_tolerance))
}

/// `ln(mu^n / n!)`.
fn log_power_term(mu: f64, n: usize) -> f64 {
    n as f64 * mu.ln() - ln_factorial(n as u64)
}

/// Evaluates `exp(ln_term(n))` for n = 0, 1, ... until the terms are
/// negligible. `None` marks an identically zero coefficient.
fn series(ln_term: impl Fn(usize) -> Option<f64>) -> Vec<f64> {
    let mut out = Vec::new();
    let mut peaked = false;
    let mut prev = 0.0;
    for n in 0..SERIES_MAX_TERMS {
        let value = ln_term(n).map_or(0.0, f64::exp);
        out.push(value);
        if value != 0.0 {
            if value < prev {
                peaked = true;
            }
            prev = value;
        }
        if peaked && value != 0.0 && value < SERIES_FLOOR {
            break;
        }
    }
    out
}

fn truncate(terms: Vec<f64>, tail_tolerance: f64) -> PhotonDistribution {
    // suffix[n] = sum of terms strictly above n
    let mut suffix = vec![0.0; terms.len()];
    let mut acc = 0.0;
    for n in (0..terms.len()).rev() {
        suffix[n] = acc;
        acc += terms[n];
    }
    let cutoff = suffix
        .iter()
        .position(|&tail| tail < tail_tolerance)
        .unwrap_or(terms.len() - 1);
    let tail_mass = suffix[cutoff];
    let mut probabilities = terms;
    probabilities.truncate(cutoff + 1);
    PhotonDistribution {
        probabilities,
        tail_mass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs())
    }

    #[test]
    fn css_has_no_even_terms() {
        let d = build_distribution(&SourceSpec::css(0.1), DEFAULT_TAIL_TOLERANCE).unwrap();
        for n in (0..=d.cutoff()).step_by(2) {
            assert_eq!(d.p(n), 0.0);
        }
    }

    #[test]
    fn css_coefficients_match_high_precision_values() {
        // 40-digit evaluation of mu^n / (n! sinh mu) at mu = 0.1
        let d = build_distribution(&SourceSpec::css(0.1), DEFAULT_TAIL_TOLERANCE).unwrap();
        assert!(close(d.p(1), 0.998_335_275_729_610_9, 1e-14));
        assert!(close(d.p(3), 1.663_892_126_216_018_3e-3, 1e-14));
        assert!(close(d.p(5), 8.319_460_631_080_091e-7, 1e-13));
    }

    #[test]
    fn nonideal_css_coefficients() {
        let d = build_distribution(&SourceSpec::nonideal_css(0.3, 0.7), DEFAULT_TAIL_TOLERANCE)
            .unwrap();
        let expected = [
            0.286_988_373_570_074_5,
            0.689_609_213_306_668_9,
            0.012_914_476_810_653_352,
            0.010_344_138_199_600_034,
            9.685_857_607_990_014e-5,
        ];
        for (n, want) in expected.iter().enumerate() {
            assert!(close(d.p(n), *want, 1e-13), "n={n}: {} vs {want}", d.p(n));
        }
    }

    #[test]
    fn nonideal_small_intensity_limit() {
        let d = build_distribution(&SourceSpec::nonideal_css(1e-9, 0.7), DEFAULT_TAIL_TOLERANCE)
            .unwrap();
        assert!((d.p(0) - 0.3).abs() < 1e-9);
        assert!((d.p(1) - 0.7).abs() < 1e-9);
    }

    #[test]
    fn zero_intensity_limits() {
        let css = build_distribution(&SourceSpec::css(0.0), DEFAULT_TAIL_TOLERANCE).unwrap();
        assert_eq!(css.probabilities(), &[0.0, 1.0]);
        let mixed = build_distribution(&SourceSpec::nonideal_css(0.0, 0.7), DEFAULT_TAIL_TOLERANCE)
            .unwrap();
        assert!((mixed.p(0) - 0.3).abs() < 1e-16);
        assert_eq!(mixed.p(1), 0.7);
        assert_eq!(mixed.tail_mass(), 0.0);
    }

    #[test]
    fn vacuum_and_single_photon() {
        let vac = build_distribution(&SourceSpec::vacuum(), DEFAULT_TAIL_TOLERANCE).unwrap();
        assert_eq!(vac.probabilities(), &[1.0]);
        assert_eq!(vac.cutoff(), 0);
        assert_eq!(vac.tail_mass(), 0.0);
        let sps = build_distribution(&SourceSpec::sps(), DEFAULT_TAIL_TOLERANCE).unwrap();
        assert_eq!(sps.probabilities(), &[0.0, 1.0]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            build_distribution(&SourceSpec::wcs(-0.1), DEFAULT_TAIL_TOLERANCE),
            Err(Error::Domain(_))
        ));
        assert!(build_distribution(&SourceSpec::nonideal_css(0.1, 1.5), 1e-15).is_err());
        let bad_css = SourceSpec {
            odd_weight: 0.5,
            ..SourceSpec::css(0.1)
        };
        assert!(build_distribution(&bad_css, 1e-15).is_err());
        assert!(build_distribution(&SourceSpec::css(0.1), 1e-3).is_err());
        assert!(build_distribution(&SourceSpec::css(0.1), 0.0).is_err());
    }

    #[test]
    fn nonideal_with_unit_weight_is_css() {
        for mu in [1e-4, 0.01, 0.1, 0.5, 2.0] {
            let a = build_distribution(&SourceSpec::css(mu), 1e-15).unwrap();
            let b = build_distribution(&SourceSpec::nonideal_css(mu, 1.0), 1e-15).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn cutoff_is_minimal() {
        let d = build_distribution(&SourceSpec::wcs(0.4), 1e-15).unwrap();
        assert!(d.tail_mass() < 1e-15);
        let shorter_tail: f64 = d.tail_mass() + d.p(d.cutoff());
        assert!(shorter_tail >= 1e-15);
    }

    #[test]
    fn synthetic_distribution() {
        let d = PhotonDistribution::from_probabilities(vec![0.5, 0.5]).unwrap();
        assert_eq!(d.p(2), 0.0);
        assert!(PhotonDistribution::from_probabilities(vec![0.7, 0.7]).is_err());
    }
}
