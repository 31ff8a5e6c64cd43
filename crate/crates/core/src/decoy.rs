//! Decoy-state bounds on the single-photon-pair yield and error rate.
//!
//! Each bound is linear in the observed gains. It is built as a list of
//! `(observable, coefficient)` terms so the same expression serves the
//! noiseless case and the finite-data case, where every observable is an
//! interval and the bound is taken at its least favourable endpoint.

use crate::error::{Error, Result};
use crate::finite::FluctuationInterval;
use crate::optics::Basis;
use crate::rate::GainSet;
use crate::source::PhotonDistribution;

/// Relative size below which the two-decoy denominator is degenerate.
const DEGENERATE_DENOMINATOR: f64 = 1e-12;
/// Relative size below which the two-decoy denominator is flagged.
const ILL_CONDITIONED_DENOMINATOR: f64 = 1e-6;

/// Which intensity pair a gain was observed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    /// Both parties at the signal intensity.
    Signal,
    /// Both parties at the decoy intensity.
    Decoy,
    SignalVacuum,
    VacuumSignal,
    DecoyVacuum,
    VacuumDecoy,
    VacuumVacuum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantity {
    /// `Q`
    Gain,
    /// `E * Q`
    ErrorGain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Observable {
    pub channel: Channel,
    pub basis: Basis,
    pub quantity: Quantity,
}

impl Observable {
    fn new(channel: Channel, basis: Basis, quantity: Quantity) -> Self {
        Observable {
            channel,
            basis,
            quantity,
        }
    }
}

/// Gains of the channels where one or both parties send vacuum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VacuumChannels {
    pub signal_vacuum: GainSet,
    pub vacuum_signal: GainSet,
    pub decoy_vacuum: GainSet,
    pub vacuum_decoy: GainSet,
    pub vacuum_vacuum: GainSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoyInputs {
    /// Signal intensity.
    pub mu1: f64,
    /// Decoy intensity, `0 < mu2 < mu1`.
    pub mu2: f64,
    pub signal: GainSet,
    pub decoy: GainSet,
    pub vacuum: Option<VacuumChannels>,
    pub dist_signal: PhotonDistribution,
    pub dist_decoy: PhotonDistribution,
}

impl DecoyInputs {
    /// Noiseless value of an observable.
    pub fn value(&self, observable: Observable) -> Result<f64> {
        let set = match observable.channel {
            Channel::Signal => &self.signal,
            Channel::Decoy => &self.decoy,
            vac_channel => {
                let vac = self.vacuum.as_ref().ok_or_else(|| {
                    Error::Decoy("vacuum channels required but not supplied".into())
                })?;
                match vac_channel {
                    Channel::SignalVacuum => &vac.signal_vacuum,
                    Channel::VacuumSignal => &vac.vacuum_signal,
                    Channel::DecoyVacuum => &vac.decoy_vacuum,
                    Channel::VacuumDecoy => &vac.vacuum_decoy,
                    _ => &vac.vacuum_vacuum,
                }
            }
        };
        Ok(match observable.quantity {
            Quantity::Gain => set.gain(observable.basis),
            Quantity::ErrorGain => set.error_gain(observable.basis),
        })
    }

    fn check_intensities(&self) -> Result<()> {
        if !(self.mu2 > 0.0 && self.mu1 > self.mu2 && self.mu1.is_finite()) {
            return Err(Error::domain(format!(
                "decoy bounds need mu1 > mu2 > 0, got mu1 = {}, mu2 = {}",
                self.mu1, self.mu2
            )));
        }
        Ok(())
    }
}

/// Source of gain intervals for evaluating a bound.
pub trait GainBounds {
    fn interval(&self, observable: Observable) -> Result<FluctuationInterval>;
}

impl GainBounds for DecoyInputs {
    fn interval(&self, observable: Observable) -> Result<FluctuationInterval> {
        self.value(observable).map(FluctuationInterval::exact)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DecoyFlags {
    /// The yield bound came out negative and was raised to zero.
    pub clamped_to_zero: bool,
    /// The error-rate bound exceeds one half.
    pub error_bound_above_half: bool,
    /// The two-decoy denominator is small relative to its terms.
    pub denominator_ill_conditioned: bool,
}

impl DecoyFlags {
    pub fn any(&self) -> bool {
        self.clamped_to_zero || self.error_bound_above_half || self.denominator_ill_conditioned
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoyEstimate {
    /// Lower bound on `Y11`.
    pub y11_lower: f64,
    /// Upper bound on `e11`. Equals 1 when the yield bound is zero.
    pub e11_upper: f64,
    pub flags: DecoyFlags,
}

/// How the single-photon quantities are obtained for a source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    /// Single-photon source: the signal gains are the single-photon gains.
    Direct,
    /// One decoy, valid for ideal CSS (no even-photon terms).
    OneDecoyCss,
    /// Decoy plus vacuum, valid for any photon-number distribution.
    VacuumDecoy,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::Direct => "direct",
            Estimator::OneDecoyCss => "one_decoy",
            Estimator::VacuumDecoy => "vacuum_decoy",
        }
    }

    pub fn needs_vacuum(self) -> bool {
        self == Estimator::VacuumDecoy
    }
}

impl std::str::FromStr for Estimator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "direct" => Ok(Estimator::Direct),
            "one_decoy" => Ok(Estimator::OneDecoyCss),
            "vacuum_decoy" => Ok(Estimator::VacuumDecoy),
            other => Err(format!(
                "unknown estimator `{other}` (expected direct, one_decoy or vacuum_decoy)"
            )),
        }
    }
}

/// `sum(coefficient * observable)`.
#[derive(Debug, Clone, Default)]
struct LinearForm {
    terms: Vec<(Observable, f64)>,
}

impl LinearForm {
    fn add(&mut self, observable: Observable, coefficient: f64) {
        match self.terms.iter_mut().find(|(o, _)| *o == observable) {
            Some((_, c)) => *c += coefficient,
            None => self.terms.push((observable, coefficient)),
        }
    }

    fn extreme(&self, bounds: &dyn GainBounds, minimize: bool) -> Result<f64> {
        let mut total = 0.0;
        for &(observable, c) in &self.terms {
            let iv = bounds.interval(observable)?;
            let take_lower = (c > 0.0) == minimize;
            total += c * if take_lower { iv.lower } else { iv.upper };
        }
        Ok(total)
    }

    fn minimum(&self, bounds: &dyn GainBounds) -> Result<f64> {
        self.extreme(bounds, true)
    }

    fn maximum(&self, bounds: &dyn GainBounds) -> Result<f64> {
        self.extreme(bounds, false)
    }
}

/// Yield and error-numerator forms of one estimator in one basis. The error
/// bound is `error_numerator / (error_scale * y11_lower)`.
struct BoundForms {
    yield_lower: LinearForm,
    error_numerator: LinearForm,
    error_scale: f64,
    flags: DecoyFlags,
}

fn finish(forms: BoundForms, bounds: &dyn GainBounds) -> Result<DecoyEstimate> {
    let mut flags = forms.flags;
    let mut y11_lower = forms.yield_lower.minimum(bounds)?;
    if y11_lower <= 0.0 {
        y11_lower = 0.0;
        flags.clamped_to_zero = true;
    }
    let y11_lower = y11_lower.min(1.0);
    let e11_upper = if y11_lower > 0.0 {
        (forms.error_numerator.maximum(bounds)? / (forms.error_scale * y11_lower)).max(0.0)
    } else {
        1.0
    };
    flags.error_bound_above_half = e11_upper > 0.5;
    Ok(DecoyEstimate {
        y11_lower,
        e11_upper,
        flags,
    })
}

fn one_decoy_forms(inputs: &DecoyInputs, basis: Basis) -> Result<BoundForms> {
    inputs.check_intensities()?;
    for dist in [&inputs.dist_signal, &inputs.dist_decoy] {
        if dist.probabilities().iter().step_by(2).any(|&p| p != 0.0) {
            return Err(Error::domain(
                "one-decoy bound requires sources without even photon numbers",
            ));
        }
    }
    let (mu1, mu2) = (inputs.mu1, inputs.mu2);
    let (s1, s2) = (mu1.sinh().powi(2), mu2.sinh().powi(2));
    let denominator = mu1 * mu1 * mu2 * mu2 * (mu1 * mu1 - mu2 * mu2);

    let mut yield_lower = LinearForm::default();
    yield_lower.add(
        Observable::new(Channel::Decoy, basis, Quantity::Gain),
        mu1.powi(4) * s2 / denominator,
    );
    yield_lower.add(
        Observable::new(Channel::Signal, basis, Quantity::Gain),
        -mu2.powi(4) * s1 / denominator,
    );
    let mut error_numerator = LinearForm::default();
    error_numerator.add(
        Observable::new(Channel::Decoy, basis, Quantity::ErrorGain),
        s2,
    );
    Ok(BoundForms {
        yield_lower,
        error_numerator,
        error_scale: mu2 * mu2,
        flags: DecoyFlags::default(),
    })
}

/// Terms of `g(mu) = Q_mumu - P(0) Q_mu0 - P(0) Q_0mu + P(0)^2 Q_00`, the
/// gain with every vacuum contribution removed, scaled by `weight`.
fn add_vacuum_subtracted(
    form: &mut LinearForm,
    channels: [Channel; 3],
    p0: f64,
    basis: Basis,
    quantity: Quantity,
    weight: f64,
) {
    let [both, left, right] = channels;
    form.add(Observable::new(both, basis, quantity), weight);
    form.add(Observable::new(left, basis, quantity), -weight * p0);
    form.add(Observable::new(right, basis, quantity), -weight * p0);
    form.add(
        Observable::new(Channel::VacuumVacuum, basis, quantity),
        weight * p0 * p0,
    );
}

fn vacuum_decoy_forms(inputs: &DecoyInputs, basis: Basis) -> Result<BoundForms> {
    inputs.check_intensities()?;
    if inputs.vacuum.is_none() {
        return Err(Error::Decoy(
            "decoy+vacuum bound requires vacuum channels".into(),
        ));
    }
    let (d1, d2) = (&inputs.dist_signal, &inputs.dist_decoy);
    let (p1_0, p1_1, p1_2) = (d1.p(0), d1.p(1), d1.p(2));
    let (p2_0, p2_1, p2_2) = (d2.p(0), d2.p(1), d2.p(2));

    let cross = p2_1 * p1_2 - p1_1 * p2_2;
    let scale = (p2_1 * p1_2).abs() + (p1_1 * p2_2).abs();
    let denominator = p1_1 * p2_1 * cross;
    if denominator == 0.0 || cross.abs() <= DEGENERATE_DENOMINATOR * scale {
        return Err(Error::Decoy(format!(
            "degenerate decoy+vacuum denominator (P1(1) = {p1_1}, P2(1) = {p2_1}, \
             P2(1)P1(2) - P1(1)P2(2) = {cross})"
        )));
    }
    let flags = DecoyFlags {
        denominator_ill_conditioned: cross.abs() <= ILL_CONDITIONED_DENOMINATOR * scale,
        ..Default::default()
    };

    let signal_channels = [
        Channel::Signal,
        Channel::SignalVacuum,
        Channel::VacuumSignal,
    ];
    let decoy_channels = [Channel::Decoy, Channel::DecoyVacuum, Channel::VacuumDecoy];

    let mut yield_lower = LinearForm::default();
    add_vacuum_subtracted(
        &mut yield_lower,
        decoy_channels,
        p2_0,
        basis,
        Quantity::Gain,
        p1_1 * p1_2 / denominator,
    );
    add_vacuum_subtracted(
        &mut yield_lower,
        signal_channels,
        p1_0,
        basis,
        Quantity::Gain,
        -p2_1 * p2_2 / denominator,
    );
    let mut error_numerator = LinearForm::default();
    add_vacuum_subtracted(
        &mut error_numerator,
        decoy_channels,
        p2_0,
        basis,
        Quantity::ErrorGain,
        1.0,
    );
    Ok(BoundForms {
        yield_lower,
        error_numerator,
        error_scale: p2_1 * p2_1,
        flags,
    })
}

fn direct_forms(inputs: &DecoyInputs, basis: Basis) -> Result<BoundForms> {
    let p1 = inputs.dist_signal.p(1);
    if p1 != 1.0 {
        return Err(Error::domain(
            "direct estimation requires a source emitting exactly one photon",
        ));
    }
    let mut yield_lower = LinearForm::default();
    yield_lower.add(Observable::new(Channel::Signal, basis, Quantity::Gain), 1.0);
    let mut error_numerator = LinearForm::default();
    error_numerator.add(
        Observable::new(Channel::Signal, basis, Quantity::ErrorGain),
        1.0,
    );
    Ok(BoundForms {
        yield_lower,
        error_numerator,
        error_scale: 1.0,
        flags: DecoyFlags::default(),
    })
}

/// Evaluates `estimator` in `basis` with gains drawn from `bounds`.
pub fn estimate_with(
    estimator: Estimator,
    inputs: &DecoyInputs,
    bounds: &dyn GainBounds,
    basis: Basis,
) -> Result<DecoyEstimate> {
    let forms = match estimator {
        Estimator::Direct => direct_forms(inputs, basis)?,
        Estimator::OneDecoyCss => one_decoy_forms(inputs, basis)?,
        Estimator::VacuumDecoy => vacuum_decoy_forms(inputs, basis)?,
    };
    finish(forms, bounds)
}

/// Noiseless estimate.
pub fn estimate(estimator: Estimator, inputs: &DecoyInputs, basis: Basis) -> Result<DecoyEstimate> {
    estimate_with(estimator, inputs, inputs, basis)
}

/// One-decoy bound for ideal CSS sources.
pub fn one_decoy_css(inputs: &DecoyInputs, basis: Basis) -> Result<DecoyEstimate> {
    estimate(Estimator::OneDecoyCss, inputs, basis)
}

/// Decoy+vacuum bound for an arbitrary photon-number distribution.
pub fn two_decoy_generic(inputs: &DecoyInputs, basis: Basis) -> Result<DecoyEstimate> {
    estimate(Estimator::VacuumDecoy, inputs, basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::{build_distribution, SourceSpec};

    fn dist(spec: SourceSpec) -> PhotonDistribution {
        build_distribution(&spec, 1e-15).unwrap()
    }

    fn flat_inputs(mu1: f64, mu2: f64) -> DecoyInputs {
        DecoyInputs {
            mu1,
            mu2,
            signal: GainSet::default(),
            decoy: GainSet::default(),
            vacuum: None,
            dist_signal: dist(SourceSpec::css(mu1.max(0.0))),
            dist_decoy: dist(SourceSpec::css(mu2.max(0.0))),
        }
    }

    #[test]
    fn equal_intensities_rejected() {
        let inputs = flat_inputs(0.1, 0.1);
        assert!(matches!(
            one_decoy_css(&inputs, Basis::Z),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn zero_gains_clamp() {
        let est = one_decoy_css(&flat_inputs(0.1, 0.01), Basis::Z).unwrap();
        assert_eq!(est.y11_lower, 0.0);
        assert!(est.flags.clamped_to_zero);
        assert_eq!(est.e11_upper, 1.0);
    }

    #[test]
    fn one_decoy_rejects_even_photons() {
        let mut inputs = flat_inputs(0.1, 0.01);
        inputs.dist_signal = dist(SourceSpec::wcs(0.1));
        assert!(one_decoy_css(&inputs, Basis::Z).is_err());
    }

    #[test]
    fn vacuum_decoy_needs_vacuum_channels() {
        let mut inputs = flat_inputs(0.1, 0.01);
        inputs.dist_signal = dist(SourceSpec::wcs(0.1));
        inputs.dist_decoy = dist(SourceSpec::wcs(0.01));
        assert!(matches!(
            two_decoy_generic(&inputs, Basis::Z),
            Err(Error::Decoy(_))
        ));
    }

    #[test]
    fn degenerate_denominator() {
        let mut inputs = flat_inputs(0.1, 0.01);
        inputs.vacuum = Some(VacuumChannels {
            signal_vacuum: GainSet::default(),
            vacuum_signal: GainSet::default(),
            decoy_vacuum: GainSet::default(),
            vacuum_decoy: GainSet::default(),
            vacuum_vacuum: GainSet::default(),
        });
        inputs.dist_signal = PhotonDistribution::from_probabilities(vec![0.9, 0.1]).unwrap();
        inputs.dist_decoy = PhotonDistribution::from_probabilities(vec![0.99, 0.01]).unwrap();
        assert!(matches!(
            two_decoy_generic(&inputs, Basis::Z),
            Err(Error::Decoy(_))
        ));
    }

    #[test]
    fn linear_form_picks_weakening_endpoints() {
        struct Wide;
        impl GainBounds for Wide {
            fn interval(&self, _: Observable) -> Result<FluctuationInterval> {
                Ok(FluctuationInterval {
                    lower: 1.0,
                    upper: 3.0,
                    center: 2.0,
                })
            }
        }
        let mut form = LinearForm::default();
        let a = Observable::new(Channel::Decoy, Basis::Z, Quantity::Gain);
        let b = Observable::new(Channel::Signal, Basis::Z, Quantity::Gain);
        form.add(a, 2.0);
        form.add(b, -1.0);
        assert_eq!(form.minimum(&Wide).unwrap(), 2.0 * 1.0 - 3.0);
        assert_eq!(form.maximum(&Wide).unwrap(), 2.0 * 3.0 - 1.0);
        form.add(a, -2.0);
        assert_eq!(form.terms.len(), 2);
    }
}
