//! Observable gains, error rates and the asymptotic key-rate formula.

use crate::error::{Error, Result};
use crate::finite::Method;
use crate::optics::{Basis, DetectorParams, YieldTable};
use crate::source::PhotonDistribution;

/// Physical parameters of the link and the detection stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub detector_efficiency: f64,
    pub dark_count: f64,
    /// Fiber attenuation in dB/km.
    pub fiber_loss: f64,
    pub misalignment: f64,
    /// Error-correction inefficiency `f >= 1`.
    pub ec_efficiency: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            detector_efficiency: 0.40,
            dark_count: 1e-7,
            fiber_loss: 0.2,
            misalignment: 0.015,
            ec_efficiency: 1.16,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let unit = 0.0..=1.0;
        if !unit.contains(&self.detector_efficiency) {
            return Err(Error::domain("detector efficiency must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.dark_count) {
            return Err(Error::domain("dark count must lie in [0, 1)"));
        }
        if !(self.fiber_loss >= 0.0 && self.fiber_loss.is_finite()) {
            return Err(Error::domain("fiber loss must be finite and non-negative"));
        }
        if !unit.contains(&self.misalignment) {
            return Err(Error::domain("misalignment must lie in [0, 1]"));
        }
        if !(self.ec_efficiency >= 1.0 && self.ec_efficiency.is_finite()) {
            return Err(Error::domain("error-correction efficiency must be >= 1"));
        }
        Ok(())
    }

    /// Per-arm efficiency with the relay at the midpoint of `distance_km`:
    /// `eta_d * 10^(-beta L / 20)`.
    pub fn overall_efficiency(&self, distance_km: f64) -> f64 {
        self.detector_efficiency * 10f64.powf(-self.fiber_loss * distance_km / 20.0)
    }

    pub fn detector_params(&self, distance_km: f64) -> Result<DetectorParams> {
        if !(distance_km >= 0.0 && distance_km.is_finite()) {
            return Err(Error::domain(format!("invalid distance {distance_km}")));
        }
        DetectorParams::new(self.overall_efficiency(distance_km), self.dark_count)
    }
}

/// Gains of one intensity pair in both bases.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GainSet {
    pub q_z: f64,
    /// Error-weighted gain `E_z * Q_z`.
    pub eq_z: f64,
    pub q_x: f64,
    pub eq_x: f64,
    pub q_c_z: f64,
    pub q_e_z: f64,
    pub q_c_x: f64,
    pub q_e_x: f64,
    /// Upper bound on the gain lost to distribution truncation.
    pub truncation_bound: f64,
}

impl GainSet {
    pub fn gain(&self, basis: Basis) -> f64 {
        match basis {
            Basis::Z => self.q_z,
            Basis::X => self.q_x,
        }
    }

    pub fn error_gain(&self, basis: Basis) -> f64 {
        match basis {
            Basis::Z => self.eq_z,
            Basis::X => self.eq_x,
        }
    }

    pub fn correct_gain(&self, basis: Basis) -> f64 {
        match basis {
            Basis::Z => self.q_c_z,
            Basis::X => self.q_c_x,
        }
    }

    pub fn wrong_gain(&self, basis: Basis) -> f64 {
        match basis {
            Basis::Z => self.q_e_z,
            Basis::X => self.q_e_x,
        }
    }

    /// Quantum bit error rate, undefined without detections.
    pub fn qber(&self, basis: Basis) -> Option<f64> {
        let q = self.gain(basis);
        (q > 0.0).then(|| self.error_gain(basis) / q)
    }
}

/// Misalignment mixing of correct and wrong yields or gains.
#[inline]
pub fn mix_errors(correct: f64, wrong: f64, misalignment: f64) -> f64 {
    misalignment * correct + (1.0 - misalignment) * wrong
}

/// Averages the yield table over Alice's and Bob's photon-number statistics.
pub fn gains(
    dist_a: &PhotonDistribution,
    dist_b: &PhotonDistribution,
    table: &YieldTable,
    misalignment: f64,
) -> Result<GainSet> {
    for dist in [dist_a, dist_b] {
        if dist.cutoff() > table.cutoff() {
            return Err(Error::CutoffMismatch {
                distribution: dist.cutoff(),
                table: table.cutoff(),
            });
        }
    }
    if !(0.0..=1.0).contains(&misalignment) {
        return Err(Error::domain("misalignment must lie in [0, 1]"));
    }

    let mut sums = [0.0; 4];
    for (i, &pa) in dist_a.probabilities().iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        let mut row = [0.0; 4];
        for (j, &pb) in dist_b.probabilities().iter().enumerate() {
            if pb == 0.0 {
                continue;
            }
            row[0] += pb * table.correct(Basis::Z, i, j);
            row[1] += pb * table.error(Basis::Z, i, j);
            row[2] += pb * table.correct(Basis::X, i, j);
            row[3] += pb * table.error(Basis::X, i, j);
        }
        for (s, r) in sums.iter_mut().zip(row) {
            *s += pa * r;
        }
    }
    let [q_c_z, q_e_z, q_c_x, q_e_x] = sums;
    let (ta, tb) = (dist_a.tail_mass(), dist_b.tail_mass());
    Ok(GainSet {
        q_z: q_c_z + q_e_z,
        eq_z: mix_errors(q_c_z, q_e_z, misalignment),
        q_x: q_c_x + q_e_x,
        eq_x: mix_errors(q_c_x, q_e_x, misalignment),
        q_c_z,
        q_e_z,
        q_c_x,
        q_e_x,
        truncation_bound: ta + tb - ta * tb,
    })
}

/// Binary Shannon entropy in bits, with `H(0) = H(1) = 0`.
pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
    }
}

/// `Q11 (1 - H(e11)) - Q f H(E)` before clamping. Phase-error rates above
/// one half are charged as one half.
pub fn key_rate_unclamped(q11_z: f64, e11_x: f64, q_z: f64, e_z: f64, f: f64) -> f64 {
    let phase = binary_entropy(e11_x.min(0.5));
    q11_z * (1.0 - phase) - q_z * f * binary_entropy(e_z)
}

/// Secret bits per matched-basis pulse pair.
pub fn key_rate(q11_z: f64, e11_x: f64, q_z: f64, e_z: f64, f: f64) -> f64 {
    key_rate_unclamped(q11_z, e11_x, q_z, e_z, f).max(0.0)
}

/// Exact single-photon-pair yield and error rate in one basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinglePhotonTruth {
    pub yield_11: f64,
    /// `None` when the pair never produces an announcement.
    pub error_rate: Option<f64>,
}

pub fn single_photon_truth(
    table: &YieldTable,
    misalignment: f64,
    basis: Basis,
) -> SinglePhotonTruth {
    let (c, e) = (table.correct(basis, 1, 1), table.error(basis, 1, 1));
    let yield_11 = c + e;
    SinglePhotonTruth {
        yield_11,
        error_rate: (yield_11 > 0.0).then(|| mix_errors(c, e, misalignment) / yield_11),
    }
}

/// `(Y11^Z, e11^X)` read directly off the yield table.
pub fn true_single_photon_quantities(table: &YieldTable, misalignment: f64) -> Result<(f64, f64)> {
    let z = single_photon_truth(table, misalignment, Basis::Z);
    let x = single_photon_truth(table, misalignment, Basis::X);
    let e11_x = x.error_rate.ok_or(Error::UndefinedErrorRate)?;
    Ok((z.yield_11, e11_x))
}

/// One row of a key-rate sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyRatePoint {
    pub distance_km: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub method: Method,
    pub rate: f64,
    /// The key-rate expression before clamping at zero.
    pub rate_unclamped: f64,
    /// Lower bound on `P(1) P(1) Y11^Z` at the signal intensity.
    pub q11_z: f64,
    pub y11_lower: f64,
    /// Upper bound on the single-photon phase-error rate.
    pub e11_x: f64,
    /// Signal-intensity gains.
    pub gains: GainSet,
}

impl KeyRatePoint {
    pub fn qber_z(&self) -> f64 {
        self.gains.qber(Basis::Z).unwrap_or(0.0)
    }
}
