//! Scenario orchestration: distance sweeps, source comparisons and
//! intensity searches over a shared optics cache.

mod config;
mod csv;

use rayon::prelude::*;

use crate::decoy::{DecoyInputs, Estimator, VacuumChannels};
use crate::error::{Error, Result};
use crate::finite::{worst_case_decoy, FiniteKeyConfig};
use crate::optics::{Basis, OpticsCache, YieldTable, DEFAULT_CUTOFF};
use crate::rate::{gains, key_rate_unclamped, KeyRatePoint, SystemParams};
use crate::source::{
    build_distribution, PhotonDistribution, SourceKind, SourceSpec, DEFAULT_TAIL_TOLERANCE,
};

pub use config::parse_config;
pub use csv::{format_real, write_rates_csv, write_yields_csv, RATES_HEADER, YIELDS_HEADER};

/// Odd-photon weight of the contaminated CSS in source comparisons.
pub const DEFAULT_ODD_WEIGHT: f64 = 0.7;

/// A source family with its signal/decoy intensities and estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSetup {
    pub kind: SourceKind,
    pub odd_weight: f64,
    pub signal_mu: f64,
    pub decoy_mu: f64,
    /// Whether the vacuum intensity is also sent.
    pub vacuum: bool,
    pub estimator: Estimator,
}

impl SourceSetup {
    /// Ideal CSS with one decoy at intensities 0.1 / 0.01.
    pub fn css() -> Self {
        SourceSetup {
            kind: SourceKind::Css,
            odd_weight: 1.0,
            signal_mu: 0.1,
            decoy_mu: 0.01,
            vacuum: false,
            estimator: Estimator::OneDecoyCss,
        }
    }

    /// Contaminated CSS with decoy and vacuum at 0.1 / 0.01 / 0. With unit
    /// odd weight the source is an ideal CSS and uses the one-decoy bound.
    pub fn nonideal_css(odd_weight: f64) -> Self {
        let ideal = odd_weight == 1.0;
        SourceSetup {
            kind: SourceKind::NonidealCss,
            odd_weight,
            vacuum: !ideal,
            estimator: if ideal {
                Estimator::OneDecoyCss
            } else {
                Estimator::VacuumDecoy
            },
            ..SourceSetup::css()
        }
    }

    /// Weak coherent state with decoy and vacuum at 0.4 / 0.07 / 0.
    pub fn wcs() -> Self {
        SourceSetup {
            kind: SourceKind::Wcs,
            odd_weight: 1.0,
            signal_mu: 0.4,
            decoy_mu: 0.07,
            vacuum: true,
            estimator: Estimator::VacuumDecoy,
        }
    }

    pub fn sps() -> Self {
        SourceSetup {
            kind: SourceKind::Sps,
            odd_weight: 1.0,
            signal_mu: 0.0,
            decoy_mu: 0.0,
            vacuum: false,
            estimator: Estimator::Direct,
        }
    }

    pub fn for_kind(kind: SourceKind) -> Result<Self> {
        match kind {
            SourceKind::Css => Ok(Self::css()),
            SourceKind::NonidealCss => Ok(Self::nonideal_css(DEFAULT_ODD_WEIGHT)),
            SourceKind::Wcs => Ok(Self::wcs()),
            SourceKind::Sps => Ok(Self::sps()),
            SourceKind::Vacuum => Err(Error::Infeasible(
                "a vacuum source cannot distribute a key".into(),
            )),
        }
    }

    pub fn label(&self) -> &'static str {
        self.kind.as_str()
    }

    fn spec(&self, intensity: f64) -> SourceSpec {
        SourceSpec {
            kind: self.kind,
            intensity,
            odd_weight: self.odd_weight,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec(self.signal_mu)
            .validate()
            .map_err(|e| Error::Infeasible(e.to_string()))?;
        match self.estimator {
            Estimator::Direct => {
                if self.kind != SourceKind::Sps {
                    return Err(Error::Infeasible(format!(
                        "direct estimation needs a single-photon source, not {}",
                        self.kind
                    )));
                }
            }
            Estimator::OneDecoyCss | Estimator::VacuumDecoy => {
                if !(self.signal_mu > self.decoy_mu && self.decoy_mu > 0.0) {
                    return Err(Error::Infeasible(format!(
                        "intensities must satisfy signal > decoy > 0, got {} and {}",
                        self.signal_mu, self.decoy_mu
                    )));
                }
                if self.estimator.needs_vacuum() && !self.vacuum {
                    return Err(Error::Infeasible(
                        "the decoy+vacuum estimator needs the vacuum intensity".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Builds the distributions once for repeated evaluation.
    pub fn prepare(&self, tail_tolerance: f64) -> Result<PreparedSource> {
        self.validate()?;
        let signal = build_distribution(&self.spec(self.signal_mu), tail_tolerance)?;
        let decoy = match self.estimator {
            Estimator::Direct => signal.clone(),
            _ => build_distribution(&self.spec(self.decoy_mu), tail_tolerance)?,
        };
        let vacuum = self
            .vacuum
            .then(|| build_distribution(&SourceSpec::vacuum(), tail_tolerance))
            .transpose()?;
        Ok(PreparedSource {
            setup: self.clone(),
            signal,
            decoy,
            vacuum,
        })
    }
}

/// A source with its photon-number distributions built.
#[derive(Debug, Clone)]
pub struct PreparedSource {
    pub setup: SourceSetup,
    pub signal: PhotonDistribution,
    pub decoy: PhotonDistribution,
    pub vacuum: Option<PhotonDistribution>,
}

impl PreparedSource {
    /// Largest photon number any of the distributions keeps.
    pub fn required_cutoff(&self) -> usize {
        self.signal.cutoff().max(self.decoy.cutoff())
    }

    fn check_cutoff(&self, table_cutoff: usize) -> Result<()> {
        let needed = self.required_cutoff();
        if needed > table_cutoff {
            return Err(Error::CutoffMismatch {
                distribution: needed,
                table: table_cutoff,
            });
        }
        Ok(())
    }

    /// Gains the chosen estimator consumes, at one distance.
    pub fn decoy_inputs(&self, table: &YieldTable, misalignment: f64) -> Result<DecoyInputs> {
        let signal = gains(&self.signal, &self.signal, table, misalignment)?;
        let decoy = match self.setup.estimator {
            Estimator::Direct => signal,
            _ => gains(&self.decoy, &self.decoy, table, misalignment)?,
        };
        let vacuum = match (&self.vacuum, self.setup.estimator.needs_vacuum()) {
            (Some(vac), true) => Some(VacuumChannels {
                signal_vacuum: gains(&self.signal, vac, table, misalignment)?,
                vacuum_signal: gains(vac, &self.signal, table, misalignment)?,
                decoy_vacuum: gains(&self.decoy, vac, table, misalignment)?,
                vacuum_decoy: gains(vac, &self.decoy, table, misalignment)?,
                vacuum_vacuum: gains(vac, vac, table, misalignment)?,
            }),
            _ => None,
        };
        Ok(DecoyInputs {
            mu1: self.setup.signal_mu,
            mu2: self.setup.decoy_mu,
            signal,
            decoy,
            vacuum,
            dist_signal: self.signal.clone(),
            dist_decoy: self.decoy.clone(),
        })
    }

    /// Key rate at one distance given the yield table for that distance.
    pub fn evaluate(
        &self,
        table: &YieldTable,
        system: &SystemParams,
        finite: &FiniteKeyConfig,
        distance_km: f64,
    ) -> Result<KeyRatePoint> {
        let inputs = self.decoy_inputs(table, system.misalignment)?;
        let estimator = self.setup.estimator;
        let z = worst_case_decoy(&inputs, estimator, Basis::Z, finite)?;
        let x = worst_case_decoy(&inputs, estimator, Basis::X, finite)?;
        let p1 = self.signal.p(1);
        let q11_z = p1 * p1 * z.y11_lower;
        let q_z = inputs.signal.q_z;
        let e_z = inputs.signal.qber(Basis::Z).unwrap_or(0.0);
        let rate_unclamped = key_rate_unclamped(q11_z, x.e11_upper, q_z, e_z, system.ec_efficiency);
        Ok(KeyRatePoint {
            distance_km,
            mu1: self.setup.signal_mu,
            mu2: self.setup.decoy_mu,
            method: finite.method,
            rate: rate_unclamped.max(0.0),
            rate_unclamped,
            q11_z,
            y11_lower: z.y11_lower,
            e11_x: x.e11_upper,
            gains: inputs.signal,
        })
    }
}

/// Evenly spaced distances `start, start + step, ..., <= stop` in km.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for DistanceGrid {
    fn default() -> Self {
        DistanceGrid {
            start: 0.0,
            stop: 585.0,
            step: 15.0,
        }
    }
}

impl DistanceGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.start >= 0.0
            && self.stop >= self.start
            && self.start.is_finite()
            && self.stop.is_finite())
        {
            return Err(Error::Infeasible(format!(
                "distance grid needs 0 <= start <= stop, got {}..{}",
                self.start, self.stop
            )));
        }
        if self.step.is_nan() || self.step <= 0.0 {
            return Err(Error::Infeasible("distance step must be positive".into()));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| self.start + k as f64 * self.step)
            .collect()
    }
}

/// `steps` evenly spaced values from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl AxisSpec {
    pub fn values(&self) -> Vec<f64> {
        match self.steps {
            0 => Vec::new(),
            1 => vec![self.min],
            n => (0..n)
                .map(|k| self.min + (self.max - self.min) * k as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

/// Signal and decoy intensity axes for the exhaustive search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityGrid {
    pub mu1: AxisSpec,
    pub mu2: AxisSpec,
}

impl Default for IntensityGrid {
    fn default() -> Self {
        IntensityGrid {
            mu1: AxisSpec {
                min: 0.05,
                max: 0.5,
                steps: 10,
            },
            mu2: AxisSpec {
                min: 0.005,
                max: 0.05,
                steps: 10,
            },
        }
    }
}

impl IntensityGrid {
    /// Cells with `mu1 > mu2 > 0`, ordered by `mu1` then `mu2`.
    pub fn feasible_cells(&self) -> Vec<(f64, f64)> {
        let mut mu1s = self.mu1.values();
        let mut mu2s = self.mu2.values();
        mu1s.sort_by(f64::total_cmp);
        mu2s.sort_by(f64::total_cmp);
        mu1s.iter()
            .flat_map(|&a| mu2s.iter().map(move |&b| (a, b)))
            .filter(|&(a, b)| a > b && b > 0.0)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

/// Everything a run needs. Defaults reproduce the reference experiment:
/// 40 % detectors, 1e-7 dark counts, 0.2 dB/km fiber, 1.5 % misalignment,
/// `f = 1.16`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub source: SourceSetup,
    pub system: SystemParams,
    pub grid: DistanceGrid,
    pub finite: FiniteKeyConfig,
    pub cutoff: usize,
    pub tail_tolerance: f64,
    /// Sources swept by `compare`.
    pub compare: Vec<SourceSetup>,
    pub intensity_grid: IntensityGrid,
    /// Distance at which `yields` tabulates.
    pub yields_distance: f64,
    pub execution: Execution,
    pub output: Option<std::path::PathBuf>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            source: SourceSetup::css(),
            system: SystemParams::default(),
            grid: DistanceGrid::default(),
            finite: FiniteKeyConfig::default(),
            cutoff: DEFAULT_CUTOFF,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
            compare: vec![
                SourceSetup::sps(),
                SourceSetup::css(),
                SourceSetup::nonideal_css(DEFAULT_ODD_WEIGHT),
                SourceSetup::wcs(),
            ],
            intensity_grid: IntensityGrid::default(),
            yields_distance: 0.0,
            execution: Execution::Parallel,
            output: None,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.system
            .validate()
            .map_err(|e| Error::Infeasible(e.to_string()))?;
        self.grid.validate()?;
        self.finite
            .validate()
            .map_err(|e| Error::Infeasible(e.to_string()))?;
        self.source.validate()?;
        for s in &self.compare {
            s.validate()?;
        }
        Ok(())
    }

    pub fn optics(&self) -> Result<OpticsCache> {
        OpticsCache::new(self.cutoff)
    }

    fn map_distances<T: Send>(&self, f: impl Fn(f64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
        let points = self.grid.points();
        match self.execution {
            Execution::Serial => points.into_iter().map(f).collect(),
            Execution::Parallel => points.into_par_iter().map(f).collect(),
        }
    }

    fn table_at(&self, cache: &OpticsCache, distance_km: f64) -> Result<YieldTable> {
        cache.yield_table(&self.system.detector_params(distance_km)?)
    }
}

/// One key-rate point per grid distance for the scenario's source.
pub fn run_sweep(scenario: &Scenario, cache: &OpticsCache) -> Result<Vec<KeyRatePoint>> {
    scenario.validate()?;
    let source = scenario.source.prepare(scenario.tail_tolerance)?;
    source.check_cutoff(cache.cutoff())?;
    scenario.map_distances(|d| {
        let table = scenario.table_at(cache, d)?;
        source.evaluate(&table, &scenario.system, &scenario.finite, d)
    })
}

/// Sweeps every comparison source over the grid. Rows are ordered by
/// source (in configuration order), then distance.
pub fn compare_sources(
    scenario: &Scenario,
    cache: &OpticsCache,
) -> Result<Vec<(String, KeyRatePoint)>> {
    scenario.validate()?;
    let sources = scenario
        .compare
        .iter()
        .map(|s| s.prepare(scenario.tail_tolerance))
        .collect::<Result<Vec<_>>>()?;
    for s in &sources {
        s.check_cutoff(cache.cutoff())?;
    }
    let per_distance = scenario.map_distances(|d| {
        let table = scenario.table_at(cache, d)?;
        sources
            .iter()
            .map(|s| s.evaluate(&table, &scenario.system, &scenario.finite, d))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut rows = Vec::with_capacity(sources.len() * per_distance.len());
    for (k, s) in sources.iter().enumerate() {
        for points in &per_distance {
            rows.push((s.setup.label().to_string(), points[k].clone()));
        }
    }
    Ok(rows)
}

/// Best intensity pair per distance by exhaustive search. Ties keep the
/// smaller signal intensity, then the smaller decoy intensity.
pub fn optimize_intensities(
    scenario: &Scenario,
    grid: &IntensityGrid,
    cache: &OpticsCache,
) -> Result<Vec<KeyRatePoint>> {
    scenario.validate()?;
    if scenario.source.estimator == Estimator::Direct {
        return Err(Error::Infeasible(
            "a single-photon source has no intensities to optimize".into(),
        ));
    }
    let cells = grid.feasible_cells();
    if cells.is_empty() {
        return Err(Error::Infeasible(
            "intensity grid has no cell with mu1 > mu2 > 0".into(),
        ));
    }
    let sources = cells
        .iter()
        .map(|&(mu1, mu2)| {
            let setup = SourceSetup {
                signal_mu: mu1,
                decoy_mu: mu2,
                ..scenario.source.clone()
            };
            let prepared = setup.prepare(scenario.tail_tolerance)?;
            prepared.check_cutoff(cache.cutoff())?;
            Ok(prepared)
        })
        .collect::<Result<Vec<_>>>()?;

    scenario.map_distances(|d| {
        let table = scenario.table_at(cache, d)?;
        let mut best: Option<KeyRatePoint> = None;
        for s in &sources {
            let point = s.evaluate(&table, &scenario.system, &scenario.finite, d)?;
            if best.as_ref().is_none_or(|b| point.rate > b.rate) {
                best = Some(point);
            }
        }
        Ok(best.expect("at least one feasible cell"))
    })
}

/// Largest grid distance with a positive rate.
pub fn max_positive_distance(points: &[KeyRatePoint]) -> Option<f64> {
    points
        .iter()
        .filter(|p| p.rate > 0.0)
        .map(|p| p.distance_km)
        .max_by(f64::total_cmp)
}

/// Largest distance on the grid `0, resolution, 2 resolution, ..., max_km`
/// with a positive rate, found by bisection. Assumes the positive-rate
/// region is an interval starting at zero.
pub fn positive_rate_cutoff(
    source: &PreparedSource,
    system: &SystemParams,
    finite: &FiniteKeyConfig,
    cache: &OpticsCache,
    resolution_km: f64,
    max_km: f64,
) -> Result<Option<f64>> {
    source.check_cutoff(cache.cutoff())?;
    let rate_at = |step: u64| -> Result<f64> {
        let d = step as f64 * resolution_km;
        let table = cache.yield_table(&system.detector_params(d)?)?;
        Ok(source.evaluate(&table, system, finite, d)?.rate)
    };
    if rate_at(0)? <= 0.0 {
        return Ok(None);
    }
    let (mut good, mut bad) = (0u64, (max_km / resolution_km).floor() as u64);
    if rate_at(bad)? > 0.0 {
        return Ok(Some(bad as f64 * resolution_km));
    }
    while bad - good > 1 {
        let mid = good + (bad - good) / 2;
        if rate_at(mid)? > 0.0 {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(Some(good as f64 * resolution_km))
}
