//! Linear-optics Bell-state measurement on Fock-state inputs.
//!
//! Alice's pulse enters port 1 and Bob's pulse port 2 of a balanced beam
//! splitter (`a1 -> (c1 + c2)/sqrt2`, `a2 -> (c1 - c2)/sqrt2`). Each output
//! arm is split by a polarizing beam splitter onto an H and a V threshold
//! detector, giving four detector modes ordered `(1H, 1V, 2H, 2V)`.
//!
//! Amplitudes of identical output configurations are summed coherently, in
//! exact integer arithmetic, before any probability is taken.

use std::fmt;
use std::str::FromStr;

use std::sync::OnceLock;

use rayon::prelude::*;
use statrs::function::factorial::factorial;

use crate::error::{Error, Result};

/// Largest per-side photon number a yield table may hold.
pub const MAX_CUTOFF: usize = 30;

/// Default per-side photon cutoff for yield tables.
pub const DEFAULT_CUTOFF: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    H,
    V,
    /// `(H + V)/sqrt2`
    Plus,
    /// `(H - V)/sqrt2`
    Minus,
}

impl Polarization {
    pub const ALL: [Polarization; 4] = [
        Polarization::H,
        Polarization::V,
        Polarization::Plus,
        Polarization::Minus,
    ];
}

/// Photon numbers at the four detector modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockConfig {
    pub n_1h: u32,
    pub n_1v: u32,
    pub n_2h: u32,
    pub n_2v: u32,
}

impl FockConfig {
    pub const fn new(n_1h: u32, n_1v: u32, n_2h: u32, n_2v: u32) -> Self {
        FockConfig {
            n_1h,
            n_1v,
            n_2h,
            n_2v,
        }
    }

    pub fn total(&self) -> u32 {
        self.n_1h + self.n_1v + self.n_2h + self.n_2v
    }

    fn counts(&self) -> [usize; 4] {
        [
            self.n_1h as usize,
            self.n_1v as usize,
            self.n_2h as usize,
            self.n_2v as usize,
        ]
    }
}

impl fmt::Display for FockConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{},{},{})",
            self.n_1h, self.n_1v, self.n_2h, self.n_2v
        )
    }
}

/// Probability of every detector-mode configuration for one input pair.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputDistribution {
    entries: Vec<(FockConfig, f64)>,
    total_photons: usize,
}

impl OutputDistribution {
    /// Entries sorted by configuration.
    pub fn entries(&self) -> &[(FockConfig, f64)] {
        &self.entries
    }

    pub fn total_photons(&self) -> usize {
        self.total_photons
    }

    /// Probability of `config`; zero for configurations never reached.
    pub fn probability(&self, config: FockConfig) -> f64 {
        self.entries
            .binary_search_by(|(c, _)| c.cmp(&config))
            .map_or(0.0, |idx| self.entries[idx].1)
    }

    pub fn total_probability(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }
}

/// Largest total photon number `propagate` accepts.
pub const MAX_TOTAL_PHOTONS: usize = 2 * MAX_CUTOFF;

const TABLE_DIM: usize = MAX_TOTAL_PHOTONS + 1;

/// Exact integer tables: binomials and the two-mode beam-splitter kernel
/// `K(a, b, p)`, the coefficient of `c1^p c2^(a+b-p)` in
/// `(c1 + c2)^a (c1 - c2)^b`.
struct IntegerTables {
    binomial: Vec<i128>,
    kernel: Vec<i128>,
}

impl IntegerTables {
    fn get() -> &'static IntegerTables {
        static TABLES: OnceLock<IntegerTables> = OnceLock::new();
        TABLES.get_or_init(IntegerTables::build)
    }

    fn build() -> Self {
        let n = TABLE_DIM;
        let mut binomial = vec![0i128; n * n];
        for row in 0..n {
            binomial[row * n] = 1;
            for k in 1..=row {
                binomial[row * n + k] = binomial[(row - 1) * n + k - 1]
                    + if k < row {
                        binomial[(row - 1) * n + k]
                    } else {
                        0
                    };
            }
        }
        // kernel[(a * n + b) * (2n) + p]; only a + b <= n - 1 is needed
        let mut kernel = vec![0i128; n * n * 2 * n];
        let kidx = |a: usize, b: usize, p: usize| (a * n + b) * 2 * n + p;
        for b in 0..n {
            for p in 0..=b {
                let c = binomial[b * n + p];
                kernel[kidx(0, b, p)] = if (b - p) % 2 == 1 { -c } else { c };
            }
        }
        for a in 1..n {
            for b in 0..n - a {
                for p in 0..=a + b {
                    let up = if p > 0 {
                        kernel[kidx(a - 1, b, p - 1)]
                    } else {
                        0
                    };
                    let keep = if p < a + b {
                        kernel[kidx(a - 1, b, p)]
                    } else {
                        0
                    };
                    kernel[kidx(a, b, p)] = up + keep;
                }
            }
        }
        IntegerTables { binomial, kernel }
    }

    #[inline]
    fn binomial(&self, n: usize, k: usize) -> i128 {
        self.binomial[n * TABLE_DIM + k]
    }

    #[inline]
    fn kernel(&self, a: usize, b: usize, p: usize) -> i128 {
        self.kernel[(a * TABLE_DIM + b) * 2 * TABLE_DIM + p]
    }
}

/// Integer `(h, v)` polarization weights; diagonal states carry an extra
/// `1/sqrt2` handled in the prefactor.
fn integer_components(pol: Polarization) -> (i128, i128, bool) {
    match pol {
        Polarization::H => (1, 0, false),
        Polarization::V => (0, 1, false),
        Polarization::Plus => (1, 1, true),
        Polarization::Minus => (1, -1, true),
    }
}

/// `base^exp` with `0^0 = 1`.
#[inline]
fn ipow(base: i128, exp: usize) -> i128 {
    match base {
        0 if exp == 0 => 1,
        0 => 0,
        1 => 1,
        _ => {
            if exp.is_multiple_of(2) {
                1
            } else {
                -1
            }
        }
    }
}

/// Output distribution for `i` photons polarized `pol_a` from Alice and `j`
/// photons polarized `pol_b` from Bob.
///
/// Alice's `r` H-photons and Bob's `s` H-photons interfere on the H modes,
/// the rest on the V modes. For each output configuration the amplitude is
///
/// ```text
/// sqrt(prod n_m! / (i! j!)) / sqrt(2^e) * sum_r C(i,r) hA^r vA^(i-r)
///     * C(j,s) hB^s vB^(j-s) * K(r, s, n_1H) * K(i-r, j-s, n_1V)
/// ```
///
/// with `s = n_1H + n_2H - r`. The sum is carried out exactly in integers.
///
/// # Panics
///
/// If `i + j` exceeds [`MAX_TOTAL_PHOTONS`].
pub fn propagate(
    i: usize,
    pol_a: Polarization,
    j: usize,
    pol_b: Polarization,
) -> OutputDistribution {
    let total = i + j;
    assert!(
        total <= MAX_TOTAL_PHOTONS,
        "{total} photons exceed the supported {MAX_TOTAL_PHOTONS}"
    );
    let tables = IntegerTables::get();
    let (ha, va, diag_a) = integer_components(pol_a);
    let (hb, vb, diag_b) = integer_components(pol_b);

    // admissible numbers of H photons from each side
    let alice_h = match (ha, va) {
        (_, 0) => i..=i,
        (0, _) => 0..=0,
        _ => 0..=i,
    };
    let bob_h = match (hb, vb) {
        (_, 0) => j..=j,
        (0, _) => 0..=0,
        _ => 0..=j,
    };

    let exponent = total + if diag_a { i } else { 0 } + if diag_b { j } else { 0 };
    let norm = 2f64.powi(exponent as i32) * factorial(i as u64) * factorial(j as u64);

    let mut entries = Vec::new();
    let mut partial: Vec<(usize, i128)> = Vec::with_capacity(i + 1);
    for n_h in alice_h.start() + bob_h.start()..=alice_h.end() + bob_h.end() {
        let n_v = total - n_h;
        let r_lo = (*alice_h.start()).max(n_h.saturating_sub(*bob_h.end()));
        let r_hi = (*alice_h.end()).min(n_h - bob_h.start());
        let weights: Vec<(usize, i128)> = (r_lo..=r_hi)
            .map(|r| {
                let s = n_h - r;
                let w = tables.binomial(i, r)
                    * ipow(ha, r)
                    * ipow(va, i - r)
                    * tables.binomial(j, s)
                    * ipow(hb, s)
                    * ipow(vb, j - s);
                (r, w)
            })
            .filter(|&(_, w)| w != 0)
            .collect();
        for n_1h in 0..=n_h {
            partial.clear();
            partial.extend(
                weights
                    .iter()
                    .map(|&(r, w)| (r, w * tables.kernel(r, n_h - r, n_1h)))
                    .filter(|&(_, w)| w != 0),
            );
            if partial.is_empty() {
                continue;
            }
            for n_1v in 0..=n_v {
                let sum: i128 = partial
                    .iter()
                    .map(|&(r, w)| w * tables.kernel(i - r, j - (n_h - r), n_1v))
                    .sum();
                if sum == 0 {
                    continue;
                }
                let (n_2h, n_2v) = (n_h - n_1h, n_v - n_1v);
                let occupation = factorial(n_1h as u64)
                    * factorial(n_1v as u64)
                    * factorial(n_2h as u64)
                    * factorial(n_2v as u64);
                let amp = sum as f64;
                entries.push((
                    FockConfig::new(n_1h as u32, n_1v as u32, n_2h as u32, n_2v as u32),
                    amp * amp * (occupation / norm),
                ));
            }
        }
    }
    entries.sort_by_key(|e| e.0);
    OutputDistribution {
        entries,
        total_photons: total,
    }
}

/// How the per-`k` terms of the closed-form HH amplitude are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Summation {
    /// Sum amplitudes, then square.
    Coherent,
    /// Square each term separately. Breaks normalization and two-photon
    /// interference; kept only as a diagnostic.
    LiteralIncoherent,
}

fn binomial(n: usize, k: usize) -> i128 {
    let k = k.min(n - k);
    (0..k).fold(1i128, |acc, m| acc * (n - m) as i128 / (m + 1) as i128)
}

/// `sqrt(p! (n-p)! / (2^n i! j!))`, the common factor of every term of the
/// closed-form HH amplitude.
fn hh_prefactor(i: usize, j: usize, p: usize) -> f64 {
    let n = i + j;
    let ratio = factorial((p) as u64) / factorial(i as u64) * factorial((n - p) as u64)
        / factorial(j as u64);
    (ratio / 2f64.powi(n as i32)).sqrt()
}

/// Integer part of the closed-form amplitude of `|p,0,i+j-p,0>` for
/// H-polarized inputs: `sum_k (-1)^(j-k) C(i, p-k) C(j, k)`, together with
/// the sum of squares of its terms.
fn hh_binomial_sums(i: usize, j: usize, p: usize) -> (i128, i128) {
    let k_lo = p.saturating_sub(i);
    let k_hi = j.min(p);
    (k_lo..=k_hi).fold((0, 0), |(sum, squares), k| {
        let term = binomial(i, p - k) * binomial(j, k);
        let signed = if (j - k) % 2 == 1 { -term } else { term };
        (sum + signed, squares + term * term)
    })
}

/// Amplitudes `c_p` of `|p>_1H |i+j-p>_2H` for H-polarized inputs, from the
/// closed-form binomial double sum.
pub fn hh_amplitudes(i: usize, j: usize) -> Vec<f64> {
    (0..=i + j)
        .map(|p| hh_binomial_sums(i, j, p).0 as f64 * hh_prefactor(i, j, p))
        .collect()
}

/// Probabilities of `|p>_1H |i+j-p>_2H` for H-polarized inputs.
pub fn hh_output_probabilities(i: usize, j: usize, summation: Summation) -> Vec<f64> {
    match summation {
        Summation::Coherent => hh_amplitudes(i, j).into_iter().map(|c| c * c).collect(),
        Summation::LiteralIncoherent => (0..=i + j)
            .map(|p| hh_binomial_sums(i, j, p).1 as f64 * hh_prefactor(i, j, p).powi(2))
            .collect(),
    }
}

/// Threshold-detector model shared by all four detectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    /// Overall efficiency: detector efficiency times channel transmittance.
    pub efficiency: f64,
    /// Dark-count probability per gate.
    pub dark_count: f64,
}

impl DetectorParams {
    pub fn new(efficiency: f64, dark_count: f64) -> Result<Self> {
        let params = DetectorParams {
            efficiency,
            dark_count,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::domain(format!(
                "efficiency must lie in [0, 1], got {}",
                self.efficiency
            )));
        }
        if !(0.0..1.0).contains(&self.dark_count) {
            return Err(Error::domain(format!(
                "dark count must lie in [0, 1), got {}",
                self.dark_count
            )));
        }
        Ok(())
    }
}

/// `1 - (1 - p_d)(1 - eta)^n`, evaluated without cancellation.
pub fn click_probability(photon_count: usize, params: &DetectorParams) -> f64 {
    if photon_count == 0 || params.efficiency == 0.0 {
        params.dark_count
    } else if params.efficiency == 1.0 {
        1.0
    } else {
        -((-params.dark_count).ln_1p() + photon_count as f64 * (-params.efficiency).ln_1p())
            .exp_m1()
    }
}

/// The two Bell states a linear-optics analyzer can identify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BellOutcome {
    /// H and V click in the same arm, the other arm silent.
    PsiPlus,
    /// H in one arm and V in the other, the remaining two silent.
    PsiMinus,
}

/// Click and no-click probabilities indexed by photon number.
struct ClickTable {
    click: Vec<f64>,
    silent: Vec<f64>,
}

impl ClickTable {
    fn new(params: &DetectorParams, max_photons: usize) -> Self {
        ClickTable {
            click: (0..=max_photons)
                .map(|n| click_probability(n, params))
                .collect(),
            silent: (0..=max_photons).map(|n| silent(n, params)).collect(),
        }
    }

    #[inline]
    fn pattern(&self, counts: [usize; 4], outcome: BellOutcome) -> f64 {
        let d = |m: usize| self.click[counts[m]];
        let s = |m: usize| self.silent[counts[m]];
        match outcome {
            BellOutcome::PsiPlus => d(0) * d(1) * s(2) * s(3) + d(2) * d(3) * s(0) * s(1),
            BellOutcome::PsiMinus => d(0) * d(3) * s(1) * s(2) + d(1) * d(2) * s(0) * s(3),
        }
    }
}

fn silent(photon_count: usize, params: &DetectorParams) -> f64 {
    if photon_count == 0 || params.efficiency == 0.0 {
        1.0 - params.dark_count
    } else if params.efficiency == 1.0 {
        0.0
    } else {
        ((-params.dark_count).ln_1p() + photon_count as f64 * (-params.efficiency).ln_1p()).exp()
    }
}

/// Probability that `dist` produces the click pattern announced as `outcome`.
pub fn bell_yield(dist: &OutputDistribution, outcome: BellOutcome, params: &DetectorParams) -> f64 {
    let table = ClickTable::new(params, dist.total_photons);
    dist.entries
        .iter()
        .map(|(config, p)| p * table.pattern(config.counts(), outcome))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub const BOTH: [Basis; 2] = [Basis::Z, Basis::X];

    pub fn as_str(self) -> &'static str {
        match self {
            Basis::Z => "Z",
            Basis::X => "X",
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Basis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "Z" | "z" => Ok(Basis::Z),
            "X" | "x" => Ok(Basis::X),
            other => Err(format!("unknown basis `{other}`")),
        }
    }
}

/// Whether an announced event matches the encoded bit relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Correct,
    Error,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Correct => "correct",
            Role::Error => "error",
        }
    }
}

/// Input polarization pair representing each (basis, role). The remaining
/// pairs and the psi-minus outcome contribute identical yields by symmetry,
/// so the four-pair, two-outcome, quarter-weighted sum collapses to one
/// psi-plus yield.
fn representative_inputs(basis: Basis, role: Role) -> (Polarization, Polarization) {
    use Polarization::*;
    match (basis, role) {
        (Basis::Z, Role::Correct) => (H, V),
        (Basis::Z, Role::Error) => (H, H),
        (Basis::X, Role::Correct) => (Plus, Plus),
        (Basis::X, Role::Error) => (Plus, Minus),
    }
}

const CHANNELS: [(Basis, Role); 4] = [
    (Basis::Z, Role::Correct),
    (Basis::Z, Role::Error),
    (Basis::X, Role::Correct),
    (Basis::X, Role::Error),
];

fn channel_slot(basis: Basis, role: Role) -> usize {
    match (basis, role) {
        (Basis::Z, Role::Correct) => 0,
        (Basis::Z, Role::Error) => 1,
        (Basis::X, Role::Correct) => 2,
        (Basis::X, Role::Error) => 3,
    }
}

/// Correct and error yields for every photon-number pair up to a cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct YieldTable {
    cutoff: usize,
    params: DetectorParams,
    // [slot][i * (cutoff + 1) + j]
    yields: [Vec<f64>; 4],
}

impl YieldTable {
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn params(&self) -> DetectorParams {
        self.params
    }

    /// Yield of `role` events in `basis` for an `(i, j)` photon pair.
    pub fn get(&self, basis: Basis, role: Role, i: usize, j: usize) -> f64 {
        assert!(
            i <= self.cutoff && j <= self.cutoff,
            "({i}, {j}) beyond cutoff"
        );
        self.yields[channel_slot(basis, role)][i * (self.cutoff + 1) + j]
    }

    pub fn correct(&self, basis: Basis, i: usize, j: usize) -> f64 {
        self.get(basis, Role::Correct, i, j)
    }

    pub fn error(&self, basis: Basis, i: usize, j: usize) -> f64 {
        self.get(basis, Role::Error, i, j)
    }

    /// `Y_ij = Y_C,ij + Y_E,ij`
    pub fn total(&self, basis: Basis, i: usize, j: usize) -> f64 {
        self.correct(basis, i, j) + self.error(basis, i, j)
    }

    /// Rows `(i, j, basis, role, yield)` in a fixed order.
    pub fn rows(&self) -> impl Iterator<Item = (usize, usize, Basis, Role, f64)> + '_ {
        let n = self.cutoff + 1;
        (0..n).flat_map(move |i| {
            (0..n).flat_map(move |j| {
                CHANNELS
                    .iter()
                    .map(move |&(basis, role)| (i, j, basis, role, self.get(basis, role, i, j)))
            })
        })
    }
}

/// Output distributions for the four representative input pairs at every
/// `(i, j)` up to a cutoff. They do not depend on the detectors, so one
/// cache serves every distance in a sweep.
#[derive(Debug, Clone)]
pub struct OpticsCache {
    cutoff: usize,
    // [slot][i * (cutoff + 1) + j]
    outputs: [Vec<CompactOutput>; 4],
}

/// Mode counts and probability of each output configuration.
type CompactOutput = Vec<([u8; 4], f64)>;

impl OpticsCache {
    pub fn new(cutoff: usize) -> Result<Self> {
        if cutoff > MAX_CUTOFF {
            return Err(Error::CutoffTooLarge {
                requested: cutoff,
                max: MAX_CUTOFF,
            });
        }
        let n = cutoff + 1;
        let build = |slot: usize| -> Vec<Vec<([u8; 4], f64)>> {
            let (basis, role) = CHANNELS[slot];
            let (pa, pb) = representative_inputs(basis, role);
            (0..n * n)
                .into_par_iter()
                .map(|cell| {
                    let (i, j) = (cell / n, cell % n);
                    propagate(i, pa, j, pb)
                        .entries
                        .into_iter()
                        .map(|(c, p)| (c.counts().map(|x| x as u8), p))
                        .collect()
                })
                .collect()
        };
        Ok(OpticsCache {
            cutoff,
            outputs: [build(0), build(1), build(2), build(3)],
        })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Evaluates all yields for one detector configuration.
    pub fn yield_table(&self, params: &DetectorParams) -> Result<YieldTable> {
        params.validate()?;
        let clicks = ClickTable::new(params, 2 * self.cutoff);
        let eval = |slot: usize| -> Vec<f64> {
            self.outputs[slot]
                .iter()
                .map(|entries| {
                    entries
                        .iter()
                        .map(|(counts, p)| {
                            p * clicks.pattern(counts.map(usize::from), BellOutcome::PsiPlus)
                        })
                        .sum()
                })
                .collect()
        };
        Ok(YieldTable {
            cutoff: self.cutoff,
            params: *params,
            yields: [eval(0), eval(1), eval(2), eval(3)],
        })
    }
}

/// Builds a yield table from scratch. Prefer [`OpticsCache`] when many
/// detector configurations share one cutoff.
pub fn yield_tables(params: &DetectorParams, cutoff: usize) -> Result<YieldTable> {
    if cutoff < 1 {
        return Err(Error::domain("yield table cutoff must be at least 1"));
    }
    OpticsCache::new(cutoff)?.yield_table(params)
}
