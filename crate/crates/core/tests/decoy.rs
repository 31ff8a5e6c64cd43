use mdiqkd::decoy::{estimate, DecoyInputs, Estimator, VacuumChannels};
use mdiqkd::optics::{OpticsCache, YieldTable};
use mdiqkd::rate::{single_photon_truth, SystemParams};
use mdiqkd::scenario::SourceSetup;
use mdiqkd::Basis;

fn inputs(setup: &SourceSetup, table: &YieldTable, ed: f64) -> DecoyInputs {
    setup
        .prepare(1e-15)
        .unwrap()
        .decoy_inputs(table, ed)
        .unwrap()
}

fn sources() -> [SourceSetup; 3] {
    [
        SourceSetup::css(),
        SourceSetup::nonideal_css(0.7),
        SourceSetup::wcs(),
    ]
}

#[test]
fn bounds_sandwich_the_truth() {
    let cache = OpticsCache::new(15).unwrap();
    let system = SystemParams::default();
    for l in (0..=400).step_by(50) {
        let table = cache
            .yield_table(&system.detector_params(l as f64).unwrap())
            .unwrap();
        for setup in sources() {
            let inp = inputs(&setup, &table, system.misalignment);
            for basis in Basis::BOTH {
                let truth = single_photon_truth(&table, system.misalignment, basis);
                let est = estimate(setup.estimator, &inp, basis).unwrap();
                assert!(
                    est.y11_lower <= truth.yield_11 + 1e-12,
                    "{} L={l}",
                    setup.label()
                );
                assert!(
                    est.e11_upper >= truth.error_rate.unwrap() - 1e-12,
                    "{} L={l}",
                    setup.label()
                );
                assert!(
                    est.y11_lower > 0.5 * truth.yield_11,
                    "{} L={l} bound too loose",
                    setup.label()
                );
            }
        }
    }
}

#[test]
fn higher_photon_terms_enter_with_nonpositive_sign() {
    let mus: [f64; 7] = [0.005, 0.01, 0.05, 0.1, 0.2, 0.4, 0.8];
    for &mu1 in &mus {
        for &mu2 in mus.iter().filter(|&&m| m < mu1) {
            for n in (1..=15).step_by(2) {
                for m in (1..=15).step_by(2) {
                    if n + m < 4 {
                        continue;
                    }
                    let k = n + m;
                    let v = mu1.powi(4) * mu2.powi(k) - mu2.powi(4) * mu1.powi(k);
                    if k == 4 {
                        assert_eq!(v, 0.0);
                    } else {
                        assert!(v < 0.0, "mu1={mu1} mu2={mu2} n={n} m={m}: {v}");
                    }
                }
            }
        }
    }
}

#[test]
fn one_decoy_bound_tightens_as_decoy_vanishes() {
    let cache = OpticsCache::new(15).unwrap();
    let system = SystemParams::default();
    let table = cache
        .yield_table(&system.detector_params(100.0).unwrap())
        .unwrap();
    let truth = single_photon_truth(&table, system.misalignment, Basis::Z).yield_11;
    let mut gaps = Vec::new();
    for mu2 in [0.04, 0.02, 0.01, 0.005, 0.0025] {
        let setup = SourceSetup {
            decoy_mu: mu2,
            ..SourceSetup::css()
        };
        let est = estimate(
            Estimator::OneDecoyCss,
            &inputs(&setup, &table, system.misalignment),
            Basis::Z,
        )
        .unwrap();
        gaps.push(truth - est.y11_lower);
    }
    for w in gaps.windows(2) {
        assert!(w[1] >= 0.0 && w[1] < w[0], "{gaps:?}");
    }
    // second order in mu2: halving mu2 should cut the gap by roughly four
    let ratio = gaps[3] / gaps[4];
    assert!((3.0..5.0).contains(&ratio), "{gaps:?}");
}

#[test]
fn exchanging_alice_and_bob_preserves_bounds() {
    let cache = OpticsCache::new(15).unwrap();
    let system = SystemParams::default();
    for l in [0.0, 150.0, 300.0] {
        let table = cache
            .yield_table(&system.detector_params(l).unwrap())
            .unwrap();
        for setup in sources() {
            let inp = inputs(&setup, &table, system.misalignment);
            let mut swapped = inp.clone();
            if let Some(v) = &inp.vacuum {
                swapped.vacuum = Some(VacuumChannels {
                    signal_vacuum: v.vacuum_signal,
                    vacuum_signal: v.signal_vacuum,
                    decoy_vacuum: v.vacuum_decoy,
                    vacuum_decoy: v.decoy_vacuum,
                    vacuum_vacuum: v.vacuum_vacuum,
                });
            }
            for basis in Basis::BOTH {
                let a = estimate(setup.estimator, &inp, basis).unwrap();
                let b = estimate(setup.estimator, &swapped, basis).unwrap();
                let rel = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs());
                assert!(rel(a.y11_lower, b.y11_lower), "{a:?} {b:?}");
                assert!(rel(a.e11_upper, b.e11_upper), "{a:?} {b:?}");
            }
        }
    }
}
