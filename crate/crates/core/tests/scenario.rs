use mdiqkd::finite::{FiniteKeyConfig, Method};
use mdiqkd::optics::OpticsCache;
use mdiqkd::rate::SystemParams;
use mdiqkd::scenario::{
    compare_sources, optimize_intensities, parse_config, run_sweep, write_rates_csv, AxisSpec,
    DistanceGrid, Execution, IntensityGrid, Scenario, SourceSetup,
};
use mdiqkd::Error;

fn csv(rows: &[(String, mdiqkd::rate::KeyRatePoint)]) -> Vec<u8> {
    let mut out = Vec::new();
    write_rates_csv(&mut out, rows).unwrap();
    out
}

fn axis(min: f64, max: f64, steps: usize) -> AxisSpec {
    AxisSpec { min, max, steps }
}

#[test]
fn identical_config_gives_identical_bytes() {
    let text = "source.kind = nonideal_css\nfinite.method = chernoff\nfinite.pulses = 1e13\n";
    let run = || {
        let s = parse_config(text).unwrap();
        let cache = s.optics().unwrap();
        csv(&compare_sources(&s, &cache).unwrap())
    };
    assert_eq!(run(), run());
}

#[test]
fn serial_and_parallel_agree() {
    let mut s = Scenario::default();
    let cache = s.optics().unwrap();
    s.execution = Execution::Parallel;
    let par = compare_sources(&s, &cache).unwrap();
    s.execution = Execution::Serial;
    let ser = compare_sources(&s, &cache).unwrap();
    assert_eq!(par, ser);
    assert_eq!(csv(&par), csv(&ser));
}

#[test]
fn perfect_single_photon_link_at_zero_distance() {
    let s = Scenario {
        source: SourceSetup::sps(),
        system: SystemParams {
            detector_efficiency: 1.0,
            dark_count: 0.0,
            misalignment: 0.0,
            ..SystemParams::default()
        },
        grid: DistanceGrid {
            start: 0.0,
            stop: 0.0,
            step: 1.0,
        },
        finite: FiniteKeyConfig::asymptotic(),
        ..Scenario::default()
    };
    let points = run_sweep(&s, &s.optics().unwrap()).unwrap();
    assert_eq!(points.len(), 1);
    assert_eq!(points[0].rate, 0.5);
}

#[test]
fn blind_detectors_give_zero_rates() {
    for dark_count in [0.0, 1e-7] {
        let mut s = Scenario::default();
        s.system.detector_efficiency = 0.0;
        s.system.dark_count = dark_count;
        let rows = compare_sources(&s, &s.optics().unwrap()).unwrap();
        assert_eq!(rows.len(), 4 * s.grid.points().len());
        assert!(rows.iter().all(|(_, p)| p.rate == 0.0));
    }
}

#[test]
fn unit_odd_weight_reproduces_css() {
    let mut s = Scenario {
        compare: vec![SourceSetup::css(), SourceSetup::nonideal_css(1.0)],
        ..Scenario::default()
    };
    for method in Method::ALL {
        s.finite.method = method;
        let rows = compare_sources(&s, &s.optics().unwrap()).unwrap();
        let n = s.grid.points().len();
        for k in 0..n {
            assert_eq!(rows[k].0, "css");
            assert_eq!(rows[n + k].0, "nonideal_css");
            assert_eq!(rows[k].1, rows[n + k].1);
        }
    }
}

#[test]
fn single_photons_dominate_weak_coherent_pulses() {
    let mut s = Scenario {
        compare: vec![SourceSetup::sps(), SourceSetup::wcs()],
        ..Scenario::default()
    };
    for method in Method::ALL {
        s.finite.method = method;
        let rows = compare_sources(&s, &s.optics().unwrap()).unwrap();
        let (sps, wcs) = rows.split_at(rows.len() / 2);
        for ((_, a), (_, b)) in sps.iter().zip(wcs) {
            if b.rate > 0.0 {
                assert!(a.rate >= b.rate, "{method} {} km", a.distance_km);
            }
        }
    }
}

#[test]
fn infeasible_intensities_are_rejected_before_compute() {
    let s = parse_config("source.decoy_mu = 0.2\n").unwrap();
    let cache = OpticsCache::new(2).unwrap();
    assert!(matches!(run_sweep(&s, &cache), Err(Error::Infeasible(_))));
}

#[test]
fn small_optics_cutoff_is_reported() {
    let s = parse_config("source.kind = wcs\noptics.cutoff = 3\n").unwrap();
    let cache = s.optics().unwrap();
    let e = run_sweep(&s, &cache).unwrap_err();
    assert!(matches!(e, Error::CutoffMismatch { table: 3, .. }), "{e:?}");
    assert_eq!(e.exit_code(), 3);
}

#[test]
fn optimizer_on_a_single_cell_returns_it() {
    let mut s = Scenario {
        grid: DistanceGrid {
            start: 100.0,
            stop: 200.0,
            step: 50.0,
        },
        ..Scenario::default()
    };
    let grid = IntensityGrid {
        mu1: axis(0.2, 0.2, 1),
        mu2: axis(0.03, 0.03, 1),
    };
    let cache = s.optics().unwrap();
    let best = optimize_intensities(&s, &grid, &cache).unwrap();
    s.source.signal_mu = 0.2;
    s.source.decoy_mu = 0.03;
    assert_eq!(best, run_sweep(&s, &cache).unwrap());
}

#[test]
fn optimizer_dominates_the_reference_intensities() {
    let s = Scenario {
        grid: DistanceGrid {
            start: 0.0,
            stop: 400.0,
            step: 100.0,
        },
        ..Scenario::default()
    };
    let grid = IntensityGrid {
        mu1: axis(0.05, 0.2, 4),
        mu2: axis(0.005, 0.02, 4),
    };
    assert!(grid.feasible_cells().contains(&(0.1, 0.01)));
    let cache = s.optics().unwrap();
    let best = optimize_intensities(&s, &grid, &cache).unwrap();
    let reference = run_sweep(&s, &cache).unwrap();
    for (b, r) in best.iter().zip(&reference) {
        assert!(b.rate >= r.rate);
        assert!(b.mu1 > b.mu2);
    }
}

#[test]
fn optimizer_breaks_ties_toward_small_intensities() {
    let mut s = Scenario {
        grid: DistanceGrid {
            start: 0.0,
            stop: 10.0,
            step: 10.0,
        },
        ..Scenario::default()
    };
    s.system.detector_efficiency = 0.0;
    let grid = IntensityGrid {
        mu1: axis(0.1, 0.3, 3),
        mu2: axis(0.01, 0.05, 3),
    };
    let best = optimize_intensities(&s, &grid, &s.optics().unwrap()).unwrap();
    for p in best {
        assert_eq!(p.rate, 0.0);
        assert_eq!((p.mu1, p.mu2), (0.1, 0.01));
    }
}

#[test]
fn optimizer_needs_a_feasible_cell() {
    let s = Scenario::default();
    let grid = IntensityGrid {
        mu1: axis(0.01, 0.02, 2),
        mu2: axis(0.05, 0.1, 2),
    };
    let e = optimize_intensities(&s, &grid, &s.optics().unwrap()).unwrap_err();
    assert!(matches!(e, Error::Infeasible(_)));
}

#[test]
fn coarse_optimum_at_200_km() {
    let mut s = Scenario {
        grid: DistanceGrid {
            start: 200.0,
            stop: 200.0,
            step: 1.0,
        },
        ..Scenario::default()
    };
    let grid = IntensityGrid::default();
    let cache = s.optics().unwrap();
    let best = optimize_intensities(&s, &grid, &cache).unwrap().remove(0);
    // exhaustive re-evaluation of every cell is the oracle
    let mut top = f64::NEG_INFINITY;
    for (mu1, mu2) in grid.feasible_cells() {
        s.source.signal_mu = mu1;
        s.source.decoy_mu = mu2;
        top = top.max(run_sweep(&s, &cache).unwrap()[0].rate);
    }
    assert_eq!(best.rate, top);
    assert!(best.rate > 0.0);
}
