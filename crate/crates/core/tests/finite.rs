use mdiqkd::finite::{
    chernoff_escape_fraction, chernoff_interval, standard_interval, FiniteKeyConfig, Method,
    DEFAULT_CHERNOFF_EPSILON,
};
use mdiqkd::optics::OpticsCache;
use mdiqkd::rate::SystemParams;
use mdiqkd::scenario::SourceSetup;

#[test]
fn chernoff_intervals_contain_the_true_rate() {
    for (eps, seed) in [(DEFAULT_CHERNOFF_EPSILON, 7), (1e-2, 11), (1e-1, 13)] {
        let escaped = chernoff_escape_fraction(100_000, 0.01, eps, 10_000, seed).unwrap();
        assert!(escaped <= 10.0 * eps, "eps={eps}: escaped {escaped}");
    }
}

#[test]
fn widths_shrink_with_more_data() {
    for gain in [1e-9, 1e-6, 1e-3, 0.0] {
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for k in 8..=20 {
            let n = 10f64.powi(k);
            let w = (
                standard_interval(gain, n, 5.0).width(),
                chernoff_interval(gain * n, n, DEFAULT_CHERNOFF_EPSILON).width(),
            );
            assert!(w.0 <= prev.0 && w.1 <= prev.1, "gain={gain} N=1e{k}");
            prev = w;
        }
    }
}

#[test]
fn finite_rate_never_beats_asymptotic() {
    let cache = OpticsCache::new(15).unwrap();
    let system = SystemParams::default();
    let sources = [
        SourceSetup::sps(),
        SourceSetup::css(),
        SourceSetup::nonideal_css(0.7),
        SourceSetup::wcs(),
    ]
    .map(|s| s.prepare(1e-15).unwrap());
    for l in (0..=520).step_by(40) {
        let d = l as f64;
        let table = cache
            .yield_table(&system.detector_params(d).unwrap())
            .unwrap();
        for s in &sources {
            let asym = s
                .evaluate(&table, &system, &FiniteKeyConfig::asymptotic(), d)
                .unwrap();
            for method in [Method::Standard, Method::Chernoff] {
                for n in [1e10, 1e13, 1e16, 1e20] {
                    let fin = s
                        .evaluate(&table, &system, &FiniteKeyConfig::new(method, n), d)
                        .unwrap();
                    assert!(
                        fin.rate <= asym.rate,
                        "{} L={l} {method} N={n}",
                        s.setup.label()
                    );
                    assert!(fin.y11_lower <= asym.y11_lower);
                    assert!(fin.e11_x >= asym.e11_x);
                }
            }
        }
    }
}

#[test]
fn finite_data_costs_rate_at_150_km() {
    let cache = OpticsCache::new(15).unwrap();
    let system = SystemParams::default();
    let css = SourceSetup::css().prepare(1e-15).unwrap();
    let table = cache
        .yield_table(&system.detector_params(150.0).unwrap())
        .unwrap();
    let asym = css
        .evaluate(&table, &system, &FiniteKeyConfig::asymptotic(), 150.0)
        .unwrap();
    for method in [Method::Standard, Method::Chernoff] {
        let fin = css
            .evaluate(&table, &system, &FiniteKeyConfig::new(method, 1e13), 150.0)
            .unwrap();
        assert!(
            fin.rate > 0.0 && fin.rate < asym.rate,
            "{method}: {} vs {}",
            fin.rate,
            asym.rate
        );
    }
}
