use tamed_geometry::immersion::{builtin, BuiltinParams, ChartSpec, ImmersionChart, BUILTIN_NAMES};
use tamed_geometry::sampled::SampledSubmanifold;
use tamed_geometry::tamedness::{a_sequence, analyze, default_radii, find_r0, EstimateStatus};
use tamed_geometry::Error;

fn sample(name: &str, res: &[usize]) -> SampledSubmanifold {
    let chart = builtin(name, &BuiltinParams::default()).unwrap();
    SampledSubmanifold::new(&chart, res).unwrap()
}

/// `max s / (1 + s^2)` over `s >= r`: the catenoid ratio in terms of `s = sinh |u|`.
fn catenoid_a(r: f64) -> f64 {
    if r <= 1.0 {
        0.5
    } else {
        r / (1.0 + r * r)
    }
}

#[test]
fn plane_sequence_vanishes() {
    let s = sample("plane", &[64, 64]);
    let report = analyze(&s, &[0.5, 1.0, 2.0, 3.0], None).unwrap();
    assert!(report.a_i.iter().all(|a| *a == 0.0));
    assert_eq!(report.a_estimate, 0.0);
    assert!(report.tamed);
    let smallest = s.rho_m().iter().copied().filter(|r| *r > 0.0).fold(f64::INFINITY, f64::min);
    assert_eq!(find_r0(&s, &report, 0.1).unwrap(), smallest);
}

#[test]
fn catenoid_sequence_matches_closed_form() {
    let s = sample("catenoid", &[128, 64]);
    let radii = [1.0, 2.0, 5.0, 10.0, 20.0];
    let report = analyze(&s, &radii, None).unwrap();
    // oracle on the sampled rows: max of s / (1 + s^2) over rows with s = sinh|u| > r
    let rows: Vec<f64> = (0..s.len()).map(|v| s.param(v)[0].abs().sinh()).collect();
    for (a, r) in report.a_i.iter().zip(radii) {
        let sampled = rows.iter().filter(|x| **x > r).map(|x| x / (1.0 + x * x)).fold(0.0, f64::max);
        assert!((a - sampled).abs() <= 0.01 * sampled, "r {r}: {a} vs {sampled}");
        assert!(*a <= catenoid_a(r) + 1e-3);
    }
    // the grid spacing in s near s = 5 is about 0.3
    assert!((report.a_i[2] - 5.0 / 26.0).abs() < 0.015);
    assert!(report.a_i.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    assert!(report.a_estimate < 0.05);
    assert_eq!(report.status, EstimateStatus::Decreasing);
    assert!(report.tamed && !report.divergent);
    assert!(report.exhaustions_agree, "{} vs {}", report.a_estimate, report.box_estimate);
}

#[test]
fn catenoid_level_radius() {
    let s = sample("catenoid", &[128, 64]);
    let report = analyze(&s, &[1.0, 2.0, 5.0, 10.0, 20.0], None).unwrap();
    // s / (1 + s^2) = 0.45 at s = (1 + sqrt(0.19)) / 0.9
    let expected = (1.0 + 0.19f64.sqrt()) / 0.9;
    let r0 = find_r0(&s, &report, 0.45).unwrap();
    assert!((r0 - expected).abs() < 0.1, "r0 = {r0}");
    // c = 0.5 touches the maximum of the ratio, so any radius up to 1 works
    let r0 = find_r0(&s, &report, 0.5).unwrap();
    assert!(r0 <= 1.0 + 0.1, "r0 = {r0}");
    assert!(matches!(find_r0(&s, &report, 0.01), Err(Error::Level(_))));
    assert!(matches!(find_r0(&s, &report, 1.0), Err(Error::Level(_))));
}

#[test]
fn cylinder_and_helicoid_diverge() {
    for name in ["cylinder", "helicoid", "paraboloid"] {
        let s = sample(name, &[64, 64]);
        let report = analyze(&s, &default_radii(&s), None).unwrap();
        assert!(report.divergent, "{name}: {:?}", report.a_i);
        assert!(!report.tamed);
        assert!(report.c.is_none() && report.r0.is_none());
        assert!(matches!(find_r0(&s, &report, 0.5), Err(Error::NotTamed(_))));
        assert!(matches!(analyze(&s, &default_radii(&s), Some(0.5)), Err(Error::NotTamed(_))));
    }
}

#[test]
fn sequences_are_monotone_on_every_builtin() {
    for name in BUILTIN_NAMES {
        let s = sample(name, &[40, 40]);
        let base = default_radii(&s);
        for scale in [1.0, 0.87, 0.63] {
            let radii: Vec<f64> = base.iter().map(|r| r * scale).collect();
            let (a, _) = a_sequence(&s, &radii).unwrap();
            assert!(a.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{name}: {a:?}");
        }
    }
}

#[test]
fn exhaustions_agree_on_tamed_builtins() {
    for name in ["plane", "catenoid", "euclidean_graph", "geodesic_plane_hyperbolic"] {
        let s = sample(name, &[64, 64]);
        let report = analyze(&s, &default_radii(&s), None).unwrap();
        assert!(report.tamed, "{name}");
        assert!(report.exhaustions_agree, "{name}: {} vs {}", report.a_estimate, report.box_estimate);
    }
}

#[test]
fn totally_geodesic_plane_has_minimal_r0() {
    let s = sample("geodesic_plane_hyperbolic", &[48, 48]);
    let report = analyze(&s, &default_radii(&s), Some(0.3)).unwrap();
    assert!(report.a_estimate < 1e-12);
    let smallest = s.rho_m().iter().copied().filter(|r| *r > 0.0).fold(f64::INFINITY, f64::min);
    assert_eq!(report.r0, Some(smallest));
}

#[test]
fn hyperbolic_ratio_is_bounded() {
    // equidistant surface at distance d: alpha_sup = tanh d, ratio tanh(rho_M) tanh d
    let d: f64 = 0.5;
    let spec = ChartSpec {
        name: "equidistant".into(),
        vars: vec!["u".into(), "v".into()],
        domain: vec![[-3.0, 3.0], [-3.0, 3.0]],
        periodic: vec![],
        components: vec![
            format!("cosh(u)*cosh(v)*cosh({d:?})"),
            format!("sinh(u)*cosh(v)*cosh({d:?})"),
            format!("sinh(v)*cosh({d:?})"),
            format!("sinh({d:?})"),
        ],
        kappa: -1.0,
        base_param: None,
        anchor: None,
        pole: None,
    };
    let chart = ImmersionChart::from_spec(&spec).unwrap();
    let s = SampledSubmanifold::new(&chart, &[48, 48]).unwrap();
    let report = analyze(&s, &default_radii(&s), None).unwrap();
    let alpha_max = (0..s.len()).map(|v| s.forms(v).alpha_sup).fold(0.0, f64::max);
    assert!(report.a_i.iter().all(|a| *a <= alpha_max + 1e-12));
    assert!(report.tamed && report.a_estimate < d.tanh() + 1e-9);
}

#[test]
fn radius_beyond_the_sample_is_an_empty_complement() {
    let s = sample("plane", &[32, 32]);
    assert!(matches!(a_sequence(&s, &[1.0, 100.0]), Err(Error::EmptyComplement { radius }) if radius == 100.0));
    assert!(matches!(analyze(&s, &[1.0, 2.0], None), Err(Error::InvalidParams(_))));
}
