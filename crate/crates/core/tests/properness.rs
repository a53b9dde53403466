use proptest::prelude::*;
use tamed_geometry::immersion::{builtin, BuiltinParams, ChartSpec, ImmersionChart};
use tamed_geometry::properness::{
    certify, compute_b, hess_lower_bound_check, hessian_bilinear, hessian_composed, laplacian, Branch, Envelope,
    Profile,
};
use tamed_geometry::sampled::SampledSubmanifold;
use tamed_geometry::tamedness::{analyze, default_radii};
use tamed_geometry::Error;

fn chart(name: &str) -> ImmersionChart {
    builtin(name, &BuiltinParams::default()).unwrap()
}

fn sample(name: &str, res: &[usize]) -> SampledSubmanifold {
    SampledSubmanifold::new(&chart(name), res).unwrap()
}

fn equidistant(d: f64) -> ImmersionChart {
    let spec = ChartSpec {
        name: "equidistant".into(),
        vars: vec!["u".into(), "v".into()],
        domain: vec![[-2.0, 2.0], [-2.0, 2.0]],
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
    ImmersionChart::from_spec(&spec).unwrap()
}

/// `Hess f (X, X)` from the smooth ambient form of `f`: `|y - y0|^2` with ambient
/// Hessian `2 I`, or `kappa <y0, y>_L` with Hessian `-kappa f g`.
fn smooth_hessian(chart: &ImmersionChart, u: &[f64], x: &[f64]) -> f64 {
    let model = chart.ambient();
    let jet = chart.eval_jet2(u).unwrap();
    let forms = chart.fundamental_forms(u).unwrap();
    let y = &jet.value;
    let y0 = chart.pole();
    let a = forms.alpha_xy(x, x);
    let norm2 = forms.metric(x, x);
    if model.is_flat() {
        let diff: Vec<f64> = y.iter().zip(y0).map(|(p, q)| p - q).collect();
        2.0 * norm2 + 2.0 * model.inner(&diff, &a)
    } else {
        let k = model.kappa();
        let f = k * model.inner(y0, y);
        let lorentz: Vec<f64> = y0.iter().map(|c| k * c).collect();
        let along = k * model.inner(&lorentz, y);
        let grad: Vec<f64> = lorentz.iter().zip(y).map(|(l, p)| l - along * p).collect();
        -k * f * norm2 + model.inner(&grad, &a)
    }
}

#[test]
fn plane_hessian_of_squared_distance_is_two() {
    let c = chart("plane");
    for u in [[1.0, 2.0], [-3.0, 0.5], [0.1, -0.1]] {
        assert!((hessian_composed(&c, &u, &[0.6, 0.8]).unwrap() - 2.0).abs() < 1e-12);
        assert!(hessian_bilinear(&c, &u, &[1.0, 0.0], &[0.0, 1.0]).unwrap().abs() < 1e-12);
    }
    assert_eq!(hessian_composed(&c, &[1.0, 2.0], &[0.0, 0.0]).unwrap(), 0.0);
    assert!(matches!(hessian_composed(&c, &[0.0, 0.0], &[1.0, 0.0]), Err(Error::Domain(_))));
}

#[test]
fn totally_geodesic_plane_hessian_is_cosh() {
    let c = chart("geodesic_plane_hyperbolic");
    assert!((c.rho_n(&[1.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
    let expected = 1f64.cosh();
    let d = std::f64::consts::FRAC_1_SQRT_2;
    for x in [[1.0, 0.0], [0.0, 1.0], [d, d]] {
        let h = hessian_composed(&c, &[1.0, 0.0], &x).unwrap();
        assert!((h - expected).abs() < 1e-10, "{x:?}: {h}");
    }
}

#[test]
fn composition_matches_smooth_ambient_form() {
    let cases: Vec<(ImmersionChart, Vec<[f64; 2]>)> = vec![
        (chart("catenoid"), vec![[0.3, 1.0], [-1.2, 2.5], [2.0, -0.7]]),
        (chart("paraboloid"), vec![[0.5, 0.5], [-1.0, 2.0]]),
        (chart("helicoid"), vec![[1.0, 3.0], [-2.0, -1.5]]),
        (equidistant(0.5), vec![[0.3, -0.2], [1.5, 1.0]]),
    ];
    for (c, points) in cases {
        for u in points {
            for x in [[1.0, 0.0], [0.3, -0.7], [0.0, 2.0]] {
                let got = hessian_composed(&c, &u, &x).unwrap();
                let want = smooth_hessian(&c, &u, &x);
                assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()), "{} {u:?} {x:?}: {got} vs {want}", c.name());
            }
        }
    }
}

#[test]
fn laplacian_matches_frame_trace_and_finite_differences() {
    for c in [chart("catenoid"), chart("euclidean_graph"), equidistant(0.4)] {
        let profile = Profile::for_model(c.ambient());
        for u in [[0.4, 0.7], [-0.6, 1.1]] {
            let lap = laplacian(&c, &u).unwrap();
            let forms = c.fundamental_forms(&u).unwrap();
            let m = forms.m;
            let trace: f64 = (0..m)
                .map(|a| {
                    let e: Vec<f64> = (0..m).map(|i| forms.frame[i * m + a]).collect();
                    smooth_hessian(&c, &u, &e)
                })
                .sum();
            assert!((lap - trace).abs() <= 1e-10 * (1.0 + trace.abs()), "{}: {lap} vs {trace}", c.name());

            // divergence form (1/sqrt G) d_i (sqrt G g^ij d_j f) by nested central differences
            let f = |p: &[f64]| profile.h(c.rho_n(p).unwrap());
            let flux = |p: [f64; 2], i: usize, h: f64| {
                let fm = c.fundamental_forms(&p).unwrap();
                let sqrt_g = (fm.g[0] * fm.g[3] - fm.g[1] * fm.g[2]).sqrt();
                let df: Vec<f64> = (0..2)
                    .map(|j| {
                        let (mut a, mut b) = (p, p);
                        a[j] += h;
                        b[j] -= h;
                        (f(&a) - f(&b)) / (2.0 * h)
                    })
                    .collect();
                sqrt_g * (0..2).map(|j| fm.g_inv[i * 2 + j] * df[j]).sum::<f64>()
            };
            let fd = |h: f64| {
                let sqrt_g = (forms.g[0] * forms.g[3] - forms.g[1] * forms.g[2]).sqrt();
                let div: f64 = (0..2)
                    .map(|i| {
                        let (mut a, mut b) = (u, u);
                        a[i] += h;
                        b[i] -= h;
                        (flux(a, i, h) - flux(b, i, h)) / (2.0 * h)
                    })
                    .sum();
                div / sqrt_g
            };
            let (e1, e2) = ((fd(0.02) - lap).abs(), (fd(0.01) - lap).abs());
            assert!(e2 < 1e-2 * (1.0 + lap.abs()), "{}: {} vs {lap}", c.name(), fd(0.01));
            assert!(e2 <= e1 * 0.5 + 1e-7, "{}: no refinement gain {e1} -> {e2}", c.name());
        }
    }
}

#[test]
fn hessian_bounds_outside_the_ball() {
    let s = sample("catenoid", &[128, 64]);
    assert!(hess_lower_bound_check(&s, 0.5, 1.0).unwrap().is_empty());
    let s = sample("plane", &[48, 48]);
    assert!(hess_lower_bound_check(&s, 0.1, 0.5).unwrap().is_empty());
    let s = sample("geodesic_plane_hyperbolic", &[48, 48]);
    assert!(hess_lower_bound_check(&s, 0.2, 0.3).unwrap().is_empty());
}

#[test]
fn b_on_closed_forms_and_refinement() {
    assert!((compute_b(&sample("plane", &[48, 48]), 2.0).unwrap() - 2.0).abs() < 1e-12);
    assert!((compute_b(&sample("geodesic_plane_hyperbolic", &[49, 49]), 1.0).unwrap() - 1.0).abs() < 1e-9);
    let coarse = compute_b(&sample("catenoid", &[128, 64]), 1.0).unwrap();
    let fine = compute_b(&sample("catenoid", &[256, 128]), 1.0).unwrap();
    assert!((coarse - fine).abs() <= 0.02 * coarse.abs().max(fine.abs()).max(1.0), "{coarse} vs {fine}");
    assert!(matches!(compute_b(&sample("catenoid", &[32, 32]), 1e-6), Err(Error::Precondition(_))));
}

#[test]
fn plane_growth_slack_and_literal_form() {
    let s = sample("plane", &[65, 65]);
    let (c, r0) = (0.3, 1.0);
    let b = compute_b(&s, r0).unwrap();
    let cert = tamed_geometry::properness::verify_growth(&s, c, r0, b).unwrap();
    assert_eq!(cert.branch, Branch::Flat);
    assert!(cert.violations.is_empty() && cert.hess_violations.is_empty());
    assert!(cert.proper && cert.witness_increasing);
    // the corrected envelope leaves slack c (rho - r0)^2 beyond r0
    let g = cert.envelope;
    for rho in [1.5, 2.0, 4.0] {
        let expected = c * (rho - r0) * (rho - r0);
        assert!((rho * rho - g.value(rho) - expected).abs() < 1e-12);
    }
    assert_eq!(cert.slack[s.base_vertex()], Some(0.0));
    // single-formula bound at rho = r0: r0^2 - (1 + c) r0^2
    let profile = Profile::for_model(s.chart().ambient());
    let literal = r0 * r0 - profile.literal_bound(c, r0, 2.0, r0);
    assert!((literal + c * r0 * r0).abs() < 1e-12);
    assert!(cert.literal_min_slack < 0.0);
    // slack c rho (rho - 2 r0) on the plane: negative up to 2 r0, pushed out by the
    // graph-distance overestimate near the crossing
    assert!((cert.literal_holds_beyond - 2.0 * r0).abs() < 0.5, "{}", cert.literal_holds_beyond);
}

#[test]
fn tamed_builtins_are_certified_proper() {
    for (name, res) in [
        ("plane", [48, 48]),
        ("catenoid", [128, 64]),
        ("euclidean_graph", [64, 64]),
        ("geodesic_plane_hyperbolic", [48, 48]),
    ] {
        let s = sample(name, &res);
        let report = analyze(&s, &default_radii(&s), None).unwrap();
        let cert = certify(&s, &report).unwrap();
        assert!(cert.proper, "{name}: {:?} {:?}", cert.violations.first(), cert.hess_violations.first());
        assert!(cert.envelope.is_unbounded());
        assert!(cert.min_slack >= -1e-6 * (1.0 + cert.envelope.f0.abs()) || cert.violations.is_empty());
        let expected = if name == "geodesic_plane_hyperbolic" { Branch::Hyperbolic } else { Branch::Flat };
        assert_eq!(cert.branch, expected);
    }
}

#[test]
fn untamed_input_is_refused() {
    let s = sample("cylinder", &[48, 48]);
    let report = analyze(&s, &default_radii(&s), None).unwrap();
    assert!(matches!(certify(&s, &report), Err(Error::NotTamed(_))));
}

proptest! {
    #[test]
    fn envelope_is_monotone_and_unbounded(
        f0 in 0.0..10.0f64, b in 1e-3..5.0f64, q in 1e-3..5.0f64, r0 in 0.0..10.0f64, rho in 0.0..100.0f64,
    ) {
        let g = Envelope { f0, s0: 0.0, b, q, r0 };
        prop_assert!(g.slope(rho) >= 0.0);
        prop_assert!(g.value(rho + 1.0) >= g.value(rho));
        prop_assert!(g.is_unbounded());
        prop_assert_eq!(g.increasing_beyond(), Some(0.0));
    }

    #[test]
    fn envelope_turning_point_is_exact(
        s0 in -5.0..5.0f64, b in -5.0..5.0f64, q in 1e-3..5.0f64, r0 in 0.0..10.0f64, extra in 0.0..50.0f64,
    ) {
        let g = Envelope { f0: 0.0, s0, b, q, r0 };
        let start = g.increasing_beyond().unwrap();
        prop_assert!(g.slope(start + extra) >= -1e-9);
        prop_assert!(g.value(start + extra + 1.0) >= g.value(start + extra) - 1e-9);
        // continuity of the envelope at r0
        prop_assert!((g.value(r0) - (s0 * r0 + 0.5 * b * r0 * r0)).abs() < 1e-9 * (1.0 + r0 * r0));
    }
}
