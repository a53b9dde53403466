use tamed_geometry::immersion::{builtin, BuiltinParams, BUILTIN_NAMES};
use tamed_geometry::sampled::SampledSubmanifold;
use tamed_geometry::Error;

fn sample(name: &str, res: &[usize]) -> SampledSubmanifold {
    let chart = builtin(name, &BuiltinParams::default()).unwrap();
    SampledSubmanifold::new(&chart, res).unwrap()
}

#[test]
fn plane_grid_has_identity_metric() {
    let s = sample("plane", &[64, 64]);
    assert_eq!(s.len(), 4096);
    for v in 0..s.len() {
        assert_eq!(s.forms(v).g, vec![1.0, 0.0, 0.0, 1.0]);
    }
    assert_eq!(s.rho_m()[s.base_vertex()], 0.0);
}

#[test]
fn plane_distance_to_three_four() {
    let s = sample("plane", &[129, 129]);
    let v = s.nearest_vertex(&[3.0, 4.0]);
    let exact = s.param(v)[0].hypot(s.param(v)[1]);
    let rel = (s.rho_m()[v] - exact) / exact;
    assert!((0.0..0.02).contains(&rel), "relative error {rel}");
    let s = sample("plane", &[128, 128]);
    let v = s.nearest_vertex(&[3.0, 4.0]);
    assert!((s.rho_m()[v] - 5.0).abs() < 0.02 * 5.0 + s.local_scale(v));
}

#[test]
fn catenoid_extrinsic_and_radial_distances() {
    let s = sample("catenoid", &[128, 64]);
    assert!((s.chart().rho_n(&[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
    assert!((s.anchor_offset() - 1.0).abs() < 1e-12);
    let v = s.nearest_vertex(&[0.0, 0.0]);
    assert!((s.rho_n()[v] - 1.0).abs() < 1e-2);
    for v in 0..s.len() {
        let u = s.param(v)[0];
        let exact = u.abs().sinh();
        if exact > 0.5 {
            let rel = (s.rho_m()[v] - exact).abs() / exact;
            assert!(rel < 0.03, "u = {u}: {} vs {exact}", s.rho_m()[v]);
        }
    }
    assert!((s.cover_radius() - 25.0).abs() < 0.03 * 25.0);
}

#[test]
fn cylinder_half_turn() {
    let s = sample("cylinder", &[64, 64]);
    let v = s.nearest_vertex(&[std::f64::consts::PI, 0.0]);
    assert!((s.rho_m()[v] - std::f64::consts::PI).abs() <= 2.0 * s.eps_mesh());
}

#[test]
fn extrinsic_is_below_intrinsic_on_every_builtin() {
    for name in BUILTIN_NAMES {
        let s = sample(name, &[48, 48]);
        let model = *s.chart().ambient();
        for v in 0..s.len() {
            assert!(
                s.rho_n()[v] <= s.rho_m()[v] + s.anchor_offset() + s.eps_mesh(),
                "{name} vertex {v}: {} > {}",
                s.rho_n()[v],
                s.rho_m()[v]
            );
            for &(w, len) in s.edges(v) {
                let d = model.distance_coords(s.point(v), s.point(w)).unwrap();
                assert!(len >= d - s.eps_mesh(), "{name} edge {v}-{w}");
            }
        }
    }
}

#[test]
fn refinement_does_not_increase_distances() {
    for name in ["plane", "catenoid", "cylinder"] {
        let chart = builtin(name, &BuiltinParams::default()).unwrap();
        let res = |n: usize, a: usize| if chart.periodic()[a] { 2 * n } else { 2 * n + 1 };
        let coarse = SampledSubmanifold::new(&chart, &[res(16, 0), res(16, 1)]).unwrap();
        let fine = SampledSubmanifold::new(&chart, &[res(32, 0), res(32, 1)]).unwrap();
        for v in 0..coarse.len() {
            let w = fine.nearest_vertex(coarse.param(v));
            let shared = coarse.param(v).iter().zip(fine.param(w)).all(|(a, b)| (a - b).abs() < 1e-12);
            assert!(shared, "{name}: grids are not nested");
            assert!(fine.rho_m()[w] <= coarse.rho_m()[v] + coarse.eps_mesh(), "{name} vertex {v}");
        }
    }
}

#[test]
fn exhaustion_is_nested_and_contains_the_base() {
    for name in ["plane", "catenoid", "paraboloid"] {
        let s = sample(name, &[40, 40]);
        let sets = s.exhaustion(&[1.0, 2.0, 3.0]).unwrap();
        for w in sets.windows(2) {
            assert!(w[0].iter().all(|v| w[1].contains(v)));
        }
        assert!(sets[0].contains(&s.base_vertex()), "{name}");
    }
    let s = sample("catenoid", &[128, 64]);
    let r = 1f64.sinh();
    let set = &s.exhaustion(&[r]).unwrap()[0];
    assert!(set.iter().all(|&v| s.rho_m()[v] <= r));
    let band = set.iter().map(|&v| s.param(v)[0].abs()).fold(0.0, f64::max);
    assert!((band - 1.0).abs() < 0.1, "band edge {band}");
    let max = s.rho_m().iter().copied().fold(0.0, f64::max);
    assert_eq!(s.exhaustion(&[max]).unwrap()[0].len(), s.len());
}

#[test]
fn exhaustion_and_sampling_errors() {
    let s = sample("plane", &[20, 20]);
    assert!(matches!(s.exhaustion(&[]), Err(Error::InvalidParams(_))));
    assert!(matches!(s.exhaustion(&[2.0, 1.0]), Err(Error::InvalidParams(_))));
    assert!(matches!(s.exhaustion(&[1e-3]), Err(Error::Precondition(_))));
    let chart = builtin("plane", &BuiltinParams::default()).unwrap();
    assert!(matches!(SampledSubmanifold::new(&chart, &[8, 64]), Err(Error::InvalidParams(_))));
}

#[test]
fn csv_dump_has_the_documented_columns() {
    let s = sample("catenoid", &[16, 16]);
    let mut buf = Vec::new();
    s.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "u1,u2,y1,y2,y3,rho_M,rho_N,alpha_sup,tamed_ratio");
    assert_eq!(lines.count(), 256);
}
