use std::f64::consts::PI;

use proptest::prelude::*;
use tamed_geometry::immersion::{builtin, BuiltinParams, ImmersionChart};
use tamed_geometry::oracle::{
    assemble, ball_component, barta_sandwich, corollary_check, from_sampled, interval, lambda1_dirichlet,
    laplacian_composed, unit_disc, unit_square, DiscreteDirichletProblem,
};
use tamed_geometry::properness::{hessian_bilinear, laplacian, Profile};
use tamed_geometry::sampled::SampledSubmanifold;
use tamed_geometry::spectral::radial_eigenvalue;
use tamed_geometry::Error;

const DISC: f64 = 5.783185962946784;

fn chart(name: &str) -> ImmersionChart {
    builtin(name, &BuiltinParams::default()).unwrap()
}

fn solve(mesh: &tamed_geometry::oracle::FemMesh) -> (DiscreteDirichletProblem, f64) {
    let p = DiscreteDirichletProblem::new(mesh, None).unwrap();
    let e = lambda1_dirichlet(&p).unwrap();
    (p, e.lambda)
}

#[test]
fn interval_and_square_closed_forms() {
    let (_, l) = solve(&interval(100).unwrap());
    assert!((l / (PI * PI) - 1.0).abs() < 1e-3);
    let (_, l) = solve(&unit_square(64).unwrap());
    assert!((l / (2.0 * PI * PI) - 1.0).abs() < 1e-2);
}

#[test]
fn second_order_convergence() {
    let err = |n: usize| (solve(&interval(n).unwrap()).1 - PI * PI).abs();
    let ratio = err(20) / err(40);
    assert!((ratio - 4.0).abs() < 0.1, "{ratio}");
    let err = |n: usize| (solve(&unit_square(n).unwrap()).1 - 2.0 * PI * PI).abs();
    let ratio = err(16) / err(32);
    assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
    let err = |n: usize| (solve(&unit_disc(n).unwrap()).1 - DISC).abs();
    let ratio = err(24) / err(48);
    assert!((2.5..6.0).contains(&ratio), "{ratio}");
}

#[test]
fn disc_agrees_with_shooting() {
    let (p, l) = solve(&unit_disc(100).unwrap());
    let shoot = radial_eigenvalue(2, 0.0, 1.0).unwrap().lambda;
    assert!((l - shoot).abs() < 0.01 * shoot);
    let e = lambda1_dirichlet(&p).unwrap();
    assert!(e.constant_sign);
    assert!(e.residual <= 1e-8);
    assert!((p.rayleigh(&e.vector) - e.lambda).abs() < 1e-10 * e.lambda);
}

#[test]
fn barta_on_the_disc() {
    let (p, l) = solve(&unit_disc(100).unwrap());
    let f = p.sample(|x| 1.0 - x[0] * x[0] - x[1] * x[1]);
    let (lo, hi) = barta_sandwich(&p, &f).unwrap();
    assert!((lo - 4.0).abs() < 1e-3, "{lo}");
    assert!(lo <= l && l <= hi);
    let e = lambda1_dirichlet(&p).unwrap();
    let (lo, hi) = barta_sandwich(&p, &e.vector).unwrap();
    assert!((lo - l).abs() < 1e-6 && (hi - l).abs() < 1e-6, "{lo} {l} {hi}");
    let bad = p.sample(|x| x[0]);
    assert!(matches!(barta_sandwich(&p, &bad), Err(Error::Precondition(_))));
}

#[test]
fn rayleigh_quotients_dominate_lambda() {
    let (p, l) = solve(&unit_disc(40).unwrap());
    for k in 1..5 {
        let f = p.sample(|x| (1.0 - x[0] * x[0] - x[1] * x[1]).powi(k) * (1.0 + 0.3 * x[0]));
        assert!(p.rayleigh(&f) >= l - 1e-10);
    }
}

#[test]
fn singular_stiffness_is_reported() {
    // the whole interval without boundary conditions has a constant null vector
    let mesh = interval(10).unwrap();
    let p = DiscreteDirichletProblem::new(&mesh, Some(&vec![true; mesh.len()])).unwrap();
    assert!(matches!(lambda1_dirichlet(&p), Err(Error::Decomposition { .. })));
    assert!(DiscreteDirichletProblem::new(&mesh, Some(&vec![false; mesh.len()])).is_err());
}

#[test]
fn composed_laplacian_matches_hessian_trace() {
    let flat = |t: f64| [t * t, 2.0 * t, 2.0];
    let hyp = |t: f64| [t.cosh(), t.sinh(), t.cosh()];
    let plane = chart("plane");
    for u in [[0.3, 0.4], [-2.0, 1.0]] {
        assert!((laplacian_composed(&plane, &u, flat).unwrap() - 4.0).abs() < 1e-12);
        assert!(laplacian_composed(&plane, &u, |_| [1.0, 0.0, 0.0]).unwrap().abs() < 1e-15);
    }
    assert!(laplacian_composed(&plane, &[0.0, 0.0], flat).is_err());
    for (name, profile) in [
        ("catenoid", flat as fn(f64) -> [f64; 3]),
        ("helicoid", flat),
        ("paraboloid", flat),
        ("geodesic_plane_hyperbolic", hyp),
    ] {
        let c = chart(name);
        let p = Profile::for_model(c.ambient());
        for u in [[0.4, 0.3], [-1.1, 2.0], [1.5, -0.7]] {
            let a = laplacian_composed(&c, &u, profile).unwrap();
            let b = laplacian(&c, &u).unwrap();
            assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()), "{name} {u:?}: {a} {b}");
            // same value through the profile of the properness module
            let via = laplacian_composed(&c, &u, |t| [p.h(t), p.h1(t), p.h2(t)]).unwrap();
            assert!((via - b).abs() < 1e-10 * (1.0 + b.abs()));
        }
    }
    // minimal surface: Delta rho^2 = 2m regardless of position
    let cat = chart("catenoid");
    for u in [[0.4, 0.3], [2.0, 5.0]] {
        assert!((laplacian_composed(&cat, &u, flat).unwrap() - 4.0).abs() < 1e-10);
    }
    let _ = hessian_bilinear;
}

#[test]
fn discrete_laplacian_converges_on_catenoid() {
    let c = chart("catenoid");
    let mut errs = Vec::new();
    for res in [[64, 32], [128, 64], [256, 128]] {
        let s = SampledSubmanifold::new(&c, &res).unwrap();
        let asm = assemble(&from_sampled(&s).unwrap()).unwrap();
        let f: Vec<f64> = s.rho_n().iter().map(|r| r * r).collect();
        let lap = asm.laplacian(&f);
        let mut worst: f64 = 0.0;
        for v in 0..s.len() {
            if s.on_boundary(v) {
                continue;
            }
            worst = worst.max((lap[v] - 4.0).abs() / 4.0);
        }
        errs.push(worst);
    }
    assert!(errs[2] < 0.02, "{errs:?}");
    assert!(errs[0] > errs[1] && errs[1] > errs[2]);
}

#[test]
fn domain_monotonicity() {
    let s = SampledSubmanifold::new(&chart("catenoid"), &[96, 48]).unwrap();
    let mesh = from_sampled(&s).unwrap();
    let mut prev = f64::INFINITY;
    for r in [3.0, 5.0, 8.0, 12.0] {
        let mask = ball_component(&s, r).unwrap();
        let l = lambda1_dirichlet(&DiscreteDirichletProblem::new(&mesh, Some(&mask)).unwrap()).unwrap().lambda;
        assert!(l < prev, "R={r}");
        prev = l;
    }
    assert!(ball_component(&s, 30.0).is_err());
}

#[test]
fn hyperbolic_disc_matches_radial_solver() {
    let c = builtin("geodesic_plane_hyperbolic", &BuiltinParams { extent: Some(5.5), ..Default::default() }).unwrap();
    let s = SampledSubmanifold::new(&c, &[192, 192]).unwrap();
    let rep = corollary_check(&s, 0.5, 1.0, 5.0).unwrap();
    let exact = radial_eigenvalue(2, -1.0, 5.0).unwrap().lambda;
    assert!((rep.lambda_omega - exact).abs() < 0.02 * exact, "{} vs {exact}", rep.lambda_omega);
    assert_eq!(rep.l, 6);
    assert!(rep.holds && rep.slack > 10.0);
}

#[test]
fn corollary_on_plane_and_catenoid() {
    let s = SampledSubmanifold::new(&chart("plane"), &[96, 96]).unwrap();
    let rep = corollary_check(&s, 0.5, 1.0, 4.0).unwrap();
    assert!(rep.holds && rep.slack > 0.0);
    assert!((rep.lambda_omega - DISC / 16.0).abs() < 0.03 * DISC / 16.0, "{}", rep.lambda_omega);
    let s = SampledSubmanifold::new(&chart("catenoid"), &[128, 64]).unwrap();
    let rep = corollary_check(&s, 0.5, 2.0, 10.0).unwrap();
    assert!(rep.holds && rep.slack > 0.0);
    assert!(corollary_check(&s, 0.5, 2.0, 1.5).is_err());
}

#[test]
fn matrix_market_dump() {
    let p = DiscreteDirichletProblem::new(&interval(4).unwrap(), None).unwrap();
    let (mut k, mut m) = (Vec::new(), Vec::new());
    p.write_matrix_market(&mut k, &mut m).unwrap();
    let k = String::from_utf8(k).unwrap();
    let mut lines = k.lines();
    assert_eq!(lines.next().unwrap(), "%%MatrixMarket matrix coordinate real symmetric");
    assert_eq!(lines.next().unwrap(), "3 3 5");
    assert!(String::from_utf8(m).unwrap().lines().nth(1).unwrap() == "3 3 3");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn barta_brackets_lambda(a in -0.5f64..0.5, b in -0.5f64..0.5, k in 1i32..4) {
        let p = DiscreteDirichletProblem::new(&unit_disc(24).unwrap(), None).unwrap();
        let l = lambda1_dirichlet(&p).unwrap().lambda;
        let f = p.sample(|x| (1.0 - x[0] * x[0] - x[1] * x[1]).powi(k) * (1.0 + a * x[0] + b * x[1]));
        let (lo, hi) = barta_sandwich(&p, &f).unwrap();
        prop_assert!(lo <= l + 1e-9 && l <= hi + 1e-9);
    }

    #[test]
    fn nested_squares(n in 8usize..20, cut in 1usize..4) {
        let mesh = unit_square(n).unwrap();
        let big = DiscreteDirichletProblem::new(&mesh, None).unwrap();
        let mask: Vec<bool> = (0..mesh.len())
            .map(|v| { let (i, j) = (v / (n + 1), v % (n + 1)); i > cut && j > 0 && i < n && j < n })
            .collect();
        let small = DiscreteDirichletProblem::new(&mesh, Some(&mask)).unwrap();
        prop_assert!(lambda1_dirichlet(&small).unwrap().lambda >= lambda1_dirichlet(&big).unwrap().lambda);
    }
}
